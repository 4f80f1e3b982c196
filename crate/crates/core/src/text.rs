//! Request tokenization and plural-tolerant phrase matching.
//!
//! Tokens are lowercase alphanumeric runs. A phrase matches a token
//! sequence when every phrase word equals one of the surface variants of
//! the corresponding token (`"buses"` -> `"bus"`, `"motorcyclists"` ->
//! `"motorcycle"`, `"people"` -> `"person"`).

const IRREGULAR: &[(&str, &str)] = &[
    ("people", "person"),
    ("persons", "person"),
    ("children", "child"),
    ("men", "man"),
    ("women", "woman"),
];

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Candidate base forms of a lowercase token, the token itself first.
pub fn variants(token: &str) -> Vec<String> {
    let mut out = vec![token.to_string()];
    let mut push = |s: String| {
        if !s.is_empty() && !out.contains(&s) {
            out.push(s);
        }
    };
    for (from, to) in IRREGULAR {
        if token == *from {
            push(to.to_string());
        }
    }
    if let Some(stem) = token.strip_suffix("ists").or_else(|| token.strip_suffix("ist")) {
        // agent nouns: motorcyclist -> motorcycle
        if stem.len() >= 4 {
            push(format!("{stem}e"));
        }
    }
    if let Some(stem) = token.strip_suffix("ies") {
        if stem.len() >= 2 {
            push(format!("{stem}y"));
        }
    }
    if let Some(stem) = token.strip_suffix("es") {
        if stem.len() >= 2 {
            push(stem.to_string());
        }
    }
    if token.len() > 2 && token.ends_with('s') && !token.ends_with("ss") {
        push(token[..token.len() - 1].to_string());
    }
    out
}

/// True when `phrase` (already tokenized) occurs at `pos` in `tokens`.
pub fn matches_at(tokens: &[String], pos: usize, phrase: &[String]) -> bool {
    if phrase.is_empty() || pos + phrase.len() > tokens.len() {
        return false;
    }
    phrase
        .iter()
        .zip(&tokens[pos..])
        .all(|(want, have)| want == have || variants(have).iter().any(|v| v == want))
}

pub fn contains_phrase(tokens: &[String], phrase: &[String]) -> bool {
    (0..tokens.len()).any(|pos| matches_at(tokens, pos, phrase))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenizes_on_punctuation() {
        assert_eq!(
            toks("Is there a traffic jam in the video?"),
            ["is", "there", "a", "traffic", "jam", "in", "the", "video"]
        );
        assert_eq!(toks("  "), Vec::<String>::new());
    }

    #[test]
    fn plural_and_agent_forms_fold() {
        assert!(variants("buses").contains(&"bus".to_string()));
        assert!(variants("licenses").contains(&"license".to_string()));
        assert!(variants("motorcyclists").contains(&"motorcycle".to_string()));
        assert!(variants("bicyclist").contains(&"bicycle".to_string()));
        assert!(variants("people").contains(&"person".to_string()));
        assert!(variants("lorries").contains(&"lorry".to_string()));
        assert_eq!(variants("glass"), ["glass"]);
    }

    #[test]
    fn phrase_matching_handles_multiword_plurals() {
        let t = toks("Are there traffic lights near the stop signs?");
        assert!(contains_phrase(&t, &toks("traffic light")));
        assert!(contains_phrase(&t, &toks("stop sign")));
        assert!(!contains_phrase(&t, &toks("traffic sign")));
    }
}
