//! Plain-text rule tables and prompt templates.
//!
//! Bundled defaults are compiled in; [`Rules::load_dir`] lets any of the
//! files be replaced at run time without rebuilding.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::text;
use crate::toolbox::{Registry, ToolKind};

const KEYWORDS: &str = include_str!("../data/keywords.txt");
const LIMITATIONS: &str = include_str!("../data/limitations.txt");
const UNSUPPORTED: &str = include_str!("../data/unsupported.txt");
const PLANNING_PROMPT: &str = include_str!("../data/planning_prompt.txt");
const REFLECTION_PROMPT: &str = include_str!("../data/reflection_prompt.txt");
const KEY_TERM_PROMPT: &str = include_str!("../data/key_term_prompt.txt");
const FRAME_SELECTION_PROMPT: &str = include_str!("../data/frame_selection_prompt.txt");
const ANALYSIS_PROMPT: &str = include_str!("../data/analysis_prompt.txt");

#[derive(Debug, thiserror::Error)]
pub enum RulesError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file} line {line}: {message}")]
    Syntax { file: String, line: usize, message: String },
}

/// A match term with its tokenized form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phrase {
    pub text: String,
    pub tokens: Vec<String>,
}

impl Phrase {
    pub fn new(text: &str) -> Self {
        Self {
            text: text.trim().to_lowercase(),
            tokens: text::tokenize(text),
        }
    }

    pub fn occurs_in(&self, tokens: &[String]) -> bool {
        text::contains_phrase(tokens, &self.tokens)
    }
}

fn push_unique(list: &mut Vec<Phrase>, p: Phrase) {
    if !p.tokens.is_empty() && !list.iter().any(|q| q.tokens == p.tokens) {
        list.push(p);
    }
}

fn parse_tool_table(file: &str, body: &str) -> Result<BTreeMap<ToolKind, Vec<Phrase>>, RulesError> {
    let mut table: BTreeMap<ToolKind, Vec<Phrase>> = BTreeMap::new();
    for (i, raw) in body.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |message: String| RulesError::Syntax {
            file: file.to_string(),
            line: i + 1,
            message,
        };
        let (name, terms) = line
            .split_once(':')
            .ok_or_else(|| syntax("expected '<tool name>: terms'".into()))?;
        let tool = ToolKind::from_name(name).ok_or_else(|| syntax(format!("unknown tool '{}'", name.trim())))?;
        let entry = table.entry(tool).or_default();
        for term in terms.split(',') {
            push_unique(entry, Phrase::new(term));
        }
    }
    Ok(table)
}

fn parse_term_list(body: &str) -> Vec<Phrase> {
    let mut out = Vec::new();
    for line in body.lines().map(str::trim).filter(|l| !l.starts_with('#')) {
        for term in line.split(',') {
            push_unique(&mut out, Phrase::new(term));
        }
    }
    out
}

/// Prompt templates with `{placeholder}` slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub planning: String,
    pub reflection: String,
    pub key_term: String,
    pub frame_selection: String,
    pub analysis: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            planning: PLANNING_PROMPT.to_string(),
            reflection: REFLECTION_PROMPT.to_string(),
            key_term: KEY_TERM_PROMPT.to_string(),
            frame_selection: FRAME_SELECTION_PROMPT.to_string(),
            analysis: ANALYSIS_PROMPT.to_string(),
        }
    }
}

/// Fills `{name}` slots in one pass; substituted text is never rescanned.
pub fn fill_template(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let replaced = after.find('}').and_then(|close| {
            let key = &after[..close];
            values.iter().find(|(k, _)| *k == key).map(|(_, v)| (close, *v))
        });
        match replaced {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Keyword, limitation, and unsupported-concept tables plus prompt templates.
#[derive(Debug, Clone)]
pub struct Rules {
    keywords: BTreeMap<ToolKind, Vec<Phrase>>,
    limitations: BTreeMap<ToolKind, Vec<Phrase>>,
    unsupported: Vec<Phrase>,
    pub prompts: PromptTemplates,
}

impl Rules {
    pub fn bundled(registry: &Registry) -> Self {
        Self::from_sources(registry, KEYWORDS, LIMITATIONS, UNSUPPORTED, PromptTemplates::default())
            .expect("bundled rule tables parse")
    }

    fn from_sources(
        registry: &Registry,
        keywords: &str,
        limitations: &str,
        unsupported: &str,
        prompts: PromptTemplates,
    ) -> Result<Self, RulesError> {
        let mut kw = parse_tool_table("keywords.txt", keywords)?;
        for d in registry {
            let entry = kw.entry(d.kind()).or_default();
            for label in &d.labels {
                push_unique(entry, Phrase::new(label));
            }
        }
        Ok(Self {
            keywords: kw,
            limitations: parse_tool_table("limitations.txt", limitations)?,
            unsupported: parse_term_list(unsupported),
            prompts,
        })
    }

    /// Loads rules from `dir`, falling back to the bundled copy of any file that is absent.
    pub fn load_dir(dir: impl AsRef<Path>, registry: &Registry) -> Result<Self, RulesError> {
        let dir = dir.as_ref();
        let read = |name: &str, fallback: &str| -> Result<String, RulesError> {
            let path = dir.join(name);
            match std::fs::read_to_string(&path) {
                Ok(s) => Ok(s),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(fallback.to_string()),
                Err(source) => Err(RulesError::Io { path, source }),
            }
        };
        let prompts = PromptTemplates {
            planning: read("planning_prompt.txt", PLANNING_PROMPT)?,
            reflection: read("reflection_prompt.txt", REFLECTION_PROMPT)?,
            key_term: read("key_term_prompt.txt", KEY_TERM_PROMPT)?,
            frame_selection: read("frame_selection_prompt.txt", FRAME_SELECTION_PROMPT)?,
            analysis: read("analysis_prompt.txt", ANALYSIS_PROMPT)?,
        };
        Self::from_sources(
            registry,
            &read("keywords.txt", KEYWORDS)?,
            &read("limitations.txt", LIMITATIONS)?,
            &read("unsupported.txt", UNSUPPORTED)?,
            prompts,
        )
    }

    pub fn keywords(&self, tool: ToolKind) -> &[Phrase] {
        self.keywords.get(&tool).map_or(&[], Vec::as_slice)
    }

    /// Keywords of `tool` that occur in the request tokens.
    pub fn keyword_hits<'a>(&'a self, tool: ToolKind, tokens: &[String]) -> Vec<&'a str> {
        self.keywords(tool)
            .iter()
            .filter(|p| p.occurs_in(tokens))
            .map(|p| p.text.as_str())
            .collect()
    }

    pub fn keyword_score(&self, tool: ToolKind, tokens: &[String]) -> usize {
        self.keyword_hits(tool, tokens).len()
    }

    pub fn limitation_hits<'a>(&'a self, tool: ToolKind, tokens: &[String]) -> Vec<&'a str> {
        self.limitations
            .get(&tool)
            .map_or(&[][..], Vec::as_slice)
            .iter()
            .filter(|p| p.occurs_in(tokens))
            .map(|p| p.text.as_str())
            .collect()
    }

    pub fn unsupported_hits(&self, tokens: &[String]) -> Vec<&str> {
        self.unsupported
            .iter()
            .filter(|p| p.occurs_in(tokens))
            .map(|p| p.text.as_str())
            .collect()
    }
}
