//! Yes/No judgement of whether a plan can answer a request.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::llm_backend::{Backend, LlmError};
use crate::planning::TaskPlan;
use crate::rules::{fill_template, Rules};
use crate::text;
use crate::toolbox::Registry;

const FORMAT_REMINDER: &str =
    "\n\nYour previous reply did not start with \"Yes\" or \"No\". Start your reply with exactly one of those words.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Yes,
    No,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "YES",
            Verdict::No => "NO",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReflectionResult {
    pub verdict: Verdict,
    pub explanation: String,
    pub plan: TaskPlan,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReflectError {
    #[error("reply does not start with yes or no: {0:?}")]
    Unparseable(String),
    #[error(transparent)]
    Backend(#[from] LlmError),
}

/// Reflection prompts always show the full toolbox.
pub fn render_reflection_prompt(request: &str, plan: &TaskPlan, registry: &Registry, rules: &Rules) -> String {
    let toolbox = registry.render(&BTreeSet::new());
    fill_template(
        &rules.prompts.reflection,
        &[("request", request), ("plan", &plan.raw), ("toolbox", &toolbox)],
    )
}

/// Reads the verdict from the first alphabetic word; the rest is the explanation.
pub fn parse_verdict(text: &str) -> Result<(Verdict, String), ReflectError> {
    let start = text
        .find(|c: char| c.is_alphabetic())
        .ok_or_else(|| ReflectError::Unparseable(text.to_string()))?;
    let rest = &text[start..];
    let end = rest.find(|c: char| !c.is_alphabetic()).unwrap_or(rest.len());
    let verdict = match rest[..end].to_lowercase().as_str() {
        "yes" => Verdict::Yes,
        "no" => Verdict::No,
        _ => return Err(ReflectError::Unparseable(text.to_string())),
    };
    let explanation = rest[end..]
        .trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ',' | '.' | ':' | ';' | '-' | '!' | '"' | '\''))
        .trim_end();
    let explanation = if explanation.is_empty() {
        rest[..end].to_string()
    } else {
        explanation.to_string()
    };
    Ok((verdict, explanation))
}

fn quoted(terms: &[&str]) -> String {
    terms.iter().map(|t| format!("\"{t}\"")).collect::<Vec<_>>().join(", ")
}

/// Rule-based reflection: YES iff the plan's tool has a keyword hit, the request
/// names none of the tool's limitations, and it asks for nothing outside the toolbox.
pub fn reflect_deterministic(request: &str, plan: &TaskPlan, rules: &Rules) -> ReflectionResult {
    let tokens = text::tokenize(request);
    let tool = plan.tool;
    let unsupported = rules.unsupported_hits(&tokens);
    let limits = rules.limitation_hits(tool, &tokens);
    let hits = rules.keyword_hits(tool, &tokens);
    let (verdict, reason) = if !unsupported.is_empty() {
        (
            Verdict::No,
            format!(
                "the request asks about {}, which no tool in the toolbox can determine",
                quoted(&unsupported)
            ),
        )
    } else if !limits.is_empty() {
        (
            Verdict::No,
            format!("{tool} cannot handle {} in the request", quoted(&limits)),
        )
    } else if hits.is_empty() {
        (
            Verdict::No,
            format!("{tool} does not provide the information the request asks for"),
        )
    } else {
        (
            Verdict::Yes,
            format!("{tool} provides what the request asks about ({})", quoted(&hits)),
        )
    };
    let explanation = match verdict {
        Verdict::Yes => format!("the plan \"{}\" answers the request: {reason}.", plan.raw),
        Verdict::No => format!("the plan \"{}\" does not fully answer the request: {reason}.", plan.raw),
    };
    ReflectionResult {
        verdict,
        explanation,
        plan: plan.clone(),
    }
}

/// Text form of a deterministic result, as a model would reply.
pub fn render_verdict(result: &ReflectionResult) -> String {
    let word = match result.verdict {
        Verdict::Yes => "Yes",
        Verdict::No => "No",
    };
    format!("{word}, {}", result.explanation)
}

pub fn reflect(
    request: &str,
    plan: &TaskPlan,
    registry: &Registry,
    rules: &Rules,
    backend: &Backend,
) -> Result<ReflectionResult, ReflectError> {
    if backend.is_deterministic() {
        return Ok(reflect_deterministic(request, plan, rules));
    }
    let prompt = render_reflection_prompt(request, plan, registry, rules);
    let reply = backend.complete(&prompt)?;
    let (verdict, explanation) = match parse_verdict(&reply) {
        Ok(v) => v,
        Err(_) => parse_verdict(&backend.complete(&format!("{prompt}{FORMAT_REMINDER}"))?)?,
    };
    Ok(ReflectionResult {
        verdict,
        explanation,
        plan: plan.clone(),
    })
}
