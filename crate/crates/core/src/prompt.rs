//! Prompt synthesis and reply parsing.
//!
//! The seven template strings live in `resources/prompt_templates.json`
//! (data, not code, so they can be audited byte-for-byte) with `{target}`,
//! `{objects}`, and the four caption slots as placeholders. Reply parsing
//! is token-based: "notebook" does not match the label "book", and
//! multi-word labels match as contiguous token runs.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::{CaptionSet, DetectionSet};

/// The four cardinal direction choices offered by the caption prompt.
pub const DIRECTIONS: [&str; 4] = ["Front", "Right", "Behind", "Left"];

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    Robot,
    I,
    ThirdPerson,
    ObjectsFirst,
    GetClosest,
    OneWordFirst,
    Blip,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 7] = [
        PromptVariant::Robot,
        PromptVariant::I,
        PromptVariant::ThirdPerson,
        PromptVariant::ObjectsFirst,
        PromptVariant::GetClosest,
        PromptVariant::OneWordFirst,
        PromptVariant::Blip,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            PromptVariant::Robot => "robot",
            PromptVariant::I => "i",
            PromptVariant::ThirdPerson => "third_person",
            PromptVariant::ObjectsFirst => "objects_first",
            PromptVariant::GetClosest => "get_closest",
            PromptVariant::OneWordFirst => "one_word_first",
            PromptVariant::Blip => "blip",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|v| v.key() == key)
    }

    /// The caption variant offers directions; all others offer objects.
    pub fn choice_kind(&self) -> ChoiceKind {
        match self {
            PromptVariant::Blip => ChoiceKind::Direction,
            _ => ChoiceKind::Object,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceKind {
    Object,
    Direction,
}

/// Context substituted into a template.
pub enum PromptContext<'a> {
    Objects(&'a DetectionSet),
    Captions(&'a CaptionSet),
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("object prompt variant {0:?} needs a non-empty detection set")]
    EmptyDetectionSet(PromptVariant),
    #[error("variant {0:?} requires {1} context")]
    WrongContext(PromptVariant, &'static str),
    #[error("PSR is undefined with zero prompts")]
    NoPrompts,
}

fn templates() -> &'static BTreeMap<String, String> {
    static TEMPLATES: OnceLock<BTreeMap<String, String>> = OnceLock::new();
    TEMPLATES.get_or_init(|| {
        serde_json::from_str(include_str!("../resources/prompt_templates.json"))
            .expect("prompt template resource parses")
    })
}

/// The raw template string for a variant, placeholders intact.
pub fn template_text(variant: PromptVariant) -> &'static str {
    templates()
        .get(variant.key())
        .expect("every variant has a template")
}

/// Render a template: the target phrase and either the comma-separated
/// object list or the four captions are substituted verbatim.
pub fn synthesize(
    variant: PromptVariant,
    target: &str,
    context: PromptContext<'_>,
) -> Result<String, PromptError> {
    let template = template_text(variant);
    match (variant, context) {
        (PromptVariant::Blip, PromptContext::Captions(c)) => Ok(template
            .replace("{target}", target)
            .replace("{front}", &c.front)
            .replace("{right}", &c.right)
            .replace("{behind}", &c.behind)
            .replace("{left}", &c.left)),
        (PromptVariant::Blip, PromptContext::Objects(_)) => {
            Err(PromptError::WrongContext(variant, "caption"))
        }
        (_, PromptContext::Captions(_)) => Err(PromptError::WrongContext(variant, "detection")),
        (_, PromptContext::Objects(det)) => {
            if det.is_empty() {
                return Err(PromptError::EmptyDetectionSet(variant));
            }
            Ok(template
                .replace("{target}", target)
                .replace("{objects}", &det.labels.join(", ")))
        }
    }
}

/// A parsed, validated reply.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmDecision {
    pub outcome: Outcome,
    pub choice_kind: ChoiceKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Valid(String),
    Invalid(String),
}

impl LlmDecision {
    pub fn valid_choice(&self) -> Option<&str> {
        match &self.outcome {
            Outcome::Valid(c) => Some(c),
            Outcome::Invalid(_) => None,
        }
    }
}

fn tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

fn find_spans(haystack: &[String], needle: &[String]) -> Vec<(usize, usize)> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return Vec::new();
    }
    (0..=haystack.len() - needle.len())
        .filter(|&i| &haystack[i..i + needle.len()] == needle)
        .map(|i| (i, i + needle.len()))
        .collect()
}

/// Match a raw reply against the offered choice set.
///
/// A reply matches when, after case folding and punctuation trimming, it
/// equals one member exactly, or contains exactly one member as a
/// contiguous token run. Multi-token members subsume their sub-spans, so
/// "spray bottle" does not also count as "bottle". Anything else —
/// including refusals like "no" or "nothing" and replies naming two
/// members — is Invalid.
pub fn parse_response(raw: &str, valid_set: &[String], kind: ChoiceKind) -> LlmDecision {
    let raw_tokens = tokens(raw);
    let member_tokens: Vec<Vec<String>> = valid_set.iter().map(|m| tokens(m)).collect();

    // Exact match after normalization.
    if !raw_tokens.is_empty() {
        if let Some(i) = member_tokens.iter().position(|m| *m == raw_tokens) {
            return LlmDecision { outcome: Outcome::Valid(valid_set[i].clone()), choice_kind: kind };
        }
    }

    // Containment: collect all (member, span) occurrences, drop spans fully
    // covered by a longer match, then demand a single surviving member.
    let mut matches: Vec<(usize, (usize, usize))> = Vec::new();
    for (i, m) in member_tokens.iter().enumerate() {
        for span in find_spans(&raw_tokens, m) {
            matches.push((i, span));
        }
    }
    let covered_by_longer = |s: usize, e: usize| {
        matches
            .iter()
            .any(|&(_, (s2, e2))| s2 <= s && e <= e2 && (e2 - s2) > (e - s))
    };
    let mut distinct: Vec<usize> = matches
        .iter()
        .filter(|&&(_, (s, e))| !covered_by_longer(s, e))
        .map(|&(i, _)| i)
        .collect();
    distinct.sort_unstable();
    distinct.dedup();

    if distinct.len() == 1 {
        return LlmDecision {
            outcome: Outcome::Valid(valid_set[distinct[0]].clone()),
            choice_kind: kind,
        };
    }
    LlmDecision { outcome: Outcome::Invalid(raw.to_string()), choice_kind: kind }
}

/// Prompt-success counters pooled across an episode or a suite.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsrCounter {
    pub p_suc: u64,
    pub p_total: u64,
}

impl PsrCounter {
    pub fn record(&mut self, valid: bool) {
        self.p_total += 1;
        if valid {
            self.p_suc += 1;
        }
    }

    pub fn merge(&mut self, other: &PsrCounter) {
        self.p_suc += other.p_suc;
        self.p_total += other.p_total;
    }
}

/// Prompt success rate as a percentage.
pub fn psr(counter: &PsrCounter) -> Result<f64, PromptError> {
    if counter.p_total == 0 {
        return Err(PromptError::NoPrompts);
    }
    Ok(100.0 * counter.p_suc as f64 / counter.p_total as f64)
}
