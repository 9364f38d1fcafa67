//! Constitution → directive profile.
//!
//! Rules are visited in priority order. A rule that carries structured
//! directives contributes them verbatim. Otherwise its guidance text is split
//! into sentences and scanned token by token with the table below; a keyword
//! is *negated* when one of `not never no don't dont avoid without rather
//! instead than nor` occurs among the four tokens before it.
//!
//! | trigger (affirmative unless noted)                               | directive                 |
//! |------------------------------------------------------------------|---------------------------|
//! | `deposit*` with `immediately` / `first` / `right away` in sentence | `deposit_first`           |
//! | `hoard*`, or `delay*` followed within 2 tokens by `deposit*`     | `hoard`                   |
//! | `gather*` / `collect*`                                           | `gather_needed`           |
//! | `deficit`, or `toward(s)` preceded within 3 tokens by `move*`/`head*` | `seek_largest_deficit` |
//! | `give*` / `transfer*`; `share*`/`sharing` + `resource*` within 2 | `give_surplus`            |
//! | `broadcast*` / `communicat*` / `announce*`; `share*` + `information`/`info`/`accurate`/`location*` within 2 | `broadcast_threshold(n)`, `n` from the first `N+` token in the sentence, else 1 |
//! | `attack` `steal` `sabotage` (+ inflections) or `harm`: affirmative | `aggression(always)`    |
//! | same, negated                                                    | `aggression(never)`       |
//! | same, negated, with `unless` … `attacked` later in the sentence; or `retaliat*` | `aggression(retaliate)` |
//! | `rest` / `wait` / `idle`                                         | `rest_bias`               |
//!
//! Only the first directive of each kind is kept. A constitution yielding
//! nothing gets `[rest_bias]` and a warning.

use std::collections::BTreeSet;

use super::directive::{AggressionMode, Directive, DirectiveKind};
use crate::constitution::Constitution;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedProfile {
    /// Priority order; at most one directive per kind.
    pub directives: Vec<Directive>,
}

impl ScriptedProfile {
    pub fn new(directives: Vec<Directive>) -> Self {
        let mut seen = BTreeSet::new();
        let directives: Vec<Directive> = directives.into_iter().filter(|d| seen.insert(d.kind())).collect();
        Self { directives }
    }

    pub fn has(&self, kind: DirectiveKind) -> bool {
        self.directives.iter().any(|d| d.kind() == kind)
    }

    pub fn aggression(&self) -> Option<AggressionMode> {
        self.directives.iter().find_map(|d| match d {
            Directive::Aggression(m) => Some(*m),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileDerivation {
    pub profile: ScriptedProfile,
    pub warnings: Vec<String>,
}

pub fn derive_profile(c: &Constitution) -> ProfileDerivation {
    let mut found = Vec::new();
    for rule in c.ordered_rules() {
        match &rule.directives {
            Some(ds) => found.extend(ds.iter().copied()),
            None => found.extend(extract(&rule.guidance)),
        }
    }
    let mut warnings = Vec::new();
    if found.is_empty() {
        warnings.push(format!("constitution {:?}: no directive could be extracted; using [rest_bias]", c.label));
        found.push(Directive::RestBias);
    }
    ProfileDerivation { profile: ScriptedProfile::new(found), warnings }
}

const NEGATORS: [&str; 11] =
    ["not", "never", "no", "don't", "dont", "avoid", "without", "rather", "instead", "than", "nor"];

fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        let boundary =
            matches!(b, b'.' | b'!' | b'?' | b';') && bytes.get(i + 1).is_none_or(|c| c.is_ascii_whitespace());
        if boundary {
            out.push(&text[start..=i]);
            start = i + 1;
        }
    }
    if start < text.len() && !text[start..].trim().is_empty() {
        out.push(&text[start..]);
    }
    out
}

fn tokens(sentence: &str) -> Vec<String> {
    sentence
        .to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '+' || c == '\''))
        .map(|t| t.trim_matches('\'').to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

fn negated(tokens: &[String], i: usize) -> bool {
    tokens[i.saturating_sub(4)..i].iter().any(|t| NEGATORS.contains(&t.as_str()))
}

fn within(tokens: &[String], i: usize, ahead: usize) -> impl Iterator<Item = &String> {
    tokens.iter().skip(i + 1).take(ahead)
}

fn is_aggressive(t: &str) -> bool {
    matches!(
        t,
        "attack"
            | "attacks"
            | "attacking"
            | "steal"
            | "steals"
            | "stealing"
            | "sabotage"
            | "sabotaging"
            | "harm"
            | "harming"
    )
}

fn threshold(tokens: &[String]) -> u32 {
    tokens.iter().find_map(|t| t.strip_suffix('+').and_then(|n| n.parse::<u32>().ok())).filter(|&n| n >= 1).unwrap_or(1)
}

/// Directives found in free text, in order of appearance.
pub fn extract(guidance: &str) -> Vec<Directive> {
    let mut out = Vec::new();
    for sentence in sentences(guidance) {
        let toks = tokens(sentence);
        let lower = sentence.to_lowercase();
        let urgent = lower.contains("immediately") || lower.contains("first") || lower.contains("right away");
        for (i, t) in toks.iter().enumerate() {
            let neg = negated(&toks, i);
            if is_aggressive(t) {
                let mode = if !neg {
                    AggressionMode::Always
                } else if toks[i..].iter().position(|x| x == "unless").is_some_and(|u| {
                    toks[i + u..].iter().any(|x| x.starts_with("attacked") || x.starts_with("retaliat"))
                }) {
                    AggressionMode::Retaliate
                } else {
                    AggressionMode::Never
                };
                out.push(Directive::Aggression(mode));
            } else if t.starts_with("retaliat") && !neg {
                out.push(Directive::Aggression(AggressionMode::Retaliate));
            } else if neg {
                continue;
            } else if t.starts_with("deposit") && urgent {
                out.push(Directive::DepositFirst);
            } else if t.starts_with("hoard")
                || (t.starts_with("delay") && within(&toks, i, 2).any(|x| x.starts_with("deposit")))
            {
                out.push(Directive::Hoard);
            } else if t.starts_with("gather") || t.starts_with("collect") {
                out.push(Directive::GatherNeeded);
            } else if t == "deficit"
                || ((t == "toward" || t == "towards")
                    && toks[i.saturating_sub(3)..i].iter().any(|x| x.starts_with("move") || x.starts_with("head")))
            {
                out.push(Directive::SeekLargestDeficit);
            } else if t.starts_with("give")
                || t.starts_with("transfer")
                || (t.starts_with("shar") && within(&toks, i, 2).any(|x| x.starts_with("resource")))
            {
                out.push(Directive::GiveSurplus);
            } else if t.starts_with("broadcast")
                || t.starts_with("communicat")
                || t.starts_with("announce")
                || (t.starts_with("shar")
                    && within(&toks, i, 2)
                        .any(|x| x == "information" || x == "info" || x == "accurate" || x.starts_with("location")))
            {
                out.push(Directive::BroadcastThreshold(threshold(&toks)));
            } else if matches!(t.as_str(), "rest" | "wait" | "idle") {
                out.push(Directive::RestBias);
            }
        }
    }
    out
}
