//! Constitutions: priority-ordered rule sets, their validation, the on-disk
//! file format and the four reference constitutions.

mod baselines;
mod file;
mod literal;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::policy::Directive;

pub use baselines::{baseline, BaselineName, BASELINE_NAMES};
pub use file::{parse, serialize, ConstitutionError, CONSTITUTION_FORMAT};
pub use literal::{parse_literal, render_literal, LiteralError};

/// Archive bound on rule count.
pub const MAX_RULES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoralRule {
    pub name: String,
    pub guidance: String,
    pub summary: String,
    /// 1 is the highest priority.
    pub priority: u32,
    /// Structured directives; when absent, behavior is extracted from `guidance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directives: Option<Vec<Directive>>,
}

impl MoralRule {
    pub fn new(name: &str, guidance: &str, summary: &str, priority: u32) -> Self {
        Self {
            name: name.to_string(),
            guidance: guidance.to_string(),
            summary: summary.to_string(),
            priority,
            directives: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Baseline,
    LlmGenerated,
    Evolved,
    Mutated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constitution {
    pub label: String,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub rules: Vec<MoralRule>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Issue {
    NoRules,
    TooManyRules(usize),
    EmptyName { index: usize },
    EmptyGuidance { rule: String },
    ZeroPriority { rule: String },
    DuplicatePriority { priority: u32 },
    OutOfOrder,
    InvalidDirective { rule: String, directive: String },
    EmptyLabel,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::NoRules => f.write_str("constitution has no rules"),
            Issue::TooManyRules(n) => write!(f, "{n} rules exceeds the limit of {MAX_RULES}"),
            Issue::EmptyName { index } => write!(f, "rule #{} has an empty name", index + 1),
            Issue::EmptyGuidance { rule } => write!(f, "rule {rule:?} has empty guidance"),
            Issue::ZeroPriority { rule } => write!(f, "rule {rule:?} has priority 0"),
            Issue::DuplicatePriority { priority } => write!(f, "priority {priority} used more than once"),
            Issue::OutOfOrder => f.write_str("priorities are not increasing in list order"),
            Issue::InvalidDirective { rule, directive } => write!(f, "rule {rule:?} has invalid directive {directive}"),
            Issue::EmptyLabel => f.write_str("constitution label is empty"),
        }
    }
}

/// Outcome of [`validate`]. Errors make the constitution unusable; warnings
/// are fixed by [`Constitution::normalize`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn needs_normalization(&self) -> bool {
        !self.warnings.is_empty()
    }
}

pub fn validate(c: &Constitution) -> ValidationReport {
    let mut report = ValidationReport::default();
    if c.label.trim().is_empty() {
        report.errors.push(Issue::EmptyLabel);
    }
    if c.rules.is_empty() {
        report.errors.push(Issue::NoRules);
    }
    if c.rules.len() > MAX_RULES {
        report.errors.push(Issue::TooManyRules(c.rules.len()));
    }
    for (index, rule) in c.rules.iter().enumerate() {
        if rule.name.trim().is_empty() {
            report.errors.push(Issue::EmptyName { index });
        }
        if rule.guidance.trim().is_empty() {
            report.errors.push(Issue::EmptyGuidance { rule: rule.name.clone() });
        }
        if rule.priority == 0 {
            report.errors.push(Issue::ZeroPriority { rule: rule.name.clone() });
        }
        for d in rule.directives.iter().flatten() {
            if !d.is_valid() {
                report.errors.push(Issue::InvalidDirective { rule: rule.name.clone(), directive: d.to_string() });
            }
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for rule in &c.rules {
        if !seen.insert(rule.priority) {
            report.warnings.push(Issue::DuplicatePriority { priority: rule.priority });
        }
    }
    let contiguous = c.rules.iter().enumerate().all(|(i, r)| r.priority == i as u32 + 1);
    if !contiguous && !report.warnings.iter().any(|w| matches!(w, Issue::DuplicatePriority { .. })) {
        report.warnings.push(Issue::OutOfOrder);
    }
    report
}

impl Constitution {
    pub fn new(label: &str, provenance: Provenance, rules: Vec<MoralRule>) -> Self {
        Self { label: label.to_string(), provenance, parent: None, rules }
    }

    /// Sorts rules by priority (stable, so ties keep list order) and renumbers them 1..=k.
    pub fn normalize(&mut self) {
        self.rules.sort_by_key(|r| r.priority);
        for (i, rule) in self.rules.iter_mut().enumerate() {
            rule.priority = i as u32 + 1;
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// Number of rules; the complexity axis of the elite archive.
    pub fn complexity(&self) -> usize {
        self.rules.len()
    }

    /// Rules in priority order.
    pub fn ordered_rules(&self) -> Vec<&MoralRule> {
        let mut rules: Vec<&MoralRule> = self.rules.iter().collect();
        rules.sort_by_key(|r| r.priority);
        rules
    }
}

pub fn complexity(c: &Constitution) -> usize {
    c.complexity()
}
