//! Constitution files: a versioned TOML document.
//!
//! ```toml
//! format = "society-constitution/1"
//! label = "c_star"
//! provenance = "evolved"        # baseline | llm_generated | evolved | mutated
//! parent = "i3-isl0"            # optional
//!
//! [[rules]]
//! name = "Deposit First"
//! priority = 1
//! summary = "Deposit needed resources immediately"
//! guidance = "If carrying any resource your team needs, ..."
//! directives = ["deposit_first"]   # optional
//! ```

use serde::{Deserialize, Serialize};

use super::{Constitution, MoralRule, Provenance};
use crate::policy::Directive;

pub const CONSTITUTION_FORMAT: &str = "society-constitution/1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstitutionError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unsupported constitution format {0:?}, expected {CONSTITUTION_FORMAT:?}")]
    UnsupportedFormat(String),
    #[error("missing top-level field `{0}`")]
    MissingTopField(&'static str),
    #[error("line {line}: rule {rule} is missing `{field}`")]
    MissingField { rule: String, line: usize, field: &'static str },
    #[error("line {line}: rule {rule}: {message}")]
    BadDirective { rule: String, line: usize, message: String },
}

#[derive(Serialize)]
struct FileOut<'a> {
    format: &'a str,
    label: &'a str,
    provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    parent: Option<&'a str>,
    rules: &'a [MoralRule],
}

#[derive(Deserialize)]
struct RawFile {
    format: Option<String>,
    label: Option<String>,
    provenance: Option<Provenance>,
    parent: Option<String>,
    #[serde(default)]
    rules: Vec<toml::Spanned<RawRule>>,
}

#[derive(Deserialize)]
struct RawRule {
    name: Option<String>,
    guidance: Option<String>,
    summary: Option<String>,
    priority: Option<u32>,
    directives: Option<Vec<String>>,
}

pub fn serialize(c: &Constitution) -> String {
    let out = FileOut {
        format: CONSTITUTION_FORMAT,
        label: &c.label,
        provenance: c.provenance,
        parent: c.parent.as_deref(),
        rules: &c.rules,
    };
    toml::to_string_pretty(&out).expect("constitution serializes")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn parse(text: &str) -> Result<Constitution, ConstitutionError> {
    let raw: RawFile = toml::from_str(text).map_err(|e| ConstitutionError::Syntax {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    match raw.format.as_deref() {
        Some(CONSTITUTION_FORMAT) => {}
        Some(other) => return Err(ConstitutionError::UnsupportedFormat(other.to_string())),
        None => return Err(ConstitutionError::MissingTopField("format")),
    }
    let label = raw.label.ok_or(ConstitutionError::MissingTopField("label"))?;
    let provenance = raw.provenance.ok_or(ConstitutionError::MissingTopField("provenance"))?;

    let mut rules = Vec::with_capacity(raw.rules.len());
    for (index, spanned) in raw.rules.into_iter().enumerate() {
        let line = line_of(text, spanned.span().start);
        let rule = spanned.into_inner();
        let rule_id = match &rule.name {
            Some(n) => format!("{n:?}"),
            None => format!("#{}", index + 1),
        };
        let missing = |field| ConstitutionError::MissingField { rule: rule_id.clone(), line, field };
        let name = rule.name.clone().ok_or_else(|| missing("name"))?;
        let guidance = rule.guidance.ok_or_else(|| missing("guidance"))?;
        let priority = rule.priority.ok_or_else(|| missing("priority"))?;
        let directives = rule
            .directives
            .map(|ds| {
                ds.iter().map(|d| d.parse::<Directive>()).collect::<Result<Vec<_>, _>>().map_err(|e| {
                    ConstitutionError::BadDirective { rule: rule_id.clone(), line, message: e.to_string() }
                })
            })
            .transpose()?;
        rules.push(MoralRule { name, guidance, summary: rule.summary.unwrap_or_default(), priority, directives });
    }
    Ok(Constitution { label, provenance, parent: raw.parent, rules })
}
