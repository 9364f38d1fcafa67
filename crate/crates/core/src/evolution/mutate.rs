use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::archive::Candidate;
use crate::constitution::{
    parse, parse_literal, render_literal, validate, Constitution, MoralRule, Provenance, MAX_RULES,
};
use crate::policy::chat::{ChatEndpointConfig, ChatMessage, ChatRequest, ChatTransport};
use crate::policy::{extract, AggressionMode, Directive};
use crate::rng::StreamRng;
use crate::scoring::Category;

#[derive(Debug, Clone, PartialEq)]
pub struct Mutation {
    pub constitution: Constitution,
    pub description: String,
    /// Produced by the fallback operator after the primary one failed.
    pub fallback: bool,
}

/// Produces a child constitution from a scored parent.
pub trait Mutator: Send + Sync {
    fn mutate(&self, parent: &Candidate, rng: &mut StreamRng) -> Mutation;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationOp {
    AddRule,
    DropRule,
    Reorder,
    ToggleDirective,
    AdjustThreshold,
}

impl MutationOp {
    pub const ALL: [MutationOp; 5] = [
        MutationOp::AddRule,
        MutationOp::DropRule,
        MutationOp::Reorder,
        MutationOp::ToggleDirective,
        MutationOp::AdjustThreshold,
    ];
}

fn library_rule(name: &str, guidance: &str, summary: &str, directives: Vec<Directive>) -> MoralRule {
    MoralRule { directives: Some(directives), ..MoralRule::new(name, guidance, summary, 1) }
}

/// Rules the mock mutator can splice in.
pub fn rule_library() -> Vec<MoralRule> {
    vec![
        library_rule(
            "Deposit First",
            "If you carry any resource your team needs, deposit it immediately before doing anything else.",
            "Deposit carried resources at once",
            vec![Directive::DepositFirst],
        ),
        library_rule(
            "Gather Needed",
            "When standing on a tile with a resource your team still needs, gather it.",
            "Gather needed resources on the spot",
            vec![Directive::GatherNeeded],
        ),
        library_rule(
            "Target Deficit",
            "Move toward the nearest known tile of the resource with the largest remaining deficit.",
            "Head for the largest deficit",
            vec![Directive::SeekLargestDeficit],
        ),
        library_rule(
            "Report Clusters",
            "Broadcast the location of tiles holding 2+ units of a needed resource.",
            "Share rich tiles",
            vec![Directive::BroadcastThreshold(2)],
        ),
        library_rule(
            "Share Surplus",
            "Give spare needed resources to an adjacent teammate.",
            "Hand over surplus",
            vec![Directive::GiveSurplus],
        ),
        library_rule(
            "No Aggression",
            "Never attack or steal from any agent.",
            "Stay peaceful",
            vec![Directive::Aggression(AggressionMode::Never)],
        ),
        library_rule(
            "Retaliate",
            "Do not attack unless you were attacked last turn; then strike back.",
            "Answer attacks only",
            vec![Directive::Aggression(AggressionMode::Retaliate)],
        ),
        library_rule("Stockpile", "Hoard resources and delay depositing.", "Keep resources", vec![Directive::Hoard]),
        library_rule("Conserve", "Rest when nothing else applies.", "Rest when idle", vec![Directive::RestBias]),
    ]
}

fn directives_of(rule: &MoralRule) -> Vec<Directive> {
    rule.directives.clone().unwrap_or_else(|| extract(&rule.guidance))
}

fn toggle_choices() -> Vec<Directive> {
    vec![
        Directive::DepositFirst,
        Directive::GatherNeeded,
        Directive::SeekLargestDeficit,
        Directive::BroadcastThreshold(2),
        Directive::GiveSurplus,
        Directive::Aggression(AggressionMode::Never),
        Directive::Aggression(AggressionMode::Retaliate),
        Directive::Aggression(AggressionMode::Always),
        Directive::Hoard,
        Directive::RestBias,
    ]
}

/// Seeded structural edits.
#[derive(Debug, Clone)]
pub struct MockMutator {
    pub library: Vec<MoralRule>,
}

impl Default for MockMutator {
    fn default() -> Self {
        Self { library: rule_library() }
    }
}

fn renumbered(mut rules: Vec<MoralRule>) -> Vec<MoralRule> {
    for (i, r) in rules.iter_mut().enumerate() {
        r.priority = i as u32 + 1;
    }
    rules
}

impl MockMutator {
    /// Applies `op`, or returns `None` when it cannot apply to this parent.
    pub fn apply(&self, op: MutationOp, parent: &Constitution, rng: &mut impl Rng) -> Option<Mutation> {
        let mut rules: Vec<MoralRule> = parent.ordered_rules().into_iter().cloned().collect();
        let description = match op {
            MutationOp::AddRule => {
                if rules.len() >= MAX_RULES {
                    return None;
                }
                let fresh: Vec<&MoralRule> =
                    self.library.iter().filter(|l| rules.iter().all(|r| r.name != l.name)).collect();
                if fresh.is_empty() {
                    return None;
                }
                let rule = fresh[rng.random_range(0..fresh.len())].clone();
                let at = rng.random_range(0..=rules.len());
                let d = format!("add rule {:?} at priority {}", rule.name, at + 1);
                rules.insert(at, rule);
                d
            }
            MutationOp::DropRule => {
                if rules.len() < 2 {
                    return None;
                }
                let at = rng.random_range(0..rules.len());
                format!("drop rule {:?}", rules.remove(at).name)
            }
            MutationOp::Reorder => {
                if rules.len() < 2 {
                    return None;
                }
                let at = rng.random_range(0..rules.len() - 1);
                rules.swap(at, at + 1);
                format!("swap priorities {} and {}", at + 1, at + 2)
            }
            MutationOp::ToggleDirective => {
                if rules.is_empty() {
                    return None;
                }
                let at = rng.random_range(0..rules.len());
                let choices = toggle_choices();
                let pick = choices[rng.random_range(0..choices.len())];
                let mut ds = directives_of(&rules[at]);
                let d = if let Some(i) = ds.iter().position(|d| *d == pick) {
                    ds.remove(i);
                    format!("remove {pick} from rule {:?}", rules[at].name)
                } else {
                    ds.retain(|d| d.kind() != pick.kind());
                    ds.push(pick);
                    format!("add {pick} to rule {:?}", rules[at].name)
                };
                rules[at].directives = Some(ds);
                d
            }
            MutationOp::AdjustThreshold => {
                let holders: Vec<(usize, usize, u32)> = rules
                    .iter()
                    .enumerate()
                    .flat_map(|(ri, r)| {
                        directives_of(r).into_iter().enumerate().filter_map(move |(di, d)| match d {
                            Directive::BroadcastThreshold(n) => Some((ri, di, n)),
                            _ => None,
                        })
                    })
                    .collect();
                if holders.is_empty() {
                    return None;
                }
                let (ri, di, n) = holders[rng.random_range(0..holders.len())];
                let next = if n <= 1 || rng.random_bool(0.5) { n + 1 } else { n - 1 };
                let mut ds = directives_of(&rules[ri]);
                ds[di] = Directive::BroadcastThreshold(next);
                rules[ri].directives = Some(ds);
                format!("broadcast threshold {n} -> {next} in rule {:?}", rules[ri].name)
            }
        };
        let child = Constitution {
            label: parent.label.clone(),
            provenance: Provenance::Mutated,
            parent: Some(parent.label.clone()),
            rules: renumbered(rules),
        };
        Some(Mutation { constitution: child, description, fallback: false })
    }
}

impl Mutator for MockMutator {
    fn mutate(&self, parent: &Candidate, rng: &mut StreamRng) -> Mutation {
        let mut ops = MutationOp::ALL.to_vec();
        while !ops.is_empty() {
            let op = ops.remove(rng.random_range(0..ops.len()));
            if let Some(m) = self.apply(op, &parent.constitution, rng) {
                return m;
            }
        }
        Mutation {
            constitution: Constitution {
                provenance: Provenance::Mutated,
                parent: Some(parent.label().to_string()),
                ..parent.constitution.clone()
            },
            description: "no applicable edit; copied parent".into(),
            fallback: false,
        }
    }
}

/// Prompt asking a language model to improve a constitution given feedback.
pub fn mutation_prompt(parent: &Candidate) -> String {
    let f = &parent.feedback;
    let share = |c: Category| f.fractions.get(&c).copied().unwrap_or(0.0) * 100.0;
    format!(
        "You are an expert at designing behavioral rules.\n\n\
         ## CURRENT CONSTITUTION\n{}\n\
         ## PERFORMANCE FEEDBACK\n\
         - Stability Score: {:.3}\n\
         - Productivity: {:.0}%\n\
         - Conflict Rate: {:.0}%\n\
         - Survival: {:.0}%\n\
         - Actions: {:.0}% productive, {:.0}% aggressive, {:.0}% social, {:.0}% idle\n\n\
         ## TASK\nImprove this constitution. Consider:\n\
         1. Are rules specific enough?\n\
         2. Is priority ordering optimal?\n\
         3. Are agents wasting turns?\n\n\
         ## OUTPUT\nProvide improved constitution as valid Python code.\n",
        render_literal(&parent.constitution),
        f.score,
        f.productivity * 100.0,
        f.conflict * 100.0,
        f.survival * 100.0,
        share(Category::Productive),
        share(Category::Aggressive),
        share(Category::Social),
        share(Category::Idle),
    )
}

/// Reads a constitution from model output: Python `MoralRule(...)` literals
/// first, then the TOML file format.
pub fn parse_mutation_reply(text: &str, parent: &Constitution) -> Result<Constitution, String> {
    let parsed = match parse_literal(text, &parent.label, Provenance::Mutated) {
        Ok(c) => c,
        Err(literal_err) => {
            let body = text
                .split("```")
                .nth(1)
                .map(|b| b.trim_start_matches("toml").to_string())
                .unwrap_or_else(|| text.to_string());
            parse(&body).map_err(|toml_err| format!("{literal_err}; as TOML: {toml_err}"))?
        }
    };
    let mut child = Constitution {
        label: parent.label.clone(),
        provenance: Provenance::Mutated,
        parent: Some(parent.label.clone()),
        rules: parsed.rules,
    };
    let report = validate(&child);
    if !report.is_valid() {
        return Err(format!("invalid constitution: {:?}", report.errors));
    }
    child.normalize();
    Ok(child)
}

/// Language-model mutator; retries once on an unusable reply, then falls back to the mock operator.
pub struct LlmMutator {
    transport: Arc<dyn ChatTransport>,
    endpoint: ChatEndpointConfig,
    fallback: MockMutator,
}

impl LlmMutator {
    pub fn new(transport: Arc<dyn ChatTransport>, endpoint: ChatEndpointConfig) -> Self {
        Self { transport, endpoint, fallback: MockMutator::default() }
    }

    /// One rewrite of `parent` through the endpoint, with a single retry on an
    /// unparseable reply. No fallback.
    pub fn try_mutate(&self, parent: &Candidate) -> Result<Constitution, String> {
        let mut request = ChatRequest {
            model: self.endpoint.model.clone(),
            temperature: self.endpoint.temperature,
            top_p: self.endpoint.top_p,
            messages: vec![ChatMessage::user(mutation_prompt(parent))],
            tools: Vec::new(),
        };
        let mut last = String::new();
        for _ in 0..2 {
            let reply = self.transport.complete(&request).map_err(|e| format!("endpoint: {e}"))?;
            let text = reply.content.unwrap_or_default();
            match parse_mutation_reply(&text, &parent.constitution) {
                Ok(c) => return Ok(c),
                Err(e) => {
                    request.messages.push(ChatMessage::assistant(text));
                    request.messages.push(ChatMessage::user(format!(
                        "That could not be parsed ({e}). Reply with the complete constitution as MoralRule(...) entries."
                    )));
                    last = e;
                }
            }
        }
        Err(last)
    }
}

impl Mutator for LlmMutator {
    fn mutate(&self, parent: &Candidate, rng: &mut StreamRng) -> Mutation {
        match self.try_mutate(parent) {
            Ok(constitution) => {
                Mutation { constitution, description: "language-model rewrite".into(), fallback: false }
            }
            Err(e) => {
                let mut m = self.fallback.mutate(parent, rng);
                m.description = format!("{} (fallback: {e})", m.description);
                m.fallback = true;
                m
            }
        }
    }
}
