//! Line-delimited trajectory logs.
//!
//! A log file holds one JSON record per line: a `header` (format tag, engine
//! version, world config, seed, initial state hash), one `turn` record per
//! resolved turn (observations digest, actions, policy faults, outcomes,
//! Overseer ranking, post-turn state hash) and a `footer` (final projects and
//! agents, success flag, final state hash). Field order is fixed by the
//! struct definitions and all maps are ordered, so serialization is canonical.
//!
//! Full observations are not written; [`replay`] regenerates them from the
//! seed, config and recorded actions while checking every state hash.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::WorldConfig;
use super::engine::GridWorld;
use super::episode::digest;
use super::types::*;
use super::WorldError;

pub const LOG_FORMAT: &str = "society-trajectory/1";
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub engine_version: String,
    pub label: String,
    pub seed: u64,
    pub config: WorldConfig,
    pub initial_state_hash: String,
}

impl LogHeader {
    pub fn new(config: &WorldConfig, seed: u64, label: &str, initial_state_hash: String) -> Self {
        Self {
            format: LOG_FORMAT.to_string(),
            engine_version: ENGINE_VERSION.to_string(),
            label: label.to_string(),
            seed,
            config: config.clone(),
            initial_state_hash,
        }
    }

    /// Hash of the config snapshot, used to group logs from the same setup.
    pub fn config_hash(&self) -> String {
        digest(&self.config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: u32,
    #[serde(skip)]
    pub observations: BTreeMap<AgentId, Observation>,
    pub observations_digest: String,
    pub actions: BTreeMap<AgentId, Action>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub faults: BTreeMap<AgentId, String>,
    pub events: TurnEvents,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overseer: Option<OverseerEvent>,
    pub state_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFooter {
    pub turns_played: u32,
    pub final_projects: Vec<Project>,
    pub final_agents: Vec<AgentState>,
    pub conflict_attempts: u32,
    pub success: bool,
    pub state_hash: String,
}

impl LogFooter {
    pub fn from_world(world: &GridWorld, turns: &[TurnRecord]) -> Self {
        Self {
            turns_played: world.turn,
            final_projects: world.projects.clone(),
            final_agents: world.agents.clone(),
            conflict_attempts: turns.iter().map(|t| t.events.conflict_attempts).sum(),
            success: world.success(),
            state_hash: world.state_hash(),
        }
    }

    pub fn survivors(&self) -> usize {
        self.final_agents.iter().filter(|a| a.alive).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub header: LogHeader,
    pub turns: Vec<TurnRecord>,
    pub footer: LogFooter,
}

enum LogLine {
    Header(LogHeader),
    Turn(TurnRecord),
    Footer(LogFooter),
}

impl LogLine {
    // Dispatches on the `record` tag by hand: serde's internally tagged enums
    // buffer content and then reject the string keys of integer-keyed maps.
    fn parse(line: &str) -> Result<LogLine, String> {
        let mut value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let tag = value
            .as_object_mut()
            .and_then(|o| o.remove("record"))
            .ok_or_else(|| "missing `record` field".to_string())?;
        let inner = |e: serde_json::Error| e.to_string();
        match tag.as_str() {
            Some("header") => serde_json::from_value(value).map(LogLine::Header).map_err(inner),
            Some("turn") => serde_json::from_value(value).map(LogLine::Turn).map_err(inner),
            Some("footer") => serde_json::from_value(value).map(LogLine::Footer).map_err(inner),
            _ => Err(format!("unknown record type {tag}")),
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum LogLineRef<'a> {
    Header(&'a LogHeader),
    Turn(&'a TurnRecord),
    Footer(&'a LogFooter),
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("log has no header record")]
    MissingHeader,
    #[error("log is truncated: {0}")]
    Truncated(String),
    #[error("replay diverged at turn {}: {}", .0.turn, .0.detail)]
    Divergence(Divergence),
    #[error(transparent)]
    Engine(#[from] WorldError),
}

impl TrajectoryLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: LogLineRef<'_>| {
            out.push_str(&serde_json::to_string(&line).expect("log serializes"));
            out.push('\n');
        };
        push(LogLineRef::Header(&self.header));
        for turn in &self.turns {
            push(LogLineRef::Turn(turn));
        }
        push(LogLineRef::Footer(&self.footer));
        out
    }

    /// Parses and replays a log, requiring every record to be present and
    /// every state hash to match.
    pub fn from_jsonl(text: &str) -> Result<TrajectoryLog, LogError> {
        let parsed = ParsedLog::parse(text, false)?;
        if parsed.footer.is_none() {
            return Err(LogError::Truncated("missing footer".into()));
        }
        let report = replay(&parsed)?;
        match (report.divergence, report.log) {
            (Some(d), _) => Err(LogError::Divergence(d)),
            (None, Some(log)) => Ok(log),
            (None, None) => Err(LogError::Truncated("replay produced no log".into())),
        }
    }

    pub fn survivors(&self) -> usize {
        self.footer.survivors()
    }

    pub fn conflict_attempts(&self) -> u32 {
        self.turns.iter().map(|t| t.events.conflict_attempts).sum()
    }

    pub fn is_complete(&self) -> bool {
        let expected = self.footer.turns_played as usize;
        self.turns.len() == expected
            && self.turns.iter().enumerate().all(|(i, t)| t.turn as usize == i + 1)
            && (self.footer.turns_played == self.header.config.horizon
                || self.footer.final_agents.iter().all(|a| !a.alive))
    }
}

/// A log as read from disk, before replay.
#[derive(Debug, Clone)]
pub struct ParsedLog {
    pub header: LogHeader,
    pub turns: Vec<TurnRecord>,
    pub footer: Option<LogFooter>,
    /// Lines skipped in lenient mode, with their diagnostics.
    pub warnings: Vec<String>,
}

impl ParsedLog {
    /// In lenient mode unparseable lines are skipped with a warning; otherwise
    /// the first bad line is an error.
    pub fn parse(text: &str, lenient: bool) -> Result<ParsedLog, LogError> {
        let mut header = None;
        let mut turns = Vec::new();
        let mut footer = None;
        let mut warnings = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match LogLine::parse(line) {
                Ok(LogLine::Header(h)) => header = Some(h),
                Ok(LogLine::Turn(t)) => turns.push(t),
                Ok(LogLine::Footer(f)) => footer = Some(f),
                Err(e) if lenient => warnings.push(format!("line {}: skipped: {e}", i + 1)),
                Err(e) => return Err(LogError::Parse { line: i + 1, message: e }),
            }
        }
        let header = header.ok_or(LogError::MissingHeader)?;
        if header.format != LOG_FORMAT {
            warnings.push(format!("unexpected log format {:?}, expected {LOG_FORMAT:?}", header.format));
        }
        Ok(ParsedLog { header, turns, footer, warnings })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub turn: u32,
    pub expected: String,
    pub actual: String,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub verified_turns: u32,
    pub divergence: Option<Divergence>,
    pub warnings: Vec<String>,
    /// Reconstructed log with observations; present when replay reached the end without divergence.
    pub log: Option<TrajectoryLog>,
}

impl ReplayReport {
    pub fn verified(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Re-executes the recorded actions from the header's config and seed and
/// checks every recorded state hash, stopping at the first divergence.
pub fn replay(parsed: &ParsedLog) -> Result<ReplayReport, LogError> {
    let header = &parsed.header;
    let mut warnings = parsed.warnings.clone();
    if header.engine_version != ENGINE_VERSION {
        warnings
            .push(format!("log written by engine version {}, replaying with {ENGINE_VERSION}", header.engine_version));
    }
    let mut world = GridWorld::init(&header.config, header.seed)?;
    let mut rng = world.resolution_rng();
    let mut report = ReplayReport { verified_turns: 0, divergence: None, warnings, log: None };
    let diverge = |turn: u32, expected: &str, actual: &str, detail: String| Divergence {
        turn,
        expected: expected.to_string(),
        actual: actual.to_string(),
        detail,
    };

    let initial = world.state_hash();
    if initial != header.initial_state_hash {
        report.divergence = Some(diverge(0, &header.initial_state_hash, &initial, "initial state differs".into()));
        return Ok(report);
    }

    let mut turns = Vec::with_capacity(parsed.turns.len());
    for record in &parsed.turns {
        let expected_turn = world.current_turn();
        if record.turn != expected_turn {
            report.divergence = Some(diverge(
                expected_turn,
                &record.state_hash,
                "",
                format!("record for turn {} out of sequence", record.turn),
            ));
            return Ok(report);
        }
        let observations: BTreeMap<AgentId, Observation> =
            world.alive_ids().into_iter().map(|id| (id, world.observe(id).expect("alive agent"))).collect();
        let mut events = match world.resolve_turn(&record.actions, &mut rng) {
            Ok(events) => events,
            Err(e) => {
                report.divergence =
                    Some(diverge(record.turn, &record.state_hash, "", format!("engine rejected actions: {e}")));
                return Ok(report);
            }
        };
        let overseer = if world.config.is_overseer_turn(world.turn) {
            let event = world.apply_overseer()?;
            if let Some(agent) = event.eliminated {
                events.eliminations.push(Elimination { agent, cause: EliminationCause::Overseer });
            }
            Some(event)
        } else {
            None
        };
        let actual = world.state_hash();
        if actual != record.state_hash || events != record.events {
            let detail = if actual != record.state_hash { "state hash mismatch" } else { "turn events mismatch" };
            report.divergence = Some(diverge(record.turn, &record.state_hash, &actual, detail.into()));
            return Ok(report);
        }
        report.verified_turns += 1;
        turns.push(TurnRecord {
            turn: record.turn,
            observations_digest: digest(&observations),
            observations,
            actions: record.actions.clone(),
            faults: record.faults.clone(),
            events,
            overseer,
            state_hash: actual,
        });
    }

    if let Some(footer) = &parsed.footer {
        let rebuilt = LogFooter::from_world(&world, &turns);
        if &rebuilt != footer {
            report.divergence =
                Some(diverge(world.turn, &footer.state_hash, &rebuilt.state_hash, "footer mismatch".into()));
            return Ok(report);
        }
        report.log = Some(TrajectoryLog { header: header.clone(), turns, footer: rebuilt });
    }
    Ok(report)
}
