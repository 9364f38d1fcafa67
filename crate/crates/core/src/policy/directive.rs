use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggressionMode {
    Never,
    Retaliate,
    Always,
}

/// Machine-readable behavior derived from (or attached to) a constitution rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Directive {
    DepositFirst,
    GatherNeeded,
    SeekLargestDeficit,
    BroadcastThreshold(u32),
    GiveSurplus,
    Aggression(AggressionMode),
    Hoard,
    RestBias,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DirectiveKind {
    DepositFirst,
    GatherNeeded,
    SeekLargestDeficit,
    BroadcastThreshold,
    GiveSurplus,
    Aggression,
    Hoard,
    RestBias,
}

impl Directive {
    pub fn kind(self) -> DirectiveKind {
        match self {
            Directive::DepositFirst => DirectiveKind::DepositFirst,
            Directive::GatherNeeded => DirectiveKind::GatherNeeded,
            Directive::SeekLargestDeficit => DirectiveKind::SeekLargestDeficit,
            Directive::BroadcastThreshold(_) => DirectiveKind::BroadcastThreshold,
            Directive::GiveSurplus => DirectiveKind::GiveSurplus,
            Directive::Aggression(_) => DirectiveKind::Aggression,
            Directive::Hoard => DirectiveKind::Hoard,
            Directive::RestBias => DirectiveKind::RestBias,
        }
    }

    pub fn is_valid(self) -> bool {
        !matches!(self, Directive::BroadcastThreshold(0))
    }
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directive::DepositFirst => f.write_str("deposit_first"),
            Directive::GatherNeeded => f.write_str("gather_needed"),
            Directive::SeekLargestDeficit => f.write_str("seek_largest_deficit"),
            Directive::BroadcastThreshold(n) => write!(f, "broadcast_threshold:{n}"),
            Directive::GiveSurplus => f.write_str("give_surplus"),
            Directive::Aggression(AggressionMode::Never) => f.write_str("aggression:never"),
            Directive::Aggression(AggressionMode::Retaliate) => f.write_str("aggression:retaliate"),
            Directive::Aggression(AggressionMode::Always) => f.write_str("aggression:always"),
            Directive::Hoard => f.write_str("hoard"),
            Directive::RestBias => f.write_str("rest_bias"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unrecognized directive {0:?}")]
pub struct DirectiveParseError(pub String);

impl FromStr for Directive {
    type Err = DirectiveParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DirectiveParseError(s.to_string());
        let (head, arg) = match s.trim().split_once([':', '(']) {
            Some((h, a)) => (h.trim(), Some(a.trim().trim_end_matches(')').trim())),
            None => (s.trim(), None),
        };
        let directive = match (head, arg) {
            ("deposit_first", None) => Directive::DepositFirst,
            ("gather_needed", None) => Directive::GatherNeeded,
            ("seek_largest_deficit", None) => Directive::SeekLargestDeficit,
            ("give_surplus", None) => Directive::GiveSurplus,
            ("hoard", None) => Directive::Hoard,
            ("rest_bias", None) => Directive::RestBias,
            ("broadcast_threshold", Some(n)) => Directive::BroadcastThreshold(n.parse().map_err(|_| err())?),
            ("aggression", Some("never")) => Directive::Aggression(AggressionMode::Never),
            ("aggression", Some("retaliate")) => Directive::Aggression(AggressionMode::Retaliate),
            ("aggression", Some("always")) => Directive::Aggression(AggressionMode::Always),
            _ => return Err(err()),
        };
        if directive.is_valid() {
            Ok(directive)
        } else {
            Err(err())
        }
    }
}

impl Serialize for Directive {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Directive {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
