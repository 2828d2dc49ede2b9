//! User queries, conversation context, and team configurations.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// One prior conversation turn, oldest turns first in [`Query::context`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub query: String,
    pub answer: String,
}

/// A user query together with its conversation context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
    /// Prior (query, answer) turns, ordered oldest to newest.
    #[serde(default)]
    pub context: Vec<Turn>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            context: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_context(mut self, context: Vec<Turn>) -> Self {
        self.context = context;
        self
    }

    /// Query text with the context chain prepended, used when an embedding
    /// should reflect the whole conversation rather than the last utterance.
    pub fn contextual_text(&self) -> String {
        if self.context.is_empty() {
            return self.text.clone();
        }
        let mut out = String::new();
        for turn in &self.context {
            out.push_str(&turn.query);
            out.push(' ');
            out.push_str(&turn.answer);
            out.push(' ');
        }
        out.push_str(&self.text);
        out
    }
}

/// The agent team assembled for one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TeamConfiguration {
    /// Writer alone answers from internal knowledge.
    WriterOnly,
    /// One tool invocation feeds the writer.
    ExecutorInclusive,
    /// Full pipeline: plan a task graph, execute it layer by layer, write.
    PlannerEnhanced,
}

impl fmt::Display for TeamConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TeamConfiguration::WriterOnly => "WriterOnly",
            TeamConfiguration::ExecutorInclusive => "ExecutorInclusive",
            TeamConfiguration::PlannerEnhanced => "PlannerEnhanced",
        };
        f.write_str(s)
    }
}

impl FromStr for TeamConfiguration {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "WriterOnly" => Ok(TeamConfiguration::WriterOnly),
            "ExecutorInclusive" => Ok(TeamConfiguration::ExecutorInclusive),
            "PlannerEnhanced" => Ok(TeamConfiguration::PlannerEnhanced),
            other => Err(format!("unknown team configuration: {other:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configuration_round_trips_through_str() {
        for cfg in [
            TeamConfiguration::WriterOnly,
            TeamConfiguration::ExecutorInclusive,
            TeamConfiguration::PlannerEnhanced,
        ] {
            assert_eq!(cfg.to_string().parse::<TeamConfiguration>(), Ok(cfg));
        }
        assert!("writer-only".parse::<TeamConfiguration>().is_err());
    }

    #[test]
    fn contextual_text_orders_turns() {
        let q = Query::new("q1", "and now?").with_context(vec![
            Turn {
                query: "first".into(),
                answer: "one".into(),
            },
            Turn {
                query: "second".into(),
                answer: "two".into(),
            },
        ]);
        assert_eq!(q.contextual_text(), "first one second two and now?");
    }
}
