use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{CmpOp, Literal};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub lets: Vec<LetBinding>,
    pub select: Vec<String>,
    #[serde(rename = "where")]
    pub conditions: Vec<Condition>,
}

/// `LET name = { GET get WHERE conditions }`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LetBinding {
    pub name: String,
    pub get: String,
    #[serde(rename = "where")]
    pub conditions: Vec<Condition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Condition {
    Link {
        subject: String,
        connector: String,
        object: String,
    },
    Anchor {
        entity: String,
        anchor: String,
    },
    Compare {
        lhs: Operand,
        op: CmpOp,
        rhs: Literal,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Operand {
    Property { entity: String, property: String },
    Call { function: String, args: Vec<String> },
}

impl Condition {
    /// Identifiers in term position (not connectors, anchors or properties).
    pub fn terms(&self) -> Vec<&str> {
        match self {
            Condition::Link { subject, object, .. } => vec![subject, object],
            Condition::Anchor { entity, .. } => vec![entity],
            Condition::Compare {
                lhs: Operand::Property { entity, .. },
                ..
            } => vec![entity],
            Condition::Compare {
                lhs: Operand::Call { args, .. },
                ..
            } => args.iter().map(String::as_str).collect(),
        }
    }

    pub fn is_link(&self) -> bool {
        matches!(self, Condition::Link { .. })
    }
}

impl LetBinding {
    pub fn link_pattern_count(&self) -> usize {
        self.conditions.iter().filter(|c| c.is_link()).count()
    }
}

impl Query {
    /// Link patterns across the main query and all LET bodies.
    pub fn link_pattern_count(&self) -> usize {
        self.conditions.iter().filter(|c| c.is_link()).count()
            + self.lets.iter().map(LetBinding::link_pattern_count).sum::<usize>()
    }

    /// Every term identifier in the main WHERE clause.
    pub fn terms(&self) -> BTreeSet<&str> {
        self.conditions.iter().flat_map(Condition::terms).collect()
    }
}
