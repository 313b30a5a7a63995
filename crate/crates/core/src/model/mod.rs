//! Hyperknowledge value types: nodes with anchors and properties, connectors
//! declaring roles, n-ary links binding roles to anchors, and contexts.
//!
//! Nothing here touches storage; see [`crate::store`] for that.

mod entity;
mod id;
mod literal;

use std::fmt;

pub use entity::{Anchor, Binding, Connector, Context, Link, Node, Properties};
pub use id::{EntityId, MAX_NAMESPACE_LEN, RESERVED_NAMESPACE};
pub use literal::{KindMismatch, Literal, LiteralKind};

/// Anchor every node carries; denotes the whole resource.
pub const LAMBDA: &str = "lambda";
pub const SUBJECT: &str = "subject";
pub const OBJECT: &str = "object";

pub const DEFAULT_CONTEXT: &str = "hk:default";
pub const INSTANCE_OF: &str = "hk:instanceOf";
pub const SUBCLASS_OF: &str = "hk:subClassOf";

/// Property marking a node as a concept (class) rather than an individual.
pub const KIND_PROPERTY: &str = "hk:kind";
pub const CONCEPT_KIND: &str = "concept";
/// Conventional display-name property; identifiers in queries match it.
pub const NAME_PROPERTY: &str = "name";

/// Comparison operator shared by queries and the property index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum CmpOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    /// Whether `lhs op rhs` holds given `lhs.cmp(rhs)`.
    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

pub fn binary_roles() -> Vec<String> {
    vec![SUBJECT.to_owned(), OBJECT.to_owned()]
}

pub fn default_context_id() -> EntityId {
    EntityId::parse(DEFAULT_CONTEXT).unwrap()
}

pub fn instance_of_id() -> EntityId {
    EntityId::parse(INSTANCE_OF).unwrap()
}

pub fn subclass_of_id() -> EntityId {
    EntityId::parse(SUBCLASS_OF).unwrap()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid id: {0}")]
    InvalidId(String),
    #[error("anchor name is empty")]
    EmptyAnchorName,
    #[error("connector name is empty")]
    EmptyConnectorName,
    #[error("connector `{0}` needs at least two roles")]
    TooFewRoles(String),
    #[error("connector `{0}` has an empty role name")]
    EmptyRoleName(String),
    #[error("connector `{0}` declares role `{1}` twice")]
    DuplicateRole(String, String),
}

/// A reason a link does not fit its connector or the nodes it binds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    MissingRole {
        role: String,
    },
    ExtraRole {
        role: String,
    },
    UnknownAnchor {
        role: String,
        node: EntityId,
        anchor: String,
    },
    DanglingNode {
        role: String,
        node: EntityId,
    },
    WrongConnector {
        expected: EntityId,
        found: EntityId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingRole { role } => write!(f, "missing role `{role}`"),
            Violation::ExtraRole { role } => write!(f, "extra role `{role}`"),
            Violation::UnknownAnchor { role, node, anchor } => {
                write!(f, "unknown anchor `{anchor}` on {node} (role `{role}`)")
            }
            Violation::DanglingNode { role, node } => {
                write!(f, "dangling node {node} (role `{role}`)")
            }
            Violation::WrongConnector { expected, found } => {
                write!(f, "link declares connector {found}, checked against {expected}")
            }
        }
    }
}

/// Answers whether `node` exists and, if so, whether it has `anchor`.
pub trait AnchorLookup {
    fn anchor_exists(&self, node: &EntityId, anchor: &str) -> Option<bool>;
}

impl<F> AnchorLookup for F
where
    F: Fn(&EntityId, &str) -> Option<bool>,
{
    fn anchor_exists(&self, node: &EntityId, anchor: &str) -> Option<bool> {
        self(node, anchor)
    }
}

/// Checks role coverage and anchor existence. Every violation is reported,
/// sorted, not just the first.
pub fn validate_link(link: &Link, connector: &Connector, resolve: &impl AnchorLookup) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    if link.connector != connector.id {
        violations.push(Violation::WrongConnector {
            expected: connector.id.clone(),
            found: link.connector.clone(),
        });
    }
    for role in connector.roles() {
        if !link.bindings.contains_key(role) {
            violations.push(Violation::MissingRole { role: role.clone() });
        }
    }
    for (role, binding) in &link.bindings {
        if !connector.has_role(role) {
            violations.push(Violation::ExtraRole { role: role.clone() });
        }
        match resolve.anchor_exists(&binding.node, &binding.anchor) {
            None => violations.push(Violation::DanglingNode {
                role: role.clone(),
                node: binding.node.clone(),
            }),
            Some(false) => violations.push(Violation::UnknownAnchor {
                role: role.clone(),
                node: binding.node.clone(),
                anchor: binding.anchor.clone(),
            }),
            Some(true) => {}
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        violations.sort();
        Err(violations)
    }
}
