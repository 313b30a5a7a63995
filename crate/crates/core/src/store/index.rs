use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::Bound;

use crate::model::{EntityId, Literal, LiteralKind};

/// Ordering key for the property index. One total order per literal kind;
/// vectors are not indexed.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropKey {
    Boolean(bool),
    Numeric(NumKey),
    Text(String),
}

/// `f64` under `total_cmp`, with `-0.0` folded into `0.0`.
#[derive(Clone, Copy, Debug)]
pub struct NumKey(f64);

impl NumKey {
    pub fn new(x: f64) -> Self {
        NumKey(if x == 0.0 { 0.0 } else { x })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl PartialEq for NumKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for NumKey {}

impl PartialOrd for NumKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NumKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl std::hash::Hash for NumKey {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

impl PropKey {
    pub fn from_literal(lit: &Literal) -> Option<PropKey> {
        match lit {
            Literal::Text(s) => Some(PropKey::Text(s.clone())),
            Literal::Number(x) => Some(PropKey::Numeric(NumKey::new(*x))),
            Literal::Integer(i) => Some(PropKey::Numeric(NumKey::new(*i as f64))),
            Literal::Boolean(b) => Some(PropKey::Boolean(*b)),
            Literal::Vector(_) => None,
        }
    }

    /// Bounds enclosing every key of one kind.
    pub fn kind_bounds(kind: LiteralKind) -> Option<(Bound<PropKey>, Bound<PropKey>)> {
        use Bound::*;
        match kind {
            LiteralKind::Boolean => Some((Included(PropKey::Boolean(false)), Included(PropKey::Boolean(true)))),
            LiteralKind::Numeric => Some((
                Included(PropKey::Numeric(NumKey(f64::NEG_INFINITY))),
                Included(PropKey::Numeric(NumKey(f64::INFINITY))),
            )),
            LiteralKind::Text => Some((Included(PropKey::Text(String::new())), Unbounded)),
            LiteralKind::Vector => None,
        }
    }
}

pub type IdSet = BTreeSet<EntityId>;

/// Secondary indexes over a knowledge base. Kept consistent with the primary
/// maps by [`super::KbState`]; checked by [`super::audit_indexes`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IndexSet {
    /// connector → links using it
    pub(crate) by_connector: BTreeMap<EntityId, IdSet>,
    /// node → connector → links whose first role binds the node
    pub(crate) by_subject: BTreeMap<EntityId, BTreeMap<EntityId, IdSet>>,
    /// node → connector → links whose second role binds the node
    pub(crate) by_object: BTreeMap<EntityId, BTreeMap<EntityId, IdSet>>,
    /// node → every link binding it in any role
    pub(crate) incident: BTreeMap<EntityId, IdSet>,
    /// concept → instances, closed over subconcepts
    pub(crate) by_concept: BTreeMap<EntityId, IdSet>,
    /// property name → value → nodes
    pub(crate) by_property: BTreeMap<String, BTreeMap<PropKey, IdSet>>,
    /// local part of a node or context id → ids
    pub(crate) by_local: BTreeMap<String, IdSet>,
    /// connector name → connectors
    pub(crate) connectors_by_name: BTreeMap<String, IdSet>,
}

pub(crate) fn insert_nested(
    map: &mut BTreeMap<EntityId, BTreeMap<EntityId, IdSet>>,
    outer: &EntityId,
    inner: &EntityId,
    value: &EntityId,
) {
    map.entry(outer.clone())
        .or_default()
        .entry(inner.clone())
        .or_default()
        .insert(value.clone());
}

pub(crate) fn remove_nested(
    map: &mut BTreeMap<EntityId, BTreeMap<EntityId, IdSet>>,
    outer: &EntityId,
    inner: &EntityId,
    value: &EntityId,
) {
    if let Some(by_inner) = map.get_mut(outer) {
        if let Some(set) = by_inner.get_mut(inner) {
            set.remove(value);
            if set.is_empty() {
                by_inner.remove(inner);
            }
        }
        if by_inner.is_empty() {
            map.remove(outer);
        }
    }
}

pub(crate) fn insert_set<K: Ord + Clone>(map: &mut BTreeMap<K, IdSet>, key: &K, value: &EntityId) {
    map.entry(key.clone()).or_default().insert(value.clone());
}

pub(crate) fn remove_set<K: Ord>(map: &mut BTreeMap<K, IdSet>, key: &K, value: &EntityId) {
    if let Some(set) = map.get_mut(key) {
        set.remove(value);
        if set.is_empty() {
            map.remove(key);
        }
    }
}

impl IndexSet {
    pub(crate) fn add_property(&mut self, node: &EntityId, name: &str, value: &Literal) {
        if let Some(key) = PropKey::from_literal(value) {
            self.by_property
                .entry(name.to_owned())
                .or_default()
                .entry(key)
                .or_default()
                .insert(node.clone());
        }
    }

    pub(crate) fn remove_property(&mut self, node: &EntityId, name: &str, value: &Literal) {
        let Some(key) = PropKey::from_literal(value) else {
            return;
        };
        if let Some(values) = self.by_property.get_mut(name) {
            remove_set(values, &key, node);
            if values.is_empty() {
                self.by_property.remove(name);
            }
        }
    }
}
