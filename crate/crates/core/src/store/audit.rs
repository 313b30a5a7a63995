use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use super::index::{insert_nested, insert_set, IdSet, IndexSet};
use super::KbState;
use crate::model::{default_context_id, instance_of_id, subclass_of_id, validate_link, EntityId, LAMBDA};

/// One disagreement between a stored index (or invariant) and its recomputation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub index: &'static str,
    pub detail: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.index, self.detail)
    }
}

/// Recomputes every index from the primary maps and diffs it against the
/// stored one; also checks referential integrity and context membership.
/// Never mutates.
pub fn audit_indexes(state: &KbState) -> Result<(), Vec<Divergence>> {
    let mut out = Vec::new();
    let expected = recompute(state, &mut out);
    let actual = &state.indexes;

    diff_map("by_connector", &expected.by_connector, &actual.by_connector, &mut out);
    diff_map("by_subject", &expected.by_subject, &actual.by_subject, &mut out);
    diff_map("by_object", &expected.by_object, &actual.by_object, &mut out);
    diff_map("incident", &expected.incident, &actual.incident, &mut out);
    diff_map("by_concept", &expected.by_concept, &actual.by_concept, &mut out);
    diff_map("by_property", &expected.by_property, &actual.by_property, &mut out);
    diff_map("by_local", &expected.by_local, &actual.by_local, &mut out);
    diff_map(
        "connectors_by_name",
        &expected.connectors_by_name,
        &actual.connectors_by_name,
        &mut out,
    );
    check_membership(state, &mut out);

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn diff_map<K: Ord + fmt::Debug, V: PartialEq + fmt::Debug>(
    index: &'static str,
    expected: &BTreeMap<K, V>,
    actual: &BTreeMap<K, V>,
    out: &mut Vec<Divergence>,
) {
    for (k, v) in expected {
        match actual.get(k) {
            None => out.push(Divergence {
                index,
                detail: format!("missing key {k:?}"),
            }),
            Some(a) if a != v => out.push(Divergence {
                index,
                detail: format!("key {k:?}: expected {v:?}, found {a:?}"),
            }),
            _ => {}
        }
    }
    for k in actual.keys().filter(|k| !expected.contains_key(k)) {
        out.push(Divergence {
            index,
            detail: format!("unexpected key {k:?}"),
        });
    }
}

fn recompute(state: &KbState, out: &mut Vec<Divergence>) -> IndexSet {
    let mut idx = IndexSet::default();
    let mut subclass: BTreeMap<EntityId, Vec<EntityId>> = BTreeMap::new();
    let mut instance: Vec<(EntityId, EntityId)> = Vec::new();

    for node in state.nodes.values() {
        insert_set(&mut idx.by_local, &node.id.local().to_owned(), &node.id);
        for (name, value) in &node.properties {
            idx.add_property(&node.id, name, value);
        }
        if !node.has_anchor(LAMBDA) {
            out.push(Divergence {
                index: "nodes",
                detail: format!("{} lacks the lambda anchor", node.id),
            });
        }
        if !state.contexts.contains_key(&node.context) {
            out.push(Divergence {
                index: "nodes",
                detail: format!("{} in unknown context {}", node.id, node.context),
            });
        }
    }
    for ctx in state.contexts.values() {
        insert_set(&mut idx.by_local, &ctx.id.local().to_owned(), &ctx.id);
    }
    for conn in state.connectors.values() {
        insert_set(&mut idx.connectors_by_name, &conn.name, &conn.id);
    }
    let lookup = |n: &EntityId, a: &str| {
        if let Some(node) = state.nodes.get(n) {
            Some(node.has_anchor(a))
        } else if state.contexts.contains_key(n) {
            Some(a == LAMBDA)
        } else {
            None
        }
    };
    for link in state.links.values() {
        let Some(conn) = state.connectors.get(&link.connector) else {
            out.push(Divergence {
                index: "links",
                detail: format!("{} uses unknown connector {}", link.id, link.connector),
            });
            continue;
        };
        if let Err(v) = validate_link(link, conn, &lookup) {
            out.push(Divergence {
                index: "links",
                detail: format!("{} invalid: {v:?}", link.id),
            });
            continue;
        }
        let s = link.bindings[conn.subject_role()].node.clone();
        let o = link.bindings[conn.object_role()].node.clone();
        insert_set(&mut idx.by_connector, &link.connector, &link.id);
        insert_nested(&mut idx.by_subject, &s, &link.connector, &link.id);
        insert_nested(&mut idx.by_object, &o, &link.connector, &link.id);
        for b in link.bindings.values() {
            insert_set(&mut idx.incident, &b.node, &link.id);
        }
        if link.connector == instance_of_id() {
            instance.push((s, o));
        } else if link.connector == subclass_of_id() {
            subclass.entry(s).or_default().push(o);
        }
    }
    for (x, c) in instance {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([c]);
        while let Some(d) = queue.pop_front() {
            if seen.insert(d.clone()) {
                queue.extend(subclass.get(&d).into_iter().flatten().cloned());
            }
        }
        for d in seen {
            insert_set(&mut idx.by_concept, &d, &x);
        }
    }
    idx
}

fn check_membership(state: &KbState, out: &mut Vec<Divergence>) {
    let mut expected: BTreeMap<EntityId, IdSet> = BTreeMap::new();
    let owners = state
        .nodes
        .values()
        .map(|n| (&n.id, n.context.clone()))
        .chain(state.links.values().map(|l| (&l.id, l.context.clone())))
        .chain(state.connectors.values().map(|c| (&c.id, c.context.clone())))
        .chain(
            state
                .contexts
                .values()
                .filter(|c| c.id != default_context_id())
                .map(|c| (&c.id, c.parent.clone().unwrap_or_else(default_context_id))),
        );
    for (id, owner) in owners {
        insert_set(&mut expected, &owner, id);
    }
    for ctx in state.contexts.values() {
        let want = expected.remove(&ctx.id).unwrap_or_default();
        if want != ctx.members {
            out.push(Divergence {
                index: "context members",
                detail: format!(
                    "{}: expected {} members, found {}",
                    ctx.id,
                    want.len(),
                    ctx.members.len()
                ),
            });
        }
    }
    for owner in expected.keys() {
        out.push(Divergence {
            index: "context members",
            detail: format!("entities assigned to unknown context {owner}"),
        });
    }
    // parent chains must terminate
    for ctx in state.contexts.values() {
        let mut seen = BTreeSet::new();
        let mut cur = ctx.parent.clone();
        while let Some(p) = cur {
            if !seen.insert(p.clone()) {
                out.push(Divergence {
                    index: "contexts",
                    detail: format!("parent cycle through {}", ctx.id),
                });
                break;
            }
            cur = state.contexts.get(&p).and_then(|c| c.parent.clone());
        }
    }
}
