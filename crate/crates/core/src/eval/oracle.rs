//! Reference evaluator: enumerates the full cross-product of variable
//! domains and tests every condition on every tuple. Uses only the primary
//! maps of the store, never its indexes.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use super::resolve::{Domain, RCondition, RTerm, ResolvedQuery, Scope};
use super::{EvalError, FunctionRegistry, ResultSet};
use crate::model::{instance_of_id, subclass_of_id, EntityId, LiteralKind};
use crate::store::KbState;

/// Largest cross-product the oracle will enumerate, per scope.
pub const ORACLE_LIMIT: u128 = 10_000_000;

struct Facts {
    /// (connector, subject, object) of every link.
    links: HashSet<(EntityId, EntityId, EntityId)>,
    /// Concept → every instance, through subClassOf chains.
    instances: BTreeMap<EntityId, BTreeSet<EntityId>>,
}

impl Facts {
    fn scan(state: &KbState) -> Facts {
        let mut links = HashSet::new();
        let mut subclass: BTreeMap<EntityId, Vec<EntityId>> = BTreeMap::new();
        let mut typed: Vec<(EntityId, EntityId)> = Vec::new();
        for link in state.links() {
            let conn = state.connector(&link.connector).expect("stored link has connector");
            let s = link.bindings[&conn.roles()[0]].node.clone();
            let o = link.bindings[&conn.roles()[1]].node.clone();
            if link.connector == instance_of_id() {
                typed.push((s.clone(), o.clone()));
            } else if link.connector == subclass_of_id() {
                subclass.entry(s.clone()).or_default().push(o.clone());
            }
            links.insert((link.connector.clone(), s, o));
        }
        let mut instances: BTreeMap<EntityId, BTreeSet<EntityId>> = BTreeMap::new();
        for (x, c) in typed {
            let mut seen = BTreeSet::new();
            let mut queue = VecDeque::from([c]);
            while let Some(d) = queue.pop_front() {
                if seen.insert(d.clone()) {
                    if let Some(sup) = subclass.get(&d) {
                        queue.extend(sup.iter().cloned());
                    }
                }
            }
            for d in seen {
                instances.entry(d).or_default().insert(x.clone());
            }
        }
        Facts { links, instances }
    }
}

pub fn oracle_evaluate(
    query: &ResolvedQuery,
    state: &KbState,
    registry: &FunctionRegistry,
) -> Result<ResultSet, EvalError> {
    if query.generation != state.generation() {
        return Err(EvalError::Stale {
            resolved: query.generation,
            current: state.generation(),
        });
    }
    let facts = Facts::scan(state);
    let mut let_sets: Vec<BTreeSet<EntityId>> = Vec::new();
    for l in &query.lets {
        let (_, sets) = enumerate(
            &l.scope,
            state,
            registry,
            &facts,
            &let_sets,
            std::slice::from_ref(&l.get),
        )?;
        let_sets.push(sets.into_iter().next().unwrap());
    }
    let select: Vec<RTerm> = query.select.iter().map(|(_, t)| t.clone()).collect();
    let (matches, sets) = enumerate(&query.main, state, registry, &facts, &let_sets, &select)?;
    Ok(ResultSet {
        columns: query.select.iter().map(|(n, _)| n.clone()).zip(sets).collect(),
        matches,
    })
}

fn enumerate(
    scope: &Scope,
    state: &KbState,
    registry: &FunctionRegistry,
    facts: &Facts,
    let_sets: &[BTreeSet<EntityId>],
    select: &[RTerm],
) -> Result<(u64, Vec<BTreeSet<EntityId>>), EvalError> {
    let empty = BTreeSet::new();
    let domains: Vec<Vec<&EntityId>> = scope
        .variables
        .iter()
        .map(|v| match &v.domain {
            Domain::Concept(c) => facts.instances.get(c).unwrap_or(&empty).iter().collect(),
            Domain::Let(i) => let_sets[*i].iter().collect(),
        })
        .collect();
    let size: u128 = domains.iter().map(|d| d.len() as u128).product();
    if size > ORACLE_LIMIT {
        return Err(EvalError::TooLarge(size));
    }

    // kind errors are raised for any value in reach, matched or not
    for (i, cond) in scope.conditions.iter().enumerate() {
        if let RCondition::Property {
            term, property, value, ..
        } = cond
        {
            let reach: Vec<&EntityId> = match term {
                RTerm::Var(v) => domains[*v].clone(),
                RTerm::Const(id) => vec![id],
            };
            for e in reach {
                let Some(node) = state.node(e) else { continue };
                if let Some(found) = node.properties.get(property) {
                    if found.kind() != value.kind() || found.kind() == LiteralKind::Vector {
                        return Err(EvalError::KindMismatch {
                            condition: scope.sources[i].clone(),
                            entity: e.to_string(),
                            found: found.kind(),
                            expected: value.kind(),
                        });
                    }
                }
            }
        }
    }

    let mut matches = 0u64;
    let mut sets = vec![BTreeSet::new(); select.len()];
    let mut cursor = vec![0usize; domains.len()];
    if size == 0 {
        return Ok((0, sets));
    }
    loop {
        let tuple: Vec<&EntityId> = cursor.iter().zip(&domains).map(|(&i, d)| d[i]).collect();
        let value = |t: &RTerm| -> EntityId {
            match t {
                RTerm::Var(v) => tuple[*v].clone(),
                RTerm::Const(id) => id.clone(),
            }
        };
        // no short-circuit: every condition is tested on every tuple
        let mut all = true;
        for cond in &scope.conditions {
            let ok = match cond {
                RCondition::Link {
                    subject,
                    connectors,
                    object,
                } => {
                    let (s, o) = (value(subject), value(object));
                    connectors
                        .iter()
                        .any(|c| facts.links.contains(&(c.clone(), s.clone(), o.clone())))
                }
                RCondition::Anchor { term, anchor } => {
                    let e = value(term);
                    match state.node(&e) {
                        Some(n) => n.anchors().any(|a| &a.name == anchor),
                        None => state.context(&e).is_some() && anchor == crate::model::LAMBDA,
                    }
                }
                RCondition::Property {
                    term,
                    property,
                    op,
                    value: lit,
                } => state
                    .node(&value(term))
                    .and_then(|n| n.properties.get(property))
                    .map(|found| op.holds(found.compare(lit).expect("kinds checked")))
                    .unwrap_or(false),
                RCondition::Call {
                    function,
                    args,
                    op,
                    value: lit,
                } => {
                    let ids: Vec<EntityId> = args.iter().map(value).collect();
                    let result = registry.call(function, state, &ids)?;
                    match result.compare(lit) {
                        Ok(ord) => op.holds(ord),
                        Err(_) => {
                            return Err(EvalError::ReturnKind {
                                function: function.clone(),
                                returns: result.kind(),
                                expected: lit.kind(),
                            })
                        }
                    }
                }
            };
            all &= ok;
        }
        if all {
            matches += 1;
            for (set, t) in sets.iter_mut().zip(select) {
                set.insert(value(t));
            }
        }
        // odometer
        let mut k = 0;
        loop {
            if k == cursor.len() {
                return Ok((matches, sets));
            }
            cursor[k] += 1;
            if cursor[k] < domains[k].len() {
                break;
            }
            cursor[k] = 0;
            k += 1;
        }
    }
}
