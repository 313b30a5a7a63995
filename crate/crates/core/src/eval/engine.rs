//! Index-driven evaluation.
//!
//! Per scope: variable domains come from the concept index (or a LET
//! result); single-variable conditions filter them, seeded from the link
//! index when a pattern pins a variable to a constant; variables joined by
//! multi-variable conditions are split into connected components, and each
//! component is solved by backtracking, smallest domain first, extending
//! along link patterns through the subject/object indexes. Independent
//! components multiply.

use std::collections::{BTreeMap, BTreeSet};

use super::resolve::{Domain, RCondition, RTerm, ResolvedQuery, Scope};
use super::{EvalError, FunctionRegistry, ResultSet};
use crate::model::{EntityId, Literal};
use crate::store::KbState;

type Assignment<'a> = Vec<Option<&'a EntityId>>;

pub fn evaluate(query: &ResolvedQuery, state: &KbState, registry: &FunctionRegistry) -> Result<ResultSet, EvalError> {
    if query.generation != state.generation() {
        return Err(EvalError::Stale {
            resolved: query.generation,
            current: state.generation(),
        });
    }
    let mut let_sets: Vec<BTreeSet<EntityId>> = Vec::with_capacity(query.lets.len());
    for l in &query.lets {
        let (_, mut sets) = solve(&l.scope, state, registry, &let_sets, std::slice::from_ref(&l.get))?;
        let_sets.push(sets.pop().unwrap_or_default());
    }
    let terms: Vec<RTerm> = query.select.iter().map(|(_, t)| t.clone()).collect();
    let (matches, sets) = solve(&query.main, state, registry, &let_sets, &terms)?;
    Ok(ResultSet {
        columns: query.select.iter().map(|(n, _)| n.clone()).zip(sets).collect(),
        matches,
    })
}

struct Solver<'a> {
    state: &'a KbState,
    registry: &'a FunctionRegistry,
    scope: &'a Scope,
}

/// Returns the number of satisfying assignments and the distinct values of
/// each `select` term across them.
pub(crate) fn solve(
    scope: &Scope,
    state: &KbState,
    registry: &FunctionRegistry,
    let_sets: &[BTreeSet<EntityId>],
    select: &[RTerm],
) -> Result<(u64, Vec<BTreeSet<EntityId>>), EvalError> {
    let nothing = || (0, vec![BTreeSet::new(); select.len()]);
    let n = scope.variables.len();
    let raw: Vec<&BTreeSet<EntityId>> = scope
        .variables
        .iter()
        .map(|v| match &v.domain {
            Domain::Concept(c) => state.instances_of(c),
            Domain::Let(i) => &let_sets[*i],
        })
        .collect();
    type_check(scope, state, &raw)?;

    let s = Solver { state, registry, scope };
    let mut unary: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut joins: Vec<usize> = Vec::new();
    for (i, cond) in scope.conditions.iter().enumerate() {
        match cond.vars().as_slice() {
            [] => {
                if !s.holds_at(i, &[])? {
                    return Ok(nothing());
                }
            }
            [v] => unary[*v].push(i),
            _ => joins.push(i),
        }
    }

    let mut filtered: Vec<BTreeSet<&EntityId>> = Vec::with_capacity(n);
    for v in 0..n {
        let f = s.filter(v, raw[v], &unary[v])?;
        if f.is_empty() {
            return Ok(nothing());
        }
        filtered.push(f);
    }

    let selected: BTreeSet<usize> = select
        .iter()
        .filter_map(|t| match t {
            RTerm::Var(v) => Some(*v),
            RTerm::Const(_) => None,
        })
        .collect();
    let mut total: u64 = 1;
    let mut projections: BTreeMap<usize, BTreeSet<&EntityId>> = BTreeMap::new();
    for (vars, conds) in components(n, scope, &joins) {
        let (count, proj) = s.component(&vars, &conds, &filtered, &selected)?;
        if count == 0 {
            return Ok(nothing());
        }
        total = total.saturating_mul(count);
        projections.extend(proj);
    }
    let sets = select
        .iter()
        .map(|t| match t {
            RTerm::Var(v) => projections[v].iter().map(|&id| id.clone()).collect(),
            RTerm::Const(id) => BTreeSet::from([id.clone()]),
        })
        .collect();
    Ok((total, sets))
}

/// Every value a property comparison could meet must have the literal's kind.
fn type_check(scope: &Scope, state: &KbState, raw: &[&BTreeSet<EntityId>]) -> Result<(), EvalError> {
    for (i, cond) in scope.conditions.iter().enumerate() {
        let RCondition::Property {
            term, property, value, ..
        } = cond
        else {
            continue;
        };
        let entities: Box<dyn Iterator<Item = &EntityId>> = match term {
            RTerm::Var(v) => Box::new(raw[*v].iter()),
            RTerm::Const(id) => Box::new(std::iter::once(id)),
        };
        for e in entities {
            if let Some(found) = state.node(e).and_then(|n| n.property(property)) {
                if found.compare(value).is_err() {
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
    Ok(())
}

/// Groups variables connected by multi-variable conditions. Components come
/// out ordered by their smallest variable; each lists its conditions.
fn components(n: usize, scope: &Scope, joins: &[usize]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut x = x;
        while p[x] != r {
            let next = p[x];
            p[x] = r;
            x = next;
        }
        r
    }
    for &c in joins {
        let vars = scope.conditions[c].vars();
        for w in &vars[1..] {
            let (a, b) = (find(&mut parent, vars[0]), find(&mut parent, *w));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for v in 0..n {
        let root = find(&mut parent, v);
        groups.entry(root).or_default().0.push(v);
    }
    for &c in joins {
        let root = find(&mut parent, scope.conditions[c].vars()[0]);
        groups.get_mut(&root).unwrap().1.push(c);
    }
    groups.into_values().collect()
}

/// One step of a component's search plan.
struct Step {
    var: usize,
    /// Link condition used to enumerate candidates from an earlier variable.
    generator: Option<usize>,
    /// Conditions that become fully bound at this step.
    checks: Vec<usize>,
}

impl<'a> Solver<'a> {
    fn value<'b>(&self, term: &'b RTerm, assign: &[Option<&'b EntityId>]) -> &'b EntityId {
        match term {
            RTerm::Var(v) => assign[*v].expect("variable bound before use"),
            RTerm::Const(id) => id,
        }
    }

    fn linked(&self, s: &EntityId, connectors: &[EntityId], o: &EntityId) -> bool {
        let st = self.state;
        connectors.iter().any(|conn| {
            let out = st.links_from(s, conn);
            let inc = st.links_to(o, conn);
            if out.len() <= inc.len() {
                out.iter().any(|l| st.link(l).and_then(|l| st.object_of(l)) == Some(o))
            } else {
                inc.iter().any(|l| st.link(l).and_then(|l| st.subject_of(l)) == Some(s))
            }
        })
    }

    fn compare(
        &self,
        found: &Literal,
        cond: usize,
        op: crate::model::CmpOp,
        value: &Literal,
        entity: &EntityId,
    ) -> Result<bool, EvalError> {
        match found.compare(value) {
            Ok(ord) => Ok(op.holds(ord)),
            Err(_) => Err(EvalError::KindMismatch {
                condition: self.scope.sources[cond].clone(),
                entity: entity.to_string(),
                found: found.kind(),
                expected: value.kind(),
            }),
        }
    }

    fn holds_at(&self, index: usize, assign: &[Option<&EntityId>]) -> Result<bool, EvalError> {
        let st = self.state;
        match &self.scope.conditions[index] {
            RCondition::Link {
                subject,
                connectors,
                object,
            } => Ok(self.linked(self.value(subject, assign), connectors, self.value(object, assign))),
            RCondition::Anchor { term, anchor } => Ok(st.anchor_exists(self.value(term, assign), anchor) == Some(true)),
            RCondition::Property {
                term,
                property,
                op,
                value,
            } => {
                let e = self.value(term, assign);
                match st.node(e).and_then(|n| n.property(property)) {
                    None => Ok(false),
                    Some(found) => self.compare(found, index, *op, value, e),
                }
            }
            RCondition::Call {
                function,
                args,
                op,
                value,
            } => {
                let ids: Vec<EntityId> = args.iter().map(|a| self.value(a, assign).clone()).collect();
                let result = self.registry.call(function, st, &ids)?;
                match result.compare(value) {
                    Ok(ord) => Ok(op.holds(ord)),
                    Err(_) => Err(EvalError::ReturnKind {
                        function: function.clone(),
                        returns: result.kind(),
                        expected: value.kind(),
                    }),
                }
            }
        }
    }

    /// Domain of `v` after its single-variable conditions.
    fn filter(
        &self,
        v: usize,
        raw: &'a BTreeSet<EntityId>,
        conds: &[usize],
    ) -> Result<BTreeSet<&'a EntityId>, EvalError> {
        let st = self.state;
        // A pattern tying v to a constant enumerates candidates from the index.
        let seed = conds.iter().copied().find_map(|i| match &self.scope.conditions[i] {
            RCondition::Link {
                subject: RTerm::Var(_),
                connectors,
                object: RTerm::Const(o),
            } => Some((i, connectors, o, true)),
            RCondition::Link {
                subject: RTerm::Const(s),
                connectors,
                object: RTerm::Var(_),
            } => Some((i, connectors, s, false)),
            _ => None,
        });
        let candidates: BTreeSet<&'a EntityId> = match seed {
            Some((_, connectors, anchor_node, var_is_subject)) => {
                let mut out = BTreeSet::new();
                for conn in connectors {
                    let links = if var_is_subject {
                        st.links_to(anchor_node, conn)
                    } else {
                        st.links_from(anchor_node, conn)
                    };
                    for l in links {
                        let link = st.link(l).expect("indexed link exists");
                        let end = if var_is_subject {
                            st.subject_of(link)
                        } else {
                            st.object_of(link)
                        };
                        if let Some(found) = end.and_then(|e| raw.get(e)) {
                            out.insert(found);
                        }
                    }
                }
                out
            }
            None => raw.iter().collect(),
        };
        let seed_index = seed.map(|(i, ..)| i);
        let mut assign: Assignment = vec![None; self.scope.variables.len()];
        let mut kept = BTreeSet::new();
        'candidates: for e in candidates {
            assign[v] = Some(e);
            for &i in conds {
                if Some(i) != seed_index && !self.holds_at(i, &assign)? {
                    continue 'candidates;
                }
            }
            kept.insert(e);
        }
        Ok(kept)
    }

    fn plan(&self, vars: &[usize], conds: &[usize], filtered: &[BTreeSet<&EntityId>]) -> Vec<Step> {
        let mut order: Vec<usize> = Vec::with_capacity(vars.len());
        let mut remaining: BTreeSet<usize> = vars.iter().copied().collect();
        let size = |v: usize| (filtered[v].len(), v);
        let start = *vars.iter().min_by_key(|&&v| size(v)).unwrap();
        remaining.remove(&start);
        order.push(start);
        while !remaining.is_empty() {
            let adjacent = remaining
                .iter()
                .copied()
                .filter(|v| {
                    conds.iter().any(|&c| {
                        let cv = self.scope.conditions[c].vars();
                        cv.contains(v) && cv.iter().any(|w| order.contains(w))
                    })
                })
                .min_by_key(|&v| size(v));
            let next = adjacent.unwrap_or_else(|| *remaining.iter().min_by_key(|&&v| size(v)).unwrap());
            remaining.remove(&next);
            order.push(next);
        }

        let mut steps = Vec::with_capacity(order.len());
        let mut bound: BTreeSet<usize> = BTreeSet::new();
        for &v in &order {
            let generator = conds.iter().copied().find(|&c| match &self.scope.conditions[c] {
                RCondition::Link {
                    subject: RTerm::Var(s),
                    object: RTerm::Var(o),
                    ..
                } => (*s == v && bound.contains(o)) || (*o == v && bound.contains(s)),
                _ => false,
            });
            bound.insert(v);
            let checks = conds
                .iter()
                .copied()
                .filter(|&c| Some(c) != generator)
                .filter(|&c| {
                    let cv = self.scope.conditions[c].vars();
                    cv.contains(&v) && cv.iter().all(|w| bound.contains(w))
                })
                .collect();
            steps.push(Step {
                var: v,
                generator,
                checks,
            });
        }
        steps
    }

    fn component(
        &self,
        vars: &[usize],
        conds: &[usize],
        filtered: &[BTreeSet<&'a EntityId>],
        selected: &BTreeSet<usize>,
    ) -> Result<(u64, BTreeMap<usize, BTreeSet<&'a EntityId>>), EvalError> {
        let wanted: Vec<usize> = vars.iter().copied().filter(|v| selected.contains(v)).collect();
        if let [v] = vars {
            let proj = wanted.iter().map(|_| (*v, filtered[*v].clone())).collect();
            return Ok((filtered[*v].len() as u64, proj));
        }
        let plan = self.plan(vars, conds, filtered);
        let mut search = Search {
            solver: self,
            plan: &plan,
            filtered,
            wanted: &wanted,
            assign: vec![None; self.scope.variables.len()],
            count: 0,
            proj: wanted.iter().map(|&v| (v, BTreeSet::new())).collect(),
        };
        search.run(0)?;
        Ok((search.count, search.proj))
    }

    /// Candidates for the step's variable reachable over its generator link.
    fn neighbours(
        &self,
        step: &Step,
        assign: &[Option<&'a EntityId>],
        filtered: &BTreeSet<&'a EntityId>,
    ) -> Vec<&'a EntityId> {
        let st = self.state;
        let Some(g) = step.generator else {
            return filtered.iter().copied().collect();
        };
        let RCondition::Link {
            subject,
            connectors,
            object,
        } = &self.scope.conditions[g]
        else {
            unreachable!("generators are link patterns")
        };
        let forward = *object == RTerm::Var(step.var);
        let from = if forward { subject } else { object };
        let from = match from {
            RTerm::Var(w) => assign[*w].expect("generator source bound"),
            RTerm::Const(id) => id,
        };
        let mut out = BTreeSet::new();
        for conn in connectors {
            let links = if forward {
                st.links_from(from, conn)
            } else {
                st.links_to(from, conn)
            };
            for l in links {
                let link = st.link(l).expect("indexed link exists");
                let end = if forward {
                    st.object_of(link)
                } else {
                    st.subject_of(link)
                };
                if let Some(found) = end.and_then(|e| filtered.get(e)) {
                    out.insert(*found);
                }
            }
        }
        out.into_iter().collect()
    }
}

struct Search<'s, 'a> {
    solver: &'s Solver<'a>,
    plan: &'s [Step],
    filtered: &'s [BTreeSet<&'a EntityId>],
    wanted: &'s [usize],
    assign: Assignment<'a>,
    count: u64,
    proj: BTreeMap<usize, BTreeSet<&'a EntityId>>,
}

impl<'a> Search<'_, 'a> {
    fn run(&mut self, depth: usize) -> Result<(), EvalError> {
        if depth == self.plan.len() {
            self.count += 1;
            for &v in self.wanted {
                let id = self.assign[v].expect("complete assignment");
                self.proj.get_mut(&v).unwrap().insert(id);
            }
            return Ok(());
        }
        let step = &self.plan[depth];
        let candidates = self.solver.neighbours(step, &self.assign, &self.filtered[step.var]);
        'candidates: for e in candidates {
            self.assign[step.var] = Some(e);
            for &c in &step.checks {
                if !self.solver.holds_at(c, &self.assign)? {
                    continue 'candidates;
                }
            }
            self.run(depth + 1)?;
        }
        self.assign[step.var] = None;
        Ok(())
    }
}
