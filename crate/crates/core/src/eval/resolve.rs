use std::collections::{BTreeMap, BTreeSet};

use super::{EvalError, FunctionRegistry};
use crate::hyql::{Condition, Operand, Query};
use crate::model::{CmpOp, EntityId, Literal, NAME_PROPERTY};
use crate::store::KbState;

/// What a variable ranges over.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// Instances of the concept, subconcepts included.
    Concept(EntityId),
    /// Members of the result of an earlier LET (by index).
    Let(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub domain: Domain,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RTerm {
    Var(usize),
    Const(EntityId),
}

#[derive(Clone, Debug, PartialEq)]
pub enum RCondition {
    /// Holds if some link with one of `connectors` binds `subject` in the
    /// connector's first role and `object` in its second.
    Link {
        subject: RTerm,
        connectors: Vec<EntityId>,
        object: RTerm,
    },
    Anchor {
        term: RTerm,
        anchor: String,
    },
    Property {
        term: RTerm,
        property: String,
        op: CmpOp,
        value: Literal,
    },
    Call {
        function: String,
        args: Vec<RTerm>,
        op: CmpOp,
        value: Literal,
    },
}

impl RCondition {
    pub fn terms(&self) -> Vec<&RTerm> {
        match self {
            RCondition::Link { subject, object, .. } => vec![subject, object],
            RCondition::Anchor { term, .. } | RCondition::Property { term, .. } => vec![term],
            RCondition::Call { args, .. } => args.iter().collect(),
        }
    }

    /// Distinct variables, ascending.
    pub fn vars(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .terms()
            .into_iter()
            .filter_map(|t| match t {
                RTerm::Var(v) => Some(*v),
                RTerm::Const(_) => None,
            })
            .collect();
        set.into_iter().collect()
    }
}

/// Variables and conditions of one WHERE clause. `sources[i]` is the query
/// text of `conditions[i]`, for error messages.
#[derive(Clone, Debug, PartialEq)]
pub struct Scope {
    pub variables: Vec<Variable>,
    pub conditions: Vec<RCondition>,
    pub sources: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedLet {
    pub name: String,
    pub scope: Scope,
    pub get: RTerm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedQuery {
    /// Store generation the names were resolved against.
    pub generation: u64,
    pub lets: Vec<ResolvedLet>,
    pub main: Scope,
    pub select: Vec<(String, RTerm)>,
    /// Identifiers that resolved to individual nodes, across all scopes.
    pub constants: BTreeMap<String, EntityId>,
    /// Name collisions settled by the constant-first rule.
    pub warnings: Vec<String>,
}

struct Resolver<'a> {
    state: &'a KbState,
    registry: &'a FunctionRegistry,
    lets: Vec<String>,
    warnings: Vec<String>,
}

struct ScopeBuilder {
    variables: Vec<Variable>,
    names: BTreeMap<String, RTerm>,
}

impl Resolver<'_> {
    fn individual(&self, name: &str) -> Result<Option<EntityId>, EvalError> {
        let st = self.state;
        let mut found: BTreeSet<EntityId> = st
            .ids_with_local(name)
            .iter()
            .filter(|id| st.node(id).is_some())
            .cloned()
            .collect();
        found.extend(
            st.property_equals(NAME_PROPERTY, &Literal::Text(name.into()))
                .iter()
                .cloned(),
        );
        found.retain(|id| !st.is_concept(id));
        single(name, found)
    }

    fn concept(&self, name: &str) -> Result<Option<EntityId>, EvalError> {
        let st = self.state;
        let mut found: BTreeSet<EntityId> = st.concepts_named(name).into_iter().collect();
        found.extend(st.ids_with_local(name).iter().filter(|id| st.is_concept(id)).cloned());
        single(name, found)
    }

    fn term(&mut self, scope: &mut ScopeBuilder, name: &str) -> Result<RTerm, EvalError> {
        if let Some(t) = scope.names.get(name) {
            return Ok(t.clone());
        }
        let term = if let Some(i) = self.lets.iter().position(|l| l == name) {
            scope.new_var(name, Domain::Let(i))
        } else {
            match (self.individual(name)?, self.concept(name)?) {
                (Some(id), concept) => {
                    if let Some(c) = concept {
                        self.warnings.push(format!(
                            "`{name}` names both individual {id} and concept {c}; using the individual"
                        ));
                    }
                    RTerm::Const(id)
                }
                (None, Some(c)) => scope.new_var(name, Domain::Concept(c)),
                (None, None) => return Err(EvalError::Unresolved(name.to_owned())),
            }
        };
        scope.names.insert(name.to_owned(), term.clone());
        Ok(term)
    }

    fn scope(&mut self, conditions: &[Condition]) -> Result<(Scope, ScopeBuilder), EvalError> {
        let mut b = ScopeBuilder {
            variables: Vec::new(),
            names: BTreeMap::new(),
        };
        let mut out = Vec::with_capacity(conditions.len());
        for cond in conditions {
            let r = match cond {
                Condition::Link {
                    subject,
                    connector,
                    object,
                } => {
                    let connectors: Vec<EntityId> = self.state.connectors_named(connector).iter().cloned().collect();
                    if connectors.is_empty() {
                        return Err(EvalError::UnknownConnector(connector.clone()));
                    }
                    RCondition::Link {
                        subject: self.term(&mut b, subject)?,
                        connectors,
                        object: self.term(&mut b, object)?,
                    }
                }
                Condition::Anchor { entity, anchor } => RCondition::Anchor {
                    term: self.term(&mut b, entity)?,
                    anchor: anchor.clone(),
                },
                Condition::Compare {
                    lhs: Operand::Property { entity, property },
                    op,
                    rhs,
                } => RCondition::Property {
                    term: self.term(&mut b, entity)?,
                    property: property.clone(),
                    op: *op,
                    value: rhs.clone(),
                },
                Condition::Compare {
                    lhs: Operand::Call { function, args },
                    op,
                    rhs,
                } => {
                    let def = self
                        .registry
                        .get(function)
                        .ok_or_else(|| EvalError::UnknownFunction(function.clone()))?;
                    if def.arity != args.len() {
                        return Err(EvalError::Arity {
                            function: function.clone(),
                            expected: def.arity,
                            found: args.len(),
                        });
                    }
                    let compatible = def.returns == rhs.kind();
                    if !compatible {
                        return Err(EvalError::ReturnKind {
                            function: function.clone(),
                            returns: def.returns,
                            expected: rhs.kind(),
                        });
                    }
                    let args = args.iter().map(|a| self.term(&mut b, a)).collect::<Result<_, _>>()?;
                    RCondition::Call {
                        function: function.clone(),
                        args,
                        op: *op,
                        value: rhs.clone(),
                    }
                }
            };
            out.push(r);
        }
        let scope = Scope {
            variables: b.variables.clone(),
            conditions: out,
            sources: conditions.iter().map(|c| c.to_string()).collect(),
        };
        Ok((scope, b))
    }
}

impl ScopeBuilder {
    fn new_var(&mut self, name: &str, domain: Domain) -> RTerm {
        self.variables.push(Variable {
            name: name.to_owned(),
            domain,
        });
        RTerm::Var(self.variables.len() - 1)
    }
}

fn single(name: &str, found: BTreeSet<EntityId>) -> Result<Option<EntityId>, EvalError> {
    match found.len() {
        0 => Ok(None),
        1 => Ok(found.into_iter().next()),
        _ => Err(EvalError::Ambiguous {
            name: name.to_owned(),
            candidates: found.into_iter().collect(),
        }),
    }
}

/// Classifies each identifier: LET name, then connector (middle of a link
/// pattern), then individual node (by id local part or `name`), then
/// concept. Individuals win over same-named concepts, with a warning.
pub fn resolve(ast: &Query, state: &KbState, registry: &FunctionRegistry) -> Result<ResolvedQuery, EvalError> {
    let mut r = Resolver {
        state,
        registry,
        lets: Vec::new(),
        warnings: Vec::new(),
    };
    let mut lets = Vec::new();
    let mut constants = BTreeMap::new();
    let mut collect = |b: &ScopeBuilder| {
        for (name, t) in &b.names {
            if let RTerm::Const(id) = t {
                constants.insert(name.clone(), id.clone());
            }
        }
    };
    for l in &ast.lets {
        if r.concept(&l.name)?.is_some() {
            return Err(EvalError::ShadowsConcept(l.name.clone()));
        }
        let (scope, b) = r.scope(&l.conditions)?;
        let get = b.names[&l.get].clone();
        collect(&b);
        lets.push(ResolvedLet {
            name: l.name.clone(),
            scope,
            get,
        });
        r.lets.push(l.name.clone());
    }
    let (main, b) = r.scope(&ast.conditions)?;
    collect(&b);
    let select = ast.select.iter().map(|s| (s.clone(), b.names[s].clone())).collect();
    Ok(ResolvedQuery {
        generation: state.generation(),
        lets,
        main,
        select,
        constants,
        warnings: r.warnings,
    })
}
