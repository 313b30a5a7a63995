use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::EvalError;
use crate::model::{EntityId, Literal, LiteralKind};
use crate::store::KbState;

/// Node property holding the numeric feature vector compared by `similarity`.
pub const FEATURES_PROPERTY: &str = "features";

type Callable = dyn Fn(&KbState, &[EntityId]) -> Result<Literal, String> + Send + Sync;

/// A query function. It must be pure with respect to the snapshot it is
/// given, and always return a literal of kind `returns`.
#[derive(Clone)]
pub struct FunctionDef {
    pub arity: usize,
    pub returns: LiteralKind,
    call: Arc<Callable>,
}

impl FunctionDef {
    pub fn call(&self, state: &KbState, args: &[EntityId]) -> Result<Literal, String> {
        (self.call)(state, args)
    }
}

impl fmt::Debug for FunctionDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionDef")
            .field("arity", &self.arity)
            .field("returns", &self.returns)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub struct FunctionRegistry {
    functions: BTreeMap<String, FunctionDef>,
}

impl Default for FunctionRegistry {
    /// The built-ins: `similarity`, plus `similarSiesmic` as the spelling
    /// used in the seismic investigations.
    fn default() -> Self {
        let mut r = FunctionRegistry::empty();
        for name in ["similarity", "similarSiesmic"] {
            r.register(name, 2, LiteralKind::Numeric, |st, args| {
                similarity(st, &args[0], &args[1]).map(Literal::Number)
            })
            .expect("fresh registry");
        }
        r
    }
}

impl FunctionRegistry {
    pub fn empty() -> Self {
        FunctionRegistry {
            functions: BTreeMap::new(),
        }
    }

    pub fn register(
        &mut self,
        name: &str,
        arity: usize,
        returns: LiteralKind,
        f: impl Fn(&KbState, &[EntityId]) -> Result<Literal, String> + Send + Sync + 'static,
    ) -> Result<(), EvalError> {
        if self.functions.contains_key(name) {
            return Err(EvalError::DuplicateFunction(name.to_owned()));
        }
        self.functions.insert(
            name.to_owned(),
            FunctionDef {
                arity,
                returns,
                call: Arc::new(f),
            },
        );
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.get(name)
    }

    /// Calls `name`, checking arity.
    pub fn call(&self, name: &str, state: &KbState, args: &[EntityId]) -> Result<Literal, EvalError> {
        let def = self
            .get(name)
            .ok_or_else(|| EvalError::UnknownFunction(name.to_owned()))?;
        if def.arity != args.len() {
            return Err(EvalError::Arity {
                function: name.to_owned(),
                expected: def.arity,
                found: args.len(),
            });
        }
        def.call(state, args).map_err(|message| EvalError::Function {
            function: name.to_owned(),
            message,
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.functions.keys().map(String::as_str)
    }
}

/// Cosine of the `features` vectors of `a` and `b`, clamped to [0, 1].
/// Zero when either node lacks features or has an all-zero vector.
pub fn similarity(state: &KbState, a: &EntityId, b: &EntityId) -> Result<f64, String> {
    let features = |id: &EntityId| match state.node(id).and_then(|n| n.property(FEATURES_PROPERTY)) {
        Some(Literal::Vector(v)) => Ok(Some(v)),
        None => Ok(None),
        Some(other) => Err(format!("{id}: `features` is {}, not a vector", other.kind())),
    };
    let (Some(x), Some(y)) = (features(a)?, features(b)?) else {
        return Ok(0.0);
    };
    if x.len() != y.len() {
        return Err(format!("{a} has {} features, {b} has {}", x.len(), y.len()));
    }
    let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
    let xx: f64 = x.iter().map(|p| p * p).sum();
    let yy: f64 = y.iter().map(|q| q * q).sum();
    if xx == 0.0 || yy == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (xx * yy).sqrt()).clamp(0.0, 1.0))
}
