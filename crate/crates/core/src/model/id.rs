use std::borrow::Borrow;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ModelError;

/// Longest namespace accepted in an id.
pub const MAX_NAMESPACE_LEN: usize = 32;

/// Namespace reserved for engine built-ins (`hk:default`, `hk:instanceOf`, ...).
pub const RESERVED_NAMESPACE: &str = "hk";

/// Identifier of any entity in a knowledge base, written `namespace:local`.
///
/// The text is kept in one shared buffer so clones are cheap; ordering,
/// equality and hashing all follow the text form.
#[derive(Clone)]
pub struct EntityId {
    text: Arc<str>,
    split: usize,
}

impl EntityId {
    pub fn new(namespace: &str, local: &str) -> Result<Self, ModelError> {
        validate_namespace(namespace)?;
        validate_local(local)?;
        Ok(EntityId {
            text: format!("{namespace}:{local}").into(),
            split: namespace.len(),
        })
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let Some((ns, local)) = text.split_once(':') else {
            return Err(ModelError::InvalidId(format!("`{text}` has no namespace separator")));
        };
        validate_namespace(ns)?;
        validate_local(local)?;
        Ok(EntityId {
            text: text.into(),
            split: ns.len(),
        })
    }

    pub fn namespace(&self) -> &str {
        &self.text[..self.split]
    }

    pub fn local(&self) -> &str {
        &self.text[self.split + 1..]
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn is_reserved(&self) -> bool {
        self.namespace() == RESERVED_NAMESPACE
    }
}

fn validate_namespace(ns: &str) -> Result<(), ModelError> {
    if ns.is_empty() || ns.len() > MAX_NAMESPACE_LEN {
        return Err(ModelError::InvalidId(format!(
            "namespace `{ns}` must be 1..={MAX_NAMESPACE_LEN} characters"
        )));
    }
    if !ns
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
    {
        return Err(ModelError::InvalidId(format!(
            "namespace `{ns}` has illegal characters"
        )));
    }
    Ok(())
}

fn validate_local(local: &str) -> Result<(), ModelError> {
    if local.is_empty() {
        return Err(ModelError::InvalidId("local part is empty".into()));
    }
    if local.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(ModelError::InvalidId(format!(
            "local part `{local}` contains whitespace"
        )));
    }
    Ok(())
}

impl PartialEq for EntityId {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Eq for EntityId {}

impl Hash for EntityId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.text.hash(state)
    }
}

impl PartialOrd for EntityId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EntityId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.text.cmp(&other.text)
    }
}

impl Borrow<str> for EntityId {
    fn borrow(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl fmt::Debug for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EntityId({})", self.text)
    }
}

impl FromStr for EntityId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityId::parse(s)
    }
}

impl Serialize for EntityId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        EntityId::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splits_at_first_colon() {
        let id = EntityId::parse("mls:Run").unwrap();
        assert_eq!(id.namespace(), "mls");
        assert_eq!(id.local(), "Run");

        let id = EntityId::parse("a:b:c").unwrap();
        assert_eq!(id.namespace(), "a");
        assert_eq!(id.local(), "b:c");
    }

    #[test]
    fn rejects_malformed() {
        assert!(EntityId::parse("nocolon").is_err());
        assert!(EntityId::parse(":x").is_err());
        assert!(EntityId::parse("ns:").is_err());
        assert!(EntityId::parse("ns:has space").is_err());
        assert!(EntityId::parse(&format!("{}:x", "n".repeat(33))).is_err());
    }

    #[test]
    fn reserved_namespace() {
        assert!(EntityId::parse("hk:default").unwrap().is_reserved());
        assert!(!EntityId::parse("mls:Run").unwrap().is_reserved());
    }

    proptest! {
        #[test]
        fn text_round_trip(ns in "[A-Za-z0-9_.-]{1,32}", local in "[A-Za-z0-9_:/#.-]{1,40}") {
            let id = EntityId::new(&ns, &local).unwrap();
            let back = EntityId::parse(&id.to_string()).unwrap();
            prop_assert_eq!(back.namespace(), ns.as_str());
            prop_assert_eq!(back.local(), local.as_str());
            prop_assert_eq!(back, id);
        }
    }
}
