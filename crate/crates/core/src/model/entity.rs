use std::collections::{BTreeMap, BTreeSet};

use super::{EntityId, Literal, ModelError, LAMBDA};

/// Property map shared by nodes, links and connectors.
pub type Properties = BTreeMap<String, Literal>;

/// Named fragment of the resource a node stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Anchor {
    pub name: String,
    /// Opaque description of the fragment. Never interpreted by the engine.
    pub descriptor: Option<String>,
}

impl Anchor {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyAnchorName);
        }
        Ok(Anchor { name, descriptor: None })
    }

    pub fn with_descriptor(mut self, descriptor: impl Into<String>) -> Self {
        self.descriptor = Some(descriptor.into());
        self
    }

    pub fn lambda() -> Self {
        Anchor {
            name: LAMBDA.to_owned(),
            descriptor: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: EntityId,
    anchors: BTreeMap<String, Anchor>,
    pub properties: Properties,
    pub context: EntityId,
}

impl Node {
    /// A node with only the `lambda` anchor.
    pub fn new(id: EntityId, context: EntityId) -> Self {
        let mut anchors = BTreeMap::new();
        anchors.insert(LAMBDA.to_owned(), Anchor::lambda());
        Node {
            id,
            anchors,
            properties: Properties::new(),
            context,
        }
    }

    /// Adds or replaces an anchor. Replacing `lambda` keeps it present.
    pub fn add_anchor(&mut self, anchor: Anchor) {
        self.anchors.insert(anchor.name.clone(), anchor);
    }

    pub fn with_anchor(mut self, anchor: Anchor) -> Self {
        self.add_anchor(anchor);
        self
    }

    pub fn with_property(mut self, name: impl Into<String>, value: impl Into<Literal>) -> Self {
        self.properties.insert(name.into(), value.into());
        self
    }

    pub fn has_anchor(&self, name: &str) -> bool {
        self.anchors.contains_key(name)
    }

    pub fn anchor(&self, name: &str) -> Option<&Anchor> {
        self.anchors.get(name)
    }

    pub fn anchors(&self) -> impl Iterator<Item = &Anchor> {
        self.anchors.values()
    }

    pub fn property(&self, name: &str) -> Option<&Literal> {
        self.properties.get(name)
    }

    /// Overwrites an existing value of the same name.
    pub fn set_property(&mut self, name: impl Into<String>, value: impl Into<Literal>) {
        self.properties.insert(name.into(), value.into());
    }
}

/// Relation type. Declares the ordered roles a link must bind.
#[derive(Clone, Debug, PartialEq)]
pub struct Connector {
    pub id: EntityId,
    pub name: String,
    roles: Vec<String>,
    /// Free-form metadata, e.g. declared domain and range concepts.
    pub properties: Properties,
    pub context: EntityId,
}

impl Connector {
    pub fn new(
        id: EntityId,
        name: impl Into<String>,
        roles: Vec<String>,
        context: EntityId,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyConnectorName);
        }
        if roles.len() < 2 {
            return Err(ModelError::TooFewRoles(name));
        }
        let mut seen = BTreeSet::new();
        for role in &roles {
            if role.is_empty() {
                return Err(ModelError::EmptyRoleName(name));
            }
            if !seen.insert(role.as_str()) {
                return Err(ModelError::DuplicateRole(name, role.clone()));
            }
        }
        Ok(Connector {
            id,
            name,
            roles,
            properties: Properties::new(),
            context,
        })
    }

    /// A `subject`/`object` connector.
    pub fn binary(id: EntityId, name: impl Into<String>, context: EntityId) -> Self {
        Connector::new(id, name, super::binary_roles(), context).expect("binary roles are valid")
    }

    pub fn roles(&self) -> &[String] {
        &self.roles
    }

    /// Role bound by the left-hand term of a link pattern.
    pub fn subject_role(&self) -> &str {
        &self.roles[0]
    }

    /// Role bound by the right-hand term of a link pattern.
    pub fn object_role(&self) -> &str {
        &self.roles[1]
    }

    pub fn has_role(&self, role: &str) -> bool {
        self.roles.iter().any(|r| r == role)
    }
}

/// One end of a link: a node and the anchor the link attaches to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binding {
    pub node: EntityId,
    pub anchor: String,
}

impl Binding {
    pub fn new(node: EntityId, anchor: impl Into<String>) -> Self {
        Binding {
            node,
            anchor: anchor.into(),
        }
    }

    pub fn lambda(node: EntityId) -> Self {
        Binding::new(node, LAMBDA)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub id: EntityId,
    pub connector: EntityId,
    pub bindings: BTreeMap<String, Binding>,
    pub properties: Properties,
    pub context: EntityId,
}

impl Link {
    pub fn new(id: EntityId, connector: EntityId, context: EntityId) -> Self {
        Link {
            id,
            connector,
            bindings: BTreeMap::new(),
            properties: Properties::new(),
            context,
        }
    }

    pub fn bind(mut self, role: impl Into<String>, binding: Binding) -> Self {
        self.bindings.insert(role.into(), binding);
        self
    }

    pub fn node_for(&self, role: &str) -> Option<&EntityId> {
        self.bindings.get(role).map(|b| &b.node)
    }
}

/// Composite node owning a set of members.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Context {
    pub id: EntityId,
    pub name: String,
    pub parent: Option<EntityId>,
    pub members: BTreeSet<EntityId>,
}

impl Context {
    pub fn new(id: EntityId, name: impl Into<String>, parent: Option<EntityId>) -> Self {
        Context {
            id,
            name: name.into(),
            parent,
            members: BTreeSet::new(),
        }
    }
}
