use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::ops::Bound;

use super::index::{insert_nested, insert_set, remove_nested, remove_set, IdSet, IndexSet, PropKey};
use super::StoreError;
use crate::model::{
    default_context_id, instance_of_id, subclass_of_id, validate_link, CmpOp, Connector, Context, EntityId, Link,
    Literal, Node, Properties, CONCEPT_KIND, DEFAULT_CONTEXT, KIND_PROPERTY, LAMBDA, NAME_PROPERTY,
};

static EMPTY: IdSet = BTreeSet::new();

/// Contents of a knowledge base at one generation: primary maps plus indexes.
///
/// Read access goes through this type (usually via [`super::Snapshot`]);
/// mutation only through [`super::KnowledgeBase`].
#[derive(Clone, Debug)]
pub struct KbState {
    pub(crate) nodes: BTreeMap<EntityId, Node>,
    pub(crate) links: BTreeMap<EntityId, Link>,
    pub(crate) connectors: BTreeMap<EntityId, Connector>,
    pub(crate) contexts: BTreeMap<EntityId, Context>,
    pub(crate) indexes: IndexSet,
    pub(crate) generation: u64,
    next_auto: u64,
}

impl Default for KbState {
    fn default() -> Self {
        Self::new()
    }
}

impl KbState {
    /// Empty store holding only the default context and the `instanceOf` /
    /// `subClassOf` connectors.
    pub fn new() -> Self {
        let default = default_context_id();
        let mut state = KbState {
            nodes: BTreeMap::new(),
            links: BTreeMap::new(),
            connectors: BTreeMap::new(),
            contexts: BTreeMap::new(),
            indexes: IndexSet::default(),
            generation: 0,
            next_auto: 0,
        };
        let root = Context::new(default.clone(), "default", None);
        insert_set(&mut state.indexes.by_local, &root.id.local().to_owned(), &root.id);
        state.contexts.insert(default.clone(), root);
        for (id, name) in [(instance_of_id(), "instanceOf"), (subclass_of_id(), "subClassOf")] {
            let conn = Connector::binary(id, name, default.clone());
            state.attach_connector(conn);
        }
        state
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn node(&self, id: &EntityId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn link(&self, id: &EntityId) -> Option<&Link> {
        self.links.get(id)
    }

    pub fn connector(&self, id: &EntityId) -> Option<&Connector> {
        self.connectors.get(id)
    }

    pub fn context(&self, id: &EntityId) -> Option<&Context> {
        self.contexts.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    pub fn connectors(&self) -> impl Iterator<Item = &Connector> {
        self.connectors.values()
    }

    pub fn contexts(&self) -> impl Iterator<Item = &Context> {
        self.contexts.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn connector_count(&self) -> usize {
        self.connectors.len()
    }

    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.nodes.contains_key(id)
            || self.links.contains_key(id)
            || self.connectors.contains_key(id)
            || self.contexts.contains_key(id)
    }

    /// `None` if `node` is neither a node nor a context. Contexts only carry `lambda`.
    pub fn anchor_exists(&self, node: &EntityId, anchor: &str) -> Option<bool> {
        if let Some(n) = self.nodes.get(node) {
            Some(n.has_anchor(anchor))
        } else if self.contexts.contains_key(node) {
            Some(anchor == LAMBDA)
        } else {
            None
        }
    }

    pub fn is_concept(&self, id: &EntityId) -> bool {
        self.nodes
            .get(id)
            .and_then(|n| n.property(KIND_PROPERTY))
            .and_then(Literal::as_text)
            == Some(CONCEPT_KIND)
    }

    /// Concept nodes whose `name` property equals `name`.
    pub fn concepts_named(&self, name: &str) -> Vec<EntityId> {
        self.property_equals(NAME_PROPERTY, &Literal::Text(name.to_owned()))
            .iter()
            .filter(|id| self.is_concept(id))
            .cloned()
            .collect()
    }

    pub fn links_with_connector(&self, connector: &EntityId) -> &IdSet {
        self.indexes.by_connector.get(connector).unwrap_or(&EMPTY)
    }

    /// Links of `connector` whose first role binds `node`.
    pub fn links_from(&self, node: &EntityId, connector: &EntityId) -> &IdSet {
        self.indexes
            .by_subject
            .get(node)
            .and_then(|m| m.get(connector))
            .unwrap_or(&EMPTY)
    }

    /// Links of `connector` whose second role binds `node`.
    pub fn links_to(&self, node: &EntityId, connector: &EntityId) -> &IdSet {
        self.indexes
            .by_object
            .get(node)
            .and_then(|m| m.get(connector))
            .unwrap_or(&EMPTY)
    }

    /// Every link binding `node`, in any role.
    pub fn incident_links(&self, node: &EntityId) -> &IdSet {
        self.indexes.incident.get(node).unwrap_or(&EMPTY)
    }

    /// Instances of `concept` or of any of its subconcepts.
    pub fn instances_of(&self, concept: &EntityId) -> &IdSet {
        self.indexes.by_concept.get(concept).unwrap_or(&EMPTY)
    }

    /// Nodes and contexts whose id has this local part.
    pub fn ids_with_local(&self, local: &str) -> &IdSet {
        self.indexes.by_local.get(local).unwrap_or(&EMPTY)
    }

    pub fn connectors_named(&self, name: &str) -> &IdSet {
        self.indexes.connectors_by_name.get(name).unwrap_or(&EMPTY)
    }

    pub fn property_equals(&self, name: &str, value: &Literal) -> &IdSet {
        PropKey::from_literal(value)
            .and_then(|key| self.indexes.by_property.get(name)?.get(&key))
            .unwrap_or(&EMPTY)
    }

    /// Nodes whose `name` property satisfies `op value`, using the property
    /// index. Only values of the same literal kind as `value` are visited.
    pub fn property_matches(&self, name: &str, op: CmpOp, value: &Literal) -> BTreeSet<EntityId> {
        let mut out = BTreeSet::new();
        let (Some(index), Some(key)) = (self.indexes.by_property.get(name), PropKey::from_literal(value)) else {
            return out;
        };
        let Some((lo, hi)) = PropKey::kind_bounds(value.kind()) else {
            return out;
        };
        // The index key of a large integer may round; bounds are widened to
        // inclusive and each candidate is re-checked exactly.
        let (lo, hi) = match op {
            CmpOp::Eq => (Bound::Included(key.clone()), Bound::Included(key)),
            CmpOp::Lt | CmpOp::Le => (lo, Bound::Included(key)),
            CmpOp::Gt | CmpOp::Ge => (Bound::Included(key), hi),
            CmpOp::Ne => (lo, hi),
        };
        for ids in index.range((lo, hi)).map(|(_, ids)| ids) {
            for id in ids {
                let holds = self
                    .nodes
                    .get(id)
                    .and_then(|n| n.property(name))
                    .and_then(|v| v.compare(value).ok())
                    .is_some_and(|ord| op.holds(ord));
                if holds {
                    out.insert(id.clone());
                }
            }
        }
        out
    }

    /// Node bound by the first role of `link`'s connector.
    pub fn subject_of<'a>(&'a self, link: &'a Link) -> Option<&'a EntityId> {
        let conn = self.connectors.get(&link.connector)?;
        link.node_for(conn.subject_role())
    }

    /// Node bound by the second role of `link`'s connector.
    pub fn object_of<'a>(&'a self, link: &'a Link) -> Option<&'a EntityId> {
        let conn = self.connectors.get(&link.connector)?;
        link.node_for(conn.object_role())
    }

    /// Direct superconcepts via `subClassOf`.
    pub fn direct_superconcepts(&self, concept: &EntityId) -> Vec<EntityId> {
        self.links_from(concept, &subclass_of_id())
            .iter()
            .filter_map(|l| self.links.get(l))
            .filter_map(|l| self.object_of(l).cloned())
            .collect()
    }

    /// `concept` and everything reachable from it through `subClassOf`.
    pub fn ancestors(&self, concept: &EntityId) -> BTreeSet<EntityId> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([concept.clone()]);
        while let Some(c) = queue.pop_front() {
            if seen.insert(c.clone()) {
                queue.extend(self.direct_superconcepts(&c));
            }
        }
        seen
    }

    /// Concepts an entity is directly asserted to be an instance of.
    pub fn direct_concepts(&self, instance: &EntityId) -> Vec<EntityId> {
        self.links_from(instance, &instance_of_id())
            .iter()
            .filter_map(|l| self.links.get(l))
            .filter_map(|l| self.object_of(l).cloned())
            .collect()
    }

    // ---- mutation primitives: each validates fully before changing anything ----

    pub(crate) fn fresh_id(&mut self, namespace: &str) -> EntityId {
        loop {
            self.next_auto += 1;
            let id = EntityId::new(namespace, &self.next_auto.to_string()).expect("valid namespace");
            if !self.contains(&id) {
                return id;
            }
        }
    }

    fn check_new_id(&self, id: &EntityId) -> Result<(), StoreError> {
        if id.is_reserved() {
            return Err(StoreError::ReservedNamespace(id.clone()));
        }
        if self.contains(id) {
            return Err(StoreError::DuplicateId(id.clone()));
        }
        Ok(())
    }

    fn check_context(&self, ctx: &EntityId) -> Result<(), StoreError> {
        if self.contexts.contains_key(ctx) {
            Ok(())
        } else {
            Err(StoreError::UnknownContext(ctx.clone()))
        }
    }

    fn check_finite(entity: &EntityId, props: &Properties) -> Result<(), StoreError> {
        match props.iter().find(|(_, v)| !v.is_finite()) {
            Some((name, _)) => Err(StoreError::NonFiniteProperty {
                entity: entity.clone(),
                property: name.clone(),
            }),
            None => Ok(()),
        }
    }

    fn member_of(&mut self, ctx: &EntityId, id: &EntityId) {
        if let Some(c) = self.contexts.get_mut(ctx) {
            c.members.insert(id.clone());
        }
    }

    fn leave(&mut self, ctx: &EntityId, id: &EntityId) {
        if let Some(c) = self.contexts.get_mut(ctx) {
            c.members.remove(id);
        }
    }

    pub(crate) fn insert_context(&mut self, mut ctx: Context) -> Result<(), StoreError> {
        self.check_new_id(&ctx.id)?;
        if let Some(parent) = &ctx.parent {
            self.check_context(parent)?;
        }
        if self.contexts.values().any(|c| c.name == ctx.name) {
            return Err(StoreError::DuplicateContextName(ctx.name));
        }
        ctx.members.clear();
        let owner = ctx.parent.clone().unwrap_or_else(default_context_id);
        self.member_of(&owner, &ctx.id);
        insert_set(&mut self.indexes.by_local, &ctx.id.local().to_owned(), &ctx.id);
        self.contexts.insert(ctx.id.clone(), ctx);
        Ok(())
    }

    pub(crate) fn insert_connector(&mut self, conn: Connector) -> Result<(), StoreError> {
        self.check_new_id(&conn.id)?;
        self.check_context(&conn.context)?;
        Self::check_finite(&conn.id, &conn.properties)?;
        let clash = self
            .connectors_named(&conn.name)
            .iter()
            .any(|other| self.connectors[other].context == conn.context);
        if clash {
            return Err(StoreError::DuplicateConnectorName {
                name: conn.name,
                context: conn.context,
            });
        }
        self.attach_connector(conn);
        Ok(())
    }

    fn attach_connector(&mut self, conn: Connector) {
        self.member_of(&conn.context.clone(), &conn.id);
        insert_set(&mut self.indexes.connectors_by_name, &conn.name, &conn.id);
        self.connectors.insert(conn.id.clone(), conn);
    }

    pub(crate) fn insert_node(&mut self, mut node: Node) -> Result<(), StoreError> {
        self.check_new_id(&node.id)?;
        self.check_context(&node.context)?;
        Self::check_finite(&node.id, &node.properties)?;
        if !node.has_anchor(LAMBDA) {
            node.add_anchor(crate::model::Anchor::lambda());
        }
        self.member_of(&node.context.clone(), &node.id);
        insert_set(&mut self.indexes.by_local, &node.id.local().to_owned(), &node.id);
        for (name, value) in &node.properties {
            self.indexes.add_property(&node.id, name, value);
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    pub(crate) fn insert_link(&mut self, link: Link) -> Result<(), StoreError> {
        self.check_new_id(&link.id)?;
        let conn = self
            .connectors
            .get(&link.connector)
            .ok_or_else(|| StoreError::UnknownConnector(link.connector.clone()))?;
        self.check_context(&link.context)?;
        Self::check_finite(&link.id, &link.properties)?;
        validate_link(&link, conn, &|n: &EntityId, a: &str| self.anchor_exists(n, a)).map_err(|violations| {
            StoreError::InvalidLink {
                link: link.id.clone(),
                violations,
            }
        })?;

        let subject = link.bindings[conn.subject_role()].node.clone();
        let object = link.bindings[conn.object_role()].node.clone();
        let idx = &mut self.indexes;
        insert_set(&mut idx.by_connector, &link.connector, &link.id);
        insert_nested(&mut idx.by_subject, &subject, &link.connector, &link.id);
        insert_nested(&mut idx.by_object, &object, &link.connector, &link.id);
        for b in link.bindings.values() {
            insert_set(&mut idx.incident, &b.node, &link.id);
        }
        let connector = link.connector.clone();
        self.member_of(&link.context.clone(), &link.id);
        self.links.insert(link.id.clone(), link);

        if connector == instance_of_id() {
            self.close_instance(&subject, &object);
        } else if connector == subclass_of_id() {
            let instances: Vec<_> = self.instances_of(&subject).iter().cloned().collect();
            let ancestors = self.ancestors(&object);
            for concept in ancestors {
                let set = self.indexes.by_concept.entry(concept).or_default();
                set.extend(instances.iter().cloned());
            }
            self.indexes.by_concept.retain(|_, s| !s.is_empty());
        }
        Ok(())
    }

    fn close_instance(&mut self, instance: &EntityId, concept: &EntityId) {
        for c in self.ancestors(concept) {
            insert_set(&mut self.indexes.by_concept, &c, instance);
        }
    }

    fn rebuild_concepts(&mut self) {
        self.indexes.by_concept.clear();
        let pairs: Vec<(EntityId, EntityId)> = self
            .links_with_connector(&instance_of_id())
            .iter()
            .filter_map(|l| self.links.get(l))
            .filter_map(|l| Some((self.subject_of(l)?.clone(), self.object_of(l)?.clone())))
            .collect();
        for (instance, concept) in pairs {
            self.close_instance(&instance, &concept);
        }
    }

    pub(crate) fn set_properties(&mut self, id: &EntityId, props: &Properties) -> Result<(), StoreError> {
        if !self.nodes.contains_key(id) {
            return Err(StoreError::UnknownEntity(id.clone()));
        }
        Self::check_finite(id, props)?;
        for (name, value) in props {
            let node = self.nodes.get_mut(id).unwrap();
            let old = node.properties.insert(name.clone(), value.clone());
            if let Some(old) = old {
                self.indexes.remove_property(id, name, &old);
            }
            self.indexes.add_property(id, name, value);
        }
        Ok(())
    }

    /// Removes a link, or a node no link refers to.
    pub(crate) fn remove(&mut self, id: &EntityId) -> Result<(), StoreError> {
        if id.is_reserved() {
            return Err(StoreError::ReservedNamespace(id.clone()));
        }
        if let Some(link) = self.links.get(id) {
            let link = link.clone();
            let conn = &self.connectors[&link.connector];
            let subject = link.bindings[conn.subject_role()].node.clone();
            let object = link.bindings[conn.object_role()].node.clone();
            let idx = &mut self.indexes;
            remove_set(&mut idx.by_connector, &link.connector, id);
            remove_nested(&mut idx.by_subject, &subject, &link.connector, id);
            remove_nested(&mut idx.by_object, &object, &link.connector, id);
            for b in link.bindings.values() {
                remove_set(&mut idx.incident, &b.node, id);
            }
            self.leave(&link.context, id);
            self.links.remove(id);
            if link.connector == instance_of_id() || link.connector == subclass_of_id() {
                self.rebuild_concepts();
            }
            return Ok(());
        }
        if let Some(node) = self.nodes.get(id) {
            let refs = self.incident_links(id).len();
            if refs > 0 {
                return Err(StoreError::StillReferenced {
                    node: id.clone(),
                    links: refs,
                });
            }
            let node = node.clone();
            for (name, value) in &node.properties {
                self.indexes.remove_property(id, name, value);
            }
            remove_set(&mut self.indexes.by_local, &id.local().to_owned(), id);
            self.indexes.by_concept.remove(id);
            self.leave(&node.context, id);
            self.nodes.remove(id);
            return Ok(());
        }
        if self.connectors.contains_key(id) || self.contexts.contains_key(id) {
            return Err(StoreError::Unsupported(format!(
                "{id} is a connector or context; only nodes and links can be removed"
            )));
        }
        Err(StoreError::UnknownEntity(id.clone()))
    }

    /// Id of the context named `name`.
    pub fn context_named(&self, name: &str) -> Option<&EntityId> {
        if name == "default" {
            return self.contexts.get_key_value(DEFAULT_CONTEXT).map(|(k, _)| k);
        }
        self.contexts.values().find(|c| c.name == name).map(|c| &c.id)
    }
}
