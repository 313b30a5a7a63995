//! In-memory knowledge base with secondary indexes, cheap snapshots, atomic
//! bulk load, and an optional append-only journal.
//!
//! Writes go through [`KnowledgeBase`], which owns the current
//! [`KbState`] behind an `Arc`. A [`Snapshot`] is a clone of that `Arc`: it
//! never sees later writes, since a write to a shared state copies it first.

mod audit;
mod index;
mod journal;
mod load;
pub mod record;
mod state;

use std::collections::BTreeMap;
use std::ops::Deref;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

pub use audit::{audit_indexes, Divergence};
pub use index::{IdSet, IndexSet, NumKey, PropKey};
pub use journal::Journal;
pub use record::Record;
pub use state::KbState;

use crate::model::{
    default_context_id, instance_of_id, subclass_of_id, Anchor, Binding, Connector, Context, EntityId, Link, Literal,
    ModelError, Node, Properties, Violation, OBJECT, SUBJECT,
};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("duplicate id {0}")]
    DuplicateId(EntityId),
    #[error("namespace of {0} is reserved for built-ins")]
    ReservedNamespace(EntityId),
    #[error("connector `{name}` already exists in {context}")]
    DuplicateConnectorName { name: String, context: EntityId },
    #[error("context name `{0}` already in use")]
    DuplicateContextName(String),
    #[error("unknown context {0}")]
    UnknownContext(EntityId),
    #[error("unknown connector {0}")]
    UnknownConnector(EntityId),
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("invalid link {link}: {}", format_violations(.violations))]
    InvalidLink { link: EntityId, violations: Vec<Violation> },
    #[error("context hierarchy cycle or missing parent at {0}")]
    ContextCycle(EntityId),
    #[error("node {node} is still referenced by {links} link(s)")]
    StillReferenced { node: EntityId, links: usize },
    #[error("property `{property}` of {entity} is not finite")]
    NonFiniteProperty { entity: EntityId, property: String },
    #[error("{0}")]
    Unsupported(String),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<StoreError>,
    },
    #[error("journal I/O: {0}")]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl StoreError {
    pub(crate) fn at(self, line: usize) -> StoreError {
        match self {
            e @ (StoreError::Malformed { .. } | StoreError::AtLine { .. }) => e,
            e => StoreError::AtLine {
                line,
                source: Box::new(e),
            },
        }
    }

    /// The error without any line-number wrapper.
    pub fn root(&self) -> &StoreError {
        match self {
            StoreError::AtLine { source, .. } => source.root(),
            e => e,
        }
    }
}

/// Counts of records applied by one bulk load.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct LoadReport {
    pub nodes: usize,
    pub links: usize,
    pub connectors: usize,
    pub contexts: usize,
    /// `prop` and `del` records.
    pub updates: usize,
    #[serde(serialize_with = "serialize_duration_ms")]
    pub elapsed: Duration,
}

fn serialize_duration_ms<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

impl LoadReport {
    /// Same counts, ignoring elapsed time.
    pub fn same_counts(&self, other: &LoadReport) -> bool {
        (self.nodes, self.links, self.connectors, self.contexts, self.updates)
            == (
                other.nodes,
                other.links,
                other.connectors,
                other.contexts,
                other.updates,
            )
    }
}

/// Immutable view of a knowledge base at one generation. Cheap to clone and
/// safe to share across threads.
#[derive(Clone, Debug)]
pub struct Snapshot {
    state: Arc<KbState>,
}

impl Deref for Snapshot {
    type Target = KbState;

    fn deref(&self) -> &KbState {
        &self.state
    }
}

impl Snapshot {
    /// Detached copy of the contents, writable as a fresh in-memory store.
    pub fn to_knowledge_base(&self) -> KnowledgeBase {
        KnowledgeBase {
            state: Arc::clone(&self.state),
            journal: None,
        }
    }
}

/// The single writer. Wrap in a lock to share between threads; readers take
/// [`Snapshot`]s and never block it.
#[derive(Debug)]
pub struct KnowledgeBase {
    state: Arc<KbState>,
    journal: Option<Journal>,
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        Self::new()
    }
}

impl KnowledgeBase {
    /// In-memory store with the built-in context and connectors.
    pub fn new() -> Self {
        KnowledgeBase {
            state: Arc::new(KbState::new()),
            journal: None,
        }
    }

    /// Creates a new journal file (failing if it exists) backing an empty store.
    pub fn create_journal(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        Ok(KnowledgeBase {
            state: Arc::new(KbState::new()),
            journal: Some(Journal::create(path.as_ref())?),
        })
    }

    /// Replays an existing journal and keeps appending to it.
    pub fn open_journal(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let mut kb = KnowledgeBase::new();
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        load::replay(Arc::make_mut(&mut kb.state), reader)?;
        kb.journal = Some(Journal::append(path)?);
        Ok(kb)
    }

    pub fn state(&self) -> &KbState {
        &self.state
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            state: Arc::clone(&self.state),
        }
    }

    pub fn generation(&self) -> u64 {
        self.state.generation
    }

    pub fn journal_path(&self) -> Option<&Path> {
        self.journal.as_ref().map(Journal::path)
    }

    /// Applies `op` to a private copy when snapshots share the state.
    /// `op` must validate before mutating.
    fn write<T>(
        &mut self,
        op: impl FnOnce(&mut KbState) -> Result<(T, Vec<Record>), StoreError>,
    ) -> Result<T, StoreError> {
        let state = Arc::make_mut(&mut self.state);
        let (out, records) = op(state)?;
        state.generation += 1;
        if let Some(journal) = &mut self.journal {
            journal.write_records(&records)?;
        }
        Ok(out)
    }

    /// Context named `name`, id `ctx:<name>`. Top-level contexts live in the default context.
    pub fn add_context(&mut self, name: &str, parent: Option<&EntityId>) -> Result<EntityId, StoreError> {
        let id = EntityId::new("ctx", name)?;
        self.insert_context(Context::new(id.clone(), name, parent.cloned()))?;
        Ok(id)
    }

    pub fn insert_context(&mut self, ctx: Context) -> Result<(), StoreError> {
        self.write(|st| {
            let rec = Record::from_context(&ctx);
            st.insert_context(ctx)?;
            Ok(((), vec![rec]))
        })
    }

    /// Connector with id `<context local part>:<name>`.
    pub fn add_connector(
        &mut self,
        name: &str,
        roles: &[&str],
        context: Option<&EntityId>,
    ) -> Result<EntityId, StoreError> {
        let ctx = context.cloned().unwrap_or_else(default_context_id);
        let id = EntityId::new(ctx.local(), name)?;
        let roles = roles.iter().map(|r| r.to_string()).collect();
        self.insert_connector(Connector::new(id.clone(), name, roles, ctx)?)?;
        Ok(id)
    }

    pub fn insert_connector(&mut self, conn: Connector) -> Result<(), StoreError> {
        self.write(|st| {
            let rec = Record::from_connector(&conn);
            st.insert_connector(conn)?;
            Ok(((), vec![rec]))
        })
    }

    /// Adds a node; `lambda` is always present. Without an id, one is
    /// generated in the context's namespace.
    pub fn add_node(
        &mut self,
        id: Option<EntityId>,
        properties: Properties,
        anchors: Vec<Anchor>,
        context: Option<&EntityId>,
    ) -> Result<EntityId, StoreError> {
        let ctx = context.cloned().unwrap_or_else(default_context_id);
        self.write(|st| {
            let id = match id {
                Some(id) => id,
                None => st.fresh_id(ctx.local()),
            };
            let mut node = Node::new(id.clone(), ctx);
            for a in anchors {
                node.add_anchor(a);
            }
            node.properties = properties;
            let rec = Record::from_node(&node);
            st.insert_node(node)?;
            Ok((id, vec![rec]))
        })
    }

    pub fn insert_node(&mut self, node: Node) -> Result<(), StoreError> {
        self.write(|st| {
            let rec = Record::from_node(&node);
            st.insert_node(node)?;
            Ok(((), vec![rec]))
        })
    }

    /// Adds a link with a generated `lnk:<n>` id.
    pub fn add_link(
        &mut self,
        connector: &EntityId,
        bindings: impl IntoIterator<Item = (String, Binding)>,
        context: Option<&EntityId>,
    ) -> Result<EntityId, StoreError> {
        let ctx = context.cloned().unwrap_or_else(default_context_id);
        let bindings: BTreeMap<String, Binding> = bindings.into_iter().collect();
        self.write(|st| {
            let id = st.fresh_id("lnk");
            let mut link = Link::new(id.clone(), connector.clone(), ctx);
            link.bindings = bindings;
            let rec = Record::from_link(&link);
            st.insert_link(link)?;
            Ok((id, vec![rec]))
        })
    }

    /// Binary `subject → object` link over `lambda` anchors.
    pub fn relate(
        &mut self,
        subject: &EntityId,
        connector: &EntityId,
        object: &EntityId,
        context: Option<&EntityId>,
    ) -> Result<EntityId, StoreError> {
        self.add_link(
            connector,
            [
                (SUBJECT.to_owned(), Binding::lambda(subject.clone())),
                (OBJECT.to_owned(), Binding::lambda(object.clone())),
            ],
            context,
        )
    }

    pub fn insert_link(&mut self, link: Link) -> Result<(), StoreError> {
        self.write(|st| {
            let rec = Record::from_link(&link);
            st.insert_link(link)?;
            Ok(((), vec![rec]))
        })
    }

    /// Stores `instance instanceOf concept`; the concept index picks up every
    /// superconcept as well.
    pub fn assert_instance(&mut self, instance: &EntityId, concept: &EntityId) -> Result<EntityId, StoreError> {
        for id in [instance, concept] {
            if self.state.anchor_exists(id, crate::model::LAMBDA).is_none() {
                return Err(StoreError::UnknownEntity(id.clone()));
            }
        }
        let ctx = self.state.node(instance).map(|n| n.context.clone());
        self.relate(instance, &instance_of_id(), concept, ctx.as_ref())
    }

    pub fn assert_subclass(&mut self, sub: &EntityId, sup: &EntityId) -> Result<EntityId, StoreError> {
        let ctx = self.state.node(sub).map(|n| n.context.clone());
        self.relate(sub, &subclass_of_id(), sup, ctx.as_ref())
    }

    /// Sets node properties, overwriting same-named ones.
    pub fn set_properties(&mut self, id: &EntityId, props: Properties) -> Result<(), StoreError> {
        self.write(|st| {
            st.set_properties(id, &props)?;
            Ok(((), vec![Record::Prop { id: id.clone(), props }]))
        })
    }

    pub fn set_property(&mut self, id: &EntityId, name: &str, value: impl Into<Literal>) -> Result<(), StoreError> {
        self.set_properties(id, Properties::from([(name.to_owned(), value.into())]))
    }

    /// Removes a link, or a node that no link refers to.
    pub fn remove(&mut self, id: &EntityId) -> Result<(), StoreError> {
        self.write(|st| {
            st.remove(id)?;
            Ok(((), vec![Record::Delete { id: id.clone() }]))
        })
    }

    /// Loads one HKJSONL batch. All or nothing: on error the store is
    /// unchanged and nothing is journaled.
    pub fn bulk_load(&mut self, input: impl std::io::BufRead) -> Result<LoadReport, StoreError> {
        let started = std::time::Instant::now();
        let records = load::parse_records(input)?;
        self.bulk_load_records(records, started)
    }

    /// Loads already-parsed `(line number, record)` pairs as one batch.
    pub fn bulk_load_records(
        &mut self,
        records: Vec<(usize, Record)>,
        started: std::time::Instant,
    ) -> Result<LoadReport, StoreError> {
        let mut staged = (*self.state).clone();
        let (mut report, applied) = load::apply_batch(&mut staged, records)?;
        if let Some(journal) = &mut self.journal {
            journal.write_records(&applied)?;
        }
        staged.generation += 1;
        self.state = Arc::new(staged);
        report.elapsed = started.elapsed();
        Ok(report)
    }

    pub fn audit(&self) -> Result<(), Vec<Divergence>> {
        audit_indexes(&self.snapshot())
    }
}
