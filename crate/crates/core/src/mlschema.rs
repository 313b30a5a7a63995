//! The ML Schema vocabulary as Hyperknowledge: classes become concept nodes
//! in context `mls`, object properties become binary connectors, datatype
//! properties are recorded on the concept nodes. Domain extensions live in
//! child contexts and hang their concepts under ML Schema ones with
//! `subClassOf` links.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::model::{
    binary_roles, instance_of_id, subclass_of_id, EntityId, Literal, LiteralKind, Properties, CONCEPT_KIND,
    KIND_PROPERTY, NAME_PROPERTY, OBJECT, SUBJECT,
};
use crate::store::record::{BindingRecord, Record};
use crate::store::{KbState, KnowledgeBase, StoreError};

pub const MLS_CONTEXT: &str = "ctx:mls";
pub const PWC_CONTEXT: &str = "ctx:pwc";

/// Connector metadata keys for declared signatures.
pub const DOMAIN_PROPERTY: &str = "hk:domain";
pub const RANGE_PROPERTY: &str = "hk:range";
/// Concept-node property prefix recording a datatype property's literal kind.
pub const DATATYPE_PREFIX: &str = "hk:datatype:";

/// The fifteen concepts of the MLWfD-31k dataset, in reporting order.
pub const TABLE1_CONCEPTS: [&str; 15] = [
    "Area",
    "Subarea",
    "Task",
    "Dataset",
    "DatasetCharacteristic",
    "Data",
    "DataCharacteristic",
    "Model",
    "Run",
    "ModelCharacteristic",
    "Algorithm",
    "Implementation",
    "ImplementationCharacteristic",
    "ModelEvaluation",
    "EvaluationMeasure",
];

const MLS_JSON: &str = include_str!("../fixtures/ontology/mls.json");
const PWC_JSON: &str = include_str!("../fixtures/ontology/pwc.json");
const SEISMIC_JSON: &str = include_str!("../fixtures/ontology/seismic.json");

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("invalid manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("concept `{0}` declared twice")]
    DuplicateConcept(String),
    #[error("unknown parent concept `{0}`")]
    UnknownParent(String),
    #[error("relation `{relation}` references undeclared concept `{concept}`")]
    UndeclaredConcept { relation: String, concept: String },
    #[error("concept name `{0}` is ambiguous")]
    AmbiguousConcept(String),
    #[error("context `{0}` already exists")]
    DuplicateContext(String),
    #[error("ML Schema is not bootstrapped")]
    NotBootstrapped,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OntologyManifest {
    #[serde(default)]
    pub concepts: Vec<ConceptDecl>,
    #[serde(default)]
    pub relations: Vec<RelationDecl>,
    #[serde(default)]
    pub datatype_properties: Vec<DatatypeDecl>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptDecl {
    /// Local part of the concept id; defaults to the name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationDecl {
    pub name: String,
    pub domain: String,
    pub range: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatatypeDecl {
    pub name: String,
    pub concept: String,
    pub kind: LiteralKind,
}

impl OntologyManifest {
    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let m: OntologyManifest = serde_json::from_str(text)?;
        m.check_unique()?;
        Ok(m)
    }

    pub fn mls() -> Self {
        Self::from_json(MLS_JSON).expect("bundled mls.json is valid")
    }

    pub fn pwc() -> Self {
        Self::from_json(PWC_JSON).expect("bundled pwc.json is valid")
    }

    pub fn seismic() -> Self {
        Self::from_json(SEISMIC_JSON).expect("bundled seismic.json is valid")
    }

    fn check_unique(&self) -> Result<(), SchemaError> {
        let mut seen = BTreeSet::new();
        for c in &self.concepts {
            if !seen.insert(c.name.as_str()) {
                return Err(SchemaError::DuplicateConcept(c.name.clone()));
            }
        }
        Ok(())
    }

    /// Turns the manifest into load records for context `ctx`, minting ids in
    /// namespace `ns`. Names not declared here resolve against `state`.
    fn records(&self, state: &KbState, ctx: &EntityId, ns: &str) -> Result<Vec<Record>, SchemaError> {
        self.check_unique()?;
        let mut declared: BTreeMap<&str, EntityId> = BTreeMap::new();
        for c in &self.concepts {
            let local = c.id.as_deref().unwrap_or(&c.name);
            declared.insert(&c.name, EntityId::new(ns, local).map_err(StoreError::from)?);
        }
        let lookup = |name: &str| -> Result<Option<EntityId>, SchemaError> {
            if let Some(id) = declared.get(name) {
                return Ok(Some(id.clone()));
            }
            match state.concepts_named(name).as_slice() {
                [] => Ok(None),
                [one] => Ok(Some(one.clone())),
                _ => Err(SchemaError::AmbiguousConcept(name.to_owned())),
            }
        };

        let mut out = Vec::new();
        let mut datatypes: BTreeMap<EntityId, Properties> = BTreeMap::new();
        for d in &self.datatype_properties {
            let concept = lookup(&d.concept)?.ok_or_else(|| SchemaError::UndeclaredConcept {
                relation: d.name.clone(),
                concept: d.concept.clone(),
            })?;
            datatypes.entry(concept).or_default().insert(
                format!("{DATATYPE_PREFIX}{}", d.name),
                Literal::Text(d.kind.to_string()),
            );
        }
        for c in &self.concepts {
            let id = declared[c.name.as_str()].clone();
            let mut props = datatypes.remove(&id).unwrap_or_default();
            props.insert(KIND_PROPERTY.into(), CONCEPT_KIND.into());
            props.insert(NAME_PROPERTY.into(), c.name.as_str().into());
            out.push(Record::Node {
                id,
                ctx: Some(ctx.clone()),
                anchors: None,
                props: Some(props),
            });
        }
        // datatype properties declared on concepts that already exist
        for (id, props) in datatypes {
            out.push(Record::Prop { id, props });
        }
        for c in &self.concepts {
            let Some(parent) = &c.parent else { continue };
            let sup = lookup(parent)?.ok_or_else(|| SchemaError::UnknownParent(parent.clone()))?;
            out.push(binary_link(&subclass_of_id(), &declared[c.name.as_str()], &sup, ctx));
        }
        for r in &self.relations {
            let mut props = Properties::new();
            for (key, concept) in [(DOMAIN_PROPERTY, &r.domain), (RANGE_PROPERTY, &r.range)] {
                let id = lookup(concept)?.ok_or_else(|| SchemaError::UndeclaredConcept {
                    relation: r.name.clone(),
                    concept: concept.clone(),
                })?;
                props.insert(key.into(), Literal::Text(id.to_string()));
            }
            out.push(Record::Connector {
                id: EntityId::new(ns, &r.name).map_err(StoreError::from)?,
                name: r.name.clone(),
                roles: binary_roles(),
                ctx: Some(ctx.clone()),
                props: Some(props),
            });
        }
        Ok(out)
    }
}

fn binary_link(conn: &EntityId, s: &EntityId, o: &EntityId, ctx: &EntityId) -> Record {
    let bind = |n: &EntityId| BindingRecord { n: n.clone(), a: None };
    Record::Link {
        id: None,
        conn: conn.clone(),
        ctx: Some(ctx.clone()),
        b: BTreeMap::from([(SUBJECT.to_owned(), bind(s)), (OBJECT.to_owned(), bind(o))]),
        props: None,
    }
}

fn load(kb: &mut KnowledgeBase, records: Vec<Record>) -> Result<(), SchemaError> {
    let numbered = records.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
    kb.bulk_load_records(numbered, Instant::now())?;
    Ok(())
}

pub fn mls_context_id() -> EntityId {
    EntityId::parse(MLS_CONTEXT).unwrap()
}

/// Creates context `mls` with the fifteen concepts and nine relations. A
/// second call changes nothing and returns the same id.
pub fn bootstrap_ml_schema(kb: &mut KnowledgeBase) -> Result<EntityId, SchemaError> {
    let ctx = mls_context_id();
    if kb.state().context(&ctx).is_some() {
        return Ok(ctx);
    }
    let mut records = vec![Record::Context {
        id: ctx.clone(),
        name: "mls".into(),
        parent: None,
    }];
    records.extend(OntologyManifest::mls().records(kb.state(), &ctx, "mls")?);
    load(kb, records)?;
    Ok(ctx)
}

/// Adds `manifest` as context `ctx:<name>` under `mls`, atomically.
pub fn extend_domain(kb: &mut KnowledgeBase, manifest: &OntologyManifest, name: &str) -> Result<EntityId, SchemaError> {
    let mls = mls_context_id();
    if kb.state().context(&mls).is_none() {
        return Err(SchemaError::NotBootstrapped);
    }
    let ctx = EntityId::new("ctx", name).map_err(StoreError::from)?;
    if kb.state().context(&ctx).is_some() || kb.state().context_named(name).is_some() {
        return Err(SchemaError::DuplicateContext(name.to_owned()));
    }
    let mut records = vec![Record::Context {
        id: ctx.clone(),
        name: name.to_owned(),
        parent: Some(mls),
    }];
    records.extend(manifest.records(kb.state(), &ctx, name)?);
    load(kb, records)?;
    Ok(ctx)
}

/// ML Schema plus the dataset vocabulary of `pwc.json`: the twelve connectors
/// the generated dataset uses. Idempotent.
pub fn bootstrap_dataset_vocabulary(kb: &mut KnowledgeBase) -> Result<EntityId, SchemaError> {
    bootstrap_ml_schema(kb)?;
    let pwc = EntityId::parse(PWC_CONTEXT).unwrap();
    if kb.state().context(&pwc).is_none() {
        extend_domain(kb, &OntologyManifest::pwc(), "pwc")?;
    }
    Ok(pwc)
}

/// Id of the concept named `name` in the ML Schema context.
pub fn mls_concept(name: &str) -> EntityId {
    EntityId::new("mls", name).expect("valid concept name")
}

/// Nodes in `mls` that are not concepts. Empty when contexts are kept apart.
pub fn context_separation_violations(state: &KbState) -> Vec<EntityId> {
    let Some(ctx) = state.context(&mls_context_id()) else {
        return Vec::new();
    };
    let instances_in_mls = ctx
        .members
        .iter()
        .filter(|id| state.node(id).is_some() && !state.is_concept(id));
    let typed_concepts = state
        .links_with_connector(&instance_of_id())
        .iter()
        .filter_map(|l| state.link(l))
        .filter_map(|l| state.subject_of(l))
        .filter(|s| state.node(s).is_some_and(|n| n.context == ctx.id));
    let mut out: Vec<EntityId> = instances_in_mls.chain(typed_concepts).cloned().collect();
    out.sort();
    out.dedup();
    out
}

/// A link whose endpoint is not an instance of its connector's declared
/// domain or range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignatureWarning {
    pub link: EntityId,
    pub role: &'static str,
    pub node: EntityId,
    pub expected: EntityId,
}

/// Checks declared domains and ranges. Advisory only: insertion never
/// enforces them.
pub fn signature_warnings(state: &KbState) -> Vec<SignatureWarning> {
    let mut out = Vec::new();
    for conn in state.connectors() {
        let declared = |key: &str| {
            conn.properties
                .get(key)
                .and_then(Literal::as_text)
                .and_then(|t| EntityId::parse(t).ok())
        };
        let checks = [(SUBJECT, declared(DOMAIN_PROPERTY)), (OBJECT, declared(RANGE_PROPERTY))];
        for link_id in state.links_with_connector(&conn.id) {
            let link = state.link(link_id).expect("indexed link exists");
            for (role, expected) in &checks {
                let (Some(expected), Some(node)) = (expected, link.node_for(role)) else {
                    continue;
                };
                if !state.instances_of(expected).contains(node) {
                    out.push(SignatureWarning {
                        link: link_id.clone(),
                        role,
                        node: node.clone(),
                        expected: expected.clone(),
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn concepts_in(state: &KbState, ctx: &EntityId) -> usize {
        state
            .context(ctx)
            .unwrap()
            .members
            .iter()
            .filter(|m| state.is_concept(m))
            .count()
    }

    #[test]
    fn bootstrap_creates_fifteen_concepts() {
        let mut kb = KnowledgeBase::new();
        let ctx = bootstrap_ml_schema(&mut kb).unwrap();
        assert_eq!(ctx.as_str(), "ctx:mls");
        assert_eq!(concepts_in(kb.state(), &ctx), 15);
        for name in TABLE1_CONCEPTS {
            assert_eq!(kb.state().concepts_named(name), vec![mls_concept(name)]);
        }
        let achieves = kb.state().connectors_named("achieves");
        assert_eq!(achieves.len(), 1);
        let conn = kb.state().connector(achieves.iter().next().unwrap()).unwrap();
        assert_eq!(conn.roles(), ["subject", "object"]);
        assert!(kb.audit().is_ok());
    }

    #[test]
    fn bootstrap_is_idempotent() {
        let mut kb = KnowledgeBase::new();
        bootstrap_ml_schema(&mut kb).unwrap();
        let before = kb.snapshot();
        let gen = kb.generation();
        assert_eq!(bootstrap_ml_schema(&mut kb).unwrap(), mls_context_id());
        assert_eq!(kb.generation(), gen);
        assert_eq!(kb.state().node_count(), before.node_count());
        assert_eq!(kb.state().connector_count(), before.connector_count());
    }

    #[test]
    fn every_bootstrap_connector_is_an_mls_member() {
        let mut kb = KnowledgeBase::new();
        bootstrap_ml_schema(&mut kb).unwrap();
        let members = &kb.state().context(&mls_context_id()).unwrap().members;
        let mls_conns: Vec<_> = kb.state().connectors().filter(|c| c.id.namespace() == "mls").collect();
        assert_eq!(mls_conns.len(), 9);
        assert!(mls_conns.iter().all(|c| members.contains(&c.id)));
    }

    #[test]
    fn dataset_vocabulary_has_twelve_connectors() {
        let mut kb = KnowledgeBase::new();
        bootstrap_dataset_vocabulary(&mut kb).unwrap();
        assert_eq!(kb.state().connector_count(), 12);
        let data = kb.state().node(&mls_concept("Data")).unwrap();
        assert_eq!(data.property("hk:datatype:id"), Some(&Literal::Text("text".into())));
        bootstrap_dataset_vocabulary(&mut kb).unwrap();
        assert_eq!(kb.state().connector_count(), 12);
    }

    #[test]
    fn seismic_extension() {
        let mut kb = KnowledgeBase::new();
        bootstrap_ml_schema(&mut kb).unwrap();
        let ctx = extend_domain(&mut kb, &OntologyManifest::seismic(), "seismic").unwrap();
        let st = kb.state();
        assert_eq!(st.context(&ctx).unwrap().parent, Some(mls_context_id()));
        let seismic = EntityId::parse("seismic:Seismic").unwrap();
        assert!(st.ancestors(&seismic).contains(&mls_concept("Data")));
        let sss = EntityId::parse("seismic:SeismicSemanticSegmentation").unwrap();
        assert_eq!(st.direct_superconcepts(&sss), vec![mls_concept("Task")]);
        let has_basin = st.connectors_named("hasBasin").iter().next().unwrap().clone();
        let conn = st.connector(&has_basin).unwrap();
        assert_eq!(
            conn.properties[DOMAIN_PROPERTY],
            Literal::Text("seismic:Seismic".into())
        );
        assert_eq!(conn.properties[RANGE_PROPERTY], Literal::Text("seismic:Basin".into()));
        assert!(context_separation_violations(st).is_empty());
        assert!(kb.audit().is_ok());
    }

    #[test]
    fn empty_manifest_gives_empty_context() {
        let mut kb = KnowledgeBase::new();
        bootstrap_ml_schema(&mut kb).unwrap();
        let ctx = extend_domain(&mut kb, &OntologyManifest::default(), "empty").unwrap();
        assert!(kb.state().context(&ctx).unwrap().members.is_empty());
    }

    #[test]
    fn extension_errors_leave_store_unchanged() {
        let mut kb = KnowledgeBase::new();
        assert!(matches!(
            extend_domain(&mut kb, &OntologyManifest::seismic(), "seismic"),
            Err(SchemaError::NotBootstrapped)
        ));
        bootstrap_ml_schema(&mut kb).unwrap();
        let nodes = kb.state().node_count();
        let bad = OntologyManifest::from_json(r#"{"concepts":[{"name":"X","parent":"Foo"}]}"#).unwrap();
        assert!(matches!(extend_domain(&mut kb, &bad, "bad"), Err(SchemaError::UnknownParent(p)) if p == "Foo"));
        assert_eq!(kb.state().node_count(), nodes);
        assert!(kb.state().context_named("bad").is_none());

        extend_domain(&mut kb, &OntologyManifest::default(), "dup").unwrap();
        assert!(matches!(
            extend_domain(&mut kb, &OntologyManifest::default(), "dup"),
            Err(SchemaError::DuplicateContext(_))
        ));
        let bad = OntologyManifest::from_json(r#"{"relations":[{"name":"r","domain":"Run","range":"Nope"}]}"#).unwrap();
        assert!(matches!(
            extend_domain(&mut kb, &bad, "r"),
            Err(SchemaError::UndeclaredConcept { .. })
        ));
        assert!(matches!(
            OntologyManifest::from_json(r#"{"concepts":[{"name":"A"},{"name":"A"}]}"#),
            Err(SchemaError::DuplicateConcept(_))
        ));
    }

    #[test]
    fn separation_and_signature_checks() {
        let mut kb = KnowledgeBase::new();
        bootstrap_ml_schema(&mut kb).unwrap();
        let run = kb
            .add_node(
                Some(EntityId::parse("w:run1").unwrap()),
                Properties::new(),
                vec![],
                None,
            )
            .unwrap();
        let task = kb
            .add_node(Some(EntityId::parse("w:t1").unwrap()), Properties::new(), vec![], None)
            .unwrap();
        kb.assert_instance(&run, &mls_concept("Run")).unwrap();
        let achieves = EntityId::parse("mls:achieves").unwrap();
        kb.relate(&run, &achieves, &task, None).unwrap();
        let warnings = signature_warnings(kb.state());
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].role, OBJECT);
        assert_eq!(warnings[0].expected, mls_concept("Task"));
        kb.assert_instance(&task, &mls_concept("Task")).unwrap();
        assert!(signature_warnings(kb.state()).is_empty());

        assert!(context_separation_violations(kb.state()).is_empty());
        let stray = kb
            .add_node(
                Some(EntityId::parse("w:stray").unwrap()),
                Properties::new(),
                vec![],
                Some(&mls_context_id()),
            )
            .unwrap();
        assert_eq!(context_separation_violations(kb.state()), vec![stray]);
    }
}
