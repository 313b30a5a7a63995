use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::mlschema::{mls_concept, PWC_CONTEXT, TABLE1_CONCEPTS};
use crate::model::{instance_of_id, EntityId, Literal, Properties, NAME_PROPERTY, OBJECT, SUBJECT};
use crate::store::record::BindingRecord;
use crate::store::Record;

/// Context and namespace of generated entities.
pub const DATASET_CONTEXT: &str = "ctx:mlwfd";
pub const DATASET_NAMESPACE: &str = "mlwfd";

/// Full-scale per-concept instance counts, in [`TABLE1_CONCEPTS`] order.
pub const TABLE1_COUNTS: [u64; 15] = [
    17, 553, 1097, 615, 615, 615, 615, 3185, 3187, 3185, 3185, 3186, 3182, 3186, 5448,
];

/// The total printed under the reference concept table. Its rows sum to 31,871.
pub const TABLE1_STATED_TOTAL: u64 = 31_256;

/// Task names the benchmark queries refer to; the first three tasks carry them.
pub const SENTINEL_TASKS: [&str; 3] = [
    "object_detection",
    "semantic_segmentation",
    "unsupervised_image_classification",
];
/// `Data.id` values of the first two Data nodes.
pub const SENTINEL_DATA: [&str; 2] = ["pascal_voc_2012", "imagenet_detection"];
/// Name of the first EvaluationMeasure.
pub const SENTINEL_MEASURE: &str = "accuracy";

const ACCURACY_SHARE: f64 = 0.25;
const SENTINEL_SHARE: f64 = 0.05;
const EXTRA_LINK_SHARE: f64 = 0.3;
const CHARACTERISTIC_OUTPUTS: [&str; 4] = ["Horizon", "Label", "Mask", "BoundingBox"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub scale: f64,
    /// Full-scale target count per concept name.
    pub concept_counts: BTreeMap<String, u64>,
}

impl GeneratorSpec {
    /// The reference concept distribution at `scale`.
    pub fn table1(seed: u64, scale: f64) -> Self {
        GeneratorSpec {
            seed,
            scale,
            concept_counts: TABLE1_CONCEPTS
                .iter()
                .zip(TABLE1_COUNTS)
                .map(|(c, n)| (c.to_string(), n))
                .collect(),
        }
    }

    /// Scaled counts: rounded half-up, never below 1 for a non-zero target.
    pub fn scaled_counts(&self) -> Result<BTreeMap<String, u64>, IngestError> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(IngestError::InvalidSpec(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        let mut out = BTreeMap::new();
        for c in TABLE1_CONCEPTS {
            let full = *self.concept_counts.get(c).unwrap_or(&0);
            let n = (full as f64 * self.scale + 0.5).floor() as u64;
            out.insert(c.to_owned(), if full >= 1 { n.max(1) } else { 0 });
        }
        if let Some(extra) = self.concept_counts.keys().find(|k| !out.contains_key(*k)) {
            return Err(IngestError::InvalidSpec(format!("unknown concept `{extra}`")));
        }
        let need = |c: &str, min: u64| -> Result<(), IngestError> {
            match out[c] {
                n if n >= min => Ok(()),
                n => Err(IngestError::InvalidSpec(format!(
                    "{n} {c} instance(s); at least {min} required"
                ))),
            }
        };
        need("Run", 1)?;
        need("Task", SENTINEL_TASKS.len() as u64)?;
        need("Data", SENTINEL_DATA.len() as u64)?;
        for c in TABLE1_CONCEPTS {
            need(c, 1)?;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub scale: f64,
    pub concept_counts: BTreeMap<String, u64>,
    pub entities: u64,
    pub nodes: usize,
    pub links: usize,
    pub contexts: usize,
    /// Links emitted per connector id.
    pub connectors: BTreeMap<String, usize>,
}

/// Generates the dataset, streaming HKJSONL lines to `out`.
pub fn generate(spec: &GeneratorSpec, mut out: impl Write) -> Result<DatasetManifest, IngestError> {
    let mut buf = std::io::BufWriter::new(&mut out);
    let manifest = emit(spec, |r| writeln!(buf, "{}", r.to_line()))?;
    buf.flush()?;
    Ok(manifest)
}

/// Same records as [`generate`], collected.
pub fn generate_records(spec: &GeneratorSpec) -> Result<(Vec<Record>, DatasetManifest), IngestError> {
    let mut records = Vec::new();
    let manifest = emit(spec, |r| {
        records.push(r);
        Ok(())
    })?;
    Ok((records, manifest))
}

fn snake(concept: &str) -> String {
    let mut s = String::new();
    for (i, ch) in concept.chars().enumerate() {
        if ch.is_ascii_uppercase() {
            if i > 0 {
                s.push('_');
            }
            s.push(ch.to_ascii_lowercase());
        } else {
            s.push(ch);
        }
    }
    s
}

fn entity(concept: &str, i: u64) -> EntityId {
    EntityId::new(DATASET_NAMESPACE, &format!("{}_{:05}", snake(concept), i + 1)).expect("valid id")
}

/// Target `i` while every target still needs a source, random afterwards,
/// so each target is used when sources outnumber targets.
fn assign(i: u64, targets: u64, rng: &mut ChaCha8Rng) -> u64 {
    if i < targets {
        i
    } else {
        rng.gen_range(0..targets)
    }
}

/// Index `k` with probability `share` for each sentinel, uniform otherwise.
fn popular(sentinels: u64, n: u64, rng: &mut ChaCha8Rng) -> u64 {
    let x: f64 = rng.gen();
    let k = (x / SENTINEL_SHARE) as u64;
    if k < sentinels {
        k
    } else {
        rng.gen_range(0..n)
    }
}

struct Emitter<F> {
    sink: F,
    ctx: EntityId,
    manifest: DatasetManifest,
}

impl<F: FnMut(Record) -> std::io::Result<()>> Emitter<F> {
    fn node(&mut self, id: EntityId, props: Properties) -> Result<(), IngestError> {
        self.manifest.nodes += 1;
        (self.sink)(Record::Node {
            id,
            ctx: Some(self.ctx.clone()),
            anchors: None,
            props: (!props.is_empty()).then_some(props),
        })?;
        Ok(())
    }

    fn link(&mut self, conn: &EntityId, s: EntityId, o: EntityId) -> Result<(), IngestError> {
        self.manifest.links += 1;
        *self.manifest.connectors.entry(conn.to_string()).or_default() += 1;
        (self.sink)(Record::Link {
            id: None,
            conn: conn.clone(),
            ctx: Some(self.ctx.clone()),
            b: BTreeMap::from([
                (SUBJECT.to_owned(), BindingRecord { n: s, a: None }),
                (OBJECT.to_owned(), BindingRecord { n: o, a: None }),
            ]),
            props: None,
        })?;
        Ok(())
    }
}

fn emit(spec: &GeneratorSpec, sink: impl FnMut(Record) -> std::io::Result<()>) -> Result<DatasetManifest, IngestError> {
    let counts = spec.scaled_counts()?;
    let n = |c: &str| counts[c];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ctx = EntityId::parse(DATASET_CONTEXT).unwrap();
    let mut em = Emitter {
        sink,
        ctx: ctx.clone(),
        manifest: DatasetManifest {
            seed: spec.seed,
            scale: spec.scale,
            entities: counts.values().sum(),
            concept_counts: counts.clone(),
            nodes: 0,
            links: 0,
            contexts: 1,
            connectors: BTreeMap::new(),
        },
    };
    (em.sink)(Record::Context {
        id: ctx,
        name: DATASET_NAMESPACE.into(),
        parent: Some(EntityId::parse(PWC_CONTEXT).unwrap()),
    })?;

    // nodes, in reference-table order
    for c in TABLE1_CONCEPTS {
        for i in 0..n(c) {
            let mut props = Properties::new();
            let id = entity(c, i);
            let named = |sentinels: &[&str]| match sentinels.get(i as usize) {
                Some(s) => Literal::Text(s.to_string()),
                None => Literal::Text(id.local().to_owned()),
            };
            match c {
                "Area" | "Subarea" => {
                    props.insert(NAME_PROPERTY.into(), named(&[]));
                }
                "Task" => {
                    props.insert(NAME_PROPERTY.into(), named(&SENTINEL_TASKS));
                }
                "EvaluationMeasure" => {
                    props.insert(NAME_PROPERTY.into(), named(&[SENTINEL_MEASURE]));
                }
                "Data" => {
                    props.insert("id".into(), named(&SENTINEL_DATA));
                }
                "Model" | "ModelEvaluation" => {
                    let acc = (rng.gen_range(0.5..1.0f64) * 1e4).round() / 1e4;
                    props.insert("accuracy".into(), Literal::Number(acc));
                }
                "ModelCharacteristic" => {
                    let k = rng.gen_range(0..CHARACTERISTIC_OUTPUTS.len());
                    props.insert("output".into(), Literal::Text(CHARACTERISTIC_OUTPUTS[k].into()));
                }
                _ => {}
            }
            em.node(id, props)?;
        }
    }
    for c in TABLE1_CONCEPTS {
        let concept = mls_concept(c);
        for i in 0..n(c) {
            em.link(&instance_of_id(), entity(c, i), concept.clone())?;
        }
    }

    let conn = |s: &str| EntityId::parse(s).unwrap();
    let (has_subarea, has_task, has_part, has_quality) = (
        conn("mls:hasSubarea"),
        conn("mls:hasTask"),
        conn("pwc:hasPart"),
        conn("mls:hasQuality"),
    );
    let (implements, realizes, achieves, has_input, has_output, specified_by) = (
        conn("mls:implements"),
        conn("mls:realizes"),
        conn("mls:achieves"),
        conn("mls:hasInput"),
        conn("mls:hasOutput"),
        conn("mls:specifiedBy"),
    );

    // source concept, relation, target concept: each source gets one target
    let tree = [
        ("Subarea", &has_subarea, "Area", true),
        ("Task", &has_task, "Subarea", true),
        ("Data", &has_part, "Dataset", true),
        ("DatasetCharacteristic", &has_quality, "Dataset", true),
        ("DataCharacteristic", &has_quality, "Data", true),
        ("ModelCharacteristic", &has_quality, "Model", true),
        ("ImplementationCharacteristic", &has_quality, "Implementation", true),
        ("Implementation", &implements, "Algorithm", false),
    ];
    // `true`: the target is the link subject (e.g. Area hasSubarea Subarea)
    for (child, rel, parent, parent_is_subject) in tree {
        for i in 0..n(child) {
            let p = entity(parent, assign(i, n(parent), &mut rng));
            let c = entity(child, i);
            if parent_is_subject {
                em.link(rel, p, c)?;
            } else {
                em.link(rel, c, p)?;
            }
        }
    }

    let (tasks, data) = (n("Task"), n("Data"));
    let last = n("Run") - 1;
    for r in 0..n("Run") {
        let run = entity("Run", r);
        let mut achieved = BTreeSet::from([popular(3, tasks, &mut rng)]);
        let mut inputs = BTreeSet::from([popular(2, data, &mut rng)]);
        if rng.gen_bool(EXTRA_LINK_SHARE) {
            achieved.insert(popular(3, tasks, &mut rng));
        }
        if rng.gen_bool(EXTRA_LINK_SHARE) {
            inputs.insert(popular(2, data, &mut rng));
        }
        // witnesses for the benchmark queries
        if r == 0 {
            achieved.insert(1);
            inputs.insert(0);
        }
        if r == 1.min(last) {
            achieved.extend([0, 2]);
            inputs.insert(1);
        }
        em.link(
            &realizes,
            run.clone(),
            entity("Algorithm", assign(r, n("Algorithm"), &mut rng)),
        )?;
        for t in achieved {
            em.link(&achieves, run.clone(), entity("Task", t))?;
        }
        for d in inputs {
            em.link(&has_input, run.clone(), entity("Data", d))?;
        }
        em.link(
            &has_output,
            run.clone(),
            entity("Model", assign(r, n("Model"), &mut rng)),
        )?;
        em.link(
            &has_output,
            run,
            entity("ModelEvaluation", assign(r, n("ModelEvaluation"), &mut rng)),
        )?;
    }

    // every measure but `accuracy` specifies one evaluation; `accuracy`
    // specifies about a quarter of them, always including the first
    let evals = n("ModelEvaluation");
    for m in 1..n("EvaluationMeasure") {
        let e = assign(m - 1, evals, &mut rng);
        em.link(
            &specified_by,
            entity("ModelEvaluation", e),
            entity("EvaluationMeasure", m),
        )?;
    }
    for e in 0..evals {
        if e == 0 || rng.gen_bool(ACCURACY_SHARE) {
            em.link(
                &specified_by,
                entity("ModelEvaluation", e),
                entity("EvaluationMeasure", 0),
            )?;
        }
    }
    Ok(em.manifest)
}
