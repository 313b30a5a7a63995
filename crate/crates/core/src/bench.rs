//! Load and query latency benchmark.
//!
//! Every load repetition starts from a fresh copy of the base store; every
//! query repetition resolves and evaluates a pre-parsed query against one
//! warm snapshot holding the loaded dataset. Wall-clock timing uses the
//! monotonic clock and excludes process startup and query parsing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::eval::{evaluate, resolve, EvalError, FunctionRegistry};
use crate::hyql::Query;
use crate::store::{KnowledgeBase, StoreError};

pub const LOAD_TASK: &str = "load";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("at least one repetition is required")]
    NoRepetitions,
    #[error("dataset load failed: {0}")]
    Load(#[from] StoreError),
    #[error("{task}: {source}")]
    Eval {
        task: String,
        #[source]
        source: EvalError,
    },
    #[error("{task}: cardinality changed between repetitions ({first} then {now})")]
    Unstable { task: String, first: usize, now: usize },
}

/// Summary of the samples of one task.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskReport {
    pub runs_ms: Vec<f64>,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub outliers_ms: Vec<f64>,
    /// Query: first-column result size. Load: records applied.
    pub cardinality: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_patterns: Option<usize>,
}

impl TaskReport {
    pub fn from_samples(runs_ms: Vec<f64>, cardinality: usize, link_patterns: Option<usize>) -> Self {
        let s = Summary::of(&runs_ms);
        TaskReport {
            median_ms: s.median,
            mean_ms: s.mean,
            outliers_ms: s.outliers,
            runs_ms,
            cardinality,
            link_patterns,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchMeta {
    pub reps: usize,
    pub dataset_nodes: usize,
    pub dataset_links: usize,
    pub timing: &'static str,
    pub outlier_rule: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub meta: BenchMeta,
    /// Keyed by task name: `load`, then one entry per query.
    #[serde(flatten)]
    pub tasks: BTreeMap<String, TaskReport>,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `task,rep,elapsed_ms,cardinality`, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,rep,elapsed_ms,cardinality\n");
        for (task, r) in &self.tasks {
            for (i, ms) in r.runs_ms.iter().enumerate() {
                writeln!(out, "{task},{},{ms},{}", i + 1, r.cardinality).unwrap();
            }
        }
        out
    }
}

/// Median, mean and Tukey outliers of a sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub median: f64,
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
    /// Values outside [q1 − 1.5·IQR, q3 + 1.5·IQR], in sample order.
    pub outliers: Vec<f64>,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        if xs.is_empty() {
            return Summary {
                median: f64::NAN,
                mean: f64::NAN,
                q1: f64::NAN,
                q3: f64::NAN,
                outliers: vec![],
            };
        }
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.75));
        let fence = 1.5 * (q3 - q1);
        Summary {
            median: quantile(&sorted, 0.5),
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
            q1,
            q3,
            outliers: xs
                .iter()
                .copied()
                .filter(|&x| x < q1 - fence || x > q3 + fence)
                .collect(),
        }
    }
}

/// Linear-interpolation quantile of sorted data (Hyndman–Fan type 7).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Times `reps` loads of `dataset` (HKJSONL) into copies of `base`, then
/// `reps` evaluations of each query against the loaded store.
pub fn run_benchmark(
    base: &KnowledgeBase,
    dataset: &[u8],
    queries: &[(String, Query)],
    reps: usize,
    registry: &FunctionRegistry,
) -> Result<BenchReport, BenchError> {
    if reps == 0 {
        return Err(BenchError::NoRepetitions);
    }
    let mut tasks = BTreeMap::new();
    let mut loaded = None;
    let mut load_runs = Vec::with_capacity(reps);
    let mut load_report = None;
    for _ in 0..reps {
        let mut kb = base.snapshot().to_knowledge_base();
        let t = Instant::now();
        let report = kb.bulk_load(dataset)?;
        load_runs.push(ms(t));
        load_report.get_or_insert(report);
        loaded = Some(kb);
    }
    let load_report = load_report.unwrap();
    tasks.insert(
        LOAD_TASK.to_owned(),
        TaskReport::from_samples(load_runs, load_report.nodes + load_report.links, None),
    );

    let snapshot = loaded.unwrap().snapshot();
    for (name, query) in queries {
        let err = |source| BenchError::Eval {
            task: name.clone(),
            source,
        };
        let mut runs = Vec::with_capacity(reps);
        let mut card = None;
        for _ in 0..reps {
            let t = Instant::now();
            let resolved = resolve(query, &snapshot, registry).map_err(err)?;
            let result = evaluate(&resolved, &snapshot, registry).map_err(err)?;
            runs.push(ms(t));
            let now = result.cardinality();
            match card {
                None => card = Some(now),
                Some(first) if first != now => {
                    return Err(BenchError::Unstable {
                        task: name.clone(),
                        first,
                        now,
                    })
                }
                _ => {}
            }
        }
        tasks.insert(
            name.clone(),
            TaskReport::from_samples(runs, card.unwrap(), Some(query.link_pattern_count())),
        );
    }
    Ok(BenchReport {
        meta: BenchMeta {
            reps,
            dataset_nodes: load_report.nodes,
            dataset_links: load_report.links,
            timing: "wall clock, monotonic; excludes process startup and query parsing; \
                     each load on a fresh copy of the base store",
            outlier_rule: "Tukey fences at 1.5 IQR, type-7 quartiles",
        },
        tasks,
    })
}
