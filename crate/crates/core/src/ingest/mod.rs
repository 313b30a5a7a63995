//! Getting data into the store: triple import and the synthetic
//! MLWfD-31k-shaped dataset generator. Both produce HKJSONL records for
//! [`KnowledgeBase::bulk_load`](crate::store::KnowledgeBase::bulk_load).

mod generator;
mod triples;

pub use generator::{
    generate, generate_records, DatasetManifest, GeneratorSpec, DATASET_CONTEXT, DATASET_NAMESPACE, SENTINEL_DATA,
    SENTINEL_MEASURE, SENTINEL_TASKS, TABLE1_COUNTS, TABLE1_STATED_TOTAL,
};
pub use triples::{import_triples, parse_literal, ImportSpec, ObjectKind, TripleRecord};

use crate::model::ModelError;
use crate::store::Record;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("`{0}` has no concept in the concept map")]
    UnknownConcept(String),
    #[error("predicate `{0}` has no connector")]
    UnknownPredicate(String),
    #[error("conflicting literal values for ({subject}, {predicate})")]
    ConflictingLiteral { subject: String, predicate: String },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Id(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes records as HKJSONL lines.
pub fn write_hkjsonl<'a>(
    records: impl IntoIterator<Item = &'a Record>,
    mut out: impl std::io::Write,
) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_line())?;
    }
    Ok(())
}
