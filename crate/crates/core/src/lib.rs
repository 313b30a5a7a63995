//! A hypergraph knowledge base for machine-learning workflow management.
//!
//! Workflows are stored as typed n-ary links over concept and instance nodes
//! ([`model`], [`store`]), organized by the ML Schema vocabulary
//! ([`mlschema`]), and queried with HyQL ([`hyql`], [`eval`]). [`ingest`]
//! imports triples and generates benchmark datasets, [`exec`] runs workflow
//! components and records their provenance, and [`bench`] times loads and
//! queries.

pub mod bench;
pub mod cli;
pub mod eval;
pub mod exec;
pub mod hyql;
pub mod ingest;
pub mod mlschema;
pub mod model;
pub mod store;
