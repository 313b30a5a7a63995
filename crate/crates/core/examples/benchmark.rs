//! Times loading and querying a generated dataset.
//!
//! `cargo run --release --example benchmark -- <scale> <reps>`

use hyperkb::bench::run_benchmark;
use hyperkb::eval::FunctionRegistry;
use hyperkb::hyql::parse;
use hyperkb::ingest::{generate, GeneratorSpec};
use hyperkb::mlschema::bootstrap_dataset_vocabulary;
use hyperkb::store::KnowledgeBase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let scale: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let reps: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);

    let mut base = KnowledgeBase::new();
    bootstrap_dataset_vocabulary(&mut base)?;
    let mut dataset = Vec::new();
    generate(&GeneratorSpec::table1(42, scale), &mut dataset)?;

    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/queries/bench");
    let mut queries = Vec::new();
    for (name, text) in hyperkb::cli::read_query_dir(&dir)? {
        queries.push((name, parse(&text)?));
    }

    let report = run_benchmark(&base, &dataset, &queries, reps, &FunctionRegistry::default())?;
    println!(
        "{} nodes, {} links, {reps} reps",
        report.meta.dataset_nodes, report.meta.dataset_links
    );
    println!(
        "{:<6} {:>10} {:>10} {:>9} {:>6}",
        "task", "median ms", "mean ms", "outliers", "rows"
    );
    for (task, r) in &report.tasks {
        println!(
            "{task:<6} {:>10.3} {:>10.3} {:>9} {:>6}",
            r.median_ms,
            r.mean_ms,
            r.outliers_ms.len(),
            r.cardinality
        );
    }
    Ok(())
}
