//! Parses, pretty-prints and evaluates the benchmark queries on a small
//! generated dataset, checking each answer against the brute-force oracle.
//!
//! `cargo run --release --example query_workflows -- 0.05`

use hyperkb::eval::{evaluate, oracle_evaluate, resolve, FunctionRegistry};
use hyperkb::hyql::parse;
use hyperkb::ingest::{generate_records, GeneratorSpec};
use hyperkb::mlschema::bootstrap_dataset_vocabulary;
use hyperkb::store::KnowledgeBase;
use std::time::Instant;

const QUERIES: [(&str, &str); 5] = [
    ("Q1", include_str!("../fixtures/queries/bench/Q1.hyql")),
    ("Q2", include_str!("../fixtures/queries/bench/Q2.hyql")),
    ("Q3", include_str!("../fixtures/queries/bench/Q3.hyql")),
    ("Q4", include_str!("../fixtures/queries/bench/Q4.hyql")),
    ("Q5", include_str!("../fixtures/queries/bench/Q5.hyql")),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scale: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.02);
    let mut kb = KnowledgeBase::new();
    bootstrap_dataset_vocabulary(&mut kb)?;
    let (records, manifest) = generate_records(&GeneratorSpec::table1(42, scale))?;
    kb.bulk_load_records(records.into_iter().enumerate().collect(), Instant::now())?;
    println!(
        "scale {scale}: {} entities, {} links\n",
        manifest.entities, manifest.links
    );

    let registry = FunctionRegistry::default();
    for (name, text) in QUERIES {
        let ast = parse(text)?;
        println!("{name}: {ast}");
        let q = resolve(&ast, kb.state(), &registry)?;
        let t = Instant::now();
        let rows = evaluate(&q, kb.state(), &registry)?;
        let took = t.elapsed();
        let oracle = oracle_evaluate(&q, kb.state(), &registry)?;
        println!(
            "    {} rows in {took:?}, {} link patterns, oracle {}\n",
            rows.cardinality(),
            ast.link_pattern_count(),
            if rows == oracle { "agrees" } else { "DISAGREES" }
        );
    }
    Ok(())
}
