//! Writes a synthetic ML workflow dataset as HKJSONL and prints its manifest.
//!
//! `cargo run --example generate_dataset -- <scale> <seed> <out.hkjsonl>`

use hyperkb::ingest::{generate, GeneratorSpec, TABLE1_COUNTS};
use hyperkb::mlschema::TABLE1_CONCEPTS;
use std::fs::File;
use std::io::BufWriter;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let scale: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);
    let out = args.next().unwrap_or_else(|| "dataset.hkjsonl".into());

    let spec = GeneratorSpec::table1(seed, scale);
    let manifest = generate(&spec, BufWriter::new(File::create(&out)?))?;

    println!("{:<30} {:>8} {:>8}", "concept", "table", "written");
    for (concept, full) in TABLE1_CONCEPTS.into_iter().zip(TABLE1_COUNTS) {
        println!("{concept:<30} {full:>8} {:>8}", manifest.concept_counts[concept]);
    }
    println!("\n{out}: {} nodes, {} links", manifest.nodes, manifest.links);
    for (conn, n) in &manifest.connectors {
        println!("  {conn:<24} {n}");
    }
    Ok(())
}
