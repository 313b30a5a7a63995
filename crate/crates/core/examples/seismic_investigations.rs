//! The three seismic investigations over a hand-built field store.

use hyperkb::eval::{run_query, similarity, FunctionRegistry, OutputFormat};
use hyperkb::mlschema::{bootstrap_ml_schema, extend_domain, OntologyManifest};
use hyperkb::model::EntityId;
use hyperkb::store::KnowledgeBase;
use std::time::Duration;

const FIELD: &str = include_str!("../fixtures/seismic/field.hkjsonl");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut kb = KnowledgeBase::new();
    bootstrap_ml_schema(&mut kb)?;
    extend_domain(&mut kb, &OntologyManifest::seismic(), "seismic")?;
    kb.bulk_load(FIELD.as_bytes())?;
    let registry = FunctionRegistry::default();

    for name in ["investigation1", "investigation2", "investigation3"] {
        let path = format!("{}/fixtures/queries/corpus/{name}.hyql", env!("CARGO_MANIFEST_DIR"));
        let text = std::fs::read_to_string(path)?;
        println!("-- {name}\n{}", text.trim());
        let res = run_query(&text, kb.state(), &registry)?;
        println!("{}", res.render(OutputFormat::Text, Duration::ZERO));
    }

    // s1 sits exactly on the 0.9 threshold, so `>` leaves it out
    let a = EntityId::parse("sx:seismic_a")?;
    for s in ["s1", "s2", "s3", "s4"] {
        let sim = similarity(kb.state(), &a, &EntityId::new("sx", s)?)?;
        println!("similarity(seismic_a, {s}) = {sim:.4}");
    }
    Ok(())
}
