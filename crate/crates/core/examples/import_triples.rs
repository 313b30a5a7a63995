//! Converts tab-separated triples into store records and queries them.

use std::collections::BTreeMap;

use hyperkb::eval::{run_query, FunctionRegistry};
use hyperkb::ingest::{import_triples, ImportSpec};
use hyperkb::mlschema::{bootstrap_dataset_vocabulary, mls_concept};
use hyperkb::model::EntityId;
use hyperkb::store::KnowledgeBase;

const TRIPLES: &str = "\
run_1\thasInput\tdata_cityscapes\tresource
run_1\thasOutput\tmodel_deeplab\tresource
model_deeplab\taccuracy\t0.82\tliteral
data_cityscapes\tid\tcityscapes\tliteral
run_2\thasInput\tdata_cityscapes\tresource
run_2\thasOutput\tmodel_unet\tresource
model_unet\taccuracy\t0.77\tliteral
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut kb = KnowledgeBase::new();
    bootstrap_dataset_vocabulary(&mut kb)?;
    let ctx = kb.add_context("imported", None)?;

    let concepts = [
        ("run_1", "Run"),
        ("run_2", "Run"),
        ("data_cityscapes", "Data"),
        ("model_deeplab", "Model"),
        ("model_unet", "Model"),
    ];
    let spec = ImportSpec {
        concepts: concepts.iter().map(|(k, c)| (k.to_string(), mls_concept(c))).collect(),
        connectors: BTreeMap::from([
            ("hasInput".to_owned(), EntityId::parse("mls:hasInput")?),
            ("hasOutput".to_owned(), EntityId::parse("mls:hasOutput")?),
        ]),
        namespace: "imp".into(),
        context: Some(ctx),
    };
    let records = import_triples(TRIPLES.as_bytes(), &spec)?;
    println!("{} records from {} triples", records.len(), TRIPLES.lines().count());
    kb.bulk_load_records(records.into_iter().enumerate().collect(), std::time::Instant::now())?;

    let res = run_query(
        "SELECT Model WHERE Run hasInput Data AND Run hasOutput Model AND Data.id = \"cityscapes\" AND Model.accuracy > 0.8",
        kb.state(),
        &FunctionRegistry::default(),
    )?;
    print!("{}", res.to_text());
    Ok(())
}
