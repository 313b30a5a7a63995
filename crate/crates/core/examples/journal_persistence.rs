//! Every write is journaled; reopening the journal replays it. A failed
//! bulk load leaves both the store and the journal untouched.

use hyperkb::eval::{run_query, FunctionRegistry};
use hyperkb::mlschema::{bootstrap_ml_schema, mls_concept};
use hyperkb::model::{EntityId, Properties};
use hyperkb::store::KnowledgeBase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("kb.hkjsonl");
    {
        let mut kb = KnowledgeBase::create_journal(&path)?;
        bootstrap_ml_schema(&mut kb)?;
        let ctx = kb.add_context("lab", None)?;
        let m = kb.add_node(Some(EntityId::parse("lab:m1")?), Properties::new(), vec![], Some(&ctx))?;
        kb.assert_instance(&m, &mls_concept("Model"))?;
        kb.set_property(&m, "accuracy", 0.93)?;
        let run = kb.add_node(Some(EntityId::parse("lab:r1")?), Properties::new(), vec![], Some(&ctx))?;
        kb.assert_instance(&run, &mls_concept("Run"))?;
        kb.relate(&run, &EntityId::parse("mls:hasOutput")?, &m, Some(&ctx))?;

        // second record references a missing node: the whole batch is rejected
        let bad = "{\"t\":\"node\",\"id\":\"lab:m2\",\"ctx\":\"ctx:lab\"}\n\
                   {\"t\":\"link\",\"conn\":\"hk:instanceOf\",\"b\":{\"subject\":{\"n\":\"lab:ghost\"},\"object\":{\"n\":\"mls:Model\"}}}\n";
        let err = kb.bulk_load(bad.as_bytes()).unwrap_err();
        println!("rejected batch: {err}");
        println!("journal: {} bytes", std::fs::metadata(&path)?.len());
    }

    let kb = KnowledgeBase::open_journal(&path)?;
    println!(
        "replayed: {} nodes, {} links",
        kb.state().node_count(),
        kb.state().link_count()
    );
    assert!(kb.state().node(&EntityId::parse("lab:m2")?).is_none());
    let res = run_query(
        "SELECT Model WHERE Run hasOutput Model AND Model.accuracy > 0.9",
        kb.state(),
        &FunctionRegistry::default(),
    )?;
    print!("{}", res.to_text());
    Ok(())
}
