//! Binds a shell command to an Implementation, runs it on a data node and
//! shows the provenance recorded for the Run.

use std::time::Duration;

use hyperkb::eval::{run_query, FunctionRegistry};
use hyperkb::exec::{bind_executor, execute_component, ExecutorBinding};
use hyperkb::mlschema::{bootstrap_ml_schema, mls_concept};
use hyperkb::model::{EntityId, Literal, Properties};
use hyperkb::store::KnowledgeBase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = tempfile::tempdir()?;
    let input_file = work.path().join("traces.txt");
    std::fs::write(&input_file, "trace 3\ntrace 1\ntrace 2\n")?;

    let mut kb = KnowledgeBase::new();
    bootstrap_ml_schema(&mut kb)?;
    let ctx = kb.add_context("lab", None)?;
    let algorithm = kb.add_node(
        Some(EntityId::parse("lab:sort_lines")?),
        Properties::new(),
        vec![],
        Some(&ctx),
    )?;
    let imp = kb.add_node(
        Some(EntityId::parse("lab:sort_impl")?),
        Properties::new(),
        vec![],
        Some(&ctx),
    )?;
    let data = kb.add_node(
        Some(EntityId::parse("lab:traces")?),
        Properties::from([("path".to_owned(), Literal::from(input_file.to_string_lossy().as_ref()))]),
        vec![],
        Some(&ctx),
    )?;
    kb.assert_instance(&algorithm, &mls_concept("Algorithm"))?;
    kb.assert_instance(&imp, &mls_concept("Implementation"))?;
    kb.assert_instance(&data, &mls_concept("Data"))?;
    kb.relate(&imp, &EntityId::parse("mls:implements")?, &algorithm, Some(&ctx))?;

    bind_executor(
        &mut kb,
        &ExecutorBinding {
            implementation: imp.clone(),
            command_template: "sort -o {output} {input}".into(),
            working_dir: work.path().to_path_buf(),
            timeout: Duration::from_secs(10),
        },
    )?;

    let rec = execute_component(&mut kb, &imp, &data, &ctx)?;
    println!("{} {} (exit {:?})", rec.run, rec.status.as_str(), rec.exit_code);
    for out in &rec.outputs {
        let node = kb.state().node(out).unwrap();
        if let Some(hyperkb::model::Literal::Text(path)) = node.property("path") {
            println!("  output {out}: {path}\n{}", std::fs::read_to_string(path)?.trim_end());
        }
    }

    let res = run_query(
        "SELECT Run, Algorithm WHERE Run hasInput traces AND Run realizes Algorithm",
        kb.state(),
        &FunctionRegistry::default(),
    )?;
    print!("{}", res.to_text());
    kb.audit().map_err(|d| format!("{} divergences", d.len()))?;
    Ok(())
}
