//! Bootstraps the ML Schema vocabulary, extends it with a domain ontology and
//! checks that the vocabulary contexts hold concepts only.

use hyperkb::mlschema::{
    bootstrap_ml_schema, context_separation_violations, extend_domain, mls_concept, signature_warnings,
    OntologyManifest, TABLE1_CONCEPTS,
};
use hyperkb::store::KnowledgeBase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut kb = KnowledgeBase::new();
    let mls = bootstrap_ml_schema(&mut kb)?;
    let after_mls = (kb.state().node_count(), kb.state().connector_count());
    println!("{mls}: {} concepts, {} connectors", after_mls.0, after_mls.1);

    let seismic = extend_domain(&mut kb, &OntologyManifest::seismic(), "seismic")?;
    println!(
        "{seismic}: +{} nodes, +{} connectors",
        kb.state().node_count() - after_mls.0,
        kb.state().connector_count() - after_mls.1
    );

    for name in TABLE1_CONCEPTS {
        assert!(kb.state().node(&mls_concept(name)).is_some(), "{name} missing");
    }
    // bootstrapping twice under the same name is rejected
    assert!(extend_domain(&mut kb, &OntologyManifest::seismic(), "seismic").is_err());

    println!(
        "separation violations: {}",
        context_separation_violations(kb.state()).len()
    );
    println!("signature warnings: {}", signature_warnings(kb.state()).len());
    Ok(())
}
