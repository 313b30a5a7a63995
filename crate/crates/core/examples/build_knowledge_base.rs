//! Builds a small hypergraph by hand: concepts, a subclass edge, typed
//! nodes with anchors, a binary and a ternary link, then queries it.

use hyperkb::eval::{run_query, FunctionRegistry};
use hyperkb::model::{Anchor, Binding, EntityId, Literal, Properties, CONCEPT_KIND, KIND_PROPERTY, NAME_PROPERTY};
use hyperkb::store::KnowledgeBase;

fn concept(kb: &mut KnowledgeBase, ctx: &EntityId, name: &str) -> EntityId {
    let props = Properties::from([
        (KIND_PROPERTY.to_owned(), Literal::from(CONCEPT_KIND)),
        (NAME_PROPERTY.to_owned(), Literal::from(name)),
    ]);
    kb.add_node(Some(EntityId::new("lab", name).unwrap()), props, vec![], Some(ctx))
        .unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut kb = KnowledgeBase::new();
    let ctx = kb.add_context("lab", None)?;

    let model = concept(&mut kb, &ctx, "Model");
    let cnn = concept(&mut kb, &ctx, "ConvNet");
    let data = concept(&mut kb, &ctx, "Data");
    kb.assert_subclass(&cnn, &model)?;

    let resnet = kb.add_node(
        Some(EntityId::new("lab", "resnet")?),
        Properties::from([("depth".to_owned(), Literal::Integer(50))]),
        vec![Anchor::new("head")?.with_descriptor("classification head")],
        Some(&ctx),
    )?;
    let imagenet = kb.add_node(
        Some(EntityId::new("lab", "imagenet")?),
        Properties::new(),
        vec![],
        Some(&ctx),
    )?;
    kb.assert_instance(&resnet, &cnn)?;
    kb.assert_instance(&imagenet, &data)?;

    let trained_on = kb.add_connector("trainedOn", &["subject", "object"], Some(&ctx))?;
    kb.relate(&resnet, &trained_on, &imagenet, Some(&ctx))?;

    // n-ary: which anchor of the model was fine-tuned on which data
    let finetune = kb.add_connector("finetune", &["model", "data", "part"], Some(&ctx))?;
    kb.add_link(
        &finetune,
        [
            ("model".to_owned(), Binding::lambda(resnet.clone())),
            ("data".to_owned(), Binding::lambda(imagenet.clone())),
            ("part".to_owned(), Binding::new(resnet.clone(), "head")),
        ],
        Some(&ctx),
    )?;

    let st = kb.state();
    println!(
        "{} nodes, {} links, {} connectors",
        st.node_count(),
        st.link_count(),
        st.connector_count()
    );
    kb.audit().map_err(|d| format!("{} index divergences", d.len()))?;

    // ConvNet ⊑ Model, so resnet is found through the Model domain
    let res = run_query(
        "SELECT Model, Data WHERE Model trainedOn Data AND Model.depth >= 18",
        kb.state(),
        &FunctionRegistry::default(),
    )?;
    print!("{}", res.to_text());
    Ok(())
}
