//! The three seismic investigations on the hand-built field store.

mod common;

use std::collections::BTreeSet;

use common::*;
use hyperkb::eval::{evaluate, oracle_evaluate, resolve, ResultSet};
use hyperkb::hyql::parse;
use hyperkb::model::Literal;

const INV1: &str = include_str!("../fixtures/queries/corpus/investigation1.hyql");
const INV2: &str = include_str!("../fixtures/queries/corpus/investigation2.hyql");
const INV3: &str = include_str!("../fixtures/queries/corpus/investigation3.hyql");

fn answer(text: &str) -> ResultSet {
    let kb = seismic_kb();
    let st = kb.state();
    let q = resolve(&parse(text).unwrap(), st, &registry()).unwrap();
    let fast = evaluate(&q, st, &registry()).unwrap();
    assert_eq!(Ok(fast.clone()), oracle_evaluate(&q, st, &registry()));
    fast
}

fn ids(r: &ResultSet, var: &str) -> BTreeSet<String> {
    r.column(var).unwrap().iter().map(|id| id.local().to_owned()).collect()
}

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Cosine computed here, independently of the library.
fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (n(a) * n(b))
}

#[test]
fn fixture_is_well_formed() {
    let kb = seismic_kb();
    assert!(kb.audit().is_ok());
    let nodes = kb.state().nodes().filter(|n| n.id.namespace() == "sx").count();
    assert!((25..=45).contains(&nodes), "{nodes}");
}

#[test]
fn boundary_pair_is_exactly_point_nine() {
    let kb = seismic_kb();
    let f = |id| match kb.state().node(&sx(id)).unwrap().property("features") {
        Some(Literal::Vector(v)) => v.clone(),
        other => panic!("{other:?}"),
    };
    assert_eq!(cosine(&f("seismic_a"), &f("s1")), 0.9);
    assert_eq!(
        hyperkb::eval::similarity(kb.state(), &sx("seismic_a"), &sx("s1")),
        Ok(0.9)
    );
    assert!(cosine(&f("seismic_a"), &f("s2")) > 0.9);
    // `>` excludes the boundary, `>=` admits it
    let strict = answer("SELECT Seismic WHERE Run hasInput Seismic AND similarSiesmic(SeismicA, Seismic) > 0.9");
    assert_eq!(ids(&strict, "Seismic"), set(&["s2", "s4"]));
    let closed = answer("SELECT Seismic WHERE Run hasInput Seismic AND similarSiesmic(SeismicA, Seismic) >= 0.9");
    assert_eq!(ids(&closed, "Seismic"), set(&["s1", "s2", "s4"]));
}

#[test]
fn investigation_1_similar_inputs() {
    // LET set: seismic inputs of segmentation runs above 0.9 similarity = {s2};
    // run2 and run6 consume s2
    assert_eq!(ids(&answer(INV1), "Model"), set(&["model2", "model6"]));
}

#[test]
fn investigation_2_same_basin() {
    // LET set {s1, s2, s3, s5}; SeismicA lies in Santos with s3 and s5
    assert_eq!(ids(&answer(INV2), "Model"), set(&["model3", "model5"]));
}

#[test]
fn investigation_3_metadata_filters() {
    // model8 sits at accuracy 0.85 exactly, model9 is from Campos, model10 outputs faults
    assert_eq!(ids(&answer(INV3), "Model"), set(&["model7"]));
}
