//! Shared fixtures for the integration tests: the seismic field store and a
//! seeded generator of small random stores and queries.
#![allow(dead_code)]

use std::collections::BTreeMap;

use hyperkb::eval::{resolve, Domain, FunctionRegistry, RTerm, ResolvedQuery, Scope};
use hyperkb::mlschema::{bootstrap_ml_schema, extend_domain, OntologyManifest};
use hyperkb::model::{EntityId, Literal, Properties};
use hyperkb::store::record::{AnchorRecord, BindingRecord};
use hyperkb::store::{KbState, KnowledgeBase, Record};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SEISMIC_FIXTURE: &str = include_str!("../../fixtures/seismic/field.hkjsonl");

/// ML Schema, the seismic extension and the hand-built field data.
pub fn seismic_kb() -> KnowledgeBase {
    let mut kb = KnowledgeBase::new();
    bootstrap_ml_schema(&mut kb).unwrap();
    extend_domain(&mut kb, &OntologyManifest::seismic(), "seismic").unwrap();
    kb.bulk_load(SEISMIC_FIXTURE.as_bytes()).unwrap();
    kb
}

pub fn sx(local: &str) -> EntityId {
    EntityId::new("sx", local).unwrap()
}

pub const CONCEPTS: [&str; 6] = ["A", "B", "C", "D", "E", "F"];
pub const CONNECTORS: [&str; 3] = ["p", "q", "r"];
/// Skewed so that some connectors are dense enough for joins to match.
const CONNECTOR_WEIGHTS: [u32; 3] = [6, 3, 1];

fn connector_index(c: &str) -> usize {
    CONNECTORS.iter().position(|x| *x == c).unwrap()
}
pub const ANCHORS: [&str; 2] = ["a1", "a2"];
pub const LABELS: [&str; 3] = ["red", "green", "blue"];

/// A random store: six concepts (`D` under `A`, `E` under `B`), three binary connectors,
/// up to `max_nodes` individuals `t:n<i>` and up to `max_links` links.
pub fn random_kb(rng: &mut ChaCha8Rng, max_nodes: usize, max_links: usize) -> (KnowledgeBase, usize) {
    let t = |s: &str| EntityId::new("t", s).unwrap();
    let ctx = EntityId::parse("ctx:r").unwrap();
    let mut recs = vec![Record::Context {
        id: ctx.clone(),
        name: "r".into(),
        parent: None,
    }];
    for c in CONCEPTS {
        recs.push(Record::Node {
            id: t(c),
            ctx: Some(ctx.clone()),
            anchors: None,
            props: Some(Properties::from([
                ("hk:kind".into(), Literal::from("concept")),
                ("name".into(), Literal::from(c)),
            ])),
        });
    }
    for c in CONNECTORS {
        recs.push(Record::Connector {
            id: t(c),
            name: c.into(),
            roles: vec!["subject".into(), "object".into()],
            ctx: Some(ctx.clone()),
            props: None,
        });
    }
    let link = |conn: EntityId, s: EntityId, sa: Option<String>, o: EntityId, oa: Option<String>| Record::Link {
        id: None,
        conn,
        ctx: Some(ctx.clone()),
        b: BTreeMap::from([
            ("subject".to_owned(), BindingRecord { n: s, a: sa }),
            ("object".to_owned(), BindingRecord { n: o, a: oa }),
        ]),
        props: None,
    };
    for (sub, sup) in [("D", "A"), ("E", "B")] {
        recs.push(link(
            EntityId::parse("hk:subClassOf").unwrap(),
            t(sub),
            None,
            t(sup),
            None,
        ));
    }

    let n = rng.gen_range(0..=max_nodes);
    let mut anchors_of: Vec<Vec<&str>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut props = Properties::new();
        if rng.gen_bool(0.7) {
            let v = if rng.gen_bool(0.5) {
                Literal::Integer(rng.gen_range(0..10))
            } else {
                Literal::Number(rng.gen_range(0..20) as f64 / 2.0)
            };
            props.insert("score".into(), v);
        }
        if rng.gen_bool(0.6) {
            props.insert("label".into(), Literal::from(*LABELS.choose(rng).unwrap()));
        }
        if rng.gen_bool(0.7) {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-2..=3) as f64).collect();
            props.insert("features".into(), Literal::Vector(v));
        }
        let anchors: Vec<&str> = ANCHORS.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
        recs.push(Record::Node {
            id: t(&format!("n{i}")),
            ctx: Some(ctx.clone()),
            anchors: (!anchors.is_empty()).then(|| anchors.iter().map(|a| AnchorRecord::Name(a.to_string())).collect()),
            props: (!props.is_empty()).then_some(props),
        });
        anchors_of.push(anchors);
    }
    for i in 0..n {
        for c in CONCEPTS {
            if rng.gen_bool(0.35) {
                recs.push(link(
                    EntityId::parse("hk:instanceOf").unwrap(),
                    t(&format!("n{i}")),
                    None,
                    t(c),
                    None,
                ));
            }
        }
    }
    if n > 0 {
        let links = rng.gen_range((max_links / 3).min(3 * n)..=max_links.min(6 * n));
        for _ in 0..links {
            let (s, o) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let anchor = |k: usize, rng: &mut ChaCha8Rng| -> Option<String> {
                if rng.gen_bool(0.2) {
                    anchors_of[k].choose(rng).map(|a| a.to_string())
                } else {
                    None
                }
            };
            let (sa, oa) = (anchor(s, rng), anchor(o, rng));
            let conn = t(CONNECTORS
                .choose_weighted(rng, |c| CONNECTOR_WEIGHTS[connector_index(c)])
                .unwrap());
            recs.push(link(conn, t(&format!("n{s}")), sa, t(&format!("n{o}")), oa));
        }
    }
    let mut kb = KnowledgeBase::new();
    kb.bulk_load_records(recs.into_iter().enumerate().collect(), std::time::Instant::now())
        .expect("random store loads");
    (kb, n)
}

struct ScopeGen<'a> {
    rng: &'a mut ChaCha8Rng,
    nodes: usize,
    terms: Vec<String>,
    conds: Vec<String>,
}

impl ScopeGen<'_> {
    fn term(&mut self, extra: Option<&str>) -> String {
        if let Some(e) = extra {
            if self.rng.gen_bool(0.35) {
                return e.to_owned();
            }
        }
        if self.nodes > 0 && self.rng.gen_bool(0.05) {
            return format!("n{}", self.rng.gen_range(0..self.nodes));
        }
        CONCEPTS.choose(self.rng).unwrap().to_string()
    }

    fn links(&mut self, count: usize, extra: Option<&str>) {
        for _ in 0..count {
            // mostly trees: extend an earlier term with an unused one
            let s = if !self.terms.is_empty() && self.rng.gen_bool(0.7) {
                self.bound()
            } else {
                self.term(extra)
            };
            let mut o = self.term(extra);
            for _ in 0..6 {
                if !self.terms.contains(&o) && o != s || self.rng.gen_bool(0.1) {
                    break;
                }
                o = self.term(extra);
            }
            let (s, o) = if self.rng.gen_bool(0.5) { (s, o) } else { (o, s) };
            let c = CONNECTORS
                .choose_weighted(self.rng, |c| CONNECTOR_WEIGHTS[connector_index(c)])
                .unwrap();
            self.conds.push(format!("{s} {c} {o}"));
            self.terms.extend([s, o]);
        }
    }

    fn bound(&mut self) -> String {
        self.terms.choose(self.rng).unwrap().clone()
    }

    fn extras(&mut self, let_names: &[&str]) {
        let let_free: Vec<String> = self
            .terms
            .iter()
            .filter(|t| !let_names.contains(&t.as_str()))
            .cloned()
            .collect();
        if self.rng.gen_bool(0.4) {
            let e = self.bound();
            let ops = ["=", "!=", "<", "<=", ">", ">="];
            let op = ops.choose(self.rng).unwrap();
            let cond = match self.rng.gen_range(0..20) {
                0 => format!("{e}.label {op} 3"), // kind mismatch when any label is in reach
                1..=9 => format!("{e}.score {op} {}", self.rng.gen_range(0..10)),
                10..=14 => format!("{e}.score {op} {:.1}", self.rng.gen_range(0..20) as f64 / 2.0),
                _ => format!("{e}.label {op} {}", LABELS.choose(self.rng).unwrap()),
            };
            self.conds.push(cond);
        }
        if self.rng.gen_bool(0.25) {
            let e = self.bound();
            let a = ["a1", "a2", "lambda"].choose(self.rng).unwrap();
            self.conds.push(format!("{e}#{a}"));
        }
        if self.rng.gen_bool(0.25) && !let_free.is_empty() {
            let a = let_free.choose(self.rng).unwrap().clone();
            let b = let_free.choose(self.rng).unwrap().clone();
            let op = [">", ">=", "<"].choose(self.rng).unwrap();
            let x = [0.0, 0.5, 0.9, 1.0].choose(self.rng).unwrap();
            self.conds.push(format!("similarity({a}, {b}) {op} {x:.1}"));
        }
    }
}

/// A random query text over the vocabulary of [`random_kb`]: at most four
/// link patterns per scope, optional comparison, anchor filter, similarity
/// predicate and LET set.
pub fn random_query(rng: &mut ChaCha8Rng, nodes: usize) -> String {
    let mut text = String::new();
    let with_let = rng.gen_bool(0.3);
    if with_let {
        let mut g = ScopeGen {
            rng,
            nodes,
            terms: vec![],
            conds: vec![],
        };
        let k = g.rng.gen_range(1..=2);
        g.links(k, None);
        g.extras(&[]);
        let get = loop {
            let t = g.bound();
            if CONCEPTS.contains(&t.as_str()) || g.terms.iter().all(|t| !CONCEPTS.contains(&t.as_str())) {
                break t;
            }
        };
        text += &format!("LET s = {{ GET {get} WHERE {} }} ", g.conds.join(" AND "));
    }
    let mut g = ScopeGen {
        rng,
        nodes,
        terms: vec![],
        conds: vec![],
    };
    let k = g.rng.gen_range(1..=if with_let { 3 } else { 4 });
    g.links(k, with_let.then_some("s"));
    if with_let && !g.terms.iter().any(|t| t == "s") {
        let c = CONNECTORS.choose(g.rng).unwrap();
        let o = g.term(None);
        g.conds.push(format!("s {c} {o}"));
        g.terms.extend(["s".to_owned(), o]);
    }
    g.extras(&["s"]);
    let mut select: Vec<String> = g
        .terms
        .iter()
        .filter(|t| CONCEPTS.contains(&t.as_str()) || *t == "s")
        .cloned()
        .collect();
    select.sort();
    select.dedup();
    if select.is_empty() || g.rng.gen_bool(0.1) {
        select.push(g.bound());
        select.dedup();
    }
    select.shuffle(g.rng);
    select.truncate(g.rng.gen_range(1..=2));
    text + &format!("SELECT {} WHERE {}", select.join(", "), g.conds.join(" AND "))
}

fn scope_product(scope: &Scope, state: &KbState, lets: &[u128]) -> u128 {
    scope
        .variables
        .iter()
        .map(|v| match &v.domain {
            Domain::Concept(c) => state.instances_of(c).len() as u128,
            Domain::Let(i) => lets[*i],
        })
        .product()
}

/// Largest candidate cross-product over the scopes of `q`, bounding each
/// LET set by the domain of its GET variable.
pub fn max_product(q: &ResolvedQuery, state: &KbState) -> u128 {
    let mut lets = Vec::new();
    let mut worst = 0;
    for l in &q.lets {
        worst = worst.max(scope_product(&l.scope, state, &lets));
        let bound = match &l.get {
            RTerm::Var(v) => match &l.scope.variables[*v].domain {
                Domain::Concept(c) => state.instances_of(c).len() as u128,
                Domain::Let(i) => lets[*i],
            },
            RTerm::Const(_) => 1,
        };
        lets.push(bound);
    }
    worst.max(scope_product(&q.main, state, &lets))
}

pub fn registry() -> FunctionRegistry {
    FunctionRegistry::default()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Parses and resolves `text`, or `None` when the random query is not
/// resolvable against this store.
pub fn resolved(text: &str, state: &KbState) -> Option<ResolvedQuery> {
    let ast = hyperkb::hyql::parse(text).unwrap_or_else(|e| panic!("generated query must parse: {e}\n{text}"));
    resolve(&ast, state, &registry()).ok()
}
