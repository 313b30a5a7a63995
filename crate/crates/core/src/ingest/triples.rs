use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use super::IngestError;
use crate::model::{instance_of_id, EntityId, Literal, Properties, OBJECT, SUBJECT};
use crate::store::record::{BindingRecord, Record};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectKind {
    Resource,
    Literal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleRecord {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub kind: ObjectKind,
}

impl TripleRecord {
    /// Parses `subject\tpredicate\tobject\tkind`.
    pub fn parse(line: &str) -> Result<Self, String> {
        let fields: Vec<&str> = line.split('\t').collect();
        let [subject, predicate, object, kind] = fields.as_slice() else {
            return Err(format!("expected 4 tab-separated fields, found {}", fields.len()));
        };
        if [subject, predicate, object].iter().any(|f| f.is_empty()) {
            return Err("empty field".into());
        }
        let kind = match *kind {
            "resource" => ObjectKind::Resource,
            "literal" => ObjectKind::Literal,
            other => return Err(format!("unknown object kind `{other}`")),
        };
        Ok(TripleRecord {
            subject: subject.to_string(),
            predicate: predicate.to_string(),
            object: object.to_string(),
            kind,
        })
    }
}

/// How triple names map onto the store's vocabulary.
#[derive(Clone, Debug)]
pub struct ImportSpec {
    /// Resource name → concept id.
    pub concepts: BTreeMap<String, EntityId>,
    /// Predicate → connector id, for resource-valued triples.
    pub connectors: BTreeMap<String, EntityId>,
    /// Namespace of the emitted node ids (`<namespace>:<resource name>`).
    pub namespace: String,
    pub context: Option<EntityId>,
}

/// Literal text as the narrowest literal it spells: integer, float,
/// boolean, else text.
pub fn parse_literal(text: &str) -> Literal {
    if let Ok(i) = text.parse::<i64>() {
        return Literal::Integer(i);
    }
    if let Ok(x) = text.parse::<f64>() {
        if x.is_finite() {
            return Literal::Number(x);
        }
    }
    match text {
        "true" => Literal::Boolean(true),
        "false" => Literal::Boolean(false),
        _ => Literal::Text(text.to_owned()),
    }
}

/// Converts triples to load records: one node per distinct resource (with
/// its literal properties), one `instanceOf` link per node, one link per
/// distinct resource-valued triple.
pub fn import_triples(input: impl BufRead, spec: &ImportSpec) -> Result<Vec<Record>, IngestError> {
    let mut props: BTreeMap<String, Properties> = BTreeMap::new();
    let mut edges: BTreeSet<(String, String, String)> = BTreeSet::new();
    let mut order: Vec<String> = Vec::new();
    let mut touch = |name: &str, props: &mut BTreeMap<String, Properties>| -> Result<(), IngestError> {
        if !spec.concepts.contains_key(name) {
            return Err(IngestError::UnknownConcept(name.to_owned()));
        }
        if !props.contains_key(name) {
            props.insert(name.to_owned(), Properties::new());
            order.push(name.to_owned());
        }
        Ok(())
    };

    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t = TripleRecord::parse(line.trim_end_matches('\r'))
            .map_err(|message| IngestError::Malformed { line: i + 1, message })?;
        touch(&t.subject, &mut props)?;
        match t.kind {
            ObjectKind::Resource => {
                if !spec.connectors.contains_key(&t.predicate) {
                    return Err(IngestError::UnknownPredicate(t.predicate));
                }
                touch(&t.object, &mut props)?;
                edges.insert((t.subject, t.predicate, t.object));
            }
            ObjectKind::Literal => {
                let value = parse_literal(&t.object);
                let node = props.get_mut(&t.subject).unwrap();
                match node.get(&t.predicate) {
                    Some(existing) if *existing != value => {
                        return Err(IngestError::ConflictingLiteral {
                            subject: t.subject,
                            predicate: t.predicate,
                        })
                    }
                    _ => {
                        node.insert(t.predicate, value);
                    }
                }
            }
        }
    }

    let id = |name: &str| EntityId::new(&spec.namespace, name).map_err(IngestError::from);
    let link = |conn: &EntityId, s: EntityId, o: EntityId| Record::Link {
        id: None,
        conn: conn.clone(),
        ctx: spec.context.clone(),
        b: BTreeMap::from([
            (SUBJECT.to_owned(), BindingRecord { n: s, a: None }),
            (OBJECT.to_owned(), BindingRecord { n: o, a: None }),
        ]),
        props: None,
    };
    let mut out = Vec::with_capacity(order.len() * 2 + edges.len());
    for name in &order {
        let p = props.remove(name).unwrap();
        out.push(Record::Node {
            id: id(name)?,
            ctx: spec.context.clone(),
            anchors: None,
            props: (!p.is_empty()).then_some(p),
        });
    }
    for name in &order {
        out.push(link(&instance_of_id(), id(name)?, spec.concepts[name].clone()));
    }
    for (s, p, o) in edges {
        out.push(link(&spec.connectors[&p], id(&s)?, id(&o)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlschema::mls_concept;

    fn spec() -> ImportSpec {
        ImportSpec {
            concepts: [
                ("model_42", "Model"),
                ("mc_42", "ModelCharacteristic"),
                ("data_7", "Data"),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_owned(), mls_concept(v)))
            .collect(),
            connectors: BTreeMap::from([("hasQuality".to_owned(), EntityId::parse("mls:hasQuality").unwrap())]),
            namespace: "imp".into(),
            context: None,
        }
    }

    fn run(text: &str) -> Result<Vec<Record>, IngestError> {
        import_triples(text.as_bytes(), &spec())
    }

    #[test]
    fn resource_becomes_link() {
        let recs = run("model_42\thasQuality\tmc_42\tresource\n").unwrap();
        let links: Vec<_> = recs
            .iter()
            .filter_map(|r| match r {
                Record::Link { conn, .. } => Some(conn.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(links, ["hk:instanceOf", "hk:instanceOf", "mls:hasQuality"]);
        assert_eq!(recs.iter().filter(|r| matches!(r, Record::Node { .. })).count(), 2);
    }

    #[test]
    fn literal_becomes_property() {
        let recs = run(
            "data_7\tid\tpascal_voc_2012\tliteral\ndata_7\tsize\t12\tliteral\ndata_7\tid\tpascal_voc_2012\tliteral\n",
        )
        .unwrap();
        let Record::Node { props: Some(p), .. } = &recs[0] else {
            panic!()
        };
        assert_eq!(p["id"], Literal::Text("pascal_voc_2012".into()));
        assert_eq!(p["size"], Literal::Integer(12));
        assert_eq!(recs.len(), 2);
    }

    #[test]
    fn empty_stream_is_empty() {
        assert_eq!(run("").unwrap(), vec![]);
    }

    #[test]
    fn errors() {
        assert!(matches!(run("who\tid\tx\tliteral"), Err(IngestError::UnknownConcept(s)) if s == "who"));
        assert!(matches!(
            run("data_7\tid\ta\tliteral\ndata_7\tid\tb\tliteral"),
            Err(IngestError::ConflictingLiteral { .. })
        ));
        assert!(matches!(
            run("model_42\tfoo\tmc_42\tresource"),
            Err(IngestError::UnknownPredicate(_))
        ));
        assert!(matches!(run("a\tb\tc"), Err(IngestError::Malformed { line: 1, .. })));
        assert!(matches!(
            run("\na\tb\tc\tthing"),
            Err(IngestError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn literal_parsing() {
        assert_eq!(parse_literal("3"), Literal::Integer(3));
        assert_eq!(parse_literal("0.91"), Literal::Number(0.91));
        assert_eq!(parse_literal("true"), Literal::Boolean(true));
        assert_eq!(parse_literal("NaN"), Literal::Text("NaN".into()));
        assert_eq!(parse_literal("Horizon"), Literal::Text("Horizon".into()));
    }
}
