//! HKJSONL: one JSON object per line, discriminated by `"t"`.
//!
//! ```text
//! {"t":"ctx","id":"ctx:mls","name":"mls","parent":"ctx:root"}
//! {"t":"conn","id":"mls:hasOutput","name":"hasOutput","roles":["subject","object"]}
//! {"t":"node","id":"ex:run1","ctx":"ctx:runs","anchors":["Conv1"],"props":{"status":"ok"}}
//! {"t":"link","conn":"mls:hasOutput","b":{"subject":{"n":"ex:run1"},"object":{"n":"ex:model1","a":"lambda"}}}
//! ```
//!
//! Journals additionally use `prop` (set properties on an existing node) and
//! `del` (remove a node or link).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{
    default_context_id, Anchor, Binding, Connector, Context, EntityId, Link, ModelError, Node, Properties, LAMBDA,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t")]
pub enum Record {
    #[serde(rename = "ctx")]
    Context {
        id: EntityId,
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parent: Option<EntityId>,
    },
    #[serde(rename = "conn")]
    Connector {
        id: EntityId,
        name: String,
        roles: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ctx: Option<EntityId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        props: Option<Properties>,
    },
    #[serde(rename = "node")]
    Node {
        id: EntityId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ctx: Option<EntityId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        anchors: Option<Vec<AnchorRecord>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        props: Option<Properties>,
    },
    #[serde(rename = "link")]
    Link {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<EntityId>,
        conn: EntityId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ctx: Option<EntityId>,
        b: BTreeMap<String, BindingRecord>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        props: Option<Properties>,
    },
    #[serde(rename = "prop")]
    Prop { id: EntityId, props: Properties },
    #[serde(rename = "del")]
    Delete { id: EntityId },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnchorRecord {
    Name(String),
    Full {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        descriptor: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BindingRecord {
    pub n: EntityId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
}

fn context_field(ctx: &EntityId) -> Option<EntityId> {
    (ctx != &default_context_id()).then(|| ctx.clone())
}

fn props_field(props: &Properties) -> Option<Properties> {
    (!props.is_empty()).then(|| props.clone())
}

impl Record {
    pub fn from_context(ctx: &Context) -> Record {
        Record::Context {
            id: ctx.id.clone(),
            name: ctx.name.clone(),
            parent: ctx.parent.clone(),
        }
    }

    pub fn from_connector(conn: &Connector) -> Record {
        Record::Connector {
            id: conn.id.clone(),
            name: conn.name.clone(),
            roles: conn.roles().to_vec(),
            ctx: context_field(&conn.context),
            props: props_field(&conn.properties),
        }
    }

    pub fn from_node(node: &Node) -> Record {
        let anchors: Vec<AnchorRecord> = node
            .anchors()
            .filter(|a| a.name != LAMBDA || a.descriptor.is_some())
            .map(|a| match &a.descriptor {
                None => AnchorRecord::Name(a.name.clone()),
                Some(d) => AnchorRecord::Full {
                    name: a.name.clone(),
                    descriptor: Some(d.clone()),
                },
            })
            .collect();
        Record::Node {
            id: node.id.clone(),
            ctx: context_field(&node.context),
            anchors: (!anchors.is_empty()).then_some(anchors),
            props: props_field(&node.properties),
        }
    }

    pub fn from_link(link: &Link) -> Record {
        Record::Link {
            id: Some(link.id.clone()),
            conn: link.connector.clone(),
            ctx: context_field(&link.context),
            b: link
                .bindings
                .iter()
                .map(|(role, b)| {
                    (
                        role.clone(),
                        BindingRecord {
                            n: b.node.clone(),
                            a: (b.anchor != LAMBDA).then(|| b.anchor.clone()),
                        },
                    )
                })
                .collect(),
            props: props_field(&link.properties),
        }
    }

    pub fn to_context(&self) -> Option<Context> {
        match self {
            Record::Context { id, name, parent } => Some(Context::new(id.clone(), name.clone(), parent.clone())),
            _ => None,
        }
    }

    pub fn to_connector(&self) -> Option<Result<Connector, ModelError>> {
        match self {
            Record::Connector {
                id,
                name,
                roles,
                ctx,
                props,
            } => Some(
                Connector::new(
                    id.clone(),
                    name.clone(),
                    roles.clone(),
                    ctx.clone().unwrap_or_else(default_context_id),
                )
                .map(|mut c| {
                    c.properties = props.clone().unwrap_or_default();
                    c
                }),
            ),
            _ => None,
        }
    }

    pub fn to_node(&self) -> Option<Result<Node, ModelError>> {
        match self {
            Record::Node {
                id,
                ctx,
                anchors,
                props,
            } => {
                let mut node = Node::new(id.clone(), ctx.clone().unwrap_or_else(default_context_id));
                for a in anchors.iter().flatten() {
                    let anchor = match a {
                        AnchorRecord::Name(name) => Anchor::new(name.clone()),
                        AnchorRecord::Full { name, descriptor } => Anchor::new(name.clone()).map(|an| Anchor {
                            descriptor: descriptor.clone(),
                            ..an
                        }),
                    };
                    match anchor {
                        Ok(anchor) => node.add_anchor(anchor),
                        Err(e) => return Some(Err(e)),
                    }
                }
                node.properties = props.clone().unwrap_or_default();
                Some(Ok(node))
            }
            _ => None,
        }
    }

    /// Builds the link; `assigned_id` is used when the record carries none.
    pub fn to_link(&self, assigned_id: impl FnOnce() -> EntityId) -> Option<Link> {
        match self {
            Record::Link {
                id,
                conn,
                ctx,
                b,
                props,
            } => {
                let id = id.clone().unwrap_or_else(assigned_id);
                let mut link = Link::new(id, conn.clone(), ctx.clone().unwrap_or_else(default_context_id));
                for (role, binding) in b {
                    link.bindings.insert(
                        role.clone(),
                        Binding::new(
                            binding.n.clone(),
                            binding.a.clone().unwrap_or_else(|| LAMBDA.to_owned()),
                        ),
                    );
                }
                link.properties = props.clone().unwrap_or_default();
                Some(link)
            }
            _ => None,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    pub fn parse_line(line: &str) -> Result<Record, serde_json::Error> {
        serde_json::from_str(line)
    }
}
