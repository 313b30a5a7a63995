use std::collections::BTreeSet;
use std::fmt::Write;
use std::str::FromStr;
use std::time::Duration;

use serde_json::{json, Map, Value};

use crate::model::EntityId;

/// Distinct ids per SELECT variable, in SELECT order, plus the number of
/// satisfying assignments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResultSet {
    pub columns: Vec<(String, BTreeSet<EntityId>)>,
    pub matches: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown format `{other}` (text, json, csv)")),
        }
    }
}

impl ResultSet {
    pub fn is_empty(&self) -> bool {
        self.matches == 0
    }

    pub fn column(&self, name: &str) -> Option<&BTreeSet<EntityId>> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, ids)| ids)
    }

    /// Size of the first SELECT variable's result.
    pub fn cardinality(&self) -> usize {
        self.columns.first().map_or(0, |(_, ids)| ids.len())
    }

    pub fn render(&self, format: OutputFormat, elapsed: Duration) -> String {
        match format {
            OutputFormat::Text => self.to_text(),
            OutputFormat::Json => self.to_json(elapsed).to_string() + "\n",
            OutputFormat::Csv => self.to_csv(),
        }
    }

    /// One id per line; with several variables, each block is headed `[var]`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let headed = self.columns.len() > 1;
        for (name, ids) in &self.columns {
            if headed {
                writeln!(out, "[{name}]").unwrap();
            }
            for id in ids {
                writeln!(out, "{id}").unwrap();
            }
        }
        out
    }

    /// `{"<var>": [ids…], "matches": n, "elapsed_ms": t}`
    pub fn to_json(&self, elapsed: Duration) -> Value {
        let mut obj = Map::new();
        for (name, ids) in &self.columns {
            obj.insert(
                name.clone(),
                json!(ids.iter().map(EntityId::as_str).collect::<Vec<_>>()),
            );
        }
        obj.insert("matches".into(), json!(self.matches));
        obj.insert("elapsed_ms".into(), json!(elapsed.as_secs_f64() * 1e3));
        Value::Object(obj)
    }

    /// `variable,id` rows. Ids never contain commas or quotes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variable,id\n");
        for (name, ids) in &self.columns {
            for id in ids {
                writeln!(out, "{name},{id}").unwrap();
            }
        }
        out
    }
}
