use std::io::BufRead;

use super::record::Record;
use super::{KbState, LoadReport, StoreError};

pub(crate) fn parse_records(input: impl BufRead) -> Result<Vec<(usize, Record)>, StoreError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let record = Record::parse_line(trimmed).map_err(|e| StoreError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, record));
    }
    Ok(out)
}

/// Applies one record as-is. Returns the record as stored (link ids filled in).
fn apply_one(state: &mut KbState, record: Record) -> Result<Record, StoreError> {
    match record {
        Record::Context { .. } => {
            state.insert_context(record.to_context().unwrap())?;
            Ok(record)
        }
        Record::Connector { .. } => {
            state.insert_connector(record.to_connector().unwrap()?)?;
            Ok(record)
        }
        Record::Node { .. } => {
            state.insert_node(record.to_node().unwrap()?)?;
            Ok(record)
        }
        Record::Link { .. } => {
            let link = record.to_link(|| state.fresh_id("lnk")).unwrap();
            let stored = Record::from_link(&link);
            state.insert_link(link)?;
            Ok(stored)
        }
        Record::Prop { ref id, ref props } => {
            state.set_properties(id, props)?;
            Ok(record)
        }
        Record::Delete { ref id } => {
            state.remove(id)?;
            Ok(record)
        }
    }
}

/// Applies a batch in dependency order: contexts (parents first), connectors,
/// nodes, links, then property updates and deletions in input order. Forward
/// references within the batch therefore resolve.
pub(crate) fn apply_batch(
    state: &mut KbState,
    records: Vec<(usize, Record)>,
) -> Result<(LoadReport, Vec<Record>), StoreError> {
    let mut report = LoadReport::default();
    let mut applied = Vec::with_capacity(records.len());

    let mut contexts = Vec::new();
    let mut connectors = Vec::new();
    let mut nodes = Vec::new();
    let mut links = Vec::new();
    let mut updates = Vec::new();
    for (line, r) in records {
        match r {
            Record::Context { .. } => contexts.push((line, r)),
            Record::Connector { .. } => connectors.push((line, r)),
            Record::Node { .. } => nodes.push((line, r)),
            Record::Link { .. } => links.push((line, r)),
            Record::Prop { .. } | Record::Delete { .. } => updates.push((line, r)),
        }
    }

    // Contexts whose parent is still missing wait for a later pass.
    while !contexts.is_empty() {
        let before = contexts.len();
        let mut waiting = Vec::new();
        for (line, r) in contexts {
            let Record::Context { parent, .. } = &r else {
                unreachable!()
            };
            if parent.as_ref().is_some_and(|p| state.context(p).is_none()) {
                waiting.push((line, r));
                continue;
            }
            applied.push(apply_one(state, r).map_err(|e| e.at(line))?);
            report.contexts += 1;
        }
        if waiting.len() == before {
            let (line, r) = &waiting[0];
            let Record::Context { parent, .. } = r else {
                unreachable!()
            };
            return Err(StoreError::UnknownContext(parent.clone().unwrap()).at(*line));
        }
        contexts = waiting;
    }
    for (line, r) in connectors {
        applied.push(apply_one(state, r).map_err(|e| e.at(line))?);
        report.connectors += 1;
    }
    for (line, r) in nodes {
        applied.push(apply_one(state, r).map_err(|e| e.at(line))?);
        report.nodes += 1;
    }
    for (line, r) in links {
        applied.push(apply_one(state, r).map_err(|e| e.at(line))?);
        report.links += 1;
    }
    for (line, r) in updates {
        applied.push(apply_one(state, r).map_err(|e| e.at(line))?);
        report.updates += 1;
    }
    Ok((report, applied))
}

/// Replays a journal strictly in order.
pub(crate) fn replay(state: &mut KbState, input: impl BufRead) -> Result<(), StoreError> {
    for (line, record) in parse_records(input)? {
        apply_one(state, record).map_err(|e| e.at(line))?;
        state.generation += 1;
    }
    Ok(())
}
