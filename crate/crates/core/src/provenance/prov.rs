//! Import of PROV-style provenance (entities, activities, `used`,
//! `wasGeneratedBy`) into a [`DataFlowGraph`].

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use serde_json::Value as Json;

use crate::engine::validate_graph;
use crate::model::{DataFlowGraph, DataNode, DataRuleSet, FlowProgram, ProcessNode, Symbol};

use super::{ImportError, SchemaError};

pub type ProvAttributes = BTreeMap<String, Json>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Usage {
    pub activity: String,
    pub entity: String,
    pub role: Option<Symbol>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationRecord {
    pub entity: String,
    pub activity: String,
    pub role: Option<Symbol>,
}

/// The subset of a PROV document the importer understands. Records are
/// keyed by their identifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProvDocument {
    pub entities: BTreeMap<String, ProvAttributes>,
    pub activities: BTreeMap<String, ProvAttributes>,
    pub used: BTreeMap<String, Usage>,
    pub generated: BTreeMap<String, GenerationRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    #[serde(default)]
    prefix: BTreeMap<String, Json>,
    #[serde(default)]
    entity: BTreeMap<String, ProvAttributes>,
    #[serde(default)]
    activity: BTreeMap<String, ProvAttributes>,
    #[serde(default)]
    used: BTreeMap<String, RawUsage>,
    #[serde(default, rename = "wasGeneratedBy")]
    was_generated_by: BTreeMap<String, RawGeneration>,
}

/// `"input1"` or the typed form `{"$": "input1", "type": "..."}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawRole {
    Plain(String),
    Typed {
        #[serde(rename = "$")]
        value: String,
    },
}

impl RawRole {
    fn into_string(self) -> String {
        match self {
            RawRole::Plain(s) | RawRole::Typed { value: s } => s,
        }
    }
}

#[derive(Deserialize)]
struct RawUsage {
    #[serde(rename = "prov:activity")]
    activity: String,
    #[serde(rename = "prov:entity")]
    entity: String,
    #[serde(rename = "prov:role", default)]
    role: Option<RawRole>,
}

#[derive(Deserialize)]
struct RawGeneration {
    #[serde(rename = "prov:entity")]
    entity: String,
    #[serde(rename = "prov:activity")]
    activity: String,
    #[serde(rename = "prov:role", default)]
    role: Option<RawRole>,
}

fn role(path: String, role: Option<RawRole>) -> Result<Option<Symbol>, SchemaError> {
    role.map(|r| Symbol::new(r.into_string()).map_err(|e| SchemaError::new(path, e.to_string())))
        .transpose()
}

pub fn parse_prov(text: &str) -> Result<ProvDocument, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        SchemaError::new(path, e.into_inner().to_string())
    })?;
    let _ = raw.prefix;
    let mut doc = ProvDocument {
        entities: raw.entity,
        activities: raw.activity,
        ..Default::default()
    };
    for (id, u) in raw.used {
        let r = role(format!("used.{id}.prov:role"), u.role)?;
        doc.used.insert(
            id,
            Usage {
                activity: u.activity,
                entity: u.entity,
                role: r,
            },
        );
    }
    for (id, g) in raw.was_generated_by {
        let r = role(format!("wasGeneratedBy.{id}.prov:role"), g.role)?;
        doc.generated.insert(
            id,
            GenerationRecord {
                entity: g.entity,
                activity: g.activity,
                role: r,
            },
        );
    }
    Ok(doc)
}

/// Side information not carried by provenance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProvBindings {
    /// Initial rules for source entities.
    pub rules: BTreeMap<String, DataRuleSet>,
    /// Declared actions per activity.
    pub actions: BTreeMap<String, BTreeSet<Symbol>>,
    pub programs: BTreeMap<String, FlowProgram>,
}

/// Assigns port names for one activity's records in one direction. Records
/// are visited in (entity id, record id) order; role-less records get
/// `<prefix><k>`, skipping names the activity already uses.
fn assign_ports<'a>(
    records: &mut [(&'a str, &'a str, Option<&'a Symbol>)],
    prefix: &str,
    taken: &BTreeSet<&Symbol>,
) -> (Vec<Symbol>, Vec<(&'a str, Symbol)>) {
    records.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let mut ports: Vec<Symbol> = Vec::new();
    let mut edges = Vec::with_capacity(records.len());
    let mut next = 0usize;
    for &(_, entity, role) in records.iter() {
        let port = match role {
            Some(r) => r.clone(),
            None => loop {
                let candidate =
                    Symbol::new(format!("{prefix}{next}")).expect("prefix is an identifier");
                next += 1;
                if !taken.contains(&candidate) {
                    break candidate;
                }
            },
        };
        if !ports.contains(&port) {
            ports.push(port.clone());
        }
        edges.push((entity, port));
    }
    (ports, edges)
}

pub fn import_prov(doc: &ProvDocument, bindings: &ProvBindings) -> Result<DataFlowGraph, ImportError> {
    let dangling = |record: &str, kind: &'static str, id: &str| ImportError::DanglingReference {
        record: record.to_owned(),
        kind,
        id: id.to_owned(),
    };
    for (rid, u) in &doc.used {
        if !doc.activities.contains_key(&u.activity) {
            return Err(dangling(rid, "activity", &u.activity));
        }
        if !doc.entities.contains_key(&u.entity) {
            return Err(dangling(rid, "entity", &u.entity));
        }
    }
    for (rid, g) in &doc.generated {
        if !doc.activities.contains_key(&g.activity) {
            return Err(dangling(rid, "activity", &g.activity));
        }
        if !doc.entities.contains_key(&g.entity) {
            return Err(dangling(rid, "entity", &g.entity));
        }
    }
    for id in bindings.rules.keys() {
        if !doc.entities.contains_key(id) {
            return Err(dangling("rule binding", "entity", id));
        }
    }
    for id in bindings.actions.keys().chain(bindings.programs.keys()) {
        if !doc.activities.contains_key(id) {
            return Err(dangling("activity binding", "activity", id));
        }
    }

    // (record id, entity id, role) grouped by activity
    type Records<'a> = BTreeMap<&'a str, Vec<(&'a str, &'a str, Option<&'a Symbol>)>>;
    let mut used: Records = BTreeMap::new();
    for (rid, u) in &doc.used {
        used.entry(&u.activity)
            .or_default()
            .push((rid, &u.entity, u.role.as_ref()));
    }
    let mut generated: Records = BTreeMap::new();
    for (rid, g) in &doc.generated {
        generated
            .entry(&g.activity)
            .or_default()
            .push((rid, &g.entity, g.role.as_ref()));
    }

    let mut graph = DataFlowGraph::new();
    for id in doc.entities.keys() {
        let mut node = DataNode::new(id.clone());
        node.initial_rules = bindings.rules.get(id).cloned();
        graph.add_data(node)?;
    }
    for id in doc.activities.keys() {
        let mut ins = used.remove(id.as_str()).unwrap_or_default();
        let mut outs = generated.remove(id.as_str()).unwrap_or_default();
        let taken: BTreeSet<&Symbol> = ins
            .iter()
            .chain(outs.iter())
            .filter_map(|(_, _, r)| *r)
            .collect();
        let (in_ports, in_edges) = assign_ports(&mut ins, "in", &taken);
        let (out_ports, out_edges) = assign_ports(&mut outs, "out", &taken);

        let mut node = ProcessNode::new(id.clone()).with_ports(in_ports, out_ports);
        node.actions = bindings.actions.get(id).cloned().unwrap_or_default();
        node.program = bindings.programs.get(id).cloned();
        graph.add_process(node)?;

        for (entity, port) in in_edges {
            let before = graph.consumptions().len();
            graph.add_consumption(entity, id.clone(), port.clone());
            if graph.consumptions().len() == before {
                return Err(ImportError::DuplicateRecord(format!(
                    "{id} uses {entity} as {port} more than once"
                )));
            }
        }
        for (entity, port) in out_edges {
            let before = graph.generations().len();
            graph.add_generation(id.clone(), port.clone(), entity);
            if graph.generations().len() == before {
                return Err(ImportError::DuplicateRecord(format!(
                    "{id} generates {entity} as {port} more than once"
                )));
            }
        }
    }

    let diagnostics = validate_graph(&graph);
    if diagnostics.is_empty() {
        Ok(graph)
    } else {
        Err(ImportError::Validation(diagnostics))
    }
}
