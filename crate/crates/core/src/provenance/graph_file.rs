//! The native graph file: a strict JSON encoding of [`DataFlowGraph`] with
//! rules and programs embedded as rule-language text.

use serde::{Deserialize, Serialize};

use crate::dsl::{parse_data_rules, parse_flow_program, serialize_data_rules, serialize_flow_program};
use crate::model::{DataFlowGraph, DataNode, ProcessNode, Symbol};
use crate::report::canonical_json;

use super::SchemaError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    #[serde(default)]
    processes: Vec<ProcessEntry>,
    #[serde(default)]
    data: Vec<DataEntry>,
    #[serde(default)]
    consumptions: Vec<ConsumptionEntry>,
    #[serde(default)]
    generations: Vec<GenerationEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcessEntry {
    id: String,
    #[serde(default)]
    in_ports: Vec<String>,
    #[serde(default)]
    out_ports: Vec<String>,
    #[serde(default)]
    actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    program: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataEntry {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_rules: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConsumptionEntry {
    data: String,
    process: String,
    port: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerationEntry {
    process: String,
    port: String,
    data: String,
}

fn symbol(path: String, s: String) -> Result<Symbol, SchemaError> {
    Symbol::new(s).map_err(|e| SchemaError::new(path, e.to_string()))
}

fn symbols(path: &str, list: Vec<String>) -> Result<Vec<Symbol>, SchemaError> {
    list.into_iter()
        .enumerate()
        .map(|(i, s)| symbol(format!("{path}[{i}]"), s))
        .collect()
}

/// Parses a native graph file. Graph-level invariants are not checked here;
/// run [`crate::engine::validate_graph`] on the result.
pub fn load_graph(text: &str) -> Result<DataFlowGraph, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: GraphFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        SchemaError::new(path, e.into_inner().to_string())
    })?;

    let mut graph = DataFlowGraph::new();
    for (i, p) in file.processes.into_iter().enumerate() {
        let path = format!("processes[{i}]");
        let mut node = ProcessNode::new(p.id).with_ports(
            symbols(&format!("{path}.in_ports"), p.in_ports)?,
            symbols(&format!("{path}.out_ports"), p.out_ports)?,
        );
        node.actions = symbols(&format!("{path}.actions"), p.actions)?
            .into_iter()
            .collect();
        if let Some(text) = p.program {
            node.program = Some(
                parse_flow_program(&text)
                    .map_err(|e| SchemaError::new(format!("{path}.program"), e.to_string()))?,
            );
        }
        graph
            .add_process(node)
            .map_err(|e| SchemaError::new(format!("{path}.id"), e.to_string()))?;
    }
    for (i, d) in file.data.into_iter().enumerate() {
        let path = format!("data[{i}]");
        let mut node = DataNode::new(d.id);
        if let Some(text) = d.initial_rules {
            node.initial_rules = Some(
                parse_data_rules(&text)
                    .map_err(|e| SchemaError::new(format!("{path}.initial_rules"), e.to_string()))?,
            );
        }
        graph
            .add_data(node)
            .map_err(|e| SchemaError::new(format!("{path}.id"), e.to_string()))?;
    }
    for (i, c) in file.consumptions.into_iter().enumerate() {
        let port = symbol(format!("consumptions[{i}].port"), c.port)?;
        graph.add_consumption(c.data, c.process, port);
    }
    for (i, g) in file.generations.into_iter().enumerate() {
        let port = symbol(format!("generations[{i}].port"), g.port)?;
        graph.add_generation(g.process, port, g.data);
    }
    Ok(graph)
}

/// Canonical graph file: nodes and edges sorted, rules and programs in
/// canonical rule-language form, object keys sorted.
pub fn save_graph(graph: &DataFlowGraph) -> String {
    let strings = |v: &[Symbol]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let file = GraphFile {
        processes: graph
            .processes()
            .map(|p| ProcessEntry {
                id: p.id.clone(),
                in_ports: strings(&p.in_ports),
                out_ports: strings(&p.out_ports),
                actions: p.actions.iter().map(|a| a.to_string()).collect(),
                program: p.program.as_ref().map(serialize_flow_program),
            })
            .collect(),
        data: graph
            .data_nodes()
            .map(|d| DataEntry {
                id: d.id.clone(),
                initial_rules: d.initial_rules.as_ref().map(serialize_data_rules),
            })
            .collect(),
        consumptions: graph
            .consumptions()
            .iter()
            .map(|c| ConsumptionEntry {
                data: c.data.clone(),
                process: c.process.clone(),
                port: c.port.to_string(),
            })
            .collect(),
        generations: graph
            .generations()
            .iter()
            .map(|g| GenerationEntry {
                process: g.process.clone(),
                port: g.port.to_string(),
                data: g.data.clone(),
            })
            .collect(),
    };
    canonical_json(&file)
}
