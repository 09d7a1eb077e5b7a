//! Graph-wide derivation.
//!
//! Processes run one at a time in a topological order of the process-level
//! graph (producer before consumer). Each input port receives the union of
//! the rule sets on the data it consumes, the process's flow program runs,
//! and each generated data node takes the output of its generating port.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::interpreter::{default_program, do_process, ProcessTrace};
use crate::model::{DataFlowGraph, DataRuleSet, PortError, Symbol};

/// A violation of a graph or flow-program invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind")]
pub enum Diagnostic {
    DuplicatePort { process: String, port: String },
    UnknownProcess { process: String, edge: String },
    UnknownData { data: String, edge: String },
    UnknownPort { process: String, port: String, direction: String },
    MultipleGenerators { data: String, generators: Vec<String> },
    PortGeneratesMultiple { process: String, port: String, data: Vec<String> },
    InitialRulesOnGenerated { data: String },
    CycleDetected { processes: Vec<String> },
    InvalidProgram { process: String, message: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DuplicatePort { process, port } => {
                write!(f, "DuplicatePort: process {process} declares port {port} more than once")
            }
            Diagnostic::UnknownProcess { process, edge } => {
                write!(f, "UnknownProcess: {edge} references missing process {process}")
            }
            Diagnostic::UnknownData { data, edge } => {
                write!(f, "UnknownData: {edge} references missing data node {data}")
            }
            Diagnostic::UnknownPort {
                process,
                port,
                direction,
            } => write!(f, "UnknownPort: process {process} has no {direction} port {port}"),
            Diagnostic::MultipleGenerators { data, generators } => write!(
                f,
                "MultipleGenerators({data}): generated by {}",
                generators.join(", ")
            ),
            Diagnostic::PortGeneratesMultiple {
                process,
                port,
                data,
            } => write!(
                f,
                "PortGeneratesMultiple: {process}.{port} generates {}",
                data.join(", ")
            ),
            Diagnostic::InitialRulesOnGenerated { data } => write!(
                f,
                "InitialRulesOnGenerated({data}): generated data cannot carry initial rules"
            ),
            Diagnostic::CycleDetected { processes } => {
                write!(f, "CycleDetected([{}])", processes.join(", "))
            }
            Diagnostic::InvalidProgram { process, message } => {
                write!(f, "InvalidProgram: process {process}: {message}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cycle detected through processes [{}]", .0.join(", "))]
pub struct CycleError(pub Vec<String>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Port(#[from] PortError),
    #[error("invalid graph: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("not a topological order of the graph: {0}")]
    InvalidOrder(String),
}

/// Derived rules for every data node, plus what each process saw and did.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DerivationResult {
    pub per_data_rules: BTreeMap<String, DataRuleSet>,
    pub per_port_inputs: BTreeMap<(String, Symbol), DataRuleSet>,
    pub traces: Vec<ProcessTrace>,
    pub order: Vec<String>,
    /// Data nodes with a generating edge, i.e. products of the run.
    pub generated: BTreeSet<String>,
}

/// Every violation of the graph invariants, in a stable order.
pub fn validate_graph(graph: &DataFlowGraph) -> Vec<Diagnostic> {
    let mut out = BTreeSet::new();

    for p in graph.processes() {
        let mut seen = BTreeSet::new();
        for port in p.in_ports.iter().chain(&p.out_ports) {
            if !seen.insert(port) {
                out.insert(Diagnostic::DuplicatePort {
                    process: p.id.clone(),
                    port: port.to_string(),
                });
            }
        }
        if let Some(program) = &p.program {
            if let Err(e) = program.check_ports(p) {
                out.insert(Diagnostic::InvalidProgram {
                    process: p.id.clone(),
                    message: e.to_string(),
                });
            }
        }
    }

    for c in graph.consumptions() {
        let edge = format!("consumption {} -> {}.{}", c.data, c.process, c.port);
        if graph.data(&c.data).is_none() {
            out.insert(Diagnostic::UnknownData {
                data: c.data.clone(),
                edge: edge.clone(),
            });
        }
        match graph.process(&c.process) {
            None => {
                out.insert(Diagnostic::UnknownProcess {
                    process: c.process.clone(),
                    edge,
                });
            }
            Some(p) if !p.in_ports.contains(&c.port) => {
                out.insert(Diagnostic::UnknownPort {
                    process: c.process.clone(),
                    port: c.port.to_string(),
                    direction: "input".into(),
                });
            }
            Some(_) => {}
        }
    }

    let mut by_data: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut by_port: BTreeMap<(&str, &Symbol), Vec<String>> = BTreeMap::new();
    for g in graph.generations() {
        let edge = format!("generation {}.{} -> {}", g.process, g.port, g.data);
        match graph.data(&g.data) {
            None => {
                out.insert(Diagnostic::UnknownData {
                    data: g.data.clone(),
                    edge: edge.clone(),
                });
            }
            Some(d) if d.initial_rules.is_some() => {
                out.insert(Diagnostic::InitialRulesOnGenerated { data: g.data.clone() });
            }
            Some(_) => {}
        }
        match graph.process(&g.process) {
            None => {
                out.insert(Diagnostic::UnknownProcess {
                    process: g.process.clone(),
                    edge,
                });
            }
            Some(p) if !p.out_ports.contains(&g.port) => {
                out.insert(Diagnostic::UnknownPort {
                    process: g.process.clone(),
                    port: g.port.to_string(),
                    direction: "output".into(),
                });
            }
            Some(_) => {}
        }
        by_data
            .entry(&g.data)
            .or_default()
            .push(format!("{}.{}", g.process, g.port));
        by_port
            .entry((&g.process, &g.port))
            .or_default()
            .push(g.data.clone());
    }
    for (data, generators) in by_data {
        if generators.len() > 1 {
            out.insert(Diagnostic::MultipleGenerators {
                data: data.to_owned(),
                generators,
            });
        }
    }
    for ((process, port), data) in by_port {
        if data.len() > 1 {
            out.insert(Diagnostic::PortGeneratesMultiple {
                process: process.to_owned(),
                port: port.to_string(),
                data,
            });
        }
    }

    if let Err(CycleError(processes)) = topological_order(graph) {
        out.insert(Diagnostic::CycleDetected { processes });
    }

    out.into_iter().collect()
}

/// Process-level successor sets: P -> Q when P generates data Q consumes.
/// Edges naming unknown processes are ignored.
fn process_edges(graph: &DataFlowGraph) -> BTreeMap<&str, BTreeSet<&str>> {
    let mut succ: BTreeMap<&str, BTreeSet<&str>> =
        graph.processes().map(|p| (p.id.as_str(), BTreeSet::new())).collect();
    let mut producers: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for g in graph.generations() {
        if succ.contains_key(g.process.as_str()) {
            producers.entry(&g.data).or_default().push(&g.process);
        }
    }
    for c in graph.consumptions() {
        if !succ.contains_key(c.process.as_str()) {
            continue;
        }
        for &producer in producers.get(c.data.as_str()).into_iter().flatten() {
            succ.get_mut(producer)
                .expect("producer is a known process")
                .insert(&c.process);
        }
    }
    succ
}

/// Kahn's algorithm, always taking the lexicographically smallest ready
/// process.
pub fn topological_order(graph: &DataFlowGraph) -> Result<Vec<String>, CycleError> {
    let succ = process_edges(graph);
    let mut indegree: BTreeMap<&str, usize> = succ.keys().map(|&k| (k, 0)).collect();
    for targets in succ.values() {
        for t in targets {
            *indegree.get_mut(t).expect("known process") += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<&str>> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&k, _)| Reverse(k))
        .collect();
    let mut order = Vec::with_capacity(succ.len());
    while let Some(Reverse(p)) = ready.pop() {
        order.push(p.to_owned());
        for &q in &succ[p] {
            let d = indegree.get_mut(q).expect("known process");
            *d -= 1;
            if *d == 0 {
                ready.push(Reverse(q));
            }
        }
    }
    if order.len() == succ.len() {
        return Ok(order);
    }

    // Every unplaced process has an unplaced predecessor, so walking
    // predecessors from any of them must revisit a process.
    let placed: BTreeSet<&str> = order.iter().map(String::as_str).collect();
    let mut pred: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (&p, targets) in &succ {
        if placed.contains(p) {
            continue;
        }
        for &q in targets {
            if !placed.contains(q) {
                pred.entry(q).or_default().insert(p);
            }
        }
    }
    let start = *pred.keys().next().expect("a cycle leaves unplaced processes");
    let mut walk = vec![start];
    let mut position = BTreeMap::from([(start, 0usize)]);
    let mut current = start;
    let cycle_start = loop {
        let next = *pred[current].iter().next().expect("unplaced predecessor");
        if let Some(&i) = position.get(next) {
            break i;
        }
        position.insert(next, walk.len());
        walk.push(next);
        current = next;
    };
    let mut cycle: Vec<String> = walk[cycle_start..].iter().rev().map(|s| s.to_string()).collect();
    let smallest = (0..cycle.len()).min_by_key(|&i| &cycle[i]).unwrap_or(0);
    cycle.rotate_left(smallest);
    Err(CycleError(cycle))
}

/// Derives rules for every data node, processing in [`topological_order`].
pub fn derive(graph: &DataFlowGraph) -> Result<DerivationResult, EngineError> {
    check_valid(graph)?;
    let order = topological_order(graph)?;
    run(graph, order)
}

/// Derives with a caller-chosen processing order, which must be a valid
/// topological order of the graph.
pub fn derive_with_order(
    graph: &DataFlowGraph,
    order: &[String],
) -> Result<DerivationResult, EngineError> {
    check_valid(graph)?;
    let succ = process_edges(graph);
    let mut position = BTreeMap::new();
    for (i, p) in order.iter().enumerate() {
        if !succ.contains_key(p.as_str()) {
            return Err(EngineError::InvalidOrder(format!("unknown process {p}")));
        }
        if position.insert(p.as_str(), i).is_some() {
            return Err(EngineError::InvalidOrder(format!("{p} listed twice")));
        }
    }
    if position.len() != succ.len() {
        return Err(EngineError::InvalidOrder("not every process is listed".into()));
    }
    for (p, targets) in &succ {
        for q in targets {
            if position[p] > position[q] {
                return Err(EngineError::InvalidOrder(format!("{q} listed before {p}")));
            }
        }
    }
    run(graph, order.to_vec())
}

fn check_valid(graph: &DataFlowGraph) -> Result<(), EngineError> {
    let mut diagnostics = validate_graph(graph);
    if diagnostics.is_empty() {
        return Ok(());
    }
    if diagnostics.len() == 1 {
        if let Diagnostic::CycleDetected { processes } = &mut diagnostics[0] {
            return Err(CycleError(std::mem::take(processes)).into());
        }
    }
    Err(EngineError::Invalid(diagnostics))
}

fn run(graph: &DataFlowGraph, order: Vec<String>) -> Result<DerivationResult, EngineError> {
    let mut per_data_rules: BTreeMap<String, DataRuleSet> = graph
        .data_nodes()
        .map(|d| (d.id.clone(), d.initial_rules.clone().unwrap_or_default()))
        .collect();
    let generated: BTreeSet<String> = graph.generations().iter().map(|g| g.data.clone()).collect();

    let mut consumed: BTreeMap<(&str, &Symbol), Vec<&str>> = BTreeMap::new();
    for c in graph.consumptions() {
        consumed.entry((&c.process, &c.port)).or_default().push(&c.data);
    }
    let mut generates: BTreeMap<&str, Vec<(&Symbol, &str)>> = BTreeMap::new();
    for g in graph.generations() {
        generates.entry(&g.process).or_default().push((&g.port, &g.data));
    }

    let mut per_port_inputs = BTreeMap::new();
    let mut traces = Vec::with_capacity(order.len());
    for id in &order {
        let process = graph.process(id).expect("order names known processes");
        let mut inputs = BTreeMap::new();
        for port in &process.in_ports {
            let mut set = DataRuleSet::new();
            for data in consumed.get(&(id.as_str(), port)).into_iter().flatten() {
                set.merge(&per_data_rules[*data]);
            }
            per_port_inputs.insert((id.clone(), port.clone()), set.clone());
            inputs.insert(port.clone(), set);
        }
        let fallback;
        let program = match &process.program {
            Some(p) => p,
            None => {
                fallback = default_program(process);
                &fallback
            }
        };
        let output = do_process(process, program, &inputs)?;
        for (port, data) in generates.get(id.as_str()).into_iter().flatten() {
            per_data_rules.insert(
                data.to_string(),
                output.outputs.get(*port).cloned().unwrap_or_default(),
            );
        }
        traces.push(output.trace);
    }

    Ok(DerivationResult {
        per_data_rules,
        per_port_inputs,
        traces,
        order,
        generated,
    })
}
