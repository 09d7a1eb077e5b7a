use std::collections::{BTreeMap, BTreeSet};

use rulegraph_core::{DataFlowGraph, DataRuleSet, FlowRule, Symbol};

/// Every topological order of the process-level graph, by backtracking.
pub fn all_topological_orders(graph: &DataFlowGraph) -> Vec<Vec<String>> {
    let ids: Vec<String> = graph.processes().map(|p| p.id.clone()).collect();
    let mut preds: BTreeMap<&str, BTreeSet<&str>> =
        ids.iter().map(|id| (id.as_str(), BTreeSet::new())).collect();
    for c in graph.consumptions() {
        for g in graph.generations().iter().filter(|g| g.data == c.data) {
            preds
                .get_mut(c.process.as_str())
                .expect("known process")
                .insert(g.process.as_str());
        }
    }

    fn extend<'a>(
        preds: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        placed: &mut Vec<&'a str>,
        out: &mut Vec<Vec<String>>,
    ) {
        if placed.len() == preds.len() {
            out.push(placed.iter().map(|s| s.to_string()).collect());
            return;
        }
        for (&p, before) in preds {
            if placed.contains(&p) || !before.iter().all(|b| placed.contains(b)) {
                continue;
            }
            placed.push(p);
            extend(preds, placed, out);
            placed.pop();
        }
    }

    let mut out = Vec::new();
    extend(&preds, &mut Vec::new(), &mut out);
    out
}

/// Which (input port, output port) pairs a pr-only process routes. Without a
/// program, every input reaches every output.
fn routes(graph: &DataFlowGraph, process: &str) -> Vec<(Symbol, Symbol)> {
    let p = graph.process(process).expect("known process");
    match &p.program {
        None => p
            .in_ports
            .iter()
            .flat_map(|i| p.out_ports.iter().map(move |o| (i.clone(), o.clone())))
            .collect(),
        Some(program) => program
            .steps()
            .iter()
            .flat_map(|step| match step {
                FlowRule::Propagate { in_port, out_ports } => out_ports
                    .iter()
                    .map(|o| (in_port.clone(), o.clone()))
                    .collect::<Vec<_>>(),
                FlowRule::End { .. } => Vec::new(),
                FlowRule::Edit(_) => panic!("path oracle only handles pr-only programs"),
            })
            .collect(),
    }
}

/// Expected per-data rules of a pr-only graph: every rule on a source,
/// carried along every path to each data node, with the output port of each
/// process on the path prepended to its history.
pub fn path_oracle(graph: &DataFlowGraph) -> BTreeMap<String, DataRuleSet> {
    let mut out: BTreeMap<String, DataRuleSet> =
        graph.data_nodes().map(|d| (d.id.clone(), DataRuleSet::new())).collect();

    // explicit depth-first walk; the path is the list of ports travelled
    fn walk(
        graph: &DataFlowGraph,
        data: &str,
        rules: &DataRuleSet,
        out: &mut BTreeMap<String, DataRuleSet>,
    ) {
        for c in graph.consumptions().iter().filter(|c| c.data == data) {
            for (in_port, out_port) in routes(graph, &c.process) {
                if in_port != c.port {
                    continue;
                }
                let Some(g) = graph
                    .generations()
                    .iter()
                    .find(|g| g.process == c.process && g.port == out_port)
                else {
                    continue;
                };
                let mut next = DataRuleSet::new();
                for a in &rules.attributes {
                    let mut a = a.clone();
                    a.history = a.history.prepend(out_port.clone());
                    next.attributes.insert(a);
                }
                for o in &rules.obligations {
                    let mut o = o.clone();
                    o.history = o.history.prepend(out_port.clone());
                    next.obligations.insert(o);
                }
                out.get_mut(&g.data).expect("known data").merge(&next);
                walk(graph, &g.data, &next, out);
            }
        }
    }

    for d in graph.data_nodes() {
        if let Some(rules) = &d.initial_rules {
            out.get_mut(&d.id).expect("known data").merge(rules);
            walk(graph, &d.id, rules, &mut out);
        }
    }
    out
}

/// Output of a pr/end program computed by enumerating every (item, pr step,
/// destination) triple.
pub fn propagate_only(
    inputs: &BTreeMap<Symbol, DataRuleSet>,
    steps: &[FlowRule],
) -> BTreeMap<Symbol, DataRuleSet> {
    let mut out = BTreeMap::new();
    if let Some(FlowRule::End { out_ports }) = steps.last() {
        for p in out_ports {
            out.insert(p.clone(), DataRuleSet::new());
        }
    }
    for step in steps {
        let FlowRule::Propagate { in_port, out_ports } = step else {
            continue;
        };
        let Some(rules) = inputs.get(in_port) else {
            continue;
        };
        for q in out_ports {
            let set: &mut DataRuleSet = out.get_mut(q).expect("ended port");
            for a in &rules.attributes {
                let mut a = a.clone();
                a.history = a.history.prepend(q.clone());
                set.attributes.insert(a);
            }
            for o in &rules.obligations {
                let mut o = o.clone();
                o.history = o.history.prepend(q.clone());
                set.obligations.insert(o);
            }
        }
    }
    out
}
