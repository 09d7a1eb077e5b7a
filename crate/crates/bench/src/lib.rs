//! Workloads for the benchmarks.

use rulegraph_core::{
    ActivationCondition, Attribute, DataFlowGraph, DataNode, DataRuleSet, History, Obligation,
    ProcessNode, Symbol,
};

fn sym(s: &str) -> Symbol {
    Symbol::new(s).expect("workload symbol")
}

/// `rules` attributes named `pf` plus `obligations` report obligations, each
/// bound to one of the attributes.
pub fn source_rules(attributes: usize, obligations: usize) -> DataRuleSet {
    let history = |k: usize| History::parse(["input", &format!("pf_{k}")]).expect("valid");
    let mut set = DataRuleSet::new();
    for k in 0..attributes {
        set.attributes
            .insert(Attribute::new(sym("pf"), sym("column"), k as i64, history(k)));
    }
    for k in 0..obligations {
        set.obligations.insert(Obligation {
            obligated_action: sym("report"),
            history: History::single(sym("input")),
            validity_bindings: vec![history(k % attributes.max(1))],
            activation_condition: ActivationCondition::any(),
        });
    }
    set
}

/// `n` processes in a line, the source carrying `rules`.
pub fn chain(n: usize, rules: DataRuleSet) -> DataFlowGraph {
    let mut g = DataFlowGraph::new();
    g.add_data(DataNode::new("d0").with_rules(rules)).expect("unique");
    for i in 0..n {
        let p = format!("p{i}");
        g.add_process(
            ProcessNode::new(p.clone())
                .with_ports(vec![sym("input")], vec![sym("output")])
                .with_actions([sym("transform")]),
        )
        .expect("unique");
        let next = format!("d{}", i + 1);
        g.add_data(DataNode::new(next.clone())).expect("unique");
        g.add_consumption(format!("d{i}"), p.clone(), sym("input"));
        g.add_generation(p, sym("output"), next);
    }
    g
}

/// `layers` layers of `width` processes; every process reads every output of
/// the previous layer.
pub fn layered(layers: usize, width: usize, rules: DataRuleSet) -> DataFlowGraph {
    let mut g = DataFlowGraph::new();
    g.add_data(DataNode::new("src").with_rules(rules)).expect("unique");
    let mut previous = vec!["src".to_owned()];
    for l in 0..layers {
        let mut current = Vec::with_capacity(width);
        for w in 0..width {
            let p = format!("l{l}_{w}");
            let ins: Vec<Symbol> = (0..previous.len()).map(|k| sym(&format!("in{k}"))).collect();
            g.add_process(ProcessNode::new(p.clone()).with_ports(ins.clone(), vec![sym("out")]))
                .expect("unique");
            for (port, data) in ins.into_iter().zip(&previous) {
                g.add_consumption(data.clone(), p.clone(), port);
            }
            let out = format!("{p}_out");
            g.add_data(DataNode::new(out.clone())).expect("unique");
            g.add_generation(p, sym("out"), out.clone());
            current.push(out);
        }
        previous = current;
    }
    g
}

/// Rule-language text with `n` statements.
pub fn rule_text(n: usize) -> String {
    (0..n)
        .map(|k| {
            if k % 3 == 2 {
                format!("obligation(report, [[input1, pf_{k}]], action = *, input1).\n")
            } else {
                format!("attribute(pf, column, {k}, [input1, pf_{k}], s0).\n")
            }
        })
        .collect()
}
