use std::collections::BTreeSet;

use rulegraph_core::{
    derive, derive_with_order, parse_data_rules, topological_order, validate_graph, DataFlowGraph,
    DataNode, Diagnostic, EngineError, ProcessNode,
};
use rulegraph_testkit::gen::{chain_graph, random_dag, sym, DagConfig};
use rulegraph_testkit::oracle::{all_topological_orders, path_oracle};
use rulegraph_testkit::rng;

fn process(graph: &mut DataFlowGraph, id: &str, ins: &[&str], outs: &[&str]) {
    graph
        .add_process(ProcessNode::new(id).with_ports(
            ins.iter().map(|p| sym(p)).collect(),
            outs.iter().map(|p| sym(p)).collect(),
        ))
        .unwrap();
}

fn diamond() -> DataFlowGraph {
    let mut g = DataFlowGraph::new();
    for d in ["a", "b", "c", "d"] {
        g.add_data(DataNode::new(d)).unwrap();
    }
    g.data_mut("a").unwrap().initial_rules =
        Some(parse_data_rules("attribute(pf, column, 1, [input, r1]).").unwrap());
    process(&mut g, "Z", &["input"], &["output"]);
    process(&mut g, "M", &["input"], &["output"]);
    process(&mut g, "B", &["input"], &["output"]);
    process(&mut g, "Y", &["l", "r"], &[]);
    g.add_consumption("a", "Z", sym("input"));
    g.add_generation("Z", sym("output"), "b");
    g.add_consumption("a", "M", sym("input"));
    g.add_generation("M", sym("output"), "c");
    g.add_consumption("b", "B", sym("input"));
    g.add_generation("B", sym("output"), "d");
    g.add_consumption("c", "Y", sym("l"));
    g.add_consumption("d", "Y", sym("r"));
    g
}

#[test]
fn order_is_smallest_valid_order() {
    let g = diamond();
    let orders = all_topological_orders(&g);
    assert_eq!(orders.len(), 3);
    let chosen = topological_order(&g).unwrap();
    assert_eq!(&chosen, orders.iter().min().unwrap());
    assert_eq!(chosen, ["M", "Z", "B", "Y"]);
}

#[test]
fn order_matches_enumeration_on_random_dags() {
    let mut r = rng(7);
    for _ in 0..100 {
        let g = random_dag(&mut r, DagConfig::default());
        let orders = all_topological_orders(&g);
        let chosen = topological_order(&g).unwrap();
        assert!(orders.contains(&chosen));
        assert_eq!(&chosen, orders.iter().min().unwrap());
    }
}

#[test]
fn every_order_gives_the_same_rules() {
    let mut r = rng(11);
    let config = DagConfig {
        max_processes: 5,
        allow_edits: true,
        ..DagConfig::default()
    };
    for _ in 0..60 {
        let g = random_dag(&mut r, config);
        let reference = derive(&g).unwrap();
        for order in all_topological_orders(&g).iter().take(50) {
            let other = derive_with_order(&g, order).unwrap();
            assert_eq!(other.per_data_rules, reference.per_data_rules);
        }
    }
}

#[test]
fn pr_only_graphs_match_path_enumeration() {
    let mut r = rng(3);
    for _ in 0..150 {
        let g = random_dag(&mut r, DagConfig::default());
        assert_eq!(derive(&g).unwrap().per_data_rules, path_oracle(&g));
    }
}

#[test]
fn histories_only_grow_along_edges() {
    let mut r = rng(5);
    for _ in 0..100 {
        let g = random_dag(&mut r, DagConfig::default());
        let result = derive(&g).unwrap();
        for gen in g.generations() {
            for a in &result.per_data_rules[&gen.data].attributes {
                assert_eq!(a.history.newest(), &gen.port);
                assert!(a.history.len() >= 2);
            }
            for o in &result.per_data_rules[&gen.data].obligations {
                assert_eq!(o.history.newest(), &gen.port);
            }
        }
    }
}

#[test]
fn rejects_non_topological_order() {
    let g = diamond();
    let bad: Vec<String> = ["B", "Z", "M", "Y"].iter().map(|s| s.to_string()).collect();
    assert!(matches!(derive_with_order(&g, &bad), Err(EngineError::InvalidOrder(_))));
    let short: Vec<String> = ["M", "Z"].iter().map(|s| s.to_string()).collect();
    assert!(matches!(derive_with_order(&g, &short), Err(EngineError::InvalidOrder(_))));
}

#[test]
fn cycle_is_reported_once_with_its_members() {
    let mut g = chain_graph(3, Default::default());
    g.add_consumption("d0003", "p0001", sym("input"));
    let err = derive(&g).unwrap_err();
    let EngineError::Cycle(cycle) = err else {
        panic!("expected cycle, got {err:?}");
    };
    assert_eq!(cycle.0, ["p0001", "p0002"]);
    assert_eq!(
        validate_graph(&g),
        vec![Diagnostic::CycleDetected {
            processes: vec!["p0001".into(), "p0002".into()]
        }]
    );
}

#[test]
fn long_chain_keeps_every_rule() {
    let rules = rulegraph_testkit::gen::chain_source_rules();
    let g = chain_graph(200, rules.clone());
    let result = derive(&g).unwrap();
    let last = &result.per_data_rules["d0200"];
    assert_eq!(last.len(), rules.len());
    let origins: BTreeSet<_> = last.attributes.iter().map(|a| a.history.origin().clone()).collect();
    let expected: BTreeSet<_> = rules.attributes.iter().map(|a| a.history.origin().clone()).collect();
    assert_eq!(origins, expected);
    assert!(last.attributes.iter().all(|a| a.history.len() == 202));
}
