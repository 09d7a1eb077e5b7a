use rulegraph_bench::{chain, layered, rule_text, source_rules};
use rulegraph_core::{derive, parse_data_rules, validate_graph};

#[test]
fn workloads_are_valid() {
    assert!(validate_graph(&chain(10, source_rules(3, 1))).is_empty());
    let g = layered(3, 3, source_rules(2, 1));
    assert!(validate_graph(&g).is_empty());
    // nine paths reach each last-layer output, but histories record only
    // output ports and every layer emits on `out`, so the copies coincide
    let result = derive(&g).unwrap();
    let last = &result.per_data_rules["l2_0_out"];
    assert_eq!(last.attributes.len(), 2);
    assert!(last.attributes.iter().all(|a| a.history.len() == 5));
    assert_eq!(parse_data_rules(&rule_text(30)).unwrap().len(), 30);
}
