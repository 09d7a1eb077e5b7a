//! Acceptance checks, one PASS/FAIL line per criterion. Run with
//! `cargo test -p rulegraph-cli --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rulegraph_core::report::IMPLICIT_ACTION;
use rulegraph_core::{
    compute_activations, derive, derive_with_order, do_process, load_graph, parse_data_rules,
    parse_flow_program, parse_query_pattern, query_attributes, render_report, save_graph,
    serialize_data_rules, serialize_flow_program, ActivationCondition, ActivationStatus,
    Attribute, DataFlowGraph, DataNode, DataRuleSet, History, Obligation, Pattern, ProcessNode,
    ReportFormat, Symbol,
};
use rulegraph_testkit::gen::{
    chain_graph, chain_source_rules, random_dag, random_program, random_rule_set, sym, DagConfig,
};
use rulegraph_testkit::oracle::{all_topological_orders, path_oracle};
use rulegraph_testkit::{rng, Rng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).expect("fixture readable")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))
}

const EXAMPLE_RULES: &str = "attribute(pf, column, 3, [input1, pf_1], s0).
obligation(report, [[input1, pf_1]], action = *, input1, s0).";
const EXAMPLE_PROGRAM: &str = "pr(input1, [output1, output2]).
edit(input1, output2, *, column, 3, column, 2).
end([output1, output2]).";
const EXAMPLE_RESULT: [&str; 2] = [
    "attribute(pf, column, 3, [output1, input1, pf_1])",
    "attribute(pf, column, 2, [output2, input1, pf_1])",
];

fn golden() -> Outcome {
    let start = Instant::now();
    let rules = parse_data_rules(EXAMPLE_RULES).map_err(|e| e.to_string())?;
    let program = parse_flow_program(EXAMPLE_PROGRAM).map_err(|e| e.to_string())?;
    let process = ProcessNode::new("P").with_ports(vec![sym("input1")], vec![sym("output1"), sym("output2")]);
    let inputs = BTreeMap::from([(sym("input1"), rules.clone())]);
    let output = do_process(&process, &program, &inputs).map_err(|e| e.to_string())?;
    let pattern = parse_query_pattern("attribute(*, *, *, *).").map_err(|e| e.to_string())?;

    // projection over the situation after the process: both output ports
    let mut direct: Vec<String> = output
        .outputs
        .values()
        .flat_map(|set| set.attributes.iter().filter(|a| pattern.matches(a)))
        .map(|a| a.to_string())
        .collect();
    direct.sort();
    let mut expected: Vec<String> = EXAMPLE_RESULT.iter().map(|s| s.to_string()).collect();
    expected.sort();
    ensure(direct == expected, || format!("interpreter gave {direct:?}"))?;

    // the same through a graph and the query operation
    let mut graph = load_graph(&read("worked_example/graph.json")).map_err(|e| e.to_string())?;
    graph.data_mut("source").expect("fixture").initial_rules = Some(rules);
    graph.process_mut("P").expect("fixture").program = Some(program);
    let result = derive(&graph).map_err(|e| e.to_string())?;
    let mut queried = Vec::new();
    for data in ["out1", "out2"] {
        for a in query_attributes(&result, data, &pattern).map_err(|e| e.to_string())? {
            queried.push(a.to_string());
        }
    }
    queried.sort();
    ensure(queried == expected, || format!("query gave {queried:?}"))?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("{} and {}", EXAMPLE_RESULT[0], EXAMPLE_RESULT[1]))
}

fn confluence() -> Outcome {
    let start = Instant::now();
    let config = DagConfig {
        max_processes: 8,
        allow_edits: true,
        default_program_rate: 0.1,
    };
    let mut r = rng(2024);
    let mut orders_checked = 0usize;
    let mut most = 0usize;
    for i in 0..200 {
        let graph = random_dag(&mut r, config);
        let reference = derive(&graph).map_err(|e| format!("graph {i}: {e}"))?;
        let orders = all_topological_orders(&graph);
        most = most.max(orders.len());
        for order in &orders {
            let other = derive_with_order(&graph, order).map_err(|e| format!("graph {i}: {e}"))?;
            ensure(other.per_data_rules == reference.per_data_rules, || {
                format!("graph {i}: order {order:?} differs")
            })?;
        }
        orders_checked += orders.len();
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("200 graphs, {orders_checked} orders (max {most} for one graph)"))
}

fn path_equivalence() -> Outcome {
    let mut r = rng(99);
    let mut nonempty = 0;
    for i in 0..500 {
        let graph = random_dag(&mut r, DagConfig::default());
        let got = derive(&graph).map_err(|e| format!("graph {i}: {e}"))?.per_data_rules;
        let expected = path_oracle(&graph);
        ensure(got == expected, || format!("graph {i} differs from path enumeration"))?;
        if got.iter().any(|(id, set)| !set.is_empty() && graph.generator_of(id).is_some()) {
            nonempty += 1;
        }
    }
    ensure(nonempty > 100, || format!("only {nonempty} graphs propagated anything"))?;
    Ok(format!("500 pr-only graphs ({nonempty} with derived rules)"))
}

fn fixture_files(dir: &Path, out: &mut Vec<PathBuf>) {
    for entry in std::fs::read_dir(dir).expect("fixtures dir") {
        let path = entry.expect("entry").path();
        if path.is_dir() {
            fixture_files(&path, out);
        } else {
            out.push(path);
        }
    }
}

fn round_trip() -> Outcome {
    let mut r = rng(4);
    for i in 0..1000 {
        let rules = random_rule_set(&mut r, 12);
        let text = serialize_data_rules(&rules);
        let back = parse_data_rules(&text).map_err(|e| format!("rule set {i}: {e}\n{text}"))?;
        ensure(back == rules, || format!("rule set {i} changed:\n{text}"))?;
    }
    let ports: Vec<Symbol> = ["p0", "p1", "p2"].iter().map(|p| sym(p)).collect();
    for i in 0..1000 {
        let ins = &ports[..r.gen_range(0..=3)];
        let outs = &ports[..r.gen_range(0..=3)];
        let program = random_program(&mut r, ins, outs, true);
        let text = serialize_flow_program(&program);
        let back = parse_flow_program(&text).map_err(|e| format!("program {i}: {e}\n{text}"))?;
        ensure(back == program, || format!("program {i} changed:\n{text}"))?;
    }

    let mut files = Vec::new();
    fixture_files(&fixtures(), &mut files);
    files.sort();
    let mut count = 0;
    for path in &files {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let name = path.display().to_string();
        let name_str = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.ends_with(".rules") {
            let doc = rulegraph_core::parse_document("fixture", &text)
                .map_err(|e| format!("{name}: {e}"))?
                .0;
            let again = match &doc.body {
                rulegraph_core::RuleBody::DataRules(set) => {
                    let s = serialize_data_rules(set);
                    parse_data_rules(&s).map(|b| &b == set).map_err(|e| e.to_string())?
                }
                rulegraph_core::RuleBody::FlowProgram(p) => {
                    let s = serialize_flow_program(p);
                    parse_flow_program(&s).map(|b| &b == p).map_err(|e| e.to_string())?
                }
            };
            ensure(again, || format!("{name} did not round-trip"))?;
            count += 1;
        } else if name_str == "programs.json" {
            let map: BTreeMap<String, String> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            for (activity, src) in map {
                let p = parse_flow_program(&src).map_err(|e| format!("{name} {activity}: {e}"))?;
                ensure(parse_flow_program(&serialize_flow_program(&p)) == Ok(p), || {
                    format!("{name} {activity} did not round-trip")
                })?;
                count += 1;
            }
        } else if name_str.ends_with("graph.json") {
            let graph = load_graph(&text).map_err(|e| format!("{name}: {e}"))?;
            let saved = save_graph(&graph);
            let again = save_graph(&load_graph(&saved).map_err(|e| format!("{name}: {e}"))?);
            ensure(saved == again, || format!("{name} did not round-trip"))?;
            count += 1;
        }
    }
    ensure(count >= 6, || format!("only {count} fixtures found"))?;
    Ok(format!("1000 rule sets, 1000 programs, {count} fixtures"))
}

fn is_suffix(short: &History, long: &History) -> bool {
    let (s, l) = (short.tokens(), long.tokens());
    s.len() <= l.len() && l[l.len() - s.len()..] == *s
}

fn history_invariant() -> Outcome {
    let config = DagConfig {
        max_processes: 8,
        allow_edits: true,
        ..DagConfig::default()
    };
    let mut r = rng(55);
    let mut items = 0usize;
    for i in 0..300 {
        let graph = random_dag(&mut r, config);
        let result = derive(&graph).map_err(|e| format!("graph {i}: {e}"))?;
        let mut source: Vec<&History> = Vec::new();
        for d in graph.data_nodes() {
            if let Some(rules) = &d.initial_rules {
                source.extend(rules.attributes.iter().map(|a| &a.history));
                source.extend(rules.obligations.iter().map(|o| &o.history));
            }
        }
        for g in graph.generations() {
            let set = &result.per_data_rules[&g.data];
            let inputs: Vec<&DataRuleSet> = result
                .per_port_inputs
                .iter()
                .filter(|((p, _), _)| *p == g.process)
                .map(|(_, s)| s)
                .collect();
            let histories = set
                .attributes
                .iter()
                .map(|a| &a.history)
                .chain(set.obligations.iter().map(|o| &o.history));
            for h in histories {
                items += 1;
                let before = History::new(h.tokens()[1..].to_vec())
                    .map_err(|_| format!("graph {i}: bare history on {}", g.data))?;
                ensure(h.newest() == &g.port, || format!("graph {i}: {h} lacks port {}", g.port))?;
                ensure(
                    inputs.iter().any(|s| {
                        s.attributes.iter().any(|a| a.history == before)
                            || s.obligations.iter().any(|o| o.history == before)
                    }),
                    || format!("graph {i}: {h} has no pre-image in {}", g.process),
                )?;
                ensure(
                    source.iter().any(|s| is_suffix(s, h) && s.origin() == h.origin()),
                    || format!("graph {i}: {h} does not extend any source history"),
                )?;
            }
        }
    }
    Ok(format!("{items} derived items over 300 graphs"))
}

/// Independent expectation for one obligation at one process.
fn expected_activation(o: &Obligation, attrs: &[Attribute], declared: &[&str]) -> Option<ActivationStatus> {
    let triggered = match &o.activation_condition.target {
        Pattern::Any => true,
        Pattern::Exact(a) => declared.contains(&a.as_str()) || a.as_str() == IMPLICIT_ACTION,
    };
    let bound = o.validity_bindings.is_empty()
        || o.validity_bindings.iter().any(|v| attrs.iter().any(|a| is_suffix(v, &a.history)));
    (triggered && bound).then(|| {
        if declared.contains(&o.obligated_action.as_str()) {
            ActivationStatus::Discharged
        } else {
            ActivationStatus::Activated
        }
    })
}

fn obligation_semantics() -> Outcome {
    let bound = History::parse(["input", "r1"]).expect("valid");
    let unbound = History::parse(["input", "r2"]).expect("valid");
    let attr = Attribute::new(sym("pf"), sym("column"), 3, bound.clone());
    let mut pool = Vec::new();
    for action in ["report", "plot"] {
        for vb in [vec![], vec![bound.clone()], vec![unbound.clone()]] {
            for ac in [None, Some("plot"), Some("report"), Some(IMPLICIT_ACTION)] {
                pool.push(Obligation {
                    obligated_action: sym(action),
                    history: History::single(sym("input")),
                    validity_bindings: vb.clone(),
                    activation_condition: match ac {
                        None => ActivationCondition::any(),
                        Some(a) => ActivationCondition::on(sym(a)),
                    },
                });
            }
        }
    }
    let mut obligation_sets: Vec<Vec<&Obligation>> = Vec::new();
    for a in 0..pool.len() {
        obligation_sets.push(vec![&pool[a]]);
        for b in a + 1..pool.len() {
            obligation_sets.push(vec![&pool[a], &pool[b]]);
            for c in b + 1..pool.len() {
                obligation_sets.push(vec![&pool[a], &pool[b], &pool[c]]);
            }
        }
    }
    let action_sets: [&[&str]; 4] = [&[], &["plot"], &["report"], &["plot", "report"]];
    let mut configs: Vec<Vec<&[&str]>> = Vec::new();
    for n in 1..=3u32 {
        for code in 0..4usize.pow(n) {
            configs.push((0..n).map(|k| action_sets[code / 4usize.pow(k) % 4]).collect());
        }
    }

    let mut cases = 0usize;
    let mut seen = BTreeSet::new();
    for obligations in &obligation_sets {
        let mut rules = DataRuleSet::new();
        rules.attributes.insert(attr.clone());
        rules.obligations.extend(obligations.iter().map(|o| (*o).clone()));
        for declared in &configs {
            let mut graph = DataFlowGraph::new();
            graph.add_data(DataNode::new("src").with_rules(rules.clone())).map_err(|e| e.to_string())?;
            for (k, actions) in declared.iter().enumerate() {
                let id = format!("c{k}");
                graph
                    .add_process(
                        ProcessNode::new(id.clone())
                            .with_ports(vec![sym("input")], vec![])
                            .with_actions(actions.iter().map(|a| sym(a))),
                    )
                    .map_err(|e| e.to_string())?;
                graph.add_consumption("src", id, sym("input"));
            }
            let result = derive(&graph).map_err(|e| e.to_string())?;
            let mut got: Vec<(String, Obligation, ActivationStatus)> = compute_activations(&result, &graph)
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|a| (a.process_id, a.obligation, a.status))
                .collect();
            got.sort();
            let mut want = Vec::new();
            for (k, actions) in declared.iter().enumerate() {
                for o in &rules.obligations {
                    if let Some(status) = expected_activation(o, std::slice::from_ref(&attr), actions) {
                        want.push((format!("c{k}"), o.clone(), status));
                        seen.insert(status);
                    }
                }
            }
            want.sort();
            ensure(got == want, || {
                format!("obligations {:?} with actions {declared:?}: got {} activations, want {}",
                    obligations.iter().map(|o| o.to_string()).collect::<Vec<_>>(), got.len(), want.len())
            })?;
            cases += 1;
        }
    }
    ensure(seen.len() == 2, || "never saw both statuses".to_owned())?;
    Ok(format!("{cases} cases ({} obligation sets x {} process configurations)", obligation_sets.len(), configs.len()))
}

fn scale() -> Outcome {
    let rules = chain_source_rules();
    ensure(rules.len() == 10, || format!("{} source rules", rules.len()))?;
    let graph = chain_graph(1000, rules);
    let start = Instant::now();
    let result = derive(&graph).map_err(|e| e.to_string())?;
    let activations = compute_activations(&result, &graph).map_err(|e| e.to_string())?;
    let report = render_report(&result, &activations, ReportFormat::Text);
    let took = start.elapsed();
    within(Duration::from_secs(5), start)?;
    let outstanding = activations.iter().filter(|a| a.status == ActivationStatus::Activated).count();
    ensure(outstanding == 3000, || format!("{outstanding} outstanding"))?;
    ensure(report.contains("outstanding: 3000\n"), || "summary line missing".to_owned())?;
    ensure(result.per_data_rules["d1000"].len() == 10, || "rules lost on the chain".to_owned())?;
    Ok(format!("derive + check took {took:.2?}"))
}

fn end_to_end() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_rulegraph");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let prov = fixtures().join("prov");
    let mut runs = Vec::new();
    for k in 0..2 {
        let graph = dir.path().join(format!("graph{k}.json"));
        let import = Command::new(bin)
            .arg("import-prov")
            .arg("--prov").arg(prov.join("pipeline.prov.json"))
            .arg("--rules").arg(format!("survey={}", prov.join("survey.rules").display()))
            .arg("--actions").arg(prov.join("actions.json"))
            .arg("--programs").arg(prov.join("programs.json"))
            .arg("--out").arg(&graph)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(import.status.code() == Some(0), || {
            format!("import-prov failed: {}", String::from_utf8_lossy(&import.stderr))
        })?;
        let mut outputs = vec![std::fs::read_to_string(&graph).map_err(|e| e.to_string())?];
        for format in ["text", "json"] {
            let check = Command::new(bin)
                .args(["check", "--format", format, "--graph"])
                .arg(&graph)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(check.status.code() == Some(1), || {
                format!("check --format {format} exited {:?}", check.status.code())
            })?;
            outputs.push(String::from_utf8_lossy(&check.stdout).into_owned());
        }
        runs.push(outputs);
    }
    ensure(runs[0] == runs[1], || "runs differ".to_owned())?;
    let text = &runs[0][1];
    ensure(text.contains("process render:\n  acknowledge on in0"), || format!("report:\n{text}"))?;
    let json = rulegraph_core::JsonReport::parse_json(&runs[0][2]).map_err(|e| e.to_string())?;
    let outstanding: Vec<_> = json
        .activations
        .iter()
        .filter(|a| a.status == ActivationStatus::Activated)
        .map(|a| format!("{} at {}", a.obligation.obligated_action, a.process))
        .collect();
    ensure(outstanding == ["acknowledge at render"], || format!("outstanding: {outstanding:?}"))?;
    Ok("exit 1, outstanding acknowledge at render, identical across runs".to_owned())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("golden worked example", golden),
        ("linearization confluence", confluence),
        ("path-oracle equivalence", path_equivalence),
        ("parser round-trip", round_trip),
        ("history suffix invariant", history_invariant),
        ("obligation semantics", obligation_semantics),
        ("1000-process chain", scale),
        ("import-prov then check", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{took:.2?}]", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {} {name}: {reason} [{took:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
