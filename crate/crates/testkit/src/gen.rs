use rand::seq::SliceRandom;
use rand::Rng;

use rulegraph_core::{
    ActivationCondition, Attribute, DataFlowGraph, DataNode, DataRuleSet, EditRule, FlowProgram,
    FlowRule, History, Obligation, Pattern, ProcessNode, Symbol, Value,
};

pub fn sym(s: &str) -> Symbol {
    Symbol::new(s).expect("test symbol")
}

const NAMES: &[&str] = &["pf", "qf", "licence", "owner", "_x"];
const TYPES: &[&str] = &["column", "row", "field"];
const TOKENS: &[&str] = &["input1", "input2", "output1", "in0", "pf_1", "qf_2", "r_9", "_t"];
const ACTIONS: &[&str] = &["report", "plot", "acknowledge", "use"];
const STRINGS: &[&str] = &["", "a b", "x\"y", "back\\slash", "tab\there", "new\nline", "ünï", "ok"];

fn pick<'a, R: Rng>(rng: &mut R, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).expect("non-empty pool")
}

pub fn random_value<R: Rng>(rng: &mut R) -> Value {
    match rng.gen_range(0..4) {
        0 => Value::Int(rng.gen_range(i64::MIN..=i64::MAX)),
        1 => Value::Int(rng.gen_range(-5..10)),
        2 => Value::Str(pick(rng, STRINGS).to_owned()),
        _ => Value::Str(pick(rng, NAMES).to_owned()),
    }
}

pub fn random_history<R: Rng>(rng: &mut R) -> History {
    let len = rng.gen_range(1..=4);
    History::parse((0..len).map(|_| pick(rng, TOKENS))).expect("valid tokens")
}

pub fn random_obligation<R: Rng>(rng: &mut R) -> Obligation {
    let target = if rng.gen_bool(0.4) {
        Pattern::Any
    } else {
        Pattern::Exact(sym(pick(rng, ACTIONS)))
    };
    Obligation {
        obligated_action: sym(pick(rng, ACTIONS)),
        history: random_history(rng),
        validity_bindings: (0..rng.gen_range(0..3)).map(|_| random_history(rng)).collect(),
        activation_condition: ActivationCondition { target },
    }
}

/// Arbitrary rule set, including awkward quoted-string values.
pub fn random_rule_set<R: Rng>(rng: &mut R, max_items: usize) -> DataRuleSet {
    let mut set = DataRuleSet::new();
    for _ in 0..rng.gen_range(0..=max_items) {
        if rng.gen_bool(0.6) {
            set.attributes.insert(Attribute::new(
                sym(pick(rng, NAMES)),
                sym(pick(rng, TYPES)),
                random_value(rng),
                random_history(rng),
            ));
        } else {
            set.obligations.insert(random_obligation(rng));
        }
    }
    set
}

fn random_subset<R: Rng>(rng: &mut R, pool: &[Symbol], non_empty: bool) -> Vec<Symbol> {
    loop {
        let mut out: Vec<Symbol> = pool.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        out.shuffle(rng);
        if !non_empty || !out.is_empty() || pool.is_empty() {
            return out;
        }
    }
}

/// A structurally valid program over the given ports.
pub fn random_program<R: Rng>(
    rng: &mut R,
    ins: &[Symbol],
    outs: &[Symbol],
    allow_edits: bool,
) -> FlowProgram {
    let mut steps = Vec::new();
    let mut used: Vec<Symbol> = Vec::new();
    for _ in 0..rng.gen_range(0..=ins.len() + 1) {
        if ins.is_empty() || outs.is_empty() {
            break;
        }
        let in_port = ins.choose(rng).expect("non-empty").clone();
        if allow_edits && rng.gen_bool(0.4) {
            let out_port = outs.choose(rng).expect("non-empty").clone();
            let name = if rng.gen_bool(0.5) {
                Pattern::Any
            } else {
                Pattern::Exact(sym(pick(rng, &["pf", "qf"])))
            };
            steps.push(FlowRule::Edit(EditRule {
                in_port,
                out_port: out_port.clone(),
                name,
                from_type: sym("column"),
                from_value: Value::Int(rng.gen_range(1..4)),
                to_type: sym(pick(rng, &["column", "row"])),
                to_value: Value::Int(rng.gen_range(1..4)),
            }));
            used.push(out_port);
        } else {
            let out_ports = random_subset(rng, outs, true);
            used.extend(out_ports.iter().cloned());
            steps.push(FlowRule::Propagate { in_port, out_ports });
        }
    }
    let mut ended: Vec<Symbol> = outs
        .iter()
        .filter(|p| used.contains(p) || rng.gen_bool(0.3))
        .cloned()
        .collect();
    ended.shuffle(rng);
    steps.push(FlowRule::End { out_ports: ended });
    FlowProgram::new(steps).expect("generated program is well-formed")
}

#[derive(Debug, Clone, Copy)]
pub struct DagConfig {
    pub max_processes: usize,
    pub allow_edits: bool,
    /// Probability that a process keeps its flow program empty and falls
    /// back to the default program.
    pub default_program_rate: f64,
}

impl Default for DagConfig {
    fn default() -> Self {
        DagConfig {
            max_processes: 6,
            allow_edits: false,
            default_program_rate: 0.2,
        }
    }
}

const PROCESS_NAMES: &[&str] = &[
    "align", "bin", "clean", "dedup", "enrich", "filter", "group", "hash", "index", "join",
    "keys", "load", "merge",
];

/// Source attributes are `column` typed with small values so random edits
/// have something to match.
fn source_rules<R: Rng>(rng: &mut R, source: usize) -> DataRuleSet {
    let mut set = DataRuleSet::new();
    for k in 0..rng.gen_range(0..=3) {
        let rule_id = format!("r{source}_{k}");
        let name = pick(rng, &["pf", "qf"]);
        let history = History::parse([pick(rng, &["input1", "src"]), rule_id.as_str()])
            .expect("valid tokens");
        if rng.gen_bool(0.7) {
            set.attributes.insert(Attribute::new(
                sym(name),
                sym("column"),
                rng.gen_range(1..4),
                history,
            ));
        } else {
            // bind a sibling rule id, which may or may not be an attribute
            let target = format!("r{source}_{}", rng.gen_range(0..3));
            let binding = History::parse([target.as_str()]).expect("valid token");
            set.obligations.insert(Obligation {
                obligated_action: sym(pick(rng, &["report", "acknowledge"])),
                history: History::single(sym(&rule_id)),
                validity_bindings: vec![binding],
                activation_condition: ActivationCondition::any(),
            });
        }
    }
    set
}

/// A random valid DAG. Processes are created in a hidden topological order
/// and named from a shuffled pool, so name order and data-flow order differ.
pub fn random_dag<R: Rng>(rng: &mut R, config: DagConfig) -> DataFlowGraph {
    let mut names: Vec<&str> = PROCESS_NAMES.to_vec();
    names.shuffle(rng);
    let n = rng.gen_range(1..=config.max_processes);
    let mut graph = DataFlowGraph::new();
    let mut available: Vec<String> = Vec::new();

    for s in 0..rng.gen_range(1..=3) {
        let id = format!("src{s}");
        graph
            .add_data(DataNode::new(id.clone()).with_rules(source_rules(rng, s)))
            .expect("unique id");
        available.push(id);
    }

    for name in names.iter().take(n) {
        let ins: Vec<Symbol> = (1..=rng.gen_range(0..=2)).map(|i| sym(&format!("in{i}"))).collect();
        let outs: Vec<Symbol> = (1..=rng.gen_range(1..=2)).map(|i| sym(&format!("out{i}"))).collect();
        let mut node = ProcessNode::new(*name).with_ports(ins.clone(), outs.clone());
        if !rng.gen_bool(config.default_program_rate) {
            node.program = Some(random_program(rng, &ins, &outs, config.allow_edits));
        }
        graph.add_process(node).expect("unique id");

        for port in &ins {
            let mut choices = available.clone();
            choices.shuffle(rng);
            for data in choices.into_iter().take(rng.gen_range(0..=2)) {
                graph.add_consumption(data, *name, port.clone());
            }
        }
        for port in &outs {
            if rng.gen_bool(0.85) {
                let id = format!("{name}_{port}");
                graph.add_data(DataNode::new(id.clone())).expect("unique id");
                graph.add_generation(*name, port.clone(), id.clone());
                available.push(id);
            }
        }
    }
    graph
}

/// `n` single-port processes in a line, with `rules` on the source.
pub fn chain_graph(n: usize, rules: DataRuleSet) -> DataFlowGraph {
    let mut graph = DataFlowGraph::new();
    graph
        .add_data(DataNode::new("d0000").with_rules(rules))
        .expect("unique id");
    for i in 0..n {
        let id = format!("p{i:04}");
        graph
            .add_process(
                ProcessNode::new(id.clone())
                    .with_ports(vec![sym("input")], vec![sym("output")])
                    .with_actions([sym("transform")]),
            )
            .expect("unique id");
        let next = format!("d{:04}", i + 1);
        graph.add_data(DataNode::new(next.clone())).expect("unique id");
        graph.add_consumption(format!("d{i:04}"), id.clone(), sym("input"));
        graph.add_generation(id, sym("output"), next);
    }
    graph
}

/// Ten rules for the head of a chain: attributes plus obligations that
/// trigger everywhere.
pub fn chain_source_rules() -> DataRuleSet {
    let mut set = DataRuleSet::new();
    for k in 0..7 {
        set.attributes.insert(Attribute::new(
            sym("pf"),
            sym("column"),
            k as i64,
            History::parse(["input", &format!("pf_{k}")]).expect("valid"),
        ));
    }
    for k in 0..3 {
        set.obligations.insert(Obligation {
            obligated_action: sym("report"),
            history: History::single(sym("input")),
            validity_bindings: vec![History::parse(["input", &format!("pf_{k}")]).expect("valid")],
            activation_condition: ActivationCondition::any(),
        });
    }
    set
}
