//! Executes one process's flow program over its per-port input rules.
//!
//! Execution keeps a working list of routed items. `pr` copies input rules
//! into it, `edit` rewrites routed attributes in place, and `end` prepends
//! the destination port to each item's history and emits it.

use std::collections::BTreeMap;

use crate::model::{
    attr_matches, Attribute, DataRuleSet, FlowProgram, FlowRule, History, Obligation,
    PortDirection, PortError, ProcessNode, Symbol,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Attribute(Attribute),
    Obligation(Obligation),
}

impl Item {
    pub fn history(&self) -> &History {
        match self {
            Item::Attribute(a) => &a.history,
            Item::Obligation(o) => &o.history,
        }
    }

    fn history_mut(&mut self) -> &mut History {
        match self {
            Item::Attribute(a) => &mut a.history,
            Item::Obligation(o) => &mut o.history,
        }
    }
}

/// A rule in flight from an input port to an output port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutedItem {
    pub item: Item,
    pub origin: Symbol,
    pub destination: Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: FlowRule,
    /// Items created (`pr`), modified (`edit`) or emitted (`end`).
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessTrace {
    pub process_id: String,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessOutput {
    /// One entry per port listed in `end`.
    pub outputs: BTreeMap<Symbol, DataRuleSet>,
    pub trace: ProcessTrace,
}

/// Runs `program` for `process` on `inputs`. Input ports without an entry
/// are treated as empty.
pub fn do_process(
    process: &ProcessNode,
    program: &FlowProgram,
    inputs: &BTreeMap<Symbol, DataRuleSet>,
) -> Result<ProcessOutput, PortError> {
    if let Some(port) = inputs.keys().find(|p| !process.in_ports.contains(p)) {
        return Err(PortError {
            process: process.id.clone(),
            port: port.to_string(),
            direction: PortDirection::In,
            step: None,
        });
    }
    program.check_ports(process)?;

    let empty = DataRuleSet::new();
    let mut routed: Vec<RoutedItem> = Vec::new();
    let mut outputs = BTreeMap::new();
    let mut steps = Vec::with_capacity(program.len());

    for rule in program.steps() {
        let count = match rule {
            FlowRule::Propagate { in_port, out_ports } => {
                let source = inputs.get(in_port).unwrap_or(&empty);
                let before = routed.len();
                let items = source
                    .attributes
                    .iter()
                    .cloned()
                    .map(Item::Attribute)
                    .chain(source.obligations.iter().cloned().map(Item::Obligation));
                for item in items {
                    for out in out_ports {
                        routed.push(RoutedItem {
                            item: item.clone(),
                            origin: in_port.clone(),
                            destination: out.clone(),
                        });
                    }
                }
                routed.len() - before
            }
            FlowRule::Edit(edit) => {
                let mut modified = 0;
                for r in routed.iter_mut() {
                    if r.origin != edit.in_port || r.destination != edit.out_port {
                        continue;
                    }
                    if let Item::Attribute(a) = &mut r.item {
                        if attr_matches(&edit.name, &edit.from_type, &edit.from_value, a) {
                            a.ty = edit.to_type.clone();
                            a.value = edit.to_value.clone();
                            modified += 1;
                        }
                    }
                }
                modified
            }
            FlowRule::End { out_ports } => {
                for port in out_ports {
                    outputs.insert(port.clone(), DataRuleSet::new());
                }
                let emitted = routed.len();
                for mut r in routed.drain(..) {
                    // FlowProgram guarantees every destination is ended
                    let set = outputs
                        .get_mut(&r.destination)
                        .expect("destination listed in end");
                    let h = r.item.history().prepend(r.destination.clone());
                    *r.item.history_mut() = h;
                    match r.item {
                        Item::Attribute(a) => {
                            set.attributes.insert(a);
                        }
                        Item::Obligation(o) => {
                            set.obligations.insert(o);
                        }
                    }
                }
                emitted
            }
        };
        steps.push(TraceStep {
            rule: rule.clone(),
            count,
        });
    }

    Ok(ProcessOutput {
        outputs,
        trace: ProcessTrace {
            process_id: process.id.clone(),
            steps,
        },
    })
}

/// Propagates every input port to every output port.
pub fn default_program(process: &ProcessNode) -> FlowProgram {
    let mut steps: Vec<FlowRule> = Vec::new();
    if !process.out_ports.is_empty() {
        steps.extend(process.in_ports.iter().map(|p| FlowRule::Propagate {
            in_port: p.clone(),
            out_ports: process.out_ports.clone(),
        }));
    }
    steps.push(FlowRule::End {
        out_ports: process.out_ports.clone(),
    });
    FlowProgram::new(steps).expect("default program is well-formed for distinct ports")
}
