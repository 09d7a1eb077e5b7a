//! Domain types for data rules, flow rules and data-flow graphs.
//!
//! Everything here is an immutable value once constructed. Constructors
//! enforce the structural invariants that can be checked locally; graph-wide
//! invariants (acyclicity, edge consistency) are reported by
//! [`crate::engine::validate_graph`].

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid symbol {0:?}: expected [A-Za-z_][A-Za-z0-9_]*")]
    InvalidSymbol(String),
    #[error("history must contain at least one token")]
    EmptyHistory,
    #[error("node id must be non-empty")]
    EmptyId,
    #[error("duplicate process id {0:?}")]
    DuplicateProcess(String),
    #[error("duplicate data node id {0:?}")]
    DuplicateData(String),
}

/// Returns true when `s` is a bare identifier in the rule language.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// An identifier: attribute names, types, actions, port names and
/// history tokens.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: impl Into<String>) -> Result<Self, ModelError> {
        let s = s.into();
        if is_identifier(&s) {
            Ok(Symbol(s.into()))
        } else {
            Err(ModelError::InvalidSymbol(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for Symbol {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Symbol::new(s)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Symbol {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for Symbol {
    fn eq(&self, other: &str) -> bool {
        &*self.0 == other
    }
}

impl PartialEq<&str> for Symbol {
    fn eq(&self, other: &&str) -> bool {
        &*self.0 == *other
    }
}

/// A history entry: a port name or the originating rule identifier.
pub type HistoryToken = Symbol;

/// The trail of ports a rule instance has been through, most recent first.
/// The last (oldest) token is the identifier of the originating rule.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct History(Vec<HistoryToken>);

impl History {
    pub fn new(tokens: Vec<HistoryToken>) -> Result<Self, ModelError> {
        if tokens.is_empty() {
            Err(ModelError::EmptyHistory)
        } else {
            Ok(History(tokens))
        }
    }

    /// Builds a history from string tokens, newest first.
    pub fn parse<I, S>(tokens: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = tokens
            .into_iter()
            .map(Symbol::new)
            .collect::<Result<Vec<_>, _>>()?;
        History::new(tokens)
    }

    pub fn single(token: HistoryToken) -> Self {
        History(vec![token])
    }

    pub fn tokens(&self) -> &[HistoryToken] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn newest(&self) -> &HistoryToken {
        &self.0[0]
    }

    /// The originating rule identifier.
    pub fn origin(&self) -> &HistoryToken {
        &self.0[self.0.len() - 1]
    }

    /// A new history with `token` as the most recent entry.
    pub fn prepend(&self, token: HistoryToken) -> History {
        let mut tokens = Vec::with_capacity(self.0.len() + 1);
        tokens.push(token);
        tokens.extend(self.0.iter().cloned());
        History(tokens)
    }

    /// True when `self` is a (possibly equal-length) suffix of `other`.
    pub fn is_suffix_of(&self, other: &History) -> bool {
        other.0.ends_with(&self.0)
    }
}

impl fmt::Debug for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(t.as_str())?;
        }
        f.write_str("]")
    }
}

/// A rule value. Values compare by exact equality, so only integers and
/// strings are admitted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Str(String),
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_owned())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

/// Either a wildcard (`*`) or one exact value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Pattern<T> {
    #[default]
    Any,
    Exact(T),
}

impl<T: PartialEq> Pattern<T> {
    pub fn matches(&self, candidate: &T) -> bool {
        match self {
            Pattern::Any => true,
            Pattern::Exact(v) => v == candidate,
        }
    }

    pub fn is_any(&self) -> bool {
        matches!(self, Pattern::Any)
    }
}

/// A named, typed, valued property of data.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Attribute {
    pub name: Symbol,
    pub ty: Symbol,
    pub value: Value,
    pub history: History,
}

impl Attribute {
    pub fn new(name: Symbol, ty: Symbol, value: impl Into<Value>, history: History) -> Self {
        Attribute {
            name,
            ty,
            value: value.into(),
            history,
        }
    }
}

/// `action = <target>`, where the target may be `*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivationCondition {
    pub target: Pattern<Symbol>,
}

impl ActivationCondition {
    pub fn any() -> Self {
        ActivationCondition {
            target: Pattern::Any,
        }
    }

    pub fn on(action: Symbol) -> Self {
        ActivationCondition {
            target: Pattern::Exact(action),
        }
    }
}

/// An action that must be performed once the activation condition holds
/// on data the validity bindings apply to.
///
/// Field order fixes the canonical ordering: obligated action, then history.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Obligation {
    pub obligated_action: Symbol,
    pub history: History,
    /// Histories of the attribute instances this obligation concerns. Empty
    /// means the obligation applies unconditionally.
    pub validity_bindings: Vec<History>,
    pub activation_condition: ActivationCondition,
}

/// The attributes and obligations attached to one piece of data.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct DataRuleSet {
    pub attributes: BTreeSet<Attribute>,
    pub obligations: BTreeSet<Obligation>,
}

impl DataRuleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty() && self.obligations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.attributes.len() + self.obligations.len()
    }

    /// Set-union in place; duplicates collapse.
    pub fn merge(&mut self, other: &DataRuleSet) {
        self.attributes.extend(other.attributes.iter().cloned());
        self.obligations.extend(other.obligations.iter().cloned());
    }

    pub fn union(&self, other: &DataRuleSet) -> DataRuleSet {
        let mut out = self.clone();
        out.merge(other);
        out
    }
}

impl FromIterator<Attribute> for DataRuleSet {
    fn from_iter<I: IntoIterator<Item = Attribute>>(iter: I) -> Self {
        DataRuleSet {
            attributes: iter.into_iter().collect(),
            obligations: BTreeSet::new(),
        }
    }
}

/// `edit(in, out, name, from_type, from_value, to_type, to_value)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EditRule {
    pub in_port: Symbol,
    pub out_port: Symbol,
    pub name: Pattern<Symbol>,
    pub from_type: Symbol,
    pub from_value: Value,
    pub to_type: Symbol,
    pub to_value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FlowRule {
    /// `pr(in, [out..])`: copy every rule on `in` to each listed output.
    Propagate { in_port: Symbol, out_ports: Vec<Symbol> },
    Edit(EditRule),
    /// `end([out..])`: emit the routed rules on the listed outputs.
    End { out_ports: Vec<Symbol> },
}

impl FlowRule {
    pub fn keyword(&self) -> &'static str {
        match self {
            FlowRule::Propagate { .. } => "pr",
            FlowRule::Edit(_) => "edit",
            FlowRule::End { .. } => "end",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("flow program has no end rule")]
    MissingEnd,
    #[error("end rule at step {position} is not the last step")]
    EndNotLast { position: usize },
    #[error("flow program has more than one end rule")]
    MultipleEnds,
    #[error("output port {port} is used but not listed in end")]
    PortNotEnded { port: Symbol },
    #[error("port {port} listed twice in {rule}")]
    DuplicatePort { rule: &'static str, port: Symbol },
}

/// An ordered list of flow rules terminated by exactly one `end`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlowProgram {
    steps: Vec<FlowRule>,
}

impl FlowProgram {
    pub fn new(steps: Vec<FlowRule>) -> Result<Self, StructureError> {
        let ends: Vec<usize> = steps
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, FlowRule::End { .. }))
            .map(|(i, _)| i)
            .collect();
        match ends.as_slice() {
            [] => return Err(StructureError::MissingEnd),
            [i] if *i + 1 != steps.len() => {
                return Err(StructureError::EndNotLast { position: *i })
            }
            [_] => {}
            _ => return Err(StructureError::MultipleEnds),
        }
        for step in &steps {
            if let FlowRule::Propagate { out_ports, .. } | FlowRule::End { out_ports } = step {
                if let Some(port) = first_duplicate(out_ports) {
                    return Err(StructureError::DuplicatePort {
                        rule: step.keyword(),
                        port: port.clone(),
                    });
                }
            }
        }
        let ended = match steps.last() {
            Some(FlowRule::End { out_ports }) => out_ports,
            _ => unreachable!("end position checked above"),
        };
        for step in &steps {
            let used: &[Symbol] = match step {
                FlowRule::Propagate { out_ports, .. } => out_ports,
                FlowRule::Edit(e) => std::slice::from_ref(&e.out_port),
                FlowRule::End { .. } => &[],
            };
            if let Some(port) = used.iter().find(|p| !ended.contains(p)) {
                return Err(StructureError::PortNotEnded { port: port.clone() });
            }
        }
        Ok(FlowProgram { steps })
    }

    pub fn steps(&self) -> &[FlowRule] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn end_ports(&self) -> &[Symbol] {
        match self.steps.last() {
            Some(FlowRule::End { out_ports }) => out_ports,
            _ => unreachable!("a FlowProgram always ends with end"),
        }
    }

    /// Checks that every port the program names is declared on `process`
    /// in the right direction.
    pub fn check_ports(&self, process: &ProcessNode) -> Result<(), PortError> {
        for (index, step) in self.steps.iter().enumerate() {
            let (ins, outs): (&[Symbol], &[Symbol]) = match step {
                FlowRule::Propagate { in_port, out_ports } => {
                    (std::slice::from_ref(in_port), out_ports)
                }
                FlowRule::Edit(e) => (
                    std::slice::from_ref(&e.in_port),
                    std::slice::from_ref(&e.out_port),
                ),
                FlowRule::End { out_ports } => (&[], out_ports),
            };
            let bad = ins
                .iter()
                .find(|p| !process.in_ports.contains(p))
                .map(|p| (p, PortDirection::In))
                .or_else(|| {
                    outs.iter()
                        .find(|p| !process.out_ports.contains(p))
                        .map(|p| (p, PortDirection::Out))
                });
            if let Some((port, direction)) = bad {
                return Err(PortError {
                    process: process.id.clone(),
                    port: port.as_str().to_owned(),
                    direction,
                    step: Some(index),
                });
            }
        }
        Ok(())
    }
}

fn first_duplicate(ports: &[Symbol]) -> Option<&Symbol> {
    let mut seen = BTreeSet::new();
    ports.iter().find(|p| !seen.insert(*p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PortDirection {
    In,
    Out,
}

impl fmt::Display for PortDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PortDirection::In => "input",
            PortDirection::Out => "output",
        })
    }
}

/// A reference to a port the process does not declare.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("process {process:?} has no {direction} port {port:?}{}", step.map(|s| format!(" (step {s})")).unwrap_or_default())]
pub struct PortError {
    pub process: String,
    pub port: String,
    pub direction: PortDirection,
    /// Index of the offending flow-rule step, when the reference came from a
    /// program.
    pub step: Option<usize>,
}

/// A process with named ports, the actions it performs, and optionally the
/// flow program describing how rules pass through it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessNode {
    pub id: String,
    pub in_ports: Vec<Symbol>,
    pub out_ports: Vec<Symbol>,
    pub actions: BTreeSet<Symbol>,
    pub program: Option<FlowProgram>,
}

impl ProcessNode {
    pub fn new(id: impl Into<String>) -> Self {
        ProcessNode {
            id: id.into(),
            in_ports: Vec::new(),
            out_ports: Vec::new(),
            actions: BTreeSet::new(),
            program: None,
        }
    }

    pub fn with_ports(mut self, ins: Vec<Symbol>, outs: Vec<Symbol>) -> Self {
        self.in_ports = ins;
        self.out_ports = outs;
        self
    }

    pub fn with_actions(mut self, actions: impl IntoIterator<Item = Symbol>) -> Self {
        self.actions = actions.into_iter().collect();
        self
    }

    pub fn with_program(mut self, program: FlowProgram) -> Self {
        self.program = Some(program);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataNode {
    pub id: String,
    /// Rules that hold before any processing. Only valid on source nodes.
    pub initial_rules: Option<DataRuleSet>,
}

impl DataNode {
    pub fn new(id: impl Into<String>) -> Self {
        DataNode {
            id: id.into(),
            initial_rules: None,
        }
    }

    pub fn with_rules(mut self, rules: DataRuleSet) -> Self {
        self.initial_rules = Some(rules);
        self
    }
}

/// Data `data` is read by `process` on input port `port`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Consumption {
    pub data: String,
    pub process: String,
    pub port: Symbol,
}

/// `process` writes `data` on output port `port`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generation {
    pub process: String,
    pub port: Symbol,
    pub data: String,
}

/// Bipartite graph of processes and data nodes.
///
/// Node maps are keyed by id, so duplicate ids are rejected on insertion.
/// Edge consistency is checked by [`crate::engine::validate_graph`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataFlowGraph {
    processes: BTreeMap<String, ProcessNode>,
    data: BTreeMap<String, DataNode>,
    consumptions: BTreeSet<Consumption>,
    generations: BTreeSet<Generation>,
}

impl DataFlowGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_process(&mut self, process: ProcessNode) -> Result<&mut Self, ModelError> {
        if process.id.is_empty() {
            return Err(ModelError::EmptyId);
        }
        if self.processes.contains_key(&process.id) {
            return Err(ModelError::DuplicateProcess(process.id));
        }
        self.processes.insert(process.id.clone(), process);
        Ok(self)
    }

    pub fn add_data(&mut self, data: DataNode) -> Result<&mut Self, ModelError> {
        if data.id.is_empty() {
            return Err(ModelError::EmptyId);
        }
        if self.data.contains_key(&data.id) {
            return Err(ModelError::DuplicateData(data.id));
        }
        self.data.insert(data.id.clone(), data);
        Ok(self)
    }

    pub fn add_consumption(
        &mut self,
        data: impl Into<String>,
        process: impl Into<String>,
        port: Symbol,
    ) -> &mut Self {
        self.consumptions.insert(Consumption {
            data: data.into(),
            process: process.into(),
            port,
        });
        self
    }

    pub fn add_generation(
        &mut self,
        process: impl Into<String>,
        port: Symbol,
        data: impl Into<String>,
    ) -> &mut Self {
        self.generations.insert(Generation {
            process: process.into(),
            port,
            data: data.into(),
        });
        self
    }

    pub fn processes(&self) -> impl Iterator<Item = &ProcessNode> {
        self.processes.values()
    }

    pub fn data_nodes(&self) -> impl Iterator<Item = &DataNode> {
        self.data.values()
    }

    pub fn process(&self, id: &str) -> Option<&ProcessNode> {
        self.processes.get(id)
    }

    pub fn process_mut(&mut self, id: &str) -> Option<&mut ProcessNode> {
        self.processes.get_mut(id)
    }

    pub fn data(&self, id: &str) -> Option<&DataNode> {
        self.data.get(id)
    }

    pub fn data_mut(&mut self, id: &str) -> Option<&mut DataNode> {
        self.data.get_mut(id)
    }

    pub fn consumptions(&self) -> &BTreeSet<Consumption> {
        &self.consumptions
    }

    pub fn generations(&self) -> &BTreeSet<Generation> {
        &self.generations
    }

    pub fn process_count(&self) -> usize {
        self.processes.len()
    }

    pub fn data_count(&self) -> usize {
        self.data.len()
    }

    /// The generation edge producing `data`, if any (the first when the
    /// graph is invalid and there are several).
    pub fn generator_of(&self, data: &str) -> Option<&Generation> {
        self.generations.iter().find(|g| g.data == data)
    }
}

/// True iff the attribute has the given type and value, and its name matches
/// `name` (any name when `name` is a wildcard).
pub fn attr_matches(
    name: &Pattern<Symbol>,
    from_type: &Symbol,
    from_value: &Value,
    attr: &Attribute,
) -> bool {
    name.matches(&attr.name) && *from_type == attr.ty && *from_value == attr.value
}

/// True iff the validity binding identifies the attribute instance with
/// history `attr_history`, i.e. the binding is a suffix of it.
pub fn binding_binds(binding: &History, attr_history: &History) -> bool {
    binding.is_suffix_of(attr_history)
}
