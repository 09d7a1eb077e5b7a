//! Obligation activation, projection queries and report rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::QueryPattern;
use crate::engine::DerivationResult;
use crate::model::{
    binding_binds, Attribute, DataFlowGraph, DataRuleSet, History, Obligation, Pattern, Symbol,
    Value,
};

/// Every consuming process performs this action on the data it reads.
pub const IMPLICIT_ACTION: &str = "use";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationStatus {
    /// Triggered and still outstanding.
    Activated,
    /// Triggered at a process that itself performs the obligated action.
    Discharged,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObligationActivation {
    pub obligation: Obligation,
    pub process_id: String,
    pub in_port: Symbol,
    pub triggering_action: Symbol,
    pub bound_attributes: Vec<Attribute>,
    pub status: ActivationStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("derivation result does not match graph: {0}")]
    Consistency(String),
    #[error("unknown data node {0:?}")]
    UnknownDataNode(String),
}

/// Finds every obligation triggered at a consuming process.
///
/// An obligation on a process input port activates when its condition
/// matches one of the process's declared actions or the implicit `use`.
/// Obligations with validity bindings activate only if some attribute on the
/// same port is bound by them.
pub fn compute_activations(
    result: &DerivationResult,
    graph: &DataFlowGraph,
) -> Result<Vec<ObligationActivation>, ReportError> {
    check_consistent(result, graph)?;
    let implicit = Symbol::new(IMPLICIT_ACTION).expect("valid symbol");
    let mut out = Vec::new();
    for process_id in &result.order {
        let process = graph
            .process(process_id)
            .ok_or_else(|| ReportError::Consistency(format!("unknown process {process_id}")))?;
        for port in &process.in_ports {
            let inputs = &result.per_port_inputs[&(process_id.clone(), port.clone())];
            for obligation in &inputs.obligations {
                let trigger = match &obligation.activation_condition.target {
                    Pattern::Any => process.actions.iter().next().unwrap_or(&implicit),
                    Pattern::Exact(a) if *a == implicit || process.actions.contains(a) => a,
                    Pattern::Exact(_) => continue,
                };
                let bound: Vec<Attribute> = inputs
                    .attributes
                    .iter()
                    .filter(|a| {
                        obligation
                            .validity_bindings
                            .iter()
                            .any(|b| binding_binds(b, &a.history))
                    })
                    .cloned()
                    .collect();
                if !obligation.validity_bindings.is_empty() && bound.is_empty() {
                    continue;
                }
                let status = if process.actions.contains(&obligation.obligated_action) {
                    ActivationStatus::Discharged
                } else {
                    ActivationStatus::Activated
                };
                out.push(ObligationActivation {
                    obligation: obligation.clone(),
                    process_id: process_id.clone(),
                    in_port: port.clone(),
                    triggering_action: trigger.clone(),
                    bound_attributes: bound,
                    status,
                });
            }
        }
    }
    Ok(out)
}

fn check_consistent(result: &DerivationResult, graph: &DataFlowGraph) -> Result<(), ReportError> {
    let data: BTreeSet<&str> = graph.data_nodes().map(|d| d.id.as_str()).collect();
    let derived: BTreeSet<&str> = result.per_data_rules.keys().map(String::as_str).collect();
    if data != derived {
        return Err(ReportError::Consistency(
            "data nodes differ from derived rule sets".into(),
        ));
    }
    let ports: BTreeSet<(&str, &Symbol)> = graph
        .processes()
        .flat_map(|p| p.in_ports.iter().map(move |port| (p.id.as_str(), port)))
        .collect();
    let recorded: BTreeSet<(&str, &Symbol)> = result
        .per_port_inputs
        .keys()
        .map(|(p, port)| (p.as_str(), port))
        .collect();
    if ports != recorded {
        return Err(ReportError::Consistency(
            "process input ports differ from recorded port inputs".into(),
        ));
    }
    let processes: BTreeSet<&str> = graph.processes().map(|p| p.id.as_str()).collect();
    let ordered: BTreeSet<&str> = result.order.iter().map(String::as_str).collect();
    if processes != ordered || ordered.len() != result.order.len() {
        return Err(ReportError::Consistency(
            "processing order does not cover every process once".into(),
        ));
    }
    Ok(())
}

/// Projection: the attributes on `data_id` that match `pattern`.
pub fn query_attributes(
    result: &DerivationResult,
    data_id: &str,
    pattern: &QueryPattern,
) -> Result<Vec<Attribute>, ReportError> {
    let rules = result
        .per_data_rules
        .get(data_id)
        .ok_or_else(|| ReportError::UnknownDataNode(data_id.to_owned()))?;
    Ok(rules
        .attributes
        .iter()
        .filter(|a| pattern.matches(a))
        .cloned()
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

// JSON report document. Field names are the wire schema; serialization goes
// through serde_json::Value so object keys come out sorted.

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonValue {
    Int(i64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonAttribute {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub value: JsonValue,
    pub history: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonObligation {
    pub obligated_action: String,
    pub validity_bindings: Vec<Vec<String>>,
    /// `"*"` or an action name.
    pub activation_condition: String,
    pub history: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonRuleSet {
    pub generated: bool,
    pub attributes: Vec<JsonAttribute>,
    pub obligations: Vec<JsonObligation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonActivation {
    pub process: String,
    pub in_port: String,
    pub triggering_action: String,
    pub status: ActivationStatus,
    pub obligation: JsonObligation,
    pub bound_attributes: Vec<JsonAttribute>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonSummary {
    pub data_nodes: usize,
    pub processes: usize,
    pub attributes: usize,
    pub obligations: usize,
    pub derived_attributes: usize,
    pub derived_obligations: usize,
    pub activations: usize,
    pub outstanding: usize,
    pub discharged: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonReport {
    pub data_rules: BTreeMap<String, JsonRuleSet>,
    pub activations: Vec<JsonActivation>,
    pub summary: JsonSummary,
}

impl JsonReport {
    pub fn parse_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Canonical rendering: sorted keys, two-space indent, trailing newline.
    pub fn to_canonical_string(&self) -> String {
        canonical_json(self)
    }
}

pub(crate) fn canonical_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("report types serialize");
    let mut s = serde_json::to_string_pretty(&value).expect("values serialize");
    s.push('\n');
    s
}

fn history_json(h: &History) -> Vec<String> {
    h.tokens().iter().map(|t| t.to_string()).collect()
}

pub fn attribute_json(a: &Attribute) -> JsonAttribute {
    JsonAttribute {
        name: a.name.to_string(),
        ty: a.ty.to_string(),
        value: match &a.value {
            Value::Int(i) => JsonValue::Int(*i),
            Value::Str(s) => JsonValue::Str(s.clone()),
        },
        history: history_json(&a.history),
    }
}

pub fn obligation_json(o: &Obligation) -> JsonObligation {
    JsonObligation {
        obligated_action: o.obligated_action.to_string(),
        validity_bindings: o.validity_bindings.iter().map(history_json).collect(),
        activation_condition: o.activation_condition.target.to_string(),
        history: history_json(&o.history),
    }
}

pub fn rule_set_json(rules: &DataRuleSet, generated: bool) -> JsonRuleSet {
    JsonRuleSet {
        generated,
        attributes: rules.attributes.iter().map(attribute_json).collect(),
        obligations: rules.obligations.iter().map(obligation_json).collect(),
    }
}

/// Per-data rule sets keyed by data node id.
pub fn data_rules_json(result: &DerivationResult) -> BTreeMap<String, JsonRuleSet> {
    result
        .per_data_rules
        .iter()
        .map(|(id, rules)| (id.clone(), rule_set_json(rules, result.generated.contains(id))))
        .collect()
}

pub fn build_report(result: &DerivationResult, activations: &[ObligationActivation]) -> JsonReport {
    let derived = result
        .per_data_rules
        .iter()
        .filter(|(id, _)| result.generated.contains(*id));
    let (derived_attributes, derived_obligations) = derived
        .fold((0, 0), |(a, o), (_, r)| (a + r.attributes.len(), o + r.obligations.len()));
    let outstanding = activations
        .iter()
        .filter(|a| a.status == ActivationStatus::Activated)
        .count();
    JsonReport {
        data_rules: data_rules_json(result),
        activations: activations
            .iter()
            .map(|a| JsonActivation {
                process: a.process_id.clone(),
                in_port: a.in_port.to_string(),
                triggering_action: a.triggering_action.to_string(),
                status: a.status,
                obligation: obligation_json(&a.obligation),
                bound_attributes: a.bound_attributes.iter().map(attribute_json).collect(),
            })
            .collect(),
        summary: JsonSummary {
            data_nodes: result.per_data_rules.len(),
            processes: result.order.len(),
            attributes: result.per_data_rules.values().map(|r| r.attributes.len()).sum(),
            obligations: result.per_data_rules.values().map(|r| r.obligations.len()).sum(),
            derived_attributes,
            derived_obligations,
            activations: activations.len(),
            outstanding,
            discharged: activations.len() - outstanding,
        },
    }
}

pub fn render_report(
    result: &DerivationResult,
    activations: &[ObligationActivation],
    format: ReportFormat,
) -> String {
    match format {
        ReportFormat::Json => build_report(result, activations).to_canonical_string(),
        ReportFormat::Text => render_text(result, activations),
    }
}

/// Per-data rule sets alone, as printed by `derive`.
pub fn render_derivation(result: &DerivationResult, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            canonical_json(&serde_json::json!({ "data_rules": data_rules_json(result) }))
        }
        ReportFormat::Text => {
            let mut s = String::new();
            render_rules_text(result, &mut s);
            s
        }
    }
}

/// Query matches: one canonical statement per line, or a JSON document.
pub fn render_query(data_id: &str, matches: &[Attribute], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => canonical_json(&serde_json::json!({
            "data": data_id,
            "matches": matches.iter().map(attribute_json).collect::<Vec<_>>(),
        })),
        ReportFormat::Text => matches.iter().map(|a| format!("{a}.\n")).collect(),
    }
}

/// Pretty-printed JSON with sorted keys and a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    canonical_json(value)
}

fn render_rules_text(result: &DerivationResult, s: &mut String) {
    s.push_str("== Data rules ==\n");
    for (id, rules) in &result.per_data_rules {
        let tag = if result.generated.contains(id) {
            "derived"
        } else {
            "source"
        };
        let _ = writeln!(s, "[{id}] ({tag}, {} rules)", rules.len());
        for line in rules.to_string().lines() {
            let _ = writeln!(s, "  {line}");
        }
    }
}

fn render_text(result: &DerivationResult, activations: &[ObligationActivation]) -> String {
    let report = build_report(result, activations);
    let mut s = String::new();
    render_rules_text(result, &mut s);

    for (title, status) in [
        ("Outstanding obligations", ActivationStatus::Activated),
        ("Discharged obligations", ActivationStatus::Discharged),
    ] {
        let _ = writeln!(s, "\n== {title} ==");
        let mut by_process: BTreeMap<&str, Vec<&ObligationActivation>> = BTreeMap::new();
        for a in activations.iter().filter(|a| a.status == status) {
            by_process.entry(&a.process_id).or_default().push(a);
        }
        if by_process.is_empty() {
            s.push_str("  (none)\n");
        }
        for (process, list) in by_process {
            let _ = writeln!(s, "process {process}:");
            for a in list {
                let _ = writeln!(
                    s,
                    "  {} on {} (triggered by {}, {} bound attributes)",
                    a.obligation.obligated_action,
                    a.in_port,
                    a.triggering_action,
                    a.bound_attributes.len()
                );
                let _ = writeln!(s, "    {}", a.obligation);
            }
        }
    }

    let m = &report.summary;
    s.push_str("\n== Summary ==\n");
    let _ = writeln!(s, "data nodes: {}", m.data_nodes);
    let _ = writeln!(s, "processes: {}", m.processes);
    let _ = writeln!(s, "attributes: {} ({} derived)", m.attributes, m.derived_attributes);
    let _ = writeln!(s, "obligations: {} ({} derived)", m.obligations, m.derived_obligations);
    let _ = writeln!(s, "activations: {}", m.activations);
    let _ = writeln!(s, "outstanding: {}", m.outstanding);
    let _ = writeln!(s, "discharged: {}", m.discharged);
    s
}
