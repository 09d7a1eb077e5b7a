//! Data-governance rule propagation over data-flow graphs.
//!
//! Data rules (attributes and obligations) attach to data. Flow rules attach
//! to processes and say how data rules travel from input ports to output
//! ports. [`derive`] pushes rules through a whole graph in topological
//! order, and [`compute_activations`] reports which obligations are
//! triggered by the processes that consume the data.

pub mod dsl;
pub mod engine;
pub mod interpreter;
pub mod model;
pub mod provenance;
pub mod report;

pub use dsl::{
    parse_data_rules, parse_document, parse_flow_program, parse_query_pattern,
    serialize_data_rules, serialize_flow_program, DslError, QueryPattern, RuleBody, RuleDocument,
    SyntaxError,
};
pub use engine::{
    derive, derive_with_order, topological_order, validate_graph, CycleError, DerivationResult,
    Diagnostic, EngineError,
};
pub use interpreter::{default_program, do_process, ProcessOutput, ProcessTrace};
pub use model::{
    attr_matches, binding_binds, ActivationCondition, Attribute, DataFlowGraph, DataNode,
    DataRuleSet, EditRule, FlowProgram, FlowRule, History, HistoryToken, ModelError, Obligation,
    Pattern, PortError, ProcessNode, StructureError, Symbol, Value,
};
pub use provenance::{
    import_prov, load_graph, parse_prov, save_graph, ImportError, ProvBindings, ProvDocument,
    SchemaError,
};
pub use report::{
    compute_activations, query_attributes, render_derivation, render_query, render_report,
    to_canonical_json, ActivationStatus, JsonReport,
    ObligationActivation, ReportError, ReportFormat,
};
