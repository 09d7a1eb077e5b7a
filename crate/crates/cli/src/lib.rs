//! The `rulegraph` command line: validate, derive, check and query rule
//! propagation over data-flow graphs, and import PROV documents.
//!
//! Exit codes: 0 when the analysis succeeds and nothing is outstanding, 1
//! when `check` finds outstanding obligations, 2 on any error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rulegraph_core::dsl::parse_data_rules_with_warnings;
use rulegraph_core::{
    compute_activations, derive, import_prov, load_graph, parse_document, parse_flow_program,
    parse_prov, parse_query_pattern, query_attributes, render_derivation, render_query,
    render_report, save_graph, to_canonical_json, validate_graph, ActivationStatus,
    DataFlowGraph, Diagnostic, EngineError, ProvBindings, ReportFormat, RuleBody, Symbol,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OUTSTANDING: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rulegraph", version, about = "Propagate data rules through data-flow graphs")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// Native graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Rule file, as `target=path` or a path whose file stem names the
    /// target data node or process.
    #[arg(long = "rules", value_name = "[TARGET=]PATH")]
    rules: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report graph invariant violations.
    Validate(GraphArgs),
    /// Print the derived rules of every data node.
    Derive(GraphArgs),
    /// Derive, then report triggered obligations.
    Check(GraphArgs),
    /// Print the attributes of one data node that match a pattern.
    Query {
        #[command(flatten)]
        graph: GraphArgs,
        /// Attribute pattern, e.g. `attribute(pf, *, *, *).`
        #[arg(long)]
        pattern: String,
        /// Data node to query.
        #[arg(long)]
        data: String,
    },
    /// Convert a PROV document into a native graph file.
    ImportProv {
        #[arg(long)]
        prov: PathBuf,
        /// Initial rules for an entity, as `entity=path` or a path whose file
        /// stem is the entity id.
        #[arg(long = "rules", value_name = "[ENTITY=]PATH")]
        rules: Vec<String>,
        /// JSON object mapping activity ids to lists of declared actions.
        #[arg(long)]
        actions: Option<PathBuf>,
        /// JSON object mapping activity ids to flow program text.
        #[arg(long)]
        programs: Option<PathBuf>,
        /// Where to write the graph; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_ERROR
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Splits `target=path`; without `=`, the file stem is the target.
fn rule_spec(spec: &str) -> Result<(String, PathBuf)> {
    if let Some((target, path)) = spec.split_once('=') {
        if target.is_empty() || path.is_empty() {
            bail!("malformed rules argument {spec:?}");
        }
        return Ok((target.to_owned(), PathBuf::from(path)));
    }
    let path = PathBuf::from(spec);
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| anyhow!("cannot take a target name from {spec:?}"))?
        .to_owned();
    Ok((stem, path))
}

fn load(args: &GraphArgs, err: &mut dyn Write) -> Result<DataFlowGraph> {
    let text = read(&args.graph)?;
    let mut graph =
        load_graph(&text).with_context(|| format!("invalid graph file {}", args.graph.display()))?;
    for spec in &args.rules {
        let (target, path) = rule_spec(spec)?;
        let (doc, warnings) = parse_document(&target, &read(&path)?)
            .with_context(|| format!("in {}", path.display()))?;
        for w in warnings {
            let _ = writeln!(err, "warning: {}: {w}", path.display());
        }
        match doc.body {
            RuleBody::DataRules(rules) => {
                let node = graph.data_mut(&target).ok_or_else(|| {
                    anyhow!("{}: no data node named {target:?}", path.display())
                })?;
                node.initial_rules.get_or_insert_with(Default::default).merge(&rules);
            }
            RuleBody::FlowProgram(program) => {
                let process = graph.process_mut(&target).ok_or_else(|| {
                    anyhow!("{}: no process named {target:?}", path.display())
                })?;
                process.program = Some(program);
            }
        }
    }
    Ok(graph)
}

fn report_diagnostics(diagnostics: &[Diagnostic], err: &mut dyn Write) {
    for d in diagnostics {
        let _ = writeln!(err, "{d}");
    }
}

/// Derives, printing graph diagnostics on failure.
fn derive_or_report(
    graph: &DataFlowGraph,
    err: &mut dyn Write,
) -> Result<Option<rulegraph_core::DerivationResult>> {
    match derive(graph) {
        Ok(result) => Ok(Some(result)),
        Err(EngineError::Invalid(diagnostics)) => {
            report_diagnostics(&diagnostics, err);
            Ok(None)
        }
        Err(EngineError::Cycle(cycle)) => {
            report_diagnostics(&[Diagnostic::CycleDetected { processes: cycle.0 }], err);
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let format = cli.format;
    match cli.command {
        Command::Validate(args) => {
            let graph = load(&args, err)?;
            let diagnostics = validate_graph(&graph);
            match format {
                Format::Json => {
                    let doc = serde_json::json!({
                        "valid": diagnostics.is_empty(),
                        "diagnostics": diagnostics,
                    });
                    out.write_all(to_canonical_json(&doc).as_bytes())?;
                }
                Format::Text if diagnostics.is_empty() => writeln!(
                    out,
                    "valid: {} processes, {} data nodes",
                    graph.process_count(),
                    graph.data_count()
                )?,
                Format::Text => {
                    for d in &diagnostics {
                        writeln!(out, "{d}")?;
                    }
                }
            }
            Ok(if diagnostics.is_empty() { EXIT_OK } else { EXIT_ERROR })
        }
        Command::Derive(args) => {
            let graph = load(&args, err)?;
            let Some(result) = derive_or_report(&graph, err)? else {
                return Ok(EXIT_ERROR);
            };
            out.write_all(render_derivation(&result, format.into()).as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Check(args) => {
            let graph = load(&args, err)?;
            let Some(result) = derive_or_report(&graph, err)? else {
                return Ok(EXIT_ERROR);
            };
            let activations = compute_activations(&result, &graph)?;
            out.write_all(render_report(&result, &activations, format.into()).as_bytes())?;
            let outstanding = activations
                .iter()
                .any(|a| a.status == ActivationStatus::Activated);
            Ok(if outstanding { EXIT_OUTSTANDING } else { EXIT_OK })
        }
        Command::Query {
            graph: args,
            pattern,
            data,
        } => {
            let pattern = parse_query_pattern(&pattern).context("invalid pattern")?;
            let graph = load(&args, err)?;
            let Some(result) = derive_or_report(&graph, err)? else {
                return Ok(EXIT_ERROR);
            };
            let matches = query_attributes(&result, &data, &pattern)?;
            out.write_all(render_query(&data, &matches, format.into()).as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::ImportProv {
            prov,
            rules,
            actions,
            programs,
            out: out_path,
        } => {
            let doc = parse_prov(&read(&prov)?)
                .with_context(|| format!("invalid PROV document {}", prov.display()))?;
            let bindings = load_bindings(&rules, actions.as_deref(), programs.as_deref(), err)?;
            let graph = import_prov(&doc, &bindings)?;
            let text = save_graph(&graph);
            match out_path {
                Some(path) => {
                    fs::write(&path, text)
                        .with_context(|| format!("cannot write {}", path.display()))?;
                    writeln!(
                        err,
                        "wrote {} ({} processes, {} data nodes)",
                        path.display(),
                        graph.process_count(),
                        graph.data_count()
                    )?;
                }
                None => out.write_all(text.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn load_bindings(
    rules: &[String],
    actions: Option<&Path>,
    programs: Option<&Path>,
    err: &mut dyn Write,
) -> Result<ProvBindings> {
    let mut bindings = ProvBindings::default();
    for spec in rules {
        let (entity, path) = rule_spec(spec)?;
        let (set, warnings) = parse_data_rules_with_warnings(&read(&path)?)
            .with_context(|| format!("in {}", path.display()))?;
        for w in warnings {
            let _ = writeln!(err, "warning: {}: {w}", path.display());
        }
        bindings.rules.entry(entity).or_default().merge(&set);
    }
    if let Some(path) = actions {
        let map: BTreeMap<String, Vec<String>> = serde_json::from_str(&read(path)?)
            .with_context(|| format!("{}: expected an object of action lists", path.display()))?;
        for (activity, list) in map {
            let symbols = list
                .iter()
                .map(|a| Symbol::new(a.as_str()))
                .collect::<Result<_, _>>()
                .with_context(|| format!("{}: actions of {activity:?}", path.display()))?;
            bindings.actions.insert(activity, symbols);
        }
    }
    if let Some(path) = programs {
        let map: BTreeMap<String, String> = serde_json::from_str(&read(path)?)
            .with_context(|| format!("{}: expected an object of program texts", path.display()))?;
        for (activity, text) in map {
            let program = parse_flow_program(&text)
                .with_context(|| format!("{}: program of {activity:?}", path.display()))?;
            bindings.programs.insert(activity, program);
        }
    }
    Ok(bindings)
}
