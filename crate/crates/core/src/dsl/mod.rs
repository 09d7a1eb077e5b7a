//! The textual rule language.
//!
//! ```text
//! % data rules
//! attribute(pf, column, 3, [input1, pf_1], s0).
//! obligation(report, [[input1, pf_1]], action = *, input1, s0).
//! % flow rules
//! pr(input1, [output1, output2]).
//! edit(input1, output2, *, column, 3, column, 2).
//! end([output1, output2]).
//! ```
//!
//! Statements end in `.` and `%` starts a line comment. The trailing
//! situation argument of `attribute`/`obligation` is optional and ignored.
//! Serialization is canonical: `parse(serialize(x)) == x`.

mod lexer;
mod parser;
mod write;

use std::fmt;

use thiserror::Error;

use crate::model::{
    binding_binds, Attribute, DataRuleSet, FlowProgram, FlowRule, History, Pattern,
    StructureError, Symbol, Value,
};

use parser::{Kinds, Parser, Statement};
pub use write::{serialize_data_rules, serialize_flow_program, serialize_history};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at {}:{}: found {}, expected ",
            self.line, self.column, self.found
        )?;
        match self.expected.as_slice() {
            [] => f.write_str("nothing"),
            [one] => f.write_str(one),
            many => write!(f, "one of {}", many.join(", ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("invalid flow program: {0}")]
    Structure(#[from] StructureError),
    #[error("line {line}: a rule document holds either data rules or flow rules, not both")]
    MixedDocument { line: usize },
}

/// Non-fatal findings while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    DuplicateRule { line: usize, statement: String },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DuplicateRule { line, statement } => {
                write!(f, "line {line}: duplicate rule {statement} ignored")
            }
        }
    }
}

/// Rules attached to one data node or process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleDocument {
    pub target: String,
    pub body: RuleBody,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleBody {
    DataRules(DataRuleSet),
    FlowProgram(FlowProgram),
}

impl RuleDocument {
    pub fn data_rules(&self) -> Option<&DataRuleSet> {
        match &self.body {
            RuleBody::DataRules(r) => Some(r),
            RuleBody::FlowProgram(_) => None,
        }
    }

    pub fn flow_program(&self) -> Option<&FlowProgram> {
        match &self.body {
            RuleBody::FlowProgram(p) => Some(p),
            RuleBody::DataRules(_) => None,
        }
    }
}

fn collect_rules(
    statements: Vec<(lexer::Pos, Statement)>,
) -> (DataRuleSet, Vec<Warning>) {
    let mut rules = DataRuleSet::new();
    let mut warnings = Vec::new();
    for (pos, stmt) in statements {
        let (fresh, text) = match stmt {
            Statement::Attribute(a) => {
                let text = a.to_string();
                (rules.attributes.insert(a), text)
            }
            Statement::Obligation(o) => {
                let text = o.to_string();
                (rules.obligations.insert(o), text)
            }
            Statement::Flow(_) => unreachable!("parser restricted to data rules"),
        };
        if !fresh {
            warnings.push(Warning::DuplicateRule {
                line: pos.line,
                statement: text,
            });
        }
    }
    (rules, warnings)
}

/// Parses attribute and obligation statements, reporting duplicates.
pub fn parse_data_rules_with_warnings(
    text: &str,
) -> Result<(DataRuleSet, Vec<Warning>), SyntaxError> {
    let statements = Parser::new(text)?.statements(Kinds::DataRules)?;
    Ok(collect_rules(statements))
}

pub fn parse_data_rules(text: &str) -> Result<DataRuleSet, SyntaxError> {
    parse_data_rules_with_warnings(text).map(|(rules, _)| rules)
}

pub fn parse_flow_program(text: &str) -> Result<FlowProgram, DslError> {
    let steps = Parser::new(text)?
        .statements(Kinds::FlowRules)?
        .into_iter()
        .map(|(_, s)| match s {
            Statement::Flow(r) => r,
            _ => unreachable!("parser restricted to flow rules"),
        })
        .collect::<Vec<FlowRule>>();
    Ok(FlowProgram::new(steps)?)
}

/// Parses a rule file for `target`. The kind of the first statement decides
/// whether the document holds data rules or a flow program; an empty
/// document is an empty data rule set.
pub fn parse_document(
    target: impl Into<String>,
    text: &str,
) -> Result<(RuleDocument, Vec<Warning>), DslError> {
    let statements = Parser::new(text)?.statements(Kinds::Any)?;
    let is_flow = matches!(statements.first(), Some((_, Statement::Flow(_))));
    if let Some((pos, _)) = statements
        .iter()
        .find(|(_, s)| matches!(s, Statement::Flow(_)) != is_flow)
    {
        return Err(DslError::MixedDocument { line: pos.line });
    }
    let (body, warnings) = if is_flow {
        let steps = statements
            .into_iter()
            .map(|(_, s)| match s {
                Statement::Flow(r) => r,
                _ => unreachable!(),
            })
            .collect();
        (RuleBody::FlowProgram(FlowProgram::new(steps)?), Vec::new())
    } else {
        let (rules, warnings) = collect_rules(statements);
        (RuleBody::DataRules(rules), warnings)
    };
    Ok((
        RuleDocument {
            target: target.into(),
            body,
        },
        warnings,
    ))
}

/// A projection query over attributes; `*` positions match anything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryPattern {
    pub name: Pattern<Symbol>,
    pub ty: Pattern<Symbol>,
    pub value: Pattern<Value>,
    /// When set, only attributes whose history ends with this suffix match.
    pub history_suffix: Option<History>,
}

impl QueryPattern {
    /// Matches every attribute.
    pub fn any() -> Self {
        Self::default()
    }

    pub fn matches(&self, attr: &Attribute) -> bool {
        self.name.matches(&attr.name)
            && self.ty.matches(&attr.ty)
            && self.value.matches(&attr.value)
            && self
                .history_suffix
                .as_ref()
                .is_none_or(|s| binding_binds(s, &attr.history))
    }
}

impl fmt::Display for QueryPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "attribute({}, {}, {}, ", self.name, self.ty, self.value)?;
        match &self.history_suffix {
            Some(h) => write!(f, "{h})"),
            None => f.write_str("*)"),
        }
    }
}

/// Parses `attribute(N, T, V, H)` with `*` allowed in every position and
/// `H` otherwise a history suffix. A trailing situation and `.` are allowed.
pub fn parse_query_pattern(text: &str) -> Result<QueryPattern, SyntaxError> {
    Parser::new(text)?.query_pattern()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActivationCondition, Obligation};

    fn sym(s: &str) -> Symbol {
        Symbol::new(s).unwrap()
    }

    fn hist(t: &[&str]) -> History {
        History::parse(t.iter().copied()).unwrap()
    }

    #[test]
    fn parses_attribute_with_situation() {
        let rules = parse_data_rules("attribute(pf, column, 3, [input1, pf_1], s0).").unwrap();
        let expected =
            Attribute::new(sym("pf"), sym("column"), 3, hist(&["input1", "pf_1"]));
        assert_eq!(rules.attributes.into_iter().collect::<Vec<_>>(), vec![expected]);
        assert!(rules.obligations.is_empty());
    }

    #[test]
    fn parses_obligation() {
        let rules =
            parse_data_rules("obligation(report, [[input1, pf_1]], action = *, input1, s0).")
                .unwrap();
        let expected = Obligation {
            obligated_action: sym("report"),
            history: hist(&["input1"]),
            validity_bindings: vec![hist(&["input1", "pf_1"])],
            activation_condition: ActivationCondition::any(),
        };
        assert_eq!(rules.obligations.into_iter().collect::<Vec<_>>(), vec![expected]);
    }

    #[test]
    fn propagated_obligation_history_round_trips() {
        let text = "obligation(report, [], action = plot, [output1, input1]).\n";
        let rules = parse_data_rules(text).unwrap();
        let o = rules.obligations.iter().next().unwrap();
        assert_eq!(o.history, hist(&["output1", "input1"]));
        assert_eq!(o.activation_condition, ActivationCondition::on(sym("plot")));
        assert_eq!(serialize_data_rules(&rules), text);
    }

    #[test]
    fn empty_input() {
        assert!(parse_data_rules("").unwrap().is_empty());
        assert!(parse_data_rules("  % only a comment\n").unwrap().is_empty());
        assert_eq!(serialize_data_rules(&DataRuleSet::new()), "");
    }

    #[test]
    fn duplicates_warn() {
        let text = "attribute(a, t, 1, [r]).\nattribute(a, t, 1, [r]).";
        let (rules, warnings) = parse_data_rules_with_warnings(text).unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!(
            warnings,
            vec![Warning::DuplicateRule {
                line: 2,
                statement: "attribute(a, t, 1, [r])".into()
            }]
        );
    }

    #[test]
    fn syntax_error_location() {
        let err = parse_data_rules("attribute(pf, column, 3,\n  [input1 pf_1]).").unwrap_err();
        assert_eq!((err.line, err.column), (2, 11));
        assert_eq!(err.expected, vec!["`,`", "`]`"]);
        let err = parse_data_rules("attribute(pf, column, 3, []).").unwrap_err();
        assert_eq!(err.expected, vec!["identifier"]);
        let err = parse_data_rules("pr(a, [b]).").unwrap_err();
        assert_eq!(err.expected, vec!["attribute", "obligation"]);
        let err = parse_data_rules("attribute(pf, column, 3, [r])").unwrap_err();
        assert_eq!(err.found, "end of input");
    }

    #[test]
    fn wildcard_only_where_permitted() {
        assert!(parse_data_rules("attribute(*, column, 3, [r]).").is_err());
        assert!(parse_data_rules("attribute(a, column, *, [r]).").is_err());
        assert!(parse_flow_program("pr(*, [o]). end([o]).").is_err());
        assert!(parse_flow_program("edit(i, o, *, column, 3, column, 2). end([o]).").is_ok());
        assert!(parse_flow_program("edit(i, o, a, *, 3, column, 2). end([o]).").is_err());
    }

    #[test]
    fn quoted_values() {
        let text = "attribute(licence, url, \"https://x.org/a \\\"b\\\"\", [l_1]).\n";
        let rules = parse_data_rules(text).unwrap();
        let a = rules.attributes.iter().next().unwrap();
        assert_eq!(a.value, Value::Str("https://x.org/a \"b\"".into()));
        assert_eq!(serialize_data_rules(&rules), text);
        // a quoted identifier is the same value as the bare symbol
        assert_eq!(
            parse_data_rules("attribute(a, t, \"x\", [r]).").unwrap(),
            parse_data_rules("attribute(a, t, x, [r]).").unwrap()
        );
    }

    #[test]
    fn column_edit_program() {
        let p = parse_flow_program(
            "pr(input1, [output1, output2]). edit(input1, output2, *, column, 3, column, 2). end([output1, output2]).",
        )
        .unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(
            serialize_flow_program(&p),
            "pr(input1, [output1, output2]).\nedit(input1, output2, *, column, 3, column, 2).\nend([output1, output2]).\n"
        );
    }

    #[test]
    fn program_structure_errors() {
        assert_eq!(
            parse_flow_program("pr(input1, [output1])."),
            Err(DslError::Structure(StructureError::MissingEnd))
        );
        assert_eq!(parse_flow_program("end([]).").unwrap().len(), 1);
        assert!(matches!(
            parse_flow_program("end([o]). end([o])."),
            Err(DslError::Structure(StructureError::MultipleEnds))
        ));
        assert!(matches!(
            parse_flow_program("end([o]). pr(i, [o])."),
            Err(DslError::Structure(StructureError::EndNotLast { .. }))
        ));
        assert!(matches!(
            parse_flow_program("pr(i, [o, p]). end([o])."),
            Err(DslError::Structure(StructureError::PortNotEnded { .. }))
        ));
    }

    #[test]
    fn documents() {
        let (doc, _) = parse_document("P", "pr(i, [o]). end([o]).").unwrap();
        assert_eq!(doc.target, "P");
        assert!(doc.flow_program().is_some());
        let (doc, _) = parse_document("d", "attribute(a, t, 1, [r]).").unwrap();
        assert_eq!(doc.data_rules().unwrap().len(), 1);
        let (doc, _) = parse_document("d", "").unwrap();
        assert!(doc.data_rules().unwrap().is_empty());
        assert_eq!(
            parse_document("x", "attribute(a, t, 1, [r]).\nend([]).").unwrap_err(),
            DslError::MixedDocument { line: 2 }
        );
    }

    #[test]
    fn query_patterns() {
        let q = parse_query_pattern("attribute(*, *, *, *)").unwrap();
        assert_eq!(q, QueryPattern::any());
        let q = parse_query_pattern("attribute(pf, column, *, [pf_1], s1).").unwrap();
        assert_eq!(q.name, Pattern::Exact(sym("pf")));
        assert_eq!(q.value, Pattern::Any);
        assert_eq!(q.history_suffix, Some(hist(&["pf_1"])));
        assert_eq!(q.to_string(), "attribute(pf, column, *, [pf_1])");
        let a = Attribute::new(sym("pf"), sym("column"), 2, hist(&["output2", "input1", "pf_1"]));
        assert!(q.matches(&a));
        let q = parse_query_pattern("attribute(pf, column, 3, *)").unwrap();
        assert!(!q.matches(&a));
        assert!(parse_query_pattern("attribute(*, *, *, *) extra").is_err());
    }

    #[test]
    fn whitespace_between_tokens_is_ignored() {
        let tight = "attribute(pf,column,3,[input1,pf_1]).";
        let loose = " attribute ( pf ,\n column , 3 ,\t[ input1 , pf_1 ] ) \n. ";
        assert_eq!(parse_data_rules(tight).unwrap(), parse_data_rules(loose).unwrap());
    }
}
