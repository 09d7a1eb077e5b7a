use std::fmt::{self, Write as _};

use crate::model::{
    is_identifier, ActivationCondition, Attribute, DataRuleSet, FlowProgram, FlowRule, History,
    Obligation, Pattern, Symbol, Value,
};

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) if is_identifier(s) => f.write_str(s),
            Value::Str(s) => {
                f.write_char('"')?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => f.write_char(c)?,
                    }
                }
                f.write_char('"')
            }
        }
    }
}

impl<T: fmt::Display> fmt::Display for Pattern<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Any => f.write_str("*"),
            Pattern::Exact(v) => v.fmt(f),
        }
    }
}

impl fmt::Display for ActivationCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "action = {}", self.target)
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "attribute({}, {}, {}, {})",
            self.name, self.ty, self.value, self.history
        )
    }
}

impl fmt::Display for Obligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "obligation({}, [", self.obligated_action)?;
        for (i, b) in self.validity_bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            b.fmt(f)?;
        }
        write!(f, "], {}, ", self.activation_condition)?;
        if self.history.len() == 1 {
            self.history.newest().fmt(f)?;
        } else {
            self.history.fmt(f)?;
        }
        f.write_str(")")
    }
}

fn write_ports(f: &mut fmt::Formatter<'_>, ports: &[Symbol]) -> fmt::Result {
    // same shape as a history, but may be empty
    f.write_str("[")?;
    for (i, p) in ports.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        f.write_str(p.as_str())?;
    }
    f.write_str("]")
}

impl fmt::Display for FlowRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowRule::Propagate { in_port, out_ports } => {
                write!(f, "pr({in_port}, ")?;
                write_ports(f, out_ports)?;
                f.write_str(")")
            }
            FlowRule::Edit(e) => write!(
                f,
                "edit({}, {}, {}, {}, {}, {}, {})",
                e.in_port, e.out_port, e.name, e.from_type, e.from_value, e.to_type, e.to_value
            ),
            FlowRule::End { out_ports } => {
                f.write_str("end(")?;
                write_ports(f, out_ports)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for FlowProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in self.steps() {
            writeln!(f, "{step}.")?;
        }
        Ok(())
    }
}

impl fmt::Display for DataRuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.attributes {
            writeln!(f, "{a}.")?;
        }
        for o in &self.obligations {
            writeln!(f, "{o}.")?;
        }
        Ok(())
    }
}

/// Canonical text: one statement per line, attributes before obligations,
/// each group in sorted order.
pub fn serialize_data_rules(rules: &DataRuleSet) -> String {
    rules.to_string()
}

pub fn serialize_flow_program(program: &FlowProgram) -> String {
    program.to_string()
}

/// Canonical text of a single history, as it appears in rule statements.
pub fn serialize_history(history: &History) -> String {
    history.to_string()
}
