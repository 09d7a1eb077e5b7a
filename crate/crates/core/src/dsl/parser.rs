use crate::model::{
    ActivationCondition, Attribute, EditRule, FlowRule, History, Obligation, Pattern, Symbol,
    Value,
};

use super::lexer::{tokenize, Pos, Spanned, Token};
use super::{QueryPattern, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Statement {
    Attribute(Attribute),
    Obligation(Obligation),
    Flow(FlowRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kinds {
    DataRules,
    FlowRules,
    Any,
}

impl Kinds {
    fn keywords(self) -> &'static [&'static str] {
        match self {
            Kinds::DataRules => &["attribute", "obligation"],
            Kinds::FlowRules => &["pr", "edit", "end"],
            Kinds::Any => &["attribute", "obligation", "pr", "edit", "end"],
        }
    }
}

pub(crate) struct Parser {
    tokens: Vec<Spanned>,
    index: usize,
}

impl Parser {
    pub fn new(text: &str) -> Result<Self, SyntaxError> {
        Ok(Parser {
            tokens: tokenize(text)?,
            index: 0,
        })
    }

    fn peek(&self) -> &Spanned {
        &self.tokens[self.index]
    }

    fn advance(&mut self) -> Spanned {
        let t = self.tokens[self.index].clone();
        if t.token != Token::Eof {
            self.index += 1;
        }
        t
    }

    fn error_at(&self, t: &Spanned, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            line: t.pos.line,
            column: t.pos.column,
            found: t.token.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, token: Token) -> Result<(), SyntaxError> {
        let t = self.peek();
        if t.token == token {
            self.advance();
            Ok(())
        } else {
            Err(self.error_at(t, &[&token.to_string()]))
        }
    }

    fn eat(&mut self, token: &Token) -> bool {
        if &self.peek().token == token {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn at_eof(&self) -> bool {
        self.peek().token == Token::Eof
    }

    fn symbol(&mut self) -> Result<Symbol, SyntaxError> {
        let t = self.peek().clone();
        match t.token {
            Token::Ident(s) => {
                self.advance();
                Ok(Symbol::new(s).expect("lexer only yields valid identifiers"))
            }
            _ => Err(self.error_at(&t, &["identifier"])),
        }
    }

    fn symbol_or_star(&mut self) -> Result<Pattern<Symbol>, SyntaxError> {
        if self.eat(&Token::Star) {
            Ok(Pattern::Any)
        } else {
            match self.symbol() {
                Ok(s) => Ok(Pattern::Exact(s)),
                Err(mut e) => {
                    e.expected.push("`*`".into());
                    Err(e)
                }
            }
        }
    }

    fn value(&mut self) -> Result<Value, SyntaxError> {
        let t = self.peek().clone();
        let v = match t.token {
            Token::Ident(s) | Token::Str(s) => Value::Str(s),
            Token::Int(i) => Value::Int(i),
            _ => return Err(self.error_at(&t, &["identifier", "integer", "string"])),
        };
        self.advance();
        Ok(v)
    }

    fn value_or_star(&mut self) -> Result<Pattern<Value>, SyntaxError> {
        if self.eat(&Token::Star) {
            Ok(Pattern::Any)
        } else {
            self.value().map(Pattern::Exact).map_err(|mut e| {
                e.expected.push("`*`".into());
                e
            })
        }
    }

    /// `[sym, ...]`, possibly empty.
    fn port_list(&mut self) -> Result<Vec<Symbol>, SyntaxError> {
        self.expect(Token::LBracket)?;
        let mut out = Vec::new();
        if self.eat(&Token::RBracket) {
            return Ok(out);
        }
        loop {
            out.push(self.symbol().map_err(|mut e| {
                if out.is_empty() {
                    e.expected.push("`]`".into());
                }
                e
            })?);
            let t = self.peek();
            match t.token {
                Token::Comma => {
                    self.advance();
                }
                Token::RBracket => {
                    self.advance();
                    return Ok(out);
                }
                _ => return Err(self.error_at(t, &["`,`", "`]`"])),
            }
        }
    }

    /// `[sym, ...]`, non-empty.
    fn history(&mut self) -> Result<History, SyntaxError> {
        let tokens = self.port_list()?;
        if tokens.is_empty() {
            // point at the closing bracket
            let close = &self.tokens[self.index - 1];
            return Err(SyntaxError {
                line: close.pos.line,
                column: close.pos.column,
                found: Token::RBracket.to_string(),
                expected: vec!["identifier".into()],
            });
        }
        Ok(History::new(tokens).expect("non-empty"))
    }

    fn bindings(&mut self) -> Result<Vec<History>, SyntaxError> {
        self.expect(Token::LBracket)?;
        let mut out = Vec::new();
        if self.eat(&Token::RBracket) {
            return Ok(out);
        }
        loop {
            out.push(self.history()?);
            let t = self.peek();
            match t.token {
                Token::Comma => {
                    self.advance();
                }
                Token::RBracket => {
                    self.advance();
                    return Ok(out);
                }
                _ => return Err(self.error_at(t, &["`,`", "`]`"])),
            }
        }
    }

    fn condition(&mut self) -> Result<ActivationCondition, SyntaxError> {
        let t = self.peek().clone();
        match &t.token {
            Token::Ident(s) if s == "action" => {
                self.advance();
            }
            _ => return Err(self.error_at(&t, &["`action`"])),
        }
        self.expect(Token::Eq)?;
        Ok(ActivationCondition {
            target: self.symbol_or_star()?,
        })
    }

    /// Optional trailing situation argument, accepted and discarded.
    fn situation_then_close(&mut self) -> Result<(), SyntaxError> {
        if self.eat(&Token::Comma) {
            self.symbol()?;
        }
        let t = self.peek();
        if t.token == Token::RParen {
            self.advance();
            Ok(())
        } else {
            Err(self.error_at(t, &["`,`", "`)`"]))
        }
    }

    fn attribute(&mut self) -> Result<Attribute, SyntaxError> {
        self.expect(Token::LParen)?;
        let name = self.symbol()?;
        self.expect(Token::Comma)?;
        let ty = self.symbol()?;
        self.expect(Token::Comma)?;
        let value = self.value()?;
        self.expect(Token::Comma)?;
        let history = self.history()?;
        self.situation_then_close()?;
        Ok(Attribute {
            name,
            ty,
            value,
            history,
        })
    }

    fn obligation(&mut self) -> Result<Obligation, SyntaxError> {
        self.expect(Token::LParen)?;
        let obligated_action = self.symbol()?;
        self.expect(Token::Comma)?;
        let validity_bindings = self.bindings()?;
        self.expect(Token::Comma)?;
        let activation_condition = self.condition()?;
        self.expect(Token::Comma)?;
        // a single token, or a full history once the obligation has been
        // propagated
        let history = if self.peek().token == Token::LBracket {
            self.history()?
        } else {
            History::single(self.symbol().map_err(|mut e| {
                e.expected.push("`[`".into());
                e
            })?)
        };
        self.situation_then_close()?;
        Ok(Obligation {
            obligated_action,
            history,
            validity_bindings,
            activation_condition,
        })
    }

    fn flow_rule(&mut self, keyword: &str) -> Result<FlowRule, SyntaxError> {
        self.expect(Token::LParen)?;
        let rule = match keyword {
            "pr" => {
                let in_port = self.symbol()?;
                self.expect(Token::Comma)?;
                let out_ports = self.port_list()?;
                FlowRule::Propagate { in_port, out_ports }
            }
            "edit" => {
                let in_port = self.symbol()?;
                self.expect(Token::Comma)?;
                let out_port = self.symbol()?;
                self.expect(Token::Comma)?;
                let name = self.symbol_or_star()?;
                self.expect(Token::Comma)?;
                let from_type = self.symbol()?;
                self.expect(Token::Comma)?;
                let from_value = self.value()?;
                self.expect(Token::Comma)?;
                let to_type = self.symbol()?;
                self.expect(Token::Comma)?;
                let to_value = self.value()?;
                FlowRule::Edit(EditRule {
                    in_port,
                    out_port,
                    name,
                    from_type,
                    from_value,
                    to_type,
                    to_value,
                })
            }
            "end" => FlowRule::End {
                out_ports: self.port_list()?,
            },
            _ => unreachable!("caller checks keyword"),
        };
        self.expect(Token::RParen)?;
        Ok(rule)
    }

    /// One statement including its terminating `.`.
    pub fn statement(&mut self, kinds: Kinds) -> Result<(Pos, Statement), SyntaxError> {
        let t = self.peek().clone();
        let keyword = match &t.token {
            Token::Ident(s) if kinds.keywords().contains(&s.as_str()) => s.clone(),
            _ => return Err(self.error_at(&t, kinds.keywords())),
        };
        self.advance();
        let stmt = match keyword.as_str() {
            "attribute" => Statement::Attribute(self.attribute()?),
            "obligation" => Statement::Obligation(self.obligation()?),
            kw => Statement::Flow(self.flow_rule(kw)?),
        };
        self.expect(Token::Dot)?;
        Ok((t.pos, stmt))
    }

    pub fn statements(&mut self, kinds: Kinds) -> Result<Vec<(Pos, Statement)>, SyntaxError> {
        let mut out = Vec::new();
        while !self.at_eof() {
            out.push(self.statement(kinds)?);
        }
        Ok(out)
    }

    /// `attribute(N, T, V, H [, S]) [.]` where each position may be `*`.
    pub fn query_pattern(&mut self) -> Result<QueryPattern, SyntaxError> {
        let t = self.peek().clone();
        match &t.token {
            Token::Ident(s) if s == "attribute" => {
                self.advance();
            }
            _ => return Err(self.error_at(&t, &["attribute"])),
        }
        self.expect(Token::LParen)?;
        let name = self.symbol_or_star()?;
        self.expect(Token::Comma)?;
        let ty = self.symbol_or_star()?;
        self.expect(Token::Comma)?;
        let value = self.value_or_star()?;
        self.expect(Token::Comma)?;
        let history_suffix = if self.eat(&Token::Star) {
            None
        } else {
            Some(self.history().map_err(|mut e| {
                e.expected.push("`*`".into());
                e
            })?)
        };
        self.situation_then_close()?;
        self.eat(&Token::Dot);
        let t = self.peek();
        if t.token != Token::Eof {
            return Err(self.error_at(t, &["end of input"]));
        }
        Ok(QueryPattern {
            name,
            ty,
            value,
            history_suffix,
        })
    }
}
