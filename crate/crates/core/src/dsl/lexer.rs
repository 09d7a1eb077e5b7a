use std::fmt;

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    Ident(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Star,
    Eq,
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "identifier `{s}`"),
            Token::Int(i) => write!(f, "integer `{i}`"),
            Token::Str(s) => write!(f, "string {s:?}"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::LBracket => f.write_str("`[`"),
            Token::RBracket => f.write_str("`]`"),
            Token::Comma => f.write_str("`,`"),
            Token::Dot => f.write_str("`.`"),
            Token::Star => f.write_str("`*`"),
            Token::Eq => f.write_str("`=`"),
            Token::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub token: Token,
    pub pos: Pos,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut lexer = Lexer {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        let t = lexer.next_token()?;
        let done = t.token == Token::Eof;
        out.push(t);
        if done {
            return Ok(out);
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Lexer<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn error(&self, pos: Pos, found: String, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            line: pos.line,
            column: pos.column,
            found,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn next_token(&mut self) -> Result<Spanned, SyntaxError> {
        // whitespace and `%` line comments
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let pos = self.pos();
        let Some(&c) = self.chars.peek() else {
            return Ok(Spanned {
                token: Token::Eof,
                pos,
            });
        };
        let single = match c {
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            '[' => Some(Token::LBracket),
            ']' => Some(Token::RBracket),
            ',' => Some(Token::Comma),
            '.' => Some(Token::Dot),
            '*' => Some(Token::Star),
            '=' => Some(Token::Eq),
            _ => None,
        };
        if let Some(token) = single {
            self.bump();
            return Ok(Spanned { token, pos });
        }
        let token = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = self.chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            Token::Ident(s)
        } else if c.is_ascii_digit() || c == '-' {
            let mut s = String::new();
            if c == '-' {
                s.push(c);
                self.bump();
            }
            while let Some(&c) = self.chars.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            match s.parse::<i64>() {
                Ok(v) => Token::Int(v),
                Err(_) => return Err(self.error(pos, format!("`{s}`"), &["integer"])),
            }
        } else if c == '"' {
            self.bump();
            let mut s = String::new();
            loop {
                match self.bump() {
                    None => {
                        return Err(self.error(self.pos(), "end of input".into(), &["`\"`"]))
                    }
                    Some('"') => break,
                    Some('\\') => {
                        let esc_pos = self.pos();
                        match self.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            other => {
                                let found = other
                                    .map(|c| format!("escape `\\{c}`"))
                                    .unwrap_or_else(|| "end of input".into());
                                return Err(self.error(
                                    esc_pos,
                                    found,
                                    &["`\\\"`", "`\\\\`", "`\\n`", "`\\t`"],
                                ));
                            }
                        }
                    }
                    Some(c) => s.push(c),
                }
            }
            Token::Str(s)
        } else {
            return Err(self.error(pos, format!("character `{c}`"), &["token"]));
        };
        Ok(Spanned { token, pos })
    }
}
