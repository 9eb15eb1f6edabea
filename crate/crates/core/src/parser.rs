//! Reader for the rule language, evidence files, query lists and ProbLog facts.
//!
//! ```text
//! program := {rule}
//! rule    := [weight] [head] [":-" body] "."
//! weight  := decimal | "@log(" posnum ["/" posnum] ")"
//! head    := atom {";" atom} | "{" atom "}"
//! body    := literal {"," literal}
//! literal := ["not" ["not"]] atom | term "!=" term
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::model::{Atom, Literal, Negation, Program, Rule, Term, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Num(String),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Dot,
    If,
    Neq,
    At,
    Slash,
    Prob,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: SourceSpan,
    spaced: bool,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { src: text.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn peek(&self, k: usize) -> Option<u8> {
        self.src.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, length: usize, message: impl Into<String>) -> ParseError {
        ParseError { span: SourceSpan { line: self.line, column: self.col, length }, message: message.into() }
    }

    fn tokens(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            let mut spaced = out.is_empty();
            loop {
                match self.peek(0) {
                    Some(c) if c.is_ascii_whitespace() => {
                        self.bump();
                        spaced = true;
                    }
                    Some(b'%') => {
                        while !matches!(self.peek(0), None | Some(b'\n')) {
                            self.bump();
                        }
                        spaced = true;
                    }
                    _ => break,
                }
            }
            let (line, column, start) = (self.line, self.col, self.pos);
            let Some(c) = self.peek(0) else {
                let span = SourceSpan { line, column, length: 0 };
                out.push(Token { tok: Tok::Eof, span, spaced: true });
                return Ok(out);
            };
            let tok = match c {
                b'(' => self.single(Tok::LParen),
                b')' => self.single(Tok::RParen),
                b'{' => self.single(Tok::LBrace),
                b'}' => self.single(Tok::RBrace),
                b',' => self.single(Tok::Comma),
                b';' => self.single(Tok::Semi),
                b'.' => self.single(Tok::Dot),
                b'@' => self.single(Tok::At),
                b'/' => self.single(Tok::Slash),
                b':' if self.peek(1) == Some(b'-') => self.double(Tok::If),
                b':' if self.peek(1) == Some(b':') => self.double(Tok::Prob),
                b'!' if self.peek(1) == Some(b'=') => self.double(Tok::Neq),
                b'\\' if self.peek(1) == Some(b'=') && self.peek(2) == Some(b'=') => {
                    self.bump();
                    self.double(Tok::Neq)
                }
                b'"' | b'\'' => self.string(c)?,
                b'-' | b'0'..=b'9' => self.number()?,
                c if c.is_ascii_alphabetic() || c == b'_' => self.word()?,
                _ => {
                    let ch = std::str::from_utf8(&self.src[self.pos..])
                        .ok()
                        .and_then(|s| s.chars().next())
                        .map_or_else(|| format!("byte 0x{c:02x}"), |ch| format!("'{ch}'"));
                    return Err(self.error(1, format!("unsupported character {ch}")));
                }
            };
            let span = SourceSpan { line, column, length: self.pos - start };
            out.push(Token { tok, span, spaced });
        }
    }

    fn single(&mut self, tok: Tok) -> Tok {
        self.bump();
        tok
    }

    fn double(&mut self, tok: Tok) -> Tok {
        self.bump();
        self.bump();
        tok
    }

    fn string(&mut self, quote: u8) -> Result<Tok, ParseError> {
        let err = self.error(1, "unterminated string");
        self.bump();
        let start = self.pos;
        loop {
            match self.peek(0) {
                None | Some(b'\n') => return Err(err),
                Some(b'"') if quote == b'\'' => {
                    return Err(self.error(1, "double quote inside single-quoted constant"));
                }
                Some(c) if c == quote => break,
                Some(_) => {
                    self.bump();
                }
            }
        }
        let body = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        self.bump();
        Ok(Tok::Str(body))
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        if self.peek(0) == Some(b'-') {
            if !matches!(self.peek(1), Some(b'0'..=b'9')) {
                return Err(self.error(1, "unsupported character '-'"));
            }
            self.bump();
        }
        while matches!(self.peek(0), Some(b'0'..=b'9')) {
            self.bump();
        }
        if self.peek(0) == Some(b'.') && matches!(self.peek(1), Some(b'0'..=b'9')) {
            self.bump();
            while matches!(self.peek(0), Some(b'0'..=b'9')) {
                self.bump();
            }
        }
        Ok(Tok::Num(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()))
    }

    fn word(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        while matches!(self.peek(0), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.bump();
        }
        let w = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        let first = w.as_bytes()[0];
        if first == b'_' {
            return Err(ParseError {
                span: SourceSpan { line: self.line, column: self.col - w.len(), length: w.len() },
                message: "anonymous and underscore-prefixed variables are not supported".into(),
            });
        }
        Ok(if first.is_ascii_uppercase() { Tok::Var(w) } else { Tok::Ident(w) })
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dialect {
    Rules,
    Evidence,
    Problog,
}

/// Source of a ProbLog program: probabilistic facts plus ordinary rules.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProblogSource {
    pub facts: Vec<(f64, Atom)>,
    pub rules: Program,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    dialect: Dialect,
}

impl Parser {
    fn new(text: &str, dialect: Dialect) -> Result<Self, ParseError> {
        Ok(Parser { toks: Lexer::new(text).tokens()?, pos: 0, dialect })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Token {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(tok: &Token, message: impl Into<String>) -> ParseError {
        ParseError { span: tok.span, message: message.into() }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, ParseError> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(Self::error_at(&t, format!("expected {what}, found {}", describe(&t.tok))))
        }
    }

    fn program(&mut self, facts: &mut Vec<(f64, Atom)>) -> Result<Program, ParseError> {
        let mut program = Program::default();
        while self.peek().tok != Tok::Eof {
            if self.dialect == Dialect::Problog
                && matches!(self.peek().tok, Tok::Num(_))
                && self.peek_at(1).tok == Tok::Prob
            {
                let p_tok = self.next();
                let p = number_value(&p_tok)?;
                self.next();
                let atom = self.atom()?;
                self.expect(Tok::Dot, "'.'")?;
                facts.push((p, atom));
                continue;
            }
            let rule = self.rule()?;
            program.push(rule);
        }
        Ok(program)
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let start = self.peek().clone();
        let weight = match &start.tok {
            Tok::Num(_) | Tok::At => {
                if self.dialect != Dialect::Rules {
                    return Err(Self::error_at(&start, "weighted rules are not allowed here"));
                }
                Weight::Soft(self.weight()?)
            }
            _ => Weight::Hard,
        };
        let mut choice = false;
        let mut head = Vec::new();
        match self.peek().tok {
            Tok::LBrace => {
                self.next();
                head.push(self.atom()?);
                self.expect(Tok::RBrace, "'}'")?;
                choice = true;
            }
            Tok::Ident(_) => {
                head.push(self.atom()?);
                while self.peek().tok == Tok::Semi {
                    self.next();
                    head.push(self.atom()?);
                }
            }
            _ => {}
        }
        let mut body = Vec::new();
        let mut neq = Vec::new();
        if self.peek().tok == Tok::If {
            self.next();
            loop {
                self.body_element(&mut body, &mut neq)?;
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        } else if head.is_empty() {
            let t = self.peek().clone();
            return Err(Self::error_at(&t, format!("expected a rule, found {}", describe(&t.tok))));
        }
        self.expect(Tok::Dot, "'.' at end of rule")?;
        Ok(Rule { index: 0, weight, head, body, neq, choice })
    }

    fn weight(&mut self) -> Result<f64, ParseError> {
        let t = self.next();
        let value = match &t.tok {
            Tok::Num(_) => number_value(&t)?,
            Tok::At => {
                let name = self.next();
                if name.tok != Tok::Ident("log".into()) || name.spaced {
                    return Err(Self::error_at(&name, "expected 'log' after '@'"));
                }
                self.expect(Tok::LParen, "'('")?;
                let a_tok = self.next();
                let mut value = number_value(&a_tok)?;
                if self.peek().tok == Tok::Slash {
                    self.next();
                    let b_tok = self.next();
                    let b = number_value(&b_tok)?;
                    if b <= 0.0 {
                        return Err(Self::error_at(&b_tok, "@log of a non-positive value"));
                    }
                    value /= b;
                }
                self.expect(Tok::RParen, "')'")?;
                if !(value > 0.0) || !value.is_finite() {
                    return Err(Self::error_at(&a_tok, "@log of a non-positive value"));
                }
                value.ln()
            }
            _ => unreachable!("weight() called on a non-weight token"),
        };
        let after = self.peek();
        if !after.spaced || after.tok == Tok::LParen {
            return Err(ParseError {
                span: SourceSpan { length: after.span.column.saturating_sub(t.span.column) + 1, ..t.span },
                message: "malformed weight".into(),
            });
        }
        Ok(value)
    }

    fn body_element(&mut self, body: &mut Vec<Literal>, neq: &mut Vec<(Term, Term)>) -> Result<(), ParseError> {
        let t = self.peek().clone();
        if t.tok == Tok::Ident("not".into()) {
            self.next();
            let negation = if self.peek().tok == Tok::Ident("not".into()) {
                self.next();
                Negation::NotNot
            } else {
                Negation::Not
            };
            let atom = self.atom()?;
            body.push(Literal { atom, negation });
            return Ok(());
        }
        let is_atom = matches!(t.tok, Tok::Ident(_))
            && (self.peek_at(1).tok == Tok::LParen || self.peek_at(1).tok != Tok::Neq);
        if is_atom {
            let atom = self.atom()?;
            if self.peek().tok == Tok::Neq {
                return Err(Self::error_at(&t, "'!=' compares terms, not atoms"));
            }
            body.push(Literal::pos(atom));
        } else {
            let l = self.term()?;
            self.expect(Tok::Neq, "'!='")?;
            let r = self.term()?;
            neq.push((l, r));
        }
        Ok(())
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let t = self.next();
        let Tok::Ident(name) = &t.tok else {
            return Err(Self::error_at(&t, format!("expected an atom, found {}", describe(&t.tok))));
        };
        if name == "not" {
            return Err(Self::error_at(&t, "'not' cannot be used as a predicate"));
        }
        let mut args = Vec::new();
        if self.peek().tok == Tok::LParen && !self.peek().spaced {
            self.next();
            loop {
                args.push(self.term()?);
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
            self.expect(Tok::RParen, "')'")?;
        }
        Ok(Atom::new(name.clone(), args))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => {
                if self.peek().tok == Tok::LParen && !self.peek().spaced {
                    return Err(Self::error_at(&t, "function symbols are not supported"));
                }
                Ok(Term::Sym(s.clone()))
            }
            Tok::Var(s) => Ok(Term::Var(s.clone())),
            Tok::Str(s) => Ok(Term::Str(s.clone())),
            Tok::Num(s) => s
                .parse::<i64>()
                .map(Term::Int)
                .map_err(|_| Self::error_at(&t, "only integer constants may appear as terms")),
            other => Err(Self::error_at(&t, format!("expected a term, found {}", describe(other)))),
        }
    }
}

fn number_value(t: &Token) -> Result<f64, ParseError> {
    match &t.tok {
        Tok::Num(s) => s
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Parser::error_at(t, "malformed weight")),
        other => Err(Parser::error_at(t, format!("expected a number, found {}", describe(other)))),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Var(s) | Tok::Num(s) => format!("'{s}'"),
        Tok::Str(s) => format!("\"{s}\""),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::LBrace => "'{'".into(),
        Tok::RBrace => "'}'".into(),
        Tok::Comma => "','".into(),
        Tok::Semi => "';'".into(),
        Tok::Dot => "'.'".into(),
        Tok::If => "':-'".into(),
        Tok::Neq => "'!='".into(),
        Tok::At => "'@'".into(),
        Tok::Slash => "'/'".into(),
        Tok::Prob => "'::'".into(),
        Tok::Eof => "end of input".into(),
    }
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    Parser::new(text, Dialect::Rules)?.program(&mut Vec::new())
}

/// Parses an evidence file: the same grammar without weights. Every rule is hard.
pub fn parse_evidence(text: &str) -> Result<Program, ParseError> {
    Parser::new(text, Dialect::Evidence)?.program(&mut Vec::new())
}

/// Parses `p::atom.` facts alongside ordinary hard rules.
pub fn parse_problog(text: &str) -> Result<ProblogSource, ParseError> {
    let mut facts = Vec::new();
    let rules = Parser::new(text, Dialect::Problog)?.program(&mut facts)?;
    Ok(ProblogSource { facts, rules })
}

/// Splits a comma-separated list of predicate names.
pub fn parse_query_spec(text: &str) -> Result<BTreeSet<String>, ParseError> {
    let mut out = BTreeSet::new();
    if text.trim().is_empty() {
        return Ok(out);
    }
    let mut column = 1;
    for part in text.split(',') {
        let name = part.trim();
        let valid = name.bytes().next().is_some_and(|c| c.is_ascii_lowercase())
            && name.bytes().all(|c| c.is_ascii_alphanumeric() || c == b'_');
        if !valid {
            let message = if name.is_empty() {
                "empty predicate name in query list".to_string()
            } else {
                format!("invalid predicate name '{name}'")
            };
            return Err(ParseError { span: SourceSpan { line: 1, column, length: part.len().max(1) }, message });
        }
        out.insert(name.to_string());
        column += part.len() + 1;
    }
    Ok(out)
}
