//! Lexer and recursive-descent parser for the pipeline surface form.
//!
//! ```text
//! pipeline   := invocation (">>" invocation)* | ε
//! invocation := Name "(" [arg ("," arg)*] ")"
//! arg        := Name "=" value            (keyword)
//!             | value                     (positional; code mode only)
//! value      := literal | "MASK" | dotted-name (code mode only)
//! ```
//!
//! Pipeline mode is the strict grammar the workbench accepts. Code mode is
//! used for mined corpus targets such as `train_test_split(X, y, test_size=MASK)`.

use std::fmt;

use super::ast::{Arg, ArgKey, ArgValue, Invocation, PipelineAst, QuoteStyle};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String, QuoteStyle),
    LParen,
    RParen,
    Comma,
    Eq,
    Shift,
    Dot,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Real(r) => format!("number {r}"),
            Tok::Str(s, _) => format!("string '{s}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Eq => "'='".into(),
            Tok::Shift => "'>>'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| SyntaxError {
        line,
        column,
        message,
    };

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let mut push = |tok: Tok| {
            out.push(Spanned {
                tok,
                line: start_line,
                column: start_col,
            })
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        match c {
            '(' => push(Tok::LParen),
            ')' => push(Tok::RParen),
            ',' => push(Tok::Comma),
            '=' => push(Tok::Eq),
            '>' if chars.get(i + 1) == Some(&'>') => {
                push(Tok::Shift);
                i += 2;
                col += 2;
                continue;
            }
            '.' if !chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) => push(Tok::Dot),
            '\'' | '"' => {
                let quote = c;
                let mut value = String::new();
                let mut j = i + 1;
                let mut ncol = col + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => {
                            return Err(err(start_line, start_col, "unterminated string".into()))
                        }
                        Some('\\') => {
                            let escaped = chars.get(j + 1).copied().ok_or_else(|| {
                                err(start_line, start_col, "unterminated string".into())
                            })?;
                            value.push(match escaped {
                                'n' => '\n',
                                't' => '\t',
                                'r' => '\r',
                                other => other,
                            });
                            j += 2;
                            ncol += 2;
                        }
                        Some(&ch) if ch == quote => {
                            j += 1;
                            ncol += 1;
                            break;
                        }
                        Some(&ch) => {
                            value.push(ch);
                            j += 1;
                            ncol += 1;
                        }
                    }
                }
                let style = if quote == '\'' {
                    QuoteStyle::Single
                } else {
                    QuoteStyle::Double
                };
                push(Tok::Str(value, style));
                i = j;
                col = ncol;
                continue;
            }
            c if c.is_ascii_digit()
                || c == '.'
                || (c == '-'
                    && chars
                        .get(i + 1)
                        .is_some_and(|d| d.is_ascii_digit() || *d == '.')) =>
            {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '.') {
                    // exponent sign
                    if matches!(chars[j], 'e' | 'E') && matches!(chars.get(j + 1), Some('+' | '-'))
                    {
                        j += 1;
                    }
                    j += 1;
                }
                let raw: String = chars[i..j].iter().collect();
                let cleaned = raw.replace('_', "");
                let tok = if cleaned.contains(['.', 'e', 'E']) {
                    cleaned
                        .parse::<f64>()
                        .ok()
                        .filter(|r| r.is_finite())
                        .map(Tok::Real)
                } else {
                    cleaned.parse::<i64>().ok().map(Tok::Int)
                };
                let tok = tok
                    .ok_or_else(|| err(start_line, start_col, format!("invalid number '{raw}'")))?;
                push(tok);
                col += j - i;
                i = j;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                push(Tok::Ident(chars[i..j].iter().collect()));
                col += j - i;
                i = j;
                continue;
            }
            other => {
                return Err(err(
                    start_line,
                    start_col,
                    format!("unexpected character '{other}'"),
                ))
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Pipeline,
    Code,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    mode: Mode,
}

impl Parser {
    fn new(text: &str, mode: Mode) -> Result<Self, SyntaxError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            mode,
        })
    }

    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &str) -> SyntaxError {
        let t = self.peek();
        SyntaxError {
            line: t.line,
            column: t.column,
            message: format!("expected {expected}, found {}", t.tok.describe()),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), SyntaxError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(expected))
        }
    }

    fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    fn invocation(&mut self) -> Result<Invocation, SyntaxError> {
        let operator = match &self.peek().tok {
            Tok::Ident(name) => name.clone(),
            _ => return Err(self.error_here("operator name")),
        };
        self.bump();
        self.expect(Tok::LParen, "'('")?;
        let mut args: Vec<Arg> = Vec::new();
        if self.peek().tok != Tok::RParen {
            loop {
                let start = self.peek().clone();
                let arg = self.arg(args.len())?;
                if let ArgKey::Named(_) = arg.key {
                    if args.iter().any(|a| a.key == arg.key) {
                        return Err(SyntaxError {
                            line: start.line,
                            column: start.column,
                            message: format!("duplicate argument '{}'", arg.key),
                        });
                    }
                } else if args.iter().any(|a| a.key.is_named()) {
                    return Err(SyntaxError {
                        line: start.line,
                        column: start.column,
                        message: "positional argument follows keyword argument".into(),
                    });
                }
                args.push(arg);
                if self.peek().tok == Tok::Comma {
                    self.bump();
                    // tolerate a trailing comma
                    if self.peek().tok == Tok::RParen {
                        break;
                    }
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "',' or ')'")?;
        Ok(Invocation { operator, args })
    }

    fn arg(&mut self, index: usize) -> Result<Arg, SyntaxError> {
        if let (Tok::Ident(name), Tok::Eq) = (&self.peek().tok, self.peek_at(1)) {
            let name = name.clone();
            self.bump();
            self.bump();
            let value = self.value()?;
            return Ok(Arg::named(name, value));
        }
        if self.mode == Mode::Pipeline {
            return Err(self.error_here("keyword argument 'name=value'"));
        }
        let value = self.value()?;
        Ok(Arg::positional(index, value))
    }

    fn value(&mut self) -> Result<ArgValue, SyntaxError> {
        let expected = match self.mode {
            Mode::Pipeline => "literal value or MASK",
            Mode::Code => "literal value, MASK or name",
        };
        let t = self.peek().clone();
        let v = match t.tok {
            Tok::Int(i) => ArgValue::Int(i),
            Tok::Real(r) => ArgValue::Real(r),
            Tok::Str(value, quote) => ArgValue::Str { value, quote },
            Tok::Ident(ref name) => match name.as_str() {
                "True" => ArgValue::Bool(true),
                "False" => ArgValue::Bool(false),
                "None" => ArgValue::None,
                "MASK" => ArgValue::Mask,
                _ if self.mode == Mode::Code => {
                    self.bump();
                    let mut path = name.clone();
                    while self.peek().tok == Tok::Dot {
                        self.bump();
                        match &self.peek().tok {
                            Tok::Ident(part) => {
                                path.push('.');
                                path.push_str(part);
                                self.bump();
                            }
                            _ => return Err(self.error_here("name after '.'")),
                        }
                    }
                    return Ok(ArgValue::Ref(path));
                }
                _ => return Err(self.error_here(expected)),
            },
            _ => return Err(self.error_here(expected)),
        };
        self.bump();
        Ok(v)
    }
}

/// Parses `>>`-joined pipeline text. Only keyword arguments with literal or
/// `MASK` values are accepted.
pub fn parse_pipeline(text: &str) -> Result<PipelineAst, SyntaxError> {
    let mut p = Parser::new(text, Mode::Pipeline)?;
    let mut steps = Vec::new();
    if p.at_eof() {
        return Ok(PipelineAst { steps });
    }
    steps.push(p.invocation()?);
    while p.peek().tok == Tok::Shift {
        p.bump();
        steps.push(p.invocation()?);
    }
    if !p.at_eof() {
        return Err(p.error_here("'>>' or end of input"));
    }
    Ok(PipelineAst { steps })
}

/// Parses exactly one invocation in code mode (positional arguments and name
/// references allowed).
pub fn parse_invocation(text: &str) -> Result<Invocation, SyntaxError> {
    let mut p = Parser::new(text, Mode::Code)?;
    let inv = p.invocation()?;
    if !p.at_eof() {
        return Err(p.error_here("end of input"));
    }
    Ok(inv)
}

/// Parses a whitespace/newline separated sequence of invocations in code mode,
/// the serialized form of multi-invocation corpus targets. Empty text yields
/// an empty list.
pub fn parse_invocations(text: &str) -> Result<Vec<Invocation>, SyntaxError> {
    let mut p = Parser::new(text, Mode::Code)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.invocation()?);
    }
    Ok(out)
}
