//! Lightweight tokenizer for the call-expression subset of Python found in
//! notebook code cells, and extraction of operator invocations from it.

use std::collections::BTreeSet;

use crate::dsl::{Arg, ArgValue, Invocation, QuoteStyle};
use crate::registry::Registry;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Number(String),
    Str {
        value: String,
        prefix: String,
        quote: char,
    },
    Op(String),
}

#[derive(Debug, Clone, PartialEq)]
struct Statement {
    line: usize,
    toks: Vec<Tok>,
}

#[derive(Debug)]
struct LexError {
    line: usize,
    message: String,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

const STRING_PREFIXES: &[&str] = &["r", "u", "b", "f", "br", "rb", "fr", "rf"];

impl Lexer {
    fn new(src: &str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> LexError {
        LexError {
            line: self.line,
            message: message.into(),
        }
    }

    /// Skips to just past the next newline.
    fn skip_line(&mut self) {
        while let Some(c) = self.bump() {
            if c == '\n' {
                break;
            }
        }
    }

    fn string(&mut self, prefix: String) -> Result<Tok, LexError> {
        let quote = self.bump().expect("caller saw a quote");
        let triple = self.peek(0) == Some(quote) && self.peek(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        let raw = prefix.to_ascii_lowercase().contains('r');
        let mut value = String::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(self.error("unterminated string literal"));
            };
            if c == quote {
                if !triple {
                    break;
                }
                if self.peek(0) == Some(quote) && self.peek(1) == Some(quote) {
                    self.bump();
                    self.bump();
                    break;
                }
                value.push(c);
            } else if c == '\n' && !triple {
                return Err(self.error("unterminated string literal"));
            } else if c == '\\' {
                let Some(e) = self.bump() else {
                    return Err(self.error("unterminated string literal"));
                };
                if raw {
                    value.push('\\');
                    value.push(e);
                    continue;
                }
                match e {
                    '\n' => {}
                    'n' => value.push('\n'),
                    't' => value.push('\t'),
                    'r' => value.push('\r'),
                    '0' => value.push('\0'),
                    '\\' | '\'' | '"' => value.push(e),
                    other => {
                        value.push('\\');
                        value.push(other);
                    }
                }
            } else {
                value.push(c);
            }
        }
        Ok(Tok::Str {
            value,
            prefix,
            quote,
        })
    }

    fn number(&mut self) -> Tok {
        let mut text = String::new();
        while let Some(c) = self.peek(0) {
            let exponent_sign = (c == '+' || c == '-')
                && text.ends_with(['e', 'E'])
                && !text.starts_with("0x")
                && !text.starts_with("0X");
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' || exponent_sign {
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        Tok::Number(text)
    }

    fn op(&mut self, c: char) -> Result<Tok, LexError> {
        const TWO: &[&str] = &[
            "**", "//", "==", "!=", "<=", ">=", "->", ":=", "+=", "-=", "*=", "/=", "%=", "<<",
            ">>", "&=", "|=", "^=", "@=",
        ];
        if let Some(n) = self.peek(1) {
            let pair: String = [c, n].iter().collect();
            if TWO.contains(&pair.as_str()) {
                self.bump();
                self.bump();
                return Ok(Tok::Op(pair));
            }
        }
        if "+-*/%@&|^~<>!=:;.,()[]{}".contains(c) {
            self.bump();
            Ok(Tok::Op(c.to_string()))
        } else {
            Err(self.error(format!("unexpected character '{c}'")))
        }
    }

    /// Splits the source into logical statements. Lines that fail to
    /// tokenize are dropped and reported.
    fn statements(mut self) -> (Vec<Statement>, Vec<LexError>) {
        let mut out = Vec::new();
        let mut errors = Vec::new();
        let mut toks = Vec::new();
        let mut start = 1;
        let mut depth: usize = 0;
        let flush = |toks: &mut Vec<Tok>, out: &mut Vec<Statement>, start: usize| {
            if !toks.is_empty() {
                out.push(Statement {
                    line: start,
                    toks: std::mem::take(toks),
                });
            }
        };
        while let Some(c) = self.peek(0) {
            if toks.is_empty() && depth == 0 {
                start = self.line;
            }
            let step: Result<Option<Tok>, LexError> = match c {
                '\n' => {
                    self.bump();
                    if depth == 0 {
                        flush(&mut toks, &mut out, start);
                    }
                    Ok(None)
                }
                ' ' | '\t' | '\r' | '\x0c' => {
                    self.bump();
                    Ok(None)
                }
                '#' => {
                    while self.peek(0).is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                    Ok(None)
                }
                '\\' if self.peek(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                    Ok(None)
                }
                '\'' | '"' => self.string(String::new()).map(Some),
                c if c.is_ascii_digit()
                    || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) =>
                {
                    Ok(Some(self.number()))
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut name = String::new();
                    while let Some(c) = self.peek(0).filter(|c| c.is_alphanumeric() || *c == '_') {
                        name.push(c);
                        self.bump();
                    }
                    if matches!(self.peek(0), Some('\'' | '"'))
                        && STRING_PREFIXES.contains(&name.to_ascii_lowercase().as_str())
                    {
                        self.string(name).map(Some)
                    } else {
                        Ok(Some(Tok::Name(name)))
                    }
                }
                c => self.op(c).map(Some),
            };
            match step {
                Ok(Some(tok)) => {
                    if let Tok::Op(o) = &tok {
                        match o.as_str() {
                            "(" | "[" | "{" => depth += 1,
                            ")" | "]" | "}" => {
                                if depth == 0 {
                                    errors.push(self.error(format!("unbalanced '{o}'")));
                                    toks.clear();
                                    self.skip_line();
                                    continue;
                                }
                                depth -= 1;
                            }
                            _ => {}
                        }
                    }
                    toks.push(tok);
                }
                Ok(None) => {}
                Err(e) => {
                    errors.push(LexError {
                        line: start,
                        message: e.message,
                    });
                    toks.clear();
                    depth = 0;
                    if self.pos == 0 || self.chars[self.pos - 1] != '\n' {
                        self.skip_line();
                    }
                }
            }
        }
        if depth > 0 {
            errors.push(LexError {
                line: start,
                message: "unclosed bracket at end of cell".into(),
            });
        } else {
            flush(&mut toks, &mut out, start);
        }
        (out, errors)
    }
}

fn is_op(t: &Tok, s: &str) -> bool {
    matches!(t, Tok::Op(o) if o == s)
}

fn matching_close(toks: &[Tok], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, t) in toks.iter().enumerate().skip(open) {
        match t {
            Tok::Op(o) if o == "(" || o == "[" || o == "{" => depth += 1,
            Tok::Op(o) if o == ")" || o == "]" || o == "}" => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn split_args(toks: &[Tok]) -> Vec<&[Tok]> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut begin = 0;
    for (i, t) in toks.iter().enumerate() {
        match t {
            Tok::Op(o) if o == "(" || o == "[" || o == "{" => depth += 1,
            Tok::Op(o) if o == ")" || o == "]" || o == "}" => depth -= 1,
            Tok::Op(o) if o == "," && depth == 0 => {
                parts.push(&toks[begin..i]);
                begin = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&toks[begin..]);
    if parts.last().is_some_and(|p| p.is_empty()) {
        parts.pop();
    }
    parts
}

fn number_value(text: &str, negative: bool) -> Option<ArgValue> {
    let clean: String = text.chars().filter(|&c| c != '_').collect();
    let lower = clean.to_ascii_lowercase();
    let int = if let Some(hex) = lower.strip_prefix("0x") {
        i64::from_str_radix(hex, 16).ok()
    } else if let Some(oct) = lower.strip_prefix("0o") {
        i64::from_str_radix(oct, 8).ok()
    } else if let Some(bin) = lower.strip_prefix("0b") {
        i64::from_str_radix(bin, 2).ok()
    } else if clean.chars().all(|c| c.is_ascii_digit()) {
        clean.parse().ok()
    } else {
        None
    };
    if let Some(i) = int {
        return Some(ArgValue::Int(if negative { -i } else { i }));
    }
    if lower.ends_with('j') || lower.starts_with("0x") {
        return None;
    }
    let r: f64 = clean.parse().ok()?;
    r.is_finite()
        .then_some(ArgValue::Real(if negative { -r } else { r }))
}

/// Literal value of an argument expression; anything that is not a plain
/// literal or (dotted) name becomes MASK.
fn arg_value(toks: &[Tok]) -> ArgValue {
    match toks {
        [Tok::Number(n)] => number_value(n, false).unwrap_or(ArgValue::Mask),
        [Tok::Op(sign), Tok::Number(n)] if sign == "-" || sign == "+" => {
            number_value(n, sign == "-").unwrap_or(ArgValue::Mask)
        }
        [Tok::Name(n)] if n == "True" => ArgValue::Bool(true),
        [Tok::Name(n)] if n == "False" => ArgValue::Bool(false),
        [Tok::Name(n)] if n == "None" => ArgValue::None,
        [Tok::Str { .. }, ..] if toks.iter().all(|t| matches!(t, Tok::Str { .. })) => {
            let mut value = String::new();
            let mut quote = QuoteStyle::Single;
            for (i, t) in toks.iter().enumerate() {
                let Tok::Str {
                    value: v,
                    prefix,
                    quote: q,
                } = t
                else {
                    unreachable!()
                };
                let p = prefix.to_ascii_lowercase();
                if p.contains('f') || p.contains('b') {
                    return ArgValue::Mask;
                }
                if i == 0 && *q == '"' {
                    quote = QuoteStyle::Double;
                }
                value.push_str(v);
            }
            ArgValue::Str { value, quote }
        }
        [Tok::Name(first), rest @ ..] if is_dotted_tail(rest) => {
            let mut name = first.clone();
            for pair in rest.chunks(2) {
                if let [_, Tok::Name(part)] = pair {
                    name.push('.');
                    name.push_str(part);
                }
            }
            if is_keyword(first) {
                ArgValue::Mask
            } else {
                ArgValue::Ref(name)
            }
        }
        _ => ArgValue::Mask,
    }
}

fn is_dotted_tail(rest: &[Tok]) -> bool {
    rest.len().is_multiple_of(2)
        && rest
            .chunks(2)
            .all(|p| is_op(&p[0], ".") && matches!(&p[1], Tok::Name(_)))
}

fn is_keyword(name: &str) -> bool {
    matches!(
        name,
        "lambda" | "not" | "and" | "or" | "if" | "else" | "for" | "in" | "is" | "await" | "yield"
    )
}

fn call_at(toks: &[Tok], at: usize, close: usize) -> Result<Invocation, String> {
    let Tok::Name(op) = &toks[at] else {
        unreachable!()
    };
    let mut inv = Invocation::new(op.clone());
    let mut positional = 0;
    let mut saw_keyword = false;
    for part in split_args(&toks[at + 2..close]) {
        match part {
            [] => return Err(format!("empty argument in call to {op}")),
            [Tok::Op(o), ..] if o == "**" => saw_keyword = true,
            [Tok::Name(name), Tok::Op(eq), value @ ..] if eq == "=" => {
                if value.is_empty() {
                    return Err(format!("missing value for '{name}' in call to {op}"));
                }
                if inv.get(name).is_some() {
                    return Err(format!("repeated keyword '{name}' in call to {op}"));
                }
                saw_keyword = true;
                inv.args.push(Arg::named(name.clone(), arg_value(value)));
            }
            value => {
                if saw_keyword {
                    return Err(format!(
                        "positional argument follows keyword in call to {op}"
                    ));
                }
                let v = match value {
                    [Tok::Op(o), ..] if o == "*" => ArgValue::Mask,
                    _ => arg_value(value),
                };
                inv.args.push(Arg::positional(positional, v));
                positional += 1;
            }
        }
    }
    Ok(inv)
}

/// Result of scanning one code cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    pub invocations: Vec<Invocation>,
    pub warnings: Vec<String>,
}

/// Finds calls to known operator or utility names in `code`, in source
/// order (outer calls before the calls nested in their arguments).
/// Attribute calls such as `clf.fit(...)` are ignored.
pub fn extract_with_names(code: &str, known: &BTreeSet<&str>) -> Extraction {
    let (statements, errors) = Lexer::new(code).statements();
    let mut out = Extraction::default();
    for e in errors {
        out.warnings.push(format!(
            "line {}: skipped unparseable statement ({})",
            e.line, e.message
        ));
    }
    for st in &statements {
        let toks = &st.toks;
        for i in 0..toks.len() {
            let Tok::Name(name) = &toks[i] else { continue };
            let is_call = toks.get(i + 1).is_some_and(|t| is_op(t, "("));
            let after_dot = i > 0 && is_op(&toks[i - 1], ".");
            let after_def =
                i > 0 && matches!(&toks[i - 1], Tok::Name(k) if k == "def" || k == "class");
            if !is_call || after_dot || after_def || !known.contains(name.as_str()) {
                continue;
            }
            let close = matching_close(toks, i + 1).expect("statements have balanced brackets");
            match call_at(toks, i, close) {
                Ok(inv) => out.invocations.push(inv),
                Err(e) => out
                    .warnings
                    .push(format!("line {}: skipped call ({e})", st.line)),
            }
        }
    }
    out
}

/// [`extract_with_names`] over every name in the registry.
pub fn extract_invocations(code: &str, registry: &Registry) -> Extraction {
    let known: BTreeSet<&str> = registry.iter().map(|s| s.name.as_str()).collect();
    extract_with_names(code, &known)
}
