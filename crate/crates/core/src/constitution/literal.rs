//! The `MoralRule(...)` literal form used when exchanging constitutions with a
//! language model. Rendering produces a Python-style tuple of rule
//! constructors; parsing accepts the same shape (keyword arguments, adjacent
//! string concatenation, optional parentheses, `#` comments).

use super::{Constitution, MoralRule, Provenance};
use crate::policy::Directive;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct LiteralError {
    pub line: usize,
    pub message: String,
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Splits text into pieces of roughly `width` characters at spaces, keeping
/// the separating space at the end of each piece so concatenation is exact.
fn wrap(text: &str, width: usize) -> Vec<String> {
    let mut pieces = Vec::new();
    let mut current = String::new();
    for word in text.split_inclusive(' ') {
        if !current.is_empty() && current.len() + word.len() > width {
            pieces.push(std::mem::take(&mut current));
        }
        current.push_str(word);
    }
    if !current.is_empty() || pieces.is_empty() {
        pieces.push(current);
    }
    pieces
}

pub fn render_literal(c: &Constitution) -> String {
    let mut out = String::from("CONSTITUTION = (\n");
    for rule in c.ordered_rules() {
        out.push_str("    MoralRule(\n");
        out.push_str(&format!("        name={},\n", quote(&rule.name)));
        out.push_str("        guidance=(\n");
        for piece in wrap(&rule.guidance, 72) {
            out.push_str(&format!("            {}\n", quote(&piece)));
        }
        out.push_str("        ),\n");
        out.push_str(&format!("        summary={},\n", quote(&rule.summary)));
        out.push_str(&format!("        priority={},\n", rule.priority));
        if let Some(ds) = &rule.directives {
            let list: Vec<String> = ds.iter().map(|d| quote(&d.to_string())).collect();
            out.push_str(&format!("        directives=[{}],\n", list.join(", ")));
        }
        out.push_str("    ),\n");
    }
    out.push_str(")\n");
    out
}

enum Value {
    Str(String),
    Int(i64),
    List(Vec<String>),
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> LiteralError {
        let line = self.src[..self.pos].bytes().filter(|&b| b == b'\n').count() + 1;
        LiteralError { line, message: message.into() }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let ch = self.peek()?;
        self.pos += ch.len_utf8();
        Some(ch)
    }

    fn skip_trivia(&mut self) {
        while let Some(ch) = self.peek() {
            if ch.is_whitespace() {
                self.bump();
            } else if ch == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, ch: char) -> bool {
        self.skip_trivia();
        if self.peek() == Some(ch) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, ch: char) -> Result<(), LiteralError> {
        if self.eat(ch) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{ch}`")))
        }
    }

    fn ident(&mut self) -> Result<String, LiteralError> {
        self.skip_trivia();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        if start == self.pos {
            return Err(self.err("expected a keyword argument name"));
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn string_literal(&mut self) -> Result<String, LiteralError> {
        self.skip_trivia();
        let quote = match self.bump() {
            Some(q @ ('"' | '\'')) => q,
            _ => return Err(self.err("expected a string literal")),
        };
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated string literal")),
                Some(c) if c == quote => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some(c) => out.push(c),
                    None => return Err(self.err("unterminated escape")),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn starts_string(&mut self) -> bool {
        self.skip_trivia();
        matches!(self.peek(), Some('"' | '\''))
    }

    /// One or more adjacent string literals, concatenated.
    fn concatenated(&mut self) -> Result<String, LiteralError> {
        let mut out = self.string_literal()?;
        while self.starts_string() {
            out.push_str(&self.string_literal()?);
        }
        Ok(out)
    }

    fn value(&mut self) -> Result<Value, LiteralError> {
        self.skip_trivia();
        match self.peek() {
            Some('"' | '\'') => Ok(Value::Str(self.concatenated()?)),
            Some('(') => {
                self.bump();
                let s = self.concatenated()?;
                self.expect(')')?;
                Ok(Value::Str(s))
            }
            Some('[') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    if self.eat(']') {
                        break;
                    }
                    items.push(self.concatenated()?);
                    if !self.eat(',') {
                        self.expect(']')?;
                        break;
                    }
                }
                Ok(Value::List(items))
            }
            Some(c) if c.is_ascii_digit() || c == '-' => {
                let start = self.pos;
                self.bump();
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
                self.src[start..self.pos].parse().map(Value::Int).map_err(|_| self.err("bad integer"))
            }
            _ => Err(self.err("expected a string, integer or list")),
        }
    }

    fn rule(&mut self) -> Result<MoralRule, LiteralError> {
        let (mut name, mut guidance, mut summary, mut priority, mut directives) = (None, None, None, None, None);
        loop {
            if self.eat(')') {
                break;
            }
            let key = self.ident()?;
            self.expect('=')?;
            let value = self.value()?;
            match (key.as_str(), value) {
                ("name", Value::Str(s)) => name = Some(s),
                ("guidance", Value::Str(s)) => guidance = Some(s),
                ("summary", Value::Str(s)) => summary = Some(s),
                ("priority", Value::Int(n)) if n >= 0 => priority = Some(n as u32),
                ("directives", Value::List(items)) => {
                    let parsed = items
                        .iter()
                        .map(|s| s.parse::<Directive>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| self.err(e.to_string()))?;
                    directives = Some(parsed);
                }
                (other, _) => return Err(self.err(format!("unexpected or mistyped argument `{other}`"))),
            }
            if !self.eat(',') {
                self.expect(')')?;
                break;
            }
        }
        let name = name.ok_or_else(|| self.err("MoralRule without name"))?;
        let guidance = guidance.ok_or_else(|| self.err(format!("rule {name:?} has no guidance")))?;
        let priority = priority.ok_or_else(|| self.err(format!("rule {name:?} has no priority")))?;
        Ok(MoralRule { name, guidance, summary: summary.unwrap_or_default(), priority, directives })
    }
}

/// Extracts every `MoralRule(...)` in `text` (surrounding prose and code
/// fences are ignored) into a constitution labelled `label`.
pub fn parse_literal(text: &str, label: &str, provenance: Provenance) -> Result<Constitution, LiteralError> {
    const MARKER: &str = "MoralRule(";
    let mut rules = Vec::new();
    let mut search = 0;
    while let Some(found) = text[search..].find(MARKER) {
        let mut cursor = Cursor { src: text, pos: search + found + MARKER.len() };
        rules.push(cursor.rule()?);
        search = cursor.pos;
    }
    if rules.is_empty() {
        return Err(LiteralError { line: 1, message: "no MoralRule(...) entries found".into() });
    }
    Ok(Constitution::new(label, provenance, rules))
}
