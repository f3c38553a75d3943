//! Splitting program text into atomic units and rendering units back to text.
//!
//! The token lexer is deliberately small: identifiers, numbers, quoted
//! literals, and single-character punctuation. Comments are dropped.
//!
//! Token rendering uses a fixed spacing table. Tokens are joined by one
//! space, except:
//!
//! | position        | tokens                          |
//! |-----------------|---------------------------------|
//! | no space before | `(` `[` `)` `]` `}` `,` `;` `.` |
//! | no space after  | `(` `[` `{` `.`                 |
//!
//! A `.` adjacent to a numeric literal keeps its space so that `1 . 5`
//! does not re-lex as the single literal `1.5`.

use crate::unit::{AtomicUnit, ProgramSlice, Uid, UnitKind};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    JavaLike,
    PythonLike,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::JavaLike => "java_like",
            Language::PythonLike => "python_like",
        })
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "java_like" | "java" => Ok(Language::JavaLike),
            "python_like" | "python" => Ok(Language::PythonLike),
            other => Err(format!("unknown language {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexError {
    #[error("unterminated string literal starting at byte {offset}")]
    UnterminatedString { offset: usize },
    #[error("unterminated block comment starting at byte {offset}")]
    UnterminatedComment { offset: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("cannot render mixed unit kinds {first} and {other}")]
    MixedKinds { first: UnitKind, other: UnitKind },
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Lexes `text` into token units with uids `0..N`.
pub fn tokenize(text: &str, language: Language) -> Result<Vec<AtomicUnit>, LexError> {
    let spans = lex_spans(text, language)?;
    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(i, (start, end))| AtomicUnit::new(i as Uid, UnitKind::Token, &text[start..end], start))
        .collect())
}

/// Token texts only; convenient for oracles that re-lex candidate text.
pub fn token_texts(text: &str, language: Language) -> Result<Vec<String>, LexError> {
    Ok(lex_spans(text, language)?
        .into_iter()
        .map(|(s, e)| text[s..e].to_string())
        .collect())
}

fn lex_spans(text: &str, language: Language) -> Result<Vec<(usize, usize)>, LexError> {
    let bytes = text.as_bytes();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |idx: usize| chars.get(idx).map_or(text.len(), |&(b, _)| b);
    let mut spans = Vec::new();
    let mut i = 0;

    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }

        // Comments.
        let next = chars.get(i + 1).map(|&(_, c)| c);
        match (language, c, next) {
            (Language::JavaLike, '/', Some('/')) | (Language::PythonLike, '#', _) => {
                while i < chars.len() && chars[i].1 != '\n' {
                    i += 1;
                }
                continue;
            }
            (Language::JavaLike, '/', Some('*')) => {
                let body = start + 2;
                match text[body..].find("*/") {
                    Some(rel) => {
                        let stop = body + rel + 2;
                        while i < chars.len() && chars[i].0 < stop {
                            i += 1;
                        }
                        continue;
                    }
                    None => return Err(LexError::UnterminatedComment { offset: start }),
                }
            }
            _ => {}
        }

        if is_ident_start(c) {
            let mut j = i + 1;
            while j < chars.len() && is_ident_continue(chars[j].1) {
                j += 1;
            }
            spans.push((start, end_of(j)));
            i = j;
        } else if c.is_ascii_digit() {
            let mut j = i + 1;
            while j < chars.len() {
                let cj = chars[j].1;
                let following = chars.get(j + 1).map(|&(_, c)| c);
                let exponent_sign = (cj == '+' || cj == '-')
                    && matches!(chars[j - 1].1, 'e' | 'E')
                    && !text[start..chars[j].0].starts_with("0x")
                    && following.is_some_and(|f| f.is_ascii_digit());
                if is_ident_continue(cj)
                    || (cj == '.'
                        && following.is_some_and(|f| f.is_ascii_digit())
                        && !text[start..chars[j].0].contains('.'))
                    || exponent_sign
                {
                    j += 1;
                } else {
                    break;
                }
            }
            spans.push((start, end_of(j)));
            i = j;
        } else if c == '"' || c == '\'' {
            let triple = language == Language::PythonLike
                && bytes.get(start + 1) == Some(&(c as u8))
                && bytes.get(start + 2) == Some(&(c as u8));
            let j = if triple {
                scan_triple(&chars, i, c).ok_or(LexError::UnterminatedString { offset: start })?
            } else {
                scan_quoted(&chars, i, c).ok_or(LexError::UnterminatedString { offset: start })?
            };
            spans.push((start, end_of(j)));
            i = j;
        } else {
            spans.push((start, end_of(i + 1)));
            i += 1;
        }
    }
    Ok(spans)
}

/// Returns the char index one past the closing quote.
fn scan_quoted(chars: &[(usize, char)], open: usize, quote: char) -> Option<usize> {
    let mut j = open + 1;
    while j < chars.len() {
        match chars[j].1 {
            '\\' => j += 2,
            '\n' => return None,
            c if c == quote => return Some(j + 1),
            _ => j += 1,
        }
    }
    None
}

fn scan_triple(chars: &[(usize, char)], open: usize, quote: char) -> Option<usize> {
    let mut j = open + 3;
    while j < chars.len() {
        match chars[j].1 {
            '\\' => j += 2,
            c if c == quote
                && chars.get(j + 1).map(|p| p.1) == Some(quote)
                && chars.get(j + 2).map(|p| p.1) == Some(quote) =>
            {
                return Some(j + 3)
            }
            _ => j += 1,
        }
    }
    None
}

/// One unit per character, newlines included.
pub fn char_units(text: &str) -> Vec<AtomicUnit> {
    text.char_indices()
        .enumerate()
        .map(|(i, (off, c))| AtomicUnit::new(i as Uid, UnitKind::Character, c.to_string(), off))
        .collect()
}

/// Character units for a language. For python_like input, the
/// indentation run at the start of each line is not emitted as units.
pub fn char_units_for(text: &str, language: Language) -> Vec<AtomicUnit> {
    if language == Language::JavaLike {
        return char_units(text);
    }
    let mut units = Vec::new();
    let mut at_line_start = true;
    for (off, c) in text.char_indices() {
        if at_line_start && (c == ' ' || c == '\t') {
            continue;
        }
        at_line_start = c == '\n';
        units.push(AtomicUnit::new(
            units.len() as Uid,
            UnitKind::Character,
            c.to_string(),
            off,
        ));
    }
    units
}

/// Line units: each line keeps its trailing newline.
pub fn line_units(text: &str) -> Vec<AtomicUnit> {
    text.split_inclusive('\n')
        .scan(0usize, |off, line| {
            let start = *off;
            *off += line.len();
            Some((start, line))
        })
        .enumerate()
        .map(|(i, (off, line))| AtomicUnit::new(i as Uid, UnitKind::Custom, line, off))
        .collect()
}

fn no_space_before(tok: &str) -> bool {
    matches!(tok, "(" | "[" | ")" | "]" | "}" | "," | ";" | ".")
}

fn no_space_after(tok: &str) -> bool {
    matches!(tok, "(" | "[" | "{" | ".")
}

fn is_numeric(tok: &str) -> bool {
    tok.starts_with(|c: char| c.is_ascii_digit())
}

/// Renders a homogeneous unit sequence back to source text.
///
/// Character and custom units concatenate; tokens follow the spacing
/// table in the module docs.
pub fn render(units: &[AtomicUnit]) -> Result<String, RenderError> {
    let Some(first) = units.first() else {
        return Ok(String::new());
    };
    if let Some(other) = units.iter().find(|u| u.kind != first.kind) {
        return Err(RenderError::MixedKinds {
            first: first.kind,
            other: other.kind,
        });
    }
    Ok(match first.kind {
        UnitKind::Character | UnitKind::Custom => units.iter().map(|u| u.text.as_str()).collect(),
        UnitKind::Token => {
            let mut out = String::new();
            for pair in std::iter::once(None)
                .chain(units.iter().map(Some))
                .collect::<Vec<_>>()
                .windows(2)
            {
                let cur = pair[1].expect("window tail is a unit");
                if let Some(prev) = pair[0] {
                    if needs_space(&prev.text, &cur.text) {
                        out.push(' ');
                    }
                }
                out.push_str(&cur.text);
            }
            out
        }
    })
}

fn needs_space(prev: &str, cur: &str) -> bool {
    if (prev == "." && is_numeric(cur)) || (cur == "." && is_numeric(prev)) {
        return true;
    }
    !(no_space_after(prev) || no_space_before(cur))
}

/// Renders a slice; see [`render`].
pub fn render_slice(slice: &ProgramSlice) -> Result<String, RenderError> {
    render(slice.units())
}

/// Selects how text is split into atomic units.
///
/// Custom splitters (for example AST-node spans produced by an external
/// parser) implement this trait and emit [`UnitKind::Custom`] units.
pub trait UnitSplitter: Send + Sync {
    fn name(&self) -> &str;
    fn split(&self, text: &str) -> Result<Vec<AtomicUnit>, LexError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Token,
    Char,
    Line,
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "token" | "tokens" => Ok(Granularity::Token),
            "char" | "character" | "characters" => Ok(Granularity::Char),
            "line" | "lines" => Ok(Granularity::Line),
            other => Err(format!("unknown granularity {other:?}")),
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Token => "token",
            Granularity::Char => "char",
            Granularity::Line => "line",
        })
    }
}

/// Built-in splitter for a granularity and language.
#[derive(Debug, Clone, Copy)]
pub struct BuiltinSplitter {
    pub granularity: Granularity,
    pub language: Language,
}

impl UnitSplitter for BuiltinSplitter {
    fn name(&self) -> &str {
        match (self.granularity, self.language) {
            (Granularity::Token, Language::JavaLike) => "java_tokens",
            (Granularity::Token, Language::PythonLike) => "python_tokens",
            (Granularity::Char, _) => "characters",
            (Granularity::Line, _) => "lines",
        }
    }

    fn split(&self, text: &str) -> Result<Vec<AtomicUnit>, LexError> {
        match self.granularity {
            Granularity::Token => tokenize(text, self.language),
            Granularity::Char => Ok(char_units_for(text, self.language)),
            Granularity::Line => Ok(line_units(text)),
        }
    }
}
