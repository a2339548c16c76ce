use crate::ast::Span;
use crate::int::Int;

use super::Diagnostic;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Kw(&'static str),
    Int(Int),
    Loc(u64),
    Sym(&'static str),
    Eof,
}

pub const KEYWORDS: &[&str] = &[
    "let", "in", "if", "then", "else", "fun", "fst", "snd", "inj1", "inj2", "case", "of", "alloc",
    "length", "cas", "fold", "unfold", "par", "sub", "getroot", "tfun", "true", "false", "mod",
    "forall", "mu", "unit", "bool", "int", "array", "def", "type", "main",
];

// Longest first so that prefixes do not shadow two-character symbols.
const SYMBOLS: &[&str] = &[
    "->", "<-", "<=", ">=", "==", "||", "&&", "::", "(", ")", "[", "]", "{", "}", ",", ":", ";",
    ".", "<", ">", "=", "+", "-", "*", "/", "@", "|", "\\", "⟨", "⟩", "∥",
];

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Kw(k) => format!("keyword `{k}`"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Loc(n) => format!("location #{n}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(text: &str) -> Result<Vec<(Tok, Span)>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
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
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            };
            out.push((tok, span));
            continue;
        }
        if c.is_ascii_digit() || (c == '#' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = if c == '#' { i + 1 } else { i };
            i = start;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            col += (i - start) as u32 + u32::from(c == '#');
            if i < chars.len() && is_ident_start(chars[i]) {
                return Err(Diagnostic::syntax(span, "identifier cannot start with a digit"));
            }
            let tok = if c == '#' {
                Tok::Loc(
                    digits
                        .parse()
                        .map_err(|_| Diagnostic::syntax(span, "location literal out of range"))?,
                )
            } else {
                Tok::Int(digits.parse().expect("digits parse as an integer"))
            };
            out.push((tok, span));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                let n = s.chars().count();
                i += n;
                col += n as u32;
                out.push((Tok::Sym(s), span));
            }
            None => {
                return Err(Diagnostic::syntax(span, format!("unexpected character `{c}`")));
            }
        }
    }
    out.push((Tok::Eof, Span::new(line, col)));
    Ok(out)
}
