use crate::error::{Error, Result};
use crate::lang::ast::Pos;

#[derive(Clone, PartialEq, Debug)]
pub enum Tok {
    Int(u64),
    Real(f64),
    Ident(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

// Longest symbols first so that `<=` wins over `<`.
const SYMBOLS: &[&str] = &[
    "..", "==", "!=", "<=", ">=", "&&", "||", "=", "~", "(", ")", "[", "]", "{", "}", ",", "+",
    "-", "*", "/", "%", "!", "<", ">",
];

pub fn tokenize(source: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let syntax = |line, col, message: String| Error::Syntax { line, col, message };

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
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
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            // a fractional part needs a digit after the dot; `0..4` is a range
            let is_real =
                chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
            if is_real {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if is_real {
                Tok::Real(
                    text.parse()
                        .map_err(|_| syntax(pos.line, pos.col, format!("bad number `{text}`")))?,
                )
            } else {
                Tok::Int(text.parse().map_err(|_| {
                    syntax(pos.line, pos.col, format!("integer `{text}` is too large"))
                })?)
            };
            out.push(Token { tok, pos });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                pos,
            });
            continue;
        }
        let sym = SYMBOLS.iter().find(|s| {
            let n = s.chars().count();
            i + n <= chars.len() && s.chars().zip(&chars[i..i + n]).all(|(a, &b)| a == b)
        });
        match sym {
            Some(s) => {
                let n = s.chars().count();
                i += n;
                col += n;
                out.push(Token {
                    tok: Tok::Sym(s),
                    pos,
                });
            }
            None => return Err(syntax(line, col, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}
