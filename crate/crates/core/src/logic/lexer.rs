use super::ast::{parse_decimal, Rational, Relation};
use super::LogicError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    True,
    False,
    Signals,
    Ident(String),
    /// `x.` freeze binder.
    Freeze(String),
    Number(Rational),
    Not,
    And,
    Or,
    Implies,
    Until,
    WaitingFor,
    Eventually,
    Always,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Semicolon,
    Rel(Relation),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: usize,
}

pub(crate) fn lex(text: &str) -> Result<Vec<Token>, LogicError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = |tok| Some((tok, 1));
        let two = |tok| Some((tok, 2));
        let next = bytes.get(i + 1).map(|b| *b as char);
        let simple = match c {
            '!' => single(Tok::Not),
            '&' => single(Tok::And),
            '|' => single(Tok::Or),
            '(' => single(Tok::LParen),
            ')' => single(Tok::RParen),
            '[' => single(Tok::LBracket),
            ']' => single(Tok::RBracket),
            ':' => single(Tok::Colon),
            ',' => single(Tok::Comma),
            ';' => single(Tok::Semicolon),
            '+' => single(Tok::Plus),
            '*' => single(Tok::Star),
            '/' => single(Tok::Slash),
            '^' => single(Tok::Caret),
            '-' if next == Some('>') => two(Tok::Implies),
            '-' => single(Tok::Minus),
            '<' if next == Some('=') => two(Tok::Rel(Relation::Le)),
            '<' => single(Tok::Rel(Relation::Lt)),
            '>' if next == Some('=') => two(Tok::Rel(Relation::Ge)),
            '>' => single(Tok::Rel(Relation::Gt)),
            _ => None,
        };
        if let Some((tok, len)) = simple {
            out.push(Token { tok, pos: start });
            i += len;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && next.is_some_and(|n| n.is_ascii_digit())) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let value = parse_decimal(lit).ok_or_else(|| LogicError::Syntax {
                pos: start,
                msg: format!("malformed number {lit:?}"),
            })?;
            out.push(Token {
                tok: Tok::Number(value),
                pos: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let is_binder = bytes.get(i) == Some(&b'.') && !bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit());
            let tok = match word {
                "true" => Tok::True,
                "false" => Tok::False,
                "signals" => Tok::Signals,
                "U" => Tok::Until,
                "W" => Tok::WaitingFor,
                "F" => Tok::Eventually,
                "G" => Tok::Always,
                _ if is_binder => {
                    i += 1;
                    Tok::Freeze(word.to_string())
                }
                _ => Tok::Ident(word.to_string()),
            };
            out.push(Token { tok, pos: start });
            continue;
        }
        return Err(LogicError::Syntax {
            pos: start,
            msg: format!("unexpected character {c:?}"),
        });
    }
    Ok(out)
}
