//! Lexer for `.jll` source files and `.ent` entailment suites.
//!
//! `//` starts a line comment, except `//@` which starts a specification
//! hint stanza: the lexer emits a `HintMarker` token and then lexes the
//! stanza content as ordinary tokens.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// Object-id literal `#n` (traces and tests only).
    ObjId(u64),

    KwClass,
    KwInterface,
    KwExt,
    KwImpl,
    KwPred,
    KwGroup,
    KwAxiom,
    KwPublic,
    KwFinal,
    KwRequires,
    KwEnsures,
    KwVoid,
    KwInt,
    KwBool,
    KwPerm,
    KwLockset,
    KwNull,
    KwTrue,
    KwFalse,
    KwNil,
    KwNew,
    KwIf,
    KwElse,
    KwWhile,
    KwInvariant,
    KwLock,
    KwUnlock,
    KwAssert,
    KwCommit,
    KwFin,
    KwMain,
    KwReturn,
    KwEx,
    KwFa,
    KwContains,
    KwFresh,
    KwInitialized,
    KwIsClassOf,
    KwInstanceOf,
    KwPointsTo,
    KwPermAtom,
    KwJoin,
    KwSplit,
    KwType,
    KwPrimitive,
    KwAssures,
    KwIsPartOf,
    KwWaiting,
    KwResume,
    KwReturnAnd,

    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Le,
    Ge,
    Comma,
    Semi,
    Dot,
    Plus,
    Minus,
    Star,
    Slash,
    Assign,
    EqEq,
    Neq,
    Bang,
    Amp,
    Bar,
    /// `-*`
    Wand,
    /// `*-*`
    Iff,
    At,
    Colon,
    /// `:=`
    ColonAssign,
    /// `|-`
    Turnstile,
    /// `==>`
    Implies,
    /// `//@`
    HintMarker,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "integer `{n}`"),
            Tok::ObjId(o) => write!(f, "object id `#{o}`"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{pos}: {msg}")]
pub struct LexError {
    pub pos: Pos,
    pub msg: String,
}

fn keyword(s: &str) -> Option<Tok> {
    Some(match s {
        "class" => Tok::KwClass,
        "interface" => Tok::KwInterface,
        "ext" => Tok::KwExt,
        "impl" => Tok::KwImpl,
        "pred" => Tok::KwPred,
        "group" => Tok::KwGroup,
        "axiom" => Tok::KwAxiom,
        "public" => Tok::KwPublic,
        "final" => Tok::KwFinal,
        "requires" => Tok::KwRequires,
        "ensures" => Tok::KwEnsures,
        "void" => Tok::KwVoid,
        "int" => Tok::KwInt,
        "bool" => Tok::KwBool,
        "perm" => Tok::KwPerm,
        "lockset" => Tok::KwLockset,
        "null" => Tok::KwNull,
        "true" => Tok::KwTrue,
        "false" => Tok::KwFalse,
        "nil" => Tok::KwNil,
        "new" => Tok::KwNew,
        "if" => Tok::KwIf,
        "else" => Tok::KwElse,
        "while" => Tok::KwWhile,
        "invariant" => Tok::KwInvariant,
        "lock" => Tok::KwLock,
        "unlock" => Tok::KwUnlock,
        "assert" => Tok::KwAssert,
        "commit" => Tok::KwCommit,
        "fin" => Tok::KwFin,
        "main" => Tok::KwMain,
        "return" => Tok::KwReturn,
        "ex" => Tok::KwEx,
        "fa" => Tok::KwFa,
        "contains" => Tok::KwContains,
        "fresh" => Tok::KwFresh,
        "initialized" => Tok::KwInitialized,
        "isclassof" => Tok::KwIsClassOf,
        "instanceof" => Tok::KwInstanceOf,
        "PointsTo" => Tok::KwPointsTo,
        "Perm" => Tok::KwPermAtom,
        "Join" => Tok::KwJoin,
        "Lockset" => Tok::KwLockset,
        "split" => Tok::KwSplit,
        "type" => Tok::KwType,
        "primitive" => Tok::KwPrimitive,
        "assures" => Tok::KwAssures,
        "ispartof" => Tok::KwIsPartOf,
        "waiting" => Tok::KwWaiting,
        "resume" => Tok::KwResume,
        _ => return None,
    })
}

pub fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, LexError> {
    let mut out = Vec::new();
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;
    let n = bytes.len();

    macro_rules! pos {
        () => {
            Pos { line, col }
        };
    }

    let advance = |i: &mut usize, line: &mut u32, col: &mut u32| {
        if bytes[*i] == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *i += 1;
    };

    while i < n {
        let c = bytes[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        let start = pos!();
        // Comments and hint markers.
        if c == '/' && i + 1 < n && bytes[i + 1] == '/' {
            if i + 2 < n && bytes[i + 2] == '@' {
                out.push((Tok::HintMarker, start));
                for _ in 0..3 {
                    advance(&mut i, &mut line, &mut col);
                }
                continue;
            }
            while i < n && bytes[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if c == '/' && i + 1 < n && bytes[i + 1] == '*' {
            advance(&mut i, &mut line, &mut col);
            advance(&mut i, &mut line, &mut col);
            loop {
                if i + 1 >= n {
                    return Err(LexError {
                        pos: start,
                        msg: "unterminated block comment".into(),
                    });
                }
                if bytes[i] == '*' && bytes[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col);
                    advance(&mut i, &mut line, &mut col);
                    break;
                }
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < n && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                s.push(bytes[i]);
                advance(&mut i, &mut line, &mut col);
            }
            // `return-and` is a single (reserved) token.
            if s == "return" && i + 3 < n && bytes[i] == '-' {
                let rest: String = bytes[i + 1..(i + 4).min(n)].iter().collect();
                if rest == "and" {
                    for _ in 0..4 {
                        advance(&mut i, &mut line, &mut col);
                    }
                    out.push((Tok::KwReturnAnd, start));
                    continue;
                }
            }
            let tok = keyword(&s).unwrap_or(Tok::Ident(s));
            out.push((tok, start));
            continue;
        }
        if c.is_ascii_digit() {
            let mut v: i64 = 0;
            while i < n && bytes[i].is_ascii_digit() {
                v = v
                    .checked_mul(10)
                    .and_then(|v| v.checked_add((bytes[i] as u8 - b'0') as i64))
                    .ok_or_else(|| LexError {
                        pos: start,
                        msg: "integer literal overflows i64".into(),
                    })?;
                advance(&mut i, &mut line, &mut col);
            }
            out.push((Tok::Int(v), start));
            continue;
        }
        if c == '#' {
            advance(&mut i, &mut line, &mut col);
            let mut v: u64 = 0;
            let mut any = false;
            while i < n && bytes[i].is_ascii_digit() {
                any = true;
                v = v * 10 + (bytes[i] as u8 - b'0') as u64;
                advance(&mut i, &mut line, &mut col);
            }
            if !any {
                return Err(LexError {
                    pos: start,
                    msg: "`#` must be followed by an object id".into(),
                });
            }
            out.push((Tok::ObjId(v), start));
            continue;
        }
        // Multi-char operators, maximal munch.
        let rest: String = bytes[i..(i + 3).min(n)].iter().collect();
        let (tok, len) = if rest.starts_with("*-*") {
            (Tok::Iff, 3)
        } else if rest.starts_with("==>") {
            (Tok::Implies, 3)
        } else if rest.starts_with("==") {
            (Tok::EqEq, 2)
        } else if rest.starts_with("!=") {
            (Tok::Neq, 2)
        } else if rest.starts_with("<=") {
            (Tok::Le, 2)
        } else if rest.starts_with(">=") {
            (Tok::Ge, 2)
        } else if rest.starts_with("-*") {
            (Tok::Wand, 2)
        } else if rest.starts_with(":=") {
            (Tok::ColonAssign, 2)
        } else if rest.starts_with("|-") {
            (Tok::Turnstile, 2)
        } else {
            let single = match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '.' => Tok::Dot,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '=' => Tok::Assign,
                '!' => Tok::Bang,
                '&' => Tok::Amp,
                '|' => Tok::Bar,
                '@' => Tok::At,
                ':' => Tok::Colon,
                other => {
                    return Err(LexError {
                        pos: start,
                        msg: format!("unexpected character `{other}`"),
                    })
                }
            };
            (single, 1)
        };
        for _ in 0..len {
            advance(&mut i, &mut line, &mut col);
        }
        out.push((tok, start));
    }
    out.push((Tok::Eof, pos!()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_operators_with_maximal_munch() {
        let toks: Vec<Tok> = lex("*-* -* == ==> != <= |- :=")
            .unwrap()
            .into_iter()
            .map(|(t, _)| t)
            .collect();
        assert_eq!(
            toks,
            vec![
                Tok::Iff,
                Tok::Wand,
                Tok::EqEq,
                Tok::Implies,
                Tok::Neq,
                Tok::Le,
                Tok::Turnstile,
                Tok::ColonAssign,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn hint_marker_vs_comment() {
        let toks: Vec<Tok> = lex("// plain comment\n//@ unfold x;")
            .unwrap()
            .into_iter()
            .map(|(t, _)| t)
            .collect();
        assert_eq!(
            toks,
            vec![
                Tok::HintMarker,
                Tok::Ident("unfold".into()),
                Tok::Ident("x".into()),
                Tok::Semi,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn return_and_is_one_token() {
        let toks: Vec<Tok> = lex("return-and return x")
            .unwrap()
            .into_iter()
            .map(|(t, _)| t)
            .collect();
        assert_eq!(
            toks,
            vec![
                Tok::KwReturnAnd,
                Tok::KwReturn,
                Tok::Ident("x".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_track_lines() {
        let toks = lex("a\n  b").unwrap();
        assert_eq!(toks[0].1, Pos { line: 1, col: 1 });
        assert_eq!(toks[1].1, Pos { line: 2, col: 3 });
    }
}
