//! Parser for `.ent` entailment-suite files.
//!
//! A suite is a sequence of judgments:
//!
//! ```text
//! x: List<n>, n: int [x] |- F, G ==> H : holds
//! p: perm |- Perm(x.f, p) ==> Perm(x.f, p/2) : holds
//! |- true ==> false : unknown
//! ```
//!
//! Each judgment lists typed declarations for its free variables, an
//! optional receiver in brackets (the `this` of predicate lookups), the
//! comma-separated antecedents, the consequent, and the expected verdict
//! (`holds` or `unknown`). Whitespace and comments are free-form; a
//! judgment ends at its verdict.

use serde::{Deserialize, Serialize};

use super::lexer::Tok;
use super::parser::{ParseError, Parser};
use crate::syntax::ast::*;

/// Expected verdict of a judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expectation {
    /// The prover must establish the entailment.
    Holds,
    /// The prover must not claim the entailment (invalid or beyond its
    /// fragment).
    Unknown,
}

/// One entailment judgment from a suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntJudgment {
    pub decls: Vec<(Ident, TypeExpr)>,
    pub receiver: Option<SpecVal>,
    pub antecedents: Vec<Formula>,
    pub consequent: Formula,
    pub expect: Expectation,
    /// Source line of the judgment (for reporting).
    pub line: u32,
}

impl EntJudgment {
    /// The antecedents as one star-conjunction.
    pub fn antecedent(&self) -> Formula {
        Formula::star_all(self.antecedents.iter().cloned())
    }
}

pub fn parse_entailment_suite(text: &str) -> Result<Vec<EntJudgment>, ParseError> {
    let mut p = Parser::new(text, true)?;
    let mut out = Vec::new();
    while p.peek() != &Tok::Eof {
        out.push(parse_judgment(&mut p)?);
    }
    Ok(out)
}

fn parse_judgment(p: &mut Parser) -> Result<EntJudgment, ParseError> {
    let line = p.pos().line;
    let mut decls = Vec::new();
    while matches!(p.peek(), Tok::Ident(_)) && p.peek2() == &Tok::Colon {
        let name = p.ident()?;
        p.expect(&Tok::Colon)?;
        let ty = p.parse_type()?;
        decls.push((name, ty));
        if !p.eat(&Tok::Comma) {
            break;
        }
    }
    let receiver = if p.eat(&Tok::LBracket) {
        let v = p.parse_spec_val_top()?;
        p.expect(&Tok::RBracket)?;
        Some(v)
    } else {
        None
    };
    p.expect(&Tok::Turnstile)?;
    let mut antecedents = Vec::new();
    if p.peek() != &Tok::Implies {
        loop {
            antecedents.push(p.parse_formula()?);
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
    }
    p.expect(&Tok::Implies)?;
    let consequent = p.parse_formula()?;
    p.expect(&Tok::Colon)?;
    let expect = match p.bump() {
        Tok::Ident(s) if s == "holds" => Expectation::Holds,
        Tok::Ident(s) if s == "unknown" => Expectation::Unknown,
        other => {
            return Err(ParseError {
                pos: p.pos(),
                msg: format!("expected verdict `holds` or `unknown`, found {other}"),
            })
        }
    };
    Ok(EntJudgment {
        decls,
        receiver,
        antecedents,
        consequent,
        expect,
        line,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_suite_with_decls_receiver_and_verdicts() {
        let text = "
// permission splitting
p: perm, x: Object |- Perm(x.f, p) ==> Perm(x.f, p/2) * Perm(x.f, p/2) : holds

x: List<n>, n: int [x] |- x.state<n>, n == 0 ==> x.state<0> : holds

|- true ==> false : unknown
";
        let suite = parse_entailment_suite(text).unwrap();
        assert_eq!(suite.len(), 3);

        let j0 = &suite[0];
        assert_eq!(j0.decls.len(), 2);
        assert_eq!(j0.decls[0], ("p".to_string(), TypeExpr::Perm));
        assert_eq!(j0.receiver, None);
        assert_eq!(j0.antecedents.len(), 1);
        assert_eq!(j0.expect, Expectation::Holds);
        assert_eq!(j0.line, 3);

        let j1 = &suite[1];
        assert_eq!(j1.receiver, Some(SpecVal::var("x")));
        assert_eq!(j1.antecedents.len(), 2);
        assert_eq!(
            j1.antecedent(),
            Formula::star(
                Formula::pred(SpecVal::var("x"), "state", vec![SpecVal::var("n")]),
                Formula::Pure(Expr::eq(Expr::spec_var("n"), Expr::int(0))),
            )
        );

        let j2 = &suite[2];
        assert!(j2.decls.is_empty());
        assert!(j2.antecedents.len() == 1);
        assert_eq!(j2.expect, Expectation::Unknown);
    }

    #[test]
    fn empty_suite() {
        assert!(parse_entailment_suite("  // nothing\n").unwrap().is_empty());
    }

    #[test]
    fn missing_verdict_is_an_error() {
        let e = parse_entailment_suite("|- true ==> true").unwrap_err();
        assert!(e.msg.contains("Colon") || e.msg.contains("verdict"), "{e}");
    }
}
