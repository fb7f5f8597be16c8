//! Recursive-descent parser for `.jll` programs and standalone formulas.
//!
//! Identifier classification: inside contracts, predicate bodies, and
//! axioms every identifier denotes a read-only (specification) variable.
//! Inside method bodies, identifiers in the read-only scope (class
//! parameters, logical parameters, formals, `fin`-bound variables, `this`,
//! quantified variables) parse as specification variables; everything else
//! is a read-write local.
//!
//! `*`, `&`, and `|` are formula connectives in formula position; to use
//! them as integer/boolean operators inside a formula, parenthesize the
//! expression (the pretty-printer does the same).

use thiserror::Error;

use super::lexer::{lex, LexError, Pos, Tok};
use crate::syntax::ast::*;
use crate::syntax::FreshSupply;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> ParseError {
        ParseError {
            pos: e.pos,
            msg: e.msg,
        }
    }
}

type PResult<T> = Result<T, ParseError>;

/// Expression parsing modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EMode {
    /// Full operator set (statement positions and parenthesized
    /// expressions).
    Cmd,
    /// Formula position: `*`, `&`, `|` are left to the formula parser.
    Fml,
    /// Specification-value position: no comparisons (a `>` closes the
    /// argument list), `/` builds permission fractions.
    Spec,
}

// Expression precedence, loosest to tightest.
const P_OR: u8 = 0;
const P_AND: u8 = 1;
const P_CMP: u8 = 2;
const P_ADD: u8 = 3;
const P_MUL: u8 = 4;

// Formula precedence, loosest to tightest.
const F_IFF: u8 = 1;
const F_WAND: u8 = 2;
const F_OR: u8 = 3;
const F_AND: u8 = 4;
const F_STAR: u8 = 5;

pub(crate) struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    /// Read-only scope stack for identifier classification.
    ro: Vec<Ident>,
    /// When set, every identifier is read-only (contract/suite contexts).
    default_ro: bool,
    supply: FreshSupply,
}

fn to_specval(e: &Expr) -> Result<SpecVal, String> {
    match e {
        Expr::Spec(v) => Ok(v.clone()),
        Expr::Var(x) => Err(format!(
            "read-write variable `{x}` cannot appear in a specification value"
        )),
        Expr::Op(Op::Add, args) => Ok(SpecVal::union(
            to_specval(&args[0])?,
            to_specval(&args[1])?,
        )),
        Expr::Op(..) => Err("expected a specification value".into()),
    }
}

impl Parser {
    pub(crate) fn new(text: &str, default_ro: bool) -> PResult<Parser> {
        let toks = lex(text)?;
        let supply = FreshSupply::avoiding(toks.iter().filter_map(|(t, _)| match t {
            Tok::Ident(s) => Some(s.as_str()),
            _ => None,
        }));
        Ok(Parser {
            toks,
            i: 0,
            ro: Vec::new(),
            default_ro,
            supply,
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    pub(crate) fn peek2(&self) -> &Tok {
        &self.toks[(self.i + 1).min(self.toks.len() - 1)].0
    }

    pub(crate) fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.err(format!("expected {t:?}, found {}", self.peek()))
        }
    }

    pub(crate) fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {other}")),
        }
    }

    fn classify(&self, x: &str) -> Expr {
        if self.default_ro || self.ro.iter().any(|r| r == x) {
            Expr::Spec(SpecVal::Var(x.into()))
        } else {
            Expr::Var(x.into())
        }
    }

    fn ro_mark(&self) -> usize {
        self.ro.len()
    }

    fn ro_reset(&mut self, mark: usize) {
        self.ro.truncate(mark);
    }

    // ----- types ------------------------------------------------------

    fn at_type_keyword(&self) -> bool {
        matches!(
            self.peek(),
            Tok::KwVoid | Tok::KwInt | Tok::KwBool | Tok::KwPerm | Tok::KwLockset
        )
    }

    pub(crate) fn parse_type(&mut self) -> PResult<TypeExpr> {
        match self.peek().clone() {
            Tok::KwVoid => {
                self.bump();
                Ok(TypeExpr::Void)
            }
            Tok::KwInt => {
                self.bump();
                Ok(TypeExpr::Int)
            }
            Tok::KwBool => {
                self.bump();
                Ok(TypeExpr::Bool)
            }
            Tok::KwPerm => {
                self.bump();
                Ok(TypeExpr::Perm)
            }
            Tok::KwLockset => {
                self.bump();
                Ok(TypeExpr::Lockset)
            }
            Tok::Ident(name) => {
                self.bump();
                let mut args = Vec::new();
                if self.eat(&Tok::Lt) {
                    loop {
                        args.push(self.parse_spec_val(None)?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(&Tok::Gt)?;
                }
                Ok(TypeExpr::Ref(name, args))
            }
            other => self.err(format!("expected a type, found {other}")),
        }
    }

    // ----- expressions ------------------------------------------------

    fn parse_expr(&mut self, mode: EMode, min: u8) -> PResult<Expr> {
        let lhs = self.parse_unary(mode)?;
        self.parse_expr_from(lhs, mode, min)
    }

    fn parse_expr_from(&mut self, mut lhs: Expr, mode: EMode, min: u8) -> PResult<Expr> {
        loop {
            let (prec, tok) = match self.peek() {
                Tok::Bar if mode == EMode::Cmd => (P_OR, Tok::Bar),
                Tok::Amp if mode == EMode::Cmd => (P_AND, Tok::Amp),
                t @ (Tok::EqEq | Tok::Neq | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge)
                    if mode != EMode::Spec =>
                {
                    (P_CMP, t.clone())
                }
                t @ (Tok::KwIsClassOf | Tok::KwInstanceOf) if mode != EMode::Spec => {
                    (P_CMP, t.clone())
                }
                Tok::Plus => (P_ADD, Tok::Plus),
                Tok::Minus => (P_ADD, Tok::Minus),
                Tok::Star if mode != EMode::Fml => (P_MUL, Tok::Star),
                _ => break,
            };
            if prec < min {
                break;
            }
            self.bump();
            lhs = match tok {
                Tok::KwIsClassOf => {
                    let class = self.ident()?;
                    Expr::Op(Op::IsClassOf(class), vec![lhs])
                }
                Tok::KwInstanceOf => {
                    let ty = self.parse_type()?;
                    Expr::Op(Op::InstanceOf(Box::new(ty)), vec![lhs])
                }
                _ => {
                    let rhs = self.parse_expr(mode, prec + 1)?;
                    match tok {
                        Tok::Bar => Expr::Op(Op::Or, vec![lhs, rhs]),
                        Tok::Amp => Expr::Op(Op::And, vec![lhs, rhs]),
                        Tok::EqEq => Expr::eq(lhs, rhs),
                        Tok::Neq => Expr::neq(lhs, rhs),
                        Tok::Lt => Expr::Op(Op::Lt, vec![lhs, rhs]),
                        Tok::Le => Expr::Op(Op::Le, vec![lhs, rhs]),
                        Tok::Gt => Expr::Op(Op::Gt, vec![lhs, rhs]),
                        Tok::Ge => Expr::Op(Op::Ge, vec![lhs, rhs]),
                        Tok::Plus => Expr::Op(Op::Add, vec![lhs, rhs]),
                        Tok::Minus => Expr::Op(Op::Sub, vec![lhs, rhs]),
                        Tok::Star => Expr::Op(Op::Mul, vec![lhs, rhs]),
                        _ => unreachable!(),
                    }
                }
            };
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self, mode: EMode) -> PResult<Expr> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                let e = self.parse_unary(mode)?;
                Ok(Expr::not(e))
            }
            Tok::Minus => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        Ok(Expr::int(-n))
                    }
                    other => self.err(format!(
                        "`-` must be followed by an integer literal, found {other}"
                    )),
                }
            }
            _ => self.parse_atom(mode),
        }
    }

    fn parse_atom(&mut self, mode: EMode) -> PResult<Expr> {
        let mut e = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Expr::int(n)
            }
            Tok::ObjId(o) => {
                self.bump();
                Expr::Spec(SpecVal::Obj(o))
            }
            Tok::KwNull => {
                self.bump();
                Expr::null()
            }
            Tok::KwTrue => {
                self.bump();
                Expr::truth()
            }
            Tok::KwFalse => {
                self.bump();
                Expr::Spec(SpecVal::Bool(false))
            }
            Tok::KwNil => {
                self.bump();
                Expr::Spec(SpecVal::Nil)
            }
            Tok::KwSplit => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let pos = self.pos();
                let inner = self.parse_expr(EMode::Spec, 0)?;
                self.expect(&Tok::RParen)?;
                let v = to_specval(&inner).map_err(|msg| ParseError { pos, msg })?;
                Expr::Spec(v.split())
            }
            Tok::Ident(x) => {
                self.bump();
                self.classify(&x)
            }
            Tok::LParen => {
                self.bump();
                let inner_mode = if mode == EMode::Spec {
                    EMode::Spec
                } else {
                    EMode::Cmd
                };
                let inner = self.parse_expr(inner_mode, 0)?;
                self.expect(&Tok::RParen)?;
                inner
            }
            other => return self.err(format!("expected an expression, found {other}")),
        };
        // Permission fractions `pi/2^k` in specification positions.
        if mode == EMode::Spec {
            while self.peek() == &Tok::Slash {
                let pos = self.pos();
                self.bump();
                let denom = match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        n
                    }
                    other => {
                        return self.err(format!(
                            "permission denominator must be an integer, found {other}"
                        ))
                    }
                };
                if denom < 1 || !(denom as u64).is_power_of_two() {
                    return Err(ParseError {
                        pos,
                        msg: format!("permission denominator must be a power of two, got {denom}"),
                    });
                }
                let mut v = to_specval(&e).map_err(|msg| ParseError { pos, msg })?;
                for _ in 0..(denom as u64).trailing_zeros() {
                    v = v.split();
                }
                e = Expr::Spec(v);
            }
        }
        Ok(e)
    }

    /// Parse a specification value. With `hoist`, an argument that is not
    /// a valid specification value is replaced by a fresh variable and
    /// recorded for existential wrapping.
    fn parse_spec_val(&mut self, hoist: Option<&mut Vec<(Ident, Expr)>>) -> PResult<SpecVal> {
        let pos = self.pos();
        let e = self.parse_expr(EMode::Spec, 0)?;
        match to_specval(&e) {
            Ok(v) => Ok(v),
            Err(msg) => match hoist {
                Some(hoisted) => {
                    let v = self.supply.fresh();
                    hoisted.push((v.clone(), e));
                    Ok(SpecVal::Var(v))
                }
                None => Err(ParseError { pos, msg }),
            },
        }
    }

    /// Parse a specification value with no hoisting (suite/trace use).
    pub(crate) fn parse_spec_val_top(&mut self) -> PResult<SpecVal> {
        self.parse_spec_val(None)
    }

    /// A receiver/operand expression (used before `.field` and inside the
    /// built-in formula atoms).
    fn parse_operand(&mut self) -> PResult<Expr> {
        self.parse_atom(EMode::Cmd)
    }

    // ----- formulas ---------------------------------------------------

    pub(crate) fn parse_formula(&mut self) -> PResult<Formula> {
        self.parse_formula_prec(0)
    }

    fn parse_formula_prec(&mut self, min: u8) -> PResult<Formula> {
        // Quantifiers extend as far right as possible.
        if matches!(self.peek(), Tok::KwEx | Tok::KwFa) {
            let kind = if self.bump() == Tok::KwEx {
                QuantKind::Ex
            } else {
                QuantKind::Fa
            };
            let ty = self.parse_type()?;
            let var = self.ident()?;
            self.expect(&Tok::Dot)?;
            let mark = self.ro_mark();
            self.ro.push(var.clone());
            let body = self.parse_formula_prec(0)?;
            self.ro_reset(mark);
            return Ok(Formula::quant(kind, &var, ty, body));
        }
        let mut lhs = self.parse_formula_atom()?;
        loop {
            let (prec, tok) = match self.peek() {
                Tok::Star => (F_STAR, Tok::Star),
                Tok::Amp => (F_AND, Tok::Amp),
                Tok::Bar => (F_OR, Tok::Bar),
                Tok::Wand => (F_WAND, Tok::Wand),
                Tok::Iff => (F_IFF, Tok::Iff),
                Tok::KwIsPartOf => (F_IFF, Tok::KwIsPartOf),
                _ => break,
            };
            if prec < min {
                break;
            }
            self.bump();
            lhs = match tok {
                Tok::Star => Formula::star(lhs, self.parse_formula_prec(F_STAR + 1)?),
                Tok::Amp => Formula::and(lhs, self.parse_formula_prec(F_AND + 1)?),
                Tok::Bar => Formula::or(lhs, self.parse_formula_prec(F_OR + 1)?),
                // `-*` is right-associative.
                Tok::Wand => Formula::wand(lhs, self.parse_formula_prec(F_WAND)?),
                Tok::Iff => Formula::Iff(
                    Box::new(lhs),
                    Box::new(self.parse_formula_prec(F_IFF + 1)?),
                ),
                Tok::KwIsPartOf => Formula::IsPartOf(
                    Box::new(lhs),
                    Box::new(self.parse_formula_prec(F_IFF + 1)?),
                ),
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn parse_formula_atom(&mut self) -> PResult<Formula> {
        match self.peek().clone() {
            Tok::KwEx | Tok::KwFa => self.parse_formula_prec(F_STAR + 1),
            Tok::LParen => {
                self.bump();
                let f = self.parse_formula_prec(0)?;
                self.expect(&Tok::RParen)?;
                // `(e) == w`: a parenthesized pure operand followed by an
                // expression operator continues as an expression.
                if let Formula::Pure(e) = &f {
                    if matches!(
                        self.peek(),
                        Tok::EqEq
                            | Tok::Neq
                            | Tok::Lt
                            | Tok::Le
                            | Tok::Gt
                            | Tok::Ge
                            | Tok::Plus
                            | Tok::Minus
                            | Tok::KwIsClassOf
                            | Tok::KwInstanceOf
                            | Tok::KwContains
                            | Tok::Dot
                    ) {
                        let e = self.parse_expr_from(e.clone(), EMode::Fml, 0)?;
                        return self.parse_formula_operand_from(e);
                    }
                }
                Ok(f)
            }
            Tok::KwAssures => {
                self.bump();
                let a = self.parse_formula_atom()?;
                let b = self.parse_formula_atom()?;
                Ok(Formula::Assures(Box::new(a), Box::new(b)))
            }
            Tok::KwPointsTo => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let target = self.parse_operand()?;
                self.expect(&Tok::Dot)?;
                let field = self.ident()?;
                self.expect(&Tok::Comma)?;
                let perm = self.parse_spec_val(None)?;
                self.expect(&Tok::Comma)?;
                let out = if self.eat(&Tok::KwType) {
                    let ty = self.parse_type()?;
                    Formula::PointsToTy {
                        target,
                        field,
                        perm,
                        ty,
                    }
                } else {
                    let value = self.parse_expr(EMode::Cmd, 0)?;
                    Formula::points_to(target, &field, perm, value)
                };
                self.expect(&Tok::RParen)?;
                Ok(out)
            }
            Tok::KwPermAtom => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let target = self.parse_operand()?;
                self.expect(&Tok::Dot)?;
                let field = self.ident()?;
                self.expect(&Tok::Comma)?;
                let perm = self.parse_spec_val(None)?;
                self.expect(&Tok::RParen)?;
                Ok(Formula::PermAtom {
                    target,
                    field,
                    perm,
                })
            }
            Tok::KwJoin => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let thread = self.parse_expr(EMode::Cmd, 0)?;
                self.expect(&Tok::Comma)?;
                let perm = self.parse_spec_val(None)?;
                self.expect(&Tok::RParen)?;
                Ok(Formula::Join { thread, perm })
            }
            Tok::KwLockset => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let v = self.parse_spec_val(None)?;
                self.expect(&Tok::RParen)?;
                Ok(Formula::Lockset(v))
            }
            Tok::KwFresh => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let e = self.parse_expr(EMode::Cmd, 0)?;
                self.expect(&Tok::RParen)?;
                Ok(Formula::Fresh(e))
            }
            Tok::KwInitialized => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let e = self.parse_expr(EMode::Cmd, 0)?;
                self.expect(&Tok::RParen)?;
                Ok(Formula::Initialized(e))
            }
            _ => {
                let e = self.parse_expr(EMode::Fml, 0)?;
                self.parse_formula_operand_from(e)
            }
        }
    }

    /// Continue a formula atom after an expression operand: `contains`,
    /// a predicate application, or a plain pure formula.
    fn parse_formula_operand_from(&mut self, e: Expr) -> PResult<Formula> {
        if self.peek() == &Tok::KwContains {
            let pos = self.pos();
            self.bump();
            let set = to_specval(&e).map_err(|msg| ParseError { pos, msg })?;
            let elem = self.parse_expr(EMode::Fml, P_ADD)?;
            return Ok(Formula::Contains { set, elem });
        }
        if self.peek() == &Tok::Dot {
            let pos = self.pos();
            self.bump();
            let recv = to_specval(&e).map_err(|msg| ParseError { pos, msg })?;
            let name = self.ident()?;
            let at = if self.eat(&Tok::At) {
                Some(self.ident()?)
            } else {
                None
            };
            let mut hoisted = Vec::new();
            let mut args = Vec::new();
            if self.eat(&Tok::Lt) {
                loop {
                    args.push(self.parse_spec_val(Some(&mut hoisted))?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::Gt)?;
            }
            let mut out = Formula::PredApp {
                recv,
                name,
                at,
                args,
            };
            // Arithmetic arguments were hoisted to fresh existentials:
            // `x.P<e>` becomes `ex int v. v == e * x.P<v>`.
            for (v, e) in hoisted.into_iter().rev() {
                out = Formula::ex(
                    &v,
                    TypeExpr::Int,
                    Formula::star(
                        Formula::Pure(Expr::eq(Expr::spec_var(&v), e)),
                        out,
                    ),
                );
            }
            return Ok(out);
        }
        Ok(Formula::Pure(e))
    }

    // ----- statements -------------------------------------------------

    fn parse_block(&mut self) -> PResult<Cmd> {
        enum Item {
            Head(HeadCmd),
            Dcl(TypeExpr, Ident),
            Fin(TypeExpr, Ident, Expr),
        }
        self.expect(&Tok::LBrace)?;
        let mark = self.ro_mark();
        let mut items: Vec<Item> = Vec::new();
        let mut ret: Option<Expr> = None;
        while self.peek() != &Tok::RBrace {
            match self.peek().clone() {
                Tok::Eof => return self.err("unexpected end of input inside a block"),
                Tok::KwReturn => {
                    self.bump();
                    let e = self.parse_expr(EMode::Cmd, 0)?;
                    self.expect(&Tok::Semi)?;
                    if self.peek() != &Tok::RBrace {
                        return self.err("`return` must be the last statement of its block");
                    }
                    ret = Some(e);
                }
                Tok::KwReturnAnd | Tok::KwWaiting | Tok::KwResume => {
                    return self.err(format!(
                        "{} is reserved for machine traces and may not appear in source",
                        self.peek()
                    ))
                }
                Tok::KwFin => {
                    self.bump();
                    let ty = self.parse_type()?;
                    let name = self.ident()?;
                    self.expect(&Tok::Assign)?;
                    let e = self.parse_expr(EMode::Cmd, 0)?;
                    self.expect(&Tok::Semi)?;
                    self.ro.push(name.clone());
                    items.push(Item::Fin(ty, name, e));
                }
                Tok::KwIf => {
                    self.bump();
                    self.expect(&Tok::LParen)?;
                    let guard = self.parse_expr(EMode::Cmd, 0)?;
                    self.expect(&Tok::RParen)?;
                    let then = self.parse_block()?;
                    let els = if self.eat(&Tok::KwElse) {
                        self.parse_block()?
                    } else {
                        Cmd::skip()
                    };
                    items.push(Item::Head(HeadCmd::If(guard, Box::new(then), Box::new(els))));
                }
                Tok::KwWhile => {
                    self.bump();
                    self.expect(&Tok::LParen)?;
                    let guard = self.parse_expr(EMode::Cmd, 0)?;
                    self.expect(&Tok::RParen)?;
                    self.expect(&Tok::KwInvariant)?;
                    let invariant = self.parse_formula()?;
                    let body = self.parse_block()?;
                    items.push(Item::Head(HeadCmd::While {
                        guard,
                        invariant,
                        body: Box::new(body),
                    }));
                }
                t @ (Tok::KwLock | Tok::KwUnlock | Tok::KwCommit) => {
                    self.bump();
                    self.expect(&Tok::LParen)?;
                    let e = self.parse_expr(EMode::Cmd, 0)?;
                    self.expect(&Tok::RParen)?;
                    self.expect(&Tok::Semi)?;
                    items.push(Item::Head(match t {
                        Tok::KwLock => HeadCmd::Lock(e),
                        Tok::KwUnlock => HeadCmd::Unlock(e),
                        _ => HeadCmd::Commit(e),
                    }));
                }
                Tok::KwAssert => {
                    self.bump();
                    let f = self.parse_formula()?;
                    self.expect(&Tok::Semi)?;
                    items.push(Item::Head(HeadCmd::Assert(f)));
                }
                Tok::HintMarker => {
                    self.bump();
                    let h = self.parse_hint()?;
                    items.push(Item::Head(HeadCmd::Hint(h)));
                }
                _ => {
                    // A declaration (`T x;` / `T x = rhs;`), an assignment,
                    // a field update, or a bare call.
                    if self.at_type_keyword() || matches!(self.peek(), Tok::Ident(_)) {
                        if let Some((ty, name)) = self.try_parse_decl_head() {
                            items.push(Item::Dcl(ty, name.clone()));
                            if self.eat(&Tok::Assign) {
                                items.push(Item::Head(self.parse_rhs(name)?));
                            }
                            self.expect(&Tok::Semi)?;
                            continue;
                        }
                    }
                    let stmt = self.parse_assign_stmt()?;
                    self.expect(&Tok::Semi)?;
                    items.push(Item::Head(stmt));
                }
            }
        }
        self.expect(&Tok::RBrace)?;
        self.ro_reset(mark);
        let mut cmd = Cmd::Value(ret.unwrap_or_else(Expr::null));
        for item in items.into_iter().rev() {
            cmd = match item {
                Item::Head(h) => Cmd::seq(h, cmd),
                Item::Dcl(t, x) => Cmd::Dcl(t, x, Box::new(cmd)),
                Item::Fin(t, x, e) => Cmd::FinDcl(t, x, e, Box::new(cmd)),
            };
        }
        Ok(cmd)
    }

    /// Try `T x` (a declaration head); on failure restore the cursor.
    fn try_parse_decl_head(&mut self) -> Option<(TypeExpr, Ident)> {
        let save = self.i;
        let ty = match self.parse_type() {
            Ok(t) => t,
            Err(_) => {
                self.i = save;
                return None;
            }
        };
        match self.peek().clone() {
            Tok::Ident(name) => {
                // Only commit if a declaration terminator follows.
                if matches!(self.peek2(), Tok::Semi | Tok::Assign) {
                    self.bump();
                    Some((ty, name))
                } else {
                    self.i = save;
                    None
                }
            }
            _ => {
                self.i = save;
                None
            }
        }
    }

    /// `x = rhs` / `w.f = e` / `w.m(..)` statements (after any declaration
    /// attempt failed).
    fn parse_assign_stmt(&mut self) -> PResult<HeadCmd> {
        let x = self.ident()?;
        if self.eat(&Tok::Dot) {
            let recv = self.classify(&x);
            let field = self.ident()?;
            match self.peek() {
                Tok::Assign => {
                    self.bump();
                    let e = self.parse_expr(EMode::Cmd, 0)?;
                    Ok(HeadCmd::FieldSet(recv, field, e))
                }
                Tok::Lt | Tok::LParen => self.parse_call("_".into(), recv, field),
                other => self.err(format!(
                    "expected `=`, `<`, or `(` after field/method name, found {other}"
                )),
            }
        } else if self.eat(&Tok::Assign) {
            self.parse_rhs(x)
        } else {
            self.err(format!(
                "expected a statement, found identifier `{x}` followed by {}",
                self.peek()
            ))
        }
    }

    /// The right-hand side of `x = ...`: `new C<..>`, `w.f`, `w.m(..)`, or
    /// a plain expression.
    fn parse_rhs(&mut self, lhs: Ident) -> PResult<HeadCmd> {
        if self.eat(&Tok::KwNew) {
            let class = self.ident()?;
            let mut args = Vec::new();
            if self.eat(&Tok::Lt) {
                loop {
                    args.push(self.parse_spec_val(None)?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::Gt)?;
            }
            if self.eat(&Tok::LParen) {
                self.expect(&Tok::RParen)?;
            }
            return Ok(HeadCmd::New { lhs, class, args });
        }
        let pos = self.pos();
        let e = self.parse_expr(EMode::Cmd, 0)?;
        if self.eat(&Tok::Dot) {
            if !matches!(e, Expr::Spec(_) | Expr::Var(_)) {
                return Err(ParseError {
                    pos,
                    msg: "field/method receiver must be a variable or value".into(),
                });
            }
            let name = self.ident()?;
            match self.peek() {
                Tok::Lt | Tok::LParen => self.parse_call(lhs, e, name),
                _ => Ok(HeadCmd::FieldGet(lhs, e, name)),
            }
        } else {
            Ok(HeadCmd::VarSet(lhs, e))
        }
    }

    fn parse_call(&mut self, lhs: Ident, recv: Expr, method: Ident) -> PResult<HeadCmd> {
        let mut spec_args = Vec::new();
        if self.eat(&Tok::Lt) {
            loop {
                spec_args.push(self.parse_spec_val(None)?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::Gt)?;
        }
        self.expect(&Tok::LParen)?;
        let mut args = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                args.push(self.parse_expr(EMode::Cmd, 0)?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen)?;
        Ok(HeadCmd::Call {
            lhs,
            recv,
            method,
            spec_args,
            args,
        })
    }

    fn parse_hint(&mut self) -> PResult<Hint> {
        let h = match self.peek().clone() {
            Tok::Ident(kw) if kw == "unfold" || kw == "fold" => {
                self.bump();
                let recv = self.parse_operand()?;
                self.expect(&Tok::Dot)?;
                let pred = self.ident()?;
                let at = if self.eat(&Tok::At) {
                    Some(self.ident()?)
                } else {
                    None
                };
                if kw == "unfold" {
                    Hint::Unfold { recv, pred, at }
                } else {
                    let mut args = Vec::new();
                    if self.eat(&Tok::Lt) {
                        loop {
                            args.push(self.parse_spec_val(None)?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                        self.expect(&Tok::Gt)?;
                    }
                    Hint::Fold {
                        recv,
                        pred,
                        at,
                        args,
                    }
                }
            }
            Tok::KwAxiom => {
                self.bump();
                Hint::Axiom(self.ident()?)
            }
            Tok::Ident(kw) if kw == "witness" => {
                self.bump();
                let var = self.ident()?;
                self.expect(&Tok::ColonAssign)?;
                let val = self.parse_spec_val(None)?;
                Hint::Witness { var, val }
            }
            other => {
                return self.err(format!(
                    "expected `unfold`, `fold`, `axiom`, or `witness` after `//@`, found {other}"
                ))
            }
        };
        self.expect(&Tok::Semi)?;
        Ok(h)
    }

    // ----- declarations -----------------------------------------------

    fn parse_params(&mut self) -> PResult<Vec<(TypeExpr, Ident)>> {
        let mut params = Vec::new();
        loop {
            let ty = self.parse_type()?;
            let name = self.ident()?;
            params.push((ty, name));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(params)
    }

    /// `<T a, ...>` if present.
    fn parse_opt_angle_params(&mut self) -> PResult<Vec<(TypeExpr, Ident)>> {
        if self.eat(&Tok::Lt) {
            let params = self.parse_params()?;
            self.expect(&Tok::Gt)?;
            Ok(params)
        } else {
            Ok(Vec::new())
        }
    }

    fn parse_method_sig(&mut self, is_final: bool) -> PResult<MethodSig> {
        let ret = self.parse_type()?;
        let name = self.ident()?;
        self.parse_method_sig_from(is_final, ret, name)
    }

    fn parse_method_sig_from(
        &mut self,
        is_final: bool,
        ret: TypeExpr,
        name: Ident,
    ) -> PResult<MethodSig> {
        let logic_params = self.parse_opt_angle_params()?;
        self.expect(&Tok::LParen)?;
        let formals = if self.peek() == &Tok::RParen {
            Vec::new()
        } else {
            self.parse_params()?
        };
        self.expect(&Tok::RParen)?;
        for (_, p) in logic_params.iter().chain(formals.iter()) {
            self.ro.push(p.clone());
        }
        let requires = if self.eat(&Tok::KwRequires) {
            let f = self.parse_formula()?;
            self.expect(&Tok::Semi)?;
            f
        } else {
            Formula::truth()
        };
        let ensures = if self.eat(&Tok::KwEnsures) {
            self.ro.push("result".into());
            let f = self.parse_formula()?;
            self.ro.pop();
            self.expect(&Tok::Semi)?;
            f
        } else {
            Formula::truth()
        };
        Ok(MethodSig {
            name,
            logic_params,
            ret,
            formals,
            requires,
            ensures,
            is_final,
        })
    }

    fn parse_pred(&mut self, public: bool) -> PResult<PredDecl> {
        let group = match self.bump() {
            Tok::KwPred => false,
            Tok::KwGroup => true,
            other => return self.err(format!("expected `pred` or `group`, found {other}")),
        };
        let name = self.ident()?;
        let params = self.parse_opt_angle_params()?;
        self.expect(&Tok::Assign)?;
        let mark = self.ro_mark();
        for (_, p) in &params {
            self.ro.push(p.clone());
        }
        let body = self.parse_formula()?;
        self.ro_reset(mark);
        self.expect(&Tok::Semi)?;
        Ok(PredDecl {
            name,
            public,
            group,
            params,
            body,
        })
    }

    fn parse_axiom(&mut self) -> PResult<AxiomDecl> {
        self.expect(&Tok::KwAxiom)?;
        let name = if matches!(self.peek(), Tok::Ident(_)) && self.peek2() == &Tok::Colon {
            let n = self.ident()?;
            self.expect(&Tok::Colon)?;
            Some(n)
        } else {
            None
        };
        let formula = self.parse_formula()?;
        self.expect(&Tok::Semi)?;
        Ok(AxiomDecl { name, formula })
    }

    fn parse_class(&mut self) -> PResult<ClassDecl> {
        self.expect(&Tok::KwClass)?;
        let name = self.ident()?;
        let params = self.parse_opt_angle_params()?;
        let mark = self.ro_mark();
        self.ro.push("this".into());
        for (_, p) in &params {
            self.ro.push(p.clone());
        }
        let ext = if self.eat(&Tok::KwExt) {
            Some(self.parse_type()?)
        } else {
            Some(TypeExpr::object())
        };
        let mut impls = Vec::new();
        if self.eat(&Tok::KwImpl) {
            loop {
                impls.push(self.parse_type()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::LBrace)?;
        let mut fields = Vec::new();
        let mut preds = Vec::new();
        let mut axioms = Vec::new();
        let mut methods = Vec::new();
        while self.peek() != &Tok::RBrace {
            match self.peek().clone() {
                Tok::Eof => return self.err("unexpected end of input inside a class"),
                Tok::KwPublic => {
                    self.bump();
                    preds.push(self.parse_pred(true)?);
                }
                Tok::KwPred | Tok::KwGroup => preds.push(self.parse_pred(false)?),
                Tok::KwAxiom => axioms.push(self.parse_axiom()?),
                Tok::KwFinal => {
                    self.bump();
                    let sig_mark = self.ro_mark();
                    let sig = self.parse_method_sig(true)?;
                    methods.push(self.parse_method_tail(sig)?);
                    self.ro_reset(sig_mark);
                }
                _ => {
                    let ty = self.parse_type()?;
                    let member = self.ident()?;
                    if self.eat(&Tok::Semi) {
                        fields.push((ty, member));
                    } else {
                        let sig_mark = self.ro_mark();
                        let sig = self.parse_method_sig_from(false, ty, member)?;
                        methods.push(self.parse_method_tail(sig)?);
                        self.ro_reset(sig_mark);
                    }
                }
            }
        }
        self.expect(&Tok::RBrace)?;
        self.ro_reset(mark);
        Ok(ClassDecl {
            name,
            params,
            ext,
            impls,
            fields,
            preds,
            axioms,
            methods,
            builtin: false,
        })
    }

    /// After a method signature: either a body block or `primitive;`.
    fn parse_method_tail(&mut self, sig: MethodSig) -> PResult<MethodDecl> {
        if self.eat(&Tok::KwPrimitive) {
            self.expect(&Tok::Semi)?;
            return Ok(MethodDecl { sig, body: None });
        }
        let prev = self.default_ro;
        self.default_ro = false;
        let body = self.parse_block();
        self.default_ro = prev;
        Ok(MethodDecl {
            sig,
            body: Some(body?),
        })
    }

    fn parse_interface(&mut self) -> PResult<InterfaceDecl> {
        self.expect(&Tok::KwInterface)?;
        let name = self.ident()?;
        let params = self.parse_opt_angle_params()?;
        let mark = self.ro_mark();
        self.ro.push("this".into());
        for (_, p) in &params {
            self.ro.push(p.clone());
        }
        let mut exts = Vec::new();
        if self.eat(&Tok::KwExt) {
            loop {
                exts.push(self.parse_type()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::LBrace)?;
        let mut pred_types = Vec::new();
        let mut axioms = Vec::new();
        let mut mtypes = Vec::new();
        while self.peek() != &Tok::RBrace {
            match self.peek().clone() {
                Tok::Eof => return self.err("unexpected end of input inside an interface"),
                Tok::KwPred => {
                    self.bump();
                    let name = self.ident()?;
                    let params = self.parse_opt_angle_params()?;
                    self.expect(&Tok::Semi)?;
                    pred_types.push(PredTypeDecl { name, params });
                }
                Tok::KwAxiom => axioms.push(self.parse_axiom()?),
                _ => {
                    let is_final = self.eat(&Tok::KwFinal);
                    let sig_mark = self.ro_mark();
                    let sig = self.parse_method_sig(is_final)?;
                    self.ro_reset(sig_mark);
                    self.expect(&Tok::Semi)?;
                    mtypes.push(sig);
                }
            }
        }
        self.expect(&Tok::RBrace)?;
        self.ro_reset(mark);
        Ok(InterfaceDecl {
            name,
            params,
            exts,
            pred_types,
            axioms,
            mtypes,
        })
    }

    pub(crate) fn parse_program(&mut self) -> PResult<Program> {
        let mut classes = Vec::new();
        let mut interfaces = Vec::new();
        let mut main = None;
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::KwClass => classes.push(self.parse_class()?),
                Tok::KwInterface => interfaces.push(self.parse_interface()?),
                Tok::KwMain => {
                    if main.is_some() {
                        return self.err("duplicate `main` block");
                    }
                    self.bump();
                    let prev = self.default_ro;
                    self.default_ro = false;
                    let body = self.parse_block();
                    self.default_ro = prev;
                    main = Some(body?);
                }
                other => {
                    return self.err(format!(
                        "expected `class`, `interface`, or `main`, found {other}"
                    ))
                }
            }
        }
        Ok(Program {
            table: ClassTable {
                classes,
                interfaces,
            },
            main,
        })
    }
}

/// Parse a `.jll` program. The built-in `Object`/`Thread` declarations are
/// not added here; see [`ClassTable::with_builtins`].
pub fn parse_program(text: &str) -> PResult<Program> {
    let mut p = Parser::new(text, true)?;
    let prog = p.parse_program()?;
    Ok(prog)
}

/// Parse a standalone formula (all identifiers read-only).
pub fn parse_formula(text: &str) -> PResult<Formula> {
    let mut p = Parser::new(text, true)?;
    let f = p.parse_formula()?;
    match p.peek() {
        Tok::Eof => Ok(f),
        other => p.err(format!("trailing input after formula: {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fml(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn empty_input_gives_empty_table() {
        let p = parse_program("").unwrap();
        assert!(p.table.classes.is_empty());
        assert!(p.table.interfaces.is_empty());
        assert!(p.main.is_none());
    }

    #[test]
    fn formula_precedence_star_binds_tighter_than_wand() {
        let f = fml("x.P * y.Q -* z.R");
        assert_eq!(
            f,
            Formula::wand(
                Formula::star(
                    Formula::pred(SpecVal::var("x"), "P", vec![]),
                    Formula::pred(SpecVal::var("y"), "Q", vec![]),
                ),
                Formula::pred(SpecVal::var("z"), "R", vec![]),
            )
        );
    }

    #[test]
    fn wand_is_right_associative() {
        let f = fml("x.P -* y.Q -* z.R");
        assert_eq!(
            f,
            Formula::wand(
                Formula::pred(SpecVal::var("x"), "P", vec![]),
                Formula::wand(
                    Formula::pred(SpecVal::var("y"), "Q", vec![]),
                    Formula::pred(SpecVal::var("z"), "R", vec![]),
                ),
            )
        );
    }

    #[test]
    fn perm_fractions_parse_as_split_chains() {
        let f = fml("Perm(x.f, p/2) * PointsTo(x.g, 1/4, 0)");
        assert_eq!(
            f,
            Formula::star(
                Formula::PermAtom {
                    target: Expr::spec_var("x"),
                    field: "f".into(),
                    perm: SpecVal::var("p").split(),
                },
                Formula::points_to(
                    Expr::spec_var("x"),
                    "g",
                    SpecVal::full().split().split(),
                    Expr::int(0)
                ),
            )
        );
    }

    #[test]
    fn non_power_of_two_denominator_is_rejected() {
        let e = parse_formula("Perm(x.f, p/3)").unwrap_err();
        assert!(e.msg.contains("power of two"), "{e}");
    }

    #[test]
    fn lockset_union_uses_plus() {
        let f = fml("Lockset(this + S)");
        assert_eq!(
            f,
            Formula::Lockset(SpecVal::union(SpecVal::var("this"), SpecVal::var("S")))
        );
    }

    #[test]
    fn contains_atom() {
        let f = fml("S contains x * Lockset(S)");
        assert_eq!(
            f,
            Formula::star(
                Formula::Contains {
                    set: SpecVal::var("S"),
                    elem: Expr::spec_var("x"),
                },
                Formula::Lockset(SpecVal::var("S")),
            )
        );
    }

    #[test]
    fn quantifier_extends_to_the_right() {
        let f = fml("ex int v. v == 0 * x.P<v>");
        assert_eq!(
            f,
            Formula::ex(
                "v",
                TypeExpr::Int,
                Formula::star(
                    Formula::Pure(Expr::eq(Expr::spec_var("v"), Expr::int(0))),
                    Formula::pred(SpecVal::var("x"), "P", vec![SpecVal::var("v")]),
                ),
            )
        );
    }

    #[test]
    fn arithmetic_pred_arg_hoists_to_existential() {
        let f = fml("x.state<n - 1>");
        assert_eq!(
            f,
            Formula::ex(
                "_v0",
                TypeExpr::Int,
                Formula::star(
                    Formula::Pure(Expr::eq(
                        Expr::spec_var("_v0"),
                        Expr::Op(Op::Sub, vec![Expr::spec_var("n"), Expr::int(1)]),
                    )),
                    Formula::pred(SpecVal::var("x"), "state", vec![SpecVal::var("_v0")]),
                ),
            )
        );
    }

    #[test]
    fn qualified_pred_app() {
        let f = fml("this.inv@Object");
        assert_eq!(
            f,
            Formula::PredApp {
                recv: SpecVal::var("this"),
                name: "inv".into(),
                at: Some("Object".into()),
                args: vec![],
            }
        );
    }

    #[test]
    fn points_to_with_type_value() {
        let f = fml("PointsTo(x.next, 1, type List<n>)");
        assert_eq!(
            f,
            Formula::PointsToTy {
                target: Expr::spec_var("x"),
                field: "next".into(),
                perm: SpecVal::full(),
                ty: TypeExpr::Ref("List".into(), vec![SpecVal::var("n")]),
            }
        );
    }

    #[test]
    fn parenthesized_pure_continues_as_expression() {
        let f = fml("(n + 1) == m");
        assert_eq!(
            f,
            Formula::Pure(Expr::eq(
                Expr::Op(Op::Add, vec![Expr::spec_var("n"), Expr::int(1)]),
                Expr::spec_var("m"),
            ))
        );
    }

    #[test]
    fn multiplication_requires_parentheses_in_formulas() {
        let f = fml("v == (a * b)");
        assert_eq!(
            f,
            Formula::Pure(Expr::eq(
                Expr::spec_var("v"),
                Expr::Op(Op::Mul, vec![Expr::spec_var("a"), Expr::spec_var("b")]),
            ))
        );
    }

    #[test]
    fn simple_class_parses() {
        let src = "
class Counter {
  int val;
  pred state<int n> = PointsTo(this.val, 1, n);
  int get()
    requires this.state<7>;
    ensures this.state<7> * result == 7;
  {
    int v;
    v = this.val;
    return v;
  }
}
";
        let p = parse_program(src).unwrap();
        let c = p.table.class("Counter").unwrap();
        assert_eq!(c.fields, vec![(TypeExpr::Int, "val".to_string())]);
        assert_eq!(c.preds.len(), 1);
        assert_eq!(c.ext, Some(TypeExpr::object()));
        let m = &c.methods[0];
        assert_eq!(m.sig.name, "get");
        // `v` is a read-write local, `this` is read-only.
        assert_eq!(
            m.body,
            Some(Cmd::Dcl(
                TypeExpr::Int,
                "v".into(),
                Box::new(Cmd::seq(
                    HeadCmd::FieldGet("v".into(), Expr::spec_var("this"), "val".into()),
                    Cmd::Value(Expr::var("v")),
                )),
            ))
        );
    }

    #[test]
    fn main_block_statements() {
        let src = "
main {
  Thread t;
  t = new Thread;
  _ = t.fork<nil>();
  _ = t.join<1>();
}
";
        let p = parse_program(src).unwrap();
        let main = p.main.unwrap();
        let expected = Cmd::Dcl(
            TypeExpr::thread(),
            "t".into(),
            Box::new(Cmd::seq(
                HeadCmd::New {
                    lhs: "t".into(),
                    class: "Thread".into(),
                    args: vec![],
                },
                Cmd::seq(
                    HeadCmd::Call {
                        lhs: "_".into(),
                        recv: Expr::var("t"),
                        method: "fork".into(),
                        spec_args: vec![SpecVal::Nil],
                        args: vec![],
                    },
                    Cmd::seq(
                        HeadCmd::Call {
                            lhs: "_".into(),
                            recv: Expr::var("t"),
                            method: "join".into(),
                            spec_args: vec![SpecVal::full()],
                            args: vec![],
                        },
                        Cmd::Value(Expr::null()),
                    ),
                ),
            )),
        );
        assert_eq!(main, expected);
    }

    #[test]
    fn fin_variables_are_read_only_downstream() {
        let src = "
main {
  int x;
  x = 3;
  fin int i = x;
  x = i + 1;
}
";
        let p = parse_program(src).unwrap();
        // In `x = i + 1`, `i` is read-only (Spec) while `x` stays rw.
        let Cmd::Dcl(_, _, rest) = p.main.unwrap() else {
            panic!()
        };
        let Cmd::Seq(_, rest) = *rest else { panic!() };
        let Cmd::FinDcl(_, i, init, rest) = *rest else {
            panic!()
        };
        assert_eq!(i, "i");
        assert_eq!(init, Expr::var("x"));
        let Cmd::Seq(HeadCmd::VarSet(x, e), _) = *rest else {
            panic!()
        };
        assert_eq!(x, "x");
        assert_eq!(
            e,
            Expr::Op(Op::Add, vec![Expr::spec_var("i"), Expr::int(1)])
        );
    }

    #[test]
    fn while_with_invariant_and_if_else() {
        let src = "
main {
  int n;
  n = 10;
  while (0 < n) invariant true {
    if (n == 1) {
      n = 0;
    } else {
      n = n - 1;
    }
  }
}
";
        let p = parse_program(src).unwrap();
        let s = p.to_string();
        let again = parse_program(&s).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn hints_parse() {
        let src = "
main {
  List l;
  l = new List;
  //@ unfold l.state@List;
  //@ fold l.state<0, 1/2>;
  //@ axiom splitMerge;
  //@ witness a := 5;
}
";
        let p = parse_program(src).unwrap();
        let mut hints = Vec::new();
        let mut c = p.main.as_ref().unwrap();
        loop {
            match c {
                Cmd::Seq(HeadCmd::Hint(h), rest) => {
                    hints.push(h.clone());
                    c = rest;
                }
                Cmd::Seq(_, rest) | Cmd::Dcl(_, _, rest) => c = rest,
                _ => break,
            }
        }
        assert_eq!(hints.len(), 4);
        assert_eq!(hints[2], Hint::Axiom("splitMerge".into()));
        assert_eq!(
            hints[3],
            Hint::Witness {
                var: "a".into(),
                val: SpecVal::Int(5),
            }
        );
    }

    #[test]
    fn return_must_end_block() {
        let e = parse_program("main { return 1; int x; }").unwrap_err();
        assert!(e.msg.contains("last statement"), "{e}");
    }

    #[test]
    fn machine_only_forms_rejected() {
        for src in [
            "main { return-and x = 1; }",
            "main { waiting(x, 1); }",
            "main { resume(x, 1); }",
        ] {
            assert!(parse_program(src).is_err(), "{src}");
        }
    }

    #[test]
    fn malformed_pred_body_reports_location() {
        let src = "class C {\n  pred p = PointsTo(this.f, 1);\n}";
        let e = parse_program(src).unwrap_err();
        assert_eq!(e.pos.line, 2);
    }

    #[test]
    fn interface_with_pred_type_and_sig() {
        let src = "
interface Set {
  pred state<int n>;
  axiom this.state<0> -* this.state<0>;
  bool add(int v)
    requires this.state<0>;
    ensures this.state<0>;
  ;
}
";
        let p = parse_program(src).unwrap();
        let i = p.table.interface("Set").unwrap();
        assert_eq!(i.pred_types.len(), 1);
        assert_eq!(i.axioms.len(), 1);
        assert_eq!(i.mtypes.len(), 1);
        assert_eq!(i.mtypes[0].name, "add");
    }

    #[test]
    fn program_pretty_parse_is_fixpoint() {
        let src = "
interface Ordered {
  pred total;
  int cmp(Object o)
    requires this.total;
    ensures this.total;
  ;
}

class Node<Object o> ext Object impl Ordered {
  int val;
  Node<o> next;
  pred chain<int n, perm p> = PointsTo(this.val, p, n) * (n == 0 | 0 < n);
  axiom dup: this.chain<0, 1> -* this.chain<0, 1/2> * this.chain<0, 1/2>;
  pred total = true;
  int cmp(Object other)
    requires this.total;
    ensures this.total;
  {
    return 0;
  }
  final void bump<perm p>(int k)
    requires this.chain<k, p> * Lockset(nil);
    ensures this.chain<k, p> * Lockset(nil) * result == null;
  {
    int v;
    v = this.val;
    this.val = v;
    fin int w = v + 1;
    assert this.chain<k, p> * w == v + 1;
    lock(this);
    unlock(this);
    commit(this);
  }
}

main {
  Node n;
  n = new Node<null>;
  int r;
  r = n.cmp(n);
  if (r == 0) {
    r = 1;
  }
  while (0 < r) invariant true {
    r = r - 1;
  }
}
";
        let p1 = parse_program(src).unwrap();
        let printed = p1.to_string();
        let p2 = parse_program(&printed).unwrap();
        assert_eq!(p1, p2, "printed form:\n{printed}");
        // And printing again is stable byte-for-byte.
        assert_eq!(printed, p2.to_string());
    }

    #[test]
    fn formula_pretty_parse_is_fixpoint() {
        for src in [
            "x.P * y.Q -* z.R",
            "ex int v. v == 0 * x.P<v>",
            "fa perm q. Perm(x.f, q) -* Perm(x.f, q)",
            "Lockset(this + S) * S contains x",
            "PointsTo(x.f, p/2, 0) & x != null",
            "x.state<n, p/4> *-* y.state@C<m>",
            "assures (x.P) (y.Q)",
            "x.P ispartof y.Q",
            "Join(t, p/2) * initialized(x) * fresh(y)",
            "v == (a * b) | v == (a & b)",
        ] {
            let f1 = fml(src);
            let printed = f1.to_string();
            let f2 = fml(&printed);
            assert_eq!(f1, f2, "src `{src}` printed `{printed}`");
            assert_eq!(printed, f2.to_string());
        }
    }
}
