//! A small expression language for integrands in the single variable `t`.
//!
//! ```text
//! top     := '[' sum (',' sum)* ']' | sum
//! sum     := product (('+' | '-') product)*
//! product := power (('*' | '/') power)*
//! power   := unary ('^' power)?
//! unary   := '-' unary | primary
//! primary := number | 't' | call | '(' sum ')'
//! call    := name '(' args ')'      -- piecewise(cond, sum, sum)
//! cond    := sum ('<' | '<=' | '>' | '>=' | '=') sum
//! ```
//!
//! Unary minus binds tighter than `^`, so `-2^2` is `4`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::integrator::{Integrand, IntegrandError};
use crate::riesz::{LatticeElement, LatticeSpace};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("parse error at offset {offset}: expected {expected}, found {found}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    const ALL: [Func; 8] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt, Func::Abs, Func::Min, Func::Max];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cond {
    pub op: CmpOp,
    pub lhs: Expr,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Nonnegative literal; signs are unary nodes.
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Piecewise(Box<Cond>, Box<Expr>, Box<Expr>),
    /// Only at the root.
    Vector(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Op(&'static str),
    End,
}

impl fmt::Display for Tok<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "number {x}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Op(s) => write!(f, "`{s}`"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

// Two-character operators first so that `<=` is not read as `<`.
const OPS: [&str; 18] = ["<=", ">=", "==", "≤", "≥", "<", ">", "=", "+", "-", "*", "/", "^", "(", ")", "[", "]", ","];

fn lex(src: &str) -> Result<Vec<(usize, Tok<'_>)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let rest = &src[i..];
        let c = rest.chars().next().expect("i is a char boundary");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let mut j = i;
            while j < src.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                j += 1;
            }
            if j < src.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                let mut k = j + 1;
                if k < src.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < src.len() && bytes[k].is_ascii_digit() {
                    while k < src.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let text = &src[i..j];
            let x: f64 = text.parse().map_err(|_| ParseError {
                offset: i,
                expected: "number".into(),
                found: format!("`{text}`"),
            })?;
            if !x.is_finite() {
                return Err(ParseError { offset: i, expected: "finite number".into(), found: format!("`{text}`") });
            }
            out.push((i, Tok::Num(x)));
            i = j;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let j = i + rest.find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')).unwrap_or(rest.len());
            out.push((i, Tok::Ident(&src[i..j])));
            i = j;
            continue;
        }
        if let Some(op) = OPS.iter().find(|op| rest.starts_with(**op)) {
            out.push((i, Tok::Op(op)));
            i += op.len();
            continue;
        }
        return Err(ParseError { offset: i, expected: "token".into(), found: format!("`{c}`") });
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Tok<'a> {
        self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok<'a> {
        let t = self.peek();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError { offset: self.offset(), expected: expected.into(), found: self.peek().to_string() }
    }

    fn eat(&mut self, op: &'static str) -> bool {
        if self.peek() == Tok::Op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &'static str) -> Result<(), ParseError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(self.error(&format!("`{op}`")))
        }
    }

    fn top(&mut self) -> Result<Expr, ParseError> {
        let e = if self.eat("[") {
            let mut items = vec![self.sum()?];
            while self.eat(",") {
                items.push(self.sum()?);
            }
            self.expect("]")?;
            Expr::Vector(items)
        } else {
            self.sum()?
        };
        if self.peek() != Tok::End {
            return Err(self.error("operator or end of input"));
        }
        Ok(e)
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat("+") {
                BinOp::Add
            } else if self.eat("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.power()?;
        loop {
            let op = if self.eat("*") {
                BinOp::Mul
            } else if self.eat("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.power()?));
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if self.eat("^") {
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(self.power()?)))
        } else {
            Ok(base)
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat("-") {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let start = self.offset();
        match self.peek() {
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Num(x))
            }
            Tok::Op("(") => {
                self.bump();
                let e = self.sum()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident("t") => {
                self.bump();
                Ok(Expr::Var)
            }
            Tok::Ident("piecewise") => {
                self.bump();
                self.expect("(")?;
                let cond = self.cond()?;
                self.expect(",")?;
                let then = self.sum()?;
                self.expect(",")?;
                let other = self.sum()?;
                self.expect(")")?;
                Ok(Expr::Piecewise(Box::new(cond), Box::new(then), Box::new(other)))
            }
            Tok::Ident(name) => {
                let Some(func) = Func::from_name(name) else {
                    return Err(ParseError {
                        offset: start,
                        expected: "`t` or a known function".into(),
                        found: format!("unknown identifier `{name}`"),
                    });
                };
                self.bump();
                self.expect("(")?;
                let mut args = vec![self.sum()?];
                while self.eat(",") {
                    args.push(self.sum()?);
                }
                if args.len() != func.arity() {
                    return Err(ParseError {
                        offset: start,
                        expected: format!("{} argument(s) to {}", func.arity(), func.name()),
                        found: format!("{} argument(s)", args.len()),
                    });
                }
                self.expect(")")?;
                Ok(Expr::Call(func, args))
            }
            _ => Err(self.error("operand")),
        }
    }

    fn cond(&mut self) -> Result<Cond, ParseError> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") | Tok::Op("≤") => CmpOp::Le,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") | Tok::Op("≥") => CmpOp::Ge,
            Tok::Op("=") | Tok::Op("==") => CmpOp::Eq,
            _ => return Err(self.error("comparison")),
        };
        self.bump();
        let rhs = self.sum()?;
        Ok(Cond { op, lhs, rhs })
    }
}

/// Parses `text` into an expression tree.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.top()
}

/// Variables occurring in `e`: `{"t"}` or the empty set.
pub fn free_vars(e: &Expr) -> BTreeSet<&'static str> {
    let mut out = BTreeSet::new();
    if e.mentions_t() {
        out.insert("t");
    }
    out
}

impl Expr {
    fn mentions_t(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var => true,
            Expr::Neg(e) => e.mentions_t(),
            Expr::Bin(_, a, b) => a.mentions_t() || b.mentions_t(),
            Expr::Call(_, args) | Expr::Vector(args) => args.iter().any(Expr::mentions_t),
            Expr::Piecewise(c, a, b) => {
                c.lhs.mentions_t() || c.rhs.mentions_t() || a.mentions_t() || b.mentions_t()
            }
        }
    }

    /// Output dimension: the vector length at the root, otherwise 1.
    pub fn dim(&self) -> usize {
        match self {
            Expr::Vector(items) => items.len(),
            _ => 1,
        }
    }

    fn components(&self) -> &[Expr] {
        match self {
            Expr::Vector(items) => items,
            e => std::slice::from_ref(e),
        }
    }

    /// Writes the value at `t` into `out` (length [`Expr::dim`]).
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<(), IntegrandError> {
        for (o, e) in out.iter_mut().zip(self.components()) {
            *o = e.scalar(t)?;
            if !o.is_finite() {
                return Err(IntegrandError::NonFinite(t));
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<LatticeElement, IntegrandError> {
        let mut buf = vec![0.0; self.dim()];
        self.eval_into(t, &mut buf)?;
        Ok(LatticeElement::from_coords(&buf).expect("dimension is at least 1"))
    }

    fn scalar(&self, t: f64) -> Result<f64, IntegrandError> {
        let domain = |message: &str| IntegrandError::Domain { t, message: message.into() };
        Ok(match self {
            Expr::Num(x) => *x,
            Expr::Var => t,
            Expr::Neg(e) => -e.scalar(t)?,
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.scalar(t)?, b.scalar(t)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(domain("division by zero"));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        if x == 0.0 && y < 0.0 {
                            return Err(domain("zero raised to a negative power"));
                        }
                        let p = x.powf(y);
                        if p.is_nan() {
                            return Err(domain("negative base with non-integer exponent"));
                        }
                        p
                    }
                }
            }
            Expr::Call(func, args) => {
                let x = args[0].scalar(t)?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(domain("log of a nonpositive number"));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(domain("sqrt of a negative number"));
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                    Func::Min => x.min(args[1].scalar(t)?),
                    Func::Max => x.max(args[1].scalar(t)?),
                }
            }
            Expr::Piecewise(c, a, b) => {
                let (x, y) = (c.lhs.scalar(t)?, c.rhs.scalar(t)?);
                let holds = match c.op {
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                    CmpOp::Eq => x == y,
                };
                if holds {
                    a.scalar(t)?
                } else {
                    b.scalar(t)?
                }
            }
            Expr::Vector(_) => unreachable!("vectors only occur at the root"),
        })
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Bin(BinOp::Pow, ..) => 3,
            Expr::Neg(_) => 4,
            _ => 5,
        }
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.prec() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Var => write!(f, "t"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                write_at(f, e, 4)
            }
            Expr::Bin(op, a, b) => {
                let (sym, p) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 3),
                };
                // `^` groups to the right, the others to the left.
                let (lp, rp) = if *op == BinOp::Pow { (p + 1, p) } else { (p, p + 1) };
                write_at(f, a, lp)?;
                write!(f, " {sym} ")?;
                write_at(f, b, rp)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::Piecewise(c, a, b) => {
                let op = match c.op {
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                    CmpOp::Gt => ">",
                    CmpOp::Ge => ">=",
                    CmpOp::Eq => "=",
                };
                write!(f, "piecewise({} {op} {}, {a}, {b})", c.lhs, c.rhs)
            }
            Expr::Vector(items) => {
                write!(f, "[")?;
                for (k, a) in items.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// A parsed expression used as an integrand.
#[derive(Debug, Clone)]
pub struct ExprIntegrand {
    expr: Arc<Expr>,
    space: LatticeSpace,
    smooth: bool,
}

impl ExprIntegrand {
    pub fn new(expr: Expr) -> Self {
        let space = LatticeSpace::for_dim(expr.dim()).expect("dimension is at least 1");
        ExprIntegrand { expr: Arc::new(expr), space, smooth: false }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse(text).map(Self::new)
    }

    /// Declares the expression piecewise smooth, enabling the oracle.
    pub fn smooth(mut self, smooth: bool) -> Self {
        self.smooth = smooth;
        self
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl Integrand for ExprIntegrand {
    fn space(&self) -> LatticeSpace {
        self.space
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<(), IntegrandError> {
        self.expr.eval_into(t, out)
    }

    fn oracle_eligible(&self) -> bool {
        self.smooth
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn at(src: &str, t: f64) -> f64 {
        parse(src).unwrap_or_else(|e| panic!("{src}: {e}")).eval(t).unwrap().coords()[0]
    }

    #[test]
    fn examples() {
        assert!(matches!(parse("t^2").unwrap(), Expr::Bin(BinOp::Pow, ..)));
        assert_eq!(at("t^2", 3.0), 9.0);
        let v = parse("[t, 1]").unwrap();
        assert_eq!(v.dim(), 2);
        assert_eq!(v.eval(0.5).unwrap().coords(), &[0.5, 1.0]);
        let e = parse("t +").unwrap_err();
        assert_eq!(e.offset, 3);
        assert_eq!(e.expected, "operand");
        assert_eq!(at("piecewise(t < 0.5, 0, 1)", 0.5), 1.0);
        assert_eq!(at("abs(-t)", 2.0), 2.0);
        assert!(matches!(parse("log(t)").unwrap().eval(0.0), Err(IntegrandError::Domain { t, .. }) if t == 0.0));
    }

    #[test]
    fn free_variables() {
        assert_eq!(free_vars(&parse("t+1").unwrap()), BTreeSet::from(["t"]));
        assert!(free_vars(&parse("2").unwrap()).is_empty());
        let e = parse("s").unwrap_err();
        assert_eq!(e.offset, 0);
        assert!(e.found.contains("`s`"));
    }

    #[test]
    fn rejects_malformed_input() {
        for (src, offset) in [
            ("", 0),
            ("(t", 2),
            ("t)", 1),
            ("sin(t, t)", 0),
            ("max(t)", 0),
            ("[t, [1]]", 4),
            ("t < 1", 2),
            ("piecewise(t, 1, 2)", 11),
            ("2 $ t", 2),
            ("1e999", 0),
            ("[]", 1),
        ] {
            let e = parse(src).unwrap_err();
            assert_eq!(e.offset, offset, "{src}: {e}");
            assert!(e.offset <= src.len());
        }
    }

    #[test]
    fn domain_errors() {
        for (src, t) in [("sqrt(t)", -1.0), ("1 / t", 0.0), ("log(t)", -2.0), ("t^(-1)", 0.0), ("(-t)^0.5", 2.0)] {
            assert!(matches!(parse(src).unwrap().eval(t), Err(IntegrandError::Domain { .. })), "{src}");
        }
        assert!(matches!(parse("exp(t)").unwrap().eval(1e3), Err(IntegrandError::NonFinite(_))));
    }

    #[test]
    fn precedence_oracle() {
        let cases: [(&str, f64, f64); 50] = [
            ("1 + 2 * 3", 0.0, 7.0),
            ("(1 + 2) * 3", 0.0, 9.0),
            ("2 ^ 3 ^ 2", 0.0, 512.0),
            ("(2 ^ 3) ^ 2", 0.0, 64.0),
            ("-2 ^ 2", 0.0, 4.0),
            ("-(2 ^ 2)", 0.0, -4.0),
            ("2 ^ -1", 0.0, 0.5),
            ("8 / 4 / 2", 0.0, 1.0),
            ("8 / (4 / 2)", 0.0, 4.0),
            ("10 - 4 - 3", 0.0, 3.0),
            ("10 - (4 - 3)", 0.0, 9.0),
            ("2 * 3 ^ 2", 0.0, 18.0),
            ("(2 * 3) ^ 2", 0.0, 36.0),
            ("1 - -1", 0.0, 2.0),
            ("--t", 5.0, 5.0),
            ("-t * 2", 3.0, -6.0),
            ("t * -2", 3.0, -6.0),
            ("-t ^ 2", 3.0, 9.0),
            ("t ^ 2 * 2", 3.0, 18.0),
            ("t + t * t", 3.0, 12.0),
            ("t / 2 * 4", 3.0, 6.0),
            ("t / (2 * 4)", 4.0, 0.5),
            ("2 + 3 * t ^ 2 - 1", 2.0, 13.0),
            ("1.5e1 + .5", 0.0, 15.5),
            ("2.5E-1 * 4", 0.0, 1.0),
            ("abs(-3) + 1", 0.0, 4.0),
            ("abs(t - 5)", 2.0, 3.0),
            ("min(t, 1) + max(t, 1)", 3.0, 4.0),
            ("max(-t, t ^ 2)", -2.0, 4.0),
            ("min(2, 3) ^ 2", 0.0, 4.0),
            ("sqrt(16) * 2", 0.0, 8.0),
            ("sqrt(t ^ 2 + 9)", 4.0, 5.0),
            ("exp(0) + log(1)", 0.0, 1.0),
            ("log(exp(2))", 0.0, 2.0),
            ("sin(0) + cos(0)", 0.0, 1.0),
            ("2 * sin(t) ^ 2", 0.0, 0.0),
            ("cos(t) ^ 2 + sin(t) ^ 2 - 1 + 7", 0.0, 7.0),
            ("piecewise(t < 1, 10, 20)", 0.5, 10.0),
            ("piecewise(t < 1, 10, 20)", 1.0, 20.0),
            ("piecewise(t <= 1, 10, 20)", 1.0, 10.0),
            ("piecewise(t > 1, 10, 20)", 1.0, 20.0),
            ("piecewise(t >= 1, 10, 20)", 1.0, 10.0),
            ("piecewise(t = 1, 10, 20)", 1.0, 10.0),
            ("piecewise(t ≤ 1, 10, 20)", 2.0, 20.0),
            ("piecewise(t + 1 < 2 * t, t, -t)", 3.0, 3.0),
            ("1 + piecewise(t < 0, 1, 2) * 3", 0.0, 7.0),
            ("(((t)))", 4.0, 4.0),
            ("t  *\n 2\t+ 1", 1.0, 3.0),
            ("4 - 2 - 1 + 3 * 2 / 3", 0.0, 3.0),
            ("2 ^ 2 ^ 0", 0.0, 2.0),
        ];
        for (src, t, expected) in cases {
            assert!((at(src, t) - expected).abs() <= 1e-15 * expected.abs().max(1.0), "{src} at {t}");
        }
    }

    #[test]
    fn integrand_space() {
        let f = ExprIntegrand::parse("[t, 2 * t, 1]").unwrap();
        assert_eq!(f.space().dim(), 3);
        assert!(!f.oracle_eligible());
        assert!(f.smooth(true).oracle_eligible());
        assert_eq!(ExprIntegrand::parse("t").unwrap().space(), LatticeSpace::scalar());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(Expr::Var),
            (0u32..1000).prop_map(|n| Expr::Num(n as f64 / 8.0)),
            any::<f64>().prop_filter("finite nonnegative", |x| x.is_finite() && x.is_sign_positive()).prop_map(Expr::Num),
        ];
        leaf.prop_recursive(5, 48, 3, |inner| {
            let binop = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow)
            ];
            let cmp = prop_oneof![Just(CmpOp::Lt), Just(CmpOp::Le), Just(CmpOp::Gt), Just(CmpOp::Ge), Just(CmpOp::Eq)];
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (binop, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
                (0usize..Func::ALL.len(), inner.clone(), inner.clone()).prop_map(|(k, a, b)| {
                    let f = Func::ALL[k];
                    let args = if f.arity() == 2 { vec![a, b] } else { vec![a] };
                    Expr::Call(f, args)
                }),
                (cmp, inner.clone(), inner.clone(), inner.clone(), inner).prop_map(|(op, l, r, a, b)| {
                    Expr::Piecewise(Box::new(Cond { op, lhs: l, rhs: r }), Box::new(a), Box::new(b))
                }),
            ]
        })
    }

    fn arb_top() -> impl Strategy<Value = Expr> {
        prop_oneof![arb_expr(), prop::collection::vec(arb_expr(), 1..4).prop_map(Expr::Vector)]
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_top()) {
            let printed = e.to_string();
            let back = parse(&printed).map_err(|err| TestCaseError::fail(format!("{printed}: {err}")))?;
            prop_assert_eq!(back, e);
        }

        #[test]
        fn eval_is_pure(e in arb_top(), t in -10.0f64..10.0) {
            let dim = e.dim();
            let (mut x, mut y) = (vec![0.0; dim], vec![0.0; dim]);
            let r1 = e.eval_into(t, &mut x);
            let r2 = e.eval_into(t, &mut y);
            prop_assert_eq!(r1, r2);
            prop_assert!(x.iter().zip(&y).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
