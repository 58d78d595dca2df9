//! Arithmetic expressions over a decision vector, e.g. `sum(x^2)` or
//! `x1*x2 - 2^3^1`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := number | "pi" | "x" | "x" digits | name "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! `x` is the whole vector and `x1..xd` its components. Arithmetic and the
//! unary functions apply element-wise; `sum`, `min` and `max` reduce a
//! vector, and `min`/`max` also take several arguments. The result must be a
//! scalar.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
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
    Sum,
    Pow,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Min,
        Func::Max,
        Func::Sum,
        Func::Pow,
    ];

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
            Func::Sum => "sum",
            Func::Pow => "pow",
        }
    }

    /// Accepted argument counts (min, max).
    fn arity(self) -> (usize, usize) {
        match self {
            Func::Min | Func::Max => (1, usize::MAX),
            Func::Pow => (2, 2),
            _ => (1, 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    /// The whole decision vector.
    Vector,
    /// Zero-based component.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Fully parenthesized form, parseable back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{:?}", v),
            Expr::Pi => f.write_str("pi"),
            Expr::Vector => f.write_str("x"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(e) => write!(f, "(-{})", e),
            Expr::Bin(op, a, b) => write!(f, "({} {} {})", a, op.symbol(), b),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", a)?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    pub source: String,
    pub dim: usize,
    pub root: Expr,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn parse_err(position: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        position,
        message: message.into(),
    }
}

/// Tokens with their 1-based character positions.
fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| parse_err(pos, format!("malformed number `{}`", s)))?;
            out.push((Tok::Num(v), pos));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Sym(c), pos));
            i += 1;
        } else {
            return Err(parse_err(pos, format!("unexpected character `{}`", c)));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(parse_err(self.pos(), format!("expected `{}`", c)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.primary()?;
        if self.eat('^') {
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.at += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Sym('(')) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if self.peek() == Some(&Tok::Sym('(')) {
                    return self.call(&name, pos);
                }
                self.identifier(&name, pos)
            }
            Some(Tok::Sym(c)) => Err(parse_err(pos, format!("unexpected `{}`", c))),
            None => Err(parse_err(pos, "unexpected end of input")),
        }
    }

    fn identifier(&self, name: &str, pos: usize) -> Result<Expr> {
        if name == "pi" {
            return Ok(Expr::Pi);
        }
        if name == "x" {
            return Ok(Expr::Vector);
        }
        if let Some(k) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
            if k >= 1 && k <= self.dim {
                return Ok(Expr::Var(k - 1));
            }
            return Err(parse_err(
                pos,
                format!("`{}` is out of range for dimension {}", name, self.dim),
            ));
        }
        Err(parse_err(pos, format!("unknown identifier `{}`", name)))
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<Expr> {
        let func = Func::ALL
            .iter()
            .copied()
            .find(|f| f.name() == name)
            .ok_or_else(|| parse_err(pos, format!("unknown function `{}`", name)))?;
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while self.eat(',') {
            args.push(self.expr()?);
        }
        self.expect(')')?;
        let (lo, hi) = func.arity();
        if args.len() < lo || args.len() > hi {
            return Err(parse_err(
                pos,
                format!("`{}` takes {} argument(s), got {}", name, lo, args.len()),
            ));
        }
        Ok(Expr::Call(func, args))
    }
}

pub fn parse_expression(text: &str, dim: usize) -> Result<Expression> {
    if text.trim().is_empty() {
        return Err(parse_err(1, "empty expression"));
    }
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be >= 1".to_string()));
    }
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        end: text.chars().count() + 1,
        dim,
    };
    let root = p.expr()?;
    if p.at < p.toks.len() {
        let what = match &p.toks[p.at].0 {
            Tok::Sym(')') => "unbalanced `)`".to_string(),
            Tok::Sym(c) => format!("unexpected `{}`", c),
            Tok::Num(v) => format!("unexpected number {}", v),
            Tok::Ident(s) => format!("unexpected `{}`", s),
        };
        return Err(parse_err(p.pos(), what));
    }
    Ok(Expression {
        source: text.to_string(),
        dim,
        root,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
}

fn eval_err(msg: impl Into<String>) -> Error {
    Error::Eval(msg.into())
}

fn map(v: Value, f: impl Fn(f64) -> Result<f64>) -> Result<Value> {
    Ok(match v {
        Value::Scalar(a) => Value::Scalar(f(a)?),
        Value::Vector(a) => Value::Vector(a.into_iter().map(f).collect::<Result<_>>()?),
    })
}

fn zip(a: Value, b: Value, f: impl Fn(f64, f64) -> Result<f64>) -> Result<Value> {
    Ok(match (a, b) {
        (Value::Scalar(a), Value::Scalar(b)) => Value::Scalar(f(a, b)?),
        (Value::Scalar(a), Value::Vector(b)) => {
            Value::Vector(b.into_iter().map(|v| f(a, v)).collect::<Result<_>>()?)
        }
        (Value::Vector(a), Value::Scalar(b)) => {
            Value::Vector(a.into_iter().map(|v| f(v, b)).collect::<Result<_>>()?)
        }
        (Value::Vector(a), Value::Vector(b)) => {
            Value::Vector(a.into_iter().zip(b).map(|(u, v)| f(u, v)).collect::<Result<_>>()?)
        }
    })
}

fn pow(a: f64, b: f64) -> Result<f64> {
    if a == 0.0 && b < 0.0 {
        return Err(eval_err("zero raised to a negative power"));
    }
    Ok(a.powf(b))
}

fn reduce(args: Vec<Value>, init: f64, f: fn(f64, f64) -> f64) -> f64 {
    args.into_iter()
        .flat_map(|v| match v {
            Value::Scalar(a) => vec![a],
            Value::Vector(a) => a,
        })
        .fold(init, f)
}

fn eval(e: &Expr, x: &[f64]) -> Result<Value> {
    Ok(match e {
        Expr::Num(v) => Value::Scalar(*v),
        Expr::Pi => Value::Scalar(std::f64::consts::PI),
        Expr::Vector => Value::Vector(x.to_vec()),
        Expr::Var(i) => Value::Scalar(x[*i]),
        Expr::Neg(a) => map(eval(a, x)?, |v| Ok(-v))?,
        Expr::Bin(op, a, b) => {
            let (a, b) = (eval(a, x)?, eval(b, x)?);
            match op {
                BinOp::Add => zip(a, b, |u, v| Ok(u + v))?,
                BinOp::Sub => zip(a, b, |u, v| Ok(u - v))?,
                BinOp::Mul => zip(a, b, |u, v| Ok(u * v))?,
                BinOp::Div => zip(a, b, |u, v| {
                    if v == 0.0 {
                        Err(eval_err("division by zero"))
                    } else {
                        Ok(u / v)
                    }
                })?,
                BinOp::Pow => zip(a, b, pow)?,
            }
        }
        Expr::Call(func, args) => {
            let mut vals: Vec<Value> = args.iter().map(|a| eval(a, x)).collect::<Result<_>>()?;
            match func {
                Func::Sin => map(vals.remove(0), |v| Ok(v.sin()))?,
                Func::Cos => map(vals.remove(0), |v| Ok(v.cos()))?,
                Func::Exp => map(vals.remove(0), |v| Ok(v.exp()))?,
                Func::Abs => map(vals.remove(0), |v| Ok(v.abs()))?,
                Func::Log => map(vals.remove(0), |v| {
                    if v > 0.0 {
                        Ok(v.ln())
                    } else {
                        Err(eval_err("log of a non-positive value"))
                    }
                })?,
                Func::Sqrt => map(vals.remove(0), |v| {
                    if v >= 0.0 {
                        Ok(v.sqrt())
                    } else {
                        Err(eval_err("sqrt of a negative value"))
                    }
                })?,
                Func::Pow => {
                    let b = vals.pop().unwrap();
                    zip(vals.pop().unwrap(), b, pow)?
                }
                Func::Sum => Value::Scalar(reduce(vals, 0.0, |a, b| a + b)),
                Func::Min => Value::Scalar(reduce(vals, f64::INFINITY, f64::min)),
                Func::Max => Value::Scalar(reduce(vals, f64::NEG_INFINITY, f64::max)),
            }
        }
    })
}

impl Expression {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(eval_err(format!(
                "expected {} coordinates, got {}",
                self.dim,
                x.len()
            )));
        }
        match eval(&self.root, x)? {
            Value::Scalar(v) => Ok(v),
            Value::Vector(_) => Err(eval_err(
                "expression yields a vector; reduce it with sum, min or max",
            )),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
