//! A tiny expression language for multiplier symbols.
//!
//! Grammar (single free variable `k`, integer exponents only):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' '-'? integer)*
//! primary := number | 'k' | func '(' expr ')' | '(' expr ')'
//! func    := sqrt | tanh | cosh | sech | abs
//! ```
//!
//! Compiled symbols are evaluated at `|k|`, so an odd expression such as `k`
//! turns into `|k|`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::symbol::MultiplierSymbol;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("parse error at position {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown identifier `{name}`")]
    UnknownIdentifier { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Tanh,
    Cosh,
    Sech,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            "cosh" => Func::Cosh,
            "sech" => Func::Sech,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Cosh => "cosh",
            Func::Sech => "sech",
            Func::Abs => "abs",
        }
    }

    fn apply(&self, x: f64) -> f64 {
        match self {
            Func::Sqrt => x.sqrt(),
            Func::Tanh => x.tanh(),
            Func::Cosh => x.cosh(),
            Func::Sech => 1.0 / x.cosh(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Direct recursive interpretation (no limit guards).
    pub fn interpret(&self, k: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Var => k,
            Expr::Neg(a) => -a.interpret(k),
            Expr::Add(a, b) => a.interpret(k) + b.interpret(k),
            Expr::Sub(a, b) => a.interpret(k) - b.interpret(k),
            Expr::Mul(a, b) => a.interpret(k) * b.interpret(k),
            Expr::Div(a, b) => a.interpret(k) / b.interpret(k),
            Expr::Pow(a, n) => a.interpret(k).powi(*n),
            Expr::Call(f, a) => f.apply(a.interpret(k)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write!(f, "{c:?}"),
            Expr::Var => write!(f, "k"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => write!(f, "({a})^{n}"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolExpr {
    pub ast: Expr,
    pub source_text: String,
}

impl fmt::Display for SymbolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}

pub fn parse_symbol(text: &str) -> Result<SymbolExpr, ParseError> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
    };
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.expected("operator or end of input"));
    }
    Ok(SymbolExpr {
        ast,
        source_text: text.to_string(),
    })
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expected(&self, what: &str) -> ParseError {
        ParseError::Syntax {
            position: self.pos,
            expected: what.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.primary()?;
        while self.eat('^') {
            let negative = self.eat('-');
            self.skip_ws();
            let start = self.pos;
            while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.expected("integer exponent"));
            }
            let digits: String = self.chars[start..self.pos].iter().collect();
            let n: i32 = digits.parse().map_err(|_| ParseError::Syntax {
                position: start,
                expected: "integer exponent within i32 range".into(),
            })?;
            base = Expr::Pow(Box::new(base), if negative { -n } else { n });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.expected("`)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while self
                    .chars
                    .get(self.pos)
                    .is_some_and(|c| c.is_alphanumeric() || *c == '_')
                {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                if name == "k" {
                    return Ok(Expr::Var);
                }
                let func = Func::from_name(&name)
                    .ok_or(ParseError::UnknownIdentifier { name: name.clone() })?;
                if !self.eat('(') {
                    return Err(self.expected("`(`"));
                }
                let arg = self.expr()?;
                if !self.eat(')') {
                    return Err(self.expected("`)`"));
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            _ => Err(self.expected("expression")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Parser| {
            while p.chars.get(p.pos).is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
        };
        digits(self);
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.chars.get(self.pos), Some('e') | Some('E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+') | Some('-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if exp_start == self.pos {
                // Not an exponent after all.
                self.pos = mark;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| ParseError::Syntax {
                position: start,
                expected: "number".into(),
            })
    }
}

// Guarded quotient: sample points for the limit extrapolation.
const LIMIT_PROBE: f64 = 1e-3;
const LIMIT_LEVELS: usize = 6;

type Compiled = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Compiles an expression into a [`MultiplierSymbol`] evaluated at `|k|`.
///
/// Quotients whose numerator and denominator both vanish at `k = 0` get a
/// limit guard: below [`crate::symbol::TAYLOR_RADIUS`] they return the limit,
/// extrapolated numerically from `k = 1e-3, 5e-4, ...`.
pub fn compile_symbol(expr: &SymbolExpr) -> MultiplierSymbol {
    let f = compile_node(&expr.ast);
    MultiplierSymbol::from_fn(expr.source_text.clone(), move |k| f(k))
}

/// Parses and compiles in one go.
pub fn symbol_from_str(text: &str) -> Result<MultiplierSymbol, ParseError> {
    Ok(compile_symbol(&parse_symbol(text)?))
}

fn compile_node(e: &Expr) -> Compiled {
    match e {
        Expr::Num(c) => {
            let c = *c;
            Arc::new(move |_| c)
        }
        Expr::Var => Arc::new(|k| k),
        Expr::Neg(a) => {
            let a = compile_node(a);
            Arc::new(move |k| -a(k))
        }
        Expr::Add(a, b) => {
            let (a, b) = (compile_node(a), compile_node(b));
            Arc::new(move |k| a(k) + b(k))
        }
        Expr::Sub(a, b) => {
            let (a, b) = (compile_node(a), compile_node(b));
            Arc::new(move |k| a(k) - b(k))
        }
        Expr::Mul(a, b) => {
            let (a, b) = (compile_node(a), compile_node(b));
            Arc::new(move |k| a(k) * b(k))
        }
        Expr::Div(a, b) => {
            let (num, den) = (compile_node(a), compile_node(b));
            let removable = num(0.0).abs() < 1e-14 && den(0.0).abs() < 1e-14;
            if removable {
                let limit = quotient_limit(&num, &den);
                Arc::new(move |k| {
                    if k.abs() < crate::symbol::TAYLOR_RADIUS {
                        limit
                    } else {
                        num(k) / den(k)
                    }
                })
            } else {
                Arc::new(move |k| num(k) / den(k))
            }
        }
        Expr::Pow(a, n) => {
            let (a, n) = (compile_node(a), *n);
            Arc::new(move |k| a(k).powi(n))
        }
        Expr::Call(func, a) => {
            let (a, func) = (compile_node(a), *func);
            Arc::new(move |k| func.apply(a(k)))
        }
    }
}

/// Limit of `num/den` as `k -> 0+` by Richardson extrapolation in `k`
/// (numerical L'Hopital: the quotient is assumed to have a power series
/// in `k`).
fn quotient_limit(num: &Compiled, den: &Compiled) -> f64 {
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(LIMIT_LEVELS);
    let mut h = LIMIT_PROBE;
    for level in 0..LIMIT_LEVELS {
        let mut row = vec![num(h) / den(h)];
        for j in 1..=level {
            let factor = 2f64.powi(j as i32);
            let cur = row[j - 1];
            row.push(cur + (cur - table[level - 1][j - 1]) / (factor - 1.0));
        }
        table.push(row);
        h *= 0.5;
    }
    // Use a moderate depth: the deepest levels amplify roundoff.
    table[3][3]
}
