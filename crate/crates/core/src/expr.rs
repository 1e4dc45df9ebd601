//! Coefficient expressions over the coordinates `t` and `x`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right associative
//! primary := number | 't' | 'x' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | tanh | sqrt | abs
//! ```
//!
//! Unary minus binds looser than `^`, so `-2^2` is `-4` and `2^3^2` is `512`.
//! Expressions can be differentiated symbolically in `t` or `x`, which is how
//! the operator layer obtains exact coefficient derivatives.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at offset {offset}: expected {expected}")]
pub struct SyntaxError {
    pub offset: usize,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at offset {offset}")]
    DivisionByZero { offset: usize },
    #[error("square root of negative value {value} at offset {offset}")]
    NegativeSqrt { offset: usize, value: f64 },
    #[error("logarithm of non-positive value {value} at offset {offset}")]
    NonPositiveLog { offset: usize, value: f64 },
    #[error("non-finite result at offset {offset}")]
    NonFinite { offset: usize },
    #[error("non-finite input ({t}, {x})")]
    NonFiniteInput { t: f64, x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Sqrt,
    Abs,
    // Internal only: produced by differentiation, not accepted by the parser.
    Ln,
    Sign,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Ln => "ln",
            Func::Sign => "sign",
        }
    }

    fn parse(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

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

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin {
        op: BinOp,
        lhs: Box<Node>,
        rhs: Box<Node>,
        at: usize,
    },
    Call {
        func: Func,
        arg: Box<Node>,
        at: usize,
    },
}

/// A parsed coefficient expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, SyntaxError> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("operator or end of input"));
        }
        Ok(Expr { root })
    }

    pub fn constant(value: f64) -> Expr {
        Expr {
            root: Node::Num(value),
        }
    }

    pub fn var(v: Var) -> Expr {
        Expr { root: Node::Var(v) }
    }

    /// `Some(c)` when the expression folded to a literal.
    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Node::Num(c) => Some(c),
            _ => None,
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.root.depends_on(v)
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64, EvalError> {
        if !t.is_finite() || !x.is_finite() {
            return Err(EvalError::NonFiniteInput { t, x });
        }
        self.root.eval(t, x)
    }

    pub fn derivative(&self, v: Var) -> Expr {
        Expr {
            root: self.root.derivative(v),
        }
    }

    pub fn pow(self, rhs: Expr) -> Expr {
        Expr {
            root: bin(BinOp::Pow, self.root, rhs.root, 0),
        }
    }

    pub fn sqrt(self) -> Expr {
        Expr {
            root: call(Func::Sqrt, self.root, 0),
        }
    }

    pub fn sin(self) -> Expr {
        Expr {
            root: call(Func::Sin, self.root, 0),
        }
    }

    pub fn cos(self) -> Expr {
        Expr {
            root: call(Func::Cos, self.root, 0),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Node::Var(Var::T) => f.write_str("t"),
            Node::Var(Var::X) => f.write_str("x"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin { op, lhs, rhs, .. } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Node::Call { func, arg, .. } => write!(f, "{}({arg})", func.name()),
        }
    }
}

macro_rules! impl_binop {
    ($tr:ident, $method:ident, $op:expr) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr {
                    root: bin($op, self.root, rhs.root, 0),
                }
            }
        }
    };
}

impl_binop!(Add, add, BinOp::Add);
impl_binop!(Sub, sub, BinOp::Sub);
impl_binop!(Mul, mul, BinOp::Mul);
impl_binop!(Div, div, BinOp::Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            root: neg(self.root),
        }
    }
}

fn check(value: f64, at: usize) -> Result<f64, EvalError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::NonFinite { offset: at })
    }
}

impl Node {
    fn depends_on(&self, v: Var) -> bool {
        match self {
            Node::Num(_) => false,
            Node::Var(w) => *w == v,
            Node::Neg(a) => a.depends_on(v),
            Node::Bin { lhs, rhs, .. } => lhs.depends_on(v) || rhs.depends_on(v),
            Node::Call { arg, .. } => arg.depends_on(v),
        }
    }

    fn eval(&self, t: f64, x: f64) -> Result<f64, EvalError> {
        match self {
            Node::Num(c) => Ok(*c),
            Node::Var(Var::T) => Ok(t),
            Node::Var(Var::X) => Ok(x),
            Node::Neg(a) => Ok(-a.eval(t, x)?),
            Node::Bin { op, lhs, rhs, at } => {
                let l = lhs.eval(t, x)?;
                let r = rhs.eval(t, x)?;
                let value = match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(EvalError::DivisionByZero { offset: *at });
                        }
                        l / r
                    }
                    BinOp::Pow => l.powf(r),
                };
                check(value, *at)
            }
            Node::Call { func, arg, at } => {
                let a = arg.eval(t, x)?;
                let value = match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Tanh => a.tanh(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::NegativeSqrt {
                                offset: *at,
                                value: a,
                            });
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err(EvalError::NonPositiveLog {
                                offset: *at,
                                value: a,
                            });
                        }
                        a.ln()
                    }
                    Func::Sign => {
                        if a > 0.0 {
                            1.0
                        } else if a < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                };
                check(value, *at)
            }
        }
    }

    fn derivative(&self, v: Var) -> Node {
        if !self.depends_on(v) {
            return Node::Num(0.0);
        }
        match self {
            Node::Num(_) => Node::Num(0.0),
            Node::Var(w) => Node::Num(if *w == v { 1.0 } else { 0.0 }),
            Node::Neg(a) => neg(a.derivative(v)),
            Node::Bin { op, lhs, rhs, at } => {
                let (a, b, at) = (lhs.as_ref(), rhs.as_ref(), *at);
                match op {
                    BinOp::Add => bin(BinOp::Add, a.derivative(v), b.derivative(v), at),
                    BinOp::Sub => bin(BinOp::Sub, a.derivative(v), b.derivative(v), at),
                    BinOp::Mul => bin(
                        BinOp::Add,
                        bin(BinOp::Mul, a.derivative(v), b.clone(), at),
                        bin(BinOp::Mul, a.clone(), b.derivative(v), at),
                        at,
                    ),
                    BinOp::Div => {
                        // a'/b - a b' / b^2
                        let first = bin(BinOp::Div, a.derivative(v), b.clone(), at);
                        let second = bin(
                            BinOp::Div,
                            bin(BinOp::Mul, a.clone(), b.derivative(v), at),
                            bin(BinOp::Pow, b.clone(), Node::Num(2.0), at),
                            at,
                        );
                        bin(BinOp::Sub, first, second, at)
                    }
                    BinOp::Pow => {
                        if !b.depends_on(v) {
                            // b a^(b-1) a'
                            let reduced = bin(BinOp::Sub, b.clone(), Node::Num(1.0), at);
                            bin(
                                BinOp::Mul,
                                bin(
                                    BinOp::Mul,
                                    b.clone(),
                                    bin(BinOp::Pow, a.clone(), reduced, at),
                                    at,
                                ),
                                a.derivative(v),
                                at,
                            )
                        } else {
                            // a^b (b' ln a + b a'/a)
                            let inner = bin(
                                BinOp::Add,
                                bin(BinOp::Mul, b.derivative(v), call(Func::Ln, a.clone(), at), at),
                                bin(
                                    BinOp::Div,
                                    bin(BinOp::Mul, b.clone(), a.derivative(v), at),
                                    a.clone(),
                                    at,
                                ),
                                at,
                            );
                            bin(BinOp::Mul, self.clone(), inner, at)
                        }
                    }
                }
            }
            Node::Call { func, arg, at } => {
                let at = *at;
                let inner = arg.derivative(v);
                let a = arg.as_ref().clone();
                let outer = match func {
                    Func::Sin => call(Func::Cos, a, at),
                    Func::Cos => neg(call(Func::Sin, a, at)),
                    Func::Exp => self.clone(),
                    Func::Tanh => bin(
                        BinOp::Sub,
                        Node::Num(1.0),
                        bin(BinOp::Pow, self.clone(), Node::Num(2.0), at),
                        at,
                    ),
                    Func::Sqrt => bin(
                        BinOp::Div,
                        Node::Num(0.5),
                        self.clone(),
                        at,
                    ),
                    Func::Abs => call(Func::Sign, a, at),
                    Func::Ln => bin(BinOp::Div, Node::Num(1.0), a, at),
                    Func::Sign => Node::Num(0.0),
                };
                bin(BinOp::Mul, outer, inner, at)
            }
        }
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Num(c) => Node::Num(-c),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

fn call(func: Func, arg: Node, at: usize) -> Node {
    if let Node::Num(c) = arg {
        let folded = Node::Call {
            func,
            arg: Box::new(Node::Num(c)),
            at,
        };
        if let Ok(value) = folded.eval(0.0, 0.0) {
            return Node::Num(value);
        }
        return folded;
    }
    Node::Call {
        func,
        arg: Box::new(arg),
        at,
    }
}

/// Binary node with constant folding and the identities `0 + e`, `1 * e`,
/// `0 * e`, `e / 1`, `e ^ 1`, `e ^ 0`.
fn bin(op: BinOp, lhs: Node, rhs: Node, at: usize) -> Node {
    use Node::Num;
    match (op, &lhs, &rhs) {
        (BinOp::Div, _, Num(r)) if *r == 0.0 => {}
        (_, Num(l), Num(r)) => {
            let (l, r) = (*l, *r);
            let value = match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div => l / r,
                BinOp::Pow => l.powf(r),
            };
            if value.is_finite() {
                return Num(value);
            }
        }
        (BinOp::Add, Num(l), _) if *l == 0.0 => return rhs,
        (BinOp::Add | BinOp::Sub, _, Num(r)) if *r == 0.0 => return lhs,
        (BinOp::Sub, Num(l), _) if *l == 0.0 => return neg(rhs),
        (BinOp::Mul, Num(l), _) | (BinOp::Mul, _, Num(l)) if *l == 0.0 => return Num(0.0),
        (BinOp::Mul, Num(l), _) if *l == 1.0 => return rhs,
        (BinOp::Mul | BinOp::Div | BinOp::Pow, _, Num(r)) if *r == 1.0 => return lhs,
        (BinOp::Div, Num(l), _) if *l == 0.0 => return Num(0.0),
        (BinOp::Pow, _, Num(r)) if *r == 0.0 => return Num(1.0),
        _ => {}
    }
    Node::Bin {
        op,
        lhs: Box::new(lhs),
        rhs: Box::new(rhs),
        at,
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, expected: &str) -> SyntaxError {
        SyntaxError {
            offset: self.pos,
            expected: expected.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node, SyntaxError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            let at = self.pos;
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = raw_bin(op, lhs, rhs, at);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, SyntaxError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            let at = self.pos;
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = raw_bin(op, lhs, rhs, at);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, SyntaxError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, SyntaxError> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            let at = self.pos;
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(raw_bin(BinOp::Pow, base, exponent, at));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, SyntaxError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                match name {
                    "t" => Ok(Node::Var(Var::T)),
                    "x" => Ok(Node::Var(Var::X)),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    _ => match Func::parse(name) {
                        Some(func) => {
                            self.expect(b'(')?;
                            let arg = self.expr()?;
                            self.expect(b')')?;
                            Ok(Node::Call {
                                func,
                                arg: Box::new(arg),
                                at: start,
                            })
                        }
                        None => Err(SyntaxError {
                            offset: start,
                            expected: "t, x, pi or a function name".to_string(),
                        }),
                    },
                }
            }
            _ => Err(self.error("expression")),
        }
    }

    fn number(&mut self) -> Result<Node, SyntaxError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(SyntaxError {
                offset: start,
                expected: "digits".to_string(),
            });
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>().map(Node::Num).map_err(|_| SyntaxError {
            offset: start,
            expected: "number".to_string(),
        })
    }

    fn expect(&mut self, c: u8) -> Result<(), SyntaxError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("'{}'", c as char)))
        }
    }
}

/// Parsed nodes are kept verbatim so evaluation order matches the source.
fn raw_bin(op: BinOp, lhs: Node, rhs: Node, at: usize) -> Node {
    Node::Bin {
        op,
        lhs: Box::new(lhs),
        rhs: Box::new(rhs),
        at,
    }
}
