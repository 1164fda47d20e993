//! Scalar-field expressions over bundle coordinates.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' signed-integer)?
//! atom   := number | coordinate | function '(' expr ')' | '(' expr ')'
//! ```
//!
//! Coordinates are `x1..xn` (base) and `y1..ym` (fiber); functions are
//! `sin cos tan exp log sqrt`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_ORDER, MAX_VARS};

/// Base dimension `n` and fiber dimension `m` of a bundle chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BundleShape {
    pub n: usize,
    pub m: usize,
}

impl BundleShape {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Shape(format!(
                "base and fiber dimensions must be positive, got ({n}, {m})"
            )));
        }
        if n + m > MAX_VARS {
            return Err(Error::Shape(format!(
                "total dimension {} exceeds the supported maximum {MAX_VARS}",
                n + m
            )));
        }
        Ok(BundleShape { n, m })
    }

    /// Total dimension `n + m`.
    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    /// Coordinate index of the fiber coordinate `y^(a+1)`.
    pub fn fiber(&self, a: usize) -> usize {
        self.n + a
    }

    pub fn is_base(&self, alpha: usize) -> bool {
        alpha < self.n
    }
}

impl fmt::Display for BundleShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n, self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, x: &Jet) -> Result<Jet> {
        match self {
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Tan => x.tan(),
            Func::Exp => Ok(x.exp()),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

/// Expression tree. Coordinates are stored by their position in `u = (x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Coord(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Evaluates the expression on jets of the coordinates.
    pub fn eval(&self, coords: &[Jet]) -> Result<Jet> {
        let proto = &coords[0];
        Ok(match self {
            Expr::Num(v) => Jet::constant(proto.nvars(), proto.order(), *v),
            Expr::Coord(k) => coords[*k].clone(),
            Expr::Neg(a) => -a.eval(coords)?,
            Expr::Add(a, b) => a.eval(coords)? + b.eval(coords)?,
            Expr::Sub(a, b) => a.eval(coords)? - b.eval(coords)?,
            Expr::Mul(a, b) => a.eval(coords)? * b.eval(coords)?,
            Expr::Div(a, b) => a.eval(coords)?.div_jet(&b.eval(coords)?)?,
            Expr::Pow(a, n) => a.eval(coords)?.powi(*n)?,
            Expr::Call(f, a) => f.apply(&a.eval(coords)?)?,
        })
    }

    fn write(&self, shape: BundleShape, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "({v:?})")
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Coord(k) => {
                if *k < shape.n {
                    write!(f, "x{}", k + 1)
                } else {
                    write!(f, "y{}", k - shape.n + 1)
                }
            }
            Expr::Neg(a) => {
                write!(f, "(-")?;
                a.write(shape, f)?;
                write!(f, ")")
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let op = match self {
                    Expr::Add(..) => "+",
                    Expr::Sub(..) => "-",
                    Expr::Mul(..) => "*",
                    _ => "/",
                };
                write!(f, "(")?;
                a.write(shape, f)?;
                write!(f, " {op} ")?;
                b.write(shape, f)?;
                write!(f, ")")
            }
            Expr::Pow(a, n) => {
                write!(f, "(")?;
                a.write(shape, f)?;
                write!(f, "^{n})")
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(shape, f)?;
                write!(f, ")")
            }
        }
    }
}

/// A parsed scalar field on a bundle chart. Cheap to clone and shareable
/// across threads.
#[derive(Clone)]
pub struct ScalarField {
    source: Arc<str>,
    shape: BundleShape,
    expr: Arc<Expr>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({:?} on {})", &*self.source, self.shape)
    }
}

impl fmt::Display for ScalarField {
    /// Fully parenthesized rendering that parses back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.write(self.shape, f)
    }
}

impl ScalarField {
    pub fn parse(src: &str, shape: BundleShape) -> Result<Self> {
        parse_field(src, shape)
    }

    pub fn constant(value: f64, shape: BundleShape) -> Self {
        ScalarField {
            source: Arc::from(format!("{value:?}").as_str()),
            shape,
            expr: Arc::new(Expr::Num(value)),
        }
    }

    pub fn zero(shape: BundleShape) -> Self {
        Self::constant(0.0, shape)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn shape(&self) -> BundleShape {
        self.shape
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// True when the expression is the literal zero.
    pub fn is_zero(&self) -> bool {
        matches!(*self.expr, Expr::Num(v) if v == 0.0)
    }

    /// Evaluates on already-seeded coordinate jets (one per coordinate).
    pub fn eval_on(&self, coords: &[Jet]) -> Result<Jet> {
        if coords.len() != self.shape.dim() {
            return Err(Error::Shape(format!(
                "field on {} evaluated with {} coordinates",
                self.shape,
                coords.len()
            )));
        }
        let j = self.expr.eval(coords)?;
        if !j.is_finite() {
            return Err(Error::Domain(format!("non-finite value of `{}`", self.source)));
        }
        Ok(j)
    }

    /// Jet of all partial derivatives up to `order` at `u`.
    pub fn eval_jet(&self, u: &[f64], order: usize) -> Result<Jet> {
        if order > MAX_ORDER {
            return Err(Error::OrderOverflow {
                requested: order,
                max: MAX_ORDER,
            });
        }
        if u.len() != self.shape.dim() {
            return Err(Error::Shape(format!(
                "point of length {} for a field on {}",
                u.len(),
                self.shape
            )));
        }
        self.eval_on(&Jet::seed(u, order))
    }

    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        Ok(self.eval_jet(u, 0)?.value())
    }
}

/// Parses `src` as a scalar field on a chart of the given shape.
pub fn parse_field(src: &str, shape: BundleShape) -> Result<ScalarField> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        shape,
        end: src.len(),
    };
    let expr = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(Error::Parse {
            position: t.pos,
            message: format!("unexpected {}", t.kind.describe()),
        });
    }
    Ok(ScalarField {
        source: Arc::from(src),
        shape,
        expr: Arc::new(expr),
    })
}

/// Evaluates a parsed field at `u` with derivatives up to `order`.
pub fn eval_jet(f: &ScalarField, u: &[f64], order: usize) -> Result<Jet> {
    f.eval_jet(u, order)
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Int(i64),
    Ident(String),
    Op(char),
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(v) => format!("number {v}"),
            TokenKind::Int(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Op(c) => format!("`{c}`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
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
            let text = &src[start..i];
            let kind = if text.bytes().all(|b| b.is_ascii_digit()) {
                match text.parse::<i64>() {
                    Ok(v) => TokenKind::Int(v),
                    Err(_) => TokenKind::Num(text.parse::<f64>().map_err(|_| Error::Parse {
                        position: start,
                        message: format!("malformed number `{text}`"),
                    })?),
                }
            } else {
                TokenKind::Num(text.parse::<f64>().map_err(|_| Error::Parse {
                    position: start,
                    message: format!("malformed number `{text}`"),
                })?)
            };
            out.push(Token { kind, pos: start });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Ident(src[start..i].to_string()),
                pos: start,
            });
        } else if "+-*/^(),".contains(c) {
            out.push(Token {
                kind: TokenKind::Op(c),
                pos: i,
            });
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(Error::Parse {
                position: i,
                message: format!("unexpected character `{ch}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    shape: BundleShape,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Op(c),
                ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            let found = self
                .peek()
                .map_or("end of input".to_string(), |t| t.kind.describe());
            Err(Error::Parse {
                position: self.here(),
                message: format!("expected `{op}`, found {found}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        let mut sign = 1i64;
        let mut parens = false;
        if self.peek_op() == Some('(') {
            parens = true;
            self.pos += 1;
        }
        match self.peek_op() {
            Some('-') => {
                sign = -1;
                self.pos += 1;
            }
            Some('+') => self.pos += 1,
            _ => {}
        }
        let exponent = match self.peek() {
            Some(Token {
                kind: TokenKind::Int(v),
                ..
            }) => {
                let v = *v;
                self.pos += 1;
                v
            }
            Some(t) => {
                return Err(Error::Parse {
                    position: t.pos,
                    message: format!("exponent must be an integer, found {}", t.kind.describe()),
                })
            }
            None => {
                return Err(Error::Parse {
                    position: self.end,
                    message: "missing exponent".into(),
                })
            }
        };
        if parens {
            self.expect_op(')')?;
        }
        let e = i32::try_from(sign * exponent).map_err(|_| Error::Parse {
            position: self.here(),
            message: "exponent out of range".into(),
        })?;
        Ok(Expr::Pow(Box::new(base), e))
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return Err(Error::Parse {
                position: self.end,
                message: "unexpected end of input".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Num(v) => Ok(Expr::Num(v)),
            TokenKind::Int(v) => Ok(Expr::Num(v as f64)),
            TokenKind::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            TokenKind::Op(c) => Err(Error::Parse {
                position: tok.pos,
                message: format!("unexpected `{c}`"),
            }),
            TokenKind::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect_op('(')?;
                    let mut args = vec![self.expr()?];
                    while self.peek_op() == Some(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect_op(')')?;
                    if args.len() != 1 {
                        return Err(Error::Arity {
                            name,
                            expected: 1,
                            found: args.len(),
                        });
                    }
                    return Ok(Expr::Call(func, Box::new(args.pop().unwrap())));
                }
                self.coordinate(&name)
                    .map(Expr::Coord)
                    .ok_or(Error::UnknownSymbol(name))
            }
        }
    }

    fn coordinate(&self, name: &str) -> Option<usize> {
        let (head, digits) = name.split_at(1);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0')
        {
            return None;
        }
        let k: usize = digits.parse().ok()?;
        match head {
            "x" if k <= self.shape.n => Some(k - 1),
            "y" if k <= self.shape.m => Some(self.shape.n + k - 1),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape22() -> BundleShape {
        BundleShape::new(2, 2).unwrap()
    }

    #[test]
    fn grammar_smoke() {
        let f = parse_field("x1^2 + y1*y2", shape22()).unwrap();
        assert_eq!(f.eval(&[3.0, 0.0, 2.0, 5.0]).unwrap(), 19.0);
        let g = parse_field("sqrt(y1^2+y2^2)", shape22()).unwrap();
        assert!((g.eval(&[0.0, 0.0, 3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_symbol_is_named() {
        let err = parse_field("x1 + z9", shape22()).unwrap_err();
        assert_eq!(err, Error::UnknownSymbol("z9".into()));
        // coordinates outside the chart are unknown too
        let err = parse_field("x3", shape22()).unwrap_err();
        assert_eq!(err, Error::UnknownSymbol("x3".into()));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_field("x1 + * y1", shape22()).unwrap_err() {
            Error::Parse { position, .. } => assert_eq!(position, 5),
            e => panic!("unexpected {e:?}"),
        }
        match parse_field("(x1 + y1", shape22()).unwrap_err() {
            Error::Parse { position, .. } => assert_eq!(position, 8),
            e => panic!("unexpected {e:?}"),
        }
        match parse_field("x1 # 2", shape22()).unwrap_err() {
            Error::Parse { position, .. } => assert_eq!(position, 3),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(
            parse_field("x1^1.5", shape22()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn arity_error() {
        assert!(matches!(
            parse_field("sin(x1, x2)", shape22()),
            Err(Error::Arity { found: 2, .. })
        ));
    }

    #[test]
    fn precedence() {
        let s = shape22();
        let f = parse_field("-x1^2 + 2*3/4 - 1e-1 + x2^-2", s).unwrap();
        let v = f.eval(&[3.0, 2.0, 0.0, 0.0]).unwrap();
        assert!((v - (-9.0 + 1.5 - 0.1 + 0.25)).abs() < 1e-14);
    }

    #[test]
    fn display_round_trips() {
        let s = shape22();
        let f = parse_field("-x1^-2*sin(y2) - (3.5e-3 - y1)/x2", s).unwrap();
        let g = parse_field(&f.to_string(), s).unwrap();
        assert_eq!(f.expr(), g.expr());
    }

    #[test]
    fn domain_violation() {
        let f = parse_field("sqrt(x1)", shape22()).unwrap();
        assert!(matches!(f.eval(&[-1.0, 0.0, 0.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(
            f.eval_jet(&[1.0, 0.0, 0.0, 0.0], 9),
            Err(Error::OrderOverflow { .. })
        ));
    }
}
