//! Holomorphic expression trees over the variables `s`, `z1`, ..., `zk`:
//! parsing, printing, evaluation with principal branches, and central
//! difference partials.
//!
//! Grammar (tightest first): unary minus, `^` (right associative), `*` `/`,
//! `+` `-`. Note the nonstandard corner this ordering implies: `-s^2` parses
//! as `(-s)^2`; write `-(s^2)` for the other reading. Function calls are
//! `exp(...)`, `log(...)`, `sin(...)`, `cos(...)`; `i` is the imaginary
//! unit; decimal literals may carry a scientific exponent.

use std::fmt;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

/// Default step for central difference partials.
pub fn default_diff_step<T: Real>() -> T {
    T::lit(1e-6)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        Self { position, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of zero")]
    LogOfZero,
    #[error("non-finite result")]
    NonFinite,
}

/// Expression node. `VarZ` indices are 1-based. Integer powers get their own
/// node so they evaluate by repeated multiplication (entire, no branch cut);
/// `Pow` is the principal-branch `exp(e * log b)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr<T: Real> {
    Const(Complex<T>),
    VarS,
    VarZ(usize),
    Neg(Box<Expr<T>>),
    Add(Box<Expr<T>>, Box<Expr<T>>),
    Sub(Box<Expr<T>>, Box<Expr<T>>),
    Mul(Box<Expr<T>>, Box<Expr<T>>),
    Div(Box<Expr<T>>, Box<Expr<T>>),
    PowInt(Box<Expr<T>>, i32),
    Pow(Box<Expr<T>>, Box<Expr<T>>),
    Exp(Box<Expr<T>>),
    Log(Box<Expr<T>>),
    Sin(Box<Expr<T>>),
    Cos(Box<Expr<T>>),
}

// ---------------------------------------------------------------------------
// lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok<T> {
    Num(T),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex<T: Real>(text: &str) -> Result<Vec<(usize, Tok<T>)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' => { toks.push((i, Tok::Plus)); i += 1 }
            b'-' => { toks.push((i, Tok::Minus)); i += 1 }
            b'*' => { toks.push((i, Tok::Star)); i += 1 }
            b'/' => { toks.push((i, Tok::Slash)); i += 1 }
            b'^' => { toks.push((i, Tok::Caret)); i += 1 }
            b'(' => { toks.push((i, Tok::LParen)); i += 1 }
            b')' => { toks.push((i, Tok::RParen)); i += 1 }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(ParseError::new(i, "expected digits after decimal point"));
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // Scientific exponent, consumed only when digits follow.
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
                let x: f64 = lit
                    .parse()
                    .map_err(|_| ParseError::new(start, format!("bad number literal '{lit}'")))?;
                let v = T::from_f64(x)
                    .ok_or_else(|| ParseError::new(start, format!("unrepresentable number '{lit}'")))?;
                toks.push((start, Tok::Num(v)));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                return Err(ParseError::new(i, format!("unexpected character '{}'", b as char)));
            }
        }
    }
    Ok(toks)
}

// ---------------------------------------------------------------------------
// parser

struct Parser<'a, T: Real> {
    toks: &'a [(usize, Tok<T>)],
    pos: usize,
    end: usize,
    k: usize,
}

impl<'a, T: Real> Parser<'a, T> {
    fn peek(&self) -> Option<&Tok<T>> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<&(usize, Tok<T>)> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok<T>, what: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ParseError::new(self.here(), format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr<T>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr<T>, ParseError> {
        let mut lhs = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.power()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn power(&mut self) -> Result<Expr<T>, ParseError> {
        let base = self.unary()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.pos += 1;
            let exponent = self.power()?; // right associative
            Ok(match as_int_exponent(&exponent) {
                Some(n) => Expr::PowInt(Box::new(base), n),
                None => Expr::Pow(Box::new(base), Box::new(exponent)),
            })
        } else {
            Ok(base)
        }
    }

    fn unary(&mut self) -> Result<Expr<T>, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.pos += 1;
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> Result<Expr<T>, ParseError> {
        let at = self.here();
        let k = self.k;
        match self.bump() {
            Some((_, Tok::Num(v))) => Ok(Expr::Const(Complex::new(*v, T::zero()))),
            Some((_, Tok::LParen)) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "closing parenthesis")?;
                Ok(inner)
            }
            Some((pos, Tok::Ident(name))) => {
                let pos = *pos;
                match name.as_str() {
                    "s" => Ok(Expr::VarS),
                    "i" => Ok(Expr::Const(Complex::new(T::zero(), T::one()))),
                    "exp" | "log" | "sin" | "cos" => {
                        let ctor = match name.as_str() {
                            "exp" => Expr::Exp,
                            "log" => Expr::Log,
                            "sin" => Expr::Sin,
                            _ => Expr::Cos,
                        };
                        self.expect(Tok::LParen, "'(' after function name")?;
                        let arg = self.expr()?;
                        self.expect(Tok::RParen, "closing parenthesis")?;
                        Ok(ctor(Box::new(arg)))
                    }
                    _ => {
                        if let Some(rest) = name.strip_prefix('z') {
                            if let Ok(idx) = rest.parse::<usize>() {
                                if idx == 0 {
                                    return Err(ParseError::new(pos, "variable indices start at z1"));
                                }
                                if idx > k {
                                    return Err(ParseError::new(
                                        pos,
                                        format!("variable z{idx} exceeds order {k}"),
                                    ));
                                }
                                return Ok(Expr::VarZ(idx));
                            }
                        }
                        Err(ParseError::new(pos, format!("unknown identifier '{name}'")))
                    }
                }
            }
            Some((pos, t)) => Err(ParseError::new(*pos, format!("unexpected token {t:?}"))),
            None => Err(ParseError::new(at, "unexpected end of input")),
        }
    }
}

/// Literal (possibly negated) integer constant usable as a `PowInt` exponent.
fn as_int_exponent<T: Real>(e: &Expr<T>) -> Option<i32> {
    match e {
        Expr::Const(c) if c.im == T::zero() => {
            let r = c.re;
            if r.fract() == T::zero() && r.abs() <= T::lit(i32::MAX as f64) {
                r.to_f64().map(|x| x as i32)
            } else {
                None
            }
        }
        Expr::Neg(inner) => as_int_exponent(inner).map(|n| -n),
        _ => None,
    }
}

/// Parse `text` as an expression in `s, z1..zk`. Variables above `zk` are
/// rejected with the offending position.
pub fn parse<T: Real>(text: &str, k: usize) -> Result<Expr<T>, ParseError> {
    let toks = lex::<T>(text)?;
    let mut p = Parser { toks: &toks, pos: 0, end: text.len(), k };
    let e = p.expr()?;
    if p.pos != toks.len() {
        return Err(ParseError::new(p.here(), "unexpected trailing input"));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// printing

impl<T: Real> Expr<T> {
    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Pow(..) | Expr::PowInt(..) => 3,
            Expr::Neg(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let me = self.prec();
        if me < min {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(c) => fmt_const(f, *c),
            Expr::VarS => write!(f, "s"),
            Expr::VarZ(i) => write!(f, "z{i}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 5)
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "+")?;
                b.fmt_prec(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "-")?;
                b.fmt_prec(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)
            }
            Expr::PowInt(b, n) => {
                b.fmt_prec(f, 4)?;
                write!(f, "^{n}")
            }
            Expr::Pow(b, e) => {
                b.fmt_prec(f, 4)?;
                write!(f, "^")?;
                e.fmt_prec(f, 3)
            }
            Expr::Exp(a) => fmt_call(f, "exp", a),
            Expr::Log(a) => fmt_call(f, "log", a),
            Expr::Sin(a) => fmt_call(f, "sin", a),
            Expr::Cos(a) => fmt_call(f, "cos", a),
        }
    }
}

fn fmt_call<T: Real>(f: &mut fmt::Formatter<'_>, name: &str, a: &Expr<T>) -> fmt::Result {
    write!(f, "{name}(")?;
    a.fmt_prec(f, 0)?;
    write!(f, ")")
}

fn fmt_real<T: Real>(f: &mut fmt::Formatter<'_>, x: T) -> fmt::Result {
    // Stick to plain decimals in the range the default Display renders
    // compactly; fall back to scientific so tiny/huge constants stay short.
    let a = x.abs();
    if a == T::zero() || (a >= T::lit(1e-4) && a < T::lit(1e16)) {
        write!(f, "{x}")
    } else {
        write!(f, "{x:e}")
    }
}

fn fmt_const<T: Real>(f: &mut fmt::Formatter<'_>, c: Complex<T>) -> fmt::Result {
    if c.im == T::zero() {
        if c.re < T::zero() {
            // Parses back as Neg(Const); value-preserving, see Display docs.
            write!(f, "(-")?;
            fmt_real(f, -c.re)?;
            write!(f, ")")
        } else {
            fmt_real(f, c.re)
        }
    } else if c.re == T::zero() && c.im == T::one() {
        write!(f, "i")
    } else {
        // Synthetic complex constant: parses back to the same value as an
        // Add/Mul tree rather than a single Const node.
        write!(f, "(")?;
        fmt_const(f, Complex::new(c.re, T::zero()))?;
        write!(f, "{}", if c.im < T::zero() { "-" } else { "+" })?;
        fmt_real(f, c.im.abs())?;
        write!(f, "*i)")
    }
}

/// Prints a form `parse` accepts. For trees produced by `parse`, printing and
/// re-parsing yields a structurally identical tree; synthetic `Const` nodes
/// (negative reals, general complex values) re-parse to the same *value* as
/// an equivalent small tree.
impl<T: Real> fmt::Display for Expr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

// ---------------------------------------------------------------------------
// evaluation

impl<T: Real> Expr<T> {
    /// Largest z-index referenced, 0 if none.
    pub fn max_z_index(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::VarS => 0,
            Expr::VarZ(i) => *i,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Log(a) | Expr::Sin(a) | Expr::Cos(a) => {
                a.max_z_index()
            }
            Expr::PowInt(a, _) => a.max_z_index(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.max_z_index().max(b.max_z_index()),
        }
    }

    /// Evaluate at `(s, z)` with principal branches for `log` and non-integer
    /// powers. Panics if the tree references `z` beyond `z.len()` (arity is
    /// the caller's contract); all numeric failures return `EvalError`.
    pub fn eval(&self, s: Complex<T>, z: &[Complex<T>]) -> Result<Complex<T>, EvalError> {
        let zero = Complex::new(T::zero(), T::zero());
        let v = match self {
            Expr::Const(c) => *c,
            Expr::VarS => s,
            Expr::VarZ(i) => {
                assert!(
                    *i <= z.len(),
                    "expression references z{i} but only {} argument(s) were supplied",
                    z.len()
                );
                z[*i - 1]
            }
            Expr::Neg(a) => -a.eval(s, z)?,
            Expr::Add(a, b) => a.eval(s, z)? + b.eval(s, z)?,
            Expr::Sub(a, b) => a.eval(s, z)? - b.eval(s, z)?,
            Expr::Mul(a, b) => a.eval(s, z)? * b.eval(s, z)?,
            Expr::Div(a, b) => {
                let den = b.eval(s, z)?;
                if den == zero {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval(s, z)? / den
            }
            Expr::PowInt(b, n) => {
                let base = b.eval(s, z)?;
                if base == zero && *n < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                base.powi(*n)
            }
            Expr::Pow(b, e) => {
                let base = b.eval(s, z)?;
                if base == zero {
                    return Err(EvalError::LogOfZero);
                }
                base.powc(e.eval(s, z)?)
            }
            Expr::Exp(a) => a.eval(s, z)?.exp(),
            Expr::Log(a) => {
                let v = a.eval(s, z)?;
                if v == zero {
                    return Err(EvalError::LogOfZero);
                }
                v.ln()
            }
            Expr::Sin(a) => a.eval(s, z)?.sin(),
            Expr::Cos(a) => a.eval(s, z)?.cos(),
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Central difference partial in `z_i` (1-based): `(f(z_i + h) - f(z_i - h)) / 2h`.
    pub fn partial(
        &self,
        i: usize,
        s: Complex<T>,
        z: &[Complex<T>],
        h: T,
    ) -> Result<Complex<T>, EvalError> {
        assert!(i >= 1 && i <= z.len(), "partial index {i} out of range 1..={}", z.len());
        let mut shifted = z.to_vec();
        shifted[i - 1] = z[i - 1] + Complex::new(h, T::zero());
        let plus = self.eval(s, &shifted)?;
        shifted[i - 1] = z[i - 1] - Complex::new(h, T::zero());
        let minus = self.eval(s, &shifted)?;
        Ok((plus - minus) / Complex::new(h + h, T::zero()))
    }
}
