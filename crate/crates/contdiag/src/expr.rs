//! A small expression language for scalar functions of one variable `t`.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?
//! base   := number | 't' | func '(' expr ')' | '(' expr ')'
//!         | 'piecewise(' cond ',' expr ',' expr ')' | '-' base
//! cond   := 't' ('>=' | '<=') number
//! func   := exp | sin | cos | sqrt | abs | neg
//! ```
//!
//! `piecewise(t >= c, p, q)` evaluates `p` when the condition holds and `q`
//! otherwise. Guards make discontinuity locations explicit, which the
//! obstruction detector relies on.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
    Sqrt,
    Exp,
    Sin,
    Cos,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Abs => "abs",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Exp => "exp",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

/// Comparison used by piecewise guards; the left-hand side is always `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cond {
    pub op: CmpOp,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Ge,
    Le,
}

impl Cond {
    pub fn holds(&self, t: f64) -> bool {
        match self.op {
            CmpOp::Ge => t >= self.threshold,
            CmpOp::Le => t <= self.threshold,
        }
    }
}

/// Expression AST. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Time,
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Piecewise {
        cond: Cond,
        if_true: Box<Expr>,
        if_false: Box<Expr>,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("square root of negative value {value} at t = {t}")]
    SqrtNegative { t: f64, value: f64 },
    #[error("division by zero at t = {t}")]
    DivisionByZero { t: f64 },
    #[error("non-finite result at t = {t}")]
    NonFinite { t: f64 },
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn time() -> Expr {
        Expr::Time
    }

    pub fn unary(op: UnaryOp, inner: Expr) -> Expr {
        Expr::Unary(op, Box::new(inner))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Evaluate at `t`. Total: every domain violation is reported as an
    /// `EvalError`, never a panic or a silent NaN.
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Time => t,
            Expr::Unary(op, inner) => {
                let x = inner.eval(t)?;
                match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Abs => x.abs(),
                    UnaryOp::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::SqrtNegative { t, value: x });
                        }
                        x.sqrt()
                    }
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval(t)?;
                let b = rhs.eval(t)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero { t });
                        }
                        a / b
                    }
                    BinaryOp::Pow => pow(a, b),
                }
            }
            Expr::Piecewise {
                cond,
                if_true,
                if_false,
            } => {
                if cond.holds(t) {
                    if_true.eval(t)?
                } else {
                    if_false.eval(t)?
                }
            }
        };
        if v.is_nan() || v.is_infinite() {
            return Err(EvalError::NonFinite { t });
        }
        Ok(v)
    }

    /// Symbolic derivative with respect to `t`, when representable in the
    /// grammar. Returns `None` for non-constant exponents (no logarithm in
    /// the grammar). `abs` differentiates to `u*u'/abs(u)`, which correctly
    /// reports a domain error at zeros of `u`. Piecewise guards differentiate
    /// branchwise; at the guard point the selected branch wins.
    pub fn derivative(&self) -> Option<Expr> {
        use BinaryOp::*;
        let d = match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Time => Expr::Const(1.0),
            Expr::Unary(op, inner) => {
                let u = (**inner).clone();
                let du = inner.derivative()?;
                match op {
                    UnaryOp::Neg => Expr::unary(UnaryOp::Neg, du),
                    UnaryOp::Abs => Expr::binary(
                        Div,
                        Expr::binary(Mul, u.clone(), du),
                        Expr::unary(UnaryOp::Abs, u),
                    ),
                    UnaryOp::Sqrt => Expr::binary(
                        Div,
                        du,
                        Expr::binary(
                            Mul,
                            Expr::Const(2.0),
                            Expr::unary(UnaryOp::Sqrt, u),
                        ),
                    ),
                    UnaryOp::Exp => {
                        Expr::binary(Mul, Expr::unary(UnaryOp::Exp, u), du)
                    }
                    UnaryOp::Sin => {
                        Expr::binary(Mul, Expr::unary(UnaryOp::Cos, u), du)
                    }
                    UnaryOp::Cos => Expr::binary(
                        Mul,
                        Expr::unary(UnaryOp::Neg, Expr::unary(UnaryOp::Sin, u)),
                        du,
                    ),
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let (a, b) = ((**lhs).clone(), (**rhs).clone());
                match op {
                    Add => Expr::binary(Add, lhs.derivative()?, rhs.derivative()?),
                    Sub => Expr::binary(Sub, lhs.derivative()?, rhs.derivative()?),
                    Mul => Expr::binary(
                        Add,
                        Expr::binary(Mul, lhs.derivative()?, b.clone()),
                        Expr::binary(Mul, a, rhs.derivative()?),
                    ),
                    Div => Expr::binary(
                        Div,
                        Expr::binary(
                            Sub,
                            Expr::binary(Mul, lhs.derivative()?, b.clone()),
                            Expr::binary(Mul, a, rhs.derivative()?),
                        ),
                        Expr::binary(Pow, b, Expr::Const(2.0)),
                    ),
                    Pow => {
                        // Only constant exponents: d(a^n) = n * a^(n-1) * a'.
                        let n = match **rhs {
                            Expr::Const(n) => n,
                            _ => return None,
                        };
                        Expr::binary(
                            Mul,
                            Expr::binary(
                                Mul,
                                Expr::Const(n),
                                Expr::binary(Pow, a, Expr::Const(n - 1.0)),
                            ),
                            lhs.derivative()?,
                        )
                    }
                }
            }
            Expr::Piecewise {
                cond,
                if_true,
                if_false,
            } => Expr::Piecewise {
                cond: *cond,
                if_true: Box::new(if_true.derivative()?),
                if_false: Box::new(if_false.derivative()?),
            },
        };
        Some(d.simplified())
    }

    /// Local algebraic cleanup. Only rewrites that preserve evaluation
    /// semantics, including error cases: no `0 * x -> 0`, since `x` may
    /// carry a domain error.
    pub fn simplified(&self) -> Expr {
        match self {
            Expr::Unary(op, inner) => {
                let inner = inner.simplified();
                match (op, &inner) {
                    (UnaryOp::Neg, Expr::Const(c)) => Expr::Const(-c),
                    _ => Expr::unary(*op, inner),
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let l = lhs.simplified();
                let r = rhs.simplified();
                match (op, &l, &r) {
                    (BinaryOp::Add, Expr::Const(a), Expr::Const(b)) => Expr::Const(a + b),
                    (BinaryOp::Sub, Expr::Const(a), Expr::Const(b)) => Expr::Const(a - b),
                    (BinaryOp::Mul, Expr::Const(a), Expr::Const(b)) => Expr::Const(a * b),
                    (BinaryOp::Add, Expr::Const(c), _) if *c == 0.0 => r,
                    (BinaryOp::Add, _, Expr::Const(c)) if *c == 0.0 => l,
                    (BinaryOp::Sub, _, Expr::Const(c)) if *c == 0.0 => l,
                    (BinaryOp::Mul, Expr::Const(c), _) if *c == 1.0 => r,
                    (BinaryOp::Mul, _, Expr::Const(c)) if *c == 1.0 => l,
                    (BinaryOp::Div, _, Expr::Const(c)) if *c == 1.0 => l,
                    (BinaryOp::Pow, _, Expr::Const(c)) if *c == 1.0 => l,
                    _ => Expr::binary(*op, l, r),
                }
            }
            Expr::Piecewise {
                cond,
                if_true,
                if_false,
            } => Expr::Piecewise {
                cond: *cond,
                if_true: Box::new(if_true.simplified()),
                if_false: Box::new(if_false.simplified()),
            },
            other => other.clone(),
        }
    }

    /// Guard thresholds of every piecewise node, in source order. These are
    /// the candidate kink locations of the expression.
    pub fn guard_points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_guards(&mut out);
        out
    }

    fn collect_guards(&self, out: &mut Vec<f64>) {
        match self {
            Expr::Unary(_, inner) => inner.collect_guards(out),
            Expr::Binary(_, lhs, rhs) => {
                lhs.collect_guards(out);
                rhs.collect_guards(out);
            }
            Expr::Piecewise {
                cond,
                if_true,
                if_false,
            } => {
                out.push(cond.threshold);
                if_true.collect_guards(out);
                if_false.collect_guards(out);
            }
            _ => {}
        }
    }
}

// powf is not exact for small integer exponents on all platforms; route
// integral exponents through powi so `t^2` and friends are bit-reproducible.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{}", c),
            Expr::Time => write!(f, "t"),
            Expr::Unary(op, inner) => write!(f, "{}({})", op.name(), inner),
            Expr::Binary(op, lhs, rhs) => {
                write!(f, "({} {} {})", lhs, op.symbol(), rhs)
            }
            Expr::Piecewise {
                cond,
                if_true,
                if_false,
            } => {
                let cmp = match cond.op {
                    CmpOp::Ge => ">=",
                    CmpOp::Le => "<=",
                };
                write!(
                    f,
                    "piecewise(t {} {}, {}, {})",
                    cmp, cond.threshold, if_true, if_false
                )
            }
        }
    }
}

/// Parse `source` into an AST. Total: malformed input yields a
/// `ParseError` with the byte offset of the failure.
pub fn parse_expr(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = Expr::binary(BinaryOp::Add, acc, self.term()?);
            } else if self.eat(b'-') {
                acc = Expr::binary(BinaryOp::Sub, acc, self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = Expr::binary(BinaryOp::Mul, acc, self.factor()?);
            } else if self.eat(b'/') {
                acc = Expr::binary(BinaryOp::Div, acc, self.factor()?);
            } else {
                return Ok(acc);
            }
        }
    }

    // Right-associative: t^2^3 == t^(2^3).
    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.eat(b'^') {
            let exponent = self.factor()?;
            Ok(Expr::binary(BinaryOp::Pow, base, exponent))
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'-') => {
                self.pos += 1;
                self.skip_ws();
                // Fold a negated literal so `-1` round-trips as Const(-1).
                match self.base()? {
                    Expr::Const(c) => Ok(Expr::Const(-c)),
                    inner => Ok(Expr::unary(UnaryOp::Neg, inner)),
                }
            }
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.number().map(Expr::Const),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.err(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // `1e` followed by a non-digit: the `e` was not an exponent.
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("invalid number `{}`", text),
        })?;
        self.skip_ws();
        Ok(value)
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        self.skip_ws();
        match name.as_str() {
            "t" => Ok(Expr::Time),
            "piecewise" => self.piecewise(),
            "exp" | "sin" | "cos" | "sqrt" | "abs" | "neg" => {
                let op = match name.as_str() {
                    "exp" => UnaryOp::Exp,
                    "sin" => UnaryOp::Sin,
                    "cos" => UnaryOp::Cos,
                    "sqrt" => UnaryOp::Sqrt,
                    "abs" => UnaryOp::Abs,
                    "neg" => UnaryOp::Neg,
                    _ => unreachable!(),
                };
                self.expect(b'(')?;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::unary(op, inner))
            }
            _ => Err(ParseError::UnknownIdentifier {
                offset: start,
                name,
            }),
        }
    }

    fn piecewise(&mut self) -> Result<Expr, ParseError> {
        self.expect(b'(')?;
        if !self.eat(b't') {
            return Err(self.err("piecewise condition must start with `t`"));
        }
        let op = if self.peek() == Some(b'>') {
            self.pos += 1;
            self.expect(b'=')?;
            CmpOp::Ge
        } else if self.peek() == Some(b'<') {
            self.pos += 1;
            self.expect(b'=')?;
            CmpOp::Le
        } else {
            return Err(self.err("expected `>=` or `<=`"));
        };
        let negative = self.eat(b'-');
        let mut threshold = self.number()?;
        if negative {
            threshold = -threshold;
        }
        self.expect(b',')?;
        let if_true = self.expr()?;
        self.expect(b',')?;
        let if_false = self.expr()?;
        self.expect(b')')?;
        Ok(Expr::Piecewise {
            cond: Cond { op, threshold },
            if_true: Box::new(if_true),
            if_false: Box::new(if_false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bare_variable() {
        assert_eq!(parse_expr("t").unwrap(), Expr::Time);
    }

    #[test]
    fn evaluates_composed_expression() {
        // exp(-1/t^2) at t = 1 is e^-1.
        let e = parse_expr("exp(-1/t^2)").unwrap();
        let v = e.eval(1.0).unwrap();
        assert!((v - 0.36787944117144233).abs() < 1e-16);
    }

    #[test]
    fn piecewise_selects_branch() {
        let e = parse_expr("piecewise(t>=0, t, 0)").unwrap();
        assert_eq!(e.eval(-0.5).unwrap(), 0.0);
        assert_eq!(e.eval(0.5).unwrap(), 0.5);
        assert_eq!(e.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn piecewise_negative_threshold() {
        let e = parse_expr("piecewise(t <= -0.25, 1, 2)").unwrap();
        assert_eq!(e.eval(-0.5).unwrap(), 1.0);
        assert_eq!(e.eval(0.0).unwrap(), 2.0);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = parse_expr("1/t").unwrap();
        assert!(matches!(e.eval(0.0), Err(EvalError::DivisionByZero { .. })));
    }

    #[test]
    fn sqrt_of_negative_is_an_error() {
        let e = parse_expr("sqrt(t)").unwrap();
        assert!(matches!(
            e.eval(-1.0),
            Err(EvalError::SqrtNegative { .. })
        ));
    }

    #[test]
    fn syntax_error_carries_offset() {
        match parse_expr("t + ") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {:?}", other),
        }
        match parse_expr("sin(q)") {
            Err(ParseError::UnknownIdentifier { offset, name }) => {
                assert_eq!(offset, 4);
                assert_eq!(name, "q");
            }
            other => panic!("expected unknown identifier, got {:?}", other),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("1 + 2 * t ^ 2").unwrap();
        assert_eq!(e.eval(3.0).unwrap(), 19.0);
        // Right-associative power.
        let e = parse_expr("t^2^3").unwrap();
        assert_eq!(e.eval(2.0).unwrap(), 256.0);
    }

    #[test]
    fn derivative_of_polynomial() {
        let e = parse_expr("t^2").unwrap();
        let d = e.derivative().unwrap();
        assert_eq!(d.eval(1.0).unwrap(), 2.0);
        assert_eq!(d.eval(-3.0).unwrap(), -6.0);
    }

    #[test]
    fn derivative_of_trig_product() {
        let e = parse_expr("sin(t)*cos(t)").unwrap();
        let d = e.derivative().unwrap();
        // (sin cos)' = cos^2 - sin^2 = cos(2t)
        let t = 0.37;
        assert!((d.eval(t).unwrap() - (2.0 * t).cos()).abs() < 1e-14);
    }

    #[test]
    fn derivative_unavailable_for_variable_exponent() {
        let e = parse_expr("t^t").unwrap();
        assert!(e.derivative().is_none());
    }

    #[test]
    fn smooth_bump_evaluates_at_origin_via_guards() {
        // phi(t) = exp(-1/t^2) for t != 0, 0 at t = 0.
        let phi =
            parse_expr("piecewise(t<=0, piecewise(t>=0, 0, exp(-1/t^2)), exp(-1/t^2))").unwrap();
        assert_eq!(phi.eval(0.0).unwrap(), 0.0);
        assert!((phi.eval(0.5).unwrap() - (-4.0f64).exp()).abs() < 1e-18);
        assert!((phi.eval(-0.5).unwrap() - (-4.0f64).exp()).abs() < 1e-18);
        // Its symbolic derivative is also defined at the origin.
        let d = phi.derivative().unwrap();
        assert_eq!(d.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn roundtrip_corpus() {
        let corpus = [
            "t",
            "1",
            "-1",
            "1.5e-3",
            "t + 2",
            "t - 2 * t",
            "exp(-1/t^2)",
            "sin(t)*cos(t) + sqrt(abs(t))",
            "piecewise(t>=0, t, 0)",
            "piecewise(t<=-0.5, neg(t), t^3)",
            "(t + 1) / (t - 2)",
            "2 ^ t ^ 2",
        ];
        for src in corpus {
            let ast = parse_expr(src).unwrap();
            let printed = ast.to_string();
            let reparsed = parse_expr(&printed)
                .unwrap_or_else(|e| panic!("reparse of `{}` failed: {}", printed, e));
            assert_eq!(ast, reparsed, "round-trip changed `{}` -> `{}`", src, printed);
        }
    }
}
