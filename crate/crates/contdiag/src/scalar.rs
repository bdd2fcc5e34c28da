//! Scalar function tracks on a compact interval, and the 2x2 hermitian
//! matrix field they assemble into.
//!
//! A [`ScalarTrack`] is a real-valued function of `t` on `[a, b]`, backed
//! either by an expression AST or by a uniformly sampled table (linear
//! interpolation). Tracks carry optional analytic derivatives; everything
//! else falls back to central finite differences.

use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{parse_expr, EvalError, Expr, ParseError};

/// Relative finite-difference step: dt = (b - a) * 1e-6.
pub const DEFAULT_FD_STEP_FACTOR: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("t = {t} outside domain [{a}, {b}]")]
    OutOfDomain { t: f64, a: f64, b: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("sample table length {got} does not match grid size {want}")]
    SampleLength { got: usize, want: usize },
    #[error("tracks do not share the same interval")]
    IntervalMismatch,
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
    #[error("numerical degeneracy at t = {t}: {detail}")]
    Degenerate { t: f64, detail: String },
}

/// Closed interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Interval, TrackError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(TrackError::BadGrid(format!(
                "interval requires finite a < b, got [{}, {}]",
                a, b
            )));
        }
        Ok(Interval { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.a && t <= self.b
    }

    /// Accept values a few ulps outside the interval (endpoint arithmetic
    /// noise) by clamping; reject anything further out.
    pub fn admit(&self, t: f64) -> Result<f64, TrackError> {
        if self.contains(t) {
            return Ok(t);
        }
        let scale = 1.0 + self.a.abs().max(self.b.abs()) + t.abs();
        if t > self.a - 8.0 * f64::EPSILON * scale && t < self.b + 8.0 * f64::EPSILON * scale {
            return Ok(t.clamp(self.a, self.b));
        }
        Err(TrackError::OutOfDomain {
            t,
            a: self.a,
            b: self.b,
        })
    }

    pub fn default_fd_step(&self) -> f64 {
        self.length() * DEFAULT_FD_STEP_FACTOR
    }
}

/// Uniform grid `t_i = a + i (b - a) / (n - 1)`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    interval: Interval,
    n: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Grid, TrackError> {
        let interval = Interval::new(a, b)?;
        if n < 2 {
            return Err(TrackError::BadGrid(format!("need n >= 2 points, got {}", n)));
        }
        Ok(Grid { interval, n })
    }

    pub fn over(interval: Interval, n: usize) -> Result<Grid, TrackError> {
        Grid::new(interval.a, interval.b, n)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn spacing(&self) -> f64 {
        self.interval.length() / (self.n - 1) as f64
    }

    /// Exact at both endpoints: `point(0) == a`, `point(n-1) == b`.
    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        if i == 0 {
            self.interval.a
        } else if i == self.n - 1 {
            self.interval.b
        } else {
            self.interval.a + i as f64 * self.interval.length() / (self.n - 1) as f64
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    /// Index of the grid interval containing t: largest i with point(i) <= t,
    /// clamped to n-2 so [i, i+1] is always valid.
    pub fn cell_of(&self, t: f64) -> usize {
        let raw = ((t - self.interval.a) / self.spacing()).floor();
        (raw.max(0.0) as usize).min(self.n - 2)
    }
}

/// Anything that behaves like a scalar function of t on an interval.
/// Implemented by [`ScalarTrack`] and by derived quantities in the
/// diagonalization pipeline (for example `f - lambda`).
pub trait ScalarField: Send + Sync {
    fn interval(&self) -> Interval;

    fn eval(&self, t: f64) -> Result<f64, TrackError>;

    /// Derivative at t. Default: central finite difference with step `dt`,
    /// one-sided at the endpoints.
    fn derivative_at(&self, t: f64, dt: f64) -> Result<f64, TrackError> {
        fd_derivative(&|x| self.eval(x), self.interval(), t, dt)
    }
}

/// Central finite difference, one-sided at endpoints, step shrunk to stay
/// inside the domain.
pub(crate) fn fd_derivative(
    eval: &dyn Fn(f64) -> Result<f64, TrackError>,
    iv: Interval,
    t: f64,
    dt: f64,
) -> Result<f64, TrackError> {
    if !(dt > 0.0) {
        return Err(TrackError::BadStep(dt));
    }
    let t = iv.admit(t)?;
    let left_room = t - iv.a;
    let right_room = iv.b - t;
    let h = dt.min(iv.length() / 2.0);
    if left_room >= h && right_room >= h {
        let fp = eval(t + h)?;
        let fm = eval(t - h)?;
        Ok((fp - fm) / (2.0 * h))
    } else if right_room >= left_room {
        // One-sided, second order: (-3 f(t) + 4 f(t+h) - f(t+2h)) / (2h)
        let h = h.min(right_room / 2.0).max(f64::MIN_POSITIVE);
        let f0 = eval(t)?;
        let f1 = eval(t + h)?;
        let f2 = eval(t + 2.0 * h)?;
        Ok((-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h))
    } else {
        let h = h.min(left_room / 2.0).max(f64::MIN_POSITIVE);
        let f0 = eval(t)?;
        let f1 = eval(t - h)?;
        let f2 = eval(t - 2.0 * h)?;
        Ok((3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrackBody {
    Expr(Expr),
    Samples { grid: Grid, values: Vec<f64> },
}

/// How the derivative of a track is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum DerivativeSpec {
    Analytic(Expr),
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTrack {
    interval: Interval,
    body: TrackBody,
    derivative: DerivativeSpec,
}

impl ScalarTrack {
    /// Build from an expression; the analytic derivative is attached when
    /// the grammar can represent it.
    pub fn from_expr(expr: Expr, interval: Interval) -> ScalarTrack {
        let derivative = match expr.derivative() {
            Some(d) => DerivativeSpec::Analytic(d),
            None => DerivativeSpec::FiniteDifference,
        };
        ScalarTrack {
            interval,
            body: TrackBody::Expr(expr),
            derivative,
        }
    }

    pub fn parse(source: &str, interval: Interval) -> Result<ScalarTrack, TrackError> {
        Ok(ScalarTrack::from_expr(parse_expr(source)?, interval))
    }

    pub fn constant(c: f64, interval: Interval) -> ScalarTrack {
        ScalarTrack::from_expr(Expr::constant(c), interval)
    }

    pub fn from_samples(grid: Grid, values: Vec<f64>) -> Result<ScalarTrack, TrackError> {
        if values.len() != grid.len() {
            return Err(TrackError::SampleLength {
                got: values.len(),
                want: grid.len(),
            });
        }
        Ok(ScalarTrack {
            interval: grid.interval(),
            body: TrackBody::Samples { grid, values },
            derivative: DerivativeSpec::FiniteDifference,
        })
    }

    /// Replace the derivative spec (e.g. force finite differences).
    pub fn with_derivative(mut self, spec: DerivativeSpec) -> ScalarTrack {
        self.derivative = spec;
        self
    }

    pub fn body(&self) -> &TrackBody {
        &self.body
    }

    pub fn derivative_spec(&self) -> &DerivativeSpec {
        &self.derivative
    }

    pub fn has_analytic_derivative(&self) -> bool {
        matches!(self.derivative, DerivativeSpec::Analytic(_))
    }

    /// Guard thresholds of the underlying expression that fall strictly
    /// inside the domain (candidate kink locations). Empty for samples.
    pub fn interior_guard_points(&self) -> Vec<f64> {
        match &self.body {
            TrackBody::Expr(e) => e
                .guard_points()
                .into_iter()
                .filter(|&c| c > self.interval.a && c < self.interval.b)
                .collect(),
            TrackBody::Samples { .. } => Vec::new(),
        }
    }
}

impl ScalarField for ScalarTrack {
    fn interval(&self) -> Interval {
        self.interval
    }

    fn eval(&self, t: f64) -> Result<f64, TrackError> {
        let t = self.interval.admit(t)?;
        match &self.body {
            TrackBody::Expr(e) => Ok(e.eval(t)?),
            TrackBody::Samples { grid, values } => {
                let i = grid.cell_of(t);
                let (t0, t1) = (grid.point(i), grid.point(i + 1));
                // Bit-exact at grid nodes.
                if t == t0 {
                    return Ok(values[i]);
                }
                if t == t1 {
                    return Ok(values[i + 1]);
                }
                let w = (t - t0) / (t1 - t0);
                Ok(values[i] + w * (values[i + 1] - values[i]))
            }
        }
    }

    fn derivative_at(&self, t: f64, dt: f64) -> Result<f64, TrackError> {
        match &self.derivative {
            DerivativeSpec::Analytic(d) => {
                let t = self.interval.admit(t)?;
                Ok(d.eval(t)?)
            }
            DerivativeSpec::FiniteDifference => {
                fd_derivative(&|x| self.eval(x), self.interval, t, dt)
            }
        }
    }
}

impl<S: ScalarField + ?Sized> ScalarField for &S {
    fn interval(&self) -> Interval {
        (**self).interval()
    }
    fn eval(&self, t: f64) -> Result<f64, TrackError> {
        (**self).eval(t)
    }
    fn derivative_at(&self, t: f64, dt: f64) -> Result<f64, TrackError> {
        (**self).derivative_at(t, dt)
    }
}

impl ScalarField for std::sync::Arc<dyn ScalarField> {
    fn interval(&self) -> Interval {
        (**self).interval()
    }
    fn eval(&self, t: f64) -> Result<f64, TrackError> {
        (**self).eval(t)
    }
    fn derivative_at(&self, t: f64, dt: f64) -> Result<f64, TrackError> {
        (**self).derivative_at(t, dt)
    }
}

/// `c * track`, with derivative scaled accordingly.
pub struct Scaled<S> {
    pub factor: f64,
    pub inner: S,
}

impl<S: ScalarField> ScalarField for Scaled<S> {
    fn interval(&self) -> Interval {
        self.inner.interval()
    }
    fn eval(&self, t: f64) -> Result<f64, TrackError> {
        Ok(self.factor * self.inner.eval(t)?)
    }
    fn derivative_at(&self, t: f64, dt: f64) -> Result<f64, TrackError> {
        Ok(self.factor * self.inner.derivative_at(t, dt)?)
    }
}

/// `lhs - rhs` of two scalar fields on the same interval.
pub struct Difference<A, B> {
    pub lhs: A,
    pub rhs: B,
}

impl<A: ScalarField, B: ScalarField> ScalarField for Difference<A, B> {
    fn interval(&self) -> Interval {
        self.lhs.interval()
    }
    fn eval(&self, t: f64) -> Result<f64, TrackError> {
        Ok(self.lhs.eval(t)? - self.rhs.eval(t)?)
    }
    fn derivative_at(&self, t: f64, dt: f64) -> Result<f64, TrackError> {
        Ok(self.lhs.derivative_at(t, dt)? - self.rhs.derivative_at(t, dt)?)
    }
}

/// Value of a 2x2 hermitian matrix at one parameter value:
/// `[[f, h], [conj(h), g]]` with real `f`, `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Herm2 {
    pub f: f64,
    pub g: f64,
    pub h: Complex64,
}

impl Herm2 {
    pub fn new(f: f64, g: f64, h: Complex64) -> Herm2 {
        Herm2 { f, g, h }
    }

    pub fn trace(&self) -> f64 {
        self.f + self.g
    }

    pub fn det(&self) -> f64 {
        self.f * self.g - self.h.norm_sqr()
    }

    /// `(f - g)^2 + 4 |h|^2`: the squared eigenvalue gap.
    pub fn discriminant(&self) -> f64 {
        let d = self.f - self.g;
        d * d + 4.0 * self.h.norm_sqr()
    }

    pub fn gap(&self) -> f64 {
        self.discriminant().max(0.0).sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.f * self.f + self.g * self.g + 2.0 * self.h.norm_sqr()).sqrt()
    }

    /// `A - s I`.
    pub fn shift(&self, s: f64) -> Herm2 {
        Herm2::new(self.f - s, self.g - s, self.h)
    }

    /// `A / s` for real nonzero `s` (stays hermitian).
    pub fn scale(&self, s: f64) -> Herm2 {
        Herm2::new(self.f / s, self.g / s, self.h / s)
    }

    /// Entrywise difference (still hermitian).
    pub fn sub(&self, other: &Herm2) -> Herm2 {
        Herm2::new(self.f - other.f, self.g - other.g, self.h - other.h)
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.f * v[0] + self.h * v[1],
            self.h.conj() * v[0] + self.g * v[1],
        ]
    }

    /// Frobenius distance to another hermitian value.
    pub fn distance(&self, other: &Herm2) -> f64 {
        let df = self.f - other.f;
        let dg = self.g - other.g;
        let dh = self.h - other.h;
        (df * df + dg * dg + 2.0 * dh.norm_sqr()).sqrt()
    }
}

/// A 2x2 hermitian matrix-valued function of t, evaluable anywhere on its
/// interval. The diagonalization machinery is generic over this so it can
/// run both on raw [`HermitianField`]s and on derived fields (the
/// normalized `C(t)` of the degenerate pipeline).
pub trait MatrixField: Send + Sync {
    fn interval(&self) -> Interval;
    fn at(&self, t: f64) -> Result<Herm2, TrackError>;

    /// Entrywise derivative at t (finite differences unless the
    /// implementation has something better).
    fn derivative_at(&self, t: f64, dt: f64) -> Result<Herm2, TrackError> {
        let iv = self.interval();
        let f = fd_derivative(&|x| Ok(self.at(x)?.f), iv, t, dt)?;
        let g = fd_derivative(&|x| Ok(self.at(x)?.g), iv, t, dt)?;
        let hr = fd_derivative(&|x| Ok(self.at(x)?.h.re), iv, t, dt)?;
        let hi = fd_derivative(&|x| Ok(self.at(x)?.h.im), iv, t, dt)?;
        Ok(Herm2::new(f, g, Complex64::new(hr, hi)))
    }
}

impl<M: MatrixField + ?Sized> MatrixField for &M {
    fn interval(&self) -> Interval {
        (**self).interval()
    }
    fn at(&self, t: f64) -> Result<Herm2, TrackError> {
        (**self).at(t)
    }
    fn derivative_at(&self, t: f64, dt: f64) -> Result<Herm2, TrackError> {
        (**self).derivative_at(t, dt)
    }
}

/// The quadruple `(f, g, h_re, h_im)` defining `A(t)`.
#[derive(Debug, Clone)]
pub struct HermitianField {
    pub f: ScalarTrack,
    pub g: ScalarTrack,
    pub h_re: ScalarTrack,
    pub h_im: ScalarTrack,
    interval: Interval,
}

impl HermitianField {
    pub fn new(
        f: ScalarTrack,
        g: ScalarTrack,
        h_re: ScalarTrack,
        h_im: ScalarTrack,
    ) -> Result<HermitianField, TrackError> {
        let interval = f.interval();
        for track in [&g, &h_re, &h_im] {
            if track.interval() != interval {
                return Err(TrackError::IntervalMismatch);
            }
        }
        Ok(HermitianField {
            f,
            g,
            h_re,
            h_im,
            interval,
        })
    }

    pub fn from_exprs(
        f: &str,
        g: &str,
        h_re: &str,
        h_im: &str,
        interval: Interval,
    ) -> Result<HermitianField, TrackError> {
        HermitianField::new(
            ScalarTrack::parse(f, interval)?,
            ScalarTrack::parse(g, interval)?,
            ScalarTrack::parse(h_re, interval)?,
            ScalarTrack::parse(h_im, interval)?,
        )
    }

    /// Build sample-backed tracks from rows `(t, f, g, h_re, h_im)` on a
    /// uniform grid.
    pub fn from_samples(rows: &[(f64, f64, f64, f64, f64)]) -> Result<HermitianField, TrackError> {
        if rows.len() < 2 {
            return Err(TrackError::BadGrid(
                "need at least two sample rows".to_string(),
            ));
        }
        let a = rows[0].0;
        let b = rows[rows.len() - 1].0;
        let grid = Grid::new(a, b, rows.len())?;
        let spacing = grid.spacing();
        for (i, row) in rows.iter().enumerate() {
            if (row.0 - grid.point(i)).abs() > 1e-9 * (1.0 + spacing.abs()) {
                return Err(TrackError::BadGrid(format!(
                    "sample abscissae must be uniform; row {} has t = {}, expected {}",
                    i,
                    row.0,
                    grid.point(i)
                )));
            }
        }
        let col = |pick: fn(&(f64, f64, f64, f64, f64)) -> f64| -> Vec<f64> {
            rows.iter().map(pick).collect()
        };
        HermitianField::new(
            ScalarTrack::from_samples(grid.clone(), col(|r| r.1))?,
            ScalarTrack::from_samples(grid.clone(), col(|r| r.2))?,
            ScalarTrack::from_samples(grid.clone(), col(|r| r.3))?,
            ScalarTrack::from_samples(grid, col(|r| r.4))?,
        )
    }

    /// True when the field is real-symmetric (h_im identically zero can
    /// only be certified for expression bodies; sample tables are checked
    /// pointwise by callers that care).
    pub fn tracks(&self) -> [&ScalarTrack; 4] {
        [&self.f, &self.g, &self.h_re, &self.h_im]
    }

    /// Interior guard points collected across all four tracks, sorted and
    /// deduplicated. These are where expression-backed fields may kink.
    pub fn interior_guard_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .tracks()
            .iter()
            .flat_map(|t| t.interior_guard_points())
            .collect();
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup();
        pts
    }
}

impl MatrixField for HermitianField {
    fn interval(&self) -> Interval {
        self.interval
    }

    fn at(&self, t: f64) -> Result<Herm2, TrackError> {
        Ok(Herm2::new(
            self.f.eval(t)?,
            self.g.eval(t)?,
            Complex64::new(self.h_re.eval(t)?, self.h_im.eval(t)?),
        ))
    }

    fn derivative_at(&self, t: f64, dt: f64) -> Result<Herm2, TrackError> {
        Ok(Herm2::new(
            self.f.derivative_at(t, dt)?,
            self.g.derivative_at(t, dt)?,
            Complex64::new(
                self.h_re.derivative_at(t, dt)?,
                self.h_im.derivative_at(t, dt)?,
            ),
        ))
    }
}
