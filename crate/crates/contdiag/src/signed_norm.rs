//! Signed smoothing of a vector norm.
//!
//! Given a continuously differentiable vector track `v` on `[a, b]` that
//! vanishes at finitely many interior points, there is a continuously
//! differentiable scalar `mu` with `|mu(t)| = ||v(t)||_2`: flip the sign of
//! the norm across each zero. The one-sided derivatives of `||v||` at a
//! zero are `+-||v'(t_i)||`, so the sign flip makes them agree.
//!
//! Sign convention: the first segment carries sign `(-1)^1 = -1`. The
//! global sign is a free choice (`mu` and `-mu` both work); fixing the
//! proof's convention keeps outputs reproducible.

use std::sync::Arc;

use thiserror::Error;

use crate::scalar::{Grid, Interval, ScalarField, ScalarTrack, TrackError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error("zeros must be strictly increasing and inside the open interval; offending value {0}")]
    UnsortedZeros(f64),
    #[error("||v({t})|| = {norm} exceeds the zero tolerance {tol}")]
    ZeroNotOnTrack { t: f64, norm: f64, tol: f64 },
    #[error("components must share one interval")]
    IntervalMismatch,
    #[error("vector track needs at least one component")]
    Empty,
    #[error("step dt = {dt} is not usable: must be positive and smaller than half the minimum gap between zeros and endpoints (= {limit})")]
    BadStep { dt: f64, limit: f64 },
}

/// A vector-valued function of t with [`ScalarField`] components.
pub struct VectorTrack {
    components: Vec<Arc<dyn ScalarField>>,
    interval: Interval,
}

impl VectorTrack {
    pub fn new(components: Vec<Arc<dyn ScalarField>>) -> Result<VectorTrack, NormError> {
        let first = components.first().ok_or(NormError::Empty)?;
        let interval = first.interval();
        if components.iter().any(|c| c.interval() != interval) {
            return Err(NormError::IntervalMismatch);
        }
        Ok(VectorTrack {
            components,
            interval,
        })
    }

    pub fn from_tracks(tracks: Vec<ScalarTrack>) -> Result<VectorTrack, NormError> {
        VectorTrack::new(
            tracks
                .into_iter()
                .map(|t| Arc::new(t) as Arc<dyn ScalarField>)
                .collect(),
        )
    }

    /// Parse one expression per component, all on the same interval.
    pub fn parse(sources: &[&str], interval: Interval) -> Result<VectorTrack, NormError> {
        let tracks = sources
            .iter()
            .map(|s| ScalarTrack::parse(s, interval))
            .collect::<Result<Vec<_>, _>>()?;
        VectorTrack::from_tracks(tracks)
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>, TrackError> {
        self.components.iter().map(|c| c.eval(t)).collect()
    }

    pub fn derivative(&self, t: f64, dt: f64) -> Result<Vec<f64>, TrackError> {
        self.components
            .iter()
            .map(|c| c.derivative_at(t, dt))
            .collect()
    }

    pub fn norm_at(&self, t: f64) -> Result<f64, TrackError> {
        let v = self.eval(t)?;
        Ok(norm(&v))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The signed magnitude: `mu(t) = sign(segment) * ||v(t)||_2` with the sign
/// alternating across the listed interior zeros.
pub struct SignedMagnitude {
    zeros: Vec<f64>,
    base: VectorTrack,
}

impl SignedMagnitude {
    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn base(&self) -> &VectorTrack {
        &self.base
    }

    pub fn interval(&self) -> Interval {
        self.base.interval()
    }

    /// 0-based index of the segment containing t. A query exactly at a zero
    /// belongs to the right segment; `mu` is 0 there either way.
    pub fn segment_index(&self, t: f64) -> usize {
        self.zeros.partition_point(|&z| z <= t)
    }

    /// Sign of segment k: `(-1)^(k+1)`, so the first segment is negative.
    /// With no interior zeros there is nothing to flip across and
    /// `mu = +||v||`.
    pub fn segment_sign(&self, k: usize) -> f64 {
        if self.zeros.is_empty() {
            1.0
        } else if k % 2 == 0 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, TrackError> {
        let s = self.segment_sign(self.segment_index(t));
        Ok(s * self.base.norm_at(t)?)
    }

    /// Derivative of mu. Away from zeros this is
    /// `sign * (v . v') / ||v||`; at a zero the continuous limit
    /// `sign_right * ||v'(t)||` is used.
    pub fn derivative_at(&self, t: f64, dt: f64) -> Result<f64, TrackError> {
        let v = self.base.eval(t)?;
        let vp = self.base.derivative(t, dt)?;
        let n = norm(&v);
        if n == 0.0 {
            let s = self.segment_sign(self.segment_index(t));
            return Ok(s * norm(&vp));
        }
        let s = self.segment_sign(self.segment_index(t));
        Ok(s * dot(&v, &vp) / n)
    }
}

impl ScalarField for SignedMagnitude {
    fn interval(&self) -> Interval {
        self.base.interval()
    }
    fn eval(&self, t: f64) -> Result<f64, TrackError> {
        SignedMagnitude::eval(self, t)
    }
    fn derivative_at(&self, t: f64, dt: f64) -> Result<f64, TrackError> {
        SignedMagnitude::derivative_at(self, t, dt)
    }
}

/// Build the signed magnitude for `v` with the given interior zeros.
///
/// `tol_zero` defaults to `1e-8 * (1 + max ||v||)` with the maximum taken
/// over a fixed 1025-point scan. Endpoint zeros must not be listed; whether
/// `v` vanishes at an endpoint is irrelevant to the construction.
pub fn build_signed_norm(
    v: VectorTrack,
    zeros: &[f64],
    tol_zero: Option<f64>,
) -> Result<SignedMagnitude, NormError> {
    let iv = v.interval();
    for (i, &z) in zeros.iter().enumerate() {
        if !(z > iv.a && z < iv.b) {
            return Err(NormError::UnsortedZeros(z));
        }
        if i > 0 && !(z > zeros[i - 1]) {
            return Err(NormError::UnsortedZeros(z));
        }
    }
    let tol = match tol_zero {
        Some(t) => t,
        None => {
            let grid = Grid::over(iv, 1025).expect("interval is valid");
            let mut max_norm: f64 = 0.0;
            for t in grid.points() {
                max_norm = max_norm.max(v.norm_at(t)?);
            }
            1e-8 * (1.0 + max_norm)
        }
    };
    for &z in zeros {
        let n = v.norm_at(z)?;
        if n > tol {
            return Err(NormError::ZeroNotOnTrack {
                t: z,
                norm: n,
                tol,
            });
        }
    }
    Ok(SignedMagnitude {
        zeros: zeros.to_vec(),
        base: v,
    })
}

/// One-sided derivative estimates of mu at one zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroLimits {
    pub zero: f64,
    pub left: f64,
    pub right: f64,
    /// |left - right|; near zero when mu is C^1 across the flip.
    pub jump: f64,
    /// Reference value `||v'(zero)||_2`; the one-sided limits of d|v|/dt
    /// are plus/minus this.
    pub norm_vprime: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DerivativeCheck {
    pub max_jump: f64,
    pub per_zero: Vec<ZeroLimits>,
}

/// Estimate one-sided derivatives of mu at each zero with second-order
/// one-sided stencils and report the mismatch. Diagnostic only.
pub fn mu_derivative_check(
    m: &SignedMagnitude,
    dt: f64,
) -> Result<DerivativeCheck, NormError> {
    let iv = m.interval();
    let mut limit = f64::INFINITY;
    let zs = m.zeros();
    for (i, &z) in zs.iter().enumerate() {
        let left_gap = if i == 0 { z - iv.a } else { z - zs[i - 1] };
        let right_gap = if i + 1 == zs.len() { iv.b - z } else { zs[i + 1] - z };
        limit = limit.min(left_gap / 2.0).min(right_gap / 2.0);
    }
    if !zs.is_empty() && !(dt > 0.0 && 2.0 * dt < limit) {
        return Err(NormError::BadStep { dt, limit });
    }

    let mut out = DerivativeCheck::default();
    for &z in zs {
        let mu0 = m.eval(z)?;
        let right = (-3.0 * mu0 + 4.0 * m.eval(z + dt)? - m.eval(z + 2.0 * dt)?) / (2.0 * dt);
        let left = (3.0 * mu0 - 4.0 * m.eval(z - dt)? + m.eval(z - 2.0 * dt)?) / (2.0 * dt);
        let vp = m.base().derivative(z, dt)?;
        let lim = ZeroLimits {
            zero: z,
            left,
            right,
            jump: (left - right).abs(),
            norm_vprime: norm(&vp),
        };
        out.max_jump = out.max_jump.max(lim.jump);
        out.per_zero.push(lim);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv() -> Interval {
        Interval::new(-1.0, 1.0).unwrap()
    }

    #[test]
    fn linear_component_flips_sign() {
        let v = VectorTrack::parse(&["t"], iv()).unwrap();
        let mu = build_signed_norm(v, &[0.0], None).unwrap();
        // First segment sign is -1: mu(t) = -|t| = t for t < 0, and +|t| = t
        // for t > 0, so mu is just t.
        assert!((mu.eval(-0.5).unwrap() + 0.5).abs() < 1e-15);
        assert!((mu.eval(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(mu.eval(0.0).unwrap(), 0.0);
        let check = mu_derivative_check(&mu, 1e-5).unwrap();
        assert!(check.max_jump <= 1e-6, "jump {}", check.max_jump);
        assert!((check.per_zero[0].norm_vprime - 1.0).abs() < 1e-9);
    }

    #[test]
    fn never_vanishing_track_keeps_plain_norm() {
        let v = VectorTrack::parse(&["1 + t^2"], iv()).unwrap();
        let mu = build_signed_norm(v, &[], None).unwrap();
        // Empty zero list: mu = +||v||.
        assert!((mu.eval(0.5).unwrap() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn two_component_track_signs() {
        let v = VectorTrack::parse(&["t", "t^3"], iv()).unwrap();
        let mu = build_signed_norm(v, &[0.0], None).unwrap();
        let root2 = 2.0f64.sqrt();
        assert!((mu.eval(-1.0).unwrap() + root2).abs() < 1e-14);
        assert!((mu.eval(1.0).unwrap() - root2).abs() < 1e-14);
    }

    #[test]
    fn vanishing_derivative_zero() {
        // v = (t^2): v'(0) = 0, one-sided limits both 0.
        let v = VectorTrack::parse(&["t^2"], iv()).unwrap();
        let mu = build_signed_norm(v, &[0.0], None).unwrap();
        let check = mu_derivative_check(&mu, 1e-5).unwrap();
        assert!(check.max_jump <= 1e-6, "jump {}", check.max_jump);
        assert!(check.per_zero[0].norm_vprime.abs() < 1e-9);
    }

    #[test]
    fn sine_zero_has_unit_limits() {
        let v = VectorTrack::parse(&["sin(t)"], iv()).unwrap();
        let mu = build_signed_norm(v, &[0.0], None).unwrap();
        let check = mu_derivative_check(&mu, 1e-5).unwrap();
        assert!(check.max_jump <= 1e-6, "jump {}", check.max_jump);
        assert!((check.per_zero[0].left.abs() - 1.0).abs() < 1e-6);
        assert!((check.per_zero[0].right.abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_unsorted_or_exterior_zeros() {
        let v = VectorTrack::parse(&["t"], iv()).unwrap();
        assert!(matches!(
            build_signed_norm(v, &[0.5, 0.25], None),
            Err(NormError::UnsortedZeros(_))
        ));
        let v = VectorTrack::parse(&["t"], iv()).unwrap();
        assert!(matches!(
            build_signed_norm(v, &[-1.0], None),
            Err(NormError::UnsortedZeros(_))
        ));
    }

    #[test]
    fn rejects_zero_not_on_track() {
        let v = VectorTrack::parse(&["1 + t^2"], iv()).unwrap();
        assert!(matches!(
            build_signed_norm(v, &[0.0], None),
            Err(NormError::ZeroNotOnTrack { .. })
        ));
    }

    #[test]
    fn exactness_of_squared_magnitude() {
        let v = VectorTrack::parse(&["sin(t)", "0.5*t"], iv()).unwrap();
        let mu = build_signed_norm(v, &[0.0], None).unwrap();
        let grid = Grid::new(-1.0, 1.0, 257).unwrap();
        for t in grid.points() {
            let m = mu.eval(t).unwrap();
            let n2: f64 = mu
                .base()
                .eval(t)
                .unwrap()
                .iter()
                .map(|x| x * x)
                .sum();
            let scale = n2.abs().max(f64::MIN_POSITIVE);
            assert!((m * m - n2).abs() <= 4.0 * f64::EPSILON * scale);
        }
    }

    #[test]
    fn derivative_matches_limit_at_zero() {
        let v = VectorTrack::parse(&["t", "t^3"], iv()).unwrap();
        let mu = build_signed_norm(v, &[0.0], None).unwrap();
        // Right segment has sign +1; limit is +||v'(0)|| = 1.
        let d = mu.derivative_at(0.0, 1e-6).unwrap();
        assert!((d - 1.0).abs() < 1e-9, "got {}", d);
    }

    #[test]
    fn step_validation() {
        let v = VectorTrack::parse(&["t"], iv()).unwrap();
        let mu = build_signed_norm(v, &[0.0], None).unwrap();
        assert!(matches!(
            mu_derivative_check(&mu, 0.5),
            Err(NormError::BadStep { .. })
        ));
    }
}
