//! Closed-form eigenvalues of the 2x2 hermitian field, coalescence
//! detection, and pointwise classification.
//!
//! The two eigenvalue branches are
//!
//! ```text
//! lambda_pm(t) = [ f + g +- sqrt((f - g)^2 + 4|h|^2) ] / 2
//! ```
//!
//! and they coincide at t exactly when `A(t)` is a scalar multiple of the
//! identity.

use thiserror::Error;

use crate::expr::{BinaryOp, Expr};
use crate::numeric::golden_min;
use crate::scalar::{Grid, Herm2, HermitianField, MatrixField, ScalarTrack, TrackError};

/// Discriminant values in `[-NEG_DISC_CLAMP, 0)` are treated as rounding
/// noise and clamped to zero before the square root.
pub const NEG_DISC_CLAMP: f64 = 1e-15;

/// Default tolerance on the discriminant for coalescence detection; the
/// corresponding eigenvalue-gap tolerance is its square root (1e-10).
pub const DEFAULT_TOL_DISC: f64 = 1e-20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error("discriminant stays below tolerance on [{start}, {end}]: coalescence set is not finitely many points")]
    NotFinitelyMany { start: f64, end: f64 },
    #[error("eigenvalues coalesce at t = {t} (discriminant {disc}); classification needs distinct eigenvalues")]
    DegeneratePoint { t: f64, disc: f64 },
    #[error("{lambda} is not an eigenvalue of A({t}) within tolerance")]
    NotAnEigenvalue { t: f64, lambda: f64 },
}

/// The two eigenvalues at one parameter value, `plus >= minus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub plus: f64,
    pub minus: f64,
}

impl EigenPair {
    pub fn gap(&self) -> f64 {
        self.plus - self.minus
    }
}

/// Closed-form eigenvalues of one hermitian matrix value.
pub fn eigenvalues(m: &Herm2) -> EigenPair {
    let mut disc = m.discriminant();
    if disc < 0.0 && disc >= -NEG_DISC_CLAMP {
        disc = 0.0;
    }
    let root = disc.max(0.0).sqrt();
    let half_trace = 0.5 * (m.f + m.g);
    EigenPair {
        plus: half_trace + 0.5 * root,
        minus: half_trace - 0.5 * root,
    }
}

/// Eigenvalues of the field at `t`.
pub fn eigenvalues_at<F: MatrixField>(field: &F, t: f64) -> Result<EigenPair, SpectralError> {
    Ok(eigenvalues(&field.at(t)?))
}

/// The discriminant `(f - g)^2 + 4 |h|^2` as a scalar track. Expression
/// fields compose symbolically (keeping an analytic derivative); sampled
/// fields are resampled onto their finest grid.
pub fn discriminant_track(field: &HermitianField) -> ScalarTrack {
    use crate::scalar::TrackBody;
    let interval = field.interval();
    let exprs: Option<Vec<&Expr>> = field
        .tracks()
        .iter()
        .map(|t| match t.body() {
            TrackBody::Expr(e) => Some(e),
            TrackBody::Samples { .. } => None,
        })
        .collect();
    if let Some(exprs) = exprs {
        let sq = |e: Expr| Expr::binary(BinaryOp::Pow, e, Expr::constant(2.0));
        let diff = Expr::binary(BinaryOp::Sub, exprs[0].clone(), exprs[1].clone());
        let mag = Expr::binary(
            BinaryOp::Add,
            sq(exprs[2].clone()),
            sq(exprs[3].clone()),
        );
        let disc = Expr::binary(
            BinaryOp::Add,
            sq(diff),
            Expr::binary(BinaryOp::Mul, Expr::constant(4.0), mag),
        );
        return ScalarTrack::from_expr(disc, interval);
    }
    // Sample-backed: evaluate on the finest grid among the component tables.
    let n = field
        .tracks()
        .iter()
        .filter_map(|t| match t.body() {
            TrackBody::Samples { grid, .. } => Some(grid.len()),
            TrackBody::Expr(_) => None,
        })
        .max()
        .unwrap_or(1025);
    let grid = Grid::over(interval, n).expect("field interval is valid");
    let values: Vec<f64> = grid
        .points()
        .map(|t| field.at(t).map(|m| m.discriminant()).unwrap_or(f64::NAN))
        .collect();
    ScalarTrack::from_samples(grid, values).expect("lengths match by construction")
}

/// One detected coalescence point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoalescencePoint {
    pub t: f64,
    /// Discriminant at the refined location.
    pub disc: f64,
    /// False when the point stands for a sub-threshold plateau wider than
    /// four grid cells; the pipeline treats such points as hypothesis
    /// failures unless an obstruction explains them.
    pub is_isolated: bool,
    pub at_endpoint: bool,
}

/// Coalescence scan result: finitely many points, strictly increasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoalescenceReport {
    pub points: Vec<CoalescencePoint>,
    /// Whether the left/right interval endpoint is itself a coalescence.
    pub endpoint_flags: (bool, bool),
}

impl CoalescenceReport {
    pub fn interior_zeros(&self) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| !p.at_endpoint)
            .map(|p| p.t)
            .collect()
    }

    pub fn all_isolated(&self) -> bool {
        self.points.iter().all(|p| p.is_isolated)
    }
}

/// Scan the discriminant on the grid and refine candidate zeros.
///
/// Every local minimum of the sampled discriminant is refined by
/// golden-section search (a zero between grid nodes does not need to dip
/// below tolerance at the nodes to be found). A sub-threshold run wider
/// than four grid cells marks its point non-isolated; a run covering more
/// than half the interval is rejected as `NotFinitelyMany` outright.
pub fn find_coalescence<F: MatrixField>(
    field: &F,
    grid: &Grid,
    tol_disc: f64,
) -> Result<CoalescenceReport, SpectralError> {
    assert!(tol_disc > 0.0, "tol_disc must be positive");
    let n = grid.len();
    let iv = grid.interval();
    let spacing = grid.spacing();
    let refine_tol = 1e-12 * iv.length();

    let mut disc = Vec::with_capacity(n);
    for t in grid.points() {
        disc.push(field.at(t)?.discriminant());
    }

    // Maximal sub-threshold runs.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if disc[i] <= tol_disc {
            let start = i;
            while i + 1 < n && disc[i + 1] <= tol_disc {
                i += 1;
            }
            runs.push((start, i));
        }
        i += 1;
    }
    for &(s, e) in &runs {
        let width = grid.point(e) - grid.point(s);
        if width > 0.5 * iv.length() {
            return Err(SpectralError::NotFinitelyMany {
                start: grid.point(s),
                end: grid.point(e),
            });
        }
    }

    let disc_at = |t: f64| field.at(t).map(|m| m.discriminant()).unwrap_or(f64::INFINITY);

    let mut candidates: Vec<CoalescencePoint> = Vec::new();
    let mut push_candidate = |t: f64, d: f64, isolated: bool| {
        if d <= tol_disc {
            candidates.push(CoalescencePoint {
                t,
                disc: d,
                is_isolated: isolated,
                at_endpoint: false,
            });
        }
    };

    // Runs collapse to their refined minimum. On a wide plateau the
    // discriminant is flat at zero and any minimizer is arbitrary; the run
    // midpoint is the honest representative there.
    for &(s, e) in &runs {
        let lo = grid.point(s.saturating_sub(1));
        let hi = grid.point((e + 1).min(n - 1));
        let isolated = grid.point(e) - grid.point(s) <= 4.0 * spacing;
        let (t, d) = if isolated {
            golden_min(disc_at, lo, hi, refine_tol)
        } else {
            let mid = 0.5 * (grid.point(s) + grid.point(e));
            let d_mid = disc_at(mid);
            if d_mid <= tol_disc {
                (mid, d_mid)
            } else {
                golden_min(disc_at, lo, hi, refine_tol)
            }
        };
        push_candidate(t, d, isolated);
    }

    // Local minima of the sampled discriminant outside the runs.
    let in_run = |i: usize| runs.iter().any(|&(s, e)| i >= s && i <= e);
    for i in 0..n {
        let is_min = if i == 0 {
            disc[0] < disc[1]
        } else if i == n - 1 {
            disc[n - 1] < disc[n - 2]
        } else {
            disc[i] <= disc[i - 1] && disc[i] <= disc[i + 1]
        };
        if !is_min || in_run(i) {
            continue;
        }
        let lo = grid.point(i.saturating_sub(1));
        let hi = grid.point((i + 1).min(n - 1));
        let (t, d) = golden_min(disc_at, lo, hi, refine_tol);
        push_candidate(t, d, true);
    }

    candidates.sort_by(|p, q| p.t.partial_cmp(&q.t).unwrap());

    // Merge points closer than two grid spacings, keeping the deeper one.
    let mut merged: Vec<CoalescencePoint> = Vec::new();
    for c in candidates {
        match merged.last_mut() {
            Some(last) if c.t - last.t < 2.0 * spacing => {
                let keep_new = c.disc < last.disc;
                let isolated = last.is_isolated && c.is_isolated;
                if keep_new {
                    *last = c;
                }
                last.is_isolated = isolated;
            }
            _ => merged.push(c),
        }
    }

    let endpoint_tol = spacing.min(1e-9 * (1.0 + iv.length()));
    let mut endpoint_flags = (false, false);
    for p in &mut merged {
        if (p.t - iv.a).abs() <= endpoint_tol {
            p.t = iv.a;
            p.at_endpoint = true;
            endpoint_flags.0 = true;
        } else if (iv.b - p.t).abs() <= endpoint_tol {
            p.t = iv.b;
            p.at_endpoint = true;
            endpoint_flags.1 = true;
        }
    }

    Ok(CoalescenceReport {
        points: merged,
        endpoint_flags,
    })
}

/// Pointwise classification from the lemma: when `h(t) = 0`, exactly one
/// of `f(t) = lambda` or `g(t) = lambda` holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    HZeroFMatches,
    HZeroGMatches,
    HNonzero,
}

pub fn classify_point<F: MatrixField>(
    field: &F,
    t: f64,
    lambda: f64,
    tol_match: f64,
) -> Result<PointClass, SpectralError> {
    let m = field.at(t)?;
    let disc = m.discriminant();
    if disc <= DEFAULT_TOL_DISC {
        return Err(SpectralError::DegeneratePoint { t, disc });
    }
    if m.h.norm() > tol_match {
        return Ok(PointClass::HNonzero);
    }
    let df = (m.f - lambda).abs();
    let dg = (m.g - lambda).abs();
    match (df <= tol_match, dg <= tol_match) {
        (true, true) => Err(SpectralError::DegeneratePoint { t, disc }),
        (true, false) => Ok(PointClass::HZeroFMatches),
        (false, true) => Ok(PointClass::HZeroGMatches),
        (false, false) => Err(SpectralError::NotAnEigenvalue { t, lambda }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Interval, ScalarField};
    use num_complex::Complex64;

    fn field(f: &str, g: &str, hr: &str, hi: &str, a: f64, b: f64) -> HermitianField {
        HermitianField::from_exprs(f, g, hr, hi, Interval::new(a, b).unwrap()).unwrap()
    }

    /// Independent oracle: roots of x^2 - tr x + det via the numerically
    /// stable quadratic formula (different route than the closed form).
    fn charpoly_roots(m: &Herm2) -> (f64, f64) {
        let b = -m.trace();
        let c = m.det();
        let disc = (b * b - 4.0 * c).max(0.0);
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q, c / q) };
        (r1.max(r2), r1.min(r2))
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let m = Herm2::new(0.0, 0.0, Complex64::new(1.0, 0.0));
        let e = eigenvalues(&m);
        assert_eq!((e.plus, e.minus), (1.0, -1.0));
    }

    #[test]
    fn diagonal_eigenvalues() {
        let m = Herm2::new(1.0, 2.0, Complex64::new(0.0, 0.0));
        let e = eigenvalues(&m);
        assert_eq!((e.plus, e.minus), (2.0, 1.0));
    }

    #[test]
    fn rank_one_at_half() {
        // A = 0.5 * [[1,1],[1,1]]: eigenvalues 1 and 0.
        let m = Herm2::new(0.5, 0.5, Complex64::new(0.5, 0.0));
        let e = eigenvalues(&m);
        let oracle = charpoly_roots(&m);
        assert!((e.plus - 1.0).abs() < 1e-15);
        assert!(e.minus.abs() < 1e-15);
        assert!((e.plus - oracle.0).abs() < 1e-15);
        assert!((e.minus - oracle.1).abs() < 1e-15);
    }

    #[test]
    fn matches_charpoly_oracle_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let m = Herm2::new(
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)),
            );
            let e = eigenvalues(&m);
            let (op, om) = charpoly_roots(&m);
            let scale = 1.0 + op.abs().max(om.abs());
            assert!((e.plus - op).abs() <= 1e-12 * scale, "{:?}", m);
            assert!((e.minus - om).abs() <= 1e-12 * scale, "{:?}", m);
            // Trace and determinant identities.
            assert!((e.plus + e.minus - m.trace()).abs() <= 4.0 * f64::EPSILON * scale);
            assert!(
                (e.plus * e.minus - m.det()).abs() <= 1e-12 * (1.0 + m.det().abs()) * scale
            );
        }
    }

    #[test]
    fn coalescence_implies_scalar_matrix() {
        // lambda+ == lambda- forces A = lambda I.
        let f = field("t", "-t", "0", "0", -1.0, 1.0);
        let m = f.at(0.0).unwrap();
        let e = eigenvalues(&m);
        assert!(e.gap() <= 1e-12);
        let dist = m.shift(e.plus).frobenius_norm();
        assert!(dist <= 1e-12);
    }

    #[test]
    fn discriminant_track_composes() {
        let f = field("t", "-t", "0", "0", -1.0, 1.0);
        let track = discriminant_track(&f);
        for t in [-1.0, -0.3, 0.0, 0.7] {
            assert!((track.eval(t).unwrap() - 4.0 * t * t).abs() < 1e-14);
        }
        let f = field("0", "0", "t", "0", -1.0, 1.0);
        let track = discriminant_track(&f);
        assert!((track.eval(0.5).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_discriminant_track_for_scalar_field() {
        let f = field("1", "1", "0", "0", 0.0, 1.0);
        let track = discriminant_track(&f);
        assert_eq!(track.eval(0.3).unwrap(), 0.0);
    }

    #[test]
    fn finds_single_interior_coalescence() {
        let f = field("t", "-t", "0", "0", -1.0, 1.0);
        let grid = Grid::new(-1.0, 1.0, 1001).unwrap();
        let rep = find_coalescence(&f, &grid, DEFAULT_TOL_DISC).unwrap();
        assert_eq!(rep.points.len(), 1);
        assert!(rep.points[0].t.abs() < 1e-10);
        assert!(rep.points[0].is_isolated);
        assert!(!rep.points[0].at_endpoint);
    }

    #[test]
    fn finds_coalescence_between_grid_nodes() {
        // Even point count: t = 0 is not a grid node.
        let f = field("t", "-t", "0", "0", -1.0, 1.0);
        let grid = Grid::new(-1.0, 1.0, 1000).unwrap();
        let rep = find_coalescence(&f, &grid, DEFAULT_TOL_DISC).unwrap();
        assert_eq!(rep.points.len(), 1);
        assert!(rep.points[0].t.abs() < 1e-10);
    }

    #[test]
    fn gap_field_has_no_coalescence() {
        let f = field("1", "2", "0", "0", 0.0, 1.0);
        let grid = Grid::new(0.0, 1.0, 101).unwrap();
        let rep = find_coalescence(&f, &grid, DEFAULT_TOL_DISC).unwrap();
        assert!(rep.points.is_empty());
    }

    #[test]
    fn zero_field_is_not_finitely_many() {
        let f = field("0", "0", "0", "0", -1.0, 1.0);
        let grid = Grid::new(-1.0, 1.0, 101).unwrap();
        assert!(matches!(
            find_coalescence(&f, &grid, DEFAULT_TOL_DISC),
            Err(SpectralError::NotFinitelyMany { .. })
        ));
    }

    #[test]
    fn endpoint_coalescence_is_flagged() {
        let f = field("t", "-t", "0", "0", 0.0, 1.0);
        let grid = Grid::new(0.0, 1.0, 501).unwrap();
        let rep = find_coalescence(&f, &grid, DEFAULT_TOL_DISC).unwrap();
        assert_eq!(rep.points.len(), 1);
        assert!(rep.points[0].at_endpoint);
        assert!(rep.endpoint_flags.0);
        assert!(!rep.endpoint_flags.1);
    }

    #[test]
    fn classification_examples() {
        let f = field("1", "2", "0", "0", 0.0, 1.0);
        assert_eq!(
            classify_point(&f, 0.5, 1.0, 1e-9).unwrap(),
            PointClass::HZeroFMatches
        );
        assert_eq!(
            classify_point(&f, 0.5, 2.0, 1e-9).unwrap(),
            PointClass::HZeroGMatches
        );
        let f = field("0", "0", "1", "0", 0.0, 1.0);
        assert_eq!(
            classify_point(&f, 0.5, 1.0, 1e-9).unwrap(),
            PointClass::HNonzero
        );
        let f = field("1", "1", "0", "0", 0.0, 1.0);
        assert!(matches!(
            classify_point(&f, 0.5, 1.0, 1e-9),
            Err(SpectralError::DegeneratePoint { .. })
        ));
    }
}
