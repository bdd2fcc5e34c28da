//! Full diagonalization pipelines.
//!
//! `diagonalize_distinct` handles fields whose eigenvalues never meet: one
//! eigenvector walk per branch, normalized columns, certificate metrics.
//!
//! `diagonalize_c1` relaxes that to finitely many coalescence points with
//! spectrally nondegenerate derivative. The construction:
//!
//! 1. locate the coalescence set Z;
//! 2. v = [f - g, 2 h_re, 2 h_im] vanishes exactly on Z; its signed norm
//!    mu is C^1 and lambda = (f + g + mu) / 2 is a C^1 eigenvalue branch;
//! 3. B = A - lambda I vanishes on Z; the signed norm tau of B (as the
//!    real 4-vector whose 2-norm is the Frobenius norm of B) is C^1;
//! 4. C = B / tau extends continuously through Z via C = B' / tau'
//!    (finite differences), keeps det C = 0 and ||C||_F = 1, and has a
//!    uniform eigenvalue gap, so the distinct pipeline diagonalizes it;
//! 5. U*AU is recovered as tau (U*CU) + lambda I.
//!
//! Two obstructions are detected before any construction: a jump in A' at
//! some z in Z (one-sided difference quotients disagree), and A'(z) with a
//! repeated eigenvalue (the l'Hopital quotient would be degenerate).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mat2::{vec2_inner, vec2_norm, Mat2, Vec2};
use crate::scalar::{
    Difference, Grid, Herm2, HermitianField, Interval, MatrixField, Scaled, ScalarField,
    ScalarTrack, TrackError,
};
use crate::signed_norm::{build_signed_norm, NormError, SignedMagnitude, VectorTrack};
use crate::spectral::{find_coalescence, CoalescenceReport, SpectralError};
use crate::walk::{initial_vector, walk, Branch, EigenTrack, Segment, WalkError, WalkOptions};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error("eigenvalue gap {gap:.3e} at t = {t} is below gap_min = {gap_min:.3e}")]
    GapTooSmall { t: f64, gap: f64, gap_min: f64 },
    #[error("A'({t}) has a repeated eigenvalue (gap {deriv_gap:.3e}): the field cannot be continuously diagonalized through this coalescence")]
    ObstructionDetected { t: f64, deriv_gap: f64 },
    #[error("A' jumps at t = {t} (one-sided difference quotients disagree by {mismatch:.3e}): no continuous diagonalization exists there")]
    DerivativeDiscontinuous { t: f64, mismatch: f64 },
    #[error("coalescence set is not finitely many points (sub-tolerance discriminant on [{start}, {end}])")]
    NotFinitelyMany { start: f64, end: f64 },
    #[error("internal spectral failure: {0}")]
    Spectral(String),
    #[error("certificate failed: {0}")]
    CertificateFailed(String),
}

impl From<SpectralError> for PipelineError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::NotFinitelyMany { start, end } => {
                PipelineError::NotFinitelyMany { start, end }
            }
            SpectralError::Track(t) => PipelineError::Track(t),
            other => PipelineError::Spectral(other.to_string()),
        }
    }
}

/// Tolerances and knobs for the pipelines. Defaults follow the library's
/// documented conventions; every field is overridable from the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    /// Discriminant threshold for coalescence detection (gap tolerance is
    /// its square root).
    pub tol_disc: f64,
    /// Scale for "this denominator / this value is effectively zero".
    pub tol_match: f64,
    /// Relative eigen-residual accepted from constructed eigenvectors.
    pub tol_resid: f64,
    /// Relative off-diagonal defect accepted in U*AU.
    pub tol_offdiag: f64,
    /// l'Hopital window: |tau| < eps_switch * max|tau| uses B'/tau'.
    pub eps_switch: f64,
    /// Minimum eigenvalue gap required by the distinct pipeline.
    pub gap_min: f64,
    pub max_switches: usize,
    /// No switch-back within this many grid steps of a handoff.
    pub hysteresis_steps: usize,
    /// Step-jump certificate: max jump <= jump_factor * spacing * Lipschitz.
    pub jump_factor: f64,
    /// A'(z) gap below `tol_deriv_gap * (1 + ||A'||)` is an obstruction.
    pub tol_deriv_gap: f64,
    /// One-sided A' mismatch above `tol_deriv_jump * (1 + ||A'||)` means
    /// the derivative is discontinuous.
    pub tol_deriv_jump: f64,
    /// Finite-difference step; `None` means `(b - a) * 1e-6`.
    pub fd_step: Option<f64>,
    /// Derive column 2 as the exact orthogonal complement of column 1
    /// instead of a second walk. Off by default: the default runs one
    /// independent walk per branch and asserts orthogonality.
    pub orthogonal_complement: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            tol_disc: 1e-20,
            tol_match: 1e-9,
            tol_resid: 1e-8,
            tol_offdiag: 1e-8,
            eps_switch: 1e-6,
            gap_min: 2e-10,
            max_switches: 10_000,
            hysteresis_steps: 5,
            jump_factor: 20.0,
            tol_deriv_gap: 1e-6,
            tol_deriv_jump: 1e-3,
            fd_step: None,
            orthogonal_complement: false,
        }
    }
}

impl PipelineOptions {
    pub fn walk_options(&self) -> WalkOptions {
        WalkOptions {
            tol_match: self.tol_match,
            tol_resid: self.tol_resid,
            max_switches: self.max_switches,
            hysteresis_steps: self.hysteresis_steps,
        }
    }
}

/// Residual summary of a produced unitary track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepMetrics {
    pub max_unitarity_defect: f64,
    pub max_offdiag_resid: f64,
    /// max over nodes of offdiag / (1 + ||A||_F).
    pub max_offdiag_ratio: f64,
    pub max_step_jump: f64,
    /// Empirical Lipschitz constant of the diagonalized data.
    pub lipschitz: f64,
    pub jump_threshold: f64,
    pub min_gap: f64,
    pub max_frobenius: f64,
    /// c1 runs: max ||U*AU - (tau U*CU + lambda I)||_F over the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction_defect: Option<f64>,
}

/// Sampled unitary field with per-node diagnostics.
#[derive(Debug, Clone)]
pub struct UnitaryTrack {
    pub grid: Grid,
    pub mats: Vec<Mat2>,
    /// Diagonal entries of U*AU per node.
    pub diag: Vec<(f64, f64)>,
    pub offdiag_resid: Vec<f64>,
    pub unitarity_defect: Vec<f64>,
    pub metrics: StepMetrics,
    pub plus_segments: Vec<Segment>,
    pub minus_segments: Vec<Segment>,
}

const UNITARITY_TOL: f64 = 1e-10;
/// Absolute floor added to the jump threshold so constant fields (zero
/// Lipschitz constant) accept their rounding-level jumps.
const JUMP_FLOOR: f64 = 1e-12;

/// Diagonalize a field with everywhere-distinct eigenvalues. Column 1
/// carries the plus branch, column 2 the minus branch; each column's
/// global phase makes the largest-magnitude component of its initial value
/// real positive.
pub fn diagonalize_distinct<F: MatrixField>(
    field: &F,
    grid: &Grid,
    opts: &PipelineOptions,
) -> Result<UnitaryTrack, PipelineError> {
    let n = grid.len();
    let spacing = grid.spacing();

    let mut values: Vec<Herm2> = Vec::with_capacity(n);
    let mut min_gap = f64::INFINITY;
    let mut min_gap_at = grid.point(0);
    let mut max_fro = 0.0f64;
    let mut lipschitz = 0.0f64;
    for (i, t) in grid.points().enumerate() {
        let m = field.at(t)?;
        let gap = m.gap();
        if gap < min_gap {
            min_gap = gap;
            min_gap_at = t;
        }
        max_fro = max_fro.max(m.frobenius_norm());
        if i > 0 {
            lipschitz = lipschitz.max(m.distance(&values[i - 1]) / spacing);
        }
        values.push(m);
    }
    if min_gap <= opts.gap_min {
        return Err(PipelineError::GapTooSmall {
            t: min_gap_at,
            gap: min_gap,
            gap_min: opts.gap_min,
        });
    }

    let wopts = opts.walk_options();
    let v0_plus = initial_vector(field, Branch::Plus, &wopts)?;
    let track_plus = walk(field, Branch::Plus, v0_plus, grid, &wopts)?;
    let track_minus = if opts.orthogonal_complement {
        None
    } else {
        let v0_minus = initial_vector(field, Branch::Minus, &wopts)?;
        Some(walk(field, Branch::Minus, v0_minus, grid, &wopts)?)
    };

    let mut mats = Vec::with_capacity(n);
    for (i, t) in grid.points().enumerate() {
        let u1 = normalize_eval(&track_plus, field, t)?;
        let u2 = match &track_minus {
            Some(tm) => normalize_eval(tm, field, t)?,
            None => [-u1[1].conj(), u1[0].conj()],
        };
        let _ = i;
        mats.push(Mat2::from_columns(&u1, &u2));
    }

    let track = assemble(grid, mats, &values, lipschitz, min_gap, max_fro, opts, None)?;
    Ok(UnitaryTrack {
        plus_segments: track_plus.segments,
        minus_segments: track_minus.map(|t| t.segments).unwrap_or_default(),
        ..track
    })
}

fn normalize_eval<F: MatrixField>(
    track: &EigenTrack,
    field: &F,
    t: f64,
) -> Result<Vec2, PipelineError> {
    let v = track.eval(field, t)?;
    let norm = vec2_norm(&v);
    if norm == 0.0 {
        return Err(PipelineError::CertificateFailed(format!(
            "eigenvector track vanished at t = {}",
            t
        )));
    }
    Ok([v[0] / norm, v[1] / norm])
}

/// Shared sampling, metric and certificate step. `values` are the field
/// being diagonalized at the grid nodes.
#[allow(clippy::too_many_arguments)]
fn assemble(
    grid: &Grid,
    mats: Vec<Mat2>,
    values: &[Herm2],
    lipschitz: f64,
    min_gap: f64,
    max_fro: f64,
    opts: &PipelineOptions,
    reconstruction_defect: Option<f64>,
) -> Result<UnitaryTrack, PipelineError> {
    let n = grid.len();
    let spacing = grid.spacing();
    let mut diag = Vec::with_capacity(n);
    let mut offdiag = Vec::with_capacity(n);
    let mut unitarity = Vec::with_capacity(n);
    let mut max_unit = 0.0f64;
    let mut max_offd = 0.0f64;
    let mut max_ratio = 0.0f64;

    for i in 0..n {
        let u = &mats[i];
        let a = &values[i];
        let u1 = u.column(0);
        let u2 = u.column(1);
        let au1 = a.apply(u1);
        let au2 = a.apply(u2);
        let d1 = vec2_inner(&u1, &au1).re;
        let d2 = vec2_inner(&u2, &au2).re;
        let off = vec2_inner(&u1, &au2).norm();
        let defect = u.unitarity_defect();
        max_unit = max_unit.max(defect);
        max_offd = max_offd.max(off);
        max_ratio = max_ratio.max(off / (1.0 + a.frobenius_norm()));
        diag.push((d1, d2));
        offdiag.push(off);
        unitarity.push(defect);
    }

    let mut max_jump = 0.0f64;
    for i in 0..n - 1 {
        max_jump = max_jump.max(mats[i + 1].sub(&mats[i]).frobenius_norm());
    }
    let jump_threshold = opts.jump_factor * spacing * lipschitz + JUMP_FLOOR;

    if max_unit > UNITARITY_TOL {
        return Err(PipelineError::CertificateFailed(format!(
            "unitarity defect {:.3e} exceeds {:.1e}",
            max_unit, UNITARITY_TOL
        )));
    }
    if max_ratio > opts.tol_offdiag {
        return Err(PipelineError::CertificateFailed(format!(
            "off-diagonal residual ratio {:.3e} exceeds tol_offdiag {:.1e}",
            max_ratio, opts.tol_offdiag
        )));
    }
    if max_jump > jump_threshold {
        return Err(PipelineError::CertificateFailed(format!(
            "step jump {:.3e} exceeds threshold {:.3e} (Lipschitz {:.3e})",
            max_jump, jump_threshold, lipschitz
        )));
    }

    Ok(UnitaryTrack {
        grid: grid.clone(),
        mats,
        diag,
        offdiag_resid: offdiag,
        unitarity_defect: unitarity,
        metrics: StepMetrics {
            max_unitarity_defect: max_unit,
            max_offdiag_resid: max_offd,
            max_offdiag_ratio: max_ratio,
            max_step_jump: max_jump,
            lipschitz,
            jump_threshold,
            min_gap,
            max_frobenius: max_fro,
            reconstruction_defect,
        },
        plus_segments: Vec::new(),
        minus_segments: Vec::new(),
    })
}

/// `B_11 = f - lambda` or `B_22 = g - lambda` with
/// `lambda = (f + g + mu) / 2`, as a scalar field.
struct ShiftedDiagonal {
    first: bool,
    f: ScalarTrack,
    g: ScalarTrack,
    mu: Arc<SignedMagnitude>,
}

impl ScalarField for ShiftedDiagonal {
    fn interval(&self) -> Interval {
        self.f.interval()
    }

    fn eval(&self, t: f64) -> Result<f64, TrackError> {
        let f = self.f.eval(t)?;
        let g = self.g.eval(t)?;
        let lambda = 0.5 * (f + g + self.mu.eval(t)?);
        Ok(if self.first { f - lambda } else { g - lambda })
    }

    fn derivative_at(&self, t: f64, dt: f64) -> Result<f64, TrackError> {
        let df = self.f.derivative_at(t, dt)?;
        let dg = self.g.derivative_at(t, dt)?;
        let dlambda = 0.5 * (df + dg + self.mu.derivative_at(t, dt)?);
        Ok(if self.first { df - dlambda } else { dg - dlambda })
    }
}

/// The normalized field `C(t) = B(t)/tau(t)`, continued through the zeros
/// of tau by the finite-difference quotient `B'/tau'`.
pub struct NormalizedField {
    field: HermitianField,
    mu: Arc<SignedMagnitude>,
    tau: Arc<SignedMagnitude>,
    /// Absolute switch level: |tau| below this uses the derivative quotient.
    tau_floor: f64,
    fd_step: f64,
    interval: Interval,
}

impl NormalizedField {
    pub fn lambda_at(&self, t: f64) -> Result<f64, TrackError> {
        let f = self.field.f.eval(t)?;
        let g = self.field.g.eval(t)?;
        Ok(0.5 * (f + g + self.mu.eval(t)?))
    }

    pub fn b_at(&self, t: f64) -> Result<Herm2, TrackError> {
        let a = self.field.at(t)?;
        Ok(a.shift(self.lambda_at(t)?))
    }

    pub fn tau_at(&self, t: f64) -> Result<f64, TrackError> {
        self.tau.eval(t)
    }

    pub fn tau_floor(&self) -> f64 {
        self.tau_floor
    }
}

impl MatrixField for NormalizedField {
    fn interval(&self) -> Interval {
        self.interval
    }

    fn at(&self, t: f64) -> Result<Herm2, TrackError> {
        let tau = self.tau.eval(t)?;
        if tau.abs() >= self.tau_floor {
            return Ok(self.b_at(t)?.scale(tau));
        }
        // l'Hopital window: difference quotients of B and tau, central when
        // both sides fit in the domain.
        // TODO: use a 3-point one-sided quotient at endpoint windows; the
        // secant below is only first-order accurate there.
        let h = self
            .fd_step
            .min(0.25 * self.interval.length())
            .max(f64::MIN_POSITIVE);
        let (lo, hi) = if t - h >= self.interval.a && t + h <= self.interval.b {
            (t - h, t + h)
        } else if t - h < self.interval.a {
            (t, t + 2.0 * h)
        } else {
            (t - 2.0 * h, t)
        };
        let db = self.b_at(hi)?.sub(&self.b_at(lo)?);
        let dtau = self.tau.eval(hi)? - self.tau.eval(lo)?;
        if dtau == 0.0 {
            return Err(TrackError::Degenerate {
                t,
                detail: "tau' vanishes inside the l'Hopital window".to_string(),
            });
        }
        Ok(db.scale(dtau))
    }
}

/// Everything the degenerate pipeline constructs along the way.
pub struct DegenerateDecomposition {
    pub coalescence: CoalescenceReport,
    /// Hypothesis diagnostics for each accepted coalescence point.
    pub hypotheses: Vec<ZHypothesis>,
    pub mu: Arc<SignedMagnitude>,
    pub tau: Arc<SignedMagnitude>,
    /// The C^1 eigenvalue branch lambda = (f + g + mu)/2, sampled on the
    /// run grid.
    pub lambda: ScalarTrack,
    pub normalized: NormalizedField,
    pub c_metrics: CMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CMetrics {
    pub max_abs_det: f64,
    /// max | ||C||_F - 1 | over the grid.
    pub max_norm_deviation: f64,
    pub min_gap: f64,
    /// max over nodes of |tau| - |mu| mismatch.
    pub max_tau_mu_mismatch: f64,
}

pub struct C1Outcome {
    pub unitary: UnitaryTrack,
    pub decomposition: DegenerateDecomposition,
}

/// Degenerate pipeline for C^1 fields with finitely many isolated
/// coalescence points whose derivative there has distinct eigenvalues.
pub fn diagonalize_c1(
    field: &HermitianField,
    grid: &Grid,
    opts: &PipelineOptions,
) -> Result<C1Outcome, PipelineError> {
    let iv = field.interval();
    let fd = opts.fd_step.unwrap_or_else(|| iv.default_fd_step());

    let coalescence = match find_coalescence(field, grid, opts.tol_disc) {
        Ok(r) => r,
        Err(e) => return Err(e.into()),
    };

    // Obstruction checks at every coalescence point, derivative jump first:
    // a field that is not C^1 at z fails before its A'(z) is even defined.
    let dt_jump = iv.length() * 1e-4;
    let mut hypotheses = Vec::with_capacity(coalescence.points.len());
    for p in &coalescence.points {
        let mismatch = derivative_mismatch(field, p.t, dt_jump)?;
        if let Some((m, scale)) = mismatch {
            if m > opts.tol_deriv_jump * scale {
                return Err(PipelineError::DerivativeDiscontinuous {
                    t: p.t,
                    mismatch: m,
                });
            }
        }
        let ap = field.derivative_at(p.t, fd)?;
        let deriv_gap = ap.gap();
        if deriv_gap <= opts.tol_deriv_gap * (1.0 + ap.frobenius_norm()) {
            return Err(PipelineError::ObstructionDetected { t: p.t, deriv_gap });
        }
        if !p.is_isolated {
            return Err(PipelineError::NotFinitelyMany {
                start: p.t,
                end: p.t,
            });
        }
        hypotheses.push(ZHypothesis {
            t: p.t,
            isolated: p.is_isolated,
            at_endpoint: p.at_endpoint,
            a_prime_gap: deriv_gap,
            deriv_mismatch: mismatch.map(|(m, _)| m),
            deriv_discontinuous: false,
        });
    }

    let interior = coalescence.interior_zeros();

    let v3 = VectorTrack::new(vec![
        Arc::new(Difference {
            lhs: field.f.clone(),
            rhs: field.g.clone(),
        }) as Arc<dyn ScalarField>,
        Arc::new(Scaled {
            factor: 2.0,
            inner: field.h_re.clone(),
        }),
        Arc::new(Scaled {
            factor: 2.0,
            inner: field.h_im.clone(),
        }),
    ])?;
    let mu = Arc::new(build_signed_norm(v3, &interior, None)?);

    let sqrt2 = std::f64::consts::SQRT_2;
    let vec4 = VectorTrack::new(vec![
        Arc::new(ShiftedDiagonal {
            first: true,
            f: field.f.clone(),
            g: field.g.clone(),
            mu: mu.clone(),
        }) as Arc<dyn ScalarField>,
        Arc::new(ShiftedDiagonal {
            first: false,
            f: field.f.clone(),
            g: field.g.clone(),
            mu: mu.clone(),
        }),
        Arc::new(Scaled {
            factor: sqrt2,
            inner: field.h_re.clone(),
        }),
        Arc::new(Scaled {
            factor: sqrt2,
            inner: field.h_im.clone(),
        }),
    ])?;
    let tau = Arc::new(build_signed_norm(vec4, &interior, None)?);

    let mut max_tau = 0.0f64;
    let mut max_tau_mu_mismatch = 0.0f64;
    for t in grid.points() {
        let tau_t = tau.eval(t)?;
        max_tau = max_tau.max(tau_t.abs());
        max_tau_mu_mismatch = max_tau_mu_mismatch.max((tau_t.abs() - mu.eval(t)?.abs()).abs());
    }
    if max_tau == 0.0 {
        return Err(PipelineError::CertificateFailed(
            "tau vanishes identically; the field is scalar everywhere".to_string(),
        ));
    }

    let normalized = NormalizedField {
        field: field.clone(),
        mu: mu.clone(),
        tau: tau.clone(),
        tau_floor: opts.eps_switch * max_tau,
        fd_step: fd,
        interval: iv,
    };

    // C-side certificate quantities.
    let mut max_abs_det = 0.0f64;
    let mut max_norm_deviation = 0.0f64;
    let mut min_gap_c = f64::INFINITY;
    for t in grid.points() {
        let c = normalized.at(t)?;
        max_abs_det = max_abs_det.max(c.det().abs());
        max_norm_deviation = max_norm_deviation.max((c.frobenius_norm() - 1.0).abs());
        min_gap_c = min_gap_c.min(c.gap());
    }

    let inner = diagonalize_distinct(&normalized, grid, opts)?;

    // Rebuild the diagnostics against A: reconstructed diagonal
    // tau * diag(U*CU) + lambda, measured off-diagonal of U*AU, and the
    // reconstruction identity defect.
    let n = grid.len();
    let mut a_values = Vec::with_capacity(n);
    let mut lambda_samples = Vec::with_capacity(n);
    for t in grid.points() {
        a_values.push(field.at(t)?);
        lambda_samples.push(normalized.lambda_at(t)?);
    }

    let mut diag = Vec::with_capacity(n);
    let mut offdiag = Vec::with_capacity(n);
    let mut max_offd = 0.0f64;
    let mut max_ratio = 0.0f64;
    let mut max_recon = 0.0f64;
    let mut max_fro_a = 0.0f64;
    for (i, t) in grid.points().enumerate() {
        let u = &inner.mats[i];
        let a = &a_values[i];
        let tau_t = tau.eval(t)?;
        let lambda_t = lambda_samples[i];
        let (c1, c2) = inner.diag[i];
        let d1 = tau_t * c1 + lambda_t;
        let d2 = tau_t * c2 + lambda_t;

        let u1 = u.column(0);
        let u2 = u.column(1);
        let au1 = a.apply(u1);
        let au2 = a.apply(u2);
        let off_a = vec2_inner(&u1, &au2);
        let off = off_a.norm();
        let d1_direct = vec2_inner(&u1, &au1).re;
        let d2_direct = vec2_inner(&u2, &au2).re;
        let c_val = normalized.at(t)?;
        let off_c = vec2_inner(&u1, &c_val.apply(u2));
        let recon = ((d1_direct - d1).powi(2)
            + (d2_direct - d2).powi(2)
            + 2.0 * (off_a - tau_t * off_c).norm_sqr())
        .sqrt();
        max_recon = max_recon.max(recon);
        max_offd = max_offd.max(off);
        max_ratio = max_ratio.max(off / (1.0 + a.frobenius_norm()));
        max_fro_a = max_fro_a.max(a.frobenius_norm());
        diag.push((d1, d2));
        offdiag.push(off);
    }

    if max_ratio > opts.tol_offdiag {
        return Err(PipelineError::CertificateFailed(format!(
            "off-diagonal residual ratio {:.3e} of U*AU exceeds tol_offdiag {:.1e}",
            max_ratio, opts.tol_offdiag
        )));
    }

    let metrics = StepMetrics {
        max_offdiag_resid: max_offd,
        max_offdiag_ratio: max_ratio,
        max_frobenius: max_fro_a,
        reconstruction_defect: Some(max_recon),
        ..inner.metrics
    };

    let lambda_track = ScalarTrack::from_samples(grid.clone(), lambda_samples)
        .expect("grid and samples have equal length");

    Ok(C1Outcome {
        unitary: UnitaryTrack {
            grid: inner.grid,
            mats: inner.mats,
            diag,
            offdiag_resid: offdiag,
            unitarity_defect: inner.unitarity_defect,
            metrics,
            plus_segments: inner.plus_segments,
            minus_segments: inner.minus_segments,
        },
        decomposition: DegenerateDecomposition {
            coalescence,
            hypotheses,
            mu,
            tau,
            lambda: lambda_track,
            normalized,
            c_metrics: CMetrics {
                max_abs_det,
                max_norm_deviation,
                min_gap: min_gap_c,
                max_tau_mu_mismatch,
            },
        },
    })
}

/// Richardson-extrapolated one-sided difference quotients of A at z.
/// Returns `None` when z is too close to an endpoint to take both sides;
/// otherwise `(||right - left||_F, 1 + max norm)`.
pub(crate) fn derivative_mismatch<F: MatrixField>(
    field: &F,
    z: f64,
    dt: f64,
) -> Result<Option<(f64, f64)>, TrackError> {
    let iv = field.interval();
    if z - dt < iv.a || z + dt > iv.b {
        return Ok(None);
    }
    let a0 = field.at(z)?;
    let quot = |hi: Herm2, lo: Herm2, h: f64| -> Herm2 {
        Herm2::new(
            (hi.f - lo.f) / h,
            (hi.g - lo.g) / h,
            (hi.h - lo.h) / h,
        )
    };
    let r_full = quot(field.at(z + dt)?, a0, dt);
    let r_half = quot(field.at(z + dt / 2.0)?, a0, dt / 2.0);
    let l_full = quot(a0, field.at(z - dt)?, dt);
    let l_half = quot(a0, field.at(z - dt / 2.0)?, dt / 2.0);
    // Richardson: 2 D(h/2) - D(h) cancels the O(h) term of the one-sided
    // quotient, leaving the true one-sided derivative to O(h^2).
    let extrap = |half: Herm2, full: Herm2| -> Herm2 {
        Herm2::new(
            2.0 * half.f - full.f,
            2.0 * half.g - full.g,
            2.0 * half.h - full.h,
        )
    };
    let right = extrap(r_half, r_full);
    let left = extrap(l_half, l_full);
    let mismatch = right.distance(&left);
    let scale = 1.0 + right.frobenius_norm().max(left.frobenius_norm());
    Ok(Some((mismatch, scale)))
}

/// Hypothesis diagnostics for one coalescence point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZHypothesis {
    pub t: f64,
    pub isolated: bool,
    pub at_endpoint: bool,
    pub a_prime_gap: f64,
    /// One-sided derivative mismatch, when measurable (interior points).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deriv_mismatch: Option<f64>,
    pub deriv_discontinuous: bool,
}

/// Diagnostic obstruction scan: greedy-alignment oracle at the run grid
/// and at a 4x refinement, plus the degenerate pipeline's hypothesis
/// checks at every detected coalescence point. Never fails on
/// mathematical grounds.
#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    pub base_n: usize,
    pub base_max_jump: f64,
    pub base_jump_at: f64,
    pub refined_n: usize,
    pub refined_max_jump: f64,
    pub refined_jump_at: f64,
    /// True when the refined jump stays at the same order as the coarse
    /// one: evidence of a genuine obstruction rather than discretization.
    pub persistent_jump: bool,
    pub z_finite: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub not_finitely_many_span: Option<(f64, f64)>,
    pub hypotheses: Vec<ZHypothesis>,
}

pub fn check_obstruction(
    field: &HermitianField,
    grid: &Grid,
    opts: &PipelineOptions,
) -> Result<ObstructionReport, PipelineError> {
    let iv = field.interval();
    let base = crate::oracle::pointwise_oracle(field, grid, None)?;
    let refined_n = 4 * (grid.len() - 1) + 1;
    let fine_grid = Grid::over(iv, refined_n).map_err(PipelineError::Track)?;
    let fine = crate::oracle::pointwise_oracle(field, &fine_grid, None)?;
    let persistent = fine.max_jump >= 0.5 * base.max_jump && fine.max_jump > 0.1;

    let fd = opts.fd_step.unwrap_or_else(|| iv.default_fd_step());
    let dt_jump = iv.length() * 1e-4;
    let (z_finite, span, points) = match find_coalescence(field, grid, opts.tol_disc) {
        Ok(rep) => (rep.all_isolated(), None, rep.points),
        Err(SpectralError::NotFinitelyMany { start, end }) => {
            (false, Some((start, end)), Vec::new())
        }
        Err(e) => return Err(e.into()),
    };

    let mut hypotheses = Vec::new();
    for p in &points {
        let mismatch = derivative_mismatch(field, p.t, dt_jump)?;
        let ap = field.derivative_at(p.t, fd)?;
        let discontinuous = mismatch
            .map(|(m, s)| m > opts.tol_deriv_jump * s)
            .unwrap_or(false);
        hypotheses.push(ZHypothesis {
            t: p.t,
            isolated: p.is_isolated,
            at_endpoint: p.at_endpoint,
            a_prime_gap: ap.gap(),
            deriv_mismatch: mismatch.map(|(m, _)| m),
            deriv_discontinuous: discontinuous,
        });
    }

    Ok(ObstructionReport {
        base_n: grid.len(),
        base_max_jump: base.max_jump,
        base_jump_at: base.max_jump_at,
        refined_n,
        refined_max_jump: fine.max_jump,
        refined_jump_at: fine.max_jump_at,
        persistent_jump: persistent,
        z_finite,
        not_finitely_many_span: span,
        hypotheses,
    })
}
