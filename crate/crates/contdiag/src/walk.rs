//! Segmentwise construction of a continuous, non-vanishing eigenvector
//! track for one eigenvalue branch.
//!
//! On a segment where `lambda - f` is bounded away from zero the
//! eigenvector is parametrized as `u = [h / (lambda - f), 1]`; where
//! `lambda - g` is healthy, as `w = [1, conj(h) / (lambda - g)]`. The two
//! denominators cannot vanish simultaneously when the eigenvalues are
//! distinct, so the walk hands off from one form to the other shortly
//! before each crossing, gluing segments with a nonzero matching constant.
//!
//! The crossing `f = lambda` is always tangential: `lambda+ >= max(f, g)`
//! and `lambda- <= min(f, g)` pointwise, so `f - lambda` touches zero
//! without changing sign. The detector therefore refines local minima of
//! `|f - lambda|` rather than relying on sign flips alone.

use num_complex::Complex64;
use thiserror::Error;

use crate::mat2::{vec2_argmax, vec2_norm, vec2_scale, Vec2};
use crate::numeric::{bisect_root, golden_min};
use crate::scalar::{Grid, Interval, MatrixField, TrackError};
use crate::spectral::{eigenvalues, EigenPair};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error("switch cap {cap} exceeded; suspected hypothesis failure or tolerance chattering")]
    MaxSwitchesExceeded { cap: usize },
    #[error("both parametrization denominators below tolerance at t = {t}; eigenvalues nearly coalesce or tol_match is misconfigured")]
    BothDenominatorsSmall { t: f64 },
    #[error("bad initial vector: {reason}")]
    BadInitialVector { reason: String },
    #[error("no valid handoff point before the crossing at t = {t_cross}")]
    NoValidHandoff { t_cross: f64 },
    #[error("parametrization denominator vanishes at t = {t}")]
    DenominatorVanishes { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn lambda(self, e: EigenPair) -> f64 {
        match self {
            Branch::Plus => e.plus,
            Branch::Minus => e.minus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `u = [h / (lambda - f), 1]`; valid while `lambda != f`.
    First,
    /// `w = [1, conj(h) / (lambda - g)]`; valid while `lambda != g`.
    Second,
}

impl Form {
    pub fn other(self) -> Form {
        match self {
            Form::First => Form::Second,
            Form::Second => Form::First,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Form::First => "first",
            Form::Second => "second",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkOptions {
    /// Scale for "the denominator is effectively zero".
    pub tol_match: f64,
    /// Relative eigen-residual accepted for the initial vector.
    pub tol_resid: f64,
    pub max_switches: usize,
    /// After a handoff, no further switch within this many grid steps.
    pub hysteresis_steps: usize,
}

impl Default for WalkOptions {
    fn default() -> Self {
        WalkOptions {
            tol_match: 1e-9,
            tol_resid: 1e-8,
            max_switches: 10_000,
            hysteresis_steps: 5,
        }
    }
}

/// One parametrized piece of the track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub form: Form,
    /// Nonzero matching constant applied to the form vector.
    pub scale: Complex64,
    /// Smallest |denominator| observed on the segment's grid points.
    pub min_denom: f64,
}

/// Continuous eigenvector track: ordered, abutting segments covering the
/// interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTrack {
    pub branch: Branch,
    pub segments: Vec<Segment>,
    interval: Interval,
}

impl EigenTrack {
    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn switch_count(&self) -> usize {
        self.segments.len() - 1
    }

    fn segment_for(&self, t: f64) -> &Segment {
        let idx = self
            .segments
            .partition_point(|s| s.start <= t)
            .saturating_sub(1);
        &self.segments[idx]
    }

    pub fn eval<F: MatrixField>(&self, field: &F, t: f64) -> Result<Vec2, WalkError> {
        let seg = self.segment_for(t);
        let u = form_vector(field, self.branch, seg.form, t)?;
        Ok(vec2_scale(seg.scale, &u))
    }
}

/// Signed denominator `lambda - f` (First) or `lambda - g` (Second).
pub fn denominator<F: MatrixField>(
    field: &F,
    branch: Branch,
    form: Form,
    t: f64,
) -> Result<f64, WalkError> {
    let m = field.at(t)?;
    let lambda = branch.lambda(eigenvalues(&m));
    Ok(match form {
        Form::First => lambda - m.f,
        Form::Second => lambda - m.g,
    })
}

/// Evaluate the raw (unscaled) form vector at t.
pub fn form_vector<F: MatrixField>(
    field: &F,
    branch: Branch,
    form: Form,
    t: f64,
) -> Result<Vec2, WalkError> {
    let m = field.at(t)?;
    let lambda = branch.lambda(eigenvalues(&m));
    match form {
        Form::First => {
            let denom = lambda - m.f;
            if denom == 0.0 {
                return Err(WalkError::DenominatorVanishes { t });
            }
            Ok([m.h / Complex64::new(denom, 0.0), Complex64::new(1.0, 0.0)])
        }
        Form::Second => {
            let denom = lambda - m.g;
            if denom == 0.0 {
                return Err(WalkError::DenominatorVanishes { t });
            }
            Ok([
                Complex64::new(1.0, 0.0),
                m.h.conj() / Complex64::new(denom, 0.0),
            ])
        }
    }
}

/// Form to start from at `t`: the first form whenever its denominator is
/// numerically valid, otherwise the second (which the classification lemma
/// guarantees is valid then). Errors when both are below tolerance.
pub fn applicable_form<F: MatrixField>(
    field: &F,
    branch: Branch,
    t: f64,
    tol_match: f64,
) -> Result<Form, WalkError> {
    let m = field.at(t)?;
    let lambda = branch.lambda(eigenvalues(&m));
    let d_first = (lambda - m.f).abs();
    let d_second = (lambda - m.g).abs();
    if d_first < tol_match && d_second < tol_match {
        return Err(WalkError::BothDenominatorsSmall { t });
    }
    Ok(if d_first >= tol_match {
        Form::First
    } else {
        Form::Second
    })
}

/// Eigenvector of `A(a)` for the branch, built from the applicable form,
/// with the largest-magnitude component made real positive.
pub fn initial_vector<F: MatrixField>(
    field: &F,
    branch: Branch,
    opts: &WalkOptions,
) -> Result<Vec2, WalkError> {
    let a = field.interval().a;
    let form = applicable_form(field, branch, a, opts.tol_match)?;
    let v = form_vector(field, branch, form, a)?;
    let k = vec2_argmax(&v);
    let phase = v[k].conj() / v[k].norm();
    Ok(vec2_scale(phase, &v))
}

/// Smallest event location `t >= t_start` where the First-form denominator
/// `f - lambda` changes sign or `|f - lambda|` dips below `tol_match`;
/// returns `b` when there is none. Refined to `1e-12 * (b - a)`.
pub fn find_next_crossing<F: MatrixField>(
    field: &F,
    branch: Branch,
    t_start: f64,
    grid: &Grid,
    tol_match: f64,
) -> Result<f64, WalkError> {
    let ev = next_crossing_for_form(field, branch, Form::First, t_start, grid, tol_match)?;
    Ok(ev.unwrap_or(grid.interval().b))
}

fn next_crossing_for_form<F: MatrixField>(
    field: &F,
    branch: Branch,
    form: Form,
    from: f64,
    grid: &Grid,
    tol_match: f64,
) -> Result<Option<f64>, WalkError> {
    let iv = grid.interval();
    let n = grid.len();
    if from >= iv.b {
        return Ok(None);
    }
    let refine_tol = 1e-12 * iv.length();
    let d = |t: f64| denominator(field, branch, form, t);
    // |d| for minimization; evaluation failures rank last.
    let abs_d = |t: f64| d(t).map(|x| x.abs()).unwrap_or(f64::INFINITY);

    let mut prev2: Option<(f64, f64)> = None;
    let mut prev_t = from;
    let mut prev_d = d(from)?;

    let start_idx = {
        let mut i = grid.cell_of(from);
        while grid.point(i) <= from {
            i += 1;
            if i >= n {
                return Ok(None);
            }
        }
        i
    };

    for i in start_idx..n {
        let t_i = grid.point(i);
        let d_i = d(t_i)?;
        if d_i.abs() <= tol_match {
            // Dip below tolerance: locate the touch point inside the
            // bracket that encloses the whole sub-tolerance run.
            let mut j = i;
            while j + 1 < n {
                if d(grid.point(j + 1))?.abs() <= tol_match {
                    j += 1;
                } else {
                    break;
                }
            }
            let hi = grid.point((j + 1).min(n - 1));
            let (t_star, _) = golden_min(abs_d, prev_t, hi, refine_tol);
            return Ok(Some(t_star));
        }
        if prev_d * d_i < 0.0 {
            let root = bisect_root(|t| d(t).unwrap_or(f64::NAN), prev_t, t_i, refine_tol);
            return Ok(Some(root));
        }
        if let Some((t_pp, d_pp)) = prev2 {
            if prev_d.abs() < d_pp.abs() && prev_d.abs() <= d_i.abs() {
                let (t_star, d_star) = golden_min(abs_d, t_pp, t_i, refine_tol);
                if d_star <= tol_match {
                    return Ok(Some(t_star));
                }
            }
        }
        prev2 = Some((prev_t, prev_d));
        prev_t = t_i;
        prev_d = d_i;
    }

    // A zero may hide between the last two nodes with the end node closest.
    if let Some((t_pp, d_pp)) = prev2 {
        if prev_d.abs() < d_pp.abs() {
            let (t_star, d_star) = golden_min(abs_d, t_pp, iv.b, refine_tol);
            if d_star <= tol_match {
                return Ok(Some(t_star));
            }
        }
    }
    Ok(None)
}

/// Largest grid point `alpha` in `(t_prev, t_cross)` where the other form's
/// denominator keeps at least half its magnitude at the crossing and the
/// active denominator is still above `tol_match`: both forms are valid
/// there, so the matching constant is well conditioned.
pub fn handoff_alpha<F: MatrixField>(
    field: &F,
    branch: Branch,
    t_cross: f64,
    t_prev: f64,
    grid: &Grid,
    tol_match: f64,
) -> Result<f64, WalkError> {
    handoff_for_form(field, branch, Form::First, t_cross, t_prev, grid, tol_match)
}

fn handoff_for_form<F: MatrixField>(
    field: &F,
    branch: Branch,
    active: Form,
    t_cross: f64,
    t_prev: f64,
    grid: &Grid,
    tol_match: f64,
) -> Result<f64, WalkError> {
    let other = active.other();
    let other_at_cross = denominator(field, branch, other, t_cross)?.abs();
    let n = grid.len();
    let mut i = grid.cell_of(t_cross) + 1;
    loop {
        if i == 0 {
            break;
        }
        i -= 1;
        if i >= n {
            continue;
        }
        let alpha = grid.point(i);
        if alpha >= t_cross {
            continue;
        }
        if alpha <= t_prev {
            break;
        }
        let other_mag = denominator(field, branch, other, alpha)?.abs();
        let active_mag = denominator(field, branch, active, alpha)?.abs();
        if other_mag >= 0.5 * other_at_cross && active_mag >= tol_match {
            return Ok(alpha);
        }
    }
    Err(WalkError::NoValidHandoff { t_cross })
}

/// Run the construction over the whole interval for one branch.
///
/// `v0` must be a nonzero eigenvector of `A(a)` for the branch (eigen
/// residual within `tol_resid`, relative). The track starts at exactly
/// `v0` and stays continuous through every handoff.
pub fn walk<F: MatrixField>(
    field: &F,
    branch: Branch,
    v0: Vec2,
    grid: &Grid,
    opts: &WalkOptions,
) -> Result<EigenTrack, WalkError> {
    let iv = grid.interval();
    let a = iv.a;
    let b = iv.b;

    let v0_norm = vec2_norm(&v0);
    if v0_norm == 0.0 {
        return Err(WalkError::BadInitialVector {
            reason: "zero vector".to_string(),
        });
    }
    let m_a = field.at(a)?;
    let lambda_a = branch.lambda(eigenvalues(&m_a));
    let av = m_a.apply(v0);
    let resid = vec2_norm(&[av[0] - lambda_a * v0[0], av[1] - lambda_a * v0[1]]);
    if resid > opts.tol_resid * v0_norm {
        return Err(WalkError::BadInitialVector {
            reason: format!(
                "eigen residual {:.3e} exceeds {:.3e} for branch {}",
                resid,
                opts.tol_resid * v0_norm,
                branch.label()
            ),
        });
    }

    let mut form = applicable_form(field, branch, a, opts.tol_match)?;

    let u0 = form_vector(field, branch, form, a)?;
    let k = vec2_argmax(&u0);
    let mut scale = v0[k] / u0[k];
    if scale.norm() == 0.0 {
        return Err(WalkError::BadInitialVector {
            reason: "initial vector is not parallel to the form vector".to_string(),
        });
    }

    let mut segments: Vec<Segment> = Vec::new();
    let mut seg_start = a;
    let mut search_from = a;
    let mut switches = 0usize;

    loop {
        let event = next_crossing_for_form(field, branch, form, search_from, grid, opts.tol_match)?;
        match event {
            None => {
                segments.push(Segment {
                    start: seg_start,
                    end: b,
                    form,
                    scale,
                    min_denom: 0.0,
                });
                break;
            }
            Some(t_cross) => {
                if switches >= opts.max_switches {
                    return Err(WalkError::MaxSwitchesExceeded {
                        cap: opts.max_switches,
                    });
                }
                let other = form.other();
                let other_mag = denominator(field, branch, other, t_cross)?.abs();
                if other_mag < opts.tol_match {
                    return Err(WalkError::BothDenominatorsSmall { t: t_cross });
                }
                let alpha =
                    handoff_for_form(field, branch, form, t_cross, seg_start, grid, opts.tol_match)?;
                let u_cur = form_vector(field, branch, form, alpha)?;
                let w_new = form_vector(field, branch, other, alpha)?;
                let k = vec2_argmax(&w_new);
                let c2 = u_cur[k] / w_new[k];
                segments.push(Segment {
                    start: seg_start,
                    end: alpha,
                    form,
                    scale,
                    min_denom: 0.0,
                });
                scale *= c2;
                form = other;
                seg_start = alpha;
                switches += 1;
                search_from = (alpha + opts.hysteresis_steps as f64 * grid.spacing()).min(b);
            }
        }
    }

    // Record the smallest |denominator| seen on each segment.
    for seg in &mut segments {
        let mut min_d = denominator(field, branch, seg.form, seg.start)?
            .abs()
            .min(denominator(field, branch, seg.form, seg.end)?.abs());
        for t in grid.points() {
            if t > seg.start && t < seg.end {
                min_d = min_d.min(denominator(field, branch, seg.form, t)?.abs());
            }
        }
        seg.min_denom = min_d;
    }

    Ok(EigenTrack {
        branch,
        segments,
        interval: iv,
    })
}

/// Count the zero events of `f - lambda` (or `g - lambda`) on the grid:
/// maximal runs of `|d| <= tol_match` plus adjacent sign flips. This is the
/// quantity the termination bound of the construction is stated against.
pub fn denominator_zero_events<F: MatrixField>(
    field: &F,
    branch: Branch,
    form: Form,
    grid: &Grid,
    tol_match: f64,
) -> Result<usize, WalkError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Class {
        Zero,
        Pos,
        Neg,
    }
    let mut events = 0usize;
    let mut prev: Option<Class> = None;
    for t in grid.points() {
        let d = denominator(field, branch, form, t)?;
        let c = if d.abs() <= tol_match {
            Class::Zero
        } else if d > 0.0 {
            Class::Pos
        } else {
            Class::Neg
        };
        match (prev, c) {
            (Some(Class::Zero), Class::Zero) => {}
            (_, Class::Zero) => events += 1,
            (Some(Class::Pos), Class::Neg) | (Some(Class::Neg), Class::Pos) => events += 1,
            _ => {}
        }
        prev = Some(c);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::HermitianField;

    fn field(f: &str, g: &str, hr: &str, hi: &str, a: f64, b: f64) -> HermitianField {
        HermitianField::from_exprs(f, g, hr, hi, Interval::new(a, b).unwrap()).unwrap()
    }

    fn opts() -> WalkOptions {
        WalkOptions::default()
    }

    #[test]
    fn constant_gap_has_no_crossing() {
        // f = 0, g = 0, h = 1: lambda+ = 1, f - lambda = -1 everywhere.
        let fld = field("0", "0", "1", "0", 0.0, 1.0);
        let grid = Grid::new(0.0, 1.0, 101).unwrap();
        let t = find_next_crossing(&fld, Branch::Plus, 0.0, &grid, 1e-9).unwrap();
        assert_eq!(t, 1.0);
    }

    #[test]
    fn crossing_from_right_endpoint_is_endpoint() {
        let fld = field("0", "0", "1", "0", 0.0, 1.0);
        let grid = Grid::new(0.0, 1.0, 101).unwrap();
        let t = find_next_crossing(&fld, Branch::Plus, 1.0, &grid, 1e-9).unwrap();
        assert_eq!(t, 1.0);
    }

    #[test]
    fn tangential_crossing_located_against_independent_minimizer() {
        // f = 1, g = -1, h = t: lambda+ = sqrt(1 + t^2) touches f exactly at
        // t = 0 (where h vanishes), tangentially. Oracle: golden-section on
        // |f - lambda+| written out by hand, independent of the field code.
        let fld = field("1", "-1", "t", "0", -1.0, 1.0);
        let grid = Grid::new(-1.0, 1.0, 801).unwrap();
        let ev = next_crossing_for_form(&fld, Branch::Plus, Form::First, -1.0, &grid, 1e-9)
            .unwrap()
            .expect("lambda+ touches f at 0");
        let oracle = |t: f64| (1.0 - (1.0 + t * t).sqrt()).abs();
        let (t_oracle, _) = crate::numeric::golden_min(oracle, -0.5, 0.5, 1e-14);
        assert!(
            (ev - t_oracle).abs() <= 1e-8,
            "walk {} vs oracle {}",
            ev,
            t_oracle
        );
        // The minus branch never meets f on this field: lambda- <= -1 < 1.
        let none = next_crossing_for_form(&fld, Branch::Minus, Form::First, -1.0, &grid, 1e-9).unwrap();
        assert_eq!(none, None);
    }

    #[test]
    fn handoff_on_constant_field_is_last_interior_point() {
        let fld = field("1", "2", "0.1", "0", 0.0, 1.0);
        let grid = Grid::new(0.0, 1.0, 11).unwrap();
        // Artificial crossing at b.
        let alpha = handoff_alpha(&fld, Branch::Plus, 1.0, 0.0, &grid, 1e-9).unwrap();
        assert!((alpha - 0.9).abs() < 1e-12);
    }

    #[test]
    fn handoff_needs_interior_points() {
        let fld = field("1", "2", "0.1", "0", 0.0, 1.0);
        let grid = Grid::new(0.0, 1.0, 2).unwrap();
        assert!(matches!(
            handoff_alpha(&fld, Branch::Plus, 1.0, 0.0, &grid, 1e-9),
            Err(WalkError::NoValidHandoff { .. })
        ));
    }

    #[test]
    fn constant_field_walk_is_single_segment() {
        let fld = field("1", "2", "0.1", "0", 0.0, 1.0);
        let grid = Grid::new(0.0, 1.0, 101).unwrap();
        let v0 = initial_vector(&fld, Branch::Plus, &opts()).unwrap();
        let track = walk(&fld, Branch::Plus, v0, &grid, &opts()).unwrap();
        assert_eq!(track.segments.len(), 1);
        assert_eq!(track.switch_count(), 0);
        assert!(track.segments[0].min_denom > 0.0);
    }

    #[test]
    fn single_crossing_walk_has_two_segments() {
        // f - lambda- touches zero once, at t = 0 (h vanishes there).
        let fld = field("-1", "1", "t", "0", -1.0, 1.0);
        let grid = Grid::new(-1.0, 1.0, 1001).unwrap();
        let v0 = initial_vector(&fld, Branch::Minus, &opts()).unwrap();
        let track = walk(&fld, Branch::Minus, v0, &grid, &opts()).unwrap();
        assert_eq!(track.segments.len(), 2, "segments: {:?}", track.segments);
        // Continuity at the handoff: both segments agree there.
        let alpha = track.segments[0].end;
        let left = {
            let seg = track.segments[0];
            let u = form_vector(&fld, Branch::Minus, seg.form, alpha).unwrap();
            vec2_scale(seg.scale, &u)
        };
        let right = {
            let seg = track.segments[1];
            let u = form_vector(&fld, Branch::Minus, seg.form, alpha).unwrap();
            vec2_scale(seg.scale, &u)
        };
        let diff = vec2_norm(&[left[0] - right[0], left[1] - right[1]]);
        assert!(
            diff <= 1e-10 * vec2_norm(&left),
            "handoff mismatch {:e}",
            diff
        );
    }

    #[test]
    fn handoff_lands_near_the_crossing() {
        let fld = field("-1", "1", "t", "0", -1.0, 1.0);
        let grid = Grid::new(-1.0, 1.0, 1001).unwrap();
        let t_cross = next_crossing_for_form(&fld, Branch::Minus, Form::First, -1.0, &grid, 1e-9)
            .unwrap()
            .expect("f touches lambda- at 0");
        let alpha =
            handoff_for_form(&fld, Branch::Minus, Form::First, t_cross, -1.0, &grid, 1e-9)
                .unwrap();
        assert!(alpha < t_cross);
        assert!(
            t_cross - alpha <= 10.0 * grid.spacing(),
            "alpha = {} is {} steps before the crossing {}",
            alpha,
            (t_cross - alpha) / grid.spacing(),
            t_cross
        );
    }

    #[test]
    fn walk_tracks_eigenvector_everywhere() {
        let fld = field("-1", "1", "t", "0", -1.0, 1.0);
        let grid = Grid::new(-1.0, 1.0, 1001).unwrap();
        let v0 = initial_vector(&fld, Branch::Minus, &opts()).unwrap();
        let track = walk(&fld, Branch::Minus, v0, &grid, &opts()).unwrap();
        for t in grid.points() {
            let v = track.eval(&fld, t).unwrap();
            let n = vec2_norm(&v);
            assert!(n > 0.0);
            let m = fld.at(t).unwrap();
            let lam = Branch::Minus.lambda(eigenvalues(&m));
            let av = m.apply(v);
            let r = vec2_norm(&[av[0] - lam * v[0], av[1] - lam * v[1]]);
            assert!(r <= 1e-10 * n, "residual {:e} at t = {}", r, t);
        }
    }

    #[test]
    fn rejects_bad_initial_vector() {
        let fld = field("1", "2", "0", "0", 0.0, 1.0);
        let grid = Grid::new(0.0, 1.0, 11).unwrap();
        // (1, 1) is not an eigenvector of diag(1, 2).
        let v0 = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(matches!(
            walk(&fld, Branch::Plus, v0, &grid, &opts()),
            Err(WalkError::BadInitialVector { .. })
        ));
    }

    #[test]
    fn real_field_yields_real_track() {
        let fld = field("cos(t)", "-cos(t)", "sin(t)", "0", 0.0, 3.0);
        let grid = Grid::new(0.0, 3.0, 501).unwrap();
        let v0 = initial_vector(&fld, Branch::Plus, &opts()).unwrap();
        assert_eq!(v0[0].im, 0.0);
        assert_eq!(v0[1].im, 0.0);
        let track = walk(&fld, Branch::Plus, v0, &grid, &opts()).unwrap();
        for t in grid.points() {
            let v = track.eval(&fld, t).unwrap();
            assert_eq!(v[0].im, 0.0);
            assert_eq!(v[1].im, 0.0);
        }
    }

    #[test]
    fn dependent_equations_hold_for_form_vectors() {
        // Whenever the first eigen-equation is satisfied by construction,
        // the second must hold too (the system is dependent).
        let fld = field("cos(t)", "-cos(t)", "sin(t)*cos(t)", "sin(t)^2", 0.1, 3.0);
        let grid = Grid::new(0.1, 3.0, 101).unwrap();
        for t in grid.points() {
            let m = fld.at(t).unwrap();
            let lam = Branch::Plus.lambda(eigenvalues(&m));
            for form in [Form::First, Form::Second] {
                let d = denominator(&fld, Branch::Plus, form, t).unwrap();
                if d.abs() < 1e-6 {
                    continue;
                }
                let v = form_vector(&fld, Branch::Plus, form, t).unwrap();
                // Second eigen-equation residual.
                let r2 = (m.h.conj() * v[0] + (m.g - lam) * v[1]).norm();
                assert!(r2 <= 1e-10, "r2 = {:e} at t = {}", r2, t);
            }
        }
    }

    #[test]
    fn reflection_walk_switches_and_matches_half_angle() {
        use std::f64::consts::PI;
        // A = [[cos t, sin t], [sin t, -cos t]] on [0, 2pi]: lambda = +-1.
        let fld = field("cos(t)", "-cos(t)", "sin(t)", "0", 0.0, 2.0 * PI);
        let grid = Grid::new(0.0, 2.0 * PI, 4001).unwrap();
        let v0 = initial_vector(&fld, Branch::Plus, &opts()).unwrap();
        let track = walk(&fld, Branch::Plus, v0, &grid, &opts()).unwrap();
        assert!(track.switch_count() >= 1, "expected at least one handoff");
        // Track must be parallel to (cos(t/2), sin(t/2)) everywhere.
        for t in grid.points() {
            let v = track.eval(&fld, t).unwrap();
            let c = [(t / 2.0).cos(), (t / 2.0).sin()];
            let cross = (v[0].re * c[1] - v[1].re * c[0]).abs();
            let n = vec2_norm(&v);
            assert!(cross <= 1e-8 * n, "misaligned at t = {}: {:e}", t, cross);
        }
    }

    #[test]
    fn termination_bound_on_reflection_field() {
        use std::f64::consts::PI;
        let fld = field("cos(t)", "-cos(t)", "sin(t)", "0", 0.0, 2.0 * PI);
        let grid = Grid::new(0.0, 2.0 * PI, 4001).unwrap();
        for branch in [Branch::Plus, Branch::Minus] {
            let v0 = initial_vector(&fld, branch, &opts()).unwrap();
            let track = walk(&fld, branch, v0, &grid, &opts()).unwrap();
            let events =
                denominator_zero_events(&fld, branch, Form::First, &grid, 1e-9).unwrap();
            assert!(
                track.switch_count() <= events + 1,
                "branch {:?}: {} switches vs {} events",
                branch,
                track.switch_count(),
                events
            );
        }
    }
}
