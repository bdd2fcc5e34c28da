//! Independent continuity reference: pointwise eigendecomposition at each
//! grid node, with column order and phases chosen greedily to match the
//! previous node. A decomposition that cannot be made continuous shows up
//! as a jump that refuses to shrink under grid refinement.

use num_complex::Complex64;

use crate::mat2::{vec2_inner, vec2_norm, vec2_normalize, vec2_scale, Mat2, Vec2};
use crate::scalar::{Grid, Herm2, MatrixField, TrackError};
use crate::spectral::eigenvalues;

#[derive(Debug, Clone)]
pub struct OracleTrack {
    pub grid: Grid,
    pub mats: Vec<Mat2>,
    /// Frobenius jumps between consecutive nodes (length n - 1).
    pub jumps: Vec<f64>,
    pub max_jump: f64,
    /// Midpoint of the step where the largest jump occurs.
    pub max_jump_at: f64,
}

/// Eigenvector candidates for one eigenvalue: `(h, lambda - f)` and
/// `(lambda - g, conj h)` both solve the eigen-equations; take the better
/// conditioned one. Near a coalescence both collapse; report `None`.
fn eigenvector_for(m: &Herm2, lambda: f64) -> Option<Vec2> {
    let cand_a: Vec2 = [m.h, Complex64::new(lambda - m.f, 0.0)];
    let cand_b: Vec2 = [Complex64::new(lambda - m.g, 0.0), m.h.conj()];
    let (na, nb) = (vec2_norm(&cand_a), vec2_norm(&cand_b));
    let scale = 1.0 + m.frobenius_norm();
    let floor = 1e-14 * scale;
    if na >= nb {
        if na <= floor {
            return None;
        }
        Some(vec2_normalize(&cand_a))
    } else {
        if nb <= floor {
            return None;
        }
        Some(vec2_normalize(&cand_b))
    }
}

/// Rotate `v` so that `<anchor, v>` is real and nonnegative.
fn phase_align(anchor: &Vec2, v: &Vec2) -> Vec2 {
    let ip = vec2_inner(anchor, v);
    let mag = ip.norm();
    if mag == 0.0 {
        return *v;
    }
    vec2_scale(ip.conj() / mag, v)
}

fn alignment_score(prev: &Mat2, c0: &Vec2, c1: &Vec2) -> f64 {
    vec2_inner(&prev.column(0), c0).norm() + vec2_inner(&prev.column(1), c1).norm()
}

/// Run the pointwise oracle on the grid. `init` anchors column order and
/// phases at the first node (defaults to the identity).
pub fn pointwise_oracle<F: MatrixField>(
    field: &F,
    grid: &Grid,
    init: Option<Mat2>,
) -> Result<OracleTrack, TrackError> {
    let n = grid.len();
    let mut mats: Vec<Mat2> = Vec::with_capacity(n);
    let mut prev = init.unwrap_or_else(Mat2::identity);

    for t in grid.points() {
        let m = field.at(t)?;
        let e = eigenvalues(&m);
        let plus = eigenvector_for(&m, e.plus);
        let minus = eigenvector_for(&m, e.minus);
        let next = match (plus, minus) {
            (Some(p), Some(q)) => {
                // Try both column orders; keep the better aligned one.
                let direct = alignment_score(&prev, &p, &q);
                let swapped = alignment_score(&prev, &q, &p);
                let (c0, c1) = if direct >= swapped { (p, q) } else { (q, p) };
                Mat2::from_columns(
                    &phase_align(&prev.column(0), &c0),
                    &phase_align(&prev.column(1), &c1),
                )
            }
            (Some(p), None) | (None, Some(p)) => {
                // One healthy direction; complete with its orthogonal
                // complement, then align both to the previous node.
                let q: Vec2 = [-p[1].conj(), p[0].conj()];
                let direct = alignment_score(&prev, &p, &q);
                let swapped = alignment_score(&prev, &q, &p);
                let (c0, c1) = if direct >= swapped { (p, q) } else { (q, p) };
                Mat2::from_columns(
                    &phase_align(&prev.column(0), &c0),
                    &phase_align(&prev.column(1), &c1),
                )
            }
            // Scalar matrix: every basis diagonalizes; stay where we are.
            (None, None) => prev,
        };
        mats.push(next);
        prev = next;
    }

    let mut jumps = Vec::with_capacity(n - 1);
    let mut max_jump = 0.0f64;
    let mut max_jump_at = grid.point(0);
    for i in 0..n - 1 {
        let j = mats[i + 1].sub(&mats[i]).frobenius_norm();
        if j > max_jump {
            max_jump = j;
            max_jump_at = 0.5 * (grid.point(i) + grid.point(i + 1));
        }
        jumps.push(j);
    }

    Ok(OracleTrack {
        grid: grid.clone(),
        mats,
        jumps,
        max_jump,
        max_jump_at,
    })
}

/// Column-by-column agreement between a produced unitary track and the
/// oracle: `|<u_j(t_i), o_j(t_i)>|` per node and column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentStats {
    pub min_alignment: f64,
    pub min_at: f64,
    pub per_column_min: [f64; 2],
}

pub fn alignment_stats(grid: &Grid, produced: &[Mat2], oracle: &[Mat2]) -> AlignmentStats {
    assert_eq!(produced.len(), oracle.len());
    let mut stats = AlignmentStats {
        min_alignment: f64::INFINITY,
        min_at: grid.point(0),
        per_column_min: [f64::INFINITY; 2],
    };
    for (i, (u, o)) in produced.iter().zip(oracle).enumerate() {
        for j in 0..2 {
            let a = vec2_inner(&u.column(j), &o.column(j)).norm();
            if a < stats.per_column_min[j] {
                stats.per_column_min[j] = a;
            }
            if a < stats.min_alignment {
                stats.min_alignment = a;
                stats.min_at = grid.point(i);
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{HermitianField, Interval};

    fn field(f: &str, g: &str, hr: &str, hi: &str, a: f64, b: f64) -> HermitianField {
        HermitianField::from_exprs(f, g, hr, hi, Interval::new(a, b).unwrap()).unwrap()
    }

    #[test]
    fn constant_field_has_no_jump() {
        let fld = field("1", "2", "0", "0", 0.0, 1.0);
        let grid = Grid::new(0.0, 1.0, 101).unwrap();
        let track = pointwise_oracle(&fld, &grid, None).unwrap();
        assert!(track.max_jump <= 1e-12, "max jump {}", track.max_jump);
    }

    #[test]
    fn smooth_field_jump_shrinks_with_refinement() {
        let fld = field("cos(t)", "-cos(t)", "sin(t)", "0", 0.0, 3.0);
        let coarse = pointwise_oracle(&fld, &Grid::new(0.0, 3.0, 1001).unwrap(), None).unwrap();
        let fine = pointwise_oracle(&fld, &Grid::new(0.0, 3.0, 4001).unwrap(), None).unwrap();
        assert!(fine.max_jump < coarse.max_jump);
        assert!(coarse.max_jump < 0.02);
    }

    #[test]
    fn branch_swap_through_coalescence_stays_continuous() {
        // A = diag(t, -t): the pointwise branches cross at 0 but the greedy
        // column permutation keeps the oracle continuous.
        let fld = field("t", "-t", "0", "0", -1.0, 1.0);
        let grid = Grid::new(-1.0, 1.0, 1001).unwrap();
        let track = pointwise_oracle(&fld, &grid, None).unwrap();
        assert!(track.max_jump <= 1e-12, "max jump {}", track.max_jump);
    }

    #[test]
    fn genuine_obstruction_keeps_order_one_jump() {
        // A = t [[1, chi], [chi, chi]]: no continuous diagonalization at 0.
        let fld = field(
            "t",
            "piecewise(t>=0, t, 0)",
            "piecewise(t>=0, t, 0)",
            "0",
            -1.0,
            1.0,
        );
        let coarse = pointwise_oracle(&fld, &Grid::new(-1.0, 1.0, 1001).unwrap(), None).unwrap();
        let fine = pointwise_oracle(&fld, &Grid::new(-1.0, 1.0, 4001).unwrap(), None).unwrap();
        assert!(coarse.max_jump > 0.5, "coarse jump {}", coarse.max_jump);
        assert!(fine.max_jump > 0.5, "fine jump {}", fine.max_jump);
        assert!(coarse.max_jump_at.abs() < 1e-2);
        assert!(fine.max_jump_at.abs() < 1e-2);
    }
}
