//! Built-in example fields with their expected outcomes: smooth fields
//! with a uniform eigenvalue gap, C^1 fields with interior or endpoint
//! coalescence, the two classical counterexamples, and one entry per
//! documented error path.

use crate::report::{exit, Mode};
use crate::scalar::{HermitianField, Interval, TrackError};

/// Smooth bump: exp(-1/t^2) away from 0, 0 at 0. The nested guard makes
/// the value (and its symbolic derivative) well defined at the origin.
const PHI: &str = "piecewise(t<=0, piecewise(t>=0, 0, exp(-1/t^2)), exp(-1/t^2))";
/// One-sided bump: 0 for t <= 0, exp(-1/t^2) for t > 0.
const PSI: &str = "piecewise(t<=0, 0, exp(-1/t^2))";
/// t * chi_[0,1](t).
const T_CHI: &str = "piecewise(t>=0, t, 0)";

const TWO_PI: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Success,
    GapTooSmall,
    Obstruction,
    DerivativeDiscontinuous,
    NotFinitelyMany,
}

impl Expected {
    pub fn exit_code(self) -> i32 {
        match self {
            Expected::Success => exit::OK,
            Expected::GapTooSmall => exit::GAP_TOO_SMALL,
            Expected::Obstruction => exit::OBSTRUCTION,
            Expected::DerivativeDiscontinuous => exit::DERIVATIVE_DISCONTINUOUS,
            Expected::NotFinitelyMany => exit::NOT_FINITELY_MANY,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Expected::Success => "ok",
            Expected::GapTooSmall => "gap-too-small (exit 3)",
            Expected::Obstruction => "obstruction (exit 4)",
            Expected::DerivativeDiscontinuous => "derivative-discontinuous (exit 5)",
            Expected::NotFinitelyMany => "not-finitely-many (exit 6)",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GalleryEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub f: &'static str,
    pub g: &'static str,
    pub h_re: &'static str,
    pub h_im: &'static str,
    pub a: f64,
    pub b: f64,
    /// Mode under which the expected outcome is stated.
    pub mode: Mode,
    pub expected: Expected,
    pub real_symmetric: bool,
    /// Member of the everywhere-distinct-eigenvalues suite.
    pub distinct_suite: bool,
}

impl GalleryEntry {
    pub fn interval(&self) -> Interval {
        Interval::new(self.a, self.b).expect("gallery intervals are valid")
    }

    pub fn field(&self) -> Result<HermitianField, TrackError> {
        HermitianField::from_exprs(self.f, self.g, self.h_re, self.h_im, self.interval())
    }
}

pub const ENTRIES: &[GalleryEntry] = &[
    GalleryEntry {
        id: "const-diag",
        description: "constant diagonal field diag(1, 2)",
        f: "1",
        g: "2",
        h_re: "0",
        h_im: "0",
        a: 0.0,
        b: 1.0,
        mode: Mode::Distinct,
        expected: Expected::Success,
        real_symmetric: true,
        distinct_suite: true,
    },
    GalleryEntry {
        id: "pauli-x",
        description: "constant off-diagonal field with eigenvalues +-1",
        f: "0",
        g: "0",
        h_re: "1",
        h_im: "0",
        a: 0.0,
        b: 1.0,
        mode: Mode::Distinct,
        expected: Expected::Success,
        real_symmetric: true,
        distinct_suite: true,
    },
    GalleryEntry {
        id: "reflection",
        description: "rotating reflection: eigenvalues +-1, eigenvectors at half angle",
        f: "cos(t)",
        g: "-cos(t)",
        h_re: "sin(t)",
        h_im: "0",
        a: 0.0,
        b: TWO_PI,
        mode: Mode::Distinct,
        expected: Expected::Success,
        real_symmetric: true,
        distinct_suite: true,
    },
    GalleryEntry {
        id: "reflection-complex",
        description: "rotating reflection with complex off-diagonal phase",
        f: "cos(t)",
        g: "-cos(t)",
        h_re: "sin(t)*cos(t)",
        h_im: "sin(t)^2",
        a: 0.0,
        b: TWO_PI,
        mode: Mode::Distinct,
        expected: Expected::Success,
        real_symmetric: false,
        distinct_suite: true,
    },
    GalleryEntry {
        id: "avoided-crossing",
        description: "linear crossing opened up by a constant coupling of 0.1",
        f: "t",
        g: "-t",
        h_re: "0.1",
        h_im: "0",
        a: -1.0,
        b: 1.0,
        mode: Mode::Distinct,
        expected: Expected::Success,
        real_symmetric: true,
        distinct_suite: true,
    },
    GalleryEntry {
        id: "single-switch",
        description: "uniform gap 2 but lambda+ touches f once, forcing one handoff",
        f: "1",
        g: "-1",
        h_re: "t",
        h_im: "0",
        a: -1.0,
        b: 1.0,
        mode: Mode::Distinct,
        expected: Expected::Success,
        real_symmetric: true,
        distinct_suite: true,
    },
    GalleryEntry {
        id: "smooth-generic",
        description: "generic smooth field with complex coupling and gap above 1",
        f: "2 + sin(t)",
        g: "cos(2*t)",
        h_re: "0.3*cos(t)",
        h_im: "0.2*sin(3*t)",
        a: 0.0,
        b: 3.0,
        mode: Mode::Distinct,
        expected: Expected::Success,
        real_symmetric: false,
        distinct_suite: true,
    },
    GalleryEntry {
        id: "linear-offdiag",
        description: "f = g = 0, h = t: coalescence at 0, A'(0) has gap 2",
        f: "0",
        g: "0",
        h_re: "t",
        h_im: "0",
        a: -1.0,
        b: 1.0,
        mode: Mode::C1,
        expected: Expected::Success,
        real_symmetric: true,
        distinct_suite: false,
    },
    GalleryEntry {
        id: "linear-diag",
        description: "diag(t, -t): branches cross at 0; U stays constant",
        f: "t",
        g: "-t",
        h_re: "0",
        h_im: "0",
        a: -1.0,
        b: 1.0,
        mode: Mode::C1,
        expected: Expected::Success,
        real_symmetric: true,
        distinct_suite: false,
    },
    GalleryEntry {
        id: "trig-crossing",
        description: "sinusoidal coalescence at 0 with coupled off-diagonal",
        f: "sin(t)",
        g: "-sin(t)",
        h_re: "0.5*sin(2*t)",
        h_im: "0",
        a: -1.0,
        b: 1.0,
        mode: Mode::C1,
        expected: Expected::Success,
        real_symmetric: true,
        distinct_suite: false,
    },
    GalleryEntry {
        id: "double-crossing",
        description: "diag(sin(pi t), -sin(pi t)): three interior coalescences",
        f: "sin(3.141592653589793*t)",
        g: "-sin(3.141592653589793*t)",
        h_re: "0",
        h_im: "0",
        a: -1.5,
        b: 1.5,
        mode: Mode::C1,
        expected: Expected::Success,
        real_symmetric: true,
        distinct_suite: false,
    },
    GalleryEntry {
        id: "endpoint-coalescence",
        description: "diag(t, -t) on [0, 1]: coalescence exactly at the left endpoint",
        f: "t",
        g: "-t",
        h_re: "0",
        h_im: "0",
        a: 0.0,
        b: 1.0,
        mode: Mode::C1,
        expected: Expected::Success,
        real_symmetric: true,
        distinct_suite: false,
    },
    GalleryEntry {
        id: "paper-ex-2.1",
        description: "t[[1, chi],[chi, chi]]: kink at 0, no continuous diagonalization",
        f: "t",
        g: T_CHI,
        h_re: T_CHI,
        h_im: "0",
        a: -1.0,
        b: 1.0,
        mode: Mode::C1,
        expected: Expected::DerivativeDiscontinuous,
        real_symmetric: true,
        distinct_suite: false,
    },
    GalleryEntry {
        id: "paper-ex-smooth",
        description: "phi(t)[[1, chi],[chi, chi]]: C-infinity entries, A'(0) = 0",
        f: PHI,
        g: PSI,
        h_re: PSI,
        h_im: "0",
        a: -1.0,
        b: 1.0,
        mode: Mode::C1,
        expected: Expected::Obstruction,
        real_symmetric: true,
        distinct_suite: false,
    },
    GalleryEntry {
        id: "distinct-on-crossing",
        description: "diag(t, -t) run in distinct mode: the gap check must fail",
        f: "t",
        g: "-t",
        h_re: "0",
        h_im: "0",
        a: -1.0,
        b: 1.0,
        mode: Mode::Distinct,
        expected: Expected::GapTooSmall,
        real_symmetric: true,
        distinct_suite: false,
    },
    GalleryEntry {
        id: "identity-degenerate",
        description: "constant identity: discriminant identically zero",
        f: "1",
        g: "1",
        h_re: "0",
        h_im: "0",
        a: -1.0,
        b: 1.0,
        mode: Mode::C1,
        expected: Expected::NotFinitelyMany,
        real_symmetric: true,
        distinct_suite: false,
    },
];

pub fn entries() -> &'static [GalleryEntry] {
    ENTRIES
}

pub fn find(id: &str) -> Option<&'static GalleryEntry> {
    ENTRIES.iter().find(|e| e.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Grid, MatrixField};

    #[test]
    fn inventory_is_complete() {
        assert!(entries().len() >= 9);
        let distinct = entries().iter().filter(|e| e.distinct_suite).count();
        assert!(distinct >= 5);
        let complex_distinct = entries()
            .iter()
            .filter(|e| e.distinct_suite && !e.real_symmetric)
            .count();
        assert!(complex_distinct >= 1);
        let c1_interior = entries()
            .iter()
            .filter(|e| {
                e.mode == Mode::C1 && e.expected == Expected::Success && e.a < 0.0
            })
            .count();
        assert!(c1_interior >= 3, "interior-coalescence entries: {}", c1_interior);
        assert!(find("endpoint-coalescence").is_some());
        assert!(find("paper-ex-2.1").is_some());
        assert!(find("paper-ex-smooth").is_some());
    }

    #[test]
    fn ids_are_unique_and_fields_build() {
        let mut seen = std::collections::HashSet::new();
        for e in entries() {
            assert!(seen.insert(e.id), "duplicate id {}", e.id);
            let field = e.field().unwrap();
            // Every field evaluates across its interval.
            let grid = Grid::new(e.a, e.b, 97).unwrap();
            for t in grid.points() {
                field.at(t).unwrap();
            }
        }
    }

    #[test]
    fn distinct_suite_has_uniform_gap() {
        for e in entries().iter().filter(|e| e.distinct_suite) {
            let field = e.field().unwrap();
            let grid = Grid::new(e.a, e.b, 2001).unwrap();
            let mut min_gap = f64::INFINITY;
            for t in grid.points() {
                min_gap = min_gap.min(field.at(t).unwrap().gap());
            }
            assert!(
                min_gap > 0.15,
                "{}: min gap {} too small for the distinct suite",
                e.id,
                min_gap
            );
        }
    }

    #[test]
    fn real_flags_are_accurate() {
        for e in entries() {
            if e.real_symmetric {
                assert_eq!(e.h_im, "0", "{} claims real symmetry", e.id);
            }
        }
    }
}
