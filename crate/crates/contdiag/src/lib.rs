//! Continuous diagonalization of 2x2 hermitian matrix fields.
//!
//! Given `A(t) = [[f, h], [conj(h), g]]` with continuous entries on a
//! compact interval, this crate constructs a continuous unitary `U(t)`
//! with `U(t)* A(t) U(t)` diagonal:
//!
//! * when the eigenvalues stay distinct, by a segmentwise eigenvector walk
//!   that switches between the two row parametrizations at crossings;
//! * when the eigenvalues coalesce at finitely many points but the field
//!   is C^1 with a spectrally nondegenerate derivative there, by the
//!   signed-norm / l'Hopital continuation through the normalized field
//!   `C(t) = B(t) / tau(t)`;
//!
//! and detects the situations where no continuous diagonalization exists.

pub mod expr;
pub mod gallery;
pub mod mat2;
pub mod numeric;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod signed_norm;
pub mod spectral;
pub mod walk;

pub use expr::{parse_expr, Expr};
pub use pipeline::{
    check_obstruction, diagonalize_c1, diagonalize_distinct, PipelineError, PipelineOptions,
    UnitaryTrack,
};
pub use scalar::{Grid, Herm2, HermitianField, Interval, MatrixField, ScalarField, ScalarTrack};
pub use spectral::{eigenvalues, eigenvalues_at, find_coalescence, EigenPair};
pub use walk::{walk, Branch, EigenTrack};
