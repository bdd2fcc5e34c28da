//! Minimal 2x2 complex matrix and 2-vector helpers. Row-major.

use num_complex::Complex64;

use crate::scalar::Herm2;

pub type Vec2 = [Complex64; 2];

pub fn vec2_norm(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub fn vec2_scale(c: Complex64, v: &Vec2) -> Vec2 {
    [c * v[0], c * v[1]]
}

pub fn vec2_sub(a: &Vec2, b: &Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// Hermitian inner product `<a, b> = conj(a) . b`.
pub fn vec2_inner(a: &Vec2, b: &Vec2) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

pub fn vec2_normalize(v: &Vec2) -> Vec2 {
    let n = vec2_norm(v);
    [v[0] / n, v[1] / n]
}

/// Index of the larger-magnitude component.
pub fn vec2_argmax(v: &Vec2) -> usize {
    if v[0].norm_sqr() >= v[1].norm_sqr() {
        0
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Mat2 {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Mat2([[one, zero], [zero, one]])
    }

    pub fn from_columns(c0: &Vec2, c1: &Vec2) -> Mat2 {
        Mat2([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    pub fn from_herm(m: &Herm2) -> Mat2 {
        Mat2([
            [Complex64::new(m.f, 0.0), m.h],
            [m.h.conj(), Complex64::new(m.g, 0.0)],
        ])
    }

    pub fn column(&self, j: usize) -> Vec2 {
        [self.0[0][j], self.0[1][j]]
    }

    pub fn adjoint(&self) -> Mat2 {
        Mat2([
            [self.0[0][0].conj(), self.0[1][0].conj()],
            [self.0[0][1].conj(), self.0[1][1].conj()],
        ])
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        Mat2(out)
    }

    pub fn sub(&self, rhs: &Mat2) -> Mat2 {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.0[i][j] - rhs.0[i][j];
            }
        }
        Mat2(out)
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// `||U* U - I||_F`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().mul(self).sub(&Mat2::identity()).frobenius_norm()
    }
}
