//! Small fixed-size linear algebra for two-state chains.
//!
//! Everything downstream of the hidden chain works with 2x2 matrices and
//! 2-vectors, so a dedicated `Mat2` keeps the hot paths allocation free.

use std::ops::{Add, Mul};

/// Row vector over the two hidden states.
pub type Vec2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);

    pub fn new(a00: f64, a01: f64, a10: f64, a11: f64) -> Self {
        Mat2([[a00, a01], [a10, a11]])
    }

    pub fn diag(d: Vec2) -> Self {
        Mat2([[d[0], 0.0], [0.0, d[1]]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn scale(&self, s: f64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    /// `v * self` for a row vector `v`.
    #[inline]
    pub fn left_mul(&self, v: Vec2) -> Vec2 {
        let m = &self.0;
        [
            v[0] * m[0][0] + v[1] * m[1][0],
            v[0] * m[0][1] + v[1] * m[1][1],
        ]
    }

    /// `self * v` for a column vector `v`.
    #[inline]
    pub fn right_mul(&self, v: Vec2) -> Vec2 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Scales column `j` by `d[j]`, i.e. `self * diag(d)`.
    pub fn mul_diag(&self, d: Vec2) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * d[0], m[0][1] * d[1]], [m[1][0] * d[0], m[1][1] * d[1]]])
    }

    pub fn row_sums(&self) -> Vec2 {
        [self.0[0][0] + self.0[0][1], self.0[1][0] + self.0[1][1]]
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        d
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

/// Below this eigenvalue half-gap the repeated-eigenvalue limit is used.
const REPEATED_GAP: f64 = 1e-8;

/// `exp(A t)` in closed form.
///
/// Writes `A = mI + N` with `N^2 = delta I`, so that
/// `exp(At) = e^{mt} (cosh(rt) I + sinh(rt)/r N)` with `r = sqrt(delta)`.
/// The hyperbolic pair is evaluated through `expm1` to avoid cancellation
/// when the two eigenvalues are close.
pub fn expm(a: &Mat2, t: f64) -> Mat2 {
    if t == 0.0 {
        return Mat2::IDENTITY;
    }
    let m = 0.5 * (a.0[0][0] + a.0[1][1]);
    let d = 0.5 * (a.0[0][0] - a.0[1][1]);
    let delta = d * d + a.0[0][1] * a.0[1][0];

    // c = e^{mt} cosh(rt), s = e^{mt} sinh(rt) / r
    let (c, s) = if delta >= 0.0 {
        let r = delta.sqrt();
        if r < REPEATED_GAP {
            let e = (m * t).exp();
            let x2 = (r * t) * (r * t);
            (e * (1.0 + 0.5 * x2), e * t * (1.0 + x2 / 6.0))
        } else {
            let lo = ((m - r) * t).exp();
            let hi = ((m + r) * t).exp();
            (0.5 * (lo + hi), lo * (2.0 * r * t).exp_m1() / (2.0 * r))
        }
    } else {
        let r = (-delta).sqrt();
        let e = (m * t).exp();
        (e * (r * t).cos(), e * (r * t).sin() / r)
    };

    Mat2([
        [c + s * d, s * a.0[0][1]],
        [s * a.0[1][0], c - s * d],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    // Plain Taylor series with scaling and squaring, used only as a reference.
    fn expm_series(a: &Mat2, t: f64) -> Mat2 {
        let mut k = 0;
        let mut scaled = a.scale(t);
        while scaled.0.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())) > 0.1 {
            scaled = scaled.scale(0.5);
            k += 1;
        }
        let mut term = Mat2::IDENTITY;
        let mut sum = Mat2::IDENTITY;
        for n in 1..30 {
            term = (term * scaled).scale(1.0 / n as f64);
            sum = sum + term;
        }
        for _ in 0..k {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn matches_series_reference() {
        let cases = [
            Mat2::new(-0.3, 0.1, 0.1, -0.4),
            Mat2::new(-1.0, 1.0, 2.0, -2.0),
            Mat2::new(0.5, 0.0, 0.0, 0.5),
            Mat2::new(-0.2, 0.3, -0.4, 0.1),
            Mat2::new(-3.1, 0.1, 0.1, -3.1 + 1e-12),
        ];
        for a in cases {
            for t in [0.0, 0.01, 1.0, 3.7] {
                let got = expm(&a, t);
                let want = expm_series(&a, t);
                assert!(got.max_abs_diff(&want) < 1e-12, "{a:?} t={t}");
            }
        }
    }

    #[test]
    fn repeated_eigenvalue_branch_is_continuous() {
        let base = Mat2::new(-0.5, 1e-9, 1e-9, -0.5);
        let near = Mat2::new(-0.5, 1e-7, 1e-7, -0.5);
        let a = expm(&base, 2.0);
        let b = expm(&near, 2.0);
        assert!(a.max_abs_diff(&b) < 1e-6);
    }
}
