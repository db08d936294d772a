//! Small dense 2x2 complex matrices.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub const fn zero() -> Self {
        Mat2([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2([[a, ZERO], [ZERO, d]])
    }

    /// Entry with 1-based indices, matching the `e_jk` notation.
    #[inline]
    pub fn e(&self, j: usize, k: usize) -> C64 {
        self.0[j - 1][k - 1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Exponential of a trace-free matrix: `exp(W) = cosh(s) I + sinh(s)/s W`
    /// with `s^2 = -det W`. The result has unit determinant up to rounding.
    pub fn exp_traceless(&self) -> Mat2 {
        let u = self.square_scalar();
        let (c, s) = cosh_sinhc(u);
        Mat2::identity().scale(c) + self.scale(s)
    }

    /// Exponential together with its directional (Frechet) derivative along a
    /// trace-free direction `dir`.
    pub fn exp_traceless_with_derivative(&self, dir: &Mat2) -> (Mat2, Mat2) {
        let w = &self.0;
        let d = &dir.0;
        let u = self.square_scalar();
        let du = C64::new(2.0, 0.0) * w[0][0] * d[0][0] + w[0][1] * d[1][0] + w[1][0] * d[0][1];
        let (c, s) = cosh_sinhc(u);
        let ds_du = sinhc_derivative(u, c, s);
        let exp = Mat2::identity().scale(c) + self.scale(s);
        let dexp = Mat2::identity().scale(s * 0.5 * du) + self.scale(ds_du * du) + dir.scale(s);
        (exp, dexp)
    }

    /// `u` with `W^2 = u I` for trace-free `W`.
    fn square_scalar(&self) -> C64 {
        let w = &self.0;
        w[0][0] * w[0][0] + w[0][1] * w[1][0]
    }
}

/// `(cosh sqrt(u), sinh sqrt(u) / sqrt(u))`, both entire in `u`.
fn cosh_sinhc(u: C64) -> (C64, C64) {
    if u.norm() < 0.5 {
        // Taylor series: terms decay like u^k / (2k)!.
        let mut c = ONE;
        let mut s = ONE;
        let mut tc = ONE;
        let mut ts = ONE;
        for k in 1..12 {
            let kf = k as f64;
            tc = tc * u / ((2.0 * kf - 1.0) * (2.0 * kf));
            ts = ts * u / ((2.0 * kf) * (2.0 * kf + 1.0));
            c += tc;
            s += ts;
        }
        (c, s)
    } else {
        let r = u.sqrt();
        (r.cosh(), r.sinh() / r)
    }
}

/// d/du of sinh(sqrt u)/sqrt u.
fn sinhc_derivative(u: C64, c: C64, s: C64) -> C64 {
    if u.norm() < 0.5 {
        // sum_{k>=1} k u^{k-1} / (2k+1)!
        let mut acc = ZERO;
        let mut pow = ONE;
        let mut fact = 6.0; // 3!
        for k in 1..14 {
            acc += pow * (k as f64 / fact);
            pow *= u;
            let kf = k as f64;
            fact *= (2.0 * kf + 2.0) * (2.0 * kf + 3.0);
        }
        acc
    } else {
        (c - s) / (u * 2.0)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
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

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_exp(m: &Mat2) -> Mat2 {
        // scaling and squaring with a long Taylor series
        let k = 6;
        let small = m.scale(C64::new(1.0 / (1u64 << k) as f64, 0.0));
        let mut term = Mat2::identity();
        let mut acc = Mat2::identity();
        for n in 1..30 {
            term = (term * small).scale(C64::new(1.0 / n as f64, 0.0));
            acc = acc + term;
        }
        for _ in 0..k {
            acc = acc * acc;
        }
        acc
    }

    #[test]
    fn exp_matches_taylor_oracle() {
        for w in [
            Mat2::new(C64::new(0.1, 0.2), C64::new(-0.3, 0.0), C64::new(0.05, 0.4), C64::new(-0.1, -0.2)),
            Mat2::new(C64::new(0.0, 2.0), C64::new(0.7, -0.1), C64::new(0.2, 0.3), C64::new(0.0, -2.0)),
            Mat2::zero(),
        ] {
            let e = w.exp_traceless();
            let b = brute_exp(&w);
            assert!((e - b).max_abs() < 1e-11, "{:?} vs {:?}", e, b);
            assert!((e.det() - ONE).norm() < 1e-13);
        }
    }

    #[test]
    fn frechet_derivative_matches_finite_difference() {
        let w = Mat2::new(C64::new(0.0, 0.3), C64::new(0.2, 0.1), C64::new(-0.4, 0.0), C64::new(0.0, -0.3));
        let w_big = w.scale(C64::new(4.0, 0.0));
        let dir = Mat2::new(C64::new(0.0, 1.0), C64::new(0.1, 0.0), C64::new(0.0, 0.2), C64::new(0.0, -1.0));
        for base in [w, w_big] {
            let (_, d) = base.exp_traceless_with_derivative(&dir);
            let h = 1e-6;
            let plus = (base + dir.scale(C64::new(h, 0.0))).exp_traceless();
            let minus = (base - dir.scale(C64::new(h, 0.0))).exp_traceless();
            let fd = (plus - minus).scale(C64::new(0.5 / h, 0.0));
            assert!((d - fd).max_abs() < 1e-8);
        }
    }
}
