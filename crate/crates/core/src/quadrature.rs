//! Quadrature rules used across the crate.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Composite Simpson weights for `m` equally spaced nodes on `[a, b]`.
/// `m` must be odd and at least 3.
pub fn simpson_weights(m: usize, a: f64, b: f64) -> Vec<f64> {
    assert!(m >= 3 && m % 2 == 1, "Simpson needs an odd node count >= 3");
    let h = (b - a) / (m - 1) as f64;
    (0..m)
        .map(|i| {
            let w = if i == 0 || i == m - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

pub fn uniform_grid(m: usize, a: f64, b: f64) -> Vec<f64> {
    assert!(m >= 2);
    let h = (b - a) / (m - 1) as f64;
    (0..m)
        .map(|i| if i == m - 1 { b } else { a + h * i as f64 })
        .collect()
}

/// `int_0^len exp(i z t) dt`, stable for small `|z|`.
pub fn int_exp(z: C64, len: f64) -> C64 {
    let w = C64::i() * z * len;
    if w.norm() < 1e-3 {
        // len * (1 + w/2 + w^2/6 + w^3/24 + w^4/120)
        len * (1.0 + w * (0.5 + w * (1.0 / 6.0 + w * (1.0 / 24.0 + w / 120.0))))
    } else {
        (w.exp() - 1.0) / (C64::i() * z)
    }
}

/// `int_0^len t exp(i z t) dt`, stable for small `|z|`.
pub fn int_t_exp(z: C64, len: f64) -> C64 {
    let w = C64::i() * z * len;
    if w.norm() < 1e-3 {
        // len^2 * (1/2 + w/3 + w^2/8 + w^3/30 + w^4/144)
        len * len * (0.5 + w * (1.0 / 3.0 + w * (1.0 / 8.0 + w * (1.0 / 30.0 + w / 144.0))))
    } else {
        let iz = C64::i() * z;
        (w.exp() * (len * iz - 1.0) + 1.0) / (iz * iz)
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre (8 points per panel) of a complex integrand.
pub fn composite_gl<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, panels: usize) -> C64 {
    let (xs, ws) = gauss_legendre(8);
    let h = (b - a) / panels as f64;
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for (x, w) in xs.iter().zip(&ws) {
            acc += f(mid + 0.5 * h * x) * (w * 0.5 * h);
        }
    }
    acc
}

/// `int_a^b f(t) exp(i omega t) dt` by composite Gauss-Legendre with panels
/// no longer than `pi / (4 |omega|)`, doubled until two successive values
/// agree to `tol` (relative to the integrand scale).
pub fn oscillatory<F: Fn(f64) -> C64>(f: F, omega: C64, a: f64, b: f64, tol: f64) -> C64 {
    let len = b - a;
    let mut panels = ((len * 4.0 * omega.norm() / PI).ceil() as usize).max(8);
    let g = |t: f64| f(t) * (C64::i() * omega * t).exp();
    let mut prev = composite_gl(g, a, b, panels);
    for _ in 0..12 {
        panels *= 2;
        let next = composite_gl(g, a, b, panels);
        if (next - prev).norm() <= tol * (1.0 + next.norm()) {
            return next;
        }
        prev = next;
    }
    prev
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let w = simpson_weights(9, 0.0, 2.0);
        let xs = uniform_grid(9, 0.0, 2.0);
        let s: f64 = xs.iter().zip(&w).map(|(x, w)| w * (x * x * x - x)).sum();
        assert!((s - (4.0 - 2.0)).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [2, 5, 8, 16] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
            if n >= 3 {
                assert!((m4 - 0.4).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn int_exp_small_and_large_arguments() {
        for z in [C64::new(1e-6, 0.0), C64::new(3.0, 0.2), C64::new(0.0, 0.0), C64::new(-2.0, -1.0)] {
            let direct = composite_gl(|t| (C64::i() * z * t).exp(), 0.0, PI, 64);
            assert!((int_exp(z, PI) - direct).norm() < 1e-12);
            let direct_t = composite_gl(|t| t * (C64::i() * z * t).exp(), 0.0, PI, 64);
            assert!((int_t_exp(z, PI) - direct_t).norm() < 1e-11);
        }
    }

    #[test]
    fn oscillatory_matches_closed_form() {
        let omega = C64::new(-123.4, 0.0);
        let v = oscillatory(|t| C64::new(t, 0.0), omega, 0.0, PI, 1e-12);
        assert!((v - int_t_exp(omega, PI)).norm() < 1e-10);
    }
}
