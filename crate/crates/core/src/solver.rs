//! Fundamental matrix `E(x, lambda)` of `L y = lambda y`, `E(0, lambda) = I`.
//!
//! The system is integrated in first-order form `y' = A(x) y` with
//! `A = [[i lambda, -i P], [i Q, -i lambda]]`, which is trace-free, by the
//! fourth-order two-node Magnus scheme. Each step applies an exact 2x2
//! exponential, so `det E = 1` holds to rounding at every grid point. The
//! lambda-derivative of the discrete solution is propagated alongside when
//! requested (exact derivative of the scheme).

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::potential::Potential;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Step bound `h <= c_step / (1 + |lambda|)`.
    pub c_step: f64,
    /// Step bound `h <= c_band / bandwidth` for oscillatory potentials.
    pub c_band: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Optional strip `|Im lambda| <= strip`; `None` disables the check.
    pub strip: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            c_step: 0.5,
            c_band: 0.5,
            h_max: 0.005,
            max_steps: 1 << 26,
            strip: None,
        }
    }
}

impl SolverConfig {
    pub fn steps_for(&self, pot: &Potential, lambda: C64) -> usize {
        self.steps_over(pot, lambda, PI)
    }

    fn steps_over(&self, pot: &Potential, lambda: C64, len: f64) -> usize {
        let bw = pot.bandwidth();
        let mut h = self.h_max.min(self.c_step / (1.0 + lambda.norm()));
        if bw > 0.0 {
            h = h.min(self.c_band / bw);
        }
        ((len / h).ceil() as usize).max(1)
    }

    pub fn check_strip(&self, lambda: C64) -> Result<()> {
        match self.strip {
            Some(w) if lambda.im.abs() > w => Err(Error::Precondition(format!(
                "|Im lambda| = {} exceeds the strip half-width {w}",
                lambda.im.abs()
            ))),
            _ => Ok(()),
        }
    }
}

#[inline]
fn system_matrix(lambda: C64, p: C64, q: C64) -> Mat2 {
    let i = C64::i();
    Mat2::new(i * lambda, -i * p, i * q, -i * lambda)
}

/// Integrates from `x0` to `x0 + n h` starting at `start` (and `dstart` for
/// the lambda-derivative). `record` is called with `(step_index, E)` after
/// every step whose index is a multiple of `every`.
fn magnus_run(
    pot: &Potential,
    lambda: C64,
    x0: f64,
    h: f64,
    n: usize,
    start: Mat2,
    dstart: Option<Mat2>,
    every: usize,
    mut record: impl FnMut(usize, &Mat2),
) -> (Mat2, Option<Mat2>) {
    let c1 = 0.5 - SQRT3 / 6.0;
    let c2 = 0.5 + SQRT3 / 6.0;
    let half = C64::new(0.5 * h, 0.0);
    let comm = C64::new(SQRT3 / 12.0 * h * h, 0.0);
    let j = Mat2::diag(C64::i(), -C64::i());
    let hj = j.scale(C64::new(h, 0.0));

    let mut e = start;
    let mut de = dstart;
    let zero = C64::new(0.0, 0.0);
    let mut n1 = vec![(zero, zero); CHUNK.min(n)];
    let mut n2 = vec![(zero, zero); CHUNK.min(n)];
    let mut k0 = 0;
    while k0 < n {
        let len = CHUNK.min(n - k0);
        let xs = x0 + h * k0 as f64;
        pot.fill_uniform(xs + c1 * h, h, &mut n1[..len]);
        pot.fill_uniform(xs + c2 * h, h, &mut n2[..len]);
        for k in 0..len {
            let a1 = system_matrix(lambda, n1[k].0, n1[k].1);
            let a2 = system_matrix(lambda, n2[k].0, n2[k].1);
            let omega = (a1 + a2).scale(half) + a2.commutator(&a1).scale(comm);
            match de.as_mut() {
                None => {
                    e = omega.exp_traceless() * e;
                }
                Some(d) => {
                    let domega = hj + (j.commutator(&a1) + a2.commutator(&j)).scale(comm);
                    let (x, dx) = omega.exp_traceless_with_derivative(&domega);
                    *d = dx * e + x * *d;
                    e = x * e;
                }
            }
            let idx = k0 + k + 1;
            if idx % every == 0 {
                record(idx, &e);
            }
        }
        k0 += len;
    }
    (e, de)
}

/// `E(pi, lambda)` with the configured step rule.
pub fn endpoint(pot: &Potential, lambda: C64, cfg: &SolverConfig) -> Mat2 {
    let n = cfg.steps_for(pot, lambda);
    magnus_run(pot, lambda, 0.0, PI / n as f64, n, Mat2::identity(), None, usize::MAX, |_, _| {}).0
}

/// `E(pi, lambda)` and `dE(pi, lambda)/d lambda` (variational system).
pub fn endpoint_with_derivative(pot: &Potential, lambda: C64, cfg: &SolverConfig) -> (Mat2, Mat2) {
    let n = cfg.steps_for(pot, lambda);
    let (e, d) = magnus_run(
        pot,
        lambda,
        0.0,
        PI / n as f64,
        n,
        Mat2::identity(),
        Some(Mat2::zero()),
        usize::MAX,
        |_, _| {},
    );
    (e, d.expect("derivative requested"))
}

/// `E(pi, lambda)` and its lambda-derivative with an explicit step count, so
/// that nearby lambdas share one discretisation.
pub fn endpoint_with_steps(pot: &Potential, lambda: C64, steps: usize, derivative: bool) -> (Mat2, Option<Mat2>) {
    let d = if derivative { Some(Mat2::zero()) } else { None };
    magnus_run(pot, lambda, 0.0, PI / steps as f64, steps, Mat2::identity(), d, usize::MAX, |_, _| {})
}

/// Closed-form free fundamental matrix `diag(e^{i lambda x}, e^{-i lambda x})`.
pub fn free_fundamental_matrix(lambda: C64, x: f64) -> Mat2 {
    let ph = (C64::i() * lambda * x).exp();
    Mat2::diag(ph, 1.0 / ph)
}

/// Sampled fundamental matrix on a uniform grid of `[0, pi]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FundamentalMatrix {
    pub lambda: C64,
    pub x_grid: Vec<f64>,
    pub e: Vec<Mat2>,
    pub e_end: Mat2,
    /// Richardson estimate of the max-entry error over the grid.
    pub est_error: f64,
    /// Integration steps between consecutive grid points.
    pub substeps: usize,
}

impl FundamentalMatrix {
    /// Grid value at an exact grid abscissa.
    pub fn at_grid(&self, x: f64) -> Result<Mat2> {
        let n = self.x_grid.len() - 1;
        let pos = x / PI * n as f64;
        let idx = pos.round();
        if !(0.0..=n as f64).contains(&idx) || (pos - idx).abs() > 1e-9 {
            return Err(Error::Invalid(format!("x = {x} is not on the sample grid")));
        }
        Ok(self.e[idx as usize])
    }

    /// Value at arbitrary `x` in `[0, pi]` by re-integration from the nearest
    /// grid point below.
    pub fn value_at(&self, pot: &Potential, x: f64) -> Result<Mat2> {
        if !(0.0..=PI).contains(&x) {
            return Err(Error::Invalid(format!("x = {x} outside [0, pi]")));
        }
        if let Ok(v) = self.at_grid(x) {
            return Ok(v);
        }
        let n = self.x_grid.len() - 1;
        let idx = ((x / PI * n as f64).floor() as usize).min(n - 1);
        let x0 = self.x_grid[idx];
        let dx = x - x0;
        let h_grid = PI / n as f64;
        let steps = ((self.substeps as f64 * dx / h_grid).ceil() as usize).max(1);
        let (e, _) = magnus_run(pot, self.lambda, x0, dx / steps as f64, steps, self.e[idx], None, usize::MAX, |_, _| {});
        Ok(e)
    }

    /// Max over the grid of `|det E - 1|`.
    pub fn max_det_defect(&self) -> f64 {
        self.e.iter().map(|m| (m.det() - 1.0).norm()).fold(0.0, f64::max)
    }

    /// CSV rows `x, Re e11, Im e11, Re e12, Im e12, Re e21, Im e21, Re e22, Im e22`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,re_e11,im_e11,re_e12,im_e12,re_e21,im_e21,re_e22,im_e22")?;
        for (x, m) in self.x_grid.iter().zip(&self.e) {
            let v = m.0;
            writeln!(
                w,
                "{x},{},{},{},{},{},{},{},{}",
                v[0][0].re, v[0][0].im, v[0][1].re, v[0][1].im, v[1][0].re, v[1][0].im, v[1][1].re, v[1][1].im
            )?;
        }
        Ok(())
    }
}

/// Integrates with `substeps` steps per grid cell on an `m`-point grid.
pub fn sample_on_grid(pot: &Potential, lambda: C64, m: usize, substeps: usize) -> FundamentalMatrix {
    assert!(m >= 2);
    let cells = m - 1;
    let n = cells * substeps;
    let mut e = Vec::with_capacity(m);
    e.push(Mat2::identity());
    let (end, _) = magnus_run(pot, lambda, 0.0, PI / n as f64, n, Mat2::identity(), None, substeps, |_, m| {
        e.push(*m)
    });
    FundamentalMatrix {
        lambda,
        x_grid: crate::quadrature::uniform_grid(m, 0.0, PI),
        e,
        e_end: end,
        est_error: f64::NAN,
        substeps,
    }
}

/// Fundamental matrix on an `m`-point grid with step doubling until the
/// Richardson estimate drops below `tol`.
pub fn fundamental_matrix(
    pot: &Potential,
    lambda: C64,
    tol: f64,
    m: usize,
    cfg: &SolverConfig,
) -> Result<FundamentalMatrix> {
    cfg.check_strip(lambda)?;
    let cells = m - 1;
    let mut sub = cfg.steps_for(pot, lambda).div_ceil(cells).max(1);
    let mut coarse = sample_on_grid(pot, lambda, m, sub);
    loop {
        let fine = sample_on_grid(pot, lambda, m, 2 * sub);
        let est = coarse
            .e
            .iter()
            .zip(&fine.e)
            .map(|(a, b)| (*a - *b).max_abs())
            .fold(0.0, f64::max)
            / 15.0;
        if est <= tol {
            return Ok(FundamentalMatrix { est_error: est, ..fine });
        }
        sub *= 2;
        if 2 * sub * cells > cfg.max_steps {
            return Err(Error::ToleranceUnreachable {
                requested: tol,
                achieved: est,
                steps: sub * cells,
            });
        }
        coarse = fine;
    }
}

/// The bilinear combinations at a pair `(a, x)`; `values.e(j, k)` holds the
/// `(j, k)` combination. Equals `E(x) E(a)^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalEValues {
    pub a: f64,
    pub x: f64,
    pub values: Mat2,
}

/// Combinations from the two fundamental-matrix values `E(x)` and `E(a)`.
pub fn cal_e_from(e_x: &Mat2, e_a: &Mat2) -> Mat2 {
    let ex = |j: usize, k: usize| e_x.e(j, k);
    let ea = |j: usize, k: usize| e_a.e(j, k);
    let mut v = Mat2::zero();
    for j in 1..=2 {
        v.0[j - 1][0] = ex(j, 1) * ea(2, 2) - ex(j, 2) * ea(2, 1);
        v.0[j - 1][1] = ex(j, 2) * ea(1, 1) - ex(j, 1) * ea(1, 2);
    }
    v
}

pub fn cal_e(fm: &FundamentalMatrix, pot: &Potential, a: f64, x: f64) -> Result<CalEValues> {
    let e_a = fm.value_at(pot, a)?;
    let e_x = fm.value_at(pot, x)?;
    Ok(CalEValues {
        a,
        x,
        values: cal_e_from(&e_x, &e_a),
    })
}

/// Free combinations: `diag(e^{i lambda (x - a)}, e^{-i lambda (x - a)})`.
pub fn cal_e0(lambda: C64, a: f64, x: f64) -> Mat2 {
    cal_e_from(&free_fundamental_matrix(lambda, x), &free_fundamental_matrix(lambda, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn free_matrix_examples() {
        let m = free_fundamental_matrix(c(2.0, 0.0), PI);
        assert!((m - Mat2::identity()).max_abs() < 1e-14);
        let m = free_fundamental_matrix(c(0.0, 1.0), PI);
        assert!((m.e(1, 1) - (-PI).exp()).norm() < 1e-14);
        assert!((m.e(2, 2) - PI.exp()).norm() < 1e-12);
        assert_eq!(free_fundamental_matrix(c(0.0, 0.0), 1.3), Mat2::identity());
    }

    #[test]
    fn zero_potential_is_free() {
        let pot = Potential::zero();
        for lam in [c(0.0, 0.0), c(3.7, 0.2), c(-20.0, -0.5)] {
            let fm = fundamental_matrix(&pot, lam, 1e-10, 33, &SolverConfig::default()).unwrap();
            for (x, e) in fm.x_grid.iter().zip(&fm.e) {
                assert!((*e - free_fundamental_matrix(lam, *x)).max_abs() < 1e-11);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let pot = Potential::endpoint_smooth(c(0.7, 0.2), c(-0.3, 0.5));
        let cfg = SolverConfig::default();
        let lam = c(5.3, 0.1);
        let (_, d) = endpoint_with_derivative(&pot, lam, &cfg);
        let h = 1e-5;
        // same step count on both sides so the discretisation is identical
        let n = cfg.steps_for(&pot, lam);
        let run = |l: C64| magnus_run(&pot, l, 0.0, PI / n as f64, n, Mat2::identity(), None, usize::MAX, |_, _| {}).0;
        let fd = (run(lam + h) - run(lam - h)).scale(c(0.5 / h, 0.0));
        assert!((d - fd).max_abs() < 1e-7, "{:?}", (d - fd).max_abs());
    }

    #[test]
    fn cal_e_identities() {
        let pot = Potential::endpoint_smooth(c(0.4, 0.0), c(0.1, -0.2));
        let fm = fundamental_matrix(&pot, c(3.0, 0.0), 1e-10, 17, &SolverConfig::default()).unwrap();
        for x in [0.0, 1.0, 2.5, PI] {
            let v = cal_e(&fm, &pot, x, x).unwrap().values;
            assert!((v.e(1, 1) - 1.0).norm() < 1e-10);
            assert!((v.e(2, 2) - 1.0).norm() < 1e-10);
        }
        let lam = c(1.7, 0.3);
        let v0 = cal_e0(lam, 0.4, 2.0);
        assert!((v0.e(1, 1) - (C64::i() * lam * 1.6).exp()).norm() < 1e-14);
        assert_eq!(v0.e(1, 2), c(0.0, 0.0));
    }

    #[test]
    fn off_grid_value_by_reintegration() {
        let pot = Potential::endpoint_smooth(c(1.0, 0.0), c(1.0, 0.0));
        let lam = c(4.0, 0.0);
        let coarse = fundamental_matrix(&pot, lam, 1e-10, 9, &SolverConfig::default()).unwrap();
        let fine = fundamental_matrix(&pot, lam, 1e-10, 2 * 8 * 7 + 1, &SolverConfig::default()).unwrap();
        let x = PI * 3.0 / 14.0;
        let a = coarse.value_at(&pot, x).unwrap();
        let b = fine.at_grid(x).unwrap();
        assert!((a - b).max_abs() < 1e-9);
        assert!(coarse.at_grid(x).is_err());
        assert!(coarse.value_at(&pot, 4.0).is_err());
    }

    #[test]
    fn strip_is_enforced() {
        let cfg = SolverConfig {
            strip: Some(1.0),
            ..Default::default()
        };
        assert!(fundamental_matrix(&Potential::zero(), c(0.0, 2.0), 1e-8, 9, &cfg).is_err());
    }

    #[test]
    fn unreachable_tolerance_reports_estimate() {
        let cfg = SolverConfig {
            max_steps: 64,
            h_max: 1.0,
            c_step: 10.0,
            c_band: 10.0,
            strip: None,
        };
        let pot = Potential::endpoint_smooth(c(3.0, 0.0), c(3.0, 0.0));
        match fundamental_matrix(&pot, c(30.0, 0.0), 1e-14, 3, &cfg) {
            Err(Error::ToleranceUnreachable { achieved, .. }) => assert!(achieved > 1e-14),
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
