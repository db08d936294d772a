//! First-order large-`lambda` expansions of the fundamental matrix for smooth
//! potentials, and their comparison with the integrator.
//!
//! With `p = (P + Q)/2`, `r = (P - Q)/(2i)`:
//!
//! ```text
//! sigma1^±(x) = i p(x) ∓ r(x)             (sigma1^+ = iP, sigma1^- = iQ)
//! sigma2^±(x) = ±r'(x) - i p'(x)          (sigma2^+ = -iP', sigma2^- = -iQ')
//! sigma~^±(lambda, x) = int_0^x sigma2^±(x - t) e^{-2 i lambda t} dt
//! ```
//!
//! The endpoint entries of `E(pi, lambda)` are, up to `O(lambda^-2)`,
//!
//! ```text
//! e12 = 2/(i lambda w) [-e^{i pi lambda} sigma1^+(0) + e^{-i pi lambda}(sigma1^+(pi) + sigma~^+(-lambda, pi))]
//! e21 = 2/(i lambda w) [ e^{i pi lambda}(sigma1^-(pi) + sigma~^-(lambda, pi)) - e^{-i pi lambda} sigma1^-(0)]
//! ```
//!
//! so `e12` is driven by `P` and `e21` by `Q`; both reduce to the first Born
//! term integrated by parts.

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::potential::{Potential, Smoothness};
use crate::quadrature::{composite_gl, ls_slope, oscillatory};
use crate::solver::{endpoint, SolverConfig};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Potential viewed through `p`, `r` and the derived sigma fields.
#[derive(Debug, Clone)]
pub struct MarchenkoData {
    pot: Potential,
    tol: f64,
}

pub fn to_marchenko(pot: &Potential) -> Result<MarchenkoData> {
    if pot.smoothness() == Smoothness::L1 {
        return Err(Error::Precondition(
            "asymptotic forms need a differentiable potential; use cubic interpolation or a series".into(),
        ));
    }
    Ok(MarchenkoData {
        pot: pot.clone(),
        tol: 1e-12,
    })
}

impl MarchenkoData {
    pub fn p(&self, x: f64) -> C64 {
        let (pp, qq) = self.pot.eval(x);
        (pp + qq) * 0.5
    }

    pub fn r(&self, x: f64) -> C64 {
        let (pp, qq) = self.pot.eval(x);
        (pp - qq) / C64::new(0.0, 2.0)
    }

    /// `sigma1^±(x)`; `plus` selects the sign.
    pub fn sigma1(&self, plus: bool, x: f64) -> C64 {
        let s = if plus { -1.0 } else { 1.0 };
        C64::i() * self.p(x) + s * self.r(x)
    }

    pub fn sigma2(&self, plus: bool, x: f64) -> C64 {
        let (dp, dq) = self.pot.derivative(x);
        let dpp = (dp + dq) * 0.5;
        let dr = (dp - dq) / C64::new(0.0, 2.0);
        let s = if plus { 1.0 } else { -1.0 };
        s * dr - C64::i() * dpp
    }

    /// `sigma~^±(lambda, x)`.
    pub fn sigma_tilde(&self, plus: bool, lambda: C64, x: f64) -> C64 {
        if x <= 0.0 {
            return C64::new(0.0, 0.0);
        }
        // substitute s = x - t: e^{-2 i lambda x} int_0^x sigma2(s) e^{2 i lambda s} ds
        let z = 2.0 * lambda;
        let inner = match &self.pot {
            Potential::Series { p, q, .. } => {
                let ip = p.derivative_integral_to(z, x);
                let iq = q.derivative_integral_to(z, x);
                // sigma2^+ = -i P', sigma2^- = -i Q'
                -C64::i() * if plus { ip } else { iq }
            }
            Potential::Samples(_) => oscillatory(|s| self.sigma2(plus, s), z, 0.0, x, self.tol),
        };
        (-C64::i() * z * x).exp() * inner
    }

    /// `b1(x) = int_0^x (p^2 + r^2) = int_0^x P Q`.
    pub fn b1(&self, x: f64) -> C64 {
        if x <= 0.0 {
            return C64::new(0.0, 0.0);
        }
        let panels = 16 + (x * 8.0 * (1.0 + self.pot.bandwidth())) as usize;
        composite_gl(
            |t| {
                let (pp, qq) = self.pot.eval(t);
                pp * qq
            },
            0.0,
            x,
            panels,
        )
    }

    /// `sigma^±(lambda, x) = 1 + (sigma1^±(x) + sigma~^±(lambda, x)) / (2 i lambda)`.
    pub fn sigma(&self, plus: bool, lambda: C64, x: f64) -> C64 {
        1.0 + (self.sigma1(plus, x) + self.sigma_tilde(plus, lambda, x)) / (2.0 * C64::i() * lambda)
    }

    pub fn u(&self, lambda: C64, x: f64) -> C64 {
        1.0 + self.b1(x) / (2.0 * C64::i() * lambda)
    }
}

/// `w(lambda) = 2 (1 + sigma^+(-lambda, 0) sigma^-(lambda, 0))`.
pub fn w_lambda(md: &MarchenkoData, lambda: C64) -> C64 {
    2.0 * (1.0 + md.sigma(true, -lambda, 0.0) * md.sigma(false, lambda, 0.0))
}

pub fn e12_asym(md: &MarchenkoData, lambda: C64) -> C64 {
    let w = w_lambda(md, lambda);
    let ph = (C64::i() * PI * lambda).exp();
    let bracket =
        -ph * md.sigma1(true, 0.0) + (md.sigma1(true, PI) + md.sigma_tilde(true, -lambda, PI)) / ph;
    2.0 / (C64::i() * lambda * w) * bracket
}

pub fn e21_asym(md: &MarchenkoData, lambda: C64) -> C64 {
    let w = w_lambda(md, lambda);
    let ph = (C64::i() * PI * lambda).exp();
    let bracket =
        ph * (md.sigma1(false, PI) + md.sigma_tilde(false, lambda, PI)) - md.sigma1(false, 0.0) / ph;
    2.0 / (C64::i() * lambda * w) * bracket
}

/// `[y11, y12, y21, y22]` hatted (before division by `w`).
pub fn yhat(md: &MarchenkoData, lambda: C64, x: f64) -> [C64; 4] {
    let ep = (C64::i() * lambda * x).exp();
    let em = 1.0 / ep;
    let up = md.u(lambda, x);
    let um = md.u(-lambda, x);
    let sm_x = md.sigma(false, lambda, x);
    let sp_x = md.sigma(true, -lambda, x);
    let sp0 = md.sigma(true, -lambda, 0.0);
    let sm0 = md.sigma(false, lambda, 0.0);
    let a = ep * up;
    let b = em * um;
    let y11 = a * (1.0 + sm_x) * (1.0 + sp0) + b * (1.0 - sp_x) * (1.0 - sm0);
    let iy12 = -a * (1.0 - sm_x) * (1.0 + sp0) + b * (1.0 + sp_x) * (1.0 - sm0);
    let iy21 = a * (1.0 + sm_x) * (1.0 - sp0) - b * (1.0 - sp_x) * (1.0 + sm0);
    let y22 = a * (1.0 - sm_x) * (1.0 - sp0) + b * (1.0 + sp_x) * (1.0 + sm0);
    [y11, -C64::i() * iy12, -C64::i() * iy21, y22]
}

/// Change of basis from the `y` system to `E`.
pub fn y_to_e(yhat: &[C64; 4], w: C64) -> Mat2 {
    let [y11, y12, y21, y22] = yhat.map(|v| v / w);
    let i = C64::i();
    Mat2::new(
        y11 + y22 + i * (y21 - y12),
        y11 - y22 + i * (y12 + y21),
        y11 - y22 - i * (y12 + y21),
        y11 + y22 - i * (y21 - y12),
    )
    .scale(C64::new(0.5, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymRow {
    pub lambda: C64,
    pub abs_lambda: f64,
    pub e12_solver: C64,
    pub e12_asym: C64,
    pub e21_solver: C64,
    pub e21_asym: C64,
    pub abs_dev12: f64,
    pub abs_dev21: f64,
    pub rel_dev12: f64,
    pub rel_dev21: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymTable {
    pub rows: Vec<AsymRow>,
    /// Fitted decay order of the absolute deviations in `1/|lambda|`.
    pub order12: Option<f64>,
    pub order21: Option<f64>,
}

impl AsymTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "abs_lambda,re_lambda,im_lambda,abs_dev12,rel_dev12,abs_dev21,rel_dev21")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.abs_lambda, r.lambda.re, r.lambda.im, r.abs_dev12, r.rel_dev12, r.abs_dev21, r.rel_dev21
            )?;
        }
        Ok(())
    }
}

fn fit_order(xs: &[f64], devs: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(devs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(x, d)| (x.ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(-ls_slope(&lx, &ly))
}

pub fn compare_asymptotics(pot: &Potential, lambdas: &[C64], cfg: &SolverConfig) -> Result<AsymTable> {
    let md = to_marchenko(pot)?;
    let rows: Vec<AsymRow> = lambdas
        .par_iter()
        .map(|&lambda| {
            let e = endpoint(pot, lambda, cfg);
            let (a12, a21) = (e12_asym(&md, lambda), e21_asym(&md, lambda));
            let (d12, d21) = ((e.e(1, 2) - a12).norm(), (e.e(2, 1) - a21).norm());
            let rel = |d: f64, v: C64| if v.norm() > 0.0 { d / v.norm() } else { d };
            AsymRow {
                lambda,
                abs_lambda: lambda.norm(),
                e12_solver: e.e(1, 2),
                e12_asym: a12,
                e21_solver: e.e(2, 1),
                e21_asym: a21,
                abs_dev12: d12,
                abs_dev21: d21,
                rel_dev12: rel(d12, e.e(1, 2)),
                rel_dev21: rel(d21, e.e(2, 1)),
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.abs_lambda).collect();
    let order12 = fit_order(&xs, &rows.iter().map(|r| r.abs_dev12).collect::<Vec<_>>());
    let order21 = fit_order(&xs, &rows.iter().map(|r| r.abs_dev21).collect::<Vec<_>>());
    Ok(AsymTable { rows, order12, order21 })
}
