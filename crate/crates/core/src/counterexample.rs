//! Constructions of potentials on either side of the basis property for
//! periodic-type conditions.
//!
//! The negative construction corrects a truncated Fourier series `S_N` by a
//! lacunary series whose frequencies resonate with the eigenvalue disks at
//! `n = a_k`, then subtracts the linear interpolant of the endpoint values so
//! the corrected function vanishes at both ends. The correction is placed in
//! the `Q` slot with frequencies `-(2 w0 + 4 a_k)`, which is the slot and sign
//! for which `e21(pi, lambda)` picks up the resonant term.

use crate::diagnostics::{eigenfunction_periodic_type, lemma2_criterion, BandRule, BasisVerdict, EigenfunctionRecord};
use crate::error::{Error, Result};
use crate::model::{tau0, BoundaryMatrix};
use crate::potential::{cpair, Cpair, ExpSeries, Mode, Potential};
use crate::quadrature::{composite_gl, int_exp, ls_slope, oscillatory, uniform_grid};
use crate::mat2::Mat2;
use crate::solver::{endpoint, endpoint_with_derivative, SolverConfig};
use crate::spectrum::{locate_disk, DiskResult, SpectrumConfig};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest lacunary index kept exactly in `f64`.
const A_MAX: u64 = 1 << 52;

fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

fn l1_distance<F: Fn(f64) -> C64, G: Fn(f64) -> C64>(f: F, g: G, panels: usize) -> f64 {
    composite_gl(|t| C64::new((f(t) - g(t)).norm(), 0.0), 0.0, PI, panels).re
}

/// C1 function close to `f` in `L1`, zero at `x = 0` and nonzero at `x = pi`.
pub struct SmoothEndpoint<'a> {
    f: &'a dyn Fn(f64) -> C64,
    pub delta: f64,
    pub end_value: C64,
    pub l1_error: f64,
}

impl SmoothEndpoint<'_> {
    /// Average of `f` over a window of width `delta` (clipped to `[0, pi]`).
    fn mollified(&self, x: f64) -> C64 {
        let lo = (x - 0.5 * self.delta).max(0.0);
        let hi = (x + 0.5 * self.delta).min(PI);
        composite_gl(self.f, lo, hi, 2) / (hi - lo)
    }

    pub fn eval(&self, x: f64) -> C64 {
        let left = smoothstep(x / self.delta);
        let right = smoothstep((x - (PI - self.delta)) / self.delta);
        (1.0 - right) * left * self.mollified(x) + right * self.end_value
    }
}

/// Smooths `f`, ramps it to zero over a collar at `0` and blends it into a
/// nonzero constant over a collar at `pi`, halving the collar until the `L1`
/// distance is below `eps / 2`.
pub fn smooth_endpoint_potential(f: &dyn Fn(f64) -> C64, eps: f64) -> Result<SmoothEndpoint<'_>> {
    if eps <= 0.0 {
        return Err(Error::Invalid("eps must be positive".into()));
    }
    let mut delta = 0.5;
    for _ in 0..40 {
        let mut g = SmoothEndpoint {
            f,
            delta,
            end_value: ZERO,
            l1_error: 0.0,
        };
        let tail = g.mollified(PI);
        g.end_value = if tail.norm() > eps / 8.0 { tail } else { C64::new(eps / 8.0, 0.0) };
        let panels = 64 + (16.0 * PI / delta) as usize;
        g.l1_error = l1_distance(f, |x| g.eval(x), panels);
        if g.l1_error < eps / 2.0 {
            return Ok(g);
        }
        delta *= 0.5;
    }
    Err(Error::Numerical("collar width underflow while smoothing".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub series: ExpSeries,
    pub n: usize,
    /// Sampled uniform remainder `max |S - S_N|`.
    pub remainder: f64,
}

/// Truncated expansion of `S` over `exp(+-2 i m x)` with the smallest `N`
/// whose sampled remainder is below `eps / 10`.
pub fn fourier_truncate(s: &dyn Fn(f64) -> C64, eps: f64, n_cap: usize) -> Result<Truncation> {
    let grid = uniform_grid(1025, 0.0, PI);
    let vals: Vec<C64> = grid.iter().map(|&x| s(x)).collect();
    let coef = |m: i64| {
        let panels = 64 + 4 * m.unsigned_abs() as usize;
        composite_gl(|x| s(x) * (C64::new(0.0, -2.0 * m as f64) * x).exp(), 0.0, PI, panels) / PI
    };
    let mut coeffs = vec![(0i64, coef(0))];
    for n in 0..=n_cap {
        if n > 0 {
            coeffs.push((n as i64, coef(n as i64)));
            coeffs.push((-(n as i64), coef(-(n as i64))));
        }
        let series = ExpSeries::from_fourier(&coeffs);
        let remainder = grid
            .iter()
            .zip(&vals)
            .map(|(&x, v)| (v - series.eval(x)).norm())
            .fold(0.0, f64::max);
        if remainder < eps / 10.0 {
            return Ok(Truncation { series, n, remainder });
        }
    }
    Err(Error::Numerical(format!("Fourier remainder above {} with N = {n_cap}", eps / 10.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LacunaryPlan {
    pub n: u64,
    pub epsilon: f64,
    pub w0: C64,
    pub c: u64,
    /// `a_0 = N, a_{k+1} = C a_k` for `k = 0..=K`; the series uses `k >= 1`.
    pub a_seq: Vec<u64>,
    pub desk_scale: bool,
    /// `a_k^{2/3} sum_{j != k} 1/|a_j - a_k|` for `k = 1..=K`.
    pub gap_constants: Vec<f64>,
    /// `sum_k a_k^{-1/2}`, which bounds `|theta|` up to the modulation factor.
    pub coefficient_sum: f64,
}

/// `floor(e^{2|w0| pi} + 100) N^2 floor(1/eps^2 + 1)`.
pub fn full_gap_ratio(n: u64, eps: f64, w0: C64) -> Result<u64> {
    let a = ((2.0 * w0.norm() * PI).exp() + 100.0).floor();
    let b = (1.0 / (eps * eps) + 1.0).floor();
    let c = a * (n as f64).powi(2) * b;
    if !c.is_finite() || c > A_MAX as f64 {
        return Err(Error::Invalid(format!("gap ratio {c:e} exceeds the exact integer range")));
    }
    Ok(c as u64)
}

pub fn lacunary_plan(n: u64, eps: f64, w0: C64, k: usize, c_override: Option<u64>) -> Result<LacunaryPlan> {
    if n < 1 || !(eps > 0.0 && eps < 1.0) || k < 1 {
        return Err(Error::Precondition("need N >= 1, 0 < eps < 1 and K >= 1".into()));
    }
    let full_c = full_gap_ratio(n, eps, w0);
    let (c, desk_scale) = match c_override {
        Some(c) => {
            if c < 2 {
                return Err(Error::Invalid("gap ratio must be at least 2".into()));
            }
            (c, full_c.map_or(true, |p| c < p))
        }
        None => (full_c?, false),
    };
    let mut a_seq = vec![n];
    for _ in 0..k {
        let next = a_seq.last().unwrap().checked_mul(c).filter(|v| *v <= A_MAX);
        match next {
            Some(v) => a_seq.push(v),
            None => {
                return Err(Error::Invalid(format!(
                    "a_K overflows for K = {k}; reduce K to at most {}",
                    a_seq.len() - 1
                )))
            }
        }
    }
    let gap_constants = (1..=k)
        .map(|i| {
            let ai = a_seq[i] as f64;
            let s: f64 = (1..=k).filter(|&j| j != i).map(|j| 1.0 / (a_seq[j] as f64 - ai).abs()).sum();
            s * ai.powf(2.0 / 3.0)
        })
        .collect();
    let coefficient_sum = a_seq[1..].iter().map(|&a| (a as f64).powf(-0.5)).sum();
    Ok(LacunaryPlan {
        n,
        epsilon: eps,
        w0,
        c,
        a_seq,
        desk_scale,
        gap_constants,
        coefficient_sum,
    })
}

impl LacunaryPlan {
    /// The resonant indices `a_1..=a_K`.
    pub fn terms(&self) -> &[u64] {
        &self.a_seq[1..]
    }

    /// Modes of `sign * (2 w0 + 4 a_k)` with coefficients `a_k^{-1/2}`.
    pub fn modes(&self, sign: f64) -> Vec<Mode> {
        self.terms()
            .iter()
            .map(|&a| Mode {
                freq: sign * (2.0 * self.w0 + 4.0 * a as f64),
                coef: C64::new((a as f64).powf(-0.5), 0.0),
            })
            .collect()
    }

    fn eval_modes(modes: &[Mode], x: f64) -> C64 {
        modes.iter().map(|m| m.coef * (C64::i() * m.freq * x).exp()).sum()
    }

    /// `theta(x) = e^{2 i w0 x} sum_k e^{4 i a_k x} / sqrt(a_k)`.
    pub fn theta(&self, x: f64) -> C64 {
        Self::eval_modes(&self.modes(1.0), x)
    }

    /// The mirrored series used in the `Q` slot.
    pub fn theta_mirror(&self, x: f64) -> C64 {
        Self::eval_modes(&self.modes(-1.0), x)
    }

    /// `int_0^x theta`, mode by mode.
    pub fn theta_integral(&self, sign: f64, x: f64) -> C64 {
        self.modes(sign).iter().map(|m| m.coef * int_exp(m.freq, x)).sum()
    }

    /// Sampled `max |theta|` on `[0, pi]` at a resolution of the top frequency.
    pub fn theta_max(&self) -> f64 {
        let top = self.modes(1.0).iter().map(|m| m.freq.norm()).fold(1.0, f64::max);
        let m = ((8.0 * top).ceil() as usize).clamp(1025, 1 << 20);
        uniform_grid(m, 0.0, PI)
            .par_iter()
            .map(|&x| self.theta(x).norm())
            .reduce(|| 0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

fn check(name: &str, value: f64, bound: f64) -> BoundCheck {
    BoundCheck {
        name: name.into(),
        value,
        bound,
        holds: value < bound,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Built {
    /// `P = p_hat`, `Q = p_tilde`.
    pub potential: Potential,
    pub plan: LacunaryPlan,
    pub s_n: ExpSeries,
    pub p_hat: ExpSeries,
    pub p_tilde: ExpSeries,
    pub f_at_0: C64,
    pub f_at_pi: C64,
    /// `F0' = (F(pi) - F(0)) / pi`.
    pub f0_slope: C64,
    /// `||S_N - p_tilde||_{L1}`.
    pub closeness: f64,
    pub checks: Vec<BoundCheck>,
}

/// `F = S_N + int theta`, `F0` its linear interpolant, `p_tilde = F - F0`.
/// Bounds are asserted for plans at the full gap ratio and reported otherwise.
pub fn build_p_tilde(s_n: &ExpSeries, p_hat: ExpSeries, plan: &LacunaryPlan) -> Result<Built> {
    let sign = -1.0;
    let mut f = s_n.clone();
    for m in plan.modes(sign) {
        let c = m.coef / (C64::i() * m.freq);
        f.constant -= c;
        f.modes.push(Mode { freq: m.freq, coef: c });
    }
    let f_at_0 = s_n.eval(0.0);
    let f_at_pi = s_n.eval(PI) + plan.theta_integral(sign, PI);
    let f0_slope = (f_at_pi - f_at_0) / PI;
    let mut p_tilde = f;
    p_tilde.constant -= f_at_0;
    p_tilde.slope -= f0_slope;
    let panels = 64 + (p_tilde.max_frequency() * 2.0) as usize;
    let closeness = l1_distance(|x| s_n.eval(x), |x| p_tilde.eval(x), panels.min(1 << 22));
    let eps = plan.epsilon;
    let theta_bound = plan.coefficient_sum * (2.0 * plan.w0.im.abs() * PI).exp();
    let checks = vec![
        check("|theta| < eps/(10 pi)", theta_bound, eps / (10.0 * PI)),
        check("|F(0)| < eps/10", f_at_0.norm(), eps / 10.0),
        check("|F(pi)| < eps/5", f_at_pi.norm(), eps / 5.0),
        check("||S - P~|| < 2 eps/5", closeness, 2.0 * eps / 5.0),
    ];
    if !plan.desk_scale {
        if let Some(bad) = checks.iter().find(|c| !c.holds) {
            return Err(Error::BoundFailed(format!("{}: {:.3e} >= {:.3e}", bad.name, bad.value, bad.bound)));
        }
    }
    Ok(Built {
        potential: Potential::series(p_hat.clone(), p_tilde.clone()),
        plan: plan.clone(),
        s_n: s_n.clone(),
        p_hat,
        p_tilde,
        f_at_0,
        f_at_pi,
        f0_slope,
        closeness,
        checks,
    })
}

fn default_a() -> Cpair {
    [2.0, 0.0]
}
fn default_eps() -> f64 {
    0.5
}
fn default_k() -> usize {
    3
}
fn default_p_hat() -> Cpair {
    [0.5, 0.0]
}

/// Serializable recipe for the negative construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Params {
    /// Periodic-type parameter; sets `w0 = tau0(a)`.
    #[serde(default = "default_a")]
    pub a: Cpair,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    #[serde(default = "default_k")]
    pub k_terms: usize,
    /// Gap ratio override; `None` uses the full formula.
    #[serde(default)]
    pub gap_ratio: Option<u64>,
    /// Endpoint value of the smooth companion `p_hat sin^2(x/2)`.
    #[serde(default = "default_p_hat")]
    pub p_hat: Cpair,
    /// Fourier coefficients of `S_N` over `exp(2 i m x)`.
    #[serde(default)]
    pub s: Vec<(i64, Cpair)>,
}

impl Default for Theorem2Params {
    fn default() -> Self {
        Theorem2Params {
            a: default_a(),
            epsilon: default_eps(),
            k_terms: default_k(),
            gap_ratio: None,
            p_hat: default_p_hat(),
            s: Vec::new(),
        }
    }
}

impl Theorem2Params {
    pub fn desk(gap_ratio: u64) -> Self {
        Theorem2Params {
            gap_ratio: Some(gap_ratio),
            ..Default::default()
        }
    }

    pub fn boundary(&self) -> BoundaryMatrix {
        BoundaryMatrix::periodic_type(cpair(self.a))
    }

    pub fn build(&self) -> Result<Built> {
        let w0 = tau0(cpair(self.a))?;
        let s_n = ExpSeries::from_fourier(&self.s.iter().map(|(m, c)| (*m, cpair(*c))).collect::<Vec<_>>());
        let n = self.s.iter().map(|(m, _)| m.unsigned_abs()).max().unwrap_or(0).max(1);
        let plan = lacunary_plan(n, self.epsilon, w0, self.k_terms, self.gap_ratio)?;
        let p_hat = match Potential::endpoint_smooth(cpair(self.p_hat), ZERO) {
            Potential::Series { p, .. } => p,
            Potential::Samples(_) => unreachable!(),
        };
        build_p_tilde(&s_n, p_hat, &plan)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimates {
    pub k: usize,
    pub a_k: u64,
    pub lambda: C64,
    /// `lambda - w0 - 2 a_k`.
    pub eps: C64,
    pub i0: C64,
    pub i1: C64,
    pub i2: C64,
    /// `I0` by adaptive quadrature, for cross-checking.
    pub i0_quadrature: C64,
    pub i1_scaled: f64,
    pub i2_scaled: f64,
}

/// Split of `I0 = int_0^pi theta~(t) e^{2 i lambda t} dt` into the resonant
/// term of index `k` (1-based) and the rest; `theta~` is the mirrored series.
pub fn integral_estimates(plan: &LacunaryPlan, k: usize, lambda: C64) -> Result<IntegralEstimates> {
    if k == 0 || k > plan.terms().len() {
        return Err(Error::Invalid(format!("term index {k} outside 1..={}", plan.terms().len())));
    }
    let modes = plan.modes(-1.0);
    let z = 2.0 * lambda;
    let parts: Vec<C64> = modes.iter().map(|m| m.coef * int_exp(z + m.freq, PI)).collect();
    let i0: C64 = parts.iter().sum();
    let i1 = parts[k - 1];
    let a_k = plan.terms()[k - 1];
    let af = a_k as f64;
    let i0_quadrature = oscillatory(|t| plan.theta_mirror(t), z, 0.0, PI, 1e-12);
    Ok(IntegralEstimates {
        k,
        a_k,
        lambda,
        eps: lambda - plan.w0 - 2.0 * af,
        i0,
        i1,
        i2: i0 - i1,
        i0_quadrature,
        i1_scaled: i1.norm() * af.sqrt(),
        i2_scaled: (i0 - i1).norm() * af.powf(2.0 / 3.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub k: usize,
    pub a_k: u64,
    pub lambda: C64,
    pub estimates: IntegralEstimates,
    pub e12: C64,
    pub e21: C64,
    /// `|e21| a_k^{3/2}`.
    pub e21_scaled: f64,
    /// `|e12| / |e21|`.
    pub ratio: f64,
    /// `|int S_N' e^{2 i lambda t}|`.
    pub s_n_prime: f64,
    /// `|int F0' e^{2 i lambda t}|`.
    pub f0_prime: f64,
    /// `|int p_tilde' e^{2 i lambda t}|`.
    pub p_tilde_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub rows: Vec<DivergenceRow>,
    pub slope_e21: Option<f64>,
    pub slope_ratio: Option<f64>,
    /// Ratio strictly increasing in `k`.
    pub monotone: bool,
    pub verdict: BasisVerdict,
}

impl DivergenceReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,a_k,i1_scaled,i2_scaled,e21_scaled,ratio")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.k, r.a_k, r.estimates.i1_scaled, r.estimates.i2_scaled, r.e21_scaled, r.ratio
            )?;
        }
        Ok(())
    }
}

fn fit(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|(_, y)| !y.is_finite() || *y <= 0.0) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|(x, _)| x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| y.ln()).collect();
    Some(ls_slope(&xs, &ys))
}

/// How the resonant eigenvalue is found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootRoute {
    /// Full disk search (winding number plus refinement).
    Disk,
    /// Newton on `a e11 + 1 = -+sqrt(-e12 e21)` started at the disk centre;
    /// a few integrations per disk instead of dozens.
    Linearised,
}

/// Roots of the periodic-type characteristic equation near `centre` through
/// the factored form `a e11 + 1 = s sqrt(D)`, `s = +-1`, `D = -e12 e21`. The
/// branch is picked at the first iterate so that the root is the first of the
/// pair in `(re, im)` order, then followed by proximity.
pub fn linearised_root(pot: &Potential, a: C64, centre: C64, cfg: &SolverConfig, iters: usize) -> (C64, Mat2) {
    let mut lambda = centre;
    for it in 0..iters.max(1) {
        let (e, de) = endpoint_with_derivative(pot, lambda, cfg);
        let sd = (-e.e(1, 2) * e.e(2, 1)).sqrt();
        let step = |s: f64| (s * sd - 1.0 - a * e.e(1, 1)) / (a * de.e(1, 1));
        let (p, m) = (lambda + step(1.0), lambda + step(-1.0));
        lambda = if it == 0 {
            if (p.re, p.im) <= (m.re, m.im) { p } else { m }
        } else if (p - lambda).norm() <= (m - lambda).norm() {
            p
        } else {
            m
        };
    }
    (lambda, endpoint(pot, lambda, cfg))
}

/// Locates the first eigenvalue of each resonant disk `n = a_k`, `k` in
/// `ks`, and measures the endpoint entries, integral split and Lemma-2
/// ratio.
pub fn verify_divergence(
    built: &Built,
    a: C64,
    ks: &[usize],
    route: RootRoute,
    cfg: &SpectrumConfig,
    rule: &BandRule,
) -> Result<DivergenceReport> {
    if ks.len() < 2 {
        return Err(Error::Precondition("a slope fit needs at least two lacunary indices".into()));
    }
    let minors = BoundaryMatrix::periodic_type(a).minors()?;
    let found: Vec<Result<(DivergenceRow, EigenfunctionRecord)>> = ks
        .par_iter()
        .map(|&k| {
            let a_k = *built
                .plan
                .terms()
                .get(k.wrapping_sub(1))
                .ok_or_else(|| Error::Invalid(format!("term index {k} outside the plan")))?;
            let (lambda, e_end) = match route {
                RootRoute::Disk => match locate_disk(&built.potential, &minors, a_k as i64, cfg)? {
                    DiskResult::Pair(p) => (p[0].lambda, p[0].e_end),
                    DiskResult::Failed(f) => {
                        return Err(Error::Numerical(format!("disk n = {} failed: {}", f.n, f.reason)))
                    }
                },
                RootRoute::Linearised => {
                    let centre = built.plan.w0 + 2.0 * a_k as f64;
                    linearised_root(&built.potential, a, centre, &cfg.solver, 3)
                }
            };
            let z = 2.0 * lambda;
            let estimates = integral_estimates(&built.plan, k, lambda)?;
            let (e12, e21) = (e_end.e(1, 2), e_end.e(2, 1));
            let af = a_k as f64;
            let rec = eigenfunction_periodic_type(a_k as i64, 1, lambda, &e_end, a)?;
            let row = DivergenceRow {
                k,
                a_k,
                lambda,
                estimates,
                e12,
                e21,
                e21_scaled: e21.norm() * af.powf(1.5),
                ratio: rec.ratio_lemma2(),
                s_n_prime: built.s_n.derivative_integral_against_exp(z).norm(),
                f0_prime: (built.f0_slope * int_exp(z, PI)).norm(),
                p_tilde_prime: built.p_tilde.derivative_integral_against_exp(z).norm(),
            };
            Ok((row, rec))
        })
        .collect();
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for r in found {
        let (row, rec) = r?;
        rows.push(row);
        records.push(rec);
    }
    let slope_e21 = fit(&rows.iter().map(|r| (r.a_k as f64, r.e21.norm())).collect::<Vec<_>>());
    let slope_ratio = fit(&rows.iter().map(|r| (r.a_k as f64, r.ratio)).collect::<Vec<_>>());
    let monotone = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let verdict = lemma2_criterion(&records, rule);
    Ok(DivergenceReport {
        rows,
        slope_e21,
        slope_ratio,
        monotone,
        verdict,
    })
}
