//! Riesz-basis diagnostics: eigenfunction coefficients and biorthogonal
//! partners for periodic-type conditions, the coefficient-ratio and
//! endpoint-ratio criteria, the asymptotic-multiplicity verdict with
//! residue norm products, and expansion conditioning.

use crate::error::{Error, Result};
use crate::green::KernelSampler;
use crate::mat2::Mat2;
use crate::model::{BcClassification, Minors};
use crate::potential::Potential;
use crate::quadrature::{ls_slope, simpson_weights};
use crate::solver::{sample_on_grid, SolverConfig};
use crate::spectrum::{asymptotic_multiplicity_test, Spectrum};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

pub const TOL_PAIR: f64 = 1e-12;

type Vf = Vec<[C64; 2]>;

/// Eigenfunction `y = alpha * (e11, e21) + beta * (e12, e22)` with
/// `|alpha|^2 + |beta|^2 = 1`, plus sampled data once [`sample_record`] ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionRecord {
    pub n: i64,
    pub j: u8,
    pub lambda: C64,
    pub multiplicity: u32,
    pub alpha: C64,
    pub beta: C64,
    pub e12: C64,
    pub e21: C64,
    /// `D = -e12 e21` at `pi`.
    pub d: C64,
    pub sqrt_d: C64,
    pub h_int: f64,
    pub g_int: f64,
    /// True for the second member of a double eigenvalue with a single
    /// eigenvector; no biorthogonal partner is built for it.
    pub jordan: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub grid: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub y: Vf,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub z: Vf,
    pub pairing: Option<C64>,
    pub gamma: Option<C64>,
    pub norm: Option<f64>,
    pub partner_norm: Option<f64>,
}

impl EigenfunctionRecord {
    pub fn ratio_lemma1(&self) -> f64 {
        ratio(self.alpha.norm(), self.beta.norm())
    }

    pub fn ratio_lemma2(&self) -> f64 {
        ratio(self.e12.norm(), self.e21.norm())
    }

    pub fn norm_product(&self) -> Option<f64> {
        Some(self.norm? * self.partner_norm?)
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

fn exp_integral(s: f64) -> f64 {
    if s.abs() < 1e-12 {
        PI
    } else {
        (1.0 - (-2.0 * PI * s).exp()) / (2.0 * s)
    }
}

/// Coefficients from the second boundary form `a y2(0) + y2(pi)`:
/// `(alpha, beta) ~ (a + e22(pi), -e21(pi))`.
pub fn eigenfunction_periodic_type(n: i64, j: u8, lambda: C64, e_end: &Mat2, a: C64) -> Result<EigenfunctionRecord> {
    let (e12, e21, e22) = (e_end.e(1, 2), e_end.e(2, 1), e_end.e(2, 2));
    let (ca, cb) = (a + e22, -e21);
    let len = (ca.norm_sqr() + cb.norm_sqr()).sqrt();
    if len < 1e-14 * (1.0 + a.norm()) {
        return Err(Error::DegenerateEigenvector(lambda));
    }
    let d = -e12 * e21;
    Ok(EigenfunctionRecord {
        n,
        j,
        lambda,
        multiplicity: 1,
        alpha: ca / len,
        beta: cb / len,
        e12,
        e21,
        d,
        sqrt_d: d.sqrt(),
        h_int: exp_integral(lambda.im),
        g_int: exp_integral(-lambda.im),
        jordan: false,
        grid: Vec::new(),
        y: Vec::new(),
        z: Vec::new(),
        pairing: None,
        gamma: None,
        norm: None,
        partner_norm: None,
    })
}

/// `gamma` with `conj(gamma) int y1 y2 dx = 1/2`.
pub fn gamma_normalization(rec: &EigenfunctionRecord) -> Result<C64> {
    let p = rec
        .pairing
        .ok_or_else(|| Error::Precondition("record has no samples".into()))?;
    if p.norm() < TOL_PAIR {
        return Err(Error::DegeneratePairing(p.norm()));
    }
    Ok((0.5 / p).conj())
}

fn inner(u: &[[C64; 2]], v: &[[C64; 2]], w: &[f64]) -> C64 {
    u.iter()
        .zip(v)
        .zip(w)
        .map(|((a, b), wt)| (a[0] * b[0].conj() + a[1] * b[1].conj()) * wt)
        .sum()
}

fn norm_of(u: &[[C64; 2]], w: &[f64]) -> f64 {
    inner(u, u, w).re.max(0.0).sqrt()
}

fn swap_conj(y: &[[C64; 2]]) -> Vf {
    y.iter().map(|v| [v[1].conj(), v[0].conj()]).collect()
}

/// Grid size used for sampling at `lambda`: at least `m`, and enough nodes
/// to resolve `exp(i lambda x)`.
pub fn sampling_size(m: usize, lambda: C64) -> usize {
    let need = (16.0 * lambda.norm()).ceil() as usize + 1;
    let s = m.max(need).max(3);
    if s.is_multiple_of(2) {
        s + 1
    } else {
        s
    }
}

fn sample_columns(pot: &Potential, lambda: C64, m: usize, cfg: &SolverConfig) -> (Vec<f64>, Vec<Mat2>) {
    let sub = cfg.steps_for(pot, lambda).div_ceil(m - 1).max(1);
    let fm = sample_on_grid(pot, lambda, m, sub);
    (fm.x_grid, fm.e)
}

/// Samples `y` on an `m`-node grid and fills in norm, pairing, `gamma` and
/// the partner `z = gamma (conj y2, conj y1)`.
pub fn sample_record(rec: &mut EigenfunctionRecord, pot: &Potential, m: usize, cfg: &SolverConfig) -> Result<()> {
    let (grid, e) = sample_columns(pot, rec.lambda, m, cfg);
    let w = simpson_weights(m, 0.0, PI);
    rec.y = e
        .iter()
        .map(|ex| {
            [
                rec.alpha * ex.e(1, 1) + rec.beta * ex.e(1, 2),
                rec.alpha * ex.e(2, 1) + rec.beta * ex.e(2, 2),
            ]
        })
        .collect();
    rec.grid = grid;
    rec.norm = Some(norm_of(&rec.y, &w));
    rec.pairing = Some(rec.y.iter().zip(&w).map(|(v, wt)| v[0] * v[1] * wt).sum());
    let g = gamma_normalization(rec)?;
    rec.gamma = Some(g);
    rec.z = swap_conj(&rec.y).into_iter().map(|v| [v[0] * g, v[1] * g]).collect();
    rec.partner_norm = Some(norm_of(&rec.z, &w));
    Ok(())
}

/// Partners for a block of eigenfunctions: with `w_i = (conj y_i2, conj y_i1)`
/// and `M_ij = <y_i, w_j>`, `z_j = sum_k conj(M^{-1})_{kj} w_k`.
fn block_partners(ys: [&Vf; 2], w: &[f64]) -> Result<[Vf; 2]> {
    let cand = [swap_conj(ys[0]), swap_conj(ys[1])];
    let g = Mat2::new(
        inner(ys[0], &cand[0], w),
        inner(ys[0], &cand[1], w),
        inner(ys[1], &cand[0], w),
        inner(ys[1], &cand[1], w),
    );
    let det = g.det();
    if det.norm() < TOL_PAIR {
        return Err(Error::DegeneratePairing(det.norm()));
    }
    let inv = Mat2::new(g.e(2, 2), -g.e(1, 2), -g.e(2, 1), g.e(1, 1)).scale(1.0 / det);
    let build = |jj: usize| -> Vf {
        (0..w.len())
            .map(|p| {
                let mut v = [C64::new(0.0, 0.0); 2];
                for k in 0..2 {
                    let c = inv.0[k][jj].conj();
                    v[0] += c * cand[k][p][0];
                    v[1] += c * cand[k][p][1];
                }
                v
            })
            .collect()
    };
    Ok([build(0), build(1)])
}

/// Records for every located eigenvalue of a periodic-type problem. With
/// `sample = Some(m)` eigenfunctions and partners are sampled on a common
/// grid of `m` nodes (raised to resolve the largest eigenvalue).
pub fn periodic_records(
    spectrum: &Spectrum,
    pot: &Potential,
    a: C64,
    sample: Option<usize>,
    cfg: &SolverConfig,
) -> Result<Vec<EigenfunctionRecord>> {
    let m = sample.map(|m| {
        spectrum
            .entries
            .iter()
            .fold(m, |acc, e| acc.max(sampling_size(m, e.lambda)))
    });
    let mut ns: Vec<i64> = spectrum.entries.iter().map(|e| e.n).collect();
    ns.dedup();
    let blocks: Vec<Result<Vec<EigenfunctionRecord>>> = ns
        .par_iter()
        .map(|&n| {
            let entries: Vec<_> = spectrum.entries.iter().filter(|e| e.n == n).collect();
            if entries.len() == 2 && entries[0].multiplicity == 2 {
                double_block(n, entries[0].lambda, &entries[0].e_end, pot, a, m, cfg)
            } else {
                entries
                    .iter()
                    .map(|e| {
                        let mut rec = eigenfunction_periodic_type(e.n, e.j, e.lambda, &e.e_end, a)?;
                        if rec.d == C64::new(0.0, 0.0) {
                            return Err(Error::Numerical(format!(
                                "D vanishes at the simple eigenvalue {}",
                                e.lambda
                            )));
                        }
                        if let Some(m) = m {
                            sample_record(&mut rec, pot, m, cfg)?;
                        }
                        Ok(rec)
                    })
                    .collect()
            }
        })
        .collect();
    let mut out = Vec::new();
    for b in blocks {
        out.extend(b?);
    }
    Ok(out)
}

fn double_block(
    n: i64,
    lambda: C64,
    e_end: &Mat2,
    pot: &Potential,
    a: C64,
    m: Option<usize>,
    cfg: &SolverConfig,
) -> Result<Vec<EigenfunctionRecord>> {
    let bc = Mat2::new(
        1.0 + a * e_end.e(1, 1),
        a * e_end.e(1, 2),
        e_end.e(2, 1),
        a + e_end.e(2, 2),
    );
    let geometric_two = bc.max_abs() < 1e-8 * (1.0 + a.norm());
    let mut base = if geometric_two {
        let mut r = eigenfunction_periodic_type(n, 1, lambda, &Mat2::identity(), a - 1.0)?;
        r.e12 = e_end.e(1, 2);
        r.e21 = e_end.e(2, 1);
        r.d = -r.e12 * r.e21;
        r.sqrt_d = r.d.sqrt();
        r
    } else {
        match eigenfunction_periodic_type(n, 1, lambda, e_end, a) {
            Ok(r) => r,
            Err(_) => {
                // second row vanished; take the null vector of the first
                let (ca, cb) = (bc.e(1, 2), -bc.e(1, 1));
                let len = (ca.norm_sqr() + cb.norm_sqr()).sqrt();
                let mut r = eigenfunction_periodic_type(n, 1, lambda, &Mat2::identity(), a - 1.0)?;
                r.alpha = ca / len;
                r.beta = cb / len;
                r.e12 = e_end.e(1, 2);
                r.e21 = e_end.e(2, 1);
                r.d = -r.e12 * r.e21;
                r.sqrt_d = r.d.sqrt();
                r
            }
        }
    };
    base.multiplicity = 2;
    if !geometric_two {
        let mut second = base.clone();
        second.j = 2;
        second.jordan = true;
        if let Some(m) = m {
            let (grid, e) = sample_columns(pot, lambda, m, cfg);
            let w = simpson_weights(m, 0.0, PI);
            let y: Vf = e
                .iter()
                .map(|ex| {
                    [
                        base.alpha * ex.e(1, 1) + base.beta * ex.e(1, 2),
                        base.alpha * ex.e(2, 1) + base.beta * ex.e(2, 2),
                    ]
                })
                .collect();
            base.norm = Some(norm_of(&y, &w));
            base.grid = grid;
            base.y = y;
            second.grid = base.grid.clone();
            second.y = base.y.clone();
            second.norm = base.norm;
        }
        return Ok(vec![base, second]);
    }
    // two independent eigenfunctions: orthonormalise the columns
    let mut first = base.clone();
    first.alpha = C64::new(1.0, 0.0);
    first.beta = C64::new(0.0, 0.0);
    let mut second = base;
    second.j = 2;
    second.alpha = C64::new(0.0, 0.0);
    second.beta = C64::new(1.0, 0.0);
    if let Some(m) = m {
        let (grid, e) = sample_columns(pot, lambda, m, cfg);
        let w = simpson_weights(m, 0.0, PI);
        let c1: Vf = e.iter().map(|x| [x.e(1, 1), x.e(2, 1)]).collect();
        let c2: Vf = e.iter().map(|x| [x.e(1, 2), x.e(2, 2)]).collect();
        let n1 = norm_of(&c1, &w);
        let y1: Vf = c1.iter().map(|v| [v[0] / n1, v[1] / n1]).collect();
        let proj = inner(&c2, &y1, &w);
        let r2: Vf = c2.iter().zip(&y1).map(|(v, u)| [v[0] - proj * u[0], v[1] - proj * u[1]]).collect();
        let n2 = norm_of(&r2, &w);
        let y2: Vf = r2.iter().map(|v| [v[0] / n2, v[1] / n2]).collect();
        // coefficient vectors of the orthonormalised pair in the column basis
        let (a1, b1) = (C64::new(1.0 / n1, 0.0), C64::new(0.0, 0.0));
        let (a2, b2) = (-proj / (n1 * n2), C64::new(1.0 / n2, 0.0));
        let l1 = (a1.norm_sqr() + b1.norm_sqr()).sqrt();
        let l2 = (a2.norm_sqr() + b2.norm_sqr()).sqrt();
        first.alpha = a1 / l1;
        first.beta = b1 / l1;
        second.alpha = a2 / l2;
        second.beta = b2 / l2;
        let [z1, z2] = block_partners([&y1, &y2], &w)?;
        for (rec, y, z) in [(&mut first, y1, z1), (&mut second, y2, z2)] {
            rec.grid = grid.clone();
            rec.norm = Some(norm_of(&y, &w));
            rec.pairing = Some(y.iter().zip(&w).map(|(v, wt)| v[0] * v[1] * wt).sum());
            rec.partner_norm = Some(norm_of(&z, &w));
            rec.y = y;
            rec.z = z;
        }
    }
    Ok(vec![first, second])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictMode {
    Theorem1,
    Lemma1,
    Lemma2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub n: i64,
    pub lambda: C64,
    pub value: f64,
}

/// Band detection. A series is bounded when `max/min < factor` and its
/// log-log trend against `|lambda|` stays below `slope_tol`; it escapes when
/// either fails and the record values form a monotone run of at least
/// `min_witness` indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandRule {
    pub factor: f64,
    pub slope_tol: f64,
    pub min_witness: usize,
    /// Only indices with `|n| >= n_band` enter the tail.
    pub n_band: i64,
}

impl Default for BandRule {
    fn default() -> Self {
        BandRule {
            factor: 100.0,
            slope_tol: 0.2,
            min_witness: 3,
            n_band: 0,
        }
    }
}

impl BandRule {
    /// The rule for a series that behaves like the `p`-th power of this one.
    pub fn powered(&self, p: f64) -> Self {
        BandRule {
            factor: self.factor.powf(p),
            slope_tol: self.slope_tol * p,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisVerdict {
    pub mode: VerdictMode,
    pub is_riesz: bool,
    pub inconclusive: bool,
    pub ratio_series: Vec<RatioPoint>,
    pub blowup_witness: Option<Vec<i64>>,
    /// `[min, max]` of the tail.
    pub band: Option<[f64; 2]>,
    pub slope: Option<f64>,
    pub note: String,
}

struct BandOutcome {
    bounded: bool,
    escaped: bool,
    witness: Option<Vec<i64>>,
    band: Option<[f64; 2]>,
    slope: Option<f64>,
}

/// Monotone record run of the tail in increasing `|n|`; the direction with
/// the larger log span wins.
fn record_witness(tail: &[RatioPoint]) -> (Vec<i64>, f64) {
    let logs: Vec<f64> = tail.iter().map(|p| p.value.ln()).collect();
    let mut best = (Vec::new(), 0.0);
    for dir in [1.0, -1.0] {
        let mut idx = Vec::new();
        let mut cur = f64::NEG_INFINITY;
        let mut first = None;
        for (p, l) in tail.iter().zip(&logs) {
            let v = dir * l;
            if v > cur {
                cur = v;
                first.get_or_insert(v);
                idx.push(p.n);
            }
        }
        let span = first.map(|f| cur - f).unwrap_or(0.0);
        if span > best.1 || best.0.is_empty() {
            best = (idx, span);
        }
    }
    best
}

fn band_test(series: &[RatioPoint], rule: &BandRule) -> BandOutcome {
    let mut tail: Vec<RatioPoint> = series.iter().copied().filter(|p| p.n.abs() >= rule.n_band).collect();
    tail.sort_by_key(|p| (p.n.abs(), p.n));
    let finite: Vec<&RatioPoint> = tail.iter().filter(|p| p.value.is_finite() && p.value > 0.0).collect();
    let any_escape = finite.len() < tail.len();
    let (mn, mx) = finite
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.value), b.max(p.value)));
    let slope = if finite.len() >= 2 {
        let xs: Vec<f64> = finite.iter().map(|p| p.lambda.norm().max(1.0).ln()).collect();
        let ys: Vec<f64> = finite.iter().map(|p| p.value.ln()).collect();
        Some(ls_slope(&xs, &ys))
    } else {
        None
    };
    let band = (!finite.is_empty()).then_some([mn, mx]);
    let within = !any_escape && mx / mn < rule.factor && slope.is_none_or(|s| s.abs() < rule.slope_tol);
    if within {
        return BandOutcome {
            bounded: true,
            escaped: false,
            witness: None,
            band,
            slope,
        };
    }
    let vals: Vec<RatioPoint> = tail
        .iter()
        .map(|p| RatioPoint {
            value: if p.value.is_finite() { p.value } else { f64::MAX },
            ..*p
        })
        .collect();
    let (witness, span) = record_witness(&vals);
    let escaped = witness.len() >= rule.min_witness && span > 0.0;
    BandOutcome {
        bounded: false,
        escaped,
        witness: escaped.then_some(witness),
        band,
        slope,
    }
}

fn ratio_verdict(mode: VerdictMode, series: Vec<RatioPoint>, rule: &BandRule) -> BasisVerdict {
    let tail_len = series.iter().filter(|p| p.n.abs() >= rule.n_band).count();
    if tail_len == 0 {
        return BasisVerdict {
            mode,
            is_riesz: true,
            inconclusive: false,
            ratio_series: series,
            blowup_witness: None,
            band: None,
            slope: None,
            note: "no split indices in the tested tail: finite-T rule gives a Riesz basis".into(),
        };
    }
    if tail_len < rule.min_witness {
        return BasisVerdict {
            mode,
            is_riesz: false,
            inconclusive: true,
            ratio_series: series,
            blowup_witness: None,
            band: None,
            slope: None,
            note: format!("only {tail_len} split indices in the tail"),
        };
    }
    let out = band_test(&series, rule);
    let note = if out.bounded {
        "ratio stays in a band".to_string()
    } else if out.escaped {
        "ratio escapes the band monotonically".to_string()
    } else {
        "ratio leaves the band without a monotone witness".to_string()
    };
    BasisVerdict {
        mode,
        is_riesz: out.bounded,
        inconclusive: !out.bounded && !out.escaped,
        ratio_series: series,
        blowup_witness: out.witness,
        band: out.band,
        slope: out.slope,
        note,
    }
}

fn split_branch_one(records: &[EigenfunctionRecord]) -> impl Iterator<Item = &EigenfunctionRecord> {
    records.iter().filter(|r| r.j == 1 && r.multiplicity == 1)
}

/// `|alpha_{n,1} / beta_{n,1}|` over split indices.
pub fn lemma1_criterion(records: &[EigenfunctionRecord], rule: &BandRule) -> BasisVerdict {
    let series = split_branch_one(records)
        .map(|r| RatioPoint {
            n: r.n,
            lambda: r.lambda,
            value: r.ratio_lemma1(),
        })
        .collect();
    ratio_verdict(VerdictMode::Lemma1, series, rule)
}

/// `|e12(pi, lambda_{n,1})| / |e21(pi, lambda_{n,1})|` over split indices.
/// This ratio is a constant multiple of the square of the Lemma-1 ratio, so
/// it is tested with the squared rule.
pub fn lemma2_criterion(records: &[EigenfunctionRecord], rule: &BandRule) -> BasisVerdict {
    let series = split_branch_one(records)
        .map(|r| RatioPoint {
            n: r.n,
            lambda: r.lambda,
            value: r.ratio_lemma2(),
        })
        .collect();
    ratio_verdict(VerdictMode::Lemma2, series, &rule.powered(2.0))
}

/// Residue norm products `sqrt(sum ||h_jk||^2) / |Delta'|` at the simple
/// eigenvalues of the tail, largest of the two branches per index.
pub fn norm_products(
    spectrum: &Spectrum,
    pot: &Potential,
    minors: &Minors,
    m: usize,
    cfg: &SolverConfig,
) -> Result<Vec<RatioPoint>> {
    let simple: Vec<_> = spectrum
        .entries
        .iter()
        .filter(|e| e.multiplicity == 1 && e.n.abs() > spectrum.n0)
        .collect();
    let vals = simple
        .par_iter()
        .map(|e| {
            let s = KernelSampler::compute(pot, e.lambda, sampling_size(m, e.lambda), minors, cfg)?;
            Ok((e.n, e.lambda, s.hjk_norms().total() / e.delta_prime.norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<RatioPoint> = Vec::new();
    for (n, lambda, v) in vals {
        match out.iter_mut().find(|p| p.n == n) {
            Some(p) if p.value < v => {
                p.value = v;
                p.lambda = lambda;
            }
            Some(_) => {}
            None => out.push(RatioPoint { n, lambda, value: v }),
        }
    }
    out.sort_by_key(|p| (p.n.abs(), p.n));
    Ok(out)
}

/// Asymptotic multiplicity verdict for non-periodic-type conditions,
/// corroborated by the growth of residue norm products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub verdict: BasisVerdict,
    pub asymptotically_multiple: bool,
    pub products_grow: bool,
    pub signals_agree: bool,
}

pub fn theorem1_verdict(
    spectrum: &Spectrum,
    cls: &BcClassification,
    pot: &Potential,
    minors: &Minors,
    kernel_m: usize,
    cfg: &SolverConfig,
    rule: &BandRule,
) -> Result<Theorem1Report> {
    if cls.periodic_type {
        return Err(Error::Precondition(
            "periodic-type conditions: use the coefficient-ratio or endpoint-ratio criteria".into(),
        ));
    }
    if !cls.is_non_strongly_regular() {
        return Err(Error::Precondition("conditions must be regular and not strongly regular".into()));
    }
    let am = asymptotic_multiplicity_test(spectrum, spectrum.tol_cluster, spectrum.n0);
    let series = norm_products(spectrum, pot, minors, kernel_m, cfg)?;
    let growth = if series.len() >= rule.min_witness {
        let out = band_test(&series, rule);
        let (w, span) = record_witness(&series);
        let grows = !out.bounded && out.slope.is_some_and(|s| s > 0.0) && w.len() >= rule.min_witness && span > 0.0;
        (grows, grows.then_some(w), out.band, out.slope)
    } else {
        (false, None, None, None)
    };
    let (products_grow, witness, band, slope) = growth;
    let agree = am.asymptotically_multiple != products_grow;
    let note = if am.asymptotically_multiple {
        "spectrum is asymptotically multiple".to_string()
    } else {
        format!("split pairs in the tail at n = {:?}", am.tail_splits)
    };
    Ok(Theorem1Report {
        verdict: BasisVerdict {
            mode: VerdictMode::Theorem1,
            is_riesz: am.asymptotically_multiple,
            inconclusive: !agree,
            ratio_series: series,
            blowup_witness: witness,
            band,
            slope,
            note,
        },
        asymptotically_multiple: am.asymptotically_multiple,
        products_grow,
        signals_agree: agree,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub n: i64,
    pub j: u8,
    /// `|<f, z>| ||y||`.
    pub term: f64,
    pub coefficient: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub f_norm: f64,
    pub terms: Vec<ExpansionTerm>,
    /// `||sum <f,z> y||` after each added function.
    pub plain: Vec<f64>,
    /// Same, after each completed index block `n`.
    pub blocked: Vec<f64>,
    /// `||f - S||` for the full block sum.
    pub residual: f64,
}

/// Partial sums of the biorthogonal expansion of `f` (sampled on the common
/// record grid) over records with `|n| <= n_max`, ordered by `|n|`.
pub fn expansion_conditioning(f: &[[C64; 2]], records: &[EigenfunctionRecord], n_max: i64) -> Result<ExpansionReport> {
    let mut recs: Vec<&EigenfunctionRecord> = records.iter().filter(|r| r.n.abs() <= n_max).collect();
    recs.sort_by_key(|r| (r.n.abs(), r.n, r.j));
    let Some(first) = recs.first() else {
        return Err(Error::Precondition("no records in range".into()));
    };
    let m = first.grid.len();
    if m == 0 || f.len() != m || recs.iter().any(|r| r.grid.len() != m || (r.z.len() != m && !r.jordan)) {
        return Err(Error::Precondition("records and f must share one sampling grid".into()));
    }
    let w = simpson_weights(m, 0.0, PI);
    let mut sum = vec![[C64::new(0.0, 0.0); 2]; m];
    let mut terms = Vec::new();
    let mut plain = Vec::new();
    let mut blocked = Vec::new();
    for (idx, r) in recs.iter().enumerate() {
        if r.jordan || r.z.is_empty() {
            continue;
        }
        let c = inner(f, &r.z, &w);
        terms.push(ExpansionTerm {
            n: r.n,
            j: r.j,
            term: c.norm() * r.norm.unwrap_or(0.0),
            coefficient: c,
        });
        for (s, y) in sum.iter_mut().zip(&r.y) {
            s[0] += c * y[0];
            s[1] += c * y[1];
        }
        let nrm = norm_of(&sum, &w);
        plain.push(nrm);
        if recs.get(idx + 1).is_none_or(|next| next.n != r.n) {
            blocked.push(nrm);
        }
    }
    let diff: Vf = f.iter().zip(&sum).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
    Ok(ExpansionReport {
        f_norm: norm_of(f, &w),
        terms,
        plain,
        blocked,
        residual: norm_of(&diff, &w),
    })
}

/// Per-index summary row of a diagnostics report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub n: i64,
    pub j: u8,
    pub lambda: C64,
    pub ratio_lemma1: f64,
    pub ratio_lemma2: f64,
    pub norm_product: Option<f64>,
    pub gamma: Option<C64>,
}

pub fn diagnostic_rows(records: &[EigenfunctionRecord]) -> Vec<DiagnosticRow> {
    records
        .iter()
        .map(|r| DiagnosticRow {
            n: r.n,
            j: r.j,
            lambda: r.lambda,
            ratio_lemma1: r.ratio_lemma1(),
            ratio_lemma2: r.ratio_lemma2(),
            norm_product: r.norm_product(),
            gamma: r.gamma,
        })
        .collect()
}

pub fn write_ratio_csv<W: Write>(mut w: W, rows: &[DiagnosticRow]) -> std::io::Result<()> {
    writeln!(w, "n,j,re_lambda,im_lambda,ratio_lemma1,ratio_lemma2,norm_product")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.n,
            r.j,
            r.lambda.re,
            r.lambda.im,
            r.ratio_lemma1,
            r.ratio_lemma2,
            r.norm_product.map(|v| v.to_string()).unwrap_or_default()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoundaryMatrix;
    use crate::solver::free_fundamental_matrix;
    use crate::spectrum::{locate_eigenvalues, SpectrumConfig};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pts(vals: &[f64]) -> Vec<RatioPoint> {
        vals.iter()
            .enumerate()
            .map(|(i, v)| RatioPoint {
                n: i as i64 + 1,
                lambda: c(2.0 * (i + 1) as f64, 0.0),
                value: *v,
            })
            .collect()
    }

    #[test]
    fn free_limit_is_pure_first_column() {
        let lam = c(2.3, 0.0);
        let r = eigenfunction_periodic_type(1, 1, lam, &free_fundamental_matrix(lam, PI), c(-1.0, 0.0)).unwrap();
        assert!(r.beta.norm() < 1e-15);
        assert!((r.alpha.norm_sqr() + r.beta.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((r.h_int - PI).abs() < 1e-15);
        let r = eigenfunction_periodic_type(1, 1, c(2.0, 0.5), &free_fundamental_matrix(c(2.0, 0.5), PI), c(-1.0, 0.0)).unwrap();
        assert!((r.h_int - (1.0 - (-PI).exp())).abs() < 1e-14);
        assert!((r.g_int - ((PI).exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_coefficients_error() {
        let e = Mat2::diag(c(-1.0, 0.0), c(1.0, 0.0));
        assert!(matches!(
            eigenfunction_periodic_type(0, 1, c(0.0, 0.0), &e, c(-1.0, 0.0)),
            Err(Error::DegenerateEigenvector(_))
        ));
    }

    #[test]
    fn gamma_examples() {
        let lam = c(2.3, 0.0);
        let mut r = eigenfunction_periodic_type(1, 1, lam, &free_fundamental_matrix(lam, PI), c(-1.0, 0.0)).unwrap();
        r.alpha = c(0.5f64.sqrt(), 0.0);
        r.beta = c(0.5f64.sqrt(), 0.0);
        sample_record(&mut r, &Potential::zero(), 129, &SolverConfig::default()).unwrap();
        assert!((r.pairing.unwrap() - PI / 2.0).norm() < 1e-10);
        assert!((r.gamma.unwrap().norm() - 1.0 / PI).abs() < 1e-10);
        let w = simpson_weights(r.grid.len(), 0.0, PI);
        assert!((inner(&r.y, &r.z, &w) - 1.0).norm() < 1e-12);
        r.beta = c(0.0, 0.0);
        r.alpha = c(1.0, 0.0);
        assert!(matches!(
            sample_record(&mut r, &Potential::zero(), 129, &SolverConfig::default()),
            Err(Error::DegeneratePairing(_))
        ));
    }

    #[test]
    fn band_rules() {
        let rule = BandRule::default();
        let v = ratio_verdict(VerdictMode::Lemma1, pts(&[1.0; 8]), &rule);
        assert!(v.is_riesz && !v.inconclusive);
        let grow: Vec<f64> = (1..=10).map(|k| (2.0 * k as f64).sqrt() * 40.0f64.powi(k) / 40.0).collect();
        let v = ratio_verdict(VerdictMode::Lemma1, pts(&grow), &rule);
        assert!(!v.is_riesz && !v.inconclusive);
        assert!(v.blowup_witness.unwrap().len() >= 3);
        let v = ratio_verdict(VerdictMode::Lemma1, Vec::new(), &rule);
        assert!(v.is_riesz);
        let v = ratio_verdict(VerdictMode::Lemma1, pts(&[1.0, 2.0]), &rule);
        assert!(v.inconclusive);
    }

    #[test]
    fn smooth_periodic_records_and_agreement() {
        let pot = Potential::endpoint_smooth(c(0.5, 0.0), c(0.3, 0.2));
        let a = c(-1.0, 0.0);
        let minors = BoundaryMatrix::periodic_type(a).minors().unwrap();
        let cfg = SpectrumConfig::default();
        let s = locate_eigenvalues(&pot, &minors, -8..=8, &cfg).unwrap();
        let recs = periodic_records(&s, &pot, a, Some(257), &cfg.solver).unwrap();
        for r in &recs {
            assert!((r.alpha.norm_sqr() + r.beta.norm_sqr() - 1.0).abs() < 1e-12);
            // boundary conditions of the assembled eigenfunction
            let (y0, yp) = (r.y[0], *r.y.last().unwrap());
            let scale = r.norm.unwrap();
            assert!((y0[0] + a * yp[0]).norm() < 1e-8 * scale);
            assert!((a * y0[1] + yp[1]).norm() < 1e-8 * scale);
        }
        let rule = BandRule { n_band: 2, ..Default::default() };
        let v1 = lemma1_criterion(&recs, &rule);
        let v2 = lemma2_criterion(&recs, &rule);
        assert_eq!(v1.is_riesz, v2.is_riesz);
        assert!(v1.is_riesz, "{v1:?}");
        // Lemma-1 ratio is |a| sqrt of the Lemma-2 ratio
        for r in split_branch_one(&recs) {
            assert!((r.ratio_lemma1() - a.norm() * r.ratio_lemma2().sqrt()).abs() < 1e-8 * r.ratio_lemma1());
        }
    }

    #[test]
    fn expansion_of_an_eigenfunction() {
        let pot = Potential::endpoint_smooth(c(0.5, 0.0), c(0.3, 0.2));
        let a = c(-1.0, 0.0);
        let minors = BoundaryMatrix::periodic_type(a).minors().unwrap();
        let cfg = SpectrumConfig::default();
        let s = locate_eigenvalues(&pot, &minors, -4..=4, &cfg).unwrap();
        let recs = periodic_records(&s, &pot, a, Some(257), &cfg.solver).unwrap();
        let target = recs.iter().find(|r| r.n == 2 && r.j == 1).unwrap();
        let rep = expansion_conditioning(&target.y, &recs, 4).unwrap();
        for t in &rep.terms {
            if t.n == 2 && t.j == 1 {
                assert!((t.term - target.norm.unwrap()).abs() < 1e-6);
            } else {
                assert!(t.term < 1e-6, "{t:?}");
            }
        }
    }

    #[test]
    fn free_double_block_partners() {
        let a = c(-1.0, 0.0);
        let minors = BoundaryMatrix::periodic_type(a).minors().unwrap();
        let cfg = SpectrumConfig::default();
        let s = locate_eigenvalues(&Potential::zero(), &minors, -2..=2, &cfg).unwrap();
        let recs = periodic_records(&s, &Potential::zero(), a, Some(129), &cfg.solver).unwrap();
        let w = simpson_weights(recs[0].grid.len(), 0.0, PI);
        for r in &recs {
            for q in &recs {
                let expected = if (r.n, r.j) == (q.n, q.j) { 1.0 } else { 0.0 };
                assert!((inner(&r.y, &q.z, &w) - expected).norm() < 1e-8);
            }
        }
        assert!(lemma1_criterion(&recs, &BandRule::default()).is_riesz);
    }
}
