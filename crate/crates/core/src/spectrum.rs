//! Characteristic determinants, unperturbed eigenvalues, and localisation
//! and refinement of the eigenvalues of the perturbed problem.
//!
//! For non-strongly-regular conditions the eigenvalues come in pairs inside
//! the disks `|lambda - (tau0 + 2n)| < 1/2`. Each disk is counted by the
//! argument principle, then the pair is refined through the factorisation
//!
//! ```text
//! e11 * Delta = -A23 [(e11 - z)^2 - R],
//! R = (A14 e12 e21 + e11 (A13 e12 - A24 e21)) / A23,
//! ```
//!
//! valid because `det E = 1`. The two roots are the simple zeros of
//! `e11 - z - sqrt(R)` and `e11 - z + sqrt(R)`, which stays well conditioned
//! when the pair nearly coincides.

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::model::{centre_offset, log_branch, Minors};
use crate::potential::Potential;
use crate::solver::{endpoint, endpoint_with_steps, SolverConfig};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::ops::RangeInclusive;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumConfig {
    pub solver: SolverConfig,
    /// Residual tolerance relative to the largest `|Delta|` on the circle.
    pub tol_root: f64,
    /// Two eigenvalues closer than this are reported as one double eigenvalue.
    pub tol_cluster: f64,
    pub radius: f64,
    pub max_newton: usize,
    /// Initial number of trapezoid nodes on each circle.
    pub winding_points: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            solver: SolverConfig::default(),
            tol_root: 1e-10,
            tol_cluster: 1e-8,
            radius: 0.5,
            max_newton: 80,
            winding_points: 16,
        }
    }
}

/// `Delta_0(lambda) = (A12 + A34) - A23 e^{i pi lambda} + A14 e^{-i pi lambda}`.
pub fn delta0(lambda: C64, m: &Minors) -> C64 {
    let ph = (C64::i() * PI * lambda).exp();
    (m.a12 + m.a34) - m.a23 * ph + m.a14 / ph
}

/// Characteristic determinant from `E(pi, lambda)`.
pub fn delta(e_end: &Mat2, m: &Minors) -> C64 {
    m.a12 + m.a34 + delta_linear(e_end, m)
}

fn delta_linear(e: &Mat2, m: &Minors) -> C64 {
    m.a32() * e.e(1, 1) + m.a14 * e.e(2, 2) + m.a13 * e.e(1, 2) + m.a42() * e.e(2, 1)
}

/// `Delta'(lambda)` through the variational system.
pub fn delta_prime(lambda: C64, pot: &Potential, m: &Minors, cfg: &SolverConfig) -> C64 {
    let n = cfg.steps_for(pot, lambda);
    let (_, d) = endpoint_with_steps(pot, lambda, n, true);
    delta_linear(&d.expect("derivative"), m)
}

/// Central-difference `Delta'(lambda)` with step `1e-5 (1 + |lambda|)`;
/// cross-check for [`delta_prime`].
pub fn delta_prime_fd(lambda: C64, pot: &Potential, m: &Minors, cfg: &SolverConfig) -> C64 {
    let n = cfg.steps_for(pot, lambda);
    let h = 1e-5 * (1.0 + lambda.norm());
    let plus = endpoint_with_steps(pot, lambda + h, n, false).0;
    let minus = endpoint_with_steps(pot, lambda - h, n, false).0;
    (delta(&plus, m) - delta(&minus, m)) / (2.0 * h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnperturbedEigenvalue {
    pub n: i64,
    pub j: u8,
    pub lambda0: C64,
    pub multiplicity: u32,
}

/// Zeros of `Delta_0` indexed by `n` in `n_range`. Under the double-root
/// condition each value `offset + 2n` is reported once with multiplicity 2;
/// otherwise the two progressions `-(i/pi) Ln z_j + 2n` are interleaved.
pub fn unperturbed_eigenvalues(m: &Minors, n_range: RangeInclusive<i64>) -> Result<Vec<UnperturbedEigenvalue>> {
    let cls = m.classify();
    if !cls.regular {
        return Err(Error::NotRegular);
    }
    let (z1, z2) = (cls.z1.unwrap(), cls.z2.unwrap());
    let mut out = Vec::new();
    if !cls.strongly_regular {
        let off = centre_offset(z1);
        for n in n_range {
            out.push(UnperturbedEigenvalue {
                n,
                j: 1,
                lambda0: off + 2.0 * n as f64,
                multiplicity: 2,
            });
        }
    } else {
        let (l1, l2) = (log_branch(z1), log_branch(z2));
        for n in n_range {
            out.push(UnperturbedEigenvalue { n, j: 1, lambda0: l1 + 2.0 * n as f64, multiplicity: 1 });
            out.push(UnperturbedEigenvalue { n, j: 2, lambda0: l2 + 2.0 * n as f64, multiplicity: 1 });
        }
    }
    Ok(out)
}

/// Winding number of `f` around the circle `|lambda - centre| = radius` by the
/// trapezoid rule on the argument increments, refined until every increment
/// is below `pi/3` and the total is within 0.25 of an integer. Also returns
/// `max |f|` on the final node set.
pub fn winding_number<F: Fn(C64) -> C64>(f: F, centre: C64, radius: f64, min_points: usize) -> Option<(i64, f64)> {
    let mut npts = min_points.max(8);
    let mut vals: Vec<C64> = (0..npts)
        .map(|k| f(centre + radius * C64::from_polar(1.0, 2.0 * PI * k as f64 / npts as f64)))
        .collect();
    loop {
        let mut total = 0.0;
        let mut max_inc: f64 = 0.0;
        for k in 0..npts {
            let (a, b) = (vals[k], vals[(k + 1) % npts]);
            if a.norm() == 0.0 || b.norm() == 0.0 {
                return None;
            }
            let inc = (b / a).arg();
            max_inc = max_inc.max(inc.abs());
            total += inc;
        }
        let w = total / (2.0 * PI);
        if max_inc < PI / 3.0 && (w - w.round()).abs() < 0.25 {
            let max_abs = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
            return Some((w.round() as i64, max_abs));
        }
        if npts >= 4096 {
            return None;
        }
        // interleave midpoints
        let mids: Vec<C64> = (0..npts)
            .map(|k| f(centre + radius * C64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / npts as f64)))
            .collect();
        let mut merged = Vec::with_capacity(2 * npts);
        for k in 0..npts {
            merged.push(vals[k]);
            merged.push(mids[k]);
        }
        vals = merged;
        npts *= 2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub n: i64,
    pub j: u8,
    pub lambda: C64,
    /// Disk centre (unperturbed eigenvalue).
    pub lambda0: C64,
    pub eps: C64,
    pub multiplicity: u32,
    pub delta_prime: C64,
    /// `|Delta(lambda)|`.
    pub residual: f64,
    pub e_end: Mat2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskFailure {
    pub n: i64,
    pub winding: Option<i64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub offset: C64,
    pub entries: Vec<SpectrumEntry>,
    /// Indices whose two eigenvalues are distinct (beyond `tol_cluster`).
    pub t_set: Vec<i64>,
    /// Largest `|n|` whose disk failed to hold exactly two roots with
    /// `|eps| < 1/4`; 0 when every disk qualifies.
    pub n0: i64,
    pub failures: Vec<DiskFailure>,
    pub tol_cluster: f64,
}

impl Spectrum {
    pub fn pair(&self, n: i64) -> Option<(&SpectrumEntry, &SpectrumEntry)> {
        let a = self.entries.iter().find(|e| e.n == n && e.j == 1)?;
        let b = self.entries.iter().find(|e| e.n == n && e.j == 2)?;
        Some((a, b))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,j,re_lambda,im_lambda,abs_eps,multiplicity,abs_delta_prime,residual")?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                e.n,
                e.j,
                e.lambda.re,
                e.lambda.im,
                e.eps.norm(),
                e.multiplicity,
                e.delta_prime.norm(),
                e.residual
            )?;
        }
        Ok(())
    }
}

/// Result of processing one disk.
#[derive(Debug, Clone)]
pub enum DiskResult {
    Pair([SpectrumEntry; 2]),
    Failed(DiskFailure),
}

struct Characteristic<'a> {
    pot: &'a Potential,
    m: Minors,
    z: C64,
    cfg: SolverConfig,
}

impl Characteristic<'_> {
    fn steps(&self, lambda: C64) -> usize {
        self.cfg.steps_for(self.pot, lambda)
    }

    fn delta(&self, lambda: C64) -> C64 {
        delta(&endpoint(self.pot, lambda, &self.cfg), &self.m)
    }

    fn with_derivative(&self, lambda: C64, steps: usize) -> (Mat2, Mat2) {
        let (e, d) = endpoint_with_steps(self.pot, lambda, steps, true);
        (e, d.expect("derivative"))
    }

    /// `R` and `dR/dlambda`.
    fn r_and_dr(&self, e: &Mat2, d: &Mat2) -> (C64, C64) {
        let m = &self.m;
        let (e11, e12, e21) = (e.e(1, 1), e.e(1, 2), e.e(2, 1));
        let (d11, d12, d21) = (d.e(1, 1), d.e(1, 2), d.e(2, 1));
        let lin = m.a13 * e12 - m.a24 * e21;
        let r = (m.a14 * e12 * e21 + e11 * lin) / m.a23;
        let dr = (m.a14 * (d12 * e21 + e12 * d21) + d11 * lin + e11 * (m.a13 * d12 - m.a24 * d21)) / m.a23;
        (r, dr)
    }

    /// Newton iteration on `e11 - z - sign sqrt(R)` from `start`, with the
    /// square-root branch continued along the iterates.
    fn newton_factor(&self, sign: f64, start: C64, centre: C64, radius: f64, max_iter: usize) -> Option<C64> {
        let steps = self.steps(centre);
        let mut lam = start;
        let mut prev_sqrt: Option<C64> = None;
        let mut prev_step = f64::INFINITY;
        for _ in 0..max_iter {
            let (e, d) = self.with_derivative(lam, steps);
            let (r, dr) = self.r_and_dr(&e, &d);
            let mut s = r.sqrt();
            if let Some(p) = prev_sqrt {
                if (s - p).norm() > (s + p).norm() {
                    s = -s;
                }
            }
            prev_sqrt = Some(s);
            let g = e.e(1, 1) - self.z - sign * s;
            let dsq = if s.norm() > 0.0 { dr / (2.0 * s) } else { C64::new(0.0, 0.0) };
            let dg = d.e(1, 1) - sign * dsq;
            let mut step = g / dg;
            if !step.re.is_finite() || !step.im.is_finite() {
                return None;
            }
            if step.norm() > 0.2 * radius {
                step *= 0.2 * radius / step.norm();
            }
            lam -= step;
            if (lam - centre).norm() > 1.5 * radius {
                return None;
            }
            let sn = step.norm();
            if sn < 1e-13 * (1.0 + lam.norm()) || (sn < 1e-9 && sn >= 0.5 * prev_step) {
                return Some(lam);
            }
            prev_step = sn;
        }
        None
    }

    /// Damped Newton on `Delta` itself.
    fn newton_delta(&self, start: C64, centre: C64, radius: f64, max_iter: usize) -> Option<C64> {
        let steps = self.steps(centre);
        let mut lam = start;
        let mut prev_step = f64::INFINITY;
        for _ in 0..max_iter {
            let (e, d) = self.with_derivative(lam, steps);
            let mut step = delta(&e, &self.m) / delta_linear(&d, &self.m);
            if !step.re.is_finite() || !step.im.is_finite() {
                return if prev_step < 1e-7 { Some(lam) } else { None };
            }
            if step.norm() > 0.2 * radius {
                step *= 0.2 * radius / step.norm();
            }
            lam -= step;
            if (lam - centre).norm() > 1.5 * radius {
                return None;
            }
            let sn = step.norm();
            if sn < 1e-13 * (1.0 + lam.norm()) || (sn < 1e-9 && sn >= 0.5 * prev_step) {
                return Some(lam);
            }
            prev_step = sn;
        }
        if prev_step < 1e-7 {
            Some(lam)
        } else {
            None
        }
    }

    /// Quadratic model of `Delta` around a cluster point; returns both roots
    /// polished by Newton on `Delta`.
    fn quadratic_pair(&self, around: C64, centre: C64, radius: f64) -> Option<(C64, C64)> {
        let steps = self.steps(centre);
        let h = 1e-4;
        let (e, d) = self.with_derivative(around, steps);
        let (_, dp) = self.with_derivative(around + h, steps);
        let (_, dm) = self.with_derivative(around - h, steps);
        let f0 = delta(&e, &self.m);
        let f1 = delta_linear(&d, &self.m);
        let f2 = (delta_linear(&dp, &self.m) - delta_linear(&dm, &self.m)) / (2.0 * h);
        let disc = (f1 * f1 - 2.0 * f0 * f2).sqrt();
        let (r1, r2) = (around + (-f1 + disc) / f2, around + (-f1 - disc) / f2);
        let p1 = self.newton_delta(r1, centre, radius, 8).unwrap_or(r1);
        let p2 = self.newton_delta(r2, centre, radius, 8).unwrap_or(r2);
        Some((p1, p2))
    }

    fn entry(&self, n: i64, j: u8, lambda: C64, centre: C64, multiplicity: u32) -> SpectrumEntry {
        let (e, d) = self.with_derivative(lambda, self.steps(centre));
        SpectrumEntry {
            n,
            j,
            lambda,
            lambda0: centre,
            eps: lambda - centre,
            multiplicity,
            delta_prime: delta_linear(&d, &self.m),
            residual: delta(&e, &self.m).norm(),
            e_end: e,
        }
    }
}

fn order_pair(a: C64, b: C64) -> (C64, C64) {
    if (a.re, a.im) <= (b.re, b.im) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Counts and refines the pair of eigenvalues in the disk around
/// `offset + 2n` (non-strongly-regular conditions).
pub fn locate_disk(pot: &Potential, m: &Minors, n: i64, cfg: &SpectrumConfig) -> Result<DiskResult> {
    let cls = m.classify();
    if !cls.regular {
        return Err(Error::NotRegular);
    }
    if cls.strongly_regular {
        return Err(Error::Precondition("paired disks require non-strongly-regular conditions".into()));
    }
    let z = cls.z1.unwrap();
    let centre = centre_offset(z) + 2.0 * n as f64;
    let ch = Characteristic {
        pot,
        m: *m,
        z,
        cfg: cfg.solver,
    };
    let fail = |winding, reason: &str| {
        Ok(DiskResult::Failed(DiskFailure {
            n,
            winding,
            reason: reason.to_string(),
        }))
    };

    // Count; retry on slightly perturbed radii when the contour is unlucky.
    let mut counted = None;
    for r in [cfg.radius, 0.9 * cfg.radius, 1.1 * cfg.radius] {
        if let Some((w, max_abs)) = winding_number(|l| ch.delta(l), centre, r, cfg.winding_points) {
            counted = Some((w, max_abs, r));
            if w == 2 {
                break;
            }
        }
    }
    let Some((w, circle_max, radius)) = counted else {
        return fail(None, "winding number did not stabilise");
    };
    if w != 2 {
        return fail(Some(w), "disk does not contain exactly two zeros");
    }

    let plus = ch.newton_factor(1.0, centre, centre, radius, cfg.max_newton);
    let minus = ch.newton_factor(-1.0, centre, centre, radius, cfg.max_newton);
    let tol_res = cfg.tol_root * circle_max.max(1.0);
    let inside = |l: C64| (l - centre).norm() < radius;

    let mut pair = match (plus, minus) {
        (Some(a), Some(b)) if inside(a) && inside(b) => Some((a, b)),
        _ => None,
    };
    if let Some((a, b)) = pair {
        // Coinciding factor roots with a clearly nonzero R mean the branch
        // continuation collapsed; hand over to the quadratic model.
        let (e, d) = ch.with_derivative(a, ch.steps(centre));
        let (r, _) = ch.r_and_dr(&e, &d);
        if (a - b).norm() < cfg.tol_cluster && r.norm().sqrt() > 1e-6 {
            pair = None;
        }
    }
    if pair.is_none() {
        let Some(root) = ch.newton_delta(centre, centre, radius, cfg.max_newton) else {
            return fail(Some(w), "Newton iteration on Delta did not converge");
        };
        pair = ch.quadratic_pair(root, centre, radius).filter(|(a, b)| inside(*a) && inside(*b));
    }
    let Some((a, b)) = pair else {
        return fail(Some(w), "refinement left the disk");
    };

    let entries = if (a - b).norm() < cfg.tol_cluster {
        let mid = (a + b) * 0.5;
        [ch.entry(n, 1, mid, centre, 2), ch.entry(n, 2, mid, centre, 2)]
    } else {
        let (l1, l2) = order_pair(a, b);
        [ch.entry(n, 1, l1, centre, 1), ch.entry(n, 2, l2, centre, 1)]
    };
    if entries.iter().any(|e| e.residual > tol_res) {
        return fail(Some(w), "residual check failed");
    }
    Ok(DiskResult::Pair(entries))
}

fn locate_strongly_regular(pot: &Potential, m: &Minors, n_range: RangeInclusive<i64>, cfg: &SpectrumConfig) -> Result<Spectrum> {
    let unperturbed = unperturbed_eigenvalues(m, n_range)?;
    let ch = Characteristic {
        pot,
        m: *m,
        z: C64::new(0.0, 0.0),
        cfg: cfg.solver,
    };
    let results: Vec<std::result::Result<SpectrumEntry, DiskFailure>> = unperturbed
        .par_iter()
        .map(|u| {
            let gap = unperturbed
                .iter()
                .filter(|v| (v.n, v.j) != (u.n, u.j))
                .map(|v| (v.lambda0 - u.lambda0).norm())
                .fold(f64::INFINITY, f64::min);
            let radius = cfg.radius.min(0.45 * gap);
            let fail = |w: Option<i64>, reason: &str| DiskFailure {
                n: u.n,
                winding: w,
                reason: reason.to_string(),
            };
            match winding_number(|l| ch.delta(l), u.lambda0, radius, cfg.winding_points) {
                Some((1, _)) => {}
                Some((w, _)) => return Err(fail(Some(w), "disk does not contain exactly one zero")),
                None => return Err(fail(None, "winding number did not stabilise")),
            }
            match ch.newton_delta(u.lambda0, u.lambda0, radius, cfg.max_newton) {
                Some(l) if (l - u.lambda0).norm() < radius => Ok(ch.entry(u.n, u.j, l, u.lambda0, 1)),
                _ => Err(fail(Some(1), "Newton iteration on Delta did not converge")),
            }
        })
        .collect();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(e) => entries.push(e),
            Err(f) => failures.push(f),
        }
    }
    let n0 = failures.iter().map(|f| f.n.abs()).max().unwrap_or(0);
    Ok(Spectrum {
        offset: C64::new(0.0, 0.0),
        entries,
        t_set: Vec::new(),
        n0,
        failures,
        tol_cluster: cfg.tol_cluster,
    })
}

/// Locates the eigenvalues indexed by `n_range`.
pub fn locate_eigenvalues(
    pot: &Potential,
    m: &Minors,
    n_range: RangeInclusive<i64>,
    cfg: &SpectrumConfig,
) -> Result<Spectrum> {
    let cls = m.classify();
    if !cls.regular {
        return Err(Error::NotRegular);
    }
    if cls.strongly_regular {
        return locate_strongly_regular(pot, m, n_range, cfg);
    }
    let offset = centre_offset(cls.z1.unwrap());
    let ns: Vec<i64> = n_range.collect();
    let results: Vec<Result<DiskResult>> = ns.par_iter().map(|&n| locate_disk(pot, m, n, cfg)).collect();
    assemble(offset, results, cfg.tol_cluster)
}

/// Ordered merge of per-disk results.
pub fn assemble(offset: C64, results: Vec<Result<DiskResult>>, tol_cluster: f64) -> Result<Spectrum> {
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r? {
            DiskResult::Pair(p) => entries.extend_from_slice(&p),
            DiskResult::Failed(f) => failures.push(f),
        }
    }
    entries.sort_by_key(|e| (e.n, e.j));
    let mut t_set: Vec<i64> = entries
        .iter()
        .filter(|e| e.j == 1 && e.multiplicity == 1)
        .map(|e| e.n)
        .collect();
    t_set.dedup();
    let bad_eps = entries.iter().filter(|e| e.eps.norm() >= 0.25).map(|e| e.n.abs());
    let n0 = failures.iter().map(|f| f.n.abs()).chain(bad_eps).max().unwrap_or(0);
    Ok(Spectrum {
        offset,
        entries,
        t_set,
        n0,
        failures,
        tol_cluster,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticMultiplicity {
    pub asymptotically_multiple: bool,
    /// All indices with split pairs.
    pub t_set: Vec<i64>,
    /// Split indices with `|n| > n0`.
    pub tail_splits: Vec<i64>,
}

pub fn asymptotic_multiplicity_test(spectrum: &Spectrum, tol_cluster: f64, n0: i64) -> AsymptoticMultiplicity {
    let mut t_set = Vec::new();
    let mut ns: Vec<i64> = spectrum.entries.iter().map(|e| e.n).collect();
    ns.dedup();
    for n in ns {
        if let Some((a, b)) = spectrum.pair(n) {
            if (a.lambda - b.lambda).norm() > tol_cluster {
                t_set.push(n);
            }
        }
    }
    let tail_splits: Vec<i64> = t_set.iter().copied().filter(|n| n.abs() > n0).collect();
    AsymptoticMultiplicity {
        asymptotically_multiple: tail_splits.is_empty(),
        t_set,
        tail_splits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoundaryMatrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn periodic() -> Minors {
        BoundaryMatrix::periodic_type(c(-1.0, 0.0)).minors().unwrap()
    }

    #[test]
    fn delta0_examples() {
        assert!(delta0(c(0.0, 0.0), &periodic()).norm() < 1e-15);
        let ap = BoundaryMatrix::periodic_type(c(1.0, 0.0)).minors().unwrap();
        assert!(delta0(c(1.0, 0.0), &ap).norm() < 1e-14);
        let sr = BoundaryMatrix::from_real([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, -1.0]]).minors().unwrap();
        for k in -3..=3 {
            assert!(delta0(c(k as f64, 0.0), &sr).norm() < 1e-13);
        }
        let lam = c(0.37, 0.2);
        let ph = (C64::i() * PI * lam).exp();
        assert!((delta0(lam, &sr) - (ph - 1.0 / ph)).norm() < 1e-14);
    }

    #[test]
    fn delta_of_free_matrix_is_delta0() {
        let m = BoundaryMatrix::from_real([[1.0, 0.3, -0.2, 0.5], [0.1, 1.0, 0.7, -1.1]]).minors().unwrap();
        for lam in [c(0.3, 0.1), c(-4.2, 0.6), c(11.0, -0.3)] {
            let e = crate::solver::free_fundamental_matrix(lam, PI);
            assert!((delta(&e, &m) - delta0(lam, &m)).norm() < 1e-12);
        }
    }

    #[test]
    fn periodic_type_delta_matches_normal_form() {
        let a = c(0.7, -0.4);
        let m = BoundaryMatrix::periodic_type(a).minors().unwrap();
        let e = Mat2::new(c(0.3, 0.1), c(0.02, 0.0), c(-0.01, 0.05), c(2.0, -1.0));
        let expected = 2.0 * a + a * a * e.e(1, 1) + e.e(2, 2);
        assert!((delta(&e, &m) - expected).norm() < 1e-14);
    }

    #[test]
    fn unperturbed_examples() {
        let u = unperturbed_eigenvalues(&periodic(), -2..=2).unwrap();
        for v in &u {
            assert_eq!(v.multiplicity, 2);
            assert!((v.lambda0 - (2.0 + 2.0 * v.n as f64)).norm() < 1e-14);
        }
        let ap = BoundaryMatrix::periodic_type(c(1.0, 0.0)).minors().unwrap();
        for v in unperturbed_eigenvalues(&ap, -2..=2).unwrap() {
            assert!((v.lambda0.re - v.lambda0.re.round()).abs() < 1e-14);
            assert!(v.lambda0.re.round() as i64 % 2 != 0);
        }
        let sr = BoundaryMatrix::from_real([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, -1.0]]).minors().unwrap();
        let u = unperturbed_eigenvalues(&sr, 0..=0).unwrap();
        assert_eq!(u.len(), 2);
        assert!((u[0].lambda0 - u[1].lambda0).norm() > 0.9);
        assert!(u.iter().all(|v| v.multiplicity == 1 && delta0(v.lambda0, &sr).norm() < 1e-13));
        let dep = BoundaryMatrix::from_real([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]).minors().unwrap();
        assert!(matches!(unperturbed_eigenvalues(&dep, 0..=1), Err(Error::NotRegular)));
    }

    #[test]
    fn free_delta_prime_examples() {
        let cfg = SolverConfig::default();
        let pot = Potential::zero();
        for k in [-2, 0, 3] {
            let lam = c(2.0 * k as f64, 0.0);
            assert!(delta_prime(lam, &pot, &periodic(), &cfg).norm() < 1e-10);
        }
        let sr = BoundaryMatrix::from_real([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, -1.0]]).minors().unwrap();
        for k in [-1i32, 0, 1, 2] {
            let d = delta_prime(c(k as f64, 0.0), &pot, &sr, &cfg);
            let expected = c(0.0, 2.0 * PI * (-1f64).powi(k));
            assert!((d - expected).norm() < 1e-9, "k={k}: {d}");
        }
    }

    #[test]
    fn winding_counts_polynomial_zeros() {
        let f = |l: C64| (l - 0.1) * (l + c(0.0, 0.2)) * (l - 3.0);
        assert_eq!(winding_number(f, c(0.0, 0.0), 0.5, 16).unwrap().0, 2);
        assert_eq!(winding_number(f, c(3.0, 0.0), 0.5, 16).unwrap().0, 1);
        assert_eq!(winding_number(f, c(-3.0, 0.0), 0.5, 16).unwrap().0, 0);
    }

    #[test]
    fn zero_potential_periodic_is_double() {
        let s = locate_eigenvalues(&Potential::zero(), &periodic(), -3..=3, &SpectrumConfig::default()).unwrap();
        assert!(s.failures.is_empty());
        assert!(s.t_set.is_empty());
        for e in &s.entries {
            assert_eq!(e.multiplicity, 2);
            assert!((e.lambda - (2.0 + 2.0 * e.n as f64)).norm() < 1e-10);
        }
        let am = asymptotic_multiplicity_test(&s, 1e-8, s.n0);
        assert!(am.asymptotically_multiple);
    }

    #[test]
    fn split_only_below_threshold_counts_as_multiple() {
        let mut s = locate_eigenvalues(&Potential::zero(), &periodic(), -2..=2, &SpectrumConfig::default()).unwrap();
        for e in s.entries.iter_mut().filter(|e| e.n == 1 && e.j == 2) {
            e.lambda += 0.01;
        }
        assert!(asymptotic_multiplicity_test(&s, 1e-8, 1).asymptotically_multiple);
        let am = asymptotic_multiplicity_test(&s, 1e-8, 0);
        assert!(!am.asymptotically_multiple);
        assert_eq!(am.tail_splits, vec![1]);
    }

    #[test]
    fn smooth_potential_pairs_and_residuals() {
        let pot = Potential::endpoint_smooth(c(0.6, 0.1), c(-0.4, 0.3));
        let cfg = SpectrumConfig::default();
        let s = locate_eigenvalues(&pot, &periodic(), -6..=6, &cfg).unwrap();
        assert!(s.failures.is_empty(), "{:?}", s.failures);
        for e in &s.entries {
            assert!(e.residual < 1e-9, "{e:?}");
            let fd = delta_prime_fd(e.lambda, &pot, &periodic(), &cfg.solver);
            assert!((fd - e.delta_prime).norm() < 1e-5 * (1.0 + fd.norm()));
        }
        assert!(!s.t_set.is_empty());
    }
}
