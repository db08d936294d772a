//! Green-kernel numerator `H(t, x, lambda)`, its free counterpart, the Green
//! function, L2 norms of the kernel entries, and the rank-one factorisation
//! of the residue at a simple eigenvalue.
//!
//! Orientation: `u(x) = int_0^pi G(t, x, lambda) f(t) dt` solves
//! `L u - lambda u = f` together with the boundary conditions.

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::model::Minors;
use crate::potential::Potential;
use crate::quadrature::simpson_weights;
use crate::solver::{cal_e_from, sample_on_grid, FundamentalMatrix, SolverConfig};
use crate::spectrum::delta;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// `|Delta|` below this multiple of the minors' scale is treated as a pole.
pub const POLE_TOL: f64 = 1e-12;
pub const TOL_RANK: f64 = 1e-6;

/// `J(a, x)`: the combinations at `(a, x)` with the second column negated.
fn j_matrix(e_x: &Mat2, e_a: &Mat2) -> Mat2 {
    let c = cal_e_from(e_x, e_a);
    Mat2::new(c.e(1, 1), -c.e(1, 2), c.e(2, 1), -c.e(2, 2))
}

/// `H(t, x, lambda)` entry by entry from `E(t)`, `E(x)`, `E(pi)`.
pub fn h_from_values(e_t: &Mat2, e_x: &Mat2, e_pi: &Mat2, m: &Minors) -> Mat2 {
    let ct = cal_e_from(e_x, e_t);
    let cp = cal_e_from(e_x, e_pi);
    let e = |j, k| e_t.e(j, k);
    let mut h = Mat2::zero();
    for j in 1..=2 {
        let u = m.a14 * cp.e(j, 1) - m.a13 * cp.e(j, 2);
        let v = m.a24 * cp.e(j, 1) - m.a23 * cp.e(j, 2);
        h.0[j - 1][0] = m.a12 * ct.e(j, 1) + u * e(2, 2) - v * e(2, 1);
        h.0[j - 1][1] = -m.a12 * ct.e(j, 2) + u * e(1, 2) - v * e(1, 1);
    }
    h
}

/// The same numerator assembled as the matrix product
/// `A12 J(t,x) + J(pi,x) [[A14, A24], [A13, A23]] [[e22, e12], [-e21, -e11]](t)`.
pub fn h_product_form(e_t: &Mat2, e_x: &Mat2, e_pi: &Mat2, m: &Minors) -> Mat2 {
    let mid = Mat2::new(m.a14, m.a24, m.a13, m.a23);
    let right = Mat2::new(e_t.e(2, 2), e_t.e(1, 2), -e_t.e(2, 1), -e_t.e(1, 1));
    j_matrix(e_x, e_t).scale(m.a12) + j_matrix(e_x, e_pi) * mid * right
}

/// `H` on grid nodes of a sampled fundamental matrix.
pub fn h_matrix(fm: &FundamentalMatrix, t: f64, x: f64, m: &Minors) -> Result<Mat2> {
    Ok(h_from_values(&fm.at_grid(t)?, &fm.at_grid(x)?, &fm.e_end, m))
}

/// Closed-form free numerator.
pub fn h0_matrix(t: f64, x: f64, lambda: C64, m: &Minors) -> Mat2 {
    let ex = |s: f64| (C64::i() * lambda * s).exp();
    Mat2::new(
        m.a12 * ex(x - t) + m.a14 * ex(x - PI - t),
        -m.a24 * ex(x - PI + t),
        -m.a13 * ex(PI - x - t),
        -m.a12 * ex(t - x) + m.a23 * ex(PI - x + t),
    )
}

/// Which one-sided limit to take on the diagonal `t = x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `t -> x^-`, outside the triangle `t > x`.
    Below,
    /// `t -> x^+`.
    Above,
    /// Average of the two limits.
    Mid,
}

fn check_pole(lambda: C64, d: C64, m: &Minors) -> Result<()> {
    if d.norm() < POLE_TOL * m.scale() {
        return Err(Error::PoleProximity(lambda, d.norm()));
    }
    Ok(())
}

/// `G(t, x, lambda)` from `E(t)`, `E(x)`, `E(pi)`; `side` matters only at `t = x`.
pub fn green_from_values(
    lambda: C64,
    t: f64,
    x: f64,
    e_t: &Mat2,
    e_x: &Mat2,
    e_pi: &Mat2,
    m: &Minors,
    side: Side,
) -> Result<Mat2> {
    let d = delta(e_pi, m);
    check_pole(lambda, d, m)?;
    let base = h_from_values(e_t, e_x, e_pi, m).scale(C64::i() / d);
    let jump = j_matrix(e_x, e_t).scale(-C64::i());
    let weight = if t > x {
        1.0
    } else if t < x {
        0.0
    } else {
        match side {
            Side::Below => 0.0,
            Side::Above => 1.0,
            Side::Mid => 0.5,
        }
    };
    Ok(base + jump.scale(C64::new(weight, 0.0)))
}

/// `G(t, x, lambda)` at arbitrary points, re-integrating off-grid values.
pub fn green(fm: &FundamentalMatrix, pot: &Potential, t: f64, x: f64, m: &Minors, side: Side) -> Result<Mat2> {
    let e_t = fm.value_at(pot, t)?;
    let e_x = fm.value_at(pot, x)?;
    green_from_values(fm.lambda, t, x, &e_t, &e_x, &fm.e_end, m, side)
}

/// Free Green function.
pub fn green0(t: f64, x: f64, lambda: C64, m: &Minors, side: Side) -> Result<Mat2> {
    let d = crate::spectrum::delta0(lambda, m);
    check_pole(lambda, d, m)?;
    let ex = |s: f64| (C64::i() * lambda * s).exp();
    let base = h0_matrix(t, x, lambda, m).scale(C64::i() / d);
    let jump = Mat2::new(ex(x - t), C64::new(0.0, 0.0), C64::new(0.0, 0.0), -ex(t - x)).scale(-C64::i());
    let weight = match (t.partial_cmp(&x), side) {
        (Some(std::cmp::Ordering::Greater), _) | (_, Side::Above) => 1.0,
        (Some(std::cmp::Ordering::Less), _) | (_, Side::Below) => 0.0,
        _ => 0.5,
    };
    Ok(base + jump.scale(C64::new(weight, 0.0)))
}

/// Kernel values on an `m x m` lattice of `[0, pi]^2`; `values[i * m + k]`
/// is the value at `(t_i, x_k)`. Diagonal nodes hold the averaged limit,
/// with the one-sided limits in `diag_below` / `diag_above` when requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelGrid {
    pub lambda: C64,
    pub grid: Vec<f64>,
    pub values: Vec<Mat2>,
    pub diag_below: Option<Vec<Mat2>>,
    pub diag_above: Option<Vec<Mat2>>,
}

impl KernelGrid {
    pub fn at(&self, i: usize, k: usize) -> Mat2 {
        self.values[i * self.grid.len() + k]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,re11,im11,re12,im12,re21,im21,re22,im22")?;
        let m = self.grid.len();
        for i in 0..m {
            for k in 0..m {
                let v = self.at(i, k).0;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{}",
                    self.grid[i],
                    self.grid[k],
                    v[0][0].re,
                    v[0][0].im,
                    v[0][1].re,
                    v[0][1].im,
                    v[1][0].re,
                    v[1][0].im,
                    v[1][1].re,
                    v[1][1].im
                )?;
            }
        }
        Ok(())
    }
}

/// Samples of `E` on a uniform odd-size grid together with the boundary minors.
#[derive(Debug, Clone)]
pub struct KernelSampler {
    pub lambda: C64,
    pub grid: Vec<f64>,
    e: Vec<Mat2>,
    e_pi: Mat2,
    minors: Minors,
}

impl KernelSampler {
    pub fn new(fm: &FundamentalMatrix, minors: &Minors) -> Result<Self> {
        let m = fm.x_grid.len();
        if m < 3 || m.is_multiple_of(2) {
            return Err(Error::Precondition("kernel grid needs an odd number of nodes >= 3".into()));
        }
        Ok(KernelSampler {
            lambda: fm.lambda,
            grid: fm.x_grid.clone(),
            e: fm.e.clone(),
            e_pi: fm.e_end,
            minors: *minors,
        })
    }

    /// Integrates `E` on an `m`-point grid with the solver's step rule.
    pub fn compute(pot: &Potential, lambda: C64, m: usize, minors: &Minors, cfg: &SolverConfig) -> Result<Self> {
        cfg.check_strip(lambda)?;
        if m < 3 {
            return Err(Error::Precondition("kernel grid needs at least 3 nodes".into()));
        }
        let sub = cfg.steps_for(pot, lambda).div_ceil(m - 1).max(1);
        Self::new(&sample_on_grid(pot, lambda, m, sub), minors)
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    pub fn delta(&self) -> C64 {
        delta(&self.e_pi, &self.minors)
    }

    pub fn h(&self, i: usize, k: usize) -> Mat2 {
        h_from_values(&self.e[i], &self.e[k], &self.e_pi, &self.minors)
    }

    pub fn h_grid(&self) -> KernelGrid {
        let m = self.size();
        let values = (0..m * m).into_par_iter().map(|idx| self.h(idx / m, idx % m)).collect();
        KernelGrid {
            lambda: self.lambda,
            grid: self.grid.clone(),
            values,
            diag_below: None,
            diag_above: None,
        }
    }

    pub fn green(&self, i: usize, k: usize, side: Side) -> Result<Mat2> {
        green_from_values(
            self.lambda,
            self.grid[i],
            self.grid[k],
            &self.e[i],
            &self.e[k],
            &self.e_pi,
            &self.minors,
            side,
        )
    }

    pub fn green_grid(&self, one_sided: bool) -> Result<KernelGrid> {
        let m = self.size();
        let values = (0..m * m)
            .into_par_iter()
            .map(|idx| self.green(idx / m, idx % m, Side::Mid))
            .collect::<Result<Vec<_>>>()?;
        let (below, above) = if one_sided {
            let b = (0..m).map(|i| self.green(i, i, Side::Below)).collect::<Result<Vec<_>>>()?;
            let a = (0..m).map(|i| self.green(i, i, Side::Above)).collect::<Result<Vec<_>>>()?;
            (Some(b), Some(a))
        } else {
            (None, None)
        };
        Ok(KernelGrid {
            lambda: self.lambda,
            grid: self.grid.clone(),
            values,
            diag_below: below,
            diag_above: above,
        })
    }

    /// `||h_jk||_{L2(Omega)}` by tensor Simpson.
    pub fn hjk_norms(&self) -> HjkNorms {
        let m = self.size();
        let w = simpson_weights(m, 0.0, PI);
        let sums = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut s = [[0.0; 2]; 2];
                for k in 0..m {
                    let h = self.h(i, k);
                    for (a, row) in s.iter_mut().enumerate() {
                        for (b, v) in row.iter_mut().enumerate() {
                            *v += w[i] * w[k] * h.0[a][b].norm_sqr();
                        }
                    }
                }
                s
            })
            .reduce(
                || [[0.0; 2]; 2],
                |mut a, b| {
                    for r in 0..2 {
                        for c in 0..2 {
                            a[r][c] += b[r][c];
                        }
                    }
                    a
                },
            );
        HjkNorms {
            lambda: self.lambda,
            m,
            norms: sums.map(|r| r.map(f64::sqrt)),
        }
    }

    /// Rank-one factorisation of `iH(t, x)/Delta'(lambda)` as
    /// `y(x) conj(z(t))^T` by power iteration on the Simpson-weighted kernel.
    pub fn residue_pair(&self, delta_prime: C64) -> Result<ResiduePair> {
        if delta_prime.norm() < POLE_TOL * self.minors.scale() {
            return Err(Error::Precondition("Delta' vanishes: eigenvalue is not simple".into()));
        }
        let m = self.size();
        let n = 2 * m;
        let w = simpson_weights(m, 0.0, PI);
        let sw: Vec<f64> = w.iter().map(|v| v.abs().sqrt()).collect();
        let scale = C64::i() / delta_prime;
        // row index (j, x_a) -> 2a + j; column index (k, t_b) -> 2b + k
        let mut kd = vec![C64::new(0.0, 0.0); n * n];
        kd.par_chunks_mut(2 * n).enumerate().for_each(|(a, rows)| {
            for b in 0..m {
                let h = self.h(b, a).scale(scale);
                let f = sw[a] * sw[b];
                for j in 0..2 {
                    for k in 0..2 {
                        rows[j * n + 2 * b + k] = h.0[j][k] * f;
                    }
                }
            }
        });
        let frob = kd.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if frob == 0.0 {
            return Err(Error::NotRankOne(f64::NAN));
        }
        // start from the heaviest column
        let col = (0..n)
            .max_by(|&p, &q| {
                let np: f64 = (0..n).map(|r| kd[r * n + p].norm_sqr()).sum();
                let nq: f64 = (0..n).map(|r| kd[r * n + q].norm_sqr()).sum();
                np.total_cmp(&nq)
            })
            .unwrap();
        let mut u: Vec<C64> = (0..n).map(|r| kd[r * n + col]).collect();
        normalise(&mut u);
        let mut v = vec![C64::new(0.0, 0.0); n];
        let mut sigma = 0.0;
        for _ in 0..200 {
            // v = K^H u
            for (c, vc) in v.iter_mut().enumerate() {
                *vc = (0..n).map(|r| kd[r * n + c].conj() * u[r]).sum();
            }
            sigma = normalise(&mut v);
            let mut u_new: Vec<C64> = (0..n).map(|r| (0..n).map(|c| kd[r * n + c] * v[c]).sum()).collect();
            normalise(&mut u_new);
            let change = u.iter().zip(&u_new).map(|(a, b)| (*a - *b).norm_sqr()).sum::<f64>().sqrt();
            u = u_new;
            if change < 1e-14 {
                break;
            }
        }
        let mut resid = 0.0;
        for r in 0..n {
            for c in 0..n {
                resid += (kd[r * n + c] - u[r] * v[c].conj() * sigma).norm_sqr();
            }
        }
        let rank_defect = resid.sqrt() / sigma;
        if rank_defect > TOL_RANK {
            return Err(Error::NotRankOne(rank_defect));
        }
        let root = sigma.sqrt();
        let unpack = |vec: &[C64]| -> Vec<[C64; 2]> {
            (0..m)
                .map(|a| {
                    let s = if sw[a] > 0.0 { root / sw[a] } else { 0.0 };
                    [vec[2 * a] * s, vec[2 * a + 1] * s]
                })
                .collect()
        };
        Ok(ResiduePair {
            lambda: self.lambda,
            grid: self.grid.clone(),
            y: unpack(&u),
            z: unpack(&v),
            norm_product: sigma,
            frobenius: frob,
            rank_defect,
        })
    }
}

fn normalise(v: &mut [C64]) -> f64 {
    let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|c| *c /= n);
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HjkNorms {
    pub lambda: C64,
    pub m: usize,
    pub norms: [[f64; 2]; 2],
}

impl HjkNorms {
    pub fn total(&self) -> f64 {
        self.norms.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// One row of the norm report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub n: i64,
    pub j: u8,
    pub norms: HjkNorms,
    pub norm_product: Option<f64>,
}

pub fn hjk_norms(fm: &FundamentalMatrix, minors: &Minors) -> Result<HjkNorms> {
    Ok(KernelSampler::new(fm, minors)?.hjk_norms())
}

/// Rank-one residue factors on the sampling grid. `norm_product` is the
/// leading singular value, `||y|| ||z||`; `rank_defect` bounds the ratio of
/// the second to the first singular value from above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResiduePair {
    pub lambda: C64,
    pub grid: Vec<f64>,
    pub y: Vec<[C64; 2]>,
    pub z: Vec<[C64; 2]>,
    pub norm_product: f64,
    /// `sqrt(sum ||h_jk||^2) / |Delta'|` as seen by the quadrature.
    pub frobenius: f64,
    pub rank_defect: f64,
}
