//! Potentials `(P, Q)` on `[0, pi]`.
//!
//! Two internal representations cover every input kind: exponential series
//! `c + s x + sum_j c_j exp(i w_j x)` (Fourier inputs and all builtins) and
//! sampled values with linear or cubic interpolation.

use crate::counterexample::Theorem2Params;
use crate::error::{Error, Result};
use crate::quadrature::{int_exp, int_t_exp};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub freq: C64,
    pub coef: C64,
}

/// `f(x) = constant + slope x + sum_j coef_j exp(i freq_j x)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExpSeries {
    pub constant: C64,
    pub slope: C64,
    pub modes: Vec<Mode>,
}

impl ExpSeries {
    pub fn zero() -> Self {
        ExpSeries::default()
    }

    pub fn constant(c: C64) -> Self {
        ExpSeries {
            constant: c,
            ..Default::default()
        }
    }

    /// Series over `exp(2 i m x)` from `(m, coefficient)` pairs; `m = 0` goes
    /// into the constant.
    pub fn from_fourier(coeffs: &[(i64, C64)]) -> Self {
        let mut s = ExpSeries::zero();
        for &(m, c) in coeffs {
            if m == 0 {
                s.constant += c;
            } else {
                s.modes.push(Mode {
                    freq: C64::new(2.0 * m as f64, 0.0),
                    coef: c,
                });
            }
        }
        s
    }

    pub fn scaled(&self, t: C64) -> Self {
        ExpSeries {
            constant: self.constant * t,
            slope: self.slope * t,
            modes: self
                .modes
                .iter()
                .map(|m| Mode {
                    freq: m.freq,
                    coef: m.coef * t,
                })
                .collect(),
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        let mut v = self.constant + self.slope * x;
        for m in &self.modes {
            v += m.coef * (C64::i() * m.freq * x).exp();
        }
        v
    }

    pub fn derivative(&self, x: f64) -> C64 {
        let mut v = self.slope;
        for m in &self.modes {
            v += m.coef * C64::i() * m.freq * (C64::i() * m.freq * x).exp();
        }
        v
    }

    pub fn second_derivative(&self, x: f64) -> C64 {
        let mut v = ZERO;
        for m in &self.modes {
            v -= m.coef * m.freq * m.freq * (C64::i() * m.freq * x).exp();
        }
        v
    }

    /// `int_0^pi f(t) exp(i z t) dt` in closed form.
    pub fn integral_against_exp(&self, z: C64) -> C64 {
        let mut v = self.constant * int_exp(z, PI) + self.slope * int_t_exp(z, PI);
        for m in &self.modes {
            v += m.coef * int_exp(z + m.freq, PI);
        }
        v
    }

    /// `int_0^pi f'(t) exp(i z t) dt` in closed form.
    pub fn derivative_integral_against_exp(&self, z: C64) -> C64 {
        self.derivative_integral_to(z, PI)
    }

    /// `int_0^x f'(t) exp(i z t) dt` in closed form.
    pub fn derivative_integral_to(&self, z: C64, x: f64) -> C64 {
        let mut v = self.slope * int_exp(z, x);
        for m in &self.modes {
            v += m.coef * C64::i() * m.freq * int_exp(z + m.freq, x);
        }
        v
    }

    pub fn max_frequency(&self) -> f64 {
        self.modes.iter().map(|m| m.freq.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.constant == ZERO && self.slope == ZERO && self.modes.iter().all(|m| m.coef == ZERO)
    }

    /// Values at `x0 + (k + offset) h`, `k = 0..out.len()`, with per-mode phasor
    /// recurrences reseeded every 256 points.
    fn fill_uniform(&self, x0: f64, h: f64, out: &mut [C64]) {
        for (k, v) in out.iter_mut().enumerate() {
            *v = self.constant + self.slope * (x0 + h * k as f64);
        }
        for m in &self.modes {
            let step = (C64::i() * m.freq * h).exp();
            for (chunk_idx, chunk) in out.chunks_mut(256).enumerate() {
                let xs = x0 + h * (chunk_idx * 256) as f64;
                let mut ph = m.coef * (C64::i() * m.freq * xs).exp();
                for v in chunk.iter_mut() {
                    *v += ph;
                    ph *= step;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InterpOrder {
    Linear,
    #[default]
    Cubic,
}

/// Smoothness class tag carried with every potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothness {
    L1,
    C1,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPotential {
    pub x: Vec<f64>,
    pub p: Vec<C64>,
    pub q: Vec<C64>,
    pub order: InterpOrder,
}

impl SampledPotential {
    pub fn new(x: Vec<f64>, p: Vec<C64>, q: Vec<C64>, order: InterpOrder) -> Result<Self> {
        if x.len() < 2 || p.len() != x.len() || q.len() != x.len() {
            return Err(Error::Invalid("sample arrays must have equal length >= 2".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("sample grid must be strictly increasing".into()));
        }
        if x[0].abs() > 1e-12 || (x[x.len() - 1] - PI).abs() > 1e-12 {
            return Err(Error::Invalid("sample grid must cover [0, pi]".into()));
        }
        Ok(SampledPotential { x, p, q, order })
    }

    pub fn uniform(p: Vec<C64>, q: Vec<C64>, order: InterpOrder) -> Result<Self> {
        let x = crate::quadrature::uniform_grid(p.len(), 0.0, PI);
        Self::new(x, p, q, order)
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    fn slope_at(&self, vals: &[C64], i: usize) -> C64 {
        let n = self.x.len();
        if i == 0 {
            (vals[1] - vals[0]) / (self.x[1] - self.x[0])
        } else if i == n - 1 {
            (vals[n - 1] - vals[n - 2]) / (self.x[n - 1] - self.x[n - 2])
        } else {
            (vals[i + 1] - vals[i - 1]) / (self.x[i + 1] - self.x[i - 1])
        }
    }

    /// Value and first derivative of the interpolant of `vals`.
    fn interp(&self, vals: &[C64], x: f64) -> (C64, C64) {
        let i = self.locate(x);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        match self.order {
            InterpOrder::Linear => {
                let d = (vals[i + 1] - vals[i]) / h;
                (vals[i] + d * (x - x0), d)
            }
            InterpOrder::Cubic => {
                let (m0, m1) = (self.slope_at(vals, i) * h, self.slope_at(vals, i + 1) * h);
                let (t2, t3) = (t * t, t * t * t);
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + t;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                let v = vals[i] * h00 + m0 * h10 + vals[i + 1] * h01 + m1 * h11;
                let d00 = 6.0 * t2 - 6.0 * t;
                let d10 = 3.0 * t2 - 4.0 * t + 1.0;
                let d01 = -6.0 * t2 + 6.0 * t;
                let d11 = 3.0 * t2 - 2.0 * t;
                let d = (vals[i] * d00 + m0 * d10 + vals[i + 1] * d01 + m1 * d11) / h;
                (v, d)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Series {
        p: ExpSeries,
        q: ExpSeries,
        smoothness: Smoothness,
    },
    Samples(SampledPotential),
}

impl Potential {
    pub fn zero() -> Self {
        Potential::series(ExpSeries::zero(), ExpSeries::zero())
    }

    pub fn constant(p: C64, q: C64) -> Self {
        Potential::series(ExpSeries::constant(p), ExpSeries::constant(q))
    }

    pub fn series(p: ExpSeries, q: ExpSeries) -> Self {
        Potential::Series {
            p,
            q,
            smoothness: Smoothness::Analytic,
        }
    }

    /// `P = p sin^2(x/2)`, `Q = q sin^2(x/2)`: smooth, zero at `x = 0`, equal
    /// to `p`, `q` at `x = pi`.
    pub fn endpoint_smooth(p: C64, q: C64) -> Self {
        let shape = |c: C64| ExpSeries {
            constant: c * 0.5,
            slope: ZERO,
            modes: vec![
                Mode {
                    freq: C64::new(1.0, 0.0),
                    coef: -c * 0.25,
                },
                Mode {
                    freq: C64::new(-1.0, 0.0),
                    coef: -c * 0.25,
                },
            ],
        };
        Potential::series(shape(p), shape(q))
    }

    pub fn smoothness(&self) -> Smoothness {
        match self {
            Potential::Series { smoothness, .. } => *smoothness,
            Potential::Samples(s) => match s.order {
                InterpOrder::Cubic => Smoothness::C1,
                InterpOrder::Linear => Smoothness::L1,
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Series { p, q, .. } => p.is_zero() && q.is_zero(),
            Potential::Samples(s) => s.p.iter().chain(&s.q).all(|v| *v == ZERO),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> (C64, C64) {
        match self {
            Potential::Series { p, q, .. } => (p.eval(x), q.eval(x)),
            Potential::Samples(s) => (s.interp(&s.p, x).0, s.interp(&s.q, x).0),
        }
    }

    pub fn derivative(&self, x: f64) -> (C64, C64) {
        match self {
            Potential::Series { p, q, .. } => (p.derivative(x), q.derivative(x)),
            Potential::Samples(s) => (s.interp(&s.p, x).1, s.interp(&s.q, x).1),
        }
    }

    /// The potential multiplied by `t`.
    pub fn scaled(&self, t: C64) -> Self {
        match self {
            Potential::Series { p, q, smoothness } => Potential::Series {
                p: p.scaled(t),
                q: q.scaled(t),
                smoothness: *smoothness,
            },
            Potential::Samples(s) => Potential::Samples(SampledPotential {
                x: s.x.clone(),
                p: s.p.iter().map(|v| v * t).collect(),
                q: s.q.iter().map(|v| v * t).collect(),
                order: s.order,
            }),
        }
    }

    /// The potential with `P` and `Q` swapped.
    pub fn swapped(&self) -> Self {
        match self {
            Potential::Series { p, q, smoothness } => Potential::Series {
                p: q.clone(),
                q: p.clone(),
                smoothness: *smoothness,
            },
            Potential::Samples(s) => Potential::Samples(SampledPotential {
                x: s.x.clone(),
                p: s.q.clone(),
                q: s.p.clone(),
                order: s.order,
            }),
        }
    }

    /// Highest oscillation frequency present in the representation; the
    /// integrator resolves it alongside `|lambda|`.
    pub fn bandwidth(&self) -> f64 {
        match self {
            Potential::Series { p, q, .. } => p.max_frequency().max(q.max_frequency()),
            Potential::Samples(s) => {
                // Nyquist frequency of the finest sample spacing.
                let h = s.x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                PI / h
            }
        }
    }

    /// Fills `out[k] = (P, Q)(x0 + k h)`.
    pub fn fill_uniform(&self, x0: f64, h: f64, out: &mut [(C64, C64)]) {
        match self {
            Potential::Series { p, q, .. } => {
                let mut buf = vec![ZERO; out.len()];
                p.fill_uniform(x0, h, &mut buf);
                for (o, v) in out.iter_mut().zip(&buf) {
                    o.0 = *v;
                }
                q.fill_uniform(x0, h, &mut buf);
                for (o, v) in out.iter_mut().zip(&buf) {
                    o.1 = *v;
                }
            }
            Potential::Samples(_) => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = self.eval(x0 + h * k as f64);
                }
            }
        }
    }

    /// `(int_0^pi |P|, int_0^pi |Q|)` by composite Simpson on 2049 nodes.
    pub fn l1_norms(&self) -> (f64, f64) {
        let m = 2049;
        let w = crate::quadrature::simpson_weights(m, 0.0, PI);
        let xs = crate::quadrature::uniform_grid(m, 0.0, PI);
        let mut acc = (0.0, 0.0);
        for (x, w) in xs.iter().zip(&w) {
            let (p, q) = self.eval(*x);
            acc.0 += w * p.norm();
            acc.1 += w * q.norm();
        }
        acc
    }
}

/// Complex number as a JSON `[re, im]` pair.
pub type Cpair = [f64; 2];

pub fn cpair(v: Cpair) -> C64 {
    C64::new(v[0], v[1])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialDescriptor {
    Fourier {
        #[serde(rename = "P", default)]
        p: Vec<(i64, Cpair)>,
        #[serde(rename = "Q", default)]
        q: Vec<(i64, Cpair)>,
    },
    Samples {
        #[serde(default)]
        x: Option<Vec<f64>>,
        #[serde(rename = "P")]
        p: Vec<Cpair>,
        #[serde(rename = "Q")]
        q: Vec<Cpair>,
        #[serde(default)]
        order: InterpOrder,
    },
    Builtin(BuiltinPotential),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum BuiltinPotential {
    Zero,
    Constant {
        p: Cpair,
        q: Cpair,
    },
    EndpointSmooth {
        p: Cpair,
        q: Cpair,
    },
    Theorem2(Theorem2Params),
}

impl PotentialDescriptor {
    pub fn build(&self) -> Result<Potential> {
        match self {
            PotentialDescriptor::Fourier { p, q } => {
                let conv = |v: &Vec<(i64, Cpair)>| {
                    ExpSeries::from_fourier(&v.iter().map(|(m, c)| (*m, cpair(*c))).collect::<Vec<_>>())
                };
                Ok(Potential::series(conv(p), conv(q)))
            }
            PotentialDescriptor::Samples { x, p, q, order } => {
                let p: Vec<C64> = p.iter().map(|v| cpair(*v)).collect();
                let q: Vec<C64> = q.iter().map(|v| cpair(*v)).collect();
                let s = match x {
                    Some(x) => SampledPotential::new(x.clone(), p, q, *order)?,
                    None => SampledPotential::uniform(p, q, *order)?,
                };
                Ok(Potential::Samples(s))
            }
            PotentialDescriptor::Builtin(b) => match b {
                BuiltinPotential::Zero => Ok(Potential::zero()),
                BuiltinPotential::Constant { p, q } => Ok(Potential::constant(cpair(*p), cpair(*q))),
                BuiltinPotential::EndpointSmooth { p, q } => {
                    Ok(Potential::endpoint_smooth(cpair(*p), cpair(*q)))
                }
                BuiltinPotential::Theorem2(params) => Ok(params.build()?.potential),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_smooth_values() {
        let pot = Potential::endpoint_smooth(C64::new(2.0, 1.0), C64::new(-1.0, 0.0));
        let (p0, q0) = pot.eval(0.0);
        assert!(p0.norm() < 1e-15 && q0.norm() < 1e-15);
        let (p1, q1) = pot.eval(PI);
        assert!((p1 - C64::new(2.0, 1.0)).norm() < 1e-14);
        assert!((q1 + 1.0).norm() < 1e-14);
        let (dp, _) = pot.derivative(0.3);
        let fd = (pot.eval(0.3 + 1e-6).0 - pot.eval(0.3 - 1e-6).0) / 2e-6;
        assert!((dp - fd).norm() < 1e-8);
    }

    #[test]
    fn fill_uniform_matches_pointwise() {
        let s = ExpSeries {
            constant: C64::new(0.1, 0.0),
            slope: C64::new(0.0, 0.3),
            modes: vec![
                Mode { freq: C64::new(4000.0, 0.01), coef: C64::new(0.2, -0.1) },
                Mode { freq: C64::new(-2.0, 0.0), coef: C64::new(1.0, 0.0) },
            ],
        };
        let pot = Potential::series(s.clone(), s.scaled(C64::new(0.0, 1.0)));
        let n = 3000;
        let h = PI / n as f64;
        let mut out = vec![(ZERO, ZERO); n + 1];
        pot.fill_uniform(0.0, h, &mut out);
        for (k, v) in out.iter().enumerate() {
            let e = pot.eval(h * k as f64);
            assert!((v.0 - e.0).norm() < 1e-12 && (v.1 - e.1).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        let s = ExpSeries {
            constant: C64::new(0.5, 0.0),
            slope: C64::new(-0.2, 0.1),
            modes: vec![Mode { freq: C64::new(6.0, 0.0), coef: C64::new(0.0, 1.0) }],
        };
        let z = C64::new(-6.0, 0.05);
        let q = crate::quadrature::composite_gl(|t| s.eval(t) * (C64::i() * z * t).exp(), 0.0, PI, 200);
        assert!((s.integral_against_exp(z) - q).norm() < 1e-11);
        let qd = crate::quadrature::composite_gl(|t| s.derivative(t) * (C64::i() * z * t).exp(), 0.0, PI, 200);
        assert!((s.derivative_integral_against_exp(z) - qd).norm() < 1e-11);
    }

    #[test]
    fn samples_reject_bad_grids() {
        let v = vec![ZERO; 3];
        assert!(SampledPotential::new(vec![0.0, 2.0, 1.0], v.clone(), v.clone(), InterpOrder::Cubic).is_err());
        assert!(SampledPotential::new(vec![0.0, 1.0, 2.0], v.clone(), v.clone(), InterpOrder::Cubic).is_err());
        assert!(SampledPotential::new(vec![0.0, 1.0, PI], v.clone(), v, InterpOrder::Linear).is_ok());
    }

    #[test]
    fn cubic_samples_reproduce_smooth_function() {
        let m = 401;
        let xs = crate::quadrature::uniform_grid(m, 0.0, PI);
        let p: Vec<C64> = xs.iter().map(|x| C64::new(x.sin(), 0.0)).collect();
        let s = SampledPotential::uniform(p.clone(), p, InterpOrder::Cubic).unwrap();
        let pot = Potential::Samples(s);
        for x in [0.0, 0.1234, 1.5, 3.0, PI] {
            assert!((pot.eval(x).0.re - f64::sin(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn descriptor_json() {
        let d: PotentialDescriptor =
            serde_json::from_str(r#"{"kind":"fourier","P":[[0,[1,0]],[1,[0,0.5]]],"Q":[]}"#).unwrap();
        let pot = d.build().unwrap();
        let (p, q) = pot.eval(0.0);
        assert!((p - C64::new(1.0, 0.5)).norm() < 1e-15 && q.norm() == 0.0);
        let d: PotentialDescriptor =
            serde_json::from_str(r#"{"kind":"builtin","name":"constant","p":[0.1,0],"q":[0,0.2]}"#).unwrap();
        assert_eq!(d.build().unwrap(), Potential::constant(C64::new(0.1, 0.0), C64::new(0.0, 0.2)));
        let d: PotentialDescriptor = serde_json::from_str(r#"{"kind":"builtin","name":"zero"}"#).unwrap();
        assert!(d.build().unwrap().is_zero());
    }
}
