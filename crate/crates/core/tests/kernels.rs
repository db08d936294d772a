use dirac_spectra::green::{green, KernelSampler, Side};
use dirac_spectra::model::BoundaryMatrix;
use dirac_spectra::potential::Potential;
use dirac_spectra::quadrature::composite_gl;
use dirac_spectra::solver::{fundamental_matrix, SolverConfig};
use dirac_spectra::spectrum::{locate_eigenvalues, SpectrumConfig};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `u` vanishes at both ends, so it satisfies any boundary conditions.
fn u(x: f64) -> [C64; 2] {
    [c(x.sin(), 0.0), c(1.0, 1.0) * (2.0 * x).sin()]
}

fn du(x: f64) -> [C64; 2] {
    [c(x.cos(), 0.0), c(2.0, 2.0) * (2.0 * x).cos()]
}

/// `f = B u' + V u - lambda u` with `B = diag(-i, i)`.
fn rhs(pot: &Potential, lambda: C64, x: f64) -> [C64; 2] {
    let (p, q) = pot.eval(x);
    let (v, d) = (u(x), du(x));
    [
        -C64::i() * d[0] + p * v[1] - lambda * v[0],
        C64::i() * d[1] + q * v[0] - lambda * v[1],
    ]
}

#[test]
fn green_function_inverts_the_operator() {
    let pot = Potential::endpoint_smooth(c(0.6, 0.1), c(-0.4, 0.3));
    let lambda = c(2.7, 0.4);
    let cfg = SolverConfig::default();
    let fm = fundamental_matrix(&pot, lambda, 1e-11, 65, &cfg).unwrap();
    for bc in [
        BoundaryMatrix::periodic_type(c(2.0, 0.0)),
        BoundaryMatrix::from_real([[1.0, 2.0, 0.0, 1.0], [0.0, 1.0, 3.0, 0.0]]),
    ] {
        let m = bc.minors().unwrap();
        for x in [0.4, 1.3, 2.9] {
            let apply = |t: f64| {
                let g = green(&fm, &pot, t, x, &m, Side::Mid).unwrap();
                let f = rhs(&pot, lambda, t);
                (g.e(1, 1) * f[0] + g.e(1, 2) * f[1], g.e(2, 1) * f[0] + g.e(2, 2) * f[1])
            };
            // split at the jump
            let mut acc = [c(0.0, 0.0); 2];
            for (a, b) in [(0.0, x), (x, PI)] {
                acc[0] += composite_gl(|t| apply(t).0, a, b, 12);
                acc[1] += composite_gl(|t| apply(t).1, a, b, 12);
            }
            let want = u(x);
            for k in 0..2 {
                assert!((acc[k] - want[k]).norm() < 1e-7, "x={x} k={k} got {} want {}", acc[k], want[k]);
            }
        }
    }
}

#[test]
fn residue_is_rank_one_at_simple_eigenvalues() {
    let pot = Potential::endpoint_smooth(c(0.6, 0.1), c(-0.4, 0.3));
    let m = BoundaryMatrix::periodic_type(c(2.0, 0.0)).minors().unwrap();
    let cfg = SpectrumConfig::default();
    let s = locate_eigenvalues(&pot, &m, -2..=2, &cfg).unwrap();
    let simple: Vec<_> = s.entries.iter().filter(|e| e.multiplicity == 1).take(4).collect();
    assert!(simple.len() >= 4);
    for e in simple {
        let ks = KernelSampler::compute(&pot, e.lambda, 129, &m, &cfg.solver).unwrap();
        let pair = ks.residue_pair(e.delta_prime).unwrap();
        assert!(pair.rank_defect < 1e-4, "{}", pair.rank_defect);
        let want = ks.hjk_norms().total() / e.delta_prime.norm();
        assert!((pair.norm_product - want).abs() < 1e-3 * want, "{} vs {want}", pair.norm_product);
    }
}

#[test]
fn residue_refuses_vanishing_derivative() {
    let m = BoundaryMatrix::periodic_type(c(2.0, 0.0)).minors().unwrap();
    let ks = KernelSampler::compute(&Potential::zero(), c(1.0, 0.3), 33, &m, &SolverConfig::default()).unwrap();
    assert!(ks.residue_pair(c(0.0, 0.0)).is_err());
}
