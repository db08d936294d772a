//! Closed forms that do not go through the integrator.

use dirac_spectra::mat2::Mat2;
use dirac_spectra::potential::Potential;
use dirac_spectra::solver::{fundamental_matrix, SolverConfig};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// `y' = A y` with `A = [[i l, -i P], [i Q, -i l]]`, `A^2 = (PQ - l^2) I`.
fn constant_oracle(p: C64, q: C64, lambda: C64, x: f64) -> [[C64; 2]; 2] {
    let i = C64::i();
    let a = [[i * lambda, -i * p], [i * q, -i * lambda]];
    let mu = (p * q - lambda * lambda).sqrt();
    let ch = (mu * x).cosh();
    // sinh(mu x)/mu, regular at mu = 0
    let sh = if mu.norm() * x < 1e-6 { C64::new(x, 0.0) } else { (mu * x).sinh() / mu };
    [
        [ch + sh * a[0][0], sh * a[0][1]],
        [sh * a[1][0], ch + sh * a[1][1]],
    ]
}

#[test]
fn constant_potential_matches_closed_form() {
    let cases = [
        (C64::new(0.7, -0.2), C64::new(1.3, 0.4), C64::new(3.3, 0.1)),
        (C64::new(2.0, 0.0), C64::new(0.5, 0.0), C64::new(0.5, -0.3)),
        (C64::new(-1.0, 1.0), C64::new(0.0, 0.0), C64::new(12.7, 0.6)),
        (C64::new(0.3, 0.0), C64::new(0.3, 0.0), C64::new(0.3, 0.0)),
    ];
    for (p, q, lambda) in cases {
        let fm = fundamental_matrix(&Potential::constant(p, q), lambda, 1e-10, 17, &SolverConfig::default()).unwrap();
        for (x, e) in fm.x_grid.iter().zip(&fm.e) {
            let o = constant_oracle(p, q, lambda, *x);
            let om = Mat2::new(o[0][0], o[0][1], o[1][0], o[1][1]);
            let rel = (*e - om).max_abs() / om.max_abs();
            assert!(rel < 1e-8, "p={p} q={q} lambda={lambda} x={x} rel={rel}");
        }
    }
}

#[test]
fn free_case_is_diagonal_exponential() {
    let lambda = C64::new(4.2, 0.3);
    let o = constant_oracle(C64::new(0.0, 0.0), C64::new(0.0, 0.0), lambda, PI);
    assert!((o[0][0] - (C64::i() * lambda * PI).exp()).norm() < 1e-13);
    assert!((o[1][1] - (-C64::i() * lambda * PI).exp()).norm() < 1e-13);
    assert!(o[0][1].norm() < 1e-15 && o[1][0].norm() < 1e-15);
}
