use dirac_spectra::model::BoundaryMatrix;
use dirac_spectra::potential::{ExpSeries, Potential};
use dirac_spectra::solver::{fundamental_matrix, SolverConfig};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn cplx() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn matrix() -> impl Strategy<Value = BoundaryMatrix> {
    proptest::array::uniform2(proptest::array::uniform4(cplx())).prop_map(BoundaryMatrix::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minors_are_antisymmetric(b in matrix()) {
        for i in 1..=4 {
            prop_assert_eq!(b.minor(i, i), C64::new(0.0, 0.0));
            for j in 1..=4 {
                prop_assert!((b.minor(i, j) + b.minor(j, i)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn row_operations_scale_minors(b in matrix(), t in proptest::array::uniform2(proptest::array::uniform2(cplx()))) {
        let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
        prop_assume!(det.norm() > 1e-3);
        let bt = b.row_transform(t);
        for i in 1..=4 {
            for j in 1..=4 {
                let want = det * b.minor(i, j);
                prop_assert!((bt.minor(i, j) - want).norm() < 1e-12 * (1.0 + want.norm()));
            }
        }
    }

    #[test]
    fn periodic_type_is_never_strongly_regular(a in cplx()) {
        prop_assume!(a.norm() > 1e-3);
        let cls = BoundaryMatrix::periodic_type(a).minors().unwrap().classify();
        prop_assert!(cls.regular);
        prop_assert!(!cls.strongly_regular);
        prop_assert!(cls.periodic_type);
    }

    #[test]
    fn wronskian_is_one(p in cplx(), q in cplx(), lr in -30.0..30.0f64, li in -2.0..2.0f64) {
        let pot = Potential::series(
            ExpSeries::from_fourier(&[(0, p), (1, q * 0.3)]),
            ExpSeries::from_fourier(&[(0, q), (-2, p * 0.2)]),
        );
        let fm = fundamental_matrix(&pot, C64::new(lr, li), 1e-9, 33, &SolverConfig::default()).unwrap();
        for e in &fm.e {
            prop_assert!((e.det() - 1.0).norm() < 1e-8);
        }
    }
}
