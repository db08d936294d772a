//! Boundary conditions: the 2x4 coefficient matrix, its minors, and the
//! regular / strongly regular / periodic-type classification.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative tolerance for deciding that a minor expression vanishes.
pub const CLASSIFY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMatrix {
    pub a: [[C64; 4]; 2],
}

/// The six independent 2x2 column minors `A_ij = a_1i a_2j - a_1j a_2i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minors {
    pub a12: C64,
    pub a13: C64,
    pub a14: C64,
    pub a23: C64,
    pub a24: C64,
    pub a34: C64,
}

impl BoundaryMatrix {
    pub fn new(a: [[C64; 4]; 2]) -> Self {
        BoundaryMatrix { a }
    }

    pub fn from_real(a: [[f64; 4]; 2]) -> Self {
        let c = |x: f64| C64::new(x, 0.0);
        BoundaryMatrix {
            a: [
                [c(a[0][0]), c(a[0][1]), c(a[0][2]), c(a[0][3])],
                [c(a[1][0]), c(a[1][1]), c(a[1][2]), c(a[1][3])],
            ],
        }
    }

    /// Normal form of periodic-type conditions: rows `(1, 0, a, 0)` and
    /// `(0, a, 0, 1)`, i.e. `y1(0) + a y1(pi) = 0`, `a y2(0) + y2(pi) = 0`.
    pub fn periodic_type(a: C64) -> Self {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        BoundaryMatrix {
            a: [[l, o, a, o], [o, a, o, l]],
        }
    }

    /// Column minor with 1-based column indices; antisymmetric in `(i, j)`.
    pub fn minor(&self, i: usize, j: usize) -> C64 {
        let a = &self.a;
        a[0][i - 1] * a[1][j - 1] - a[0][j - 1] * a[1][i - 1]
    }

    pub fn minors(&self) -> Result<Minors> {
        let m = Minors {
            a12: self.minor(1, 2),
            a13: self.minor(1, 3),
            a14: self.minor(1, 4),
            a23: self.minor(2, 3),
            a24: self.minor(2, 4),
            a34: self.minor(3, 4),
        };
        let scale = self
            .a
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if scale == 0.0 || m.scale() <= CLASSIFY_TOL * scale * scale {
            return Err(Error::DependentRows);
        }
        Ok(m)
    }

    /// Left multiplication by a 2x2 matrix (row operations).
    pub fn row_transform(&self, m: [[C64; 2]; 2]) -> Self {
        let mut out = [[C64::new(0.0, 0.0); 4]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[i][0] * self.a[0][j] + m[i][1] * self.a[1][j];
            }
        }
        BoundaryMatrix { a: out }
    }
}

impl Minors {
    pub fn a32(&self) -> C64 {
        -self.a23
    }

    pub fn a42(&self) -> C64 {
        -self.a24
    }

    /// Minor by 1-based column indices, antisymmetric.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i == j {
            return C64::new(0.0, 0.0);
        }
        if i > j {
            return -self.get(j, i);
        }
        match (i, j) {
            (1, 2) => self.a12,
            (1, 3) => self.a13,
            (1, 4) => self.a14,
            (2, 3) => self.a23,
            (2, 4) => self.a24,
            (3, 4) => self.a34,
            _ => panic!("column index out of range: ({i}, {j})"),
        }
    }

    /// Largest minor modulus; every classification tolerance is relative to it.
    pub fn scale(&self) -> f64 {
        [self.a12, self.a13, self.a14, self.a23, self.a24, self.a34]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Left-hand side of the non-strong-regularity condition.
    pub fn strong_discriminant(&self) -> C64 {
        let s = self.a12 + self.a34;
        s * s + 4.0 * self.a14 * self.a23
    }

    pub fn is_regular(&self) -> bool {
        let s = self.scale();
        (self.a14 * self.a23).norm() > CLASSIFY_TOL * s * s
    }

    pub fn classify(&self) -> BcClassification {
        classify(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodicSubtype {
    Periodic,
    Antiperiodic,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcClassification {
    pub regular: bool,
    pub strongly_regular: bool,
    pub periodic_type: bool,
    /// Roots of `A23 z^2 - (A12 + A34) z - A14 = 0`; `None` when not regular.
    pub z1: Option<C64>,
    pub z2: Option<C64>,
    pub degenerate_flag: bool,
    /// Parameter `a` of the periodic-type normal form, when periodic-type.
    pub periodic_a: Option<C64>,
    pub subtype: Option<PeriodicSubtype>,
}

impl BcClassification {
    /// Regular and satisfying the double-root condition.
    pub fn is_non_strongly_regular(&self) -> bool {
        self.regular && !self.strongly_regular
    }
}

pub fn classify(m: &Minors) -> BcClassification {
    let scale = m.scale();
    let tol = CLASSIFY_TOL * scale;
    let regular = m.is_regular();
    let strongly_regular = regular && m.strong_discriminant().norm() > CLASSIFY_TOL * scale * scale;
    let periodic_type = regular
        && !strongly_regular
        && m.a13.norm() <= tol
        && m.a24.norm() <= tol
        && (m.a12 - m.a34).norm() <= tol;

    let (z1, z2) = if regular {
        if strongly_regular {
            let disc = m.strong_discriminant().sqrt();
            let s = m.a12 + m.a34;
            let za = (s + disc) / (2.0 * m.a23);
            let zb = (s - disc) / (2.0 * m.a23);
            (Some(za), Some(zb))
        } else {
            let z = (m.a12 + m.a34) / (2.0 * m.a23);
            (Some(z), Some(z))
        }
    } else {
        (None, None)
    };

    let (periodic_a, subtype) = if periodic_type {
        let a = m.a12 / m.a14;
        let sub = if (a + 1.0).norm() <= 1e-12 {
            PeriodicSubtype::Periodic
        } else if (a - 1.0).norm() <= 1e-12 {
            PeriodicSubtype::Antiperiodic
        } else {
            PeriodicSubtype::General
        };
        (Some(a), Some(sub))
    } else {
        (None, None)
    };

    BcClassification {
        regular,
        strongly_regular,
        periodic_type,
        z1,
        z2,
        degenerate_flag: !regular,
        periodic_a,
        subtype,
    }
}

/// Principal-branch unperturbed eigenvalue `-(i/pi) Ln z`, with the real part
/// reduced into `(-1, 1]`.
pub fn log_branch(z: C64) -> C64 {
    let ln = C64::new(z.norm().ln(), z.arg());
    -C64::i() * ln / PI
}

/// Centre offset `tau0` of the eigenvalue disks for periodic-type
/// conditions with parameter `a = r e^{i phi}`: `e^{i pi tau0} = -1/a`,
/// `Re tau0` in `(0, 2]`, `Im tau0 = ln(r)/pi`.
pub fn tau0(a: C64) -> Result<C64> {
    if a.norm() == 0.0 || !a.norm().is_finite() {
        return Err(Error::Invalid("tau0 requires a != 0".into()));
    }
    let phi = a.arg();
    let mut re = 1.0 - phi / PI;
    if re <= 0.0 {
        re += 2.0;
    }
    Ok(C64::new(re, a.norm().ln() / PI))
}

/// Disk centre offset for general non-strongly-regular conditions: the
/// principal branch of `-(i/pi) Ln z`, reduced into `Re in (0, 2]` so that it
/// coincides with [`tau0`] on periodic-type conditions.
pub fn centre_offset(z: C64) -> C64 {
    let mut l = log_branch(z);
    if l.re <= 0.0 {
        l.re += 2.0;
    }
    l
}

/// JSON descriptor of boundary conditions: either the full 2x4 matrix of
/// `[re, im]` pairs or the periodic-type shorthand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundaryDescriptor {
    PeriodicTypeA { periodic_type_a: [f64; 2] },
    Matrix([[[f64; 2]; 4]; 2]),
}

impl BoundaryDescriptor {
    pub fn to_matrix(&self) -> BoundaryMatrix {
        match self {
            BoundaryDescriptor::PeriodicTypeA { periodic_type_a: [re, im] } => {
                BoundaryMatrix::periodic_type(C64::new(*re, *im))
            }
            BoundaryDescriptor::Matrix(rows) => {
                let mut a = [[C64::new(0.0, 0.0); 4]; 2];
                for i in 0..2 {
                    for j in 0..4 {
                        a[i][j] = C64::new(rows[i][j][0], rows[i][j][1]);
                    }
                }
                BoundaryMatrix { a }
            }
        }
    }
}
