// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

//! Generalized Pauli operators `X_a Z_b` over GF(N).
//!
//! `X_a |j⟩ = |a + j⟩` and `Z_b |j⟩ = ω_p^{Tr(bj)} |j⟩` with `ω_p = e^{2πi/p}`.
//! Phases are kept as exact exponents of `ω_p` until a matrix is built.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::matrix::{ComplexMatrix, StateVector};

/// An exponent of `ω_p`, stored in half units modulo `2p`.
///
/// Half-integral exponents only carry meaning for `p = 2`, where
/// `ω_2^{1/2} = i`. For odd `p` a half is folded into the integer
/// `(p + 1) / 2`, so the stored value is always even.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phase {
    p: u32,
    half_units: u32,
}

impl Phase {
    pub fn zero(p: u32) -> Self {
        Phase { p, half_units: 0 }
    }

    /// `ω_p^k`.
    pub fn from_int(p: u32, k: i64) -> Self {
        Phase {
            p,
            half_units: (2 * k.rem_euclid(p as i64)) as u32,
        }
    }

    /// `ω_p^{k/2}`.
    pub fn from_halves(p: u32, k: i64) -> Self {
        if p == 2 {
            return Phase {
                p,
                half_units: k.rem_euclid(4) as u32,
            };
        }
        let inv2 = (p as i64 + 1) / 2;
        Self::from_int(p, k.rem_euclid(p as i64) * inv2)
    }

    pub fn p(self) -> u32 {
        self.p
    }

    pub fn half_units(self) -> u32 {
        self.half_units
    }

    pub fn is_zero(self) -> bool {
        self.half_units == 0
    }

    pub fn add(self, other: Phase) -> Phase {
        assert_eq!(self.p, other.p, "phases of different characteristic");
        Phase {
            p: self.p,
            half_units: (self.half_units + other.half_units) % (2 * self.p),
        }
    }

    pub fn neg(self) -> Phase {
        Phase {
            p: self.p,
            half_units: (2 * self.p - self.half_units) % (2 * self.p),
        }
    }

    /// The exponent as a reduced fraction `num / den` with `den ∈ {1, 2}`.
    pub fn num_den(self) -> (u32, u32) {
        if self.half_units.is_multiple_of(2) {
            (self.half_units / 2, 1)
        } else {
            (self.half_units, 2)
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(1.0, PI * self.half_units as f64 / self.p as f64)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.num_den() {
            (n, 1) => write!(f, "{n}"),
            (n, d) => write!(f, "{n}/{d}"),
        }
    }
}

/// A phase-free Pauli label `(a, b)` standing for `X_a Z_b`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ErrorLabel {
    pub a: FieldElement,
    pub b: FieldElement,
}

impl ErrorLabel {
    pub const IDENTITY: ErrorLabel = ErrorLabel {
        a: FieldElement::ZERO,
        b: FieldElement::ZERO,
    };

    pub fn new(a: FieldElement, b: FieldElement) -> Self {
        ErrorLabel { a, b }
    }

    /// Position in the row-major `N × N` label table.
    pub fn index(self, n: u32) -> usize {
        (self.a.index() * n + self.b.index()) as usize
    }

    pub fn from_index(field: &Field, i: usize) -> Self {
        let n = field.size() as usize;
        ErrorLabel {
            a: field.element((i / n) as u32).expect("label index in range"),
            b: field.element((i % n) as u32).expect("label index in range"),
        }
    }

    pub fn is_identity(self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

impl fmt::Display for ErrorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// `ω_p^{phase} X_a Z_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliLabel {
    pub a: FieldElement,
    pub b: FieldElement,
    pub phase: Phase,
}

impl PauliLabel {
    pub fn new(field: &Field, a: FieldElement, b: FieldElement) -> Self {
        PauliLabel {
            a,
            b,
            phase: Phase::zero(field.p()),
        }
    }

    pub fn identity(field: &Field) -> Self {
        Self::new(field, FieldElement::ZERO, FieldElement::ZERO)
    }

    pub fn with_phase(self, phase: Phase) -> Self {
        PauliLabel { phase, ..self }
    }

    pub fn phase_num(&self) -> u32 {
        self.phase.num_den().0
    }

    pub fn phase_den(&self) -> u32 {
        self.phase.num_den().1
    }

    pub fn label(&self) -> ErrorLabel {
        ErrorLabel::new(self.a, self.b)
    }

    fn check(&self, field: &Field) -> Result<()> {
        field.check(self.a)?;
        field.check(self.b)?;
        if self.phase.p() != field.p() {
            return Err(Error::FieldMismatch {
                left: self.phase.p(),
                right: field.p(),
            });
        }
        Ok(())
    }
}

/// `ω_p^k` for `k = 0..p`.
pub fn roots_of_unity(p: u32) -> Vec<Complex64> {
    (0..p)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / p as f64))
        .collect()
}

/// Dense matrix of `ω_p^{phase} X_a Z_b`, rows and columns in element order.
pub fn pauli_matrix(field: &Field, label: &PauliLabel) -> Result<ComplexMatrix> {
    label.check(field)?;
    let n = field.size() as usize;
    let roots = roots_of_unity(field.p());
    let global = label.phase.to_complex();
    let mut m = ComplexMatrix::zeros(n);
    for j in field.elements() {
        let row = field.add(label.a, j).index() as usize;
        let tr = field.trace(field.mul(label.b, j));
        m[(row, j.index() as usize)] = global * roots[tr as usize];
    }
    Ok(m)
}

/// Label of the product `P·Q`.
///
/// Moving `Z_{b_P}` past `X_{a_Q}` contributes `Tr(b_P a_Q)` to the phase.
pub fn pauli_compose(field: &Field, lhs: &PauliLabel, rhs: &PauliLabel) -> Result<PauliLabel> {
    lhs.check(field)?;
    rhs.check(field)?;
    let p = field.p();
    let comm = Phase::from_int(p, field.trace(field.mul(lhs.b, rhs.a)) as i64);
    Ok(PauliLabel {
        a: field.add(lhs.a, rhs.a),
        b: field.add(lhs.b, rhs.b),
        phase: lhs.phase.add(rhs.phase).add(comm),
    })
}

/// `|Φ_ab⟩ = Σ_i ω_p^{Tr(ib)} |i, i+a⟩ / √N`, with `|i, j⟩` at index `iN + j`.
pub fn bell_state(field: &Field, a: FieldElement, b: FieldElement) -> Result<StateVector> {
    field.check(a)?;
    field.check(b)?;
    let n = field.size() as usize;
    let roots = roots_of_unity(field.p());
    let norm = 1.0 / (n as f64).sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); n * n];
    for i in field.elements() {
        let j = field.add(i, a);
        let tr = field.trace(field.mul(i, b));
        amps[i.index() as usize * n + j.index() as usize] = roots[tr as usize] * norm;
    }
    StateVector::new(amps)
}

/// `P_a = Σ_i |i, i+a⟩⟨i, i+a|`, the projector onto "Bob = Alice + a".
pub fn projector_standard_diff(field: &Field, a: FieldElement) -> Result<ComplexMatrix> {
    field.check(a)?;
    let n = field.size() as usize;
    let mut m = ComplexMatrix::zeros(n * n);
    for i in field.elements() {
        let k = i.index() as usize * n + field.add(i, a).index() as usize;
        m[(k, k)] = Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn label(f: &Field, a: u32, b: u32) -> PauliLabel {
        PauliLabel::new(f, f.element(a).unwrap(), f.element(b).unwrap())
    }

    #[test]
    fn phase_arithmetic() {
        let h = Phase::from_halves(2, 1);
        assert_eq!(h.num_den(), (1, 2));
        assert!((h.to_complex() - c(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(h.add(h), Phase::from_int(2, 1));
        assert_eq!(h.add(h).add(h).add(h), Phase::zero(2));
        // 1/2 ≡ 2 mod 3
        assert_eq!(Phase::from_halves(3, 1), Phase::from_int(3, 2));
        assert_eq!(Phase::from_int(5, -1).num_den(), (4, 1));
        assert_eq!(Phase::from_int(5, 3).neg(), Phase::from_int(5, 2));
    }

    #[test]
    fn matrix_examples() {
        let f2 = Field::new(2, 1).unwrap();
        let x = pauli_matrix(&f2, &label(&f2, 1, 0)).unwrap();
        assert_eq!(x.as_slice(), &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let z = pauli_matrix(&f2, &label(&f2, 0, 1)).unwrap();
        assert!(z.max_abs_diff(&ComplexMatrix::from_fn(2, |r, col| {
            if r != col { c(0., 0.) } else if r == 0 { c(1., 0.) } else { c(-1., 0.) }
        })) < 1e-15);
        let f3 = Field::new(3, 1).unwrap();
        let z3 = pauli_matrix(&f3, &label(&f3, 0, 1)).unwrap();
        let w = roots_of_unity(3);
        for k in 0..3 {
            assert!((z3[(k, k)] - w[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn compose_examples() {
        let f2 = Field::new(2, 1).unwrap();
        let xz = pauli_compose(&f2, &label(&f2, 1, 0), &label(&f2, 0, 1)).unwrap();
        assert_eq!((xz.a.index(), xz.b.index(), xz.phase_num()), (1, 1, 0));
        let f3 = Field::new(3, 1).unwrap();
        let zx = pauli_compose(&f3, &label(&f3, 0, 1), &label(&f3, 1, 0)).unwrap();
        assert_eq!((zx.a.index(), zx.b.index(), zx.phase_num(), zx.phase_den()), (1, 1, 1, 1));
        let p = label(&f3, 2, 1).with_phase(Phase::from_int(3, 2));
        assert_eq!(pauli_compose(&f3, &p, &PauliLabel::identity(&f3)).unwrap(), p);
        let g = Field::new(2, 2).unwrap();
        assert!(pauli_compose(&g, &p, &p).is_err());
    }

    #[test]
    fn compose_matches_matrix_product() {
        for (p, n, exhaustive) in [(2, 1, true), (3, 1, true), (2, 2, true), (5, 1, true), (7, 1, true), (2, 3, true), (3, 2, false), (2, 4, false)] {
            let f = Field::new(p, n).unwrap();
            let size = f.size();
            let step = if exhaustive { 1 } else { 5 };
            let labels: Vec<PauliLabel> = (0..size * size)
                .step_by(step)
                .map(|i| label(&f, i / size, i % size).with_phase(Phase::from_halves(p, i as i64)))
                .collect();
            let mats: Vec<_> = labels.iter().map(|l| pauli_matrix(&f, l).unwrap()).collect();
            for (l, ml) in labels.iter().zip(&mats) {
                assert!(ml.unitarity_residual() < 1e-12);
                for (r, mr) in labels.iter().zip(&mats) {
                    let prod = pauli_matrix(&f, &pauli_compose(&f, l, r).unwrap()).unwrap();
                    assert!(prod.max_abs_diff(&(ml * mr)) < 1e-12, "{l:?} {r:?}");
                }
            }
        }
    }

    #[test]
    fn shift_and_phase_groups() {
        let f = Field::new(2, 2).unwrap();
        for a in f.elements() {
            for b in f.elements() {
                let xa = pauli_matrix(&f, &PauliLabel::new(&f, a, FieldElement::ZERO)).unwrap();
                let xb = pauli_matrix(&f, &PauliLabel::new(&f, b, FieldElement::ZERO)).unwrap();
                let xab = pauli_matrix(&f, &PauliLabel::new(&f, f.add(a, b), FieldElement::ZERO)).unwrap();
                assert!((&xa * &xb).max_abs_diff(&xab) < 1e-12);
                let za = pauli_matrix(&f, &PauliLabel::new(&f, FieldElement::ZERO, a)).unwrap();
                let zb = pauli_matrix(&f, &PauliLabel::new(&f, FieldElement::ZERO, b)).unwrap();
                let zab = pauli_matrix(&f, &PauliLabel::new(&f, FieldElement::ZERO, f.add(a, b))).unwrap();
                assert!((&za * &zb).max_abs_diff(&zab) < 1e-12);
            }
        }
    }

    #[test]
    fn trace_and_hilbert_schmidt_orthogonality() {
        for (p, n) in [(2, 1), (3, 1), (2, 2), (5, 1), (2, 3), (7, 1)] {
            let f = Field::new(p, n).unwrap();
            let size = f.size();
            let mats: Vec<_> = (0..size * size)
                .map(|i| pauli_matrix(&f, &label(&f, i / size, i % size)).unwrap())
                .collect();
            for (i, m) in mats.iter().enumerate() {
                let expected = if i == 0 { size as f64 } else { 0.0 };
                assert!((m.trace() - c(expected, 0.0)).norm() < 1e-12);
                for (j, o) in mats.iter().enumerate() {
                    let g = m.hs_inner(o);
                    let expected = if i == j { size as f64 } else { 0.0 };
                    assert!((g - c(expected, 0.0)).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn bell_states() {
        let f = Field::new(2, 1).unwrap();
        let phi = bell_state(&f, FieldElement::ZERO, FieldElement::ZERO).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let close = |s: &StateVector, want: [f64; 4]| {
            s.amplitudes().iter().zip(want).all(|(z, w)| (z - c(w, 0.)).norm() < 1e-15)
        };
        assert!(close(&phi, [h, 0., 0., h]));
        let psi = bell_state(&f, FieldElement::ONE, FieldElement::ZERO).unwrap();
        assert!(close(&psi, [0., h, h, 0.]));

        let f3 = Field::new(3, 1).unwrap();
        let states: Vec<_> = (0..9)
            .map(|i| bell_state(&f3, f3.element(i / 3).unwrap(), f3.element(i % 3).unwrap()).unwrap())
            .collect();
        for (i, s) in states.iter().enumerate() {
            for (j, t) in states.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((s.inner(t) - c(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn projectors() {
        let f2 = Field::new(2, 1).unwrap();
        let p0 = projector_standard_diff(&f2, FieldElement::ZERO).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| p0[(i, i)].re).collect();
        assert_eq!(diag, vec![1., 0., 0., 1.]);

        let f3 = Field::new(3, 1).unwrap();
        let mut total = ComplexMatrix::zeros(9);
        for a in f3.elements() {
            total = total.add(&projector_standard_diff(&f3, a).unwrap());
        }
        assert!(total.max_abs_diff(&ComplexMatrix::identity(9)) < 1e-15);

        let f4 = Field::new(2, 2).unwrap();
        for a in f4.elements() {
            let direct = projector_standard_diff(&f4, a).unwrap();
            let mut sum = ComplexMatrix::zeros(16);
            for b in f4.elements() {
                sum = sum.add(&bell_state(&f4, a, b).unwrap().projector());
            }
            assert!(direct.max_abs_diff(&sum) < 1e-12);
        }
    }
}
