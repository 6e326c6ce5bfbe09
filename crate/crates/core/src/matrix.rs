// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense complex matrices and state vectors.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A square, row-major, double precision complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        ComplexMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |U†U - I|.
    pub fn unitarity_residual(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.dim);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// If the matrix is `s·I` within `tol`, returns `s`.
    pub fn as_scalar(&self, tol: f64) -> Option<Complex64> {
        let s = self[(0, 0)];
        (self.max_abs_diff(&Self::identity(self.dim).scale(s)) < tol).then_some(s)
    }

    /// Hilbert-Schmidt inner product tr(A† B).
    pub fn hs_inner(&self, other: &Self) -> Complex64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// Applies the matrix to a column vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[r * n..(r + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub const NORM_TOLERANCE: f64 = 1e-10;

    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > Self::NORM_TOLERANCE {
            return Err(Error::OutOfRange(format!("state norm {norm} is not 1")));
        }
        Ok(StateVector { amps })
    }

    /// The standard basis ket |k⟩ in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[k] = Complex64::new(1.0, 0.0);
        StateVector { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// |self⟩⟨self|.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), |r, c| self.amps[r] * self.amps[c].conj())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_products() {
        let i2 = ComplexMatrix::identity(2);
        let x = ComplexMatrix::from_fn(2, |r, c| Complex64::new((r != c) as u8 as f64, 0.0));
        assert_eq!(&x * &x, i2);
        assert!(x.unitarity_residual() < 1e-15);
        assert_eq!(x.trace(), Complex64::new(0.0, 0.0));
        assert_eq!(x.pow(2).as_scalar(1e-12), Some(Complex64::new(1.0, 0.0)));
        assert_eq!(x.as_scalar(1e-12), None);
        assert_eq!(x.hs_inner(&x), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn state_norm_is_checked() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(StateVector::new(vec![Complex64::new(h, 0.0), Complex64::new(0.0, h)]).is_ok());
        assert!(StateVector::new(vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]).is_err());
        let k = StateVector::basis(3, 1);
        assert_eq!(k.inner(&k), Complex64::new(1.0, 0.0));
        assert_eq!(k.projector()[(1, 1)], Complex64::new(1.0, 0.0));
    }
}
