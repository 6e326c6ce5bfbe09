// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

//! Arithmetic in GF(p^n) and its quadratic extension.
//!
//! Elements are stored as their index `c_0 + c_1 p + ... + c_{n-1} p^{n-1}`
//! where `c_i` are the coordinates in the power basis `1, x, ..., x^{n-1}`.
//! This index is also the enumeration order used for matrix rows and
//! columns, so zero comes first and `1` second.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported field size.
pub const MAX_FIELD_SIZE: u32 = 1 << 16;

/// An element of some [`Field`], identified by its index.
///
/// An element does not know which field it belongs to. The checked
/// `try_*` methods on [`Field`] reject indices outside the field.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

struct Tables {
    p: u32,
    n: u32,
    size: u32,
    // low degree first, monic, length n + 1
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
    trace: Vec<u32>,
    primitive: u32,
}

/// A finite field GF(p^n) with precomputed log, exp and trace tables.
///
/// Cloning is cheap; the tables are shared.
#[derive(Clone)]
pub struct Field(Arc<Tables>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.modulus == other.0.modulus)
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{}) mod {}", self.p(), self.degree(), self.modulus_string())
    }
}

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut m: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= m {
        if m.is_multiple_of(d) {
            out.push(d);
            while m.is_multiple_of(d) {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

fn checked_size(p: u32, n: u32) -> Option<u32> {
    let mut size: u64 = 1;
    for _ in 0..n {
        size *= p as u64;
        if size > MAX_FIELD_SIZE as u64 {
            return None;
        }
    }
    Some(size as u32)
}

// Polynomials over GF(p), low degree first, no trailing zeros except for
// the zero polynomial which is empty.

fn trim(v: &mut Vec<u32>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn inv_mod_p(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a, p - 2, p)
}

fn pow_mod(b: u32, mut e: u32, p: u32) -> u32 {
    let p64 = p as u64;
    let (mut r, mut b) = (1u64, (b % p) as u64);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p64;
        }
        b = b * b % p64;
        e >>= 1;
    }
    r as u32
}

fn poly_divmod(num: &[u32], den: &[u32], p: u32) -> (Vec<u32>, Vec<u32>) {
    let mut rem: Vec<u32> = num.to_vec();
    trim(&mut rem);
    let dd = den.len() - 1;
    if rem.len() < den.len() {
        return (Vec::new(), rem);
    }
    let lead_inv = inv_mod_p(den[dd], p);
    let mut quot = vec![0u32; rem.len() - dd];
    while rem.len() >= den.len() {
        let shift = rem.len() - den.len();
        let coef = (*rem.last().unwrap() as u64 * lead_inv as u64 % p as u64) as u32;
        quot[shift] = coef;
        for (i, &d) in den.iter().enumerate() {
            let sub = (coef as u64 * d as u64 % p as u64) as u32;
            rem[shift + i] = (rem[shift + i] + p - sub) % p;
        }
        trim(&mut rem);
    }
    trim(&mut quot);
    (quot, rem)
}

fn poly_mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    let mut v: Vec<u32> = out.into_iter().map(|x| x as u32).collect();
    trim(&mut v);
    v
}

fn poly_sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let len = a.len().max(b.len());
    let mut v: Vec<u32> = (0..len)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            (x + p - y) % p
        })
        .collect();
    trim(&mut v);
    v
}

fn digits(mut index: u32, p: u32, n: u32) -> Vec<u32> {
    (0..n)
        .map(|_| {
            let d = index % p;
            index /= p;
            d
        })
        .collect()
}

fn undigits(c: &[u32], p: u32) -> u32 {
    c.iter().rev().fold(0, |acc, &d| acc * p + d)
}

fn is_irreducible(m: &[u32], p: u32) -> bool {
    let deg = m.len() - 1;
    for d in 1..=deg / 2 {
        let count = p.pow(d as u32);
        for lower in 0..count {
            let mut cand = digits(lower, p, d as u32);
            cand.push(1);
            if poly_divmod(m, &cand, p).1.is_empty() {
                return false;
            }
        }
    }
    true
}

fn smallest_irreducible(p: u32, n: u32) -> Vec<u32> {
    let count = p.pow(n);
    for lower in 0..count {
        let mut cand = digits(lower, p, n);
        cand.push(1);
        if is_irreducible(&cand, p) {
            return cand;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

impl Field {
    /// Builds GF(p^n) with the smallest monic irreducible modulus.
    ///
    /// Candidate moduli `x^n + c_{n-1} x^{n-1} + ... + c_0` are scanned in
    /// increasing order of the index `c_0 + c_1 p + ...`.
    pub fn new(p: u32, n: u32) -> Result<Field> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if n == 0 {
            return Err(Error::ZeroDegree);
        }
        let size = checked_size(p, n).ok_or(Error::FieldTooLarge { p, n })?;
        let modulus = smallest_irreducible(p, n);
        Ok(Self::with_modulus(p, n, size, modulus))
    }

    fn with_modulus(p: u32, n: u32, size: u32, modulus: Vec<u32>) -> Field {
        let mut t = Tables {
            p,
            n,
            size,
            modulus,
            exp: Vec::new(),
            log: Vec::new(),
            trace: Vec::new(),
            primitive: 1,
        };
        let order = size - 1;
        let factors = prime_factors(order);
        let pow_slow = |t: &Tables, g: u32, mut e: u32| {
            let mut r = 1u32;
            let mut b = g;
            while e > 0 {
                if e & 1 == 1 {
                    r = Self::mul_schoolbook_raw(t, r, b);
                }
                b = Self::mul_schoolbook_raw(t, b, b);
                e >>= 1;
            }
            r
        };
        let primitive = (1..size)
            .find(|&g| factors.iter().all(|&q| pow_slow(&t, g, order / q) != 1))
            .expect("the multiplicative group is cyclic");
        t.primitive = primitive;
        let mut exp = Vec::with_capacity(order as usize);
        let mut log = vec![u32::MAX; size as usize];
        let mut cur = 1u32;
        for k in 0..order {
            exp.push(cur);
            log[cur as usize] = k;
            cur = Self::mul_schoolbook_raw(&t, cur, primitive);
        }
        t.exp = exp;
        t.log = log;
        let mut field = Field(Arc::new(t));
        let trace: Vec<u32> = (0..size)
            .map(|x| {
                let mut acc = FieldElement::ZERO;
                let mut y = FieldElement(x);
                for _ in 0..n {
                    acc = field.add(acc, y);
                    y = field.pow(y, p as u64);
                }
                assert!(acc.0 < p, "trace left the prime subfield");
                acc.0
            })
            .collect();
        Arc::get_mut(&mut field.0)
            .expect("tables are not shared yet")
            .trace = trace;
        field
    }

    fn mul_schoolbook_raw(t: &Tables, a: u32, b: u32) -> u32 {
        let prod = poly_mul(&digits(a, t.p, t.n), &digits(b, t.p, t.n), t.p);
        let (_, rem) = poly_divmod(&prod, &t.modulus, t.p);
        undigits(&rem, t.p)
    }

    pub fn p(&self) -> u32 {
        self.0.p
    }

    pub fn degree(&self) -> u32 {
        self.0.n
    }

    /// N = p^n.
    pub fn size(&self) -> u32 {
        self.0.size
    }

    /// Modulus coefficients, constant term first; the last entry is 1.
    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }

    pub fn modulus_string(&self) -> String {
        let m = &self.0.modulus;
        let mut terms = Vec::new();
        for (deg, &c) in m.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let coef = if c == 1 && deg > 0 {
                String::new()
            } else {
                c.to_string()
            };
            terms.push(match deg {
                0 => coef,
                1 => format!("{coef}x"),
                _ => format!("{coef}x^{deg}"),
            });
        }
        terms.join(" + ")
    }

    /// The power basis `1, x, ..., x^{n-1}`.
    pub fn basis(&self) -> Vec<FieldElement> {
        (0..self.0.n).map(|i| FieldElement(self.0.p.pow(i))).collect()
    }

    /// A generator of the multiplicative group.
    pub fn primitive_element(&self) -> FieldElement {
        FieldElement(self.0.primitive)
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::ZERO
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::ONE
    }

    /// The image of an integer in the prime subfield.
    pub fn from_int(&self, k: i64) -> FieldElement {
        FieldElement(k.rem_euclid(self.0.p as i64) as u32)
    }

    pub fn element(&self, index: u32) -> Result<FieldElement> {
        let x = FieldElement(index);
        self.check(x)?;
        Ok(x)
    }

    pub fn contains(&self, x: FieldElement) -> bool {
        x.0 < self.0.size
    }

    pub fn check(&self, x: FieldElement) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::ForeignElement {
                index: x.0,
                size: self.0.size,
            })
        }
    }

    /// All elements in enumeration order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + Clone {
        (0..self.0.size).map(FieldElement)
    }

    /// Coordinates in the power basis, constant term first.
    pub fn coeffs(&self, x: FieldElement) -> Vec<u32> {
        digits(x.0, self.0.p, self.0.n)
    }

    pub fn from_coeffs(&self, c: &[u32]) -> Result<FieldElement> {
        if c.len() > self.0.n as usize || c.iter().any(|&d| d >= self.0.p) {
            return Err(Error::OutOfRange(format!(
                "coefficient vector {c:?} for GF({})",
                self.0.size
            )));
        }
        Ok(FieldElement(undigits(c, self.0.p)))
    }

    /// Sum of coordinate products mod p. This is the pairing used for the
    /// additive characters of GF(p)^n.
    pub fn coeff_dot(&self, x: FieldElement, y: FieldElement) -> u32 {
        let p = self.0.p;
        if p == 2 {
            return (x.0 & y.0).count_ones() & 1;
        }
        let (mut a, mut b, mut acc) = (x.0, y.0, 0u32);
        while a > 0 && b > 0 {
            acc = (acc + (a % p) * (b % p)) % p;
            a /= p;
            b /= p;
        }
        acc
    }

    pub fn add(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        let p = self.0.p;
        if p == 2 {
            return FieldElement(x.0 ^ y.0);
        }
        if self.0.n == 1 {
            return FieldElement((x.0 + y.0) % p);
        }
        let (mut a, mut b, mut out, mut place) = (x.0, y.0, 0u32, 1u32);
        while a > 0 || b > 0 {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        FieldElement(out)
    }

    pub fn neg(&self, x: FieldElement) -> FieldElement {
        let p = self.0.p;
        if p == 2 {
            return x;
        }
        let (mut a, mut out, mut place) = (x.0, 0u32, 1u32);
        while a > 0 {
            out += ((p - a % p) % p) * place;
            a /= p;
            place *= p;
        }
        FieldElement(out)
    }

    pub fn sub(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        self.add(x, self.neg(y))
    }

    pub fn mul(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        if x.0 == 0 || y.0 == 0 {
            return FieldElement::ZERO;
        }
        let t = &self.0;
        let order = t.size - 1;
        let s = t.log[x.0 as usize] + t.log[y.0 as usize];
        FieldElement(t.exp[(if s >= order { s - order } else { s }) as usize])
    }

    /// Product computed by polynomial multiplication and reduction, without
    /// the log tables.
    pub fn mul_schoolbook(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        FieldElement(Self::mul_schoolbook_raw(&self.0, x.0, y.0))
    }

    pub fn square(&self, x: FieldElement) -> FieldElement {
        self.mul(x, x)
    }

    pub fn pow(&self, x: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if x.0 == 0 {
            return FieldElement::ZERO;
        }
        let order = (self.0.size - 1) as u64;
        let l = self.0.log[x.0 as usize] as u64;
        FieldElement(self.0.exp[((l * (e % order)) % order) as usize])
    }

    /// Inverse by the extended Euclidean algorithm on polynomials.
    pub fn inv(&self, x: FieldElement) -> Result<FieldElement> {
        if x.0 == 0 {
            return Err(Error::DivisionByZero);
        }
        let p = self.0.p;
        let mut r0 = self.0.modulus.clone();
        let mut r1 = digits(x.0, p, self.0.n);
        trim(&mut r1);
        let mut s0: Vec<u32> = Vec::new();
        let mut s1: Vec<u32> = vec![1];
        while !r1.is_empty() {
            let (q, r) = poly_divmod(&r0, &r1, p);
            let s2 = poly_sub(&s0, &poly_mul(&q, &s1, p), p);
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s2);
        }
        // r0 is a nonzero constant because the modulus is irreducible.
        debug_assert_eq!(r0.len(), 1);
        let c = inv_mod_p(r0[0], p);
        let mut out: Vec<u32> = s0
            .iter()
            .map(|&s| (s as u64 * c as u64 % p as u64) as u32)
            .collect();
        out.resize(self.0.n as usize, 0);
        Ok(FieldElement(undigits(&out, p)))
    }

    pub fn div(&self, x: FieldElement, y: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(x, self.inv(y)?))
    }

    /// Discrete logarithm to the base [`Field::primitive_element`].
    pub fn log(&self, x: FieldElement) -> Option<u32> {
        (x.0 != 0).then(|| self.0.log[x.0 as usize])
    }

    pub fn multiplicative_order(&self, x: FieldElement) -> Option<u32> {
        let l = self.log(x)?;
        let order = self.0.size - 1;
        Some(order / gcd(l, order))
    }

    /// Tr(x) = x + x^p + ... + x^{p^{n-1}}, returned as an integer in [0, p).
    pub fn trace(&self, x: FieldElement) -> u32 {
        self.0.trace[x.0 as usize]
    }

    /// A square root of `x`, if one exists.
    ///
    /// In characteristic 2 the root is unique. Otherwise the root with the
    /// smaller index is returned.
    pub fn sqrt(&self, x: FieldElement) -> Option<FieldElement> {
        if x.0 == 0 {
            return Some(FieldElement::ZERO);
        }
        if self.0.p == 2 {
            return Some(self.pow(x, 1u64 << (self.0.n - 1)));
        }
        let l = self.0.log[x.0 as usize];
        if l % 2 == 1 {
            return None;
        }
        let r = FieldElement(self.0.exp[(l / 2) as usize]);
        Some(r.min(self.neg(r)))
    }

    pub fn try_add(&self, x: FieldElement, y: FieldElement) -> Result<FieldElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.add(x, y))
    }

    pub fn try_mul(&self, x: FieldElement, y: FieldElement) -> Result<FieldElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.mul(x, y))
    }

    pub fn try_inv(&self, x: FieldElement) -> Result<FieldElement> {
        self.check(x)?;
        self.inv(x)
    }

    /// Returns an error unless both handles describe the same field.
    pub fn ensure_same(&self, other: &Field) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::FieldMismatch {
                left: self.size(),
                right: other.size(),
            })
        }
    }

    /// Human-readable polynomial form of an element, e.g. `x + 1`.
    pub fn format_element(&self, x: FieldElement) -> String {
        if x.0 == 0 {
            return "0".to_string();
        }
        let c = self.coeffs(x);
        let mut terms = Vec::new();
        for (deg, &d) in c.iter().enumerate().rev() {
            if d == 0 {
                continue;
            }
            let coef = if d == 1 && deg > 0 {
                String::new()
            } else {
                d.to_string()
            };
            terms.push(match deg {
                0 => coef,
                1 => format!("{coef}x"),
                _ => format!("{coef}x^{deg}"),
            });
        }
        terms.join(" + ")
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// GF(N^2) together with an embedding of GF(N).
#[derive(Clone, Debug)]
pub struct QuadraticExtension {
    base: Field,
    ext: Field,
    image: Vec<FieldElement>,
    preimage: Vec<u32>,
}

impl QuadraticExtension {
    /// The embedding sends `x` to the smallest root of the base modulus in
    /// the extension.
    pub fn new(base: &Field) -> Result<QuadraticExtension> {
        let (p, n) = (base.p(), base.degree());
        checked_size(p, 2 * n).ok_or(Error::FieldTooLarge { p, n: 2 * n })?;
        let ext = Field::new(p, 2 * n)?;
        let modulus = base.modulus();
        let theta = ext
            .elements()
            .find(|&y| {
                let v = modulus.iter().rev().fold(FieldElement::ZERO, |acc, &c| {
                    ext.add(ext.mul(acc, y), ext.from_int(c as i64))
                });
                v.is_zero()
            })
            .expect("an irreducible of degree n splits in GF(p^{2n})");
        let powers: Vec<FieldElement> = (0..n).map(|i| ext.pow(theta, i as u64)).collect();
        let image: Vec<FieldElement> = base
            .elements()
            .map(|x| {
                base.coeffs(x)
                    .iter()
                    .zip(&powers)
                    .fold(FieldElement::ZERO, |acc, (&c, &t)| {
                        ext.add(acc, ext.mul(ext.from_int(c as i64), t))
                    })
            })
            .collect();
        let mut preimage = vec![u32::MAX; ext.size() as usize];
        for (i, y) in image.iter().enumerate() {
            preimage[y.index() as usize] = i as u32;
        }
        Ok(QuadraticExtension {
            base: base.clone(),
            ext,
            image,
            preimage,
        })
    }

    pub fn base(&self) -> &Field {
        &self.base
    }

    pub fn ext(&self) -> &Field {
        &self.ext
    }

    pub fn embed(&self, x: FieldElement) -> FieldElement {
        self.image[x.index() as usize]
    }

    /// The base element mapping to `y`, if `y` lies in the image.
    pub fn preimage(&self, y: FieldElement) -> Option<FieldElement> {
        match self.preimage[y.index() as usize] {
            u32::MAX => None,
            i => Some(FieldElement(i)),
        }
    }
}
