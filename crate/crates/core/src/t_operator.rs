// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

//! The order-(N+1) unitary `T` and its symplectic action on Pauli labels.
//!
//! `T` is characterized by `X_a Z_b T = ω_p^{f(a,b)} T X_{aα+bβ} Z_{aβ+bγ}`
//! with `αγ - β² = 1`, so conjugating by `T` maps the label `(a, b)` to
//! `M·(a, b)` where `M = [[α, β], [β, γ]]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement, QuadraticExtension};
use crate::matrix::ComplexMatrix;
use crate::pauli::{pauli_matrix, roots_of_unity, ErrorLabel, PauliLabel, Phase};

/// Largest N for which `T` is built as a dense matrix.
pub const MAX_OPERATOR_DIM: u32 = 16;

/// Tolerance for the operator identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Entries of the symmetric matrix `M(T) = [[α, β], [β, γ]]` together with
/// the coefficient `c = -(α + γ)` of its characteristic polynomial
/// `λ² + cλ + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymplecticParams {
    pub alpha: FieldElement,
    pub beta: FieldElement,
    pub gamma: FieldElement,
    pub c: FieldElement,
}

impl SymplecticParams {
    /// `M·(a, b) = (aα + bβ, aβ + bγ)`.
    pub fn apply(&self, field: &Field, l: ErrorLabel) -> ErrorLabel {
        ErrorLabel {
            a: field.add(field.mul(l.a, self.alpha), field.mul(l.b, self.beta)),
            b: field.add(field.mul(l.a, self.beta), field.mul(l.b, self.gamma)),
        }
    }

    /// `M^{-1}·(a, b) = (aγ - bβ, -aβ + bα)`, using `det M = 1`.
    pub fn apply_inverse(&self, field: &Field, l: ErrorLabel) -> ErrorLabel {
        ErrorLabel {
            a: field.sub(field.mul(l.a, self.gamma), field.mul(l.b, self.beta)),
            b: field.sub(field.mul(l.b, self.alpha), field.mul(l.a, self.beta)),
        }
    }

    pub fn determinant(&self, field: &Field) -> FieldElement {
        field.sub(
            field.mul(self.alpha, self.gamma),
            field.mul(self.beta, self.beta),
        )
    }
}

fn has_root_in(field: &Field, c: FieldElement) -> bool {
    field
        .elements()
        .any(|x| field.add(field.add(field.square(x), field.mul(c, x)), field.one()).is_zero())
}

/// Smallest root in GF(N²) of `λ² + cλ + 1`.
fn extension_root(ext: &QuadraticExtension, c: FieldElement) -> Option<FieldElement> {
    let e = ext.ext();
    let c = ext.embed(c);
    e.elements()
        .find(|&x| e.add(e.add(e.square(x), e.mul(c, x)), e.one()).is_zero())
}

/// Smallest `c` for which `λ² + cλ + 1` is irreducible over GF(N) and its
/// roots have multiplicative order exactly `N + 1`.
pub fn find_char_poly(field: &Field) -> Result<FieldElement> {
    let ext = QuadraticExtension::new(field)?;
    let target = field.size() + 1;
    field
        .elements()
        .filter(|&c| !has_root_in(field, c))
        .find(|&c| {
            extension_root(&ext, c).and_then(|xi| ext.ext().multiplicative_order(xi))
                == Some(target)
        })
        .ok_or_else(|| Error::InvariantViolation {
            identity: "existence of an order N+1 characteristic polynomial".into(),
            residual: f64::NAN,
        })
}

/// Picks `(α, β, γ)` with `α + γ = -c` and `αγ - β² = 1`.
///
/// For `p = 2` or `p ≡ 1 (mod 4)`: `α = 0`, `β = √-1`, `γ = -c`.
/// Otherwise `α = 1`, `γ = -c - 1` and `β = ξ^{1/2} - ξ^{-1/2}` for a root
/// `ξ` of the characteristic polynomial, computed in GF(N²); of the two
/// signs the smaller element is kept.
pub fn choose_m(field: &Field, c: FieldElement) -> Result<SymplecticParams> {
    let p = field.p();
    let params = if p == 2 || p % 4 == 1 {
        let beta = field
            .sqrt(field.neg(field.one()))
            .ok_or_else(|| Error::InvariantViolation {
                identity: "existence of sqrt(-1)".into(),
                residual: f64::NAN,
            })?;
        SymplecticParams {
            alpha: field.zero(),
            beta,
            gamma: field.neg(c),
            c,
        }
    } else {
        let ext = QuadraticExtension::new(field)?;
        let e = ext.ext();
        let bad = |what: &str| Error::InvariantViolation {
            identity: what.to_string(),
            residual: f64::NAN,
        };
        let xi = extension_root(&ext, c).ok_or_else(|| bad("root of the characteristic polynomial"))?;
        let s = e.sqrt(xi).ok_or_else(|| bad("square root of xi"))?;
        let diff = e.sub(s, e.inv(s)?);
        let beta = [diff, e.neg(diff)]
            .into_iter()
            .filter_map(|y| ext.preimage(y))
            .min()
            .ok_or_else(|| bad("beta lies in GF(N)"))?;
        SymplecticParams {
            alpha: field.one(),
            beta,
            gamma: field.sub(field.neg(c), field.one()),
            c,
        }
    };
    if params.determinant(field) != field.one() {
        return Err(Error::InvariantViolation {
            identity: "alpha*gamma - beta^2 = 1".into(),
            residual: 1.0,
        });
    }
    Ok(params)
}

/// The exponent `f(a, b)` in `X_a Z_b T = ω_p^{f(a,b)} T X_{a'} Z_{b'}`.
///
/// For odd `p`: `f = Tr(β(a²α + b²γ))/2 + Tr(abβ²)` with the half read as
/// `(p + 1)/2 mod p`.
///
/// For `p = 2` the half-trace is lifted coordinatewise: writing
/// `a = Σ a_j g_j`, the value `Tr(αβa²)/2` becomes
/// `Σ_j a_j Tr(αβ g_j²)/2 + Tr(αβ Σ_{i>j} a_i a_j g_i g_j)`, and likewise
/// for `b`. Each `Tr(·)/2` contributes `ω_2^{1/2} = i` when the trace is 1.
pub fn phase_exponent_f(
    field: &Field,
    params: &SymplecticParams,
    a: FieldElement,
    b: FieldElement,
) -> Phase {
    let p = field.p();
    let SymplecticParams {
        alpha, beta, gamma, ..
    } = *params;
    let cross = field.trace(field.mul(field.mul(a, b), field.square(beta))) as i64;
    if p != 2 {
        let quad = field.mul(
            beta,
            field.add(
                field.mul(field.square(a), alpha),
                field.mul(field.square(b), gamma),
            ),
        );
        return Phase::from_halves(p, field.trace(quad) as i64).add(Phase::from_int(p, cross));
    }
    let (half, integral) = lifted_half_trace(field, alpha, beta, gamma, a, b);
    Phase::from_halves(2, half as i64 + 2 * (cross + integral as i64))
}

/// For `p = 2` returns `(Σ_j [x_j Tr(αβ g_j²) + y_j Tr(βγ g_j²)],
/// Tr(β Σ_{i>j} g_i g_j (x_i x_j α + y_i y_j γ)))` where `x_j, y_j` are the
/// basis coordinates of `x` and `y`.
fn lifted_half_trace(
    field: &Field,
    alpha: FieldElement,
    beta: FieldElement,
    gamma: FieldElement,
    x: FieldElement,
    y: FieldElement,
) -> (u32, u32) {
    let g = field.basis();
    let xc = field.coeffs(x);
    let yc = field.coeffs(y);
    let ab = field.mul(alpha, beta);
    let bg = field.mul(beta, gamma);
    let mut half = 0u32;
    for (j, &gj) in g.iter().enumerate() {
        let gj2 = field.square(gj);
        half += xc[j] * field.trace(field.mul(ab, gj2)) + yc[j] * field.trace(field.mul(bg, gj2));
    }
    let mut s = FieldElement::ZERO;
    for i in 0..g.len() {
        for j in 0..i {
            let term = field.add(
                field.mul(field.from_int((xc[i] * xc[j]) as i64), alpha),
                field.mul(field.from_int((yc[i] * yc[j]) as i64), gamma),
            );
            s = field.add(s, field.mul(field.mul(g[i], g[j]), term));
        }
    }
    (half, field.trace(field.mul(beta, s)))
}

/// Exponent of `ω_p` (as a [`Phase`]) of the coefficient `N·Λ_ab` of
/// `X_a Z_b` in `T`, with the global phase fixed to 1.
fn coefficient_phase(field: &Field, params: &SymplecticParams, a: FieldElement, b: FieldElement) -> Result<Phase> {
    let p = field.p();
    let SymplecticParams {
        alpha, beta, gamma, ..
    } = *params;
    let two = field.from_int(2);
    let one = field.one();
    let d = field.sub(field.sub(two, alpha), gamma);
    let d_inv = field.inv(d)?;
    let d2_inv = field.square(d_inv);
    let (a2, b2, ab) = (field.square(a), field.square(b), field.mul(a, b));
    let bb = field.square(beta);
    let (gm1, am1) = (field.sub(gamma, one), field.sub(alpha, one));

    let t1 = field.mul(field.mul(field.mul(bb, beta), gm1), a2);
    let inner = field.add(
        field.square(am1),
        field.mul(bb, field.sub(field.mul(two, alpha), one)),
    );
    let t2 = field.mul(field.mul(gm1, inner), ab);
    let t3 = field.mul(
        field.mul(beta, field.add(field.mul(field.mul(alpha, gamma), am1), gm1)),
        b2,
    );
    let phi1 = field.mul(d2_inv, field.add(field.sub(t1, t2), t3));

    if p == 2 {
        // Coordinates of ã and b̃.
        let at = field.mul(field.sub(field.mul(gm1, a), field.mul(beta, b)), d_inv);
        let bt = field.mul(field.sub(field.mul(am1, b), field.mul(beta, a)), d_inv);
        // In characteristic 2 the second phase polynomial equals
        // β(αã² + γb̃²), so its half-trace is lifted as in f.
        let (half, integral) = lifted_half_trace(field, alpha, beta, gamma, at, bt);
        let tr1 = (field.trace(phi1) + integral) % 2;
        return Ok(Phase::from_halves(2, 2 * tr1 as i64 - half as i64));
    }

    let x = field.add(field.add(a2, field.mul(field.mul(two, beta), ab)), b2);
    let phi2 = field.mul(
        field.mul(beta, d2_inv),
        field.add(
            field.mul(field.sub(field.add(alpha, gamma), field.mul(two, field.mul(alpha, gamma))), x),
            field.mul(field.mul(two, bb), field.add(field.mul(gamma, a2), field.mul(alpha, b2))),
        ),
    );
    Ok(Phase::from_int(p, field.trace(phi1) as i64).add(Phase::from_halves(p, -(field.trace(phi2) as i64))))
}

/// `M^k·(a, b)`; negative `k` applies the inverse. The phase is not tracked.
pub fn conjugate_label(field: &Field, params: &SymplecticParams, label: ErrorLabel, k: i64) -> ErrorLabel {
    let mut out = label;
    if k >= 0 {
        for _ in 0..k.rem_euclid(field.size() as i64 + 1) {
            out = params.apply(field, out);
        }
    } else {
        for _ in 0..(-k).rem_euclid(field.size() as i64 + 1) {
            out = params.apply_inverse(field, out);
        }
    }
    out
}

/// All powers `M^0, ..., M^N` as 2×2 matrices `[m00, m01, m10, m11]`.
pub fn m_powers(field: &Field, params: &SymplecticParams) -> Vec<[FieldElement; 4]> {
    let mut out = Vec::with_capacity(field.size() as usize + 1);
    let mut cur = [field.one(), field.zero(), field.zero(), field.one()];
    for _ in 0..=field.size() {
        out.push(cur);
        let r0 = params.apply(field, ErrorLabel::new(cur[0], cur[2]));
        let r1 = params.apply(field, ErrorLabel::new(cur[1], cur[3]));
        cur = [r0.a, r1.a, r0.b, r1.b];
    }
    out
}

/// Applies a 2×2 matrix from [`m_powers`] to a label.
pub fn apply_m(field: &Field, m: &[FieldElement; 4], l: ErrorLabel) -> ErrorLabel {
    ErrorLabel {
        a: field.add(field.mul(m[0], l.a), field.mul(m[1], l.b)),
        b: field.add(field.mul(m[2], l.a), field.mul(m[3], l.b)),
    }
}

/// Orbits of GF(N)² under `M`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivClassPartition {
    size: u32,
    classes: Vec<Vec<ErrorLabel>>,
    class_of: Vec<usize>,
}

impl EquivClassPartition {
    pub fn classes(&self) -> &[Vec<ErrorLabel>] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn field_size(&self) -> u32 {
        self.size
    }

    /// Index of the class containing `l`.
    pub fn class_of(&self, l: ErrorLabel) -> usize {
        self.class_of[l.index(self.size)]
    }

    /// Class index for every label in row-major order.
    pub fn class_table(&self) -> &[usize] {
        &self.class_of
    }
}

/// The orbits of `M`, each sorted, ordered by smallest member.
pub fn equiv_classes(field: &Field, params: &SymplecticParams) -> EquivClassPartition {
    let n = field.size();
    let total = (n * n) as usize;
    let mut seen = vec![false; total];
    let mut classes = Vec::new();
    for i in 0..total {
        if seen[i] {
            continue;
        }
        let start = ErrorLabel::from_index(field, i);
        let mut orbit = vec![start];
        seen[i] = true;
        let mut cur = params.apply(field, start);
        while cur != start {
            seen[cur.index(n)] = true;
            orbit.push(cur);
            cur = params.apply(field, cur);
        }
        orbit.sort();
        classes.push(orbit);
    }
    classes.sort_by_key(|c| c[0]);
    let mut class_of = vec![0; total];
    for (k, c) in classes.iter().enumerate() {
        for l in c {
            class_of[l.index(n)] = k;
        }
    }
    EquivClassPartition {
        size: n,
        classes,
        class_of,
    }
}

/// Powers of `T` whose standard-basis images are checked for mutual
/// unbiasedness: `0..=N` for `p = 2`, `0..=(N-1)/2` otherwise.
///
/// For odd `p`, `M^{(N+1)/2} = -I`, so `T^{(N+1)/2}` is a Pauli operator
/// times the parity map `|j⟩ → |-j⟩` and does not give a new basis.
pub fn mub_powers(field: &Field) -> Vec<u32> {
    let n = field.size();
    let top = if field.p() == 2 { n } else { (n - 1) / 2 };
    (0..=top).collect()
}

/// Residuals of the defining identities of a built `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub p: u32,
    pub n: u32,
    pub dim: u32,
    /// max |T†T - I|.
    pub unitarity_residual: f64,
    /// max over (a, b) of | |Λ_ab| - 1/N |.
    pub coefficient_residual: f64,
    /// max over (a, b) of |X_a Z_b T - ω^f T X_a' Z_b'|.
    pub conjugation_residual: f64,
    /// Smallest k ≥ 1 with T^k proportional to the identity.
    pub order: Option<u32>,
    /// max |T^{N+1} - s·I| for the best scalar s.
    pub order_residual: f64,
    pub mub_powers: Vec<u32>,
    /// max | |⟨k'|T^{-i} T^j|k⟩|² - 1/N | over the checked powers.
    pub mub_residual: f64,
    pub unitary: bool,
    pub conjugation: bool,
    pub order_ok: bool,
    pub mub: bool,
    /// How half-integral phase exponents are resolved.
    pub half_phase_rule: String,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.unitary && self.conjugation && self.order_ok && self.mub
    }

    fn first_failure(&self) -> Option<(&'static str, f64)> {
        if !self.unitary {
            return Some(("unitarity T^dagger T = I", self.unitarity_residual.max(self.coefficient_residual)));
        }
        if !self.conjugation {
            return Some(("conjugation X_a Z_b T = w^f(a,b) T X_a' Z_b'", self.conjugation_residual));
        }
        if !self.order_ok {
            return Some(("order of T up to phase is N+1", self.order_residual));
        }
        if !self.mub {
            return Some(("mutual unbiasedness of T^k bases", self.mub_residual));
        }
        None
    }
}

/// A verified `T` for GF(N).
#[derive(Clone, Debug)]
pub struct TOperator {
    field: Field,
    params: SymplecticParams,
    matrix: ComplexMatrix,
    coefficients: Vec<Phase>,
    phase_f: Vec<Phase>,
    report: VerificationReport,
}

impl TOperator {
    /// Builds `T` with the default parameters for `field`.
    pub fn new(field: &Field) -> Result<TOperator> {
        if field.size() > MAX_OPERATOR_DIM {
            return Err(Error::OperatorTooLarge(field.size()));
        }
        let c = find_char_poly(field)?;
        let params = choose_m(field, c)?;
        Self::build(field, params)
    }

    /// Builds and verifies `T` for the given parameters. A `T` failing any
    /// identity is never returned.
    pub fn build(field: &Field, params: SymplecticParams) -> Result<TOperator> {
        let n = field.size();
        if n > MAX_OPERATOR_DIM {
            return Err(Error::OperatorTooLarge(n));
        }
        for x in [params.alpha, params.beta, params.gamma, params.c] {
            field.check(x)?;
        }
        if params.determinant(field) != field.one() {
            return Err(Error::InvariantViolation {
                identity: "alpha*gamma - beta^2 = 1".into(),
                residual: 1.0,
            });
        }
        let dim = n as usize;
        let roots = roots_of_unity(field.p());
        let scale = 1.0 / n as f64;
        let mut coefficients = Vec::with_capacity(dim * dim);
        let mut matrix = ComplexMatrix::zeros(dim);
        for a in field.elements() {
            for b in field.elements() {
                let ph = coefficient_phase(field, &params, a, b)?;
                coefficients.push(ph);
                let lam = ph.to_complex() * scale;
                for j in field.elements() {
                    let row = field.add(a, j).index() as usize;
                    let tr = field.trace(field.mul(b, j)) as usize;
                    matrix[(row, j.index() as usize)] += lam * roots[tr];
                }
            }
        }
        let phase_f = field
            .elements()
            .flat_map(|a| field.elements().map(move |b| (a, b)))
            .map(|(a, b)| phase_exponent_f(field, &params, a, b))
            .collect();
        let mut t = TOperator {
            field: field.clone(),
            params,
            matrix,
            coefficients,
            phase_f,
            report: VerificationReport {
                p: field.p(),
                n: field.degree(),
                dim: n,
                unitarity_residual: f64::NAN,
                coefficient_residual: f64::NAN,
                conjugation_residual: f64::NAN,
                order: None,
                order_residual: f64::NAN,
                mub_powers: Vec::new(),
                mub_residual: f64::NAN,
                unitary: false,
                conjugation: false,
                order_ok: false,
                mub: false,
                half_phase_rule: String::new(),
            },
        };
        t.report = t.compute_report()?;
        if let Some((identity, residual)) = t.report.first_failure() {
            return Err(Error::InvariantViolation {
                identity: identity.into(),
                residual,
            });
        }
        Ok(t)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn params(&self) -> &SymplecticParams {
        &self.params
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `f(a, b)` for the label `(a, b)`.
    pub fn phase_f(&self, a: FieldElement, b: FieldElement) -> Phase {
        self.phase_f[ErrorLabel::new(a, b).index(self.field.size())]
    }

    /// Phase of `N·Λ_ab`, the coefficient of `X_a Z_b` in `T`.
    pub fn coefficient_phase(&self, a: FieldElement, b: FieldElement) -> Phase {
        self.coefficients[ErrorLabel::new(a, b).index(self.field.size())]
    }

    pub fn report(&self) -> &VerificationReport {
        &self.report
    }

    /// Re-runs every identity check.
    pub fn verify(&self) -> Result<VerificationReport> {
        self.compute_report()
    }

    pub fn conjugate_label(&self, label: ErrorLabel, k: i64) -> ErrorLabel {
        conjugate_label(&self.field, &self.params, label, k)
    }

    pub fn equiv_classes(&self) -> EquivClassPartition {
        equiv_classes(&self.field, &self.params)
    }

    fn compute_report(&self) -> Result<VerificationReport> {
        let field = &self.field;
        let n = field.size();
        let dim = n as usize;
        let t = &self.matrix;
        let tol = IDENTITY_TOLERANCE;

        let unitarity_residual = t.unitarity_residual();
        let inv_n = 1.0 / n as f64;
        let mut coefficient_residual: f64 = 0.0;
        let mut conjugation_residual: f64 = 0.0;
        for a in field.elements() {
            for b in field.elements() {
                let xz = pauli_matrix(field, &PauliLabel::new(field, a, b))?;
                // Λ_ab = tr((X_a Z_b)† T) / N
                let lam = xz.hs_inner(t) * inv_n;
                coefficient_residual = coefficient_residual.max((lam.norm() - inv_n).abs());

                let image = self.params.apply(field, ErrorLabel::new(a, b));
                let rhs = pauli_matrix(
                    field,
                    &PauliLabel::new(field, image.a, image.b).with_phase(self.phase_f(a, b)),
                )?;
                conjugation_residual = conjugation_residual.max((&xz * t).max_abs_diff(&(t * &rhs)));
            }
        }

        let mut order = None;
        let mut power = ComplexMatrix::identity(dim);
        let mut order_residual = f64::NAN;
        for k in 1..=n + 1 {
            power = &power * t;
            let s = power[(0, 0)];
            let resid = power.max_abs_diff(&ComplexMatrix::identity(dim).scale(s));
            if k == n + 1 {
                order_residual = resid;
            }
            if order.is_none() && s.norm() > 0.5 && resid < tol {
                order = Some(k);
            }
        }

        let powers = mub_powers(field);
        let mats: Vec<ComplexMatrix> = {
            let mut v = Vec::with_capacity(powers.len());
            let mut cur = ComplexMatrix::identity(dim);
            for _ in &powers {
                v.push(cur.clone());
                cur = &cur * t;
            }
            v
        };
        let mut mub_residual: f64 = 0.0;
        for i in 0..mats.len() {
            let ai = mats[i].adjoint();
            for mj in &mats[i + 1..] {
                let g = &ai * mj;
                for z in g.as_slice() {
                    mub_residual = mub_residual.max((z.norm_sqr() - inv_n).abs());
                }
            }
        }

        Ok(VerificationReport {
            p: field.p(),
            n: field.degree(),
            dim: n,
            unitarity_residual,
            coefficient_residual,
            conjugation_residual,
            order,
            order_residual,
            mub_powers: powers,
            mub_residual,
            unitary: unitarity_residual < tol && coefficient_residual < tol,
            conjugation: conjugation_residual < tol,
            order_ok: order == Some(n + 1),
            mub: mub_residual < tol,
            half_phase_rule: if field.p() == 2 {
                "coordinatewise lift: Tr(x)/2 with x = sum of basis squares, cross terms integral".into()
            } else {
                "k/2 read as k*(p+1)/2 mod p".into()
            },
        })
    }
}

/// Normalizes a matrix so that its first nonzero entry is real and
/// positive. Used to compare operators up to a global phase.
pub fn normalize_global_phase(m: &ComplexMatrix) -> ComplexMatrix {
    let pivot = m
        .as_slice()
        .iter()
        .copied()
        .find(|z| z.norm() > 1e-9)
        .unwrap_or(Complex64::new(1.0, 0.0));
    m.scale(pivot.conj() / pivot.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIZES: [(u32, u32); 8] = [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (2, 4)];

    fn el(f: &Field, i: u32) -> FieldElement {
        f.element(i).unwrap()
    }

    #[test]
    fn char_poly_examples() {
        let expected = [(2, 1, 1), (3, 1, 0), (2, 2, 2), (5, 1, 4), (7, 1, 3), (2, 3, 2), (3, 2, 4), (2, 4, 2)];
        for (p, n, c) in expected {
            let f = Field::new(p, n).unwrap();
            assert_eq!(find_char_poly(&f).unwrap().index(), c, "N = {}", f.size());
        }
    }

    #[test]
    fn choose_m_examples() {
        let expected = [
            (2, 1, (0, 1, 1)),
            (3, 1, (1, 1, 2)),
            (2, 2, (0, 1, 2)),
            (5, 1, (0, 2, 1)),
            (7, 1, (1, 3, 3)),
            (2, 3, (0, 1, 2)),
            (3, 2, (1, 4, 7)),
            (2, 4, (0, 1, 2)),
        ];
        for (p, n, (a, b, g)) in expected {
            let f = Field::new(p, n).unwrap();
            let m = choose_m(&f, find_char_poly(&f).unwrap()).unwrap();
            assert_eq!((m.alpha.index(), m.beta.index(), m.gamma.index()), (a, b, g));
            assert_eq!(m.determinant(&f), f.one());
            assert_eq!(f.neg(f.add(m.alpha, m.gamma)), m.c);
        }
    }

    #[test]
    fn f_examples() {
        let f2 = Field::new(2, 1).unwrap();
        let t2 = TOperator::new(&f2).unwrap();
        assert!(t2.phase_f(f2.zero(), f2.zero()).is_zero());
        assert_eq!(t2.phase_f(f2.one(), f2.zero()).num_den(), (0, 1));
        assert_eq!(t2.phase_f(f2.zero(), f2.one()).num_den(), (1, 2));
        let f3 = Field::new(3, 1).unwrap();
        let t3 = TOperator::new(&f3).unwrap();
        for a in f3.elements() {
            for b in f3.elements() {
                assert_eq!(t3.phase_f(a, b).num_den().1, 1);
                assert!(t3.phase_f(a, b).num_den().0 < 3);
            }
        }
    }

    #[test]
    fn all_identities_hold() {
        for (p, n) in SIZES {
            let f = Field::new(p, n).unwrap();
            let t = TOperator::new(&f).unwrap();
            let r = t.report();
            assert!(r.passed(), "{r:?}");
            assert!(r.unitarity_residual < 1e-10);
            assert!(r.conjugation_residual < 1e-10);
            assert_eq!(r.order, Some(f.size() + 1));
            let expected_bases = if p == 2 { f.size() + 1 } else { f.size().div_ceil(2) };
            assert_eq!(r.mub_powers.len() as u32, expected_bases);
        }
    }

    #[test]
    fn odd_half_period_power_is_not_a_new_basis() {
        for (p, n) in [(3, 1), (5, 1), (7, 1), (3, 2)] {
            let f = Field::new(p, n).unwrap();
            let t = TOperator::new(&f).unwrap();
            let half = t.matrix().pow(f.size().div_ceil(2));
            // the image of |0⟩ is again a standard basis vector up to phase
            let col: Vec<f64> = (0..f.size() as usize).map(|r| half[(r, 0)].norm_sqr()).collect();
            assert!(col.iter().any(|&x| (x - 1.0).abs() < 1e-10));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let f = Field::new(2, 1).unwrap();
        let bad = SymplecticParams {
            alpha: f.one(),
            beta: f.one(),
            gamma: f.one(),
            c: f.zero(),
        };
        assert!(matches!(
            TOperator::build(&f, bad),
            Err(Error::InvariantViolation { .. })
        ));
        // valid determinant, but M = I has order 1
        let ident = SymplecticParams {
            alpha: f.one(),
            beta: f.zero(),
            gamma: f.one(),
            c: f.zero(),
        };
        assert!(matches!(
            TOperator::build(&f, ident),
            Err(Error::InvariantViolation { .. }) | Err(Error::DivisionByZero)
        ));
        assert!(matches!(
            TOperator::new(&Field::new(5, 2).unwrap()),
            Err(Error::OperatorTooLarge(25))
        ));
    }

    #[test]
    fn conjugation_examples() {
        let f2 = Field::new(2, 1).unwrap();
        let t2 = TOperator::new(&f2).unwrap();
        let l = ErrorLabel::new(f2.one(), f2.zero());
        assert_eq!(t2.conjugate_label(l, 0), l);
        assert_eq!(t2.conjugate_label(l, 1), ErrorLabel::new(f2.zero(), f2.one()));

        let f3 = Field::new(3, 1).unwrap();
        let t3 = TOperator::new(&f3).unwrap();
        for a in f3.elements() {
            for b in f3.elements() {
                let l = ErrorLabel::new(a, b);
                assert_eq!(t3.conjugate_label(l, 2), ErrorLabel::new(f3.neg(a), f3.neg(b)));
            }
        }
        for (p, n) in SIZES {
            let f = Field::new(p, n).unwrap();
            let t = TOperator::new(&f).unwrap();
            let powers = m_powers(&f, t.params());
            for i in 0..f.size() * f.size() {
                let l = ErrorLabel::from_index(&f, i as usize);
                assert_eq!(t.conjugate_label(l, f.size() as i64 + 1), l);
                assert_eq!(t.conjugate_label(t.conjugate_label(l, 3), -3), l);
                for (k, m) in powers.iter().enumerate() {
                    assert_eq!(apply_m(&f, m, l), t.conjugate_label(l, k as i64));
                }
            }
        }
    }

    #[test]
    fn class_examples() {
        let f2 = Field::new(2, 1).unwrap();
        let c2 = TOperator::new(&f2).unwrap().equiv_classes();
        let idx = |c: &[ErrorLabel]| c.iter().map(|l| (l.a.index(), l.b.index())).collect::<Vec<_>>();
        assert_eq!(idx(&c2.classes()[0]), vec![(0, 0)]);
        assert_eq!(idx(&c2.classes()[1]), vec![(0, 1), (1, 0), (1, 1)]);

        let f3 = Field::new(3, 1).unwrap();
        let c3 = TOperator::new(&f3).unwrap().equiv_classes();
        assert_eq!(c3.len(), 3);
        assert_eq!(idx(&c3.classes()[1]), vec![(0, 1), (0, 2), (1, 2), (2, 1)]);
        assert_eq!(idx(&c3.classes()[2]), vec![(1, 0), (1, 1), (2, 0), (2, 2)]);
    }

    #[test]
    fn class_structure() {
        for (p, n) in SIZES {
            let f = Field::new(p, n).unwrap();
            let part = TOperator::new(&f).unwrap().equiv_classes();
            assert_eq!(part.len() as u32, f.size());
            assert_eq!(part.classes()[0], vec![ErrorLabel::IDENTITY]);
            let mut doubles = 0;
            for c in &part.classes()[1..] {
                assert_eq!(c.len() as u32, f.size() + 1);
                let zero_a = c.iter().filter(|l| l.a.is_zero()).count();
                if p == 2 {
                    assert_eq!(zero_a, 1);
                } else if zero_a == 2 {
                    doubles += 1;
                }
            }
            if p != 2 {
                assert_eq!(doubles, (f.size() - 1) / 2);
            }
        }
    }

    fn table_one(f: &Field) -> ComplexMatrix {
        // Σ_ij coeff(i, j) X_i Z_j for the tabulated operators
        let dim = f.size() as usize;
        let mut m = ComplexMatrix::zeros(dim);
        let i_unit = Complex64::new(0.0, 1.0);
        for i in f.elements() {
            for j in f.elements() {
                let coeff = match f.size() {
                    2 => {
                        let v = match (i.index(), j.index()) {
                            (0, 0) | (1, 1) => Complex64::new(1.0, 0.0),
                            _ => -i_unit,
                        };
                        v / 2.0
                    }
                    3 => {
                        let e = 2 * (i.is_zero() as u32) + j.is_zero() as u32;
                        roots_of_unity(3)[(e % 3) as usize] / 3.0
                    }
                    4 => {
                        let s = f.add(i, j);
                        let x = -(f.trace(f.mul(el(f, 2), s)) as f64) / 2.0
                            + f.trace(s) as f64
                            + (s == f.one()) as u8 as f64;
                        Complex64::from_polar(1.0, std::f64::consts::PI * x) / 4.0
                    }
                    _ => unreachable!(),
                };
                let xz = pauli_matrix(f, &PauliLabel::new(f, i, j)).unwrap();
                m = m.add(&xz.scale(coeff));
            }
        }
        m
    }

    #[test]
    fn tabulated_operators_up_to_phase() {
        for (p, n) in [(2, 1), (3, 1), (2, 2)] {
            let f = Field::new(p, n).unwrap();
            let t = TOperator::new(&f).unwrap();
            let ours = normalize_global_phase(t.matrix());
            let theirs = normalize_global_phase(&table_one(&f));
            assert!(ours.max_abs_diff(&theirs) < 1e-10, "N = {}", f.size());
        }
    }
}
