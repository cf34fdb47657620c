//! Tuples of quadratic forms.
//!
//! A form is stored by its Hessian, so Q(ξ) = ½ ξᵀHξ: the diagonal entry
//! `2a` encodes `a ξᵢ²` and the off-diagonal pair `a` encodes `a ξᵢξⱼ`.
//!
//! A tuple depends on at most `l` variables after a linear change of
//! coordinates exactly when its common Hessian kernel has dimension at least
//! `d - l` (quadratic forms have no linear part, so "independent of ξⱼ"
//! means eⱼ lies in every kernel). [`FormTuple::minimal_variables`] is
//! therefore plain linear algebra.

use std::ops::Deref;

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{kernel, rank_exact, rat, LinalgError, Rat, RationalMatrix, Subspace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormError {
    #[error("a tuple needs d >= 1 and n >= 1")]
    Empty,
    #[error("form {index} has a non-symmetric Hessian")]
    NotSymmetric { index: usize },
    #[error("form {index} has dimension {found}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("declared n = {declared} but {found} Hessians were given")]
    CountMismatch { declared: usize, found: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One quadratic form, Q(ξ) = ½ ξᵀHξ.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticForm {
    hessian: RationalMatrix,
}

impl QuadraticForm {
    pub fn new(hessian: RationalMatrix) -> Result<Self, FormError> {
        if !hessian.is_symmetric() {
            return Err(FormError::NotSymmetric { index: 0 });
        }
        Ok(Self { hessian })
    }

    pub fn zero(d: usize) -> Self {
        Self { hessian: RationalMatrix::zeros(d, d) }
    }

    /// Form with the given monomial coefficients: `a ξᵢξⱼ` for each
    /// `(i, j, a)` (0-based, `i == j` for squares). Repeated terms add up.
    pub fn from_terms(d: usize, terms: &[(usize, usize, Rat)]) -> Self {
        let mut h = RationalMatrix::zeros(d, d);
        for (i, j, a) in terms {
            let (i, j) = (*i.min(j), *i.max(j));
            if i == j {
                let v = h.get(i, i) + a * rat(2);
                h.set(i, i, v);
            } else {
                let v = h.get(i, j) + a;
                h.set(i, j, v.clone());
                h.set(j, i, v);
            }
        }
        Self { hessian: h }
    }

    pub fn dim(&self) -> usize {
        self.hessian.rows()
    }

    pub fn hessian(&self) -> &RationalMatrix {
        &self.hessian
    }

    /// Coefficient of ξᵢξⱼ (i ≤ j) in the polynomial.
    pub fn coefficient(&self, i: usize, j: usize) -> Rat {
        if i == j {
            self.hessian.get(i, i) / rat(2)
        } else {
            self.hessian.get(i, j).clone()
        }
    }

    pub fn evaluate(&self, x: &[Rat]) -> Rat {
        crate::linalg::dot(x, &self.hessian.mul_vec(x)) / rat(2)
    }

    pub fn is_zero(&self) -> bool {
        self.hessian.is_zero()
    }
}

/// An n-tuple of quadratic forms in d variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FormTuple {
    d: usize,
    forms: Vec<QuadraticForm>,
}

impl FormTuple {
    pub fn new(d: usize, forms: Vec<QuadraticForm>) -> Result<Self, FormError> {
        if d == 0 || forms.is_empty() {
            return Err(FormError::Empty);
        }
        for (index, f) in forms.iter().enumerate() {
            if f.dim() != d {
                return Err(FormError::DimensionMismatch { index, expected: d, found: f.dim() });
            }
            if !f.hessian.is_symmetric() {
                return Err(FormError::NotSymmetric { index });
            }
        }
        Ok(Self { d, forms })
    }

    pub fn from_hessians(d: usize, hessians: Vec<RationalMatrix>) -> Result<Self, FormError> {
        for (index, h) in hessians.iter().enumerate() {
            if h.rows() != d || h.cols() != d {
                return Err(FormError::DimensionMismatch { index, expected: d, found: h.rows() });
            }
            if !h.is_symmetric() {
                return Err(FormError::NotSymmetric { index });
            }
        }
        Self::new(d, hessians.into_iter().map(|hessian| QuadraticForm { hessian }).collect())
    }

    /// Each inner list holds `(i, j, a)` monomial terms of one form.
    pub fn from_terms(d: usize, forms: &[Vec<(usize, usize, i64)>]) -> Result<Self, FormError> {
        Self::new(
            d,
            forms
                .iter()
                .map(|t| QuadraticForm::from_terms(d, &t.iter().map(|&(i, j, a)| (i, j, rat(a))).collect::<Vec<_>>()))
                .collect(),
        )
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.forms.len()
    }

    pub fn forms(&self) -> &[QuadraticForm] {
        &self.forms
    }

    pub fn hessian(&self, i: usize) -> &RationalMatrix {
        &self.forms[i].hessian
    }

    /// B_c = Σ cᵢ Hᵢ.
    pub fn combination(&self, c: &[Rat]) -> RationalMatrix {
        assert_eq!(c.len(), self.n());
        let mut b = RationalMatrix::zeros(self.d, self.d);
        for (ci, f) in c.iter().zip(&self.forms) {
            if !ci.is_zero() {
                b = b.add(&f.hessian.scale(ci));
            }
        }
        b
    }

    /// Number of coordinates some form depends on.
    pub fn nv_count(&self) -> usize {
        (0..self.d).filter(|&j| self.forms.iter().any(|f| f.hessian.row(j).iter().any(|x| !x.is_zero()))).count()
    }

    /// Forms ξ' ↦ Q(Bξ') for the basis matrix B of `h` (Hessians BᵀHB).
    pub fn restrict(&self, h: &Subspace) -> Result<FormTuple, FormError> {
        if h.ambient() != self.d {
            return Err(LinalgError::DimensionMismatch { expected: self.d, found: h.ambient() }.into());
        }
        let bt = h.basis_matrix();
        let b = bt.transpose();
        Ok(FormTuple {
            d: h.dim(),
            forms: self.forms.iter().map(|f| QuadraticForm { hessian: bt.mul(&f.hessian).mul(&b) }).collect(),
        })
    }

    /// Forms Σ cᵢQᵢ, one per basis vector c of `s`.
    pub fn mix(&self, s: &CoefficientSubspace) -> Result<FormTuple, FormError> {
        if s.ambient() != self.n() {
            return Err(LinalgError::DimensionMismatch { expected: self.n(), found: s.ambient() }.into());
        }
        Ok(FormTuple {
            d: self.d,
            forms: s.basis().iter().map(|c| QuadraticForm { hessian: self.combination(c) }).collect(),
        })
    }

    /// Mixing by an arbitrary n' × n matrix (rows are coefficient vectors).
    pub fn mix_matrix(&self, m: &RationalMatrix) -> FormTuple {
        FormTuple {
            d: self.d,
            forms: m.to_rows().iter().map(|c| QuadraticForm { hessian: self.combination(c) }).collect(),
        }
    }

    /// q ∘ M: ξ ↦ Q(Mξ), Hessians MᵀHM.
    pub fn compose(&self, m: &RationalMatrix) -> FormTuple {
        let mt = m.transpose();
        FormTuple {
            d: m.cols(),
            forms: self.forms.iter().map(|f| QuadraticForm { hessian: mt.mul(&f.hessian).mul(m) }).collect(),
        }
    }

    /// ∩ᵢ ker Hᵢ.
    pub fn common_radical(&self) -> Subspace {
        let mut stacked = RationalMatrix::zeros(0, self.d);
        for f in &self.forms {
            stacked = stacked.vstack(&f.hessian);
        }
        kernel(&stacked)
    }

    /// d − dim of the common radical; the least NV over linear changes of
    /// variables.
    pub fn minimal_variables(&self) -> usize {
        self.d - self.common_radical().dim()
    }

    /// n × d(d+1)/2 matrix of upper-triangular Hessian entries.
    pub fn span_matrix(&self) -> RationalMatrix {
        let d = self.d;
        RationalMatrix::from_fn(self.n(), d * (d + 1) / 2, |i, k| {
            let (a, b) = upper_index(d, k);
            self.forms[i].hessian.get(a, b).clone()
        })
    }

    /// Dimension of the space spanned by the forms.
    pub fn span_rank(&self) -> usize {
        rank_exact(&self.span_matrix())
    }

    /// Coefficient vectors c with Σ cᵢQᵢ = 0.
    pub fn coefficient_kernel(&self) -> Subspace {
        kernel(&self.span_matrix().transpose())
    }

    pub fn is_linearly_independent(&self) -> bool {
        self.span_rank() == self.n()
    }

    pub fn is_diagonal(&self) -> bool {
        self.forms.iter().all(|f| f.hessian.is_diagonal())
    }

    /// Hessians with integer entries and even diagonal, i.e. integer
    /// monomial coefficients.
    pub fn has_integer_coefficients(&self) -> bool {
        self.forms
            .iter()
            .all(|f| (0..self.d).all(|i| (0..self.d).all(|j| f.coefficient(i.min(j), i.max(j)).is_integer())))
    }

    /// Replaces form `i` by zero.
    pub fn with_zero_form(&self, i: usize) -> FormTuple {
        let mut t = self.clone();
        t.forms[i] = QuadraticForm::zero(self.d);
        t
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// k-th upper-triangular position (row-major, i ≤ j).
pub fn upper_index(d: usize, mut k: usize) -> (usize, usize) {
    for i in 0..d {
        let len = d - i;
        if k < len {
            return (i, i + k);
        }
        k -= len;
    }
    panic!("index out of range")
}

#[derive(Serialize, Deserialize)]
struct TupleRepr {
    d: usize,
    n: usize,
    hessians: Vec<RationalMatrix>,
}

impl Serialize for FormTuple {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TupleRepr { d: self.d, n: self.n(), hessians: self.forms.iter().map(|f| f.hessian.clone()).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FormTuple {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = TupleRepr::deserialize(d)?;
        if r.n != r.hessians.len() {
            return Err(serde::de::Error::custom(FormError::CountMismatch { declared: r.n, found: r.hessians.len() }));
        }
        FormTuple::from_hessians(r.d, r.hessians).map_err(serde::de::Error::custom)
    }
}

/// A subspace S ⊆ Rⁿ of coefficient vectors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefficientSubspace(pub Subspace);

impl CoefficientSubspace {
    pub fn full(n: usize) -> Self {
        Self(Subspace::full(n))
    }

    pub fn span(n: usize, vectors: &[Vec<Rat>]) -> Self {
        Self(Subspace::span(n, vectors))
    }
}

impl Deref for CoefficientSubspace {
    type Target = Subspace;
    fn deref(&self) -> &Subspace {
        &self.0
    }
}

/// Small constructors for tuples that come up repeatedly.
pub mod catalog {
    use super::*;

    /// ξ₁² + … + ξ_d².
    pub fn paraboloid(d: usize) -> FormTuple {
        FormTuple::from_terms(d, &[(0..d).map(|i| (i, i, 1)).collect()]).expect("valid")
    }

    /// All monomials ξᵢξⱼ (i ≤ j) in lexicographic order.
    pub fn parsell_vinogradov(d: usize) -> FormTuple {
        let forms: Vec<Vec<(usize, usize, i64)>> = (0..d).flat_map(|i| (i..d).map(move |j| vec![(i, j, 1)])).collect();
        FormTuple::from_terms(d, &forms).expect("valid")
    }

    /// Monomials ξᵢξⱼ (i < j) and ξⱼ² for `k[j] >= 2`, ordered by (i, j).
    /// `k` is the exponent-bound vector (entries 1 or 2 matter).
    pub fn ack(k: &[u32]) -> Option<FormTuple> {
        let d = k.len();
        let forms: Vec<Vec<(usize, usize, i64)>> = (0..d)
            .flat_map(|i| (i..d).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j || k[i] >= 2)
            .map(|(i, j)| vec![(i, j, 1)])
            .collect();
        if d == 0 || forms.is_empty() {
            return None;
        }
        FormTuple::from_terms(d, &forms).ok()
    }

    /// (ξ₁ξ₂, ξ₁ξ₃, ξ₂ξ₃, ξ₃²).
    pub fn q1() -> FormTuple {
        ack(&[1, 1, 2]).expect("valid")
    }

    /// (ξ₁², ξ₂² + ξ₁ξ₃).
    pub fn q2() -> FormTuple {
        FormTuple::from_terms(3, &[vec![(0, 0, 1)], vec![(1, 1, 1), (0, 2, 1)]]).expect("valid")
    }

    /// (ξ₁² + ξ₂ξ₄, ξ₃ξ₄).
    pub fn q_infinity_example() -> FormTuple {
        FormTuple::from_terms(4, &[vec![(0, 0, 1), (1, 3, 1)], vec![(2, 3, 1)]]).expect("valid")
    }

    /// Diagonal tuple Qᵢ = Σⱼ a[i][j] ξⱼ².
    pub fn diagonal(a: &[Vec<i64>]) -> FormTuple {
        let d = a[0].len();
        FormTuple::from_terms(
            d,
            &a.iter().map(|row| row.iter().enumerate().map(|(j, &x)| (j, j, x)).collect()).collect::<Vec<_>>(),
        )
        .expect("valid")
    }
}

/// Identity-like helper used by tests and the search: unit coefficient
/// vector.
pub fn unit_coefficients(n: usize, i: usize) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); n];
    v[i] = Rat::one();
    v
}
