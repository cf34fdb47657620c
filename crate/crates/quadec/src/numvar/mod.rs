//! The invariant table 𝔫𝔳_{d′,n′}(Q) with certificates.
//!
//! 𝔫𝔳_{d′,n′} is the least number of variables that n′ independent
//! combinations of the forms depend on after restriction to some d′-dimensional
//! subspace. An upper bound l is certified by a [`FlagWitness`]: subspaces
//! U ⊆ H with dim H = d′, dim U = d′ − l, and an n′-dimensional coefficient
//! space S such that uᵀB_c h = 0 for u ∈ U, h ∈ H, c ∈ S (B_c = Σ cᵢHᵢ). Then
//! every mixed form restricted to H is constant along U, so it depends on at
//! most l coordinates of H.
//!
//! Lower bounds come from exact class solvers and from rigorous inequalities
//! (see [`bounds`]). Cells where the two sides do not meet keep an interval.

mod bounds;
mod exact;
pub mod pencil;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forms::{CoefficientSubspace, FormTuple};
use crate::linalg::{RationalMatrix, Subspace};

pub use exact::{as_ack, numvar_ack, numvar_diagonal, numvar_pair, numvar_single};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumvarError {
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("tuple is not diagonal")]
    NotDiagonal,
    #[error("tuple is not an ACK monomial system")]
    NotAck,
    #[error("tuple does not have exactly two forms")]
    NotPair,
    #[error("cell ({d_prime}, {n_prime}) is outside the table of a tuple with d = {d}, n = {n}")]
    OutOfRange { d_prime: usize, n_prime: usize, d: usize, n: usize },
}

/// Certificate for 𝔫𝔳_{d′,n′} ≤ d′ − dim U.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlagWitness {
    pub h: Subspace,
    pub u: Subspace,
    pub s: CoefficientSubspace,
}

impl FlagWitness {
    pub fn bound(&self) -> usize {
        self.h.dim() - self.u.dim()
    }

    /// Canonical bases for all three spaces.
    pub fn canonical(&self) -> Self {
        Self { h: self.h.canonical(), u: self.u.canonical(), s: CoefficientSubspace(self.s.canonical()) }
    }

    pub fn serialized(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// Checks a witness exactly and returns the bound it certifies.
pub fn verify_witness(q: &FormTuple, d_prime: usize, n_prime: usize, w: &FlagWitness) -> Result<usize, NumvarError> {
    let bad = |m: &str| Err(NumvarError::InvalidWitness(m.to_string()));
    if w.h.ambient() != q.d() || w.u.ambient() != q.d() {
        return bad("subspaces live in the wrong ambient dimension");
    }
    if w.s.ambient() != q.n() {
        return bad("coefficient space lives in the wrong dimension");
    }
    if w.h.dim() != d_prime {
        return bad("dim h differs from d'");
    }
    if w.s.dim() != n_prime {
        return bad("dim s differs from n'");
    }
    if !w.h.contains_subspace(&w.u) {
        return bad("u is not contained in h");
    }
    let h = w.h.basis_matrix().transpose();
    let ut = w.u.basis_matrix();
    for c in w.s.basis() {
        if !ut.mul(&q.combination(c)).mul(&h).is_zero() {
            return bad("a mixed block does not vanish");
        }
    }
    Ok(w.bound())
}

/// The space of coefficient vectors c with uᵀB_c h = 0 for all u ∈ U, h ∈ H.
pub fn admissible_coefficients(q: &FormTuple, u: &Subspace, h: &Subspace) -> Subspace {
    let n = q.n();
    let (ub, hb) = (u.basis(), h.basis());
    if ub.is_empty() {
        return Subspace::full(n);
    }
    let hu: Vec<Vec<Vec<crate::linalg::Rat>>> =
        (0..n).map(|i| ub.iter().map(|x| q.hessian(i).mul_vec(x)).collect()).collect();
    let mut rows = Vec::new();
    for a in 0..ub.len() {
        for y in hb {
            rows.push((0..n).map(|i| crate::linalg::dot(&hu[i][a], y)).collect::<Vec<_>>());
        }
    }
    crate::linalg::kernel(&RationalMatrix::from_rows(rows).expect("rectangular"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Level {
    Exact,
    WitnessUb,
    Probabilistic,
}

/// A table cell: an interval with provenance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifiedValue {
    pub lower: usize,
    pub upper: usize,
    pub level: Level,
    /// Route that produced the upper bound.
    pub upper_by: String,
    /// Route that produced the lower bound.
    pub lower_by: String,
    pub witness: Option<FlagWitness>,
}

impl CertifiedValue {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    /// The value when the interval is closed.
    pub fn value(&self) -> Option<usize> {
        self.is_exact().then_some(self.upper)
    }

    pub(crate) fn exact(value: usize, by: &str, witness: Option<FlagWitness>) -> Self {
        Self {
            lower: value,
            upper: value,
            level: Level::Exact,
            upper_by: by.to_string(),
            lower_by: by.to_string(),
            witness,
        }
    }
}

/// Work limits for the randomized part of the search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Random flags drawn from the structured vector pool.
    pub random_flags: usize,
    /// Numeric local-search restarts per open cell.
    pub restarts: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { random_flags: 10_000, restarts: 100 }
    }
}

impl SearchBudget {
    /// Structured routes only.
    pub fn exact_only() -> Self {
        Self { random_flags: 0, restarts: 0 }
    }

    pub fn is_exact_only(&self) -> bool {
        self.random_flags == 0 && self.restarts == 0
    }
}

/// Search settings: budget plus seed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub budget: SearchBudget,
    pub seed: u64,
}

/// 𝔫𝔳_{d′,n′} for 0 ≤ d′ ≤ d, 0 ≤ n′ ≤ n.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumvarTable {
    pub tuple: FormTuple,
    /// `entries[d′][n′]`.
    pub entries: Vec<Vec<CertifiedValue>>,
}

impl NumvarTable {
    pub fn d(&self) -> usize {
        self.tuple.d()
    }

    pub fn n(&self) -> usize {
        self.tuple.n()
    }

    pub fn get(&self, d_prime: usize, n_prime: usize) -> &CertifiedValue {
        &self.entries[d_prime][n_prime]
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().flatten().all(CertifiedValue::is_exact)
    }

    /// Row d′ as closed values (`None` for open cells).
    pub fn row(&self, d_prime: usize) -> Vec<Option<usize>> {
        self.entries[d_prime].iter().map(CertifiedValue::value).collect()
    }

    pub fn uppers(&self) -> Vec<Vec<usize>> {
        self.entries.iter().map(|r| r.iter().map(|c| c.upper).collect()).collect()
    }

    pub fn lowers(&self) -> Vec<Vec<usize>> {
        self.entries.iter().map(|r| r.iter().map(|c| c.lower).collect()).collect()
    }

    /// Table with given exact values and no certificates (for formula-level
    /// work, e.g. values quoted from a reference).
    pub fn from_values(tuple: FormTuple, values: &[Vec<usize>]) -> Self {
        let entries =
            values.iter().map(|r| r.iter().map(|&v| CertifiedValue::exact(v, "given", None)).collect()).collect();
        Self { tuple, entries }
    }

    /// Re-verifies every witness and the table invariants.
    pub fn check(&self) -> Result<(), String> {
        let (d, n) = (self.d(), self.n());
        if self.entries.len() != d + 1 || self.entries.iter().any(|r| r.len() != n + 1) {
            return Err("table has the wrong shape".into());
        }
        for dp in 0..=d {
            for np in 0..=n {
                let c = self.get(dp, np);
                if c.lower > c.upper || c.upper > dp {
                    return Err(format!("cell ({dp},{np}) has an invalid interval"));
                }
                if c.level == Level::Exact && c.lower != c.upper {
                    return Err(format!("cell ({dp},{np}) is EXACT but open"));
                }
                if np == 0 && c.upper != 0 {
                    return Err(format!("cell ({dp},0) is not zero"));
                }
                if let Some(w) = &c.witness {
                    let l = verify_witness(&self.tuple, dp, np, w).map_err(|e| e.to_string())?;
                    if l != c.upper {
                        return Err(format!("cell ({dp},{np}) witness certifies {l}, not {}", c.upper));
                    }
                }
                if dp > 0 && self.get(dp - 1, np).upper > c.upper {
                    return Err(format!("upper bounds not monotone in d' at ({dp},{np})"));
                }
                if np > 0 && self.get(dp, np - 1).upper > c.upper {
                    return Err(format!("upper bounds not monotone in n' at ({dp},{np})"));
                }
                if dp > 0 && self.get(dp - 1, np).lower > c.lower {
                    return Err(format!("lower bounds not monotone in d' at ({dp},{np})"));
                }
                if np > 0 && self.get(dp, np - 1).lower > c.lower {
                    return Err(format!("lower bounds not monotone in n' at ({dp},{np})"));
                }
            }
        }
        Ok(())
    }
}

/// Fills the whole table.
pub fn numvar_table(q: &FormTuple, config: &SearchConfig) -> NumvarTable {
    search::build_table(q, config)
}

/// One cell of [`numvar_table`].
pub fn numvar(
    q: &FormTuple,
    d_prime: usize,
    n_prime: usize,
    config: &SearchConfig,
) -> Result<CertifiedValue, NumvarError> {
    if d_prime > q.d() || n_prime > q.n() {
        return Err(NumvarError::OutOfRange { d_prime, n_prime, d: q.d(), n: q.n() });
    }
    Ok(numvar_table(q, config).get(d_prime, n_prime).clone())
}
