//! Exact rational linear algebra.
//!
//! Everything here works over arbitrary precision rationals. Ranks use
//! fraction-free (Bareiss) elimination on integer rows; kernels and
//! canonical bases use reduced row echelon form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::forms::FormTuple;

/// Exact rational number.
pub type Rat = BigRational;

/// Integer as a rational.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `n / d` as a reduced rational. Panics if `d == 0`.
pub fn frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Renders `p` or `p/q`.
pub fn format_rat(x: &Rat) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p` or `p/q` (optional sign, no spaces).
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        None => s.parse::<BigInt>().ok().map(Rat::from_integer),
        Some((p, q)) => {
            let p = p.parse::<BigInt>().ok()?;
            let q = q.parse::<BigInt>().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(Rat::new(p, q))
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("basis vectors are linearly dependent")]
    DependentBasis,
    #[error("rows have different lengths")]
    Ragged,
}

/// Dense matrix of exact rationals, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rat::one();
        }
        m
    }

    /// Builds a matrix from rows. An empty row list gives a 0×`cols` matrix
    /// only through [`RationalMatrix::zeros`]; here it yields 0×0.
    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Ragged);
        }
        Ok(Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self, LinalgError> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rat) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rat>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// Matrix product. Panics on a shape mismatch.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in matrix product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len(), "shape mismatch in matrix-vector product");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * c).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j).is_zero()))
    }

    /// Submatrix on the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]).clone())
    }

    /// Stacks rows of `other` under `self`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Self { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn rank(&self) -> usize {
        rank_exact(self)
    }

    /// Determinant by Bareiss elimination. Panics if not square.
    pub fn det(&self) -> Rat {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Rat::one();
        }
        let (mut a, scale) = integer_rows(self);
        let mut sign = 1i32;
        let mut prev = BigInt::one();
        for k in 0..n {
            let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
                return Rat::zero();
            };
            if p != k {
                a.swap(p, k);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[k][k] * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
                    a[i][j] = v;
                }
                a[i][k] = BigInt::zero();
            }
            prev = a[k][k].clone();
        }
        let mut d = Rat::from_integer(a[n - 1][n - 1].clone()) / scale;
        if sign < 0 {
            d = -d;
        }
        d
    }

    /// Inverse by Gauss-Jordan, `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.to_rows();
        let mut inv = Self::identity(n).to_rows();
        for c in 0..n {
            let p = (c..n).find(|&i| !a[i][c].is_zero())?;
            a.swap(p, c);
            inv.swap(p, c);
            let piv = a[c][c].clone();
            for j in 0..n {
                a[c][j] = &a[c][j] / &piv;
                inv[c][j] = &inv[c][j] / &piv;
            }
            for i in 0..n {
                if i != c && !a[i][c].is_zero() {
                    let f = a[i][c].clone();
                    for j in 0..n {
                        let t = &f * &a[c][j];
                        a[i][j] -= t;
                        let t = &f * &inv[c][j];
                        inv[i][j] -= t;
                    }
                }
            }
        }
        Some(Self::from_rows(inv).expect("square"))
    }
}

impl Serialize for RationalMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = (0..self.rows).map(|i| self.row(i).iter().map(format_rat).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<String>> = Vec::deserialize(d)?;
        let parsed = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| parse_rat(x).ok_or_else(|| serde::de::Error::custom(format!("bad rational {x:?}"))))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        RationalMatrix::from_rows(parsed).map_err(serde::de::Error::custom)
    }
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    let mut s = Rat::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            s += x * y;
        }
    }
    s
}

/// Rows scaled to integers, plus the product of the scale factors.
fn integer_rows(m: &RationalMatrix) -> (Vec<Vec<BigInt>>, BigInt) {
    let mut total = BigInt::one();
    let rows = (0..m.rows)
        .map(|i| {
            let row = m.row(i);
            let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            total *= &l;
            row.iter().map(|x| (x * Rat::from_integer(l.clone())).to_integer()).collect()
        })
        .collect();
    (rows, total)
}

fn bareiss_rank(mut a: Vec<Vec<BigInt>>, cols: usize) -> usize {
    let rows = a.len();
    let mut r = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = (&a[r][c] * &a[i][j] - &a[i][c] * &a[r][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    r
}

/// Rank over the rationals via fraction-free elimination.
pub fn rank_exact(m: &RationalMatrix) -> usize {
    let (a, _) = integer_rows(m);
    bareiss_rank(a, m.cols)
}

/// Reduced row echelon form and its pivot columns.
pub fn rref(m: &RationalMatrix) -> (RationalMatrix, Vec<usize>) {
    let mut a = m.to_rows();
    let (rows, cols) = (m.rows, m.cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let piv = a[r][c].clone();
        if !piv.is_one() {
            for x in a[r].iter_mut().skip(c) {
                *x = &*x / &piv;
            }
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in c..cols {
                    if !a[r][j].is_zero() {
                        let t = &f * &a[r][j];
                        a[i][j] -= t;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let out =
        if rows == 0 { RationalMatrix::zeros(0, cols) } else { RationalMatrix::from_rows(a).expect("rectangular") };
    (out, pivots)
}

/// Right kernel with the standard basis attached to free columns.
pub fn kernel(m: &RationalMatrix) -> Subspace {
    let cols = m.cols;
    let (r, pivots) = rref(m);
    let mut basis = Vec::new();
    for f in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Rat::zero(); cols];
        v[f] = Rat::one();
        for (i, &p) in pivots.iter().enumerate() {
            v[p] = -r.get(i, f).clone();
        }
        basis.push(v);
    }
    Subspace { ambient: cols, basis }
}

/// Linear subspace of Q^ambient given by an independent basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<Vec<Rat>>,
}

impl Subspace {
    /// Checks lengths and independence; keeps the basis as given.
    pub fn new(ambient: usize, basis: Vec<Vec<Rat>>) -> Result<Self, LinalgError> {
        if let Some(v) = basis.iter().find(|v| v.len() != ambient) {
            return Err(LinalgError::DimensionMismatch { expected: ambient, found: v.len() });
        }
        let s = Self { ambient, basis };
        if s.basis.len() > ambient || rank_exact(&s.basis_matrix()) != s.basis.len() {
            return Err(LinalgError::DependentBasis);
        }
        Ok(s)
    }

    /// Span of arbitrary vectors, stored in canonical (RREF) form.
    pub fn span(ambient: usize, vectors: &[Vec<Rat>]) -> Self {
        if vectors.is_empty() {
            return Self::zero(ambient);
        }
        let m = RationalMatrix::from_rows(vectors.to_vec()).expect("equal lengths");
        assert_eq!(m.cols, ambient, "vector length differs from ambient dimension");
        let (r, piv) = rref(&m);
        Self { ambient, basis: (0..piv.len()).map(|i| r.row(i).to_vec()).collect() }
    }

    pub fn zero(ambient: usize) -> Self {
        Self { ambient, basis: Vec::new() }
    }

    pub fn full(ambient: usize) -> Self {
        Self::coordinate(ambient, &(0..ambient).collect::<Vec<_>>())
    }

    /// Span of the unit vectors with the given (0-based) indices.
    pub fn coordinate(ambient: usize, idx: &[usize]) -> Self {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        idx.dedup();
        Self { ambient, basis: idx.iter().map(|&i| unit(ambient, i)).collect() }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Rat>] {
        &self.basis
    }

    /// Basis vectors as rows (dim × ambient).
    pub fn basis_matrix(&self) -> RationalMatrix {
        if self.basis.is_empty() {
            RationalMatrix::zeros(0, self.ambient)
        } else {
            RationalMatrix::from_rows(self.basis.clone()).expect("rectangular")
        }
    }

    /// Same subspace with its canonical RREF basis.
    pub fn canonical(&self) -> Self {
        Self::span(self.ambient, &self.basis)
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        if v.iter().all(Zero::is_zero) {
            return true;
        }
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        rank_exact(&RationalMatrix::from_rows(rows).expect("rectangular")) == self.dim()
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.ambient == self.ambient && other.basis.iter().all(|v| self.contains(v))
    }

    pub fn same_as(&self, other: &Subspace) -> bool {
        self.dim() == other.dim() && self.contains_subspace(other)
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut v = self.basis.clone();
        v.extend(other.basis.iter().cloned());
        Self::span(self.ambient, &v)
    }

    /// Orthogonal complement for the standard dot product.
    pub fn orthogonal_complement(&self) -> Subspace {
        kernel(&self.basis_matrix())
    }

    pub fn intersection(&self, other: &Subspace) -> Subspace {
        self.orthogonal_complement().sum(&other.orthogonal_complement()).orthogonal_complement()
    }

    /// Extends the basis of `self` by vectors from `pool` until `target`
    /// dimension is reached. Vectors that add nothing are skipped.
    pub fn extend_from(&self, pool: &[Vec<Rat>], target: usize) -> Option<Subspace> {
        let mut basis = self.basis.clone();
        let mut r = basis.len();
        for v in pool {
            if r == target {
                break;
            }
            let mut trial = basis.clone();
            trial.push(v.clone());
            if rank_exact(&RationalMatrix::from_rows(trial.clone()).expect("rect")) > r {
                basis = trial;
                r += 1;
            }
        }
        (r == target).then_some(Subspace { ambient: self.ambient, basis })
    }

    /// Coordinates of `v` in this basis, if it lies in the subspace.
    pub fn coordinates_of(&self, v: &[Rat]) -> Option<Vec<Rat>> {
        // Solve basisᵀ x = v.
        let k = self.dim();
        let mut aug = RationalMatrix::zeros(self.ambient, k + 1);
        for (j, b) in self.basis.iter().enumerate() {
            for i in 0..self.ambient {
                aug.set(i, j, b[i].clone());
            }
        }
        for i in 0..self.ambient {
            aug.set(i, k, v[i].clone());
        }
        let (r, piv) = rref(&aug);
        if piv.contains(&k) {
            return None;
        }
        let mut x = vec![Rat::zero(); k];
        for (i, &p) in piv.iter().enumerate() {
            x[p] = r.get(i, k).clone();
        }
        Some(x)
    }
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            ambient: usize,
            basis: Vec<Vec<String>>,
        }
        Repr { ambient: self.ambient, basis: self.basis.iter().map(|v| v.iter().map(format_rat).collect()).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Subspace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            ambient: usize,
            basis: Vec<Vec<String>>,
        }
        let r = Repr::deserialize(d)?;
        let basis = r
            .basis
            .iter()
            .map(|v| {
                v.iter()
                    .map(|x| parse_rat(x).ok_or_else(|| serde::de::Error::custom("bad rational")))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Subspace::new(r.ambient, basis).map_err(serde::de::Error::custom)
    }
}

pub fn unit(n: usize, i: usize) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); n];
    v[i] = Rat::one();
    v
}

/// Inertia of a symmetric matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub positives: usize,
    pub negatives: usize,
    pub zeros: usize,
}

/// Sylvester signature by symmetric pivoting, with 2×2 blocks when the
/// diagonal of the remaining block vanishes.
pub fn signature(m: &RationalMatrix) -> Result<Signature, LinalgError> {
    if !m.is_symmetric() {
        return Err(LinalgError::NotSymmetric);
    }
    let mut a = m.to_rows();
    let mut sig = Signature { positives: 0, negatives: 0, zeros: 0 };
    loop {
        let n = a.len();
        if n == 0 {
            return Ok(sig);
        }
        if let Some(i) = (0..n).find(|&i| !a[i][i].is_zero()) {
            let p = a[i][i].clone();
            if p.is_positive() {
                sig.positives += 1;
            } else {
                sig.negatives += 1;
            }
            let keep: Vec<usize> = (0..n).filter(|&k| k != i).collect();
            a = keep.iter().map(|&r| keep.iter().map(|&c| &a[r][c] - &a[r][i] * &a[i][c] / &p).collect()).collect();
            continue;
        }
        let Some((i, j)) = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).find(|&(i, j)| !a[i][j].is_zero())
        else {
            sig.zeros += n;
            return Ok(sig);
        };
        // Block [[0, b], [b, 0]] has one positive and one negative direction.
        sig.positives += 1;
        sig.negatives += 1;
        let b = a[i][j].clone();
        let keep: Vec<usize> = (0..n).filter(|&k| k != i && k != j).collect();
        // Schur complement: A_rest - C P^{-1} Cᵀ with P^{-1} = [[0, 1/b], [1/b, 0]].
        a = keep
            .iter()
            .map(|&r| keep.iter().map(|&c| &a[r][c] - (&a[r][i] * &a[j][c] + &a[r][j] * &a[i][c]) / &b).collect())
            .collect();
    }
}

/// Matrix whose entries are linear forms in `nvars` variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearMatrix {
    rows: usize,
    cols: usize,
    nvars: usize,
    entries: Vec<Vec<Rat>>,
}

impl LinearMatrix {
    pub fn zeros(rows: usize, cols: usize, nvars: usize) -> Self {
        Self { rows, cols, nvars, entries: vec![vec![Rat::zero(); nvars]; rows * cols] }
    }

    /// Entry `(i, j)` gets coefficient vector `coeffs[i][j]`.
    pub fn new(nvars: usize, coeffs: Vec<Vec<Vec<Rat>>>) -> Result<Self, LinalgError> {
        let rows = coeffs.len();
        let cols = coeffs.first().map_or(0, Vec::len);
        if coeffs.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Ragged);
        }
        if let Some(e) = coeffs.iter().flatten().find(|e| e.len() != nvars) {
            return Err(LinalgError::DimensionMismatch { expected: nvars, found: e.len() });
        }
        Ok(Self { rows, cols, nvars, entries: coeffs.into_iter().flatten().collect() })
    }

    /// Convenience constructor from integer coefficients.
    pub fn from_i64(nvars: usize, coeffs: &[Vec<Vec<i64>>]) -> Result<Self, LinalgError> {
        Self::new(
            nvars,
            coeffs.iter().map(|r| r.iter().map(|e| e.iter().map(|&x| rat(x)).collect()).collect()).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn entry(&self, i: usize, j: usize) -> &[Rat] {
        &self.entries[i * self.cols + j]
    }

    fn entry_mut(&mut self, i: usize, j: usize) -> &mut Vec<Rat> {
        &mut self.entries[i * self.cols + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(Zero::is_zero)
    }

    pub fn evaluate(&self, point: &[Rat]) -> RationalMatrix {
        RationalMatrix::from_fn(self.rows, self.cols, |i, j| dot(self.entry(i, j), point))
    }

    /// `b · self`.
    pub fn left_mul(&self, b: &RationalMatrix) -> Self {
        assert_eq!(b.cols(), self.rows);
        let mut out = Self::zeros(b.rows(), self.cols, self.nvars);
        for i in 0..b.rows() {
            for k in 0..self.rows {
                let c = b.get(i, k);
                if c.is_zero() {
                    continue;
                }
                for j in 0..self.cols {
                    for v in 0..self.nvars {
                        let t = c * &self.entry(k, j)[v];
                        out.entry_mut(i, j)[v] += t;
                    }
                }
            }
        }
        out
    }

    /// `self · b`.
    pub fn right_mul(&self, b: &RationalMatrix) -> Self {
        assert_eq!(self.cols, b.rows());
        let mut out = Self::zeros(self.rows, b.cols(), self.nvars);
        for i in 0..self.rows {
            for k in 0..self.cols {
                for j in 0..b.cols() {
                    let c = b.get(k, j);
                    if c.is_zero() {
                        continue;
                    }
                    for v in 0..self.nvars {
                        let t = c * &self.entry(i, k)[v];
                        out.entry_mut(i, j)[v] += t;
                    }
                }
            }
        }
        out
    }
}

const SAMPLE_HALF_RANGE: i64 = 1 << 31;

fn sample_point(rng: &mut ChaCha8Rng, nvars: usize) -> Vec<Rat> {
    (0..nvars).map(|_| rat(rng.gen_range(-SAMPLE_HALF_RANGE..SAMPLE_HALF_RANGE))).collect()
}

/// Largest rank seen over `trials` random integer points (range 2^32 per
/// coordinate). Equals the generic rank up to Schwartz-Zippel failure.
pub fn generic_rank(a: &LinearMatrix, seed: u64, trials: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials.max(1)).map(|_| rank_exact(&a.evaluate(&sample_point(&mut rng, a.nvars)))).max().unwrap_or(0)
}

pub const DEFAULT_RANK_TRIALS: usize = 3;

/// Output of [`zero_block_normal_form`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroBlockForm {
    pub b: RationalMatrix,
    pub b_prime: RationalMatrix,
    pub transformed: LinearMatrix,
    /// Number of pivot steps taken before the trailing block vanished.
    pub steps: usize,
}

impl ZeroBlockForm {
    /// Rows and columns of the trailing zero block.
    pub fn zero_block(&self) -> (usize, usize) {
        (self.transformed.rows - self.steps, self.transformed.cols - self.steps)
    }
}

/// Real row and column operations exposing a trailing zero block of size at
/// least (N₁ − r) × (N₂ − r), r the generic rank.
///
/// Each step takes the highest-index variable present in the trailing block,
/// moves the lexicographically first entry containing it to the diagonal,
/// normalizes its coefficient to one and clears that variable from the rest of
/// the pivot row and column.
pub fn zero_block_normal_form(a: &LinearMatrix) -> ZeroBlockForm {
    let (n1, n2, nv) = (a.rows, a.cols, a.nvars);
    let mut m = a.clone();
    let mut b = RationalMatrix::identity(n1).to_rows();
    let mut bp = RationalMatrix::identity(n2).to_rows();
    let mut t = 0;
    while t < n1.min(n2) {
        let Some(k) = (0..nv).rev().find(|&k| (t..n1).any(|i| (t..n2).any(|j| !m.entry(i, j)[k].is_zero()))) else {
            break;
        };
        let (pi, pj) = (t..n1)
            .flat_map(|i| (t..n2).map(move |j| (i, j)))
            .find(|&(i, j)| !m.entry(i, j)[k].is_zero())
            .expect("variable present");
        // Swap rows t <-> pi and columns t <-> pj.
        if pi != t {
            for j in 0..n2 {
                m.entries.swap(pi * n2 + j, t * n2 + j);
            }
            b.swap(pi, t);
        }
        if pj != t {
            for i in 0..n1 {
                m.entries.swap(i * n2 + pj, i * n2 + t);
            }
            for row in bp.iter_mut() {
                row.swap(pj, t);
            }
        }
        // Normalize the pivot coefficient: row t /= c.
        let c = m.entry(t, t)[k].clone();
        for j in 0..n2 {
            for x in m.entry_mut(t, j).iter_mut() {
                *x = &*x / &c;
            }
        }
        for x in b[t].iter_mut() {
            *x = &*x / &c;
        }
        // Clear ξ_k from row t: column j -= f · column t.
        for j in t + 1..n2 {
            let f = m.entry(t, j)[k].clone();
            if f.is_zero() {
                continue;
            }
            for i in 0..n1 {
                let col_t = m.entry(i, t).to_vec();
                for (x, y) in m.entry_mut(i, j).iter_mut().zip(&col_t) {
                    *x -= &f * y;
                }
            }
            for row in bp.iter_mut() {
                let v = &f * &row[t];
                row[j] -= v;
            }
        }
        // Clear ξ_k from column t: row i -= f · row t.
        for i in t + 1..n1 {
            let f = m.entry(i, t)[k].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..n2 {
                let row_t = m.entry(t, j).to_vec();
                for (x, y) in m.entry_mut(i, j).iter_mut().zip(&row_t) {
                    *x -= &f * y;
                }
            }
            let bt = b[t].clone();
            for (x, y) in b[i].iter_mut().zip(&bt) {
                *x -= &f * y;
            }
        }
        t += 1;
    }
    let b = if n1 == 0 { RationalMatrix::zeros(0, 0) } else { RationalMatrix::from_rows(b).expect("square") };
    let b_prime = if n2 == 0 { RationalMatrix::zeros(0, 0) } else { RationalMatrix::from_rows(bp).expect("square") };
    ZeroBlockForm { b, b_prime, transformed: m, steps: t }
}

/// dim πV: the generic rank of the tangent matrix [I | ∂Q(ξ)] (d × (d+n))
/// times a basis of `v` ⊆ R^{d+n}.
pub fn tangent_projection_dim(q: &FormTuple, v: &Subspace, seed: u64) -> Result<usize, LinalgError> {
    let (d, n) = (q.d(), q.n());
    if v.ambient() != d + n {
        return Err(LinalgError::DimensionMismatch { expected: d + n, found: v.ambient() });
    }
    if v.dim() == 0 {
        return Ok(0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0;
    for _ in 0..DEFAULT_RANK_TRIALS {
        let xi = sample_point(&mut rng, d);
        let grads: Vec<Vec<Rat>> = q.forms().iter().map(|f| f.hessian().mul_vec(&xi)).collect();
        let t = RationalMatrix::from_fn(d, d + n, |j, c| {
            if c < d {
                if c == j {
                    Rat::one()
                } else {
                    Rat::zero()
                }
            } else {
                grads[c - d][j].clone()
            }
        });
        best = best.max(rank_exact(&t.mul(&v.basis_matrix().transpose())));
    }
    Ok(best)
}
