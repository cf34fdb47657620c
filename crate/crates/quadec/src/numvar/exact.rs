//! Solvers for classes where 𝔫𝔳 is known in closed form.

use std::collections::BTreeMap;

use num_traits::Zero;

use super::pencil::{k_subsets, min_pencil_rank};
use super::{CertifiedValue, FlagWitness, Level, NumvarError};
use crate::forms::{catalog, CoefficientSubspace, FormTuple};
use crate::linalg::{kernel, rank_exact, signature, unit, RationalMatrix, Subspace};

fn check_range(q: &FormTuple, d_prime: usize, n_prime: usize) -> Result<(), NumvarError> {
    if d_prime > q.d() || n_prime > q.n() {
        return Err(NumvarError::OutOfRange { d_prime, n_prime, d: q.d(), n: q.n() });
    }
    Ok(())
}

fn zero_witness(q: &FormTuple, d_prime: usize) -> FlagWitness {
    let h = Subspace::coordinate(q.d(), &(0..d_prime).collect::<Vec<_>>());
    FlagWitness { u: h.clone(), h, s: CoefficientSubspace(Subspace::zero(q.n())) }
}

/// Recognizes an ACK system up to the order and scaling of the forms and a
/// permutation of variables: distinct single monomials containing every
/// mixed product ξᵢξⱼ. Returns the exponent bounds (2 where ξⱼ² occurs).
pub fn as_ack(q: &FormTuple) -> Option<Vec<u32>> {
    ack_monomials(q).map(|(k, _)| k)
}

/// Exponent bounds and the form index of each monomial.
fn ack_monomials(q: &FormTuple) -> Option<(Vec<u32>, BTreeMap<(usize, usize), usize>)> {
    let d = q.d();
    let mut index = BTreeMap::new();
    for (f, form) in q.forms().iter().enumerate() {
        let mut mono = None;
        for i in 0..d {
            for j in i..d {
                if !form.hessian().get(i, j).is_zero() {
                    if mono.is_some() {
                        return None;
                    }
                    mono = Some((i, j));
                }
            }
        }
        let m = mono?;
        if index.insert(m, f).is_some() {
            return None;
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            if !index.contains_key(&(i, j)) {
                return None;
            }
        }
    }
    let k = (0..d).map(|j| if index.contains_key(&(j, j)) { 2 } else { 1 }).collect();
    Some((k, index))
}

/// Closed form for ACK systems. A coordinate subspace is a worst subspace of
/// each dimension, and inside it the best choice keeps the forms vanishing
/// there plus the monomials supported on an l-set of coordinates that holds
/// as many squares as possible.
fn ack_cell(
    q: &FormTuple,
    k: &[u32],
    index: &BTreeMap<(usize, usize), usize>,
    d_prime: usize,
    n_prime: usize,
) -> CertifiedValue {
    let (d, n) = (q.d(), q.n());
    if n_prime == 0 {
        return CertifiedValue::exact(0, "ack", Some(zero_witness(q, d_prime)));
    }
    let mut best: Option<(usize, Vec<usize>)> = None;
    for kset in k_subsets(d, d_prime) {
        let squares = kset.iter().filter(|&&j| k[j] >= 2).count();
        let inside = d_prime * d_prime.saturating_sub(1) / 2 + squares;
        let z = n - inside;
        let l = (0..=d_prime)
            .find(|&l| n_prime <= z + l * l.saturating_sub(1) / 2 + l.min(squares))
            .expect("l = d' always suffices");
        if best.as_ref().is_none_or(|(b, _)| l < *b) {
            best = Some((l, kset));
        }
    }
    let (l, kset) = best.expect("at least one subspace");
    // L: squares first, then the remaining coordinates of K.
    let mut order: Vec<usize> = kset.iter().copied().filter(|&j| k[j] >= 2).collect();
    order.extend(kset.iter().copied().filter(|&j| k[j] < 2));
    let lset: Vec<usize> = order[..l].to_vec();
    let rest: Vec<usize> = kset.iter().copied().filter(|j| !lset.contains(j)).collect();
    let mut chosen = Vec::new();
    for (&(i, j), &f) in index {
        if !(kset.contains(&i) && kset.contains(&j)) {
            chosen.push(f);
        }
    }
    for (&(i, j), &f) in index {
        if lset.contains(&i) && lset.contains(&j) {
            chosen.push(f);
        }
    }
    chosen.truncate(n_prime);
    let w = FlagWitness {
        h: Subspace::coordinate(d, &kset),
        u: Subspace::coordinate(d, &rest),
        s: CoefficientSubspace::span(n, &chosen.iter().map(|&f| unit(n, f)).collect::<Vec<_>>()),
    };
    debug_assert_eq!(super::verify_witness(q, d_prime, n_prime, &w), Ok(l));
    CertifiedValue::exact(l, "ack", Some(w))
}

/// 𝔫𝔳 of the ACK system with exponent bounds `k` (entries ≥ 2 allow the
/// square of that variable).
pub fn numvar_ack(k: &[u32], d_prime: usize, n_prime: usize) -> Result<CertifiedValue, NumvarError> {
    if k.contains(&0) {
        return Err(NumvarError::NotAck);
    }
    let q = catalog::ack(k).ok_or(NumvarError::NotAck)?;
    check_range(&q, d_prime, n_prime)?;
    let (kk, index) = ack_monomials(&q).ok_or(NumvarError::NotAck)?;
    Ok(ack_cell(&q, &kk, &index, d_prime, n_prime))
}

pub(crate) fn ack_table(q: &FormTuple) -> Option<Vec<Vec<CertifiedValue>>> {
    let (k, index) = ack_monomials(q)?;
    Some((0..=q.d()).map(|dp| (0..=q.n()).map(|np| ack_cell(q, &k, &index, dp, np)).collect()).collect())
}

/// n × d matrix of squared-variable coefficients (Hessian diagonals).
fn diagonal_matrix(q: &FormTuple) -> RationalMatrix {
    RationalMatrix::from_fn(q.n(), q.d(), |i, j| q.hessian(i).get(j, j).clone())
}

/// For each n′, the best column set J (largest, rank(A_J) ≤ n − n′) among
/// subsets of `within`.
fn best_columns(a: &RationalMatrix, ranks: &[usize], within: usize, n_prime: usize) -> usize {
    let n = a.rows();
    let mut best = 0usize;
    let mut best_size = 0;
    // Enumerate submasks of `within`.
    let mut j = within;
    loop {
        let size = j.count_ones() as usize;
        if ranks[j] + n_prime <= n && (size > best_size || (size == best_size && j < best)) {
            best = j;
            best_size = size;
        }
        if j == 0 {
            break;
        }
        j = (j - 1) & within;
    }
    best
}

fn mask_indices(mask: usize, d: usize) -> Vec<usize> {
    (0..d).filter(|&j| mask >> j & 1 == 1).collect()
}

struct DiagonalData {
    a: RationalMatrix,
    ranks: Vec<usize>,
}

impl DiagonalData {
    fn new(q: &FormTuple) -> Self {
        let a = diagonal_matrix(q);
        let d = q.d();
        let ranks = (0..1usize << d)
            .map(|mask| {
                let cols = mask_indices(mask, d);
                if cols.is_empty() {
                    0
                } else {
                    rank_exact(&a.select(&(0..q.n()).collect::<Vec<_>>(), &cols))
                }
            })
            .collect();
        Self { a, ranks }
    }

    /// Value and witness of the coordinate restriction to `kmask`.
    fn coordinate_cell(&self, q: &FormTuple, kmask: usize, n_prime: usize) -> (usize, FlagWitness) {
        let (d, n) = (q.d(), q.n());
        let j = best_columns(&self.a, &self.ranks, kmask, n_prime);
        let cols = mask_indices(j, d);
        let s = if cols.is_empty() {
            Subspace::full(n)
        } else {
            kernel(&self.a.select(&(0..n).collect::<Vec<_>>(), &cols).transpose())
        };
        let s = CoefficientSubspace(Subspace::span(n, &s.basis()[..n_prime]));
        let w =
            FlagWitness { h: Subspace::coordinate(d, &mask_indices(kmask, d)), u: Subspace::coordinate(d, &cols), s };
        ((kmask.count_ones() - j.count_ones()) as usize, w)
    }
}

/// Largest d handled by subset enumeration.
pub(crate) const DIAGONAL_MAX_D: usize = 12;

/// Diagonal tuples. Row d′ = d is exact by subset enumeration; below it the
/// lower bound 𝔫𝔳_{d,n′} − 2m is proved for tuples without mixed terms, and
/// coordinate restrictions give witnessed upper bounds.
pub fn numvar_diagonal(q: &FormTuple, d_prime: usize, n_prime: usize) -> Result<CertifiedValue, NumvarError> {
    if !q.is_diagonal() {
        return Err(NumvarError::NotDiagonal);
    }
    check_range(q, d_prime, n_prime)?;
    Ok(diagonal_table(q).swap_remove(d_prime).swap_remove(n_prime))
}

pub(crate) fn diagonal_table(q: &FormTuple) -> Vec<Vec<CertifiedValue>> {
    let d = q.d();
    assert!(d <= DIAGONAL_MAX_D, "diagonal enumeration limited to d <= {DIAGONAL_MAX_D}");
    let data = DiagonalData::new(q);
    let full = (1usize << d) - 1;
    let top: Vec<usize> = (0..=q.n()).map(|np| data.coordinate_cell(q, full, np).0).collect();
    (0..=d)
        .map(|dp| {
            (0..=q.n())
                .map(|np| {
                    let m = d - dp;
                    let mut best: Option<(usize, FlagWitness)> = None;
                    for kset in k_subsets(d, dp) {
                        let kmask = kset.iter().fold(0usize, |acc, &j| acc | 1 << j);
                        let (v, w) = data.coordinate_cell(q, kmask, np);
                        if best.as_ref().is_none_or(|(b, _)| v < *b) {
                            best = Some((v, w));
                        }
                    }
                    let (upper, w) = best.expect("nonempty");
                    let lower = top[np].saturating_sub(2 * m).min(upper);
                    let level = if lower == upper { Level::Exact } else { Level::WitnessUb };
                    CertifiedValue {
                        lower,
                        upper,
                        level,
                        upper_by: "diagonal".into(),
                        lower_by: "diagonal".into(),
                        witness: Some(w),
                    }
                })
                .collect()
        })
        .collect()
}

/// Single form of inertia (p, q): restricted to codimension m the least rank
/// is (p − m)⁺ + (q − m)⁺.
pub fn numvar_single(q: &FormTuple, d_prime: usize, n_prime: usize) -> Result<CertifiedValue, NumvarError> {
    if q.n() != 1 {
        return Err(NumvarError::OutOfRange { d_prime, n_prime, d: q.d(), n: q.n() });
    }
    check_range(q, d_prime, n_prime)?;
    Ok(single_table(q).swap_remove(d_prime).swap_remove(n_prime))
}

pub(crate) fn single_table(q: &FormTuple) -> Vec<Vec<CertifiedValue>> {
    let sig = signature(q.hessian(0)).expect("symmetric");
    let d = q.d();
    (0..=d)
        .map(|dp| {
            let m = d - dp;
            let v = sig.positives.saturating_sub(m) + sig.negatives.saturating_sub(m);
            let trivial = (v == dp).then(|| FlagWitness {
                h: Subspace::coordinate(d, &(0..dp).collect::<Vec<_>>()),
                u: Subspace::zero(d),
                s: CoefficientSubspace::full(1),
            });
            vec![
                CertifiedValue::exact(0, "single-form", Some(zero_witness(q, dp))),
                CertifiedValue::exact(v, "single-form", trivial),
            ]
        })
        .collect()
}

/// Pairs: 𝔫𝔳_{d,1} is the least rank in the real pencil, decided exactly.
/// Other cells get the pencil inequality 𝔫𝔳_{d−m,1} ≥ 𝔫𝔳_{d,1} − 2m and the
/// trivial upper bound d′.
pub fn numvar_pair(q: &FormTuple, d_prime: usize, n_prime: usize) -> Result<CertifiedValue, NumvarError> {
    if q.n() != 2 {
        return Err(NumvarError::NotPair);
    }
    check_range(q, d_prime, n_prime)?;
    let d = q.d();
    if n_prime == 0 {
        return Ok(CertifiedValue::exact(0, "pair", Some(zero_witness(q, d_prime))));
    }
    if d_prime == d && n_prime == 2 {
        let rad = q.common_radical();
        let w = FlagWitness { h: Subspace::full(d), u: rad, s: CoefficientSubspace::full(2) };
        return Ok(CertifiedValue::exact(w.bound(), "pair", Some(w)));
    }
    let (value, w) = pencil_cell(q);
    if d_prime == d {
        return Ok(CertifiedValue::exact(value, "pair", w));
    }
    let m = d - d_prime;
    let lower = if n_prime == 1 { value.saturating_sub(2 * m) } else { 0 };
    Ok(CertifiedValue {
        lower,
        upper: d_prime,
        level: if lower == d_prime { Level::Exact } else { Level::WitnessUb },
        upper_by: "trivial".into(),
        lower_by: "pair".into(),
        witness: Some(FlagWitness {
            h: Subspace::coordinate(d, &(0..d_prime).collect::<Vec<_>>()),
            u: Subspace::zero(d),
            s: CoefficientSubspace(Subspace::span(2, &[unit(2, 0), unit(2, 1)][..n_prime])),
        }),
    })
}

/// Least pencil rank with a witness when a rational minimizer exists.
pub(crate) fn pencil_cell(q: &FormTuple) -> (usize, Option<FlagWitness>) {
    let pm = min_pencil_rank(q.hessian(0), q.hessian(1));
    let w = pm.argmin.map(|(a, b)| {
        let c = vec![a, b];
        let k = kernel(&q.combination(&c));
        FlagWitness { h: Subspace::full(q.d()), u: k, s: CoefficientSubspace::span(2, &[c]) }
    });
    (pm.rank, w)
}

/// Witness for 𝔫𝔳_{d,n} from the common radical.
pub(crate) fn radical_witness(q: &FormTuple) -> FlagWitness {
    FlagWitness { h: Subspace::full(q.d()), u: q.common_radical(), s: CoefficientSubspace::full(q.n()) }
}

/// Witness with value 0 using combinations that vanish identically.
pub(crate) fn kernel_witness(q: &FormTuple, d_prime: usize, n_prime: usize) -> Option<FlagWitness> {
    let k = q.coefficient_kernel();
    (n_prime <= k.dim()).then(|| {
        let h = Subspace::coordinate(q.d(), &(0..d_prime).collect::<Vec<_>>());
        FlagWitness { u: h.clone(), h, s: CoefficientSubspace(Subspace::span(q.n(), &k.basis()[..n_prime])) }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::catalog::*;

    fn rows(t: &[Vec<CertifiedValue>]) -> Vec<Vec<usize>> {
        t.iter().map(|r| r.iter().map(|c| c.upper).collect()).collect()
    }

    /// Brute force over coordinate flags: the least l over coordinate H and
    /// coordinate U ⊆ H with at least n′ admissible coefficient directions.
    fn coordinate_flag_oracle(q: &FormTuple) -> Vec<Vec<usize>> {
        let (d, n) = (q.d(), q.n());
        let mut t: Vec<Vec<usize>> = (0..=d).map(|dp| vec![dp; n + 1]).collect();
        for hmask in 0usize..1 << d {
            for umask in 0usize..1 << d {
                if umask & !hmask != 0 {
                    continue;
                }
                let h = Subspace::coordinate(d, &mask_indices(hmask, d));
                let u = Subspace::coordinate(d, &mask_indices(umask, d));
                let kappa = crate::numvar::admissible_coefficients(q, &u, &h).dim();
                let l = h.dim() - u.dim();
                for np in 0..=kappa.min(n) {
                    t[h.dim()][np] = t[h.dim()][np].min(l);
                }
            }
        }
        t
    }

    #[test]
    fn ack_reproduces_q1() {
        let t = ack_table(&q1()).unwrap();
        assert_eq!(rows(&t)[3], vec![0, 1, 2, 3, 3]);
        assert_eq!(rows(&t)[2], vec![0, 0, 0, 0, 2]);
        assert_eq!(rows(&t)[1], vec![0; 5]);
        assert_eq!(rows(&t), coordinate_flag_oracle(&q1()));
    }

    #[test]
    fn ack_parsell_vinogradov() {
        let pv = parsell_vinogradov(2);
        assert_eq!(numvar_ack(&[2, 2], 1, 3).unwrap().upper, 1);
        assert_eq!(numvar_ack(&[2, 2], 2, 3).unwrap().upper, 2);
        assert_eq!(rows(&ack_table(&pv).unwrap()), coordinate_flag_oracle(&pv));
        for d in 2..=4 {
            let pv = parsell_vinogradov(d);
            let n = pv.n();
            assert_eq!(ack_table(&pv).unwrap()[d - 1][n].upper, d - 1);
        }
        assert_eq!(numvar_ack(&[0, 1], 1, 1), Err(NumvarError::NotAck));
    }

    #[test]
    fn ack_recognition() {
        assert_eq!(as_ack(&q1()), Some(vec![1, 1, 2]));
        assert_eq!(as_ack(&q2()), None);
        let swapped =
            FormTuple::from_terms(3, &[vec![(2, 2, 5)], vec![(1, 2, 1)], vec![(0, 1, -1)], vec![(0, 2, 1)]]).unwrap();
        assert_eq!(rows(&ack_table(&swapped).unwrap()), rows(&ack_table(&q1()).unwrap()));
    }

    #[test]
    fn diagonal_examples() {
        let p3 = paraboloid(3);
        assert_eq!(numvar_diagonal(&p3, 3, 1).unwrap().upper, 3);
        let two = diagonal(&[vec![1, 0], vec![0, 1]]);
        let c = numvar_diagonal(&two, 2, 1).unwrap();
        assert_eq!((c.lower, c.upper), (1, 1));
        assert_eq!(numvar_diagonal(&two, 2, 0).unwrap().upper, 0);
        assert_eq!(numvar_diagonal(&q2(), 3, 1), Err(NumvarError::NotDiagonal));
    }

    #[test]
    fn isotropic_line_is_not_a_coordinate_line() {
        // ξ₁² − ξ₂² vanishes on the line (1, 1); coordinate lines miss it.
        let q = diagonal(&[vec![1, -1]]);
        let c = numvar_diagonal(&q, 1, 1).unwrap();
        assert_eq!((c.lower, c.upper), (0, 1));
        assert_eq!(numvar_single(&q, 1, 1).unwrap().upper, 0);
    }

    #[test]
    fn pair_examples() {
        let q = FormTuple::from_terms(2, &[vec![(0, 0, 1), (1, 1, 1)], vec![(0, 1, 1)]]).unwrap();
        assert_eq!(numvar_pair(&q, 2, 1).unwrap().upper, 1);
        let q = diagonal(&[vec![1, 0], vec![0, 1]]);
        assert_eq!(numvar_pair(&q, 2, 1).unwrap().upper, 1);
        let c = numvar_pair(&q2(), 3, 1).unwrap();
        assert_eq!((c.lower, c.upper, c.level), (1, 1, Level::Exact));
        assert!(c.witness.is_some());
        assert_eq!(numvar_pair(&q1(), 3, 1), Err(NumvarError::NotPair));
    }

    #[test]
    fn single_form_inertia() {
        let t = single_table(&paraboloid(3));
        assert_eq!(rows(&t), vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![0, 3]]);
        let t = single_table(&diagonal(&[vec![1, 1, -1]]));
        assert_eq!(rows(&t), vec![vec![0, 0], vec![0, 0], vec![0, 1], vec![0, 3]]);
    }
}
