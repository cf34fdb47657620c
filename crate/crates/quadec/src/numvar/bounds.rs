//! Rigorous lower bounds and the propagation rules between cells.
//!
//! Every bound here is a theorem about all (H, S), so a cell whose lower bound
//! meets a witnessed upper bound is settled.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pencil::{min_pencil_rank, pencil_det};
use super::search::Grid;
use super::FlagWitness;
use crate::forms::{CoefficientSubspace, FormTuple};
use crate::linalg::{frac, rat, signature, unit, Rat, Subspace};

/// Largest d for which pencil bounds are computed.
const PENCIL_MAX_D: usize = 6;

/// Coefficient vectors probed by the signature and pencil bounds.
pub(super) fn coefficient_pool(n: usize, seed: u64) -> Vec<Vec<Rat>> {
    let mut pool: Vec<Vec<Rat>> = (0..n).map(|i| unit(n, i)).collect();
    if n <= 12 {
        for i in 0..n {
            for j in i + 1..n {
                for s in [1, -1, 2, -2] {
                    let mut v = unit(n, i);
                    v[j] = rat(s);
                    pool.push(v);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5157_4e41);
    for _ in 0..24 {
        let v: Vec<Rat> = (0..n).map(|_| rat(rng.gen_range(-3..=3))).collect();
        if v.iter().any(|x| !x.is_zero()) {
            pool.push(v);
        }
    }
    pool
}

/// Least l with n′ ≤ dim K + min(rk, md − C(m,2)) + l(l+1)/2: forms that
/// vanish on a codimension-m subspace, and forms in l variables, are both
/// spaces of bounded dimension.
pub(super) fn counting_bound(q: &FormTuple, kernel_dim: usize, d_prime: usize, n_prime: usize) -> usize {
    let (d, n) = (q.d(), q.n());
    let m = d - d_prime;
    let vanishing = (m * d - m * m.saturating_sub(1) / 2).min(n - kernel_dim);
    let free = kernel_dim + vanishing;
    (0..=d_prime).find(|&l| n_prime <= free + l * (l + 1) / 2).unwrap_or(d_prime)
}

pub(super) fn apply_lower_bounds(q: &FormTuple, grid: &mut Grid, seed: u64) {
    let (d, n) = (q.d(), q.n());
    let kernel_dim = q.coefficient_kernel().dim();
    for dp in 0..=d {
        for np in 0..=n {
            grid.raise(dp, np, counting_bound(q, kernel_dim, dp, np), "counting");
        }
    }
    grid.raise(d, n, d - q.common_radical().dim(), "radical");
    if n == 0 {
        return;
    }
    let pool = coefficient_pool(n, seed);
    // Signature: with S everything, each member keeps (p − m)⁺ + (q − m)⁺.
    for c in &pool {
        let sig = signature(&q.combination(c)).expect("symmetric");
        for m in 0..=d {
            let v = sig.positives.saturating_sub(m) + sig.negatives.saturating_sub(m);
            grid.raise(d - m, n, v, "signature");
        }
    }
    // Pencil: an (n − 1)-dimensional S meets every 2-dimensional T.
    if n >= 2 && d <= PENCIL_MAX_D {
        let mut pairs: Vec<(Vec<Rat>, Vec<Rat>)> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((unit(n, i), unit(n, j)));
            }
        }
        pairs.truncate(15);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7065_6e63);
        for _ in 0..6 {
            let a: Vec<Rat> = (0..n).map(|_| rat(rng.gen_range(-2..=2))).collect();
            let b: Vec<Rat> = (0..n).map(|_| rat(rng.gen_range(-2..=2))).collect();
            pairs.push((a, b));
        }
        for (a, b) in pairs {
            if Subspace::span(n, &[a.clone(), b.clone()]).dim() < 2 {
                continue;
            }
            let r = min_pencil_rank(&q.combination(&a), &q.combination(&b)).rank;
            for m in 0..=d {
                grid.raise(d - m, n - 1, r.saturating_sub(2 * m), "pencil");
            }
        }
    }
}

/// Inertia bound for one combination: restricted to a d′-dimensional H, B_c
/// keeps at least (p − m)⁺ + (q − m)⁺ variables and that many suffice, so
/// this is an upper bound for column n′ = 1 (no witness: the optimal H can be
/// irrational).
pub(super) fn single_form_value(q: &FormTuple, c: &[Rat], d_prime: usize) -> usize {
    let sig = signature(&q.combination(c)).expect("symmetric");
    let m = q.d() - d_prime;
    sig.positives.saturating_sub(m) + sig.negatives.saturating_sub(m)
}

/// Coefficient vectors where the inertia of a pencil can change: rational
/// roots of det(λH_i + H_j) and a grid of sample points.
fn pencil_candidates(q: &FormTuple) -> Vec<Vec<Rat>> {
    let n = q.n();
    let mut out = Vec::new();
    for i in 0..n.min(4) {
        for j in i + 1..n.min(4) {
            let mut lambdas = if q.d() <= PENCIL_MAX_D {
                pencil_det(q.hessian(i), q.hessian(j)).rational_roots()
            } else {
                Vec::new()
            };
            lambdas.extend((-16..=16).map(|k| frac(k, 4)));
            lambdas.extend((1..=8).map(|k| frac(1, 4 * k)).flat_map(|x| [x.clone(), -x]));
            for l in lambdas {
                let mut c = vec![Rat::zero(); n];
                c[i] = l;
                c[j] = rat(1);
                out.push(c);
            }
        }
    }
    out
}

pub(super) fn apply_single_form_uppers(q: &FormTuple, grid: &mut Grid, seed: u64) {
    let (d, n) = (q.d(), q.n());
    if n == 0 {
        return;
    }
    let mut coeffs = coefficient_pool(n, seed);
    coeffs.extend(pencil_candidates(q));
    for c in &coeffs {
        for dp in 0..=d {
            grid.lower_upper(dp, 1, single_form_value(q, c, dp), "single-form");
        }
    }
}

/// Shrinks H by one dimension, dropping a direction outside U when possible.
pub(super) fn shrink_h(w: &FlagWitness) -> Option<FlagWitness> {
    let k = w.h.dim();
    if k == 0 {
        return None;
    }
    let ext = w.u.extend_from(w.h.basis(), k).expect("u inside h");
    let basis = ext.basis();
    let (h, u) = if w.u.dim() < k {
        (Subspace::span(w.h.ambient(), &basis[..k - 1]), w.u.clone())
    } else {
        let b = &w.u.basis()[..k - 1];
        (Subspace::span(w.h.ambient(), b), Subspace::span(w.u.ambient(), b))
    };
    Some(FlagWitness { h, u, s: w.s.clone() })
}

pub(super) fn shrink_s(w: &FlagWitness) -> Option<FlagWitness> {
    let k = w.s.dim();
    (k > 0).then(|| FlagWitness {
        h: w.h.clone(),
        u: w.u.clone(),
        s: CoefficientSubspace(Subspace::span(w.s.ambient(), &w.s.basis()[..k - 1])),
    })
}

/// Runs monotonicity, the codimension step and witness derivation to a
/// fixpoint.
pub(super) fn propagate(grid: &mut Grid) {
    let (d, n) = (grid.d, grid.n);
    loop {
        let mut changed = false;
        for dp in (0..=d).rev() {
            for np in (0..=n).rev() {
                let lo = grid.cells[dp][np].lower;
                if dp > 0 {
                    changed |= grid.raise(dp - 1, np, lo.saturating_sub(np + 1), "codim-step");
                }
                if dp < d {
                    let below = grid.cells[dp][np].lower;
                    changed |= grid.raise(dp + 1, np, below, "monotone");
                }
                if np < n {
                    changed |= grid.raise(dp, np + 1, lo, "monotone");
                }
                if let Some(w) = grid.cells[dp][np].witness.clone() {
                    if dp > 0 {
                        if let Some(w2) = shrink_h(&w) {
                            changed |= grid.offer(dp - 1, np, w2, "derived");
                        }
                    }
                    if np > 0 {
                        if let Some(w2) = shrink_s(&w) {
                            changed |= grid.offer(dp, np - 1, w2, "derived");
                        }
                    }
                }
                // Upper bounds without witnesses still pass down.
                let up = grid.cells[dp][np].upper;
                if dp > 0 {
                    changed |= grid.lower_upper(dp - 1, np, up.saturating_sub(1), "derived");
                }
                if np > 0 {
                    changed |= grid.lower_upper(dp, np - 1, up, "derived");
                }
            }
        }
        if !changed {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::catalog::*;
    use crate::numvar::verify_witness;

    #[test]
    fn counting_on_paraboloid() {
        let p = paraboloid(3);
        assert_eq!(counting_bound(&p, 0, 3, 1), 1);
        assert_eq!(counting_bound(&q1(), 0, 3, 4), 3);
        assert_eq!(counting_bound(&q1(), 0, 2, 4), 1);
    }

    #[test]
    fn shrinking_keeps_validity() {
        let q = q1();
        let w = FlagWitness {
            h: Subspace::full(3),
            u: Subspace::coordinate(3, &[1]),
            s: CoefficientSubspace::span(4, &[unit(4, 1), unit(4, 3)]),
        };
        assert_eq!(verify_witness(&q, 3, 2, &w), Ok(2));
        let w2 = shrink_h(&w).unwrap();
        assert_eq!(verify_witness(&q, 2, 2, &w2), Ok(1));
        let w3 = shrink_s(&w2).unwrap();
        assert_eq!(verify_witness(&q, 2, 1, &w3), Ok(1));
    }
}
