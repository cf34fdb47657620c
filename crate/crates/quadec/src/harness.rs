//! Desk-scale checks: exact solution counts for the mean-value systems,
//! growth-exponent fits, and randomized invariance suites.
//!
//! J_Q(W) counts 2s-tuples of points of [0, W]^d with
//! w₁ + … + w_s = w_{s+1} + … + w_{2s} and the same equality for Q. It is
//! Σ_v r_s(v)², where r_s(v) counts s-tuples whose sums equal v. By
//! orthogonality it is also the 2s-th power of the L^{2s} norm of the
//! exponential sum over the box.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponent::{classify_bounds, gamma, gamma_graph, gamma_graph_bounds, Exponent, QMode};
use crate::forms::{catalog, FormTuple};
use crate::linalg::{
    generic_rank, rank_exact, rat, zero_block_normal_form, LinearMatrix, Rat, RationalMatrix, DEFAULT_RANK_TRIALS,
};
use crate::numvar::{numvar_pair, numvar_single, numvar_table, NumvarTable, SearchConfig};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("counting needs integral Hessians (integer coefficients on mixed terms, even on squares)")]
    NonIntegral,
    #[error("s must be between 1 and 4, got {0}")]
    BadS(usize),
    #[error("value table estimate {estimate_bytes} bytes exceeds the cap of {cap_bytes} bytes")]
    BudgetExceeded { estimate_bytes: u128, cap_bytes: u128 },
    #[error("the fit needs at least 4 W values spanning a factor of 8")]
    ShortLadder,
    #[error("count invariant violated: {0}")]
    InvariantViolated(String),
}

/// One counting run: tuple, s and the W ladder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSpec {
    pub tuple: FormTuple,
    pub s: usize,
    pub w_values: Vec<u64>,
}

/// Memory guard for the value tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountLimits {
    pub memory_cap: u64,
}

impl Default for CountLimits {
    fn default() -> Self {
        Self { memory_cap: 2 << 30 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountReport {
    pub s: usize,
    pub d: usize,
    /// (W, J_Q(W)) in ladder order.
    pub counts: Vec<(u64, BigUint)>,
}

impl CountReport {
    /// J is nondecreasing in W and at least the (W+1)^{sd} diagonal
    /// solutions.
    pub fn check_invariants(&self) -> Result<(), HarnessError> {
        let mut sorted: Vec<&(u64, BigUint)> = self.counts.iter().collect();
        sorted.sort_by_key(|(w, _)| *w);
        for pair in sorted.windows(2) {
            if pair[1].1 < pair[0].1 {
                return Err(HarnessError::InvariantViolated(format!(
                    "J decreases between W = {} and {}",
                    pair[0].0, pair[1].0
                )));
            }
        }
        for (w, j) in &self.counts {
            let diag = BigUint::from(w + 1).pow((self.s * self.d) as u32);
            if *j < diag {
                return Err(HarnessError::InvariantViolated(format!("J({w}) is below (W+1)^(sd)")));
            }
        }
        Ok(())
    }
}

type Key = Box<[i64]>;

/// Integer Hessians, or an error.
fn integer_hessians(q: &FormTuple) -> Result<Vec<Vec<Vec<i64>>>, HarnessError> {
    (0..q.n())
        .map(|i| {
            let h = q.hessian(i);
            (0..q.d())
                .map(|r| {
                    (0..q.d())
                        .map(|c| {
                            let x = h.get(r, c);
                            if x.is_integer() {
                                x.to_integer().to_i64().ok_or(HarnessError::NonIntegral)
                            } else {
                                Err(HarnessError::NonIntegral)
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// (w, wᵀH₁w, …, wᵀH_nw) for every w ∈ [0, W]^d. wᵀHw = 2Q(w), so the
/// equations are unchanged.
fn point_keys(hess: &[Vec<Vec<i64>>], d: usize, w: u64) -> Vec<Key> {
    let side = w as usize + 1;
    let total = side.pow(d as u32);
    let mut out = Vec::with_capacity(total);
    let mut x = vec![0i64; d];
    for idx in 0..total {
        let mut r = idx;
        for xi in x.iter_mut() {
            *xi = (r % side) as i64;
            r /= side;
        }
        let mut key = x.clone();
        for h in hess {
            let mut v = 0i64;
            for a in 0..d {
                for b in 0..d {
                    v += h[a][b] * x[a] * x[b];
                }
            }
            key.push(v);
        }
        out.push(key.into_boxed_slice());
    }
    out
}

fn add_keys(a: &[i64], b: &[i64]) -> Key {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Upper estimate of the value-table size in bytes, and a guard against
/// count overflow.
fn estimate(points: &[Key], s: usize, limits: &CountLimits) -> Result<(), HarnessError> {
    let width = points.first().map_or(0, |k| k.len());
    let mut span: u128 = 1;
    for c in 0..width {
        let (lo, hi) = points.iter().fold((i64::MAX, i64::MIN), |(lo, hi), k| (lo.min(k[c]), hi.max(k[c])));
        span = span.saturating_mul((s as u128) * (hi - lo) as u128 + 1);
    }
    let tuples = (points.len() as u128).checked_pow(s as u32).filter(|&t| t < 1 << 120);
    let entries = match tuples {
        Some(t) => t.min(span),
        None => u128::MAX,
    };
    let bytes = entries.saturating_mul(48 + 8 * width as u128);
    if tuples.is_none() || bytes > limits.memory_cap as u128 {
        return Err(HarnessError::BudgetExceeded { estimate_bytes: bytes, cap_bytes: limits.memory_cap as u128 });
    }
    Ok(())
}

/// J_Q(W) = Σ r_s(v)², with r_s built by s − 1 convolution passes.
fn count_one(
    hess: &[Vec<Vec<i64>>],
    d: usize,
    s: usize,
    w: u64,
    limits: &CountLimits,
) -> Result<BigUint, HarnessError> {
    let points = point_keys(hess, d, w);
    estimate(&points, s, limits)?;
    let mut r: HashMap<Key, u128> = HashMap::new();
    for k in &points {
        *r.entry(k.clone()).or_insert(0) += 1;
    }
    let base: Vec<(Key, u128)> = r.iter().map(|(k, &c)| (k.clone(), c)).collect();
    for _ in 1..s {
        let mut next: HashMap<Key, u128> = HashMap::with_capacity(r.len() * 2);
        for (k, c) in &r {
            for (p, pc) in &base {
                *next.entry(add_keys(k, p)).or_insert(0) += c * pc;
            }
        }
        r = next;
    }
    Ok(r.values().map(|&c| BigUint::from(c) * BigUint::from(c)).sum())
}

fn check_spec(q: &FormTuple, s: usize) -> Result<Vec<Vec<Vec<i64>>>, HarnessError> {
    if !(1..=4).contains(&s) {
        return Err(HarnessError::BadS(s));
    }
    integer_hessians(q)
}

/// Exact counts over the W ladder. Ladder entries run in parallel; each
/// count is independent, so results do not depend on the worker count.
pub fn count_solutions(spec: &CountSpec, limits: &CountLimits) -> Result<CountReport, HarnessError> {
    let hess = check_spec(&spec.tuple, spec.s)?;
    let d = spec.tuple.d();
    let counts: Result<Vec<(u64, BigUint)>, HarnessError> =
        spec.w_values.par_iter().map(|&w| count_one(&hess, d, spec.s, w, limits).map(|j| (w, j))).collect();
    let report = CountReport { s: spec.s, d, counts: counts? };
    report.check_invariants()?;
    Ok(report)
}

/// ‖Σ_{w ∈ [0,W]^d} e(w·x + Q(w)·y)‖_{L^{2s}}^{2s} over the torus, which
/// equals J_Q(W).
pub fn expsum_even_norm(q: &FormTuple, w: u64, s: usize, limits: &CountLimits) -> Result<BigUint, HarnessError> {
    let hess = check_spec(q, s)?;
    count_one(&hess, q.d(), s, w, limits)
}

/// Reference count by direct enumeration of all 2s-tuples of points.
/// Refuses instances with more than 10⁹ tuples.
pub fn count_naive(q: &FormTuple, s: usize, w: u64) -> Result<BigUint, HarnessError> {
    let hess = check_spec(q, s)?;
    let d = q.d();
    let points = point_keys(&hess, d, w);
    let np = points.len();
    let total = (np as u128).checked_pow(2 * s as u32).unwrap_or(u128::MAX);
    if total > 1_000_000_000 {
        return Err(HarnessError::BudgetExceeded { estimate_bytes: total, cap_bytes: 1_000_000_000 });
    }
    let width = points.first().map_or(0, |k| k.len());
    let mut idx = vec![0usize; 2 * s];
    let mut count: u64 = 0;
    let mut acc = vec![0i64; width];
    loop {
        acc.iter_mut().for_each(|x| *x = 0);
        for (t, &i) in idx.iter().enumerate() {
            let sign = if t < s { 1 } else { -1 };
            for (a, v) in acc.iter_mut().zip(points[i].iter()) {
                *a += sign * v;
            }
        }
        if acc.iter().all(|&x| x == 0) {
            count += 1;
        }
        // Odometer.
        let mut t = 0;
        loop {
            if t == idx.len() {
                return Ok(BigUint::from(count));
            }
            idx[t] += 1;
            if idx[t] < np {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitTolerance {
    pub above: f64,
    pub below: f64,
}

impl Default for FitTolerance {
    fn default() -> Self {
        Self { above: 0.15, below: 0.35 }
    }
}

/// A least-squares fit of log J against log W.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fitted: f64,
    /// Small-denominator rational near `fitted`.
    pub fitted_rational: String,
    /// Root mean square residual of the retained points.
    pub residual: f64,
    /// 2sΓ_{2s} + d, as an interval when the table is open.
    pub predicted_low: String,
    pub predicted_high: String,
    pub points: Vec<(u64, f64, f64)>,
    pub dropped: Option<u64>,
    pub verdict: Verdict,
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, Vec<f64>) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let res = pts.iter().map(|p| p.1 - icpt - slope * p.0).collect();
    (slope, icpt, res)
}

fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
}

/// Compares the fitted growth exponent with 2sΓ_{2s} + d. Above the
/// prediction by more than `tol.above` is a FAIL; below by more than
/// `tol.below` is a WARN, since the prediction is an upper bound with an
/// ε-loss.
///
/// The smallest W is dropped and the fit redone when its residual is the
/// largest one (pre-asymptotic drift).
pub fn fit_and_compare(
    report: &CountReport,
    table: &NumvarTable,
    tol: &FitTolerance,
) -> Result<FitReport, HarnessError> {
    let mut ws: Vec<&(u64, BigUint)> = report.counts.iter().collect();
    ws.sort_by_key(|(w, _)| *w);
    ws.dedup_by_key(|(w, _)| *w);
    let (lo, hi) = match (ws.first(), ws.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return Err(HarnessError::ShortLadder),
    };
    if ws.len() < 4 || lo == 0 || hi < 8 * lo {
        return Err(HarnessError::ShortLadder);
    }
    let points: Vec<(u64, f64, f64)> = ws.iter().map(|(w, j)| (*w, (*w as f64).ln(), ln_big(j))).collect();
    let all: Vec<(f64, f64)> = points.iter().map(|p| (p.1, p.2)).collect();
    let (mut slope, _, mut res) = least_squares(&all);
    let mut dropped = None;
    let worst = res.iter().map(|r| r.abs()).fold(0.0, f64::max);
    if all.len() >= 4 && worst > 1e-9 && res[0].abs() >= worst {
        let (s2, _, r2) = least_squares(&all[1..]);
        slope = s2;
        res = r2;
        dropped = Some(points[0].0);
    }
    let residual = (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt();
    let p = Exponent::from_int(2 * report.s as i64);
    let g = gamma(table, &p, &p);
    let scale = rat(2 * report.s as i64);
    let d = rat(report.d as i64);
    let pred_lo = &scale * &g.lower + &d;
    let pred_hi = &scale * &g.upper + &d;
    let (plo, phi) = (pred_lo.to_f64().expect("finite"), pred_hi.to_f64().expect("finite"));
    let verdict = if slope > phi + tol.above {
        Verdict::Fail
    } else if slope < plo - tol.below {
        Verdict::Warn
    } else {
        Verdict::Pass
    };
    Ok(FitReport {
        fitted: slope,
        fitted_rational: crate::linalg::format_rat(&approximate(slope, 1000)),
        residual,
        predicted_low: crate::linalg::format_rat(&pred_lo),
        predicted_high: crate::linalg::format_rat(&pred_hi),
        points,
        dropped,
        verdict,
    })
}

/// Best rational with denominator ≤ `max_den` by continued fractions.
fn approximate(x: f64, max_den: i64) -> Rat {
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        let ai = a as i64;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (r - a).abs() < 1e-12 {
            break;
        }
        r = 1.0 / (r - a);
    }
    Rat::new(h1.into(), k1.max(1).into())
}

/// Outcome of one fuzz case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzCase {
    pub index: usize,
    pub description: String,
    pub passed: bool,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub name: String,
    pub cases: Vec<FuzzCase>,
    pub failures: usize,
}

impl FuzzReport {
    fn new(name: &str, cases: Vec<FuzzCase>) -> Self {
        let failures = cases.iter().filter(|c| !c.passed).count();
        Self { name: name.to_string(), cases, failures }
    }
}

/// Product of random elementary integer operations: determinant ±1.
pub fn random_unimodular(d: usize, rng: &mut impl Rng) -> RationalMatrix {
    let mut m: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect();
    if d == 0 {
        return RationalMatrix::zeros(0, 0);
    }
    for _ in 0..3 * d {
        let (i, j) = (rng.gen_range(0..d), rng.gen_range(0..d));
        match rng.gen_range(0..4) {
            0 => m.swap(i, j),
            1 => m[i].iter_mut().for_each(|x| *x = -*x),
            _ if i != j => {
                let c = *[-2, -1, 1, 2].get(rng.gen_range(0..4)).expect("in range");
                let rj = m[j].clone();
                for (x, y) in m[i].iter_mut().zip(rj) {
                    *x += c * y;
                }
            }
            _ => {}
        }
    }
    RationalMatrix::from_i64(&m).expect("square")
}

/// Random invertible matrix with entries in {−2, …, 2} and halves.
pub fn random_invertible(n: usize, rng: &mut impl Rng) -> RationalMatrix {
    loop {
        let m = RationalMatrix::from_fn(n, n, |_, _| {
            let v = rat(rng.gen_range(-2..=2));
            if rng.gen_bool(0.2) {
                v / rat(2)
            } else {
                v
            }
        });
        if rank_exact(&m) == n {
            return m;
        }
    }
}

/// Compares a transformed tuple's table with the reference.
fn compare_tables(reference: &NumvarTable, other: &NumvarTable) -> Result<(), String> {
    other.check()?;
    let (d, n) = (reference.d(), reference.n());
    for dp in 0..=d {
        for np in 0..=n {
            let (a, b) = (reference.get(dp, np), other.get(dp, np));
            if a.is_exact() && b.upper != a.upper {
                return Err(format!("cell ({dp},{np}): upper {} against exact {}", b.upper, a.upper));
            }
            if b.lower > a.upper || a.lower > b.upper {
                return Err(format!("cell ({dp},{np}): disjoint intervals"));
            }
        }
    }
    let rad = |t: &FormTuple| t.d() - t.common_radical().dim();
    if rad(&reference.tuple) != rad(&other.tuple) {
        return Err("common radical dimension changed".into());
    }
    if n == 1 && numvar_single(&reference.tuple, d, 1).ok() != numvar_single(&other.tuple, d, 1).ok() {
        return Err("single-form value changed".into());
    }
    if n == 2 {
        let a = numvar_pair(&reference.tuple, d, 1).map_err(|e| e.to_string())?.upper;
        let b = numvar_pair(&other.tuple, d, 1).map_err(|e| e.to_string())?.upper;
        if a != b {
            return Err(format!("pencil rank {b} against {a}"));
        }
    }
    if reference.is_exact() {
        let k0 = gamma_graph(reference, &QMode::Diagonal).map_err(|e| e.to_string())?.kinks;
        let k1 = gamma_graph_bounds(other, &QMode::Diagonal).0.kinks;
        if k0 != k1 {
            return Err(format!("kinks {k1:?} against {k0:?}"));
        }
    }
    Ok(())
}

/// Random unimodular changes of variables plus invertible mixing of the
/// forms; each transformed table must match the reference.
pub fn invariance_fuzz(q: &FormTuple, seed: u64, cases: usize, config: &SearchConfig) -> FuzzReport {
    let reference = numvar_table(q, config);
    invariance_fuzz_against(&reference, seed, cases, config)
}

/// [`invariance_fuzz`] against a precomputed reference table.
pub fn invariance_fuzz_against(reference: &NumvarTable, seed: u64, cases: usize, config: &SearchConfig) -> FuzzReport {
    let q = &reference.tuple;
    let out = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let m = random_unimodular(q.d(), &mut rng);
            let g = random_invertible(q.n(), &mut rng);
            let t = q.compose(&m).mix_matrix(&g);
            let cfg = SearchConfig { seed: config.seed ^ i as u64, ..*config };
            let table = numvar_table(&t, &cfg);
            let result = compare_tables(reference, &table);
            FuzzCase {
                index: i,
                description: format!("M = {m:?}, G = {g:?}"),
                passed: result.is_ok(),
                detail: result.err(),
            }
        })
        .collect();
    FuzzReport::new("invariance", out)
}

/// rank(M·H·Mᵀ) ≥ rank H − 2(d − d′) for symmetric H and full-rank d′ × d M.
pub fn sylvester_fuzz(seed: u64, cases: usize) -> FuzzReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = (0..cases)
        .map(|i| {
            let d = rng.gen_range(1..=6);
            let dp = rng.gen_range(0..=d);
            // Low-rank symmetric H as a sum of ± rank-one terms.
            let terms = rng.gen_range(0..=d);
            let mut h = RationalMatrix::zeros(d, d);
            for _ in 0..terms {
                let v: Vec<Rat> = (0..d).map(|_| rat(rng.gen_range(-2..=2))).collect();
                let sign = rat(if rng.gen_bool(0.5) { 1 } else { -1 });
                let outer = RationalMatrix::from_fn(d, d, |a, b| &sign * &v[a] * &v[b]);
                h = h.add(&outer);
            }
            let m = loop {
                let m = RationalMatrix::from_fn(dp, d, |_, _| rat(rng.gen_range(-3..=3)));
                if rank_exact(&m) == dp {
                    break m;
                }
            };
            let (r, rr) = (rank_exact(&h), rank_exact(&m.mul(&h).mul(&m.transpose())));
            let ok = rr + 2 * (d - dp) >= r;
            FuzzCase {
                index: i,
                description: format!("d = {d}, d' = {dp}, rank H = {r}, rank MHM^T = {rr}"),
                passed: ok,
                detail: (!ok).then(|| "rank dropped by more than 2(d - d')".to_string()),
            }
        })
        .collect();
    FuzzReport::new("sylvester", out)
}

/// Checks one zero-block decomposition: B·A·B′ equals the transformed
/// matrix, B and B′ are invertible, the trailing block vanishes and the
/// number of pivots is at most the generic rank.
pub fn check_zero_block(a: &LinearMatrix, seed: u64) -> Result<usize, String> {
    let z = zero_block_normal_form(a);
    if a.rows() > 0 && z.b.det().is_zero() {
        return Err("B is singular".into());
    }
    if a.cols() > 0 && z.b_prime.det().is_zero() {
        return Err("B' is singular".into());
    }
    if a.left_mul(&z.b).right_mul(&z.b_prime) != z.transformed {
        return Err("B A B' differs from the transformed matrix".into());
    }
    for i in z.steps..a.rows() {
        for j in z.steps..a.cols() {
            if z.transformed.entry(i, j).iter().any(|x| !x.is_zero()) {
                return Err(format!("entry ({i},{j}) of the trailing block is nonzero"));
            }
        }
    }
    let r = generic_rank(a, seed, DEFAULT_RANK_TRIALS);
    let rt = generic_rank(&z.transformed, seed ^ 1, DEFAULT_RANK_TRIALS);
    if r != rt {
        return Err(format!("generic rank changed from {r} to {rt}"));
    }
    if z.steps > r {
        return Err(format!("{} pivots exceed generic rank {r}", z.steps));
    }
    Ok(r)
}

pub fn random_linear_matrix(rng: &mut impl Rng) -> LinearMatrix {
    let (rows, cols, nv) = (rng.gen_range(1..=5), rng.gen_range(1..=5), rng.gen_range(1..=4));
    let density = rng.gen_range(0.15..0.8);
    let coeffs: Vec<Vec<Vec<i64>>> = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| (0..nv).map(|_| if rng.gen_bool(density) { rng.gen_range(-3..=3) } else { 0 }).collect())
                .collect()
        })
        .collect();
    LinearMatrix::from_i64(nv, &coeffs).expect("rectangular")
}

pub fn zero_block_fuzz(seed: u64, cases: usize) -> FuzzReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = (0..cases)
        .map(|i| {
            let a = random_linear_matrix(&mut rng);
            let res = check_zero_block(&a, seed ^ i as u64);
            FuzzCase {
                index: i,
                description: format!("{}x{} in {} variables", a.rows(), a.cols(), a.nvars()),
                passed: res.is_ok(),
                detail: res.err(),
            }
        })
        .collect();
    FuzzReport::new("zero-block", out)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Column-submatrix rank test for a diagonal tuple with coefficient matrix
/// `a` (n rows, d columns): for each 1 ≤ n′ ≤ n, every choice of
/// ⌊d − n′d/n⌋ + 1 columns must have rank ≥ n − n′ + 1.
pub fn diagonal_rank_criterion(a: &[Vec<i64>]) -> bool {
    let n = a.len();
    let d = a.first().map_or(0, Vec::len);
    let m = RationalMatrix::from_i64(a).expect("rectangular");
    for np in 1..=n {
        let k = (d * n - np * d) / n + 1;
        if k > d {
            continue;
        }
        for cols in subsets(d, k) {
            if rank_exact(&m.select(&(0..n).collect::<Vec<_>>(), &cols)) < n - np + 1 {
                return false;
            }
        }
    }
    true
}

/// Random diagonal tuples: the certified non-degeneracy verdict against
/// [`diagonal_rank_criterion`].
pub fn diagonal_fuzz(seed: u64, cases: usize, config: &SearchConfig) -> FuzzReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Vec<Vec<i64>>> = (0..cases)
        .map(|_| {
            let (d, n) = (rng.gen_range(1..=5), rng.gen_range(1..=3));
            let zero_p = rng.gen_range(0.0..0.6);
            (0..n)
                .map(|_| (0..d).map(|_| if rng.gen_bool(zero_p) { 0 } else { rng.gen_range(-3..=3) }).collect())
                .collect()
        })
        .collect();
    let out = inputs
        .into_par_iter()
        .enumerate()
        .map(|(i, a)| {
            let table = numvar_table(&catalog::diagonal(&a), config);
            let expected = diagonal_rank_criterion(&a);
            let got = classify_bounds(&table).nondegenerate;
            FuzzCase {
                index: i,
                description: format!("{a:?}"),
                passed: got == Some(expected),
                detail: (got != Some(expected)).then(|| format!("classify gave {got:?}, criterion {expected}")),
            }
        })
        .collect();
    FuzzReport::new("diagonal", out)
}

/// `W,J` rows.
pub fn counts_csv(report: &CountReport) -> String {
    let mut out = String::from("W,J\n");
    for (w, j) in &report.counts {
        out.push_str(&format!("{w},{j}\n"));
    }
    out
}
