//! Table construction: exact classes, rigorous bounds, structured witnesses,
//! then randomized flags and a numeric alternating search whose output is
//! rounded and verified exactly.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::bounds::{apply_lower_bounds, apply_single_form_uppers, coefficient_pool, propagate, single_form_value};
use super::exact::{self, DIAGONAL_MAX_D};
use super::pencil::{approximants, min_pencil_rank};
use super::{admissible_coefficients, verify_witness, CertifiedValue, FlagWitness, Level, NumvarTable, SearchConfig};
use crate::forms::{CoefficientSubspace, FormTuple};
use crate::linalg::{dot, kernel, rat, unit, Rat, RationalMatrix, Subspace};

/// Largest d for which all coordinate flags are enumerated.
const COORDINATE_MAX_D: usize = 8;
const RANDOM_CHUNKS: usize = 32;
const ITERATIONS: usize = 2000;

pub(super) struct Cell {
    pub lower: usize,
    pub lower_by: String,
    pub upper: usize,
    pub upper_by: String,
    pub witness: Option<FlagWitness>,
    key: Option<String>,
}

/// Working state of the table.
pub(super) struct Grid {
    pub d: usize,
    pub n: usize,
    pub cells: Vec<Vec<Cell>>,
}

impl Grid {
    fn new(q: &FormTuple) -> Self {
        let (d, n) = (q.d(), q.n());
        let cells = (0..=d)
            .map(|dp| {
                (0..=n)
                    .map(|np| {
                        let w = FlagWitness {
                            h: Subspace::coordinate(d, &(0..dp).collect::<Vec<_>>()),
                            u: Subspace::zero(d),
                            s: CoefficientSubspace(Subspace::coordinate(n, &(0..np).collect::<Vec<_>>())),
                        };
                        Cell {
                            lower: 0,
                            lower_by: "none".into(),
                            upper: dp,
                            upper_by: "trivial".into(),
                            key: Some(w.serialized()),
                            witness: Some(w),
                        }
                    })
                    .collect()
            })
            .collect();
        Self { d, n, cells }
    }

    pub fn raise(&mut self, dp: usize, np: usize, v: usize, by: &str) -> bool {
        let c = &mut self.cells[dp][np];
        if v <= c.lower {
            return false;
        }
        debug_assert!(v <= c.upper, "lower bound {v} from {by} exceeds upper {} at ({dp},{np})", c.upper);
        c.lower = v.min(c.upper);
        c.lower_by = by.to_string();
        true
    }

    /// Offers a verified witness; keeps the smaller bound, then the smaller
    /// serialization.
    pub fn offer(&mut self, dp: usize, np: usize, w: FlagWitness, by: &str) -> bool {
        let c = &mut self.cells[dp][np];
        let l = w.bound();
        if l > c.upper {
            return false;
        }
        let w = w.canonical();
        let key = w.serialized();
        let better = l < c.upper || c.key.as_ref().is_none_or(|k| key < *k);
        if better {
            debug_assert!(l >= c.lower, "witness {l} from {by} below lower {} at ({dp},{np})", c.lower);
            c.upper = l;
            c.upper_by = by.to_string();
            c.witness = Some(w);
            c.key = Some(key);
        }
        better
    }

    /// Upper bound without a witness (from a closed-form solver or a
    /// derivation from such a bound).
    pub fn lower_upper(&mut self, dp: usize, np: usize, v: usize, by: &str) -> bool {
        let c = &mut self.cells[dp][np];
        if v >= c.upper {
            return false;
        }
        c.upper = v;
        c.upper_by = by.to_string();
        c.witness = None;
        c.key = None;
        true
    }

    fn apply(&mut self, dp: usize, np: usize, cv: CertifiedValue) {
        self.raise(dp, np, cv.lower, &cv.lower_by);
        match cv.witness {
            Some(w) => {
                self.offer(dp, np, w, &cv.upper_by);
            }
            None => {
                self.lower_upper(dp, np, cv.upper, &cv.upper_by);
            }
        }
    }

    fn open_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for dp in 0..=self.d {
            for np in 0..=self.n {
                let c = &self.cells[dp][np];
                if c.lower < c.upper {
                    out.push((dp, np));
                }
            }
        }
        out
    }

    fn uppers(&self) -> Vec<Vec<usize>> {
        self.cells.iter().map(|r| r.iter().map(|c| c.upper).collect()).collect()
    }

    fn into_table(self, q: &FormTuple, exact_only: bool) -> NumvarTable {
        let entries = self
            .cells
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|c| CertifiedValue {
                        level: if c.lower == c.upper {
                            Level::Exact
                        } else if exact_only {
                            Level::WitnessUb
                        } else {
                            Level::Probabilistic
                        },
                        lower: c.lower,
                        upper: c.upper,
                        upper_by: c.upper_by,
                        lower_by: c.lower_by,
                        witness: c.witness,
                    })
                    .collect()
            })
            .collect();
        NumvarTable { tuple: q.clone(), entries }
    }
}

fn cell_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut x = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    x ^= x >> 31;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^ (x >> 29)
}

pub(super) fn build_table(q: &FormTuple, config: &SearchConfig) -> NumvarTable {
    let (d, n) = (q.d(), q.n());
    let mut grid = Grid::new(q);
    exact_classes(q, &mut grid);
    for dp in 0..=d {
        for np in 0..=n {
            if let Some(w) = exact::kernel_witness(q, dp, np) {
                grid.offer(dp, np, w, "kernel");
            }
        }
    }
    grid.offer(d, n, exact::radical_witness(q), "radical");
    apply_lower_bounds(q, &mut grid, config.seed);
    apply_single_form_uppers(q, &mut grid, config.seed);
    propagate(&mut grid);

    if !grid.open_cells().is_empty() {
        let pool = vector_pool(q, config.seed);
        if d <= COORDINATE_MAX_D {
            coordinate_flags(q, &mut grid);
        }
        structured_flags(q, &pool, &mut grid, config.seed);
        propagate(&mut grid);
        if config.budget.random_flags > 0 && !grid.open_cells().is_empty() {
            random_flags(q, &pool, &mut grid, config);
            propagate(&mut grid);
        }
        if config.budget.restarts > 0 && !grid.open_cells().is_empty() {
            numeric_search(q, &mut grid, config);
            propagate(&mut grid);
        }
    }
    grid.into_table(q, config.budget.is_exact_only())
}

fn exact_classes(q: &FormTuple, grid: &mut Grid) {
    let mut tables = Vec::new();
    if let Some(t) = exact::ack_table(q) {
        tables.push(t);
    }
    if q.n() == 1 {
        tables.push(exact::single_table(q));
    }
    if q.is_diagonal() && q.d() <= DIAGONAL_MAX_D && q.n() > 0 {
        tables.push(exact::diagonal_table(q));
    }
    for t in tables {
        for (dp, row) in t.into_iter().enumerate() {
            for (np, cv) in row.into_iter().enumerate() {
                grid.apply(dp, np, cv);
            }
        }
    }
    if q.n() == 2 {
        let (value, w) = exact::pencil_cell(q);
        grid.raise(q.d(), 1, value, "pair");
        match w {
            Some(w) => {
                grid.offer(q.d(), 1, w, "pair");
            }
            None => {
                grid.lower_upper(q.d(), 1, value, "pair");
            }
        }
    }
}

fn mask_indices(mask: usize, d: usize) -> Vec<usize> {
    (0..d).filter(|&j| mask >> j & 1 == 1).collect()
}

/// Offers the witnesses (H, U, first n′ vectors of S) for n′ ≤ dim S.
fn offer_all(grid: &mut Grid, h: &Subspace, u: &Subspace, s: &Subspace, by: &str) {
    let (dp, l) = (h.dim(), h.dim() - u.dim());
    for np in 1..=s.dim().min(grid.n) {
        if l <= grid.cells[dp][np].upper && l >= grid.cells[dp][np].lower {
            let w = FlagWitness {
                h: h.clone(),
                u: u.clone(),
                s: CoefficientSubspace(Subspace::span(s.ambient(), &s.basis()[..np])),
            };
            grid.offer(dp, np, w, by);
        }
    }
}

fn coordinate_flags(q: &FormTuple, grid: &mut Grid) {
    let d = q.d();
    for hmask in 1usize..1 << d {
        let hd = hmask.count_ones() as usize;
        let h = Subspace::coordinate(d, &mask_indices(hmask, d));
        let mut umask = hmask;
        while umask > 0 {
            let l = hd - umask.count_ones() as usize;
            if l < grid.cells[hd][grid.n].upper || l <= grid.cells[hd][1.min(grid.n)].upper {
                let u = Subspace::coordinate(d, &mask_indices(umask, d));
                let s = admissible_coefficients(q, &u, &h);
                offer_all(grid, &h, &u, &s, "coordinate-flags");
            }
            umask = (umask - 1) & hmask;
        }
    }
}

/// Directions in R^d: units, kernels of pool members, the radical, and
/// kernels at pencil minimizers.
fn vector_pool(q: &FormTuple, seed: u64) -> Vec<Vec<Rat>> {
    let (d, n) = (q.d(), q.n());
    let mut pool: Vec<Vec<Rat>> = (0..d).map(|i| unit(d, i)).collect();
    let coeffs = coefficient_pool(n, seed);
    for c in &coeffs {
        pool.extend(kernel(&q.combination(c)).basis().iter().cloned());
    }
    pool.extend(q.common_radical().basis().iter().cloned());
    pool.extend(radical_chain(q, &coeffs));
    if n >= 2 && d <= 6 {
        for i in 0..n.min(4) {
            for j in i + 1..n.min(4) {
                if let Some((a, b)) = min_pencil_rank(q.hessian(i), q.hessian(j)).argmin {
                    let mut c = vec![Rat::zero(); n];
                    c[i] = a;
                    c[j] = b;
                    pool.extend(kernel(&q.combination(&c)).basis().iter().cloned());
                }
            }
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    pool.retain(|v| {
        !v.iter().all(Zero::is_zero) && seen.insert(Subspace::span(d, std::slice::from_ref(v)).basis().to_vec())
    });
    pool
}

/// Bases of iterated radicals: K ∩ (B_c K)^⊥ starting from kernels of single
/// combinations, two levels deep.
fn radical_chain(q: &FormTuple, coeffs: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    const LAYER_CAP: usize = 48;
    let d = q.d();
    let hess: Vec<_> = coeffs.iter().map(|c| q.combination(c)).collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut layer: Vec<Subspace> = Vec::new();
    for b in &hess {
        let k = kernel(b);
        if k.dim() > 0 && k.dim() < d && seen.insert(k.canonical().basis().to_vec()) {
            layer.push(k);
        }
    }
    let mut out = Vec::new();
    for _ in 0..2 {
        let mut next = Vec::new();
        for k in layer.iter().take(LAYER_CAP) {
            for b in &hess {
                let images: Vec<Vec<Rat>> = k.basis().iter().map(|x| b.mul_vec(x)).collect();
                let r = k.intersection(&Subspace::span(d, &images).orthogonal_complement());
                if r.dim() > 0 && r.dim() < k.dim() && seen.insert(r.canonical().basis().to_vec()) {
                    out.extend(r.basis().iter().cloned());
                    next.push(r);
                }
            }
        }
        layer = next;
    }
    out
}

/// Largest H with U ⊆ H and every B_c u orthogonal to H, when U is totally
/// isotropic for S.
fn orthogonal_hull(q: &FormTuple, u: &Subspace, s: &Subspace) -> Option<Subspace> {
    let d = q.d();
    let mut images = Vec::new();
    for c in s.basis() {
        let b = q.combination(c);
        for x in u.basis() {
            let bx = b.mul_vec(x);
            for y in u.basis() {
                if !dot(&bx, y).is_zero() {
                    return None;
                }
            }
            images.push(bx);
        }
    }
    Some(Subspace::span(d, &images).orthogonal_complement())
}

/// Witnesses (H, U, S) for every dim H between dim U and dim W.
fn hull_witnesses(q: &FormTuple, u: &Subspace, s: &Subspace) -> Vec<FlagWitness> {
    let Some(w) = orthogonal_hull(q, u, s) else { return Vec::new() };
    (u.dim()..=w.dim())
        .filter_map(|dp| {
            u.extend_from(w.basis(), dp).map(|h| FlagWitness { h, u: u.clone(), s: CoefficientSubspace(s.clone()) })
        })
        .collect()
}

fn structured_flags(q: &FormTuple, pool: &[Vec<Rat>], grid: &mut Grid, seed: u64) {
    let (d, n) = (q.d(), q.n());
    let coeffs = coefficient_pool(n, seed);
    let mut us: Vec<Subspace> = pool.iter().map(|v| Subspace::span(d, std::slice::from_ref(v))).collect();
    for c in &coeffs {
        let k = kernel(&q.combination(c));
        if k.dim() > 0 {
            us.push(k);
        }
    }
    let mut ss: Vec<Subspace> = coeffs.iter().map(|c| Subspace::span(n, std::slice::from_ref(c))).collect();
    for i in 0..n.min(8) {
        for j in i + 1..n.min(8) {
            ss.push(Subspace::coordinate(n, &[i, j]));
        }
    }
    for u in &us {
        // Largest S on which U is totally isotropic.
        let iso = admissible_coefficients(q, u, u);
        offer_all(grid, u, u, &iso, "pool-flags");
        for s in ss.iter().chain(std::iter::once(&iso)) {
            for w in hull_witnesses(q, u, s) {
                offer_all(grid, &w.h, &w.u, &w.s, "pool-flags");
            }
        }
        // U with H extended greedily from the pool.
        for dp in u.dim() + 1..=d {
            if let Some(h) = u.extend_from(pool, dp) {
                let s = admissible_coefficients(q, u, &h);
                offer_all(grid, &h, u, &s, "pool-flags");
            }
        }
    }
}

fn random_combination(rng: &mut ChaCha8Rng, pool: &[Vec<Rat>]) -> Vec<Rat> {
    let a = &pool[rng.gen_range(0..pool.len())];
    if rng.gen_bool(0.5) {
        return a.clone();
    }
    let b = &pool[rng.gen_range(0..pool.len())];
    let t = rat(rng.gen_range(-2..=2));
    a.iter().zip(b).map(|(x, y)| x + &t * y).collect()
}

/// Candidates from one chunk of random flags, filtered against a snapshot of
/// the upper bounds.
fn random_chunk(
    q: &FormTuple,
    pool: &[Vec<Rat>],
    coeffs: &[Vec<Rat>],
    count: usize,
    seed: u64,
    uppers: &[Vec<usize>],
) -> Vec<(String, FlagWitness)> {
    let (d, n) = (q.d(), q.n());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let keep = |w: FlagWitness, out: &mut Vec<(String, FlagWitness)>| {
        let (dp, np) = (w.h.dim(), w.s.dim());
        if np > 0 && w.bound() < uppers[dp][np] {
            out.push(("random-flags".to_string(), w));
        }
    };
    for _ in 0..count {
        let k = 1 + (rng.gen_range(0..d) * rng.gen_range(0..d)) / d.max(1);
        let vs: Vec<Vec<Rat>> = (0..k).map(|_| random_combination(&mut rng, pool)).collect();
        let u = Subspace::span(d, &vs);
        let mode = rng.gen_range(0..3);
        if mode < 2 {
            let s = if mode == 0 {
                admissible_coefficients(q, &u, &u)
            } else {
                let j = rng.gen_range(1..=n);
                let cs: Vec<Vec<Rat>> = (0..j).map(|_| random_combination(&mut rng, coeffs)).collect();
                Subspace::span(n, &cs)
            };
            if s.dim() == 0 {
                continue;
            }
            for w in hull_witnesses(q, &u, &s) {
                keep(w, &mut out);
            }
        } else {
            let dp = rng.gen_range(u.dim()..=d);
            let extra: Vec<Vec<Rat>> = (0..2 * d).map(|_| random_combination(&mut rng, pool)).collect();
            if let Some(h) = u.extend_from(&extra, dp) {
                let s = admissible_coefficients(q, &u, &h);
                for np in 1..=s.dim() {
                    keep(
                        FlagWitness {
                            h: h.clone(),
                            u: u.clone(),
                            s: CoefficientSubspace(Subspace::span(n, &s.basis()[..np])),
                        },
                        &mut out,
                    );
                }
            }
        }
    }
    out
}

fn random_flags(q: &FormTuple, pool: &[Vec<Rat>], grid: &mut Grid, config: &SearchConfig) {
    let coeffs = coefficient_pool(q.n(), config.seed);
    let total = config.budget.random_flags;
    let uppers = grid.uppers();
    let chunks: Vec<usize> =
        (0..RANDOM_CHUNKS).map(|i| total / RANDOM_CHUNKS + usize::from(i < total % RANDOM_CHUNKS)).collect();
    let found: Vec<Vec<(String, FlagWitness)>> = chunks
        .par_iter()
        .enumerate()
        .map(|(i, &count)| random_chunk(q, pool, &coeffs, count, cell_seed(config.seed, 0xF1A6, i as u64), &uppers))
        .collect();
    for (by, w) in found.into_iter().flatten() {
        let (dp, np) = (w.h.dim(), w.s.dim());
        if w.bound() >= grid.cells[dp][np].lower {
            grid.offer(dp, np, w, &by);
        }
    }
}

/// Forms as f64 matrices, scaled by one common factor so that coefficient
/// coordinates are unchanged.
fn float_hessians(q: &FormTuple) -> Vec<DMatrix<f64>> {
    let d = q.d();
    let mut hs: Vec<DMatrix<f64>> =
        (0..q.n()).map(|i| DMatrix::from_fn(d, d, |a, b| q.hessian(i).get(a, b).to_f64().unwrap_or(0.0))).collect();
    let scale = hs.iter().map(|h| h.amax()).fold(0.0, f64::max);
    if scale > 0.0 {
        for h in &mut hs {
            *h /= scale;
        }
    }
    hs
}

/// Eigenvectors for the k smallest eigenvalues, as columns.
fn smallest_eigvecs(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..m.nrows()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    DMatrix::from_fn(m.nrows(), k, |i, j| e.eigenvectors[(i, idx[j])])
}

fn random_orthonormal(rng: &mut ChaCha8Rng, d: usize, k: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, k.max(1), |_, _| rng.gen_range(-1.0..1.0));
    let q = m.qr().q();
    q.columns(0, k).into_owned()
}

/// Mixed form c ↦ Σ cᵢBᵢ.
fn mix(hs: &[DMatrix<f64>], c: nalgebra::DVectorView<f64>) -> DMatrix<f64> {
    let d = hs[0].nrows();
    let mut b = DMatrix::zeros(d, d);
    for (h, &ci) in hs.iter().zip(c.iter()) {
        b += h * ci;
    }
    b
}

struct FlagState {
    h: DMatrix<f64>,
    u: DMatrix<f64>,
    s: DMatrix<f64>,
}

/// Coefficient vectors minimizing Σ (uᵀB_c h)² for fixed U, H.
fn best_coefficients(hs: &[DMatrix<f64>], u: &DMatrix<f64>, h: &DMatrix<f64>, np: usize) -> DMatrix<f64> {
    let (k, dp) = (u.ncols(), h.ncols());
    let mut phi = DMatrix::zeros(k * dp, hs.len());
    for (i, bi) in hs.iter().enumerate() {
        let m = u.transpose() * bi * h;
        for a in 0..k {
            for b in 0..dp {
                phi[(a * dp + b, i)] = m[(a, b)];
            }
        }
    }
    smallest_eigvecs(&(phi.transpose() * &phi), np)
}

/// Unknowns of the least-squares problem: U (d × k), E (d × (d′ − k)) with
/// H = [U | E], and optionally S (n × n′).
struct Layout {
    d: usize,
    n: usize,
    k: usize,
    dp: usize,
    np: usize,
    joint_s: bool,
}

impl Layout {
    fn params(&self) -> usize {
        self.d * self.dp + if self.joint_s { self.n * self.np } else { 0 }
    }

    fn h_col(&self, b: usize, i: usize) -> usize {
        b * self.d + i
    }

    fn s_col(&self, j: usize, i: usize) -> usize {
        self.d * self.dp + j * self.n + i
    }

    fn unpack(&self, x: &DVector<f64>, s_fixed: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let h = DMatrix::from_fn(self.d, self.dp, |i, b| x[self.h_col(b, i)]);
        let s =
            if self.joint_s { DMatrix::from_fn(self.n, self.np, |i, j| x[self.s_col(j, i)]) } else { s_fixed.clone() };
        (h, s)
    }

    fn pack(&self, h: &DMatrix<f64>, s: &DMatrix<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.params());
        for b in 0..self.dp {
            for i in 0..self.d {
                x[self.h_col(b, i)] = h[(i, b)];
            }
        }
        if self.joint_s {
            for j in 0..self.np {
                for i in 0..self.n {
                    x[self.s_col(j, i)] = s[(i, j)];
                }
            }
        }
        x
    }

    /// Residuals uₐᵀB(sⱼ)h_b plus orthonormality of H (and S), with the
    /// Jacobian.
    fn residual(
        &self,
        hs: &[DMatrix<f64>],
        h: &DMatrix<f64>,
        s: &DMatrix<f64>,
        jac: bool,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let (d, k, dp, np) = (self.d, self.k, self.dp, self.np);
        let mut rows = np * k * dp + dp * (dp + 1) / 2;
        if self.joint_s {
            rows += np * (np + 1) / 2;
        }
        let mut r = DVector::zeros(rows);
        let mut jm = if jac { DMatrix::zeros(rows, self.params()) } else { DMatrix::zeros(0, 0) };
        let mut row = 0;
        for j in 0..np {
            let bj = mix(hs, s.column(j));
            let bh = &bj * h;
            let bhi: Vec<DMatrix<f64>> =
                if jac && self.joint_s { hs.iter().map(|bi| bi * h).collect() } else { Vec::new() };
            for a in 0..k {
                for b in 0..dp {
                    r[row] = h.column(a).dot(&bh.column(b));
                    if jac {
                        for i in 0..d {
                            jm[(row, self.h_col(a, i))] += bh[(i, b)];
                            jm[(row, self.h_col(b, i))] += bh[(i, a)];
                        }
                        if self.joint_s {
                            for (t, bi) in bhi.iter().enumerate() {
                                jm[(row, self.s_col(j, t))] = h.column(a).dot(&bi.column(b));
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
        for p in 0..dp {
            for q in p..dp {
                r[row] = h.column(p).dot(&h.column(q)) - if p == q { 1.0 } else { 0.0 };
                if jac {
                    for i in 0..d {
                        jm[(row, self.h_col(p, i))] += h[(i, q)];
                        jm[(row, self.h_col(q, i))] += h[(i, p)];
                    }
                }
                row += 1;
            }
        }
        if self.joint_s {
            for p in 0..np {
                for q in p..np {
                    r[row] = s.column(p).dot(&s.column(q)) - if p == q { 1.0 } else { 0.0 };
                    if jac {
                        for i in 0..self.n {
                            jm[(row, self.s_col(p, i))] += s[(i, q)];
                            jm[(row, self.s_col(q, i))] += s[(i, p)];
                        }
                    }
                    row += 1;
                }
            }
        }
        (r, jm)
    }
}

/// Largest number of coefficient unknowns optimized jointly with H.
const JOINT_S_MAX: usize = 48;

/// Levenberg–Marquardt on Σ (uᵀB_c h)² with H = [U | E], dim U = d′ − l.
/// Large coefficient spaces are eliminated by an exact S-step instead.
fn flag_run(hs: &[DMatrix<f64>], dp: usize, np: usize, l: usize, rng: &mut ChaCha8Rng) -> Option<FlagState> {
    let (n, d) = (hs.len(), hs[0].nrows());
    let lay = Layout { d, n, k: dp - l, dp, np, joint_s: n * np <= JOINT_S_MAX };
    let mut h = random_orthonormal(rng, d, dp);
    let mut s = best_coefficients(hs, &h.columns(0, lay.k).into_owned(), &h, np);
    let mut x = lay.pack(&h, &s);
    let mut mu = 1e-3;
    let (mut r, mut jm) = lay.residual(hs, &h, &s, true);
    let mut cost = r.norm_squared();
    let mut checkpoint = cost;
    for it in 0..ITERATIONS {
        if cost < 1e-28 {
            break;
        }
        // Degenerate zeros converge only linearly; a run that is not
        // shrinking is at a positive local minimum.
        if it % 100 == 99 {
            if cost > 1e-6 && cost > 0.25 * checkpoint {
                break;
            }
            checkpoint = cost;
        }
        let jt = jm.transpose();
        let mut a = &jt * &jm;
        for i in 0..a.nrows() {
            a[(i, i)] += mu * (1.0 + a[(i, i)]);
        }
        let Some(chol) = a.cholesky() else {
            mu *= 4.0;
            continue;
        };
        let step = chol.solve(&(-(&jt * &r)));
        let xt = &x + step;
        let (ht, st) = lay.unpack(&xt, &s);
        let (rt, _) = lay.residual(hs, &ht, &st, false);
        let ct = rt.norm_squared();
        if ct < cost {
            mu = (mu / 3.0).max(1e-12);
            h = ht;
            s = st;
            if !lay.joint_s {
                s = best_coefficients(hs, &h.columns(0, lay.k).into_owned(), &h, np);
            }
            x = lay.pack(&h, &s);
            (r, jm) = lay.residual(hs, &h, &s, true);
            cost = r.norm_squared();
        } else {
            mu *= 4.0;
            if mu > 1e12 {
                break;
            }
        }
    }
    // Rounding is verified exactly, so a loosely converged flag is still
    // worth trying.
    (cost < 1e-10).then(|| {
        let qh = h.clone().qr().q();
        let u = qh.columns(0, lay.k).into_owned();
        let qs = if np > 0 { s.clone().qr().q() } else { s.clone() };
        FlagState { u, h: qh, s: qs }
    })
}

/// Tolerances tried when rounding; near degenerate solutions the numeric
/// flag is only accurate to a few digits.
const ROUNDING_TOLERANCES: [f64; 5] = [1e-7, 1e-4, 1e-2, 3e-2, 1e-1];

fn rationalize(x: f64, tol: f64) -> Option<Rat> {
    if x.abs() < tol {
        return Some(Rat::zero());
    }
    let r = Rat::from_float(x)?;
    approximants(&r, 10_000).into_iter().find(|a| (a.to_f64().unwrap_or(f64::NAN) - x).abs() < tol)
}

/// Rounds the column span of `m` through a numeric RREF with greedy pivots.
fn round_span(m: &DMatrix<f64>, tol: f64) -> Option<Subspace> {
    let (amb, k) = (m.nrows(), m.ncols());
    let mut r = m.transpose();
    let mut row = 0;
    for col in 0..amb {
        if row == k {
            break;
        }
        let (best, val) =
            (row..k).map(|i| (i, r[(i, col)].abs())).fold((row, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if val < 1e-6 {
            continue;
        }
        r.swap_rows(row, best);
        let p = r[(row, col)];
        for j in 0..amb {
            r[(row, j)] /= p;
        }
        for i in 0..k {
            if i != row {
                let f = r[(i, col)];
                for j in 0..amb {
                    r[(i, j)] -= f * r[(row, j)];
                }
            }
        }
        row += 1;
    }
    if row < k {
        return None;
    }
    let rows: Option<Vec<Vec<Rat>>> = (0..k).map(|i| (0..amb).map(|j| rationalize(r[(i, j)], tol)).collect()).collect();
    let s = Subspace::span(amb, &rows?);
    (s.dim() == k).then_some(s)
}

/// Exact candidates from a converged numeric flag.
fn rounded_candidates(q: &FormTuple, st: &FlagState, dp: usize, np: usize) -> Vec<FlagWitness> {
    let mut out = Vec::new();
    for tol in ROUNDING_TOLERANCES {
        out.extend(rounded_at(q, st, dp, np, tol));
    }
    out
}

fn rounded_at(q: &FormTuple, st: &FlagState, dp: usize, np: usize, tol: f64) -> Vec<FlagWitness> {
    let d = q.d();
    let (u, h, s) = (round_span(&st.u, tol), round_span(&st.h, tol), round_span(&st.s, tol));
    let mut out = Vec::new();
    let trunc = |s: &Subspace| CoefficientSubspace(Subspace::span(s.ambient(), &s.basis()[..np]));
    if let (Some(u), Some(h)) = (&u, &h) {
        if h.contains_subspace(u) {
            let a = admissible_coefficients(q, u, h);
            if a.dim() >= np {
                out.push(FlagWitness { h: h.clone(), u: u.clone(), s: trunc(&a) });
            }
        }
    }
    if let (Some(u), Some(s)) = (&u, &s) {
        out.extend(hull_witnesses(q, u, s).into_iter().filter(|w| w.h.dim() == dp));
    }
    if let (Some(h), Some(s)) = (&h, &s) {
        // U = radical of the S-forms restricted to H.
        let hb = h.basis();
        let mut rows = Vec::new();
        for c in s.basis() {
            let b = q.combination(c);
            for x in hb {
                let bx = b.mul_vec(x);
                rows.push(hb.iter().map(|y| dot(y, &bx)).collect::<Vec<_>>());
            }
        }
        let ker = kernel(&RationalMatrix::from_rows(rows).expect("rect"));
        let uvecs: Vec<Vec<Rat>> = ker
            .basis()
            .iter()
            .map(|y| (0..d).map(|j| hb.iter().zip(y).map(|(v, t)| &v[j] * t).sum()).collect())
            .collect();
        out.push(FlagWitness { h: h.clone(), u: Subspace::span(d, &uvecs), s: CoefficientSubspace(s.clone()) });
    }
    if dp == d {
        if let Some(u) = &u {
            let h = Subspace::full(d);
            let a = admissible_coefficients(q, u, &h);
            if a.dim() >= np {
                out.push(FlagWitness { h, u: u.clone(), s: trunc(&a) });
            }
        }
    }
    out.retain(|w| verify_witness(q, dp, np, w).is_ok());
    out
}

/// Outcome of the numeric search on one cell.
#[derive(Default)]
struct CellResult {
    witness: Option<FlagWitness>,
    /// Witness-free bound from the inertia of a rounded combination (n′ = 1).
    inertia: Option<usize>,
}

/// Best witness found for one cell below `upper`.
fn search_cell(
    q: &FormTuple,
    hs: &[DMatrix<f64>],
    dp: usize,
    np: usize,
    lower: usize,
    mut upper: usize,
    restarts: usize,
    seed: u64,
) -> CellResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CellResult::default();
    for _ in 0..restarts {
        if upper <= lower || upper == 0 {
            break;
        }
        let l = upper - 1;
        if let Some(st) = flag_run(hs, dp, np, l, &mut rng) {
            let mut cands = rounded_candidates(q, &st, dp, np);
            cands.sort_by_key(|w| (w.bound(), w.canonical().serialized()));
            if let Some(w) = cands.into_iter().next().filter(|w| w.bound() < upper) {
                upper = w.bound();
                out.witness = Some(w);
                continue;
            }
            if np == 1 {
                for tol in ROUNDING_TOLERANCES {
                    let Some(c) = round_span(&st.s, tol) else { continue };
                    let v = single_form_value(q, &c.basis()[0], dp);
                    if v < upper {
                        upper = v;
                        out.inertia = Some(v);
                    }
                }
            }
        }
    }
    out
}

fn numeric_search(q: &FormTuple, grid: &mut Grid, config: &SearchConfig) {
    if q.n() == 0 || q.d() == 0 {
        return;
    }
    let hs = float_hessians(q);
    let open: Vec<(usize, usize, usize, usize)> = grid
        .open_cells()
        .into_iter()
        .filter(|&(dp, np)| dp > 0 && np > 0)
        .map(|(dp, np)| (dp, np, grid.cells[dp][np].lower, grid.cells[dp][np].upper))
        .collect();
    let found: Vec<CellResult> = open
        .par_iter()
        .map(|&(dp, np, lo, up)| {
            search_cell(q, &hs, dp, np, lo, up, config.budget.restarts, cell_seed(config.seed, dp as u64, np as u64))
        })
        .collect();
    for ((dp, np, _, _), r) in open.into_iter().zip(found) {
        if let Some(w) = r.witness {
            grid.offer(dp, np, w, "numeric-search");
        }
        if let Some(v) = r.inertia {
            grid.lower_upper(dp, np, v, "single-form");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::catalog::*;
    use crate::numvar::SearchBudget;

    fn exact_only() -> SearchConfig {
        SearchConfig { budget: SearchBudget::exact_only(), seed: 0 }
    }

    #[test]
    fn q2_table_closes() {
        let t = build_table(&q2(), &exact_only());
        t.check().unwrap();
        assert!(t.is_exact(), "{:?}", t.lowers());
        assert_eq!(t.uppers()[3], vec![0, 1, 3]);
        assert_eq!(t.uppers()[2], vec![0, 0, 1]);
        assert_eq!(t.uppers()[1], vec![0, 0, 0]);
    }

    #[test]
    fn q_infinity_table_closes() {
        let t = build_table(&q_infinity_example(), &exact_only());
        t.check().unwrap();
        assert!(t.is_exact(), "{:?} {:?}", t.lowers(), t.uppers());
        assert_eq!(t.uppers()[4], vec![0, 2, 4]);
        assert_eq!(t.uppers()[3], vec![0, 0, 1]);
        assert_eq!(t.uppers()[2], vec![0, 0, 0]);
    }

    #[test]
    fn rounding_recovers_rational_spans() {
        let m = DMatrix::from_row_slice(3, 1, &[0.5 / 1.5, 1.0 / 1.5, 0.0]);
        let s = round_span(&m, 1e-7).unwrap();
        assert!(s.contains(&[rat(1), rat(2), rat(0)]));
    }

    #[test]
    fn numeric_search_finds_rotated_witness() {
        // q1 in rotated coordinates: coordinate flags no longer see the
        // witnesses, pool and numeric search have to.
        let m = RationalMatrix::from_i64(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 2]]).unwrap();
        let q = q1().compose(&m);
        let cfg = SearchConfig { budget: SearchBudget { random_flags: 500, restarts: 30 }, seed: 7 };
        let t = build_table(&q, &cfg);
        t.check().unwrap();
        assert_eq!(t.uppers(), build_table(&q1(), &exact_only()).uppers());
    }
}
