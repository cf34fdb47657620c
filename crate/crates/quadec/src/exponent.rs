//! Decoupling exponents as exact piecewise-affine functions of s = 1/p.
//!
//! For q ≤ p,
//!
//! Γ_{q,p} = max over (d′, n′) of d′(1 − 1/p − 1/q) − 𝔫𝔳_{d′,n′}(1/2 − 1/p) − 2(n − n′)/p,
//!
//! and for q > p, Γ_{q,p} = Γ_{p,p} + d(1/p − 1/q). Each cell contributes an
//! affine branch in (s, t) = (1/p, 1/q). Open table cells make the exponent an
//! interval: the upper end uses lower bounds on 𝔫𝔳 and vice versa.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{format_rat, frac, parse_rat, rat, Rat, Subspace};
use crate::numvar::NumvarTable;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExponentError {
    #[error("invalid exponent {0}: expected a rational >= 2 or inf")]
    InvalidExponent(String),
    #[error("table cells {cells:?} are not certified")]
    UncertifiedTable { cells: Vec<(usize, usize)> },
    #[error("the forms are linearly dependent, so restriction fails for every finite p")]
    LinearlyDependentTuple,
    #[error("universal bounds are stated for q = p and q = 2 only")]
    UnsupportedQ,
    #[error("alpha must be at least 1")]
    InvalidAlpha,
}

/// A Lebesgue exponent in [2, ∞].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Exponent {
    Finite(Rat),
    Infinite,
}

impl Exponent {
    pub fn new(p: Rat) -> Result<Self, ExponentError> {
        if p < rat(2) {
            return Err(ExponentError::InvalidExponent(format_rat(&p)));
        }
        Ok(Exponent::Finite(p))
    }

    pub fn from_int(p: i64) -> Self {
        Self::new(rat(p)).expect("p >= 2")
    }

    /// s = 1/p, with s = 0 at p = ∞.
    pub fn reciprocal(&self) -> Rat {
        match self {
            Exponent::Finite(p) => p.recip(),
            Exponent::Infinite => Rat::zero(),
        }
    }

    pub fn from_reciprocal(s: &Rat) -> Self {
        if s.is_zero() {
            Exponent::Infinite
        } else {
            Exponent::Finite(s.recip())
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => f.write_str(&format_rat(p)),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = ExponentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if matches!(t, "inf" | "infinity" | "∞") {
            return Ok(Exponent::Infinite);
        }
        let p = parse_rat(t).ok_or_else(|| ExponentError::InvalidExponent(t.to_string()))?;
        Exponent::new(p)
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Where a branch comes from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchLabel {
    /// Cell (d′, n′) of the q ≤ p formula.
    Cell { d_prime: usize, n_prime: usize },
    /// Cell (d′, n′) continued to q > p by adding d(1/p − 1/q).
    Shifted { d_prime: usize, n_prime: usize },
    /// Exponent of a restriction to a subspace.
    Subspace,
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchLabel::Cell { d_prime, n_prime } => write!(f, "({d_prime},{n_prime})"),
            BranchLabel::Shifted { d_prime, n_prime } => write!(f, "({d_prime},{n_prime})*"),
            BranchLabel::Subspace => f.write_str("subspace"),
        }
    }
}

/// c₀ + c_p·(1/p) + c_q·(1/q).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineBranch {
    pub label: BranchLabel,
    #[serde(with = "rat_string")]
    pub c0: Rat,
    #[serde(with = "rat_string")]
    pub cp: Rat,
    #[serde(with = "rat_string")]
    pub cq: Rat,
}

mod rat_string {
    use super::*;
    pub fn serialize<S: serde::Serializer>(x: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(x))
    }
    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).ok_or_else(|| serde::de::Error::custom("bad rational"))
    }
}

impl AffineBranch {
    /// Branch of cell (d′, n′) with the given 𝔫𝔳 value (q ≤ p).
    pub fn cell(d: usize, n: usize, d_prime: usize, n_prime: usize, nv: usize) -> Self {
        let _ = d;
        let (dp, nv) = (rat(d_prime as i64), rat(nv as i64));
        AffineBranch {
            label: BranchLabel::Cell { d_prime, n_prime },
            c0: &dp - &nv / rat(2),
            cp: &nv - &dp - rat(2 * (n - n_prime) as i64),
            cq: -dp,
        }
    }

    /// The q > p continuation: the branch at t = s plus d(s − t).
    pub fn shifted(&self, d: usize) -> Self {
        let label = match self.label {
            BranchLabel::Cell { d_prime, n_prime } => BranchLabel::Shifted { d_prime, n_prime },
            ref other => other.clone(),
        };
        AffineBranch { label, c0: self.c0.clone(), cp: &self.cp + &self.cq + rat(d as i64), cq: -rat(d as i64) }
    }

    /// The restriction to q = p, written in 1/p alone.
    pub fn on_diagonal(&self) -> Self {
        AffineBranch { label: self.label.clone(), c0: self.c0.clone(), cp: &self.cp + &self.cq, cq: Rat::zero() }
    }

    pub fn eval(&self, s: &Rat, t: &Rat) -> Rat {
        &self.c0 + &self.cp * s + &self.cq * t
    }

    /// Same affine function of (s, t).
    pub fn same_function(&self, other: &Self) -> bool {
        self.c0 == other.c0 && self.cp == other.cp && self.cq == other.cq
    }

    /// Readable form, e.g. `3/2 - 3/p`.
    pub fn formula(&self) -> String {
        let mut out = format_rat(&self.c0);
        for (c, v) in [(&self.cp, "p"), (&self.cq, "q")] {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { '-' } else { '+' };
            let a = c.abs();
            if a.denom().is_one() {
                out.push_str(&format!(" {sign} {}/{v}", a.numer()));
            } else {
                out.push_str(&format!(" {sign} {}/({}{v})", a.numer(), a.denom()));
            }
        }
        out
    }
}

/// Γ with its certified range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaValue {
    #[serde(with = "rat_string")]
    pub lower: Rat,
    #[serde(with = "rat_string")]
    pub upper: Rat,
    /// Cells attaining the upper value.
    pub argmax: Vec<(usize, usize)>,
}

impl GammaValue {
    pub fn value(&self) -> Option<&Rat> {
        (self.lower == self.upper).then_some(&self.upper)
    }

    pub fn is_certified(&self) -> bool {
        self.lower == self.upper
    }
}

/// Which slice of the (1/p, 1/q) plane a graph follows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QMode {
    /// q = p.
    Diagonal,
    /// q fixed, p varying.
    Fixed(Exponent),
}

/// A maximal interval of p on which one affine function is the maximum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    /// Interval endpoints, from the smaller p.
    pub p_from: Exponent,
    pub p_to: Exponent,
    pub branch: AffineBranch,
    /// Every cell whose branch is this same function.
    pub labels: Vec<BranchLabel>,
}

/// Γ along a slice: the max of affine branches, p ∈ [2, ∞].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiecewiseExponent {
    pub mode: QMode,
    /// Branches that are strictly maximal somewhere, one per distinct function.
    pub branches: Vec<AffineBranch>,
    /// p-values where the active branch changes, ascending.
    pub kinks: Vec<Exponent>,
    pub pieces: Vec<Piece>,
}

/// Affine function a + b·s along a slice.
#[derive(Clone, Debug)]
struct Line {
    a: Rat,
    b: Rat,
    branch: AffineBranch,
    labels: Vec<BranchLabel>,
}

impl Line {
    fn at(&self, s: &Rat) -> Rat {
        &self.a + &self.b * s
    }
}

impl PiecewiseExponent {
    pub fn eval(&self, p: &Exponent) -> Rat {
        let s = p.reciprocal();
        let t = self.t_at(&s);
        self.pieces.iter().map(|pc| pc.branch.eval(&s, &t)).max().expect("nonempty")
    }

    fn t_at(&self, s: &Rat) -> Rat {
        match &self.mode {
            QMode::Diagonal => s.clone(),
            QMode::Fixed(q) => q.reciprocal(),
        }
    }

    /// Kinks as rationals (all kinks are finite).
    pub fn kink_values(&self) -> Vec<Rat> {
        self.kinks
            .iter()
            .filter_map(|k| match k {
                Exponent::Finite(p) => Some(p.clone()),
                Exponent::Infinite => None,
            })
            .collect()
    }
}

/// Upper envelope of lines on s ∈ [lo, hi], as (s_from, s_to, line index).
fn envelope(lines: &[Line], lo: &Rat, hi: &Rat) -> Vec<(Rat, Rat, usize)> {
    let mut out = Vec::new();
    let pick = |s: &Rat| -> usize {
        let mut best = 0;
        for (i, l) in lines.iter().enumerate() {
            let (v, bv) = (l.at(s), lines[best].at(s));
            if v > bv || (v == bv && l.b > lines[best].b) {
                best = i;
            }
        }
        best
    };
    let mut s = lo.clone();
    let mut cur = pick(&s);
    loop {
        // Next crossing by a line of larger slope.
        let mut next: Option<(Rat, usize)> = None;
        for (i, l) in lines.iter().enumerate() {
            if l.b <= lines[cur].b {
                continue;
            }
            let x = (&lines[cur].a - &l.a) / (&l.b - &lines[cur].b);
            if x <= s {
                continue;
            }
            let better = match &next {
                None => true,
                Some((nx, ni)) => x < *nx || (x == *nx && l.b > lines[*ni].b),
            };
            if better {
                next = Some((x, i));
            }
        }
        match next {
            Some((x, i)) if x < *hi => {
                out.push((s.clone(), x.clone(), cur));
                s = x;
                cur = i;
            }
            _ => {
                out.push((s, hi.clone(), cur));
                break;
            }
        }
    }
    out
}

/// Groups identical affine functions.
fn dedupe(branches: Vec<AffineBranch>) -> Vec<(AffineBranch, Vec<BranchLabel>)> {
    let mut out: Vec<(AffineBranch, Vec<BranchLabel>)> = Vec::new();
    for b in branches {
        match out.iter_mut().find(|(x, _)| x.same_function(&b)) {
            Some((_, labels)) => labels.push(b.label.clone()),
            None => {
                let l = b.label.clone();
                out.push((b, vec![l]));
            }
        }
    }
    out
}

/// Cell branches with the given 𝔫𝔳 values.
pub fn cell_branches(values: &[Vec<usize>]) -> Vec<AffineBranch> {
    let d = values.len() - 1;
    let n = values[0].len() - 1;
    let mut out = Vec::new();
    for (dp, row) in values.iter().enumerate() {
        for (np, &nv) in row.iter().enumerate() {
            out.push(AffineBranch::cell(d, n, dp, np, nv));
        }
    }
    out
}

fn graph_from_values(values: &[Vec<usize>], mode: &QMode) -> PiecewiseExponent {
    let d = values.len() - 1;
    let base = cell_branches(values);
    let half = frac(1, 2);
    // Segments of s ∈ [0, 1/2] with the branch family used on each.
    let mut segments: Vec<(Rat, Rat, Rat, Vec<AffineBranch>)> = Vec::new();
    match mode {
        QMode::Diagonal => segments.push((
            Rat::zero(),
            half.clone(),
            Rat::zero(),
            base.iter().map(AffineBranch::on_diagonal).collect(),
        )),
        QMode::Fixed(q) => {
            let t = q.reciprocal();
            // p ≥ q ⇔ s ≤ t.
            segments.push((Rat::zero(), t.clone(), t.clone(), base.clone()));
            if t < half {
                segments.push((t.clone(), half.clone(), t.clone(), base.iter().map(|b| b.shifted(d)).collect()));
            }
        }
    }
    let mut pieces: Vec<(Rat, Rat, AffineBranch, Vec<BranchLabel>)> = Vec::new();
    for (lo, hi, t, family) in segments {
        let lines: Vec<Line> = dedupe(family)
            .into_iter()
            .map(|(b, labels)| {
                let (a, sl) = match mode {
                    QMode::Diagonal => (b.c0.clone(), &b.cp + &b.cq),
                    QMode::Fixed(_) => (&b.c0 + &b.cq * &t, b.cp.clone()),
                };
                Line { a, b: sl, branch: b, labels }
            })
            .collect();
        for (from, to, i) in envelope(&lines, &lo, &hi) {
            let l = &lines[i];
            // Merge with the previous piece when the function continues.
            if let Some(last) = pieces.last_mut() {
                // Along a fixed-q slice, distinct branches can share a line;
                // the q > p shift keeps the line of every d′ = d cell.
                let same = match mode {
                    QMode::Diagonal => last.2.same_function(&l.branch),
                    QMode::Fixed(_) => last.2.cp == l.b && &last.2.c0 + &last.2.cq * &t == l.a,
                };
                if same && last.1 == from {
                    last.1 = to;
                    for label in &l.labels {
                        if !last.3.contains(label) {
                            last.3.push(label.clone());
                        }
                    }
                    continue;
                }
            }
            pieces.push((from, to, l.branch.clone(), l.labels.clone()));
        }
    }
    // Drop zero-length pieces (a single point at an endpoint).
    pieces.retain(|p| p.0 < p.1);
    // Pieces ordered by ascending p = descending s.
    pieces.reverse();
    let kinks: Vec<Exponent> = pieces.windows(2).map(|w| Exponent::from_reciprocal(&w[0].0)).collect();
    let mut branches: Vec<AffineBranch> = Vec::new();
    for p in &pieces {
        if !branches.iter().any(|b| b.same_function(&p.2) && b.label == p.2.label) {
            branches.push(p.2.clone());
        }
    }
    let pieces = pieces
        .into_iter()
        .map(|(s_lo, s_hi, branch, labels)| Piece {
            p_from: Exponent::from_reciprocal(&s_hi),
            p_to: Exponent::from_reciprocal(&s_lo),
            branch,
            labels,
        })
        .collect();
    PiecewiseExponent { mode: mode.clone(), branches, kinks, pieces }
}

fn closed_values(table: &NumvarTable) -> Result<Vec<Vec<usize>>, ExponentError> {
    let open = open_cells(table, |_, _| true);
    if !open.is_empty() {
        return Err(ExponentError::UncertifiedTable { cells: open });
    }
    Ok(table.uppers())
}

fn open_cells(table: &NumvarTable, mut keep: impl FnMut(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for dp in 0..=table.d() {
        for np in 0..=table.n() {
            if keep(dp, np) && !table.get(dp, np).is_exact() {
                out.push((dp, np));
            }
        }
    }
    out
}

/// Γ_{q,p} with its certified range.
pub fn gamma(table: &NumvarTable, q: &Exponent, p: &Exponent) -> GammaValue {
    let (d, n) = (table.d(), table.n());
    let (s, t) = (p.reciprocal(), q.reciprocal());
    // For q > p evaluate at q = p and add d(1/p − 1/q).
    let (t_eval, shift) = if t < s { (s.clone(), rat(d as i64) * (&s - &t)) } else { (t, Rat::zero()) };
    let mut lower: Option<Rat> = None;
    let mut upper: Option<Rat> = None;
    let mut argmax = Vec::new();
    for dp in 0..=d {
        for np in 0..=n {
            let c = table.get(dp, np);
            let hi = AffineBranch::cell(d, n, dp, np, c.lower).eval(&s, &t_eval) + &shift;
            let lo = AffineBranch::cell(d, n, dp, np, c.upper).eval(&s, &t_eval) + &shift;
            if upper.as_ref().is_none_or(|u| hi > *u) {
                upper = Some(hi.clone());
                argmax.clear();
            }
            if upper.as_ref() == Some(&hi) {
                argmax.push((dp, np));
            }
            if lower.as_ref().is_none_or(|l| lo > *l) {
                lower = Some(lo);
            }
        }
    }
    GammaValue { lower: lower.expect("nonempty"), upper: upper.expect("nonempty"), argmax }
}

/// The graph of Γ along a slice. Errors on open cells; see
/// [`gamma_graph_bounds`] for interval tables.
pub fn gamma_graph(table: &NumvarTable, mode: &QMode) -> Result<PiecewiseExponent, ExponentError> {
    let values = closed_values(table)?;
    Ok(graph_from_values(&values, mode))
}

/// Graphs of the lower and upper ends of Γ for a table with open cells.
pub fn gamma_graph_bounds(table: &NumvarTable, mode: &QMode) -> (PiecewiseExponent, PiecewiseExponent) {
    (graph_from_values(&table.uppers(), mode), graph_from_values(&table.lowers(), mode))
}

/// The bounds every tuple satisfies: max(d(1/2 − 1/p), 2d(1/2 − 1/p) − 2n/p)
/// at q = p and max(0, d(1/2 − 1/p) − 2n/p) at q = 2.
pub fn universal_lower_bound(d: usize, n: usize, q: &Exponent, p: &Exponent) -> Result<Rat, ExponentError> {
    let s = p.reciprocal();
    let (d, n) = (rat(d as i64), rat(n as i64));
    let a = &d * (frac(1, 2) - &s);
    if q == p {
        let b = rat(2) * &a - rat(2) * &n * &s;
        Ok(a.max(b))
    } else if *q == Exponent::from_int(2) {
        Ok(Rat::zero().max(a - rat(2) * &n * &s))
    } else {
        Err(ExponentError::UnsupportedQ)
    }
}

/// The three non-degeneracy conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub strongly_nondegenerate: bool,
    pub nondegenerate: bool,
    pub weakly_nondegenerate: bool,
}

/// Checks `nv(d − m, n′) ≥ rhs` on all listed cells with the certified
/// bounds; returns None when an open cell decides nothing.
fn check_condition(table: &NumvarTable, cells: &[(usize, usize, Rat)], open: &mut Vec<(usize, usize)>) -> Option<bool> {
    let d = table.d();
    let mut undecided = Vec::new();
    for (m, np, rhs) in cells {
        let c = table.get(d - m, *np);
        if rat(c.upper as i64) < *rhs {
            return Some(false);
        }
        if rat(c.lower as i64) < *rhs {
            undecided.push((d - m, *np));
        }
    }
    if undecided.is_empty() {
        Some(true)
    } else {
        open.extend(undecided);
        None
    }
}

/// Each condition decided from the certified bounds, `None` when open cells
/// leave it undecided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationBounds {
    pub strongly_nondegenerate: Option<bool>,
    pub nondegenerate: Option<bool>,
    pub weakly_nondegenerate: Option<bool>,
}

fn condition_cells(table: &NumvarTable) -> [Vec<(usize, usize, Rat)>; 3] {
    let (d, n) = (table.d(), table.n());
    let share = |np: usize| if n == 0 { Rat::zero() } else { rat((np * d) as i64) / rat(n as i64) };
    let mut strong = Vec::new();
    let mut plain = Vec::new();
    let mut weak = Vec::new();
    for m in 0..=d {
        for np in 0..=n {
            strong.push((m, np, share(np) - rat(m as i64)));
            if 2 * m <= d {
                plain.push((m, np, share(np) - rat(2 * m as i64)));
            }
        }
        if 2 * m <= d {
            weak.push((m, n, rat(d as i64 - 2 * m as i64)));
        }
    }
    [strong, plain, weak]
}

pub fn classify_bounds(table: &NumvarTable) -> ClassificationBounds {
    let [strong, plain, weak] = condition_cells(table);
    let mut open = Vec::new();
    ClassificationBounds {
        strongly_nondegenerate: check_condition(table, &strong, &mut open),
        nondegenerate: check_condition(table, &plain, &mut open),
        weakly_nondegenerate: check_condition(table, &weak, &mut open),
    }
}

/// Strong, plain and weak non-degeneracy; errors when open cells decide
/// nothing for some condition.
pub fn classify(table: &NumvarTable) -> Result<Classification, ExponentError> {
    let [strong, plain, weak] = condition_cells(table);
    let mut open = Vec::new();
    let s = check_condition(table, &strong, &mut open);
    let p = check_condition(table, &plain, &mut open);
    let w = check_condition(table, &weak, &mut open);
    match (s, p, w) {
        (Some(s), Some(p), Some(w)) => {
            Ok(Classification { strongly_nondegenerate: s, nondegenerate: p, weakly_nondegenerate: w })
        }
        _ => {
            open.sort();
            open.dedup();
            Err(ExponentError::UncertifiedTable { cells: open })
        }
    }
}

/// The largest p_c with Γ_p = d(1/2 − 1/p) on [2, p_c]; `None` when the
/// tuple is not weakly non-degenerate. Terms with a non-positive
/// denominator are skipped, and p_c = ∞ when all are.
pub fn critical_pc(table: &NumvarTable) -> Result<Option<Exponent>, ExponentError> {
    let (d, n) = (table.d(), table.n());
    if !classify(table)?.weakly_nondegenerate {
        return Ok(None);
    }
    let open = open_cells(table, |dp, np| np < n && 2 * (d - dp) <= d);
    if !open.is_empty() {
        return Err(ExponentError::UncertifiedTable { cells: open });
    }
    let mut best: Option<Rat> = None;
    for np in 0..n {
        for m in 0..=d / 2 {
            let den = d as i64 - (table.get(d - m, np).upper + 2 * m) as i64;
            if den <= 0 {
                continue;
            }
            let v = rat(4 * (n - np) as i64) / rat(den);
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        }
    }
    Ok(Some(best.map_or(Exponent::Infinite, |b| Exponent::Finite(b + rat(2)))))
}

/// p_Q = 2 + max over m ≥ 1, n′ of 4n′/(2m + 𝔫𝔳_{d−m,n′}); restriction
/// estimates hold for p > p_Q.
pub fn restriction_exponent(table: &NumvarTable) -> Result<Rat, ExponentError> {
    if !table.tuple.is_linearly_independent() {
        return Err(ExponentError::LinearlyDependentTuple);
    }
    let (d, n) = (table.d(), table.n());
    let open = open_cells(table, |dp, _| dp < d);
    if !open.is_empty() {
        return Err(ExponentError::UncertifiedTable { cells: open });
    }
    let mut best = Rat::zero();
    for m in 1..=d {
        for np in 0..=n {
            let v = rat(4 * np as i64) / rat((2 * m + table.get(d - m, np).upper) as i64);
            best = best.max(v);
        }
    }
    Ok(best + rat(2))
}

/// max over n′ of n′ + (1 − α)·𝔫𝔳_{d,n′}, an upper bound for the κ(α)
/// exponent (equality is not claimed).
pub fn kappa_upper(table: &NumvarTable, alpha: &Rat) -> Result<Rat, ExponentError> {
    if *alpha < Rat::one() {
        return Err(ExponentError::InvalidAlpha);
    }
    let d = table.d();
    let open = open_cells(table, |dp, _| dp == d);
    if !open.is_empty() {
        return Err(ExponentError::UncertifiedTable { cells: open });
    }
    let one_minus = Rat::one() - alpha;
    Ok((0..=table.n())
        .map(|np| rat(np as i64) + &one_minus * rat(table.get(d, np).upper as i64))
        .max()
        .expect("nonempty"))
}

/// One comparison Γ(q) ≥ Γ(q|_H).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecursionCheck {
    pub subspace: usize,
    pub p: Exponent,
    pub full: GammaValue,
    pub restricted: GammaValue,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecursionReport {
    pub checks: Vec<RecursionCheck>,
    pub violations: usize,
}

/// Verifies Γ_{q,p}(q) ≥ Γ_{q,p}(q|_H) for each restricted table and each
/// p ≥ q. A violation means some cell bound is wrong.
pub fn subspace_recursion_check(
    table: &NumvarTable,
    restricted: &[NumvarTable],
    q: &Exponent,
    ps: &[Exponent],
) -> RecursionReport {
    let mut checks = Vec::new();
    for (i, r) in restricted.iter().enumerate() {
        for p in ps.iter().filter(|p| p.reciprocal() <= q.reciprocal()) {
            let full = gamma(table, q, p);
            let sub = gamma(r, q, p);
            // Certified violation: the restriction's lower end exceeds the
            // full exponent's upper end.
            let ok = sub.lower <= full.upper;
            checks.push(RecursionCheck { subspace: i, p: p.clone(), full, restricted: sub, ok });
        }
    }
    let violations = checks.iter().filter(|c| !c.ok).count();
    RecursionReport { checks, violations }
}

/// Coordinate hyperplanes followed by random integer hyperplanes.
pub fn sample_hyperplanes(d: usize, count: usize, seed: u64) -> Vec<Subspace> {
    let mut out: Vec<Subspace> =
        (0..d.min(count)).map(|i| Subspace::coordinate(d, &(0..d).filter(|&j| j != i).collect::<Vec<_>>())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let normal: Vec<Rat> = (0..d).map(|_| rat(rng.gen_range(-3..=3))).collect();
        if normal.iter().all(Zero::is_zero) {
            continue;
        }
        out.push(Subspace::span(d, &[normal]).orthogonal_complement());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::catalog::*;
    use crate::forms::FormTuple;

    fn q1_table() -> NumvarTable {
        NumvarTable::from_values(q1(), &[vec![0; 5], vec![0; 5], vec![0, 0, 0, 0, 2], vec![0, 1, 2, 3, 3]])
    }

    fn q2_table() -> NumvarTable {
        NumvarTable::from_values(q2(), &[vec![0; 3], vec![0; 3], vec![0, 0, 1], vec![0, 1, 3]])
    }

    fn p(x: i64) -> Exponent {
        Exponent::from_int(x)
    }

    /// Oracle: evaluate the double max directly with f64-free rationals.
    fn brute_gamma(values: &[Vec<usize>], q: &Rat, pp: &Rat) -> Rat {
        let d = values.len() - 1;
        let n = values[0].len() - 1;
        let (s, t) = (pp.recip(), q.recip());
        let mut best: Option<Rat> = None;
        for (dp, row) in values.iter().enumerate() {
            for (np, &nv) in row.iter().enumerate() {
                let v = rat(dp as i64) * (Rat::one() - &s - &t)
                    - rat(nv as i64) * (frac(1, 2) - &s)
                    - rat(2 * (n - np) as i64) * &s;
                best = Some(best.map_or(v.clone(), |b: Rat| b.max(v)));
            }
        }
        let _ = d;
        best.unwrap()
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(&q1_table(), &p(8), &p(8)).value(), Some(&frac(5, 4)));
        assert_eq!(gamma(&q2_table(), &p(4), &p(4)).value(), Some(&frac(3, 4)));
        assert_eq!(gamma(&q1_table(), &p(2), &p(2)).value(), Some(&Rat::zero()));
        let ex = NumvarTable::from_values(
            q_infinity_example(),
            &[vec![0; 3], vec![0; 3], vec![0; 3], vec![0, 0, 1], vec![0, 2, 4]],
        );
        assert_eq!(gamma(&ex, &Exponent::Infinite, &p(4)).value(), Some(&frac(9, 4)));
        for pp in 2..20 {
            let v = gamma(&q1_table(), &p(pp), &p(pp));
            assert_eq!(v.value().unwrap(), &brute_gamma(&q1_table().uppers(), &rat(pp), &rat(pp)));
        }
    }

    #[test]
    fn q1_graph() {
        let g = gamma_graph(&q1_table(), &QMode::Diagonal).unwrap();
        assert_eq!(g.kink_values(), vec![rat(6), rat(8)]);
        let f: Vec<String> = g.branches.iter().map(AffineBranch::formula).collect();
        assert_eq!(f, vec!["3/2 - 3/p", "2 - 6/p", "3 - 14/p"]);
    }

    #[test]
    fn q2_graph() {
        let g = gamma_graph(&q2_table(), &QMode::Diagonal).unwrap();
        assert_eq!(g.kink_values(), vec![rat(4), rat(6)]);
        let f: Vec<String> = g.branches.iter().map(AffineBranch::formula).collect();
        assert_eq!(f, vec!["3/2 - 3/p", "5/2 - 7/p", "3 - 10/p"]);
    }

    #[test]
    fn paraboloid_graph() {
        let t = NumvarTable::from_values(paraboloid(2), &[vec![0, 0], vec![0, 1], vec![0, 2]]);
        let g = gamma_graph(&t, &QMode::Diagonal).unwrap();
        assert_eq!(g.kink_values(), vec![rat(4)]);
        assert_eq!(g.branches.len(), 2);
        assert_eq!(critical_pc(&t).unwrap(), Some(p(4)));
    }

    #[test]
    fn fixed_q_graph_is_continuous() {
        let t = q2_table();
        let g = gamma_graph(&t, &QMode::Fixed(p(6))).unwrap();
        for k in [2, 3, 4, 5, 6, 7, 9, 12, 40] {
            let e = p(k);
            assert_eq!(g.eval(&e), gamma(&t, &p(6), &e).upper, "p = {k}");
        }
    }

    #[test]
    fn universal() {
        assert_eq!(universal_lower_bound(3, 2, &p(10), &p(10)).unwrap(), rat(2));
        assert_eq!(universal_lower_bound(3, 2, &p(2), &p(2)).unwrap(), Rat::zero());
        assert_eq!(universal_lower_bound(1, 1, &p(2), &p(6)).unwrap(), Rat::zero());
        assert_eq!(universal_lower_bound(1, 1, &p(3), &p(6)), Err(ExponentError::UnsupportedQ));
    }

    #[test]
    fn classifications() {
        let c = classify(&q2_table()).unwrap();
        assert_eq!((c.strongly_nondegenerate, c.nondegenerate, c.weakly_nondegenerate), (false, false, true));
        let c = classify(&q1_table()).unwrap();
        assert_eq!((c.nondegenerate, c.weakly_nondegenerate), (false, true));
        let t = NumvarTable::from_values(paraboloid(2), &[vec![0, 0], vec![0, 1], vec![0, 2]]);
        assert!(classify(&t).unwrap().strongly_nondegenerate);
    }

    #[test]
    fn critical_exponents() {
        assert_eq!(critical_pc(&q2_table()).unwrap(), Some(p(4)));
        assert_eq!(critical_pc(&q1_table()).unwrap(), Some(p(6)));
    }

    #[test]
    fn restriction() {
        assert_eq!(restriction_exponent(&q2_table()).unwrap(), frac(14, 3));
        let parabola = NumvarTable::from_values(paraboloid(1), &[vec![0, 0], vec![0, 1]]);
        assert_eq!(restriction_exponent(&parabola).unwrap(), rat(4));
        let dep = FormTuple::from_terms(1, &[vec![(0, 0, 1)], vec![(0, 0, 2)]]).unwrap();
        let t = NumvarTable::from_values(dep, &[vec![0, 0, 0], vec![0, 1, 1]]);
        assert_eq!(restriction_exponent(&t), Err(ExponentError::LinearlyDependentTuple));
    }

    #[test]
    fn kappa() {
        assert_eq!(kappa_upper(&q2_table(), &rat(1)).unwrap(), rat(2));
        assert_eq!(kappa_upper(&q2_table(), &rat(2)).unwrap(), Rat::zero());
        assert_eq!(kappa_upper(&q1_table(), &rat(2)).unwrap(), rat(1));
        assert_eq!(kappa_upper(&q1_table(), &frac(1, 2)), Err(ExponentError::InvalidAlpha));
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinite);
        assert_eq!("14/3".parse::<Exponent>().unwrap(), Exponent::Finite(frac(14, 3)));
        assert!("1".parse::<Exponent>().is_err());
    }
}
