//! Minimum rank over a real pencil λ₁H₁ + λ₂H₂.
//!
//! For each candidate rank r the (r+1)-minors of λH₁ + H₂ are univariate
//! polynomials; the pencil drops to rank ≤ r at a finite real λ exactly when
//! their gcd has a real root (Sturm count). The point at infinity is H₁.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::linalg::{rank_exact, rat, Rat, RationalMatrix};

/// Univariate polynomial with rational coefficients, lowest degree first,
/// without trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly(Vec<Rat>);

impl Poly {
    pub fn new(mut c: Vec<Rat>) -> Self {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        Self(c)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        self.0.iter().rev().fold(Rat::zero(), |acc, c| acc * x + c)
    }

    fn lead(&self) -> &Rat {
        self.0.last().expect("nonzero polynomial")
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.0.iter().enumerate().skip(1).map(|(i, c)| c * rat(i as i64)).collect())
    }

    fn neg(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }

    /// Remainder of division by a nonzero polynomial.
    pub fn rem(&self, b: &Poly) -> Poly {
        self.div_rem(b).1
    }

    /// Quotient and remainder.
    pub fn div_rem(&self, b: &Poly) -> (Poly, Poly) {
        let db = b.degree().expect("division by zero polynomial");
        let mut r = self.0.clone();
        let mut quot = vec![Rat::zero(); r.len().saturating_sub(db)];
        while r.len() > db && !r.is_empty() {
            let k = r.len() - 1 - db;
            let f = r.last().unwrap() / b.lead();
            quot[k] = f.clone();
            for (i, c) in b.0.iter().enumerate() {
                let t = &f * c;
                r[k + i] -= t;
            }
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        (Poly::new(quot), Poly::new(r))
    }

    /// Product of the distinct irreducible factors: same roots, all simple.
    pub fn squarefree(&self) -> Poly {
        if self.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        self.div_rem(&self.gcd(&self.derivative())).0
    }

    fn monic(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.lead().clone();
        Poly(self.0.iter().map(|c| c / &l).collect())
    }

    /// Monic gcd; gcd(0, 0) = 0.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Sturm chain of the squarefree part, so root counts stay valid when an
    /// endpoint is a root.
    fn sturm_chain(&self) -> Vec<Poly> {
        let p = self.squarefree();
        let mut chain = vec![p.derivative(), p];
        chain.reverse();
        while !chain.last().unwrap().is_zero() {
            let n = chain.len();
            let r = chain[n - 2].rem(&chain[n - 1]).neg();
            if r.is_zero() {
                break;
            }
            chain.push(r);
        }
        chain.retain(|p| !p.is_zero());
        chain
    }

    /// Number of distinct real roots.
    pub fn real_root_count(&self) -> usize {
        if self.degree().unwrap_or(0) == 0 {
            return 0;
        }
        let chain = self.sturm_chain();
        let at_pos: Vec<i32> = chain.iter().map(|p| sign(p.lead())).collect();
        let at_neg: Vec<i32> = chain
            .iter()
            .map(|p| {
                let s = sign(p.lead());
                if p.degree().unwrap() % 2 == 1 {
                    -s
                } else {
                    s
                }
            })
            .collect();
        variations(&at_neg) - variations(&at_pos)
    }

    /// Distinct real roots in (a, b].
    fn roots_in(&self, chain: &[Poly], a: &Rat, b: &Rat) -> usize {
        let v = |x: &Rat| variations(&chain.iter().map(|p| sign(&p.eval(x))).collect::<Vec<_>>());
        v(a) - v(b)
    }

    /// Rational roots found by isolating real roots and testing nearby
    /// fractions exactly.
    pub fn rational_roots(&self) -> Vec<Rat> {
        let Some(deg) = self.degree() else { return Vec::new() };
        if deg == 0 {
            return Vec::new();
        }
        let chain = self.sturm_chain();
        let bound = Rat::one() + self.0.iter().map(|c| (c / self.lead()).abs()).fold(Rat::zero(), |a, b| a.max(b));
        let mut out = Vec::new();
        let mut stack = vec![(-bound.clone(), bound)];
        while let Some((a, b)) = stack.pop() {
            let k = self.roots_in(&chain, &a, &b);
            if k == 0 {
                continue;
            }
            let width = &b - &a;
            if k == 1 && width < Rat::new(BigInt::one(), BigInt::from(1u64 << 40)) {
                let mid = (&a + &b) / rat(2);
                for q in approximants(&mid, 1 << 20) {
                    if q > a && q <= b && self.eval(&q).is_zero() {
                        out.push(q);
                        break;
                    }
                }
                continue;
            }
            if width < Rat::new(BigInt::one(), BigInt::from(1u64 << 60)) {
                continue;
            }
            let mid = (&a + &b) / rat(2);
            stack.push((a, mid.clone()));
            stack.push((mid, b));
        }
        out.sort();
        out.dedup();
        out
    }
}

fn sign(x: &Rat) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

fn variations(s: &[i32]) -> usize {
    let nz: Vec<i32> = s.iter().copied().filter(|&x| x != 0).collect();
    nz.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Continued-fraction convergents of `x` with denominators up to `max_den`.
pub fn approximants(x: &Rat, max_den: u64) -> Vec<Rat> {
    let mut out = Vec::new();
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut r = x.clone();
    for _ in 0..64 {
        let a = r.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2 > BigInt::from(max_den) {
            break;
        }
        out.push(Rat::new(h2.clone(), k2.clone()));
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = &r - Rat::from_integer(a);
        if frac.is_zero() {
            break;
        }
        r = frac.recip();
    }
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

pub(crate) fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    subsets(n, k)
}

/// det(λA + B) restricted to the given rows and columns, by interpolation.
fn minor_poly(a: &RationalMatrix, b: &RationalMatrix, rows: &[usize], cols: &[usize]) -> Poly {
    let k = rows.len();
    let xs: Vec<Rat> = (0..=k as i64).map(rat).collect();
    let ys: Vec<Rat> = xs.iter().map(|x| a.select(rows, cols).scale(x).add(&b.select(rows, cols)).det()).collect();
    interpolate(&xs, &ys)
}

/// det(λA + B).
pub(crate) fn pencil_det(a: &RationalMatrix, b: &RationalMatrix) -> Poly {
    let idx: Vec<usize> = (0..a.rows()).collect();
    minor_poly(a, b, &idx, &idx)
}

fn interpolate(xs: &[Rat], ys: &[Rat]) -> Poly {
    let mut acc = vec![Rat::zero(); xs.len()];
    for (i, (xi, yi)) in xs.iter().zip(ys).enumerate() {
        if yi.is_zero() {
            continue;
        }
        let mut basis = vec![Rat::one()];
        let mut denom = Rat::one();
        for (j, xj) in xs.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut next = vec![Rat::zero(); basis.len() + 1];
            for (d, c) in basis.iter().enumerate() {
                next[d + 1] += c;
                next[d] -= c * xj;
            }
            basis = next;
            denom *= xi - xj;
        }
        let f = yi / denom;
        for (d, c) in basis.iter().enumerate() {
            acc[d] += c * &f;
        }
    }
    Poly::new(acc)
}

/// Result of [`min_pencil_rank`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PencilMin {
    pub rank: usize,
    /// A rational (λ₁, λ₂) attaining the minimum, when one exists.
    pub argmin: Option<(Rat, Rat)>,
}

/// min over (λ₁:λ₂) ∈ P¹(R) of rank(λ₁A + λ₂B), exactly.
pub fn min_pencil_rank(a: &RationalMatrix, b: &RationalMatrix) -> PencilMin {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    let r_inf = rank_exact(a);
    for r in 0..r_inf {
        let mut g = Poly::new(Vec::new());
        for rows in subsets(a.rows(), r + 1) {
            for cols in subsets(a.cols(), r + 1) {
                g = g.gcd(&minor_poly(a, b, &rows, &cols));
                if g.degree() == Some(0) {
                    break;
                }
            }
            if g.degree() == Some(0) {
                break;
            }
        }
        if g.is_zero() {
            // Every finite member has rank ≤ r.
            return PencilMin { rank: r, argmin: Some((Rat::zero(), Rat::one())) };
        }
        if g.real_root_count() > 0 {
            let argmin = g.rational_roots().into_iter().next().map(|l| (l, Rat::one()));
            return PencilMin { rank: r, argmin };
        }
    }
    PencilMin { rank: r_inf, argmin: Some((Rat::one(), Rat::zero())) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> Poly {
        Poly::new(c.iter().map(|&x| rat(x)).collect())
    }

    #[test]
    fn repeated_roots() {
        // (x − 1)²(x + 2)
        let f = p(&[2, -3, 0, 1]);
        assert_eq!(f.real_root_count(), 2);
        assert_eq!(f.rational_roots(), vec![rat(-2), rat(1)]);
        assert_eq!(f.squarefree().degree(), Some(2));
    }

    #[test]
    fn sturm_counts() {
        assert_eq!(p(&[-2, 0, 1]).real_root_count(), 2);
        assert_eq!(p(&[1, 0, 1]).real_root_count(), 0);
        assert_eq!(p(&[0, 0, 1]).real_root_count(), 1);
        assert_eq!(p(&[-1, 0, 0, 1]).real_root_count(), 1);
        assert_eq!(p(&[6, -5, 1]).rational_roots(), vec![rat(2), rat(3)]);
        assert!(p(&[-2, 0, 1]).rational_roots().is_empty());
    }

    #[test]
    fn gcds() {
        let g = p(&[-1, 0, 1]).gcd(&p(&[1, 2, 1]));
        assert_eq!(g, p(&[1, 1]));
    }

    #[test]
    fn pencils() {
        let m = |r: &[Vec<i64>]| RationalMatrix::from_i64(r).unwrap();
        // ξ₁² + ξ₂² and ξ₁ξ₂: contains (ξ₁ + ξ₂)².
        let r = min_pencil_rank(&m(&[vec![2, 0], vec![0, 2]]), &m(&[vec![0, 1], vec![1, 0]]));
        assert_eq!(r.rank, 1);
        // ξ₁² - 2ξ₂² and ξ₁ξ₂: det = -8λ² - μ² has no real zero.
        let r = min_pencil_rank(&m(&[vec![2, 0], vec![0, -4]]), &m(&[vec![0, 1], vec![1, 0]]));
        assert_eq!(r.rank, 2);
        let r = min_pencil_rank(&m(&[vec![2, 0], vec![0, 0]]), &m(&[vec![0, 0], vec![0, 2]]));
        assert_eq!(r, PencilMin { rank: 1, argmin: Some((rat(1), rat(0))) });
    }
}
