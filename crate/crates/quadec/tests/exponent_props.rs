//! Γ against the classification: the best-possible decoupling statements tie
//! two independent computations together.

use num_traits::{One, Zero};
use quadec::exponent::{
    classify, critical_pc, gamma, gamma_graph, restriction_exponent, universal_lower_bound, Exponent,
    PiecewiseExponent, QMode,
};
use quadec::forms::catalog::{ack, paraboloid, parsell_vinogradov, q1, q2, q_infinity_example};
use quadec::forms::FormTuple;
use quadec::linalg::{frac, rat, Rat};
use quadec::numvar::{numvar_table, NumvarTable, SearchConfig};
use quadec::parser::parse_tuple;

fn tables() -> Vec<NumvarTable> {
    let mut tuples: Vec<FormTuple> = Vec::new();
    for d in 1..=4usize {
        for mask in 0..1u32 << d {
            let k: Vec<u32> = (0..d).map(|i| 1 + (mask >> i & 1)).collect();
            tuples.extend(ack(&k));
        }
        tuples.push(paraboloid(d));
    }
    tuples.extend([parsell_vinogradov(2), parsell_vinogradov(3), q1(), q2(), q_infinity_example()]);
    for text in ["x1^2; x2^2", "x1^2 - x2^2", "x1^2 + x2^2; x2^2 + x3^2", "x1*x2; x3*x4", "x1^2 + x2^2 - x3^2"] {
        tuples.push(parse_tuple(text, None).unwrap());
    }
    let config = SearchConfig::default();
    let out: Vec<NumvarTable> = tuples.iter().map(|q| numvar_table(q, &config)).filter(|t| t.is_exact()).collect();
    assert!(out.len() >= 30, "only {} exact tables", out.len());
    out
}

fn d_over_2(t: &NumvarTable, s: &Rat) -> Rat {
    rat(t.d() as i64) * (frac(1, 2) - s)
}

/// max(d(1/2 − s), 2d(1/2 − s) − 2ns), the ℓᵖLᵖ bound.
fn diagonal_bound(t: &NumvarTable, s: &Rat) -> Rat {
    let a = d_over_2(t, s);
    let b = &a + &a - rat(2 * t.n() as i64) * s;
    a.max(b)
}

/// max(0, d(1/2 − s) − 2ns), the ℓ²Lᵖ bound.
fn square_bound(t: &NumvarTable, s: &Rat) -> Rat {
    (d_over_2(t, s) - rat(2 * t.n() as i64) * s).max(Rat::zero())
}

/// Every breakpoint of `g` and of the comparison functions, plus midpoints:
/// two piecewise affine functions agreeing here agree on [0, 1/2].
fn probe_points(t: &NumvarTable, graphs: &[&PiecewiseExponent]) -> Vec<Rat> {
    let (d, n) = (t.d() as i64, t.n() as i64);
    let mut pts = vec![Rat::zero(), frac(1, 2), frac(d, 2 * (d + 2 * n))];
    for g in graphs {
        pts.extend(g.kinks.iter().map(Exponent::reciprocal));
    }
    pts.sort();
    pts.dedup();
    let mids: Vec<Rat> = pts.windows(2).map(|w| (&w[0] + &w[1]) / rat(2)).collect();
    pts.extend(mids);
    pts.sort();
    pts
}

fn at(s: &Rat) -> Exponent {
    Exponent::from_reciprocal(s)
}

#[test]
fn graphs_are_well_formed_and_agree_with_point_values() {
    let modes = [
        QMode::Diagonal,
        QMode::Fixed(Exponent::from_int(2)),
        QMode::Fixed(Exponent::from_int(4)),
        QMode::Fixed(Exponent::Infinite),
    ];
    for t in tables() {
        for mode in &modes {
            let g = gamma_graph(&t, mode).unwrap();
            assert_eq!(g.pieces.first().unwrap().p_from, Exponent::from_int(2));
            assert_eq!(g.pieces.last().unwrap().p_to, Exponent::Infinite);
            for w in g.pieces.windows(2) {
                assert_eq!(w[0].p_to, w[1].p_from);
                assert!(!w[0].branch.same_function(&w[1].branch));
            }
            assert!(g.kinks.windows(2).all(|w| w[0] < w[1]));
            let inner: Vec<Exponent> = g.pieces.iter().skip(1).map(|p| p.p_from.clone()).collect();
            assert_eq!(g.kinks, inner);
            for s in probe_points(&t, &[&g]) {
                let p = at(&s);
                let q = match mode {
                    QMode::Diagonal => p.clone(),
                    QMode::Fixed(q) => q.clone(),
                };
                let v = gamma(&t, &q, &p);
                assert_eq!(v.value(), Some(&g.eval(&p)), "{:?} {mode:?} p = {p}", t.tuple);
            }
        }
    }
}

#[test]
fn gamma_is_nonnegative_and_vanishes_at_two() {
    let two = Exponent::from_int(2);
    for t in tables() {
        assert_eq!(gamma(&t, &two, &two).value(), Some(&Rat::zero()));
        let g = gamma_graph(&t, &QMode::Diagonal).unwrap();
        for s in probe_points(&t, &[&g]) {
            let v = g.eval(&at(&s));
            assert!(v >= Rat::zero());
            assert!(v >= diagonal_bound(&t, &s), "{:?} s = {s}", t.tuple);
            assert_eq!(universal_lower_bound(t.d(), t.n(), &at(&s), &at(&s)).unwrap(), diagonal_bound(&t, &s));
            let sq = gamma(&t, &two, &at(&s)).value().unwrap().clone();
            assert!(sq >= square_bound(&t, &s));
            assert_eq!(universal_lower_bound(t.d(), t.n(), &two, &at(&s)).unwrap(), square_bound(&t, &s));
        }
    }
}

#[test]
fn classification_chain() {
    for t in tables() {
        let c = classify(&t).unwrap();
        assert!(!c.strongly_nondegenerate || c.nondegenerate, "{:?}", t.tuple);
        assert!(!c.nondegenerate || c.weakly_nondegenerate, "{:?}", t.tuple);
    }
}

#[test]
fn nondegenerate_iff_diagonal_graph_is_the_universal_bound() {
    let mut seen = [0; 2];
    for t in tables() {
        let nd = classify(&t).unwrap().nondegenerate;
        let g = gamma_graph(&t, &QMode::Diagonal).unwrap();
        let sharp = probe_points(&t, &[&g]).iter().all(|s| g.eval(&at(s)) == diagonal_bound(&t, s));
        assert_eq!(nd, sharp, "{:?}", t.tuple);
        seen[nd as usize] += 1;
    }
    assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
}

#[test]
fn strongly_nondegenerate_iff_square_graph_is_the_universal_bound() {
    let mut seen = [0; 2];
    for t in tables() {
        let strong = classify(&t).unwrap().strongly_nondegenerate;
        let g = gamma_graph(&t, &QMode::Fixed(Exponent::from_int(2))).unwrap();
        let sharp = probe_points(&t, &[&g]).iter().all(|s| g.eval(&at(s)) == square_bound(&t, s));
        assert_eq!(strong, sharp, "{:?}", t.tuple);
        seen[strong as usize] += 1;
    }
    assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
}

#[test]
fn critical_exponent_is_where_the_flat_stretch_ends() {
    let mut finite = 0;
    for t in tables() {
        let g = gamma_graph(&t, &QMode::Diagonal).unwrap();
        let pts = probe_points(&t, &[&g]);
        match critical_pc(&t).unwrap() {
            None => {
                // Γ leaves d(1/2 − 1/p) immediately after p = 2.
                let s = &pts[pts.len() - 2];
                assert!(g.eval(&at(s)) > d_over_2(&t, s), "{:?}", t.tuple);
            }
            Some(pc) => {
                let sc = pc.reciprocal();
                assert!(sc < frac(1, 2));
                for s in pts.iter().filter(|s| **s >= sc) {
                    assert_eq!(g.eval(&at(s)), d_over_2(&t, s), "{:?} s = {s}", t.tuple);
                }
                if let Some(below) = pts.iter().filter(|s| **s < sc).max() {
                    let s = (below + &sc) / rat(2);
                    assert!(g.eval(&at(&s)) > d_over_2(&t, &s), "{:?} p_c = {pc}", t.tuple);
                    finite += 1;
                } else {
                    assert!(sc.is_zero());
                }
            }
        }
    }
    assert!(finite > 0);
}

#[test]
fn worked_examples() {
    let config = SearchConfig::default();
    let t = numvar_table(&q1(), &config);
    let g = gamma_graph(&t, &QMode::Diagonal).unwrap();
    assert_eq!(g.kink_values(), [rat(6), rat(8)]);
    assert_eq!(g.eval(&Exponent::from_int(8)), frac(5, 4));
    assert_eq!(g.eval(&Exponent::from_int(6)), Rat::one());

    let t = numvar_table(&q_infinity_example(), &config);
    let v = gamma(&t, &Exponent::Infinite, &Exponent::from_int(4));
    assert_eq!(v.value(), Some(&frac(9, 4)));

    // Paraboloid in the plane: flat up to p = 4, then 2 − 6/p.
    let t = numvar_table(&paraboloid(2), &config);
    assert_eq!(critical_pc(&t).unwrap(), Some(Exponent::from_int(4)));
    let g = gamma_graph(&t, &QMode::Diagonal).unwrap();
    assert_eq!(g.kink_values(), [rat(4)]);
    assert_eq!(g.eval(&Exponent::from_int(12)), frac(3, 2));

    let t = numvar_table(&q2(), &config);
    let c = classify(&t).unwrap();
    assert!(c.weakly_nondegenerate && !c.nondegenerate);

    let t = numvar_table(&parsell_vinogradov(2), &config);
    assert_eq!(restriction_exponent(&t).unwrap(), rat(6));

    assert_eq!(universal_lower_bound(3, 2, &Exponent::from_int(10), &Exponent::from_int(10)).unwrap(), rat(2));
    assert!(universal_lower_bound(3, 2, &Exponent::from_int(4), &Exponent::from_int(10)).is_err());
}
