use num_bigint::BigUint;
use proptest::prelude::*;
use quadec::forms::FormTuple;
use quadec::harness::{count_naive, count_solutions, expsum_even_norm, CountLimits, CountSpec};
use quadec::parser::parse_tuple;

fn count(q: &FormTuple, s: usize, w: u64) -> BigUint {
    let spec = CountSpec { tuple: q.clone(), s, w_values: vec![w] };
    count_solutions(&spec, &CountLimits::default()).unwrap().counts[0].1.clone()
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

/// Integer-coefficient forms in d ≤ 2 variables.
fn small_tuple() -> impl Strategy<Value = FormTuple> {
    (1usize..=2, 1usize..=2).prop_flat_map(|(d, n)| {
        prop::collection::vec(prop::collection::vec(-2i64..=2, d * (d + 1) / 2), n).prop_map(move |forms| {
            let forms: Vec<Vec<(usize, usize, i64)>> = forms
                .iter()
                .map(|cs| {
                    let mut k = 0;
                    let mut terms = Vec::new();
                    for i in 0..d {
                        for j in i..d {
                            terms.push((i, j, cs[k]));
                            k += 1;
                        }
                    }
                    terms
                })
                .collect();
            FormTuple::from_terms(d, &forms).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn fast_count_matches_enumeration(q in small_tuple(), s in 1usize..=2, w in 0u64..=3) {
        prop_assume!(q.d() == 1 || s == 1 || w <= 2);
        let fast = count(&q, s, w);
        prop_assert_eq!(&fast, &count_naive(&q, s, w).unwrap());
        prop_assert_eq!(&fast, &expsum_even_norm(&q, w, s, &CountLimits::default()).unwrap());
    }

    /// At s = 1 the linear equations force x = y.
    #[test]
    fn one_copy_counts_the_diagonal(q in small_tuple(), w in 0u64..=6) {
        prop_assert_eq!(count(&q, 1, w), big(w + 1).pow(q.d() as u32));
    }
}

#[test]
fn parabola_closed_form() {
    let q = parse_tuple("x1^2", None).unwrap();
    for w in 0..=25u64 {
        // {a, b} = {c, d} as multisets.
        assert_eq!(count(&q, 2, w), big((w + 1) * (2 * w + 1)), "W = {w}");
    }
}

#[test]
fn zero_form_counts_the_linear_system() {
    let q = parse_tuple("@d=1 0", None).unwrap();
    for w in 0..=12u64 {
        // Σ_t r(t)² with r(t) the number of ways to write t = a + b.
        assert_eq!(count(&q, 2, w), big((w + 1) * (2 * w * w + 4 * w + 3) / 3), "W = {w}");
    }
}

#[test]
fn integral_changes_of_forms_keep_the_count() {
    let base = parse_tuple("x1^2 + x1*x2; x2^2", None).unwrap();
    let variants = ["x2^2 + x1*x2; x1^2", "-x1^2 - x1*x2; x2^2", "x1^2 + x1*x2 + x2^2; x2^2", "x2^2; x1^2 + x1*x2"];
    for w in [2u64, 4] {
        let want = count(&base, 2, w);
        for v in variants {
            assert_eq!(count(&parse_tuple(v, None).unwrap(), 2, w), want, "{v} at W = {w}");
        }
    }
}

#[test]
fn ladder_is_monotone_and_deterministic() {
    let q = parse_tuple("x1^2 + x2^2", None).unwrap();
    let spec = CountSpec { tuple: q, s: 2, w_values: vec![8, 1, 4, 2] };
    let a = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| count_solutions(&spec, &CountLimits::default()).unwrap());
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| count_solutions(&spec, &CountLimits::default()).unwrap());
    assert_eq!(a, b);
    assert!(a.check_invariants().is_ok());
    let ws: Vec<u64> = a.counts.iter().map(|c| c.0).collect();
    assert_eq!(ws, [8, 1, 4, 2]);
}

#[test]
fn bad_inputs_are_refused() {
    let q = parse_tuple("x1^2", None).unwrap();
    assert!(count_naive(&q, 0, 3).is_err());
    assert!(count_naive(&q, 4, 40).is_err());
    let half = parse_tuple("x1^2 + 1/2*x1*x2", None).unwrap();
    assert!(count_solutions(&CountSpec { tuple: half, s: 2, w_values: vec![2] }, &CountLimits::default()).is_err());
    let spec = CountSpec { tuple: parse_tuple("x1^2 + x2^2 + x3^2", None).unwrap(), s: 3, w_values: vec![200] };
    assert!(count_solutions(&spec, &CountLimits { memory_cap: 1 << 10 }).is_err());
}
