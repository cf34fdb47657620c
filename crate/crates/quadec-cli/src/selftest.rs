//! Golden cases with known answers, run by `quadec selftest`.

use serde::Serialize;

use quadec::exponent::{
    classify, gamma, gamma_graph, restriction_exponent, AffineBranch, Exponent, PiecewiseExponent, QMode,
};
use quadec::forms::catalog::{ack, paraboloid, parsell_vinogradov, q1, q2, q_infinity_example};
use quadec::forms::{CoefficientSubspace, FormTuple};
use quadec::linalg::{format_rat, frac, rat, unit, Rat, Subspace};
use quadec::numvar::{numvar_ack, numvar_pair, numvar_table, verify_witness, FlagWitness, NumvarTable, SearchConfig};
use quadec::parser::{format_tuple, parse_tuple};

#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub cases: Vec<CaseResult>,
    pub passed: usize,
    pub failed: usize,
}

type Check = Result<String, String>;

fn tuple(text: &str) -> FormTuple {
    parse_tuple(text, None).expect("golden tuple parses")
}

fn expect<T: PartialEq + std::fmt::Debug>(got: T, want: T) -> Check {
    if got == want {
        Ok(format!("{got:?}"))
    } else {
        Err(format!("got {got:?}, want {want:?}"))
    }
}

fn rows(t: &NumvarTable, d_prime: usize) -> Vec<Option<usize>> {
    t.row(d_prime)
}

fn some(v: &[usize]) -> Vec<Option<usize>> {
    v.iter().map(|&x| Some(x)).collect()
}

fn kinks(g: &PiecewiseExponent) -> Vec<String> {
    g.kink_values().iter().map(format_rat).collect()
}

fn pair_tuple() -> FormTuple {
    tuple("x1^2 + x2^2 + x3^2 + 2*x1*x2 + 2*x1*x3 + 2*x2*x3; x1^2 + 2*x1*x2 + x2^2; x1^2 + 2*x1*x2 + x2^2")
}

fn gamma_point(t: &NumvarTable, q: Exponent, p: Exponent, want: Rat) -> Check {
    let g = gamma(t, &q, &p);
    match g.value() {
        Some(v) if *v == want => Ok(format!("Γ = {v}")),
        _ => Err(format!("Γ in [{}, {}], want {want}", g.lower, g.upper)),
    }
}

fn cases(config: &SearchConfig) -> Vec<(&'static str, Box<dyn Fn() -> Check + '_>)> {
    let table = move |q: &FormTuple| numvar_table(q, config);
    vec![
        (
            "variable count of ((x1+x3)^2, (x1+x3+x4)^2)",
            Box::new(|| {
                expect(
                    tuple("@d=4 x1^2 + 2*x1*x3 + x3^2; x1^2 + x3^2 + x4^2 + 2*x1*x3 + 2*x1*x4 + 2*x3*x4").nv_count(),
                    3,
                )
            }),
        ),
        ("variable count of the 4-cycle", Box::new(|| expect(tuple("x1*x2; x2*x3; x3*x4; x4*x1").nv_count(), 4))),
        (
            "PV3 restricted to x3 = 0",
            Box::new(|| {
                let h = Subspace::coordinate(3, &[0, 1]);
                let r = parsell_vinogradov(3).restrict(&h).map_err(|e| e.to_string())?;
                // Forms containing x3 vanish; the rest keep their place.
                expect(format_tuple(&r), "x1^2; x1*x2; 0; x2^2; 0; 0".to_string())
            }),
        ),
        (
            "zero combination of the pair example",
            Box::new(|| {
                let s = CoefficientSubspace::span(3, &[vec![rat(0), rat(1), rat(-1)]]);
                let m = pair_tuple().mix(&s).map_err(|e| e.to_string())?;
                expect(m.forms().iter().all(|f| f.is_zero()) && m.n() == 1, true)
            }),
        ),
        ("minimal variables of the pair example", Box::new(|| expect(pair_tuple().minimal_variables(), 2))),
        ("minimal variables of q1", Box::new(|| expect(q1().minimal_variables(), 3))),
        (
            "witness for nv_{2,2}(q2) <= 1",
            Box::new(|| {
                let w = FlagWitness {
                    h: Subspace::coordinate(3, &[1, 2]),
                    u: Subspace::coordinate(3, &[2]),
                    s: CoefficientSubspace::full(2),
                };
                expect(verify_witness(&q2(), 2, 2, &w).map_err(|e| e.to_string())?, 1)
            }),
        ),
        (
            "witness for nv_{2,3}(q1) = 0",
            Box::new(|| {
                let w = FlagWitness {
                    h: Subspace::coordinate(3, &[0, 1]),
                    u: Subspace::coordinate(3, &[0, 1]),
                    s: CoefficientSubspace::span(4, &[unit(4, 1), unit(4, 2), unit(4, 3)]),
                };
                expect(verify_witness(&q1(), 2, 3, &w).map_err(|e| e.to_string())?, 0)
            }),
        ),
        (
            "q1 table",
            Box::new(move || {
                let t = table(&q1());
                expect((rows(&t, 3), rows(&t, 2)), (some(&[0, 1, 2, 3, 3]), some(&[0, 0, 0, 0, 2])))
            }),
        ),
        (
            "q2 table",
            Box::new(move || {
                let t = table(&q2());
                expect((rows(&t, 3), rows(&t, 2)), (some(&[0, 1, 3]), some(&[0, 0, 1])))
            }),
        ),
        ("pair example row d'=3", Box::new(move || expect(rows(&table(&pair_tuple()), 3), some(&[0, 0, 1, 2])))),
        (
            "paraboloid nv_{d,1} = d",
            Box::new(move || {
                let got: Vec<_> = (1..=4).map(|d| table(&paraboloid(d)).get(d, 1).value()).collect();
                expect(got, some(&[1, 2, 3, 4]))
            }),
        ),
        (
            "ACK solver reproduces the q1 table",
            Box::new(|| {
                let mut got = Vec::new();
                for dp in [2, 3] {
                    for np in 0..=4 {
                        got.push(numvar_ack(&[1, 1, 2], dp, np).map_err(|e| e.to_string())?.value());
                    }
                }
                expect(got, some(&[0, 0, 0, 0, 2, 0, 1, 2, 3, 3]))
            }),
        ),
        (
            "nv_{d-1,n}(PV_d) = d - 1",
            Box::new(|| {
                let got: Vec<_> = (2..=4usize)
                    .map(|d| numvar_ack(&vec![2; d], d - 1, d * (d + 1) / 2).map(|c| c.value()))
                    .collect::<Result<_, _>>()
                    .map_err(|e| e.to_string())?;
                expect(got, some(&[1, 2, 3]))
            }),
        ),
        (
            "pencil solver nv_{3,1}(q2) = 1",
            Box::new(|| expect(numvar_pair(&q2(), 3, 1).map_err(|e| e.to_string())?.value(), Some(1))),
        ),
        (
            "(x1^2 + x2*x4, x3*x4) table",
            Box::new(move || {
                let t = table(&q_infinity_example());
                let mut want = vec![vec![0; 3]; 5];
                want[4][2] = 4;
                want[4][1] = 2;
                want[3][2] = 1;
                expect((t.is_exact(), t.uppers()), (true, want))
            }),
        ),
        (
            "Γ_{8,8}(q1) = 5/4",
            Box::new(move || gamma_point(&table(&q1()), Exponent::from_int(8), Exponent::from_int(8), frac(5, 4))),
        ),
        (
            "Γ_{4,4}(q2) = 3/4",
            Box::new(move || gamma_point(&table(&q2()), Exponent::from_int(4), Exponent::from_int(4), frac(3, 4))),
        ),
        (
            "Γ_{∞,4}(x1^2 + x2*x4, x3*x4) = 9/4",
            Box::new(move || {
                gamma_point(&table(&q_infinity_example()), Exponent::Infinite, Exponent::from_int(4), frac(9, 4))
            }),
        ),
        (
            "q1 graph kinks {6, 8}",
            Box::new(move || {
                let g = gamma_graph(&table(&q1()), &QMode::Diagonal).map_err(|e| e.to_string())?;
                let b: Vec<String> = g.branches.iter().map(AffineBranch::formula).collect();
                expect(
                    (b, kinks(&g)),
                    (vec!["3/2 - 3/p".into(), "2 - 6/p".into(), "3 - 14/p".into()], vec!["6".into(), "8".into()]),
                )
            }),
        ),
        (
            "paraboloid d=2 graph",
            Box::new(move || {
                let g = gamma_graph(&table(&paraboloid(2)), &QMode::Diagonal).map_err(|e| e.to_string())?;
                let b: Vec<String> = g.branches.iter().map(AffineBranch::formula).collect();
                // The two branches cross at p = 4.
                expect((b, kinks(&g)), (vec!["1 - 2/p".into(), "2 - 6/p".into()], vec!["4".to_string()]))
            }),
        ),
        (
            "paraboloids are strongly non-degenerate",
            Box::new(move || {
                let got: Vec<bool> = (1..=4)
                    .map(|d| classify(&table(&paraboloid(d))).map(|c| c.strongly_nondegenerate))
                    .collect::<Result<_, _>>()
                    .map_err(|e| e.to_string())?;
                expect(got, vec![true; 4])
            }),
        ),
        (
            "classify x1^2; x2^2 + x1*x3",
            Box::new(move || {
                let c = classify(&table(&tuple("x1^2; x2^2 + x1*x3"))).map_err(|e| e.to_string())?;
                expect((c.strongly_nondegenerate, c.nondegenerate, c.weakly_nondegenerate), (false, false, true))
            }),
        ),
        (
            "restriction exponent of PV2 = 6",
            Box::new(move || {
                expect(
                    format_rat(&restriction_exponent(&table(&parsell_vinogradov(2))).map_err(|e| e.to_string())?),
                    "6".to_string(),
                )
            }),
        ),
        (
            "ACK tuple for (1,1,2) is q1",
            Box::new(|| expect(ack(&[1, 1, 2]).map(|q| format_tuple(&q)), Some(format_tuple(&q1())))),
        ),
    ]
}

pub fn run(config: &SearchConfig) -> SelftestReport {
    let cases: Vec<CaseResult> = cases(config)
        .into_iter()
        .map(|(name, check)| match check() {
            Ok(detail) => CaseResult { name, passed: true, detail },
            Err(detail) => CaseResult { name, passed: false, detail },
        })
        .collect();
    let passed = cases.iter().filter(|c| c.passed).count();
    SelftestReport { failed: cases.len() - passed, passed, cases }
}
