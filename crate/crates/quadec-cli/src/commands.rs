//! Verb implementations and artifact emission.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use quadec::exponent::{
    classify_bounds, critical_pc, gamma, gamma_graph, gamma_graph_bounds, restriction_exponent, universal_lower_bound,
    Exponent, ExponentError, PiecewiseExponent, QMode,
};
use quadec::forms::FormTuple;
use quadec::harness::{
    count_naive, count_solutions, counts_csv, diagonal_fuzz, expsum_even_norm, fit_and_compare, invariance_fuzz,
    sylvester_fuzz, zero_block_fuzz, CountLimits, CountSpec, FitTolerance, FuzzReport, HarnessError, Verdict,
};
use quadec::linalg::format_rat;
use quadec::numvar::{numvar_table, NumvarTable};
use quadec::parser::{format_tuple, parse_input, ParseError};

use crate::config::{read_config, Format, RunConfig};
use crate::{selftest, svg, Cli, Command};

/// Largest dimension accepted on input.
const MAX_D: usize = 12;
/// Largest number of forms accepted on input.
const MAX_N: usize = 40;
/// The naive oracle skips W with more than this many 2s-tuples.
const NAIVE_LIMIT: u128 = 20_000_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Verification(_) => 2,
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ExponentError> for CliError {
    fn from(e: ExponentError) -> Self {
        match e {
            ExponentError::UncertifiedTable { .. } => CliError::Verification(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvariantViolated(_) => CliError::Verification(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

/// What a verb produced. `failure` is reported after the artifact is
/// written.
struct Artifact {
    result: Value,
    csv: Option<String>,
    svg: Option<String>,
    failure: Option<String>,
}

impl Artifact {
    fn new(result: impl Serialize) -> Self {
        Self { result: to_value(result), csv: None, svg: None, failure: None }
    }

    fn csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }

    fn fail_if(mut self, cond: bool, msg: impl Into<String>) -> Self {
        if cond && self.failure.is_none() {
            self.failure = Some(msg.into());
        }
        self
    }
}

fn to_value(x: impl Serialize) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

#[derive(Serialize)]
struct InputInfo {
    tuple: String,
    d: usize,
    n: usize,
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    command: Value,
    config: &'a RunConfig,
    input: Option<InputInfo>,
    result: Value,
}

fn load_tuple(arg: &str) -> Result<FormTuple, CliError> {
    let text = match arg.strip_prefix('@').filter(|rest| !rest.starts_with("d=")) {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {path}: {e}")))?,
        None => arg.to_string(),
    };
    let q = parse_input(text.trim())?;
    if q.d() == 0 || q.d() > MAX_D {
        return Err(CliError::Input(format!("tuples need 1 to {MAX_D} variables, got {}", q.d())));
    }
    if q.n() == 0 || q.n() > MAX_N {
        return Err(CliError::Input(format!("tuples need 1 to {MAX_N} forms, got {}", q.n())));
    }
    Ok(q)
}

fn parse_exponent(s: &str) -> Result<Exponent, CliError> {
    Ok(s.parse::<Exponent>()?)
}

/// `16,32,64` or inclusive ranges `0..200`, mixed freely.
fn parse_w_list(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Input(format!("bad W list {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if a > b || b - a > 100_000 {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn certified_table(q: &FormTuple, config: &RunConfig) -> Result<NumvarTable, CliError> {
    let t = numvar_table(q, &config.search());
    t.check().map_err(CliError::Verification)?;
    Ok(t)
}

fn open_cells(t: &NumvarTable) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for dp in 0..=t.d() {
        for np in 0..=t.n() {
            if !t.get(dp, np).is_exact() {
                out.push((dp, np));
            }
        }
    }
    out
}

fn exactness(a: Artifact, t: &NumvarTable, config: &RunConfig) -> Artifact {
    let open = open_cells(t);
    a.fail_if(config.require_exact && !open.is_empty(), format!("open table cells {open:?}"))
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn level_name(t: &NumvarTable, dp: usize, np: usize) -> String {
    to_value(t.get(dp, np).level).as_str().unwrap_or_default().to_string()
}

fn numvar_cmd(q: &FormTuple, config: &RunConfig) -> Result<Artifact, CliError> {
    let t = certified_table(q, config)?;
    let mut rows = Vec::new();
    for dp in 0..=t.d() {
        for np in 0..=t.n() {
            let c = t.get(dp, np);
            rows.push(vec![
                dp.to_string(),
                np.to_string(),
                c.lower.to_string(),
                c.upper.to_string(),
                level_name(&t, dp, np),
                c.upper_by.clone(),
                c.lower_by.clone(),
                c.witness.as_ref().map(|w| w.serialized()).unwrap_or_default(),
            ]);
        }
    }
    let csv = csv_string(&["d_prime", "n_prime", "lower", "upper", "level", "upper_by", "lower_by", "witness"], rows);
    Ok(exactness(Artifact::new(&t).csv(csv), &t, config))
}

fn gamma_cmd(q: &FormTuple, qe: &Exponent, p: &Exponent, config: &RunConfig) -> Result<Artifact, CliError> {
    let t = certified_table(q, config)?;
    let g = gamma(&t, qe, p);
    let universal = universal_lower_bound(q.d(), q.n(), qe, p).ok().map(|r| format_rat(&r));
    let value = g.value().map(format_rat);
    let result = json!({
        "q": qe,
        "p": p,
        "value": value,
        "lower": format_rat(&g.lower),
        "upper": format_rat(&g.upper),
        "argmax": g.argmax,
        "universal_lower_bound": universal,
    });
    let csv = csv_string(
        &["q", "p", "lower", "upper"],
        vec![vec![qe.to_string(), p.to_string(), format_rat(&g.lower), format_rat(&g.upper)]],
    );
    let a = Artifact::new(result).csv(csv);
    Ok(a.fail_if(config.require_exact && !g.is_certified(), "Γ is only known as an interval"))
}

fn graph_json(g: &PiecewiseExponent) -> Value {
    let kinks: Vec<Value> = svg::kink_table(g).into_iter().map(|(p, v)| json!({ "p": p, "gamma": v })).collect();
    let branches: Vec<Value> = g
        .branches
        .iter()
        .map(|b| json!({ "label": b.label.to_string(), "formula": b.formula(), "branch": b }))
        .collect();
    json!({ "mode": g.mode, "branches": branches, "kinks": kinks, "pieces": g.pieces })
}

fn gamma_graph_cmd(q: &FormTuple, mode: QMode, config: &RunConfig) -> Result<(Artifact, String), CliError> {
    let t = certified_table(q, config)?;
    let (graph, lower) = if t.is_exact() {
        (gamma_graph(&t, &mode)?, None)
    } else {
        let (low, high) = gamma_graph_bounds(&t, &mode);
        (high, Some(low))
    };
    let result = json!({
        "certified": lower.is_none(),
        "graph": graph_json(&graph),
        "lower_graph": lower.as_ref().map(graph_json),
    });
    let rows = graph
        .pieces
        .iter()
        .map(|pc| {
            let labels: Vec<String> = pc.labels.iter().map(ToString::to_string).collect();
            vec![pc.p_from.to_string(), pc.p_to.to_string(), pc.branch.formula(), labels.join(" ")]
        })
        .collect();
    let csv = csv_string(&["p_from", "p_to", "formula", "cells"], rows);
    let title = format!("Γ for {}", format_tuple(q));
    let plot = svg::render(&graph, lower.as_ref(), &title);
    let mut a = Artifact::new(result).csv(csv);
    a.svg = Some(plot.clone());
    Ok((exactness(a, &t, config), plot))
}

fn classify_cmd(q: &FormTuple, config: &RunConfig) -> Result<Artifact, CliError> {
    let t = certified_table(q, config)?;
    let c = classify_bounds(&t);
    let result = json!({
        "strong": c.strongly_nondegenerate,
        "nd": c.nondegenerate,
        "weak": c.weakly_nondegenerate,
    });
    let show = |b: Option<bool>| b.map_or("undecided".to_string(), |b| b.to_string());
    let csv = csv_string(
        &["strong", "nd", "weak"],
        vec![vec![show(c.strongly_nondegenerate), show(c.nondegenerate), show(c.weakly_nondegenerate)]],
    );
    let undecided = [c.strongly_nondegenerate, c.nondegenerate, c.weakly_nondegenerate].iter().any(Option::is_none);
    let a = Artifact::new(result)
        .csv(csv)
        .fail_if(undecided, format!("open cells {:?} leave a condition undecided", open_cells(&t)));
    Ok(exactness(a, &t, config))
}

fn pc_cmd(q: &FormTuple, config: &RunConfig) -> Result<Artifact, CliError> {
    let t = certified_table(q, config)?;
    let pc = critical_pc(&t)?;
    let shown = pc.as_ref().map(ToString::to_string);
    let result = json!({ "weakly_nondegenerate": pc.is_some(), "p_c": shown });
    let csv = csv_string(&["p_c"], vec![vec![shown.unwrap_or_else(|| "none".into())]]);
    Ok(exactness(Artifact::new(result).csv(csv), &t, config))
}

fn restriction_cmd(q: &FormTuple, config: &RunConfig) -> Result<Artifact, CliError> {
    let t = certified_table(q, config)?;
    let p = format_rat(&restriction_exponent(&t)?);
    let result = json!({ "p_q": p, "range": format!("p > {p}") });
    let csv = csv_string(&["p_q"], vec![vec![p]]);
    Ok(exactness(Artifact::new(result).csv(csv), &t, config))
}

fn naive_feasible(d: usize, s: usize, w: u64) -> bool {
    (w as u128 + 1).checked_pow((2 * s * d) as u32).is_some_and(|n| n <= NAIVE_LIMIT)
}

fn count_cmd(q: &FormTuple, s: usize, ws: Vec<u64>, naive: bool, config: &RunConfig) -> Result<Artifact, CliError> {
    let limits = CountLimits { memory_cap: config.memory_cap };
    let spec = CountSpec { tuple: q.clone(), s, w_values: ws };
    let report = count_solutions(&spec, &limits)?;
    report.check_invariants()?;
    let mut mismatches = Vec::new();
    let mut oracle = Vec::new();
    if naive {
        for (w, j) in &report.counts {
            if !naive_feasible(q.d(), s, *w) {
                oracle.push(json!({ "W": w, "skipped": true }));
                continue;
            }
            let n = count_naive(q, s, *w)?;
            if n != *j {
                mismatches.push(*w);
            }
            oracle.push(json!({ "W": w, "J": n.to_string(), "agrees": n == *j }));
        }
    }
    let table = certified_table(q, config)?;
    let (fit, fit_note) = match fit_and_compare(&report, &table, &FitTolerance::default()) {
        Ok(f) => (Some(f), None),
        Err(HarnessError::ShortLadder) => (None, Some(HarnessError::ShortLadder.to_string())),
        Err(e) => return Err(e.into()),
    };
    let counts: Vec<Value> = report.counts.iter().map(|(w, j)| json!({ "W": w, "J": j.to_string() })).collect();
    let failed_fit = fit.as_ref().is_some_and(|f| f.verdict == Verdict::Fail);
    let fit_msg = fit.as_ref().map(|f| format!("fitted {:.4} above prediction {}", f.fitted, f.predicted_high));
    let result = json!({
        "s": s,
        "d": report.d,
        "counts": counts,
        "naive_oracle": naive.then_some(oracle),
        "fit": fit,
        "fit_note": fit_note,
    });
    Ok(Artifact::new(result)
        .csv(counts_csv(&report))
        .fail_if(!mismatches.is_empty(), format!("naive recount differs at W = {mismatches:?}"))
        .fail_if(failed_fit, fit_msg.unwrap_or_default()))
}

fn expsum_cmd(q: &FormTuple, s: usize, w: u64, config: &RunConfig) -> Result<Artifact, CliError> {
    let v = expsum_even_norm(q, w, s, &CountLimits { memory_cap: config.memory_cap })?;
    let result = json!({ "s": s, "W": w, "norm_power": v.to_string() });
    let csv = csv_string(&["W", "norm_power"], vec![vec![w.to_string(), v.to_string()]]);
    Ok(Artifact::new(result).csv(csv))
}

fn fuzz_csv(reports: &[FuzzReport]) -> String {
    let rows = reports
        .iter()
        .flat_map(|r| {
            r.cases.iter().map(move |c| {
                vec![
                    r.name.clone(),
                    c.index.to_string(),
                    c.passed.to_string(),
                    c.description.clone(),
                    c.detail.clone().unwrap_or_default(),
                ]
            })
        })
        .collect();
    csv_string(&["suite", "index", "passed", "description", "detail"], rows)
}

fn fuzz_cmd(q: Option<&FormTuple>, cases: usize, config: &RunConfig) -> Result<Artifact, CliError> {
    let reports = match q {
        Some(q) => vec![invariance_fuzz(q, config.seed, cases, &config.search())],
        None => vec![
            sylvester_fuzz(config.seed, cases),
            zero_block_fuzz(config.seed, cases),
            diagonal_fuzz(config.seed, cases, &config.search()),
        ],
    };
    let failures: usize = reports.iter().map(|r| r.failures).sum();
    let csv = fuzz_csv(&reports);
    let result = json!({ "failures": failures, "suites": reports });
    Ok(Artifact::new(result).csv(csv).fail_if(failures > 0, format!("{failures} fuzz cases failed")))
}

fn selftest_cmd(config: &RunConfig) -> Artifact {
    let report = selftest::run(&config.search());
    let rows = report.cases.iter().map(|c| vec![c.name.to_string(), c.passed.to_string(), c.detail.clone()]).collect();
    let csv = csv_string(&["case", "passed", "detail"], rows);
    let failed = report.failed;
    Artifact::new(&report).csv(csv).fail_if(failed > 0, format!("{failed} golden cases failed"))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Input(format!("cannot write output: {e}")))
        }
    }
}

fn command_json(cmd: &Command) -> Value {
    match cmd {
        Command::Numvar(_) => json!({ "verb": "numvar" }),
        Command::Gamma { q, p, .. } => json!({ "verb": "gamma", "q": q.as_deref().unwrap_or(p), "p": p }),
        Command::GammaGraph { q, .. } => json!({ "verb": "gamma-graph", "q": q.as_deref().unwrap_or("p") }),
        Command::Classify(_) => json!({ "verb": "classify" }),
        Command::Pc(_) => json!({ "verb": "pc" }),
        Command::RestrictionRange(_) => json!({ "verb": "restriction-range" }),
        Command::Count { s, w, naive_oracle, .. } => {
            json!({ "verb": "count", "s": s, "W": w, "naive_oracle": naive_oracle })
        }
        Command::Expsum { s, w, .. } => json!({ "verb": "expsum", "s": s, "W": w }),
        Command::Fuzz { cases, .. } => json!({ "verb": "fuzz", "cases": cases }),
        Command::Selftest => json!({ "verb": "selftest" }),
    }
}

fn tuple_arg(cmd: &Command) -> Option<&str> {
    match cmd {
        Command::Numvar(t) | Command::Classify(t) | Command::Pc(t) | Command::RestrictionRange(t) => Some(&t.tuple),
        Command::Gamma { input, .. }
        | Command::GammaGraph { input, .. }
        | Command::Count { input, .. }
        | Command::Expsum { input, .. } => Some(&input.tuple),
        Command::Fuzz { tuple, .. } => tuple.as_deref(),
        Command::Selftest => None,
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.global.config {
        Some(path) => read_config(path).map_err(CliError::Input)?,
        None => Default::default(),
    };
    let merged = cli.global.overrides().or(file);
    let seed_given = merged.seed.is_some();
    let config = merged.resolve();

    if let Some(j) = config.jobs {
        if j == 0 {
            return Err(CliError::Input("--jobs must be at least 1".into()));
        }
        // A second initialization (only possible in tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let is_graph = matches!(cli.command, Command::GammaGraph { .. });
    if config.format == Format::Svg && !is_graph {
        return Err(CliError::Input("svg output is only available for gamma-graph".into()));
    }
    if matches!(cli.command, Command::Fuzz { .. }) && std::env::var_os("CI").is_some() && !seed_given {
        return Err(CliError::Input("fuzz needs an explicit --seed when CI is set".into()));
    }

    let tuple = tuple_arg(&cli.command).map(load_tuple).transpose()?;
    let input = tuple.as_ref().map(|q| InputInfo { tuple: format_tuple(q), d: q.d(), n: q.n() });

    let artifact = match (&cli.command, &tuple) {
        (Command::Numvar(_), Some(q)) => numvar_cmd(q, &config)?,
        (Command::Gamma { q: qs, p, .. }, Some(q)) => {
            let p = parse_exponent(p)?;
            let qe = match qs {
                Some(s) => parse_exponent(s)?,
                None => p.clone(),
            };
            gamma_cmd(q, &qe, &p, &config)?
        }
        (Command::GammaGraph { q: qs, svg, .. }, Some(q)) => {
            let mode = match qs {
                Some(s) => QMode::Fixed(parse_exponent(s)?),
                None => QMode::Diagonal,
            };
            let (a, plot) = gamma_graph_cmd(q, mode, &config)?;
            if let Some(path) = svg {
                write_out(Some(path), &plot)?;
            }
            a
        }
        (Command::Classify(_), Some(q)) => classify_cmd(q, &config)?,
        (Command::Pc(_), Some(q)) => pc_cmd(q, &config)?,
        (Command::RestrictionRange(_), Some(q)) => restriction_cmd(q, &config)?,
        (Command::Count { s, w, naive_oracle, .. }, Some(q)) => {
            count_cmd(q, *s, parse_w_list(w)?, *naive_oracle, &config)?
        }
        (Command::Expsum { s, w, .. }, Some(q)) => expsum_cmd(q, *s, *w, &config)?,
        (Command::Fuzz { cases, .. }, q) => fuzz_cmd(q.as_ref(), *cases, &config)?,
        (Command::Selftest, _) => selftest_cmd(&config),
        _ => unreachable!("tuple verbs always carry a tuple"),
    };

    let text = match config.format {
        Format::Json => {
            let env = Envelope {
                tool: "quadec",
                version: env!("CARGO_PKG_VERSION"),
                command: command_json(&cli.command),
                config: &config,
                input,
                result: artifact.result,
            };
            serde_json::to_string_pretty(&env).expect("envelope serializes") + "\n"
        }
        Format::Csv => artifact.csv.unwrap_or_default(),
        Format::Svg => artifact.svg.unwrap_or_default(),
    };
    write_out(config.out.as_deref(), &text)?;
    match artifact.failure {
        Some(msg) => Err(CliError::Verification(msg)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_lists() {
        assert_eq!(parse_w_list("1,2, 4").unwrap(), vec![1, 2, 4]);
        assert_eq!(parse_w_list("0..3,8").unwrap(), vec![0, 1, 2, 3, 8]);
        assert!(parse_w_list("3..1").is_err());
        assert!(parse_w_list("x").is_err());
        assert!(parse_w_list("").is_err());
    }

    #[test]
    fn tuple_guards() {
        assert!(load_tuple("x1^2").is_ok());
        assert_eq!(load_tuple("x13^2").unwrap_err().code(), 1);
        assert_eq!(load_tuple("x1^3").unwrap_err().code(), 1);
        assert_eq!(load_tuple("@/nonexistent/file").unwrap_err().code(), 1);
        assert!(load_tuple("@d=3 x1^2").is_ok());
    }
}
