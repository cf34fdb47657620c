//! Resolved run configuration: defaults, then a `key = value` file, then
//! command-line flags.

use std::path::{Path, PathBuf};

use serde::Serialize;

use quadec::numvar::{SearchBudget, SearchConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

/// Everything a run depends on. Emitted with every artifact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub budget: SearchBudget,
    pub memory_cap: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub require_exact: bool,
    /// Worker count; results do not depend on it, so it is not part of the
    /// JSON output.
    #[serde(skip)]
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            budget: SearchBudget::default(),
            memory_cap: quadec::harness::CountLimits::default().memory_cap,
            format: Format::Json,
            out: None,
            require_exact: false,
            jobs: None,
        }
    }
}

impl RunConfig {
    pub fn search(&self) -> SearchConfig {
        SearchConfig { budget: self.budget, seed: self.seed }
    }
}

/// Settings that may come from a file or from flags. `None` means unset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub random_flags: Option<usize>,
    pub restarts: Option<usize>,
    pub exact_only: Option<bool>,
    pub memory_cap: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub require_exact: Option<bool>,
    pub jobs: Option<usize>,
}

impl Overrides {
    /// Values in `self` win over `other`.
    pub fn or(self, other: Overrides) -> Overrides {
        Overrides {
            seed: self.seed.or(other.seed),
            random_flags: self.random_flags.or(other.random_flags),
            restarts: self.restarts.or(other.restarts),
            exact_only: self.exact_only.or(other.exact_only),
            memory_cap: self.memory_cap.or(other.memory_cap),
            format: self.format.or(other.format),
            out: self.out.or(other.out),
            require_exact: self.require_exact.or(other.require_exact),
            jobs: self.jobs.or(other.jobs),
        }
    }

    pub fn resolve(self) -> RunConfig {
        let mut c = RunConfig::default();
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(f) = self.random_flags {
            c.budget.random_flags = f;
        }
        if let Some(r) = self.restarts {
            c.budget.restarts = r;
        }
        if self.exact_only == Some(true) {
            c.budget = SearchBudget::exact_only();
        }
        if let Some(m) = self.memory_cap {
            c.memory_cap = m;
        }
        if let Some(f) = self.format {
            c.format = f;
        }
        c.out = self.out;
        c.require_exact = self.require_exact.unwrap_or(false);
        c.jobs = self.jobs;
        c
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got {v:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Overrides, String> {
    let mut o = Overrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected key = value", i + 1));
        };
        let (k, v) = (k.trim(), v.trim().trim_matches('"'));
        match k {
            "seed" => o.seed = Some(parse_num(k, v)?),
            "random_flags" | "budget.random_flags" => o.random_flags = Some(parse_num(k, v)?),
            "restarts" | "budget.restarts" => o.restarts = Some(parse_num(k, v)?),
            "exact_only" => o.exact_only = Some(parse_bool(v)?),
            "memory_cap" => o.memory_cap = Some(parse_num(k, v)?),
            "format" => o.format = Some(v.parse()?),
            "out" => o.out = Some(PathBuf::from(v)),
            "require_exact" => o.require_exact = Some(parse_bool(v)?),
            "jobs" => o.jobs = Some(parse_num(k, v)?),
            other => return Err(format!("line {}: unknown key {other:?}", i + 1)),
        }
    }
    Ok(o)
}

pub fn read_config(path: &Path) -> Result<Overrides, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config(&text)
}

/// `FLAGS,RESTARTS`.
pub fn parse_budget(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| "budget is FLAGS,RESTARTS".to_string())?;
    Ok((parse_num("budget", a.trim())?, parse_num("budget", b.trim())?))
}
