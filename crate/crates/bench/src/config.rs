//! Experiment configuration in a plain `key = value` format.
//!
//! Blank lines and lines starting with `#` are ignored. Rendering is
//! canonical, so `parse(render(c)) == c`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use ssr_core::atsp::AtspStructure;
use ssr_core::profile::ErrorGuard;
use ssr_core::tree::{BranchingDistribution, EdgeCostDistribution, TreeSpec};

use crate::error::{parse_err, BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Bfs,
    Dfbnb,
    EpsDfbnb,
    IterEpsDfbnb,
    IterDeltaDfbnb,
    LocalSearch,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Bfs,
        Algorithm::Dfbnb,
        Algorithm::EpsDfbnb,
        Algorithm::IterEpsDfbnb,
        Algorithm::IterDeltaDfbnb,
        Algorithm::LocalSearch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bfs => "bfs",
            Algorithm::Dfbnb => "dfbnb",
            Algorithm::EpsDfbnb => "eps_dfbnb",
            Algorithm::IterEpsDfbnb => "iter_eps_dfbnb",
            Algorithm::IterDeltaDfbnb => "iter_delta_dfbnb",
            Algorithm::LocalSearch => "local_search",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub depth: u32,
    pub branching: BranchingDistribution,
    pub edge_cost: EdgeCostDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainParams {
    Tree(TreeParams),
    Atsp { cities: usize, structure: AtspStructure },
    Stsp { cities: usize, max_cost: u64 },
    MaxSat { vars: usize, clauses: usize },
}

impl DomainParams {
    pub fn name(&self) -> &'static str {
        match self {
            DomainParams::Tree(_) => "tree",
            DomainParams::Atsp { .. } => "atsp",
            DomainParams::Stsp { .. } => "stsp",
            DomainParams::MaxSat { .. } => "maxsat",
        }
    }

    /// Relative-error convention used for profiles by default.
    pub fn default_guard(&self) -> ErrorGuard {
        match self {
            DomainParams::MaxSat { .. } => ErrorGuard::AtLeastOne,
            _ => ErrorGuard::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    /// Every run stops after this many node generations.
    Nodes(u64),
    /// Runs are unbudgeted; the profile grid ends where the slowest plain
    /// DFBnB run finished (or the slowest run, if DFBnB is not configured).
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainParams,
    pub algorithms: Vec<Algorithm>,
    pub budget: Budget,
    pub grid_points: usize,
    pub trials: u32,
    pub seed: u64,
    pub output: PathBuf,
    /// Node cap for computing a trial's exact optimum.
    pub optimum_cap: u64,
    /// Optimum cache; `None` means `<output>/optima`.
    pub cache_dir: Option<PathBuf>,
    pub error_guard: ErrorGuard,
    /// Pool increments observed by later iterations into the sample.
    pub reestimate: bool,
    /// Pure-literal assignment in the MAX-SAT adapter.
    pub pure_literals: bool,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn new(domain: DomainParams, algorithms: Vec<Algorithm>) -> Self {
        let error_guard = domain.default_guard();
        Self {
            domain,
            algorithms,
            budget: Budget::Auto,
            grid_points: 20,
            trials: 1,
            seed: 0,
            output: PathBuf::from("out"),
            optimum_cap: 100_000_000,
            cache_dir: None,
            error_guard,
            reestimate: false,
            pure_literals: false,
            threads: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Argument(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms configured".into());
        }
        if self.grid_points == 0 {
            return bad("grid_points must be at least 1".into());
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return bad("an algorithm is listed twice".into());
        }
        if self.algorithms.contains(&Algorithm::LocalSearch) {
            if !matches!(self.domain, DomainParams::Atsp { .. }) {
                return bad("local_search is only available for atsp".into());
            }
            if self.budget == Budget::Auto {
                return bad("local_search needs a node budget".into());
            }
        }
        if self.budget == Budget::Nodes(0) {
            return bad("budget must be positive".into());
        }
        match &self.domain {
            DomainParams::Tree(t) => {
                TreeSpec::new(t.depth, t.branching.clone(), t.edge_cost.clone(), 0).validate()?
            }
            DomainParams::Atsp { cities, .. } | DomainParams::Stsp { cities, .. } if *cities < 3 => {
                return bad(format!("at least 3 cities are needed, got {cities}"));
            }
            DomainParams::MaxSat { vars, .. } if *vars < 3 => {
                return bad(format!("at least 3 variables are needed, got {vars}"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir
            .clone()
            .unwrap_or_else(|| self.output.join("optima"))
    }

    /// Canonical text form.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries(true) {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// Hash of every setting that can change results (output location,
    /// cache location and thread count excluded).
    pub fn result_hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries(false) {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }

    fn entries(&self, with_locations: bool) -> Vec<(&'static str, String)> {
        let mut e = vec![("domain", self.domain.name().to_string())];
        match &self.domain {
            DomainParams::Tree(t) => {
                e.push(("depth", t.depth.to_string()));
                e.push(("branching", render_branching(&t.branching)));
                e.push(("cost_dist", render_cost(&t.edge_cost)));
            }
            DomainParams::Atsp { cities, structure } => {
                e.push(("cities", cities.to_string()));
                e.push((
                    "structure",
                    match structure {
                        AtspStructure::UniformRange(r) => format!("uniform:{r}"),
                        AtspStructure::ITimesJ => "ixj".into(),
                    },
                ));
            }
            DomainParams::Stsp { cities, max_cost } => {
                e.push(("cities", cities.to_string()));
                e.push(("max_cost", max_cost.to_string()));
            }
            DomainParams::MaxSat { vars, clauses } => {
                e.push(("vars", vars.to_string()));
                e.push(("clauses", clauses.to_string()));
                e.push(("pure_literals", self.pure_literals.to_string()));
            }
        }
        let algs: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        e.push(("algorithms", algs.join(",")));
        e.push((
            "budget",
            match self.budget {
                Budget::Nodes(n) => n.to_string(),
                Budget::Auto => "auto".into(),
            },
        ));
        e.push(("grid_points", self.grid_points.to_string()));
        e.push(("trials", self.trials.to_string()));
        e.push(("seed", self.seed.to_string()));
        e.push(("optimum_cap", self.optimum_cap.to_string()));
        e.push((
            "error_guard",
            match self.error_guard {
                ErrorGuard::Strict => "strict",
                ErrorGuard::AtLeastOne => "at_least_one",
            }
            .into(),
        ));
        e.push(("reestimate", self.reestimate.to_string()));
        if with_locations {
            e.push(("output", self.output.display().to_string()));
            if let Some(c) = &self.cache_dir {
                e.push(("cache_dir", c.display().to_string()));
            }
            e.push(("threads", self.threads.to_string()));
        }
        e
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(parse_pairs(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Builds a config from key/value pairs, each tagged with its source
    /// line (0 when it did not come from a file).
    pub fn from_map(mut map: BTreeMap<String, (usize, String)>) -> Result<Self> {
        let mut take = |key: &str| map.remove(key);
        let domain_name = take("domain").ok_or_else(|| parse_err(0, "missing key `domain`"))?;
        let domain = match domain_name.1.as_str() {
            "tree" => DomainParams::Tree(TreeParams {
                depth: required(take("depth"), "depth")?,
                branching: with_line(take("branching"), "branching", parse_branching)?,
                edge_cost: with_line(take("cost_dist"), "cost_dist", parse_cost)?,
            }),
            "atsp" => DomainParams::Atsp {
                cities: required(take("cities"), "cities")?,
                structure: with_line(take("structure"), "structure", parse_structure)?,
            },
            "stsp" => DomainParams::Stsp {
                cities: required(take("cities"), "cities")?,
                max_cost: optional(take("max_cost"), "max_cost")?.unwrap_or(u32::MAX as u64),
            },
            "maxsat" => DomainParams::MaxSat {
                vars: required(take("vars"), "vars")?,
                clauses: required(take("clauses"), "clauses")?,
            },
            other => return Err(parse_err(domain_name.0, format!("unknown domain `{other}`"))),
        };
        let algorithms = with_line(take("algorithms"), "algorithms", |s| {
            s.split(',')
                .map(|a| {
                    let a = a.trim();
                    Algorithm::parse(a).ok_or_else(|| format!("unknown algorithm `{a}`"))
                })
                .collect::<std::result::Result<Vec<_>, _>>()
        })?;
        let mut cfg = ExperimentConfig::new(domain, algorithms);
        if let Some((line, v)) = take("budget") {
            cfg.budget = if v == "auto" {
                Budget::Auto
            } else {
                Budget::Nodes(v.parse().map_err(|_| parse_err(line, format!("bad budget `{v}`")))?)
            };
        }
        if let Some(v) = optional(take("grid_points"), "grid_points")? {
            cfg.grid_points = v;
        }
        if let Some(v) = optional(take("trials"), "trials")? {
            cfg.trials = v;
        }
        if let Some(v) = optional(take("seed"), "seed")? {
            cfg.seed = v;
        }
        if let Some(v) = optional(take("optimum_cap"), "optimum_cap")? {
            cfg.optimum_cap = v;
        }
        if let Some(v) = optional(take("reestimate"), "reestimate")? {
            cfg.reestimate = v;
        }
        if let Some(v) = optional(take("pure_literals"), "pure_literals")? {
            cfg.pure_literals = v;
        }
        if let Some(v) = optional(take("threads"), "threads")? {
            cfg.threads = v;
        }
        if let Some((_, v)) = take("output") {
            cfg.output = PathBuf::from(v);
        }
        if let Some((_, v)) = take("cache_dir") {
            cfg.cache_dir = Some(PathBuf::from(v));
        }
        if let Some((line, v)) = take("error_guard") {
            cfg.error_guard = match v.as_str() {
                "strict" => ErrorGuard::Strict,
                "at_least_one" => ErrorGuard::AtLeastOne,
                _ => return Err(parse_err(line, format!("unknown error_guard `{v}`"))),
            };
        }
        if let Some((key, (line, _))) = map.into_iter().next() {
            return Err(parse_err(line, format!("unexpected key `{key}` for this domain")));
        }
        Ok(cfg)
    }
}

/// Splits `key = value` lines. Later duplicates are an error.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(i + 1, "expected `key = value`"))?;
        let k = k.trim().to_string();
        if map.insert(k.clone(), (i + 1, v.trim().to_string())).is_some() {
            return Err(parse_err(i + 1, format!("duplicate key `{k}`")));
        }
    }
    Ok(map)
}

fn with_line<T>(
    entry: Option<(usize, String)>,
    key: &str,
    f: impl FnOnce(&str) -> std::result::Result<T, String>,
) -> Result<T> {
    let (line, v) = entry.ok_or_else(|| parse_err(0, format!("missing key `{key}`")))?;
    f(&v).map_err(|m| parse_err(line, m))
}

fn required<T: std::str::FromStr>(entry: Option<(usize, String)>, key: &str) -> Result<T> {
    optional(entry, key)?.ok_or_else(|| parse_err(0, format!("missing key `{key}`")))
}

fn optional<T: std::str::FromStr>(entry: Option<(usize, String)>, key: &str) -> Result<Option<T>> {
    entry
        .map(|(line, v)| {
            v.parse()
                .map_err(|_| parse_err(line, format!("bad value `{v}` for `{key}`")))
        })
        .transpose()
}

pub fn render_branching(b: &BranchingDistribution) -> String {
    match b {
        BranchingDistribution::Fixed(n) => format!("fixed:{n}"),
        BranchingDistribution::Poisson { mean } => format!("poisson:{mean}"),
    }
}

pub fn parse_branching(s: &str) -> std::result::Result<BranchingDistribution, String> {
    match s.split_once(':') {
        Some(("fixed", n)) => n
            .parse()
            .map(BranchingDistribution::Fixed)
            .map_err(|_| format!("bad branching `{s}`")),
        Some(("poisson", m)) => m
            .parse()
            .map(|mean| BranchingDistribution::Poisson { mean })
            .map_err(|_| format!("bad branching `{s}`")),
        _ => Err(format!("branching must be fixed:B or poisson:MEAN, got `{s}`")),
    }
}

pub fn render_cost(c: &EdgeCostDistribution) -> String {
    match c {
        EdgeCostDistribution::UniformInteger { lo, hi } => format!("uniform:{lo}:{hi}"),
        EdgeCostDistribution::Discrete {
            values,
            probabilities,
        } => {
            let parts: Vec<String> = values
                .iter()
                .zip(probabilities)
                .map(|(v, p)| format!("{v}@{p}"))
                .collect();
            format!("discrete:{}", parts.join(","))
        }
    }
}

pub fn parse_cost(s: &str) -> std::result::Result<EdgeCostDistribution, String> {
    let bad = || format!("bad cost_dist `{s}`");
    if let Some(rest) = s.strip_prefix("uniform:") {
        let (lo, hi) = rest.split_once(':').ok_or_else(bad)?;
        return Ok(EdgeCostDistribution::uniform(
            lo.parse().map_err(|_| bad())?,
            hi.parse().map_err(|_| bad())?,
        ));
    }
    if let Some(rest) = s.strip_prefix("zero_inflated:") {
        let (p0, max) = rest.split_once(':').ok_or_else(bad)?;
        return Ok(EdgeCostDistribution::zero_inflated(
            p0.parse().map_err(|_| bad())?,
            max.parse().map_err(|_| bad())?,
        ));
    }
    if let Some(rest) = s.strip_prefix("discrete:") {
        let mut values = Vec::new();
        let mut probabilities = Vec::new();
        for part in rest.split(',') {
            let (v, p) = part.split_once('@').ok_or_else(bad)?;
            values.push(v.trim().parse().map_err(|_| bad())?);
            probabilities.push(p.trim().parse().map_err(|_| bad())?);
        }
        return Ok(EdgeCostDistribution::Discrete {
            values,
            probabilities,
        });
    }
    Err(format!(
        "cost_dist must be uniform:LO:HI, zero_inflated:P0:MAX or discrete:V@P,..., got `{s}`"
    ))
}

fn parse_structure(s: &str) -> std::result::Result<AtspStructure, String> {
    if s == "ixj" {
        return Ok(AtspStructure::ITimesJ);
    }
    s.strip_prefix("uniform:")
        .and_then(|r| r.parse().ok())
        .map(AtspStructure::UniformRange)
        .ok_or_else(|| format!("structure must be uniform:R or ixj, got `{s}`"))
}

/// `depth`, `branching`, `cost_dist` and `seed` lines for a tree.
pub fn render_tree_spec(spec: &TreeSpec) -> String {
    format!(
        "depth = {}\nbranching = {}\ncost_dist = {}\nseed = {}\n",
        spec.depth,
        render_branching(&spec.branching),
        render_cost(&spec.edge_cost),
        spec.seed
    )
}

pub fn parse_tree_spec(text: &str) -> Result<TreeSpec> {
    let mut map = parse_pairs(text)?;
    let mut take = |k: &str| map.remove(k);
    let spec = TreeSpec::new(
        required(take("depth"), "depth")?,
        with_line(take("branching"), "branching", parse_branching)?,
        with_line(take("cost_dist"), "cost_dist", parse_cost)?,
        required(take("seed"), "seed")?,
    );
    if let Some((key, (line, _))) = map.into_iter().next() {
        return Err(parse_err(line, format!("unexpected key `{key}`")));
    }
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_block_round_trip() {
        let spec = TreeSpec::new(
            12,
            BranchingDistribution::Poisson { mean: 2.5 },
            EdgeCostDistribution::Discrete {
                values: vec![0.0, 0.25, 1.5],
                probabilities: vec![0.2, 0.3, 0.5],
            },
            99,
        );
        assert_eq!(parse_tree_spec(&render_tree_spec(&spec)).unwrap(), spec);
    }

    #[test]
    fn reports_line_numbers() {
        let err = ExperimentConfig::parse("domain = tree\n# c\ndepth = x\n").unwrap_err();
        assert!(matches!(err, BenchError::Parse { line: 3, .. }), "{err}");
        let err = ExperimentConfig::parse(
            "domain = stsp\ncities = 5\nalgorithms = dfbnb\nvars = 3\n",
        )
        .unwrap_err();
        assert!(matches!(err, BenchError::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn hash_ignores_locations() {
        let mut a = ExperimentConfig::new(
            DomainParams::MaxSat { vars: 30, clauses: 450 },
            vec![Algorithm::Dfbnb],
        );
        let h = a.result_hash();
        a.output = PathBuf::from("elsewhere");
        a.threads = 3;
        assert_eq!(a.result_hash(), h);
        a.seed = 1;
        assert_ne!(a.result_hash(), h);
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::new(
            DomainParams::Stsp { cities: 8, max_cost: 100 },
            vec![Algorithm::LocalSearch],
        );
        assert!(c.validate().is_err());
        c.algorithms = vec![Algorithm::Dfbnb];
        assert!(c.validate().is_ok());
        c.trials = 0;
        assert!(c.validate().is_err());
    }
}
