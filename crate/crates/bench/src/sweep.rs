//! Phase-transition grid export.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use ssr_core::tree::{sweep_phase_transition, GrowthTable};

use crate::error::{parse_err, Result};
use crate::fit::{compare_growth, GrowthComparison};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub branching: u32,
    pub p0: Vec<f64>,
    pub depths: Vec<u32>,
    pub trials: u32,
    pub seed: u64,
    pub node_budget: Option<u64>,
    pub output: PathBuf,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            branching: 2,
            p0: vec![0.2, 0.5, 0.7],
            depths: (5..=18).collect(),
            trials: 300,
            seed: 0,
            node_budget: None,
            output: PathBuf::from("out"),
        }
    }
}

fn list<T: FromStr>(line: usize, s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| parse_err(line, format!("bad {what} `{x}`")))
        })
        .collect()
}

fn single<T: FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{s}`")))
}

/// Depths as a comma list (`5,6,7`) or an inclusive range (`5..18`).
pub fn parse_depths(line: usize, s: &str) -> Result<Vec<u32>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = single(line, a, "depth")?;
        let b: u32 = single(line, b, "depth")?;
        if a > b {
            return Err(parse_err(line, format!("empty depth range `{s}`")));
        }
        return Ok((a..=b).collect());
    }
    list(line, s, "depth")
}

impl SweepSpec {
    /// Keys: branching, p0, depths, trials, seed, budget, output.
    pub fn from_map(mut map: BTreeMap<String, (usize, String)>) -> Result<Self> {
        let mut spec = Self::default();
        let mut one = |key: &str| -> Option<(usize, String)> { map.remove(key) };
        if let Some((l, v)) = one("branching") {
            spec.branching = single(l, &v, "branching")?;
        }
        if let Some((l, v)) = one("p0") {
            spec.p0 = list(l, &v, "p0")?;
        }
        if let Some((l, v)) = one("depths") {
            spec.depths = parse_depths(l, &v)?;
        }
        if let Some((l, v)) = one("trials") {
            spec.trials = single(l, &v, "trials")?;
        }
        if let Some((l, v)) = one("seed") {
            spec.seed = single(l, &v, "seed")?;
        }
        if let Some((l, v)) = one("budget") {
            spec.node_budget = if v == "none" {
                None
            } else {
                Some(single(l, &v, "budget")?)
            };
        }
        if let Some((_, v)) = one("output") {
            spec.output = PathBuf::from(v);
        }
        if let Some((key, (line, _))) = map.into_iter().next() {
            return Err(parse_err(line, format!("unexpected key `{key}`")));
        }
        Ok(spec)
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<GrowthTable> {
    Ok(sweep_phase_transition(
        spec.branching,
        &spec.p0,
        &spec.depths,
        spec.trials,
        spec.seed,
        spec.node_budget,
    )?)
}

/// Fit of mean BFS nodes against depth for one `p0`.
pub fn growth_fit(table: &GrowthTable, p0: f64) -> Result<GrowthComparison> {
    let cells: Vec<_> = table.cells.iter().filter(|c| c.p0 == p0).collect();
    let x: Vec<f64> = cells.iter().map(|c| c.depth as f64).collect();
    let y: Vec<f64> = cells.iter().map(|c| c.mean_bfs_nodes).collect();
    compare_growth(&x, &y)
}

pub fn render_cells(table: &GrowthTable) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "branching",
        "p0",
        "bp0",
        "depth",
        "trials",
        "mean_bfs_nodes",
        "mean_dfbnb_nodes",
        "truncated_runs",
    ])?;
    for c in &table.cells {
        w.write_record([
            table.branching.to_string(),
            c.p0.to_string(),
            (table.branching as f64 * c.p0).to_string(),
            c.depth.to_string(),
            c.trials.to_string(),
            c.mean_bfs_nodes.to_string(),
            c.mean_dfbnb_nodes.to_string(),
            c.truncated_runs.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
}

/// One row per `p0`: log-slope and residuals of both models.
pub fn render_fits(table: &GrowthTable, p0: &[f64]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["p0", "log_slope", "exponential_rss", "quadratic_rss", "better_model"])?;
    for &p in p0 {
        let f = growth_fit(table, p)?;
        w.write_record([
            p.to_string(),
            f.log_slope.to_string(),
            f.exponential_rss.to_string(),
            f.quadratic_rss.to_string(),
            if f.exponential_wins() { "exponential" } else { "quadratic" }.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
}
