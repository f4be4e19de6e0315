//! Seeded batch runs: instances, algorithms, optima and profiles.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;
use ssr_core::atsp::{generate_atsp, local_search_baseline, AtspProblem};
use ssr_core::maxsat::{generate_3sat, SatProblem};
use ssr_core::profile::{aggregate_profiles, budget_grid, profile_from_record, relative_error, MeanProfile};
use ssr_core::reduction::{
    epsilon_dfbnb, iterative_delta_dfbnb, iterative_epsilon_dfbnb, EpsilonPolicy, IterationSummary,
    IterativeOptions,
};
use ssr_core::sampling::{epsilon_star, first_dive, EpsilonStar, OnlineSample};
use ssr_core::stsp::{generate_stsp, StspProblem};
use ssr_core::tree::{make_tree, TreeProblem, TreeSpec};
use ssr_core::{best_first_search, dfbnb, AnytimeEvent, AnytimeRecord, Cost, Limits, SearchProblem};

use crate::cache::OptimumCache;
use crate::config::{render_tree_spec, Algorithm, Budget, DomainParams, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::formats::{write_atsp, write_dimacs, write_stsp};

/// Seconds since the first call; the clock handed to the core crate.
pub fn clock() -> f64 {
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed().as_secs_f64()
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the instance for one trial.
pub fn instance_seed(seed: u64, trial: u32) -> u64 {
    splitmix(seed ^ splitmix(trial as u64 ^ 0x2545_f491_4f6c_dd1d))
}

/// A generated problem instance of any domain.
pub enum Instance {
    Tree(TreeProblem),
    Atsp(AtspProblem),
    Stsp(StspProblem),
    MaxSat(SatProblem),
}

/// Runs `$body` with `$p` bound to the concrete problem.
macro_rules! with_problem {
    ($inst:expr, $p:ident => $body:expr) => {
        match $inst {
            Instance::Tree($p) => $body,
            Instance::Atsp($p) => $body,
            Instance::Stsp($p) => $body,
            Instance::MaxSat($p) => $body,
        }
    };
}

impl Instance {
    pub fn generate(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        Ok(match &config.domain {
            DomainParams::Tree(t) => Instance::Tree(make_tree(TreeSpec::new(
                t.depth,
                t.branching.clone(),
                t.edge_cost.clone(),
                seed,
            ))?),
            DomainParams::Atsp { cities, structure } => {
                Instance::Atsp(AtspProblem::new(generate_atsp(*cities, *structure, seed)?))
            }
            DomainParams::Stsp { cities, max_cost } => {
                Instance::Stsp(StspProblem::new(generate_stsp(*cities, *max_cost, seed)?))
            }
            DomainParams::MaxSat { vars, clauses } => Instance::MaxSat(
                SatProblem::new(generate_3sat(*vars, *clauses, seed)?)
                    .with_pure_literals(config.pure_literals),
            ),
        })
    }

    /// Text that identifies the instance exactly.
    pub fn describe(&self) -> String {
        match self {
            Instance::Tree(p) => format!("tree\n{}", render_tree_spec(p.spec())),
            Instance::Atsp(p) => format!("atsp\n{}", write_atsp(p.instance())),
            Instance::Stsp(p) => format!("stsp\n{}", write_stsp(p.instance())),
            Instance::MaxSat(p) => format!("maxsat\n{}", write_dimacs(p.instance())),
        }
    }
}

/// One algorithm's run on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub best_cost: Option<Cost>,
    pub nodes_generated: u64,
    pub nodes_expanded: u64,
    pub optimal_proven: bool,
    pub truncated: bool,
    pub wall_time: f64,
    pub anytime: AnytimeRecord,
    pub iterations: Vec<IterationSummary>,
    pub sample: Option<OnlineSample>,
    pub epsilon_star: Option<EpsilonStar>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimumSource {
    Cache,
    /// A configured run proved optimality.
    Run(Algorithm),
    /// Separate branch-and-bound run, started from the best run's cost.
    Search,
    /// No optimum within the node cap.
    Unknown,
}

impl OptimumSource {
    pub fn name(self) -> String {
        match self {
            OptimumSource::Cache => "cache".into(),
            OptimumSource::Run(a) => format!("run:{a}"),
            OptimumSource::Search => "search".into(),
            OptimumSource::Unknown => "unknown".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: u32,
    pub instance_seed: u64,
    pub optimum: Option<Cost>,
    pub optimum_source: OptimumSource,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub trials: Vec<TrialOutcome>,
    pub grid: Vec<u64>,
    /// Mean profile per algorithm; empty when some trial has no optimum.
    pub profiles: BTreeMap<Algorithm, MeanProfile>,
}

impl ExperimentReport {
    pub fn profile_less(&self) -> bool {
        self.trials.iter().any(|t| t.optimum.is_none())
    }

    /// Mean relative error at the last grid budget over trials with a
    /// solution by then.
    pub fn mean_final_error(&self, algorithm: Algorithm) -> Option<f64> {
        let budget = *self.grid.last()?;
        let mut errors = Vec::new();
        for t in &self.trials {
            let run = t.runs.iter().find(|r| r.algorithm == algorithm)?;
            if let (Some(opt), Some(c)) = (t.optimum, run.anytime.best_at(budget)) {
                errors.push(relative_error(c, opt, self.config.error_guard).ok()?);
            }
        }
        errors.sort_by(f64::total_cmp);
        (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64)
    }
}

fn limits_for(budget: Budget) -> Limits {
    let limits = match budget {
        Budget::Nodes(n) => Limits::with_budget(n),
        Budget::Auto => Limits::unlimited(),
    };
    limits.clock(clock)
}

fn from_search<S>(algorithm: Algorithm, r: ssr_core::SearchResult<S>, wall_time: f64) -> RunRecord {
    RunRecord {
        algorithm,
        best_cost: r.best_cost,
        nodes_generated: r.nodes_generated,
        nodes_expanded: r.nodes_expanded,
        optimal_proven: r.optimal_proven,
        truncated: r.truncated,
        wall_time,
        anytime: r.anytime,
        iterations: Vec::new(),
        sample: None,
        epsilon_star: None,
    }
}

/// First dive, then branch-and-bound on the epsilon*-tree. The dive counts
/// toward the budget and its leaf is the first incumbent.
fn eps_dfbnb_run<P: SearchProblem>(problem: &P, limits: Limits) -> Result<RunRecord> {
    let started = clock();
    let dive = match first_dive(problem, limits) {
        Ok(d) => d,
        Err(ssr_core::Error::Unsealed { nodes }) => {
            return Ok(RunRecord {
                algorithm: Algorithm::EpsDfbnb,
                best_cost: None,
                nodes_generated: nodes,
                nodes_expanded: 0,
                optimal_proven: false,
                truncated: limits.node_budget.is_some_and(|b| nodes >= b),
                wall_time: clock() - started,
                anytime: AnytimeRecord::new(),
                iterations: Vec::new(),
                sample: None,
                epsilon_star: None,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let offset = dive.nodes_generated;
    let mut anytime = AnytimeRecord::new();
    anytime.push(AnytimeEvent {
        nodes_generated: offset,
        wall_time: clock() - started,
        cost: dive.leaf_cost,
    });
    if dive.sample.increments().is_empty() {
        return Ok(RunRecord {
            algorithm: Algorithm::EpsDfbnb,
            best_cost: Some(dive.leaf_cost),
            nodes_generated: offset,
            nodes_expanded: 0,
            optimal_proven: true,
            truncated: false,
            wall_time: clock() - started,
            anytime,
            iterations: Vec::new(),
            sample: Some(dive.sample),
            epsilon_star: None,
        });
    }
    let star = epsilon_star(&dive.sample)?;
    let rest = Limits {
        node_budget: limits.node_budget.map(|b| b.saturating_sub(offset)),
        ..limits
    };
    let eps_started = clock() - started;
    let r = epsilon_dfbnb(problem, EpsilonPolicy::new(star.value)?, rest)?;
    for e in r.anytime.events() {
        anytime.push(AnytimeEvent {
            nodes_generated: e.nodes_generated + offset,
            wall_time: e.wall_time + eps_started,
            cost: e.cost,
        });
    }
    Ok(RunRecord {
        algorithm: Algorithm::EpsDfbnb,
        best_cost: anytime.last().map(|e| e.cost),
        nodes_generated: r.nodes_generated + offset,
        nodes_expanded: r.nodes_expanded,
        optimal_proven: false,
        truncated: r.truncated,
        wall_time: clock() - started,
        anytime,
        iterations: Vec::new(),
        sample: Some(dive.sample),
        epsilon_star: Some(star),
    })
}

pub fn run_algorithm<P: SearchProblem>(
    problem: &P,
    algorithm: Algorithm,
    config: &ExperimentConfig,
) -> Result<RunRecord> {
    let limits = limits_for(config.budget);
    let options = IterativeOptions {
        reestimate: config.reestimate,
        ..IterativeOptions::default()
    };
    let started = clock();
    let record = match algorithm {
        Algorithm::Bfs => from_search(algorithm, best_first_search(problem, limits)?, 0.0),
        Algorithm::Dfbnb => from_search(algorithm, dfbnb(problem, Cost::INFINITY, limits)?, 0.0),
        Algorithm::EpsDfbnb => eps_dfbnb_run(problem, limits)?,
        Algorithm::IterEpsDfbnb | Algorithm::IterDeltaDfbnb => {
            let r = if algorithm == Algorithm::IterEpsDfbnb {
                iterative_epsilon_dfbnb(problem, limits, options)?
            } else {
                iterative_delta_dfbnb(problem, limits, options)?
            };
            RunRecord {
                iterations: r.iterations,
                sample: r.sample,
                epsilon_star: r.epsilon_star,
                ..from_search(algorithm, r.search, 0.0)
            }
        }
        Algorithm::LocalSearch => {
            return Err(BenchError::Argument(
                "local_search runs only on ATSP instances".into(),
            ))
        }
    };
    Ok(RunRecord {
        wall_time: clock() - started,
        ..record
    })
}

fn local_search_run(problem: &AtspProblem, config: &ExperimentConfig, seed: u64) -> RunRecord {
    let started = clock();
    let limits = limits_for(config.budget);
    let anytime = local_search_baseline(problem.instance(), limits, seed);
    RunRecord {
        algorithm: Algorithm::LocalSearch,
        best_cost: anytime.last().map(|e| e.cost),
        nodes_generated: limits.node_budget.unwrap_or(1),
        nodes_expanded: 0,
        optimal_proven: false,
        truncated: true,
        wall_time: clock() - started,
        anytime,
        iterations: Vec::new(),
        sample: None,
        epsilon_star: None,
    }
}

fn run_on<P: SearchProblem>(problem: &P, config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config
        .algorithms
        .iter()
        .filter(|&&a| a != Algorithm::LocalSearch)
        .map(|&a| run_algorithm(problem, a, config))
        .collect()
}

/// Exact optimum: a proven run, else branch-and-bound seeded with the best
/// cost any run found, capped at `optimum_cap` generations.
fn find_optimum<P: SearchProblem>(
    problem: &P,
    runs: &[RunRecord],
    cap: u64,
) -> Result<(Option<Cost>, OptimumSource)> {
    if let Some(r) = runs.iter().find(|r| r.optimal_proven) {
        return Ok((r.best_cost, OptimumSource::Run(r.algorithm)));
    }
    let upper = runs
        .iter()
        .filter_map(|r| r.best_cost)
        .fold(Cost::INFINITY, Cost::min);
    let r = dfbnb(problem, upper, Limits::with_budget(cap))?;
    if r.truncated {
        return Ok((None, OptimumSource::Unknown));
    }
    let optimum = r.best_cost.or(upper.is_finite().then_some(upper));
    Ok((optimum, OptimumSource::Search))
}

pub fn run_trial(config: &ExperimentConfig, cache: &OptimumCache, trial: u32) -> Result<TrialOutcome> {
    let seed = instance_seed(config.seed, trial);
    let instance = Instance::generate(config, seed)?;
    let mut runs = with_problem!(&instance, p => run_on(p, config))?;
    if let Instance::Atsp(p) = &instance {
        if config.algorithms.contains(&Algorithm::LocalSearch) {
            runs.push(local_search_run(p, config, splitmix(seed)));
        }
    }
    // keep the configured order
    runs.sort_by_key(|r| config.algorithms.iter().position(|&a| a == r.algorithm));

    let key = instance.describe();
    let (optimum, optimum_source) = match cache.get(&key)? {
        Some(v) => (Some(v), OptimumSource::Cache),
        None => {
            let found =
                with_problem!(&instance, p => find_optimum(p, &runs, config.optimum_cap))?;
            if let Some(v) = found.0 {
                cache.put(&key, v)?;
            }
            found
        }
    };
    Ok(TrialOutcome {
        trial,
        instance_seed: seed,
        optimum,
        optimum_source,
        runs,
    })
}

/// Runs every trial and computes profiles without writing result files
/// (the optimum cache may be written).
pub fn run_trials(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let cache = OptimumCache::new(config.cache_dir());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    let trials: Vec<TrialOutcome> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, &cache, t))
            .collect::<Result<Vec<_>>>()
    })?;

    let grid_max = match config.budget {
        Budget::Nodes(n) => n,
        Budget::Auto => {
            let reference = if config.algorithms.contains(&Algorithm::Dfbnb) {
                Some(Algorithm::Dfbnb)
            } else {
                None
            };
            trials
                .iter()
                .flat_map(|t| &t.runs)
                .filter(|r| reference.is_none_or(|a| r.algorithm == a))
                .map(|r| r.nodes_generated)
                .max()
                .unwrap_or(1)
                .max(1)
        }
    };
    let grid = budget_grid(grid_max, config.grid_points);

    let mut profiles = BTreeMap::new();
    if trials.iter().all(|t| t.optimum.is_some()) {
        for &alg in &config.algorithms {
            let per_trial = trials
                .iter()
                .map(|t| {
                    let run = t.runs.iter().find(|r| r.algorithm == alg).expect("run per algorithm");
                    profile_from_record(&run.anytime, t.optimum.unwrap(), &grid, config.error_guard)
                })
                .collect::<ssr_core::Result<Vec<_>>>()?;
            profiles.insert(alg, aggregate_profiles(&per_trial)?);
        }
    }
    Ok(ExperimentReport {
        config: config.clone(),
        config_hash: config.result_hash(),
        trials,
        grid,
        profiles,
    })
}

/// Runs the experiment and writes its CSV files into `config.output`.
/// Nothing is written when the configuration or any run fails.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let report = run_trials(config)?;
    crate::output::write_report(&report, &config.output)?;
    Ok(report)
}

/// Convenience for tests and the CLI: runs into an explicit directory.
pub fn run_experiment_in(config: &ExperimentConfig, dir: &Path) -> Result<ExperimentReport> {
    let mut c = config.clone();
    c.output = dir.to_path_buf();
    run_experiment(&c)
}
