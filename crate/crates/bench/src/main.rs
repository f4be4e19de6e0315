use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use ssr_core::sampling::{delta_at_quantile, epsilon_star, first_dive};
use ssr_core::{Limits, SearchProblem};
use ssr_core::atsp::AtspProblem;
use ssr_core::maxsat::SatProblem;
use ssr_core::stsp::StspProblem;

use ssr_bench::config::parse_pairs;
use ssr_bench::experiment::{instance_seed, run_experiment, Instance};
use ssr_bench::formats::{read_atsp, read_dimacs, read_stsp};
use ssr_bench::sweep::{render_cells, render_fits, run_sweep, SweepSpec};
use ssr_bench::verify::{verify, Suite, VerifySpec};
use ssr_bench::ExperimentConfig;

/// `println!` that reports a closed stdout as an error instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout().lock(), $($arg)*)?
    };
}

#[derive(Parser)]
#[command(name = "ssr-bench", version, about = "Anytime search experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded experiment and write CSV files.
    Run(ConfigArgs),
    /// Check every algorithm against brute-force oracles on small instances.
    Verify(VerifyArgs),
    /// Phase-transition grid of BFS and DFBnB effort on random trees.
    Sweep(SweepArgs),
    /// Print the first-dive sample statistics of one instance.
    Sample(SampleArgs),
}

/// Settings for `run` and `sample`. Flags override the environment, which
/// overrides the config file.
#[derive(Args, Default)]
struct ConfigArgs {
    /// Plain-text `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// tree, atsp, stsp or maxsat.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    depth: Option<String>,
    /// fixed:B or poisson:MEAN.
    #[arg(long)]
    branching: Option<String>,
    /// uniform:LO:HI, zero_inflated:P0:MAX or discrete:V@P,...
    #[arg(long)]
    cost_dist: Option<String>,
    #[arg(long)]
    cities: Option<String>,
    /// uniform:R or ixj.
    #[arg(long)]
    structure: Option<String>,
    #[arg(long)]
    max_cost: Option<String>,
    #[arg(long)]
    vars: Option<String>,
    #[arg(long)]
    clauses: Option<String>,
    /// Comma-separated: bfs, dfbnb, eps_dfbnb, iter_eps_dfbnb,
    /// iter_delta_dfbnb, local_search.
    #[arg(long)]
    algorithms: Option<String>,
    /// Node generations per run, or `auto`.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    grid_points: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory (env SSR_OUTPUT_DIR).
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    optimum_cap: Option<String>,
    #[arg(long)]
    cache_dir: Option<String>,
    /// strict or at_least_one.
    #[arg(long)]
    error_guard: Option<String>,
    #[arg(long)]
    reestimate: Option<String>,
    #[arg(long)]
    pure_literals: Option<String>,
    /// Worker threads, 0 for automatic (env SSR_THREADS).
    #[arg(long)]
    threads: Option<String>,
}

impl ConfigArgs {
    fn flags(&self) -> [(&'static str, &Option<String>); 21] {
        [
            ("domain", &self.domain),
            ("depth", &self.depth),
            ("branching", &self.branching),
            ("cost_dist", &self.cost_dist),
            ("cities", &self.cities),
            ("structure", &self.structure),
            ("max_cost", &self.max_cost),
            ("vars", &self.vars),
            ("clauses", &self.clauses),
            ("algorithms", &self.algorithms),
            ("budget", &self.budget),
            ("grid_points", &self.grid_points),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("output", &self.output),
            ("optimum_cap", &self.optimum_cap),
            ("cache_dir", &self.cache_dir),
            ("error_guard", &self.error_guard),
            ("reestimate", &self.reestimate),
            ("pure_literals", &self.pure_literals),
            ("threads", &self.threads),
        ]
    }

    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut map = load_pairs(self.config.as_ref())?;
        for (var, key) in [("SSR_OUTPUT_DIR", "output"), ("SSR_THREADS", "threads")] {
            if let Ok(v) = std::env::var(var) {
                map.insert(key.into(), (0, v));
            }
        }
        for (key, value) in self.flags() {
            if let Some(v) = value {
                map.insert(key.into(), (0, v.clone()));
            }
        }
        Ok(ExperimentConfig::from_map(map)?)
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated suites: trees, atsp, stsp, maxsat.
    #[arg(long, default_value = "trees,atsp,stsp,maxsat")]
    suite: String,
    /// Instances per suite; defaults to 200 trees and 100 of the others.
    #[arg(long)]
    count: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Flags override the environment, which overrides the config file.
#[derive(Args)]
struct SweepArgs {
    /// Plain-text `key = value` file with the keys below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fixed branching factor (default 2).
    #[arg(long)]
    branching: Option<String>,
    /// Comma-separated zero-cost probabilities (default 0.2,0.5,0.7).
    #[arg(long)]
    p0: Option<String>,
    /// Depths as a list (5,6,7) or an inclusive range (default 5..18).
    #[arg(long)]
    depths: Option<String>,
    /// Trees per cell (default 300).
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Node budget per run, or `none`.
    #[arg(long)]
    budget: Option<String>,
    /// Output directory (env SSR_OUTPUT_DIR).
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Trial index whose instance is sampled.
    #[arg(long, default_value_t = 0)]
    trial: u32,
    /// Instance file instead of a generated instance; the format follows
    /// --domain (atsp, stsp or maxsat).
    #[arg(long)]
    file: Option<PathBuf>,
}

fn load_pairs(path: Option<&PathBuf>) -> anyhow::Result<BTreeMap<String, (usize, String)>> {
    match path {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(parse_pairs(&text).with_context(|| format!("in {}", path.display()))?)
        }
        None => Ok(BTreeMap::new()),
    }
}

fn print_sample<P: SearchProblem>(problem: &P) -> anyhow::Result<()> {
    let dive = first_dive(problem, Limits::unlimited())?;
    out!("nodes_generated\t{}", dive.nodes_generated);
    out!("first_leaf_cost\t{}", dive.leaf_cost);
    out!("increments\t{}", dive.sample.increments().len());
    if dive.sample.increments().is_empty() {
        out!("the root is a goal; nothing to estimate");
        return Ok(());
    }
    out!("b_hat\t{}", dive.sample.mean_branching()?);
    let star = epsilon_star(&dive.sample)?;
    out!("epsilon_star\t{}", star.value);
    out!("lambda_hat\t{}", star.lambda_hat);
    for k in 1..=10 {
        let p = k as f64 / 10.0;
        out!("delta_q{p}\t{}", delta_at_quantile(&dive.sample, p)?);
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| anyhow::anyhow!("bad {what} `{x}`")))
        .collect()
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        // a closed pipe (`ssr-bench ... | head`) is not a failure
        Err(e)
            if e
                .downcast_ref::<std::io::Error>()
                .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let report = run_experiment(&config)?;
            out!("algorithm\tmean_final_error\tfinal_mean_profile");
            for alg in &config.algorithms {
                let err = report.mean_final_error(*alg);
                let prof = report
                    .profiles
                    .get(alg)
                    .and_then(|p| p.mean.last().copied().flatten());
                out!(
                    "{alg}\t{}\t{}",
                    err.map_or("-".into(), |v| format!("{v:.4}")),
                    prof.map_or("-".into(), |v| format!("{v:.4}"))
                );
            }
            out!("wrote {}", config.output.display());
            if report.profile_less() {
                eprintln!("some optima exceeded optimum_cap; profiles were not computed");
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let names: Vec<String> = parse_list(&args.suite, "suite")?;
            let mut spec = VerifySpec {
                suites: Vec::new(),
                seed: args.seed,
            };
            for name in names.iter().filter(|n| !n.is_empty()) {
                let suite = Suite::parse(name).ok_or_else(|| anyhow::anyhow!("unknown suite `{name}`"))?;
                let default = if suite == Suite::Trees { 200 } else { 100 };
                spec.suites.push((suite, args.count.unwrap_or(default)));
            }
            let report = verify(&spec)?;
            out!("suite,instance,check,detail");
            for v in &report.violations {
                out!("{v}");
            }
            eprintln!(
                "{} checks, {} violations",
                report.checks,
                report.violations.len()
            );
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Sweep(args) => {
            let mut map = load_pairs(args.config.as_ref())?;
            if let Ok(v) = std::env::var("SSR_OUTPUT_DIR") {
                map.insert("output".into(), (0, v));
            }
            let flags = [
                ("branching", &args.branching),
                ("p0", &args.p0),
                ("depths", &args.depths),
                ("trials", &args.trials),
                ("seed", &args.seed),
                ("budget", &args.budget),
                ("output", &args.output),
            ];
            for (key, value) in flags {
                if let Some(v) = value {
                    map.insert(key.into(), (0, v.clone()));
                }
            }
            let spec = SweepSpec::from_map(map)?;
            let table = run_sweep(&spec)?;
            let cells = render_cells(&table)?;
            let fits = render_fits(&table, &spec.p0)?;
            fs::create_dir_all(&spec.output)?;
            fs::write(spec.output.join("sweep.csv"), cells)?;
            fs::write(spec.output.join("fits.csv"), &fits)?;
            std::io::stdout().lock().write_all(&fits)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample(mut args) => {
            if let Some(path) = &args.file {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                match args.config.domain.as_deref() {
                    Some("atsp") => print_sample(&AtspProblem::new(read_atsp(&text)?))?,
                    Some("stsp") => print_sample(&StspProblem::new(read_stsp(&text)?))?,
                    Some("maxsat") => print_sample(&SatProblem::new(read_dimacs(&text)?))?,
                    _ => bail!("--file needs --domain atsp, stsp or maxsat"),
                }
                return Ok(ExitCode::SUCCESS);
            }
            // the algorithm list does not matter for sampling
            args.config.algorithms.get_or_insert_with(|| "dfbnb".into());
            let config = args.config.resolve()?;
            let seed = instance_seed(config.seed, args.trial);
            let instance = Instance::generate(&config, seed)?;
            match &instance {
                Instance::Tree(p) => print_sample(p)?,
                Instance::Atsp(p) => print_sample(p)?,
                Instance::Stsp(p) => print_sample(p)?,
                Instance::MaxSat(p) => print_sample(p)?,
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
