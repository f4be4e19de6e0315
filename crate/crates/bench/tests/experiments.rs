use std::fs;

use ssr_bench::experiment::{run_experiment_in, OptimumSource};
use ssr_bench::{run_trials, Algorithm, BenchError, Budget, DomainParams, ExperimentConfig, TreeParams};
use ssr_core::atsp::AtspStructure;
use ssr_core::tree::{BranchingDistribution, EdgeCostDistribution};

fn tree_config(dir: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        DomainParams::Tree(TreeParams {
            depth: 8,
            branching: BranchingDistribution::Fixed(3),
            edge_cost: EdgeCostDistribution::uniform(0, 1000),
        }),
        vec![Algorithm::Dfbnb, Algorithm::IterEpsDfbnb, Algorithm::IterDeltaDfbnb, Algorithm::Bfs],
    );
    c.trials = 6;
    c.seed = 42;
    c.grid_points = 10;
    c.output = dir.join("out");
    c
}

#[test]
fn zero_trials_is_rejected_before_anything_is_written() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = tree_config(tmp.path());
    c.trials = 0;
    let err = run_experiment_in(&c, &c.output.clone()).unwrap_err();
    assert!(matches!(err, BenchError::Argument(_)), "{err}");
    assert!(!c.output.exists());
}

#[test]
fn local_search_outside_atsp_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = tree_config(tmp.path());
    c.algorithms.push(Algorithm::LocalSearch);
    c.budget = Budget::Nodes(100);
    assert!(matches!(run_trials(&c), Err(BenchError::Argument(_))));
}

#[test]
fn every_algorithm_gets_a_profile_file_and_reruns_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = tree_config(tmp.path());
    c.cache_dir = Some(tmp.path().join("optima"));
    let a = run_experiment_in(&c, &tmp.path().join("a")).unwrap();
    let b = run_experiment_in(&c, &tmp.path().join("b")).unwrap();
    assert!(!a.profile_less());
    for alg in &c.algorithms {
        let name = format!("profile_{alg}.csv");
        let text = fs::read_to_string(tmp.path().join("a").join(&name)).unwrap();
        assert_eq!(text.lines().count(), 1 + c.grid_points, "{name}");
        assert!(text.contains(&a.config_hash));
    }
    // the automatic grid ends where the slowest DFBnB run finished
    assert_eq!(a.profiles[&Algorithm::Dfbnb].mean.last().copied().flatten(), Some(1.0));
    for name in ["runs.csv", "anytime.csv", "iterations.csv", "samples.csv", "summary.csv"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(name)).unwrap(),
            fs::read(tmp.path().join("b").join(name)).unwrap(),
            "{name}"
        );
    }
    // the second run found every optimum in the shared cache
    assert!(b.trials.iter().all(|t| t.optimum_source == OptimumSource::Cache));
    assert!(tmp.path().join("a").join("timing.csv").exists());
}

#[test]
fn tiny_optimum_cap_yields_no_profiles() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::new(
        DomainParams::Atsp {
            cities: 30,
            structure: AtspStructure::UniformRange(1000),
        },
        vec![Algorithm::EpsDfbnb],
    );
    c.budget = Budget::Nodes(50);
    c.optimum_cap = 5;
    c.trials = 2;
    c.output = tmp.path().join("out");
    let report = run_experiment_in(&c, &c.output.clone()).unwrap();
    assert!(report.profile_less());
    assert!(report.profiles.is_empty());
    assert!(!c.output.join("profile_eps_dfbnb.csv").exists());
    assert!(c.output.join("runs.csv").exists());
}

#[test]
fn budgeted_runs_stay_within_one_expansion_of_the_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = tree_config(tmp.path());
    c.budget = Budget::Nodes(200);
    let report = run_trials(&c).unwrap();
    assert_eq!(*report.grid.last().unwrap(), 200);
    for t in &report.trials {
        for r in &t.runs {
            assert!(r.nodes_generated < 200 + 3, "{:?} {}", r.algorithm, r.nodes_generated);
        }
    }
}
