use std::path::PathBuf;

use proptest::prelude::*;
use ssr_bench::config::{
    parse_tree_spec, render_tree_spec, Algorithm, Budget, DomainParams, ExperimentConfig,
    TreeParams,
};
use ssr_bench::formats::{read_atsp, read_dimacs, read_stsp, write_atsp, write_dimacs, write_stsp};
use ssr_core::atsp::{generate_atsp, AtspStructure};
use ssr_core::maxsat::generate_3sat;
use ssr_core::profile::ErrorGuard;
use ssr_core::stsp::generate_stsp;
use ssr_core::tree::{BranchingDistribution, EdgeCostDistribution, TreeSpec};

fn branching() -> impl Strategy<Value = BranchingDistribution> {
    prop_oneof![
        (2u32..50).prop_map(BranchingDistribution::Fixed),
        (1.01f64..20.0).prop_map(|mean| BranchingDistribution::Poisson { mean }),
    ]
}

fn edge_cost() -> impl Strategy<Value = EdgeCostDistribution> {
    prop_oneof![
        (0u64..1000, 0u64..100_000).prop_map(|(lo, span)| EdgeCostDistribution::uniform(lo, lo + span)),
        (0.0f64..1.0, 1u32..20).prop_map(|(p0, max)| EdgeCostDistribution::zero_inflated(p0, max)),
        prop::collection::vec((0.0f64..1e6, 0.01f64..1.0), 1..6).prop_map(|pairs| {
            let total: f64 = pairs.iter().map(|p| p.1).sum();
            EdgeCostDistribution::Discrete {
                values: pairs.iter().map(|p| p.0).collect(),
                probabilities: pairs.iter().map(|p| p.1 / total).collect(),
            }
        }),
    ]
}

fn domain() -> impl Strategy<Value = DomainParams> {
    prop_oneof![
        (1u32..40, branching(), edge_cost()).prop_map(|(depth, branching, edge_cost)| {
            DomainParams::Tree(TreeParams {
                depth,
                branching,
                edge_cost,
            })
        }),
        (3usize..600, prop_oneof![
            Just(AtspStructure::ITimesJ),
            (1u64..1 << 40).prop_map(AtspStructure::UniformRange)
        ])
            .prop_map(|(cities, structure)| DomainParams::Atsp { cities, structure }),
        (3usize..600, 1u64..u32::MAX as u64).prop_map(|(cities, max_cost)| DomainParams::Stsp { cities, max_cost }),
        (3usize..100, 1usize..1000).prop_map(|(vars, clauses)| DomainParams::MaxSat { vars, clauses }),
    ]
}

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (
        domain(),
        prop::sample::subsequence(
            vec![
                Algorithm::Bfs,
                Algorithm::Dfbnb,
                Algorithm::EpsDfbnb,
                Algorithm::IterEpsDfbnb,
                Algorithm::IterDeltaDfbnb,
            ],
            1..=5,
        ),
        prop_oneof![Just(Budget::Auto), (1u64..1 << 40).prop_map(Budget::Nodes)],
        (1usize..100, 1u32..5000, any::<u64>(), 1u64..1 << 40),
        (any::<bool>(), any::<bool>(), any::<bool>(), 0usize..16, any::<bool>()),
    )
        .prop_map(|(domain, algorithms, budget, (grid, trials, seed, cap), (guard, re, pure, threads, cache))| {
            let is_sat = matches!(domain, DomainParams::MaxSat { .. });
            let mut c = ExperimentConfig::new(domain, algorithms);
            c.budget = budget;
            c.grid_points = grid;
            c.trials = trials;
            c.seed = seed;
            c.optimum_cap = cap;
            c.error_guard = if guard { ErrorGuard::Strict } else { ErrorGuard::AtLeastOne };
            c.reestimate = re;
            c.pure_literals = pure && is_sat;
            c.threads = threads;
            c.output = PathBuf::from(format!("out/run{seed}"));
            c.cache_dir = cache.then(|| PathBuf::from("cache dir/optima"));
            c
        })
}

proptest! {
    #[test]
    fn config_text_round_trips(c in config()) {
        let text = c.render();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.render(), text);
        prop_assert_eq!(back.result_hash(), c.result_hash());
    }

    #[test]
    fn result_hash_ignores_locations(c in config(), threads in 0usize..64) {
        let mut moved = c.clone();
        moved.output = PathBuf::from("elsewhere");
        moved.cache_dir = Some(PathBuf::from("other"));
        moved.threads = threads;
        prop_assert_eq!(moved.result_hash(), c.result_hash());
        let mut reseeded = c.clone();
        reseeded.seed = c.seed.wrapping_add(1);
        prop_assert_ne!(reseeded.result_hash(), c.result_hash());
    }

    #[test]
    fn tree_spec_round_trips(depth in 1u32..40, b in branching(), cost in edge_cost(), seed in any::<u64>()) {
        let spec = TreeSpec::new(depth, b, cost, seed);
        prop_assert_eq!(parse_tree_spec(&render_tree_spec(&spec)).unwrap(), spec);
    }

    #[test]
    fn atsp_files_round_trip(n in 3usize..30, seed in any::<u64>(), r in 1u64..1 << 32) {
        let a = generate_atsp(n, AtspStructure::UniformRange(r), seed).unwrap();
        prop_assert_eq!(read_atsp(&write_atsp(&a)).unwrap(), a);
    }

    #[test]
    fn stsp_files_round_trip(n in 3usize..30, seed in any::<u64>(), hi in 1u64..u32::MAX as u64) {
        let s = generate_stsp(n, hi, seed).unwrap();
        prop_assert_eq!(read_stsp(&write_stsp(&s)).unwrap(), s);
    }

    #[test]
    fn dimacs_files_round_trip(vars in 6usize..40, ratio in 1usize..10, seed in any::<u64>()) {
        let cnf = generate_3sat(vars, vars * ratio, seed).unwrap();
        prop_assert_eq!(read_dimacs(&write_dimacs(&cnf)).unwrap(), cnf);
    }
}
