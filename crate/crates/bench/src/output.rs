//! CSV emission.
//!
//! All files except `timing.csv` depend only on the configuration, so two
//! runs with the same settings produce identical bytes. Every file is
//! rendered in memory before anything touches the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::experiment::ExperimentReport;

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
}

/// File name and contents of every output file.
pub fn render_report(report: &ExperimentReport) -> Result<Vec<(String, Vec<u8>)>> {
    let cfg = &report.config;
    let domain = cfg.domain.name();
    let hash = &report.config_hash;
    let mut files = Vec::new();

    let mut runs = Vec::new();
    let mut anytime = Vec::new();
    let mut iterations = Vec::new();
    let mut samples = Vec::new();
    let mut timing = Vec::new();
    for t in &report.trials {
        for r in &t.runs {
            let (trial, alg) = (t.trial.to_string(), r.algorithm.to_string());
            runs.push(vec![
                trial.clone(),
                t.instance_seed.to_string(),
                alg.clone(),
                opt(r.best_cost),
                r.nodes_generated.to_string(),
                r.nodes_expanded.to_string(),
                r.optimal_proven.to_string(),
                r.truncated.to_string(),
                opt(t.optimum),
            ]);
            timing.push(vec![
                trial.clone(),
                alg.clone(),
                "run".into(),
                r.nodes_generated.to_string(),
                r.wall_time.to_string(),
            ]);
            for e in r.anytime.events() {
                anytime.push(vec![
                    trial.clone(),
                    alg.clone(),
                    e.nodes_generated.to_string(),
                    e.cost.to_string(),
                ]);
                timing.push(vec![
                    trial.clone(),
                    alg.clone(),
                    "improvement".into(),
                    e.nodes_generated.to_string(),
                    e.wall_time.to_string(),
                ]);
            }
            for it in &r.iterations {
                iterations.push(vec![
                    trial.clone(),
                    alg.clone(),
                    it.index.to_string(),
                    it.parameter.to_string(),
                    opt(it.quantile),
                    it.nodes_generated.to_string(),
                    opt(it.incumbent),
                    it.reduction_applied.to_string(),
                    it.completed.to_string(),
                ]);
            }
            if let Some(s) = &r.sample {
                samples.push(vec![
                    trial.clone(),
                    alg.clone(),
                    s.increments().len().to_string(),
                    s.child_counts().len().to_string(),
                    opt(s.mean_branching().ok()),
                    opt(r.epsilon_star.map(|e| e.value)),
                    opt(r.epsilon_star.map(|e| e.lambda_hat)),
                ]);
            }
        }
    }
    files.push((
        "runs.csv".into(),
        csv_bytes(
            &[
                "trial",
                "instance_seed",
                "algorithm",
                "best_cost",
                "nodes_generated",
                "nodes_expanded",
                "optimal_proven",
                "truncated",
                "optimum",
            ],
            runs,
        )?,
    ));
    files.push((
        "anytime.csv".into(),
        csv_bytes(&["trial", "algorithm", "nodes_generated", "cost"], anytime)?,
    ));
    files.push((
        "iterations.csv".into(),
        csv_bytes(
            &[
                "trial",
                "algorithm",
                "iteration",
                "parameter",
                "quantile",
                "nodes_generated",
                "incumbent",
                "reduction_applied",
                "completed",
            ],
            iterations,
        )?,
    ));
    files.push((
        "samples.csv".into(),
        csv_bytes(
            &[
                "trial",
                "algorithm",
                "increments",
                "expansions",
                "mean_branching",
                "epsilon_star",
                "lambda_hat",
            ],
            samples,
        )?,
    ));

    for (alg, profile) in &report.profiles {
        let rows = profile.budgets.iter().enumerate().map(|(i, b)| {
            vec![
                b.to_string(),
                opt(profile.mean[i]),
                profile.n_defined[i].to_string(),
                alg.to_string(),
                domain.to_string(),
                hash.clone(),
            ]
        });
        files.push((
            format!("profile_{alg}.csv"),
            csv_bytes(
                &["budget", "mean_profile", "n_defined", "algorithm", "domain", "config_hash"],
                rows,
            )?,
        ));
    }

    let mut summary = Vec::new();
    for &alg in &cfg.algorithms {
        let runs: Vec<_> = report
            .trials
            .iter()
            .filter_map(|t| t.runs.iter().find(|r| r.algorithm == alg))
            .collect();
        let final_profile = report
            .profiles
            .get(&alg)
            .and_then(|p| p.mean.last().copied().flatten());
        summary.push(vec![
            alg.to_string(),
            domain.to_string(),
            runs.len().to_string(),
            runs.iter().filter(|r| r.best_cost.is_some()).count().to_string(),
            runs.iter().filter(|r| r.optimal_proven).count().to_string(),
            opt(mean(runs.iter().map(|r| r.nodes_generated as f64))),
            opt(report.mean_final_error(alg)),
            opt(final_profile),
            report.grid.last().copied().unwrap_or(0).to_string(),
            report.profile_less().to_string(),
            hash.clone(),
        ]);
    }
    files.push((
        "summary.csv".into(),
        csv_bytes(
            &[
                "algorithm",
                "domain",
                "trials",
                "solved",
                "proven_optimal",
                "mean_nodes_generated",
                "mean_final_error",
                "final_mean_profile",
                "final_budget",
                "profile_less",
                "config_hash",
            ],
            summary,
        )?,
    ));
    files.push((
        "timing.csv".into(),
        csv_bytes(
            &["trial", "algorithm", "event", "nodes_generated", "wall_time_s"],
            timing,
        )?,
    ));
    Ok(files)
}

/// Writes the report's files into `dir` and returns their paths.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let files = render_report(report)?;
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(files.len() + 1);
    for (name, bytes) in files {
        let p = dir.join(name);
        fs::write(&p, bytes)?;
        paths.push(p);
    }
    let p = dir.join("config.cfg");
    fs::write(&p, report.config.render())?;
    paths.push(p);
    Ok(paths)
}
