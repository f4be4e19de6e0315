//! Anytime performance profiles.
//!
//! The profile of a run at budget `t` is `1 - error(t)`, where `error(t)` is
//! the relative error of the best cost found within `t` node generations.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::search::{AnytimeRecord, Cost};

/// Denominator convention for relative errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorGuard {
    /// Divide by the optimum, which must be positive.
    #[default]
    Strict,
    /// Divide by `max(optimum, 1)`; for integer-cost domains where an optimum
    /// of zero is possible.
    AtLeastOne,
}

pub fn relative_error(found: Cost, optimum: Cost, guard: ErrorGuard) -> Result<f64> {
    let denominator = match guard {
        ErrorGuard::Strict if optimum > 0.0 => optimum,
        ErrorGuard::Strict => {
            return Err(Error::Argument(format!(
                "relative error needs a positive optimum, got {optimum}"
            )))
        }
        ErrorGuard::AtLeastOne => optimum.max(1.0),
    };
    Ok((found - optimum) / denominator)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub budget: u64,
    /// `None` until the run has a solution.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceProfile {
    pub points: Vec<ProfilePoint>,
    pub optimum: Cost,
}

impl PerformanceProfile {
    pub fn value_at(&self, budget: u64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.budget == budget)
            .and_then(|p| p.value)
    }
}

/// `count` budgets evenly spaced over `(0, max]`.
pub fn budget_grid(max: u64, count: usize) -> Vec<u64> {
    (1..=count as u64)
        .map(|k| (max * k).div_ceil(count as u64))
        .collect()
}

pub fn profile_from_record(
    record: &AnytimeRecord,
    optimum: Cost,
    budgets: &[u64],
    guard: ErrorGuard,
) -> Result<PerformanceProfile> {
    if budgets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Argument("budgets must be ascending".into()));
    }
    if let Some(bad) = record.events().iter().find(|e| e.cost < optimum) {
        return Err(Error::Integrity {
            cost: bad.cost,
            optimum,
        });
    }
    let points = budgets
        .iter()
        .map(|&budget| {
            let value = match record.best_at(budget) {
                Some(c) => Some(1.0 - relative_error(c, optimum, guard)?),
                None => None,
            };
            Ok(ProfilePoint { budget, value })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerformanceProfile { points, optimum })
}

/// Pointwise mean of several profiles on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanProfile {
    pub budgets: Vec<u64>,
    /// Mean over the runs that had a solution; `None` if none had one.
    pub mean: Vec<Option<f64>>,
    pub n_defined: Vec<usize>,
    pub runs: usize,
}

pub fn aggregate_profiles(profiles: &[PerformanceProfile]) -> Result<MeanProfile> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::Argument("no profiles to aggregate".into()))?;
    let budgets: Vec<u64> = first.points.iter().map(|p| p.budget).collect();
    for p in profiles {
        if p.points.len() != budgets.len()
            || p.points.iter().zip(&budgets).any(|(a, &b)| a.budget != b)
        {
            return Err(Error::Argument("profiles use different budget grids".into()));
        }
    }
    let mut mean = Vec::with_capacity(budgets.len());
    let mut n_defined = Vec::with_capacity(budgets.len());
    for i in 0..budgets.len() {
        let mut values: Vec<f64> = profiles.iter().filter_map(|p| p.points[i].value).collect();
        // summing in sorted order makes the mean independent of input order
        values.sort_by(f64::total_cmp);
        n_defined.push(values.len());
        mean.push(if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        });
    }
    Ok(MeanProfile {
        budgets,
        mean,
        n_defined,
        runs: profiles.len(),
    })
}
