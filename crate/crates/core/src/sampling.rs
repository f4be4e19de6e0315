//! Online estimation of branching factor and increment distribution.
//!
//! The nodes generated while depth-first search descends to its first leaf
//! are used as samples. From them we estimate the mean branching factor and
//! the empirical distribution of cost increments, and derive the epsilon that
//! puts the reduced space on the transition boundary `b * P(x <= e) = 1` as
//! well as the delta thresholds used by structural reduction.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::search::{order_children, Child, Cost, Limits, SearchProblem, Tally};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OnlineSample {
    increments: Vec<Cost>,
    child_counts: Vec<u32>,
    sealed: bool,
}

impl OnlineSample {
    pub fn new() -> Self {
        Self::default()
    }

    /// A sealed sample built from known observations.
    pub fn from_observations(increments: Vec<Cost>, child_counts: Vec<u32>) -> Self {
        Self {
            increments,
            child_counts,
            sealed: true,
        }
    }

    pub fn record_expansion(&mut self, child_count: u32) {
        self.child_counts.push(child_count);
    }

    pub fn record_increment(&mut self, increment: Cost) {
        self.increments.push(increment);
    }

    pub fn seal(&mut self) {
        self.sealed = true;
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn increments(&self) -> &[Cost] {
        &self.increments
    }

    pub fn child_counts(&self) -> &[u32] {
        &self.child_counts
    }

    /// Adds later observations to a sealed sample.
    pub fn pool(&mut self, increments: &[Cost], child_counts: &[u32]) {
        self.increments.extend_from_slice(increments);
        self.child_counts.extend_from_slice(child_counts);
    }

    fn ready(&self) -> Result<()> {
        if !self.sealed {
            return Err(Error::Estimation("sample is not sealed".into()));
        }
        if self.increments.is_empty() || self.child_counts.is_empty() {
            return Err(Error::Estimation("sample is empty".into()));
        }
        Ok(())
    }

    /// Arithmetic mean of the observed child counts.
    pub fn mean_branching(&self) -> Result<f64> {
        self.ready()?;
        let total: u64 = self.child_counts.iter().map(|&c| c as u64).sum();
        Ok(total as f64 / self.child_counts.len() as f64)
    }

    fn sorted(&self) -> Vec<Cost> {
        let mut v = self.increments.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }
}

/// Result of a first dive: the sealed sample and the first goal reached.
#[derive(Debug, Clone)]
pub struct FirstDive<S> {
    pub sample: OnlineSample,
    pub leaf: S,
    pub leaf_cost: Cost,
    pub nodes_generated: u64,
}

/// Depth-first descent to the first goal, children in ascending increment
/// order, recording every expansion's child count and every generated
/// child's increment. The first goal reached becomes an incumbent in `tally`.
pub(crate) fn dive<P: SearchProblem>(problem: &P, tally: &mut Tally) -> Result<Dive<P::State>> {
    let mut sample = OnlineSample::new();
    let mut children = Vec::new();
    let mut stack = Vec::new();
    stack.push(Child::new(problem.root(), 0.0));
    tally.generated += 1;
    tally.observe_open(1)?;

    while let Some(node) = stack.pop() {
        let state = node.state;
        if problem.is_goal(&state) {
            sample.seal();
            let cost = problem.original_cost(&state);
            tally.improve(cost);
            return Ok(Dive {
                sample,
                leaf: state,
                cost,
                frontier: stack,
            });
        }
        if tally.exhausted() {
            break;
        }
        children.clear();
        problem.expand(&state, &mut children);
        tally.expanded += 1;
        tally.generated += children.len() as u64;
        sample.record_expansion(children.len() as u32);
        for c in &children {
            sample.record_increment(c.increment);
        }
        order_children(&mut children);
        stack.extend(children.drain(..).rev());
        tally.observe_open(stack.len())?;
    }
    Err(Error::Unsealed {
        nodes: tally.generated,
    })
}

/// State of a dive that reached a goal.
pub(crate) struct Dive<S> {
    pub sample: OnlineSample,
    pub leaf: S,
    pub cost: Cost,
    /// Generated but unexpanded nodes, next to expand last.
    pub frontier: Vec<Child<S>>,
}

/// Runs the first dive under `limits` and returns its sample together with
/// the leaf it reached.
pub fn first_dive<P: SearchProblem>(problem: &P, limits: Limits) -> Result<FirstDive<P::State>> {
    let mut tally = Tally::new(limits);
    let d = dive(problem, &mut tally)?;
    Ok(FirstDive {
        sample: d.sample,
        leaf: d.leaf,
        leaf_cost: d.cost,
        nodes_generated: tally.generated,
    })
}

/// Sample gathered on the way to the first goal.
pub fn collect_first_dive<P: SearchProblem>(problem: &P, limits: Limits) -> Result<OnlineSample> {
    first_dive(problem, limits).map(|d| d.sample)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonStar {
    pub value: Cost,
    /// Mean of the sampled increments not exceeding `value`.
    pub lambda_hat: Cost,
}

/// Smallest sampled increment `e` with `b_hat * F_hat(e) >= 1`, or the largest
/// sampled increment when the boundary cannot be reached.
pub fn epsilon_star(sample: &OnlineSample) -> Result<EpsilonStar> {
    sample.ready()?;
    let sorted = sample.sorted();
    let n = sorted.len() as u128;
    let children: u128 = sample.child_counts.iter().map(|&c| c as u128).sum();
    let expansions = sample.child_counts.len() as u128;

    // b_hat * F_hat(e) >= 1  <=>  children * count(x <= e) >= expansions * n
    let mut index = sorted.len() - 1;
    for (i, v) in sorted.iter().enumerate() {
        if sorted.get(i + 1) == Some(v) {
            continue;
        }
        if children * (i as u128 + 1) >= expansions * n {
            index = i;
            break;
        }
    }
    let value = sorted[index];
    let lambda_hat = sorted[..=index].iter().sum::<Cost>() / (index + 1) as Cost;
    Ok(EpsilonStar { value, lambda_hat })
}

/// Smallest sampled increment `q` with `F_hat(q) >= p`.
pub fn delta_at_quantile(sample: &OnlineSample, p: f64) -> Result<Cost> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Argument(format!(
            "quantile probability must lie in (0, 1], got {p}"
        )));
    }
    sample.ready()?;
    let sorted = sample.sorted();
    let n = sorted.len();
    // Tolerate representation error in p * n, e.g. 0.3 * 10.
    let scaled = p * n as f64 - 1e-9;
    let mut k = scaled as usize;
    if (k as f64) < scaled {
        k += 1;
    }
    Ok(sorted[k.clamp(1, n) - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{make_tree, BranchingDistribution, EdgeCostDistribution, TreeSpec};
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn binary_tree_dive() {
        let tree = make_tree(TreeSpec::new(
            3,
            BranchingDistribution::Fixed(2),
            EdgeCostDistribution::uniform(0, 9),
            5,
        ))
        .unwrap();
        let dive = first_dive(&tree, Limits::unlimited()).unwrap();
        assert!(dive.sample.is_sealed());
        assert_eq!(dive.sample.child_counts(), &[2, 2, 2]);
        assert_eq!(dive.sample.increments().len(), 6);
        assert_eq!(dive.nodes_generated, 7);
        assert_eq!(dive.leaf.depth, 3);
    }

    #[test]
    fn dive_without_budget_is_unsealed() {
        let tree = make_tree(TreeSpec::new(
            10,
            BranchingDistribution::Fixed(2),
            EdgeCostDistribution::uniform(0, 9),
            5,
        ))
        .unwrap();
        assert!(matches!(
            collect_first_dive(&tree, Limits::with_budget(5)),
            Err(Error::Unsealed { .. })
        ));
    }

    #[test]
    fn epsilon_star_boundary_at_zero() {
        let mut inc = Vec::new();
        for v in 0..4 {
            inc.extend(core::iter::repeat_n(v as f64, 25));
        }
        let s = OnlineSample::from_observations(inc, vec![4; 10]);
        let e = epsilon_star(&s).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.lambda_hat, 0.0);
    }

    #[test]
    fn epsilon_star_is_median_for_binary() {
        let inc: Vec<Cost> = (1..=100).map(|v| v as f64).collect();
        let s = OnlineSample::from_observations(inc.clone(), vec![2; 7]);
        let e = epsilon_star(&s).unwrap();
        // direct inversion: smallest v with count(x <= v) / 100 >= 1/2
        let direct = inc.iter().copied().find(|&v| inc.iter().filter(|&&x| x <= v).count() * 2 >= 100);
        assert_eq!(Some(e.value), direct);
        assert_eq!(e.value, 50.0);
        assert_eq!(e.lambda_hat, 25.5);
    }

    #[test]
    fn single_path_falls_back_to_max() {
        let s = OnlineSample::from_observations(vec![3.0, 1.0, 2.0], vec![1, 1, 1]);
        assert_eq!(epsilon_star(&s).unwrap().value, 3.0);
    }

    #[test]
    fn estimates_need_sealed_nonempty_sample() {
        let mut s = OnlineSample::new();
        s.record_expansion(2);
        s.record_increment(1.0);
        assert!(matches!(epsilon_star(&s), Err(Error::Estimation(_))));
        let empty = OnlineSample::from_observations(vec![], vec![]);
        assert!(matches!(epsilon_star(&empty), Err(Error::Estimation(_))));
    }

    #[test]
    fn quantiles() {
        let inc: Vec<Cost> = (1..=10).map(|v| v as f64).collect();
        let s = OnlineSample::from_observations(inc, vec![2]);
        assert_eq!(delta_at_quantile(&s, 0.1).unwrap(), 1.0);
        assert_eq!(delta_at_quantile(&s, 0.3).unwrap(), 3.0);
        assert_eq!(delta_at_quantile(&s, 1.0).unwrap(), 10.0);
        assert!(matches!(delta_at_quantile(&s, 0.0), Err(Error::Argument(_))));
        assert!(matches!(delta_at_quantile(&s, 1.5), Err(Error::Argument(_))));
    }

    fn sample_strategy() -> impl Strategy<Value = (Vec<u32>, Vec<u32>)> {
        (
            prop::collection::vec(0u32..50, 1..60),
            prop::collection::vec(0u32..6, 1..20),
        )
    }

    proptest! {
        #[test]
        fn quantile_is_minimal((inc, counts) in sample_strategy(), p in 0.01f64..=1.0) {
            let inc: Vec<Cost> = inc.into_iter().map(|v| v as f64).collect();
            let s = OnlineSample::from_observations(inc.clone(), counts);
            let q = delta_at_quantile(&s, p).unwrap();
            let n = inc.len() as f64;
            let at = inc.iter().filter(|&&x| x <= q).count() as f64 / n;
            prop_assert!(at >= p - 1e-9);
            let below = inc.iter().filter(|&&x| x < q).count() as f64 / n;
            prop_assert!(below < p - 1e-9);
        }

        #[test]
        fn lambda_never_exceeds_epsilon((inc, counts) in sample_strategy()) {
            let inc: Vec<Cost> = inc.into_iter().map(|v| v as f64).collect();
            let s = OnlineSample::from_observations(inc.clone(), counts);
            let e = epsilon_star(&s).unwrap();
            prop_assert!(e.lambda_hat <= e.value);
            prop_assert!(inc.contains(&e.value));
        }

        #[test]
        fn large_increment_never_lowers_epsilon((inc, counts) in sample_strategy()) {
            let inc: Vec<Cost> = inc.into_iter().map(|v| v as f64).collect();
            let before = epsilon_star(&OnlineSample::from_observations(inc.clone(), counts.clone())).unwrap();
            let mut more = inc;
            more.push(1000.0);
            let after = epsilon_star(&OnlineSample::from_observations(more, counts)).unwrap();
            prop_assert!(after.value >= before.value);
        }
    }
}
