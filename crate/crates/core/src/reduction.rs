//! Quantitative (epsilon) and structural (delta) state-space reduction.
//!
//! [`EpsilonWrap`] rewrites every cost increment `g <= epsilon` to zero, which
//! turns the tree into the epsilon-tree. Goals keep their original cost, so a
//! solution found in the reduced space is reported at its true value.
//! [`DeltaWrap`] drops every child whose increment exceeds `delta`, keeping the
//! cheapest child when all of them would go.
//!
//! The iterative drivers run depth-first branch-and-bound on a sequence of
//! reduced spaces, each larger than the last, carrying the best original-space
//! incumbent across iterations as an upper bound.

use alloc::vec::Vec;
use core::cell::{Cell, RefCell};

use crate::error::{Error, Result};
use crate::sampling::{delta_at_quantile, dive, epsilon_star, Dive, EpsilonStar, OnlineSample};
use crate::search::{bnb_pass, bnb_resume, dfbnb, Child, Cost, Limits, SearchProblem, SearchResult, Tally};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonPolicy {
    pub epsilon: Cost,
}

impl EpsilonPolicy {
    pub fn new(epsilon: Cost) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::Argument(alloc::format!(
                "epsilon must be non-negative, got {epsilon}"
            )));
        }
        Ok(Self { epsilon })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaPolicy {
    /// Children with a larger increment are pruned; infinity disables pruning.
    pub delta: Cost,
    pub rescue_min_child: bool,
}

impl DeltaPolicy {
    pub fn new(delta: Cost) -> Result<Self> {
        if delta.is_nan() || delta < 0.0 {
            return Err(Error::Argument(alloc::format!(
                "delta must be non-negative, got {delta}"
            )));
        }
        Ok(Self {
            delta,
            rescue_min_child: true,
        })
    }

    pub fn without_rescue(mut self) -> Self {
        self.rescue_min_child = false;
        self
    }
}

/// A node of the epsilon-tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedNodeState<S> {
    pub inner: S,
    pub reduced_cost: Cost,
    pub original_cost: Cost,
}

/// Optional record of everything a wrapper sees, for re-estimation.
#[derive(Debug, Default)]
struct Observer {
    enabled: bool,
    increments: RefCell<Vec<Cost>>,
    child_counts: RefCell<Vec<u32>>,
}

impl Observer {
    fn record<S>(&self, children: &[Child<S>]) {
        if self.enabled {
            self.child_counts.borrow_mut().push(children.len() as u32);
            self.increments
                .borrow_mut()
                .extend(children.iter().map(|c| c.increment));
        }
    }

    fn drain_into(&self, sample: &mut OnlineSample) {
        sample.pool(&self.increments.take(), &self.child_counts.take());
    }
}

/// Searches the epsilon-tree of `inner`.
#[derive(Debug)]
pub struct EpsilonWrap<P> {
    inner: P,
    policy: EpsilonPolicy,
    zeroed: Cell<u64>,
    observer: Observer,
}

pub fn epsilon_wrap<P: SearchProblem>(problem: P, policy: EpsilonPolicy) -> EpsilonWrap<P> {
    EpsilonWrap {
        inner: problem,
        policy,
        zeroed: Cell::new(0),
        observer: Observer::default(),
    }
}

impl<P: SearchProblem> EpsilonWrap<P> {
    /// Number of positive increments rewritten to zero so far.
    pub fn zeroed(&self) -> u64 {
        self.zeroed.get()
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    fn observing(mut self) -> Self {
        self.observer.enabled = true;
        self
    }
}

impl<P: SearchProblem> SearchProblem for EpsilonWrap<P> {
    type State = ReducedNodeState<P::State>;

    fn root(&self) -> Self::State {
        let inner = self.inner.root();
        ReducedNodeState {
            reduced_cost: self.inner.cost(&inner),
            original_cost: self.inner.original_cost(&inner),
            inner,
        }
    }

    fn expand(&self, state: &Self::State, out: &mut Vec<Child<Self::State>>) {
        let mut children = Vec::new();
        self.inner.expand(&state.inner, &mut children);
        self.observer.record(&children);
        // Presenting children in original increment order keeps the original
        // ordering among the increments that tie at zero.
        children.sort_by(|a, b| a.increment.total_cmp(&b.increment));
        for child in children {
            let g = child.increment;
            let reduced = if g <= self.policy.epsilon {
                if g > 0.0 {
                    self.zeroed.set(self.zeroed.get() + 1);
                }
                0.0
            } else {
                g
            };
            let original_cost = self.inner.original_cost(&child.state);
            out.push(Child::new(
                ReducedNodeState {
                    inner: child.state,
                    reduced_cost: state.reduced_cost + reduced,
                    original_cost,
                },
                reduced,
            ));
        }
    }

    fn is_goal(&self, state: &Self::State) -> bool {
        self.inner.is_goal(&state.inner)
    }

    fn cost(&self, state: &Self::State) -> Cost {
        state.reduced_cost
    }

    fn original_cost(&self, state: &Self::State) -> Cost {
        state.original_cost
    }
}

/// Searches the delta-tree of `inner`.
#[derive(Debug)]
pub struct DeltaWrap<P> {
    inner: P,
    policy: DeltaPolicy,
    filtered: Cell<u64>,
    min_filtered_cost: Cell<Cost>,
    observer: Observer,
}

pub fn delta_wrap<P: SearchProblem>(problem: P, policy: DeltaPolicy) -> DeltaWrap<P> {
    DeltaWrap {
        inner: problem,
        policy,
        filtered: Cell::new(0),
        min_filtered_cost: Cell::new(Cost::INFINITY),
        observer: Observer::default(),
    }
}

impl<P: SearchProblem> DeltaWrap<P> {
    /// Number of children removed so far.
    pub fn filtered(&self) -> u64 {
        self.filtered.get()
    }

    /// Cheapest node cost among the removed children.
    pub fn min_filtered_cost(&self) -> Cost {
        self.min_filtered_cost.get()
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    fn observing(mut self) -> Self {
        self.observer.enabled = true;
        self
    }

    fn drop_child(&self, child: &Child<P::State>) {
        self.filtered.set(self.filtered.get() + 1);
        let c = self.inner.cost(&child.state);
        if c < self.min_filtered_cost.get() {
            self.min_filtered_cost.set(c);
        }
    }
}

impl<P: SearchProblem> SearchProblem for DeltaWrap<P> {
    type State = P::State;

    fn root(&self) -> Self::State {
        self.inner.root()
    }

    fn expand(&self, state: &Self::State, out: &mut Vec<Child<Self::State>>) {
        let mut children = Vec::new();
        self.inner.expand(state, &mut children);
        self.observer.record(&children);
        let delta = self.policy.delta;
        if children.iter().any(|c| c.increment <= delta) || !self.policy.rescue_min_child {
            for child in children {
                if child.increment <= delta {
                    out.push(child);
                } else {
                    self.drop_child(&child);
                }
            }
            return;
        }
        // Every child exceeds delta: keep the first cheapest one.
        let Some(keep) = children
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.increment.total_cmp(&b.1.increment).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
        else {
            return;
        };
        for (i, child) in children.into_iter().enumerate() {
            if i == keep {
                out.push(child);
            } else {
                self.drop_child(&child);
            }
        }
    }

    fn is_goal(&self, state: &Self::State) -> bool {
        self.inner.is_goal(state)
    }

    fn cost(&self, state: &Self::State) -> Cost {
        self.inner.cost(state)
    }

    fn original_cost(&self, state: &Self::State) -> Cost {
        self.inner.original_cost(state)
    }
}

/// Depth-first branch-and-bound on the epsilon-tree, reported in original
/// costs.
pub fn epsilon_dfbnb<P: SearchProblem>(
    problem: &P,
    policy: EpsilonPolicy,
    limits: Limits,
) -> Result<SearchResult<P::State>> {
    let wrapped = epsilon_wrap(problem, policy);
    Ok(dfbnb(&wrapped, Cost::INFINITY, limits)?.map_solution(|s| s.inner))
}

/// Depth-first branch-and-bound on the delta-tree.
pub fn delta_dfbnb<P: SearchProblem>(
    problem: &P,
    policy: DeltaPolicy,
    limits: Limits,
) -> Result<SearchResult<P::State>> {
    dfbnb(&delta_wrap(problem, policy), Cost::INFINITY, limits)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeOptions {
    /// Divisor applied to epsilon after each iteration.
    pub halving_factor: f64,
    /// First quantile probability for delta.
    pub quantile_start: f64,
    /// Increase of the quantile probability per iteration.
    pub quantile_step: f64,
    pub rescue_min_child: bool,
    /// Pool the increments seen in each iteration into the sample and
    /// re-estimate before the next one.
    pub reestimate: bool,
    pub max_iterations: Option<usize>,
    /// Stop as soon as an incumbent at or below this cost exists.
    pub target_cost: Option<Cost>,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        Self {
            halving_factor: 2.0,
            quantile_start: 0.1,
            quantile_step: 0.1,
            rescue_min_child: true,
            reestimate: false,
            max_iterations: None,
            target_cost: None,
        }
    }
}

impl IterativeOptions {
    fn validate(&self) -> Result<()> {
        if !(self.halving_factor > 1.0) {
            return Err(Error::Argument("halving factor must exceed 1".into()));
        }
        if !(self.quantile_start > 0.0 && self.quantile_start <= 1.0) {
            return Err(Error::Argument("quantile start must lie in (0, 1]".into()));
        }
        if !(self.quantile_step > 0.0) {
            return Err(Error::Argument("quantile step must be positive".into()));
        }
        Ok(())
    }

    fn halt(&self, iterations: usize, best: Option<Cost>) -> bool {
        self.max_iterations.is_some_and(|m| iterations >= m)
            || matches!((self.target_cost, best), (Some(t), Some(b)) if b <= t)
    }
}

/// What one iteration of a driver did.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationSummary {
    pub index: usize,
    /// Epsilon or delta used.
    pub parameter: Cost,
    /// Quantile probability that produced delta; `None` for epsilon and for
    /// the final unreduced delta iteration.
    pub quantile: Option<f64>,
    /// Cumulative node generations at the end of the iteration.
    pub nodes_generated: u64,
    pub incumbent: Option<Cost>,
    /// Whether the reduction changed anything that could matter.
    pub reduction_applied: bool,
    pub completed: bool,
}

#[derive(Debug, Clone)]
pub struct IterativeResult<S> {
    pub search: SearchResult<S>,
    pub iterations: Vec<IterationSummary>,
    pub sample: Option<OnlineSample>,
    pub epsilon_star: Option<EpsilonStar>,
}

type Best<S> = Option<(S, Cost)>;

fn best_cost<S>(best: &Best<S>) -> Cost {
    best.as_ref().map_or(Cost::INFINITY, |b| b.1)
}

/// Dive phase shared by both drivers. `Err(result)` carries an early
/// result when no goal could be reached or the root itself is a goal.
fn start<P: SearchProblem>(
    problem: &P,
    tally: &mut Tally,
) -> Result<core::result::Result<Dive<P::State>, IterativeResult<P::State>>> {
    match dive(problem, tally) {
        Ok(d) if d.sample.increments().is_empty() => Ok(Err(IterativeResult {
            search: tally.clone().finish(Some((d.leaf, d.cost)), true),
            iterations: Vec::new(),
            sample: Some(d.sample),
            epsilon_star: None,
        })),
        Ok(d) => Ok(Ok(d)),
        Err(Error::Unsealed { .. }) => {
            let completed = !tally.exhausted();
            Ok(Err(IterativeResult {
                search: tally.clone().finish(None, completed),
                iterations: Vec::new(),
                sample: None,
                epsilon_star: None,
            }))
        }
        Err(e) => Err(e),
    }
}

/// Iterative epsilon depth-first branch-and-bound.
///
/// The first dive supplies a sample and an incumbent; iteration 1 searches
/// the epsilon*-tree and every later iteration divides epsilon by
/// `halving_factor`. The driver stops with a proven optimum after a complete
/// iteration in which every node pruned by the reduced-space goal bound (and
/// not by the incumbent) cost at least the final incumbent. In particular an
/// iteration that zeroes no positive increment is plain branch-and-bound.
pub fn iterative_epsilon_dfbnb<P: SearchProblem>(
    problem: &P,
    limits: Limits,
    options: IterativeOptions,
) -> Result<IterativeResult<P::State>> {
    options.validate()?;
    let mut tally = Tally::new(limits);
    let Dive {
        mut sample,
        leaf,
        cost: leaf_cost,
        ..
    } = match start(problem, &mut tally)? {
        Ok(found) => found,
        Err(early) => return Ok(early),
    };
    let mut best: Best<P::State> = Some((leaf, leaf_cost));
    let estar = epsilon_star(&sample)?;
    let mut epsilon = estar.value;
    let mut iterations = Vec::new();

    let (completed, proven) = loop {
        if options.halt(iterations.len(), best.as_ref().map(|b| b.1)) {
            break (true, false);
        }
        if tally.exhausted() {
            break (false, false);
        }
        let mut wrapped = epsilon_wrap(problem, EpsilonPolicy { epsilon });
        if options.reestimate {
            wrapped = wrapped.observing();
        }
        let pass = bnb_pass(&wrapped, &mut tally, best_cost(&best))?;
        if let Some((s, c)) = pass.improved {
            best = Some((s.inner, c));
        }
        let applied = pass.min_reduced_prune < best_cost(&best);
        iterations.push(IterationSummary {
            index: iterations.len() + 1,
            parameter: epsilon,
            quantile: None,
            nodes_generated: tally.generated,
            incumbent: best.as_ref().map(|b| b.1),
            reduction_applied: applied,
            completed: pass.completed,
        });
        if !pass.completed {
            break (false, false);
        }
        if !applied {
            break (true, true);
        }
        epsilon /= options.halving_factor;
        if options.reestimate {
            wrapped.observer.drain_into(&mut sample);
            epsilon = epsilon.min(epsilon_star(&sample)?.value);
        }
    };

    let mut search = tally.finish(best, completed);
    search.optimal_proven = proven && search.best_cost.is_some();
    Ok(IterativeResult {
        search,
        iterations,
        sample: Some(sample),
        epsilon_star: Some(estar),
    })
}

/// Iterative delta depth-first branch-and-bound.
///
/// Delta starts at the `quantile_start` quantile of the sampled increments and
/// the probability grows by `quantile_step` per iteration. Probabilities that
/// would repeat the previous delta are skipped; once the probability passes 1
/// a final iteration runs without pruning. The driver stops with a proven
/// optimum after any iteration in which every pruned child cost at least the
/// final incumbent.
///
/// Pruning starts only after the first leaf: the first iteration continues
/// the dive instead of restarting from the root (unless rescue is off).
pub fn iterative_delta_dfbnb<P: SearchProblem>(
    problem: &P,
    limits: Limits,
    options: IterativeOptions,
) -> Result<IterativeResult<P::State>> {
    options.validate()?;
    let mut tally = Tally::new(limits);
    let Dive {
        mut sample,
        leaf,
        cost: leaf_cost,
        frontier,
    } = match start(problem, &mut tally)? {
        Ok(found) => found,
        Err(early) => return Ok(early),
    };
    let mut best: Best<P::State> = Some((leaf, leaf_cost));
    // With rescue on, the dive path lies in every delta-tree, so the first
    // iteration picks up where the dive stopped.
    let mut frontier = options.rescue_min_child.then_some(frontier);
    let mut iterations = Vec::new();
    let mut step: u32 = 0;
    let mut previous: Option<Cost> = None;

    let (completed, proven) = loop {
        if options.halt(iterations.len(), best.as_ref().map(|b| b.1)) {
            break (true, false);
        }
        if tally.exhausted() {
            break (false, false);
        }
        let (delta, quantile) = loop {
            let p = options.quantile_start + options.quantile_step * step as f64;
            if p > 1.0 + 1e-9 {
                break (Cost::INFINITY, None);
            }
            let d = delta_at_quantile(&sample, p.min(1.0))?;
            if previous.is_none_or(|prev| d > prev) {
                break (d, Some(p.min(1.0)));
            }
            step += 1;
        };

        let policy = DeltaPolicy {
            delta,
            rescue_min_child: options.rescue_min_child,
        };
        let mut wrapped = delta_wrap(problem, policy);
        if options.reestimate {
            wrapped = wrapped.observing();
        }
        let pass = match frontier.take() {
            Some(frontier) => {
                let mut stack = Vec::with_capacity(frontier.len());
                for child in frontier {
                    if child.increment <= delta {
                        stack.push(child.state);
                    } else {
                        wrapped.drop_child(&child);
                    }
                }
                bnb_resume(&wrapped, &mut tally, best_cost(&best), stack)?
            }
            None => bnb_pass(&wrapped, &mut tally, best_cost(&best))?,
        };
        if let Some(found) = pass.improved {
            best = Some(found);
        }
        let applied = wrapped.min_filtered_cost() < best_cost(&best);
        iterations.push(IterationSummary {
            index: iterations.len() + 1,
            parameter: delta,
            quantile,
            nodes_generated: tally.generated,
            incumbent: best.as_ref().map(|b| b.1),
            reduction_applied: applied,
            completed: pass.completed,
        });
        if !pass.completed {
            break (false, false);
        }
        if !applied {
            break (true, true);
        }
        previous = Some(delta);
        step += 1;
        if options.reestimate {
            wrapped.observer.drain_into(&mut sample);
        }
    };

    let mut search = tally.finish(best, completed);
    search.optimal_proven = proven && search.best_cost.is_some();
    Ok(IterativeResult {
        search,
        iterations,
        sample: Some(sample),
        epsilon_star: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::fixtures::ExplicitTree;
    use crate::search::best_first_search;
    use crate::tree::{make_tree, BranchingDistribution, EdgeCostDistribution, TreeSpec};
    use alloc::vec;

    fn expansion<P: SearchProblem>(p: &P, s: &P::State) -> Vec<Cost> {
        let mut out = Vec::new();
        p.expand(s, &mut out);
        out.into_iter().map(|c| c.increment).collect()
    }

    /// T(b = 2, d = 2) with edge costs in (0, 1).
    fn small_tree() -> ExplicitTree {
        ExplicitTree {
            edges: vec![
                vec![(1, 0.2), (2, 0.7)],
                vec![(3, 0.4), (4, 0.1)],
                vec![(5, 0.25), (6, 0.9)],
                vec![],
                vec![],
                vec![],
                vec![],
            ],
            depth: vec![0, 1, 1, 2, 2, 2, 2],
            goal_depth: 2,
        }
    }

    #[test]
    fn zero_epsilon_is_identity() {
        let t = small_tree();
        let w = epsilon_wrap(&t, EpsilonPolicy::new(0.0).unwrap());
        let r = w.root();
        let mut inc = expansion(&w, &r);
        let mut orig = expansion(&t, &t.root());
        inc.sort_by(f64::total_cmp);
        orig.sort_by(f64::total_cmp);
        assert_eq!(inc, orig);
        assert_eq!(w.zeroed(), 0);
    }

    #[test]
    fn epsilon_quarter_zeroes_small_edges() {
        let t = small_tree();
        let w = epsilon_wrap(&t, EpsilonPolicy::new(0.25).unwrap());
        let mut leaves = Vec::new();
        let mut stack = vec![w.root()];
        while let Some(s) = stack.pop() {
            let mut out = Vec::new();
            w.expand(&s, &mut out);
            if out.is_empty() {
                leaves.push((s.inner.0, s.reduced_cost, s.original_cost));
            }
            stack.extend(out.into_iter().map(|c| c.state));
        }
        leaves.sort_by_key(|l| l.0);
        // 0.2, 0.1 and 0.25 are zeroed; 0.4, 0.7 and 0.9 survive.
        let expect = [(3, 0.4, 0.6), (4, 0.0, 0.3), (5, 0.7, 0.95), (6, 1.6, 1.6)];
        for (got, want) in leaves.iter().zip(expect) {
            assert_eq!(got.0, want.0);
            assert!((got.1 - want.1).abs() < 1e-12);
            assert!((got.2 - want.2).abs() < 1e-12);
        }
        assert_eq!(w.zeroed(), 3);
    }

    #[test]
    fn infinite_delta_is_identity() {
        let t = small_tree();
        let w = delta_wrap(&t, DeltaPolicy::new(Cost::INFINITY).unwrap());
        assert_eq!(expansion(&w, &w.root()), expansion(&t, &t.root()));
        assert_eq!(w.filtered(), 0);
    }

    #[test]
    fn delta_removes_expensive_edges() {
        let t = small_tree();
        let w = delta_wrap(&t, DeltaPolicy::new(0.65).unwrap());
        assert_eq!(expansion(&w, &(0, 0.0)), vec![0.2]);
        assert_eq!(expansion(&w, &(2, 0.7)), vec![0.25]);
        assert_eq!(w.filtered(), 2);
    }

    #[test]
    fn rescue_keeps_cheapest_child() {
        let t = ExplicitTree {
            edges: vec![vec![(1, 0.9), (2, 1.2)], vec![], vec![]],
            depth: vec![0, 1, 1],
            goal_depth: 1,
        };
        let w = delta_wrap(&t, DeltaPolicy::new(0.5).unwrap());
        assert_eq!(expansion(&w, &w.root()), vec![0.9]);
        let w = delta_wrap(&t, DeltaPolicy::new(0.5).unwrap().without_rescue());
        assert!(expansion(&w, &w.root()).is_empty());
        let r = dfbnb(&w, Cost::INFINITY, Limits::unlimited()).unwrap();
        assert_eq!(r.best_cost, None);
    }

    #[test]
    fn epsilon_covering_all_edges_gives_zero_reduced_optimum() {
        let tree = make_tree(TreeSpec::new(
            5,
            BranchingDistribution::Fixed(3),
            EdgeCostDistribution::uniform(0, 50),
            17,
        ))
        .unwrap();
        let w = epsilon_wrap(&tree, EpsilonPolicy::new(50.0).unwrap());
        let r = dfbnb(&w, Cost::INFINITY, Limits::unlimited()).unwrap();
        let best = r.best_solution.unwrap();
        assert_eq!(best.reduced_cost, 0.0);
        // the first leaf reached is already a reduced optimum
        assert_eq!(r.anytime.events().len(), 1);
    }

    #[test]
    fn two_valued_increments_stay_exact() {
        let tree = make_tree(TreeSpec::new(
            4,
            BranchingDistribution::Fixed(2),
            EdgeCostDistribution::Discrete {
                values: vec![10.0, 20.0],
                probabilities: vec![0.5, 0.5],
            },
            3,
        ))
        .unwrap();
        let r = iterative_delta_dfbnb(&tree, Limits::unlimited(), IterativeOptions::default()).unwrap();
        let opt = best_first_search(&tree, Limits::unlimited()).unwrap().best_cost;
        assert_eq!(r.search.best_cost, opt);
        assert!(r.search.optimal_proven);
    }

    #[test]
    fn constant_increments_terminate_after_one_delta_iteration() {
        let tree = make_tree(TreeSpec::new(
            4,
            BranchingDistribution::Fixed(3),
            EdgeCostDistribution::constant(2.0),
            3,
        ))
        .unwrap();
        let r = iterative_delta_dfbnb(&tree, Limits::unlimited(), IterativeOptions::default()).unwrap();
        assert_eq!(r.iterations.len(), 1);
        assert!(!r.iterations[0].reduction_applied);
        assert!(r.search.optimal_proven);
        assert_eq!(r.search.best_cost, Some(8.0));
    }

    #[test]
    fn zero_epsilon_star_is_plain_dfbnb() {
        // b = 4 with a quarter of the sample at 0 puts epsilon* at 0
        let tree = make_tree(TreeSpec::new(
            3,
            BranchingDistribution::Fixed(4),
            EdgeCostDistribution::Discrete {
                values: vec![0.0, 5.0, 6.0, 7.0],
                probabilities: vec![0.25, 0.25, 0.25, 0.25],
            },
            12,
        ))
        .unwrap();
        let r = iterative_epsilon_dfbnb(&tree, Limits::unlimited(), IterativeOptions::default()).unwrap();
        let opt = best_first_search(&tree, Limits::unlimited()).unwrap().best_cost;
        assert_eq!(r.search.best_cost, opt);
        assert!(r.search.optimal_proven);
        if r.epsilon_star.unwrap().value == 0.0 {
            assert_eq!(r.iterations.len(), 1);
        }
    }

    #[test]
    fn drivers_are_exact_and_monotone() {
        for seed in 0..40 {
            let tree = make_tree(TreeSpec::new(
                6,
                BranchingDistribution::Poisson { mean: 2.5 },
                EdgeCostDistribution::uniform(0, 1000),
                seed,
            ))
            .unwrap();
            let opt = best_first_search(&tree, Limits::unlimited()).unwrap().best_cost;
            for opts in [
                IterativeOptions::default(),
                IterativeOptions {
                    reestimate: true,
                    ..IterativeOptions::default()
                },
            ] {
                let e = iterative_epsilon_dfbnb(&tree, Limits::unlimited(), opts).unwrap();
                let d = iterative_delta_dfbnb(&tree, Limits::unlimited(), opts).unwrap();
                for r in [&e, &d] {
                    assert_eq!(r.search.best_cost, opt, "seed {seed}");
                    assert!(r.search.optimal_proven);
                    let inc: Vec<_> = r.iterations.iter().filter_map(|i| i.incumbent).collect();
                    assert!(inc.windows(2).all(|w| w[1] <= w[0]));
                }
            }
        }
    }

    #[test]
    fn budget_truncates_drivers() {
        let tree = make_tree(TreeSpec::new(
            12,
            BranchingDistribution::Fixed(5),
            EdgeCostDistribution::uniform(0, 65535),
            1,
        ))
        .unwrap();
        let e = iterative_epsilon_dfbnb(&tree, Limits::with_budget(500), IterativeOptions::default()).unwrap();
        assert!(e.search.truncated && !e.search.optimal_proven);
        assert!(e.search.best_cost.is_some());
        let d = iterative_delta_dfbnb(&tree, Limits::with_budget(20), IterativeOptions::default()).unwrap();
        assert!(d.search.truncated && d.search.best_cost.is_none());
    }

    #[test]
    fn halting_target_stops_early() {
        let tree = make_tree(TreeSpec::new(
            8,
            BranchingDistribution::Fixed(3),
            EdgeCostDistribution::uniform(0, 100),
            4,
        ))
        .unwrap();
        let opts = IterativeOptions {
            target_cost: Some(Cost::INFINITY),
            ..IterativeOptions::default()
        };
        let r = iterative_epsilon_dfbnb(&tree, Limits::unlimited(), opts).unwrap();
        assert!(r.iterations.is_empty());
        assert!(!r.search.optimal_proven);
    }

    #[test]
    fn goal_root_is_optimal() {
        let t = ExplicitTree {
            edges: vec![vec![]],
            depth: vec![0],
            goal_depth: 0,
        };
        let e = iterative_epsilon_dfbnb(&t, Limits::unlimited(), IterativeOptions::default()).unwrap();
        let d = iterative_delta_dfbnb(&t, Limits::unlimited(), IterativeOptions::default()).unwrap();
        for r in [e, d] {
            assert_eq!(r.search.best_cost, Some(0.0));
            assert!(r.search.optimal_proven);
            assert_eq!(r.search.nodes_generated, 1);
        }
    }

    #[test]
    fn policies_validate() {
        assert!(EpsilonPolicy::new(-1.0).is_err());
        assert!(DeltaPolicy::new(f64::NAN).is_err());
        let bad = IterativeOptions {
            halving_factor: 1.0,
            ..IterativeOptions::default()
        };
        let t = small_tree();
        assert!(iterative_epsilon_dfbnb(&t, Limits::unlimited(), bad).is_err());
    }
}
