//! Search problems, best-first search and depth-first branch-and-bound.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

/// Node and edge costs. Integer-valued domains stay exact below 2^53.
pub type Cost = f64;

/// A generated child together with its cost increment over the parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Child<S> {
    pub state: S,
    pub increment: Cost,
}

impl<S> Child<S> {
    pub fn new(state: S, increment: Cost) -> Self {
        Self { state, increment }
    }
}

/// A state-space tree with monotonic node costs.
///
/// `expand` appends the children of a node to `out`; every increment must be
/// non-negative and a goal has no children. `cost` is the node cost in the
/// space being searched, `original_cost` the cost in the untransformed space
/// (the two differ only under cost-rewriting wrappers).
pub trait SearchProblem {
    type State: Clone;

    fn root(&self) -> Self::State;
    fn expand(&self, state: &Self::State, out: &mut Vec<Child<Self::State>>);
    fn is_goal(&self, state: &Self::State) -> bool;
    fn cost(&self, state: &Self::State) -> Cost;

    fn original_cost(&self, state: &Self::State) -> Cost {
        self.cost(state)
    }
}

impl<P: SearchProblem + ?Sized> SearchProblem for &P {
    type State = P::State;

    fn root(&self) -> Self::State {
        (**self).root()
    }
    fn expand(&self, state: &Self::State, out: &mut Vec<Child<Self::State>>) {
        (**self).expand(state, out)
    }
    fn is_goal(&self, state: &Self::State) -> bool {
        (**self).is_goal(state)
    }
    fn cost(&self, state: &Self::State) -> Cost {
        (**self).cost(state)
    }
    fn original_cost(&self, state: &Self::State) -> Cost {
        (**self).original_cost(state)
    }
}

/// Resource limits for one search run.
#[derive(Debug, Clone, Copy, Default)]
pub struct Limits {
    /// Maximum number of node generations. A run stops before expanding a
    /// node once the count has been reached, so it may overshoot by at most
    /// one node's branching factor.
    pub node_budget: Option<u64>,
    /// Maximum open-list size; exceeding it is an error, not a truncation.
    pub open_cap: Option<usize>,
    /// Monotonic clock in seconds, used only to timestamp anytime events.
    pub clock: Option<fn() -> f64>,
}

impl Limits {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn with_budget(budget: u64) -> Self {
        Self {
            node_budget: Some(budget),
            ..Self::default()
        }
    }

    pub fn clock(mut self, clock: fn() -> f64) -> Self {
        self.clock = Some(clock);
        self
    }

    fn now(&self) -> f64 {
        self.clock.map_or(0.0, |c| c())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnytimeEvent {
    pub nodes_generated: u64,
    pub wall_time: f64,
    pub cost: Cost,
}

/// Stream of incumbent improvements, in original-space cost.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnytimeRecord {
    events: Vec<AnytimeEvent>,
}

impl AnytimeRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_events(events: Vec<AnytimeEvent>) -> Result<Self> {
        let mut record = Self::new();
        for e in events {
            if !record.push(e) {
                return Err(Error::Argument(alloc::format!(
                    "anytime events must have strictly decreasing costs and nondecreasing counters (cost {} at {})",
                    e.cost, e.nodes_generated
                )));
            }
        }
        Ok(record)
    }

    /// Appends an event if it strictly improves on the last one. Returns
    /// whether the event was kept.
    pub fn push(&mut self, event: AnytimeEvent) -> bool {
        if let Some(last) = self.events.last() {
            if event.cost >= last.cost || event.nodes_generated < last.nodes_generated {
                return false;
            }
        }
        self.events.push(event);
        true
    }

    pub fn events(&self) -> &[AnytimeEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last(&self) -> Option<&AnytimeEvent> {
        self.events.last()
    }

    pub fn first(&self) -> Option<&AnytimeEvent> {
        self.events.first()
    }

    /// Best incumbent cost available after `budget` node generations.
    pub fn best_at(&self, budget: u64) -> Option<Cost> {
        self.events
            .iter()
            .take_while(|e| e.nodes_generated <= budget)
            .last()
            .map(|e| e.cost)
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult<S> {
    /// Original-space cost of the best goal found.
    pub best_cost: Option<Cost>,
    pub best_solution: Option<S>,
    pub nodes_generated: u64,
    pub nodes_expanded: u64,
    /// The run finished without truncation and found a goal.
    pub optimal_proven: bool,
    /// The node budget stopped the run early.
    pub truncated: bool,
    pub peak_open: usize,
    pub anytime: AnytimeRecord,
}

impl<S> SearchResult<S> {
    pub fn map_solution<T>(self, f: impl FnOnce(S) -> T) -> SearchResult<T> {
        SearchResult {
            best_cost: self.best_cost,
            best_solution: self.best_solution.map(f),
            nodes_generated: self.nodes_generated,
            nodes_expanded: self.nodes_expanded,
            optimal_proven: self.optimal_proven,
            truncated: self.truncated,
            peak_open: self.peak_open,
            anytime: self.anytime,
        }
    }
}

/// Counters and incumbent stream shared by consecutive runs of one driver.
#[derive(Debug, Clone)]
pub(crate) struct Tally {
    pub limits: Limits,
    pub generated: u64,
    pub expanded: u64,
    pub peak_open: usize,
    pub record: AnytimeRecord,
    started: f64,
}

impl Tally {
    pub fn new(limits: Limits) -> Self {
        Self {
            started: limits.now(),
            limits,
            generated: 0,
            expanded: 0,
            peak_open: 0,
            record: AnytimeRecord::new(),
        }
    }

    pub fn exhausted(&self) -> bool {
        self.limits
            .node_budget
            .is_some_and(|budget| self.generated >= budget)
    }

    pub fn observe_open(&mut self, len: usize) -> Result<()> {
        self.peak_open = self.peak_open.max(len);
        match self.limits.open_cap {
            Some(cap) if len > cap => Err(Error::OpenListCap { cap }),
            _ => Ok(()),
        }
    }

    pub fn improve(&mut self, cost: Cost) {
        let wall_time = self.limits.now() - self.started;
        self.record.push(AnytimeEvent {
            nodes_generated: self.generated,
            wall_time,
            cost,
        });
    }

    pub fn finish<S>(self, best: Option<(S, Cost)>, completed: bool) -> SearchResult<S> {
        let (best_solution, best_cost) = match best {
            Some((s, c)) => (Some(s), Some(c)),
            None => (None, None),
        };
        SearchResult {
            optimal_proven: completed && best_cost.is_some(),
            truncated: !completed,
            best_cost,
            best_solution,
            nodes_generated: self.generated,
            nodes_expanded: self.expanded,
            peak_open: self.peak_open,
            anytime: self.record,
        }
    }
}

/// Sorts children by ascending increment, keeping input order among ties.
pub(crate) fn order_children<S>(children: &mut [Child<S>]) {
    children.sort_by(|a, b| a.increment.total_cmp(&b.increment));
}

/// Outcome of one branch-and-bound pass.
pub(crate) struct Pass<S> {
    /// Best new incumbent found in this pass (original-space cost).
    pub improved: Option<(S, Cost)>,
    pub completed: bool,
    /// Cheapest search-space cost among nodes pruned while it was still
    /// below the original-space incumbent, i.e. pruned only because of a
    /// reduced goal bound.
    pub min_reduced_prune: Cost,
}

/// One depth-first branch-and-bound pass.
///
/// `incumbent` is the best original-space cost known before the pass. Nodes
/// are pruned when their search-space cost reaches the pass bound, which is
/// the smaller of `incumbent` and the cheapest search-space goal cost seen in
/// this pass. With an unreduced problem both coincide with the usual upper
/// bound `u`.
pub(crate) fn bnb_pass<P: SearchProblem>(
    problem: &P,
    tally: &mut Tally,
    incumbent: Cost,
) -> Result<Pass<P::State>> {
    // a later iteration must not regenerate the root past the budget
    if tally.exhausted() {
        return Ok(Pass {
            improved: None,
            completed: false,
            min_reduced_prune: Cost::INFINITY,
        });
    }
    tally.generated += 1;
    tally.observe_open(1)?;
    bnb_resume(problem, tally, incumbent, alloc::vec![problem.root()])
}

/// Continues a pass from an already generated stack, top last.
pub(crate) fn bnb_resume<P: SearchProblem>(
    problem: &P,
    tally: &mut Tally,
    incumbent: Cost,
    mut stack: Vec<P::State>,
) -> Result<Pass<P::State>> {
    let mut best_original = incumbent;
    let mut bound = incumbent;
    let mut improved = None;
    let mut min_reduced_prune = Cost::INFINITY;
    let mut children = Vec::new();

    while let Some(state) = stack.pop() {
        let cost = problem.cost(&state);
        if cost >= bound {
            if cost < best_original {
                min_reduced_prune = min_reduced_prune.min(cost);
            }
            continue;
        }
        if problem.is_goal(&state) {
            bound = cost;
            let original = problem.original_cost(&state);
            if original < best_original {
                best_original = original;
                bound = bound.min(original);
                tally.improve(original);
                improved = Some((state, original));
            }
            continue;
        }
        if tally.exhausted() {
            return Ok(Pass {
                improved,
                completed: false,
                min_reduced_prune,
            });
        }

        children.clear();
        problem.expand(&state, &mut children);
        tally.expanded += 1;
        tally.generated += children.len() as u64;
        order_children(&mut children);
        for child in children.drain(..).rev() {
            let c = problem.cost(&child.state);
            if c < bound {
                stack.push(child.state);
            } else if c < best_original {
                min_reduced_prune = min_reduced_prune.min(c);
            }
        }
        tally.observe_open(stack.len())?;
    }

    Ok(Pass {
        improved,
        completed: true,
        min_reduced_prune,
    })
}

/// Depth-first branch-and-bound.
///
/// Expands the most recently generated node, children in ascending order of
/// increment, and prunes every node whose cost is at least the current upper
/// bound. Every improvement is appended to the anytime record.
pub fn dfbnb<P: SearchProblem>(
    problem: &P,
    initial_upper_bound: Cost,
    limits: Limits,
) -> Result<SearchResult<P::State>> {
    if initial_upper_bound.is_nan() || initial_upper_bound < 0.0 {
        return Err(Error::Argument(alloc::format!(
            "initial upper bound must be non-negative, got {initial_upper_bound}"
        )));
    }
    let mut tally = Tally::new(limits);
    let pass = bnb_pass(problem, &mut tally, initial_upper_bound)?;
    Ok(tally.finish(pass.improved, pass.completed))
}

struct OpenNode<S> {
    cost: Cost,
    depth: u32,
    path: Vec<u32>,
    state: S,
}

impl<S> PartialEq for OpenNode<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S> Eq for OpenNode<S> {}

impl<S> PartialOrd for OpenNode<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S> Ord for OpenNode<S> {
    // Greatest = expanded first: cheapest, then deepest, then smallest path.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(self.depth.cmp(&other.depth))
            .then_with(|| other.path.cmp(&self.path))
    }
}

/// Best-first search.
///
/// Repeatedly expands a cheapest open node and stops when a goal is selected,
/// which is then optimal. Equal-cost ties go to the deeper node, then to the
/// lexicographically smaller path of child indices. No incumbent exists
/// before termination, so a truncated run reports no solution.
pub fn best_first_search<P: SearchProblem>(
    problem: &P,
    limits: Limits,
) -> Result<SearchResult<P::State>> {
    let mut tally = Tally::new(limits);
    let mut open = BinaryHeap::new();
    let root = problem.root();
    open.push(OpenNode {
        cost: problem.cost(&root),
        depth: 0,
        path: Vec::new(),
        state: root,
    });
    tally.generated = 1;
    tally.observe_open(1)?;

    let mut children = Vec::new();
    while let Some(node) = open.pop() {
        if problem.is_goal(&node.state) {
            let original = problem.original_cost(&node.state);
            tally.improve(original);
            return Ok(tally.finish(Some((node.state, original)), true));
        }
        if tally.exhausted() {
            return Ok(tally.finish(None, false));
        }
        children.clear();
        problem.expand(&node.state, &mut children);
        tally.expanded += 1;
        tally.generated += children.len() as u64;
        for (index, child) in children.drain(..).enumerate() {
            let mut path = Vec::with_capacity(node.path.len() + 1);
            path.extend_from_slice(&node.path);
            path.push(index as u32);
            open.push(OpenNode {
                cost: problem.cost(&child.state),
                depth: node.depth + 1,
                path,
                state: child.state,
            });
        }
        tally.observe_open(open.len())?;
    }
    // Every branch dead-ended without reaching a goal.
    Ok(tally.finish(None, true))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use alloc::vec;

    /// Explicit tree given as nested edge lists; goals are the leaves at `depth`.
    #[derive(Debug, Clone)]
    pub struct ExplicitTree {
        pub edges: Vec<Vec<(usize, Cost)>>,
        pub depth: Vec<usize>,
        pub goal_depth: usize,
    }

    impl ExplicitTree {
        /// Two-level binary tree with the given leaf costs, all increments on
        /// the second level.
        pub fn two_level(leaves: [Cost; 4]) -> Self {
            let edges = vec![
                vec![(1, 0.0), (2, 0.0)],
                vec![(3, leaves[0]), (4, leaves[1])],
                vec![(5, leaves[2]), (6, leaves[3])],
                vec![],
                vec![],
                vec![],
                vec![],
            ];
            Self {
                edges,
                depth: vec![0, 1, 1, 2, 2, 2, 2],
                goal_depth: 2,
            }
        }
    }

    impl SearchProblem for ExplicitTree {
        type State = (usize, Cost);

        fn root(&self) -> Self::State {
            (0, 0.0)
        }
        fn expand(&self, state: &Self::State, out: &mut Vec<Child<Self::State>>) {
            for &(c, w) in &self.edges[state.0] {
                out.push(Child::new((c, state.1 + w), w));
            }
        }
        fn is_goal(&self, state: &Self::State) -> bool {
            self.depth[state.0] == self.goal_depth
        }
        fn cost(&self, state: &Self::State) -> Cost {
            state.1
        }
    }
}
