//! Oracle checks on small instances.
//!
//! Every algorithm must return the brute-force optimum, every node expanded
//! by branch-and-bound must carry a bound no larger than the best solution
//! below it, incumbent streams must improve strictly, and the reduced trees
//! must bracket the true optimum.

use std::cell::RefCell;
use std::fmt;

use ssr_core::atsp::{self, generate_atsp, AtspProblem, AtspStructure};
use ssr_core::maxsat::{generate_3sat, CnfInstance, SatProblem};
use ssr_core::reduction::{delta_wrap, epsilon_wrap, DeltaPolicy, EpsilonPolicy};
use ssr_core::stsp::{self, generate_stsp, StspProblem};
use ssr_core::tree::{make_tree, BranchingDistribution, EdgeCostDistribution, TreeProblem, TreeSpec};
use ssr_core::{dfbnb, Child, Cost, Limits, SearchProblem};

use crate::config::{Algorithm, Budget, DomainParams, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::experiment::{instance_seed, run_algorithm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Trees,
    Atsp,
    Stsp,
    MaxSat,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Trees, Suite::Atsp, Suite::Stsp, Suite::MaxSat];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Trees => "trees",
            Suite::Atsp => "atsp",
            Suite::Stsp => "stsp",
            Suite::MaxSat => "maxsat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }
}

/// How many instances of each suite to check.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifySpec {
    pub suites: Vec<(Suite, u32)>,
    pub seed: u64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            suites: vec![
                (Suite::Trees, 200),
                (Suite::Atsp, 100),
                (Suite::Stsp, 100),
                (Suite::MaxSat, 100),
            ],
            seed: 0,
        }
    }
}

/// Largest tree the suite will enumerate.
pub const MAX_TREE_NODES: u64 = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub suite: Suite,
    pub instance: u32,
    pub check: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.suite.name(), self.instance, self.check, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    /// Instances checked per suite.
    pub instances: Vec<(Suite, u32)>,
    /// Individual comparisons made.
    pub checks: u64,
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, check: &str) -> usize {
        self.violations.iter().filter(|v| v.check == check).count()
    }
}

/// Delegates to `inner` and remembers every expanded state.
pub struct Recording<'a, P: SearchProblem> {
    inner: &'a P,
    expanded: RefCell<Vec<P::State>>,
}

impl<'a, P: SearchProblem> Recording<'a, P> {
    pub fn new(inner: &'a P) -> Self {
        Self {
            inner,
            expanded: RefCell::new(Vec::new()),
        }
    }

    pub fn into_expanded(self) -> Vec<P::State> {
        self.expanded.into_inner()
    }
}

impl<P: SearchProblem> SearchProblem for Recording<'_, P> {
    type State = P::State;

    fn root(&self) -> Self::State {
        self.inner.root()
    }
    fn expand(&self, state: &Self::State, out: &mut Vec<Child<Self::State>>) {
        self.expanded.borrow_mut().push(state.clone());
        self.inner.expand(state, out)
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

/// `(bound, oracle)` for every node expanded by unbudgeted DFBnB whose cost
/// exceeds the oracle's best solution below it. The oracle returns `None`
/// when no solution lies below the node.
pub fn admissibility_violations<P: SearchProblem>(
    problem: &P,
    oracle: impl Fn(&P::State) -> Result<Option<Cost>>,
) -> Result<(usize, Vec<(Cost, Cost)>)> {
    let rec = Recording::new(problem);
    dfbnb(&rec, Cost::INFINITY, Limits::unlimited())?;
    let expanded = rec.into_expanded();
    let mut bad = Vec::new();
    for s in &expanded {
        if let Some(best) = oracle(s)? {
            let bound = problem.cost(s);
            if bound > best {
                bad.push((bound, best));
            }
        }
    }
    Ok((expanded.len(), bad))
}

/// Minimum goal cost by exhaustive traversal, or `TooLarge` past `cap`
/// generated nodes. Returns the count of nodes visited too.
pub fn enumerate_optimum<P: SearchProblem>(
    problem: &P,
    start: P::State,
    cap: u64,
) -> Result<(Option<Cost>, u64)> {
    let mut best: Option<Cost> = None;
    let mut stack = vec![start];
    let mut seen = 1u64;
    let mut children = Vec::new();
    while let Some(s) = stack.pop() {
        if problem.is_goal(&s) {
            let c = problem.cost(&s);
            best = Some(best.map_or(c, |b: Cost| b.min(c)));
            continue;
        }
        children.clear();
        problem.expand(&s, &mut children);
        seen += children.len() as u64;
        if seen > cap {
            return Err(BenchError::Core(ssr_core::Error::TooLarge(format!(
                "more than {cap} nodes"
            ))));
        }
        stack.extend(children.drain(..).map(|c| c.state));
    }
    Ok((best, seen))
}

const EXACT_ALGORITHMS: [Algorithm; 4] = [
    Algorithm::Bfs,
    Algorithm::Dfbnb,
    Algorithm::IterEpsDfbnb,
    Algorithm::IterDeltaDfbnb,
];

struct Checker<'a> {
    report: &'a mut VerifyReport,
    suite: Suite,
    instance: u32,
}

impl Checker<'_> {
    fn check(&mut self, ok: bool, check: &'static str, detail: impl FnOnce() -> String) {
        self.report.checks += 1;
        if !ok {
            self.report.violations.push(Violation {
                suite: self.suite,
                instance: self.instance,
                check,
                detail: detail(),
            });
        }
    }

    /// Exactness and anytime monotonicity of every algorithm.
    fn algorithms<P: SearchProblem>(
        &mut self,
        problem: &P,
        domain: DomainParams,
        optimum: Option<Cost>,
    ) -> Result<()> {
        let mut config = ExperimentConfig::new(domain, EXACT_ALGORITHMS.to_vec());
        config.budget = Budget::Auto;
        for alg in EXACT_ALGORITHMS {
            let run = run_algorithm(problem, alg, &config)?;
            self.check(run.best_cost == optimum, "exactness", || {
                format!("{alg} returned {:?}, oracle {:?}", run.best_cost, optimum)
            });
            self.check(run.optimal_proven == optimum.is_some(), "proof", || {
                format!("{alg} optimal_proven={}", run.optimal_proven)
            });
            let ev = run.anytime.events();
            let monotone = ev
                .windows(2)
                .all(|w| w[1].cost < w[0].cost && w[1].nodes_generated >= w[0].nodes_generated)
                && ev.last().map(|e| e.cost) == run.best_cost;
            self.check(monotone, "monotone_incumbents", || {
                format!("{alg} anytime record {ev:?}")
            });
        }
        Ok(())
    }

    fn admissibility(&mut self, expanded: usize, bad: Vec<(Cost, Cost)>) {
        self.report.checks += expanded as u64;
        for (bound, best) in bad {
            self.report.violations.push(Violation {
                suite: self.suite,
                instance: self.instance,
                check: "admissibility",
                detail: format!("bound {bound} exceeds best completion {best}"),
            });
        }
    }
}

fn pick(seed: u64, salt: u64, n: u64) -> u64 {
    instance_seed(seed ^ salt, 0) % n
}

/// Small tree for instance `i`, regenerated until it has at most
/// [`MAX_TREE_NODES`] nodes.
pub fn small_tree(seed: u64, i: u32) -> Result<TreeProblem> {
    for attempt in 0u64.. {
        let s = instance_seed(seed, i) ^ attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let depth = 2 + pick(s, 1, 5) as u32;
        let branching = match pick(s, 2, 3) {
            0 => BranchingDistribution::Fixed(2),
            1 => BranchingDistribution::Fixed(3),
            _ => BranchingDistribution::Poisson { mean: 2.5 },
        };
        let edge_cost = match pick(s, 3, 3) {
            0 => EdgeCostDistribution::uniform(0, 9),
            1 => EdgeCostDistribution::uniform(0, 65535),
            _ => EdgeCostDistribution::zero_inflated(0.3, 5),
        };
        let tree = make_tree(TreeSpec::new(depth, branching, edge_cost, s))?;
        if enumerate_optimum(&tree, tree.root(), MAX_TREE_NODES).is_ok() {
            return Ok(tree);
        }
    }
    unreachable!()
}

pub fn small_atsp(seed: u64, i: u32) -> Result<AtspProblem> {
    let s = instance_seed(seed, i);
    let n = 4 + pick(s, 1, 5) as usize;
    let structure = match pick(s, 2, 3) {
        0 => AtspStructure::UniformRange(10),
        1 => AtspStructure::UniformRange(1000),
        _ => AtspStructure::ITimesJ,
    };
    Ok(AtspProblem::new(generate_atsp(n, structure, s)?))
}

pub fn small_stsp(seed: u64, i: u32) -> Result<StspProblem> {
    let s = instance_seed(seed, i);
    let n = 4 + pick(s, 1, 5) as usize;
    let hi = if pick(s, 2, 2) == 0 { 10 } else { 1000 };
    Ok(StspProblem::new(generate_stsp(n, hi, s)?))
}

pub fn small_maxsat(seed: u64, i: u32) -> Result<SatProblem> {
    let s = instance_seed(seed, i);
    let vars = 6 + pick(s, 1, 10) as usize;
    let ratio = [2, 5, 10, 15][pick(s, 2, 4) as usize];
    let cnf = generate_3sat(vars, vars * ratio, s)?;
    Ok(SatProblem::new(cnf).with_pure_literals(pick(s, 3, 2) == 0))
}

/// Unsatisfied-clause count for every full assignment (bit `v` set means
/// variable `v + 1` is true).
pub fn unsat_table(cnf: &CnfInstance) -> Vec<u32> {
    let n = cnf.num_vars();
    (0..1u32 << n)
        .map(|bits| {
            cnf.clauses()
                .iter()
                .filter(|c| {
                    !c.iter().any(|&l| {
                        let v = bits >> (l.unsigned_abs() - 1) & 1 == 1;
                        v == (l > 0)
                    })
                })
                .count() as u32
        })
        .collect()
}

/// Fewest unsatisfied clauses over completions of a partial assignment.
pub fn best_completion(table: &[u32], assignment: &[Option<bool>]) -> u32 {
    let (mut fixed, mut free) = (0u32, 0u32);
    for (v, a) in assignment.iter().enumerate() {
        match a {
            Some(true) => fixed |= 1 << v,
            Some(false) => {}
            None => free |= 1 << v,
        }
    }
    let mut best = u32::MAX;
    let mut sub = free;
    loop {
        best = best.min(table[(fixed | sub) as usize]);
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & free;
    }
    best
}

fn verify_tree(c: &mut Checker<'_>, tree: &TreeProblem, seed: u64) -> Result<()> {
    let (optimum, _) = enumerate_optimum(tree, tree.root(), MAX_TREE_NODES)?;
    let spec = tree.spec();
    let domain = DomainParams::Tree(crate::config::TreeParams {
        depth: spec.depth,
        branching: spec.branching.clone(),
        edge_cost: spec.edge_cost.clone(),
    });
    c.algorithms(tree, domain, optimum)?;
    let (n, bad) = admissibility_violations(tree, |s| {
        Ok(enumerate_optimum(tree, s.clone(), MAX_TREE_NODES)?.0)
    })?;
    c.admissibility(n, bad);

    // reduced trees bracket the optimum
    let opt = optimum.expect("trees have leaves");
    let increments = all_increments(tree)?;
    let eps = increments[pick(seed, 4, increments.len() as u64) as usize];
    let delta = increments[pick(seed, 5, increments.len() as u64) as usize];
    let e = epsilon_wrap(tree, EpsilonPolicy::new(eps)?);
    let (eps_opt, _) = enumerate_optimum(&e, e.root(), MAX_TREE_NODES)?;
    let d = delta_wrap(tree, DeltaPolicy::new(delta)?);
    let (delta_opt, _) = enumerate_optimum(&d, d.root(), MAX_TREE_NODES)?;
    c.check(eps_opt.is_some_and(|v| v <= opt), "epsilon_ordering", || {
        format!("opt(T_eps={eps}) = {eps_opt:?} > opt(T) = {opt}")
    });
    c.check(delta_opt.is_some_and(|v| v >= opt), "delta_ordering", || {
        format!("opt(T_delta={delta}) = {delta_opt:?} < opt(T) = {opt}")
    });
    Ok(())
}

/// Every edge cost in a small tree, sorted.
pub fn all_increments(tree: &TreeProblem) -> Result<Vec<Cost>> {
    let mut out = Vec::new();
    let mut stack = vec![tree.root()];
    let mut children = Vec::new();
    while let Some(s) = stack.pop() {
        children.clear();
        tree.expand(&s, &mut children);
        for ch in children.drain(..) {
            out.push(ch.increment);
            stack.push(ch.state);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

pub fn verify(spec: &VerifySpec) -> Result<VerifyReport> {
    if spec.suites.is_empty() || spec.suites.iter().all(|s| s.1 == 0) {
        return Err(BenchError::Argument("verification suite is empty".into()));
    }
    let mut report = VerifyReport::default();
    for &(suite, count) in &spec.suites {
        for i in 0..count {
            let mut c = Checker {
                report: &mut report,
                suite,
                instance: i,
            };
            match suite {
                Suite::Trees => {
                    let tree = small_tree(spec.seed, i)?;
                    verify_tree(&mut c, &tree, instance_seed(spec.seed ^ 7, i))?;
                }
                Suite::Atsp => {
                    let p = small_atsp(spec.seed, i)?;
                    let inst = p.instance();
                    let opt = atsp::brute_force_tour(inst, &[], &[])?.map(|t| t.cost as Cost);
                    let domain = DomainParams::Atsp {
                        cities: inst.n(),
                        structure: AtspStructure::UniformRange(0),
                    };
                    c.algorithms(&p, domain, opt)?;
                    let (n, bad) = admissibility_violations(&p, |s| {
                        Ok(atsp::brute_force_tour(inst, &s.included, &s.excluded)?
                            .map(|t| t.cost as Cost))
                    })?;
                    c.admissibility(n, bad);
                }
                Suite::Stsp => {
                    let p = small_stsp(spec.seed, i)?;
                    let inst = p.instance();
                    let opt = stsp::brute_force_tour(inst, &Default::default())?.map(|v| v as Cost);
                    let domain = DomainParams::Stsp {
                        cities: inst.n(),
                        max_cost: 0,
                    };
                    c.algorithms(&p, domain, opt)?;
                    let (n, bad) = admissibility_violations(&p, |s| {
                        Ok(stsp::brute_force_tour(inst, &s.constraints)?.map(|v| v as Cost))
                    })?;
                    c.admissibility(n, bad);
                }
                Suite::MaxSat => {
                    let p = small_maxsat(spec.seed, i)?;
                    let cnf = p.instance();
                    let table = unsat_table(cnf);
                    let opt = table.iter().min().map(|&v| v as Cost);
                    let domain = DomainParams::MaxSat {
                        vars: cnf.num_vars(),
                        clauses: cnf.clauses().len(),
                    };
                    c.algorithms(&p, domain, opt)?;
                    let (n, bad) = admissibility_violations(&p, |s| {
                        Ok(Some(best_completion(&table, &s.assignment) as Cost))
                    })?;
                    c.admissibility(n, bad);
                }
            }
        }
        report.instances.push((suite, count));
    }
    Ok(report)
}
