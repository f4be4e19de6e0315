//! Incremental random trees.
//!
//! A tree `T(b, d)` has depth `d`, random branching with mean `b`, and random
//! non-negative edge costs; a node's cost is the sum of edge costs on its
//! path and the goals are the nodes at depth `d`. Trees are generated lazily.
//! The children of a node are drawn from a generator keyed by the tree seed
//! and the node's path, so every search sees the same tree no matter in which
//! order it visits nodes.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::search::{best_first_search, dfbnb, Child, Cost, Limits, SearchProblem};

/// Largest integer edge cost that is exactly representable as a [`Cost`].
pub const MAX_EXACT_COST: u64 = 1 << 53;

#[derive(Debug, Clone, PartialEq)]
pub enum BranchingDistribution {
    /// Every internal node has exactly this many children.
    Fixed(u32),
    /// One plus a Poisson variate, so the mean is `mean` and no internal node
    /// is a deadend.
    Poisson { mean: f64 },
}

impl BranchingDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Fixed(b) => b as f64,
            Self::Poisson { mean } => mean,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Fixed(b) if b < 2 => Err(Error::Config(format!(
                "fixed branching must be at least 2, got {b}"
            ))),
            Self::Poisson { mean } if !(mean > 1.0 && mean.is_finite()) => Err(Error::Config(
                format!("mean branching must be finite and greater than 1, got {mean}"),
            )),
            _ => Ok(()),
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> u32 {
        match *self {
            Self::Fixed(b) => b,
            Self::Poisson { mean } => 1 + poisson(rng, mean - 1.0),
        }
    }
}

// Knuth's multiplication method; the means used here are small.
fn poisson(rng: &mut impl Rng, lambda: f64) -> u32 {
    let limit = libm::exp(-lambda);
    let mut k = 0;
    let mut p: f64 = rng.random();
    while p > limit {
        k += 1;
        p *= rng.random::<f64>();
    }
    k
}

#[derive(Debug, Clone, PartialEq)]
pub enum EdgeCostDistribution {
    /// Integers drawn uniformly from `lo..=hi`.
    UniformInteger { lo: u64, hi: u64 },
    /// Finite distribution over arbitrary non-negative values.
    Discrete {
        values: Vec<f64>,
        probabilities: Vec<f64>,
    },
}

impl EdgeCostDistribution {
    pub fn uniform(lo: u64, hi: u64) -> Self {
        Self::UniformInteger { lo, hi }
    }

    pub fn constant(value: f64) -> Self {
        Self::Discrete {
            values: alloc::vec![value],
            probabilities: alloc::vec![1.0],
        }
    }

    /// Cost 0 with probability `p0`, otherwise uniform over `1..=max`.
    pub fn zero_inflated(p0: f64, max: u32) -> Self {
        let mut values = Vec::with_capacity(max as usize + 1);
        let mut probabilities = Vec::with_capacity(max as usize + 1);
        values.push(0.0);
        probabilities.push(p0);
        let rest = (1.0 - p0) / max as f64;
        for v in 1..=max {
            values.push(v as f64);
            probabilities.push(rest);
        }
        Self::Discrete {
            values,
            probabilities,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::UniformInteger { lo, hi } => {
                if lo > hi {
                    return Err(Error::Config(format!("empty cost range {lo}..={hi}")));
                }
                if *hi > MAX_EXACT_COST {
                    return Err(Error::Config(format!(
                        "cost bound {hi} exceeds exact range 2^53"
                    )));
                }
                Ok(())
            }
            Self::Discrete {
                values,
                probabilities,
            } => {
                if values.is_empty() || values.len() != probabilities.len() {
                    return Err(Error::Config(
                        "discrete costs need equally many values and probabilities".into(),
                    ));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::Config("edge costs must be finite and >= 0".into()));
                }
                if probabilities.iter().any(|p| !(*p >= 0.0 && *p <= 1.0)) {
                    return Err(Error::Config("probabilities must lie in [0, 1]".into()));
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "probabilities sum to {total}, not 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Probability mass at cost 0.
    pub fn p0(&self) -> f64 {
        match self {
            Self::UniformInteger { lo, hi } => {
                if *lo == 0 {
                    1.0 / (hi - lo + 1) as f64
                } else {
                    0.0
                }
            }
            Self::Discrete {
                values,
                probabilities,
            } => values
                .iter()
                .zip(probabilities)
                .filter(|(v, _)| **v == 0.0)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::UniformInteger { lo, hi } => (*lo as f64 + *hi as f64) / 2.0,
            Self::Discrete {
                values,
                probabilities,
            } => values.iter().zip(probabilities).map(|(v, p)| v * p).sum(),
        }
    }
}

/// Sampler prepared from a validated distribution.
#[derive(Debug, Clone)]
enum CostSampler {
    Uniform { lo: u64, hi: u64 },
    Discrete { values: Vec<f64>, cumulative: Vec<f64> },
}

impl CostSampler {
    fn new(dist: &EdgeCostDistribution) -> Self {
        match dist {
            EdgeCostDistribution::UniformInteger { lo, hi } => Self::Uniform { lo: *lo, hi: *hi },
            EdgeCostDistribution::Discrete {
                values,
                probabilities,
            } => {
                let mut acc = 0.0;
                let cumulative = probabilities
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                Self::Discrete {
                    values: values.clone(),
                    cumulative,
                }
            }
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Cost {
        match self {
            Self::Uniform { lo, hi } => rng.random_range(*lo..=*hi) as Cost,
            Self::Discrete { values, cumulative } => {
                if values.len() == 1 {
                    return values[0];
                }
                let u: f64 = rng.random();
                let i = cumulative.partition_point(|&c| c <= u);
                values[i.min(values.len() - 1)]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeSpec {
    pub depth: u32,
    pub branching: BranchingDistribution,
    pub edge_cost: EdgeCostDistribution,
    pub seed: u64,
}

impl TreeSpec {
    pub fn new(
        depth: u32,
        branching: BranchingDistribution,
        edge_cost: EdgeCostDistribution,
        seed: u64,
    ) -> Self {
        Self {
            depth,
            branching,
            edge_cost,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::Config("tree depth must be at least 1".into()));
        }
        self.branching.validate()?;
        self.edge_cost.validate()
    }
}

/// A lazily generated tree node.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNodeHandle {
    /// Child indices from the root.
    pub path: Vec<u32>,
    pub node_cost: Cost,
    pub depth: u32,
    key: u64,
}

/// An incremental random tree as a [`SearchProblem`].
#[derive(Debug, Clone)]
pub struct TreeProblem {
    spec: TreeSpec,
    sampler: CostSampler,
}

pub fn make_tree(spec: TreeSpec) -> Result<TreeProblem> {
    spec.validate()?;
    let sampler = CostSampler::new(&spec.edge_cost);
    Ok(TreeProblem { spec, sampler })
}

// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn child_key(parent: u64, index: u32) -> u64 {
    mix(parent ^ mix(index as u64 ^ 0x5851_f42d_4c95_7f2d))
}

impl TreeProblem {
    pub fn spec(&self) -> &TreeSpec {
        &self.spec
    }

    /// Child count and edge costs of a node, in child-index order.
    pub fn edges(&self, node: &TreeNodeHandle) -> Vec<Cost> {
        if node.depth >= self.spec.depth {
            return Vec::new();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(node.key);
        let count = self.spec.branching.sample(&mut rng);
        (0..count).map(|_| self.sampler.sample(&mut rng)).collect()
    }

    /// Node reached by following `path` from the root, if it exists.
    pub fn node_at(&self, path: &[u32]) -> Option<TreeNodeHandle> {
        let mut node = self.root();
        for &i in path {
            let costs = self.edges(&node);
            let w = *costs.get(i as usize)?;
            node = self.child(&node, i, w);
        }
        Some(node)
    }

    fn child(&self, parent: &TreeNodeHandle, index: u32, edge: Cost) -> TreeNodeHandle {
        let mut path = Vec::with_capacity(parent.path.len() + 1);
        path.extend_from_slice(&parent.path);
        path.push(index);
        TreeNodeHandle {
            path,
            node_cost: parent.node_cost + edge,
            depth: parent.depth + 1,
            key: child_key(parent.key, index),
        }
    }
}

impl SearchProblem for TreeProblem {
    type State = TreeNodeHandle;

    fn root(&self) -> TreeNodeHandle {
        TreeNodeHandle {
            path: Vec::new(),
            node_cost: 0.0,
            depth: 0,
            key: mix(self.spec.seed),
        }
    }

    fn expand(&self, state: &TreeNodeHandle, out: &mut Vec<Child<TreeNodeHandle>>) {
        for (i, w) in self.edges(state).into_iter().enumerate() {
            out.push(Child::new(self.child(state, i as u32, w), w));
        }
    }

    fn is_goal(&self, state: &TreeNodeHandle) -> bool {
        state.depth == self.spec.depth
    }

    fn cost(&self, state: &TreeNodeHandle) -> Cost {
        state.node_cost
    }
}

/// Expected number of same-cost children per node, `b * p0`.
pub fn expected_same_cost_children(spec: &TreeSpec) -> f64 {
    spec.branching.mean() * spec.edge_cost.p0()
}

/// Mean search effort for one `(p0, d)` combination.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCell {
    pub p0: f64,
    pub depth: u32,
    pub trials: u32,
    pub mean_bfs_nodes: f64,
    pub mean_dfbnb_nodes: f64,
    /// Runs that hit the node budget. Their capped counts are still included
    /// in the means.
    pub truncated_runs: u32,
}

impl GrowthCell {
    pub fn is_truncated(&self) -> bool {
        self.truncated_runs > 0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GrowthTable {
    pub branching: u32,
    pub cells: Vec<GrowthCell>,
}

/// Largest cost in the nonzero part of the sweep's edge-cost distribution.
pub const SWEEP_MAX_COST: u32 = 100;

/// Tree used by the sweep for one trial of one cell.
pub fn sweep_tree_spec(b: u32, p0: f64, depth: u32, trial: u32, seed: u64) -> TreeSpec {
    let key = mix(seed ^ mix(p0.to_bits()) ^ mix((depth as u64) << 32 | trial as u64));
    TreeSpec::new(
        depth,
        BranchingDistribution::Fixed(b),
        EdgeCostDistribution::zero_inflated(p0, SWEEP_MAX_COST),
        key,
    )
}

/// Runs BFS and DFBnB on `trials` fixed-branching trees with zero-cost
/// probability `p0` and depth `depth`.
pub fn sweep_cell(
    b: u32,
    p0: f64,
    depth: u32,
    trials: u32,
    seed: u64,
    node_budget: Option<u64>,
) -> Result<GrowthCell> {
    if trials == 0 {
        return Err(Error::Argument("sweep needs at least one trial".into()));
    }
    let limits = Limits {
        node_budget,
        ..Limits::default()
    };
    let (mut bfs_total, mut dfbnb_total, mut truncated_runs) = (0u64, 0u64, 0u32);
    for trial in 0..trials {
        let tree = make_tree(sweep_tree_spec(b, p0, depth, trial, seed))?;
        let bfs = best_first_search(&tree, limits)?;
        let dfs = dfbnb(&tree, Cost::INFINITY, limits)?;
        bfs_total += bfs.nodes_generated;
        dfbnb_total += dfs.nodes_generated;
        if bfs.truncated || dfs.truncated {
            truncated_runs += 1;
        }
    }
    Ok(GrowthCell {
        p0,
        depth,
        trials,
        mean_bfs_nodes: bfs_total as f64 / trials as f64,
        mean_dfbnb_nodes: dfbnb_total as f64 / trials as f64,
        truncated_runs,
    })
}

/// Phase-transition grid: one [`GrowthCell`] per `(p0, d)` pair.
pub fn sweep_phase_transition(
    b: u32,
    p0_list: &[f64],
    d_list: &[u32],
    trials: u32,
    seed: u64,
    node_budget: Option<u64>,
) -> Result<GrowthTable> {
    let mut cells = Vec::with_capacity(p0_list.len() * d_list.len());
    for &p0 in p0_list {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::Argument(format!("p0 must lie in [0, 1], got {p0}")));
        }
        for &d in d_list {
            cells.push(sweep_cell(b, p0, d, trials, seed, node_budget)?);
        }
    }
    Ok(GrowthTable {
        branching: b,
        cells,
    })
}
