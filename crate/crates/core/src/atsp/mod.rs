//! Asymmetric TSP.
//!
//! Nodes are constrained assignment problems. The assignment relaxation drops
//! the single-cycle requirement, so its optimum is a set of disjoint subtours
//! and a lower bound on every tour honoring the same constraints. A node whose
//! assignment is one cycle is a goal. Other nodes are split on the subtour
//! with the fewest free arcs.

mod assignment;
mod local_search;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::search::{Child, Cost, SearchProblem};

pub use local_search::local_search_baseline;

pub type Arc = (u32, u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtspInstance {
    n: usize,
    cost: Vec<i64>,
}

impl AtspInstance {
    /// Builds an instance from a row-major `n x n` matrix. Diagonal entries
    /// are ignored.
    pub fn new(n: usize, mut cost: Vec<i64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!("ATSP needs at least 3 cities, got {n}")));
        }
        if cost.len() != n * n {
            return Err(Error::Config(format!(
                "cost matrix has {} entries, expected {}",
                cost.len(),
                n * n
            )));
        }
        for i in 0..n {
            cost[i * n + i] = 0;
        }
        if let Some(bad) = cost.iter().find(|&&c| c < 0) {
            return Err(Error::Config(format!("negative arc cost {bad}")));
        }
        Ok(Self { n, cost })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cost(&self, from: usize, to: usize) -> i64 {
        self.cost[from * self.n + to]
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.cost[i * self.n..(i + 1) * self.n]
    }

    /// Cost used for forbidden arcs: more than any tour can cost.
    pub fn forbidden_cost(&self) -> i64 {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .filter(|&j| j != i)
                    .map(|j| self.cost(i, j))
                    .max()
                    .unwrap_or(0)
            })
            .sum::<i64>()
            + 1
    }

    pub fn tour_cost(&self, order: &[usize]) -> i64 {
        (0..order.len())
            .map(|k| self.cost(order[k], order[(k + 1) % order.len()]))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtspStructure {
    /// Costs uniform over `0..=hi`.
    UniformRange(u64),
    /// `c(i, j)` uniform over `0..=i*j` with 1-based city indices.
    ITimesJ,
}

pub fn generate_atsp(n: usize, structure: AtspStructure, seed: u64) -> Result<AtspInstance> {
    if n < 3 {
        return Err(Error::Config(format!("ATSP needs at least 3 cities, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cost = vec![0i64; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let hi = match structure {
                AtspStructure::UniformRange(hi) => hi,
                AtspStructure::ITimesJ => ((i + 1) * (j + 1)) as u64,
            };
            cost[i * n + j] = rng.random_range(0..=hi) as i64;
        }
    }
    AtspInstance::new(n, cost)
}

/// Optimal solution of a constrained assignment problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub value: i64,
    /// `successor[i]` is the city assigned after `i`.
    pub successor: Vec<u32>,
}

/// Minimum-cost assignment that uses every arc in `included` and none in
/// `excluded`, or `None` when no such assignment exists.
pub fn solve_assignment(
    instance: &AtspInstance,
    included: &[Arc],
    excluded: &[Arc],
) -> Option<Assignment> {
    let n = instance.n;
    let big = instance.forbidden_cost();
    let mut m = instance.cost.clone();
    for i in 0..n {
        m[i * n + i] = big;
    }
    for &(i, j) in excluded {
        m[i as usize * n + j as usize] = big;
    }
    for &(i, j) in included {
        let (i, j) = (i as usize, j as usize);
        for k in 0..n {
            if k != j {
                m[i * n + k] = big;
            }
            if k != i {
                m[k * n + j] = big;
            }
        }
    }
    let assignment = assignment::hungarian(n, &m);
    let mut value = 0;
    for (i, &j) in assignment.iter().enumerate() {
        if m[i * n + j] >= big {
            return None;
        }
        value += instance.cost(i, j);
    }
    Some(Assignment {
        value,
        successor: assignment.into_iter().map(|j| j as u32).collect(),
    })
}

/// Cycles of a successor permutation, each starting at its lowest city, in
/// order of that city.
pub fn subtours(successor: &[u32]) -> Vec<Vec<u32>> {
    let mut seen = vec![false; successor.len()];
    let mut cycles = Vec::new();
    for start in 0..successor.len() {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut city = start;
        while !seen[city] {
            seen[city] = true;
            cycle.push(city as u32);
            city = successor[city] as usize;
        }
        cycles.push(cycle);
    }
    cycles
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tour {
    pub order: Vec<usize>,
    pub cost: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtspNode {
    pub included: Vec<Arc>,
    pub excluded: Vec<Arc>,
    pub ap_value: i64,
    pub ap_solution: Vec<u32>,
}

impl AtspNode {
    pub fn is_tour(&self) -> bool {
        subtours(&self.ap_solution).len() == 1
    }

    pub fn tour(&self) -> Option<Tour> {
        let cycles = subtours(&self.ap_solution);
        (cycles.len() == 1).then(|| Tour {
            order: cycles[0].iter().map(|&c| c as usize).collect(),
            cost: self.ap_value,
        })
    }
}

fn node(instance: &AtspInstance, included: Vec<Arc>, excluded: Vec<Arc>) -> Option<AtspNode> {
    let a = solve_assignment(instance, &included, &excluded)?;
    Some(AtspNode {
        included,
        excluded,
        ap_value: a.value,
        ap_solution: a.successor,
    })
}

/// Splits a node on its subtour with the fewest arcs not yet included (ties:
/// lowest city). With free arcs `a1..at` in cycle order, child `i` excludes
/// `ai` and includes `a1..a(i-1)`. Children whose assignment is infeasible
/// are dropped.
pub fn carpaneto_toth_children(instance: &AtspInstance, parent: &AtspNode) -> Result<Vec<AtspNode>> {
    let cycles = subtours(&parent.ap_solution);
    if cycles.len() < 2 {
        return Err(Error::Contract("node's assignment is already a tour".into()));
    }
    let free_arcs = |cycle: &Vec<u32>| -> Vec<Arc> {
        (0..cycle.len())
            .map(|k| (cycle[k], cycle[(k + 1) % cycle.len()]))
            .filter(|a| !parent.included.contains(a))
            .collect()
    };
    let free = cycles
        .iter()
        .map(free_arcs)
        .min_by_key(|arcs| arcs.len())
        .unwrap_or_default();

    let mut children = Vec::with_capacity(free.len());
    for (i, &arc) in free.iter().enumerate() {
        let mut included = parent.included.clone();
        included.extend_from_slice(&free[..i]);
        let mut excluded = parent.excluded.clone();
        excluded.push(arc);
        if let Some(child) = node(instance, included, excluded) {
            debug_assert!(child.ap_value >= parent.ap_value);
            children.push(child);
        }
    }
    Ok(children)
}

/// ATSP as a [`SearchProblem`] with the assignment bound as node cost.
#[derive(Debug, Clone)]
pub struct AtspProblem {
    instance: AtspInstance,
}

impl AtspProblem {
    pub fn new(instance: AtspInstance) -> Self {
        Self { instance }
    }

    pub fn instance(&self) -> &AtspInstance {
        &self.instance
    }
}

impl SearchProblem for AtspProblem {
    type State = AtspNode;

    fn root(&self) -> AtspNode {
        node(&self.instance, Vec::new(), Vec::new()).expect("unconstrained assignment exists")
    }

    fn expand(&self, state: &AtspNode, out: &mut Vec<Child<AtspNode>>) {
        if state.is_tour() {
            return;
        }
        let children = carpaneto_toth_children(&self.instance, state).unwrap_or_default();
        out.extend(children.into_iter().map(|c| {
            let g = (c.ap_value - state.ap_value) as Cost;
            Child::new(c, g)
        }));
    }

    fn is_goal(&self, state: &AtspNode) -> bool {
        state.is_tour()
    }

    fn cost(&self, state: &AtspNode) -> Cost {
        state.ap_value as Cost
    }
}

/// Largest instance the brute-force oracles accept.
pub const BRUTE_FORCE_MAX_CITIES: usize = 10;

/// Cheapest tour using every arc in `included` and none in `excluded`,
/// by enumerating all `(n-1)!` tours.
pub fn brute_force_tour(
    instance: &AtspInstance,
    included: &[Arc],
    excluded: &[Arc],
) -> Result<Option<Tour>> {
    let n = instance.n;
    if n > BRUTE_FORCE_MAX_CITIES {
        return Err(Error::TooLarge(format!("{n} cities")));
    }
    let mut allowed = vec![true; n * n];
    for &(i, j) in excluded {
        allowed[i as usize * n + j as usize] = false;
    }
    for &(i, j) in included {
        for k in 0..n {
            if k != j as usize {
                allowed[i as usize * n + k] = false;
            }
        }
    }
    let mut best: Option<Tour> = None;
    let mut order = vec![0usize];
    let mut used = vec![false; n];
    used[0] = true;
    enumerate(instance, &allowed, &mut order, &mut used, 0, &mut best);
    Ok(best)
}

fn enumerate(
    instance: &AtspInstance,
    allowed: &[bool],
    order: &mut Vec<usize>,
    used: &mut [bool],
    cost: i64,
    best: &mut Option<Tour>,
) {
    let n = instance.n;
    let last = *order.last().unwrap();
    if order.len() == n {
        if allowed[last * n] {
            let total = cost + instance.cost(last, 0);
            if best.as_ref().is_none_or(|b| total < b.cost) {
                *best = Some(Tour {
                    order: order.clone(),
                    cost: total,
                });
            }
        }
        return;
    }
    for next in 1..n {
        if !used[next] && allowed[last * n + next] {
            used[next] = true;
            order.push(next);
            enumerate(instance, allowed, order, used, cost + instance.cost(last, next), best);
            order.pop();
            used[next] = false;
        }
    }
}

/// Every tour of a small instance, as successor vectors.
pub fn all_tours(n: usize) -> Vec<Vec<u32>> {
    fn go(order: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<u32>>) {
        let n = used.len();
        if order.len() == n {
            let mut succ = vec![0u32; n];
            for k in 0..n {
                succ[order[k]] = order[(k + 1) % n] as u32;
            }
            out.push(succ);
            return;
        }
        for next in 1..n {
            if !used[next] {
                used[next] = true;
                order.push(next);
                go(order, used, out);
                order.pop();
                used[next] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut used = vec![false; n];
    used[0] = true;
    go(&mut vec![0], &mut used, &mut out);
    out
}
