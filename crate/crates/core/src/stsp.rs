//! Symmetric TSP with the Held-Karp 1-tree bound.
//!
//! A 1-tree is a minimum spanning tree on cities `1..n` plus the two cheapest
//! edges joining city 0 to it. Every tour is a 1-tree, so the cheapest 1-tree
//! under node penalties `pi` (edge cost `c(i, j) + pi_i + pi_j`, minus
//! `2 * sum(pi)`) bounds the tour cost from below. Subgradient steps move
//! `pi` towards degree 2 everywhere; when every degree is 2 the 1-tree is an
//! optimal tour for the node's constraints.
//!
//! Penalties are integers, so bounds are exact in integer arithmetic.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::search::{Child, Cost, SearchProblem};

/// Undirected edge with the smaller endpoint first.
pub type Edge = (u32, u32);

pub fn edge(a: usize, b: usize) -> Edge {
    if a < b {
        (a as u32, b as u32)
    } else {
        (b as u32, a as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StspInstance {
    n: usize,
    cost: Vec<i64>,
}

impl StspInstance {
    pub fn new(n: usize, mut cost: Vec<i64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!("STSP needs at least 3 cities, got {n}")));
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
            for j in i + 1..n {
                if cost[i * n + j] != cost[j * n + i] {
                    return Err(Error::Config(format!("cost({i}, {j}) != cost({j}, {i})")));
                }
                if cost[i * n + j] < 0 {
                    return Err(Error::Config(format!("negative edge cost at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, cost })
    }

    /// Builds an instance from the strict upper triangle, row by row.
    pub fn from_upper_triangle(n: usize, upper: &[i64]) -> Result<Self> {
        if n < 3 || upper.len() != n * (n - 1) / 2 {
            return Err(Error::Config(format!(
                "expected {} upper-triangular entries for {n} cities, got {}",
                n.saturating_mul(n.saturating_sub(1)) / 2,
                upper.len()
            )));
        }
        let mut cost = vec![0i64; n * n];
        let mut it = upper.iter();
        for i in 0..n {
            for j in i + 1..n {
                let c = *it.next().unwrap();
                cost[i * n + j] = c;
                cost[j * n + i] = c;
            }
        }
        Self::new(n, cost)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cost(&self, a: usize, b: usize) -> i64 {
        self.cost[a * self.n + b]
    }

    pub fn tour_cost(&self, order: &[usize]) -> i64 {
        (0..order.len())
            .map(|k| self.cost(order[k], order[(k + 1) % order.len()]))
            .sum()
    }

    /// Nearest-neighbour tour from city 0.
    pub fn greedy_tour(&self) -> Vec<usize> {
        let mut used = vec![false; self.n];
        let mut order = vec![0usize];
        used[0] = true;
        for _ in 1..self.n {
            let last = *order.last().unwrap();
            let next = (0..self.n)
                .filter(|&j| !used[j])
                .min_by_key(|&j| (self.cost(last, j), j))
                .unwrap();
            used[next] = true;
            order.push(next);
        }
        order
    }
}

/// Costs uniform over `0..=hi`.
pub fn generate_stsp(n: usize, hi: u64, seed: u64) -> Result<StspInstance> {
    if n < 3 {
        return Err(Error::Config(format!("STSP needs at least 3 cities, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper: Vec<i64> = (0..n * (n - 1) / 2)
        .map(|_| rng.random_range(0..=hi) as i64)
        .collect();
    StspInstance::from_upper_triangle(n, &upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EdgeStatus {
    Free,
    Required,
    Forbidden,
}

/// Required and forbidden edges of a subproblem.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Constraints {
    pub required: Vec<Edge>,
    pub forbidden: Vec<Edge>,
}

impl Constraints {
    fn status_matrix(&self, n: usize) -> Vec<EdgeStatus> {
        let mut m = vec![EdgeStatus::Free; n * n];
        for &(a, b) in &self.forbidden {
            m[a as usize * n + b as usize] = EdgeStatus::Forbidden;
            m[b as usize * n + a as usize] = EdgeStatus::Forbidden;
        }
        for &(a, b) in &self.required {
            m[a as usize * n + b as usize] = EdgeStatus::Required;
            m[b as usize * n + a as usize] = EdgeStatus::Required;
        }
        m
    }

    /// Closes the constraint set: a city with two required edges loses all
    /// its other edges. Returns `None` if the set admits no tour, because an
    /// edge is both required and forbidden, a city has three required edges
    /// or fewer than two usable ones, or required edges close a short cycle.
    pub fn propagate(mut self, n: usize) -> Option<Self> {
        if self.required.iter().any(|e| self.forbidden.contains(e)) {
            return None;
        }
        let mut required_degree = vec![0u32; n];
        let mut parent: Vec<usize> = (0..n).collect();
        let mut size = vec![1usize; n];
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &self.required {
            let (a, b) = (a as usize, b as usize);
            required_degree[a] += 1;
            required_degree[b] += 1;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                if size[ra] < n || self.required.len() != n {
                    return None;
                }
            } else {
                parent[ra] = rb;
                size[rb] += size[ra];
            }
        }
        if required_degree.iter().any(|&d| d > 2) {
            return None;
        }
        let mut status = self.status_matrix(n);
        for v in 0..n {
            if required_degree[v] == 2 {
                for w in 0..n {
                    if w != v && status[v * n + w] == EdgeStatus::Free {
                        status[v * n + w] = EdgeStatus::Forbidden;
                        status[w * n + v] = EdgeStatus::Forbidden;
                        self.forbidden.push(edge(v, w));
                    }
                }
            }
        }
        for v in 0..n {
            let usable = (0..n)
                .filter(|&w| w != v && status[v * n + w] != EdgeStatus::Forbidden)
                .count();
            if usable < 2 {
                return None;
            }
        }
        Some(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneTree {
    pub edges: Vec<Edge>,
    pub special_city: usize,
    pub degrees: Vec<u32>,
    /// Penalized tree cost minus `2 * sum(pi)`.
    pub value: i64,
}

impl OneTree {
    pub fn is_tour(&self) -> bool {
        self.degrees.iter().all(|&d| d == 2)
    }

    /// City order of the tour, if the 1-tree is one.
    pub fn tour(&self) -> Option<Vec<usize>> {
        if !self.is_tour() {
            return None;
        }
        let n = self.degrees.len();
        let mut adj = vec![Vec::with_capacity(2); n];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b as usize);
            adj[b as usize].push(a as usize);
        }
        let mut order = vec![0usize];
        let mut prev = usize::MAX;
        let mut cur = 0usize;
        while order.len() < n {
            let next = if adj[cur][0] != prev { adj[cur][0] } else { adj[cur][1] };
            order.push(next);
            prev = cur;
            cur = next;
        }
        Some(order)
    }
}

/// Minimum 1-tree under penalties `pi` honoring `constraints`, with city 0 as
/// the special city. `None` when the constraints disconnect the graph.
pub fn one_tree(instance: &StspInstance, constraints: &Constraints, pi: &[i64]) -> Option<OneTree> {
    let n = instance.n;
    let status = constraints.status_matrix(n);
    let adjusted = |a: usize, b: usize| instance.cost(a, b) + pi[a] + pi[b];
    // Required edges rank below every free edge.
    const FORCE: i64 = 1 << 60;
    let key = |a: usize, b: usize| match status[a * n + b] {
        EdgeStatus::Required => Some(adjusted(a, b) - FORCE),
        EdgeStatus::Free => Some(adjusted(a, b)),
        EdgeStatus::Forbidden => None,
    };

    // Prim on cities 1..n.
    let mut in_tree = vec![false; n];
    let mut best = vec![i64::MAX; n];
    let mut link = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n);
    let mut degrees = vec![0u32; n];
    let mut value = 0i64;
    in_tree[1] = true;
    for w in 2..n {
        if let Some(k) = key(1, w) {
            best[w] = k;
            link[w] = 1;
        }
    }
    for _ in 2..n {
        let v = (2..n)
            .filter(|&w| !in_tree[w] && link[w] != usize::MAX)
            .min_by_key(|&w| (best[w], w))?;
        in_tree[v] = true;
        let u = link[v];
        edges.push(edge(u, v));
        degrees[u] += 1;
        degrees[v] += 1;
        value += adjusted(u, v);
        for w in 2..n {
            if !in_tree[w] {
                if let Some(k) = key(v, w) {
                    if k < best[w] {
                        best[w] = k;
                        link[w] = v;
                    }
                }
            }
        }
    }
    let required_inner = constraints
        .required
        .iter()
        .filter(|&&(a, _)| a != 0)
        .all(|e| edges.contains(e));
    if !required_inner {
        return None;
    }

    // Two edges at the special city: required ones first, then the cheapest.
    let mut special: Vec<usize> = (1..n)
        .filter(|&w| status[w] == EdgeStatus::Required)
        .collect();
    if special.len() > 2 {
        return None;
    }
    let mut candidates: Vec<usize> = (1..n).filter(|&w| status[w] == EdgeStatus::Free).collect();
    candidates.sort_by_key(|&w| (adjusted(0, w), w));
    special.extend(candidates.into_iter().take(2 - special.len()));
    if special.len() < 2 {
        return None;
    }
    for w in special {
        edges.push(edge(0, w));
        degrees[0] += 1;
        degrees[w] += 1;
        value += adjusted(0, w);
    }
    value -= 2 * pi.iter().sum::<i64>();
    Some(OneTree {
        edges,
        special_city: 0,
        degrees,
        value,
    })
}

/// Outcome of subgradient ascent at one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeldKarp {
    pub bound: i64,
    /// 1-tree attaining `bound`.
    pub tree: OneTree,
    /// Penalties attaining `bound`.
    pub pi: Vec<i64>,
}

/// Subgradient ascent on the 1-tree bound for at most `max_steps` steps,
/// starting from `pi`. Step `k` (0-based) moves `pi_i` by
/// `t_k * (degree_i - 2)` with `t_k = max(1, t0 * (M - k) / M)` and
/// `t0 = max(1, (upper_estimate - first value) / n)`. Stops early on a tour
/// and returns the best bound seen.
pub fn held_karp_bound(
    instance: &StspInstance,
    constraints: &Constraints,
    pi: &[i64],
    max_steps: usize,
    upper_estimate: i64,
) -> Option<HeldKarp> {
    let n = instance.n as i64;
    let steps = max_steps.max(1) as i64;
    let mut pi = pi.to_vec();
    let mut best: Option<HeldKarp> = None;
    let mut t0 = 1i64;
    for k in 0..steps {
        let tree = one_tree(instance, constraints, &pi)?;
        if k == 0 {
            t0 = ((upper_estimate - tree.value) / n).max(1);
        }
        let is_tour = tree.is_tour();
        let degrees = tree.degrees.clone();
        if best.as_ref().is_none_or(|b| tree.value > b.bound) {
            best = Some(HeldKarp {
                bound: tree.value,
                tree,
                pi: pi.clone(),
            });
        }
        if is_tour {
            break;
        }
        let t = (t0 * (steps - k) / steps).max(1);
        for (p, &d) in pi.iter_mut().zip(&degrees) {
            *p += t * (d as i64 - 2);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StspNode {
    pub constraints: Constraints,
    pub pi: Vec<i64>,
    /// Held-Karp bound, never below the parent's.
    pub bound: i64,
    pub tree: OneTree,
}

impl StspNode {
    pub fn is_tour(&self) -> bool {
        self.tree.is_tour()
    }
}

/// Splits a node on the city `v` of largest 1-tree degree (ties: lowest
/// index). With `e1`, `e2` the two cheapest 1-tree edges at `v` that are not
/// yet required: (A) forbid `e1`; (B) require `e1`, forbid `e2`; (C) require
/// both. Constraint sets admitting no tour are dropped.
pub fn vj_branches(n: usize, constraints: &Constraints, tree: &OneTree, instance: &StspInstance) -> Result<Vec<Constraints>> {
    if tree.is_tour() {
        return Err(Error::Contract("1-tree is already a tour".into()));
    }
    let v = (0..n)
        .max_by_key(|&c| (tree.degrees[c], core::cmp::Reverse(c)))
        .unwrap();
    let mut free: Vec<Edge> = tree
        .edges
        .iter()
        .copied()
        .filter(|&(a, b)| (a as usize == v || b as usize == v) && !constraints.required.contains(&(a, b)))
        .collect();
    free.sort_by_key(|&(a, b)| (instance.cost(a as usize, b as usize), a + b));
    let Some(&e1) = free.first() else {
        return Err(Error::Contract(format!("city {v} has no free 1-tree edge")));
    };
    let e2 = free.get(1).copied();

    let mut branches = Vec::with_capacity(3);
    let mut a = constraints.clone();
    a.forbidden.push(e1);
    branches.push(a);
    let mut b = constraints.clone();
    b.required.push(e1);
    if let Some(e2) = e2 {
        b.forbidden.push(e2);
        let mut c = constraints.clone();
        c.required.push(e1);
        c.required.push(e2);
        branches.push(b);
        branches.push(c);
    } else {
        branches.push(b);
    }
    Ok(branches.into_iter().filter_map(|c| c.propagate(n)).collect())
}

/// STSP as a [`SearchProblem`] with the Held-Karp bound as node cost.
#[derive(Debug, Clone)]
pub struct StspProblem {
    instance: StspInstance,
    max_steps: usize,
    upper_estimate: i64,
}

impl StspProblem {
    /// Uses `n / 2` subgradient steps per node.
    pub fn new(instance: StspInstance) -> Self {
        let steps = instance.n / 2;
        Self::with_steps(instance, steps)
    }

    pub fn with_steps(instance: StspInstance, max_steps: usize) -> Self {
        let upper_estimate = instance.tour_cost(&instance.greedy_tour());
        Self {
            instance,
            max_steps: max_steps.max(1),
            upper_estimate,
        }
    }

    pub fn instance(&self) -> &StspInstance {
        &self.instance
    }

    fn bounded(&self, constraints: Constraints, pi: &[i64], floor: i64) -> Option<StspNode> {
        let hk = held_karp_bound(&self.instance, &constraints, pi, self.max_steps, self.upper_estimate)?;
        Some(StspNode {
            constraints,
            bound: hk.bound.max(floor),
            pi: hk.pi,
            tree: hk.tree,
        })
    }

    /// Children of a non-tour node with their bounds, warm-started from the
    /// parent's penalties.
    pub fn vj_children(&self, parent: &StspNode) -> Result<Vec<StspNode>> {
        let branches = vj_branches(self.instance.n, &parent.constraints, &parent.tree, &self.instance)?;
        Ok(branches
            .into_iter()
            .filter_map(|c| self.bounded(c, &parent.pi, parent.bound))
            .collect())
    }
}

impl SearchProblem for StspProblem {
    type State = StspNode;

    fn root(&self) -> StspNode {
        self.bounded(Constraints::default(), &vec![0; self.instance.n], i64::MIN)
            .expect("complete graph has a 1-tree")
    }

    fn expand(&self, state: &StspNode, out: &mut Vec<Child<StspNode>>) {
        if state.is_tour() {
            return;
        }
        for child in self.vj_children(state).unwrap_or_default() {
            let g = (child.bound - state.bound) as Cost;
            out.push(Child::new(child, g));
        }
    }

    fn is_goal(&self, state: &StspNode) -> bool {
        state.is_tour()
    }

    fn cost(&self, state: &StspNode) -> Cost {
        state.bound as Cost
    }
}

pub const BRUTE_FORCE_MAX_CITIES: usize = 10;

/// Cheapest tour cost honoring `constraints`, by enumeration.
pub fn brute_force_tour(instance: &StspInstance, constraints: &Constraints) -> Result<Option<i64>> {
    let n = instance.n;
    if n > BRUTE_FORCE_MAX_CITIES {
        return Err(Error::TooLarge(format!("{n} cities")));
    }
    let status = constraints.status_matrix(n);
    fn go(
        inst: &StspInstance,
        status: &[EdgeStatus],
        required: &[Edge],
        order: &mut Vec<usize>,
        used: &mut [bool],
        cost: i64,
        best: &mut Option<i64>,
    ) {
        let n = inst.n;
        let last = *order.last().unwrap();
        if order.len() == n {
            if status[last * n] == EdgeStatus::Forbidden {
                return;
            }
            let in_tour = |&(a, b): &Edge| {
                (0..n).any(|k| edge(order[k], order[(k + 1) % n]) == (a, b))
            };
            if required.iter().all(in_tour) {
                let total = cost + inst.cost(last, 0);
                if best.is_none_or(|b| total < b) {
                    *best = Some(total);
                }
            }
            return;
        }
        for next in 1..n {
            if !used[next] && status[last * n + next] != EdgeStatus::Forbidden {
                used[next] = true;
                order.push(next);
                go(inst, status, required, order, used, cost + inst.cost(last, next), best);
                order.pop();
                used[next] = false;
            }
        }
    }
    let mut best = None;
    let mut used = vec![false; n];
    used[0] = true;
    go(instance, &status, &constraints.required, &mut vec![0], &mut used, 0, &mut best);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{dfbnb, Limits};

    fn unit(n: usize) -> StspInstance {
        let cost = (0..n * n).map(|k| if k / n == k % n { 0 } else { 1 }).collect();
        StspInstance::new(n, cost).unwrap()
    }

    /// Ring edges cost 1, chords 100.
    fn ring(n: usize) -> StspInstance {
        let cost = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let d = i.abs_diff(j);
                if i == j {
                    0
                } else if d == 1 || d == n - 1 {
                    1
                } else {
                    100
                }
            })
            .collect();
        StspInstance::new(n, cost).unwrap()
    }

    #[test]
    fn unit_costs_give_n() {
        let t = one_tree(&unit(4), &Constraints::default(), &[0; 4]).unwrap();
        assert_eq!(t.value, 4);
        assert_eq!(t.edges.len(), 4);
        assert_eq!(t.degrees.iter().sum::<u32>(), 8);
    }

    #[test]
    fn ring_is_found_immediately() {
        let inst = ring(7);
        let hk = held_karp_bound(&inst, &Constraints::default(), &[0; 7], 3, 100).unwrap();
        assert!(hk.tree.is_tour());
        assert_eq!(hk.bound, 7);
        let tour = hk.tree.tour().unwrap();
        assert_eq!(inst.tour_cost(&tour), 7);
        let p = StspProblem::new(inst);
        assert!(p.is_goal(&p.root()));
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        assert!(StspInstance::new(3, vec![0, 1, 2, 5, 0, 3, 2, 3, 0]).is_err());
        assert!(StspInstance::from_upper_triangle(4, &[1, 2, 3]).is_err());
    }

    #[test]
    fn bounds_are_admissible_and_improve() {
        for seed in 0..40 {
            let n = 5 + (seed as usize % 4);
            let inst = generate_stsp(n, 1000, seed).unwrap();
            let opt = brute_force_tour(&inst, &Constraints::default()).unwrap().unwrap();
            let first = one_tree(&inst, &Constraints::default(), &vec![0; n]).unwrap();
            let hk = held_karp_bound(&inst, &Constraints::default(), &vec![0; n], n / 2, opt + 50).unwrap();
            assert!(first.value <= opt);
            assert!(hk.bound <= opt, "seed {seed}");
            assert!(hk.bound >= first.value);
            // any penalties give a valid bound
            let pi: Vec<i64> = (0..n as i64).map(|i| (i * 37 + seed as i64) % 23 - 11).collect();
            assert!(one_tree(&inst, &Constraints::default(), &pi).unwrap().value <= opt);
        }
    }

    #[test]
    fn branching_counts() {
        let inst = generate_stsp(6, 100, 2).unwrap();
        // star around city 3: every 1-tree edge touches 3 except those at 0
        let tree = OneTree {
            edges: vec![(1, 3), (2, 3), (3, 4), (3, 5), (0, 1), (0, 2)],
            special_city: 0,
            degrees: vec![2, 2, 2, 4, 1, 1],
            value: 0,
        };
        let free = Constraints::default();
        assert_eq!(vj_branches(6, &free, &tree, &inst).unwrap().len(), 3);
        let one_required = Constraints {
            required: vec![(1, 3)],
            forbidden: vec![],
        };
        let kids = vj_branches(6, &one_required, &tree, &inst).unwrap();
        assert_eq!(kids.len(), 2);
        // requiring a second edge at 3 saturates it
        assert!(kids[1].forbidden.len() >= 3);
    }

    #[test]
    fn branching_covers_parent_tours_once() {
        use crate::atsp::all_tours;
        for seed in 0..15 {
            let inst = generate_stsp(6, 50, seed).unwrap();
            let p = StspProblem::with_steps(inst.clone(), 1);
            let root = p.root();
            if root.is_tour() {
                continue;
            }
            let kids = vj_branches(6, &root.constraints, &root.tree, &inst).unwrap();
            for succ in all_tours(6) {
                let edges: Vec<Edge> = (0..6).map(|i| edge(i, succ[i] as usize)).collect();
                let fits = |c: &Constraints| {
                    c.required.iter().all(|e| edges.contains(e)) && c.forbidden.iter().all(|e| !edges.contains(e))
                };
                assert_eq!(kids.iter().filter(|c| fits(c)).count(), 1, "seed {seed}");
            }
        }
    }

    #[test]
    fn dfbnb_matches_brute_force() {
        for seed in 0..30 {
            let n = 5 + (seed as usize % 4);
            let inst = generate_stsp(n, 1000, seed).unwrap();
            let p = StspProblem::new(inst.clone());
            let r = dfbnb(&p, Cost::INFINITY, Limits::unlimited()).unwrap();
            let best = r.best_solution.unwrap();
            let tour = best.tree.tour().unwrap();
            let opt = brute_force_tour(&inst, &Constraints::default()).unwrap().unwrap();
            assert_eq!(inst.tour_cost(&tour), opt);
            assert_eq!(r.best_cost, Some(opt as Cost));
        }
    }

    #[test]
    fn short_required_cycle_is_infeasible() {
        let c = Constraints {
            required: vec![(1, 2), (2, 3), (1, 3)],
            forbidden: vec![],
        };
        assert!(c.propagate(6).is_none());
    }
}
