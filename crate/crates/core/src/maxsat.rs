//! Maximum 3-satisfiability as a minimization over falsified clauses.
//!
//! Variables are assigned one per tree level. A node's cost counts the
//! clauses whose three literals are all false; it never decreases along a
//! path and never exceeds the unsatisfied count of any completion.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::search::{Child, Cost, SearchProblem};

/// DIMACS literal: `v` or `-v` for variable `v >= 1`.
pub type Literal = i32;
pub type Clause = [Literal; 3];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfInstance {
    num_vars: usize,
    clauses: Vec<Clause>,
    /// Clause indices per variable (0-based variable index).
    occurrences: Vec<Vec<u32>>,
}

fn normalize(mut c: Clause) -> Clause {
    c.sort_by_key(|l| (l.unsigned_abs(), *l));
    c
}

impl CnfInstance {
    /// Rejects clauses without three distinct in-range variables and
    /// duplicate clauses (equal as literal sets).
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        if num_vars == 0 || num_vars > i32::MAX as usize {
            return Err(Error::Config(format!("invalid variable count {num_vars}")));
        }
        let mut seen = BTreeSet::new();
        let mut occurrences = vec![Vec::new(); num_vars];
        for (i, &c) in clauses.iter().enumerate() {
            let vars = c.map(|l| l.unsigned_abs() as usize);
            if vars.iter().any(|&v| v == 0 || v > num_vars) {
                return Err(Error::Config(format!("clause {i} has an out-of-range literal")));
            }
            if vars[0] == vars[1] || vars[0] == vars[2] || vars[1] == vars[2] {
                return Err(Error::Config(format!("clause {i} repeats a variable")));
            }
            if !seen.insert(normalize(c)) {
                return Err(Error::Config(format!("clause {i} is a duplicate")));
            }
            for v in vars {
                occurrences[v - 1].push(i as u32);
            }
        }
        Ok(Self {
            num_vars,
            clauses,
            occurrences,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Unsatisfied clauses under a complete assignment.
    pub fn unsatisfied(&self, assignment: &[bool]) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.iter().all(|&l| !literal_true(l, assignment[l.unsigned_abs() as usize - 1])))
            .count()
    }
}

fn literal_true(l: Literal, value: bool) -> bool {
    (l > 0) == value
}

/// Random 3-SAT: each clause takes three distinct variables uniformly and
/// negates each with probability 1/2. Duplicates are redrawn.
pub fn generate_3sat(num_vars: usize, num_clauses: usize, seed: u64) -> Result<CnfInstance> {
    if num_vars < 3 {
        return Err(Error::Argument(format!("3-SAT needs at least 3 variables, got {num_vars}")));
    }
    let n = num_vars as u128;
    let distinct = n * (n - 1) * (n - 2) / 6 * 8;
    if num_clauses as u128 > distinct {
        return Err(Error::Argument(format!(
            "{num_clauses} clauses requested but only {distinct} distinct clauses exist"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut clauses = Vec::with_capacity(num_clauses);
    while clauses.len() < num_clauses {
        let mut vars = [0usize; 3];
        let mut k = 0;
        while k < 3 {
            let v = rng.random_range(1..=num_vars);
            if !vars[..k].contains(&v) {
                vars[k] = v;
                k += 1;
            }
        }
        let clause = vars.map(|v| if rng.random_bool(0.5) { -(v as i32) } else { v as i32 });
        if seen.insert(normalize(clause)) {
            clauses.push(clause);
        }
    }
    CnfInstance::new(num_vars, clauses)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatNode {
    /// Value per variable (0-based), `None` if unassigned.
    pub assignment: Vec<Option<bool>>,
    pub falsified_count: u32,
    pub depth: u32,
    /// Positive and negative occurrences of each unassigned variable in
    /// clauses that are neither satisfied nor falsified.
    active: Vec<(u32, u32)>,
}

impl SatNode {
    /// Node for a partial assignment, with counts computed from scratch.
    pub fn with_assignment(instance: &CnfInstance, assignment: Vec<Option<bool>>) -> Result<Self> {
        if assignment.len() != instance.num_vars {
            return Err(Error::Argument(format!(
                "assignment covers {} variables, instance has {}",
                assignment.len(),
                instance.num_vars
            )));
        }
        let mut active = vec![(0u32, 0u32); instance.num_vars];
        let mut falsified_count = 0;
        for c in &instance.clauses {
            match clause_state(c, &assignment) {
                ClauseState::Falsified => falsified_count += 1,
                ClauseState::Satisfied => {}
                ClauseState::Active => {
                    for &l in c {
                        let v = l.unsigned_abs() as usize - 1;
                        if assignment[v].is_none() {
                            bump(&mut active[v], l);
                        }
                    }
                }
            }
        }
        let depth = assignment.iter().filter(|a| a.is_some()).count() as u32;
        Ok(Self {
            assignment,
            falsified_count,
            depth,
            active,
        })
    }

    /// Active clauses mentioning `var`, split by sign.
    pub fn active_occurrences(&self, var: usize) -> (u32, u32) {
        self.active[var]
    }
}

fn bump(count: &mut (u32, u32), l: Literal) {
    if l > 0 {
        count.0 += 1;
    } else {
        count.1 += 1;
    }
}

fn drop_one(count: &mut (u32, u32), l: Literal) {
    if l > 0 {
        count.0 -= 1;
    } else {
        count.1 -= 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ClauseState {
    Satisfied,
    Falsified,
    Active,
}

fn clause_state(c: &Clause, assignment: &[Option<bool>]) -> ClauseState {
    let mut open = false;
    for &l in c {
        match assignment[l.unsigned_abs() as usize - 1] {
            Some(v) if literal_true(l, v) => return ClauseState::Satisfied,
            Some(_) => {}
            None => open = true,
        }
    }
    if open {
        ClauseState::Active
    } else {
        ClauseState::Falsified
    }
}

fn assign(instance: &CnfInstance, node: &SatNode, var: usize, value: bool) -> (SatNode, u32) {
    let mut child = node.clone();
    child.assignment[var] = Some(value);
    child.active[var] = (0, 0);
    child.depth += 1;
    let mut newly = 0;
    for &ci in &instance.occurrences[var] {
        let c = &instance.clauses[ci as usize];
        let mut satisfied_before = false;
        let mut own = 0;
        for &l in c {
            let v = l.unsigned_abs() as usize - 1;
            if v == var {
                own = l;
            } else if node.assignment[v].is_some_and(|x| literal_true(l, x)) {
                satisfied_before = true;
            }
        }
        if satisfied_before {
            continue;
        }
        let others = c.iter().filter(|l| l.unsigned_abs() as usize - 1 != var);
        if literal_true(own, value) {
            for &l in others {
                let v = l.unsigned_abs() as usize - 1;
                if node.assignment[v].is_none() {
                    drop_one(&mut child.active[v], l);
                }
            }
        } else if others.clone().all(|l| node.assignment[l.unsigned_abs() as usize - 1].is_some()) {
            newly += 1;
        }
    }
    child.falsified_count += newly;
    (child, newly)
}

/// Splits on the unassigned variable with the most occurrences in active
/// clauses (lowest index on ties): the true child, then the false child,
/// each with its count of newly falsified clauses.
pub fn dp_children(instance: &CnfInstance, node: &SatNode) -> Result<[(SatNode, u32); 2]> {
    let var = (0..instance.num_vars)
        .filter(|&v| node.assignment[v].is_none())
        .max_by_key(|&v| (node.active[v].0 + node.active[v].1, core::cmp::Reverse(v)))
        .ok_or_else(|| Error::Contract("assignment is already complete".into()))?;
    Ok([assign(instance, node, var, true), assign(instance, node, var, false)])
}

/// MAX-3-SAT as a [`SearchProblem`].
#[derive(Debug, Clone)]
pub struct SatProblem {
    instance: CnfInstance,
    pure_literals: bool,
}

impl SatProblem {
    pub fn new(instance: CnfInstance) -> Self {
        Self {
            instance,
            pure_literals: false,
        }
    }

    /// When set, a variable whose active occurrences all share one sign (or
    /// that occurs in no active clause) is assigned that sign without
    /// branching. Changes node counts, never the optimum.
    pub fn with_pure_literals(mut self, on: bool) -> Self {
        self.pure_literals = on;
        self
    }

    pub fn instance(&self) -> &CnfInstance {
        &self.instance
    }
}

impl SearchProblem for SatProblem {
    type State = SatNode;

    fn root(&self) -> SatNode {
        SatNode::with_assignment(&self.instance, vec![None; self.instance.num_vars])
            .expect("length matches")
    }

    fn expand(&self, state: &SatNode, out: &mut Vec<Child<SatNode>>) {
        if state.depth as usize == self.instance.num_vars {
            return;
        }
        if self.pure_literals {
            let counts = &state.active;
            let pure = (0..self.instance.num_vars)
                .filter(|&v| state.assignment[v].is_none())
                .find(|&v| counts[v].0 == 0 || counts[v].1 == 0);
            if let Some(v) = pure {
                let (child, g) = assign(&self.instance, state, v, counts[v].1 == 0);
                out.push(Child::new(child, g as Cost));
                return;
            }
        }
        if let Ok(children) = dp_children(&self.instance, state) {
            for (child, g) in children {
                out.push(Child::new(child, g as Cost));
            }
        }
    }

    fn is_goal(&self, state: &SatNode) -> bool {
        state.depth as usize == self.instance.num_vars
    }

    fn cost(&self, state: &SatNode) -> Cost {
        state.falsified_count as Cost
    }
}

pub const BRUTE_FORCE_MAX_VARS: usize = 20;

/// Fewest unsatisfied clauses over all `2^n` assignments.
pub fn max_sat_optimum_bruteforce(instance: &CnfInstance) -> Result<usize> {
    let n = instance.num_vars;
    if n > BRUTE_FORCE_MAX_VARS {
        return Err(Error::TooLarge(format!("{n} variables")));
    }
    // clause as (mask of its variables, bits that falsify each literal)
    let masks: Vec<(u32, u32)> = instance
        .clauses
        .iter()
        .map(|c| {
            c.iter().fold((0u32, 0u32), |(m, f), &l| {
                let bit = 1u32 << (l.unsigned_abs() - 1);
                (m | bit, if l < 0 { f | bit } else { f })
            })
        })
        .collect();
    let mut best = usize::MAX;
    for a in 0u32..(1u32 << n) {
        let unsat = masks.iter().filter(|&&(m, f)| a & m == f).count();
        best = best.min(unsat);
        if best == 0 {
            break;
        }
    }
    Ok(best)
}
