//! Restarted local search baseline for the ATSP.
//!
//! Each restart shuffles a random tour and applies first-improvement
//! direction-preserving 3-exchanges until none improves: the segments
//! between three removed arcs are swapped without reversing either one, which
//! keeps every arc's direction and so suits asymmetric costs.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::AtspInstance;
use crate::search::{AnytimeEvent, AnytimeRecord, Limits};

/// Runs restarts until `limits.node_budget` move evaluations have been spent
/// (one evaluation per restart when no budget is given) and returns the
/// incumbents. The event counter is the number of move evaluations.
pub fn local_search_baseline(instance: &AtspInstance, limits: Limits, seed: u64) -> AnytimeRecord {
    let n = instance.n();
    let budget = limits.node_budget.unwrap_or(1);
    let now = || limits.clock.map_or(0.0, |c| c());
    let started = now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut record = AnytimeRecord::new();
    let mut evaluations = 0u64;
    let mut tour: Vec<usize> = (0..n).collect();

    while evaluations < budget {
        tour.shuffle(&mut rng);
        let mut cost = instance.tour_cost(&tour);
        'improve: loop {
            for i in 0..n - 2 {
                for j in i + 1..n - 1 {
                    for k in j + 1..n {
                        if evaluations >= budget {
                            break 'improve;
                        }
                        evaluations += 1;
                        let gain = exchange_gain(instance, &tour, i, j, k);
                        if gain > 0 {
                            apply_exchange(&mut tour, i, j, k);
                            cost -= gain;
                            continue 'improve;
                        }
                    }
                }
            }
            break;
        }
        debug_assert_eq!(cost, instance.tour_cost(&tour));
        record.push(AnytimeEvent {
            nodes_generated: evaluations,
            wall_time: now() - started,
            cost: cost as f64,
        });
    }
    record
}

/// Cost decrease from removing the arcs after positions `i < j < k` and
/// reconnecting `t[i] -> t[j+1]`, `t[k] -> t[i+1]`, `t[j] -> t[k+1]`.
fn exchange_gain(instance: &AtspInstance, t: &[usize], i: usize, j: usize, k: usize) -> i64 {
    let n = t.len();
    let (a, a1) = (t[i], t[i + 1]);
    let (b, b1) = (t[j], t[j + 1]);
    let (c, c1) = (t[k], t[(k + 1) % n]);
    let removed = instance.cost(a, a1) + instance.cost(b, b1) + instance.cost(c, c1);
    let added = instance.cost(a, b1) + instance.cost(c, a1) + instance.cost(b, c1);
    removed - added
}

fn apply_exchange(t: &mut [usize], i: usize, j: usize, k: usize) {
    // t[i+1..=j] and t[j+1..=k] trade places
    t[i + 1..=k].rotate_left(j - i);
}
