//! Held-Karp dynamic program over restaurant subsets.

use super::{Tour, TspError, TspInstance};

/// Largest instance (depot included) the exact solver accepts.
pub const EXACT_MAX_NODES: usize = 16;

/// Globally optimal tour. Among optimal tours the lexicographically smallest
/// visit order is returned.
pub fn solve_exact(instance: &TspInstance) -> Result<Tour, TspError> {
    let nodes = instance.node_count();
    if nodes > EXACT_MAX_NODES {
        return Err(TspError::TooLarge {
            nodes,
            max: EXACT_MAX_NODES,
        });
    }
    let n = nodes - 1;
    let full = (1usize << n) - 1;
    let bit = |v: usize| 1usize << (v - 1);

    // rest[mask * n + (j-1)]: cheapest way to finish from restaurant j after
    // visiting exactly `mask` (which contains j), returning to the depot.
    let mut rest = vec![f64::INFINITY; (full + 1) * n];
    for j in 1..=n {
        rest[full * n + j - 1] = instance.cost(j, 0);
    }
    for mask in (1..full).rev() {
        for j in 1..=n {
            if mask & bit(j) == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            for k in 1..=n {
                if mask & bit(k) != 0 {
                    continue;
                }
                let c = instance.cost(j, k) + rest[(mask | bit(k)) * n + k - 1];
                if c < best {
                    best = c;
                }
            }
            rest[mask * n + j - 1] = best;
        }
    }

    let optimum = (1..=n)
        .map(|j| instance.cost(0, j) + rest[bit(j) * n + j - 1])
        .fold(f64::INFINITY, f64::min);
    let eps = 1e-9 * optimum.abs().max(1.0);

    // Walk forward taking the smallest feasible next restaurant.
    let mut order = Vec::with_capacity(n);
    let (mut cur, mut mask, mut spent) = (0usize, 0usize, 0.0f64);
    for _ in 0..n {
        let next = (1..=n)
            .filter(|&k| mask & bit(k) == 0)
            .find(|&k| spent + instance.cost(cur, k) + rest[(mask | bit(k)) * n + k - 1] <= optimum + eps)
            .expect("an optimal continuation always exists");
        spent += instance.cost(cur, next);
        mask |= bit(next);
        order.push(next);
        cur = next;
    }
    Ok(Tour { visit_order: order })
}
