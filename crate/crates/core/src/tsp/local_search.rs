//! 2-opt / Or-opt descent and the variable neighbourhood search built on it.
//!
//! All moves operate on a depot-anchored route `[0, l1, .., ln]` that is
//! closed implicitly. The depot never leaves position 0.

use rand::Rng;

use super::{nearest_neighbor, route_cost, Tour, TspError, TspInstance};
use crate::seed;

const IMPROVEMENT_EPS: f64 = 1e-12;

/// Largest number of stacked double-bridge kicks per shake.
const MAX_SHAKE: usize = 3;

/// Counter of move evaluations. Every candidate move examined costs one unit.
#[derive(Debug, Clone, Copy)]
struct Budget {
    remaining: u64,
}

impl Budget {
    fn unlimited() -> Self {
        Budget {
            remaining: u64::MAX,
        }
    }

    #[inline]
    fn spend(&mut self) -> bool {
        if self.remaining == 0 {
            false
        } else {
            self.remaining -= 1;
            true
        }
    }

    fn exhausted(&self) -> bool {
        self.remaining == 0
    }
}

/// First-improvement 2-opt until no improving exchange remains. Returns
/// whether the route changed. Stops early when the budget runs out.
fn two_opt(inst: &TspInstance, route: &mut [usize], budget: &mut Budget) -> bool {
    let len = route.len();
    if len < 4 {
        return false;
    }
    let mut changed = false;
    loop {
        let mut improved = false;
        for i in 0..len - 2 {
            for j in i + 2..len {
                if i == 0 && j == len - 1 {
                    continue;
                }
                if !budget.spend() {
                    return changed;
                }
                let (a, b) = (route[i], route[i + 1]);
                let (c, d) = (route[j], route[(j + 1) % len]);
                let delta = inst.cost(a, c) + inst.cost(b, d) - inst.cost(a, b) - inst.cost(c, d);
                if delta < -IMPROVEMENT_EPS {
                    route[i + 1..=j].reverse();
                    improved = true;
                    changed = true;
                }
            }
        }
        if !improved {
            return changed;
        }
    }
}

/// Relocates segments of 1..=3 consecutive restaurants, optionally reversed,
/// to the first improving position. Returns whether the route changed.
fn or_opt(inst: &TspInstance, route: &mut Vec<usize>, budget: &mut Budget) -> bool {
    let len = route.len();
    let mut changed = false;
    'restart: loop {
        for seg_len in 1..=3usize {
            if seg_len + 2 > len {
                break;
            }
            for s in 1..=len - seg_len {
                let e = s + seg_len - 1;
                let prev = route[s - 1];
                let next = route[(e + 1) % len];
                let (first, last) = (route[s], route[e]);
                let removal = inst.cost(prev, first) + inst.cost(last, next) - inst.cost(prev, next);
                for p in 0..len {
                    // edge (route[p], route[p+1]) must not touch the segment
                    if p + 1 >= s && p <= e {
                        continue;
                    }
                    if !budget.spend() {
                        return changed;
                    }
                    let x = route[p];
                    let y = route[(p + 1) % len];
                    let base = inst.cost(x, y);
                    let forward = inst.cost(x, first) + inst.cost(last, y) - base;
                    let backward = inst.cost(x, last) + inst.cost(first, y) - base;
                    let (insert, reverse) = if backward < forward {
                        (backward, true)
                    } else {
                        (forward, false)
                    };
                    if insert - removal < -IMPROVEMENT_EPS {
                        let mut segment: Vec<usize> = route.drain(s..=e).collect();
                        if reverse {
                            segment.reverse();
                        }
                        let at = route.iter().position(|&v| v == x).expect("x stays in route") + 1;
                        route.splice(at..at, segment);
                        changed = true;
                        continue 'restart;
                    }
                }
            }
        }
        return changed;
    }
}

/// Variable neighbourhood descent: 2-opt, then Or-opt, back to 2-opt after
/// any Or-opt improvement.
fn descend(inst: &TspInstance, route: &mut Vec<usize>, budget: &mut Budget) {
    loop {
        two_opt(inst, route, budget);
        if budget.exhausted() || !or_opt(inst, route, budget) {
            return;
        }
    }
}

/// Double-bridge kick: `A B C D -> A C B D` with the depot inside `A`.
fn double_bridge<R: Rng + ?Sized>(route: &mut Vec<usize>, rng: &mut R) {
    let len = route.len();
    debug_assert!(len >= 4);
    let mut cuts = rand::seq::index::sample(rng, len - 1, 3).into_vec();
    cuts.iter_mut().for_each(|c| *c += 1);
    cuts.sort_unstable();
    let (p1, p2, p3) = (cuts[0], cuts[1], cuts[2]);
    let mut next = Vec::with_capacity(len);
    next.extend_from_slice(&route[..p1]);
    next.extend_from_slice(&route[p2..p3]);
    next.extend_from_slice(&route[p1..p2]);
    next.extend_from_slice(&route[p3..]);
    *route = next;
}

/// Applies 2-opt exchanges (depot edges included) until the tour is 2-opt
/// locally optimal.
pub fn improve_2opt(instance: &TspInstance, tour: &Tour) -> Result<Tour, TspError> {
    if tour.len() != instance.restaurant_count() {
        return Err(TspError::SizeMismatch {
            expected: instance.restaurant_count(),
            found: tour.len(),
        });
    }
    let mut route = tour.route();
    two_opt(instance, &mut route, &mut Budget::unlimited());
    Ok(Tour::from_route(&route))
}

/// Bookkeeping returned alongside a metaheuristic tour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaheuristicStats {
    pub construction_cost: f64,
    pub best_cost: f64,
    pub evaluations: u64,
    pub shakes: u64,
}

/// General variable neighbourhood search.
///
/// Starts from the nearest-neighbour tour, descends with 2-opt and Or-opt,
/// and escapes local optima with `k` stacked double-bridge kicks (`k` grows
/// on failure, resets on success). Every move evaluation and every shake
/// consume one unit of `budget`; the search stops when it is spent.
pub fn solve_metaheuristic(
    instance: &TspInstance,
    budget: u64,
    seed: u64,
) -> Result<(Tour, MetaheuristicStats), TspError> {
    if budget == 0 {
        return Err(TspError::ZeroBudget);
    }
    let start = nearest_neighbor(instance);
    let mut route = start.route();
    let construction_cost = route_cost(instance, &route);
    let mut budget_left = Budget { remaining: budget };
    let mut shakes = 0;

    descend(instance, &mut route, &mut budget_left);
    let mut current_cost = route_cost(instance, &route);

    // With at most two restaurants every tour has the same cost.
    if route.len() >= 4 {
        let mut rng = seed::rng_from(seed);
        let mut k = 1;
        while !budget_left.exhausted() {
            let mut candidate = route.clone();
            for _ in 0..k {
                double_bridge(&mut candidate, &mut rng);
            }
            budget_left.spend();
            shakes += 1;
            descend(instance, &mut candidate, &mut budget_left);
            let cost = route_cost(instance, &candidate);
            if cost < current_cost - IMPROVEMENT_EPS {
                route = candidate;
                current_cost = cost;
                k = 1;
            } else {
                k = if k >= MAX_SHAKE { 1 } else { k + 1 };
            }
        }
    }

    let (tour, best_cost) = if current_cost <= construction_cost {
        (Tour::from_route(&route), current_cost)
    } else {
        (start, construction_cost)
    };
    Ok((
        tour,
        MetaheuristicStats {
            construction_cost,
            best_cost,
            evaluations: budget - budget_left.remaining,
            shakes,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{random_tour, solve_exact, tour_cost};
    use super::*;

    fn is_two_opt_optimal(inst: &TspInstance, tour: &Tour) -> bool {
        let route = tour.route();
        let len = route.len();
        for i in 0..len.saturating_sub(2) {
            for j in i + 2..len {
                if i == 0 && j == len - 1 {
                    continue;
                }
                let (a, b, c, d) = (route[i], route[i + 1], route[j], route[(j + 1) % len]);
                if inst.cost(a, c) + inst.cost(b, d) - inst.cost(a, b) - inst.cost(c, d) < -1e-12 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn two_opt_on_four_node_instance() {
        let inst = four_node();
        let optimal = Tour::new(vec![2, 3, 1]).unwrap();
        assert_eq!(improve_2opt(&inst, &optimal).unwrap(), optimal);
        let bad = Tour::new(vec![1, 2, 3]).unwrap();
        let fixed = improve_2opt(&inst, &bad).unwrap();
        assert_eq!(tour_cost(&inst, &fixed).unwrap(), 49.0);
    }

    #[test]
    fn two_opt_is_monotone_and_locally_optimal() {
        for seed in 0..50 {
            let inst = random_blended(10, seed);
            let t = random_tour(10, seed).unwrap();
            let improved = improve_2opt(&inst, &t).unwrap();
            assert!(tour_cost(&inst, &improved).unwrap() <= tour_cost(&inst, &t).unwrap() + 1e-12);
            assert!(is_two_opt_optimal(&inst, &improved));
            assert!(Tour::new(improved.visit_order().to_vec()).is_ok());
        }
    }

    #[test]
    fn or_opt_keeps_depot_and_permutation() {
        for seed in 0..30 {
            let inst = random_euclidean(9, seed);
            let mut route = random_tour(9, seed).unwrap().route();
            let before = route_cost(&inst, &route);
            or_opt(&inst, &mut route, &mut Budget::unlimited());
            assert_eq!(route[0], 0);
            assert!(Tour::new(route[1..].to_vec()).is_ok());
            assert!(route_cost(&inst, &route) <= before + 1e-12);
        }
    }

    #[test]
    fn double_bridge_is_a_permutation() {
        let mut rng = seed::rng_from(3);
        for len in 4..12 {
            let mut route: Vec<usize> = (0..len).collect();
            double_bridge(&mut route, &mut rng);
            assert_eq!(route[0], 0);
            let mut sorted = route.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..len).collect::<Vec<_>>());
        }
    }

    #[test]
    fn metaheuristic_small_cases() {
        let inst = four_node();
        for seed in 0..10 {
            let (t, _) = solve_metaheuristic(&inst, 1000, seed).unwrap();
            assert_eq!(tour_cost(&inst, &t).unwrap(), 49.0);
        }
        let single = TspInstance::from_matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(solve_metaheuristic(&single, 10, 0).unwrap().0.visit_order(), &[1]);
        assert_eq!(solve_metaheuristic(&single, 0, 0), Err(TspError::ZeroBudget));
    }

    #[test]
    fn metaheuristic_respects_budget_and_is_deterministic() {
        let inst = random_blended(30, 9);
        for budget in [1u64, 10, 500, 20_000] {
            let (a, stats) = solve_metaheuristic(&inst, budget, 4).unwrap();
            let (b, _) = solve_metaheuristic(&inst, budget, 4).unwrap();
            assert_eq!(a, b);
            assert!(stats.evaluations <= budget);
            assert!(stats.best_cost <= stats.construction_cost);
            assert!((tour_cost(&inst, &a).unwrap() - stats.best_cost).abs() < 1e-9);
        }
    }

    #[test]
    fn metaheuristic_near_exact() {
        let mut within = 0;
        for seed in 0..100u64 {
            let n = 1 + (seed as usize % 12);
            let inst = random_blended(n, seed + 500);
            let opt = tour_cost(&inst, &solve_exact(&inst).unwrap()).unwrap();
            let (t, _) = solve_metaheuristic(&inst, 100_000, seed).unwrap();
            let got = tour_cost(&inst, &t).unwrap();
            assert!(got >= opt - 1e-9);
            if got <= opt * 1.05 + 1e-12 {
                within += 1;
            }
        }
        assert!(within >= 95, "{within}/100 within 5%");
    }
}
