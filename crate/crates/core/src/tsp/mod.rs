//! Personalized symmetric TSP instances and their solvers.
//!
//! Node `0` of every instance is the depot (the agent's starting point) and
//! nodes `1..=n` are restaurants. A [`Tour`] lists the restaurants in visit
//! order; the depot is implicitly visited first and last.

mod exact;
pub mod io;
mod local_search;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::spatial::{euclidean_distance, Point};

pub use exact::{solve_exact, EXACT_MAX_NODES};
pub use local_search::{improve_2opt, solve_metaheuristic, MetaheuristicStats};

/// Default weight of the preference term in personalized costs.
pub const DEFAULT_LAMBDA: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TspError {
    #[error("instance has no restaurants")]
    EmptyInstance,
    #[error("lambda {0} is outside [0, 1]")]
    LambdaOutOfRange(f64),
    #[error("cost matrix must be square, row {row} has {len} entries for {size} nodes")]
    NotSquare { row: usize, len: usize, size: usize },
    #[error("cost matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("cost matrix has non-zero diagonal at node {0}")]
    NonZeroDiagonal(usize),
    #[error("cost ({i}, {j}) = {cost} is negative or not finite")]
    InvalidCost { i: usize, j: usize, cost: f64 },
    #[error("edge ({i}, {j}) is missing from the edge list")]
    MissingEdge { i: usize, j: usize },
    #[error("edge ({i}, {j}) references a node outside 0..{node_count}")]
    UnknownNode { i: usize, j: usize, node_count: usize },
    #[error("expected {expected} restaurants, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("not a permutation of 1..={n}: {order:?}")]
    InvalidPermutation { n: usize, order: Vec<usize> },
    #[error("instance with {nodes} nodes is too large for the exact solver (max {max})")]
    TooLarge { nodes: usize, max: usize },
    #[error("budget must be at least one move evaluation")]
    ZeroBudget,
}

fn is_permutation(order: &[usize]) -> bool {
    let n = order.len();
    let mut seen = vec![false; n + 1];
    for &v in order {
        if v == 0 || v > n || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}

/// Personal preference over restaurants `1..=n`, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceRanking {
    order: Vec<usize>,
}

impl PreferenceRanking {
    pub fn new(order: Vec<usize>) -> Result<Self, TspError> {
        if !is_permutation(&order) {
            return Err(TspError::InvalidPermutation {
                n: order.len(),
                order,
            });
        }
        Ok(PreferenceRanking { order })
    }

    /// Restaurants ranked in index order.
    pub fn identity(n: usize) -> Self {
        PreferenceRanking {
            order: (1..=n).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (1..=n).collect();
        order.shuffle(rng);
        PreferenceRanking { order }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// 1-based rank of every restaurant, indexed by restaurant (slot 0 unused).
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.order.len() + 1];
        for (pos, &r) in self.order.iter().enumerate() {
            ranks[r] = pos + 1;
        }
        ranks
    }

    /// Ranking restricted to a subset of restaurants, relabelled so that
    /// `subset[i]` becomes restaurant `i + 1`. Relative order is preserved.
    pub fn restrict(&self, subset: &[usize]) -> Self {
        let ranks = self.ranks();
        let mut local: Vec<usize> = (1..=subset.len()).collect();
        local.sort_by_key(|&i| ranks[subset[i - 1]]);
        PreferenceRanking { order: local }
    }
}

/// Symmetric cost matrix over `node_count` nodes with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    node_count: usize,
    costs: Vec<f64>,
}

impl TspInstance {
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self, TspError> {
        let size = rows.len();
        if size < 2 {
            return Err(TspError::EmptyInstance);
        }
        let mut costs = Vec::with_capacity(size * size);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != size {
                return Err(TspError::NotSquare {
                    row,
                    len: r.len(),
                    size,
                });
            }
            costs.extend_from_slice(r);
        }
        let inst = TspInstance {
            node_count: size,
            costs,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<(), TspError> {
        let n = self.node_count;
        for i in 0..n {
            if self.cost(i, i) != 0.0 {
                return Err(TspError::NonZeroDiagonal(i));
            }
            for j in 0..n {
                let c = self.cost(i, j);
                if !c.is_finite() || c < 0.0 {
                    return Err(TspError::InvalidCost { i, j, cost: c });
                }
                if c != self.cost(j, i) {
                    return Err(TspError::NotSymmetric { i, j });
                }
            }
        }
        Ok(())
    }

    /// Depot plus restaurants.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn restaurant_count(&self) -> usize {
        self.node_count - 1
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.node_count + j]
    }

    /// Whether `c(i,k) ≤ c(i,j) + c(j,k)` holds for every triple.
    pub fn satisfies_triangle_inequality(&self, tol: f64) -> bool {
        let n = self.node_count;
        (0..n).all(|i| {
            (0..n).all(|j| (0..n).all(|k| self.cost(i, k) <= self.cost(i, j) + self.cost(j, k) + tol))
        })
    }
}

/// Cost matrix blending normalized distance with preference penalties:
///
/// `c(u,v) = (1-λ)·d(u,v)/d_max + λ·(pen(u)+pen(v))/2`
///
/// where `pen(depot) = 0` and `pen(r) = (rank(r)-1)/max(n-1, 1)`.
pub fn build_personal_instance(
    start: Point,
    restaurants: &[Point],
    prefs: &PreferenceRanking,
    lambda: f64,
) -> Result<TspInstance, TspError> {
    let n = restaurants.len();
    if n == 0 {
        return Err(TspError::EmptyInstance);
    }
    if prefs.len() != n {
        return Err(TspError::SizeMismatch {
            expected: n,
            found: prefs.len(),
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(TspError::LambdaOutOfRange(lambda));
    }

    let size = n + 1;
    let node = |i: usize| if i == 0 { start } else { restaurants[i - 1] };
    let mut dist = vec![0.0; size * size];
    let mut d_max = 0.0f64;
    for i in 0..size {
        for j in (i + 1)..size {
            let d = euclidean_distance(node(i), node(j));
            dist[i * size + j] = d;
            dist[j * size + i] = d;
            d_max = d_max.max(d);
        }
    }

    let denom = n.saturating_sub(1).max(1) as f64;
    let ranks = prefs.ranks();
    let pen = |i: usize| {
        if i == 0 {
            0.0
        } else {
            (ranks[i] - 1) as f64 / denom
        }
    };

    let mut costs = vec![0.0; size * size];
    for i in 0..size {
        for j in (i + 1)..size {
            let geo = if d_max > 0.0 { dist[i * size + j] / d_max } else { 0.0 };
            let c = (1.0 - lambda) * geo + lambda * (pen(i) + pen(j)) / 2.0;
            costs[i * size + j] = c;
            costs[j * size + i] = c;
        }
    }
    Ok(TspInstance {
        node_count: size,
        costs,
    })
}

/// Depot-anchored tour: a permutation of restaurants `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tour {
    visit_order: Vec<usize>,
}

impl Tour {
    pub fn new(visit_order: Vec<usize>) -> Result<Self, TspError> {
        if visit_order.is_empty() || !is_permutation(&visit_order) {
            return Err(TspError::InvalidPermutation {
                n: visit_order.len(),
                order: visit_order,
            });
        }
        Ok(Tour { visit_order })
    }

    pub(crate) fn from_route(route: &[usize]) -> Self {
        debug_assert_eq!(route[0], 0);
        Tour {
            visit_order: route[1..].to_vec(),
        }
    }

    pub fn visit_order(&self) -> &[usize] {
        &self.visit_order
    }

    pub fn len(&self) -> usize {
        self.visit_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visit_order.is_empty()
    }

    /// Node sequence starting at the depot, without the closing depot.
    pub fn route(&self) -> Vec<usize> {
        std::iter::once(0).chain(self.visit_order.iter().copied()).collect()
    }

    pub fn reversed(&self) -> Tour {
        let mut visit_order = self.visit_order.clone();
        visit_order.reverse();
        Tour { visit_order }
    }

    /// Same cycle, possibly traversed in the opposite direction.
    pub fn same_cycle(&self, other: &Tour) -> bool {
        self == other || *self == other.reversed()
    }
}

pub fn tour_cost(instance: &TspInstance, tour: &Tour) -> Result<f64, TspError> {
    if tour.len() != instance.restaurant_count() {
        return Err(TspError::SizeMismatch {
            expected: instance.restaurant_count(),
            found: tour.len(),
        });
    }
    Ok(route_cost(instance, &tour.route()))
}

pub(crate) fn route_cost(instance: &TspInstance, route: &[usize]) -> f64 {
    let n = route.len();
    (0..n)
        .map(|i| instance.cost(route[i], route[(i + 1) % n]))
        .sum()
}

/// Greedy construction from the depot; ties go to the smaller index.
pub fn nearest_neighbor(instance: &TspInstance) -> Tour {
    let n = instance.restaurant_count();
    let mut visited = vec![false; n + 1];
    let mut order = Vec::with_capacity(n);
    let mut cur = 0;
    for _ in 0..n {
        let mut best = usize::MAX;
        let mut best_cost = f64::INFINITY;
        for v in 1..=n {
            if !visited[v] && instance.cost(cur, v) < best_cost {
                best = v;
                best_cost = instance.cost(cur, v);
            }
        }
        visited[best] = true;
        order.push(best);
        cur = best;
    }
    Tour { visit_order: order }
}

/// Uniformly random tour (Fisher-Yates), a pure function of `(n, seed)`.
pub fn random_tour(n: usize, seed: u64) -> Result<Tour, TspError> {
    if n == 0 {
        return Err(TspError::EmptyInstance);
    }
    Ok(random_tour_with(n, &mut seed::rng_from(seed)))
}

pub(crate) fn random_tour_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Tour {
    let mut visit_order: Vec<usize> = (1..=n).collect();
    visit_order.shuffle(rng);
    Tour { visit_order }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn four_node_costs() {
        let inst = four_node();
        // 1→3→4→2→1
        let t = Tour::new(vec![2, 3, 1]).unwrap();
        assert_eq!(tour_cost(&inst, &t).unwrap(), 49.0);
        // 1→2→3→4→1
        let t = Tour::new(vec![1, 2, 3]).unwrap();
        assert_eq!(tour_cost(&inst, &t).unwrap(), 100.0);
        assert!(tour_cost(&inst, &Tour::new(vec![1, 2]).unwrap()).is_err());
    }

    #[test]
    fn out_and_back() {
        let inst = TspInstance::from_matrix(&[vec![0.0, 2.5], vec![2.5, 0.0]]).unwrap();
        assert_eq!(tour_cost(&inst, &Tour::new(vec![1]).unwrap()).unwrap(), 5.0);
    }

    #[test]
    fn nearest_neighbor_trace() {
        let inst = four_node();
        let t = nearest_neighbor(&inst);
        assert_eq!(t.visit_order(), &[2, 3, 1]);
        assert_eq!(tour_cost(&inst, &t).unwrap(), 49.0);

        let single = TspInstance::from_matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(nearest_neighbor(&single).visit_order(), &[1]);

        let tie = TspInstance::from_matrix(&[
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 3.0],
            vec![1.0, 3.0, 0.0],
        ])
        .unwrap();
        assert_eq!(nearest_neighbor(&tie).visit_order(), &[1, 2]);
    }

    #[test]
    fn matrix_validation() {
        assert_eq!(
            TspInstance::from_matrix(&[vec![0.0, 1.0], vec![2.0, 0.0]]),
            Err(TspError::NotSymmetric { i: 0, j: 1 })
        );
        assert_eq!(
            TspInstance::from_matrix(&[vec![1.0, 1.0], vec![1.0, 0.0]]),
            Err(TspError::NonZeroDiagonal(0))
        );
        assert!(matches!(
            TspInstance::from_matrix(&[vec![0.0, -1.0], vec![-1.0, 0.0]]),
            Err(TspError::InvalidCost { .. })
        ));
        assert!(matches!(
            TspInstance::from_matrix(&[vec![0.0, 1.0], vec![1.0]]),
            Err(TspError::NotSquare { .. })
        ));
    }

    #[test]
    fn tour_validation() {
        assert!(Tour::new(vec![1, 1]).is_err());
        assert!(Tour::new(vec![0, 1]).is_err());
        assert!(Tour::new(vec![]).is_err());
        assert!(Tour::new(vec![3, 1, 2]).is_ok());
        assert!(PreferenceRanking::new(vec![2, 3]).is_err());
    }

    #[test]
    fn pure_distance_when_lambda_zero() {
        let start = Point::new(0.5, 0.5).unwrap();
        let rs = [
            Point::new(0.9, 0.9).unwrap(),
            Point::new(0.55, 0.5).unwrap(),
            Point::new(0.1, 0.2).unwrap(),
        ];
        let prefs = PreferenceRanking::new(vec![3, 1, 2]).unwrap();
        let inst = build_personal_instance(start, &rs, &prefs, 0.0).unwrap();
        let nearest = (1..=3)
            .min_by(|&a, &b| inst.cost(0, a).total_cmp(&inst.cost(0, b)))
            .unwrap();
        assert_eq!(nearest, 2);
        let d_max = euclidean_distance(rs[0], rs[2]);
        assert!((inst.cost(1, 3) - 1.0).abs() < 1e-12);
        assert!((inst.cost(0, 2) - 0.05 / d_max).abs() < 1e-12);
        assert!(inst.satisfies_triangle_inequality(1e-12));
    }

    #[test]
    fn pure_preference_when_lambda_one() {
        let start = Point::center();
        let rs = crate::spatial::sample_uniform_points(3, 4).unwrap();
        let prefs = PreferenceRanking::new(vec![2, 3, 1]).unwrap();
        let inst = build_personal_instance(start, &rs, &prefs, 1.0).unwrap();
        assert_eq!(inst.cost(0, 2), 0.0);
        assert_eq!(inst.cost(0, 1), 0.5);
        assert_eq!(inst.cost(0, 3), 0.25);
    }

    #[test]
    fn preferred_restaurant_is_cheaper_at_equal_distance() {
        let start = Point::center();
        let rs = [Point::new(0.7, 0.5).unwrap(), Point::new(0.3, 0.5).unwrap()];
        let prefs = PreferenceRanking::new(vec![1, 2]).unwrap();
        let inst = build_personal_instance(start, &rs, &prefs, 0.5).unwrap();
        assert!(inst.cost(0, 1) < inst.cost(0, 2));
    }

    #[test]
    fn personal_instance_errors() {
        let start = Point::center();
        let prefs = PreferenceRanking::identity(1);
        assert_eq!(
            build_personal_instance(start, &[], &PreferenceRanking::identity(0), 0.3),
            Err(TspError::EmptyInstance)
        );
        assert_eq!(
            build_personal_instance(start, &[start], &prefs, 1.5),
            Err(TspError::LambdaOutOfRange(1.5))
        );
        assert!(matches!(
            build_personal_instance(start, &[start, start], &prefs, 0.3),
            Err(TspError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn restrict_keeps_relative_order() {
        let prefs = PreferenceRanking::new(vec![4, 2, 5, 1, 3]).unwrap();
        // subset [1,3,4] -> local 1=r1, 2=r3, 3=r4; global order 4 < 1 < 3
        let local = prefs.restrict(&[1, 3, 4]);
        assert_eq!(local.order(), &[3, 1, 2]);
    }

    #[test]
    fn random_tour_frequencies() {
        assert_eq!(random_tour(1, 3).unwrap().visit_order(), &[1]);
        assert_eq!(random_tour(7, 3).unwrap(), random_tour(7, 3).unwrap());
        assert!(random_tour(0, 3).is_err());

        let mut rng = seed::rng_from(11);
        let draws = 60_000;
        let mut perms = std::collections::HashMap::new();
        for _ in 0..draws {
            *perms.entry(random_tour_with(3, &mut rng)).or_insert(0usize) += 1;
        }
        assert_eq!(perms.len(), 6);
        for count in perms.values() {
            assert!((*count as f64 / draws as f64 - 1.0 / 6.0).abs() < 0.01);
        }

        let mut first = [0usize; 6];
        for _ in 0..draws {
            first[random_tour_with(5, &mut rng).visit_order()[0]] += 1;
        }
        for &c in &first[1..] {
            assert!((c as f64 / draws as f64 - 0.2).abs() < 0.01);
        }
    }

    proptest::proptest! {
        #[test]
        fn personal_instance_invariants(seed in 0u64..1000, n in 1usize..12, lambda in 0.0..=1.0f64) {
            let pts = crate::spatial::sample_uniform_points(n + 1, seed).unwrap();
            let prefs = PreferenceRanking::random(n, &mut seed::rng_from(seed));
            let inst = build_personal_instance(pts[0], &pts[1..], &prefs, lambda).unwrap();
            for i in 0..=n {
                proptest::prop_assert_eq!(inst.cost(i, i), 0.0);
                for j in 0..=n {
                    proptest::prop_assert_eq!(inst.cost(i, j), inst.cost(j, i));
                    proptest::prop_assert!(inst.cost(i, j) >= 0.0 && inst.cost(i, j) <= 1.0 + 1e-12);
                }
            }
        }

        #[test]
        fn cost_invariant_under_reversal(seed in 0u64..1000, n in 1usize..15) {
            let inst = random_blended(n, seed);
            let t = random_tour(n, seed).unwrap();
            let a = tour_cost(&inst, &t).unwrap();
            let b = tour_cost(&inst, &t.reversed()).unwrap();
            proptest::prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
