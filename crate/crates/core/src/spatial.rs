//! Uniform spatial layout over the unit city square `[0,1)²`.
//!
//! The square is decomposed into a `k × k` grid of equal-area cells. With
//! `n = k²` cells every cell has area `1/n` and diameter `√(2/n)`, and two
//! points lying in adjacent cells are never further apart than the sum of the
//! two cell diameters.

use std::fmt;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error("grid side must be at least 1")]
    EmptyGrid,
    #[error("point ({x}, {y}) lies outside the unit square")]
    OutsideSquare { x: f64, y: f64 },
    #[error("cell ({row}, {col}) is not part of a {k}x{k} grid")]
    InvalidCell { row: usize, col: usize, k: usize },
    #[error("a cell is not adjacent to itself")]
    SameCell,
    #[error("cells {a} and {b} are not adjacent")]
    NotAdjacent { a: CellId, b: CellId },
    #[error("at least one point must be sampled")]
    NoPoints,
}

/// A location in the half-open unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Result<Self, SpatialError> {
        let p = Point { x, y };
        if p.in_unit_square() {
            Ok(p)
        } else {
            Err(SpatialError::OutsideSquare { x, y })
        }
    }

    /// Centre of the city.
    pub const fn center() -> Self {
        Point { x: 0.5, y: 0.5 }
    }

    pub fn in_unit_square(&self) -> bool {
        (0.0..1.0).contains(&self.x) && (0.0..1.0).contains(&self.y)
    }
}

pub fn euclidean_distance(p: Point, q: Point) -> f64 {
    (q.x - p.x).hypot(q.y - p.y)
}

/// Draws `count` independent uniform points. The sequence is a pure function
/// of `(count, seed)`.
pub fn sample_uniform_points(count: usize, seed: u64) -> Result<Vec<Point>, SpatialError> {
    if count == 0 {
        return Err(SpatialError::NoPoints);
    }
    let mut rng = seed::rng_from(seed);
    Ok(sample_with(&mut rng, count))
}

pub(crate) fn sample_with<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<Point> {
    (0..count)
        .map(|_| Point {
            x: rng.gen::<f64>(),
            y: rng.gen::<f64>(),
        })
        .collect()
}

/// Writes points as CSV with header `id,x,y`.
pub fn write_points_csv<W: Write>(out: W, points: &[Point]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "x", "y"])?;
    for (id, p) in points.iter().enumerate() {
        w.write_record([id.to_string(), format!("{:.9}", p.x), format!("{:.9}", p.y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Grid cell, addressed by row (y axis) and column (x axis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId {
    pub row: usize,
    pub col: usize,
}

impl CellId {
    pub const fn new(row: usize, col: usize) -> Self {
        CellId { row, col }
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Equal-area `k × k` decomposition of the unit square. Cell `(row, col)`
/// covers `[col/k, (col+1)/k) × [row/k, (row+1)/k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    k: usize,
}

impl Partition {
    pub fn new(k: usize) -> Result<Self, SpatialError> {
        if k == 0 {
            return Err(SpatialError::EmptyGrid);
        }
        Ok(Partition { k })
    }

    /// Grid side.
    pub fn side(&self) -> usize {
        self.k
    }

    pub fn cell_count(&self) -> usize {
        self.k * self.k
    }

    pub fn cell_area(&self) -> f64 {
        1.0 / self.cell_count() as f64
    }

    /// `√2 / k`, equivalently `√(2/n)`.
    pub fn cell_diameter(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.k as f64
    }

    /// `(x_min, x_max, y_min, y_max)` of a cell.
    pub fn cell_bounds(&self, cell: CellId) -> Result<(f64, f64, f64, f64), SpatialError> {
        self.validate(cell)?;
        let k = self.k as f64;
        Ok((
            cell.col as f64 / k,
            (cell.col + 1) as f64 / k,
            cell.row as f64 / k,
            (cell.row + 1) as f64 / k,
        ))
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.k).flat_map(move |row| (0..self.k).map(move |col| CellId { row, col }))
    }

    /// Row-major linear index.
    pub fn index_of(&self, cell: CellId) -> usize {
        cell.row * self.k + cell.col
    }

    pub fn cell_at(&self, index: usize) -> Result<CellId, SpatialError> {
        let cell = CellId::new(index / self.k, index % self.k);
        self.validate(cell)?;
        Ok(cell)
    }

    pub fn cell_of(&self, p: Point) -> Result<CellId, SpatialError> {
        if !p.in_unit_square() {
            return Err(SpatialError::OutsideSquare { x: p.x, y: p.y });
        }
        let k = self.k as f64;
        // floor(x * k) can round up to k for x just below 1.
        let col = ((p.x * k).floor() as usize).min(self.k - 1);
        let row = ((p.y * k).floor() as usize).min(self.k - 1);
        Ok(CellId { row, col })
    }

    /// Closed cells touch (edge or corner), so their infimum distance is 0.
    pub fn cells_adjacent(&self, a: CellId, b: CellId) -> Result<bool, SpatialError> {
        self.validate(a)?;
        self.validate(b)?;
        if a == b {
            return Err(SpatialError::SameCell);
        }
        Ok(a.row.abs_diff(b.row) <= 1 && a.col.abs_diff(b.col) <= 1)
    }

    /// Checks `d(p, q) ≤ diam(a) + diam(b)` for points in adjacent cells.
    pub fn check_distance_bound(&self, p: Point, q: Point) -> Result<bool, SpatialError> {
        let a = self.cell_of(p)?;
        let b = self.cell_of(q)?;
        if a == b || !self.cells_adjacent(a, b)? {
            return Err(SpatialError::NotAdjacent { a, b });
        }
        Ok(euclidean_distance(p, q) <= 2.0 * self.cell_diameter())
    }

    fn validate(&self, cell: CellId) -> Result<(), SpatialError> {
        if cell.row < self.k && cell.col < self.k {
            Ok(())
        } else {
            Err(SpatialError::InvalidCell {
                row: cell.row,
                col: cell.col,
                k: self.k,
            })
        }
    }
}

pub fn make_partition(k: usize) -> Result<Partition, SpatialError> {
    Partition::new(k)
}

/// Number of points per cell, in row-major cell order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OccupancyCounts {
    pub counts: Vec<u32>,
    pub total: usize,
}

impl OccupancyCounts {
    pub fn mean(&self) -> f64 {
        self.total as f64 / self.counts.len() as f64
    }

    pub fn empty_fraction(&self) -> f64 {
        let empty = self.counts.iter().filter(|&&c| c == 0).count();
        empty as f64 / self.counts.len() as f64
    }
}

pub fn occupancy_counts(
    partition: &Partition,
    points: &[Point],
) -> Result<OccupancyCounts, SpatialError> {
    let mut counts = vec![0u32; partition.cell_count()];
    for &p in points {
        let cell = partition.cell_of(p)?;
        counts[partition.index_of(cell)] += 1;
    }
    Ok(OccupancyCounts {
        counts,
        total: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y).unwrap()
    }

    #[test]
    fn partition_geometry() {
        let p = make_partition(1).unwrap();
        assert_eq!(p.cell_count(), 1);
        assert_eq!(p.cell_area(), 1.0);
        assert!((p.cell_diameter() - 1.41421356).abs() < 1e-8);

        let p = make_partition(10).unwrap();
        assert_eq!(p.cell_count(), 100);
        assert!((p.cell_area() - 0.01).abs() < 1e-15);
        assert!((p.cell_diameter() - 0.14142136).abs() < 1e-8);

        let p = make_partition(32).unwrap();
        assert_eq!(p.cell_count(), 1024);
        assert!((p.cell_diameter() - (2.0f64 / 1024.0).sqrt()).abs() < 1e-15);
        assert!((p.cell_diameter() - 0.04419417).abs() < 1e-8);

        assert_eq!(make_partition(0), Err(SpatialError::EmptyGrid));
    }

    #[test]
    fn cell_bounds_tile_the_square() {
        let p = make_partition(7).unwrap();
        let area: f64 = p
            .cells()
            .map(|c| {
                let (x0, x1, y0, y1) = p.cell_bounds(c).unwrap();
                (x1 - x0) * (y1 - y0)
            })
            .sum();
        assert!((area - 1.0).abs() < 1e-12);
        for c in p.cells() {
            let (x0, x1, y0, y1) = p.cell_bounds(c).unwrap();
            let diag = (x1 - x0).hypot(y1 - y0);
            assert!((diag - (2.0f64 / 49.0).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_examples() {
        assert!((euclidean_distance(pt(0.0, 0.0), pt(0.3, 0.4)) - 0.5).abs() < 1e-12);
        assert_eq!(euclidean_distance(pt(0.2, 0.7), pt(0.2, 0.7)), 0.0);
        let d = euclidean_distance(pt(0.1, 0.1), pt(0.9, 0.9));
        assert!((d - 1.28f64.sqrt()).abs() < 1e-12);
        assert!((d - 1.13137).abs() < 1e-5);
    }

    #[test]
    fn cell_membership() {
        let p2 = make_partition(2).unwrap();
        assert_eq!(p2.cell_of(pt(0.1, 0.1)).unwrap(), CellId::new(0, 0));
        assert_eq!(p2.cell_of(pt(0.5, 0.5)).unwrap(), CellId::new(1, 1));
        let p10 = make_partition(10).unwrap();
        assert_eq!(p10.cell_of(pt(0.95, 0.05)).unwrap(), CellId::new(0, 9));
        let outside = Point { x: 1.0, y: 0.2 };
        assert!(matches!(
            p10.cell_of(outside),
            Err(SpatialError::OutsideSquare { .. })
        ));
        assert!(Point::new(-0.1, 0.0).is_err());
        assert_eq!(
            p10.cell_of(Point { x: 1.0 - f64::EPSILON / 2.0, y: 0.0 }).unwrap(),
            CellId::new(0, 9)
        );
    }

    #[test]
    fn adjacency() {
        let p = make_partition(3).unwrap();
        let c = CellId::new;
        assert!(p.cells_adjacent(c(0, 0), c(0, 1)).unwrap());
        assert!(p.cells_adjacent(c(0, 0), c(1, 1)).unwrap());
        assert!(!p.cells_adjacent(c(0, 0), c(0, 2)).unwrap());
        assert_eq!(p.cells_adjacent(c(1, 1), c(1, 1)), Err(SpatialError::SameCell));
        assert!(matches!(
            p.cells_adjacent(c(0, 0), c(3, 0)),
            Err(SpatialError::InvalidCell { .. })
        ));
    }

    #[test]
    fn distance_bound_worst_case() {
        let p = make_partition(10).unwrap();
        // Opposite far corners of cells (0,0) and (0,1).
        let a = pt(0.0, 0.0);
        let b = pt(0.2 - 1e-12, 0.1 - 1e-12);
        assert!(p.check_distance_bound(a, b).unwrap());
        assert!((euclidean_distance(a, b) - 0.2236).abs() < 1e-4);
        // Non-adjacent pair is rejected.
        assert!(p.check_distance_bound(pt(0.05, 0.05), pt(0.55, 0.05)).is_err());
        // k = 1 has no adjacent pairs at all.
        let one = make_partition(1).unwrap();
        assert!(one.check_distance_bound(pt(0.1, 0.1), pt(0.9, 0.9)).is_err());
    }

    #[test]
    fn occupancy_examples() {
        let p = make_partition(2).unwrap();
        let centers = [pt(0.25, 0.25), pt(0.75, 0.25), pt(0.25, 0.75), pt(0.75, 0.75)];
        assert_eq!(occupancy_counts(&p, &centers).unwrap().counts, vec![1, 1, 1, 1]);
        let clumped = [pt(0.1, 0.1), pt(0.2, 0.2), pt(0.3, 0.3), pt(0.4, 0.4)];
        let occ = occupancy_counts(&p, &clumped).unwrap();
        assert_eq!(occ.counts, vec![4, 0, 0, 0]);
        assert_eq!(occ.empty_fraction(), 0.75);
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_uniform_points(4, 99).unwrap();
        let b = sample_uniform_points(4, 99).unwrap();
        assert_eq!(a, b);
        for s in 0..10u64 {
            let x = sample_uniform_points(4, 2 * s).unwrap();
            let y = sample_uniform_points(4, 2 * s + 1).unwrap();
            assert_ne!(x, y);
        }
        assert_eq!(sample_uniform_points(0, 1), Err(SpatialError::NoPoints));
        let mean = occupancy_counts(
            &make_partition(32).unwrap(),
            &sample_uniform_points(1024, 5).unwrap(),
        )
        .unwrap()
        .mean();
        assert_eq!(mean, 1.0);
    }

    #[test]
    fn points_csv_layout() {
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &[pt(0.5, 0.25)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "id,x,y\n0,0.500000000,0.250000000\n");
    }

    #[test]
    fn lattice_probes_map_to_exactly_one_cell() {
        let p = make_partition(8).unwrap();
        let steps = 160;
        for i in 0..steps {
            for j in 0..steps {
                let q = pt(i as f64 / steps as f64, j as f64 / steps as f64);
                let cell = p.cell_of(q).unwrap();
                let containing = p
                    .cells()
                    .filter(|&c| {
                        let (x0, x1, y0, y1) = p.cell_bounds(c).unwrap();
                        q.x >= x0 && q.x < x1 && q.y >= y0 && q.y < y1
                    })
                    .collect::<Vec<_>>();
                assert_eq!(containing, vec![cell]);
            }
        }
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(
            ax in 0.0..1.0f64, ay in 0.0..1.0f64,
            bx in 0.0..1.0f64, by in 0.0..1.0f64,
            cx in 0.0..1.0f64, cy in 0.0..1.0f64,
        ) {
            let (a, b, c) = (pt(ax, ay), pt(bx, by), pt(cx, cy));
            prop_assert_eq!(euclidean_distance(a, b), euclidean_distance(b, a));
            prop_assert!(euclidean_distance(a, c)
                <= euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-12);
        }

        #[test]
        fn adjacent_points_respect_bound(
            k in 2usize..40,
            row in 0usize..40, col in 0usize..40,
            dr in -1i64..=1, dc in -1i64..=1,
            u in 0.0..1.0f64, v in 0.0..1.0f64, s in 0.0..1.0f64, t in 0.0..1.0f64,
        ) {
            let part = make_partition(k).unwrap();
            let a = CellId::new(row % k, col % k);
            let br = a.row as i64 + dr;
            let bc = a.col as i64 + dc;
            prop_assume!((dr, dc) != (0, 0));
            prop_assume!(br >= 0 && bc >= 0 && (br as usize) < k && (bc as usize) < k);
            let b = CellId::new(br as usize, bc as usize);
            let kf = k as f64;
            let p = pt((a.col as f64 + u) / kf, (a.row as f64 + v) / kf);
            let q = pt((b.col as f64 + s) / kf, (b.row as f64 + t) / kf);
            prop_assume!(part.cell_of(p).unwrap() == a && part.cell_of(q).unwrap() == b);
            prop_assert!(part.check_distance_bound(p, q).unwrap());
        }
    }
}
