//! Point sets, squared-distance matrices and l2-squared validity.
//!
//! A point set is *l2-squared* (negative type) when the squared Euclidean
//! distances `d(i,j) = |x_i - x_j|^2` obey the triangle inequality
//! `d(i,j) + d(j,k) >= d(i,k)`. Sets that only obey it up to a factor
//! `beta` along every vertex sequence are *approximately* l2-squared; the
//! factor is measured here with an all-pairs shortest path pass.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance (scaled by the largest entry) for triangle checks.
pub const TRIANGLE_TOL: f64 = 1e-9;

/// Cap on the number of violating triples kept in a [`TriangleReport`].
pub const MAX_REPORTED_VIOLATIONS: usize = 10_000;

/// `n` points in `d` dimensions, one point per row.
///
/// Distinct indices may carry identical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: DMatrix<f64>,
}

impl PointSet {
    pub fn new(coords: DMatrix<f64>) -> Result<Self> {
        if coords.nrows() == 0 || coords.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "point set must have n >= 1 and d >= 1, got {}x{}",
                coords.nrows(),
                coords.ncols()
            )));
        }
        if let Some(bad) = coords.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coordinate {bad}")));
        }
        Ok(Self { coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::InvalidInput(format!(
                "row {i} has {} coordinates, expected {d}",
                r.len()
            )));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.coords.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.point(i)).collect()
    }

    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        let a = self.coords.row(i);
        let b = self.coords.row(j);
        a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    /// Keeps the listed rows, in order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(self.coords.select_rows(idx.iter()))
    }

    /// Applies `x -> scale * (x - center)` to every point.
    pub fn affine(&self, center: &[f64], scale: f64) -> Result<Self> {
        let mut c = self.coords.clone();
        for mut row in c.row_iter_mut() {
            for (v, m) in row.iter_mut().zip(center) {
                *v = scale * (*v - m);
            }
        }
        Self::new(c)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.dim())
            .map(|j| self.coords.column(j).sum() / n)
            .collect()
    }
}

/// Pairwise squared Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    dist: DMatrix<f64>,
    spread: f64,
}

impl DistanceMatrix {
    /// Wraps an explicit matrix; checks zero diagonal, symmetry and nonnegativity.
    pub fn from_matrix(dist: DMatrix<f64>) -> Result<Self> {
        let n = dist.nrows();
        if n == 0 || dist.ncols() != n {
            return Err(Error::InvalidInput(
                "distance matrix must be square and nonempty".into(),
            ));
        }
        for i in 0..n {
            if dist[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = dist[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!("bad entry {v} at ({i},{j})")));
                }
                if v != dist[(j, i)] {
                    return Err(Error::InvalidInput(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        let spread = dist.sum() / (n * n) as f64;
        Ok(Self { dist, spread })
    }

    pub fn n(&self) -> usize {
        self.dist.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.dist
    }

    /// `(1/n^2) * sum_{i,j} d(i,j)`.
    pub fn spread(&self) -> f64 {
        self.spread
    }

    pub fn total(&self) -> f64 {
        self.dist.sum()
    }

    pub fn max(&self) -> f64 {
        self.dist.max()
    }

    /// `B(i, radius) = { j : d(i,j) <= radius }`.
    pub fn ball(&self, i: usize, radius: f64) -> Vec<usize> {
        (0..self.n())
            .filter(|&j| self.get(i, j) <= radius)
            .collect()
    }

    pub fn ball_size(&self, i: usize, radius: f64) -> usize {
        (0..self.n()).filter(|&j| self.get(i, j) <= radius).count()
    }

    /// `d(i, S) = min_{j in S} d(i,j)`; infinite for empty `S`.
    pub fn to_set(&self, i: usize, set: &[usize]) -> f64 {
        set.iter()
            .map(|&j| self.get(i, j))
            .fold(f64::INFINITY, f64::min)
    }

    /// `d(A, B) = min_{i in A, j in B} d(i,j)`.
    pub fn between(&self, a: &[usize], b: &[usize]) -> f64 {
        a.iter()
            .map(|&i| self.to_set(i, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Shortest-path closure of the complete graph weighted by `d`.
    ///
    /// Equals `d` for exact l2-squared input and is the largest metric below
    /// `d` otherwise.
    pub fn closure(&self) -> DistanceMatrix {
        let sp = shortest_paths(&self.dist);
        let spread = sp.sum() / (self.n() * self.n()) as f64;
        DistanceMatrix { dist: sp, spread }
    }

    pub(crate) fn scaled(&self, factor: f64) -> DistanceMatrix {
        DistanceMatrix {
            dist: &self.dist * factor,
            spread: self.spread * factor,
        }
    }
}

/// Computes `d(i,j) = |x_i - x_j|^2` for all pairs.
pub fn distances(points: &PointSet) -> DistanceMatrix {
    let n = points.n();
    let mut dist = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = points.sq_dist(i, j);
            dist[(i, j)] = v;
            dist[(j, i)] = v;
        }
    }
    let spread = dist.sum() / (n * n) as f64;
    DistanceMatrix { dist, spread }
}

/// One violated triple: `d(i,j) + d(j,k) < d(i,k)` with `slack = d(i,j) + d(j,k) - d(i,k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleReport {
    pub exact_valid: bool,
    pub violation_count: usize,
    /// First violations in `(i, k, j)` scan order, capped at [`MAX_REPORTED_VIOLATIONS`].
    pub violating_triples: Vec<Violation>,
    pub beta: f64,
}

/// Scans every triple `(i, j, k)` with `i < k` and `j` distinct from both.
pub fn check_l22(dm: &DistanceMatrix) -> TriangleReport {
    let n = dm.n();
    let tol = TRIANGLE_TOL * dm.max();
    let per_i: Vec<(usize, Vec<Violation>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut count = 0;
            let mut found = Vec::new();
            for k in (i + 1)..n {
                let dik = dm.get(i, k);
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    let slack = dm.get(i, j) + dm.get(j, k) - dik;
                    if slack < -tol {
                        count += 1;
                        if found.len() < MAX_REPORTED_VIOLATIONS {
                            found.push(Violation { i, j, k, slack });
                        }
                    }
                }
            }
            (count, found)
        })
        .collect();

    let violation_count = per_i.iter().map(|(c, _)| c).sum();
    let violating_triples: Vec<Violation> = per_i
        .into_iter()
        .flat_map(|(_, v)| v)
        .take(MAX_REPORTED_VIOLATIONS)
        .collect();
    let beta = approx_beta(dm).unwrap_or(1.0);
    TriangleReport {
        exact_valid: violation_count == 0,
        violation_count,
        violating_triples,
        beta,
    }
}

/// Largest `beta` such that every vertex sequence satisfies
/// `sum of consecutive d >= beta * d(first, last)`.
///
/// The minimizing sequence is a shortest path, so this is
/// `min_{d(i,k) > 0} sp(i,k) / d(i,k)` over all-pairs shortest paths.
/// Returns [`Error::DegenerateMetric`] when every distance is zero; the
/// conventional value in that case is 1.
pub fn approx_beta(dm: &DistanceMatrix) -> Result<f64> {
    let n = dm.n();
    if n < 2 || dm.max() == 0.0 {
        return Err(Error::DegenerateMetric);
    }
    let sp = shortest_paths(dm.matrix());
    let mut beta: f64 = 1.0;
    for i in 0..n {
        for k in 0..n {
            let d = dm.get(i, k);
            if i != k && d > 0.0 {
                beta = beta.min(sp[(i, k)] / d);
            }
        }
    }
    Ok(beta)
}

fn shortest_paths(dist: &DMatrix<f64>) -> DMatrix<f64> {
    let n = dist.nrows();
    let mut sp = dist.clone();
    for m in 0..n {
        for i in 0..n {
            let dim = sp[(i, m)];
            for k in 0..n {
                let via = dim + sp[(m, k)];
                if via < sp[(i, k)] {
                    sp[(i, k)] = via;
                }
            }
        }
    }
    sp
}

/// Rescales coordinates so that the spread is exactly 1.
///
/// Returns the new set and the coordinate multiplier `scale`; distances
/// are multiplied by `scale^2`.
pub fn normalize(points: &PointSet) -> Result<(PointSet, f64)> {
    let spread = distances(points).spread();
    if spread <= 0.0 {
        return Err(Error::ZeroSpread);
    }
    let scale = 1.0 / spread.sqrt();
    let scaled = PointSet::new(points.coords() * scale)?;
    Ok((scaled, scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PointSet {
        PointSet::from_rows(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    fn cube3() -> PointSet {
        let rows: Vec<Vec<f64>> = (0..8u32)
            .map(|v| (0..3).map(|b| f64::from((v >> b) & 1)).collect())
            .collect();
        PointSet::from_rows(&rows).unwrap()
    }

    #[test]
    fn rejects_bad_point_sets() {
        assert!(PointSet::from_rows(&[]).is_err());
        assert!(PointSet::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(PointSet::from_rows(&[vec![f64::NAN]]).is_err());
    }

    #[test]
    fn single_point_is_zero() {
        let dm = distances(&line(&[3.0]));
        assert_eq!(dm.n(), 1);
        assert_eq!(dm.get(0, 0), 0.0);
        assert_eq!(dm.spread(), 0.0);
    }

    #[test]
    fn two_point_spread() {
        let p = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let dm = distances(&p);
        assert_eq!(dm.get(0, 1), 1.0);
        assert_eq!(dm.spread(), 0.5);
    }

    #[test]
    fn cube_distances_are_hamming() {
        let dm = distances(&cube3());
        for u in 0..8u32 {
            for v in 0..8u32 {
                assert_eq!(
                    dm.get(u as usize, v as usize),
                    f64::from((u ^ v).count_ones())
                );
            }
        }
        assert!(check_l22(&dm).exact_valid);
    }

    #[test]
    fn collinear_points_violate() {
        let dm = distances(&line(&[0.0, 1.0, 2.0]));
        let rep = check_l22(&dm);
        assert!(!rep.exact_valid);
        assert_eq!(rep.violation_count, 1);
        let v = rep.violating_triples[0];
        assert_eq!((v.i, v.j, v.k), (0, 1, 2));
        assert_eq!(v.slack, -2.0);
        assert_eq!(rep.beta, 0.5);
    }

    #[test]
    fn simplex_is_valid() {
        let p = PointSet::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let dm = distances(&p);
        assert!((0..3).all(|i| (0..3).all(|j| i == j || dm.get(i, j) == 2.0)));
        let rep = check_l22(&dm);
        assert!(rep.exact_valid);
        assert_eq!(rep.beta, 1.0);
    }

    #[test]
    fn beta_of_repeated_point_is_degenerate() {
        let dm = distances(&line(&[1.0, 1.0, 1.0]));
        assert!(matches!(approx_beta(&dm), Err(Error::DegenerateMetric)));
        assert_eq!(check_l22(&dm).beta, 1.0);
    }

    #[test]
    fn normalize_examples() {
        let p = PointSet::from_rows(&[vec![0.0], vec![2f64.sqrt()]]).unwrap();
        let (q, scale) = normalize(&p).unwrap();
        assert!((scale - 1.0).abs() < 1e-15);
        assert!((distances(&q).spread() - 1.0).abs() < 1e-12);

        let p = PointSet::from_rows(&[vec![0.0], vec![8f64.sqrt()]]).unwrap();
        let (q, scale) = normalize(&p).unwrap();
        assert!((scale - 0.5).abs() < 1e-15);
        assert!((distances(&q).get(0, 1) - 2.0).abs() < 1e-12);

        assert!(matches!(
            normalize(&line(&[4.0, 4.0])),
            Err(Error::ZeroSpread)
        ));
    }

    #[test]
    fn balls_use_closed_radius() {
        let dm = distances(&line(&[0.0, 1.0, 1.0, 3.0]));
        assert_eq!(dm.ball(0, 1.0), vec![0, 1, 2]);
        assert_eq!(dm.to_set(3, &[0, 1]), 4.0);
        assert_eq!(dm.between(&[0], &[2, 3]), 1.0);
    }

    #[test]
    fn closure_repairs_line() {
        let dm = distances(&line(&[0.0, 1.0, 2.0]));
        let c = dm.closure();
        assert_eq!(c.get(0, 2), 2.0);
        assert!(check_l22(&c).exact_valid);
    }
}
