//! Test-fixture generators.
//!
//! Hypercube and simplex kinds are exactly l2-squared. The planted
//! low-rank kind places a hypercube in `rank` coordinates and adds small
//! noise in the remaining ones; with Gaussian noise the result is only
//! approximately l2-squared, so it is rejected below a `beta` floor.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{approx_beta, distances, PointSet};

/// Noise model for the off-subspace coordinates of a planted fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// i.i.d. `N(0, noise^2)` per coordinate. Approximately l2-squared.
    Gaussian,
    /// Each coordinate is `0` or `noise` with equal probability. Exactly l2-squared.
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FixtureKind {
    Hypercube {
        dim: usize,
    },
    /// `size` distinct vertices of the `dim`-cube, chosen uniformly.
    HypercubeSubset {
        dim: usize,
        size: usize,
    },
    /// Vertices of the box `prod_k {0, scales[k]}`.
    ScaledHypercube {
        scales: Vec<f64>,
    },
    /// Standard basis `e_1, ..., e_k` of `R^k`.
    Simplex {
        k: usize,
    },
    PlantedLowRank {
        rank: usize,
        dim: usize,
        noise: f64,
        noise_kind: NoiseKind,
        /// Number of cube vertices to draw; `None` takes all `2^rank`.
        points: Option<usize>,
        beta_floor: f64,
        max_retries: usize,
    },
    /// `duplicate_endpoints(hypercube(dim), copies)`.
    Counterexample {
        dim: usize,
        copies: usize,
    },
}

impl FixtureKind {
    pub fn planted(rank: usize, dim: usize, noise: f64) -> Self {
        FixtureKind::PlantedLowRank {
            rank,
            dim,
            noise,
            noise_kind: NoiseKind::Gaussian,
            points: None,
            beta_floor: 0.9,
            max_retries: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub points: PointSet,
    /// Measured approximate-validity factor, for kinds that are not exact by construction.
    pub beta: Option<f64>,
}

const MAX_CUBE_DIM: usize = 20;

pub fn hypercube(dim: usize) -> Result<PointSet> {
    if dim == 0 || dim > MAX_CUBE_DIM {
        return Err(Error::InvalidInput(format!(
            "hypercube dim must be in 1..={MAX_CUBE_DIM}"
        )));
    }
    let n = 1usize << dim;
    PointSet::new(DMatrix::from_fn(n, dim, |v, b| ((v >> b) & 1) as f64))
}

pub fn simplex(k: usize) -> Result<PointSet> {
    if k == 0 {
        return Err(Error::InvalidInput("simplex needs k >= 1".into()));
    }
    PointSet::new(DMatrix::identity(k, k))
}

pub fn generate(kind: &FixtureKind, seed: u64) -> Result<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exact = |points| Ok(Fixture { points, beta: None });
    match kind {
        FixtureKind::Hypercube { dim } => exact(hypercube(*dim)?),
        FixtureKind::HypercubeSubset { dim, size } => {
            let cube = hypercube(*dim)?;
            if *size == 0 || *size > cube.n() {
                return Err(Error::InvalidInput(format!(
                    "subset size must be in 1..={}",
                    cube.n()
                )));
            }
            let mut idx = sample(&mut rng, cube.n(), *size).into_vec();
            idx.sort_unstable();
            exact(cube.select(&idx)?)
        }
        FixtureKind::ScaledHypercube { scales } => {
            if scales.is_empty() || scales.len() > MAX_CUBE_DIM {
                return Err(Error::InvalidInput(
                    "scaled hypercube needs 1..=20 scales".into(),
                ));
            }
            let cube = hypercube(scales.len())?;
            let c = DMatrix::from_fn(cube.n(), scales.len(), |v, b| {
                cube.coords()[(v, b)] * scales[b]
            });
            exact(PointSet::new(c)?)
        }
        FixtureKind::Simplex { k } => exact(simplex(*k)?),
        FixtureKind::PlantedLowRank {
            rank,
            dim,
            noise,
            noise_kind,
            points,
            beta_floor,
            max_retries,
        } => planted(
            &mut rng,
            *rank,
            *dim,
            *noise,
            *noise_kind,
            *points,
            *beta_floor,
            *max_retries,
        ),
        FixtureKind::Counterexample { dim, copies } => {
            exact(duplicate_endpoints(&hypercube(*dim)?, *copies)?)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn planted(
    rng: &mut ChaCha8Rng,
    rank: usize,
    dim: usize,
    noise: f64,
    noise_kind: NoiseKind,
    points: Option<usize>,
    beta_floor: f64,
    max_retries: usize,
) -> Result<Fixture> {
    if rank == 0 || rank > dim || rank > MAX_CUBE_DIM {
        return Err(Error::InvalidInput(format!(
            "planted fixture needs 1 <= rank <= dim, got rank {rank}, dim {dim}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise must be finite and >= 0, got {noise}"
        )));
    }
    let cube = hypercube(rank)?;
    let n = points.unwrap_or(cube.n());
    if n == 0 || n > cube.n() {
        return Err(Error::InvalidInput(format!(
            "points must be in 1..={}",
            cube.n()
        )));
    }
    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidInput(e.to_string()))?;

    for _ in 0..max_retries.max(1) {
        let mut idx = if n == cube.n() {
            (0..n).collect()
        } else {
            sample(rng, cube.n(), n).into_vec()
        };
        idx.sort_unstable();
        let c = DMatrix::from_fn(n, dim, |i, j| {
            if j < rank {
                cube.coords()[(idx[i], j)]
            } else {
                0.0
            }
        });
        let mut c = c;
        for i in 0..n {
            for j in rank..dim {
                c[(i, j)] = match noise_kind {
                    NoiseKind::Gaussian if noise > 0.0 => normal.sample(rng),
                    NoiseKind::Gaussian => 0.0,
                    NoiseKind::Binary => {
                        if rng.random::<bool>() {
                            noise
                        } else {
                            0.0
                        }
                    }
                };
            }
        }
        let ps = PointSet::new(c)?;
        let beta = approx_beta(&distances(&ps)).unwrap_or(1.0);
        // exact inputs can measure a hair below 1 through path-sum round-off
        if beta >= beta_floor - 1e-9 {
            return Ok(Fixture {
                points: ps,
                beta: Some(beta),
            });
        }
    }
    Err(Error::FixtureInfeasible(format!(
        "no draw reached beta >= {beta_floor} in {max_retries} attempts"
    )))
}

/// Appends `copies - 1` extra copies of each endpoint of a maximally distant pair.
///
/// The pair is the first `(a, b)`, `a < b`, in row-major order attaining the
/// maximum distance. Output has `n + 2(copies - 1)` points.
pub fn duplicate_endpoints(points: &PointSet, copies: usize) -> Result<PointSet> {
    let n = points.n();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    if copies == 0 {
        return Err(Error::InvalidInput("copies must be >= 1".into()));
    }
    let mut best = (0, 1, points.sq_dist(0, 1));
    for a in 0..n {
        for b in (a + 1)..n {
            let d = points.sq_dist(a, b);
            if d > best.2 {
                best = (a, b, d);
            }
        }
    }
    let (a, b, _) = best;
    let mut rows: Vec<usize> = (0..n).collect();
    rows.extend(std::iter::repeat_n(a, copies - 1));
    rows.extend(std::iter::repeat_n(b, copies - 1));
    points.select(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::check_l22;

    #[test]
    fn cube_and_simplex() {
        let c = generate(&FixtureKind::Hypercube { dim: 3 }, 0).unwrap();
        assert_eq!(c.points.n(), 8);
        assert!(check_l22(&distances(&c.points)).exact_valid);

        let s = generate(&FixtureKind::Simplex { k: 4 }, 0).unwrap().points;
        let dm = distances(&s);
        assert_eq!(s.n(), 4);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(dm.get(i, j), if i == j { 0.0 } else { 2.0 });
            }
        }
    }

    #[test]
    fn subset_and_scaled_are_exact() {
        let f = generate(&FixtureKind::HypercubeSubset { dim: 5, size: 13 }, 7).unwrap();
        assert_eq!(f.points.n(), 13);
        assert!(check_l22(&distances(&f.points)).exact_valid);

        let f = generate(
            &FixtureKind::ScaledHypercube {
                scales: vec![1.0, 0.3, 2.5],
            },
            0,
        )
        .unwrap();
        let rep = check_l22(&distances(&f.points));
        assert!(rep.exact_valid);
        assert!((rep.beta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn planted_meets_beta_floor() {
        let f = generate(&FixtureKind::planted(3, 10, 0.05), 0).unwrap();
        assert_eq!(f.points.n(), 8);
        assert_eq!(f.points.dim(), 10);
        let beta = approx_beta(&distances(&f.points)).unwrap();
        assert_eq!(f.beta, Some(beta));
        assert!(beta >= 0.9);
    }

    #[test]
    fn planted_binary_noise_is_exact() {
        let kind = FixtureKind::PlantedLowRank {
            rank: 3,
            dim: 9,
            noise: 0.2,
            noise_kind: NoiseKind::Binary,
            points: Some(6),
            beta_floor: 1.0,
            max_retries: 1,
        };
        let f = generate(&kind, 3).unwrap();
        assert!(check_l22(&distances(&f.points)).exact_valid);
    }

    #[test]
    fn planted_infeasible_floor() {
        let kind = FixtureKind::PlantedLowRank {
            rank: 2,
            dim: 12,
            noise: 1.0,
            noise_kind: NoiseKind::Gaussian,
            points: None,
            beta_floor: 1.01,
            max_retries: 3,
        };
        assert!(matches!(
            generate(&kind, 0),
            Err(Error::FixtureInfeasible(_))
        ));
    }

    #[test]
    fn duplicate_endpoints_shapes() {
        let cube = hypercube(3).unwrap();
        assert_eq!(duplicate_endpoints(&cube, 1).unwrap(), cube);

        let two = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let dup = duplicate_endpoints(&two, 10).unwrap();
        assert_eq!(dup.n(), 20);
        assert!(check_l22(&distances(&dup)).exact_valid);

        let dup = duplicate_endpoints(&cube, 5).unwrap();
        assert_eq!(dup.n(), 8 + 8);
        // first antipodal pair is 000 / 111
        assert_eq!(dup.point(8), vec![0.0, 0.0, 0.0]);
        assert_eq!(dup.point(15), vec![1.0, 1.0, 1.0]);
        assert!(check_l22(&distances(&dup)).exact_valid);
    }
}
