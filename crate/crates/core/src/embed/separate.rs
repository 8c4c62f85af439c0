//! Random-hyperplane search for two large, well separated sets.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::config::SearchConfig;
use crate::error::{Error, Result};
use crate::metric::{distances, DistanceMatrix, PointSet};
use crate::subspace::SubspaceReport;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatedPair {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// Exact `min_{i in L, j in R} d(i, j)`.
    pub delta: f64,
    /// `min(|L|, |R|) / n`.
    pub fraction: f64,
    pub direction: Vec<f64>,
    /// Directions tried up to and including the accepted one.
    pub attempts: usize,
    /// Required fraction.
    pub beta: f64,
    /// Separation threshold of the accepting level.
    pub threshold: f64,
}

/// Resolution, relative to the largest value, at which projections and
/// distances are ordered.
const SIGMA_GRID: f64 = 1e9;

pub(crate) enum Outcome {
    Found(SeparatedPair),
    NotFound {
        attempts: usize,
        /// Largest surviving left set seen, if any direction left one.
        best_left: Option<Vec<usize>>,
    },
}

struct Trial {
    left: Vec<usize>,
    right: Vec<usize>,
    direction: Vec<f64>,
}

pub fn find_separated_sets(
    points: &PointSet,
    report: &SubspaceReport,
    cfg: &SearchConfig,
    eta: f64,
) -> Result<SeparatedPair> {
    match search(points, report, cfg, eta)? {
        Outcome::Found(p) => Ok(p),
        Outcome::NotFound { attempts, .. } => Err(Error::NoSeparation { attempts }),
    }
}

/// Fraction used when the config leaves it open: `min(eta * spread / 32, 1/8)`.
pub fn default_fraction(eta: f64, spread: f64) -> f64 {
    (eta * spread / 32.0).min(0.125)
}

pub(crate) fn search(
    points: &PointSet,
    report: &SubspaceReport,
    cfg: &SearchConfig,
    eta: f64,
) -> Result<Outcome> {
    if report.basis.nrows() != points.dim() || report.r == 0 {
        return Err(Error::InvalidInput(
            "subspace basis does not match point dimension".into(),
        ));
    }
    let n = points.n();
    let dm = distances(points);
    if n < 2 || dm.spread() == 0.0 {
        return Ok(Outcome::NotFound {
            attempts: 0,
            best_left: None,
        });
    }
    let beta = cfg
        .target_fraction
        .unwrap_or_else(|| default_fraction(eta, dm.spread()));
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::InvalidInput(format!(
            "target fraction {beta} not in (0, 1/2)"
        )));
    }
    let tail = ((2.0 * beta * n as f64).ceil() as usize).clamp(1, n / 2);
    let need = beta * n as f64;

    let mut threshold = cfg.delta_init / (report.r as f64).sqrt();
    let mut best_left: Option<Vec<usize>> = None;
    for level in 0..cfg.levels {
        let trials: Vec<Trial> = (0..cfg.max_directions)
            .into_par_iter()
            .map(|k| {
                let id = (level * cfg.max_directions + k) as u64;
                run_trial(points, &dm, &report.basis, cfg.seed, id, tail, threshold)
            })
            .collect();
        for (k, t) in trials.into_iter().enumerate() {
            let size = t.left.len().min(t.right.len());
            if size as f64 >= need && size > 0 {
                let attempts = level * cfg.max_directions + k + 1;
                return certify(&dm, t, beta, threshold, attempts).map(Outcome::Found);
            }
            if !t.left.is_empty() && best_left.as_ref().is_none_or(|b| t.left.len() > b.len()) {
                best_left = Some(t.left);
            }
        }
        threshold *= cfg.delta_decay;
    }
    Ok(Outcome::NotFound {
        attempts: cfg.levels * cfg.max_directions,
        best_left,
    })
}

fn run_trial(
    points: &PointSet,
    dm: &DistanceMatrix,
    basis: &DMatrix<f64>,
    seed: u64,
    id: u64,
    tail: usize,
    threshold: f64,
) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    let r = basis.ncols();
    let mut g = DVector::from_fn(r, |_, _| StandardNormal.sample(&mut rng));
    while g.norm() == 0.0 {
        g = DVector::from_fn(r, |_, _| StandardNormal.sample(&mut rng));
    }
    let u = basis * g.normalize();
    let sigma = points.coords() * &u;

    // Projections equal up to round-off count as ties and fall back to index
    // order; directions inside the span often hit whole groups of equal values.
    let n = points.n();
    let top = sigma.amax().max(f64::MIN_POSITIVE);
    let key: Vec<i64> = sigma
        .iter()
        .map(|s| (s / top * SIGMA_GRID).round() as i64)
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&a| (key[a], a));
    let left0 = &order[..tail];
    let right0 = &order[n - tail..];

    let mut close: Vec<(f64, usize, usize)> = Vec::new();
    for &i in left0 {
        for &j in right0 {
            let d = dm.get(i, j);
            if d < threshold {
                close.push((d, i, j));
            }
        }
    }
    let dmax = dm.max();
    close.sort_by_key(|&(d, i, j)| ((d / dmax * SIGMA_GRID).round() as i64, i, j));
    let mut gone = vec![false; n];
    for (_, i, j) in close {
        if !gone[i] && !gone[j] {
            gone[i] = true;
            gone[j] = true;
        }
    }
    let keep = |s: &[usize]| {
        let mut v: Vec<usize> = s.iter().copied().filter(|&i| !gone[i]).collect();
        v.sort_unstable();
        v
    };
    Trial {
        left: keep(left0),
        right: keep(right0),
        direction: u.iter().copied().collect(),
    }
}

fn certify(
    dm: &DistanceMatrix,
    t: Trial,
    beta: f64,
    threshold: f64,
    attempts: usize,
) -> Result<SeparatedPair> {
    let n = dm.n();
    if t.left.iter().any(|i| t.right.contains(i)) {
        return Err(Error::InternalCaseFailure("separated sets overlap".into()));
    }
    let delta = dm.between(&t.left, &t.right);
    let fraction = t.left.len().min(t.right.len()) as f64 / n as f64;
    if delta < threshold || fraction < beta {
        return Err(Error::InternalCaseFailure(format!(
            "separation certificate failed: delta {delta}, fraction {fraction}"
        )));
    }
    Ok(SeparatedPair {
        left: t.left,
        right: t.right,
        delta,
        fraction,
        direction: t.direction,
        attempts,
        beta,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::hypercube;
    use crate::metric::normalize;
    use crate::subspace::ssr;

    fn clusters(k: usize) -> PointSet {
        let mut rows = vec![vec![0.0, 0.0]; k];
        rows.extend(vec![vec![1.0, 0.0]; k]);
        PointSet::from_rows(&rows).unwrap()
    }

    #[test]
    fn two_clusters_first_attempt() {
        let ps = clusters(6);
        let rep = ssr(&ps, 0.5).unwrap();
        let cfg = SearchConfig {
            target_fraction: Some(0.25),
            ..SearchConfig::default()
        };
        let p = find_separated_sets(&ps, &rep, &cfg, 0.5).unwrap();
        assert_eq!(p.attempts, 1);
        assert_eq!(p.delta, 1.0);
        let (mut a, mut b) = (p.left.clone(), p.right.clone());
        if a[0] > b[0] {
            std::mem::swap(&mut a, &mut b);
        }
        assert_eq!(a, (0..6).collect::<Vec<_>>());
        assert_eq!(b, (6..12).collect::<Vec<_>>());
    }

    #[test]
    fn identical_points_fail() {
        let ps = PointSet::from_rows(&vec![vec![1.0, 2.0]; 5]).unwrap();
        let rep = SubspaceReport {
            r: 1,
            eta: 0.5,
            captured: 0.0,
            basis: DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            sigma: vec![0.0, 0.0],
        };
        let err = find_separated_sets(&ps, &rep, &SearchConfig::default(), 0.5).unwrap_err();
        assert!(matches!(err, Error::NoSeparation { .. }));
    }

    #[test]
    fn cube8_certificate() {
        let (ps, _) = normalize(&hypercube(8).unwrap()).unwrap();
        let rep = ssr(&ps, 0.5).unwrap();
        let p = find_separated_sets(&ps, &rep, &SearchConfig::default(), 0.5).unwrap();
        let dm = distances(&ps);
        let mut exact = f64::INFINITY;
        for &i in &p.left {
            for &j in &p.right {
                exact = exact.min(dm.get(i, j));
            }
        }
        assert_eq!(p.delta, exact);
        assert!(p.fraction >= p.beta);
        assert!(p.delta * 8f64.sqrt() >= 0.1);
    }

    #[test]
    fn seeded_runs_repeat() {
        let (ps, _) = normalize(&hypercube(6).unwrap()).unwrap();
        let rep = ssr(&ps, 0.5).unwrap();
        let cfg = SearchConfig {
            seed: 11,
            ..SearchConfig::default()
        };
        let a = find_separated_sets(&ps, &rep, &cfg, 0.5).unwrap();
        let b = find_separated_sets(&ps, &rep, &cfg, 0.5).unwrap();
        assert_eq!(a, b);
    }
}
