use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;
use crate::subspace::ProjectedDistances;

/// Which case of the dispatch produced an embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    DenseBall,
    ProjGood,
    ProjBad,
    ZeroSpread,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::DenseBall => "dense-ball",
            Branch::ProjGood => "proj-good",
            Branch::ProjBad => "proj-bad",
            Branch::ZeroSpread => "zero-spread",
        }
    }
}

/// The distance a Fréchet map was measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    Original,
    Projected,
}

/// `h(i) = min_{j in witness} dist(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineEmbedding {
    pub values: Vec<f64>,
    pub witness: Vec<usize>,
    /// Set by the dispatch; `None` for maps built directly.
    pub branch: Option<Branch>,
    pub distance_kind: DistanceKind,
}

fn check_witness(n: usize, set: &[usize]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidInput("witness set is empty".into()));
    }
    if let Some(&v) = set.iter().find(|&&v| v >= n) {
        return Err(Error::InvalidInput(format!(
            "witness index {v} out of range"
        )));
    }
    Ok(())
}

fn sorted_unique(set: &[usize]) -> Vec<usize> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

pub fn frechet_line(dm: &DistanceMatrix, set: &[usize]) -> Result<LineEmbedding> {
    check_witness(dm.n(), set)?;
    Ok(LineEmbedding {
        values: (0..dm.n()).map(|i| dm.to_set(i, set)).collect(),
        witness: sorted_unique(set),
        branch: None,
        distance_kind: DistanceKind::Original,
    })
}

/// Fréchet map under projected distances. Contractive for `d` too, since `d_f <= d`.
pub fn frechet_line_projected(pd: &ProjectedDistances, set: &[usize]) -> Result<LineEmbedding> {
    check_witness(pd.n(), set)?;
    Ok(LineEmbedding {
        values: (0..pd.n()).map(|i| pd.to_set(i, set)).collect(),
        witness: sorted_unique(set),
        branch: None,
        distance_kind: DistanceKind::Projected,
    })
}

/// `c = |S| * sum_{i not in S} d(i, S) / n^2`. The map `d(., S)` has average
/// distortion at most `spread / c`.
pub fn sufficient_condition_value(dm: &DistanceMatrix, set: &[usize]) -> Result<f64> {
    check_witness(dm.n(), set)?;
    let set = sorted_unique(set);
    let n = dm.n();
    let mut in_s = vec![false; n];
    for &v in &set {
        in_s[v] = true;
    }
    let outside: f64 = (0..n)
        .filter(|&i| !in_s[i])
        .map(|i| dm.to_set(i, &set))
        .sum();
    Ok(set.len() as f64 * outside / (n * n) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport {
    /// `sum d / sum |h_i - h_j|`; infinite when the image collapses.
    #[serde(serialize_with = "serialize_ratio")]
    pub avg_ratio: f64,
    #[serde(serialize_with = "serialize_ratio")]
    pub worst_ratio: f64,
    pub contraction_violations: usize,
    /// Set for the all-zero embedding of a zero-spread input.
    pub degenerate: bool,
}

pub(crate) fn serialize_ratio<S: serde::Serializer>(
    v: &f64,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

pub fn distortion(dm: &DistanceMatrix, emb: &LineEmbedding) -> Result<DistortionReport> {
    let n = dm.n();
    if emb.values.len() != n {
        return Err(Error::InvalidInput(format!(
            "embedding has {} values for {n} points",
            emb.values.len()
        )));
    }
    let h = &emb.values;
    let tol = crate::metric::TRIANGLE_TOL * dm.max().max(1.0);
    let (mut sd, mut sh) = (0.0, 0.0);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dm.get(i, j);
            let e = (h[i] - h[j]).abs();
            sd += d;
            sh += e;
            if e > d + tol {
                violations += 1;
            }
            if d > 0.0 {
                worst = worst.max(if e > 0.0 { d / e } else { f64::INFINITY });
            }
        }
    }
    let avg = if sd == 0.0 {
        1.0
    } else if sh == 0.0 {
        f64::INFINITY
    } else {
        sd / sh
    };
    Ok(DistortionReport {
        avg_ratio: avg,
        worst_ratio: if sd == 0.0 { 1.0 } else { worst },
        contraction_violations: violations,
        degenerate: sd == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::hypercube;
    use crate::metric::{distances, PointSet};

    fn weight(v: usize) -> f64 {
        v.count_ones() as f64
    }

    #[test]
    fn cube_origin_witness_is_hamming_weight() {
        let dm = distances(&hypercube(3).unwrap());
        let emb = frechet_line(&dm, &[0]).unwrap();
        for v in 0..8 {
            assert_eq!(emb.values[v], weight(v));
        }
        // |S| = 1: c = 1 * (sum of weights = 12) / 64
        assert_eq!(sufficient_condition_value(&dm, &[0]).unwrap(), 0.1875);
    }

    #[test]
    fn cube_distortion_matches_enumeration() {
        let dm = distances(&hypercube(3).unwrap());
        let emb = frechet_line(&dm, &[0]).unwrap();
        let (mut ham, mut wt) = (0.0, 0.0);
        for u in 0..8usize {
            for v in 0..8usize {
                ham += (u ^ v).count_ones() as f64;
                wt += (weight(u) - weight(v)).abs();
            }
        }
        let rep = distortion(&dm, &emb).unwrap();
        assert!((rep.avg_ratio - ham / wt).abs() < 1e-12);
        assert_eq!(rep.contraction_violations, 0);
        assert!(rep.avg_ratio <= rep.worst_ratio);
        // c bound: avg_ratio <= spread / c
        assert!(rep.avg_ratio <= dm.spread() / 0.1875 + 1e-12);
    }

    #[test]
    fn full_witness_collapses() {
        let dm = distances(&hypercube(2).unwrap());
        let emb = frechet_line(&dm, &[0, 1, 2, 3]).unwrap();
        assert!(emb.values.iter().all(|&v| v == 0.0));
        assert_eq!(sufficient_condition_value(&dm, &[3, 2, 1, 0]).unwrap(), 0.0);
        let rep = distortion(&dm, &emb).unwrap();
        assert!(rep.avg_ratio.is_infinite());
        let js = serde_json::to_value(&rep).unwrap();
        assert!(js["avg_ratio"].is_null());
    }

    #[test]
    fn two_points() {
        let ps = PointSet::from_rows(&[vec![0.0], vec![3.0]]).unwrap();
        let dm = distances(&ps);
        let rep = distortion(&dm, &frechet_line(&dm, &[1]).unwrap()).unwrap();
        assert_eq!(rep.avg_ratio, 1.0);
        assert_eq!(rep.worst_ratio, 1.0);
    }

    #[test]
    fn two_clusters_quarter() {
        let mut rows = vec![vec![0.0]; 5];
        rows.extend(vec![vec![1.0]; 5]);
        let dm = distances(&PointSet::from_rows(&rows).unwrap());
        let c = sufficient_condition_value(&dm, &[0, 1, 2, 3, 4]).unwrap();
        assert!((c - 0.25).abs() < 1e-15);
    }

    #[test]
    fn empty_witness_rejected() {
        let dm = distances(&hypercube(2).unwrap());
        assert!(frechet_line(&dm, &[]).is_err());
        assert!(frechet_line(&dm, &[4]).is_err());
    }
}
