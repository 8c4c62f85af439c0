//! Approximate dimension of a point set.
//!
//! The difference matrix `M` has one column `x_i - x_j` per pair `i < j`.
//! Since `M M^T = n * Xc^T Xc` for the centered data matrix `Xc`, the
//! spectrum is computed from the `n x d` centered matrix scaled by `sqrt(n)`
//! instead of the `n(n-1)/2`-column pair matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::{laplacian_spectrum, Graph};
use crate::metric::{distances, DistanceMatrix, PointSet};
use crate::sdp::SdpSolution;

pub const SVD_EPS: f64 = 1e-12;
pub const SVD_MAX_ITER: usize = 1000;
/// Singular values below this fraction of `sigma_1` count as zero.
pub const RANK_CUTOFF: f64 = 1e-12;
/// Tolerance for the Von Neumann comparison.
pub const VON_NEUMANN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceReport {
    pub r: usize,
    pub eta: f64,
    pub captured: f64,
    /// `d x r`, orthonormal columns spanning the projector.
    pub basis: DMatrix<f64>,
    /// All singular values of the difference matrix, descending.
    pub sigma: Vec<f64>,
}

impl SubspaceReport {
    pub fn to_json(&self, full: bool) -> serde_json::Value {
        let mut v = json!({
            "r": self.r,
            "eta": self.eta,
            "captured": self.captured,
            "sigma": self.sigma,
        });
        if full {
            let cols: Vec<Vec<f64>> = self
                .basis
                .column_iter()
                .map(|c| c.iter().copied().collect())
                .collect();
            v["basis"] = json!(cols);
        }
        v
    }
}

fn centered(points: &PointSet) -> DMatrix<f64> {
    let mean = points.centroid();
    let mut c = points.coords().clone();
    for mut row in c.row_iter_mut() {
        for (v, m) in row.iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    c
}

struct Decomposition {
    sigma: Vec<f64>,
    /// Right singular vectors of the centered matrix, as columns, in `sigma` order.
    directions: DMatrix<f64>,
}

fn decompose(points: &PointSet) -> Result<Decomposition> {
    // Factoring out the largest entry makes inputs that differ by a positive
    // scalar decompose identically.
    let c = centered(points);
    let amax = c.amax();
    let scale = (points.n() as f64).sqrt() * amax;
    let m = if amax > 0.0 { c / amax } else { c };
    let mut svd = m
        .try_svd(false, true, SVD_EPS, SVD_MAX_ITER)
        .ok_or(Error::SpectralFailure("svd did not converge"))?;
    svd.singular_values *= scale;
    let v_t = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    // Near-equal values keep the solver's order, so round-off cannot reshuffle
    // directions inside a degenerate singular space.
    let top = svd.singular_values.max().max(f64::MIN_POSITIVE);
    let key = |k: usize| (svd.singular_values[k] / top * 1e10).round() as i64;
    order.sort_by_key(|&k| std::cmp::Reverse(key(k)));
    let sigma: Vec<f64> = order
        .iter()
        .map(|&k| svd.singular_values[k].max(0.0))
        .collect();
    let mut directions = DMatrix::from_fn(points.dim(), order.len(), |i, k| v_t[(order[k], i)]);
    canonicalize_ties(&sigma, &mut directions);
    Ok(Decomposition { sigma, directions })
}

/// Relative gap below which singular values count as tied.
const TIE_TOL: f64 = 1e-9;

/// Fixes the sign of isolated directions and replaces each block of
/// directions with tied singular values by the Gram-Schmidt basis of the
/// projected coordinate axes. The solver's choice
/// inside a degenerate singular space is arbitrary and jumps under round-off;
/// the projected axes depend only on the space itself.
fn canonicalize_ties(sigma: &[f64], dirs: &mut DMatrix<f64>) {
    let top = sigma.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return;
    }
    let d = dirs.nrows();
    let mut start = 0;
    while start < sigma.len() {
        let mut end = start + 1;
        while end < sigma.len() && (sigma[start] - sigma[end]) <= TIE_TOL * top {
            end += 1;
        }
        let m = end - start;
        if m == 1 {
            // Fix the sign: the first entry of near-maximal magnitude is positive.
            let mut col = dirs.column_mut(start);
            let big = col.amax();
            if let Some(k) = col.iter().position(|v| v.abs() >= big - TIE_TOL * big) {
                if col[k] < 0.0 {
                    col.neg_mut();
                }
            }
        } else if sigma[start] > RANK_CUTOFF * top {
            let block = dirs.columns(start, m).into_owned();
            let mut accepted: Vec<DVector<f64>> = Vec::with_capacity(m);
            for axis in 0..d {
                if accepted.len() == m {
                    break;
                }
                let mut w = &block * block.row(axis).transpose();
                // two passes keep the result orthogonal to working precision
                for _ in 0..2 {
                    for a in &accepted {
                        let c = a.dot(&w);
                        w -= a * c;
                    }
                }
                let norm = w.norm();
                if norm > 1e-6 {
                    accepted.push(w / norm);
                }
            }
            if accepted.len() == m {
                for (k, a) in accepted.iter().enumerate() {
                    dirs.set_column(start + k, a);
                }
            }
        }
        start = end;
    }
}

/// Singular values of the pair-difference matrix, descending, `min(n, d)` of them.
pub fn singular_spectrum(points: &PointSet) -> Result<Vec<f64>> {
    if points.n() < 2 {
        return Err(Error::InvalidInput("spectrum needs n >= 2".into()));
    }
    Ok(decompose(points)?.sigma)
}

/// Fraction of `sum_{i,j} |x_i - x_j|^2` kept by projecting onto the column span of `basis`.
///
/// `basis` must have orthonormal columns.
pub fn energy_captured(points: &PointSet, basis: &DMatrix<f64>) -> f64 {
    let c = centered(points);
    let total = c.norm_squared();
    if total == 0.0 {
        return 0.0;
    }
    (c * basis).norm_squared() / total
}

/// eta-subspace rank: the smallest `r` whose top-`r` singular directions keep
/// at least an `eta` fraction of the squared pairwise-difference energy.
pub fn ssr(points: &PointSet, eta: f64) -> Result<SubspaceReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "eta must be in (0, 1], got {eta}"
        )));
    }
    if points.n() < 2 {
        return Err(Error::ZeroSpread);
    }
    let dec = decompose(points)?;
    let sq: Vec<f64> = dec.sigma.iter().map(|s| s * s).collect();
    let total: f64 = sq.iter().sum();
    let top = dec.sigma[0];
    if total <= 0.0 || top <= 0.0 {
        return Err(Error::ZeroSpread);
    }
    let numeric_rank = dec.sigma.iter().filter(|&&s| s > RANK_CUTOFF * top).count();

    // Ties at the threshold go to the smaller rank.
    let target = eta * total - SVD_EPS * total;
    let mut acc = 0.0;
    let mut r = numeric_rank;
    for (t, v) in sq.iter().enumerate() {
        acc += v;
        if acc >= target {
            r = t + 1;
            break;
        }
    }
    let r = r.clamp(1, numeric_rank.max(1));
    let captured = sq[..r].iter().sum::<f64>() / total;
    let basis = dec.directions.columns(0, r).into_owned();
    Ok(SubspaceReport {
        r,
        eta,
        captured,
        basis,
        sigma: dec.sigma,
    })
}

/// Squared distances between projections `f(i) = P x_i`.
#[derive(Debug, Clone)]
pub struct ProjectedDistances {
    /// Projection coordinates in the basis of the report (`n x r`).
    pub images: PointSet,
    pub df: DistanceMatrix,
}

impl ProjectedDistances {
    pub fn n(&self) -> usize {
        self.df.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.df.get(i, j)
    }

    /// `max_{i,j in set} d_f(i,j)`; zero for sets of size < 2.
    pub fn diam_of(&self, set: &[usize]) -> f64 {
        let mut m: f64 = 0.0;
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                m = m.max(self.df.get(i, j));
            }
        }
        m
    }

    pub fn to_set(&self, i: usize, set: &[usize]) -> f64 {
        self.df.to_set(i, set)
    }
}

pub fn project(points: &PointSet, report: &SubspaceReport) -> Result<ProjectedDistances> {
    if report.basis.nrows() != points.dim() || report.r == 0 {
        return Err(Error::InvalidInput(format!(
            "report basis is {}x{}, points have dimension {}",
            report.basis.nrows(),
            report.basis.ncols(),
            points.dim()
        )));
    }
    let images = PointSet::new(points.coords() * &report.basis)?;
    let df = distances(&images);
    Ok(ProjectedDistances { images, df })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VonNeumannCheck {
    pub r: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares the tail singular mass of an SDP solution against
/// `phi_sdp / (lambda_r / n)`, with `r` 1-based.
pub fn von_neumann_check(sdp: &SdpSolution, graph: &Graph, r: usize) -> Result<VonNeumannCheck> {
    let spectrum = laplacian_spectrum(graph)?;
    von_neumann_with(sdp, &spectrum.eigenvalues, r)
}

pub(crate) fn von_neumann_with(
    sdp: &SdpSolution,
    lambda: &[f64],
    r: usize,
) -> Result<VonNeumannCheck> {
    let n = sdp.n();
    if r == 0 || r > n || lambda.len() != n {
        return Err(Error::InvalidInput(format!(
            "r must be in 1..={n}, got {r}"
        )));
    }
    let mut sq = gram_spectrum(&sdp.gram)?;
    sq.resize(n, 0.0);
    let total: f64 = sq.iter().sum();
    let lhs = if total > 0.0 {
        sq[r - 1..].iter().sum::<f64>() / total
    } else {
        0.0
    };
    let lam = lambda[r - 1];
    let rhs = if lam > 1e-12 {
        sdp.objective / (lam / n as f64)
    } else {
        f64::INFINITY
    };
    Ok(VonNeumannCheck {
        r,
        lhs,
        rhs,
        holds: lhs <= rhs + VON_NEUMANN_TOL,
    })
}

/// Squared singular values of the difference matrix of the vectors behind a
/// Gram matrix, descending. These are `n` times the eigenvalues of the
/// centered Gram matrix.
fn gram_spectrum(gram: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = gram.nrows();
    let centering = DMatrix::from_fn(n, n, |i, j| f64::from(u8::from(i == j)) - 1.0 / n as f64);
    let g = &centering * gram * &centering;
    let eig = SymmetricEigen::try_new(g, SVD_EPS, SVD_MAX_ITER).ok_or(Error::SpectralFailure(
        "gram eigendecomposition did not converge",
    ))?;
    let mut vals: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0) * n as f64)
        .collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::hypercube;

    /// Columns `x_i - x_j` for `i < j`.
    fn pair_matrix(p: &PointSet) -> DMatrix<f64> {
        let n = p.n();
        let mut cols = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                cols.push((p.coords().row(i) - p.coords().row(j)).transpose());
            }
        }
        DMatrix::from_columns(&cols)
    }

    fn explicit_sigma(p: &PointSet) -> Vec<f64> {
        let mut s: Vec<f64> = pair_matrix(p).singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    #[test]
    fn two_points_rank_one() {
        let p = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let s = singular_spectrum(&p).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!(s[1].abs() < 1e-12);
        for eta in [0.1, 0.5, 1.0] {
            let rep = ssr(&p, eta).unwrap();
            assert_eq!(rep.r, 1);
            assert!((rep.captured - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_spectrum_matches_explicit_pair_matrix() {
        let cube = hypercube(3).unwrap();
        let ours = singular_spectrum(&cube).unwrap();
        let oracle = explicit_sigma(&cube);
        // 3 nonzero, equal: each direction carries n^2/4 * ... of the energy
        for t in 0..3 {
            assert!((ours[t] - oracle[t]).abs() < 1e-10 * oracle[0]);
            assert!((ours[t] * ours[t] - oracle[0] * oracle[0]).abs() < 1e-9);
        }
        // sum over i<j of Hamming = 8*8*3/2/2 = 48, split evenly
        assert!((oracle[0] * oracle[0] - 16.0).abs() < 1e-9);
    }

    #[test]
    fn duplicate_point_spectrum() {
        let base = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let dup = PointSet::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 2.0],
            vec![1.0, 0.0],
        ])
        .unwrap();
        for p in [&base, &dup] {
            let ours = singular_spectrum(p).unwrap();
            let oracle = explicit_sigma(p);
            for (a, b) in ours.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10 * oracle[0]);
            }
        }
    }

    #[test]
    fn cube_ssr_is_ceiling() {
        for d in 1..=6 {
            let cube = hypercube(d).unwrap();
            for eta in [0.25, 0.5, 0.75, 1.0] {
                let rep = ssr(&cube, eta).unwrap();
                assert_eq!(
                    rep.r,
                    ((eta * d as f64) - 1e-9).ceil() as usize,
                    "d={d} eta={eta}"
                );
                assert!(rep.captured >= eta - 1e-12);
            }
        }
    }

    #[test]
    fn rank_three_points_full_eta() {
        let cube = hypercube(3).unwrap();
        let emb = PointSet::new(DMatrix::from_fn(8, 7, |i, j| {
            if j < 3 {
                cube.coords()[(i, j)] + cube.coords()[(i, (j + 1) % 3)]
            } else {
                0.0
            }
        }))
        .unwrap();
        assert!(ssr(&emb, 1.0).unwrap().r <= 3);
    }

    #[test]
    fn ssr_rejects_bad_eta_and_zero_spread() {
        let p = PointSet::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(ssr(&p, 0.5), Err(Error::ZeroSpread)));
        let p = PointSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(ssr(&p, 0.0).is_err());
        assert!(ssr(&p, 1.5).is_err());
    }

    #[test]
    fn full_rank_projection_preserves_distances() {
        let cube = hypercube(4).unwrap();
        let rep = ssr(&cube, 1.0).unwrap();
        assert_eq!(rep.r, 4);
        let pd = project(&cube, &rep).unwrap();
        let dm = distances(&cube);
        for i in 0..16 {
            for j in 0..16 {
                assert!((pd.get(i, j) - dm.get(i, j)).abs() < 1e-10);
            }
        }
        assert!((pd.diam_of(&[0, 15, 3]) - 4.0).abs() < 1e-10);
        assert_eq!(pd.diam_of(&[2]), 0.0);
    }

    #[test]
    fn collinear_rank_one_projection_is_exact() {
        let p = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 2.0], vec![3.0, 6.0]]).unwrap();
        let rep = ssr(&p, 0.5).unwrap();
        assert_eq!(rep.r, 1);
        let pd = project(&p, &rep).unwrap();
        let dm = distances(&p);
        for i in 0..3 {
            for j in 0..3 {
                assert!((pd.get(i, j) - dm.get(i, j)).abs() < 1e-10);
            }
        }
    }
}
