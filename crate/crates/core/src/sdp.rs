//! The Goemans-Linial relaxation of uniform sparsest cut, at desk scale.
//!
//! ```text
//! minimize   (1/n^2) sum_{i,j} c_ij |x_i - x_j|^2
//! subject to |x_i - x_j|^2 + |x_j - x_k|^2 >= |x_i - x_k|^2   for all i, j, k
//!            sum_{k,l} |x_k - x_l|^2 = n^2
//! ```
//!
//! Solutions are translation invariant, so the Gram matrix is restricted to
//! the complement of the all-ones vector: `X = Q Y Q^T` with `Q` an
//! orthonormal basis of `1^perp`. The spread constraint becomes
//! `tr Y = n/2`. The problem over `Y` is solved by ADMM on the dual
//! (alternating projections onto the PSD cone and the nonnegative orthant
//! for triangle slacks). Triangle constraints enter through an active set
//! grown by full violation scans between rounds. The last iterate is made
//! exactly feasible by mixing with the uniform solution `dist = n/(n-1)`,
//! which satisfies every triangle constraint with slack.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metric::{DistanceMatrix, PointSet};

pub const SDP_MAX_N: usize = 32;
/// Gram eigenvalues at or below this are dropped when extracting vectors.
pub const EXTRACT_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdpOptions {
    /// Feasibility and optimality tolerance.
    pub tol: f64,
    /// ADMM iterations allowed per active-set round.
    pub max_iter: usize,
    pub max_rounds: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
            max_rounds: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdpResiduals {
    /// `max(0, d(i,k) - d(i,j) - d(j,k))` over all triples.
    pub max_triangle_violation: f64,
    /// `|sum_{k,l} d(k,l) - n^2| / n^2`.
    pub spread_violation: f64,
    pub min_gram_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub gram: DMatrix<f64>,
    pub dist: DistanceMatrix,
    pub objective: f64,
    pub residuals: SdpResiduals,
    /// Vectors behind `gram`, one row per vertex.
    pub points: PointSet,
    pub converged: bool,
    pub iterations: usize,
    pub rounds: usize,
    pub active_constraints: usize,
    /// Relative primal/dual gap of the last ADMM round.
    pub gap: f64,
}

impl SdpSolution {
    pub fn n(&self) -> usize {
        self.gram.nrows()
    }
}

/// A triangle `(i, j, k)`: `d(i,j) + d(j,k) - d(i,k) >= 0`, with `i < k`.
type Triple = [usize; 3];

struct Problem {
    n: usize,
    q: DMatrix<f64>,
    /// Objective in `Y` coordinates, scaled to unit Frobenius norm.
    cost: DMatrix<f64>,
}

/// Orthonormal basis of the complement of the all-ones vector.
fn helmert(n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n - 1);
    for k in 1..n {
        let kf = k as f64;
        let norm = (kf * (kf + 1.0)).sqrt();
        for i in 0..k {
            q[(i, k - 1)] = 1.0 / norm;
        }
        q[(k, k - 1)] = -kf / norm;
    }
    q
}

fn dist_from_gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (x[(i, i)] + x[(j, j)] - 2.0 * x[(i, j)]).max(0.0)
        }
    })
}

fn raw_dist_from_gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| x[(i, i)] + x[(j, j)] - 2.0 * x[(i, j)])
}

#[inline]
fn slack(d: &DMatrix<f64>, t: &Triple) -> f64 {
    d[(t[0], t[1])] + d[(t[1], t[2])] - d[(t[0], t[2])]
}

/// `(e_p . e_q)^2` for difference vectors of pairs `p`, `q`.
#[inline]
fn pair_overlap(p: (usize, usize), q: (usize, usize)) -> f64 {
    let dot = f64::from(u8::from(p.0 == q.0))
        - f64::from(u8::from(p.0 == q.1))
        - f64::from(u8::from(p.1 == q.0))
        + f64::from(u8::from(p.1 == q.1));
    dot * dot
}

fn triple_pairs(t: &Triple) -> [((usize, usize), f64); 3] {
    [
        ((t[0], t[1]), 1.0),
        ((t[1], t[2]), 1.0),
        ((t[0], t[2]), -1.0),
    ]
}

impl Problem {
    fn new(g: &Graph) -> Self {
        let n = g.n();
        let q = helmert(n);
        let lap = g.laplacian();
        let cost = q.transpose() * lap * &q * (2.0 / (n * n) as f64);
        let scale = cost.norm().max(f64::MIN_POSITIVE);
        Self {
            n,
            q,
            cost: cost / scale,
        }
    }

    fn m0(&self) -> usize {
        self.n - 1
    }

    fn gram(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        &self.q * y * self.q.transpose()
    }

    /// `Q^T L_w Q` for the Laplacian of pair weights accumulated from `coef`.
    fn adjoint(&self, active: &[Triple], coef: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let mut lap = DMatrix::zeros(n, n);
        for (t, &c) in active.iter().zip(coef) {
            if c == 0.0 {
                continue;
            }
            for ((a, b), s) in triple_pairs(t) {
                let w = s * c;
                lap[(a, a)] += w;
                lap[(b, b)] += w;
                lap[(a, b)] -= w;
                lap[(b, a)] -= w;
            }
        }
        self.q.transpose() * lap * &self.q
    }

    /// `A A^T` for rows `[trace, triangle_1 - s_1, ...]`.
    fn normal_matrix(&self, active: &[Triple]) -> DMatrix<f64> {
        let m = active.len();
        let mut k = DMatrix::zeros(m + 1, m + 1);
        k[(0, 0)] = self.m0() as f64;
        for a in 0..m {
            k[(0, a + 1)] = 2.0;
            k[(a + 1, 0)] = 2.0;
            let pa = triple_pairs(&active[a]);
            for b in a..m {
                let pb = triple_pairs(&active[b]);
                let mut v = 0.0;
                for (p, sp) in pa {
                    for (q, sq) in pb {
                        v += sp * sq * pair_overlap(p, q);
                    }
                }
                if a == b {
                    v += 1.0;
                }
                k[(a + 1, b + 1)] = v;
                k[(b + 1, a + 1)] = v;
            }
        }
        k
    }
}

struct Iterate {
    // primal
    y: DMatrix<f64>,
    s: Vec<f64>,
    // dual
    mult: DVector<f64>,
    z_mat: DMatrix<f64>,
    z_s: Vec<f64>,
    mu: f64,
}

struct RoundStats {
    iterations: usize,
    converged: bool,
    gap: f64,
}

fn psd_split(v: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::try_new(v.clone(), 1e-15, 10_000)
        .ok_or(Error::SpectralFailure("psd projection did not converge"))?;
    let m = v.nrows();
    let vecs = &eig.eigenvectors;
    let mut pos = DMatrix::zeros(m, m);
    let mut neg = DMatrix::zeros(m, m);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let col = vecs.column(k);
        if lam > 0.0 {
            pos.ger(lam, &col, &col, 1.0);
        } else if lam < 0.0 {
            neg.ger(-lam, &col, &col, 1.0);
        }
    }
    Ok((pos, neg))
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn admm_round(
    prob: &Problem,
    active: &[Triple],
    it: &mut Iterate,
    tol: f64,
    max_iter: usize,
) -> Result<RoundStats> {
    let m = active.len();
    let m0 = prob.m0();
    let normal = Cholesky::<f64, Dyn>::new(prob.normal_matrix(active)).ok_or(
        Error::SpectralFailure("normal equations are not positive definite"),
    )?;
    // scaled problem: tr Y = 1
    let b0 = 1.0;
    let c_norm = 1.0;
    let mut stats = RoundStats {
        iterations: 0,
        converged: false,
        gap: f64::INFINITY,
    };
    let (mut pinf_acc, mut dinf_acc) = (0.0, 0.0);

    for iter in 1..=max_iter {
        // A x - b
        let d = raw_dist_from_gram(&prob.gram(&it.y));
        let mut resid = DVector::zeros(m + 1);
        resid[0] = it.y.trace() - b0;
        for (a, t) in active.iter().enumerate() {
            resid[a + 1] = slack(&d, t) - it.s[a];
        }
        // A (c - z)
        let cz = &prob.cost - &it.z_mat;
        let dcz = raw_dist_from_gram(&prob.gram(&cz));
        let mut rhs = DVector::zeros(m + 1);
        rhs[0] = cz.trace();
        for (a, t) in active.iter().enumerate() {
            rhs[a + 1] = slack(&dcz, t) + it.z_s[a];
        }
        let rhs = -&resid * it.mu + rhs;
        it.mult = normal.solve(&rhs);

        // V = c - A^T y - mu x
        let aty =
            prob.adjoint(active, &it.mult.as_slice()[1..]) + DMatrix::identity(m0, m0) * it.mult[0];
        let v_mat = sym(&prob.cost - &aty - &it.y * it.mu);
        let v_s: Vec<f64> = (0..m).map(|a| it.mult[a + 1] - it.mu * it.s[a]).collect();

        let (pos, neg) = psd_split(&v_mat)?;
        let y_new = neg / it.mu;
        let s_new: Vec<f64> = v_s.iter().map(|v| (-v).max(0.0) / it.mu).collect();
        it.z_mat = pos;
        it.z_s = v_s.iter().map(|v| v.max(0.0)).collect();

        let dy = (&y_new - &it.y).norm_squared()
            + s_new
                .iter()
                .zip(&it.s)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        let dinf = it.mu * dy.sqrt() / (1.0 + c_norm);
        it.y = y_new;
        it.s = s_new;

        let pinf = resid.norm() / (1.0 + b0);
        let pobj = prob.cost.dot(&it.y);
        let dobj = b0 * it.mult[0];
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        stats.iterations = iter;
        stats.gap = gap;
        if pinf.max(dinf).max(gap) < tol {
            stats.converged = true;
            break;
        }

        // residual balancing on the penalty
        pinf_acc += pinf;
        dinf_acc += dinf;
        if iter % 20 == 0 {
            let ratio = pinf_acc / dinf_acc.max(1e-300);
            if ratio > 5.0 {
                it.mu = (it.mu * 1.6).min(1e6);
            } else if ratio < 0.2 {
                it.mu = (it.mu / 1.6).max(1e-6);
            }
            pinf_acc = 0.0;
            dinf_acc = 0.0;
        }
    }
    Ok(stats)
}

fn all_triples(n: usize) -> impl Iterator<Item = Triple> {
    (0..n).flat_map(move |i| {
        ((i + 1)..n).flat_map(move |k| {
            (0..n)
                .filter(move |&j| j != i && j != k)
                .map(move |j| [i, j, k])
        })
    })
}

/// Largest violation `max(0, -slack)` over all triples.
fn max_violation(d: &DMatrix<f64>) -> f64 {
    all_triples(d.nrows())
        .map(|t| -slack(d, &t))
        .fold(0.0, f64::max)
}

/// Solves SDP-1 for `g`. Non-convergence is reported in the solution, not as an error.
pub fn solve_gl_sdp(g: &Graph, opts: &SdpOptions) -> Result<SdpSolution> {
    let n = g.n();
    if n > SDP_MAX_N {
        return Err(Error::TooLarge { n, max: SDP_MAX_N });
    }
    if n < 2 {
        return Err(Error::InvalidInput("sdp needs n >= 2".into()));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let prob = Problem::new(g);
    let m0 = prob.m0();
    let inner_tol = opts.tol * 1e-3;
    let mut it = Iterate {
        y: DMatrix::identity(m0, m0) / m0 as f64,
        s: Vec::new(),
        mult: DVector::zeros(1),
        z_mat: DMatrix::zeros(m0, m0),
        z_s: Vec::new(),
        mu: 1.0,
    };
    let mut active: Vec<Triple> = Vec::new();
    let mut in_active = std::collections::HashSet::new();
    let mut iterations = 0;
    let mut rounds = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    // violation threshold in the scaled problem (tr Y = 1)
    let add_tol = inner_tol / n as f64;

    while rounds < opts.max_rounds {
        rounds += 1;
        let st = admm_round(&prob, &active, &mut it, inner_tol, opts.max_iter)?;
        iterations += st.iterations;
        gap = st.gap;

        let d = raw_dist_from_gram(&prob.gram(&it.y));
        let mut added = 0;
        for t in all_triples(n) {
            if slack(&d, &t) < -add_tol && in_active.insert(t) {
                active.push(t);
                it.s.push(0.0);
                it.z_s.push(0.0);
                added += 1;
            }
        }
        if added == 0 {
            converged = st.converged;
            break;
        }
    }

    finish(
        &prob,
        g,
        &it.y,
        converged,
        iterations,
        rounds,
        active.len(),
        gap,
        opts.tol,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    prob: &Problem,
    g: &Graph,
    y_scaled: &DMatrix<f64>,
    converged: bool,
    iterations: usize,
    rounds: usize,
    active: usize,
    gap: f64,
    tol: f64,
) -> Result<SdpSolution> {
    let n = prob.n;
    let m0 = prob.m0();
    let half = n as f64 / 2.0;

    // exact trace, then exact triangle feasibility by mixing with the uniform point
    let tr = y_scaled.trace();
    let mut y = if tr > 0.0 {
        y_scaled * (half / tr)
    } else {
        DMatrix::identity(m0, m0) * (half / m0 as f64)
    };
    let viol = max_violation(&raw_dist_from_gram(&prob.gram(&y)));
    if viol > 0.0 {
        let uniform_dist = n as f64 / (n as f64 - 1.0);
        let t = (viol / (viol + uniform_dist) * (1.0 + 1e-9)).min(1.0);
        y = &y * (1.0 - t) + DMatrix::identity(m0, m0) * (t * half / m0 as f64);
    }
    let gram = sym(prob.gram(&y));
    let dist = dist_from_gram(&gram);
    let total = dist.sum();
    let objective = g.weights().dot(&dist) / (n * n) as f64;

    let eig = SymmetricEigen::try_new(gram.clone(), 1e-15, 10_000).ok_or(
        Error::SpectralFailure("gram eigendecomposition did not converge"),
    )?;
    let min_gram_eigenvalue = eig.eigenvalues.min();
    let keep: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k] > EXTRACT_CUTOFF)
        .collect();
    let coords = DMatrix::from_fn(n, keep.len().max(1), |i, c| {
        keep.get(c).map_or(0.0, |&k| {
            eig.eigenvectors[(i, k)] * eig.eigenvalues[k].sqrt()
        })
    });
    let residuals = SdpResiduals {
        max_triangle_violation: max_violation(&dist),
        spread_violation: (total - (n * n) as f64).abs() / (n * n) as f64,
        min_gram_eigenvalue,
    };
    let feasible = residuals.max_triangle_violation <= tol && residuals.spread_violation <= tol;
    Ok(SdpSolution {
        gram,
        dist: DistanceMatrix::from_matrix(dist)?,
        objective,
        residuals,
        points: PointSet::new(coords)?,
        converged: converged && feasible,
        iterations,
        rounds,
        active_constraints: active,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::brute_force_phi;

    #[test]
    fn helmert_is_orthonormal_complement() {
        let q = helmert(6);
        let qtq = q.transpose() * &q;
        assert!((qtq - DMatrix::identity(5, 5)).norm() < 1e-14);
        let ones = DVector::from_element(6, 1.0);
        assert!((q.transpose() * ones).norm() < 1e-14);
    }

    #[test]
    fn single_edge() {
        let g = Graph::path(2).unwrap();
        let sol = solve_gl_sdp(&g, &SdpOptions::default()).unwrap();
        assert!((sol.dist.get(0, 1) - 2.0).abs() < 1e-12);
        // ordered pairs: (1/4) * (c*2 + c*2) = c
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert!(sol.converged);
    }

    #[test]
    fn complete_graph_objective_is_one() {
        let g = Graph::complete(4).unwrap();
        let sol = solve_gl_sdp(&g, &SdpOptions::default()).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!(sol.residuals.max_triangle_violation <= 1e-9);
    }

    #[test]
    fn relaxation_bound_on_small_graphs() {
        for g in [
            Graph::path(4).unwrap(),
            Graph::cycle(5).unwrap(),
            Graph::cycle(8).unwrap(),
        ] {
            let sol = solve_gl_sdp(&g, &SdpOptions::default()).unwrap();
            let phi = brute_force_phi(&g).unwrap().sparsity;
            assert!(sol.objective <= phi + 1e-5, "{} > {}", sol.objective, phi);
            assert!(sol.residuals.max_triangle_violation <= 1e-6);
            assert!(sol.residuals.spread_violation <= 1e-6);
            assert!(sol.residuals.min_gram_eigenvalue >= -1e-9);
            assert_eq!(sol.points.n(), g.n());
        }
    }

    #[test]
    fn too_large() {
        let g = Graph::path(33).unwrap();
        assert!(matches!(
            solve_gl_sdp(&g, &SdpOptions::default()),
            Err(Error::TooLarge { .. })
        ));
    }
}
