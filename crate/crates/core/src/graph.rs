//! Weighted graphs, normalized Laplacian spectra and exact uniform sparsest cut.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest instance [`brute_force_phi`] will enumerate.
pub const BRUTE_FORCE_MAX_N: usize = 20;
const REGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    weights: DMatrix<f64>,
    degrees: Vec<f64>,
}

impl Graph {
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || weights.ncols() != n {
            return Err(Error::InvalidInput(
                "weight matrix must be square and nonempty".into(),
            ));
        }
        let mut any = false;
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "self-loop at vertex {}",
                    i + 1
                )));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidInput(format!("bad weight {w} at ({i},{j})")));
                }
                if w != weights[(j, i)] {
                    return Err(Error::InvalidInput(format!(
                        "asymmetric weight at ({i},{j})"
                    )));
                }
                any |= w > 0.0;
            }
        }
        if !any {
            return Err(Error::InvalidInput("graph has no positive weight".into()));
        }
        let degrees = (0..n).map(|i| weights.row(i).sum()).collect();
        Ok(Self { weights, degrees })
    }

    /// Builds from 0-based `(i, j, w)` triples; repeated edges accumulate.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut w = DMatrix::zeros(n, n);
        for &(i, j, wt) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({i},{j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidInput(format!(
                    "self-loop at vertex {}",
                    i + 1
                )));
            }
            w[(i, j)] += wt;
            w[(j, i)] += wt;
        }
        Self::from_weights(w)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn is_regular(&self) -> bool {
        let d0 = self.degrees[0];
        self.degrees
            .iter()
            .all(|d| (d - d0).abs() <= REGULAR_TOL * d0.abs().max(1.0))
    }

    /// Edges `(i, j, w)` with `i < j` and `w > 0`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.weights[(i, j)] > 0.0 {
                    out.push((i, j, self.weights[(i, j)]));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v] && self.weights[(u, v)] > 0.0 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Combinatorial Laplacian `D - W`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.degrees[i]
            } else {
                -self.weights[(i, j)]
            }
        })
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput("cycle needs n >= 3".into()));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j, 1.0));
            }
        }
        Self::from_edges(n, &edges)
    }

    /// Two `k`-cliques joined by the single edge `(k-1, k)`.
    pub fn two_cliques(k: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for base in [0, k] {
            for i in 0..k {
                for j in (i + 1)..k {
                    edges.push((base + i, base + j, 1.0));
                }
            }
        }
        edges.push((k - 1, k, 1.0));
        Self::from_edges(2 * k, &edges)
    }

    /// Erdos-Renyi `G(n, p)` with unit weights.
    pub fn gnp(n: usize, p: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j, 1.0));
                }
            }
        }
        Self::from_edges(n, &edges)
    }

    /// Weight crossing the cut given by a membership mask.
    pub fn cut_weight(&self, in_s: &[bool]) -> f64 {
        let n = self.n();
        let mut w = 0.0;
        for i in 0..n {
            if !in_s[i] {
                continue;
            }
            for j in 0..n {
                if !in_s[j] {
                    w += self.weights[(i, j)];
                }
            }
        }
        w
    }
}

/// Eigenpairs of `L_W = I - D^{-1/2} W D^{-1/2}`, ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    /// `lambda_r`, 1-based.
    pub fn lambda(&self, r: usize) -> f64 {
        self.eigenvalues[r - 1]
    }

    pub fn fiedler(&self) -> Vec<f64> {
        self.eigenvectors.column(1).iter().copied().collect()
    }
}

pub fn normalized_laplacian(g: &Graph) -> Result<DMatrix<f64>> {
    let n = g.n();
    if let Some(i) = g.degrees().iter().position(|&d| d <= 0.0) {
        return Err(Error::IsolatedVertex(i));
    }
    let inv_sqrt: Vec<f64> = g.degrees().iter().map(|d| 1.0 / d.sqrt()).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            -g.weight(i, j) * inv_sqrt[i] * inv_sqrt[j]
        }
    }))
}

pub fn laplacian_spectrum(g: &Graph) -> Result<Spectrum> {
    let l = normalized_laplacian(g)?;
    let eig = SymmetricEigen::try_new(l, 1e-14, 10_000).ok_or(Error::SpectralFailure(
        "laplacian eigendecomposition did not converge",
    ))?;
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(g.n(), g.n(), |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// A proper cut, stored by its canonical side: the smaller side, or the
/// side holding vertex 0 when both have equal size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cut {
    pub side: Vec<usize>,
    pub sparsity: f64,
}

impl Cut {
    pub fn new(g: &Graph, members: &[usize]) -> Result<Self> {
        let n = g.n();
        let mut mask = vec![false; n];
        for &v in members {
            if v >= n {
                return Err(Error::InvalidInput(format!("vertex {v} out of range")));
            }
            mask[v] = true;
        }
        Self::from_mask(g, &mask)
    }

    pub fn from_mask(g: &Graph, mask: &[bool]) -> Result<Self> {
        let k = mask.iter().filter(|&&b| b).count();
        let n = mask.len();
        if k == 0 || k == n {
            return Err(Error::EmptyOrFullCut);
        }
        let flip = 2 * k > n || (2 * k == n && !mask[0]);
        let side = (0..n).filter(|&v| mask[v] != flip).collect();
        Ok(Self {
            side,
            sparsity: g.cut_weight(mask) / (k * (n - k)) as f64,
        })
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in &self.side {
            m[v] = true;
        }
        m
    }
}

/// `Phi(S) = w(S, S^c) / (|S| |S^c|)`.
pub fn sparsity(g: &Graph, set: &[usize]) -> Result<f64> {
    Ok(Cut::new(g, set)?.sparsity)
}

/// `w(S, S^c) / min(vol S, vol S^c)`.
pub fn conductance(g: &Graph, mask: &[bool]) -> Result<f64> {
    let k = mask.iter().filter(|&&b| b).count();
    if k == 0 || k == mask.len() {
        return Err(Error::EmptyOrFullCut);
    }
    let vol_s: f64 = (0..g.n())
        .filter(|&v| mask[v])
        .map(|v| g.degrees()[v])
        .sum();
    let vol_all: f64 = g.degrees().iter().sum();
    Ok(g.cut_weight(mask) / vol_s.min(vol_all - vol_s))
}

/// Exact minimum sparsity over all `2^(n-1) - 1` proper cuts.
pub fn brute_force_phi(g: &Graph) -> Result<Cut> {
    let n = g.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    if n < 2 {
        return Err(Error::EmptyOrFullCut);
    }
    // Gray-code walk over subsets of {1..n-1}; vertex 0 stays outside S.
    let mut mask = vec![false; n];
    let mut cut = 0.0;
    let mut size = 0usize;
    let mut best: Option<(f64, Vec<bool>)> = None;
    let steps = 1u64 << (n - 1);
    for step in 1..steps {
        let bit = step.trailing_zeros() as usize;
        let v = bit + 1;
        let entering = !mask[v];
        let (mut same, mut other) = (0.0, 0.0);
        for u in 0..n {
            if u == v {
                continue;
            }
            if mask[u] == mask[v] {
                same += g.weight(u, v);
            } else {
                other += g.weight(u, v);
            }
        }
        cut += same - other;
        mask[v] = entering;
        if entering {
            size += 1;
        } else {
            size -= 1;
        }
        let phi = cut / (size * (n - size)) as f64;
        if best.as_ref().is_none_or(|(b, _)| phi < *b) {
            best = Some((phi, mask.clone()));
        }
    }
    let (_, mask) = best.expect("n >= 2 has a proper cut");
    Cut::from_mask(g, &mask)
}
