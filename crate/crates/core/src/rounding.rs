//! Threshold rounding of line embeddings and the end-to-end sparsest-cut pipeline.

use serde::Serialize;

use crate::embed::{embed_case_dispatch, Branch, EmbedderConfig};
use crate::error::{Error, Result};
use crate::graph::{conductance, laplacian_spectrum, Cut, Graph};
use crate::sdp::{solve_gl_sdp, SdpOptions, SdpSolution, SDP_MAX_N};
use crate::subspace::{ssr, von_neumann_with, SubspaceReport, VonNeumannCheck};

/// Vertices sorted by value, ties by index.
fn sweep_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

fn check_values(g: &Graph, values: &[f64]) -> Result<()> {
    if values.len() != g.n() {
        return Err(Error::InvalidInput(format!(
            "{} values for a graph on {} vertices",
            values.len(),
            g.n()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("values must be finite".into()));
    }
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Err(Error::ConstantValues);
    }
    Ok(())
}

/// Best of the `n - 1` prefix cuts of the sorted order, scored by `score`.
/// Cut weights are updated incrementally.
fn sweep_by<F: Fn(f64, usize, f64) -> f64>(
    g: &Graph,
    order: &[usize],
    score: F,
) -> (Vec<bool>, f64) {
    let n = g.n();
    let mut mask = vec![false; n];
    let mut weight = 0.0;
    let mut vol = 0.0;
    let mut best = (f64::INFINITY, 0usize);
    for (k, &v) in order[..n - 1].iter().enumerate() {
        for u in 0..n {
            let w = g.weight(v, u);
            if u != v && w != 0.0 {
                weight += if mask[u] { -w } else { w };
            }
        }
        mask[v] = true;
        vol += g.degrees()[v];
        let s = score(weight, k + 1, vol);
        if s < best.0 {
            best = (s, k + 1);
        }
    }
    let mut out = vec![false; n];
    for &v in &order[..best.1] {
        out[v] = true;
    }
    (out, best.0)
}

/// Minimum-sparsity threshold cut of `values`.
pub fn sweep_cut(values: &[f64], g: &Graph) -> Result<Cut> {
    check_values(g, values)?;
    let n = g.n();
    let (mask, _) = sweep_by(g, &sweep_order(values), |w, k, _| w / (k * (n - k)) as f64);
    Cut::from_mask(g, &mask)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConductanceSweep {
    pub cut: Cut,
    pub conductance: f64,
    pub lambda2: f64,
}

/// Minimum-conductance threshold cut of `D^{-1/2} v_2`.
pub fn fiedler_sweep(g: &Graph) -> Result<ConductanceSweep> {
    let spec = laplacian_spectrum(g)?;
    let values = fiedler_values(g, &spec.fiedler());
    check_values(g, &values)?;
    let total: f64 = g.degrees().iter().sum();
    let (mask, _) = sweep_by(g, &sweep_order(&values), |w, _, vol| {
        w / vol.min(total - vol)
    });
    Ok(ConductanceSweep {
        conductance: conductance(g, &mask)?,
        cut: Cut::from_mask(g, &mask)?,
        lambda2: spec.lambda(2),
    })
}

fn fiedler_values(g: &Graph, v: &[f64]) -> Vec<f64> {
    v.iter()
        .zip(g.degrees())
        .map(|(x, d)| x / d.sqrt())
        .collect()
}

/// Where a rounded cut came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutSource {
    Embedding,
    SdpCoordinate,
    Fiedler,
    Component,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundedCut {
    pub cut: Cut,
    pub source: CutSource,
}

fn components(g: &Graph) -> Vec<bool> {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for u in 0..n {
            if !seen[u] && g.weight(v, u) > 0.0 {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen
}

/// Per-coordinate objective `sum_{i<j} w_ij (x_ic - x_jc)^2 / ((1/n) sum_{i<j} (x_ic - x_jc)^2)`.
fn coordinate_objectives(g: &Graph, sdp: &SdpSolution) -> Vec<f64> {
    let p = sdp.points.coords();
    let n = g.n();
    let spreads: Vec<f64> = (0..p.ncols())
        .map(|c| {
            let col = p.column(c);
            let mean = col.mean();
            // sum_{i<j} (a_i - a_j)^2 = n * sum_i (a_i - mean)^2
            n as f64 * col.iter().map(|a| (a - mean).powi(2)).sum::<f64>()
        })
        .collect();
    let top = spreads.iter().copied().fold(0.0, f64::max);
    (0..p.ncols())
        .map(|c| {
            if spreads[c] <= 1e-9 * top {
                return f64::NEG_INFINITY;
            }
            let num: f64 = g
                .edges()
                .iter()
                .map(|&(i, j, w)| w * (p[(i, c)] - p[(j, c)]).powi(2))
                .sum();
            num / (spreads[c] / n as f64)
        })
        .collect()
}

/// Threshold rounding for regular graphs: the SDP coordinate with the largest
/// per-coordinate objective and the Fiedler vector, whichever cut is sparser.
pub fn cheeger_round(g: &Graph, sdp: Option<&SdpSolution>) -> Result<RoundedCut> {
    if g.n() < 2 {
        return Err(Error::EmptyOrFullCut);
    }
    if !g.is_regular() {
        return Err(Error::NotRegular);
    }
    if !g.is_connected() {
        return Ok(RoundedCut {
            cut: Cut::from_mask(g, &components(g))?,
            source: CutSource::Component,
        });
    }
    let spec = laplacian_spectrum(g)?;
    let mut best = RoundedCut {
        cut: sweep_cut(&fiedler_values(g, &spec.fiedler()), g)?,
        source: CutSource::Fiedler,
    };
    if let Some(sdp) = sdp {
        if sdp.n() != g.n() {
            return Err(Error::InvalidInput(
                "SDP solution does not match the graph".into(),
            ));
        }
        let obj = coordinate_objectives(g, sdp);
        let c = (0..obj.len()).fold(0, |b, c| if obj[c] > obj[b] { c } else { b });
        if obj.get(c).is_some_and(|v| v.is_finite()) {
            let values: Vec<f64> = sdp.points.coords().column(c).iter().copied().collect();
            let cut = sweep_cut(&values, g)?;
            if cut.sparsity < best.cut.sparsity {
                best = RoundedCut {
                    cut,
                    source: CutSource::SdpCoordinate,
                };
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineDiagnostics {
    pub phi_sdp: f64,
    pub sdp_converged: bool,
    /// Normalized Laplacian eigenvalues, ascending.
    pub lambda: Vec<f64>,
    #[serde(skip)]
    pub ssr: SubspaceReport,
    pub branch: Branch,
    #[serde(serialize_with = "crate::embed::serialize_ratio")]
    pub avg_ratio: f64,
    pub von_neumann: VonNeumannCheck,
    pub embedding_cut: Option<Cut>,
    pub cheeger_cut: Option<RoundedCut>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineResult {
    pub cut: Cut,
    pub source: CutSource,
    pub diagnostics: PipelineDiagnostics,
}

impl PipelineResult {
    pub fn phi(&self) -> f64 {
        self.cut.sparsity
    }

    pub fn to_json(&self) -> serde_json::Value {
        let d = &self.diagnostics;
        serde_json::json!({
            "phi": self.cut.sparsity,
            "cut": self.cut.side.iter().map(|v| v + 1).collect::<Vec<_>>(),
            "source": self.source,
            "phi_sdp": d.phi_sdp,
            "sdp_converged": d.sdp_converged,
            "lambda": d.lambda,
            "ssr": d.ssr.to_json(false),
            "branch": d.branch.name(),
            "avg_ratio": if d.avg_ratio.is_finite() { serde_json::json!(d.avg_ratio) } else { serde_json::Value::Null },
            "von_neumann": d.von_neumann,
        })
    }
}

/// SDP relaxation, line embedding of its vectors, threshold rounding, and
/// (for regular graphs) coordinate rounding; returns the sparsest cut found.
pub fn sparsest_cut_pipeline(
    g: &Graph,
    cfg: &EmbedderConfig,
    opts: &SdpOptions,
) -> Result<PipelineResult> {
    let n = g.n();
    if n > SDP_MAX_N {
        return Err(Error::TooLarge { n, max: SDP_MAX_N });
    }
    if n < 2 {
        return Err(Error::EmptyOrFullCut);
    }
    if !g.is_connected() {
        return Err(Error::InvalidInput(
            "pipeline needs a connected graph".into(),
        ));
    }
    let spec = laplacian_spectrum(g)?;
    let sdp = solve_gl_sdp(g, opts)?;
    let emb = embed_case_dispatch(&sdp.points, cfg)?;
    let report = ssr(&sdp.points, cfg.eta)?;
    let r = (report.r + 1).min(n);
    let von_neumann = von_neumann_with(&sdp, &spec.eigenvalues, r)?;

    let embedding_cut = match sweep_cut(&emb.embedding.values, g) {
        Ok(c) => Some(c),
        Err(Error::ConstantValues) => None,
        Err(e) => return Err(e),
    };
    let cheeger_cut = match cheeger_round(g, Some(&sdp)) {
        Ok(c) => Some(c),
        Err(Error::NotRegular) => None,
        Err(e) => return Err(e),
    };

    let mut best: Option<(Cut, CutSource)> =
        embedding_cut.clone().map(|c| (c, CutSource::Embedding));
    if let Some(rc) = &cheeger_cut {
        if best.as_ref().is_none_or(|b| rc.cut.sparsity < b.0.sparsity) {
            best = Some((rc.cut.clone(), rc.source));
        }
    }
    let (cut, source) = match best {
        Some(b) => b,
        // Only reachable if the embedding collapsed on a non-regular graph.
        None => (
            sweep_cut(&fiedler_values(g, &spec.fiedler()), g)?,
            CutSource::Fiedler,
        ),
    };
    Ok(PipelineResult {
        cut,
        source,
        diagnostics: PipelineDiagnostics {
            phi_sdp: sdp.objective,
            sdp_converged: sdp.converged,
            lambda: spec.eigenvalues.clone(),
            ssr: report,
            branch: emb.branch,
            avg_ratio: emb.report.avg_ratio,
            von_neumann,
            embedding_cut,
            cheeger_cut,
        },
    })
}
