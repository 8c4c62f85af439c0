//! Case analysis producing one Fréchet line embedding per input.

use serde::Serialize;

use super::config::EmbedderConfig;
use super::frechet::{
    distortion, frechet_line, sufficient_condition_value, Branch, DistortionReport, LineEmbedding,
};
use super::separate::{search, Outcome, SeparatedPair};
use crate::error::{Error, Result};
use crate::metric::{check_l22, distances, normalize, DistanceMatrix, PointSet};
use crate::subspace::{project, ssr, ProjectedDistances, SubspaceReport};

/// Relative slack on ball radii, so that membership does not flip under
/// rescaling round-off at exact boundary distances.
pub const BALL_SLACK: f64 = 1e-12;
/// Relative slack on the asserted lemma inequalities.
pub const LEMMA_TOL: f64 = 1e-9;
/// Absolute slack per point on the projected-mass claim.
pub const CLAIM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CaseDiagnostics {
    /// Distances were multiplied by this to reach spread 1.
    pub distance_scale: f64,
    pub exact_valid: bool,
    /// Measured approximation factor; 1 for exact input.
    pub beta: f64,
    pub dense_center: Option<usize>,
    pub dense_size: usize,
    /// `sum_i d(i, S)` for the dense ball, normalized units.
    pub dense_outside_sum: Option<f64>,
    pub outer_center: Option<usize>,
    pub outer_size: Option<usize>,
    /// `sum_{i,j in S} d(i,j)` over the bounded ball.
    pub outer_internal_sum: Option<f64>,
    /// `sum_{i,j in S} d_f(i,j)`.
    pub proj_energy: Option<f64>,
    pub proj_threshold: Option<f64>,
    pub core_center: Option<usize>,
    /// `sum_{j not in T} d_f(j, T)` in the projection-concentrated case.
    pub claim_sum: Option<f64>,
    /// The separated-set search failed and a fallback witness was used.
    pub fallback: bool,
    /// Sufficient-condition value of the witness, normalized units.
    pub sufficient_c: f64,
}

#[derive(Debug, Clone)]
pub struct EmbedResult {
    /// Values in the units of the input.
    pub embedding: LineEmbedding,
    pub report: DistortionReport,
    pub branch: Branch,
    pub subspace: Option<SubspaceReport>,
    pub separated: Option<SeparatedPair>,
    pub diagnostics: CaseDiagnostics,
}

impl EmbedResult {
    pub fn to_json(&self, full: bool) -> serde_json::Value {
        let mut v = serde_json::json!({
            "branch": self.branch.name(),
            "witness": self.embedding.witness,
            "values": self.embedding.values,
            "report": self.report,
        });
        if let Some(p) = &self.separated {
            v["delta"] = serde_json::json!(p.delta);
            v["fraction"] = serde_json::json!(p.fraction);
            v["direction"] = serde_json::json!(p.direction);
        }
        if full {
            v["diagnostics"] = serde_json::to_value(&self.diagnostics).unwrap_or_default();
            if let Some(s) = &self.subspace {
                v["ssr"] = s.to_json(false);
            }
            if let Some(p) = &self.separated {
                v["separated"] = serde_json::to_value(p).unwrap_or_default();
            }
        }
        v
    }
}

fn ball(dm: &DistanceMatrix, i: usize, radius: f64) -> Vec<usize> {
    dm.ball(i, radius * (1.0 + BALL_SLACK))
}

/// Index with the largest ball, lowest index on ties.
fn largest_ball(dm: &DistanceMatrix, radius: f64) -> (usize, usize) {
    let r = radius * (1.0 + BALL_SLACK);
    (0..dm.n())
        .map(|i| (i, dm.ball_size(i, r)))
        .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

fn outside_sum<F: Fn(usize) -> f64>(n: usize, set: &[usize], to_set: F) -> f64 {
    let mut in_s = vec![false; n];
    for &v in set {
        in_s[v] = true;
    }
    (0..n).filter(|&i| !in_s[i]).map(to_set).sum()
}

fn fail(msg: String) -> Error {
    Error::InternalCaseFailure(msg)
}

pub fn embed_case_dispatch(points: &PointSet, cfg: &EmbedderConfig) -> Result<EmbedResult> {
    cfg.validate()?;
    let n = points.n();
    let dm0 = distances(points);
    if dm0.max() == 0.0 {
        let embedding = LineEmbedding {
            values: vec![0.0; n],
            witness: (0..n).collect(),
            branch: Some(Branch::ZeroSpread),
            distance_kind: super::frechet::DistanceKind::Original,
        };
        let report = distortion(&dm0, &embedding)?;
        return Ok(EmbedResult {
            embedding,
            report,
            branch: Branch::ZeroSpread,
            subspace: None,
            separated: None,
            diagnostics: CaseDiagnostics {
                exact_valid: true,
                beta: 1.0,
                ..CaseDiagnostics::default()
            },
        });
    }

    let tri = check_l22(&dm0);
    let beta = if tri.exact_valid { 1.0 } else { tri.beta };
    if !tri.exact_valid && beta < cfg.beta_floor {
        return Err(Error::InvalidMetric {
            beta,
            floor: cfg.beta_floor,
        });
    }

    let (xs, scale) = normalize(points)?;
    let factor = scale * scale;
    let dm = dm0.scaled(factor);
    // Approximate inputs are embedded through their metric closure, which stays contractive.
    let metric = if tri.exact_valid {
        dm.clone()
    } else {
        dm.closure()
    };
    let mut diag = CaseDiagnostics {
        distance_scale: factor,
        exact_valid: tri.exact_valid,
        beta,
        ..CaseDiagnostics::default()
    };
    let nf = n as f64;

    let report = ssr(&xs, cfg.eta)?;
    let mut separated = None;

    let (dense_center, dense_size) = largest_ball(&metric, cfg.dense_ball_radius);
    diag.dense_center = Some(dense_center);
    diag.dense_size = dense_size;

    let (branch, witness) = if dense_size as f64 >= cfg.dense_ball_mass * nf {
        let s = ball(&metric, dense_center, cfg.dense_ball_radius);
        let out = outside_sum(n, &s, |i| metric.to_set(i, &s));
        diag.dense_outside_sum = Some(out);
        if out < (nf / 12.0) * (1.0 - LEMMA_TOL) {
            return Err(fail(format!("dense ball leaves outside mass {out} < n/12")));
        }
        (Branch::DenseBall, s)
    } else {
        let (j0, _) = largest_ball(&metric, cfg.outer_ball_radius);
        let s = ball(&metric, j0, cfg.outer_ball_radius);
        let internal: f64 = s
            .iter()
            .map(|&i| s.iter().map(|&j| metric.get(i, j)).sum::<f64>())
            .sum();
        diag.outer_center = Some(j0);
        diag.outer_size = Some(s.len());
        diag.outer_internal_sum = Some(internal);
        if (s.len() as f64) < cfg.outer_ball_mass * nf * (1.0 - LEMMA_TOL) {
            return Err(fail(format!(
                "bounded ball holds {} < {} points",
                s.len(),
                cfg.outer_ball_mass * nf
            )));
        }
        let bound = (2.0 / 12.0) * (1.0 / 12.0) * (nf * nf / 12.0);
        if internal < bound * (1.0 - LEMMA_TOL) {
            return Err(fail(format!(
                "bounded ball internal sum {internal} < {bound}"
            )));
        }

        let pd = project(&xs, &report)?;
        let energy: f64 = s
            .iter()
            .map(|&i| s.iter().map(|&j| pd.get(i, j)).sum::<f64>())
            .sum();
        let threshold = cfg.proj_split * (s.len() * s.len()) as f64;
        diag.proj_energy = Some(energy);
        diag.proj_threshold = Some(threshold);

        if energy >= threshold {
            let g = xs
                .select(&s)?
                .affine(&xs.point(j0), (9.0f64 / 12.0).sqrt())?;
            match search(&g, &report, &cfg.search, cfg.eta)? {
                Outcome::Found(mut p) => {
                    p.left = p.left.iter().map(|&k| s[k]).collect();
                    p.right = p.right.iter().map(|&k| s[k]).collect();
                    let left = p.left.clone();
                    separated = Some(p);
                    (Branch::ProjGood, left)
                }
                Outcome::NotFound { best_left, .. } => {
                    diag.fallback = true;
                    let left = match best_left {
                        Some(l) => l.iter().map(|&k| s[k]).collect(),
                        None => vec![j0],
                    };
                    (Branch::ProjGood, left)
                }
            }
        } else {
            let (core, t) = concentrated_core(&pd, &s, cfg)?;
            let claim = outside_sum(n, &t, |j| pd.to_set(j, &t));
            diag.core_center = Some(core);
            diag.claim_sum = Some(claim);
            if claim < cfg.eta * nf / 12.0 - CLAIM_TOL * nf {
                return Err(fail(format!(
                    "projected mass outside the core {claim} < eta n / 12"
                )));
            }
            (Branch::ProjBad, t)
        }
    };

    diag.sufficient_c = sufficient_condition_value(&metric, &witness)?;
    let mut embedding = frechet_line(&metric, &witness)?;
    for v in &mut embedding.values {
        *v /= factor;
    }
    embedding.branch = Some(branch);
    let report_d = distortion(&dm0, &embedding)?;
    Ok(EmbedResult {
        embedding,
        report: report_d,
        branch,
        subspace: Some(report),
        separated,
        diagnostics: diag,
    })
}

/// Lowest `i` in `s` whose projected ball holds the configured share of `s`;
/// returns it with the ball taken over all points.
fn concentrated_core(
    pd: &ProjectedDistances,
    s: &[usize],
    cfg: &EmbedderConfig,
) -> Result<(usize, Vec<usize>)> {
    let radius = cfg.tcore_radius * (1.0 + BALL_SLACK);
    let need = cfg.tcore_mass * s.len() as f64;
    for &i in s {
        let inside = s.iter().filter(|&&j| pd.get(i, j) <= radius).count();
        if inside as f64 >= need * (1.0 - LEMMA_TOL) {
            let t = (0..pd.n()).filter(|&j| pd.get(i, j) <= radius).collect();
            return Ok((i, t));
        }
    }
    Err(fail("no point concentrates the projected mass".into()))
}
