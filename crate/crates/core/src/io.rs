//! Point-set and graph file formats.
//!
//! Point sets are JSON `{"n": .., "d": .., "points": [[..], ..]}` or CSV
//! with one point per row. Graphs are a `graph <n>` header followed by
//! `i j w` lines with 1-based vertex ids; `#` starts a comment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metric::PointSet;

#[derive(Debug, Serialize, Deserialize)]
struct PointFile {
    n: usize,
    d: usize,
    points: Vec<Vec<f64>>,
}

pub fn points_to_json(points: &PointSet) -> serde_json::Value {
    serde_json::to_value(PointFile {
        n: points.n(),
        d: points.dim(),
        points: points.rows(),
    })
    .expect("point file serializes")
}

pub fn parse_points_json(text: &str) -> Result<PointSet> {
    let f: PointFile = serde_json::from_str(text)?;
    if f.points.len() != f.n {
        return Err(Error::InvalidInput(format!(
            "header says n = {}, found {} points",
            f.n,
            f.points.len()
        )));
    }
    if let Some((i, _)) = f.points.iter().enumerate().find(|(_, p)| p.len() != f.d) {
        return Err(Error::InvalidInput(format!(
            "point {i} does not have d = {} coordinates",
            f.d
        )));
    }
    PointSet::from_rows(&f.points)
}

pub fn parse_points_csv(text: &str) -> Result<PointSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    line: line + 1,
                    msg: format!("{f:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    PointSet::from_rows(&rows)
}

/// JSON when the text starts with `{`, CSV otherwise.
pub fn parse_points(text: &str) -> Result<PointSet> {
    if text.trim_start().starts_with('{') {
        parse_points_json(text)
    } else {
        parse_points_csv(text)
    }
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line, msg };
        let fields: Vec<&str> = content.split_whitespace().collect();
        let Some(size) = n else {
            match fields.as_slice() {
                ["graph", v] => {
                    n = Some(
                        v.parse()
                            .map_err(|_| err(format!("bad vertex count {v:?}")))?,
                    );
                    continue;
                }
                _ => return Err(err("expected header \"graph <n>\"".into())),
            }
        };
        let (i, j, w) = match fields.as_slice() {
            [i, j] => (*i, *j, "1"),
            [i, j, w] => (*i, *j, *w),
            _ => return Err(err("expected \"i j w\"".into())),
        };
        let id = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| err(format!("bad vertex id {s:?}")))?;
            if v == 0 || v > size {
                return Err(err(format!("vertex id {v} outside 1..={size}")));
            }
            Ok(v - 1)
        };
        let (a, b) = (id(i)?, id(j)?);
        if a == b {
            return Err(err(format!("self-loop at vertex {}", a + 1)));
        }
        let w: f64 = w.parse().map_err(|_| err(format!("bad weight {w:?}")))?;
        if !(w.is_finite() && w >= 0.0) {
            return Err(err(format!("weight must be finite and >= 0, got {w}")));
        }
        edges.push((a, b, w));
    }
    let n = n.ok_or(Error::Parse {
        line: 0,
        msg: "missing \"graph <n>\" header".into(),
    })?;
    Graph::from_edges(n, &edges)
}

pub fn graph_to_string(g: &Graph) -> String {
    let mut s = format!("graph {}\n", g.n());
    for (i, j, w) in g.edges() {
        s.push_str(&format!("{} {} {}\n", i + 1, j + 1, w));
    }
    s
}
