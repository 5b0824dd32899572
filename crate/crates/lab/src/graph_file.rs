//! Plain-text graph files.
//!
//! ```text
//! # path on three vertices
//! N 3 undirected
//! 0 1
//! 1 2
//! ```
//!
//! Indices are 0-based; text after `#` is ignored.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use cascade_core::{build_graph, Graph};

use crate::error::{LabError, LabResult};

pub fn parse_graph(text: &str, source_name: &str) -> LabResult<Graph> {
    let err = |line: usize, msg: String| LabError::parse(source_name, line, msg);
    let mut header: Option<(usize, bool)> = None;
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some((n, directed)) = header else {
            if fields.len() != 3 || fields[0] != "N" {
                return Err(err(
                    line_no,
                    format!("expected header `N <n> <directed|undirected>`, got `{line}`"),
                ));
            }
            let n: usize = fields[1]
                .parse()
                .map_err(|_| err(line_no, format!("bad vertex count `{}`", fields[1])))?;
            if n == 0 {
                return Err(err(line_no, "graph must have at least one vertex".into()));
            }
            let directed = match fields[2] {
                "directed" => true,
                "undirected" => false,
                other => {
                    return Err(err(
                        line_no,
                        format!("expected `directed` or `undirected`, got `{other}`"),
                    ))
                }
            };
            header = Some((n, directed));
            continue;
        };
        if fields.len() != 2 {
            return Err(err(
                line_no,
                format!("expected an edge `i j`, got `{line}`"),
            ));
        }
        let mut ends = [0usize; 2];
        for (slot, f) in ends.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| err(line_no, format!("bad vertex index `{f}`")))?;
            if *slot >= n {
                return Err(err(
                    line_no,
                    format!("vertex {slot} out of range for {n} vertices"),
                ));
            }
        }
        let [i, j] = ends;
        if i == j {
            return Err(err(line_no, format!("self-loop on vertex {i}")));
        }
        let key = if directed {
            (i, j)
        } else {
            (i.min(j), i.max(j))
        };
        if !seen.insert(key) {
            return Err(err(line_no, format!("duplicate edge ({i}, {j})")));
        }
        edges.push((i, j));
    }
    let (n, directed) =
        header.ok_or_else(|| err(text.lines().count().max(1), "missing header line".into()))?;
    Ok(build_graph(n, &edges, directed)?)
}

pub fn read_graph(path: &Path) -> LabResult<Graph> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_graph(&text, &path.display().to_string())
}

pub fn format_graph(g: &Graph) -> String {
    let mut out = String::new();
    let kind = if g.is_directed() {
        "directed"
    } else {
        "undirected"
    };
    writeln!(out, "N {} {kind}", g.num_vertices()).unwrap();
    for (i, j) in g.edge_list() {
        writeln!(out, "{i} {j}").unwrap();
    }
    out
}
