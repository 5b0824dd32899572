//! CSV tables for trajectories, continuation branches and heatmaps.
//!
//! Floats are written with 17 significant digits so every table re-parses
//! to the values it was written from.

use std::io::{Read, Write};

use cascade_core::continuation::{Branch, SpecialPoint};
use cascade_core::dynamics::{SystemState, Trajectory};
use cascade_core::equilibrium::Stability;
use cascade_core::sweep::{HeatmapCell, HeatmapGrid, RunRecord};
use cascade_core::DVector;

use crate::error::{LabError, LabResult};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn bad_table(table: &str, row: usize, msg: impl Into<String>) -> LabError {
    LabError::parse(table, row, msg)
}

fn parse_f64(table: &str, row: usize, field: &str) -> LabResult<f64> {
    field
        .parse()
        .map_err(|_| bad_table(table, row, format!("bad number `{field}`")))
}

pub fn stability_from_str(s: &str) -> Option<Stability> {
    [Stability::Stable, Stability::Unstable, Stability::Marginal]
        .into_iter()
        .find(|k| k.as_str() == s)
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}_{i}"))
}

/// Header `t,x_0..x_{N-1},u_0..u_{N-1}`.
pub fn write_trajectory<W: Write>(w: W, traj: &Trajectory) -> LabResult<()> {
    let n = traj.states().first().map_or(0, |s| s.x.len());
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(indexed("x", n))
        .chain(indexed("u", n))
        .collect();
    out.write_record(&header)?;
    for (t, s) in traj.times().iter().zip(traj.states()) {
        let row: Vec<String> = std::iter::once(*t)
            .chain(s.x.iter().copied())
            .chain(s.u.iter().copied())
            .map(fmt_f64)
            .collect();
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| LabError::io("trajectory", e))?;
    Ok(())
}

pub fn read_trajectory<R: Read>(r: R) -> LabResult<Trajectory> {
    const NAME: &str = "trajectory";
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let cols = header.len();
    if cols < 3 || cols % 2 == 0 || &header[0] != "t" {
        return Err(bad_table(NAME, 1, "header must be t,x_0..,u_0.."));
    }
    let n = (cols - 1) / 2;
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain(indexed("x", n))
        .chain(indexed("u", n))
        .collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(bad_table(NAME, 1, "header must be t,x_0..,u_0.."));
    }
    let mut traj = Trajectory::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = k + 2;
        let v: Vec<f64> = rec
            .iter()
            .map(|f| parse_f64(NAME, row, f))
            .collect::<LabResult<_>>()?;
        let s = SystemState {
            x: DVector::from_column_slice(&v[1..=n]),
            u: DVector::from_column_slice(&v[n + 1..]),
        };
        traj.push(v[0], s)
            .map_err(|e| bad_table(NAME, row, e.to_string()))?;
    }
    Ok(traj)
}

/// One row of a branch table.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRow {
    pub parameter: f64,
    pub stability: Stability,
    pub x: Vec<f64>,
    /// Present for the coupled system.
    pub u: Option<Vec<f64>>,
    pub projection: f64,
}

pub fn branch_rows(branch: &Branch, with_attention: bool) -> Vec<BranchRow> {
    branch
        .points
        .iter()
        .map(|pt| BranchRow {
            parameter: pt.parameter,
            stability: pt.stability,
            x: pt.state.x.iter().copied().collect(),
            u: with_attention.then(|| pt.state.u.iter().copied().collect()),
            projection: pt.projection,
        })
        .collect()
}

/// Header `param,stability,x_0..[,u_0..],proj_vc`.
pub fn write_branch<W: Write>(
    w: W,
    rows: &[BranchRow],
    n: usize,
    with_attention: bool,
) -> LabResult<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["param".to_string(), "stability".to_string()];
    header.extend(indexed("x", n));
    if with_attention {
        header.extend(indexed("u", n));
    }
    header.push("proj_vc".to_string());
    out.write_record(&header)?;
    for r in rows {
        let u_ok = match &r.u {
            Some(u) => with_attention && u.len() == n,
            None => !with_attention,
        };
        if r.x.len() != n || !u_ok {
            return Err(LabError::Config(
                "branch row does not match the table width".into(),
            ));
        }
        let mut row = vec![fmt_f64(r.parameter), r.stability.as_str().to_string()];
        row.extend(r.x.iter().copied().map(fmt_f64));
        if let Some(u) = &r.u {
            row.extend(u.iter().copied().map(fmt_f64));
        }
        row.push(fmt_f64(r.projection));
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| LabError::io("branch", e))?;
    Ok(())
}

pub fn read_branch<R: Read>(r: R) -> LabResult<Vec<BranchRow>> {
    const NAME: &str = "branch";
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let cols = header.len();
    if cols < 4
        || &header[0] != "param"
        || &header[1] != "stability"
        || &header[cols - 1] != "proj_vc"
    {
        return Err(bad_table(
            NAME,
            1,
            "header must be param,stability,x_0..[,u_0..],proj_vc",
        ));
    }
    let with_attention = header.iter().any(|h| h.starts_with("u_"));
    let n = if with_attention {
        (cols - 3) / 2
    } else {
        cols - 3
    };
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = k + 2;
        let stability = stability_from_str(&rec[1])
            .ok_or_else(|| bad_table(NAME, row, format!("unknown stability `{}`", &rec[1])))?;
        let nums = |range: std::ops::Range<usize>| -> LabResult<Vec<f64>> {
            range.map(|i| parse_f64(NAME, row, &rec[i])).collect()
        };
        rows.push(BranchRow {
            parameter: parse_f64(NAME, row, &rec[0])?,
            stability,
            x: nums(2..2 + n)?,
            u: if with_attention {
                Some(nums(2 + n..2 + 2 * n)?)
            } else {
                None
            },
            projection: parse_f64(NAME, row, &rec[cols - 1])?,
        });
    }
    Ok(rows)
}

/// Text block listing the special points of each branch.
pub fn branch_summary(branches: &[(String, &Branch)]) -> String {
    let mut out = String::new();
    for (name, b) in branches {
        out.push_str(&format!(
            "branch {name}: {} points, ends at {:?}\n",
            b.points.len(),
            b.termination
        ));
        for sp in &b.special {
            out.push_str(&special_line(sp));
        }
    }
    out
}

fn special_line(sp: &SpecialPoint) -> String {
    format!(
        "  {} param={} proj_vc={}\n",
        sp.kind.as_str(),
        fmt_f64(sp.parameter),
        fmt_f64(sp.projection)
    )
}

/// Header `alignment_bin_lo,alignment_bin_hi,magnitude,count,no_cascade_fraction`,
/// bin-major; empty cells carry `NA`.
pub fn write_heatmap<W: Write>(w: W, grid: &HeatmapGrid) -> LabResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "alignment_bin_lo",
        "alignment_bin_hi",
        "magnitude",
        "count",
        "no_cascade_fraction",
    ])?;
    for bin in 0..grid.alignment_bins {
        let (lo, hi) = grid.bin_edges(bin);
        for (j, m) in grid.magnitudes.iter().enumerate() {
            let frac = grid
                .no_cascade_fraction(bin, j)
                .map_or_else(|| "NA".to_string(), fmt_f64);
            out.write_record([
                fmt_f64(lo),
                fmt_f64(hi),
                fmt_f64(*m),
                grid.cells[bin][j].count.to_string(),
                frac,
            ])?;
        }
    }
    out.flush().map_err(|e| LabError::io("heatmap", e))?;
    Ok(())
}

pub fn read_heatmap<R: Read>(r: R) -> LabResult<HeatmapGrid> {
    const NAME: &str = "heatmap";
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let want = [
        "alignment_bin_lo",
        "alignment_bin_hi",
        "magnitude",
        "count",
        "no_cascade_fraction",
    ];
    if header.iter().ne(want) {
        return Err(bad_table(
            NAME,
            1,
            format!("header must be {}", want.join(",")),
        ));
    }
    // (bin_lo, magnitude, count, no_cascade)
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = k + 2;
        let lo = parse_f64(NAME, row, &rec[0])?;
        let m = parse_f64(NAME, row, &rec[2])?;
        let count: usize = rec[3]
            .parse()
            .map_err(|_| bad_table(NAME, row, format!("bad count `{}`", &rec[3])))?;
        let no_cascade = match (&rec[4], count) {
            ("NA", 0) => 0,
            ("NA", _) => return Err(bad_table(NAME, row, "NA fraction on a non-empty cell")),
            (f, c) => {
                let f = parse_f64(NAME, row, f)?;
                if !(0.0..=1.0).contains(&f) {
                    return Err(bad_table(NAME, row, "fraction outside [0, 1]"));
                }
                (f * c as f64).round() as usize
            }
        };
        rows.push((lo, m, count, no_cascade));
    }
    let mut magnitudes: Vec<f64> = Vec::new();
    for r in &rows {
        if r.0 != rows[0].0 {
            break;
        }
        magnitudes.push(r.1);
    }
    if magnitudes.is_empty() || rows.len() % magnitudes.len() != 0 {
        return Err(bad_table(
            NAME,
            2,
            "rows do not form a bin-by-magnitude grid",
        ));
    }
    let bins = rows.len() / magnitudes.len();
    let mut grid = HeatmapGrid::new(magnitudes.clone(), bins);
    for (k, (lo, m, count, no_cascade)) in rows.into_iter().enumerate() {
        let (bin, j) = (k / magnitudes.len(), k % magnitudes.len());
        if m != magnitudes[j] || lo != grid.bin_edges(bin).0 {
            return Err(bad_table(
                NAME,
                k + 2,
                "rows do not form a bin-by-magnitude grid",
            ));
        }
        grid.cells[bin][j] = HeatmapCell { count, no_cascade };
    }
    Ok(grid)
}

/// Per-run table: `index,magnitude,alignment,alignment_bin,cascaded,classification,signs`.
pub fn write_runs<W: Write>(w: W, runs: &[RunRecord], magnitudes: &[f64]) -> LabResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "index",
        "magnitude",
        "alignment",
        "alignment_bin",
        "cascaded",
        "classification",
        "signs",
    ])?;
    for r in runs {
        let signs: String = r
            .sign_pattern
            .iter()
            .map(|s| match s {
                1 => '+',
                -1 => '-',
                _ => '0',
            })
            .collect();
        out.write_record([
            r.index.to_string(),
            fmt_f64(magnitudes[r.magnitude_index]),
            fmt_f64(r.alignment),
            r.alignment_bin.to_string(),
            r.cascaded.to_string(),
            r.classification.as_str().to_string(),
            signs,
        ])?;
    }
    out.flush().map_err(|e| LabError::io("runs", e))?;
    Ok(())
}
