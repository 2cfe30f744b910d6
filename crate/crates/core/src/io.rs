//! CSV and JSON export of clouds, traces, support profiles and reports.

use std::fs::{self, File};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::linalg::Vector;
use crate::splitting::DRTrace;

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn axis_headers(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("{prefix}{i}")).collect()
}

/// One point per row, with a header `x0,x1,...`.
pub fn write_cloud_csv(path: &Path, cloud: &PointCloud) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(axis_headers("x", cloud.dim))?;
    for p in &cloud.points {
        w.write_record(p.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one point per row; a non-numeric first row is taken as a header.
pub fn read_cloud_csv(path: &Path) -> Result<PointCloud> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut points: Vec<Vector> = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => points.push(Vector::from_vec(values)),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::InvalidArgument(format!(
                    "{}: row {} is not numeric: {e}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    let dim = points.first().map(|p| p.len()).ok_or(Error::EmptyCloud)?;
    PointCloud::try_new(dim, points)
}

/// Columns `iter, x.., shadow.., displacement_norm`; the norm is empty on the
/// final iterate.
pub fn write_trace_csv(path: &Path, trace: &DRTrace) -> Result<()> {
    ensure_parent(path)?;
    let dim = trace.governing.first().map(|x| x.len()).unwrap_or(0);
    let mut w = csv::Writer::from_writer(File::create(path)?);
    let mut header = vec!["iter".to_string()];
    header.extend(axis_headers("x", dim));
    header.extend(axis_headers("shadow", dim));
    header.push("displacement_norm".into());
    w.write_record(&header)?;
    for (k, (x, s)) in trace.governing.iter().zip(&trace.shadow).enumerate() {
        let n = trace.indices[k];
        let mut row = vec![n.to_string()];
        row.extend(x.iter().map(|v| format!("{v:e}")));
        row.extend(s.iter().map(|v| format!("{v:e}")));
        row.push(
            trace
                .displacement_norms
                .get(n)
                .map(|d| format!("{d:e}"))
                .unwrap_or_default(),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `d.., value_c, value_d, gap` from [`crate::geometry::support_gaps`].
pub fn write_support_csv(path: &Path, gaps: &[(Vector, f64, f64)]) -> Result<()> {
    ensure_parent(path)?;
    let dim = gaps.first().map(|g| g.0.len()).unwrap_or(0);
    let mut w = csv::Writer::from_writer(File::create(path)?);
    let mut header = axis_headers("d", dim);
    header.extend(["value_c".into(), "value_d".into(), "gap".into()]);
    w.write_record(&header)?;
    for (d, a, b) in gaps {
        let mut row: Vec<String> = d.iter().map(|v| format!("{v:e}")).collect();
        row.push(format!("{a:e}"));
        row.push(format!("{b:e}"));
        row.push(format!("{:e}", (a - b).abs()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}
