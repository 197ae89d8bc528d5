//! Angle sweep of one rotating edge: re-embed the graph at each angle and
//! run the configured methods, emitting one CSV row per angle.

use crate::config::RunConfig;
use crate::output::{tensor_fields, tensor_headers};
use crate::runner::{run_single, RunResult};
use anyhow::{bail, Context, Result};
use qgnlo_core::QuantumGraph;
use std::path::Path;

pub struct SweepRow {
    pub angle_deg: f64,
    pub result: RunResult,
}

/// Rotate edge `edge_1based` through `steps` angles (0..360 degrees
/// inclusive); a single step keeps the graph's own angle.
pub fn run_sweep(
    graph: &QuantumGraph,
    edge_1based: usize,
    steps: usize,
    config: &RunConfig,
) -> Result<Vec<SweepRow>> {
    if steps < 1 {
        bail!("--steps must be at least 1");
    }
    if edge_1based == 0 || edge_1based > graph.edge_count() {
        bail!(
            "--rotate-edge {edge_1based} out of range 1..{}",
            graph.edge_count()
        );
    }
    let edge = edge_1based - 1;
    let mut rows = Vec::with_capacity(steps);
    for j in 0..steps {
        let angle_deg = if steps == 1 {
            graph.edge(edge).angle.to_degrees()
        } else {
            360.0 * j as f64 / (steps - 1) as f64
        };
        let rotated = graph
            .with_edge_angle(edge, angle_deg.to_radians())
            .with_context(|| format!("rotating edge {edge_1based} to {angle_deg} deg"))?;
        let result = run_single(&rotated, config, None)
            .with_context(|| format!("sweep step {j} at {angle_deg} deg"))?;
        rows.push(SweepRow { angle_deg, result });
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["angle_deg".to_string(), "e0".into(), "e10".into()];
    let any = rows.first().map(|r| &r.result);
    if any.is_some_and(|r| r.dl.is_some()) {
        header.extend(tensor_headers("dl"));
    }
    if any.is_some_and(|r| r.sos.is_some()) {
        header.extend(tensor_headers("sos"));
    }
    w.write_record(&header)?;
    for row in rows {
        let r = &row.result;
        let mut rec = vec![
            format!("{:.6}", row.angle_deg),
            format!("{:.12e}", r.e0),
            format!("{:.12e}", r.e10),
        ];
        if let Some(dl) = &r.dl {
            rec.extend(tensor_fields(dl));
        }
        if let Some(sos) = &r.sos {
            rec.extend(tensor_fields(sos));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
