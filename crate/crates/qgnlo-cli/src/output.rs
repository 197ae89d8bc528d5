//! Structured output: one JSON document per run, flat CSV tables for
//! sweeps and ensembles, and optional per-edge field dumps for plotting.

use crate::runner::{MethodResult, RunResult};
use anyhow::{Context, Result};
use qgnlo_core::dl::{DlFieldKind, DlSolution, GroundStateGrid};
use qgnlo_core::tensor::{BetaTensor, GammaTensor};
use std::io::Write;
use std::path::Path;

pub fn write_run_json(result: &RunResult, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(result)?;
    std::fs::write(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Column labels of one method block: 8 beta then 16 gamma components,
/// intrinsic units, lexicographic index order.
pub fn tensor_headers(prefix: &str) -> Vec<String> {
    let mut cols = Vec::with_capacity(24);
    for l in BetaTensor::LABELS {
        cols.push(format!("{prefix}_beta_{l}"));
    }
    for l in GammaTensor::LABELS {
        cols.push(format!("{prefix}_gamma_{l}"));
    }
    cols
}

pub fn tensor_fields(res: &MethodResult) -> Vec<String> {
    res.beta_intrinsic
        .components()
        .iter()
        .chain(res.gamma_intrinsic.components().iter())
        .map(|v| format!("{v:.12e}"))
        .collect()
}

/// Per-edge CSV dumps of all six DL fields: `F_x.csv`, .., `G_yy.csv` with
/// rows `edge, s, x, y, value`.
pub fn dump_fields(gs: &GroundStateGrid, sol: &DlSolution, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for field in sol.fields() {
        let name = match field.kind {
            DlFieldKind::F(i) => format!("F_{}", i.label()),
            DlFieldKind::G(i, j) => format!("G_{}{}", i.label(), j.label()),
        };
        let path = dir.join(format!("{name}.csv"));
        let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(out, "edge,s,x,y,value")?;
        let graph = gs.graph();
        for p in 0..graph.edge_count() {
            let a = graph.edge(p).length;
            let svals = gs.grid().samples(a);
            for (j, &s) in svals.iter().enumerate() {
                let x = graph.project_coordinate(p, s, qgnlo_core::Axis::X).unwrap();
                let y = graph.project_coordinate(p, s, qgnlo_core::Axis::Y).unwrap();
                writeln!(
                    out,
                    "{},{s:.9e},{x:.9e},{y:.9e},{:.12e}",
                    p + 1,
                    field.samples(p)[j]
                )?;
            }
        }
    }
    Ok(())
}
