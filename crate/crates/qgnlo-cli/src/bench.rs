//! Wall-clock comparison of the two pipelines on one graph across basis
//! sizes: one warm-up, median of five timed repeats each.

use crate::config::{Method, RunConfig};
use crate::runner::{dl_pipeline, sos_pipeline};
use anyhow::Result;
use qgnlo_core::QuantumGraph;
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub modes: usize,
    pub t_sos_ms: f64,
    pub t_dl_ms: f64,
    pub speedup: f64,
}

fn median_ms<F: FnMut() -> Result<()>>(mut f: F, repeats: usize) -> Result<f64> {
    f()?; // warm-up excluded from the statistics
    let mut times: Vec<f64> = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t0 = Instant::now();
        f()?;
        times.push(t0.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(times[times.len() / 2])
}

pub fn run_benchmark(
    graph: &QuantumGraph,
    modes_list: &[usize],
    grid_points: usize,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(modes_list.len());
    for &modes in modes_list {
        let config = RunConfig::new(Method::Both, modes, grid_points)?;
        let t_sos = median_ms(
            || {
                sos_pipeline(graph, &config)?;
                Ok(())
            },
            5,
        )?;
        let t_dl = median_ms(
            || {
                dl_pipeline(graph, &config, None)?;
                Ok(())
            },
            5,
        )?;
        rows.push(BenchRow {
            modes,
            t_sos_ms: t_sos,
            t_dl_ms: t_dl,
            speedup: t_sos / t_dl,
        });
    }
    Ok(rows)
}

pub fn write_bench_csv(rows: &[BenchRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["modes", "t_sos_ms", "t_dl_ms", "speedup"])?;
    for r in rows {
        w.write_record(&[
            r.modes.to_string(),
            format!("{:.4}", r.t_sos_ms),
            format!("{:.4}", r.t_dl_ms),
            format!("{:.3}", r.speedup),
        ])?;
    }
    w.flush()?;
    Ok(())
}
