//! Seeded Monte Carlo over random geometries of a fixed topology.
//!
//! Each sample draws its own RNG from the master seed and its index, so
//! results are byte-identical for a given (seed, config) regardless of the
//! worker count. Individual failures are flagged and the run continues.

use crate::config::{worker_count, RunConfig};
use crate::runner::{run_single, RunResult};
use anyhow::{bail, Result};
use qgnlo_core::graph::presets;
use qgnlo_core::QuantumGraph;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Star3,
    Star4,
    Wire3,
    Loop3,
}

impl std::str::FromStr for Topology {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "3star" | "star3" => Ok(Topology::Star3),
            "4star" | "star4" => Ok(Topology::Star4),
            "3wire" | "wire3" => Ok(Topology::Wire3),
            "3loop" | "loop3" | "triangle" => Ok(Topology::Loop3),
            other => bail!("unknown topology '{other}' (3star, 4star, 3wire, 3loop)"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McConfig {
    pub topology: String,
    pub samples: usize,
    pub seed: u64,
    pub len_min: f64,
    pub len_max: f64,
    #[serde(flatten)]
    pub run: RunConfig,
}

pub struct McSample {
    pub index: usize,
    pub lengths: Vec<f64>,
    pub angles_deg: Vec<f64>,
    pub outcome: Result<RunResult, String>,
}

#[derive(Debug, Default, Serialize)]
pub struct McSummary {
    pub samples: usize,
    pub seed: u64,
    pub max_abs_beta_intrinsic: f64,
    pub min_gamma_diag_intrinsic: f64,
    pub max_gamma_diag_intrinsic: f64,
    pub bound_violations: usize,
    pub failures: usize,
    /// Worst cross-method deviations over the ensemble; present when both
    /// methods ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_beta_rel_dev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_gamma_rel_dev: Option<f64>,
}

fn sample_seed(master: u64, index: usize) -> u64 {
    // splitmix64 step keyed by the sample index
    let mut z = master.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn draw(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn draw_graph(
    topology: Topology,
    rng: &mut ChaCha8Rng,
    len_lo: f64,
    len_hi: f64,
) -> (Vec<f64>, Vec<f64>, QuantumGraph) {
    let arms = match topology {
        Topology::Star3 | Topology::Wire3 | Topology::Loop3 => 3,
        Topology::Star4 => 4,
    };
    match topology {
        Topology::Star3 | Topology::Star4 => {
            let lengths: Vec<f64> = (0..arms).map(|_| draw(rng, len_lo, len_hi)).collect();
            let angles: Vec<f64> = (0..arms).map(|_| draw(rng, 0.0, 360.0)).collect();
            let spec: Vec<(f64, f64)> = lengths
                .iter()
                .zip(&angles)
                .map(|(&l, &a)| (l, a.to_radians()))
                .collect();
            (lengths, angles, presets::star(&spec))
        }
        Topology::Wire3 => {
            let lengths: Vec<f64> = (0..3).map(|_| draw(rng, len_lo, len_hi)).collect();
            let angles: Vec<f64> = (0..3).map(|_| draw(rng, 0.0, 360.0)).collect();
            let spec: Vec<(f64, f64)> = lengths
                .iter()
                .zip(&angles)
                .map(|(&l, &a)| (l, a.to_radians()))
                .collect();
            (lengths, angles, presets::chain(&spec))
        }
        Topology::Loop3 => {
            // two free sides plus the closing third; orientation drawn too
            let l1 = draw(rng, len_lo, len_hi);
            let l2 = draw(rng, len_lo, len_hi);
            let a1: f64 = draw(rng, 0.0, 360.0);
            // opening angle bounded away from degenerate flat triangles
            let opening: f64 = draw(rng, 30.0, 150.0);
            let a2 = a1 + 180.0 - opening;
            let (x1, y1) = (l1 * a1.to_radians().cos(), l1 * a1.to_radians().sin());
            let (x2, y2) = (
                x1 + l2 * a2.to_radians().cos(),
                y1 + l2 * a2.to_radians().sin(),
            );
            let l3 = (x2 * x2 + y2 * y2).sqrt();
            let a3 = (-y2).atan2(-x2).to_degrees();
            let g = QuantumGraph::new(
                "loop3".into(),
                vec![
                    qgnlo_core::graph::Edge {
                        length: l1,
                        angle: a1.to_radians(),
                        tail: 0,
                        head: 1,
                    },
                    qgnlo_core::graph::Edge {
                        length: l2,
                        angle: a2.to_radians(),
                        tail: 1,
                        head: 2,
                    },
                    qgnlo_core::graph::Edge {
                        length: l3,
                        angle: a3.to_radians(),
                        tail: 2,
                        head: 0,
                    },
                ],
            )
            .expect("closing side keeps the triangle valid");
            (vec![l1, l2, l3], vec![a1, a2, a3], g)
        }
    }
}

/// Run the ensemble. Sample order in the output is by index regardless of
/// scheduling.
pub fn run_monte_carlo(topology: Topology, mc: &McConfig) -> Result<Vec<McSample>> {
    let indices: Vec<usize> = (0..mc.samples).collect();
    let job = |&index: &usize| -> McSample {
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(mc.seed, index));
        let (lengths, angles_deg, graph) = draw_graph(topology, &mut rng, mc.len_min, mc.len_max);
        let outcome = run_single(&graph, &mc.run, None).map_err(|e| format!("{e:#}"));
        McSample {
            index,
            lengths,
            angles_deg,
            outcome,
        }
    };
    let samples: Vec<McSample> = match worker_count() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            pool.install(|| indices.par_iter().map(job).collect())
        }
        None => indices.par_iter().map(job).collect(),
    };
    Ok(samples)
}

pub fn summarize(samples: &[McSample], mc: &McConfig) -> McSummary {
    let mut s = McSummary {
        samples: samples.len(),
        seed: mc.seed,
        min_gamma_diag_intrinsic: f64::INFINITY,
        max_gamma_diag_intrinsic: f64::NEG_INFINITY,
        ..Default::default()
    };
    for sample in samples {
        match &sample.outcome {
            Ok(result) => {
                for m in [result.dl.as_ref(), result.sos.as_ref()]
                    .into_iter()
                    .flatten()
                {
                    s.max_abs_beta_intrinsic =
                        s.max_abs_beta_intrinsic.max(m.beta_intrinsic.max_abs());
                    for d in m.gamma_intrinsic.diagonal() {
                        s.min_gamma_diag_intrinsic = s.min_gamma_diag_intrinsic.min(d);
                        s.max_gamma_diag_intrinsic = s.max_gamma_diag_intrinsic.max(d);
                    }
                    s.bound_violations += m.flags.len();
                }
                if let Some(cmp) = &result.comparison {
                    let b = s.max_beta_rel_dev.get_or_insert(0.0);
                    *b = b.max(cmp.beta_rel_dev);
                    let g = s.max_gamma_rel_dev.get_or_insert(0.0);
                    *g = g.max(cmp.gamma_rel_dev);
                }
            }
            Err(_) => s.failures += 1,
        }
    }
    s
}

pub fn write_mc_csv(samples: &[McSample], seed: u64, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let arms = samples.first().map_or(3, |s| s.lengths.len());
    let mut header = vec!["index".to_string(), "master_seed".into()];
    for i in 1..=arms {
        header.push(format!("length_{i}"));
    }
    for i in 1..=arms {
        header.push(format!("angle_deg_{i}"));
    }
    header.extend(["e0".into(), "e10".into()]);
    header.extend(crate::output::tensor_headers("dl"));
    header.push("flags".into());
    w.write_record(&header)?;
    for s in samples {
        let mut rec = vec![s.index.to_string(), seed.to_string()];
        rec.extend(s.lengths.iter().map(|v| format!("{v:.12e}")));
        rec.extend(s.angles_deg.iter().map(|v| format!("{v:.12e}")));
        match &s.outcome {
            Ok(r) => {
                rec.push(format!("{:.12e}", r.e0));
                rec.push(format!("{:.12e}", r.e10));
                let m = r.dl.as_ref().or(r.sos.as_ref()).expect("a method ran");
                rec.extend(crate::output::tensor_fields(m));
                rec.push(m.flags.join(";"));
            }
            Err(msg) => {
                rec.extend(std::iter::repeat_n("nan".to_string(), 2 + 24));
                rec.push(format!("error:{msg}"));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
