//! Single-graph evaluation: run the requested pipelines end to end,
//! attach diagnostics, intrinsic bounds flags, and timings.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use qgnlo_core::dl::{self, GroundStateGrid};
use qgnlo_core::graph::Axis;
use qgnlo_core::sos;
use qgnlo_core::spectral::{self, SolverOptions, Spectrum};
use qgnlo_core::tensor::{intrinsic_normalize, BetaTensor, GammaTensor, PolTensors};
use qgnlo_core::{GridSpec, QuantumGraph};
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub name: String,
    pub edges: usize,
    pub vertices: usize,
    pub leaves: usize,
    pub total_length: f64,
}

impl GraphSummary {
    pub fn of(graph: &QuantumGraph) -> Self {
        Self {
            name: graph.name().to_string(),
            edges: graph.edge_count(),
            vertices: graph.vertex_count(),
            leaves: graph.leaf_count(),
            total_length: graph.total_length(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodResult {
    pub beta_raw: BetaTensor,
    pub gamma_raw: GammaTensor,
    pub beta_intrinsic: BetaTensor,
    pub gamma_intrinsic: GammaTensor,
    /// Ground-state TRK diagnostic; perturbation-sum runs only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trk_residual: Option<f64>,
    /// Worst vertex residuals of the DL fields; DL runs only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex_continuity_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex_flux_residual: Option<f64>,
    /// Intrinsic bound violations; an empty list means all bounds hold.
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    /// Largest absolute intrinsic deviation between the methods.
    pub beta_max_abs_dev: f64,
    pub gamma_max_abs_dev: f64,
    /// Deviation relative to the largest intrinsic component.
    pub beta_rel_dev: f64,
    pub gamma_rel_dev: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub sos_ms: Option<f64>,
    pub dl_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub config: RunConfig,
    pub graph: GraphSummary,
    pub e0: f64,
    pub e1: f64,
    pub e10: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sos: Option<MethodResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dl: Option<MethodResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    pub timings: Timings,
}

fn intrinsic(beta: &BetaTensor, gamma: &GammaTensor, e10: f64) -> Result<PolTensors> {
    intrinsic_normalize(beta, gamma, e10).context("intrinsic normalization")
}

/// Full perturbation-sum pipeline: spectrum of `modes + 1` states, moments,
/// both tensors, TRK diagnostic.
pub fn sos_pipeline(graph: &QuantumGraph, config: &RunConfig) -> Result<(Spectrum, MethodResult)> {
    let grid = GridSpec::new(config.grid_points)?;
    let opts = SolverOptions {
        grid,
        ..Default::default()
    };
    let spectrum = spectral::find_spectrum(graph, config.modes + 1, &opts)
        .context("spectral solve for the perturbation sums")?;
    let mx = sos::transition_moments(&spectrum, graph, Axis::X, &grid);
    let my = sos::transition_moments(&spectrum, graph, Axis::Y, &grid);
    let energies = spectrum.energies();
    let beta = sos::beta_sos(&mx, &my, &energies)?;
    let gamma = sos::gamma_sos(&mx, &my, &energies)?;
    let trk = spectral::trk_residual(&spectrum, &mx, &my, 0);
    let pol = intrinsic(&beta, &gamma, spectrum.e10())?;
    let flags = pol.bound_violations();
    Ok((
        spectrum,
        MethodResult {
            beta_raw: beta,
            gamma_raw: gamma,
            beta_intrinsic: pol.beta,
            gamma_intrinsic: pol.gamma,
            trk_residual: Some(trk),
            vertex_continuity_residual: None,
            vertex_flux_residual: None,
            flags,
        },
    ))
}

/// Ground-state-only pipeline: two-mode solve (the gap is needed for
/// intrinsic units), DL fields by quadrature, both tensors.
pub fn dl_pipeline(
    graph: &QuantumGraph,
    config: &RunConfig,
    dump_dir: Option<&Path>,
) -> Result<(Spectrum, MethodResult)> {
    let grid = GridSpec::new(config.grid_points)?;
    let opts = SolverOptions {
        grid,
        ..Default::default()
    };
    let spectrum =
        spectral::find_spectrum(graph, 2, &opts).context("ground and first excited state")?;
    let gs = GroundStateGrid::new(graph, spectrum.ground(), grid);
    let sol = dl::build_all(&gs)?;
    let beta = dl::beta_dl(&gs, &sol.f[0], &sol.f[1])?;
    let gamma = dl::gamma_dl(&gs, [&sol.f[0], &sol.f[1]], &sol.g)?;
    let mut continuity: f64 = 0.0;
    let mut flux: f64 = 0.0;
    for field in sol.fields() {
        let r = dl::vertex_residuals(&gs, field);
        continuity = continuity.max(r.relative_continuity());
        flux = flux.max(r.relative_flux());
    }
    if let Some(dir) = dump_dir {
        crate::output::dump_fields(&gs, &sol, dir)?;
    }
    let pol = intrinsic(&beta, &gamma, spectrum.e10())?;
    let flags = pol.bound_violations();
    Ok((
        spectrum,
        MethodResult {
            beta_raw: beta,
            gamma_raw: gamma,
            beta_intrinsic: pol.beta,
            gamma_intrinsic: pol.gamma,
            trk_residual: None,
            vertex_continuity_residual: Some(continuity),
            vertex_flux_residual: Some(flux),
            flags,
        },
    ))
}

pub fn compare(sos: &MethodResult, dl: &MethodResult) -> Comparison {
    let beta_dev = sos.beta_intrinsic.max_abs_diff(&dl.beta_intrinsic);
    let gamma_dev = sos.gamma_intrinsic.max_abs_diff(&dl.gamma_intrinsic);
    let beta_scale = sos
        .beta_intrinsic
        .max_abs()
        .max(dl.beta_intrinsic.max_abs());
    let gamma_scale = sos
        .gamma_intrinsic
        .max_abs()
        .max(dl.gamma_intrinsic.max_abs());
    Comparison {
        beta_max_abs_dev: beta_dev,
        gamma_max_abs_dev: gamma_dev,
        beta_rel_dev: beta_dev / beta_scale.max(f64::MIN_POSITIVE),
        gamma_rel_dev: gamma_dev / gamma_scale.max(f64::MIN_POSITIVE),
    }
}

/// Run the configured methods on one graph. Each pipeline is timed end to
/// end as if run alone; with `method = both` the component-wise deviations
/// are attached.
pub fn run_single(
    graph: &QuantumGraph,
    config: &RunConfig,
    dump_dir: Option<&Path>,
) -> Result<RunResult> {
    let mut timings = Timings::default();
    let mut sos_result = None;
    let mut dl_result = None;
    let mut energies = None;

    if config.method.wants_sos() {
        let t0 = Instant::now();
        let (spectrum, res) = sos_pipeline(graph, config)?;
        timings.sos_ms = Some(t0.elapsed().as_secs_f64() * 1e3);
        energies = Some((spectrum.e0(), spectrum.mode(1).energy));
        sos_result = Some(res);
    }
    if config.method.wants_dl() {
        let t0 = Instant::now();
        let (spectrum, res) = dl_pipeline(graph, config, dump_dir)?;
        timings.dl_ms = Some(t0.elapsed().as_secs_f64() * 1e3);
        energies.get_or_insert((spectrum.e0(), spectrum.mode(1).energy));
        dl_result = Some(res);
    }
    let (e0, e1) = energies.expect("at least one method ran");
    let comparison = match (&sos_result, &dl_result) {
        (Some(s), Some(d)) => Some(compare(s, d)),
        _ => None,
    };
    Ok(RunResult {
        config: config.clone(),
        graph: GraphSummary::of(graph),
        e0,
        e1,
        e10: e1 - e0,
        sos: sos_result,
        dl: dl_result,
        comparison,
        timings,
    })
}
