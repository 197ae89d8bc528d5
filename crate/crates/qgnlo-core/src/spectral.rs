//! Free-particle eigenproblem on a quantum graph.
//!
//! Each edge carries `phi(s) = A sin(ks) + B cos(ks)`; Dirichlet walls at
//! leaves, value continuity and zero net flux at interior vertices. The
//! stacked coefficient vector solves `M(k) v = 0`, so eigenvalues are the
//! `k` where the secular matrix drops rank. Odd-order roots are bracketed
//! on the determinant sign; degenerate (even-order) roots show up as dips
//! of the smallest singular value, refined by golden section. Null-space
//! dimension at the refined root gives the multiplicity.

use crate::graph::QuantumGraph;
use crate::numerics::{golden_minimize, null_space, GridSpec};
use crate::sos::MomentMatrix;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("need at least {min} modes, requested {requested}")]
    TooFewModes { requested: usize, min: usize },
    #[error("root scan exhausted at k = {reached:.4} after finding {found} of {wanted} modes")]
    WindowExhausted {
        reached: f64,
        found: usize,
        wanted: usize,
    },
    #[error(
        "ill-conditioned degenerate subspace at k = {k:.8}: orthonormalization collapsed \
         a null vector to norm^2 = {norm2:.3e}"
    )]
    IllConditioned { k: f64, norm2: f64 },
    #[error("ground state must be simple, found multiplicity {0}")]
    DegenerateGround(usize),
}

/// Solver knobs. Defaults match the rest of the pipeline.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Samples per edge when modes are put on a grid (odd, >= 3).
    pub grid: GridSpec,
    /// Scan step is `pi / (scan_step_factor * total_length)`.
    pub scan_step_factor: f64,
    /// Null-space threshold relative to the largest singular value.
    pub sv_threshold: f64,
    /// Relative tolerance of root refinement in `k`.
    pub k_tol_rel: f64,
    /// Hard cap on the scan window; `None` derives one from the Weyl count.
    pub max_scan_k: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            scan_step_factor: 4.0,
            sv_threshold: 1e-8,
            k_tol_rel: 1e-13,
            max_scan_k: None,
        }
    }
}

/// Sin/cos coefficients of one edge function at a fixed `k`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeWave {
    pub sin_coeff: f64,
    pub cos_coeff: f64,
}

impl EdgeWave {
    pub fn value(&self, k: f64, s: f64) -> f64 {
        self.sin_coeff * (k * s).sin() + self.cos_coeff * (k * s).cos()
    }

    pub fn derivative(&self, k: f64, s: f64) -> f64 {
        k * (self.sin_coeff * (k * s).cos() - self.cos_coeff * (k * s).sin())
    }
}

/// One eigenmode: wavenumber, energy, and the union of edge waves.
#[derive(Debug, Clone)]
pub struct Mode {
    pub k: f64,
    pub energy: f64,
    /// Size of the degenerate group this mode belongs to.
    pub multiplicity: usize,
    waves: Vec<EdgeWave>,
}

impl Mode {
    pub fn new(k: f64, multiplicity: usize, waves: Vec<EdgeWave>) -> Self {
        Self {
            k,
            energy: 0.5 * k * k,
            multiplicity,
            waves,
        }
    }

    pub fn wave(&self, edge: usize) -> &EdgeWave {
        &self.waves[edge]
    }

    pub fn value(&self, edge: usize, s: f64) -> f64 {
        self.waves[edge].value(self.k, s)
    }

    /// Uniform samples of the edge function on `[0, a_p]`.
    pub fn sample_edge(&self, graph: &QuantumGraph, edge: usize, grid: &GridSpec) -> Vec<f64> {
        let a = graph.edge(edge).length;
        grid.samples(a)
            .iter()
            .map(|&s| self.value(edge, s))
            .collect()
    }

    pub fn sample_all(&self, graph: &QuantumGraph, grid: &GridSpec) -> Vec<Vec<f64>> {
        (0..graph.edge_count())
            .map(|p| self.sample_edge(graph, p, grid))
            .collect()
    }
}

/// Truncated eigenbasis, energies nondecreasing, mode 0 the ground state.
#[derive(Debug, Clone)]
pub struct Spectrum {
    modes: Vec<Mode>,
}

impl Spectrum {
    /// Assemble from externally built modes (energies must be nondecreasing).
    pub fn from_modes(modes: Vec<Mode>) -> Self {
        debug_assert!(modes.windows(2).all(|w| w[0].energy <= w[1].energy));
        Self { modes }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn mode(&self, n: usize) -> &Mode {
        &self.modes[n]
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn ground(&self) -> &Mode {
        &self.modes[0]
    }

    pub fn energies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.energy).collect()
    }

    pub fn e0(&self) -> f64 {
        self.modes[0].energy
    }

    /// First excitation gap `E_1 - E_0`.
    pub fn e10(&self) -> f64 {
        self.modes[1].energy - self.modes[0].energy
    }

    /// Exact (closed-form) L2 inner product of modes `n` and `m`.
    pub fn inner_product(&self, graph: &QuantumGraph, n: usize, m: usize) -> f64 {
        modes_inner(graph, &self.modes[n], &self.modes[m])
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_residual(&self, graph: &QuantumGraph) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 0..self.len() {
            for m in n..self.len() {
                let g = self.inner_product(graph, n, m);
                let target = if n == m { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Largest boundary-condition defect over all modes and vertices:
    /// wall values at leaves, pairwise value gaps and the outgoing-derivative
    /// sum (scaled by 1/k) at interior vertices.
    pub fn vertex_residual(&self, graph: &QuantumGraph) -> f64 {
        let mut worst: f64 = 0.0;
        for mode in &self.modes {
            if mode.k == 0.0 {
                continue; // constant loop mode satisfies everything exactly
            }
            for v in 0..graph.vertex_count() {
                let mut vals = Vec::new();
                let mut flux = 0.0;
                for (p, e) in graph.edges().iter().enumerate() {
                    if e.tail == v {
                        vals.push(mode.value(p, 0.0));
                        flux += mode.waves[p].derivative(mode.k, 0.0);
                    }
                    if e.head == v {
                        vals.push(mode.value(p, e.length));
                        flux -= mode.waves[p].derivative(mode.k, e.length);
                    }
                }
                if graph.is_leaf(v) {
                    worst = worst.max(vals[0].abs());
                } else {
                    for w in vals.windows(2) {
                        worst = worst.max((w[0] - w[1]).abs());
                    }
                    worst = worst.max((flux / mode.k).abs());
                }
            }
        }
        worst
    }
}

/// Secular matrix `M(k)` acting on stacked `(A_p, B_p)`, one Dirichlet row
/// per leaf, `deg - 1` continuity rows and one flux row (scaled by `1/k`)
/// per interior vertex.
pub fn secular_matrix(graph: &QuantumGraph, k: f64) -> DMatrix<f64> {
    let ne = graph.edge_count();
    let mut m = DMatrix::zeros(2 * ne, 2 * ne);

    // (edge, at_head) pairs incident to each vertex, in edge order
    let mut incident: Vec<Vec<(usize, bool)>> = vec![Vec::new(); graph.vertex_count()];
    for (p, e) in graph.edges().iter().enumerate() {
        incident[e.tail].push((p, false));
        incident[e.head].push((p, true));
    }

    let value = |p: usize, at_head: bool| -> [f64; 2] {
        if at_head {
            let ka = k * graph.edge(p).length;
            [ka.sin(), ka.cos()]
        } else {
            [0.0, 1.0]
        }
    };
    // outgoing derivative divided by k, for row conditioning
    let dout = |p: usize, at_head: bool| -> [f64; 2] {
        if at_head {
            let ka = k * graph.edge(p).length;
            [-ka.cos(), ka.sin()]
        } else {
            [1.0, 0.0]
        }
    };

    let mut row = 0;
    for (v, inc) in incident.iter().enumerate() {
        if graph.is_leaf(v) {
            let (p, at_head) = inc[0];
            let c = value(p, at_head);
            m[(row, 2 * p)] = c[0];
            m[(row, 2 * p + 1)] = c[1];
            row += 1;
        } else {
            for pair in inc.windows(2) {
                let (p1, h1) = pair[0];
                let (p2, h2) = pair[1];
                let c1 = value(p1, h1);
                let c2 = value(p2, h2);
                m[(row, 2 * p1)] += c1[0];
                m[(row, 2 * p1 + 1)] += c1[1];
                m[(row, 2 * p2)] -= c2[0];
                m[(row, 2 * p2 + 1)] -= c2[1];
                row += 1;
            }
            for &(p, at_head) in inc {
                let d = dout(p, at_head);
                m[(row, 2 * p)] += d[0];
                m[(row, 2 * p + 1)] += d[1];
            }
            row += 1;
        }
    }
    debug_assert_eq!(row, 2 * ne);
    m
}

fn smallest_singular_value(graph: &QuantumGraph, k: f64) -> f64 {
    let m = secular_matrix(graph, k);
    let sv = m.singular_values();
    sv[sv.len() - 1]
}

fn det_sign(graph: &QuantumGraph, k: f64) -> f64 {
    secular_matrix(graph, k).determinant().signum()
}

struct Root {
    k: f64,
    vectors: Vec<DVector<f64>>,
}

/// The `n_modes` lowest modes (ground state included). When a degenerate
/// multiplet straddles the cutoff the whole multiplet is kept, so the
/// returned count can exceed `n_modes`.
pub fn find_spectrum(
    graph: &QuantumGraph,
    n_modes: usize,
    opts: &SolverOptions,
) -> Result<Spectrum, SpectralError> {
    if n_modes < 1 {
        return Err(SpectralError::TooFewModes {
            requested: n_modes,
            min: 1,
        });
    }
    let total = graph.total_length();
    let step = std::f64::consts::PI / (opts.scan_step_factor * total);
    // Weyl count is ~ kL/pi; cap the scan far beyond where n_modes must lie
    let k_cap = opts
        .max_scan_k
        .unwrap_or((n_modes as f64 + 16.0) * 4.0 * std::f64::consts::PI / total);

    let mut roots: Vec<Root> = Vec::new();
    let mut found = 0usize;
    if graph.is_pure_loop() {
        // constant zero mode, handled outside the scan
        let ne = graph.edge_count();
        let mut v = DVector::zeros(2 * ne);
        for p in 0..ne {
            v[2 * p + 1] = 1.0;
        }
        roots.push(Root {
            k: 0.0,
            vectors: vec![v],
        });
        found = 1;
    }

    let accept = |kr: f64, roots: &mut Vec<Root>| -> usize {
        if roots.iter().any(|r| (r.k - kr).abs() <= 1e-8 * kr.max(1.0)) {
            return 0;
        }
        let vectors = null_space(&secular_matrix(graph, kr), opts.sv_threshold);
        let mult = vectors.len();
        if mult > 0 {
            roots.push(Root { k: kr, vectors });
        }
        mult
    };

    let mut k_hist = [0.0f64; 3];
    let mut s_hist = [f64::INFINITY; 3];
    let mut d_prev = 0.0f64;
    let mut j = 0usize;
    // dips are confirmed one sample late, so keep scanning two extra steps
    // after the count is reached in case a root sits at the frontier
    let mut cooldown = 2usize;
    loop {
        if found >= n_modes {
            if cooldown == 0 {
                break;
            }
            cooldown -= 1;
        }
        j += 1;
        let k = step * j as f64;
        if k > k_cap {
            return Err(SpectralError::WindowExhausted {
                reached: k,
                found,
                wanted: n_modes,
            });
        }
        let s = smallest_singular_value(graph, k);
        let d = det_sign(graph, k);
        k_hist = [k_hist[1], k_hist[2], k];
        s_hist = [s_hist[1], s_hist[2], s];

        if j >= 2 && d != d_prev && d_prev != 0.0 && d != 0.0 {
            let kr = crate::numerics::bracket_and_bisect(
                |kk| det_sign(graph, kk),
                k_hist[1],
                k,
                k - k_hist[1],
                opts.k_tol_rel,
            );
            for r in kr {
                found += accept(r, &mut roots);
            }
        }
        if j >= 3 && s_hist[1] <= s_hist[0] && s_hist[1] <= s_hist[2] {
            let kr = golden_minimize(
                |kk| smallest_singular_value(graph, kk),
                k_hist[0],
                k_hist[2],
                opts.k_tol_rel * k,
            );
            found += accept(kr, &mut roots);
        }
        d_prev = d;
    }

    roots.sort_by(|a, b| a.k.partial_cmp(&b.k).unwrap());

    // assemble modes, orthonormalizing each degenerate group
    let mut modes = Vec::new();
    for root in &roots {
        if modes.len() >= n_modes {
            break;
        }
        let group = orthonormal_group(graph, root)?;
        modes.extend(group);
    }
    fix_ground_sign(graph, &mut modes);
    Ok(Spectrum { modes })
}

/// The lowest mode only. For graphs with a Dirichlet leaf the ground
/// energy is positive and the mode vanishes only at the walls; a pure
/// loop gets the exact constant zero-energy mode.
pub fn ground_state(graph: &QuantumGraph, opts: &SolverOptions) -> Result<Mode, SpectralError> {
    let spec = find_spectrum(graph, 1, opts)?;
    let mode = spec.modes[0].clone();
    if mode.multiplicity != 1 {
        return Err(SpectralError::DegenerateGround(mode.multiplicity));
    }
    Ok(mode)
}

fn orthonormal_group(graph: &QuantumGraph, root: &Root) -> Result<Vec<Mode>, SpectralError> {
    let mult = root.vectors.len();
    let k = root.k;
    let mut kept: Vec<Vec<EdgeWave>> = Vec::new();
    for raw in &root.vectors {
        let mut waves: Vec<EdgeWave> = (0..graph.edge_count())
            .map(|p| EdgeWave {
                sin_coeff: raw[2 * p],
                cos_coeff: raw[2 * p + 1],
            })
            .collect();
        // modified Gram-Schmidt under the exact L2 product, SVD vector order
        for prev in &kept {
            let overlap = waves_inner(graph, k, &waves, prev);
            for (w, q) in waves.iter_mut().zip(prev.iter()) {
                w.sin_coeff -= overlap * q.sin_coeff;
                w.cos_coeff -= overlap * q.cos_coeff;
            }
        }
        let norm2 = waves_inner(graph, k, &waves, &waves);
        if norm2.is_nan() || norm2 <= 1e-20 {
            return Err(SpectralError::IllConditioned { k, norm2 });
        }
        let inv = 1.0 / norm2.sqrt();
        for w in &mut waves {
            w.sin_coeff *= inv;
            w.cos_coeff *= inv;
        }
        kept.push(waves);
    }
    Ok(kept
        .into_iter()
        .map(|waves| Mode {
            k,
            energy: 0.5 * k * k,
            multiplicity: mult,
            waves,
        })
        .collect())
}

fn fix_ground_sign(graph: &QuantumGraph, modes: &mut [Mode]) {
    if let Some(g) = modes.first_mut() {
        // the ground state is nodeless, so its plain integral is bounded
        // away from zero; flip the global sign to make it positive
        let mut tot = 0.0;
        for (p, e) in graph.edges().iter().enumerate() {
            tot += plain_integral(g.k, &g.waves[p], e.length);
        }
        if tot < 0.0 {
            for w in &mut g.waves {
                w.sin_coeff = -w.sin_coeff;
                w.cos_coeff = -w.cos_coeff;
            }
        }
    }
}

fn plain_integral(k: f64, w: &EdgeWave, a: f64) -> f64 {
    if k == 0.0 {
        return w.cos_coeff * a;
    }
    w.sin_coeff * (1.0 - (k * a).cos()) / k + w.cos_coeff * (k * a).sin() / k
}

fn waves_inner(graph: &QuantumGraph, k: f64, u: &[EdgeWave], v: &[EdgeWave]) -> f64 {
    let mut tot = 0.0;
    for (p, e) in graph.edges().iter().enumerate() {
        tot += edge_product_integral(e.length, k, &u[p], k, &v[p], false);
    }
    tot
}

fn modes_inner(graph: &QuantumGraph, a: &Mode, b: &Mode) -> f64 {
    let mut tot = 0.0;
    for (p, e) in graph.edges().iter().enumerate() {
        tot += edge_product_integral(e.length, a.k, &a.waves[p], b.k, &b.waves[p], false);
    }
    tot
}

/// Closed-form `int_0^a [s] phi1 phi2 ds` for two sin/cos edge waves.
/// `with_s` multiplies the integrand by the edge coordinate.
pub(crate) fn edge_product_integral(
    a: f64,
    k1: f64,
    w1: &EdgeWave,
    k2: f64,
    w2: &EdgeWave,
    with_s: bool,
) -> f64 {
    // int_0^a s sin(cs) ds and friends; c = 0 handled exactly so that
    // degenerate pairs (bit-identical k) hit the closed forms
    let s_mom = |c: f64| -> f64 {
        if c == 0.0 {
            0.0
        } else {
            ((c * a).sin() - c * a * (c * a).cos()) / (c * c)
        }
    };
    let c_mom = |c: f64| -> f64 {
        if c == 0.0 {
            0.5 * a * a
        } else {
            ((c * a).cos() + c * a * (c * a).sin() - 1.0) / (c * c)
        }
    };
    let s_int = |c: f64| -> f64 {
        if c == 0.0 {
            0.0
        } else {
            (1.0 - (c * a).cos()) / c
        }
    };
    let c_int = |c: f64| -> f64 {
        if c == 0.0 {
            a
        } else {
            (c * a).sin() / c
        }
    };
    let dm = k1 - k2;
    let dp = k1 + k2;
    let (ss, cc, sc, cs) = if with_s {
        (
            0.5 * (c_mom(dm) - c_mom(dp)),
            0.5 * (c_mom(dm) + c_mom(dp)),
            0.5 * (s_mom(dp) + s_mom(dm)),
            0.5 * (s_mom(dp) - s_mom(dm)),
        )
    } else {
        (
            0.5 * (c_int(dm) - c_int(dp)),
            0.5 * (c_int(dm) + c_int(dp)),
            0.5 * (s_int(dp) + s_int(dm)),
            0.5 * (s_int(dp) - s_int(dm)),
        )
    };
    w1.sin_coeff * w2.sin_coeff * ss
        + w1.sin_coeff * w2.cos_coeff * sc
        + w1.cos_coeff * w2.sin_coeff * cs
        + w1.cos_coeff * w2.cos_coeff * cc
}

/// Thomas-Reiche-Kuhn diagnostic for state `n`: distance of the truncated
/// sum `sum_m E_mn (x_nm^2 + y_nm^2)` from the exact value 1/2 (natural
/// units, both axes combined, one electron). Decreases as the basis grows.
pub fn trk_residual(spectrum: &Spectrum, mx: &MomentMatrix, my: &MomentMatrix, n: usize) -> f64 {
    let e = spectrum.energies();
    let mut acc = crate::numerics::KahanSum::new();
    for m in 0..spectrum.len() {
        let emn = e[m] - e[n];
        acc.add(emn * (mx.get(n, m).powi(2) + my.get(n, m).powi(2)));
    }
    (acc.value() - 0.5).abs()
}
