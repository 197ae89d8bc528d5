//! Shared oracles for the integration suites. Everything here is an
//! independent route to the same physics: a finite-difference
//! discretization of the whole graph for eigenvalues, and closed-form
//! piecewise integrals for moments. None of it touches the solver paths
//! under test.
#![allow(dead_code)] // each test target links only the helpers it uses

use nalgebra::DMatrix;
use qgnlo_core::graph::presets;
use qgnlo_core::QuantumGraph;

pub fn seven_edge() -> QuantumGraph {
    presets::three_prong(
        [0.63, 3.61, 1.36, 1.50, 2.26, 2.70, 4.36],
        [180.0, 60.0, 0.0, 60.0, 0.0, 36.0, 0.0],
    )
}

pub fn paper_star(rot_deg: f64) -> QuantumGraph {
    presets::star(&[
        (0.4, std::f64::consts::PI),
        (0.2, std::f64::consts::FRAC_PI_2),
        (0.6, rot_deg.to_radians()),
    ])
}

pub fn bent_chain() -> QuantumGraph {
    presets::chain(&[
        (1.0, 0.0),
        (0.7, 30f64.to_radians()),
        (1.3, -20f64.to_radians()),
    ])
}

/// Triangle with a pendant edge: one independent cycle plus a Dirichlet
/// leaf, the composite case neither the star nor the loop formulas cover.
pub fn pendant_triangle() -> QuantumGraph {
    use qgnlo_core::graph::Edge;
    let t = 2.0 * std::f64::consts::FRAC_PI_3;
    let v2 = [1.0 + 0.8 * t.cos(), 0.8 * t.sin()];
    let l3 = (v2[0] * v2[0] + v2[1] * v2[1]).sqrt();
    let a3 = (-v2[1]).atan2(-v2[0]);
    QuantumGraph::new(
        "pendant_triangle".into(),
        vec![
            Edge {
                length: 1.0,
                angle: 0.0,
                tail: 0,
                head: 1,
            },
            Edge {
                length: 0.8,
                angle: t,
                tail: 1,
                head: 2,
            },
            Edge {
                length: l3,
                angle: a3,
                tail: 2,
                head: 0,
            },
            Edge {
                length: 0.9,
                angle: -0.5,
                tail: 0,
                head: 3,
            },
        ],
    )
    .unwrap()
}

/// Same topology as [`pendant_triangle`] but with the wall as vertex 0, so
/// the embedding root sits on the pendant leaf rather than on the cycle.
pub fn leaf_rooted_pendant() -> QuantumGraph {
    use qgnlo_core::graph::Edge;
    let t = 2.0 * std::f64::consts::FRAC_PI_3;
    let v2 = [1.0 + 0.8 * t.cos(), 0.8 * t.sin()];
    let l3 = (v2[0] * v2[0] + v2[1] * v2[1]).sqrt();
    let a3 = (-v2[1]).atan2(-v2[0]);
    QuantumGraph::new(
        "leaf_rooted_pendant".into(),
        vec![
            Edge {
                length: 0.9,
                angle: -0.5 + std::f64::consts::PI,
                tail: 0,
                head: 1,
            },
            Edge {
                length: 1.0,
                angle: 0.0,
                tail: 1,
                head: 2,
            },
            Edge {
                length: 0.8,
                angle: t,
                tail: 2,
                head: 3,
            },
            Edge {
                length: l3,
                angle: a3,
                tail: 3,
                head: 1,
            },
        ],
    )
    .unwrap()
}

// ---------------------------------------------------------------------
// Finite-difference eigenvalue oracle
//
// Second-order discretization of the whole graph (P1 stiffness, lumped
// mass): interior nodes per edge plus one shared unknown per non-leaf
// vertex, Dirichlet leaves dropped. Eigenvalues come from inertia-count
// bisection: interior tridiagonal blocks are eliminated edge by edge
// (counting pivot signs) with their Schur complement accumulated on the
// small vertex block, whose inertia is read off a dense eigensolve.

struct FdGraph {
    cells: Vec<usize>,
    spacings: Vec<f64>,
    /// Map vertex -> index into the interior-vertex block, None for leaves.
    vertex_slot: Vec<Option<usize>>,
    n_vertex: usize,
}

impl FdGraph {
    fn new(graph: &QuantumGraph, total_points: usize) -> Self {
        let total = graph.total_length();
        let cells: Vec<usize> = graph
            .edges()
            .iter()
            .map(|e| ((e.length / total * total_points as f64).round() as usize).max(8))
            .collect();
        let spacings: Vec<f64> = graph
            .edges()
            .iter()
            .zip(&cells)
            .map(|(e, &n)| e.length / n as f64)
            .collect();
        let mut vertex_slot = vec![None; graph.vertex_count()];
        let mut n_vertex = 0;
        for (v, slot) in vertex_slot.iter_mut().enumerate() {
            if !graph.is_leaf(v) {
                *slot = Some(n_vertex);
                n_vertex += 1;
            }
        }
        Self {
            cells,
            spacings,
            vertex_slot,
            n_vertex,
        }
    }

    /// Number of eigenvalues of the discrete pencil below `lambda`.
    fn count_below(&self, graph: &QuantumGraph, lambda: f64) -> usize {
        let mut neg = 0usize;
        let nv = self.n_vertex;
        let mut schur = DMatrix::<f64>::zeros(nv, nv);

        for (p, e) in graph.edges().iter().enumerate() {
            let n = self.cells[p];
            let h = self.spacings[p];
            let k = 1.0 / (2.0 * h);
            let m_half = h / 2.0;
            // vertex diagonal contributions of the two boundary cells
            for (v, _at_head) in [(e.tail, false), (e.head, true)] {
                if let Some(slot) = self.vertex_slot[v] {
                    schur[(slot, slot)] += k - lambda * m_half;
                }
            }
            let m = n - 1; // interior nodes
            let t = 1.0 / h - lambda * h;
            let off = -k;
            // LDL of the interior tridiagonal, counting pivots
            let mut pivots = Vec::with_capacity(m);
            let mut prev = t;
            pivots.push(prev);
            if prev < 0.0 {
                neg += 1;
            }
            for _ in 1..m {
                let mut pv = t - off * off / prev;
                if pv == 0.0 {
                    pv = -f64::MIN_POSITIVE;
                }
                if pv < 0.0 {
                    neg += 1;
                }
                pivots.push(pv);
                prev = pv;
            }
            // Schur updates through the boundary couplings
            let bt = self.vertex_slot[e.tail].map(|slot| (slot, off));
            let bh = self.vertex_slot[e.head].map(|slot| (slot, off));
            let solve = |unit_pos: usize, strength: f64| -> Vec<f64> {
                // LDL^T y = strength * e_unit_pos
                let mut z = vec![0.0; m];
                z[unit_pos] = strength;
                for i in 1..m {
                    let l = off / pivots[i - 1];
                    z[i] -= l * z[i - 1];
                }
                let mut y: Vec<f64> = z.iter().zip(&pivots).map(|(v, p)| v / p).collect();
                for i in (0..m - 1).rev() {
                    let l = off / pivots[i];
                    y[i] -= l * y[i + 1];
                }
                y
            };
            if let Some((st, b)) = bt {
                let y = solve(0, b);
                schur[(st, st)] -= b * y[0];
                if let Some((sh, c)) = bh {
                    schur[(st, sh)] -= c * y[m - 1];
                    schur[(sh, st)] -= c * y[m - 1];
                }
            }
            if let Some((sh, c)) = bh {
                let u = solve(m - 1, c);
                schur[(sh, sh)] -= c * u[m - 1];
            }
        }

        if nv > 0 {
            let eig = nalgebra::SymmetricEigen::new(schur);
            neg += eig.eigenvalues.iter().filter(|&&v| v < 0.0).count();
        }
        neg
    }
}

fn fd_eigs_at(graph: &QuantumGraph, total_points: usize, count: usize) -> Vec<f64> {
    let fd = FdGraph::new(graph, total_points);
    let mut hi = 1.0;
    while fd.count_below(graph, hi) < count {
        hi *= 2.0;
    }
    (1..=count)
        .map(|j| {
            let mut lo = -1e-9;
            let mut up = hi;
            while up - lo > 1e-13 * up.abs().max(1e-6) {
                let mid = 0.5 * (lo + up);
                if fd.count_below(graph, mid) >= j {
                    up = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + up)
        })
        .collect()
}

/// First `count` eigenvalues by second-order finite differences with
/// Richardson extrapolation over a grid halving.
pub fn fd_eigenvalues(graph: &QuantumGraph, total_points: usize, count: usize) -> Vec<f64> {
    let coarse = fd_eigs_at(graph, total_points, count);
    let fine = fd_eigs_at(graph, 2 * total_points, count);
    coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect()
}

/// Group eigenvalues into clusters within a relative gap, returning
/// (representative value, multiplicity).
pub fn cluster(values: &[f64], rel_tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some((rep, mult)) if (v - *rep).abs() <= rel_tol * v.abs().max(1e-9) => {
                *mult += 1;
            }
            _ => out.push((v, 1)),
        }
    }
    out
}

// ---------------------------------------------------------------------
// Closed-form integrals of piecewise-linear coordinates against trig,
// for loop-moment oracles.

/// `int_0^a (c0 + c1 u) cos(w u + phase) du`, exact.
pub fn int_lin_cos(c0: f64, c1: f64, w: f64, phase: f64, a: f64) -> f64 {
    assert!(w != 0.0);
    let (s1, c1f) = (w * a + phase).sin_cos();
    let (s0, c0f) = phase.sin_cos();
    c0 * (s1 - s0) / w + c1 * ((c1f - c0f) / (w * w) + a * s1 / w)
}

/// `int_0^a (c0 + c1 u) sin(w u + phase) du`, exact.
pub fn int_lin_sin(c0: f64, c1: f64, w: f64, phase: f64, a: f64) -> f64 {
    assert!(w != 0.0);
    let (s1, c1f) = (w * a + phase).sin_cos();
    let (s0, c0f) = phase.sin_cos();
    c0 * (c0f - c1f) / w + c1 * ((s1 - s0) / (w * w) - a * c1f / w)
}

/// Exact ground-state TRK partial sum for a polygon loop: levels `1..=n_levels`
/// (each doubly degenerate), both axes combined.
pub fn loop_trk_partial_sum(graph: &QuantumGraph, n_levels: usize) -> f64 {
    let el = graph.total_length();
    // chain offsets and per-segment coordinate data in traversal order;
    // for the presets the edges already run head-to-tail around the cycle
    let mut tot = 0.0;
    for n in 1..=n_levels {
        let k = 2.0 * std::f64::consts::PI * n as f64 / el;
        let e_n = 0.5 * k * k;
        for axis in [qgnlo_core::Axis::X, qgnlo_core::Axis::Y] {
            let mut cpart = 0.0;
            let mut spart = 0.0;
            let mut s0 = 0.0;
            for (p, e) in graph.edges().iter().enumerate() {
                let off = graph.edge_offset(p)[axis.index()];
                let slope = axis.projection(e.angle);
                cpart += int_lin_cos(off, slope, k, k * s0, e.length);
                spart += int_lin_sin(off, slope, k, k * s0, e.length);
                s0 += e.length;
            }
            // |<0|r|n>|^2 summed over the degenerate pair, psi0 = 1/sqrt(L),
            // partners sqrt(2/L) cos/sin; the constant part of r drops out
            let w = 2.0 / (el * el);
            tot += e_n * w * (cpart * cpart + spart * spart);
        }
    }
    tot
}

/// Max pointwise gap between `F psi0` and its spectral representation
/// `sum_n (-xbar_n0 / E_n0) psi_n` over `n_modes` states, relative to the
/// peak of the sum.
pub fn f_reconstruction_error(graph: &QuantumGraph, n_modes: usize) -> f64 {
    use qgnlo_core::dl::{self, GroundStateGrid};
    use qgnlo_core::sos;
    use qgnlo_core::spectral::{find_spectrum, SolverOptions};
    use qgnlo_core::{Axis, GridSpec};

    let grid = GridSpec::default();
    let opts = SolverOptions {
        grid,
        ..Default::default()
    };
    let spec = find_spectrum(graph, n_modes, &opts).unwrap();
    let mx = sos::transition_moments(&spec, graph, Axis::X, &grid);
    let gs = GroundStateGrid::new(graph, spec.ground(), grid);
    let f = dl::build_f(&gs, Axis::X).unwrap();
    let e = spec.energies();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for p in 0..graph.edge_count() {
        let psi0 = gs.psi(p);
        let mut recon = vec![0.0; grid.points()];
        for n in 1..spec.len() {
            let coeff = -mx.barred(n, 0) / (e[n] - e[0]);
            let col = spec.mode(n).sample_edge(graph, p, &grid);
            for (r, v) in recon.iter_mut().zip(col) {
                *r += coeff * v;
            }
        }
        for (j, r) in recon.iter().enumerate() {
            worst = worst.max((f.samples(p)[j] * psi0[j] - r).abs());
            scale = scale.max(r.abs());
        }
    }
    worst / scale
}

/// Analytic particle-in-a-box moment `x_nm`, states numbered from 1.
pub fn box_moment(a: f64, n: usize, m: usize) -> f64 {
    if n == m {
        return a / 2.0;
    }
    if (n + m).is_multiple_of(2) {
        return 0.0;
    }
    let (nf, mf) = (n as f64, m as f64);
    let d2 = (nf * nf - mf * mf).powi(2);
    -8.0 * a * nf * mf / (std::f64::consts::PI.powi(2) * d2)
}

/// Exact ground-state TRK partial sum for the box with `m_excited` states.
pub fn box_trk_partial_sum(a: f64, m_excited: usize) -> f64 {
    let e = |n: usize| 0.5 * (n as f64 * std::f64::consts::PI / a).powi(2);
    let mut tot = 0.0;
    for m in 2..=(1 + m_excited) {
        tot += (e(m) - e(1)) * box_moment(a, 1, m).powi(2);
    }
    tot
}
