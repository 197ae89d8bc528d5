//! Dalgarno-Lewis fields on a quantum graph, built from the ground state
//! alone, and the hyperpolarizabilities as ground-state expectation values.
//!
//! Per edge, a field obeys `(psi0^2 F')' = 2 sigma psi0^2` (natural units)
//! and is recovered by two cumulative quadratures. The first integration
//! constant `C_p` of each edge is the field flux entering at its tail;
//! Dirichlet walls pin them (`C_p = 0` entering a wall, `C_p = -<sigma_p>`
//! exiting into one) and interior vertices conserve them. Graphs whose
//! cycles leave the vertex system underdetermined get one closure row per
//! independent cycle, demanding the chained field values match around it.
//! A single pure cycle instead uses the sequential periodic construction.
//!
//! The outer integrand `2(inner + C)/psi0^2` is finite at a wall once the
//! wall condition holds exactly: the bracket is O(s^3) against psi0^2 =
//! O(s^2), so the wall node takes the limit value 0 and edges whose head
//! is a wall are integrated from the wall end to keep that argument.

use crate::graph::{Axis, QuantumGraph};
use crate::numerics::{
    cumulative_simpson, simpson, solve_least_squares, GridSpec, KahanSum, NumericsError,
};
use crate::spectral::Mode;
use crate::tensor::{BetaTensor, GammaTensor};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DlError {
    #[error("flux-constant system failed: {0}")]
    FluxSystem(#[from] NumericsError),
    #[error(
        "vertex flux system alone is underdetermined ({cycles} independent cycles); \
             use the field builders, which add cycle closure rows"
    )]
    UnderdeterminedFlux { cycles: usize },
    #[error("loop construction requires a pure single cycle")]
    NotPureLoop,
    #[error("non-finite quadrature on edge {edge} (wall condition violated?)")]
    NonFiniteQuadrature { edge: usize },
    #[error("sampled factor has {got} points per edge, ground-state grid has {expected}")]
    GridMismatch { got: usize, expected: usize },
}

/// Ground state sampled on the shared per-edge grid, with the projected
/// coordinates and their barred forms. All later quadratures run on this.
pub struct GroundStateGrid<'g> {
    graph: &'g QuantumGraph,
    grid: GridSpec,
    pub energy: f64,
    psi: Vec<Vec<f64>>,
    psi_sq: Vec<Vec<f64>>,
    spacing: Vec<f64>,
    /// Simpson norm of psi^2; stays within roundoff of 1.
    norm: f64,
    coord: [Vec<Vec<f64>>; 2],
    rbar: [Vec<Vec<f64>>; 2],
    r00: [f64; 2],
}

impl<'g> GroundStateGrid<'g> {
    pub fn new(graph: &'g QuantumGraph, ground: &Mode, grid: GridSpec) -> Self {
        let ne = graph.edge_count();
        let psi: Vec<Vec<f64>> = (0..ne)
            .map(|p| ground.sample_edge(graph, p, &grid))
            .collect();
        let psi_sq: Vec<Vec<f64>> = psi
            .iter()
            .map(|col| col.iter().map(|v| v * v).collect())
            .collect();
        let spacing: Vec<f64> = (0..ne)
            .map(|p| grid.spacing(graph.edge(p).length))
            .collect();
        let norm: f64 = (0..ne).map(|p| simpson(&psi_sq[p], spacing[p])).sum();

        let mut coord: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        let mut r00 = [0.0; 2];
        let mut rbar: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        for axis in Axis::BOTH {
            let ai = axis.index();
            coord[ai] = (0..ne)
                .map(|p| {
                    let e = graph.edge(p);
                    let off = graph.edge_offset(p)[ai];
                    let proj = axis.projection(e.angle);
                    grid.samples(e.length)
                        .iter()
                        .map(|&s| off + proj * s)
                        .collect()
                })
                .collect();
            let mut acc = KahanSum::new();
            for p in 0..ne {
                let vals: Vec<f64> = coord[ai][p]
                    .iter()
                    .zip(&psi_sq[p])
                    .map(|(c, w)| c * w)
                    .collect();
                acc.add(simpson(&vals, spacing[p]));
            }
            r00[ai] = acc.value() / norm;
            rbar[ai] = coord[ai]
                .iter()
                .map(|col| col.iter().map(|c| c - r00[ai]).collect())
                .collect();
        }

        Self {
            graph,
            grid,
            energy: ground.energy,
            psi,
            psi_sq,
            spacing,
            norm,
            coord,
            rbar,
            r00,
        }
    }

    pub fn graph(&self) -> &QuantumGraph {
        self.graph
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn psi(&self, edge: usize) -> &[f64] {
        &self.psi[edge]
    }

    pub fn psi_sq(&self, edge: usize) -> &[f64] {
        &self.psi_sq[edge]
    }

    /// Ground-state mean of the projected coordinate on `axis`.
    pub fn r00(&self, axis: Axis) -> f64 {
        self.r00[axis.index()]
    }

    pub fn barred_coord(&self, axis: Axis, edge: usize) -> &[f64] {
        &self.rbar[axis.index()][edge]
    }

    fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }
}

/// Which field a [`DlField`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlFieldKind {
    F(Axis),
    G(Axis, Axis),
}

/// A sampled Dalgarno-Lewis field over the whole graph, gauge-fixed so its
/// ground-state expectation vanishes on the shared grid.
#[derive(Debug, Clone)]
pub struct DlField {
    pub kind: DlFieldKind,
    samples: Vec<Vec<f64>>,
    /// First integration constants in tail convention (`C_p` for F, `D_p` for G).
    pub flux_constants: Vec<f64>,
    /// Per-edge source moments `<sigma_p>`.
    pub edge_moments: Vec<f64>,
    /// Largest flux bracket `|2(inner + C)|` met during construction; the
    /// natural scale for flux-conservation residuals.
    bracket_scale: f64,
}

impl DlField {
    pub fn samples(&self, edge: usize) -> &[f64] {
        &self.samples[edge]
    }

    pub fn value_at_tail(&self, edge: usize) -> f64 {
        self.samples[edge][0]
    }

    pub fn value_at_head(&self, edge: usize) -> f64 {
        *self.samples[edge].last().unwrap()
    }
}

/// Per-edge first moments `<sigma_p> = int sigma psi0^2` of the barred
/// coordinate; they sum to zero over the graph by the definition of `r00`.
pub fn edge_moments(gs: &GroundStateGrid, axis: Axis) -> Vec<f64> {
    source_moments(gs, &gs.rbar[axis.index()])
}

fn source_moments(gs: &GroundStateGrid, source: &[Vec<f64>]) -> Vec<f64> {
    (0..gs.edge_count())
        .map(|p| {
            let vals: Vec<f64> = source[p]
                .iter()
                .zip(&gs.psi_sq[p])
                .map(|(s, w)| s * w)
                .collect();
            simpson(&vals, gs.spacing[p])
        })
        .collect()
}

/// Solve the wall/vertex flux system for the tail-convention constants.
///
/// Complete for trees (and anything whose cycles are absent); a graph with
/// independent cycles leaves circulation freedom that only the field-value
/// closure can fix, so this errors and the builders do it internally.
pub fn solve_flux_constants(gs: &GroundStateGrid, moments: &[f64]) -> Result<Vec<f64>, DlError> {
    let g = gs.graph;
    let cycles = g.edge_count() + 1 - g.vertex_count();
    if cycles > 0 {
        return Err(DlError::UnderdeterminedFlux { cycles });
    }
    solve_constants_with_closure(gs, moments, &[])
}

/// Closure data for one edge: integrals of `2/psi^2` and of
/// `2*inner/psi^2` tail to head, finite only away from walls.
#[derive(Clone, Copy, Default)]
struct EdgeClosure {
    j: f64,
    i2: f64,
}

fn solve_constants_with_closure(
    gs: &GroundStateGrid,
    moments: &[f64],
    closures: &[(Vec<(usize, f64)>, f64)],
) -> Result<Vec<f64>, DlError> {
    let g = gs.graph;
    let ne = g.edge_count();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (p, e) in g.edges().iter().enumerate() {
        if g.is_leaf(e.tail) {
            let mut r = vec![0.0; ne];
            r[p] = 1.0;
            rows.push(r);
            rhs.push(0.0);
        }
        if g.is_leaf(e.head) {
            let mut r = vec![0.0; ne];
            r[p] = 1.0;
            rows.push(r);
            rhs.push(-moments[p]);
        }
    }
    for v in g.interior_vertices() {
        let mut r = vec![0.0; ne];
        let mut b = 0.0;
        for (p, e) in g.edges().iter().enumerate() {
            if e.tail == v {
                r[p] += 1.0;
            }
            if e.head == v {
                r[p] -= 1.0;
                b += moments[p];
            }
        }
        rows.push(r);
        rhs.push(b);
    }
    for (coeffs, b) in closures {
        let mut r = vec![0.0; ne];
        for &(p, c) in coeffs {
            r[p] += c;
        }
        rows.push(r);
        rhs.push(*b);
    }
    let a = DMatrix::from_fn(rows.len(), ne, |i, j| rows[i][j]);
    let b = DVector::from_vec(rhs);
    let x = solve_least_squares(&a, &b, 1e-8)?;
    Ok(x.as_slice().to_vec())
}

/// Spanning-tree bookkeeping for chaining and cycle closure.
struct TreeInfo {
    /// `parent[v] = (parent vertex, edge, +1 if edge points parent -> v)`.
    parent: Vec<Option<(usize, usize, f64)>>,
    /// Vertices in BFS visit order, root first.
    order: Vec<usize>,
    /// Edges outside the spanning tree, one fundamental cycle each.
    non_tree: Vec<usize>,
}

fn spanning_tree(g: &QuantumGraph) -> TreeInfo {
    let nv = g.vertex_count();
    let mut parent: Vec<Option<(usize, usize, f64)>> = vec![None; nv];
    let mut seen = vec![false; nv];
    let mut in_tree = vec![false; g.edge_count()];
    seen[0] = true;
    let mut order = vec![0usize];
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for (p, e) in g.edges().iter().enumerate() {
            if in_tree[p] {
                continue;
            }
            if e.tail == v && !seen[e.head] {
                seen[e.head] = true;
                in_tree[p] = true;
                parent[e.head] = Some((v, p, 1.0));
                order.push(e.head);
                queue.push_back(e.head);
            } else if e.head == v && !seen[e.tail] {
                seen[e.tail] = true;
                in_tree[p] = true;
                parent[e.tail] = Some((v, p, -1.0));
                order.push(e.tail);
                queue.push_back(e.tail);
            }
        }
    }
    let non_tree = (0..g.edge_count()).filter(|&p| !in_tree[p]).collect();
    TreeInfo {
        parent,
        order,
        non_tree,
    }
}

/// Tree path as (edge, sign) steps, sign +1 when the edge points
/// parent -> child along the downward direction.
type SignedPath = Vec<(usize, f64)>;

/// Signed tree path from `v` up to the root.
fn path_to_root(tree: &TreeInfo, mut v: usize) -> SignedPath {
    let mut out = Vec::new();
    while let Some((pv, pe, sg)) = tree.parent[v] {
        out.push((pe, sg));
        v = pv;
    }
    out
}

fn build_field(
    gs: &GroundStateGrid,
    source: &[Vec<f64>],
    kind: DlFieldKind,
) -> Result<DlField, DlError> {
    let g = gs.graph;
    let ne = g.edge_count();
    let moments = source_moments(gs, source);
    let tree = spanning_tree(g);

    // cycle closure rows: going around each fundamental cycle the chained
    // field increments must cancel, sum_p sign (I2_p + J_p C_p) = 0
    let mut closures: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    if !tree.non_tree.is_empty() {
        // fundamental cycles, common root-side suffixes trimmed away
        let cycles: Vec<(usize, SignedPath, SignedPath)> = tree
            .non_tree
            .iter()
            .map(|&p| {
                let e = g.edge(p);
                let mut up_head = path_to_root(&tree, e.head);
                let mut up_tail = path_to_root(&tree, e.tail);
                while let (Some(a), Some(c)) = (up_head.last(), up_tail.last()) {
                    if a.0 == c.0 {
                        up_head.pop();
                        up_tail.pop();
                    } else {
                        break;
                    }
                }
                (p, up_head, up_tail)
            })
            .collect();
        let mut edge_closure = vec![EdgeClosure::default(); ne];
        let mut on_cycle = vec![false; ne];
        for (p, up_head, up_tail) in &cycles {
            on_cycle[*p] = true;
            for (pe, _) in up_head.iter().chain(up_tail) {
                on_cycle[*pe] = true;
            }
        }
        for p in 0..ne {
            if !on_cycle[p] {
                continue;
            }
            // cycle edges never touch a wall, so 1/psi^2 stays finite
            let inner: Vec<f64> = source[p]
                .iter()
                .zip(&gs.psi_sq[p])
                .map(|(s, w)| s * w)
                .collect();
            let inner = cumulative_simpson(&inner, gs.spacing[p]);
            let over: Vec<f64> = gs.psi_sq[p].iter().map(|w| 2.0 / w).collect();
            let i2: Vec<f64> = inner
                .iter()
                .zip(&gs.psi_sq[p])
                .map(|(i, w)| 2.0 * i / w)
                .collect();
            edge_closure[p] = EdgeClosure {
                j: simpson(&over, gs.spacing[p]),
                i2: simpson(&i2, gs.spacing[p]),
            };
        }
        for (p, up_head, up_tail) in cycles {
            let mut coeffs: Vec<(usize, f64)> = vec![(p, edge_closure[p].j)];
            let mut b = -edge_closure[p].i2;
            // traverse the non-tree edge tail -> head, climb head -> apex,
            // then descend apex -> tail
            for (pe, sg) in up_head {
                coeffs.push((pe, -sg * edge_closure[pe].j));
                b += sg * edge_closure[pe].i2;
            }
            for (pe, sg) in up_tail {
                coeffs.push((pe, sg * edge_closure[pe].j));
                b -= sg * edge_closure[pe].i2;
            }
            closures.push((coeffs, b));
        }
    }

    let mut constants = solve_constants_with_closure(gs, &moments, &closures)?;
    // snap wall-pinned constants so the singular-endpoint limits hold exactly
    for (p, e) in g.edges().iter().enumerate() {
        if g.is_leaf(e.tail) {
            constants[p] = 0.0;
        } else if g.is_leaf(e.head) {
            constants[p] = -moments[p];
        }
    }

    // canonical per-edge double quadrature: integrate away from a wall
    let mut shapes: Vec<Vec<f64>> = Vec::with_capacity(ne);
    let mut reversed = vec![false; ne];
    let mut bracket_scale = 0.0f64;
    for (p, e) in g.edges().iter().enumerate() {
        let tail_leaf = g.is_leaf(e.tail);
        let head_leaf = g.is_leaf(e.head);
        let rev = head_leaf && !tail_leaf;
        reversed[p] = rev;
        let n = gs.grid.points();
        let mut sig: Vec<f64> = Vec::with_capacity(n);
        let mut psq: Vec<f64> = Vec::with_capacity(n);
        if rev {
            sig.extend(source[p].iter().rev());
            psq.extend(gs.psi_sq[p].iter().rev());
        } else {
            sig.extend(source[p].iter());
            psq.extend(gs.psi_sq[p].iter());
        }
        // tail convention reverses to C~ = -(C + <sigma>); both wall forms are 0
        let c_can = if tail_leaf || rev { 0.0 } else { constants[p] };
        let weighted: Vec<f64> = sig.iter().zip(&psq).map(|(s, w)| s * w).collect();
        let inner = cumulative_simpson(&weighted, gs.spacing[p]);
        for i in &inner {
            bracket_scale = bracket_scale.max((2.0 * (i + c_can)).abs());
        }
        let mut outer: Vec<f64> = inner
            .iter()
            .zip(&psq)
            .map(|(i, w)| 2.0 * (i + c_can) / w)
            .collect();
        if tail_leaf || head_leaf {
            outer[0] = 0.0; // limit value at the wall the integration starts from
        }
        if tail_leaf && head_leaf {
            outer[n - 1] = 0.0; // single-edge graph: wall at the far end too
        }
        shapes.push(cumulative_simpson(&outer, gs.spacing[p]));
    }

    // chain field values over the spanning tree, root anchored at zero
    let deltas: Vec<f64> = (0..ne)
        .map(|p| {
            let d = *shapes[p].last().unwrap();
            if reversed[p] {
                -d
            } else {
                d
            }
        })
        .collect();
    let mut vertex_value = vec![0.0; g.vertex_count()];
    for &v in &tree.order[1..] {
        let (pv, pe, sg) = tree.parent[v].unwrap();
        vertex_value[v] = vertex_value[pv] + sg * deltas[pe];
    }

    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(ne);
    for (p, e) in g.edges().iter().enumerate() {
        let anchor = vertex_value[e.tail];
        let shape = &shapes[p];
        let col: Vec<f64> = if reversed[p] {
            let last = *shape.last().unwrap();
            shape.iter().rev().map(|s| anchor + s - last).collect()
        } else {
            shape.iter().map(|s| anchor + s).collect()
        };
        if col.iter().any(|v| !v.is_finite()) {
            return Err(DlError::NonFiniteQuadrature { edge: p });
        }
        samples.push(col);
    }

    gauge_fix(gs, &mut samples);
    Ok(DlField {
        kind,
        samples,
        flux_constants: constants,
        edge_moments: moments,
        bracket_scale,
    })
}

fn gauge_fix(gs: &GroundStateGrid, samples: &mut [Vec<f64>]) {
    let mut acc = KahanSum::new();
    for (p, col) in samples.iter().enumerate() {
        let vals: Vec<f64> = col.iter().zip(&gs.psi_sq[p]).map(|(f, w)| f * w).collect();
        acc.add(simpson(&vals, gs.spacing[p]));
    }
    let shift = acc.value() / gs.norm;
    for col in samples.iter_mut() {
        for v in col.iter_mut() {
            *v -= shift;
        }
    }
}

/// Edges of a pure loop in traversal order from vertex 0 with orientation
/// signs (+1 when traversed tail -> head).
fn loop_order(g: &QuantumGraph) -> Result<Vec<(usize, f64)>, DlError> {
    if !g.is_pure_loop() {
        return Err(DlError::NotPureLoop);
    }
    let ne = g.edge_count();
    let mut used = vec![false; ne];
    let mut order = Vec::with_capacity(ne);
    let mut v = 0usize;
    for _ in 0..ne {
        let mut advanced = false;
        for (p, e) in g.edges().iter().enumerate() {
            if used[p] {
                continue;
            }
            if e.tail == v {
                used[p] = true;
                order.push((p, 1.0));
                v = e.head;
                advanced = true;
                break;
            }
            if e.head == v {
                used[p] = true;
                order.push((p, -1.0));
                v = e.tail;
                advanced = true;
                break;
            }
        }
        if !advanced {
            return Err(DlError::NotPureLoop);
        }
    }
    if v != 0 {
        return Err(DlError::NotPureLoop);
    }
    Ok(order)
}

fn build_field_loop(
    gs: &GroundStateGrid,
    source: &[Vec<f64>],
    kind: DlFieldKind,
) -> Result<DlField, DlError> {
    let g = gs.graph;
    let order = loop_order(g)?;
    let ne = g.edge_count();
    let moments = source_moments(gs, source);

    // sequential inner integrals around the cycle
    let mut inner_chain: Vec<Vec<f64>> = Vec::with_capacity(ne);
    let mut running = 0.0;
    let mut oriented_sig: Vec<Vec<f64>> = Vec::with_capacity(ne);
    let mut oriented_psq: Vec<Vec<f64>> = Vec::with_capacity(ne);
    for &(p, sg) in &order {
        let (sig, psq): (Vec<f64>, Vec<f64>) = if sg > 0.0 {
            (source[p].clone(), gs.psi_sq[p].clone())
        } else {
            (
                source[p].iter().rev().cloned().collect(),
                gs.psi_sq[p].iter().rev().cloned().collect(),
            )
        };
        let weighted: Vec<f64> = sig.iter().zip(&psq).map(|(s, w)| s * w).collect();
        let mut cum = cumulative_simpson(&weighted, gs.spacing[p]);
        for v in &mut cum {
            *v += running;
        }
        running = *cum.last().unwrap();
        inner_chain.push(cum);
        oriented_sig.push(sig);
        oriented_psq.push(psq);
    }

    // periodic closure picks the single first constant
    let mut j_tot = KahanSum::new();
    let mut i2_tot = KahanSum::new();
    for (i, &(p, _)) in order.iter().enumerate() {
        let over: Vec<f64> = oriented_psq[i].iter().map(|w| 2.0 / w).collect();
        j_tot.add(simpson(&over, gs.spacing[p]));
        let i2: Vec<f64> = inner_chain[i]
            .iter()
            .zip(&oriented_psq[i])
            .map(|(v, w)| 2.0 * v / w)
            .collect();
        i2_tot.add(simpson(&i2, gs.spacing[p]));
    }
    let c0 = -i2_tot.value() / j_tot.value();

    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); ne];
    let mut constants = vec![0.0; ne];
    let mut bracket_scale = 0.0f64;
    let mut offset = 0.0;
    let mut running_c = c0;
    for (i, &(p, sg)) in order.iter().enumerate() {
        for v in &inner_chain[i] {
            bracket_scale = bracket_scale.max((2.0 * (v + c0)).abs());
        }
        let outer: Vec<f64> = inner_chain[i]
            .iter()
            .zip(&oriented_psq[i])
            .map(|(v, w)| 2.0 * (v + c0) / w)
            .collect();
        let mut f = cumulative_simpson(&outer, gs.spacing[p]);
        for v in &mut f {
            *v += offset;
        }
        offset = *f.last().unwrap();
        // tail-convention constant of this edge for flux reports
        constants[p] = if sg > 0.0 {
            running_c
        } else {
            -(running_c + moments[p])
        };
        running_c += moments[p]; // the oriented moment equals the plain one
        samples[p] = if sg > 0.0 {
            f
        } else {
            f.into_iter().rev().collect()
        };
    }

    gauge_fix(gs, &mut samples);
    Ok(DlField {
        kind,
        samples,
        flux_constants: constants,
        edge_moments: moments,
        bracket_scale,
    })
}

/// Build the first-order field for one axis (`[F_i, H] = rbar^i`).
/// Pure single cycles take the periodic path, everything else the
/// wall/vertex/closure system.
pub fn build_f(gs: &GroundStateGrid, axis: Axis) -> Result<DlField, DlError> {
    let source = &gs.rbar[axis.index()];
    if gs.graph.is_pure_loop() {
        build_field_loop(gs, source, DlFieldKind::F(axis))
    } else {
        build_field(gs, source, DlFieldKind::F(axis))
    }
}

/// Periodic loop construction of `F_i`; errors on anything but a single cycle.
pub fn build_f_loop(gs: &GroundStateGrid, axis: Axis) -> Result<DlField, DlError> {
    build_field_loop(gs, &gs.rbar[axis.index()], DlFieldKind::F(axis))
}

fn g_source(gs: &GroundStateGrid, i: Axis, f_j: &DlField) -> Result<Vec<Vec<f64>>, DlError> {
    let c = expectation(gs, &[Factor::BarredCoord(i), Factor::Field(f_j)])? / gs.norm;
    Ok((0..gs.edge_count())
        .map(|p| {
            gs.rbar[i.index()][p]
                .iter()
                .zip(f_j.samples(p))
                .map(|(r, f)| r * f - c)
                .collect()
        })
        .collect())
}

/// Build the second-order field `G_ij` from a gauge-fixed `F_j`
/// (`[G_ij, H] = rbar^i F_j - <0|rbar^i F_j|0>`).
pub fn build_g(gs: &GroundStateGrid, i: Axis, j: Axis, f_j: &DlField) -> Result<DlField, DlError> {
    debug_assert_eq!(f_j.kind, DlFieldKind::F(j));
    let source = g_source(gs, i, f_j)?;
    if gs.graph.is_pure_loop() {
        build_field_loop(gs, &source, DlFieldKind::G(i, j))
    } else {
        build_field(gs, &source, DlFieldKind::G(i, j))
    }
}

/// Periodic loop construction of `G_ij`; errors on anything but a single cycle.
pub fn build_g_loop(
    gs: &GroundStateGrid,
    i: Axis,
    j: Axis,
    f_j: &DlField,
) -> Result<DlField, DlError> {
    let source = g_source(gs, i, f_j)?;
    build_field_loop(gs, &source, DlFieldKind::G(i, j))
}

/// One factor of a ground-state expectation value.
#[derive(Clone, Copy)]
pub enum Factor<'a> {
    Field(&'a DlField),
    Coord(Axis),
    BarredCoord(Axis),
}

/// Ground-state expectation of a pointwise product of factors:
/// `sum_p int (prod factors) psi0^2 ds`. Coordinates are projected per edge
/// with their offsets. An empty product is the squared norm, i.e. 1.
pub fn expectation(gs: &GroundStateGrid, factors: &[Factor]) -> Result<f64, DlError> {
    let npts = gs.grid.points();
    for f in factors {
        if let Factor::Field(field) = f {
            for p in 0..gs.edge_count() {
                let got = field.samples(p).len();
                if got != npts {
                    return Err(DlError::GridMismatch {
                        got,
                        expected: npts,
                    });
                }
            }
        }
    }
    let mut acc = KahanSum::new();
    let mut prod = vec![0.0; npts];
    for p in 0..gs.edge_count() {
        prod.copy_from_slice(&gs.psi_sq[p]);
        for f in factors {
            let col: &[f64] = match f {
                Factor::Field(field) => field.samples(p),
                Factor::Coord(axis) => &gs.coord[axis.index()][p],
                Factor::BarredCoord(axis) => &gs.rbar[axis.index()][p],
            };
            for (dst, v) in prod.iter_mut().zip(col) {
                *dst *= v;
            }
        }
        acc.add(simpson(&prod, gs.spacing[p]));
    }
    Ok(acc.value())
}

/// Raw `beta` from the two F fields: `(1/2) P_ijk <F_i rbar^j F_k>` with the
/// explicit 6-term permutation sum (plain coordinate-space products; the
/// equivalence suite against the perturbation sums pins the overall sign).
pub fn beta_dl(gs: &GroundStateGrid, fx: &DlField, fy: &DlField) -> Result<BetaTensor, DlError> {
    let f = [fx, fy];
    let term = |i: usize, j: usize, k: usize| -> Result<f64, DlError> {
        expectation(
            gs,
            &[
                Factor::Field(f[i]),
                Factor::BarredCoord(Axis::BOTH[j]),
                Factor::Field(f[k]),
            ],
        )
    };
    let mut out = BetaTensor::default();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                if !(i <= j && j <= k) {
                    continue;
                }
                let perms = [
                    (i, j, k),
                    (i, k, j),
                    (j, i, k),
                    (j, k, i),
                    (k, i, j),
                    (k, j, i),
                ];
                let mut tot = KahanSum::new();
                for (a, b, c) in perms {
                    tot.add(term(a, b, c)?);
                }
                let value = 0.5 * tot.value();
                for (a, b, c) in perms {
                    out.0[4 * a + 2 * b + c] = value;
                }
            }
        }
    }
    Ok(out)
}

/// Raw `gamma` from the F and G fields:
/// `(1/6) P_ijkl (<F_i F_j><rbar^k F_l> - <F_i rbar^j G_kl>)` with the
/// explicit 24-term permutation sum.
#[allow(clippy::needless_range_loop)] // axis-index loops mirror the tensor algebra
pub fn gamma_dl(
    gs: &GroundStateGrid,
    f: [&DlField; 2],
    g: &[[DlField; 2]; 2],
) -> Result<GammaTensor, DlError> {
    let mut ff = [[0.0; 2]; 2];
    let mut rf = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            ff[i][j] = expectation(gs, &[Factor::Field(f[i]), Factor::Field(f[j])])?;
            rf[i][j] = expectation(
                gs,
                &[Factor::BarredCoord(Axis::BOTH[i]), Factor::Field(f[j])],
            )?;
        }
    }
    let mut frg = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    frg[i][j][k][l] = expectation(
                        gs,
                        &[
                            Factor::Field(f[i]),
                            Factor::BarredCoord(Axis::BOTH[j]),
                            Factor::Field(&g[k][l]),
                        ],
                    )?;
                }
            }
        }
    }
    let mut out = GammaTensor::default();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    if !(i <= j && j <= k && k <= l) {
                        continue;
                    }
                    let mut tot = KahanSum::new();
                    for (a, b, c, d) in perms4(i, j, k, l) {
                        tot.add(ff[a][b] * rf[c][d] - frg[a][b][c][d]);
                    }
                    let value = tot.value() / 6.0;
                    for (a, b, c, d) in perms4(i, j, k, l) {
                        out.0[8 * a + 4 * b + 2 * c + d] = value;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn perms4(i: usize, j: usize, k: usize, l: usize) -> [(usize, usize, usize, usize); 24] {
    let v = [i, j, k, l];
    let mut out = [(0, 0, 0, 0); 24];
    let mut idx = 0;
    for a in 0..4 {
        for b in 0..4 {
            if b == a {
                continue;
            }
            for c in 0..4 {
                if c == a || c == b {
                    continue;
                }
                let d = 6 - a - b - c;
                out[idx] = (v[a], v[b], v[c], v[d]);
                idx += 1;
            }
        }
    }
    out
}

/// All six DL fields of a graph.
pub struct DlSolution {
    pub f: [DlField; 2],
    pub g: [[DlField; 2]; 2],
}

pub fn build_all(gs: &GroundStateGrid) -> Result<DlSolution, DlError> {
    let fx = build_f(gs, Axis::X)?;
    let fy = build_f(gs, Axis::Y)?;
    let g = [
        [
            build_g(gs, Axis::X, Axis::X, &fx)?,
            build_g(gs, Axis::X, Axis::Y, &fy)?,
        ],
        [
            build_g(gs, Axis::Y, Axis::X, &fx)?,
            build_g(gs, Axis::Y, Axis::Y, &fy)?,
        ],
    ];
    Ok(DlSolution { f: [fx, fy], g })
}

/// Both raw tensors plus the worst vertex residuals over all six fields.
pub fn compute_tensors(
    gs: &GroundStateGrid,
) -> Result<(BetaTensor, GammaTensor, DlDiagnostics), DlError> {
    let sol = build_all(gs)?;
    let beta = beta_dl(gs, &sol.f[0], &sol.f[1])?;
    let gamma = gamma_dl(gs, [&sol.f[0], &sol.f[1]], &sol.g)?;
    let mut diag = DlDiagnostics::default();
    for field in sol.fields() {
        let r = vertex_residuals(gs, field);
        diag.max_continuity = diag.max_continuity.max(r.relative_continuity());
        diag.max_flux = diag.max_flux.max(r.relative_flux());
        let gauge = expectation(gs, &[Factor::Field(field)])?;
        diag.max_gauge = diag.max_gauge.max(gauge.abs());
    }
    Ok((beta, gamma, diag))
}

impl DlSolution {
    pub fn fields(&self) -> impl Iterator<Item = &DlField> {
        self.f.iter().chain(self.g.iter().flatten())
    }
}

/// Worst DL vertex residuals, normalized by the field/flux scales.
#[derive(Debug, Clone, Copy, Default)]
pub struct DlDiagnostics {
    pub max_continuity: f64,
    pub max_flux: f64,
    pub max_gauge: f64,
}

/// Continuity and flux-conservation defects of one field at the interior
/// vertices, with the scales used to normalize them.
#[derive(Debug, Clone, Copy)]
pub struct VertexResidualReport {
    pub continuity: f64,
    pub flux: f64,
    pub field_scale: f64,
    pub flux_scale: f64,
}

impl VertexResidualReport {
    pub fn relative_continuity(&self) -> f64 {
        self.continuity / self.field_scale.max(f64::MIN_POSITIVE)
    }

    pub fn relative_flux(&self) -> f64 {
        self.flux / self.flux_scale.max(f64::MIN_POSITIVE)
    }
}

pub fn vertex_residuals(gs: &GroundStateGrid, field: &DlField) -> VertexResidualReport {
    let g = gs.graph;
    let mut continuity: f64 = 0.0;
    let mut flux: f64 = 0.0;
    for v in g.interior_vertices() {
        let mut vals: Vec<f64> = Vec::new();
        let mut net = KahanSum::new();
        for (p, e) in g.edges().iter().enumerate() {
            // field flux in tail convention: 2C_p enters the tail,
            // 2(C_p + <sigma_p>) exits the head
            if e.tail == v {
                vals.push(field.value_at_tail(p));
                net.add(2.0 * field.flux_constants[p]);
            }
            if e.head == v {
                vals.push(field.value_at_head(p));
                net.add(-2.0 * (field.flux_constants[p] + field.edge_moments[p]));
            }
        }
        for w in vals.windows(2) {
            continuity = continuity.max((w[0] - w[1]).abs());
        }
        flux = flux.max(net.value().abs());
    }
    let field_scale = field
        .samples
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    // the bracket sup covers the endpoint fluxes 2C_p and 2(C_p + <sigma_p>),
    // and stays meaningful when symmetry zeroes every edge moment
    VertexResidualReport {
        continuity,
        flux,
        field_scale,
        flux_scale: field.bracket_scale,
    }
}

/// Periodicity defects of a field on a pure loop: value and slope gaps
/// between the two ends of the unrolled cycle.
pub fn loop_periodicity(gs: &GroundStateGrid, field: &DlField) -> Result<(f64, f64), DlError> {
    let order = loop_order(gs.graph)?;
    let (first, fsg) = order[0];
    let (last, lsg) = order[order.len() - 1];
    let start = if fsg > 0.0 {
        field.value_at_tail(first)
    } else {
        field.value_at_head(first)
    };
    let end = if lsg > 0.0 {
        field.value_at_head(last)
    } else {
        field.value_at_tail(last)
    };
    let value_gap = (end - start).abs();
    // F'(L) - F'(0) times psi^2 is twice the total source moment
    let total: f64 = field.edge_moments.iter().sum();
    let psi_sq0 = gs.psi_sq[first][0];
    let slope_gap = (2.0 * total / psi_sq0).abs();
    Ok((value_gap, slope_gap))
}
