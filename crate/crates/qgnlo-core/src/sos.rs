//! Sum-over-states hyperpolarizabilities over a truncated eigenbasis.
//!
//! Transition moments are edge-wise Simpson quadratures of the projected
//! position operator against sampled mode products. The tensors follow the
//! textbook perturbation sums with explicit 6- and 24-term permutation
//! operators, ground state excluded from all primed sums. The triple sum in
//! `gamma` is evaluated literally, so its cost grows with the cube of the
//! basis size; that is the point of comparison for the ground-state-only
//! route in [`crate::dl`].

use crate::graph::{Axis, QuantumGraph};
use crate::numerics::{simpson, GridSpec, KahanSum};
use crate::spectral::Spectrum;
use crate::tensor::{BetaTensor, GammaTensor};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SosError {
    #[error("moment matrices have mismatched dimensions {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("need a ground state plus at least one excited state, got {0} modes")]
    BasisTooSmall(usize),
    #[error("zero energy denominator at excited state {state}: E_n0 = {gap:.3e}")]
    ZeroDenominator { state: usize, gap: f64 },
}

/// Transition moments `r^i_nm` of one axis over the truncated basis.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    axis: Axis,
    data: DMatrix<f64>,
}

impl MomentMatrix {
    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.data[(n, m)]
    }

    /// Barred moment `r_nm - delta_nm r_00`.
    pub fn barred(&self, n: usize, m: usize) -> f64 {
        if n == m {
            self.data[(n, m)] - self.data[(0, 0)]
        } else {
            self.data[(n, m)]
        }
    }

    pub fn r00(&self) -> f64 {
        self.data[(0, 0)]
    }
}

/// Moment matrix by per-edge quadrature: projection of the edge coordinate
/// onto `axis` plus the edge offset times the edge overlap.
pub fn transition_moments(
    spectrum: &Spectrum,
    graph: &QuantumGraph,
    axis: Axis,
    grid: &GridSpec,
) -> MomentMatrix {
    let nmodes = spectrum.len();
    let nedges = graph.edge_count();
    let samples: Vec<Vec<Vec<f64>>> = (0..nmodes)
        .map(|n| spectrum.mode(n).sample_all(graph, grid))
        .collect();
    let coords: Vec<Vec<f64>> = (0..nedges)
        .map(|p| {
            let e = graph.edge(p);
            let off = graph.edge_offset(p)[axis.index()];
            let proj = axis.projection(e.angle);
            grid.samples(e.length)
                .iter()
                .map(|&s| off + proj * s)
                .collect()
        })
        .collect();

    let mut data = DMatrix::zeros(nmodes, nmodes);
    let mut prod = vec![0.0; grid.points()];
    for n in 0..nmodes {
        for m in n..nmodes {
            let mut acc = KahanSum::new();
            for p in 0..nedges {
                let h = grid.spacing(graph.edge(p).length);
                for ((dst, &a), (&b, &c)) in prod
                    .iter_mut()
                    .zip(&samples[n][p])
                    .zip(samples[m][p].iter().zip(&coords[p]))
                {
                    *dst = a * b * c;
                }
                acc.add(simpson(&prod, h));
            }
            data[(n, m)] = acc.value();
            data[(m, n)] = acc.value();
        }
    }
    MomentMatrix { axis, data }
}

struct SosWork {
    /// `u^i_n = r^i_0n / E_n0`, excited states only (index 0 = state 1).
    u: [Vec<f64>; 2],
    /// `v^i_n = r^i_0n`, excited states only.
    v: [Vec<f64>; 2],
    /// Barred excited blocks `rbar^i_nm`.
    rb: [DMatrix<f64>; 2],
    /// `1 / E_n0`, excited states only.
    inv_gap: Vec<f64>,
}

fn prepare(mx: &MomentMatrix, my: &MomentMatrix, energies: &[f64]) -> Result<SosWork, SosError> {
    if mx.dim() != my.dim() {
        return Err(SosError::DimensionMismatch(mx.dim(), my.dim()));
    }
    if mx.dim() != energies.len() {
        return Err(SosError::DimensionMismatch(mx.dim(), energies.len()));
    }
    let nmodes = energies.len();
    if nmodes < 2 {
        return Err(SosError::BasisTooSmall(nmodes));
    }
    let m = nmodes - 1;
    let mut inv_gap = vec![0.0; m];
    for n in 1..nmodes {
        let gap = energies[n] - energies[0];
        if gap.is_nan() || gap <= 0.0 {
            return Err(SosError::ZeroDenominator { state: n, gap });
        }
        inv_gap[n - 1] = 1.0 / gap;
    }
    let build = |mm: &MomentMatrix| -> (Vec<f64>, Vec<f64>, DMatrix<f64>) {
        let mut v = vec![0.0; m];
        let mut u = vec![0.0; m];
        let mut rb = DMatrix::zeros(m, m);
        for n in 1..nmodes {
            v[n - 1] = mm.get(0, n);
            u[n - 1] = mm.get(0, n) * inv_gap[n - 1];
            for p in 1..nmodes {
                rb[(n - 1, p - 1)] = mm.barred(n, p);
            }
        }
        (v, u, rb)
    };
    let (vx, ux, rbx) = build(mx);
    let (vy, uy, rby) = build(my);
    Ok(SosWork {
        u: [ux, uy],
        v: [vx, vy],
        rb: [rbx, rby],
        inv_gap,
    })
}

/// Raw `beta` by the truncated double sum with the full 6-term permutation
/// operator and prefactor `e^3/2` (e = 1).
pub fn beta_sos(
    mx: &MomentMatrix,
    my: &MomentMatrix,
    energies: &[f64],
) -> Result<BetaTensor, SosError> {
    let w = prepare(mx, my, energies)?;
    let m = w.inv_gap.len();

    // double sum u^i . rbar^j . u^k for one index assignment
    let term = |i: usize, j: usize, k: usize| -> f64 {
        let mut acc = KahanSum::new();
        for n in 0..m {
            let mut row = KahanSum::new();
            for p in 0..m {
                row.add(w.rb[j][(n, p)] * w.u[k][p]);
            }
            acc.add(w.u[i][n] * row.value());
        }
        acc.value()
    };

    let mut out = BetaTensor::default();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                if !(i <= j && j <= k) {
                    continue; // canonical component; symmetry fills the rest
                }
                let mut tot = KahanSum::new();
                for (a, b, c) in permutations3(i, j, k) {
                    tot.add(term(a, b, c));
                }
                let value = 0.5 * tot.value();
                for (a, b, c) in permutations3(i, j, k) {
                    out.0[4 * a + 2 * b + c] = value;
                }
            }
        }
    }
    Ok(out)
}

/// Raw `gamma` by the two-term truncated sums with the 24-term permutation
/// operator and prefactor `e^4/6` (e = 1). The first term is a literal
/// triple sum over excited states.
pub fn gamma_sos(
    mx: &MomentMatrix,
    my: &MomentMatrix,
    energies: &[f64],
) -> Result<GammaTensor, SosError> {
    let w = prepare(mx, my, energies)?;
    let m = w.inv_gap.len();

    let triple = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        let mut acc = KahanSum::new();
        for n in 0..m {
            for mm in 0..m {
                let pref = w.u[i][n] * w.rb[j][(n, mm)] * w.inv_gap[mm];
                let mut inner = KahanSum::new();
                for p in 0..m {
                    inner.add(w.rb[k][(mm, p)] * w.u[l][p]);
                }
                acc.add(pref * inner.value());
            }
        }
        acc.value()
    };
    let double = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        let mut first = KahanSum::new();
        for n in 0..m {
            first.add(w.u[i][n] * w.v[j][n] * w.inv_gap[n]);
        }
        let mut second = KahanSum::new();
        for p in 0..m {
            second.add(w.u[k][p] * w.v[l][p]);
        }
        first.value() * second.value()
    };

    let mut out = GammaTensor::default();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    if !(i <= j && j <= k && k <= l) {
                        continue;
                    }
                    let mut tot = KahanSum::new();
                    for (a, b, c, d) in permutations4(i, j, k, l) {
                        tot.add(triple(a, b, c, d) - double(a, b, c, d));
                    }
                    let value = tot.value() / 6.0;
                    for (a, b, c, d) in permutations4(i, j, k, l) {
                        out.0[8 * a + 4 * b + 2 * c + d] = value;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn permutations3(i: usize, j: usize, k: usize) -> [(usize, usize, usize); 6] {
    [
        (i, j, k),
        (i, k, j),
        (j, i, k),
        (j, k, i),
        (k, i, j),
        (k, j, i),
    ]
}

fn permutations4(i: usize, j: usize, k: usize, l: usize) -> [(usize, usize, usize, usize); 24] {
    let mut out = [(0, 0, 0, 0); 24];
    let v = [i, j, k, l];
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
