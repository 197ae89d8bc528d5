//! Shared deterministic numerical kernels: composite Simpson quadrature,
//! cumulative integrals, root bracketing, and small dense linear algebra.
//!
//! All accumulations run in a fixed order with compensated summation, so
//! identical inputs produce bit-identical outputs.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("Simpson quadrature requires an even panel count, got {0} panels")]
    OddPanelCount(usize),
    #[error("grid must have at least 3 sample points, got {0}")]
    GridTooSmall(usize),
    #[error("linear system inconsistent: residual {residual:.3e} exceeds {tol:.3e}")]
    InconsistentSystem { residual: f64, tol: f64 },
}

/// Uniform sampling layout for one edge: `points` samples spanning `[0, a]`.
///
/// The panel count `points - 1` must be even for Simpson weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    points: usize,
}

impl GridSpec {
    pub fn new(points: usize) -> Result<Self, NumericsError> {
        if points < 3 {
            return Err(NumericsError::GridTooSmall(points));
        }
        if !(points - 1).is_multiple_of(2) {
            return Err(NumericsError::OddPanelCount(points - 1));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn panels(&self) -> usize {
        self.points - 1
    }

    /// Sample spacing on an edge of length `a`.
    pub fn spacing(&self, a: f64) -> f64 {
        a / self.panels() as f64
    }

    /// The sample coordinates `0, h, 2h, .., a`.
    pub fn samples(&self, a: f64) -> Vec<f64> {
        let h = self.spacing(a);
        (0..self.points).map(|j| j as f64 * h).collect()
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 2001 }
    }
}

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Composite Simpson integral of uniformly sampled values with spacing `h`.
///
/// Panics if the panel count is odd; grids are validated at [`GridSpec`]
/// construction so this is a programmer error.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    assert!(
        n >= 2 && n.is_multiple_of(2),
        "simpson: even panel count required, got {n}"
    );
    let mut acc = KahanSum::new();
    acc.add(values[0]);
    for (j, &v) in values.iter().enumerate().skip(1).take(n - 1) {
        acc.add(if j % 2 == 1 { 4.0 * v } else { 2.0 * v });
    }
    acc.add(values[n]);
    acc.value() * h / 3.0
}

/// Running integral at every sample point, `out[0] = 0`.
///
/// Each panel pair is fitted with the local parabola, so half-panel values
/// keep the O(h^4) order of the composite rule.
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len() - 1;
    assert!(
        n >= 2 && n.is_multiple_of(2),
        "cumulative_simpson: even panel count required, got {n}"
    );
    let mut out = vec![0.0; n + 1];
    let mut acc = KahanSum::new();
    let c = h / 12.0;
    for i in (0..n).step_by(2) {
        let (f0, f1, f2) = (values[i], values[i + 1], values[i + 2]);
        acc.add(c * (5.0 * f0 + 8.0 * f1 - f2));
        out[i + 1] = acc.value();
        acc.add(c * (-f0 + 8.0 * f1 + 5.0 * f2));
        out[i + 2] = acc.value();
    }
    out
}

/// All sign-change roots of `f` on `(lo, hi]`, scanned with `step` and
/// refined by bisection to relative tolerance `rel_tol`.
///
/// Even-order roots produce no sign change and are not found here; callers
/// that need them pair this with a dip search on a singular-value profile.
pub fn bracket_and_bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    step: f64,
    rel_tol: f64,
) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    while a < hi {
        let b = (a + step).min(hi);
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fb != 0.0 && fa.signum() != fb.signum() {
            roots.push(bisect(&mut f, a, fa, b, rel_tol));
        }
        a = b;
        fa = fb;
    }
    if fa == 0.0 {
        roots.push(a);
    }
    roots
}

fn bisect<F: FnMut(f64) -> f64>(
    f: &mut F,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    rel_tol: f64,
) -> f64 {
    while b - a > rel_tol * b.abs().max(1e-300) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa.signum() != fm.signum() {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Golden-section minimizer on `[a, b]` to absolute interval width `tol`.
/// Works on V-shaped profiles (the minimum need not be smooth).
pub fn golden_minimize<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Orthonormal basis of the null space: right singular vectors whose
/// singular values fall below `rel_threshold * sigma_max`.
pub fn null_space(m: &DMatrix<f64>, rel_threshold: f64) -> Vec<DVector<f64>> {
    let svd = m.clone().svd(false, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let vt = svd.v_t.expect("null_space: SVD requested V^T");
    let mut out = Vec::new();
    for (i, &s) in sv.iter().enumerate() {
        if s < rel_threshold * smax {
            out.push(vt.row(i).transpose());
        }
    }
    out
}

/// Least-squares solve of a consistent (possibly overdetermined) system.
/// Errors if the residual exceeds `tol` times the data scale.
pub fn solve_least_squares(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>, NumericsError> {
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(b, 1e-12)
        .map_err(|_| NumericsError::InconsistentSystem {
            residual: f64::NAN,
            tol,
        })?;
    let residual = (a * &x - b).norm();
    let scale = b.norm().max(1.0);
    if residual > tol * scale {
        return Err(NumericsError::InconsistentSystem {
            residual,
            tol: tol * scale,
        });
    }
    Ok(x)
}
