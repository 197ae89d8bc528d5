//! First and second hyperpolarizability tensors over `{x, y}` and their
//! intrinsic (limit-normalized) units.
//!
//! Components are stored flat in lexicographic index order with `x < y`,
//! so `beta` runs xxx, xxy, xyx, .., yyy and `gamma` runs xxxx .. yyyy.

use crate::graph::Axis;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("excitation gap must be positive for intrinsic units, got {0}")]
    NonPositiveGap(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Raw,
    Intrinsic,
}

/// Rank-3 tensor `beta_ijk`, fully symmetric by construction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BetaTensor(pub [f64; 8]);

/// Rank-4 tensor `gamma_ijkl`, fully symmetric by construction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct GammaTensor(pub [f64; 16]);

fn rot(delta: f64) -> [[f64; 2]; 2] {
    let (s, c) = delta.sin_cos();
    [[c, -s], [s, c]]
}

impl BetaTensor {
    pub const LABELS: [&'static str; 8] = ["xxx", "xxy", "xyx", "xyy", "yxx", "yxy", "yyx", "yyy"];

    pub fn index(i: Axis, j: Axis, k: Axis) -> usize {
        4 * i.index() + 2 * j.index() + k.index()
    }

    pub fn get(&self, i: Axis, j: Axis, k: Axis) -> f64 {
        self.0[Self::index(i, j, k)]
    }

    pub fn set(&mut self, i: Axis, j: Axis, k: Axis, value: f64) {
        self.0[Self::index(i, j, k)] = value;
    }

    pub fn components(&self) -> &[f64; 8] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, f: f64) -> Self {
        let mut out = *self;
        for v in &mut out.0 {
            *v *= f;
        }
        out
    }

    /// Cartesian rank-3 rotation by `delta` radians.
    pub fn rotated(&self, delta: f64) -> Self {
        let r = rot(delta);
        let mut out = BetaTensor::default();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let mut acc = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            for k in 0..2 {
                                acc += r[a][i] * r[b][j] * r[c][k] * self.0[4 * i + 2 * j + k];
                            }
                        }
                    }
                    out.0[4 * a + 2 * b + c] = acc;
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl GammaTensor {
    pub const LABELS: [&'static str; 16] = [
        "xxxx", "xxxy", "xxyx", "xxyy", "xyxx", "xyxy", "xyyx", "xyyy", "yxxx", "yxxy", "yxyx",
        "yxyy", "yyxx", "yyxy", "yyyx", "yyyy",
    ];

    pub fn index(i: Axis, j: Axis, k: Axis, l: Axis) -> usize {
        8 * i.index() + 4 * j.index() + 2 * k.index() + l.index()
    }

    pub fn get(&self, i: Axis, j: Axis, k: Axis, l: Axis) -> f64 {
        self.0[Self::index(i, j, k, l)]
    }

    pub fn set(&mut self, i: Axis, j: Axis, k: Axis, l: Axis, value: f64) {
        self.0[Self::index(i, j, k, l)] = value;
    }

    pub fn components(&self) -> &[f64; 16] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, f: f64) -> Self {
        let mut out = *self;
        for v in &mut out.0 {
            *v *= f;
        }
        out
    }

    /// Cartesian rank-4 rotation by `delta` radians.
    pub fn rotated(&self, delta: f64) -> Self {
        let r = rot(delta);
        let mut out = GammaTensor::default();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        let mut acc = 0.0;
                        for i in 0..2 {
                            for j in 0..2 {
                                for k in 0..2 {
                                    for l in 0..2 {
                                        acc += r[a][i]
                                            * r[b][j]
                                            * r[c][k]
                                            * r[d][l]
                                            * self.0[8 * i + 4 * j + 2 * k + l];
                                    }
                                }
                            }
                        }
                        out.0[8 * a + 4 * b + 2 * c + d] = acc;
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn diagonal(&self) -> [f64; 2] {
        [self.0[0], self.0[15]]
    }
}

/// One-electron fundamental limit of `beta` at excitation gap `e10`
/// (natural units): `3^(1/4) / E10^(7/2)`.
pub fn beta_limit(e10: f64) -> f64 {
    3f64.powf(0.25) / e10.powf(3.5)
}

/// One-electron fundamental limit of `gamma`: `4 / E10^5`.
pub fn gamma_limit(e10: f64) -> f64 {
    4.0 / e10.powi(5)
}

/// Tensor pair with provenance of its units.
#[derive(Debug, Clone, Serialize)]
pub struct PolTensors {
    pub beta: BetaTensor,
    pub gamma: GammaTensor,
    pub units: Units,
    pub e10: f64,
}

impl PolTensors {
    pub fn raw(beta: BetaTensor, gamma: GammaTensor, e10: f64) -> Self {
        Self {
            beta,
            gamma,
            units: Units::Raw,
            e10,
        }
    }

    /// Bound-violation flags on the intrinsic tensors: every `|beta| <= 1`,
    /// diagonal `gamma` within `[-0.25, 1]`, tolerance 1e-6. Empty when
    /// units are raw or all bounds hold.
    pub fn bound_violations(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if self.units != Units::Intrinsic {
            return flags;
        }
        const TOL: f64 = 1e-6;
        for (label, v) in BetaTensor::LABELS.iter().zip(self.beta.0.iter()) {
            if v.abs() > 1.0 + TOL {
                flags.push(format!("beta_{label}={v:.6} exceeds unit bound"));
            }
        }
        for idx in [0usize, 15] {
            let v = self.gamma.0[idx];
            if !(-0.25 - TOL..=1.0 + TOL).contains(&v) {
                flags.push(format!(
                    "gamma_{}={v:.6} outside [-0.25, 1]",
                    GammaTensor::LABELS[idx]
                ));
            }
        }
        flags
    }
}

/// Divide raw tensors by their one-electron fundamental limits.
pub fn intrinsic_normalize(
    beta: &BetaTensor,
    gamma: &GammaTensor,
    e10: f64,
) -> Result<PolTensors, TensorError> {
    if e10.is_nan() || e10 <= 0.0 {
        return Err(TensorError::NonPositiveGap(e10));
    }
    Ok(PolTensors {
        beta: beta.scaled(1.0 / beta_limit(e10)),
        gamma: gamma.scaled(1.0 / gamma_limit(e10)),
        units: Units::Intrinsic,
        e10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn label_order_is_lexicographic() {
        assert_eq!(BetaTensor::index(Axis::X, Axis::X, Axis::X), 0);
        assert_eq!(BetaTensor::index(Axis::Y, Axis::Y, Axis::Y), 7);
        assert_eq!(
            BetaTensor::LABELS[BetaTensor::index(Axis::X, Axis::Y, Axis::X)],
            "xyx"
        );
        assert_eq!(
            GammaTensor::LABELS[GammaTensor::index(Axis::X, Axis::Y, Axis::Y, Axis::X)],
            "xyyx"
        );
    }

    #[test]
    fn rotation_by_zero_is_identity() {
        let mut b = BetaTensor::default();
        b.0.iter_mut().enumerate().for_each(|(i, v)| *v = i as f64);
        let r = b.rotated(0.0);
        for (a, b) in b.0.iter().zip(r.0.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn rotation_composes() {
        let mut g = GammaTensor::default();
        g.0.iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = (i as f64 * 0.37).sin());
        let once = g.rotated(0.8).rotated(0.4);
        let joint = g.rotated(1.2);
        assert!(once.max_abs_diff(&joint) < 1e-12);
    }

    #[test]
    fn half_turn_flips_beta() {
        let mut b = BetaTensor::default();
        b.0.iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = 1.0 + i as f64);
        let r = b.rotated(std::f64::consts::PI);
        for (a, bb) in b.0.iter().zip(r.0.iter()) {
            assert_abs_diff_eq!(*a, -*bb, epsilon = 1e-12);
        }
    }

    #[test]
    fn intrinsic_rejects_bad_gap() {
        let b = BetaTensor::default();
        let g = GammaTensor::default();
        assert!(intrinsic_normalize(&b, &g, 0.0).is_err());
        assert!(intrinsic_normalize(&b, &g, -1.0).is_err());
    }

    #[test]
    fn bound_flags_raised() {
        let mut b = BetaTensor::default();
        b.0[0] = 1.5;
        let mut g = GammaTensor::default();
        g.0[15] = -0.3;
        let p = PolTensors {
            beta: b,
            gamma: g,
            units: Units::Intrinsic,
            e10: 1.0,
        };
        let flags = p.bound_violations();
        assert_eq!(flags.len(), 2);
    }
}
