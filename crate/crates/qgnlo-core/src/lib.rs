//! Nonlinear-optical response of planar quantum graphs.
//!
//! A quantum graph confines a particle to a network of one-dimensional
//! edges embedded in the plane. This crate solves the free eigenproblem on
//! such graphs and computes the first and second hyperpolarizability
//! tensors two independent ways:
//!
//! * [`sos`]: truncated perturbation sums over the excited spectrum, which
//!   needs many modes and explicit handling of degenerate levels;
//! * [`dl`]: auxiliary fields obtained from the ground state by quadrature,
//!   turning both tensors into ground-state expectation values.
//!
//! The two routes agree to truncation error, which the test suites enforce
//! on stars, wires, loops, and a seven-edge composite. Natural units
//! (`hbar = m = e = 1`) throughout; intrinsic tensors are normalized by the
//! one-electron fundamental limits and are dimensionless.
//!
//! ```
//! use qgnlo_core::{dl, graph::presets, spectral, GridSpec, SolverOptions};
//!
//! // bent three-arm star; angles in radians, hub at vertex 0
//! let graph = presets::star(&[(0.4, 3.14), (0.2, 1.57), (0.6, 0.0)]);
//! let grid = GridSpec::new(501).unwrap();
//! let opts = SolverOptions { grid, ..Default::default() };
//!
//! // ground state and first gap are all the quadrature route needs
//! let spectrum = spectral::find_spectrum(&graph, 2, &opts).unwrap();
//! let gs = dl::GroundStateGrid::new(&graph, spectrum.ground(), grid);
//! let (beta, gamma, _) = dl::compute_tensors(&gs).unwrap();
//! let pol = qgnlo_core::tensor::intrinsic_normalize(&beta, &gamma, spectrum.e10()).unwrap();
//! assert!(pol.beta.max_abs() <= 1.0);
//! assert!(pol.gamma.get(qgnlo_core::Axis::X, qgnlo_core::Axis::X,
//!                       qgnlo_core::Axis::X, qgnlo_core::Axis::X) >= -0.25);
//! ```

pub mod dl;
pub mod graph;
pub mod numerics;
pub mod sos;
pub mod spectral;
pub mod tensor;

pub use graph::{Axis, GraphError, QuantumGraph};
pub use numerics::GridSpec;
pub use spectral::{SolverOptions, Spectrum};
pub use tensor::{BetaTensor, GammaTensor, PolTensors, Units};
