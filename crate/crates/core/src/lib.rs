//! Spectral laboratory for the Willmore energy of tori near the Clifford torus.
//!
//! Surfaces are sampled on periodic parameter grids ([`grid`]), and all
//! derivatives are spectral. R³ tori and tori in the unit 3-sphere share one
//! [`Immersion`] type, tagged by [`Ambient`].

pub mod clifford;
pub mod energy;
pub mod error;
pub mod flow;
pub mod gauge;
pub mod geometry;
pub mod graph;
pub mod grid;
pub mod immersion;
pub mod io;
pub mod mobius;
mod spectral;

pub use clifford::{coercivity_lambda, mode_table, Mode, SpectralModel, KERNEL_DIM};
pub use energy::{l2_gradient, willmore_energy, willmore_gradient};
pub use error::{Error, Result};
pub use flow::{run_flow, Certificate, FlowConfig, FlowTrace, Scheme, Termination, TWO_PI_SQUARED};
pub use gauge::KernelFrame;
pub use geometry::{geometry, GeometryCache};
pub use graph::{decompose, exp_normal, graph_over, DecomposeConfig, Decomposition, GraphNorms};
pub use grid::{ParamGrid, ScalarField};
pub use immersion::{clifford_torus, clifford_torus_s3, revolution_torus, Ambient, Immersion};
pub use mobius::{random_mobius, ConformalField, MobiusMap, Primitive};
