//! Geometry, ergodic averaging and energy functionals for incommensurate
//! twisted bilayers.
//!
//! The commonly used types are re-exported at the crate root; the modules
//! hold the full API.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod diophantine;
pub mod elastic;
pub mod energy;
pub mod ergodic;
pub mod error;
pub mod fields;
pub mod lattice;
pub mod parallel;
pub mod potentials;
pub mod relax;
pub mod stencil;
pub mod zeta;

pub use convergence::{fit_rate, ConvergenceRecord, RateFit};
pub use diophantine::{diophantine_scan, DiophantineScan, PairConstant};
pub use elastic::{ElasticModuli, ModuliUnit};
pub use energy::{
    interlayer_energy_limit, interlayer_energy_n, misfit_energy, total_energy, EnergyBreakdown,
    Evaluation, InterlayerModel, InterlayerSettings, LayerEnergy,
};
pub use error::{Error, Result};
pub use fields::{DisplacementField, FourierField};
pub use lattice::{BilayerGeometry, Layer, Mat2, SublatticeSpec, Vec2, Vec3};
pub use potentials::{PairPotential, ProbeGrid, RadialRule};
pub use relax::{relax, Method, RelaxConfig, RelaxTrace};
