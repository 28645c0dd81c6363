//! Multiscale aggregation–diffusion laboratory.
//!
//! Soft-sphere blob particles, hard-sphere constrained particles, 1D finite
//! volume solvers for the macroscopic and sharp-interface regimes, and the
//! energies and distances used to compare them.

pub mod ensemble;
pub mod error;
pub mod grid;
pub mod harness;
pub mod hardsphere;
pub mod io;
pub mod kernels;
pub mod metrics;
pub mod numerics;
pub mod particles;
pub mod pde;
pub mod pressure;

pub use ensemble::ParticleEnsemble;
pub use error::{Error, Result};
pub use grid::{BoundaryKind, GridField, GridSpec};
pub use kernels::{InteractionKernel, KernelDomain, Mollifier, MollifierShape, RobinBC};
pub use pressure::{DoubleWell, PressureLaw};
