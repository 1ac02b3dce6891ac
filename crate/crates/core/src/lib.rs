//! Numerics for a scale-dependent UV suppression function Omega(k, Lambda).
//!
//! * [`regulator`]: evaluation, UV asymptote and positivity checks.
//! * [`quadrature`]: adaptive radial quadrature and the convergence classifier.
//! * [`weighted_measure`]: weighted L^p norms, inner products and tail masses.
//! * [`operators`]: Hilbert-Schmidt norms, Nystrom spectra and the modified Laplacian.
//! * [`rg_flow`]: Lambda-derivatives, flow trajectories and the Gaussian log-partition.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod operators;
pub mod quadrature;
pub mod regulator;
pub mod rg_flow;
pub mod special;
pub mod weighted_measure;

pub use error::{Error, Result};
pub use operators::{DiscretizedOperator, KernelSpec, SpectrumReport};
pub use quadrature::{ConvergenceStatus, ConvergenceVerdict, QuadratureResult, Tolerance};
pub use regulator::{RegulatorParams, Suppression};
pub use rg_flow::{FlowSample, PartitionResult};
pub use weighted_measure::{RadialFunction, SampledFunction, Tail};
