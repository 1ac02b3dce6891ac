use thiserror::Error;

use crate::quadrature::{ConvergenceVerdict, QuadratureResult};

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module.
///
/// The variants fall into three families that the CLI maps onto exit codes:
/// argument problems ([`Error::Domain`], [`Error::Usage`]), symbolic refusals
/// ([`Error::Divergent`], [`Error::IllDefinedGaussian`]) and numerical
/// failures (everything else).
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{op}: domain error: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("{op}: usage error: {msg}")]
    Usage { op: &'static str, msg: String },

    #[error("{op}: divergent, requires {}: margin {}", verdict.deciding_inequality, verdict.margin)]
    Divergent {
        op: &'static str,
        verdict: ConvergenceVerdict,
    },

    #[error("{op}: ill-defined Gaussian mode, 1 - Omega = {one_minus_omega} at k = {k}")]
    IllDefinedGaussian {
        op: &'static str,
        k: f64,
        one_minus_omega: f64,
    },

    #[error("{op}: non-finite integrand value at k = {k}")]
    NonFiniteIntegrand { op: &'static str, k: f64 },

    /// The symbolic classifier predicted convergence but the quadrature did not
    /// reach its tolerance.
    #[error("{op}: classifier says {} ({}) but quadrature failed: {detail}", verdict.status, verdict.deciding_inequality)]
    ClassifierDisagreement {
        op: &'static str,
        verdict: ConvergenceVerdict,
        detail: String,
    },

    #[error("{op}: quadrature did not converge: value {}, error estimate {} > tolerance {}", result.value, result.abs_error_estimate, result.tolerance)]
    NotConverged { op: &'static str, result: QuadratureResult },

    /// Two discretisations that should agree (different tail splits, different
    /// exclusion bands) did not.
    #[error("{op}: sensitivity check failed: {msg}")]
    Sensitivity { op: &'static str, msg: String },

    #[error("{op}: matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { op: &'static str, asymmetry: f64 },
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub(crate) fn usage(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Usage { op, msg: msg.into() }
    }

    /// Bad arguments or parameters.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::Usage { .. })
    }

    /// Refused before any numerics ran because the quantity is known to be
    /// infinite or undefined.
    pub fn is_refusal(&self) -> bool {
        matches!(self, Error::Divergent { .. } | Error::IllDefinedGaussian { .. })
    }

    pub fn is_numerical(&self) -> bool {
        !self.is_usage() && !self.is_refusal()
    }

    pub fn verdict(&self) -> Option<&ConvergenceVerdict> {
        match self {
            Error::Divergent { verdict, .. } | Error::ClassifierDisagreement { verdict, .. } => Some(verdict),
            _ => None,
        }
    }
}
