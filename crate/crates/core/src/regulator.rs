//! The suppression function
//!
//! ```text
//! Omega(k, L) = 1 / (1 + (k^2/L^2)^beta)  -  eta * exp(-k^2/L^2) / eps(k^2)
//! eps(k^2)    = 1 / (1 + (k^2/k_c^2)^alpha)
//! ```
//!
//! together with its UV asymptote, a grid-based positivity check and a few
//! closed-form stand-ins ([`Suppression`]) used as test weights elsewhere.
//!
//! Values are never clamped: an inadmissible parameter set produces negative
//! Omega and that has to stay visible.

use serde::Serialize;
use std::fmt;

use crate::error::{Error, Result};

/// Parameters of one suppression function instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegulatorParams {
    beta: f64,
    eta: f64,
    alpha_eps: f64,
    k_c: f64,
    lambda: f64,
    dim: u32,
}

impl RegulatorParams {
    /// `beta`, `alpha_eps`, `k_c`, `lambda` must be positive, `eta`
    /// non-negative and `dim` at least 1.
    pub fn new(beta: f64, eta: f64, alpha_eps: f64, k_c: f64, lambda: f64, dim: u32) -> Result<Self> {
        const OP: &str = "RegulatorParams::new";
        let positive = [
            ("beta", beta),
            ("alpha_eps", alpha_eps),
            ("k_c", k_c),
            ("lambda", lambda),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(
                    OP,
                    format!("{name} must be positive and finite, got {v}"),
                ));
            }
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::domain(
                OP,
                format!("eta must be non-negative and finite, got {eta}"),
            ));
        }
        if dim == 0 {
            return Err(Error::domain(OP, "dim must be at least 1"));
        }
        Ok(Self {
            beta,
            eta,
            alpha_eps,
            k_c,
            lambda,
            dim,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn alpha_eps(&self) -> f64 {
        self.alpha_eps
    }

    pub fn k_c(&self) -> f64 {
        self.k_c
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Same parameters at a different cutoff scale.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.beta, self.eta, self.alpha_eps, self.k_c, lambda, self.dim)
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.beta, eta, self.alpha_eps, self.k_c, self.lambda, self.dim)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(beta, self.eta, self.alpha_eps, self.k_c, self.lambda, self.dim)
    }

    pub fn with_dim(&self, dim: u32) -> Result<Self> {
        Self::new(self.beta, self.eta, self.alpha_eps, self.k_c, self.lambda, dim)
    }

    /// Fails unless 2 beta > d/2, the power-law damping condition for the
    /// Gaussian functional measure.
    pub fn require_uv_damping(&self) -> Result<()> {
        let margin = 2.0 * self.beta - self.dim as f64 / 2.0;
        if margin > 0.0 {
            Ok(())
        } else {
            Err(Error::domain(
                "RegulatorParams::require_uv_damping",
                format!("2beta > d/2 violated: 2*{} - {}/2 = {margin}", self.beta, self.dim),
            ))
        }
    }
}

/// eps(k^2) = 1 / (1 + (k^2/k_c^2)^alpha).
pub fn epsilon_eval(k2: f64, params: &RegulatorParams) -> Result<f64> {
    if k2.is_nan() || k2 < 0.0 {
        return Err(Error::domain(
            "epsilon_eval",
            format!("k^2 must be non-negative, got {k2}"),
        ));
    }
    Ok(1.0 / (1.0 + (k2 / (params.k_c * params.k_c)).powf(params.alpha_eps)))
}

/// (k^2/L^2)^beta, computed as (k/L)^(2 beta) so large k does not overflow early.
#[inline]
pub(crate) fn power_ratio(k: f64, params: &RegulatorParams) -> f64 {
    (k.abs() / params.lambda).powf(2.0 * params.beta)
}

/// eta * exp(-k^2/L^2) / eps(k^2), evaluated in log space so that the
/// exponential underflow wins over the polynomial growth of 1/eps.
#[inline]
pub(crate) fn damping_term(k: f64, params: &RegulatorParams) -> f64 {
    if params.eta == 0.0 {
        return 0.0;
    }
    let k = k.abs();
    if k == 0.0 {
        return params.eta;
    }
    let x = (k / params.lambda).powi(2);
    if !x.is_finite() {
        return 0.0;
    }
    // ln(1 + t) with t = (k/k_c)^(2 alpha)
    let lt = 2.0 * params.alpha_eps * (k.ln() - params.k_c.ln());
    let ln_inv_eps = if lt > 0.0 {
        lt + (-lt).exp().ln_1p()
    } else {
        lt.exp().ln_1p()
    };
    (params.eta.ln() - x + ln_inv_eps).exp()
}

/// Omega(k, L) with the minus-sign damping term. Even in `k`.
pub fn omega_eval(k: f64, params: &RegulatorParams) -> f64 {
    1.0 / (1.0 + power_ratio(k, params)) - damping_term(k, params)
}

/// The same expression with a plus sign in front of the damping term, kept
/// only to demonstrate what that convention does to `1 - Omega`.
pub fn omega_eval_plus_variant(k: f64, params: &RegulatorParams) -> f64 {
    1.0 / (1.0 + power_ratio(k, params)) + damping_term(k, params)
}

/// Large-momentum form (L^2/k^2)^beta.
pub fn omega_uv_asymptote(k: f64, params: &RegulatorParams) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::domain(
            "omega_uv_asymptote",
            format!("k must be positive, got {k}"),
        ));
    }
    Ok((params.lambda / k).powf(2.0 * params.beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub holds: bool,
    /// Momentum with the smallest margin.
    pub worst_k: f64,
    /// min over the grid of eps/(1 + (k^2/L^2)^beta) - eta exp(-k^2/L^2).
    pub margin: f64,
}

/// Margin of the positivity inequality
/// `eta exp(-k^2/L^2) <= eps(k^2) / (1 + (k^2/L^2)^beta)` at one momentum.
pub fn admissibility_margin(k: f64, params: &RegulatorParams) -> f64 {
    let k = k.abs();
    let eps = 1.0 / (1.0 + (k / params.k_c).powf(2.0 * params.alpha_eps));
    let lhs = params.eta * (-(k / params.lambda).powi(2)).exp();
    eps / (1.0 + power_ratio(k, params)) - lhs
}

/// Evaluates the positivity inequality on every grid point.
pub fn check_admissibility(params: &RegulatorParams, grid: &[f64]) -> Result<AdmissibilityReport> {
    const OP: &str = "check_admissibility";
    if grid.is_empty() {
        return Err(Error::usage(OP, "momentum grid is empty"));
    }
    let mut worst_k = f64::NAN;
    let mut margin = f64::INFINITY;
    for &k in grid {
        if !(k >= 0.0) {
            return Err(Error::domain(OP, format!("grid momenta must be non-negative, got {k}")));
        }
        let m = admissibility_margin(k, params);
        if m < margin {
            margin = m;
            worst_k = k;
        }
    }
    Ok(AdmissibilityReport {
        holds: margin >= 0.0,
        worst_k,
        margin,
    })
}

/// `n` logarithmically spaced points in `[lo, hi]` (both included).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo, "log_grid needs 0 < lo <= hi");
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    i if i == n - 1 => hi,
                    i => (a + step * i as f64).exp(),
                })
                .collect()
        }
    }
}

/// k = 0 followed by `n` log-spaced momenta over [1e-6 L, 1e6 L].
pub fn default_admissibility_grid(params: &RegulatorParams, n: usize) -> Vec<f64> {
    let mut grid = Vec::with_capacity(n + 1);
    grid.push(0.0);
    grid.extend(log_grid(1e-6 * params.lambda, 1e6 * params.lambda, n));
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Ir,
    Transition,
    Uv,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Ir => "IR",
            Regime::Transition => "transition",
            Regime::Uv => "UV",
        })
    }
}

/// Reporting labels: IR below L/10, UV above 10 L.
pub fn classify_regime(k: f64, params: &RegulatorParams) -> Regime {
    let k = k.abs();
    if k < params.lambda / 10.0 {
        Regime::Ir
    } else if k > 10.0 * params.lambda {
        Regime::Uv
    } else {
        Regime::Transition
    }
}

/// Empirical monotonicity of Omega along a sorted grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub non_increasing: bool,
    /// Largest increase Omega(k_{i+1}) - Omega(k_i) seen (<= 0 when monotone).
    pub max_increase: f64,
    pub at_k: f64,
}

pub fn monotonicity_report(params: &RegulatorParams, grid: &[f64]) -> MonotonicityReport {
    let mut max_increase = f64::NEG_INFINITY;
    let mut at_k = f64::NAN;
    for w in grid.windows(2) {
        let inc = omega_eval(w[1], params) - omega_eval(w[0], params);
        if inc > max_increase {
            max_increase = inc;
            at_k = w[1];
        }
    }
    MonotonicityReport {
        non_increasing: max_increase <= 0.0,
        max_increase,
        at_k,
    }
}

/// A weight function on momentum space: either a suppression function
/// instance or one of the closed forms used as test weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Suppression {
    Regulator(RegulatorParams),
    /// exp(-gamma k^2)
    Gaussian {
        gamma: f64,
        dim: u32,
    },
    /// exp(-gamma |k|)
    Exponential {
        gamma: f64,
        dim: u32,
    },
    /// Omega = 1
    Unit {
        dim: u32,
    },
}

impl From<RegulatorParams> for Suppression {
    fn from(p: RegulatorParams) -> Self {
        Suppression::Regulator(p)
    }
}

impl Suppression {
    pub fn eval(&self, k: f64) -> f64 {
        match self {
            Suppression::Regulator(p) => omega_eval(k, p),
            Suppression::Gaussian { gamma, .. } => (-gamma * k * k).exp(),
            Suppression::Exponential { gamma, .. } => (-gamma * k.abs()).exp(),
            Suppression::Unit { .. } => 1.0,
        }
    }

    pub fn dim(&self) -> u32 {
        match self {
            Suppression::Regulator(p) => p.dim,
            Suppression::Gaussian { dim, .. } | Suppression::Exponential { dim, .. } | Suppression::Unit { dim } => {
                *dim
            }
        }
    }

    /// Characteristic momentum where the weight starts to bite.
    pub fn scale(&self) -> f64 {
        match self {
            Suppression::Regulator(p) => p.lambda,
            Suppression::Gaussian { gamma, .. } => 1.0 / gamma.sqrt(),
            Suppression::Exponential { gamma, .. } => 1.0 / gamma,
            Suppression::Unit { .. } => 1.0,
        }
    }

    pub(crate) fn validate(&self, op: &'static str) -> Result<()> {
        match self {
            Suppression::Regulator(_) => Ok(()),
            Suppression::Gaussian { gamma, dim } | Suppression::Exponential { gamma, dim } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    Err(Error::domain(op, format!("gamma must be positive, got {gamma}")))
                } else if *dim == 0 {
                    Err(Error::domain(op, "dim must be at least 1"))
                } else {
                    Ok(())
                }
            }
            Suppression::Unit { dim } => {
                if *dim == 0 {
                    Err(Error::domain(op, "dim must be at least 1"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(beta: f64, eta: f64) -> RegulatorParams {
        RegulatorParams::new(beta, eta, 2.0, 1.0, 1.0, 4).unwrap()
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(RegulatorParams::new(0.0, 0.0, 1.0, 1.0, 1.0, 1).is_err());
        assert!(RegulatorParams::new(1.0, -0.1, 1.0, 1.0, 1.0, 1).is_err());
        assert!(RegulatorParams::new(1.0, 0.0, 1.0, 0.0, 1.0, 1).is_err());
        assert!(RegulatorParams::new(1.0, 0.0, 1.0, 1.0, f64::NAN, 1).is_err());
        assert!(RegulatorParams::new(1.0, 0.0, 1.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn uv_damping_condition() {
        assert!(params(1.5, 0.0).require_uv_damping().is_ok());
        // 2*1 > 4/2 fails at equality
        assert!(params(1.0, 0.0).require_uv_damping().is_err());
    }

    #[test]
    fn epsilon_values() {
        let p = params(1.0, 0.0);
        assert_eq!(epsilon_eval(0.0, &p).unwrap(), 1.0);
        assert_eq!(epsilon_eval(1.0, &p).unwrap(), 0.5);
        assert_relative_eq!(
            epsilon_eval(100.0, &p).unwrap(),
            1.0 / (1.0 + 1e4),
            max_relative = 1e-15
        );
        assert!(epsilon_eval(-1.0, &p).is_err());
    }

    #[test]
    fn epsilon_strictly_decreasing() {
        let p = params(1.0, 0.0);
        let grid = log_grid(1e-3, 1e3, 200);
        for w in grid.windows(2) {
            assert!(epsilon_eval(w[1] * w[1], &p).unwrap() < epsilon_eval(w[0] * w[0], &p).unwrap());
        }
    }

    #[test]
    fn omega_values() {
        assert_eq!(omega_eval(0.0, &params(2.0, 0.0)), 1.0);
        assert_eq!(omega_eval(1.0, &params(2.0, 0.0)), 0.5);
        assert_eq!(omega_eval(1.0, &params(0.3, 0.0)), 0.5);
        assert_relative_eq!(omega_eval(0.0, &params(2.0, 0.1)), 0.9, max_relative = 1e-15);
    }

    #[test]
    fn damping_term_has_no_overflow_nan() {
        let p = RegulatorParams::new(1.0, 0.5, 50.0, 1e-3, 1.0, 1).unwrap();
        for k in [1e3, 1e6, 1e100, 1e300, f64::MAX] {
            let v = omega_eval(k, &p);
            assert!(v.is_finite() && v >= 0.0, "k={k} -> {v}");
        }
        // the same term evaluated naively
        let k: f64 = 10.0;
        let naive = 0.5 * (-k * k).exp() * (1.0 + (k / 1e-3).powf(100.0));
        assert_relative_eq!(damping_term(k, &p), naive, max_relative = 1e-12);
    }

    #[test]
    fn no_clamping_of_negative_values() {
        let p = params(1.0, 2.0);
        assert_relative_eq!(omega_eval(0.0, &p), -1.0, max_relative = 1e-15);
    }

    #[test]
    fn plus_variant_exceeds_one_at_origin() {
        let p = params(1.0, 0.1);
        assert_relative_eq!(omega_eval_plus_variant(0.0, &p), 1.1, max_relative = 1e-15);
    }

    #[test]
    fn asymptote_values() {
        let p = params(2.0, 0.0);
        assert_eq!(omega_uv_asymptote(1.0, &p).unwrap(), 1.0);
        assert_relative_eq!(omega_uv_asymptote(10.0, &p).unwrap(), 1e-4, max_relative = 1e-14);
        assert!(omega_uv_asymptote(0.0, &p).is_err());
        let ratio = omega_eval(1e3, &p) / omega_uv_asymptote(1e3, &p).unwrap();
        assert!((ratio - 1.0).abs() < 1e-5);
    }

    #[test]
    fn asymptote_ratio_tends_to_one() {
        let p = params(1.3, 0.0);
        let mut prev = f64::INFINITY;
        for k in [10.0, 100.0, 1e3, 1e4] {
            let dev = (omega_eval(k, &p) / omega_uv_asymptote(k, &p).unwrap() - 1.0).abs();
            assert!(dev < prev);
            prev = dev;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn admissibility_trivial_cases() {
        let grid = default_admissibility_grid(&params(1.0, 0.0), 1000);
        let r = check_admissibility(&params(1.0, 0.0), &grid).unwrap();
        assert!(r.holds && r.margin > 0.0);

        let r = check_admissibility(&params(1.0, 2.0), &grid).unwrap();
        assert!(!r.holds);
        assert_eq!(r.worst_k, 0.0);
        assert_relative_eq!(r.margin, -1.0, max_relative = 1e-15);

        assert!(check_admissibility(&params(1.0, 0.0), &[]).is_err());
        assert!(check_admissibility(&params(1.0, 0.0), &[-1.0]).is_err());
    }

    #[test]
    fn admissibility_agrees_with_dense_scan() {
        let p = RegulatorParams::new(1.0, 0.1, 2.0, 1.0, 1.0, 1).unwrap();
        let coarse = check_admissibility(&p, &log_grid(1e-6, 1e6, 1000)).unwrap();
        // brute force: 10^6 log-spaced points plus the origin
        let n = 1_000_000;
        let (a, b) = (1e-6f64.ln(), 1e6f64.ln());
        let mut min = admissibility_margin(0.0, &p);
        for i in 0..n {
            let k = (a + (b - a) * i as f64 / (n - 1) as f64).exp();
            let m = {
                let eps = 1.0 / (1.0 + (k * k).powi(2));
                eps / (1.0 + k * k) - 0.1 * (-k * k).exp()
            };
            min = min.min(m);
        }
        assert_eq!(coarse.holds, min >= 0.0);
        assert!(coarse.holds);
    }

    #[test]
    fn margin_sign_matches_omega_sign() {
        // margin >= 0  <=>  Omega >= 0 (divide by eps > 0)
        let p = RegulatorParams::new(1.0, 0.9, 2.0, 0.1, 1.0, 1).unwrap();
        for k in log_grid(1e-3, 1e2, 500) {
            let m = admissibility_margin(k, &p);
            let o = omega_eval(k, &p);
            assert_eq!(m >= 0.0, o >= 0.0, "k = {k}");
        }
    }

    #[test]
    fn regimes() {
        let p = params(1.0, 0.0);
        assert_eq!(classify_regime(0.0, &p), Regime::Ir);
        assert_eq!(classify_regime(1.0, &p), Regime::Transition);
        assert_eq!(classify_regime(100.0, &p), Regime::Uv);
        assert_eq!(classify_regime(0.1, &p), Regime::Transition);
        assert_eq!(classify_regime(10.0, &p), Regime::Transition);
    }

    #[test]
    fn monotone_without_damping() {
        let p = params(0.7, 0.0);
        let r = monotonicity_report(&p, &log_grid(1e-4, 1e4, 2000));
        assert!(r.non_increasing);
    }

    #[test]
    fn smoothness_second_order_differences() {
        // central differences in k and in Lambda converge at second order
        let p = RegulatorParams::new(1.5, 0.05, 2.0, 1.0, 1.0, 3).unwrap();
        let k0 = 0.8;
        let exact_dk = {
            // derivative by a much finer Richardson-extrapolated difference
            let d = |h: f64| (omega_eval(k0 + h, &p) - omega_eval(k0 - h, &p)) / (2.0 * h);
            (4.0 * d(1e-4) - d(2e-4)) / 3.0
        };
        let e1 = ((omega_eval(k0 + 1e-2, &p) - omega_eval(k0 - 1e-2, &p)) / 2e-2 - exact_dk).abs();
        let e2 = ((omega_eval(k0 + 5e-3, &p) - omega_eval(k0 - 5e-3, &p)) / 1e-2 - exact_dk).abs();
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");

        let om = |l: f64| omega_eval(k0, &p.with_lambda(l).unwrap());
        let exact_dl = {
            let d = |h: f64| (om(1.0 + h) - om(1.0 - h)) / (2.0 * h);
            (4.0 * d(1e-4) - d(2e-4)) / 3.0
        };
        let e1 = ((om(1.0 + 1e-2) - om(1.0 - 1e-2)) / 2e-2 - exact_dl).abs();
        let e2 = ((om(1.0 + 5e-3) - om(1.0 - 5e-3)) / 1e-2 - exact_dl).abs();
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn suppression_forms() {
        assert_eq!(Suppression::Unit { dim: 2 }.eval(5.0), 1.0);
        assert_relative_eq!(Suppression::Gaussian { gamma: 1.0, dim: 1 }.eval(1.0), (-1.0f64).exp());
        assert_relative_eq!(
            Suppression::Exponential { gamma: 2.0, dim: 1 }.eval(-1.0),
            (-2.0f64).exp()
        );
        assert!(Suppression::Gaussian { gamma: 0.0, dim: 1 }.validate("t").is_err());
        let p = params(2.0, 0.0);
        assert_eq!(Suppression::from(p).eval(1.0), 0.5);
        assert_eq!(Suppression::from(p).dim(), 4);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-2, 1e2, 5);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[4], 1e2);
        assert_relative_eq!(g[2], 1.0, max_relative = 1e-14);
    }
}
