//! Dependence of Omega on the cutoff scale: Lambda-derivatives, trajectories
//! in Lambda, a curvature-flow proxy and the Gaussian log-partition integral
//!
//! ```text
//! ln Z = 1/2 * integral over |k| <= R of [ln 2 pi - ln(1 - Omega)] d^d k
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{compensated_sum, radial_integral_between, QuadConfig, Tolerance};
use crate::regulator::{damping_term, log_grid, omega_eval, power_ratio, RegulatorParams};
use crate::special::unit_sphere_area;

/// Lambda dOmega/dLambda from exact differentiation:
///
/// ```text
/// 2 beta u / (1 + u)^2  -  2 (k^2/L^2) eta exp(-k^2/L^2) / eps(k^2),   u = (k/L)^(2 beta)
/// ```
pub fn domega_dlambda_analytic(k: f64, params: &RegulatorParams) -> f64 {
    let w = 1.0 / (1.0 + power_ratio(k, params));
    let power = 2.0 * params.beta() * w * (1.0 - w);
    let d = damping_term(k, params);
    let x = (k / params.lambda()).powi(2);
    let damping = if d == 0.0 { 0.0 } else { 2.0 * x * d };
    power - damping
}

/// The closed form in circulation for the same quantity, evaluated exactly
/// as written:
///
/// ```text
/// -2 beta (k/L)^(2 beta) L / (1 + (k/L)^(2 beta))^2  -  2 eta k^2 exp(-k^2/L^2) / (eps(k^2) L)
/// ```
///
/// It has the opposite sign on the first term and a stray factor of L on
/// both; kept for side-by-side comparison only.
pub fn domega_dlambda_printed(k: f64, params: &RegulatorParams) -> f64 {
    let lambda = params.lambda();
    let w = 1.0 / (1.0 + power_ratio(k, params));
    let first = -2.0 * params.beta() * lambda * w * (1.0 - w);
    let d = damping_term(k, params);
    let second = if d == 0.0 { 0.0 } else { 2.0 * k * k * d / lambda };
    first - second
}

/// Central difference of Omega in ln Lambda.
pub fn domega_dlambda_finite_difference(k: f64, params: &RegulatorParams, step: f64) -> Result<f64> {
    let up = params.with_lambda(params.lambda() * step.exp())?;
    let down = params.with_lambda(params.lambda() * (-step).exp())?;
    Ok((omega_eval(k, &up) - omega_eval(k, &down)) / (2.0 * step))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeDiscrepancy {
    pub k: f64,
    pub lambda: f64,
    pub analytic: f64,
    pub printed: f64,
    /// printed - analytic, in units of Lambda dOmega/dLambda.
    pub difference: f64,
    pub sign_mismatch: bool,
}

pub fn derivative_discrepancy(k: f64, params: &RegulatorParams) -> DerivativeDiscrepancy {
    let analytic = domega_dlambda_analytic(k, params);
    let printed = domega_dlambda_printed(k, params);
    DerivativeDiscrepancy {
        k,
        lambda: params.lambda(),
        analytic,
        printed,
        difference: printed - analytic,
        sign_mismatch: analytic * printed < 0.0,
    }
}

/// Lambda dR/dLambda = -4 beta^2 k^(4 beta - 2) / Lambda^3, evaluated as
/// written. No derivation of R from the weighted metric is attempted.
pub fn ricci_flow_eval(k: f64, params: &RegulatorParams) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain("ricci_flow_eval", format!("k must be positive, got {k}")));
    }
    let beta = params.beta();
    Ok(-4.0 * beta * beta * k.powf(4.0 * beta - 2.0) / params.lambda().powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowSample {
    pub lambda: f64,
    pub omega: f64,
    pub domega_dlog_lambda: f64,
    /// `None` at k = 0, where the proxy is not defined.
    pub ricci_proxy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowTrajectory {
    pub k: f64,
    pub samples: Vec<FlowSample>,
    /// Integral of dOmega/dLambda dLambda along the samples.
    pub integrated_change: f64,
    /// Omega(lambda_end) - Omega(lambda_start).
    pub endpoint_change: f64,
    /// |integrated - endpoint| / |endpoint|, or the absolute gap when the
    /// endpoint change is zero.
    pub consistency_error: f64,
}

impl FlowTrajectory {
    /// `lambda,omega,dOmega_dlogLambda,ricci_proxy` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,omega,dOmega_dlogLambda,ricci_proxy\n");
        for s in &self.samples {
            let ricci = s.ricci_proxy.map(|r| format!("{r:e}")).unwrap_or_default();
            out.push_str(&format!(
                "{:e},{:e},{:e},{ricci}\n",
                s.lambda, s.omega, s.domega_dlog_lambda
            ));
        }
        out
    }
}

/// Samples at `steps` log-spaced Lambda values and integrates the analytic
/// derivative over ln Lambda (composite Simpson, with a 3/8 panel when the
/// interval count is odd).
pub fn flow_trajectory(
    k: f64,
    params: &RegulatorParams,
    lambda_start: f64,
    lambda_end: f64,
    steps: usize,
) -> Result<FlowTrajectory> {
    const OP: &str = "flow_trajectory";
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::domain(OP, format!("k must be finite and non-negative, got {k}")));
    }
    if !(lambda_start > 0.0 && lambda_end > 0.0 && lambda_start.is_finite() && lambda_end.is_finite()) {
        return Err(Error::domain(OP, "lambda_start and lambda_end must be positive"));
    }
    if steps < 2 {
        return Err(Error::usage(OP, format!("need at least 2 steps, got {steps}")));
    }
    let (l0, l1) = (lambda_start.ln(), lambda_end.ln());
    let h = (l1 - l0) / (steps - 1) as f64;
    let samples = (0..steps)
        .map(|i| {
            let lambda = if i == 0 {
                lambda_start
            } else if i == steps - 1 {
                lambda_end
            } else {
                (l0 + i as f64 * h).exp()
            };
            let p = params.with_lambda(lambda)?;
            Ok(FlowSample {
                lambda,
                omega: omega_eval(k, &p),
                domega_dlog_lambda: domega_dlambda_analytic(k, &p),
                ricci_proxy: if k > 0.0 { Some(ricci_flow_eval(k, &p)?) } else { None },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let y: Vec<f64> = samples.iter().map(|s| s.domega_dlog_lambda).collect();
    let integrated_change = integrate_uniform(&y, h);
    let endpoint_change = samples[steps - 1].omega - samples[0].omega;
    let gap = (integrated_change - endpoint_change).abs();
    let consistency_error = if endpoint_change == 0.0 {
        gap
    } else {
        gap / endpoint_change.abs()
    };
    Ok(FlowTrajectory {
        k,
        samples,
        integrated_change,
        endpoint_change,
        consistency_error,
    })
}

fn integrate_uniform(y: &[f64], h: f64) -> f64 {
    let intervals = y.len() - 1;
    if h == 0.0 {
        return 0.0;
    }
    if intervals == 1 {
        return 0.5 * h * (y[0] + y[1]);
    }
    let (simpson_end, tail) = if intervals % 2 == 1 {
        (intervals - 3, true)
    } else {
        (intervals, false)
    };
    let mut terms = Vec::with_capacity(y.len() + 4);
    for i in (0..simpson_end).step_by(2) {
        terms.push(h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]));
    }
    if tail {
        let i = simpson_end;
        terms.push(3.0 * h / 8.0 * (y[i] + 3.0 * y[i + 1] + 3.0 * y[i + 2] + y[i + 3]));
    }
    compensated_sum(terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionResult {
    /// 1/2 * integral over the ball of [ln 2 pi - ln(1 - Omega)].
    pub ln_z: f64,
    /// The same with the Omega = 0 reference subtracted:
    /// -1/2 * integral over the ball of ln(1 - Omega). Finite as the cutoff
    /// grows whenever Omega is integrable.
    pub ln_z_density: f64,
    pub uv_cutoff: f64,
    /// Minimum of 1 - Omega found on the scan of [0, uv_cutoff].
    pub integrand_min_argument: f64,
    pub abs_error_estimate: f64,
}

/// ln 2 pi - ln(1 - Omega(k)). Infinite or NaN where 1 - Omega <= 0.
pub fn log_partition_integrand(k: f64, params: &RegulatorParams) -> f64 {
    (2.0 * std::f64::consts::PI).ln() - (-omega_eval(k, params)).ln_1p()
}

pub fn log_partition(params: &RegulatorParams, uv_cutoff: f64, tol: impl Into<Tolerance>) -> Result<PartitionResult> {
    log_partition_for(|k| omega_eval(k, params), params, uv_cutoff, tol)
}

/// [`log_partition`] for an arbitrary suppression profile on the same scales,
/// e.g. the plus-sign variant.
pub fn log_partition_for(
    omega: impl Fn(f64) -> f64,
    params: &RegulatorParams,
    uv_cutoff: f64,
    tol: impl Into<Tolerance>,
) -> Result<PartitionResult> {
    const OP: &str = "log_partition";
    if !(uv_cutoff > 0.0 && uv_cutoff.is_finite()) {
        return Err(Error::domain(
            OP,
            format!("uv_cutoff must be positive, got {uv_cutoff}"),
        ));
    }
    let (k_min, min_arg) = scan_one_minus_omega(&omega, params, 0.0, uv_cutoff);
    if !(min_arg > 0.0) {
        return Err(Error::IllDefinedGaussian {
            op: OP,
            k: k_min,
            one_minus_omega: min_arg,
        });
    }
    let dim = params.dim();
    let density = density_between(&omega, params, 0.0, uv_cutoff, tol.into())?;
    let area = unit_sphere_area(dim);
    let free = 0.5 * (2.0 * std::f64::consts::PI).ln() * area * uv_cutoff.powi(dim as i32) / dim as f64;
    Ok(PartitionResult {
        ln_z: free + density.0,
        ln_z_density: density.0,
        uv_cutoff,
        integrand_min_argument: min_arg,
        abs_error_estimate: density.1,
    })
}

/// (argmin, min) of 1 - Omega on a dense linear-plus-logarithmic scan.
fn scan_one_minus_omega(omega: &impl Fn(f64) -> f64, params: &RegulatorParams, lo: f64, hi: f64) -> (f64, f64) {
    let mut points: Vec<f64> = (0..=2000).map(|i| lo + (hi - lo) * i as f64 / 2000.0).collect();
    let log_lo = if lo > 0.0 {
        lo
    } else {
        (1e-8 * params.lambda()).min(1e-3 * hi)
    };
    points.extend(log_grid(log_lo, hi, 4000));
    points
        .into_iter()
        .map(|k| (k, 1.0 - omega(k)))
        .fold((lo, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 || cur.1.is_nan() {
                cur
            } else {
                best
            }
        })
}

/// (-1/2 integral over lo <= |k| <= hi of ln(1 - Omega) d^d k, error estimate).
fn density_between(
    omega: &impl Fn(f64) -> f64,
    params: &RegulatorParams,
    lo: f64,
    hi: f64,
    tol: Tolerance,
) -> Result<(f64, f64)> {
    const OP: &str = "log_partition";
    let lambda = params.lambda();
    let mut breakpoints: Vec<f64> = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.3, 1.0, 3.0, 10.0]
        .iter()
        .map(|f| f * lambda)
        .collect();
    let mut b = 30.0 * lambda;
    while b < hi {
        breakpoints.push(b);
        b *= 4.0;
    }
    breakpoints.retain(|&x| x > lo && x < hi);
    let cfg = QuadConfig {
        tol: Tolerance::new(2.0 * tol.abs, 2.0 * tol.rel),
        breakpoints,
        ..QuadConfig::default()
    };
    let res = radial_integral_between(|k| (-omega(k)).ln_1p(), params.dim(), lo, hi, &cfg)?;
    if !res.converged {
        return Err(Error::NotConverged { op: OP, result: res });
    }
    Ok((-0.5 * res.value, 0.5 * res.abs_error_estimate))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffStabilization {
    /// (cutoff, ln_z_density) pairs, starting at 10 Lambda and doubling.
    pub history: Vec<(f64, f64)>,
    pub settled: bool,
    pub last_change: f64,
}

/// Doubles the cutoff from 10 Lambda until ln_z_density changes by less
/// than `target`, at most `max_doublings` times.
pub fn log_partition_cutoff_scan(
    params: &RegulatorParams,
    target: f64,
    max_doublings: usize,
    tol: impl Into<Tolerance>,
) -> Result<CutoffStabilization> {
    const OP: &str = "log_partition_cutoff_scan";
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::usage(OP, format!("target must be positive, got {target}")));
    }
    let tol = tol.into();
    let omega = |k: f64| omega_eval(k, params);
    let mut cutoff = 10.0 * params.lambda();
    let first = log_partition(params, cutoff, tol)?;
    let mut value = first.ln_z_density;
    let mut history = vec![(cutoff, value)];
    let mut last_change = f64::INFINITY;
    for _ in 0..max_doublings {
        let next = 2.0 * cutoff;
        let (k, m) = scan_one_minus_omega(&omega, params, cutoff, next);
        if !(m > 0.0) {
            return Err(Error::IllDefinedGaussian {
                op: OP,
                k,
                one_minus_omega: m,
            });
        }
        let (inc, _) = density_between(&omega, params, cutoff, next, tol)?;
        value += inc;
        cutoff = next;
        history.push((cutoff, value));
        last_change = inc.abs();
        if last_change < target {
            return Ok(CutoffStabilization {
                history,
                settled: true,
                last_change,
            });
        }
    }
    Ok(CutoffStabilization {
        history,
        settled: false,
        last_change,
    })
}
