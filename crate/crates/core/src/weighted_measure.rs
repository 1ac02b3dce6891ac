//! Weighted measure d mu = Omega d^d k on radial functions: total mass,
//! weighted L^p norms, inner products, distances and tail-mass diagnostics.
//!
//! Every integral here runs to infinity, so each function carries an explicit
//! statement of its large-k behaviour ([`Tail`]). That, together with the
//! weight, decides convergence before any quadrature is attempted.

use serde::Serialize;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{
    self, classify_convergence, integrate_semi_infinite, radial_integral_between, ConvergenceStatus,
    ConvergenceVerdict, QuadConfig, QuadratureResult, Tolerance,
};
use crate::regulator::{RegulatorParams, Suppression};
use crate::special::unit_sphere_area;

/// Large-momentum behaviour of a radial function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Tail {
    /// Identically zero beyond this radius.
    Compact(f64),
    /// |f(k)| ~ k^q.
    PowerLaw(f64),
    /// Faster than any power.
    Rapid,
}

impl Tail {
    fn exponent(self) -> Option<f64> {
        match self {
            Tail::PowerLaw(q) => Some(q),
            _ => None,
        }
    }

    /// Tail of f + g.
    pub fn sum(self, other: Tail) -> Tail {
        use Tail::*;
        match (self, other) {
            (PowerLaw(a), PowerLaw(b)) => PowerLaw(a.max(b)),
            (PowerLaw(q), _) | (_, PowerLaw(q)) => PowerLaw(q),
            (Rapid, _) | (_, Rapid) => Rapid,
            (Compact(a), Compact(b)) => Compact(a.max(b)),
        }
    }

    /// Tail of f * g.
    pub fn product(self, other: Tail) -> Tail {
        use Tail::*;
        match (self, other) {
            (Compact(a), Compact(b)) => Compact(a.min(b)),
            (Compact(a), _) | (_, Compact(a)) => Compact(a),
            (Rapid, _) | (_, Rapid) => Rapid,
            (PowerLaw(a), PowerLaw(b)) => PowerLaw(a + b),
        }
    }

    /// Tail of |f|^p.
    pub fn power(self, p: f64) -> Tail {
        match self {
            Tail::PowerLaw(q) => Tail::PowerLaw(q * p),
            other => other,
        }
    }
}

/// A function known only on a grid, interpolated with a monotone
/// (Fritsch-Carlson) cubic and extended beyond the last node by a declared
/// power law, or by zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    tail_exponent: Option<f64>,
    description: String,
}

impl SampledFunction {
    /// `tail_exponent = None` means the function vanishes past the last node.
    pub fn new(
        nodes: Vec<f64>,
        values: Vec<f64>,
        tail_exponent: Option<f64>,
        description: impl Into<String>,
    ) -> Result<Self> {
        const OP: &str = "SampledFunction::new";
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(Error::usage(
                OP,
                format!(
                    "need at least two nodes and matching values ({} vs {})",
                    nodes.len(),
                    values.len()
                ),
            ));
        }
        if nodes[0] < 0.0 || !nodes.iter().all(|x| x.is_finite()) {
            return Err(Error::domain(OP, "nodes must be finite and non-negative"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain(OP, "nodes must be strictly increasing"));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::domain(OP, "values must be finite"));
        }
        if let Some(q) = tail_exponent {
            if !q.is_finite() {
                return Err(Error::domain(OP, "tail exponent must be finite"));
            }
        }
        let slopes = pchip_slopes(&nodes, &values);
        Ok(Self {
            nodes,
            values,
            slopes,
            tail_exponent,
            description: description.into(),
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn tail(&self) -> Tail {
        match self.tail_exponent {
            Some(q) => Tail::PowerLaw(q),
            None => Tail::Compact(*self.nodes.last().unwrap()),
        }
    }

    pub fn eval(&self, k: f64) -> f64 {
        let k = k.abs();
        let n = self.nodes.len();
        let last = self.nodes[n - 1];
        if k >= last {
            return match self.tail_exponent {
                _ if k == last => self.values[n - 1],
                Some(q) => self.values[n - 1] * (k / last).powf(q),
                None => 0.0,
            };
        }
        if k <= self.nodes[0] {
            return self.values[0];
        }
        let i = self.nodes.partition_point(|&x| x <= k) - 1;
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let t = (k - x0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a * b > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    let edge = |h0: f64, h1: f64, m0: f64, m1: f64| {
        let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if d.signum() != m0.signum() || m0 == 0.0 {
            0.0
        } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
            3.0 * m0
        } else {
            d
        }
    };
    d[0] = edge(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// A radial test function f(|k|).
#[derive(Clone)]
pub enum RadialFunction {
    /// amplitude * exp(-(k - center)^2 / (2 width^2))
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    Sampled(SampledFunction),
    Closed {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        tail: Tail,
        /// Momentum scale where the function has its structure.
        scale: f64,
        label: String,
    },
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialFunction::Gaussian {
                amplitude,
                center,
                width,
            } => f
                .debug_struct("Gaussian")
                .field("amplitude", amplitude)
                .field("center", center)
                .field("width", width)
                .finish(),
            RadialFunction::Sampled(s) => f.debug_tuple("Sampled").field(&s.description).finish(),
            RadialFunction::Closed { tail, scale, label, .. } => f
                .debug_struct("Closed")
                .field("label", label)
                .field("tail", tail)
                .field("scale", scale)
                .finish(),
        }
    }
}

impl RadialFunction {
    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        if !(amplitude.is_finite() && center.is_finite() && width.is_finite() && width > 0.0) {
            return Err(Error::domain(
                "RadialFunction::gaussian",
                "need finite amplitude/center and positive width",
            ));
        }
        Ok(RadialFunction::Gaussian {
            amplitude,
            center,
            width,
        })
    }

    pub fn closed(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tail: Tail,
        scale: f64,
        label: impl Into<String>,
    ) -> Self {
        RadialFunction::Closed {
            f: Arc::new(f),
            tail,
            scale,
            label: label.into(),
        }
    }

    pub fn eval(&self, k: f64) -> f64 {
        match self {
            RadialFunction::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let z = (k.abs() - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            RadialFunction::Sampled(s) => s.eval(k),
            RadialFunction::Closed { f, tail, .. } => match tail {
                Tail::Compact(r) if k.abs() > *r => 0.0,
                _ => f(k.abs()),
            },
        }
    }

    pub fn tail(&self) -> Tail {
        match self {
            RadialFunction::Gaussian { .. } => Tail::Rapid,
            RadialFunction::Sampled(s) => s.tail(),
            RadialFunction::Closed { tail, .. } => *tail,
        }
    }

    /// c * f
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            RadialFunction::Gaussian {
                amplitude,
                center,
                width,
            } => RadialFunction::Gaussian {
                amplitude: c * amplitude,
                center: *center,
                width: *width,
            },
            other => {
                let inner = other.clone();
                let (tail, scale) = (other.tail(), other.extent());
                RadialFunction::closed(move |k| c * inner.eval(k), tail, scale, format!("{c} * ({other:?})"))
            }
        }
    }

    /// Radius past which nothing interesting happens.
    fn extent(&self) -> f64 {
        match self {
            RadialFunction::Gaussian { center, width, .. } => center.max(0.0) + 8.0 * width,
            RadialFunction::Sampled(s) => *s.nodes.last().unwrap(),
            RadialFunction::Closed { scale, tail, .. } => match tail {
                Tail::Compact(r) => *r,
                _ => *scale,
            },
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialFunction::Gaussian { center, width, .. } => (-4..=4)
                .map(|i| center + i as f64 * width)
                .filter(|&x| x > 0.0)
                .collect(),
            RadialFunction::Sampled(s) => {
                let stride = (s.nodes.len() / 1000).max(1);
                s.nodes.iter().step_by(stride).copied().collect()
            }
            RadialFunction::Closed { scale, .. } => vec![0.5 * scale, *scale, 2.0 * scale],
        }
    }
}

/// mu_Omega(R^d) = integral of Omega over R^d.
pub fn total_mass(params: &RegulatorParams, tol: impl Into<Tolerance>) -> Result<QuadratureResult> {
    quadrature::regulated_integral("total_mass", params, 0.0, tol.into(), |k| {
        crate::regulator::omega_eval(k, params)
    })
}

fn convergence_for(op: &'static str, tail: Tail, weight: &Suppression) -> Result<Option<ConvergenceVerdict>> {
    let Some(q) = tail.exponent() else {
        return Ok(None);
    };
    let verdict = match weight {
        Suppression::Regulator(p) => classify_convergence(p.dim(), q, p),
        Suppression::Gaussian { .. } | Suppression::Exponential { .. } => ConvergenceVerdict {
            status: ConvergenceStatus::ConvergentExponential,
            deciding_inequality: "exponential weight".to_string(),
            margin: f64::INFINITY,
        },
        Suppression::Unit { dim } => {
            let margin = -(*dim as f64 + q);
            ConvergenceVerdict {
                status: if margin > 0.0 {
                    ConvergenceStatus::ConvergentPowerLaw
                } else {
                    ConvergenceStatus::Divergent
                },
                deciding_inequality: "d + α < 0".to_string(),
                margin,
            }
        }
    };
    if verdict.status.is_convergent() {
        Ok(Some(verdict))
    } else {
        Err(Error::Divergent { op, verdict })
    }
}

/// Integral over R^d of h(|k|) Omega(k) where h has the given tail.
fn weighted_integral(
    op: &'static str,
    h: impl Fn(f64) -> f64,
    tail: Tail,
    extent: f64,
    mut breakpoints: Vec<f64>,
    weight: &Suppression,
    tol: Tolerance,
) -> Result<QuadratureResult> {
    weight.validate(op)?;
    let verdict = convergence_for(op, tail, weight)?;
    let integrand = |k: f64| {
        let v = h(k);
        if v == 0.0 {
            0.0
        } else {
            v * weight.eval(k)
        }
    };
    let scale = weight.scale();
    breakpoints.extend([0.1 * scale, scale, 2.0 * scale]);
    let mut cfg = QuadConfig {
        tol,
        split: extent.max(4.0 * scale),
        tail_scale: scale.max(extent / 8.0),
        breakpoints,
        ..QuadConfig::default()
    };
    let result = match tail {
        Tail::Compact(r) => {
            cfg.breakpoints.retain(|&x| x < r);
            radial_integral_between(integrand, weight.dim(), 0.0, r, &cfg)
        }
        _ => quadrature::integrate_radial_with(integrand, weight.dim(), &cfg),
    };
    match (result, verdict) {
        (Ok(r), _) if r.converged => Ok(r),
        (Ok(r), Some(verdict)) => Err(Error::ClassifierDisagreement {
            op,
            verdict,
            detail: format!(
                "error estimate {:e} above tolerance {:e}",
                r.abs_error_estimate, r.tolerance
            ),
        }),
        (Ok(r), None) => Err(Error::NotConverged { op, result: r }),
        (Err(Error::NonFiniteIntegrand { k, .. }), Some(verdict)) => Err(Error::ClassifierDisagreement {
            op,
            verdict,
            detail: format!("integrand overflowed at k = {k:e}"),
        }),
        (Err(e), _) => Err(e),
    }
}

/// (integral of |f|^p Omega d^d k)^(1/p).
pub fn weighted_lp_norm(f: &RadialFunction, p: f64, weight: &Suppression, tol: impl Into<Tolerance>) -> Result<f64> {
    const OP: &str = "weighted_lp_norm";
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::usage(OP, format!("p must be a finite real >= 1, got {p}")));
    }
    let r = weighted_integral(
        OP,
        |k| f.eval(k).abs().powf(p),
        f.tail().power(p),
        f.extent(),
        f.breakpoints(),
        weight,
        tol.into(),
    )?;
    Ok(r.value.max(0.0).powf(1.0 / p))
}

/// <f, g>_Omega = integral of f g Omega d^d k.
pub fn weighted_inner_product(
    f: &RadialFunction,
    g: &RadialFunction,
    weight: &Suppression,
    tol: impl Into<Tolerance>,
) -> Result<f64> {
    let mut bps = f.breakpoints();
    bps.extend(g.breakpoints());
    let r = weighted_integral(
        "weighted_inner_product",
        |k| f.eval(k) * g.eval(k),
        f.tail().product(g.tail()),
        f.extent().max(g.extent()),
        bps,
        weight,
        tol.into(),
    )?;
    Ok(r.value)
}

/// d_Omega(f, g) = ||f - g||_Omega.
pub fn weighted_distance(
    f: &RadialFunction,
    g: &RadialFunction,
    weight: &Suppression,
    tol: impl Into<Tolerance>,
) -> Result<f64> {
    let mut bps = f.breakpoints();
    bps.extend(g.breakpoints());
    let r = weighted_integral(
        "weighted_distance",
        |k| {
            let d = f.eval(k) - g.eval(k);
            d * d
        },
        f.tail().sum(g.tail()).power(2.0),
        f.extent().max(g.extent()),
        bps,
        weight,
        tol.into(),
    )?;
    Ok(r.value.max(0.0).sqrt())
}

#[derive(Debug, Clone)]
pub struct EmbeddingDiagnostics {
    /// Unweighted ||f||_{L^2}; `None` when that integral diverges.
    pub norm_l2: Option<f64>,
    pub norm_weighted: f64,
    /// ||f||_Omega / ||f||_{L^2}.
    pub ratio: Option<f64>,
    /// (K, integral over |k| > K of |f|^2 d^d k), unweighted.
    pub tail_mass: Vec<(f64, Option<f64>)>,
    /// Why the unweighted quantities are missing, if they are.
    pub l2_failure: Option<Error>,
}

/// Boundedness and tail quantities of f in the weighted and unweighted norms.
/// No statement about embeddings is made; these are only the measurements.
pub fn embedding_diagnostics(
    f: &RadialFunction,
    weight: &Suppression,
    cutoffs: &[f64],
    tol: impl Into<Tolerance>,
) -> Result<EmbeddingDiagnostics> {
    const OP: &str = "embedding_diagnostics";
    let tol = tol.into();
    if cutoffs.is_empty() {
        return Err(Error::usage(OP, "cutoff list is empty"));
    }
    if cutoffs.iter().any(|&k| !(k > 0.0 && k.is_finite())) || cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage(OP, "cutoffs must be positive and strictly increasing"));
    }
    let norm_weighted = weighted_lp_norm(f, 2.0, weight, tol)?;
    let unit = Suppression::Unit { dim: weight.dim() };
    let (norm_l2, l2_failure) = match weighted_lp_norm(f, 2.0, &unit, tol) {
        Ok(v) => (Some(v), None),
        Err(e) if e.is_usage() => return Err(e),
        Err(e) => (None, Some(e)),
    };
    let ratio = norm_l2.map(|l2| if l2 > 0.0 { norm_weighted / l2 } else { 0.0 });
    let tail_mass = cutoffs
        .iter()
        .map(|&cut| {
            let mass = if norm_l2.is_some() {
                Some(unweighted_tail_mass(f, weight.dim(), cut)?)
            } else {
                None
            };
            Ok((cut, mass))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingDiagnostics {
        norm_l2,
        norm_weighted,
        ratio,
        tail_mass,
        l2_failure,
    })
}

/// integral over |k| > cutoff of |f|^2 d^d k, to relative accuracy.
pub fn unweighted_tail_mass(f: &RadialFunction, dim: u32, cutoff: f64) -> Result<f64> {
    const OP: &str = "unweighted_tail_mass";
    if let Tail::Compact(r) = f.tail() {
        if cutoff >= r {
            return Ok(0.0);
        }
    }
    let power = dim as i32 - 1;
    let h = |k: f64| {
        let v = f.eval(k);
        if v == 0.0 {
            0.0
        } else {
            k.powi(power) * v * v
        }
    };
    let width = match f {
        RadialFunction::Gaussian { width, .. } => *width,
        other => other.extent().max(cutoff) / 8.0,
    };
    let cfg = QuadConfig {
        tol: Tolerance::relative(1e-10),
        split: cutoff + 4.0 * width,
        tail_scale: width,
        breakpoints: f.breakpoints(),
        ..QuadConfig::default()
    };
    let r = match f.tail() {
        Tail::Compact(r) => quadrature::integrate_interval(h, cutoff, r, &cfg)?,
        _ => integrate_semi_infinite(h, cutoff, &cfg)?,
    };
    if !r.converged {
        return Err(Error::NotConverged { op: OP, result: r });
    }
    Ok(r.value * unit_sphere_area(dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn reg(beta: f64, eta: f64, lambda: f64, dim: u32) -> RegulatorParams {
        RegulatorParams::new(beta, eta, 2.0, 1.0, lambda, dim).unwrap()
    }

    #[test]
    fn total_mass_examples() {
        assert!(matches!(
            total_mass(&reg(1.0, 0.0, 1.0, 4), 1e-10),
            Err(Error::Divergent { .. })
        ));
        let m = total_mass(&reg(1.0, 0.0, 1.0, 1), 1e-10).unwrap();
        assert_relative_eq!(m.value, PI, max_relative = 1e-9);
        let m = total_mass(&reg(2.0, 0.0, 1.5, 3), 1e-10).unwrap();
        assert!(m.value > 0.0);
    }

    #[test]
    fn total_mass_agrees_with_classifier() {
        for dim in 1..=4 {
            for beta in [0.25, 0.5, 1.0, 1.5, 2.0, 2.5] {
                for eta in [0.0, 0.05] {
                    let p = reg(beta, eta, 1.0, dim);
                    let v = classify_convergence(dim, 0.0, &p);
                    let m = total_mass(&p, 1e-9);
                    match m {
                        Err(Error::Divergent { .. }) => assert!(!v.status.is_convergent()),
                        _ => assert!(v.status.is_convergent()),
                    }
                }
            }
        }
    }

    #[test]
    fn lp_norm_examples() {
        let zero = RadialFunction::gaussian(0.0, 0.0, 1.0).unwrap();
        assert_eq!(
            weighted_lp_norm(&zero, 2.0, &reg(2.0, 0.0, 1.0, 1).into(), 1e-10).unwrap(),
            0.0
        );

        let f = RadialFunction::gaussian(1.0, 0.0, 1.0).unwrap();
        let unit = Suppression::Unit { dim: 1 };
        let n = weighted_lp_norm(&f, 2.0, &unit, 1e-12).unwrap();
        assert_relative_eq!(n, PI.sqrt().sqrt(), max_relative = 1e-9);
        assert_relative_eq!(n, 1.331_335_363_800_389_7, max_relative = 1e-9);

        let w: Suppression = reg(2.0, 0.0, 1.0, 1).into();
        let n1 = weighted_lp_norm(&f, 3.0, &w, 1e-12).unwrap();
        let n3 = weighted_lp_norm(&f.scaled(3.0), 3.0, &w, 1e-12).unwrap();
        assert_relative_eq!(n3, 3.0 * n1, max_relative = 1e-9);

        assert!(matches!(weighted_lp_norm(&f, 0.5, &w, 1e-10), Err(Error::Usage { .. })));
    }

    #[test]
    fn power_law_function_divergence_is_refused() {
        // f ~ k^1 on R^1 with Omega ~ k^-2: |f|^2 Omega ~ k^0, divergent
        let s = SampledFunction::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0], Some(1.0), "ramp").unwrap();
        let f = RadialFunction::Sampled(s);
        let r = weighted_lp_norm(&f, 2.0, &reg(1.0, 0.0, 1.0, 1).into(), 1e-8);
        assert!(matches!(r, Err(Error::Divergent { .. })), "{r:?}");
        // with beta = 2 the weighted norm converges
        let r = weighted_lp_norm(&f, 2.0, &reg(2.0, 0.0, 1.0, 1).into(), 1e-8);
        assert!(r.is_ok(), "{r:?}");
    }

    #[test]
    fn inner_product_and_distance_consistency() {
        let w: Suppression = reg(1.5, 0.0, 1.0, 2).into();
        let f = RadialFunction::gaussian(1.2, 0.5, 0.7).unwrap();
        let g = RadialFunction::gaussian(-0.4, 1.5, 0.3).unwrap();
        let ff = weighted_inner_product(&f, &f, &w, 1e-12).unwrap();
        let nf = weighted_lp_norm(&f, 2.0, &w, 1e-12).unwrap();
        assert_relative_eq!(ff, nf * nf, max_relative = 1e-9);
        let fg = weighted_inner_product(&f, &g, &w, 1e-12).unwrap();
        let gf = weighted_inner_product(&g, &f, &w, 1e-12).unwrap();
        assert_relative_eq!(fg, gf, max_relative = 1e-12);
        let dfg = weighted_distance(&f, &g, &w, 1e-12).unwrap();
        let dgf = weighted_distance(&g, &f, &w, 1e-12).unwrap();
        assert_relative_eq!(dfg, dgf, max_relative = 1e-12);
        assert_eq!(weighted_distance(&f, &f, &w, 1e-12).unwrap(), 0.0);
        // |f - g|^2 = |f|^2 - 2<f,g> + |g|^2
        let ng = weighted_lp_norm(&g, 2.0, &w, 1e-12).unwrap();
        assert_relative_eq!(dfg * dfg, nf * nf - 2.0 * fg + ng * ng, max_relative = 1e-8);
    }

    #[test]
    fn compact_support_tail_mass_is_zero() {
        let s = SampledFunction::new(vec![0.0, 0.5, 1.0, 2.0], vec![1.0, 0.8, 0.3, 0.0], None, "bump").unwrap();
        let f = RadialFunction::Sampled(s);
        let d = embedding_diagnostics(&f, &reg(1.0, 0.0, 1.0, 1).into(), &[1.0, 2.0, 3.0], 1e-10).unwrap();
        assert_eq!(d.tail_mass[1].1, Some(0.0));
        assert_eq!(d.tail_mass[2].1, Some(0.0));
        assert!(d.tail_mass[0].1.unwrap() > 0.0);
        assert!(d.ratio.unwrap() <= 1.0);
    }

    #[test]
    fn gaussian_tail_masses_match_erfc() {
        let f = RadialFunction::gaussian(1.0, 0.0, 1.0).unwrap();
        let d = embedding_diagnostics(&f, &reg(2.0, 0.0, 1.0, 1).into(), &[2.0, 4.0, 8.0], 1e-10).unwrap();
        let masses: Vec<f64> = d.tail_mass.iter().map(|(_, m)| m.unwrap()).collect();
        for (m, k) in masses.iter().zip([2.0, 4.0, 8.0]) {
            let oracle = PI.sqrt() * statrs::function::erf::erfc(k);
            assert_relative_eq!(*m, oracle, max_relative = 1e-8);
        }
        assert!(masses[0] > 10.0 * masses[1] && masses[1] > 10.0 * masses[2]);
    }

    #[test]
    fn divergent_l2_still_reports_weighted() {
        // f ~ k^-0.25 in d = 1: |f|^2 ~ k^-0.5 is not integrable, but with Omega ~ k^-4 it is
        let s = SampledFunction::new(vec![0.0, 1.0], vec![1.0, 1.0], Some(-0.25), "slow").unwrap();
        let f = RadialFunction::Sampled(s);
        let d = embedding_diagnostics(&f, &reg(2.0, 0.0, 1.0, 1).into(), &[1.0], 1e-8).unwrap();
        assert!(d.norm_l2.is_none() && d.ratio.is_none());
        assert!(matches!(d.l2_failure, Some(Error::Divergent { .. })));
        assert!(d.norm_weighted > 0.0);
        assert_eq!(d.tail_mass, vec![(1.0, None)]);
    }

    #[test]
    fn cutoffs_validated() {
        let f = RadialFunction::gaussian(1.0, 0.0, 1.0).unwrap();
        let w: Suppression = reg(2.0, 0.0, 1.0, 1).into();
        assert!(embedding_diagnostics(&f, &w, &[], 1e-8).is_err());
        assert!(embedding_diagnostics(&f, &w, &[2.0, 1.0], 1e-8).is_err());
        assert!(embedding_diagnostics(&f, &w, &[0.0], 1e-8).is_err());
    }

    #[test]
    fn pchip_is_monotone_and_interpolating() {
        let x = vec![0.0, 0.5, 1.0, 3.0, 4.0];
        let y = vec![1.0, 0.9, 0.2, 0.19, 0.0];
        let s = SampledFunction::new(x.clone(), y.clone(), None, "mono").unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_relative_eq!(s.eval(*xi), *yi, max_relative = 1e-14);
        }
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let v = s.eval(4.0 * i as f64 / 400.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        assert_eq!(s.eval(5.0), 0.0);
    }

    #[test]
    fn pchip_reproduces_lines() {
        let x: Vec<f64> = (0..6).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.3 * v).collect();
        let s = SampledFunction::new(x, y, Some(-2.0), "line").unwrap();
        assert_relative_eq!(s.eval(1.234), 2.0 - 0.3 * 1.234, max_relative = 1e-14);
        // power-law continuation past the last node
        let last = 3.5;
        assert_relative_eq!(s.eval(7.0), (2.0 - 0.3 * last) * 0.25, max_relative = 1e-14);
    }

    #[test]
    fn sampled_function_validation() {
        assert!(SampledFunction::new(vec![0.0], vec![1.0], None, "").is_err());
        assert!(SampledFunction::new(vec![0.0, 0.0], vec![1.0, 1.0], None, "").is_err());
        assert!(SampledFunction::new(vec![-1.0, 0.0], vec![1.0, 1.0], None, "").is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0, f64::NAN], None, "").is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0], None, "").is_err());
    }

    #[test]
    fn sampled_norm_matches_closed_form() {
        // sampled Gaussian on a fine grid vs the closed form
        let x: Vec<f64> = (0..=800).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = x.iter().map(|k| (-0.5 * k * k).exp()).collect();
        let s = RadialFunction::Sampled(SampledFunction::new(x, y, None, "gauss").unwrap());
        let g = RadialFunction::gaussian(1.0, 0.0, 1.0).unwrap();
        let w: Suppression = reg(1.0, 0.0, 1.0, 3).into();
        let a = weighted_lp_norm(&s, 2.0, &w, 1e-12).unwrap();
        let b = weighted_lp_norm(&g, 2.0, &w, 1e-12).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-6);
    }

    #[test]
    fn tail_algebra() {
        use Tail::*;
        assert_eq!(PowerLaw(1.0).sum(PowerLaw(-2.0)), PowerLaw(1.0));
        assert_eq!(Compact(2.0).sum(Rapid), Rapid);
        assert_eq!(Compact(2.0).product(PowerLaw(3.0)), Compact(2.0));
        assert_eq!(PowerLaw(1.0).product(PowerLaw(-3.0)), PowerLaw(-2.0));
        assert_eq!(Rapid.product(PowerLaw(3.0)), Rapid);
        assert_eq!(PowerLaw(-1.0).power(2.0), PowerLaw(-2.0));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn bump() -> impl Strategy<Value = RadialFunction> {
        (-2.0f64..2.0, 0.0f64..3.0, 0.2f64..1.5).prop_map(|(a, c, w)| RadialFunction::gaussian(a, c, w).unwrap())
    }

    fn eta0(lambda: f64, dim: u32) -> Suppression {
        RegulatorParams::new(1.5, 0.0, 2.0, 1.0, lambda, dim).unwrap().into()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn cauchy_schwarz(f in bump(), g in bump(), dim in 1u32..4) {
            let w = eta0(1.0, dim);
            let fg = weighted_inner_product(&f, &g, &w, 1e-12).unwrap();
            let nf = weighted_lp_norm(&f, 2.0, &w, 1e-12).unwrap();
            let ng = weighted_lp_norm(&g, 2.0, &w, 1e-12).unwrap();
            prop_assert!(fg.abs() <= nf * ng * (1.0 + 1e-9) + 1e-14);
        }

        #[test]
        fn norm_monotone_in_lambda(f in bump(), l1 in 0.2f64..3.0, ratio in 1.01f64..4.0, dim in 1u32..3) {
            let n1 = weighted_lp_norm(&f, 2.0, &eta0(l1, dim), 1e-12).unwrap();
            let n2 = weighted_lp_norm(&f, 2.0, &eta0(l1 * ratio, dim), 1e-12).unwrap();
            prop_assert!(n1 <= n2 * (1.0 + 1e-9) + 1e-14);
        }

        #[test]
        fn weighted_below_unweighted(f in bump(), lambda in 0.2f64..5.0) {
            let w = eta0(lambda, 1);
            let nw = weighted_lp_norm(&f, 2.0, &w, 1e-12).unwrap();
            let nu = weighted_lp_norm(&f, 2.0, &Suppression::Unit { dim: 1 }, 1e-12).unwrap();
            prop_assert!(nw <= nu * (1.0 + 1e-9) + 1e-14);
        }

        #[test]
        fn triangle_inequality(f in bump(), g in bump(), h in bump()) {
            let w = eta0(1.0, 2);
            let fg = weighted_distance(&f, &g, &w, 1e-12).unwrap();
            let gh = weighted_distance(&g, &h, &w, 1e-12).unwrap();
            let fh = weighted_distance(&f, &h, &w, 1e-12).unwrap();
            prop_assert!(fh <= (fg + gh) * (1.0 + 1e-8) + 1e-12);
        }

        #[test]
        fn inner_product_bilinear(f in bump(), g in bump(), c in -3.0f64..3.0) {
            let w = eta0(1.0, 1);
            let a = weighted_inner_product(&f.scaled(c), &g, &w, 1e-13).unwrap();
            let b = weighted_inner_product(&f, &g, &w, 1e-13).unwrap();
            prop_assert!((a - c * b).abs() <= 1e-8 * (c * b).abs().max(1e-6));
        }
    }
}
