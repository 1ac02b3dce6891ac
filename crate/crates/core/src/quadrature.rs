//! Adaptive quadrature on finite and semi-infinite intervals, reduced radial
//! integrals over R^d, and the power-counting convergence classifier.
//!
//! The integrator is a globally adaptive 15-point Gauss-Kronrod scheme. A
//! semi-infinite range `[a, inf)` is split at a point `K`: the core `[a, K]`
//! is used as is and the tail is compactified with `k = K + L t / (1 - t)`.
//! Both pieces share one priority queue, so the tail is refined exactly as
//! much as its error estimate demands.

use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use crate::error::{Error, Result};
use crate::regulator::{omega_eval, RegulatorParams};
use crate::special::{gamma, unit_sphere_area};

pub const DEFAULT_ABS_TOL: f64 = 1e-10;
pub const DEFAULT_REL_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_INTERVALS: usize = 10_000;

/// Accuracy target: an estimate is accepted once its error is below
/// `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    /// Purely relative target (with an absolute floor at the smallest normal).
    pub fn relative(rel: f64) -> Self {
        Self {
            abs: f64::MIN_POSITIVE,
            rel,
        }
    }

    pub fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }

    fn check(&self, op: &'static str) -> Result<()> {
        if !(self.abs.is_finite() && self.abs > 0.0 && self.rel.is_finite() && self.rel >= 0.0) {
            return Err(Error::usage(op, format!("tolerance must be positive, got {self:?}")));
        }
        Ok(())
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            abs: self.abs * factor,
            rel: self.rel,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: DEFAULT_ABS_TOL,
            rel: DEFAULT_REL_TOL,
        }
    }
}

/// A bare number is an absolute tolerance with the default relative floor.
impl From<f64> for Tolerance {
    fn from(abs: f64) -> Self {
        Self {
            abs,
            rel: DEFAULT_REL_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub subdivisions: usize,
    pub converged: bool,
    /// Effective target `max(abs, rel |value|)` the estimate was held to.
    pub tolerance: f64,
}

impl QuadratureResult {
    fn scale(mut self, factor: f64) -> Self {
        self.value *= factor;
        self.abs_error_estimate *= factor.abs();
        self.tolerance *= factor.abs();
        self
    }
}

/// Settings for one adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConfig {
    pub tol: Tolerance,
    pub max_intervals: usize,
    /// Core/tail split point for semi-infinite ranges.
    pub split: f64,
    /// Length scale L of the tail map k = split + L t / (1 - t).
    pub tail_scale: f64,
    /// Extra initial subdivision points (ignored outside the range).
    pub breakpoints: Vec<f64>,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            tol: Tolerance::default(),
            max_intervals: DEFAULT_MAX_INTERVALS,
            split: 1.0,
            tail_scale: 1.0,
            breakpoints: Vec::new(),
        }
    }
}

impl QuadConfig {
    pub fn with_tol(tol: impl Into<Tolerance>) -> Self {
        Self {
            tol: tol.into(),
            ..Self::default()
        }
    }

    /// Splits and breakpoints sized to a characteristic momentum `scale`.
    pub fn for_scale(tol: impl Into<Tolerance>, scale: f64) -> Self {
        Self {
            tol: tol.into(),
            split: 4.0 * scale,
            tail_scale: scale,
            breakpoints: [1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0].iter().map(|f| f * scale).collect(),
            ..Self::default()
        }
    }
}

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Rule {
    value: f64,
    error: f64,
}

/// Neumaier-compensated sum, so the final accumulation does not depend on
/// the order segments were refined in beyond rounding noise.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn gauss_kronrod(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> std::result::Result<Rule, f64> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| {
        let v = g(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(x)
        }
    };
    let fc = eval(centre)?;
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(centre - dx)?;
        let f2 = eval(centre + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let h = half.abs();
    let value = res_k * half;
    res_abs *= h;
    res_asc *= h;
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Rule { value, error })
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod over consecutive `points` (at least two,
/// increasing). `locate` maps the integration variable back to momentum for
/// error messages.
fn adaptive(
    op: &'static str,
    g: &dyn Fn(f64) -> f64,
    locate: &dyn Fn(f64) -> f64,
    points: &[f64],
    tol: Tolerance,
    max_intervals: usize,
) -> Result<QuadratureResult> {
    let mut heap = BinaryHeap::new();
    let mut frozen = Vec::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let r = gauss_kronrod(g, w[0], w[1]).map_err(|x| Error::NonFiniteIntegrand { op, k: locate(x) })?;
        total += r.value;
        total_err += r.error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: r.value,
            error: r.error,
        });
    }
    let mut count = heap.len();
    if count == 0 {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            subdivisions: 1,
            converged: true,
            tolerance: tol.target(0.0),
        });
    }
    loop {
        if total_err <= tol.target(total) {
            // re-accumulate to shed drift from the running sums
            let (v, e) = totals(&heap, &frozen);
            total = v;
            total_err = e;
            if total_err <= tol.target(total) {
                break;
            }
        }
        if count >= max_intervals {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // cannot be split further in floating point
            frozen.push(worst);
            continue;
        }
        let left = gauss_kronrod(g, worst.a, mid).map_err(|x| Error::NonFiniteIntegrand { op, k: locate(x) })?;
        let right = gauss_kronrod(g, mid, worst.b).map_err(|x| Error::NonFiniteIntegrand { op, k: locate(x) })?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: left.value,
            error: left.error,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: right.value,
            error: right.error,
        });
        count += 1;
    }
    let (value, err) = totals(&heap, &frozen);
    let target = tol.target(value);
    Ok(QuadratureResult {
        value,
        abs_error_estimate: err,
        subdivisions: count,
        converged: err <= target,
        tolerance: target,
    })
}

fn totals(heap: &BinaryHeap<Segment>, frozen: &[Segment]) -> (f64, f64) {
    let segs = || heap.iter().chain(frozen.iter());
    (
        compensated_sum(segs().map(|s| s.value)),
        compensated_sum(segs().map(|s| s.error)),
    )
}

fn sorted_points(a: f64, b: f64, extra: &[f64], map: impl Fn(f64) -> f64 + Copy) -> Vec<f64> {
    let mut pts: Vec<f64> = extra.iter().copied().filter(|&x| x > a && x < b).map(map).collect();
    pts.push(map(a));
    pts.push(map(b));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Integral of `f` over the finite range `[a, b]`.
pub fn integrate_interval(f: impl Fn(f64) -> f64, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadratureResult> {
    const OP: &str = "integrate_interval";
    cfg.tol.check(OP)?;
    if !(a.is_finite() && b.is_finite() && b >= a) {
        return Err(Error::usage(OP, format!("need finite a <= b, got [{a}, {b}]")));
    }
    let pts = sorted_points(a, b, &cfg.breakpoints, |x| x);
    adaptive(OP, &f, &|x| x, &pts, cfg.tol, cfg.max_intervals)
}

/// Integral of `f` over `[a, inf)`.
pub fn integrate_semi_infinite(f: impl Fn(f64) -> f64, a: f64, cfg: &QuadConfig) -> Result<QuadratureResult> {
    const OP: &str = "integrate_semi_infinite";
    cfg.tol.check(OP)?;
    if !a.is_finite() {
        return Err(Error::usage(OP, format!("lower limit must be finite, got {a}")));
    }
    if !(cfg.tail_scale > 0.0) {
        return Err(Error::usage(OP, "tail scale must be positive"));
    }
    let split = if cfg.split > a { cfg.split } else { a + cfg.tail_scale };
    let core = split - a;
    let len = cfg.tail_scale;
    // s in [0, 1] covers the core, s in [1, 2) the compactified tail
    let to_k = move |s: f64| {
        if s <= 1.0 {
            a + core * s
        } else {
            let t = s - 1.0;
            split + len * t / (1.0 - t)
        }
    };
    let to_s = move |k: f64| {
        if k <= split {
            (k - a) / core
        } else {
            let u = k - split;
            1.0 + u / (len + u)
        }
    };
    let g = |s: f64| {
        let k = to_k(s);
        let v = f(k);
        if v == 0.0 {
            return 0.0;
        }
        if s <= 1.0 {
            v * core
        } else {
            let t = s - 1.0;
            v * len / ((1.0 - t) * (1.0 - t))
        }
    };
    let mut pts = sorted_points(a, split, &cfg.breakpoints, to_s);
    pts.extend(
        cfg.breakpoints
            .iter()
            .filter(|&&x| x > split && x.is_finite())
            .map(|&x| to_s(x)),
    );
    pts.push(2.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    adaptive(OP, &g, &to_k, &pts, cfg.tol, cfg.max_intervals)
}

/// S_{d-1} * integral_0^inf k^{d-1} f(k) dk, the integral over R^d of a
/// radial function.
pub fn integrate_radial(f: impl Fn(f64) -> f64, dim: u32, tol: impl Into<Tolerance>) -> Result<QuadratureResult> {
    integrate_radial_with(f, dim, &QuadConfig::with_tol(tol))
}

pub fn integrate_radial_with(f: impl Fn(f64) -> f64, dim: u32, cfg: &QuadConfig) -> Result<QuadratureResult> {
    const OP: &str = "integrate_radial";
    if dim == 0 {
        return Err(Error::usage(OP, "dim must be at least 1"));
    }
    cfg.tol.check(OP)?;
    let area = unit_sphere_area(dim);
    let power = dim as i32 - 1;
    let inner = QuadConfig {
        tol: cfg.tol.scaled(1.0 / area),
        ..cfg.clone()
    };
    let r = integrate_semi_infinite(|k| radial_measure(k, power) * f(k), 0.0, &inner)?;
    Ok(r.scale(area))
}

/// S_{d-1} * integral_a^b k^{d-1} f(k) dk: the integral over the shell a <= |k| <= b.
pub fn radial_integral_between(
    f: impl Fn(f64) -> f64,
    dim: u32,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<QuadratureResult> {
    const OP: &str = "radial_integral_between";
    if dim == 0 {
        return Err(Error::usage(OP, "dim must be at least 1"));
    }
    if !(a >= 0.0) {
        return Err(Error::usage(OP, format!("shell radius must be non-negative, got {a}")));
    }
    cfg.tol.check(OP)?;
    let area = unit_sphere_area(dim);
    let power = dim as i32 - 1;
    let inner = QuadConfig {
        tol: cfg.tol.scaled(1.0 / area),
        ..cfg.clone()
    };
    let r = integrate_interval(|k| radial_measure(k, power) * f(k), a, b, &inner)?;
    Ok(r.scale(area))
}

/// Integral over the ball |k| <= k_max, with log-spaced initial breakpoints
/// so huge radii are resolved.
pub fn radial_partial_integral(
    f: impl Fn(f64) -> f64,
    dim: u32,
    k_max: f64,
    tol: impl Into<Tolerance>,
) -> Result<QuadratureResult> {
    let mut cfg = QuadConfig::with_tol(tol);
    let mut b = k_max;
    while b > k_max * 1e-6 {
        b *= 0.5;
        cfg.breakpoints.push(b);
    }
    radial_integral_between(f, dim, 0.0, k_max, &cfg)
}

#[inline]
fn radial_measure(k: f64, power: i32) -> f64 {
    if power == 0 {
        1.0
    } else {
        k.powi(power)
    }
}

/// integral_0^inf k^{d-1} exp(-eta k^2) dk = 1/2 eta^{-d/2} Gamma(d/2).
pub fn gamma_moment_oracle(dim: u32, eta: f64) -> Result<f64> {
    const OP: &str = "gamma_moment_oracle";
    if dim == 0 {
        return Err(Error::domain(OP, "dim must be at least 1"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::domain(OP, format!("eta must be positive, got {eta}")));
    }
    let half = dim as f64 / 2.0;
    Ok(0.5 * eta.powf(-half) * gamma(half))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConvergenceStatus {
    ConvergentPowerLaw,
    ConvergentExponential,
    Divergent,
}

impl ConvergenceStatus {
    pub fn is_convergent(self) -> bool {
        !matches!(self, ConvergenceStatus::Divergent)
    }
}

impl fmt::Display for ConvergenceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvergenceStatus::ConvergentPowerLaw => "ConvergentPowerLaw",
            ConvergenceStatus::ConvergentExponential => "ConvergentExponential",
            ConvergenceStatus::Divergent => "Divergent",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    pub status: ConvergenceStatus,
    /// The inequality that decided the status, e.g. `"2β > d + α"`.
    pub deciding_inequality: String,
    /// Signed amount by which the inequality holds (> 0) or fails (<= 0).
    pub margin: f64,
}

impl fmt::Display for ConvergenceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({}, margin {})",
            self.status, self.deciding_inequality, self.margin
        )
    }
}

pub const POWER_LAW_INEQUALITY: &str = "2β > d + α";
pub const DAMPING_INEQUALITY: &str = "η > 0";

/// Convergence of the integral over R^d of Omega(k) f(k) with f ~ k^alpha.
///
/// Any positive eta is taken as exponential damping. Otherwise the power law
/// decides, and the boundary 2 beta = d + alpha (logarithmic) is divergent.
pub fn classify_convergence(dim: u32, alpha_growth: f64, params: &RegulatorParams) -> ConvergenceVerdict {
    if params.eta() > 0.0 {
        return ConvergenceVerdict {
            status: ConvergenceStatus::ConvergentExponential,
            deciding_inequality: DAMPING_INEQUALITY.to_string(),
            margin: params.eta(),
        };
    }
    let margin = 2.0 * params.beta() - (dim as f64 + alpha_growth);
    ConvergenceVerdict {
        status: if margin > 0.0 {
            ConvergenceStatus::ConvergentPowerLaw
        } else {
            ConvergenceStatus::Divergent
        },
        deciding_inequality: POWER_LAW_INEQUALITY.to_string(),
        margin,
    }
}

/// I = integral over R^d of Omega(k) |k|^alpha_growth.
///
/// Divergent inputs are refused before any numerics. Convergent ones are
/// integrated twice with different core/tail splits; the two estimates must
/// agree. A failure of either run, or a gap between them, is reported as a
/// disagreement with the classifier rather than a number.
pub fn regulated_loop_integral(
    alpha_growth: f64,
    params: &RegulatorParams,
    tol: impl Into<Tolerance>,
) -> Result<QuadratureResult> {
    regulated_integral("regulated_loop_integral", params, alpha_growth, tol.into(), |k| {
        let w = omega_eval(k, params);
        if w == 0.0 {
            0.0
        } else {
            w * k.powf(alpha_growth)
        }
    })
}

pub(crate) fn regulated_integral(
    op: &'static str,
    params: &RegulatorParams,
    alpha_growth: f64,
    tol: Tolerance,
    f: impl Fn(f64) -> f64,
) -> Result<QuadratureResult> {
    tol.check(op)?;
    let verdict = classify_convergence(params.dim(), alpha_growth, params);
    if !verdict.status.is_convergent() {
        return Err(Error::Divergent { op, verdict });
    }
    let scale = params.lambda();
    let first = QuadConfig::for_scale(tol, scale);
    let second = QuadConfig {
        split: 16.0 * scale,
        tail_scale: 4.0 * scale,
        ..first.clone()
    };
    let run = |cfg: &QuadConfig| -> Result<QuadratureResult> {
        match integrate_radial_with(&f, params.dim(), cfg) {
            Ok(r) if r.converged => Ok(r),
            Ok(r) => Err(Error::ClassifierDisagreement {
                op,
                verdict: verdict.clone(),
                detail: format!(
                    "error estimate {:e} above tolerance {:e} after {} subdivisions",
                    r.abs_error_estimate, r.tolerance, r.subdivisions
                ),
            }),
            Err(Error::NonFiniteIntegrand { k, .. }) => Err(Error::ClassifierDisagreement {
                op,
                verdict: verdict.clone(),
                detail: format!("integrand overflowed at k = {k:e}"),
            }),
            Err(e) => Err(e),
        }
    };
    let a = run(&first)?;
    let b = run(&second)?;
    let gap = (a.value - b.value).abs();
    let allowed = (10.0 * (a.abs_error_estimate + b.abs_error_estimate)).max(a.tolerance);
    if gap > allowed {
        return Err(Error::ClassifierDisagreement {
            op,
            verdict,
            detail: format!(
                "tail splits disagree: {:e} vs {:e} (gap {gap:e} > {allowed:e})",
                a.value, b.value
            ),
        });
    }
    Ok(a)
}

/// Outcome of doubling the radius of a ball integral until the increments
/// settle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyOutcome {
    pub settled: bool,
    pub doublings: usize,
    pub last_increment: f64,
    pub partial: f64,
}

/// Partial integrals over |k| <= K for K = k0, 2 k0, 4 k0, ... Settles when a
/// shell increment drops below `tol * max(1, |partial|)`.
pub fn cauchy_partial_test(
    f: impl Fn(f64) -> f64,
    dim: u32,
    k0: f64,
    tol: f64,
    max_doublings: usize,
) -> Result<CauchyOutcome> {
    let shell_cfg = QuadConfig::with_tol(Tolerance::new(tol * 1e-3, 1e-10));
    let mut partial = radial_partial_integral(&f, dim, k0, Tolerance::new(tol * 1e-3, 1e-10))?.value;
    let mut k = k0;
    let mut last = f64::INFINITY;
    for i in 1..=max_doublings {
        let inc = radial_integral_between(&f, dim, k, 2.0 * k, &shell_cfg)?.value;
        partial += inc;
        k *= 2.0;
        last = inc.abs();
        if last < tol * partial.abs().max(1.0) {
            return Ok(CauchyOutcome {
                settled: true,
                doublings: i,
                last_increment: last,
                partial,
            });
        }
    }
    Ok(CauchyOutcome {
        settled: false,
        doublings: max_doublings,
        last_increment: last,
        partial,
    })
}
