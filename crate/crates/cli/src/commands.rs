use omega_core::operators::{self, default_k_max};
use omega_core::quadrature::{classify_convergence, regulated_loop_integral};
use omega_core::regulator::{
    check_admissibility, classify_regime, default_admissibility_grid, epsilon_eval, log_grid, omega_eval,
    omega_eval_plus_variant, omega_uv_asymptote,
};
use omega_core::rg_flow::{self, derivative_discrepancy, log_partition_for};
use omega_core::weighted_measure::{embedding_diagnostics, total_mass, weighted_lp_norm};
use omega_core::{Error, RegulatorParams, Tolerance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::output::{to_json, Cell, Output};
use crate::{CliError, Command};

pub fn dispatch(command: Command, cfg: &ExperimentConfig, seed: u64) -> Result<Output, CliError> {
    match command {
        Command::Eval => eval(cfg),
        Command::Admissibility => admissibility(cfg),
        Command::Integrate => integrate(cfg),
        Command::Mass => mass(cfg),
        Command::Norm => norm(cfg),
        Command::Hsnorm => hsnorm(cfg),
        Command::Spectrum => spectrum(cfg),
        Command::Gap => gap(cfg),
        Command::Flow => flow(cfg),
        Command::Ricci => ricci(cfg),
        Command::Partition => partition(cfg),
        Command::Report => report(cfg, seed),
    }
}

fn integral_tol(cfg: &ExperimentConfig) -> Tolerance {
    Tolerance::new(cfg.integral.tol, cfg.integral.rel_tol)
}

fn eval(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let p = cfg.params()?;
    if cfg.eval.momenta.is_empty() {
        return Err(CliError::Config("eval.momenta is empty".into()));
    }
    let mut rows = Vec::new();
    for &k in &cfg.eval.momenta {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(CliError::Config(format!("eval.momenta must be non-negative, got {k}")));
        }
        rows.push(json!({
            "k": k,
            "omega": omega_eval(k, &p),
            "epsilon": epsilon_eval(k * k, &p)?,
            "uv_asymptote": omega_uv_asymptote(k, &p).ok(),
            "regime": classify_regime(k, &p).to_string(),
        }));
    }
    let mut out = Output::new(
        "eval",
        &[
            ("k", "k"),
            ("omega", "Ω"),
            ("epsilon", "ε"),
            ("uv_asymptote", "UV asymptote"),
            ("regime", "regime"),
        ],
        json!({ "params": p, "rows": rows }),
    )?;
    for &k in &cfg.eval.momenta {
        out = out.row(vec![
            k.into(),
            omega_eval(k, &p).into(),
            epsilon_eval(k * k, &p)?.into(),
            omega_uv_asymptote(k, &p).ok().into(),
            classify_regime(k, &p).to_string().into(),
        ]);
    }
    Ok(out)
}

fn admissibility(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let p = cfg.params()?;
    if cfg.admissibility.points < 2 {
        return Err(CliError::Config("admissibility.points must be at least 2".into()));
    }
    let grid = default_admissibility_grid(&p, cfg.admissibility.points);
    let rep = check_admissibility(&p, &grid)?;
    Ok(Output::new(
        "admissibility",
        &[
            ("holds", "holds"),
            ("worst_k", "worst k"),
            ("margin", "margin"),
            ("points", "points"),
        ],
        json!({ "params": p, "report": rep, "points": grid.len() }),
    )?
    .row(vec![
        rep.holds.into(),
        rep.worst_k.into(),
        rep.margin.into(),
        grid.len().into(),
    ]))
}

const INTEGRAL_COLUMNS: &[(&str, &str)] = &[
    ("status", "status"),
    ("deciding_inequality", "deciding inequality"),
    ("margin", "margin"),
    ("value", "value"),
    ("abs_error", "error estimate"),
    ("subdivisions", "subdivisions"),
];

fn integrate(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let p = cfg.params()?;
    let alpha = cfg.integral.alpha_growth;
    let verdict = classify_convergence(p.dim(), alpha, &p);
    let r = regulated_loop_integral(alpha, &p, integral_tol(cfg))?;
    Ok(Output::new(
        "integrate",
        INTEGRAL_COLUMNS,
        json!({ "params": p, "alpha_growth": alpha, "verdict": verdict, "result": r }),
    )?
    .row(vec![
        verdict.status.to_string().into(),
        verdict.deciding_inequality.clone().into(),
        verdict.margin.into(),
        r.value.into(),
        r.abs_error_estimate.into(),
        r.subdivisions.into(),
    ]))
}

fn mass(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let p = cfg.params()?;
    let verdict = classify_convergence(p.dim(), 0.0, &p);
    let r = total_mass(&p, integral_tol(cfg))?;
    Ok(Output::new(
        "mass",
        INTEGRAL_COLUMNS,
        json!({ "params": p, "verdict": verdict, "result": r }),
    )?
    .row(vec![
        verdict.status.to_string().into(),
        verdict.deciding_inequality.clone().into(),
        verdict.margin.into(),
        r.value.into(),
        r.abs_error_estimate.into(),
        r.subdivisions.into(),
    ]))
}

fn norm(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let n = &cfg.norms;
    let f = n.function.build()?;
    let w = cfg.norm_weight()?;
    let lp = weighted_lp_norm(&f, n.p, &w, n.tol)?;
    let d = embedding_diagnostics(&f, &w, &n.cutoffs, n.tol)?;
    let tails: Vec<Value> = d
        .tail_mass
        .iter()
        .map(|(k, m)| json!({ "cutoff": k, "mass": m }))
        .collect();
    let mut out = Output::new(
        "norm",
        &[("quantity", "quantity"), ("cutoff", "cutoff"), ("value", "value")],
        json!({
            "weight": w,
            "p": n.p,
            "lp_norm": lp,
            "norm_weighted": d.norm_weighted,
            "norm_l2": d.norm_l2,
            "ratio": d.ratio,
            "tail_mass": tails,
            "l2_failure": d.l2_failure.as_ref().map(|e| e.to_string()),
        }),
    )?
    .row(vec!["lp_norm".into(), Cell::Empty, lp.into()])
    .row(vec!["norm_weighted".into(), Cell::Empty, d.norm_weighted.into()])
    .row(vec!["norm_l2".into(), Cell::Empty, d.norm_l2.into()])
    .row(vec!["ratio".into(), Cell::Empty, d.ratio.into()]);
    for (k, m) in &d.tail_mass {
        out = out.row(vec!["tail_mass".into(), (*k).into(), (*m).into()]);
    }
    if let Some(e) = &d.l2_failure {
        out = out.note(format!("unweighted norm: {e}"));
    }
    Ok(out)
}

fn hsnorm(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let kernel = cfg.kernel()?;
    let s = &cfg.spectrum;
    let r = operators::hs_norm_direct(&kernel, s.tol)?;
    let k_max = match s.k_max {
        Some(k) => k,
        None => default_k_max(&kernel.weight)?,
    };
    let op = operators::nystrom_discretize(&kernel, s.n, k_max)?;
    let nystrom = op.hs_norm_squared_estimate();
    Ok(Output::new(
        "hsnorm",
        &[
            ("hs_norm_squared", "‖K‖²_HS"),
            ("hs_norm", "‖K‖_HS"),
            ("abs_error", "error estimate"),
            ("nystrom_n", "Nyström n"),
            ("nystrom_hs_norm_squared", "Nyström ‖K‖²_HS"),
        ],
        json!({ "kernel": kernel, "result": r, "nystrom": { "n": s.n, "k_max": k_max, "hs_norm_squared": nystrom } }),
    )?
    .row(vec![
        r.value.into(),
        r.value.sqrt().into(),
        r.abs_error_estimate.into(),
        s.n.into(),
        nystrom.into(),
    ]))
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let kernel = cfg.kernel()?;
    let s = &cfg.spectrum;
    let k_max = match s.k_max {
        Some(k) => k,
        None => default_k_max(&kernel.weight)?,
    };
    let op = operators::nystrom_discretize(&kernel, s.n, k_max)?;
    let rep = operators::eigen_spectrum(&op)?;
    let mut out = Output::new(
        "spectrum",
        &[("index", "index"), ("eigenvalue", "eigenvalue")],
        json!({
            "kernel": kernel,
            "n": s.n,
            "k_max": k_max,
            "diagonal_rule": op.diagonal_rule,
            "trace": op.trace(),
            "report": rep,
        }),
    )?;
    for (i, v) in rep.eigenvalues.iter().enumerate() {
        out = out.row(vec![i.into(), (*v).into()]);
    }
    Ok(out
        .note(format!("trace          = {:.6}", op.trace()))
        .note(format!("Σ|λ|           = {:.6}", rep.trace_norm_estimate))
        .note(format!("(Σλ²)^(1/2)    = {:.6}", rep.hs_norm_estimate)))
}

fn gap(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let g = operators::spectral_gap(cfg.spectrum.gamma)?;
    Ok(Output::new(
        "gap",
        &[
            ("gamma", "γ"),
            ("k_star", "k*"),
            ("lambda_max", "λ_max"),
            ("k_star_deviation", "k* deviation"),
            ("lambda_max_deviation", "λ_max deviation"),
        ],
        g,
    )?
    .row(vec![
        g.gamma.into(),
        g.k_star.into(),
        g.lambda_max.into(),
        g.k_star_deviation.into(),
        g.lambda_max_deviation.into(),
    ]))
}

fn flow(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let p = cfg.params()?;
    let f = &cfg.flow;
    let t = rg_flow::flow_trajectory(f.k, &p, f.lambda_start, f.lambda_end, f.steps)?;
    let mut out = Output::new(
        "flow",
        &[
            ("lambda", "Λ"),
            ("omega", "Ω"),
            ("dOmega_dlogLambda", "Λ dΩ/dΛ"),
            ("ricci_proxy", "Λ dR/dΛ"),
        ],
        &t,
    )?;
    for s in &t.samples {
        out = out.row(vec![
            s.lambda.into(),
            s.omega.into(),
            s.domega_dlog_lambda.into(),
            s.ricci_proxy.into(),
        ]);
    }
    Ok(out
        .note(format!("∫ dΩ          = {:.12e}", t.integrated_change))
        .note(format!("Ω(end)-Ω(start) = {:.12e}", t.endpoint_change))
        .note(format!("consistency   = {:.3e}", t.consistency_error)))
}

fn ricci(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let p = cfg.params()?;
    let k = cfg.flow.k;
    let r = rg_flow::ricci_flow_eval(k, &p)?;
    Ok(Output::new(
        "ricci",
        &[("k", "k"), ("lambda", "Λ"), ("beta", "β"), ("ricci_proxy", "Λ dR/dΛ")],
        json!({ "k": k, "params": p, "ricci_proxy": r }),
    )?
    .row(vec![k.into(), p.lambda().into(), p.beta().into(), r.into()]))
}

fn partition(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let p = cfg.params()?;
    let s = &cfg.partition;
    let r = rg_flow::log_partition(&p, s.uv_cutoff, s.tol)?;
    let scan = rg_flow::log_partition_cutoff_scan(&p, s.stabilization_target, s.max_doublings, s.tol)?;
    let (last_cutoff, _) = *scan.history.last().expect("scan has at least one entry");
    let at_zero = rg_flow::log_partition_integrand(0.0, &p);
    Ok(Output::new(
        "partition",
        &[
            ("uv_cutoff", "UV cutoff"),
            ("ln_z", "ln Z"),
            ("ln_z_density", "ln Z density"),
            ("integrand_min_argument", "min(1 - Ω)"),
            ("abs_error", "error estimate"),
            ("integrand_at_zero", "integrand at k=0"),
            ("stabilized", "stabilized"),
            ("stabilization_cutoff", "stabilization cutoff"),
            ("last_change", "last change"),
        ],
        json!({ "params": p, "result": r, "integrand_at_zero": at_zero, "cutoff_scan": scan }),
    )?
    .row(vec![
        r.uv_cutoff.into(),
        r.ln_z.into(),
        r.ln_z_density.into(),
        r.integrand_min_argument.into(),
        r.abs_error_estimate.into(),
        at_zero.into(),
        scan.settled.into(),
        last_cutoff.into(),
        scan.last_change.into(),
    ]))
}

fn outcome<T: Serialize>(r: omega_core::Result<T>) -> Result<Value, CliError> {
    match r {
        Ok(v) => to_json(&v),
        Err(e) => {
            let kind = if e.is_usage() {
                "usage"
            } else if e.is_refusal() {
                "refused"
            } else {
                "numerical"
            };
            Ok(json!({ "error": kind, "message": e.to_string(), "verdict": e.verdict() }))
        }
    }
}

fn report(cfg: &ExperimentConfig, seed: u64) -> Result<Output, CliError> {
    let p = cfg.params()?;
    let lambda = p.lambda();
    let tol = integral_tol(cfg);

    let samples: Vec<Value> = [0.0, 0.1, 1.0, 10.0, 100.0]
        .iter()
        .map(|r| {
            let k = r * lambda;
            json!({ "k": k, "omega": omega_eval(k, &p), "regime": classify_regime(k, &p).to_string() })
        })
        .collect();
    let admissibility = check_admissibility(&p, &default_admissibility_grid(&p, cfg.admissibility.points.max(2)))?;
    let loops = [0.0, 1.0, 2.0]
        .iter()
        .map(|&a| {
            Ok(json!({
                "alpha_growth": a,
                "verdict": classify_convergence(p.dim(), a, &p),
                "outcome": outcome(regulated_loop_integral(a, &p, tol))?,
            }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let flow = rg_flow::flow_trajectory(cfg.flow.k, &p, cfg.flow.lambda_start, cfg.flow.lambda_end, cfg.flow.steps)
        .map(|t| json!({ "integrated_change": t.integrated_change, "endpoint_change": t.endpoint_change, "consistency_error": t.consistency_error }));
    let hs = cfg
        .kernel()
        .and_then(|k| operators::hs_norm_direct(&k, cfg.spectrum.tol));

    let battery = json!({
        "omega_samples": samples,
        "admissibility": admissibility,
        "loop_integrals": loops,
        "total_mass": outcome(total_mass(&p, tol))?,
        "partition": outcome(rg_flow::log_partition(&p, cfg.partition.uv_cutoff, cfg.partition.tol))?,
        "flow": outcome(flow)?,
        "spectral_gap": outcome(operators::spectral_gap(cfg.spectrum.gamma))?,
        "hs_norm_squared": outcome(hs)?,
    });

    let doc = json!({
        "params": p,
        "seed": seed,
        "battery": battery,
        "findings": findings(&p, cfg)?,
        "spot_checks": spot_checks(&p, seed, cfg.report.samples)?,
    });
    Output::new("report", &[], doc)
}

/// Places where the usual closed forms for this regulator disagree with
/// direct computation.
fn findings(p: &RegulatorParams, cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let damped = p.with_eta(p.eta().max(0.1))?;
    let cutoff = 10.0 * p.lambda();
    let plus = log_partition_for(
        |k| omega_eval_plus_variant(k, &damped),
        &damped,
        cutoff,
        cfg.partition.tol,
    );
    let plus_sign = match &plus {
        Err(Error::IllDefinedGaussian { k, one_minus_omega, .. }) => {
            json!({ "eta": damped.eta(), "refused": true, "k": k, "one_minus_omega": one_minus_omega })
        }
        other => json!({ "eta": damped.eta(), "refused": false, "outcome": outcome(other.clone())? }),
    };

    let canonical = RegulatorParams::new(1.0, 0.0, 2.0, 1.0, 1.0, 1)?;
    let at_cutoff = derivative_discrepancy(p.lambda(), p);
    let worst = log_grid(1e-2, 1e2, 41)
        .into_iter()
        .map(|r| derivative_discrepancy(r * p.lambda(), p))
        .max_by(|a, b| a.difference.abs().total_cmp(&b.difference.abs()))
        .expect("grid is non-empty");

    let mut ricci_count = 0usize;
    let mut ricci_negative = true;
    for k in log_grid(1e-2, 1e2, 21) {
        for l in [0.1, 1.0, 10.0] {
            let v = rg_flow::ricci_flow_eval(k, &p.with_lambda(l)?)?;
            ricci_negative &= v < 0.0;
            ricci_count += 1;
        }
    }

    // with the minus sign the damping term is subtracted, so eta > 0 leaves
    // the power-law tail in place
    let boundary = 2.0 * damped.beta() - damped.dim() as f64;
    let tail: Vec<Value> = [1e2, 1e3]
        .iter()
        .map(|r| {
            let k = r * damped.lambda();
            Ok(json!({ "k": k, "omega_over_power_law": omega_eval(k, &damped) / omega_uv_asymptote(k, &damped)? }))
        })
        .collect::<Result<_, CliError>>()?;

    let kernel_gate: Vec<Value> = [0.25, 0.75]
        .iter()
        .map(|&a| {
            let spec = omega_core::KernelSpec::new(a, omega_core::Suppression::Gaussian { gamma: 1.0, dim: 1 })?;
            Ok(json!({ "alpha_kernel": a, "verdict": spec.hs_verdict() }))
        })
        .collect::<Result<_, CliError>>()?;

    Ok(json!({
        "plus_sign_partition": plus_sign,
        "derivative_mismatch": {
            "canonical": derivative_discrepancy(1.0, &canonical),
            "at_k_equals_lambda": at_cutoff,
            "largest_on_grid": worst,
        },
        "ricci_sign": { "all_negative": ricci_negative, "samples": ricci_count },
        "damping_tail": {
            "eta": damped.eta(),
            "ratios": tail,
            "loop_integral_at_power_law_boundary": {
                "alpha_growth": boundary,
                "verdict": classify_convergence(damped.dim(), boundary, &damped),
                "outcome": outcome(regulated_loop_integral(boundary, &damped, integral_tol(cfg)))?,
            },
        },
        "hs_kernel_gate": kernel_gate,
    }))
}

fn spot_checks(p: &RegulatorParams, seed: u64, n: usize) -> Result<Value, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_fd: f64 = 0.0;
    let mut worst_fd_k = 0.0;
    let mut min_margin = f64::INFINITY;
    let mut out_of_range = 0usize;
    for _ in 0..n {
        let k = p.lambda() * 10f64.powf(rng.random_range(-3.0..3.0));
        let a = rg_flow::domega_dlambda_analytic(k, p);
        let fd = rg_flow::domega_dlambda_finite_difference(k, p, 1e-5)?;
        let err = if a == 0.0 { fd.abs() } else { (a - fd).abs() / a.abs() };
        if err > worst_fd {
            worst_fd = err;
            worst_fd_k = k;
        }
        min_margin = min_margin.min(omega_core::regulator::admissibility_margin(k, p));
        let w = omega_eval(k, p);
        if !(w > 0.0 && w <= 1.0) {
            out_of_range += 1;
        }
    }
    Ok(json!({
        "samples": n,
        "derivative_fd_worst_relative_error": worst_fd,
        "derivative_fd_worst_k": worst_fd_k,
        "min_admissibility_margin": if n > 0 { Some(min_margin) } else { None },
        "omega_outside_unit_interval": out_of_range,
    }))
}
