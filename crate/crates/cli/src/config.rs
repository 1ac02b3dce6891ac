use std::path::Path;

use omega_core::weighted_measure::{RadialFunction, SampledFunction};
use omega_core::{KernelSpec, RegulatorParams, Suppression};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub regulator: RegulatorSection,
    pub eval: EvalSection,
    pub admissibility: AdmissibilitySection,
    pub integral: IntegralSection,
    pub spectrum: SpectrumSection,
    pub flow: FlowSection,
    pub partition: PartitionSection,
    pub norms: NormsSection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegulatorSection {
    pub beta: f64,
    pub eta: f64,
    pub alpha_eps: f64,
    pub k_c: f64,
    pub lambda: f64,
    pub dim: u32,
}

impl Default for RegulatorSection {
    fn default() -> Self {
        Self {
            beta: 1.0,
            eta: 0.0,
            alpha_eps: 2.0,
            k_c: 1.0,
            lambda: 1.0,
            dim: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub momenta: Vec<f64>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            momenta: vec![0.0, 0.5, 1.0, 2.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmissibilitySection {
    pub points: usize,
}

impl Default for AdmissibilitySection {
    fn default() -> Self {
        Self { points: 10_000 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegralSection {
    pub alpha_growth: f64,
    pub tol: f64,
    pub rel_tol: f64,
}

impl Default for IntegralSection {
    fn default() -> Self {
        Self {
            alpha_growth: 0.0,
            tol: 1e-10,
            rel_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// exp(-gamma k^2) in place of Omega.
    Gaussian,
    Regulator,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub mode: KernelMode,
    pub gamma: f64,
    pub alpha_kernel: f64,
    pub n: usize,
    pub k_max: Option<f64>,
    pub tol: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            mode: KernelMode::Gaussian,
            gamma: 1.0,
            alpha_kernel: 0.25,
            n: 128,
            k_max: None,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub k: f64,
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub steps: usize,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            k: 1.0,
            lambda_start: 0.1,
            lambda_end: 10.0,
            steps: 1000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionSection {
    pub uv_cutoff: f64,
    pub tol: f64,
    /// Cutoff-doubling stops once ln_z_density moves by less than this.
    pub stabilization_target: f64,
    pub max_doublings: usize,
}

impl Default for PartitionSection {
    fn default() -> Self {
        Self {
            uv_cutoff: 10.0,
            tol: 1e-10,
            stabilization_target: 1e-6,
            max_doublings: 20,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
    Sampled {
        nodes: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        tail_exponent: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl FunctionSpec {
    pub fn build(&self) -> omega_core::Result<RadialFunction> {
        match self {
            FunctionSpec::Gaussian {
                amplitude,
                center,
                width,
            } => RadialFunction::gaussian(*amplitude, *center, *width),
            FunctionSpec::Sampled {
                nodes,
                values,
                tail_exponent,
            } => Ok(RadialFunction::Sampled(SampledFunction::new(
                nodes.clone(),
                values.clone(),
                *tail_exponent,
                "config",
            )?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Regulator,
    Unit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsSection {
    pub function: FunctionSpec,
    pub p: f64,
    pub cutoffs: Vec<f64>,
    pub weight: WeightKind,
    pub tol: f64,
}

impl Default for NormsSection {
    fn default() -> Self {
        Self {
            function: FunctionSpec::Gaussian {
                amplitude: 1.0,
                center: 0.0,
                width: 1.0,
            },
            p: 2.0,
            cutoffs: vec![2.0, 4.0, 8.0],
            weight: WeightKind::Regulator,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSection {
    /// Random momenta drawn for the spot checks.
    pub samples: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self { samples: 64 }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    pub fn params(&self) -> omega_core::Result<RegulatorParams> {
        let r = &self.regulator;
        RegulatorParams::new(r.beta, r.eta, r.alpha_eps, r.k_c, r.lambda, r.dim)
    }

    pub fn kernel(&self) -> omega_core::Result<KernelSpec> {
        let s = &self.spectrum;
        let weight = match s.mode {
            KernelMode::Gaussian => Suppression::Gaussian { gamma: s.gamma, dim: 1 },
            KernelMode::Regulator => Suppression::Regulator(self.params()?),
        };
        KernelSpec::new(s.alpha_kernel, weight)
    }

    pub fn norm_weight(&self) -> omega_core::Result<Suppression> {
        let params = self.params()?;
        Ok(match self.norms.weight {
            WeightKind::Regulator => params.into(),
            WeightKind::Unit => Suppression::Unit { dim: params.dim() },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c.regulator.beta, 1.0);
        assert_eq!(c.flow.steps, 1000);
        assert!(c.params().is_ok());
    }

    #[test]
    fn unknown_keys_rejected_by_name() {
        for text in [
            "[regulator]\nbetta = 1.0\n",
            "[flow]\nk = 1.0\nspeed = 2\n",
            "[nope]\n",
            "top = 1\n",
        ] {
            let e = ExperimentConfig::parse(text).unwrap_err().to_string();
            assert!(e.contains("unknown"), "{e}");
        }
        let e = ExperimentConfig::parse("[norms.function]\nkind = \"gaussian\"\nwidht = 1.0\n").unwrap_err();
        assert!(e.to_string().contains("widht"), "{e}");
    }

    #[test]
    fn function_specs() {
        let c = ExperimentConfig::parse(
            "[norms.function]\nkind = \"sampled\"\nnodes = [0.0, 1.0, 2.0]\nvalues = [1.0, 0.5, 0.0]\n",
        )
        .unwrap();
        assert!(c.norms.function.build().is_ok());
        let c = ExperimentConfig::parse("[norms.function]\nkind = \"gaussian\"\nwidth = 0.5\n").unwrap();
        match c.norms.function {
            FunctionSpec::Gaussian { amplitude, width, .. } => assert_eq!((amplitude, width), (1.0, 0.5)),
            _ => panic!(),
        }
    }
}
