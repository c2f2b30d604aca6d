//! TOML run configuration.
//!
//! Every key has a default, so an empty file is a valid configuration: the
//! hidden and observation chains of the reference setup, the linear
//! intensity `1 + 0.1 x + 0.1 n` on three names, and a five-year CDS.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::chain::ChainSpec;
use crate::dist::DistOptions;
use crate::filter::{FilterOptions, MgfMode, ObservationSpec, YRateSelector};
use crate::mc::{SamplerOptions, SimOptions, XResampling};
use crate::model::{CreditModel, IntensityModel};
use crate::pricing::{rate_per_unit, PricingOptions, ProtectionEvent, RateBasis, TimeUnit};
use crate::quad::QuadOptions;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub chain: ChainSection,
    pub observation: ObservationSection,
    pub intensity: IntensitySection,
    pub portfolio: PortfolioSection,
    pub pricing: PricingSection,
    pub numerics: NumericsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub theta0: f64,
    pub theta1: f64,
    pub initial_state: usize,
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection {
            theta0: 0.1,
            theta1: 0.1,
            initial_state: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorName {
    #[default]
    Occupied,
    LiteralParity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationSection {
    pub eta0_x0: f64,
    pub eta0_x1: f64,
    pub eta1_x0: f64,
    pub eta1_x1: f64,
    pub y_initial: usize,
    /// Which rate table applies after `n` jumps.
    pub selector: SelectorName,
}

impl Default for ObservationSection {
    fn default() -> Self {
        ObservationSection {
            eta0_x0: 0.1,
            eta0_x1: 0.2,
            eta1_x0: 0.2,
            eta1_x1: 0.1,
            y_initial: 0,
            selector: SelectorName::Occupied,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Linear,
    ExpDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntensitySection {
    pub variant: Variant,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for IntensitySection {
    fn default() -> Self {
        IntensitySection {
            variant: Variant::Linear,
            a: 1.0,
            b: 0.1,
            c: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortfolioSection {
    #[serde(rename = "K")]
    pub obligors: usize,
}

impl Default for PortfolioSection {
    fn default() -> Self {
        PortfolioSection { obligors: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PricingSection {
    /// Discount rate, quoted per `rate_basis`.
    pub r: f64,
    /// Expiry in model time units.
    #[serde(rename = "T")]
    pub expiry: f64,
    /// Valuation time; the basket series starts here.
    pub t: f64,
    /// Order of the basket trigger.
    pub k: usize,
    pub time_unit: TimeUnit,
    pub rate_basis: RateBasis,
    pub protection: ProtectionEvent,
    /// Last day of the basket value series.
    pub series_end: f64,
    pub series_step: f64,
}

impl Default for PricingSection {
    fn default() -> Self {
        PricingSection {
            r: 0.05,
            expiry: 5.0,
            t: 0.0,
            k: 1,
            time_unit: TimeUnit::Year,
            rate_basis: RateBasis::Annual,
            protection: ProtectionEvent::ReferenceOnly,
            series_end: 5.0,
            series_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MgfModeName {
    #[default]
    Exact,
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResamplingName {
    #[default]
    Conditional,
    Retain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsSection {
    /// Relative error target per filter segment.
    pub zeta: f64,
    /// Fixed frozen-step error budget for the filter; chosen from `zeta` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Frozen-step budget for distributions and pricing.
    pub dist_epsilon: f64,
    pub mgf_mode: MgfModeName,
    pub quad_rel_tol: f64,
    pub quad_abs_tol: f64,
    pub quad_budget: usize,
    pub mc_paths: usize,
    pub seed: u64,
    pub resampling: ResamplingName,
    /// Grid budget of the hidden-path resampler.
    pub sampler_epsilon: f64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        NumericsSection {
            zeta: 1e-3,
            epsilon: None,
            dist_epsilon: 1e-4,
            mgf_mode: MgfModeName::Exact,
            quad_rel_tol: 1e-6,
            quad_abs_tol: 1e-12,
            quad_budget: 1_000_000,
            mc_paths: 100_000,
            seed: 0,
            resampling: ResamplingName::Conditional,
            sampler_epsilon: 1e-3,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn check(&self) -> Result<(), CliError> {
        let rates = [
            ("chain.theta0", self.chain.theta0),
            ("chain.theta1", self.chain.theta1),
            ("observation.eta0_x0", self.observation.eta0_x0),
            ("observation.eta0_x1", self.observation.eta0_x1),
            ("observation.eta1_x0", self.observation.eta1_x0),
            ("observation.eta1_x1", self.observation.eta1_x1),
            ("pricing.r", self.pricing.r),
            ("pricing.t", self.pricing.t),
        ];
        for (name, v) in rates {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("{name} must be a non-negative number, got {v}")));
            }
        }
        let n = &self.numerics;
        let positive = [
            ("numerics.zeta", n.zeta),
            ("numerics.dist_epsilon", n.dist_epsilon),
            ("numerics.quad_rel_tol", n.quad_rel_tol),
            ("numerics.sampler_epsilon", n.sampler_epsilon),
            ("pricing.series_step", self.pricing.series_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(e) = n.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(CliError::Config(format!("numerics.epsilon must lie in (0, 1), got {e}")));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<CreditModel, CliError> {
        let config = |e: &dyn std::fmt::Display| CliError::Config(e.to_string());
        let chain = ChainSpec::new(self.chain.theta0, self.chain.theta1, self.chain.initial_state).map_err(|e| config(&e))?;
        let o = &self.observation;
        let selector = match o.selector {
            SelectorName::Occupied => YRateSelector::Occupied,
            SelectorName::LiteralParity => YRateSelector::LiteralParity,
        };
        let obs = ObservationSpec::new([o.eta0_x0, o.eta0_x1], [o.eta1_x0, o.eta1_x1], o.y_initial)
            .map_err(|e| config(&e))?
            .with_selector(selector);
        let i = &self.intensity;
        let intensity = match i.variant {
            Variant::Linear => IntensityModel::linear(i.a, i.b, i.c),
            Variant::ExpDecay => IntensityModel::exp_decay(i.a, i.b, i.c),
        }
        .map_err(|e| config(&e))?;
        CreditModel::new(chain, obs, intensity, self.portfolio.obligors).map_err(|e| config(&e))
    }

    pub fn filter_options(&self) -> FilterOptions {
        FilterOptions {
            mode: match self.numerics.mgf_mode {
                MgfModeName::Exact => MgfMode::Exact,
                MgfModeName::PaperLiteral => MgfMode::PaperLiteral,
            },
            epsilon: self.numerics.epsilon,
            zeta: self.numerics.zeta,
        }
    }

    pub fn dist_options(&self) -> DistOptions {
        let n = &self.numerics;
        DistOptions {
            epsilon: n.dist_epsilon,
            quad: QuadOptions {
                abs_tol: n.quad_abs_tol,
                rel_tol: n.quad_rel_tol,
                budget: n.quad_budget,
            },
            mc_paths: n.mc_paths,
            seed: n.seed,
        }
    }

    pub fn pricing_options(&self) -> PricingOptions {
        PricingOptions {
            dist: self.dist_options(),
            filter: self.filter_options(),
            protection: self.pricing.protection,
        }
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            resampling: match self.numerics.resampling {
                ResamplingName::Conditional => XResampling::Conditional,
                ResamplingName::Retain => XResampling::Retain,
            },
            sampler: SamplerOptions {
                epsilon: self.numerics.sampler_epsilon,
                survival_evidence: false,
            },
            max_defaults: None,
        }
    }

    /// Discount rate per model time unit.
    pub fn discount_rate(&self) -> f64 {
        rate_per_unit(self.pricing.r, self.pricing.time_unit, self.pricing.rate_basis)
    }
}
