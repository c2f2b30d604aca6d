//! CDS premium and kth-to-default basket values.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{ordered_interval_prob, ordered_survival, DistContext, DistError, DistOptions};
use crate::filter::{EventHistory, FilterError, FilterOptions, HistoryError};
use crate::model::{CreditModel, IntensityModel, ModelError, ObligorId};
use crate::quad::{integrate, QuadError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("expiry must be positive and finite, got {0}")]
    InvalidExpiry(f64),
    #[error("discount rate must be non-negative and finite, got {0}")]
    InvalidRate(f64),
    #[error("seller, buyer and reference must be distinct obligors")]
    RolesNotDistinct,
    #[error("the CDS needs a three-name book, got {0}")]
    BookSize(usize),
    #[error("order {k} outside 1..={obligors}")]
    InvalidOrder { k: usize, obligors: usize },
    #[error("valuation time {t} outside [0, {expiry}]")]
    ValuationTime { t: f64, expiry: f64 },
    #[error("unknown coefficient {0:?}; expected a, b or c")]
    UnknownCoefficient(String),
    #[error("sweep grid must be non-empty and strictly increasing")]
    InvalidGrid,
    #[error("premium leg is zero")]
    ZeroAnnuity,
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

pub type Result<T> = std::result::Result<T, PricingError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Day,
    #[default]
    Year,
}

/// How the configured discount rate is quoted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateBasis {
    /// Per year, converted to the model time unit (365 days a year).
    #[default]
    Annual,
    /// Already per model time unit.
    PerUnit,
}

pub const DAYS_PER_YEAR: f64 = 365.0;

/// Discount rate per model time unit.
pub fn rate_per_unit(rate: f64, unit: TimeUnit, basis: RateBasis) -> f64 {
    match (basis, unit) {
        (RateBasis::PerUnit, _) | (RateBasis::Annual, TimeUnit::Year) => rate,
        (RateBasis::Annual, TimeUnit::Day) => rate / DAYS_PER_YEAR,
    }
}

/// Which event triggers the protection payment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtectionEvent {
    /// The reference defaults by expiry while seller and buyer survive.
    #[default]
    ReferenceOnly,
    /// Exactly one of the three names defaults by expiry.
    AnySingleDefault,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdsContract {
    rate: f64,
    expiry: f64,
    seller: ObligorId,
    buyer: ObligorId,
    reference: ObligorId,
}

impl CdsContract {
    /// Seller, buyer and reference are obligors 1, 2 and 3.
    pub fn new(rate: f64, expiry: f64) -> Result<Self> {
        Self::with_roles(rate, expiry, 1, 2, 3)
    }

    pub fn with_roles(rate: f64, expiry: f64, seller: ObligorId, buyer: ObligorId, reference: ObligorId) -> Result<Self> {
        check_rate(rate)?;
        if !(expiry > 0.0) || !expiry.is_finite() {
            return Err(PricingError::InvalidExpiry(expiry));
        }
        if seller == buyer || buyer == reference || seller == reference {
            return Err(PricingError::RolesNotDistinct);
        }
        Ok(CdsContract {
            rate,
            expiry,
            seller,
            buyer,
            reference,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn expiry(&self) -> f64 {
        self.expiry
    }

    pub fn roles(&self) -> (ObligorId, ObligorId, ObligorId) {
        (self.seller, self.buyer, self.reference)
    }

    pub fn with_expiry(&self, expiry: f64) -> Result<Self> {
        Self::with_roles(self.rate, expiry, self.seller, self.buyer, self.reference)
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(PricingError::InvalidRate(rate));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PricingOptions {
    pub dist: DistOptions,
    pub filter: FilterOptions,
    pub protection: ProtectionEvent,
}

/// Both legs of the CDS per unit premium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdsLegs {
    /// Discounted probability of the protection payment.
    pub protection: f64,
    /// Discounted expected time before the first default, up to expiry.
    pub annuity: f64,
}

impl CdsLegs {
    pub fn premium(&self) -> Result<f64> {
        if !(self.annuity > 0.0) {
            return Err(PricingError::ZeroAnnuity);
        }
        Ok(self.protection / self.annuity)
    }
}

pub fn cds_legs(contract: &CdsContract, model: &CreditModel, opts: &PricingOptions) -> Result<CdsLegs> {
    if model.obligors() != 3 {
        return Err(PricingError::BookSize(model.obligors()));
    }
    let ctx = DistContext::at_start(model);
    let (r, t) = (contract.rate, contract.expiry);
    let one = ordered_interval_prob(&ctx, 1, t, &opts.dist)?;
    let share = match opts.protection {
        ProtectionEvent::ReferenceOnly => one / 3.0,
        ProtectionEvent::AnySingleDefault => one,
    };
    let protection = (-r * t).exp() * share;

    let mut failure = None;
    let annuity = integrate(
        |s| match ordered_survival(&ctx, 1, s, &opts.dist) {
            Ok(p) => (-r * s).exp() * p,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        t,
        &opts.dist.quad,
    );
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(CdsLegs {
        protection,
        annuity: annuity?.value,
    })
}

/// Premium rate that equates the two legs.
pub fn cds_premium(contract: &CdsContract, model: &CreditModel, opts: &PricingOptions) -> Result<f64> {
    cds_legs(contract, model, opts)?.premium()
}

/// Intensity coefficient varied in a sensitivity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coefficient {
    A,
    B,
    C,
}

impl Coefficient {
    pub fn name(self) -> &'static str {
        match self {
            Coefficient::A => "a",
            Coefficient::B => "b",
            Coefficient::C => "c",
        }
    }

    /// Same family with this coefficient replaced.
    pub fn apply(self, intensity: &IntensityModel, value: f64) -> Result<IntensityModel> {
        let (a, b, c, decay) = match *intensity {
            IntensityModel::LinearContagion { a, b, c } => (a, b, c, false),
            IntensityModel::ExpDecayContagion { a, b, c } => (a, b, c, true),
            IntensityModel::Custom(_) => return Err(DistError::NotSymmetric.into()),
        };
        let (a, b, c) = match self {
            Coefficient::A => (value, b, c),
            Coefficient::B => (a, value, c),
            Coefficient::C => (a, b, value),
        };
        Ok(if decay {
            IntensityModel::exp_decay(a, b, c)?
        } else {
            IntensityModel::linear(a, b, c)?
        })
    }
}

impl FromStr for Coefficient {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Coefficient::A),
            "b" => Ok(Coefficient::B),
            "c" => Ok(Coefficient::C),
            other => Err(PricingError::UnknownCoefficient(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityRow {
    pub value: f64,
    pub premium: f64,
}

/// Premium as one coefficient runs over `grid`, the others held at `model`.
pub fn premium_sensitivity(
    contract: &CdsContract,
    model: &CreditModel,
    coef: Coefficient,
    grid: &[f64],
    opts: &PricingOptions,
) -> Result<Vec<SensitivityRow>> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(PricingError::InvalidGrid);
    }
    grid.par_iter()
        .map(|&v| {
            let m = model.with_intensity(coef.apply(&model.intensity, v)?)?;
            Ok(SensitivityRow {
                value: v,
                premium: cds_premium(contract, &m, opts)?,
            })
        })
        .collect()
}

pub fn write_sensitivity_csv<W: Write>(coef: Coefficient, rows: &[SensitivityRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "coef,value,premium")?;
    for r in rows {
        writeln!(w, "{},{},{}", coef.name(), crate::fmt_g12(r.value), crate::fmt_g12(r.premium))?;
    }
    Ok(())
}

/// Pays 1 at expiry if the `k`th default has happened by then.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasketContract {
    rate: f64,
    expiry: f64,
    k: usize,
}

impl BasketContract {
    pub fn new(rate: f64, expiry: f64, k: usize) -> Result<Self> {
        check_rate(rate)?;
        if !(expiry > 0.0) || !expiry.is_finite() {
            return Err(PricingError::InvalidExpiry(expiry));
        }
        if k == 0 {
            return Err(PricingError::InvalidOrder { k, obligors: 0 });
        }
        Ok(BasketContract { rate, expiry, k })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn expiry(&self) -> f64 {
        self.expiry
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        Self::new(rate, self.expiry, self.k)
    }

    pub fn with_order(&self, k: usize) -> Result<Self> {
        Self::new(self.rate, self.expiry, k)
    }
}

/// Value at the context's time given everything observed up to then.
pub fn basket_value_at(contract: &BasketContract, ctx: &DistContext<'_>, opts: &PricingOptions) -> Result<f64> {
    let k_names = ctx.model.obligors();
    if contract.k > k_names {
        return Err(PricingError::InvalidOrder {
            k: contract.k,
            obligors: k_names,
        });
    }
    let t = ctx.time;
    if !(0.0..=contract.expiry).contains(&t) {
        return Err(PricingError::ValuationTime { t, expiry: contract.expiry });
    }
    let discount = (-contract.rate * (contract.expiry - t)).exp();
    let survive = ordered_survival(ctx, contract.k, contract.expiry, &opts.dist)?;
    Ok(discount * (1.0 - survive))
}

/// Value at `history.horizon()` after filtering the history.
pub fn basket_value(
    contract: &BasketContract,
    model: &CreditModel,
    history: &EventHistory,
    opts: &PricingOptions,
) -> Result<f64> {
    let ctx = DistContext::from_history(model, history, &opts.filter)?;
    basket_value_at(contract, &ctx, opts)
}

/// Values at each of `days`, each seeing the events of `history` up to that day.
pub fn basket_series(
    contract: &BasketContract,
    model: &CreditModel,
    history: &EventHistory,
    days: &[f64],
    opts: &PricingOptions,
) -> Result<Vec<(f64, f64)>> {
    days.par_iter()
        .map(|&d| {
            let seen = history.truncated(d)?;
            Ok((d, basket_value(contract, model, &seen, opts)?))
        })
        .collect()
}

pub fn write_basket_csv<W: Write>(rows: &[(f64, f64)], scenario: &str, mut w: W, header: bool) -> std::io::Result<()> {
    if header {
        writeln!(w, "day,value,scenario")?;
    }
    for &(d, v) in rows {
        writeln!(w, "{},{},{}", crate::fmt_g12(d), crate::fmt_g12(v), scenario)?;
    }
    Ok(())
}
