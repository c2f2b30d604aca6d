//! A quick self-check suite: analytic identities, closed-form reductions,
//! pricing trends and simulator agreement on the reference parameters.
//!
//! Each check reports a measured number against a limit. The report is a
//! pure function of the seed; timings are returned separately.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::chain::{phi_homogeneous, transition_prob, ChainSpec, RateVector};
use crate::dist::{first_default_survival, joint_density, ordered_survival, DensityQuery, DistContext, DistOptions};
use crate::filter::{run_filter, Event, EventHistory, FilterOptions, ObservationSpec, YRateSelector};
use crate::linalg::{expm, Mat2};
use crate::mc::{ks_distance, path_rng, sample_joint_paths_from, simulate_map, SimOptions, SimStart};
use crate::model::{CreditModel, IntensityModel};
use crate::pricing::{
    basket_series, basket_value_at, cds_premium, premium_sensitivity, BasketContract, CdsContract, Coefficient,
    PricingOptions,
};
use crate::quad::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Passes when the measurement is at most the limit.
    AtMost,
    /// Passes when the measurement is strictly above the limit.
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub limit: f64,
    pub bound: Bound,
    pub runtime: Duration,
}

impl Check {
    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.measured <= self.limit,
            Bound::Above => self.measured > self.limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationSettings {
    pub seed: u64,
    /// Paths for each simulation check.
    pub paths: usize,
    /// Multiplies the joint density before it is checked; anything but 1
    /// should make the suite fail.
    pub density_scale: f64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        ValidationSettings {
            seed: 0,
            paths: 20_000,
            density_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    /// `check,measured,limit,result` rows; no timings, so reruns compare equal.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,measured,limit,result\n");
        for c in &self.checks {
            let op = match c.bound {
                Bound::AtMost => "<=",
                Bound::Above => ">",
            };
            out.push_str(&format!(
                "{},{},{}{},{}\n",
                c.name,
                crate::fmt_g12(c.measured),
                op,
                crate::fmt_g12(c.limit),
                if c.passed() { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

type Failure = Box<dyn std::error::Error + Send + Sync>;

fn chain() -> ChainSpec {
    ChainSpec::new(0.1, 0.1, 0).expect("valid rates")
}

fn observation() -> ObservationSpec {
    ObservationSpec::new([0.1, 0.2], [0.2, 0.1], 0).expect("valid rates")
}

fn model(intensity: IntensityModel, k: usize) -> Result<CreditModel, Failure> {
    Ok(CreditModel::new(chain(), observation(), intensity, k)?)
}

pub fn run_validation(settings: &ValidationSettings) -> Result<ValidationReport, Failure> {
    type Job<'a> = (&'static str, Bound, f64, Box<dyn Fn() -> Result<f64, Failure> + 'a>);
    let s = *settings;
    let jobs: Vec<Job<'_>> = vec![
        ("mgf_unit_and_semigroup", Bound::AtMost, 1e-10, Box::new(mgf_identities)),
        ("mgf_vs_occupation_mc_max_z", Bound::AtMost, 4.0, Box::new(move || mgf_vs_simulation(&s))),
        ("frozen_step_error", Bound::AtMost, 1e-2, Box::new(move || frozen_step_error(s.seed))),
        ("filter_uninformative", Bound::AtMost, 1e-6, Box::new(filter_uninformative)),
        ("filter_frozen_chain", Bound::AtMost, 0.0, Box::new(filter_frozen)),
        ("density_mass_k2", Bound::AtMost, 5e-3, Box::new(move || density_mass(s.density_scale))),
        ("ordered_pure_birth", Bound::AtMost, 1e-6, Box::new(ordered_pure_birth)),
        ("cds_closed_form_rel", Bound::AtMost, 1e-3, Box::new(cds_closed_form)),
        ("premium_max_step_ratio", Bound::AtMost, 1.0 - 1e-9, Box::new(premium_trend)),
        ("basket_min_daily_rise", Bound::Above, 0.0, Box::new(basket_rise)),
        ("basket_jump_drop", Bound::Above, 0.0, Box::new(basket_drop)),
        ("basket_linear_minus_decay", Bound::Above, 0.0, Box::new(basket_gap)),
        ("first_default_ks_linear_scaled", Bound::AtMost, 4.0, Box::new(move || first_default_ks(&s, false))),
        ("first_default_ks_decay_scaled", Bound::AtMost, 4.0, Box::new(move || first_default_ks(&s, true))),
    ];
    let mut checks = Vec::with_capacity(jobs.len());
    for (name, bound, limit, job) in jobs {
        let clock = Instant::now();
        let measured = job()?;
        checks.push(Check {
            name,
            measured,
            limit,
            bound,
            runtime: clock.elapsed(),
        });
    }
    Ok(ValidationReport { checks })
}

/// Unit conditional moment at zero tilt and the semigroup law.
fn mgf_identities() -> Result<f64, Failure> {
    let mut worst: f64 = 0.0;
    let u = RateVector::new(-0.2, -0.3);
    for i in 0..100 {
        let theta0 = 0.05 + 0.1 * (i % 5) as f64;
        let theta1 = 0.02 + 0.2 * ((i / 5) % 4) as f64;
        let t = 0.1 + 0.5 * (i / 20) as f64;
        let spec = ChainSpec::new(theta0, theta1, 0)?;
        let phi0 = phi_homogeneous(&spec, RateVector::uniform(0.0), t)?;
        for a in 0..2 {
            for b in 0..2 {
                worst = worst.max((phi0.get(a, b) / transition_prob(&spec, a, b, t)? - 1.0).abs());
            }
        }
        let whole = phi_homogeneous(&spec, u, 1.7 * t)?;
        let split = phi_homogeneous(&spec, u, 0.7 * t)? * phi_homogeneous(&spec, u, t)?;
        worst = worst.max(whole.max_abs_diff(&split));
    }
    Ok(worst)
}

/// Largest standard score between `Phi(u, t)` entries and an occupation-time
/// average over simulated paths.
fn mgf_vs_simulation(s: &ValidationSettings) -> Result<f64, Failure> {
    let spec = chain();
    let silent = ObservationSpec::new([0.0, 0.0], [0.0, 0.0], 0)?;
    let u = RateVector::new(-0.2, -0.3);
    let mut worst: f64 = 0.0;
    for (slot, &t) in [1.0, 2.0, 5.0].iter().enumerate() {
        let draws: Vec<(usize, f64)> = (0..s.paths as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = path_rng(s.seed.wrapping_add(slot as u64), i);
                let (x, _) = sample_joint_paths_from(&spec, &silent, 0.0, 0, 0, t, &mut rng).expect("valid window");
                let occ = x.occupation(0.0, t);
                (x.state_at(t), (u.get(0) * occ[0] + u.get(1) * occ[1]).exp())
            })
            .collect();
        let phi = phi_homogeneous(&spec, u, t)?;
        for j in 0..2 {
            let vals: Vec<f64> = draws.iter().map(|&(x, w)| if x == j { w } else { 0.0 }).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            worst = worst.max((mean - phi.get(0, j)).abs() / (var / n).sqrt());
        }
    }
    Ok(worst)
}

/// One frozen-rate step of length `-ln(0.99)/0.11` against a fine product.
fn frozen_step_error(seed: u64) -> Result<f64, Failure> {
    let spec = chain();
    let bound = 0.11;
    let h = crate::chain::step_size(1e-2, bound)?;
    let mut rng = path_rng(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let amp: [f64; 2] = [rng.random(), rng.random()];
        let freq: [f64; 2] = [rng.random::<f64>() * 20.0, rng.random::<f64>() * 20.0];
        let phase: [f64; 2] = [rng.random::<f64>() * 6.3, rng.random::<f64>() * 6.3];
        let s0 = rng.random::<f64>() * 10.0;
        let u = |t: f64| {
            let f = |k: usize| -bound * (1.0 - amp[k] * (0.5 + 0.5 * (freq[k] * t + phase[k]).sin()));
            RateVector::new(f(0), f(1))
        };
        let frozen = phi_homogeneous(&spec, u(s0), h)?;
        let n = 4000;
        let dt = h / n as f64;
        let mut fine = Mat2::IDENTITY;
        for k in 0..n {
            fine = fine * expm(&spec.tilted_generator(u(s0 + (k as f64 + 0.5) * dt)), dt);
        }
        worst = worst.max(frozen.max_abs_diff(&fine));
    }
    Ok(worst)
}

/// Uninformative observations and state-blind intensities: the posterior is
/// the unconditional marginal.
fn filter_uninformative() -> Result<f64, Failure> {
    let obs = ObservationSpec::new([0.3, 0.3], [0.2, 0.2], 0)?;
    let m = CreditModel::new(chain(), obs, IntensityModel::linear(0.5, 0.0, 0.2)?, 3)?;
    let h = EventHistory::new(
        vec![Event::y_jump(0.7), Event::default(1.3, 2), Event::y_jump(2.2)],
        4.0,
    )?;
    let mut worst: f64 = 0.0;
    for (t, p) in run_filter(&h, &m, &FilterOptions::default())? {
        let marginal = m.chain.marginal(t)?;
        worst = worst.max((p.p0 - marginal[0]).abs());
    }
    Ok(worst)
}

fn filter_frozen() -> Result<f64, Failure> {
    let frozen = ChainSpec::new(0.0, 0.0, 0)?;
    let m = CreditModel::new(frozen, observation(), IntensityModel::linear(1.0, 0.5, 0.1)?, 3)?;
    let h = EventHistory::new(vec![Event::y_jump(0.4), Event::default(0.9, 1), Event::y_jump(1.5)], 2.0)?;
    Ok(run_filter(&h, &m, &FilterOptions::default())?
        .iter()
        .map(|(_, p)| (p.p0 - 1.0).abs().max(p.p1.abs()))
        .fold(0.0, f64::max))
}

/// `|2 * integral of the ordered pair density - 1|` for two reference names.
fn density_mass(scale: f64) -> Result<f64, Failure> {
    let m = model(IntensityModel::linear(1.0, 0.1, 0.1)?, 2)?;
    let ctx = DistContext::at_start(&m);
    let opts = DistOptions::default();
    let q = QuadOptions::default();
    let cap = 30.0;
    let f = |t1: f64, t2: f64| {
        let query = DensityQuery::new(&ctx, &[(1, t1), (2, t2)]).expect("ordered times");
        scale * joint_density(&ctx, &query, &opts).expect("density")
    };
    let total = integrate(|t1| integrate(|t2| f(t1, t2), t1, t1 + cap, &q).map(|r| r.value).unwrap_or(f64::NAN), 0.0, cap, &q)?;
    Ok((2.0 * total.value - 1.0).abs())
}

fn ordered_pure_birth() -> Result<f64, Failure> {
    let mut worst: f64 = 0.0;
    for k in [3, 10] {
        let a = 0.4;
        let m = model(IntensityModel::linear(a, 0.0, 0.3)?, k)?;
        let ctx = DistContext::at_start(&m);
        for s in [0.1, 0.5, 1.0, 2.0] {
            let p = ordered_survival(&ctx, 1, s, &DistOptions::default())?;
            worst = worst.max((p - (-(k as f64) * a * s).exp()).abs());
        }
    }
    Ok(worst)
}

fn cds_closed_form() -> Result<f64, Failure> {
    let (a, r, t) = (1.0, 0.05, 5.0);
    let m = model(IntensityModel::linear(a, 0.0, 0.0)?, 3)?;
    let y = cds_premium(&CdsContract::new(r, t)?, &m, &PricingOptions::default())?;
    let exact =
        (-r * t).exp() * (-2.0 * a * t).exp() * (1.0 - (-a * t).exp()) * (r + 3.0 * a) / (1.0 - (-(r + 3.0 * a) * t).exp());
    Ok((y / exact - 1.0).abs())
}

/// Largest ratio between consecutive premiums across the three sweeps.
fn premium_trend() -> Result<f64, Failure> {
    let m = model(IntensityModel::linear(1.0, 0.1, 0.1)?, 3)?;
    let c = CdsContract::new(0.05, 5.0)?;
    let mut worst: f64 = 0.0;
    for (coef, grid) in [
        (Coefficient::A, [0.5, 1.0, 1.5, 2.0]),
        (Coefficient::B, [0.0, 0.1, 0.5, 1.0]),
        (Coefficient::C, [0.0, 0.1, 0.5, 1.0]),
    ] {
        let rows = premium_sensitivity(&c, &m, coef, &grid, &PricingOptions::default())?;
        for w in rows.windows(2) {
            worst = worst.max(w[1].premium / w[0].premium);
        }
    }
    Ok(worst)
}

fn basket_model(decay: bool) -> Result<CreditModel, Failure> {
    let intensity = if decay {
        IntensityModel::exp_decay(0.001, 0.001, 0.001)?
    } else {
        IntensityModel::linear(0.001, 0.001, 0.001)?
    };
    Ok(CreditModel::new(
        chain(),
        observation().with_selector(YRateSelector::LiteralParity),
        intensity,
        10,
    )?)
}

const BASKET_JUMP: f64 = 21.5;

fn basket_days() -> Vec<f64> {
    (10..=50).map(f64::from).collect()
}

fn basket_histories() -> Result<[EventHistory; 2], Failure> {
    Ok([
        EventHistory::new(vec![], 50.0)?,
        EventHistory::new(vec![Event::y_jump(BASKET_JUMP)], 50.0)?,
    ])
}

/// Smallest day-on-day rise of either scenario, away from the jump.
fn basket_rise() -> Result<f64, Failure> {
    let c = BasketContract::new(0.05, 100.0, 1)?;
    let mut worst = f64::INFINITY;
    for decay in [false, true] {
        let m = basket_model(decay)?;
        for h in basket_histories()? {
            let series = basket_series(&c, &m, &h, &basket_days(), &PricingOptions::default())?;
            for w in series.windows(2) {
                worst = worst.min(w[1].1 - w[0].1);
            }
        }
    }
    Ok(worst)
}

/// Value just before the jump minus value just after, both families.
fn basket_drop() -> Result<f64, Failure> {
    let c = BasketContract::new(0.05, 100.0, 1)?;
    let opts = PricingOptions::default();
    let mut worst = f64::INFINITY;
    for decay in [false, true] {
        let m = basket_model(decay)?;
        let before = EventHistory::new(vec![], BASKET_JUMP)?;
        let after = EventHistory::new(vec![Event::y_jump(BASKET_JUMP)], BASKET_JUMP)?;
        let vb = basket_value_at(&c, &DistContext::from_history(&m, &before, &opts.filter)?, &opts)?;
        let va = basket_value_at(&c, &DistContext::from_history(&m, &after, &opts.filter)?, &opts)?;
        worst = worst.min(vb - va);
    }
    Ok(worst)
}

/// Smallest gap between the linear and decaying series.
fn basket_gap() -> Result<f64, Failure> {
    let c = BasketContract::new(0.05, 100.0, 1)?;
    let opts = PricingOptions::default();
    let mut worst = f64::INFINITY;
    for h in basket_histories()? {
        let lin = basket_series(&c, &basket_model(false)?, &h, &basket_days(), &opts)?;
        let dec = basket_series(&c, &basket_model(true)?, &h, &basket_days(), &opts)?;
        for (l, d) in lin.iter().zip(&dec) {
            worst = worst.min(l.1 - d.1);
        }
    }
    Ok(worst)
}

/// KS distance of simulated first defaults times `sqrt(n)`.
fn first_default_ks(s: &ValidationSettings, decay: bool) -> Result<f64, Failure> {
    let (m, horizon) = if decay {
        (basket_model(true)?, 100.0)
    } else {
        (model(IntensityModel::linear(1.0, 0.1, 0.1)?, 3)?, 5.0)
    };
    let opts = SimOptions {
        max_defaults: Some(1),
        ..Default::default()
    };
    let firsts = simulate_map(&m, &SimStart::initial(&m), horizon, s.paths, s.seed, &opts, |r| r.first().map(|d| d.1))?;
    let mut times: Vec<f64> = firsts.iter().flatten().copied().collect();
    times.sort_by(f64::total_cmp);
    let ctx = DistContext::at_start(&m);
    let mut grid = times.clone();
    grid.push(horizon);
    let surv = first_default_survival(&ctx, &grid, &DistOptions::default())?;
    let cdf: Vec<f64> = surv.iter().map(|p| 1.0 - p).collect();
    let d = ks_distance(&times, &cdf[..times.len()], s.paths, cdf[times.len()]);
    Ok(d * (s.paths as f64).sqrt())
}
