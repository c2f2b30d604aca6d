//! Default times by total hazard construction.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::hazard::{inverse_hazard, segment_hazard};
use super::paths::{sample_joint_paths_from, ChainPath, ExponentialDraws};
use super::sampler::{resample_x_given_observables, SamplerOptions};
use super::{path_rng, McError};
use crate::filter::Posterior;
use crate::model::{CreditModel, ObligorId, PortfolioState};

/// What happens to the hidden path after each default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XResampling {
    /// Redraw X beyond the default from its law given X at the default and
    /// the whole Y path.
    #[default]
    Conditional,
    /// Keep the path drawn jointly with Y.
    Retain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub resampling: XResampling,
    pub sampler: SamplerOptions,
    /// Stop after this many new defaults.
    pub max_defaults: Option<usize>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            resampling: XResampling::Conditional,
            sampler: SamplerOptions::default(),
            max_defaults: None,
        }
    }
}

/// Where a simulation starts: time, law of X there, defaults so far and the
/// number of Y jumps so far.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStart {
    pub time: f64,
    pub x: Posterior,
    pub portfolio: PortfolioState,
    pub y_jumps: usize,
}

impl SimStart {
    pub fn initial(model: &CreditModel) -> Self {
        SimStart {
            time: 0.0,
            x: Posterior::certain(model.chain.initial_state()),
            portfolio: model.empty_portfolio(),
            y_jumps: 0,
        }
    }
}

/// New defaults on one path, in time order; censored obligors are absent.
pub type DefaultRecord = Vec<(ObligorId, f64)>;

/// One path of the construction, drawing everything from `rng`.
pub fn simulate_path<R: Rng + ?Sized>(
    model: &CreditModel,
    start: &SimStart,
    horizon: f64,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<DefaultRecord, McError> {
    let x0 = usize::from(rng.random::<f64>() >= start.x.p0);
    let (mut xpath, ypath) =
        sample_joint_paths_from(&model.chain, &model.obs, start.time, x0, start.y_jumps, horizon, rng)?;
    let thresholds = ExponentialDraws::draw(model.obligors(), rng);
    let mut remaining: Vec<f64> = thresholds.values().to_vec();
    let mut port = start.portfolio.clone();
    let mut now = start.time;
    let mut out = Vec::new();
    let symmetric = model.intensity.is_symmetric();
    let cap = opts.max_defaults.unwrap_or(usize::MAX);

    while out.len() < cap && port.survivor_count() > 0 {
        let next = if symmetric {
            first_symmetric(model, &port, &xpath, &remaining, now)
        } else {
            first_general(model, &port, &xpath, &remaining, now)
        };
        let Some((who, d)) = next else { break };
        let tau = now + d;
        if tau > horizon {
            break;
        }
        for i in port.survivors().collect::<Vec<_>>() {
            if i != who {
                remaining[i - 1] -= segment_hazard(i, now, tau, &port, &xpath, &model.intensity);
            }
        }
        remaining[who - 1] = 0.0;
        port.record_default(who, tau)?;
        out.push((who, tau));
        now = tau;
        if opts.resampling == XResampling::Conditional && port.survivor_count() > 0 && out.len() < cap {
            let at = Posterior::certain(xpath.state_at(tau));
            let tail = resample_x_given_observables(&ypath, &port, model, &at, tau, horizon, &opts.sampler, rng)?;
            xpath = xpath.splice(tau, &tail)?;
        }
    }
    Ok(out)
}

/// All survivors share one hazard curve: the smallest threshold goes first.
fn first_symmetric(
    model: &CreditModel,
    port: &PortfolioState,
    xpath: &ChainPath,
    remaining: &[f64],
    now: f64,
) -> Option<(ObligorId, f64)> {
    let mut who = None;
    let mut best = f64::INFINITY;
    for i in port.survivors() {
        if remaining[i - 1] < best {
            best = remaining[i - 1];
            who = Some(i);
        }
    }
    let who = who?;
    inverse_hazard(best, who, port, xpath, &model.intensity, now).map(|d| (who, d))
}

fn first_general(
    model: &CreditModel,
    port: &PortfolioState,
    xpath: &ChainPath,
    remaining: &[f64],
    now: f64,
) -> Option<(ObligorId, f64)> {
    let mut best: Option<(ObligorId, f64)> = None;
    for i in port.survivors() {
        if let Some(d) = inverse_hazard(remaining[i - 1], i, port, xpath, &model.intensity, now) {
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((i, d));
            }
        }
    }
    best
}

/// Default times on `[0, horizon]` from the model's initial state, on the
/// stream for path 0 of `seed`.
pub fn simulate_default_times(model: &CreditModel, horizon: f64, seed: u64) -> Result<DefaultRecord, McError> {
    let mut rng: ChaCha8Rng = path_rng(seed, 0);
    simulate_path(model, &SimStart::initial(model), horizon, &SimOptions::default(), &mut rng)
}

/// Runs `paths` independent paths (path `i` on stream `i` of `seed`) and maps
/// each record through `f`; output order follows the path index.
pub fn simulate_map<T, F>(
    model: &CreditModel,
    start: &SimStart,
    horizon: f64,
    paths: usize,
    seed: u64,
    opts: &SimOptions,
    f: F,
) -> Result<Vec<T>, McError>
where
    T: Send,
    F: Fn(&DefaultRecord) -> T + Sync,
{
    if paths == 0 {
        return Err(McError::NoPaths);
    }
    (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            simulate_path(model, start, horizon, opts, &mut rng).map(|r| f(&r))
        })
        .collect()
}

pub fn simulate_batch(
    model: &CreditModel,
    start: &SimStart,
    horizon: f64,
    paths: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<Vec<DefaultRecord>, McError> {
    simulate_map(model, start, horizon, paths, seed, opts, Clone::clone)
}

/// Writes `path_id,obligor,default_time` rows; times with 12 significant digits.
pub fn write_samples_csv<W: Write>(records: &[DefaultRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "path_id,obligor,default_time")?;
    for (path, rec) in records.iter().enumerate() {
        for &(id, t) in rec {
            writeln!(w, "{path},{id},{}", crate::fmt_g12(t))?;
        }
    }
    Ok(())
}
