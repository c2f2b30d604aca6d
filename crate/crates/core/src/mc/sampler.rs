//! Conditional resampling of the hidden path given the Y path.
//!
//! Forward filtering runs on a uniform grid; each grid step carries the
//! exact 2x2 likelihood of the Y record inside it (no-jump exposure, and the
//! jump rate at any jump instant). Backward sampling then draws grid states,
//! and a switch between two grid points is placed uniformly inside the step.

use rand::Rng;

use super::paths::{ChainPath, YPath};
use super::McError;
use crate::chain::{step_size, RateVector};
use crate::filter::Posterior;
use crate::linalg::{expm, Mat2};
use crate::model::{CreditModel, PortfolioState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerOptions {
    /// Error budget that fixes the grid step through `step_size`.
    pub epsilon: f64,
    /// Also weight by "no default among the survivors" over the window.
    pub survival_evidence: bool,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions {
            epsilon: 1e-3,
            survival_evidence: false,
        }
    }
}

/// Generator tilted by the no-event exposure of the current Y table
/// (and optionally of the survivors' defaults, frozen at `t`).
fn exposure_generator(
    model: &CreditModel,
    port: &PortfolioState,
    n_jumps: usize,
    t: f64,
    survival: bool,
) -> Mat2 {
    let eta = model.obs.rates(n_jumps);
    let mut u = RateVector::new(-eta[0], -eta[1]);
    if survival {
        u = u + model.intensity.surviving_rate_vector(port, t);
    }
    model.chain.tilted_generator(u)
}

/// Draws X on `[from, horizon]` given X at `from` distributed as `start`,
/// the Y path, and (optionally) survival of every obligor alive in `port`.
#[allow(clippy::too_many_arguments)]
pub fn resample_x_given_observables<R: Rng + ?Sized>(
    y: &YPath,
    port: &PortfolioState,
    model: &CreditModel,
    start: &Posterior,
    from: f64,
    horizon: f64,
    opts: &SamplerOptions,
    rng: &mut R,
) -> Result<ChainPath, McError> {
    let grid = build_grid(model, port, from, horizon, opts)?;
    let steps = forward_matrices(y, port, model, &grid, opts);

    let mut alpha = Vec::with_capacity(grid.len());
    alpha.push(start.as_array());
    for m in &steps {
        let next = m.left_mul(*alpha.last().expect("seeded"));
        let z = next[0] + next[1];
        if !(z > 0.0) || !z.is_finite() {
            return Err(McError::DegenerateEvidence(from));
        }
        alpha.push([next[0] / z, next[1] / z]);
    }

    let n = steps.len();
    let mut states = vec![0usize; n + 1];
    let last = alpha[n];
    states[n] = usize::from(rng.random::<f64>() * (last[0] + last[1]) >= last[0]);
    for k in (0..n).rev() {
        let j = states[k + 1];
        let w0 = alpha[k][0] * steps[k].get(0, j);
        let w1 = alpha[k][1] * steps[k].get(1, j);
        states[k] = usize::from(rng.random::<f64>() * (w0 + w1) >= w0);
    }

    let mut switches = Vec::new();
    for k in 0..n {
        if states[k] != states[k + 1] {
            let (a, b) = (grid[k], grid[k + 1]);
            let mut s = a + rng.random::<f64>() * (b - a);
            if s <= a || s >= b {
                s = 0.5 * (a + b);
            }
            switches.push(s);
        }
    }
    ChainPath::new(from, horizon, states[0], switches)
}

fn build_grid(
    model: &CreditModel,
    port: &PortfolioState,
    from: f64,
    horizon: f64,
    opts: &SamplerOptions,
) -> Result<Vec<f64>, McError> {
    if !(horizon >= from) || !horizon.is_finite() {
        return Err(McError::InvalidHorizon { start: from, end: horizon });
    }
    let mut bound = model.chain.theta0().max(model.chain.theta1()) + model.obs.max_rate();
    if opts.survival_evidence {
        bound += port.survivor_count() as f64 * model.intensity.lambda_max(horizon, model.obligors());
    }
    let h = step_size(opts.epsilon, bound.max(1e-12))?;
    let len = horizon - from;
    let n = if len == 0.0 { 0 } else { (len / h).ceil().max(1.0) as usize };
    let dt = if n == 0 { 0.0 } else { len / n as f64 };
    let mut grid: Vec<f64> = (0..n).map(|k| from + k as f64 * dt).collect();
    grid.push(horizon);
    Ok(grid)
}

/// Likelihood-weighted transition matrix for every grid step.
fn forward_matrices(y: &YPath, port: &PortfolioState, model: &CreditModel, grid: &[f64], opts: &SamplerOptions) -> Vec<Mat2> {
    let survival = opts.survival_evidence && port.survivor_count() > 0;
    let homogeneous = !survival || model.intensity.is_time_homogeneous();
    let jumps = y.jumps();
    let mut cache: [Option<(f64, Mat2)>; 2] = [None, None];
    let mut out = Vec::with_capacity(grid.len().saturating_sub(1));
    let mut next_jump = jumps.partition_point(|&s| s <= grid[0]);
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut n = y.jumps_by(a);
        if next_jump < jumps.len() && jumps[next_jump] <= b {
            // split at every jump inside (a, b]
            let mut m = Mat2::IDENTITY;
            let mut left = a;
            while next_jump < jumps.len() && jumps[next_jump] <= b {
                let s = jumps[next_jump];
                let g = exposure_generator(model, port, n, left, survival);
                m = m * expm(&g, s - left);
                m = m.mul_diag(model.obs.rates(n));
                n += 1;
                left = s;
                next_jump += 1;
            }
            let g = exposure_generator(model, port, n, left, survival);
            out.push(m * expm(&g, b - left));
            continue;
        }
        let dt = b - a;
        let parity = n % 2;
        let m = if homogeneous {
            match cache[parity] {
                Some((len, m)) if (len - dt).abs() <= 1e-15 * dt.max(1.0) => m,
                _ => {
                    let m = expm(&exposure_generator(model, port, n, a, survival), dt);
                    cache[parity] = Some((dt, m));
                    m
                }
            }
        } else {
            expm(&exposure_generator(model, port, n, a, survival), dt)
        };
        out.push(m);
    }
    out
}

/// Marginal state probabilities at every grid point under the forward filter
/// alone (no backward pass); exposed for diagnostics and tests.
pub fn forward_filter_marginals(
    y: &YPath,
    port: &PortfolioState,
    model: &CreditModel,
    start: &Posterior,
    from: f64,
    horizon: f64,
    opts: &SamplerOptions,
) -> Result<Vec<(f64, [f64; 2])>, McError> {
    let grid = build_grid(model, port, from, horizon, opts)?;
    let steps = forward_matrices(y, port, model, &grid, opts);
    let mut a = start.as_array();
    let mut out = vec![(grid[0], a)];
    for (m, &t) in steps.iter().zip(&grid[1..]) {
        let next = m.left_mul(a);
        let z = next[0] + next[1];
        if !(z > 0.0) || !z.is_finite() {
            return Err(McError::DegenerateEvidence(t));
        }
        a = [next[0] / z, next[1] / z];
        out.push((t, a));
    }
    Ok(out)
}
