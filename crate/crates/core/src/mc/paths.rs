//! Sample paths of the hidden chain and the observation chain.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{path_rng, McError};
use crate::chain::ChainSpec;
use crate::filter::ObservationSpec;

/// Piecewise-constant path of X on `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    start: f64,
    end: f64,
    initial: usize,
    switches: Vec<f64>,
}

impl ChainPath {
    pub fn new(start: f64, end: f64, initial: usize, switches: Vec<f64>) -> Result<Self, McError> {
        if !(end >= start) || !start.is_finite() || !end.is_finite() {
            return Err(McError::InvalidHorizon { start, end });
        }
        if initial > 1 {
            return Err(McError::InvalidState(initial));
        }
        let mut last = start;
        for &s in &switches {
            if !(s > last) || s > end {
                return Err(McError::UnorderedTimes(s));
            }
            last = s;
        }
        Ok(ChainPath {
            start,
            end,
            initial,
            switches,
        })
    }

    pub fn constant(start: f64, end: f64, state: usize) -> Result<Self, McError> {
        Self::new(start, end, state, Vec::new())
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn switches(&self) -> &[f64] {
        &self.switches
    }

    /// Right-continuous state at `t`.
    pub fn state_at(&self, t: f64) -> usize {
        let flips = self.switches.partition_point(|&s| s <= t);
        (self.initial + flips) % 2
    }

    /// Maximal constant pieces `(from, to, state)` covering `[from, to]`,
    /// clipped to the path's own span.
    pub fn pieces(&self, from: f64, to: f64) -> Vec<(f64, f64, usize)> {
        let from = from.max(self.start);
        let to = to.min(self.end);
        let mut out = Vec::new();
        if !(to > from) {
            return out;
        }
        let mut k = self.switches.partition_point(|&s| s <= from);
        let mut state = (self.initial + k) % 2;
        let mut left = from;
        while k < self.switches.len() && self.switches[k] < to {
            out.push((left, self.switches[k], state));
            left = self.switches[k];
            state ^= 1;
            k += 1;
        }
        out.push((left, to, state));
        out
    }

    /// Time spent in each state over `[from, to]`.
    pub fn occupation(&self, from: f64, to: f64) -> [f64; 2] {
        let mut occ = [0.0; 2];
        for (a, b, x) in self.pieces(from, to) {
            occ[x] += b - a;
        }
        occ
    }

    /// Keeps this path on `[start, at]` and continues with `tail` from `at`.
    pub fn splice(&self, at: f64, tail: &ChainPath) -> Result<ChainPath, McError> {
        let mut switches: Vec<f64> = self.switches.iter().copied().filter(|&s| s <= at).collect();
        if self.state_at(at) != tail.state_at(at) {
            return Err(McError::InvalidState(tail.state_at(at)));
        }
        switches.extend(tail.switches.iter().copied().filter(|&s| s > at));
        ChainPath::new(self.start, tail.end.max(at), self.initial, switches)
    }
}

/// Path of Y on `[start, end]`; `prior_jumps` counts jumps before `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct YPath {
    start: f64,
    end: f64,
    prior_jumps: usize,
    jumps: Vec<f64>,
}

impl YPath {
    pub fn new(start: f64, end: f64, prior_jumps: usize, jumps: Vec<f64>) -> Result<Self, McError> {
        if !(end >= start) {
            return Err(McError::InvalidHorizon { start, end });
        }
        let mut last = start;
        for &s in &jumps {
            if !(s > last) || s > end {
                return Err(McError::UnorderedTimes(s));
            }
            last = s;
        }
        Ok(YPath {
            start,
            end,
            prior_jumps,
            jumps,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn prior_jumps(&self) -> usize {
        self.prior_jumps
    }

    /// Total jumps, including earlier ones, at or before `t`.
    pub fn jumps_by(&self, t: f64) -> usize {
        self.prior_jumps + self.jumps.partition_point(|&s| s <= t)
    }
}

/// Unit exponential thresholds, one per obligor, indexed by obligor id - 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialDraws {
    values: Vec<f64>,
}

impl ExponentialDraws {
    pub fn draw<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let values = (0..k)
            .map(|_| {
                let e: f64 = Exp1.sample(rng);
                // Exp1 can return exactly zero with negligible probability
                e.max(f64::MIN_POSITIVE)
            })
            .collect();
        ExponentialDraws { values }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self, McError> {
        if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(McError::InvalidThreshold);
        }
        Ok(ExponentialDraws { values })
    }

    pub fn get(&self, obligor: usize) -> f64 {
        self.values[obligor - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Exact simulation of the coupled (X, Y) chain from `start` with competing
/// exponential clocks.
#[allow(clippy::too_many_arguments)]
pub fn sample_joint_paths_from<R: Rng + ?Sized>(
    chain: &ChainSpec,
    obs: &ObservationSpec,
    start: f64,
    x0: usize,
    prior_jumps: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<(ChainPath, YPath), McError> {
    if !(horizon >= start) || !horizon.is_finite() {
        return Err(McError::InvalidHorizon { start, end: horizon });
    }
    let mut t = start;
    let mut x = x0;
    let mut n = prior_jumps;
    let mut switches = Vec::new();
    let mut jumps = Vec::new();
    loop {
        let rx = chain.exit_rate(x);
        let ry = obs.rate(n, x);
        let total = rx + ry;
        if total <= 0.0 {
            break;
        }
        let e: f64 = Exp1.sample(rng);
        t += e / total;
        if t > horizon {
            break;
        }
        if rng.random::<f64>() * total < rx {
            switches.push(t);
            x ^= 1;
        } else {
            jumps.push(t);
            n += 1;
        }
    }
    Ok((
        ChainPath::new(start, horizon, x0, switches)?,
        YPath::new(start, horizon, prior_jumps, jumps)?,
    ))
}

/// Joint path on `[0, horizon]` from the model's initial states, on the
/// stream for path 0 of `seed`.
pub fn sample_joint_paths(
    chain: &ChainSpec,
    obs: &ObservationSpec,
    horizon: f64,
    seed: u64,
) -> Result<(ChainPath, YPath), McError> {
    let mut rng: ChaCha8Rng = path_rng(seed, 0);
    sample_joint_paths_from(chain, obs, 0.0, chain.initial_state(), 0, horizon, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_queries() {
        let p = ChainPath::new(0.0, 5.0, 0, vec![1.0, 2.5]).unwrap();
        assert_eq!(p.state_at(0.5), 0);
        assert_eq!(p.state_at(1.0), 1);
        assert_eq!(p.state_at(3.0), 0);
        assert_eq!(p.occupation(0.0, 5.0), [3.5, 1.5]);
        assert_eq!(p.pieces(0.5, 2.0), vec![(0.5, 1.0, 0), (1.0, 2.0, 1)]);
        let tail = ChainPath::new(2.0, 6.0, 1, vec![4.0]).unwrap();
        let s = p.splice(2.0, &tail).unwrap();
        assert_eq!(s.switches(), &[1.0, 4.0]);
        assert_eq!(s.end(), 6.0);
        assert!(ChainPath::new(0.0, 1.0, 0, vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn frozen_chain_and_silent_y() {
        let frozen = ChainSpec::new(0.0, 0.0, 0).unwrap();
        let silent = ObservationSpec::new([0.0, 0.0], [0.0, 0.0], 0).unwrap();
        let (x, y) = sample_joint_paths(&frozen, &silent, 10.0, 3).unwrap();
        assert!(x.switches().is_empty());
        assert!(y.jumps().is_empty());
        let chain = ChainSpec::new(0.5, 0.5, 0).unwrap();
        let (x, y) = sample_joint_paths(&chain, &silent, 10.0, 3).unwrap();
        assert!(!x.switches().is_empty());
        assert!(y.jumps().is_empty());
    }

    #[test]
    fn frozen_chain_y_counts_alternate_rates() {
        // rates 0.5 out of y0 and 2 out of y1: mean jumps in [0, T] from the
        // alternating renewal process, checked against its exact mean
        let frozen = ChainSpec::new(0.0, 0.0, 0).unwrap();
        let obs = ObservationSpec::new([0.5, 9.0], [2.0, 9.0], 0).unwrap();
        let t = 3.0;
        let n = 40_000;
        let mut total = 0usize;
        for i in 0..n {
            let mut rng = path_rng(11, i);
            let (_, y) = sample_joint_paths_from(&frozen, &obs, 0.0, 0, 0, t, &mut rng).unwrap();
            total += y.jumps().len();
        }
        // two-state chain: jump intensity is 0.5 P(y0) + 2 P(y1), P(y1)(s) = 0.2 (1 - e^{-2.5 s})
        let p1_integral = 0.2 * (t - (1.0 - (-2.5f64 * t).exp()) / 2.5);
        let want = 0.5 * (t - p1_integral) + 2.0 * p1_integral;
        let mean = total as f64 / n as f64;
        assert!((mean - want).abs() < 0.02, "{mean} vs {want}");
    }
}
