//! Two-state continuous-time Markov chain quantities.
//!
//! The hidden economy chain switches `x0 -> x1` at rate `theta0` and
//! `x1 -> x0` at rate `theta1`. For a rate vector `u = (u0, u1)` the
//! occupation-time exponential moment
//!
//! ```text
//! Phi_ij(u, t) = E[ exp(u0 * T0 + u1 * T1) ; X_t = j | X_0 = i ]
//! ```
//!
//! is the `(i, j)` entry of `exp(A t)` with `A = Q + diag(u)`. Dividing by
//! the transition probability gives the conditional moment `Psi_ij`.
//!
//! Time-dependent exponents are handled by freezing the rate vector at the
//! left end of short subintervals and chaining the homogeneous solutions.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{expm, Mat2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("duration must be non-negative, got {0}")]
    NegativeDuration(f64),
    #[error("transition rate {name} must be finite and non-negative, got {value}")]
    InvalidRate { name: &'static str, value: f64 },
    #[error("state index must be 0 or 1, got {0}")]
    InvalidState(usize),
    #[error("P_{i}{j}({t}) is zero; the conditional moment is undefined")]
    DegenerateDenominator { i: usize, j: usize, t: f64 },
    #[error("error budget must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("rate bound must be finite and non-negative, got {0}")]
    InvalidBound(f64),
    #[error("rate function left its declared bound {bound} at t = {t} (|u| = {value})")]
    UnboundedRates { t: f64, value: f64, bound: f64 },
    #[error("relative error target {zeta} is not reachable: the smallest attainable bound is {best}")]
    InfeasibleRelativeError { zeta: f64, best: f64 },
    #[error("relative error target must lie in (0, 1), got {0}")]
    InvalidZeta(f64),
}

pub type Result<T> = std::result::Result<T, ChainError>;

pub(crate) fn check_state(s: usize) -> Result<usize> {
    if s < 2 {
        Ok(s)
    } else {
        Err(ChainError::InvalidState(s))
    }
}

/// Hidden economy chain: two switching rates and a starting state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    theta0: f64,
    theta1: f64,
    initial_state: usize,
}

impl ChainSpec {
    pub fn new(theta0: f64, theta1: f64, initial_state: usize) -> Result<Self> {
        for (name, value) in [("theta0", theta0), ("theta1", theta1)] {
            if !value.is_finite() || value < 0.0 {
                return Err(ChainError::InvalidRate { name, value });
            }
        }
        check_state(initial_state)?;
        Ok(ChainSpec {
            theta0,
            theta1,
            initial_state,
        })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    /// Rate of leaving `state`.
    #[inline]
    pub fn exit_rate(&self, state: usize) -> f64 {
        if state == 0 {
            self.theta0
        } else {
            self.theta1
        }
    }

    pub fn is_frozen(&self) -> bool {
        self.theta0 == 0.0 && self.theta1 == 0.0
    }

    pub fn generator(&self) -> Mat2 {
        Mat2::new(-self.theta0, self.theta0, self.theta1, -self.theta1)
    }

    /// `Q + diag(u)`.
    pub fn tilted_generator(&self, u: RateVector) -> Mat2 {
        Mat2::new(
            u.u0 - self.theta0,
            self.theta0,
            self.theta1,
            u.u1 - self.theta1,
        )
    }

    /// Full transition matrix `P(t)`.
    pub fn transition_matrix(&self, t: f64) -> Result<Mat2> {
        if !(t >= 0.0) {
            return Err(ChainError::NegativeDuration(t));
        }
        let s = self.theta0 + self.theta1;
        if s == 0.0 {
            return Ok(Mat2::IDENTITY);
        }
        // eigenvalues 0 and -(theta0 + theta1)
        let decay = (-s * t).exp();
        let w0 = self.theta1 / s;
        let w1 = self.theta0 / s;
        Ok(Mat2::new(
            w0 + w1 * decay,
            w1 * (1.0 - decay),
            w0 * (1.0 - decay),
            w1 + w0 * decay,
        ))
    }

    /// Unconditional law of `X_t` started from the initial state.
    pub fn marginal(&self, t: f64) -> Result<[f64; 2]> {
        let p = self.transition_matrix(t)?;
        Ok(p.0[self.initial_state])
    }

    /// Long-run probabilities, `None` for a frozen chain.
    pub fn stationary(&self) -> Option<[f64; 2]> {
        let s = self.theta0 + self.theta1;
        (s > 0.0).then(|| [self.theta1 / s, self.theta0 / s])
    }
}

pub fn transition_prob(spec: &ChainSpec, i: usize, j: usize, t: f64) -> Result<f64> {
    check_state(i)?;
    check_state(j)?;
    Ok(spec.transition_matrix(t)?.get(i, j))
}

/// Per-unit-time exponents `(u0, u1)` applied while the chain sits in each state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateVector {
    pub u0: f64,
    pub u1: f64,
}

impl RateVector {
    pub const ZERO: RateVector = RateVector { u0: 0.0, u1: 0.0 };

    pub fn new(u0: f64, u1: f64) -> Self {
        RateVector { u0, u1 }
    }

    pub fn uniform(c: f64) -> Self {
        RateVector { u0: c, u1: c }
    }

    #[inline]
    pub fn get(&self, state: usize) -> f64 {
        if state == 0 {
            self.u0
        } else {
            self.u1
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.u0.abs().max(self.u1.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.u0.is_finite() && self.u1.is_finite()
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.u0, self.u1]
    }
}

impl std::ops::Add for RateVector {
    type Output = RateVector;

    fn add(self, rhs: RateVector) -> RateVector {
        RateVector::new(self.u0 + rhs.u0, self.u1 + rhs.u1)
    }
}

impl std::ops::Neg for RateVector {
    type Output = RateVector;

    fn neg(self) -> RateVector {
        RateVector::new(-self.u0, -self.u1)
    }
}

/// `Phi(u, t) = exp((Q + diag(u)) t)`.
pub fn phi_homogeneous(spec: &ChainSpec, u: RateVector, t: f64) -> Result<Mat2> {
    if !(t >= 0.0) {
        return Err(ChainError::NegativeDuration(t));
    }
    Ok(expm(&spec.tilted_generator(u), t))
}

/// Time derivative of `phi_homogeneous`, `A exp(A t)`.
pub fn phi_homogeneous_dt(spec: &ChainSpec, u: RateVector, t: f64) -> Result<Mat2> {
    let a = spec.tilted_generator(u);
    Ok(a * phi_homogeneous(spec, u, t)?)
}

/// Conditional occupation-time moment `Psi_ij(u, t) = Phi_ij / P_ij`.
///
/// Fails when `P_ij(t)` vanishes (off-diagonal at `t = 0`, or a zero
/// switching rate). Products of the form `P * Psi * Psi'` should be formed
/// from `phi_homogeneous` directly.
pub fn mgf_homogeneous(spec: &ChainSpec, u: RateVector, i: usize, j: usize, t: f64) -> Result<f64> {
    check_state(i)?;
    check_state(j)?;
    let p = transition_prob(spec, i, j, t)?;
    if p <= 0.0 {
        return Err(ChainError::DegenerateDenominator { i, j, t });
    }
    Ok(phi_homogeneous(spec, u, t)?.get(i, j) / p)
}

/// Longest frozen-rate step keeping the per-step moment error under `epsilon`:
/// `-ln(1 - epsilon) / rate_bound`.
///
/// A zero bound means the exponent is identically zero and any step is exact;
/// this is reported as `f64::INFINITY`.
pub fn step_size(epsilon: f64, rate_bound: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ChainError::InvalidEpsilon(epsilon));
    }
    if !(rate_bound >= 0.0) || !rate_bound.is_finite() {
        return Err(ChainError::InvalidBound(rate_bound));
    }
    if rate_bound == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-(-epsilon).ln_1p() / rate_bound)
}

type RateFn = dyn Fn(f64) -> RateVector + Send + Sync;

/// A rate vector that varies with absolute time, plus a uniform bound on
/// `max(|u0|, |u1|)` over the horizon of interest.
#[derive(Clone)]
pub struct TimeRateFunction {
    f: Arc<RateFn>,
    breakpoints: Vec<f64>,
    bound: f64,
    constant: bool,
}

impl fmt::Debug for TimeRateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeRateFunction")
            .field("breakpoints", &self.breakpoints)
            .field("bound", &self.bound)
            .field("constant", &self.constant)
            .finish()
    }
}

impl TimeRateFunction {
    pub fn new<F>(f: F, bound: f64) -> Self
    where
        F: Fn(f64) -> RateVector + Send + Sync + 'static,
    {
        TimeRateFunction {
            f: Arc::new(f),
            breakpoints: Vec::new(),
            bound,
            constant: false,
        }
    }

    pub fn constant(u: RateVector) -> Self {
        TimeRateFunction {
            f: Arc::new(move |_| u),
            breakpoints: Vec::new(),
            bound: u.max_abs(),
            constant: true,
        }
    }

    /// Right-continuous step function: `values[k]` holds on `[times[k], times[k+1])`.
    /// `times` must be increasing and `values.len() == times.len()`.
    pub fn piecewise_constant(times: Vec<f64>, values: Vec<RateVector>) -> Self {
        assert_eq!(times.len(), values.len());
        assert!(!times.is_empty());
        let bound = values.iter().map(RateVector::max_abs).fold(0.0, f64::max);
        let t = times.clone();
        let f = move |x: f64| {
            let idx = t.partition_point(|&b| b <= x).saturating_sub(1);
            values[idx]
        };
        TimeRateFunction {
            f: Arc::new(f),
            breakpoints: times,
            bound,
            constant: false,
        }
    }

    /// Declares points where the function may jump; partitions always split there.
    pub fn with_breakpoints(mut self, mut breakpoints: Vec<f64>) -> Self {
        breakpoints.sort_by(f64::total_cmp);
        self.breakpoints = breakpoints;
        self
    }

    #[inline]
    pub fn eval(&self, t: f64) -> RateVector {
        (self.f)(t)
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }
}

/// Left-endpoint frozen approximation of the time-inhomogeneous moment matrix
/// over `[s0, s0 + t]`.
///
/// The interval is first split at declared breakpoints, then each piece is cut
/// evenly into steps no longer than `step_size(epsilon, rates.bound())`. On
/// each step the rate is frozen at the step's left end and the homogeneous
/// solutions are multiplied in time order, which sums over the intermediate
/// states.
pub fn phi_inhomogeneous(
    spec: &ChainSpec,
    rates: &TimeRateFunction,
    s0: f64,
    t: f64,
    epsilon: f64,
) -> Result<Mat2> {
    if !(t >= 0.0) {
        return Err(ChainError::NegativeDuration(t));
    }
    let bound = rates.bound();
    if !bound.is_finite() || bound < 0.0 {
        return Err(ChainError::InvalidBound(bound));
    }
    if t == 0.0 {
        return Ok(Mat2::IDENTITY);
    }
    if rates.is_constant() {
        let u = rates.eval(s0);
        return phi_homogeneous(spec, u, t);
    }
    let h = step_size(epsilon, bound)?;
    let end = s0 + t;

    let mut cuts = vec![s0];
    cuts.extend(rates.breakpoints().iter().copied().filter(|&b| b > s0 && b < end));
    cuts.push(end);

    let mut acc = Mat2::IDENTITY;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let n = if h.is_finite() { (len / h).ceil().max(1.0) as usize } else { 1 };
        let dt = len / n as f64;
        for k in 0..n {
            let left = a + k as f64 * dt;
            let u = rates.eval(left);
            let mag = u.max_abs();
            if !u.is_finite() || mag > bound * (1.0 + 1e-9) + 1e-300 {
                return Err(ChainError::UnboundedRates {
                    t: left,
                    value: mag,
                    bound,
                });
            }
            acc = acc * expm(&spec.tilted_generator(u), dt);
        }
    }
    Ok(acc)
}

/// Largest admissible error budget, kept strictly below 1.
pub const EPSILON_CAP: f64 = 0.999;

/// Log of the relative-error bound for one segment of scaled length
/// `load = segment * rate_bound` at per-step budget `epsilon`.
///
/// With `l = -ln(1 - epsilon)` and `M = load / l` steps, the bound is
/// `2^M [ (1 + epsilon / (1 - epsilon))^(M + 1) - 1 ]`, evaluated in log space.
pub fn relative_error_bound_ln(epsilon: f64, load: f64) -> f64 {
    let l = -(-epsilon).ln_1p();
    let m = load / l;
    // (1/(1-eps))^(M+1) = exp(l (M + 1)) = exp(load + l)
    m * std::f64::consts::LN_2 + (load + l).exp_m1().ln()
}

/// Largest per-step budget `epsilon` such that both segments of an event
/// window keep their relative error under `zeta / 2`.
///
/// Empty segments impose no condition. The bound grows without limit both as
/// `epsilon -> 0` (the `2^M` path count) and as `epsilon -> 1`, so the
/// feasible set is an interval; the right end of that interval is returned,
/// located by bisection to `1e-12`. When no budget satisfies the bound an
/// `InfeasibleRelativeError` carrying the smallest attainable bound is
/// returned.
pub fn epsilon_for_relative_error(zeta: f64, seg1: f64, seg2: f64, rate_bound: f64) -> Result<f64> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(ChainError::InvalidZeta(zeta));
    }
    for s in [seg1, seg2] {
        if !(s >= 0.0) {
            return Err(ChainError::NegativeDuration(s));
        }
    }
    if !(rate_bound >= 0.0) || !rate_bound.is_finite() {
        return Err(ChainError::InvalidBound(rate_bound));
    }
    let load = seg1.max(seg2) * rate_bound;
    let target = (0.5 * zeta).ln();
    let bound_at = |eps: f64| {
        if load == 0.0 {
            f64::NEG_INFINITY
        } else {
            relative_error_bound_ln(eps, load)
        }
    };

    if bound_at(EPSILON_CAP) < target {
        return Ok(EPSILON_CAP);
    }

    // golden-section search for the minimiser of the (unimodal) bound
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (1e-15, EPSILON_CAP);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (bound_at(x1), bound_at(x2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = bound_at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = bound_at(x2);
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let best_x = 0.5 * (lo + hi);
    let best = bound_at(best_x);
    if !(best < target) {
        return Err(ChainError::InfeasibleRelativeError {
            zeta,
            best: best.exp(),
        });
    }

    // feasible at best_x, infeasible at the cap
    let (mut ok, mut bad) = (best_x, EPSILON_CAP);
    while bad - ok > 1e-12 {
        let mid = 0.5 * (ok + bad);
        if bound_at(mid) < target {
            ok = mid;
        } else {
            bad = mid;
        }
    }
    Ok(ok)
}
