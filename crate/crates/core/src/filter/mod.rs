//! Posterior of the hidden state given the observed Y path and defaults.
//!
//! The observation window is cut at event times so that every segment ends
//! in exactly one event. Within a segment the joint law of "first event at
//! offset `tbar`, hidden state at the end" is a product of moment matrices:
//! exposure up to the event, the event rate in the state occupied at that
//! instant, and exposure after the event.

mod history;

pub use history::{Event, EventHistory, EventKind, HistoryError};

use thiserror::Error;

use crate::chain::{
    epsilon_for_relative_error, phi_homogeneous, phi_inhomogeneous, ChainError, ChainSpec, RateVector,
    TimeRateFunction,
};
use crate::linalg::Mat2;
use crate::model::{CreditModel, IntensityModel, ModelError, ObligorId, PortfolioState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error("observation rate {name} must be finite and non-negative, got {value}")]
    InvalidObservationRate { name: &'static str, value: f64 },
    #[error("event offset {tbar} lies outside the segment (0, {length}]")]
    OffsetOutsideSegment { tbar: f64, length: f64 },
    #[error("event {index} at t = {time} has zero likelihood under the model")]
    DegenerateEvidence { index: usize, time: f64 },
    #[error("posterior weights must be finite, non-negative and not both zero")]
    InvalidPosterior,
}

pub type Result<T> = std::result::Result<T, FilterError>;

/// Which Y-rate table applies after `n` observed jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum YRateSelector {
    /// Rate out of the state Y currently occupies: `eta0` in `y0`, `eta1` in `y1`.
    #[default]
    Occupied,
    /// Index `1` when `n + y_initial` is even, `0` otherwise.
    LiteralParity,
}

/// Observation chain Y: jump rates out of `y0` and out of `y1`, each given
/// per hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSpec {
    eta0: [f64; 2],
    eta1: [f64; 2],
    y_initial: usize,
    selector: YRateSelector,
}

impl ObservationSpec {
    pub fn new(eta0: [f64; 2], eta1: [f64; 2], y_initial: usize) -> Result<Self> {
        for (name, v) in [
            ("eta0_x0", eta0[0]),
            ("eta0_x1", eta0[1]),
            ("eta1_x0", eta1[0]),
            ("eta1_x1", eta1[1]),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(FilterError::InvalidObservationRate { name, value: v });
            }
        }
        crate::chain::check_state(y_initial)?;
        Ok(ObservationSpec {
            eta0,
            eta1,
            y_initial,
            selector: YRateSelector::Occupied,
        })
    }

    pub fn with_selector(mut self, selector: YRateSelector) -> Self {
        self.selector = selector;
        self
    }

    pub fn eta0(&self) -> [f64; 2] {
        self.eta0
    }

    pub fn eta1(&self) -> [f64; 2] {
        self.eta1
    }

    pub fn y_initial(&self) -> usize {
        self.y_initial
    }

    pub fn selector(&self) -> YRateSelector {
        self.selector
    }

    /// Y state after `n_jumps` jumps.
    pub fn y_state(&self, n_jumps: usize) -> usize {
        (self.y_initial + n_jumps) % 2
    }

    fn table(&self, n_jumps: usize) -> [f64; 2] {
        let idx = match self.selector {
            YRateSelector::Occupied => self.y_state(n_jumps),
            YRateSelector::LiteralParity => 1 - self.y_state(n_jumps),
        };
        if idx == 0 {
            self.eta0
        } else {
            self.eta1
        }
    }

    /// Jump rate of Y after `n_jumps` jumps while X is in state `x`.
    pub fn rate(&self, n_jumps: usize, x: usize) -> f64 {
        self.table(n_jumps)[x]
    }

    /// Both hidden-state rates after `n_jumps` jumps.
    pub fn rates(&self, n_jumps: usize) -> [f64; 2] {
        self.table(n_jumps)
    }

    pub fn max_rate(&self) -> f64 {
        self.eta0.iter().chain(&self.eta1).copied().fold(0.0, f64::max)
    }

    /// True when Y's rates carry no information about X.
    pub fn is_uninformative(&self) -> bool {
        self.eta0[0] == self.eta0[1] && self.eta1[0] == self.eta1[1]
    }
}

pub fn current_y_rate(obs: &ObservationSpec, n_jumps: usize, x: usize) -> f64 {
    obs.rate(n_jumps, x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub p0: f64,
    pub p1: f64,
}

impl Posterior {
    pub fn certain(state: usize) -> Self {
        if state == 0 {
            Posterior { p0: 1.0, p1: 0.0 }
        } else {
            Posterior { p0: 0.0, p1: 1.0 }
        }
    }

    /// Normalises non-negative weights.
    pub fn from_weights(w: [f64; 2]) -> Result<Self> {
        let z = w[0] + w[1];
        if !(w[0] >= 0.0 && w[1] >= 0.0) || !(z > 0.0) || !z.is_finite() {
            return Err(FilterError::InvalidPosterior);
        }
        Ok(Posterior {
            p0: w[0] / z,
            p1: w[1] / z,
        })
    }

    pub fn get(&self, state: usize) -> f64 {
        if state == 0 {
            self.p0
        } else {
            self.p1
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.p0, self.p1]
    }

    pub fn total_variation(&self, other: &Posterior) -> f64 {
        0.5 * ((self.p0 - other.p0).abs() + (self.p1 - other.p1).abs())
    }
}

/// How exposures to Y and to defaults over the same interval are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MgfMode {
    /// One moment matrix at the summed rate vector.
    #[default]
    Exact,
    /// Separate moment matrices multiplied entrywise and divided by the
    /// transition probability.
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOptions {
    pub mode: MgfMode,
    /// Fixed error budget for frozen-rate steps; when `None` it is chosen per
    /// segment from `zeta`.
    pub epsilon: Option<f64>,
    /// Relative error target per segment.
    pub zeta: f64,
}

impl Default for FilterOptions {
    fn default() -> Self {
        FilterOptions {
            mode: MgfMode::Exact,
            epsilon: None,
            zeta: 1e-3,
        }
    }
}

impl FilterOptions {
    /// Error budget for a segment split into pieces of length `seg1` and
    /// `seg2` under total rate bound `bound`. Falls back to `zeta` itself when
    /// the relative-error target cannot be met.
    pub fn segment_epsilon(&self, seg1: f64, seg2: f64, bound: f64) -> f64 {
        if let Some(e) = self.epsilon {
            return e;
        }
        match epsilon_for_relative_error(self.zeta, seg1, seg2, bound) {
            Ok(e) => e,
            Err(_) => self.zeta,
        }
    }
}

/// State of the observed record at the start of a segment.
#[derive(Debug, Clone, Copy)]
pub struct SegmentContext<'a> {
    pub model: &'a CreditModel,
    pub portfolio: &'a PortfolioState,
    /// Y jumps observed before the segment starts.
    pub y_jumps: usize,
}

/// Transition probabilities below this drop the whole term in literal mode.
const LITERAL_P_FLOOR: f64 = 1e-14;

/// Survivor intensity sums over absolute time, negated, as a rate function.
pub(crate) fn default_rates(intensity: &IntensityModel, port: &PortfolioState) -> TimeRateFunction {
    if intensity.is_time_homogeneous() {
        return TimeRateFunction::constant(intensity.surviving_rate_vector(port, 0.0));
    }
    let bound = port.survivor_count() as f64 * intensity.lambda_max(f64::INFINITY, port.obligors());
    let m = intensity.clone();
    let p = port.clone();
    TimeRateFunction::new(move |t| m.surviving_rate_vector(&p, t), bound)
}

/// Survival-and-no-jump exposure with a fixed Y table.
fn combined_rates(intensity: &IntensityModel, port: &PortfolioState, eta: [f64; 2]) -> TimeRateFunction {
    let shift = RateVector::new(-eta[0], -eta[1]);
    if intensity.is_time_homogeneous() {
        return TimeRateFunction::constant(intensity.surviving_rate_vector(port, 0.0) + shift);
    }
    let base = default_rates(intensity, port);
    let bound = base.bound() + eta[0].max(eta[1]);
    TimeRateFunction::new(move |t| base.eval(t) + shift, bound)
}

/// Moment matrix of "no Y jump and no default" over `[start, start + len]`,
/// jointly with the end state.
#[allow(clippy::too_many_arguments)]
fn exposure(
    chain: &ChainSpec,
    intensity: &IntensityModel,
    port: &PortfolioState,
    eta: [f64; 2],
    start: f64,
    len: f64,
    epsilon: f64,
    mode: MgfMode,
) -> Result<Mat2> {
    if len == 0.0 {
        return Ok(Mat2::IDENTITY);
    }
    match mode {
        MgfMode::Exact => {
            let rates = combined_rates(intensity, port, eta);
            Ok(phi_inhomogeneous(chain, &rates, start, len, epsilon)?)
        }
        MgfMode::PaperLiteral => {
            let y = phi_homogeneous(chain, RateVector::new(-eta[0], -eta[1]), len)?;
            let d = phi_inhomogeneous(chain, &default_rates(intensity, port), start, len, epsilon)?;
            let p = chain.transition_matrix(len)?;
            let mut out = Mat2::ZERO;
            for i in 0..2 {
                for j in 0..2 {
                    let pij = p.get(i, j);
                    if pij >= LITERAL_P_FLOOR {
                        out.0[i][j] = y.get(i, j) * d.get(i, j) / pij;
                    }
                }
            }
            Ok(out)
        }
    }
}

fn combined_bound(ctx: &SegmentContext<'_>, eta_max: f64) -> f64 {
    let m = ctx.model;
    ctx.portfolio.survivor_count() as f64 * m.intensity.lambda_max(f64::INFINITY, m.obligors()) + eta_max
}

fn check_offset(tbar: f64, length: f64) -> Result<()> {
    if !(tbar > 0.0 && tbar <= length) || !length.is_finite() {
        return Err(FilterError::OffsetOutsideSegment { tbar, length });
    }
    Ok(())
}

fn segment_epsilon(ctx: &SegmentContext<'_>, tbar: f64, length: f64, opts: &FilterOptions) -> f64 {
    let bound = combined_bound(ctx, ctx.model.obs.max_rate());
    opts.segment_epsilon(tbar, length - tbar, bound)
}

/// Matrix of `f^{j,i}`: density of obligor `beta` defaulting at `s + tbar`
/// as the first event of `(s, s + length]`, with the hidden state moving
/// from `j` at `s` to `i` at `s + length`.
pub fn default_density_matrix(
    beta: ObligorId,
    tbar: f64,
    seg: (f64, f64),
    ctx: &SegmentContext<'_>,
    opts: &FilterOptions,
) -> Result<Mat2> {
    let (s, length) = seg;
    check_offset(tbar, length)?;
    let m = ctx.model;
    let port = ctx.portfolio;
    let at = s + tbar;
    let ev = [
        m.intensity.intensity(beta, at, 0, port)?,
        m.intensity.intensity(beta, at, 1, port)?,
    ];
    let after = port.after_default(beta, at)?;
    let eps = segment_epsilon(ctx, tbar, length, opts);
    let eta = m.obs.rates(ctx.y_jumps);
    let pre = exposure(&m.chain, &m.intensity, port, eta, s, tbar, eps, opts.mode)?;
    let post = exposure(&m.chain, &m.intensity, &after, eta, at, length - tbar, eps, opts.mode)?;
    Ok(pre.mul_diag(ev) * post)
}

/// Matrix of `f^{j,i}` for a Y jump at `s + tbar`.
pub fn yjump_density_matrix(tbar: f64, seg: (f64, f64), ctx: &SegmentContext<'_>, opts: &FilterOptions) -> Result<Mat2> {
    let (s, length) = seg;
    check_offset(tbar, length)?;
    let m = ctx.model;
    let port = ctx.portfolio;
    let eps = segment_epsilon(ctx, tbar, length, opts);
    let before = m.obs.rates(ctx.y_jumps);
    let after = m.obs.rates(ctx.y_jumps + 1);
    let pre = exposure(&m.chain, &m.intensity, port, before, s, tbar, eps, opts.mode)?;
    let post = exposure(&m.chain, &m.intensity, port, after, s + tbar, length - tbar, eps, opts.mode)?;
    Ok(pre.mul_diag(before) * post)
}

pub fn f_default(
    j: usize,
    i: usize,
    beta: ObligorId,
    tbar: f64,
    seg: (f64, f64),
    ctx: &SegmentContext<'_>,
    opts: &FilterOptions,
) -> Result<f64> {
    crate::chain::check_state(j)?;
    crate::chain::check_state(i)?;
    Ok(default_density_matrix(beta, tbar, seg, ctx, opts)?.get(j, i))
}

pub fn f_yjump(j: usize, i: usize, sbar: f64, seg: (f64, f64), ctx: &SegmentContext<'_>, opts: &FilterOptions) -> Result<f64> {
    crate::chain::check_state(j)?;
    crate::chain::check_state(i)?;
    Ok(yjump_density_matrix(sbar, seg, ctx, opts)?.get(j, i))
}

/// Matrix of joint "nothing observed on `(s, s + length]`, end in state `i`"
/// probabilities given start state `j`.
pub fn no_event_matrix(seg: (f64, f64), ctx: &SegmentContext<'_>, opts: &FilterOptions) -> Result<Mat2> {
    let (s, length) = seg;
    if !(length >= 0.0) {
        return Err(ChainError::NegativeDuration(length).into());
    }
    let m = ctx.model;
    let eta = m.obs.rates(ctx.y_jumps);
    let eps = opts.segment_epsilon(length, 0.0, combined_bound(ctx, eta[0].max(eta[1])));
    exposure(&m.chain, &m.intensity, ctx.portfolio, eta, s, length, eps, opts.mode)
}

/// Evidence below this is treated as an impossible observation.
const EVIDENCE_FLOOR: f64 = 1e-300;

/// Two-stage update from the start-of-segment posterior given the segment's
/// `f` matrix: first the start state is reweighted by the evidence, then
/// pushed to the segment end.
fn bayes_update(prior: &Posterior, f: &Mat2) -> Option<Posterior> {
    let rows = f.row_sums();
    let w = [prior.p0 * rows[0], prior.p1 * rows[1]];
    let z = w[0] + w[1];
    if !(z > EVIDENCE_FLOOR) || !z.is_finite() {
        return None;
    }
    let start = [w[0] / z, w[1] / z];
    let mut end = [0.0; 2];
    for j in 0..2 {
        if start[j] == 0.0 {
            continue;
        }
        for (i, slot) in end.iter_mut().enumerate() {
            *slot += start[j] * f.get(j, i) / rows[j];
        }
    }
    Posterior::from_weights(end).ok()
}

/// Posterior at `s + seg.1` after `event`, the only event in the segment.
pub fn update_at_event(
    prior: &Posterior,
    event: &Event,
    seg: (f64, f64),
    ctx: &SegmentContext<'_>,
    opts: &FilterOptions,
) -> Result<Posterior> {
    let tbar = event.time - seg.0;
    let f = match event.kind {
        EventKind::Default(beta) => default_density_matrix(beta, tbar, seg, ctx, opts)?,
        EventKind::YJump => yjump_density_matrix(tbar, seg, ctx, opts)?,
    };
    bayes_update(prior, &f).ok_or(FilterError::DegenerateEvidence {
        index: 0,
        time: event.time,
    })
}

/// Pushes a posterior across an event-free stretch.
pub fn propagate_quiet(prior: &Posterior, seg: (f64, f64), ctx: &SegmentContext<'_>, opts: &FilterOptions) -> Result<Posterior> {
    if seg.1 == 0.0 {
        return Ok(*prior);
    }
    let e = no_event_matrix(seg, ctx, opts)?;
    let w = e.left_mul(prior.as_array());
    Posterior::from_weights(w).map_err(|_| FilterError::DegenerateEvidence {
        index: 0,
        time: seg.0 + seg.1,
    })
}

/// Posterior at `t` when nothing has been observed on `[0, t]`.
pub fn no_event_posterior(t: f64, model: &CreditModel, opts: &FilterOptions) -> Result<Posterior> {
    let port = model.empty_portfolio();
    let ctx = SegmentContext {
        model,
        portfolio: &port,
        y_jumps: 0,
    };
    propagate_quiet(&Posterior::certain(model.chain.initial_state()), (0.0, t), &ctx, opts)
}

/// Posterior right after each event and at the horizon.
pub fn run_filter(history: &EventHistory, model: &CreditModel, opts: &FilterOptions) -> Result<Vec<(f64, Posterior)>> {
    let mut port = model.empty_portfolio();
    let mut y_jumps = 0;
    let mut post = Posterior::certain(model.chain.initial_state());
    let mut s = 0.0;
    let mut out = Vec::with_capacity(history.events().len() + 1);
    for (index, ev) in history.events().iter().enumerate() {
        let ctx = SegmentContext {
            model,
            portfolio: &port,
            y_jumps,
        };
        post = update_at_event(&post, ev, (s, ev.time - s), &ctx, opts).map_err(|e| match e {
            FilterError::DegenerateEvidence { time, .. } => FilterError::DegenerateEvidence { index, time },
            other => other,
        })?;
        match ev.kind {
            EventKind::Default(id) => port.record_default(id, ev.time)?,
            EventKind::YJump => y_jumps += 1,
        }
        s = ev.time;
        out.push((s, post));
    }
    let horizon = history.horizon();
    if out.is_empty() || horizon > s {
        let ctx = SegmentContext {
            model,
            portfolio: &port,
            y_jumps,
        };
        post = propagate_quiet(&post, (s, horizon - s), &ctx, opts)?;
        out.push((horizon, post));
    }
    Ok(out)
}

/// Posterior at the history's horizon together with the default record there.
pub fn posterior_at_horizon(
    history: &EventHistory,
    model: &CreditModel,
    opts: &FilterOptions,
) -> Result<(Posterior, PortfolioState)> {
    let path = run_filter(history, model, opts)?;
    let port = history.portfolio(model.obligors())?;
    Ok((path.last().expect("run_filter emits at least one row").1, port))
}
