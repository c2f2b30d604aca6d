//! Default intensities and portfolio state.
//!
//! An obligor's intensity depends on absolute time, the hidden state
//! (entering numerically as `x in {0, 1}`) and the default record so far.
//! Two contagion families are built in; anything else can be plugged in
//! through [`CustomIntensity`].

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::chain::{ChainSpec, RateVector};
use crate::filter::ObservationSpec;

/// Obligors are numbered `1..=K`.
pub type ObligorId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("portfolio must contain at least one obligor")]
    EmptyPortfolio,
    #[error("obligor {id} is outside 1..={k}")]
    UnknownObligor { id: ObligorId, k: usize },
    #[error("obligor {0} has already defaulted")]
    AlreadyDefaulted(ObligorId),
    #[error("default times must be strictly increasing: {next} after {last}")]
    NonIncreasingDefault { last: f64, next: f64 },
    #[error("default time must be finite and positive, got {0}")]
    InvalidDefaultTime(f64),
    #[error("time {t} precedes the last recorded default at {last}")]
    TimeBeforeLastDefault { t: f64, last: f64 },
    #[error("coefficient {name} must be finite, got {value}")]
    NonFiniteCoefficient { name: &'static str, value: f64 },
    #[error("intensity is negative ({value}) at x = {x} with {defaults} defaults")]
    NegativeIntensity { x: usize, defaults: usize, value: f64 },
    #[error("custom intensity must declare a finite non-negative bound, got {0}")]
    InvalidBound(f64),
    #[error("portfolio has {got} obligors but the model has {expected}")]
    PortfolioSize { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Number of obligors and the ordered default record.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioState {
    obligors: usize,
    defaults: Vec<(ObligorId, f64)>,
}

impl PortfolioState {
    pub fn new(obligors: usize) -> Result<Self> {
        if obligors == 0 {
            return Err(ModelError::EmptyPortfolio);
        }
        Ok(PortfolioState {
            obligors,
            defaults: Vec::new(),
        })
    }

    pub fn with_defaults(obligors: usize, defaults: &[(ObligorId, f64)]) -> Result<Self> {
        let mut p = Self::new(obligors)?;
        for &(id, t) in defaults {
            p.record_default(id, t)?;
        }
        Ok(p)
    }

    pub fn obligors(&self) -> usize {
        self.obligors
    }

    pub fn defaults(&self) -> &[(ObligorId, f64)] {
        &self.defaults
    }

    pub fn default_count(&self) -> usize {
        self.defaults.len()
    }

    pub fn survivor_count(&self) -> usize {
        self.obligors - self.defaults.len()
    }

    pub fn last_default_time(&self) -> Option<f64> {
        self.defaults.last().map(|d| d.1)
    }

    pub fn has_defaulted(&self, id: ObligorId) -> bool {
        self.defaults.iter().any(|d| d.0 == id)
    }

    pub fn survivors(&self) -> impl Iterator<Item = ObligorId> + '_ {
        (1..=self.obligors).filter(move |&i| !self.has_defaulted(i))
    }

    pub fn check_obligor(&self, id: ObligorId) -> Result<()> {
        if id == 0 || id > self.obligors {
            return Err(ModelError::UnknownObligor {
                id,
                k: self.obligors,
            });
        }
        Ok(())
    }

    pub fn record_default(&mut self, id: ObligorId, t: f64) -> Result<()> {
        self.check_obligor(id)?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(ModelError::InvalidDefaultTime(t));
        }
        if self.has_defaulted(id) {
            return Err(ModelError::AlreadyDefaulted(id));
        }
        if let Some(last) = self.last_default_time() {
            if t <= last {
                return Err(ModelError::NonIncreasingDefault { last, next: t });
            }
        }
        self.defaults.push((id, t));
        Ok(())
    }

    /// Copy with one more default appended.
    pub fn after_default(&self, id: ObligorId, t: f64) -> Result<Self> {
        let mut next = self.clone();
        next.record_default(id, t)?;
        Ok(next)
    }
}

/// User-supplied intensity family.
pub trait CustomIntensity: Send + Sync {
    fn intensity(&self, obligor: ObligorId, t: f64, x: usize, port: &PortfolioState) -> f64;

    /// Upper bound on any single-obligor intensity over `[0, horizon]`,
    /// all hidden states and all default configurations of a `k`-name book.
    fn bound(&self, horizon: f64, k: usize) -> f64;

    /// True when the intensity does not depend on time between defaults.
    fn time_homogeneous(&self) -> bool {
        false
    }

    /// True when every surviving obligor has the same intensity.
    fn symmetric(&self) -> bool {
        false
    }
}

#[derive(Clone)]
pub enum IntensityModel {
    /// `a + b x + c * (#defaulted others)`.
    LinearContagion { a: f64, b: f64, c: f64 },
    /// `(a + c * (#defaulted others)) e^{-t} + b x`, with `t` absolute model time.
    ExpDecayContagion { a: f64, b: f64, c: f64 },
    Custom(Arc<dyn CustomIntensity>),
}

impl fmt::Debug for IntensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntensityModel::LinearContagion { a, b, c } => {
                write!(f, "LinearContagion {{ a: {a}, b: {b}, c: {c} }}")
            }
            IntensityModel::ExpDecayContagion { a, b, c } => {
                write!(f, "ExpDecayContagion {{ a: {a}, b: {b}, c: {c} }}")
            }
            IntensityModel::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

fn check_coefficients(a: f64, b: f64, c: f64) -> Result<()> {
    for (name, value) in [("a", a), ("b", b), ("c", c)] {
        if !value.is_finite() {
            return Err(ModelError::NonFiniteCoefficient { name, value });
        }
    }
    Ok(())
}

impl IntensityModel {
    pub fn linear(a: f64, b: f64, c: f64) -> Result<Self> {
        check_coefficients(a, b, c)?;
        Ok(IntensityModel::LinearContagion { a, b, c })
    }

    pub fn exp_decay(a: f64, b: f64, c: f64) -> Result<Self> {
        check_coefficients(a, b, c)?;
        Ok(IntensityModel::ExpDecayContagion { a, b, c })
    }

    pub fn custom(model: Arc<dyn CustomIntensity>) -> Self {
        IntensityModel::Custom(model)
    }

    /// Checks that every reachable intensity in a `k`-name book is
    /// non-negative: both hidden states, zero and `k - 1` defaulted others.
    pub fn validate(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(ModelError::EmptyPortfolio);
        }
        let worst = |base: &dyn Fn(usize, usize) -> f64| -> Result<()> {
            for x in 0..2 {
                for n in [0, k - 1] {
                    let v = base(x, n);
                    if v < 0.0 {
                        return Err(ModelError::NegativeIntensity {
                            x,
                            defaults: n,
                            value: v,
                        });
                    }
                }
            }
            Ok(())
        };
        match *self {
            IntensityModel::LinearContagion { a, b, c } => {
                worst(&|x, n| a + b * x as f64 + c * n as f64)
            }
            IntensityModel::ExpDecayContagion { a, b, c } => {
                // the decaying part and the state part must each stay non-negative
                worst(&|x, n| (a + c * n as f64).min(b * x as f64 + (a + c * n as f64)))?;
                if b < 0.0 {
                    return Err(ModelError::NegativeIntensity {
                        x: 1,
                        defaults: 0,
                        value: b,
                    });
                }
                Ok(())
            }
            IntensityModel::Custom(ref m) => {
                let b = m.bound(0.0, k);
                if !b.is_finite() || b < 0.0 {
                    return Err(ModelError::InvalidBound(b));
                }
                Ok(())
            }
        }
    }

    pub fn is_time_homogeneous(&self) -> bool {
        match self {
            IntensityModel::LinearContagion { .. } => true,
            IntensityModel::ExpDecayContagion { .. } => false,
            IntensityModel::Custom(m) => m.time_homogeneous(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            IntensityModel::LinearContagion { .. } | IntensityModel::ExpDecayContagion { .. } => true,
            IntensityModel::Custom(m) => m.symmetric(),
        }
    }

    /// Intensity of a surviving obligor for the built-in families, keyed by
    /// the number of defaulted others.
    #[inline]
    pub(crate) fn symmetric_rate(&self, t: f64, x: usize, defaulted: usize) -> Option<f64> {
        let n = defaulted as f64;
        let x = x as f64;
        match *self {
            IntensityModel::LinearContagion { a, b, c } => Some(a + b * x + c * n),
            IntensityModel::ExpDecayContagion { a, b, c } => Some((a + c * n) * (-t).exp() + b * x),
            IntensityModel::Custom(_) => None,
        }
    }

    fn eval_unchecked(&self, obligor: ObligorId, t: f64, x: usize, port: &PortfolioState) -> f64 {
        match self {
            IntensityModel::Custom(m) => m.intensity(obligor, t, x, port),
            _ => self
                .symmetric_rate(t, x, port.default_count())
                .expect("built-in family"),
        }
    }

    /// `lambda_i(t | defaults, x)` for a surviving obligor.
    pub fn intensity(&self, obligor: ObligorId, t: f64, x: usize, port: &PortfolioState) -> Result<f64> {
        port.check_obligor(obligor)?;
        if port.has_defaulted(obligor) {
            return Err(ModelError::AlreadyDefaulted(obligor));
        }
        if let Some(last) = port.last_default_time() {
            if t < last {
                return Err(ModelError::TimeBeforeLastDefault { t, last });
            }
        }
        Ok(self.eval_unchecked(obligor, t, x, port))
    }

    /// Sum of survivor intensities in each hidden state.
    pub fn total_rate(&self, port: &PortfolioState, t: f64) -> [f64; 2] {
        let survivors = port.survivor_count();
        if survivors == 0 {
            return [0.0, 0.0];
        }
        match self {
            IntensityModel::Custom(_) => {
                let mut out = [0.0; 2];
                for i in port.survivors() {
                    for (x, slot) in out.iter_mut().enumerate() {
                        *slot += self.eval_unchecked(i, t, x, port);
                    }
                }
                out
            }
            _ => {
                let m = port.default_count();
                let s = survivors as f64;
                [
                    s * self.symmetric_rate(t, 0, m).unwrap(),
                    s * self.symmetric_rate(t, 1, m).unwrap(),
                ]
            }
        }
    }

    /// `-(sum over survivors of lambda_i(t | ., x))` for both hidden states.
    pub fn surviving_rate_vector(&self, port: &PortfolioState, t: f64) -> RateVector {
        let r = self.total_rate(port, t);
        RateVector::new(-r[0], -r[1])
    }

    /// Bound on any single-obligor intensity over `[0, horizon]` in a
    /// `k`-name book, over both hidden states and every default configuration.
    pub fn lambda_max(&self, horizon: f64, k: usize) -> f64 {
        let k = k.max(1);
        let top = (k - 1) as f64;
        match *self {
            IntensityModel::LinearContagion { a, b, c } => {
                let mut m: f64 = 0.0;
                for x in [0.0, 1.0] {
                    for n in [0.0, top] {
                        m = m.max(a + b * x + c * n);
                    }
                }
                m
            }
            IntensityModel::ExpDecayContagion { a, b, c } => {
                // e^{-t} <= 1 on [0, horizon]
                let decaying = a.max(a + c * top).max(0.0);
                decaying + b.max(0.0)
            }
            IntensityModel::Custom(ref m) => m.bound(horizon, k),
        }
    }
}

/// Everything needed to describe the economy: hidden chain, observation
/// chain, intensity family and book size.
#[derive(Debug, Clone)]
pub struct CreditModel {
    pub chain: ChainSpec,
    pub obs: ObservationSpec,
    pub intensity: IntensityModel,
    obligors: usize,
}

impl CreditModel {
    /// Validates the intensity family against the worst reachable state.
    pub fn new(chain: ChainSpec, obs: ObservationSpec, intensity: IntensityModel, obligors: usize) -> Result<Self> {
        intensity.validate(obligors)?;
        Ok(CreditModel {
            chain,
            obs,
            intensity,
            obligors,
        })
    }

    pub fn obligors(&self) -> usize {
        self.obligors
    }

    pub fn empty_portfolio(&self) -> PortfolioState {
        PortfolioState::new(self.obligors).expect("obligor count validated at construction")
    }

    pub fn with_intensity(&self, intensity: IntensityModel) -> Result<Self> {
        Self::new(self.chain, self.obs.clone(), intensity, self.obligors)
    }

    pub fn with_obligors(&self, obligors: usize) -> Result<Self> {
        Self::new(self.chain, self.obs.clone(), self.intensity.clone(), obligors)
    }

    pub fn with_chain(&self, chain: ChainSpec) -> Self {
        CreditModel { chain, ..self.clone() }
    }

    pub fn with_obs(&self, obs: ObservationSpec) -> Self {
        CreditModel { obs, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn linear_examples() {
        let m = IntensityModel::linear(1.0, 0.1, 0.1).unwrap();
        let p = PortfolioState::new(3).unwrap();
        assert_abs_diff_eq!(m.intensity(1, 0.0, 0, &p).unwrap(), 1.0);
        let p2 = PortfolioState::with_defaults(3, &[(2, 0.5), (3, 0.7)]).unwrap();
        assert_abs_diff_eq!(m.intensity(1, 1.0, 1, &p2).unwrap(), 1.3, epsilon = 1e-15);
        assert_eq!(m.intensity(2, 1.0, 1, &p2), Err(ModelError::AlreadyDefaulted(2)));
    }

    #[test]
    fn exp_decay_example() {
        let m = IntensityModel::exp_decay(0.001, 0.001, 0.001).unwrap();
        let p = PortfolioState::new(10).unwrap();
        assert_abs_diff_eq!(m.intensity(4, 0.0, 0, &p).unwrap(), 0.001);
        let r = m.surviving_rate_vector(&p, 0.0);
        assert_abs_diff_eq!(r.u0, -0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(r.u1, -0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(m.lambda_max(100.0, 10), 0.011, epsilon = 1e-15);
    }

    #[test]
    fn rate_vector_examples() {
        let m = IntensityModel::linear(1.0, 0.1, 0.1).unwrap();
        let p = PortfolioState::new(3).unwrap();
        for t in [0.0, 2.0, 50.0] {
            let r = m.surviving_rate_vector(&p, t);
            assert_abs_diff_eq!(r.u0, -3.0, epsilon = 1e-14);
            assert_abs_diff_eq!(r.u1, -3.3, epsilon = 1e-14);
        }
        let all = PortfolioState::with_defaults(3, &[(1, 0.1), (2, 0.2), (3, 0.3)]).unwrap();
        assert_eq!(m.surviving_rate_vector(&all, 1.0), RateVector::ZERO);
    }

    #[test]
    fn lambda_max_examples() {
        let m = IntensityModel::linear(1.0, 0.1, 0.1).unwrap();
        assert_abs_diff_eq!(m.lambda_max(5.0, 3), 1.3, epsilon = 1e-15);
        let flat = IntensityModel::linear(0.4, 0.0, 0.0).unwrap();
        assert_eq!(flat.lambda_max(5.0, 17), 0.4);
    }

    #[test]
    fn validation_rejects_negative_reachable_states() {
        assert!(IntensityModel::linear(1.0, -2.0, 0.0).unwrap().validate(3).is_err());
        assert!(IntensityModel::linear(1.0, 0.0, -0.6).unwrap().validate(3).is_err());
        assert!(IntensityModel::linear(1.0, 0.0, -0.4).unwrap().validate(3).is_ok());
        assert!(IntensityModel::exp_decay(0.1, -0.01, 0.0).unwrap().validate(3).is_err());
        assert!(IntensityModel::linear(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn portfolio_invariants() {
        let mut p = PortfolioState::new(3).unwrap();
        p.record_default(2, 1.0).unwrap();
        assert!(p.record_default(2, 2.0).is_err());
        assert!(p.record_default(1, 0.5).is_err());
        assert!(p.record_default(4, 2.0).is_err());
        assert_eq!(p.survivors().collect::<Vec<_>>(), vec![1, 3]);
    }

    fn arb_model() -> impl Strategy<Value = IntensityModel> {
        (0.0..2.0f64, 0.0..1.0f64, 0.0..1.0f64, any::<bool>()).prop_map(|(a, b, c, lin)| {
            if lin {
                IntensityModel::linear(a, b, c).unwrap()
            } else {
                IntensityModel::exp_decay(a, b, c).unwrap()
            }
        })
    }

    proptest! {
        #[test]
        fn contagion_never_lowers_survivor_intensity(m in arb_model(), t in 0.0..10.0f64, x in 0usize..2) {
            let p0 = PortfolioState::new(4).unwrap();
            let p1 = p0.after_default(3, t.max(1e-9)).unwrap();
            let before = m.intensity(1, t.max(1e-9), x, &p0).unwrap();
            let after = m.intensity(1, t.max(1e-9), x, &p1).unwrap();
            prop_assert!(after >= before);
        }

        #[test]
        fn survivors_share_the_same_intensity(m in arb_model(), t in 0.0..10.0f64, x in 0usize..2) {
            let p = PortfolioState::with_defaults(5, &[(2, 1e-6)]).unwrap();
            let t = t + 1e-6;
            let rates: Vec<f64> = p.survivors().map(|i| m.intensity(i, t, x, &p).unwrap()).collect();
            for r in &rates {
                prop_assert!((r - rates[0]).abs() < 1e-15);
            }
            let v = m.surviving_rate_vector(&p, t);
            prop_assert!((v.get(x) + 4.0 * rates[0]).abs() < 1e-12);
        }

        #[test]
        fn lambda_max_dominates(m in arb_model(), t in 0.0..10.0f64, x in 0usize..2, n in 0usize..5) {
            let defaults: Vec<_> = (0..n).map(|i| (i + 2, 1e-6 * (i + 1) as f64)).collect();
            let p = PortfolioState::with_defaults(6, &defaults).unwrap();
            let t = t + 1e-3;
            let v = m.intensity(1, t, x, &p).unwrap();
            prop_assert!(v <= m.lambda_max(10.0, 6) + 1e-12);
        }
    }
}
