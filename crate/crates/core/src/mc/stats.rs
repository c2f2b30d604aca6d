//! Estimates with standard errors, and goodness-of-fit statistics.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::McError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    /// True when `target` lies within `k` standard errors (plus `slack`).
    pub fn covers(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorSpec {
    Mean,
    /// Fraction of samples strictly above the threshold.
    Exceedance(f64),
    /// Fraction of samples at or below the threshold.
    AtMost(f64),
}

pub fn empirical_stats(samples: &[f64], spec: EstimatorSpec) -> Result<Estimate, McError> {
    if samples.len() < 2 {
        return Err(McError::TooFewSamples(samples.len()));
    }
    match spec {
        EstimatorSpec::Mean => Ok(mean_estimate(samples)),
        EstimatorSpec::Exceedance(t) => Ok(proportion(samples.iter().filter(|&&x| x > t).count(), samples.len())),
        EstimatorSpec::AtMost(t) => Ok(proportion(samples.iter().filter(|&&x| x <= t).count(), samples.len())),
    }
}

fn mean_estimate(samples: &[f64]) -> Estimate {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Estimate {
        value: mean,
        std_error: (var / n).sqrt(),
        samples: samples.len(),
    }
}

/// Binomial proportion with its plug-in standard error.
pub fn proportion(hits: usize, n: usize) -> Estimate {
    let p = hits as f64 / n as f64;
    Estimate {
        value: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        samples: n,
    }
}

/// Empirical survival `P(T > t)` at each grid time; `None` marks a censored
/// sample (beyond every grid time).
pub fn survival_curve(samples: &[Option<f64>], grid: &[f64]) -> Vec<Estimate> {
    let mut times: Vec<f64> = samples.iter().flatten().copied().collect();
    times.sort_by(f64::total_cmp);
    let n = samples.len();
    grid.iter()
        .map(|&t| {
            let failed = times.partition_point(|&x| x <= t);
            proportion(n - failed, n)
        })
        .collect()
}

/// Kolmogorov-Smirnov distance between a right-censored sample and a model
/// CDF, over `[0, horizon]`.
///
/// `sorted` holds the uncensored times in increasing order, `cdf_at_sorted`
/// the model CDF at each of them, and `n` the total sample size including
/// censored draws (all beyond `horizon`).
pub fn ks_distance(sorted: &[f64], cdf_at_sorted: &[f64], n: usize, cdf_at_horizon: f64) -> f64 {
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &f) in cdf_at_sorted.iter().enumerate() {
        d = d.max((i as f64 + 1.0) / nf - f).max(f - i as f64 / nf);
    }
    // flat stretch after the last uncensored point
    d.max((sorted.len() as f64 / nf - cdf_at_horizon).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Cells after pooling sparse ones.
    pub cells: usize,
}

/// Pearson goodness of fit. Cells with expected count below `min_expected`
/// are pooled into one; `probs` should sum to one.
pub fn chi_square(observed: &[u64], probs: &[f64], min_expected: f64) -> Result<ChiSquareResult, McError> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(McError::TooFewSamples(observed.len()));
    }
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * nf;
        if e < min_expected {
            pooled_obs += o as f64;
            pooled_exp += e;
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    } else if pooled_obs > 0.0 {
        stat = f64::INFINITY;
    }
    if cells < 2 {
        return Err(McError::TooFewSamples(cells));
    }
    let dof = cells - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    let p_value = if stat.is_finite() { 1.0 - dist.cdf(stat) } else { 0.0 };
    Ok(ChiSquareResult {
        statistic: stat,
        dof,
        p_value,
        cells,
    })
}
