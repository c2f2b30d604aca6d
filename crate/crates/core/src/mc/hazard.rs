//! Accumulated default hazard along a known hidden-state path, and its inverse.

use super::paths::ChainPath;
use crate::model::{IntensityModel, ObligorId, PortfolioState};
use crate::quad::{integrate, QuadOptions};

const BISECTION_TOL: f64 = 1e-12;

/// Hazard of `obligor` over `[u, v]` with the default record fixed and the
/// hidden state fixed at `x`.
fn piece_hazard(model: &IntensityModel, obligor: ObligorId, port: &PortfolioState, x: usize, u: f64, v: f64) -> f64 {
    let m = port.default_count() as f64;
    let xf = x as f64;
    match *model {
        IntensityModel::LinearContagion { a, b, c } => (a + b * xf + c * m) * (v - u),
        IntensityModel::ExpDecayContagion { a, b, c } => {
            // e^{-u} - e^{-v} = e^{-u} (1 - e^{-(v-u)})
            (a + c * m) * (-u).exp() * -(-(v - u)).exp_m1() + b * xf * (v - u)
        }
        IntensityModel::Custom(ref f) => {
            let opts = QuadOptions {
                rel_tol: 1e-12,
                abs_tol: 1e-15,
                budget: 100_000,
            };
            match integrate(|s| f.intensity(obligor, s, x, port), u, v, &opts) {
                Ok(r) => r.value,
                Err(crate::quad::QuadError::BudgetExhausted { value, .. }) => value,
                Err(_) => f64::NAN,
            }
        }
    }
}

/// Solves `piece_hazard(u, u + d) = target` for `d` in `[0, v - u]`, given
/// that the full piece carries at least `target`.
fn piece_inverse(model: &IntensityModel, obligor: ObligorId, port: &PortfolioState, x: usize, u: f64, v: f64, target: f64) -> f64 {
    if let IntensityModel::LinearContagion { a, b, c } = *model {
        let rate = a + b * x as f64 + c * port.default_count() as f64;
        return (target / rate).min(v - u);
    }
    let (mut lo, mut hi) = (u, v);
    while hi - lo > BISECTION_TOL * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if piece_hazard(model, obligor, port, x, u, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi - u
}

/// Hazard accumulated by `obligor` up to `t`, summing over the stretches
/// between the defaults recorded in `port` (each with its own default set).
pub fn total_hazard(obligor: ObligorId, t: f64, port: &PortfolioState, x: &ChainPath, model: &IntensityModel) -> f64 {
    let mut cuts = vec![x.start()];
    cuts.extend(port.defaults().iter().map(|d| d.1).filter(|&s| s > x.start() && s < t));
    cuts.push(t);
    let defaults = port.defaults();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let known = defaults.partition_point(|d| d.1 <= w[0]);
        let running = PortfolioState::with_defaults(port.obligors(), &defaults[..known])
            .expect("prefix of a valid record");
        for (u, v, s) in x.pieces(w[0], w[1]) {
            total += piece_hazard(model, obligor, &running, s, u, v);
        }
    }
    total
}

/// Hazard of `obligor` over `[from, to]` with the default record held fixed.
pub fn segment_hazard(obligor: ObligorId, from: f64, to: f64, port: &PortfolioState, x: &ChainPath, model: &IntensityModel) -> f64 {
    x.pieces(from, to)
        .into_iter()
        .map(|(u, v, s)| piece_hazard(model, obligor, port, s, u, v))
        .sum()
}

/// Smallest `d >= 0` with hazard over `[from, from + d]` reaching `target`,
/// with the default record held fixed. `None` when the path ends first.
pub fn inverse_hazard(
    target: f64,
    obligor: ObligorId,
    port: &PortfolioState,
    x: &ChainPath,
    model: &IntensityModel,
    from: f64,
) -> Option<f64> {
    if target <= 0.0 {
        return Some(0.0);
    }
    let mut left = target;
    for (u, v, s) in x.pieces(from, x.end()) {
        let h = piece_hazard(model, obligor, port, s, u, v);
        if h >= left {
            return Some(u - from + piece_inverse(model, obligor, port, s, u, v, left));
        }
        left -= h;
    }
    None
}
