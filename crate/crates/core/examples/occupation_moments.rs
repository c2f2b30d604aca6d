//! Transition law of the hidden chain, moment matrices of its occupation
//! times, and the frozen-rate step length for a given error budget.

use hmm_credit::chain::{mgf_homogeneous, phi_homogeneous, phi_inhomogeneous, step_size, ChainSpec, RateVector, TimeRateFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ChainSpec::new(0.1, 0.3, 0)?;
    println!("stationary law {:?}", spec.stationary());
    for t in [0.5, 2.0, 10.0] {
        println!("P({t}) = {:?}", spec.transition_matrix(t)?.0);
    }

    let u = RateVector::new(-0.2, -0.5);
    for t in [1.0, 5.0] {
        let phi = phi_homogeneous(&spec, u, t)?;
        println!("E[exp(-0.2 T0 - 0.5 T1); X_t = j | X_0 = i] at t = {t}: {:?}", phi.0);
        println!("  given X_t = 1: {:.6}", mgf_homogeneous(&spec, u, 0, 1, t)?);
    }

    // default exposure that fades with time
    let fading = TimeRateFunction::new(|s| RateVector::new(-0.1 * (-s).exp(), -0.4 * (-s).exp()), 0.4);
    for eps in [1e-2, 1e-4] {
        let phi = phi_inhomogeneous(&spec, &fading, 0.0, 3.0, eps)?;
        println!("eps {eps:e}: step {:.5}, Phi(0, 3) = {:?}", step_size(eps, 0.4)?, phi.0);
    }
    Ok(())
}
