//! CDS premium for three names, and how it moves with each intensity
//! coefficient.

use hmm_credit::chain::ChainSpec;
use hmm_credit::filter::ObservationSpec;
use hmm_credit::model::{CreditModel, IntensityModel};
use hmm_credit::pricing::{premium_sensitivity, CdsContract, Coefficient, PricingOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = CreditModel::new(
        ChainSpec::new(0.1, 0.1, 0)?,
        ObservationSpec::new([0.1, 0.2], [0.2, 0.1], 0)?,
        IntensityModel::linear(1.0, 0.1, 0.1)?,
        3,
    )?;
    let contract = CdsContract::new(0.05, 5.0)?;
    let opts = PricingOptions::default();

    let sweeps = [
        (Coefficient::A, vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0]),
        (Coefficient::B, vec![0.0, 0.1, 0.25, 0.5, 1.0, 2.0]),
        (Coefficient::C, vec![0.0, 0.1, 0.25, 0.5, 1.0, 2.0]),
    ];
    for (coef, grid) in sweeps {
        println!("premium against {}", coef.name());
        for row in premium_sensitivity(&contract, &model, coef, &grid, &opts)? {
            println!("  {:>5} {:.6e}", row.value, row.premium);
        }
    }
    Ok(())
}
