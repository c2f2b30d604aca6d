//! Default times by total hazard construction, set against the closed-form
//! first-default law.

use hmm_credit::chain::ChainSpec;
use hmm_credit::dist::{first_default_survival, DistContext, DistOptions};
use hmm_credit::filter::ObservationSpec;
use hmm_credit::mc::{simulate_default_times, simulate_map, survival_curve, SimOptions, SimStart};
use hmm_credit::model::{CreditModel, IntensityModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = CreditModel::new(
        ChainSpec::new(0.1, 0.1, 0)?,
        ObservationSpec::new([0.1, 0.2], [0.2, 0.1], 0)?,
        IntensityModel::linear(1.0, 0.1, 0.1)?,
        3,
    )?;
    println!("one path: {:?}", simulate_default_times(&model, 5.0, 42)?);

    let paths = 50_000;
    let firsts = simulate_map(&model, &SimStart::initial(&model), 5.0, paths, 42, &SimOptions::default(), |r| {
        r.first().map(|d| d.1)
    })?;
    let grid = [0.1, 0.25, 0.5, 1.0, 2.0];
    let empirical = survival_curve(&firsts, &grid);
    let exact = first_default_survival(&DistContext::at_start(&model), &grid, &DistOptions::default())?;
    println!("{:>5} {:>10} {:>10} {:>9}", "s", "simulated", "exact", "std err");
    for ((s, e), x) in grid.iter().zip(&empirical).zip(&exact) {
        println!("{s:>5} {:>10.5} {x:>10.5} {:>9.2e}", e.value, e.std_error);
    }
    Ok(())
}
