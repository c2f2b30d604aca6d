//! Joint density, joint survival and the law of the number of defaults,
//! before and after information arrives.

use hmm_credit::chain::ChainSpec;
use hmm_credit::dist::{
    count_distribution, joint_density, joint_survival, ordered_survival, DensityQuery, DistContext, DistOptions,
};
use hmm_credit::filter::{Event, EventHistory, FilterOptions, ObservationSpec};
use hmm_credit::model::{CreditModel, IntensityModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = CreditModel::new(
        ChainSpec::new(0.1, 0.1, 0)?,
        ObservationSpec::new([0.1, 0.2], [0.2, 0.1], 0)?,
        IntensityModel::linear(1.0, 0.1, 0.1)?,
        3,
    )?;
    let opts = DistOptions::default();

    let start = DistContext::at_start(&model);
    let q = DensityQuery::new(&start, &[(1, 0.2), (2, 0.5), (3, 1.1)])?;
    println!("density at (0.2, 0.5, 1.1): {:.6e}", joint_density(&start, &q, &opts)?);
    let s = joint_survival(&start, &[(1, 0.3), (2, 0.6)], &opts)?;
    println!("P(tau1 > 0.3, tau2 > 0.6) = {:.6} ({:?})", s.value, s.method);

    // one name has gone and the observation chain has moved
    let history = EventHistory::new(vec![Event::y_jump(0.2), Event::default(0.4, 2)], 0.5)?;
    let later = DistContext::from_history(&model, &history, &FilterOptions::default())?;
    println!("posterior at 0.5: P(X = 1) = {:.4}", later.posterior.p1);
    for s in [0.75, 1.0, 2.0] {
        let law = count_distribution(&later, s, &opts)?;
        let shown: Vec<String> = law.iter().map(|p| format!("{p:.4}")).collect();
        println!(
            "s = {s}: P(N = 1, 2, 3) = [{}], P(second default after s) = {:.4}",
            shown.join(", "),
            ordered_survival(&later, 2, s, &opts)?
        );
    }
    Ok(())
}
