//! First-to-default basket value day by day for ten names, with and without
//! an observation-chain jump between days 21 and 22.

use hmm_credit::chain::ChainSpec;
use hmm_credit::filter::{Event, EventHistory, ObservationSpec, YRateSelector};
use hmm_credit::model::{CreditModel, IntensityModel};
use hmm_credit::pricing::{basket_series, rate_per_unit, BasketContract, PricingOptions, RateBasis, TimeUnit};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let basis = match std::env::args().nth(1).as_deref() {
        Some("annual") => RateBasis::Annual,
        _ => RateBasis::PerUnit,
    };
    let selector = match std::env::args().nth(2).as_deref() {
        Some("occupied") => YRateSelector::Occupied,
        _ => YRateSelector::LiteralParity,
    };
    let obs = ObservationSpec::new([0.1, 0.2], [0.2, 0.1], 0)?.with_selector(selector);
    let chain = ChainSpec::new(0.1, 0.1, 0)?;
    let contract = BasketContract::new(rate_per_unit(0.05, TimeUnit::Day, basis), 100.0, 1)?;
    let days: Vec<f64> = (10..=50).map(f64::from).collect();
    let opts = PricingOptions::default();

    let families = [
        ("linear", IntensityModel::linear(0.001, 0.001, 0.001)?),
        ("decay", IntensityModel::exp_decay(0.001, 0.001, 0.001)?),
    ];
    let scenarios = [
        ("quiet", EventHistory::new(vec![], 50.0)?),
        ("y-jump", EventHistory::new(vec![Event::y_jump(21.5)], 50.0)?),
    ];
    for (name, intensity) in &families {
        let model = CreditModel::new(chain, obs.clone(), intensity.clone(), 10)?;
        for (label, history) in &scenarios {
            let series = basket_series(&contract, &model, history, &days, &opts)?;
            let line: Vec<String> = series.iter().map(|(d, v)| format!("{d}:{v:.6}")).collect();
            println!("{name} {label}: {}", line.join(" "));
        }
    }
    Ok(())
}
