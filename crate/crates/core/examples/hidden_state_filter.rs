//! Posterior of the hidden state as observation jumps and defaults arrive.

use hmm_credit::chain::ChainSpec;
use hmm_credit::filter::{no_event_posterior, run_filter, Event, EventHistory, FilterOptions, MgfMode, ObservationSpec};
use hmm_credit::model::{CreditModel, IntensityModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = CreditModel::new(
        ChainSpec::new(0.3, 0.2, 0)?,
        ObservationSpec::new([0.2, 0.9], [0.7, 0.15], 0)?,
        IntensityModel::linear(0.3, 0.8, 0.2)?,
        4,
    )?;
    let history = EventHistory::new(
        vec![
            Event::y_jump(0.6),
            Event::default(1.1, 3),
            Event::y_jump(1.8),
            Event::default(2.4, 1),
        ],
        4.0,
    )?;

    let opts = FilterOptions::default();
    println!("nothing seen by t = 1: P(X = 1) = {:.6}", no_event_posterior(1.0, &model, &opts)?.p1);
    println!("{:>6} {:>10} {:>10}", "time", "P(X=1)", "separated");
    let literal = FilterOptions {
        mode: MgfMode::PaperLiteral,
        ..opts
    };
    let exact = run_filter(&history, &model, &opts)?;
    let other = run_filter(&history, &model, &literal)?;
    for ((t, p), (_, q)) in exact.iter().zip(&other) {
        println!("{t:>6.2} {:>10.6} {:>10.6}", p.p1, q.p1);
    }
    Ok(())
}
