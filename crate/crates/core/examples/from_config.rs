//! Builds everything from a TOML run configuration (default: the bundled
//! reference CDS setup) and prices with it.

use hmm_credit::cli::RunConfig;
use hmm_credit::pricing::{cds_legs, CdsContract};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/cds_reference.toml").to_string());
    let cfg = RunConfig::load(path.as_ref())?;
    let model = cfg.model()?;
    let contract = CdsContract::new(cfg.discount_rate(), cfg.pricing.expiry)?;
    let legs = cds_legs(&contract, &model, &cfg.pricing_options())?;
    println!("protection leg {:.6e}", legs.protection);
    println!("premium leg    {:.6e}", legs.annuity);
    println!("premium        {:.6e}", legs.premium()?);
    println!("\neffective configuration:\n{}", cfg.to_toml());
    Ok(())
}
