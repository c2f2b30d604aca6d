use std::fmt::Write as _;
use std::path::Path;

use super::{CliError, RunConfig};
use crate::dist::{count_distribution, joint_density, DensityQuery, DistContext};
use crate::filter::{run_filter, EventHistory};
use crate::fmt_g12;
use crate::mc::{simulate_batch, write_samples_csv, SimStart};
use crate::model::ObligorId;
use crate::pricing::{
    basket_series, cds_legs, premium_sensitivity, write_basket_csv, write_sensitivity_csv, BasketContract,
    CdsContract, Coefficient,
};
use crate::validation::{run_validation, ValidationSettings};

fn history(events: Option<&Path>, horizon: f64) -> Result<EventHistory, CliError> {
    match events {
        None => Ok(EventHistory::empty(horizon)?),
        Some(p) => {
            let file = std::fs::File::open(p).map_err(|e| CliError::Input(format!("cannot open {}: {e}", p.display())))?;
            EventHistory::read_csv(std::io::BufReader::new(file), horizon)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
        }
    }
}

pub(super) fn filter(cfg: &RunConfig, events: Option<&Path>, horizon: Option<f64>) -> Result<String, CliError> {
    let model = cfg.model()?;
    let h = history(events, horizon.unwrap_or(cfg.pricing.t))?;
    let mut out = String::from("time,p_x0,p_x1\n");
    for (t, p) in run_filter(&h, &model, &cfg.filter_options())? {
        writeln!(out, "{},{},{}", fmt_g12(t), fmt_g12(p.p0), fmt_g12(p.p1)).expect("string write");
    }
    Ok(out)
}

/// Parses `a=0.5:2:7` (or `coef=a:0.5:2:7`) into a coefficient and an
/// evenly spaced grid including both ends.
pub(super) fn parse_sweep(spec: &str) -> Result<(Coefficient, Vec<f64>), CliError> {
    let bad = || CliError::Config(format!("sweep must look like a=START:STOP:STEPS, got {spec:?}"));
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    let (name, range) = if name == "coef" { range.split_once(':').ok_or_else(bad)? } else { (name, range) };
    let coef: Coefficient = name.trim().parse()?;
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, steps] = parts[..] else { return Err(bad()) };
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
    let steps: usize = steps.trim().parse().map_err(|_| bad())?;
    let grid = match steps {
        0 => return Err(bad()),
        1 => vec![start],
        n => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
    };
    Ok((coef, grid))
}

pub(super) fn price_cds(cfg: &RunConfig, sweep: Option<&str>) -> Result<String, CliError> {
    let model = cfg.model()?;
    let contract = CdsContract::new(cfg.discount_rate(), cfg.pricing.expiry)?;
    let opts = cfg.pricing_options();
    let mut buf = Vec::new();
    match sweep {
        Some(s) => {
            let (coef, grid) = parse_sweep(s)?;
            let rows = premium_sensitivity(&contract, &model, coef, &grid, &opts)?;
            write_sensitivity_csv(coef, &rows, &mut buf).expect("in-memory write");
        }
        None => {
            let legs = cds_legs(&contract, &model, &opts)?;
            let y = legs.premium()?;
            let text = format!(
                "quantity,value\npremium,{}\nprotection_leg,{}\npremium_leg,{}\n",
                fmt_g12(y),
                fmt_g12(legs.protection),
                fmt_g12(legs.annuity)
            );
            buf.extend_from_slice(text.as_bytes());
        }
    }
    Ok(String::from_utf8(buf).expect("ascii output"))
}

pub(super) fn price_basket(cfg: &RunConfig, events: Option<&Path>, scenario: &str) -> Result<String, CliError> {
    let model = cfg.model()?;
    let p = &cfg.pricing;
    let contract = BasketContract::new(cfg.discount_rate(), p.expiry, p.k)?;
    let end = p.series_end.max(p.t);
    let count = ((end - p.t) / p.series_step + 1e-9).floor() as usize + 1;
    let days: Vec<f64> = (0..count).map(|i| p.t + i as f64 * p.series_step).collect();
    let h = history(events, end)?;
    let rows = basket_series(&contract, &model, &h, &days, &cfg.pricing_options())?;
    let mut buf = Vec::new();
    write_basket_csv(&rows, scenario, &mut buf, true).expect("in-memory write");
    Ok(String::from_utf8(buf).expect("ascii output"))
}

pub(super) fn simulate(cfg: &RunConfig, paths: Option<usize>, horizon: Option<f64>) -> Result<String, CliError> {
    let model = cfg.model()?;
    let paths = paths.unwrap_or(cfg.numerics.mc_paths);
    let horizon = horizon.unwrap_or(cfg.pricing.expiry);
    let records = simulate_batch(
        &model,
        &SimStart::initial(&model),
        horizon,
        paths,
        cfg.numerics.seed,
        &cfg.sim_options(),
    )?;
    let defaults: usize = records.iter().map(Vec::len).sum();
    let hit = records.iter().filter(|r| !r.is_empty()).count();
    eprintln!(
        "paths {paths}, horizon {}, defaults {defaults}, paths with a default {hit} ({})",
        fmt_g12(horizon),
        fmt_g12(hit as f64 / paths as f64)
    );
    let mut buf = Vec::new();
    write_samples_csv(&records, &mut buf).expect("in-memory write");
    Ok(String::from_utf8(buf).expect("ascii output"))
}

fn context<'a>(cfg: &RunConfig, model: &'a crate::model::CreditModel, events: Option<&Path>) -> Result<DistContext<'a>, CliError> {
    let h = history(events, cfg.pricing.t)?;
    Ok(DistContext::from_history(model, &h, &cfg.filter_options())?)
}

pub(super) fn density(cfg: &RunConfig, times: &[String], events: Option<&Path>) -> Result<String, CliError> {
    let model = cfg.model()?;
    let ctx = context(cfg, &model, events)?;
    let mut assignment: Vec<(ObligorId, f64)> = Vec::with_capacity(times.len());
    for item in times {
        let parsed = item
            .split_once(':')
            .and_then(|(id, t)| Some((id.trim().parse().ok()?, t.trim().parse().ok()?)));
        assignment.push(parsed.ok_or_else(|| CliError::Input(format!("expected obligor:time, got {item:?}")))?);
    }
    let q = DensityQuery::new(&ctx, &assignment)?;
    let f = joint_density(&ctx, &q, &cfg.dist_options())?;
    Ok(format!("quantity,value\ndensity,{}\n", fmt_g12(f)))
}

pub(super) fn ordered(cfg: &RunConfig, at: &[f64], events: Option<&Path>) -> Result<String, CliError> {
    let model = cfg.model()?;
    let ctx = context(cfg, &model, events)?;
    let m = ctx.portfolio.default_count();
    let mut out = String::from("s,k,interval_prob,survival\n");
    for &s in at {
        let law = count_distribution(&ctx, s, &cfg.dist_options())?;
        let mut below = 0.0;
        for (i, p) in law.iter().enumerate() {
            writeln!(out, "{},{},{},{}", fmt_g12(s), m + i, fmt_g12(*p), fmt_g12(below)).expect("string write");
            below += p;
        }
    }
    Ok(out)
}

pub(super) fn validate(cfg: &RunConfig, paths: usize, negative_control: bool) -> Result<(String, usize), CliError> {
    let settings = ValidationSettings {
        seed: cfg.numerics.seed,
        paths,
        density_scale: if negative_control { 1.01 } else { 1.0 },
    };
    let report = run_validation(&settings).map_err(|e| CliError::Numerical(e.to_string()))?;
    for c in &report.checks {
        eprintln!("{:<34} {:>9.3}s", c.name, c.runtime.as_secs_f64());
    }
    let failed = report.checks.iter().filter(|c| !c.passed()).count();
    Ok((report.to_csv(), failed))
}
