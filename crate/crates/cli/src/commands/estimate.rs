use qswitch::hilbert::PolKet;
use qswitch::metrology::{hup_check, switch_generator_sd, HupCheck};
use qswitch::montecarlo::{run_campaign, EstimationReport};
use serde::Serialize;

use super::probe_state;
use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::output::{csv, fmt_f64, json, Artifacts};
use crate::units::{from_rad, AngleUnit};

/// Allowed statistical shortfall on `δθ·Δh ≥ ½`.
pub const HUP_SLACK: f64 = 0.02;

#[derive(Debug, Clone, Serialize)]
pub struct AngleTriple {
    pub rad: f64,
    pub deg: f64,
    pub arcsec: f64,
}

impl AngleTriple {
    pub fn new(rad: f64) -> Self {
        Self { rad, deg: from_rad(rad, AngleUnit::Deg), arcsec: from_rad(rad, AngleUnit::Arcsec) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateOutput {
    pub theta_true: AngleTriple,
    pub mean: AngleTriple,
    pub rmse_defined: bool,
    pub rmse: Option<AngleTriple>,
    pub crb: AngleTriple,
    /// Generator SD of the switch on the configured probe.
    pub delta_h_qs: f64,
    /// `δθ·√ν` against `Δh_QS`: the per-photon uncertainty product.
    pub hup: Option<HupCheck>,
    pub campaign: EstimationReport,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let campaign = cfg.campaign()?;
    let report = run_campaign(&campaign)?;
    let probe = probe_state(cfg, PolKet::plus(), cfg.l)?;
    let delta_h = switch_generator_sd(&probe, cfg.m, cfg.l)?.delta_h_numeric;
    let hup = match report.normalized_precision {
        Some(np) if np > 0.0 => Some(hup_check(np, delta_h)?),
        _ => None,
    };
    let output = EstimateOutput {
        theta_true: AngleTriple::new(report.theta_true),
        mean: AngleTriple::new(report.mean),
        rmse_defined: report.rmse.is_some(),
        rmse: report.rmse.map(AngleTriple::new),
        crb: AngleTriple::new(report.crb),
        delta_h_qs: delta_h,
        hup,
        campaign: report.clone(),
    };

    let mut out = Artifacts::default();
    if cfg.output.wants(Format::Csv) {
        let rows = report.trials.iter().map(|t| {
            vec![t.index.to_string(), t.k.to_string(), t.nu.to_string(), fmt_f64(t.estimate)]
        });
        out.add("estimate.csv", csv(&["trial", "k", "nu", "theta_hat_rad"], rows));
    }
    if cfg.output.wants(Format::Json) {
        out.add("estimate.json", json("estimate", cfg, &output));
    }
    out.summary = summary(&output);
    if let Some(h) = hup {
        out.check(h.product >= 0.5 * (1.0 - HUP_SLACK), || {
            format!("uncertainty product {:.4} below 1/2 beyond the statistical slack", h.product)
        });
    }
    Ok(out)
}

fn summary(o: &EstimateOutput) -> String {
    let r = &o.campaign;
    let opt = |v: Option<f64>| v.map_or("undefined (needs >= 2 trials)".to_string(), |x| format!("{x:.6e}"));
    let mut s = format!(
        "estimate (m={}, l={}, nu={}, trials={})\n",
        r.m,
        r.l,
        r.nu,
        r.trials.len()
    );
    s += &format!(
        "  theta_true          {:.6e} rad = {:.6} deg = {:.4} arcsec\n",
        o.theta_true.rad, o.theta_true.deg, o.theta_true.arcsec
    );
    s += &format!("  mean theta_hat      {:.9e} rad\n", o.mean.rad);
    match &o.rmse {
        Some(a) => s += &format!("  RMSE                {:.6e} rad = {:.6} arcsec\n", a.rad, a.arcsec),
        None => s += "  RMSE                undefined (needs >= 2 trials)\n",
    }
    s += &format!("  RMSE * sqrt(nu)     {}\n", opt(r.normalized_precision));
    s += &format!("  CRB                 {:.6e} rad = {:.6} arcsec\n", o.crb.rad, o.crb.arcsec);
    s += &format!("  gap factor          {}\n", opt(r.gap_factor));
    s += &format!("  ideal enhancement   {}\n", r.ideal_enhancement);
    s += &format!("  practical enh.      {}\n", opt(r.practical_enhancement));
    if let Some(h) = o.hup {
        s += &format!("  delta_h_QS          {:.6}\n  uncertainty product {:.6}\n", o.delta_h_qs, h.product);
    }
    s
}
