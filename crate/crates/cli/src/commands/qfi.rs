use qswitch::hilbert::{lz_moments, PolKet};
use qswitch::metrology::{
    fisher_report, hup_check, multipass_generator_sd, resource_count, switch_generator_sd,
    FisherReport, GeneratorReport, HupCheck,
};
use serde::Serialize;

use super::estimate::HUP_SLACK;
use super::probe_state;
use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::output::{json, Artifacts};

const GENERATOR_TOL: f64 = 1e-4;

/// Normalized precision of an earlier `estimate` run, read from its JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorCampaign {
    pub m: u32,
    pub l: u32,
    pub normalized_precision: f64,
}

impl PriorCampaign {
    /// Extracts the campaign from an `estimate.json` document.
    pub fn from_estimate_json(bytes: &[u8]) -> Option<Self> {
        let v: serde_json::Value = serde_json::from_slice(bytes).ok()?;
        let c = v.get("report")?.get("campaign")?;
        Some(Self {
            m: u32::try_from(c.get("m")?.as_u64()?).ok()?,
            l: u32::try_from(c.get("l")?.as_u64()?).ok()?,
            normalized_precision: c.get("normalized_precision")?.as_f64()?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QfiOutput {
    pub m: u32,
    pub l: u32,
    pub probe_is_lz_eigenstate: bool,
    pub switch: GeneratorReport,
    pub multipass: GeneratorReport,
    pub fisher: FisherReport,
    /// Gate calls inside the switch, `2(m + l)`.
    pub resource_count: u64,
    pub hup: Option<HupCheck>,
    pub notes: Vec<String>,
}

pub fn run(cfg: &ExperimentConfig, prior: Option<PriorCampaign>) -> Result<Artifacts, CliError> {
    let probe = probe_state(cfg, PolKet::plus(), cfg.l)?;
    let (_, dlz) = lz_moments(&probe)?;
    let eigen = dlz < 1e-12;
    let switch = switch_generator_sd(&probe, cfg.m, cfg.l)?;
    let multipass = multipass_generator_sd(&probe, cfg.m)?;
    let theta = cfg.theta_true.map_or(0.0, |a| a.rad());
    let phi0 = cfg.phi0.operating_point().phi0(cfg.m, cfg.l, theta);
    let fisher = fisher_report(cfg.m, cfg.l, cfg.nu as f64, theta, phi0)?;

    let mut notes = Vec::new();
    if !eigen {
        notes.push(
            "probe is not an L_z eigenstate: the switch SD is the quadrature sum 2m*sqrt(dLz^2 + l^2), \
             below the additive 2m*dLz + 2ml; reaching the multi-pass QFI needs an OAM-resolving \
             measurement that the polarization analyzer does not provide"
                .to_string(),
        );
    }
    let hup = match prior {
        Some(pc) if pc.m == cfg.m && pc.l == cfg.l && pc.normalized_precision > 0.0 => {
            Some(hup_check(pc.normalized_precision, switch.delta_h_numeric)?)
        }
        Some(pc) => {
            notes.push(format!(
                "estimate.json is for (m, l) = ({}, {}); uncertainty check skipped",
                pc.m, pc.l
            ));
            None
        }
        None => None,
    };
    let output = QfiOutput {
        m: cfg.m,
        l: cfg.l,
        probe_is_lz_eigenstate: eigen,
        resource_count: resource_count(cfg.m, cfg.l),
        switch,
        multipass,
        fisher,
        hup,
        notes,
    };

    let mut out = Artifacts::default();
    if cfg.output.wants(Format::Json) {
        out.add("qfi.json", json("qfi", cfg, &output));
    }
    let sw = &output.switch;
    let mp = &output.multipass;
    let mut s = format!("qfi (m={}, l={}), probe dLz = {:.6}\n", cfg.m, cfg.l, dlz);
    s += &format!(
        "  switch     dh numeric {:.9}  additive {:.9}  product-probe {:.9}\n",
        sw.delta_h_numeric, sw.delta_h_analytic, sw.delta_h_product_probe
    );
    s += &format!("  multipass  dh numeric {:.9}  analytic {:.9}\n", mp.delta_h_numeric, mp.delta_h_analytic);
    s += &format!(
        "  per-photon FI {:.9e} (16 m^2 l^2 = {}), CRB {:.6e} rad, N_g = {}\n",
        output.fisher.per_photon_fi,
        16.0 * f64::from(cfg.m).powi(2) * f64::from(cfg.l).powi(2),
        output.fisher.crb,
        output.resource_count
    );
    if let Some(h) = output.hup {
        s += &format!("  uncertainty product of last campaign {:.6}\n", h.product);
    }
    for n in &output.notes {
        s += &format!("  note: {n}\n");
    }
    out.summary = s;

    let target = if eigen { sw.delta_h_analytic } else { sw.delta_h_product_probe };
    let dev = ((sw.delta_h_numeric - target) / target).abs();
    out.check(dev <= GENERATOR_TOL, || format!("switch generator SD off by {dev:.3e}"));
    let mp_dev = mp.relative_deviation;
    out.check(mp_dev <= GENERATOR_TOL, || format!("multi-pass generator SD off by {mp_dev:.3e}"));
    if let Some(h) = output.hup {
        out.check(h.product >= 0.5 * (1.0 - HUP_SLACK), || {
            format!("uncertainty product {:.4} below 1/2 beyond the statistical slack", h.product)
        });
    }
    Ok(out)
}
