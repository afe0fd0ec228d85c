use qswitch::montecarlo::{scaling_study_with, ScalingReport};
use qswitch::QsError;
use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::output::{csv, fmt_f64, json, Artifacts};
use crate::plot::scaling_svg;

#[derive(Debug, Clone, Serialize)]
pub struct ScalingOutput {
    pub nu: u64,
    pub trials_per_pair: usize,
    /// `exp(intercept)`: the common gap implied by the regression.
    pub regression_gap: f64,
    pub study: ScalingReport,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    if cfg.pairs.is_empty() {
        return Err(CliError::Config("field `pairs`: `scaling` needs a list of (m, l) pairs".into()));
    }
    let base = cfg.campaign()?;
    let study = scaling_study_with(&cfg.pairs, &base, |m, l| {
        cfg.noise_model_for(m, l).map_err(|e| QsError::InvalidParameter(e.to_string()))
    })
    .map_err(|e| match e {
        QsError::InsufficientPairs(n) => {
            CliError::Config(format!("field `pairs`: {n} pairs given, regression needs at least 3"))
        }
        e => e.into(),
    })?;
    let output = ScalingOutput {
        nu: cfg.nu,
        trials_per_pair: cfg.trials,
        regression_gap: study.intercept.exp(),
        study,
    };
    let pts = &output.study.points;

    let mut out = Artifacts::default();
    if cfg.output.wants(Format::Csv) {
        let rows = pts.iter().map(|p| {
            vec![
                p.m.to_string(),
                p.l.to_string(),
                fmt_f64(p.fourml),
                fmt_f64(p.normalized_precision),
                fmt_f64(p.crb_normalized),
                fmt_f64(p.gap_factor),
            ]
        });
        out.add("scaling.csv", csv(&["m", "l", "fourml", "rmse_norm", "crb", "gap"], rows));
    }
    if cfg.output.wants(Format::Json) {
        out.add("scaling.json", json("scaling", cfg, &output));
    }
    if cfg.output.wants(Format::Svg) {
        let xy: Vec<_> = pts.iter().map(|p| (p.fourml, p.normalized_precision)).collect();
        out.add("scaling.svg", scaling_svg(&xy)?.into_bytes());
    }
    let mut s = format!("scaling over {} pairs (nu={}, trials={})\n", pts.len(), cfg.nu, cfg.trials);
    s += "      m     l    4ml   rmse*sqrt(nu)   1/(4ml)       gap\n";
    for p in pts {
        s += &format!(
            "  {:>5} {:>5} {:>6} {:>14.6e} {:>10.4e} {:>9.4}\n",
            p.m, p.l, p.fourml, p.normalized_precision, p.crb_normalized, p.gap_factor
        );
    }
    s += &format!(
        "  slope {:.4}, intercept {:.4} (gap {:.4})\n",
        output.study.slope, output.study.intercept, output.regression_gap
    );
    out.summary = s;
    let slope = output.study.slope;
    out.check((slope + 1.0).abs() <= 0.05, || format!("log-log slope {slope:.4} outside -1 +/- 0.05"));
    Ok(out)
}
