use std::f64::consts::TAU;

use qswitch::hilbert::PolKet;
use qswitch::montecarlo::{
    fit_fringe, noisy_probability, sample_counts, trial_rng, FitFlags, FitReport, SweepPoint,
};
use qswitch::switch::{ideal_probability, simulate_probability, SwitchParams};
use qswitch::QsError;
use rayon::prelude::*;
use serde::Serialize;

use super::{probe_state, require};
use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::output::{csv, fmt_f64, json, Artifacts};
use crate::plot::fringe_svg;

#[derive(Debug, Clone, Serialize)]
pub struct FringeReport {
    pub m: u32,
    pub l: u32,
    pub phi0: f64,
    pub points: usize,
    pub trials_per_point: usize,
    pub nu: u64,
    pub expected_frequency: f64,
    pub fit: FitReport,
    pub relative_frequency_error: f64,
    /// Periods of `4ml` covered by the sweep.
    pub fringe_count: f64,
    /// Largest `|P_pipeline − P_law|` over the sweep.
    pub max_pipeline_deviation: f64,
}

struct Row {
    theta: f64,
    p_pipeline: f64,
    p_law: f64,
    mean: f64,
    sem: f64,
    k_total: u64,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let sweep = require(cfg.theta_sweep, "theta_sweep", "fringe")?;
    cfg.require_even_m()?;
    let noise = cfg.noise_model_for(cfg.m, cfg.l)?;
    let phi0 = cfg.phi0.operating_point().phi0(cfg.m, cfg.l, 0.0);
    let base = SwitchParams::new(cfg.m, cfg.l, 0.0, phi0)?;
    let optics = cfg.optics();
    let input = probe_state(cfg, PolKet::h(), cfg.l)?;
    let thetas = sweep.points();
    let trials = cfg.trials;

    let rows: Vec<Row> = thetas
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| -> Result<Row, QsError> {
            let p = base.with_theta(theta);
            let p_pipeline = simulate_probability(&p, &optics, &input)?;
            let mut k_total = 0u64;
            let (mut s1, mut s2) = (0.0, 0.0);
            for t in 0..trials {
                let mut rng = trial_rng(cfg.seed, (i * trials + t) as u64);
                let draws = noise.draw(&mut rng);
                let pr = noisy_probability(theta, &p, &noise, draws);
                let k = sample_counts(pr, cfg.nu, &mut rng);
                k_total += k;
                let f = k as f64 / cfg.nu as f64;
                s1 += f;
                s2 += f * f;
            }
            let n = trials as f64;
            let mean = s1 / n;
            let sem = if trials > 1 {
                ((s2 - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
            } else {
                f64::NAN
            };
            Ok(Row { theta, p_pipeline, p_law: ideal_probability(&p), mean, sem, k_total })
        })
        .collect::<Result<_, _>>()?;

    let total_nu = cfg.nu * trials as u64;
    let sweep_points: Vec<SweepPoint> =
        rows.iter().map(|r| SweepPoint { theta: r.theta, k: r.k_total, nu: total_nu }).collect();
    let fit = fit_fringe(&sweep_points, &base, FitFlags::all())?;
    let expected = base.leverage();
    let span = thetas[thetas.len() - 1] - thetas[0];
    let max_dev = rows.iter().map(|r| (r.p_pipeline - r.p_law).abs()).fold(0.0, f64::max);
    let report = FringeReport {
        m: cfg.m,
        l: cfg.l,
        phi0,
        points: rows.len(),
        trials_per_point: trials,
        nu: cfg.nu,
        expected_frequency: expected,
        relative_frequency_error: ((fit.frequency - expected) / expected).abs(),
        fringe_count: span * expected / TAU,
        max_pipeline_deviation: max_dev,
        fit: fit.clone(),
    };

    let mut out = Artifacts::default();
    if cfg.output.wants(Format::Csv) {
        let body = rows.iter().map(|r| {
            vec![fmt_f64(r.theta), fmt_f64(r.p_pipeline), fmt_f64(r.mean), fmt_f64(r.sem), fmt_f64(fit.model(r.theta))]
        });
        out.add("fringe.csv", csv(&["theta_rad", "p_ideal", "p_noisy_mean", "p_noisy_sem", "fit_curve"], body));
    }
    if cfg.output.wants(Format::Json) {
        out.add("fringe.json", json("fringe", cfg, &report));
    }
    if cfg.output.wants(Format::Svg) {
        let pts: Vec<_> = rows.iter().map(|r| (r.theta, r.mean, r.sem)).collect();
        let title = format!("m = {}, l = {}", cfg.m, cfg.l);
        out.add("fringe.svg", fringe_svg(&title, &pts, |t| fit.model(t))?.into_bytes());
    }
    out.summary = format!(
        "fringe (m={}, l={}): {} points, {:.2} fringes\n  fitted frequency {:.9e} (4ml = {}), rel. error {:.2e}\n  fitted phi0 {:.6} rad, V {:.6}, offset {:.6}\n  max |pipeline - law| {:.2e}\n",
        cfg.m, cfg.l, report.points, report.fringe_count, fit.frequency, expected,
        report.relative_frequency_error, fit.phi0, fit.visibility, fit.offset, max_dev
    );
    out.check(max_dev <= 1e-10, || format!("pipeline deviates from the fringe law by {max_dev:.3e}"));
    out.check(report.relative_frequency_error <= 1e-3, || {
        format!("fitted frequency {} differs from 4ml = {expected}", fit.frequency)
    });
    Ok(out)
}
