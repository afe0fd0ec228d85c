use qswitch::hilbert::PolKet;
use qswitch::switch::{
    caption_reference, fringe_visibility, ideal_probability, project_probability, run_roundtrip,
    trace_fidelities, SwitchParams,
};
use qswitch::JointState;
use serde::Serialize;

use super::{probe_amplitudes, probe_state, require};
use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::output::{json, Artifacts};

/// Stage fidelities below `1 − FIDELITY_TOL` fail the run.
pub const FIDELITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct Amplitude {
    pub pol: &'static str,
    pub oam: i64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageOutput {
    pub label: String,
    pub fidelity: f64,
    pub norm: f64,
    pub amplitudes: Vec<Amplitude>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceOutput {
    pub m: u32,
    pub l: u32,
    pub theta: f64,
    pub phi0: f64,
    pub deflection_on: bool,
    pub compensation_on: bool,
    pub stages: Vec<StageOutput>,
    pub min_fidelity: f64,
    pub probability: f64,
    pub probability_law: f64,
    pub visibility: f64,
}

fn amplitudes(s: &JointState) -> Vec<Amplitude> {
    let labels = s.basis().labels();
    let w = s.window();
    let mut v = Vec::new();
    for (pol, label) in labels.iter().enumerate() {
        for (i, a) in s.pol_slice(pol).iter().enumerate() {
            if a.norm() > 1e-14 {
                v.push(Amplitude { pol: label, oam: w.oam_at(i), re: a.re, im: a.im });
            }
        }
    }
    v
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let theta = require(cfg.theta_true, "theta_true", "trace")?.rad();
    cfg.require_even_m()?;
    let phi0 = cfg.phi0.operating_point().phi0(cfg.m, cfg.l, theta);
    let p = SwitchParams::new(cfg.m, cfg.l, theta, phi0)?;
    let input = probe_state(cfg, PolKet::h(), cfg.l)?;
    let (out_state, trace) = run_roundtrip(&p, &cfg.optics(), &input)?;
    let reference = caption_reference(&p, &probe_amplitudes(cfg), input.window())?;
    let fids = trace_fidelities(&trace, &reference)?;
    let stages: Vec<StageOutput> = trace
        .stages
        .iter()
        .zip(&fids)
        .map(|(st, (_, f))| StageOutput {
            label: st.label.clone(),
            fidelity: *f,
            norm: st.state.norm_sqr().sqrt(),
            amplitudes: amplitudes(&st.state),
        })
        .collect();
    let min_fidelity = fids.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let output = TraceOutput {
        m: cfg.m,
        l: cfg.l,
        theta,
        phi0,
        deflection_on: cfg.dove.deflection_on,
        compensation_on: cfg.dove.compensation_on,
        stages,
        min_fidelity,
        probability: project_probability(&out_state, &p),
        probability_law: ideal_probability(&p),
        visibility: fringe_visibility(&out_state),
    };

    let mut out = Artifacts::default();
    if cfg.output.wants(Format::Json) {
        out.add("trace.json", json("trace", cfg, &output));
    }
    let mut s = format!("trace (m={}, l={}, theta={:e} rad)\n", cfg.m, cfg.l, theta);
    for st in &output.stages {
        s += &format!("  {:<11} fidelity 1 - {:.3e}\n", st.label, 1.0 - st.fidelity);
    }
    s += &format!(
        "  P = {:.12}, law {:.12}, visibility {:.12}\n",
        output.probability, output.probability_law, output.visibility
    );
    out.summary = s;
    for st in &output.stages {
        if st.fidelity < 1.0 - FIDELITY_TOL {
            out.failures.push(format!("stage {} fidelity {:.12} below 1 - {FIDELITY_TOL:e}", st.label, st.fidelity));
        }
    }
    Ok(out)
}
