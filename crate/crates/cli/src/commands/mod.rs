//! One module per subcommand. Each returns in-memory [`Artifacts`](crate::output::Artifacts).

pub mod estimate;
pub mod fringe;
pub mod qfi;
pub mod scaling;
pub mod trace;

use num_complex::Complex64;
use qswitch::hilbert::{make_state, PolKet};
use qswitch::{JointState, OamWindow};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub(crate) fn probe_amplitudes(cfg: &ExperimentConfig) -> Vec<(i64, Complex64)> {
    cfg.probe.oam.iter().map(|&(k, re, im)| (k, Complex64::new(re, im))).collect()
}

/// Window wide enough for the probe shifted by up to `2l`.
pub(crate) fn probe_window(cfg: &ExperimentConfig, l: u32) -> Result<OamWindow, CliError> {
    let reach = cfg.probe.oam.iter().map(|&(k, _, _)| k.abs()).max().unwrap_or(0);
    Ok(OamWindow::symmetric(2 * i64::from(l) + reach + 8, 8)?)
}

pub(crate) fn probe_state(cfg: &ExperimentConfig, pol: PolKet, l: u32) -> Result<JointState, CliError> {
    Ok(make_state(pol, &probe_amplitudes(cfg), probe_window(cfg, l)?)?)
}

pub(crate) fn require<T>(v: Option<T>, field: &str, command: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("field `{field}`: required by `{command}`")))
}
