use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{QsError, Result};
use crate::switch::SwitchParams;

use super::noise::NoiseModel;

/// Calibration known to the estimator: offset phase, the known part of the
/// noise dressing, and which monotonic half-period of the fringe to invert on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub phi0: f64,
    pub visibility: f64,
    pub efficiency: f64,
    /// Half-period index `n`: the fringe phase `4mlθ + φ₀` lies in `[nπ, (n+1)π]`.
    pub branch: i64,
}

impl Calibration {
    /// Branch containing the nominal operating point `theta_nominal`.
    pub fn at(theta_nominal: f64, p: &SwitchParams, noise: &NoiseModel) -> Result<Self> {
        let phase = p.leverage() * theta_nominal + p.phi0;
        let turns = phase / PI;
        if (turns - turns.round()).abs() < 1e-9 {
            return Err(QsError::DegeneratePoint);
        }
        Ok(Self {
            phi0: p.phi0,
            visibility: noise.visibility,
            efficiency: noise.efficiency,
            branch: turns.floor() as i64,
        })
    }

    /// θ-interval of the hinted half-period.
    pub fn branch_interval(&self, p: &SwitchParams) -> (f64, f64) {
        let n = self.branch as f64;
        let k = p.leverage();
        ((n * PI - self.phi0) / k, ((n + 1.0) * PI - self.phi0) / k)
    }
}

/// Inverts the fringe law for one count `k` out of `nu` photons.
///
/// `P̂ = k/ν` is clamped into `[½/ν, 1 − ½/ν]`, the arm imbalance and
/// visibility are undone, and `arccos` is folded into the hinted branch.
pub fn estimate_theta_point(k: u64, nu: u64, p: &SwitchParams, calib: &Calibration) -> Result<f64> {
    if nu == 0 || k > nu {
        return Err(QsError::InvalidParameter(format!("count {k} of {nu} photons")));
    }
    let nuf = nu as f64;
    let half = 0.5 / nuf;
    let p_hat = (k as f64 / nuf).clamp(half, 1.0 - half);
    let eta = calib.efficiency;
    let p0 = p_hat / (eta * (1.0 - p_hat) + p_hat);
    let cos = (1.0 - 2.0 * p0) / calib.visibility;
    let sigma = 2.0 * (p0 * (1.0 - p0) / nuf).sqrt() / calib.visibility;
    if cos.abs() > 1.0 + 6.0 * sigma {
        return Err(QsError::OutOfBranch { p_hat });
    }
    let x = cos.clamp(-1.0, 1.0).acos();
    let n = calib.branch;
    let phase = if n.rem_euclid(2) == 0 {
        n as f64 * PI + x
    } else {
        (n + 1) as f64 * PI - x
    };
    Ok((phase - calib.phi0) / p.leverage())
}
