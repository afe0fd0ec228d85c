use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QsError, Result};
use crate::switch::SwitchParams;

const MAX_ITER: usize = 200;
const GRAD_TOL: f64 = 1e-12;

/// One point of a θ sweep: `k` of `nu` photons counted at `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub theta: f64,
    pub k: u64,
    pub nu: u64,
}

/// Which parameters of `½[offset − V cos(fθ + φ₀)]` are free. Fixed ones take
/// their nominal values: `f = 4ml`, `φ₀` from the params, `V = 1`, `offset = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitFlags {
    pub frequency: bool,
    pub phi0: bool,
    pub visibility: bool,
    pub offset: bool,
}

impl FitFlags {
    pub fn all() -> Self {
        Self { frequency: true, phi0: true, visibility: true, offset: true }
    }

    fn mask(&self) -> [bool; 4] {
        [self.frequency, self.phi0, self.visibility, self.offset]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub frequency: f64,
    /// Wrapped to `(−π, π]`.
    pub phi0: f64,
    pub visibility: f64,
    pub offset: f64,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
    pub points: usize,
}

impl FitReport {
    pub fn model(&self, theta: f64) -> f64 {
        0.5 * (self.offset - self.visibility * (self.frequency * theta + self.phi0).cos())
    }
}

fn wrap(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Damped Gauss–Newton (Levenberg–Marquardt) fit of a fringe sweep.
///
/// θ is centred on the sweep midpoint during the fit to decorrelate
/// frequency and phase; the reported φ₀ refers to the original θ origin.
pub fn fit_fringe(sweep: &[SweepPoint], p: &SwitchParams, free: FitFlags) -> Result<FitReport> {
    if sweep.len() < 8 {
        return Err(QsError::InsufficientSpan(format!("{} points, need at least 8", sweep.len())));
    }
    if sweep.iter().any(|s| s.nu == 0 || s.k > s.nu || !s.theta.is_finite()) {
        return Err(QsError::InvalidParameter("sweep point with invalid counts".into()));
    }
    let f0 = p.leverage();
    let lo = sweep.iter().map(|s| s.theta).fold(f64::INFINITY, f64::min);
    let hi = sweep.iter().map(|s| s.theta).fold(f64::NEG_INFINITY, f64::max);
    if (hi - lo) * f0 < TAU * (1.0 - 1e-9) {
        return Err(QsError::InsufficientSpan(format!(
            "span {:.3e} rad covers {:.3} of one period",
            hi - lo,
            (hi - lo) * f0 / TAU
        )));
    }
    let mid = 0.5 * (lo + hi);
    let x: Vec<f64> = sweep.iter().map(|s| s.theta - mid).collect();
    let y: Vec<f64> = sweep.iter().map(|s| s.k as f64 / s.nu as f64).collect();
    let w: Vec<f64> = sweep
        .iter()
        .zip(&y)
        .map(|(s, &pr)| {
            let nu = s.nu as f64;
            nu / (pr * (1.0 - pr) + 1.0 / nu)
        })
        .collect();

    // Initial values.
    let (ymin, ymax) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let z: Complex64 = x
        .iter()
        .zip(&y)
        .map(|(&t, &v)| (v - mean) * Complex64::from_polar(1.0, -f0 * t))
        .sum();
    let mask = free.mask();
    let mut params = [
        f0,
        if free.phi0 { (-z).arg() } else { p.phi0 + f0 * mid },
        if free.visibility { (ymax - ymin).max(1e-3) } else { 1.0 },
        if free.offset { ymax + ymin } else { 1.0 },
    ];
    let free_idx: Vec<usize> = (0..4).filter(|&i| mask[i]).collect();
    let q = free_idx.len();

    let residuals = |pr: &[f64; 4]| -> Vec<f64> {
        x.iter()
            .zip(&y)
            .zip(&w)
            .map(|((&t, &v), &wi)| wi.sqrt() * (v - 0.5 * (pr[3] - pr[2] * (pr[0] * t + pr[1]).cos())))
            .collect()
    };
    let cost_of = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    let mut r = residuals(&params);
    let mut cost = cost_of(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = q == 0;
    while !converged && iterations < MAX_ITER {
        iterations += 1;
        let mut jac = DMatrix::zeros(x.len(), q);
        for (i, (&t, &wi)) in x.iter().zip(&w).enumerate() {
            let arg = params[0] * t + params[1];
            let (s, c) = arg.sin_cos();
            let sw = wi.sqrt();
            let d = [0.5 * params[2] * s * t, 0.5 * params[2] * s, -0.5 * c, 0.5];
            for (j, &pi) in free_idx.iter().enumerate() {
                jac[(i, j)] = sw * d[pi];
            }
        }
        let rv = DVector::from_column_slice(&r);
        let grad = jac.transpose() * &rv;
        if grad.norm() <= GRAD_TOL {
            converged = true;
            break;
        }
        let a = jac.transpose() * &jac;
        let mut accepted = false;
        while !accepted {
            let mut damped = a.clone();
            for j in 0..q {
                damped[(j, j)] += lambda * a[(j, j)].max(1e-300);
            }
            let Some(step) = damped.cholesky().map(|ch| ch.solve(&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = params;
            for (j, &pi) in free_idx.iter().enumerate() {
                trial[pi] += step[j];
            }
            let tr = residuals(&trial);
            let tc = cost_of(&tr);
            if tc <= cost {
                let small_step = free_idx
                    .iter()
                    .enumerate()
                    .all(|(j, &pi)| step[j].abs() <= 1e-14 * (trial[pi].abs() + 1e-12));
                let small_gain = cost - tc <= 1e-15 * cost;
                params = trial;
                r = tr;
                cost = tc;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if small_step || small_gain {
                    converged = true;
                }
            } else {
                lambda *= 10.0;
                if lambda > 1e16 {
                    // No downhill direction left at machine precision.
                    converged = true;
                    accepted = true;
                }
            }
        }
    }
    if !converged {
        return Err(QsError::NonConvergence { iterations });
    }
    let (mut vis, mut phase) = (params[2], params[1]);
    if vis < 0.0 {
        vis = -vis;
        phase += PI;
    }
    Ok(FitReport {
        frequency: params[0],
        phi0: wrap(phase - params[0] * mid),
        visibility: vis,
        offset: params[3],
        chi2: cost,
        dof: x.len().saturating_sub(q),
        iterations,
        points: x.len(),
    })
}
