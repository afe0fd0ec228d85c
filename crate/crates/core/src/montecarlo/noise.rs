use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{QsError, Result};
use crate::switch::SwitchParams;

/// Interferometric dressing of the ideal fringe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Fringe visibility `V ∈ (0, 1]`.
    pub visibility: f64,
    /// SD (rad) of a per-trial perturbation of θ.
    pub rotation_jitter: f64,
    /// SD (rad) of a per-trial perturbation of φ₀.
    pub phase_drift: f64,
    /// Relative efficiency `η ∈ (0, 1]` of the counted detector arm.
    pub efficiency: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self { visibility: 1.0, rotation_jitter: 0.0, phase_drift: 0.0, efficiency: 1.0 }
    }

    pub fn is_ideal(&self) -> bool {
        *self == Self::ideal()
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !unit(self.visibility) {
            return Err(QsError::InvalidParameter(format!("visibility {} not in (0, 1]", self.visibility)));
        }
        if !unit(self.efficiency) {
            return Err(QsError::InvalidParameter(format!("efficiency {} not in (0, 1]", self.efficiency)));
        }
        if !(self.rotation_jitter >= 0.0 && self.rotation_jitter.is_finite()) {
            return Err(QsError::InvalidParameter("rotation_jitter must be finite and >= 0".into()));
        }
        if !(self.phase_drift >= 0.0 && self.phase_drift.is_finite()) {
            return Err(QsError::InvalidParameter("phase_drift must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Chooses the rotation jitter so that, at quadrature with this
    /// visibility, the expected RMSE is `gap × CRB`:
    /// `RMSE² = CRB²/V² + σ_j²`.
    pub fn calibrated_to_gap(self, gap: f64, crb: f64) -> Result<Self> {
        let floor = 1.0 / self.visibility;
        if !(gap >= floor) {
            return Err(QsError::InvalidParameter(format!(
                "gap {gap} below the visibility floor {floor}"
            )));
        }
        Ok(Self { rotation_jitter: crb * (gap * gap - floor * floor).sqrt(), ..self })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> TrialDraws {
        let gauss = |sd: f64, rng: &mut R| {
            if sd > 0.0 {
                Normal::new(0.0, sd).expect("finite sd").sample(rng)
            } else {
                0.0
            }
        };
        let jitter = gauss(self.rotation_jitter, rng);
        let drift = gauss(self.phase_drift, rng);
        TrialDraws { jitter, drift }
    }
}

/// Per-trial random perturbations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialDraws {
    pub jitter: f64,
    pub drift: f64,
}

/// `½[1 − V cos(4ml(θ+j) + φ₀ + d)]`, then the arm-imbalance map `ηP/(ηP + 1 − P)`.
pub fn noisy_probability(theta: f64, p: &SwitchParams, n: &NoiseModel, draws: TrialDraws) -> f64 {
    let phase = p.leverage() * (theta + draws.jitter) + p.phi0 + draws.drift;
    let pr = 0.5 * (1.0 - n.visibility * phase.cos());
    if n.efficiency == 1.0 {
        return pr;
    }
    let num = n.efficiency * pr;
    num / (num + 1.0 - pr)
}

/// `k ~ Binomial(ν, P)`.
pub fn sample_counts<R: Rng + ?Sized>(p: f64, nu: u64, rng: &mut R) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return nu;
    }
    Binomial::new(nu, p).expect("p in (0, 1)").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::switch::ideal_probability;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn ideal_model_is_the_fringe_law() {
        let n = NoiseModel::ideal();
        for i in 0..20 {
            let p = SwitchParams::new(4, 2, -0.5 + 0.05 * i as f64, 0.3).unwrap();
            let pr = noisy_probability(p.theta, &p, &n, TrialDraws::default());
            assert!((pr - ideal_probability(&p)).abs() < 1e-15);
        }
    }

    #[test]
    fn visibility_scales_contrast() {
        let n = NoiseModel { visibility: 0.96, ..NoiseModel::ideal() };
        let p = SwitchParams::new(2, 1, 0.0, FRAC_PI_2).unwrap();
        assert!((noisy_probability(0.0, &p, &n, TrialDraws::default()) - 0.5).abs() < 1e-15);
        let p = SwitchParams::new(2, 1, 0.0, PI).unwrap();
        assert!((noisy_probability(0.0, &p, &n, TrialDraws::default()) - 0.98).abs() < 1e-15);
    }

    #[test]
    fn imbalance_map() {
        let n = NoiseModel { efficiency: 0.5, ..NoiseModel::ideal() };
        let p = SwitchParams::new(2, 1, 0.0, FRAC_PI_2).unwrap();
        // P = ½ ⇒ 0.25 / (0.25 + 0.5)
        assert!((noisy_probability(0.0, &p, &n, TrialDraws::default()) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sample_extremes_and_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(sample_counts(0.0, 1000, &mut rng), 0);
        assert_eq!(sample_counts(1.0, 1000, &mut rng), 1000);
        let nu = 70_000_000u64;
        let band = 5.0 * (0.25 / nu as f64).sqrt();
        for _ in 0..20 {
            let k = sample_counts(0.5, nu, &mut rng);
            assert!(((k as f64 / nu as f64) - 0.5).abs() < band);
        }
    }

    #[test]
    fn calibration_to_gap() {
        let crb = 2.885e-8;
        let n = NoiseModel { visibility: 0.96, ..NoiseModel::ideal() }
            .calibrated_to_gap(1.76, crb)
            .unwrap();
        let expected = ((crb / 0.96).powi(2) + n.rotation_jitter.powi(2)).sqrt() / crb;
        assert!((expected - 1.76).abs() < 1e-12);
        assert!(NoiseModel::ideal().calibrated_to_gap(0.9, crb).is_err());
    }

    #[test]
    fn validation() {
        assert!(NoiseModel { visibility: 0.0, ..NoiseModel::ideal() }.validate().is_err());
        assert!(NoiseModel { efficiency: 1.5, ..NoiseModel::ideal() }.validate().is_err());
        assert!(NoiseModel { phase_drift: -1.0, ..NoiseModel::ideal() }.validate().is_err());
        assert!(NoiseModel::ideal().validate().is_ok());
    }
}
