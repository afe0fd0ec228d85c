use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QsError, Result};
use crate::metrology::crb;
use crate::switch::SwitchParams;

use super::estimate::{estimate_theta_point, Calibration};
use super::noise::{noisy_probability, sample_counts, NoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatingPoint {
    /// `φ₀` chosen so that `4mlθ_true + φ₀ = π/2`.
    Quadrature,
    Fixed(f64),
}

impl OperatingPoint {
    pub fn phi0(&self, m: u32, l: u32, theta: f64) -> f64 {
        match *self {
            Self::Quadrature => {
                let w = (FRAC_PI_2 - 4.0 * f64::from(m) * f64::from(l) * theta + PI).rem_euclid(TAU) - PI;
                if w <= -PI {
                    w + TAU
                } else {
                    w
                }
            }
            Self::Fixed(phi0) => phi0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub m: u32,
    pub l: u32,
    pub theta_true: f64,
    pub operating_point: OperatingPoint,
    pub nu: u64,
    pub trials: usize,
    pub noise: NoiseModel,
    pub seed: u64,
    /// Thread count; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl CampaignConfig {
    pub fn ideal(m: u32, l: u32, theta_true: f64, nu: u64, trials: usize, seed: u64) -> Self {
        Self {
            m,
            l,
            theta_true,
            operating_point: OperatingPoint::Quadrature,
            nu,
            trials,
            noise: NoiseModel::ideal(),
            seed,
            workers: None,
        }
    }

    pub fn params(&self) -> Result<SwitchParams> {
        if self.l == 0 {
            return Err(QsError::InvalidParameter("l must be positive".into()));
        }
        let phi0 = self.operating_point.phi0(self.m, self.l, self.theta_true);
        SwitchParams::new(self.m, self.l, self.theta_true, phi0)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.noise.validate()?;
        if self.nu == 0 {
            return Err(QsError::InvalidParameter("nu must be positive".into()));
        }
        if self.trials == 0 {
            return Err(QsError::InvalidParameter("trials must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(QsError::InvalidParameter("workers must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: u64,
    pub k: u64,
    pub nu: u64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub m: u32,
    pub l: u32,
    pub theta_true: f64,
    pub phi0: f64,
    pub nu: u64,
    pub seed: u64,
    pub noise: NoiseModel,
    pub trials: Vec<TrialResult>,
    pub mean: f64,
    /// RMSE about `theta_true`; `None` with fewer than two trials.
    pub rmse: Option<f64>,
    /// `rmse·√ν`.
    pub normalized_precision: Option<f64>,
    pub crb: f64,
    /// `rmse / crb`.
    pub gap_factor: Option<f64>,
    /// `4ml`.
    pub ideal_enhancement: f64,
    /// `4ml / gap_factor`.
    pub practical_enhancement: Option<f64>,
}

/// Per-trial generator: stream `index` of the campaign seed.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn run_trials(cfg: &CampaignConfig, p: &SwitchParams, calib: &Calibration) -> Result<Vec<TrialResult>> {
    let one = |index: u64| -> Result<TrialResult> {
        let mut rng = trial_rng(cfg.seed, index);
        let draws = cfg.noise.draw(&mut rng);
        let pr = noisy_probability(cfg.theta_true, p, &cfg.noise, draws);
        let k = sample_counts(pr, cfg.nu, &mut rng);
        let estimate = estimate_theta_point(k, cfg.nu, p, calib)?;
        Ok(TrialResult { index, k, nu: cfg.nu, estimate })
    };
    let n = cfg.trials as u64;
    match cfg.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| QsError::InvalidParameter(format!("thread pool: {e}")))?;
            pool.install(|| (0..n).into_par_iter().map(one).collect())
        }
        None => (0..n).into_par_iter().map(one).collect(),
    }
}

/// Runs `trials` independent estimations at `theta_true` and aggregates them.
/// The result depends only on the config, not on the worker count.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<EstimationReport> {
    cfg.validate()?;
    let p = cfg.params()?;
    let calib = Calibration::at(cfg.theta_true, &p, &cfg.noise)?;
    let trials = run_trials(cfg, &p, &calib)?;

    let n = trials.len() as f64;
    let mean = trials.iter().map(|t| t.estimate).sum::<f64>() / n;
    let rmse = (trials.len() >= 2).then(|| {
        (trials.iter().map(|t| (t.estimate - cfg.theta_true).powi(2)).sum::<f64>() / n).sqrt()
    });
    let nu = cfg.nu as f64;
    let crb = crb(cfg.m, cfg.l, nu)?;
    let ideal = p.leverage();
    let gap = rmse.map(|r| r / crb);
    Ok(EstimationReport {
        m: cfg.m,
        l: cfg.l,
        theta_true: cfg.theta_true,
        phi0: p.phi0,
        nu: cfg.nu,
        seed: cfg.seed,
        noise: cfg.noise,
        trials,
        mean,
        rmse,
        normalized_precision: rmse.map(|r| r * nu.sqrt()),
        crb,
        gap_factor: gap,
        ideal_enhancement: ideal,
        practical_enhancement: gap.filter(|g| *g > 0.0).map(|g| ideal / g),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub m: u32,
    pub l: u32,
    pub fourml: f64,
    pub rmse: f64,
    /// `δθ·√ν`.
    pub normalized_precision: f64,
    /// `1/(4ml)`.
    pub crb_normalized: f64,
    pub gap_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of `ln(δθ√ν)` against `ln(4ml)`.
    pub slope: f64,
    /// Intercept of the same fit; `0` on the bound, `ln g` for a uniform gap `g`.
    pub intercept: f64,
}

fn pair_seed(seed: u64, m: u32, l: u32) -> u64 {
    let tag = (u64::from(m) << 32) | u64::from(l);
    seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs one campaign per `(m, l)` pair with the shared settings of `cfg`
/// and regresses the normalized precision against `4ml` on log–log axes.
pub fn scaling_study(pairs: &[(u32, u32)], cfg: &CampaignConfig) -> Result<ScalingReport> {
    scaling_study_with(pairs, cfg, |_, _| Ok(cfg.noise))
}

/// As [`scaling_study`], with the noise model chosen per pair.
pub fn scaling_study_with<F>(pairs: &[(u32, u32)], cfg: &CampaignConfig, noise_for: F) -> Result<ScalingReport>
where
    F: Fn(u32, u32) -> Result<NoiseModel>,
{
    if pairs.len() < 3 {
        return Err(QsError::InsufficientPairs(pairs.len()));
    }
    if cfg.trials < 2 {
        return Err(QsError::InvalidParameter("scaling needs at least 2 trials per pair".into()));
    }
    let mut points = Vec::with_capacity(pairs.len());
    for &(m, l) in pairs {
        let c = CampaignConfig {
            m,
            l,
            seed: pair_seed(cfg.seed, m, l),
            noise: noise_for(m, l)?,
            ..cfg.clone()
        };
        let r = run_campaign(&c)?;
        let rmse = r.rmse.expect("at least 2 trials");
        points.push(ScalingPoint {
            m,
            l,
            fourml: r.ideal_enhancement,
            rmse,
            normalized_precision: rmse * (cfg.nu as f64).sqrt(),
            crb_normalized: 1.0 / r.ideal_enhancement,
            gap_factor: rmse / r.crb,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.fourml.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.normalized_precision.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(QsError::InvalidParameter("all pairs share the same 4ml".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(ScalingReport { points, slope, intercept: my - slope * mx })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_phase() {
        let op = OperatingPoint::Quadrature;
        let theta = 0.025f64.to_radians();
        let phi0 = op.phi0(8, 128, theta);
        let phase = 4096.0 * theta + phi0;
        assert!(((phase - FRAC_PI_2) / TAU).fract().abs() < 1e-12 || ((phase - FRAC_PI_2) / TAU).fract().abs() > 1.0 - 1e-12);
        assert!(phi0 > -PI && phi0 <= PI);
    }

    #[test]
    fn small_pair_saturates_bound() {
        let cfg = CampaignConfig::ideal(2, 1, 0.025f64.to_radians(), 70_000_000, 60, 1);
        let r = run_campaign(&cfg).unwrap();
        let np = r.normalized_precision.unwrap();
        assert!((np - 0.125).abs() / 0.125 < 0.12, "{np}");
        assert!(r.gap_factor.unwrap() > 0.85 && r.gap_factor.unwrap() < 1.25);
    }

    #[test]
    fn single_trial_has_no_rmse() {
        let cfg = CampaignConfig::ideal(2, 1, 0.01, 1000, 1, 3);
        let r = run_campaign(&cfg).unwrap();
        assert!(r.rmse.is_none() && r.gap_factor.is_none());
        assert_eq!(r.trials.len(), 1);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let base = CampaignConfig {
            noise: NoiseModel { visibility: 0.96, rotation_jitter: 1e-7, phase_drift: 1e-4, efficiency: 0.98 },
            ..CampaignConfig::ideal(8, 4, 0.003, 7_000_000, 64, 42)
        };
        let reference = run_campaign(&CampaignConfig { workers: Some(1), ..base.clone() }).unwrap();
        for w in [2, 4, 16] {
            let r = run_campaign(&CampaignConfig { workers: Some(w), ..base.clone() }).unwrap();
            assert_eq!(r, reference);
        }
    }

    #[test]
    fn scaling_requires_three_pairs() {
        let cfg = CampaignConfig::ideal(2, 1, 0.0, 1000, 10, 0);
        assert_eq!(scaling_study(&[(2, 1)], &cfg), Err(QsError::InsufficientPairs(1)));
    }

    #[test]
    fn scaling_slope_and_uniform_gap() {
        let pairs = [(2, 1), (4, 2), (6, 3), (8, 4), (12, 6)];
        let cfg = CampaignConfig::ideal(2, 1, 0.0005, 70_000_000, 400, 9);
        let r = scaling_study(&pairs, &cfg).unwrap();
        assert!((r.slope + 1.0).abs() < 0.05, "{r:?}");
        assert!(r.intercept.abs() < 0.1);
        let np: Vec<f64> = r.points.iter().map(|p| p.normalized_precision * p.fourml).collect();
        let ratio = np.iter().cloned().fold(0.0, f64::max) / np.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(ratio <= 1.2);
    }
}
