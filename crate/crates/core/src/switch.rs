//! The hybrid SWITCH: abstract unitaries `W` and `W_QS`, the concrete
//! round-trip optical pipeline with its state trace, and the control-qubit
//! projection probability.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QsError, Result};
use crate::hilbert::{
    apply, make_state, rotation_op, shift_op, Action, CoupledTerm, JointState, LinearOp,
    OamWindow, PolBasis, PolKet, NORM_TOL,
};
use crate::optics::{
    dove_train_op, hrp_flip_op, qplate_op, qwp_fr_suite_op, DovePair, DovePrismModel, Pass,
    QPlateModel,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Stage labels of the round-trip trace, in order.
pub const STAGE_LABELS: [&str; 8] =
    ["q1", "suite1", "dove_fwd", "hrp", "dove_bwd", "suite1_rev", "q2", "final"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchParams {
    /// Rotation multiplicity; the round trip uses `m/2` prism pairs per pass.
    pub m: u32,
    /// Q-plate order.
    pub l: u32,
    pub theta: f64,
    pub phi0: f64,
}

impl SwitchParams {
    pub fn new(m: u32, l: u32, theta: f64, phi0: f64) -> Result<Self> {
        let p = Self { m, l, theta, phi0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(QsError::InvalidParameter("m must be positive".into()));
        }
        if !(self.theta > -PI && self.theta < PI) {
            return Err(QsError::InvalidParameter(format!(
                "theta {} outside (-pi, pi)",
                self.theta
            )));
        }
        if !self.phi0.is_finite() {
            return Err(QsError::InvalidParameter("phi0 must be finite".into()));
        }
        Ok(())
    }

    /// The round trip needs an even `m` so that `m/2` pairs sit in each pass.
    pub fn validate_roundtrip(&self) -> Result<()> {
        self.validate()?;
        if !self.m.is_multiple_of(2) {
            return Err(QsError::InvalidParameter(format!("m = {} must be even", self.m)));
        }
        if self.l == 0 {
            return Err(QsError::InvalidParameter("Q-plate order l must be positive".into()));
        }
        Ok(())
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, ..*self }
    }

    /// `4ml`, the leverage factor on θ.
    pub fn leverage(&self) -> f64 {
        4.0 * f64::from(self.m) * f64::from(self.l)
    }

    /// `4mlθ + φ₀`.
    pub fn fringe_phase(&self) -> f64 {
        self.leverage() * self.theta + self.phi0
    }
}

/// Ideal fringe `½[1 − cos(4mlθ + φ₀)]`.
pub fn ideal_probability(p: &SwitchParams) -> f64 {
    0.5 * (1.0 - p.fringe_phase().cos())
}

/// `D_l† D_{2mθ} D_l ⊗ |0⟩⟨0| + D_l D_{2mθ} D_l† ⊗ |1⟩⟨1|` with `|0⟩ ≡ |L⟩`, `|1⟩ ≡ |R⟩`.
pub fn build_w(p: &SwitchParams) -> Result<LinearOp> {
    p.validate()?;
    let l = i64::from(p.l);
    let phi = 2.0 * f64::from(p.m) * p.theta;
    let b0 = LinearOp::sequence("D_l† R D_l", vec![shift_op(l), rotation_op(phi), shift_op(-l)]);
    let b1 = LinearOp::sequence("D_l R D_l†", vec![shift_op(-l), rotation_op(phi), shift_op(l)]);
    controlled("W", b0, b1)
}

/// `D_{2mθ} D_{2l} ⊗ |0⟩⟨0| + D_{2l} D_{2mθ} ⊗ |1⟩⟨1|`.
pub fn build_wqs(p: &SwitchParams) -> Result<LinearOp> {
    p.validate()?;
    let two_l = 2 * i64::from(p.l);
    let phi = 2.0 * f64::from(p.m) * p.theta;
    let b0 = LinearOp::sequence("R D_2l", vec![shift_op(two_l), rotation_op(phi)]);
    let b1 = LinearOp::sequence("D_2l R", vec![rotation_op(phi), shift_op(two_l)]);
    controlled("W_QS", b0, b1)
}

fn controlled(label: &str, block0: LinearOp, block1: LinearOp) -> Result<LinearOp> {
    let terms = vec![CoupledTerm::new(0, 0, block0)?, CoupledTerm::new(1, 1, block1)?];
    Ok(LinearOp::new(label, Action::Coupled { basis: PolBasis::Circular, terms }, true))
}

/// Prism and compensation settings for the round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticsConfig {
    /// Template for every prism; its `alpha` is the stationary orientation α₀.
    pub dove: DovePrismModel,
    /// When false the return-pass prisms see the polarization frame a quarter
    /// turn away from the compensating one, so the Jones products no longer cancel.
    pub compensation: bool,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        Self { dove: DovePrismModel::default(), compensation: true }
    }
}

impl OpticsConfig {
    pub fn with_deflection(mut self, on: bool) -> Self {
        self.dove.include_polarization_deflection = on;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStage {
    pub label: String,
    pub state: JointState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTrace {
    pub stages: Vec<TraceStage>,
}

impl StateTrace {
    pub fn stage(&self, label: &str) -> Option<&JointState> {
        self.stages.iter().find(|s| s.label == label).map(|s| &s.state)
    }
}

/// Element operators of the round trip, one per trace stage.
pub fn roundtrip_elements(p: &SwitchParams, optics: &OpticsConfig) -> Result<Vec<LinearOp>> {
    p.validate_roundtrip()?;
    optics.dove.validate()?;
    let q = qplate_op(QPlateModel { order: p.l });
    let pairs = vec![DovePair::uniform(optics.dove); (p.m / 2) as usize];
    // The explicit flip between the passes already rotates the polarization
    // frame seen by the return pass; disabling compensation adds a further
    // quarter turn.
    let return_offset = if optics.compensation { 0.0 } else { FRAC_PI_2 };
    Ok(vec![
        q.clone(),
        qwp_fr_suite_op(Pass::Forward),
        dove_train_op(p.theta, &pairs, Pass::Forward, 0.0),
        hrp_flip_op(),
        dove_train_op(p.theta, &pairs, Pass::Return, return_offset),
        qwp_fr_suite_op(Pass::Return),
        q,
        LinearOp::identity().with_label("output-basis"),
    ])
}

/// Runs the round trip: Q-plate → QWP1-FR1 → m/2 Dove pairs → HRP flip →
/// m/2 pairs (reverse order) → FR1-QWP1 → Q-plate. The `final` stage is the
/// `q2` state written in the linear (PBS) basis.
pub fn run_roundtrip(
    p: &SwitchParams,
    optics: &OpticsConfig,
    input: &JointState,
) -> Result<(JointState, StateTrace)> {
    let elements = roundtrip_elements(p, optics)?;
    let mut stages = Vec::with_capacity(STAGE_LABELS.len());
    let mut cur = input.clone();
    for (label, op) in STAGE_LABELS.iter().zip(&elements) {
        let next = apply(op, &cur)?;
        if op.is_unitary() && (next.norm_sqr() - cur.norm_sqr()).abs() > NORM_TOL {
            return Err(QsError::StageMismatch { stage: (*label).to_string() });
        }
        cur = next;
        if *label == "final" {
            cur = cur.to_basis(PolBasis::Linear);
        }
        stages.push(TraceStage { label: (*label).to_string(), state: cur.clone() });
    }
    Ok((cur, StateTrace { stages }))
}

/// Canonical input `|H⟩ ⊗ |0⟩` on the default window for `l`.
pub fn canonical_input(l: u32) -> Result<JointState> {
    make_state(PolKet::h(), &[(0, ONE)], OamWindow::for_switch(l))
}

/// Probability at the analyzer port with offset phase `φ₀`:
/// `½[1 − s·2Re(e^{iφ₀}ρ_{RL})/Tr ρ]` for the polarization state reduced to
/// the circular basis. `s = +1` for the abstract SWITCH output, `s = −1` for the
/// round trip, whose `|V⟩ → −|H⟩` reflection flips the sign of one branch.
pub fn analyzer_probability(rho_circular: &Matrix2<Complex64>, phi0: f64, branch_sign: f64) -> f64 {
    let tr = (rho_circular[(0, 0)] + rho_circular[(1, 1)]).re;
    let coh = Complex64::from_polar(1.0, phi0) * rho_circular[(1, 0)];
    (0.5 * (1.0 - branch_sign * 2.0 * coh.re / tr)).clamp(0.0, 1.0)
}

fn circular_rho(s: &JointState) -> Matrix2<Complex64> {
    s.to_basis(PolBasis::Circular).reduced_polarization()
}

/// Projection probability for the round-trip output, OAM traced out.
/// With deflection off this is exactly `½[1 − cos(4mlθ + φ₀)]`.
pub fn project_probability(final_state: &JointState, p: &SwitchParams) -> f64 {
    analyzer_probability(&circular_rho(final_state), p.phi0, -1.0)
}

/// Contrast reachable by scanning `φ₀` at fixed θ: `2|ρ_{RL}|/Tr ρ`.
pub fn fringe_visibility(final_state: &JointState) -> f64 {
    let rho = circular_rho(final_state);
    2.0 * rho[(1, 0)].norm() / (rho[(0, 0)] + rho[(1, 1)]).re
}

/// Purity `Tr ρ²` of the normalized polarization reduced state.
pub fn control_purity(s: &JointState) -> f64 {
    let rho = s.reduced_polarization();
    let tr = (rho[(0, 0)] + rho[(1, 1)]).re;
    let r = rho / Complex64::new(tr, 0.0);
    (r * r).trace().re
}

/// Simulated ideal `P(θ)` from the full optical pipeline.
pub fn simulate_probability(p: &SwitchParams, optics: &OpticsConfig, input: &JointState) -> Result<f64> {
    let (out, _) = run_roundtrip(p, optics, input)?;
    Ok(project_probability(&out, p))
}

/// Analytic trace for input `|H⟩ ⊗ Σ c_k|k⟩`, built amplitude by amplitude.
///
/// Forward pass rotation is `χ = mθ`, so a branch shifted to `k ± l` picks up
/// `e^{−i(k±l)χ}` per pass. The `q2`/`final` references carry the relative
/// minus sign produced by the reflection, propagated through the Q-plate.
pub fn caption_reference(
    p: &SwitchParams,
    oam: &[(i64, Complex64)],
    window: OamWindow,
) -> Result<Vec<(String, JointState)>> {
    p.validate_roundtrip()?;
    let l = i64::from(p.l);
    let chi = f64::from(p.m) * p.theta;
    let norm: f64 = oam.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(QsError::NonNormalizable);
    }
    let n = window.len();
    let s = FRAC_1_SQRT_2;
    // Each entry: (pol index, sign, OAM shift, number of passes, final OAM shift)
    type Branch = (usize, f64, i64, f64, i64);
    let build = |basis: PolBasis, branches: [Branch; 2]| -> Result<JointState> {
        let mut amp = vec![ZERO; 2 * n];
        for (pol, sign, shift, passes, post) in branches {
            for &(k, ck) in oam {
                let kk = k + shift;
                let phase = Complex64::from_polar(1.0, -(kk as f64) * chi * passes);
                let idx = window
                    .index_of(kk + post)
                    .ok_or(QsError::SupportInGuardBand { index: kk + post })?;
                amp[pol * n + idx] += ck / norm * phase * (sign * s);
            }
        }
        JointState::from_amplitudes(window, basis, amp)
    };
    use PolBasis::{Circular as C, Linear as Lin};
    // circular: L = 0, R = 1; linear: H = 0, V = 1
    let q2 = build(C, [(0, -1.0, l, 2.0, -l), (1, 1.0, -l, 2.0, l)])?;
    Ok(vec![
        ("q1".into(), build(C, [(1, 1.0, l, 0.0, 0), (0, 1.0, -l, 0.0, 0)])?),
        ("suite1".into(), build(Lin, [(1, 1.0, l, 0.0, 0), (0, 1.0, -l, 0.0, 0)])?),
        ("dove_fwd".into(), build(Lin, [(1, 1.0, l, 1.0, 0), (0, 1.0, -l, 1.0, 0)])?),
        ("hrp".into(), build(Lin, [(0, -1.0, l, 1.0, 0), (1, 1.0, -l, 1.0, 0)])?),
        ("dove_bwd".into(), build(Lin, [(0, -1.0, l, 2.0, 0), (1, 1.0, -l, 2.0, 0)])?),
        ("suite1_rev".into(), build(C, [(1, -1.0, l, 2.0, 0), (0, 1.0, -l, 2.0, 0)])?),
        ("q2".into(), q2.clone()),
        ("final".into(), q2.to_basis(Lin)),
    ])
}

/// Per-stage fidelity of a trace against [`caption_reference`].
pub fn trace_fidelities(
    trace: &StateTrace,
    reference: &[(String, JointState)],
) -> Result<Vec<(String, f64)>> {
    trace
        .stages
        .iter()
        .zip(reference)
        .map(|(st, (label, r))| {
            if st.label != *label {
                return Err(QsError::StageMismatch { stage: st.label.clone() });
            }
            Ok((label.clone(), st.state.fidelity(r)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub thetas_tested: usize,
    pub max_deviation: f64,
    /// Probabilities `(θ, P_W, P_WQS)`.
    pub samples: Vec<(f64, f64, f64)>,
}

/// Compares control-qubit statistics of `W` and `W_QS` on `|+⟩ ⊗ oam` for
/// each θ in `thetas` (the θ in `p` is ignored).
pub fn equivalence_check(
    p: &SwitchParams,
    oam: &[(i64, Complex64)],
    thetas: &[f64],
) -> Result<EquivalenceReport> {
    let reach = oam.iter().map(|(k, _)| k.abs()).max().unwrap_or(0);
    let window = OamWindow::symmetric(2 * i64::from(p.l) + reach + 8, 8)?;
    let probe = make_state(PolKet::plus(), oam, window)?;
    let mut samples = Vec::with_capacity(thetas.len());
    let mut max_deviation: f64 = 0.0;
    for &theta in thetas {
        let q = p.with_theta(theta);
        let pw = analyzer_probability(&circular_rho(&apply(&build_w(&q)?, &probe)?), q.phi0, 1.0);
        let pq = analyzer_probability(&circular_rho(&apply(&build_wqs(&q)?, &probe)?), q.phi0, 1.0);
        max_deviation = max_deviation.max((pw - pq).abs());
        samples.push((theta, pw, pq));
    }
    Ok(EquivalenceReport { thetas_tested: thetas.len(), max_deviation, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::lz_moments;
    use std::f64::consts::FRAC_PI_8;

    fn plus_zero(l: u32) -> JointState {
        make_state(PolKet::plus(), &[(0, ONE)], OamWindow::for_switch(l)).unwrap()
    }

    fn control_phase(s: &JointState) -> Complex64 {
        let rho = s.to_basis(PolBasis::Circular).reduced_polarization();
        rho[(1, 0)] / rho[(0, 0)]
    }

    #[test]
    fn w_at_zero_theta_is_identity() {
        let p = SwitchParams::new(3, 2, 0.0, 0.0).unwrap();
        let s = make_state(PolKet::plus(), &[(1, ONE), (-2, ONE)], OamWindow::for_switch(2)).unwrap();
        let out = apply(&build_w(&p).unwrap(), &s).unwrap();
        assert!((out.inner(&s).unwrap() - ONE).norm() < 1e-14);
    }

    #[test]
    fn w_with_zero_leverage_is_pure_rotation() {
        let p = SwitchParams::new(2, 0, 0.4, 0.0).unwrap();
        let s = make_state(PolKet::plus(), &[(3, ONE), (-1, ONE)], OamWindow::symmetric(12, 4).unwrap()).unwrap();
        let a = apply(&build_w(&p).unwrap(), &s).unwrap();
        let b = apply(&rotation_op(2.0 * 2.0 * 0.4), &s).unwrap();
        assert!((a.inner(&b).unwrap() - ONE).norm() < 1e-14);
    }

    #[test]
    fn w_control_phase_matches_dense_evaluation() {
        let p = SwitchParams::new(1, 1, 0.2, 0.0).unwrap();
        let w = OamWindow::symmetric(8, 2).unwrap();
        let s = make_state(PolKet::plus(), &[(0, ONE)], w).unwrap();
        let out = apply(&build_w(&p).unwrap(), &s).unwrap();
        let phase = control_phase(&out);
        // dense: block0 = S(−1)·R·S(1), block1 = S(1)·R·S(−1) as explicit matrices
        let n = w.len();
        let dense = |first: i64| {
            let mut m = nalgebra::DMatrix::from_element(n, n, ZERO);
            for i in 0..n {
                let k = w.oam_at(i);
                let mid = k + first;
                let ph = Complex64::from_polar(1.0, -(mid as f64) * 0.4);
                if let (Some(_), Some(j)) = (w.index_of(mid), w.index_of(k)) {
                    m[(j, i)] = ph;
                }
            }
            m
        };
        let e0 = w.index_of(0).unwrap();
        let a0 = dense(1)[(e0, e0)];
        let a1 = dense(-1)[(e0, e0)];
        assert!((phase - a1 / a0).norm() < 1e-14);
        assert!((phase.arg().abs() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn wqs_examples() {
        let p0 = SwitchParams::new(2, 1, 0.0, 0.0).unwrap();
        let s = plus_zero(1);
        let a = apply(&build_wqs(&p0).unwrap(), &s).unwrap();
        let b = apply(&shift_op(2), &s).unwrap();
        assert!((a.inner(&b).unwrap() - ONE).norm() < 1e-14);

        // W_QS = (D_{2mθ}D_{2l} ⊗ I)·U_{4mlθ}
        let p = SwitchParams::new(3, 2, 0.17, 0.0).unwrap();
        let probe = make_state(
            PolKet { basis: PolBasis::Circular, amps: [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)] },
            &[(0, ONE), (1, Complex64::new(0.5, -0.5))],
            OamWindow::symmetric(13, 8).unwrap(),
        )
        .unwrap();
        let psi = 4.0 * 3.0 * 2.0 * 0.17;
        let u = LinearOp::jones(
            "U",
            Matrix2::new(ONE, ZERO, ZERO, Complex64::from_polar(1.0, psi)),
            PolBasis::Circular,
        );
        let factored = u.then(shift_op(4)).then(rotation_op(2.0 * 3.0 * 0.17));
        let lhs = apply(&build_wqs(&p).unwrap(), &probe).unwrap();
        let rhs = apply(&factored, &probe).unwrap();
        assert!((lhs.inner(&rhs).unwrap() - ONE).norm() < 1e-12);

        let p = SwitchParams::new(2, 1, FRAC_PI_8, 0.0).unwrap();
        let out = apply(&build_wqs(&p).unwrap(), &plus_zero(1)).unwrap();
        assert!((control_phase(&out).arg().abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_at_zero_theta() {
        for &(m, l, phi0) in &[(2, 1, 0.0), (4, 3, 1.1), (8, 128, -2.0)] {
            let p = SwitchParams::new(m, l, 0.0, phi0).unwrap();
            let pr = simulate_probability(&p, &OpticsConfig::default(), &canonical_input(l).unwrap()).unwrap();
            assert!((pr - 0.5 * (1.0 - phi0.cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_stage_four_and_final_oam() {
        let theta = 0.37;
        let p = SwitchParams::new(2, 1, theta, 0.0).unwrap();
        let w = OamWindow::for_switch(1);
        let phi = [(0, Complex64::new(0.8, 0.0)), (1, Complex64::new(0.0, 0.6))];
        let input = make_state(PolKet::h(), &phi, w).unwrap();
        let (out, trace) = run_roundtrip(&p, &OpticsConfig::default(), &input).unwrap();

        let st = trace.stage("dove_fwd").unwrap();
        let ml = 2.0 * theta;
        let zero_input = canonical_input(1).unwrap();
        let (_, tr0) = run_roundtrip(&p, &OpticsConfig::default(), &zero_input).unwrap();
        let st0 = tr0.stage("dove_fwd").unwrap().to_basis(PolBasis::Linear);
        let s = FRAC_1_SQRT_2;
        assert!((st0.amp(1, 1) - Complex64::from_polar(s, -ml)).norm() < 1e-14);
        assert!((st0.amp(0, -1) - Complex64::from_polar(s, ml)).norm() < 1e-14);
        assert_eq!(st.window(), w);

        // OAM factor of the output is D_{2mθ}|Φ⟩.
        let out = out.to_basis(PolBasis::Circular);
        let rot = 2.0 * 2.0 * theta;
        for pol in 0..2 {
            let r0 = out.amp(pol, 0) / phi[0].1;
            let r1 = out.amp(pol, 1) / phi[1].1;
            assert!((r1 / r0 - Complex64::from_polar(1.0, -rot)).norm() < 1e-12);
        }
    }

    #[test]
    fn fringe_law_and_purity() {
        let pairs = [(2, 1), (4, 2), (6, 3), (8, 4), (12, 6), (8, 128)];
        for &(m, l) in &pairs {
            let input = canonical_input(l).unwrap();
            for i in 0..7 {
                let theta = -0.9 + 0.3 * i as f64;
                let p = SwitchParams::new(m, l, theta, 0.4).unwrap();
                let (out, _) = run_roundtrip(&p, &OpticsConfig::default(), &input).unwrap();
                assert!((project_probability(&out, &p) - ideal_probability(&p)).abs() < 1e-10);
                assert!(control_purity(&out) >= 1.0 - 1e-10);
                let (mean, _) = lz_moments(&out).unwrap();
                assert!(mean.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn project_probability_extremes() {
        let input = canonical_input(1).unwrap();
        let p = SwitchParams::new(2, 1, 0.1, -0.8).unwrap();
        let (out, _) = run_roundtrip(&p, &OpticsConfig::default(), &input).unwrap();
        assert!(project_probability(&out, &p).abs() < 1e-12);
        let p = SwitchParams::new(2, 1, 0.1, PI - 0.8).unwrap();
        let (out, _) = run_roundtrip(&p, &OpticsConfig::default(), &input).unwrap();
        assert!((project_probability(&out, &p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_matches_caption() {
        for &(m, l, theta) in &[(2, 1, 0.3), (4, 2, -1.2), (8, 128, 0.000436)] {
            let p = SwitchParams::new(m, l, theta, 0.0).unwrap();
            let input = canonical_input(l).unwrap();
            let (_, trace) = run_roundtrip(&p, &OpticsConfig::default(), &input).unwrap();
            let reference = caption_reference(&p, &[(0, ONE)], input.window()).unwrap();
            for (label, f) in trace_fidelities(&trace, &reference).unwrap() {
                assert!(f >= 1.0 - 1e-10, "{label}: {f}");
            }
        }
    }

    #[test]
    fn compensation_restores_visibility() {
        let input = canonical_input(2).unwrap();
        let optics = OpticsConfig {
            dove: DovePrismModel { alpha: 0.3, delta: 0.5, rho: 0.9, include_polarization_deflection: true },
            compensation: true,
        };
        let broken = OpticsConfig { compensation: false, ..optics };
        let mut vis_off = Vec::new();
        for i in 0..5 {
            let p = SwitchParams::new(4, 2, 0.05 + 0.2 * i as f64, 0.0).unwrap();
            let (on, _) = run_roundtrip(&p, &optics, &input).unwrap();
            assert!(fringe_visibility(&on) >= 1.0 - 1e-12);
            assert!((project_probability(&on, &p) - ideal_probability(&p)).abs() < 1e-10);
            let (off, _) = run_roundtrip(&p, &broken, &input).unwrap();
            vis_off.push(fringe_visibility(&off));
        }
        assert!(vis_off.iter().all(|&v| v < 0.999));
        let spread = vis_off.iter().cloned().fold(f64::MIN, f64::max)
            - vis_off.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 1e-4, "visibility should depend on theta: {vis_off:?}");
    }

    #[test]
    fn equivalence_examples() {
        let p = SwitchParams::new(2, 1, 0.0, 0.7).unwrap();
        let r = equivalence_check(&p, &[(0, ONE)], &[0.0]).unwrap();
        let (_, pw, pq) = r.samples[0];
        assert!((pw - 0.5 * (1.0 - 0.7f64.cos())).abs() < 1e-14);
        assert!((pq - pw).abs() < 1e-14);

        let p = SwitchParams::new(2, 1, 0.3, 0.0).unwrap();
        let r = equivalence_check(&p, &[(0, ONE), (1, ONE)], &[0.3]).unwrap();
        assert!(r.max_deviation <= 1e-10);
        let (_, pw, _) = r.samples[0];
        assert!((pw - ideal_probability(&p)).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_rejects_odd_m() {
        let p = SwitchParams::new(3, 1, 0.1, 0.0).unwrap();
        assert!(run_roundtrip(&p, &OpticsConfig::default(), &canonical_input(1).unwrap()).is_err());
        assert!(SwitchParams::new(2, 1, PI, 0.0).is_err());
    }

    #[test]
    fn roundtrip_guard_band_error() {
        let p = SwitchParams::new(2, 3, 0.1, 0.0).unwrap();
        let small = make_state(PolKet::h(), &[(0, ONE)], OamWindow::symmetric(4, 2).unwrap()).unwrap();
        assert!(matches!(
            run_roundtrip(&p, &OpticsConfig::default(), &small),
            Err(QsError::ShiftIntoGuardBand { .. })
        ));
    }
}
