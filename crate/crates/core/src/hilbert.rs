//! Truncated polarization ⊗ OAM Hilbert space.
//!
//! OAM indices are plain integers (ħ = 1). A window `[l_min, l_max]` carries a
//! guard band of `guard` indices at each edge; amplitude is never allowed to
//! enter the guard band, so shifts never wrap and every ladder identity stays
//! exact on the interior.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QsError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Tolerance used to decide whether a state counts as normalized.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OamWindow {
    l_min: i64,
    l_max: i64,
    guard: u32,
}

impl OamWindow {
    pub fn new(l_min: i64, l_max: i64, guard: u32) -> Result<Self> {
        if l_min >= l_max {
            return Err(QsError::InvalidWindow(format!(
                "l_min {l_min} must be below l_max {l_max}"
            )));
        }
        let size = l_max - l_min + 1;
        if size < 2 * i64::from(guard) + 1 {
            return Err(QsError::InvalidWindow(format!(
                "window of {size} indices cannot hold two guard bands of {guard}"
            )));
        }
        Ok(Self { l_min, l_max, guard })
    }

    pub fn symmetric(half_width: i64, guard: u32) -> Result<Self> {
        Self::new(-half_width, half_width, guard)
    }

    /// Default window for a SWITCH run with Q-plate order `l`: the pipeline
    /// shifts by at most `2l`, padded by a guard band of 8.
    pub fn for_switch(l: u32) -> Self {
        const GUARD: u32 = 8;
        let half = 2 * i64::from(l) + i64::from(GUARD);
        Self { l_min: -half, l_max: half, guard: GUARD }
    }

    pub fn l_min(&self) -> i64 {
        self.l_min
    }

    pub fn l_max(&self) -> i64 {
        self.l_max
    }

    pub fn guard(&self) -> u32 {
        self.guard
    }

    pub fn len(&self) -> usize {
        (self.l_max - self.l_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, oam: i64) -> Option<usize> {
        (self.l_min..=self.l_max)
            .contains(&oam)
            .then(|| (oam - self.l_min) as usize)
    }

    pub fn oam_at(&self, index: usize) -> i64 {
        self.l_min + index as i64
    }

    pub fn interior_min(&self) -> i64 {
        self.l_min + i64::from(self.guard)
    }

    pub fn interior_max(&self) -> i64 {
        self.l_max - i64::from(self.guard)
    }

    pub fn is_interior(&self, oam: i64) -> bool {
        (self.interior_min()..=self.interior_max()).contains(&oam)
    }

    /// Interior indices that stay interior under every shift of magnitude up to `margin`.
    pub fn interior_with_margin(&self, margin: u32) -> Vec<i64> {
        let m = i64::from(margin);
        ((self.interior_min() + m)..=(self.interior_max() - m)).collect()
    }
}

/// Polarization basis of the control qubit.
///
/// Index convention: linear `[H, V]`, circular `[L, R]`; the control qubit
/// labels `|0⟩ ≡ |L⟩`, `|1⟩ ≡ |R⟩`. Circular states are
/// `|R⟩ = (|H⟩ − i|V⟩)/√2`, `|L⟩ = (|H⟩ + i|V⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolBasis {
    Linear,
    Circular,
}

impl PolBasis {
    pub fn labels(self) -> [&'static str; 2] {
        match self {
            PolBasis::Linear => ["H", "V"],
            PolBasis::Circular => ["L", "R"],
        }
    }
}

/// Matrix whose columns are `|L⟩, |R⟩` written in the `H, V` basis.
pub fn circular_to_linear() -> Matrix2<Complex64> {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let i = Complex64::new(0.0, FRAC_1_SQRT_2);
    Matrix2::new(s, s, i, -i)
}

/// Change-of-basis matrix taking coordinates in `from` to coordinates in `to`.
pub fn basis_change(from: PolBasis, to: PolBasis) -> Matrix2<Complex64> {
    match (from, to) {
        (PolBasis::Circular, PolBasis::Linear) => circular_to_linear(),
        (PolBasis::Linear, PolBasis::Circular) => circular_to_linear().adjoint(),
        _ => Matrix2::identity(),
    }
}

/// A pure polarization ket, tagged with the basis its coordinates refer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolKet {
    pub basis: PolBasis,
    pub amps: [Complex64; 2],
}

impl PolKet {
    pub fn h() -> Self {
        Self { basis: PolBasis::Linear, amps: [ONE, ZERO] }
    }

    pub fn v() -> Self {
        Self { basis: PolBasis::Linear, amps: [ZERO, ONE] }
    }

    pub fn l() -> Self {
        Self { basis: PolBasis::Circular, amps: [ONE, ZERO] }
    }

    pub fn r() -> Self {
        Self { basis: PolBasis::Circular, amps: [ZERO, ONE] }
    }

    /// Balanced control state `(|0⟩ + |1⟩)/√2 = (|L⟩ + |R⟩)/√2`.
    pub fn plus() -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self { basis: PolBasis::Circular, amps: [s, s] }
    }

    pub fn in_basis(&self, basis: PolBasis) -> Self {
        let c = basis_change(self.basis, basis);
        let v = c * nalgebra::Vector2::new(self.amps[0], self.amps[1]);
        Self { basis, amps: [v[0], v[1]] }
    }
}

/// Joint polarization ⊗ OAM amplitude table.
///
/// Amplitudes are stored pol-major: index `pol * window.len() + oam_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    window: OamWindow,
    basis: PolBasis,
    amp: Vec<Complex64>,
    unnormalized: bool,
}

impl JointState {
    /// Builds a state from raw amplitudes, checking length and guard-band support.
    /// The state is tagged unnormalized when its norm differs from one.
    pub fn from_amplitudes(
        window: OamWindow,
        basis: PolBasis,
        amp: Vec<Complex64>,
    ) -> Result<Self> {
        if amp.len() != 2 * window.len() {
            return Err(QsError::DimensionMismatch(format!(
                "expected {} amplitudes, got {}",
                2 * window.len(),
                amp.len()
            )));
        }
        let s = Self { window, basis, amp, unnormalized: false };
        if let Some(k) = s.support().find(|&k| !window.is_interior(k)) {
            return Err(QsError::SupportInGuardBand { index: k });
        }
        let n = s.norm_sqr();
        Ok(Self { unnormalized: (n - 1.0).abs() > NORM_TOL, ..s })
    }

    pub fn window(&self) -> OamWindow {
        self.window
    }

    pub fn basis(&self) -> PolBasis {
        self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    pub fn is_unnormalized(&self) -> bool {
        self.unnormalized
    }

    pub fn amp(&self, pol: usize, oam: i64) -> Complex64 {
        self.window
            .index_of(oam)
            .map_or(ZERO, |i| self.amp[pol * self.window.len() + i])
    }

    pub fn pol_slice(&self, pol: usize) -> &[Complex64] {
        let n = self.window.len();
        &self.amp[pol * n..(pol + 1) * n]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    /// OAM indices carrying nonzero amplitude in either polarization.
    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.window.len();
        (0..n)
            .filter(move |&i| self.amp[i] != ZERO || self.amp[n + i] != ZERO)
            .map(move |i| self.window.oam_at(i))
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(QsError::NonNormalizable);
        }
        Ok(Self {
            amp: self.amp.iter().map(|a| a / n).collect(),
            unnormalized: false,
            ..self.clone()
        })
    }

    pub fn to_basis(&self, basis: PolBasis) -> Self {
        if basis == self.basis {
            return self.clone();
        }
        let c = basis_change(self.basis, basis);
        let n = self.window.len();
        let mut amp = vec![ZERO; 2 * n];
        for i in 0..n {
            let (a0, a1) = (self.amp[i], self.amp[n + i]);
            amp[i] = c[(0, 0)] * a0 + c[(0, 1)] * a1;
            amp[n + i] = c[(1, 0)] * a0 + c[(1, 1)] * a1;
        }
        Self { basis, amp, ..self.clone() }
    }

    /// `⟨self|other⟩`, computed in `self`'s basis.
    pub fn inner(&self, other: &JointState) -> Result<Complex64> {
        if self.window != other.window {
            return Err(QsError::DimensionMismatch("states live on different windows".into()));
        }
        let other = other.to_basis(self.basis);
        Ok(self
            .amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Global-phase-insensitive overlap `|⟨a|b⟩| / (‖a‖‖b‖)`.
    pub fn fidelity(&self, other: &JointState) -> Result<f64> {
        let ov = self.inner(other)?.norm();
        let denom = (self.norm_sqr() * other.norm_sqr()).sqrt();
        if denom == 0.0 {
            return Err(QsError::NonNormalizable);
        }
        Ok(ov / denom)
    }

    /// Polarization density matrix with the OAM factor traced out.
    /// Entry `(i, j)` is `Σ_k a_{i,k} a*_{j,k}` in the state's own basis.
    pub fn reduced_polarization(&self) -> Matrix2<Complex64> {
        let (p0, p1) = (self.pol_slice(0), self.pol_slice(1));
        let dot = |x: &[Complex64], y: &[Complex64]| -> Complex64 {
            x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
        };
        Matrix2::new(dot(p0, p0), dot(p0, p1), dot(p1, p0), dot(p1, p1))
    }

    fn with_amps(&self, basis: PolBasis, amp: Vec<Complex64>, unitary: bool) -> Self {
        let unnormalized = if unitary && !self.unnormalized {
            false
        } else {
            let n: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
            (n - 1.0).abs() > NORM_TOL
        };
        Self { window: self.window, basis, amp, unnormalized }
    }
}

/// Builds the normalized product state `pol ⊗ Σ c_k |k⟩`.
pub fn make_state(
    pol: PolKet,
    oam_dist: &[(i64, Complex64)],
    window: OamWindow,
) -> Result<JointState> {
    if oam_dist.is_empty() {
        return Err(QsError::EmptyDistribution);
    }
    let n = window.len();
    let mut oam = vec![ZERO; n];
    for &(k, c) in oam_dist {
        if !window.is_interior(k) {
            return Err(QsError::SupportInGuardBand { index: k });
        }
        oam[window.index_of(k).expect("interior index is inside window")] += c;
    }
    let norm = (oam.iter().map(|a| a.norm_sqr()).sum::<f64>()
        * pol.amps.iter().map(|a| a.norm_sqr()).sum::<f64>())
    .sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(QsError::NonNormalizable);
    }
    let mut amp = Vec::with_capacity(2 * n);
    for p in pol.amps {
        amp.extend(oam.iter().map(|c| p * c / norm));
    }
    Ok(JointState { window, basis: pol.basis, amp, unnormalized: false })
}

/// Elementary action of a [`LinearOp`].
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Multiplies every amplitude by a constant.
    Scalar(Complex64),
    /// Rotation of the transverse mode by `angle`: `|k⟩ → e^{−ik·angle}|k⟩`.
    Rotation { angle: f64 },
    /// Ladder shift `|k⟩ → |k + delta⟩`.
    Shift(i64),
    /// 2×2 block on the polarization factor, written in `basis`.
    Jones { matrix: Matrix2<Complex64>, basis: PolBasis },
    /// `Σ_t |out_t⟩⟨in_t| ⊗ A_t` with each `A_t` acting on OAM only.
    Coupled { basis: PolBasis, terms: Vec<CoupledTerm> },
    /// Operators applied left to right (first element acts first).
    Sequence(Vec<LinearOp>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledTerm {
    pub out: usize,
    pub input: usize,
    pub oam: LinearOp,
}

impl CoupledTerm {
    pub fn new(out: usize, input: usize, oam: LinearOp) -> Result<Self> {
        if out > 1 || input > 1 {
            return Err(QsError::DimensionMismatch(format!(
                "polarization index out of range: {out} <- {input}"
            )));
        }
        if !oam.is_oam_only() {
            return Err(QsError::InvalidParameter(format!(
                "coupled term `{}` must act on OAM only",
                oam.label
            )));
        }
        Ok(Self { out, input, oam })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearOp {
    label: String,
    action: Action,
    unitary: bool,
}

impl LinearOp {
    pub fn new(label: impl Into<String>, action: Action, unitary: bool) -> Self {
        Self { label: label.into(), action, unitary }
    }

    pub fn identity() -> Self {
        Self::new("identity", Action::Scalar(ONE), true)
    }

    pub fn scalar(c: Complex64) -> Self {
        Self::new("scalar", Action::Scalar(c), (c.norm() - 1.0).abs() < 1e-14)
    }

    pub fn jones(label: impl Into<String>, matrix: Matrix2<Complex64>, basis: PolBasis) -> Self {
        let defect = (matrix.adjoint() * matrix - Matrix2::identity()).norm();
        Self::new(label, Action::Jones { matrix, basis }, defect <= 1e-12)
    }

    /// `ops` applied in order: `ops[0]` first.
    pub fn sequence(label: impl Into<String>, ops: Vec<LinearOp>) -> Self {
        let unitary = ops.iter().all(|o| o.unitary);
        Self::new(label, Action::Sequence(ops), unitary)
    }

    /// `self` followed by `next`.
    pub fn then(self, next: LinearOp) -> Self {
        let label = format!("{} ; {}", self.label, next.label);
        Self::sequence(label, vec![self, next])
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn action(&self) -> &Action {
        &self.action
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn is_oam_only(&self) -> bool {
        match &self.action {
            Action::Scalar(_) | Action::Rotation { .. } | Action::Shift(_) => true,
            Action::Sequence(ops) => ops.iter().all(LinearOp::is_oam_only),
            Action::Jones { .. } | Action::Coupled { .. } => false,
        }
    }

    /// Largest absolute ladder shift any single stage can apply.
    pub fn max_shift(&self) -> u32 {
        match &self.action {
            Action::Shift(d) => d.unsigned_abs() as u32,
            Action::Sequence(ops) => ops.iter().map(LinearOp::max_shift).max().unwrap_or(0),
            Action::Coupled { terms, .. } => {
                terms.iter().map(|t| t.oam.max_shift()).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    pub fn adjoint(&self) -> Self {
        let action = match &self.action {
            Action::Scalar(c) => Action::Scalar(c.conj()),
            Action::Rotation { angle } => Action::Rotation { angle: -angle },
            Action::Shift(d) => Action::Shift(-d),
            Action::Jones { matrix, basis } => Action::Jones { matrix: matrix.adjoint(), basis: *basis },
            Action::Coupled { basis, terms } => Action::Coupled {
                basis: *basis,
                terms: terms
                    .iter()
                    .map(|t| CoupledTerm { out: t.input, input: t.out, oam: t.oam.adjoint() })
                    .collect(),
            },
            Action::Sequence(ops) => Action::Sequence(ops.iter().rev().map(LinearOp::adjoint).collect()),
        };
        Self { label: format!("({})†", self.label), action, unitary: self.unitary }
    }

    /// Applies an OAM-only operator to one polarization slice.
    fn apply_oam(&self, window: OamWindow, slice: &[Complex64]) -> Result<Vec<Complex64>> {
        match &self.action {
            Action::Scalar(c) => Ok(slice.iter().map(|a| a * c).collect()),
            Action::Rotation { angle } => Ok(slice
                .iter()
                .enumerate()
                .map(|(i, a)| a * Complex64::from_polar(1.0, -(window.oam_at(i) as f64) * angle))
                .collect()),
            Action::Shift(delta) => {
                let mut out = vec![ZERO; slice.len()];
                for (i, a) in slice.iter().enumerate() {
                    if *a == ZERO {
                        continue;
                    }
                    let from = window.oam_at(i);
                    let to = from + delta;
                    if !window.is_interior(from) || !window.is_interior(to) {
                        return Err(QsError::ShiftIntoGuardBand { from, to });
                    }
                    out[window.index_of(to).expect("interior")] = *a;
                }
                Ok(out)
            }
            Action::Sequence(ops) => {
                let mut cur = slice.to_vec();
                for op in ops {
                    cur = op.apply_oam(window, &cur)?;
                }
                Ok(cur)
            }
            Action::Jones { .. } | Action::Coupled { .. } => Err(QsError::DimensionMismatch(
                format!("`{}` acts on polarization", self.label),
            )),
        }
    }

    fn apply_raw(&self, s: &JointState) -> Result<JointState> {
        let n = s.window.len();
        match &self.action {
            Action::Scalar(_) | Action::Rotation { .. } | Action::Shift(_) => {
                let mut amp = self.apply_oam(s.window, s.pol_slice(0))?;
                amp.extend(self.apply_oam(s.window, s.pol_slice(1))?);
                Ok(s.with_amps(s.basis, amp, self.unitary))
            }
            Action::Jones { matrix, basis } => {
                let src = s.to_basis(*basis);
                let mut amp = vec![ZERO; 2 * n];
                for i in 0..n {
                    let (a0, a1) = (src.amp[i], src.amp[n + i]);
                    amp[i] = matrix[(0, 0)] * a0 + matrix[(0, 1)] * a1;
                    amp[n + i] = matrix[(1, 0)] * a0 + matrix[(1, 1)] * a1;
                }
                Ok(s.with_amps(*basis, amp, self.unitary))
            }
            Action::Coupled { basis, terms } => {
                let src = s.to_basis(*basis);
                let mut amp = vec![ZERO; 2 * n];
                for t in terms {
                    let moved = t.oam.apply_oam(s.window, src.pol_slice(t.input))?;
                    for (dst, a) in amp[t.out * n..(t.out + 1) * n].iter_mut().zip(moved) {
                        *dst += a;
                    }
                }
                Ok(s.with_amps(*basis, amp, self.unitary))
            }
            Action::Sequence(ops) => {
                let mut cur = s.clone();
                for op in ops {
                    cur = op.apply_raw(&cur)?;
                }
                Ok(cur)
            }
        }
    }

    /// Dense matrix of the operator restricted to columns `(pol, k)` for `k` in `domain`,
    /// rows spanning the full window. Row/column order is pol-major in `basis`.
    pub fn matrix_on(
        &self,
        window: OamWindow,
        basis: PolBasis,
        domain: &[i64],
    ) -> Result<DMatrix<Complex64>> {
        let n = window.len();
        let mut m = DMatrix::from_element(2 * n, 2 * domain.len(), ZERO);
        for pol in 0..2 {
            for (c, &k) in domain.iter().enumerate() {
                let mut amp = vec![ZERO; 2 * n];
                let idx = window
                    .index_of(k)
                    .ok_or(QsError::SupportInGuardBand { index: k })?;
                amp[pol * n + idx] = ONE;
                let e = JointState::from_amplitudes(window, basis, amp)?;
                let col = apply(self, &e)?.to_basis(basis);
                for (r, a) in col.amp.iter().enumerate() {
                    m[(r, pol * domain.len() + c)] = *a;
                }
            }
        }
        Ok(m)
    }
}

/// `e^{−i L_z φ}`: multiplies the amplitude at OAM index `k` by `e^{−ikφ}`.
pub fn rotation_op(phi: f64) -> LinearOp {
    LinearOp::new(format!("rot({phi})"), Action::Rotation { angle: phi }, true)
}

/// Ladder shift `|k⟩ → |k + delta⟩`; `shift_op(l)` is `D_l`.
pub fn shift_op(delta: i64) -> LinearOp {
    LinearOp::new(format!("shift({delta})"), Action::Shift(delta), true)
}

/// Applies `op` to `s`, returning a new state.
pub fn apply(op: &LinearOp, s: &JointState) -> Result<JointState> {
    op.apply_raw(s)
}

/// Ratio `⟨ψ₂|ψ₁⟩/⟨ψ₂|ψ₂⟩` with `ψ₁ = shift(a)·rot(φ)·s` and `ψ₂ = rot(φ)·shift(a)·s`.
/// Equals `e^{iaφ}` for every interior state.
pub fn weyl_phase_check(a: i64, phi: f64, s: &JointState) -> Result<Complex64> {
    let psi1 = apply(&shift_op(a), &apply(&rotation_op(phi), s)?)?;
    let psi2 = apply(&rotation_op(phi), &apply(&shift_op(a), s)?)?;
    let n = psi2.norm_sqr();
    if n == 0.0 {
        return Err(QsError::NonNormalizable);
    }
    Ok(psi2.inner(&psi1)? / n)
}

/// Mean and standard deviation of `L_z` (units of ħ).
pub fn lz_moments(s: &JointState) -> Result<(f64, f64)> {
    let norm_sqr = s.norm_sqr();
    if (norm_sqr - 1.0).abs() > NORM_TOL {
        return Err(QsError::UnnormalizedState { norm_sqr });
    }
    let n = s.window.len();
    let (mut m1, mut m2) = (0.0, 0.0);
    for i in 0..n {
        let k = s.window.oam_at(i) as f64;
        let w = s.amp[i].norm_sqr() + s.amp[n + i].norm_sqr();
        m1 += k * w;
        m2 += k * k * w;
    }
    Ok((m1, (m2 - m1 * m1).max(0.0).sqrt()))
}
