//! Operator models of the optical train: Q-plate, Dove prism pairs with their
//! total-internal-reflection Jones matrices, the QWP–Faraday conversion suites
//! and the polarization-exchanging hollow-roof-prism composite.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QsError, Result};
use crate::hilbert::{
    basis_change, rotation_op, shift_op, Action, CoupledTerm, LinearOp, PolBasis,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// 2×2 polarization operator tagged with the basis it is written in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix {
    pub matrix: Matrix2<Complex64>,
    pub basis: PolBasis,
}

impl JonesMatrix {
    pub fn new(matrix: Matrix2<Complex64>, basis: PolBasis) -> Self {
        Self { matrix, basis }
    }

    pub fn identity() -> Self {
        Self::new(Matrix2::identity(), PolBasis::Linear)
    }

    pub fn in_basis(&self, basis: PolBasis) -> Self {
        let c = basis_change(self.basis, basis);
        Self::new(c * self.matrix * c.adjoint(), basis)
    }

    /// `self · other` (other acts first).
    pub fn compose(&self, other: &JonesMatrix) -> Self {
        Self::new(self.matrix * other.in_basis(self.basis).matrix, self.basis)
    }

    /// Frobenius norm of `U†U − I`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.matrix.adjoint() * self.matrix - Matrix2::identity()).norm()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= 1e-12
    }

    /// If `self = c·I` to within `tol` (Frobenius), returns `c`.
    pub fn scalar_part(&self, tol: f64) -> Option<Complex64> {
        let c = (self.matrix[(0, 0)] + self.matrix[(1, 1)]) / 2.0;
        ((self.matrix - Matrix2::identity() * c).norm() <= tol).then_some(c)
    }

    pub fn to_op(&self, label: impl Into<String>) -> LinearOp {
        LinearOp::jones(label, self.matrix, self.basis)
    }
}

/// Frame rotation `[[cos α, sin α], [−sin α, cos α]]`.
fn frame_rotation(alpha: f64) -> Matrix2<Complex64> {
    let (s, c) = alpha.sin_cos();
    Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(c, 0.0),
    )
}

/// Dove prism polarization model.
///
/// `delta` is the s–p retardance and `rho` the s/p amplitude ratio picked up at
/// the internal reflection; `alpha` is the prism axis relative to the
/// polarization frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DovePrismModel {
    pub alpha: f64,
    pub delta: f64,
    pub rho: f64,
    pub include_polarization_deflection: bool,
}

impl Default for DovePrismModel {
    fn default() -> Self {
        Self { alpha: 0.0, delta: 0.2, rho: 0.99, include_polarization_deflection: false }
    }
}

impl DovePrismModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(QsError::InvalidParameter(format!("rho {} not in (0, 1]", self.rho)));
        }
        if !self.alpha.is_finite() || !self.delta.is_finite() {
            return Err(QsError::InvalidParameter("prism angles must be finite".into()));
        }
        Ok(())
    }

    pub fn rotated(&self, by: f64) -> Self {
        Self { alpha: self.alpha + by, ..*self }
    }
}

/// `J(α) = R(−α)·diag(1, ρe^{iδ})·R(α)` in the linear basis; identity when
/// deflection is switched off.
pub fn dove_jones(d: &DovePrismModel) -> JonesMatrix {
    if !d.include_polarization_deflection {
        return JonesMatrix::identity();
    }
    let diag = Matrix2::new(ONE, ZERO, ZERO, Complex64::from_polar(d.rho, d.delta));
    JonesMatrix::new(
        frame_rotation(-d.alpha) * diag * frame_rotation(d.alpha),
        PolBasis::Linear,
    )
}

/// Q-plate of order `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QPlateModel {
    pub order: u32,
}

/// `Q_l = D_l ⊗ |R⟩⟨L| + D_l† ⊗ |L⟩⟨R|`.
pub fn qplate_op(q: QPlateModel) -> LinearOp {
    let l = i64::from(q.order);
    let terms = vec![
        CoupledTerm::new(1, 0, shift_op(l)).expect("valid coupled term"),
        CoupledTerm::new(0, 1, shift_op(-l)).expect("valid coupled term"),
    ];
    LinearOp::new(
        format!("qplate({l})"),
        Action::Coupled { basis: PolBasis::Circular, terms },
        true,
    )
}

/// One stationary plus one rotatable prism; the rotatable one sits at
/// `alpha + theta_rel`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DovePair {
    pub stationary: DovePrismModel,
    pub rotatable: DovePrismModel,
}

impl DovePair {
    pub fn uniform(model: DovePrismModel) -> Self {
        Self { stationary: model, rotatable: model }
    }

    /// Prisms in traversal order for a forward pass at relative angle `theta_rel`.
    fn prisms(&self, theta_rel: f64) -> [DovePrismModel; 2] {
        [self.stationary, self.rotatable.rotated(theta_rel)]
    }
}

/// Direction of travel through the prism train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pass {
    Forward,
    Return,
}

/// Net Jones matrix of a train of pairs. On the return pass prisms are met in
/// reverse order; `orientation_offset` is added to every prism axis.
pub fn dove_train_jones(
    theta_rel: f64,
    pairs: &[DovePair],
    pass: Pass,
    orientation_offset: f64,
) -> JonesMatrix {
    let mut prisms: Vec<DovePrismModel> = pairs
        .iter()
        .flat_map(|p| p.prisms(theta_rel))
        .map(|d| d.rotated(orientation_offset))
        .collect();
    if pass == Pass::Return {
        prisms.reverse();
    }
    prisms
        .iter()
        .fold(JonesMatrix::identity(), |acc, d| dove_jones(d).compose(&acc))
}

/// A single pair: transverse rotation by `2·theta_rel` and the pair's Jones product.
pub fn dove_pair_op(theta_rel: f64, pair: &DovePair) -> LinearOp {
    dove_train_op(theta_rel, std::slice::from_ref(pair), Pass::Forward, 0.0)
}

/// A train of pairs traversed once: rotation `2·theta_rel` per pair on the
/// OAM factor together with the train's Jones matrix.
pub fn dove_train_op(
    theta_rel: f64,
    pairs: &[DovePair],
    pass: Pass,
    orientation_offset: f64,
) -> LinearOp {
    let rot = rotation_op(2.0 * theta_rel * pairs.len() as f64);
    let jones = dove_train_jones(theta_rel, pairs, pass, orientation_offset);
    let label = format!("dove[{}x, {:?}]", pairs.len(), pass);
    LinearOp::sequence(label, vec![jones.to_op("dove-jones"), rot])
}

/// QWP + Faraday rotator suite.
///
/// Forward: `|R⟩ → |V⟩`, `|L⟩ → |H⟩`. The Faraday rotator is non-reciprocal,
/// so the return traversal is not the inverse of the forward one: it maps
/// `|H⟩ → |R⟩`, `|V⟩ → |L⟩`. Use [`LinearOp::adjoint`] for the inverse.
pub fn qwp_fr_suite_op(pass: Pass) -> LinearOp {
    // Matrices act on linear-basis coordinates.
    let l2c = basis_change(PolBasis::Linear, PolBasis::Circular);
    let c2l = basis_change(PolBasis::Circular, PolBasis::Linear);
    let matrix = match pass {
        // coordinates (a_L, a_R) of the input become (a_H, a_V) of the output
        Pass::Forward => l2c,
        // (a_H, a_V) become (a_R, a_L): swap then map circular coordinates back to linear
        Pass::Return => c2l * Matrix2::new(ZERO, ONE, ONE, ZERO),
    };
    LinearOp::jones(format!("qwp-fr[{pass:?}]"), matrix, PolBasis::Linear)
}

/// FR2–QWP2 → HRP → QWP2–FR2 composite: `|H⟩ → |V⟩`, `|V⟩ → −|H⟩`, OAM untouched.
pub fn hrp_flip_op() -> LinearOp {
    LinearOp::jones("hrp-flip", hrp_flip_matrix(), PolBasis::Linear)
}

/// `[[0, −1], [1, 0]]`, a frame rotation by −π/2.
pub fn hrp_flip_matrix() -> Matrix2<Complex64> {
    frame_rotation(-FRAC_PI_2).map(|z| Complex64::new(z.re.round(), 0.0))
}

/// `J₁(α₁+off)···J_m(α_m+off) · J_m(α_m)···J₁(α₁)` for prisms listed in forward
/// traversal order. With `off = π/2` the product is proportional to the identity.
pub fn double_pass_jones(prisms: &[DovePrismModel], offset: f64) -> JonesMatrix {
    let fwd = prisms
        .iter()
        .fold(JonesMatrix::identity(), |acc, d| dove_jones(d).compose(&acc));
    prisms
        .iter()
        .rev()
        .fold(fwd, |acc, d| dove_jones(&d.rotated(offset)).compose(&acc))
}
