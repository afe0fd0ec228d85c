//! Simulation and estimation toolkit for a rotation-measurement protocol built
//! on a quantum SWITCH of OAM shifts and image rotations.
//!
//! The joint polarization ⊗ OAM state lives in a truncated window of OAM
//! indices ([`hilbert`]). Optical elements are built in [`optics`], assembled
//! into the full round trip in [`switch`], characterised through generators
//! and Fisher information in [`metrology`], and exercised by photon-counting
//! campaigns in [`montecarlo`].

pub mod error;
pub mod hilbert;
pub mod metrology;
pub mod montecarlo;
pub mod optics;
pub mod switch;

pub use error::{QsError, Result};
pub use hilbert::{JointState, LinearOp, OamWindow, PolBasis};
pub use switch::SwitchParams;
