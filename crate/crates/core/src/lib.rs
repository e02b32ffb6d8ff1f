//! Trajectory-level simulation and single-qubit channel analytics for noisy
//! monitored quantum circuits: adaptive circuits steered towards an absorbing
//! state, and U(1) charge-conserving circuits with postselected measurement
//! records.

pub mod channels;
pub mod circuits;
pub mod ensemble;
pub mod gates;
pub mod numeric;
pub mod qstate;
pub mod seeds;

pub use qstate::{ChargeMoments, StateError, StateVector};
