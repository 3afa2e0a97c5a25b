//! Unitary product expansion of time-dependent quantum propagators.
//!
//! The interaction-picture propagator is approximated by a finite product of
//! exponentials `exp(-(i lambda)^k W_k(t))`, each exactly unitary, with the
//! generators built from nested commutator integrals of `H1(t)`. The crate also
//! ships the reference propagators (fourth-order stepping, Dyson truncations,
//! the c-number closed form) and builders for the driven oscillator, the
//! cavity Raman Lambda-system and the quantum Rabi model.

pub mod dynamics;
pub mod error;
pub mod expansion;
pub mod operator;
pub mod models;
pub mod propagators;
pub mod quadrature;
pub mod result;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type OperatorF64 = operator::Operator<f64>;
pub type StateF64 = operator::StateVector<f64>;
pub type GridF64 = quadrature::TimeGrid<f64>;
pub type TrajectoryF64 = quadrature::OperatorTrajectory<f64>;
pub type WFamilyF64 = expansion::WFamily<f64>;
pub type SeriesF64 = propagators::PropagatorSeries<f64>;
pub type ResultTableF64 = result::SimulationResult<f64>;
