//! Builders for the driven oscillator, the cavity Raman system and the quantum Rabi model.

pub mod driven;
pub mod frame;
pub mod rabi;
pub mod raman;

pub use driven::{
    driven_amplitudes, driven_analytic, driven_commutator_kernel, driven_h0, driven_h1, driven_hint, Drive,
    DrivenOscillatorSpec,
};
pub use frame::{interaction_picture, Coefficient, InteractionFrame, Modulated};
pub use rabi::{
    rabi_displaced_basis_defect, rabi_h0_spectrum, rabi_hamiltonians, rabi_required_fock_dim, RabiHamiltonians,
    RabiLevel, RabiSpec, GRAM_TOL, QUBIT_E, QUBIT_G,
};
pub use raman::{
    raman_effective, raman_generator_residuals, raman_hamiltonians, raman_tune, RamanHamiltonians, RamanParams,
    RamanResiduals, RamanSpec, LEVEL_E, LEVEL_G, LEVEL_I,
};

use nalgebra::DVector;
use num_complex::Complex;

use crate::operator::HilbertSpace;
use crate::scalar::{modulus, Real};

/// Total population on Fock levels `>= from_level`, with the Fock mode as the
/// last tensor factor of `space`.
pub fn fock_tail_population<T: Real>(amplitudes: &DVector<Complex<T>>, space: &HilbertSpace, from_level: usize) -> T {
    let d = *space.factors().last().expect("non-empty space");
    amplitudes
        .iter()
        .enumerate()
        .filter(|(i, _)| i % d >= from_level)
        .fold(T::zero(), |acc, (_, z)| {
            let m = modulus(*z);
            acc + m * m
        })
}
