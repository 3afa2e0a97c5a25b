//! Three-level Lambda atom in a cavity driven by a classical field (Raman transitions).
//!
//! Levels `g`, `e` (close, low) and `i` (upper). Basis index `level * fock_dim + n`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::expansion::{compute_w1, compute_w2};
use crate::operator::{annihilation, HilbertSpace, Operator};
use crate::quadrature::TimeGrid;
use crate::scalar::{abs, cplx, expi, real, to_f64, Real};

use std::sync::Arc;

use super::frame::{InteractionFrame, Modulated};

pub const LEVEL_G: usize = 0;
pub const LEVEL_E: usize = 1;
pub const LEVEL_I: usize = 2;

const SINGULAR_DETUNING: f64 = 1e-9;

/// Raman parameters before tuning (`Delta` and `omega_2` are solved for).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanParams<T> {
    pub omega_ig: T,
    pub omega_eg: T,
    pub omega_1: T,
    pub omega_gi: T,
    pub omega_ei: T,
    pub n0: usize,
    pub fock_dim: usize,
}

/// Tuned Raman configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RamanSpec<T> {
    pub params: RamanParams<T>,
    pub delta: T,
    pub omega_2: T,
    pub warnings: Vec<String>,
}

impl<T: Real> RamanSpec<T> {
    /// `omega_ie = omega_ig - omega_eg`.
    pub fn omega_ie(&self) -> T {
        self.params.omega_ig - self.params.omega_eg
    }

    /// Angular frequency of the `|g, n0+1> <-> |e, n0>` population exchange,
    /// `2 Omega_gi Omega_ei sqrt(n0+1) / |Delta|`.
    pub fn predicted_frequency(&self) -> T {
        let p = &self.params;
        let two: T = real(2.0);
        two * p.omega_gi * p.omega_ei * real::<T>((p.n0 + 1) as f64).sqrt() / abs(self.delta)
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::new(vec![3, self.params.fock_dim]).expect("validated dimension")
    }

    pub fn index(&self, level: usize, n: usize) -> usize {
        level * self.params.fock_dim + n
    }

    /// Residual of the detuning condition `Delta - (omega_ig - omega_1) - c / Delta`.
    pub fn detuning_residual(&self) -> T {
        let c = coupling_sum(&self.params);
        self.delta - (self.params.omega_ig - self.params.omega_1) - c / self.delta
    }
}

fn coupling_sum<T: Real>(p: &RamanParams<T>) -> T {
    let gi2 = p.omega_gi * p.omega_gi;
    let two: T = real(2.0);
    p.omega_ei * p.omega_ei + two * gi2 + two * real::<T>(p.n0 as f64) * gi2
}

/// Solves the detuning condition for `Delta` (root closest to `omega_ig - omega_1`)
/// and sets `omega_2` for resonance of `|g, n0+1> <-> |e, n0>`.
pub fn raman_tune<T: Real>(params: RamanParams<T>) -> Result<RamanSpec<T>> {
    let p = &params;
    for v in [p.omega_ig, p.omega_eg, p.omega_1, p.omega_gi, p.omega_ei] {
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
    }
    if p.omega_gi < T::zero() || p.omega_ei < T::zero() {
        return Err(Error::InvalidInput("Rabi frequencies must be >= 0".into()));
    }
    if p.fock_dim < p.n0 + 2 {
        return Err(Error::InvalidInput(format!(
            "fock_dim {} cannot hold |g, n0+1> with n0 = {}",
            p.fock_dim, p.n0
        )));
    }
    let b = p.omega_ig - p.omega_1;
    let c = coupling_sum(p);
    if b == T::zero() && c == T::zero() {
        return Err(Error::Degenerate("omega_ig = omega_1 with zero couplings".into()));
    }
    // Delta^2 - b Delta - c = 0; pick the root on the side of b, computed without cancellation
    let four: T = real(4.0);
    let disc = (b * b + four * c).sqrt();
    let half: T = real(0.5);
    let delta = if b >= T::zero() { half * (b + disc) } else { half * (b - disc) };
    if delta == T::zero() {
        return Err(Error::Degenerate("both detuning roots vanish".into()));
    }
    let omega_2 = p.omega_1 - p.omega_eg - real::<T>((p.n0 + 1) as f64) * p.omega_gi * p.omega_gi / delta
        + p.omega_ei * p.omega_ei / delta;

    let mut warnings = Vec::new();
    let ten: T = real(10.0);
    let three: T = real(3.0);
    if abs(delta) < ten * p.omega_gi {
        return Err(Error::InvalidInput(format!(
            "|Delta| = {} must be >= 10 Omega_gi = {}",
            abs(delta),
            ten * p.omega_gi
        )));
    }
    if p.omega_gi < three * p.omega_ei {
        return Err(Error::InvalidInput(format!(
            "Omega_gi = {} must be >= 3 Omega_ei = {}",
            p.omega_gi,
            three * p.omega_ei
        )));
    }
    if abs(delta) < real::<T>(20.0) * p.omega_gi {
        warnings.push(format!("|Delta|/Omega_gi = {} is below 20", to_f64(abs(delta) / p.omega_gi)));
    }
    if p.omega_gi < real::<T>(5.0) * p.omega_ei {
        warnings.push(format!("Omega_gi/Omega_ei = {} is below 5", to_f64(p.omega_gi / p.omega_ei)));
    }
    let spec = RamanSpec { params, delta, omega_2, warnings };
    let residual = to_f64(abs(spec.detuning_residual()));
    if residual > 1e-10 * to_f64(abs(delta)) {
        return Err(Error::Degenerate(format!("detuning residual {residual:e} too large")));
    }
    Ok(spec)
}

/// Every operator of the Raman split.
#[derive(Debug, Clone)]
pub struct RamanHamiltonians<T: Real> {
    /// `omega_ig |i><i| + omega_eg |e><e| + omega_1 a^dagger a`.
    pub h0_prime: Operator<T>,
    pub h_ss: Operator<T>,
    /// `H0' + H_SS`.
    pub h0: Operator<T>,
    /// `Omega_gi |i><g| a` (its adjoint is added in [`Self::hint_prime`]).
    pub cavity_raise: Operator<T>,
    /// `Omega_ei |i><e|`, multiplied by `e^{-i omega_2 t}`.
    pub drive_raise: Operator<T>,
    pub omega_2: T,
}

impl<T: Real> RamanHamiltonians<T> {
    pub fn hint_prime(&self, t: T) -> Operator<T> {
        let mut up = self.cavity_raise.clone();
        up.axpy(expi(-self.omega_2 * t), &self.drive_raise);
        &up + &up.dagger()
    }

    /// `H_int = H_int' - H_SS`.
    pub fn hint(&self, t: T) -> Operator<T> {
        &self.hint_prime(t) - &self.h_ss
    }

    pub fn full(&self, t: T) -> Operator<T> {
        &self.h0_prime + &self.hint_prime(t)
    }

    /// [`Self::hint`] split into constant and `e^{-/+ i omega_2 t}` terms.
    pub fn hint_modulated(&self) -> Result<Modulated<T>> {
        let w2 = self.omega_2;
        let mut fixed = &self.cavity_raise + &self.cavity_raise.dagger();
        fixed = &fixed - &self.h_ss;
        let one: super::Coefficient<T> = Arc::new(|_| Complex::new(T::one(), T::zero()));
        Modulated::new(vec![
            (fixed, one),
            (self.drive_raise.clone(), Arc::new(move |t| expi(-w2 * t))),
            (self.drive_raise.dagger(), Arc::new(move |t| expi(w2 * t))),
        ])
    }
}

fn level_projector<T: Real>(space: &HilbertSpace, d: usize, ket: usize, bra: usize, fock: &Operator<T>) -> Operator<T> {
    let q = Operator::basis_projector(&HilbertSpace::single(3).expect("3 levels"), ket, bra).expect("levels < 3");
    let op = q.kron(fock);
    debug_assert_eq!(op.space(), space);
    debug_assert_eq!(fock.dim(), d);
    op
}

fn inverse_diagonal<T: Real>(diag: &[T]) -> Result<Vec<T>> {
    diag.iter()
        .enumerate()
        .map(|(n, &v)| {
            if abs(v) <= real(SINGULAR_DETUNING) {
                Err(Error::SingularDetuning { index: n, value: to_f64(v) })
            } else {
                Ok(T::one() / v)
            }
        })
        .collect()
}

pub fn raman_hamiltonians<T: Real>(spec: &RamanSpec<T>) -> Result<RamanHamiltonians<T>> {
    let p = &spec.params;
    let d = p.fock_dim;
    let space = spec.space();
    let fock = HilbertSpace::single(d)?;
    let a = annihilation::<T>(d)?;
    let ad = a.dagger();
    let id = Operator::identity(&fock);
    let num = &ad * &a;
    let aad = &a * &ad;

    let proj = |k: usize, b: usize, f: &Operator<T>| level_projector(&space, d, k, b, f);

    let mut h0_prime = proj(LEVEL_I, LEVEL_I, &id).scale_real(p.omega_ig);
    h0_prime.axpy(cplx(p.omega_eg, T::zero()), &proj(LEVEL_E, LEVEL_E, &id));
    h0_prime.axpy(cplx(p.omega_1, T::zero()), &Operator::identity(&HilbertSpace::single(3)?).kron(&num));

    // diagonal detuning operators in the number basis
    let two: T = real(2.0);
    let gi2 = p.omega_gi * p.omega_gi;
    let ei2 = p.omega_ei * p.omega_ei;
    let dg: Vec<T> = (0..d)
        .map(|n| p.omega_1 - p.omega_ig + gi2 * (two * real::<T>(n as f64) + T::one()) / spec.delta)
        .collect();
    let de: Vec<T> = (0..d)
        .map(|n| spec.omega_2 - spec.omega_ie() + ei2 * real::<T>(n as f64) / spec.delta)
        .collect();
    let inv_g = Operator::diagonal(&fock, &inverse_diagonal(&dg)?)?;
    let inv_e = Operator::diagonal(&fock, &inverse_diagonal(&de)?)?;

    let gi_over_g = inv_g.scale_real(gi2);
    let ei_over_e = inv_e.scale_real(ei2);
    let i_block = &(&gi_over_g * &aad) + &ei_over_e;
    let mut h_ss = proj(LEVEL_I, LEVEL_I, &i_block);
    h_ss = &h_ss - &proj(LEVEL_G, LEVEL_G, &(&gi_over_g * &num));
    h_ss = &h_ss - &proj(LEVEL_E, LEVEL_E, &ei_over_e);

    let h0 = &h0_prime + &h_ss;
    let cavity_raise = proj(LEVEL_I, LEVEL_G, &a).scale_real(p.omega_gi);
    let drive_raise = proj(LEVEL_I, LEVEL_E, &id).scale_real(p.omega_ei);
    Ok(RamanHamiltonians { h0_prime, h_ss, h0, cavity_raise, drive_raise, omega_2: spec.omega_2 })
}

/// `H_eff = -(Omega_gi Omega_ei / Delta) (|e><g| a + |g><e| a^dagger)`.
pub fn raman_effective<T: Real>(spec: &RamanSpec<T>) -> Result<Operator<T>> {
    let p = &spec.params;
    let d = p.fock_dim;
    let space = spec.space();
    let a = annihilation::<T>(d)?;
    let flip = level_projector(&space, d, LEVEL_E, LEVEL_G, &a);
    let h = &flip + &flip.dagger();
    Ok(h.scale_real(-p.omega_gi * p.omega_ei / spec.delta))
}

/// Largest deviations over the grid of the numerically built generators from
/// the rotating-term-free predictions, measured in spectral norm on the
/// manifold `{|g,n0+1>, |i,n0>, |e,n0>}`.
#[derive(Debug, Clone, Copy)]
pub struct RamanResiduals<T> {
    /// `W_1` against `-H_SS t`.
    pub w1: T,
    /// `i W_2` against `(H_SS + H_eff) t`.
    pub w2: T,
    /// `i W_2` against `H_eff t` alone.
    pub w2_eff_only: T,
    /// Norm of `H_eff t_end`, for scale.
    pub eff_scale: T,
}

pub fn raman_generator_residuals<T: Real>(spec: &RamanSpec<T>, grid: &TimeGrid<T>) -> Result<RamanResiduals<T>> {
    let hs = raman_hamiltonians(spec)?;
    let h_eff = raman_effective(spec)?;
    let frame = InteractionFrame::new(&hs.h0)?;
    let h1 = crate::quadrature::sample(|t| Ok(frame.rotate(&hs.hint(t), t)), grid, "raman H1")?;
    let w1 = compute_w1(&h1)?;
    let w2 = compute_w2(&h1, &w1)?;
    let n0 = spec.params.n0;
    let idx = [spec.index(LEVEL_G, n0 + 1), spec.index(LEVEL_I, n0), spec.index(LEVEL_E, n0)];
    let both = &hs.h_ss + &h_eff;
    let zero = Operator::zeros(h_eff.space());
    let mut out = RamanResiduals { w1: T::zero(), w2: T::zero(), w2_eff_only: T::zero(), eff_scale: T::zero() };
    for (k, t) in grid.nodes().into_iter().enumerate() {
        let w2h = w2.at(k).scale(Complex::new(T::zero(), T::one()));
        out.w1 = out.w1.max(w1.at(k).distance_on(&hs.h_ss.scale_real(-t), &idx));
        out.w2 = out.w2.max(w2h.distance_on(&both.scale_real(t), &idx));
        out.w2_eff_only = out.w2_eff_only.max(w2h.distance_on(&h_eff.scale_real(t), &idx));
    }
    out.eff_scale = h_eff.scale_real(grid.t_end()).distance_on(&zero, &idx);
    Ok(out)
}
