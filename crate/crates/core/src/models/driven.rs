//! Harmonic oscillator under an external force, `H = omega (n + 1/2) + g f(t) (a + a^dagger)`.
//!
//! The coupling `g` plays the role of `lambda`, so `H1(t) = f(t) (a e^{-i omega t} + a^dagger e^{i omega t})`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::operator::{annihilation, displacement, number, HilbertSpace, Operator};
use crate::propagators::{Method, PropagatorSeries};
use crate::quadrature::{gauss_legendre, TimeGrid};
use crate::scalar::{cplx, expi, real, Real};

/// Real drive profile `f(t)`.
pub type Drive<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
pub struct DrivenOscillatorSpec<T: Real> {
    pub omega: T,
    pub g: T,
    pub f: Drive<T>,
    pub fock_dim: usize,
}

impl<T: Real> fmt::Debug for DrivenOscillatorSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DrivenOscillatorSpec")
            .field("omega", &self.omega)
            .field("g", &self.g)
            .field("fock_dim", &self.fock_dim)
            .finish_non_exhaustive()
    }
}

impl<T: Real> DrivenOscillatorSpec<T> {
    pub fn new(omega: T, g: T, f: Drive<T>, fock_dim: usize) -> Result<Self> {
        let spec = Self { omega, g, f, fock_dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > T::zero()) {
            return Err(Error::InvalidInput(format!("omega must be > 0, got {}", self.omega)));
        }
        if !self.g.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.fock_dim < 2 {
            return Err(Error::InvalidInput(format!("fock_dim must be >= 2, got {}", self.fock_dim)));
        }
        Ok(())
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::single(self.fock_dim).expect("validated dimension")
    }

    /// Fock levels on which `[a, a^dagger] = I` holds in the truncated space.
    pub fn untruncated_levels(&self) -> Vec<usize> {
        (0..self.fock_dim - 1).collect()
    }
}

/// `omega (a^dagger a + 1/2)`.
pub fn driven_h0<T: Real>(spec: &DrivenOscillatorSpec<T>) -> Result<Operator<T>> {
    let n = number::<T>(spec.fock_dim)?;
    let mut h = n.scale_real(spec.omega);
    h.axpy(cplx(spec.omega * real(0.5), T::zero()), &Operator::identity(n.space()));
    Ok(h)
}

/// `H_int(t) = g f(t) (a + a^dagger)`.
pub fn driven_hint<T: Real>(spec: &DrivenOscillatorSpec<T>) -> Result<impl Fn(T) -> Operator<T>> {
    spec.validate()?;
    let a = annihilation::<T>(spec.fock_dim)?;
    let x = &a + &a.dagger();
    let (g, f) = (spec.g, spec.f.clone());
    Ok(move |t: T| x.scale_real(g * f(t)))
}

/// `H1(t) = f(t) (a e^{-i omega t} + a^dagger e^{i omega t})`.
pub fn driven_h1<T: Real>(spec: &DrivenOscillatorSpec<T>) -> Result<impl Fn(T) -> Operator<T>> {
    spec.validate()?;
    let a = annihilation::<T>(spec.fock_dim)?;
    let ad = a.dagger();
    let (omega, f) = (spec.omega, spec.f.clone());
    Ok(move |t: T| {
        let p = expi(omega * t);
        let mut h = a.scale(p.conj());
        h.axpy(p, &ad);
        h.scale_real(f(t))
    })
}

/// Scalar kernel with `[H1(t), H1(t')] = -2i k(t, t')` on untruncated levels:
/// `k(t, t') = f(t) f(t') sin(omega (t - t'))`.
pub fn driven_commutator_kernel<T: Real>(spec: &DrivenOscillatorSpec<T>) -> impl Fn(T, T) -> T {
    let (omega, f) = (spec.omega, spec.f.clone());
    move |t: T, s: T| f(t) * f(s) * (omega * (t - s)).sin()
}

/// Displacement amplitude `v(t) = -i g int_0^t f e^{i omega s} ds` and phase
/// `R(t) = int_0^t dt1 int_0^{t1} dt2 f(t1) f(t2) sin(omega (t1 - t2))` at every node,
/// by Gauss-Legendre quadrature on each grid interval.
pub fn driven_amplitudes<T: Real>(spec: &DrivenOscillatorSpec<T>, grid: &TimeGrid<T>) -> Vec<(Complex<T>, T)> {
    const POINTS: usize = 10;
    let (x, w) = gauss_legendre::<T>(POINTS);
    let (omega, f) = (spec.omega, &spec.f);
    let half: T = real(0.5);
    // C = int f cos, S = int f sin over [a, b]
    let moments = |a: T, b: T| -> (T, T) {
        let mut c = T::zero();
        let mut s = T::zero();
        let hw = half * (b - a);
        for (xi, wi) in x.iter().zip(&w) {
            let t = a + hw * (*xi + T::one());
            let ft = f(t) * hw * *wi;
            c += ft * (omega * t).cos();
            s += ft * (omega * t).sin();
        }
        (c, s)
    };
    let nodes = grid.nodes();
    let mut out = Vec::with_capacity(nodes.len());
    let (mut c, mut s, mut r) = (T::zero(), T::zero(), T::zero());
    out.push((Complex::new(T::zero(), T::zero()), T::zero()));
    for win in nodes.windows(2) {
        let (a, b) = (win[0], win[1]);
        let hw = half * (b - a);
        for (xi, wi) in x.iter().zip(&w) {
            let t1 = a + hw * (*xi + T::one());
            let (dc, ds) = moments(a, t1);
            let inner = (omega * t1).sin() * (c + dc) - (omega * t1).cos() * (s + ds);
            r += f(t1) * inner * hw * *wi;
        }
        let (dc, ds) = moments(a, b);
        c += dc;
        s += ds;
        // -i g (C + i S) = g S - i g C
        out.push((cplx(spec.g * s, -spec.g * c), r));
    }
    out
}

/// Closed-form interaction-picture propagator `U(t) = D(v(t)) e^{i g^2 R(t)}`.
pub fn driven_analytic<T: Real>(spec: &DrivenOscillatorSpec<T>, grid: &TimeGrid<T>) -> Result<PropagatorSeries<T>> {
    spec.validate()?;
    let g2 = spec.g * spec.g;
    let mut us = Vec::with_capacity(grid.len());
    for (k, (v, r)) in driven_amplitudes(spec, grid).into_iter().enumerate() {
        if k == 0 {
            us.push(Operator::identity(&spec.space()));
            continue;
        }
        us.push(displacement(v, spec.fock_dim)?.scale(expi(g2 * r)));
    }
    PropagatorSeries::new(grid.clone(), Method::AnalyticModel, us)
}
