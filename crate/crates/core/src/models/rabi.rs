//! Quantum Rabi model `H = omega a^dagger a + g (a + a^dagger) sigma_x + omega0 sigma_z / 2`
//! with the generalized rotating-wave split in the displaced number basis.
//!
//! Basis index `q * fock_dim + n`, qubit index 0 = `e` (`sigma_z = +1`), 1 = `g`.
//! The displaced states `|+-n; +-> = D(-+x)|n> (x) |+->` are built with
//! `DISPLACEMENT_PADDING` extra Fock levels and cropped afterwards, so that the
//! split `H0 + H_int` reproduces the truncated `H` entrywise.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::operator::{
    annihilation, displacement, laguerre, number, pauli_x, pauli_z, HilbertSpace, Operator, StateVector,
    DISPLACEMENT_PADDING,
};
use crate::scalar::{cplx, modulus, real, to_f64, Real};

pub const QUBIT_E: usize = 0;
pub const QUBIT_G: usize = 1;

pub const DEFAULT_FOCK_DIM: usize = 20;
/// Gram defect of the cropped displaced basis above which the truncation is rejected.
pub const GRAM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiSpec<T> {
    pub omega: T,
    pub omega0: T,
    pub g: T,
    pub fock_dim: usize,
}

impl<T: Real> RabiSpec<T> {
    pub fn new(omega: T, omega0: T, g: T, fock_dim: usize) -> Result<Self> {
        let s = Self { omega, omega0, g, fock_dim };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > T::zero()) {
            return Err(Error::InvalidInput(format!("omega must be > 0, got {}", self.omega)));
        }
        if !self.omega0.is_finite() || !self.g.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.fock_dim < 2 {
            return Err(Error::InvalidInput(format!("fock_dim must be >= 2, got {}", self.fock_dim)));
        }
        Ok(())
    }

    /// `x = g / omega`.
    pub fn x(&self) -> T {
        self.g / self.omega
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::new(vec![2, self.fock_dim]).expect("validated dimension")
    }

    pub fn index(&self, qubit: usize, n: usize) -> usize {
        qubit * self.fock_dim + n
    }

    /// Number of displaced levels `n` checked for orthonormality and used for the spectrum.
    pub fn checked_levels(&self) -> usize {
        (self.fock_dim / 3).min(11).max(1)
    }
}

/// `H`, `H' = H|_{omega0=0}`, and the split `H = H0 + H_int`.
#[derive(Debug, Clone)]
pub struct RabiHamiltonians<T: Real> {
    pub h_full: Operator<T>,
    pub h_prime: Operator<T>,
    pub h0_grw: Operator<T>,
    pub hint_grw: Operator<T>,
}

type CMat<T> = DMatrix<Complex<T>>;

struct Padded<T: Real> {
    dw: usize,
    /// `D(-x)` and `D(x)` at `dw` levels.
    d_minus: CMat<T>,
    d_plus: CMat<T>,
    /// `D(2x)` at `dw` levels.
    d_two: CMat<T>,
}

fn padded<T: Real>(x: T, d: usize) -> Result<Padded<T>> {
    let dw = d + DISPLACEMENT_PADDING;
    let zero = T::zero();
    Ok(Padded {
        dw,
        d_minus: displacement(cplx(-x, zero), dw)?.into_matrix(),
        d_plus: displacement(cplx(x, zero), dw)?.into_matrix(),
        d_two: displacement(cplx(x + x, zero), dw)?.into_matrix(),
    })
}

fn qubit_column<T: Real>(sign: T) -> CMat<T> {
    let s = real::<T>(std::f64::consts::FRAC_1_SQRT_2);
    CMat::from_column_slice(2, 1, &[cplx(s, T::zero()), cplx(s * sign, T::zero())])
}

fn bare_hamiltonian<T: Real>(spec: &RabiSpec<T>, d: usize, with_qubit: bool) -> Result<Operator<T>> {
    let a = annihilation::<T>(d)?;
    let xq = &a + &a.dagger();
    let id2 = Operator::identity(&HilbertSpace::single(2)?);
    let mut h = id2.kron(&number::<T>(d)?.scale_real(spec.omega));
    h = &h + &pauli_x::<T>().kron(&xq.scale_real(spec.g));
    if with_qubit {
        h = &h + &pauli_z::<T>().kron(&Operator::identity(&HilbertSpace::single(d)?)).scale_real(spec.omega0 * real(0.5));
    }
    Ok(h)
}

fn crop<T: Real>(m: &CMat<T>, dw: usize, d: usize, space: &HilbertSpace) -> Result<Operator<T>> {
    let idx: Vec<usize> = (0..2).flat_map(|q| (0..d).map(move |n| q * dw + n)).collect();
    Operator::from_matrix(space.clone(), m.select_rows(&idx).select_columns(&idx))
}

/// Largest deviation from the identity of the Gram matrix of the cropped
/// states `D(-+x)|n>`, `n < levels`.
pub fn rabi_displaced_basis_defect<T: Real>(x: T, fock_dim: usize, levels: usize) -> Result<T> {
    if levels > fock_dim {
        return Err(Error::IndexOutOfRange { index: levels, dim: fock_dim });
    }
    let p = padded(x, fock_dim)?;
    let mut worst = T::zero();
    for m in [&p.d_minus, &p.d_plus] {
        let block = m.view((0, 0), (fock_dim, levels)).into_owned();
        let gram = block.adjoint() * &block;
        for i in 0..levels {
            for j in 0..levels {
                let want = if i == j { T::one() } else { T::zero() };
                worst = worst.max(modulus(gram[(i, j)] - cplx(want, T::zero())));
            }
        }
    }
    Ok(worst)
}

/// Smallest Fock dimension (at least [`DEFAULT_FOCK_DIM`], in steps of 5) whose
/// displaced basis on `levels` levels passes `tol`.
pub fn rabi_required_fock_dim<T: Real>(x: T, levels: usize, tol: T) -> Result<usize> {
    let mut d = DEFAULT_FOCK_DIM.max(levels + 2);
    while d <= 400 {
        if rabi_displaced_basis_defect(x, d, levels)? <= tol {
            return Ok(d);
        }
        d += 5;
    }
    Err(Error::Truncation { what: "displaced basis".into(), defect: f64::NAN, suggested_fock_dim: d })
}

pub fn rabi_hamiltonians<T: Real>(spec: &RabiSpec<T>) -> Result<RabiHamiltonians<T>> {
    spec.validate()?;
    let d = spec.fock_dim;
    let levels = spec.checked_levels();
    let defect = rabi_displaced_basis_defect(spec.x(), d, levels)?;
    if to_f64(defect) > GRAM_TOL {
        let suggested = rabi_required_fock_dim(spec.x(), levels, real(GRAM_TOL)).unwrap_or(2 * d);
        return Err(Error::Truncation { what: "displaced basis".into(), defect: to_f64(defect), suggested_fock_dim: suggested });
    }
    let p = padded(spec.x(), d)?;
    let dw = p.dw;
    let space = spec.space();

    let b_plus = qubit_column::<T>(T::one()).kronecker(&p.d_minus);
    let b_minus = qubit_column::<T>(-T::one()).kronecker(&p.d_plus);
    let diag = CMat::from_fn(dw, dw, |i, j| if i == j { p.d_two[(i, i)] } else { Complex::new(T::zero(), T::zero()) });
    let off = &p.d_two - &diag;
    let half = cplx(spec.omega0 * real(0.5), T::zero());
    let hermitize = |m: CMat<T>| (&m + m.adjoint()) * half;
    let s_diag = hermitize(&b_plus * &diag * b_minus.adjoint());
    let s_off = hermitize(&b_plus * &off * b_minus.adjoint());

    let h_prime_w = bare_hamiltonian(spec, dw, false)?.into_matrix();
    let h0_w = &h_prime_w + s_diag;

    Ok(RabiHamiltonians {
        h_full: bare_hamiltonian(spec, d, true)?,
        h_prime: bare_hamiltonian(spec, d, false)?,
        h0_grw: crop(&h0_w, dw, d, &space)?,
        hint_grw: crop(&s_off, dw, d, &space)?,
    })
}

/// Closed-form eigenpair of `H0`: `(|+n;+> + sign |-n;->)/sqrt(2)` with energy
/// `n omega - g^2/omega + sign (omega0/2) e^{-2x^2} L_n(4x^2)`.
#[derive(Debug, Clone)]
pub struct RabiLevel<T: Real> {
    pub n: usize,
    pub sign: i8,
    pub energy: T,
    pub vector: StateVector<T>,
}

/// Closed-form `H0` eigenpairs for `n < spec.checked_levels()`, both signs.
pub fn rabi_h0_spectrum<T: Real>(spec: &RabiSpec<T>) -> Result<Vec<RabiLevel<T>>> {
    spec.validate()?;
    let d = spec.fock_dim;
    let levels = spec.checked_levels();
    let x = spec.x();
    let defect = rabi_displaced_basis_defect(x, d, levels)?;
    if to_f64(defect) > GRAM_TOL {
        let suggested = rabi_required_fock_dim(x, levels, real(GRAM_TOL)).unwrap_or(2 * d);
        return Err(Error::Truncation { what: "displaced basis".into(), defect: to_f64(defect), suggested_fock_dim: suggested });
    }
    let p = padded(x, d)?;
    let space = spec.space();
    let four: T = real(4.0);
    let two: T = real(2.0);
    let overlap_scale = (-two * x * x).exp();
    let s = real::<T>(0.5);
    let mut out = Vec::with_capacity(2 * levels);
    for n in 0..levels {
        let base = real::<T>(n as f64) * spec.omega - spec.g * spec.g / spec.omega;
        let split = spec.omega0 * s * overlap_scale * laguerre(n, four * x * x);
        for sign in [1i8, -1] {
            let sg: T = real(sign as f64);
            let amps: Vec<Complex<T>> = (0..2)
                .flat_map(|q| (0..d).map(move |m| (q, m)))
                .map(|(q, m)| {
                    // (|+>|D(-x)n> + sign |->|D(x)n>) / 2, qubit amplitudes +-1/sqrt(2) each
                    let qsign: T = if q == 0 { T::one() } else { -T::one() };
                    (p.d_minus[(m, n)] + p.d_plus[(m, n)] * cplx(sg * qsign, T::zero())) * cplx(s, T::zero())
                })
                .collect();
            out.push(RabiLevel { n, sign, energy: base + sg * split, vector: StateVector::new(space.clone(), amps)? });
        }
    }
    Ok(out)
}
