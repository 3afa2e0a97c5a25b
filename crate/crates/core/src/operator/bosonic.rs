use num_complex::Complex;
use num_traits::{One, Zero};

use super::{matrix_exponential, HilbertSpace, Operator};
use crate::error::{Error, Result};
use crate::scalar::{cplx, real, Real};

/// Extra Fock levels used when a displaced matrix element is computed and then cropped.
pub const DISPLACEMENT_PADDING: usize = 20;

fn fock_space(d: usize) -> Result<HilbertSpace> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("Fock dimension must be >= 2, got {d}")));
    }
    HilbertSpace::single(d)
}

/// Truncated annihilation operator, `<n-1|a|n> = sqrt(n)`.
pub fn annihilation<T: Real>(d: usize) -> Result<Operator<T>> {
    let space = fock_space(d)?;
    Ok(Operator::from_fn(space, |i, j| {
        if j == i + 1 {
            cplx(real::<T>(j as f64).sqrt(), T::zero())
        } else {
            Complex::zero()
        }
    }))
}

pub fn creation<T: Real>(d: usize) -> Result<Operator<T>> {
    Ok(annihilation(d)?.dagger())
}

/// `a^dagger a`, built directly as `diag(0, 1, ..., d-1)`.
pub fn number<T: Real>(d: usize) -> Result<Operator<T>> {
    let space = fock_space(d)?;
    let diag: Vec<T> = (0..d).map(|n| real(n as f64)).collect();
    Operator::diagonal(&space, &diag)
}

fn qubit() -> HilbertSpace {
    HilbertSpace::single(2).expect("dimension 2 is valid")
}

pub fn pauli_x<T: Real>() -> Operator<T> {
    Operator::from_fn(qubit(), |i, j| if i != j { Complex::one() } else { Complex::zero() })
}

pub fn pauli_y<T: Real>() -> Operator<T> {
    Operator::from_fn(qubit(), |i, j| match (i, j) {
        (0, 1) => cplx(T::zero(), -T::one()),
        (1, 0) => cplx(T::zero(), T::one()),
        _ => Complex::zero(),
    })
}

/// `diag(1, -1)`: index 0 is the upper (excited) level.
pub fn pauli_z<T: Real>() -> Operator<T> {
    Operator::from_fn(qubit(), |i, j| match (i, j) {
        (0, 0) => Complex::one(),
        (1, 1) => -Complex::<T>::one(),
        _ => Complex::zero(),
    })
}

/// `D(v) = exp(v a^dagger - v* a)` on the `d`-level truncated Fock space.
pub fn displacement<T: Real>(v: Complex<T>, d: usize) -> Result<Operator<T>> {
    let a = annihilation::<T>(d)?;
    let gen = &a.dagger().scale(v) - &a.scale(v.conj());
    matrix_exponential(&gen)
}

/// `<n| D(2x) |m>` for real `x`.
///
/// The displacement is exponentiated at `d + DISPLACEMENT_PADDING` levels and
/// then read off, so the result is converged for indices well below `d`.
pub fn displaced_number_element<T: Real>(n: usize, m: usize, x: T, d: usize) -> Result<Complex<T>> {
    for idx in [n, m] {
        if idx >= d {
            return Err(Error::IndexOutOfRange { index: idx, dim: d });
        }
    }
    let two_x = x + x;
    let dw = displacement(cplx(two_x, T::zero()), d + DISPLACEMENT_PADDING)?;
    Ok(dw.get(n, m))
}

/// Laguerre polynomial `L_n(y)` by the three-term recurrence
/// `(k+1) L_{k+1} = (2k+1-y) L_k - k L_{k-1}`.
pub fn laguerre<T: Real>(n: usize, y: T) -> T {
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let mut cur = T::one() - y;
    for k in 1..n {
        let kf: T = real(k as f64);
        let next = ((kf + kf + T::one() - y) * cur - kf * prev) / (kf + T::one());
        prev = cur;
        cur = next;
    }
    cur
}
