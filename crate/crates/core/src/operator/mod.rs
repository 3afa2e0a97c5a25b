//! Dense operators on truncated Hilbert spaces.
//!
//! Every operator is a full `dim x dim` complex matrix tagged with the
//! [`HilbertSpace`] it acts on. Composite spaces are ordered tensor products,
//! so for factors `[2, d]` the basis index of `|q> (x) |n>` is `q * d + n`.

mod bosonic;
mod expm;

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cplx, modulus, real, to_f64, Real};

pub use bosonic::{
    annihilation, creation, displaced_number_element, displacement, laguerre, number, pauli_x,
    pauli_y, pauli_z, DISPLACEMENT_PADDING,
};
pub use expm::{exp_action, matrix_exponential};

/// Default absolute tolerance for the Hermiticity and unitarity predicates.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest nesting depth accepted by [`adjoint_power`].
pub const ADJOINT_POWER_CAP: usize = 12;

/// Truncated Hilbert space, possibly a tensor product of several factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    factors: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidInput("Hilbert space needs at least one factor".into()));
        }
        if let Some(&bad) = factors.iter().find(|&&d| d == 0) {
            return Err(Error::InvalidInput(format!("factor dimension must be >= 1, got {bad}")));
        }
        Ok(Self { factors })
    }

    /// Single-factor space of dimension `dim`.
    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    /// Tensor product `self (x) other`.
    pub fn tensor(&self, other: &HilbertSpace) -> HilbertSpace {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        HilbertSpace { factors }
    }

    /// Flat basis index of a multi-index (one entry per factor).
    pub fn index_of(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.factors.len() {
            return Err(Error::DimensionMismatch { left: multi.len(), right: self.factors.len() });
        }
        let mut idx = 0;
        for (&i, &d) in multi.iter().zip(&self.factors) {
            if i >= d {
                return Err(Error::IndexOutOfRange { index: i, dim: d });
            }
            idx = idx * d + i;
        }
        Ok(idx)
    }

    /// Inverse of [`HilbertSpace::index_of`].
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, &d) in out.iter_mut().zip(&self.factors).rev() {
            *slot = idx % d;
            idx /= d;
        }
        out
    }
}

/// Dense complex operator on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator<T: Real> {
    space: HilbertSpace,
    mat: DMatrix<Complex<T>>,
}

impl<T: Real> Operator<T> {
    pub fn from_matrix(space: HilbertSpace, mat: DMatrix<Complex<T>>) -> Result<Self> {
        let dim = space.dim();
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch { left: mat.nrows().max(mat.ncols()), right: dim });
        }
        Ok(Self { space, mat })
    }

    /// Builds an operator entry by entry.
    pub fn from_fn(space: HilbertSpace, f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let dim = space.dim();
        Self { space, mat: DMatrix::from_fn(dim, dim, f) }
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let dim = space.dim();
        Self { space: space.clone(), mat: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let dim = space.dim();
        Self { space: space.clone(), mat: DMatrix::identity(dim, dim) }
    }

    /// Diagonal operator with real entries.
    pub fn diagonal(space: &HilbertSpace, diag: &[T]) -> Result<Self> {
        if diag.len() != space.dim() {
            return Err(Error::DimensionMismatch { left: diag.len(), right: space.dim() });
        }
        let mut op = Self::zeros(space);
        for (i, &d) in diag.iter().enumerate() {
            op.mat[(i, i)] = cplx(d, T::zero());
        }
        Ok(op)
    }

    /// `|ket><bra|` for basis indices.
    pub fn basis_projector(space: &HilbertSpace, ket: usize, bra: usize) -> Result<Self> {
        let dim = space.dim();
        for i in [ket, bra] {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, dim });
            }
        }
        let mut op = Self::zeros(space);
        op.mat[(ket, bra)] = Complex::one();
        Ok(op)
    }

    /// `|ket><bra|` for arbitrary states.
    pub fn outer(ket: &StateVector<T>, bra: &StateVector<T>) -> Result<Self> {
        ensure_same(&ket.space, &bra.space)?;
        Ok(Self { space: ket.space.clone(), mat: &ket.amp * bra.amp.adjoint() })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.mat[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Self { space: self.space.clone(), mat: self.mat.adjoint() }
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self { space: self.space.clone(), mat: &self.mat * factor }
    }

    pub fn scale_real(&self, factor: T) -> Self {
        self.scale(cplx(factor, T::zero()))
    }

    /// `self + factor * other`, in place.
    pub fn axpy(&mut self, factor: Complex<T>, other: &Self) {
        assert_eq!(self.space, other.space, "axpy on different spaces");
        self.mat.zip_apply(&other.mat, |a, b| *a += b * factor);
    }

    pub fn trace(&self) -> Complex<T> {
        self.mat.trace()
    }

    pub fn is_finite(&self) -> bool {
        self.mat.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.mat.iter().fold(T::zero(), |m, &z| m.max(modulus(z)))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        self.mat
            .column_iter()
            .map(|c| c.iter().fold(T::zero(), |s, &z| s + modulus(z)))
            .fold(T::zero(), |m, s| m.max(s))
    }

    /// Spectral norm (largest singular value).
    pub fn op_norm(&self) -> T {
        if self.dim() == 0 {
            return T::zero();
        }
        self.mat.clone().singular_values().iter().fold(T::zero(), |m, &s| m.max(s))
    }

    /// `max |A - A^dagger|` over entries.
    pub fn hermiticity_defect(&self) -> T {
        let n = self.dim();
        let mut worst = T::zero();
        for j in 0..n {
            for i in 0..=j {
                let d = self.mat[(i, j)] - self.mat[(j, i)].conj();
                worst = worst.max(modulus(d));
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `max |A + A^dagger|` over entries.
    pub fn anti_hermiticity_defect(&self) -> T {
        let n = self.dim();
        let mut worst = T::zero();
        for j in 0..n {
            for i in 0..=j {
                let d = self.mat[(i, j)] + self.mat[(j, i)].conj();
                worst = worst.max(modulus(d));
            }
        }
        worst
    }

    /// `max |U^dagger U - I|` over entries.
    pub fn unitarity_defect(&self) -> T {
        let g = self.mat.adjoint() * &self.mat;
        let mut worst = T::zero();
        for ((i, j), z) in g.iter().enumerate().map(|(k, z)| ((k % self.dim(), k / self.dim()), z))
        {
            let target = if i == j { Complex::one() } else { Complex::zero() };
            worst = worst.max(modulus(*z - target));
        }
        worst
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn apply(&self, psi: &StateVector<T>) -> Result<StateVector<T>> {
        ensure_same(&self.space, &psi.space)?;
        Ok(StateVector { space: self.space.clone(), amp: &self.mat * &psi.amp })
    }

    /// `<bra| self |ket>`.
    pub fn matrix_element(&self, bra: &StateVector<T>, ket: &StateVector<T>) -> Result<Complex<T>> {
        let v = self.apply(ket)?;
        bra.inner(&v)
    }

    /// Kronecker product `self (x) other` on the tensor-product space.
    pub fn kron(&self, other: &Self) -> Self {
        Self { space: self.space.tensor(&other.space), mat: self.mat.kronecker(&other.mat) }
    }

    /// Principal sub-block on the listed basis indices, as a plain matrix.
    pub fn compress(&self, indices: &[usize]) -> DMatrix<Complex<T>> {
        DMatrix::from_fn(indices.len(), indices.len(), |i, j| self.mat[(indices[i], indices[j])])
    }

    /// Columns listed in `indices` (all rows), as a plain matrix.
    pub fn columns(&self, indices: &[usize]) -> DMatrix<Complex<T>> {
        DMatrix::from_fn(self.dim(), indices.len(), |i, j| self.mat[(i, indices[j])])
    }

    /// Spectral norm of `(self - other) P` where `P` projects onto `indices`.
    pub fn distance_on(&self, other: &Self, indices: &[usize]) -> T {
        let diff = self.columns(indices) - other.columns(indices);
        if diff.ncols() == 0 {
            return T::zero();
        }
        diff.singular_values().iter().fold(T::zero(), |m, &s| m.max(s))
    }

    /// Spectral norm of `self - other`.
    pub fn distance(&self, other: &Self) -> T {
        assert_eq!(self.space, other.space, "distance between operators on different spaces");
        (self - other).op_norm()
    }

    /// Entrywise maximum of `|self - other|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.space, other.space, "comparison of operators on different spaces");
        self.mat.iter().zip(other.mat.iter()).fold(T::zero(), |m, (&a, &b)| m.max(modulus(a - b)))
    }

    /// Projects a nearly unitary matrix onto the unitary group (polar factor),
    /// using Newton-Schulz steps `U <- U (3I - U^dagger U) / 2`.
    pub fn polar_unitary(&self) -> Self {
        let n = self.dim();
        let three = cplx(real::<T>(3.0), T::zero());
        let half = cplx(real::<T>(0.5), T::zero());
        let mut u = self.mat.clone();
        for _ in 0..8 {
            let g = u.adjoint() * &u;
            let mut corr = -g;
            for i in 0..n {
                corr[(i, i)] += three;
            }
            u = (&u * corr) * half;
            let probe = Self { space: self.space.clone(), mat: u.clone() };
            if to_f64(probe.unitarity_defect()) < 1e-15 {
                break;
            }
        }
        Self { space: self.space.clone(), mat: u }
    }
}

impl<'a, T: Real> Add<&'a Operator<T>> for &'a Operator<T> {
    type Output = Operator<T>;
    fn add(self, rhs: &'a Operator<T>) -> Operator<T> {
        assert_eq!(self.space, rhs.space, "sum of operators on different spaces");
        Operator { space: self.space.clone(), mat: &self.mat + &rhs.mat }
    }
}

impl<'a, T: Real> Sub<&'a Operator<T>> for &'a Operator<T> {
    type Output = Operator<T>;
    fn sub(self, rhs: &'a Operator<T>) -> Operator<T> {
        assert_eq!(self.space, rhs.space, "difference of operators on different spaces");
        Operator { space: self.space.clone(), mat: &self.mat - &rhs.mat }
    }
}

impl<'a, T: Real> Mul<&'a Operator<T>> for &'a Operator<T> {
    type Output = Operator<T>;
    fn mul(self, rhs: &'a Operator<T>) -> Operator<T> {
        assert_eq!(self.space, rhs.space, "product of operators on different spaces");
        Operator { space: self.space.clone(), mat: &self.mat * &rhs.mat }
    }
}

impl<T: Real> Neg for &Operator<T> {
    type Output = Operator<T>;
    fn neg(self) -> Operator<T> {
        Operator { space: self.space.clone(), mat: -&self.mat }
    }
}

/// Pure state on a [`HilbertSpace`]; normalized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    space: HilbertSpace,
    amp: DVector<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// Normalizes `amplitudes`; a zero vector is rejected.
    pub fn new(space: HilbertSpace, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { left: amplitudes.len(), right: space.dim() });
        }
        let amp = DVector::from_vec(amplitudes);
        let norm = amp.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::InvalidInput("state vector has zero or non-finite norm".into()));
        }
        Ok(Self { space, amp: amp.unscale(norm) })
    }

    pub fn basis(space: &HilbertSpace, index: usize) -> Result<Self> {
        let dim = space.dim();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut amp = DVector::zeros(dim);
        amp[index] = Complex::one();
        Ok(Self { space: space.clone(), amp })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<Complex<T>> {
        &self.amp
    }

    pub fn norm(&self) -> T {
        self.amp.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        ensure_same(&self.space, &other.space)?;
        Ok(self.amp.dotc(&other.amp))
    }

    /// Probability `|<self|other>|^2`.
    pub fn overlap_probability(&self, other: &Self) -> Result<T> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

pub(crate) fn ensure_same(a: &HilbertSpace, b: &HilbertSpace) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

/// `[a, b] = ab - ba`.
pub fn commutator<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Result<Operator<T>> {
    ensure_same(&a.space, &b.space)?;
    Ok(Operator { space: a.space.clone(), mat: &a.mat * &b.mat - &b.mat * &a.mat })
}

/// `(ad a)^m {b}`: the `m`-fold nested commutator `[a, [a, ... [a, b]]]`.
pub fn adjoint_power<T: Real>(a: &Operator<T>, b: &Operator<T>, m: usize) -> Result<Operator<T>> {
    if m > ADJOINT_POWER_CAP {
        return Err(Error::InvalidInput(format!(
            "nested commutator depth {m} exceeds cap {ADJOINT_POWER_CAP}"
        )));
    }
    ensure_same(&a.space, &b.space)?;
    let mut acc = b.clone();
    for _ in 0..m {
        acc = commutator(a, &acc)?;
    }
    Ok(acc)
}
