//! Interaction picture with respect to a time-independent `H0`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::operator::{HilbertSpace, Operator, StateVector, DEFAULT_TOL};
use crate::propagators::{Method, PropagatorSeries};
use crate::quadrature::{sample, OperatorTrajectory, TimeGrid};
use crate::scalar::{expi, real, to_f64, Real};

/// Spectral decomposition `H0 = V diag(E) V^dagger`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct InteractionFrame<T: Real> {
    energies: Vec<T>,
    vectors: Operator<T>,
}

impl<T: Real> InteractionFrame<T> {
    pub fn new(h0: &Operator<T>) -> Result<Self> {
        let defect = h0.hermiticity_defect();
        if defect > real(DEFAULT_TOL) {
            return Err(Error::NotHermitian { defect: to_f64(defect), tol: DEFAULT_TOL });
        }
        if !h0.is_finite() {
            return Err(Error::NonFinite);
        }
        let eig = h0.matrix().clone().symmetric_eigen();
        let n = h0.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite eigenvalues"));
        let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self { energies, vectors: Operator::from_matrix(h0.space().clone(), vecs)? })
    }

    pub fn space(&self) -> &HilbertSpace {
        self.vectors.space()
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    /// Unitary whose columns are the eigenvectors.
    pub fn vectors(&self) -> &Operator<T> {
        &self.vectors
    }

    /// `V^dagger A V`.
    pub fn to_eigenbasis(&self, op: &Operator<T>) -> Operator<T> {
        &(&self.vectors.dagger() * op) * &self.vectors
    }

    /// `V A V^dagger`.
    pub fn from_eigenbasis(&self, op: &Operator<T>) -> Operator<T> {
        &(&self.vectors * op) * &self.vectors.dagger()
    }

    pub fn state_to_eigenbasis(&self, psi: &StateVector<T>) -> Result<StateVector<T>> {
        self.vectors.dagger().apply(psi)
    }

    /// `e^{i E t}` per eigenvalue.
    pub fn phases(&self, t: T) -> Vec<Complex<T>> {
        self.energies.iter().map(|&e| expi(e * t)).collect()
    }

    /// `e^{i H0 t} A e^{-i H0 t}` for `A` given in the eigenbasis; result in the eigenbasis.
    pub fn rotate_eigen(&self, op_eigen: &Operator<T>, t: T) -> Operator<T> {
        let p = self.phases(t);
        Operator::from_fn(op_eigen.space().clone(), |j, k| p[j] * p[k].conj() * op_eigen.get(j, k))
    }

    /// `e^{i H0 t} A e^{-i H0 t}` in the original basis.
    pub fn rotate(&self, op: &Operator<T>, t: T) -> Operator<T> {
        self.from_eigenbasis(&self.rotate_eigen(&self.to_eigenbasis(op), t))
    }

    /// `U0(t) = e^{-i H0 t}` in the original basis.
    pub fn u0(&self, t: T) -> Operator<T> {
        let p = self.phases(-t);
        let d = Operator::from_fn(self.space().clone(), |j, k| {
            if j == k {
                p[j]
            } else {
                Complex::new(T::zero(), T::zero())
            }
        });
        self.from_eigenbasis(&d)
    }

    /// `U0(t_k)` at every node, tagged [`Method::H0Only`].
    pub fn u0_series(&self, grid: &TimeGrid<T>) -> Result<PropagatorSeries<T>> {
        let mut us: Vec<Operator<T>> = grid.nodes().into_iter().map(|t| self.u0(t)).collect();
        us[0] = Operator::identity(self.space());
        PropagatorSeries::new(grid.clone(), Method::H0Only, us)
    }
}

/// Scalar time dependence of one term of a [`Modulated`] operator.
pub type Coefficient<T> = Arc<dyn Fn(T) -> Complex<T> + Send + Sync>;

/// `A(t) = sum_j c_j(t) A_j` with fixed operators `A_j`.
#[derive(Clone)]
pub struct Modulated<T: Real> {
    terms: Vec<(Operator<T>, Coefficient<T>)>,
}

impl<T: Real> fmt::Debug for Modulated<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Modulated").field("terms", &self.terms.len()).finish()
    }
}

impl<T: Real> Modulated<T> {
    pub fn constant(op: Operator<T>) -> Self {
        Self { terms: vec![(op, Arc::new(|_| Complex::new(T::one(), T::zero())))] }
    }

    pub fn new(terms: Vec<(Operator<T>, Coefficient<T>)>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidInput("no terms".into()))?;
        for (op, _) in &terms[1..] {
            crate::operator::ensure_same(first.0.space(), op.space())?;
        }
        Ok(Self { terms })
    }

    pub fn space(&self) -> &HilbertSpace {
        self.terms[0].0.space()
    }

    pub fn at(&self, t: T) -> Operator<T> {
        let mut out = Operator::zeros(self.space());
        for (op, c) in &self.terms {
            out.axpy(c(t), op);
        }
        out
    }

    /// Same coefficients with every operator mapped through `f`.
    pub fn map_operators(&self, f: impl Fn(&Operator<T>) -> Operator<T>) -> Self {
        Self { terms: self.terms.iter().map(|(op, c)| (f(op), c.clone())).collect() }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map_operators(|op| op.scale_real(s))
    }
}

/// `H1(t_k) = e^{i H0 t_k} H_int(t_k) e^{-i H0 t_k}` at every node, from one
/// spectral decomposition of `H0`.
pub fn interaction_picture<T, F>(h0: &Operator<T>, hint: F, grid: &TimeGrid<T>) -> Result<OperatorTrajectory<T>>
where
    T: Real,
    F: Fn(T) -> Operator<T>,
{
    let frame = InteractionFrame::new(h0)?;
    sample(
        |t| {
            let h = hint(t);
            crate::operator::ensure_same(h0.space(), h.space())?;
            Ok(frame.rotate(&h, t))
        },
        grid,
        "interaction picture",
    )
}
