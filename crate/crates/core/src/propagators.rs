//! Reference and baseline propagators, and the probability read-out.

use std::fmt;

use num_complex::Complex;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::expansion::{assemble_product, compute_w1, WFamily};
use crate::operator::{commutator, matrix_exponential, Operator, StateVector, DEFAULT_TOL};
use crate::quadrature::{integrate_nodes, running_integral, OperatorTrajectory, TimeGrid};
use crate::result::{Column, SimulationResult};
use crate::scalar::{cplx, expi, modulus, real, to_f64, Real};

/// How a [`PropagatorSeries`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    /// Unitary product with `N` factors (`N - 1` generators).
    Product(usize),
    /// Dyson series truncated at the given order.
    Dyson(usize),
    H0Only,
    CNumber,
    AnalyticModel,
}

impl Method {
    /// Whether the method is unitary by construction.
    pub fn is_unitary(self) -> bool {
        !matches!(self, Method::Dyson(_))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Exact => write!(f, "exact"),
            Method::Product(n) => write!(f, "product{n}"),
            Method::Dyson(n) => write!(f, "born{n}"),
            Method::H0Only => write!(f, "h0_only"),
            Method::CNumber => write!(f, "cnumber"),
            Method::AnalyticModel => write!(f, "analytic"),
        }
    }
}

/// `U(t_k, 0)` at every node of a grid.
#[derive(Debug, Clone)]
pub struct PropagatorSeries<T: Real> {
    grid: TimeGrid<T>,
    method: Method,
    unitaries: Vec<Operator<T>>,
}

impl<T: Real> PropagatorSeries<T> {
    pub fn new(grid: TimeGrid<T>, method: Method, unitaries: Vec<Operator<T>>) -> Result<Self> {
        if unitaries.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} operators for a grid of {} nodes",
                unitaries.len(),
                grid.len()
            )));
        }
        let first = &unitaries[0];
        if *first != Operator::identity(first.space()) {
            return Err(Error::InvalidInput("U(0, 0) must be the identity".into()));
        }
        Ok(Self { grid, method, unitaries })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn at(&self, k: usize) -> &Operator<T> {
        &self.unitaries[k]
    }

    pub fn unitaries(&self) -> &[Operator<T>] {
        &self.unitaries
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn max_unitarity_defect(&self) -> T {
        self.unitaries.iter().fold(T::zero(), |m, u| m.max(u.unitarity_defect()))
    }

    /// Node-wise `frame(t_k) * self(t_k)`, keeping this series' method tag.
    pub fn in_frame(&self, frame: &PropagatorSeries<T>) -> Result<Self> {
        if frame.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let unitaries = frame.unitaries.iter().zip(&self.unitaries).map(|(f, u)| f * u).collect();
        Ok(Self { grid: self.grid.clone(), method: self.method, unitaries })
    }

    /// Node-wise `V * U(t_k) * V^dagger`.
    pub fn conjugated(&self, v: &Operator<T>) -> Self {
        let vd = v.dagger();
        let unitaries = self.unitaries.iter().map(|u| &(v * u) * &vd).collect();
        Self { grid: self.grid.clone(), method: self.method, unitaries }
    }
}

/// Settings for [`exact_propagator`].
#[derive(Debug, Clone, Copy)]
pub struct ExactOptions {
    /// RK4 substeps per grid interval.
    pub substeps: usize,
    /// Unitarity defect above which the node value is re-projected.
    pub reunitarize_above: f64,
    /// Unitarity defect treated as a step instability.
    pub abort_above: f64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { substeps: 10, reunitarize_above: 1e-12, abort_above: 1e-6 }
    }
}

fn minus_i<T: Real>() -> Complex<T> {
    cplx(T::zero(), -T::one())
}

/// Propagates `u` from `t_a` to `t_b` under `dU/dt = -i H(t) U` with `steps` RK4 steps.
pub fn evolve_interval<T, F>(h: &F, u: &Operator<T>, t_a: T, t_b: T, steps: usize) -> Operator<T>
where
    T: Real,
    F: Fn(T) -> Operator<T>,
{
    let steps = steps.max(1);
    let dt = (t_b - t_a) / real(steps as f64);
    let half = dt * real(0.5);
    let mi = minus_i::<T>();
    let mut u = u.clone();
    let mut h_start = h(t_a);
    for s in 0..steps {
        let t = t_a + dt * real(s as f64);
        let t_mid = t + half;
        let t_next = if s + 1 == steps { t_b } else { t + dt };
        let h_mid = h(t_mid);
        let h_next = h(t_next);

        let k1 = (&h_start * &u).scale(mi);
        let mut probe = u.clone();
        probe.axpy(cplx(half, T::zero()), &k1);
        let k2 = (&h_mid * &probe).scale(mi);
        let mut probe = u.clone();
        probe.axpy(cplx(half, T::zero()), &k2);
        let k3 = (&h_mid * &probe).scale(mi);
        let mut probe = u.clone();
        probe.axpy(cplx(dt, T::zero()), &k3);
        let k4 = (&h_next * &probe).scale(mi);

        let sixth = dt / real(6.0);
        u.axpy(cplx(sixth, T::zero()), &k1);
        u.axpy(cplx(sixth + sixth, T::zero()), &k2);
        u.axpy(cplx(sixth + sixth, T::zero()), &k3);
        u.axpy(cplx(sixth, T::zero()), &k4);
        h_start = h_next;
    }
    u
}

/// Reference propagator: fixed-step RK4 on a substepped grid with per-node
/// polar re-unitarization.
pub fn exact_propagator<T, F>(h: F, grid: &TimeGrid<T>, opts: ExactOptions) -> Result<PropagatorSeries<T>>
where
    T: Real,
    F: Fn(T) -> Operator<T>,
{
    let h0 = h(T::zero());
    let tol: T = real(DEFAULT_TOL);
    let defect = h0.hermiticity_defect();
    if defect > tol {
        return Err(Error::NotHermitian { defect: to_f64(defect), tol: DEFAULT_TOL });
    }
    let nodes = grid.nodes();
    let mut out = Vec::with_capacity(nodes.len());
    let mut u = Operator::identity(h0.space());
    out.push(u.clone());
    for w in nodes.windows(2) {
        u = evolve_interval(&h, &u, w[0], w[1], opts.substeps);
        let defect = to_f64(u.unitarity_defect());
        if !(defect <= opts.abort_above) {
            return Err(Error::Unstable { time: to_f64(w[1]), defect });
        }
        if defect > opts.reunitarize_above {
            u = u.polar_unitary();
        }
        out.push(u.clone());
    }
    PropagatorSeries::new(grid.clone(), Method::Exact, out)
}

/// Unitary product series `prod_k exp(-(i lambda)^k W_k(t))` at every node.
pub fn product_propagator<T: Real>(w: &WFamily<T>) -> Result<PropagatorSeries<T>> {
    let grid = w.generator(1).grid().clone();
    let unitaries = (0..w.len_nodes()).map(|k| assemble_product(w, k)).collect::<Result<Vec<_>>>()?;
    PropagatorSeries::new(grid, Method::Product(w.order().get()), unitaries)
}

/// Dyson series truncated at order 1 or 2 (not unitary; no correction applied).
pub fn dyson_propagator<T: Real>(
    h1: &OperatorTrajectory<T>,
    lambda: T,
    order: usize,
) -> Result<PropagatorSeries<T>> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidInput(format!("Dyson order must be 1 or 2, got {order}")));
    }
    let w1 = compute_w1(h1)?;
    let first = cplx(T::zero(), -lambda);
    let second = if order == 2 {
        let products: Vec<Operator<T>> =
            h1.samples().iter().zip(w1.samples()).map(|(h, w)| h * w).collect();
        Some(running_integral(&products, h1.grid().step())?)
    } else {
        None
    };
    let unitaries = (0..h1.len())
        .map(|k| {
            let mut u = Operator::identity(h1.space());
            u.axpy(first, w1.at(k));
            if let Some(s) = &second {
                u.axpy(first * first, &s[k]);
            }
            u
        })
        .collect();
    PropagatorSeries::new(h1.grid().clone(), Method::Dyson(order), unitaries)
}

/// Spot check applied by [`cnumber_propagator`] to `[H1(t_a), H1(t_b)]`.
#[derive(Debug, Clone)]
pub struct CommutatorCheck {
    /// Basis indices the check is restricted to (all when `None`).
    pub subspace: Option<Vec<usize>>,
    pub pairs: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for CommutatorCheck {
    fn default() -> Self {
        Self { subspace: None, pairs: 10, tol: 1e-9, seed: 0x5eed }
    }
}

/// Closed form for a c-number commutator `[H1(t), H1(t')] = -2i f(t, t')`:
/// `U(t) = exp(-i lambda W_1(t)) exp(-i lambda^2 phi(t))` with
/// `phi(t) = int_0^t dt' int_0^{t'} dt'' f(t'', t')`.
pub fn cnumber_propagator<T, F>(
    h1: &OperatorTrajectory<T>,
    f: F,
    lambda: T,
    check: &CommutatorCheck,
) -> Result<PropagatorSeries<T>>
where
    T: Real,
    F: Fn(T, T) -> T,
{
    let grid = h1.grid();
    verify_cnumber(|k| Ok(h1.at(k).clone()), &grid.nodes(), &f, check)?;
    let phi = cnumber_phase(&f, grid)?;
    let w1 = compute_w1(h1)?;
    let mut unitaries = (0..grid.len())
        .map(|k| {
            let u = matrix_exponential(&w1.at(k).scale(cplx(T::zero(), -lambda)))?;
            Ok(u.scale(expi(-lambda * lambda * phi[k])))
        })
        .collect::<Result<Vec<_>>>()?;
    // phi(0) = 0 and W_1(0) = 0; pin the identity exactly
    unitaries[0] = Operator::identity(h1.space());
    PropagatorSeries::new(grid.clone(), Method::CNumber, unitaries)
}

/// `phi(t_k) = int_0^{t_k} dt' int_0^{t'} dt'' f(t'', t')` at every node (O(n^2) kernel calls).
pub fn cnumber_phase<T, F>(f: &F, grid: &TimeGrid<T>) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(T, T) -> T + ?Sized,
{
    let nodes = grid.nodes();
    let h = grid.step();
    let inner: Vec<T> = (0..nodes.len())
        .map(|j| {
            if j == 0 {
                return Ok(T::zero());
            }
            let vals: Vec<T> = (0..=j).map(|i| f(nodes[i], nodes[j])).collect();
            integrate_nodes(&vals, h)
        })
        .collect::<Result<Vec<_>>>()?;
    running_integral(&inner, h)
}

/// Checks `[H1(t_a), H1(t_b)] = -2i f(t_a, t_b) I` on random node pairs, with
/// `h1_at(k)` giving `H1` at node `k`.
pub fn verify_cnumber<T, F, G>(h1_at: G, nodes: &[T], f: &F, check: &CommutatorCheck) -> Result<()>
where
    T: Real,
    F: Fn(T, T) -> T + ?Sized,
    G: Fn(usize) -> Result<Operator<T>>,
{
    let first = h1_at(0)?;
    let all: Vec<usize> = (0..first.dim()).collect();
    let idx = check.subspace.as_deref().unwrap_or(&all);
    if idx.is_empty() {
        return Err(Error::InvalidInput("c-number check subspace is empty".into()));
    }
    let mut rng = StdRng::seed_from_u64(check.seed);
    for _ in 0..check.pairs {
        let a = rng.gen_range(0..nodes.len());
        let b = rng.gen_range(0..nodes.len());
        let c = commutator(&h1_at(a)?, &h1_at(b)?)?.compress(idx);
        let mean = c.trace() / cplx(real::<T>(idx.len() as f64), T::zero());
        let mut deviation = T::zero();
        for i in 0..idx.len() {
            for j in 0..idx.len() {
                let expected = if i == j { mean } else { Complex::new(T::zero(), T::zero()) };
                deviation = deviation.max(modulus(c[(i, j)] - expected));
            }
        }
        // the supplied kernel must reproduce the scalar: c = -2i f(t_a, t_b)
        let predicted = cplx(T::zero(), real::<T>(-2.0) * f(nodes[a], nodes[b]));
        deviation = deviation.max(modulus(mean - predicted));
        if to_f64(deviation) > check.tol {
            return Err(Error::NotCNumber {
                t1: to_f64(nodes[a]),
                t2: to_f64(nodes[b]),
                deviation: to_f64(deviation),
            });
        }
    }
    Ok(())
}

/// Labelled target state for [`survival_and_transition`].
#[derive(Debug, Clone)]
pub struct Target<T: Real> {
    pub label: String,
    pub state: StateVector<T>,
}

impl<T: Real> Target<T> {
    pub fn new(label: impl Into<String>, state: StateVector<T>) -> Self {
        Self { label: label.into(), state }
    }
}

/// `|<target| U0(t) U_I(t) |psi0>|^2` for every target and node.
///
/// With `frame = None` the series is taken as the full propagator.
pub fn survival_and_transition<T: Real>(
    series: &PropagatorSeries<T>,
    frame: Option<&PropagatorSeries<T>>,
    psi0: &StateVector<T>,
    targets: &[Target<T>],
) -> Result<SimulationResult<T>> {
    if let Some(fr) = frame {
        if fr.grid != series.grid {
            return Err(Error::GridMismatch);
        }
    }
    let mut columns: Vec<Column<T>> = targets
        .iter()
        .map(|t| Column::new(format!("{}_{}", series.method, t.label), Vec::with_capacity(series.len())))
        .collect();
    for k in 0..series.len() {
        let mut psi = series.at(k).apply(psi0)?;
        if let Some(fr) = frame {
            psi = fr.at(k).apply(&psi)?;
        }
        for (col, target) in columns.iter_mut().zip(targets) {
            col.values.push(target.state.overlap_probability(&psi)?);
        }
    }
    Ok(SimulationResult::new(series.grid.nodes(), columns))
}
