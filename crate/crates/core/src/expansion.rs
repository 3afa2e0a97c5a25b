//! Graded generators `W_k(t)` and the unitary product propagator.
//!
//! With `alpha = i lambda` the interaction-picture propagator is written as
//!
//! ```text
//! U_I(t) = exp(-alpha W_1) exp(-alpha^2 W_2) ... exp(-alpha^(N-1) W_(N-1)) U_N(t)
//! ```
//!
//! where `U_N - I = O(lambda^N)`. Dropping `U_N` leaves a product of exactly
//! unitary factors, because `i^(k-1) W_k` is Hermitian. The generators are
//! running integrals of nested commutators:
//!
//! ```text
//! W_1 = int H1
//! W_2 = 1/2 int [W_1, H1]
//! W_3 = 1/3 int [W_1, [W_1, H1]]
//! W_4 = 3/4! int [W_1, [W_1, [W_1, H1]]] + 1/4 int [W_2, [W_1, H1]]
//! W_5 = 4/5! int ad_{W_1}^4 H1 + 2/3! int [W_2, [W_1, [W_1, H1]]]
//! ```
//!
//! All integrands are formed node by node from trajectories already sampled on
//! the same grid, then integrated with [`cumulative_integral`].

use std::collections::VecDeque;

use num_complex::Complex;
use num_traits::One;

use crate::error::{Error, Result};
use crate::operator::{adjoint_power, commutator, matrix_exponential, Operator, DEFAULT_TOL};
use crate::quadrature::{cumulative_integral, gauss_legendre, OperatorTrajectory, RunningIntegrator};
use crate::scalar::{cplx, real, to_f64, Real};

/// Number of factors `N` in the expansion; the product keeps `N - 1` of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Order(usize);

impl Order {
    pub const MIN: usize = 2;
    pub const MAX: usize = 6;

    pub fn new(n: usize) -> Result<Self> {
        if !(Self::MIN..=Self::MAX).contains(&n) {
            return Err(Error::InvalidInput(format!(
                "expansion order N must lie in [{}, {}], got {n}",
                Self::MIN,
                Self::MAX
            )));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Number of generators `W_1 .. W_(N-1)`.
    pub fn generators(self) -> usize {
        self.0 - 1
    }
}

impl TryFrom<usize> for Order {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

/// Generators `W_1 .. W_(N-1)` on a common grid, plus the coupling `lambda`.
#[derive(Debug, Clone)]
pub struct WFamily<T: Real> {
    order: Order,
    generators: Vec<OperatorTrajectory<T>>,
    lambda: T,
}

impl<T: Real> WFamily<T> {
    /// Builds every generator required by `order` from a sampled `H1`.
    pub fn build(h1: &OperatorTrajectory<T>, order: Order, lambda: T) -> Result<Self> {
        if lambda < T::zero() {
            return Err(Error::InvalidInput(format!("lambda must be >= 0, got {lambda}")));
        }
        let w1 = compute_w1(h1)?;
        let mut generators = vec![w1];
        if order.generators() >= 2 {
            let w2 = compute_w2(h1, &generators[0])?;
            generators.push(w2);
        }
        if order.generators() >= 3 {
            let upper = higher_generators(h1, &generators[0], &generators[1], order.generators())?;
            generators.extend(upper);
        }
        Ok(Self { order, generators, lambda })
    }

    /// Assembles a family from precomputed generators `W_1 .. W_(N-1)`.
    pub fn from_generators(generators: Vec<OperatorTrajectory<T>>, lambda: T) -> Result<Self> {
        let order = Order::new(generators.len() + 1)?;
        for g in &generators[1..] {
            g.check_compatible(&generators[0])?;
        }
        Ok(Self { order, generators, lambda })
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Same generators with a different coupling.
    pub fn with_lambda(&self, lambda: T) -> Self {
        Self { lambda, ..self.clone() }
    }

    /// Same generators truncated to a lower order.
    pub fn truncated(&self, order: Order) -> Result<Self> {
        if order > self.order {
            return Err(Error::InvalidInput(format!(
                "cannot raise order {} to {}",
                self.order.get(),
                order.get()
            )));
        }
        Ok(Self {
            order,
            generators: self.generators[..order.generators()].to_vec(),
            lambda: self.lambda,
        })
    }

    /// `W_k` for `k` in `1..N`.
    pub fn generator(&self, k: usize) -> &OperatorTrajectory<T> {
        &self.generators[k - 1]
    }

    pub fn generators(&self) -> &[OperatorTrajectory<T>] {
        &self.generators
    }

    pub fn len_nodes(&self) -> usize {
        self.generators[0].len()
    }

    /// `-(i lambda)^k`.
    pub fn factor_coefficient(&self, k: usize) -> Complex<T> {
        let lam_k = (0..k).fold(T::one(), |acc, _| acc * self.lambda);
        let i_k = match k % 4 {
            0 => Complex::one(),
            1 => cplx(T::zero(), T::one()),
            2 => -Complex::<T>::one(),
            _ => cplx(T::zero(), -T::one()),
        };
        -(i_k * lam_k)
    }

    /// `exp(-(i lambda)^k W_k(t_node))`.
    pub fn factor(&self, k: usize, node: usize) -> Result<Operator<T>> {
        let gen = self.generator(k);
        if node >= gen.len() {
            return Err(Error::IndexOutOfRange { index: node, dim: gen.len() });
        }
        matrix_exponential(&gen.at(node).scale(self.factor_coefficient(k)))
    }

    /// Largest Hermiticity defect of `i^(k-1) W_k` over generators and nodes.
    pub fn grading_defect(&self) -> T {
        let mut worst = T::zero();
        for (idx, g) in self.generators.iter().enumerate() {
            let phase = match idx % 4 {
                0 => Complex::one(),
                1 => cplx(T::zero(), T::one()),
                2 => -Complex::<T>::one(),
                _ => cplx(T::zero(), -T::one()),
            };
            for s in g.samples() {
                worst = worst.max(s.scale(phase).hermiticity_defect());
            }
        }
        worst
    }
}

fn check_hermitian<T: Real>(h1: &OperatorTrajectory<T>) -> Result<()> {
    let tol: T = real(DEFAULT_TOL);
    for s in h1.samples() {
        let defect = s.hermiticity_defect();
        if defect > tol {
            return Err(Error::NotHermitian { defect: to_f64(defect), tol: DEFAULT_TOL });
        }
    }
    Ok(())
}

/// `W_1(t) = int_0^t H1(t') dt'`.
pub fn compute_w1<T: Real>(h1: &OperatorTrajectory<T>) -> Result<OperatorTrajectory<T>> {
    check_hermitian(h1)?;
    let w = cumulative_integral(h1)?;
    Ok(relabel(w, "W1"))
}

/// `W_2(t) = 1/2 int_0^t [W_1(t'), H1(t')] dt'`.
pub fn compute_w2<T: Real>(
    h1: &OperatorTrajectory<T>,
    w1: &OperatorTrajectory<T>,
) -> Result<OperatorTrajectory<T>> {
    h1.check_compatible(w1)?;
    let half: T = real(0.5);
    let integrand = h1.map("[W1,H1]/2", |k, h| Ok(commutator(w1.at(k), h)?.scale_real(half)))?;
    Ok(relabel(cumulative_integral(&integrand)?, "W2"))
}

/// `W_3`, `W_4`, `W_5` on the grid of `h1`.
pub fn compute_w345<T: Real>(
    h1: &OperatorTrajectory<T>,
    w1: &OperatorTrajectory<T>,
    w2: &OperatorTrajectory<T>,
) -> Result<[OperatorTrajectory<T>; 3]> {
    let v = higher_generators(h1, w1, w2, 5)?;
    let [w3, w4, w5]: [OperatorTrajectory<T>; 3] =
        v.try_into().map_err(|_| Error::InvalidInput("generator count".into()))?;
    Ok([w3, w4, w5])
}

// Integrands of W_3 .. W_upto (upto <= 5) at one node, sharing the nested commutators.
fn higher_integrands<T: Real>(
    w1: &Operator<T>,
    w2: &Operator<T>,
    h: &Operator<T>,
    upto: usize,
) -> Result<Vec<Operator<T>>> {
    let third: T = real(1.0 / 3.0);
    let c4_3: T = real(3.0 / 24.0);
    let quarter: T = real(0.25);
    let c5_4: T = real(4.0 / 120.0);
    let c5_2: T = real(2.0 / 6.0);

    let mut out = Vec::with_capacity(3);
    let c1 = commutator(w1, h)?;
    let c2 = commutator(w1, &c1)?;
    out.push(c2.scale_real(third));
    if upto >= 4 {
        let c3 = commutator(w1, &c2)?;
        let mut t4 = c3.scale_real(c4_3);
        t4.axpy(cplx(quarter, T::zero()), &commutator(w2, &c1)?);
        out.push(t4);
        if upto >= 5 {
            let c4 = commutator(w1, &c3)?;
            let mut t5 = c4.scale_real(c5_4);
            t5.axpy(cplx(c5_2, T::zero()), &commutator(w2, &c2)?);
            out.push(t5);
        }
    }
    Ok(out)
}

fn higher_generators<T: Real>(
    h1: &OperatorTrajectory<T>,
    w1: &OperatorTrajectory<T>,
    w2: &OperatorTrajectory<T>,
    upto: usize,
) -> Result<Vec<OperatorTrajectory<T>>> {
    h1.check_compatible(w1)?;
    h1.check_compatible(w2)?;
    let levels = upto - 2;
    let mut integrands: Vec<Vec<Operator<T>>> = vec![Vec::with_capacity(h1.len()); levels];
    for k in 0..h1.len() {
        for (dst, v) in integrands.iter_mut().zip(higher_integrands(w1.at(k), w2.at(k), h1.at(k), upto)?) {
            dst.push(v);
        }
    }
    let labels = ["W3", "W4", "W5"];
    let mut out = Vec::new();
    for (label, integrand) in labels.iter().zip(integrands) {
        let traj = OperatorTrajectory::new(h1.grid().clone(), integrand, *label)?;
        out.push(relabel(cumulative_integral(&traj)?, label));
    }
    Ok(out)
}

/// Generators `W_1 .. W_(N-1)` computed node by node with constant memory.
///
/// Feed `H1(t_k)` in grid order; each call returns the nodes whose generators
/// became available (node 1 is released together with node 2). The values are
/// those of [`WFamily::build`] on the same grid.
#[derive(Debug, Clone)]
pub struct GeneratorStream<T: Real> {
    order: Order,
    integrators: Vec<RunningIntegrator<T, Operator<T>>>,
    pending_h1: VecDeque<(usize, Operator<T>)>,
    pending_w1: VecDeque<(usize, Operator<T>)>,
    pending_w2: VecDeque<(usize, Operator<T>)>,
}

impl<T: Real> GeneratorStream<T> {
    pub fn new(order: Order, step: T) -> Self {
        let integrators = (0..order.generators()).map(|_| RunningIntegrator::new(step)).collect();
        Self {
            order,
            integrators,
            pending_h1: VecDeque::new(),
            pending_w1: VecDeque::new(),
            pending_w2: VecDeque::new(),
        }
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn push(&mut self, h1: Operator<T>) -> Result<Vec<(usize, Vec<Operator<T>>)>> {
        let tol: T = real(DEFAULT_TOL);
        let defect = h1.hermiticity_defect();
        if defect > tol {
            return Err(Error::NotHermitian { defect: to_f64(defect), tol: DEFAULT_TOL });
        }
        let k = self.integrators[0].count();
        self.pending_h1.push_back((k, h1.clone()));
        let first = self.integrators[0].push(h1);
        let levels = self.order.generators();
        if levels == 1 {
            self.pending_h1.retain(|(m, _)| first.iter().all(|(e, _)| e != m));
            return Ok(first.into_iter().map(|(m, w)| (m, vec![w])).collect());
        }
        let half: T = real(0.5);
        let mut second = Vec::new();
        for (m, w1) in first {
            let h = lookup(&self.pending_h1, m);
            second.extend(self.integrators[1].push(commutator(&w1, h)?.scale_real(half)));
            self.pending_w1.push_back((m, w1));
        }
        let mut ready = Vec::new();
        for (m, w2) in second {
            let w1 = lookup(&self.pending_w1, m).clone();
            let h = lookup(&self.pending_h1, m);
            if levels > 2 {
                let upper = higher_integrands(&w1, &w2, h, levels)?;
                let mut emitted = Vec::new();
                for (integ, f) in self.integrators[2..].iter_mut().zip(upper) {
                    emitted.push(integ.push(f));
                }
                self.pending_w2.push_back((m, w2));
                // higher levels run on the same release schedule as W_2
                if emitted[0].is_empty() {
                    continue;
                }
                let nodes: Vec<usize> = emitted[0].iter().map(|(n, _)| *n).collect();
                for (pos, n) in nodes.into_iter().enumerate() {
                    let mut row = vec![lookup(&self.pending_w1, n).clone(), lookup(&self.pending_w2, n).clone()];
                    for e in &emitted {
                        row.push(e[pos].1.clone());
                    }
                    ready.push((n, row));
                }
                continue;
            }
            ready.push((m, vec![w1, w2]));
        }
        for (n, _) in &ready {
            self.pending_h1.retain(|(m, _)| m != n);
            self.pending_w1.retain(|(m, _)| m != n);
            self.pending_w2.retain(|(m, _)| m != n);
        }
        Ok(ready)
    }
}

fn lookup<T: Real>(queue: &VecDeque<(usize, Operator<T>)>, node: usize) -> &Operator<T> {
    &queue.iter().find(|(m, _)| *m == node).expect("pending node is buffered").1
}

fn relabel<T: Real>(traj: OperatorTrajectory<T>, label: &str) -> OperatorTrajectory<T> {
    let grid = traj.grid().clone();
    let samples = traj.samples().to_vec();
    OperatorTrajectory::new(grid, samples, label).expect("relabel keeps a valid trajectory")
}

/// `prod_{k=1}^{N-1} exp(-(i lambda)^k W_k(t))` at one grid node, `k = 1` leftmost.
pub fn assemble_product<T: Real>(w: &WFamily<T>, node: usize) -> Result<Operator<T>> {
    let mut u = w.factor(1, node)?;
    for k in 2..=w.order.generators() {
        u = &u * &w.factor(k, node)?;
    }
    Ok(u)
}

/// `W_2(t)` from the double integral `1/2 int_0^t dt1 int_0^{t1} dt2 [H1(t2), H1(t1)]`.
///
/// Evaluated off-grid with a Gauss-Legendre rule on the triangle `t2 < t1`
/// (`panels` equal panels, `points` nodes per panel and per partial panel),
/// calling `h1` directly instead of reusing sampled trajectories.
pub fn w2_double_integral<T, F>(h1: F, t: T, panels: usize, points: usize) -> Result<Operator<T>>
where
    T: Real,
    F: Fn(T) -> Operator<T>,
{
    if panels == 0 || points == 0 || !(t >= T::zero()) {
        return Err(Error::InvalidInput("double integral needs t >= 0, panels, points".into()));
    }
    let (x, w) = gauss_legendre::<T>(points);
    let half: T = real(0.5);
    let width = t / real(panels as f64);
    let space = h1(T::zero()).space().clone();
    // running integral of H1 up to the start of the current panel
    let mut below = Operator::zeros(&space);
    let mut total = Operator::zeros(&space);
    for p in 0..panels {
        let start = width * real(p as f64);
        let mut panel_integral = Operator::zeros(&space);
        for (xi, wi) in x.iter().zip(&w) {
            let t1 = start + half * width * (*xi + T::one());
            let h_t1 = h1(t1);
            panel_integral.axpy(cplx(half * width * *wi, T::zero()), &h_t1);
            // int_{start}^{t1} H1
            let span = t1 - start;
            let mut partial = below.clone();
            for (xj, wj) in x.iter().zip(&w) {
                let t2 = start + half * span * (*xj + T::one());
                partial.axpy(cplx(half * span * *wj, T::zero()), &h1(t2));
            }
            let c = commutator(&partial, &h_t1)?;
            total.axpy(cplx(half * width * *wi, T::zero()), &c);
        }
        below = &below + &panel_integral;
    }
    Ok(total.scale_real(half))
}

/// Post-`W_1` generator `H_2(t) = sum_{m=1}^{m_max} (i lambda)^m / (m+1)! (ad W_1)^m {m H1}`.
pub fn residual_h2<T: Real>(
    h1: &OperatorTrajectory<T>,
    w1: &OperatorTrajectory<T>,
    lambda: T,
    m_max: usize,
) -> Result<OperatorTrajectory<T>> {
    if m_max == 0 {
        return Err(Error::InvalidInput("m_max must be >= 1".into()));
    }
    h1.check_compatible(w1)?;
    let alpha = cplx(T::zero(), lambda);
    h1.map("H2", |k, h| {
        let mut acc = Operator::zeros(h.space());
        let mut alpha_m = Complex::one();
        let mut fact = T::one(); // (m+1)!
        for m in 1..=m_max {
            alpha_m *= alpha;
            fact *= real::<T>((m + 1) as f64);
            let nested = adjoint_power(w1.at(k), &h.scale_real(real(m as f64)), m)?;
            acc.axpy(alpha_m / fact, &nested);
        }
        Ok(acc)
    })
}

/// `H_2` from the unsimplified series
/// `sum_{m=0}^{m_max} (i lambda)^m / m! (ad W_1)^m {H1 - dW_1/dt / (m+1)}`
/// with an explicit derivative trajectory.
pub fn residual_h2_from_derivative<T: Real>(
    h1: &OperatorTrajectory<T>,
    w1: &OperatorTrajectory<T>,
    dw1: &OperatorTrajectory<T>,
    lambda: T,
    m_max: usize,
) -> Result<OperatorTrajectory<T>> {
    h1.check_compatible(w1)?;
    h1.check_compatible(dw1)?;
    let alpha = cplx(T::zero(), lambda);
    h1.map("H2 (series)", |k, h| {
        let mut acc = Operator::zeros(h.space());
        let mut alpha_m = Complex::one();
        let mut fact = T::one(); // m!
        for m in 0..=m_max {
            if m > 0 {
                alpha_m *= alpha;
                fact *= real::<T>(m as f64);
            }
            let mut inner = h.clone();
            inner.axpy(cplx(-T::one() / real((m + 1) as f64), T::zero()), dw1.at(k));
            let nested = adjoint_power(w1.at(k), &inner, m)?;
            acc.axpy(alpha_m / fact, &nested);
        }
        Ok(acc)
    })
}

/// `true` when every `W_k(0)` vanishes exactly.
pub fn generators_start_at_zero<T: Real>(w: &WFamily<T>) -> bool {
    w.generators().iter().all(|g| g.at(0).max_abs() == T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{pauli_x, pauli_y, pauli_z};
    use crate::quadrature::{sample, TimeGrid};

    type C = Complex<f64>;

    fn rotating(t: f64) -> Operator<f64> {
        &pauli_x::<f64>().scale_real(t.cos()) + &pauli_y::<f64>().scale_real(t.sin())
    }

    #[test]
    fn order_bounds() {
        assert!(Order::new(1).is_err());
        assert!(Order::new(7).is_err());
        assert_eq!(Order::new(4).unwrap().generators(), 3);
    }

    #[test]
    fn constant_hamiltonian_generators() {
        let h = &pauli_x::<f64>() + &pauli_z::<f64>().scale_real(0.4);
        let grid = TimeGrid::new(2.0, 40).unwrap();
        let h1 = sample(|_| Ok(h.clone()), &grid, "H").unwrap();
        let fam = WFamily::build(&h1, Order::new(6).unwrap(), 0.7).unwrap();
        for (k, t) in grid.nodes().into_iter().enumerate() {
            assert!(fam.generator(1).at(k).max_abs_diff(&h.scale_real(t)) < 1e-14);
            for j in 2..=5 {
                assert!(fam.generator(j).at(k).max_abs() < 1e-13, "W{j} nonzero");
            }
        }
        // N = 2 constant case is exact: exp(-i lambda H t)
        let n2 = fam.truncated(Order::new(2).unwrap()).unwrap();
        let u = assemble_product(&n2, 40).unwrap();
        let exact = matrix_exponential(&h.scale(C::new(0.0, -0.7 * 2.0))).unwrap();
        assert!(u.max_abs_diff(&exact) < 1e-13);
    }

    #[test]
    fn zero_hamiltonian_gives_zero_w1() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let zero = Operator::<f64>::zeros(pauli_x::<f64>().space());
        let h1 = sample(|_| Ok(zero.clone()), &grid, "0").unwrap();
        let w1 = compute_w1(&h1).unwrap();
        assert!(w1.samples().iter().all(|w| w.max_abs() == 0.0));
    }

    #[test]
    fn w1_rejects_non_hermitian() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let bad = pauli_x::<f64>().scale(C::new(0.0, 1.0));
        let h1 = sample(|_| Ok(bad.clone()), &grid, "iX").unwrap();
        assert!(matches!(compute_w1(&h1), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn lambda_zero_gives_identity() {
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let h1 = sample(|t| Ok(rotating(t)), &grid, "rot").unwrap();
        let fam = WFamily::build(&h1, Order::new(5).unwrap(), 0.0).unwrap();
        for k in [0, 7, 20] {
            let u = assemble_product(&fam, k).unwrap();
            assert!(u.max_abs_diff(&Operator::identity(u.space())) < 1e-15);
        }
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g1 = TimeGrid::new(1.0, 10).unwrap();
        let g2 = TimeGrid::new(1.0, 12).unwrap();
        let a = sample(|t| Ok(rotating(t)), &g1, "a").unwrap();
        let b = sample(|t| Ok(rotating(t)), &g2, "b").unwrap();
        assert!(matches!(compute_w2(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn grading_and_unitarity_on_rotating_field() {
        let grid = TimeGrid::new(1.5, 60).unwrap();
        let h1 = sample(|t| Ok(rotating(t)), &grid, "rot").unwrap();
        let fam = WFamily::build(&h1, Order::new(6).unwrap(), 0.9).unwrap();
        assert!(fam.grading_defect() < 1e-12);
        assert!(generators_start_at_zero(&fam));
        for node in 0..grid.len() {
            for k in 1..=5 {
                assert!(fam.factor(k, node).unwrap().unitarity_defect() < 1e-12);
            }
        }
    }

    #[test]
    fn n3_matches_closed_two_factor_form() {
        // exp(-i lambda int H1) exp(lambda^2/2 int int [H1(t2), H1(t1)])
        let grid = TimeGrid::new(1.0, 200).unwrap();
        let lam = 0.6;
        let h1 = sample(|t| Ok(rotating(t)), &grid, "rot").unwrap();
        let fam = WFamily::build(&h1, Order::new(3).unwrap(), lam).unwrap();
        let u = assemble_product(&fam, 200).unwrap();
        let w1 = fam.generator(1).at(200);
        let dbl = w2_double_integral(rotating, 1.0, 8, 8).unwrap();
        let manual = &matrix_exponential(&w1.scale(C::new(0.0, -lam))).unwrap()
            * &matrix_exponential(&dbl.scale_real(lam * lam)).unwrap();
        assert!(u.max_abs_diff(&manual) < 1e-9);
    }

    #[test]
    fn residual_vanishes_for_commuting_or_uncoupled() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let h1 = sample(|t| Ok(pauli_z::<f64>().scale_real(1.0 + t)), &grid, "z").unwrap();
        let w1 = compute_w1(&h1).unwrap();
        let r = residual_h2(&h1, &w1, 0.8, 6).unwrap();
        assert!(r.samples().iter().all(|s| s.max_abs() < 1e-14));
        let h1 = sample(|t| Ok(rotating(t)), &grid, "rot").unwrap();
        let w1 = compute_w1(&h1).unwrap();
        let r = residual_h2(&h1, &w1, 0.0, 6).unwrap();
        assert!(r.samples().iter().all(|s| s.max_abs() == 0.0));
        assert!(residual_h2(&h1, &w1, 0.5, 0).is_err());
    }

    #[test]
    fn residual_forms_agree_with_exact_derivative() {
        let grid = TimeGrid::new(1.2, 24).unwrap();
        let h1 = sample(|t| Ok(rotating(t)), &grid, "rot").unwrap();
        let w1 = compute_w1(&h1).unwrap();
        let a = residual_h2(&h1, &w1, 0.7, 6).unwrap();
        let b = residual_h2_from_derivative(&h1, &w1, &h1, 0.7, 6).unwrap();
        for k in 0..grid.len() {
            assert!(a.at(k).max_abs_diff(b.at(k)) < 1e-14);
        }
    }

    #[test]
    fn stream_matches_batch() {
        let grid = TimeGrid::new(1.5, 11).unwrap();
        let h = |t: f64| &rotating(t) + &pauli_z::<f64>().scale_real(0.3 * t);
        let h1 = sample(|t| Ok(h(t)), &grid, "h").unwrap();
        for n in 2..=6 {
            let order = Order::new(n).unwrap();
            let fam = WFamily::build(&h1, order, 1.0).unwrap();
            let mut stream = GeneratorStream::new(order, grid.step());
            let mut seen = 0;
            for k in 0..grid.len() {
                for (node, gens) in stream.push(h1.at(k).clone()).unwrap() {
                    assert_eq!(node, seen);
                    assert_eq!(gens.len(), n - 1);
                    for (j, g) in gens.iter().enumerate() {
                        assert!(g.max_abs_diff(fam.generator(j + 1).at(node)) < 1e-13);
                    }
                    seen += 1;
                }
            }
            assert_eq!(seen, grid.len());
        }
    }
}
