//! Uniform time grids and running (cumulative) quadrature.
//!
//! Running primitives use composite Simpson on interval pairs. A node that
//! ends an odd interval count adds the last interval with the three-point
//! rule `h/12 (-f[k-2] + 8 f[k-1] + 5 f[k])` (its mirror image for the first
//! interval), which keeps every node fourth-order accurate.

use std::collections::VecDeque;

use nalgebra::DVector;
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::operator::{HilbertSpace, Operator};
use crate::scalar::{cplx, real, to_f64, Real};

/// Default resolution: steps per unit of dimensionless time.
pub const DEFAULT_STEPS_PER_UNIT: usize = 200;

/// Uniform grid `0 = t_0 < t_1 < ... < t_n = t_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T: Real> {
    t_end: T,
    n_steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_end: T, n_steps: usize) -> Result<Self> {
        if !(t_end > T::zero()) || !t_end.is_finite() {
            return Err(Error::InvalidInput(format!("t_end must be positive, got {t_end}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidInput("n_steps must be positive".into()));
        }
        Ok(Self { t_end, n_steps })
    }

    /// Grid with [`DEFAULT_STEPS_PER_UNIT`] steps per unit time (at least one step).
    pub fn with_default_resolution(t_end: T) -> Result<Self> {
        let steps = (to_f64(t_end) * DEFAULT_STEPS_PER_UNIT as f64).ceil().max(1.0) as usize;
        Self::new(t_end, steps)
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> T {
        self.t_end / real(self.n_steps as f64)
    }

    pub fn node(&self, k: usize) -> T {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t_end * real::<T>(k as f64) / real(self.n_steps as f64)
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Same span with `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Self {
        Self { t_end: self.t_end, n_steps: self.n_steps * factor.max(1) }
    }
}

/// Values that can be accumulated by a quadrature rule with real weights.
pub trait Integrand<T: Real>: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, weight: T, other: &Self);
}

impl<T: Real> Integrand<T> for T {
    fn zero_like(&self) -> Self {
        T::zero()
    }
    fn add_scaled(&mut self, weight: T, other: &Self) {
        *self += weight * *other;
    }
}

impl<T: Real> Integrand<T> for Complex<T> {
    fn zero_like(&self) -> Self {
        Complex::zero()
    }
    fn add_scaled(&mut self, weight: T, other: &Self) {
        *self += other.scale(weight);
    }
}

impl<T: Real> Integrand<T> for Operator<T> {
    fn zero_like(&self) -> Self {
        Operator::zeros(self.space())
    }
    fn add_scaled(&mut self, weight: T, other: &Self) {
        self.axpy(cplx(weight, T::zero()), other);
    }
}

impl<T: Real> Integrand<T> for DVector<Complex<T>> {
    fn zero_like(&self) -> Self {
        DVector::zeros(self.len())
    }
    fn add_scaled(&mut self, weight: T, other: &Self) {
        self.axpy(cplx(weight, T::zero()), other, Complex::one());
    }
}

/// Incremental form of [`running_integral`] for samples arriving one node at a time.
///
/// `push` returns the primitives that became available, as `(node, value)`
/// pairs in node order: node 0 immediately, node 1 together with node 2 (its
/// rule needs `f_2`), then one node per push. Results agree with the batch
/// routine for grids with at least three nodes.
#[derive(Debug, Clone)]
pub struct RunningIntegrator<T, V> {
    h: T,
    count: usize,
    recent: VecDeque<V>,
    primitives: VecDeque<V>,
}

impl<T: Real, V: Integrand<T>> RunningIntegrator<T, V> {
    pub fn new(h: T) -> Self {
        Self { h, count: 0, recent: VecDeque::with_capacity(3), primitives: VecDeque::with_capacity(2) }
    }

    /// Number of samples pushed so far.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, f: V) -> Vec<(usize, V)> {
        let k = self.count;
        self.count += 1;
        if self.recent.len() == 3 {
            self.recent.pop_front();
        }
        self.recent.push_back(f);
        let third = self.h / real(3.0);
        let twelfth = self.h / real(12.0);
        let mut emitted = Vec::new();
        match k {
            0 => {
                let zero = self.recent[0].zero_like();
                self.primitives.push_back(zero.clone());
                emitted.push((0, zero));
            }
            1 => {}
            _ => {
                let (fa, fb, fc) = (&self.recent[0], &self.recent[1], &self.recent[2]);
                if k == 2 {
                    let mut f1 = self.primitives[0].clone();
                    f1.add_scaled(twelfth * real(5.0), fa);
                    f1.add_scaled(twelfth * real(8.0), fb);
                    f1.add_scaled(-twelfth, fc);
                    self.primitives.push_back(f1.clone());
                    emitted.push((1, f1));
                }
                let next = if k % 2 == 0 {
                    let mut acc = self.primitives[self.primitives.len() - 2].clone();
                    acc.add_scaled(third, fa);
                    acc.add_scaled(third * real(4.0), fb);
                    acc.add_scaled(third, fc);
                    acc
                } else {
                    let mut acc = self.primitives[self.primitives.len() - 1].clone();
                    acc.add_scaled(-twelfth, fa);
                    acc.add_scaled(twelfth * real(8.0), fb);
                    acc.add_scaled(twelfth * real(5.0), fc);
                    acc
                };
                if self.primitives.len() == 2 {
                    self.primitives.pop_front();
                }
                self.primitives.push_back(next.clone());
                emitted.push((k, next));
            }
        }
        emitted
    }
}

/// Running primitive `F[k] = int_0^{t_k} f` of uniformly spaced samples.
pub fn running_integral<T: Real, V: Integrand<T>>(values: &[V], h: T) -> Result<Vec<V>> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("running integral needs >= 2 nodes, got {n}")));
    }
    let third = h / real(3.0);
    let twelfth = h / real(12.0);
    let mut out: Vec<V> = Vec::with_capacity(n);
    out.push(values[0].zero_like());
    for k in 1..n {
        let next = if k % 2 == 0 {
            let mut acc = out[k - 2].clone();
            acc.add_scaled(third, &values[k - 2]);
            acc.add_scaled(third * real(4.0), &values[k - 1]);
            acc.add_scaled(third, &values[k]);
            acc
        } else if k == 1 {
            let mut acc = out[0].clone();
            if n == 2 {
                acc.add_scaled(h * real(0.5), &values[0]);
                acc.add_scaled(h * real(0.5), &values[1]);
            } else {
                acc.add_scaled(twelfth * real(5.0), &values[0]);
                acc.add_scaled(twelfth * real(8.0), &values[1]);
                acc.add_scaled(-twelfth, &values[2]);
            }
            acc
        } else {
            let mut acc = out[k - 1].clone();
            acc.add_scaled(-twelfth, &values[k - 2]);
            acc.add_scaled(twelfth * real(8.0), &values[k - 1]);
            acc.add_scaled(twelfth * real(5.0), &values[k]);
            acc
        };
        out.push(next);
    }
    Ok(out)
}

/// Integral over all nodes with the same rule as [`running_integral`].
pub fn integrate_nodes<T: Real, V: Integrand<T>>(values: &[V], h: T) -> Result<V> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("quadrature needs >= 2 nodes, got {n}")));
    }
    let third = h / real(3.0);
    let twelfth = h / real(12.0);
    let mut acc = values[0].zero_like();
    let pairs_end = if (n - 1) % 2 == 0 { n - 1 } else { n - 2 };
    let mut k = 0;
    while k + 2 <= pairs_end {
        acc.add_scaled(third, &values[k]);
        acc.add_scaled(third * real(4.0), &values[k + 1]);
        acc.add_scaled(third, &values[k + 2]);
        k += 2;
    }
    if pairs_end != n - 1 {
        if n == 2 {
            acc.add_scaled(h * real(0.5), &values[0]);
            acc.add_scaled(h * real(0.5), &values[1]);
        } else {
            acc.add_scaled(-twelfth, &values[n - 3]);
            acc.add_scaled(twelfth * real(8.0), &values[n - 2]);
            acc.add_scaled(twelfth * real(5.0), &values[n - 1]);
        }
    }
    Ok(acc)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(order: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); order];
    let mut weights = vec![T::zero(); order];
    let nf: T = real(order as f64);
    let pi = T::pi();
    for i in 0..(order + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (pi * (real::<T>(i as f64) + real(0.75)) / (nf + real(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if crate::scalar::abs(dx) <= T::default_epsilon() {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        dp = if d != T::zero() { d } else { dp };
        let w = real::<T>(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, T::zero());
    }
    for k in 2..=n {
        let kf: T = real(k as f64);
        let p2 = ((kf + kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf: T = real(n as f64);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Operator-valued function sampled at every node of a [`TimeGrid`].
#[derive(Debug, Clone)]
pub struct OperatorTrajectory<T: Real> {
    grid: TimeGrid<T>,
    samples: Vec<Operator<T>>,
    provenance: String,
}

impl<T: Real> OperatorTrajectory<T> {
    pub fn new(grid: TimeGrid<T>, samples: Vec<Operator<T>>, provenance: impl Into<String>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} samples for a grid of {} nodes",
                samples.len(),
                grid.len()
            )));
        }
        let space = samples[0].space().clone();
        if let Some(bad) = samples.iter().find(|s| *s.space() != space) {
            return Err(Error::DimensionMismatch { left: bad.dim(), right: space.dim() });
        }
        Ok(Self { grid, samples, provenance: provenance.into() })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn samples(&self) -> &[Operator<T>] {
        &self.samples
    }

    pub fn at(&self, k: usize) -> &Operator<T> {
        &self.samples[k]
    }

    pub fn space(&self) -> &HilbertSpace {
        self.samples[0].space()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Node-by-node map into a new trajectory.
    pub fn map(
        &self,
        provenance: impl Into<String>,
        mut f: impl FnMut(usize, &Operator<T>) -> Result<Operator<T>>,
    ) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, s)| f(k, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.grid.clone(), samples, provenance)
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|s| s.scale(factor)).collect(),
            provenance: format!("({})*{factor}", self.provenance),
        }
    }

    /// Largest spectral norm over the nodes.
    pub fn max_op_norm(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, s| m.max(s.op_norm()))
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        crate::operator::ensure_same(self.space(), other.space())
    }
}

/// Evaluates `f` at every grid node.
pub fn sample<T, F>(f: F, grid: &TimeGrid<T>, provenance: impl Into<String>) -> Result<OperatorTrajectory<T>>
where
    T: Real,
    F: Fn(T) -> Result<Operator<T>>,
{
    let samples = grid
        .nodes()
        .into_iter()
        .map(|t| f(t).map_err(|e| e.at_time(to_f64(t))))
        .collect::<Result<Vec<_>>>()?;
    OperatorTrajectory::new(grid.clone(), samples, provenance)
}

/// Running primitive `F(t_k) = int_0^{t_k} traj(t') dt'` with `F(0) = 0`.
pub fn cumulative_integral<T: Real>(traj: &OperatorTrajectory<T>) -> Result<OperatorTrajectory<T>> {
    let prims = running_integral(&traj.samples, traj.grid.step())?;
    OperatorTrajectory::new(traj.grid.clone(), prims, format!("int({})", traj.provenance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{pauli_x, HilbertSpace};
    use std::f64::consts::PI;

    fn scalar_primitive_error(n: usize) -> f64 {
        // int_0^t exp(sin s) ds against a high-order Gauss reference
        let grid = TimeGrid::new(2.0f64, n).unwrap();
        let vals: Vec<f64> = grid.nodes().iter().map(|t| t.sin().exp()).collect();
        let prim = running_integral(&vals, grid.step()).unwrap();
        let (x, w) = gauss_legendre::<f64>(40);
        grid.nodes()
            .iter()
            .zip(&prim)
            .map(|(&t, &p)| {
                let exact: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * (t / 2.0 * (xi + 1.0)).sin().exp()).sum::<f64>() * t / 2.0;
                (p - exact).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_invariants() {
        let g = TimeGrid::new(1.3f64, 7).unwrap();
        let nodes = g.nodes();
        assert_eq!(nodes[0], 0.0);
        assert_eq!(*nodes.last().unwrap(), 1.3);
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        assert!((g.step() - 1.3 / 7.0).abs() < 1e-16);
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert_eq!(TimeGrid::with_default_resolution(2.0).unwrap().n_steps(), 400);
    }

    #[test]
    fn sample_constant_and_linear() {
        let x = pauli_x::<f64>();
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let c = sample(|_| Ok(x.clone()), &grid, "X").unwrap();
        assert!(c.samples().iter().all(|s| *s == x));
        let lin = sample(|t| Ok(x.scale_real(t)), &grid, "tX").unwrap();
        assert_eq!(*lin.at(1), x.scale_real(0.5));
        assert_eq!(*lin.at(2), x);
    }

    #[test]
    fn sample_reports_failing_time() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let err = sample(
            |t: f64| if t > 0.6 { Err(Error::NonFinite) } else { Ok(pauli_x()) },
            &grid,
            "bad",
        )
        .unwrap_err();
        match err {
            Error::Evaluation { time, .. } => assert_eq!(time, 0.75),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cumulative_constant_is_linear_in_time() {
        let x = pauli_x::<f64>();
        let grid = TimeGrid::new(1.5, 9).unwrap();
        let traj = sample(|_| Ok(x.clone()), &grid, "X").unwrap();
        let prim = cumulative_integral(&traj).unwrap();
        for (k, t) in grid.nodes().into_iter().enumerate() {
            assert!(prim.at(k).max_abs_diff(&x.scale_real(t)) < 1e-14);
        }
    }

    #[test]
    fn cumulative_identity_ramp() {
        let s = HilbertSpace::single(3).unwrap();
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let traj = sample(|t| Ok(Operator::identity(&s).scale_real(t)), &grid, "tI").unwrap();
        let prim = cumulative_integral(&traj).unwrap();
        assert!(prim.at(100).max_abs_diff(&Operator::identity(&s).scale_real(0.5)) < 1e-10);
    }

    #[test]
    fn cumulative_cosine_vanishes_at_pi() {
        let x = pauli_x::<f64>();
        let grid = TimeGrid::new(PI, 200).unwrap();
        let traj = sample(|t| Ok(x.scale_real(t.cos())), &grid, "cos X").unwrap();
        let prim = cumulative_integral(&traj).unwrap();
        assert!(prim.at(200).max_abs() < 1e-8);
        // odd node: sin(t_k)
        assert!(prim.at(101).max_abs_diff(&x.scale_real(grid.node(101).sin())) < 1e-8);
    }

    #[test]
    fn incremental_matches_batch() {
        for n in [3usize, 4, 9, 10] {
            let vals: Vec<f64> = (0..n).map(|k| (0.3 * k as f64).sin() + 0.1 * k as f64).collect();
            let batch = running_integral(&vals, 0.3).unwrap();
            let mut acc = RunningIntegrator::new(0.3);
            let mut got = Vec::new();
            for v in &vals {
                got.extend(acc.push(*v));
            }
            assert_eq!(got.len(), n);
            for (k, (idx, v)) in got.into_iter().enumerate() {
                assert_eq!(idx, k);
                assert!((v - batch[k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn running_rule_is_fourth_order() {
        for n in [20, 40, 80] {
            let ratio = scalar_primitive_error(n) / scalar_primitive_error(2 * n);
            let order = ratio.log2();
            assert!((order - 4.0).abs() < 0.5, "n={n}: observed order {order}");
        }
    }

    #[test]
    fn two_nodes_fall_back_to_trapezoid() {
        let prim = running_integral(&[1.0f64, 3.0], 0.5).unwrap();
        assert_eq!(prim[1], 1.0);
        assert!(running_integral::<f64, f64>(&[1.0], 0.5).is_err());
    }

    #[test]
    fn integrate_nodes_matches_running_end() {
        for n in [2usize, 3, 4, 7, 10] {
            let vals: Vec<f64> = (0..n).map(|k| (0.3 * k as f64).cos()).collect();
            let run = running_integral(&vals, 0.3).unwrap();
            let tot = integrate_nodes(&vals, 0.3).unwrap();
            assert!((run[n - 1] - tot).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre::<f64>(6);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let int_x10: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((int_x10 - 2.0 / 11.0).abs() < 1e-14);
        let (x5, _) = gauss_legendre::<f64>(5);
        assert!(x5[2].abs() < 1e-15);
    }
}
