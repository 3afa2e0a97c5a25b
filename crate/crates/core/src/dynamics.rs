//! State-level propagation of one initial state under several methods at once.
//!
//! Everything runs in the eigenbasis of `H0`, where `U0(t)` is a vector of
//! phases and `H1(t)` costs `O(d^2)` per evaluation. Generators are produced by
//! [`GeneratorStream`] and exponentials act on vectors, so memory stays
//! independent of the number of grid nodes.

use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::expansion::{GeneratorStream, Order};
use crate::models::{fock_tail_population, InteractionFrame, Modulated};
use crate::operator::{exp_action, Operator, StateVector};
use crate::propagators::{cnumber_phase, verify_cnumber, CommutatorCheck, ExactOptions, PropagatorSeries, Target};
use crate::quadrature::{RunningIntegrator, TimeGrid};
use crate::result::{Column, SimulationResult};
use crate::scalar::{cplx, expi, real, to_f64, Real};

type CVec<T> = DVector<Complex<T>>;

/// Two-time kernel `f` with `[H1(t), H1(t')] = -2i f(t, t')`.
pub type Kernel<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateMethod {
    Exact,
    H0Only,
    /// Product with `N` factors.
    Product(Order),
    /// Dyson series of order 1 or 2.
    Born(usize),
    CNumber,
    /// Model-supplied closed form.
    Analytic,
}

impl StateMethod {
    pub fn is_unitary(self) -> bool {
        !matches!(self, StateMethod::Born(_))
    }
}

/// Population near the Fock cutoff that aborts a run.
#[derive(Debug, Clone, Copy)]
pub struct TruncationGuard {
    /// First Fock level counted as "near the cutoff".
    pub from_level: usize,
    pub tol: f64,
}

impl TruncationGuard {
    /// Top `min(5, max(1, d/4))` levels of a `d`-level mode, tolerance `1e-8`.
    pub fn for_fock_dim(d: usize) -> Self {
        let margin = (d / 4).clamp(1, 5);
        Self { from_level: d - margin, tol: 1e-8 }
    }
}

/// Everything needed to propagate one initial state.
#[derive(Clone)]
pub struct Problem<T: Real> {
    pub frame: InteractionFrame<T>,
    /// `H_int(t)` in the original basis, without the factor `lambda`.
    pub hint: Modulated<T>,
    pub lambda: T,
    pub psi0: StateVector<T>,
    pub targets: Vec<Target<T>>,
    pub kernel: Option<Kernel<T>>,
    pub cnumber_check: CommutatorCheck,
    /// Closed-form interaction-picture propagator on the run grid.
    pub analytic: Option<PropagatorSeries<T>>,
    pub guard: Option<TruncationGuard>,
}

impl<T: Real> std::fmt::Debug for Problem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("dim", &self.frame.space().dim())
            .field("lambda", &self.lambda)
            .field("targets", &self.targets.len())
            .finish_non_exhaustive()
    }
}

/// Output of [`run_dynamics`].
#[derive(Debug, Clone)]
pub struct Dynamics<T> {
    pub result: SimulationResult<T>,
    /// Largest population seen near the Fock cutoff by the guarded method.
    pub max_tail: Option<T>,
    /// Label of the method the guard watched.
    pub guarded: Option<String>,
}

struct Evaluator<'a, T: Real> {
    frame: &'a InteractionFrame<T>,
    hint_eigen: Modulated<T>,
    targets: Vec<CVec<T>>,
}

impl<T: Real> Evaluator<'_, T> {
    fn h1(&self, t: T) -> Operator<T> {
        self.frame.rotate_eigen(&self.hint_eigen.at(t), t)
    }

    /// Schrodinger-picture state in the eigenbasis.
    fn schrodinger(&self, psi_i: &CVec<T>, t: T) -> CVec<T> {
        let p = self.frame.phases(-t);
        CVec::from_fn(psi_i.len(), |j, _| p[j] * psi_i[j])
    }

    fn probabilities(&self, psi_i: &CVec<T>, t: T) -> Vec<T> {
        let psi = self.schrodinger(psi_i, t);
        self.targets.iter().map(|tg| tg.dotc(&psi).norm_sqr()).collect()
    }
}

fn rk4_state<T: Real>(ev: &Evaluator<'_, T>, lambda: T, psi: &CVec<T>, t_a: T, t_b: T, steps: usize) -> CVec<T> {
    let dt = (t_b - t_a) / real(steps as f64);
    let half = dt * real(0.5);
    let mi = cplx(T::zero(), -lambda);
    let mut psi = psi.clone();
    let mut h_start = ev.h1(t_a);
    for s in 0..steps {
        let t = t_a + dt * real(s as f64);
        let t_next = if s + 1 == steps { t_b } else { t + dt };
        let h_mid = ev.h1(t + half);
        let h_next = ev.h1(t_next);
        let k1 = h_start.matrix() * &psi * mi;
        let k2 = h_mid.matrix() * (&psi + &k1 * cplx(half, T::zero())) * mi;
        let k3 = h_mid.matrix() * (&psi + &k2 * cplx(half, T::zero())) * mi;
        let k4 = h_next.matrix() * (&psi + &k3 * cplx(dt, T::zero())) * mi;
        let sixth = cplx(dt / real(6.0), T::zero());
        psi += (k1 + (k2 + k3) * cplx(real(2.0), T::zero()) + k4) * sixth;
        h_start = h_next;
    }
    psi
}

/// Propagates `problem.psi0` on `grid` with every method in `methods`
/// (`(label, method)`; columns are `<label>_<target>` in that order).
pub fn run_dynamics<T: Real>(
    problem: &Problem<T>,
    grid: &TimeGrid<T>,
    methods: &[(String, StateMethod)],
    opts: ExactOptions,
) -> Result<Dynamics<T>> {
    if methods.is_empty() {
        return Err(Error::InvalidInput("no methods requested".into()));
    }
    let frame = &problem.frame;
    let space = frame.space().clone();
    crate::operator::ensure_same(&space, problem.hint.space())?;
    crate::operator::ensure_same(&space, problem.psi0.space())?;
    let vd = frame.vectors().dagger();
    let to_eigen = |v: &CVec<T>| vd.matrix() * v;
    let ev = Evaluator {
        frame,
        hint_eigen: problem.hint.map_operators(|op| frame.to_eigenbasis(op)),
        targets: problem
            .targets
            .iter()
            .map(|tg| {
                crate::operator::ensure_same(&space, tg.state.space())?;
                Ok(to_eigen(tg.state.amplitudes()))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let psi0 = to_eigen(problem.psi0.amplitudes());
    let lambda = problem.lambda;
    let nodes = grid.nodes();
    let n_targets = ev.targets.len();

    let generators = methods
        .iter()
        .map(|(_, m)| match m {
            StateMethod::Product(o) => o.generators(),
            StateMethod::Born(_) | StateMethod::CNumber => 1,
            _ => 0,
        })
        .max()
        .unwrap_or(0);
    let mut stream = if generators > 0 { Some(GeneratorStream::new(Order::new(generators + 1)?, grid.step())) } else { None };

    let phi = if methods.iter().any(|(_, m)| *m == StateMethod::CNumber) {
        let kernel = problem
            .kernel
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("cnumber requested for a model without a c-number commutator".into()))?;
        verify_cnumber(|k| Ok(frame.from_eigenbasis(&ev.h1(nodes[k]))), &nodes, &**kernel, &problem.cnumber_check)?;
        Some(cnumber_phase(&**kernel, grid)?)
    } else {
        None
    };
    if methods.iter().any(|(_, m)| *m == StateMethod::Analytic) {
        match &problem.analytic {
            Some(series) if series.grid() == grid => {}
            Some(_) => return Err(Error::GridMismatch),
            None => return Err(Error::InvalidInput("analytic requested for a model without a closed form".into())),
        }
    }
    for (label, m) in methods {
        if let StateMethod::Born(o) = m {
            if !(1..=2).contains(o) {
                return Err(Error::InvalidInput(format!("{label}: Dyson order must be 1 or 2")));
            }
        }
    }

    let guarded = problem.guard.and_then(|_| {
        methods
            .iter()
            .position(|(_, m)| *m == StateMethod::Exact)
            .or_else(|| methods.iter().position(|(_, m)| m.is_unitary()))
    });
    let v = frame.vectors().matrix().clone();
    let mut max_tail: Option<T> = None;

    let nan: T = real(f64::NAN);
    let mut table: Vec<Vec<T>> = vec![vec![nan; nodes.len()]; methods.len() * n_targets];
    let mut record = |mi: usize, k: usize, psi_i: &CVec<T>, max_tail: &mut Option<T>| -> Result<()> {
        let t = nodes[k];
        for (j, p) in ev.probabilities(psi_i, t).into_iter().enumerate() {
            table[mi * n_targets + j][k] = p;
        }
        if let (Some(g), Some(gi)) = (problem.guard, guarded) {
            if gi == mi {
                let full = &v * ev.schrodinger(psi_i, t);
                let tail = fock_tail_population(&full, &space, g.from_level);
                *max_tail = Some(max_tail.map_or(tail, |m| m.max(tail)));
                if to_f64(tail) > g.tol {
                    let d = *space.factors().last().expect("non-empty space");
                    return Err(Error::Truncation {
                        what: format!("population {:.3e} near the Fock cutoff at t = {}", to_f64(tail), to_f64(t)),
                        defect: to_f64(tail),
                        suggested_fock_dim: (d * 3 / 2).div_ceil(5) * 5,
                    });
                }
            }
        }
        Ok(())
    };

    let mut exact_psi = psi0.clone();
    let mut pending_h1: VecDeque<(usize, Operator<T>)> = VecDeque::new();
    let mut pending_w1psi: VecDeque<(usize, CVec<T>)> = VecDeque::new();
    let mut born2 = RunningIntegrator::<T, CVec<T>>::new(grid.step());
    let needs_born2 = methods.iter().any(|(_, m)| *m == StateMethod::Born(2));
    let mi_lambda = cplx(T::zero(), -lambda);

    for (k, &t) in nodes.iter().enumerate() {
        for (mi, (_, m)) in methods.iter().enumerate() {
            match m {
                StateMethod::Exact => {
                    if k > 0 {
                        exact_psi = rk4_state(&ev, lambda, &exact_psi, nodes[k - 1], t, opts.substeps.max(1));
                        let defect = to_f64((exact_psi.norm() - T::one()).abs());
                        if !(defect <= opts.abort_above) {
                            return Err(Error::Unstable { time: to_f64(t), defect });
                        }
                        if defect > opts.reunitarize_above {
                            let n = exact_psi.norm();
                            exact_psi.unscale_mut(n);
                        }
                    }
                    record(mi, k, &exact_psi, &mut max_tail)?;
                }
                StateMethod::H0Only => record(mi, k, &psi0, &mut max_tail)?,
                StateMethod::Analytic => {
                    let series = problem.analytic.as_ref().expect("checked above");
                    let psi = to_eigen(&(series.at(k).matrix() * problem.psi0.amplitudes()));
                    record(mi, k, &psi, &mut max_tail)?;
                }
                _ => {}
            }
        }

        let Some(stream) = stream.as_mut() else { continue };
        let h1 = ev.h1(t);
        if needs_born2 {
            pending_h1.push_back((k, h1.clone()));
        }
        for (m_node, gens) in stream.push(h1)? {
            let w1psi = gens[0].matrix() * &psi0;
            for (mi, (_, m)) in methods.iter().enumerate() {
                match m {
                    StateMethod::Product(order) => {
                        let mut psi = psi0.clone();
                        for j in (1..=order.generators()).rev() {
                            let coef = factor_coefficient(lambda, j);
                            psi = exp_action(&gens[j - 1].scale(coef), &psi)?;
                        }
                        record(mi, m_node, &psi, &mut max_tail)?;
                    }
                    StateMethod::Born(1) => {
                        let psi = &psi0 + &w1psi * mi_lambda;
                        record(mi, m_node, &psi, &mut max_tail)?;
                    }
                    StateMethod::CNumber => {
                        let ph = phi.as_ref().expect("computed above")[m_node];
                        let psi = exp_action(&gens[0].scale(mi_lambda), &psi0)? * expi(-lambda * lambda * ph);
                        record(mi, m_node, &psi, &mut max_tail)?;
                    }
                    _ => {}
                }
            }
            if needs_born2 {
                let pos = pending_h1.iter().position(|(n, _)| *n == m_node).expect("buffered H1");
                let (_, h) = pending_h1.remove(pos).expect("present");
                let integrand = h.matrix() * &w1psi;
                pending_w1psi.push_back((m_node, w1psi));
                for (j, second) in born2.push(integrand) {
                    let pos = pending_w1psi.iter().position(|(n, _)| *n == j).expect("buffered W1 psi");
                    let (_, first) = pending_w1psi.remove(pos).expect("present");
                    let psi = &psi0 + first * mi_lambda + second * (mi_lambda * mi_lambda);
                    for (mi, (_, m)) in methods.iter().enumerate() {
                        if *m == StateMethod::Born(2) {
                            record(mi, j, &psi, &mut max_tail)?;
                        }
                    }
                }
            }
        }
    }

    let mut columns = Vec::with_capacity(table.len());
    let mut values = table.into_iter();
    for (label, _) in methods {
        for tg in &problem.targets {
            let col = values.next().expect("one column per method and target");
            if col.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("{label}: grid too short for the generator stream")));
            }
            columns.push(Column::new(format!("{label}_{}", tg.label), col));
        }
    }
    let guarded = guarded.map(|i| methods[i].0.clone());
    Ok(Dynamics { result: SimulationResult::new(nodes, columns), max_tail, guarded })
}

/// `-(i lambda)^k`.
fn factor_coefficient<T: Real>(lambda: T, k: usize) -> Complex<T> {
    let mut c = Complex::new(-T::one(), T::zero());
    let il = cplx(T::zero(), lambda);
    for _ in 0..k {
        c *= il;
    }
    c
}
