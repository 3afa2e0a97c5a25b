//! Model construction and propagation for one configuration.

use std::sync::Arc;

use unitexp::dynamics::{run_dynamics, Kernel, Problem, StateMethod, TruncationGuard};
use unitexp::expansion::Order;
use unitexp::models::{
    driven_analytic, driven_commutator_kernel, driven_h0, driven_hint, rabi_hamiltonians, raman_hamiltonians, raman_tune,
    DrivenOscillatorSpec, Drive, InteractionFrame, Modulated, RabiSpec, RamanParams, RamanSpec, LEVEL_E, LEVEL_G, LEVEL_I,
    QUBIT_E, QUBIT_G,
};
use unitexp::operator::{HilbertSpace, StateVector};
use unitexp::propagators::{CommutatorCheck, ExactOptions, Target};
use unitexp::quadrature::TimeGrid;
use unitexp::result::{Column, SimulationResult};

use crate::config::{DriveConfig, DrivenConfig, ExperimentConfig, MethodName, ModelConfig, RabiConfig, RamanConfig};
use crate::CliError;

/// Probabilities of unitary methods must stay inside `[-PROB_SLACK, 1 + PROB_SLACK]`.
pub const PROB_SLACK: f64 = 1e-10;

/// Column-name form of a state label (`"g,0"` becomes `"g0"`).
pub fn column_label(label: &str) -> String {
    label.chars().filter(|c| !c.is_whitespace() && *c != ',').collect()
}

/// Basis index of a state label for `model`.
///
/// Rabi labels are `"g,n"` / `"e,n"`, Raman labels `"g,n"` / `"e,n"` / `"i,n"`,
/// driven-oscillator labels a bare Fock number `"n"`.
pub fn resolve_label(model: &ModelConfig, label: &str) -> Result<usize, String> {
    let parts: Vec<&str> = label.split(',').map(str::trim).collect();
    let fock = |s: &str, d: usize| -> Result<usize, String> {
        let n: usize = s.parse().map_err(|_| format!("bad Fock number {s:?} in {label:?}"))?;
        if n >= d {
            return Err(format!("Fock level {n} in {label:?} exceeds fock_dim {d}"));
        }
        Ok(n)
    };
    match model {
        ModelConfig::DrivenOscillator(c) => match parts.as_slice() {
            [n] => fock(n, c.fock_dim),
            _ => Err(format!("driven_oscillator labels are Fock numbers, got {label:?}")),
        },
        ModelConfig::Rabi(c) => match parts.as_slice() {
            [q, n] => {
                let q = match *q {
                    "e" => QUBIT_E,
                    "g" => QUBIT_G,
                    other => return Err(format!("unknown qubit state {other:?} (e or g)")),
                };
                Ok(q * c.fock_dim + fock(n, c.fock_dim)?)
            }
            _ => Err(format!("rabi labels look like \"g,0\", got {label:?}")),
        },
        ModelConfig::Raman(c) => match parts.as_slice() {
            [l, n] => {
                let l = match *l {
                    "g" => LEVEL_G,
                    "e" => LEVEL_E,
                    "i" => LEVEL_I,
                    other => return Err(format!("unknown atomic level {other:?} (g, e or i)")),
                };
                Ok(l * c.fock_dim + fock(n, c.fock_dim)?)
            }
            _ => Err(format!("raman labels look like \"g,1\", got {label:?}")),
        },
    }
}

pub fn drive_function(d: &DriveConfig) -> Drive<f64> {
    match *d {
        DriveConfig::Cos { nu, amplitude, phase } => Arc::new(move |t: f64| amplitude * (nu * t + phase).cos()),
        DriveConfig::Constant { value } => Arc::new(move |_| value),
        DriveConfig::Gaussian { center, width, amplitude } => {
            Arc::new(move |t: f64| amplitude * (-(t - center).powi(2) / (2.0 * width * width)).exp())
        }
    }
}

pub fn driven_spec(c: &DrivenConfig) -> Result<DrivenOscillatorSpec<f64>, CliError> {
    Ok(DrivenOscillatorSpec::new(c.omega, c.g, drive_function(&c.drive), c.fock_dim)?)
}

pub fn raman_spec(c: &RamanConfig) -> Result<RamanSpec<f64>, CliError> {
    Ok(raman_tune(RamanParams {
        omega_ig: c.omega_ig,
        omega_eg: c.omega_eg,
        omega_1: c.omega_1,
        omega_gi: c.omega_gi,
        omega_ei: c.omega_ei,
        n0: c.n0,
        fock_dim: c.fock_dim,
    })?)
}

pub fn rabi_spec(c: &RabiConfig) -> Result<RabiSpec<f64>, CliError> {
    Ok(RabiSpec::new(c.omega, c.omega0, c.g, c.fock_dim)?)
}

/// Everything a run needs besides the method list.
pub struct Setup {
    pub problem: Problem<f64>,
    pub grid: TimeGrid<f64>,
    /// Multiplies grid times to give the `tau` column.
    pub time_unit: f64,
    pub opts: ExactOptions,
    pub notes: Vec<String>,
}

fn space_of(model: &ModelConfig) -> Result<HilbertSpace, CliError> {
    Ok(match model {
        ModelConfig::DrivenOscillator(c) => HilbertSpace::single(c.fock_dim)?,
        ModelConfig::Raman(c) => HilbertSpace::new(vec![3, c.fock_dim])?,
        ModelConfig::Rabi(c) => HilbertSpace::new(vec![2, c.fock_dim])?,
    })
}

pub fn build_setup(cfg: &ExperimentConfig, lambda: f64) -> Result<Setup, CliError> {
    let unit = cfg.model.time_unit();
    let grid = TimeGrid::new(cfg.grid.t_end / unit, cfg.n_steps())?;
    let space = space_of(&cfg.model)?;
    let state = |label: &str| -> Result<StateVector<f64>, CliError> {
        let idx = resolve_label(&cfg.model, label).map_err(CliError::Config)?;
        Ok(StateVector::basis(&space, idx)?)
    };
    let psi0 = state(&cfg.initial)?;
    let targets = cfg
        .targets
        .iter()
        .map(|t| Ok(Target::new(column_label(t), state(t)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut notes = Vec::new();
    let mut kernel: Option<Kernel<f64>> = None;
    let mut analytic = None;
    let mut cnumber_check = CommutatorCheck::default();

    let (h0, hint, model_lambda, fock_dim) = match &cfg.model {
        ModelConfig::DrivenOscillator(c) => {
            let spec = driven_spec(c)?;
            let h0 = driven_h0(&spec)?;
            // H_int = g f(t) (a + a^dagger); the strength g is carried by lambda
            let x = driven_hint(&DrivenOscillatorSpec::new(c.omega, 1.0, Arc::new(|_| 1.0), c.fock_dim)?)?(0.0);
            let f = spec.f.clone();
            let hint = Modulated::new(vec![(x, Arc::new(move |t| num_complex::Complex::new(f(t), 0.0)))])?;
            kernel = Some(Arc::new(driven_commutator_kernel(&spec)));
            cnumber_check.subspace = Some(spec.untruncated_levels());
            if cfg.methods.iter().any(|m| m == "analytic") {
                let scaled = DrivenOscillatorSpec::new(c.omega, c.g * lambda, spec.f.clone(), c.fock_dim)?;
                analytic = Some(driven_analytic(&scaled, &grid)?);
            }
            (h0, hint, c.g, c.fock_dim)
        }
        ModelConfig::Raman(c) => {
            let spec = raman_spec(c)?;
            notes.push(format!("raman Delta = {:.12e}, omega_2 = {:.12e}", spec.delta, spec.omega_2));
            for w in &spec.warnings {
                notes.push(format!("warning: {w}"));
                eprintln!("warning: {w}");
            }
            let hs = raman_hamiltonians(&spec)?;
            (hs.h0.clone(), hs.hint_modulated()?, 1.0, c.fock_dim)
        }
        ModelConfig::Rabi(c) => {
            let spec = rabi_spec(c)?;
            let hs = rabi_hamiltonians(&spec)?;
            (hs.h0_grw, Modulated::constant(hs.hint_grw), 1.0, c.fock_dim)
        }
    };
    let frame = InteractionFrame::new(&h0)?;
    let problem = Problem {
        frame,
        hint,
        lambda: model_lambda * lambda,
        psi0,
        targets,
        kernel,
        cnumber_check,
        analytic,
        guard: Some(TruncationGuard::for_fock_dim(fock_dim)),
    };
    let opts = ExactOptions { substeps: cfg.grid.substeps, ..ExactOptions::default() };
    Ok(Setup { problem, grid, time_unit: unit, opts, notes })
}

pub fn state_method(m: MethodName) -> Result<StateMethod, CliError> {
    Ok(match m {
        MethodName::Exact => StateMethod::Exact,
        MethodName::H0Only => StateMethod::H0Only,
        MethodName::Product(n) => StateMethod::Product(Order::new(n)?),
        MethodName::Born(n) => StateMethod::Born(n),
        MethodName::CNumber => StateMethod::CNumber,
        MethodName::Analytic => StateMethod::Analytic,
    })
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct Experiment {
    /// `tau` column in units of the model's reference frequency.
    pub result: SimulationResult<f64>,
    pub notes: Vec<String>,
    /// Largest population seen near the Fock cutoff.
    pub max_tail: Option<f64>,
}

/// Runs the configured methods at scan multiplier `cfg.lambda`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment, CliError> {
    run_with_methods(cfg, cfg.lambda, &cfg.parsed_methods())
}

pub fn run_with_methods(
    cfg: &ExperimentConfig,
    lambda: f64,
    methods: &[(String, MethodName)],
) -> Result<Experiment, CliError> {
    let setup = build_setup(cfg, lambda)?;
    let state_methods = methods
        .iter()
        .map(|(label, m)| Ok((label.clone(), state_method(*m)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let dy = run_dynamics(&setup.problem, &setup.grid, &state_methods, setup.opts)?;
    let tau: Vec<f64> = dy.result.tau().iter().map(|t| t * setup.time_unit).collect();
    let mut columns = Vec::with_capacity(dy.result.columns().len());
    for (mi, (label, m)) in methods.iter().enumerate() {
        for ti in 0..setup.problem.targets.len() {
            let col = &dy.result.columns()[mi * setup.problem.targets.len() + ti];
            if m.is_unitary() {
                if let Some((k, p)) =
                    col.values.iter().enumerate().find(|(_, p)| !(**p >= -PROB_SLACK && **p <= 1.0 + PROB_SLACK))
                {
                    return Err(CliError::Numerical(format!(
                        "{label}: probability {p:e} outside [0, 1] at tau = {}",
                        tau[k]
                    )));
                }
            }
            columns.push(Column::new(col.label.clone(), col.values.clone()));
        }
    }
    let mut notes = setup.notes;
    if let (Some(tail), Some(g)) = (dy.max_tail, &dy.guarded) {
        notes.push(format!("max population near the Fock cutoff ({g}): {tail:.3e}"));
    }
    Ok(Experiment { result: SimulationResult::new(tau, columns), notes, max_tail: dy.max_tail })
}

/// Largest `|p_method - p_exact|` per non-exact column of `result`.
pub fn deviations_from_exact(result: &SimulationResult<f64>, targets: &[String]) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for col in result.columns() {
        if col.label.starts_with("exact_") {
            continue;
        }
        let Some(target) = targets.iter().map(|t| column_label(t)).find(|t| col.label.ends_with(&format!("_{t}"))) else {
            continue;
        };
        let Some(exact) = result.column(&format!("exact_{target}")) else { continue };
        let dev = col.values.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        out.push((col.label.clone(), dev));
    }
    out
}
