//! Built-in invariant suites behind the `validate` subcommand.

use std::sync::Arc;

use num_complex::Complex;
use unitexp::expansion::{compute_w1, compute_w2, w2_double_integral, Order, WFamily};
use unitexp::models::{
    driven_analytic, driven_commutator_kernel, driven_h1, rabi_h0_spectrum, rabi_hamiltonians, raman_hamiltonians,
    raman_tune, DrivenOscillatorSpec, InteractionFrame, RabiSpec, RamanParams,
};
use unitexp::operator::{commutator, matrix_exponential, pauli_x, pauli_y, HilbertSpace, Operator};
use unitexp::propagators::{cnumber_propagator, exact_propagator, product_propagator, CommutatorCheck, ExactOptions};
use unitexp::quadrature::{cumulative_integral, sample, TimeGrid};
use unitexp::result::{Column, SimulationResult};

use crate::output::{read_csv, render_csv};

#[derive(Debug, Clone)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(suite: &'static str, name: &'static str, value: Result<f64, String>, tol: f64) -> Check {
    match value {
        Ok(v) => Check { suite, name, passed: v <= tol, detail: format!("{v:.3e} (tol {tol:.0e})") },
        Err(e) => Check { suite, name, passed: false, detail: e },
    }
}

fn hermitian(dim: usize, seed: f64) -> Operator<f64> {
    let space = HilbertSpace::single(dim).expect("dim > 0");
    let m = Operator::from_fn(space, |j, k| {
        let (a, b) = (j as f64, k as f64);
        Complex::new((seed + 1.3 * a + 0.7 * b).cos(), (seed * a - 0.4 * b).sin())
    });
    (&m + &m.dagger()).scale_real(0.5)
}

fn test_h1() -> impl Fn(f64) -> Operator<f64> {
    let (x, y) = (pauli_x::<f64>(), pauli_y::<f64>());
    move |t: f64| {
        let mut h = x.scale_real(t.cos());
        h.axpy(Complex::new(t.sin(), 0.0), &y);
        h
    }
}

fn operator_suite() -> Vec<Check> {
    let h = hermitian(6, 0.3);
    let a = h.scale(Complex::new(0.0, -1.7));
    let round_trip = (|| -> Result<f64, String> {
        let p = matrix_exponential(&a).map_err(|e| e.to_string())?;
        let m = matrix_exponential(&a.scale_real(-1.0)).map_err(|e| e.to_string())?;
        Ok((&p * &m).max_abs_diff(&Operator::identity(h.space())))
    })();
    let unitary = matrix_exponential(&a).map(|u| u.unitarity_defect()).map_err(|e| e.to_string());
    let anti = commutator(&h, &hermitian(6, 1.1)).map(|c| c.anti_hermiticity_defect()).map_err(|e| e.to_string());
    vec![
        check("operator", "expm(A) expm(-A) = I", round_trip, 1e-12),
        check("operator", "expm of anti-Hermitian is unitary", unitary, 1e-12),
        check("operator", "commutator of Hermitians is anti-Hermitian", anti, 1e-13),
    ]
}

fn quadrature_suite() -> Vec<Check> {
    let run = |n: usize| -> Result<f64, String> {
        let grid = TimeGrid::new(1.0, n).map_err(|e| e.to_string())?;
        let id = Operator::<f64>::identity(&HilbertSpace::single(2).expect("2"));
        let traj = sample(|t: f64| Ok(id.scale_real((3.0 * t).exp())), &grid, "exp").map_err(|e| e.to_string())?;
        let f = cumulative_integral(&traj).map_err(|e| e.to_string())?;
        Ok((f.at(n).get(0, 0).re - ((3.0f64).exp() - 1.0) / 3.0).abs())
    };
    let linear = (|| -> Result<f64, String> {
        let grid = TimeGrid::new(1.0, 100).map_err(|e| e.to_string())?;
        let id = Operator::<f64>::identity(&HilbertSpace::single(2).expect("2"));
        let traj = sample(|t| Ok(id.scale_real(t)), &grid, "t").map_err(|e| e.to_string())?;
        let f = cumulative_integral(&traj).map_err(|e| e.to_string())?;
        Ok((f.at(100).get(0, 0).re - 0.5).abs())
    })();
    let order = run(40).and_then(|a| run(80).map(|b| ((a / b).log2() - 4.0).abs()));
    vec![
        check("quadrature", "primitive of t is t^2/2", linear, 1e-10),
        check("quadrature", "Simpson convergence order 4 (+-0.5)", order, 0.5),
    ]
}

fn expansion_suite() -> Vec<Check> {
    let result = (|| -> unitexp::Result<(f64, f64, f64)> {
        let grid = TimeGrid::new(1.0, 200)?;
        let h = test_h1();
        let h1 = sample(|t| Ok(h(t)), &grid, "test H1")?;
        let w = WFamily::build(&h1, Order::new(6)?, 0.3)?;
        let defect = w.grading_defect();
        let unit = product_propagator(&w)?.max_unitarity_defect();
        let w1 = compute_w1(&h1)?;
        let w2 = compute_w2(&h1, &w1)?;
        let double = w2_double_integral(&h, 1.0, 20, 8)?;
        Ok((defect, unit, w2.at(200).distance(&double)))
    })();
    let pick = |f: fn(&(f64, f64, f64)) -> f64| result.as_ref().map(f).map_err(|e| e.to_string());
    vec![
        check("expansion", "i^(k-1) W_k Hermitian", pick(|r| r.0), 1e-10),
        check("expansion", "product N = 6 unitary", pick(|r| r.1), 1e-10),
        check("expansion", "W_2 single and double integral forms agree", pick(|r| r.2), 1e-8),
    ]
}

fn propagator_suite() -> Vec<Check> {
    let h = hermitian(4, 0.9);
    let r = (|| -> unitexp::Result<f64> {
        let grid = TimeGrid::new(1.0, 50)?;
        let series = exact_propagator(|_: f64| h.clone(), &grid, ExactOptions::default())?;
        let want = matrix_exponential(&h.scale(Complex::new(0.0, -1.0)))?;
        Ok(series.at(50).max_abs_diff(&want))
    })();
    vec![check("propagators", "exact oracle matches expm for constant H", r.map_err(|e| e.to_string()), 1e-10)]
}

fn driven_suite() -> Vec<Check> {
    let r = (|| -> unitexp::Result<f64> {
        let spec = DrivenOscillatorSpec::new(1.0, 0.2, Arc::new(|t: f64| (0.7 * t).cos()), 15)?;
        let grid = TimeGrid::new(5.0, 500)?;
        let hf = driven_h1(&spec)?;
        let h1 = sample(|t| Ok(hf(t)), &grid, "driven H1")?;
        let check = CommutatorCheck { subspace: Some(spec.untruncated_levels()), ..CommutatorCheck::default() };
        let cn = cnumber_propagator(&h1, driven_commutator_kernel(&spec), spec.g, &check)?;
        let an = driven_analytic(&spec, &grid)?;
        let low: Vec<usize> = (0..5).collect();
        Ok((0..grid.len()).map(|k| cn.at(k).distance_on(an.at(k), &low)).fold(0.0, f64::max))
    })();
    vec![check("models", "driven c-number form matches the closed form", r.map_err(|e| e.to_string()), 1e-8)]
}

fn rabi_suite() -> Vec<Check> {
    let r = (|| -> unitexp::Result<(f64, f64)> {
        let spec = RabiSpec::new(1.0, 0.6, 0.5, 30)?;
        let hs = rabi_hamiltonians(&spec)?;
        let recon = (&hs.h0_grw + &hs.hint_grw).max_abs_diff(&hs.h_full);
        let frame = InteractionFrame::new(&hs.h0_grw)?;
        let spectrum = rabi_h0_spectrum(&spec)?
            .iter()
            .map(|l| frame.energies().iter().map(|e: &f64| (e - l.energy).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        Ok((recon, spectrum))
    })();
    let pick = |f: fn(&(f64, f64)) -> f64| r.as_ref().map(f).map_err(|e| e.to_string());
    vec![
        check("models", "rabi H0 + H_int reconstructs H", pick(|r| r.0), 1e-10),
        check("models", "rabi closed-form spectrum", pick(|r| r.1), 1e-8),
    ]
}

fn raman_suite() -> Vec<Check> {
    let r = (|| -> unitexp::Result<(f64, f64)> {
        let spec = raman_tune::<f64>(RamanParams {
            omega_ig: 200.0,
            omega_eg: 10.0,
            omega_1: 100.0,
            omega_gi: 5.0,
            omega_ei: 1.0,
            n0: 0,
            fock_dim: 5,
        })?;
        let residual: f64 = spec.detuning_residual().abs() / spec.delta.abs();
        let hs = raman_hamiltonians(&spec)?;
        let recon = (&hs.h0 + &hs.hint(1.3)).max_abs_diff(&hs.full(1.3));
        Ok((residual, recon))
    })();
    let pick = |f: fn(&(f64, f64)) -> f64| r.as_ref().map(f).map_err(|e| e.to_string());
    vec![
        check("models", "raman detuning residual (relative)", pick(|r| r.0), 1e-10),
        check("models", "raman H0 + H_int reconstructs H", pick(|r| r.1), 1e-12),
    ]
}

fn csv_suite() -> Vec<Check> {
    let table = SimulationResult::new(
        vec![0.0, 0.1, 0.2],
        vec![Column::new("exact_g0", vec![1.0, 0.912345678901234, 1.0 / 7.0])],
    );
    let r = read_csv(&render_csv(&table, &[])).map_err(|e| e.to_string()).map(|(_, rows)| {
        rows.iter().zip(&table.columns()[0].values).map(|(row, v)| (row[1] - v).abs()).fold(0.0, f64::max)
    });
    vec![check("cli_io", "CSV round trip", r, 1e-11)]
}

pub fn run_validation() -> Vec<Check> {
    let mut out = operator_suite();
    out.extend(quadrature_suite());
    out.extend(expansion_suite());
    out.extend(propagator_suite());
    out.extend(driven_suite());
    out.extend(rabi_suite());
    out.extend(raman_suite());
    out.extend(csv_suite());
    out
}
