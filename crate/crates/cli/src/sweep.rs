//! Scans of the interaction strength with an error-scaling summary.

use std::path::Path;

use unitexp::result::{Column, SimulationResult};

use crate::config::{ExperimentConfig, MethodName};
use crate::experiment::{deviations_from_exact, run_with_methods};
use crate::output::write_csv;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub lambdas: Vec<f64>,
    /// Per non-exact column: its label and the max deviation at each lambda.
    pub deviations: Vec<(String, Vec<f64>)>,
}

impl SweepSummary {
    /// Least-squares slope of `log dev` against `log lambda` per column
    /// (`None` when a deviation is zero).
    pub fn slopes(&self) -> Vec<(String, Option<f64>)> {
        self.deviations
            .iter()
            .map(|(label, devs)| {
                if devs.iter().any(|d| !(*d > 0.0)) || self.lambdas.len() < 2 {
                    return (label.clone(), None);
                }
                let xs: Vec<f64> = self.lambdas.iter().map(|l| l.ln()).collect();
                let ys: Vec<f64> = devs.iter().map(|d| d.ln()).collect();
                (label.clone(), Some(loglog_slope(&xs, &ys)))
            })
            .collect()
    }

    pub fn table(&self) -> SimulationResult<f64> {
        let cols = self
            .deviations
            .iter()
            .map(|(label, devs)| Column::new(format!("{label}_maxdev"), devs.clone()))
            .collect();
        SimulationResult::new(self.lambdas.clone(), cols)
    }
}

pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Runs every sweep point (exact is added when missing) and writes
/// `point_<i>.csv` per point plus `summary.csv` into `out_dir` when given.
pub fn run_sweep(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<SweepSummary, CliError> {
    let lambdas = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep: missing key (expected {\"lambdas\": [...]})".into()))?
        .lambdas
        .clone();
    let mut methods = cfg.parsed_methods();
    if !methods.iter().any(|(_, m)| *m == MethodName::Exact) {
        methods.insert(0, ("exact".to_string(), MethodName::Exact));
    }
    let mut deviations: Vec<(String, Vec<f64>)> = Vec::new();
    for (i, &lambda) in lambdas.iter().enumerate() {
        let ex = run_with_methods(cfg, lambda, &methods)?;
        if let Some(dir) = out_dir {
            let pre = vec![format!("sweep point {i}: lambda = {lambda:.12e}")];
            write_csv(&ex.result, &pre, &dir.join(format!("point_{i:02}.csv")))?;
        }
        for (j, (label, dev)) in deviations_from_exact(&ex.result, &cfg.targets).into_iter().enumerate() {
            if i == 0 {
                deviations.push((label, vec![dev]));
            } else {
                deviations[j].1.push(dev);
            }
        }
    }
    let summary = SweepSummary { lambdas, deviations };
    if let Some(dir) = out_dir {
        let pre: Vec<String> = summary
            .slopes()
            .into_iter()
            .map(|(l, s)| match s {
                Some(s) => format!("slope {l}: {s:.4}"),
                None => format!("slope {l}: undefined"),
            })
            .collect();
        // the first column is lambda, not tau
        let text = crate::output::render_csv(&summary.table(), &pre).replacen("tau,", "lambda,", 1);
        let path = dir.join("summary.csv");
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(summary)
}
