use rayon::prelude::*;
use serde_json::json;

use brownian_core::integrators::run_ensemble;
use brownian_core::ou_oracle::{discrete_moments, ou_exact_moments, OUParams};
use brownian_core::statistics::MomentObserver;
use brownian_core::{Configuration, Domain, PotentialSpec, RunSpec, SchemeId};

use crate::config::OuVerifyConfig;
use crate::output::{fit_rows, ExperimentOutput, ResultRow};
use crate::BenchError;

pub const EXPERIMENT: &str = "ou-verify";

/// Ensemble moments of `X_N` on the quadratic potential against the closed forms, plus the
/// noise-free order fit of the closed-form variance error.
pub fn run_ou_verify(cfg: &OuVerifyConfig) -> Result<ExperimentOutput, BenchError> {
    let sigma = cfg.sigma()?;
    let params = OUParams::new(cfg.alpha, sigma, cfg.x0)?;
    let schemes = cfg.scheme_ids()?;
    let ladder = cfg.h_ladder.values()?;
    let formula_ladder = cfg.formula_ladder.values()?;
    for &h in ladder.iter().chain(&formula_ladder) {
        params.check_step(h)?;
    }
    let spec = PotentialSpec::Quadratic { alpha: cfg.alpha };
    let domain = Domain::unbounded(1)?;
    let start = Configuration::new(domain, vec![cfg.x0])?;

    let tasks: Vec<(SchemeId, f64)> = schemes
        .iter()
        .flat_map(|&s| ladder.iter().map(move |&h| (s, h)))
        .collect();
    let reports = tasks
        .par_iter()
        .map(|&(scheme, h)| {
            let n = steps_for_time(cfg.total_time, h);
            let run = RunSpec::new(h, sigma, n, cfg.seed).with_equilibration(n.saturating_sub(1));
            run_ensemble(
                scheme,
                &spec,
                &run,
                0,
                cfg.trajectories,
                |_| start.clone(),
                MomentObserver::default,
            )
            .map(|r| (n, r))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let gibbs = params.gibbs_variance();
    let mut rows = Vec::new();
    for (&(scheme, h), (n, report)) in tasks.iter().zip(&reports) {
        let closed = discrete_moments(scheme, &params, h, *n)?;
        let t = report.observer.tally;
        let (mean, var) = (t.mean(), t.variance());
        let (se_mean, se_var) = (t.mean_std_error(), t.variance_std_error());
        let time = *n as f64 * h;
        let mut push = |metric: &str, value: f64, std_error: Option<f64>| {
            rows.push(ResultRow {
                experiment: EXPERIMENT.into(),
                scheme: scheme.name().into(),
                h: Some(h),
                time: Some(time),
                metric: metric.into(),
                value,
                std_error,
                realizations: report.completed,
                force_evals: report.force_evals,
                rejected: report.rejected,
                seed: cfg.seed,
            });
        };
        push("mean", mean, Some(se_mean));
        push("variance", var, Some(se_var));
        push("closed_mean", closed.mean, None);
        push("closed_variance", closed.variance, None);
        push("mean_z", (mean - closed.mean) / se_mean, None);
        push("variance_z", (var - closed.variance) / se_var, None);
        push("gibbs_variance_z", (var - gibbs) / se_var, None);
    }

    for &scheme in &schemes {
        for &h in &formula_ladder {
            let n = steps_for_time(cfg.total_time, h);
            let time = n as f64 * h;
            let err = (discrete_moments(scheme, &params, h, n)?.variance
                - ou_exact_moments(&params, time).variance)
                .abs();
            rows.push(ResultRow {
                experiment: EXPERIMENT.into(),
                scheme: scheme.name().into(),
                h: Some(h),
                time: None,
                metric: "formula_variance_error".into(),
                value: err,
                std_error: None,
                realizations: 0,
                force_evals: 0,
                rejected: 0,
                seed: cfg.seed,
            });
        }
    }
    let fits = fit_rows(&rows, &["formula_variance_error"]);

    let resolved = json!({
        "experiment": EXPERIMENT,
        "config": cfg,
        "sigma": sigma,
        "beta": 2.0 / (sigma * sigma),
        "h_values": ladder,
        "formula_h_values": formula_ladder,
        "gibbs_variance": gibbs,
    });
    Ok(ExperimentOutput {
        experiment: EXPERIMENT.into(),
        rows,
        fits,
        histograms: Vec::new(),
        resolved_config: resolved,
    })
}

/// Steps of size `h` closest to `time`.
fn steps_for_time(time: f64, h: f64) -> u64 {
    (time / h).round().max(1.0) as u64
}
