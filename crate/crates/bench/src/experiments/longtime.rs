use std::f64::consts::TAU;

use rayon::prelude::*;
use serde_json::json;

use brownian_core::integrators::{run_ensemble, Merge};
use brownian_core::statistics::{
    kl_error, l2_error, reference_density_1d, BinLayout, Histogram, PositionHistogram,
};
use brownian_core::{Configuration, Domain, PotentialSpec, RunSpec, SchemeId, StatsError};

use super::{density_from_counts, jackknife, name_h, steps_for};
use crate::config::LongTimeConfig;
use crate::output::{fit_rows, ExperimentOutput, ResultRow};
use crate::BenchError;

pub const EXPERIMENT: &str = "longtime-1d";

/// Per-bin quadrature tolerance of the reference masses.
const REFERENCE_TOL: f64 = 1e-13;

/// Long-run position histograms on the cosine potential against the exact Gibbs bin masses.
///
/// Each realization is one trajectory started at `initial_position`; after
/// `equilibration_steps` every state is binned. Errors are evaluated on the histogram pooled
/// over realizations, with a jackknife error over realizations.
pub fn run_longtime_1d(cfg: &LongTimeConfig) -> Result<ExperimentOutput, BenchError> {
    let sigma = cfg.sigma()?;
    let beta = 2.0 / (sigma * sigma);
    let schemes = cfg.scheme_ids()?;
    let ladder = cfg.h_ladder.values()?;
    if cfg.realizations == 0 {
        return Err(BenchError::Config("realizations must be positive".into()));
    }
    let spec = PotentialSpec::Cosine;
    let domain = Domain::circle();
    let start = Configuration::new(domain, vec![cfg.initial_position])?;
    let layout = BinLayout::new(0.0, TAU, cfg.bins)?;
    let reference = reference_density_1d(&spec, beta, layout, REFERENCE_TOL)?;

    let tasks: Vec<(SchemeId, f64, u64)> = schemes
        .iter()
        .flat_map(|&s| {
            ladder
                .iter()
                .flat_map(move |&h| (0..cfg.realizations).map(move |r| (s, h, r)))
        })
        .collect();
    let results = tasks
        .par_iter()
        .map(|&(scheme, h, r)| {
            let n = cfg.equilibration_steps + steps_for(cfg.total_time, h);
            let run = RunSpec::new(h, sigma, n, cfg.seed).with_equilibration(cfg.equilibration_steps);
            run_ensemble(
                scheme,
                &spec,
                &run,
                r,
                1,
                |_| start.clone(),
                || PositionHistogram::new(layout, 0),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    let mut histograms = vec![("reference".to_string(), reference.clone())];
    let per = cfg.realizations as usize;
    for (chunk, group) in results.chunks(per).enumerate() {
        let (scheme, h, _) = tasks[chunk * per];
        let groups: Vec<Vec<Vec<u64>>> = group
            .iter()
            .map(|rep| vec![rep.observer.histogram.counts().to_vec()])
            .collect();
        let force_evals: u64 = group.iter().map(|r| r.force_evals).sum();
        let rejected: u64 = group.iter().map(|r| r.rejected).sum();
        let mut pooled = Histogram::new(layout);
        for rep in group {
            pooled.merge(&rep.observer.histogram);
        }
        histograms.push((name_h(scheme.name(), h), pooled.density()));

        let row = |metric: &str, value: f64, std_error: Option<f64>| ResultRow {
            experiment: EXPERIMENT.into(),
            scheme: scheme.name().into(),
            h: Some(h),
            time: None,
            metric: metric.into(),
            value,
            std_error,
            realizations: cfg.realizations,
            force_evals,
            rejected,
            seed: cfg.seed,
        };
        let abandoned: u64 = group.iter().map(|r| r.abandoned).sum();
        if abandoned > 0 {
            rows.push(row("abandoned", abandoned as f64, None));
        }
        if pooled.total() == 0 {
            continue;
        }
        let (l2, l2_se) = jackknife(&groups, |c| {
            Ok(l2_error(&density_from_counts(layout, &c[0]), &reference)?)
        })?;
        rows.push(row("l2", l2, l2_se));
        match jackknife(&groups, |c| {
            Ok(kl_error(&reference, &density_from_counts(layout, &c[0]))?)
        }) {
            Ok((kl, kl_se)) => rows.push(row("kl", kl, kl_se)),
            Err(BenchError::Stats(StatsError::Undersampled { .. })) => {
                rows.push(row("kl_undersampled", 1.0, None))
            }
            Err(e) => return Err(e),
        }
    }
    let fits = fit_rows(&rows, &["l2", "kl"]);

    let steps: Vec<u64> = ladder
        .iter()
        .map(|&h| cfg.equilibration_steps + steps_for(cfg.total_time, h))
        .collect();
    let resolved = json!({
        "experiment": EXPERIMENT,
        "config": cfg,
        "sigma": sigma,
        "beta": beta,
        "h_values": ladder,
        "n_steps": steps,
    });
    Ok(ExperimentOutput {
        experiment: EXPERIMENT.into(),
        rows,
        fits,
        histograms,
        resolved_config: resolved,
    })
}
