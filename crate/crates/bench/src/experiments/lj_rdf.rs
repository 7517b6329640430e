use rayon::prelude::*;
use serde_json::json;

use brownian_core::integrators::{run_ensemble, EnsembleReport, Merge};
use brownian_core::statistics::{l2_error, HistogramDensity, RdfEstimate};
use brownian_core::{Configuration, PotentialSpec, RunSpec, SchemeId};

use super::{jackknife, name_h, steps_for};
use crate::config::LjRdfConfig;
use crate::output::{fit_rows, ExperimentOutput, ResultRow};
use crate::BenchError;

pub const EXPERIMENT: &str = "lj-rdf";

/// Trajectory indices of baseline realizations start here.
const BASELINE_OFFSET: u64 = 1 << 32;

/// Pair-distance distributions of a periodic Lennard-Jones box against a small-step
/// non-Markovian baseline.
///
/// Every realization starts from the simple cubic lattice, runs `equilibration_steps`
/// unobserved steps and then bins all pair distances at every step of the window.
pub fn run_lj_rdf(cfg: &LjRdfConfig) -> Result<ExperimentOutput, BenchError> {
    let sigma = cfg.sigma()?;
    let beta = 2.0 / (sigma * sigma);
    let schemes = cfg.scheme_ids()?;
    let ladder = cfg.h_ladder.values()?;
    let particles = cfg.particles();
    let spec = PotentialSpec::LennardJonesBox {
        particles,
        box_length: cfg.box_length,
    };
    spec.validate()?;
    let start = Configuration::cubic_lattice(cfg.particles_per_side, cfg.box_length)?;
    let empty = RdfEstimate::new(particles, cfg.box_length, cfg.r_max, cfg.bins)?;
    if cfg.baseline_realizations == 0 {
        return Err(BenchError::Config("baseline_realizations must be positive".into()));
    }

    // (scheme, h, realization index); the baseline comes first
    let mut tasks: Vec<(SchemeId, f64, u64)> = (0..cfg.baseline_realizations)
        .map(|r| (SchemeId::NonMarkovian, cfg.baseline_h, BASELINE_OFFSET + r))
        .collect();
    for &scheme in &schemes {
        for &h in &ladder {
            let count = cfg.realizations_for(scheme);
            if count == 0 {
                return Err(BenchError::Config(format!("no realizations for {scheme}")));
            }
            tasks.extend((0..count).map(|r| (scheme, h, r)));
        }
    }
    let results: Vec<EnsembleReport<RdfEstimate>> = tasks
        .par_iter()
        .map(|&(scheme, h, index)| {
            let n = cfg.equilibration_steps + steps_for(cfg.total_time, h);
            let run = RunSpec::new(h, sigma, n, cfg.seed).with_equilibration(cfg.equilibration_steps);
            run_ensemble(scheme, &spec, &run, index, 1, |_| start.clone(), || empty.clone())
        })
        .collect::<Result<Vec<_>, _>>()?;

    let (baseline_reports, main_reports) = results.split_at(cfg.baseline_realizations as usize);
    let mut baseline = empty.clone();
    for r in baseline_reports {
        baseline.merge(&r.observer);
    }
    if baseline.sample_count() == 0 {
        return Err(BenchError::Config("every baseline realization was abandoned".into()));
    }
    let baseline_density = baseline.density();
    let mut rows = Vec::new();
    let mut histograms: Vec<(String, HistogramDensity)> =
        vec![("baseline".to_string(), baseline_density.clone())];
    let base_row = |scheme: &str, h: f64, metric: &str, value: f64, group: &[EnsembleReport<RdfEstimate>]| {
        ResultRow {
            experiment: EXPERIMENT.into(),
            scheme: scheme.into(),
            h: Some(h),
            time: None,
            metric: metric.into(),
            value,
            std_error: None,
            realizations: group.iter().map(|r| r.completed).sum(),
            force_evals: group.iter().map(|r| r.force_evals).sum(),
            rejected: group.iter().map(|r| r.rejected).sum(),
            seed: cfg.seed,
        }
    };
    rows.push(base_row("baseline", cfg.baseline_h, "baseline_samples", baseline.sample_count() as f64, baseline_reports));

    let mut offset = 0;
    for &scheme in &schemes {
        for &h in &ladder {
            let count = cfg.realizations_for(scheme) as usize;
            let group = &main_reports[offset..offset + count];
            offset += count;
            let samples: u64 = group.iter().map(|r| r.observer.sample_count()).sum();
            let groups: Vec<Vec<Vec<u64>>> = group
                .iter()
                .map(|r| vec![r.observer.counts().to_vec(), vec![r.observer.sample_count()]])
                .collect();
            let abandoned: u64 = group.iter().map(|r| r.abandoned).sum();
            if abandoned > 0 {
                rows.push(base_row(scheme.name(), h, "abandoned", abandoned as f64, group));
            }
            if samples > 0 {
                let (value, se) = jackknife(&groups, |c| {
                    let est = rdf_density(&empty, &c[0], c[1][0]);
                    Ok(l2_error(&est, &baseline_density)?)
                })?;
                let mut row = base_row(scheme.name(), h, "l2", value, group);
                row.std_error = se;
                rows.push(row);
            }
            let mut pooled = empty.clone();
            for r in group {
                pooled.merge(&r.observer);
            }
            debug_assert_eq!(pooled.sample_count(), samples);
            histograms.push((name_h(scheme.name(), h), pooled.density()));
        }
    }
    let fits = fit_rows(&rows, &["l2"]);

    let resolved = json!({
        "experiment": EXPERIMENT,
        "config": cfg,
        "sigma": sigma,
        "beta": beta,
        "particles": particles,
        "h_values": ladder,
        "n_steps": ladder.iter().map(|&h| cfg.equilibration_steps + steps_for(cfg.total_time, h)).collect::<Vec<_>>(),
        "baseline_steps": cfg.equilibration_steps + steps_for(cfg.total_time, cfg.baseline_h),
    });
    Ok(ExperimentOutput {
        experiment: EXPERIMENT.into(),
        rows,
        fits,
        histograms,
        resolved_config: resolved,
    })
}

/// Read-out density of pooled RDF counts from `samples` configurations.
fn rdf_density(layout: &RdfEstimate, counts: &[u64], samples: u64) -> HistogramDensity {
    let l = layout.layout();
    let denom = (layout.pair_count() * samples) as f64;
    HistogramDensity {
        layout: l,
        mass: counts
            .iter()
            .map(|&c| if denom > 0.0 { c as f64 / denom } else { 0.0 })
            .collect(),
        total_samples: samples,
    }
}
