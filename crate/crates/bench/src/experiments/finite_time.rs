use std::f64::consts::TAU;

use rayon::prelude::*;
use serde_json::json;

use brownian_core::integrators::{Stepper, StepperState};
use brownian_core::statistics::{l2_error, BinLayout, HistogramDensity};
use brownian_core::{Configuration, Domain, NoiseStream, PotentialSpec, RunSpec, SchemeId};

use super::{density_from_counts, jackknife, steps_for};
use crate::config::FiniteTimeConfig;
use crate::output::{fit_rows, ExperimentOutput, ResultRow};
use crate::BenchError;

pub const EXPERIMENT: &str = "finite-time-1d";

/// Trajectories per unit of parallel work.
const CHUNK: u64 = 4096;
/// Independent groups for the jackknife error; chunk `c` feeds group `c % GROUPS`.
const GROUPS: usize = 16;
/// Salt separating the initial-point stream from the increment stream.
const INITIAL_SALT: u64 = 0x5eed_1417_a11c_e000;
const MAX_INITIAL_DRAWS: i64 = 1 << 20;

/// Step indices for snapshot times `0, dt, 2 dt, ... <= total` at stepsize `h`, each rounded
/// down, together with the time they stand for: the nominal multiple of `dt` when the step
/// hits it, the actual time `k h` otherwise.
pub fn snapshot_steps(dt: f64, total: f64, h: f64) -> Vec<(u64, f64)> {
    let count = steps_for(total, dt);
    (0..=count)
        .map(|j| {
            let nominal = j as f64 * dt;
            let k = steps_for(nominal, h);
            let actual = k as f64 * h;
            let time = if (actual - nominal).abs() <= 1e-9 * nominal.max(1.0) {
                nominal
            } else {
                actual
            };
            (k, time)
        })
        .collect()
}

struct Run {
    scheme: SchemeId,
    h: f64,
    /// Fine increments per step.
    ratio: usize,
    steps: u64,
    /// Snapshot step indices (sorted).
    snaps: Vec<u64>,
}

/// Per-run, per-snapshot bin counts.
type Counts = Vec<Vec<Vec<u64>>>;

/// Evolving-distribution errors on the cosine potential against a fine-step baseline.
///
/// All runs of one trajectory are driven by the same Brownian path: the baseline consumes the
/// fine increments `xi_j` at `baseline_h` and a run with `h = m * baseline_h` uses
/// `(xi_{km} + ... + xi_{km+m-1}) / sqrt(m)` at step `k`. The non-Markovian scheme's initial
/// noise is the deviate at address `-1`. Initial points are `Normal(initial_mean, initial_sd)`
/// draws rejected until they fall in `[0, 2 pi)`.
pub fn run_finite_time_1d(cfg: &FiniteTimeConfig) -> Result<ExperimentOutput, BenchError> {
    let sigma = cfg.sigma()?;
    let beta = 2.0 / (sigma * sigma);
    let schemes = cfg.scheme_ids()?;
    let baseline_scheme = cfg.baseline_id()?;
    let ladder = cfg.h_ladder.values()?;
    if !(cfg.baseline_h > 0.0) || !(cfg.snapshot_interval > 0.0) || !(cfg.total_time > 0.0) {
        return Err(BenchError::Config(
            "baseline_h, snapshot_interval and total_time must be positive".into(),
        ));
    }
    if cfg.trajectories == 0 || !(cfg.initial_sd > 0.0) {
        return Err(BenchError::Config("need trajectories > 0 and initial_sd > 0".into()));
    }
    let layout = BinLayout::new(0.0, TAU, cfg.bins)?;
    let fine_steps = steps_for(cfg.total_time, cfg.baseline_h);

    let mut runs = vec![Run {
        scheme: baseline_scheme,
        h: cfg.baseline_h,
        ratio: 1,
        steps: fine_steps,
        snaps: snapshot_steps(cfg.snapshot_interval, cfg.total_time, cfg.baseline_h)
            .iter()
            .map(|s| s.0)
            .collect(),
    }];
    for &scheme in &schemes {
        for &h in &ladder {
            let m = h / cfg.baseline_h;
            let ratio = m.round();
            if ratio < 1.0 || (m - ratio).abs() > 1e-9 * m {
                return Err(BenchError::Config(format!(
                    "stepsize {h} is not an integer multiple of baseline_h {}",
                    cfg.baseline_h
                )));
            }
            runs.push(Run {
                scheme,
                h,
                ratio: ratio as usize,
                steps: steps_for(cfg.total_time, h),
                snaps: snapshot_steps(cfg.snapshot_interval, cfg.total_time, h)
                    .iter()
                    .map(|s| s.0)
                    .collect(),
            });
        }
    }
    let times: Vec<f64> = snapshot_steps(cfg.snapshot_interval, cfg.total_time, cfg.baseline_h)
        .iter()
        .map(|s| s.1)
        .collect();

    let spec = PotentialSpec::Cosine;
    let domain = Domain::circle();
    let increments = NoiseStream::new(cfg.seed, 1);
    let initial_stream = NoiseStream::new(cfg.seed ^ INITIAL_SALT, 1);
    let n_chunks = cfg.trajectories.div_ceil(CHUNK);
    let empty = || -> Counts {
        runs.iter()
            .map(|r| vec![vec![0u64; cfg.bins]; r.snaps.len()])
            .collect()
    };

    let chunk_counts: Vec<Result<Counts, BenchError>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = empty();
            let mut steppers = runs
                .iter()
                .map(|r| Stepper::new(spec, domain, &RunSpec::new(r.h, sigma, r.steps, cfg.seed)))
                .collect::<Result<Vec<_>, _>>()?;
            let mut fine = vec![0.0; fine_steps as usize + 1];
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(cfg.trajectories);
            for traj in lo..hi {
                let x0 = initial_point(&initial_stream, traj, cfg)?;
                let mut noise = increments.trajectory(traj);
                for (j, v) in fine.iter_mut().enumerate() {
                    *v = noise.deviate_at(j as i64 - 1, 0);
                }
                for ((run, stepper), run_counts) in
                    runs.iter().zip(steppers.iter_mut()).zip(counts.iter_mut())
                {
                    run_one(run, stepper, domain, x0, &fine, layout, run_counts)?;
                }
            }
            Ok(counts)
        })
        .collect();

    let mut groups: Vec<Counts> = (0..GROUPS.min(n_chunks as usize)).map(|_| empty()).collect();
    let n_groups = groups.len();
    for (c, counts) in chunk_counts.into_iter().enumerate() {
        let counts = counts?;
        let g = &mut groups[c % n_groups];
        for (run_g, run_c) in g.iter_mut().zip(&counts) {
            for (snap_g, snap_c) in run_g.iter_mut().zip(run_c) {
                for (a, b) in snap_g.iter_mut().zip(snap_c) {
                    *a += b;
                }
            }
        }
    }

    let mut rows = Vec::new();
    let mut histograms: Vec<(String, HistogramDensity)> = Vec::new();
    let pooled = |run: usize, snap: usize| -> Vec<u64> {
        let mut acc = vec![0u64; cfg.bins];
        for g in &groups {
            for (a, b) in acc.iter_mut().zip(&g[run][snap]) {
                *a += b;
            }
        }
        acc
    };
    for (s, &t) in times.iter().enumerate() {
        histograms.push((
            format!("baseline_t{t}"),
            density_from_counts(layout, &pooled(0, s)),
        ));
    }
    for (ri, run) in runs.iter().enumerate().skip(1) {
        let steps_per_traj = run.steps * run.scheme.force_evals_per_step();
        for (s, &t) in times.iter().enumerate() {
            let paired: Vec<Vec<Vec<u64>>> = groups
                .iter()
                .map(|g| vec![g[ri][s].clone(), g[0][s].clone()])
                .collect();
            let (value, se) = jackknife(&paired, |c| {
                Ok(l2_error(
                    &density_from_counts(layout, &c[0]),
                    &density_from_counts(layout, &c[1]),
                )?)
            })?;
            let snap_time = snapshot_steps(cfg.snapshot_interval, cfg.total_time, run.h)[s].1;
            rows.push(ResultRow {
                experiment: EXPERIMENT.into(),
                scheme: run.scheme.name().into(),
                h: Some(run.h),
                time: Some(if (snap_time - t).abs() < 1e-9 { t } else { snap_time }),
                metric: "l2".into(),
                value,
                std_error: se,
                realizations: cfg.trajectories,
                force_evals: steps_per_traj * cfg.trajectories,
                rejected: 0,
                seed: cfg.seed,
            });
            histograms.push((
                format!("{}_h{}_t{t}", run.scheme.name(), run.h),
                density_from_counts(layout, &pooled(ri, s)),
            ));
        }
    }
    let fits = fit_rows(&rows, &["l2"]);

    let resolved = json!({
        "experiment": EXPERIMENT,
        "config": cfg,
        "sigma": sigma,
        "beta": beta,
        "h_values": ladder,
        "snapshot_times": times,
        "baseline_steps": fine_steps,
        "baseline_force_evals": fine_steps * baseline_scheme.force_evals_per_step() * cfg.trajectories,
    });
    Ok(ExperimentOutput {
        experiment: EXPERIMENT.into(),
        rows,
        fits,
        histograms,
        resolved_config: resolved,
    })
}

fn initial_point(stream: &NoiseStream, traj: u64, cfg: &FiniteTimeConfig) -> Result<f64, BenchError> {
    let mut draws = stream.trajectory(traj);
    for attempt in 0..MAX_INITIAL_DRAWS {
        let x = cfg.initial_mean + cfg.initial_sd * draws.deviate_at(attempt, 0);
        if (0.0..TAU).contains(&x) {
            return Ok(x);
        }
    }
    Err(BenchError::Config(
        "initial distribution puts (almost) no mass on [0, 2 pi)".into(),
    ))
}

/// One trajectory of one run, binning the snapshots. `fine[0]` holds the deviate at address
/// `-1`, `fine[j + 1]` the fine increment `j`.
fn run_one(
    run: &Run,
    stepper: &mut Stepper,
    domain: Domain,
    x0: f64,
    fine: &[f64],
    layout: BinLayout,
    counts: &mut [Vec<u64>],
) -> Result<(), BenchError> {
    let start = Configuration::new(domain, vec![x0])?;
    let mut state = if run.scheme == SchemeId::NonMarkovian {
        StepperState::with_previous_noise(start, vec![fine[0]])
    } else {
        StepperState::new(start)
    };
    let scale = (run.ratio as f64).sqrt().recip();
    let mut next_snap = 0;
    let mut bin = |k: u64, x: f64, next_snap: &mut usize| {
        while *next_snap < run.snaps.len() && run.snaps[*next_snap] == k {
            if let Some(b) = layout.bin_of(x) {
                counts[*next_snap][b] += 1;
            }
            *next_snap += 1;
        }
    };
    bin(0, x0, &mut next_snap);
    let mut xi = [0.0];
    for k in 0..run.steps {
        let base = 1 + k as usize * run.ratio;
        xi[0] = fine[base..base + run.ratio].iter().sum::<f64>() * scale;
        stepper.step(run.scheme, &mut state, &xi)?;
        bin(k + 1, state.x.position()[0], &mut next_snap);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_schedule() {
        let s = snapshot_steps(0.96, 9.0, 0.16);
        assert_eq!(s.len(), 10);
        assert_eq!(s[1], (6, 0.96));
        assert_eq!(s[9].0, 54);
        let s = snapshot_steps(0.96, 9.0, 0.04);
        assert_eq!(s[9], (216, 9.0 * 0.96));
        // stepsize that does not divide the interval
        let s = snapshot_steps(0.96, 2.0, 0.5);
        assert_eq!(s[1], (1, 0.5));
        assert_eq!(s[2], (3, 1.5));
    }
}
