//! The four experiments. Each returns an [`ExperimentOutput`](crate::ExperimentOutput) and is a
//! pure function of its configuration.

mod finite_time;
mod lj_rdf;
mod longtime;
mod ou_verify;

pub use finite_time::{run_finite_time_1d, snapshot_steps};
pub use lj_rdf::run_lj_rdf;
pub use longtime::run_longtime_1d;
pub use ou_verify::run_ou_verify;

use brownian_core::statistics::{BinLayout, HistogramDensity};

use crate::BenchError;

/// Normalized masses of raw bin counts.
pub(crate) fn density_from_counts(layout: BinLayout, counts: &[u64]) -> HistogramDensity {
    let total: u64 = counts.iter().sum();
    let mass = if total == 0 {
        vec![0.0; counts.len()]
    } else {
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    };
    HistogramDensity {
        layout,
        mass,
        total_samples: total,
    }
}

/// Statistic of the pooled counts of independent groups, with its delete-one jackknife
/// standard error.
///
/// Each group holds one or more count vectors (e.g. a run and its baseline); pooling sums
/// them position by position. The error is `None` with fewer than two groups or when a
/// leave-one-out statistic cannot be evaluated.
pub(crate) fn jackknife<F>(
    groups: &[Vec<Vec<u64>>],
    stat: F,
) -> Result<(f64, Option<f64>), BenchError>
where
    F: Fn(&[Vec<u64>]) -> Result<f64, BenchError>,
{
    let first = groups
        .first()
        .ok_or_else(|| BenchError::Config("no groups to pool".into()))?;
    let mut pooled: Vec<Vec<u64>> = first.iter().map(|c| vec![0; c.len()]).collect();
    for g in groups {
        for (p, c) in pooled.iter_mut().zip(g) {
            for (a, b) in p.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    let value = stat(&pooled)?;
    let n = groups.len();
    if n < 2 {
        return Ok((value, None));
    }
    let mut loo = Vec::with_capacity(n);
    for g in groups {
        let rest: Vec<Vec<u64>> = pooled
            .iter()
            .zip(g)
            .map(|(p, c)| p.iter().zip(c).map(|(a, b)| a - b).collect())
            .collect();
        match stat(&rest) {
            Ok(v) => loo.push(v),
            Err(_) => return Ok((value, None)),
        }
    }
    let mean = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() * (n - 1) as f64 / n as f64;
    Ok((value, Some(var.sqrt())))
}

/// Number of steps of size `h` in `time`, tolerating representation error in `time / h`.
pub(crate) fn steps_for(time: f64, h: f64) -> u64 {
    (time / h + 1e-9).floor() as u64
}

pub(crate) fn name_h(prefix: &str, h: f64) -> String {
    format!("{prefix}_h{h}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_mean_matches_standard_error() {
        // statistic = mean of the single-bin counts, each group contributes one observation
        let data = [3u64, 5, 4, 8, 6, 2];
        let groups: Vec<Vec<Vec<u64>>> = data.iter().map(|&d| vec![vec![d, 1]]).collect();
        let (v, se) = jackknife(&groups, |c| Ok(c[0][0] as f64 / c[0][1] as f64)).unwrap();
        let n = data.len() as f64;
        let mean = data.iter().sum::<u64>() as f64 / n;
        let s2 = data.iter().map(|&d| (d as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((v - mean).abs() < 1e-12);
        assert!((se.unwrap() - (s2 / n).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn steps_tolerate_rounding() {
        assert_eq!(steps_for(0.96, 0.16), 6);
        assert_eq!(steps_for(0.96 * 3.0, 0.24), 12);
        assert_eq!(steps_for(1.0, 0.3), 3);
        assert_eq!(steps_for(9.0, 0.04), 225);
    }
}
