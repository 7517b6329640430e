//! Result tables and their CSV / JSON files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use brownian_core::statistics::{fit_order, HistogramDensity};

use crate::BenchError;

pub const RESULTS_HEADER: &str =
    "experiment,scheme,h,time,metric,value,std_error,realizations,force_evals,rejected,seed";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub scheme: String,
    pub h: Option<f64>,
    pub time: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub realizations: u64,
    pub force_evals: u64,
    pub rejected: u64,
    pub seed: u64,
}

/// Log-log slope of one metric against `h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub experiment: String,
    pub scheme: String,
    pub time: Option<f64>,
    pub metric: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Everything one experiment produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub experiment: String,
    pub rows: Vec<ResultRow>,
    pub fits: Vec<FitRow>,
    /// Named histogram or RDF dumps.
    pub histograms: Vec<(String, HistogramDensity)>,
    /// The fully resolved configuration, including derived quantities.
    pub resolved_config: serde_json::Value,
}

impl ExperimentOutput {
    pub fn rows_for<'a>(
        &'a self,
        scheme: &'a str,
        metric: &'a str,
    ) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.scheme == scheme && r.metric == metric)
    }

    pub fn fit(&self, scheme: &str, metric: &str, time: Option<f64>) -> Option<&FitRow> {
        self.fits.iter().find(|f| {
            f.scheme == scheme
                && f.metric == metric
                && match (f.time, time) {
                    (None, None) => true,
                    (Some(a), Some(b)) => (a - b).abs() < 1e-9,
                    _ => false,
                }
        })
    }
}

/// Fits `value ~ h^slope` for every `(scheme, time, metric)` group having at least three
/// distinct positive `h` values and positive values.
pub fn fit_rows(rows: &[ResultRow], metrics: &[&str]) -> Vec<FitRow> {
    let mut keys: Vec<(String, String, Option<u64>, String)> = Vec::new();
    for r in rows {
        if !metrics.contains(&r.metric.as_str()) || r.h.is_none() {
            continue;
        }
        let key = (
            r.experiment.clone(),
            r.scheme.clone(),
            r.time.map(f64::to_bits),
            r.metric.clone(),
        );
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut fits = Vec::new();
    for (experiment, scheme, time, metric) in keys {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| {
                r.experiment == experiment
                    && r.scheme == scheme
                    && r.time.map(f64::to_bits) == time
                    && r.metric == metric
            })
            .filter_map(|r| r.h.map(|h| (h, r.value)))
            .collect();
        if let Ok(series) = fit_order(&pts) {
            fits.push(FitRow {
                experiment,
                scheme,
                time: time.map(f64::from_bits),
                metric,
                slope: series.fitted_slope,
                intercept: series.fitted_intercept,
                r_squared: series.r_squared,
                points: series.points.len(),
            });
        }
    }
    fits
}

fn csv_err(e: csv::Error) -> BenchError {
    BenchError::Io(std::io::Error::other(e))
}

/// Writes the results CSV; rejects an empty row set.
pub fn write_results_csv(rows: &[ResultRow], path: &Path) -> Result<(), BenchError> {
    if rows.is_empty() {
        return Err(BenchError::Config("no result rows to write".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_fits_csv(fits: &[FitRow], path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    if fits.is_empty() {
        w.write_record([
            "experiment", "scheme", "time", "metric", "slope", "intercept", "r_squared", "points",
        ])
        .map_err(csv_err)?;
    }
    for f in fits {
        w.serialize(f).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `bin_lower,bin_upper,mass` per bin.
pub fn write_histogram_csv(hist: &HistogramDensity, path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["bin_lower", "bin_upper", "mass"]).map_err(csv_err)?;
    for (b, m) in hist.mass.iter().enumerate() {
        let (lo, hi) = hist.layout.edges(b);
        w.write_record([lo.to_string(), hi.to_string(), m.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<dir>/<experiment>.csv`, `<experiment>.fits.csv`, `<experiment>.config.json` and the
/// histogram dumps under `<dir>/<experiment>-histograms/`. Returns the results CSV path.
pub fn emit_results(output: &ExperimentOutput, dir: &Path) -> Result<PathBuf, BenchError> {
    fs::create_dir_all(dir)?;
    let stem = &output.experiment;
    let results = dir.join(format!("{stem}.csv"));
    write_results_csv(&output.rows, &results)?;
    write_fits_csv(&output.fits, &dir.join(format!("{stem}.fits.csv")))?;
    let mut json = fs::File::create(dir.join(format!("{stem}.config.json")))?;
    serde_json::to_writer_pretty(&mut json, &output.resolved_config)
        .map_err(|e| BenchError::Io(e.into()))?;
    json.write_all(b"\n")?;
    if !output.histograms.is_empty() {
        let hdir = dir.join(format!("{stem}-histograms"));
        fs::create_dir_all(&hdir)?;
        for (name, hist) in &output.histograms {
            write_histogram_csv(hist, &hdir.join(format!("{name}.csv")))?;
        }
    }
    Ok(results)
}

/// Reads a results CSV back (for `fit-order`).
pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>, BenchError> {
    #[derive(serde::Deserialize)]
    struct Raw {
        experiment: String,
        scheme: String,
        h: Option<f64>,
        time: Option<f64>,
        metric: String,
        value: f64,
        std_error: Option<f64>,
        realizations: u64,
        force_evals: u64,
        rejected: u64,
        seed: u64,
    }
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.iter().collect::<Vec<_>>().join(",");
    if headers != RESULTS_HEADER {
        return Err(BenchError::Config(format!(
            "{} does not have the results header",
            path.display()
        )));
    }
    r.deserialize::<Raw>()
        .map(|row| {
            let raw = row.map_err(csv_err)?;
            Ok(ResultRow {
                experiment: raw.experiment,
                scheme: raw.scheme,
                h: raw.h,
                time: raw.time,
                metric: raw.metric,
                value: raw.value,
                std_error: raw.std_error,
                realizations: raw.realizations,
                force_evals: raw.force_evals,
                rejected: raw.rejected,
                seed: raw.seed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(h: f64, value: f64) -> ResultRow {
        ResultRow {
            experiment: "x".into(),
            scheme: "em".into(),
            h: Some(h),
            time: None,
            metric: "l2".into(),
            value,
            std_error: Some(0.1),
            realizations: 1,
            force_evals: 10,
            rejected: 0,
            seed: 7,
        }
    }

    #[test]
    fn one_row_is_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_results_csv(&[row(0.1, 1.0 / 3.0)], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], RESULTS_HEADER);
        assert_eq!(lines[1], "x,em,0.1,,l2,0.3333333333333333,0.1,1,10,0,7");
        let back = read_results_csv(&p).unwrap();
        assert_eq!(back[0].value.to_bits(), (1.0f64 / 3.0).to_bits());
        assert!(write_results_csv(&[], &p).is_err());
    }

    #[test]
    fn fits_groups() {
        let rows: Vec<_> = [0.1, 0.2, 0.4].iter().map(|&h| row(h, 2.0 * h * h)).collect();
        let fits = fit_rows(&rows, &["l2"]);
        assert_eq!(fits.len(), 1);
        assert!((fits[0].slope - 2.0).abs() < 1e-12);
        assert!(fit_rows(&rows, &["kl"]).is_empty());
    }
}
