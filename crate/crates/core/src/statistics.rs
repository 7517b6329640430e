//! Empirical distributions and distribution-error metrics.

use thiserror::Error;

use crate::integrators::{Merge, Observer};
use crate::model::{min_image, PotentialSpec};
use crate::quadrature::adaptive_gk;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("histogram layouts differ")]
    LayoutMismatch,
    #[error("estimated bin {bin} is empty where the reference has mass {reference_mass:e}; lengthen the run")]
    Undersampled { bin: usize, reference_mass: f64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("nonpositive value {value} at h = {h}")]
    NonPositive { h: f64, value: f64 },
    #[error("invalid histogram: {0}")]
    InvalidLayout(String),
    #[error("reference density unavailable for {0}")]
    Unsupported(String),
}

/// Equal-width bins over `[lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinLayout {
    pub lower: f64,
    pub upper: f64,
    pub n_bins: usize,
}

impl BinLayout {
    pub fn new(lower: f64, upper: f64, n_bins: usize) -> Result<Self, StatsError> {
        if n_bins == 0 || !(upper > lower) || !lower.is_finite() || !upper.is_finite() {
            return Err(StatsError::InvalidLayout(format!(
                "[{lower}, {upper}) with {n_bins} bins"
            )));
        }
        Ok(BinLayout {
            lower,
            upper,
            n_bins,
        })
    }

    pub fn width(&self) -> f64 {
        (self.upper - self.lower) / self.n_bins as f64
    }

    pub fn edges(&self, bin: usize) -> (f64, f64) {
        let w = self.width();
        let lo = self.lower + bin as f64 * w;
        let hi = if bin + 1 == self.n_bins {
            self.upper
        } else {
            self.lower + (bin + 1) as f64 * w
        };
        (lo, hi)
    }

    #[inline]
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lower && x < self.upper) {
            return None;
        }
        let b = ((x - self.lower) / (self.upper - self.lower) * self.n_bins as f64) as usize;
        Some(b.min(self.n_bins - 1))
    }
}

/// Integer bin counts; merging is exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    layout_bits: (u64, u64, usize),
    counts: Vec<u64>,
    out_of_range: u64,
}

impl Histogram {
    pub fn new(layout: BinLayout) -> Self {
        Histogram {
            layout_bits: (layout.lower.to_bits(), layout.upper.to_bits(), layout.n_bins),
            counts: vec![0; layout.n_bins],
            out_of_range: 0,
        }
    }

    pub fn layout(&self) -> BinLayout {
        BinLayout {
            lower: f64::from_bits(self.layout_bits.0),
            upper: f64::from_bits(self.layout_bits.1),
            n_bins: self.layout_bits.2,
        }
    }

    #[inline]
    pub fn accumulate(&mut self, sample: f64) {
        match self.layout().bin_of(sample) {
            Some(b) => self.counts[b] += 1,
            None => self.out_of_range += 1,
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Samples that fell inside the layout.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn out_of_range(&self) -> u64 {
        self.out_of_range
    }

    /// Bin masses normalized over in-range samples.
    pub fn density(&self) -> HistogramDensity {
        let total = self.total();
        let mass = if total == 0 {
            vec![0.0; self.counts.len()]
        } else {
            self.counts.iter().map(|&c| c as f64 / total as f64).collect()
        };
        HistogramDensity {
            layout: self.layout(),
            mass,
            total_samples: total,
        }
    }
}

impl Merge for Histogram {
    fn merge(&mut self, other: &Self) {
        assert_eq!(self.layout_bits, other.layout_bits, "merging histograms with different layouts");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.out_of_range += other.out_of_range;
    }

    fn reset(&mut self) {
        self.counts.fill(0);
        self.out_of_range = 0;
    }
}

/// Histograms one coordinate (`component`) of every observed state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionHistogram {
    pub component: usize,
    pub histogram: Histogram,
}

impl PositionHistogram {
    pub fn new(layout: BinLayout, component: usize) -> Self {
        PositionHistogram {
            component,
            histogram: Histogram::new(layout),
        }
    }
}

impl Observer for PositionHistogram {
    #[inline]
    fn observe(&mut self, _step: u64, x: &[f64]) {
        self.histogram.accumulate(x[self.component]);
    }
}

impl Merge for PositionHistogram {
    fn merge(&mut self, other: &Self) {
        self.histogram.merge(&other.histogram);
    }
    fn reset(&mut self) {
        self.histogram.reset();
    }
}

/// Running power sums of one coordinate; used for ensemble moments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentTally {
    pub n: u64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
}

impl MomentTally {
    pub fn push(&mut self, v: f64) {
        let v2 = v * v;
        self.n += 1;
        self.s1 += v;
        self.s2 += v2;
        self.s3 += v2 * v;
        self.s4 += v2 * v2;
    }

    pub fn mean(&self) -> f64 {
        self.s1 / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        (self.s2 - n * m * m) / (n - 1.0)
    }

    /// Fourth central moment (plug-in).
    pub fn central_m4(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        let (e1, e2, e3, e4) = (m, self.s2 / n, self.s3 / n, self.s4 / n);
        e4 - 4.0 * e3 * e1 + 6.0 * e2 * e1 * e1 - 3.0 * e1.powi(4)
    }

    pub fn mean_std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    /// Large-sample standard error of the sample variance, `sqrt((m4 - s^4) / n)`.
    pub fn variance_std_error(&self) -> f64 {
        let v = self.variance();
        ((self.central_m4() - v * v).max(0.0) / self.n as f64).sqrt()
    }

    pub fn merge_from(&mut self, o: &MomentTally) {
        self.n += o.n;
        self.s1 += o.s1;
        self.s2 += o.s2;
        self.s3 += o.s3;
        self.s4 += o.s4;
    }
}

/// Records the power sums of one coordinate at every observed state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentObserver {
    pub component: usize,
    pub tally: MomentTally,
}

impl Observer for MomentObserver {
    fn observe(&mut self, _step: u64, x: &[f64]) {
        self.tally.push(x[self.component]);
    }
}

impl Merge for MomentObserver {
    fn merge(&mut self, other: &Self) {
        self.tally.merge_from(&other.tally);
    }
    fn reset(&mut self) {
        self.tally = MomentTally::default();
    }
}

/// Histograms of one coordinate at a fixed list of step indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotRecorder {
    pub component: usize,
    /// Sorted step indices at which to record.
    pub steps: Vec<u64>,
    pub snapshots: Vec<Histogram>,
    cursor: usize,
}

impl SnapshotRecorder {
    pub fn new(layout: BinLayout, component: usize, mut steps: Vec<u64>) -> Self {
        steps.sort_unstable();
        steps.dedup();
        let snapshots = steps.iter().map(|_| Histogram::new(layout)).collect();
        SnapshotRecorder {
            component,
            steps,
            snapshots,
            cursor: 0,
        }
    }
}

impl Observer for SnapshotRecorder {
    #[inline]
    fn observe(&mut self, step: u64, x: &[f64]) {
        while self.cursor < self.steps.len() && self.steps[self.cursor] < step {
            self.cursor += 1;
        }
        if self.cursor < self.steps.len() && self.steps[self.cursor] == step {
            self.snapshots[self.cursor].accumulate(x[self.component]);
            self.cursor += 1;
        }
    }
}

impl Merge for SnapshotRecorder {
    fn merge(&mut self, other: &Self) {
        assert_eq!(self.steps, other.steps, "merging snapshot recorders with different schedules");
        for (a, b) in self.snapshots.iter_mut().zip(&other.snapshots) {
            a.merge(b);
        }
    }
    fn reset(&mut self) {
        for s in &mut self.snapshots {
            s.reset();
        }
        self.cursor = 0;
    }
}

/// Normalized bin masses.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramDensity {
    pub layout: BinLayout,
    pub mass: Vec<f64>,
    pub total_samples: u64,
}

impl HistogramDensity {
    fn check_layout(&self, other: &HistogramDensity) -> Result<(), StatsError> {
        if self.layout == other.layout && self.mass.len() == other.mass.len() {
            Ok(())
        } else {
            Err(StatsError::LayoutMismatch)
        }
    }

    /// Mass-weighted average of the bin-wise masses of several densities.
    pub fn average(items: &[HistogramDensity]) -> Result<HistogramDensity, StatsError> {
        let first = items.first().ok_or(StatsError::TooFewPoints { needed: 1, got: 0 })?;
        let mut mass = vec![0.0; first.mass.len()];
        let mut total = 0;
        for it in items {
            first.check_layout(it)?;
            for (m, v) in mass.iter_mut().zip(&it.mass) {
                *m += v / items.len() as f64;
            }
            total += it.total_samples;
        }
        Ok(HistogramDensity {
            layout: first.layout,
            mass,
            total_samples: total,
        })
    }
}

/// Exact bin masses of `exp(-beta V) / Z` over `layout`, by per-bin adaptive Gauss-Kronrod.
///
/// Masses are normalized over the layout's range.
pub fn reference_density_1d(
    spec: &PotentialSpec,
    beta: f64,
    layout: BinLayout,
    tol: f64,
) -> Result<HistogramDensity, StatsError> {
    let offset = match *spec {
        PotentialSpec::Quadratic { .. } | PotentialSpec::Flat => 0.0,
        PotentialSpec::Cosine => -1.0,
        PotentialSpec::LennardJonesBox { .. } => {
            return Err(StatsError::Unsupported(format!("{spec:?}")));
        }
    };
    let density = |x: f64| (-beta * (spec.energy_raw(&[x]).unwrap_or(f64::INFINITY) - offset)).exp();
    let raw: Vec<f64> = (0..layout.n_bins)
        .map(|b| {
            let (lo, hi) = layout.edges(b);
            adaptive_gk(density, lo, hi, tol, 30)
        })
        .collect();
    let z: f64 = raw.iter().sum();
    Ok(HistogramDensity {
        layout,
        mass: raw.iter().map(|m| m / z).collect(),
        total_samples: 0,
    })
}

/// `sqrt(sum_i (est_i - ref_i)^2)` over bin masses.
pub fn l2_error(est: &HistogramDensity, reference: &HistogramDensity) -> Result<f64, StatsError> {
    est.check_layout(reference)?;
    Ok(est
        .mass
        .iter()
        .zip(&reference.mass)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Relative entropy `sum_i ref_i ln(ref_i / est_i)`; bins with zero reference mass contribute 0.
pub fn kl_error(reference: &HistogramDensity, est: &HistogramDensity) -> Result<f64, StatsError> {
    reference.check_layout(est)?;
    let mut s = 0.0;
    for (bin, (&r, &e)) in reference.mass.iter().zip(&est.mass).enumerate() {
        if r > 0.0 {
            if e <= 0.0 {
                return Err(StatsError::Undersampled {
                    bin,
                    reference_mass: r,
                });
            }
            s += r * (r / e).ln();
        }
    }
    Ok(s)
}

/// Pair-distance histogram over `(0, r_max)` for particles in a periodic box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RdfEstimate {
    particles: usize,
    box_length_bits: u64,
    histogram: Histogram,
    /// Number of configurations accumulated.
    sample_count: u64,
}

impl RdfEstimate {
    pub fn new(particles: usize, box_length: f64, r_max: f64, n_bins: usize) -> Result<Self, StatsError> {
        if particles < 2 {
            return Err(StatsError::InvalidLayout("need at least two particles".into()));
        }
        Ok(RdfEstimate {
            particles,
            box_length_bits: box_length.to_bits(),
            histogram: Histogram::new(BinLayout::new(0.0, r_max, n_bins)?),
            sample_count: 0,
        })
    }

    pub fn layout(&self) -> BinLayout {
        self.histogram.layout()
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn pair_count(&self) -> u64 {
        (self.particles * (self.particles - 1) / 2) as u64
    }

    pub fn counts(&self) -> &[u64] {
        self.histogram.counts()
    }

    /// Adds every unordered pair's minimum-image distance of one configuration.
    pub fn accumulate(&mut self, positions: &[f64]) {
        let l = f64::from_bits(self.box_length_bits);
        let n = self.particles;
        assert_eq!(positions.len(), 3 * n, "configuration does not match the RDF box");
        for i in 0..n {
            for j in (i + 1)..n {
                let mut r2 = 0.0;
                for c in 0..3 {
                    let d = min_image(positions[3 * j + c] - positions[3 * i + c], l);
                    r2 += d * d;
                }
                self.histogram.accumulate(r2.sqrt());
            }
        }
        self.sample_count += 1;
    }

    /// Pair-distance density: `counts / (pairs * samples * bin_width)`.
    pub fn g(&self) -> Vec<f64> {
        let denom = (self.pair_count() * self.sample_count) as f64 * self.layout().width();
        self.histogram
            .counts()
            .iter()
            .map(|&c| if denom > 0.0 { c as f64 / denom } else { 0.0 })
            .collect()
    }

    /// The same normalized readout as bin masses (summing to the in-range fraction of pairs).
    pub fn density(&self) -> HistogramDensity {
        let w = self.layout().width();
        HistogramDensity {
            layout: self.layout(),
            mass: self.g().iter().map(|v| v * w).collect(),
            total_samples: self.sample_count,
        }
    }
}

impl Observer for RdfEstimate {
    fn observe(&mut self, _step: u64, x: &[f64]) {
        self.accumulate(x);
    }
}

impl Merge for RdfEstimate {
    fn merge(&mut self, other: &Self) {
        assert_eq!(self.particles, other.particles);
        assert_eq!(self.box_length_bits, other.box_length_bits);
        self.histogram.merge(&other.histogram);
        self.sample_count += other.sample_count;
    }
    fn reset(&mut self) {
        self.histogram.reset();
        self.sample_count = 0;
    }
}

/// Log-log least-squares fit of error against stepsize.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    /// `(h, error)` sorted by `h`.
    pub points: Vec<(f64, f64)>,
    pub fitted_slope: f64,
    pub fitted_intercept: f64,
    pub r_squared: f64,
}

impl ErrorSeries {
    /// Error predicted by the fitted power law.
    pub fn predict(&self, h: f64) -> f64 {
        (self.fitted_intercept + self.fitted_slope * h.ln()).exp()
    }
}

pub fn fit_order(series: &[(f64, f64)]) -> Result<ErrorSeries, StatsError> {
    if series.len() < 3 {
        return Err(StatsError::TooFewPoints {
            needed: 3,
            got: series.len(),
        });
    }
    if let Some(&(h, value)) = series.iter().find(|(h, e)| !(*e > 0.0) || !(*h > 0.0)) {
        return Err(StatsError::NonPositive { h, value });
    }
    let mut points = series.to_vec();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(ErrorSeries {
        points,
        fitted_slope: slope,
        fitted_intercept: intercept,
        r_squared,
    })
}
