//! One-step schemes for overdamped Langevin dynamics and the trajectory / ensemble runners.
//!
//! * Euler-Maruyama: `X' = X + h a(X) + sigma sqrt(h) xi'`
//! * non-Markovian: `X' = X + h a(X) + sigma sqrt(h) (xi + xi') / 2`, where `xi` is the
//!   previous step's fresh noise
//! * stochastic Heun: predictor `Y = X + h a(X) + sigma sqrt(h) xi'`, then
//!   `X' = X + h (a(Y) + a(X)) / 2 + sigma sqrt(h) xi'`
//!
//! All positions on periodic domains are wrapped after the update; the Heun predictor is not.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Configuration, Domain, ModelError, PotentialSpec};
use crate::noise::NoiseStream;

/// Default `|x|_inf` above which a trajectory counts as exploded.
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;

/// Restarts allowed per trajectory before the ensemble gives up on it.
pub const MAX_RESTARTS: u32 = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("trajectory exploded at step {step}: |x|_inf = {max_abs:e}")]
    Exploded { step: u64, max_abs: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("non-Markovian step needs the previous noise vector")]
    MissingPreviousNoise,
    #[error("noise vector has length {got}, expected {expected}")]
    NoiseLength { expected: usize, got: usize },
    #[error("invalid run parameters: {0}")]
    InvalidRun(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    EulerMaruyama,
    NonMarkovian,
    Heun,
}

impl SchemeId {
    pub const ALL: [SchemeId; 3] = [SchemeId::EulerMaruyama, SchemeId::NonMarkovian, SchemeId::Heun];

    pub fn force_evals_per_step(self) -> u64 {
        match self {
            SchemeId::EulerMaruyama | SchemeId::NonMarkovian => 1,
            SchemeId::Heun => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::EulerMaruyama => "em",
            SchemeId::NonMarkovian => "lm",
            SchemeId::Heun => "heun",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "em" | "euler" | "euler-maruyama" => Ok(SchemeId::EulerMaruyama),
            "lm" | "non-markovian" | "nonmarkovian" => Ok(SchemeId::NonMarkovian),
            "heun" => Ok(SchemeId::Heun),
            other => Err(format!("unknown scheme `{other}` (expected em, lm or heun)")),
        }
    }
}

/// Parameters of a single trajectory run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub h: f64,
    pub sigma: f64,
    pub n_steps: u64,
    pub equilibration_steps: u64,
    pub blowup_threshold: f64,
    pub seed: u64,
}

impl RunSpec {
    pub fn new(h: f64, sigma: f64, n_steps: u64, seed: u64) -> Self {
        RunSpec {
            h,
            sigma,
            n_steps,
            equilibration_steps: 0,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            seed,
        }
    }

    pub fn with_equilibration(mut self, steps: u64) -> Self {
        self.equilibration_steps = steps;
        self
    }

    pub fn validate(&self) -> Result<(), StepError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(StepError::InvalidRun(format!("h must be positive, got {}", self.h)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(StepError::InvalidRun(format!(
                "sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(StepError::InvalidRun("blow-up threshold must be positive".into()));
        }
        Ok(())
    }
}

/// Integrator-owned state of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StepperState {
    pub x: Configuration,
    /// Previous fresh noise vector; present only for the non-Markovian scheme.
    pub xi_prev: Option<Vec<f64>>,
    pub steps_taken: u64,
    pub force_evals: u64,
}

impl StepperState {
    pub fn new(x: Configuration) -> Self {
        StepperState {
            x,
            xi_prev: None,
            steps_taken: 0,
            force_evals: 0,
        }
    }

    pub fn with_previous_noise(x: Configuration, xi_prev: Vec<f64>) -> Self {
        StepperState {
            xi_prev: Some(xi_prev),
            ..StepperState::new(x)
        }
    }
}

/// Scratch buffers plus the fixed parameters of a run; reused across steps.
#[derive(Debug, Clone)]
pub struct Stepper {
    spec: PotentialSpec,
    domain: Domain,
    h: f64,
    noise_scale: f64,
    blowup_threshold: f64,
    drift: Vec<f64>,
    predictor: Vec<f64>,
    drift_pred: Vec<f64>,
    next: Vec<f64>,
}

impl Stepper {
    pub fn new(spec: PotentialSpec, domain: Domain, run: &RunSpec) -> Result<Self, StepError> {
        run.validate()?;
        spec.check_domain(&domain)?;
        let d = domain.dim();
        Ok(Stepper {
            spec,
            domain,
            h: run.h,
            noise_scale: run.sigma * run.h.sqrt(),
            blowup_threshold: run.blowup_threshold,
            drift: vec![0.0; d],
            predictor: vec![0.0; d],
            drift_pred: vec![0.0; d],
            next: vec![0.0; d],
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn check_state(&self, state: &StepperState, noise: &[f64]) -> Result<(), StepError> {
        if state.x.domain() != self.domain {
            return Err(ModelError::IncompatibleDomain {
                potential: format!("{:?}", self.spec),
                domain: state.x.domain().describe(),
            }
            .into());
        }
        if noise.len() != self.dim() {
            return Err(StepError::NoiseLength {
                expected: self.dim(),
                got: noise.len(),
            });
        }
        Ok(())
    }

    pub fn step(
        &mut self,
        scheme: SchemeId,
        state: &mut StepperState,
        noise: &[f64],
    ) -> Result<(), StepError> {
        match scheme {
            SchemeId::EulerMaruyama => self.em_step(state, noise),
            SchemeId::NonMarkovian => self.lm_step(state, noise),
            SchemeId::Heun => self.heun_step(state, noise),
        }
    }

    pub fn em_step(&mut self, state: &mut StepperState, noise: &[f64]) -> Result<(), StepError> {
        self.check_state(state, noise)?;
        let x = state.x.position();
        self.spec.force_into(x, &mut self.drift)?;
        for i in 0..x.len() {
            self.next[i] = x[i] + self.h * self.drift[i] + self.noise_scale * noise[i];
        }
        self.commit(state, 1)
    }

    pub fn lm_step(&mut self, state: &mut StepperState, fresh: &[f64]) -> Result<(), StepError> {
        self.check_state(state, fresh)?;
        let prev = state.xi_prev.as_ref().ok_or(StepError::MissingPreviousNoise)?;
        if prev.len() != fresh.len() {
            return Err(StepError::NoiseLength {
                expected: fresh.len(),
                got: prev.len(),
            });
        }
        let x = state.x.position();
        self.spec.force_into(x, &mut self.drift)?;
        let half = 0.5 * self.noise_scale;
        for i in 0..x.len() {
            self.next[i] = x[i] + self.h * self.drift[i] + half * (prev[i] + fresh[i]);
        }
        self.commit(state, 1)?;
        if let Some(p) = state.xi_prev.as_mut() {
            p.copy_from_slice(fresh);
        }
        Ok(())
    }

    pub fn heun_step(&mut self, state: &mut StepperState, noise: &[f64]) -> Result<(), StepError> {
        self.check_state(state, noise)?;
        let x = state.x.position();
        self.spec.force_into(x, &mut self.drift)?;
        for i in 0..x.len() {
            self.predictor[i] = x[i] + self.h * self.drift[i] + self.noise_scale * noise[i];
        }
        if let Err(e) = self.spec.force_into(&self.predictor, &mut self.drift_pred) {
            // the predictor evaluation still counts toward the cost ledger
            state.force_evals += 1;
            return Err(e.into());
        }
        let half_h = 0.5 * self.h;
        for i in 0..x.len() {
            self.next[i] = x[i]
                + half_h * (self.drift_pred[i] + self.drift[i])
                + self.noise_scale * noise[i];
        }
        self.commit(state, 2)
    }

    fn commit(&mut self, state: &mut StepperState, evals: u64) -> Result<(), StepError> {
        state.force_evals += evals;
        let mut max_abs = 0.0f64;
        let mut finite = true;
        for v in &self.next {
            finite &= v.is_finite();
            max_abs = max_abs.max(v.abs());
        }
        let bounded = matches!(self.domain, Domain::PeriodicInterval { .. })
            || max_abs <= self.blowup_threshold;
        if !finite || !bounded {
            return Err(StepError::Exploded {
                step: state.steps_taken,
                max_abs: if finite { max_abs } else { f64::INFINITY },
            });
        }
        self.domain.wrap_in_place(&mut self.next);
        state.x.position_mut().copy_from_slice(&self.next);
        state.steps_taken += 1;
        Ok(())
    }
}

fn one_shot(
    scheme: SchemeId,
    mut state: StepperState,
    spec: &PotentialSpec,
    run: &RunSpec,
    noise: &[f64],
) -> Result<StepperState, StepError> {
    let mut stepper = Stepper::new(*spec, state.x.domain(), run)?;
    stepper.step(scheme, &mut state, noise)?;
    Ok(state)
}

/// Single Euler-Maruyama step returning the new state.
pub fn em_step(
    state: StepperState,
    spec: &PotentialSpec,
    run: &RunSpec,
    noise: &[f64],
) -> Result<StepperState, StepError> {
    one_shot(SchemeId::EulerMaruyama, state, spec, run, noise)
}

/// Single non-Markovian step; `state.xi_prev` must be present and is replaced by `fresh`.
pub fn lm_step(
    state: StepperState,
    spec: &PotentialSpec,
    run: &RunSpec,
    fresh: &[f64],
) -> Result<StepperState, StepError> {
    one_shot(SchemeId::NonMarkovian, state, spec, run, fresh)
}

/// Single stochastic Heun step (two force evaluations).
pub fn heun_step(
    state: StepperState,
    spec: &PotentialSpec,
    run: &RunSpec,
    noise: &[f64],
) -> Result<StepperState, StepError> {
    one_shot(SchemeId::Heun, state, spec, run, noise)
}

/// Receives every post-equilibration state of a trajectory.
pub trait Observer {
    /// `step` is the index `k` of the state `X_k` (the initial state is `k = 0`).
    fn observe(&mut self, step: u64, x: &[f64]);
}

/// Associative, commutative combination of accumulators.
pub trait Merge {
    fn merge(&mut self, other: &Self);
    /// Returns the accumulator to its empty state.
    fn reset(&mut self);
}

/// Observer that ignores everything.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NullObserver;

impl Observer for NullObserver {
    fn observe(&mut self, _step: u64, _x: &[f64]) {}
}

impl Merge for NullObserver {
    fn merge(&mut self, _other: &Self) {}
    fn reset(&mut self) {}
}

/// Why a trajectory was abandoned.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub step: u64,
    pub error: StepError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryReport {
    pub final_state: StepperState,
    pub rejected: Option<Rejection>,
}

impl TrajectoryReport {
    pub fn is_rejected(&self) -> bool {
        self.rejected.is_some()
    }
}

/// Runs `run.n_steps` steps from `initial`, feeding states `X_k` with
/// `k > run.equilibration_steps` to `observer`.
///
/// Noise for step `k` (which produces `X_{k+1}`) is read at address
/// `(trajectory_index, k, component)`; the non-Markovian scheme's initial noise is read at
/// step `-1`. Setup errors (bad parameters, incompatible domain) are returned as `Err`;
/// failures during the run are reported as a rejection.
pub fn run_trajectory<O: Observer + ?Sized>(
    scheme: SchemeId,
    spec: &PotentialSpec,
    run: &RunSpec,
    initial: &Configuration,
    trajectory_index: u64,
    observer: &mut O,
) -> Result<TrajectoryReport, StepError> {
    let domain = initial.domain();
    let mut stepper = Stepper::new(*spec, domain, run)?;
    let stream = NoiseStream::new(run.seed, domain.dim());
    let mut noise = stream.trajectory(trajectory_index);
    let mut xi = vec![0.0; domain.dim()];

    let mut state = StepperState::new(initial.clone());
    if scheme == SchemeId::NonMarkovian {
        noise.fill(-1, &mut xi);
        state.xi_prev = Some(xi.clone());
    }

    for k in 0..run.n_steps {
        noise.fill(k as i64, &mut xi);
        if let Err(error) = stepper.step(scheme, &mut state, &xi) {
            return Ok(TrajectoryReport {
                final_state: state,
                rejected: Some(Rejection { step: k, error }),
            });
        }
        if k + 1 > run.equilibration_steps {
            observer.observe(k + 1, state.x.position());
        }
    }
    Ok(TrajectoryReport {
        final_state: state,
        rejected: None,
    })
}

/// Trajectory index used for the `attempt`-th restart of trajectory `index`.
pub fn restart_index(index: u64, attempt: u32) -> u64 {
    index.wrapping_add((attempt as u64) << 40)
}

/// Merged outcome of a batch of independent trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport<O> {
    pub observer: O,
    pub completed: u64,
    /// Attempts thrown away (and restarted) because of explosions or singularities.
    pub rejected: u64,
    /// Trajectories that were still failing after `MAX_RESTARTS` restarts.
    pub abandoned: u64,
    /// Force evaluations over all attempts, including rejected ones.
    pub force_evals: u64,
}

/// Number of trajectories handled by one unit of parallel work. Fixed, so the partition does
/// not depend on the worker count.
const CHUNK: u64 = 64;

/// Runs trajectories `first_index .. first_index + count` in parallel on the current rayon
/// pool. Each trajectory uses a fresh observer from `make_observer`; completed trajectories
/// are merged in index order, rejected ones are restarted from `initial(index)` with the
/// noise of `restart_index(index, attempt)`.
pub fn run_ensemble<O, I, F>(
    scheme: SchemeId,
    spec: &PotentialSpec,
    run: &RunSpec,
    first_index: u64,
    count: u64,
    initial: I,
    make_observer: F,
) -> Result<EnsembleReport<O>, StepError>
where
    O: Observer + Merge + Send,
    I: Fn(u64) -> Configuration + Sync,
    F: Fn() -> O + Sync,
{
    run.validate()?;
    let n_chunks = count.div_ceil(CHUNK);
    let partials: Vec<Result<EnsembleReport<O>, StepError>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = first_index + c * CHUNK;
            let hi = (lo + CHUNK).min(first_index + count);
            let mut acc = EnsembleReport {
                observer: make_observer(),
                completed: 0,
                rejected: 0,
                abandoned: 0,
                force_evals: 0,
            };
            let mut scratch = make_observer();
            for index in lo..hi {
                let start = initial(index);
                let mut done = false;
                for attempt in 0..=MAX_RESTARTS {
                    scratch.reset();
                    let report = run_trajectory(
                        scheme,
                        spec,
                        run,
                        &start,
                        restart_index(index, attempt),
                        &mut scratch,
                    )?;
                    acc.force_evals += report.final_state.force_evals;
                    if report.is_rejected() {
                        acc.rejected += 1;
                    } else {
                        acc.observer.merge(&scratch);
                        acc.completed += 1;
                        done = true;
                        break;
                    }
                }
                if !done {
                    acc.abandoned += 1;
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total: Option<EnsembleReport<O>> = None;
    for p in partials {
        let p = p?;
        match total.as_mut() {
            None => total = Some(p),
            Some(t) => {
                t.observer.merge(&p.observer);
                t.completed += p.completed;
                t.rejected += p.rejected;
                t.abandoned += p.abandoned;
                t.force_evals += p.force_evals;
            }
        }
    }
    Ok(total.unwrap_or_else(|| EnsembleReport {
        observer: make_observer(),
        completed: 0,
        rejected: 0,
        abandoned: 0,
        force_evals: 0,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line(x: f64) -> Configuration {
        Configuration::new(Domain::unbounded(1).unwrap(), vec![x]).unwrap()
    }

    const OU: PotentialSpec = PotentialSpec::Quadratic { alpha: 1.0 };

    #[test]
    fn em_examples() {
        let run = RunSpec::new(0.1, 0.7, 1, 0);
        let s = em_step(StepperState::new(line(1.0)), &OU, &run, &[0.0]).unwrap();
        assert_abs_diff_eq!(s.x.position()[0], 0.9, epsilon = 1e-15);
        assert_eq!(s.force_evals, 1);

        let run = RunSpec::new(1.0, 1.0, 1, 0);
        let s = em_step(StepperState::new(line(0.0)), &PotentialSpec::Flat, &run, &[1.5]).unwrap();
        assert_eq!(s.x.position()[0], 1.5);

        let run = RunSpec::new(0.1, 2f64.sqrt(), 1, 0);
        let s = em_step(StepperState::new(line(0.0)), &OU, &run, &[1.0]).unwrap();
        assert_abs_diff_eq!(s.x.position()[0], 0.2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn lm_examples() {
        let run = RunSpec::new(0.1, 2f64.sqrt(), 1, 0);
        let xi = [0.37];
        let lm = lm_step(
            StepperState::with_previous_noise(line(0.4), xi.to_vec()),
            &OU,
            &run,
            &xi,
        )
        .unwrap();
        let em = em_step(StepperState::new(line(0.4)), &OU, &run, &xi).unwrap();
        assert_eq!(lm.x.position(), em.x.position());
        assert_eq!(lm.xi_prev.as_deref(), Some(&xi[..]));

        let s = lm_step(
            StepperState::with_previous_noise(line(0.0), vec![1.0]),
            &OU,
            &run,
            &[-1.0],
        )
        .unwrap();
        assert_eq!(s.x.position()[0], 0.0);
        assert_eq!(s.xi_prev, Some(vec![-1.0]));

        assert_eq!(
            lm_step(StepperState::new(line(0.0)), &OU, &run, &[0.0]),
            Err(StepError::MissingPreviousNoise)
        );
    }

    #[test]
    fn lm_one_step_variance() {
        // Var(X_1) = sigma^2 h / 2 from a deterministic start
        let (h, sigma) = (0.1, 1.3);
        let run = RunSpec::new(h, sigma, 1, 77);
        let n = 200_000u64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for t in 0..n {
            let r = run_trajectory(SchemeId::NonMarkovian, &OU, &run, &line(0.5), t, &mut NullObserver)
                .unwrap();
            let x = r.final_state.x.position()[0];
            s1 += x;
            s2 += x * x;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        let expected = sigma * sigma * h / 2.0;
        let se = expected * (2.0 / n as f64).sqrt();
        assert!((var - expected).abs() < 5.0 * se, "var {var} vs {expected}");
        assert_abs_diff_eq!(mean, 0.5 * 0.9, epsilon = 5.0 * (expected / n as f64).sqrt());
    }

    #[test]
    fn heun_examples() {
        let run = RunSpec::new(0.1, 1.0, 1, 0);
        let s = heun_step(StepperState::new(line(1.0)), &OU, &run, &[0.0]).unwrap();
        assert_abs_diff_eq!(s.x.position()[0], 0.905, epsilon = 1e-15);
        assert_eq!(s.force_evals, 2);

        // zero drift: identical to Euler-Maruyama
        for &z in &[-2.0, 0.3, 1.7] {
            let a = heun_step(StepperState::new(line(0.2)), &PotentialSpec::Flat, &run, &[z]).unwrap();
            let b = em_step(StepperState::new(line(0.2)), &PotentialSpec::Flat, &run, &[z]).unwrap();
            assert_eq!(a.x.position(), b.x.position());
        }

        // noise-free reduction to the explicit trapezoidal (RK2) rule on the circle
        let run = RunSpec::new(0.3, 0.0, 1, 0);
        let x0 = 1.1f64;
        let c = Configuration::new(Domain::circle(), vec![x0]).unwrap();
        let s = heun_step(StepperState::new(c), &PotentialSpec::Cosine, &run, &[5.0]).unwrap();
        let pred = x0 + 0.3 * x0.sin();
        let expected = x0 + 0.15 * (pred.sin() + x0.sin());
        assert_abs_diff_eq!(s.x.position()[0], expected, epsilon = 1e-15);
    }

    #[test]
    fn explosion_is_reported() {
        let run = RunSpec {
            blowup_threshold: 10.0,
            ..RunSpec::new(0.1, 1.0, 1, 0)
        };
        let err = em_step(StepperState::new(line(0.0)), &PotentialSpec::Flat, &run, &[1e3]).unwrap_err();
        assert!(matches!(err, StepError::Exploded { step: 0, .. }));

        // unstable stepsize blows up and is reported as a rejection, not a panic
        let run = RunSpec {
            blowup_threshold: 1e6,
            ..RunSpec::new(3.0, 0.0, 100, 0)
        };
        let r = run_trajectory(SchemeId::EulerMaruyama, &OU, &run, &line(1.0), 0, &mut NullObserver)
            .unwrap();
        let rej = r.rejected.unwrap();
        assert!(rej.step > 5 && rej.step < 100);
    }

    #[test]
    fn noise_length_checked() {
        let run = RunSpec::new(0.1, 1.0, 1, 0);
        assert!(matches!(
            em_step(StepperState::new(line(0.0)), &OU, &run, &[0.0, 1.0]),
            Err(StepError::NoiseLength { .. })
        ));
    }

    struct Recorder(Vec<(u64, f64)>);
    impl Observer for Recorder {
        fn observe(&mut self, step: u64, x: &[f64]) {
            self.0.push((step, x[0]));
        }
    }

    #[test]
    fn zero_steps_and_equilibration() {
        let run = RunSpec::new(0.1, 1.0, 0, 3);
        let mut rec = Recorder(vec![]);
        let r = run_trajectory(SchemeId::Heun, &OU, &run, &line(0.25), 0, &mut rec).unwrap();
        assert_eq!(r.final_state.x.position()[0], 0.25);
        assert!(rec.0.is_empty());

        let run = RunSpec::new(0.1, 1.0, 10, 3).with_equilibration(7);
        let mut rec = Recorder(vec![]);
        run_trajectory(SchemeId::EulerMaruyama, &OU, &run, &line(0.25), 0, &mut rec).unwrap();
        assert_eq!(rec.0.iter().map(|p| p.0).collect::<Vec<_>>(), vec![8, 9, 10]);
    }

    #[test]
    fn cost_accounting() {
        for scheme in SchemeId::ALL {
            let run = RunSpec::new(0.05, 1.0, 123, 1);
            let r = run_trajectory(scheme, &OU, &run, &line(0.0), 4, &mut NullObserver).unwrap();
            assert_eq!(r.final_state.steps_taken, 123);
            assert_eq!(r.final_state.force_evals, 123 * scheme.force_evals_per_step());
        }
    }

    #[test]
    fn degenerate_dynamics_is_constant() {
        for scheme in SchemeId::ALL {
            let run = RunSpec::new(0.2, 0.0, 50, 1);
            let c = Configuration::new(Domain::unbounded(3).unwrap(), vec![0.1, -2.0, 3.0]).unwrap();
            let r = run_trajectory(scheme, &PotentialSpec::Flat, &run, &c, 0, &mut NullObserver).unwrap();
            assert_eq!(r.final_state.x.position(), c.position());
        }
    }

    #[test]
    fn schemes_share_noise_addresses() {
        // on flat potentials all three schemes use the same per-step increments, so EM and Heun
        // paths coincide
        let run = RunSpec::new(0.1, 1.0, 40, 99);
        let a = run_trajectory(SchemeId::EulerMaruyama, &PotentialSpec::Flat, &run, &line(0.0), 5, &mut NullObserver).unwrap();
        let b = run_trajectory(SchemeId::Heun, &PotentialSpec::Flat, &run, &line(0.0), 5, &mut NullObserver).unwrap();
        assert_eq!(a.final_state.x, b.final_state.x);
    }

    #[test]
    fn heun_predictor_on_circle_not_wrapped() {
        // a predictor leaving [0, 2pi) must give the same result as an unwrapped smooth update
        let run = RunSpec::new(0.5, 1.0, 1, 0);
        let x0 = 6.2;
        let c = Configuration::new(Domain::circle(), vec![x0]).unwrap();
        let s = heun_step(StepperState::new(c), &PotentialSpec::Cosine, &run, &[1.0]).unwrap();
        let pred = x0 + 0.5 * x0.sin() + 0.5f64.sqrt();
        let raw = x0 + 0.25 * (pred.sin() + x0.sin()) + 0.5f64.sqrt();
        assert_abs_diff_eq!(s.x.position()[0], raw.rem_euclid(std::f64::consts::TAU), epsilon = 1e-14);
    }
}
