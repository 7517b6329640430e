//! Weak-convergence toolkit for overdamped Langevin dynamics.
//!
//! * [`model`]: potentials, forces and (periodic) domains
//! * [`integrators`]: Euler-Maruyama, the non-Markovian scheme and stochastic Heun
//! * [`ou_oracle`]: closed-form moments and error coefficients for the Ornstein-Uhlenbeck process
//! * [`statistics`]: histograms, distribution errors, RDFs and order fits

pub mod integrators;
pub mod model;
pub mod noise;
pub mod ou_oracle;
pub mod quadrature;
pub mod statistics;

pub use integrators::{
    run_ensemble, run_trajectory, EnsembleReport, Merge, Observer, RunSpec, SchemeId, StepError,
    Stepper, StepperState,
};
pub use model::{Configuration, Domain, ModelError, PotentialSpec};
pub use noise::NoiseStream;
pub use ou_oracle::{ObservableId, OUParams, OracleError};
pub use statistics::{
    fit_order, kl_error, l2_error, BinLayout, ErrorSeries, Histogram, HistogramDensity,
    RdfEstimate, StatsError,
};
