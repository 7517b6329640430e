//! Closed-form ground truth for the Ornstein-Uhlenbeck case `a(x) = -alpha x`.
//!
//! Continuous and per-scheme discrete moments, the backward Kolmogorov solution
//! `u(t, x) = E phi(X_{t,x}(tau))` for `phi(x) = x` and `phi(x) = x^2`, the leading one-step
//! error coefficients of the non-Markovian and Euler-Maruyama schemes, and 1-D Gibbs averages
//! by quadrature.
//!
//! Error coefficients follow the sign convention
//! `E phi(X(tau)) - E phi(X_N) = C0(tau, x0) h + O(h^2)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::integrators::SchemeId;
use crate::model::PotentialSpec;
use crate::quadrature::{adaptive_gk, gauss_hermite, periodic_trapezoid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("stepsize outside the stability domain: alpha * h = {0} (need < 1)")]
    Unstable(f64),
    #[error("evaluation time {t} lies after the terminal time {tau}")]
    AfterTerminal { t: f64, tau: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no invariant density for {0}")]
    NotNormalizable(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OUParams {
    pub alpha: f64,
    pub sigma: f64,
    pub x0: f64,
}

impl OUParams {
    pub fn new(alpha: f64, sigma: f64, x0: f64) -> Result<Self, OracleError> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(OracleError::InvalidParams(format!(
                "need alpha > 0 and sigma > 0, got {alpha} / {sigma}"
            )));
        }
        Ok(OUParams { alpha, sigma, x0 })
    }

    /// Stationary variance `sigma^2 / (2 alpha)`.
    pub fn gibbs_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.alpha)
    }

    pub fn with_x0(self, x0: f64) -> Self {
        OUParams { x0, ..self }
    }

    /// Errors unless `alpha h < 1`.
    pub fn check_step(&self, h: f64) -> Result<(), OracleError> {
        if !(h > 0.0) {
            return Err(OracleError::InvalidParams(format!("h must be positive, got {h}")));
        }
        let ah = self.alpha * h;
        if ah >= 1.0 {
            return Err(OracleError::Unstable(ah));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObservableId {
    /// `phi(x) = x`
    Identity,
    /// `phi(x) = x^2`
    Square,
}

impl ObservableId {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            ObservableId::Identity => x,
            ObservableId::Square => x * x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    pub fn expectation(&self, obs: ObservableId) -> f64 {
        match obs {
            ObservableId::Identity => self.mean,
            ObservableId::Square => self.mean * self.mean + self.variance,
        }
    }
}

/// Gaussian transition law of the OU process started at `x0`.
pub fn ou_exact_moments(p: &OUParams, t: f64) -> Moments {
    let t = t.max(0.0);
    if t.is_infinite() {
        return Moments {
            mean: 0.0,
            variance: p.gibbs_variance(),
        };
    }
    Moments {
        mean: p.x0 * (-p.alpha * t).exp(),
        variance: -p.gibbs_variance() * (-2.0 * p.alpha * t).exp_m1(),
    }
}

/// `(1 - alpha h)^n` computed through `ln_1p`.
fn contraction_pow(alpha: f64, h: f64, n: f64) -> f64 {
    (n * (-alpha * h).ln_1p()).exp()
}

/// Exact law of `X_N` for the Euler-Maruyama recursion `X' = (1 - alpha h) X + sigma sqrt(h) xi`.
///
/// Mean `x0 (1 - alpha h)^N`, variance `sigma^2 (1 - (1 - alpha h)^{2N}) / (alpha (2 - alpha h))`.
pub fn em_discrete_moments(p: &OUParams, h: f64, n: u64) -> Result<Moments, OracleError> {
    p.check_step(h)?;
    let c2n = contraction_pow(p.alpha, h, 2.0 * n as f64);
    Ok(Moments {
        mean: p.x0 * contraction_pow(p.alpha, h, n as f64),
        variance: em_stationary_variance(p, h)? * (1.0 - c2n),
    })
}

/// `lim_{N -> inf}` of the Euler-Maruyama variance: `sigma^2 / (alpha (2 - alpha h))`.
pub fn em_stationary_variance(p: &OUParams, h: f64) -> Result<f64, OracleError> {
    p.check_step(h)?;
    Ok(p.sigma * p.sigma / (p.alpha * (2.0 - p.alpha * h)))
}

/// Exact law of `X_N` for the non-Markovian scheme started at a deterministic `x0` with
/// `xi_0 ~ N(0, 1)`: mean `x0 (1 - alpha h)^N`, variance
/// `sigma^2 / (2 alpha) [1 - (1 - alpha h)^{2N} / (1 - alpha h)]` for `N >= 1`.
pub fn lm_discrete_moments(p: &OUParams, h: f64, n: u64) -> Result<Moments, OracleError> {
    p.check_step(h)?;
    let mean = p.x0 * contraction_pow(p.alpha, h, n as f64);
    if n == 0 {
        return Ok(Moments { mean, variance: 0.0 });
    }
    let c = contraction_pow(p.alpha, h, 2.0 * n as f64 - 1.0);
    Ok(Moments {
        mean,
        variance: p.gibbs_variance() * (1.0 - c),
    })
}

/// Amplification factor and noise coefficient of stochastic Heun on OU:
/// `X' = g X + b xi` with `g = 1 - alpha h + (alpha h)^2 / 2`, `b = sigma sqrt(h) (1 - alpha h / 2)`.
fn heun_coefficients(p: &OUParams, h: f64) -> (f64, f64) {
    let ah = p.alpha * h;
    (1.0 - ah + 0.5 * ah * ah, p.sigma * h.sqrt() * (1.0 - 0.5 * ah))
}

/// Exact law of `X_N` for stochastic Heun on OU.
pub fn heun_discrete_moments(p: &OUParams, h: f64, n: u64) -> Result<Moments, OracleError> {
    p.check_step(h)?;
    let (g, b) = heun_coefficients(p, h);
    let g2n = g.powf(2.0 * n as f64);
    Ok(Moments {
        mean: p.x0 * g.powf(n as f64),
        variance: b * b * (1.0 - g2n) / (1.0 - g * g),
    })
}

pub fn discrete_moments(
    scheme: SchemeId,
    p: &OUParams,
    h: f64,
    n: u64,
) -> Result<Moments, OracleError> {
    match scheme {
        SchemeId::EulerMaruyama => em_discrete_moments(p, h, n),
        SchemeId::NonMarkovian => lm_discrete_moments(p, h, n),
        SchemeId::Heun => heun_discrete_moments(p, h, n),
    }
}

/// Weak error `E phi(X(N h)) - E phi(X_N)` from the closed forms, arranged so that no
/// difference of O(1) quantities is formed (stays accurate when the error is tiny).
pub fn weak_error(
    scheme: SchemeId,
    obs: ObservableId,
    p: &OUParams,
    h: f64,
    n: u64,
) -> Result<f64, OracleError> {
    p.check_step(h)?;
    let (a, s_inf, x0) = (p.alpha, p.gibbs_variance(), p.x0);
    let tau = n as f64 * h;
    let nf = n as f64;
    let log_amp = match scheme {
        SchemeId::EulerMaruyama | SchemeId::NonMarkovian => (-a * h).ln_1p(),
        SchemeId::Heun => {
            let ah = a * h;
            (-ah + 0.5 * ah * ah).ln_1p()
        }
    };
    // e^{-k alpha tau} - amp^{m}, without cancellation
    let gap = |k: f64, m: f64| -(-k * a * tau).exp() * (m * log_amp + k * a * tau).exp_m1();
    match obs {
        ObservableId::Identity => Ok(x0 * gap(1.0, nf)),
        ObservableId::Square => {
            match scheme {
                SchemeId::EulerMaruyama => {
                    let amp2n = (2.0 * nf * log_amp).exp();
                    let dv = -p.sigma * p.sigma * h / (2.0 * (2.0 - a * h));
                    Ok((x0 * x0 - s_inf) * gap(2.0, 2.0 * nf) + dv * (1.0 - amp2n))
                }
                SchemeId::NonMarkovian => {
                    if n == 0 {
                        return Ok(0.0);
                    }
                    // amp^{2N-1} - e^{-2 alpha tau}
                    let tail = -gap(2.0, 2.0 * nf - 1.0);
                    Ok(x0 * x0 * gap(2.0, 2.0 * nf) + s_inf * tail)
                }
                SchemeId::Heun => {
                    let (g, b) = heun_coefficients(p, h);
                    let v_inf = b * b / (1.0 - g * g);
                    let amp2n = (2.0 * nf * log_amp).exp();
                    Ok((x0 * x0 - s_inf) * gap(2.0, 2.0 * nf) + (s_inf - v_inf) * (1.0 - amp2n))
                }
            }
        }
    }
}

/// `u` and its first four spatial derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub u: f64,
    pub ux: f64,
    pub uxx: f64,
    pub uxxx: f64,
    pub uxxxx: f64,
}

/// Drift `a` and its first two derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftJet {
    pub a: f64,
    pub da: f64,
    pub d2a: f64,
}

impl DriftJet {
    pub fn ou(alpha: f64, x: f64) -> Self {
        DriftJet {
            a: -alpha * x,
            da: -alpha,
            d2a: 0.0,
        }
    }
}

/// Closed-form backward Kolmogorov solution for the OU process with terminal data `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackwardSolution {
    pub params: OUParams,
    pub tau: f64,
    pub observable: ObservableId,
}

pub fn backward_solution(
    p: &OUParams,
    tau: f64,
    obs: ObservableId,
) -> Result<BackwardSolution, OracleError> {
    if !(tau > 0.0) {
        return Err(OracleError::InvalidParams(format!("tau must be positive, got {tau}")));
    }
    Ok(BackwardSolution {
        params: *p,
        tau,
        observable: obs,
    })
}

impl BackwardSolution {
    pub fn eval(&self, t: f64, x: f64) -> Result<Derivatives, OracleError> {
        if t > self.tau {
            return Err(OracleError::AfterTerminal { t, tau: self.tau });
        }
        let a = self.params.alpha;
        let s = self.tau - t;
        Ok(match self.observable {
            ObservableId::Identity => {
                let e = (-a * s).exp();
                Derivatives {
                    u: x * e,
                    ux: e,
                    uxx: 0.0,
                    uxxx: 0.0,
                    uxxxx: 0.0,
                }
            }
            ObservableId::Square => {
                let e = (-2.0 * a * s).exp();
                Derivatives {
                    u: x * x * e - self.params.gibbs_variance() * (-2.0 * a * s).exp_m1(),
                    ux: 2.0 * x * e,
                    uxx: 2.0 * e,
                    uxxx: 0.0,
                    uxxxx: 0.0,
                }
            }
        })
    }

    pub fn u(&self, t: f64, x: f64) -> Result<f64, OracleError> {
        Ok(self.eval(t, x)?.u)
    }
}

/// Leading one-step error coefficient of the non-Markovian scheme in 1-D:
/// `B0 = [a a' u_x + (sigma^2/2) a' u_xx + (sigma^2/2) a'' u_x] / 2`.
pub fn b0_lm_from_jets(drift: DriftJet, d: Derivatives, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    0.5 * (drift.a * drift.da * d.ux + 0.5 * s2 * drift.da * d.uxx + 0.5 * s2 * drift.d2a * d.ux)
}

/// Leading one-step error coefficient of Euler-Maruyama in 1-D:
/// `B0E = [a a' u_x + (sigma^2/2) a'' u_x + (sigma^2/2) a u_xxx + sigma^2 a' u_xx
///        + (sigma^4/6) u_xxxx] / 2`.
pub fn b0_euler_from_jets(drift: DriftJet, d: Derivatives, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    0.5 * (drift.a * drift.da * d.ux
        + 0.5 * s2 * drift.d2a * d.ux
        + 0.5 * s2 * drift.a * d.uxxx
        + s2 * drift.da * d.uxx
        + s2 * s2 / 6.0 * d.uxxxx)
}

pub fn b0_lm(p: &OUParams, sol: &BackwardSolution, t: f64, x: f64) -> Result<f64, OracleError> {
    let d = sol.eval(t, x)?;
    Ok(b0_lm_from_jets(DriftJet::ou(p.alpha, x), d, p.sigma))
}

pub fn b0_euler(p: &OUParams, sol: &BackwardSolution, t: f64, x: f64) -> Result<f64, OracleError> {
    let d = sol.eval(t, x)?;
    Ok(b0_euler_from_jets(DriftJet::ou(p.alpha, x), d, p.sigma))
}

/// `C0(tau, x0) = int_0^tau E B0(t, X_{x0}(t)) dt` for the non-Markovian scheme, in closed form.
pub fn c0_lm(p: &OUParams, tau: f64, obs: ObservableId) -> f64 {
    let a = p.alpha;
    match obs {
        ObservableId::Identity => 0.5 * a * a * p.x0 * tau * (-a * tau).exp(),
        ObservableId::Square => {
            a * tau * (-2.0 * a * tau).exp() * (a * p.x0 * p.x0 - 0.5 * p.sigma * p.sigma)
        }
    }
}

/// `int_0^tau E B0E(t, X_{x0}(t)) dt` for Euler-Maruyama, in closed form.
pub fn c0_euler(p: &OUParams, tau: f64, obs: ObservableId) -> f64 {
    match obs {
        ObservableId::Identity => c0_lm(p, tau, obs),
        ObservableId::Square => {
            let s2 = p.sigma * p.sigma;
            c0_lm(p, tau, obs) + 0.25 * s2 * (-2.0 * p.alpha * tau).exp_m1()
        }
    }
}

/// Quadrature settings for Gibbs averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    /// Trapezoid nodes on one period for periodic potentials.
    pub periodic_nodes: usize,
    /// Gauss-Hermite nodes for the quadratic potential.
    pub hermite_nodes: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            periodic_nodes: 2048,
            hermite_nodes: 200,
        }
    }
}

/// `int f rho_beta` with `rho_beta ~ exp(-beta V)` normalized, for 1-D potentials.
pub fn invariant_average_1d<F: Fn(f64) -> f64>(
    f: F,
    spec: &PotentialSpec,
    beta: f64,
    quad: &QuadratureSettings,
) -> Result<f64, OracleError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(OracleError::InvalidParams(format!("beta must be positive, got {beta}")));
    }
    match *spec {
        PotentialSpec::Quadratic { alpha } if alpha > 0.0 => {
            // x = y / sqrt(beta alpha / 2) maps exp(-beta alpha x^2 / 2) to exp(-y^2)
            let scale = (2.0 / (beta * alpha)).sqrt();
            let (y, w) = gauss_hermite(quad.hermite_nodes);
            let s: f64 = y.iter().zip(&w).map(|(y, w)| w * f(scale * y)).sum();
            Ok(s / PI.sqrt())
        }
        PotentialSpec::Cosine => {
            let period = 2.0 * PI;
            // shift by the minimum of V for numerical range
            let z = periodic_trapezoid(|x| (-beta * (x.cos() + 1.0)).exp(), 0.0, period, quad.periodic_nodes);
            let num = periodic_trapezoid(
                |x| f(x) * (-beta * (x.cos() + 1.0)).exp(),
                0.0,
                period,
                quad.periodic_nodes,
            );
            Ok(num / z)
        }
        other => Err(OracleError::NotNormalizable(format!("{other:?}"))),
    }
}

/// `E g(X_{x0}(t))` under the OU transition law, by Gauss-Hermite quadrature.
pub fn transition_expectation<F: Fn(f64) -> f64>(
    p: &OUParams,
    t: f64,
    nodes: &(Vec<f64>, Vec<f64>),
    g: F,
) -> f64 {
    let m = ou_exact_moments(p, t);
    let sd = (2.0 * m.variance).sqrt();
    let s: f64 = nodes.0.iter().zip(&nodes.1).map(|(y, w)| w * g(m.mean + sd * y)).sum();
    s / PI.sqrt()
}

/// `int_0^tau E B0(t, X_{x0}(t)) dt` by nested quadrature (Gauss-Hermite in space, adaptive
/// Gauss-Kronrod in time), using the one-step coefficient of `scheme` (`em` or `lm`).
pub fn accumulated_b0_quadrature(
    scheme: SchemeId,
    p: &OUParams,
    tau: f64,
    obs: ObservableId,
    tol: f64,
) -> Result<f64, OracleError> {
    let sol = backward_solution(p, tau, obs)?;
    let nodes = gauss_hermite(64);
    let integrand = |t: f64| {
        transition_expectation(p, t, &nodes, |x| {
            let r = match scheme {
                SchemeId::EulerMaruyama => b0_euler(p, &sol, t, x),
                SchemeId::NonMarkovian => b0_lm(p, &sol, t, x),
                SchemeId::Heun => Ok(f64::NAN),
            };
            r.unwrap_or(f64::NAN)
        })
    };
    if scheme == SchemeId::Heun {
        return Err(OracleError::InvalidParams(
            "no first-order coefficient for the second-order Heun scheme".into(),
        ));
    }
    Ok(adaptive_gk(integrand, 0.0, tau, tol, 40))
}
