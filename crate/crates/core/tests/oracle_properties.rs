use brownian_core::ou_oracle::{
    b0_lm, b0_lm_from_jets, backward_solution, c0_lm, discrete_moments, invariant_average_1d,
    weak_error, Derivatives, DriftJet, ObservableId, OUParams, QuadratureSettings,
};
use brownian_core::{PotentialSpec, SchemeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OBSERVABLES: [ObservableId; 2] = [ObservableId::Identity, ObservableId::Square];

fn close(a: f64, b: f64, rel: f64) -> bool {
    if a.abs() < 1e-290 && b.abs() < 1e-290 {
        return true;
    }
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Mean/variance of the affine recursions, propagated step by step.
fn propagate(scheme: SchemeId, p: &OUParams, h: f64, n_max: u64) -> Vec<(f64, f64)> {
    let (a, s) = (p.alpha, p.sigma);
    let mut out = vec![(p.x0, 0.0)];
    let (mut m, mut v) = (p.x0, 0.0);
    // covariance of X_k with the noise vector that enters its successor (non-Markovian only)
    let mut q = 0.0;
    for _ in 0..n_max {
        match scheme {
            SchemeId::EulerMaruyama => {
                let c = 1.0 - a * h;
                m *= c;
                v = c * c * v + s * s * h;
            }
            SchemeId::NonMarkovian => {
                let c = 1.0 - a * h;
                let k = 0.5 * s * h.sqrt();
                m *= c;
                v = c * c * v + 2.0 * k * k + 2.0 * c * k * q;
                q = k;
            }
            SchemeId::Heun => {
                let ah = a * h;
                let g = 1.0 - ah + 0.5 * ah * ah;
                let b = s * h.sqrt() * (1.0 - 0.5 * ah);
                m *= g;
                v = g * g * v + b * b;
            }
        }
        out.push((m, v));
    }
    out
}

#[test]
fn recursions_match_closed_forms() {
    for scheme in [SchemeId::EulerMaruyama, SchemeId::NonMarkovian, SchemeId::Heun] {
        for (alpha, sigma, x0) in [(1.0, 2f64.sqrt(), 1.0), (0.3, 0.5, -2.0), (2.5, 1.7, 0.4)] {
            let p = OUParams::new(alpha, sigma, x0).unwrap();
            for h in [0.001, 0.013, 0.1, 0.35] {
                if alpha * h >= 1.0 {
                    continue;
                }
                let path = propagate(scheme, &p, h, 10_000);
                for (n, &(m, v)) in path.iter().enumerate() {
                    let c = discrete_moments(scheme, &p, h, n as u64).unwrap();
                    assert!(close(m, c.mean, 1e-12), "{scheme} h={h} n={n}: mean {m} vs {}", c.mean);
                    assert!(close(v, c.variance, 1e-12), "{scheme} h={h} n={n}: var {v} vs {}", c.variance);
                }
            }
        }
    }
}

#[test]
fn backward_equation_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = OUParams::new(1.3, 0.9, 0.0).unwrap();
    let tau = 4.0;
    let dt = 1e-5;
    for obs in OBSERVABLES {
        let sol = backward_solution(&p, tau, obs).unwrap();
        for _ in 0..100 {
            let t = rng.gen_range(0.01..tau - 0.01);
            let x = rng.gen_range(-3.0..3.0);
            let d = sol.eval(t, x).unwrap();
            let ut = (sol.u(t + dt, x).unwrap() - sol.u(t - dt, x).unwrap()) / (2.0 * dt);
            let residual = ut - p.alpha * x * d.ux + 0.5 * p.sigma * p.sigma * d.uxx;
            assert!(residual.abs() <= 1e-8, "{obs:?} t={t} x={x}: {residual}");
        }
        assert_eq!(sol.u(tau, 1.7).unwrap(), obs.eval(1.7));
    }
}

#[test]
fn b0_matches_finite_difference_derivatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = OUParams::new(0.8, 1.1, 0.0).unwrap();
    let dx = 1e-3;
    for obs in OBSERVABLES {
        let sol = backward_solution(&p, 3.0, obs).unwrap();
        for _ in 0..100 {
            let t = rng.gen_range(0.0..3.0);
            let x = rng.gen_range(-3.0..3.0);
            let u = |y: f64| sol.u(t, y).unwrap();
            let d = Derivatives {
                u: u(x),
                ux: (u(x + dx) - u(x - dx)) / (2.0 * dx),
                uxx: (u(x + dx) - 2.0 * u(x) + u(x - dx)) / (dx * dx),
                uxxx: 0.0,
                uxxxx: 0.0,
            };
            let fd = b0_lm_from_jets(DriftJet::ou(p.alpha, x), d, p.sigma);
            let exact = b0_lm(&p, &sol, t, x).unwrap();
            assert!((fd - exact).abs() <= 1e-6, "{fd} vs {exact}");
        }
    }
}

#[test]
fn b0_has_zero_gibbs_average() {
    let p = OUParams::new(1.0, 2f64.sqrt(), 0.0).unwrap();
    let beta = 2.0 / (p.sigma * p.sigma);
    let spec = PotentialSpec::Quadratic { alpha: p.alpha };
    let tau = 10.0;
    for obs in OBSERVABLES {
        let sol = backward_solution(&p, tau, obs).unwrap();
        for k in 0..10 {
            let t = k as f64;
            let avg = invariant_average_1d(
                |x| b0_lm(&p, &sol, t, x).unwrap(),
                &spec,
                beta,
                &QuadratureSettings::default(),
            )
            .unwrap();
            assert!(avg.abs() <= 1e-10, "{obs:?} t={t}: {avg}");
        }
    }
}

#[test]
fn quadrature_converged_under_node_doubling() {
    let settings = QuadratureSettings::default();
    let doubled = QuadratureSettings {
        periodic_nodes: 2 * settings.periodic_nodes,
        hermite_nodes: 2 * settings.hermite_nodes,
    };
    let smooth: [fn(f64) -> f64; 3] = [|x| x * x, |x| x.cos(), |x| x.powi(4) * x.sin().powi(2)];
    let periodic: [fn(f64) -> f64; 3] = [|x| x.cos(), |x| x.sin().powi(2), |x| (x.sin() + 0.3 * (2.0 * x).cos()).exp()];
    for (spec, fs) in [(PotentialSpec::Quadratic { alpha: 1.4 }, smooth), (PotentialSpec::Cosine, periodic)] {
        for beta in [0.5, 1.0, 3.0] {
            for f in fs {
                let a = invariant_average_1d(f, &spec, beta, &settings).unwrap();
                let b = invariant_average_1d(f, &spec, beta, &doubled).unwrap();
                assert!((a - b).abs() < 1e-12, "{spec:?} beta={beta}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn c0_lm_has_exponential_envelope() {
    let alpha = 1.0;
    let xs = [0.0, 0.5, 1.0, 2.0, -1.5];
    let ratio = |x0: f64, tau: f64| {
        let p = OUParams::new(alpha, 2f64.sqrt(), x0).unwrap();
        c0_lm(&p, tau, ObservableId::Square).abs() / ((1.0 + x0 * x0) * (-alpha * tau).exp())
    };
    let c = xs
        .iter()
        .flat_map(|&x0| (1..=20).map(move |k| ratio(x0, k as f64)))
        .fold(0.0, f64::max);
    assert!(c > 0.0 && c.is_finite());
    for &x0 in &xs {
        for k in 0..=380 {
            let tau = 1.0 + 0.05 * k as f64;
            assert!(ratio(x0, tau) <= c * (1.0 + 1e-12), "x0={x0} tau={tau}");
        }
    }
}

#[test]
fn richardson_coefficient_is_c0_plus_initial_transient() {
    let p = OUParams::new(1.0, 2f64.sqrt(), 1.5).unwrap();
    for tau in [1.0, 2.0, 5.0, 10.0] {
        let scaled = |h: f64| {
            let n = (tau / h).round() as u64;
            weak_error(SchemeId::NonMarkovian, ObservableId::Square, &p, h, n).unwrap() / h
        };
        let (h1, h2) = (1e-2, 1e-3);
        let (e1, e2) = (scaled(h1), scaled(h2));
        let extracted = (h1 * e2 - h2 * e1) / (h1 - h2);
        // int B0 plus the transient of the fresh initial noise
        let expected = c0_lm(&p, tau, ObservableId::Square)
            + 0.5 * p.sigma * p.sigma * (-2.0 * p.alpha * tau).exp();
        assert!(
            (extracted - expected).abs() <= 1e-3 * expected.abs(),
            "tau={tau}: {extracted} vs {expected}"
        );
        assert!((e2 - extracted).abs() < (e1 - extracted).abs());
    }
}
