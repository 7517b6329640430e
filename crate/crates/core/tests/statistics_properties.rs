use std::f64::consts::TAU;

use brownian_core::integrators::{Merge, Observer};
use brownian_core::statistics::{reference_density_1d, PositionHistogram};
use brownian_core::{fit_order, kl_error, l2_error, BinLayout, Histogram, HistogramDensity, PotentialSpec, RdfEstimate};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn density_of(mass: &[f64]) -> HistogramDensity {
    let total: f64 = mass.iter().sum();
    HistogramDensity {
        layout: BinLayout::new(0.0, 1.0, mass.len()).unwrap(),
        mass: mass.iter().map(|m| m / total).collect(),
        total_samples: 1,
    }
}

proptest! {
    #[test]
    fn kl_nonnegative_and_zero_only_on_equality(
        p in prop::collection::vec(0.01f64..1.0, 2..40),
        noise in prop::collection::vec(-0.5f64..0.5, 40),
    ) {
        let reference = density_of(&p);
        prop_assert_eq!(kl_error(&reference, &reference).unwrap(), 0.0);
        let q: Vec<f64> = p.iter().zip(&noise).map(|(a, e)| a * (1.0 + e)).collect();
        let est = density_of(&q);
        let kl = kl_error(&reference, &est).unwrap();
        prop_assert!(kl >= 0.0);
        if est.mass.iter().zip(&reference.mass).any(|(a, b)| (a - b).abs() > 1e-9) {
            prop_assert!(kl > 0.0);
        }
    }

    #[test]
    fn histogram_merge_is_associative_and_commutative(
        a in prop::collection::vec(-1.0f64..8.0, 0..200),
        b in prop::collection::vec(-1.0f64..8.0, 0..200),
        c in prop::collection::vec(-1.0f64..8.0, 0..200),
    ) {
        let layout = BinLayout::new(0.0, TAU, 17).unwrap();
        let fill = |xs: &[f64]| {
            let mut h = Histogram::new(layout);
            for &x in xs {
                h.accumulate(x);
            }
            h
        };
        let (ha, hb, hc) = (fill(&a), fill(&b), fill(&c));
        let mut left = ha.clone();
        left.merge(&hb);
        left.merge(&hc);
        let mut bc = hb.clone();
        bc.merge(&hc);
        let mut right = ha.clone();
        right.merge(&bc);
        prop_assert_eq!(&left, &right);
        let mut swapped = hc.clone();
        swapped.merge(&ha);
        swapped.merge(&hb);
        prop_assert_eq!(&left, &swapped);
        let serial = fill(&[a.clone(), b.clone(), c.clone()].concat());
        prop_assert_eq!(&left, &serial);
        if left.total() > 0 {
            let s: f64 = left.density().mass.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn kl_scales_quadratically_under_perturbation() {
    let p: Vec<f64> = (0..50).map(|i| 1.0 + 0.5 * (i as f64 * 0.37).sin()).collect();
    let reference = density_of(&p);
    // zero-mean perturbation direction under the reference
    let raw: Vec<f64> = (0..50).map(|i| (i as f64 * 1.3).cos()).collect();
    let mean: f64 = raw.iter().zip(&reference.mass).map(|(g, m)| g * m).sum();
    let g: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    let ratio = |eps: f64| {
        let q: Vec<f64> = reference.mass.iter().zip(&g).map(|(m, g)| m * (1.0 + eps * g)).collect();
        kl_error(&reference, &density_of(&q)).unwrap() / (eps * eps)
    };
    let (r2, r3) = (ratio(1e-2), ratio(1e-3));
    assert!((r2 / r3 - 1.0).abs() < 0.01, "{r2} vs {r3}");
    let half_chi2: f64 = 0.5 * reference.mass.iter().zip(&g).map(|(m, g)| m * g * g).sum::<f64>();
    assert!((r3 / half_chi2 - 1.0).abs() < 0.01);
}

#[test]
fn rdf_merge_matches_serial_accumulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (n, l) = (8, 3.0);
    let configs: Vec<Vec<f64>> = (0..30).map(|_| (0..3 * n).map(|_| rng.gen_range(0.0..l)).collect()).collect();
    let mut serial = RdfEstimate::new(n, l, l / 2.0, 20).unwrap();
    for c in &configs {
        serial.observe(0, c);
    }
    let mut parts: Vec<RdfEstimate> = configs
        .chunks(7)
        .map(|chunk| {
            let mut r = RdfEstimate::new(n, l, l / 2.0, 20).unwrap();
            for c in chunk {
                r.accumulate(c);
            }
            r
        })
        .collect();
    let mut merged = parts.pop().unwrap();
    for p in parts.iter().rev() {
        merged.merge(p);
    }
    assert_eq!(merged, serial);
}

#[test]
fn ideal_gas_rdf_follows_shell_volume() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (n, l) = (27, 4.5);
    let r_max = l / 2.0;
    let mut rdf = RdfEstimate::new(n, l, r_max, 30).unwrap();
    let mut x = vec![0.0; 3 * n];
    for _ in 0..20_000 {
        x.iter_mut().for_each(|v| *v = rng.gen_range(0.0..l));
        rdf.accumulate(&x);
    }
    // uniform pairs: pair-distance density 4 pi r^2 / L^3 inside the inscribed sphere
    let layout = rdf.layout();
    let mass = rdf.density().mass;
    let mut deviation = 0.0;
    let mut weight = 0.0;
    for (b, m) in mass.iter().enumerate() {
        let (lo, hi) = layout.edges(b);
        let expected = 4.0 * std::f64::consts::PI * (hi.powi(3) - lo.powi(3)) / (3.0 * l.powi(3));
        if lo >= 0.25 * r_max {
            deviation += (m - expected).abs();
            weight += expected;
            assert!((m / expected - 1.0).abs() < 0.05, "bin {b}: {m} vs {expected}");
        }
    }
    assert!(deviation / weight < 0.01);
}

#[test]
fn fit_recovers_order_from_noisy_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let series: Vec<(f64, f64)> = (0..8)
        .map(|k| {
            let h = 0.2 * 1.1f64.powi(k);
            (h, 3.0 * h * h * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
        })
        .collect();
    let fit = fit_order(&series).unwrap();
    assert!((1.9..=2.1).contains(&fit.fitted_slope), "{}", fit.fitted_slope);
    assert!(fit.r_squared > 0.99);
}

#[test]
fn exact_gibbs_draws_have_small_l2_error() {
    let layout = BinLayout::new(0.0, TAU, 100).unwrap();
    let beta = 1.0;
    let reference = reference_density_1d(&PotentialSpec::Cosine, beta, layout, 1e-13).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut hist = PositionHistogram::new(layout, 0);
    let mut accepted = 0u64;
    while accepted < 10_000_000 {
        // rejection from the uniform law with envelope exp(beta)
        let x = rng.gen_range(0.0..TAU);
        if rng.gen::<f64>() < (-beta * (x.cos() + 1.0)).exp() {
            hist.observe(accepted, &[x]);
            accepted += 1;
        }
    }
    let l2 = l2_error(&hist.histogram.density(), &reference).unwrap();
    assert!(l2 < 1e-2, "{l2}");
    let kl = kl_error(&reference, &hist.histogram.density()).unwrap();
    assert!(kl < 1e-4);
}
