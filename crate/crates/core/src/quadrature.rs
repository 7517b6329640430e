//! Quadrature rules: Gauss-Hermite, periodic trapezoid and adaptive Gauss-Kronrod.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Hermite rule for weight `exp(-x^2)`.
///
/// Nodes are the eigenvalues of the Jacobi matrix (zero diagonal, off-diagonal `sqrt(k / 2)`),
/// isolated by Sturm-sequence bisection and polished by Newton steps on the orthonormal
/// Hermite recurrence. Returned in increasing order.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let off2: Vec<f64> = (1..n).map(|k| 0.5 * k as f64).collect();
    // number of eigenvalues below x
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = -x;
        for k in 0..n {
            if k > 0 {
                d = -x - off2[k - 1] / d;
            }
            if d == 0.0 {
                d = -f64::EPSILON * (1.0 + x.abs());
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let bound = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if count_below(mid) > i {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        let mut deriv = 0.0;
        for _ in 0..3 {
            let (p, d) = hermite_poly(n, z);
            deriv = d;
            z -= p / d;
        }
        x.push(z);
        w.push(2.0 / (deriv * deriv));
    }
    (x, w)
}

/// Orthonormal Hermite polynomial `p_n(z)` and its derivative `sqrt(2 n) p_{n-1}(z)`.
fn hermite_poly(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// `n`-point trapezoid rule on one period `[a, a + period)`; spectrally accurate for smooth
/// periodic integrands.
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, period: f64, n: usize) -> f64 {
    let dx = period / n as f64;
    (0..n).map(|i| f(a + i as f64 * dx)).sum::<f64>() * dx
}

// 15-point Kronrod nodes (positive half) and weights, with the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hl * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * hl, (kronrod - gauss).abs() * hl)
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]` to absolute tolerance `tol`,
/// bisecting at most `max_depth` times along any branch.
pub fn adaptive_gk<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    rec(&f, a, b, tol, max_depth)
}
