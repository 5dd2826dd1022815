//! Reference computations shared by the integration tests. Nothing here calls
//! into the library's numerics.

#![allow(dead_code)]

use magtrap::{PeriodicScalar, Point};
use rand::Rng;
use std::f64::consts::TAU;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    // Split first so periodic integrands are not sampled only at symmetric points.
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            step(f, x0, x1, f0, fm, f1, whole, tol / pieces as f64, 40)
        })
        .sum()
}

/// Modified Bessel function `I_k(x)` from its power series.
pub fn bessel_i(k: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(k as i32) / (1..=k).map(f64::from).product::<f64>();
    let mut sum = term;
    for j in 1..60 {
        term *= half * half / (j as f64 * (j + k) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// `u(t) = ρe^{iεt/(1−ε)} + e^{it/(1−ε)}` and its first two derivatives, written out.
pub fn ansatz_jet(eps: f64, rho: f64, t: f64) -> [Point; 3] {
    let c = 1.0 / (1.0 - eps);
    let slow = Point::from_polar(rho, eps * c * t);
    let fast = Point::from_polar(1.0, c * t);
    let i = Point::i();
    [
        slow + fast,
        i * eps * c * slow + i * c * fast,
        -(eps * c) * (eps * c) * slow - c * c * fast,
    ]
}

/// Signed curvature `(iu̇·ü)/|u̇|³` from a jet.
pub fn curvature_of(d1: Point, d2: Point) -> f64 {
    let cross = d1.re * d2.im - d1.im * d2.re;
    cross / d1.norm().powi(3)
}

/// `B = 1 + A(1+r²)^{−γ/2} + A₁(1+r²)^{−γ₁/2}`, written out.
pub fn model_field(a: f64, gamma: f64, a1: f64, gamma1: f64, v: Point) -> f64 {
    let s = 1.0 + v.norm_sqr();
    1.0 + a * s.powf(-0.5 * gamma) + a1 * s.powf(-0.5 * gamma1)
}

/// Series with `|a_k|, |b_k| ≤ scale·decay^k`, no first harmonics when `perp`.
pub fn random_series(rng: &mut impl Rng, n: usize, scale: f64, decay: f64, perp: bool) -> PeriodicScalar {
    let mut a = vec![0.0; n + 1];
    let mut b = vec![0.0; n + 1];
    for k in 0..=n {
        let w = scale * decay.powi(k as i32);
        a[k] = rng.gen_range(-w..w);
        if k > 0 {
            b[k] = rng.gen_range(-w..w);
        }
    }
    if perp {
        a[1] = 0.0;
        b[1] = 0.0;
    }
    PeriodicScalar::from_coefficients(a, b).unwrap()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fitted_exponent(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.abs().ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `max_j |f(t_j)|` over `count` equally spaced points offset from any FFT grid.
pub fn sup_off_grid(f: impl Fn(f64) -> f64, count: usize) -> f64 {
    (0..count)
        .map(|j| f(TAU * (j as f64 + 0.377) / count as f64))
        .map(f64::abs)
        .fold(0.0, f64::max)
}

const D1_STENCIL: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const D2_STENCIL: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];

/// `K(U) − B(U) − λ¹cos t − λ²sin t` at `t` for `U = u + φ·iu̇/|u̇|`, built
/// from the written-out ansatz, a direct Fourier sum for `φ` and
/// eighth-order finite differences of `U`.
pub fn independent_residual(
    field: impl Fn(Point) -> f64,
    eps: f64,
    rho: f64,
    phi_cos: &[f64],
    phi_sin: &[f64],
    lambda1: f64,
    lambda2: f64,
    t: f64,
) -> f64 {
    let phi = |s: f64| -> f64 {
        phi_cos
            .iter()
            .zip(phi_sin)
            .enumerate()
            .map(|(k, (a, b))| a * (k as f64 * s).cos() + b * (k as f64 * s).sin())
            .sum()
    };
    let curve = |s: f64| -> Point {
        let [u, du, _] = ansatz_jet(eps, rho, s);
        u + Point::i() * du / du.norm() * phi(s)
    };
    let h = 0.02;
    let mut d1 = Point::new(0.0, 0.0);
    let mut d2 = curve(t) * D2_STENCIL[0];
    for j in 1..=4 {
        let (plus, minus) = (curve(t + j as f64 * h), curve(t - j as f64 * h));
        d1 += (plus - minus) * D1_STENCIL[j - 1];
        d2 += (plus + minus) * D2_STENCIL[j];
    }
    let (d1, d2) = (d1 / h, d2 / (h * h));
    curvature_of(d1, d2) - field(curve(t)) - lambda1 * t.cos() - lambda2 * t.sin()
}
