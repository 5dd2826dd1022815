//! Real 2π-periodic scalar functions stored as truncated Fourier series.
//!
//! A [`PeriodicScalar`] with `N` modes represents
//! `f(t) = a₀ + Σ_{k=1..N} (a_k cos kt + b_k sin kt)`.
//! Samples live on a [`UniformGrid`] of `M` nodes `t_j = 2πj/M`; transforms
//! between the two are exact for band-limited data as long as `M ≥ 2N+1`.
//!
//! Nonlinear maps are evaluated pointwise on the grid and re-analyzed, so the
//! grid is usually oversampled (the default pairing is `N = 64`, `M = 256`).

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MODE_COUNT: usize = 64;
pub const DEFAULT_GRID_COUNT: usize = 256;

/// Smallest mode count accepted by [`PeriodicScalar`].
pub const MIN_MODE_COUNT: usize = 4;

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plans(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut p = planner().lock().unwrap_or_else(|e| e.into_inner());
    (p.plan_fft_forward(len), p.plan_fft_inverse(len))
}

/// Uniform grid `t_j = 2πj/M`, `j = 0..M`, with a cached inverse FFT plan.
#[derive(Clone)]
pub struct UniformGrid {
    len: usize,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for UniformGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UniformGrid").field("len", &self.len).finish()
    }
}

impl PartialEq for UniformGrid {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len
    }
}

impl UniformGrid {
    pub fn new(node_count: usize) -> Result<Self> {
        if node_count < 4 || node_count % 2 != 0 {
            return Err(Error::Config(format!(
                "grid node count must be even and at least 4, got {node_count}"
            )));
        }
        let (_, inverse) = plans(node_count);
        Ok(Self {
            len: node_count,
            inverse,
        })
    }

    /// A grid with `4N` nodes, the default oversampling for `N` modes.
    pub fn oversampled(mode_count: usize) -> Self {
        Self::new((4 * mode_count).max(8)).expect("4N is even and >= 8")
    }

    /// Same grid refined by an integer factor.
    pub fn refined(&self, factor: usize) -> Self {
        Self::new(self.len * factor.max(1)).expect("refinement of a valid grid is valid")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.len as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.len as f64
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len).map(move |j| self.node(j))
    }

    /// Fails unless `M ≥ 2N+1`.
    pub fn check_compatible(&self, mode_count: usize) -> Result<()> {
        if self.len < 2 * mode_count + 1 {
            return Err(Error::Config(format!(
                "grid of {} nodes cannot carry {} modes (need M >= 2N+1)",
                self.len, mode_count
            )));
        }
        Ok(())
    }

    /// Trapezoidal rule `(2π/M) Σ f_j` on this grid.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.len {
            return Err(Error::Config(format!(
                "expected {} samples, got {}",
                self.len,
                samples.len()
            )));
        }
        Ok(self.spacing() * samples.iter().sum::<f64>())
    }
}

/// Sup norm and C² norm of a periodic function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub sup_norm: f64,
    pub c2_norm: f64,
}

/// Truncated real Fourier series `a₀ + Σ (a_k cos kt + b_k sin kt)`.
///
/// Both coefficient vectors have length `N+1`; `b[0]` is always zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoefficientsRepr", into = "CoefficientsRepr")]
pub struct PeriodicScalar {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CoefficientsRepr {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<CoefficientsRepr> for PeriodicScalar {
    type Error = Error;

    fn try_from(r: CoefficientsRepr) -> Result<Self> {
        PeriodicScalar::from_coefficients(r.a, r.b)
    }
}

impl From<PeriodicScalar> for CoefficientsRepr {
    fn from(f: PeriodicScalar) -> Self {
        CoefficientsRepr { a: f.cos, b: f.sin }
    }
}

impl PeriodicScalar {
    pub fn zeros(mode_count: usize) -> Self {
        assert!(
            mode_count >= MIN_MODE_COUNT,
            "mode count must be at least {MIN_MODE_COUNT}"
        );
        Self {
            cos: vec![0.0; mode_count + 1],
            sin: vec![0.0; mode_count + 1],
        }
    }

    /// Builds a series from `a = (a₀..a_N)` and `b = (b₀..b_N)`; `b₀` is ignored
    /// and stored as zero.
    pub fn from_coefficients(a: Vec<f64>, mut b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Config(format!(
                "coefficient vectors differ in length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        if a.len() < MIN_MODE_COUNT + 1 {
            return Err(Error::Config(format!(
                "need at least {MIN_MODE_COUNT} modes, got {}",
                a.len().saturating_sub(1)
            )));
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Config("non-finite Fourier coefficient".into()));
        }
        b[0] = 0.0;
        Ok(Self { cos: a, sin: b })
    }

    pub fn constant(mode_count: usize, value: f64) -> Self {
        let mut f = Self::zeros(mode_count);
        f.cos[0] = value;
        f
    }

    /// `amplitude · cos(kt)`.
    pub fn cosine(mode_count: usize, k: usize, amplitude: f64) -> Self {
        let mut f = Self::zeros(mode_count);
        assert!(k <= mode_count, "harmonic {k} beyond mode count {mode_count}");
        f.cos[k] = amplitude;
        f
    }

    /// `amplitude · sin(kt)`, `k ≥ 1`.
    pub fn sine(mode_count: usize, k: usize, amplitude: f64) -> Self {
        let mut f = Self::zeros(mode_count);
        assert!(
            (1..=mode_count).contains(&k),
            "sine harmonic must be in 1..=N"
        );
        f.sin[k] = amplitude;
        f
    }

    pub fn mode_count(&self) -> usize {
        self.cos.len() - 1
    }

    /// Cosine coefficient `a_k` (`a₀` is the mean).
    pub fn a(&self, k: usize) -> f64 {
        self.cos[k]
    }

    /// Sine coefficient `b_k`.
    pub fn b(&self, k: usize) -> f64 {
        self.sin[k]
    }

    pub fn cos_coefficients(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coefficients(&self) -> &[f64] {
        &self.sin
    }

    /// Same function with `n` modes (zero-padded or truncated).
    pub fn with_mode_count(&self, n: usize) -> Self {
        let mut out = Self::zeros(n);
        let m = n.min(self.mode_count());
        out.cos[..=m].copy_from_slice(&self.cos[..=m]);
        out.sin[..=m].copy_from_slice(&self.sin[..=m]);
        out
    }

    /// Applies `(a_k, b_k) ↦ (f(k)·a_k, f(k)·b_k)` for every mode.
    pub fn map_modes(&self, factor: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for k in 0..=self.mode_count() {
            let s = factor(k);
            out.cos[k] *= s;
            out.sin[k] *= s;
        }
        out
    }

    /// Value at an arbitrary `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_derivative(t, 0)
    }

    /// Value of the `order`-th derivative at an arbitrary `t`.
    pub fn eval_derivative(&self, t: f64, order: u32) -> f64 {
        // Rotation recurrence for (cos kt, sin kt).
        let (s1, c1) = t.sin_cos();
        let (mut ck, mut sk) = (1.0, 0.0);
        let mut acc = if order == 0 { self.cos[0] } else { 0.0 };
        for k in 1..=self.mode_count() {
            let next_c = ck * c1 - sk * s1;
            let next_s = sk * c1 + ck * s1;
            ck = next_c;
            sk = next_s;
            let (a, b) = derivative_pair(self.cos[k], self.sin[k], k, order);
            acc += a * ck + b * sk;
        }
        acc
    }

    /// Samples `f(t_j)` on the grid.
    pub fn synthesize(&self, grid: &UniformGrid) -> Result<Vec<f64>> {
        grid.check_compatible(self.mode_count())?;
        let m = grid.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        buf[0] = Complex64::new(self.cos[0], 0.0);
        for k in 1..=self.mode_count() {
            let c = Complex64::new(0.5 * self.cos[k], -0.5 * self.sin[k]);
            buf[k] = c;
            buf[m - k] = c.conj();
        }
        grid.inverse.process(&mut buf);
        Ok(buf.into_iter().map(|z| z.re).collect())
    }

    /// Trigonometric interpolant of `samples` truncated at harmonic `mode_count`.
    pub fn analyze(samples: &[f64], mode_count: usize) -> Result<Self> {
        let m = samples.len();
        if m < 2 * mode_count + 1 {
            return Err(Error::Config(format!(
                "{m} samples cannot resolve {mode_count} modes (need M >= 2N+1)"
            )));
        }
        if mode_count < MIN_MODE_COUNT {
            return Err(Error::Config(format!(
                "need at least {MIN_MODE_COUNT} modes, got {mode_count}"
            )));
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let (forward, _) = plans(m);
        forward.process(&mut buf);
        let scale = 1.0 / m as f64;
        let mut out = Self::zeros(mode_count);
        out.cos[0] = buf[0].re * scale;
        for k in 1..=mode_count {
            out.cos[k] = 2.0 * buf[k].re * scale;
            out.sin[k] = -2.0 * buf[k].im * scale;
        }
        Ok(out)
    }

    /// Mode-wise derivative of the given order.
    pub fn differentiate(&self, order: u32) -> Self {
        let mut out = self.clone();
        for k in 0..=self.mode_count() {
            let (a, b) = derivative_pair(self.cos[k], self.sin[k], k, order);
            out.cos[k] = a;
            out.sin[k] = b;
        }
        if order > 0 {
            out.cos[0] = 0.0;
        }
        out
    }

    /// `L₀f = f'' + f`: mode `k` is scaled by `1 − k²`.
    pub fn l0_apply(&self) -> Self {
        self.map_modes(|k| 1.0 - (k * k) as f64)
    }

    /// Solves `L₀φ = f` in the complement of the first harmonics.
    ///
    /// `f` must already be (numerically) free of `cos t`, `sin t` content:
    /// `|a₁|, |b₁| ≤ tol · max(1, ‖f‖∞)`. The returned `φ` has exactly zero
    /// first harmonics.
    pub fn l0_invert(&self, tol: f64) -> Result<Self> {
        let scale = tol * self.norms().sup_norm.max(1.0);
        let (c, s) = (self.cos[1], self.sin[1]);
        if c.abs() > scale || s.abs() > scale {
            return Err(Error::NotInRange { c, s, tol: scale });
        }
        let mut out = self.map_modes(|k| {
            if k == 1 {
                0.0
            } else {
                1.0 / (1.0 - (k * k) as f64)
            }
        });
        out.cos[1] = 0.0;
        out.sin[1] = 0.0;
        Ok(out)
    }

    /// Splits off the first harmonics: returns `(f⊥, c, s)` with
    /// `c = (1/π)∫f cos t`, `s = (1/π)∫f sin t`, and `f⊥ = f − c cos t − s sin t`.
    pub fn project_out_first_harmonics(&self) -> (Self, f64, f64) {
        let mut perp = self.clone();
        let (c, s) = (self.cos[1], self.sin[1]);
        perp.cos[1] = 0.0;
        perp.sin[1] = 0.0;
        (perp, c, s)
    }

    /// `∫₀^{2π} f g dt`, computed from coefficients (Parseval).
    pub fn integrate_product(&self, other: &Self) -> Result<f64> {
        if self.mode_count() != other.mode_count() {
            return Err(Error::Config(format!(
                "mode counts differ ({} vs {})",
                self.mode_count(),
                other.mode_count()
            )));
        }
        let mut acc = 2.0 * self.cos[0] * other.cos[0];
        for k in 1..=self.mode_count() {
            acc += self.cos[k] * other.cos[k] + self.sin[k] * other.sin[k];
        }
        Ok(PI * acc)
    }

    /// `∫₀^{2π} f dt`.
    pub fn integral(&self) -> f64 {
        2.0 * PI * self.cos[0]
    }

    /// Sup and C² norms measured on a refined grid (4× the default grid for
    /// this mode count), polished by a Newton step on each extremum.
    pub fn norms(&self) -> Norms {
        let grid = UniformGrid::oversampled(self.mode_count()).refined(4);
        let d1 = self.differentiate(1);
        let d2 = self.differentiate(2);
        let d3 = self.differentiate(3);
        let d4 = self.differentiate(4);
        let sup0 = refined_sup(self, &d1, &d2, &grid);
        let sup1 = refined_sup(&d1, &d2, &d3, &grid);
        let sup2 = refined_sup(&d2, &d3, &d4, &grid);
        Norms {
            sup_norm: sup0,
            c2_norm: sup0 + sup1 + sup2,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.cos.iter().chain(self.sin.iter()).all(|x| x.is_finite())
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(
            self.mode_count(),
            other.mode_count(),
            "mode counts differ"
        );
        Self {
            cos: self.cos.iter().zip(&other.cos).map(|(x, y)| op(*x, *y)).collect(),
            sin: self.sin.iter().zip(&other.sin).map(|(x, y)| op(*x, *y)).collect(),
        }
    }
}

fn derivative_pair(a: f64, b: f64, k: usize, order: u32) -> (f64, f64) {
    let kf = k as f64;
    let p = kf.powi(order as i32);
    match order % 4 {
        0 => (p * a, p * b),
        1 => (p * b, -p * a),
        2 => (-p * a, -p * b),
        _ => (-p * b, p * a),
    }
}

/// Grid max of `|f|` refined by Newton iterations on `f' = 0` near the best node.
fn refined_sup(f: &PeriodicScalar, d1: &PeriodicScalar, d2: &PeriodicScalar, grid: &UniformGrid) -> f64 {
    let samples = f.synthesize(grid).expect("refined grid is compatible");
    let (j, best) = samples
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |acc, (j, v)| if v.abs() > acc.1 { (j, v.abs()) } else { acc });
    if best == 0.0 {
        return 0.0;
    }
    let h = grid.spacing();
    let t0 = grid.node(j);
    let mut t = t0;
    for _ in 0..8 {
        let curv = d2.eval(t);
        if curv == 0.0 {
            break;
        }
        let step = d1.eval(t) / curv;
        t -= step;
        if (t - t0).abs() > h || step.abs() < 1e-15 {
            break;
        }
    }
    if (t - t0).abs() <= h {
        best.max(f.eval(t).abs())
    } else {
        best
    }
}

impl Add for &PeriodicScalar {
    type Output = PeriodicScalar;
    fn add(self, rhs: &PeriodicScalar) -> PeriodicScalar {
        self.zip_with(rhs, |x, y| x + y)
    }
}

impl Sub for &PeriodicScalar {
    type Output = PeriodicScalar;
    fn sub(self, rhs: &PeriodicScalar) -> PeriodicScalar {
        self.zip_with(rhs, |x, y| x - y)
    }
}

impl Mul<f64> for &PeriodicScalar {
    type Output = PeriodicScalar;
    fn mul(self, rhs: f64) -> PeriodicScalar {
        self.map_modes(|_| rhs)
    }
}

impl Neg for &PeriodicScalar {
    type Output = PeriodicScalar;
    fn neg(self) -> PeriodicScalar {
        self.map_modes(|_| -1.0)
    }
}

/// `∫₀^{2π} f g dt` for two sample vectors on the same uniform grid.
pub fn integrate_product_samples(f: &[f64], g: &[f64]) -> Result<f64> {
    if f.len() != g.len() || f.is_empty() {
        return Err(Error::Config(format!(
            "sample vectors differ in length ({} vs {})",
            f.len(),
            g.len()
        )));
    }
    let dot: f64 = f.iter().zip(g).map(|(x, y)| x * y).sum();
    Ok(2.0 * PI / f.len() as f64 * dot)
}
