//! Epicyclic ansatz curves, their normal fields and the curvature operator.
//!
//! With `c = 1/(1−ε)` the ansatz is `u(t) = ρ e^{iεct} + e^{ict}`: a unit
//! fast loop riding on a guiding circle of radius `ρ` that turns with angular
//! speed `ε` in fast time. Perturbations move along the normal
//! `n = i u̇/|u̇|`, which points into the fast loop.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::spectral::{PeriodicScalar, UniformGrid};
use crate::{dot, rot90, Point};

/// A curve counts as immersed when `min |u̇|` exceeds this.
pub const IMMERSION_THRESHOLD: f64 = 1e-8;

/// Anything that can report `u, u̇, ü, u⃛` at an arbitrary parameter value.
pub trait ParametricCurve {
    fn jet(&self, t: f64) -> [Point; 4];

    fn position(&self, t: f64) -> Point {
        self.jet(t)[0]
    }

    /// `R` with `u(t + 2π) = R u(t)`; the identity for 2π-periodic curves.
    fn period_rotation(&self) -> Point {
        Point::new(1.0, 0.0)
    }

    /// Samples the jet on a grid without any immersion check.
    fn sample(&self, grid: &UniformGrid) -> CurveJet {
        let m = grid.len();
        let mut out = CurveJet {
            grid: grid.clone(),
            rotation: self.period_rotation(),
            u: Vec::with_capacity(m),
            du: Vec::with_capacity(m),
            d2u: Vec::with_capacity(m),
            d3u: Vec::with_capacity(m),
        };
        for t in grid.nodes() {
            let [u, du, d2u, d3u] = self.jet(t);
            out.u.push(u);
            out.du.push(du);
            out.d2u.push(d2u);
            out.d3u.push(d3u);
        }
        out
    }
}

/// The parameter pair `(ε, ρ)` of the ansatz curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    pub eps: f64,
    pub rho: f64,
}

impl AnsatzParams {
    /// Requires `ε ≠ 0`, `|ε| < 1/2`, `ρ > 2` and `|ε|ρ < 1`.
    pub fn new(eps: f64, rho: f64) -> Result<Self> {
        let p = Self { eps, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { eps, rho } = *self;
        if !eps.is_finite() || !rho.is_finite() {
            return Err(Error::InvalidParams("eps and rho must be finite".into()));
        }
        if eps == 0.0 || eps.abs() >= 0.5 {
            return Err(Error::InvalidParams(format!("need 0 < |eps| < 1/2, got eps = {eps}")));
        }
        if rho <= 2.0 {
            return Err(Error::InvalidParams(format!("need rho > 2, got rho = {rho}")));
        }
        if eps.abs() * rho >= 1.0 {
            return Err(Error::InvalidParams(format!(
                "need |eps|*rho < 1, got {}",
                eps.abs() * rho
            )));
        }
        Ok(())
    }

    /// `c = 1/(1−ε)`, the fast angular speed in curve time.
    pub fn speed_factor(&self) -> f64 {
        1.0 / (1.0 - self.eps)
    }

    /// `u, u̇, ü, u⃛, u⁗` at `t`.
    pub fn jet5(&self, t: f64) -> [Point; 5] {
        let c = self.speed_factor();
        let slow_rate = Point::new(0.0, self.eps * c);
        let fast_rate = Point::new(0.0, c);
        let mut slow = Point::from_polar(self.rho, self.eps * c * t);
        let mut fast = Point::from_polar(1.0, c * t);
        let mut out = [Point::new(0.0, 0.0); 5];
        for d in out.iter_mut() {
            *d = slow + fast;
            slow *= slow_rate;
            fast *= fast_rate;
        }
        out
    }

    /// `v(τ) = ρ e^{iετ} + e^{iτ}`, the same curve in fast time `τ = ct`.
    pub fn fast_time_point(&self, tau: f64) -> Point {
        Point::from_polar(self.rho, self.eps * tau) + Point::from_polar(1.0, tau)
    }

    /// Closed-form curvature `[1 + ε³ρ² + ερ(1+ε)cos t] / [1 + 2ερ cos t + ε²ρ²]^{3/2}`.
    pub fn curvature_at(&self, t: f64) -> f64 {
        let (e, r) = (self.eps, self.rho);
        let er = e * r;
        let num = 1.0 + e * e * e * r * r + er * (1.0 + e) * t.cos();
        let den = 1.0 + 2.0 * er * t.cos() + er * er;
        num / den.powf(1.5)
    }
}

impl ParametricCurve for AnsatzParams {
    fn jet(&self, t: f64) -> [Point; 4] {
        let [u, du, d2u, d3u, _] = self.jet5(t);
        [u, du, d2u, d3u]
    }

    fn period_rotation(&self) -> Point {
        Point::from_polar(1.0, TAU * self.speed_factor())
    }
}

/// Counter-clockwise circle `center + radius·e^{it}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn unit() -> Self {
        Self {
            center: Point::new(0.0, 0.0),
            radius: 1.0,
        }
    }
}

impl ParametricCurve for Circle {
    fn jet(&self, t: f64) -> [Point; 4] {
        let e = Point::from_polar(self.radius, t);
        let i = Point::i();
        [self.center + e, i * e, -e, -i * e]
    }
}

/// `n, ṅ, n̈, n⃛` for `n = i u̇/|u̇|`, given `u̇ … u⁗`.
///
/// With `s = 1/|u̇|`, `P = u̇·ü` and `Q = Ṗ = |ü|² + u̇·u⃛` the speed factor obeys
/// `ṡ = −Ps³`, `s̈ = −Qs³ + 3P²s⁵`, `s⃛ = −Q̇s³ + 9PQs⁵ − 15P³s⁷`.
pub fn normal_derivatives(d1: Point, d2: Point, d3: Point, d4: Point) -> [Point; 4] {
    let s = 1.0 / d1.norm();
    let (s2, s3) = (s * s, s * s * s);
    let p = dot(d1, d2);
    let q = d2.norm_sqr() + dot(d1, d3);
    let dq = 3.0 * dot(d2, d3) + dot(d1, d4);
    let ds = -p * s3;
    let d2s = -q * s3 + 3.0 * p * p * s3 * s2;
    let d3s = -dq * s3 + 9.0 * p * q * s3 * s2 - 15.0 * p * p * p * s3 * s2 * s2;
    [
        rot90(d1 * s),
        rot90(d2 * s + d1 * ds),
        rot90(d3 * s + d2 * (2.0 * ds) + d1 * d2s),
        rot90(d4 * s + d3 * (3.0 * ds) + d2 * (3.0 * d2s) + d1 * d3s),
    ]
}

/// `U = u + φn` for the ansatz `u` and a periodic offset `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedCurve {
    pub params: AnsatzParams,
    pub phi: PeriodicScalar,
}

impl PerturbedCurve {
    pub fn new(params: AnsatzParams, phi: PeriodicScalar) -> Self {
        Self { params, phi }
    }
}

fn perturbed_jet(u: [Point; 5], f: [f64; 4]) -> [Point; 4] {
    let [n0, n1, n2, n3] = normal_derivatives(u[1], u[2], u[3], u[4]);
    [
        u[0] + n0 * f[0],
        u[1] + n0 * f[1] + n1 * f[0],
        u[2] + n0 * f[2] + n1 * (2.0 * f[1]) + n2 * f[0],
        u[3] + n0 * f[3] + n1 * (3.0 * f[2]) + n2 * (3.0 * f[1]) + n3 * f[0],
    ]
}

impl ParametricCurve for PerturbedCurve {
    fn jet(&self, t: f64) -> [Point; 4] {
        let f = [
            self.phi.eval(t),
            self.phi.eval_derivative(t, 1),
            self.phi.eval_derivative(t, 2),
            self.phi.eval_derivative(t, 3),
        ];
        perturbed_jet(self.params.jet5(t), f)
    }

    fn period_rotation(&self) -> Point {
        self.params.period_rotation()
    }
}

/// A curve and its first three derivatives sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveJet {
    pub grid: UniformGrid,
    /// `R` with `u(t + 2π) = R u(t)`.
    pub rotation: Point,
    pub u: Vec<Point>,
    pub du: Vec<Point>,
    pub d2u: Vec<Point>,
    pub d3u: Vec<Point>,
}

impl CurveJet {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn min_speed(&self) -> f64 {
        self.du.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min)
    }

    fn check_immersed(&self) -> Result<()> {
        let min_speed = self.min_speed();
        if !(min_speed > IMMERSION_THRESHOLD) {
            return Err(Error::DegenerateCurve { min_speed });
        }
        Ok(())
    }
}

/// `n, ṅ, n̈` sampled on the same grid as the curve they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalJet {
    pub n: Vec<Point>,
    pub dn: Vec<Point>,
    pub d2n: Vec<Point>,
}

/// Samples the closed-form ansatz and its derivatives.
pub fn ansatz_curve(p: &AnsatzParams, grid: &UniformGrid) -> CurveJet {
    p.sample(grid)
}

pub fn normal_field(c: &CurveJet) -> Result<NormalJet> {
    c.check_immersed()?;
    let zero = Point::new(0.0, 0.0);
    let mut out = NormalJet {
        n: Vec::with_capacity(c.len()),
        dn: Vec::with_capacity(c.len()),
        d2n: Vec::with_capacity(c.len()),
    };
    for j in 0..c.len() {
        let [n, dn, d2n, _] = normal_derivatives(c.du[j], c.d2u[j], c.d3u[j], zero);
        out.n.push(n);
        out.dn.push(dn);
        out.d2n.push(d2n);
    }
    Ok(out)
}

/// Samples `u + φn` on `grid`, failing when the result stops being immersed.
pub fn perturbed_curve(p: &AnsatzParams, phi: &PeriodicScalar, grid: &UniformGrid) -> Result<CurveJet> {
    let derivs = (0..4)
        .map(|k| phi.differentiate(k).synthesize(grid))
        .collect::<Result<Vec<_>>>()?;
    let m = grid.len();
    let mut out = CurveJet {
        grid: grid.clone(),
        rotation: p.period_rotation(),
        u: Vec::with_capacity(m),
        du: Vec::with_capacity(m),
        d2u: Vec::with_capacity(m),
        d3u: Vec::with_capacity(m),
    };
    for (j, t) in grid.nodes().enumerate() {
        let f = [derivs[0][j], derivs[1][j], derivs[2][j], derivs[3][j]];
        let [u, du, d2u, d3u] = perturbed_jet(p.jet5(t), f);
        out.u.push(u);
        out.du.push(du);
        out.d2u.push(d2u);
        out.d3u.push(d3u);
    }
    let min_speed = out.min_speed();
    if !(min_speed > IMMERSION_THRESHOLD) {
        return Err(Error::NotInDomain { min_speed });
    }
    Ok(out)
}

/// Signed curvature `(iu̇·ü)/|u̇|³` at each node.
pub fn curvature_samples(c: &CurveJet) -> Result<Vec<f64>> {
    c.check_immersed()?;
    Ok(c
        .du
        .iter()
        .zip(&c.d2u)
        .map(|(&d1, &d2)| dot(rot90(d1), d2) / d1.norm().powi(3))
        .collect())
}

pub fn curvature(c: &CurveJet, mode_count: usize) -> Result<PeriodicScalar> {
    PeriodicScalar::analyze(&curvature_samples(c)?, mode_count)
}

/// `K_{ε,ρ}(φ)`: curvature of `u + φn` as a function of `t`.
pub fn curvature_operator(p: &AnsatzParams, phi: &PeriodicScalar, grid: &UniformGrid) -> Result<PeriodicScalar> {
    curvature(&perturbed_curve(p, phi, grid)?, phi.mode_count())
}

/// `K′_{ε,ρ}(φ)[ψ] = a ψ̈ + b ψ̇ + c ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureLinearization {
    pub a: PeriodicScalar,
    pub b: PeriodicScalar,
    pub c: PeriodicScalar,
    grid: UniformGrid,
    samples: [Vec<f64>; 3],
}

impl CurvatureLinearization {
    /// Coefficient samples `(a, b, c)` on the grid they were built on.
    pub fn samples(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.samples[0], &self.samples[1], &self.samples[2])
    }

    /// Applies the operator pointwise on the build grid.
    pub fn apply(&self, psi: &PeriodicScalar) -> Result<PeriodicScalar> {
        let p0 = psi.synthesize(&self.grid)?;
        let p1 = psi.differentiate(1).synthesize(&self.grid)?;
        let p2 = psi.differentiate(2).synthesize(&self.grid)?;
        let [a, b, c] = &self.samples;
        let out: Vec<f64> = (0..self.grid.len())
            .map(|j| a[j] * p2[j] + b[j] * p1[j] + c[j] * p0[j])
            .collect();
        PeriodicScalar::analyze(&out, psi.mode_count())
    }

    /// `(‖a−1‖∞, ‖b‖∞, ‖c−1‖∞)` on the grid samples.
    pub fn deviation_from_l0(&self) -> (f64, f64, f64) {
        let sup = |v: &[f64], shift: f64| v.iter().map(|x| (x - shift).abs()).fold(0.0, f64::max);
        let [a, b, c] = &self.samples;
        (sup(a, 1.0), sup(b, 0.0), sup(c, 1.0))
    }
}

/// Fréchet derivative of `φ ↦ K(u + φn)` at `φ`, from differentiating
/// `(iU̇·Ü)/|U̇|³` along `δU = ψn`.
pub fn curvature_linearization(
    p: &AnsatzParams,
    phi: &PeriodicScalar,
    grid: &UniformGrid,
) -> Result<CurvatureLinearization> {
    let curve = perturbed_curve(p, phi, grid)?;
    let base = ansatz_curve(p, grid);
    let normal = normal_field(&base)?;
    let m = grid.len();
    let mut samples = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    for j in 0..m {
        let (d1, d2) = (curve.du[j], curve.d2u[j]);
        let (n0, n1, n2) = (normal.n[j], normal.dn[j], normal.d2n[j]);
        let speed2 = d1.norm_sqr();
        let inv3 = 1.0 / (speed2 * speed2.sqrt());
        let inv5 = inv3 / speed2;
        let cross = dot(rot90(d1), d2);
        // δ(iU̇·Ü) = iδU̇·Ü + iU̇·δÜ with δU̇ = ψ̇n + ψṅ, δÜ = ψ̈n + 2ψ̇ṅ + ψn̈.
        samples[0][j] = dot(rot90(d1), n0) * inv3;
        samples[1][j] = (dot(rot90(n0), d2) + 2.0 * dot(rot90(d1), n1)) * inv3
            - 3.0 * cross * dot(d1, n0) * inv5;
        samples[2][j] = (dot(rot90(n1), d2) + dot(rot90(d1), n2)) * inv3
            - 3.0 * cross * dot(d1, n1) * inv5;
    }
    let n = phi.mode_count();
    Ok(CurvatureLinearization {
        a: PeriodicScalar::analyze(&samples[0], n)?,
        b: PeriodicScalar::analyze(&samples[1], n)?,
        c: PeriodicScalar::analyze(&samples[2], n)?,
        grid: grid.clone(),
        samples,
    })
}

/// `max_j |u(t_j + 2π) − e^{2πi/(1−ε)} u(t_j)|`.
pub fn rotation_residual(curve: &dyn ParametricCurve, grid: &UniformGrid, eps: f64) -> f64 {
    let rot = Point::from_polar(1.0, TAU / (1.0 - eps));
    grid.nodes()
        .map(|t| (curve.position(t + TAU) - rot * curve.position(t)).norm())
        .fold(0.0, f64::max)
}
