//! Direct integration of the Lorentz equations and the cross-check of solved
//! curves against them.
//!
//! The planar system is `v̇ = w`, `ẇ = iB(v)w`. It conserves `|w|`, so a
//! unit-speed start is an arc-length parametrized curve whose curvature is
//! `B`. A curve from the reduction, reparametrized by arc length, should
//! therefore be an orbit.

use ode_solvers::{Dop853, Rk4, SVector, System};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::field::RadialProfile;
use crate::geometry::{CurveJet, ParametricCurve};
use crate::reduction::ReducedSolution;
use crate::spectral::{PeriodicScalar, UniformGrid};
use crate::{dot, Point};

/// Sampled solution of an initial-value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<P> {
    pub times: Vec<f64>,
    pub positions: Vec<P>,
    pub velocities: Vec<P>,
}

impl<P> Trajectory<P> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Classical fourth-order Runge–Kutta. The step is shrunk slightly so
    /// that a whole number of steps covers the duration.
    Rk4 { step: f64 },
    /// Dormand–Prince 8(5,3) with step-size control.
    Adaptive { rel_tol: f64, abs_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(flatten)]
    pub method: Method,
    pub duration: f64,
    /// Spacing of recorded samples. `None` records every step.
    #[serde(default)]
    pub sample_interval: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: u32,
}

fn default_max_steps() -> u32 {
    5_000_000
}

impl SimConfig {
    pub fn rk4(step: f64, duration: f64) -> Self {
        Self {
            method: Method::Rk4 { step },
            duration,
            sample_interval: None,
            max_steps: default_max_steps(),
        }
    }

    pub fn adaptive(tol: f64, duration: f64) -> Self {
        Self {
            method: Method::Adaptive {
                rel_tol: tol,
                abs_tol: tol,
            },
            duration,
            sample_interval: None,
            max_steps: default_max_steps(),
        }
    }

    pub fn with_samples_every(mut self, interval: f64) -> Self {
        self.sample_interval = Some(interval);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        let ok = positive(self.duration)
            && self.sample_interval.map_or(true, positive)
            && match self.method {
                Method::Rk4 { step } => positive(step),
                Method::Adaptive { rel_tol, abs_tol } => positive(rel_tol) && positive(abs_tol),
            };
        if !ok {
            return Err(Error::InvalidParams(format!(
                "simulation step, tolerances, sample interval and duration must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

struct Planar<'a> {
    field: &'a dyn RadialProfile,
}

impl System<f64, SVector<f64, 4>> for Planar<'_> {
    fn system(&self, _t: f64, y: &SVector<f64, 4>, dy: &mut SVector<f64, 4>) {
        let b = self.field.field_at(Point::new(y[0], y[1]));
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = -b * y[3];
        dy[3] = b * y[2];
    }
}

struct Spatial<'a> {
    field: &'a dyn RadialProfile,
    charge_over_mass: f64,
}

impl System<f64, SVector<f64, 6>> for Spatial<'_> {
    fn system(&self, _t: f64, y: &SVector<f64, 6>, dy: &mut SVector<f64, 6>) {
        let k = self.charge_over_mass * self.field.field_at(Point::new(y[0], y[1]));
        dy[0] = y[3];
        dy[1] = y[4];
        dy[2] = y[5];
        dy[3] = k * y[4];
        dy[4] = -k * y[3];
        dy[5] = 0.0;
    }
}

fn integrator_error(e: impl std::fmt::Display) -> Error {
    Error::Integrator(e.to_string())
}

fn run<const D: usize, S: System<f64, SVector<f64, D>>>(
    sys: S,
    y0: SVector<f64, D>,
    cfg: &SimConfig,
) -> Result<(Vec<f64>, Vec<SVector<f64, D>>)> {
    cfg.validate()?;
    match cfg.method {
        Method::Rk4 { step } => {
            let n = (cfg.duration / step).ceil().max(1.0);
            if n > cfg.max_steps as f64 {
                return Err(Error::Integrator(format!("{n} steps exceed max_steps = {}", cfg.max_steps)));
            }
            let h = cfg.duration / n;
            // The stepper takes ceil((end − start)/h) steps; half a step of slack pins that to n.
            let mut solver = Rk4::new(sys, 0.0, y0, cfg.duration - 0.5 * h, h);
            solver.integrate().map_err(integrator_error)?;
            let (t, y) = solver.results().get();
            let stride = cfg.sample_interval.map_or(1, |dx| ((dx / h).round() as usize).max(1));
            let keep = |i: usize| i % stride == 0 || i + 1 == t.len();
            let times = t.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, &x)| x).collect();
            let states = y.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, s)| *s).collect();
            Ok((times, states))
        }
        Method::Adaptive { rel_tol, abs_tol } => {
            let (dx, out) = match cfg.sample_interval {
                Some(dx) => (dx, ode_solvers::dop_shared::OutputType::Dense),
                None => (cfg.duration, ode_solvers::dop_shared::OutputType::Sparse),
            };
            let mut solver = Dop853::from_param(
                sys,
                0.0,
                cfg.duration,
                dx,
                y0,
                rel_tol,
                abs_tol,
                0.9,
                0.0,
                0.333,
                6.0,
                cfg.duration,
                0.0,
                cfg.max_steps,
                u32::MAX,
                out,
            );
            solver.integrate().map_err(integrator_error)?;
            let (t, y) = solver.results().get();
            Ok((t.clone(), y.clone()))
        }
    }
}

/// Integrates `v̇ = w`, `ẇ = iB(v)w` from `(v0, w0)`; `|w0|` must be 1.
///
/// No speed renormalization is applied, so `| |w| − 1 |` measures the
/// integrator error.
pub fn integrate_planar(
    field: &dyn RadialProfile,
    v0: Point,
    w0: Point,
    cfg: &SimConfig,
) -> Result<Trajectory<Point>> {
    if (w0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!(
            "initial velocity must have unit length, got |w0| = {}",
            w0.norm()
        )));
    }
    let y0 = SVector::<f64, 4>::new(v0.re, v0.im, w0.re, w0.im);
    let (times, states) = run(Planar { field }, y0, cfg)?;
    Ok(Trajectory {
        times,
        positions: states.iter().map(|s| Point::new(s[0], s[1])).collect(),
        velocities: states.iter().map(|s| Point::new(s[2], s[3])).collect(),
    })
}

/// Integrates `q̈₁ = (e/m)Bq̇₂`, `q̈₂ = −(e/m)Bq̇₁`, `q̈₃ = 0`.
pub fn integrate_lorentz3d(
    field: &dyn RadialProfile,
    q0: [f64; 3],
    qd0: [f64; 3],
    mass: f64,
    charge: f64,
    cfg: &SimConfig,
) -> Result<Trajectory<[f64; 3]>> {
    if !(mass > 0.0 && mass.is_finite()) || charge == 0.0 || !charge.is_finite() {
        return Err(Error::InvalidParams(format!(
            "need mass > 0 and charge != 0, got mass = {mass}, charge = {charge}"
        )));
    }
    let y0 = SVector::<f64, 6>::from_column_slice(&[q0[0], q0[1], q0[2], qd0[0], qd0[1], qd0[2]]);
    let sys = Spatial {
        field,
        charge_over_mass: charge / mass,
    };
    let (times, states) = run(sys, y0, cfg)?;
    Ok(Trajectory {
        times,
        positions: states.iter().map(|s| [s[0], s[1], s[2]]).collect(),
        velocities: states.iter().map(|s| [s[3], s[4], s[5]]).collect(),
    })
}

/// A [`CurveJet`] read as a curve on all of ℝ: quintic Hermite interpolation
/// of `(u, u̇, ü)` between nodes, extended by `u(t + 2π) = R u(t)`.
#[derive(Debug, Clone, Copy)]
pub struct SampledCurve<'a> {
    jet: &'a CurveJet,
}

impl<'a> SampledCurve<'a> {
    pub fn new(jet: &'a CurveJet) -> Self {
        Self { jet }
    }
}

impl ParametricCurve for SampledCurve<'_> {
    fn jet(&self, t: f64) -> [Point; 4] {
        let c = self.jet;
        let m = c.len();
        let h = c.grid.spacing();
        let turns = (t / TAU).floor();
        let r = t - turns * TAU;
        let k = ((r / h).floor() as usize).min(m - 1);
        let x = (r - k as f64 * h) / h;
        let (end_rot, k1) = if k + 1 == m { (c.rotation, 0) } else { (Point::new(1.0, 0.0), k + 1) };
        let p0 = c.u[k];
        let d0 = c.du[k] * h;
        let s0 = c.d2u[k] * (h * h);
        let p1 = end_rot * c.u[k1];
        let d1 = end_rot * c.du[k1] * h;
        let s1 = end_rot * c.d2u[k1] * (h * h);
        let dp = p1 - p0;
        let coef = [
            p0,
            d0,
            s0 * 0.5,
            dp * 10.0 - d0 * 6.0 - d1 * 4.0 - s0 * 1.5 + s1 * 0.5,
            dp * -15.0 + d0 * 8.0 + d1 * 7.0 + s0 * 1.5 - s1,
            dp * 6.0 - d0 * 3.0 - d1 * 3.0 - s0 * 0.5 + s1 * 0.5,
        ];
        let mut out = [Point::new(0.0, 0.0); 4];
        for (order, slot) in out.iter_mut().enumerate() {
            // Horner on the `order`-th derivative of the polynomial in x.
            let mut acc = Point::new(0.0, 0.0);
            for p in (order..6).rev() {
                let falling: f64 = (0..order).map(|i| (p - i) as f64).product();
                acc = acc * x + coef[p] * falling;
            }
            *slot = acc / h.powi(order as i32);
        }
        let rot = c.rotation.powi(turns as i32);
        out.map(|v| rot * v)
    }

    fn period_rotation(&self) -> Point {
        self.jet.rotation
    }
}

/// Arc length `ℓ(t) = ∫₀^t |u̇|` of a curve with 2π-periodic speed and its inverse.
///
/// `ℓ` is the mean speed times `t` plus the spectral antiderivative of the
/// oscillating part, so it is available for every real `t`.
#[derive(Debug, Clone)]
pub struct ArcLengthMap<C> {
    curve: C,
    mean_speed: f64,
    speed: PeriodicScalar,
    oscillation: PeriodicScalar,
    speed_bounds: (f64, f64),
}

impl<C: ParametricCurve> ArcLengthMap<C> {
    /// Samples `|u̇|` on `grid`, resolving it with `grid.len()/2 − 1` modes.
    pub fn new(curve: C, grid: &UniformGrid) -> Result<Self> {
        let speeds: Vec<f64> = grid.nodes().map(|t| curve.jet(t)[1].norm()).collect();
        let min = speeds.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > crate::geometry::IMMERSION_THRESHOLD) {
            return Err(Error::DegenerateCurve { min_speed: min });
        }
        let speed = PeriodicScalar::analyze(&speeds, grid.len() / 2 - 1)?;
        let n = speed.mode_count();
        let mut a = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        for k in 1..=n {
            a[k] = -speed.b(k) / k as f64;
            b[k] = speed.a(k) / k as f64;
        }
        let mut oscillation = PeriodicScalar::from_coefficients(a, b)?;
        let at_zero = oscillation.eval(0.0);
        oscillation = &oscillation - &PeriodicScalar::constant(n, at_zero);
        let sup = speed.norms().sup_norm;
        let inf = speeds.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            curve,
            mean_speed: speed.a(0),
            speed,
            oscillation,
            speed_bounds: (0.5 * inf, 2.0 * sup),
        })
    }

    pub fn curve(&self) -> &C {
        &self.curve
    }

    /// Length of one parameter period `[0, 2π]`.
    pub fn period_length(&self) -> f64 {
        self.mean_speed * TAU
    }

    pub fn length_at(&self, t: f64) -> f64 {
        self.mean_speed * t + self.oscillation.eval(t)
    }

    /// `g(s)`, the parameter at arc length `s`, by safeguarded Newton.
    pub fn curve_param(&self, s: f64) -> f64 {
        let (smin, smax) = self.speed_bounds;
        let (mut lo, mut hi) = if s >= 0.0 { (s / smax, s / smin) } else { (s / smin, s / smax) };
        let mut t = s / self.mean_speed;
        for _ in 0..100 {
            let f = self.length_at(t) - s;
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let mut next = t - f / self.speed.eval(t);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - t).abs() <= 4.0 * f64::EPSILON * t.abs().max(1.0);
            t = next;
            if done {
                break;
            }
        }
        t
    }

    pub fn position(&self, s: f64) -> Point {
        self.curve.position(self.curve_param(s))
    }

    /// Unit tangent `u̇/|u̇|` at arc length `s`.
    pub fn tangent(&self, s: f64) -> Point {
        let d = self.curve.jet(self.curve_param(s))[1];
        d / d.norm()
    }
}

/// Resamples one period of a sampled curve at `samples` equally spaced arc
/// lengths. Velocities are unit tangents.
pub fn arclength_reparametrize(c: &CurveJet, samples: usize) -> Result<Trajectory<Point>> {
    if samples == 0 {
        return Err(Error::InvalidParams("need at least one sample".into()));
    }
    let map = ArcLengthMap::new(SampledCurve::new(c), &c.grid)?;
    let ds = map.period_length() / samples as f64;
    let mut out = Trajectory {
        times: Vec::with_capacity(samples),
        positions: Vec::with_capacity(samples),
        velocities: Vec::with_capacity(samples),
    };
    for i in 0..samples {
        let s = i as f64 * ds;
        let t = map.curve_param(s);
        let jet = map.curve().jet(t);
        out.times.push(s);
        out.positions.push(jet[0]);
        out.velocities.push(jet[1] / jet[1].norm());
    }
    Ok(out)
}

/// Settings for [`verify_solution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub integrator: Method,
    /// Run length in slow revolutions of the guiding centre.
    pub slow_periods: f64,
    /// Arc-length spacing of the checked samples.
    pub sample_interval: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            integrator: Method::Adaptive {
                rel_tol: 1e-13,
                abs_tol: 1e-13,
            },
            slow_periods: 1.0,
            sample_interval: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// Arc length of one fast loop.
    pub fast_period_length: f64,
    /// Arc length integrated.
    pub duration: f64,
    pub samples: usize,
    /// Largest distance from the orbit to the curve during the first fast loop.
    pub fast_period_deviation: f64,
    /// Largest distance over the whole run.
    pub deviation: f64,
    /// `max | |w| − 1 |`.
    pub speed_drift: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// `r_min − (ρ − 1)`.
    pub inner_margin: f64,
    /// `(ρ + 1) − r_max`.
    pub outer_margin: f64,
}

/// Parameter of the point of `curve` nearest to `v`, by Newton on
/// `(u(t) − v)·u̇(t) = 0` from `guess`.
pub fn nearest_parameter(curve: &dyn ParametricCurve, v: Point, guess: f64) -> f64 {
    let mut t = guess;
    for _ in 0..8 {
        let [u, du, d2u, _] = curve.jet(t);
        let g = dot(u - v, du);
        let dg = du.norm_sqr() + dot(u - v, d2u);
        let step = g / dg;
        t -= step;
        if step.abs() < 1e-15 * t.abs().max(1.0) {
            break;
        }
    }
    t
}

/// Integrates the planar system from the start of the solved curve, in arc
/// length, and measures how far the orbit strays from the curve.
pub fn verify_solution(
    field: &dyn RadialProfile,
    sol: &ReducedSolution,
    cfg: &VerifyConfig,
) -> Result<VerifyReport> {
    let p = sol.params;
    let grid = UniformGrid::oversampled(sol.phi.mode_count()).refined(2);
    let map = ArcLengthMap::new(sol.curve(), &grid)?;
    let [u0, du0, ..] = map.curve().jet(0.0);
    let slow_period = TAU * (1.0 - p.eps) / p.eps.abs();
    let duration = map.length_at(cfg.slow_periods * slow_period);
    let fast_period_length = map.length_at(TAU);
    let sim = SimConfig {
        method: cfg.integrator,
        duration,
        sample_interval: Some(cfg.sample_interval),
        max_steps: default_max_steps(),
    };
    let traj = integrate_planar(field, u0, du0 / du0.norm(), &sim)?;

    let mut report = VerifyReport {
        fast_period_length,
        duration,
        samples: traj.len(),
        fast_period_deviation: 0.0,
        deviation: 0.0,
        speed_drift: 0.0,
        r_min: f64::INFINITY,
        r_max: 0.0,
        inner_margin: 0.0,
        outer_margin: 0.0,
    };
    for ((&s, &v), &w) in traj.times.iter().zip(&traj.positions).zip(&traj.velocities) {
        let t = nearest_parameter(map.curve(), v, map.curve_param(s));
        let d = (map.curve().position(t) - v).norm();
        report.deviation = report.deviation.max(d);
        if s <= fast_period_length {
            report.fast_period_deviation = report.fast_period_deviation.max(d);
        }
        report.speed_drift = report.speed_drift.max((w.norm() - 1.0).abs());
        report.r_min = report.r_min.min(v.norm());
        report.r_max = report.r_max.max(v.norm());
    }
    report.inner_margin = report.r_min - (p.rho - 1.0);
    report.outer_margin = (p.rho + 1.0) - report.r_max;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    /// Reduced fraction `m/n`.
    pub m: u32,
    pub n: u32,
    /// `n − m`, the number of loops and the order of the rotational symmetry.
    pub curls: u32,
    /// `max |u(t + 2π(n−m)) − u(t)|` over one grid period.
    pub closure_err: f64,
    /// [`symmetry_error`] at the angle `2π/(n−m)`.
    pub symmetry_err: f64,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// How far the closed curve is from being invariant under rotation by `angle`:
/// the smallest over period shifts `2πk`, `k < curls`, of
/// `max_j |u(t_j + 2πk) − e^{i·angle} u(t_j)|`.
pub fn symmetry_error(curve: &dyn ParametricCurve, curls: u32, angle: f64, grid: &UniformGrid) -> f64 {
    let rot = Point::from_polar(1.0, angle);
    (0..curls.max(1))
        .map(|k| {
            grid.nodes()
                .map(|t| (curve.position(t + TAU * k as f64) - rot * curve.position(t)).norm())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Checks closure and `(n−m)`-fold symmetry of a curve with `ε = m/n`.
///
/// In curve time the closing period is `2π(n−m)`: the fast loop turns `n`
/// times while the guiding centre turns `m` times.
pub fn closure_check(
    curve: &dyn ParametricCurve,
    eps: f64,
    m_int: u32,
    n_int: u32,
    grid: &UniformGrid,
) -> Result<ClosureReport> {
    if n_int == 0 || m_int == 0 || m_int >= n_int {
        return Err(Error::InvalidParams(format!("need 0 < m < n, got {m_int}/{n_int}")));
    }
    let g = gcd(m_int, n_int);
    let (m, n) = (m_int / g, n_int / g);
    if (eps - m as f64 / n as f64).abs() > 1e-14 {
        return Err(Error::InvalidParams(format!("eps = {eps} is not {m}/{n}")));
    }
    let curls = n - m;
    let period = TAU * curls as f64;
    let closure_err = grid
        .nodes()
        .map(|t| (curve.position(t + period) - curve.position(t)).norm())
        .fold(0.0, f64::max);
    Ok(ClosureReport {
        m,
        n,
        curls,
        closure_err,
        symmetry_err: symmetry_error(curve, curls, TAU / curls as f64, grid),
    })
}
