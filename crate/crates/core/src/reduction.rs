//! The projected fixed point for `φ`, the root-find on `ρ` and the energy
//! diagnostics that explain why the root exists.
//!
//! For fixed `(ε, ρ)` the curve `u + φn` has curvature `B` up to a first
//! harmonic: `K − B = λ¹ cos t + λ² sin t`. The map
//! `F(φ) = B(u+φn) − K(u+φn) + L₀φ` is nearly constant in `φ`, so
//! `φ ↦ L₀⁻¹(F(φ) − first harmonics)` contracts. Tuning `ρ` then kills `λ¹`;
//! `λ²` vanishes on its own.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::field::{FieldModel, RadialProfile, UniformField};
use crate::geometry::{self, ansatz_curve, perturbed_curve, AnsatzParams, CurveJet, PerturbedCurve};
use crate::spectral::{PeriodicScalar, UniformGrid, DEFAULT_GRID_COUNT, DEFAULT_MODE_COUNT};
use crate::{dot, rot90};

/// Numerical settings for the fixed point and the root-find.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub mode_count: usize,
    pub grid_count: usize,
    /// Stop once `‖φ_{k+1} − φ_k‖_{C²}` drops below this.
    pub fix_tol: f64,
    pub max_iter: usize,
    /// Relative bracket width at which bisection on `ρ` stops.
    pub root_tol: f64,
    pub a1_factor: f64,
    pub a2_factor: f64,
    /// Window exponent; `None` means `1/(γ+2)`.
    pub delta: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode_count: DEFAULT_MODE_COUNT,
            grid_count: DEFAULT_GRID_COUNT,
            fix_tol: 1e-12,
            max_iter: 200,
            root_tol: 1e-10,
            a1_factor: 0.5,
            a2_factor: 2.0,
            delta: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.fix_tol > 0.0) || !(self.root_tol > 0.0) {
            return bad("fix_tol and root_tol must be positive".into());
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if !(0.0 < self.a1_factor && self.a1_factor < 1.0 && 1.0 < self.a2_factor && self.a2_factor.is_finite()) {
            return bad(format!(
                "need 0 < a1_factor < 1 < a2_factor, got {} and {}",
                self.a1_factor, self.a2_factor
            ));
        }
        if let Some(d) = self.delta {
            if !(0.0 < d && d < 1.0) {
                return bad(format!("need 0 < delta < 1, got {d}"));
            }
        }
        self.grid()?.check_compatible(self.mode_count)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::new(self.grid_count)
    }

    /// `δ`, defaulting to `1/(γ+2)`.
    pub fn delta_for(&self, gamma: f64) -> f64 {
        self.delta.unwrap_or(1.0 / (gamma + 2.0))
    }
}

/// Output of the fixed-point solve at one `(ε, ρ)`.
///
/// The multipliers follow the convention `K − B = λ¹ cos t + λ² sin t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSolution {
    pub params: AnsatzParams,
    pub phi: PeriodicScalar,
    pub lambda1: f64,
    pub lambda2: f64,
    pub iterations: usize,
    /// Last C² increment.
    pub fix_residual: f64,
    /// `‖K(u+φn) − B(u+φn) − λ¹cos − λ²sin‖∞` recomputed on a grid twice as fine.
    pub eq_residual: f64,
    pub phi_c2: f64,
    pub increments: Vec<f64>,
}

impl ReducedSolution {
    pub fn curve(&self) -> PerturbedCurve {
        PerturbedCurve::new(self.params, self.phi.clone())
    }
}

/// `F(φ) = B(u+φn) − K(u+φn) + L₀φ`.
pub fn f_operator(
    field: &dyn RadialProfile,
    p: &AnsatzParams,
    phi: &PeriodicScalar,
    grid: &UniformGrid,
) -> Result<PeriodicScalar> {
    let curve = perturbed_curve(p, phi, grid)?;
    let k = geometry::curvature_samples(&curve)?;
    let diff: Vec<f64> = curve
        .u
        .iter()
        .zip(&k)
        .map(|(&u, &kj)| field.field_at(u) - kj)
        .collect();
    Ok(&PeriodicScalar::analyze(&diff, phi.mode_count())? + &phi.l0_apply())
}

/// Iterates `φ ↦ L₀⁻¹(F(φ) − first harmonics)` from `warm_start` (or 0).
pub fn fixed_point_solve(
    field: &dyn RadialProfile,
    p: &AnsatzParams,
    cfg: &SolverConfig,
    warm_start: Option<&PeriodicScalar>,
) -> Result<ReducedSolution> {
    p.validate()?;
    let grid = cfg.grid()?;
    grid.check_compatible(cfg.mode_count)?;
    let mut phi = match warm_start {
        Some(w) => w.with_mode_count(cfg.mode_count),
        None => PeriodicScalar::zeros(cfg.mode_count),
    };
    let mut increments = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let f = f_operator(field, p, &phi, &grid)?;
        let (perp, _, _) = f.project_out_first_harmonics();
        let next = perp.l0_invert(cfg.fix_tol)?;
        let inc = (&next - &phi).norms().c2_norm;
        increments.push(inc);
        phi = next;
        if !inc.is_finite() {
            break;
        }
        if inc < cfg.fix_tol {
            converged = true;
            break;
        }
    }
    let last_increment = increments.last().copied().unwrap_or(f64::NAN);
    if !converged {
        return Err(Error::NonContraction {
            iterations: increments.len(),
            last_increment,
        });
    }
    let (_, c, s) = f_operator(field, p, &phi, &grid)?.project_out_first_harmonics();
    let (lambda1, lambda2) = (-c, -s);
    let eq_residual = equation_residual(field, p, &phi, lambda1, lambda2, &grid.refined(2))?;
    Ok(ReducedSolution {
        params: *p,
        phi_c2: phi.norms().c2_norm,
        phi,
        lambda1,
        lambda2,
        iterations: increments.len(),
        fix_residual: last_increment,
        eq_residual,
        increments,
    })
}

/// `‖K − B − λ¹cos − λ²sin‖∞` on the nodes of `grid`, straight from the sampled curve.
pub fn equation_residual(
    field: &dyn RadialProfile,
    p: &AnsatzParams,
    phi: &PeriodicScalar,
    lambda1: f64,
    lambda2: f64,
    grid: &UniformGrid,
) -> Result<f64> {
    let curve = perturbed_curve(p, phi, grid)?;
    let k = geometry::curvature_samples(&curve)?;
    Ok(grid
        .nodes()
        .zip(curve.u.iter().zip(&k))
        .map(|(t, (&u, &kj))| (kj - field.field_at(u) - lambda1 * t.cos() - lambda2 * t.sin()).abs())
        .fold(0.0, f64::max))
}

fn check_sign(m: &FieldModel, eps: f64) -> Result<()> {
    if eps == 0.0 || eps.signum() != m.a.signum() {
        return Err(Error::WrongSign { eps, a: m.a });
    }
    Ok(())
}

/// Root of `2 − Aγ/(ερ^{γ+2}) = 0`: `ρ* = (Aγ/(2ε))^{1/(γ+2)}`.
pub fn leading_order_rho(m: &FieldModel, eps: f64) -> Result<f64> {
    check_sign(m, eps)?;
    Ok((m.a * m.gamma / (2.0 * eps)).powf(1.0 / (m.gamma + 2.0)))
}

/// `[a₁|ε|^{−δ}, a₂|ε|^{−δ}]` with `a_i = factor_i·(|A|γ/2)^{1/(γ+2)}`.
pub fn rho_window(m: &FieldModel, eps: f64, cfg: &SolverConfig) -> (f64, f64) {
    let base = (m.a.abs() * m.gamma / 2.0).powf(1.0 / (m.gamma + 2.0));
    let scale = eps.abs().powf(-cfg.delta_for(m.gamma));
    (cfg.a1_factor * base * scale, cfg.a2_factor * base * scale)
}

/// Result of the bisection on `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSolve {
    pub rho_eps: f64,
    pub solution: ReducedSolution,
    pub window: (f64, f64),
    /// `λ¹` at the two window endpoints.
    pub endpoint_lambda1: (f64, f64),
    /// Every `(ρ, λ¹)` evaluated, endpoints first.
    pub trace: Vec<(f64, f64)>,
}

/// Bisection on `ρ ↦ λ¹(ρ)` over the window, then a cold solve at the root.
pub fn solve_rho(m: &FieldModel, eps: f64, cfg: &SolverConfig) -> Result<RootSolve> {
    m.validate()?;
    cfg.validate()?;
    check_sign(m, eps)?;
    let (lo0, hi0) = rho_window(m, eps, cfg);
    for rho in [lo0, hi0] {
        AnsatzParams::new(eps, rho).map_err(|e| {
            Error::InvalidParams(format!("window [{lo0}, {hi0}] leaves the admissible set ({e}); use a smaller |eps|"))
        })?;
    }
    let eval = |rho: f64, warm: Option<&PeriodicScalar>| -> Result<ReducedSolution> {
        fixed_point_solve(m, &AnsatzParams::new(eps, rho)?, cfg, warm)
    };
    let s_lo = eval(lo0, None)?;
    let s_hi = eval(hi0, None)?;
    let endpoint_lambda1 = (s_lo.lambda1, s_hi.lambda1);
    let mut trace = vec![(lo0, s_lo.lambda1), (hi0, s_hi.lambda1)];
    let (l_lo, l_hi) = endpoint_lambda1;
    let same_sign = l_lo.signum() == l_hi.signum();
    if !(l_lo.is_finite() && l_hi.is_finite()) || (same_sign && l_lo != 0.0 && l_hi != 0.0) {
        return Err(Error::Window {
            rho_lo: lo0,
            rho_hi: hi0,
            lambda_lo: l_lo,
            lambda_hi: l_hi,
        });
    }
    let lo_sign = s_lo.lambda1.signum();
    let (mut lo, mut hi) = (lo0, hi0);
    let mut warm = s_lo.phi;
    let mut root = None;
    if s_lo.lambda1 == 0.0 {
        root = Some(lo0);
    } else if s_hi.lambda1 == 0.0 {
        root = Some(hi0);
    }
    while root.is_none() && hi - lo > cfg.root_tol * 0.5 * (lo + hi) {
        let mid = 0.5 * (lo + hi);
        let s = eval(mid, Some(&warm))?;
        trace.push((mid, s.lambda1));
        if s.lambda1 == 0.0 {
            root = Some(mid);
        } else if s.lambda1.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
        warm = s.phi;
    }
    let rho_eps = root.unwrap_or(0.5 * (lo + hi));
    let solution = eval(rho_eps, None)?;
    let bound = 100.0 * cfg.fix_tol;
    if !(solution.lambda2.abs() <= bound) {
        return Err(Error::MultiplierNotVanishing {
            lambda2: solution.lambda2,
            bound,
        });
    }
    Ok(RootSolve {
        rho_eps,
        solution,
        window: (lo0, hi0),
        endpoint_lambda1,
        trace,
    })
}

/// `E(u) = ∫(|u̇| + Q(u)·iu̇) dt` by the trapezoid rule on the curve's grid.
pub fn energy(field: &dyn RadialProfile, c: &CurveJet) -> f64 {
    let integrand: Vec<f64> = c
        .u
        .iter()
        .zip(&c.du)
        .map(|(&u, &du)| du.norm() + dot(field.potential(u), rot90(du)))
        .collect();
    let h = c.grid.spacing();
    integrand.iter().sum::<f64>() * h
}

/// Unperturbed energy `E₀` of the ansatz (field `B ≡ 1`).
pub fn ansatz_energy(p: &AnsatzParams, grid: &UniformGrid) -> f64 {
    energy(&UniformField::default(), &ansatz_curve(p, grid))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDerivativeReport {
    /// `(1−ε)∂ρE₀` by five-point differences in `ρ`.
    pub finite_difference: f64,
    /// `∫[K(u)−1](ερ+cos t) dt`.
    pub integral: f64,
    /// `−2περ`.
    pub leading: f64,
    /// `|finite_difference − integral| / |integral|`.
    pub relative_mismatch: f64,
    /// `integral − leading`.
    pub remainder: f64,
}

/// Compares both sides of `(1−ε)∂ρE₀ = ∫[K(u)−1](ερ+cos t)dt` and the
/// leading term `−2περ`.
pub fn energy_rho_derivative_check(p: &AnsatzParams, grid: &UniformGrid) -> Result<EnergyDerivativeReport> {
    p.validate()?;
    let h = 1e-2 * p.rho.min(1.0 / p.eps.abs() - p.rho).min(1.0);
    let e_at = |dr: f64| ansatz_energy(&AnsatzParams { rho: p.rho + dr, ..*p }, grid);
    let d = (e_at(-2.0 * h) - e_at(2.0 * h) + 8.0 * (e_at(h) - e_at(-h))) / (12.0 * h);
    let finite_difference = (1.0 - p.eps) * d;

    let k = geometry::curvature_samples(&ansatz_curve(p, grid))?;
    let weights: Vec<f64> = grid
        .nodes()
        .zip(&k)
        .map(|(t, &kj)| (kj - 1.0) * (p.eps * p.rho + t.cos()))
        .collect();
    let integral = grid.integrate(&weights)?;
    let leading = -TAU * p.eps * p.rho;
    Ok(EnergyDerivativeReport {
        finite_difference,
        integral,
        leading,
        relative_mismatch: (finite_difference - integral).abs() / integral.abs(),
        remainder: integral - leading,
    })
}

/// Node count for the auxiliary integrals; the integrands are analytic in `t`
/// for `r < 1`, so the trapezoid rule converges geometrically.
const AUX_NODES: usize = 2048;

fn periodic_trapezoid(f: impl Fn(f64) -> f64) -> f64 {
    let h = TAU / AUX_NODES as f64;
    (0..AUX_NODES).map(|j| f(j as f64 * h)).sum::<f64>() * h
}

/// `∫₀^{2π} √(1 + 2r cos t + r²) dt`, the length of one loop of `1 + r e^{it}`.
pub fn loop_length_integral(r: f64) -> f64 {
    periodic_trapezoid(|t| (1.0 + 2.0 * r * t.cos() + r * r).sqrt())
}

/// `∫₀^{2π} cos t (1 + 2r cos t + r²)^{−γ/2} dt`.
pub fn field_moment_integral(r: f64, gamma: f64) -> f64 {
    periodic_trapezoid(|t| t.cos() * (1.0 + 2.0 * r * t.cos() + r * r).powf(-0.5 * gamma))
}

/// First-harmonic moments of the curvature and the field along `u + φn`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingReport {
    /// `∫K(u+φn) cos t dt`.
    pub curvature_moment: f64,
    /// `−2περ`.
    pub curvature_leading: f64,
    /// `∫B(u+φn) cos t dt`.
    pub field_moment: f64,
    /// `−Aγπρ^{−γ−1}`.
    pub field_leading: f64,
}

impl ForcingReport {
    /// `(1/π)∫(K − B) cos t dt`, which is `λ¹` at a fixed point.
    pub fn lambda1(&self) -> f64 {
        (self.curvature_moment - self.field_moment) / PI
    }
}

pub fn first_harmonic_forcing_check(
    m: &FieldModel,
    p: &AnsatzParams,
    phi: &PeriodicScalar,
    grid: &UniformGrid,
) -> Result<ForcingReport> {
    let curve = perturbed_curve(p, phi, grid)?;
    let k = geometry::curvature_samples(&curve)?;
    let cos: Vec<f64> = grid.nodes().map(f64::cos).collect();
    let kc: Vec<f64> = k.iter().zip(&cos).map(|(a, b)| a * b).collect();
    let bc: Vec<f64> = curve.u.iter().zip(&cos).map(|(&u, b)| m.field_at(u) * b).collect();
    Ok(ForcingReport {
        curvature_moment: grid.integrate(&kc)?,
        curvature_leading: -TAU * p.eps * p.rho,
        field_moment: grid.integrate(&bc)?,
        field_leading: -m.a * m.gamma * PI * p.rho.powf(-m.gamma - 1.0),
    })
}

/// `∫|u+φn|² cos t dt` against the margin `πρ` that forces `λ² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambda2Report {
    pub moment: f64,
    /// `2πρ`, the value for `φ = 0`.
    pub ansatz_moment: f64,
    /// `|moment| − πρ`; positive means the identity pins `λ²` to zero.
    pub margin: f64,
}

impl Lambda2Report {
    pub fn is_dominant(&self) -> bool {
        self.margin > 0.0
    }
}

pub fn lambda2_identity_check(p: &AnsatzParams, phi: &PeriodicScalar, grid: &UniformGrid) -> Result<Lambda2Report> {
    let curve = perturbed_curve(p, phi, grid)?;
    let w: Vec<f64> = grid
        .nodes()
        .zip(&curve.u)
        .map(|(t, u)| u.norm_sqr() * t.cos())
        .collect();
    let moment = grid.integrate(&w)?;
    Ok(Lambda2Report {
        moment,
        ansatz_moment: TAU * p.rho,
        margin: moment.abs() - PI * p.rho,
    })
}

/// Fitted power laws `ρ_ε ∝ |ε|^{s_ρ}` and `‖φ_ε‖_{C²} ∝ |ε|^{s_φ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub eps_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub phi_norms: Vec<f64>,
    pub fitted_rho_slope: f64,
    pub fitted_phi_slope: f64,
    pub solutions: Vec<ReducedSolution>,
}

impl ScalingReport {
    fn from_runs(mut runs: Vec<(f64, RootSolve)>) -> Self {
        runs.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()));
        let eps_values: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let rho_values: Vec<f64> = runs.iter().map(|r| r.1.rho_eps).collect();
        let phi_norms: Vec<f64> = runs.iter().map(|r| r.1.solution.phi_c2).collect();
        let log_eps: Vec<f64> = eps_values.iter().map(|e| e.abs().ln()).collect();
        let slope = |ys: &[f64]| log_log_slope(&log_eps, &ys.iter().map(|y| y.ln()).collect::<Vec<_>>());
        Self {
            fitted_rho_slope: slope(&rho_values),
            fitted_phi_slope: slope(&phi_norms),
            eps_values,
            rho_values,
            phi_norms,
            solutions: runs.into_iter().map(|r| r.1.solution).collect(),
        }
    }
}

/// Least-squares slope of `y` against `x`; NaN for fewer than two points.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// A sweep that stopped early. `partial` holds every run that succeeded.
#[derive(Debug)]
pub struct SweepFailure {
    pub partial: ScalingReport,
    pub failed_eps: f64,
    pub error: Error,
}

impl std::fmt::Display for SweepFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "sweep failed at eps = {}: {}", self.failed_eps, self.error)
    }
}

impl std::error::Error for SweepFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Runs [`solve_rho`] for each `ε` on up to `jobs` threads and fits the slopes.
pub fn sweep_scaling(
    m: &FieldModel,
    eps_list: &[f64],
    cfg: &SolverConfig,
    jobs: usize,
) -> std::result::Result<ScalingReport, SweepFailure> {
    let fail_early = |eps: f64, error: Error| SweepFailure {
        partial: ScalingReport::from_runs(Vec::new()),
        failed_eps: eps,
        error,
    };
    if eps_list.len() < 3 {
        return Err(fail_early(
            f64::NAN,
            Error::InvalidParams(format!("a sweep needs at least 3 eps values, got {}", eps_list.len())),
        ));
    }
    for &eps in eps_list {
        if let Err(e) = check_sign(m, eps) {
            return Err(fail_early(eps, e));
        }
    }
    let jobs = jobs.clamp(1, eps_list.len());
    let mut results: Vec<Option<Result<RootSolve>>> = (0..eps_list.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (chunk_eps, chunk_out) in eps_list
            .chunks(eps_list.len().div_ceil(jobs))
            .zip(results.chunks_mut(eps_list.len().div_ceil(jobs)))
        {
            scope.spawn(move || {
                for (eps, slot) in chunk_eps.iter().zip(chunk_out.iter_mut()) {
                    *slot = Some(solve_rho(m, *eps, cfg));
                }
            });
        }
    });
    let mut runs = Vec::new();
    let mut first_error = None;
    for (&eps, r) in eps_list.iter().zip(results) {
        match r.expect("every slot is filled by its worker") {
            Ok(s) => runs.push((eps, s)),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some((eps, e));
                }
            }
        }
    }
    let report = ScalingReport::from_runs(runs);
    match first_error {
        None => Ok(report),
        Some((failed_eps, error)) => Err(SweepFailure {
            partial: report,
            failed_eps,
            error,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> FieldModel {
        FieldModel::leading(1.0, 2.0).unwrap()
    }

    fn grid() -> UniformGrid {
        UniformGrid::new(256).unwrap()
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = SolverConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.delta_for(2.0), 0.25);
        let bad = SolverConfig {
            a1_factor: 1.2,
            ..cfg
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig { grid_count: 64, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn leading_order_rho_by_hand() {
        let m = model();
        assert!((leading_order_rho(&m, 0.001).unwrap() - 1000f64.powf(0.25)).abs() < 1e-12);
        assert!((leading_order_rho(&m, 0.001).unwrap() - 5.62341).abs() < 1e-5);
        assert!(matches!(leading_order_rho(&m, -0.001), Err(Error::WrongSign { .. })));
        let ratio = leading_order_rho(&m, 0.001 / 16.0).unwrap() / leading_order_rho(&m, 0.001).unwrap();
        assert!((ratio - 2.0).abs() < 1e-12);
        let neg = FieldModel::leading(-1.0, 2.0).unwrap();
        assert!((leading_order_rho(&neg, -0.001).unwrap() - 5.62341).abs() < 1e-5);
    }

    #[test]
    fn window_brackets_leading_root() {
        let m = model();
        let cfg = SolverConfig::default();
        let (lo, hi) = rho_window(&m, 0.002, &cfg);
        let star = leading_order_rho(&m, 0.002).unwrap();
        assert!((lo - 0.5 * star).abs() < 1e-12 && (hi - 2.0 * star).abs() < 1e-12);
    }

    #[test]
    fn f_vanishes_for_unit_field_on_near_circle() {
        let tiny = FieldModel::new(1e-300, 2.0, 0.0, 3.0).unwrap();
        let p = AnsatzParams::new(1e-12, 3.0).unwrap();
        let f = f_operator(&tiny, &p, &PeriodicScalar::zeros(16), &grid()).unwrap();
        assert!(f.norms().sup_norm < 1e-10);
    }

    #[test]
    fn f_at_zero_is_small_and_pure() {
        let p = AnsatzParams::new(0.02, 5.0).unwrap();
        let zero = PeriodicScalar::zeros(64);
        let f = f_operator(&model(), &p, &zero, &grid()).unwrap();
        let again = f_operator(&model(), &p, &zero, &grid()).unwrap();
        assert_eq!(f, again);
        let m0 = f.norms().sup_norm / 0.02f64.powf(0.5);
        assert!(m0 < 10.0, "M0 = {m0}");
    }

    #[test]
    fn fixed_point_converges_near_leading_root() {
        let m = model();
        let eps = 0.005;
        let rho = leading_order_rho(&m, eps).unwrap();
        let p = AnsatzParams::new(eps, rho).unwrap();
        let sol = fixed_point_solve(&m, &p, &SolverConfig::default(), None).unwrap();
        assert!(sol.iterations <= 30, "{} iterations", sol.iterations);
        assert!(sol.eq_residual <= 1e-10, "{}", sol.eq_residual);
        assert_eq!(sol.phi.a(1), 0.0);
        assert_eq!(sol.phi.b(1), 0.0);
        for w in sol.increments.windows(2).skip(1) {
            assert!(w[1] < 0.5 * w[0] || w[1] < 1e-13, "{:?}", sol.increments);
        }
        // Reflection symmetry keeps φ even.
        assert!(sol.lambda2.abs() < 1e-13);
    }

    #[test]
    fn non_contraction_is_reported() {
        let cfg = SolverConfig {
            max_iter: 2,
            ..SolverConfig::default()
        };
        let p = AnsatzParams::new(0.05, 4.0).unwrap();
        let r = fixed_point_solve(&model(), &p, &cfg, None);
        assert!(matches!(r, Err(Error::NonContraction { iterations: 2, .. })));
    }

    #[test]
    fn warm_start_reaches_the_same_point() {
        let m = model();
        let cfg = SolverConfig::default();
        let p = AnsatzParams::new(0.004, 4.2).unwrap();
        let cold = fixed_point_solve(&m, &p, &cfg, None).unwrap();
        let q = AnsatzParams::new(0.004, 4.3).unwrap();
        let near = fixed_point_solve(&m, &q, &cfg, None).unwrap();
        let warm = fixed_point_solve(&m, &p, &cfg, Some(&near.phi)).unwrap();
        assert!(warm.iterations < cold.iterations);
        assert!((&warm.phi - &cold.phi).norms().c2_norm < 1e-11);
    }

    #[test]
    fn unit_circle_energy() {
        let c = geometry::ParametricCurve::sample(&geometry::Circle::unit(), &grid());
        // iu̇ points into a counter-clockwise circle, so the area term is −πR².
        assert!((energy(&UniformField::default(), &c) - PI).abs() < 1e-12);
        let r = 2.5;
        let c = geometry::ParametricCurve::sample(
            &geometry::Circle {
                center: crate::Point::new(0.0, 0.0),
                radius: r,
            },
            &grid(),
        );
        assert!((energy(&FieldModel::unperturbed(), &c) - (TAU * r - PI * r * r)).abs() < 1e-11);
    }

    #[test]
    fn energy_derivative_identity() {
        let p = AnsatzParams::new(0.01, 5.0).unwrap();
        let r = energy_rho_derivative_check(&p, &grid()).unwrap();
        assert!(r.relative_mismatch < 1e-7, "{r:?}");
        assert!((r.integral - r.leading).abs() < 2.0 * PI * 0.01 * 0.01 * 5.0);
    }

    #[test]
    fn auxiliary_integrals_at_zero() {
        assert!((loop_length_integral(0.0) - TAU).abs() < 1e-14);
        assert!(field_moment_integral(0.0, 2.0).abs() < 1e-14);
    }

    #[test]
    fn lambda2_moment_of_the_ansatz() {
        let p = AnsatzParams::new(0.02, 4.0).unwrap();
        let r = lambda2_identity_check(&p, &PeriodicScalar::zeros(16), &grid()).unwrap();
        assert!((r.moment - TAU * 4.0).abs() < 1e-12);
        assert!(r.is_dominant());
        let bump = lambda2_identity_check(&p, &PeriodicScalar::cosine(16, 1, 0.5), &grid()).unwrap();
        assert!(bump.margin < r.margin - 1.0);
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let x: Vec<f64> = (0..5).map(|k| (0.002 / 2f64.powi(k)).ln()).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.25 * v).collect();
        assert!((log_log_slope(&x, &y) + 0.25).abs() < 1e-12);
        assert!(log_log_slope(&x[..1], &y[..1]).is_nan());
    }

    #[test]
    fn sweep_rejects_short_or_mixed_lists() {
        let cfg = SolverConfig::default();
        assert!(sweep_scaling(&model(), &[0.002, 0.001], &cfg, 1).is_err());
        let e = sweep_scaling(&model(), &[0.002, -0.001, 0.0005], &cfg, 1).unwrap_err();
        assert!(matches!(e.error, Error::WrongSign { .. }));
    }
}
