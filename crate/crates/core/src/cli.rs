//! JSON-configured workflows and their result files.
//!
//! A run is described by one JSON document ([`RunConfig`]). [`run`] dispatches
//! on `command`, writes the result to `output_path` and returns the process
//! exit code: 0 on success, 1 when the configuration is invalid, 2 when a
//! solver or integrator fails. On failure the output file holds a JSON
//! [`Diagnostic`] instead of the result, whatever the requested format.
//!
//! CSV files have a header row, LF line endings and floats written with 17
//! significant digits, so every value reads back to the same `f64`.

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dynamics::{integrate_lorentz3d, integrate_planar, verify_solution, SimConfig, VerifyConfig, VerifyReport};
use crate::error::{Error, Result};
use crate::field::{FieldModel, RadialProfile, UniformField};
use crate::geometry::{AnsatzParams, ParametricCurve};
use crate::reduction::{solve_rho, sweep_scaling, ReducedSolution, RootSolve, ScalingReport, SolverConfig};
use crate::{PeriodicScalar, Point};

/// Denominators tried when looking for `ε = m/n`.
pub const MAX_CLOSURE_DENOMINATOR: u32 = 1000;
/// Tolerance of `|ε − m/n|` for `ε` to count as rational.
pub const RATIONAL_TOL: f64 = 1e-14;
pub const MIN_CURVE_SAMPLES: usize = 16;
pub const DEFAULT_CURVE_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Root-find `ρ_ε` and report the solved curve.
    Solve,
    /// Solve over a list of `ε` and fit the scaling slopes.
    Sweep,
    /// Integrate the Lorentz equations from an initial state.
    Simulate,
    /// Solve, then integrate from the solved curve and measure the deviation.
    Verify,
    /// Sample an ansatz or solved curve in fast time.
    Curve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Curve => "curve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Field section of the config: either the model `1 + A(1+r²)^{−γ/2} + …`
/// (`A`, `gamma`, optionally `A1`, `gamma1`) or `uniform: B₀`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "A1", default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    /// Defaults to `gamma + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<f64>,
}

impl FieldConfig {
    pub fn model(m: &FieldModel) -> Self {
        Self {
            a: Some(m.a),
            gamma: Some(m.gamma),
            a1: Some(m.a1),
            gamma1: Some(m.gamma1),
            uniform: None,
        }
    }

    pub fn uniform(strength: f64) -> Self {
        Self {
            uniform: Some(strength),
            ..Self::default()
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform.is_some()
    }

    /// The decaying model; fails for a uniform field or missing `A`/`gamma`.
    pub fn to_model(&self) -> Result<FieldModel> {
        if self.uniform.is_some() {
            return Err(Error::Config(
                "field.uniform cannot be used here: this command needs field.A and field.gamma".into(),
            ));
        }
        let a = self.a.ok_or_else(|| Error::Config("missing field.A".into()))?;
        let gamma = self.gamma.ok_or_else(|| Error::Config("missing field.gamma".into()))?;
        FieldModel::new(a, gamma, self.a1.unwrap_or(0.0), self.gamma1.unwrap_or(gamma + 1.0))
    }

    pub fn to_profile(&self) -> Result<Box<dyn RadialProfile>> {
        match self.uniform {
            Some(b0) if self.a.is_some() || self.gamma.is_some() || self.a1.is_some() || self.gamma1.is_some() => {
                Err(Error::Config(format!(
                    "field.uniform = {b0} cannot be combined with field.A, gamma, A1 or gamma1"
                )))
            }
            Some(b0) if b0.is_finite() => Ok(Box::new(UniformField::new(b0))),
            Some(b0) => Err(Error::Config(format!("field.uniform must be finite, got {b0}"))),
            None => Ok(Box::new(self.to_model()?)),
        }
    }
}

/// Initial state for `simulate`: planar `(v0, w0)` with `|w0| = 1`, or
/// spatial `(q0, qd0, mass, charge)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qd0: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<f64>,
}

impl InitialState {
    pub fn planar(v0: Point, w0: Point) -> Self {
        Self {
            v0: Some(v0),
            w0: Some(w0),
            ..Self::default()
        }
    }

    pub fn spatial(q0: [f64; 3], qd0: [f64; 3], mass: f64, charge: f64) -> Self {
        Self {
            q0: Some(q0),
            qd0: Some(qd0),
            mass: Some(mass),
            charge: Some(charge),
            ..Self::default()
        }
    }

    fn is_spatial(&self) -> bool {
        self.q0.is_some() || self.qd0.is_some() || self.mass.is_some() || self.charge.is_some()
    }
}

/// One run, as read from the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    /// For `curve`: sample the ansatz at this `ρ` instead of solving.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    /// For `curve`; defaults to [`DEFAULT_CURVE_SAMPLES`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Fast-time span for `curve` when `ε` is irrational; defaults to `2π/|ε|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Worker threads for `sweep`; defaults to the available parallelism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// Recorded in the output only; the pipeline is deterministic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            field: None,
            eps: None,
            eps_list: None,
            rho: None,
            solver: SolverConfig::default(),
            sim: None,
            verify: VerifyConfig::default(),
            initial: None,
            samples: None,
            span: None,
            output_path: None,
            format: Format::default(),
            jobs: None,
            seed: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("cannot parse config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// `output_path`, or `result.<ext>` in the working directory.
    pub fn resolved_output(&self) -> PathBuf {
        self.output_path
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("result.{}", self.format.extension())))
    }

    fn require_eps(&self) -> Result<f64> {
        match self.eps {
            Some(e) if e.is_finite() => Ok(e),
            Some(e) => Err(Error::Config(format!("eps must be finite, got {e}"))),
            None => Err(Error::Config(format!("missing eps (required by {})", self.command.name()))),
        }
    }

    fn require_field(&self) -> Result<&FieldConfig> {
        self.field
            .as_ref()
            .ok_or_else(|| Error::Config(format!("missing field (required by {})", self.command.name())))
    }

    fn require_sim(&self) -> Result<&SimConfig> {
        self.sim
            .as_ref()
            .ok_or_else(|| Error::Config("missing sim (required by simulate)".into()))
    }

    /// Command-specific checks that parsing cannot express.
    pub fn validate(&self) -> Result<()> {
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        match self.command {
            Command::Solve | Command::Verify => {
                let m = self.require_field()?.to_model()?;
                self.solver.validate()?;
                check_sign(&m, self.require_eps()?)?;
                if self.command == Command::Verify {
                    self.verify_sim_config(1.0).validate()?;
                    if !(self.verify.slow_periods > 0.0) {
                        return Err(Error::Config("verify.slow_periods must be positive".into()));
                    }
                }
            }
            Command::Sweep => {
                let m = self.require_field()?.to_model()?;
                self.solver.validate()?;
                let list = self
                    .eps_list
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing eps_list (required by sweep)".into()))?;
                if list.len() < 3 {
                    return Err(Error::Config(format!(
                        "eps_list needs at least 3 values, got {}",
                        list.len()
                    )));
                }
                for &eps in list {
                    check_sign(&m, eps)?;
                }
            }
            Command::Simulate => {
                self.require_field()?.to_profile()?;
                self.require_sim()?.validate()?;
                let init = self
                    .initial
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing initial (required by simulate)".into()))?;
                if init.is_spatial() {
                    let missing = [
                        ("q0", init.q0.is_none()),
                        ("qd0", init.qd0.is_none()),
                        ("mass", init.mass.is_none()),
                        ("charge", init.charge.is_none()),
                    ];
                    if let Some((name, _)) = missing.iter().find(|m| m.1) {
                        return Err(Error::Config(format!("missing initial.{name}")));
                    }
                    if init.v0.is_some() || init.w0.is_some() {
                        return Err(Error::Config(
                            "initial: give either v0/w0 or q0/qd0/mass/charge, not both".into(),
                        ));
                    }
                } else {
                    if init.v0.is_none() {
                        return Err(Error::Config("missing initial.v0".into()));
                    }
                    if init.w0.is_none() {
                        return Err(Error::Config("missing initial.w0".into()));
                    }
                }
            }
            Command::Curve => {
                let eps = self.require_eps()?;
                match self.rho {
                    Some(rho) => {
                        AnsatzParams::new(eps, rho)?;
                    }
                    None => {
                        let m = self.require_field()?.to_model()?;
                        self.solver.validate()?;
                        check_sign(&m, eps)?;
                    }
                }
                let samples = self.samples.unwrap_or(DEFAULT_CURVE_SAMPLES);
                if samples < MIN_CURVE_SAMPLES {
                    return Err(Error::Config(format!(
                        "samples must be at least {MIN_CURVE_SAMPLES}, got {samples}"
                    )));
                }
                if let Some(span) = self.span {
                    if !(span > 0.0 && span.is_finite()) {
                        return Err(Error::Config(format!("span must be positive, got {span}")));
                    }
                }
            }
        }
        Ok(())
    }

    fn verify_sim_config(&self, duration: f64) -> SimConfig {
        SimConfig {
            method: self.verify.integrator,
            duration,
            sample_interval: Some(self.verify.sample_interval),
            max_steps: SimConfig::adaptive(1.0, 1.0).max_steps,
        }
    }
}

fn check_sign(m: &FieldModel, eps: f64) -> Result<()> {
    if eps == 0.0 || eps.signum() != m.a.signum() {
        return Err(Error::WrongSign { eps, a: m.a });
    }
    Ok(())
}

/// Exit code for an error: 1 for configuration problems, 2 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParams(_) | Error::WrongSign { .. } | Error::Json(_) | Error::Io(_) => 1,
        Error::NotInRange { .. }
        | Error::DegenerateCurve { .. }
        | Error::NotInDomain { .. }
        | Error::NonContraction { .. }
        | Error::Window { .. }
        | Error::MultiplierNotVanishing { .. }
        | Error::Integrator(_) => 2,
    }
}

/// Written in place of the result when a run fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub status: String,
    pub command: Option<Command>,
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
    /// Whatever was computed before the failure, e.g. the finished part of a sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial: Option<Value>,
}

impl Diagnostic {
    pub fn from_error(command: Option<Command>, e: &Error, partial: Option<Value>) -> Self {
        Self {
            status: "error".into(),
            command,
            kind: e.kind().into(),
            message: e.to_string(),
            exit_code: exit_code(e),
            partial,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &to_json(self))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub status: String,
    pub command: Command,
    pub field: FieldModel,
    pub eps: f64,
    pub rho_eps: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eq_residual: f64,
    pub fix_residual: f64,
    pub iterations: usize,
    pub phi_c2: f64,
    pub phi: PeriodicScalar,
    pub window: (f64, f64),
    pub endpoint_lambda1: (f64, f64),
    /// Number of fixed-point solves done by the root-find.
    pub evaluations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SolveOutput {
    pub fn new(field: FieldModel, r: &RootSolve, seed: Option<u64>) -> Self {
        let s = &r.solution;
        Self {
            status: "ok".into(),
            command: Command::Solve,
            field,
            eps: s.params.eps,
            rho_eps: r.rho_eps,
            lambda1: s.lambda1,
            lambda2: s.lambda2,
            eq_residual: s.eq_residual,
            fix_residual: s.fix_residual,
            iterations: s.iterations,
            phi_c2: s.phi_c2,
            phi: s.phi.clone(),
            window: r.window,
            endpoint_lambda1: r.endpoint_lambda1,
            evaluations: r.trace.len() + 1,
            seed,
        }
    }

    /// The solved curve, rebuilt from the output.
    pub fn solution_params(&self) -> Result<AnsatzParams> {
        AnsatzParams::new(self.eps, self.rho_eps)
    }

    fn to_csv(&self) -> String {
        csv(
            &["eps", "rho", "lambda1", "lambda2", "eq_residual", "fix_residual", "phi_c2", "iterations"],
            [vec![
                num(self.eps),
                num(self.rho_eps),
                num(self.lambda1),
                num(self.lambda2),
                num(self.eq_residual),
                num(self.fix_residual),
                num(self.phi_c2),
                self.iterations.to_string(),
            ]],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub status: String,
    pub command: Command,
    pub field: FieldModel,
    pub report: ScalingReport,
}

/// Contents of the `<output>.slopes.json` sidecar written by `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeSummary {
    pub fitted_rho_slope: f64,
    pub fitted_phi_slope: f64,
    pub eps_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub phi_norms: Vec<f64>,
}

impl SlopeSummary {
    pub fn new(r: &ScalingReport) -> Self {
        Self {
            fitted_rho_slope: r.fitted_rho_slope,
            fitted_phi_slope: r.fitted_phi_slope,
            eps_values: r.eps_values.clone(),
            rho_values: r.rho_values.clone(),
            phi_norms: r.phi_norms.clone(),
        }
    }
}

/// Path of the slope sidecar for a sweep written to `output`.
pub fn slopes_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".slopes.json");
    PathBuf::from(s)
}

fn sweep_csv(r: &ScalingReport) -> String {
    csv(
        &["eps", "rho", "phi_c2"],
        r.eps_values
            .iter()
            .zip(&r.rho_values)
            .zip(&r.phi_norms)
            .map(|((e, rho), p)| vec![num(*e), num(*rho), num(*p)]),
    )
}

/// Planar trajectories have empty `z` columns in JSON and none in CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub status: String,
    pub command: Command,
    pub t: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

impl SimulateOutput {
    fn to_csv(&self) -> String {
        let dim = self.positions.first().map_or(2, Vec::len);
        let header: &[&str] = if dim == 3 {
            &["t", "x", "y", "z", "vx", "vy", "vz"]
        } else {
            &["t", "x", "y", "vx", "vy"]
        };
        csv(
            header,
            self.t.iter().zip(&self.positions).zip(&self.velocities).map(|((t, q), v)| {
                std::iter::once(*t).chain(q.iter().copied()).chain(v.iter().copied()).map(num).collect()
            }),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub status: String,
    pub command: Command,
    pub field: FieldModel,
    pub eps: f64,
    pub rho_eps: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eq_residual: f64,
    pub report: VerifyReport,
}

impl VerifyOutput {
    fn to_csv(&self) -> String {
        let r = &self.report;
        csv(
            &[
                "eps",
                "rho",
                "eq_residual",
                "fast_period_length",
                "duration",
                "samples",
                "fast_period_deviation",
                "deviation",
                "speed_drift",
                "r_min",
                "r_max",
                "inner_margin",
                "outer_margin",
            ],
            [vec![
                num(self.eps),
                num(self.rho_eps),
                num(self.eq_residual),
                num(r.fast_period_length),
                num(r.duration),
                r.samples.to_string(),
                num(r.fast_period_deviation),
                num(r.deviation),
                num(r.speed_drift),
                num(r.r_min),
                num(r.r_max),
                num(r.inner_margin),
                num(r.outer_margin),
            ]],
        )
    }
}

/// Curve to sample in [`emit_curve`].
#[derive(Debug, Clone, PartialEq)]
pub enum CurveSource {
    Ansatz(AnsatzParams),
    Solved(ReducedSolution),
}

impl CurveSource {
    pub fn params(&self) -> AnsatzParams {
        match self {
            CurveSource::Ansatz(p) => *p,
            CurveSource::Solved(s) => s.params,
        }
    }

    /// Position at fast time `τ`, i.e. curve time `t = (1−ε)τ`.
    pub fn fast_time_point(&self, tau: f64) -> Point {
        match self {
            CurveSource::Ansatz(p) => p.fast_time_point(tau),
            CurveSource::Solved(s) => s.curve().position((1.0 - s.params.eps) * tau),
        }
    }
}

/// Sampled curve. `t` is fast time; both ends of the span are included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveOutput {
    pub status: String,
    pub command: Command,
    pub eps: f64,
    pub rho: f64,
    /// `2πn` when `ε = m/n`.
    pub closure_period: Option<f64>,
    /// `n − m` when `ε = m/n`: the turns of the relative phase `(1−ε)τ`.
    pub curls: Option<u32>,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<ReducedSolution>,
}

impl CurveOutput {
    fn to_csv(&self) -> String {
        csv(
            &["t", "x", "y"],
            self.t
                .iter()
                .zip(&self.x)
                .zip(&self.y)
                .map(|((t, x), y)| vec![num(*t), num(*x), num(*y)]),
        )
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// `(m, n)` with `n ≤ max_den`, `gcd(m, n) = 1` and `|ε − m/n| ≤ RATIONAL_TOL`.
pub fn rational_approximation(eps: f64, max_den: u32) -> Option<(i64, u32)> {
    (1..=max_den).find_map(|n| {
        let m = (eps * n as f64).round();
        ((eps - m / n as f64).abs() <= RATIONAL_TOL).then_some((m as i64, n))
    })
}

/// Samples a curve over its closing period (rational `ε`) or `span`.
pub fn curve_output(source: &CurveSource, samples: usize, span: Option<f64>) -> Result<CurveOutput> {
    if samples < MIN_CURVE_SAMPLES {
        return Err(Error::Config(format!(
            "samples must be at least {MIN_CURVE_SAMPLES}, got {samples}"
        )));
    }
    let p = source.params();
    let rational = rational_approximation(p.eps, MAX_CLOSURE_DENOMINATOR);
    let closure_period = rational.map(|(_, n)| TAU * n as f64);
    let curls = rational.map(|(m, n)| (n as i64 - m) as u32);
    let length = match (closure_period, span) {
        (Some(period), _) => period,
        (None, Some(s)) => s,
        (None, None) => TAU / p.eps.abs(),
    };
    let t: Vec<f64> = (0..samples)
        .map(|j| length * j as f64 / (samples - 1) as f64)
        .collect();
    let points: Vec<Point> = t.iter().map(|&tau| source.fast_time_point(tau)).collect();
    Ok(CurveOutput {
        status: "ok".into(),
        command: Command::Curve,
        eps: p.eps,
        rho: p.rho,
        closure_period,
        curls,
        t,
        x: points.iter().map(|z| z.re).collect(),
        y: points.iter().map(|z| z.im).collect(),
        solution: match source {
            CurveSource::Solved(s) => Some(s.clone()),
            CurveSource::Ansatz(_) => None,
        },
    })
}

/// Samples the curve and writes it to `path`.
pub fn emit_curve(
    source: &CurveSource,
    samples: usize,
    span: Option<f64>,
    path: &Path,
    format: Format,
) -> Result<CurveOutput> {
    let out = curve_output(source, samples, span)?;
    let text = match format {
        Format::Csv => out.to_csv(),
        Format::Json => to_json(&out),
    };
    write_file(path, &text)?;
    Ok(out)
}

/// Result of a successful run, ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutput {
    Solve(SolveOutput),
    Sweep(SweepOutput),
    Simulate(SimulateOutput),
    Verify(VerifyOutput),
    Curve(CurveOutput),
}

impl RunOutput {
    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        let text = match (self, format) {
            (RunOutput::Solve(o), Format::Json) => to_json(o),
            (RunOutput::Solve(o), Format::Csv) => o.to_csv(),
            (RunOutput::Sweep(o), Format::Json) => to_json(o),
            (RunOutput::Sweep(o), Format::Csv) => sweep_csv(&o.report),
            (RunOutput::Simulate(o), Format::Json) => to_json(o),
            (RunOutput::Simulate(o), Format::Csv) => o.to_csv(),
            (RunOutput::Verify(o), Format::Json) => to_json(o),
            (RunOutput::Verify(o), Format::Csv) => o.to_csv(),
            (RunOutput::Curve(o), Format::Json) => to_json(o),
            (RunOutput::Curve(o), Format::Csv) => o.to_csv(),
        };
        write_file(path, &text)?;
        if let RunOutput::Sweep(o) = self {
            write_file(&slopes_path(path), &to_json(&SlopeSummary::new(&o.report)))?;
        }
        Ok(())
    }
}

/// A failed run: the error and anything worth keeping from before it.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Option<Value>,
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        Self { error, partial: None }
    }
}

/// Validates and executes a run without touching the file system.
pub fn execute(config: &RunConfig) -> std::result::Result<RunOutput, RunFailure> {
    config.validate()?;
    let jobs = config
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    match config.command {
        Command::Solve => {
            let m = config.require_field()?.to_model()?;
            let r = solve_rho(&m, config.require_eps()?, &config.solver)?;
            Ok(RunOutput::Solve(SolveOutput::new(m, &r, config.seed)))
        }
        Command::Sweep => {
            let m = config.require_field()?.to_model()?;
            let list = config.eps_list.as_deref().unwrap_or_default();
            match sweep_scaling(&m, list, &config.solver, jobs) {
                Ok(report) => Ok(RunOutput::Sweep(SweepOutput {
                    status: "ok".into(),
                    command: Command::Sweep,
                    field: m,
                    report,
                })),
                Err(f) => Err(RunFailure {
                    partial: serde_json::to_value(SlopeSummary::new(&f.partial)).ok(),
                    error: f.error,
                }),
            }
        }
        Command::Simulate => {
            let field = config.require_field()?.to_profile()?;
            let sim = config.require_sim()?;
            let init = config.initial.expect("validated");
            let out = if init.is_spatial() {
                let tr = integrate_lorentz3d(
                    field.as_ref(),
                    init.q0.expect("validated"),
                    init.qd0.expect("validated"),
                    init.mass.expect("validated"),
                    init.charge.expect("validated"),
                    sim,
                )?;
                SimulateOutput {
                    status: "ok".into(),
                    command: Command::Simulate,
                    t: tr.times,
                    positions: tr.positions.iter().map(|q| q.to_vec()).collect(),
                    velocities: tr.velocities.iter().map(|q| q.to_vec()).collect(),
                }
            } else {
                let tr = integrate_planar(field.as_ref(), init.v0.expect("validated"), init.w0.expect("validated"), sim)?;
                SimulateOutput {
                    status: "ok".into(),
                    command: Command::Simulate,
                    t: tr.times,
                    positions: tr.positions.iter().map(|z| vec![z.re, z.im]).collect(),
                    velocities: tr.velocities.iter().map(|z| vec![z.re, z.im]).collect(),
                }
            };
            Ok(RunOutput::Simulate(out))
        }
        Command::Verify => {
            let m = config.require_field()?.to_model()?;
            let eps = config.require_eps()?;
            let r = solve_rho(&m, eps, &config.solver)?;
            let s = &r.solution;
            let report = verify_solution(&m, s, &config.verify).map_err(|error| RunFailure {
                error,
                partial: serde_json::to_value(SolveOutput::new(m, &r, config.seed)).ok(),
            })?;
            Ok(RunOutput::Verify(VerifyOutput {
                status: "ok".into(),
                command: Command::Verify,
                field: m,
                eps,
                rho_eps: r.rho_eps,
                lambda1: s.lambda1,
                lambda2: s.lambda2,
                eq_residual: s.eq_residual,
                report,
            }))
        }
        Command::Curve => {
            let eps = config.require_eps()?;
            let source = match config.rho {
                Some(rho) => CurveSource::Ansatz(AnsatzParams::new(eps, rho)?),
                None => {
                    let m = config.require_field()?.to_model()?;
                    CurveSource::Solved(solve_rho(&m, eps, &config.solver)?.solution)
                }
            };
            let samples = config.samples.unwrap_or(DEFAULT_CURVE_SAMPLES);
            Ok(RunOutput::Curve(curve_output(&source, samples, config.span)?))
        }
    }
}

/// Executes a run, writes the result (or a diagnostic) and returns the exit code.
pub fn run(config: &RunConfig) -> i32 {
    let path = config.resolved_output();
    let failure = match execute(config) {
        Ok(out) => match out.write(&path, config.format) {
            Ok(()) => return 0,
            Err(error) => RunFailure { error, partial: None },
        },
        Err(f) => f,
    };
    report_failure(Some(config.command), &failure, &path)
}

fn report_failure(command: Option<Command>, f: &RunFailure, path: &Path) -> i32 {
    let d = Diagnostic::from_error(command, &f.error, f.partial.clone());
    eprintln!("error ({}): {}", d.kind, d.message);
    if let Err(e) = d.write(path) {
        eprintln!("could not write diagnostic to {}: {e}", path.display());
    }
    d.exit_code
}

#[derive(Debug, Clone, Parser)]
#[command(name = "magtrap", version, about = "Bounded charged-particle orbits in radial magnetic fields")]
pub struct CliArgs {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Result file; overrides `output_path` in the config.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sweeps.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Recorded in the output; has no effect on the computation.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
}

/// `<config stem>.out.<ext>` next to the config file.
fn default_output(config: &Path, format: Format) -> PathBuf {
    let stem = config.file_stem().map_or_else(|| "result".into(), |s| s.to_string_lossy().into_owned());
    config.with_file_name(format!("{stem}.out.{}", format.extension()))
}

/// Reads the config named on the command line, applies flag overrides and runs it.
pub fn run_cli(args: &CliArgs) -> i32 {
    let loaded = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", args.config.display())))
        .and_then(|text| RunConfig::from_json(&text));
    let mut config = match loaded {
        Ok(c) => c,
        Err(error) => {
            let format = args.format.unwrap_or_default();
            let path = args.output.clone().unwrap_or_else(|| default_output(&args.config, format));
            return report_failure(None, &RunFailure { error, partial: None }, &path);
        }
    };
    if let Some(f) = args.format {
        config.format = f;
    }
    if let Some(p) = &args.output {
        config.output_path = Some(p.clone());
    }
    if config.output_path.is_none() {
        config.output_path = Some(default_output(&args.config, config.format));
    }
    if args.jobs.is_some() {
        config.jobs = args.jobs;
    }
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    run(&config)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv<R: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: R) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}
