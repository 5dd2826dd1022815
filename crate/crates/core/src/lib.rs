//! Bounded trajectories of a charged particle in a cylindrically symmetric
//! magnetic field.
//!
//! The crate builds epicyclic curves `u = u_{ε,ρ} + φ n_{ε,ρ}` whose curvature
//! equals the field strength along the curve, then checks them against direct
//! integration of the planar Lorentz system `v'' = i B(v) v'`.
//!
//! * [`spectral`]: periodic scalar functions, `L₀ = d²/dt² + 1` and its inverse.
//! * [`geometry`]: ansatz curves, normal fields, the curvature operator and its
//!   linearization.
//! * [`field`]: radial field profiles, gradients and the vector potential.
//! * [`reduction`]: the projected fixed point, the root-find on `ρ`, energy
//!   diagnostics and scaling sweeps.
//! * [`dynamics`]: Runge–Kutta integration, arc-length reparametrization and
//!   cross-validation of solved curves.
//! * [`cli`]: JSON-configured workflows and result files.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod reduction;
pub mod spectral;

pub use dynamics::{Method, SimConfig, Trajectory, VerifyConfig, VerifyReport};
pub use error::{Error, Result};
pub use field::{FieldModel, RadialProfile, UniformField};
pub use geometry::{AnsatzParams, CurveJet, NormalJet, ParametricCurve, PerturbedCurve};
pub use reduction::{ReducedSolution, RootSolve, ScalingReport, SolverConfig};
pub use spectral::{PeriodicScalar, UniformGrid};

/// Planar points and vectors are complex numbers; `i·v` is the rotation by π/2.
pub type Point = num_complex::Complex64;

/// Euclidean dot product of two planar vectors.
#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a.re * b.re + a.im * b.im
}

/// `i·v`, the counter-clockwise quarter turn.
#[inline]
pub fn rot90(v: Point) -> Point {
    Point::new(-v.im, v.re)
}
