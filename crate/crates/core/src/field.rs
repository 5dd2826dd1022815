//! Radial magnetic-field profiles `B(v) = b(|v|)`.
//!
//! Anything implementing [`RadialProfile`] gets the field value, its gradient
//! and the radial vector potential `Q(v) = (v/|v|²) ∫₀^{|v|} b(s) s ds`, which
//! satisfies `div Q = B` and `Q(e^{iθ}v) = e^{iθ}Q(v)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point;

/// Below this radius `Q` uses its Taylor limit `b(0)·v/2`.
const SMALL_RADIUS: f64 = 1e-7;

/// A radial profile `b(r)` together with what the solver needs from it.
pub trait RadialProfile: Send + Sync {
    /// `b(r)`.
    fn b(&self, r: f64) -> f64;

    /// `b'(r)/r`, kept in this form so the gradient `(b'(r)/r)·v` is smooth at 0.
    fn db_over_r(&self, r: f64) -> f64;

    /// `∫₀^r b(s) s ds`.
    fn flux(&self, r: f64) -> f64;

    fn field_at(&self, v: Point) -> f64 {
        self.b(v.norm())
    }

    fn gradient(&self, v: Point) -> Point {
        v * self.db_over_r(v.norm())
    }

    fn potential(&self, v: Point) -> Point {
        let r = v.norm();
        if r < SMALL_RADIUS {
            return v * (0.5 * self.b(0.0));
        }
        v * (self.flux(r) / (r * r))
    }
}

/// `B ≡ B₀`. Not an admissible model for the reduction (it has no decaying
/// part) but the natural control case for the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformField {
    pub strength: f64,
}

impl UniformField {
    pub fn new(strength: f64) -> Self {
        Self { strength }
    }
}

impl Default for UniformField {
    fn default() -> Self {
        Self { strength: 1.0 }
    }
}

impl RadialProfile for UniformField {
    fn b(&self, _r: f64) -> f64 {
        self.strength
    }

    fn db_over_r(&self, _r: f64) -> f64 {
        0.0
    }

    fn flux(&self, r: f64) -> f64 {
        0.5 * self.strength * r * r
    }
}

/// `B(v) = 1 + A(1+r²)^{−γ/2} + A₁(1+r²)^{−γ₁/2}`.
///
/// Behaves like `1 + A r^{−γ} + A₁ r^{−γ₁} + O(r^{−γ−2})` at infinity while
/// staying smooth at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldModel {
    #[serde(rename = "A")]
    pub a: f64,
    pub gamma: f64,
    #[serde(rename = "A1")]
    pub a1: f64,
    pub gamma1: f64,
}

impl FieldModel {
    /// Validated model: `A ≠ 0` and `1 < γ < γ₁`.
    pub fn new(a: f64, gamma: f64, a1: f64, gamma1: f64) -> Result<Self> {
        let m = Self {
            a,
            gamma,
            a1,
            gamma1,
        };
        m.validate()?;
        Ok(m)
    }

    /// Single-term model `1 + A(1+r²)^{−γ/2}` (`A₁ = 0`, `γ₁ = γ+1`).
    pub fn leading(a: f64, gamma: f64) -> Result<Self> {
        Self::new(a, gamma, 0.0, gamma + 1.0)
    }

    /// `A = A₁ = 0`, i.e. `B ≡ 1`, bypassing validation. Only for controls.
    pub fn unperturbed() -> Self {
        Self {
            a: 0.0,
            gamma: 2.0,
            a1: 0.0,
            gamma1: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.a, self.gamma, self.a1, self.gamma1];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("field parameters must be finite".into()));
        }
        if self.a == 0.0 {
            return Err(Error::InvalidParams("field amplitude A must be nonzero".into()));
        }
        if !(1.0 < self.gamma && self.gamma < self.gamma1) {
            return Err(Error::InvalidParams(format!(
                "need 1 < gamma < gamma1, got gamma = {}, gamma1 = {}",
                self.gamma, self.gamma1
            )));
        }
        Ok(())
    }

    /// `β = min{1, γ₁ − γ}`.
    pub fn beta(&self) -> f64 {
        (self.gamma1 - self.gamma).min(1.0)
    }

    /// Remainder `B₁(v)` in `B = 1 + A|v|^{−γ} + B₁(v)|v|^{−γ−β}`.
    pub fn remainder(&self, r: f64) -> f64 {
        let rest = self.b(r) - 1.0 - self.a * r.powf(-self.gamma);
        rest * r.powf(self.gamma + self.beta())
    }
}

/// `(1+r²)^{−γ/2}` and its helpers.
fn decay(r2: f64, gamma: f64) -> f64 {
    (-0.5 * gamma * r2.ln_1p()).exp()
}

/// `∫₀^r s(1+s²)^{−γ/2} ds`, with the logarithmic branch at `γ = 2`.
fn decay_flux(r: f64, gamma: f64) -> f64 {
    let l = (r * r).ln_1p();
    if (gamma - 2.0).abs() < 1e-9 {
        0.5 * l
    } else {
        // [1 − (1+r²)^{1−γ/2}] / (γ−2), written to stay accurate near γ = 2.
        -((1.0 - 0.5 * gamma) * l).exp_m1() / (gamma - 2.0)
    }
}

impl RadialProfile for FieldModel {
    fn b(&self, r: f64) -> f64 {
        let r2 = r * r;
        1.0 + self.a * decay(r2, self.gamma) + self.a1 * decay(r2, self.gamma1)
    }

    fn db_over_r(&self, r: f64) -> f64 {
        let r2 = r * r;
        -self.gamma * self.a * decay(r2, self.gamma + 2.0)
            - self.gamma1 * self.a1 * decay(r2, self.gamma1 + 2.0)
    }

    fn flux(&self, r: f64) -> f64 {
        0.5 * r * r + self.a * decay_flux(r, self.gamma) + self.a1 * decay_flux(r, self.gamma1)
    }
}

/// `|Q(e^{iθ}v) − e^{iθ}Q(v)|`.
pub fn rotation_equivariance_check(profile: &impl RadialProfile, v: Point, theta: f64) -> f64 {
    let rot = Point::from_polar(1.0, theta);
    (profile.potential(rot * v) - rot * profile.potential(v)).norm()
}
