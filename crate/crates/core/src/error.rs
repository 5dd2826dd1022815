use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid/mode-count mismatch or otherwise inconsistent numerical setup.
    #[error("configuration error: {0}")]
    Config(String),

    /// Parameters outside the admissible set of a domain type.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// `l0_invert` was handed a right-hand side with first-harmonic content.
    #[error("not in the range of L0: first harmonics (c={c:.3e}, s={s:.3e}) exceed tolerance {tol:.3e}")]
    NotInRange { c: f64, s: f64, tol: f64 },

    #[error("degenerate curve: min |u'| = {min_speed:.3e}")]
    DegenerateCurve { min_speed: f64 },

    /// The perturbed curve left the immersed-curve domain.
    #[error("perturbation leaves the immersed-curve domain: min |u'| = {min_speed:.3e}")]
    NotInDomain { min_speed: f64 },

    #[error("fixed-point iteration did not contract: {iterations} iterations, last C2 increment {last_increment:.3e}")]
    NonContraction { iterations: usize, last_increment: f64 },

    #[error("eps = {eps} must have the same sign as A = {a}")]
    WrongSign { eps: f64, a: f64 },

    #[error(
        "no sign change of lambda1 over the window [{rho_lo}, {rho_hi}] \
         (lambda1 = {lambda_lo:.3e}, {lambda_hi:.3e}); try a smaller |eps|"
    )]
    Window {
        rho_lo: f64,
        rho_hi: f64,
        lambda_lo: f64,
        lambda_hi: f64,
    },

    #[error("lambda2 = {lambda2:.3e} did not vanish (bound {bound:.3e})")]
    MultiplierNotVanishing { lambda2: f64, bound: f64 },

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in diagnostic payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::InvalidParams(_) => "invalid_params",
            Error::NotInRange { .. } => "not_in_range",
            Error::DegenerateCurve { .. } => "degenerate_curve",
            Error::NotInDomain { .. } => "not_in_domain",
            Error::NonContraction { .. } => "non_contraction",
            Error::WrongSign { .. } => "wrong_sign",
            Error::Window { .. } => "window",
            Error::MultiplierNotVanishing { .. } => "multiplier_not_vanishing",
            Error::Integrator(_) => "integrator",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
