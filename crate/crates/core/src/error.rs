use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("ctg_c has a pole at t = {t} (s_c vanishes)")]
    ModelPole { t: f64 },

    #[error("{what} is undefined at t = {t}")]
    OutOfDomain { what: &'static str, t: f64 },

    #[error("point {point:?} lies outside the chart domain")]
    OutOfChart { point: Vec<f64> },

    #[error("metric is singular at {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("plane is degenerate (Gram determinant {gram:e})")]
    DegeneratePlane { gram: f64 },

    #[error("invalid tangent vector: {0}")]
    InvalidVector(String),

    #[error("signature mismatch: {0}")]
    Signature(String),

    #[error("radial geodesic left the chart at t = {t}")]
    ChartExit { t: f64 },

    #[error("integrator step collapsed at t = {t}")]
    StepCollapse { t: f64 },

    #[error("profile queried at t = {t} beyond its range [0, {t_max}]")]
    Extrapolation { t: f64, t_max: f64 },

    #[error("dimension {n} not supported for {what}")]
    UnsupportedDimension { n: usize, what: &'static str },

    #[error("conjugate point at t = {t} before the cut value {cut} along direction #{direction}")]
    ConjugateBeforeCut { direction: usize, t: f64, cut: f64 },

    #[error("conjugate point at t = {t} inside the comparison range")]
    ConjugateInRange { t: f64 },

    #[error(
        "model-domain violation: cut value {cut} reaches the model conjugate radius {limit} \
         (requires cut < pi/sqrt(-c))"
    )]
    ModelDomain { cut: f64, limit: f64 },

    #[error("hypothesis violated: {detail}")]
    HypothesisViolated { detail: String },

    #[error("condition {condition} not met: {detail}")]
    ConditionNotMet { condition: char, detail: String },

    #[error("Ricci curvatures coincide along the chosen direction ({ric1} vs {ric2})")]
    RicciEqual { ric1: f64, ric2: f64 },

    #[error("no positive comparison radius found up to t = {t_probe}")]
    DeltaNotFound { t_probe: f64 },

    #[error("expansion window unresolved: {0}")]
    WindowUnresolved(String),

    #[error("Monte-Carlo oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("base metric not supported: {0}")]
    BaseNotSupported(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// True for errors that signal a failed hypothesis or a violated domain
    /// condition rather than a numerical breakdown.
    pub fn is_hypothesis_or_domain(&self) -> bool {
        matches!(
            self,
            Error::ModelPole { .. }
                | Error::OutOfDomain { .. }
                | Error::ModelDomain { .. }
                | Error::HypothesisViolated { .. }
                | Error::ConditionNotMet { .. }
                | Error::RicciEqual { .. }
                | Error::ConjugateBeforeCut { .. }
                | Error::ConjugateInRange { .. }
                | Error::ChartExit { .. }
                | Error::InvalidSpec(_)
                | Error::BaseNotSupported(_)
                | Error::UnsupportedDimension { .. }
                | Error::OracleUnavailable(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
