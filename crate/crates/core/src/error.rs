use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("state is not normalized (trace {trace})")]
    NotNormalized { trace: f64 },
    #[error("degenerate state with trace {trace}")]
    Degenerate { trace: f64 },
    #[error("positivity violated: Bloch vector exceeds the ball by {overshoot:e} (relative)")]
    PositivityViolation { overshoot: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    Invalid { name: &'static str, value: f64, reason: &'static str },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("integrator step too large at t = {t}: {source}")]
    StepTooLarge {
        t: f64,
        #[source]
        source: StateError,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not reach tolerance {tol:e} (estimated error {estimate:e})")]
    ToleranceNotReached { tol: f64, estimate: f64 },
    #[error("integrand returned a non-finite value at {at}")]
    NonFinite { at: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("parameter {name} = {value} outside its domain {domain}")]
    Domain { name: &'static str, value: f64, domain: &'static str },
    #[error("stationary density is not normalizable at eta = {eta} (point mass at beta = 1)")]
    NonNormalizable { eta: f64 },
    #[error("stationary density is degenerate at eta = {eta} (point mass at beta = 0)")]
    DegenerateDensity { eta: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("|upsilon| = {abs_upsilon} exceeds eta = {eta}")]
    UpsilonTooLarge { eta: f64, abs_upsilon: f64 },
    #[error("eta = {eta} outside [0, 1]")]
    EtaOutOfRange { eta: f64 },
    #[error("dt must be positive, got {dt}")]
    NonPositiveDt { dt: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error("step {step} at t = {t}: {source}")]
    Step {
        step: u64,
        t: f64,
        #[source]
        source: StateError,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteeringError {
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("label has {got} components but the bin specification needs {want}")]
    LabelShape { got: usize, want: usize },
    #[error("no bin has at least two outcomes on axis {axis}")]
    InsufficientOutcomes { axis: char },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
