//! Quantum-trajectory simulation of a resonantly driven two-level atom under
//! several detection schemes, and an EPR-steering analysis of the resulting
//! conditional ensembles.
//!
//! Time is measured in units of the decay rate: `γ = 1` unless a function
//! takes `gamma` explicitly.
//!
//! Module map:
//! - [`state`], [`operator`]: Bloch-form state algebra and 2×2 operators.
//! - [`lindblad`]: unconditional master equation in the lab and secular frames.
//! - [`said`]: spectrally resolved adaptive photon counting (jump unravelling).
//! - [`homodyne`]: diffusive unravellings (X/Y homodyne, general `(η, υ)`).
//! - [`beta_oracle`]: stationary Fokker–Planck reference for secular Y homodyne.
//! - [`steering`]: Alice/Bob protocol, binned estimator, critical efficiency.
//! - [`null_model`]: simultaneous SAID + Y monitoring (the objective-state model).

pub mod beta_oracle;
pub mod error;
pub mod homodyne;
pub mod lindblad;
pub mod null_model;
pub mod operator;
pub mod quadrature;
pub mod rng;
pub mod said;
pub mod state;
pub mod stats;
pub mod trajectory;
pub mod steering;

pub use error::{
    ConfigError, IntegrationError, NoiseError, OracleError, QuadError, SimError, StateError,
    SteeringError,
};
pub use state::{BlochState, JumpKind, JumpOperator, SteeringFunctionals};
