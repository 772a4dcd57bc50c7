//! Generalized evolutionary systems over dual (strong/weak) metric spaces:
//! pullback images of trajectory families, finite-depth approximations of
//! pullback omega-limits, and diagnostics for attraction, invariance,
//! tracking and energy inequalities.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`, with `*32` variants for `f32`.

pub mod energy;
pub mod error;
pub mod evolution;
pub mod io;
pub mod metric;
pub mod ode;
pub mod omega;
pub mod scalar;
pub mod state;
pub mod symbols;

pub use energy::{energy_inequality_check, EnergyCheckReport, EnergyViolation, IntegralEnergy};
pub use error::{Error, Result};
pub use evolution::{
    compose_check, pullback_image, weak_c_convergence_check, BranchSelect, CompleteTrajectories,
    EnergyRates, EnsembleEntry, SeedSource, TrajectoryFamily, WeakContinuity,
};
pub use metric::{MetricKind, Quadrature, Truncated, WeakMetric};
pub use omega::{
    attraction_diagnostic, forward_omega, invariance_check, minimality_against, minimality_check,
    omega_pullback, pac_check, tracking_check, AttractionVerdict, InvarianceKind,
    InvarianceOptions, OmegaKind, OmegaOptions, PacVerdict, ProfilePoint, ScheduleMode, SetFamily,
    Verdict,
};
pub use scalar::Scalar;
pub use state::{index_len, index_max_norm, MultiIndex};
pub use symbols::{
    per_symbol_pullback, shift_identity_check, uniform_omega, union_inclusion_check, SymbolFamily,
    UnionInclusionReport,
};

pub type State = state::CoeffState<f64>;
pub type State32 = state::CoeffState<f32>;
pub type Space = metric::DualMetricSpace<f64>;
pub type Space32 = metric::DualMetricSpace<f32>;
pub type Ensemble = evolution::PullbackEnsemble<f64>;
pub type Schedule = omega::PullbackSchedule<f64>;
pub type Schedule32 = omega::PullbackSchedule<f32>;
pub type Omega = omega::OmegaApprox<f64>;
pub type Omega32 = omega::OmegaApprox<f32>;
pub type Symbols = symbols::SymbolSpace<f64>;
pub type Family = dyn evolution::TrajectoryFamily<f64>;
pub type Family32 = dyn evolution::TrajectoryFamily<f32>;
