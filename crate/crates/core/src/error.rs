use thiserror::Error;

use crate::model::{NetworkKind, ProviderId};

/// The capacity constraint that a placement or migration ran into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Shared unlicensed air interface: `d_u_i + d_u_j <= C_u`.
    SharedWifi,
    /// Private licensed air interface of one provider.
    Licensed(ProviderId),
    /// Per-provider backhaul cap on unlicensed-path throughput.
    Backhaul(ProviderId),
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::SharedWifi => write!(f, "shared unlicensed capacity"),
            Constraint::Licensed(p) => write!(f, "licensed capacity of provider {}", p.0),
            Constraint::Backhaul(p) => write!(f, "backhaul capacity of provider {}", p.0),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("capacity must be positive, got {0}")]
    NonPositiveCapacity(f64),

    #[error("demand {demand} exceeds capacity {capacity}")]
    DemandExceedsCapacity { demand: f64, capacity: f64 },

    #[error("negative demand {0}")]
    NegativeDemand(f64),

    #[error("quality floor {0} outside (0, 1)")]
    FloorOutOfRange(f64),

    #[error("infeasible strategy: {constraint} violated (limit {limit}, attempted {attempted})")]
    InfeasibleStrategy {
        constraint: Constraint,
        limit: f64,
        attempted: f64,
    },

    #[error("provider {0:?} does not own a licensed network")]
    NoLicensedNetwork(ProviderId),

    #[error("provider {provider:?} does not own a {network:?} network")]
    NetworkNotOwned {
        provider: ProviderId,
        network: NetworkKind,
    },

    #[error("no feasible strategy on the grid for provider {0:?}")]
    NoFeasibleProfile(ProviderId),

    #[error("grid of {0} steps is too large for exhaustive enumeration (max 12)")]
    GridTooLarge(usize),

    #[error("trajectory of {0} states is too short (need at least 4)")]
    TrajectoryTooShort(usize),

    #[error("trajectory was produced for location '{trajectory}', scenario is '{scenario}'")]
    ScenarioMismatch {
        trajectory: String,
        scenario: String,
    },

    #[error("no equilibrium found on the grid")]
    NoEquilibrium,

    #[error("invalid strategy profile: {0}")]
    InvalidProfile(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
