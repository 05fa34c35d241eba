//! Simulator and solver for a two-provider Wi-Fi offload market: one
//! Wi-Fi-only operator and one combined operator share an unlicensed band
//! and compete over where traffic is placed.
//!
//! The crate is organized around a [`scenario::Scenario`] describing the
//! market, placement strategies ([`strategy`]), static-game solvers
//! ([`equilibrium`]), multi-round dynamics ([`dynamics`]), and outcome
//! classification ([`outcomes`]).

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod outcomes;
pub mod presets;
pub mod scenario;
pub mod strategy;

mod placement;

pub use error::{Constraint, ModelError, Result};
pub use model::{
    delta_terms, demand_response, qos, revenue, Allocation, ClassId, DemandPool, Elasticity,
    MarketState, NetworkKind, NetworkResource, Owner, PoolOrigin, ProviderId, QosView, Tariff,
    TrafficClass, TOL,
};
pub use scenario::{MigrationRule, Provider, Scenario, ScenarioIssue, Thresholds};
pub use strategy::{
    apply_strategy, best_response, dominance_check, DominanceReport, ProviderStrategy,
    StrategyProfile,
};
pub use equilibrium::{
    best_response_dynamics, commons_welfare_gap, inter_provider_equilibrium,
    intra_provider_equilibrium, nash_oracle, BrdOutcome, EquilibriumReport, WelfareGap,
};
pub use dynamics::{
    detect_oscillation, inject_roaming, sabotage_strategy, simulate, simulate_with_events, step,
    MarketEvent, MigrationRecord, Oscillation, StrategyPolicy, Trajectory,
};
pub use outcomes::{capacity_regime, classify, Outcome, OutcomeEvidence, OutcomeLabel, Regime};
