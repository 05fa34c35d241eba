//! Domain types and the closed-form market expressions: congestion-sensitive
//! QoS, price/quality differentials, demand response, and revenue.
//!
//! Everything here is a pure function over immutable value objects; the
//! stateful machinery (strategies, solvers, dynamics) lives in sibling
//! modules and composes these primitives.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Absolute tolerance for all money/traffic comparisons.
pub const TOL: f64 = 1e-9;

/// Service category, ordered by increasing quality demands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassId {
    Bulk,
    Premium,
}

impl ClassId {
    pub const ALL: [ClassId; 2] = [ClassId::Bulk, ClassId::Premium];

    pub fn index(self) -> usize {
        match self {
            ClassId::Bulk => 0,
            ClassId::Premium => 1,
        }
    }
}

impl std::fmt::Display for ClassId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassId::Bulk => write!(f, "bulk"),
            ClassId::Premium => write!(f, "premium"),
        }
    }
}

/// A traffic class with its minimum acceptable quality level.
///
/// Demand of a class placed on a network whose quality sits below the
/// class floor generates no revenue: those customers are not served at
/// an acceptable level and do not pay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficClass {
    pub id: ClassId,
    /// Minimum quality floor in [0, 1].
    pub min_quality: f64,
    /// Reference price per traffic unit for class-differentiated tariffs.
    pub unit_price_hint: f64,
}

impl TrafficClass {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_quality) {
            return Err(ModelError::FloorOutOfRange(self.min_quality));
        }
        Ok(())
    }
}

/// Index of a provider within a scenario. Exactly two providers exist:
/// one Wi-Fi-only operator and one combined fixed/cellular operator.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ProviderId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    UnlicensedAir,
    LicensedAir,
    Backhaul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    Shared,
    Provider(ProviderId),
}

/// One network: capacity in traffic units per round and carriage cost per
/// traffic unit. The unlicensed air interface is the single shared resource;
/// backhaul and licensed air are provider-owned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkResource {
    pub kind: NetworkKind,
    pub capacity: f64,
    pub cost_per_unit: f64,
    pub owner: Owner,
}

impl NetworkResource {
    pub fn validate(&self) -> Result<()> {
        if self.capacity <= 0.0 {
            return Err(ModelError::NonPositiveCapacity(self.capacity));
        }
        if self.cost_per_unit < 0.0 {
            return Err(ModelError::InvalidScenario(format!(
                "negative cost per unit {}",
                self.cost_per_unit
            )));
        }
        Ok(())
    }
}

/// Price charged per traffic unit on one network for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tariff {
    pub network_kind: NetworkKind,
    pub class: ClassId,
    pub price: f64,
}

/// Price/quality elasticity of the demand response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Elasticity {
    /// Sensitivity to quality given up (alpha >= 0).
    pub alpha: f64,
    /// Sensitivity to price saved (beta >= 0).
    pub beta: f64,
}

/// Where a demand pool came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolOrigin {
    /// Contracted customer demand present from round 0.
    Domestic,
    /// Latent demand admitted by the given provider's resale decision.
    Resale(ProviderId),
    /// Roaming visitors injected onto the given host's unlicensed path.
    Visitor(ProviderId),
}

/// One placement entry: how much of a pool a provider carries on a network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub provider: ProviderId,
    pub network: NetworkKind,
    pub demand: f64,
}

/// A fixed-total pool of demand for one class, split across provider
/// networks. The total is conserved by every reallocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandPool {
    pub class: ClassId,
    pub origin: PoolOrigin,
    pub total: f64,
    pub allocation: Vec<Allocation>,
}

impl DemandPool {
    pub fn placed(&self, provider: ProviderId, network: NetworkKind) -> f64 {
        self.allocation
            .iter()
            .filter(|a| a.provider == provider && a.network == network)
            .map(|a| a.demand)
            .sum()
    }

    pub fn allocated_sum(&self) -> f64 {
        self.allocation.iter().map(|a| a.demand).sum()
    }
}

/// Derived quality per network; `licensed[k]` is `None` for providers
/// without a licensed network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosView {
    pub unlicensed: f64,
    pub licensed: Vec<Option<f64>>,
}

/// Full market snapshot at one `(loc, t)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub loc_tag: String,
    pub round: u64,
    pub pools: Vec<DemandPool>,
    pub qos: QosView,
    /// Profit per provider, indexed by `ProviderId`.
    pub profits: Vec<f64>,
}

impl MarketState {
    /// Total demand on the shared unlicensed band across all providers.
    pub fn unlicensed_total(&self) -> f64 {
        self.pools
            .iter()
            .flat_map(|p| p.allocation.iter())
            .filter(|a| a.network == NetworkKind::UnlicensedAir)
            .map(|a| a.demand)
            .sum()
    }

    /// Unlicensed-path throughput of one provider (counts toward its backhaul cap).
    pub fn provider_unlicensed(&self, provider: ProviderId) -> f64 {
        self.pools
            .iter()
            .map(|p| p.placed(provider, NetworkKind::UnlicensedAir))
            .sum()
    }

    pub fn provider_licensed(&self, provider: ProviderId) -> f64 {
        self.pools
            .iter()
            .map(|p| p.placed(provider, NetworkKind::LicensedAir))
            .sum()
    }
}

/// Congestion-sensitive quality: `1 - total_demand / capacity`.
///
/// For the shared unlicensed band `total_demand` is the sum of both
/// providers' demands; for a licensed network it is that provider's
/// demand alone with its private capacity.
pub fn qos(total_demand: f64, capacity: f64) -> Result<f64> {
    if capacity <= 0.0 {
        return Err(ModelError::NonPositiveCapacity(capacity));
    }
    if total_demand < -TOL {
        return Err(ModelError::NegativeDemand(total_demand));
    }
    if total_demand > capacity + TOL {
        return Err(ModelError::DemandExceedsCapacity {
            demand: total_demand,
            capacity,
        });
    }
    Ok((1.0 - total_demand / capacity).clamp(0.0, 1.0))
}

/// Price and quality differentials of a changeover, with the current
/// contract as reference point: `dp = p_from - p_to` is the price saved by
/// switching, `dq = q_from - q_to` the quality given up.
pub fn delta_terms(p_from: f64, p_to: f64, q_from: f64, q_to: f64) -> (f64, f64) {
    (p_from - p_to, q_from - q_to)
}

/// Linear-with-clamp demand response: `base * max(0, 1 + beta*dp - alpha*dq)`.
///
/// Strictly increasing in the price saved and decreasing in the quality
/// given up over the unclamped region.
pub fn demand_response(base: f64, dp: f64, dq: f64, elasticity: Elasticity) -> Result<f64> {
    if base < 0.0 {
        return Err(ModelError::NegativeDemand(base));
    }
    Ok(base * (1.0 + elasticity.beta * dp - elasticity.alpha * dq).max(0.0))
}

/// Revenue for satisfying `demand` at `price` per unit.
pub fn revenue(demand: f64, price: f64) -> f64 {
    demand * price
}
