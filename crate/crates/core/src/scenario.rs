//! Scenario definition: two providers, their networks and tariffs, demand
//! pools, and every free parameter of the model in one validated place.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::{
    qos, ClassId, Elasticity, MarketState, NetworkKind, NetworkResource, Owner,
    ProviderId, Tariff, TrafficClass, TOL,
};
use crate::strategy::StrategyProfile;

/// Migration rate law parameters for the round-by-round dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MigrationRule {
    pub elasticity: Elasticity,
    /// Max fraction of a pool entry that may move per round, in [0, 1].
    pub migration_cap: f64,
    /// Minimum utility differential before any move, >= 0.
    pub hysteresis: f64,
}

impl Default for MigrationRule {
    fn default() -> Self {
        MigrationRule {
            elasticity: Elasticity { alpha: 1.0, beta: 0.1 },
            migration_cap: 0.2,
            hysteresis: 0.0,
        }
    }
}

/// Classification thresholds for outcome labeling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Unlicensed QoS below this counts as a destroyed commons.
    /// `None` means "half the bulk floor".
    pub deadlock_qos: Option<f64>,
    /// Relative welfare gap above this counts as a tragedy outcome.
    pub relative_gap: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            deadlock_qos: None,
            relative_gap: 0.25,
        }
    }
}

/// One Internet service provider.
///
/// Every provider owns a backhaul (whose cost per unit is the cost of its
/// whole unlicensed path) and may own a licensed air interface. The
/// unlicensed air interface itself is shared and lives on the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provider {
    pub id: ProviderId,
    pub name: String,
    pub backhaul: NetworkResource,
    pub licensed: Option<NetworkResource>,
    pub tariffs: Vec<Tariff>,
    /// Latent demand this provider may admit: premium resold into freed
    /// licensed capacity for the combined operator, extra bulk onto the
    /// unlicensed path for the Wi-Fi-only operator.
    pub resale_pool: f64,
}

impl Provider {
    pub fn tariff(&self, network: NetworkKind, class: ClassId) -> Option<f64> {
        self.tariffs
            .iter()
            .find(|t| t.network_kind == network && t.class == class)
            .map(|t| t.price)
    }

    pub fn has_licensed(&self) -> bool {
        self.licensed.is_some()
    }

    pub fn backhaul_capacity(&self) -> f64 {
        self.backhaul.capacity
    }

    /// Cost per unit of the unlicensed path (backhaul carriage).
    pub fn unlicensed_cost(&self) -> f64 {
        self.backhaul.cost_per_unit
    }

    pub fn licensed_capacity(&self) -> Option<f64> {
        self.licensed.map(|n| n.capacity)
    }

    pub fn licensed_cost(&self) -> Option<f64> {
        self.licensed.map(|n| n.cost_per_unit)
    }
}

/// A validation problem, annotated with the offending field path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ScenarioIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// The full, validated game description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub loc_tag: String,
    /// `[bulk, premium]`, indexed by `ClassId::index()`.
    pub classes: [TrafficClass; 2],
    /// The single shared unlicensed air interface.
    pub unlicensed: NetworkResource,
    /// Exactly two providers, indexed by `ProviderId`.
    pub providers: Vec<Provider>,
    /// Contracted base demand per provider and class: `base_demand[k][z]`.
    pub base_demand: Vec<[f64; 2]>,
    pub migration: MigrationRule,
    pub thresholds: Thresholds,
    pub grid_steps: usize,
    pub rounds: usize,
    /// Used only for randomized test-scenario generation.
    pub seed: u64,
    pub initial: StrategyProfile,
}

impl Scenario {
    pub fn class(&self, id: ClassId) -> &TrafficClass {
        &self.classes[id.index()]
    }

    pub fn quality_floor(&self, id: ClassId) -> f64 {
        self.classes[id.index()].min_quality
    }

    pub fn wifi_capacity(&self) -> f64 {
        self.unlicensed.capacity
    }

    pub fn provider(&self, id: ProviderId) -> &Provider {
        &self.providers[id.0]
    }

    /// The combined fixed/cellular operator (the paper's provider j).
    pub fn combined(&self) -> &Provider {
        self.providers
            .iter()
            .find(|p| p.has_licensed())
            .expect("validated scenario has a combined operator")
    }

    /// The Wi-Fi-only operator (the paper's provider i).
    pub fn wifi_only(&self) -> &Provider {
        self.providers
            .iter()
            .find(|p| !p.has_licensed())
            .expect("validated scenario has a wifi-only operator")
    }

    pub fn base_demand_of(&self, provider: ProviderId, class: ClassId) -> f64 {
        self.base_demand[provider.0][class.index()]
    }

    pub fn sum_backhaul(&self) -> f64 {
        self.providers.iter().map(|p| p.backhaul_capacity()).sum()
    }

    /// Checks every structural invariant, collecting all violations.
    pub fn validate(&self) -> std::result::Result<(), Vec<ScenarioIssue>> {
        let mut issues = Vec::new();
        let mut push = |path: &str, message: String| {
            issues.push(ScenarioIssue {
                path: path.to_string(),
                message,
            })
        };

        let bulk = self.classes[0];
        let premium = self.classes[1];
        if bulk.id != ClassId::Bulk || premium.id != ClassId::Premium {
            push("classes", "classes must be ordered [bulk, premium]".into());
        }
        for (i, c) in self.classes.iter().enumerate() {
            if c.validate().is_err() {
                push(
                    &format!("classes[{i}].min_quality"),
                    format!("quality floor {} outside [0, 1]", c.min_quality),
                );
            }
        }
        if premium.min_quality <= bulk.min_quality {
            push(
                "classes",
                format!(
                    "class ordering violated: premium floor {} must exceed bulk floor {}",
                    premium.min_quality, bulk.min_quality
                ),
            );
        }

        if self.unlicensed.kind != NetworkKind::UnlicensedAir
            || self.unlicensed.owner != Owner::Shared
        {
            push("unlicensed", "shared band must be an unlicensed air resource marked shared".into());
        }
        if let Err(e) = self.unlicensed.validate() {
            push("unlicensed", e.to_string());
        }

        if self.providers.len() != 2 {
            push(
                "providers",
                format!("exactly two providers required, got {}", self.providers.len()),
            );
        }
        let licensed_owners = self.providers.iter().filter(|p| p.has_licensed()).count();
        if self.providers.len() == 2 && licensed_owners != 1 {
            push(
                "providers",
                format!(
                    "exactly one provider must own a licensed network, got {licensed_owners}"
                ),
            );
        }

        for (k, p) in self.providers.iter().enumerate() {
            let base = format!("providers[{k}]");
            if p.id.0 != k {
                push(&base, format!("provider id {} does not match position {k}", p.id.0));
            }
            if let Err(e) = p.backhaul.validate() {
                push(&format!("{base}.backhaul"), e.to_string());
            }
            if p.backhaul.kind != NetworkKind::Backhaul {
                push(&format!("{base}.backhaul"), "wrong network kind".into());
            }
            if p.resale_pool < 0.0 {
                push(&format!("{base}.resale_pool"), "must be non-negative".into());
            }
            for (ti, t) in p.tariffs.iter().enumerate() {
                if t.price < 0.0 {
                    push(
                        &format!("{base}.tariffs[{ti}].price"),
                        "must be non-negative".into(),
                    );
                }
            }
            if let Some(lic) = &p.licensed {
                if let Err(e) = lic.validate() {
                    push(&format!("{base}.licensed"), e.to_string());
                }
                if lic.kind != NetworkKind::LicensedAir {
                    push(&format!("{base}.licensed"), "wrong network kind".into());
                }
                // A licensed owner must price its licensed service.
                let priced = ClassId::ALL
                    .iter()
                    .any(|&z| p.tariff(NetworkKind::LicensedAir, z).is_some());
                if !priced {
                    push(
                        &format!("{base}.tariffs"),
                        "licensed network present but no licensed tariff declared".into(),
                    );
                }
                // Cost ordering E_l > E_u from the scarcity of licensed spectrum.
                if lic.cost_per_unit <= p.backhaul.cost_per_unit {
                    push(
                        &format!("{base}.licensed.cost_per_unit"),
                        format!(
                            "cost ordering violated: licensed cost {} must exceed unlicensed-path cost {}",
                            lic.cost_per_unit, p.backhaul.cost_per_unit
                        ),
                    );
                }
            }
        }

        if self.base_demand.len() != self.providers.len() {
            push("demand", "one demand entry per provider required".into());
        }
        for (k, d) in self.base_demand.iter().enumerate() {
            for (z, v) in d.iter().enumerate() {
                if *v < 0.0 {
                    push(&format!("demand[{k}][{z}]"), "must be non-negative".into());
                }
            }
        }

        if !(0.0..=1.0).contains(&self.migration.migration_cap) {
            push("migration.cap", "must be in [0, 1]".into());
        }
        if self.migration.hysteresis < 0.0 {
            push("migration.hysteresis", "must be non-negative".into());
        }
        if self.grid_steps < 2 {
            push("grid_steps", "must be at least 2".into());
        }
        if self.rounds == 0 {
            push("rounds", "must be at least 1".into());
        }

        if let Err(e) = crate::strategy::validate_profile(self, &self.initial) {
            push("initial_strategy", e.to_string());
        } else if let Err(e) = crate::strategy::apply_strategy(self, &self.initial) {
            push("initial_strategy", e.to_string());
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    /// Checks a state against the shared-band, licensed, and backhaul caps.
    pub fn check_state(&self, state: &MarketState) -> Result<()> {
        let u_total = state.unlicensed_total();
        if u_total > self.wifi_capacity() + TOL {
            return Err(ModelError::InfeasibleStrategy {
                constraint: crate::error::Constraint::SharedWifi,
                limit: self.wifi_capacity(),
                attempted: u_total,
            });
        }
        for p in &self.providers {
            let through = state.provider_unlicensed(p.id);
            if through > p.backhaul_capacity() + TOL {
                return Err(ModelError::InfeasibleStrategy {
                    constraint: crate::error::Constraint::Backhaul(p.id),
                    limit: p.backhaul_capacity(),
                    attempted: through,
                });
            }
            let lic_demand = state.provider_licensed(p.id);
            match p.licensed_capacity() {
                Some(cap) => {
                    if lic_demand > cap + TOL {
                        return Err(ModelError::InfeasibleStrategy {
                            constraint: crate::error::Constraint::Licensed(p.id),
                            limit: cap,
                            attempted: lic_demand,
                        });
                    }
                }
                None => {
                    if lic_demand > TOL {
                        return Err(ModelError::NetworkNotOwned {
                            provider: p.id,
                            network: NetworkKind::LicensedAir,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Profit of one provider at a state: revenue minus carriage cost over
    /// all of its placements.
    ///
    /// Revenue for a placement counts only while the carrying network's
    /// quality meets the class floor; customers whose floor is breached are
    /// not served acceptably and pay nothing, while the carried traffic
    /// still incurs its cost per unit.
    pub fn provider_profit(&self, provider: ProviderId, state: &MarketState) -> Result<f64> {
        let p = self.provider(provider);
        let mut profit = 0.0;
        for pool in &state.pools {
            for alloc in pool.allocation.iter().filter(|a| a.provider == provider) {
                if alloc.demand <= 0.0 {
                    continue;
                }
                let (q, cost) = match alloc.network {
                    NetworkKind::UnlicensedAir => (state.qos.unlicensed, p.unlicensed_cost()),
                    NetworkKind::LicensedAir => {
                        let q = state.qos.licensed[provider.0].ok_or(
                            ModelError::NetworkNotOwned {
                                provider,
                                network: NetworkKind::LicensedAir,
                            },
                        )?;
                        (q, p.licensed_cost().unwrap())
                    }
                    NetworkKind::Backhaul => {
                        return Err(ModelError::NetworkNotOwned {
                            provider,
                            network: NetworkKind::Backhaul,
                        })
                    }
                };
                let price = p.tariff(alloc.network, pool.class).unwrap_or(0.0);
                let served = q + TOL >= self.quality_floor(pool.class);
                if served {
                    profit += crate::model::revenue(alloc.demand, price);
                }
                profit -= cost * alloc.demand;
            }
        }
        Ok(profit)
    }

    /// Re-derives QoS and profits for a set of pools, producing a full state.
    pub fn state_from_pools(
        &self,
        pools: Vec<crate::model::DemandPool>,
        round: u64,
    ) -> Result<MarketState> {
        let u_total: f64 = pools
            .iter()
            .flat_map(|p| p.allocation.iter())
            .filter(|a| a.network == NetworkKind::UnlicensedAir)
            .map(|a| a.demand)
            .sum();
        let unlicensed = qos(u_total, self.wifi_capacity())?;
        let mut licensed = vec![None; self.providers.len()];
        for p in &self.providers {
            if let Some(cap) = p.licensed_capacity() {
                let d: f64 = pools
                    .iter()
                    .map(|pool| pool.placed(p.id, NetworkKind::LicensedAir))
                    .sum();
                licensed[p.id.0] = Some(qos(d, cap)?);
            }
        }
        let mut state = MarketState {
            loc_tag: self.loc_tag.clone(),
            round,
            pools,
            qos: crate::model::QosView { unlicensed, licensed },
            profits: vec![0.0; self.providers.len()],
        };
        self.check_state(&state)?;
        for p in &self.providers {
            state.profits[p.id.0] = self.provider_profit(p.id, &state)?;
        }
        Ok(state)
    }
}

/// Convenience constructor for the shared unlicensed band.
pub fn shared_wifi(capacity: f64) -> NetworkResource {
    NetworkResource {
        kind: NetworkKind::UnlicensedAir,
        capacity,
        cost_per_unit: 0.0,
        owner: Owner::Shared,
    }
}

pub fn backhaul(owner: ProviderId, capacity: f64, cost_per_unit: f64) -> NetworkResource {
    NetworkResource {
        kind: NetworkKind::Backhaul,
        capacity,
        cost_per_unit,
        owner: Owner::Provider(owner),
    }
}

pub fn licensed_air(owner: ProviderId, capacity: f64, cost_per_unit: f64) -> NetworkResource {
    NetworkResource {
        kind: NetworkKind::LicensedAir,
        capacity,
        cost_per_unit,
        owner: Owner::Provider(owner),
    }
}
