//! JSON scenario schema, exhaustive validation with field paths, and the
//! conversion into the core `Scenario`.

use serde::{Deserialize, Serialize};

use offload_core::scenario::{backhaul, licensed_air, shared_wifi};
use offload_core::{
    ClassId, Elasticity, MigrationRule, NetworkKind, Provider, ProviderId, ProviderStrategy,
    Scenario, StrategyProfile, Tariff, Thresholds, TrafficClass,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    /// Location label; simulated states carry it and must match.
    pub loc: String,
    pub classes: ClassesConfig,
    pub wifi_capacity: f64,
    pub providers: Vec<ProviderConfig>,
    #[serde(default)]
    pub elasticity: ElasticityConfig,
    #[serde(default)]
    pub migration: MigrationConfig,
    #[serde(default)]
    pub thresholds: ThresholdsConfig,
    #[serde(default = "default_grid")]
    pub grid_steps: usize,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    /// Used only for randomized test-scenario generation.
    #[serde(default)]
    pub seed: u64,
    /// Strategy policy along simulated trajectories.
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_grid() -> usize {
    4
}

fn default_rounds() -> usize {
    30
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyConfig {
    #[default]
    Static,
    BestResponseEachRound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassesConfig {
    pub bulk: ClassConfig,
    pub premium: ClassConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    pub min_quality: f64,
    #[serde(default = "default_price_hint")]
    pub price_hint: f64,
}

fn default_price_hint() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub name: String,
    pub backhaul: LinkConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub licensed: Option<LinkConfig>,
    pub tariffs: TariffsConfig,
    pub demand: DemandConfig,
    #[serde(default)]
    pub resale_pool: f64,
    /// Defaults to full offload for a Wi-Fi-only provider and full
    /// retention for a combined one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_strategy: Option<StrategyConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub capacity: f64,
    pub cost_per_unit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TariffsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unlicensed_bulk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unlicensed_premium: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub licensed_bulk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub licensed_premium: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandConfig {
    #[serde(default)]
    pub bulk: f64,
    #[serde(default)]
    pub premium: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub offload_bulk: f64,
    pub offload_premium: f64,
    #[serde(default)]
    pub admitted_extra: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticityConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ElasticityConfig {
    fn default() -> Self {
        ElasticityConfig { alpha: 1.0, beta: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MigrationConfig {
    pub cap: f64,
    #[serde(default)]
    pub hysteresis: f64,
}

impl Default for MigrationConfig {
    fn default() -> Self {
        MigrationConfig { cap: 0.2, hysteresis: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadlock_qos: Option<f64>,
    #[serde(default = "default_relative_gap")]
    pub relative_gap: f64,
}

fn default_relative_gap() -> f64 {
    0.25
}

impl Default for ThresholdsConfig {
    fn default() -> Self {
        ThresholdsConfig { deadlock_qos: None, relative_gap: default_relative_gap() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// One or two swept parameters; two sweep the cartesian grid.
    pub parameters: Vec<SweepParam>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParam {
    /// `wifi_capacity`, `backhaul:<provider>`, `licensed:<provider>`,
    /// `resale_pool:<provider>`, or `demand:<provider>:<bulk|premium>`.
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, Vec<ConfigIssue>> {
        serde_json::from_str(text).map_err(|e| {
            vec![ConfigIssue {
                path: format!("line {}, column {}", e.line(), e.column()),
                message: e.to_string(),
            }]
        })
    }

    /// Validates everything it can and reports all violations, not just
    /// the first.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut push = |path: &str, message: String| {
            issues.push(ConfigIssue { path: path.to_string(), message });
        };

        if self.schema_version != SCHEMA_VERSION {
            push(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            );
        }
        if self.wifi_capacity <= 0.0 {
            push("wifi_capacity", "shared capacity must be positive".into());
        }
        for (name, c, path) in [
            ("bulk", &self.classes.bulk, "classes.bulk.min_quality"),
            ("premium", &self.classes.premium, "classes.premium.min_quality"),
        ] {
            if !(0.0..=1.0).contains(&c.min_quality) {
                push(path, format!("{name} quality floor must lie in [0, 1]"));
            }
        }
        if self.classes.premium.min_quality <= self.classes.bulk.min_quality {
            push("classes", "class ordering violated: premium floor must exceed bulk floor".into());
        }
        if self.providers.len() != 2 {
            push("providers", format!("expected exactly 2 providers, got {}", self.providers.len()));
        }
        let licensed_count = self.providers.iter().filter(|p| p.licensed.is_some()).count();
        if self.providers.len() == 2 && licensed_count != 1 {
            push(
                "providers",
                format!("expected exactly one provider with licensed spectrum, got {licensed_count}"),
            );
        }
        for (k, p) in self.providers.iter().enumerate() {
            let base = format!("providers[{k}]");
            if p.name.trim().is_empty() {
                push(&format!("{base}.name"), "provider name must be non-empty".into());
            }
            if p.backhaul.capacity <= 0.0 {
                push(&format!("{base}.backhaul.capacity"), "must be positive".into());
            }
            if p.backhaul.cost_per_unit < 0.0 {
                push(&format!("{base}.backhaul.cost_per_unit"), "must be non-negative".into());
            }
            if p.demand.bulk < 0.0 || p.demand.premium < 0.0 {
                push(&format!("{base}.demand"), "demand must be non-negative".into());
            }
            if p.resale_pool < 0.0 {
                push(&format!("{base}.resale_pool"), "must be non-negative".into());
            }
            if p.tariffs.unlicensed_bulk.is_none() {
                push(
                    &format!("{base}.tariffs.unlicensed_bulk"),
                    "every provider must price bulk on the unlicensed path".into(),
                );
            }
            for (v, path) in [
                (p.tariffs.unlicensed_bulk, "unlicensed_bulk"),
                (p.tariffs.unlicensed_premium, "unlicensed_premium"),
                (p.tariffs.licensed_bulk, "licensed_bulk"),
                (p.tariffs.licensed_premium, "licensed_premium"),
            ] {
                if let Some(v) = v {
                    if v < 0.0 {
                        push(&format!("{base}.tariffs.{path}"), "price must be non-negative".into());
                    }
                }
            }
            if let Some(l) = &p.licensed {
                if l.capacity <= 0.0 {
                    push(&format!("{base}.licensed.capacity"), "must be positive".into());
                }
                if l.cost_per_unit <= p.backhaul.cost_per_unit {
                    push(
                        &format!("{base}.licensed.cost_per_unit"),
                        "cost-ordering violation: licensed cost per unit must exceed the \
                         unlicensed-path cost"
                            .into(),
                    );
                }
                if p.tariffs.licensed_bulk.is_none() && p.tariffs.licensed_premium.is_none() {
                    push(
                        &format!("{base}.tariffs"),
                        "a licensed network needs at least one licensed tariff".into(),
                    );
                }
            } else if p.tariffs.licensed_bulk.is_some() || p.tariffs.licensed_premium.is_some() {
                push(&format!("{base}.tariffs"), "licensed tariffs without a licensed network".into());
            }
            if let Some(s) = &p.initial_strategy {
                for (v, path) in [(s.offload_bulk, "offload_bulk"), (s.offload_premium, "offload_premium")]
                {
                    if !(0.0..=1.0).contains(&v) {
                        push(
                            &format!("{base}.initial_strategy.{path}"),
                            "fraction must lie in [0, 1]".into(),
                        );
                    }
                }
                if s.admitted_extra < 0.0 || s.admitted_extra > p.resale_pool {
                    push(
                        &format!("{base}.initial_strategy.admitted_extra"),
                        format!("must lie in [0, resale_pool = {}]", p.resale_pool),
                    );
                }
                if p.licensed.is_none() {
                    for (v, path) in
                        [(s.offload_bulk, "offload_bulk"), (s.offload_premium, "offload_premium")]
                    {
                        let demanded = if path == "offload_bulk" { p.demand.bulk } else { p.demand.premium };
                        if demanded > 0.0 && v != 1.0 {
                            push(
                                &format!("{base}.initial_strategy.{path}"),
                                "a provider without licensed spectrum cannot retain traffic".into(),
                            );
                        }
                    }
                }
            }
        }
        if self.elasticity.alpha < 0.0 || self.elasticity.beta < 0.0 {
            push("elasticity", "alpha and beta must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.migration.cap) {
            push("migration.cap", "must lie in [0, 1]".into());
        }
        if self.migration.hysteresis < 0.0 {
            push("migration.hysteresis", "must be non-negative".into());
        }
        if let Some(q) = self.thresholds.deadlock_qos {
            if !(0.0..=1.0).contains(&q) {
                push("thresholds.deadlock_qos", "must lie in [0, 1]".into());
            }
        }
        if self.grid_steps == 0 || self.grid_steps > 4096 {
            push("grid_steps", "must lie in 1..=4096".into());
        }
        if self.rounds == 0 {
            push("rounds", "must be at least 1".into());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.parameters.is_empty() || sweep.parameters.len() > 2 {
                push("sweep.parameters", "sweeps vary one or two parameters".into());
            }
            for (n, p) in sweep.parameters.iter().enumerate() {
                let base = format!("sweep.parameters[{n}]");
                if p.steps < 2 {
                    push(&format!("{base}.steps"), "a sweep needs at least 2 points".into());
                }
                if let Err(msg) = self.check_sweep_target(&p.param) {
                    push(&format!("{base}.param"), msg);
                }
            }
        }

        // Structural checks passed well enough to build? Then let the core
        // model vet the assembled scenario (shared-capacity bound etc).
        if issues.is_empty() {
            let sc = self.to_scenario();
            if let Err(core_issues) = sc.validate() {
                for i in core_issues {
                    issues.push(ConfigIssue { path: i.path, message: i.message });
                }
            } else if let Err(e) =
                offload_core::apply_strategy(&sc, &sc.initial)
            {
                issues.push(ConfigIssue {
                    path: "providers".into(),
                    message: format!("initial placement infeasible: {e}"),
                });
            }
        }
        issues
    }

    fn check_sweep_target(&self, param: &str) -> Result<(), String> {
        let parts: Vec<&str> = param.split(':').collect();
        let provider_ok = |name: &str| self.providers.iter().any(|p| p.name == name);
        match parts.as_slice() {
            ["wifi_capacity"] => Ok(()),
            ["backhaul", name] | ["licensed", name] | ["resale_pool", name] => {
                if !provider_ok(name) {
                    return Err(format!("unknown provider '{name}'"));
                }
                if parts[0] == "licensed"
                    && !self
                        .providers
                        .iter()
                        .any(|p| p.name == *name && p.licensed.is_some())
                {
                    return Err(format!("provider '{name}' has no licensed network"));
                }
                Ok(())
            }
            ["demand", name, class] => {
                if !provider_ok(name) {
                    return Err(format!("unknown provider '{name}'"));
                }
                if *class != "bulk" && *class != "premium" {
                    return Err(format!("unknown class '{class}'"));
                }
                Ok(())
            }
            _ => Err(format!(
                "unknown sweep target '{param}' (expected wifi_capacity, backhaul:<provider>, \
                 licensed:<provider>, resale_pool:<provider>, or demand:<provider>:<class>)"
            )),
        }
    }

    /// Applies one sweep value; targets were checked during validation.
    pub fn apply_sweep_value(&mut self, param: &str, value: f64) {
        let parts: Vec<&str> = param.split(':').collect();
        match parts.as_slice() {
            ["wifi_capacity"] => self.wifi_capacity = value,
            ["backhaul", name] => {
                self.provider_mut(name).backhaul.capacity = value;
            }
            ["licensed", name] => {
                self.provider_mut(name).licensed.as_mut().unwrap().capacity = value;
            }
            ["resale_pool", name] => {
                self.provider_mut(name).resale_pool = value;
            }
            ["demand", name, class] => {
                let p = self.provider_mut(name);
                if *class == "bulk" {
                    p.demand.bulk = value;
                } else {
                    p.demand.premium = value;
                }
            }
            _ => unreachable!("sweep target validated at load time"),
        }
    }

    fn provider_mut(&mut self, name: &str) -> &mut ProviderConfig {
        self.providers
            .iter_mut()
            .find(|p| p.name == name)
            .expect("sweep provider validated at load time")
    }

    /// Builds the core scenario. Callers run `validate` first; this only
    /// assumes the structural shape (two providers) holds.
    pub fn to_scenario(&self) -> Scenario {
        let mut providers = Vec::new();
        let mut base_demand = Vec::new();
        let mut strategies = Vec::new();
        for (k, p) in self.providers.iter().enumerate() {
            let id = ProviderId(k);
            let mut tariffs = Vec::new();
            let entries = [
                (NetworkKind::UnlicensedAir, ClassId::Bulk, p.tariffs.unlicensed_bulk),
                (NetworkKind::UnlicensedAir, ClassId::Premium, p.tariffs.unlicensed_premium),
                (NetworkKind::LicensedAir, ClassId::Bulk, p.tariffs.licensed_bulk),
                (NetworkKind::LicensedAir, ClassId::Premium, p.tariffs.licensed_premium),
            ];
            for (network_kind, class, price) in entries {
                if let Some(price) = price {
                    tariffs.push(Tariff { network_kind, class, price });
                }
            }
            providers.push(Provider {
                id,
                name: p.name.clone(),
                backhaul: backhaul(id, p.backhaul.capacity, p.backhaul.cost_per_unit),
                licensed: p
                    .licensed
                    .as_ref()
                    .map(|l| licensed_air(id, l.capacity, l.cost_per_unit)),
                tariffs,
                resale_pool: p.resale_pool,
            });
            base_demand.push([p.demand.bulk, p.demand.premium]);
            strategies.push(match &p.initial_strategy {
                Some(s) => ProviderStrategy {
                    offload: [s.offload_bulk, s.offload_premium],
                    admitted_extra: s.admitted_extra,
                },
                None if p.licensed.is_some() => ProviderStrategy::no_offload(),
                None => ProviderStrategy::full_offload(),
            });
        }
        Scenario {
            loc_tag: self.loc.clone(),
            classes: [
                TrafficClass {
                    id: ClassId::Bulk,
                    min_quality: self.classes.bulk.min_quality,
                    unit_price_hint: self.classes.bulk.price_hint,
                },
                TrafficClass {
                    id: ClassId::Premium,
                    min_quality: self.classes.premium.min_quality,
                    unit_price_hint: self.classes.premium.price_hint,
                },
            ],
            unlicensed: shared_wifi(self.wifi_capacity),
            providers,
            base_demand,
            migration: MigrationRule {
                elasticity: Elasticity {
                    alpha: self.elasticity.alpha,
                    beta: self.elasticity.beta,
                },
                migration_cap: self.migration.cap,
                hysteresis: self.migration.hysteresis,
            },
            thresholds: Thresholds {
                deadlock_qos: self.thresholds.deadlock_qos,
                relative_gap: self.thresholds.relative_gap,
            },
            grid_steps: self.grid_steps,
            rounds: self.rounds,
            seed: self.seed,
            initial: StrategyProfile { strategies },
        }
    }
}
