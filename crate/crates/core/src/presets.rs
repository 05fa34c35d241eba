//! Canned scenarios for tests, benchmarks, and examples, plus seeded
//! random generators for property-style checks. Presets are constructed
//! directly and are not all `validate()`-clean on purpose (some stress
//! degenerate pricing).

use rand::Rng;

use crate::model::{ClassId, Elasticity, NetworkKind, ProviderId, Tariff, TrafficClass};
use crate::scenario::{
    backhaul, licensed_air, shared_wifi, MigrationRule, Provider, Scenario, Thresholds,
};
use crate::strategy::{ProviderStrategy, StrategyProfile};

fn tariff(network_kind: NetworkKind, class: ClassId, price: f64) -> Tariff {
    Tariff { network_kind, class, price }
}

fn classes(bulk_floor: f64, premium_floor: f64) -> [TrafficClass; 2] {
    [
        TrafficClass { id: ClassId::Bulk, min_quality: bulk_floor, unit_price_hint: 1.0 },
        TrafficClass { id: ClassId::Premium, min_quality: premium_floor, unit_price_hint: 3.0 },
    ]
}

fn initial_profile() -> StrategyProfile {
    StrategyProfile {
        strategies: vec![
            ProviderStrategy { offload: [1.0, 1.0], admitted_extra: 0.0 },
            ProviderStrategy { offload: [0.0, 0.0], admitted_extra: 0.0 },
        ],
    }
}

/// Two-provider market used as the starting point for most presets:
/// provider 0 is Wi-Fi-only, provider 1 also owns licensed spectrum.
fn base() -> Scenario {
    let i = ProviderId(0);
    let j = ProviderId(1);
    Scenario {
        loc_tag: "metro-a".into(),
        classes: classes(0.2, 0.6),
        unlicensed: shared_wifi(100.0),
        providers: vec![
            Provider {
                id: i,
                name: "fixnet".into(),
                backhaul: backhaul(i, 60.0, 0.05),
                licensed: None,
                tariffs: vec![
                    tariff(NetworkKind::UnlicensedAir, ClassId::Bulk, 1.0),
                    tariff(NetworkKind::UnlicensedAir, ClassId::Premium, 3.0),
                ],
                resale_pool: 0.0,
            },
            Provider {
                id: j,
                name: "mobicom".into(),
                backhaul: backhaul(j, 60.0, 0.05),
                licensed: Some(licensed_air(j, 150.0, 0.5)),
                tariffs: vec![
                    tariff(NetworkKind::UnlicensedAir, ClassId::Bulk, 1.0),
                    tariff(NetworkKind::UnlicensedAir, ClassId::Premium, 2.5),
                    tariff(NetworkKind::LicensedAir, ClassId::Bulk, 1.2),
                    tariff(NetworkKind::LicensedAir, ClassId::Premium, 3.0),
                ],
                resale_pool: 0.0,
            },
        ],
        base_demand: vec![[20.0, 20.0], [40.0, 10.0]],
        migration: MigrationRule::default(),
        thresholds: Thresholds::default(),
        grid_steps: 4,
        rounds: 30,
        seed: 7,
        initial: initial_profile(),
    }
}

fn set_price(sc: &mut Scenario, k: usize, network: NetworkKind, class: ClassId, price: f64) {
    let t = sc.providers[k]
        .tariffs
        .iter_mut()
        .find(|t| t.network_kind == network && t.class == class)
        .expect("tariff exists");
    t.price = price;
}

/// Ample capacity everywhere, moderate demand; nothing binds.
pub fn slack_scenario() -> Scenario {
    let mut sc = base();
    sc.base_demand = vec![[10.0, 0.0], [20.0, 10.0]];
    sc
}

/// Placement whose initial qualities are exactly `q_u` on the shared band
/// and `q_l` on the combined provider's licensed network (capacity 100).
pub fn tuned_qos_scenario(q_u: f64, q_l: f64) -> Scenario {
    let mut sc = base();
    let j = ProviderId(1);
    sc.providers[1].licensed = Some(licensed_air(j, 100.0, 0.5));
    sc.base_demand = vec![[(1.0 - q_u) * 100.0, 0.0], [(1.0 - q_l) * 100.0, 0.0]];
    sc
}

/// Identical margins on every path: no placement change can gain.
pub fn flat_margin_scenario() -> Scenario {
    let mut sc = base();
    sc.base_demand = vec![[10.0, 0.0], [20.0, 5.0]];
    sc.providers[1].backhaul.cost_per_unit = 0.1;
    let j = ProviderId(1);
    sc.providers[1].licensed = Some(licensed_air(j, 150.0, 0.1));
    set_price(&mut sc, 1, NetworkKind::UnlicensedAir, ClassId::Bulk, 1.0);
    set_price(&mut sc, 1, NetworkKind::LicensedAir, ClassId::Bulk, 1.0);
    set_price(&mut sc, 1, NetworkKind::UnlicensedAir, ClassId::Premium, 3.0);
    set_price(&mut sc, 1, NetworkKind::LicensedAir, ClassId::Premium, 3.0);
    sc
}

/// The unlicensed bulk margin strictly beats the licensed one and no floor
/// ever binds, so full bulk offload dominates for the combined provider.
pub fn offload_profitable_scenario() -> Scenario {
    let mut sc = base();
    sc.base_demand = vec![[10.0, 0.0], [20.0, 5.0]];
    sc
}

/// Free service on every path; all profits are identically zero.
pub fn zero_price_scenario() -> Scenario {
    let mut sc = base();
    sc.base_demand = vec![[10.0, 0.0], [20.0, 5.0]];
    for k in 0..2 {
        for t in &mut sc.providers[k].tariffs {
            t.price = 0.0;
        }
        sc.providers[k].backhaul.cost_per_unit = 0.0;
    }
    sc.providers[1].licensed.as_mut().unwrap().cost_per_unit = 0.0;
    sc
}

/// Tight shared band: selfish offload starves the Wi-Fi-only provider's
/// premium traffic, so the selfish equilibrium leaves welfare on the
/// table relative to coordinated restraint.
pub fn scarcity_scenario() -> Scenario {
    let mut sc = base();
    sc.providers[1].resale_pool = 20.0;
    sc
}

/// The scarcity market with ten times the shared capacity: congestion
/// never binds and the welfare gap closes.
pub fn abundance_scenario() -> Scenario {
    let mut sc = scarcity_scenario();
    sc.unlicensed = shared_wifi(1000.0);
    sc
}

/// Combined provider with plentiful bulk supply against a parametric
/// shared capacity and bulk floor; for exercising the intra-provider
/// bisection.
pub fn intra_solver_scenario(wifi_capacity: f64, bulk_floor: f64) -> Scenario {
    let mut sc = base();
    sc.unlicensed = shared_wifi(wifi_capacity);
    sc.classes = classes(bulk_floor, 0.995);
    sc.base_demand = vec![[30.0, 0.0], [200.0, 10.0]];
    sc.providers[1].backhaul.capacity = 1000.0;
    let j = ProviderId(1);
    sc.providers[1].licensed = Some(licensed_air(j, 1000.0, 0.5));
    sc
}

/// Saturated shared band with a parametric licensed network and premium
/// pool; for exercising the inter-provider bisection.
pub fn inter_solver_scenario(
    licensed_capacity: f64,
    premium_floor: f64,
    premium_pool: f64,
) -> Scenario {
    let mut sc = base();
    sc.classes = classes(0.2, premium_floor);
    sc.base_demand = vec![[0.0, 0.0], [100.0, premium_pool]];
    let j = ProviderId(1);
    sc.providers[1].licensed = Some(licensed_air(j, licensed_capacity, 0.5));
    sc
}

/// Every offer is identical in price and, at the initial placement, in
/// quality; no migration differential exists anywhere.
pub fn symmetric_offers_scenario() -> Scenario {
    let mut sc = base();
    sc.base_demand = vec![[20.0, 0.0], [30.0, 0.0]];
    set_price(&mut sc, 0, NetworkKind::UnlicensedAir, ClassId::Bulk, 1.0);
    set_price(&mut sc, 1, NetworkKind::UnlicensedAir, ClassId::Bulk, 1.0);
    set_price(&mut sc, 1, NetworkKind::LicensedAir, ClassId::Bulk, 1.0);
    // 30 retained on licensed capacity 150 matches the shared band's 0.8
    sc
}

/// A strictly better licensed offer pulls the Wi-Fi-only provider's bulk
/// pool across, capped per round.
pub fn migration_pull_scenario() -> Scenario {
    let mut sc = base();
    sc.base_demand = vec![[20.0, 0.0], [0.0, 0.0]];
    let j = ProviderId(1);
    sc.providers[1].licensed = Some(licensed_air(j, 100.0, 0.3));
    set_price(&mut sc, 1, NetworkKind::LicensedAir, ClassId::Bulk, 0.5);
    sc
}

/// Host with the given bulk load on the shared band, ready for roaming
/// influx.
pub fn roaming_host_scenario(host_load: f64) -> Scenario {
    let mut sc = base();
    sc.base_demand = vec![[host_load, 0.0], [0.0, 0.0]];
    sc.providers[0].backhaul.capacity = 100.0;
    sc
}

/// Combined provider with enough bulk and backhaul to wipe out the shared
/// band entirely; customers are locked in so the flood sticks.
pub fn sabotage_scenario() -> Scenario {
    let mut sc = base();
    sc.base_demand = vec![[20.0, 0.0], [100.0, 10.0]];
    sc.providers[1].backhaul.capacity = 85.0;
    let j = ProviderId(1);
    sc.providers[1].licensed = Some(licensed_air(j, 200.0, 0.5));
    sc.migration.migration_cap = 0.0;
    sc
}

/// Aggregate backhaul sits exactly on the protection boundary; the shared
/// band can never be pushed below the bulk floor.
pub fn backhaul_starved_scenario() -> Scenario {
    let mut sc = base();
    sc.base_demand = vec![[30.0, 0.0], [40.0, 10.0]];
    sc.providers[0].backhaul.capacity = 40.0;
    sc.providers[1].backhaul.capacity = 40.0;
    sc
}

/// Full-pool ping-pong: quality chasing with an uncapped migration rate
/// flips the whole pool between the empty shared band and the small
/// licensed network every round.
pub fn abandon_redeploy_scenario() -> Scenario {
    let mut sc = base();
    sc.base_demand = vec![[60.0, 0.0], [0.0, 0.0]];
    sc.providers[0].backhaul.capacity = 100.0;
    let j = ProviderId(1);
    sc.providers[1].licensed = Some(licensed_air(j, 75.0, 0.5));
    set_price(&mut sc, 1, NetworkKind::LicensedAir, ClassId::Bulk, 1.0);
    sc.migration = MigrationRule {
        elasticity: Elasticity { alpha: 2.0, beta: 0.1 },
        migration_cap: 1.0,
        hysteresis: 0.0,
    };
    sc
}

/// Asymmetric resale pools against a tight premium floor make the two
/// admission decisions chase each other: each provider's best admission
/// level halves and restores as the other's load crosses the floor, and
/// sequential best response never settles (period-two cycle at grid 2).
pub fn cycle_scenario() -> Scenario {
    let mut sc = base();
    sc.unlicensed = shared_wifi(88.0);
    sc.classes = classes(0.28, 0.46);
    sc.base_demand = vec![[4.0, 7.5], [5.0, 29.8]];
    sc.providers[0].backhaul = backhaul(ProviderId(0), 114.0, 0.06);
    sc.providers[1].backhaul = backhaul(ProviderId(1), 92.0, 0.06);
    let j = ProviderId(1);
    sc.providers[1].licensed = Some(licensed_air(j, 77.0, 0.86));
    sc.providers[0].resale_pool = 32.8;
    sc.providers[1].resale_pool = 36.2;
    set_price(&mut sc, 0, NetworkKind::UnlicensedAir, ClassId::Bulk, 1.45);
    set_price(&mut sc, 0, NetworkKind::UnlicensedAir, ClassId::Premium, 2.02);
    set_price(&mut sc, 1, NetworkKind::UnlicensedAir, ClassId::Bulk, 1.45);
    set_price(&mut sc, 1, NetworkKind::UnlicensedAir, ClassId::Premium, 2.02);
    set_price(&mut sc, 1, NetworkKind::LicensedAir, ClassId::Bulk, 1.86);
    set_price(&mut sc, 1, NetworkKind::LicensedAir, ClassId::Premium, 2.57);
    sc.grid_steps = 2;
    sc
}

fn range(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Random bulk-only market where the combined provider's best response
/// loads the shared band right down to the bulk floor. The grid is sized
/// so the resulting quality lands within 1e-3 of the floor.
pub fn random_scarcity(rng: &mut impl Rng) -> Scenario {
    let c_u = range(rng, 80.0, 160.0);
    let bulk_floor = range(rng, 0.15, 0.35);
    let d_i = range(rng, 0.1, 0.3) * c_u;
    let bulk_j = (1.0 - bulk_floor) * c_u - d_i + range(rng, 0.1, 0.3) * c_u;

    let e_u = range(rng, 0.02, 0.1);
    let margin_u = range(rng, 0.7, 1.0);
    let p_u = e_u + margin_u;
    let e_l = e_u + range(rng, 0.7, 1.0);
    let margin_l = range(rng, 0.05, 0.3);
    let p_l = (e_l + margin_l).max(p_u + 0.05);

    let mut sc = base();
    sc.unlicensed = shared_wifi(c_u);
    sc.classes = classes(bulk_floor, 0.9);
    sc.base_demand = vec![[d_i, 0.0], [bulk_j, 0.0]];
    sc.providers[0].backhaul = backhaul(ProviderId(0), d_i + 5.0, e_u);
    sc.providers[1].backhaul = backhaul(ProviderId(1), c_u, e_u);
    let j = ProviderId(1);
    sc.providers[1].licensed = Some(licensed_air(j, 2.0 * (bulk_j + 10.0), e_l));
    set_price(&mut sc, 0, NetworkKind::UnlicensedAir, ClassId::Bulk, p_u);
    set_price(&mut sc, 1, NetworkKind::UnlicensedAir, ClassId::Bulk, p_u);
    set_price(&mut sc, 1, NetworkKind::LicensedAir, ClassId::Bulk, p_l);
    sc.grid_steps = (bulk_j / (8e-4 * c_u)).ceil() as usize;
    sc.migration.migration_cap = 0.0;
    sc.rounds = 50;
    sc
}

/// Small random market with modest grids, suited to exhaustive
/// equilibrium enumeration.
pub fn random_small(rng: &mut impl Rng) -> Scenario {
    let mut sc = base();
    sc.unlicensed = shared_wifi(range(rng, 50.0, 150.0));
    sc.classes = classes(range(rng, 0.1, 0.3), range(rng, 0.5, 0.8));
    sc.base_demand = vec![
        [range(rng, 5.0, 15.0), range(rng, 0.0, 10.0)],
        [range(rng, 5.0, 15.0), range(rng, 0.0, 10.0)],
    ];
    let e_u = range(rng, 0.02, 0.2);
    let e_l = e_u + range(rng, 0.2, 0.8);
    sc.providers[0].backhaul = backhaul(ProviderId(0), range(rng, 30.0, 80.0), e_u);
    sc.providers[1].backhaul = backhaul(ProviderId(1), range(rng, 30.0, 80.0), e_u);
    let j = ProviderId(1);
    sc.providers[1].licensed = Some(licensed_air(j, range(rng, 40.0, 160.0), e_l));
    sc.providers[0].resale_pool = range(rng, 0.0, 15.0);
    sc.providers[1].resale_pool = range(rng, 0.0, 15.0);
    let p_ub = range(rng, 0.5, 1.5);
    let p_uv = range(rng, 2.0, 3.0);
    set_price(&mut sc, 0, NetworkKind::UnlicensedAir, ClassId::Bulk, p_ub);
    set_price(&mut sc, 0, NetworkKind::UnlicensedAir, ClassId::Premium, p_uv);
    set_price(&mut sc, 1, NetworkKind::UnlicensedAir, ClassId::Bulk, p_ub);
    set_price(&mut sc, 1, NetworkKind::UnlicensedAir, ClassId::Premium, p_uv);
    set_price(&mut sc, 1, NetworkKind::LicensedAir, ClassId::Bulk, p_ub + range(rng, 0.0, 0.5));
    set_price(&mut sc, 1, NetworkKind::LicensedAir, ClassId::Premium, range(rng, 2.5, 3.5));
    sc
}

/// Random market where no capacity or floor ever binds and prices cover
/// costs; congestion externalities vanish by construction.
pub fn random_slack(rng: &mut impl Rng) -> Scenario {
    let mut sc = random_small(rng);
    let total: f64 = sc.base_demand.iter().map(|d| d[0] + d[1]).sum::<f64>()
        + sc.providers.iter().map(|p| p.resale_pool).sum::<f64>();
    sc.unlicensed = shared_wifi(10.0 * total);
    sc.providers[0].backhaul.capacity = 10.0 * total;
    sc.providers[1].backhaul.capacity = 10.0 * total;
    if let Some(l) = sc.providers[1].licensed.as_mut() {
        l.capacity = 10.0 * total;
    }
    sc.classes = classes(0.05, 0.1);
    sc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn named_presets_pass_validation_where_intended() {
        for sc in [
            slack_scenario(),
            offload_profitable_scenario(),
            scarcity_scenario(),
            abundance_scenario(),
            backhaul_starved_scenario(),
            sabotage_scenario(),
            migration_pull_scenario(),
            symmetric_offers_scenario(),
        ] {
            assert!(sc.validate().is_ok(), "{}: {:?}", sc.loc_tag, sc.validate());
        }
    }

    #[test]
    fn random_generators_are_seed_deterministic() {
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        assert_eq!(random_small(&mut a), random_small(&mut b));
        assert_eq!(random_scarcity(&mut a), random_scarcity(&mut b));
    }

    #[test]
    fn random_scarcity_is_wifi_bottlenecked_and_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let sc = random_scarcity(&mut rng);
            assert!(sc.validate().is_ok());
            let backhauls: f64 = sc.providers.iter().map(|p| p.backhaul_capacity()).sum();
            let floor = sc.quality_floor(crate::model::ClassId::Bulk);
            assert!(backhauls > (1.0 - floor) * sc.wifi_capacity());
            // demand saturates the band past the floor point
            let total: f64 = sc.base_demand.iter().map(|d| d[0]).sum();
            assert!(total > (1.0 - floor) * sc.wifi_capacity());
        }
    }

    #[test]
    fn random_small_initial_profile_is_feasible() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let sc = random_small(&mut rng);
            assert!(sc.validate().is_ok(), "{:?}", sc.validate());
            crate::strategy::apply_strategy(&sc, &sc.initial).unwrap();
        }
    }
}
