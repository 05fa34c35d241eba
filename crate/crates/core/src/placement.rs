//! Compact placement arithmetic shared by the strategy engine, the grid
//! solvers, and the dynamics. Grid search evaluates millions of candidate
//! placements, so this path avoids building full `MarketState` values.

use crate::error::{Constraint, ModelError, Result};
use crate::model::{
    Allocation, ClassId, DemandPool, MarketState, NetworkKind, PoolOrigin, ProviderId, QosView,
    TOL,
};
use crate::scenario::Scenario;

/// Per-provider demand context a strategy is applied to: contracted bases
/// plus any visitor traffic pinned to the unlicensed path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DemandContext {
    /// `bases[provider][class]`
    pub bases: [[f64; 2]; 2],
    /// Visitor bulk load per hosting provider.
    pub visitors: [f64; 2],
}

impl DemandContext {
    pub fn from_scenario(sc: &Scenario) -> Self {
        let mut bases = [[0.0; 2]; 2];
        for p in &sc.providers {
            bases[p.id.0] = sc.base_demand[p.id.0];
        }
        DemandContext { bases, visitors: [0.0; 2] }
    }

    /// Extracts bases and visitor loads from a live state's pools.
    pub fn from_state(sc: &Scenario, state: &MarketState) -> Self {
        let mut bases = [[0.0; 2]; 2];
        let mut visitors = [0.0; 2];
        for pool in &state.pools {
            match pool.origin {
                PoolOrigin::Domestic => {
                    for a in &pool.allocation {
                        bases[a.provider.0][pool.class.index()] += a.demand;
                    }
                }
                PoolOrigin::Visitor(host) => visitors[host.0] += pool.total,
                // Resale placements are re-decided by the strategy each time.
                PoolOrigin::Resale(_) => {}
            }
        }
        let _ = sc;
        DemandContext { bases, visitors }
    }
}

/// Fully materialized placement: who carries how much where.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Loads {
    /// Strategic demand on the unlicensed band: `u[provider][class]`.
    pub u: [[f64; 2]; 2],
    /// Strategic demand on licensed air: `l[provider][class]`.
    pub l: [[f64; 2]; 2],
    /// Admitted extra bulk on the unlicensed path (Wi-Fi-only provider).
    pub resale_u: [f64; 2],
    /// Admitted extra premium on licensed air (combined provider).
    pub resale_l: [f64; 2],
    /// Visitor bulk load per host on the unlicensed path.
    pub visitors: [f64; 2],
}

impl Loads {
    pub fn unlicensed_total(&self) -> f64 {
        let mut t = 0.0;
        for k in 0..2 {
            t += self.u[k][0] + self.u[k][1] + self.resale_u[k] + self.visitors[k];
        }
        t
    }

    pub fn provider_unlicensed(&self, k: usize) -> f64 {
        self.u[k][0] + self.u[k][1] + self.resale_u[k] + self.visitors[k]
    }

    pub fn provider_licensed(&self, k: usize) -> f64 {
        self.l[k][0] + self.l[k][1] + self.resale_l[k]
    }

    pub fn check_feasible(&self, sc: &Scenario) -> Result<()> {
        let u_total = self.unlicensed_total();
        if u_total > sc.wifi_capacity() + TOL {
            return Err(ModelError::InfeasibleStrategy {
                constraint: Constraint::SharedWifi,
                limit: sc.wifi_capacity(),
                attempted: u_total,
            });
        }
        for p in &sc.providers {
            let k = p.id.0;
            let through = self.provider_unlicensed(k);
            if through > p.backhaul_capacity() + TOL {
                return Err(ModelError::InfeasibleStrategy {
                    constraint: Constraint::Backhaul(p.id),
                    limit: p.backhaul_capacity(),
                    attempted: through,
                });
            }
            let lic = self.provider_licensed(k);
            match p.licensed_capacity() {
                Some(cap) if lic > cap + TOL => {
                    return Err(ModelError::InfeasibleStrategy {
                        constraint: Constraint::Licensed(p.id),
                        limit: cap,
                        attempted: lic,
                    });
                }
                None if lic > TOL => {
                    return Err(ModelError::NetworkNotOwned {
                        provider: p.id,
                        network: NetworkKind::LicensedAir,
                    });
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn qos_unlicensed(&self, sc: &Scenario) -> f64 {
        (1.0 - self.unlicensed_total() / sc.wifi_capacity()).clamp(0.0, 1.0)
    }

    pub fn qos_licensed(&self, sc: &Scenario, k: usize) -> Option<f64> {
        sc.providers[k]
            .licensed_capacity()
            .map(|cap| (1.0 - self.provider_licensed(k) / cap).clamp(0.0, 1.0))
    }

    /// Floor-gated profit of provider `k`, identical to
    /// `Scenario::provider_profit` on the materialized state.
    pub fn profit(&self, sc: &Scenario, k: usize) -> f64 {
        let p = &sc.providers[k];
        let q_u = self.qos_unlicensed(sc);
        let e_u = p.unlicensed_cost();
        let floor = [sc.quality_floor(ClassId::Bulk), sc.quality_floor(ClassId::Premium)];
        let mut profit = 0.0;

        for (z, &floor_z) in floor.iter().enumerate() {
            let d = self.u[k][z];
            if d > 0.0 {
                if q_u + TOL >= floor_z {
                    let price = p
                        .tariff(NetworkKind::UnlicensedAir, ClassId::ALL[z])
                        .unwrap_or(0.0);
                    profit += d * price;
                }
                profit -= e_u * d;
            }
        }
        // Admitted extra bulk and visitors both ride the unlicensed path at
        // the host's bulk tariff.
        for d in [self.resale_u[k], self.visitors[k]] {
            if d > 0.0 {
                if q_u + TOL >= floor[0] {
                    let price = p.tariff(NetworkKind::UnlicensedAir, ClassId::Bulk).unwrap_or(0.0);
                    profit += d * price;
                }
                profit -= e_u * d;
            }
        }

        if let Some(q_l) = self.qos_licensed(sc, k) {
            let e_l = p.licensed_cost().unwrap();
            for (z, &floor_z) in floor.iter().enumerate() {
                let d = self.l[k][z];
                if d > 0.0 {
                    if q_l + TOL >= floor_z {
                        let price = p
                            .tariff(NetworkKind::LicensedAir, ClassId::ALL[z])
                            .unwrap_or(0.0);
                        profit += d * price;
                    }
                    profit -= e_l * d;
                }
            }
            let resold = self.resale_l[k];
            if resold > 0.0 {
                if q_l + TOL >= floor[1] {
                    let price = p
                        .tariff(NetworkKind::LicensedAir, ClassId::Premium)
                        .unwrap_or(0.0);
                    profit += resold * price;
                }
                profit -= e_l * resold;
            }
        }
        profit
    }

    pub fn total_welfare(&self, sc: &Scenario) -> f64 {
        (0..sc.providers.len()).map(|k| self.profit(sc, k)).sum()
    }

    /// Builds the full market snapshot for this placement.
    pub fn to_state(self, sc: &Scenario, round: u64) -> Result<MarketState> {
        let mut pools = Vec::new();
        for z in 0..2 {
            let class = ClassId::ALL[z];
            let mut allocation = Vec::new();
            let mut total = 0.0;
            for k in 0..2 {
                let id = ProviderId(k);
                allocation.push(Allocation {
                    provider: id,
                    network: NetworkKind::UnlicensedAir,
                    demand: self.u[k][z],
                });
                if sc.providers[k].has_licensed() {
                    allocation.push(Allocation {
                        provider: id,
                        network: NetworkKind::LicensedAir,
                        demand: self.l[k][z],
                    });
                }
                total += self.u[k][z] + self.l[k][z];
            }
            pools.push(DemandPool { class, origin: PoolOrigin::Domestic, total, allocation });
        }
        for k in 0..2 {
            if self.resale_u[k] > 0.0 {
                pools.push(DemandPool {
                    class: ClassId::Bulk,
                    origin: PoolOrigin::Resale(ProviderId(k)),
                    total: self.resale_u[k],
                    allocation: vec![Allocation {
                        provider: ProviderId(k),
                        network: NetworkKind::UnlicensedAir,
                        demand: self.resale_u[k],
                    }],
                });
            }
            if self.resale_l[k] > 0.0 {
                pools.push(DemandPool {
                    class: ClassId::Premium,
                    origin: PoolOrigin::Resale(ProviderId(k)),
                    total: self.resale_l[k],
                    allocation: vec![Allocation {
                        provider: ProviderId(k),
                        network: NetworkKind::LicensedAir,
                        demand: self.resale_l[k],
                    }],
                });
            }
            if self.visitors[k] > 0.0 {
                pools.push(DemandPool {
                    class: ClassId::Bulk,
                    origin: PoolOrigin::Visitor(ProviderId(k)),
                    total: self.visitors[k],
                    allocation: vec![Allocation {
                        provider: ProviderId(k),
                        network: NetworkKind::UnlicensedAir,
                        demand: self.visitors[k],
                    }],
                });
            }
        }

        let unlicensed = self.qos_unlicensed(sc);
        let licensed = (0..sc.providers.len())
            .map(|k| self.qos_licensed(sc, k))
            .collect();
        let profits = (0..sc.providers.len()).map(|k| self.profit(sc, k)).collect();
        let state = MarketState {
            loc_tag: sc.loc_tag.clone(),
            round,
            pools,
            qos: QosView { unlicensed, licensed },
            profits,
        };
        sc.check_state(&state)?;
        Ok(state)
    }
}
