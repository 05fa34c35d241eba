//! Indifference-point solvers, a brute-force Nash oracle over the strategy
//! grid, best-response dynamics, and the commons welfare gap.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::{ClassId, TOL};
use crate::placement::DemandContext;
use crate::scenario::Scenario;
use crate::strategy::{
    best_response_in_context, candidate_strategies, loads_for, StrategyProfile,
};

/// Demand tolerance of the bisection solver.
pub const SOLVER_TOL: f64 = 1e-6;
pub const SOLVER_MAX_ITER: u32 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    IntraProvider,
    InterProvider,
    NashGrid,
}

/// Converged demand values at an indifference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPlacements {
    /// `d_u_i`: the Wi-Fi-only operator's unlicensed load.
    pub wifi_only_unlicensed: f64,
    /// `d_u_j*`: the combined operator's unlicensed load.
    pub combined_unlicensed: f64,
    /// `d_l_j*`: the combined operator's licensed load.
    pub combined_licensed: f64,
    /// Premium share of the licensed load (filled first).
    pub licensed_premium: f64,
    /// Bulk backfill of the licensed load.
    pub licensed_bulk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub placements: EquilibriumPlacements,
    /// Quality at (unlicensed, licensed) after settling.
    pub achieved_quality_unlicensed: f64,
    pub achieved_quality_licensed: Option<f64>,
    /// `|q - q_floor|` at the binding threshold.
    pub residual: f64,
    pub iterations: u32,
    pub converged: bool,
    /// The unconstrained root fell outside the feasible interval and the
    /// boundary was reported instead.
    pub boundary_clamped: bool,
    /// False when the paper's existence precondition (positive premium
    /// demand) fails for the inter-provider stage.
    pub applicable: bool,
}

/// Bisection on a decreasing function over `[lo, hi]`, recording the
/// interval after every step so monotone shrinkage is checkable.
pub(crate) fn bisect_decreasing(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: u32,
    trace: Option<&mut Vec<(f64, f64)>>,
) -> (f64, u32) {
    let mut lo = lo;
    let mut hi = hi;
    let mut iterations = 0;
    let mut trace = trace;
    while hi - lo > tol && iterations < max_iter {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push((lo, hi));
        }
    }
    (0.5 * (lo + hi), iterations)
}

/// Finds `d_u_j*` with `qos(d_u_i + d_u_j*, C_u) = q_floor(bulk)`, clamped
/// to the feasible interval. A clamped solution is still reported as
/// converged, with the residual measured at the boundary.
pub fn intra_provider_equilibrium(
    sc: &Scenario,
    opponent_unlicensed_demand: f64,
) -> Result<EquilibriumReport> {
    let floor = sc.quality_floor(ClassId::Bulk);
    if floor <= 0.0 || floor >= 1.0 {
        return Err(ModelError::FloorOutOfRange(floor));
    }
    let j = sc.combined();
    let c_u = sc.wifi_capacity();
    let d_i = opponent_unlicensed_demand;
    let bulk_avail = sc.base_demand_of(j.id, ClassId::Bulk);
    let upper = bulk_avail
        .min(j.backhaul_capacity())
        .min((c_u - d_i).max(0.0));

    let f = |x: f64| crate::model::qos(d_i + x, c_u).unwrap_or(0.0) - floor;
    let (root, iterations, clamped) = if f(0.0) <= 0.0 {
        (0.0, 0, true)
    } else if f(upper) >= 0.0 {
        (upper, 0, true)
    } else {
        let (r, it) = bisect_decreasing(f, 0.0, upper, SOLVER_TOL, SOLVER_MAX_ITER, None);
        (r, it, false)
    };

    let q_u = crate::model::qos(d_i + root, c_u)?;
    Ok(EquilibriumReport {
        kind: EquilibriumKind::IntraProvider,
        placements: EquilibriumPlacements {
            wifi_only_unlicensed: d_i,
            combined_unlicensed: root,
            combined_licensed: 0.0,
            licensed_premium: 0.0,
            licensed_bulk: 0.0,
        },
        achieved_quality_unlicensed: q_u,
        achieved_quality_licensed: None,
        residual: (q_u - floor).abs(),
        iterations,
        converged: true,
        boundary_clamped: clamped,
        applicable: true,
    })
}

/// Solves the second-stage indifference point `qos(d_l_j*, C_l) = q_floor(premium)`,
/// filling licensed capacity with premium demand first and backfilling bulk,
/// with the unlicensed side settled simultaneously at the bulk floor.
pub fn inter_provider_equilibrium(sc: &Scenario) -> Result<EquilibriumReport> {
    let j = sc.combined();
    let floor_v = sc.quality_floor(ClassId::Premium);
    if floor_v <= 0.0 || floor_v >= 1.0 {
        return Err(ModelError::FloorOutOfRange(floor_v));
    }
    let premium_avail = sc.base_demand_of(j.id, ClassId::Premium) + j.resale_pool;
    let bulk_avail = sc.base_demand_of(j.id, ClassId::Bulk);

    // Opponent side of the shared band under the scenario's initial profile.
    let i = sc.wifi_only();
    let d_i: f64 = sc.base_demand[i.id.0].iter().sum::<f64>()
        + sc.initial.of(i.id).admitted_extra;

    let intra = intra_provider_equilibrium(sc, d_i)?;

    if premium_avail <= 0.0 {
        return Ok(EquilibriumReport {
            kind: EquilibriumKind::InterProvider,
            placements: EquilibriumPlacements {
                wifi_only_unlicensed: d_i,
                combined_unlicensed: intra.placements.combined_unlicensed,
                combined_licensed: 0.0,
                licensed_premium: 0.0,
                licensed_bulk: 0.0,
            },
            achieved_quality_unlicensed: intra.achieved_quality_unlicensed,
            achieved_quality_licensed: None,
            residual: f64::NAN,
            iterations: intra.iterations,
            converged: false,
            boundary_clamped: false,
            applicable: false,
        });
    }

    let c_l = j
        .licensed_capacity()
        .ok_or(ModelError::NoLicensedNetwork(j.id))?;
    // Bulk left after the unlicensed side settled.
    let bulk_left = (bulk_avail - intra.placements.combined_unlicensed).max(0.0);
    let supply = premium_avail + bulk_left;
    let upper = c_l.min(supply);

    let f = |x: f64| crate::model::qos(x, c_l).unwrap_or(0.0) - floor_v;
    let (root, iterations, clamped) = if f(0.0) <= 0.0 {
        (0.0, 0, true)
    } else if f(upper) >= 0.0 {
        (upper, 0, true)
    } else {
        let (r, it) = bisect_decreasing(f, 0.0, upper, SOLVER_TOL, SOLVER_MAX_ITER, None);
        (r, it, false)
    };

    let licensed_premium = premium_avail.min(root);
    let licensed_bulk = (root - licensed_premium).min(bulk_left);
    let q_l = crate::model::qos(root, c_l)?;

    Ok(EquilibriumReport {
        kind: EquilibriumKind::InterProvider,
        placements: EquilibriumPlacements {
            wifi_only_unlicensed: d_i,
            combined_unlicensed: intra.placements.combined_unlicensed,
            combined_licensed: root,
            licensed_premium,
            licensed_bulk,
        },
        achieved_quality_unlicensed: intra.achieved_quality_unlicensed,
        achieved_quality_licensed: Some(q_l),
        residual: (q_l - floor_v).abs(),
        iterations: intra.iterations + iterations,
        converged: true,
        boundary_clamped: clamped || intra.boundary_clamped,
        applicable: true,
    })
}

/// All pure-strategy profiles on the grid from which neither provider can
/// improve its profit by any unilateral grid deviation.
///
/// Exhaustive: cost grows as `O((grid_steps + 1)^4)` pairs for the combined
/// operator's two fractions and admission times the Wi-Fi-only operator's
/// admission grid, so the grid is capped at 12 steps.
pub fn nash_oracle(sc: &Scenario, grid_steps: usize) -> Result<Vec<StrategyProfile>> {
    if grid_steps > 12 {
        return Err(ModelError::GridTooLarge(grid_steps));
    }
    let ctx = DemandContext::from_scenario(sc);
    let i = sc.wifi_only().id;
    let j = sc.combined().id;
    let cands_i = candidate_strategies(sc, &ctx, i, grid_steps);
    let cands_j = candidate_strategies(sc, &ctx, j, grid_steps);

    let n_i = cands_i.len();
    let n_j = cands_j.len();
    let mut profit_i = vec![f64::NEG_INFINITY; n_i * n_j];
    let mut profit_j = vec![f64::NEG_INFINITY; n_i * n_j];
    let mut feasible = vec![false; n_i * n_j];

    let mut profile = sc.initial.clone();
    for (a, si) in cands_i.iter().enumerate() {
        for (b, sj) in cands_j.iter().enumerate() {
            profile.strategies[i.0] = *si;
            profile.strategies[j.0] = *sj;
            let loads = loads_for(sc, &ctx, &profile);
            if loads.check_feasible(sc).is_ok() {
                let idx = a * n_j + b;
                feasible[idx] = true;
                profit_i[idx] = loads.profit(sc, i.0);
                profit_j[idx] = loads.profit(sc, j.0);
            }
        }
    }

    let mut out = Vec::new();
    for a in 0..n_i {
        for b in 0..n_j {
            let idx = a * n_j + b;
            if !feasible[idx] {
                continue;
            }
            let beats_i = (0..n_i)
                .any(|a2| feasible[a2 * n_j + b] && profit_i[a2 * n_j + b] > profit_i[idx] + TOL);
            if beats_i {
                continue;
            }
            let beats_j = (0..n_j)
                .any(|b2| feasible[a * n_j + b2] && profit_j[a * n_j + b2] > profit_j[idx] + TOL);
            if beats_j {
                continue;
            }
            let mut p = sc.initial.clone();
            p.strategies[i.0] = cands_i[a];
            p.strategies[j.0] = cands_j[b];
            out.push(p);
        }
    }
    Ok(out)
}

/// Terminal condition of the best-response iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum BrdOutcome {
    FixedPoint {
        profile: StrategyProfile,
        iterations: u32,
    },
    Cycle {
        period: usize,
        profiles: Vec<StrategyProfile>,
    },
    NonConvergence {
        last: StrategyProfile,
        iterations: u32,
    },
}

/// Alternates exact grid best responses (Wi-Fi-only operator first, then the
/// combined one) until a profile repeats. A repeat of the immediately
/// preceding profile is a fixed point; any longer repeat is a cycle.
pub fn best_response_dynamics(
    sc: &Scenario,
    initial: &StrategyProfile,
    grid_steps: usize,
    max_iter: u32,
) -> Result<BrdOutcome> {
    let ctx = DemandContext::from_scenario(sc);
    let i = sc.wifi_only().id;
    let j = sc.combined().id;
    let mut history: Vec<StrategyProfile> = vec![initial.clone()];
    for iter in 1..=max_iter {
        let current = history.last().unwrap().clone();
        let after_i = best_response_in_context(sc, &ctx, i, &current, grid_steps)?;
        let next = best_response_in_context(sc, &ctx, j, &after_i, grid_steps)?;
        if next.close_to(history.last().unwrap()) {
            return Ok(BrdOutcome::FixedPoint { profile: next, iterations: iter });
        }
        if let Some(pos) = history.iter().position(|p| p.close_to(&next)) {
            let period = history.len() - pos;
            return Ok(BrdOutcome::Cycle {
                period,
                profiles: history[pos..].to_vec(),
            });
        }
        history.push(next);
    }
    Ok(BrdOutcome::NonConvergence {
        last: history.pop().unwrap(),
        iterations: max_iter,
    })
}

/// Welfare comparison between the uncoordinated equilibrium and the best
/// jointly coordinated profile on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareGap {
    pub equilibrium_welfare: f64,
    pub coordinated_welfare: f64,
    pub gap: f64,
    pub relative_gap: f64,
    /// Number of grid Nash equilibria found (multiplicity is reported, the
    /// tie-break-selected one is used).
    pub equilibria_found: usize,
}

/// Deterministic selection order over equilibria: lowest total unlicensed
/// placement first, then lexicographic over the strategy fields.
pub(crate) fn selection_key(sc: &Scenario, profile: &StrategyProfile) -> (f64, Vec<f64>) {
    let ctx = DemandContext::from_scenario(sc);
    let loads = loads_for(sc, &ctx, profile);
    let mut lex = Vec::new();
    for s in &profile.strategies {
        lex.push(s.offload[0]);
        lex.push(s.offload[1]);
        lex.push(s.admitted_extra);
    }
    (loads.unlicensed_total(), lex)
}

fn key_less(a: &(f64, Vec<f64>), b: &(f64, Vec<f64>)) -> bool {
    if (a.0 - b.0).abs() > TOL {
        return a.0 < b.0;
    }
    for (x, y) in a.1.iter().zip(b.1.iter()) {
        if (x - y).abs() > TOL {
            return x < y;
        }
    }
    false
}

/// Quantifies the tragedy-of-the-commons externality on the strategy grid.
pub fn commons_welfare_gap(sc: &Scenario, grid_steps: usize) -> Result<WelfareGap> {
    let ctx = DemandContext::from_scenario(sc);
    let equilibria = nash_oracle(sc, grid_steps)?;

    let eq_profile = match best_response_dynamics(sc, &sc.initial, grid_steps, 64)? {
        BrdOutcome::FixedPoint { profile, .. } => profile,
        BrdOutcome::Cycle { .. } | BrdOutcome::NonConvergence { .. } => equilibria
            .iter()
            .min_by(|a, b| {
                let ka = selection_key(sc, a);
                let kb = selection_key(sc, b);
                if key_less(&ka, &kb) {
                    std::cmp::Ordering::Less
                } else if key_less(&kb, &ka) {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .cloned()
            .ok_or(ModelError::NoEquilibrium)?,
    };
    let eq_loads = loads_for(sc, &ctx, &eq_profile);
    eq_loads.check_feasible(sc)?;
    let equilibrium_welfare = eq_loads.total_welfare(sc);

    // Joint maximization over the same grid.
    let i = sc.wifi_only().id;
    let j = sc.combined().id;
    let mut coordinated_welfare = f64::NEG_INFINITY;
    let mut profile = sc.initial.clone();
    for si in candidate_strategies(sc, &ctx, i, grid_steps) {
        for sj in candidate_strategies(sc, &ctx, j, grid_steps) {
            profile.strategies[i.0] = si;
            profile.strategies[j.0] = sj;
            let loads = loads_for(sc, &ctx, &profile);
            if loads.check_feasible(sc).is_ok() {
                coordinated_welfare = coordinated_welfare.max(loads.total_welfare(sc));
            }
        }
    }
    if !coordinated_welfare.is_finite() {
        return Err(ModelError::NoFeasibleProfile(j));
    }

    let gap = coordinated_welfare - equilibrium_welfare;
    let relative_gap = if coordinated_welfare.abs() > TOL {
        gap / coordinated_welfare.abs()
    } else {
        0.0
    };
    Ok(WelfareGap {
        equilibrium_welfare,
        coordinated_welfare,
        gap,
        relative_gap,
        equilibria_found: equilibria.len(),
    })
}
