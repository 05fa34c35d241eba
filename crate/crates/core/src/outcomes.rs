//! Market-outcome classification: capacity regimes and the
//! self-balancing / deadlock / backhaul-limited verdict.

use serde::{Deserialize, Serialize};

use crate::dynamics::{detect_oscillation, Oscillation, Trajectory};
use crate::equilibrium::WelfareGap;
use crate::error::{ModelError, Result};
use crate::model::ClassId;
use crate::scenario::Scenario;

/// Which resource ultimately binds the unlicensed ecosystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// The shared band can run out before backhauls do; tragedy dynamics
    /// are possible.
    WifiBottleneck,
    /// Aggregate backhaul cannot load the band past the bulk quality
    /// floor; the commons is structurally protected.
    BackhaulBottleneck,
}

/// Trajectory-level verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    SelfBalancing,
    SystemDeadlock,
    BackhaulLimited,
}

/// Verdict plus the measurements it rests on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeLabel {
    pub label: Outcome,
    pub evidence: OutcomeEvidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeEvidence {
    pub regime: Regime,
    pub oscillation: Oscillation,
    pub final_quality_unlicensed: f64,
    pub final_unlicensed_demand: f64,
    pub deadlock_quality_threshold: f64,
    pub relative_welfare_gap: f64,
}

/// Decides the capacity regime from the shared capacity, the per-provider
/// backhaul capacities, and the bulk quality floor. The boundary counts as
/// backhaul-bottlenecked: even jointly saturated backhauls cannot push the
/// shared band below the floor.
pub fn capacity_regime(
    wifi_capacity: f64,
    backhaul_capacities: &[f64],
    bulk_floor: f64,
) -> Result<Regime> {
    if wifi_capacity <= 0.0 {
        return Err(ModelError::NonPositiveCapacity(wifi_capacity));
    }
    for &c in backhaul_capacities {
        if c <= 0.0 {
            return Err(ModelError::NonPositiveCapacity(c));
        }
    }
    if !(0.0..=1.0).contains(&bulk_floor) {
        return Err(ModelError::FloorOutOfRange(bulk_floor));
    }
    let total: f64 = backhaul_capacities.iter().sum();
    if total <= (1.0 - bulk_floor) * wifi_capacity {
        Ok(Regime::BackhaulBottleneck)
    } else {
        Ok(Regime::WifiBottleneck)
    }
}

const ABANDONMENT_FRACTION: f64 = 0.05;

/// Labels a finished trajectory.
///
/// Precedence: a backhaul-bottlenecked market is `BackhaulLimited`
/// regardless of its dynamics; otherwise a starved band, a large welfare
/// gap, or demand draining off the band means `SystemDeadlock`; everything
/// else is `SelfBalancing`.
pub fn classify(
    sc: &Scenario,
    trajectory: &Trajectory,
    welfare: &WelfareGap,
) -> Result<OutcomeLabel> {
    let last = trajectory.final_state();
    if last.loc_tag != sc.loc_tag {
        return Err(ModelError::ScenarioMismatch {
            trajectory: last.loc_tag.clone(),
            scenario: sc.loc_tag.clone(),
        });
    }

    let backhauls: Vec<f64> = sc.providers.iter().map(|p| p.backhaul_capacity()).collect();
    let bulk_floor = sc.quality_floor(ClassId::Bulk);
    let regime = capacity_regime(sc.wifi_capacity(), &backhauls, bulk_floor)?;
    let oscillation = detect_oscillation(trajectory)?;

    let threshold = sc
        .thresholds
        .deadlock_qos
        .unwrap_or(bulk_floor / 2.0);
    let evidence = OutcomeEvidence {
        regime,
        oscillation,
        final_quality_unlicensed: last.qos.unlicensed,
        final_unlicensed_demand: last.unlicensed_total(),
        deadlock_quality_threshold: threshold,
        relative_welfare_gap: welfare.relative_gap,
    };

    if regime == Regime::BackhaulBottleneck {
        return Ok(OutcomeLabel { label: Outcome::BackhaulLimited, evidence });
    }

    let initial_unlicensed = trajectory.states[0].unlicensed_total();
    let abandoned = matches!(oscillation, Oscillation::Drift { falling: true })
        && evidence.final_unlicensed_demand <= ABANDONMENT_FRACTION * initial_unlicensed;
    let starved = last.qos.unlicensed < threshold;
    let gapped = welfare.relative_gap > sc.thresholds.relative_gap;
    let label = if starved || gapped || abandoned {
        Outcome::SystemDeadlock
    } else {
        Outcome::SelfBalancing
    };
    Ok(OutcomeLabel { label, evidence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, StrategyPolicy};
    use crate::equilibrium::commons_welfare_gap;
    use crate::presets;

    #[test]
    fn regime_boundary_is_backhaul_bottleneck() {
        // sum C_b = 80 = (1 - 0.2) * 100 exactly
        let r = capacity_regime(100.0, &[50.0, 30.0], 0.2).unwrap();
        assert_eq!(r, Regime::BackhaulBottleneck);
    }

    #[test]
    fn regime_above_boundary_is_wifi_bottleneck() {
        let r = capacity_regime(100.0, &[50.0, 31.0], 0.2).unwrap();
        assert_eq!(r, Regime::WifiBottleneck);
    }

    #[test]
    fn regime_rejects_nonpositive_capacity() {
        assert!(matches!(
            capacity_regime(0.0, &[50.0], 0.2),
            Err(ModelError::NonPositiveCapacity(_))
        ));
        assert!(matches!(
            capacity_regime(100.0, &[50.0, 0.0], 0.2),
            Err(ModelError::NonPositiveCapacity(_))
        ));
    }

    #[test]
    fn starved_band_is_deadlock() {
        let sc = presets::sabotage_scenario();
        let profile =
            crate::dynamics::sabotage_strategy(&sc, sc.combined().id).unwrap();
        let mut sabotaged = sc.clone();
        sabotaged.initial = profile;
        let t = simulate(&sabotaged, &sabotaged.migration, StrategyPolicy::Static, 8).unwrap();
        let welfare = commons_welfare_gap(&sabotaged, 2).unwrap();
        let label = classify(&sabotaged, &t, &welfare).unwrap();
        assert_eq!(label.label, Outcome::SystemDeadlock);
        assert!(label.evidence.final_quality_unlicensed
            < label.evidence.deadlock_quality_threshold);
    }

    #[test]
    fn backhaul_bottleneck_takes_precedence() {
        let sc = presets::backhaul_starved_scenario();
        let t = simulate(&sc, &sc.migration, StrategyPolicy::Static, 8).unwrap();
        let welfare = commons_welfare_gap(&sc, 2).unwrap();
        let label = classify(&sc, &t, &welfare).unwrap();
        assert_eq!(label.label, Outcome::BackhaulLimited);
        assert_eq!(label.evidence.regime, Regime::BackhaulBottleneck);
        // the shared band never dips below the bulk floor in this regime
        for state in &t.states {
            assert!(
                state.qos.unlicensed
                    >= sc.quality_floor(ClassId::Bulk) - crate::model::TOL
            );
        }
    }

    #[test]
    fn quiet_market_is_self_balancing() {
        let sc = presets::symmetric_offers_scenario();
        let t = simulate(&sc, &sc.migration, StrategyPolicy::Static, 8).unwrap();
        let welfare = commons_welfare_gap(&sc, 2).unwrap();
        let label = classify(&sc, &t, &welfare).unwrap();
        assert_eq!(label.label, Outcome::SelfBalancing);
    }

    #[test]
    fn oscillating_market_stays_self_balancing_with_evidence() {
        let sc = presets::abandon_redeploy_scenario();
        let t = simulate(&sc, &sc.migration, StrategyPolicy::Static, 16).unwrap();
        let welfare = commons_welfare_gap(&sc, 2).unwrap();
        let label = classify(&sc, &t, &welfare).unwrap();
        assert_eq!(label.label, Outcome::SelfBalancing);
        assert!(matches!(
            label.evidence.oscillation,
            Oscillation::Periodic { period: 2, .. }
        ));
    }

    #[test]
    fn mismatched_state_rejected() {
        let sc = presets::slack_scenario();
        let mut other = sc.clone();
        other.loc_tag = "somewhere-else".into();
        let t = simulate(&other, &other.migration, StrategyPolicy::Static, 8).unwrap();
        let welfare = commons_welfare_gap(&sc, 2).unwrap();
        assert!(matches!(
            classify(&sc, &t, &welfare),
            Err(ModelError::ScenarioMismatch { .. })
        ));
    }
}
