//! Subcommand implementations and deterministic artifact writers.

use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use offload_core::equilibrium::{
    best_response_dynamics, commons_welfare_gap, inter_provider_equilibrium,
    intra_provider_equilibrium, nash_oracle, BrdOutcome, EquilibriumReport, WelfareGap,
};
use offload_core::{
    apply_strategy, capacity_regime, classify, detect_oscillation, dominance_check, simulate,
    ClassId, MarketState, Oscillation, OutcomeLabel, Regime, Scenario, StrategyPolicy, Trajectory,
};

use crate::config::{PolicyConfig, ScenarioConfig};

pub struct RunContext<'a> {
    pub config: &'a ScenarioConfig,
    pub config_bytes: &'a [u8],
    pub out_dir: &'a Path,
    pub subcommand: &'a str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    subcommand: &'a str,
    config_sha256: String,
    wall_time_ms: u128,
}

fn policy_of(config: &ScenarioConfig) -> StrategyPolicy {
    match config.policy {
        PolicyConfig::Static => StrategyPolicy::Static,
        PolicyConfig::BestResponseEachRound => StrategyPolicy::BestResponseEachRound,
    }
}

/// Grid used for the exhaustive oracle; larger simulation grids are capped
/// so the cross-check stays tractable.
fn oracle_grid(config: &ScenarioConfig) -> usize {
    config.grid_steps.min(6)
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_outputs(
    ctx: &RunContext<'_>,
    report: &impl Serialize,
    trajectory: Option<(&Scenario, &Trajectory)>,
    started: std::time::Instant,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(ctx.out_dir)?;
    write_json(&ctx.out_dir.join("scenario.json"), ctx.config)?;
    write_json(&ctx.out_dir.join("report.json"), report)?;
    if let Some((sc, t)) = trajectory {
        write_trajectory_csv(&ctx.out_dir.join("trajectory.csv"), sc, t)?;
    }
    let manifest = Manifest {
        tool: "offload-commons",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: ctx.subcommand,
        config_sha256: hex(&Sha256::digest(ctx.config_bytes)),
        wall_time_ms: started.elapsed().as_millis(),
    };
    write_json(&ctx.out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Column layout is fixed: round, shared-band load and quality, then per
/// provider (in config order) unlicensed load, licensed load, licensed
/// quality (empty when the provider owns none), and profit.
fn write_trajectory_csv(path: &Path, sc: &Scenario, t: &Trajectory) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["round".to_string(), "unlicensed_total".into(), "q_unlicensed".into()];
    for p in &sc.providers {
        header.push(format!("{}_unlicensed", p.name));
        header.push(format!("{}_licensed", p.name));
        header.push(format!("{}_q_licensed", p.name));
        header.push(format!("{}_profit", p.name));
    }
    w.write_record(&header)?;
    for state in &t.states {
        let mut row = vec![
            state.round.to_string(),
            fmt(state.unlicensed_total()),
            fmt(state.qos.unlicensed),
        ];
        for p in &sc.providers {
            row.push(fmt(state.provider_unlicensed(p.id)));
            row.push(fmt(state.provider_licensed(p.id)));
            row.push(match state.qos.licensed[p.id.0] {
                Some(q) => fmt(q),
                None => String::new(),
            });
            row.push(fmt(state.profits[p.id.0]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt(v: f64) -> String {
    // normalize negative zero so columns never read "-0.000000000"
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.9}")
}

#[derive(Serialize)]
struct OracleSummary {
    grid_steps: usize,
    equilibria_found: usize,
    best_response_outcome: String,
    /// Whether the converged fixed point (if any) is in the oracle set.
    fixed_point_in_oracle: Option<bool>,
}

#[derive(Serialize)]
struct EquilibriumOutput {
    intra: EquilibriumReport,
    inter: EquilibriumReport,
    oracle: OracleSummary,
}

pub fn run_equilibrium(ctx: &RunContext<'_>) -> anyhow::Result<()> {
    let started = std::time::Instant::now();
    let sc = ctx.config.to_scenario();
    let initial_state = apply_strategy(&sc, &sc.initial)?;
    let d_i = initial_state.provider_unlicensed(sc.wifi_only().id);
    let intra = intra_provider_equilibrium(&sc, d_i)?;
    let inter = inter_provider_equilibrium(&sc)?;

    let g = oracle_grid(ctx.config);
    let equilibria = nash_oracle(&sc, g)?;
    let brd = best_response_dynamics(&sc, &sc.initial, g, 64)?;
    let (outcome, in_oracle) = match &brd {
        BrdOutcome::FixedPoint { profile, .. } => (
            "fixed_point".to_string(),
            Some(equilibria.iter().any(|e| e.close_to(profile))),
        ),
        BrdOutcome::Cycle { period, .. } => (format!("cycle_period_{period}"), None),
        BrdOutcome::NonConvergence { .. } => ("non_convergence".to_string(), None),
    };
    let report = EquilibriumOutput {
        intra,
        inter,
        oracle: OracleSummary {
            grid_steps: g,
            equilibria_found: equilibria.len(),
            best_response_outcome: outcome,
            fixed_point_in_oracle: in_oracle,
        },
    };
    write_outputs(ctx, &report, None, started)
}

#[derive(Serialize)]
struct SimulateOutput {
    rounds: usize,
    final_round: u64,
    final_q_unlicensed: f64,
    final_profits: Vec<f64>,
    oscillation: Oscillation,
}

pub fn run_simulate(ctx: &RunContext<'_>) -> anyhow::Result<()> {
    let started = std::time::Instant::now();
    let sc = ctx.config.to_scenario();
    let t = simulate(&sc, &sc.migration, policy_of(ctx.config), sc.rounds)?;
    let oscillation = if t.states.len() >= 4 {
        detect_oscillation(&t)?
    } else {
        Oscillation::None
    };
    let last = t.final_state();
    let report = SimulateOutput {
        rounds: sc.rounds,
        final_round: last.round,
        final_q_unlicensed: last.qos.unlicensed,
        final_profits: last.profits.clone(),
        oscillation,
    };
    write_outputs(ctx, &report, Some((&sc, &t)), started)
}

#[derive(Serialize)]
struct ClassifyOutput {
    outcome: OutcomeLabel,
    welfare: WelfareGap,
}

pub fn run_classify(ctx: &RunContext<'_>) -> anyhow::Result<()> {
    let started = std::time::Instant::now();
    let sc = ctx.config.to_scenario();
    let t = simulate(&sc, &sc.migration, policy_of(ctx.config), sc.rounds)?;
    let welfare = commons_welfare_gap(&sc, oracle_grid(ctx.config))?;
    let outcome = classify(&sc, &t, &welfare)?;
    let report = ClassifyOutput { outcome, welfare };
    write_outputs(ctx, &report, Some((&sc, &t)), started)
}

pub fn run_dominance(ctx: &RunContext<'_>) -> anyhow::Result<()> {
    let started = std::time::Instant::now();
    let sc = ctx.config.to_scenario();
    let j = sc.combined().id;
    let report = dominance_check(&sc, j, &sc.initial)?;
    write_outputs(ctx, &report, None, started)
}

#[derive(Serialize)]
struct SweepRow {
    index: usize,
    param_1: String,
    value_1: f64,
    param_2: String,
    value_2: Option<f64>,
    regime: String,
    outcome: String,
    final_q_unlicensed: Option<f64>,
    min_q_unlicensed: Option<f64>,
    relative_gap: Option<f64>,
    error: String,
}

pub fn run_sweep(ctx: &RunContext<'_>) -> anyhow::Result<()> {
    let started = std::time::Instant::now();
    let sweep = ctx
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config has no sweep section"))?;

    let linspace = |from: f64, to: f64, steps: usize| -> Vec<f64> {
        (0..steps)
            .map(|n| from + (to - from) * n as f64 / (steps - 1) as f64)
            .collect()
    };
    let first = &sweep.parameters[0];
    let second = sweep.parameters.get(1);
    let mut points = Vec::new();
    for v1 in linspace(first.from, first.to, first.steps) {
        match second {
            Some(p2) => {
                for v2 in linspace(p2.from, p2.to, p2.steps) {
                    points.push((v1, Some(v2)));
                }
            }
            None => points.push((v1, None)),
        }
    }

    // Points run in parallel; rows come back in sweep-index order.
    let rows: Vec<SweepRow> = points
        .par_iter()
        .enumerate()
        .map(|(index, (v1, v2))| {
            let mut cfg = ctx.config.clone();
            cfg.sweep = None;
            cfg.apply_sweep_value(&first.param, *v1);
            if let (Some(p2), Some(v2)) = (second, v2) {
                cfg.apply_sweep_value(&p2.param, *v2);
            }
            let base = SweepRow {
                index,
                param_1: first.param.clone(),
                value_1: *v1,
                param_2: second.map(|p| p.param.clone()).unwrap_or_default(),
                value_2: *v2,
                regime: String::new(),
                outcome: String::new(),
                final_q_unlicensed: None,
                min_q_unlicensed: None,
                relative_gap: None,
                error: String::new(),
            };
            match sweep_point(&cfg) {
                Ok(p) => SweepRow {
                    regime: p.0,
                    outcome: p.1,
                    final_q_unlicensed: Some(p.2),
                    min_q_unlicensed: Some(p.3),
                    relative_gap: Some(p.4),
                    ..base
                },
                Err(e) => SweepRow { error: e.to_string(), ..base },
            }
        })
        .collect();

    std::fs::create_dir_all(ctx.out_dir)?;
    let mut w = csv::Writer::from_path(ctx.out_dir.join("sweep.csv"))?;
    w.write_record([
        "index",
        "param_1",
        "value_1",
        "param_2",
        "value_2",
        "regime",
        "outcome",
        "final_q_unlicensed",
        "min_q_unlicensed",
        "relative_gap",
        "error",
    ])?;
    for r in &rows {
        w.write_record([
            r.index.to_string(),
            r.param_1.clone(),
            fmt(r.value_1),
            r.param_2.clone(),
            r.value_2.map(fmt).unwrap_or_default(),
            r.regime.clone(),
            r.outcome.clone(),
            r.final_q_unlicensed.map(fmt).unwrap_or_default(),
            r.min_q_unlicensed.map(fmt).unwrap_or_default(),
            r.relative_gap.map(fmt).unwrap_or_default(),
            r.error.clone(),
        ])?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct SweepSummary {
        points: usize,
        errors: usize,
    }
    let report = SweepSummary {
        points: rows.len(),
        errors: rows.iter().filter(|r| !r.error.is_empty()).count(),
    };
    write_outputs(ctx, &report, None, started)
}

fn sweep_point(cfg: &ScenarioConfig) -> anyhow::Result<(String, String, f64, f64, f64)> {
    let issues = cfg.validate();
    if !issues.is_empty() {
        anyhow::bail!("invalid point: {}", issues[0]);
    }
    let sc = cfg.to_scenario();
    let backhauls: Vec<f64> = sc.providers.iter().map(|p| p.backhaul_capacity()).collect();
    let regime = capacity_regime(
        sc.wifi_capacity(),
        &backhauls,
        sc.quality_floor(ClassId::Bulk),
    )?;
    let t = simulate(&sc, &sc.migration, policy_of(cfg), sc.rounds)?;
    let welfare = commons_welfare_gap(&sc, oracle_grid(cfg))?;
    let label = classify(&sc, &t, &welfare)?;
    let min_q = t
        .states
        .iter()
        .map(|s: &MarketState| s.qos.unlicensed)
        .fold(f64::INFINITY, f64::min);
    let regime_name = match regime {
        Regime::WifiBottleneck => "wifi_bottleneck",
        Regime::BackhaulBottleneck => "backhaul_bottleneck",
    };
    let outcome_name = match label.label {
        offload_core::Outcome::SelfBalancing => "self_balancing",
        offload_core::Outcome::SystemDeadlock => "system_deadlock",
        offload_core::Outcome::BackhaulLimited => "backhaul_limited",
    };
    Ok((
        regime_name.to_string(),
        outcome_name.to_string(),
        t.final_state().qos.unlicensed,
        min_q,
        welfare.relative_gap,
    ))
}

/// Structured runtime-error report on stderr, for exit status 3.
pub fn print_model_error(err: &anyhow::Error) {
    #[derive(Serialize)]
    struct ErrorReport {
        error: String,
    }
    let report = ErrorReport { error: format!("{err:#}") };
    let mut stderr = std::io::stderr().lock();
    let _ = writeln!(stderr, "{}", serde_json::to_string(&report).unwrap());
}
