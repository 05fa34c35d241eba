//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL verdict line (visible under `--nocapture` or on failure).

use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use offload_core::equilibrium::{
    best_response_dynamics, commons_welfare_gap, intra_provider_equilibrium, nash_oracle,
    BrdOutcome,
};
use offload_core::scenario::licensed_air;
use offload_core::{
    apply_strategy, best_response, classify, detect_oscillation, presets, sabotage_strategy,
    simulate, ClassId, NetworkKind, Oscillation, Outcome, ProviderId, Scenario, StrategyPolicy,
    TOL,
};

const BIN: &str = env!("CARGO_BIN_EXE_offload-commons");

fn verdict(number: usize, name: &str, ok: bool) {
    println!("criterion {number} ({name}): {}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {number} ({name}) failed");
}

// 1. On scarce shared bands the closed-form fixed point loads the band
// exactly to the bulk floor (residual <= 1e-6 when interior), and the
// round-based best-response simulation reaches the floor within 1e-3 in
// at most 50 rounds, across 10 randomized scarcity scenarios.
#[test]
fn criterion_1_scarcity_fixed_point_and_convergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut ok = true;
    for case in 0..10 {
        let sc = presets::random_scarcity(&mut rng);
        let floor = sc.quality_floor(ClassId::Bulk);
        let d_i = sc.base_demand[0][ClassId::Bulk.index()];

        let intra = intra_provider_equilibrium(&sc, d_i).unwrap();
        let interior = intra.converged && !intra.boundary_clamped;
        if !(interior && intra.residual <= 1e-6) {
            eprintln!("case {case}: residual {} interior {interior}", intra.residual);
            ok = false;
        }

        let t = simulate(&sc, &sc.migration, StrategyPolicy::BestResponseEachRound, 50).unwrap();
        let reached = t
            .states
            .iter()
            .any(|s| (s.qos.unlicensed - floor).abs() <= 1e-3);
        if !reached {
            let best = t
                .states
                .iter()
                .map(|s| (s.qos.unlicensed - floor).abs())
                .fold(f64::INFINITY, f64::min);
            eprintln!("case {case}: best floor distance {best}");
            ok = false;
        }
    }
    verdict(1, "scarcity fixed point and convergence", ok);
}

// 2. Every converged best-response fixed point lies in the exhaustively
// enumerated equilibrium set, across at least 20 random scenarios at
// grid resolutions up to 6.
#[test]
fn criterion_2_fixed_points_are_equilibria() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut fixed_points = 0;
    let mut ok = true;
    for trial in 0..30 {
        let sc = presets::random_small(&mut rng);
        let g = 2 + trial % 5; // grids 2..=6
        if let BrdOutcome::FixedPoint { profile, .. } =
            best_response_dynamics(&sc, &sc.initial, g, 48).unwrap()
        {
            fixed_points += 1;
            let equilibria = nash_oracle(&sc, g).unwrap();
            if !equilibria.iter().any(|e| e.close_to(&profile)) {
                eprintln!("trial {trial}: fixed point missing from oracle set");
                ok = false;
            }
        }
    }
    if fixed_points < 20 {
        eprintln!("only {fixed_points} fixed points across 30 trials");
        ok = false;
    }
    verdict(2, "fixed points are equilibria", ok);
}

// Combined provider whose licensed premium traffic is floor-sensitive:
// retained bulk beats offloaded bulk on margin, so offload happens only
// when licensed congestion threatens the premium floor.
fn qos_pressure_scenario(bulk_j: f64) -> Scenario {
    let mut sc = presets::slack_scenario();
    sc.base_demand = vec![[5.0, 0.0], [bulk_j, 30.0]];
    let j = ProviderId(1);
    sc.providers[1].licensed = Some(licensed_air(j, 100.0, 0.5));
    sc.providers[1].resale_pool = 0.0;
    for t in &mut sc.providers[1].tariffs {
        match (t.network_kind, t.class) {
            (NetworkKind::LicensedAir, ClassId::Bulk) => t.price = 2.0,
            (NetworkKind::UnlicensedAir, ClassId::Premium) => t.price = 1.5,
            _ => {}
        }
    }
    sc
}

// 3. When the combined provider's licensed quality degrades, its best
// response strictly raises the bulk offload fraction (10 constructed
// degradation cases against a healthy baseline).
#[test]
fn criterion_3_quality_degradation_raises_offload() {
    let j = ProviderId(1);
    let baseline = qos_pressure_scenario(5.0);
    let base_state = apply_strategy(&baseline, &baseline.initial).unwrap();
    let base_q = base_state.qos.licensed[j.0].unwrap();
    let base_br = best_response(&baseline, j, &baseline.initial, baseline.grid_steps).unwrap();
    let base_offload = base_br.of(j).offload[ClassId::Bulk.index()];

    let mut ok = true;
    for case in 0..10 {
        let bulk = 22.0 + 2.0 * case as f64; // 22, 24, .., 40
        let sc = qos_pressure_scenario(bulk);
        let state = apply_strategy(&sc, &sc.initial).unwrap();
        let q = state.qos.licensed[j.0].unwrap();
        if q >= base_q {
            eprintln!("case {case}: licensed quality did not degrade ({q} vs {base_q})");
            ok = false;
            continue;
        }
        let br = best_response(&sc, j, &sc.initial, sc.grid_steps).unwrap();
        let offload = br.of(j).offload[ClassId::Bulk.index()];
        if offload <= base_offload + TOL {
            eprintln!("case {case}: offload {offload} did not exceed baseline {base_offload}");
            ok = false;
        }
    }
    verdict(3, "quality degradation raises offload", ok);
}

// 4. The selfish equilibrium leaves a relative welfare gap above 0.1 on
// the scarce shared band; scaling the band tenfold closes the gap to
// within 1e-9.
#[test]
fn criterion_4_commons_gap_opens_and_closes() {
    let scarce = commons_welfare_gap(&presets::scarcity_scenario(), 4).unwrap();
    let abundant = commons_welfare_gap(&presets::abundance_scenario(), 4).unwrap();
    let mut ok = true;
    if scarce.relative_gap <= 0.1 {
        eprintln!("scarce relative gap {} not above 0.1", scarce.relative_gap);
        ok = false;
    }
    if abundant.relative_gap.abs() > 1e-9 {
        eprintln!("abundant relative gap {} not closed", abundant.relative_gap);
        ok = false;
    }
    verdict(4, "commons gap opens under scarcity, closes under abundance", ok);
}

// 5. A CLI sweep of aggregate backhaul across the protection boundary
// flips the regime label at exactly the boundary row, and the shared
// band never drops below the bulk floor while backhaul-limited.
#[test]
fn criterion_5_backhaul_boundary_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "schema_version": 1,
        "loc": "boundary-sweep",
        "classes": {"bulk": {"min_quality": 0.2}, "premium": {"min_quality": 0.6}},
        "wifi_capacity": 100.0,
        "providers": [
            {
                "name": "sharedco",
                "backhaul": {"capacity": 20.0, "cost_per_unit": 0.05},
                "tariffs": {"unlicensed_bulk": 1.0},
                "demand": {"bulk": 15.0},
                "resale_pool": 20.0
            },
            {
                "name": "gridco",
                "backhaul": {"capacity": 40.0, "cost_per_unit": 0.05},
                "licensed": {"capacity": 100.0, "cost_per_unit": 0.5},
                "tariffs": {"unlicensed_bulk": 1.0, "licensed_bulk": 1.2},
                "demand": {"bulk": 30.0},
                "resale_pool": 10.0
            }
        ],
        "migration": {"cap": 0.0},
        "policy": "best_response_each_round",
        "grid_steps": 2,
        "rounds": 12,
        "sweep": {
            "parameters": [
                {"param": "backhaul:sharedco", "from": 20.0, "to": 60.0, "steps": 9}
            ]
        }
    });
    let cfg_path = tmp.path().join("config.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let out = tmp.path().join("out");
    let r = Command::new(BIN)
        .args(["sweep", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut ok = true;
    // swept backhaul 20..=60 in steps of 5 against a fixed 40: the
    // aggregate crosses (1 - 0.2) * 100 = 80 after the value-40 row
    for (row, line) in csv.lines().skip(1).enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let value: f64 = cols[2].parse().unwrap();
        let regime = cols[5];
        let outcome = cols[6];
        let min_q: f64 = cols[8].parse().unwrap_or(f64::NAN);
        let error = cols[10];
        if !error.is_empty() {
            eprintln!("row {row}: unexpected error {error}");
            ok = false;
            continue;
        }
        let backhaul_limited = value + 40.0 <= 80.0 + 1e-9;
        if backhaul_limited != (regime == "backhaul_bottleneck") {
            eprintln!("row {row}: value {value} regime {regime}");
            ok = false;
        }
        if backhaul_limited && outcome != "backhaul_limited" {
            eprintln!("row {row}: value {value} outcome {outcome}");
            ok = false;
        }
        if backhaul_limited && min_q < 0.2 - 1e-9 {
            eprintln!("row {row}: min quality {min_q} fell below the bulk floor");
            ok = false;
        }
    }
    verdict(5, "backhaul boundary sweep", ok);
}

// 6. Flooding the shared band strictly hurts the Wi-Fi-only rival when
// the band is the bottleneck, and cannot hurt it (within 1e-9) when the
// protection boundary makes flooding ineffective.
#[test]
fn criterion_6_sabotage_and_immunity() {
    let mut ok = true;

    let sc = presets::sabotage_scenario();
    let i = sc.wifi_only().id;
    let j = sc.combined().id;
    let before = apply_strategy(&sc, &sc.initial).unwrap().profits[i.0];
    let flood = sabotage_strategy(&sc, j).unwrap();
    let after = apply_strategy(&sc, &flood).unwrap().profits[i.0];
    if after >= before - TOL {
        eprintln!("wifi-bottleneck flood did not hurt the rival: {before} -> {after}");
        ok = false;
    }

    let sc = presets::backhaul_starved_scenario();
    let i = sc.wifi_only().id;
    let j = sc.combined().id;
    let before = apply_strategy(&sc, &sc.initial).unwrap().profits[i.0];
    let flood = sabotage_strategy(&sc, j).unwrap();
    let after = apply_strategy(&sc, &flood).unwrap().profits[i.0];
    if (after - before).abs() > 1e-9 {
        eprintln!("backhaul-limited flood changed the rival's profit: {before} -> {after}");
        ok = false;
    }

    verdict(6, "sabotage bites only when the band is the bottleneck", ok);
}

// 7. Quality-chasing abandonment and redeployment produces a period-two
// oscillation that still classifies as self-balancing.
#[test]
fn criterion_7_abandon_redeploy_oscillation() {
    let sc = presets::abandon_redeploy_scenario();
    let t = simulate(&sc, &sc.migration, StrategyPolicy::Static, sc.rounds).unwrap();
    let osc = detect_oscillation(&t).unwrap();
    let mut ok = matches!(osc, Oscillation::Periodic { period: 2, .. });
    if !ok {
        eprintln!("expected a period-2 oscillation, got {osc:?}");
    }
    let welfare = commons_welfare_gap(&sc, sc.grid_steps).unwrap();
    let label = classify(&sc, &t, &welfare).unwrap();
    if label.label != Outcome::SelfBalancing {
        eprintln!("expected self-balancing, got {:?}", label.label);
        ok = false;
    }
    if !matches!(label.evidence.oscillation, Oscillation::Periodic { period: 2, .. }) {
        eprintln!("evidence lacks the period-2 oscillation: {:?}", label.evidence.oscillation);
        ok = false;
    }
    verdict(7, "abandon/redeploy oscillates period 2 yet self-balances", ok);
}

// 8. Every subcommand writes byte-identical data artifacts across two
// runs of the same configuration (the timing manifest excluded).
#[test]
fn criterion_8_byte_identical_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let base = include_str!("../../../configs/metro_baseline.json");
    let mut sweep_cfg: serde_json::Value = serde_json::from_str(base).unwrap();
    sweep_cfg["sweep"] = serde_json::json!({
        "parameters": [
            {"param": "wifi_capacity", "from": 80.0, "to": 140.0, "steps": 5}
        ]
    });
    let base_path = tmp.path().join("base.json");
    let sweep_path = tmp.path().join("sweep.json");
    std::fs::write(&base_path, base).unwrap();
    std::fs::write(&sweep_path, sweep_cfg.to_string()).unwrap();

    let mut ok = true;
    for sub in ["equilibrium", "simulate", "classify", "sweep", "dominance"] {
        let cfg = if sub == "sweep" { &sweep_path } else { &base_path };
        let mut dirs = Vec::new();
        for run in 0..2 {
            let out = tmp.path().join(format!("{sub}-{run}"));
            let r = Command::new(BIN)
                .args([sub, "--config"])
                .arg(cfg)
                .arg("--out")
                .arg(&out)
                .output()
                .unwrap();
            assert!(r.status.success(), "{sub}: {}", String::from_utf8_lossy(&r.stderr));
            dirs.push(out);
        }
        let mut names: Vec<String> = std::fs::read_dir(&dirs[0])
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n != "manifest.json")
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let a = std::fs::read(dirs[0].join(&name)).unwrap();
            let b = std::fs::read(dirs[1].join(&name)).unwrap();
            if a != b {
                eprintln!("{sub}/{name}: runs differ");
                ok = false;
            }
        }
    }
    verdict(8, "byte-identical artifacts across reruns", ok);
}
