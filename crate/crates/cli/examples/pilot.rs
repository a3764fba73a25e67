//! Runs the desk-scale experiments once and writes the pinned pilot file
//! read by the acceptance run.
//!
//! `cargo run --release -p renoir-cli --example pilot [out.json]`

use std::path::{Path, PathBuf};
use std::time::Instant;

use renoir_cli::config::ExperimentConfig;
use renoir_cli::experiments::{
    min_slack, run_attack_pattern, run_bound_check, run_tradeoff, AttackPatternSpec, BoundCheckSpec, Pilot, PilotPins,
    TradeoffSpec,
};

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json, Path::new(".")).expect("pilot config is valid")
}

fn main() -> renoir::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pilot.json"));

    let blobs = config(
        r#"{"seed": 5,
            "dataset": {"kind": "blobs", "n": 400, "centers": [[-0.5, 0.0], [0.5, 0.0]], "spread": 0.15},
            "model": {"hidden": [16, 16]}, "noise": "none",
            "training": {"epochs": 50, "lr_schedule": [[0, 0.05], [37, 0.005]]}}"#,
    );
    let moons = config(
        r#"{"seed": 5,
            "dataset": {"kind": "moons", "n": 400, "noise_sd": 0.05},
            "model": {"hidden": [16, 16]}, "noise": "none",
            "training": {"epochs": 100, "lr_schedule": [[0, 0.05], [75, 0.005]]}}"#,
    );

    let bound_check = BoundCheckSpec {
        base: blobs.clone(),
        sigmas: vec![0.1, 0.3, 0.5],
        alphas: (1..=10).map(|k| 0.02 * k as f64).collect(),
        grid_resolution: 4,
        grid_draws: 100,
        attack_seed: 7,
        mc: 1000,
        mc_seed: 11,
    };
    let tradeoff = TradeoffSpec {
        base: blobs,
        sigmas: vec![0.01, 0.1, 0.3, 0.5, 1.0],
        curve_sigmas: [0.13, 0.5],
        alpha_grid: (0..=50).map(|k| 0.01 * k as f64).collect(),
        mc: 2000,
        mc_seed: 13,
    };
    let attack_pattern = AttackPatternSpec {
        base: moons,
        sigma: 0.3,
        diameter_fraction: 0.1,
        steps: 20,
        step_fraction: 0.1,
        eot_samples: 80,
        attack_seed: 17,
        mc: 1000,
        mc_seed: 19,
    };

    let t = Instant::now();
    let cells = run_bound_check(&bound_check)?;
    eprintln!(
        "bound check: {} cells, min slack {:.4} ({:.1?})",
        cells.len(),
        min_slack(&cells),
        t.elapsed()
    );
    let t = Instant::now();
    let trade = run_tradeoff(&tradeoff)?;
    eprintln!(
        "tradeoff: {:?}, crossings {} ({:.1?})",
        trade.accuracies,
        trade.crossings(),
        t.elapsed()
    );
    let t = Instant::now();
    let pattern = run_attack_pattern(&attack_pattern)?;
    eprintln!("attack pattern: {pattern:?} ({:.1?})", t.elapsed());

    let pilot = Pilot {
        bound_check,
        tradeoff,
        attack_pattern,
        pinned: PilotPins {
            bound_check_min_slack: min_slack(&cells),
            tradeoff_accuracies: trade.accuracies.clone(),
            tradeoff_crossings: trade.crossings(),
            attack_pattern: pattern,
        },
    };
    let mut text = serde_json::to_string_pretty(&pilot)?;
    text.push('\n');
    std::fs::write(&out, text)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}
