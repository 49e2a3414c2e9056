//! Scratch calibration runs for picking the committed landscape.

use depin_core::depinning::{find_critical_force, BisectionOptions};
use depin_core::evolution::{run_until_travel, SimConfig, Simulation, TravelOutcome};
use depin_core::obstacle::{build_random_obstacles, ObstacleSpec};
use depin_core::spectral::GridField;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(String::as_str).unwrap_or("bench");

    let spec = ObstacleSpec {
        site_size: 1.0 / 16.0,
        site_probability: 0.15,
        well_depth: 1.0 / 16.0,
        rng_seed: args
            .get(2)
            .and_then(|s| s.parse().ok())
            .unwrap_or(2011),
    };
    let obstacle = build_random_obstacles(&spec).unwrap();
    let cfg = SimConfig {
        n: 256,
        ..SimConfig::default()
    };

    match mode {
        "bench" => {
            let g0 = GridField::zeros(cfg.n).unwrap();
            let mut sim = Simulation::new(&cfg.with_force(0.05), &obstacle, &g0).unwrap();
            let t0 = Instant::now();
            let steps = 2_000_000u64;
            for _ in 0..steps {
                sim.step_once().unwrap();
            }
            let dt = t0.elapsed().as_secs_f64();
            println!(
                "{} steps in {:.2}s = {:.0} steps/s ({:.2} us/step), mean={:.3}",
                steps,
                dt,
                steps as f64 / dt,
                1e6 * dt / steps as f64,
                sim.mean()
            );
        }
        "coarse" => {
            let t0 = Instant::now();
            let r = find_critical_force(
                &cfg,
                &obstacle,
                &BisectionOptions {
                    lower: 0.0,
                    upper: 0.5,
                    accuracy: 1e-4,
                },
            )
            .unwrap();
            println!(
                "seed {}: F* in [{:.6}, {:.6}] after {} probes, {:.1}s",
                spec.rng_seed,
                r.lower,
                r.upper,
                r.probes.len(),
                t0.elapsed().as_secs_f64()
            );
        }
        "probe" => {
            // time the worst-case near-critical probes at a given distance
            let f_star: f64 = args.get(3).and_then(|s| s.parse().ok()).expect("pass F*");
            let eps: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1e-9);
            for f in [f_star - eps, f_star + eps] {
                let t0 = Instant::now();
                let g0 = GridField::zeros(cfg.n).unwrap();
                match run_until_travel(&g0, &cfg.with_force(f), &obstacle) {
                    Ok(r) => println!(
                        "F = {:.12}: {:?} after t={:.1} ({:.1}s wall)",
                        f,
                        r.outcome == TravelOutcome::Traveled,
                        r.elapsed_time,
                        t0.elapsed().as_secs_f64()
                    ),
                    Err(e) => println!("F = {:.12}: {e} ({:.1}s wall)", f, t0.elapsed().as_secs_f64()),
                }
            }
        }
        "full" => {
            let t0 = Instant::now();
            let r = find_critical_force(&cfg, &obstacle, &BisectionOptions::default()).unwrap();
            println!(
                "seed {}: F* in [{:.12}, {:.12}] after {} probes, {:.1}s",
                spec.rng_seed,
                r.lower,
                r.upper,
                r.probes.len(),
                t0.elapsed().as_secs_f64()
            );
        }
        other => eprintln!("unknown mode {other}"),
    }
}
