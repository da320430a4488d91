//! Build and run a scenario that is not a preset.
//!
//! Three segments, a three-row regressor mixing a constant, a decay and
//! a sinusoid, and mild measurement noise with the robust detector.
//! The same JSON works as a `--config` file for the CLI.
//!
//! ```bash
//! cargo run --example custom_scenario
//! ```

use pcid::config::parse_config;
use pcid::harness::run_experiment;

fn main() {
    let json = r#"{
        "scenario": "custom",
        "horizon": 4.0,
        "sigma": 8.0,
        "delta_pr": 0.05,
        "rho": 1e-15,
        "w_max": 0.15,
        "schedule": {
            "segments": [
                {"theta": [[1.0], [-0.5], [2.0]], "start": 0.0, "model": 1},
                {"theta": [[0.0], [1.5], [-1.0]], "start": 1.2, "model": 2},
                {"theta": [[2.0], [0.5], [0.5]], "start": 2.6, "model": 3}
            ]
        },
        "regressor": [
            {"kind": "constant", "value": 1.0},
            {"kind": "exp_decay", "rate": 0.4},
            {"kind": "sinusoid", "amplitude": 1.0, "frequency": 3.0}
        ],
        "disturbance": {
            "kind": "uniform_noise",
            "noise_amplitude": 0.1,
            "w_max": 0.15,
            "rng_seed": 0
        }
    }"#;

    let config = parse_config(Some(json), &["seed=1".into()]).unwrap();
    let output = run_experiment(&config).unwrap();
    let m = &output.metrics;

    println!("true switches:    {:?}", m.switches.iter().map(|s| s.time).collect::<Vec<_>>());
    println!(
        "estimates:        {:?}",
        m.events.iter().map(|e| (e.t_hat * 1e3).round() / 1e3).collect::<Vec<_>>()
    );
    println!("false alarms:     {}", m.false_alarms);
    println!();
    for iv in &m.intervals {
        println!(
            "interval [{:.2}, {:.2}): terminal error {:.3e}",
            iv.start,
            iv.end,
            iv.terminal_theta_err.unwrap_or(f64::NAN)
        );
    }
    println!();
    println!(
        "the sinusoid keeps the three-dimensional regressor exciting, so every \
         segment's parameters are pinned down within a fraction of a second"
    );
}
