//! Identification under a combined noise-plus-harmonic disturbance.
//!
//! The harmonic term never averages away, so the estimate converges to a
//! neighborhood of the truth whose size is the disturbance-to-regressor
//! ratio `|W| / Omega`; as the regressor excitation fades, that
//! neighborhood grows interval by interval.
//!
//! ```bash
//! cargo run --example harmonic_disturbance
//! ```

use pcid::config::parse_config;
use pcid::harness::run_experiment;

fn main() {
    let config = parse_config(Some(r#"{"scenario": "simple_harmonic"}"#), &[]).unwrap();
    let output = run_experiment(&config).unwrap();
    let m = &output.metrics;

    println!(
        "disturbance: uniform({:.2}) + {:.2} sin({} t), declared bound {}",
        config.disturbance.noise_amplitude,
        config.disturbance.harmonic_amplitude,
        config.disturbance.harmonic_frequency,
        config.w_max
    );
    println!(
        "detections at {:?} (true switches {:?}), {} false alarms",
        output.resets.iter().map(|r| (r * 1e3).round() / 1e3).collect::<Vec<_>>(),
        m.switches.iter().map(|s| s.time).collect::<Vec<_>>(),
        m.false_alarms
    );
    println!();
    println!("{:<22} {:<16} {:<16}", "interval", "mean |W|/Omega", "terminal error");
    for iv in &m.intervals {
        println!(
            "[{:<6.2}, {:<6.2})      {:<16.3} {:<16.3e}",
            iv.start,
            iv.end,
            iv.ub_mean.unwrap_or(f64::NAN),
            iv.terminal_theta_err.unwrap_or(f64::NAN)
        );
    }
    println!();
    println!(
        "the bound level rises on the later intervals because the regressor's \
         second component decays away while the harmonic keeps its amplitude"
    );
}
