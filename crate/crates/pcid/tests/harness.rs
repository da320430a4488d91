//! Integration tests of the experiment engine: excitation measurement
//! against quadrature oracles, rate fitting, clock/reset integrity, and
//! the degenerate-run contracts.

use pcid::config::parse_config;
use pcid::harness::{excitation_crossing, fit_rate, measure_excitation, run_experiment};
use pcid::output::metrics_json;

#[test]
fn noise_free_run_detects_both_switches_near_the_published_instants() {
    let cfg = parse_config(
        Some(r#"{"scenario": "simple_noise_free", "tau_s": 1e-3, "horizon": 1.5}"#),
        &[],
    )
    .unwrap();
    let out = run_experiment(&cfg).unwrap();
    let t_hats: Vec<f64> = out.events.iter().map(|e| e.t_hat).collect();
    assert_eq!(t_hats.len(), 2);
    assert!((t_hats[0] - 0.6).abs() < 0.005, "{t_hats:?}");
    assert!((t_hats[1] - 1.1).abs() < 0.005, "{t_hats:?}");
}

#[test]
fn constant_parameters_produce_zero_events_over_the_full_horizon() {
    let cfg = parse_config(
        Some(
            r#"{
                "scenario": "custom",
                "horizon": 3.0,
                "schedule": {"segments": [{"theta": [[-2.0], [1.0]], "start": 0.0, "model": 1}]},
                "regressor": [{"kind": "constant", "value": 1.0}, {"kind": "exp_decay", "rate": 1.0}]
            }"#,
        ),
        &[],
    )
    .unwrap();
    let out = run_experiment(&cfg).unwrap();
    assert!(out.events.is_empty(), "false events: {:?}", out.events);
    assert_eq!(out.metrics.false_alarms, 0);
}

/// Once the regressor has been finitely exciting after a reset, the
/// scalar regressor stays strictly positive until the next reset.
#[test]
fn delta_stays_positive_after_excitation() {
    let cfg = parse_config(None, &[]).unwrap();
    let out = run_experiment(&cfg).unwrap();
    let mut anchors = vec![0.0];
    anchors.extend_from_slice(&out.resets);
    let switch_ends = [0.5, 1.0, out.config.horizon];
    for (anchor, end) in anchors.iter().zip(switch_ends.iter()) {
        let crossing = excitation_crossing(&out.trace, *anchor, cfg.excitation_level)
            .expect("excitation reached after each reset");
        let min_delta = out
            .trace
            .iter()
            .filter(|r| r.t >= anchor + crossing && r.t < *end)
            .map(|r| r.delta)
            .fold(f64::INFINITY, f64::min);
        assert!(
            min_delta > 0.0,
            "delta lost positivity on [{}, {end}): min {min_delta}",
            anchor + crossing
        );
    }
}

#[test]
fn zero_horizon_gives_empty_trace_and_metrics() {
    let cfg = parse_config(Some(r#"{"horizon": 0.0}"#), &[]).unwrap();
    let out = run_experiment(&cfg).unwrap();
    assert!(out.trace.is_empty());
    assert_eq!(out.metrics.event_count, 0);
    assert!(out.metrics.theta_err_final.is_none());
}

#[test]
fn resets_land_on_the_grid_point_nearest_the_scheduled_instant() {
    let cfg = parse_config(None, &[]).unwrap();
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.resets.len(), out.events.len());
    for (reset, ev) in out.resets.iter().zip(out.events.iter()) {
        assert!(
            (reset - ev.t_hat).abs() <= cfg.tau_s / 2.0 + 1e-12,
            "reset {reset} vs scheduled {}",
            ev.t_hat
        );
    }
}

mod excitation {
    use super::*;

    fn trace_for(regressor: &str) -> pcid::harness::RunOutput {
        let cfg = parse_config(
            Some(&format!(
                r#"{{
                    "scenario": "custom",
                    "horizon": 0.6,
                    "schedule": {{"segments": [{{"theta": [[1.0], [1.0]], "start": 0.0, "model": 1}}]}},
                    "regressor": {regressor}
                }}"#
            )),
            &[],
        )
        .unwrap();
        run_experiment(&cfg).unwrap()
    }

    #[test]
    fn zero_regressor_has_zero_excitation() {
        let out = trace_for(r#"[{"kind": "constant", "value": 0.0}, {"kind": "constant", "value": 0.0}]"#);
        assert_eq!(measure_excitation(&out.trace, 0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn rank_deficient_constant_regressor_has_zero_excitation() {
        let out = trace_for(r#"[{"kind": "constant", "value": 1.0}, {"kind": "constant", "value": 0.0}]"#);
        let alpha = measure_excitation(&out.trace, 0.0, 0.5).unwrap();
        assert!(alpha.abs() < 1e-12, "rank-one regressor measured {alpha}");
        assert!(excitation_crossing(&out.trace, 0.0, 1e-4).is_none());
    }

    /// Quadrature oracle: for phi = [1, e^-t] over [0, 0.5) the Gram
    /// integral has closed-form entries and its minimum eigenvalue is
    /// computable directly.
    #[test]
    fn decaying_regressor_matches_the_quadrature_oracle() {
        let out = trace_for(r#"[{"kind": "constant", "value": 1.0}, {"kind": "exp_decay", "rate": 1.0}]"#);
        let alpha = measure_excitation(&out.trace, 0.0, 0.5).unwrap();

        let (a, b) = (0.5f64, 1.0 - (-0.5f64).exp());
        let c = (1.0 - (-1.0f64).exp()) / 2.0;
        let tr = a + c;
        let det = a * c - b * b;
        let oracle = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
        assert!(
            (alpha - oracle).abs() < 1e-3,
            "measured {alpha}, oracle {oracle}"
        );
        assert!(alpha > 0.0);
    }

    #[test]
    fn empty_window_is_a_domain_error() {
        let out = trace_for(r#"[{"kind": "constant", "value": 1.0}, {"kind": "constant", "value": 0.0}]"#);
        assert!(measure_excitation(&out.trace, 10.0, 11.0).is_err());
    }
}

mod rate_fit {
    use super::*;

    #[test]
    fn synthetic_exponential_recovers_its_rate() {
        let points: Vec<(f64, f64)> = (0..1000)
            .map(|k| {
                let t = k as f64 * 1e-3;
                (t, (-5.0 * t).exp())
            })
            .collect();
        let slope = fit_rate(&points, 0.0, 1.0, 0.0).unwrap();
        assert!((slope + 5.0).abs() < 1e-6, "slope {slope}");
    }

    #[test]
    fn constant_error_has_zero_slope() {
        let points: Vec<(f64, f64)> = (0..100).map(|k| (k as f64, 0.25)).collect();
        let slope = fit_rate(&points, 0.0, 100.0, 0.0).unwrap();
        assert_eq!(slope, 0.0);
    }

    #[test]
    fn insufficient_points_is_not_an_error() {
        let points = vec![(0.0, 1.0), (1.0, 0.5)];
        assert!(fit_rate(&points, 0.0, 2.0, 0.0).is_none());
        // everything below the floor is ignored too
        let tiny: Vec<(f64, f64)> = (0..100).map(|k| (k as f64, 1e-12)).collect();
        assert!(fit_rate(&tiny, 0.0, 100.0, 1e-9).is_none());
    }
}

/// Halving the step changes the mid-decay error by far less than the
/// first-order Euler prediction factor.
#[test]
fn step_refinement_is_consistent() {
    let mut errs = Vec::new();
    for tau in ["1e-4", "5e-5"] {
        let cfg = parse_config(
            Some(&format!(r#"{{"tau_s": {tau}, "horizon": 0.45}}"#)),
            &[],
        )
        .unwrap();
        let out = run_experiment(&cfg).unwrap();
        errs.push(out.metrics.theta_err_final.unwrap());
    }
    let ratio = errs[0] / errs[1];
    assert!(
        ratio > 0.5 && ratio < 2.0,
        "halving the step changed the error by {ratio}x ({errs:?})"
    );
}

/// Decimation affects only the exported rows, never the metrics.
#[test]
fn decimation_does_not_alter_metrics() {
    let full = {
        let cfg = parse_config(Some(r#"{"horizon": 1.5, "decimate": 1}"#), &[]).unwrap();
        run_experiment(&cfg).unwrap()
    };
    let decimated = {
        let cfg = parse_config(Some(r#"{"horizon": 1.5, "decimate": 100}"#), &[]).unwrap();
        run_experiment(&cfg).unwrap()
    };
    let strip = |json: String| {
        // the configs differ only in decimation, which metrics don't record
        json
    };
    assert_eq!(
        strip(metrics_json(&full).unwrap()),
        strip(metrics_json(&decimated).unwrap())
    );
}

/// Baselines read the true switching signal, never the detector: with
/// detection disabled entirely their traces are unchanged.
#[test]
fn baselines_are_independent_of_the_detector() {
    let base = [
        "baselines.concurrent.enabled=true".to_string(),
        "baselines.efficient_drem.enabled=true".to_string(),
        "horizon=1.5".to_string(),
    ];
    let with_detection = run_experiment(&parse_config(None, &base).unwrap()).unwrap();
    let mut no_detection = base.to_vec();
    // an absolute threshold far above any residual suppresses every event
    no_detection.push("eta_abs=1e9".into());
    let without = run_experiment(&parse_config(None, &no_detection).unwrap()).unwrap();
    assert_eq!(with_detection.events.len(), 2);
    assert!(without.events.is_empty());
    for law in ["concurrent", "efficient_drem"] {
        let a = &with_detection.baseline_traces[law];
        let b = &without.baseline_traces[law];
        assert_eq!(a.len(), b.len());
        for (ra, rb) in a.iter().zip(b.iter()) {
            assert_eq!(ra.theta.data(), rb.theta.data(), "{law} depends on the detector");
        }
    }
}
