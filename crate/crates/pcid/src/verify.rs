//! Quick self-check suite behind the `verify` CLI command: exercises the
//! load-bearing invariants on small instances in well under a second.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adaptive::EstimatorState;
use crate::config::parse_config;
use crate::drem::DremState;
use crate::harness::run_experiment;
use crate::matrix::{adjugate, determinant, min_eigenvalue, Matrix};
use crate::output::trace_csv;
use crate::signals::RegressionSample;

pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn rand_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    Matrix::from_rows(n, n, (0..n * n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
}

fn check_adjugate_identity() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let mut m = rand_matrix(&mut rng, n);
        if n > 1 && rng.gen::<bool>() {
            for j in 0..n {
                let v = m[(1, j)];
                m[(0, j)] = v;
            }
        }
        let lhs = adjugate(&m).unwrap().matmul(&m);
        let rhs = Matrix::identity(n).scale(determinant(&m).unwrap());
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    CheckResult {
        name: "adjugate identity adj(M) M = det(M) I",
        pass: worst <= 1e-9,
        detail: format!("worst entry deviation {worst:.3e}"),
    }
}

fn check_rayleigh_dominance() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let n = rng.gen_range(2..=4);
        let raw = rand_matrix(&mut rng, n);
        let sym = raw.add(&raw.transpose()).scale(0.5);
        let lmin = min_eigenvalue(&sym).unwrap();
        for _ in 0..50 {
            let x = Matrix::col_vec(&(0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect::<Vec<_>>());
            let xx = x.transpose().matmul(&x)[(0, 0)];
            if xx == 0.0 {
                continue;
            }
            let q = x.transpose().matmul(&sym.matmul(&x))[(0, 0)] / xx;
            worst = worst.max(lmin - q);
            ok &= lmin <= q + 1e-10;
        }
    }
    CheckResult {
        name: "min eigenvalue below every Rayleigh quotient",
        pass: ok,
        detail: format!("worst margin {worst:.3e}"),
    }
}

fn check_residual_decoupling() -> CheckResult {
    let mut st = DremState::new(1, 1, 1, 0.0, 0.0);
    let mut worst = 0.0f64;
    for k in 0..500 {
        let t = k as f64 * 1e-3;
        let s = RegressionSample {
            t,
            phi: Matrix::from_rows(1, 1, vec![1.0]),
            y: Matrix::from_rows(1, 1, vec![2.0]),
        };
        let out = st.step(&s, 1e-3).unwrap();
        worst = worst.max(out.residual.norm());
    }
    CheckResult {
        name: "residual stays zero on constant parameters",
        pass: worst < 1e-12,
        detail: format!("max residual {worst:.3e}"),
    }
}

fn check_gate_invariance() -> CheckResult {
    let mut est = EstimatorState::new(1, 1, 100.0, 10.0, 1.0).unwrap();
    est.smooth_step(&Matrix::from_rows(1, 1, vec![0.2]), 0.3, 1e-3).unwrap();
    let before = est.theta_hat().clone();
    for _ in 0..100 {
        est.law_step(1e-4).unwrap();
    }
    let same = est.theta_hat().data() == before.data();
    CheckResult {
        name: "estimate frozen bit-exactly below the gate",
        pass: same,
        detail: if same { "bit-identical".into() } else { "estimate moved".into() },
    }
}

fn coarse_run() -> crate::error::Result<crate::harness::RunOutput> {
    let cfg = parse_config(
        Some(r#"{"scenario": "simple_noise_free", "tau_s": 1e-3, "horizon": 1.5, "decimate": 10}"#),
        &[],
    )?;
    run_experiment(&cfg)
}

fn check_detection_on_coarse_run() -> CheckResult {
    match coarse_run() {
        Ok(out) => {
            let times: Vec<f64> = out.events.iter().map(|e| e.t_hat).collect();
            let pass = times.len() == 2
                && (times[0] - 0.601).abs() < 0.01
                && (times[1] - 1.101).abs() < 0.01;
            CheckResult {
                name: "two switches detected at the expected instants",
                pass,
                detail: format!("events at {times:?}"),
            }
        }
        Err(e) => CheckResult {
            name: "two switches detected at the expected instants",
            pass: false,
            detail: format!("run failed: {e}"),
        },
    }
}

fn check_determinism() -> CheckResult {
    match (coarse_run(), coarse_run()) {
        (Ok(a), Ok(b)) => {
            let same = trace_csv(&a) == trace_csv(&b);
            CheckResult {
                name: "identical seed gives byte-identical traces",
                pass: same,
                detail: if same { "byte-identical".into() } else { "traces differ".into() },
            }
        }
        _ => CheckResult {
            name: "identical seed gives byte-identical traces",
            pass: false,
            detail: "run failed".into(),
        },
    }
}

fn check_law_form_equivalence() -> CheckResult {
    let mut a = EstimatorState::new(1, 1, 100.0, 10.0, 1e-19).unwrap();
    let mut b = a.clone();
    let mut worst = 0.0f64;
    for k in 0..2000 {
        let t = k as f64 * 1e-4;
        let upsilon = Matrix::from_rows(1, 1, vec![0.02 + 0.01 * (3.0 * t).sin()]);
        let delta = 0.01 + 0.005 * (0.5 * t).cos().abs();
        a.smooth_step(&upsilon, delta, 1e-4).unwrap();
        b.smooth_step(&upsilon, delta, 1e-4).unwrap();
        a.law_step(1e-4).unwrap();
        b.law_step_via_ft(1e-4).unwrap();
        worst = worst.max(a.theta_hat().max_abs_diff(b.theta_hat()));
    }
    CheckResult {
        name: "both update forms agree to rounding",
        pass: worst < 1e-10,
        detail: format!("max divergence {worst:.3e}"),
    }
}

/// Runs every quick check and returns the results in order.
pub fn run_checks() -> Vec<CheckResult> {
    vec![
        check_adjugate_identity(),
        check_rayleigh_dominance(),
        check_residual_decoupling(),
        check_gate_invariance(),
        check_detection_on_coarse_run(),
        check_law_form_equivalence(),
        check_determinism(),
    ]
}
