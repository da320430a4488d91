//! Fixed-step experiment engine: wires signal generation through the
//! extension filters, detector, adaptive law and any enabled baseline
//! laws on one shared clock, then distills metrics and excitation
//! diagnostics from the full-rate trace.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::adaptive::EstimatorState;
use crate::baselines::{DataStack, EfficientDremState, ModelBank, PurgingEstimator};
use crate::config::{matrix_from_def, ScenarioConfig, ScenarioKind, ScheduleDef};
use crate::detect::{DetectionEvent, DetectorState};
use crate::drem::DremState;
use crate::error::{Error, Result};
use crate::matrix::{min_eigenvalue, Matrix};
use crate::signals::{
    regressor_from_rows, DisturbanceGen, RegressionSample, SwitchedPlant, SwitchingSchedule,
};

/// One full-rate simulation step as recorded for metrics and export.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub t: f64,
    pub phi: Matrix,
    pub y: Matrix,
    /// Disturbance-free output value, for disturbance comparisons.
    pub y_clean: Matrix,
    pub delta: f64,
    /// Mixed regression output `adj(omega) z`.
    pub upsilon: Matrix,
    pub eps_norm: f64,
    pub residual_scale: f64,
    /// Smoothed scalar regressor.
    pub omega_s: f64,
    /// Smoothed mixed output.
    pub y_filt: Matrix,
    pub theta_hat: Matrix,
    pub theta_ft: Matrix,
    pub theta_true: Matrix,
    pub theta_err: f64,
    pub theta_ft_err: f64,
    /// Windowed residual statistics (NaN when the exact detector runs).
    pub stat_mean: f64,
    pub stat_thresh: f64,
    pub c_t: f64,
    /// Disturbance-to-regressor ratio `|W| / Omega` (NaN when absent).
    pub ub: f64,
}

/// Per-law baseline trace entry.
#[derive(Debug, Clone)]
pub struct BaselineRow {
    pub t: f64,
    pub theta: Matrix,
    pub err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventReport {
    pub index: usize,
    pub detect_time: f64,
    pub t_hat: f64,
    /// Grid instant the reset was actually applied, if within horizon.
    pub reset_time: Option<f64>,
    pub matched_switch: Option<f64>,
    /// `t_hat - t_i` for matched events.
    pub error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SwitchReport {
    pub time: f64,
    /// First time span after the switch over which the regressor reaches
    /// the configured excitation level.
    pub excitation_time: Option<f64>,
    /// Measured excitation level over that window.
    pub alpha: Option<f64>,
    pub detected: bool,
    pub t_hat: Option<f64>,
    pub detection_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalReport {
    pub start: f64,
    pub end: f64,
    pub terminal_theta_err: Option<f64>,
    pub terminal_ft_err: Option<f64>,
    /// Least-squares slope of `log |theta_err|` past the settle time.
    pub fitted_rate: Option<f64>,
    pub ub_mean: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineReport {
    pub law: String,
    /// Per interval: seconds after the interval's switch until the error
    /// enters and stays below the comparison tolerance.
    pub time_to_tol_after_switch: Vec<Option<f64>>,
    pub max_step_jump: f64,
    pub terminal_err: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceInfo {
    pub component: String,
    pub t: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub horizon: f64,
    pub tau_s: f64,
    pub event_count: usize,
    pub events: Vec<EventReport>,
    pub switches: Vec<SwitchReport>,
    pub false_alarms: usize,
    pub intervals: Vec<IntervalReport>,
    /// Excitation first-crossing time from the initial instant.
    pub t0_excitation_time: Option<f64>,
    /// Minimum of the smoothed regressor after the initial excitation has
    /// been collected.
    pub min_omega_after_excitation: Option<f64>,
    pub rho: f64,
    pub min_delta: f64,
    pub theta_err_final: Option<f64>,
    pub theta_ft_err_final: Option<f64>,
    pub proposed_max_step_jump: f64,
    pub baselines: Vec<BaselineReport>,
    pub divergence: Option<DivergenceInfo>,
    /// Wall-clock duration; excluded from serialized artifacts so files
    /// stay byte-stable for a given seed.
    #[serde(skip)]
    pub runtime_ms: f64,
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub trace: Vec<TraceRow>,
    pub baseline_traces: BTreeMap<String, Vec<BaselineRow>>,
    pub events: Vec<DetectionEvent>,
    pub resets: Vec<f64>,
    pub metrics: MetricsReport,
}

/// Harness knobs that are not part of the scenario itself.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Apply these reset instants instead of running the detector
    /// (used for paired disturbance-free shadow runs).
    pub forced_resets: Option<Vec<f64>>,
    /// Skip the paired shadow run that fills the `ub` column.
    pub skip_ub: bool,
}

/// Comparison tolerance for baseline time-to-convergence metrics.
pub const BASELINE_ERR_TOL: f64 = 0.05;

enum World {
    Simple {
        schedule: SwitchingSchedule,
        regressor: Vec<crate::signals::SignalDesc>,
        disturbance: DisturbanceGen,
    },
    Plant(SwitchedPlant),
}

impl World {
    fn sample(&mut self, t: f64) -> Result<(RegressionSample, Matrix, Matrix)> {
        match self {
            World::Simple { schedule, regressor, disturbance } => {
                let s = crate::signals::sample(schedule, regressor_from_rows(regressor), disturbance, t)?;
                let theta = schedule.theta_at(t)?.clone();
                let clean = s.phi.transpose().matmul(&theta);
                Ok((s, theta, clean))
            }
            World::Plant(p) => {
                let s = p.parameterize(t);
                let theta = p.implied_theta(t)?;
                let clean = s.y.clone();
                Ok((s, theta, clean))
            }
        }
    }

    fn switch_times(&self) -> Vec<f64> {
        match self {
            World::Simple { schedule, .. } => schedule.switch_times(),
            World::Plant(p) => p.schedule_ab.switch_times(),
        }
    }

    fn start_time(&self) -> f64 {
        match self {
            World::Simple { schedule, .. } => schedule.start_time(),
            World::Plant(p) => p.schedule_ab.start_time(),
        }
    }

    fn min_dwell(&self) -> f64 {
        match self {
            World::Simple { schedule, .. } => schedule.min_dwell(),
            World::Plant(p) => p.schedule_ab.min_dwell(),
        }
    }

    fn kappa_at(&self, t: f64) -> Result<usize> {
        match self {
            World::Simple { schedule, .. } => schedule.kappa_at(t),
            World::Plant(p) => p.schedule_ab.kappa_at(t),
        }
    }

    fn n_models(&self) -> usize {
        let segs = match self {
            World::Simple { schedule, .. } => schedule.segments(),
            World::Plant(p) => p.schedule_ab.segments(),
        };
        segs.iter().map(|s| s.model).max().unwrap_or(1)
    }

    fn reset_aux_filters(&mut self, t_hat: f64) -> Result<()> {
        match self {
            World::Simple { .. } => Ok(()),
            World::Plant(p) => p.reset_filter(t_hat),
        }
    }

    fn advance(&mut self, t: f64, dt: f64) -> Result<()> {
        match self {
            World::Simple { .. } => Ok(()),
            World::Plant(p) => p.step(t, dt),
        }
    }
}

fn build_world(config: &ScenarioConfig) -> Result<World> {
    if config.scenario == ScenarioKind::SwitchedPlant {
        let p = config.plant.as_ref().ok_or_else(|| {
            Error::Config(vec!["switched_plant scenario requires the plant block".into()])
        })?;
        let sched = ScheduleDef { segments: p.segments.clone() }.build()?;
        let x0 = Matrix::col_vec(&p.x0);
        let plant = SwitchedPlant::new(
            sched.clone(),
            x0,
            matrix_from_def(&p.k_x, "plant.k_x")?,
            matrix_from_def(&p.k_r, "plant.k_r")?,
            p.reference.clone(),
            p.l,
            sched.start_time(),
        )?;
        Ok(World::Plant(plant))
    } else {
        let schedule = config
            .schedule
            .as_ref()
            .ok_or_else(|| Error::Config(vec!["scenario requires a schedule".into()]))?
            .build()?;
        let regressor = config
            .regressor
            .clone()
            .ok_or_else(|| Error::Config(vec!["scenario requires a regressor".into()]))?;
        let mut dist = config.disturbance.clone();
        dist.rng_seed = config.seed;
        Ok(World::Simple { schedule, regressor, disturbance: dist.generator() })
    }
}

/// (model index, record time, already recorded)
type StackRecord = (usize, f64, bool);

struct BaselineSet {
    gradient: Option<ModelBank>,
    concurrent: Option<(ModelBank, Vec<DataStack>, Vec<StackRecord>)>,
    purging: Option<PurgingEstimator>,
    efficient: Option<(EfficientDremState, Vec<bool>)>,
}

impl BaselineSet {
    fn build(config: &ScenarioConfig, world: &World, n: usize, p: usize, t0: f64) -> Result<BaselineSet> {
        let bl = &config.baselines;
        let n_models = world.n_models();
        let gradient = bl
            .gradient
            .enabled
            .then(|| ModelBank::new(n_models, n, p, bl.gradient.gain, 0.0));
        let concurrent = if bl.concurrent.enabled {
            let bank = ModelBank::new(n_models, n, p, bl.concurrent.gain1, bl.concurrent.gain2);
            let stacks = vec![DataStack::new(n, bl.concurrent.stack_capacity); n_models];
            let records = bl
                .concurrent
                .records
                .iter()
                .map(|r| {
                    if r.model == 0 || r.model > n_models {
                        Err(Error::Config(vec![format!(
                            "stack record references model {} outside 1..={n_models}",
                            r.model
                        )]))
                    } else {
                        Ok((r.model - 1, r.time, false))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Some((bank, stacks, records))
        } else {
            None
        };
        let purging = bl.purging.enabled.then(|| {
            PurgingEstimator::new(
                n,
                p,
                bl.purging.stack_capacity,
                bl.purging.gain,
                bl.purging.c1,
                bl.purging.c2,
                bl.purging.c3,
                bl.purging.record_spacing,
                t0,
            )
        });
        let efficient = if bl.efficient_drem.enabled {
            let st = EfficientDremState::new(
                n,
                p,
                bl.efficient_drem.l0,
                bl.efficient_drem.lambda_lb,
                bl.efficient_drem.lambda_ub,
                bl.efficient_drem.gamma0,
            )?;
            let fired = vec![false; world.switch_times().len()];
            Some((st, fired))
        } else {
            None
        };
        Ok(BaselineSet { gradient, concurrent, purging, efficient })
    }
}

/// Runs a scenario with default options.
pub fn run_experiment(config: &ScenarioConfig) -> Result<RunOutput> {
    run_experiment_with(config, &RunOptions::default())
}

/// Runs a scenario; see [`RunOptions`] for the harness-level knobs.
pub fn run_experiment_with(config: &ScenarioConfig, options: &RunOptions) -> Result<RunOutput> {
    config.validate().map_err(Error::Config)?;
    let started = Instant::now();
    let dt = config.tau_s;
    let mut world = build_world(config)?;
    let t0 = world.start_time();
    let steps = (config.horizon / dt).round() as usize;

    // probe dimensions on a throwaway world so the main disturbance
    // stream starts untouched
    let (probe, theta_probe, _) = build_world(config)?.sample(t0)?;
    let (n, m, p) = (probe.phi.rows(), probe.phi.cols(), probe.y.cols());

    let mut drem = DremState::new(n, m, p, config.sigma, t0);
    let mut estimator = EstimatorState::new(n, p, config.k, config.gamma0, config.rho)?;
    if let Some(def) = &config.theta_hat0 {
        let th0 = matrix_from_def(def, "theta_hat0")?;
        if (th0.rows(), th0.cols()) != (theta_probe.rows(), theta_probe.cols()) {
            return Err(Error::Config(vec![format!(
                "theta_hat0 is {}x{} but the scenario parameters are {}x{}",
                th0.rows(),
                th0.cols(),
                theta_probe.rows(),
                theta_probe.cols()
            )]));
        }
        estimator = estimator.with_initial_estimate(th0);
    }
    let mut detector = DetectorState::new(t0, config.delta_pr, config.eta_rel, config.eta_abs, config.w_stat)
        .with_stat_coeff(config.stat_coeff)
        .with_eta_floor(config.eta_floor);
    let robust = config.robust_detector();
    let mut baselines = BaselineSet::build(config, &world, n, p, t0)?;

    let switch_times = world.switch_times();
    let mut trace: Vec<TraceRow> = Vec::with_capacity(steps);
    let mut baseline_traces: BTreeMap<String, Vec<BaselineRow>> = BTreeMap::new();
    let mut resets: Vec<f64> = Vec::new();
    let mut divergence: Option<DivergenceInfo> = None;
    let mut forced_queue: Vec<f64> = options.forced_resets.clone().unwrap_or_default();
    forced_queue.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut forced_pos = 0usize;

    'sim: for j in 0..steps {
        let t = t0 + j as f64 * dt;

        // apply any due reset at the grid point nearest its schedule
        let due = if options.forced_resets.is_some() {
            if forced_pos < forced_queue.len() && t >= forced_queue[forced_pos] - dt / 2.0 {
                forced_pos += 1;
                true
            } else {
                false
            }
        } else {
            matches!(detector.pending_reset(), Some(th) if t >= th - dt / 2.0)
        };
        if due {
            drem.reset(t);
            world.reset_aux_filters(t)?;
            detector.acknowledge_reset();
            resets.push(t);
        }

        let (sample, theta_true, y_clean) = world.sample(t)?;

        let out = match drem.step(&sample, dt) {
            Ok(o) => o,
            Err(Error::Divergence { component, t }) => {
                divergence = Some(DivergenceInfo { component, t });
                break 'sim;
            }
            Err(e) => return Err(e),
        };
        let eps_norm = out.residual.norm();

        let (mut stat_mean, mut stat_thresh, mut c_t) = (f64::NAN, f64::NAN, f64::NAN);
        if options.forced_resets.is_none() {
            if robust {
                let c = detector.c_bound(&drem, &sample, config.w_max);
                detector.robust_detect_step(eps_norm, c, out.residual_scale, t);
                let (mean, var) = detector.window_stats();
                stat_mean = mean;
                stat_thresh = config.stat_coeff * var.sqrt() + c;
                c_t = c;
            } else {
                detector.detect_step(eps_norm, out.residual_scale, t);
            }
        }

        match estimator
            .smooth_step(&out.upsilon, out.delta, dt)
            .and_then(|_| estimator.law_step(dt))
        {
            Ok(()) => {}
            Err(Error::Divergence { component, .. }) => {
                divergence = Some(DivergenceInfo { component, t });
                break 'sim;
            }
            Err(e) => return Err(e),
        }

        // baseline laws read the true switching signal, never the detector
        let kappa0 = world.kappa_at(t)? - 1;
        macro_rules! baseline_step {
            ($law:expr, $step:expr, $estimate:expr) => {
                match $step {
                    Ok(()) => {
                        let est: Matrix = $estimate;
                        let err = est.sub(&theta_true).norm();
                        baseline_traces
                            .entry($law.into())
                            .or_default()
                            .push(BaselineRow { t, theta: est, err });
                    }
                    Err(Error::Divergence { component, t }) => {
                        divergence = Some(DivergenceInfo { component, t });
                        break 'sim;
                    }
                    Err(e) => return Err(e),
                }
            };
        }
        if let Some(bank) = baselines.gradient.as_mut() {
            baseline_step!(
                "gradient",
                bank.gradient_step(&sample, kappa0, dt),
                bank.estimate(kappa0).clone()
            );
        }
        if let Some((bank, stacks, records)) = baselines.concurrent.as_mut() {
            for (model0, time, done) in records.iter_mut() {
                if !*done && t >= *time {
                    stacks[*model0].record(sample.phi.clone(), sample.y.clone(), t);
                    *done = true;
                }
            }
            baseline_step!(
                "concurrent",
                bank.concurrent_step(stacks, &sample, kappa0, dt),
                bank.estimate(kappa0).clone()
            );
        }
        if let Some(est) = baselines.purging.as_mut() {
            baseline_step!("purging", est.step(&sample, dt), est.theta_hat().clone());
        }
        if let Some((st, fired)) = baselines.efficient.as_mut() {
            let mut reset_now = false;
            if config.baselines.efficient_drem.oracle_reset {
                for (si, s) in switch_times.iter().enumerate() {
                    if !fired[si] && t >= *s {
                        fired[si] = true;
                        reset_now = true;
                    }
                }
            }
            baseline_step!(
                "efficient_drem",
                st.step(&sample, reset_now, dt),
                st.theta_hat().clone()
            );
        }

        let theta_hat = estimator.theta_hat().clone();
        let theta_ft = estimator.ft_estimate();
        trace.push(TraceRow {
            t,
            phi: sample.phi.clone(),
            y: sample.y.clone(),
            y_clean,
            delta: out.delta,
            upsilon: out.upsilon.clone(),
            eps_norm,
            residual_scale: out.residual_scale,
            omega_s: estimator.omega_filt(),
            y_filt: estimator.y_filt().clone(),
            theta_err: theta_hat.sub(&theta_true).norm(),
            theta_ft_err: theta_ft.sub(&theta_true).norm(),
            theta_hat,
            theta_ft,
            theta_true,
            stat_mean,
            stat_thresh,
            c_t,
            ub: f64::NAN,
        });

        world.advance(t, dt)?;
    }

    // paired disturbance-free shadow run fills the |W|/Omega column
    let disturbed = config.w_max > 0.0 || config.disturbance.w_max > 0.0;
    if disturbed && !options.skip_ub && options.forced_resets.is_none() && divergence.is_none() {
        let mut shadow_cfg = config.clone();
        shadow_cfg.disturbance = crate::signals::DisturbanceSpec::none();
        shadow_cfg.w_max = 0.0;
        let shadow = run_experiment_with(
            &shadow_cfg,
            &RunOptions { forced_resets: Some(resets.clone()), skip_ub: true },
        )?;
        for (row, srow) in trace.iter_mut().zip(shadow.trace.iter()) {
            let w_norm = row.y_filt.sub(&srow.y_filt).norm();
            row.ub = if row.omega_s > 0.0 { w_norm / row.omega_s } else { f64::NAN };
        }
    }

    let events = detector.events().to_vec();
    let metrics = compute_metrics(
        config,
        &trace,
        &events,
        &resets,
        &switch_times,
        world.min_dwell(),
        t0,
        &baseline_traces,
        divergence,
        started.elapsed().as_secs_f64() * 1e3,
    );

    Ok(RunOutput { config: config.clone(), trace, baseline_traces, events: events.clone(), resets, metrics })
}

/// Excitation level over `[t_a, t_b)`: the minimum eigenvalue of the
/// left-endpoint quadrature of `phi phi^T` over the window.
pub fn measure_excitation(trace: &[TraceRow], t_a: f64, t_b: f64) -> Result<f64> {
    let rows: Vec<&TraceRow> = trace.iter().filter(|r| r.t >= t_a && r.t < t_b).collect();
    if rows.len() < 2 {
        return Err(Error::Domain(format!("excitation window [{t_a}, {t_b}) has too few samples")));
    }
    let dt = rows[1].t - rows[0].t;
    let n = rows[0].phi.rows();
    let mut gram = Matrix::zeros(n, n);
    for r in &rows {
        gram.add_scaled(&r.phi.matmul(&r.phi.transpose()), dt);
    }
    min_eigenvalue(&gram)
}

/// First `T` such that the excitation of `[from, from + T)` reaches
/// `level`, scanning on the trace grid.
pub fn excitation_crossing(trace: &[TraceRow], from: f64, level: f64) -> Option<f64> {
    let rows: Vec<&TraceRow> = trace.iter().filter(|r| r.t >= from).collect();
    if rows.len() < 2 {
        return None;
    }
    let dt = rows[1].t - rows[0].t;
    let n = rows[0].phi.rows();
    let mut gram = Matrix::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        gram.add_scaled(&r.phi.matmul(&r.phi.transpose()), dt);
        // the eigenvalue scan is monotone; checking every step is cheap
        // at these sizes
        if min_eigenvalue(&gram).unwrap_or(0.0) >= level {
            return Some((i + 1) as f64 * dt);
        }
    }
    None
}

/// Least-squares slope of `log(err)` against `t` over `[t_a, t_b)`,
/// ignoring points at or below `floor`. Returns `None` with fewer than
/// 10 usable points.
pub fn fit_rate(points: &[(f64, f64)], t_a: f64, t_b: f64, floor: f64) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, e)| *t >= t_a && *t < t_b && *e > floor)
        .map(|(t, e)| (*t, e.ln()))
        .collect();
    if usable.len() < 10 {
        return None;
    }
    let n = usable.len() as f64;
    let mean_t = usable.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_y = usable.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (t, y) in &usable {
        cov += (t - mean_t) * (y - mean_y);
        var += (t - mean_t) * (t - mean_t);
    }
    if var == 0.0 {
        return None;
    }
    Some(cov / var)
}

#[allow(clippy::too_many_arguments)]
fn compute_metrics(
    config: &ScenarioConfig,
    trace: &[TraceRow],
    events: &[DetectionEvent],
    resets: &[f64],
    switch_times: &[f64],
    min_dwell: f64,
    t0: f64,
    baseline_traces: &BTreeMap<String, Vec<BaselineRow>>,
    divergence: Option<DivergenceInfo>,
    runtime_ms: f64,
) -> MetricsReport {
    let max_gap = if min_dwell.is_finite() { min_dwell / 2.0 } else { f64::INFINITY };

    // nearest-match pairing of events to true switches
    let mut event_reports: Vec<EventReport> = Vec::new();
    let mut matched: Vec<Option<usize>> = vec![None; switch_times.len()];
    for (ei, ev) in events.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (si, s) in switch_times.iter().enumerate() {
            let gap = (ev.detect_time - s).abs();
            if gap <= max_gap && best.map(|(_, g)| gap < g).unwrap_or(true) {
                best = Some((si, gap));
            }
        }
        let matched_switch = best.map(|(si, _)| {
            if matched[si].is_none() {
                matched[si] = Some(ei);
            }
            switch_times[si]
        });
        let reset_time = resets
            .iter()
            .find(|r| (**r - ev.t_hat).abs() <= config.tau_s)
            .copied();
        event_reports.push(EventReport {
            index: ev.index,
            detect_time: ev.detect_time,
            t_hat: ev.t_hat,
            reset_time,
            matched_switch,
            error: matched_switch.map(|s| ev.t_hat - s),
        });
    }
    let false_alarms = event_reports.iter().filter(|e| e.matched_switch.is_none()).count();

    let switches: Vec<SwitchReport> = switch_times
        .iter()
        .enumerate()
        .map(|(si, s)| {
            let ev = matched[si].map(|ei| &events[ei]);
            let excitation_time = excitation_crossing(trace, *s, config.excitation_level);
            let alpha = excitation_time.and_then(|te| measure_excitation(trace, *s, *s + te).ok());
            SwitchReport {
                time: *s,
                excitation_time,
                alpha,
                detected: ev.is_some(),
                t_hat: ev.map(|e| e.t_hat),
                detection_error: ev.map(|e| e.t_hat - s),
            }
        })
        .collect();

    // intervals anchored at t0 and at each applied reset, ending at the
    // next true switch (or the horizon)
    let mut anchors = vec![t0];
    anchors.extend_from_slice(resets);
    let horizon_end = trace.last().map(|r| r.t + config.tau_s).unwrap_or(t0);
    let err_points: Vec<(f64, f64)> = trace.iter().map(|r| (r.t, r.theta_err)).collect();
    let settle = config.settle_time();
    let intervals: Vec<IntervalReport> = anchors
        .iter()
        .map(|a| {
            let end = switch_times.iter().copied().find(|s| *s > *a + 1e-12).unwrap_or(horizon_end).min(horizon_end);
            let rows: Vec<&TraceRow> = trace.iter().filter(|r| r.t >= *a && r.t < end).collect();
            let floor = rows
                .last()
                .map(|r| 1e-8 * (1.0 + r.theta_true.norm()))
                .unwrap_or(1e-8);
            let ubs: Vec<f64> = rows.iter().map(|r| r.ub).filter(|u| u.is_finite()).collect();
            IntervalReport {
                start: *a,
                end,
                terminal_theta_err: rows.last().map(|r| r.theta_err),
                terminal_ft_err: rows.last().map(|r| r.theta_ft_err),
                fitted_rate: fit_rate(&err_points, *a + settle, end, floor),
                ub_mean: if ubs.is_empty() {
                    None
                } else {
                    Some(ubs.iter().sum::<f64>() / ubs.len() as f64)
                },
            }
        })
        .collect();

    let t0_excitation_time = excitation_crossing(trace, t0, config.excitation_level);
    let min_omega_after_excitation = t0_excitation_time.and_then(|te| {
        let vals: Vec<f64> = trace.iter().filter(|r| r.t >= t0 + te).map(|r| r.omega_s).collect();
        vals.into_iter().min_by(|a, b| a.partial_cmp(b).unwrap())
    });
    let min_delta = trace.iter().map(|r| r.delta).fold(f64::INFINITY, f64::min);

    let proposed_max_step_jump = trace
        .windows(2)
        .map(|w| w[1].theta_hat.sub(&w[0].theta_hat).norm())
        .fold(0.0, f64::max);

    // per-switch re-convergence timing for each baseline law
    let mut segment_bounds: Vec<(f64, f64)> = Vec::new();
    {
        let mut starts = vec![t0];
        starts.extend_from_slice(switch_times);
        for (i, s) in starts.iter().enumerate() {
            let end = starts.get(i + 1).copied().unwrap_or(horizon_end);
            segment_bounds.push((*s, end.min(horizon_end)));
        }
    }
    let time_to_tol = |rows: &[(f64, f64)], seg: (f64, f64)| -> Option<f64> {
        let inside: Vec<&(f64, f64)> = rows.iter().filter(|(t, _)| *t >= seg.0 && *t < seg.1).collect();
        if inside.is_empty() {
            return None;
        }
        let mut entered: Option<f64> = None;
        for (t, e) in &inside {
            if *e < BASELINE_ERR_TOL {
                entered.get_or_insert(*t);
            } else {
                entered = None;
            }
        }
        entered.map(|t| t - seg.0)
    };
    let mut baseline_reports = Vec::new();
    for (law, rows) in baseline_traces {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.err)).collect();
        let max_step_jump = rows
            .windows(2)
            .map(|w| w[1].theta.sub(&w[0].theta).norm())
            .fold(0.0, f64::max);
        baseline_reports.push(BaselineReport {
            law: law.clone(),
            time_to_tol_after_switch: segment_bounds.iter().map(|seg| time_to_tol(&pts, *seg)).collect(),
            max_step_jump,
            terminal_err: rows.last().map(|r| r.err),
        });
    }

    MetricsReport {
        scenario: config.scenario.name().to_string(),
        seed: config.seed,
        horizon: config.horizon,
        tau_s: config.tau_s,
        event_count: events.len(),
        events: event_reports,
        switches,
        false_alarms,
        intervals,
        t0_excitation_time,
        min_omega_after_excitation,
        rho: config.rho,
        min_delta: if min_delta.is_finite() { min_delta } else { 0.0 },
        theta_err_final: trace.last().map(|r| r.theta_err),
        theta_ft_err_final: trace.last().map(|r| r.theta_ft_err),
        proposed_max_step_jump,
        baselines: baseline_reports,
        divergence,
        runtime_ms,
    }
}

/// The proposed estimator's time-to-convergence per segment, matching
/// the baseline metric.
pub fn proposed_time_to_tol(output: &RunOutput) -> Vec<Option<f64>> {
    let t0 = output.trace.first().map(|r| r.t).unwrap_or(0.0);
    let horizon_end = output.trace.last().map(|r| r.t + output.config.tau_s).unwrap_or(t0);
    let mut starts = vec![t0];
    let switch_times: Vec<f64> = output
        .metrics
        .switches
        .iter()
        .map(|s| s.time)
        .collect();
    starts.extend_from_slice(&switch_times);
    let mut out = Vec::new();
    for (i, s) in starts.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(horizon_end).min(horizon_end);
        let inside: Vec<&TraceRow> = output.trace.iter().filter(|r| r.t >= *s && r.t < end).collect();
        let mut entered: Option<f64> = None;
        for r in &inside {
            if r.theta_err < BASELINE_ERR_TOL {
                entered.get_or_insert(r.t);
            } else {
                entered = None;
            }
        }
        out.push(entered.map(|t| t - s));
    }
    out
}
