//! Online switching-instant detection.
//!
//! The exact rule flags a switch as soon as the mixing residual leaves
//! its numerical zero, then schedules the filter resets `delta_pr`
//! seconds later. The robust variant replaces the pointwise zero test
//! with windowed statistics of the residual norm compared against
//! `0.9 sqrt(var) + c(t)`, where `c(t)` compensates the worst case a
//! bounded disturbance can inject through the extension filters.

use std::collections::VecDeque;

use crate::drem::DremState;
use crate::matrix::{adjugate, Matrix};
use crate::signals::RegressionSample;

/// One emitted switching-instant estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionEvent {
    /// Detection index `i` at emission time.
    pub index: usize,
    /// Time the rule fired.
    pub detect_time: f64,
    /// Scheduled reset instant, `detect_time + delta_pr`.
    pub t_hat: f64,
}

/// Detector bookkeeping: single logical writer, the window buffers are
/// not shared.
#[derive(Debug, Clone)]
pub struct DetectorState {
    index: usize,
    t_up: f64,
    delta_pr: f64,
    /// Relative zero-test level; the effective threshold is
    /// `eta_rel * (eta_floor + residual_scale)` unless an absolute
    /// override is set.
    eta_rel: f64,
    eta_floor: f64,
    eta_abs: Option<f64>,
    /// Coefficient on the standard-deviation term of the robust rule.
    stat_coeff: f64,
    w_stat: usize,
    window: VecDeque<f64>,
    c_window: VecDeque<f64>,
    pending_reset_at: Option<f64>,
    events: Vec<DetectionEvent>,
}

impl DetectorState {
    pub fn new(t0: f64, delta_pr: f64, eta_rel: f64, eta_abs: Option<f64>, w_stat: usize) -> Self {
        DetectorState {
            index: 1,
            t_up: t0,
            delta_pr,
            eta_rel,
            eta_floor: 1.0,
            eta_abs,
            stat_coeff: 0.9,
            w_stat: w_stat.max(2),
            window: VecDeque::new(),
            c_window: VecDeque::new(),
            pending_reset_at: None,
            events: Vec::new(),
        }
    }

    pub fn with_stat_coeff(mut self, coeff: f64) -> Self {
        self.stat_coeff = coeff;
        self
    }

    pub fn with_eta_floor(mut self, floor: f64) -> Self {
        self.eta_floor = floor;
        self
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn t_up(&self) -> f64 {
        self.t_up
    }

    pub fn events(&self) -> &[DetectionEvent] {
        &self.events
    }

    /// Reset instant scheduled by the latest event, if still outstanding.
    pub fn pending_reset(&self) -> Option<f64> {
        self.pending_reset_at
    }

    /// Current residual-window statistics (mean, sample variance).
    pub fn window_stats(&self) -> (f64, f64) {
        mean_var(self.window.iter().copied())
    }

    /// Called by the harness once the scheduled reset has been applied to
    /// the filters; restarts the residual statistics.
    pub fn acknowledge_reset(&mut self) {
        self.pending_reset_at = None;
        self.window.clear();
        self.c_window.clear();
    }

    fn threshold(&self, residual_scale: f64) -> f64 {
        self.eta_abs.unwrap_or(self.eta_rel * (self.eta_floor + residual_scale))
    }

    fn emit(&mut self, t: f64) -> DetectionEvent {
        let ev = DetectionEvent {
            index: self.index,
            detect_time: t,
            t_hat: t + self.delta_pr,
        };
        self.t_up = t;
        self.index += 1;
        self.pending_reset_at = Some(ev.t_hat);
        self.events.push(ev.clone());
        ev
    }

    /// Exact rule: fire when the residual norm exceeds the numerical zero
    /// level and at least `delta_pr` has elapsed since the last update.
    pub fn detect_step(
        &mut self,
        residual_norm: f64,
        residual_scale: f64,
        t: f64,
    ) -> Option<DetectionEvent> {
        if t - self.t_up >= self.delta_pr && residual_norm > self.threshold(residual_scale) {
            return Some(self.emit(t));
        }
        None
    }

    /// Robust rule: fire when the windowed mean of the residual norm
    /// exceeds `stat_coeff * sqrt(var) + c_t`. The same numerical zero
    /// level as the exact rule floors the mean so that an all-but-zero
    /// window cannot fire on rounding dust.
    pub fn robust_detect_step(
        &mut self,
        residual_norm: f64,
        c_t: f64,
        residual_scale: f64,
        t: f64,
    ) -> Option<DetectionEvent> {
        if self.window.len() == self.w_stat {
            self.window.pop_front();
        }
        self.window.push_back(residual_norm);
        if self.window.len() < 2 {
            return None;
        }
        let (mean, var) = mean_var(self.window.iter().copied());
        if t - self.t_up >= self.delta_pr
            && mean > self.stat_coeff * var.sqrt() + c_t
            && mean > self.threshold(residual_scale)
        {
            return Some(self.emit(t));
        }
        None
    }

    /// Disturbance compensation bound: the windowed mean of
    /// `|w_max * phi phi^T * adj(omega) * phi_integral * I|`, the worst
    /// case a disturbance bounded by `w_max` can contribute to the
    /// residual through the damped filters.
    pub fn c_bound(&mut self, drem: &DremState, sample: &RegressionSample, w_max: f64) -> f64 {
        let value = c_integrand(drem, sample, w_max);
        if self.c_window.len() == self.w_stat {
            self.c_window.pop_front();
        }
        self.c_window.push_back(value);
        let (mean, _) = mean_var(self.c_window.iter().copied());
        mean
    }
}

/// Instantaneous value inside the `c(t)` expectation.
pub fn c_integrand(drem: &DremState, sample: &RegressionSample, w_max: f64) -> f64 {
    if w_max == 0.0 {
        return 0.0;
    }
    let adj = match adjugate(drem.omega()) {
        Ok(a) => a,
        Err(_) => return 0.0,
    };
    let gram = sample.phi.matmul(&sample.phi.transpose());
    let m = sample.phi.cols();
    let p = sample.y.cols();
    let eye = eye_rect(m, p);
    gram.matmul(&adj)
        .matmul(drem.phi_integral())
        .matmul(&eye)
        .norm()
        * w_max
}

fn eye_rect(rows: usize, cols: usize) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows.min(cols) {
        m[(i, i)] = 1.0;
    }
    m
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var)
}
