//! Ground-truth signal generation: piecewise-constant parameter
//! schedules, regressor/output samples with optional disturbances, and
//! the switched plant with its filtered parameterization.

mod plant;

pub use plant::{is_controllable, SwitchedPlant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One constant-parameter segment of a switching schedule.
#[derive(Debug, Clone)]
pub struct Segment {
    pub theta: Matrix,
    pub start: f64,
    /// Discrete model label this segment belongs to (used only by the
    /// baseline laws that assume the switching signal is known).
    pub model: usize,
}

/// The sequence of (parameter matrix, switch time) pairs defining `theta(t)`.
///
/// Right-continuous: a lookup at exactly a switch time returns the new
/// segment. Consecutive start times must be strictly increasing.
#[derive(Debug, Clone)]
pub struct SwitchingSchedule {
    segments: Vec<Segment>,
}

impl SwitchingSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Contract("schedule needs at least one segment".into()));
        }
        let (r, c) = (segments[0].theta.rows(), segments[0].theta.cols());
        for pair in segments.windows(2) {
            if pair[1].start <= pair[0].start {
                return Err(Error::Contract(format!(
                    "segment start times must be strictly increasing ({} then {})",
                    pair[0].start, pair[1].start
                )));
            }
        }
        for s in &segments {
            if (s.theta.rows(), s.theta.cols()) != (r, c) {
                return Err(Error::Dimension(
                    "all schedule parameter matrices must share dimensions".into(),
                ));
            }
            if !s.theta.is_finite() {
                return Err(Error::Contract("schedule parameters must be finite".into()));
            }
        }
        Ok(SwitchingSchedule { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn start_time(&self) -> f64 {
        self.segments[0].start
    }

    /// Switch instants after the initial one, i.e. the times the detector
    /// is supposed to estimate.
    pub fn switch_times(&self) -> Vec<f64> {
        self.segments[1..].iter().map(|s| s.start).collect()
    }

    /// Smallest gap between consecutive switches; `INFINITY` for a single
    /// segment.
    pub fn min_dwell(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|p| p[1].start - p[0].start)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn theta_dims(&self) -> (usize, usize) {
        (self.segments[0].theta.rows(), self.segments[0].theta.cols())
    }

    fn segment_index_at(&self, t: f64) -> Result<usize> {
        if t < self.segments[0].start {
            return Err(Error::Domain(format!(
                "t = {t} precedes the schedule start {}",
                self.segments[0].start
            )));
        }
        let mut idx = 0;
        for (i, s) in self.segments.iter().enumerate() {
            if t >= s.start {
                idx = i;
            } else {
                break;
            }
        }
        Ok(idx)
    }

    /// Parameter value at time `t` (right-continuous at switch instants).
    pub fn theta_at(&self, t: f64) -> Result<&Matrix> {
        Ok(&self.segments[self.segment_index_at(t)?].theta)
    }

    /// Active model label at time `t`.
    pub fn kappa_at(&self, t: f64) -> Result<usize> {
        Ok(self.segments[self.segment_index_at(t)?].model)
    }
}

/// One time-stamped observation `(t, phi, y)` of the regression.
#[derive(Debug, Clone)]
pub struct RegressionSample {
    pub t: f64,
    /// Regressor, `n x m`.
    pub phi: Matrix,
    /// Measured output, `m x p`.
    pub y: Matrix,
}

/// Scalar signal descriptors used to declare regressor rows and reference
/// inputs in configuration files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalDesc {
    Constant { value: f64 },
    ExpDecay { rate: f64 },
    Sinusoid { amplitude: f64, frequency: f64, #[serde(default)] phase: f64 },
}

impl SignalDesc {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SignalDesc::Constant { value } => *value,
            SignalDesc::ExpDecay { rate } => (-rate * t).exp(),
            SignalDesc::Sinusoid { amplitude, frequency, phase } => {
                amplitude * (frequency * t + phase).sin()
            }
        }
    }
}

/// Builds a column regressor `n x 1` from row descriptors.
pub fn regressor_from_rows(rows: &[SignalDesc]) -> impl Fn(f64) -> Matrix + '_ {
    move |t| Matrix::col_vec(&rows.iter().map(|d| d.eval(t)).collect::<Vec<_>>())
}

/// Disturbance model attached to generated samples.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceKind {
    None,
    UniformNoise,
    UniformPlusHarmonic,
}

/// Declarative disturbance description: uniform noise on `[-a, +a]` drawn
/// per integration step, optionally plus a harmonic term, with a declared
/// bound `w_max` that every generated sample must respect.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DisturbanceSpec {
    pub kind: DisturbanceKind,
    #[serde(default)]
    pub noise_amplitude: f64,
    #[serde(default)]
    pub harmonic_amplitude: f64,
    #[serde(default)]
    pub harmonic_frequency: f64,
    /// Declared bound on the disturbance norm.
    #[serde(default)]
    pub w_max: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl DisturbanceSpec {
    pub fn none() -> Self {
        DisturbanceSpec {
            kind: DisturbanceKind::None,
            noise_amplitude: 0.0,
            harmonic_amplitude: 0.0,
            harmonic_frequency: 0.0,
            w_max: 0.0,
            rng_seed: 0,
        }
    }

    pub fn generator(&self) -> DisturbanceGen {
        DisturbanceGen {
            spec: self.clone(),
            rng: ChaCha8Rng::seed_from_u64(self.rng_seed),
        }
    }
}

/// Stateful disturbance source; one draw per generated sample, identical
/// sequences for identical seeds.
#[derive(Debug, Clone)]
pub struct DisturbanceGen {
    spec: DisturbanceSpec,
    rng: ChaCha8Rng,
}

impl DisturbanceGen {
    /// Disturbance matrix `m x p` at time `t`.
    pub fn draw(&mut self, t: f64, rows: usize, cols: usize) -> Matrix {
        let mut w = Matrix::zeros(rows, cols);
        match self.spec.kind {
            DisturbanceKind::None => {}
            DisturbanceKind::UniformNoise | DisturbanceKind::UniformPlusHarmonic => {
                let a = self.spec.noise_amplitude;
                for i in 0..rows {
                    for j in 0..cols {
                        let u: f64 = self.rng.gen();
                        w[(i, j)] = (2.0 * u - 1.0) * a;
                    }
                }
                if self.spec.kind == DisturbanceKind::UniformPlusHarmonic {
                    let h = self.spec.harmonic_amplitude * (self.spec.harmonic_frequency * t).sin();
                    for i in 0..rows {
                        for j in 0..cols {
                            w[(i, j)] += h;
                        }
                    }
                }
                assert!(
                    w.norm() <= self.spec.w_max + 1e-12,
                    "generated disturbance exceeds the declared bound"
                );
            }
        }
        w
    }
}

/// One observation of the scheduled regression at time `t`:
/// `y = phi(t)^T * theta(t) + w(t)`.
pub fn sample<F: Fn(f64) -> Matrix>(
    schedule: &SwitchingSchedule,
    regressor_fn: F,
    disturbance: &mut DisturbanceGen,
    t: f64,
) -> Result<RegressionSample> {
    let theta = schedule.theta_at(t)?;
    let phi = regressor_fn(t);
    if phi.rows() != theta.rows() {
        return Err(Error::Dimension(format!(
            "regressor has {} rows but schedule parameters have {}",
            phi.rows(),
            theta.rows()
        )));
    }
    let mut y = phi.transpose().matmul(theta);
    let w = disturbance.draw(t, y.rows(), y.cols());
    y.add_scaled(&w, 1.0);
    Ok(RegressionSample { t, phi, y })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq37_schedule() -> SwitchingSchedule {
        SwitchingSchedule::new(vec![
            Segment { theta: Matrix::col_vec(&[-2.0, 1.0]), start: 0.0, model: 1 },
            Segment { theta: Matrix::col_vec(&[-4.0, 2.0]), start: 0.5, model: 2 },
            Segment { theta: Matrix::col_vec(&[-2.0, 1.0]), start: 1.0, model: 1 },
        ])
        .unwrap()
    }

    #[test]
    fn theta_at_inside_first_segment() {
        let s = eq37_schedule();
        assert_eq!(s.theta_at(0.25).unwrap(), &Matrix::col_vec(&[-2.0, 1.0]));
    }

    #[test]
    fn theta_at_is_right_continuous_at_switch() {
        let s = eq37_schedule();
        assert_eq!(s.theta_at(0.5).unwrap(), &Matrix::col_vec(&[-4.0, 2.0]));
    }

    #[test]
    fn theta_at_zero_schedule() {
        let s = SwitchingSchedule::new(vec![Segment {
            theta: Matrix::zeros(2, 1),
            start: 0.0,
            model: 1,
        }])
        .unwrap();
        assert_eq!(s.theta_at(42.0).unwrap(), &Matrix::zeros(2, 1));
    }

    #[test]
    fn theta_at_before_start_is_domain_error() {
        let s = eq37_schedule();
        assert!(matches!(s.theta_at(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn theta_at_is_bit_identical_within_a_segment() {
        let s = eq37_schedule();
        let a = s.theta_at(0.51).unwrap().clone();
        let b = s.theta_at(0.99).unwrap().clone();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn sample_evaluates_the_regression() {
        let s = eq37_schedule();
        let rows = vec![SignalDesc::Constant { value: 1.0 }, SignalDesc::ExpDecay { rate: 1.0 }];
        let mut gen = DisturbanceSpec::none().generator();

        // t = 0: y = -2 + 1 = -1
        let smp = sample(&s, regressor_from_rows(&rows), &mut gen, 0.0).unwrap();
        assert_eq!(smp.y[(0, 0)], -1.0);

        // t = ln 2 on a constant theta = [-2, 1]: y = -2 + 0.5 = -1.5
        let constant = SwitchingSchedule::new(vec![Segment {
            theta: Matrix::col_vec(&[-2.0, 1.0]),
            start: 0.0,
            model: 1,
        }])
        .unwrap();
        let smp = sample(&constant, regressor_from_rows(&rows), &mut gen, 2.0f64.ln()).unwrap();
        assert!((smp.y[(0, 0)] - (-1.5)).abs() < 1e-12);
    }

    #[test]
    fn sample_of_zero_parameters_is_zero() {
        let s = SwitchingSchedule::new(vec![Segment {
            theta: Matrix::zeros(2, 1),
            start: 0.0,
            model: 1,
        }])
        .unwrap();
        let rows = vec![SignalDesc::Constant { value: 3.0 }, SignalDesc::ExpDecay { rate: 0.5 }];
        let mut gen = DisturbanceSpec::none().generator();
        let smp = sample(&s, regressor_from_rows(&rows), &mut gen, 1.3).unwrap();
        assert_eq!(smp.y[(0, 0)], 0.0);
    }

    #[test]
    fn sample_rejects_dimension_mismatch() {
        let s = eq37_schedule();
        let rows = vec![SignalDesc::Constant { value: 1.0 }];
        let mut gen = DisturbanceSpec::none().generator();
        assert!(matches!(
            sample(&s, regressor_from_rows(&rows), &mut gen, 0.0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn disturbance_is_reproducible_for_a_seed() {
        let spec = DisturbanceSpec {
            kind: DisturbanceKind::UniformNoise,
            noise_amplitude: 0.5,
            harmonic_amplitude: 0.0,
            harmonic_frequency: 0.0,
            w_max: 0.65,
            rng_seed: 99,
        };
        let mut a = spec.generator();
        let mut b = spec.generator();
        for k in 0..1000 {
            let t = k as f64 * 1e-4;
            assert_eq!(a.draw(t, 1, 1)[(0, 0)], b.draw(t, 1, 1)[(0, 0)]);
        }
    }

    #[test]
    fn disturbance_respects_declared_bound() {
        let spec = DisturbanceSpec {
            kind: DisturbanceKind::UniformPlusHarmonic,
            noise_amplitude: 0.15,
            harmonic_amplitude: 0.1,
            harmonic_frequency: 25.0,
            w_max: 0.25,
            rng_seed: 3,
        };
        let mut gen = spec.generator();
        for k in 0..100_000 {
            let t = k as f64 * 1e-4;
            assert!(gen.draw(t, 1, 1).norm() <= 0.25 + 1e-12);
        }
    }
}
