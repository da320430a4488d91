//! Regressor extension and mixing with exponential input damping and
//! resetting.
//!
//! Two filters accumulate damped integrals of `phi*y` and `phi*phi^T`
//! from the latest reset anchor. Premultiplying the first by the adjugate
//! of the second decouples the unknown parameters against the scalar
//! regressor `delta = det(omega)`; the residual
//! `eps = phi phi^T Upsilon - delta phi y` is identically zero while the
//! parameters stay constant relative to the anchor and jumps away from
//! zero after an undetected switch, which is what the detector watches.

use crate::error::{Error, Result};
use crate::matrix::{adjugate, determinant, Matrix};
use crate::signals::RegressionSample;

/// Extension filter state. A value advanced by pure step functions; one
/// logical writer per instance.
#[derive(Debug, Clone)]
pub struct DremState {
    /// Damped integral of `phi * y`, `n x p`.
    z: Matrix,
    /// Damped integral of `phi * phi^T`, `n x n`, symmetric PSD.
    omega: Matrix,
    /// Damped integral of `phi` alone, `n x m`; feeds the disturbance
    /// compensation bound.
    phi_integral: Matrix,
    /// Current damping weight `exp(-sigma (t - anchor))`, advanced
    /// multiplicatively to avoid drift.
    weight: f64,
    anchor: f64,
    sigma: f64,
}

/// Mixed quantities derived from one filter state.
#[derive(Debug, Clone)]
pub struct DremOutput {
    /// `adj(omega) * z`, `n x p`.
    pub upsilon: Matrix,
    /// `det(omega)`, the scalar regressor; nonnegative up to rounding.
    pub delta: f64,
    /// Switch indicator `phi phi^T Upsilon - delta phi y`, `n x p`.
    pub residual: Matrix,
    /// Magnitude of the terms the residual is assembled from,
    /// `|phi|^4 |adj(omega)| |z|`; the relative zero-test threshold
    /// scales with this.
    pub residual_scale: f64,
}

impl DremState {
    /// Fresh filter anchored at `t0`.
    pub fn new(n: usize, m: usize, p: usize, sigma: f64, t0: f64) -> Self {
        DremState {
            z: Matrix::zeros(n, p),
            omega: Matrix::zeros(n, n),
            phi_integral: Matrix::zeros(n, m),
            weight: 1.0,
            anchor: t0,
            sigma,
        }
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn omega(&self) -> &Matrix {
        &self.omega
    }

    pub fn z(&self) -> &Matrix {
        &self.z
    }

    pub fn phi_integral(&self) -> &Matrix {
        &self.phi_integral
    }

    /// Zeros all filter states and moves the anchor to `t_hat`.
    pub fn reset(&mut self, t_hat: f64) {
        self.z = Matrix::zeros(self.z.rows(), self.z.cols());
        self.omega = Matrix::zeros(self.omega.rows(), self.omega.cols());
        self.phi_integral = Matrix::zeros(self.phi_integral.rows(), self.phi_integral.cols());
        self.weight = 1.0;
        self.anchor = t_hat;
    }

    /// Integrates one sample by explicit Euler (left-endpoint rule) and
    /// mixes the updated state into `(upsilon, delta, residual)`.
    pub fn step(&mut self, sample: &RegressionSample, dt: f64) -> Result<DremOutput> {
        if dt <= 0.0 {
            return Err(Error::Contract("dt must be positive".into()));
        }
        if sample.t < self.anchor - 1e-12 {
            return Err(Error::Contract(format!(
                "sample at t = {} precedes the filter anchor {}",
                sample.t, self.anchor
            )));
        }
        let w = self.weight * dt;
        let phi_y = sample.phi.matmul(&sample.y);
        let gram = sample.phi.matmul(&sample.phi.transpose());
        self.z.add_scaled(&phi_y, w);
        self.omega.add_scaled(&gram, w);
        self.phi_integral.add_scaled(&sample.phi, w);
        self.weight *= (-self.sigma * dt).exp();

        if !self.z.is_finite() || !self.omega.is_finite() {
            return Err(Error::Divergence { component: "drem".into(), t: sample.t });
        }

        let adj = adjugate(&self.omega)?;
        let upsilon = adj.matmul(&self.z);
        let delta = determinant(&self.omega)?;
        let residual = gram.matmul(&upsilon).sub(&phi_y.scale(delta));
        let residual_scale = {
            let p = sample.phi.norm();
            p * p * p * p * adj.norm() * self.z.norm()
        };
        Ok(DremOutput { upsilon, delta, residual, residual_scale })
    }
}
