//! Switched linear plant under state feedback, and its filtered
//! parameterization as a regression with piecewise-constant parameters.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::{RegressionSample, SignalDesc, SwitchingSchedule};

/// Switched plant `x' = A x + B u` driven by `u = K_x x + K_r r(t)`,
/// together with the stable filter that turns its trajectory into a
/// measurable regression without a state-derivative sensor.
///
/// The filter state and the exponential tail of the regressor are
/// anchored at the latest reset instant; the unknown parameter implied by
/// the parameterization is `theta^T = [A | B | x(anchor)]`.
#[derive(Debug, Clone)]
pub struct SwitchedPlant {
    /// Schedule over the stacked `[A | B]` matrix, `n_x x (n_x + m_u)`.
    pub schedule_ab: SwitchingSchedule,
    pub state_dim: usize,
    pub input_dim: usize,
    x: Matrix,
    k_x: Matrix,
    k_r: Matrix,
    reference: SignalDesc,
    /// Parameterization filter constant, > 0.
    l: f64,
    /// Filter state, `(n_x + m_u) x 1`, zeroed at every reset.
    phi_bar: Matrix,
    anchor: f64,
    /// Plant state recorded at the latest reset; last column of the
    /// implied unknown parameter.
    anchor_state: Matrix,
    now: f64,
}

impl SwitchedPlant {
    pub fn new(
        schedule_ab: SwitchingSchedule,
        x0: Matrix,
        k_x: Matrix,
        k_r: Matrix,
        reference: SignalDesc,
        l: f64,
        t0: f64,
    ) -> Result<Self> {
        let (n_x, ab_cols) = schedule_ab.theta_dims();
        if ab_cols <= n_x {
            return Err(Error::Dimension("schedule must stack [A | B] with at least one input column".into()));
        }
        let m_u = ab_cols - n_x;
        if x0.rows() != n_x || x0.cols() != 1 {
            return Err(Error::Dimension("x0 must be a state-dimension column vector".into()));
        }
        if k_x.rows() != m_u || k_x.cols() != n_x || k_r.rows() != m_u || k_r.cols() != m_u {
            return Err(Error::Dimension("gain dimensions must match the plant".into()));
        }
        if l <= 0.0 {
            return Err(Error::Contract("filter constant l must be positive".into()));
        }
        Ok(SwitchedPlant {
            schedule_ab,
            state_dim: n_x,
            input_dim: m_u,
            anchor_state: x0.clone(),
            x: x0,
            k_x,
            k_r,
            reference,
            l,
            phi_bar: Matrix::zeros(n_x + m_u, 1),
            anchor: t0,
            now: t0,
        })
    }

    pub fn state(&self) -> &Matrix {
        &self.x
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    fn split_ab(&self, t: f64) -> Result<(Matrix, Matrix)> {
        let ab = self.schedule_ab.theta_at(t)?;
        let n = self.state_dim;
        let m = self.input_dim;
        let mut a = Matrix::zeros(n, n);
        let mut b = Matrix::zeros(n, m);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = ab[(i, j)];
            }
            for j in 0..m {
                b[(i, j)] = ab[(i, n + j)];
            }
        }
        Ok((a, b))
    }

    fn control(&self, t: f64) -> Matrix {
        let r = Matrix::from_rows(
            self.input_dim,
            1,
            vec![self.reference.eval(t); self.input_dim],
        );
        self.k_x.matmul(&self.x).add(&self.k_r.matmul(&r))
    }

    /// Advances plant state and parameterization filter by one explicit
    /// Euler step from `t` to `t + dt`.
    pub fn step(&mut self, t: f64, dt: f64) -> Result<()> {
        if dt <= 0.0 {
            return Err(Error::Contract("dt must be positive".into()));
        }
        let (a, b) = self.split_ab(t)?;
        let u = self.control(t);
        let xdot = a.matmul(&self.x).add(&b.matmul(&u));

        // Phi = [x; u] sampled before the state moves
        let mut phi_full = Matrix::zeros(self.state_dim + self.input_dim, 1);
        for i in 0..self.state_dim {
            phi_full[(i, 0)] = self.x[(i, 0)];
        }
        for i in 0..self.input_dim {
            phi_full[(self.state_dim + i, 0)] = u[(i, 0)];
        }

        self.x.add_scaled(&xdot, dt);
        let mut fdot = self.phi_bar.scale(-self.l);
        fdot.add_scaled(&phi_full, 1.0);
        self.phi_bar.add_scaled(&fdot, dt);
        self.now = t + dt;

        if !self.x.is_finite() || !self.phi_bar.is_finite() {
            return Err(Error::Divergence { component: "plant".into(), t });
        }
        Ok(())
    }

    /// Emits the regression sample at time `t`:
    /// `phi = [phi_bar; exp(-l (t - anchor))]`, `y = x^T - l x_bar^T`.
    pub fn parameterize(&self, t: f64) -> RegressionSample {
        let n = self.state_dim;
        let m = self.input_dim;
        let mut phi = Matrix::zeros(n + m + 1, 1);
        for i in 0..(n + m) {
            phi[(i, 0)] = self.phi_bar[(i, 0)];
        }
        phi[(n + m, 0)] = (-self.l * (t - self.anchor)).exp();

        let mut y = Matrix::zeros(1, n);
        for i in 0..n {
            y[(0, i)] = self.x[(i, 0)] - self.l * self.phi_bar[(i, 0)];
        }
        RegressionSample { t, phi, y }
    }

    /// Zeros the parameterization filter and moves the anchor to `t_hat`.
    /// The plant state itself is untouched. Rejected when `t_hat` runs
    /// ahead of the integrated time or behind the current anchor.
    pub fn reset_filter(&mut self, t_hat: f64) -> Result<()> {
        if t_hat < self.anchor || t_hat > self.now + 1e-12 {
            return Err(Error::Contract(format!(
                "filter reset anchor {t_hat} outside [{}, {}]",
                self.anchor, self.now
            )));
        }
        self.phi_bar = Matrix::zeros(self.state_dim + self.input_dim, 1);
        self.anchor = t_hat;
        self.anchor_state = self.x.clone();
        Ok(())
    }

    /// Ground-truth parameter implied by the parameterization at time `t`:
    /// `[A | B | x(anchor)]^T`, shape `(n_x + m_u + 1) x n_x`.
    pub fn implied_theta(&self, t: f64) -> Result<Matrix> {
        let ab = self.schedule_ab.theta_at(t)?;
        let n = self.state_dim;
        let m = self.input_dim;
        let mut th = Matrix::zeros(n + m + 1, n);
        for i in 0..n {
            for j in 0..(n + m) {
                th[(j, i)] = ab[(i, j)];
            }
            th[(n + m, i)] = self.anchor_state[(i, 0)];
        }
        Ok(th)
    }
}

/// Controllability of `(A, B)` via the rank of the controllability matrix;
/// used to sanity-check built-in scenarios.
pub fn is_controllable(a: &Matrix, b: &Matrix) -> bool {
    let n = a.rows();
    let m = b.cols();
    let mut blocks = Vec::with_capacity(n);
    let mut cur = b.clone();
    for _ in 0..n {
        blocks.push(cur.clone());
        cur = a.matmul(&cur);
    }
    let mut ctrb = Matrix::zeros(n, n * m);
    for (bi, block) in blocks.iter().enumerate() {
        for i in 0..n {
            for j in 0..m {
                ctrb[(i, bi * m + j)] = block[(i, j)];
            }
        }
    }
    // rank via Gaussian elimination with partial pivoting
    let mut a = ctrb;
    let (rows, cols) = (a.rows(), a.cols());
    let scale = a.data().iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        let mut piv = row;
        for i in row..rows {
            if a[(i, col)].abs() > a[(piv, col)].abs() {
                piv = i;
            }
        }
        if row >= rows || a[(piv, col)].abs() <= 1e-12 * scale {
            continue;
        }
        if piv != row {
            for j in 0..cols {
                let tmp = a[(row, j)];
                a[(row, j)] = a[(piv, j)];
                a[(piv, j)] = tmp;
            }
        }
        for i in (row + 1)..rows {
            let f = a[(i, col)] / a[(row, col)];
            for j in col..cols {
                a[(i, j)] -= f * a[(row, j)];
            }
        }
        rank += 1;
        row += 1;
    }
    rank == n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Segment;

    fn stacked(a: [[f64; 2]; 2], b: [f64; 2]) -> Matrix {
        Matrix::from_rows(2, 3, vec![a[0][0], a[0][1], b[0], a[1][0], a[1][1], b[1]])
    }

    fn plant_eq46() -> SwitchedPlant {
        let schedule = SwitchingSchedule::new(vec![
            Segment { theta: stacked([[0.0, 1.0], [-6.0, -8.0]], [0.0, 2.0]), start: 0.0, model: 1 },
            Segment { theta: stacked([[0.0, 1.0], [-2.0, -4.0]], [0.0, 4.0]), start: 5.0, model: 2 },
            Segment { theta: stacked([[0.0, 1.0], [-6.0, -8.0]], [0.0, 2.0]), start: 10.0, model: 1 },
        ])
        .unwrap();
        SwitchedPlant::new(
            schedule,
            Matrix::col_vec(&[-1.0, 0.0]),
            Matrix::from_rows(1, 2, vec![-5.0, -4.0]),
            Matrix::from_rows(1, 1, vec![8.0]),
            SignalDesc::Constant { value: 1.0 },
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn built_in_scenario_segments_are_controllable() {
        let p = plant_eq46();
        for seg in p.schedule_ab.segments() {
            let ab = &seg.theta;
            let a = Matrix::from_rows(2, 2, vec![ab[(0, 0)], ab[(0, 1)], ab[(1, 0)], ab[(1, 1)]]);
            let b = Matrix::col_vec(&[ab[(0, 2)], ab[(1, 2)]]);
            assert!(is_controllable(&a, &b));
        }
    }

    #[test]
    fn zero_state_zero_reference_is_an_equilibrium() {
        let schedule = SwitchingSchedule::new(vec![Segment {
            theta: stacked([[0.0, 1.0], [-6.0, -8.0]], [0.0, 2.0]),
            start: 0.0,
            model: 1,
        }])
        .unwrap();
        let mut p = SwitchedPlant::new(
            schedule,
            Matrix::zeros(2, 1),
            Matrix::from_rows(1, 2, vec![-5.0, -4.0]),
            Matrix::from_rows(1, 1, vec![8.0]),
            SignalDesc::Constant { value: 0.0 },
            1.0,
            0.0,
        )
        .unwrap();
        for k in 0..100 {
            p.step(k as f64 * 1e-3, 1e-3).unwrap();
        }
        assert_eq!(p.state().norm(), 0.0);
    }

    #[test]
    fn single_euler_step_matches_hand_computation() {
        let mut p = plant_eq46();
        // u = -5*(-1) - 4*0 + 8*1 = 13; xdot = [0, 6 + 26] = [0, 32]
        p.step(0.0, 1e-4).unwrap();
        assert_eq!(p.state()[(0, 0)], -1.0);
        assert!((p.state()[(1, 0)] - 0.0032).abs() < 1e-15);
    }

    #[test]
    fn autonomous_stable_state_decays() {
        // B = 0 with a diagonal Hurwitz A: the norm is strictly decreasing
        let schedule = SwitchingSchedule::new(vec![Segment {
            theta: stacked([[-1.0, 0.0], [0.0, -2.0]], [0.0, 0.0]),
            start: 0.0,
            model: 1,
        }])
        .unwrap();
        let mut p = SwitchedPlant::new(
            schedule,
            Matrix::col_vec(&[1.0, -0.5]),
            Matrix::from_rows(1, 2, vec![0.0, 0.0]),
            Matrix::from_rows(1, 1, vec![0.0]),
            SignalDesc::Constant { value: 0.0 },
            1.0,
            0.0,
        )
        .unwrap();
        let mut last = p.state().norm();
        for k in 0..50_000 {
            p.step(k as f64 * 1e-4, 1e-4).unwrap();
            let cur = p.state().norm();
            assert!(cur <= last + 1e-15);
            last = cur;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn parameterize_right_after_reset() {
        let mut p = plant_eq46();
        for k in 0..1000 {
            p.step(k as f64 * 1e-4, 1e-4).unwrap();
        }
        p.reset_filter(0.1).unwrap();
        let s = p.parameterize(0.1);
        assert_eq!(s.phi[(0, 0)], 0.0);
        assert_eq!(s.phi[(1, 0)], 0.0);
        assert_eq!(s.phi[(2, 0)], 0.0);
        assert_eq!(s.phi[(3, 0)], 1.0);
        for i in 0..2 {
            assert_eq!(s.y[(0, i)], p.state()[(i, 0)]);
        }
    }

    #[test]
    fn exponential_tail_decays_monotonically() {
        let mut p = plant_eq46();
        let mut last = p.parameterize(0.0).phi[(3, 0)];
        for k in 0..1000 {
            let t = k as f64 * 1e-3;
            p.step(t, 1e-3).unwrap();
            let cur = p.parameterize(t + 1e-3).phi[(3, 0)];
            assert!(cur < last);
            last = cur;
        }
    }

    #[test]
    fn reset_is_idempotent_and_rejects_future_anchor() {
        let mut p = plant_eq46();
        for k in 0..100 {
            p.step(k as f64 * 1e-4, 1e-4).unwrap();
        }
        p.reset_filter(0.01).unwrap();
        let snap = p.parameterize(0.01);
        p.reset_filter(0.01).unwrap();
        let again = p.parameterize(0.01);
        assert_eq!(snap.phi.data(), again.phi.data());
        assert!(matches!(p.reset_filter(5.0), Err(Error::Contract(_))));
    }

    /// The regression identity `y = phi^T theta` holds on a constant
    /// segment up to integration error, first order in dt.
    #[test]
    fn parameterization_identity_is_first_order_in_dt() {
        let mut errs = Vec::new();
        for dt in [1e-3, 1e-4] {
            let mut p = plant_eq46();
            let steps = (2.0 / dt) as usize;
            let mut max_err = 0.0f64;
            for k in 0..steps {
                let t = k as f64 * dt;
                let s = p.parameterize(t);
                let theta = p.implied_theta(t).unwrap();
                let err = s.y.sub(&s.phi.transpose().matmul(&theta)).norm();
                max_err = max_err.max(err);
                p.step(t, dt).unwrap();
            }
            errs.push(max_err);
        }
        // bounded by C*dt and roughly first-order between the two steps
        assert!(errs[0] < 0.2e-1, "dt=1e-3 error {}", errs[0]);
        assert!(errs[1] < 0.2e-2, "dt=1e-4 error {}", errs[1]);
        let ratio = errs[0] / errs[1];
        assert!(ratio > 4.0 && ratio < 25.0, "expected ~10x reduction, got {ratio}");
    }
}
