use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaBounds {
    pub theta0: [f64; 2],
    pub theta1: [f64; 2],
}

impl Default for ThetaBounds {
    fn default() -> Self {
        ThetaBounds {
            theta0: [80.0, 90.0],
            theta1: [0.0, 3.0],
        }
    }
}

impl ThetaBounds {
    pub fn validate(&self) -> Result<()> {
        let ok = |b: [f64; 2]| b[0].is_finite() && b[1].is_finite() && b[0] <= b[1];
        if ok(self.theta0) && ok(self.theta1) {
            Ok(())
        } else {
            Err(Error::invalid(format!("theta bounds {self:?}")))
        }
    }

    pub fn contains(&self, theta: [f64; 2]) -> bool {
        (self.theta0[0]..=self.theta0[1]).contains(&theta[0])
            && (self.theta1[0]..=self.theta1[1]).contains(&theta[1])
    }

    fn clamp(&self, theta: [f64; 2]) -> [f64; 2] {
        [
            theta[0].clamp(self.theta0[0], self.theta0[1]),
            theta[1].clamp(self.theta1[0], self.theta1[1]),
        ]
    }
}

/// Regularized squared gap between the target and the linear threshold.
pub fn threshold_loss(theta: [f64; 2], q_phi: f64, h_bar: f64, gamma: f64) -> f64 {
    let r = q_phi - theta[0] - theta[1] * h_bar;
    r * r + gamma * (theta[0] * theta[0] + theta[1] * theta[1])
}

/// Exact minimizer of [`threshold_loss`] over the box. The optimum of a
/// convex quadratic on a rectangle is either the free stationary point or
/// lies on an edge, where the other coordinate has a clamped closed form.
/// Where the loss is flat, the coordinate keeps its value from `prev`.
pub fn solve_threshold(
    q_phi: f64,
    h_bar: f64,
    gamma: f64,
    bounds: &ThetaBounds,
    prev: [f64; 2],
) -> [f64; 2] {
    let prev = bounds.clamp(prev);
    let (a, b, d) = (1.0 + gamma, h_bar, h_bar * h_bar + gamma);
    let det = a * d - b * b;
    let mut cands: Vec<[f64; 2]> = Vec::with_capacity(8);
    if det > 1e-14 * a * d {
        let (r0, r1) = (q_phi, q_phi * h_bar);
        let free = [(d * r0 - b * r1) / det, (a * r1 - b * r0) / det];
        if bounds.contains(free) {
            cands.push(free);
        }
    }
    for t0 in [bounds.theta0[0], bounds.theta0[1], prev[0]] {
        let t1 = if d > 0.0 {
            (q_phi - t0) * h_bar / d
        } else {
            prev[1]
        };
        cands.push(bounds.clamp([t0, t1]));
    }
    for t1 in [bounds.theta1[0], bounds.theta1[1], prev[1]] {
        cands.push(bounds.clamp([(q_phi - t1 * h_bar) / a, t1]));
    }
    let dist = |c: &[f64; 2]| (c[0] - prev[0]).powi(2) + (c[1] - prev[1]).powi(2);
    let mut best = cands[0];
    let mut best_loss = threshold_loss(best, q_phi, h_bar, gamma);
    for c in &cands[1..] {
        let l = threshold_loss(*c, q_phi, h_bar, gamma);
        let tie = (l - best_loss).abs() <= 1e-12 * best_loss.max(1.0);
        if (!tie && l < best_loss) || (tie && dist(c) < dist(&best)) {
            best = *c;
            best_loss = l;
        }
    }
    best
}

/// The adaptive QoS threshold `θ0 + θ1·H̄` and the running QoS statistics
/// that drive its target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub theta0: f64,
    pub theta1: f64,
    pub bounds: ThetaBounds,
    pub gamma: f64,
    /// Long-run QoS target Q_Φ.
    pub qos_target: f64,
    pub qos_sum: f64,
    pub qos_count: u64,
}

impl Default for ThresholdModel {
    fn default() -> Self {
        ThresholdModel {
            theta0: 85.0,
            theta1: 1.0,
            bounds: ThetaBounds::default(),
            gamma: 0.001,
            qos_target: 92.0,
            qos_sum: 0.0,
            qos_count: 0,
        }
    }
}

impl ThresholdModel {
    pub fn new(theta: [f64; 2], bounds: ThetaBounds, gamma: f64, qos_target: f64) -> Result<Self> {
        bounds.validate()?;
        if !bounds.contains(theta) || gamma < 0.0 || !gamma.is_finite() || !qos_target.is_finite() {
            return Err(Error::invalid(format!(
                "threshold model θ={theta:?}, γ={gamma}, Q_Φ={qos_target}"
            )));
        }
        Ok(ThresholdModel {
            theta0: theta[0],
            theta1: theta[1],
            bounds,
            gamma,
            qos_target,
            qos_sum: 0.0,
            qos_count: 0,
        })
    }

    pub fn theta(&self) -> [f64; 2] {
        [self.theta0, self.theta1]
    }

    pub fn record_qos(&mut self, q: f64) {
        self.qos_sum += q;
        self.qos_count += 1;
    }

    /// `Q_φ = Q_Φ + (Q_Φ − mean observed QoS)`; `Q_Φ` before any observation.
    pub fn adaptive_target(&self) -> f64 {
        if self.qos_count == 0 {
            return self.qos_target;
        }
        2.0 * self.qos_target - self.qos_sum / self.qos_count as f64
    }

    /// Threshold the current θ gives for `h_bar`, clamped to `[0, 100]`.
    pub fn threshold(&self, h_bar: f64) -> f64 {
        (self.theta0 + self.theta1 * h_bar).clamp(0.0, 100.0)
    }

    /// Refits θ to `(q_phi, h_bar)` and returns the new threshold for `h_bar`.
    pub fn update(&mut self, q_phi: f64, h_bar: f64) -> f64 {
        let [t0, t1] = solve_threshold(q_phi, h_bar, self.gamma, &self.bounds, self.theta());
        self.theta0 = t0;
        self.theta1 = t1;
        self.threshold(h_bar)
    }
}
