use super::{pairwise_min_distance, Point, SwarmError, SwarmState};

/// Distance `2r + b/a` at which attraction and repulsion cancel.
pub fn equilibrium_distance(a: f64, b: f64, radius: f64) -> f64 {
    2.0 * radius + b / a
}

/// Force exerted on the robot at `xi` by the robot at `xj`.
///
/// Inside `2r + clamp_margin` the gap is clamped to `clamp_margin`, which for
/// any realistic gains turns the law into a bounded pure repulsion. The second
/// value reports whether the clamp was hit. Coincident points exert nothing.
pub fn interaction(xi: Point, xj: Point, a: f64, b: f64, radius: f64, clamp_margin: f64) -> (Point, bool) {
    let dx = xj[0] - xi[0];
    let dy = xj[1] - xi[1];
    let d = (dx * dx + dy * dy).sqrt();
    if d == 0.0 {
        return ([0.0, 0.0], true);
    }
    let gap = d - 2.0 * radius;
    if gap <= clamp_margin {
        let gap = clamp_margin;
        let d_eff = 2.0 * radius + clamp_margin;
        let scale = (a / (gap * gap) - b / (gap * gap * gap)) * d_eff / d;
        return ([scale * dx, scale * dy], true);
    }
    let scale = a / (gap * gap) - b / (gap * gap * gap);
    ([scale * dx, scale * dy], false)
}

/// Upper bound on how fast the pair force changes with position at distance `d`.
fn pair_stiffness(d: f64, a: f64, b: f64, radius: f64, clamp_margin: f64) -> f64 {
    let gap = (d - 2.0 * radius).max(clamp_margin);
    let d = gap + 2.0 * radius;
    let g2 = gap * gap;
    let g3 = g2 * gap;
    let magnitude = a / g2 - b / g3;
    let radial = magnitude + d * (-2.0 * a / g3 + 3.0 * b / (g3 * gap));
    radial.abs().max(magnitude.abs())
}

/// What happened during one call to [`Integrator::step`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    pub substeps: usize,
    pub clamp_events: usize,
    pub retries: usize,
}

/// Explicit Euler integrator over the all-pairs force field.
///
/// A requested step is split into power-of-two substeps so that no substep
/// exceeds the local stiffness bound of the field, and any substep that lands
/// inside a safety radius is retried at half size down to `dt_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub dt_max: f64,
    pub dt_min: f64,
    pub clamp_margin: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            dt_max: 1.0,
            dt_min: 1e-12,
            clamp_margin: 1e-3,
        }
    }
}

impl Integrator {
    /// Velocity of every robot (pairwise forces plus drive), the number of
    /// clamped interactions, and the largest Gershgorin row bound of the
    /// force Jacobian.
    ///
    /// Each pair is evaluated once and applied with opposite signs. Robot `i`
    /// still accumulates its partners in ascending index order, so the sums
    /// are reproducible bit for bit.
    pub fn field(&self, state: &SwarmState) -> (Vec<Point>, usize, f64) {
        let n = state.positions.len();
        let (a, b, r) = (state.a, state.b, state.radius);
        let delta = state.equilibrium_distance();
        let at_delta = pair_stiffness(delta, a, b, r, self.clamp_margin);
        let mut forces = vec![[0.0f64; 2]; n];
        let mut rows = vec![0.0f64; n];
        let mut clamps = 0;
        for i in 0..n {
            let p = state.positions[i];
            for j in (i + 1)..n {
                let q = state.positions[j];
                let (f, clamped) = interaction(p, q, a, b, r, self.clamp_margin);
                if clamped {
                    clamps += 2;
                }
                forces[i][0] += f[0];
                forces[i][1] += f[1];
                forces[j][0] -= f[0];
                forces[j][1] -= f[1];
                let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
                let d = (dx * dx + dy * dy).sqrt();
                let mut k = pair_stiffness(d, a, b, r, self.clamp_margin);
                if d > delta {
                    k = k.max(at_delta);
                }
                rows[i] += k;
                rows[j] += k;
            }
        }
        let vel = forces
            .iter()
            .map(|f| [state.drive[0] + f[0], state.drive[1] + f[1]])
            .collect();
        let stiffness = rows.iter().fold(0.0f64, |m, &row| m.max(2.0 * row));
        (vel, clamps, stiffness)
    }

    pub fn velocities(&self, state: &SwarmState) -> Vec<Point> {
        self.field(state).0
    }

    fn euler(state: &SwarmState, vel: &[Point], dt: f64) -> SwarmState {
        let mut next = state.clone();
        for (p, v) in next.positions.iter_mut().zip(vel) {
            p[0] += dt * v[0];
            p[1] += dt * v[1];
        }
        next.t = state.t + dt;
        next
    }

    fn guarded(
        &self,
        state: &SwarmState,
        vel: &[Point],
        dt: f64,
        report: &mut StepReport,
    ) -> Result<SwarmState, SwarmError> {
        let next = Self::euler(state, vel, dt);
        match check_separation(&next) {
            Ok(()) => {
                report.substeps += 1;
                Ok(next)
            }
            Err(err) => {
                let half = dt / 2.0;
                if half < self.dt_min {
                    return Err(SwarmError::StepFailed {
                        dt_min: self.dt_min,
                        source: Box::new(err),
                    });
                }
                log::debug!("collision after substep of {dt} s, retrying at {half} s");
                report.retries += 1;
                let mid = self.guarded(state, vel, half, report)?;
                let (mid_vel, clamps, _) = self.field(&mid);
                report.clamp_events += clamps;
                self.guarded(&mid, &mid_vel, half, report)
            }
        }
    }

    /// Advances the swarm by `dt` seconds. Forces are always evaluated on the
    /// pre-substep snapshot.
    pub fn step(&self, state: &SwarmState, dt: f64) -> Result<(SwarmState, StepReport), SwarmError> {
        if !(dt > 0.0 && dt <= self.dt_max) {
            return Err(SwarmError::BadTimeStep(dt));
        }
        state.validate()?;
        let mut report = StepReport::default();
        let mut current = state.clone();
        let mut remaining = dt;
        while remaining > 0.0 {
            let (vel, clamps, k) = self.field(&current);
            report.clamp_events += clamps;
            let mut h = remaining;
            while h * k > 1.0 && h / 2.0 >= self.dt_min {
                h /= 2.0;
            }
            // The last substep absorbs rounding so the total advance is exactly dt.
            if remaining - h < self.dt_min {
                h = remaining;
            }
            current = self.guarded(&current, &vel, h, &mut report)?;
            remaining -= h;
        }
        current.t = state.t + dt;
        if report.clamp_events > 0 {
            log::debug!("{} clamped interactions during step at t={}", report.clamp_events, state.t);
        }
        Ok((current, report))
    }
}

fn check_separation(state: &SwarmState) -> Result<(), SwarmError> {
    for (i, p) in state.positions.iter().enumerate() {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(SwarmError::NonFinite(i));
        }
    }
    if let Some((i, j, distance)) = pairwise_min_distance(&state.positions) {
        if distance <= 2.0 * state.radius {
            return Err(SwarmError::Collision { i, j, distance });
        }
    }
    Ok(())
}
