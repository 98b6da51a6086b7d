//! Potential-field swarm of holonomic point robots.
//!
//! Every robot follows `x_i' = sum_j f(x_i, x_j) + v` where the pairwise law
//! attracts with `a (x_j - x_i) / (d - 2r)^2` and repels with
//! `b (x_j - x_i) / (d - 2r)^3`. The gains set the spacing of the formation,
//! the common drive `v` moves it as a whole.

mod diagnostics;
mod dynamics;
mod gains;

pub use diagnostics::{centroid, diagnostics, diagnostics_of, mean_nearest_neighbour, pairwise_min_distance, Diagnostics};
pub use dynamics::{equilibrium_distance, interaction, Integrator, StepReport};
pub use gains::{formula_gains, GainMode, GainPreset, Gains};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point in the plane, meters.
pub type Point = [f64; 2];

#[derive(Debug, Error, PartialEq)]
pub enum SwarmError {
    #[error("swarm needs at least one robot")]
    Empty,
    #[error("gains must be positive (a={a}, b={b})")]
    NonPositiveGains { a: f64, b: f64 },
    #[error("robot radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("non-finite coordinate for robot {0}")]
    NonFinite(usize),
    #[error("robots {i} and {j} are {distance} m apart, inside the 2r safety distance")]
    Collision { i: usize, j: usize, distance: f64 },
    #[error("time step {0} outside (0, dt_max]")]
    BadTimeStep(f64),
    #[error("step could not be made collision-free down to dt_min={dt_min}: {source}")]
    StepFailed {
        dt_min: f64,
        #[source]
        source: Box<SwarmError>,
    },
    #[error("no gains mapped for thought {0}")]
    UnmappedThought(String),
}

/// Positions and active control parameters of the swarm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub positions: Vec<Point>,
    pub radius: f64,
    pub a: f64,
    pub b: f64,
    pub drive: Point,
    /// Simulation time, seconds.
    pub t: f64,
}

impl SwarmState {
    pub fn new(positions: Vec<Point>, radius: f64, a: f64, b: f64) -> Result<Self, SwarmError> {
        let state = Self {
            positions,
            radius,
            a,
            b,
            drive: [0.0, 0.0],
            t: 0.0,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn equilibrium_distance(&self) -> f64 {
        equilibrium_distance(self.a, self.b, self.radius)
    }

    pub fn set_gains(&mut self, gains: Gains) {
        self.a = gains.a;
        self.b = gains.b;
    }

    /// Checks every invariant: non-empty, positive gains, finite and
    /// collision-free positions.
    pub fn validate(&self) -> Result<(), SwarmError> {
        if self.positions.is_empty() {
            return Err(SwarmError::Empty);
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(SwarmError::BadRadius(self.radius));
        }
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(SwarmError::NonPositiveGains { a: self.a, b: self.b });
        }
        for (i, p) in self.positions.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(SwarmError::NonFinite(i));
            }
        }
        if let Some((i, j, distance)) = pairwise_min_distance(&self.positions) {
            if distance <= 2.0 * self.radius {
                return Err(SwarmError::Collision { i, j, distance });
            }
        }
        Ok(())
    }
}

/// Initial placement of the robots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Formation {
    /// Square grid centred on `center` with the given spacing.
    Grid { center: Point, spacing: f64 },
    /// Sunflower (Vogel) spiral centred on `center`; consecutive rings are
    /// `spacing` apart.
    Spiral { center: Point, spacing: f64 },
}

impl Default for Formation {
    fn default() -> Self {
        Formation::Grid {
            center: [0.0, 0.0],
            spacing: 1.0,
        }
    }
}

impl Formation {
    pub fn positions(&self, count: usize) -> Vec<Point> {
        match *self {
            Formation::Grid { center, spacing } => {
                let side = (count as f64).sqrt().ceil().max(1.0) as usize;
                let offset = (side as f64 - 1.0) * spacing / 2.0;
                (0..count)
                    .map(|k| {
                        let (row, col) = (k / side, k % side);
                        [
                            center[0] + col as f64 * spacing - offset,
                            center[1] + row as f64 * spacing - offset,
                        ]
                    })
                    .collect()
            }
            Formation::Spiral { center, spacing } => {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|k| {
                        let rho = spacing * (k as f64 + 0.5).sqrt();
                        let phi = k as f64 * golden;
                        [center[0] + rho * phi.cos(), center[1] + rho * phi.sin()]
                    })
                    .collect()
            }
        }
    }
}
