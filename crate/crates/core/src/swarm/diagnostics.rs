use serde::{Deserialize, Serialize};

use super::{Point, SwarmState};

/// Formation summary at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub centroid: Point,
    /// Distance of each robot to the centroid.
    pub radii: Vec<f64>,
    /// Mean distance from each robot to its nearest neighbour; 0 for a lone robot.
    pub mean_nn_dist: f64,
}

pub fn centroid(positions: &[Point]) -> Point {
    let n = positions.len() as f64;
    let (sx, sy) = positions
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
    [sx / n, sy / n]
}

pub fn mean_nearest_neighbour(positions: &[Point]) -> f64 {
    if positions.len() < 2 {
        return 0.0;
    }
    let total: f64 = positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            positions
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| (q[0] - p[0]).hypot(q[1] - p[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / positions.len() as f64
}

pub fn diagnostics(state: &SwarmState) -> Diagnostics {
    diagnostics_of(&state.positions)
}

pub fn diagnostics_of(positions: &[Point]) -> Diagnostics {
    let c = centroid(positions);
    Diagnostics {
        centroid: c,
        radii: positions.iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).collect(),
        mean_nn_dist: mean_nearest_neighbour(positions),
    }
}

/// Closest pair `(i, j, distance)`, or `None` for fewer than two points.
pub fn pairwise_min_distance(positions: &[Point]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let dx = positions[j][0] - positions[i][0];
            let dy = positions[j][1] - positions[i][1];
            let d2 = dx * dx + dy * dy;
            if best.is_none_or(|(_, _, b)| d2 < b) {
                best = Some((i, j, d2));
            }
        }
    }
    best.map(|(i, j, d2)| (i, j, d2.sqrt()))
}
