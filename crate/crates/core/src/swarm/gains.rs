use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{SwarmError, SwarmState};
use crate::Thought;

/// Attraction and repulsion gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub a: f64,
    pub b: f64,
}

impl Gains {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn is_valid(&self) -> bool {
        self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()
    }
}

/// Divisor of the simulation gain rule `b = h * M / 2.625`.
pub const FORMULA_DIVISOR: f64 = 2.625;

/// Gains of the simulation rule: `a = 1`, `b = h * robots / 2.625`, with `h`
/// the one-based numeric thought state.
pub fn formula_gains(h: u32, robots: usize) -> Gains {
    Gains::new(1.0, h as f64 * robots as f64 / FORMULA_DIVISOR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GainMode {
    FixedTable { table: BTreeMap<Thought, Gains> },
    Formula,
}

/// Maps a decoded thought to swarm gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainPreset {
    #[serde(flatten)]
    pub mode: GainMode,
}

impl GainPreset {
    /// Gains used on the three-robot hardware swarm.
    pub fn hardware() -> Self {
        let mut table = BTreeMap::new();
        table.insert(Thought::Aggregate, Gains::new(4.0, 80.0));
        table.insert(Thought::Disperse, Gains::new(2.0, 80.0));
        Self {
            mode: GainMode::FixedTable { table },
        }
    }

    /// The `a = 1, b = h * M / 2.625` rule used for the 128-robot simulation.
    pub fn formula() -> Self {
        Self { mode: GainMode::Formula }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "hardware" | "fixed-table" => Some(Self::hardware()),
            "formula" | "simulation" => Some(Self::formula()),
            _ => None,
        }
    }

    /// Numeric state fed to the formula: aggregation uses the smaller repulsion.
    pub fn formula_state(thought: Thought) -> u32 {
        match thought {
            Thought::Aggregate => 1,
            Thought::Disperse => 2,
        }
    }

    pub fn validate(&self) -> Result<(), SwarmError> {
        if let GainMode::FixedTable { table } = &self.mode {
            for thought in Thought::ALL {
                let gains = table
                    .get(&thought)
                    .ok_or_else(|| SwarmError::UnmappedThought(thought.to_string()))?;
                if !gains.is_valid() {
                    return Err(SwarmError::NonPositiveGains { a: gains.a, b: gains.b });
                }
            }
        }
        Ok(())
    }

    pub fn gains(&self, thought: Thought, robots: usize) -> Result<Gains, SwarmError> {
        match &self.mode {
            GainMode::FixedTable { table } => table
                .get(&thought)
                .copied()
                .ok_or_else(|| SwarmError::UnmappedThought(thought.to_string())),
            GainMode::Formula => Ok(formula_gains(Self::formula_state(thought), robots)),
        }
    }

    /// Returns `state` with the gains for `thought` installed.
    pub fn apply(&self, state: &SwarmState, thought: Thought) -> Result<SwarmState, SwarmError> {
        let gains = self.gains(thought, state.len())?;
        let mut next = state.clone();
        next.set_gains(gains);
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_values_for_128_robots() {
        let g1 = formula_gains(1, 128);
        assert_eq!(g1.a, 1.0);
        assert!((g1.b - 48.76190476190476).abs() < 1e-12);
        let g2 = formula_gains(2, 128);
        assert!((g2.b - 97.52380952380952).abs() < 1e-12);
    }

    #[test]
    fn hardware_table() {
        let preset = GainPreset::hardware();
        preset.validate().unwrap();
        assert_eq!(preset.gains(Thought::Aggregate, 3).unwrap(), Gains::new(4.0, 80.0));
        assert_eq!(preset.gains(Thought::Disperse, 3).unwrap(), Gains::new(2.0, 80.0));
    }

    #[test]
    fn formula_mode_aggregates_tighter() {
        let preset = GainPreset::formula();
        let agg = preset.gains(Thought::Aggregate, 128).unwrap();
        let dis = preset.gains(Thought::Disperse, 128).unwrap();
        assert!(agg.b / agg.a < dis.b / dis.a);
    }

    #[test]
    fn unmapped_thought_is_a_configuration_error() {
        let mut table = BTreeMap::new();
        table.insert(Thought::Aggregate, Gains::new(4.0, 80.0));
        let preset = GainPreset {
            mode: GainMode::FixedTable { table },
        };
        assert_eq!(
            preset.gains(Thought::Disperse, 3),
            Err(SwarmError::UnmappedThought("Disperse".into()))
        );
        assert!(preset.validate().is_err());
    }

    #[test]
    fn preset_toml_shape() {
        let text = toml::to_string(&GainPreset::hardware()).unwrap();
        let back: GainPreset = toml::from_str(&text).unwrap();
        assert_eq!(back, GainPreset::hardware());
        let formula: GainPreset = toml::from_str("mode = \"formula\"").unwrap();
        assert_eq!(formula, GainPreset::formula());
    }
}
