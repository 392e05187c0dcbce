//! Walking scenario files.
//!
//! ```toml
//! start = [0.056, 0.2, 0.0]     # apex y, xdot, ydot in the first stance frame
//! first_swing = "right"         # side the first swing foot lands on
//! swing_height = 0.1
//!
//! [[segments]]                  # consecutive runs of steps with a fixed turn
//! steps = 12
//! turn_deg = 18.8
//!
//! [[disturbances]]              # either a velocity jump ...
//! time = 1.0
//! delta_v = [0.1, 0.0]
//!
//! [[disturbances]]              # ... or a force impulse
//! time = 2.0
//! force = 520.0
//! duration = 0.1
//! mass = 135.9
//! direction_deg = 90.0
//! ```
//!
//! Instead of segments, `steps = N` walks straight for N steps.

use std::path::Path;

use locomotion::lipm::ApexState;
use locomotion::sim::{Disturbance, ReplanPolicy, Side, WalkScenario};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub steps: usize,
    #[serde(default)]
    pub turn_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub time: f64,
    pub delta_v: Option<[f64; 2]>,
    pub force: Option<f64>,
    pub duration: Option<f64>,
    pub mass: Option<f64>,
    pub direction_deg: Option<f64>,
}

impl DisturbanceSpec {
    fn resolve(&self) -> Result<Disturbance, CliError> {
        let impulse = (self.force, self.duration, self.mass, self.direction_deg);
        match (self.delta_v, impulse) {
            (Some(delta_v), (None, None, None, None)) => Ok(Disturbance {
                time: self.time,
                delta_v,
            }),
            (None, (Some(f), Some(d), Some(m), Some(dir))) => {
                if !(m > 0.0) {
                    return Err(CliError::Parse("disturbance mass must be positive".into()));
                }
                Ok(Disturbance::from_impulse(self.time, f, d, m, dir.to_radians()))
            }
            _ => Err(CliError::Parse(format!(
                "disturbance at t = {} needs either `delta_v` or all of `force`, `duration`, `mass`, `direction_deg`",
                self.time
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub start: [f64; 3],
    #[serde(default)]
    pub first_swing: Side,
    pub steps: Option<usize>,
    #[serde(default)]
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub disturbances: Vec<DisturbanceSpec>,
    pub swing_height: Option<f64>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_scenario(&self, replan: &ReplanPolicy) -> Result<WalkScenario, CliError> {
        let start = ApexState::from_array(self.start);
        let mut sc = match (self.steps, self.segments.is_empty()) {
            (Some(n), true) => WalkScenario::straight(start, n),
            (None, false) => {
                let runs: Vec<(usize, f64)> = self
                    .segments
                    .iter()
                    .map(|s| (s.steps, s.turn_deg.to_radians()))
                    .collect();
                WalkScenario::steering(start, &runs)
            }
            _ => {
                return Err(CliError::Parse(
                    "scenario needs exactly one of `steps` or `[[segments]]`".into(),
                ))
            }
        };
        sc.first_swing = self.first_swing;
        sc.replan = replan.clone();
        if let Some(h) = self.swing_height {
            sc.swing_height = h;
        }
        sc.disturbances = self
            .disturbances
            .iter()
            .map(DisturbanceSpec::resolve)
            .collect::<Result<_, _>>()?;
        sc.validate().map_err(|e| CliError::Parse(e.to_string()))?;
        Ok(sc)
    }
}
