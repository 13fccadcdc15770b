//! The shared key-value parameter file.
//!
//! One TOML document holds every section the commands need: `clutch`,
//! `driveline`, `shift_scenario`, `engagement_scenario`, `sim`, `grid` and
//! `train`. Every key is required and unknown keys are rejected. Errors carry
//! the line number of the offending key.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clutch::{
    ClutchGeometry, ClutchParams, EngagementMode, FrictionMode, FrictionSpec, SpringSpec,
};
use crate::driveline::{Configuration, DrivelineParams};
use crate::error::{Error, Result};
use crate::mlp::{Activation, MlpSpec, TrainConfig};
use crate::sim::{Scenario, SimConfig, TorqueProfile};
use crate::sweep::{AxisRange, GridSpec};

/// The shipped parameter file.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutchSection {
    pub shoe_count: u32,
    pub shoe_width: f64,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    pub drum_radius: f64,
    pub pin_to_center: f64,
    pub shoe_cm_radius: f64,
    pub centrifugal_arm: f64,
    pub reaction_arm: f64,
    pub spring_arm_primary: f64,
    pub spring_arm_secondary: f64,
    pub shoe_mass: f64,
    pub spring_preload: f64,
    pub spring_stiffness: f64,
    pub shoe_clearance: f64,
    pub mu_static: f64,
    pub mu_dynamic: f64,
    pub friction_mode: FrictionMode,
    pub engagement_mode: EngagementMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivelineSection {
    pub ratio_first: f64,
    pub ratio_second: f64,
    pub inertia_input: f64,
    pub inertia_second: f64,
    pub configuration: Configuration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub initial_speed_input: f64,
    pub duration: f64,
    pub input_torque: Vec<(f64, f64)>,
    pub output_torque: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub time_step: f64,
    pub lock_slip_tolerance: f64,
    pub mode_hold_steps: u32,
    pub max_speed: f64,
    pub trace_decimation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub mass_min: f64,
    pub mass_max: f64,
    pub mass_count: usize,
    pub preload_min: f64,
    pub preload_max: f64,
    pub preload_count: usize,
    pub operating_speed_max: f64,
    pub jitter_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub clutch: ClutchSection,
    pub driveline: DrivelineSection,
    pub shift_scenario: ScenarioSection,
    pub engagement_scenario: ScenarioSection,
    pub sim: SimSection,
    pub grid: GridSection,
    pub train: TrainSection,
}

impl Default for Config {
    fn default() -> Self {
        Config::parse(DEFAULT_CONFIG, "<default>").expect("shipped config is valid")
    }
}

/// Line (1-based) of `key` inside `[section]`.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = "";
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim();
            continue;
        }
        if current == section {
            if let Some(rest) = l.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

impl Config {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config {
            path: origin.to_string(),
            message: e.to_string().trim_end().to_string(),
        })?;
        if let Err((section, key, message)) = cfg.check() {
            let at = locate(text, section, key)
                .map(|n| format!("line {n}: "))
                .unwrap_or_default();
            return Err(Error::Config {
                path: origin.to_string(),
                message: format!("{at}[{section}] {key}: {message}"),
            });
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Validates every derived parameter struct, naming the key at fault.
    fn check(&self) -> std::result::Result<(), (&'static str, &'static str, String)> {
        const CLUTCH_KEYS: [(&str, &str); 17] = [
            ("shoe_count", "shoe_count"),
            ("shoe_width", "shoe_width"),
            ("theta1", "theta1_deg"),
            ("shoe_cm_radius", "shoe_cm_radius"),
            ("drum_radius", "drum_radius"),
            ("pin_to_center", "pin_to_center"),
            ("centrifugal_arm", "centrifugal_arm"),
            ("reaction_arm", "reaction_arm"),
            ("spring_arm_primary", "spring_arm_primary"),
            ("spring_arm_secondary", "spring_arm_secondary"),
            ("shoe_mass", "shoe_mass"),
            ("preload", "spring_preload"),
            ("stiffness", "spring_stiffness"),
            ("clearance", "shoe_clearance"),
            ("friction", "mu_dynamic"),
            ("self-locking", "mu_static"),
            ("mu", "mu_dynamic"),
        ];
        if let Err(e) = self.clutch_params().validate() {
            let msg = e.to_string();
            let key = CLUTCH_KEYS
                .iter()
                .find(|(needle, _)| msg.contains(needle))
                .map_or("shoe_count", |(_, key)| key);
            return Err(("clutch", key, msg));
        }
        if let Err(e) = self.driveline_params().validate() {
            let msg = e.to_string();
            let key = if msg.contains("inertia_input") {
                "inertia_input"
            } else if msg.contains("inertia_second") {
                "inertia_second"
            } else {
                "ratio_first"
            };
            return Err(("driveline", key, msg));
        }
        for (name, s) in [
            ("shift_scenario", &self.shift_scenario),
            ("engagement_scenario", &self.engagement_scenario),
        ] {
            if let Err(e) = TorqueProfile::new(s.input_torque.clone()) {
                return Err((name, "input_torque", e.to_string()));
            }
            if let Err(e) = TorqueProfile::new(s.output_torque.clone()) {
                return Err((name, "output_torque", e.to_string()));
            }
            if !(s.duration.is_finite() && s.duration >= 0.0) {
                return Err((name, "duration", format!("must be >= 0, got {}", s.duration)));
            }
            if !s.initial_speed_input.is_finite() {
                return Err((name, "initial_speed_input", "must be finite".into()));
            }
        }
        if let Err(e) = self.sim_config().validate() {
            let msg = e.to_string();
            let key = ["time_step", "lock_slip_tolerance", "mode_hold_steps", "max_speed"]
                .into_iter()
                .find(|k| msg.contains(k))
                .unwrap_or("time_step");
            return Err(("sim", key, msg));
        }
        if self.sim.trace_decimation < 1 {
            return Err(("sim", "trace_decimation", "must be >= 1".into()));
        }
        if let Err(e) = self.grid_spec().validate() {
            let msg = e.to_string();
            let key = if msg.contains("operating_speed_max") {
                "operating_speed_max"
            } else if msg.contains("preload") {
                "preload_min"
            } else {
                "mass_min"
            };
            return Err(("grid", key, msg));
        }
        if let Err(e) = self.mlp_spec(2).validate() {
            return Err(("train", "hidden_layers", e.to_string()));
        }
        if let Err(e) = self.train_config().validate() {
            let msg = e.to_string();
            let key = ["learning_rate", "epochs", "batch_size", "validation_fraction"]
                .into_iter()
                .find(|k| msg.contains(k))
                .unwrap_or("learning_rate");
            return Err(("train", key, msg));
        }
        Ok(())
    }

    pub fn clutch_params(&self) -> ClutchParams {
        let c = &self.clutch;
        ClutchParams {
            geometry: ClutchGeometry {
                shoe_count: c.shoe_count,
                shoe_width: c.shoe_width,
                theta1: c.theta1_deg.to_radians(),
                theta2: c.theta2_deg.to_radians(),
                drum_radius: c.drum_radius,
                pin_to_center: c.pin_to_center,
                shoe_cm_radius: c.shoe_cm_radius,
                centrifugal_arm: c.centrifugal_arm,
                reaction_arm: c.reaction_arm,
                spring_arm_primary: c.spring_arm_primary,
                spring_arm_secondary: c.spring_arm_secondary,
            },
            friction: FrictionSpec {
                mu_static: c.mu_static,
                mu_dynamic: c.mu_dynamic,
                mode: c.friction_mode,
            },
            spring: SpringSpec {
                preload: c.spring_preload,
                stiffness: c.spring_stiffness,
                shoe_clearance: c.shoe_clearance,
            },
            shoe_mass: c.shoe_mass,
            engagement_mode: c.engagement_mode,
        }
    }

    pub fn driveline_params(&self) -> DrivelineParams {
        let d = &self.driveline;
        DrivelineParams {
            ratio_first: d.ratio_first,
            ratio_second: d.ratio_second,
            inertia_input: d.inertia_input,
            inertia_second: d.inertia_second,
            configuration: d.configuration,
        }
    }

    fn scenario(s: &ScenarioSection) -> Scenario {
        Scenario {
            input_torque: TorqueProfile::new(s.input_torque.clone())
                .expect("validated torque profile"),
            output_torque: TorqueProfile::new(s.output_torque.clone())
                .expect("validated torque profile"),
            initial_speed_input: s.initial_speed_input,
            duration: s.duration,
        }
    }

    pub fn shift_scenario(&self) -> Scenario {
        Self::scenario(&self.shift_scenario)
    }

    pub fn engagement_scenario(&self) -> Scenario {
        Self::scenario(&self.engagement_scenario)
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            time_step: self.sim.time_step,
            lock_slip_tolerance: self.sim.lock_slip_tolerance,
            mode_hold_steps: self.sim.mode_hold_steps,
            max_speed: self.sim.max_speed,
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        let g = &self.grid;
        GridSpec {
            mass: AxisRange::new(g.mass_min, g.mass_max, g.mass_count),
            preload: AxisRange::new(g.preload_min, g.preload_max, g.preload_count),
            configuration: self.driveline.configuration,
            operating_speed_max: g.operating_speed_max,
            jitter_samples: g.jitter_samples,
        }
    }

    pub fn mlp_spec(&self, features: usize) -> MlpSpec {
        let mut layer_sizes = vec![features];
        layer_sizes.extend(&self.train.hidden_layers);
        layer_sizes.push(1);
        MlpSpec {
            layer_sizes,
            hidden_activation: self.train.activation,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.train.learning_rate,
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            validation_fraction: self.train.validation_fraction,
            seed: self.train.seed,
        }
    }

    pub fn set_configuration(&mut self, configuration: Configuration) {
        self.driveline.configuration = configuration;
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.train.seed = seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_reproduces_reference_table() {
        let cfg = Config::default();
        let c = cfg.clutch_params();
        assert_eq!(c.geometry.shoe_count, 3);
        assert_eq!(c.geometry.shoe_width, 0.023);
        assert!((c.geometry.theta1 - 33f64.to_radians()).abs() < 1e-15);
        assert!((c.geometry.theta2 - 93f64.to_radians()).abs() < 1e-15);
        assert_eq!(c.geometry.pin_to_center, 0.046);
        assert_eq!(c.geometry.shoe_cm_radius, 0.0467);
        assert_eq!(c.geometry.centrifugal_arm, 0.03952);
        assert_eq!(c.geometry.reaction_arm, 0.055);
        assert_eq!(c.geometry.spring_arm_primary, 0.05066);
        assert_eq!(c.geometry.spring_arm_secondary, 0.00089);
        let d = cfg.driveline_params();
        assert_eq!((d.ratio_first, d.ratio_second), (4.455, 3.538));
        assert_eq!((d.inertia_input, d.inertia_second), (0.468, 0.468));
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = Config::default();
        let again = Config::parse(&cfg.to_toml(), "x").unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = DEFAULT_CONFIG.replace("shoe_width = 0.023", "shoe_width = = 0.023");
        let err = Config::parse(&text, "bad.toml").unwrap_err().to_string();
        assert!(err.contains("bad.toml"), "{err}");
        let line = locate(DEFAULT_CONFIG, "clutch", "shoe_width").unwrap();
        assert!(err.contains(&format!("line {line}")), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = DEFAULT_CONFIG.replace("[sim]\n", "[sim]\nwobble = 3\n");
        let err = Config::parse(&text, "bad.toml").unwrap_err().to_string();
        assert!(err.contains("wobble"), "{err}");
    }

    #[test]
    fn semantic_error_reports_key_line() {
        let text = DEFAULT_CONFIG.replace("theta1_deg = 33.0", "theta1_deg = 120.0");
        let err = Config::parse(&text, "bad.toml").unwrap_err().to_string();
        let line = locate(DEFAULT_CONFIG, "clutch", "theta1_deg").unwrap();
        assert!(err.contains(&format!("line {line}")), "{err}");
        assert!(err.contains("theta1_deg"), "{err}");

        let text = DEFAULT_CONFIG.replace("inertia_second = 0.468", "inertia_second = 0.0");
        let err = Config::parse(&text, "bad.toml").unwrap_err().to_string();
        assert!(err.contains("inertia_second"), "{err}");

        let text = DEFAULT_CONFIG.replace("mass_count = 21", "mass_count = 1");
        let err = Config::parse(&text, "bad.toml").unwrap_err().to_string();
        assert!(err.contains("[grid]"), "{err}");
    }

    #[test]
    fn missing_key_is_rejected() {
        let text = DEFAULT_CONFIG.replace("mu_static = 0.35", "");
        assert!(Config::parse(&text, "bad.toml").is_err());
    }
}
