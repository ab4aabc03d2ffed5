//! Scenario files.
//!
//! All quantities are SI and carry their unit in the key name. Unknown keys
//! are rejected anywhere in the document.

use std::path::Path;

use cohradar_core::{Mode, Scene, Snr, SweepPlan, Target, DEFAULT_CARRIER_HZ};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub plan: PlanConfig,
    #[serde(default)]
    pub scene: SceneConfig,
    #[serde(default)]
    pub mode: ModeName,
    /// Sample rate for the sampled receiver and the spectrum command.
    /// Defaults to eight times the carrier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fs_hz: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Round-trip path added by cables and components, meters.
    #[serde(default)]
    pub delay_offset_m: f64,
    /// Keep the double-frequency mixing products in the receiver.
    #[serde(default = "yes")]
    pub double_frequency: bool,
    /// Sweep indices analyzed by the spectrum command; first, middle and
    /// last when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_points: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

/// Sweep plan given either in time (`tau0_s`, `delta_tau_s`) or in
/// round-trip length (`l0_m`, `span_m`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau0_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_tau_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l0_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_m: Option<f64>,
    pub points: usize,
    pub pulses: usize,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default)]
    pub targets: Vec<TargetConfig>,
    /// At most one of `snr_db` and `snr_linear`; neither means noiseless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_linear: Option<f64>,
    #[serde(default)]
    pub noise_seed: u64,
    #[serde(default)]
    pub dc_bias: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub distance_m: f64,
    /// `distance_m` is the two-way path when true, the physical range when
    /// false.
    #[serde(default = "yes")]
    pub roundtrip: bool,
    #[serde(default = "unit")]
    pub attenuation: f64,
    #[serde(default)]
    pub velocity_mps: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Semianalytic,
    Sampled,
}

fn default_trials() -> usize {
    100
}

fn default_carrier() -> f64 {
    DEFAULT_CARRIER_HZ
}

fn yes() -> bool {
    true
}

fn unit() -> f64 {
    1.0
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.plan()?;
        self.scene()?;
        if let Some(fs) = self.fs_hz {
            if !(fs > 0.0 && fs.is_finite()) {
                return Err(CliError::Schema(format!("fs_hz: must be positive, got {fs}")));
            }
        }
        if !(self.delay_offset_m >= 0.0 && self.delay_offset_m.is_finite()) {
            return Err(CliError::Schema(format!(
                "delay_offset_m: must be non-negative, got {}",
                self.delay_offset_m
            )));
        }
        if let Some(points) = &self.spectrum_points {
            if let Some(&m) = points.iter().find(|&&m| m >= self.plan.points) {
                return Err(CliError::Schema(format!(
                    "spectrum_points: index {m} outside 0..{}",
                    self.plan.points
                )));
            }
        }
        Ok(())
    }

    pub fn plan(&self) -> Result<SweepPlan, CliError> {
        let p = &self.plan;
        let schema = |e: cohradar_core::Error| CliError::Schema(format!("plan: {e}"));
        let plan = match (p.tau0_s, p.delta_tau_s, p.l0_m, p.span_m) {
            (Some(t0), Some(dt), None, None) => SweepPlan::new(t0, dt, p.points, p.pulses),
            (None, None, Some(l0), Some(span)) => SweepPlan::from_lengths(l0, span, p.points, p.pulses),
            _ => {
                return Err(CliError::Schema(
                    "plan: give either tau0_s and delta_tau_s, or l0_m and span_m".into(),
                ))
            }
        }
        .map_err(schema)?;
        Ok(plan.with_carrier(p.carrier_hz).map_err(schema)?.with_seed(p.seed))
    }

    pub fn scene(&self) -> Result<Scene, CliError> {
        let s = &self.scene;
        let snr = match (s.snr_db, s.snr_linear) {
            (None, None) => Snr::Noiseless,
            (Some(db), None) => Snr::from_db(db).map_err(|e| CliError::Schema(format!("scene.snr_db: {e}")))?,
            (None, Some(lin)) => Snr::linear(lin).map_err(|e| CliError::Schema(format!("scene.snr_linear: {e}")))?,
            (Some(_), Some(_)) => {
                return Err(CliError::Schema("scene: give at most one of snr_db and snr_linear".into()))
            }
        };
        let targets = s
            .targets
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let l = if t.roundtrip { t.distance_m } else { 2.0 * t.distance_m };
                Target::new(l, t.attenuation, t.velocity_mps)
                    .map_err(|e| CliError::Schema(format!("scene.targets[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if !s.dc_bias.is_finite() {
            return Err(CliError::Schema("scene.dc_bias: must be finite".into()));
        }
        Ok(Scene::new(targets, snr).with_noise_seed(s.noise_seed).with_dc_bias(s.dc_bias))
    }

    pub fn fs(&self) -> f64 {
        self.fs_hz.unwrap_or(8.0 * self.plan.carrier_hz)
    }

    pub fn mode(&self) -> Mode {
        match self.mode {
            ModeName::Semianalytic => Mode::SemiAnalytic,
            ModeName::Sampled => Mode::Sampled { fs: self.fs() },
        }
    }

    /// Applies command-line overrides. `--seed` reseeds both the phase and
    /// the noise stream.
    pub fn apply_overrides(&mut self, seed: Option<u64>, mode: Option<ModeName>, trials: Option<usize>) {
        if let Some(s) = seed {
            self.plan.seed = s;
            self.scene.noise_seed = s;
        }
        if let Some(m) = mode {
            self.mode = m;
        }
        if let Some(t) = trials {
            self.trials = t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"plan": {"l0_m": 22, "span_m": 5, "points": 10, "pulses": 100}}"#;

    #[test]
    fn defaults() {
        let cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.mode, ModeName::Semianalytic);
        assert_eq!(cfg.plan.carrier_hz, DEFAULT_CARRIER_HZ);
        assert_eq!(cfg.scene().unwrap().snr, Snr::Noiseless);
        assert!(cfg.double_frequency);
        assert_eq!(cfg.fs(), 8.0 * DEFAULT_CARRIER_HZ);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = r#"{"plan": {"l0_m": 22, "span_m": 5, "points": 10, "pulses": 100, "colour": 1}}"#;
        match ScenarioConfig::parse(text) {
            Err(CliError::Schema(msg)) => assert!(msg.contains("colour"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn physical_range_is_doubled() {
        let text = r#"{"plan": {"l0_m": 22, "span_m": 5, "points": 10, "pulses": 100},
            "scene": {"targets": [{"distance_m": 12.5, "roundtrip": false}, {"distance_m": 25}]}}"#;
        let scene = ScenarioConfig::parse(text).unwrap().scene().unwrap();
        assert_eq!(scene.targets[0].roundtrip_length(), 25.0);
        assert_eq!(scene.targets[1].roundtrip_length(), 25.0);
    }

    #[test]
    fn plan_forms_are_exclusive() {
        let text = r#"{"plan": {"l0_m": 22, "span_m": 5, "tau0_s": 1e-7, "points": 10, "pulses": 100}}"#;
        assert!(matches!(ScenarioConfig::parse(text), Err(CliError::Schema(_))));
        let text = r#"{"plan": {"l0_m": 22, "points": 10, "pulses": 100}}"#;
        assert!(matches!(ScenarioConfig::parse(text), Err(CliError::Schema(_))));
    }

    #[test]
    fn invalid_values() {
        for text in [
            r#"{"plan": {"l0_m": 22, "span_m": 5, "points": 0, "pulses": 100}}"#,
            r#"{"plan": {"l0_m": 22, "span_m": 5, "points": 4, "pulses": 100}, "scene": {"snr_db": 30, "snr_linear": 1000}}"#,
            r#"{"plan": {"l0_m": 22, "span_m": 5, "points": 4, "pulses": 100}, "scene": {"targets": [{"distance_m": -1}]}}"#,
            r#"{"plan": {"l0_m": 22, "span_m": 5, "points": 4, "pulses": 100}, "mode": "fast"}"#,
            r#"{"plan": {"l0_m": 22, "span_m": 5, "points": 4, "pulses": 100}, "spectrum_points": [4]}"#,
        ] {
            assert!(matches!(ScenarioConfig::parse(text), Err(CliError::Schema(_))), "{text}");
        }
    }

    #[test]
    fn seed_override_hits_both_streams() {
        let mut cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        cfg.apply_overrides(Some(9), Some(ModeName::Sampled), Some(3));
        assert_eq!((cfg.plan.seed, cfg.scene.noise_seed, cfg.trials), (9, 9, 3));
        assert_eq!(cfg.mode(), Mode::Sampled { fs: 8.0 * DEFAULT_CARRIER_HZ });
    }
}
