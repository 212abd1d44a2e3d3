//! Experiment configuration: a sectioned TOML document whose defaults mirror
//! the reference setup (1.3e6 pairs/s, 1.4 ns window, full-HD 8 um panel,
//! source visibility 0.9799, per-order mask ratios 1/7.1, 1/5.7, 1/6.9).
//! Unknown keys are rejected; every physical parameter is range-checked with
//! a field-path message. Angles in the file are degrees.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::counts::{Arrangement, Axis, CoincidenceModel, DetectorSpec, SweepSpec};
use crate::error::{Error, Result};
use crate::mask::SlitMask;
use crate::slm::SlmSpec;
use crate::state::{make_entangled, transfer_arm, Arm, TwoPhotonState};

/// What one arm is transferred to: an OAM order, or kept in polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmTransfer {
    Oam(u32),
    Polarization,
}

impl ArmTransfer {
    pub fn oam_order(&self) -> Option<u32> {
        match self {
            ArmTransfer::Oam(l) => Some(*l),
            ArmTransfer::Polarization => None,
        }
    }
}

impl Serialize for ArmTransfer {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ArmTransfer::Oam(l) => s.serialize_u32(*l),
            ArmTransfer::Polarization => s.serialize_str("pol"),
        }
    }
}

impl<'de> Deserialize<'de> for ArmTransfer {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(l) if l >= 1 && l <= u32::MAX as i64 => Ok(ArmTransfer::Oam(l as u32)),
            Raw::Int(l) => Err(serde::de::Error::custom(format!(
                "OAM order must be a positive integer, got {l}"
            ))),
            Raw::Text(t) if t == "pol" || t == "polarization" => Ok(ArmTransfer::Polarization),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected an OAM order or \"pol\", got \"{t}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Pair phase, radians.
    pub phi: f64,
    pub source_visibility: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            alpha: std::f64::consts::FRAC_1_SQRT_2,
            beta: std::f64::consts::FRAC_1_SQRT_2,
            phi: 0.0,
            source_visibility: 0.9799,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferConfig {
    pub l_a: ArmTransfer,
    pub l_b: ArmTransfer,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            l_a: ArmTransfer::Oam(100),
            l_b: ArmTransfer::Oam(100),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlmConfig {
    pub width_px: usize,
    pub height_px: usize,
    /// Meters.
    pub pixel_pitch: f64,
    /// Beam waist in meters; omitted = per-order default placing the mode
    /// ring at 80% of the shortest half-dimension.
    pub waist: Option<f64>,
    pub oversample: usize,
}

impl Default for SlmConfig {
    fn default() -> Self {
        Self {
            width_px: 1920,
            height_px: 1080,
            pixel_pitch: 8e-6,
            waist: None,
            oversample: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MaskConfig {
    /// Slit width over slit period; omitted = per-order default.
    pub r_a: Option<f64>,
    pub r_b: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub pair_rate: f64,
    pub efficiency_a: f64,
    pub efficiency_b: f64,
    pub dark_rate_a: f64,
    pub dark_rate_b: f64,
    /// Coincidence window, seconds.
    pub window_s: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            pair_rate: 1.3e6,
            efficiency_a: 0.1,
            efficiency_b: 0.1,
            dark_rate_a: 100.0,
            dark_rate_b: 100.0,
            window_s: 1.4e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Which analyzer rotates: "a" or "b".
    pub axis: String,
    pub start_deg: f64,
    pub stop_deg: f64,
    pub steps: usize,
    pub integration_s: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: "b".into(),
            start_deg: 0.0,
            stop_deg: 3.6,
            steps: 73,
            integration_s: 30.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub source: SourceConfig,
    pub transfer: TransferConfig,
    pub slm: SlmConfig,
    pub masks: MaskConfig,
    pub detectors: DetectorConfig,
    pub sweep: SweepConfig,
}

/// Slit-width ratio used for a given mask order in the reference setup.
pub fn default_mask_ratio(l: u32) -> f64 {
    match l {
        10 => 1.0 / 7.1,
        100 => 1.0 / 5.7,
        300 => 1.0 / 6.9,
        _ => 1.0 / 7.1,
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.source;
        for (name, v) in [("source.alpha", s.alpha), ("source.beta", s.beta)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must be in [0, 1], got {v}")));
            }
        }
        let norm = s.alpha * s.alpha + s.beta * s.beta;
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "source.alpha/beta",
                format!("alpha^2 + beta^2 must be 1, got {norm}"),
            ));
        }
        if !(s.source_visibility > 0.0 && s.source_visibility <= 1.0) {
            return Err(Error::invalid(
                "source.source_visibility",
                "must be in (0, 1]",
            ));
        }
        if self.transfer.l_a == ArmTransfer::Polarization
            && self.transfer.l_b == ArmTransfer::Polarization
        {
            return Err(Error::invalid(
                "transfer",
                "at least one arm must carry OAM",
            ));
        }
        // Range checks via the owning constructors.
        self.slm_spec()?;
        if let Some(w) = self.slm.waist {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::invalid("slm.waist", "must be positive"));
            }
        }
        if self.slm.oversample < 1 {
            return Err(Error::invalid("slm.oversample", "must be >= 1"));
        }
        for (name, r) in [("masks.r_a", self.masks.r_a), ("masks.r_b", self.masks.r_b)] {
            if let Some(r) = r {
                if !(r > 0.0 && r <= 1.0) {
                    return Err(Error::invalid(name, format!("must be in (0, 1], got {r}")));
                }
            }
        }
        self.detector_spec()?;
        if self.sweep.axis != "a" && self.sweep.axis != "b" {
            return Err(Error::invalid("sweep.axis", "must be \"a\" or \"b\""));
        }
        if self.sweep.steps == 0 {
            return Err(Error::invalid("sweep.steps", "must be >= 1"));
        }
        if !self.sweep.integration_s.is_finite() || self.sweep.integration_s <= 0.0 {
            return Err(Error::invalid("sweep.integration_s", "must be positive"));
        }
        Ok(())
    }

    pub fn slm_spec(&self) -> Result<SlmSpec> {
        SlmSpec::new(self.slm.width_px, self.slm.height_px, self.slm.pixel_pitch)
    }

    pub fn detector_spec(&self) -> Result<DetectorSpec> {
        DetectorSpec::new(
            self.detectors.pair_rate,
            self.detectors.efficiency_a,
            self.detectors.efficiency_b,
            self.detectors.dark_rate_a,
            self.detectors.dark_rate_b,
            self.detectors.window_s,
        )
    }

    /// Beam waist for order l: the configured value, or the per-order rule.
    pub fn waist_for(&self, l: u32) -> Result<f64> {
        match self.slm.waist {
            Some(w) => Ok(w),
            None => Ok(crate::slm::default_waist(&self.slm_spec()?, l)),
        }
    }

    /// The prepared two-photon state after the configured transfers.
    pub fn state(&self) -> Result<TwoPhotonState> {
        let mut state = make_entangled(self.source.alpha, self.source.beta, self.source.phi)?;
        if let ArmTransfer::Oam(l) = self.transfer.l_a {
            state = transfer_arm(&state, Arm::A, l)?;
        }
        if let ArmTransfer::Oam(l) = self.transfer.l_b {
            state = transfer_arm(&state, Arm::B, l)?;
        }
        Ok(state)
    }

    /// The analyzer arrangement implied by the transfer section.
    pub fn arrangement(&self) -> Result<Arrangement> {
        match (self.transfer.l_a, self.transfer.l_b) {
            (ArmTransfer::Oam(la), ArmTransfer::Oam(lb)) => {
                let mask_a =
                    SlitMask::new(la, self.masks.r_a.unwrap_or(default_mask_ratio(la)), 0.0)?;
                let mask_b =
                    SlitMask::new(lb, self.masks.r_b.unwrap_or(default_mask_ratio(lb)), 0.0)?;
                Ok(Arrangement::MaskMask { mask_a, mask_b })
            }
            (ArmTransfer::Polarization, ArmTransfer::Oam(l)) => {
                let mask = SlitMask::new(l, self.masks.r_b.unwrap_or(default_mask_ratio(l)), 0.0)?;
                Ok(Arrangement::PolarizerMask { mask })
            }
            (ArmTransfer::Oam(l), ArmTransfer::Polarization) => {
                let mask = SlitMask::new(l, self.masks.r_a.unwrap_or(default_mask_ratio(l)), 0.0)?;
                Ok(Arrangement::PolarizerMask { mask })
            }
            (ArmTransfer::Polarization, ArmTransfer::Polarization) => Err(Error::invalid(
                "transfer",
                "at least one arm must carry OAM",
            )),
        }
    }

    pub fn model(&self) -> Result<CoincidenceModel> {
        CoincidenceModel::new(
            self.state()?,
            self.arrangement()?,
            self.source.source_visibility,
        )
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        Ok(SweepSpec {
            axis: if self.sweep.axis == "a" {
                Axis::A
            } else {
                Axis::B
            },
            start_deg: self.sweep.start_deg,
            stop_deg: self.sweep.stop_deg,
            steps: self.sweep.steps,
            integration_s: self.sweep.integration_s,
            fixed_deg: 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_reference_setup() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.detectors.pair_rate, 1.3e6);
        assert_eq!(cfg.detectors.window_s, 1.4e-9);
        assert_eq!(cfg.source.source_visibility, 0.9799);
        assert_eq!((cfg.slm.width_px, cfg.slm.height_px), (1920, 1080));
        assert_eq!(cfg.slm.pixel_pitch, 8e-6);
        assert!((default_mask_ratio(10) - 1.0 / 7.1).abs() < 1e-15);
        assert!((default_mask_ratio(100) - 1.0 / 5.7).abs() < 1e-15);
        assert!((default_mask_ratio(300) - 1.0 / 6.9).abs() < 1e-15);
        // Defaults build a working model.
        cfg.model().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back.detectors.pair_rate, cfg.detectors.pair_rate);
        assert_eq!(back.transfer.l_a, cfg.transfer.l_a);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_toml("[source]\nalfa = 0.5\n").unwrap_err();
        match err {
            Error::Config(msg) => assert!(msg.contains("alfa"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_parameters_name_their_field() {
        let err = ExperimentConfig::from_toml("[detectors]\npair_rate = -5.0\n").unwrap_err();
        assert!(err.to_string().contains("pair_rate"), "{err}");

        let err = ExperimentConfig::from_toml("[source]\nalpha = 0.9\nbeta = 0.9\n").unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");

        let err = ExperimentConfig::from_toml("[masks]\nr_a = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("r_a"), "{err}");
    }

    #[test]
    fn transfer_parsing() {
        let cfg = ExperimentConfig::from_toml("[transfer]\nl_a = \"pol\"\nl_b = 300\n").unwrap();
        assert_eq!(cfg.transfer.l_a, ArmTransfer::Polarization);
        assert_eq!(cfg.transfer.l_b, ArmTransfer::Oam(300));
        assert!(matches!(
            cfg.arrangement().unwrap(),
            Arrangement::PolarizerMask { .. }
        ));

        assert!(ExperimentConfig::from_toml("[transfer]\nl_a = 0\n").is_err());
        assert!(ExperimentConfig::from_toml("[transfer]\nl_a = \"pol\"\nl_b = \"pol\"\n").is_err());
    }

    #[test]
    fn hybrid_state_matches_transfer() {
        let cfg = ExperimentConfig::from_toml("[transfer]\nl_a = \"pol\"\nl_b = 300\n").unwrap();
        let state = cfg.state().unwrap();
        assert!(state.arm_a().is_polarization());
        assert_eq!(state.arm_b().oam_order(), Some(300));
    }

    #[test]
    fn default_waist_rule() {
        let cfg = ExperimentConfig::default();
        let spec = cfg.slm_spec().unwrap();
        let w = cfg.waist_for(100).unwrap();
        // Ring of the order-100 mode at 80% of the short half-dimension.
        let ring = w * (100.0f64 / 2.0).sqrt();
        assert!((ring - 0.8 * spec.min_half_extent()).abs() < 1e-12);
        let explicit = ExperimentConfig {
            slm: SlmConfig {
                waist: Some(5e-4),
                ..cfg.slm.clone()
            },
            ..cfg
        };
        assert_eq!(explicit.waist_for(100).unwrap(), 5e-4);
    }
}
