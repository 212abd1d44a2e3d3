//! Coincidence counting: detector model, Monte-Carlo scan simulation with
//! Poissonian statistics and accidentals, accidental correction, fringe
//! fitting, visibility extraction and the entanglement witness.
//!
//! Simulation is deterministic: every sweep point draws from its own RNG
//! stream derived from (seed, point index), so records are reproducible
//! byte-for-byte regardless of how the sweep is split across threads.

mod fit;
mod table;
mod witness;

pub use fit::{fit_fringe, fit_fringe_free_period, FreePeriodFit, FringeFit};
pub use table::{ArmKind, CountTable};
pub use witness::{
    separable_bound, separable_bound_oracle, separable_witness_value, visibility_from_projections,
    witness, witness_from_projection_table, BoundSearch, Verdict, VisEstimate, WitnessResult,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::exec;
use crate::mask::{
    coincidence_probability_with_visibility, hybrid_coincidence_probability_with_visibility,
    malus_operator, marginal_expectation, mask_operator, SlitMask,
};
use crate::state::{Arm, ArmBasis, TwoPhotonState};

/// Source, arm and timing parameters of the pair detection chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    /// Generated pairs per second at the source.
    pub pair_rate: f64,
    pub efficiency_a: f64,
    pub efficiency_b: f64,
    /// Dark counts per second per arm.
    pub dark_rate_a: f64,
    pub dark_rate_b: f64,
    /// Effective coincidence window in seconds.
    pub coincidence_window: f64,
}

impl DetectorSpec {
    pub fn new(
        pair_rate: f64,
        efficiency_a: f64,
        efficiency_b: f64,
        dark_rate_a: f64,
        dark_rate_b: f64,
        coincidence_window: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("detectors.pair_rate", pair_rate),
            ("detectors.dark_rate_a", dark_rate_a),
            ("detectors.dark_rate_b", dark_rate_b),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("detectors.efficiency_a", efficiency_a),
            ("detectors.efficiency_b", efficiency_b),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must be in [0, 1], got {v}")));
            }
        }
        if !coincidence_window.is_finite() || coincidence_window <= 0.0 {
            return Err(Error::invalid("detectors.window_s", "must be positive"));
        }
        Ok(Self {
            pair_rate,
            efficiency_a,
            efficiency_b,
            dark_rate_a,
            dark_rate_b,
            coincidence_window,
        })
    }
}

/// True coincidence rate: pair rate times both arm efficiencies times the
/// joint transmitted probability.
pub fn true_coincidence_rate(det: &DetectorSpec, joint_probability: f64) -> f64 {
    det.pair_rate * det.efficiency_a * det.efficiency_b * joint_probability
}

/// Expected accidental coincidence rate: the product of the timing window
/// and the singles rates at the two detectors.
pub fn accidental_rate(singles_a: f64, singles_b: f64, window_s: f64) -> f64 {
    window_s * singles_a * singles_b
}

/// Analyzer arrangement behind the two transfer setups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arrangement {
    /// One slit mask per arm; both arms OAM-encoded.
    MaskMask { mask_a: SlitMask, mask_b: SlitMask },
    /// Rotating polarizer on the polarization arm, slit mask on the OAM arm.
    PolarizerMask { mask: SlitMask },
}

/// A fully specified coincidence measurement: the prepared state, the
/// analyzers, and the residual source visibility applied to the pair
/// coherence.
#[derive(Debug, Clone)]
pub struct CoincidenceModel {
    state: TwoPhotonState,
    arrangement: Arrangement,
    source_visibility: f64,
}

impl CoincidenceModel {
    pub fn new(
        state: TwoPhotonState,
        arrangement: Arrangement,
        source_visibility: f64,
    ) -> Result<Self> {
        if !(source_visibility > 0.0 && source_visibility <= 1.0) {
            return Err(Error::invalid(
                "source_visibility",
                format!("must be in (0, 1], got {source_visibility}"),
            ));
        }
        let model = Self {
            state,
            arrangement,
            source_visibility,
        };
        // Surface arm/analyzer mismatches at construction.
        model.probability(0.0, 0.0)?;
        Ok(model)
    }

    pub fn state(&self) -> &TwoPhotonState {
        &self.state
    }

    pub fn arrangement(&self) -> &Arrangement {
        &self.arrangement
    }

    pub fn source_visibility(&self) -> f64 {
        self.source_visibility
    }

    /// Per-arm analyzer labels in (arm A, arm B) order.
    pub fn arm_kinds(&self) -> (ArmKind, ArmKind) {
        match self.arrangement {
            Arrangement::MaskMask { mask_a, mask_b } => (
                ArmKind::Mask { l: mask_a.l() },
                ArmKind::Mask { l: mask_b.l() },
            ),
            Arrangement::PolarizerMask { mask } => {
                if self.state.arm_a().is_polarization() {
                    (ArmKind::Polarizer, ArmKind::Mask { l: mask.l() })
                } else {
                    (ArmKind::Mask { l: mask.l() }, ArmKind::Polarizer)
                }
            }
        }
    }

    /// Joint transmitted probability with analyzers at the given angles
    /// (degrees). `angle_a` always refers to arm A's analyzer, mask or
    /// polarizer.
    pub fn probability(&self, angle_a_deg: f64, angle_b_deg: f64) -> Result<f64> {
        match self.arrangement {
            Arrangement::MaskMask { mask_a, mask_b } => coincidence_probability_with_visibility(
                &self.state,
                &mask_a.at_orientation(angle_a_deg),
                &mask_b.at_orientation(angle_b_deg),
                self.source_visibility,
            ),
            Arrangement::PolarizerMask { mask } => {
                let (theta, gamma) = if self.state.arm_a().is_polarization() {
                    (angle_a_deg, angle_b_deg)
                } else {
                    (angle_b_deg, angle_a_deg)
                };
                hybrid_coincidence_probability_with_visibility(
                    &self.state,
                    theta,
                    &mask.at_orientation(gamma),
                    self.source_visibility,
                )
            }
        }
    }

    /// Singles rates (arm A, arm B) including darks: pair rate times arm
    /// efficiency times the marginal analyzer transmission, plus dark rate.
    pub fn singles_rates(
        &self,
        det: &DetectorSpec,
        angle_a_deg: f64,
        angle_b_deg: f64,
    ) -> Result<(f64, f64)> {
        let (op_a, op_b) = match self.arrangement {
            Arrangement::MaskMask { mask_a, mask_b } => (
                mask_operator(&mask_a.at_orientation(angle_a_deg)),
                mask_operator(&mask_b.at_orientation(angle_b_deg)),
            ),
            Arrangement::PolarizerMask { mask } => {
                if self.state.arm_a().is_polarization() {
                    (
                        malus_operator(angle_a_deg),
                        mask_operator(&mask.at_orientation(angle_b_deg)),
                    )
                } else {
                    (
                        mask_operator(&mask.at_orientation(angle_a_deg)),
                        malus_operator(angle_b_deg),
                    )
                }
            }
        };
        let ta = marginal_expectation(&self.state, &op_a, Arm::A);
        let tb = marginal_expectation(&self.state, &op_b, Arm::B);
        Ok((
            det.pair_rate * det.efficiency_a * ta + det.dark_rate_a,
            det.pair_rate * det.efficiency_b * tb + det.dark_rate_b,
        ))
    }

    /// Detected coincidence rate: true coincidences plus accidentals.
    pub fn detected_rate(
        &self,
        det: &DetectorSpec,
        angle_a_deg: f64,
        angle_b_deg: f64,
    ) -> Result<f64> {
        let p = self.probability(angle_a_deg, angle_b_deg)?;
        let (sa, sb) = self.singles_rates(det, angle_a_deg, angle_b_deg)?;
        Ok(true_coincidence_rate(det, p) + accidental_rate(sa, sb, det.coincidence_window))
    }

    pub fn oam_arm_basis(&self) -> Option<ArmBasis> {
        [self.state.arm_a(), self.state.arm_b()]
            .into_iter()
            .find(|b| !b.is_polarization())
    }
}

/// Which analyzer angle a sweep rotates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    A,
    B,
}

/// Angular sweep: `steps` points from `start_deg` to `stop_deg` inclusive on
/// the chosen axis, the other analyzer fixed at `fixed_deg`.
#[derive(Debug, Clone, Copy)]
pub struct SweepSpec {
    pub axis: Axis,
    pub start_deg: f64,
    pub stop_deg: f64,
    pub steps: usize,
    pub integration_s: f64,
    pub fixed_deg: f64,
}

impl SweepSpec {
    pub fn angles(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start_deg];
        }
        let step = (self.stop_deg - self.start_deg) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| self.start_deg + step * k as f64)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::invalid("sweep.steps", "must be >= 1"));
        }
        if self.steps > 1 && self.stop_deg == self.start_deg {
            return Err(Error::invalid(
                "sweep",
                "stop must differ from start for steps > 1",
            ));
        }
        if !self.integration_s.is_finite() || self.integration_s <= 0.0 {
            return Err(Error::invalid("sweep.integration_s", "must be positive"));
        }
        Ok(())
    }
}

/// One coincidence measurement row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRecord {
    pub angle_a_deg: f64,
    pub angle_b_deg: f64,
    pub integration_s: f64,
    /// Raw (or accidental-corrected) coincidence counts.
    pub coincidences: f64,
    pub singles_a: Option<f64>,
    pub singles_b: Option<f64>,
    pub corrected: bool,
}

impl ScanRecord {
    pub fn coincidence_rate(&self) -> f64 {
        self.coincidences / self.integration_s
    }
}

fn sample_poisson(rng: &mut ChaCha8Rng, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    Poisson::new(lambda)
        .expect("positive finite lambda")
        .sample(rng)
}

/// RNG stream for one sweep point: same seed, per-point stream index.
fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Simulate a sweep. Per point, coincidences are drawn from
/// Poisson(integration * (true + accidental rate)) and singles from their
/// own Poisson rates. Identical (model, det, sweep, seed) inputs reproduce
/// identical records.
pub fn simulate_scan(
    model: &CoincidenceModel,
    det: &DetectorSpec,
    sweep: &SweepSpec,
    seed: u64,
) -> Result<Vec<ScanRecord>> {
    sweep.validate()?;
    let angles = sweep.angles();
    // Surface analyzer/arm mismatches before spawning the sweep.
    let probe = angles.first().copied().unwrap_or(0.0);
    let _ = match sweep.axis {
        Axis::A => model.detected_rate(det, probe, sweep.fixed_deg)?,
        Axis::B => model.detected_rate(det, sweep.fixed_deg, probe)?,
    };
    let t = sweep.integration_s;
    let records = exec::map_indexed(angles.len(), |k| {
        let (a, b) = match sweep.axis {
            Axis::A => (angles[k], sweep.fixed_deg),
            Axis::B => (sweep.fixed_deg, angles[k]),
        };
        let p = model.probability(a, b).expect("validated above");
        let (sa, sb) = model.singles_rates(det, a, b).expect("validated above");
        let rate = true_coincidence_rate(det, p) + accidental_rate(sa, sb, det.coincidence_window);
        let mut rng = point_rng(seed, k);
        let coincidences = sample_poisson(&mut rng, t * rate);
        let singles_a = sample_poisson(&mut rng, t * sa);
        let singles_b = sample_poisson(&mut rng, t * sb);
        ScanRecord {
            angle_a_deg: a,
            angle_b_deg: b,
            integration_s: t,
            coincidences,
            singles_a: Some(singles_a),
            singles_b: Some(singles_b),
            corrected: false,
        }
    });
    Ok(records)
}

/// Subtract the expected accidentals window * singles_a * singles_b /
/// integration from each record, flooring at zero and setting the corrected
/// flag. Records must carry singles counts.
pub fn correct_accidentals(records: &[ScanRecord], window_s: f64) -> Result<Vec<ScanRecord>> {
    records
        .iter()
        .enumerate()
        .map(|(index, r)| {
            let (sa, sb) = match (r.singles_a, r.singles_b) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::MissingSingles { index }),
            };
            let expected_accidentals = window_s * sa * sb / r.integration_s;
            Ok(ScanRecord {
                coincidences: (r.coincidences - expected_accidentals).max(0.0),
                corrected: true,
                ..*r
            })
        })
        .collect()
}
