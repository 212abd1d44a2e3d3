//! The 2l-slit mask analyzer.
//!
//! A mask with 2l slits at orientation gamma acts on the (+l, -l) subspace as
//! the slit-averaged transmission operator
//!
//! ```text
//! K(gamma) = (r/2) [ 1                   s(r) e^{-i 2 l gamma} ]
//!                  [ s(r) e^{+i 2 l gamma}                   1 ]
//! ```
//!
//! with open fraction r and fringe factor s(r) = sin(pi r)/(pi r): averaging
//! the cos^2 petal profile over a finite slit scales the interference term by
//! s(r) while the flat term keeps the open fraction. The operator is
//! normalized so that a transmission value averages to r/2 over one period of
//! gamma (a fully open mask reads 1/2); all observables used downstream are
//! ratios, so only relative scale matters. Joint probabilities contract the
//! state with one such operator per arm (a Malus projector for a polarization
//! arm).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{mask_angle_to_phase, ArmBasis, TwoPhotonState};

/// Angular transmission mask with slit count 2l.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitMask {
    l: u32,
    width_ratio: f64,
    orientation_deg: f64,
}

impl SlitMask {
    /// `width_ratio` is slit width over slit period, in (0, 1].
    pub fn new(l: u32, width_ratio: f64, orientation_deg: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::invalid("mask.l", "slit order must be >= 1"));
        }
        if !(width_ratio > 0.0 && width_ratio <= 1.0) {
            return Err(Error::invalid(
                "mask.width_ratio",
                format!("must be in (0, 1], got {width_ratio}"),
            ));
        }
        if !orientation_deg.is_finite() {
            return Err(Error::invalid("mask.orientation_deg", "must be finite"));
        }
        Ok(Self {
            l,
            width_ratio,
            orientation_deg,
        })
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn slit_count(&self) -> u32 {
        2 * self.l
    }

    pub fn width_ratio(&self) -> f64 {
        self.width_ratio
    }

    pub fn orientation_deg(&self) -> f64 {
        self.orientation_deg
    }

    /// Angular slit period, 360 / (2l) degrees.
    pub fn period_deg(&self) -> f64 {
        360.0 / f64::from(2 * self.l)
    }

    /// Same mask rotated to a new orientation.
    pub fn at_orientation(&self, orientation_deg: f64) -> SlitMask {
        SlitMask {
            orientation_deg,
            ..*self
        }
    }
}

/// Geometric indicator: is the mask open at azimuth theta (degrees)?
///
/// Slit windows of width `r * period` are centered on the orientation angle
/// and repeat with the slit period.
pub fn is_open(mask: &SlitMask, theta_deg: f64) -> bool {
    let period = mask.period_deg();
    let x = (theta_deg - mask.orientation_deg).rem_euclid(period);
    let half_width = mask.width_ratio * period / 2.0;
    x <= half_width || x >= period - half_width
}

/// Fringe-visibility multiplier from averaging the petal profile over a slit
/// of relative width r: sin(pi r) / (pi r).
pub fn visibility_factor(r: f64) -> f64 {
    assert!(r > 0.0 && r <= 1.0, "width ratio must be in (0, 1]");
    let x = std::f64::consts::PI * r;
    x.sin() / x
}

/// Slit-averaged transmission of the superposition with phase phi through a
/// matching mask: T = (r/2) [1 + s(r) cos(2 l gamma - phi)].
pub fn transmission_probability(mask: &SlitMask, l: u32, phi: f64) -> Result<f64> {
    if mask.l != l {
        return Err(Error::SymmetryMismatch {
            mask_l: mask.l,
            mode_l: l,
        });
    }
    let r = mask.width_ratio;
    let arg = mask_angle_to_phase(mask.orientation_deg, l) - phi;
    Ok((r / 2.0) * (1.0 + visibility_factor(r) * arg.cos()))
}

// --- 2x2 complex operator plumbing -------------------------------------

type Mat2 = [[Complex64; 2]; 2];

fn transmission_operator(mask: &SlitMask) -> Mat2 {
    let r = mask.width_ratio;
    let s = visibility_factor(r);
    let phase = mask_angle_to_phase(mask.orientation_deg, mask.l);
    let half = r / 2.0;
    let one = Complex64::new(half, 0.0);
    let off = Complex64::from_polar(half * s, phase);
    [[one, off.conj()], [off, one]]
}

fn polarizer_operator(theta_rad: f64) -> Mat2 {
    let (s, c) = theta_rad.sin_cos();
    let cc = Complex64::new(c * c, 0.0);
    let ss = Complex64::new(s * s, 0.0);
    let cs = Complex64::new(c * s, 0.0);
    [[cc, cs], [cs, ss]]
}

/// <psi| op_a (x) op_b |psi> for Hermitian per-arm operators.
fn joint_expectation(state: &TwoPhotonState, op_a: &Mat2, op_b: &Mat2) -> f64 {
    let m = state.amplitude_matrix();
    let mut p = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for k in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    p += m[i][j].conj() * op_a[i][k] * op_b[j][l] * m[k][l];
                }
            }
        }
    }
    debug_assert!(p.im.abs() < 1e-12);
    p.re.max(0.0)
}

/// Expectation with all joint coherences removed (diagonal density only).
fn diagonal_expectation(state: &TwoPhotonState, op_a: &Mat2, op_b: &Mat2) -> f64 {
    let m = state.amplitude_matrix();
    let mut p = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            p += m[i][j].norm_sqr() * op_a[i][i].re * op_b[j][j].re;
        }
    }
    p.max(0.0)
}

fn check_oam_arm(basis: ArmBasis, mask: &SlitMask, arm_name: &str) -> Result<()> {
    match basis {
        ArmBasis::Oam { l } if l == mask.l => Ok(()),
        ArmBasis::Oam { l } => Err(Error::SymmetryMismatch {
            mask_l: mask.l,
            mode_l: l,
        }),
        ArmBasis::Polarization => Err(Error::AnalyzerMismatch(format!(
            "arm {arm_name} is polarization-encoded but a slit mask was applied"
        ))),
    }
}

/// Joint transmitted probability through one mask per arm. Both arms must be
/// OAM-encoded with l matching the respective mask.
///
/// For the symmetric maximally entangled state this reduces to
/// (r_a r_b / 4) [1 + s(r_a) s(r_b) cos(2 l (gamma_a - gamma_b) - phi)].
pub fn coincidence_probability(
    state: &TwoPhotonState,
    mask_a: &SlitMask,
    mask_b: &SlitMask,
) -> Result<f64> {
    check_oam_arm(state.arm_a(), mask_a, "A")?;
    check_oam_arm(state.arm_b(), mask_b, "B")?;
    Ok(joint_expectation(
        state,
        &transmission_operator(mask_a),
        &transmission_operator(mask_b),
    ))
}

/// Joint probability with the pair coherence scaled by the source visibility
/// (imperfect polarization entanglement carried through the transfer).
pub fn coincidence_probability_with_visibility(
    state: &TwoPhotonState,
    mask_a: &SlitMask,
    mask_b: &SlitMask,
    source_visibility: f64,
) -> Result<f64> {
    check_source_visibility(source_visibility)?;
    check_oam_arm(state.arm_a(), mask_a, "A")?;
    check_oam_arm(state.arm_b(), mask_b, "B")?;
    let op_a = transmission_operator(mask_a);
    let op_b = transmission_operator(mask_b);
    Ok(mix(state, &op_a, &op_b, source_visibility))
}

/// Joint probability for hybrid polarization-OAM states: Malus projector at
/// `theta_deg` on the polarization arm, slit mask on the OAM arm (either arm
/// order).
pub fn hybrid_coincidence_probability(
    state: &TwoPhotonState,
    polarizer_theta_deg: f64,
    mask: &SlitMask,
) -> Result<f64> {
    let (op_a, op_b) = hybrid_operators(state, polarizer_theta_deg, mask)?;
    Ok(joint_expectation(state, &op_a, &op_b))
}

/// [`hybrid_coincidence_probability`] with source-visibility dephasing.
pub fn hybrid_coincidence_probability_with_visibility(
    state: &TwoPhotonState,
    polarizer_theta_deg: f64,
    mask: &SlitMask,
    source_visibility: f64,
) -> Result<f64> {
    check_source_visibility(source_visibility)?;
    let (op_a, op_b) = hybrid_operators(state, polarizer_theta_deg, mask)?;
    Ok(mix(state, &op_a, &op_b, source_visibility))
}

fn hybrid_operators(
    state: &TwoPhotonState,
    polarizer_theta_deg: f64,
    mask: &SlitMask,
) -> Result<(Mat2, Mat2)> {
    let theta = polarizer_theta_deg.to_radians();
    match (state.arm_a(), state.arm_b()) {
        (ArmBasis::Polarization, ArmBasis::Oam { .. }) => {
            check_oam_arm(state.arm_b(), mask, "B")?;
            Ok((polarizer_operator(theta), transmission_operator(mask)))
        }
        (ArmBasis::Oam { .. }, ArmBasis::Polarization) => {
            check_oam_arm(state.arm_a(), mask, "A")?;
            Ok((transmission_operator(mask), polarizer_operator(theta)))
        }
        (a, b) => Err(Error::AnalyzerMismatch(format!(
            "hybrid projection needs one polarization and one OAM arm, got {a:?} / {b:?}"
        ))),
    }
}

fn mix(state: &TwoPhotonState, op_a: &Mat2, op_b: &Mat2, v: f64) -> f64 {
    let coherent = joint_expectation(state, op_a, op_b);
    let diagonal = diagonal_expectation(state, op_a, op_b);
    v * coherent + (1.0 - v) * diagonal
}

fn check_source_visibility(v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::invalid(
            "source_visibility",
            format!("must be in (0, 1], got {v}"),
        ));
    }
    Ok(())
}

/// Marginal transmission of one arm (partial trace against the other arm),
/// used for singles rates. `arm_op` must act on the arm named by `arm`.
#[allow(clippy::needless_range_loop)] // tensor index arithmetic
pub(crate) fn marginal_expectation(
    state: &TwoPhotonState,
    op: &Mat2,
    arm: crate::state::Arm,
) -> f64 {
    let m = state.amplitude_matrix();
    let mut p = Complex64::new(0.0, 0.0);
    match arm {
        crate::state::Arm::A => {
            for i in 0..2 {
                for k in 0..2 {
                    for j in 0..2 {
                        p += m[i][j].conj() * op[i][k] * m[k][j];
                    }
                }
            }
        }
        crate::state::Arm::B => {
            for j in 0..2 {
                for l in 0..2 {
                    for i in 0..2 {
                        p += m[i][j].conj() * op[j][l] * m[i][l];
                    }
                }
            }
        }
    }
    p.re.max(0.0)
}

pub(crate) fn mask_operator(mask: &SlitMask) -> Mat2 {
    transmission_operator(mask)
}

pub(crate) fn malus_operator(theta_deg: f64) -> Mat2 {
    polarizer_operator(theta_deg.to_radians())
}
