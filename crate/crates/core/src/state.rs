//! Two-photon pure states on a 2 (x) 2 product space with per-arm basis
//! labels, the polarization-to-OAM transfer channel, analyzer kets and
//! Born-rule projections.
//!
//! Basis ordering per arm: polarization arms use (H, V), OAM arms use
//! (+l, -l). The transfer channel maps H to +l and V to -l in the same arm,
//! so amplitudes are carried over unchanged and only the label changes.
//! Angles that cross a module boundary are degrees; internal phases are
//! radians, converted in one place ([`mask_angle_to_phase`]).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Precondition tolerance on squared norms supplied by callers.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Basis label of one photonic arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmBasis {
    /// Two-level polarization arm with basis (H, V).
    Polarization,
    /// Two-level OAM subspace with basis (+l, -l), l >= 1 quanta.
    Oam { l: u32 },
}

impl ArmBasis {
    pub fn oam(l: u32) -> Result<Self> {
        if l == 0 {
            return Err(Error::invalid("l", "OAM quantum number must be >= 1"));
        }
        Ok(ArmBasis::Oam { l })
    }

    pub fn is_polarization(&self) -> bool {
        matches!(self, ArmBasis::Polarization)
    }

    pub fn oam_order(&self) -> Option<u32> {
        match self {
            ArmBasis::Oam { l } => Some(*l),
            ArmBasis::Polarization => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            ArmBasis::Polarization => "polarization (H, V)".to_string(),
            ArmBasis::Oam { l } => format!("OAM (+{l}, -{l})"),
        }
    }
}

/// Which photon of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    A,
    B,
}

/// Pure two-photon state: four complex amplitudes over the product basis
/// (a1 b1, a1 b2, a2 b1, a2 b2) of the two arm bases.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    arm_a: ArmBasis,
    arm_b: ArmBasis,
    amplitudes: [Complex64; 4],
}

impl TwoPhotonState {
    /// Build a state from explicit amplitudes. The squared norm must be 1
    /// within [`NORM_TOLERANCE`]; the stored amplitudes are renormalized to
    /// machine precision.
    pub fn new(arm_a: ArmBasis, arm_b: ArmBasis, amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sq });
        }
        let scale = norm_sq.sqrt().recip();
        let amplitudes = amplitudes.map(|a| a * scale);
        Ok(Self {
            arm_a,
            arm_b,
            amplitudes,
        })
    }

    pub fn arm_a(&self) -> ArmBasis {
        self.arm_a
    }

    pub fn arm_b(&self) -> ArmBasis {
        self.arm_b
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }

    /// Amplitudes as a 2x2 matrix indexed [arm A state][arm B state].
    pub fn amplitude_matrix(&self) -> [[Complex64; 2]; 2] {
        [
            [self.amplitudes[0], self.amplitudes[1]],
            [self.amplitudes[2], self.amplitudes[3]],
        ]
    }

    /// Determinant of the amplitude matrix. Its modulus is invariant under
    /// local relabelings and vanishes exactly for product states, so it acts
    /// as a concurrence proxy (concurrence = 2|det|).
    pub fn amplitude_determinant(&self) -> Complex64 {
        self.amplitudes[0] * self.amplitudes[3] - self.amplitudes[1] * self.amplitudes[2]
    }

    pub fn is_product(&self, tolerance: f64) -> bool {
        self.amplitude_determinant().norm() <= tolerance
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// The input polarization-entangled pair: alpha |H>|V> + e^{i phi} beta |V>|H>.
///
/// Requires alpha^2 + beta^2 = 1 within [`NORM_TOLERANCE`].
pub fn make_entangled(alpha: f64, beta: f64, phi: f64) -> Result<TwoPhotonState> {
    let norm_sq = alpha * alpha + beta * beta;
    if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm_sq });
    }
    let zero = Complex64::new(0.0, 0.0);
    let amplitudes = [
        zero,
        Complex64::new(alpha, 0.0),
        Complex64::from_polar(beta, phi),
        zero,
    ];
    TwoPhotonState::new(ArmBasis::Polarization, ArmBasis::Polarization, amplitudes)
}

/// Transfer one polarization-encoded arm to the (+l, -l) OAM subspace.
///
/// The interferometric transfer maps H to +l and V to -l, so it is a pure
/// relabeling of the arm basis: amplitudes are carried over, the norm and the
/// amplitude-matrix determinant are untouched. Conversion and detection
/// inefficiencies are classical rate losses handled by the counting model,
/// not here.
pub fn transfer_arm(state: &TwoPhotonState, arm: Arm, l: u32) -> Result<TwoPhotonState> {
    let target = ArmBasis::oam(l)?;
    let current = match arm {
        Arm::A => state.arm_a,
        Arm::B => state.arm_b,
    };
    if !current.is_polarization() {
        return Err(Error::InvalidTransfer(format!(
            "arm {arm:?} is already {}",
            current.describe()
        )));
    }
    let mut out = state.clone();
    match arm {
        Arm::A => out.arm_a = target,
        Arm::B => out.arm_b = target,
    }
    Ok(out)
}

/// Single-arm projective analyzer: a unit ket in the arm's two-level basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Analyzer {
    basis: ArmBasis,
    ket: [Complex64; 2],
}

impl Analyzer {
    /// Unit-norm tolerance is 1e-12; the stored ket is renormalized.
    pub fn new(basis: ArmBasis, ket: [Complex64; 2]) -> Result<Self> {
        let norm_sq = ket[0].norm_sqr() + ket[1].norm_sqr();
        if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sq });
        }
        let scale = norm_sq.sqrt().recip();
        Ok(Self {
            basis,
            ket: [ket[0] * scale, ket[1] * scale],
        })
    }

    pub fn basis(&self) -> ArmBasis {
        self.basis
    }

    pub fn ket(&self) -> &[Complex64; 2] {
        &self.ket
    }

    /// The orthogonal partner ket (unique up to global phase).
    pub fn orthogonal(&self) -> Analyzer {
        Analyzer {
            basis: self.basis,
            ket: [-self.ket[1].conj(), self.ket[0].conj()],
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.ket[0].norm_sqr() + self.ket[1].norm_sqr()
    }
}

/// Equal superposition analyzer (|+l> + e^{i phi} |-l>) / sqrt(2).
pub fn oam_analyzer(l: u32, phi: f64) -> Result<Analyzer> {
    let basis = ArmBasis::oam(l)?;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    Analyzer::new(
        basis,
        [
            Complex64::new(inv_sqrt2, 0.0),
            Complex64::from_polar(inv_sqrt2, phi),
        ],
    )
}

/// Linear polarizer at angle theta (radians): cos(theta)|H> + sin(theta)|V>.
pub fn polarization_analyzer(theta: f64) -> Analyzer {
    Analyzer {
        basis: ArmBasis::Polarization,
        ket: [
            Complex64::new(theta.cos(), 0.0),
            Complex64::new(theta.sin(), 0.0),
        ],
    }
}

/// Born-rule joint projection probability |<a| (x) <b| psi>|^2.
///
/// Both analyzer bases must match the state's arm bases exactly (same kind
/// and same l).
pub fn projection_probability(
    state: &TwoPhotonState,
    anal_a: &Analyzer,
    anal_b: &Analyzer,
) -> Result<f64> {
    if anal_a.basis != state.arm_a {
        return Err(Error::AnalyzerMismatch(format!(
            "arm A is {} but analyzer A is {}",
            state.arm_a.describe(),
            anal_a.basis.describe()
        )));
    }
    if anal_b.basis != state.arm_b {
        return Err(Error::AnalyzerMismatch(format!(
            "arm B is {} but analyzer B is {}",
            state.arm_b.describe(),
            anal_b.basis.describe()
        )));
    }
    let mut amp = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            amp += anal_a.ket[i].conj() * anal_b.ket[j].conj() * state.amplitudes[2 * i + j];
        }
    }
    Ok(amp.norm_sqr().clamp(0.0, 1.0))
}

/// Mask orientation (degrees) to superposition phase (radians):
/// phi = 2 l gamma. A petal pattern of order l repeats every 360/(2l) degrees,
/// so one fringe period in gamma spans a 2 pi change of phi.
pub fn mask_angle_to_phase(gamma_deg: f64, l: u32) -> f64 {
    assert!(l >= 1, "mask_angle_to_phase requires l >= 1");
    2.0 * f64::from(l) * gamma_deg.to_radians()
}

/// Inverse of [`mask_angle_to_phase`]: gamma = phi / (2 l), in degrees.
pub fn phase_to_mask_angle(phi: f64, l: u32) -> f64 {
    assert!(l >= 1, "phase_to_mask_angle requires l >= 1");
    (phi / (2.0 * f64::from(l))).to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn bell() -> TwoPhotonState {
        make_entangled(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0).unwrap()
    }

    fn random_state(rng: &mut impl Rng) -> TwoPhotonState {
        let mut amps = [Complex64::new(0.0, 0.0); 4];
        for a in amps.iter_mut() {
            *a = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in amps.iter_mut() {
            *a /= norm;
        }
        TwoPhotonState::new(ArmBasis::Polarization, ArmBasis::Polarization, amps).unwrap()
    }

    #[test]
    fn bell_amplitudes() {
        let s = bell();
        let a = s.amplitudes();
        assert!(a[0].norm() < 1e-15 && a[3].norm() < 1e-15);
        assert!((a[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((a[2].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_limit() {
        let s = make_entangled(1.0, 0.0, 2.7).unwrap();
        let a = s.amplitudes();
        assert!((a[1].re - 1.0).abs() < 1e-15);
        assert!(a[0].norm() + a[2].norm() + a[3].norm() < 1e-15);
        assert!(s.is_product(1e-12));
    }

    #[test]
    fn entangled_with_phase() {
        let s = make_entangled(0.6, 0.8, PI / 3.0).unwrap();
        let a = s.amplitudes();
        assert!((a[1].re - 0.6).abs() < 1e-12);
        assert!((a[2] - Complex64::from_polar(0.8, PI / 3.0)).norm() < 1e-12);
        assert!((s.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unnormalized_inputs() {
        assert!(matches!(
            make_entangled(0.9, 0.8, 0.0),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn transfer_relabels_and_preserves_amplitudes() {
        // Bell pair, arm A to l = 10, arm B to l = 100: the asymmetric state
        // (|+10>|-100> + |-10>|+100>) / sqrt(2).
        let s = transfer_arm(&transfer_arm(&bell(), Arm::A, 10).unwrap(), Arm::B, 100).unwrap();
        assert_eq!(s.arm_a(), ArmBasis::Oam { l: 10 });
        assert_eq!(s.arm_b(), ArmBasis::Oam { l: 100 });
        let a = s.amplitudes();
        // index 1 = (+10, -100), index 2 = (-10, +100)
        assert!((a[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((a[2].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hybrid_transfer_single_arm() {
        // Transfer only arm B to l = 300: (|H>|-300> + |V>|+300>) / sqrt(2).
        let s = transfer_arm(&bell(), Arm::B, 300).unwrap();
        assert_eq!(s.arm_a(), ArmBasis::Polarization);
        assert_eq!(s.arm_b(), ArmBasis::Oam { l: 300 });
        let a = s.amplitudes();
        assert!((a[1].re - FRAC_1_SQRT_2).abs() < 1e-15); // |H>|-300>
        assert!((a[2].re - FRAC_1_SQRT_2).abs() < 1e-15); // |V>|+300>
    }

    #[test]
    fn transfer_keeps_product_states_product() {
        let s = make_entangled(1.0, 0.0, 0.0).unwrap();
        let s = transfer_arm(&transfer_arm(&s, Arm::A, 5).unwrap(), Arm::B, 5).unwrap();
        assert!(s.is_product(1e-15));
    }

    #[test]
    fn transfer_rejects_oam_arm() {
        let s = transfer_arm(&bell(), Arm::A, 10).unwrap();
        assert!(matches!(
            transfer_arm(&s, Arm::A, 20),
            Err(Error::InvalidTransfer(_))
        ));
        assert!(matches!(
            transfer_arm(&bell(), Arm::A, 0),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn determinant_invariant_under_transfer() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let s = random_state(&mut rng);
            let d0 = s.amplitude_determinant().norm();
            let t = transfer_arm(&s, Arm::A, 7).unwrap();
            let t = transfer_arm(&t, Arm::B, 13).unwrap();
            let d1 = t.amplitude_determinant().norm();
            assert!((d0 - d1).abs() < 1e-15);
            assert!((t.norm_sq() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oam_analyzer_kets() {
        let a = oam_analyzer(10, 0.0).unwrap();
        assert!((a.ket()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((a.ket()[1].re - FRAC_1_SQRT_2).abs() < 1e-15);

        let b = oam_analyzer(100, PI / 2.0).unwrap();
        assert!((b.ket()[1] - Complex64::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((b.norm_sq() - 1.0).abs() < 1e-12);

        // (l, pi) is the orthogonal partner of (l, 0).
        let c = oam_analyzer(10, PI).unwrap();
        let inner = a.ket()[0].conj() * c.ket()[0] + a.ket()[1].conj() * c.ket()[1];
        assert!(inner.norm() < 1e-12);

        assert!(oam_analyzer(0, 0.0).is_err());
    }

    #[test]
    fn polarizer_kets() {
        let d = polarization_analyzer(PI / 4.0);
        assert!((d.ket()[0].re - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((d.ket()[1].re - FRAC_1_SQRT_2).abs() < 1e-12);
        let h = polarization_analyzer(0.0);
        let v = polarization_analyzer(PI / 2.0);
        let inner = h.ket()[0].conj() * v.ket()[0] + h.ket()[1].conj() * v.ket()[1];
        assert!(inner.norm() < 1e-12);
    }

    #[test]
    fn orthogonal_partner_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = oam_analyzer(5, rng.gen::<f64>() * 2.0 * PI).unwrap();
            let o = a.orthogonal();
            let inner = a.ket()[0].conj() * o.ket()[0] + a.ket()[1].conj() * o.ket()[1];
            assert!(inner.norm() < 1e-14);
            assert!((o.norm_sq() - 1.0).abs() < 1e-12);
        }
    }

    /// Closed form: for (|+l>|-l> + |-l>|+l>)/sqrt(2) and analyzers with
    /// phases phi1, phi2, the joint probability is (1 + cos(phi1 - phi2))/4.
    #[test]
    fn symmetric_state_projection_closed_form() {
        let s = transfer_arm(&transfer_arm(&bell(), Arm::A, 100).unwrap(), Arm::B, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p1 = rng.gen::<f64>() * 2.0 * PI;
            let p2 = rng.gen::<f64>() * 2.0 * PI;
            let got = projection_probability(
                &s,
                &oam_analyzer(100, p1).unwrap(),
                &oam_analyzer(100, p2).unwrap(),
            )
            .unwrap();
            let expect = (1.0 + (p1 - p2).cos()) / 4.0;
            assert!((got - expect).abs() < 1e-12, "got {got}, expect {expect}");
        }
        // Pinned value at phi1 = phi2 = 0.
        let p = projection_probability(
            &s,
            &oam_analyzer(100, 0.0).unwrap(),
            &oam_analyzer(100, 0.0).unwrap(),
        )
        .unwrap();
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn product_state_projection() {
        let s = make_entangled(1.0, 0.0, 0.0).unwrap();
        let s = transfer_arm(&transfer_arm(&s, Arm::A, 5).unwrap(), Arm::B, 5).unwrap();
        let p = projection_probability(
            &s,
            &oam_analyzer(5, 0.0).unwrap(),
            &oam_analyzer(5, 0.0).unwrap(),
        )
        .unwrap();
        assert!((p - 0.25).abs() < 1e-12);
    }

    /// Hybrid |H>|-l> + |V>|+l> with a polarizer at theta and an OAM analyzer
    /// at phi: p = (1 + sin(2 theta) cos(phi)) / 4.
    #[test]
    fn hybrid_state_projection_closed_form() {
        let s = transfer_arm(&bell(), Arm::B, 300).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let theta = rng.gen::<f64>() * PI;
            let phi = rng.gen::<f64>() * 2.0 * PI;
            let got = projection_probability(
                &s,
                &polarization_analyzer(theta),
                &oam_analyzer(300, phi).unwrap(),
            )
            .unwrap();
            let expect = (1.0 + (2.0 * theta).sin() * phi.cos()) / 4.0;
            assert!((got - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_rejects_mismatched_bases() {
        let s = bell();
        let err = projection_probability(
            &s,
            &oam_analyzer(10, 0.0).unwrap(),
            &polarization_analyzer(0.0),
        );
        assert!(matches!(err, Err(Error::AnalyzerMismatch(_))));

        let t = transfer_arm(&transfer_arm(&bell(), Arm::A, 10).unwrap(), Arm::B, 10).unwrap();
        let err = projection_probability(
            &t,
            &oam_analyzer(10, 0.0).unwrap(),
            &oam_analyzer(20, 0.0).unwrap(),
        );
        assert!(matches!(err, Err(Error::AnalyzerMismatch(_))));
    }

    #[test]
    fn projections_over_complete_basis_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let s = random_state(&mut rng);
            let s = transfer_arm(&transfer_arm(&s, Arm::A, 3).unwrap(), Arm::B, 3).unwrap();
            let a = oam_analyzer(3, rng.gen::<f64>() * 2.0 * PI).unwrap();
            let b = oam_analyzer(3, rng.gen::<f64>() * 2.0 * PI).unwrap();
            let mut total = 0.0;
            for aa in [&a, &a.orthogonal()] {
                for bb in [&b, &b.orthogonal()] {
                    let p = projection_probability(&s, aa, bb).unwrap();
                    assert!((0.0..=1.0).contains(&p));
                    total += p;
                }
            }
            assert!((total - 1.0).abs() < 1e-9, "completeness sum {total}");
        }
    }

    /// For the symmetric maximally entangled state the joint probability only
    /// depends on the mask-angle difference.
    #[test]
    fn difference_only_dependence() {
        let l = 100;
        let s = transfer_arm(&transfer_arm(&bell(), Arm::A, l).unwrap(), Arm::B, l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let ga = rng.gen::<f64>() * 3.6;
            let gb = rng.gen::<f64>() * 3.6;
            let delta = rng.gen::<f64>() * 360.0;
            let p0 = projection_probability(
                &s,
                &oam_analyzer(l, mask_angle_to_phase(ga, l)).unwrap(),
                &oam_analyzer(l, mask_angle_to_phase(gb, l)).unwrap(),
            )
            .unwrap();
            let p1 = projection_probability(
                &s,
                &oam_analyzer(l, mask_angle_to_phase(ga + delta, l)).unwrap(),
                &oam_analyzer(l, mask_angle_to_phase(gb + delta, l)).unwrap(),
            )
            .unwrap();
            assert!((p0 - p1).abs() < 1e-12);
        }
    }

    #[test]
    fn mask_angle_phase_conversion() {
        assert!((mask_angle_to_phase(45.0, 1) - PI / 2.0).abs() < 1e-12);
        assert!((mask_angle_to_phase(0.9, 100) - PI).abs() < 1e-12);
        // 90 degrees at l = 100 closes exactly 50 fringes: phi = 100 pi = 0 mod 2 pi.
        let phi = mask_angle_to_phase(90.0, 100);
        assert!((phi - 100.0 * PI).abs() < 1e-9);
        let wrapped = phi.rem_euclid(2.0 * PI);
        assert!(wrapped < 1e-9 || (2.0 * PI - wrapped) < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let l = rng.gen_range(1..=300);
            let gamma = rng.gen::<f64>() * 360.0 - 180.0;
            let back = phase_to_mask_angle(mask_angle_to_phase(gamma, l), l);
            assert!((back - gamma).abs() < 1e-12);
        }
    }
}
