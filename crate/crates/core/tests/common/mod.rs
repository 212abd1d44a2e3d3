//! Shared test oracles, independent of the library's analytic paths.
//!
//! Compiled once per integration-test binary; not every binary uses every
//! helper.
#![allow(dead_code)]

use num_complex::Complex64;
use oam_core::mask::SlitMask;
use oam_core::state::TwoPhotonState;

/// Brute-force slit-averaged transmission: Simpson integration of the
/// normalized petal intensity (1 + cos(2 l theta - phi)) / (4 pi) over each
/// open window of the mask. Matches the analytic
/// (r/2) (1 + sinc(pi r) cos(2 l gamma - phi)) independently of it.
pub fn transmission_numeric(l: u32, width_ratio: f64, phi: f64, orientation_deg: f64) -> f64 {
    let period = std::f64::consts::PI / f64::from(l); // radians
    let half_width = width_ratio * period / 2.0;
    let gamma = orientation_deg.to_radians();
    let lf = f64::from(l);
    let mut total = 0.0;
    let m = 801; // odd point count per window for Simpson
    for k in 0..(2 * l) {
        let center = gamma + f64::from(k) * period;
        let a = center - half_width;
        let b = center + half_width;
        let h = (b - a) / (m - 1) as f64;
        let f = |theta: f64| (1.0 + (2.0 * lf * theta - phi).cos()) / (4.0 * std::f64::consts::PI);
        let mut sum = f(a) + f(b);
        for i in 1..m - 1 {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(a + h * i as f64);
        }
        total += sum * h / 3.0;
    }
    total
}

/// Brute-force joint transmission of a two-photon OAM state through two
/// masks: double Simpson integration of the two-photon angular density over
/// the open windows of both masks, halved per arm to match the library's
/// normalization convention (a fully open mask reads 1/2).
pub fn coincidence_numeric(state: &TwoPhotonState, mask_a: &SlitMask, mask_b: &SlitMask) -> f64 {
    let la = state.arm_a().oam_order().expect("arm A is OAM") as f64;
    let lb = state.arm_b().oam_order().expect("arm B is OAM") as f64;
    let amps = state.amplitudes();
    let two_pi = std::f64::consts::TAU;
    // Two-photon angular amplitude over the (+l, -l) basis pair.
    let u = |ta: f64, tb: f64| -> Complex64 {
        let ea = [
            Complex64::from_polar(1.0, la * ta),
            Complex64::from_polar(1.0, -la * ta),
        ];
        let eb = [
            Complex64::from_polar(1.0, lb * tb),
            Complex64::from_polar(1.0, -lb * tb),
        ];
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += amps[2 * i + j] * ea[i] * eb[j];
            }
        }
        acc / two_pi
    };
    let windows = |mask: &SlitMask| -> Vec<(f64, f64)> {
        let period = std::f64::consts::PI / f64::from(mask.l());
        let half = mask.width_ratio() * period / 2.0;
        let gamma = mask.orientation_deg().to_radians();
        (0..2 * mask.l())
            .map(|k| {
                let c = gamma + f64::from(k) * period;
                (c - half, c + half)
            })
            .collect()
    };
    let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, m: usize| -> f64 {
        let h = (b - a) / (m - 1) as f64;
        let mut sum = f(a) + f(b);
        for i in 1..m - 1 {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(a + h * i as f64);
        }
        sum * h / 3.0
    };
    let m = 201;
    let mut total = 0.0;
    for (a0, a1) in windows(mask_a) {
        let inner = |ta: f64| -> f64 {
            let mut acc = 0.0;
            for (b0, b1) in windows(mask_b) {
                acc += simpson(&|tb: f64| u(ta, tb).norm_sqr(), b0, b1, m);
            }
            acc
        };
        total += simpson(&inner, a0, a1, m);
    }
    total / 4.0
}

/// Minimal binary-P5 reader for round-trip checks.
pub fn read_p5(path: &std::path::Path) -> (usize, usize, Vec<u8>) {
    let data = std::fs::read(path).unwrap();
    let mut newlines = data
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b'\n')
        .map(|(i, _)| i);
    let header_end = newlines.nth(2).expect("three header lines");
    let header = std::str::from_utf8(&data[..header_end]).unwrap();
    let mut lines = header.lines();
    assert_eq!(lines.next().unwrap(), "P5");
    let mut dims = lines.next().unwrap().split_whitespace();
    let w: usize = dims.next().unwrap().parse().unwrap();
    let h: usize = dims.next().unwrap().parse().unwrap();
    assert_eq!(lines.next().unwrap(), "255");
    (w, h, data[header_end + 1..].to_vec())
}
