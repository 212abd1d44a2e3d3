//! Pixelated spatial-light-modulator phase patterns and the sampled complex
//! fields they imprint: spiral and Fresnel-lens phases, pixelation (Moire /
//! aliasing) diagnostics, mode-conversion efficiency and petal-pattern
//! rendering.
//!
//! Phase values live in [0, 2 pi). A pixel holds one constant phase sampled
//! at its center (zero-order hold); illumination oversamples each pixel to
//! resolve the Gaussian envelope. Positions are measured from a configurable
//! center given in pixel units, where pixel (i, j) spans [i, i+1) x [j, j+1).

mod field;
mod pgm;

pub use field::{
    conversion_efficiency, count_petals, default_waist, fine_geometry, ideal_spiral_field,
    illuminate_gaussian, normalized_overlap, petal_intensity, ring_radius, FieldGrid, GridGeometry,
    IntensityGrid,
};
pub use pgm::{write_intensity_pgm, write_phase_pgm};

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::exec;

/// Physical panel of the phase modulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlmSpec {
    pub width_px: usize,
    pub height_px: usize,
    /// Pixel pitch in meters.
    pub pixel_pitch: f64,
}

impl SlmSpec {
    pub fn new(width_px: usize, height_px: usize, pixel_pitch: f64) -> Result<Self> {
        if width_px < 2 || height_px < 2 {
            return Err(Error::invalid("slm", "panel must be at least 2x2 pixels"));
        }
        if !pixel_pitch.is_finite() || pixel_pitch <= 0.0 {
            return Err(Error::invalid(
                "slm.pixel_pitch",
                "must be positive and finite",
            ));
        }
        Ok(Self {
            width_px,
            height_px,
            pixel_pitch,
        })
    }

    /// 1920 x 1080 panel with 8 um pixels.
    pub fn full_hd() -> Self {
        Self {
            width_px: 1920,
            height_px: 1080,
            pixel_pitch: 8e-6,
        }
    }

    /// Panel midpoint in pixel units.
    pub fn center(&self) -> (f64, f64) {
        (self.width_px as f64 / 2.0, self.height_px as f64 / 2.0)
    }

    /// Half of the shorter panel dimension, in meters.
    pub fn min_half_extent(&self) -> f64 {
        0.5 * self.width_px.min(self.height_px) as f64 * self.pixel_pitch
    }
}

/// Phase field sampled on the modulator pixels, values in [0, 2 pi).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    spec: SlmSpec,
    center: (f64, f64),
    values: Vec<f64>,
}

impl PhaseGrid {
    pub fn spec(&self) -> &SlmSpec {
        &self.spec
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.spec.width_px + x]
    }
}

/// Wrap a phase to [0, 2 pi), guarding the half-open upper edge.
pub(crate) fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn check_center(spec: &SlmSpec, center: (f64, f64)) -> Result<()> {
    let (cx, cy) = center;
    if !(cx.is_finite() && cy.is_finite())
        || cx < 0.0
        || cy < 0.0
        || cx > spec.width_px as f64
        || cy > spec.height_px as f64
    {
        return Err(Error::invalid(
            "center",
            format!(
                "({cx}, {cy}) lies outside the {}x{} panel",
                spec.width_px, spec.height_px
            ),
        ));
    }
    Ok(())
}

/// Spiral (vortex) phase of charge l: pixel (i, j) carries
/// (l * atan2(y - cy, x - cx)) mod 2 pi evaluated at the pixel center.
pub fn spiral_phase_pattern(spec: &SlmSpec, l: i32, center: (f64, f64)) -> Result<PhaseGrid> {
    if l == 0 {
        return Err(Error::invalid("l", "spiral charge must be nonzero"));
    }
    check_center(spec, center)?;
    let (cx, cy) = center;
    let w = spec.width_px;
    let lf = f64::from(l);
    let mut values = vec![0.0; w * spec.height_px];
    exec::fill_rows(&mut values, w, |j, row| {
        let dy = (j as f64 + 0.5) - cy;
        for (i, v) in row.iter_mut().enumerate() {
            let dx = (i as f64 + 0.5) - cx;
            *v = wrap_phase(lf * dy.atan2(dx));
        }
    });
    Ok(PhaseGrid {
        spec: *spec,
        center,
        values,
    })
}

/// Quadratic lens phase -pi (x^2/f_x + y^2/f_y) / lambda wrapped to
/// [0, 2 pi). An infinite focal length disables that axis (cylindrical lens
/// when only one is finite, no lens when both are).
pub fn fresnel_lens_phase(
    spec: &SlmSpec,
    focal_x: f64,
    focal_y: f64,
    wavelength: f64,
    center: (f64, f64),
) -> Result<PhaseGrid> {
    if focal_x == 0.0 || focal_y == 0.0 || focal_x.is_nan() || focal_y.is_nan() {
        return Err(Error::invalid("focal", "focal lengths must be nonzero"));
    }
    if !wavelength.is_finite() || wavelength <= 0.0 {
        return Err(Error::invalid("wavelength", "must be positive and finite"));
    }
    check_center(spec, center)?;
    let (cx, cy) = center;
    let w = spec.width_px;
    let pitch = spec.pixel_pitch;
    let kx = if focal_x.is_infinite() {
        0.0
    } else {
        std::f64::consts::PI / (focal_x * wavelength)
    };
    let ky = if focal_y.is_infinite() {
        0.0
    } else {
        std::f64::consts::PI / (focal_y * wavelength)
    };
    let mut values = vec![0.0; w * spec.height_px];
    exec::fill_rows(&mut values, w, |j, row| {
        let y = ((j as f64 + 0.5) - cy) * pitch;
        for (i, v) in row.iter_mut().enumerate() {
            let x = ((i as f64 + 0.5) - cx) * pitch;
            *v = wrap_phase(-(kx * x * x + ky * y * y));
        }
    });
    Ok(PhaseGrid {
        spec: *spec,
        center,
        values,
    })
}

/// Pixelwise sum (a + b) mod 2 pi. Both grids must share spec and center.
pub fn add_phases(a: &PhaseGrid, b: &PhaseGrid) -> Result<PhaseGrid> {
    if a.spec != b.spec {
        return Err(Error::GridMismatch(format!(
            "panel specs differ: {:?} vs {:?}",
            a.spec, b.spec
        )));
    }
    if a.center != b.center {
        return Err(Error::GridMismatch(format!(
            "pattern centers differ: {:?} vs {:?}",
            a.center, b.center
        )));
    }
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| wrap_phase(x + y))
        .collect();
    Ok(PhaseGrid {
        spec: a.spec,
        center: a.center,
        values,
    })
}

/// Pixels available per 2 pi phase change on a circle of `radius` meters:
/// 2 pi radius / (l * pitch). Exact, analytic.
pub fn pixels_per_period(spec: &SlmSpec, l: u32, radius: f64) -> f64 {
    assert!(l >= 1, "pixels_per_period requires l >= 1");
    assert!(radius > 0.0, "pixels_per_period requires a positive radius");
    TAU * radius / (f64::from(l) * spec.pixel_pitch)
}

/// Radius (meters) inside which fewer than 2 pixels sample one 2 pi period:
/// r = l * pitch / pi. Inverts [`pixels_per_period`] at the Nyquist limit.
pub fn aliasing_radius(spec: &SlmSpec, l: u32) -> f64 {
    assert!(l >= 1, "aliasing_radius requires l >= 1");
    f64::from(l) * spec.pixel_pitch / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small_spec() -> SlmSpec {
        SlmSpec::new(4, 4, 8e-6).unwrap()
    }

    /// Winding number of a sampled phase pattern around a circle of radius
    /// `radius_px` (pixel units): sum of wrapped neighbor differences / 2 pi.
    fn winding_number(grid: &PhaseGrid, radius_px: f64, samples: usize) -> i64 {
        let (cx, cy) = grid.center();
        let read = |t: f64| {
            let x = (cx + radius_px * t.cos() - 0.5)
                .round()
                .clamp(0.0, (grid.spec().width_px - 1) as f64);
            let y = (cy + radius_px * t.sin() - 0.5)
                .round()
                .clamp(0.0, (grid.spec().height_px - 1) as f64);
            grid.value(x as usize, y as usize)
        };
        let mut total = 0.0;
        let mut prev = read(0.0);
        for k in 1..=samples {
            let t = TAU * k as f64 / samples as f64;
            let cur = read(t);
            let mut d = cur - prev;
            while d > PI {
                d -= TAU;
            }
            while d < -PI {
                d += TAU;
            }
            total += d;
            prev = cur;
        }
        (total / TAU).round() as i64
    }

    #[test]
    fn spiral_unit_charge_quadrants() {
        let g = spiral_phase_pattern(&small_spec(), 1, (2.0, 2.0)).unwrap();
        // Pixel (0,0) center (0.5, 0.5): atan2(-1.5, -1.5) = -3pi/4 -> 5pi/4.
        assert!((g.value(0, 0) - 5.0 * PI / 4.0).abs() < 1e-12);
        // Pixel (3,3) center (3.5, 3.5): atan2(1.5, 1.5) = pi/4.
        assert!((g.value(3, 3) - PI / 4.0).abs() < 1e-12);
        for &v in g.values() {
            assert!((0.0..TAU).contains(&v));
        }
    }

    #[test]
    fn spiral_winding_matches_charge() {
        let spec = SlmSpec::new(256, 256, 8e-6).unwrap();
        for l in [1i32, 2, 10, -3] {
            let g = spiral_phase_pattern(&spec, l, spec.center()).unwrap();
            assert_eq!(winding_number(&g, 90.0, 4096), i64::from(l));
        }
    }

    #[test]
    fn spiral_rejects_bad_inputs() {
        assert!(spiral_phase_pattern(&small_spec(), 0, (2.0, 2.0)).is_err());
        assert!(spiral_phase_pattern(&small_spec(), 1, (-1.0, 2.0)).is_err());
        assert!(spiral_phase_pattern(&small_spec(), 1, (2.0, 9.0)).is_err());
    }

    /// On the full-HD panel at l = 300 the inner region is aliased: the
    /// measured winding collapses below the true charge inside the analytic
    /// aliasing radius, and is exact well outside it.
    #[test]
    fn aliasing_onset_scan() {
        let spec = SlmSpec::full_hd();
        let g = spiral_phase_pattern(&spec, 300, spec.center()).unwrap();
        let r_alias_px = aliasing_radius(&spec, 300) / spec.pixel_pitch;
        assert!((r_alias_px - 95.49).abs() < 0.1);
        let inner = winding_number(&g, 0.5 * r_alias_px, 8192);
        assert_ne!(inner, 300, "winding should fold inside the aliasing radius");
        let outer = winding_number(&g, 3.0 * r_alias_px, 16384);
        assert_eq!(outer, 300);

        // The order-10 pattern on the same panel is clean everywhere that
        // matters: exactly 10 wraps per revolution at the working radii.
        let g10 = spiral_phase_pattern(&spec, 10, spec.center()).unwrap();
        for radius in [100.0, 300.0, 500.0] {
            assert_eq!(winding_number(&g10, radius, 8192), 10);
        }
    }

    #[test]
    fn fresnel_flat_and_cylindrical() {
        let spec = SlmSpec::new(64, 64, 8e-6).unwrap();
        let flat =
            fresnel_lens_phase(&spec, f64::INFINITY, f64::INFINITY, 810e-9, spec.center()).unwrap();
        assert!(flat.values().iter().all(|&v| v == 0.0));

        let cyl = fresnel_lens_phase(&spec, 0.5, f64::INFINITY, 810e-9, spec.center()).unwrap();
        for x in 0..64 {
            let v0 = cyl.value(x, 0);
            for y in 1..64 {
                assert_eq!(
                    cyl.value(x, y),
                    v0,
                    "cylindrical phase must not vary along y"
                );
            }
        }
        assert!(fresnel_lens_phase(&spec, 0.0, 1.0, 810e-9, spec.center()).is_err());
        assert!(fresnel_lens_phase(&spec, 1.0, 1.0, 0.0, spec.center()).is_err());
    }

    /// Wrap rings of a spherical f = 1 m lens at 810 nm sit at
    /// r_k = sqrt(2 k lambda f); the first ring is at 1.27 mm.
    #[test]
    fn fresnel_wrap_ring_radius() {
        let spec = SlmSpec::full_hd();
        let g = fresnel_lens_phase(&spec, 1.0, 1.0, 810e-9, spec.center()).unwrap();
        let (cx, cy) = spec.center();
        let y = cy as usize; // row through the center
        let mut first_jump = None;
        for x in (cx as usize)..spec.width_px - 1 {
            let d = g.value(x + 1, y) - g.value(x, y);
            if d > PI {
                first_jump = Some(((x as f64 + 1.0) - cx) * spec.pixel_pitch);
                break;
            }
        }
        let expect = (2.0 * 810e-9_f64 * 1.0).sqrt(); // 1.2728 mm
        let got = first_jump.expect("no wrap ring found");
        assert!(
            (got - expect).abs() <= 2.0 * spec.pixel_pitch,
            "first ring at {got}, expected {expect}"
        );
    }

    #[test]
    fn add_phases_identity_and_wrap() {
        let spec = SlmSpec::new(32, 32, 8e-6).unwrap();
        let a = spiral_phase_pattern(&spec, 3, spec.center()).unwrap();
        let zero =
            fresnel_lens_phase(&spec, f64::INFINITY, f64::INFINITY, 810e-9, spec.center()).unwrap();
        let same = add_phases(&a, &zero).unwrap();
        assert_eq!(same.values(), a.values());

        // Constant pi + constant pi wraps to exactly zero.
        let mut pi_grid = zero.clone();
        pi_grid.values.iter_mut().for_each(|v| *v = PI);
        let wrapped = add_phases(&pi_grid, &pi_grid).unwrap();
        assert!(wrapped.values().iter().all(|&v| v == 0.0));
    }

    /// Azimuth linearity: spiral(3) + spiral(4) = spiral(7) pixelwise.
    #[test]
    fn add_phases_spiral_linearity() {
        let spec = SlmSpec::new(64, 64, 8e-6).unwrap();
        let s3 = spiral_phase_pattern(&spec, 3, spec.center()).unwrap();
        let s4 = spiral_phase_pattern(&spec, 4, spec.center()).unwrap();
        let s7 = spiral_phase_pattern(&spec, 7, spec.center()).unwrap();
        let sum = add_phases(&s3, &s4).unwrap();
        for (&got, &expect) in sum.values().iter().zip(s7.values()) {
            let d = (got - expect).abs();
            let circ = d.min(TAU - d);
            assert!(circ < 1e-12, "circular distance {circ}");
        }
    }

    #[test]
    fn add_phases_rejects_mismatch() {
        let a = spiral_phase_pattern(&small_spec(), 1, (2.0, 2.0)).unwrap();
        let other = SlmSpec::new(8, 8, 8e-6).unwrap();
        let b = spiral_phase_pattern(&other, 1, other.center()).unwrap();
        assert!(matches!(add_phases(&a, &b), Err(Error::GridMismatch(_))));
        let c = spiral_phase_pattern(&small_spec(), 1, (1.0, 2.0)).unwrap();
        assert!(matches!(add_phases(&a, &c), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn pixels_per_period_reference_values() {
        let spec = SlmSpec::full_hd();
        // Outer usable radius of the full-HD panel (540 px) at l = 300:
        // about 11.3 pixels per 2 pi, near the quoted "only 10 pixels".
        let r = 540.0 * spec.pixel_pitch;
        let ppp = pixels_per_period(&spec, 300, r);
        assert!((ppp - 11.3097).abs() < 1e-3);
        // l = 1 at one pixel radius already exceeds 2 pi pixels.
        assert!(pixels_per_period(&spec, 1, spec.pixel_pitch) >= TAU - 1e-12);
        // Linear in radius, inversely linear in l (exact).
        let base = pixels_per_period(&spec, 10, 1e-3);
        assert_eq!(pixels_per_period(&spec, 10, 2e-3), 2.0 * base);
        assert_eq!(pixels_per_period(&spec, 20, 1e-3), base / 2.0);
        // Aliasing radius for l = 300 at 8 um pitch: 764 um.
        assert!((aliasing_radius(&spec, 300) - 763.94e-6).abs() < 1e-8);
        let at_alias = pixels_per_period(&spec, 300, aliasing_radius(&spec, 300));
        assert!((at_alias - 2.0).abs() < 1e-12);
    }
}
