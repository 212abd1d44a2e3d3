//! Entanglement witness: the sum of two coincidence visibilities measured in
//! mutually unbiased mask bases, certified against the separable-state bound
//! (sqrt(2) + 1) / 2.
//!
//! Basis conventions for a mask of order l: the second unbiased basis sits at
//! gamma + 45/l degrees, orthogonal partners at gamma + 90/l degrees (half
//! the petal period). The bound is reproduced numerically by a grid search
//! with local refinement over all pure product states of the (+l, -l)
//! subspace.

use super::{ArmKind, CountTable};
use crate::error::{Error, Result};
use crate::exec;

/// (sqrt(2) + 1) / 2, the maximal witness value over separable states.
pub fn separable_bound() -> f64 {
    (2.0_f64.sqrt() + 1.0) / 2.0
}

/// A visibility with its 1-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisEstimate {
    pub value: f64,
    pub sigma: f64,
}

/// Visibility from a parallel/orthogonal projection pair:
/// (c_par - c_perp) / (c_par + c_perp), with the Poisson error
/// sigma^2 = 4 c_par c_perp / (c_par + c_perp)^3.
pub fn visibility_from_projections(c_par: f64, c_perp: f64) -> Result<VisEstimate> {
    for (name, c) in [("c_par", c_par), ("c_perp", c_perp)] {
        if c < 0.0 || !c.is_finite() {
            return Err(Error::invalid(
                name,
                format!("counts must be >= 0, got {c}"),
            ));
        }
    }
    let total = c_par + c_perp;
    if total <= 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok(VisEstimate {
        value: (c_par - c_perp) / total,
        sigma: (4.0 * c_par * c_perp / total.powi(3)).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// W exceeds the bound by at least the configured number of sigma.
    Entangled,
    /// W does not exceed the bound at all.
    SeparableCompatible,
    /// W exceeds the bound but not significantly.
    Inconclusive,
}

#[derive(Debug, Clone, Copy)]
pub struct WitnessResult {
    pub vis_1: VisEstimate,
    pub vis_2: VisEstimate,
    /// W = vis_1 + vis_2, exactly.
    pub w: f64,
    pub w_sigma: f64,
    /// (W - bound) / sigma_W; the significance of the violation.
    pub exceedance_sigma: f64,
    /// Significance threshold used for the verdict.
    pub threshold_sigma: f64,
    pub verdict: Verdict,
}

/// Combine two basis visibilities into the witness
/// W = vis_1 + vis_2 > (sqrt(2)+1)/2 for entangled states.
/// The verdict requires the violation to exceed `threshold_sigma` standard
/// deviations (3 by convention).
pub fn witness(vis_1: VisEstimate, vis_2: VisEstimate, threshold_sigma: f64) -> WitnessResult {
    let w = vis_1.value + vis_2.value;
    let w_sigma = vis_1.sigma.hypot(vis_2.sigma);
    let bound = separable_bound();
    let exceedance_sigma = if w_sigma > 0.0 {
        (w - bound) / w_sigma
    } else if w > bound {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let verdict = if w <= bound {
        Verdict::SeparableCompatible
    } else if exceedance_sigma > threshold_sigma {
        Verdict::Entangled
    } else {
        Verdict::Inconclusive
    };
    WitnessResult {
        vis_1,
        vis_2,
        w,
        w_sigma,
        exceedance_sigma,
        threshold_sigma,
        verdict,
    }
}

/// Witness of the general pure product state
/// (a|l> + b e^{i phi1}|-l>) (x) (c|l> + d e^{i phi2}|-l>), evaluated in
/// closed form from the four projection differences of the two unbiased
/// bases: W = c d (cos phi2 (1 + 2 a b cos phi1) + sin phi2 (1 + 2 a b sin phi1)).
pub fn separable_witness_value(a: f64, c: f64, phi1: f64, phi2: f64) -> f64 {
    let b = (1.0 - a * a).max(0.0).sqrt();
    let d = (1.0 - c * c).max(0.0).sqrt();
    c * d
        * (phi2.cos() * (1.0 + 2.0 * a * b * phi1.cos())
            + phi2.sin() * (1.0 + 2.0 * a * b * phi1.sin()))
}

/// Result of the separable-bound search.
#[derive(Debug, Clone, Copy)]
pub struct BoundSearch {
    pub w_max: f64,
    pub a: f64,
    pub c: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub grid_steps: usize,
}

/// Maximize the product-state witness over a in [0,1], c in [0,1] and the
/// two phases in [0, 2 pi) by exhaustive grid search (`grid_steps` per
/// dimension, >= 32) followed by local grid refinement. Converges to
/// (sqrt(2)+1)/2 at a = c = 1/sqrt(2), phi1 = phi2 = pi/4.
pub fn separable_bound_oracle(grid_steps: usize) -> Result<BoundSearch> {
    if grid_steps < 32 {
        return Err(Error::invalid(
            "steps",
            "grid search needs at least 32 steps",
        ));
    }
    let n = grid_steps;
    let amp: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let ang: Vec<f64> = (0..n)
        .map(|i| std::f64::consts::TAU * i as f64 / n as f64)
        .collect();
    let cos_p: Vec<f64> = ang.iter().map(|p| p.cos()).collect();
    let sin_p: Vec<f64> = ang.iter().map(|p| p.sin()).collect();
    let cd: Vec<f64> = amp
        .iter()
        .map(|&c| c * (1.0 - c * c).max(0.0).sqrt())
        .collect();

    // Per a-row maxima, folded in index order afterwards.
    let row_best = exec::map_indexed(n, |ia| {
        let ab2 = 2.0 * amp[ia] * (1.0 - amp[ia] * amp[ia]).max(0.0).sqrt();
        let mut best = (f64::NEG_INFINITY, 0usize, 0usize, 0usize);
        for i1 in 0..n {
            let x = 1.0 + ab2 * cos_p[i1];
            let y = 1.0 + ab2 * sin_p[i1];
            for i2 in 0..n {
                let inner = cos_p[i2] * x + sin_p[i2] * y;
                // max over the c grid of cd * inner
                let mut m = f64::NEG_INFINITY;
                for &f in &cd {
                    let w = f * inner;
                    if w > m {
                        m = w;
                    }
                }
                if m > best.0 {
                    let ic = cd
                        .iter()
                        .enumerate()
                        .max_by(|a, b| (a.1 * inner).partial_cmp(&(b.1 * inner)).unwrap())
                        .map(|(i, _)| i)
                        .unwrap_or(0);
                    best = (m, i1, i2, ic);
                }
            }
        }
        (best, ia)
    });
    let mut w_max = f64::NEG_INFINITY;
    let mut at = (0.0, 0.0, 0.0, 0.0);
    for ((value, i1, i2, ic), ia) in row_best {
        if value > w_max {
            w_max = value;
            at = (amp[ia], amp[ic], ang[i1], ang[i2]);
        }
    }

    // Local refinement: shrink a 4-D box around the best point.
    let (mut a, mut c, mut p1, mut p2) = at;
    let mut half_a = 1.0 / (n - 1) as f64;
    let mut half_p = std::f64::consts::TAU / n as f64;
    const REFINE_STEPS: usize = 9;
    for _ in 0..40 {
        let mut best = (w_max, a, c, p1, p2);
        for ia in 0..REFINE_STEPS {
            let ca =
                (a - half_a + 2.0 * half_a * ia as f64 / (REFINE_STEPS - 1) as f64).clamp(0.0, 1.0);
            for ic in 0..REFINE_STEPS {
                let cc = (c - half_a + 2.0 * half_a * ic as f64 / (REFINE_STEPS - 1) as f64)
                    .clamp(0.0, 1.0);
                for i1 in 0..REFINE_STEPS {
                    let c1 = p1 - half_p + 2.0 * half_p * i1 as f64 / (REFINE_STEPS - 1) as f64;
                    for i2 in 0..REFINE_STEPS {
                        let c2 = p2 - half_p + 2.0 * half_p * i2 as f64 / (REFINE_STEPS - 1) as f64;
                        let w = separable_witness_value(ca, cc, c1, c2);
                        if w > best.0 {
                            best = (w, ca, cc, c1, c2);
                        }
                    }
                }
            }
        }
        (w_max, a, c, p1, p2) = best;
        half_a *= 0.5;
        half_p *= 0.5;
    }
    Ok(BoundSearch {
        w_max,
        a,
        c,
        phi1: p1.rem_euclid(std::f64::consts::TAU),
        phi2: p2.rem_euclid(std::f64::consts::TAU),
        grid_steps,
    })
}

/// Witness from a 4-row projection table: rows in order
/// (basis-1 parallel, basis-1 orthogonal, basis-2 parallel, basis-2
/// orthogonal), the orthogonal row offset by half the petal period
/// (90/l degrees, or 90 degrees for a polarizer) on exactly one axis.
pub fn witness_from_projection_table(
    table: &CountTable,
    threshold_sigma: f64,
) -> Result<WitnessResult> {
    if table.records.len() != 4 {
        return Err(Error::Fit(format!(
            "projection witness needs exactly 4 rows, got {}",
            table.records.len()
        )));
    }
    let perp_offset = |kind: ArmKind| kind.period_deg() / 2.0;
    let mut visibilities = Vec::with_capacity(2);
    for pair in table.records.chunks_exact(2) {
        let (par, perp) = (pair[0], pair[1]);
        let da = perp.angle_a_deg - par.angle_a_deg;
        let db = perp.angle_b_deg - par.angle_b_deg;
        let tol = 1e-6;
        let ok_on_b = da.abs() < tol && (db.abs() - perp_offset(table.arm_b)).abs() < tol;
        let ok_on_a = db.abs() < tol && (da.abs() - perp_offset(table.arm_a)).abs() < tol;
        if !(ok_on_a || ok_on_b) {
            return Err(Error::Fit(format!(
                "rows at ({}, {}) and ({}, {}) are not a parallel/orthogonal pair",
                par.angle_a_deg, par.angle_b_deg, perp.angle_a_deg, perp.angle_b_deg
            )));
        }
        visibilities.push(visibility_from_projections(
            par.coincidences,
            perp.coincidences,
        )?);
    }
    Ok(witness(visibilities[0], visibilities[1], threshold_sigma))
}
