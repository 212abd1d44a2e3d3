//! Batch commands tying the modules into reproducible experiments. Each
//! command is a plain function returning a serializable report; the binary
//! prints it as text or JSON. Given the same config and seed, every command
//! produces byte-identical outputs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::counts::{
    correct_accidentals, fit_fringe, fit_fringe_free_period, separable_bound,
    separable_bound_oracle, simulate_scan, witness, witness_from_projection_table, Axis,
    CountTable, VisEstimate, WitnessResult,
};
use crate::error::{Error, Result};
use crate::metrology::{
    angular_sensitivity, enhancement_factor, monte_carlo_angle_trials, required_pairs,
    AngleEstimate, SensingConfig, SensingMode,
};
use crate::slm::{
    aliasing_radius, conversion_efficiency, pixels_per_period, spiral_phase_pattern,
    write_phase_pgm,
};

#[derive(Debug, Serialize)]
pub struct RenderReport {
    pub path: PathBuf,
    pub width_px: usize,
    pub height_px: usize,
    pub l: i32,
    /// Radius inside which fewer than 2 pixels sample one 2 pi period.
    pub aliasing_radius_m: f64,
    pub aliasing_radius_px: f64,
    pub aliased: bool,
}

impl RenderReport {
    pub fn print_text(&self) {
        println!(
            "wrote pattern: {} ({}x{}, l = {})",
            self.path.display(),
            self.width_px,
            self.height_px,
            self.l
        );
        if self.aliased {
            println!(
                "aliasing: fewer than 2 pixels per 2 pi period inside r = {:.1} um ({:.1} px)",
                self.aliasing_radius_m * 1e6,
                self.aliasing_radius_px
            );
        } else {
            println!(
                "aliasing: none at pixel scale (limit radius {:.2} um is below one pixel)",
                self.aliasing_radius_m * 1e6
            );
        }
    }
}

pub fn cmd_render_pattern(config: &ExperimentConfig, l: i32, out: &Path) -> Result<RenderReport> {
    if l == 0 {
        return Err(Error::invalid("l", "spiral charge must be nonzero"));
    }
    let spec = config.slm_spec()?;
    let pattern = spiral_phase_pattern(&spec, l, spec.center())?;
    write_phase_pgm(&pattern, out)?;
    let r_alias = aliasing_radius(&spec, l.unsigned_abs());
    Ok(RenderReport {
        path: out.to_path_buf(),
        width_px: spec.width_px,
        height_px: spec.height_px,
        l,
        aliasing_radius_m: r_alias,
        aliasing_radius_px: r_alias / spec.pixel_pitch,
        aliased: r_alias >= spec.pixel_pitch,
    })
}

#[derive(Debug, Serialize)]
pub struct EfficiencyRow {
    pub l: u32,
    pub eta: f64,
    pub pixels_per_period_at_ring: f64,
}

#[derive(Debug, Serialize)]
pub struct EfficiencySweepReport {
    pub rows: Vec<EfficiencyRow>,
    pub oversample: usize,
    pub output: Option<PathBuf>,
}

impl EfficiencySweepReport {
    pub fn csv(&self) -> String {
        let mut text = String::from("l,eta,pixels_per_period_at_ring\n");
        for row in &self.rows {
            text.push_str(&format!(
                "{},{},{}\n",
                row.l, row.eta, row.pixels_per_period_at_ring
            ));
        }
        text
    }

    pub fn print_text(&self) {
        print!("{}", self.csv());
    }
}

pub fn cmd_efficiency_sweep(
    config: &ExperimentConfig,
    orders: &[u32],
    out: Option<&Path>,
) -> Result<EfficiencySweepReport> {
    if orders.is_empty() {
        return Err(Error::invalid("l", "need at least one OAM order"));
    }
    let spec = config.slm_spec()?;
    let mut rows = Vec::with_capacity(orders.len());
    for &l in orders {
        if l == 0 {
            return Err(Error::invalid("l", "OAM order must be >= 1"));
        }
        let waist = config.waist_for(l)?;
        let eta = conversion_efficiency(&spec, l, waist, config.slm.oversample)?;
        let ring = waist * (f64::from(l) / 2.0).sqrt();
        rows.push(EfficiencyRow {
            l,
            eta,
            pixels_per_period_at_ring: pixels_per_period(&spec, l, ring),
        });
    }
    let report = EfficiencySweepReport {
        rows,
        oversample: config.slm.oversample,
        output: out.map(Path::to_path_buf),
    };
    if let Some(path) = out {
        let mut f = BufWriter::new(File::create(path)?);
        f.write_all(report.csv().as_bytes())?;
        f.flush()?;
    }
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub points: usize,
    pub seed: u64,
    pub kind: String,
    pub output: PathBuf,
}

impl SimulateReport {
    pub fn print_text(&self) {
        println!(
            "simulated {} points ({}, seed {}) -> {}",
            self.points,
            self.kind,
            self.seed,
            self.output.display()
        );
    }
}

pub fn cmd_simulate_scan(
    config: &ExperimentConfig,
    seed: u64,
    out: &Path,
) -> Result<SimulateReport> {
    let model = config.model()?;
    let det = config.detector_spec()?;
    let sweep = config.sweep_spec()?;
    let records = simulate_scan(&model, &det, &sweep, seed)?;
    let (arm_a, arm_b) = model.arm_kinds();
    let table = CountTable::new(arm_a, arm_b, records);
    table.write_csv(out)?;
    Ok(SimulateReport {
        points: table.records.len(),
        seed,
        kind: table.kind_label(),
        output: out.to_path_buf(),
    })
}

#[derive(Debug, Serialize)]
pub struct WitnessSummary {
    pub vis_1: f64,
    pub vis_1_sigma: f64,
    pub vis_2: f64,
    pub vis_2_sigma: f64,
    pub w: f64,
    pub w_sigma: f64,
    pub separable_bound: f64,
    pub exceedance_sigma: f64,
    pub threshold_sigma: f64,
    pub verdict: String,
}

impl From<WitnessResult> for WitnessSummary {
    fn from(r: WitnessResult) -> Self {
        WitnessSummary {
            vis_1: r.vis_1.value,
            vis_1_sigma: r.vis_1.sigma,
            vis_2: r.vis_2.value,
            vis_2_sigma: r.vis_2.sigma,
            w: r.w,
            w_sigma: r.w_sigma,
            separable_bound: separable_bound(),
            exceedance_sigma: r.exceedance_sigma,
            threshold_sigma: r.threshold_sigma,
            verdict: format!("{:?}", r.verdict),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FringeSummary {
    pub axis: String,
    pub offset_rate: f64,
    pub visibility: f64,
    pub sigma_visibility: f64,
    pub phase_rad: f64,
    pub period_deg: f64,
    pub free_fit_period_deg: f64,
    pub fringes_over_span: f64,
    pub span_deg: f64,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub mode: String,
    pub rows: usize,
    pub accidental_corrected: bool,
    /// Witness from the two projection pairs (projection mode), or from the
    /// fitted visibility assuming basis symmetry (fringe mode).
    pub witness: WitnessSummary,
    pub fringe: Option<FringeSummary>,
    pub output: Option<PathBuf>,
}

impl AnalyzeReport {
    pub fn print_text(&self) {
        println!("mode: {} ({} rows)", self.mode, self.rows);
        if self.accidental_corrected {
            println!("accidental correction: applied");
        }
        if let Some(f) = &self.fringe {
            println!(
                "fringe on axis {}: offset {:.4}/s, V = {:.4} +- {:.4}, period {:.4} deg",
                f.axis, f.offset_rate, f.visibility, f.sigma_visibility, f.period_deg
            );
            println!(
                "free-period check: {:.4} deg period, {:.2} fringes over {:.2} deg",
                f.free_fit_period_deg, f.fringes_over_span, f.span_deg
            );
        }
        let w = &self.witness;
        println!(
            "visibilities: {:.4} +- {:.4}, {:.4} +- {:.4}",
            w.vis_1, w.vis_1_sigma, w.vis_2, w.vis_2_sigma
        );
        println!(
            "witness W = {:.4} +- {:.4} vs bound {:.4} ({:+.2} sigma): {}",
            w.w, w.w_sigma, w.separable_bound, w.exceedance_sigma, w.verdict
        );
        if let Some(path) = &self.output {
            println!("wrote table: {}", path.display());
        }
    }
}

pub fn cmd_analyze(
    config: &ExperimentConfig,
    input: &Path,
    out: Option<&Path>,
    apply_accidental_correction: bool,
    threshold_sigma: f64,
) -> Result<AnalyzeReport> {
    let mut table = CountTable::read_csv(input)?;
    if apply_accidental_correction {
        table.records = correct_accidentals(&table.records, config.detectors.window_s)?;
    }
    let corrected = table.records.iter().any(|r| r.corrected);
    let report = if table.records.len() == 4 {
        let result = witness_from_projection_table(&table, threshold_sigma)?;
        AnalyzeReport {
            mode: "projections".into(),
            rows: table.records.len(),
            accidental_corrected: corrected,
            witness: result.into(),
            fringe: None,
            output: out.map(Path::to_path_buf),
        }
    } else {
        let axis = detect_swept_axis(&table)?;
        let kind = table.kind_on_axis(axis);
        let fit = fit_fringe(&table.records, axis, kind)?;
        let free = fit_fringe_free_period(&table.records, axis)?;
        // Basis-symmetric estimate: for the ideal transferred state both
        // unbiased bases share the fringe visibility, so W = 2 V. The two
        // terms are the same number; the uncertainty doubles.
        let vis = VisEstimate {
            value: fit.visibility,
            sigma: fit.sigma_visibility,
        };
        let result = witness(vis, vis, threshold_sigma);
        let mut summary: WitnessSummary = result.into();
        summary.w_sigma = 2.0 * fit.sigma_visibility;
        summary.exceedance_sigma = if summary.w_sigma > 0.0 {
            (summary.w - summary.separable_bound) / summary.w_sigma
        } else {
            summary.exceedance_sigma
        };
        AnalyzeReport {
            mode: "fringe".into(),
            rows: table.records.len(),
            accidental_corrected: corrected,
            witness: summary,
            fringe: Some(FringeSummary {
                axis: match axis {
                    Axis::A => "a".into(),
                    Axis::B => "b".into(),
                },
                offset_rate: fit.offset,
                visibility: fit.visibility,
                sigma_visibility: fit.sigma_visibility,
                phase_rad: fit.phase_rad,
                period_deg: fit.period_deg,
                free_fit_period_deg: free.period_deg,
                fringes_over_span: free.fringes_over_span,
                span_deg: free.span_deg,
            }),
            output: out.map(Path::to_path_buf),
        }
    };
    if let Some(path) = out {
        table.write_csv(path)?;
    }
    Ok(report)
}

fn detect_swept_axis(table: &CountTable) -> Result<Axis> {
    let span = |f: fn(&crate::counts::ScanRecord) -> f64| -> f64 {
        let lo = table.records.iter().map(f).fold(f64::MAX, f64::min);
        let hi = table.records.iter().map(f).fold(f64::MIN, f64::max);
        hi - lo
    };
    let span_a = span(|r| r.angle_a_deg);
    let span_b = span(|r| r.angle_b_deg);
    const TOL: f64 = 1e-9;
    match (span_a > TOL, span_b > TOL) {
        (true, false) => Ok(Axis::A),
        (false, true) => Ok(Axis::B),
        (true, true) => Err(Error::Fit(
            "both angle axes vary; fringe analysis needs a single swept axis".into(),
        )),
        (false, false) => Err(Error::Fit("no angle axis varies".into())),
    }
}

#[derive(Debug, Serialize)]
pub struct BoundReport {
    pub grid_steps: usize,
    pub w_max: f64,
    pub analytic_bound: f64,
    pub maximizer_a: f64,
    pub maximizer_c: f64,
    pub maximizer_phi1: f64,
    pub maximizer_phi2: f64,
}

impl BoundReport {
    pub fn print_text(&self) {
        println!(
            "separable bound: {:.6} (analytic {:.6}, grid steps {})",
            self.w_max, self.analytic_bound, self.grid_steps
        );
        println!(
            "maximizer: a = {:.6}, c = {:.6}, phi1 = {:.6}, phi2 = {:.6}",
            self.maximizer_a, self.maximizer_c, self.maximizer_phi1, self.maximizer_phi2
        );
    }
}

pub fn cmd_bound(steps: usize) -> Result<BoundReport> {
    let search = separable_bound_oracle(steps)?;
    Ok(BoundReport {
        grid_steps: search.grid_steps,
        w_max: search.w_max,
        analytic_bound: separable_bound(),
        maximizer_a: search.a,
        maximizer_c: search.c,
        maximizer_phi1: search.phi1,
        maximizer_phi2: search.phi2,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct MetrologyRequest {
    pub mode: SensingMode,
    pub visibility: f64,
    pub pairs: Option<u64>,
    pub target_deg: Option<f64>,
    pub mc_trials: Option<usize>,
    pub mc_angles: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct McSummary {
    pub trials: usize,
    pub angles: usize,
    pub out_of_range: usize,
    pub empirical_std_deg: f64,
    pub predicted_std_deg: f64,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct MetrologyReport {
    pub l_eff: u32,
    pub visibility: f64,
    pub enhancement_over_polarization: f64,
    pub fringe_period_deg: f64,
    pub pairs: Option<u64>,
    pub sensitivity_deg: Option<f64>,
    pub sensitivity_rad: Option<f64>,
    pub target_deg: Option<f64>,
    pub required_pairs: Option<u64>,
    pub mc: Option<McSummary>,
}

impl MetrologyReport {
    pub fn print_text(&self) {
        println!(
            "l_eff = {}, V = {}, enhancement over polarization = {}x, fringe period {:.4} deg",
            self.l_eff, self.visibility, self.enhancement_over_polarization, self.fringe_period_deg
        );
        if let (Some(n), Some(s)) = (self.pairs, self.sensitivity_deg) {
            println!(
                "sensitivity at N = {n}: {s:.6} deg ({:.4e} rad)",
                self.sensitivity_rad.unwrap()
            );
        }
        if let (Some(t), Some(n)) = (self.target_deg, self.required_pairs) {
            println!("pairs required for {t} deg: {n}");
        }
        if let Some(mc) = &self.mc {
            println!(
                "monte-carlo: {} trials at {} angles, std {:.6} deg (predicted {:.6} deg), {} out of range",
                mc.trials, mc.angles, mc.empirical_std_deg, mc.predicted_std_deg, mc.out_of_range
            );
            if let Some(path) = &mc.output {
                println!("wrote estimates: {}", path.display());
            }
        }
    }
}

pub fn cmd_metrology(request: &MetrologyRequest, out: Option<&Path>) -> Result<MetrologyReport> {
    if !(request.visibility > 0.0 && request.visibility <= 1.0) {
        return Err(Error::invalid("visibility", "must be in (0, 1]"));
    }
    let l_eff = request.mode.l_eff();
    if l_eff == 0 {
        return Err(Error::invalid("l", "OAM order must be >= 1"));
    }
    let mut report = MetrologyReport {
        l_eff,
        visibility: request.visibility,
        enhancement_over_polarization: enhancement_factor(l_eff),
        fringe_period_deg: 180.0 / f64::from(l_eff),
        pairs: request.pairs,
        sensitivity_deg: None,
        sensitivity_rad: None,
        target_deg: request.target_deg,
        required_pairs: None,
        mc: None,
    };
    if let Some(pairs) = request.pairs {
        let cfg = SensingConfig::new(request.mode, request.visibility, pairs)?;
        let s = angular_sensitivity(&cfg);
        report.sensitivity_rad = Some(s);
        report.sensitivity_deg = Some(s.to_degrees());
    }
    if let Some(target_deg) = request.target_deg {
        report.required_pairs = Some(required_pairs(
            target_deg.to_radians(),
            l_eff,
            request.visibility,
        )?);
    }
    if let Some(trials) = request.mc_trials {
        let pairs = request
            .pairs
            .ok_or_else(|| Error::invalid("pairs", "monte-carlo mode needs --pairs"))?;
        if request.mc_angles == 0 || trials == 0 {
            return Err(Error::invalid("trials/angles", "must be >= 1"));
        }
        let cfg = SensingConfig::new(request.mode, request.visibility, pairs)?;
        let mc = run_metrology_mc(&cfg, trials, request.mc_angles, request.seed, out)?;
        report.mc = Some(mc);
    }
    Ok(report)
}

/// Estimate `angles` random true angles (uniform within a quarter of the
/// invertible band), `trials / angles` repeats each; emit one CSV row per
/// trial.
fn run_metrology_mc(
    cfg: &SensingConfig,
    trials: usize,
    angles: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<McSummary> {
    use rand::{Rng, SeedableRng};
    let period_rad = cfg.fringe_period_deg().to_radians();
    let mut angle_rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x616e676c65);
    let repeats = (trials / angles).max(1);
    let mut rows: Vec<(usize, f64, AngleEstimate)> = Vec::new();
    let mut out_of_range = 0;
    let mut deviations = Vec::new();
    let mut trial_index = 0usize;
    for a in 0..angles {
        let truth = (angle_rng.gen::<f64>() - 0.5) * period_rad / 8.0;
        let run = monte_carlo_angle_trials(cfg, truth, repeats, seed.wrapping_add(a as u64));
        out_of_range += run.out_of_range;
        for est in &run.estimates {
            rows.push((trial_index, truth, *est));
            deviations.push(est.angle_rad - truth);
            trial_index += 1;
        }
    }
    if deviations.is_empty() {
        return Err(Error::OutOfRange(
            "every monte-carlo trial left the fringe band".into(),
        ));
    }
    let mean: f64 = deviations.iter().sum::<f64>() / deviations.len() as f64;
    let std = (deviations
        .iter()
        .map(|d| (d - mean) * (d - mean))
        .sum::<f64>()
        / deviations.len() as f64)
        .sqrt();
    if let Some(path) = out {
        let mut f = BufWriter::new(File::create(path)?);
        writeln!(f, "trial,true_angle_deg,estimate_deg,sigma_deg")?;
        for (trial, truth, est) in &rows {
            writeln!(
                f,
                "{},{},{},{}",
                trial,
                truth.to_degrees(),
                est.angle_rad.to_degrees(),
                est.sigma_rad.to_degrees()
            )?;
        }
        f.flush()?;
    }
    Ok(McSummary {
        trials: rows.len(),
        angles,
        out_of_range,
        empirical_std_deg: std.to_degrees(),
        predicted_std_deg: angular_sensitivity(cfg).to_degrees(),
        output: out.map(Path::to_path_buf),
    })
}

/// Parse a CLI arm label: an OAM order or "pol".
pub fn parse_sensing_mode(text: &str) -> std::result::Result<SensingMode, String> {
    if text == "pol" || text == "polarization" {
        return Ok(SensingMode::Polarization);
    }
    match text.parse::<u32>() {
        Ok(l) if l >= 1 => Ok(SensingMode::Oam { l }),
        _ => Err(format!(
            "expected a positive OAM order or 'pol', got '{text}'"
        )),
    }
}

/// Arm kind used by default for the metrology command: the OAM arm of the
/// configured transfer if any, else polarization.
pub fn default_sensing_mode(config: &ExperimentConfig) -> SensingMode {
    config
        .transfer
        .l_b
        .oam_order()
        .or(config.transfer.l_a.oam_order())
        .map(|l| SensingMode::Oam { l })
        .unwrap_or(SensingMode::Polarization)
}
