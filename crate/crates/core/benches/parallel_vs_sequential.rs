//! Parallel (rayon) versus forced-sequential throughput of the heavy
//! kernels. Both paths produce bit-identical results; these benches measure
//! what the data parallelism buys on this machine.
//!
//! Run with `cargo bench -p oam-core`. Without the default `parallel`
//! feature both variants exercise the same sequential code.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use oam_core::counts::{
    separable_bound_oracle, simulate_scan, Arrangement, Axis, CoincidenceModel, DetectorSpec,
    SweepSpec,
};
use oam_core::exec::set_sequential;
use oam_core::mask::SlitMask;
use oam_core::metrology::{monte_carlo_angle_trials, SensingConfig, SensingMode};
use oam_core::slm::{conversion_efficiency, spiral_phase_pattern, SlmSpec};
use oam_core::state::{make_entangled, transfer_arm, Arm};

use std::f64::consts::FRAC_1_SQRT_2;

fn modes() -> [(&'static str, bool); 2] {
    [("parallel", false), ("sequential", true)]
}

fn bench_conversion_efficiency(c: &mut Criterion) {
    let mut group = c.benchmark_group("conversion_efficiency_512px_os2_l50");
    group.sample_size(10);
    let spec = SlmSpec::new(512, 512, 8e-6).unwrap();
    let waist = oam_core::slm::default_waist(&spec, 50);
    for (name, force_seq) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            set_sequential(force_seq);
            b.iter(|| conversion_efficiency(&spec, 50, waist, 2).unwrap());
        });
    }
    set_sequential(false);
    group.finish();
}

fn bench_spiral_render(c: &mut Criterion) {
    let mut group = c.benchmark_group("spiral_phase_full_hd_l300");
    group.sample_size(10);
    let spec = SlmSpec::full_hd();
    for (name, force_seq) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            set_sequential(force_seq);
            b.iter(|| spiral_phase_pattern(&spec, 300, spec.center()).unwrap());
        });
    }
    set_sequential(false);
    group.finish();
}

fn bench_scan_simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_scan_721pts");
    group.sample_size(10);
    let state = {
        let s = make_entangled(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0).unwrap();
        transfer_arm(&transfer_arm(&s, Arm::A, 100).unwrap(), Arm::B, 100).unwrap()
    };
    let mask = SlitMask::new(100, 1.0 / 5.7, 0.0).unwrap();
    let model = CoincidenceModel::new(
        state,
        Arrangement::MaskMask {
            mask_a: mask,
            mask_b: mask,
        },
        0.9799,
    )
    .unwrap();
    let det = DetectorSpec::new(1.3e6, 0.1, 0.1, 100.0, 100.0, 1.4e-9).unwrap();
    let sweep = SweepSpec {
        axis: Axis::B,
        start_deg: 0.0,
        stop_deg: 90.0,
        steps: 721,
        integration_s: 30.0,
        fixed_deg: 0.0,
    };
    for (name, force_seq) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            set_sequential(force_seq);
            b.iter(|| simulate_scan(&model, &det, &sweep, 1).unwrap());
        });
    }
    set_sequential(false);
    group.finish();
}

fn bench_bound_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("separable_bound_64steps");
    group.sample_size(10);
    for (name, force_seq) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            set_sequential(force_seq);
            b.iter(|| separable_bound_oracle(64).unwrap());
        });
    }
    set_sequential(false);
    group.finish();
}

fn bench_metrology_mc(c: &mut Criterion) {
    let mut group = c.benchmark_group("metrology_mc_10k_trials");
    group.sample_size(10);
    let cfg = SensingConfig::new(SensingMode::Oam { l: 300 }, 0.95, 100).unwrap();
    for (name, force_seq) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            set_sequential(force_seq);
            b.iter(|| monte_carlo_angle_trials(&cfg, 0.0, 10_000, 3));
        });
    }
    set_sequential(false);
    group.finish();
}

criterion_group!(
    benches,
    bench_conversion_efficiency,
    bench_spiral_render,
    bench_scan_simulation,
    bench_bound_oracle,
    bench_metrology_mc
);
criterion_main!(benches);
