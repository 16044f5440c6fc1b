//! Sequential vs parallel throughput of the data-parallel inner loops:
//! field-map sampling over the mini-trap and a parametric frequency scan.
//! Run with `cargo bench -p minitrap-core`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use minitrap_core::constants::MU_B;
use minitrap_core::dynamics::{
    parametric_scan, IntegrationConfig, ModulationSpec, ThermalSampler,
};
use minitrap_core::field::{line_scan, HarmonicMagnitudeField};
use minitrap_core::geometry::{build_minitrap, MinitrapParams};
use minitrap_core::trap::{Species, SpinState};
use minitrap_core::{ExecMode, Vec3};
use std::f64::consts::PI;
use std::hint::black_box;

fn bench_field_map(c: &mut Criterion) {
    let asm = build_minitrap(&MinitrapParams::default(), 100.0).unwrap();
    let mut group = c.benchmark_group("field_map_400_samples");
    for (mode, name) in [(ExecMode::Sequential, "sequential"), (ExecMode::Parallel, "parallel")] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                let scan = line_scan(
                    black_box(&asm),
                    Vec3::ZERO,
                    Vec3::X,
                    (-2e-3, 2e-3),
                    400,
                    mode,
                )
                .unwrap();
                black_box(scan.samples.len())
            })
        });
    }
    group.finish();
}

fn bench_parametric_scan(c: &mut Criterion) {
    let species = Species::li7();
    let spin = SpinState::li7_stretched();
    let curv = |f_hz: f64| {
        let w = 2.0 * PI * f_hz;
        species.mass * w * w / (spin.moment_factor() * MU_B)
    };
    let trap = HarmonicMagnitudeField {
        center: Vec3::ZERO,
        b_center: 0.4e-4,
        curvatures: Vec3::new(curv(3000.0), curv(3000.0), curv(3000.0)),
    };
    let sampler = ThermalSampler {
        temperature: 5e-6,
        omegas: Vec3::new(2.0 * PI * 3000.0, 2.0 * PI * 3000.0, 2.0 * PI * 3000.0),
        center: Vec3::ZERO,
    };
    let probe = sampler.sample(&species, 8, 3);
    let spec = ModulationSpec { ac_amplitude: 5.0, duration: 0.02, ..Default::default() };
    let grid: Vec<f64> = (0..16).map(|k| 5200.0 + 100.0 * k as f64).collect();
    let icfg = IntegrationConfig {
        dt: (1.0 / 3000.0) / 100.0,
        t_end: spec.duration,
        record_stride: 0,
        ..Default::default()
    };

    let mut group = c.benchmark_group("parametric_scan_16_freqs");
    group.sample_size(10);
    for (mode, name) in [(ExecMode::Sequential, "sequential"), (ExecMode::Parallel, "parallel")] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                let curve = parametric_scan(
                    black_box(&trap),
                    &spec,
                    &grid,
                    &probe,
                    &spin,
                    &species,
                    &icfg,
                    mode,
                )
                .unwrap();
                black_box(curve.len())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_field_map, bench_parametric_scan);
criterion_main!(benches);
