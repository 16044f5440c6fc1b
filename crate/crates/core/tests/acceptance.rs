//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured figures (visible under `--nocapture`). Tolerances are fixed
//! here, not configurable.

use minitrap_core::constants::*;
use minitrap_core::dynamics::{
    parametric_scan, simulate_transfer, IntegrationConfig, ModulationSpec, ParticleState,
    PiecewiseLinear, ThermalSampler, TransferChannel, TransferSetup,
};
use minitrap_core::evaporation::{
    bec_diagnostics, run_sweep, EnsembleState, EvapParams, EvapSchedule, LossModel,
};
use minitrap_core::field::{
    field_at, gradient_at, line_scan, segment_field, FieldSource, HarmonicMagnitudeField,
    SolverConfig,
};
use minitrap_core::geometry::{
    build_circular_loop, build_minitrap, ConductorAssembly, FilamentSegment, MinitrapParams,
};
use minitrap_core::scaling::{power_audit, scale_trap_figures, ScalingParams, TrapFigures};
use minitrap_core::trap::{
    analyze_trap, find_minimum, rf_cut_frequency, solve_bias_for_b0, SearchConfig, Species,
    SpinState, TrapReport,
};
use minitrap_core::{ExecMode, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn li7() -> Species {
    Species::li7()
}

fn stretched() -> SpinState {
    SpinState::li7_stretched()
}

/// Adaptive Simpson quadrature of a vector-valued function; an independent
/// route to the Biot-Savart integral for straight filaments. `tol` is an
/// absolute tolerance on the interval's contribution.
fn simpson_vec(f: &dyn Fn(f64) -> Vec3, a: f64, b: f64, tol: f64, depth: usize) -> Vec3 {
    fn simpson(f: &dyn Fn(f64) -> Vec3, a: f64, b: f64) -> Vec3 {
        let m = 0.5 * (a + b);
        (f(a) + 4.0 * f(m) + f(b)) * ((b - a) / 6.0)
    }
    let m = 0.5 * (a + b);
    let whole = simpson(f, a, b);
    let halves = simpson(f, a, m) + simpson(f, m, b);
    if depth == 0 || (halves - whole).norm() < tol {
        halves + (halves - whole) * (1.0 / 15.0)
    } else {
        simpson_vec(f, a, m, 0.5 * tol, depth - 1) + simpson_vec(f, m, b, 0.5 * tol, depth - 1)
    }
}

fn biot_savart_quadrature(seg: &FilamentSegment, current: f64, p: Vec3) -> Vec3 {
    let dl = seg.end - seg.start;
    let integrand = move |t: f64| {
        let r = p - (seg.start + dl * t);
        let r3 = r.norm().powi(3);
        dl.cross(r) / r3
    };
    // Anchor the tolerance to the integrand scale so the recursion stops at
    // ~1e-12 relative instead of chasing the roundoff floor.
    let scale = integrand(0.5).norm().max(integrand(0.1).norm()).max(1e-30);
    simpson_vec(&integrand, 0.0, 1.0, 1e-12 * scale, 24) * (MU0_OVER_4PI * current)
}

#[test]
fn criterion_1_analytic_oracles() {
    // Finite-segment closed form vs direct quadrature at 10 random probes.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let seg = FilamentSegment::new(
        Vec3::new(-0.03, 0.01, -0.06),
        Vec3::new(0.02, -0.02, 0.05),
        1.0,
    )
    .unwrap();
    let current = 3.7;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let p = Vec3::new(
            rng.gen_range(-0.1..0.1),
            rng.gen_range(0.02f64..0.1) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
            rng.gen_range(-0.1..0.1),
        );
        let closed = segment_field(&seg, current, p);
        let brute = biot_savart_quadrature(&seg, current, p);
        worst = worst.max((closed - brute).norm() / brute.norm());
    }
    assert!(worst < 1e-9, "segment vs quadrature relative error {worst:.2e}");

    // Circular loop against the on-axis closed form.
    let (r, i) = (0.05, 1.0);
    let loop_asm = build_circular_loop(r, Vec3::ZERO, Vec3::Z, 1, i).unwrap();
    let mut worst_loop = 0.0f64;
    for z in [0.0, 0.3 * r, r, 2.5 * r] {
        let b = loop_asm.field(Vec3::new(0.0, 0.0, z)).unwrap();
        let expected = MU_0 * i * r * r / (2.0 * (r * r + z * z).powf(1.5));
        worst_loop = worst_loop.max((b.z - expected).abs() / expected);
    }
    assert!(worst_loop < 1e-4, "loop on-axis relative error {worst_loop:.2e}");

    // div B = 0 and curl B = 0 off the conductors.
    let asm = build_minitrap(&MinitrapParams::default(), 100.0).unwrap();
    let cfg = SolverConfig::default();
    let mut worst_div = 0.0f64;
    let mut worst_curl = 0.0f64;
    for _ in 0..20 {
        let p = Vec3::new(
            rng.gen_range(-1.5e-3..1.5e-3),
            rng.gen_range(-1.5e-3..1.5e-3),
            rng.gen_range(-4e-3..4e-3),
        );
        let g = gradient_at(&asm, p, &cfg).unwrap().grad_b.unwrap();
        worst_div = worst_div.max(g.trace().abs() / g.norm());
        worst_curl = worst_curl.max(g.antisymmetric_residual() / g.norm());
    }
    assert!(worst_div < 1e-6, "div residual {worst_div:.2e}");
    assert!(worst_curl < 1e-6, "curl residual {worst_curl:.2e}");
    println!(
        "criterion 1 PASS: segment oracle {worst:.1e}, loop {worst_loop:.1e}, div {worst_div:.1e}, curl {worst_curl:.1e}"
    );
}

#[test]
fn criterion_2_predicted_field_reconstruction() {
    let asm = build_minitrap(&MinitrapParams::default(), 100.0).unwrap();
    let cfg = SolverConfig::default();
    let search = SearchConfig::default();
    let report = analyze_trap(
        &asm,
        Vec3::ZERO,
        Vec3::ZERO,
        &stretched(),
        &li7(),
        100.0,
        &cfg,
        &search,
    )
    .unwrap();
    let min = find_minimum(&asm, Vec3::ZERO, Vec3::ZERO, &cfg, &search).unwrap();

    // Central component gradients: equal magnitudes at 510 G/cm +/- 25%.
    let g = gradient_at(&asm, min.position, &cfg).unwrap().grad_b.unwrap();
    let gx = g.get(0, 0).abs() * TPM_TO_GPCM;
    let gy = g.get(1, 1).abs() * TPM_TO_GPCM;
    for (label, v) in [("dBx/dx", gx), ("dBy/dy", gy)] {
        assert!(
            (382.5..=637.5).contains(&v),
            "central {label} = {v:.0} G/cm outside 510 +/- 25%"
        );
    }
    assert!((gx - gy).abs() < 0.02 * gx, "central gradients unequal: {gx:.1} vs {gy:.1}");

    // Off-center slopes 1 mm out: ~800 G/cm along x, ~400 G/cm along y.
    let slope = |axis: Vec3| {
        let p = min.position + axis * 1e-3;
        let h = 0.05e-3;
        let hi = field_at(&asm, p + axis * h).unwrap().magnitude;
        let lo = field_at(&asm, p - axis * h).unwrap().magnitude;
        (hi - lo) / (2.0 * h) * TPM_TO_GPCM
    };
    let sx = slope(Vec3::X);
    let sy = slope(Vec3::Y);
    assert!((600.0..=1000.0).contains(&sx), "x slope {sx:.0} G/cm outside 800 +/- 25%");
    assert!((300.0..=500.0).contains(&sy), "y slope {sy:.0} G/cm outside 400 +/- 25%");

    // Predicted axial frequency 67 Hz +/- 20%.
    let f_axial = report.omega_axial / (2.0 * PI);
    assert!((53.6..=80.4).contains(&f_axial), "axial frequency {f_axial:.1} Hz");

    // Depth 70 G +/- 15% with the limiting saddle on the y path.
    assert!(
        (59.5..=80.5).contains(&report.depth_g),
        "depth {:.1} G outside 70 +/- 15%",
        report.depth_g
    );
    let limiting = report
        .saddles
        .iter()
        .filter(|s| s.bounded)
        .min_by(|a, b| a.barrier.partial_cmp(&b.barrier).unwrap())
        .unwrap();
    assert!(
        limiting.direction.contains('y'),
        "limiting saddle on {}, expected y",
        limiting.direction
    );

    // Axial barrier higher on the chip side (-z) than the tip side (+z).
    let scan = line_scan(&asm, min.position, Vec3::Z, (-12e-3, 10e-3), 441, ExecMode::Parallel)
        .unwrap();
    let (mut chip_max, mut tip_max) = (0.0f64, 0.0f64);
    for (s, sample) in &scan.samples {
        if *s < 0.0 {
            chip_max = chip_max.max(sample.magnitude);
        } else {
            tip_max = tip_max.max(sample.magnitude);
        }
    }
    assert!(
        chip_max > tip_max,
        "chip-side barrier {chip_max:.3e} not above tip-side {tip_max:.3e}"
    );
    println!(
        "criterion 2 PASS: B0 {:.1} G, central {gx:.0}/{gy:.0} G/cm, off-center {sx:.0}/{sy:.0} G/cm, axial {f_axial:.1} Hz, depth {:.1} G (limiting {}), chip/tip {:.0}/{:.0} G",
        report.b0_g,
        report.depth_g,
        limiting.direction,
        chip_max * TESLA_TO_GAUSS,
        tip_max * TESLA_TO_GAUSS
    );
}

#[test]
fn criterion_3_spectroscopy_formula_chain() {
    let species = li7();
    // B0 = 0.4 G -> 804.34 MHz within 1%.
    let nu = rf_cut_frequency(0.4, &stretched(), &SpinState::li7_f1_untrapped(), &species)
        .unwrap();
    let offset_mhz = (nu - species.nu_hfs) / 1e6;
    let expected_offset = 804.34 - 803.5;
    assert!(
        (offset_mhz - expected_offset).abs() / expected_offset < 0.01,
        "cut offset {offset_mhz:.4} MHz vs {expected_offset:.4}"
    );

    // 120 G/cm^2 with |2,2> -> 50 +/- 1 Hz. The published 120 G/cm^2 is
    // rounded to two figures (50 Hz implies 124), so the two values agree
    // to 1.6%, not 1%; the formula itself is checked exactly by round-trip.
    let curv = 120.0 * GPCM2_TO_TPM2;
    let omega = (stretched().moment_factor() * MU_B * curv / species.mass).sqrt();
    let f = omega / (2.0 * PI);
    assert!((f - 50.0).abs() <= 1.0, "axial frequency {f:.2} Hz vs 50 +/- 1");
    let curv_back = species.mass * omega * omega / (stretched().moment_factor() * MU_B);
    assert!((curv_back / curv - 1.0).abs() < 1e-12, "frequency-curvature round trip");

    // Bottom-field identity: 0.4 G, 4.4e5 G/cm^2, 120 G/cm^2 -> 420 G/cm.
    let grad = (0.4f64 * (4.4e5 + 0.5 * 120.0)).sqrt();
    assert!((grad - 420.0).abs() / 420.0 < 0.01, "radial gradient {grad:.1} G/cm vs 420");
    println!(
        "criterion 3 PASS: cut offset {offset_mhz:.3} MHz, axial {f:.2} Hz, gradient {grad:.1} G/cm"
    );
}

/// Probe particles confined to the driven axes so each band can use its own
/// time step.
fn band_probe(
    radial: bool,
    omegas: Vec3,
    species: &Species,
    n: usize,
    seed: u64,
) -> Vec<ParticleState> {
    let sampler = ThermalSampler { temperature: 5e-6, omegas, center: Vec3::ZERO };
    sampler
        .sample(species, n, seed)
        .into_iter()
        .map(|p| {
            if radial {
                ParticleState::new(
                    Vec3::new(p.position.x, p.position.y, 0.0),
                    Vec3::new(p.velocity.x, p.velocity.y, 0.0),
                )
            } else {
                ParticleState::new(
                    Vec3::new(0.0, 0.0, p.position.z),
                    Vec3::new(0.0, 0.0, p.velocity.z),
                )
            }
        })
        .collect()
}

#[test]
fn criterion_4_parametric_resonances() {
    let species = li7();
    let spin = stretched();
    let omegas = Vec3::new(2.0 * PI * 3000.0, 2.0 * PI * 3000.0, 2.0 * PI * 50.0);
    let curv = |w: f64| species.mass * w * w / (spin.moment_factor() * MU_B);
    let trap = HarmonicMagnitudeField {
        center: Vec3::ZERO,
        b_center: 0.4e-4,
        curvatures: Vec3::new(curv(omegas.x), curv(omegas.y), curv(omegas.z)),
    };

    // (peak center Hz, radial band?, drive duration s)
    let bands = [
        (6000.0, true, 0.35),
        (3000.0, true, 1.2),
        (100.0, false, 2.0),
        (50.0, false, 10.0),
    ];
    let mut summary = Vec::new();
    for (center, radial, duration) in bands {
        let probe = band_probe(radial, omegas, &species, 6, 42);
        let fast_hz = if radial { 3000.0 } else { 50.0 };
        let spec = ModulationSpec {
            dc_current: 100.0,
            ac_amplitude: 10.0,
            omega: 0.0,
            duration,
        };
        let icfg = IntegrationConfig {
            dt: (1.0 / fast_hz) / 200.0,
            t_end: duration,
            record_stride: 0,
            ..Default::default()
        };
        // 1% grid across +/-3% plus distant background points.
        let mut grid: Vec<f64> = (-3..=3).map(|k| center * (1.0 + 0.01 * k as f64)).collect();
        grid.push(center * 0.90);
        grid.push(center * 1.10);
        let curve = parametric_scan(
            &trap,
            &spec,
            &grid,
            &probe,
            &spin,
            &species,
            &icfg,
            ExecMode::Parallel,
        )
        .unwrap();
        let peak = curve[..7]
            .iter()
            .max_by(|a, b| a.energy_gain.partial_cmp(&b.energy_gain).unwrap())
            .unwrap();
        let background = curve[7..]
            .iter()
            .map(|p| p.energy_gain.abs())
            .fold(0.0f64, f64::max)
            .max(1e-9);
        assert!(
            (peak.frequency_hz - center).abs() <= 0.02 * center,
            "peak at {:.1} Hz, expected {center} +/- 2%",
            peak.frequency_hz
        );
        assert!(
            peak.energy_gain > 5.0 * background,
            "peak/background {:.1} at {center} Hz (peak {:.2e}, bg {background:.2e})",
            peak.energy_gain / background,
            peak.energy_gain
        );
        summary.push(format!(
            "{center} Hz -> {:.1} Hz (contrast {:.0}x)",
            peak.frequency_hz,
            peak.energy_gain / background
        ));
    }
    println!("criterion 4 PASS: {}", summary.join(", "));
}

struct TransferOutcome {
    capture: f64,
    radial_growth_vs_adiabatic: f64,
}

fn run_transfer(reversed: bool, ramp_s: f64) -> TransferOutcome {
    let species = li7();
    let spin = stretched();
    let curv = |w: f64| species.mass * w * w / (spin.moment_factor() * MU_B);
    let w_src = Vec3::new(2.0 * PI * 1500.0, 2.0 * PI * 1500.0, 2.0 * PI * 50.0);
    let w_tgt = Vec3::new(2.0 * PI * 3000.0, 2.0 * PI * 3000.0, 2.0 * PI * 50.0);
    let source = HarmonicMagnitudeField {
        center: Vec3::ZERO,
        b_center: 0.4e-4,
        curvatures: Vec3::new(curv(w_src.x), curv(w_src.y), curv(w_src.z)),
    };
    let target = HarmonicMagnitudeField {
        center: Vec3::ZERO,
        b_center: 0.4e-4,
        curvatures: Vec3::new(curv(w_tgt.x), curv(w_tgt.y), curv(w_tgt.z)),
    };
    let start = if reversed { -1.0 } else { 1.0 };
    let setup = TransferSetup {
        channels: vec![
            TransferChannel {
                source: &source,
                current_scale: PiecewiseLinear::new(vec![(0.0, start), (ramp_s, 0.0)]).unwrap(),
            },
            TransferChannel {
                source: &target,
                current_scale: PiecewiseLinear::new(vec![(0.0, 0.0), (ramp_s, 1.0)]).unwrap(),
            },
        ],
        target_bottom_b: 0.4e-4,
        target_depth_b: 70.0 * GAUSS_TO_TESLA,
        target_omegas: w_tgt,
        ramp_duration: ramp_s,
    };
    let sampler = ThermalSampler { temperature: 20e-6, omegas: w_src, center: Vec3::ZERO };
    let sample = sampler.sample(&species, 200, 7);
    let icfg = IntegrationConfig {
        dt: (1.0 / 3000.0) / 200.0,
        t_end: ramp_s + 3.0 / 3000.0,
        record_stride: 0,
        // Passages below 0.05 G count as Majorana-unsafe and lost.
        b_floor: 5e-6,
        ..Default::default()
    };
    let stats =
        simulate_transfer(&sample, &setup, &spin, &species, &icfg, ExecMode::Parallel).unwrap();

    // Radial oscillation energy against the adiabatic-invariant prediction
    // E_f = E_i (omega_f / omega_i).
    let mu_eff = spin.moment_factor() * MU_B;
    let radial_energy = |p: &ParticleState, mock: &HarmonicMagnitudeField| {
        0.5 * species.mass * (p.velocity.x * p.velocity.x + p.velocity.y * p.velocity.y)
            + 0.5
                * mu_eff
                * (mock.curvatures.x * p.position.x * p.position.x
                    + mock.curvatures.y * p.position.y * p.position.y)
    };
    let e_before: f64 =
        sample.iter().map(|p| radial_energy(p, &source)).sum::<f64>() / sample.len() as f64;
    let survivors: Vec<&ParticleState> = stats
        .final_states
        .iter()
        .zip(stats.escaped.iter())
        .filter(|(_, esc)| !**esc)
        .map(|(p, _)| p)
        .collect();
    let growth = if survivors.is_empty() {
        f64::INFINITY
    } else {
        let e_after: f64 =
            survivors.iter().map(|p| radial_energy(p, &target)).sum::<f64>()
                / survivors.len() as f64;
        let adiabatic_prediction = e_before * (w_tgt.x / w_src.x);
        e_after / adiabatic_prediction - 1.0
    };
    TransferOutcome { capture: stats.capture_fraction, radial_growth_vs_adiabatic: growth }
}

#[test]
fn criterion_5_semi_adiabatic_transfer() {
    let semi = run_transfer(false, 2e-3);
    assert!(
        semi.radial_growth_vs_adiabatic.abs() < 0.10,
        "radial energy departs the adiabatic prediction by {:.1}%",
        semi.radial_growth_vs_adiabatic * 100.0
    );
    assert!(semi.capture > 0.5, "semi-adiabatic capture only {:.2}", semi.capture);

    let reversed = run_transfer(true, 2e-3);
    assert!(
        reversed.capture < 0.1 * semi.capture,
        "reversed-polarity capture {:.3} not below 0.1 x {:.3}",
        reversed.capture,
        semi.capture
    );
    println!(
        "criterion 5 PASS: radial growth {:.1}% vs adiabatic, capture {:.2}, reversed {:.3}",
        semi.radial_growth_vs_adiabatic * 100.0,
        semi.capture,
        reversed.capture
    );
}

fn paper_like_sweep(dt: f64) -> minitrap_core::evaporation::SweepResult {
    let species = li7();
    let trap = TrapReport::harmonic(
        0.4,
        Vec3::new(2.0 * PI * 3000.0, 2.0 * PI * 3000.0, 2.0 * PI * 50.0),
        &stretched(),
        &species,
        100.0,
    );
    let initial = EnsembleState::new(2e8, 1e-3, 0.0).unwrap();
    run_sweep(
        &initial,
        &EvapSchedule::default_sweep(),
        &trap,
        &LossModel::default(),
        &stretched(),
        &SpinState::li7_f1_untrapped(),
        &species,
        &EvapParams { dt, ..EvapParams::default() },
    )
    .unwrap()
}

#[test]
fn criterion_6_evaporation_to_threshold() {
    let result = paper_like_sweep(EvapParams::default().dt);
    let (t_cross, at_cross) =
        result.threshold_crossing.clone().expect("sweep must reach D = 2.612");
    assert!(t_cross <= 35.0, "threshold at {t_cross:.1} s");
    assert!(
        at_cross.n >= 1e4 && at_cross.n <= 1e6,
        "N at threshold = {:.2e} outside [1e4, 1e6]",
        at_cross.n
    );
    let gamma_mid = result.gamma_in_band(1e-3, 1e-1).expect("trajectory spans the mid range");
    assert!(
        (1.0..=3.0).contains(&gamma_mid),
        "mid-range efficiency {gamma_mid:.2} outside [1, 3]"
    );

    // Step halving moves the endpoint by less than 1%.
    let halved = paper_like_sweep(0.5 * EvapParams::default().dt);
    let dn = (halved.final_state.n - result.final_state.n).abs() / result.final_state.n;
    let dt_rel = (halved.final_state.temperature - result.final_state.temperature).abs()
        / result.final_state.temperature;
    assert!(dn < 0.01, "final N moved {:.2}% under step halving", dn * 100.0);
    assert!(dt_rel < 0.01, "final T moved {:.2}% under step halving", dt_rel * 100.0);
    println!(
        "criterion 6 PASS: threshold at {t_cross:.1} s with N = {:.2e}, gamma_mid = {gamma_mid:.2}, step-halving dN = {:.3}%",
        at_cross.n,
        dn * 100.0
    );
}

#[test]
fn criterion_7_threshold_state_consistency() {
    let species = li7();
    let trap = TrapReport::harmonic(
        0.4,
        Vec3::new(2.0 * PI * 3000.0, 2.0 * PI * 3000.0, 2.0 * PI * 50.0),
        &stretched(),
        &species,
        100.0,
    );
    let state = EnsembleState::new(6e4, 1.1e-6, 0.0).unwrap();
    let diag = bec_diagnostics(&state, &trap, &species, 0.575);
    assert!(
        (1.7..=3.9).contains(&diag.phase_space_density),
        "D = {:.2} outside [1.7, 3.9]",
        diag.phase_space_density
    );
    let n_max = diag.n_max_condensate.unwrap();
    assert!(
        (300.0..=1200.0).contains(&n_max),
        "condensate limit {n_max:.0} not within 2x of 600"
    );
    println!(
        "criterion 7 PASS: D = {:.2}, condensate limit {n_max:.0} atoms",
        diag.phase_space_density
    );
}

#[test]
fn criterion_8_scaling_cross_validation() {
    // Uniformly doubled geometry at 4x current (fixed current density).
    let base_params = MinitrapParams::default();
    let scaled_params = MinitrapParams {
        tube_length: base_params.tube_length * 2.0,
        inner_diameter: base_params.inner_diameter * 2.0,
        outer_diameter: base_params.outer_diameter * 2.0,
        slit_widths: (base_params.slit_widths.0 * 2.0, base_params.slit_widths.1 * 2.0),
        slit_stop_margin: base_params.slit_stop_margin * 2.0,
        chip_ring_offset: base_params.chip_ring_offset * 2.0,
        chip_trace_width: base_params.chip_trace_width * 2.0,
        chip_trace_thickness: base_params.chip_trace_thickness * 2.0,
        lead_length: base_params.lead_length * 2.0,
        lead_area: base_params.lead_area * 4.0,
        ..base_params
    };
    let base = build_minitrap(&base_params, 100.0).unwrap();
    let scaled = build_minitrap(&scaled_params, 400.0).unwrap();
    let cfg = SolverConfig::default();
    let search = SearchConfig::default();
    let scaled_search =
        SearchConfig { bounding_box: 10e-3, saddle_range: 28e-3, ..SearchConfig::default() };

    let min_base = find_minimum(&base, Vec3::ZERO, Vec3::ZERO, &cfg, &search).unwrap();
    let min_scaled = find_minimum(&scaled, Vec3::ZERO, Vec3::ZERO, &cfg, &scaled_search).unwrap();
    let grad_at = |asm: &ConductorAssembly, p: Vec3| {
        let g = gradient_at(asm, p, &cfg).unwrap().grad_b.unwrap();
        g.get(0, 0).abs()
    };
    let g_base = grad_at(&base, min_base.position);
    let g_scaled = grad_at(&scaled, min_scaled.position);
    assert!(
        (g_scaled / g_base - 1.0).abs() < 0.02,
        "gradient changed by {:.2}% under fixed-j scaling",
        (g_scaled / g_base - 1.0) * 100.0
    );

    let depth_base = minitrap_core::trap::trap_depth(&base, Vec3::ZERO, &min_base, &search)
        .unwrap()
        .0;
    let depth_scaled =
        minitrap_core::trap::trap_depth(&scaled, Vec3::ZERO, &min_scaled, &scaled_search)
            .unwrap()
            .0;
    let ratio = depth_scaled / depth_base;
    assert!((ratio - 2.0).abs() < 0.10, "depth scaled by {ratio:.3}, expected 2 +/- 5%");

    // Exponent recovery on the scaling table.
    let reference = TrapFigures {
        gradient: 420.0,
        curvature: 120.0,
        depth: 70.0,
        volume: 2.6e-7,
        current: 100.0,
        power: 7.0,
        dt_sink: 10.0,
    };
    let eval = |r: f64, j: f64| {
        scale_trap_figures(&ScalingParams { r, j, r_ref: 1.0, j_ref: 1.0, reference }).unwrap()
    };
    let slope_r =
        (eval(4.0, 1.0).power / eval(2.0, 1.0).power).ln() / 2.0f64.ln();
    let slope_j = (eval(1.0, 4.0).power / eval(1.0, 2.0).power).ln() / 2.0f64.ln();
    assert!((slope_r - 3.0).abs() < 1e-12 && (slope_j - 2.0).abs() < 1e-12);

    // Power audit: ~7 W at 100 A; bar current density ~35 A/mm^2 at 120 A.
    let audit_asm = build_minitrap(
        &MinitrapParams { include_leads: true, ..MinitrapParams::default() },
        100.0,
    )
    .unwrap();
    let audit = power_audit(&audit_asm, 100.0, RHO_COPPER).unwrap();
    let p = audit.total_power_without_leads();
    assert!((3.5..=10.5).contains(&p), "audit total {p:.2} W outside 7 +/- 50%");
    let audit120 = power_audit(&audit_asm, 120.0, RHO_COPPER).unwrap();
    let bar_j = audit120
        .entries
        .iter()
        .find(|e| e.element == "ioffe_bar_1")
        .unwrap()
        .current_density
        * 1e-6;
    assert!((28.0..=42.0).contains(&bar_j), "bar density {bar_j:.1} A/mm^2 outside 35 +/- 20%");
    println!(
        "criterion 8 PASS: gradient ratio {:.4}, depth ratio {ratio:.3}, exponents exact, audit {p:.2} W, bar {bar_j:.1} A/mm^2",
        g_scaled / g_base
    );
}

#[test]
fn criterion_9_determinism() {
    // Identical seeds and configuration must give bit-identical results for
    // every randomized or parallel pipeline.
    let species = li7();
    let spin = stretched();
    let omegas = Vec3::new(2.0 * PI * 3000.0, 2.0 * PI * 3000.0, 2.0 * PI * 50.0);
    let sampler = ThermalSampler { temperature: 10e-6, omegas, center: Vec3::ZERO };
    let a = sampler.sample(&species, 128, 99);
    let b = sampler.sample(&species, 128, 99);
    assert_eq!(a, b);

    let asm = build_minitrap(&MinitrapParams::default(), 100.0).unwrap();
    let scan_par =
        line_scan(&asm, Vec3::ZERO, Vec3::X, (-2e-3, 2e-3), 81, ExecMode::Parallel).unwrap();
    let scan_seq =
        line_scan(&asm, Vec3::ZERO, Vec3::X, (-2e-3, 2e-3), 81, ExecMode::Sequential).unwrap();
    assert_eq!(scan_par.to_csv(), scan_seq.to_csv());

    let run = || paper_like_sweep(EvapParams::default().dt).to_csv();
    assert_eq!(run(), run());

    let curv = |w: f64| species.mass * w * w / (spin.moment_factor() * MU_B);
    let trap = HarmonicMagnitudeField {
        center: Vec3::ZERO,
        b_center: 0.4e-4,
        curvatures: Vec3::new(curv(omegas.x), curv(omegas.y), curv(omegas.z)),
    };
    let probe = band_probe(true, omegas, &species, 4, 5);
    let spec = ModulationSpec { ac_amplitude: 5.0, duration: 0.05, ..Default::default() };
    let icfg = IntegrationConfig { dt: (1.0 / 3000.0) / 100.0, ..Default::default() };
    let scan = |mode| {
        parametric_scan(&trap, &spec, &[5900.0, 6000.0], &probe, &spin, &species, &icfg, mode)
            .unwrap()
            .iter()
            .map(|p| p.energy_gain.to_bits())
            .collect::<Vec<_>>()
    };
    assert_eq!(scan(ExecMode::Parallel), scan(ExecMode::Sequential));
    println!("criterion 9 PASS: sampling, scans, sweeps and parallel maps are bit-identical");
}

/// The Zeeman-spectroscopy consistency figure: the biased trap depth scales
/// linearly with the drive current and lands near the published 66 G when
/// rescaled from a weak-trap run.
#[test]
fn criterion_2b_zeeman_scaled_depth_consistency() {
    let cfg = SolverConfig::default();
    let search = SearchConfig::default();
    let asm36 = build_minitrap(&MinitrapParams::default(), 36.0).unwrap();
    let min36 = find_minimum(&asm36, Vec3::ZERO, Vec3::ZERO, &cfg, &search).unwrap();
    let (depth36, _) =
        minitrap_core::trap::trap_depth(&asm36, Vec3::ZERO, &min36, &search).unwrap();
    let scaled = depth36 * TESLA_TO_GAUSS * (100.0 / 36.0);
    assert!(
        (scaled - 66.0).abs() / 66.0 < 0.15,
        "scaled depth {scaled:.1} G vs the 66 G measurement"
    );
    // And the bias solve reproduces the operating bottom field.
    let bias = solve_bias_for_b0(
        &asm36,
        0.4,
        Vec3::new(0.0, 0.0, -1.0),
        min36.position,
        &cfg,
        &search,
    )
    .unwrap();
    let biased =
        find_minimum(&asm36, bias * GAUSS_TO_TESLA, min36.position, &cfg, &search).unwrap();
    assert!((biased.b0 * TESLA_TO_GAUSS - 0.4).abs() <= 0.01);
    println!("criterion 2b PASS: 36 A depth rescaled to {scaled:.1} G, biased bottom {:.3} G", biased.b0 * TESLA_TO_GAUSS);
}
