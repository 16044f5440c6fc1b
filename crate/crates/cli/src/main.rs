//! Command-line workbench for the mini-trap: geometry export, field maps,
//! trap reports, transfer and parametric-heating simulations, evaporation
//! runs, and scaling/power audits, all driven by one JSON config per run.
//!
//! Exit codes: 0 success, 2 configuration error, 3 physics error (no trap,
//! unreachable bias, singular evaluation point), 4 numeric non-convergence,
//! 1 anything else.

mod config;
mod run;

use clap::{Parser, Subcommand};
use config::{ConfigError, WorkbenchConfig};
use minitrap_core::constants::{GAUSS_TO_TESLA, MU_B, TESLA_TO_GAUSS, TPM_TO_GPCM};
use minitrap_core::dynamics::{
    heating_curve_csv, parametric_scan, simulate_transfer, DynamicsError, IntegrationConfig,
    PiecewiseLinear, ThermalSampler, TransferChannel, TransferSetup,
};
use minitrap_core::evaporation::{
    bec_diagnostics, run_sweep, EnsembleState, EvapError, EvapSchedule,
};
use minitrap_core::field::{
    field_at, gradient_at, line_scan, FieldError, HarmonicMagnitudeField, SolverConfig,
};
use minitrap_core::geometry::{build_minitrap, ConductorAssembly, GeometryError, MinitrapParams};
use minitrap_core::scaling::{
    compression_cost, power_audit, scale_trap_figures, z_trap_comparison, ScalingError,
    ScalingParams,
};
use minitrap_core::trap::{
    analyze_trap, find_minimum, solve_bias_for_b0, SearchConfig, Species, SpinState, TrapError,
    TrapReport,
};
use minitrap_core::{ExecMode, Vec3};
use run::OutputSink;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("trap analysis: {0}")]
    Trap(#[from] TrapError),
    #[error("field evaluation: {0}")]
    Field(#[from] FieldError),
    #[error("dynamics: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("evaporation: {0}")]
    Evap(#[from] EvapError),
    #[error("scaling: {0}")]
    Scaling(#[from] ScalingError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Geometry(_) => 2,
            CliError::Trap(e) => trap_code(e),
            CliError::Field(f) => field_code(f),
            CliError::Dynamics(DynamicsError::Field(f)) => field_code(f),
            CliError::Dynamics(_) => 2,
            CliError::Evap(EvapError::Trap(t)) => trap_code(t),
            CliError::Evap(_) => 2,
            CliError::Scaling(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

fn trap_code(e: &TrapError) -> u8 {
    match e {
        TrapError::MinimumNotConverged { .. } => 4,
        TrapError::Field(f) => field_code(f),
        _ => 3,
    }
}

fn field_code(f: &FieldError) -> u8 {
    match f {
        FieldError::ArcNotConverged { .. } | FieldError::DerivativeNotConverged { .. } => 4,
        _ => 3,
    }
}

#[derive(Parser)]
#[command(
    name = "minitrap",
    version,
    about = "Mini-trap magnetostatics and evaporative-cooling workbench"
)]
struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Random seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for data-parallel sections (overrides the config).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export the conductor geometry as an element table.
    Geom,
    /// Line scans of the field along x, y, z.
    FieldMap,
    /// Locate the minimum, solve the bias, find the saddles, and report.
    Report {
        /// Also compare against the published trap figures.
        #[arg(long)]
        golden: bool,
    },
    /// Semi-adiabatic transfer simulation.
    Transfer,
    /// Parametric-heating frequency scan.
    Scan,
    /// Evaporation sweep toward the BEC threshold.
    Evap,
    /// Size / current-density scaling tables.
    Scale,
    /// Resistive power audit.
    Audit,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let (cfg, cfg_bytes) = match &cli.config {
        Some(path) => WorkbenchConfig::load(path)?,
        None => {
            let cfg = WorkbenchConfig::default();
            let bytes = serde_json::to_vec_pretty(&cfg).expect("default config serializes");
            (cfg, bytes)
        }
    };
    let seed = cli.seed.unwrap_or(cfg.seed);
    let threads = cli.threads.or(cfg.threads);
    let mode = init_parallelism(threads);

    let mut sink = OutputSink::create(&cli.out)?;
    let result = match &cli.command {
        Command::Geom => cmd_geom(&cfg, &mut sink),
        Command::FieldMap => cmd_field_map(&cfg, &mut sink, mode),
        Command::Report { golden } => cmd_report(&cfg, &mut sink, *golden),
        Command::Transfer => cmd_transfer(&cfg, &mut sink, seed, mode),
        Command::Scan => cmd_scan(&cfg, &mut sink, seed, mode),
        Command::Evap => cmd_evap(&cfg, &mut sink),
        Command::Scale => cmd_scale(&cfg, &mut sink),
        Command::Audit => cmd_audit(&cfg, &mut sink),
    };
    match result {
        Ok(()) => {
            sink.finish(&cfg_bytes, seed)?;
            Ok(())
        }
        Err(e) => {
            sink.discard();
            Err(e)
        }
    }
}

fn init_parallelism(threads: Option<usize>) -> ExecMode {
    match threads {
        Some(1) => ExecMode::Sequential,
        Some(n) => {
            // Failure means a global pool exists already, which is fine.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            ExecMode::Parallel
        }
        None => ExecMode::Parallel,
    }
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn omegas_from_hz(freqs_hz: [f64; 3]) -> Vec3 {
    let w = |f: f64| 2.0 * std::f64::consts::PI * f;
    Vec3::new(w(freqs_hz[0]), w(freqs_hz[1]), w(freqs_hz[2]))
}

fn spin_state(t: (u32, i32, f64)) -> Result<SpinState, CliError> {
    Ok(SpinState::new(t.0, t.1, t.2)?)
}

/// Mock potential with the requested oscillation frequencies for the
/// configured spin and species.
fn harmonic_mock(
    freqs_hz: [f64; 3],
    bottom_g: f64,
    spin: &SpinState,
    species: &Species,
) -> HarmonicMagnitudeField {
    let curv = |f_hz: f64| {
        let w = 2.0 * std::f64::consts::PI * f_hz;
        species.mass * w * w / (spin.moment_factor() * MU_B)
    };
    HarmonicMagnitudeField {
        center: Vec3::ZERO,
        b_center: bottom_g * GAUSS_TO_TESLA,
        curvatures: Vec3::new(
            curv(freqs_hz[0]),
            curv(freqs_hz[1]),
            curv(freqs_hz[2]),
        ),
    }
}

fn cmd_geom(cfg: &WorkbenchConfig, sink: &mut OutputSink) -> Result<(), CliError> {
    let asm = build_minitrap(&cfg.geometry.minitrap, cfg.drive_current_a)?;
    sink.write("elements.csv", &asm.to_element_csv())?;
    let (lo, hi) = asm.bounding_box();
    println!(
        "assembly '{}': {} elements in {} groups",
        asm.label(),
        asm.element_count(),
        asm.groups().len()
    );
    println!(
        "bounding box: x [{:.2}, {:.2}] mm, y [{:.2}, {:.2}] mm, z [{:.2}, {:.2}] mm",
        lo.x * 1e3,
        hi.x * 1e3,
        lo.y * 1e3,
        hi.y * 1e3,
        lo.z * 1e3,
        hi.z * 1e3
    );
    Ok(())
}

fn cmd_field_map(
    cfg: &WorkbenchConfig,
    sink: &mut OutputSink,
    mode: ExecMode,
) -> Result<(), CliError> {
    let asm = build_minitrap(&cfg.geometry.minitrap, cfg.drive_current_a)?;
    let origin = vec3(cfg.field_map.origin_m);
    let r = cfg.field_map.half_range_m;
    for (axis, name) in [(Vec3::X, "x"), (Vec3::Y, "y"), (Vec3::Z, "z")] {
        let scan = line_scan(&asm, origin, axis, (-r, r), cfg.field_map.samples, mode)?;
        sink.write(&format!("scan_{name}.csv"), &scan.to_csv())?;
    }
    println!(
        "wrote 3 line scans ({} samples each, +/-{:.1} mm) at I = {} A",
        cfg.field_map.samples,
        r * 1e3,
        cfg.drive_current_a
    );
    Ok(())
}

/// Resolve the configured bias into a field vector (tesla), solving for a
/// target bottom field when requested.
fn resolve_bias(
    cfg: &WorkbenchConfig,
    asm: &ConductorAssembly,
    seed_point: Vec3,
    solver: &SolverConfig,
    search: &SearchConfig,
) -> Result<Vec3, CliError> {
    match cfg.bias.target_b0_g {
        Some(target) => {
            let bias_g =
                solve_bias_for_b0(asm, target, vec3(cfg.bias.axis), seed_point, solver, search)?;
            Ok(bias_g * GAUSS_TO_TESLA)
        }
        None => Ok(vec3(cfg.bias.vector_g) * GAUSS_TO_TESLA),
    }
}

fn cmd_report(cfg: &WorkbenchConfig, sink: &mut OutputSink, golden: bool) -> Result<(), CliError> {
    let asm = build_minitrap(&cfg.geometry.minitrap, cfg.drive_current_a)?;
    let solver = SolverConfig::default();
    let search = SearchConfig::default();
    let spin = spin_state(cfg.spin.initial)?;
    let seed_point = vec3(cfg.report.seed_point_m);
    let bias = resolve_bias(cfg, &asm, seed_point, &solver, &search)?;
    let report = analyze_trap(
        &asm,
        bias,
        seed_point,
        &spin,
        &cfg.species,
        cfg.drive_current_a,
        &solver,
        &search,
    )?;
    sink.write("trap_report.csv", &report.to_csv())?;
    print_report_summary(&report);

    if golden {
        let golden_csv = golden_checks(cfg, &asm, seed_point, &solver, &search)?;
        sink.write("golden.csv", &golden_csv)?;
        print!("{golden_csv}");
    }
    Ok(())
}

fn print_report_summary(report: &TrapReport) {
    println!("trap report at I = {} A:", report.drive_current);
    println!(
        "  B0 = {:.3} G at ({:.3}, {:.3}, {:.3}) mm (applied bias {:.2} G)",
        report.b0_g,
        report.minimum_position.x * 1e3,
        report.minimum_position.y * 1e3,
        report.minimum_position.z * 1e3,
        report.bias_applied_g.norm()
    );
    println!(
        "  depth = {:.1} G over {} bounded saddles",
        report.depth_g,
        report.saddles.iter().filter(|s| s.bounded).count()
    );
    println!(
        "  frequencies: axial {:.1} Hz, radial {:.0} / {:.0} Hz",
        report.omega_axial / (2.0 * std::f64::consts::PI),
        report.omega_radial_x / (2.0 * std::f64::consts::PI),
        report.omega_radial_y / (2.0 * std::f64::consts::PI)
    );
}

/// Published-figure comparisons: the Fig.-4-style targets on the unbiased
/// idealized geometry plus the biased-bottom check. One
/// `check,got,lo,hi,pass` row per figure.
fn golden_checks(
    cfg: &WorkbenchConfig,
    asm: &ConductorAssembly,
    seed_point: Vec3,
    solver: &SolverConfig,
    search: &SearchConfig,
) -> Result<String, CliError> {
    let spin = spin_state(cfg.spin.initial)?;
    let report = analyze_trap(
        asm,
        Vec3::ZERO,
        seed_point,
        &spin,
        &cfg.species,
        cfg.drive_current_a,
        solver,
        search,
    )?;
    let min = find_minimum(asm, Vec3::ZERO, seed_point, solver, search)?;

    // Off-center |B| slope 1 mm from the minimum.
    let off_grad = |axis: Vec3| -> Result<f64, CliError> {
        let p = min.position + axis * 1e-3;
        let h = 0.05e-3;
        let hi = field_at(asm, p + axis * h)?.magnitude;
        let lo = field_at(asm, p - axis * h)?.magnitude;
        Ok((hi - lo) / (2.0 * h) * TPM_TO_GPCM)
    };
    let gx = off_grad(Vec3::X)?;
    let gy = off_grad(Vec3::Y)?;

    // Central component gradients |dBx/dx|, |dBy/dy|.
    let g = gradient_at(asm, min.position, solver)?.grad_b.expect("gradient filled");
    let central_x = g.get(0, 0).abs() * TPM_TO_GPCM;
    let central_y = g.get(1, 1).abs() * TPM_TO_GPCM;

    let limiting = report
        .saddles
        .iter()
        .filter(|s| s.bounded)
        .min_by(|a, b| a.barrier.partial_cmp(&b.barrier).unwrap())
        .map(|s| s.direction.clone())
        .unwrap_or_default();

    let bias_g = solve_bias_for_b0(asm, 0.4, vec3(cfg.bias.axis), min.position, solver, search)?;
    let biased = find_minimum(asm, bias_g * GAUSS_TO_TESLA, min.position, solver, search)?;

    let mut out = String::from("check,got,lo,hi,pass\n");
    let mut row = |name: &str, got: f64, lo: f64, hi: f64| {
        let pass = got >= lo && got <= hi;
        out.push_str(&format!("{name},{got:.6e},{lo:.6e},{hi:.6e},{pass}\n"));
    };
    row("B0_G", report.b0_g, 17.0 * 0.7, 17.0 * 1.3);
    row("central_grad_x_GPCM", central_x, 510.0 * 0.75, 510.0 * 1.25);
    row("central_grad_y_GPCM", central_y, 510.0 * 0.75, 510.0 * 1.25);
    row("offcenter_grad_x_GPCM", gx, 800.0 * 0.75, 800.0 * 1.25);
    row("offcenter_grad_y_GPCM", gy, 400.0 * 0.75, 400.0 * 1.25);
    row(
        "axial_freq_Hz",
        report.omega_axial / (2.0 * std::f64::consts::PI),
        67.0 * 0.8,
        67.0 * 1.2,
    );
    row("depth_G", report.depth_g, 70.0 * 0.85, 70.0 * 1.15);
    row("limiting_saddle_is_y", if limiting.contains('y') { 1.0 } else { 0.0 }, 0.5, 1.5);
    row("biased_B0_G", biased.b0 * TESLA_TO_GAUSS, 0.39, 0.41);
    Ok(out)
}

fn cmd_transfer(
    cfg: &WorkbenchConfig,
    sink: &mut OutputSink,
    seed: u64,
    mode: ExecMode,
) -> Result<(), CliError> {
    let t = &cfg.transfer;
    let spin = spin_state(cfg.spin.initial)?;
    let species = cfg.species;
    let source = harmonic_mock(t.source_frequencies_hz, t.source_bottom_g, &spin, &species);
    let target = harmonic_mock(t.target_frequencies_hz, t.target_bottom_g, &spin, &species);

    let source_start = if t.reversed_polarity { -1.0 } else { 1.0 };
    let ramp_down = PiecewiseLinear::new(vec![(0.0, source_start), (t.ramp_duration_s, 0.0)])?;
    let ramp_up = PiecewiseLinear::new(vec![(0.0, 0.0), (t.ramp_duration_s, 1.0)])?;

    let setup = TransferSetup {
        channels: vec![
            TransferChannel { source: &source, current_scale: ramp_down },
            TransferChannel { source: &target, current_scale: ramp_up },
        ],
        target_bottom_b: t.target_bottom_g * GAUSS_TO_TESLA,
        target_depth_b: t.target_depth_g * GAUSS_TO_TESLA,
        target_omegas: omegas_from_hz(t.target_frequencies_hz),
        ramp_duration: t.ramp_duration_s,
    };

    let sampler = ThermalSampler {
        temperature: t.sample_temperature_k,
        omegas: omegas_from_hz(t.source_frequencies_hz),
        center: Vec3::ZERO,
    };
    let sample = sampler.sample(&species, t.sample_size, seed);

    let fast_hz = t
        .target_frequencies_hz
        .iter()
        .chain(t.source_frequencies_hz.iter())
        .cloned()
        .fold(f64::MIN, f64::max);
    let icfg = IntegrationConfig {
        dt: (1.0 / fast_hz) / t.steps_per_period as f64,
        t_end: t.ramp_duration_s + t.settle_periods / fast_hz,
        record_stride: 0,
        b_floor: t.majorana_floor_g * GAUSS_TO_TESLA,
        ..Default::default()
    };
    let stats = simulate_transfer(&sample, &setup, &spin, &species, &icfg, mode)?;

    let mut csv = String::from("quantity,value\n");
    csv.push_str(&format!("capture_fraction,{:.8e}\n", stats.capture_fraction));
    csv.push_str(&format!("mean_energy_before_J,{:.8e}\n", stats.mean_energy_before));
    csv.push_str(&format!("mean_energy_after_J,{:.8e}\n", stats.mean_energy_after));
    csv.push_str(&format!("adiabaticity_x,{:.8e}\n", stats.adiabaticity.x));
    csv.push_str(&format!("adiabaticity_y,{:.8e}\n", stats.adiabaticity.y));
    csv.push_str(&format!("adiabaticity_z,{:.8e}\n", stats.adiabaticity.z));
    csv.push_str(&format!("n_escaped,{}\n", stats.n_escaped));
    csv.push_str(&format!("n_majorana_lost,{}\n", stats.n_low_field));
    sink.write("transfer_summary.csv", &csv)?;
    println!(
        "transfer: capture {:.1}% ({} escaped), adiabaticity x/y/z = {:.1}/{:.1}/{:.2} periods",
        stats.capture_fraction * 100.0,
        stats.n_escaped,
        stats.adiabaticity.x,
        stats.adiabaticity.y,
        stats.adiabaticity.z
    );
    Ok(())
}

fn cmd_scan(
    cfg: &WorkbenchConfig,
    sink: &mut OutputSink,
    seed: u64,
    mode: ExecMode,
) -> Result<(), CliError> {
    let s = &cfg.scan;
    let spin = spin_state(cfg.spin.initial)?;
    let species = cfg.species;
    let trap = harmonic_mock(s.trap_frequencies_hz, s.trap_bottom_g, &spin, &species);
    let sampler = ThermalSampler {
        temperature: s.probe_temperature_k,
        omegas: omegas_from_hz(s.trap_frequencies_hz),
        center: Vec3::ZERO,
    };
    let probe = sampler.sample(&species, s.probe_size, seed);
    let fast_hz = s.trap_frequencies_hz.iter().cloned().fold(f64::MIN, f64::max);
    let icfg = IntegrationConfig {
        dt: (1.0 / fast_hz) / s.steps_per_period as f64,
        t_end: s.modulation.duration,
        record_stride: 0,
        ..Default::default()
    };
    let curve =
        parametric_scan(&trap, &s.modulation, &s.grid_hz, &probe, &spin, &species, &icfg, mode)?;
    sink.write("heating_curve.csv", &heating_curve_csv(&curve))?;

    // Peaks: local maxima at least 5x the median gain.
    let mut gains: Vec<f64> = curve.iter().map(|p| p.energy_gain).collect();
    gains.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = gains[gains.len() / 2].max(1e-12);
    let mut peaks = Vec::new();
    for i in 0..curve.len() {
        let g = curve[i].energy_gain;
        let left = if i > 0 { curve[i - 1].energy_gain } else { f64::MIN };
        let right = if i + 1 < curve.len() { curve[i + 1].energy_gain } else { f64::MIN };
        if g > left && g >= right && g > 5.0 * median {
            peaks.push(curve[i].frequency_hz);
        }
    }
    println!("parametric scan over {} frequencies:", curve.len());
    if peaks.is_empty() {
        println!("  no resonances above 5x the median gain");
    }
    for p in &peaks {
        println!("  resonance near {p:.1} Hz");
    }
    Ok(())
}

fn cmd_evap(cfg: &WorkbenchConfig, sink: &mut OutputSink) -> Result<(), CliError> {
    let e = &cfg.evap;
    let spin = spin_state(cfg.spin.initial)?;
    let rf_final = spin_state(cfg.spin.rf_final)?;
    let species = cfg.species;
    let trap = match e.trap_frequencies_hz {
        Some(freqs) => TrapReport::harmonic(
            e.trap_b0_g,
            omegas_from_hz(freqs),
            &spin,
            &species,
            cfg.drive_current_a,
        ),
        None => {
            // Analyze the configured geometry at the configured bias.
            let asm = build_minitrap(&cfg.geometry.minitrap, cfg.drive_current_a)?;
            let solver = SolverConfig::default();
            let search = SearchConfig::default();
            let seed_point = vec3(cfg.report.seed_point_m);
            let bias = resolve_bias(cfg, &asm, seed_point, &solver, &search)?;
            analyze_trap(
                &asm,
                bias,
                seed_point,
                &spin,
                &species,
                cfg.drive_current_a,
                &solver,
                &search,
            )?
        }
    };
    let schedule = match &e.schedule {
        Some(points) => EvapSchedule::new(points.clone(), &species)?,
        None => EvapSchedule::default_sweep(),
    };
    let initial = EnsembleState::new(e.initial_n, e.initial_t_k, 0.0)?;
    let result =
        run_sweep(&initial, &schedule, &trap, &e.loss, &spin, &rf_final, &species, &e.params)?;
    sink.write("evap_trajectory.csv", &result.to_csv())?;

    let final_state = result.final_state;
    let diag = bec_diagnostics(&final_state, &trap, &species, e.params.k_c);
    let mut summary = String::from("quantity,value\n");
    match &result.threshold_crossing {
        Some((t, s)) => {
            summary.push_str(&format!("threshold_time_s,{t:.8e}\n"));
            summary.push_str(&format!("threshold_n,{:.8e}\n", s.n));
            summary.push_str(&format!("threshold_t_uK,{:.8e}\n", s.temperature * 1e6));
        }
        None => summary.push_str("threshold_time_s,nan\n"),
    }
    summary.push_str(&format!("final_n,{:.8e}\n", final_state.n));
    summary.push_str(&format!("final_t_uK,{:.8e}\n", final_state.temperature * 1e6));
    summary.push_str(&format!("final_d,{:.8e}\n", diag.phase_space_density));
    summary.push_str(&format!("overall_gamma,{:.8e}\n", result.overall_gamma()));
    if let Some(n_max) = diag.n_max_condensate {
        summary.push_str(&format!("n_max_condensate,{n_max:.8e}\n"));
    }
    sink.write("evap_summary.csv", &summary)?;

    println!(
        "evaporation: N {:.2e} -> {:.2e}, T {:.1} uK -> {:.2} uK, D -> {:.2}",
        e.initial_n,
        final_state.n,
        e.initial_t_k * 1e6,
        final_state.temperature * 1e6,
        diag.phase_space_density
    );
    match &result.threshold_crossing {
        Some((t, s)) => println!("  BEC threshold at t = {t:.1} s with N = {:.2e}", s.n),
        None => println!("  BEC threshold not reached"),
    }
    println!("  overall efficiency gamma = {:.2}", result.overall_gamma());
    Ok(())
}

fn cmd_scale(cfg: &WorkbenchConfig, sink: &mut OutputSink) -> Result<(), CliError> {
    let s = &cfg.scale;
    let figures = scale_trap_figures(&ScalingParams {
        r: s.r_m,
        j: s.j_a_per_m2,
        r_ref: s.r_ref_m,
        j_ref: s.j_ref_a_per_m2,
        reference: s.reference,
    })?;
    let (current_factor, power_factor) = compression_cost(s.compression_n)?;
    let z = z_trap_comparison(figures.gradient, figures.depth, s.apply_z_trap_factors);

    let mut csv = String::from("quantity,value,unit\n");
    csv.push_str(&format!("gradient,{:.8e},G/cm\n", figures.gradient));
    csv.push_str(&format!("curvature,{:.8e},G/cm^2\n", figures.curvature));
    csv.push_str(&format!("depth,{:.8e},G\n", figures.depth));
    csv.push_str(&format!("volume,{:.8e},m^3\n", figures.volume));
    csv.push_str(&format!("current,{:.8e},A\n", figures.current));
    csv.push_str(&format!("power,{:.8e},W\n", figures.power));
    csv.push_str(&format!("dt_sink,{:.8e},K\n", figures.dt_sink));
    csv.push_str(&format!("compression_current_factor,{current_factor:.8e},\n"));
    csv.push_str(&format!("compression_power_factor,{power_factor:.8e},\n"));
    csv.push_str(&format!("z_trap_radial_gradient,{:.8e},G/cm\n", z.radial_gradient));
    csv.push_str(&format!("z_trap_axial_depth,{:.8e},G\n", z.axial_depth));
    sink.write("scale.csv", &csv)?;
    println!(
        "scaled to r = {:.2} mm, j = {:.1} A/mm^2: gradient {:.0} G/cm, depth {:.0} G, power {:.2} W",
        s.r_m * 1e3,
        s.j_a_per_m2 * 1e-6,
        figures.gradient,
        figures.depth,
        figures.power
    );
    println!(
        "compression x{} costs current x{:.0}, power x{:.0}",
        s.compression_n, current_factor, power_factor
    );
    Ok(())
}

fn cmd_audit(cfg: &WorkbenchConfig, sink: &mut OutputSink) -> Result<(), CliError> {
    let params = MinitrapParams { include_leads: true, ..cfg.geometry.minitrap };
    let asm = build_minitrap(&params, cfg.drive_current_a)?;
    for &current in &cfg.audit.currents_a {
        let audit = power_audit(&asm, current, cfg.audit.resistivity_ohm_m)?;
        sink.write(&format!("audit_{current:.0}A.csv"), &audit.to_csv())?;
        println!(
            "audit at {current} A: total {:.2} W with leads, {:.2} W without",
            audit.total_power,
            audit.total_power_without_leads()
        );
    }
    Ok(())
}
