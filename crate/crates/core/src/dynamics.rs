//! Single-particle motion of magnetically trapped atoms through static and
//! time-varying currents: adiabatic-following force F = -mF gF muB grad|B|,
//! fixed-step 4th-order integration, semi-adiabatic transfer statistics, and
//! parametric-heating frequency scans.
//!
//! The spin follows the field adiabatically; passages through low-|B|
//! regions are flagged on the trajectory, not simulated as spin flips.

use crate::constants::{K_B, MU_B};
use crate::field::{FieldError, FieldSource};
use crate::trap::{Species, SpinState};
use crate::vec3::Vec3;
use crate::{map_indexed, ExecMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("ramp breakpoints must be strictly increasing and finite")]
    BadSchedule,
    #[error("modulation amplitude {ac} A must be below the DC current {dc} A")]
    BadModulation { ac: f64, dc: f64 },
    #[error("integration needs dt > 0 and t_end > 0, got dt = {dt}, t_end = {t_end}")]
    BadTimeStep { dt: f64, t_end: f64 },
    #[error("ensemble is empty")]
    EmptyEnsemble,
}

/// Point particle in phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl ParticleState {
    pub fn new(position: Vec3, velocity: Vec3) -> Self {
        ParticleState { position, velocity }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.velocity.is_finite()
    }
}

/// Piecewise-linear scalar of time; clamps to the end values outside the
/// breakpoint range.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PiecewiseLinear {
    /// (t, value) breakpoints, strictly increasing in t.
    pub points: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, DynamicsError> {
        if points.is_empty() {
            return Err(DynamicsError::BadSchedule);
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(DynamicsError::BadSchedule);
            }
        }
        if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(DynamicsError::BadSchedule);
        }
        Ok(PiecewiseLinear { points })
    }

    pub fn constant(value: f64) -> Self {
        PiecewiseLinear { points: vec![(0.0, value)] }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let pts = &self.points;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        if t >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let idx = pts.partition_point(|(tp, _)| *tp <= t);
        let (t0, v0) = pts[idx - 1];
        let (t1, v1) = pts[idx];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    pub fn duration(&self) -> f64 {
        self.points.last().unwrap().0 - self.points[0].0
    }
}

/// Current-ramp schedule: per-assembly piecewise-linear currents (A).
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RampSchedule {
    pub channels: Vec<(String, PiecewiseLinear)>,
    pub duration: f64,
}

/// Sinusoidal current modulation on top of a DC drive.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ModulationSpec {
    /// DC trap current (A).
    pub dc_current: f64,
    /// Audio-frequency amplitude summed onto the DC current (A).
    pub ac_amplitude: f64,
    /// Drive angular frequency (rad/s).
    pub omega: f64,
    /// Excitation interval (s).
    pub duration: f64,
}

impl Default for ModulationSpec {
    fn default() -> Self {
        ModulationSpec { dc_current: 100.0, ac_amplitude: 3.0, omega: 0.0, duration: 10.0 }
    }
}

impl ModulationSpec {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.ac_amplitude >= self.dc_current {
            return Err(DynamicsError::BadModulation {
                ac: self.ac_amplitude,
                dc: self.dc_current,
            });
        }
        Ok(())
    }
}

/// A field source whose drive current is rescaled over time. The composite
/// field is sum_k c_k(t) * B_k(r) with c_k the dimensionless current scale.
pub struct ScheduledField<'a> {
    channels: Vec<(&'a dyn FieldSource, ScaleFn<'a>)>,
}

enum ScaleFn<'a> {
    Ramp(PiecewiseLinear),
    Func(Box<dyn Fn(f64) -> f64 + Sync + 'a>),
}

impl ScaleFn<'_> {
    fn at(&self, t: f64) -> f64 {
        match self {
            ScaleFn::Ramp(p) => p.value_at(t),
            ScaleFn::Func(f) => f(t),
        }
    }
}

impl<'a> ScheduledField<'a> {
    pub fn new() -> Self {
        ScheduledField { channels: Vec::new() }
    }

    pub fn with_ramp(mut self, source: &'a dyn FieldSource, scale: PiecewiseLinear) -> Self {
        self.channels.push((source, ScaleFn::Ramp(scale)));
        self
    }

    pub fn with_modulation(
        mut self,
        source: &'a dyn FieldSource,
        spec: &ModulationSpec,
    ) -> Self {
        let (dc, ac, omega) = (spec.dc_current, spec.ac_amplitude, spec.omega);
        self.channels.push((
            source,
            ScaleFn::Func(Box::new(move |t| 1.0 + ac / dc * (omega * t).sin())),
        ));
        self
    }

    pub fn with_static(mut self, source: &'a dyn FieldSource) -> Self {
        self.channels.push((source, ScaleFn::Ramp(PiecewiseLinear::constant(1.0))));
        self
    }

    fn field(&self, p: Vec3, t: f64) -> Result<Vec3, FieldError> {
        let mut b = Vec3::ZERO;
        for (src, scale) in &self.channels {
            b += src.field(p)? * scale.at(t);
        }
        Ok(b)
    }

    fn magnitude(&self, p: Vec3, t: f64) -> Result<f64, FieldError> {
        Ok(self.field(p, t)?.norm())
    }

    /// grad |B|(p, t): analytic when a single channel's source provides it,
    /// otherwise central differences with step `h`.
    fn grad_magnitude(&self, p: Vec3, t: f64, h: f64) -> Result<Vec3, FieldError> {
        if self.channels.len() == 1 {
            let (src, scale) = &self.channels[0];
            if let Some(g) = src.grad_magnitude_analytic(p) {
                // |c B| has gradient |c| grad|B|.
                return Ok(g * scale.at(t).abs());
            }
        }
        let mut g = Vec3::ZERO;
        for (i, axis) in [Vec3::X, Vec3::Y, Vec3::Z].iter().enumerate() {
            let hi = self.magnitude(p + *axis * h, t)?;
            let lo = self.magnitude(p - *axis * h, t)?;
            let d = (hi - lo) / (2.0 * h);
            match i {
                0 => g.x = d,
                1 => g.y = d,
                _ => g.z = d,
            }
        }
        Ok(g)
    }
}

impl Default for ScheduledField<'_> {
    fn default() -> Self {
        Self::new()
    }
}

/// Fixed-step integration controls.
#[derive(Debug, Clone, Copy)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Record every n-th step (0 records only endpoints).
    pub record_stride: usize,
    /// Particles beyond this distance from `box_center` are flagged escaped
    /// and integration stops for them.
    pub bounding_box: f64,
    pub box_center: Vec3,
    /// |B| floor below which the trajectory gets a low-field warning (T).
    pub b_floor: f64,
    /// Central-difference step for numeric forces (m).
    pub force_step: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            dt: 1e-6,
            t_end: 1e-2,
            record_stride: 0,
            bounding_box: 10e-3,
            box_center: Vec3::ZERO,
            b_floor: 1e-8,
            force_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrajectorySample {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    /// Total energy 0.5 m v^2 + mF gF muB |B| (J).
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub final_state: ParticleState,
    /// First time |B| dropped below the floor, if it did.
    pub low_field_time: Option<f64>,
    /// Exit time if the particle left the bounding box.
    pub escape_time: Option<f64>,
}

impl Trajectory {
    pub fn final_energy(&self) -> f64 {
        self.samples.last().map(|s| s.energy).unwrap_or(f64::NAN)
    }

    pub fn initial_energy(&self) -> f64 {
        self.samples.first().map(|s| s.energy).unwrap_or(f64::NAN)
    }

    /// CSV rows `t_s,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,E_J`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,E_J\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
                s.t,
                s.position.x,
                s.position.y,
                s.position.z,
                s.velocity.x,
                s.velocity.y,
                s.velocity.z,
                s.energy
            ));
        }
        out
    }
}

/// Integrate one particle with classical RK4 under
/// x'' = -(mF gF muB / m) grad|B|(x, t).
pub fn integrate(
    particle: &ParticleState,
    field: &ScheduledField,
    spin: &SpinState,
    species: &Species,
    cfg: &IntegrationConfig,
) -> Result<Trajectory, DynamicsError> {
    if !(cfg.dt > 0.0) || !(cfg.t_end > 0.0) {
        return Err(DynamicsError::BadTimeStep { dt: cfg.dt, t_end: cfg.t_end });
    }
    let mu_eff = spin.moment_factor() * MU_B;
    let acc_scale = -mu_eff / species.mass;
    let mut low_field_time = None;
    let mut escape_time = None;

    let accel = |p: Vec3, t: f64| -> Result<Vec3, FieldError> {
        Ok(field.grad_magnitude(p, t, cfg.force_step)? * acc_scale)
    };
    let energy = |s: &ParticleState, t: f64| -> Result<f64, FieldError> {
        Ok(0.5 * species.mass * s.velocity.norm_sq() + mu_eff * field.magnitude(s.position, t)?)
    };

    let n_steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
    let mut state = *particle;
    let mut samples = Vec::new();
    samples.push(TrajectorySample {
        t: 0.0,
        position: state.position,
        velocity: state.velocity,
        energy: energy(&state, 0.0)?,
    });
    for step in 0..n_steps {
        let t = step as f64 * cfg.dt;
        let dt = cfg.dt;

        if field.magnitude(state.position, t)? < cfg.b_floor && low_field_time.is_none() {
            low_field_time = Some(t);
        }

        let k1x = state.velocity;
        let k1v = accel(state.position, t)?;
        let k2x = state.velocity + k1v * (0.5 * dt);
        let k2v = accel(state.position + k1x * (0.5 * dt), t + 0.5 * dt)?;
        let k3x = state.velocity + k2v * (0.5 * dt);
        let k3v = accel(state.position + k2x * (0.5 * dt), t + 0.5 * dt)?;
        let k4x = state.velocity + k3v * dt;
        let k4v = accel(state.position + k3x * dt, t + dt)?;

        state.position += (k1x + (k2x + k3x) * 2.0 + k4x) * (dt / 6.0);
        state.velocity += (k1v + (k2v + k3v) * 2.0 + k4v) * (dt / 6.0);

        let t_next = t + dt;
        if (state.position - cfg.box_center).norm() > cfg.bounding_box {
            escape_time = Some(t_next);
            samples.push(TrajectorySample {
                t: t_next,
                position: state.position,
                velocity: state.velocity,
                energy: energy(&state, t_next)?,
            });
            break;
        }
        let record = cfg.record_stride > 0 && (step + 1) % cfg.record_stride == 0;
        if record || step + 1 == n_steps {
            samples.push(TrajectorySample {
                t: t_next,
                position: state.position,
                velocity: state.velocity,
                energy: energy(&state, t_next)?,
            });
        }
    }
    Ok(Trajectory { samples, final_state: state, low_field_time, escape_time })
}

/// Kahan-compensated sum; keeps ensemble reductions reproducible and
/// independent of how the per-particle work was scheduled.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Gaussian thermal sample in the harmonic approximation of a trap with the
/// given oscillation frequencies. Identical seeds give identical samples.
#[derive(Debug, Clone, Copy)]
pub struct ThermalSampler {
    pub temperature: f64,
    /// (omega_x, omega_y, omega_z) in rad/s.
    pub omegas: Vec3,
    pub center: Vec3,
}

impl ThermalSampler {
    pub fn sample(&self, species: &Species, n: usize, seed: u64) -> Vec<ParticleState> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v_sigma = (K_B * self.temperature / species.mass).sqrt();
        let normal = move |rng: &mut ChaCha8Rng| -> f64 {
            // Box-Muller on explicitly drawn uniforms.
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        (0..n)
            .map(|_| {
                let pos = Vec3::new(
                    normal(&mut rng) * v_sigma / self.omegas.x,
                    normal(&mut rng) * v_sigma / self.omegas.y,
                    normal(&mut rng) * v_sigma / self.omegas.z,
                ) + self.center;
                let vel = Vec3::new(
                    normal(&mut rng) * v_sigma,
                    normal(&mut rng) * v_sigma,
                    normal(&mut rng) * v_sigma,
                );
                ParticleState::new(pos, vel)
            })
            .collect()
    }
}

/// One time-varying channel of a transfer system.
pub struct TransferChannel<'a> {
    pub source: &'a dyn FieldSource,
    pub current_scale: PiecewiseLinear,
}

/// Transfer problem: channels ramping between a source trap and the target
/// trap, plus the target's figures used for capture accounting.
pub struct TransferSetup<'a> {
    pub channels: Vec<TransferChannel<'a>>,
    /// |B| at the target minimum at final currents (T).
    pub target_bottom_b: f64,
    /// Target depth above the bottom (T).
    pub target_depth_b: f64,
    /// Target trap frequencies (rad/s) for the adiabaticity figures.
    pub target_omegas: Vec3,
    /// Ramp duration (s).
    pub ramp_duration: f64,
}

#[derive(Debug, Clone)]
pub struct TransferStats {
    /// Fraction of particles bound (E below the target depth) at the end.
    pub capture_fraction: f64,
    /// Mean energy above the trap bottom before the ramp (J).
    pub mean_energy_before: f64,
    /// Mean energy above the target bottom after the ramp, captured
    /// particles only (J).
    pub mean_energy_after: f64,
    /// Ramp duration over oscillation period, per axis (x, y, z).
    pub adiabaticity: Vec3,
    pub n_escaped: usize,
    pub n_low_field: usize,
    /// Final phase-space state per input particle (escaped ones hold the
    /// state at exit).
    pub final_states: Vec<ParticleState>,
    pub escaped: Vec<bool>,
}

/// Integrate an ensemble through a current ramp and score the capture.
pub fn simulate_transfer(
    sample: &[ParticleState],
    setup: &TransferSetup,
    spin: &SpinState,
    species: &Species,
    cfg: &IntegrationConfig,
    mode: ExecMode,
) -> Result<TransferStats, DynamicsError> {
    if sample.is_empty() {
        return Err(DynamicsError::EmptyEnsemble);
    }
    let mu_eff = spin.moment_factor() * MU_B;
    let mut field = ScheduledField::new();
    for ch in &setup.channels {
        field = field.with_ramp(ch.source, ch.current_scale.clone());
    }

    let results = map_indexed(mode, sample, |p| integrate(p, &field, spin, species, cfg));
    let mut trajectories = Vec::with_capacity(results.len());
    for r in results {
        trajectories.push(r?);
    }

    let e0_bottom = mu_eff
        * field
            .magnitude(Vec3::ZERO, 0.0)
            .unwrap_or(0.0);
    let before: Vec<f64> =
        trajectories.iter().map(|t| t.initial_energy() - e0_bottom).collect();
    let cap_threshold = mu_eff * (setup.target_bottom_b + setup.target_depth_b);
    let mut captured_energies = Vec::new();
    let mut n_escaped = 0;
    let mut n_low_field = 0;
    for t in &trajectories {
        if t.escape_time.is_some() {
            n_escaped += 1;
            continue;
        }
        // A passage through the low-field region leaves the spin state
        // undefined (Majorana-unsafe); such atoms count as lost.
        if t.low_field_time.is_some() {
            n_low_field += 1;
            continue;
        }
        let e = t.final_energy();
        if e < cap_threshold {
            captured_energies.push(e - mu_eff * setup.target_bottom_b);
        }
    }
    let capture_fraction = captured_energies.len() as f64 / sample.len() as f64;
    let mean_before = compensated_sum(before.iter().copied()) / before.len() as f64;
    let mean_after = if captured_energies.is_empty() {
        f64::NAN
    } else {
        compensated_sum(captured_energies.iter().copied()) / captured_energies.len() as f64
    };
    let per = 2.0 * std::f64::consts::PI;
    Ok(TransferStats {
        capture_fraction,
        mean_energy_before: mean_before,
        mean_energy_after: mean_after,
        adiabaticity: Vec3::new(
            setup.ramp_duration * setup.target_omegas.x / per,
            setup.ramp_duration * setup.target_omegas.y / per,
            setup.ramp_duration * setup.target_omegas.z / per,
        ),
        n_escaped,
        n_low_field,
        final_states: trajectories.iter().map(|t| t.final_state).collect(),
        escaped: trajectories.iter().map(|t| t.escape_time.is_some()).collect(),
    })
}

/// One point of a parametric-heating curve.
#[derive(Debug, Clone, Copy)]
pub struct HeatingPoint {
    pub frequency_hz: f64,
    /// Mean relative energy gain (E_final - E_initial) / E_initial, with
    /// energies measured above the instantaneous trap bottom.
    pub energy_gain: f64,
}

/// Drive the trap current with I_dc + I_ac sin(omega t) at each frequency of
/// `grid_hz` and report the ensemble-averaged relative energy gain.
pub fn parametric_scan(
    source: &dyn FieldSource,
    spec: &ModulationSpec,
    grid_hz: &[f64],
    probe: &[ParticleState],
    spin: &SpinState,
    species: &Species,
    cfg: &IntegrationConfig,
    mode: ExecMode,
) -> Result<Vec<HeatingPoint>, DynamicsError> {
    spec.validate()?;
    if probe.is_empty() {
        return Err(DynamicsError::EmptyEnsemble);
    }
    let mu_eff = spin.moment_factor() * MU_B;
    let results = map_indexed(mode, grid_hz, |&f_hz| -> Result<HeatingPoint, DynamicsError> {
        let spec_f = ModulationSpec { omega: 2.0 * std::f64::consts::PI * f_hz, ..*spec };
        let field = ScheduledField::new().with_modulation(source, &spec_f);
        let run_cfg = IntegrationConfig { t_end: spec.duration, ..*cfg };
        let mut gains = Vec::with_capacity(probe.len());
        for p in probe {
            let traj = integrate(p, &field, spin, species, &run_cfg)?;
            // Energy above the instantaneous bottom; the bottom's offset
            // scales with the drive.
            let scale0 = 1.0;
            let scale1 = 1.0 + spec_f.ac_amplitude / spec_f.dc_current
                * (spec_f.omega * run_cfg.t_end).sin();
            let bottom0 = mu_eff * source.field(cfg.box_center)?.norm() * scale0;
            let bottom1 = mu_eff * source.field(cfg.box_center)?.norm() * scale1;
            let e0 = traj.initial_energy() - bottom0;
            let e1 = traj.final_energy() - bottom1;
            gains.push(e1 / e0 - 1.0);
        }
        Ok(HeatingPoint {
            frequency_hz: f_hz,
            energy_gain: compensated_sum(gains.iter().copied()) / gains.len() as f64,
        })
    });
    results.into_iter().collect()
}

/// CSV for a heating curve: `freq_Hz,energy_gain`.
pub fn heating_curve_csv(points: &[HeatingPoint]) -> String {
    let mut out = String::from("freq_Hz,energy_gain\n");
    for p in points {
        out.push_str(&format!("{:.8e},{:.8e}\n", p.frequency_hz, p.energy_gain));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::HarmonicMagnitudeField;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Mock trap with the given frequencies (rad/s) for 7Li |2,2>.
    fn mock_trap(omega_x: f64, omega_y: f64, omega_z: f64) -> HarmonicMagnitudeField {
        let spin = SpinState::li7_stretched();
        let species = Species::li7();
        let curv = |w: f64| species.mass * w * w / (spin.moment_factor() * MU_B);
        HarmonicMagnitudeField {
            center: Vec3::ZERO,
            b_center: 0.4e-4,
            curvatures: Vec3::new(curv(omega_x), curv(omega_y), curv(omega_z)),
        }
    }

    fn axial_50hz_trap() -> HarmonicMagnitudeField {
        let w = 2.0 * PI * 50.0;
        mock_trap(w, w, w)
    }

    #[test]
    fn oscillation_period_matches_frequency() {
        let trap = axial_50hz_trap();
        let spin = SpinState::li7_stretched();
        let species = Species::li7();
        let field = ScheduledField::new().with_static(&trap);
        let cfg = IntegrationConfig {
            dt: (1.0 / 50.0) / 200.0,
            t_end: 10.0 / 50.0,
            record_stride: 1,
            ..IntegrationConfig::default()
        };
        let start = ParticleState::new(Vec3::new(0.0, 0.0, 100e-6), Vec3::ZERO);
        let traj = integrate(&start, &field, &spin, &species, &cfg).unwrap();
        // Count upward zero crossings of z(t).
        let mut crossings = Vec::new();
        for w in traj.samples.windows(2) {
            if w[0].position.z < 0.0 && w[1].position.z >= 0.0 {
                let frac = -w[0].position.z / (w[1].position.z - w[0].position.z);
                crossings.push(w[0].t + frac * (w[1].t - w[0].t));
            }
        }
        assert!(crossings.len() >= 9, "found {} crossings", crossings.len());
        let period =
            (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
        assert_relative_eq!(period, 0.02, max_relative = 1e-3);
    }

    #[test]
    fn static_field_energy_drift_is_fourth_order() {
        let trap = axial_50hz_trap();
        let spin = SpinState::li7_stretched();
        let species = Species::li7();
        let field = ScheduledField::new().with_static(&trap);
        let period = 1.0 / 50.0;
        let drift_at = |dt: f64| {
            let cfg = IntegrationConfig {
                dt,
                t_end: 100.0 * period,
                record_stride: 0,
                ..IntegrationConfig::default()
            };
            let start = ParticleState::new(
                Vec3::new(50e-6, -30e-6, 100e-6),
                Vec3::new(0.01, 0.0, 0.0),
            );
            let traj = integrate(&start, &field, &spin, &species, &cfg).unwrap();
            // Drift relative to the oscillation energy above the bottom.
            let mu_eff = spin.moment_factor() * MU_B;
            let e_b = mu_eff * trap.b_center;
            ((traj.final_energy() - traj.initial_energy()) / (traj.initial_energy() - e_b)).abs()
        };
        let d1 = drift_at(period / 200.0);
        assert!(d1 < 1e-6, "drift over 100 periods: {d1:.2e}");
        let d2 = drift_at(period / 400.0);
        assert!(d1 / d2 >= 8.0, "dt halving reduced drift only {:.1}x", d1 / d2);
    }

    #[test]
    fn forward_backward_integration_returns_initial_state() {
        let trap = axial_50hz_trap();
        let spin = SpinState::li7_stretched();
        let species = Species::li7();
        let field = ScheduledField::new().with_static(&trap);
        let period = 1.0 / 50.0;
        let cfg = IntegrationConfig {
            dt: period / 1000.0,
            t_end: period,
            record_stride: 0,
            ..IntegrationConfig::default()
        };
        let start =
            ParticleState::new(Vec3::new(40e-6, 20e-6, -80e-6), Vec3::new(0.02, -0.01, 0.03));
        let fwd = integrate(&start, &field, &spin, &species, &cfg).unwrap();
        let turned =
            ParticleState::new(fwd.final_state.position, -1.0 * fwd.final_state.velocity);
        let back = integrate(&turned, &field, &spin, &species, &cfg).unwrap();
        let returned =
            ParticleState::new(back.final_state.position, -1.0 * back.final_state.velocity);
        let scale = start.position.norm() + start.velocity.norm() * period;
        assert!(
            (returned.position - start.position).norm() / scale < 1e-8,
            "position error {:.2e}",
            (returned.position - start.position).norm() / scale
        );
        assert!((returned.velocity - start.velocity).norm() / start.velocity.norm() < 1e-8);
    }

    #[test]
    fn particle_at_rest_at_minimum_stays() {
        let trap = axial_50hz_trap();
        let spin = SpinState::li7_stretched();
        let species = Species::li7();
        let field = ScheduledField::new().with_static(&trap);
        let cfg = IntegrationConfig { dt: 1e-4, t_end: 0.1, ..IntegrationConfig::default() };
        let traj = integrate(
            &ParticleState::new(Vec3::ZERO, Vec3::ZERO),
            &field,
            &spin,
            &species,
            &cfg,
        )
        .unwrap();
        assert!(traj.final_state.position.norm() < 1e-12);
        assert!(traj.final_state.velocity.norm() < 1e-12);
    }

    #[test]
    fn thermal_sample_satisfies_virial() {
        let species = Species::li7();
        let spin = SpinState::li7_stretched();
        let t = 50e-6;
        let omegas = Vec3::new(2.0 * PI * 3000.0, 2.0 * PI * 3000.0, 2.0 * PI * 50.0);
        let sampler = ThermalSampler { temperature: t, omegas, center: Vec3::ZERO };
        let particles = sampler.sample(&species, 10_000, 42);
        let mu_eff = spin.moment_factor() * MU_B;
        let trap = mock_trap(omegas.x, omegas.y, omegas.z);
        let energies: Vec<f64> = particles
            .iter()
            .map(|p| {
                0.5 * species.mass * p.velocity.norm_sq()
                    + mu_eff * (trap.magnitude_at(p.position) - trap.b_center)
            })
            .collect();
        let mean = compensated_sum(energies.iter().copied()) / energies.len() as f64;
        assert_relative_eq!(mean, 3.0 * K_B * t, max_relative = 0.05);
    }

    #[test]
    fn identical_seeds_give_identical_samples() {
        let species = Species::li7();
        let sampler = ThermalSampler {
            temperature: 10e-6,
            omegas: Vec3::new(100.0, 100.0, 100.0),
            center: Vec3::ZERO,
        };
        let a = sampler.sample(&species, 64, 7);
        let b = sampler.sample(&species, 64, 7);
        assert_eq!(a, b);
        let c = sampler.sample(&species, 64, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_modulation_amplitude_gives_flat_curve() {
        let trap = mock_trap(2.0 * PI * 300.0, 2.0 * PI * 300.0, 2.0 * PI * 300.0);
        let spin = SpinState::li7_stretched();
        let species = Species::li7();
        let spec = ModulationSpec {
            ac_amplitude: 0.0,
            duration: 0.05,
            ..ModulationSpec::default()
        };
        let probe = vec![ParticleState::new(Vec3::new(5e-6, 0.0, 0.0), Vec3::ZERO)];
        let cfg = IntegrationConfig { dt: (1.0 / 300.0) / 200.0, ..IntegrationConfig::default() };
        let curve = parametric_scan(
            &trap,
            &spec,
            &[450.0, 600.0, 750.0],
            &probe,
            &spin,
            &species,
            &cfg,
            ExecMode::Sequential,
        )
        .unwrap();
        for p in &curve {
            assert!(p.energy_gain.abs() < 1e-6, "gain {} at {}", p.energy_gain, p.frequency_hz);
        }
    }

    #[test]
    fn modulation_amplitude_must_stay_below_dc() {
        let spec = ModulationSpec { ac_amplitude: 120.0, ..ModulationSpec::default() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn parametric_drive_at_twice_omega_heats() {
        let f0 = 300.0;
        let trap = mock_trap(2.0 * PI * f0, 2.0 * PI * f0, 2.0 * PI * f0);
        let spin = SpinState::li7_stretched();
        let species = Species::li7();
        let spec = ModulationSpec {
            dc_current: 100.0,
            ac_amplitude: 5.0,
            omega: 0.0,
            duration: 0.4,
        };
        let sampler = ThermalSampler {
            temperature: 5e-6,
            omegas: Vec3::new(2.0 * PI * f0, 2.0 * PI * f0, 2.0 * PI * f0),
            center: Vec3::ZERO,
        };
        let probe = sampler.sample(&species, 8, 11);
        let cfg = IntegrationConfig { dt: (1.0 / f0) / 200.0, ..IntegrationConfig::default() };
        let curve = parametric_scan(
            &trap,
            &spec,
            &[2.0 * f0, 2.6 * f0],
            &probe,
            &spin,
            &species,
            &cfg,
            ExecMode::Parallel,
        )
        .unwrap();
        let on = curve[0].energy_gain;
        let off = curve[1].energy_gain;
        assert!(on > 5.0 * off.abs().max(0.05), "on-resonance {on}, off {off}");
    }

    #[test]
    fn piecewise_linear_interpolates_and_clamps() {
        let p = PiecewiseLinear::new(vec![(0.0, 1.0), (1.0, 3.0), (2.0, 0.0)]).unwrap();
        assert_eq!(p.value_at(-1.0), 1.0);
        assert_eq!(p.value_at(0.5), 2.0);
        assert_eq!(p.value_at(1.5), 1.5);
        assert_eq!(p.value_at(5.0), 0.0);
        assert!(PiecewiseLinear::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![]).is_err());
    }

    #[test]
    fn ensemble_runs_identically_in_both_exec_modes() {
        let trap = mock_trap(2.0 * PI * 200.0, 2.0 * PI * 200.0, 2.0 * PI * 200.0);
        let spin = SpinState::li7_stretched();
        let species = Species::li7();
        let sampler = ThermalSampler {
            temperature: 5e-6,
            omegas: Vec3::new(2.0 * PI * 200.0, 2.0 * PI * 200.0, 2.0 * PI * 200.0),
            center: Vec3::ZERO,
        };
        let probe = sampler.sample(&species, 6, 3);
        let spec =
            ModulationSpec { ac_amplitude: 3.0, duration: 0.05, ..ModulationSpec::default() };
        let cfg = IntegrationConfig { dt: 5e-5 / 2.0, ..IntegrationConfig::default() };
        let run = |mode| {
            parametric_scan(&trap, &spec, &[400.0, 420.0], &probe, &spin, &species, &cfg, mode)
                .unwrap()
        };
        let a = run(ExecMode::Sequential);
        let b = run(ExecMode::Parallel);
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.energy_gain.to_bits(), y.energy_gain.to_bits());
        }
    }
}
