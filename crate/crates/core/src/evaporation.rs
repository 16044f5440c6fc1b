//! Truncated-Boltzmann evaporative cooling: an (N, T) ensemble evolved
//! through an RF sweep with elastic-collision evaporation, background loss,
//! and two-body dipolar loss, plus phase-space and BEC-threshold
//! diagnostics.
//!
//! The kinetic closure is a single-temperature two-variable model: the
//! evaporation rate per atom is Gamma_el (eta - 4) exp(-eta) and each
//! evaporated atom removes (eta + kappa) kB T. Background loss is
//! energy-neutral, and dipolar loss removes the ensemble-average 3 kB T per
//! lost atom.

use crate::constants::{HBAR, K_B, PLANCK_H, ZETA_3};
use crate::trap::{rf_cut_frequency, Species, SpinState, TrapError, TrapReport};
use crate::vec3::Vec3;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvapError {
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error("ensemble state invalid: N = {n}, T = {t} K")]
    BadState { n: f64, t: f64 },
    #[error("RF schedule invalid: {0}")]
    BadSchedule(String),
    #[error("loss model invalid: {0}")]
    BadLossModel(String),
    #[error("thermometry needs a positive axial size, got {0} m")]
    BadCloudSize(f64),
}

/// Thermal ensemble snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleState {
    /// Atom number.
    pub n: f64,
    /// Temperature (K).
    pub temperature: f64,
    /// Time coordinate (s).
    pub t: f64,
}

impl EnsembleState {
    pub fn new(n: f64, temperature: f64, t: f64) -> Result<Self, EvapError> {
        if !(n >= 0.0) || !(temperature > 0.0) || !n.is_finite() || !temperature.is_finite() {
            return Err(EvapError::BadState { n, t: temperature });
        }
        Ok(EnsembleState { n, temperature, t })
    }

    /// Thermal de Broglie wavelength (m).
    pub fn de_broglie(&self, species: &Species) -> f64 {
        (2.0 * PI * HBAR * HBAR / (species.mass * K_B * self.temperature)).sqrt()
    }

    /// Peak density in a harmonic trap of mean frequency `omega_bar` (m^-3).
    pub fn peak_density(&self, omega_bar: f64, species: &Species) -> f64 {
        self.n
            * omega_bar.powi(3)
            * (species.mass / (2.0 * PI * K_B * self.temperature)).powf(1.5)
    }

    /// Peak phase-space density D = n0 lambda^3.
    pub fn phase_space_density(&self, omega_bar: f64, species: &Species) -> f64 {
        self.peak_density(omega_bar, species) * self.de_broglie(species).powi(3)
    }

    /// D along the algebraically equivalent route N (hbar omega / kB T)^3,
    /// kept separate as a consistency check.
    pub fn phase_space_density_alt(&self, omega_bar: f64, _species: &Species) -> f64 {
        self.n * (HBAR * omega_bar / (K_B * self.temperature)).powi(3)
    }
}

/// RF sweep: piecewise-linear knife frequency over time.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvapSchedule {
    /// (t in s, nu_RF in Hz) breakpoints, strictly increasing in t.
    pub segments: Vec<(f64, f64)>,
}

impl EvapSchedule {
    pub fn new(segments: Vec<(f64, f64)>, species: &Species) -> Result<Self, EvapError> {
        if segments.len() < 2 {
            return Err(EvapError::BadSchedule("need at least two breakpoints".into()));
        }
        for w in segments.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(EvapError::BadSchedule(format!(
                    "breakpoint times must increase, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some((t, nu)) = segments.iter().find(|(_, nu)| *nu < species.nu_hfs) {
            return Err(EvapError::BadSchedule(format!(
                "nu_RF = {nu} Hz at t = {t} s is below the hyperfine interval"
            )));
        }
        Ok(EvapSchedule { segments })
    }

    pub fn duration(&self) -> f64 {
        self.segments.last().unwrap().0 - self.segments[0].0
    }

    pub fn frequency_at(&self, t: f64) -> f64 {
        let pts = &self.segments;
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

    /// The sweep used when no schedule is configured: 35 s from 980 MHz down
    /// to 804.55 MHz in piecewise-linear steps, fast through the hot stage
    /// and slowing toward degeneracy.
    pub fn default_sweep() -> EvapSchedule {
        EvapSchedule {
            segments: vec![
                (0.0, 980.0e6),
                (4.0, 900.0e6),
                (8.0, 860.0e6),
                (12.0, 830.0e6),
                (17.0, 815.0e6),
                (23.0, 807.5e6),
                (29.0, 805.2e6),
                (35.0, 804.55e6),
            ],
        }
    }
}

/// Loss channels: current-dependent background lifetime plus a two-body
/// dipolar rate constant.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LossModel {
    /// (drive current A, lifetime s) table, interpolated linearly in
    /// current.
    pub lifetime_table: Vec<(f64, f64)>,
    /// Two-body dipolar rate constant (m^3/s). Literature-order default,
    /// not a measured value of this trap.
    pub g_dd: f64,
}

impl Default for LossModel {
    fn default() -> Self {
        LossModel {
            lifetime_table: vec![
                (78.0, 87.0),
                (100.0, 68.0),
                (120.0, 54.0),
                (135.0, 30.0),
                (148.0, 15.0),
            ],
            g_dd: 3.0e-20,
        }
    }
}

impl LossModel {
    pub fn validate(&self) -> Result<(), EvapError> {
        if self.lifetime_table.is_empty() {
            return Err(EvapError::BadLossModel("empty lifetime table".into()));
        }
        if self.lifetime_table.iter().any(|(_, tau)| !(*tau > 0.0)) {
            return Err(EvapError::BadLossModel("lifetimes must be positive".into()));
        }
        if !(self.g_dd >= 0.0) {
            return Err(EvapError::BadLossModel(format!(
                "G_dd must be >= 0, got {}",
                self.g_dd
            )));
        }
        Ok(())
    }

    /// Background lifetime at the given drive current (clamped linear
    /// interpolation of the table).
    pub fn lifetime_at(&self, current: f64) -> f64 {
        let t = &self.lifetime_table;
        if current <= t[0].0 {
            return t[0].1;
        }
        if current >= t[t.len() - 1].0 {
            return t[t.len() - 1].1;
        }
        let idx = t.partition_point(|(i, _)| *i <= current);
        let (i0, tau0) = t[idx - 1];
        let (i1, tau1) = t[idx];
        tau0 + (tau1 - tau0) * (current - i0) / (i1 - i0)
    }
}

/// Kinetic-model knobs.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct EvapParams {
    /// Mean energy of an evaporated atom is (eta + kappa) kB T.
    pub kappa: f64,
    /// Run terminates below this atom number.
    pub n_floor: f64,
    /// Integration step (s).
    pub dt: f64,
    /// Condensate stability coefficient in N_max = k_c a_ho / |a|.
    pub k_c: f64,
}

impl Default for EvapParams {
    fn default() -> Self {
        EvapParams { kappa: 1.0, n_floor: 100.0, dt: 5e-3, k_c: 0.575 }
    }
}

/// Energy truncation parameter eta = eps_cut / kB T for an RF knife at
/// `nu_rf`. The trap-frame energy cut is
/// eps_cut = h (nu_rf - nu_cut(B0)) * mF gF / (mF gF - mF' gF').
/// A knife at or below the bottom cut returns eta = 0 (all atoms ejected).
pub fn truncation_parameter(
    nu_rf: f64,
    trap: &TrapReport,
    initial: &SpinState,
    final_state: &SpinState,
    species: &Species,
    temperature: f64,
) -> Result<f64, EvapError> {
    let nu_cut = rf_cut_frequency(trap.b0_g, initial, final_state, species)?;
    if nu_rf <= nu_cut {
        return Ok(0.0);
    }
    let mi = initial.moment_factor();
    let mf = final_state.moment_factor();
    let eps_cut = PLANCK_H * (nu_rf - nu_cut) * mi / (mi - mf);
    Ok(eps_cut / (K_B * temperature))
}

/// Effective s-wave cross-section at the thermal momentum:
/// sigma = 8 pi a^2 / (1 + m kB T a^2 / hbar^2).
pub fn effective_cross_section(temperature: f64, species: &Species) -> f64 {
    let a = species.scattering_length;
    8.0 * PI * a * a / (1.0 + species.mass * K_B * temperature * a * a / (HBAR * HBAR))
}

/// Peak elastic collision rate Gamma_el = n0 sigma_eff v_bar / sqrt(2).
pub fn elastic_rate(state: &EnsembleState, omega_bar: f64, species: &Species) -> f64 {
    let n0 = state.peak_density(omega_bar, species);
    let v_bar = (8.0 * K_B * state.temperature / (PI * species.mass)).sqrt();
    n0 * effective_cross_section(state.temperature, species) * v_bar / 2f64.sqrt()
}

/// Flags produced by a kinetic step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepFlags {
    /// N fell below the floor.
    pub terminated: bool,
    /// The truncated-Boltzmann closure is inaccurate below eta ~ 4.5.
    pub low_eta_warning: bool,
}

#[allow(clippy::too_many_arguments)]
fn rates(
    n: f64,
    temperature: f64,
    eta: f64,
    tau: f64,
    g_dd: f64,
    kappa: f64,
    omega_bar: f64,
    species: &Species,
) -> (f64, f64) {
    let state = EnsembleState { n, temperature, t: 0.0 };
    let gamma_el = elastic_rate(&state, omega_bar, species);
    // (eta - 4) e^-eta is the harmonic-trap evaporation kernel; it is not
    // meaningful below eta = 4 and is clamped there.
    let gamma_ev = gamma_el * (eta - 4.0).max(0.0) * (-eta).exp();
    let mean_n = state.peak_density(omega_bar, species) / 8f64.sqrt();
    let gamma_bg = 1.0 / tau;
    let gamma_dd = g_dd * mean_n;
    let dn = -(gamma_ev + gamma_bg + gamma_dd) * n;
    // Energy balance at E = 3 N kB T: an evaporated atom carries
    // (eta + kappa) kB T; background and dipolar losses remove the 3 kB T
    // average and leave T unchanged.
    let dt_dt = -gamma_ev * temperature * (eta + kappa - 3.0) / 3.0;
    (dn, dt_dt)
}

/// Advance the ensemble by `dt` at fixed truncation parameter with one
/// classical 4th-order step on (N, T).
#[allow(clippy::too_many_arguments)]
pub fn step(
    state: &EnsembleState,
    eta: f64,
    loss: &LossModel,
    dt: f64,
    drive_current: f64,
    omega_bar: f64,
    species: &Species,
    params: &EvapParams,
) -> Result<(EnsembleState, StepFlags), EvapError> {
    loss.validate()?;
    let tau = loss.lifetime_at(drive_current);
    let f = |n: f64, t: f64| {
        rates(n.max(0.0), t.max(1e-12), eta, tau, loss.g_dd, params.kappa, omega_bar, species)
    };
    let (n0, t0) = (state.n, state.temperature);
    let (k1n, k1t) = f(n0, t0);
    let (k2n, k2t) = f(n0 + 0.5 * dt * k1n, t0 + 0.5 * dt * k1t);
    let (k3n, k3t) = f(n0 + 0.5 * dt * k2n, t0 + 0.5 * dt * k2t);
    let (k4n, k4t) = f(n0 + dt * k3n, t0 + dt * k3t);
    let n1 = n0 + dt / 6.0 * (k1n + 2.0 * (k2n + k3n) + k4n);
    let t1 = t0 + dt / 6.0 * (k1t + 2.0 * (k2t + k3t) + k4t);
    let next = EnsembleState::new(n1.max(0.0), t1.max(1e-12), state.t + dt)?;
    let flags =
        StepFlags { terminated: next.n < params.n_floor, low_eta_warning: eta < 4.5 };
    Ok((next, flags))
}

/// One recorded point of an evaporation trajectory.
#[derive(Debug, Clone, Copy)]
pub struct SweepSample {
    pub t: f64,
    pub nu_rf: f64,
    pub n: f64,
    pub temperature: f64,
    pub peak_density: f64,
    pub phase_space_density: f64,
    pub elastic_rate: f64,
    pub eta: f64,
    /// log(D/D_i) / log(N_i/N) from the start of the sweep.
    pub gamma_cumulative: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub trajectory: Vec<SweepSample>,
    /// Time and state at which D first crossed the BEC threshold.
    pub threshold_crossing: Option<(f64, EnsembleState)>,
    /// Evaporation efficiency per schedule segment.
    pub per_segment_gamma: Vec<f64>,
    pub terminated: bool,
    pub low_eta_steps: usize,
    pub final_state: EnsembleState,
}

impl SweepResult {
    /// Overall efficiency between the sweep endpoints.
    pub fn overall_gamma(&self) -> f64 {
        gamma_between(self.trajectory.first(), self.trajectory.last())
    }

    /// Efficiency between the first and last samples whose D lies in
    /// [d_lo, d_hi]; the mid-range figure usually reported.
    pub fn gamma_in_band(&self, d_lo: f64, d_hi: f64) -> Option<f64> {
        let first = self
            .trajectory
            .iter()
            .find(|s| s.phase_space_density >= d_lo && s.phase_space_density <= d_hi)?;
        let last = self
            .trajectory
            .iter()
            .rev()
            .find(|s| s.phase_space_density >= d_lo && s.phase_space_density <= d_hi)?;
        if last.n >= first.n || last.t <= first.t {
            return None;
        }
        Some(gamma_between(Some(first), Some(last)))
    }

    /// Trajectory CSV: `t_s,nu_MHz,N,T_uK,n0_percm3,D,gamma_cum`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,nu_MHz,N,T_uK,n0_percm3,D,gamma_cum\n");
        for s in &self.trajectory {
            out.push_str(&format!(
                "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
                s.t,
                s.nu_rf / 1e6,
                s.n,
                s.temperature * 1e6,
                s.peak_density * 1e-6,
                s.phase_space_density,
                s.gamma_cumulative
            ));
        }
        out
    }
}

fn gamma_between(a: Option<&SweepSample>, b: Option<&SweepSample>) -> f64 {
    match (a, b) {
        (Some(i), Some(f)) if f.n > 0.0 && i.n > f.n => {
            (f.phase_space_density / i.phase_space_density).ln() / (i.n / f.n).ln()
        }
        _ => f64::NAN,
    }
}

/// Integrate the kinetic model through an RF sweep, recomputing eta from the
/// instantaneous knife frequency and temperature each step.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    initial: &EnsembleState,
    schedule: &EvapSchedule,
    trap: &TrapReport,
    loss: &LossModel,
    initial_spin: &SpinState,
    final_spin: &SpinState,
    species: &Species,
    params: &EvapParams,
) -> Result<SweepResult, EvapError> {
    loss.validate()?;
    let omega_bar = trap.mean_omega();
    let duration = schedule.duration();
    let t_start = schedule.segments[0].0;
    let n_steps = (duration / params.dt).ceil().max(1.0) as usize;
    let dt = duration / n_steps as f64;

    let mut state = EnsembleState { t: t_start, ..*initial };
    let d0 = state.phase_space_density(omega_bar, species);
    let n_init = state.n;
    let mut trajectory = Vec::with_capacity(n_steps + 1);
    let mut low_eta_steps = 0;
    let mut terminated = false;
    let mut threshold_crossing: Option<(f64, EnsembleState)> = None;

    let record = |state: &EnsembleState, eta: f64, nu: f64| -> SweepSample {
        let d = state.phase_space_density(omega_bar, species);
        let gamma = if state.n < n_init && state.n > 0.0 {
            (d / d0).ln() / (n_init / state.n).ln()
        } else {
            f64::NAN
        };
        SweepSample {
            t: state.t,
            nu_rf: nu,
            n: state.n,
            temperature: state.temperature,
            peak_density: state.peak_density(omega_bar, species),
            phase_space_density: d,
            elastic_rate: elastic_rate(state, omega_bar, species),
            eta,
            gamma_cumulative: gamma,
        }
    };

    let eta_at = |nu: f64, temperature: f64| -> Result<f64, EvapError> {
        truncation_parameter(nu, trap, initial_spin, final_spin, species, temperature)
    };

    let nu0 = schedule.frequency_at(t_start);
    trajectory.push(record(&state, eta_at(nu0, state.temperature)?, nu0));

    for _ in 0..n_steps {
        let nu = schedule.frequency_at(state.t);
        let eta = eta_at(nu, state.temperature)?;
        let (next, flags) =
            step(&state, eta, loss, dt, trap.drive_current, omega_bar, species, params)?;
        if flags.low_eta_warning {
            low_eta_steps += 1;
        }
        // Bisect a BEC-threshold crossing to 1e-3 relative accuracy in time.
        let d_prev = state.phase_space_density(omega_bar, species);
        let d_next = next.phase_space_density(omega_bar, species);
        if threshold_crossing.is_none() && d_prev < ZETA_3 && d_next >= ZETA_3 {
            let mut lo = 0.0;
            let mut hi = dt;
            let mut crossing_state = next;
            while (hi - lo) > 1e-3 * state.t.max(dt) {
                let mid = 0.5 * (lo + hi);
                let (probe, _) =
                    step(&state, eta, loss, mid, trap.drive_current, omega_bar, species, params)?;
                if probe.phase_space_density(omega_bar, species) >= ZETA_3 {
                    hi = mid;
                    crossing_state = probe;
                } else {
                    lo = mid;
                }
            }
            threshold_crossing = Some((state.t + hi, crossing_state));
        }
        state = next;
        trajectory.push(record(&state, eta, nu));
        if flags.terminated {
            terminated = true;
            break;
        }
    }

    // Per-segment efficiency between schedule breakpoints.
    let mut per_segment_gamma = Vec::new();
    for w in schedule.segments.windows(2) {
        let in_window = |s: &&SweepSample| s.t >= w[0].0 - 1e-12 && s.t <= w[1].0 + 1e-12;
        let first = trajectory.iter().find(in_window);
        let last = trajectory.iter().rev().find(in_window);
        per_segment_gamma.push(gamma_between(first, last));
    }

    Ok(SweepResult {
        threshold_crossing,
        per_segment_gamma,
        terminated,
        low_eta_steps,
        final_state: state,
        trajectory,
    })
}

/// Temperature from the fitted axial cloud size: T = m omega^2 sigma^2 / kB.
pub fn thermometry(
    sigma_axial: f64,
    omega_axial: f64,
    species: &Species,
) -> Result<f64, EvapError> {
    if !(sigma_axial > 0.0) {
        return Err(EvapError::BadCloudSize(sigma_axial));
    }
    Ok(species.mass * omega_axial * omega_axial * sigma_axial * sigma_axial / K_B)
}

/// BEC-threshold diagnostics for one ensemble state.
#[derive(Debug, Clone, Copy)]
pub struct BecDiagnostics {
    pub phase_space_density: f64,
    /// D >= zeta(3).
    pub threshold_reached: bool,
    /// Attractive-interaction condensate limit k_c a_ho / |a|;
    /// `None` (unbounded) for non-negative scattering lengths.
    pub n_max_condensate: Option<f64>,
}

pub fn bec_diagnostics(
    state: &EnsembleState,
    trap: &TrapReport,
    species: &Species,
    k_c: f64,
) -> BecDiagnostics {
    let omega_bar = trap.mean_omega();
    let d = state.phase_space_density(omega_bar, species);
    let n_max = if species.scattering_length < 0.0 {
        let a_ho = (HBAR / (species.mass * omega_bar)).sqrt();
        Some(k_c * a_ho / species.scattering_length.abs())
    } else {
        None
    };
    BecDiagnostics { phase_space_density: d, threshold_reached: d >= ZETA_3, n_max_condensate: n_max }
}

impl TrapReport {
    /// Report prefilled from measured-style inputs: bottom field plus the
    /// three oscillation frequencies. Saddle fields are left empty;
    /// curvatures and radial gradients follow the same formulas harmonic
    /// analysis uses.
    pub fn harmonic(
        b0_g: f64,
        omegas: Vec3,
        spin: &SpinState,
        species: &Species,
        drive_current: f64,
    ) -> TrapReport {
        use crate::constants::{GAUSS_TO_TESLA, MU_B, TESLA_TO_GAUSS, TPM2_TO_GPCM2, TPM_TO_GPCM};
        let curv = |w: f64| species.mass * w * w / (spin.moment_factor() * MU_B);
        let (cx, cy, cz) = (curv(omegas.x), curv(omegas.y), curv(omegas.z));
        let b0_t = b0_g * GAUSS_TO_TESLA;
        let grad = |c: f64| (b0_t * (c + 0.5 * cz)).max(0.0).sqrt();
        TrapReport {
            minimum_position: Vec3::ZERO,
            b0_g: b0_t * TESLA_TO_GAUSS,
            bias_applied_g: Vec3::ZERO,
            saddles: Vec::new(),
            depth_g: f64::INFINITY,
            grad_radial_x_gpcm: grad(cx) * TPM_TO_GPCM,
            grad_radial_y_gpcm: grad(cy) * TPM_TO_GPCM,
            curv_axial_gpcm2: cz * TPM2_TO_GPCM2,
            curv_radial_x_gpcm2: cx * TPM2_TO_GPCM2,
            curv_radial_y_gpcm2: cy * TPM2_TO_GPCM2,
            omega_axial: omegas.z,
            omega_radial_x: omegas.x,
            omega_radial_y: omegas.y,
            drive_current,
        }
    }
}
