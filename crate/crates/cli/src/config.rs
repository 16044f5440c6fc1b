//! Run configuration: one JSON file per run, every section optional with
//! documented defaults, command-line flags taking precedence.

use minitrap_core::dynamics::ModulationSpec;
use minitrap_core::evaporation::{EvapParams, LossModel};
use minitrap_core::geometry::MinitrapParams;
use minitrap_core::trap::Species;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error in {path} at {field}: {source}")]
    Parse { path: String, field: String, source: serde_json::Error },
    #[error("config invalid: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkbenchConfig {
    pub geometry: GeometrySection,
    /// Drive current for geometry-derived commands (A).
    pub drive_current_a: f64,
    pub bias: BiasSection,
    pub species: Species,
    pub spin: SpinSection,
    pub seed: u64,
    pub threads: Option<usize>,
    pub field_map: FieldMapSection,
    pub report: ReportSection,
    pub evap: EvapSection,
    pub transfer: TransferSection,
    pub scan: ScanSection,
    pub scale: ScaleSection,
    pub audit: AuditSection,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        WorkbenchConfig {
            geometry: GeometrySection::default(),
            drive_current_a: 100.0,
            bias: BiasSection::default(),
            species: Species::li7(),
            spin: SpinSection::default(),
            seed: 1,
            threads: None,
            field_map: FieldMapSection::default(),
            report: ReportSection::default(),
            evap: EvapSection::default(),
            transfer: TransferSection::default(),
            scan: ScanSection::default(),
            scale: ScaleSection::default(),
            audit: AuditSection::default(),
        }
    }
}

impl WorkbenchConfig {
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut deserializer = serde_json::Deserializer::from_slice(&bytes);
        let cfg: WorkbenchConfig = serde_path_to_error::deserialize(&mut deserializer)
            .map_err(|e| ConfigError::Parse {
                path: path.display().to_string(),
                field: e.path().to_string(),
                source: e.into_inner(),
            })?;
        cfg.validate()?;
        Ok((cfg, bytes))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.geometry
            .minitrap
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.drive_current_a.is_finite()) {
            return Err(ConfigError::Invalid("drive_current_a must be finite".into()));
        }
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(ConfigError::Invalid("threads must be >= 1".into()));
            }
        }
        if self.scan.modulation.ac_amplitude >= self.scan.modulation.dc_current {
            return Err(ConfigError::Invalid(
                "scan.modulation: AC amplitude must stay below the DC current".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub minitrap: MinitrapParams,
}

/// Either an explicit bias vector or a target bottom field to solve for.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasSection {
    /// Explicit uniform bias (G); ignored when `target_b0_g` is set.
    pub vector_g: [f64; 3],
    /// Solve for the bias along `axis` that yields this bottom field (G).
    pub target_b0_g: Option<f64>,
    pub axis: [f64; 3],
}

impl Default for BiasSection {
    fn default() -> Self {
        BiasSection { vector_g: [0.0; 3], target_b0_g: None, axis: [0.0, 0.0, -1.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinSection {
    /// (F, mF, gF) of the trapped state.
    pub initial: (u32, i32, f64),
    /// (F, mF, gF) of the RF final state.
    pub rf_final: (u32, i32, f64),
}

impl Default for SpinSection {
    fn default() -> Self {
        SpinSection { initial: (2, 2, 0.5), rf_final: (1, 1, -0.5) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMapSection {
    /// Scan origin (m).
    pub origin_m: [f64; 3],
    /// Half-range of each axis scan (m).
    pub half_range_m: f64,
    pub samples: usize,
}

impl Default for FieldMapSection {
    fn default() -> Self {
        FieldMapSection { origin_m: [0.0; 3], half_range_m: 6e-3, samples: 241 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Minimum-search seed (m); the tube center by default.
    pub seed_point_m: [f64; 3],
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection { seed_point_m: [0.0; 3] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvapSection {
    pub initial_n: f64,
    /// Temperature after transfer into the trap (K); 1 mK is a plausible
    /// default for a laser-cooled lithium load.
    pub initial_t_k: f64,
    /// (t_s, nu_Hz) breakpoints; `None` selects the built-in 35 s sweep.
    pub schedule: Option<Vec<(f64, f64)>>,
    pub loss: LossModel,
    pub params: EvapParams,
    /// Trap frequencies (Hz) used for the kinetics; `None` derives them by
    /// analyzing the configured geometry at the configured bias.
    pub trap_frequencies_hz: Option<[f64; 3]>,
    /// Bottom field (G) paired with `trap_frequencies_hz`.
    pub trap_b0_g: f64,
}

impl Default for EvapSection {
    fn default() -> Self {
        EvapSection {
            initial_n: 2e8,
            initial_t_k: 1e-3,
            schedule: None,
            loss: LossModel::default(),
            params: EvapParams::default(),
            trap_frequencies_hz: Some([3000.0, 3000.0, 50.0]),
            trap_b0_g: 0.4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferSection {
    /// Source trap frequencies (Hz); axially matched to the target.
    pub source_frequencies_hz: [f64; 3],
    /// Target trap frequencies (Hz).
    pub target_frequencies_hz: [f64; 3],
    /// Source and target bottom fields (G).
    pub source_bottom_g: f64,
    pub target_bottom_g: f64,
    /// Target depth above its bottom (G).
    pub target_depth_g: f64,
    pub ramp_duration_s: f64,
    pub sample_size: usize,
    pub sample_temperature_k: f64,
    /// Reverse the source-coil polarity (the anti-adiabatic control).
    pub reversed_polarity: bool,
    /// Steps per fast oscillation period.
    pub steps_per_period: usize,
    /// Settling time after the ramp, in fast periods.
    pub settle_periods: f64,
    /// Atoms passing below this field (G) count as Majorana-lost.
    pub majorana_floor_g: f64,
}

impl Default for TransferSection {
    fn default() -> Self {
        TransferSection {
            source_frequencies_hz: [1500.0, 1500.0, 50.0],
            target_frequencies_hz: [3000.0, 3000.0, 50.0],
            source_bottom_g: 0.4,
            target_bottom_g: 0.4,
            target_depth_g: 70.0,
            ramp_duration_s: 2e-3,
            sample_size: 200,
            sample_temperature_k: 20e-6,
            reversed_polarity: false,
            steps_per_period: 200,
            settle_periods: 3.0,
            majorana_floor_g: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub trap_frequencies_hz: [f64; 3],
    pub trap_bottom_g: f64,
    pub modulation: ModulationSpec,
    /// Explicit frequency grid (Hz).
    pub grid_hz: Vec<f64>,
    pub probe_size: usize,
    pub probe_temperature_k: f64,
    /// Integration steps per fast oscillation period.
    pub steps_per_period: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            trap_frequencies_hz: [3000.0, 3000.0, 50.0],
            trap_bottom_g: 0.4,
            modulation: ModulationSpec { duration: 0.5, ..ModulationSpec::default() },
            grid_hz: vec![5400.0, 5700.0, 6000.0, 6300.0, 6600.0],
            probe_size: 12,
            probe_temperature_k: 5e-6,
            steps_per_period: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleSection {
    /// Characteristic size and current density to scale to.
    pub r_m: f64,
    pub j_a_per_m2: f64,
    pub r_ref_m: f64,
    pub j_ref_a_per_m2: f64,
    pub reference: minitrap_core::scaling::TrapFigures,
    /// Quadrupole compression factor for the cost table.
    pub compression_n: f64,
    pub apply_z_trap_factors: bool,
}

impl Default for ScaleSection {
    fn default() -> Self {
        ScaleSection {
            r_m: 3.25e-3,
            j_a_per_m2: 2.74e7,
            r_ref_m: 3.25e-3,
            j_ref_a_per_m2: 2.74e7,
            reference: minitrap_core::scaling::TrapFigures {
                gradient: 420.0,
                curvature: 120.0,
                depth: 70.0,
                volume: 2.6e-7,
                current: 100.0,
                power: 7.0,
                dt_sink: 10.0,
            },
            compression_n: 2.0,
            apply_z_trap_factors: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSection {
    pub currents_a: Vec<f64>,
    pub resistivity_ohm_m: f64,
}

impl Default for AuditSection {
    fn default() -> Self {
        AuditSection { currents_a: vec![100.0, 120.0], resistivity_ohm_m: 1.7e-8 }
    }
}
