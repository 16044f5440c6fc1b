//! Magnetostatic design and evaporative-cooling simulation toolkit for a
//! millimeter-scale Ioffe-Pritchard trap.
//!
//! The crate is organized around a small set of value types:
//!
//! * [`geometry`] builds conductor assemblies (the slit-tube electrode
//!   structure, auxiliary coils, analytic-oracle loops) out of straight and
//!   arc filaments sharing a drive current.
//! * [`field`] evaluates the Biot-Savart field, its gradient tensor and the
//!   Hessian of its magnitude at arbitrary points, plus line scans.
//! * [`trap`] locates the field minimum, finds the six escape saddles,
//!   extracts curvatures and oscillation frequencies, and converts to the
//!   RF / Zeeman spectroscopy observables.
//! * [`dynamics`] integrates single-particle motion through static and
//!   ramped fields (semi-adiabatic transfer, parametric heating scans).
//! * [`evaporation`] evolves an (N, T) ensemble through an RF sweep with a
//!   truncated-Boltzmann kinetic model and BEC-threshold diagnostics.
//! * [`scaling`] carries the size/current-density scaling algebra and the
//!   resistive power audit.
//!
//! All internal quantities are SI (m, T, A, s, K); conversions to the
//! gauss/cm units used in reports live in [`constants`].
//!
//! With the `parallel` feature (default) the embarrassingly parallel loops
//! (field maps, particle ensembles, frequency scans) can run on rayon; every
//! such entry point takes an [`ExecMode`] and produces identical results in
//! either mode.

pub mod constants;
pub mod dynamics;
pub mod evaporation;
pub mod field;
pub mod geometry;
pub mod scaling;
pub mod trap;
pub mod vec3;

pub use vec3::{Mat3, Vec3};

/// Execution strategy for data-parallel inner loops.
///
/// `Parallel` falls back to sequential execution when the crate is built
/// without the `parallel` feature. Results are bit-identical either way:
/// per-item work is independent and reductions are performed in index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

/// Map `f` over `items`, honoring the execution mode. Output order matches
/// input order in both modes.
pub(crate) fn map_indexed<T, U, F>(mode: ExecMode, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode == ExecMode::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    let _ = mode;
    items.iter().map(f).collect()
}
