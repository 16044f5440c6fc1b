//! Magnetostatic field evaluation: Biot-Savart over filament assemblies,
//! finite-difference gradient and magnitude-Hessian, and line scans.
//!
//! Straight segments use the closed-form finite-segment expression; arcs are
//! subdivided into inscribed chords, doubling the count until Richardson
//! extrapolants of successive refinements agree to `arc_rel_tol`. Derivatives
//! are central differences with one Richardson step; all points of a stencil
//! are evaluated with the chord counts frozen at the stencil center so the
//! differentiated model is smooth.

use crate::constants::{GAUSS_TO_TESLA, MU0_OVER_4PI, TESLA_TO_GAUSS};
use crate::geometry::{ConductorAssembly, Element, FilamentArc, FilamentSegment};
use crate::vec3::{Mat3, Vec3};
use crate::{map_indexed, ExecMode};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("evaluation point within {distance:.3e} m of filament '{element}' (exclusion radius {exclusion:.1e} m)")]
    Singularity { element: String, distance: f64, exclusion: f64 },
    #[error("arc chordization did not converge: residual {achieved:.3e} after {chords} chords")]
    ArcNotConverged { achieved: f64, chords: usize },
    #[error("finite-difference derivative did not converge: residual {achieved:.3e} relative")]
    DerivativeNotConverged { achieved: f64 },
    #[error("|B| = {magnitude:.3e} T is below the floor {floor:.1e} T; magnitude derivatives are not smooth near a zero")]
    NearZeroField { magnitude: f64, floor: f64 },
    #[error("line scan needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

/// Solver tuning constants.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Relative tolerance for adaptive arc chordization.
    pub arc_rel_tol: f64,
    /// Exclusion radius around filaments (m).
    pub epsilon_geom: f64,
    /// Base central-difference step (m).
    pub fd_step: f64,
    /// Relative accuracy demanded of Richardson-refined derivatives.
    pub fd_rel_tol: f64,
    /// Magnitude floor below which |B| derivatives are refused (T).
    pub b_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            arc_rel_tol: 1e-9,
            epsilon_geom: 1e-6,
            fd_step: 1e-6,
            fd_rel_tol: 1e-5,
            b_floor: 1e-8,
        }
    }
}

/// Magnetic field vector and the derivatives computed so far at one point.
#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    /// Evaluation point (m).
    pub point: Vec3,
    /// Field vector (T).
    pub b: Vec3,
    /// |B| (T).
    pub magnitude: f64,
    /// dB_i/dx_j (T/m), row i component, column j direction.
    pub grad_b: Option<Mat3>,
    /// d^2|B|/dx_i dx_j (T/m^2), symmetric.
    pub hess_magnitude: Option<Mat3>,
}

impl FieldSample {
    fn bare(point: Vec3, b: Vec3) -> FieldSample {
        FieldSample { point, b, magnitude: b.norm(), grad_b: None, hess_magnitude: None }
    }
}

/// Uniformly sampled field profile along a line.
#[derive(Debug, Clone)]
pub struct LineScan {
    pub origin: Vec3,
    pub axis: Vec3,
    /// (arc-length coordinate s in m, sample), strictly increasing in s.
    pub samples: Vec<(f64, FieldSample)>,
}

impl LineScan {
    /// CSV in report units, header `s_cm,Bx_G,By_G,Bz_G,Bmag_G`,
    /// 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s_cm,Bx_G,By_G,Bz_G,Bmag_G\n");
        for (s, sample) in &self.samples {
            out.push_str(&format!(
                "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
                s * 100.0,
                sample.b.x * TESLA_TO_GAUSS,
                sample.b.y * TESLA_TO_GAUSS,
                sample.b.z * TESLA_TO_GAUSS,
                sample.magnitude * TESLA_TO_GAUSS,
            ));
        }
        out
    }
}

/// Anything that produces a magnetostatic field.
pub trait FieldSource: Sync {
    fn field(&self, p: Vec3) -> Result<Vec3, FieldError>;

    /// Evaluate several points with internal discretization choices frozen
    /// at `center`, so finite differences across the batch see a smooth
    /// model. The default just evaluates pointwise.
    fn field_batch_consistent(
        &self,
        center: Vec3,
        points: &[Vec3],
    ) -> Result<Vec<Vec3>, FieldError> {
        let _ = center;
        points.iter().map(|&q| self.field(q)).collect()
    }

    /// Analytic gradient of |B| where the source can supply one (used by the
    /// particle integrator); `None` falls back to finite differences.
    fn grad_magnitude_analytic(&self, _p: Vec3) -> Option<Vec3> {
        None
    }
}

// ---------------------------------------------------------------------------
// Biot-Savart kernels
// ---------------------------------------------------------------------------

/// Closed-form field of a finite straight filament carrying `current` from
/// `start` to `end` (Hanson-Hirshman form, stable off the filament axis).
pub fn segment_field(seg: &FilamentSegment, current: f64, p: Vec3) -> Vec3 {
    let r1 = p - seg.start;
    let r2 = p - seg.end;
    let n1 = r1.norm();
    let n2 = r2.norm();
    let denom = n1 * n2 * (n1 * n2 + r1.dot(r2));
    if denom == 0.0 {
        return Vec3::ZERO;
    }
    r1.cross(r2) * (MU0_OVER_4PI * current * (n1 + n2) / denom)
}

/// Field of an arc approximated by `n` inscribed chords. Exposed for
/// convergence diagnostics; production evaluation is adaptive.
pub fn arc_chord_field(arc: &FilamentArc, current: f64, p: Vec3, n: usize) -> Vec3 {
    let (e1, e2) = arc.frame();
    let sweep = arc.sweep();
    let dtheta = sweep / n as f64;
    let point = |k: usize| {
        let t = arc.start_angle + dtheta * k as f64;
        arc.center + (e1 * t.cos() + e2 * t.sin()) * arc.radius
    };
    let mut b = Vec3::ZERO;
    let mut prev = point(0);
    for k in 1..=n {
        let next = point(k);
        let seg = FilamentSegment { start: prev, end: next, current_weight: 1.0 };
        b += segment_field(&seg, current, p);
        prev = next;
    }
    b
}

/// Adaptive arc evaluation: double the chord count until the Richardson
/// extrapolants of successive refinements agree to `rel_tol`. Returns the
/// converged field and the chord count that achieved it.
fn arc_field_adaptive(
    arc: &FilamentArc,
    current: f64,
    p: Vec3,
    rel_tol: f64,
) -> Result<(Vec3, usize), FieldError> {
    let sweep = arc.sweep().abs();
    let mut n = ((sweep / (2.0 * PI) * 16.0).ceil() as usize).max(8);
    let mut coarse = arc_chord_field(arc, current, p, n);
    let mut fine = arc_chord_field(arc, current, p, 2 * n);
    // Chord error is O(dtheta^2); one Richardson step gives O(dtheta^4).
    let mut extrap = fine + (fine - coarse) * (1.0 / 3.0);
    loop {
        n *= 2;
        coarse = fine;
        fine = arc_chord_field(arc, current, p, 2 * n);
        let next = fine + (fine - coarse) * (1.0 / 3.0);
        let delta = (next - extrap).norm();
        let scale = next.norm().max(1e-18);
        if delta <= rel_tol * scale {
            return Ok((next, 2 * n));
        }
        if 2 * n > (1 << 22) {
            return Err(FieldError::ArcNotConverged { achieved: delta / scale, chords: 2 * n });
        }
        extrap = next;
    }
}

fn point_segment_distance(p: Vec3, seg: &FilamentSegment) -> f64 {
    let d = seg.end - seg.start;
    let t = ((p - seg.start).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
    (p - (seg.start + d * t)).norm()
}

fn point_arc_distance(p: Vec3, arc: &FilamentArc) -> f64 {
    let (e1, e2) = arc.frame();
    let v = p - arc.center;
    let axial = v.dot(arc.normal);
    let u = Vec3::new(v.dot(e1), v.dot(e2), 0.0);
    let rho = u.norm();
    if rho < 1e-300 {
        // On the arc axis: every point of the circle is equidistant.
        return (axial * axial + arc.radius * arc.radius).sqrt();
    }
    let theta = u.y.atan2(u.x);
    // Is theta inside the swept interval (mod 2 pi)?
    let sweep = arc.sweep();
    let (a0, s) = if sweep >= 0.0 { (arc.start_angle, sweep) } else { (arc.end_angle, -sweep) };
    let mut rel = (theta - a0) % (2.0 * PI);
    if rel < 0.0 {
        rel += 2.0 * PI;
    }
    if rel <= s {
        let dr = rho - arc.radius;
        (dr * dr + axial * axial).sqrt()
    } else {
        let d0 = (p - arc.point_at(arc.start_angle)).norm();
        let d1 = (p - arc.point_at(arc.end_angle)).norm();
        d0.min(d1)
    }
}

impl ConductorAssembly {
    fn check_exclusion(&self, p: Vec3, cfg: &SolverConfig) -> Result<(), FieldError> {
        for g in self.groups() {
            for e in &g.elements {
                let d = match e {
                    Element::Segment(s) => point_segment_distance(p, s),
                    Element::Arc(a) => point_arc_distance(p, a),
                };
                if d < cfg.epsilon_geom {
                    return Err(FieldError::Singularity {
                        element: g.label.clone(),
                        distance: d,
                        exclusion: cfg.epsilon_geom,
                    });
                }
            }
        }
        Ok(())
    }

    /// Field at `p` with explicit solver settings.
    pub fn field_with(&self, p: Vec3, cfg: &SolverConfig) -> Result<Vec3, FieldError> {
        Ok(self.field_with_plan(p, cfg, None)?.0)
    }

    /// Evaluate, optionally reusing a chord plan (one entry per arc element,
    /// in traversal order). Returns the field and the plan used.
    fn field_with_plan(
        &self,
        p: Vec3,
        cfg: &SolverConfig,
        plan: Option<&[usize]>,
    ) -> Result<(Vec3, Vec<usize>), FieldError> {
        self.check_exclusion(p, cfg)?;
        let i = self.drive_current();
        let mut b = Vec3::ZERO;
        let mut plan_out = Vec::new();
        let mut arc_idx = 0usize;
        for g in self.groups() {
            for e in &g.elements {
                match e {
                    Element::Segment(s) => {
                        b += segment_field(s, i * s.current_weight, p);
                    }
                    Element::Arc(a) => {
                        match plan {
                            Some(counts) => {
                                let n = counts[arc_idx];
                                let coarse = arc_chord_field(a, i * a.current_weight, p, n / 2);
                                let fine = arc_chord_field(a, i * a.current_weight, p, n);
                                b += fine + (fine - coarse) * (1.0 / 3.0);
                            }
                            None => {
                                let (contrib, n) =
                                    arc_field_adaptive(a, i * a.current_weight, p, cfg.arc_rel_tol)?;
                                b += contrib;
                                plan_out.push(n);
                            }
                        }
                        arc_idx += 1;
                    }
                }
            }
        }
        Ok((b, plan_out))
    }
}

impl FieldSource for ConductorAssembly {
    fn field(&self, p: Vec3) -> Result<Vec3, FieldError> {
        self.field_with(p, &SolverConfig::default())
    }

    fn field_batch_consistent(
        &self,
        center: Vec3,
        points: &[Vec3],
    ) -> Result<Vec<Vec3>, FieldError> {
        let cfg = SolverConfig::default();
        let (_, plan) = self.field_with_plan(center, &cfg, None)?;
        points
            .iter()
            .map(|&q| self.field_with_plan(q, &cfg, Some(&plan)).map(|(b, _)| b))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Synthetic sources
// ---------------------------------------------------------------------------

/// Spatially uniform bias field.
#[derive(Debug, Clone, Copy)]
pub struct UniformField(pub Vec3);

impl FieldSource for UniformField {
    fn field(&self, _p: Vec3) -> Result<Vec3, FieldError> {
        Ok(self.0)
    }

    fn grad_magnitude_analytic(&self, _p: Vec3) -> Option<Vec3> {
        Some(Vec3::ZERO)
    }
}

/// Ideal Ioffe-Pritchard near field: a 2D quadrupole of gradient `b1` plus a
/// pinch term of bottom `b0` and axial curvature `b2`, centered at `center`.
///
/// B = (b1 x - b2 x z / 2, -b1 y - b2 y z / 2, b0 + b2 z^2 / 2 - b2 rho^2 / 4)
///
/// which is divergence- and curl-free, with |B| = sqrt(b0^2 + b1^2 rho^2)
/// in the z = 0 plane.
#[derive(Debug, Clone, Copy)]
pub struct IdealIpField {
    pub center: Vec3,
    /// Trap-bottom field (T).
    pub b0: f64,
    /// Radial quadrupole gradient (T/m).
    pub b1: f64,
    /// Axial curvature (T/m^2).
    pub b2: f64,
}

impl FieldSource for IdealIpField {
    fn field(&self, p: Vec3) -> Result<Vec3, FieldError> {
        let r = p - self.center;
        let (x, y, z) = (r.x, r.y, r.z);
        Ok(Vec3::new(
            self.b1 * x - 0.5 * self.b2 * x * z,
            -self.b1 * y - 0.5 * self.b2 * y * z,
            self.b0 + 0.5 * self.b2 * z * z - 0.25 * self.b2 * (x * x + y * y),
        ))
    }
}

/// Potential mock with a prescribed harmonic |B| profile:
/// |B| = b_center + (kx x^2 + ky y^2 + kz z^2) / 2.
///
/// The vector field is not Maxwell-consistent; this source exists for
/// single-particle dynamics tests where only the magnitude matters.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicMagnitudeField {
    pub center: Vec3,
    /// Offset magnitude (T).
    pub b_center: f64,
    /// Magnitude curvatures along x, y, z (T/m^2).
    pub curvatures: Vec3,
}

impl HarmonicMagnitudeField {
    pub fn magnitude_at(&self, p: Vec3) -> f64 {
        let r = p - self.center;
        self.b_center
            + 0.5
                * (self.curvatures.x * r.x * r.x
                    + self.curvatures.y * r.y * r.y
                    + self.curvatures.z * r.z * r.z)
    }
}

impl FieldSource for HarmonicMagnitudeField {
    fn field(&self, p: Vec3) -> Result<Vec3, FieldError> {
        Ok(Vec3::new(0.0, 0.0, self.magnitude_at(p)))
    }

    fn grad_magnitude_analytic(&self, p: Vec3) -> Option<Vec3> {
        let r = p - self.center;
        Some(Vec3::new(
            self.curvatures.x * r.x,
            self.curvatures.y * r.y,
            self.curvatures.z * r.z,
        ))
    }
}

/// Superposition of sources (e.g. an assembly plus a uniform bias).
pub struct SumSource<'a> {
    parts: Vec<&'a dyn FieldSource>,
}

impl<'a> SumSource<'a> {
    pub fn new(parts: Vec<&'a dyn FieldSource>) -> Self {
        SumSource { parts }
    }
}

impl FieldSource for SumSource<'_> {
    fn field(&self, p: Vec3) -> Result<Vec3, FieldError> {
        let mut b = Vec3::ZERO;
        for s in &self.parts {
            b += s.field(p)?;
        }
        Ok(b)
    }

    fn field_batch_consistent(
        &self,
        center: Vec3,
        points: &[Vec3],
    ) -> Result<Vec<Vec3>, FieldError> {
        let mut out = vec![Vec3::ZERO; points.len()];
        for s in &self.parts {
            for (acc, b) in out.iter_mut().zip(s.field_batch_consistent(center, points)?) {
                *acc += b;
            }
        }
        Ok(out)
    }
}

/// Source with a bias field folded in; convenience for trap analysis.
pub struct BiasedSource<'a> {
    pub base: &'a dyn FieldSource,
    /// Uniform bias (T).
    pub bias: Vec3,
}

impl FieldSource for BiasedSource<'_> {
    fn field(&self, p: Vec3) -> Result<Vec3, FieldError> {
        Ok(self.base.field(p)? + self.bias)
    }

    fn field_batch_consistent(
        &self,
        center: Vec3,
        points: &[Vec3],
    ) -> Result<Vec<Vec3>, FieldError> {
        let mut out = self.base.field_batch_consistent(center, points)?;
        for b in &mut out {
            *b += self.bias;
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Sampling operations
// ---------------------------------------------------------------------------

/// Field vector and magnitude at a point.
pub fn field_at(source: &dyn FieldSource, p: Vec3) -> Result<FieldSample, FieldError> {
    Ok(FieldSample::bare(p, source.field(p)?))
}

/// Field plus the gradient tensor dB_i/dx_j by Richardson-refined central
/// differences.
pub fn gradient_at(
    source: &dyn FieldSource,
    p: Vec3,
    cfg: &SolverConfig,
) -> Result<FieldSample, FieldError> {
    let h = cfg.fd_step;
    // Stencil: center, then +/-h and +/-h/2 along each axis.
    let mut points = vec![p];
    for axis in [Vec3::X, Vec3::Y, Vec3::Z] {
        for step in [h, -h, 0.5 * h, -0.5 * h] {
            points.push(p + axis * step);
        }
    }
    let values = source.field_batch_consistent(p, &points)?;
    let b0 = values[0];
    let mut grad = Mat3::zero();
    let mut resid = 0.0f64;
    for j in 0..3 {
        let base = 1 + 4 * j;
        let coarse = (values[base] - values[base + 1]) / (2.0 * h);
        let fine = (values[base + 2] - values[base + 3]) / h;
        let refined = fine + (fine - coarse) * (1.0 / 3.0);
        // The Richardson delta bounds the truncation error of this column.
        resid = resid.max((fine - coarse).norm() / 3.0);
        for i in 0..3 {
            grad.set(i, j, refined.component(i));
        }
    }
    // Compare the residual against the whole-tensor scale, floored at |B|
    // per meter: at symmetric points the true gradient vanishes and the
    // residual is numerically tiny but O(1) relative to itself.
    let scale = grad.norm().max(b0.norm()).max(1e-30);
    if resid > cfg.fd_rel_tol * scale {
        return Err(FieldError::DerivativeNotConverged { achieved: resid / scale });
    }
    Ok(FieldSample {
        point: p,
        b: b0,
        magnitude: b0.norm(),
        grad_b: Some(grad),
        hess_magnitude: None,
    })
}

/// Full sample: field, gradient tensor, and the symmetric Hessian of |B| by
/// central second differences.
pub fn hessian_of_magnitude(
    source: &dyn FieldSource,
    p: Vec3,
    cfg: &SolverConfig,
) -> Result<FieldSample, FieldError> {
    let with_grad = gradient_at(source, p, cfg)?;
    if with_grad.magnitude < cfg.b_floor {
        return Err(FieldError::NearZeroField {
            magnitude: with_grad.magnitude,
            floor: cfg.b_floor,
        });
    }
    let h = cfg.fd_step;
    let axes = [Vec3::X, Vec3::Y, Vec3::Z];
    let mut points = vec![p];
    for &a in &axes {
        points.push(p + a * h);
        points.push(p - a * h);
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                points.push(p + axes[i] * (si * h) + axes[j] * (sj * h));
            }
        }
    }
    let mags: Vec<f64> = source
        .field_batch_consistent(p, &points)?
        .into_iter()
        .map(|b| b.norm())
        .collect();
    let m0 = mags[0];
    let mut hess = Mat3::zero();
    for i in 0..3 {
        let d2 = (mags[1 + 2 * i] - 2.0 * m0 + mags[2 + 2 * i]) / (h * h);
        hess.set(i, i, d2);
    }
    let mut k = 7;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let cross =
                (mags[k] - mags[k + 1] - mags[k + 2] + mags[k + 3]) / (4.0 * h * h);
            hess.set(i, j, cross);
            hess.set(j, i, cross);
            k += 4;
        }
    }
    Ok(FieldSample { hess_magnitude: Some(hess), ..with_grad })
}

/// Uniformly spaced field samples along `origin + s * axis`,
/// s in [range.0, range.1].
pub fn line_scan(
    source: &dyn FieldSource,
    origin: Vec3,
    axis: Vec3,
    range: (f64, f64),
    n_samples: usize,
    mode: ExecMode,
) -> Result<LineScan, FieldError> {
    if n_samples < 2 {
        return Err(FieldError::TooFewSamples(n_samples));
    }
    let u = axis.normalized().expect("scan axis must be nonzero");
    let (s0, s1) = range;
    let ss: Vec<f64> = (0..n_samples)
        .map(|i| s0 + (s1 - s0) * i as f64 / (n_samples - 1) as f64)
        .collect();
    let results = map_indexed(mode, &ss, |&s| field_at(source, origin + u * s));
    let mut samples = Vec::with_capacity(n_samples);
    for (s, r) in ss.iter().zip(results) {
        samples.push((*s, r?));
    }
    Ok(LineScan { origin, axis: u, samples })
}

/// Convenience: bias expressed in gauss, returned in tesla.
pub fn bias_from_gauss(bias_g: Vec3) -> Vec3 {
    bias_g * GAUSS_TO_TESLA
}
