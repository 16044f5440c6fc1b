//! Conductor assemblies: bundles of straight and arc filaments carrying a
//! common drive current.
//!
//! The main builder, [`build_minitrap`], reconstructs the slit-tube electrode
//! structure: a copper tube with two orthogonal longitudinal slits, leaving
//! four Ioffe bars and a partial pinch ring at each end, plus an optional
//! full trace ring on the interface chip and coaxial current leads.
//!
//! Axis convention: z runs along the tube axis with the chip at -z and the
//! tip at +z. The wide slit's width is measured along x, so its two openings
//! face +/-y; the narrow slit's width runs along y with openings at +/-x.
//! The bars therefore sit closer to the +/-x axis and an atom escaping along
//! +/-y passes through the wide openings.

use crate::constants::RHO_COPPER;
use crate::vec3::{Mat3, Vec3};
use std::f64::consts::PI;
use thiserror::Error;

const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid {field}: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("conductor group '{group}' has current weights summing to {sum}, expected 1")]
    CurrentNotConserved { group: String, sum: f64 },
    #[error("transform is not a proper rigid motion: {reason}")]
    ImproperTransform { reason: String },
    #[error("cannot merge assemblies with different drive currents ({0} A vs {1} A)")]
    MergeCurrentMismatch(f64, f64),
}

/// Straight filament carrying `current_weight` times the assembly drive
/// current from `start` to `end` (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilamentSegment {
    pub start: Vec3,
    pub end: Vec3,
    pub current_weight: f64,
}

impl FilamentSegment {
    pub fn new(start: Vec3, end: Vec3, current_weight: f64) -> Result<Self, GeometryError> {
        if !(start - end).is_finite() || (start - end).norm() < 1e-15 {
            return Err(GeometryError::InvalidParam {
                field: "segment endpoints",
                reason: format!("zero-length or non-finite segment at {start:?}"),
            });
        }
        check_weight(current_weight)?;
        Ok(FilamentSegment { start, end, current_weight })
    }
}

/// Circular-arc filament of `radius` about `center`, in the plane normal to
/// `normal`. Angles are measured in the arc's canonical in-plane frame; the
/// current runs from `start_angle` to `end_angle` (counterclockwise about
/// `normal` when `end_angle > start_angle`). A sweep of 2 pi is a full loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilamentArc {
    pub center: Vec3,
    pub radius: f64,
    pub normal: Vec3,
    pub start_angle: f64,
    pub end_angle: f64,
    pub current_weight: f64,
}

impl FilamentArc {
    pub fn new(
        center: Vec3,
        radius: f64,
        normal: Vec3,
        start_angle: f64,
        end_angle: f64,
        current_weight: f64,
    ) -> Result<Self, GeometryError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeometryError::InvalidParam {
                field: "radius",
                reason: format!("must be > 0, got {radius}"),
            });
        }
        if (normal.norm() - 1.0).abs() > 1e-12 {
            return Err(GeometryError::InvalidParam {
                field: "normal",
                reason: format!("must be a unit vector, |n| = {}", normal.norm()),
            });
        }
        let sweep = end_angle - start_angle;
        if !sweep.is_finite() || sweep.abs() < 1e-12 || sweep.abs() > 2.0 * PI + 1e-9 {
            return Err(GeometryError::InvalidParam {
                field: "sweep",
                reason: format!("arc sweep must satisfy 0 < |sweep| <= 2 pi, got {sweep}"),
            });
        }
        check_weight(current_weight)?;
        Ok(FilamentArc { center, radius, normal, start_angle, end_angle, current_weight })
    }

    /// Canonical in-plane frame (e1, e2) with e2 = normal x e1.
    pub fn frame(&self) -> (Vec3, Vec3) {
        let e1 = self.normal.any_perpendicular();
        let e2 = self.normal.cross(e1);
        (e1, e2)
    }

    pub fn sweep(&self) -> f64 {
        self.end_angle - self.start_angle
    }

    pub fn point_at(&self, theta: f64) -> Vec3 {
        let (e1, e2) = self.frame();
        self.center + (e1 * theta.cos() + e2 * theta.sin()) * self.radius
    }

    pub fn arc_length(&self) -> f64 {
        self.sweep().abs() * self.radius
    }
}

fn check_weight(w: f64) -> Result<(), GeometryError> {
    if !(w > 0.0 && w <= 1.0 + 1e-12) {
        return Err(GeometryError::InvalidParam {
            field: "current_weight",
            reason: format!("must be in (0, 1], got {w}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    Segment(FilamentSegment),
    Arc(FilamentArc),
}

impl Element {
    pub fn current_weight(&self) -> f64 {
        match self {
            Element::Segment(s) => s.current_weight,
            Element::Arc(a) => a.current_weight,
        }
    }
}

/// Physical conductor cross-section backing a group, used by the power audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConductorSection {
    /// Cross-section area perpendicular to the current (m^2).
    pub area: f64,
    /// Current path length (m).
    pub length: f64,
}

impl ConductorSection {
    pub fn resistance(&self, resistivity: f64) -> f64 {
        resistivity * self.length / self.area
    }
}

/// A series conductor: one solid piece of the current path, discretized into
/// parallel filaments whose weights sum to 1.
#[derive(Debug, Clone)]
pub struct ConductorGroup {
    pub label: String,
    pub elements: Vec<Element>,
    pub section: Option<ConductorSection>,
}

impl ConductorGroup {
    pub fn new(
        label: impl Into<String>,
        elements: Vec<Element>,
        section: Option<ConductorSection>,
    ) -> Result<Self, GeometryError> {
        let label = label.into();
        let sum: f64 = elements.iter().map(Element::current_weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(GeometryError::CurrentNotConserved { group: label, sum });
        }
        Ok(ConductorGroup { label, elements, section })
    }
}

/// Immutable discretized current-carrying geometry with a shared drive
/// current (amperes). Every group carries the full drive current, split
/// across its parallel filaments by `current_weight`.
#[derive(Debug, Clone)]
pub struct ConductorAssembly {
    label: String,
    drive_current: f64,
    groups: Vec<ConductorGroup>,
}

impl ConductorAssembly {
    pub fn new(
        label: impl Into<String>,
        drive_current: f64,
        groups: Vec<ConductorGroup>,
    ) -> Result<Self, GeometryError> {
        if !drive_current.is_finite() {
            return Err(GeometryError::InvalidParam {
                field: "drive_current",
                reason: "must be finite".into(),
            });
        }
        Ok(ConductorAssembly { label: label.into(), drive_current, groups })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn drive_current(&self) -> f64 {
        self.drive_current
    }

    /// Copy of the assembly with a different drive current.
    pub fn with_current(&self, drive_current: f64) -> ConductorAssembly {
        ConductorAssembly { drive_current, ..self.clone() }
    }

    pub fn groups(&self) -> &[ConductorGroup] {
        &self.groups
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.groups.iter().flat_map(|g| g.elements.iter())
    }

    pub fn element_count(&self) -> usize {
        self.groups.iter().map(|g| g.elements.len()).sum()
    }

    /// Axis-aligned bounding box over filament endpoints and arc extents.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut take = |p: Vec3| {
            lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        };
        for e in self.elements() {
            match e {
                Element::Segment(s) => {
                    take(s.start);
                    take(s.end);
                }
                Element::Arc(a) => {
                    // Full-circle extents: the in-plane half-width along
                    // axis k is radius * sqrt(1 - n_k^2).
                    let n = a.normal;
                    let ext = Vec3::new(
                        a.radius * (1.0 - n.x * n.x).max(0.0).sqrt(),
                        a.radius * (1.0 - n.y * n.y).max(0.0).sqrt(),
                        a.radius * (1.0 - n.z * n.z).max(0.0).sqrt(),
                    );
                    take(a.center + ext);
                    take(a.center - ext);
                }
            }
        }
        (lo, hi)
    }

    /// Superpose assemblies sharing one drive current into a single assembly.
    pub fn merged(
        label: impl Into<String>,
        parts: &[ConductorAssembly],
    ) -> Result<ConductorAssembly, GeometryError> {
        let current = parts.first().map(|p| p.drive_current).unwrap_or(0.0);
        let mut groups = Vec::new();
        for p in parts {
            if (p.drive_current - current).abs() > 0.0 {
                return Err(GeometryError::MergeCurrentMismatch(current, p.drive_current));
            }
            groups.extend(p.groups.iter().cloned());
        }
        ConductorAssembly::new(label, current, groups)
    }

    /// Apply a proper rigid motion to every filament.
    pub fn transformed(&self, t: &RigidTransform) -> ConductorAssembly {
        let groups = self
            .groups
            .iter()
            .map(|g| ConductorGroup {
                label: g.label.clone(),
                elements: g.elements.iter().map(|e| t.apply_element(e)).collect(),
                section: g.section,
            })
            .collect();
        ConductorAssembly {
            label: self.label.clone(),
            drive_current: self.drive_current,
            groups,
        }
    }

    /// One CSV row per filament:
    /// `group,type,x0_m,y0_m,z0_m,x1_m,y1_m,z1_m,radius_m,nx,ny,nz,start_rad,end_rad,weight`.
    /// Segment rows leave the arc columns empty and vice versa.
    pub fn to_element_csv(&self) -> String {
        let mut out = String::from(
            "group,type,x0_m,y0_m,z0_m,x1_m,y1_m,z1_m,radius_m,nx,ny,nz,start_rad,end_rad,weight\n",
        );
        let f = |v: f64| format!("{v:.8e}");
        for g in &self.groups {
            for e in &g.elements {
                match e {
                    Element::Segment(s) => {
                        out.push_str(&format!(
                            "{},segment,{},{},{},{},{},{},,,,,,,{}\n",
                            g.label,
                            f(s.start.x),
                            f(s.start.y),
                            f(s.start.z),
                            f(s.end.x),
                            f(s.end.y),
                            f(s.end.z),
                            f(s.current_weight),
                        ));
                    }
                    Element::Arc(a) => {
                        out.push_str(&format!(
                            "{},arc,{},{},{},,,,{},{},{},{},{},{},{}\n",
                            g.label,
                            f(a.center.x),
                            f(a.center.y),
                            f(a.center.z),
                            f(a.radius),
                            f(a.normal.x),
                            f(a.normal.y),
                            f(a.normal.z),
                            f(a.start_angle),
                            f(a.end_angle),
                            f(a.current_weight),
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Proper rigid motion (rotation + translation). Reflections are rejected.
#[derive(Debug, Clone, Copy)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, GeometryError> {
        let rtr = rotation.transpose().matmul(&rotation);
        let mut ortho_err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                ortho_err = ortho_err.max((rtr.get(i, j) - expect).abs());
            }
        }
        if ortho_err > 1e-9 {
            return Err(GeometryError::ImproperTransform {
                reason: format!("R^T R deviates from identity by {ortho_err:.3e}"),
            });
        }
        if (rotation.det() - 1.0).abs() > 1e-9 {
            return Err(GeometryError::ImproperTransform {
                reason: format!("det R = {}, reflection not allowed", rotation.det()),
            });
        }
        Ok(RigidTransform { rotation, translation })
    }

    pub fn translation_only(translation: Vec3) -> Self {
        RigidTransform { rotation: Mat3::IDENTITY, translation }
    }

    pub fn rotation_about(axis: Vec3, angle: f64) -> Result<Self, GeometryError> {
        Self::new(Mat3::rotation(axis, angle), Vec3::ZERO)
    }

    pub fn apply_point(&self, p: Vec3) -> Vec3 {
        self.rotation.mul_vec(p) + self.translation
    }

    fn apply_element(&self, e: &Element) -> Element {
        match e {
            Element::Segment(s) => Element::Segment(FilamentSegment {
                start: self.apply_point(s.start),
                end: self.apply_point(s.end),
                current_weight: s.current_weight,
            }),
            Element::Arc(a) => {
                // Rotate the arc's physical start point and re-express its
                // angle in the transformed arc's canonical frame; the sweep
                // is rotation-invariant for a proper rigid motion.
                let center = self.apply_point(a.center);
                let normal = self.rotation.mul_vec(a.normal);
                let start_point = self.apply_point(a.point_at(a.start_angle));
                let probe = FilamentArc {
                    center,
                    radius: a.radius,
                    normal,
                    start_angle: 0.0,
                    end_angle: 1.0,
                    current_weight: a.current_weight,
                };
                let (e1, e2) = probe.frame();
                let rel = start_point - center;
                let start_angle = rel.dot(e2).atan2(rel.dot(e1));
                Element::Arc(FilamentArc {
                    center,
                    radius: a.radius,
                    normal,
                    start_angle,
                    end_angle: start_angle + a.sweep(),
                    current_weight: a.current_weight,
                })
            }
        }
    }
}

/// Parameters of the slit-tube electrode structure (SI units).
///
/// Defaults follow the built device: a 17 mm tube, 5 mm bore, 8 mm outer
/// diameter, a 4 mm slit (width along x, openings at +/-y) and a 1 mm slit
/// (width along y, openings at +/-x), each stopping 2 mm short of one end.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MinitrapParams {
    pub tube_length: f64,
    pub inner_diameter: f64,
    pub outer_diameter: f64,
    /// (wide, narrow) slit widths in meters.
    pub slit_widths: (f64, f64),
    pub slit_stop_margin: f64,
    pub filaments_per_bar: usize,
    pub filaments_per_ring: usize,
    pub include_chip_ring: bool,
    pub include_leads: bool,
    /// Axial gap between the chip-end face and the chip trace ring (m).
    pub chip_ring_offset: f64,
    /// Chip trace cross-section (radial width, axial thickness) in meters.
    pub chip_trace_width: f64,
    pub chip_trace_thickness: f64,
    /// Coaxial lead modeling for the power audit (m, m^2 per lead).
    pub lead_length: f64,
    pub lead_area: f64,
}

impl Default for MinitrapParams {
    fn default() -> Self {
        MinitrapParams {
            tube_length: 17e-3,
            inner_diameter: 5e-3,
            outer_diameter: 8e-3,
            slit_widths: (4e-3, 1e-3),
            slit_stop_margin: 2e-3,
            filaments_per_bar: 3,
            filaments_per_ring: 2,
            include_chip_ring: true,
            include_leads: false,
            chip_ring_offset: 3e-3,
            chip_trace_width: 2.5e-3,
            chip_trace_thickness: 0.3e-3,
            lead_length: 50e-3,
            lead_area: 20e-6,
        }
    }
}

impl MinitrapParams {
    pub fn inner_radius(&self) -> f64 {
        0.5 * self.inner_diameter
    }

    pub fn outer_radius(&self) -> f64 {
        0.5 * self.outer_diameter
    }

    pub fn mean_radius(&self) -> f64 {
        0.25 * (self.inner_diameter + self.outer_diameter)
    }

    /// Axial extent of the Ioffe bars (m).
    pub fn bar_length(&self) -> f64 {
        self.tube_length - 2.0 * self.slit_stop_margin
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let err = |field: &'static str, reason: String| {
            Err(GeometryError::InvalidParam { field, reason })
        };
        if !(self.tube_length > 0.0) {
            return err("tube_length", format!("must be > 0, got {}", self.tube_length));
        }
        if !(self.inner_diameter > 0.0) {
            return err("inner_diameter", format!("must be > 0, got {}", self.inner_diameter));
        }
        if self.inner_diameter >= self.outer_diameter {
            return err(
                "outer_diameter",
                format!(
                    "must exceed inner_diameter ({} >= {})",
                    self.inner_diameter, self.outer_diameter
                ),
            );
        }
        let (ww, wn) = self.slit_widths;
        if !(ww > 0.0 && wn > 0.0) {
            return err("slit_widths", format!("must be > 0, got {:?}", self.slit_widths));
        }
        let r1 = self.inner_radius();
        if ww >= self.inner_diameter || wn >= self.inner_diameter {
            return err("slit_widths", "each slit must be narrower than the bore".into());
        }
        // The two slits must leave material for the bars at every radius;
        // the tightest constraint is at the inner wall.
        let gaps = (0.5 * ww / r1).asin() + (0.5 * wn / r1).asin();
        if gaps >= 0.5 * PI {
            return err(
                "slit_widths",
                format!("slit gaps cover a full quadrant at the inner wall ({gaps:.3} rad)"),
            );
        }
        if !(self.slit_stop_margin > 0.0) || 2.0 * self.slit_stop_margin >= self.tube_length {
            return err(
                "slit_stop_margin",
                format!(
                    "need 0 < 2 * margin < tube_length, got margin {} for length {}",
                    self.slit_stop_margin, self.tube_length
                ),
            );
        }
        if self.filaments_per_bar == 0 {
            return err("filaments_per_bar", "must be >= 1".into());
        }
        if self.filaments_per_ring == 0 {
            return err("filaments_per_ring", "must be >= 1".into());
        }
        if self.include_chip_ring {
            if !(self.chip_ring_offset > 0.0) {
                return err("chip_ring_offset", "must be > 0".into());
            }
            if !(self.chip_trace_width > 0.0 && self.chip_trace_thickness > 0.0) {
                return err("chip_trace_width", "trace cross-section must be > 0".into());
            }
        }
        if self.include_leads && !(self.lead_length > 0.0 && self.lead_area > 0.0) {
            return err("lead_length", "lead length and area must be > 0".into());
        }
        Ok(())
    }
}

/// Split `n` filaments into a (coarse, fine) grid: the first factor is the
/// largest divisor of `n` not exceeding sqrt(n).
fn grid_split(n: usize) -> (usize, usize) {
    let mut a = (n as f64).sqrt().floor() as usize;
    while a > 1 && n % a != 0 {
        a -= 1;
    }
    (a.max(1), n / a.max(1))
}

/// Cross-section area of one Ioffe bar: the annular quadrant minus the two
/// slit cuts, integrated over radius (Simpson's rule).
fn bar_cross_section_area(params: &MinitrapParams) -> f64 {
    let (ww, wn) = params.slit_widths;
    let r1 = params.inner_radius();
    let r2 = params.outer_radius();
    let span = |r: f64| {
        let phi = 0.5 * PI - (0.5 * ww / r).asin() - (0.5 * wn / r).asin();
        r * phi.max(0.0)
    };
    let n = 200;
    let h = (r2 - r1) / n as f64;
    let mut sum = span(r1) + span(r2);
    for i in 1..n {
        let w = if i % 2 == 0 { 2.0 } else { 4.0 };
        sum += w * span(r1 + i as f64 * h);
    }
    sum * h / 3.0
}

/// Build the mini-trap electrode assembly.
///
/// Current routing: the four bars alternate axial direction so their
/// transverse field is quadrupolar, and both pinch rings (plus the optional
/// chip trace ring) circulate in the same sense. The wide slit cuts through
/// the tip end, so the tip pinch ring misses the larger angular span, while
/// the chip-end ring is only interrupted by the narrow slit and is backed by
/// the full trace ring; the axial barrier is therefore higher on the chip
/// side.
///
/// Solid conductors are idealized as filament bundles with uniform weights
/// on a regular grid over the conductor cross-section. Ring filaments are
/// placed over the outboard half of the uncut end band: the circulating
/// current must route around the slit ends, which biases its path toward
/// the end face.
pub fn build_minitrap(
    params: &MinitrapParams,
    drive_current: f64,
) -> Result<ConductorAssembly, GeometryError> {
    params.validate()?;
    let (ww, wn) = params.slit_widths;
    let r1 = params.inner_radius();
    let r2 = params.outer_radius();
    let half_len = 0.5 * params.tube_length;
    let bar_half = half_len - params.slit_stop_margin;
    let mut groups = Vec::new();

    // Quadrant centroid azimuths at the mean radius; the bars sit there and
    // the end-band arcs run bar to bar. Quadrant k starts at azimuth
    // k * pi/2, counterclockwise, with the narrow gaps at +/-x and the wide
    // gaps at +/-y.
    let rm = params.mean_radius();
    let quadrant_bounds = |quadrant: usize, r: f64| -> (f64, f64) {
        match quadrant {
            0 => ((0.5 * wn / r).asin(), 0.5 * PI - (0.5 * ww / r).asin()),
            1 => (0.5 * PI + (0.5 * ww / r).asin(), PI - (0.5 * wn / r).asin()),
            2 => (PI + (0.5 * wn / r).asin(), 1.5 * PI - (0.5 * ww / r).asin()),
            _ => (1.5 * PI + (0.5 * ww / r).asin(), 2.0 * PI - (0.5 * wn / r).asin()),
        }
    };
    let centroid: [f64; 4] = std::array::from_fn(|q| {
        let (lo, hi) = quadrant_bounds(q, rm);
        0.5 * (lo + hi)
    });
    // Series circuit direction: the current rises in bars 1 and 3 and
    // descends bars 2 and 4, with every band arc circulating
    // counterclockwise.
    let bar_dir: [f64; 4] = [1.0, -1.0, 1.0, -1.0];

    // Ioffe bars, bundled on a regular grid over the quadrant cross-section.
    let (n_r, n_phi) = grid_split(params.filaments_per_bar);
    let weight = 1.0 / params.filaments_per_bar as f64;
    // Filament top positions per quadrant, reused for the end junctions.
    let mut bar_tops: Vec<Vec<Vec3>> = vec![Vec::new(); 4];
    for quadrant in 0..4usize {
        let mut elements = Vec::new();
        for i in 0..n_r {
            let r = r1 + (i as f64 + 0.5) * (r2 - r1) / n_r as f64;
            let (lo, hi) = quadrant_bounds(quadrant, r);
            for j in 0..n_phi {
                let phi = lo + (j as f64 + 0.5) * (hi - lo) / n_phi as f64;
                let top = Vec3::new(r * phi.cos(), r * phi.sin(), bar_half);
                let bottom = Vec3::new(r * phi.cos(), r * phi.sin(), -bar_half);
                let (start, end) =
                    if bar_dir[quadrant] > 0.0 { (bottom, top) } else { (top, bottom) };
                elements.push(Element::Segment(FilamentSegment::new(start, end, weight)?));
                bar_tops[quadrant].push(top);
            }
        }
        groups.push(ConductorGroup::new(
            format!("ioffe_bar_{}", quadrant + 1),
            elements,
            Some(ConductorSection {
                area: bar_cross_section_area(params),
                length: params.bar_length(),
            }),
        )?);
    }

    // End-band arcs. The narrow slit cuts through the tip end, so the tip
    // band is interrupted at +/-x and its two arcs connect the bar pairs
    // through +/-y (quadrants 1->2 and 3->4); the wide slit cuts through the
    // chip end, whose arcs run through +/-x (2->3 and 4->1). Current beyond
    // the last bar junction has no return path, so the arcs span exactly
    // bar to bar. All four circulate counterclockwise, closing one series
    // loop with the alternating bars.
    let (n_ring_r, n_ring_ax) = grid_split(params.filaments_per_ring);
    let ring_weight = 1.0 / params.filaments_per_ring as f64;
    let band_inner = half_len - params.slit_stop_margin;
    // Junction nodes sit a third of the band width above the bar tops so
    // they can never coincide with a filament grid point.
    let node_z = half_len - 2.0 * params.slit_stop_margin / 3.0;
    // (label, tip side, from-quadrant, to-quadrant)
    let ring_runs = [
        ("pinch_ring_tip_a", true, 0usize, 1usize),
        ("pinch_ring_tip_b", true, 2, 3),
        ("pinch_ring_chip_a", false, 1, 2),
        ("pinch_ring_chip_b", false, 3, 0),
    ];
    for (label, tip_side, q_from, q_to) in ring_runs {
        let start = centroid[q_from];
        let mut end = centroid[q_to];
        if end < start {
            end += 2.0 * PI;
        }
        let z_sign = if tip_side { 1.0 } else { -1.0 };
        let mut elements = Vec::new();
        let mut endpoints_from = Vec::new();
        let mut endpoints_to = Vec::new();
        for i in 0..n_ring_r {
            let r = r1 + (i as f64 + 0.5) * (r2 - r1) / n_ring_r as f64;
            for j in 0..n_ring_ax {
                let z = z_sign
                    * (band_inner
                        + (j as f64 + 0.5) * params.slit_stop_margin / n_ring_ax as f64);
                let arc =
                    FilamentArc::new(Vec3::new(0.0, 0.0, z), r, Vec3::Z, start, end, ring_weight)?;
                endpoints_from.push(arc.point_at(start));
                endpoints_to.push(arc.point_at(end));
                elements.push(Element::Arc(arc));
            }
        }
        groups.push(ConductorGroup::new(
            label,
            elements,
            Some(ConductorSection {
                area: params.slit_stop_margin * (r2 - r1),
                length: (end - start) * rm,
            }),
        )?);

        // Junctions at both ends of this arc: ring filaments gather at a
        // node, which feeds the bar bundle (or the reverse, following the
        // circuit direction).
        for (quadrant, arc_ends, arc_is_sink) in
            [(q_from, endpoints_from, false), (q_to, endpoints_to, true)]
        {
            let node = Vec3::new(
                rm * centroid[quadrant].cos(),
                rm * centroid[quadrant].sin(),
                z_sign * node_z,
            );
            // Current runs toward the arc at its start junction and away
            // from it at its end junction.
            let mut ring_side = Vec::new();
            for p in arc_ends {
                let (s, e) = if arc_is_sink { (p, node) } else { (node, p) };
                ring_side.push(Element::Segment(FilamentSegment::new(s, e, ring_weight)?));
            }
            let mean_len = |els: &[Element]| -> f64 {
                let total: f64 = els
                    .iter()
                    .map(|e| match e {
                        Element::Segment(s) => (s.end - s.start).norm(),
                        Element::Arc(a) => a.arc_length(),
                    })
                    .sum();
                total / els.len() as f64
            };
            let ring_section = ConductorSection {
                area: params.slit_stop_margin * (r2 - r1),
                length: mean_len(&ring_side),
            };
            let side = if tip_side { "tip" } else { "chip" };
            groups.push(ConductorGroup::new(
                format!("junction_{side}_q{}_ring", quadrant + 1),
                ring_side,
                Some(ring_section),
            )?);

            // Bar side: the bar's current enters (or leaves) the node. At
            // the tip the junction feeds the bar when the bar runs downward;
            // at the chip end when it runs upward.
            let into_bar = if tip_side { bar_dir[quadrant] < 0.0 } else { bar_dir[quadrant] > 0.0 };
            let mut bar_side = Vec::new();
            for top in &bar_tops[quadrant] {
                let p = Vec3::new(top.x, top.y, z_sign * bar_half);
                let (s, e) = if into_bar { (node, p) } else { (p, node) };
                bar_side.push(Element::Segment(FilamentSegment::new(s, e, weight)?));
            }
            let bar_section =
                ConductorSection { area: bar_cross_section_area(params), length: mean_len(&bar_side) };
            groups.push(ConductorGroup::new(
                format!("junction_{side}_q{}_bar", quadrant + 1),
                bar_side,
                Some(bar_section),
            )?);
        }
    }

    // Full trace ring on the chip, behind the chip-end pinch ring.
    if params.include_chip_ring {
        let z = -(half_len + params.chip_ring_offset);
        let n = params.filaments_per_ring;
        let w = 1.0 / n as f64;
        let rc = params.mean_radius();
        let mut elements = Vec::new();
        for j in 0..n {
            let r = rc + ((j as f64 + 0.5) / n as f64 - 0.5) * params.chip_trace_width;
            elements.push(Element::Arc(FilamentArc::new(
                Vec3::new(0.0, 0.0, z),
                r,
                Vec3::Z,
                0.0,
                2.0 * PI,
                w,
            )?));
        }
        groups.push(ConductorGroup::new(
            "chip_trace_ring",
            elements,
            Some(ConductorSection {
                area: params.chip_trace_width * params.chip_trace_thickness,
                length: 2.0 * PI * rc,
            }),
        )?);
    }

    // Coaxial leads: anti-parallel collinear segments on the axis, net zero
    // transverse field. They matter only for the power audit.
    if params.include_leads {
        let z0 = -(half_len + params.chip_ring_offset);
        let z1 = z0 - params.lead_length;
        let section =
            ConductorSection { area: params.lead_area, length: params.lead_length };
        groups.push(ConductorGroup::new(
            "lead_feed",
            vec![Element::Segment(FilamentSegment::new(
                Vec3::new(0.0, 0.0, z1),
                Vec3::new(0.0, 0.0, z0),
                1.0,
            )?)],
            Some(section),
        )?);
        groups.push(ConductorGroup::new(
            "lead_return",
            vec![Element::Segment(FilamentSegment::new(
                Vec3::new(0.0, 0.0, z0),
                Vec3::new(0.0, 0.0, z1),
                1.0,
            )?)],
            Some(section),
        )?);
    }

    ConductorAssembly::new("minitrap", drive_current, groups)
}

/// Relative polarity of the two coils in a rectangular pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairPolarity {
    /// Both coils circulate the same way: uniform bias field at the center.
    Helmholtz,
    /// Opposite circulation: quadrupole with zero field at the center.
    AntiHelmholtz,
}

/// Two rectangular loops of `width` x `height` (in the xy plane), separated
/// along z by `separation` about `center`, `turns` turns each.
pub fn build_rect_coil_pair(
    width: f64,
    height: f64,
    separation: f64,
    center: Vec3,
    turns: usize,
    polarity: PairPolarity,
    drive_current: f64,
) -> Result<ConductorAssembly, GeometryError> {
    for (field, v) in [("width", width), ("height", height), ("separation", separation)] {
        if !(v > 0.0) {
            return Err(GeometryError::InvalidParam {
                field,
                reason: format!("must be > 0, got {v}"),
            });
        }
    }
    if turns == 0 {
        return Err(GeometryError::InvalidParam { field: "turns", reason: "must be >= 1".into() });
    }
    let mut groups = Vec::new();
    for (coil_idx, z_sign) in [(0usize, 1.0), (1, -1.0)] {
        let reversed = coil_idx == 1 && polarity == PairPolarity::AntiHelmholtz;
        let c = center + Vec3::new(0.0, 0.0, 0.5 * separation * z_sign);
        let (hw, hh) = (0.5 * width, 0.5 * height);
        let mut corners = [
            c + Vec3::new(hw, hh, 0.0),
            c + Vec3::new(-hw, hh, 0.0),
            c + Vec3::new(-hw, -hh, 0.0),
            c + Vec3::new(hw, -hh, 0.0),
        ];
        if reversed {
            corners.reverse();
        }
        // Each side of each turn is a series conductor of its own.
        for turn in 0..turns {
            for k in 0..4 {
                groups.push(ConductorGroup::new(
                    format!("coil{}_turn{}_edge{}", coil_idx + 1, turn + 1, k + 1),
                    vec![Element::Segment(FilamentSegment::new(
                        corners[k],
                        corners[(k + 1) % 4],
                        1.0,
                    )?)],
                    None,
                )?);
            }
        }
    }
    ConductorAssembly::new("rect_coil_pair", drive_current, groups)
}

/// Circular loop of `turns` full turns about `normal`.
pub fn build_circular_loop(
    radius: f64,
    center: Vec3,
    normal: Vec3,
    turns: usize,
    drive_current: f64,
) -> Result<ConductorAssembly, GeometryError> {
    if !(radius > 0.0) {
        return Err(GeometryError::InvalidParam {
            field: "radius",
            reason: format!("must be > 0, got {radius}"),
        });
    }
    if turns == 0 {
        return Err(GeometryError::InvalidParam { field: "turns", reason: "must be >= 1".into() });
    }
    let n = normal.normalized().ok_or(GeometryError::InvalidParam {
        field: "normal",
        reason: "must be nonzero".into(),
    })?;
    let mut groups = Vec::new();
    for turn in 0..turns {
        groups.push(ConductorGroup::new(
            format!("turn{}", turn + 1),
            vec![Element::Arc(FilamentArc::new(center, radius, n, 0.0, 2.0 * PI, 1.0)?)],
            None,
        )?);
    }
    ConductorAssembly::new("circular_loop", drive_current, groups)
}

/// Copper resistivity used when the audit caller does not override it.
pub fn default_resistivity() -> f64 {
    RHO_COPPER
}
