//! Radial weights for the localized virial quantities.
//!
//! Profiles are piecewise polynomials in `r`, so every derivative up to
//! fourth order is evaluated exactly, both on the simulation grid and on
//! the finer audit mesh used for certification.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffFamily {
    ExteriorMass,
    Virial,
    PureQuadratic,
}

impl fmt::Display for CutoffFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutoffFamily::ExteriorMass => "exterior_mass",
            CutoffFamily::Virial => "virial",
            CutoffFamily::PureQuadratic => "pure_quadratic",
        })
    }
}

/// How a piece relates to the closed forms `0`, `1` and `r²`. Weights
/// built from the profile use the exact values on such pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    Zero,
    One,
    Quadratic,
    General,
}

/// Polynomial `∑ c_k (r - start)^k` on `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub coeffs: Vec<f64>,
    pub kind: PieceKind,
}

impl Piece {
    pub fn eval(&self, r: f64, order: usize) -> f64 {
        let t = r - self.start;
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().skip(order).rev() {
            let falling: f64 = ((k - order + 1)..=k).map(|j| j as f64).product();
            acc = acc * t + c * falling;
        }
        acc
    }
}

/// Ordered pieces; the last one extends to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePolynomial {
    pieces: Vec<Piece>,
}

impl PiecewisePolynomial {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() || pieces[0].start != 0.0 {
            return Err(NlsError::Precondition("pieces must start at r = 0".into()));
        }
        for w in pieces.windows(2) {
            if w[0].end != w[1].start || !(w[0].end > w[0].start) {
                return Err(NlsError::Precondition("pieces must be contiguous".into()));
            }
        }
        if pieces.last().unwrap().end != f64::INFINITY {
            return Err(NlsError::Precondition("last piece must be unbounded".into()));
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn piece_at(&self, r: f64) -> &Piece {
        let idx = self.pieces.partition_point(|p| p.start <= r).saturating_sub(1);
        &self.pieces[idx]
    }

    /// `φ^{(order)}(r)`.
    pub fn eval(&self, r: f64, order: usize) -> f64 {
        self.piece_at(r).eval(r, order)
    }

    /// Start of the unbounded last piece.
    pub fn last_breakpoint(&self) -> f64 {
        self.pieces.last().unwrap().start
    }

    /// Largest jump of derivatives `0..=order` across interior breakpoints.
    pub fn max_jump(&self, order: usize) -> (f64, f64) {
        let mut worst = (0.0, 0.0);
        for w in self.pieces.windows(2) {
            let r = w[1].start;
            for d in 0..=order {
                let jump = (w[0].eval(r, d) - w[1].eval(r, d)).abs();
                if jump > worst.0 {
                    worst = (jump, r);
                }
            }
        }
        worst
    }
}

/// Integrates `φ''` (powers of `r - start`) twice with the given `φ, φ'`
/// at the left end.
fn integrate_twice(g: &[f64], phi0: f64, dphi0: f64) -> Vec<f64> {
    let mut c = vec![phi0, dphi0];
    for (k, &gk) in g.iter().enumerate() {
        c.push(gk / ((k + 1) * (k + 2)) as f64);
    }
    c
}

/// Quintic smoothstep `6θ⁵ − 15θ⁴ + 10θ³` from `y0` to `y1` over `h`.
fn smoothstep_coeffs(y0: f64, y1: f64, h: f64) -> Vec<f64> {
    let d = y1 - y0;
    vec![
        y0,
        0.0,
        0.0,
        10.0 * d / h.powi(3),
        -15.0 * d / h.powi(4),
        6.0 * d / h.powi(5),
    ]
}

/// Largest `|S''|` of the unit smoothstep, `10/√3`.
pub const SMOOTHSTEP_MAX_CURVATURE: f64 = 5.773_502_691_896_258;

/// Shape parameters of the virial cutoff, in units of `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialShape {
    /// Depth `D` of the negative `φ''` well.
    pub well_depth: f64,
    /// Height `B` of the positive `φ''` lobe after the well.
    pub lobe_height: f64,
    /// Plateau length at `-D`.
    pub well_plateau: f64,
    /// Plateau length at `B`.
    pub lobe_plateau: f64,
    /// Fractional slack in the `φ⁗` bound used to size the transitions.
    pub safety: f64,
    /// Support radius over `R`.
    pub support: f64,
    pub iterations: usize,
}

impl VirialShape {
    /// Transition width for a jump `|Δy|` in `φ''` so that `|φ⁗| ≤ 4 / ((1 + safety) R²)`.
    fn width(jump: f64, safety: f64) -> f64 {
        (jump.abs() * SMOOTHSTEP_MAX_CURVATURE / 4.0 * (1.0 + safety)).sqrt()
    }
}

/// Levels and widths of `φ''` past `r = R`, for radius `radius`.
fn virial_segments(depth: f64, lobe: f64, p1: f64, p2: f64, safety: f64) -> Vec<(f64, f64, f64)> {
    let a1 = VirialShape::width(2.0 + depth, safety);
    let a2 = VirialShape::width(depth + lobe, safety);
    let a3 = VirialShape::width(lobe, safety);
    // (start level, end level, width); equal levels are plateaus.
    let mut segs = vec![(2.0, -depth, a1)];
    if p1 > 0.0 {
        segs.push((-depth, -depth, p1));
    }
    segs.push((-depth, lobe, a2));
    if p2 > 0.0 {
        segs.push((lobe, lobe, p2));
    }
    segs.push((lobe, 0.0, a3));
    segs
}

fn virial_polynomial(radius: f64, shape: (f64, f64, f64, f64, f64)) -> PiecewisePolynomial {
    let (depth, lobe, p1, p2, safety) = shape;
    let mut pieces = vec![Piece {
        start: 0.0,
        end: radius,
        coeffs: vec![0.0, 0.0, 1.0],
        kind: PieceKind::Quadratic,
    }];
    let (mut phi, mut dphi, mut r) = (radius * radius, 2.0 * radius, radius);
    for (y0, y1, w) in virial_segments(depth, lobe, p1, p2, safety) {
        let h = w * radius;
        let g = if y0 == y1 {
            vec![y0]
        } else {
            smoothstep_coeffs(y0, y1, h)
        };
        let piece = Piece {
            start: r,
            end: r + h,
            coeffs: integrate_twice(&g, phi, dphi),
            kind: PieceKind::General,
        };
        phi = piece.eval(r + h, 0);
        dphi = piece.eval(r + h, 1);
        r += h;
        pieces.push(piece);
    }
    pieces.push(Piece {
        start: r,
        end: f64::INFINITY,
        coeffs: vec![0.0],
        kind: PieceKind::Zero,
    });
    PiecewisePolynomial { pieces }
}

/// Values `(φ, φ')` at the end of the transition, in units of `R`.
fn virial_end(depth: f64, lobe: f64, p1: f64, p2: f64, safety: f64) -> (f64, f64) {
    let poly = virial_polynomial(1.0, (depth, lobe, p1, p2, safety));
    let last = &poly.pieces[poly.pieces.len() - 2];
    (last.eval(last.end, 0), last.eval(last.end, 1))
}

/// Solves for well depth and lobe height so that `φ = φ' = 0` at the end.
fn shoot_virial(p1: f64, p2: f64, safety: f64) -> Result<VirialShape> {
    let (mut d, mut b) = (3.0, 1.5);
    let residual = |d: f64, b: f64| virial_end(d, b, p1, p2, safety);
    for it in 1..=200 {
        let (f0, f1) = residual(d, b);
        if f0.abs() < 1e-14 && f1.abs() < 1e-14 {
            let segs = virial_segments(d, b, p1, p2, safety);
            return Ok(VirialShape {
                well_depth: d,
                lobe_height: b,
                well_plateau: p1,
                lobe_plateau: p2,
                safety,
                support: 1.0 + segs.iter().map(|s| s.2).sum::<f64>(),
                iterations: it,
            });
        }
        let h = 1e-7;
        let (a0, a1) = residual(d + h, b);
        let (b0, b1) = residual(d, b + h);
        let j = [[(a0 - f0) / h, (b0 - f0) / h], [(a1 - f1) / h, (b1 - f1) / h]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(NlsError::ShootingFailure("singular Jacobian".into()));
        }
        let dd = (j[1][1] * f0 - j[0][1] * f1) / det;
        let db = (-j[1][0] * f0 + j[0][0] * f1) / det;
        // Damp steps that would flip the signs of the levels.
        let mut lam = 1.0;
        while d - lam * dd <= 0.0 || b - lam * db <= 0.0 {
            lam *= 0.5;
            if lam < 1e-6 {
                return Err(NlsError::ShootingFailure("levels left the positive range".into()));
            }
        }
        d -= lam * dd;
        b -= lam * db;
    }
    Err(NlsError::ShootingFailure(format!(
        "no convergence in 200 iterations (depth {d}, lobe {b})"
    )))
}

/// One certified inequality or identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintMargin {
    pub name: String,
    /// Worst `bound − value` over the mesh; identities report `−max|error|`.
    pub margin: f64,
    /// Where the worst margin occurs.
    pub at: f64,
    /// Margins above `−tolerance` pass.
    pub tolerance: f64,
}

impl ConstraintMargin {
    pub fn passed(&self) -> bool {
        self.margin >= -self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub family: CutoffFamily,
    pub radius: f64,
    pub support: f64,
    pub audit_points: usize,
    pub margins: Vec<ConstraintMargin>,
    /// `max |φ⁗|` on the mesh (the certified bound is one-sided).
    pub max_abs_d4: f64,
    pub max_d1: f64,
    pub max_d2: f64,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.margins.iter().all(ConstraintMargin::passed)
    }

    pub fn margin(&self, name: &str) -> Option<&ConstraintMargin> {
        self.margins.iter().find(|m| m.name == name)
    }

    pub fn worst(&self) -> Option<&ConstraintMargin> {
        self.margins
            .iter()
            .filter(|m| !m.passed())
            .min_by(|a, b| (a.margin + a.tolerance).total_cmp(&(b.margin + b.tolerance)))
    }
}

struct MarginTracker {
    name: &'static str,
    margin: f64,
    at: f64,
    tolerance: f64,
}

impl MarginTracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            margin: f64::INFINITY,
            at: 0.0,
            tolerance,
        }
    }

    fn push(&mut self, value: f64, r: f64) {
        if value < self.margin {
            self.margin = value;
            self.at = r;
        }
    }

    fn finish(self) -> ConstraintMargin {
        ConstraintMargin {
            name: self.name.to_string(),
            margin: if self.margin.is_finite() { self.margin } else { 0.0 },
            at: self.at,
            tolerance: self.tolerance,
        }
    }
}

/// Audit mesh: uniform with spacing `spacing` on `[0, extent]`, plus every
/// breakpoint and piece midpoint.
pub fn audit_mesh(poly: &PiecewisePolynomial, spacing: f64, extent: f64) -> Vec<f64> {
    let count = (extent / spacing).ceil() as usize;
    let mut mesh: Vec<f64> = (0..=count).map(|j| j as f64 * spacing).collect();
    for p in poly.pieces() {
        mesh.push(p.start);
        if p.end.is_finite() {
            mesh.push(0.5 * (p.start + p.end));
            mesh.push(p.end);
        }
    }
    mesh.sort_by(f64::total_cmp);
    mesh.dedup();
    mesh
}

/// Checks the family's constraints on the audit mesh.
pub fn certify_polynomial(
    family: CutoffFamily,
    radius: f64,
    poly: &PiecewisePolynomial,
    spacing: f64,
) -> CertificationReport {
    let support = poly.last_breakpoint();
    let extent = 1.25 * support.max(2.0 * radius);
    let mesh = audit_mesh(poly, spacing, extent);
    let scale = radius * radius;
    let eq_tol = 1e-10 * scale.max(1.0);
    let ineq_tol = 1e-12 * scale.max(1.0);
    let mut max_abs_d4 = 0.0f64;
    let mut max_d1 = f64::NEG_INFINITY;
    let mut max_d2 = f64::NEG_INFINITY;
    let mut trackers: Vec<MarginTracker>;
    match family {
        CutoffFamily::ExteriorMass => {
            trackers = vec![
                MarginTracker::new("phi_zero_inner", eq_tol),
                MarginTracker::new("phi_one_outer", eq_tol),
                MarginTracker::new("phi_nonneg", ineq_tol),
                MarginTracker::new("phi_le_one", ineq_tol),
                MarginTracker::new("dphi_le_4_over_r", ineq_tol / radius),
            ];
        }
        CutoffFamily::Virial | CutoffFamily::PureQuadratic => {
            trackers = vec![
                MarginTracker::new("phi_r2_inner", eq_tol),
                MarginTracker::new("phi_zero_outer", eq_tol),
                MarginTracker::new("phi_nonneg", ineq_tol),
                MarginTracker::new("phi_le_r2", ineq_tol),
                MarginTracker::new("d2phi_le_2", ineq_tol / scale.max(1.0)),
                MarginTracker::new("d4phi_le_4_over_r2", ineq_tol / scale.max(1.0).powi(2)),
                MarginTracker::new("dphi_le_2r", ineq_tol / radius),
            ];
        }
    }
    for &r in &mesh {
        let d: Vec<f64> = (0..=4).map(|k| poly.eval(r, k)).collect();
        max_abs_d4 = max_abs_d4.max(d[4].abs());
        max_d1 = max_d1.max(d[1]);
        max_d2 = max_d2.max(d[2]);
        match family {
            CutoffFamily::ExteriorMass => {
                if r <= radius / 2.0 {
                    trackers[0].push(-d[0].abs(), r);
                }
                if r >= radius {
                    trackers[1].push(-(d[0] - 1.0).abs(), r);
                }
                trackers[2].push(d[0], r);
                trackers[3].push(1.0 - d[0], r);
                trackers[4].push(4.0 / radius - d[1], r);
            }
            CutoffFamily::Virial | CutoffFamily::PureQuadratic => {
                if r <= radius {
                    trackers[0].push(-(d[0] - r * r).abs(), r);
                }
                if family == CutoffFamily::Virial && r >= support {
                    trackers[1].push(-d[0].abs(), r);
                }
                trackers[2].push(d[0], r);
                trackers[3].push(r * r - d[0], r);
                trackers[4].push(2.0 - d[2], r);
                trackers[5].push(4.0 / (radius * radius) - d[4], r);
                trackers[6].push(2.0 * r - d[1], r);
            }
        }
    }
    let mut margins: Vec<ConstraintMargin> = trackers.into_iter().map(MarginTracker::finish).collect();
    // The smoothstep exterior weight is C²; the virial weight is C⁴.
    let (name, order) = match family {
        CutoffFamily::ExteriorMass => ("c2_continuity", 2),
        _ => ("c4_continuity", 4),
    };
    let (jump, at) = poly.max_jump(order);
    margins.push(ConstraintMargin {
        name: name.into(),
        margin: -jump,
        at,
        tolerance: eq_tol,
    });
    CertificationReport {
        family,
        radius,
        support,
        audit_points: mesh.len(),
        margins,
        max_abs_d4,
        max_d1,
        max_d2,
    }
}

/// A radial weight with its samples on a grid.
#[derive(Debug, Clone)]
pub struct CutoffProfile {
    family: CutoffFamily,
    radius: f64,
    poly: PiecewisePolynomial,
    grid: Arc<Grid>,
    /// `φ^{(k)}(|x_i|)`, `k = 0..=4`.
    samples: [Vec<f64>; 5],
    shape: Option<VirialShape>,
    report: CertificationReport,
}

impl CutoffProfile {
    pub fn family(&self) -> CutoffFamily {
        self.family
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn polynomial(&self) -> &PiecewisePolynomial {
        &self.poly
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn derivative(&self, order: usize) -> &[f64] {
        &self.samples[order]
    }

    pub fn shape(&self) -> Option<&VirialShape> {
        self.shape.as_ref()
    }

    pub fn report(&self) -> &CertificationReport {
        &self.report
    }

    pub fn support(&self) -> f64 {
        self.report.support
    }

    /// Builds a profile from any piecewise polynomial and certifies it;
    /// the result is returned even when certification fails.
    pub fn from_polynomial(
        family: CutoffFamily,
        radius: f64,
        poly: PiecewisePolynomial,
        grid: Arc<Grid>,
    ) -> Self {
        let report = certify_polynomial(family, radius, &poly, grid.dx() / 10.0);
        let samples = std::array::from_fn(|k| grid.radius().iter().map(|&r| poly.eval(r, k)).collect());
        Self {
            family,
            radius,
            poly,
            grid,
            samples,
            shape: None,
            report,
        }
    }

    /// CSV with columns `r,phi,dphi,d2phi,d3phi,d4phi` on the audit mesh.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "r,phi,dphi,d2phi,d3phi,d4phi")?;
        let extent = 1.25 * self.support().max(2.0 * self.radius);
        let spacing = self.grid.dx() / 10.0;
        let count = (extent / spacing).ceil() as usize;
        for j in 0..=count {
            let r = j as f64 * spacing;
            write!(out, "{r:.16e}")?;
            for k in 0..=4 {
                write!(out, ",{:.16e}", self.poly.eval(r, k))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn check_radius(radius: f64, grid: &Grid) -> Result<()> {
    if !(radius.is_finite() && radius >= 10.0 * grid.dx()) {
        return Err(NlsError::Precondition(format!(
            "cutoff radius {radius} must be at least 10 dx = {}",
            10.0 * grid.dx()
        )));
    }
    if 2.0 * radius > grid.half_width() {
        return Err(NlsError::Precondition(format!(
            "2R = {} must lie within the box half width {}",
            2.0 * radius,
            grid.half_width()
        )));
    }
    Ok(())
}

fn fail_on(report: &CertificationReport) -> Result<()> {
    match report.worst() {
        None => Ok(()),
        Some(m) => Err(NlsError::ConstraintViolation {
            constraint: constraint_name(&m.name),
            r: m.at,
            violation: -m.margin,
        }),
    }
}

fn constraint_name(name: &str) -> &'static str {
    const NAMES: [&str; 13] = [
        "c2_continuity",
        "c4_continuity",
        "phi_zero_inner",
        "phi_one_outer",
        "phi_nonneg",
        "phi_le_one",
        "dphi_le_4_over_r",
        "phi_r2_inner",
        "phi_zero_outer",
        "phi_le_r2",
        "d2phi_le_2",
        "d4phi_le_4_over_r2",
        "dphi_le_2r",
    ];
    NAMES.iter().find(|n| **n == name).copied().unwrap_or("unknown")
}

/// `φ = S((r − R/2)/(R/2))` between `R/2` and `R`, zero inside, one outside.
pub fn exterior_polynomial(radius: f64) -> PiecewisePolynomial {
    let h = radius / 2.0;
    PiecewisePolynomial {
        pieces: vec![
            Piece {
                start: 0.0,
                end: h,
                coeffs: vec![0.0],
                kind: PieceKind::Zero,
            },
            Piece {
                start: h,
                end: radius,
                coeffs: smoothstep_coeffs(0.0, 1.0, h),
                kind: PieceKind::General,
            },
            Piece {
                start: radius,
                end: f64::INFINITY,
                coeffs: vec![1.0],
                kind: PieceKind::One,
            },
        ],
    }
}

pub fn build_exterior_cutoff(radius: f64, grid: Arc<Grid>) -> Result<CutoffProfile> {
    check_radius(radius, &grid)?;
    let profile = CutoffProfile::from_polynomial(
        CutoffFamily::ExteriorMass,
        radius,
        exterior_polynomial(radius),
        grid,
    );
    fail_on(&profile.report)?;
    Ok(profile)
}

/// Default plateau lengths (in units of `R`) at the well and lobe levels.
pub const WELL_PLATEAU: f64 = 0.0;
pub const LOBE_PLATEAU: f64 = 0.5;
/// Successive `φ⁗` slack factors: the first try and three widenings.
pub const SAFETY_SCHEDULE: [f64; 4] = [0.1, 0.25, 0.5, 1.0];

/// Virial polynomial for radius `R`, along with its solved shape.
pub fn virial_polynomial_for(radius: f64, safety: f64) -> Result<(PiecewisePolynomial, VirialShape)> {
    let shape = shoot_virial(WELL_PLATEAU, LOBE_PLATEAU, safety)?;
    let poly = virial_polynomial(
        radius,
        (shape.well_depth, shape.lobe_height, WELL_PLATEAU, LOBE_PLATEAU, safety),
    );
    Ok((poly, shape))
}

/// `φ = r²` on `[0, R]`, then `φ''` runs through a negative well and a
/// positive lobe (quintic smoothstep transitions) back to zero, with both
/// levels solved so that `φ` and `φ'` vanish together at the support edge.
pub fn build_virial_cutoff(radius: f64, grid: Arc<Grid>) -> Result<CutoffProfile> {
    check_radius(radius, &grid)?;
    let mut last_err = None;
    for &safety in SAFETY_SCHEDULE.iter() {
        let (poly, shape) = virial_polynomial_for(radius, safety)?;
        let mut profile =
            CutoffProfile::from_polynomial(CutoffFamily::Virial, radius, poly, grid.clone());
        profile.shape = Some(shape);
        match fail_on(&profile.report) {
            Ok(()) => return Ok(profile),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

pub fn quadratic_polynomial() -> PiecewisePolynomial {
    PiecewisePolynomial {
        pieces: vec![Piece {
            start: 0.0,
            end: f64::INFINITY,
            coeffs: vec![0.0, 0.0, 1.0],
            kind: PieceKind::Quadratic,
        }],
    }
}

/// `φ = r²` everywhere; `radius` only sets the audit extent.
pub fn pure_quadratic(grid: Arc<Grid>) -> CutoffProfile {
    let radius = grid.half_width();
    CutoffProfile::from_polynomial(CutoffFamily::PureQuadratic, radius, quadratic_polynomial(), grid)
}

/// Certification report of a built profile.
pub fn certify(profile: &CutoffProfile) -> &CertificationReport {
    profile.report()
}

/// Largest slope of the exterior cutoff, `S'(1/2) / (R/2) = 15 / (4R)`.
pub fn exterior_max_slope(radius: f64) -> f64 {
    15.0 / (4.0 * radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;

    fn grid() -> Arc<Grid> {
        Grid::make(1, 1024, 40.0, Geometry::Cartesian).unwrap()
    }

    #[test]
    fn piece_derivatives_are_exact() {
        let p = Piece {
            start: 1.0,
            end: 2.0,
            coeffs: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            kind: PieceKind::General,
        };
        let t: f64 = 0.5;
        assert!((p.eval(1.5, 0) - (1.0 + 2.0 * t + 3.0 * t * t + 4.0 * t.powi(3) + 5.0 * t.powi(4))).abs() < 1e-14);
        assert!((p.eval(1.5, 1) - (2.0 + 6.0 * t + 12.0 * t * t + 20.0 * t.powi(3))).abs() < 1e-14);
        assert!((p.eval(1.5, 4) - 120.0).abs() < 1e-12);
        assert_eq!(p.eval(1.5, 5), 0.0);
    }

    #[test]
    fn exterior_boundary_values() {
        let profile = build_exterior_cutoff(5.0, grid()).unwrap();
        let poly = profile.polynomial();
        assert_eq!(poly.eval(2.5, 0), 0.0);
        assert!((poly.eval(5.0, 0) - 1.0).abs() < 1e-15);
        assert!((poly.eval(3.75, 0) - 0.5).abs() < 1e-15);
        assert!((profile.report().max_d1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn exterior_slope_margin_is_quarter_over_r() {
        for r in [5.0, 10.0, 15.0] {
            let profile = build_exterior_cutoff(r, grid()).unwrap();
            let m = profile.report().margin("dphi_le_4_over_r").unwrap();
            assert!((m.margin - 1.0 / (4.0 * r)).abs() < 1e-12, "R = {r}: {}", m.margin);
        }
    }

    #[test]
    fn radius_preconditions() {
        assert!(build_exterior_cutoff(0.5, grid()).is_err());
        assert!(build_virial_cutoff(25.0, grid()).is_err());
    }

    #[test]
    fn pure_quadratic_margins() {
        let report = pure_quadratic(grid()).report().clone();
        assert!(report.passed());
        assert_eq!(report.margin("d2phi_le_2").unwrap().margin, 0.0);
    }

    #[test]
    fn tampered_curvature_is_detected() {
        let mut pieces = quadratic_polynomial().pieces().to_vec();
        pieces[0].end = 3.0;
        pieces.push(Piece {
            start: 3.0,
            end: f64::INFINITY,
            coeffs: vec![9.0, 6.0, 1.05],
            kind: PieceKind::General,
        });
        let poly = PiecewisePolynomial::new(pieces).unwrap();
        let profile = CutoffProfile::from_polynomial(CutoffFamily::PureQuadratic, 5.0, poly, grid());
        let m = profile.report().margin("d2phi_le_2").unwrap();
        assert!((m.margin + 0.1).abs() < 1e-12);
        assert!(!profile.report().passed());
    }

    #[test]
    fn virial_shooting_closes_both_conditions() {
        let (poly, shape) = virial_polynomial_for(1.0, 0.1).unwrap();
        assert!(shape.iterations <= 200);
        let end = poly.last_breakpoint();
        let last = &poly.pieces()[poly.pieces().len() - 2];
        assert!(last.eval(end, 0).abs() < 1e-13);
        assert!(last.eval(end, 1).abs() < 1e-13);
        assert!((end - shape.support).abs() < 1e-12);
    }
}
