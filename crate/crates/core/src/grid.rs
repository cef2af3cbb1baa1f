//! Periodic spectral grids and the radial ray used for three-dimensional
//! radial data.
//!
//! Cartesian grids sample the box `[-L, L)^N` with `n` points per axis.
//! The `Radial3d` geometry samples the ray `r_j = j dx`, `j = 0..n/2`, and
//! runs every spectral operation on the odd extension of `v = r u` over the
//! periodic interval `[-L, L)`, where `Δu = (1/r) ∂_rr v`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{NlsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Cartesian,
    Radial3d,
}

/// Validated description of a spatial grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    half_width: f64,
    dx: f64,
    geometry: Geometry,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, half_width: f64, geometry: Geometry) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(NlsError::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(NlsError::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        match geometry {
            Geometry::Cartesian if !(1..=3).contains(&dim) => {
                return Err(NlsError::InvalidGrid(format!(
                    "cartesian grids support N in 1..=3, got {dim}"
                )))
            }
            Geometry::Radial3d if dim != 3 => {
                return Err(NlsError::InvalidGrid(format!(
                    "radial3d geometry requires N = 3, got {dim}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            dim,
            n,
            half_width,
            dx: 2.0 * half_width / n as f64,
            geometry,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn is_radial(&self) -> bool {
        self.geometry == Geometry::Radial3d
    }

    /// Number of stored field samples.
    pub fn sample_count(&self) -> usize {
        match self.geometry {
            Geometry::Cartesian => self.n.pow(self.dim as u32),
            Geometry::Radial3d => self.n / 2,
        }
    }

    /// Number of spectral coefficients (the odd extension in radial mode).
    pub fn spectral_count(&self) -> usize {
        match self.geometry {
            Geometry::Cartesian => self.n.pow(self.dim as u32),
            Geometry::Radial3d => self.n,
        }
    }

    /// Fundamental wavenumber `π / L`.
    pub fn dk(&self) -> f64 {
        PI / self.half_width
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} N={} n={} L={} dx={}",
            self.geometry, self.dim, self.n, self.half_width, self.dx
        )
    }
}

/// Per-axis wavenumbers in transform order and the `|k|²` array.
#[derive(Debug, Clone)]
pub struct WavenumberSet {
    axis: Vec<f64>,
    k2: Vec<f64>,
}

impl WavenumberSet {
    fn new(spec: &GridSpec) -> Self {
        let n = spec.n;
        let dk = spec.dk();
        // Nyquist mode carries -n/2.
        let axis: Vec<f64> = (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                m as f64 * dk
            })
            .collect();
        let k2 = match spec.geometry {
            Geometry::Radial3d => axis.iter().map(|k| k * k).collect(),
            Geometry::Cartesian => (0..spec.spectral_count())
                .map(|idx| {
                    multi_index(idx, n, spec.dim)
                        .iter()
                        .take(spec.dim)
                        .map(|&j| axis[j] * axis[j])
                        .sum()
                })
                .collect(),
        };
        Self { axis, k2 }
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    /// `|k|^{2s}` multiplier with the zero mode mapped to zero for `s > 0`.
    pub fn k_pow(&self, s: f64) -> Vec<f64> {
        self.k2
            .iter()
            .map(|&k2| {
                if s == 0.0 {
                    1.0
                } else if k2 == 0.0 {
                    0.0
                } else {
                    k2.powf(s)
                }
            })
            .collect()
    }
}

fn multi_index(mut idx: usize, n: usize, dim: usize) -> [usize; 3] {
    let mut out = [0usize; 3];
    for a in (0..dim).rev() {
        out[a] = idx % n;
        idx /= n;
    }
    out
}

/// Relative size of `|u(L)|` tolerated by the radial Laplacian.
pub const RADIAL_BOUNDARY_TOLERANCE: f64 = 1e-6;

/// A grid with precomputed wavenumbers, coordinates and transform plans.
///
/// Immutable after construction; share it behind an `Arc`.
#[derive(Clone)]
pub struct Grid {
    spec: GridSpec,
    waves: WavenumberSet,
    positions: Vec<[f64; 3]>,
    radius: Vec<f64>,
    weights: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(spec.n);
        let inv = planner.plan_fft_inverse(spec.n);
        let waves = WavenumberSet::new(&spec);
        let dx = spec.dx;
        let (positions, radius, weights): (Vec<[f64; 3]>, Vec<f64>, Vec<f64>) = match spec.geometry
        {
            Geometry::Cartesian => {
                let w = dx.powi(spec.dim as i32);
                (0..spec.sample_count())
                    .map(|idx| {
                        let mi = multi_index(idx, spec.n, spec.dim);
                        let mut x = [0.0; 3];
                        for a in 0..spec.dim {
                            x[a] = -spec.half_width + mi[a] as f64 * dx;
                        }
                        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                        (x, r, w)
                    })
                    .fold((vec![], vec![], vec![]), |mut acc, (x, r, w)| {
                        acc.0.push(x);
                        acc.1.push(r);
                        acc.2.push(w);
                        acc
                    })
            }
            Geometry::Radial3d => {
                let m = spec.sample_count();
                let r: Vec<f64> = (0..m).map(|j| j as f64 * dx).collect();
                let pos = r.iter().map(|&r| [r, 0.0, 0.0]).collect();
                let w = r.iter().map(|&r| 4.0 * PI * r * r * dx).collect();
                (pos, r, w)
            }
        };
        Self {
            spec,
            waves,
            positions,
            radius,
            weights,
            fwd,
            inv,
        }
    }

    /// Validates the parameters and builds the grid.
    pub fn make(dim: usize, n: usize, half_width: f64, geometry: Geometry) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::new(GridSpec::new(dim, n, half_width, geometry)?)))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn len(&self) -> usize {
        self.spec.sample_count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_radial(&self) -> bool {
        self.spec.is_radial()
    }

    pub fn dx(&self) -> f64 {
        self.spec.dx
    }

    pub fn half_width(&self) -> f64 {
        self.spec.half_width
    }

    pub fn wavenumbers(&self) -> &WavenumberSet {
        &self.waves
    }

    /// Sample positions (unused components are zero; radial mode stores `(r, 0, 0)`).
    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    /// `|x|` for every sample.
    pub fn radius(&self) -> &[f64] {
        &self.radius
    }

    /// Riemann quadrature weights (`dx^N`, or `4π r² dr` on the ray with a
    /// zero weight at `r = 0`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∑ w_i f_i`.
    pub fn integrate(&self, f: impl IntoIterator<Item = f64>) -> f64 {
        f.into_iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Mask of samples lying in the outer `fraction` of the box.
    pub fn is_boundary_sample(&self, idx: usize, fraction: f64) -> bool {
        let edge = (1.0 - fraction) * self.spec.half_width;
        match self.spec.geometry {
            Geometry::Radial3d => self.radius[idx] >= edge,
            Geometry::Cartesian => self.positions[idx][..self.spec.dim]
                .iter()
                .any(|x| x.abs() >= edge),
        }
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(NlsError::SizeMismatch {
                expected: self.len(),
                actual: len,
            });
        }
        Ok(())
    }

    fn fft_lines(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.spec.n;
        let dim = match self.spec.geometry {
            Geometry::Cartesian => self.spec.dim,
            Geometry::Radial3d => 1,
        };
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // Contiguous last axis.
        plan.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::default(); n];
        for axis in 0..dim.saturating_sub(1) {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[start + j * stride] = *v;
                    }
                }
            }
        }
        if inverse {
            let scale = 1.0 / data.len() as f64;
            data.iter_mut().for_each(|v| *v *= scale);
        }
    }

    /// Unnormalized forward DFT over the spectral array, in place.
    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.spec.spectral_count());
        self.fft_lines(data, false);
    }

    /// Normalized inverse DFT over the spectral array, in place.
    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.spec.spectral_count());
        self.fft_lines(data, true);
    }

    /// Odd extension of `v = r u` over the periodic interval (radial mode).
    pub fn odd_extension(&self, u: &[Complex64]) -> Vec<Complex64> {
        let n = self.spec.n;
        let half = n / 2;
        let mut v = vec![Complex64::default(); n];
        for j in 1..half {
            let vj = u[j] * self.radius[j];
            v[j] = vj;
            v[n - j] = -vj;
        }
        v
    }

    /// Rebuilds ray samples from the spectrum of an odd extension. The
    /// `r = 0` sample is `∂_r v(0)`, evaluated spectrally.
    pub fn ray_from_spectrum(&self, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        let n = self.spec.n;
        let slope: Complex64 = spectrum
            .iter()
            .zip(self.waves.axis())
            .map(|(c, &k)| Complex64::new(0.0, k) * c)
            .sum::<Complex64>()
            / n as f64;
        self.inverse_in_place(&mut spectrum);
        let mut u = Vec::with_capacity(n / 2);
        u.push(slope);
        for j in 1..n / 2 {
            u.push(spectrum[j] / self.radius[j]);
        }
        u
    }

    /// Spectral coefficients of a field: the plain DFT on cartesian grids,
    /// the DFT of the odd extension of `r u` on the ray.
    pub fn transform(&self, samples: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(samples.len())?;
        let mut data = match self.spec.geometry {
            Geometry::Cartesian => samples.to_vec(),
            Geometry::Radial3d => self.odd_extension(samples),
        };
        self.forward_in_place(&mut data);
        Ok(data)
    }

    pub fn inverse_transform(&self, coefficients: &[Complex64]) -> Result<Vec<Complex64>> {
        if coefficients.len() != self.spec.spectral_count() {
            return Err(NlsError::SizeMismatch {
                expected: self.spec.spectral_count(),
                actual: coefficients.len(),
            });
        }
        Ok(match self.spec.geometry {
            Geometry::Cartesian => {
                let mut data = coefficients.to_vec();
                self.inverse_in_place(&mut data);
                data
            }
            Geometry::Radial3d => self.ray_from_spectrum(coefficients.to_vec()),
        })
    }

    /// `∑ |f|² dx^N` evaluated from spectral coefficients (Parseval). On the
    /// ray this is `2π ∑ |v|² dx` over the full odd extension.
    pub fn spectral_l2_squared(&self, coefficients: &[Complex64]) -> f64 {
        let total = self.spec.spectral_count() as f64;
        let s: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
        match self.spec.geometry {
            Geometry::Cartesian => s * self.dx().powi(self.dim() as i32) / total,
            Geometry::Radial3d => 2.0 * PI * s * self.dx() / total,
        }
    }

    /// Multiplies the spectrum of `u` by `mult(index)` and returns the field.
    pub fn apply_multiplier(
        &self,
        u: &[Complex64],
        mult: impl Fn(usize) -> Complex64,
    ) -> Vec<Complex64> {
        match self.spec.geometry {
            Geometry::Cartesian => {
                let mut data = u.to_vec();
                self.forward_in_place(&mut data);
                data.iter_mut().enumerate().for_each(|(i, c)| *c *= mult(i));
                self.inverse_in_place(&mut data);
                data
            }
            Geometry::Radial3d => {
                let mut data = self.odd_extension(u);
                self.forward_in_place(&mut data);
                data.iter_mut().enumerate().for_each(|(i, c)| *c *= mult(i));
                self.ray_from_spectrum(data)
            }
        }
    }

    /// Spectral partial derivatives. Cartesian grids return one array per
    /// axis; the ray returns the single radial derivative `∂_r u`.
    pub fn gradient(&self, u: &[Complex64]) -> Vec<Vec<Complex64>> {
        let n = self.spec.n;
        match self.spec.geometry {
            Geometry::Cartesian => {
                let mut spectrum = u.to_vec();
                self.forward_in_place(&mut spectrum);
                (0..self.spec.dim)
                    .map(|axis| {
                        let mut d = spectrum.clone();
                        d.iter_mut().enumerate().for_each(|(idx, c)| {
                            let j = multi_index(idx, n, self.spec.dim)[axis];
                            // The Nyquist mode has no odd partner; drop it.
                            let k = if j == n / 2 { 0.0 } else { self.waves.axis[j] };
                            *c *= Complex64::new(0.0, k);
                        });
                        self.inverse_in_place(&mut d);
                        d
                    })
                    .collect()
            }
            Geometry::Radial3d => {
                let mut v = self.odd_extension(u);
                self.forward_in_place(&mut v);
                v.iter_mut().enumerate().for_each(|(j, c)| {
                    let k = if j == n / 2 { 0.0 } else { self.waves.axis[j] };
                    *c *= Complex64::new(0.0, k);
                });
                self.inverse_in_place(&mut v);
                // u_r = (v' - u) / r; u_r(0) = 0 by symmetry.
                let mut ur = vec![Complex64::default(); n / 2];
                for j in 1..n / 2 {
                    ur[j] = (v[j] - u[j]) / self.radius[j];
                }
                vec![ur]
            }
        }
    }

    /// Spectral Laplacian. On the ray this is [`Grid::radial_reduce_laplacian`].
    pub fn laplacian(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(u.len())?;
        match self.spec.geometry {
            Geometry::Cartesian => Ok(self
                .apply_multiplier(u, |i| Complex64::new(-self.waves.k2[i], 0.0))),
            Geometry::Radial3d => self.radial_reduce_laplacian(u),
        }
    }

    /// `Δu = (1/r) ∂_rr (r u)` on the ray.
    ///
    /// The odd extension needs `u(L) = 0`. The boundary value is estimated by
    /// cubic extrapolation from the last four samples; a field whose tail is
    /// flat has that constant removed first (so constants map to zero), and
    /// any other field with `|u(L)| > 1e-6 max|u|` is rejected as a domain
    /// escape. The `r = 0` sample is the limit `3 ∂_rr u(0) = ∂_rrr v(0)`,
    /// evaluated spectrally.
    pub fn radial_reduce_laplacian(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        if !self.is_radial() {
            return Err(NlsError::Precondition(
                "radial Laplacian requires the radial3d geometry".into(),
            ));
        }
        self.check_len(u.len())?;
        let m = u.len();
        let scale = u.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let tail = &u[m - 4..];
        let flat = tail.iter().all(|c| (c - tail[3]).norm() <= 1e-12 * scale);
        let shift = if flat {
            tail[3]
        } else {
            let boundary = tail[3] * 4.0 - tail[2] * 6.0 + tail[1] * 4.0 - tail[0];
            let tol = RADIAL_BOUNDARY_TOLERANCE * scale;
            if boundary.norm() > tol {
                return Err(NlsError::DomainEscape(format!(
                    "|u(L)| = {:.3e} exceeds {:.3e}",
                    boundary.norm(),
                    tol
                )));
            }
            Complex64::default()
        };
        let shifted: Vec<Complex64> = u.iter().map(|c| c - shift).collect();
        let n = self.spec.n;
        let mut v = self.odd_extension(&shifted);
        self.forward_in_place(&mut v);
        v.iter_mut()
            .zip(&self.waves.k2)
            .for_each(|(c, &k2)| *c *= -k2);
        // -k² V, so ∂_rrr v(0) = Σ i k (-k² V) / n.
        let origin: Complex64 = v
            .iter()
            .zip(self.waves.axis())
            .enumerate()
            .map(|(j, (c, &k))| if j == n / 2 { Complex64::default() } else { Complex64::new(0.0, k) * c })
            .sum::<Complex64>()
            / n as f64;
        self.inverse_in_place(&mut v);
        let mut lap = vec![Complex64::default(); n / 2];
        lap[0] = origin;
        for j in 1..n / 2 {
            lap[j] = v[j] / self.radius[j];
        }
        Ok(lap)
    }

    /// `|k|^s`-weighted spectral seminorm, `‖|∇|^s u‖_{L²}`.
    pub fn hs_seminorm(&self, u: &[Complex64], s: f64) -> Result<f64> {
        let coeffs = self.transform(u)?;
        let kp = self.waves.k_pow(s);
        let weighted: Vec<Complex64> = coeffs
            .iter()
            .zip(&kp)
            .map(|(c, &w)| c * w.sqrt())
            .collect();
        Ok(self.spectral_l2_squared(&weighted).sqrt())
    }

    /// Linear Schrödinger flow `exp(i t Δ)` realized as `exp(-i t |k|²)`.
    pub fn free_propagate(&self, u: &[Complex64], t: f64) -> Vec<Complex64> {
        self.apply_multiplier(u, |i| Complex64::from_polar(1.0, -t * self.waves.k2[i]))
    }

    /// Wavevector of spectral index `idx` (cartesian), or `(k, 0, 0)` on the ray.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        match self.spec.geometry {
            Geometry::Radial3d => [self.waves.axis[idx], 0.0, 0.0],
            Geometry::Cartesian => {
                let m = multi_index(idx, self.spec.n, self.spec.dim);
                let mut k = [0.0; 3];
                for a in 0..self.spec.dim {
                    k[a] = self.waves.axis[m[a]];
                }
                k
            }
        }
    }

    /// Whether `k` is an integer multiple of `π / L`.
    pub fn is_lattice_wavenumber(&self, k: f64) -> bool {
        let m = k / self.spec.dk();
        (m - m.round()).abs() < 1e-12 * m.abs().max(1.0)
    }
}
