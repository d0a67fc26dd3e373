//! Field containers: spectral coefficients and their physical-space samples.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Tensor shape of a field's components: `[]` scalar, `[m]` vector,
/// `[m, m]` matrix, and so on. Components are flattened row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn scalar() -> Self {
        Shape(Vec::new())
    }

    pub fn vector(m: usize) -> Self {
        Shape(vec![m])
    }

    pub fn matrix(r: usize, c: usize) -> Self {
        Shape(vec![r, c])
    }

    pub fn from_dims(dims: Vec<usize>) -> Self {
        Shape(dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// Number of scalar components.
    pub fn size(&self) -> usize {
        self.0.iter().product()
    }

    pub fn append(&self, m: usize) -> Self {
        let mut d = self.0.clone();
        d.push(m);
        Shape(d)
    }

    pub fn is_square_matrix(&self) -> bool {
        self.0.len() == 2 && self.0[0] == self.0[1]
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "scalar");
        }
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "scalar" {
            return Ok(Shape::scalar());
        }
        let dims: std::result::Result<Vec<usize>, _> = s.split('x').map(|p| p.parse()).collect();
        match dims {
            Ok(d) if !d.is_empty() && d.iter().all(|&x| x > 0) => Ok(Shape(d)),
            _ => Err(Error::ShapeMismatch(format!("cannot parse component shape '{s}'"))),
        }
    }
}

/// Band-limited field stored as Fourier coefficients, one array per component.
/// Physical-space samples are computed lazily and cached.
pub struct SpectralField {
    grid: Arc<Grid>,
    shape: Shape,
    coeffs: Vec<Vec<Complex64>>,
    physical: OnceLock<Vec<Vec<f64>>>,
}

impl Clone for SpectralField {
    fn clone(&self) -> Self {
        SpectralField {
            grid: self.grid.clone(),
            shape: self.shape.clone(),
            coeffs: self.coeffs.clone(),
            physical: self.physical.clone(),
        }
    }
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("shape", &self.shape)
            .field("cached", &self.physical.get().is_some())
            .finish()
    }
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>, shape: Shape) -> Self {
        let comps = shape.size();
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![vec![Complex64::new(0.0, 0.0); grid.len()]; comps],
            shape,
            physical: OnceLock::new(),
        }
    }

    pub fn from_coeffs(grid: &Arc<Grid>, shape: Shape, coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        if coeffs.len() != shape.size() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape} needs {} components, got {}",
                shape.size(),
                coeffs.len()
            )));
        }
        if let Some(c) = coeffs.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::DimensionMismatch {
                expected: grid.len().to_string(),
                got: c.len().to_string(),
            });
        }
        Ok(SpectralField {
            grid: grid.clone(),
            shape,
            coeffs,
            physical: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn n_components(&self) -> usize {
        self.coeffs.len()
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.coeffs[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    /// Mutable access invalidates the physical cache.
    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>] {
        self.physical = OnceLock::new();
        &mut self.coeffs
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.coeffs
    }

    /// Coefficient of component `c` at integer wavevector `kv`.
    pub fn coeff_at(&self, c: usize, kv: &[i64]) -> Option<Complex64> {
        self.grid.index_of(kv).map(|i| self.coeffs[c][i])
    }

    pub fn is_cached(&self) -> bool {
        self.physical.get().is_some()
    }

    /// Physical-space samples, one array per component.
    pub fn physical(&self) -> &[Vec<f64>] {
        self.physical.get_or_init(|| {
            self.coeffs
                .iter()
                .map(|c| {
                    let mut buf = c.clone();
                    self.grid.fft_inverse(&mut buf);
                    buf.into_iter().map(|z| z.re).collect()
                })
                .collect()
        })
    }

    pub fn to_real(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            shape: self.shape.clone(),
            data: self.physical().to_vec(),
        }
    }

    pub fn same_grid(&self, other: &SpectralField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn map_coeffs(&self, mut f: impl FnMut(usize, usize, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(c, comp)| comp.iter().enumerate().map(|(i, &z)| f(c, i, z)).collect())
            .collect();
        SpectralField {
            grid: self.grid.clone(),
            shape: self.shape.clone(),
            coeffs,
            physical: OnceLock::new(),
        }
    }

    /// Multiply every component by a real, mode-wise multiplier.
    pub fn apply_multiplier(&self, m: impl Fn(usize) -> f64) -> Self {
        self.map_coeffs(|_, i, z| z * m(i))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_coeffs(|_, _, z| z * s)
    }

    pub fn add(&self, other: &SpectralField) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        self.axpy(-1.0, other)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &SpectralField) -> Self {
        assert_eq!(self.shape, other.shape, "axpy shape mismatch");
        self.map_coeffs(|c, i, z| z + other.coeffs[c][i] * alpha)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// Sum over components and modes of `|coeff|^2` (equals mean of `|f|^2`).
    pub fn coeff_energy(&self) -> f64 {
        self.coeffs.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    /// L² norm over the box: `sqrt(V Σ |f̂|²)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.volume() * self.coeff_energy()).sqrt()
    }

    /// Select components by flat index into a new field of the given shape.
    pub fn select(&self, shape: Shape, comps: &[usize]) -> Self {
        assert_eq!(shape.size(), comps.len());
        SpectralField {
            grid: self.grid.clone(),
            shape,
            coeffs: comps.iter().map(|&c| self.coeffs[c].clone()).collect(),
            physical: OnceLock::new(),
        }
    }

    /// Largest deviation from Hermitian symmetry `f̂(-k) = conj f̂(k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for comp in &self.coeffs {
            for i in 0..self.grid.len() {
                let j = self.grid.conjugate_index(i);
                worst = worst.max((comp[i] - comp[j].conj()).norm());
            }
        }
        worst
    }
}

/// Physical-space samples of a field; the working type for pointwise algebra.
#[derive(Debug, Clone)]
pub struct RealField {
    pub grid: Arc<Grid>,
    pub shape: Shape,
    pub data: Vec<Vec<f64>>,
}

impl RealField {
    pub fn zeros(grid: &Arc<Grid>, shape: Shape) -> Self {
        let comps = shape.size();
        RealField {
            grid: grid.clone(),
            data: vec![vec![0.0; grid.len()]; comps],
            shape,
        }
    }

    pub fn new(grid: &Arc<Grid>, shape: Shape, data: Vec<Vec<f64>>) -> Result<Self> {
        if data.len() != shape.size() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape} needs {} components, got {}",
                shape.size(),
                data.len()
            )));
        }
        if let Some(c) = data.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::DimensionMismatch {
                expected: grid.len().to_string(),
                got: c.len().to_string(),
            });
        }
        Ok(RealField {
            grid: grid.clone(),
            shape,
            data,
        })
    }

    pub fn from_fn(grid: &Arc<Grid>, shape: Shape, f: impl Fn(usize, &[f64]) -> f64) -> Self {
        let comps = shape.size();
        let mut data = vec![vec![0.0; grid.len()]; comps];
        let mut x = vec![0.0; grid.dim()];
        for i in 0..grid.len() {
            for (a, xa) in x.iter_mut().enumerate() {
                *xa = grid.coord(i, a);
            }
            for (c, comp) in data.iter_mut().enumerate() {
                comp[i] = f(c, &x);
            }
        }
        RealField {
            grid: grid.clone(),
            shape,
            data,
        }
    }

    pub fn scalar_from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, Shape::scalar(), |_, x| f(x))
    }

    pub fn n_components(&self) -> usize {
        self.data.len()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Trapezoid-rule integral of each component summed over components.
    pub fn integral(&self) -> f64 {
        let dv = self.grid.cell_volume();
        self.data.iter().map(|c| c.iter().sum::<f64>()).sum::<f64>() * dv
    }

    pub fn integral_abs(&self) -> f64 {
        let dv = self.grid.cell_volume();
        self.data
            .iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .sum::<f64>()
            * dv
    }

    /// Pointwise Euclidean (Frobenius) magnitude over components.
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.data.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect()
    }

    /// L^p norm of the pointwise magnitude; `p = ∞` is the grid maximum.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mag = self.magnitude();
        if p.is_infinite() {
            return mag.iter().cloned().fold(0.0, f64::max);
        }
        let dv = self.grid.cell_volume();
        let s: f64 = mag.iter().map(|m| m.powf(p)).sum::<f64>() * dv;
        s.powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Forward transform without dealiasing.
    pub fn to_spectral(&self) -> SpectralField {
        let coeffs = self
            .data
            .iter()
            .map(|c| {
                let mut buf: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                self.grid.fft_forward(&mut buf);
                buf
            })
            .collect();
        SpectralField {
            grid: self.grid.clone(),
            shape: self.shape.clone(),
            coeffs,
            physical: OnceLock::new(),
        }
    }

    /// Forward transform followed by the dealias mask.
    pub fn to_spectral_dealiased(&self) -> SpectralField {
        let g = self.grid.clone();
        let mut s = self.to_spectral();
        for comp in s.components_mut() {
            for (i, z) in comp.iter_mut().enumerate() {
                if !g.retained(i) {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
        }
        s
    }

    /// Round-trip through the dealias mask.
    pub fn dealias(&self) -> RealField {
        self.to_spectral_dealiased().to_real()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField {
            grid: self.grid.clone(),
            shape: self.shape.clone(),
            data: self.data.iter().map(|c| c.iter().map(|&v| f(v)).collect()).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> RealField {
        self.map(|v| v * s)
    }

    pub fn axpy(&self, alpha: f64, other: &RealField) -> RealField {
        assert_eq!(self.shape, other.shape, "axpy shape mismatch");
        RealField {
            grid: self.grid.clone(),
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x + alpha * y).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &RealField) -> RealField {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        self.axpy(-1.0, other)
    }
}
