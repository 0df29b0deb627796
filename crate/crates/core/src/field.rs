//! Real-space field containers and their Fourier coefficients.

use num_complex::Complex64;

use crate::error::{NlcError, Result};
use crate::grid::Grid;

/// Default tolerance on `| |n| - 1 |` for constrained directors.
pub const DEFAULT_UNIT_TOL: f64 = 1e-8;

/// Real samples of a scalar on every grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(NlcError::Shape(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(cell) = values.iter().position(|v| !v.is_finite()) {
            return Err(NlcError::NonFinite {
                what: "scalar field",
                cell,
            });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Skips the finiteness scan. Used by the solvers, which check for
    /// blow-up themselves.
    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    /// Samples `f` at the cell coordinates. Unused trailing coordinates are 0.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|c| f(&grid.coords(c))).collect();
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(self.grid.same_as(&other.grid));
        Self::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.grid.same_as(grid) {
            Ok(())
        } else {
            Err(NlcError::Shape(format!(
                "field on {:?} used with {:?}",
                self.grid, grid
            )))
        }
    }
}

/// A collection of scalar fields on one grid.
///
/// Velocities carry `dim` components; derived director quantities such as
/// `Δn` carry three.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| NlcError::Shape("vector field needs at least one component".into()))?;
        for c in &components[1..] {
            c.check_grid(first.grid())?;
        }
        Ok(Self { components })
    }

    pub(crate) fn from_raw(components: Vec<ScalarField>) -> Self {
        debug_assert!(!components.is_empty());
        Self { components }
    }

    pub fn zeros(grid: &Grid, count: usize) -> Self {
        Self::from_raw(vec![ScalarField::zeros(grid); count])
    }

    pub fn from_fn(grid: &Grid, count: usize, f: impl Fn(&[f64; 3], usize) -> f64) -> Self {
        Self::from_raw(
            (0..count)
                .map(|i| ScalarField::from_fn(grid, |x| f(x, i)))
                .collect(),
        )
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.components
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self::from_raw(self.components.iter().map(f).collect())
    }

    pub fn zip_components(
        &self,
        other: &VectorField,
        f: impl Fn(&ScalarField, &ScalarField) -> ScalarField,
    ) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self::from_raw(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &VectorField) -> Self {
        self.zip_components(other, ScalarField::add)
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        self.zip_components(other, ScalarField::sub)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_components(|f| f.scale(c))
    }

    pub fn axpy(&self, c: f64, other: &VectorField) -> Self {
        self.zip_components(other, |a, b| a.axpy(c, b))
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let grid = self.grid();
        let values = (0..grid.len())
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c.values()[i] * c.values()[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        ScalarField::from_raw(grid, values)
    }

    /// Pointwise dot product.
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let grid = self.grid();
        let mut out = vec![0.0; grid.len()];
        for (a, b) in self.components.iter().zip(&other.components) {
            for ((o, x), y) in out.iter_mut().zip(a.values()).zip(b.values()) {
                *o += x * y;
            }
        }
        ScalarField::from_raw(grid, out)
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        for c in &self.components {
            c.check_grid(grid)?;
        }
        Ok(())
    }
}

/// Three-component orientation field with values on the unit sphere.
///
/// Constructors enforce `| |n| - 1 | <= unit_tol`. Fields produced by
/// unconstrained time stepping (renormalisation switched off) are built with
/// [`DirectorField::unconstrained`] and carry whatever drift the integrator
/// produced; [`DirectorField::unit_defect`] measures it.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectorField {
    field: VectorField,
}

impl DirectorField {
    pub fn new(components: [ScalarField; 3]) -> Result<Self> {
        Self::with_tolerance(components, DEFAULT_UNIT_TOL)
    }

    pub fn with_tolerance(components: [ScalarField; 3], unit_tol: f64) -> Result<Self> {
        let field = VectorField::new(components.into())?;
        let n = Self { field };
        if let Some((cell, magnitude)) = n.worst_cell() {
            if (magnitude - 1.0).abs() > unit_tol || !magnitude.is_finite() {
                return Err(NlcError::Precondition(format!(
                    "director not unit length: |n| = {magnitude} at cell {cell}"
                )));
            }
        }
        Ok(n)
    }

    /// Wraps three components without checking the unit constraint.
    pub fn unconstrained(field: VectorField) -> Result<Self> {
        if field.len() != 3 {
            return Err(NlcError::Shape(format!(
                "director needs 3 components, got {}",
                field.len()
            )));
        }
        Ok(Self { field })
    }

    pub(crate) fn from_raw(field: VectorField) -> Self {
        debug_assert_eq!(field.len(), 3);
        Self { field }
    }

    /// Spatially constant director.
    pub fn constant(grid: &Grid, direction: [f64; 3]) -> Result<Self> {
        let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(NlcError::Degenerate {
                cell: 0,
                magnitude: norm,
            });
        }
        Ok(Self::from_raw(VectorField::from_raw(
            direction
                .iter()
                .map(|d| ScalarField::constant(grid, d / norm))
                .collect(),
        )))
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn as_vector(&self) -> &VectorField {
        &self.field
    }

    pub fn into_vector(self) -> VectorField {
        self.field
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        self.field.component(i)
    }

    pub fn components(&self) -> &[ScalarField] {
        self.field.components()
    }

    /// `max | |n(x)| - 1 |` over the grid.
    pub fn unit_defect(&self) -> f64 {
        self.field
            .magnitude()
            .values()
            .iter()
            .fold(0.0, |m, &v| m.max((v - 1.0).abs()))
    }

    fn worst_cell(&self) -> Option<(usize, f64)> {
        let mag = self.field.magnitude();
        mag.values()
            .iter()
            .enumerate()
            .max_by(|a, b| {
                let da = (a.1 - 1.0).abs();
                let db = (b.1 - 1.0).abs();
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Greater)
            })
            .map(|(c, &m)| (c, m))
    }
}

/// Fourier coefficients of a real field, normalised so mode 0 is the mean.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    modes: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            modes: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_modes(grid: &Grid, modes: Vec<Complex64>) -> Result<Self> {
        if modes.len() != grid.len() {
            return Err(NlcError::Shape(format!(
                "{} modes for a grid of {} cells",
                modes.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            modes,
        })
    }

    pub(crate) fn from_raw(grid: &Grid, modes: Vec<Complex64>) -> Self {
        Self {
            grid: grid.clone(),
            modes,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    pub fn modes_mut(&mut self) -> &mut [Complex64] {
        &mut self.modes
    }

    pub fn into_modes(self) -> Vec<Complex64> {
        self.modes
    }
}
