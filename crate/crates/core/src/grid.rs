//! Periodic torus discretization and the FFT plans that live with it.
//!
//! Samples are stored row-major with axis 0 slowest. Spectra use the same
//! layout and the standard FFT mode ordering along each axis:
//! `0, 1, ..., M/2, -M/2+1, ..., -1`. Index `M/2` is the Nyquist mode and is
//! assigned the wavenumber `+M/2`. Forward transforms are normalised by the
//! total cell count, so the zero mode holds the mean of the field.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{NlcError, Result};

/// Discretization of `[0, L_1) x ... x [0, L_N)` with periodic boundaries.
///
/// Cloning is cheap; the mode tables and FFT plans are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    sizes: Vec<usize>,
    lengths: Vec<f64>,
    /// Scaled wavenumbers per axis, in FFT order.
    wavenumbers: Vec<Vec<f64>>,
    /// Integer wavenumbers per axis, in FFT order.
    int_wavenumbers: Vec<Vec<i64>>,
    /// Per-mode wavenumber used for odd derivatives (Nyquist zeroed).
    k_odd: Vec<[f64; 3]>,
    /// Per-mode wavenumber used for even derivatives.
    k_even: Vec<[f64; 3]>,
    /// Per-mode |k|^2 with the true Nyquist wavenumber.
    k_sq: Vec<f64>,
    /// Per-mode |k_odd|^2.
    k_odd_sq: Vec<f64>,
    /// Per-mode flag: true if the mode survives two-thirds truncation.
    retained: Vec<bool>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl Grid {
    /// Grid on `[0, 2π)^dim` with the given per-axis sample counts.
    pub fn new(sizes: &[usize]) -> Result<Self> {
        Self::with_lengths(sizes, &vec![2.0 * PI; sizes.len()])
    }

    /// Square/cubic grid with `m` samples per axis on `[0, 2π)^dim`.
    pub fn uniform(dim: usize, m: usize) -> Result<Self> {
        Self::new(&vec![m; dim])
    }

    pub fn with_lengths(sizes: &[usize], lengths: &[f64]) -> Result<Self> {
        let dim = sizes.len();
        if !(dim == 2 || dim == 3) {
            return Err(NlcError::InvalidGrid(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if lengths.len() != dim {
            return Err(NlcError::InvalidGrid(format!(
                "{} lengths given for a {dim}-dimensional grid",
                lengths.len()
            )));
        }
        for &m in sizes {
            if m < 8 || !m.is_power_of_two() {
                return Err(NlcError::InvalidGrid(format!(
                    "axis size {m} must be a power of two and at least 8"
                )));
            }
        }
        for &l in lengths {
            if !(l.is_finite() && l > 0.0) {
                return Err(NlcError::InvalidGrid(format!(
                    "axis length {l} must be positive"
                )));
            }
        }

        let int_wavenumbers: Vec<Vec<i64>> = sizes.iter().map(|&m| fft_frequencies(m)).collect();
        let wavenumbers: Vec<Vec<f64>> = int_wavenumbers
            .iter()
            .zip(lengths)
            .map(|(ks, &l)| ks.iter().map(|&k| k as f64 * 2.0 * PI / l).collect())
            .collect();

        let total: usize = sizes.iter().product();
        let mut k_odd = Vec::with_capacity(total);
        let mut k_even = Vec::with_capacity(total);
        let mut k_sq = Vec::with_capacity(total);
        let mut k_odd_sq = Vec::with_capacity(total);
        let mut retained = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let mut ko = [0.0; 3];
            let mut ke = [0.0; 3];
            let mut keep = true;
            for a in 0..dim {
                let m = sizes[a];
                let kint = int_wavenumbers[a][idx[a]];
                ke[a] = wavenumbers[a][idx[a]];
                ko[a] = if idx[a] == m / 2 { 0.0 } else { ke[a] };
                // |k_j| > M_j / 3 is discarded
                if 3 * kint.unsigned_abs() as usize > m {
                    keep = false;
                }
            }
            k_sq.push(ke.iter().map(|k| k * k).sum());
            k_odd_sq.push(ko.iter().map(|k| k * k).sum());
            k_odd.push(ko);
            k_even.push(ke);
            retained.push(keep);
            // advance the multi-index, last axis fastest
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < sizes[a] {
                    break;
                }
                idx[a] = 0;
            }
        }

        let mut planner = FftPlanner::new();
        let forward = sizes.iter().map(|&m| planner.plan_fft_forward(m)).collect();
        let inverse = sizes.iter().map(|&m| planner.plan_fft_inverse(m)).collect();

        Ok(Self {
            inner: Arc::new(GridInner {
                sizes: sizes.to_vec(),
                lengths: lengths.to_vec(),
                wavenumbers,
                int_wavenumbers,
                k_odd,
                k_even,
                k_sq,
                k_odd_sq,
                retained,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.inner.sizes
    }

    pub fn lengths(&self) -> &[f64] {
        &self.inner.lengths
    }

    /// Scaled wavenumbers of one axis, in FFT order.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.inner.wavenumbers[axis]
    }

    pub fn int_wavenumbers(&self, axis: usize) -> &[i64] {
        &self.inner.int_wavenumbers[axis]
    }

    pub fn len(&self) -> usize {
        self.inner.k_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn volume(&self) -> f64 {
        self.inner.lengths.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.inner.lengths[axis] / self.inner.sizes[axis] as f64
    }

    /// Largest retained |k| after two-thirds truncation.
    pub fn max_retained_wavenumber(&self) -> f64 {
        self.inner
            .k_sq
            .iter()
            .zip(&self.inner.retained)
            .filter(|(_, &r)| r)
            .map(|(k2, _)| k2.sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest |k| present on the grid.
    pub fn max_wavenumber(&self) -> f64 {
        self.inner.k_sq.iter().copied().fold(0.0, f64::max).sqrt()
    }

    /// Coordinates of the cell with flat index `cell`.
    pub fn coords(&self, cell: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rem = cell;
        for a in (0..self.dim()).rev() {
            let m = self.inner.sizes[a];
            x[a] = (rem % m) as f64 * self.spacing(a);
            rem /= m;
        }
        x
    }

    /// Per-axis sample indices of the cell with flat index `cell`.
    pub fn unravel(&self, cell: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut rem = cell;
        for a in (0..self.dim()).rev() {
            let m = self.inner.sizes[a];
            idx[a] = rem % m;
            rem /= m;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.inner.sizes)
            .fold(0, |acc, (&i, &m)| acc * m + i % m)
    }

    pub(crate) fn k_odd(&self) -> &[[f64; 3]] {
        &self.inner.k_odd
    }

    pub(crate) fn k_even(&self) -> &[[f64; 3]] {
        &self.inner.k_even
    }

    pub(crate) fn k_sq(&self) -> &[f64] {
        &self.inner.k_sq
    }

    pub(crate) fn k_odd_sq(&self) -> &[f64] {
        &self.inner.k_odd_sq
    }

    pub(crate) fn retained(&self) -> &[bool] {
        &self.inner.retained
    }

    /// Same discretization: identical sizes and lengths.
    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.sizes == other.inner.sizes && self.inner.lengths == other.inner.lengths)
    }

    /// In-place forward transform, normalised so mode 0 is the mean.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.forward);
        let scale = 1.0 / data.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    /// In-place inverse transform (no scaling).
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let sizes = &self.inner.sizes;
        let total = data.len();
        debug_assert_eq!(total, self.len());
        let mut lines = vec![Complex64::default(); total];
        for (axis, plan) in plans.iter().enumerate() {
            let m = sizes[axis];
            let inner: usize = sizes[axis + 1..].iter().product();
            if inner == 1 {
                plan.process(data);
                continue;
            }
            let outer = total / (m * inner);
            // gather lines along `axis` into contiguous storage
            for o in 0..outer {
                for i in 0..inner {
                    let line = (o * inner + i) * m;
                    let base = o * m * inner + i;
                    for j in 0..m {
                        lines[line + j] = data[base + j * inner];
                    }
                }
            }
            plan.process(&mut lines);
            for o in 0..outer {
                for i in 0..inner {
                    let line = (o * inner + i) * m;
                    let base = o * m * inner + i;
                    for j in 0..m {
                        data[base + j * inner] = lines[line + j];
                    }
                }
            }
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("sizes", &self.inner.sizes)
            .field("lengths", &self.inner.lengths)
            .finish()
    }
}

/// Integer frequencies `0, 1, ..., m/2, -m/2+1, ..., -1`.
fn fft_frequencies(m: usize) -> Vec<i64> {
    let half = (m / 2) as i64;
    (0..m as i64)
        .map(|i| if i <= half { i } else { i - m as i64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(&[6, 8]).is_err());
        assert!(Grid::new(&[4, 4]).is_err());
        assert!(Grid::new(&[12, 16]).is_err());
        assert!(Grid::new(&[16]).is_err());
        assert!(Grid::with_lengths(&[8, 8], &[1.0, -1.0]).is_err());
    }

    #[test]
    fn wavenumber_set_matches_convention() {
        let g = Grid::with_lengths(&[8, 16], &[1.0, 2.0 * PI]).unwrap();
        let mut ks = g.int_wavenumbers(0).to_vec();
        ks.sort();
        assert_eq!(ks, vec![-3, -2, -1, 0, 1, 2, 3, 4]);
        // scaled by 2π / L
        assert!((g.wavenumbers(0)[1] - 2.0 * PI).abs() < 1e-15);
        assert!((g.wavenumbers(1)[8] - 8.0).abs() < 1e-15);
    }

    #[test]
    fn cell_volume_times_count_is_volume() {
        let g = Grid::with_lengths(&[8, 16, 32], &[1.0, 2.0, 3.0]).unwrap();
        assert!((g.cell_volume() * g.len() as f64 - 6.0).abs() < 1e-12);
    }

    #[test]
    fn ravel_roundtrip() {
        let g = Grid::new(&[8, 16, 8]).unwrap();
        for cell in [0, 1, 17, 555, g.len() - 1] {
            let idx = g.unravel(cell);
            assert_eq!(g.ravel(&idx[..3]), cell);
        }
    }

    #[test]
    fn two_thirds_mask() {
        let g = Grid::new(&[64, 64]).unwrap();
        // |k| <= 21 kept, 22 dropped
        let keep21 = g.ravel(&[21, 0]);
        let drop22 = g.ravel(&[22, 0]);
        assert!(g.retained()[keep21]);
        assert!(!g.retained()[drop22]);
        let neg21 = g.ravel(&[64 - 21, 3]);
        assert!(g.retained()[neg21]);
    }
}
