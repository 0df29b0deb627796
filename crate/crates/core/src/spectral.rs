//! Fourier-space calculus on the torus.
//!
//! Odd derivatives zero the Nyquist mode so that real fields stay real; even
//! derivatives use the true Nyquist wavenumber. All reductions run in a fixed
//! sequential order so norms and integrals are reproducible bit for bit.

use num_complex::Complex64;

use crate::error::{NlcError, Result};
use crate::field::{DirectorField, ScalarField, Spectrum, VectorField};
use crate::grid::Grid;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Anything made of scalar components on one grid.
pub trait Components {
    fn scalar_components(&self) -> Vec<&ScalarField>;
}

impl Components for ScalarField {
    fn scalar_components(&self) -> Vec<&ScalarField> {
        vec![self]
    }
}

impl Components for VectorField {
    fn scalar_components(&self) -> Vec<&ScalarField> {
        self.components().iter().collect()
    }
}

impl Components for DirectorField {
    fn scalar_components(&self) -> Vec<&ScalarField> {
        self.components().iter().collect()
    }
}

pub fn fft(f: &ScalarField) -> Spectrum {
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    f.grid().forward(&mut data);
    Spectrum::from_raw(f.grid(), data)
}

/// Inverse transform, keeping the real part.
pub fn ifft(s: &Spectrum) -> ScalarField {
    let mut data = s.modes().to_vec();
    s.grid().inverse(&mut data);
    ScalarField::from_raw(s.grid(), data.into_iter().map(|z| z.re).collect())
}

pub(crate) fn ifft_modes(grid: &Grid, modes: &[Complex64]) -> ScalarField {
    let mut data = modes.to_vec();
    grid.inverse(&mut data);
    ScalarField::from_raw(grid, data.into_iter().map(|z| z.re).collect())
}

pub(crate) fn fft_modes(f: &ScalarField) -> Vec<Complex64> {
    fft(f).into_modes()
}

fn check_finite(f: &ScalarField) -> Result<()> {
    match f.first_non_finite() {
        Some(cell) => Err(NlcError::NonFinite {
            what: "input field",
            cell,
        }),
        None => Ok(()),
    }
}

/// `∂_axis` applied to a spectrum.
pub(crate) fn d_modes(grid: &Grid, modes: &[Complex64], axis: usize) -> Vec<Complex64> {
    modes
        .iter()
        .zip(grid.k_odd())
        .map(|(z, k)| I * k[axis] * z)
        .collect()
}

pub(crate) fn lap_modes(grid: &Grid, modes: &[Complex64]) -> Vec<Complex64> {
    modes.iter().zip(grid.k_sq()).map(|(z, k2)| -k2 * z).collect()
}

pub(crate) fn truncate_modes(grid: &Grid, modes: &mut [Complex64]) {
    for (z, &keep) in modes.iter_mut().zip(grid.retained()) {
        if !keep {
            *z = Complex64::default();
        }
    }
}

/// Spectral derivative along one axis.
pub fn partial(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    check_finite(f)?;
    if axis >= f.grid().dim() {
        return Err(NlcError::Shape(format!(
            "axis {axis} on a {}-dimensional grid",
            f.grid().dim()
        )));
    }
    let m = fft_modes(f);
    Ok(ifft_modes(f.grid(), &d_modes(f.grid(), &m, axis)))
}

pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    check_finite(f)?;
    let g = f.grid();
    let m = fft_modes(f);
    Ok(VectorField::from_raw(
        (0..g.dim())
            .map(|a| ifft_modes(g, &d_modes(g, &m, a)))
            .collect(),
    ))
}

/// Spectral divergence of a `dim`-component field.
pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    let g = v.grid().clone();
    v.check_grid(&g)?;
    if v.len() != g.dim() {
        return Err(NlcError::Shape(format!(
            "divergence of a {}-component field on a {}-dimensional grid",
            v.len(),
            g.dim()
        )));
    }
    for c in v.components() {
        check_finite(c)?;
    }
    let mut acc = vec![Complex64::default(); g.len()];
    for (a, c) in v.components().iter().enumerate() {
        let m = fft_modes(c);
        for ((o, z), k) in acc.iter_mut().zip(&m).zip(g.k_odd()) {
            *o += I * k[a] * z;
        }
    }
    Ok(ifft_modes(&g, &acc))
}

pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    check_finite(f)?;
    let m = fft_modes(f);
    Ok(ifft_modes(f.grid(), &lap_modes(f.grid(), &m)))
}

/// Componentwise Laplacian of a vector field.
pub fn laplacian_vector(v: &VectorField) -> Result<VectorField> {
    Ok(VectorField::from_raw(
        v.components()
            .iter()
            .map(laplacian)
            .collect::<Result<Vec<_>>>()?,
    ))
}

/// Componentwise Laplacian of a director; the result is not unit length.
pub fn laplacian_director(n: &DirectorField) -> Result<VectorField> {
    laplacian_vector(n.as_vector())
}

/// L²-orthogonal projection onto divergence-free fields, `I - k kᵀ/|k|²`
/// per mode. The mean mode passes through unchanged.
pub fn leray_project(v: &VectorField) -> Result<VectorField> {
    let g = v.grid().clone();
    v.check_grid(&g)?;
    if v.len() != g.dim() {
        return Err(NlcError::Shape(format!(
            "projection of a {}-component field on a {}-dimensional grid",
            v.len(),
            g.dim()
        )));
    }
    let mut modes: Vec<Vec<Complex64>> = v.components().iter().map(fft_modes).collect();
    leray_modes(&g, &mut modes);
    Ok(VectorField::from_raw(
        modes.iter().map(|m| ifft_modes(&g, m)).collect(),
    ))
}

pub(crate) fn leray_modes(grid: &Grid, modes: &mut [Vec<Complex64>]) {
    let dim = grid.dim();
    for (idx, (k, &k2)) in grid.k_odd().iter().zip(grid.k_odd_sq()).enumerate() {
        if k2 == 0.0 {
            continue;
        }
        let mut kdotv = Complex64::default();
        for a in 0..dim {
            kdotv += k[a] * modes[a][idx];
        }
        let s = kdotv / k2;
        for a in 0..dim {
            modes[a][idx] -= k[a] * s;
        }
    }
}

/// Two-thirds rule: zero every mode with some `|k_j| > M_j / 3`.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let mut m = fft_modes(f);
    truncate_modes(f.grid(), &mut m);
    ifft_modes(f.grid(), &m)
}

/// Cell-volume weighted sum; exact for band-limited integrands.
pub fn integrate(f: &ScalarField) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

/// Multi-indices `α` with `|α| <= s` in `dim` variables, in lexicographic order.
pub fn multi_indices(dim: usize, s: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    let mut alpha = [0usize; 3];
    fn rec(a: usize, dim: usize, left: usize, alpha: &mut [usize; 3], out: &mut Vec<[usize; 3]>) {
        if a == dim {
            out.push(*alpha);
            return;
        }
        for v in 0..=left {
            alpha[a] = v;
            rec(a + 1, dim, left - v, alpha, out);
        }
        alpha[a] = 0;
    }
    rec(0, dim, s, &mut alpha, &mut out);
    out
}

/// `|(ik)^α|²` for one mode, honouring the Nyquist convention.
pub(crate) fn symbol_sq(grid: &Grid, idx: usize, alpha: &[usize; 3]) -> f64 {
    let ko = grid.k_odd()[idx];
    let ke = grid.k_even()[idx];
    let mut w = 1.0;
    for a in 0..grid.dim() {
        let p = alpha[a];
        if p == 0 {
            continue;
        }
        let k = if p % 2 == 1 { ko[a] } else { ke[a] };
        w *= k.powi(2 * p as i32);
    }
    w
}

/// Per-mode weight `Σ_{|α|<=s} k^{2α}`.
pub(crate) fn sobolev_weights(grid: &Grid, s: usize) -> Vec<f64> {
    let alphas = multi_indices(grid.dim(), s);
    (0..grid.len())
        .map(|idx| alphas.iter().map(|al| symbol_sq(grid, idx, al)).sum())
        .collect()
}

/// Squared `H^s` norm computed from spectra with precomputed weights.
pub(crate) fn weighted_sq(grid: &Grid, modes: &[Complex64], weights: &[f64]) -> f64 {
    modes
        .iter()
        .zip(weights)
        .map(|(z, w)| w * z.norm_sqr())
        .sum::<f64>()
        * grid.volume()
}

/// `(Σ_{|α|<=s} ‖∂^α f‖²)^{1/2}` evaluated spectrally, summed over components.
pub fn sobolev_norm<F: Components>(f: &F, s: usize) -> f64 {
    sobolev_norm_sq(f, s).sqrt()
}

pub fn sobolev_norm_sq<F: Components>(f: &F, s: usize) -> f64 {
    let comps = f.scalar_components();
    let grid = comps[0].grid();
    let weights = sobolev_weights(grid, s);
    comps
        .iter()
        .map(|c| weighted_sq(grid, &fft_modes(c), &weights))
        .sum()
}

/// Fraction of the squared `H^s` norm carried by the outer third of the
/// retained band. Large values mean the order `s` is not resolved.
pub fn unresolved_fraction<F: Components>(f: &F, s: usize) -> f64 {
    let comps = f.scalar_components();
    let grid = comps[0].grid();
    let weights = sobolev_weights(grid, s);
    let kcut = 2.0 / 3.0 * grid.max_retained_wavenumber();
    let mut total = 0.0;
    let mut tail = 0.0;
    for c in comps {
        for (idx, z) in fft_modes(c).iter().enumerate() {
            let e = weights[idx] * z.norm_sqr();
            total += e;
            if grid.k_sq()[idx].sqrt() > kcut {
                tail += e;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Derivative `∂^α f` for a multi-index.
pub fn derivative(f: &ScalarField, alpha: &[usize; 3]) -> ScalarField {
    let g = f.grid();
    let m = fft_modes(f);
    let out: Vec<Complex64> = m
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            let ko = g.k_odd()[idx];
            let ke = g.k_even()[idx];
            let mut w = Complex64::new(1.0, 0.0);
            for a in 0..g.dim() {
                let p = alpha[a];
                if p == 0 {
                    continue;
                }
                let k = if p % 2 == 1 { ko[a] } else { ke[a] };
                w *= (I * k).powi(p as i32);
            }
            w * z
        })
        .collect();
    ifft_modes(g, &out)
}
