//! Physical state containers, parameters, the pressure law and the
//! construction of well-prepared initial data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NlcError, Result};
use crate::field::{DirectorField, ScalarField, VectorField};
use crate::grid::Grid;
use crate::spectral::{self, sobolev_norm};

/// Viscosities, elastic constants, penalisation and pressure exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Shear viscosity.
    pub mu: f64,
    /// Bulk viscosity; `2μ + Nκ >= 0`.
    pub kappa: f64,
    /// Elastic coefficient.
    pub nu: f64,
    /// Director relaxation rate.
    pub theta: f64,
    /// Penalisation (inverse Mach-like) parameter, `>= 1`.
    pub lambda: f64,
    /// Exponent of `P(ρ) = ρ^γ`.
    pub gamma: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            kappa: 0.0,
            nu: 1.0,
            theta: 1.0,
            lambda: 10.0,
            gamma: 2.0,
        }
    }
}

impl ModelParams {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// Checks the parameter invariants for a `dim`-dimensional problem.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let all = [self.mu, self.kappa, self.nu, self.theta, self.lambda, self.gamma];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(NlcError::InvalidParams("parameters must be finite".into()));
        }
        if self.mu <= 0.0 || self.nu <= 0.0 || self.theta <= 0.0 {
            return Err(NlcError::InvalidParams(format!(
                "mu, nu, theta must be positive (mu={}, nu={}, theta={})",
                self.mu, self.nu, self.theta
            )));
        }
        if 2.0 * self.mu + dim as f64 * self.kappa < 0.0 {
            return Err(NlcError::InvalidParams(format!(
                "2 mu + N kappa = {} is negative",
                2.0 * self.mu + dim as f64 * self.kappa
            )));
        }
        if self.lambda < 1.0 {
            return Err(NlcError::InvalidParams(format!(
                "lambda = {} must be >= 1",
                self.lambda
            )));
        }
        if self.gamma <= 1.0 {
            return Err(NlcError::InvalidParams(format!(
                "gamma = {} must exceed 1",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn pressure_law(&self) -> PressureLaw {
        PressureLaw { gamma: self.gamma }
    }
}

/// `P(ρ) = ρ^γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressureLaw {
    pub gamma: f64,
}

impl PressureLaw {
    pub fn p(&self, rho: f64) -> f64 {
        rho.powf(self.gamma)
    }

    pub fn p_prime(&self, rho: f64) -> f64 {
        self.gamma * rho.powf(self.gamma - 1.0)
    }

    pub fn p_second(&self, rho: f64) -> f64 {
        self.gamma * (self.gamma - 1.0) * rho.powf(self.gamma - 2.0)
    }

    /// `Q(ρ) = ρ ∫_1^ρ P(z)/z² dz = ρ (ρ^{γ-1} - 1)/(γ - 1)`.
    pub fn q(&self, rho: f64) -> f64 {
        rho * (rho.powf(self.gamma - 1.0) - 1.0) / (self.gamma - 1.0)
    }

    /// `Q''(ρ) = P'(ρ)/ρ`.
    pub fn q_second(&self, rho: f64) -> f64 {
        self.gamma * rho.powf(self.gamma - 2.0)
    }

    /// `P'(ρ)/ρ`, the coefficient of `∇ρ` in the nonconservative momentum
    /// equation.
    pub fn p_prime_over_rho(&self, rho: f64) -> f64 {
        self.q_second(rho)
    }
}

fn check_positive(rho: &ScalarField) -> Result<()> {
    if let Some((cell, &value)) = rho.values().iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(NlcError::Domain {
            what: "density",
            cell,
            value,
        });
    }
    Ok(())
}

/// Pointwise `P(ρ)`.
pub fn pressure(rho: &ScalarField, law: PressureLaw) -> Result<ScalarField> {
    check_positive(rho)?;
    Ok(rho.map(|r| law.p(r)))
}

pub fn pressure_prime(rho: &ScalarField, law: PressureLaw) -> Result<ScalarField> {
    check_positive(rho)?;
    Ok(rho.map(|r| law.p_prime(r)))
}

pub fn pressure_second(rho: &ScalarField, law: PressureLaw) -> Result<ScalarField> {
    check_positive(rho)?;
    Ok(rho.map(|r| law.p_second(r)))
}

/// Pointwise `Q(ρ)`.
pub fn q_potential(rho: &ScalarField, law: PressureLaw) -> Result<ScalarField> {
    check_positive(rho)?;
    Ok(rho.map(|r| law.q(r)))
}

/// Solution snapshot `(ρ, u, n)` of the compressible system.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressibleState {
    pub time: f64,
    pub rho: ScalarField,
    pub u: VectorField,
    pub n: DirectorField,
    pub params: ModelParams,
}

impl CompressibleState {
    /// Checks shapes, positivity and finiteness. The stricter regime
    /// `|ρ - 1| < 1/2` is checked by [`CompressibleState::check_regime`] and
    /// by every right-hand-side evaluation.
    pub fn new(
        time: f64,
        rho: ScalarField,
        u: VectorField,
        n: DirectorField,
        params: ModelParams,
    ) -> Result<Self> {
        let grid = rho.grid().clone();
        u.check_grid(&grid)?;
        n.as_vector().check_grid(&grid)?;
        if u.len() != grid.dim() {
            return Err(NlcError::Shape(format!(
                "velocity has {} components on a {}-dimensional grid",
                u.len(),
                grid.dim()
            )));
        }
        params.validate(grid.dim())?;
        check_positive(&rho)?;
        for f in std::iter::once(&rho)
            .chain(u.components())
            .chain(n.components())
        {
            if let Some(cell) = f.first_non_finite() {
                return Err(NlcError::NonFinite {
                    what: "state",
                    cell,
                });
            }
        }
        Ok(Self {
            time,
            rho,
            u,
            n,
            params,
        })
    }

    /// Density 1, zero velocity, constant director.
    pub fn equilibrium(grid: &Grid, params: ModelParams, direction: [f64; 3]) -> Result<Self> {
        Self::new(
            0.0,
            ScalarField::constant(grid, 1.0),
            VectorField::zeros(grid, grid.dim()),
            DirectorField::constant(grid, direction)?,
            params,
        )
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    pub fn check_regime(&self) -> Result<()> {
        check_regime(&self.rho)
    }

    pub fn max_rho_deviation(&self) -> f64 {
        self.rho.values().iter().fold(0.0, |m, &r| m.max((r - 1.0).abs()))
    }
}

pub(crate) fn check_regime(rho: &ScalarField) -> Result<()> {
    for (cell, &value) in rho.values().iter().enumerate() {
        if !(value > 0.0 && (value - 1.0).abs() < 0.5) {
            return Err(NlcError::Regime { cell, value });
        }
    }
    Ok(())
}

/// Tolerance on `‖∇·u‖_∞` for incompressible states.
pub const DIV_TOL: f64 = 1e-10;

/// Solution snapshot `(u, n, p)` of the incompressible system.
#[derive(Clone, Debug, PartialEq)]
pub struct IncompressibleState {
    pub time: f64,
    pub u: VectorField,
    pub n: DirectorField,
    /// Mean-zero pressure.
    pub p: ScalarField,
    pub params: ModelParams,
}

impl IncompressibleState {
    /// Rejects velocities with `‖∇·u‖_∞ > 1e-10`; the mean of `p` is removed.
    pub fn new(
        time: f64,
        u: VectorField,
        n: DirectorField,
        p: ScalarField,
        params: ModelParams,
    ) -> Result<Self> {
        let grid = u.grid().clone();
        n.as_vector().check_grid(&grid)?;
        p.check_grid(&grid)?;
        if u.len() != grid.dim() {
            return Err(NlcError::Shape(format!(
                "velocity has {} components on a {}-dimensional grid",
                u.len(),
                grid.dim()
            )));
        }
        params.validate(grid.dim())?;
        check_divergence_free(&u)?;
        let mean = p.mean();
        let p = p.map(|v| v - mean);
        Ok(Self {
            time,
            u,
            n,
            p,
            params,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }
}

pub(crate) fn check_divergence_free(u: &VectorField) -> Result<()> {
    let div = spectral::divergence(u)?.max_abs();
    if div > DIV_TOL {
        return Err(NlcError::Precondition(format!(
            "velocity is not divergence-free: max |div u| = {div:e}"
        )));
    }
    Ok(())
}

/// Projects a three-component field onto the unit sphere pointwise.
///
/// Fails with a degeneracy error where `|n| < 0.5`.
pub fn normalize_director(n: &VectorField) -> Result<DirectorField> {
    if n.len() != 3 {
        return Err(NlcError::Shape(format!(
            "director needs 3 components, got {}",
            n.len()
        )));
    }
    let mag = n.magnitude();
    if let Some((cell, &magnitude)) = mag
        .values()
        .iter()
        .enumerate()
        .find(|(_, &m)| !(m >= 0.5))
    {
        return Err(NlcError::Degenerate { cell, magnitude });
    }
    Ok(DirectorField::from_raw(
        n.map_components(|c| c.zip_map(&mag, |a, m| a / m)),
    ))
}

/// Amplitude and smoothness of the initial perturbations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preparation {
    pub delta0: f64,
    /// Sobolev order `s` of the well-preparedness bounds.
    pub s: usize,
    pub seed: u64,
}

impl Default for Preparation {
    fn default() -> Self {
        Self {
            delta0: 0.05,
            s: 3,
            seed: 42,
        }
    }
}

/// Largest integer wavenumber used by the random perturbations.
pub const PERTURBATION_MODES: i64 = 4;

/// Seeded random real field built from the modes with `0 < max_j |k_j| <= 4`.
///
/// The field is defined analytically, so its samples do not depend on the
/// grid resolution.
pub fn random_band_limited(grid: &Grid, rng: &mut impl Rng) -> ScalarField {
    let dim = grid.dim();
    let kmax = PERTURBATION_MODES;
    let mut modes: Vec<([i64; 3], f64, f64)> = Vec::new();
    let range = -kmax..=kmax;
    let mut push = |k: [i64; 3], rng: &mut dyn rand::RngCore| {
        // one representative per ± pair: first nonzero component positive
        let first = k.iter().find(|&&c| c != 0);
        if let Some(&c) = first {
            if c > 0 {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                modes.push((k, a, b));
            }
        }
    };
    if dim == 2 {
        for k0 in range.clone() {
            for k1 in range.clone() {
                push([k0, k1, 0], rng);
            }
        }
    } else {
        for k0 in range.clone() {
            for k1 in range.clone() {
                for k2 in range.clone() {
                    push([k0, k1, k2], rng);
                }
            }
        }
    }
    let scale: Vec<f64> = grid
        .lengths()
        .iter()
        .map(|l| 2.0 * std::f64::consts::PI / l)
        .collect();
    ScalarField::from_fn(grid, |x| {
        let mut acc = 0.0;
        for (k, a, b) in &modes {
            let phase: f64 = (0..dim).map(|j| k[j] as f64 * scale[j] * x[j]).sum();
            acc += a * phase.cos() + b * phase.sin();
        }
        acc
    })
}

/// Smooth unit director with polar angle `0.9 + a·f` and azimuth `a·g`,
/// where `f, g` are seeded band-limited fields scaled to unit maximum.
pub fn random_unit_director(grid: &Grid, seed: u64, amplitude: f64) -> DirectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_band_limited(grid, &mut rng);
    let b = random_band_limited(grid, &mut rng);
    let (sa, sb) = (a.max_abs(), b.max_abs());
    let th = a.map(|v| 0.9 + amplitude * v / sa);
    let ph = b.map(|v| amplitude * v / sb);
    DirectorField::from_raw(VectorField::from_raw(vec![
        th.zip_map(&ph, |t, p| t.sin() * p.cos()),
        th.zip_map(&ph, |t, p| t.sin() * p.sin()),
        th.map(f64::cos),
    ]))
}

/// `(ρ, u, n) = (1 + ρ̄, u₀ + ū, (n₀ + n̄)/|n₀ + n̄|)` with seeded random
/// perturbations scaled so that
///
/// * `‖ρ̄‖_s = λ⁻² δ₀`,
/// * `‖ū‖_{s+1} = λ⁻¹ δ₀`,
/// * `‖∇n - ∇n₀‖_s = λ⁻¹ δ₀`.
///
/// The director amplitude is found by at most five fixed-point rescales
/// because normalisation makes the last bound nonlinear in the amplitude.
pub fn well_prepared_initial_data(
    grid: &Grid,
    params: ModelParams,
    prep: Preparation,
    u0: &VectorField,
    n0: &DirectorField,
) -> Result<CompressibleState> {
    params.validate(grid.dim())?;
    u0.check_grid(grid)?;
    n0.as_vector().check_grid(grid)?;
    check_divergence_free(u0)?;
    let defect = n0.unit_defect();
    if defect > crate::field::DEFAULT_UNIT_TOL {
        return Err(NlcError::Precondition(format!(
            "base director is not unit length (defect {defect:e})"
        )));
    }
    if !(prep.delta0 >= 0.0 && prep.delta0.is_finite()) {
        return Err(NlcError::InvalidParams(format!(
            "delta0 = {} must be non-negative",
            prep.delta0
        )));
    }
    if prep.delta0 == 0.0 {
        return CompressibleState::new(
            0.0,
            ScalarField::constant(grid, 1.0),
            u0.clone(),
            n0.clone(),
            params,
        );
    }

    let lambda = params.lambda;
    let s = prep.s;
    let mut rng = ChaCha8Rng::seed_from_u64(prep.seed);

    let rho_bar = random_band_limited(grid, &mut rng);
    let rho_bar = rho_bar.scale(prep.delta0 / (lambda * lambda) / sobolev_norm(&rho_bar, s));
    let rho = rho_bar.map(|v| 1.0 + v);

    let u_bar = VectorField::from_raw(
        (0..grid.dim())
            .map(|_| random_band_limited(grid, &mut rng))
            .collect(),
    );
    let u_bar = u_bar.scale(prep.delta0 / lambda / sobolev_norm(&u_bar, s + 1));
    let u = u0.add(&u_bar);

    let n_bar = VectorField::from_raw((0..3).map(|_| random_band_limited(grid, &mut rng)).collect());
    let n = perturb_director(n0, &n_bar, prep.delta0 / lambda, s)?;

    CompressibleState::new(0.0, rho, u, n, params)
}

/// `‖∇n - ∇n₀‖_s` summed over all components and directions.
pub fn director_gradient_gap(n: &DirectorField, n0: &DirectorField, s: usize) -> Result<f64> {
    let diff = n.as_vector().sub(n0.as_vector());
    let mut grads = Vec::new();
    for c in diff.components() {
        grads.extend(spectral::gradient(c)?.into_components());
    }
    Ok(sobolev_norm(&VectorField::from_raw(grads), s))
}

fn perturb_director(
    n0: &DirectorField,
    n_bar: &VectorField,
    target: f64,
    s: usize,
) -> Result<DirectorField> {
    let build = |amp: f64| -> Result<DirectorField> {
        let raw = n0.as_vector().axpy(amp, n_bar);
        let mag = raw.magnitude();
        if let Some((cell, &magnitude)) = mag.values().iter().enumerate().find(|(_, &m)| m < 0.5) {
            return Err(NlcError::PerturbationTooLarge { cell, magnitude });
        }
        normalize_director(&raw)
    };
    // linear guess ignores the normalisation
    let mut grads = Vec::new();
    for c in n_bar.components() {
        grads.extend(spectral::gradient(c)?.into_components());
    }
    let mut amp = target / sobolev_norm(&VectorField::from_raw(grads), s);
    let mut n = build(amp)?;
    for _ in 0..5 {
        let gap = director_gradient_gap(&n, n0, s)?;
        if gap == 0.0 {
            break;
        }
        if ((gap - target) / target).abs() < 1e-14 {
            break;
        }
        amp *= target / gap;
        n = build(amp)?;
    }
    Ok(n)
}

/// Taylor–Green velocity `A (sin x cos y, -cos x sin y[, 0])` (times
/// `cos z` in 3D).
pub fn taylor_green(grid: &Grid, amplitude: f64) -> VectorField {
    let dim = grid.dim();
    VectorField::from_fn(grid, dim, |x, i| {
        let z = if dim == 3 { x[2].cos() } else { 1.0 };
        match i {
            0 => amplitude * x[0].sin() * x[1].cos() * z,
            1 => -amplitude * x[0].cos() * x[1].sin() * z,
            _ => 0.0,
        }
    })
}

/// Smooth planar director `(cos φ, sin φ, 0)` with
/// `φ = a (cos x + sin y [+ cos z])`.
pub fn twisted_director(grid: &Grid, amplitude: f64) -> DirectorField {
    let dim = grid.dim();
    let phi = ScalarField::from_fn(grid, |x| {
        let mut v = x[0].cos() + x[1].sin();
        if dim == 3 {
            v += x[2].cos();
        }
        amplitude * v
    });
    DirectorField::from_raw(VectorField::from_raw(vec![
        phi.map(f64::cos),
        phi.map(f64::sin),
        ScalarField::zeros(grid),
    ]))
}

/// Baseline incompressible data `(u₀, n₀)` selected by name.
pub fn base_profile(grid: &Grid, profile: &str) -> Result<(VectorField, DirectorField)> {
    match profile {
        "taylor_green" => Ok((taylor_green(grid, 1.0), twisted_director(grid, 0.5))),
        "taylor_green_uniform" => Ok((
            taylor_green(grid, 1.0),
            DirectorField::constant(grid, [1.0, 0.0, 0.0])?,
        )),
        "rest" => Ok((
            VectorField::zeros(grid, grid.dim()),
            DirectorField::constant(grid, [0.0, 0.0, 1.0])?,
        )),
        "director_only" => Ok((VectorField::zeros(grid, grid.dim()), twisted_director(grid, 0.5))),
        other => Err(NlcError::Config(format!("unknown init.profile '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::uniform(2, 32).unwrap()
    }

    #[test]
    fn pressure_examples() {
        let g = grid();
        let law = PressureLaw { gamma: 2.0 };
        let one = ScalarField::constant(&g, 1.0);
        assert!(pressure(&one, law).unwrap().map(|v| v - 1.0).max_abs() < 1e-15);
        assert!(pressure_prime(&one, law).unwrap().map(|v| v - 2.0).max_abs() < 1e-15);
        let two = ScalarField::constant(&g, 2.0);
        assert!(pressure(&two, law).unwrap().map(|v| v - 4.0).max_abs() < 1e-14);
    }

    #[test]
    fn pressure_rejects_nonpositive_density_with_cell() {
        let g = grid();
        let mut rho = ScalarField::constant(&g, 1.0);
        rho.values_mut()[7] = 0.0;
        match pressure(&rho, PressureLaw { gamma: 2.0 }) {
            Err(NlcError::Domain { cell, .. }) => assert_eq!(cell, 7),
            other => panic!("unexpected {other:?}"),
        }
        assert!(q_potential(&rho, PressureLaw { gamma: 2.0 }).is_err());
    }

    #[test]
    fn q_examples() {
        let g = grid();
        let law = PressureLaw { gamma: 2.0 };
        assert!(q_potential(&ScalarField::constant(&g, 1.0), law).unwrap().max_abs() < 1e-15);
        let q2 = q_potential(&ScalarField::constant(&g, 2.0), law).unwrap();
        assert!(q2.map(|v| v - 2.0).max_abs() < 1e-14);
    }

    #[test]
    fn params_validation() {
        let p = ModelParams::default();
        assert!(p.validate(2).is_ok());
        assert!(ModelParams { mu: 0.0, ..p }.validate(2).is_err());
        assert!(ModelParams { kappa: -1.1, ..p }.validate(2).is_err());
        assert!(ModelParams { kappa: -1.0, ..p }.validate(2).is_ok());
        assert!(ModelParams { lambda: 0.5, ..p }.validate(2).is_err());
        assert!(ModelParams { gamma: 1.0, ..p }.validate(2).is_err());
    }

    #[test]
    fn normalize_examples() {
        let g = grid();
        let two = VectorField::from_raw(vec![
            ScalarField::constant(&g, 2.0),
            ScalarField::zeros(&g),
            ScalarField::zeros(&g),
        ]);
        let n = normalize_director(&two).unwrap();
        assert!(n.component(0).map(|v| v - 1.0).max_abs() < 1e-16);
        let unit = twisted_director(&g, 0.5);
        let again = normalize_director(unit.as_vector()).unwrap();
        assert!(again.as_vector().sub(unit.as_vector()).max_abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_short_vectors() {
        let g = grid();
        let mut c = ScalarField::constant(&g, 1.0);
        c.values_mut()[3] = 1e-3;
        let v = VectorField::from_raw(vec![c, ScalarField::zeros(&g), ScalarField::zeros(&g)]);
        assert!(matches!(
            normalize_director(&v),
            Err(NlcError::Degenerate { cell: 3, .. })
        ));
    }

    #[test]
    fn zero_delta_returns_base_exactly() {
        let g = grid();
        let (u0, n0) = base_profile(&g, "taylor_green").unwrap();
        let prep = Preparation {
            delta0: 0.0,
            ..Default::default()
        };
        let st = well_prepared_initial_data(&g, ModelParams::default(), prep, &u0, &n0).unwrap();
        assert!(st.rho.values().iter().all(|&r| r == 1.0));
        assert_eq!(st.u, u0);
        assert_eq!(st.n, n0);
    }

    #[test]
    fn well_prepared_bounds_hold_with_equality() {
        let g = grid();
        let (u0, n0) = base_profile(&g, "taylor_green").unwrap();
        let params = ModelParams::default().with_lambda(10.0);
        let prep = Preparation {
            delta0: 0.1,
            s: 3,
            seed: 7,
        };
        let st = well_prepared_initial_data(&g, params, prep, &u0, &n0).unwrap();
        let rho_bar = st.rho.map(|r| r - 1.0);
        let r = sobolev_norm(&rho_bar, 3);
        assert!((r - 1e-3).abs() / 1e-3 < 1e-12, "rho bound {r}");
        let ub = sobolev_norm(&st.u.sub(&u0), 4);
        assert!((ub - 1e-2).abs() / 1e-2 < 1e-12, "u bound {ub}");
        let ng = director_gradient_gap(&st.n, &n0, 3).unwrap();
        assert!((ng - 1e-2).abs() / 1e-2 < 1e-9, "n bound {ng}");
        assert!(st.n.unit_defect() < 1e-14);
    }

    #[test]
    fn same_seed_same_state() {
        let g = grid();
        let (u0, n0) = base_profile(&g, "taylor_green").unwrap();
        let params = ModelParams::default();
        let a = well_prepared_initial_data(&g, params, Preparation::default(), &u0, &n0).unwrap();
        let b = well_prepared_initial_data(&g, params, Preparation::default(), &u0, &n0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_compressible_base_velocity() {
        let g = grid();
        let u0 = VectorField::from_fn(&g, 2, |x, i| if i == 0 { x[0].sin() } else { 0.0 });
        let n0 = DirectorField::constant(&g, [0.0, 0.0, 1.0]).unwrap();
        let err = well_prepared_initial_data(&g, ModelParams::default(), Preparation::default(), &u0, &n0);
        assert!(matches!(err, Err(NlcError::Precondition(_))));
    }

    #[test]
    fn cancelling_perturbation_is_reported() {
        let g = grid();
        let n0 = DirectorField::constant(&g, [0.0, 0.0, 1.0]).unwrap();
        // n0 + n_bar vanishes at x = 0 when the amplitude reaches 1
        let n_bar = VectorField::from_fn(&g, 3, |x, i| if i == 2 { -x[0].cos() } else { 0.0 });
        let target = (2.0 * std::f64::consts::PI.powi(2)).sqrt();
        let err = perturb_director(&n0, &n_bar, target, 0);
        assert!(
            matches!(err, Err(NlcError::PerturbationTooLarge { .. })),
            "{err:?}"
        );
    }
}
