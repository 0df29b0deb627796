//! Compressible nematic flow: right-hand sides and IMEX time stepping.
//!
//! Unknowns are `(ρ, u, n)` with
//!
//! ```text
//! ρ_t = -∇·(ρu)
//! u_t = -(u·∇)u - (λ²/ρ)∇P(ρ) + (μ/ρ)Δu + ((κ+μ)/ρ)∇(∇·u) - (ν/ρ) Σᵢ Δnᵢ ∇nᵢ
//! n_t = -(u·∇)n + θ(Δn + |∇n|² n)
//! ```
//!
//! The IMEX split treats the acoustic pair linearised about `ρ = 1`
//! (`λ²P'(1)∇ρ` and `∇·u`) and all Laplacians implicitly; each Fourier mode
//! then needs a 2×2 longitudinal solve plus scalar transverse and director
//! solves. Everything else, including `λ²(P'(ρ)/ρ - P'(1))∇ρ`, is explicit.

use num_complex::Complex64;

use crate::error::{NlcError, Result};
use crate::field::{DirectorField, ScalarField, VectorField};
use crate::grid::Grid;
use crate::imex::{Integrator, Modes, Scheme, SplitOperator, StepControl};
use crate::observe::{notify, Observer, StepInfo, Trajectory};
use crate::spectral::{d_modes, fft_modes, ifft_modes, lap_modes, truncate_modes};
use crate::state::{check_regime, normalize_director, CompressibleState, ModelParams, PressureLaw};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Safety factor applied to explicit stability limits.
pub const C_SAFETY: f64 = 0.5;

/// Time derivatives of `(ρ, u, n)`.
#[derive(Clone, Debug)]
pub struct CompressibleRHS {
    pub d_rho: ScalarField,
    pub d_u: VectorField,
    /// Three components; tangent to the sphere only for exact unit directors.
    pub d_n: VectorField,
}

/// Forward transform of real samples, with optional two-thirds truncation.
pub(crate) fn to_modes(grid: &Grid, values: Vec<f64>, dealias: bool) -> Vec<Complex64> {
    let mut m = fft_modes(&ScalarField::from_raw(grid, values));
    if dealias {
        truncate_modes(grid, &mut m);
    }
    m
}

/// Real-space derivatives of a director shared by several right-hand sides.
pub(crate) struct DirectorDerivs {
    /// `grad[i][k] = ∂_k nᵢ`
    pub grad: Vec<Vec<ScalarField>>,
    pub lap: Vec<ScalarField>,
}

impl DirectorDerivs {
    pub fn from_modes(grid: &Grid, n_modes: &[Vec<Complex64>]) -> Self {
        let grad = n_modes
            .iter()
            .map(|m| {
                (0..grid.dim())
                    .map(|k| ifft_modes(grid, &d_modes(grid, m, k)))
                    .collect()
            })
            .collect();
        let lap = n_modes
            .iter()
            .map(|m| ifft_modes(grid, &lap_modes(grid, m)))
            .collect();
        Self { grad, lap }
    }

    /// `Σᵢ Δnᵢ ∂_j nᵢ` at one cell.
    #[inline]
    pub fn ericksen(&self, cell: usize, j: usize) -> f64 {
        self.lap
            .iter()
            .zip(&self.grad)
            .map(|(l, g)| l.values()[cell] * g[j].values()[cell])
            .sum()
    }

    /// `|∇n|²` at one cell.
    #[inline]
    pub fn grad_sq(&self, cell: usize) -> f64 {
        self.grad
            .iter()
            .flat_map(|g| g.iter())
            .map(|f| f.values()[cell] * f.values()[cell])
            .sum()
    }

    /// `Σ_k v_k ∂_k nᵢ` at one cell.
    #[inline]
    pub fn advect(&self, v: &[ScalarField], cell: usize, i: usize) -> f64 {
        v.iter()
            .zip(&self.grad[i])
            .map(|(vk, g)| vk.values()[cell] * g.values()[cell])
            .sum()
    }
}

/// Divergence of the Ericksen stress in the form `Σᵢ Δnᵢ ∇nᵢ`.
pub fn ericksen_stress_div(n: &DirectorField) -> Result<VectorField> {
    ericksen_stress_div_with(n, true)
}

pub fn ericksen_stress_div_with(n: &DirectorField, dealias: bool) -> Result<VectorField> {
    let grid = n.grid().clone();
    let modes: Vec<_> = n.components().iter().map(fft_modes).collect();
    let dd = DirectorDerivs::from_modes(&grid, &modes);
    Ok(VectorField::from_raw(
        (0..grid.dim())
            .map(|j| {
                let vals = (0..grid.len()).map(|c| dd.ericksen(c, j)).collect();
                ifft_modes(&grid, &to_modes(&grid, vals, dealias))
            })
            .collect(),
    ))
}

/// `∇·(∇n⊙∇n - ½|∇n|² I)` evaluated by forming the stress tensor and
/// taking its spectral divergence.
pub fn ericksen_stress_divergence_form(n: &DirectorField, dealias: bool) -> Result<VectorField> {
    let grid = n.grid().clone();
    let dim = grid.dim();
    let grads: Vec<VectorField> = n
        .components()
        .iter()
        .map(crate::spectral::gradient)
        .collect::<Result<_>>()?;
    let mut acc: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); grid.len()]; dim];
    for j in 0..dim {
        for k in 0..dim {
            let vals: Vec<f64> = (0..grid.len())
                .map(|c| {
                    let mut t = 0.0;
                    let mut sq = 0.0;
                    for g in &grads {
                        t += g.component(j).values()[c] * g.component(k).values()[c];
                        for a in 0..dim {
                            sq += g.component(a).values()[c].powi(2);
                        }
                    }
                    if j == k {
                        t - 0.5 * sq
                    } else {
                        t
                    }
                })
                .collect();
            let tm = to_modes(&grid, vals, dealias);
            for (o, z) in acc[j].iter_mut().zip(d_modes(&grid, &tm, k)) {
                *o += z;
            }
        }
    }
    Ok(VectorField::from_raw(
        acc.iter().map(|m| ifft_modes(&grid, m)).collect(),
    ))
}

/// Spectral split of the compressible system.
#[derive(Clone)]
pub(crate) struct CompressibleOperator {
    pub grid: Grid,
    pub params: ModelParams,
    pub dealias: bool,
}

impl CompressibleOperator {
    pub fn new(grid: &Grid, params: ModelParams, dealias: bool) -> Result<Self> {
        params.validate(grid.dim())?;
        Ok(Self {
            grid: grid.clone(),
            params,
            dealias,
        })
    }

    fn law(&self) -> PressureLaw {
        self.params.pressure_law()
    }

    /// Squared acoustic speed `λ² P'(1)` of the implicit part.
    pub fn c2(&self) -> f64 {
        self.params.lambda.powi(2) * self.law().p_prime(1.0)
    }

    pub fn state_modes(&self, state: &CompressibleState) -> Modes {
        let mut out = Vec::with_capacity(1 + self.grid.dim() + 3);
        out.push(fft_modes(&state.rho.map(|r| r - 1.0)));
        out.extend(state.u.components().iter().map(fft_modes));
        out.extend(state.n.components().iter().map(fft_modes));
        out
    }

    /// Real fields from modes. Returns `(ρ, u, n-unprojected)`.
    pub fn real_fields(&self, modes: &Modes) -> (ScalarField, VectorField, VectorField) {
        let d = self.grid.dim();
        let rho = ifft_modes(&self.grid, &modes[0]).map(|v| 1.0 + v);
        let u = VectorField::from_raw(
            (0..d)
                .map(|j| ifft_modes(&self.grid, &modes[1 + j]))
                .collect(),
        );
        let n = VectorField::from_raw(
            (0..3)
                .map(|i| ifft_modes(&self.grid, &modes[1 + d + i]))
                .collect(),
        );
        (rho, u, n)
    }

    /// Velocity derivatives shared by both momentum forms.
    fn velocity_derivs(&self, u_modes: &[Vec<Complex64>]) -> VelocityDerivs {
        let g = &self.grid;
        let d = g.dim();
        let grad = u_modes
            .iter()
            .map(|m| (0..d).map(|k| ifft_modes(g, &d_modes(g, m, k))).collect())
            .collect();
        let lap = u_modes.iter().map(|m| ifft_modes(g, &lap_modes(g, m))).collect();
        let mut div_hat = vec![Complex64::default(); g.len()];
        for (j, m) in u_modes.iter().enumerate() {
            for ((o, z), k) in div_hat.iter_mut().zip(m).zip(g.k_odd()) {
                *o += I * k[j] * z;
            }
        }
        let grad_div = (0..d)
            .map(|j| ifft_modes(g, &d_modes(g, &div_hat, j)))
            .collect();
        VelocityDerivs {
            grad,
            lap,
            grad_div,
        }
    }

    /// `N(U)` of the nonconservative form.
    pub fn explicit_part(&self, modes: &Modes) -> Result<Modes> {
        let g = &self.grid;
        let d = g.dim();
        let p = self.params;
        let law = self.law();
        let lam2 = p.lambda * p.lambda;
        let p1 = law.p_prime(1.0);

        let (rho, u, n) = self.real_fields(modes);
        check_regime(&rho)?;
        let rho_bar = ifft_modes(g, &modes[0]);
        let grad_rho: Vec<ScalarField> = (0..d)
            .map(|k| ifft_modes(g, &d_modes(g, &modes[0], k)))
            .collect();
        let vd = self.velocity_derivs(&modes[1..1 + d]);
        let nd = DirectorDerivs::from_modes(g, &modes[1 + d..]);
        let uc = u.components();

        let mut out = Vec::with_capacity(1 + d + 3);

        // -∇·(ρ̄u); the linear -∇·u is implicit
        let mut d_rho = vec![Complex64::default(); g.len()];
        for j in 0..d {
            let flux = rho_bar.mul(&uc[j]).into_values();
            let fm = to_modes(g, flux, self.dealias);
            for ((o, z), k) in d_rho.iter_mut().zip(&fm).zip(g.k_odd()) {
                *o -= I * k[j] * z;
            }
        }
        out.push(d_rho);

        for j in 0..d {
            let vals: Vec<f64> = (0..g.len())
                .map(|c| {
                    let r = rho.values()[c];
                    let adv: f64 = (0..d)
                        .map(|k| uc[k].values()[c] * vd.grad[j][k].values()[c])
                        .sum();
                    let press =
                        lam2 * (law.p_prime_over_rho(r) - p1) * grad_rho[j].values()[c];
                    let visc = (1.0 / r - 1.0)
                        * (p.mu * vd.lap[j].values()[c]
                            + (p.kappa + p.mu) * vd.grad_div[j].values()[c]);
                    -adv - press + visc - p.nu / r * nd.ericksen(c, j)
                })
                .collect();
            out.push(to_modes(g, vals, self.dealias));
        }

        for i in 0..3 {
            let vals: Vec<f64> = (0..g.len())
                .map(|c| {
                    -nd.advect(uc, c, i) + p.theta * nd.grad_sq(c) * n.component(i).values()[c]
                })
                .collect();
            out.push(to_modes(g, vals, self.dealias));
        }
        Ok(out)
    }

    /// Largest `|P'(ρ)/ρ - P'(1)|`, the coefficient of the explicit pressure
    /// remainder.
    pub fn pressure_remainder(&self, rho: &ScalarField) -> f64 {
        let law = self.law();
        let p1 = law.p_prime(1.0);
        rho.values()
            .iter()
            .map(|&r| (law.p_prime_over_rho(r) - p1).abs())
            .fold(0.0, f64::max)
    }
}

struct VelocityDerivs {
    /// `grad[j][k] = ∂_k u_j`
    grad: Vec<Vec<ScalarField>>,
    lap: Vec<ScalarField>,
    grad_div: Vec<ScalarField>,
}

impl SplitOperator for CompressibleOperator {
    fn linear(&self, u: &Modes) -> Modes {
        let g = &self.grid;
        let d = g.dim();
        let p = self.params;
        let c2 = self.c2();
        let mut out: Modes = u.iter().map(|m| vec![Complex64::default(); m.len()]).collect();
        for idx in 0..g.len() {
            let k = g.k_odd()[idx];
            let k2 = g.k_sq()[idx];
            let mut kdotu = Complex64::default();
            for j in 0..d {
                kdotu += k[j] * u[1 + j][idx];
            }
            out[0][idx] = -I * kdotu;
            for j in 0..d {
                out[1 + j][idx] = -I * c2 * k[j] * u[0][idx] - p.mu * k2 * u[1 + j][idx]
                    - (p.kappa + p.mu) * k[j] * kdotu;
            }
            for i in 0..3 {
                out[1 + d + i][idx] = -p.theta * k2 * u[1 + d + i][idx];
            }
        }
        out
    }

    fn solve(&self, a: f64, dt: f64, rhs: &Modes) -> Modes {
        solve_acoustic_viscous(&self.grid, &self.params, self.c2(), a, dt, rhs)
    }

    fn explicit(&self, u: &Modes, _t: f64) -> Result<Modes> {
        self.explicit_part(u)
    }
}

/// Per-mode solve of `(a I - dt L) U = rhs` for the acoustic-viscous block
/// and the director diffusion.
pub(crate) fn solve_acoustic_viscous(
    grid: &Grid,
    p: &ModelParams,
    c2: f64,
    a: f64,
    dt: f64,
    rhs: &Modes,
) -> Modes {
    let d = grid.dim();
    let mut out: Modes = rhs.iter().map(|m| vec![Complex64::default(); m.len()]).collect();
    for idx in 0..grid.len() {
        let k = grid.k_odd()[idx];
        let k2 = grid.k_sq()[idx];
        let q2 = grid.k_odd_sq()[idx];
        let trans = a + dt * p.mu * k2;
        let r_rho = rhs[0][idx];
        if q2 == 0.0 {
            out[0][idx] = r_rho / a;
            for j in 0..d {
                out[1 + j][idx] = rhs[1 + j][idx] / trans;
            }
        } else {
            let q = q2.sqrt();
            // longitudinal component along k/|k|
            let mut r_w = Complex64::default();
            for j in 0..d {
                r_w += k[j] / q * rhs[1 + j][idx];
            }
            let damp = a + dt * (p.mu * k2 + (p.kappa + p.mu) * q2);
            let det = a * damp + dt * dt * c2 * q2;
            let rho = (damp * r_rho - I * dt * q * r_w) / det;
            let w = (a * r_w - I * dt * c2 * q * r_rho) / det;
            out[0][idx] = rho;
            for j in 0..d {
                let rj = rhs[1 + j][idx];
                let perp = rj - k[j] / q * r_w;
                out[1 + j][idx] = perp / trans + k[j] / q * w;
            }
        }
        let diff = a + dt * p.theta * k2;
        for i in 0..3 {
            out[1 + d + i][idx] = rhs[1 + d + i][idx] / diff;
        }
    }
    out
}

fn rhs_from_modes(op: &CompressibleOperator, total: &Modes) -> CompressibleRHS {
    let g = &op.grid;
    let d = g.dim();
    CompressibleRHS {
        d_rho: ifft_modes(g, &total[0]),
        d_u: VectorField::from_raw((0..d).map(|j| ifft_modes(g, &total[1 + j])).collect()),
        d_n: VectorField::from_raw((0..3).map(|i| ifft_modes(g, &total[1 + d + i])).collect()),
    }
}

/// Right-hand side of the nonconservative form with dealiased products.
pub fn eval_rhs_nonconservative(state: &CompressibleState) -> Result<CompressibleRHS> {
    eval_rhs_nonconservative_with(state, true)
}

pub fn eval_rhs_nonconservative_with(
    state: &CompressibleState,
    dealias: bool,
) -> Result<CompressibleRHS> {
    let op = CompressibleOperator::new(state.grid(), state.params, dealias)?;
    state.check_regime()?;
    let modes = op.state_modes(state);
    let lin = op.linear(&modes);
    let nl = op.explicit_part(&modes)?;
    let total: Modes = lin
        .iter()
        .zip(&nl)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
        .collect();
    Ok(rhs_from_modes(&op, &total))
}

/// Right-hand side obtained from the conservative momentum equation,
/// `u_t = [(ρu)_t - u ρ_t] / ρ`. Serves as an independent check of the
/// nonconservative evaluator.
pub fn eval_rhs_conservative(state: &CompressibleState) -> Result<CompressibleRHS> {
    eval_rhs_conservative_with(state, true)
}

pub fn eval_rhs_conservative_with(
    state: &CompressibleState,
    dealias: bool,
) -> Result<CompressibleRHS> {
    let g = state.grid().clone();
    let d = g.dim();
    let p = state.params;
    p.validate(d)?;
    state.check_regime()?;
    let law = p.pressure_law();
    let lam2 = p.lambda * p.lambda;
    let rho = &state.rho;
    let uc = state.u.components();

    // ρ_t = -∇·(ρu)
    let mut rho_t_hat = vec![Complex64::default(); g.len()];
    for j in 0..d {
        let fm = to_modes(&g, rho.mul(&uc[j]).into_values(), dealias);
        for ((o, z), k) in rho_t_hat.iter_mut().zip(&fm).zip(g.k_odd()) {
            *o -= I * k[j] * z;
        }
    }
    let rho_t = ifft_modes(&g, &rho_t_hat);

    let u_modes: Vec<_> = uc.iter().map(fft_modes).collect();
    let n_modes: Vec<_> = state.n.components().iter().map(fft_modes).collect();
    let nd = DirectorDerivs::from_modes(&g, &n_modes);
    let pm = to_modes(&g, rho.map(|r| law.p(r)).into_values(), dealias);

    let mut d_u = Vec::with_capacity(d);
    for j in 0..d {
        // -∇·(ρ u_j u)
        let mut mom = vec![Complex64::default(); g.len()];
        for k in 0..d {
            let vals: Vec<f64> = (0..g.len())
                .map(|c| rho.values()[c] * uc[j].values()[c] * uc[k].values()[c])
                .collect();
            let tm = to_modes(&g, vals, dealias);
            for ((o, z), kk) in mom.iter_mut().zip(&tm).zip(g.k_odd()) {
                *o -= I * kk[k] * z;
            }
        }
        for (idx, o) in mom.iter_mut().enumerate() {
            let k = g.k_odd()[idx];
            let k2 = g.k_sq()[idx];
            let mut kdotu = Complex64::default();
            for l in 0..d {
                kdotu += k[l] * u_modes[l][idx];
            }
            *o += -I * lam2 * k[j] * pm[idx] - p.mu * k2 * u_modes[j][idx]
                - (p.kappa + p.mu) * k[j] * kdotu;
        }
        let mom_t = ifft_modes(&g, &mom);
        let vals: Vec<f64> = (0..g.len())
            .map(|c| {
                let m = mom_t.values()[c] - p.nu * nd.ericksen(c, j);
                (m - uc[j].values()[c] * rho_t.values()[c]) / rho.values()[c]
            })
            .collect();
        d_u.push(ifft_modes(&g, &to_modes(&g, vals, dealias)));
    }

    let d_n = (0..3)
        .map(|i| {
            let vals: Vec<f64> = (0..g.len())
                .map(|c| {
                    -nd.advect(uc, c, i)
                        + p.theta * nd.grad_sq(c) * state.n.component(i).values()[c]
                })
                .collect();
            let mut m = to_modes(&g, vals, dealias);
            for ((z, k2), nm) in m.iter_mut().zip(g.k_sq()).zip(&n_modes[i]) {
                *z -= p.theta * k2 * nm;
            }
            ifft_modes(&g, &m)
        })
        .collect();

    Ok(CompressibleRHS {
        d_rho: rho_t,
        d_u: VectorField::from_raw(d_u),
        d_n: VectorField::from_raw(d_n),
    })
}

/// Stability limit of the explicit reference scheme.
pub fn rk4_stable_dt(grid: &Grid, params: &ModelParams) -> f64 {
    let kmax = grid.max_wavenumber();
    let cs = params.lambda * params.pressure_law().p_prime(1.0).sqrt();
    let diff = params
        .mu
        .max(2.0 * params.mu + params.kappa)
        .max(params.theta);
    (2.5 / (cs * kmax)).min(2.7 / (diff * kmax * kmax))
}

/// Stateful stepper; keeps the multistep history between calls.
pub struct CompressibleSolver {
    op: CompressibleOperator,
    integrator: Integrator,
    ctl: StepControl,
    steps_taken: usize,
}

impl CompressibleSolver {
    pub fn new(grid: &Grid, params: ModelParams, ctl: StepControl) -> Result<Self> {
        let op = CompressibleOperator::new(grid, params, ctl.dealias)?;
        if ctl.scheme == Scheme::ExplicitRk4Reference {
            let limit = rk4_stable_dt(grid, &params);
            if ctl.dt > limit {
                return Err(NlcError::StepTooLarge {
                    dt: ctl.dt,
                    limit,
                    scheme: ctl.scheme.name(),
                });
            }
        }
        Ok(Self {
            op,
            integrator: Integrator::new(ctl.scheme, ctl.dt),
            ctl,
            steps_taken: 0,
        })
    }

    pub fn control(&self) -> &StepControl {
        &self.ctl
    }

    /// Forgets the multistep history; the next step restarts with IMEX Euler.
    pub fn reset(&mut self) {
        self.integrator.reset();
        self.steps_taken = 0;
    }

    /// Explicit-remainder step limit for the current density.
    pub fn remainder_dt_limit(&self, rho: &ScalarField) -> f64 {
        let r = self.op.pressure_remainder(rho);
        if r == 0.0 {
            return f64::INFINITY;
        }
        C_SAFETY / (self.op.params.lambda * r.sqrt() * self.op.grid.max_retained_wavenumber())
    }

    pub fn step(&mut self, state: &CompressibleState) -> Result<(CompressibleState, StepInfo)> {
        let step = self.steps_taken + 1;
        if self.ctl.scheme != Scheme::ExplicitRk4Reference {
            let limit = self.remainder_dt_limit(&state.rho);
            if self.ctl.dt > limit {
                return Err(NlcError::StepTooLarge {
                    dt: self.ctl.dt,
                    limit,
                    scheme: self.ctl.scheme.name(),
                });
            }
        }
        let modes = self.op.state_modes(state);
        let next = self.integrator.advance(&self.op, &modes, state.time)?;
        let time = state.time + self.ctl.dt;
        let (rho, u, n_raw) = self.op.real_fields(&next);
        let blown = !rho.is_finite()
            || !u.is_finite()
            || !n_raw.is_finite()
            || rho.values().iter().any(|&r| r <= 0.0);
        if blown {
            return Err(NlcError::BlowUp { time, step });
        }
        let (n, unit_drift) = finish_director(n_raw, self.ctl.renormalize_director, time, step)?;
        self.steps_taken = step;
        Ok((
            CompressibleState {
                time,
                rho,
                u,
                n,
                params: state.params,
            },
            StepInfo { step, unit_drift },
        ))
    }
}

/// Measures the drift of a freshly stepped director and optionally projects
/// it back onto the sphere.
pub(crate) fn finish_director(
    n_raw: VectorField,
    renormalize: bool,
    time: f64,
    step: usize,
) -> Result<(DirectorField, f64)> {
    let drift = n_raw
        .magnitude()
        .values()
        .iter()
        .fold(0.0, |m: f64, &v| m.max((v - 1.0).abs()));
    let n = if renormalize {
        normalize_director(&n_raw).map_err(|_| NlcError::BlowUp { time, step })?
    } else {
        DirectorField::from_raw(n_raw)
    };
    Ok((n, drift))
}

/// One step from a fresh history (`imex_bdf2` therefore takes an Euler step).
pub fn step(state: &CompressibleState, ctl: &StepControl) -> Result<CompressibleState> {
    let mut solver = CompressibleSolver::new(state.grid(), state.params, *ctl)?;
    Ok(solver.step(state)?.0)
}

/// Integrates to `ctl.t_end`, notifying observers and recording every
/// `ctl.record_stride`-th state plus the final one.
pub fn run(
    initial: &CompressibleState,
    ctl: &StepControl,
    observers: &mut [&mut dyn Observer<CompressibleState>],
) -> Result<Trajectory<CompressibleState>> {
    let steps = ctl.steps()?;
    let mut solver = CompressibleSolver::new(initial.grid(), initial.params, *ctl)?;
    let mut traj = Trajectory::new();
    let stride = ctl.record_stride.max(1);
    traj.push(0, initial.clone());
    notify(
        observers,
        initial,
        &StepInfo {
            step: 0,
            unit_drift: initial.n.unit_defect(),
        },
    )?;
    let mut state = initial.clone();
    for s in 1..=steps {
        let (mut next, info) = solver.step(&state).map_err(|e| wrap_step(e, s))?;
        next.time = initial.time + s as f64 * ctl.dt;
        notify(observers, &next, &info).map_err(|e| wrap_step(e, s))?;
        if s % stride == 0 || s == steps {
            traj.push(s, next.clone());
        }
        state = next;
    }
    Ok(traj)
}

pub(crate) fn wrap_step(e: NlcError, step: usize) -> NlcError {
    match e {
        NlcError::BlowUp { .. } | NlcError::AtStep { .. } => e,
        other => NlcError::AtStep {
            step,
            source: Box::new(other),
        },
    }
}
