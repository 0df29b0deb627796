//! Incompressible limit: projected Navier–Stokes coupled to the harmonic
//! map heat flow.
//!
//! ```text
//! u_t = P[-(u·∇)u + μΔu - ν Σᵢ Δnᵢ ∇nᵢ]
//! n_t = -(u·∇)n + θ(Δn + |∇n|² n)
//! ```
//!
//! `P` is the Leray projector. The pressure never enters the time step;
//! it is recovered from the state for output.

use num_complex::Complex64;

use crate::compressible::{finish_director, to_modes, wrap_step, DirectorDerivs};
use crate::error::{NlcError, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::imex::{Integrator, Modes, SplitOperator, StepControl};
use crate::observe::{notify, Observer, StepInfo, Trajectory};
use crate::spectral::{fft_modes, ifft_modes, leray_modes};
use crate::state::{check_divergence_free, IncompressibleState, ModelParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Time derivatives of `(u, n)`.
#[derive(Clone, Debug)]
pub struct IncompressibleRHS {
    /// Divergence-free.
    pub d_u: VectorField,
    pub d_n: VectorField,
}

#[derive(Clone)]
pub(crate) struct IncompressibleOperator {
    pub grid: Grid,
    pub params: ModelParams,
    pub dealias: bool,
}

impl IncompressibleOperator {
    pub fn new(grid: &Grid, params: ModelParams, dealias: bool) -> Result<Self> {
        params.validate(grid.dim())?;
        Ok(Self {
            grid: grid.clone(),
            params,
            dealias,
        })
    }

    pub fn state_modes(&self, state: &IncompressibleState) -> Modes {
        state
            .u
            .components()
            .iter()
            .chain(state.n.components())
            .map(fft_modes)
            .collect()
    }

    /// Spectra of the unprojected forcing `F = (u·∇)u + ν Σᵢ Δnᵢ ∇nᵢ` and of
    /// the director right-hand side without the diffusion.
    fn forcing(&self, modes: &Modes) -> (Modes, Modes) {
        let g = &self.grid;
        let d = g.dim();
        let p = self.params;
        let u: Vec<ScalarField> = (0..d).map(|j| ifft_modes(g, &modes[j])).collect();
        let n: Vec<ScalarField> = (0..3).map(|i| ifft_modes(g, &modes[d + i])).collect();
        let ud = DirectorDerivs::from_modes(g, &modes[..d]);
        let nd = DirectorDerivs::from_modes(g, &modes[d..]);
        let f = (0..d)
            .map(|j| {
                let vals = (0..g.len())
                    .map(|c| ud.advect(&u, c, j) + p.nu * nd.ericksen(c, j))
                    .collect();
                to_modes(g, vals, self.dealias)
            })
            .collect();
        let dn = (0..3)
            .map(|i| {
                let vals = (0..g.len())
                    .map(|c| -nd.advect(&u, c, i) + p.theta * nd.grad_sq(c) * n[i].values()[c])
                    .collect();
                to_modes(g, vals, self.dealias)
            })
            .collect();
        (f, dn)
    }

    /// Mean-zero pressure spectrum solving `-Δp = ∇·F`.
    fn pressure_modes(&self, f: &Modes) -> Vec<Complex64> {
        let g = &self.grid;
        (0..g.len())
            .map(|idx| {
                let q2 = g.k_odd_sq()[idx];
                if q2 == 0.0 {
                    return Complex64::default();
                }
                let k = g.k_odd()[idx];
                let mut kf = Complex64::default();
                for (j, fj) in f.iter().enumerate() {
                    kf += k[j] * fj[idx];
                }
                I * kf / q2
            })
            .collect()
    }
}

impl SplitOperator for IncompressibleOperator {
    fn linear(&self, u: &Modes) -> Modes {
        let g = &self.grid;
        let d = g.dim();
        u.iter()
            .enumerate()
            .map(|(c, m)| {
                let coef = if c < d { self.params.mu } else { self.params.theta };
                m.iter().zip(g.k_sq()).map(|(z, k2)| -coef * k2 * z).collect()
            })
            .collect()
    }

    fn solve(&self, a: f64, dt: f64, rhs: &Modes) -> Modes {
        let g = &self.grid;
        let d = g.dim();
        let mut out: Modes = rhs
            .iter()
            .enumerate()
            .map(|(c, m)| {
                let coef = if c < d { self.params.mu } else { self.params.theta };
                m.iter().zip(g.k_sq()).map(|(z, k2)| z / (a + dt * coef * k2)).collect()
            })
            .collect();
        leray_modes(g, &mut out[..d]);
        out
    }

    fn explicit(&self, u: &Modes, _t: f64) -> Result<Modes> {
        let (mut f, dn) = self.forcing(u);
        for m in f.iter_mut() {
            for z in m.iter_mut() {
                *z = -*z;
            }
        }
        leray_modes(&self.grid, &mut f);
        f.extend(dn);
        Ok(f)
    }
}

/// Right-hand side with dealiased products.
pub fn eval_rhs_incompressible(state: &IncompressibleState) -> Result<IncompressibleRHS> {
    eval_rhs_incompressible_with(state, true)
}

pub fn eval_rhs_incompressible_with(
    state: &IncompressibleState,
    dealias: bool,
) -> Result<IncompressibleRHS> {
    check_divergence_free(&state.u)?;
    let op = IncompressibleOperator::new(state.grid(), state.params, dealias)?;
    let g = &op.grid;
    let d = g.dim();
    let modes = op.state_modes(state);
    let lin = op.linear(&modes);
    let nl = op.explicit(&modes, state.time)?;
    let mut total: Modes = lin
        .iter()
        .zip(&nl)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
        .collect();
    leray_modes(g, &mut total[..d]);
    Ok(IncompressibleRHS {
        d_u: VectorField::from_raw(total[..d].iter().map(|m| ifft_modes(g, m)).collect()),
        d_n: VectorField::from_raw(total[d..].iter().map(|m| ifft_modes(g, m)).collect()),
    })
}

/// Mean-zero pressure from `-Δp = ∇·[(u·∇)u + ν Σᵢ Δnᵢ ∇nᵢ]`.
pub fn recover_pressure(state: &IncompressibleState) -> Result<ScalarField> {
    let op = IncompressibleOperator::new(state.grid(), state.params, true)?;
    let (f, _) = op.forcing(&op.state_modes(state));
    Ok(ifft_modes(&op.grid, &op.pressure_modes(&f)))
}

/// Stateful stepper for the incompressible system.
pub struct IncompressibleSolver {
    op: IncompressibleOperator,
    integrator: Integrator,
    ctl: StepControl,
    steps_taken: usize,
}

impl IncompressibleSolver {
    pub fn new(grid: &Grid, params: ModelParams, ctl: StepControl) -> Result<Self> {
        let op = IncompressibleOperator::new(grid, params, ctl.dealias)?;
        if ctl.scheme == crate::imex::Scheme::ExplicitRk4Reference {
            let kmax = grid.max_wavenumber();
            let limit = 2.7 / (params.mu.max(params.theta) * kmax * kmax);
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

    pub fn reset(&mut self) {
        self.integrator.reset();
        self.steps_taken = 0;
    }

    pub fn step(&mut self, state: &IncompressibleState) -> Result<(IncompressibleState, StepInfo)> {
        let step = self.steps_taken + 1;
        let g = self.op.grid.clone();
        let d = g.dim();
        let modes = self.op.state_modes(state);
        let mut next = self.integrator.advance(&self.op, &modes, state.time)?;
        leray_modes(&g, &mut next[..d]);
        let time = state.time + self.ctl.dt;
        let u = VectorField::from_raw(next[..d].iter().map(|m| ifft_modes(&g, m)).collect());
        let n_raw = VectorField::from_raw(next[d..].iter().map(|m| ifft_modes(&g, m)).collect());
        if !u.is_finite() || !n_raw.is_finite() {
            return Err(NlcError::BlowUp { time, step });
        }
        let (n, unit_drift) = finish_director(n_raw, self.ctl.renormalize_director, time, step)?;
        let mut out = IncompressibleState {
            time,
            u,
            n,
            p: ScalarField::zeros(&g),
            params: state.params,
        };
        let (f, _) = self.op.forcing(&self.op.state_modes(&out));
        out.p = ifft_modes(&g, &self.op.pressure_modes(&f));
        self.steps_taken = step;
        Ok((out, StepInfo { step, unit_drift }))
    }
}

/// One step from a fresh history.
pub fn step_incompressible(
    state: &IncompressibleState,
    ctl: &StepControl,
) -> Result<IncompressibleState> {
    let mut solver = IncompressibleSolver::new(state.grid(), state.params, *ctl)?;
    Ok(solver.step(state)?.0)
}

/// Integrates to `ctl.t_end`; same recording and observer contract as the
/// compressible `run`.
pub fn run_incompressible(
    initial: &IncompressibleState,
    ctl: &StepControl,
    observers: &mut [&mut dyn Observer<IncompressibleState>],
) -> Result<Trajectory<IncompressibleState>> {
    check_divergence_free(&initial.u)?;
    let steps = ctl.steps()?;
    let mut solver = IncompressibleSolver::new(initial.grid(), initial.params, *ctl)?;
    let stride = ctl.record_stride.max(1);
    let mut traj = Trajectory::new();
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

/// Incompressible state from `(u₀, n₀)` with the recovered pressure.
pub fn incompressible_initial(
    u: VectorField,
    n: crate::field::DirectorField,
    params: ModelParams,
) -> Result<IncompressibleState> {
    let grid = u.grid().clone();
    let mut st = IncompressibleState::new(0.0, u, n, ScalarField::zeros(&grid), params)?;
    st.p = recover_pressure(&st)?;
    Ok(st)
}
