//! Picard iteration `U = Λ(V)` for the compressible system.
//!
//! For a frozen `V = (ξ, v, m)` the map `Λ` solves
//!
//! ```text
//! ρ_t + (v·∇)ρ + ξ∇·u = 0
//! u_t + (v·∇)u + λ²(P'(ξ)/ξ)∇ρ = (μ/ξ)Δu + ((κ+μ)/ξ)∇(∇·u) - (ν/ξ) Σᵢ Δnᵢ ∇nᵢ
//! n_t + (v·∇)n = θ(Δn + |∇m|² n)
//! ```
//!
//! with the same IMEX splitting as the nonlinear solver. A fixed point of
//! `Λ` is therefore a solution of the nonlinear scheme up to aliasing.

use num_complex::Complex64;

use crate::compressible::{finish_director, to_modes, wrap_step, CompressibleOperator, DirectorDerivs};
use crate::error::{NlcError, Result};
use crate::field::{DirectorField, ScalarField, VectorField};
use crate::grid::Grid;
use crate::imex::{Integrator, Modes, Scheme, SplitOperator, StepControl};
use crate::observe::Trajectory;
use crate::spectral::{d_modes, fft_modes, ifft_modes, lap_modes, sobolev_norm_sq};
use crate::state::{check_regime, CompressibleState};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default iteration cap.
pub const K_MAX: usize = 20;
/// Iteration stops once the metric falls below this.
pub const PICARD_TOL: f64 = 1e-10;

/// Frozen coefficients `V = (ξ, v, m)`.
#[derive(Clone, Debug)]
pub struct LinearizationInput {
    pub xi: ScalarField,
    pub v: VectorField,
    pub m: DirectorField,
}

impl LinearizationInput {
    pub fn new(xi: ScalarField, v: VectorField, m: DirectorField) -> Result<Self> {
        let g = xi.grid().clone();
        v.check_grid(&g)?;
        m.as_vector().check_grid(&g)?;
        if v.len() != g.dim() {
            return Err(NlcError::Shape(format!(
                "transport velocity has {} components on a {}-dimensional grid",
                v.len(),
                g.dim()
            )));
        }
        regime_precondition(&xi)?;
        Ok(Self { xi, v, m })
    }

    pub fn from_state(state: &CompressibleState) -> Self {
        Self {
            xi: state.rho.clone(),
            v: state.u.clone(),
            m: state.n.clone(),
        }
    }

    fn lerp(&self, other: &Self, w: f64) -> Self {
        let mix = |a: &ScalarField, b: &ScalarField| a.zip_map(b, |x, y| (1.0 - w) * x + w * y);
        Self {
            xi: mix(&self.xi, &other.xi),
            v: self.v.zip_components(&other.v, mix),
            m: DirectorField::from_raw(self.m.as_vector().zip_components(other.m.as_vector(), mix)),
        }
    }
}

fn regime_precondition(xi: &ScalarField) -> Result<()> {
    check_regime(xi).map_err(|e| match e {
        NlcError::Regime { cell, value } => NlcError::Precondition(format!(
            "frozen density out of regime at cell {cell}: {value}"
        )),
        other => other,
    })
}

/// Time dependence of the frozen coefficients.
#[derive(Clone, Debug)]
pub enum Linearization {
    /// Constant in time.
    Frozen(LinearizationInput),
    /// Samples at `t0 + k·dt`, linearly interpolated; clamped outside.
    Sampled {
        t0: f64,
        dt: f64,
        samples: Vec<LinearizationInput>,
    },
}

impl Linearization {
    pub fn from_trajectory(t0: f64, dt: f64, states: &[CompressibleState]) -> Self {
        Linearization::Sampled {
            t0,
            dt,
            samples: states.iter().map(LinearizationInput::from_state).collect(),
        }
    }

    pub fn at(&self, t: f64) -> LinearizationInput {
        match self {
            Linearization::Frozen(v) => v.clone(),
            Linearization::Sampled { t0, dt, samples } => {
                let last = samples.len() - 1;
                let x = ((t - t0) / dt).max(0.0);
                let k = x.floor() as usize;
                if k >= last {
                    return samples[last].clone();
                }
                let w = x - k as f64;
                // exact step times land here
                if w < 1e-9 {
                    samples[k].clone()
                } else if w > 1.0 - 1e-9 {
                    samples[k + 1].clone()
                } else {
                    samples[k].lerp(&samples[k + 1], w)
                }
            }
        }
    }

    fn grid(&self) -> &Grid {
        match self {
            Linearization::Frozen(v) => v.xi.grid(),
            Linearization::Sampled { samples, .. } => samples[0].xi.grid(),
        }
    }
}

struct LinearizedOperator<'a> {
    base: CompressibleOperator,
    v: &'a Linearization,
}

impl SplitOperator for LinearizedOperator<'_> {
    fn linear(&self, u: &Modes) -> Modes {
        self.base.linear(u)
    }

    fn solve(&self, a: f64, dt: f64, rhs: &Modes) -> Modes {
        self.base.solve(a, dt, rhs)
    }

    fn explicit(&self, modes: &Modes, t: f64) -> Result<Modes> {
        let g = &self.base.grid;
        let d = g.dim();
        let p = self.base.params;
        let law = p.pressure_law();
        let lam2 = p.lambda * p.lambda;
        let p1 = law.p_prime(1.0);
        let dealias = self.base.dealias;

        let vin = self.v.at(t);
        regime_precondition(&vin.xi)?;
        let xi = vin.xi.values();
        let v = vin.v.components();
        let m_modes: Vec<_> = vin.m.components().iter().map(fft_modes).collect();
        let md = DirectorDerivs::from_modes(g, &m_modes);

        let (_, _, n) = self.base.real_fields(modes);
        let rd = DirectorDerivs::from_modes(g, &modes[..1]);
        let ud = DirectorDerivs::from_modes(g, &modes[1..1 + d]);
        let nd = DirectorDerivs::from_modes(g, &modes[1 + d..]);
        let mut div_hat = vec![Complex64::default(); g.len()];
        for j in 0..d {
            for ((o, z), k) in div_hat.iter_mut().zip(&modes[1 + j]).zip(g.k_odd()) {
                *o += I * k[j] * z;
            }
        }
        let div_u = ifft_modes(g, &div_hat);
        let grad_div: Vec<ScalarField> = (0..d)
            .map(|j| ifft_modes(g, &d_modes(g, &div_hat, j)))
            .collect();
        let lap_u: Vec<ScalarField> = (0..d)
            .map(|j| ifft_modes(g, &lap_modes(g, &modes[1 + j])))
            .collect();

        let mut out = Vec::with_capacity(modes.len());
        let vals = (0..g.len())
            .map(|c| -rd.advect(v, c, 0) - (xi[c] - 1.0) * div_u.values()[c])
            .collect();
        out.push(to_modes(g, vals, dealias));
        for j in 0..d {
            let vals = (0..g.len())
                .map(|c| {
                    let x = xi[c];
                    let press = lam2 * (law.p_prime_over_rho(x) - p1) * rd.grad[0][j].values()[c];
                    let visc = (1.0 / x - 1.0)
                        * (p.mu * lap_u[j].values()[c] + (p.kappa + p.mu) * grad_div[j].values()[c]);
                    -ud.advect(v, c, j) - press + visc - p.nu / x * nd.ericksen(c, j)
                })
                .collect();
            out.push(to_modes(g, vals, dealias));
        }
        for i in 0..3 {
            let vals = (0..g.len())
                .map(|c| -nd.advect(v, c, i) + p.theta * md.grad_sq(c) * n.component(i).values()[c])
                .collect();
            out.push(to_modes(g, vals, dealias));
        }
        Ok(out)
    }
}

/// Integrates `U = Λ(V)` from `u_init` to `ctl.t_end`, recording every step.
pub fn linearized_step(
    v: &Linearization,
    u_init: &CompressibleState,
    ctl: &StepControl,
) -> Result<Trajectory<CompressibleState>> {
    let grid = u_init.grid().clone();
    if !v.grid().same_as(&grid) {
        return Err(NlcError::InvalidGrid("linearization and state grids differ".into()));
    }
    if ctl.scheme == Scheme::ExplicitRk4Reference {
        let limit = crate::compressible::rk4_stable_dt(&grid, &u_init.params);
        if ctl.dt > limit {
            return Err(NlcError::StepTooLarge {
                dt: ctl.dt,
                limit,
                scheme: ctl.scheme.name(),
            });
        }
    }
    let steps = ctl.steps()?;
    let op = LinearizedOperator {
        base: CompressibleOperator::new(&grid, u_init.params, ctl.dealias)?,
        v,
    };
    let mut integrator = Integrator::new(ctl.scheme, ctl.dt);
    let mut traj = Trajectory::new();
    traj.push(0, u_init.clone());
    let mut state = u_init.clone();
    for s in 1..=steps {
        let modes = op.base.state_modes(&state);
        let next = integrator
            .advance(&op, &modes, state.time)
            .map_err(|e| wrap_step(e, s))?;
        let time = u_init.time + s as f64 * ctl.dt;
        let (rho, u, n_raw) = op.base.real_fields(&next);
        if !rho.is_finite() || !u.is_finite() || !n_raw.is_finite() {
            return Err(NlcError::BlowUp { time, step: s });
        }
        let (n, _) = finish_director(n_raw, ctl.renormalize_director, time, s)?;
        state = CompressibleState {
            time,
            rho,
            u,
            n,
            params: u_init.params,
        };
        traj.push(s, state.clone());
    }
    Ok(traj)
}

/// Outcome of a Picard iteration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContractionReport {
    pub iterates: usize,
    /// `sup_t (λ²‖ρᵢ-ρᵢ₋₁‖² + ‖uᵢ-uᵢ₋₁‖² + ‖nᵢ-nᵢ₋₁‖²_{H¹})` per iteration.
    pub diff_norms: Vec<f64>,
    /// `diff_norms[i] / diff_norms[i-1]`.
    pub ratios: Vec<f64>,
    /// Largest ratio; may be `>= 1`.
    pub tau_estimate: f64,
    pub converged: bool,
    /// The metric grew three iterations in a row.
    pub diverged: bool,
}

/// Iteration metric between two states at equal times.
pub fn picard_metric(a: &CompressibleState, b: &CompressibleState) -> f64 {
    let lam = a.params.lambda;
    lam * lam * sobolev_norm_sq(&a.rho.sub(&b.rho), 0)
        + sobolev_norm_sq(&a.u.sub(&b.u), 0)
        + sobolev_norm_sq(&a.n.as_vector().sub(b.n.as_vector()), 1)
}

fn trajectory_metric(a: &[CompressibleState], b: &[CompressibleState]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| picard_metric(x, y))
        .fold(0.0, f64::max)
}

/// Iterates `V_{i+1} = Λ(V_i)` on `[t0, t0 + T0]` from the constant-in-time
/// extension of `u0`. `ctl.t_end` is replaced by `t0`.
pub fn picard_iterate(
    u0: &CompressibleState,
    t0: f64,
    k_max: usize,
    ctl: &StepControl,
) -> Result<(Trajectory<CompressibleState>, ContractionReport)> {
    let ctl = StepControl { t_end: t0, ..*ctl };
    let steps = ctl.steps()?;
    let mut v: Vec<CompressibleState> = (0..=steps)
        .map(|s| {
            let mut st = u0.clone();
            st.time = u0.time + s as f64 * ctl.dt;
            st
        })
        .collect();
    let mut report = ContractionReport::default();
    let mut growth = 0;
    let mut traj = Trajectory::new();
    for _ in 0..k_max.max(1) {
        let lin = Linearization::from_trajectory(u0.time, ctl.dt, &v);
        traj = linearized_step(&lin, u0, &ctl)?;
        let diff = trajectory_metric(&traj.states, &v);
        report.iterates += 1;
        if let Some(&prev) = report.diff_norms.last() {
            let r = if prev > 0.0 { diff / prev } else { 0.0 };
            report.ratios.push(r);
            growth = if diff > prev { growth + 1 } else { 0 };
        }
        report.diff_norms.push(diff);
        v = traj.states.clone();
        if diff < PICARD_TOL {
            report.converged = true;
            break;
        }
        if growth >= 3 {
            report.diverged = true;
            break;
        }
    }
    report.tau_estimate = report.ratios.iter().cloned().fold(0.0, f64::max);
    Ok((traj, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{base_profile, well_prepared_initial_data, ModelParams, Preparation};

    #[test]
    fn equilibrium_is_constant_and_converges_at_once() {
        let g = Grid::uniform(2, 16).unwrap();
        let eq = CompressibleState::equilibrium(&g, ModelParams::default(), [0.0, 0.0, 1.0]).unwrap();
        let ctl = StepControl::new(1e-3, 0.01, Scheme::ImexBdf2);
        let (traj, rep) = picard_iterate(&eq, 0.01, K_MAX, &ctl).unwrap();
        assert_eq!(rep.iterates, 1);
        assert!(rep.converged);
        assert_eq!(rep.diff_norms, vec![0.0]);
        assert!(traj.last().unwrap().u.max_abs() == 0.0);
    }

    #[test]
    fn out_of_regime_density_is_a_precondition_error() {
        let g = Grid::uniform(2, 8).unwrap();
        let n = DirectorField::constant(&g, [1.0, 0.0, 0.0]).unwrap();
        let r = LinearizationInput::new(ScalarField::constant(&g, 1.7), VectorField::zeros(&g, 2), n);
        assert!(matches!(r, Err(NlcError::Precondition(_))));
    }

    /// Per-mode matrix exponential of the acoustic-viscous pair
    /// `A' = -B, B' = c²A - D B`.
    fn acoustic_mode(c2: f64, d: f64, a0: f64, b0: f64, t: f64) -> (f64, f64) {
        let sigma = -d / 2.0;
        let beta = Complex64::new(sigma * sigma - c2, 0.0).sqrt();
        let e = (sigma * t).exp();
        let ch = (beta * t).cosh();
        let sh = if beta.norm() == 0.0 {
            Complex64::new(t, 0.0)
        } else {
            (beta * t).sinh() / beta
        };
        // M - σI = [[-σ, -1], [c², -D-σ]]
        let a = e * (ch * a0 + sh * (-sigma * a0 - b0));
        let b = e * (ch * b0 + sh * (c2 * a0 + (-d - sigma) * b0));
        (a.re, b.re)
    }

    #[test]
    fn frozen_rest_state_gives_linear_acoustics() {
        let g = Grid::uniform(2, 16).unwrap();
        let params = ModelParams {
            lambda: 3.0,
            kappa: 0.5,
            ..Default::default()
        };
        let (a0, b0, c0) = (1e-2, 2e-2, 3e-2);
        let st = CompressibleState::new(
            0.0,
            ScalarField::from_fn(&g, |x| 1.0 + a0 * x[0].cos()),
            VectorField::from_fn(&g, 2, |x, i| if i == 0 { b0 * x[0].sin() } else { c0 * x[0].sin() }),
            DirectorField::constant(&g, [0.0, 1.0, 0.0]).unwrap(),
            params,
        )
        .unwrap();
        let v = Linearization::Frozen(LinearizationInput::new(
            ScalarField::constant(&g, 1.0),
            VectorField::zeros(&g, 2),
            DirectorField::constant(&g, [0.0, 1.0, 0.0]).unwrap(),
        )
        .unwrap());
        let t = 0.2;
        let ctl = StepControl::new(1e-3, t, Scheme::ExplicitRk4Reference);
        let traj = linearized_step(&v, &st, &ctl).unwrap();
        let end = traj.last().unwrap();
        let c2 = params.lambda.powi(2) * 2.0;
        let (a, b) = acoustic_mode(c2, 2.0 * params.mu + params.kappa, a0, b0, t);
        let c = c0 * (-params.mu * t).exp();
        let rho = ScalarField::from_fn(&g, |x| 1.0 + a * x[0].cos());
        let u1 = ScalarField::from_fn(&g, |x| b * x[0].sin());
        let u2 = ScalarField::from_fn(&g, |x| c * x[0].sin());
        assert!(end.rho.sub(&rho).max_abs() < 1e-8);
        assert!(end.u.component(0).sub(&u1).max_abs() < 1e-8);
        assert!(end.u.component(1).sub(&u2).max_abs() < 1e-8);
    }

    #[test]
    fn nonlinear_trajectory_is_nearly_fixed() {
        let g = Grid::uniform(2, 16).unwrap();
        let params = ModelParams::default();
        let (u0, n0) = base_profile(&g, "taylor_green").unwrap();
        let st = well_prepared_initial_data(&g, params, Preparation::default(), &u0, &n0).unwrap();
        let ctl = StepControl {
            record_stride: 1,
            ..StepControl::new(1e-3, 0.02, Scheme::ImexBdf2)
        };
        let nl = crate::compressible::run(&st, &ctl, &mut []).unwrap();
        let lin = Linearization::from_trajectory(0.0, ctl.dt, &nl.states);
        let img = linearized_step(&lin, &st, &ctl).unwrap();
        let gap = trajectory_metric(&img.states, &nl.states);
        assert!(gap < 1e-12, "gap {gap}");
    }

    #[test]
    fn small_data_contracts() {
        let g = Grid::uniform(2, 16).unwrap();
        let params = ModelParams::default();
        let (u0, n0) = base_profile(&g, "taylor_green").unwrap();
        let st = well_prepared_initial_data(&g, params, Preparation::default(), &u0, &n0).unwrap();
        let ctl = StepControl::new(1e-3, 0.01, Scheme::ImexBdf2);
        let (_, rep) = picard_iterate(&st, 0.01, K_MAX, &ctl).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(rep.tau_estimate < 1.0);
        assert!(rep.diff_norms.iter().all(|d| *d >= 0.0));
    }
}
