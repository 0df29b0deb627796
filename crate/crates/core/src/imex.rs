//! Implicit-explicit time stepping on spectral state vectors.
//!
//! A model splits its right-hand side as `F(U) = L U + N(U)` with `L`
//! linear, diagonal or block-diagonal per Fourier mode, and solvable in
//! closed form. The schemes are
//!
//! ```text
//! imex_euler : (I - dt L) U¹ = U⁰ + dt N(U⁰)
//! imex_bdf2  : (3/2 I - dt L) Uⁿ⁺¹ = 2Uⁿ - ½Uⁿ⁻¹ + dt (2N(Uⁿ) - N(Uⁿ⁻¹))
//! rk4        : classical explicit Runge–Kutta on L U + N(U)
//! ```
//!
//! `imex_bdf2` starts with one `imex_euler` step.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NlcError, Result};

/// One spectrum per solution component.
pub type Modes = Vec<Vec<Complex64>>;

/// Time integration scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImexBdf2,
    ImexEuler,
    ExplicitRk4Reference,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ImexBdf2 => "imex_bdf2",
            Scheme::ImexEuler => "imex_euler",
            Scheme::ExplicitRk4Reference => "explicit_rk4_reference",
        }
    }

    /// Nominal order of accuracy in `dt`.
    pub fn order(&self) -> u32 {
        match self {
            Scheme::ImexBdf2 => 2,
            Scheme::ImexEuler => 1,
            Scheme::ExplicitRk4Reference => 4,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = NlcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imex_bdf2" => Ok(Scheme::ImexBdf2),
            "imex_euler" => Ok(Scheme::ImexEuler),
            "explicit_rk4_reference" | "rk4" => Ok(Scheme::ExplicitRk4Reference),
            other => Err(NlcError::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Time step and integration options shared by every solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Project the director back onto the sphere after every step.
    pub renormalize_director: bool,
    /// Two-thirds truncation of every nonlinear product.
    pub dealias: bool,
    /// Keep every `record_stride`-th state in the returned trajectory.
    pub record_stride: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_end: 0.1,
            scheme: Scheme::ImexBdf2,
            renormalize_director: true,
            dealias: true,
            record_stride: 1,
        }
    }
}

impl StepControl {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme) -> Self {
        Self {
            dt,
            t_end,
            scheme,
            ..Default::default()
        }
    }

    /// Number of steps to reach `t_end`; `t_end` must be a multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(NlcError::InvalidParams(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(NlcError::InvalidParams(format!(
                "t_end = {} must be non-negative",
                self.t_end
            )));
        }
        if self.t_end == 0.0 {
            return Ok(0);
        }
        if self.dt > self.t_end {
            return Err(NlcError::InvalidParams(format!(
                "dt = {} exceeds t_end = {}",
                self.dt, self.t_end
            )));
        }
        let n = (self.t_end / self.dt).round();
        if ((n * self.dt - self.t_end) / self.t_end).abs() > 1e-9 {
            return Err(NlcError::InvalidParams(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// A right-hand side split into a stiff linear part and the rest.
pub(crate) trait SplitOperator {
    /// `L U`.
    fn linear(&self, u: &Modes) -> Modes;
    /// `(a I - dt L)⁻¹ rhs`.
    fn solve(&self, a: f64, dt: f64, rhs: &Modes) -> Modes;
    /// `N(U)` at time `t`.
    fn explicit(&self, u: &Modes, t: f64) -> Result<Modes>;
}

fn lincomb(terms: &[(f64, &Modes)]) -> Modes {
    let (c0, first) = terms[0];
    let mut out: Modes = first
        .iter()
        .map(|comp| comp.iter().map(|z| z * c0).collect())
        .collect();
    for &(c, m) in &terms[1..] {
        for (o, comp) in out.iter_mut().zip(m) {
            for (x, z) in o.iter_mut().zip(comp) {
                *x += z * c;
            }
        }
    }
    out
}

/// Stateful integrator; holds the multistep history.
pub(crate) struct Integrator {
    scheme: Scheme,
    dt: f64,
    history: Option<(Modes, Modes)>,
}

impl Integrator {
    pub fn new(scheme: Scheme, dt: f64) -> Self {
        Self {
            scheme,
            dt,
            history: None,
        }
    }

    pub fn reset(&mut self) {
        self.history = None;
    }

    /// Advances `u` from `t` to `t + dt`.
    pub fn advance(&mut self, op: &impl SplitOperator, u: &Modes, t: f64) -> Result<Modes> {
        let dt = self.dt;
        match self.scheme {
            Scheme::ExplicitRk4Reference => rk4(op, u, t, dt),
            Scheme::ImexEuler => {
                let n = op.explicit(u, t)?;
                Ok(op.solve(1.0, dt, &lincomb(&[(1.0, u), (dt, &n)])))
            }
            Scheme::ImexBdf2 => {
                let n = op.explicit(u, t)?;
                let next = match &self.history {
                    None => op.solve(1.0, dt, &lincomb(&[(1.0, u), (dt, &n)])),
                    Some((u_prev, n_prev)) => {
                        let rhs = lincomb(&[
                            (2.0, u),
                            (-0.5, u_prev),
                            (2.0 * dt, &n),
                            (-dt, n_prev),
                        ]);
                        op.solve(1.5, dt, &rhs)
                    }
                };
                self.history = Some((u.clone(), n));
                Ok(next)
            }
        }
    }
}

fn full_rhs(op: &impl SplitOperator, u: &Modes, t: f64) -> Result<Modes> {
    let l = op.linear(u);
    let n = op.explicit(u, t)?;
    Ok(lincomb(&[(1.0, &l), (1.0, &n)]))
}

fn rk4(op: &impl SplitOperator, u: &Modes, t: f64, dt: f64) -> Result<Modes> {
    let k1 = full_rhs(op, u, t)?;
    let k2 = full_rhs(op, &lincomb(&[(1.0, u), (0.5 * dt, &k1)]), t + 0.5 * dt)?;
    let k3 = full_rhs(op, &lincomb(&[(1.0, u), (0.5 * dt, &k2)]), t + 0.5 * dt)?;
    let k4 = full_rhs(op, &lincomb(&[(1.0, u), (dt, &k3)]), t + dt)?;
    Ok(lincomb(&[
        (1.0, u),
        (dt / 6.0, &k1),
        (dt / 3.0, &k2),
        (dt / 3.0, &k3),
        (dt / 6.0, &k4),
    ]))
}
