//! Energy functionals, modulated energy, energy-law observers and rate
//! fitting.

use std::fmt::Write as _;

use crate::error::{NlcError, Result};
use crate::field::{DirectorField, ScalarField, VectorField};
use crate::observe::{Observer, StepInfo};
use crate::spectral::{self, derivative, integrate, multi_indices, sobolev_norm_sq};
use crate::state::{CompressibleState, IncompressibleState, PressureLaw};

/// High-order energies of a compressible state.
///
/// ```text
/// E_s = ½ Σ_{|α|≤s} ∫ λ²|∂^α(ρ-1)|² + |∂^α u|² + |∂^α n|²
/// Ẽ_s = ½ Σ_{|α|≤s} ∫ λ²(P'(ρ)/ρ)|∂^α(ρ-1)|² + ρ|∂^α u|² + |∂^α n|²
/// F_s = ½ Σ_{|α|≤s} ∫ λ²|∂^α(ρ-1)|² + |∂^α u|²  +  ½ Σ_{|β|≤s-1} ∫ |∇∂^β n|²
/// ```
///
/// `F̃_s` carries the same weights as `Ẽ_s`. Because `E_s` contains
/// `|n|²`, a unit director contributes `½|𝕋|` at every state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyFunctionals {
    pub e_s: f64,
    pub e_s_tilde: f64,
    pub f_s: f64,
    pub f_s_tilde: f64,
    pub s: usize,
}

pub fn energy_functionals(state: &CompressibleState, s: usize) -> EnergyFunctionals {
    let lam2 = state.params.lambda.powi(2);
    let law = state.params.pressure_law();
    let rho = &state.rho;
    let rb = rho.map(|r| r - 1.0);
    let w_rho = rho.map(|r| law.p_prime_over_rho(r));

    let mut e_rho = 0.0;
    let mut e_rho_t = 0.0;
    let mut e_u = 0.0;
    let mut e_u_t = 0.0;
    let mut e_n = 0.0;
    for al in multi_indices(state.grid().dim(), s) {
        let dr = derivative(&rb, &al);
        e_rho += integrate(&dr.mul(&dr));
        e_rho_t += integrate(&dr.mul(&dr).mul(&w_rho));
        for c in state.u.components() {
            let du = derivative(c, &al);
            let sq = du.mul(&du);
            e_u += integrate(&sq);
            e_u_t += integrate(&sq.mul(rho));
        }
        for c in state.n.components() {
            let dn = derivative(c, &al);
            e_n += integrate(&dn.mul(&dn));
        }
    }
    let f_n = if s == 0 {
        0.0
    } else {
        let grads: Vec<VectorField> = state
            .n
            .components()
            .iter()
            .map(|c| spectral::gradient(c).expect("director grid"))
            .collect();
        grads.iter().map(|g| sobolev_norm_sq(g, s - 1)).sum()
    };
    EnergyFunctionals {
        e_s: 0.5 * (lam2 * e_rho + e_u + e_n),
        e_s_tilde: 0.5 * (lam2 * e_rho_t + e_u_t + e_n),
        f_s: 0.5 * (lam2 * e_rho + e_u + f_n),
        f_s_tilde: 0.5 * (lam2 * e_rho_t + e_u_t + f_n),
        s,
    }
}

/// Parts of the relative energy between a compressible solution and the
/// incompressible limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulatedEnergy {
    /// `½∫|√ρ u^λ - u|²`
    pub velocity_part: f64,
    /// `(ν/2)∫|n^λ - n|²`
    pub director_l2: f64,
    /// `(ν/2)∫|∇n^λ - ∇n|²`
    pub director_grad: f64,
    /// `λ²∫[Q(ρ) - P(1)(ρ - 1)]`
    pub pi_lambda: f64,
}

impl ModulatedEnergy {
    pub fn total(&self) -> f64 {
        self.velocity_part + self.director_l2 + self.director_grad + self.pi_lambda
    }

    pub fn min_part(&self) -> f64 {
        self.velocity_part
            .min(self.director_l2)
            .min(self.director_grad)
            .min(self.pi_lambda)
    }
}

/// `λ²∫[Q(ρ) - P(1)(ρ-1)]`.
pub fn pi_lambda(rho: &ScalarField, law: PressureLaw, lambda: f64) -> f64 {
    let p1 = law.p(1.0);
    lambda * lambda * integrate(&rho.map(|r| law.q(r) - p1 * (r - 1.0)))
}

pub fn modulated_energy(
    comp: &CompressibleState,
    incomp: &IncompressibleState,
) -> Result<ModulatedEnergy> {
    let tol = 1e-9 * comp.time.abs().max(1.0);
    if (comp.time - incomp.time).abs() > tol {
        return Err(NlcError::Precondition(format!(
            "state times differ: {} vs {}",
            comp.time, incomp.time
        )));
    }
    if !comp.grid().same_as(incomp.grid()) {
        return Err(NlcError::InvalidGrid("state grids differ".into()));
    }
    let nu = comp.params.nu;
    let sq = comp.rho.map(f64::sqrt);
    let dv = VectorField::from_raw(
        comp.u
            .components()
            .iter()
            .zip(incomp.u.components())
            .map(|(a, b)| sq.mul(a).sub(b))
            .collect(),
    );
    let dn = comp.n.as_vector().sub(incomp.n.as_vector());
    let l2 = sobolev_norm_sq(&dn, 0);
    Ok(ModulatedEnergy {
        velocity_part: 0.5 * sobolev_norm_sq(&dv, 0),
        director_l2: 0.5 * nu * l2,
        director_grad: 0.5 * nu * (sobolev_norm_sq(&dn, 1) - l2),
        pi_lambda: pi_lambda(&comp.rho, comp.params.pressure_law(), comp.params.lambda),
    })
}

/// `∫|∇n|²` summed over components.
fn grad_sq_integral(n: &DirectorField) -> f64 {
    let v = n.as_vector();
    sobolev_norm_sq(v, 1) - sobolev_norm_sq(v, 0)
}

/// `‖Δn + |∇n|²n‖²`.
fn director_dissipation(n: &DirectorField) -> f64 {
    let g = n.grid();
    let lap = spectral::laplacian_director(n).expect("director grid");
    let mut gsq = ScalarField::zeros(g);
    for c in n.components() {
        let gr = spectral::gradient(c).expect("director grid");
        gsq = gsq.add(&gr.dot(&gr));
    }
    let h = VectorField::from_raw(
        (0..3)
            .map(|i| lap.component(i).add(&gsq.mul(n.component(i))))
            .collect(),
    );
    sobolev_norm_sq(&h, 0)
}

/// `μ‖∇u‖² + (κ+μ)‖∇·u‖² + νθ‖Δn + |∇n|²n‖²`.
pub fn compressible_dissipation(state: &CompressibleState) -> f64 {
    let p = state.params;
    let u = &state.u;
    let grad_u = sobolev_norm_sq(u, 1) - sobolev_norm_sq(u, 0);
    let div = spectral::divergence(u).expect("velocity grid");
    p.mu * grad_u + (p.kappa + p.mu) * integrate(&div.mul(&div))
        + p.nu * p.theta * director_dissipation(&state.n)
}

/// `μ‖∇u‖² + νθ‖Δn + |∇n|²n‖²`.
pub fn incompressible_dissipation(state: &IncompressibleState) -> f64 {
    let p = state.params;
    let u = &state.u;
    p.mu * (sobolev_norm_sq(u, 1) - sobolev_norm_sq(u, 0))
        + p.nu * p.theta * director_dissipation(&state.n)
}

/// One row of the compressible energy-law record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressibleEnergyRow {
    pub t: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub acoustic: f64,
    pub dissipation_cum: f64,
    pub energy_residual: f64,
    pub unit_drift: f64,
    pub max_rho_dev: f64,
}

/// `(mass, ½∫ρ|u|², (ν/2)∫|∇n|², λ²∫Q(ρ))`.
pub fn compressible_energy_parts(state: &CompressibleState) -> (f64, f64, f64, f64) {
    let p = state.params;
    let law = p.pressure_law();
    let rho = &state.rho;
    let u2 = state
        .u
        .components()
        .iter()
        .fold(ScalarField::zeros(state.grid()), |a, c| a.add(&c.mul(c)));
    (
        integrate(rho),
        0.5 * integrate(&rho.mul(&u2)),
        0.5 * p.nu * grad_sq_integral(&state.n),
        p.lambda * p.lambda * integrate(&rho.map(|r| law.q(r))),
    )
}

/// Tracks `𝓔(t) + ∫₀ᵗ D - 𝓔(0)` with trapezoidal time integration of the
/// dissipation. Must see every step for the quadrature to be meaningful;
/// rows are kept every `row_stride` steps and at the last observed step.
#[derive(Clone, Debug)]
pub struct CompressibleEnergyObserver {
    pub rows: Vec<CompressibleEnergyRow>,
    row_stride: usize,
    e0: f64,
    last: Option<(f64, f64)>,
    cum: f64,
    pending: Option<CompressibleEnergyRow>,
}

impl CompressibleEnergyObserver {
    pub fn new(row_stride: usize) -> Self {
        Self {
            rows: Vec::new(),
            row_stride: row_stride.max(1),
            e0: 0.0,
            last: None,
            cum: 0.0,
            pending: None,
        }
    }

    /// Rows including the most recent observation.
    pub fn finish(mut self) -> Vec<CompressibleEnergyRow> {
        if let Some(r) = self.pending.take() {
            self.rows.push(r);
        }
        self.rows
    }

    pub fn latest(&self) -> Option<&CompressibleEnergyRow> {
        self.pending.as_ref().or(self.rows.last())
    }

    pub fn to_csv(rows: &[CompressibleEnergyRow]) -> String {
        let mut s = String::from(
            "t,mass,kinetic,elastic,acoustic,dissipation_cum,energy_residual,unit_drift,max_rho_dev\n",
        );
        for r in rows {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t,
                r.mass,
                r.kinetic,
                r.elastic,
                r.acoustic,
                r.dissipation_cum,
                r.energy_residual,
                r.unit_drift,
                r.max_rho_dev
            );
        }
        s
    }
}

impl Observer<CompressibleState> for CompressibleEnergyObserver {
    fn observe(&mut self, state: &CompressibleState, info: &StepInfo) -> Result<()> {
        let (mass, kinetic, elastic, acoustic) = compressible_energy_parts(state);
        let e = kinetic + elastic + acoustic;
        let d = compressible_dissipation(state);
        match self.last {
            None => self.e0 = e,
            Some((t, d_prev)) => self.cum += 0.5 * (state.time - t) * (d + d_prev),
        }
        self.last = Some((state.time, d));
        let row = CompressibleEnergyRow {
            t: state.time,
            mass,
            kinetic,
            elastic,
            acoustic,
            dissipation_cum: self.cum,
            energy_residual: e + self.cum - self.e0,
            unit_drift: info.unit_drift,
            max_rho_dev: state.max_rho_deviation(),
        };
        self.pending = None;
        if info.step.is_multiple_of(self.row_stride) {
            self.rows.push(row);
        } else {
            self.pending = Some(row);
        }
        Ok(())
    }
}

/// One row of the incompressible energy-law record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncompressibleEnergyRow {
    pub t: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub dissipation_cum: f64,
    pub energy_residual: f64,
    pub div_u_max: f64,
    pub unit_drift: f64,
}

/// Incompressible counterpart of [`CompressibleEnergyObserver`].
#[derive(Clone, Debug)]
pub struct IncompressibleEnergyObserver {
    pub rows: Vec<IncompressibleEnergyRow>,
    row_stride: usize,
    e0: f64,
    last: Option<(f64, f64)>,
    cum: f64,
    pending: Option<IncompressibleEnergyRow>,
    /// Largest `‖∇·u‖_∞` seen at any observed step.
    pub max_div: f64,
}

impl IncompressibleEnergyObserver {
    pub fn new(row_stride: usize) -> Self {
        Self {
            rows: Vec::new(),
            row_stride: row_stride.max(1),
            e0: 0.0,
            last: None,
            cum: 0.0,
            pending: None,
            max_div: 0.0,
        }
    }

    pub fn finish(mut self) -> Vec<IncompressibleEnergyRow> {
        if let Some(r) = self.pending.take() {
            self.rows.push(r);
        }
        self.rows
    }

    pub fn latest(&self) -> Option<&IncompressibleEnergyRow> {
        self.pending.as_ref().or(self.rows.last())
    }

    pub fn to_csv(rows: &[IncompressibleEnergyRow]) -> String {
        let mut s =
            String::from("t,kinetic,elastic,dissipation_cum,energy_residual,div_u_max,unit_drift\n");
        for r in rows {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t, r.kinetic, r.elastic, r.dissipation_cum, r.energy_residual, r.div_u_max, r.unit_drift
            );
        }
        s
    }
}

impl Observer<IncompressibleState> for IncompressibleEnergyObserver {
    fn observe(&mut self, state: &IncompressibleState, info: &StepInfo) -> Result<()> {
        let kinetic = 0.5 * sobolev_norm_sq(&state.u, 0);
        let elastic = 0.5 * state.params.nu * grad_sq_integral(&state.n);
        let e = kinetic + elastic;
        let d = incompressible_dissipation(state);
        match self.last {
            None => self.e0 = e,
            Some((t, d_prev)) => self.cum += 0.5 * (state.time - t) * (d + d_prev),
        }
        self.last = Some((state.time, d));
        let div = spectral::divergence(&state.u)?.max_abs();
        self.max_div = self.max_div.max(div);
        let row = IncompressibleEnergyRow {
            t: state.time,
            kinetic,
            elastic,
            dissipation_cum: self.cum,
            energy_residual: e + self.cum - self.e0,
            div_u_max: div,
            unit_drift: info.unit_drift,
        };
        self.pending = None;
        if info.step.is_multiple_of(self.row_stride) {
            self.rows.push(row);
        } else {
            self.pending = Some(row);
        }
        Ok(())
    }
}

/// Least-squares slope of `log error` against `log λ` and its standard
/// error.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(NlcError::InvalidParams(format!(
            "rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for (i, &(l, e)) in points.iter().enumerate() {
        if !(l > 0.0 && e > 0.0 && l.is_finite() && e.is_finite()) {
            return Err(NlcError::Domain {
                what: "rate fit point",
                cell: i,
                value: if l > 0.0 { e } else { l },
            });
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(NlcError::InvalidParams("rate fit needs distinct λ values".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let icept = ym - slope * xm;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - icept - slope * x).powi(2))
        .sum();
    Ok((slope, (ssr / (n - 2.0) / sxx).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::state::{taylor_green, twisted_director, ModelParams};
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::uniform(2, 32).unwrap()
    }

    #[test]
    fn equilibrium_functionals() {
        let g = grid();
        let st = CompressibleState::equilibrium(&g, ModelParams::default(), [0.0, 0.0, 1.0]).unwrap();
        for s in 0..4 {
            let e = energy_functionals(&st, s);
            // only the |n|² term survives
            assert!((e.e_s - 0.5 * g.volume()).abs() < 1e-10);
            assert!((e.e_s_tilde - 0.5 * g.volume()).abs() < 1e-10);
            assert!(e.f_s.abs() < 1e-12 && e.f_s_tilde.abs() < 1e-12);
        }
    }

    #[test]
    fn sine_velocity_energy() {
        let g = grid();
        let u = VectorField::from_fn(&g, 2, |x, i| if i == 0 { x[0].sin() } else { 0.0 });
        let st = CompressibleState::new(
            0.0,
            ScalarField::constant(&g, 1.0),
            u,
            DirectorField::constant(&g, [1.0, 0.0, 0.0]).unwrap(),
            ModelParams::default(),
        )
        .unwrap();
        let e = energy_functionals(&st, 0);
        // ½∫sin² = π², ½∫|n|² = 2π²
        assert!((e.e_s - 3.0 * PI * PI).abs() < 1e-10);
        assert!((e.f_s - PI * PI).abs() < 1e-10);
    }

    #[test]
    fn functionals_monotone_in_s_and_tilde_equivalent() {
        let g = grid();
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.05 * (x[0] + 2.0 * x[1]).sin());
        let st = CompressibleState::new(0.0, rho, taylor_green(&g, 0.7), twisted_director(&g, 0.4), ModelParams::default())
            .unwrap();
        let mut prev = 0.0;
        for s in 0..4 {
            let e = energy_functionals(&st, s);
            assert!(e.e_s >= prev);
            prev = e.e_s;
            let r = e.e_s_tilde / e.e_s;
            assert!((0.5..=2.0).contains(&r));
            assert!(e.f_s <= e.e_s && e.f_s_tilde >= 0.0);
        }
    }

    /// Finite-difference oracle for `Σ_{|α|≤1}‖∂^α f‖²` with central
    /// differences.
    fn fd_h1_sq(f: &ScalarField) -> f64 {
        let g = f.grid();
        let m = g.sizes()[0];
        let h = g.spacing(0);
        let v = f.values();
        let at = |i: usize, j: usize| v[(i % m) * m + (j % m)];
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let dx = (at(i + 1, j) - at(i + m - 1, j)) / (2.0 * h);
                let dy = (at(i, j + 1) - at(i, j + m - 1)) / (2.0 * h);
                acc += at(i, j).powi(2) + dx * dx + dy * dy;
            }
        }
        acc * g.cell_volume()
    }

    #[test]
    fn first_order_energy_matches_finite_differences() {
        let mut errs = Vec::new();
        for m in [32, 64] {
            let g = Grid::uniform(2, m).unwrap();
            let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.1 * (x[0] - x[1]).cos() * x[0].sin());
            let st = CompressibleState::new(
                0.0,
                rho.clone(),
                VectorField::zeros(&g, 2),
                DirectorField::constant(&g, [1.0, 0.0, 0.0]).unwrap(),
                ModelParams { lambda: 1.0, ..Default::default() },
            )
            .unwrap();
            let e = energy_functionals(&st, 1).f_s;
            let oracle = 0.5 * fd_h1_sq(&rho.map(|r| r - 1.0));
            errs.push((e - oracle).abs());
        }
        // second order
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn modulated_energy_examples() {
        let g = grid();
        let params = ModelParams { lambda: 1.0, ..Default::default() };
        let u = taylor_green(&g, 1.0);
        let n = twisted_director(&g, 0.3);
        let inc = IncompressibleState::new(0.0, u.clone(), n.clone(), ScalarField::zeros(&g), params).unwrap();
        let same = CompressibleState::new(0.0, ScalarField::constant(&g, 1.0), u.clone(), n.clone(), params).unwrap();
        let m = modulated_energy(&same, &inc).unwrap();
        assert!(m.total().abs() < 1e-14);
        let dense = CompressibleState::new(0.0, ScalarField::constant(&g, 2.0), VectorField::zeros(&g, 2), n.clone(), params)
            .unwrap();
        let rest = IncompressibleState::new(0.0, VectorField::zeros(&g, 2), n, ScalarField::zeros(&g), params).unwrap();
        let m = modulated_energy(&dense, &rest).unwrap();
        assert!((m.pi_lambda - 4.0 * PI * PI).abs() < 1e-10);
        let mut late = dense.clone();
        late.time = 0.5;
        assert!(matches!(modulated_energy(&late, &rest), Err(NlcError::Precondition(_))));
    }

    #[test]
    fn pi_lambda_matches_quadrature_oracle() {
        // independent evaluation of Q by midpoint quadrature of
        // Q(ρ) = ∫₁^ρ ∫₁^r P'(z)/z dz dr
        let g = Grid::uniform(2, 16).unwrap();
        let law = PressureLaw { gamma: 1.4 };
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.3 * x[0].sin() * x[1].cos());
        let q_oracle = |r: f64| {
            let n = 400;
            let h = (r - 1.0) / n as f64;
            let mut acc = 0.0;
            for i in 0..n {
                let s = 1.0 + (i as f64 + 0.5) * h;
                // inner: ∫₁^s γ z^{γ-2} dz
                let inner = 1.4 / 0.4 * (s.powf(0.4) - 1.0);
                acc += inner * h;
            }
            acc
        };
        let oracle: f64 = rho.values().iter().map(|&r| q_oracle(r)).sum::<f64>() * g.cell_volume() * 9.0;
        let got = pi_lambda(&rho, law, 3.0);
        assert!(got >= 0.0);
        assert!((got - oracle).abs() < 1e-5 * oracle, "{got} {oracle}");
    }

    #[test]
    fn fit_rate_examples() {
        let lams = [10.0, 20.0, 40.0, 80.0, 160.0];
        let pts: Vec<_> = lams.iter().map(|&l| (l, 3.0 / l)).collect();
        let (s, e) = fit_rate(&pts).unwrap();
        assert!((s + 1.0).abs() < 1e-12 && e < 1e-12);
        let pts: Vec<_> = lams.iter().map(|&l| (l, 0.5 * l.powi(-4))).collect();
        let (s, e) = fit_rate(&pts).unwrap();
        assert!((s + 4.0).abs() < 1e-12 && e < 1e-12);
        let pts: Vec<_> = lams.iter().map(|&l| (l, (1.0 + 0.1 * l.sin()) / l)).collect();
        let (s, _) = fit_rate(&pts).unwrap();
        assert!((-1.2..=-0.8).contains(&s));
        assert!(fit_rate(&pts[..2]).is_err());
        assert!(matches!(
            fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]),
            Err(NlcError::Domain { cell: 1, .. })
        ));
    }

    #[test]
    fn energy_observer_rows() {
        let g = Grid::uniform(2, 16).unwrap();
        let st = CompressibleState::equilibrium(&g, ModelParams::default(), [1.0, 0.0, 0.0]).unwrap();
        let mut obs = CompressibleEnergyObserver::new(2);
        for k in 0..5 {
            let mut s = st.clone();
            s.time = k as f64 * 0.1;
            obs.observe(&s, &StepInfo { step: k, unit_drift: 0.0 }).unwrap();
        }
        let rows = obs.finish();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.energy_residual.abs() < 1e-12));
        let csv = CompressibleEnergyObserver::to_csv(&rows);
        assert!(csv.starts_with("t,mass,kinetic,elastic,acoustic,"));
        assert_eq!(csv.lines().count(), 4);
    }
}
