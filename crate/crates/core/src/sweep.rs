//! λ-sweep driver: runs the compressible system for several λ against one
//! incompressible reference and fits the decay rates.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compressible;
use crate::diagnostics::{
    fit_rate, modulated_energy, pi_lambda, CompressibleEnergyObserver, CompressibleEnergyRow,
    IncompressibleEnergyObserver, IncompressibleEnergyRow,
};
use crate::error::{NlcError, Result};
use crate::grid::Grid;
use crate::imex::{Scheme, StepControl};
use crate::incompressible::{incompressible_initial, run_incompressible};
use crate::observe::{Observer, StepInfo};
use crate::spectral::{self, sobolev_norm_sq};
use crate::state::{
    base_profile, well_prepared_initial_data, CompressibleState, IncompressibleState, ModelParams,
    Preparation,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub sizes: Vec<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { sizes: vec![64, 64] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSection {
    /// `taylor_green`, `taylor_green_uniform`, `rest` or `director_only`.
    pub profile: String,
}

impl Default for InitSection {
    fn default() -> Self {
        Self {
            profile: "taylor_green".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub lambdas: Vec<f64>,
    /// Rerun the largest λ on a half-resolution grid to estimate the
    /// spatial error floor.
    pub floor_probe: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lambdas: vec![10.0, 20.0, 40.0, 80.0, 160.0],
            floor_probe: true,
        }
    }
}

/// Run and sweep configuration, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gamma: f64,
    pub mu: f64,
    pub kappa: f64,
    pub nu: f64,
    pub theta: f64,
    /// λ of single runs; the sweep uses `sweep.lambdas`.
    pub lambda: f64,
    pub delta0: f64,
    pub seed: u64,
    pub s: usize,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub renormalize_director: bool,
    /// Steps between comparison samples and observer rows.
    pub sample_stride: usize,
    pub grid: GridSection,
    pub init: InitSection,
    pub sweep: SweepSection,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let p = ModelParams::default();
        let prep = Preparation::default();
        Self {
            gamma: p.gamma,
            mu: p.mu,
            kappa: p.kappa,
            nu: p.nu,
            theta: p.theta,
            lambda: p.lambda,
            delta0: prep.delta0,
            seed: prep.seed,
            s: prep.s,
            dt: 5e-5,
            t_end: 0.1,
            scheme: Scheme::ImexBdf2,
            renormalize_director: true,
            sample_stride: 10,
            grid: GridSection::default(),
            init: InitSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| NlcError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.params(self.lambda).validate(self.grid.sizes.len())?;
        Grid::new(&self.grid.sizes)?;
        base_profile(&Grid::new(&self.grid.sizes)?, &self.init.profile)?;
        if self.sample_stride == 0 {
            return Err(NlcError::Config("sample_stride must be positive".into()));
        }
        let steps = self.step_control().steps()?;
        if steps % self.sample_stride != 0 {
            return Err(NlcError::Config(format!(
                "{steps} steps are not a multiple of sample_stride = {}",
                self.sample_stride
            )));
        }
        if !(self.delta0 >= 0.0) {
            return Err(NlcError::Config("delta0 must be non-negative".into()));
        }
        for &l in &self.sweep.lambdas {
            self.params(l).validate(self.grid.sizes.len())?;
        }
        Ok(())
    }

    pub fn params(&self, lambda: f64) -> ModelParams {
        ModelParams {
            mu: self.mu,
            kappa: self.kappa,
            nu: self.nu,
            theta: self.theta,
            lambda,
            gamma: self.gamma,
        }
    }

    pub fn preparation(&self) -> Preparation {
        Preparation {
            delta0: self.delta0,
            s: self.s,
            seed: self.seed,
        }
    }

    pub fn step_control(&self) -> StepControl {
        StepControl {
            dt: self.dt,
            t_end: self.t_end,
            scheme: self.scheme,
            renormalize_director: self.renormalize_director,
            dealias: true,
            record_stride: usize::MAX,
        }
    }

    pub fn make_grid(&self) -> Result<Grid> {
        Grid::new(&self.grid.sizes)
    }
}

/// Errors at `T_end` for one λ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateRow {
    pub lambda: f64,
    /// `λ‖ρ-1‖²_s + ‖u^λ-u‖² + ‖n^λ-n‖²_2`
    pub e_combined: f64,
    /// `λ‖ρ-1‖²_s`
    pub rho_weighted: f64,
    /// `‖∇(ρ-1)‖²_{s-2}`
    pub grad_rho_hs2: f64,
    /// `∫₀ᵀ ‖u^λ-u‖²_1`
    pub time_integrated_u: f64,
    /// `∫₀ᵀ ‖n^λ-n‖²_3`
    pub time_integrated_n: f64,
}

impl RateRow {
    pub const QUANTITIES: [(&'static str, f64); 5] = [
        ("E_combined", -1.0),
        ("rho_weighted", -1.0),
        ("grad_rho_hs2", -4.0),
        ("time_integrated_u", -1.0),
        ("time_integrated_n", -1.0),
    ];

    pub fn values(&self) -> [f64; 5] {
        [
            self.e_combined,
            self.rho_weighted,
            self.grad_rho_hs2,
            self.time_integrated_u,
            self.time_integrated_n,
        ]
    }
}

/// Per-run facts beyond the rate quantities.
#[derive(Clone, Debug)]
pub struct RunDiagnostics {
    pub lambda: f64,
    pub energy_rows: Vec<CompressibleEnergyRow>,
    /// Smallest part of the modulated energy over all samples.
    pub modulated_min: f64,
    /// `Π^λ` at `t = 0`.
    pub pi0: f64,
    /// `10 λ² ‖ρ₀-1‖² max Q''`.
    pub pi0_bound: f64,
    /// `|∫ρ(T) - ∫ρ(0)| / ∫ρ(0)`.
    pub mass_drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub quantity: &'static str,
    pub slope: f64,
    pub stderr: f64,
    pub expected: f64,
    pub n_points: usize,
    /// λ values dropped by the floor protocol.
    pub excluded: Vec<f64>,
}

/// Spatial-floor estimate from the half-resolution rerun.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloorProbe {
    pub lambda: f64,
    pub coarse: RateRow,
    pub floor: [f64; 5],
}

#[derive(Clone, Debug)]
pub struct RateReport {
    pub lambdas: Vec<f64>,
    pub rows: Vec<RateRow>,
    pub runs: Vec<RunDiagnostics>,
    /// λ values whose run failed, with the reason.
    pub failed: Vec<(f64, String)>,
    pub slopes: Vec<SlopeFit>,
    pub floor: Option<FloorProbe>,
    pub incompressible_rows: Vec<IncompressibleEnergyRow>,
}

impl RateReport {
    pub fn slope(&self, quantity: &str) -> Option<&SlopeFit> {
        self.slopes.iter().find(|s| s.quantity == quantity)
    }

    pub fn rates_csv(&self) -> String {
        let mut s = String::from(
            "lambda,E_combined,rho_weighted,grad_rho_hs2,time_integrated_u,time_integrated_n\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.lambda, r.e_combined, r.rho_weighted, r.grad_rho_hs2, r.time_integrated_u, r.time_integrated_n
            );
        }
        s
    }

    pub fn slopes_csv(&self) -> String {
        let mut s = String::from("quantity,slope,stderr,expected,n_points,excluded\n");
        for f in &self.slopes {
            let excl: Vec<String> = f.excluded.iter().map(|l| format!("{l}")).collect();
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.1},{},{}",
                f.quantity,
                f.slope,
                f.stderr,
                f.expected,
                f.n_points,
                excl.join(";")
            );
        }
        s
    }
}

/// Incompressible reference sampled every `sample_stride` steps.
pub struct Reference {
    pub samples: Vec<IncompressibleState>,
    pub rows: Vec<IncompressibleEnergyRow>,
}

pub fn incompressible_reference(cfg: &SweepConfig, grid: &Grid) -> Result<Reference> {
    let (u0, n0) = base_profile(grid, &cfg.init.profile)?;
    let init = incompressible_initial(u0, n0, cfg.params(cfg.lambda))?;
    let ctl = StepControl {
        record_stride: cfg.sample_stride,
        ..cfg.step_control()
    };
    let mut obs = IncompressibleEnergyObserver::new(cfg.sample_stride);
    let traj = run_incompressible(&init, &ctl, &mut [&mut obs])?;
    Ok(Reference {
        samples: traj.states,
        rows: obs.finish(),
    })
}

/// Accumulates the comparison with the reference at sample steps.
struct LimitObserver<'a> {
    reference: &'a [IncompressibleState],
    stride: usize,
    s: usize,
    last: Option<(f64, f64, f64)>,
    int_u: f64,
    int_n: f64,
    modulated_min: f64,
}

impl Observer<CompressibleState> for LimitObserver<'_> {
    fn observe(&mut self, state: &CompressibleState, info: &StepInfo) -> Result<()> {
        let r = self
            .reference
            .get(info.step / self.stride)
            .ok_or_else(|| NlcError::Precondition("reference trajectory too short".into()))?;
        let du = sobolev_norm_sq(&state.u.sub(&r.u), 1);
        let dn = sobolev_norm_sq(&state.n.as_vector().sub(r.n.as_vector()), self.s);
        if let Some((t, pu, pn)) = self.last {
            let h = state.time - t;
            self.int_u += 0.5 * h * (du + pu);
            self.int_n += 0.5 * h * (dn + pn);
        }
        self.last = Some((state.time, du, dn));
        let m = modulated_energy(state, r)?;
        self.modulated_min = self.modulated_min.min(m.min_part());
        Ok(())
    }

    fn stride(&self) -> usize {
        self.stride
    }
}

/// Runs one λ against the reference.
pub fn run_lambda(
    cfg: &SweepConfig,
    grid: &Grid,
    lambda: f64,
    reference: &Reference,
) -> Result<(RateRow, RunDiagnostics)> {
    let params = cfg.params(lambda);
    let (u0, n0) = base_profile(grid, &cfg.init.profile)?;
    let init = well_prepared_initial_data(grid, params, cfg.preparation(), &u0, &n0)?;
    let law = params.pressure_law();
    let rb0 = init.rho.map(|r| r - 1.0);
    let max_q2 = init.rho.values().iter().map(|&r| law.q_second(r)).fold(0.0, f64::max);
    let pi0 = pi_lambda(&init.rho, law, lambda);
    let pi0_bound = 10.0 * lambda * lambda * sobolev_norm_sq(&rb0, 0) * max_q2;

    let ctl = cfg.step_control();
    let mut energy = CompressibleEnergyObserver::new(cfg.sample_stride);
    let mut limit = LimitObserver {
        reference: &reference.samples,
        stride: cfg.sample_stride,
        s: cfg.s,
        last: None,
        int_u: 0.0,
        int_n: 0.0,
        modulated_min: f64::INFINITY,
    };
    let traj = compressible::run(&init, &ctl, &mut [&mut energy, &mut limit])?;
    let last = traj.last().expect("trajectory has a final state");
    let r = reference.samples.last().expect("reference has a final state");
    if (last.time - r.time).abs() > 1e-9 * r.time.abs().max(1.0) {
        return Err(NlcError::Precondition("reference ends at a different time".into()));
    }
    let rb = last.rho.map(|v| v - 1.0);
    let rho_weighted = lambda * sobolev_norm_sq(&rb, cfg.s);
    let grad_rho_hs2 = sobolev_norm_sq(&spectral::gradient(&rb)?, cfg.s.saturating_sub(2));
    let e_combined = rho_weighted
        + sobolev_norm_sq(&last.u.sub(&r.u), 0)
        + sobolev_norm_sq(&last.n.as_vector().sub(r.n.as_vector()), 2);
    let rows = energy.finish();
    let m0 = rows.first().map(|r| r.mass).unwrap_or(1.0);
    let m1 = rows.last().map(|r| r.mass).unwrap_or(m0);
    Ok((
        RateRow {
            lambda,
            e_combined,
            rho_weighted,
            grad_rho_hs2,
            time_integrated_u: limit.int_u,
            time_integrated_n: limit.int_n,
        },
        RunDiagnostics {
            lambda,
            energy_rows: rows,
            modulated_min: limit.modulated_min,
            pi0,
            pi0_bound,
            mass_drift: (m1 - m0).abs() / m0,
        },
    ))
}

/// Full sweep: reference run, one compressible run per λ (in parallel),
/// optional floor probe and the log-log fits.
pub fn sweep_lambda(cfg: &SweepConfig) -> Result<RateReport> {
    cfg.validate()?;
    let grid = cfg.make_grid()?;
    let reference = incompressible_reference(cfg, &grid)?;
    let results: Vec<_> = cfg
        .sweep
        .lambdas
        .par_iter()
        .map(|&l| (l, run_lambda(cfg, &grid, l, &reference)))
        .collect();

    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut failed = Vec::new();
    for (l, res) in results {
        match res {
            Ok((row, diag)) => {
                rows.push(row);
                runs.push(diag);
            }
            Err(e) => failed.push((l, e.to_string())),
        }
    }

    let floor = if cfg.sweep.floor_probe && !rows.is_empty() {
        floor_probe(cfg, &rows)?
    } else {
        None
    };

    let slopes = RateRow::QUANTITIES
        .iter()
        .enumerate()
        .map(|(q, &(name, expected))| {
            let mut pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda, r.values()[q])).collect();
            let mut excluded = Vec::new();
            if let Some(fp) = &floor {
                if let Some(pos) = pts.iter().position(|p| p.0 == fp.lambda) {
                    if pts[pos].1 < 10.0 * fp.floor[q] && pts.len() > 3 {
                        excluded.push(fp.lambda);
                        pts.remove(pos);
                    }
                }
            }
            let (slope, stderr) = fit_rate(&pts).unwrap_or((f64::NAN, f64::NAN));
            SlopeFit {
                quantity: name,
                slope,
                stderr,
                expected,
                n_points: pts.len(),
                excluded,
            }
        })
        .collect();

    Ok(RateReport {
        lambdas: cfg.sweep.lambdas.clone(),
        rows,
        runs,
        failed,
        slopes,
        floor,
        incompressible_rows: reference.rows,
    })
}

/// Reruns the largest λ at half resolution; the floor of each quantity is
/// the difference between the two grids.
fn floor_probe(cfg: &SweepConfig, rows: &[RateRow]) -> Result<Option<FloorProbe>> {
    let fine = rows
        .iter()
        .cloned()
        .fold(None::<RateRow>, |m, r| match m {
            Some(b) if b.lambda >= r.lambda => Some(b),
            _ => Some(r),
        })
        .expect("non-empty rows");
    let sizes: Vec<usize> = cfg.grid.sizes.iter().map(|m| m / 2).collect();
    let coarse_grid = match Grid::new(&sizes) {
        Ok(g) => g,
        Err(_) => return Ok(None),
    };
    let reference = incompressible_reference(cfg, &coarse_grid)?;
    let (coarse, _) = run_lambda(cfg, &coarse_grid, fine.lambda, &reference)?;
    let f = fine.values();
    let c = coarse.values();
    let mut floor = [0.0; 5];
    for q in 0..5 {
        floor[q] = (f[q] - c[q]).abs();
    }
    Ok(Some(FloorProbe {
        lambda: fine.lambda,
        coarse,
        floor,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_parsing() {
        let cfg = SweepConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, SweepConfig::default());
        let cfg = SweepConfig::from_toml_str(
            "gamma = 2\nlambda = 20\nscheme = \"imex_euler\"\n[grid]\nsizes = [32, 32]\n[sweep]\nlambdas = [10, 40]\n",
        )
        .unwrap();
        assert_eq!(cfg.lambda, 20.0);
        assert_eq!(cfg.scheme, Scheme::ImexEuler);
        assert_eq!(cfg.sweep.lambdas, vec![10.0, 40.0]);
        let back = SweepConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_rejects_bad_input() {
        assert!(SweepConfig::from_toml_str("bogus = 1").is_err());
        assert!(SweepConfig::from_toml_str("[grid]\nsizes = [30, 30]").is_err());
        assert!(SweepConfig::from_toml_str("[init]\nprofile = \"vortex\"").is_err());
        assert!(SweepConfig::from_toml_str("sample_stride = 7").is_err());
        assert!(SweepConfig::from_toml_str("mu = -1").is_err());
    }

    fn small() -> SweepConfig {
        SweepConfig {
            dt: 1e-3,
            t_end: 0.01,
            sample_stride: 2,
            grid: GridSection { sizes: vec![16, 16] },
            sweep: SweepSection {
                lambdas: vec![10.0, 10.0, 20.0],
                floor_probe: false,
            },
            ..Default::default()
        }
    }

    #[test]
    fn identical_lambdas_give_identical_rows() {
        let rep = sweep_lambda(&small()).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert_eq!(rep.rows[0], rep.rows[1]);
        assert!(rep.failed.is_empty());
        assert!(rep.rates_csv().lines().count() == 4);
        assert_eq!(rep.slopes.len(), 5);
    }

    #[test]
    fn zero_perturbation_at_rest_gives_zero_errors() {
        let cfg = SweepConfig {
            delta0: 0.0,
            init: InitSection { profile: "rest".into() },
            ..small()
        };
        let rep = sweep_lambda(&cfg).unwrap();
        for r in &rep.rows {
            assert!(r.values().iter().all(|v| v.abs() < 1e-20), "{r:?}");
        }
    }
}
