use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use nlc_core::compressible;
use nlc_core::diagnostics::{CompressibleEnergyObserver, IncompressibleEnergyObserver};
use nlc_core::incompressible::{incompressible_initial, run_incompressible};
use nlc_core::picard::picard_iterate;
use nlc_core::snapshot::SnapshotObserver;
use nlc_core::state::{base_profile, random_unit_director};
use nlc_core::{
    ericksen_stress_div, ericksen_stress_divergence_form, sweep_lambda, well_prepared_initial_data,
    Grid, Observer, Scheme, StepControl, SweepConfig,
};

const CONFIG_HELP: &str = "\
Configuration is a TOML file; every key is optional.

  gamma = 2.0            pressure exponent, P = rho^gamma
  mu = 1.0               shear viscosity
  kappa = 0.0            bulk viscosity
  nu = 1.0               elastic coefficient
  theta = 1.0            director relaxation rate
  lambda = 10.0          penalisation for single runs
  delta0 = 0.05          size of the initial perturbations
  seed = 42              RNG seed of the perturbations
  s = 3                  Sobolev order of the bounds and errors
  dt = 5e-5              time step
  t_end = 0.1            final time (multiple of dt)
  scheme = \"imex_bdf2\"   imex_bdf2 | imex_euler | explicit_rk4_reference
  renormalize_director = true
  sample_stride = 10     steps between samples and CSV rows

  [grid]
  sizes = [64, 64]       powers of two, 2 or 3 entries

  [init]
  profile = \"taylor_green\"  taylor_green | taylor_green_uniform | rest | director_only

  [sweep]
  lambdas = [10, 20, 40, 80, 160]
  floor_probe = true     rerun the largest lambda at half resolution";

#[derive(Parser)]
#[command(name = "nlc", version, about = "Nematic liquid crystal flow: compressible runs and the incompressible limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the lambda sweep and write rates.csv, slopes.csv and per-run CSVs.
    #[command(after_help = CONFIG_HELP)]
    SweepLambda {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the stress identity and both energy laws on an m x m grid.
    VerifyIdentities {
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Measure Picard contraction; prints T0,lambda,iter,diff_metric,ratio.
    #[command(after_help = CONFIG_HELP)]
    CheckContraction {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Local times to probe; repeatable.
        #[arg(long = "t0", default_values_t = [0.02, 0.01])]
        t0: Vec<f64>,
        /// Overrides the config lambda; repeatable.
        #[arg(long)]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        k_max: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single run with energy CSV and optional snapshots.
    #[command(after_help = CONFIG_HELP)]
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Solve the incompressible system instead.
        #[arg(long)]
        incompressible: bool,
        /// Write a snapshot every this many steps (0 disables).
        #[arg(long, default_value_t = 0)]
        snapshot_stride: usize,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<SweepConfig> {
    match path {
        Some(p) => SweepConfig::from_file(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(SweepConfig::default()),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn sweep(config: &Option<PathBuf>, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    fs::create_dir_all(out)?;
    let rep = sweep_lambda(&cfg)?;
    write(&out.join("rates.csv"), &rep.rates_csv())?;
    write(&out.join("slopes.csv"), &rep.slopes_csv())?;
    for r in &rep.runs {
        write(
            &out.join(format!("run_lambda_{}.csv", r.lambda)),
            &CompressibleEnergyObserver::to_csv(&r.energy_rows),
        )?;
    }
    write(
        &out.join("incompressible.csv"),
        &IncompressibleEnergyObserver::to_csv(&rep.incompressible_rows),
    )?;
    for f in &rep.slopes {
        println!(
            "{:<18} slope {:>8.3} ± {:.3} (expected {}) on {} points",
            f.quantity, f.slope, f.stderr, f.expected, f.n_points
        );
    }
    for (l, why) in &rep.failed {
        eprintln!("lambda {l} failed: {why}");
    }
    Ok(())
}

const IDENTITY_TOL: f64 = 1e-10;

fn verify(m: usize) -> Result<()> {
    let g = Grid::uniform(2, m)?;
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        let n = random_unit_director(&g, seed, 0.35);
        let a = ericksen_stress_div(&n)?;
        let b = ericksen_stress_divergence_form(&n, true)?;
        worst = worst.max(a.sub(&b).max_abs() / a.max_abs());
    }
    println!("stress identity: relative discrepancy {worst:.3e}");
    if worst > IDENTITY_TOL {
        eprintln!("stress identity above {IDENTITY_TOL:e}; the grid is too coarse for these directors");
        ok = false;
    }

    let cfg = SweepConfig {
        grid: nlc_core::sweep::GridSection { sizes: vec![m, m] },
        ..Default::default()
    };
    let params = cfg.params(10.0);
    let (u0, n0) = base_profile(&g, "taylor_green")?;
    let comp = well_prepared_initial_data(&g, params, cfg.preparation(), &u0, &n0)?;
    let inc = incompressible_initial(u0, n0, params)?;
    let dts = [4e-4, 2e-4, 1e-4];
    let mut rc = Vec::new();
    let mut ri = Vec::new();
    for dt in dts {
        let ctl = StepControl::new(dt, 0.1, Scheme::ImexBdf2);
        let mut oc = CompressibleEnergyObserver::new(usize::MAX);
        compressible::run(&comp, &ctl, &mut [&mut oc])?;
        rc.push(oc.finish().last().map(|r| r.energy_residual.abs()).unwrap_or(0.0));
        let mut oi = IncompressibleEnergyObserver::new(usize::MAX);
        run_incompressible(&inc, &ctl, &mut [&mut oi])?;
        ri.push(oi.finish().last().map(|r| r.energy_residual.abs()).unwrap_or(0.0));
    }
    for (name, res) in [("compressible", &rc), ("incompressible", &ri)] {
        let ord: Vec<f64> = res.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let res_s: Vec<String> = res.iter().map(|r| format!("{r:.3e}")).collect();
        println!("{name} energy law: residuals [{}] orders {ord:.2?}", res_s.join(", "));
        ok &= ord.iter().all(|&p| p >= 1.8);
    }
    if !ok {
        bail!("identity checks failed");
    }
    Ok(())
}

fn contraction(
    config: &Option<PathBuf>,
    t0s: &[f64],
    lambdas: &[f64],
    k_max: usize,
    out: &Option<PathBuf>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let g = cfg.make_grid()?;
    let lambdas = if lambdas.is_empty() { vec![cfg.lambda] } else { lambdas.to_vec() };
    let mut csv = String::from("T0,lambda,iter,diff_metric,ratio\n");
    for &lambda in &lambdas {
        let params = cfg.params(lambda);
        let (u0, n0) = base_profile(&g, &cfg.init.profile)?;
        let st = well_prepared_initial_data(&g, params, cfg.preparation(), &u0, &n0)?;
        for &t0 in t0s {
            let ctl = StepControl {
                t_end: t0,
                ..cfg.step_control()
            };
            let (_, rep) = picard_iterate(&st, t0, k_max, &ctl)?;
            for (i, d) in rep.diff_norms.iter().enumerate() {
                let ratio = if i == 0 { f64::NAN } else { rep.ratios[i - 1] };
                let _ = writeln!(csv, "{t0},{lambda},{},{d:.16e},{ratio:.16e}", i + 1);
            }
            if rep.diverged {
                eprintln!("T0 {t0}, lambda {lambda}: metric grew three times in a row");
            }
        }
    }
    match out {
        Some(p) => write(p, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run(config: &Option<PathBuf>, out: &Path, incompressible: bool, snap: usize) -> Result<()> {
    let cfg = load_config(config)?;
    let g = cfg.make_grid()?;
    fs::create_dir_all(out)?;
    let params = cfg.params(cfg.lambda);
    let (u0, n0) = base_profile(&g, &cfg.init.profile)?;
    let ctl = cfg.step_control();
    let mut snaps = SnapshotObserver::new(out, if incompressible { "incomp" } else { "comp" }, snap);
    if incompressible {
        let st = incompressible_initial(u0, n0, params)?;
        let mut obs = IncompressibleEnergyObserver::new(cfg.sample_stride);
        let mut list: Vec<&mut dyn Observer<_>> = vec![&mut obs];
        if snap > 0 {
            list.push(&mut snaps);
        }
        run_incompressible(&st, &ctl, &mut list)?;
        let rows = obs.finish();
        write(&out.join("energy.csv"), &IncompressibleEnergyObserver::to_csv(&rows))?;
        if let Some(r) = rows.last() {
            println!("t {} energy residual {:.3e} max |div u| {:.3e}", r.t, r.energy_residual, r.div_u_max);
        }
    } else {
        let st = well_prepared_initial_data(&g, params, cfg.preparation(), &u0, &n0)?;
        let mut obs = CompressibleEnergyObserver::new(cfg.sample_stride);
        let mut list: Vec<&mut dyn Observer<_>> = vec![&mut obs];
        if snap > 0 {
            list.push(&mut snaps);
        }
        compressible::run(&st, &ctl, &mut list)?;
        let rows = obs.finish();
        write(&out.join("energy.csv"), &CompressibleEnergyObserver::to_csv(&rows))?;
        if let Some(r) = rows.last() {
            println!("t {} energy residual {:.3e} max |rho-1| {:.3e}", r.t, r.energy_residual, r.max_rho_dev);
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::SweepLambda { config, out } => sweep(&config, &out),
        Command::VerifyIdentities { grid } => verify(grid),
        Command::CheckContraction {
            config,
            t0,
            lambda,
            k_max,
            out,
        } => contraction(&config, &t0, &lambda, k_max, &out),
        Command::Run {
            config,
            out,
            incompressible,
            snapshot_stride,
        } => run(&config, &out, incompressible, snapshot_stride),
    }
}
