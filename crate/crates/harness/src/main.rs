use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use reconlab::config::{ConfigError, ExperimentConfig, ExperimentKind, HorizonPolicy, Mode};
use reconlab::pipelines::reconnection::{scan_datum, zeros_jsonl, DatumScan};
use reconlab::pipelines::stochastic::noise_spec;
use reconlab::{fit_reconnection_scaling, run_experiment, run_spectral_selftest, HarnessError, Result};
use reconlab_core::mhd3d::{make_theorem_a_data, MhdParams, MhdState, MhdStepper, TheoremAData};
use reconlab_core::spectral::{snapshot, Grid, SpectralField, VectorField};
use reconlab_core::stochastic::run_sns_path;
use reconlab_core::topology::{find_zeros, positivity_criterion, ZeroFinderConfig};

#[derive(Parser)]
#[command(name = "reconlab", version, about = "Spectral experiments on enhanced dissipation and magnetic reconnection")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (flat `key = value` file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Single seed; overrides `seeds` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 lets the pool decide).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_parser = ["reduced", "full"])]
    mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral operator checks.
    Spectral {
        #[command(subcommand)]
        action: SpectralAction,
    },
    /// Passive-scalar decay experiments.
    Advdiff {
        #[command(subcommand)]
        action: AdvdiffAction,
    },
    /// 3D MHD from the perturbed datum.
    Mhd {
        #[command(subcommand)]
        action: MhdAction,
    },
    /// Equilibrium points of a magnetic field.
    Topo {
        #[command(subcommand)]
        action: TopoAction,
    },
    /// Stochastic Navier–Stokes paths.
    Sns {
        #[command(subcommand)]
        action: SnsAction,
    },
    /// Reconnection-time sweeps.
    Reconnect {
        #[command(subcommand)]
        action: ReconnectAction,
    },
    /// Fit reconnection-time scaling models to a rows.csv file.
    Fit {
        /// rows.csv written by a sweep.
        #[arg(long)]
        rows: PathBuf,
        #[arg(long, default_value = "positivity")]
        group: String,
        #[arg(long, default_value = "t_star")]
        column: String,
    },
}

#[derive(Subcommand)]
enum SpectralAction {
    Selftest,
}

#[derive(Subcommand)]
enum AdvdiffAction {
    /// The first η of the config only, with its decay trace.
    Run,
    Sweep,
}

#[derive(Subcommand)]
enum MhdAction {
    Run,
}

#[derive(Subcommand)]
enum TopoAction {
    Scan {
        /// Snapshot file holding the field (3 fields, or u then b).
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SnsAction {
    Run,
    Ensemble,
}

#[derive(Subcommand)]
enum ReconnectAction {
    Sweep,
}

fn load_config(common: &Common, default: ExperimentKind, allowed: &[ExperimentKind]) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::new(default),
    };
    if !allowed.contains(&cfg.kind) {
        return Err(ConfigError::Value {
            key: "kind".into(),
            msg: format!("`{}` does not fit this subcommand", cfg.kind),
        }
        .into());
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(m) = &common.mode {
        cfg.mode = if m == "full" { Mode::Full } else { Mode::Reduced };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(result: &reconlab::SweepResult) {
    for f in &result.fits {
        println!("fit {}: slope {:.4} intercept {:.4} R² {:.4} ({} rows)", f.name, f.slope, f.intercept, f.r2, f.rows);
    }
    for (name, s) in &result.scaling {
        let fits: Vec<String> = s
            .fits
            .iter()
            .map(|f| format!("{} c2={:.4} R²={:.4}", f.model.as_str(), f.c2, f.r2))
            .collect();
        println!("scaling {name}: best {} [{}]", s.best.as_str(), fits.join("; "));
    }
    for (k, v) in &result.scalars {
        println!("{k} = {v}");
    }
    for n in &result.notes {
        println!("note: {n}");
    }
    println!("{} rows, {} failed", result.rows.len(), result.failed_rows());
}

fn sweep(cfg: &ExperimentConfig) -> Result<()> {
    let result = run_experiment(cfg)?;
    print_summary(&result);
    Ok(())
}

fn selftest(common: &Common) -> Result<()> {
    let report = run_spectral_selftest(common.seed.unwrap_or(7));
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {} worst={:e} tol={:e}", c.name, c.worst, c.tolerance);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(HarnessError::Check("spectral self-test".into()))
    }
}

fn mhd_run(cfg: &ExperimentConfig) -> Result<()> {
    let eta = cfg.etas[0];
    let horizon = match cfg.horizon_policy {
        HorizonPolicy::Fixed => cfg.horizon,
        HorizonPolicy::Diffusive => cfg.horizon / eta,
        HorizonPolicy::Tdis => {
            return Err(ConfigError::Value {
                key: "horizon_policy".into(),
                msg: "tdis is not available for MHD runs".into(),
            }
            .into())
        }
    };
    let g = Grid::new(&[cfg.grid3; 3])?;
    let d = TheoremAData::new(cfg.m, cfg.eps, cfg.x_star);
    let (u, b) = make_theorem_a_data(&d, &g)?;
    let stepper = MhdStepper::new(&g, &MhdParams::new(eta, cfg.mhd_dt, horizon))?;
    let mut state = MhdState { u, b, time: 0.0 };
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("config.resolved"), cfg.to_text())?;
    let mut csv = Vec::new();
    writeln!(csv, "# eta={eta}")?;
    writeln!(csv, "# grid={}", g.describe())?;
    writeln!(csv, "t,energy,divergence,positivity_margin")?;
    let per = ((cfg.snapshot_interval / cfg.mhd_dt).round() as usize).max(1);
    let total = (horizon / cfg.mhd_dt).round() as usize;
    let mut done = 0;
    loop {
        let margin = positivity_criterion(state.b.comp(2), cfg.m, cfg.slack)?.margin;
        writeln!(csv, "{},{},{},{}", state.time, state.energy(), state.divergence_error(), margin)?;
        if done >= total {
            break;
        }
        let n = per.min(total - done);
        stepper.advance(&mut state, n)?;
        done += n;
    }
    fs::write(cfg.out.join("energy.csv"), csv)?;
    let fields: Vec<&SpectralField> = state.u.comps().iter().chain(state.b.comps()).collect();
    snapshot::save(&cfg.out.join("final.rcxf"), &fields)?;
    println!("t = {} energy = {}", state.time, state.energy());
    Ok(())
}

fn topo_scan(cfg: &ExperimentConfig, snapshot_path: Option<&Path>) -> Result<()> {
    let zeros = match snapshot_path {
        None => {
            let DatumScan { zeros, nearest } = scan_datum(cfg)?;
            if let Some((dist, z)) = nearest {
                println!("nearest to x*: distance {dist:e}, class {}", z.class.as_str());
            }
            zeros
        }
        Some(path) => {
            let mut fields = snapshot::load(path)?;
            if fields.len() == 6 {
                fields.drain(..3);
            }
            if fields.len() != 3 {
                return Err(reconlab_core::Error::Format(format!(
                    "expected 3 or 6 fields, found {}",
                    fields.len()
                ))
                .into());
            }
            let b = VectorField::from_components(fields)?;
            find_zeros(&b, &ZeroFinderConfig::for_datum(cfg.m, cfg.eps))?
        }
    };
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("zeros.jsonl"), zeros_jsonl(&zeros))?;
    println!("{} zeros", zeros.len());
    for z in &zeros {
        println!(
            "{:.10} {:.10} {:.10} residual {:.2e} {}",
            z.location[0],
            z.location[1],
            z.location[2],
            z.residual,
            z.class.as_str()
        );
    }
    Ok(())
}

fn sns_run(cfg: &ExperimentConfig) -> Result<()> {
    let g = Grid::new(&cfg.grid)?;
    let noise = noise_spec(cfg, &g, cfg.seeds[0])?;
    let path = run_sns_path(&VectorField::zeros(&g, 2), &noise, cfg.sns_dt, cfg.horizon, 1)?;
    fs::create_dir_all(&cfg.out)?;
    let mut csv = Vec::new();
    path.write_csv(&mut csv)?;
    fs::write(cfg.out.join("path.csv"), csv)?;
    println!(
        "seed {} final |u| = {}",
        path.seed,
        path.l2_u.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

/// Reads `(η, value)` pairs of successful rows from a rows.csv file.
fn read_rows(path: &Path, group: &str, column: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let bad = |msg: String| HarnessError::Numerical(reconlab_core::Error::Format(msg));
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty rows file".into()))?.split(',').collect();
    let idx = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| bad(format!("column `{name}` not found")))
    };
    let (ig, ie, is, ic) = (idx("group")?, idx("eta")?, idx("status")?, idx(column)?);
    let mut etas = Vec::new();
    let mut vals = Vec::new();
    for line in lines {
        // error messages may be quoted and contain commas; they only occur
        // in failed rows, which are skipped before any value is read
        let cells: Vec<&str> = line.split(',').collect();
        if cells.get(ig) != Some(&group) || cells.get(is) != Some(&"ok") {
            continue;
        }
        let parse = |i: usize| cells.get(i).and_then(|c| c.parse::<f64>().ok());
        if let (Some(e), Some(v)) = (parse(ie), parse(ic)) {
            etas.push(e);
            vals.push(v);
        }
    }
    Ok((etas, vals))
}

fn fit(rows: &Path, group: &str, column: &str) -> Result<()> {
    let (etas, t) = read_rows(rows, group, column)?;
    let f = fit_reconnection_scaling(&etas, &t)?;
    let json = serde_json::to_string_pretty(&f).map_err(std::io::Error::from)?;
    println!("{json}");
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    use ExperimentKind as K;
    let c = &cli.common;
    match &cli.command {
        Command::Spectral { action: SpectralAction::Selftest } => selftest(c),
        Command::Advdiff { action } => {
            let mut cfg = load_config(c, K::AdvdiffRate, &[K::AdvdiffRate, K::TheoremBConstant])?;
            if let AdvdiffAction::Run = action {
                cfg.etas.truncate(1);
            }
            sweep(&cfg)
        }
        Command::Mhd { action: MhdAction::Run } => {
            mhd_run(&load_config(c, K::TheoremAReconnection, &[K::TheoremAReconnection])?)
        }
        Command::Topo { action: TopoAction::Scan { snapshot } } => topo_scan(
            &load_config(c, K::TheoremAReconnection, &[K::TheoremAReconnection])?,
            snapshot.as_deref(),
        ),
        Command::Sns { action } => {
            let cfg = load_config(c, K::SnsEnergy, &[K::SnsEnergy])?;
            match action {
                SnsAction::Run => sns_run(&cfg),
                SnsAction::Ensemble => sweep(&cfg),
            }
        }
        Command::Reconnect { action: ReconnectAction::Sweep } => sweep(&load_config(
            c,
            K::TheoremAReconnection,
            &[K::TheoremAReconnection, K::TheoremCStochastic],
        )?),
        Command::Fit { rows, group, column } => fit(rows, group, column),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
