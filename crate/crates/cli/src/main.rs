use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nhtfim::config::RawConfig;
use nhtfim::{Error, Result};
use nhtfim_cli::plots::{self, Figure};
use nhtfim_cli::sweep::{run_sweep, Axis, SweepSpec};
use nhtfim_cli::tasks::{run_task, Task, TaskOutput};
use nhtfim_cli::{apply_seed, exit_code, output_path, sha256_hex, sibling};

extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

#[derive(Parser)]
#[command(name = "nhtfim", version, about = "Non-unitary Floquet Ising chains: spectra, entanglement and spin quenches")]
struct Cli {
    /// `key = value` run configuration; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for relative output paths.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Seed for random initial states.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Quasienergy spectrum, edge modes and phase label.
    Spectrum(SpectrumArgs),
    /// Stroboscopic Gaussian evolution of a subsystem entropy.
    Evolve(EvolveArgs),
    /// Steady-state entropy against system size with a law fit.
    Scaling(ScalingArgs),
    /// Topological entanglement entropy scan with scaling collapse.
    Tee(TeeArgs),
    /// Dense spin-chain quench observables.
    SpinQuench(OutArg),
    /// Complex-time CFT curve against continuous-limit numerics.
    CftCompare(CftArgs),
    /// Runs a task over a parameter grid.
    Sweep(SweepArgs),
    /// Writes plot-ready CSV bundles.
    EmitPlots(PlotArgs),
}

#[derive(Args)]
struct OutArg {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Sets alpha_J and alpha_h.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long = "beta-j", allow_hyphen_values = true)]
    beta_j: Option<f64>,
    #[arg(long = "beta-h", allow_hyphen_values = true)]
    beta_h: Option<f64>,
    #[arg(long = "L")]
    sites: Option<usize>,
    /// pbc, pbc-even, pbc-odd or obc.
    #[arg(long)]
    bc: Option<String>,
    /// pi4 or rad.
    #[arg(long)]
    units: Option<String>,
    #[arg(long = "tol-real")]
    tol_real: Option<f64>,
    #[arg(long = "tol-edge")]
    tol_edge: Option<f64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct EvolveArgs {
    /// Writes `c_<period>.bin` and `.json` per period into this directory.
    #[arg(long = "dump-correlations")]
    dump_correlations: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ScalingArgs {
    /// Comma-separated chain lengths.
    #[arg(long)]
    sizes: Option<String>,
    /// L_A / L.
    #[arg(long)]
    ratio: Option<f64>,
    /// auto, steady or evolve.
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct TeeArgs {
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long = "beta-j-start", allow_hyphen_values = true)]
    beta_j_start: Option<f64>,
    #[arg(long = "beta-j-stop", allow_hyphen_values = true)]
    beta_j_stop: Option<f64>,
    #[arg(long = "beta-j-count")]
    beta_j_count: Option<usize>,
    /// Evolution length in units of L periods.
    #[arg(long = "tee-periods")]
    tee_periods: Option<usize>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct CftArgs {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Subsystem length.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Coupling modulus: J = h = amplitude (1 - i eta).
    #[arg(long)]
    amplitude: Option<f64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    task: Task,
    /// `name=start:stop:count`, repeatable; `alpha` sets both alphas.
    #[arg(long = "axis", required = true, allow_hyphen_values = true)]
    axes: Vec<String>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, value_enum)]
    figure: Figure,
    /// Sweep CSV (fig2, fig3) or tee CSV (fig6).
    #[arg(long)]
    input: PathBuf,
    /// Tee fit JSON for fig6; refitted from the input when absent.
    #[arg(long)]
    fit: Option<PathBuf>,
}

fn set<T: ToString>(raw: &mut RawConfig, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        raw.set(key, v.to_string());
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn emit(out_dir: &Path, out: &Option<PathBuf>, default: &str, o: &TaskOutput) -> Result<()> {
    let path = output_path(out_dir, out.as_deref().unwrap_or(Path::new(default)));
    write(&path, o.table.to_csv().as_bytes())?;
    if let Some(s) = &o.summary_table {
        write(&sibling(&path, "_summary", "csv"), s.to_csv().as_bytes())?;
    }
    if let Some(j) = &o.json {
        write(&sibling(&path, "", "json"), (serde_json::to_string_pretty(j)? + "\n").as_bytes())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut raw = match &cli.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    if let Some(seed) = cli.seed {
        apply_seed(&mut raw, seed)?;
    }
    let dir = cli.out_dir.as_path();
    match cli.cmd {
        Cmd::Spectrum(a) => {
            set(&mut raw, "alpha_J", &a.alpha);
            set(&mut raw, "alpha_h", &a.alpha);
            set(&mut raw, "beta_J", &a.beta_j);
            set(&mut raw, "beta_h", &a.beta_h);
            set(&mut raw, "L", &a.sites);
            set(&mut raw, "bc", &a.bc);
            set(&mut raw, "units", &a.units);
            set(&mut raw, "tol_real", &a.tol_real);
            set(&mut raw, "tol_edge", &a.tol_edge);
            emit(dir, &a.out.out, "spectrum.csv", &run_task(Task::Spectrum, &raw, None)?)
        }
        Cmd::Evolve(a) => {
            let dump = a.dump_correlations.map(|d| output_path(dir, &d));
            emit(dir, &a.out.out, "evolve.csv", &run_task(Task::Evolve, &raw, dump.as_deref())?)
        }
        Cmd::Scaling(a) => {
            set(&mut raw, "sizes", &a.sizes);
            set(&mut raw, "ratio", &a.ratio);
            set(&mut raw, "method", &a.method);
            emit(dir, &a.out.out, "scaling.csv", &run_task(Task::Scaling, &raw, None)?)
        }
        Cmd::Tee(a) => {
            set(&mut raw, "sizes", &a.sizes);
            set(&mut raw, "beta_J_start", &a.beta_j_start);
            set(&mut raw, "beta_J_stop", &a.beta_j_stop);
            set(&mut raw, "beta_J_count", &a.beta_j_count);
            set(&mut raw, "tee_periods", &a.tee_periods);
            emit(dir, &a.out.out, "tee.csv", &run_task(Task::Tee, &raw, None)?)
        }
        Cmd::SpinQuench(a) => emit(dir, &a.out, "spin_quench.csv", &run_task(Task::SpinQuench, &raw, None)?),
        Cmd::CftCompare(a) => {
            set(&mut raw, "c", &a.c);
            set(&mut raw, "epsilon", &a.epsilon);
            set(&mut raw, "eta", &a.eta);
            set(&mut raw, "l", &a.l);
            set(&mut raw, "t_max", &a.t_max);
            set(&mut raw, "dt", &a.dt);
            set(&mut raw, "amplitude", &a.amplitude);
            emit(dir, &a.out.out, "cft_compare.csv", &run_task(Task::CftCompare, &raw, None)?)
        }
        Cmd::Sweep(a) => {
            let axes = a.axes.iter().map(|s| s.parse::<Axis>()).collect::<Result<Vec<_>>>()?;
            let spec = SweepSpec { axes, fixed: raw, task: a.task, workers: cli.workers };
            let mut res = run_sweep(&spec, cli.seed)?;
            let path = output_path(dir, a.out.out.as_deref().unwrap_or(Path::new("sweep.csv")));
            write(&path, res.csv.as_bytes())?;
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("sweep.csv").to_string();
            res.manifest.outputs.insert(name, sha256_hex(res.csv.as_bytes()));
            let manifest = serde_json::to_string_pretty(&res.manifest)? + "\n";
            write(&sibling(&path, "_manifest", "json"), manifest.as_bytes())?;
            if res.manifest.failures > 0 {
                eprintln!("{} of {} points failed; see the manifest", res.manifest.failures, res.manifest.points.len());
            }
            Ok(())
        }
        Cmd::EmitPlots(a) => {
            let input = fs::read(&a.input)?;
            let text = match a.figure {
                Figure::Fig2 => plots::fig2(&input)?,
                Figure::Fig3 => plots::fig3(&input)?,
                Figure::Fig6 => {
                    let fit = a.fit.map(|p| fs::read_to_string(p).map_err(Error::from).and_then(|t| plots::parse_fit(&t))).transpose()?;
                    plots::fig6(&input, fit)?
                }
            };
            write(&dir.join(a.figure.file_name()), text.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    // SAFETY: plain setter in the linked OpenBLAS, called before any BLAS work.
    unsafe { openblas_set_num_threads(1) };
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
