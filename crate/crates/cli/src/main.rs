//! `tdcis`: run scenarios from INI configs, refinement checks, order fits
//! and focal-volume integration.
//!
//! Exit codes: 0 success, 1 i/o or internal error, 2 configuration or
//! input error, 3 numerical failure.

mod check;
mod config;
mod output;
mod scenarios;
mod settings;
mod tables;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tdcis::beam::{monte_carlo_volume, volume_signal, BeamProfile, TabulatedSignal, VolumeIntegration};
use tdcis::{Error, Result};

use output::Manifest;
use settings::RunConfig;

#[derive(Parser)]
#[command(name = "tdcis", version, about = "Time-dependent CIS photoionization engine")]
struct Cli {
    /// Directory for result files and the manifest.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TDCIS_THREADS")]
    threads: Option<usize>,
    /// Seed for Monte Carlo estimates.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run { config: PathBuf },
    /// Refinement check: dt/2, grid points x2 and E_cut x1.5.
    Check { config: PathBuf },
    /// Fit photon orders and cross sections to a yields table.
    Fit {
        yields: PathBuf,
        /// Orders to fit.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        orders: Vec<u32>,
    },
    /// Integrate a tabulated signal S(F) over a Gaussian focus. Lengths in cm,
    /// fluence in photons/cm^2.
    Volume {
        signal: PathBuf,
        #[arg(long)]
        waist: f64,
        #[arg(long)]
        rayleigh: f64,
        #[arg(long)]
        photons: f64,
        #[arg(long, requires = "z_max")]
        z_min: Option<f64>,
        #[arg(long, requires = "z_min")]
        z_max: Option<f64>,
        /// Monte Carlo samples for a cross-check (0 disables it).
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config() {
        2
    } else if e.is_numerical() {
        3
    } else {
        1
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<(RunConfig, Vec<u8>)> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Config("config is not UTF-8".into()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok((RunConfig::from_text(&text, base)?, bytes))
}

fn output_dir(cli: &Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    cli.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("tdcis-out"))
}

fn config_manifest(command: &str, path: &Path, bytes: Vec<u8>, cfg: &RunConfig) -> Manifest {
    let mut inputs = vec![(path.to_path_buf(), bytes)];
    inputs.extend(cfg.inputs.iter().cloned());
    Manifest {
        command: command.into(),
        scenario: Some(cfg.scenario.name().into()),
        inputs,
        config_echo: Some(cfg.echo.clone()),
        conversions: cfg.conversions.clone(),
        ..Default::default()
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config } => {
            let (cfg, bytes) = load_config(config)?;
            let dir = output_dir(&cli.output_dir, &cfg);
            let out = scenarios::run(&cfg, cli.seed)?;
            let mut m = config_manifest("run", config, bytes, &cfg);
            m.diagnostics = out.diagnostics.clone();
            if cfg.beam.as_ref().is_some_and(|b| b.samples > 0) {
                m.seed = Some(cli.seed);
            }
            output::write_all(&dir, &out.files, &m)?;
            for d in &out.diagnostics {
                println!("{d}");
            }
            println!("wrote {} files to {}", out.files.len() + 1, dir.display());
        }
        Command::Check { config } => {
            let (cfg, bytes) = load_config(config)?;
            let dir = output_dir(&cli.output_dir, &cfg);
            let report = check::doubling_check(&cfg)?;
            let text = report.to_text();
            let mut m = config_manifest("check", config, bytes, &cfg);
            m.diagnostics = vec![format!("flagged = {:?}", report.flagged())];
            output::write_all(&dir, &[("check.dat".into(), text.clone())], &m)?;
            print!("{text}");
        }
        Command::Fit { yields, orders } => {
            let bytes = read(yields)?;
            let records = tables::parse_yields(&String::from_utf8_lossy(&bytes))?;
            if orders.is_empty() || orders.iter().any(|&o| o == 0 || o as usize > records[0].yields.len()) {
                return Err(Error::Config(format!("orders must lie in 1..={}", records[0].yields.len())));
            }
            let (text, _) = tables::fit_report(&records, orders)?;
            print!("{text}");
            if let Some(dir) = &cli.output_dir {
                let m = Manifest { command: "fit".into(), inputs: vec![(yields.clone(), bytes)], ..Default::default() };
                output::write_all(dir, &[("fit.dat".into(), text)], &m)?;
            }
        }
        Command::Volume { signal, waist, rayleigh, photons, z_min, z_max, samples } => {
            let bytes = read(signal)?;
            let table = TabulatedSignal::parse(&String::from_utf8_lossy(&bytes))?;
            let beam = BeamProfile::new(*waist, *rayleigh, *photons, z_min.zip(*z_max))?;
            let v = volume_signal(&table, &beam, VolumeIntegration::default())?;
            let mut text = format!("quadrature {:.12e}\nrefined {:.12e}\n", v.value, v.refined);
            if *samples > 0 {
                let mc = monte_carlo_volume(&table, &beam, *samples, cli.seed)?;
                text.push_str(&format!("monte_carlo {:.12e} {:.3e}\n", mc.value, mc.std_error));
            }
            print!("{text}");
            if let Some(dir) = &cli.output_dir {
                let m = Manifest {
                    command: "volume".into(),
                    inputs: vec![(signal.clone(), bytes)],
                    diagnostics: vec![
                        format!("beam = waist {waist:e} cm, rayleigh {rayleigh:e} cm, photons {photons:e}"),
                        format!("z_range = {:e} {:e} cm", beam.z_min, beam.z_max),
                        format!("refinement_change = {:.3e}", v.rel_change()),
                    ],
                    seed: (*samples > 0).then_some(cli.seed),
                    ..Default::default()
                };
                output::write_all(dir, &[("volume.dat".into(), text)], &m)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
