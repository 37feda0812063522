use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spad_ofdm::commands::{
    cmd_analyze, cmd_maxrate, cmd_metrics, cmd_pmf, cmd_simulate, Invocation,
};
use spad_ofdm::link::PowerGrid;
use spad_ofdm::scenario::ScenarioFile;
use spad_ofdm::spad::DeadTimeKind;
use spad_ofdm::table::{Format, ResultTable};
use spad_ofdm::Error;

/// Optical OFDM over SPAD-array receivers: analytic BER, Monte Carlo BER,
/// link thresholds, maximum bit rates and count distributions.
#[derive(Debug, Parser)]
#[command(name = "spad-ofdm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML). Reference settings are used when omitted.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Random seed; defaults to `sweep.seed` from the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analytic BER curve, Poisson and exact count statistics.
    Analyze {
        /// Power range `start:stop:step` in dBm.
        #[arg(long, allow_hyphen_values = true)]
        power: Option<String>,
    },
    /// Monte Carlo BER curve.
    Simulate {
        /// Power range `start:stop:step` in dBm.
        #[arg(long, allow_hyphen_values = true)]
        power: Option<String>,
        /// Fixed number of frames per power (adaptive stopping otherwise).
        #[arg(long)]
        frames: Option<usize>,
    },
    /// MPR, MOI and LEA over the scenario's metrics grid.
    Metrics {
        /// Power range `start:stop:step` in dBm.
        #[arg(long, allow_hyphen_values = true)]
        power: Option<String>,
    },
    /// Maximum bit rate per scheme, quenching type and constellation.
    Maxrate,
    /// Exact, Poisson and empirical count distributions of the array.
    Pmf {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Photons incident on the array per sample period.
        #[arg(long)]
        photons: Option<f64>,
        /// Empirical sample count.
        #[arg(long)]
        samples: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    #[value(name = "PQ", alias = "pq")]
    Pq,
    #[value(name = "AQ", alias = "aq")]
    Aq,
}

impl From<KindArg> for DeadTimeKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Pq => DeadTimeKind::Pq,
            KindArg::Aq => DeadTimeKind::Aq,
        }
    }
}

fn grid(file: &ScenarioFile, power: Option<String>) -> Result<PowerGrid, Error> {
    match power {
        Some(p) => p.parse(),
        None => file.power_grid(),
    }
}

fn run(cli: Cli) -> Result<String, Error> {
    let mut file = match &cli.scenario {
        Some(p) => ScenarioFile::from_path(p)?,
        None => ScenarioFile::default(),
    };
    let seed = cli.seed.unwrap_or(file.sweep.seed);
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let path = cli.scenario.as_ref().map(|p| p.display().to_string());
    let table: ResultTable = match cli.command {
        Command::Analyze { power } => {
            let g = grid(&file, power)?;
            let inv = Invocation::new("analyze", path, seed, format).arg("power", g.to_string());
            cmd_analyze(&file, &g, &inv)?
        }
        Command::Simulate { power, frames } => {
            if frames.is_some() {
                file.simulation.frames = frames;
                file.validate().map_err(|e| match e {
                    Error::Config { message, .. } => Error::Config {
                        key: "--frames".into(),
                        message,
                    },
                    other => other,
                })?;
            }
            let g = grid(&file, power)?;
            let mut inv =
                Invocation::new("simulate", path, seed, format).arg("power", g.to_string());
            if let Some(n) = frames {
                inv = inv.arg("frames", n);
            }
            cmd_simulate(&file, &g, seed, &inv)?
        }
        Command::Metrics { power } => {
            let g = grid(&file, power)?;
            let inv = Invocation::new("metrics", path, seed, format).arg("power", g.to_string());
            cmd_metrics(&file, &g, &inv)?
        }
        Command::Maxrate => cmd_maxrate(&file, &Invocation::new("maxrate", path, seed, format))?,
        Command::Pmf {
            kind,
            photons,
            samples,
        } => {
            let kind = kind.map_or(file.pmf.kind, DeadTimeKind::from);
            let photons = photons.unwrap_or(file.pmf.incident_photons);
            let samples = samples.unwrap_or(file.pmf.samples);
            if samples == 0 {
                return Err(Error::Config {
                    key: "--samples".into(),
                    message: "must be at least 1".into(),
                });
            }
            let inv = Invocation::new("pmf", path, seed, format)
                .arg("kind", kind)
                .arg("photons", photons)
                .arg("samples", samples);
            cmd_pmf(&file, kind, photons, samples, seed, &inv)?
        }
    };
    Ok(table.render(format))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    match run(cli) {
        Ok(text) => {
            let written = match &out {
                Some(p) => std::fs::write(p, text.as_bytes()),
                None => std::io::stdout().lock().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
