//! `leaky-well`: survival, current, pole and Zeno data as CSV or JSON.
//!
//! Exit codes: 0 success, 2 usage or domain error, 3 numerical failure.

mod commands;
mod grid;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use leaky_well::quad::QuadSettings;
use leaky_well::resonances::PoleCache;
use leaky_well::{Definition, Method, ModelConfig};

use commands::{Output, SurvivalRequest};
use grid::{parse_grid, parse_list};
use output::{write_all, Artifact, Format};

/// Default pole cache location when `--cache` is not given.
const CACHE_ENV: &str = "LEAKY_WELL_CACHE";

#[derive(Parser)]
#[command(name = "leaky-well", version, about = "Decay of a particle from a wall-plus-delta-barrier well")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,

    /// Output file; a `<file>.manifest.json` is written beside it. Stdout if absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Pole cache file.
    #[arg(long, global = true, env = CACHE_ENV)]
    cache: Option<PathBuf>,

    /// Worker threads for grid evaluation (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Barrier strength.
    #[arg(long = "G", short = 'G', default_value_t = 6.0, allow_negative_numbers = true)]
    g: f64,
    /// Mode index of the initial state.
    #[arg(long, short, default_value_t = 1, allow_negative_numbers = true)]
    n: i64,
}

impl ModelArgs {
    fn config(&self) -> Result<ModelConfig> {
        Ok(leaky_well::make_config(self.g, self.n, false)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Resonance poles with lifetimes and energies.
    Table1 {
        /// Comma-separated barrier strengths.
        #[arg(long = "G", short = 'G', default_value = "1,6,20", allow_hyphen_values = true)]
        strengths: String,
        /// Poles per strength.
        #[arg(long, default_value_t = 4)]
        poles: usize,
    },
    /// Survival probability on a time grid.
    Survival {
        #[command(flatten)]
        model: ModelArgs,
        /// Time grid `start:end:step`.
        #[arg(long, short)]
        t: String,
        /// `in-well` or `overlap`.
        #[arg(long, default_value = "in-well")]
        definition: String,
        /// `auto`, `quadrature`, `poles`, `hybrid` or `asymptotic`.
        #[arg(long, default_value = "auto")]
        method: String,
        /// Poles used by the pole and hybrid methods.
        #[arg(long, default_value_t = 4)]
        poles: usize,
        /// Absolute tolerance of the momentum quadrature.
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Maximum quadrature panels per momentum integral.
        #[arg(long, default_value_t = 400_000)]
        panel_budget: usize,
    },
    /// Probability current at the barrier and the probability that has left.
    Current {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, short)]
        t: String,
        /// Absolute tolerance on the accumulated outflow.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
    /// Survival under repeated measurement at each interval up to a horizon.
    Zeno {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated measurement intervals.
        #[arg(long, default_value = "0.1,0.5,1")]
        intervals: String,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
    },
    /// Data series behind figures 1 to 6, one file per figure.
    Figures {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated figure numbers.
        #[arg(long, default_value = "1,2,3,4,5,6")]
        figure: String,
        #[arg(long)]
        out_dir: PathBuf,
        /// Time grid overriding each figure's default.
        #[arg(long, short)]
        t: Option<String>,
    },
    /// Physical mass, width, barrier strength and time to dimensionless `G`, `T` (hbar = 1).
    Convert {
        #[arg(long)]
        mass: f64,
        #[arg(long)]
        width: f64,
        #[arg(long)]
        strength: f64,
        #[arg(long)]
        time: f64,
    },
}

fn parse_figures(text: &str) -> Result<Vec<u32>> {
    let mut ids = Vec::new();
    for part in text.split(',') {
        match part.trim().parse::<u32>() {
            Ok(id @ 1..=6) => ids.push(id),
            _ => bail!("unknown figure '{part}'; expected 1 to 6"),
        }
    }
    Ok(ids)
}

fn emit(cli: &Cli, name: &str, out: Output) -> Result<()> {
    match &cli.output {
        Some(path) => write_all(&[Artifact::new(name, out.parameters, path.clone(), &out.table, cli.format)]),
        None => {
            print!("{}", out.table.render(cli.format));
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut cache = match &cli.cache {
        Some(path) => PoleCache::open(path)?,
        None => PoleCache::in_memory(),
    };
    match &cli.command {
        Command::Table1 { strengths, poles } => {
            let strengths = parse_list(strengths)?;
            let out = commands::table1(&strengths, *poles, &mut cache)?;
            emit(cli, "table1", out)?;
        }
        Command::Survival { model, t, definition, method, poles, tol, panel_budget } => {
            let grid = parse_grid(t)?;
            let request = SurvivalRequest {
                config: model.config()?,
                grid: &grid,
                definition: definition.parse::<Definition>()?,
                method: method.parse::<Method>()?,
                n_poles: *poles,
                settings: QuadSettings { panel_budget: *panel_budget, ..QuadSettings::default().with_tol(*tol) },
            };
            request.settings.validate(&request.config)?;
            let (out, warnings) = commands::survival(&request, t, &mut cache)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            emit(cli, "survival", out)?;
        }
        Command::Current { model, t, tol } => {
            let grid = parse_grid(t)?;
            let out = commands::current(&model.config()?, &grid, t, *tol, &QuadSettings::default())?;
            emit(cli, "current", out)?;
        }
        Command::Zeno { model, intervals, horizon } => {
            let out = commands::zeno(&model.config()?, &parse_list(intervals)?, *horizon)?;
            emit(cli, "zeno", out)?;
        }
        Command::Figures { model, figure, out_dir, t } => {
            let config = model.config()?;
            let mut artifacts = Vec::new();
            for id in parse_figures(figure)? {
                let text = t.clone().unwrap_or_else(|| commands::figure_grid(id).to_string());
                let grid = parse_grid(&text)?;
                let out = commands::figure(id, &config, &grid, &text, &mut cache)?;
                let path = out_dir.join(format!("figure{id}.{}", cli.format.extension()));
                artifacts.push(Artifact::new("figures", out.parameters, path, &out.table, cli.format));
            }
            std::fs::create_dir_all(out_dir)?;
            write_all(&artifacts)?;
        }
        Command::Convert { mass, width, strength, time } => {
            emit(cli, "convert", commands::convert(*mass, *width, *strength, *time)?)?;
        }
    }
    cache.save()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|c| c.downcast_ref::<leaky_well::Error>().is_some_and(|e| e.is_numerical()));
    if numerical {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
