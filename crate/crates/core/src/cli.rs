//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, render_config, ConfigFile};
use crate::ecology::{steady_state_run, FIELD_NAMES};
use crate::error::Error;
use crate::experiments::{
    infection_sweep, run_replicates, scenario_name, scenario_suite, sensitivity_sweep, summarize,
    without_harvest, Metric, SweepParam, SweepSpec, NO_PARAM,
};
use crate::output::{
    write_infection_sweep_csv, write_replicates_csv, write_steady_state_csv, write_summary_csv,
};
use crate::plot::{emit_svg, FigureSpec, GroupKey, DEFAULT_PANELS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "schisto",
    version,
    about = "Coupled household economics and schistosomiasis ecology simulator"
)]
struct Cli {
    /// Worker threads for replicate execution (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo runs: the six-cell scenario suite, or one cell when
    /// --land or --no-harvest is given.
    Run(RunArgs),
    /// Sensitivity sweep over one parameter at 2 ha with harvest.
    Sweep(SweepArgs),
    /// First-year fertilizer use across starting infection prevalences.
    InfectionSweep(InfectionArgs),
    /// Ecology-only run checking that the populations have settled.
    SteadyState(SteadyArgs),
    /// Render a summary CSV as an SVG figure.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file; absent keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides `seed` in [simulation]).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Replicates per cell (overrides `replicates` in [experiment]).
    #[arg(long)]
    reps: Option<usize>,
    /// Single cell without vegetation harvest.
    #[arg(long)]
    no_harvest: bool,
    /// Single cell at this land endowment (ha).
    #[arg(long)]
    land: Option<f64>,
    #[arg(long)]
    years: Option<u32>,
    /// Also write every replicate's yearly records.
    #[arg(long)]
    per_replicate: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_sweep_param)]
    param: SweepParam,
    /// Comma-separated values (defaults to the configured grid).
    #[arg(long, value_parser = parse_list)]
    values: Option<NumberList>,
    /// Replicates per value (overrides `sweep_replicates`).
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    years: Option<u32>,
}

#[derive(Debug, Args)]
struct InfectionArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated starting prevalences (defaults to the configured grid).
    #[arg(long, value_parser = parse_list)]
    grid: Option<NumberList>,
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Debug, Args)]
struct SteadyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    years: u32,
    /// Directory for the sampled trajectories (`steady_state.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    summary: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated outcomes, one panel each.
    #[arg(long, value_delimiter = ',')]
    panels: Option<Vec<String>>,
    /// Series grouping: cell, scenario, land or param.
    #[arg(long, default_value = "cell")]
    group_by: String,
}

fn parse_sweep_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A whole comma-separated list in one argument. The alias stops clap from
/// treating the field as a repeated flag.
type NumberList = Vec<f64>;

fn parse_list(s: &str) -> Result<NumberList, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("`{t}` is not a number"))
        })
        .collect()
}

/// A failure with the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::Config { .. }
            | Error::InvalidParams(_)
            | Error::UnknownOutcome { .. }
            | Error::SummaryFormat { .. }
            | Error::File { .. } => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, Failure> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| Error::File {
                path: p.to_path_buf(),
                source,
            })?;
            parse_config(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure {
        code: EXIT_RUNTIME,
        message: format!("{}: {e}", path.display()),
    })
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure {
        code: EXIT_RUNTIME,
        message: format!("{}: {e}", dir.display()),
    })
}

fn apply_common(cfg: &mut ConfigFile, common: &Common) {
    if let Some(seed) = common.seed {
        cfg.sim.seed = seed;
    }
}

fn positive(reps: usize) -> Result<usize, Failure> {
    if reps == 0 {
        Err(Failure::usage("--reps must be >= 1"))
    } else {
        Ok(reps)
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(args.common.config.as_deref())?;
    apply_common(&mut cfg, &args.common);
    if let Some(reps) = args.reps {
        cfg.experiment.replicates = positive(reps)?;
    }
    if let Some(years) = args.years {
        cfg.sim.years = years;
    }
    let single = args.no_harvest || args.land.is_some();
    if let Some(land) = args.land {
        cfg.sim.land_ha = land;
    }
    if args.no_harvest {
        cfg.sim = without_harvest(&cfg.sim);
    }
    cfg.sim.validate()?;
    let reps = cfg.experiment.replicates;
    let seed = cfg.sim.seed;
    prepare_out(&args.common.out)?;

    let summaries = if single || args.per_replicate {
        let cells = if single {
            vec![cfg.sim]
        } else {
            crate::experiments::LAND_ENDOWMENTS
                .iter()
                .flat_map(|&land| {
                    let c = crate::coupling::SimConfig {
                        land_ha: land,
                        allow_harvest: true,
                        ..cfg.sim
                    };
                    [c, without_harvest(&c)]
                })
                .collect()
        };
        let mut out = Vec::new();
        for cell in cells {
            let runs = run_replicates(&cell, reps, seed)?;
            if args.per_replicate {
                let mut buf = Vec::new();
                write_replicates_csv(&runs, &mut buf)?;
                let name = format!("replicates_{}_{}ha.csv", scenario_name(&cell), cell.land_ha);
                write_file(&args.common.out.join(name), &buf)?;
            }
            out.push(summarize(scenario_name(&cell), NO_PARAM, 0.0, &runs)?);
        }
        out
    } else {
        scenario_suite(&cfg.sim, reps, seed)?
    };

    let mut buf = Vec::new();
    write_summary_csv(&summaries, &mut buf)?;
    write_file(&args.common.out.join("summary.csv"), &buf)?;
    write_file(
        &args.common.out.join("effective_config.txt"),
        render_config(&cfg).as_bytes(),
    )?;
    eprintln!(
        "wrote {} cells x {} replicates to {}",
        summaries.len(),
        reps,
        args.common.out.display()
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let mut cfg = load_config(args.common.config.as_deref())?;
    apply_common(&mut cfg, &args.common);
    if let Some(reps) = args.reps {
        cfg.experiment.sweep_replicates = positive(reps)?;
    }
    if let Some(years) = args.years {
        cfg.sim.years = years;
    }
    let values = args
        .values
        .clone()
        .unwrap_or_else(|| cfg.experiment.sweep_values(args.param).to_vec());
    let spec = SweepSpec {
        param: args.param,
        values,
        base: cfg.sim,
        replicates: cfg.experiment.sweep_replicates,
        master_seed: cfg.sim.seed,
    };
    prepare_out(&args.common.out)?;
    let summaries = sensitivity_sweep(&spec)?;
    let mut buf = Vec::new();
    write_summary_csv(&summaries, &mut buf)?;
    write_file(&args.common.out.join("summary.csv"), &buf)?;
    write_file(
        &args.common.out.join("effective_config.txt"),
        render_config(&cfg).as_bytes(),
    )?;
    Ok(())
}

fn cmd_infection(args: &InfectionArgs) -> Result<(), Failure> {
    let mut cfg = load_config(args.common.config.as_deref())?;
    apply_common(&mut cfg, &args.common);
    if let Some(reps) = args.reps {
        cfg.experiment.sweep_replicates = positive(reps)?;
    }
    let grid = args
        .grid
        .clone()
        .unwrap_or_else(|| cfg.experiment.prevalence_grid.clone());
    let reps = cfg.experiment.sweep_replicates;
    prepare_out(&args.common.out)?;
    let points = infection_sweep(&cfg.sim, &grid, reps, cfg.sim.seed)?;
    let mut buf = Vec::new();
    write_infection_sweep_csv(&points, reps, &mut buf)?;
    write_file(&args.common.out.join("infection_sweep.csv"), &buf)?;
    write_file(
        &args.common.out.join("effective_config.txt"),
        render_config(&cfg).as_bytes(),
    )?;
    for p in &points {
        println!(
            "prevalence {:<4} median fert_per_ha {}",
            p.prevalence, p.fert.median
        );
    }
    Ok(())
}

fn cmd_steady(args: &SteadyArgs) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    if args.years == 0 {
        return Err(Failure::usage("--years must be >= 1"));
    }
    let report = steady_state_run(&cfg.sim.eco, &cfg.sim.initial_state(), args.years, cfg.sim.dt)?;
    println!("years {}", args.years);
    println!("final_prevalence {}", report.final_prevalence);
    for (name, drift) in FIELD_NAMES.iter().zip(report.final_year_drift) {
        println!("drift {name} {drift}");
    }
    println!("clamps {}", report.clamps);
    println!("steady {}", report.steady);
    if let Some(dir) = &args.out {
        prepare_out(dir)?;
        let mut buf = Vec::new();
        write_steady_state_csv(&report, &mut buf)?;
        write_file(&dir.join("steady_state.csv"), &buf)?;
    }
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<(), Failure> {
    let panels = match &args.panels {
        None => DEFAULT_PANELS.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| n.trim().parse::<Metric>())
            .collect::<Result<Vec<_>, _>>()?,
    };
    let spec = FigureSpec {
        summary: args.summary.clone(),
        panels,
        group_by: args.group_by.parse::<GroupKey>()?,
        out: args.out.clone(),
    };
    let svg = emit_svg(&spec)?;
    write_file(&spec.out, svg.as_bytes())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::InfectionSweep(a) => cmd_infection(a),
        Command::SteadyState(a) => cmd_steady(a),
        Command::Plot(a) => cmd_plot(a),
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code:
/// 0 on success, 1 for usage and input errors, 2 for runtime failures.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Failure::usage("--threads must be >= 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Failure {
                code: EXIT_RUNTIME,
                message: format!("cannot start {n} threads: {e}"),
            }),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(std::io::stderr(), "error: {}", f.message);
            f.code
        }
    }
}
