use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;
use tracethresh::exp_analysis::CritCase;
use tracethresh::rng::with_thread_cap;
use tracethresh::{DelayCoupling, DistributionSpec};
use tracethresh_cli::config::{overlay_file, parse_grid, Axis, SweepAxis};
use tracethresh_cli::presets;
use tracethresh_cli::run::run;
use tracethresh_cli::table::{write_outputs, Sidecar};
use tracethresh_cli::{CliError, Command, ExperimentConfig, Preset};

/// Threshold parameters and extinction probabilities for epidemics with
/// delayed contact tracing.
///
/// Inputs are rescaled so that the mean infectious period is 1; sweep grids
/// are read in those units. Distribution flags take `zero`, `const:V`,
/// `exp:RATE`, `exp-mean:MEAN` or `gamma:MEAN:SHAPE`.
#[derive(Debug, Parser)]
#[command(name = "tracethresh", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config, or a sidecar from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of simulated replicates.
    #[arg(long)]
    n: Option<usize>,
    /// CSV output; a JSON sidecar is written next to it. Without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest final size counted as a minor outbreak.
    #[arg(long)]
    cutoff: Option<u64>,
    /// independent or mutual
    #[arg(long)]
    coupling: Option<DelayCoupling>,
    /// Offspring count at which a cluster is declared infinite; 0 disables.
    #[arg(long)]
    inf_threshold: Option<u64>,
    /// const-r0, const-ru or exp-ru
    #[arg(long)]
    case: Option<CritCase>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    pi_r: Option<f64>,
    #[arg(long)]
    pi_t: Option<f64>,
    #[arg(long)]
    infectious: Option<DistributionSpec>,
    #[arg(long)]
    latent: Option<DistributionSpec>,
    #[arg(long)]
    delay: Option<DistributionSpec>,
    /// Initial susceptibles.
    #[arg(long)]
    population: Option<u64>,
    /// Initial infectives.
    #[arg(long)]
    initial: Option<u64>,
    /// Parameter to sweep, e.g. lambda, p, delay_mean.
    #[arg(long)]
    axis: Option<String>,
    /// start:stop:step or a comma-separated list.
    #[arg(long)]
    grid: Option<String>,
}

fn preset_in_file(file: &Value) -> Option<Preset> {
    let v = file.get("config").unwrap_or(file).get("preset")?;
    serde_json::from_value(v.clone()).ok()
}

fn resolve(args: Args) -> Result<ExperimentConfig, CliError> {
    let file = match &args.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let file_preset = match &file {
        Some(text) => {
            let v: Value =
                serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config file: {e}")))?;
            preset_in_file(&v)
        }
        None => None,
    };
    let mut c = match args.preset.or(file_preset) {
        Some(p) => presets::base(p),
        None => ExperimentConfig::default(),
    };
    // Outside `reproduce` a preset supplies parameters only.
    if args.command != Command::Reproduce && file_preset.is_none() {
        c.sweep_axis = None;
    }
    if let Some(text) = &file {
        c = overlay_file(&c, text)?;
    }
    if args.preset.is_some() {
        c.preset = args.preset;
    }
    c.command = args.command;
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = args.n {
        c.n_replicates = v;
    }
    if args.out.is_some() {
        c.output_path = args.out;
    }
    if args.cutoff.is_some() {
        c.cutoff = args.cutoff;
    }
    if let Some(v) = args.coupling {
        c.params.delay_coupling = v;
    }
    if let Some(v) = args.inf_threshold {
        c.inf_threshold = (v > 0).then_some(v);
    }
    if let Some(v) = args.case {
        c.case = v;
    }
    let p = &mut c.params;
    if let Some(v) = args.lambda {
        p.contact_rate = v;
    }
    if let Some(v) = args.p {
        p.naming_prob = v;
    }
    if let Some(v) = args.pi_r {
        p.interview_natural = v;
    }
    if let Some(v) = args.pi_t {
        p.interview_traced = v;
    }
    if let Some(v) = args.infectious {
        p.infectious = v;
    }
    if let Some(v) = args.latent {
        p.latent = v;
    }
    if let Some(v) = args.delay {
        p.delay = v;
    }
    if let Some(v) = args.population {
        p.population = v;
    }
    if let Some(v) = args.initial {
        p.initial_infectives = v;
    }
    match (args.axis, args.grid) {
        (Some(axis), Some(grid)) => {
            c.sweep_axis = Some(SweepAxis {
                parameter: axis.parse::<Axis>()?,
                grid: parse_grid(&grid)?,
            })
        }
        (None, Some(grid)) => match &mut c.sweep_axis {
            Some(a) => a.grid = parse_grid(&grid)?,
            None => return Err(CliError::Validation("--grid needs --axis".into())),
        },
        (Some(_), None) => return Err(CliError::Validation("--axis needs --grid".into())),
        (None, None) => {}
    }
    Ok(c)
}

fn execute(args: Args) -> Result<(), CliError> {
    let config = resolve(args)?;
    let outcome = with_thread_cap(|| run(&config))?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    match &config.output_path {
        Some(path) => {
            let sidecar = Sidecar {
                config: &config,
                seed: config.seed,
                version: tracethresh::VERSION,
                time_scale: outcome.time_scale,
                normalized_params: outcome.normalized,
                columns: &outcome.table.header,
                summary: outcome.table.summary.as_ref(),
            };
            write_outputs(path, &outcome.table, &sidecar)
        }
        None => {
            print!("{}", outcome.table.to_csv());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
