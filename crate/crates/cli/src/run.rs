//! Dispatch of an experiment to the analytic layers and simulators.

use rayon::prelude::*;
use serde_json::json;
use tracethresh::bp_sim::{estimate_extinction, BpConfig};
use tracethresh::const_analysis::ConstModel;
use tracethresh::epi_sim::{final_size_distribution, FinalSizeHistogram};
use tracethresh::exp_analysis::{lambda_crit, lambda_star_exp, CritCase, ExpModel};
use tracethresh::{DistributionSpec, ModelParams};

use crate::config::{Axis, Command, ExperimentConfig};
use crate::error::CliError;
use crate::presets;
use crate::table::{Cell, Table};

/// Outcome of one experiment, in units of the mean infectious period.
pub struct Outcome {
    pub table: Table,
    pub time_scale: f64,
    pub normalized: ModelParams,
    pub warnings: Vec<String>,
}

/// Seed of the `index`-th grid point or table cell; index 0 keeps `seed`.
pub fn cell_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn bp_config(config: &ExperimentConfig) -> BpConfig {
    BpConfig {
        inf_threshold: config.inf_threshold,
        ..BpConfig::default()
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    config.params.validate()?;
    if config.n_replicates == 0 && matches!(config.command, Command::SimBdp | Command::SimEpidemic) {
        return Err(CliError::Validation("--n must be positive".into()));
    }
    let (normalized, time_scale) = config.params.normalized();
    let mut warnings = vec![];
    let table = match config.command {
        Command::Reproduce => {
            let preset = config
                .preset
                .ok_or_else(|| CliError::Validation("reproduce needs --preset".into()))?;
            presets::reproduce(preset, config, &normalized, &mut warnings)?
        }
        Command::SimEpidemic if config.sweep_axis.is_none() => {
            let hist = final_size_distribution(&normalized, config.n_replicates, config.seed)?;
            let mut t = histogram_table(&hist, None);
            t.summary = Some(classification(&hist, config.cutoff, &mut warnings));
            t
        }
        command => point_table(command, config, &normalized, &mut warnings)?,
    };
    Ok(Outcome {
        table,
        time_scale,
        normalized,
        warnings,
    })
}

/// Histogram rows from the smallest attainable size up, optionally prefixed by the population.
pub fn histogram_table(hist: &FinalSizeHistogram, population: Option<u64>) -> Table {
    let mut t = match population {
        Some(_) => Table::new(&["population", "final_size", "count"]),
        None => Table::new(&["final_size", "count"]),
    };
    append_histogram(&mut t, hist, population);
    t
}

pub fn append_histogram(t: &mut Table, hist: &FinalSizeHistogram, population: Option<u64>) {
    for (k, &c) in hist.counts.iter().enumerate().skip(hist.initial_infectives as usize) {
        let mut row: Vec<Cell> = population.map(Cell::Int).into_iter().collect();
        row.extend([Cell::Int(k as u64), Cell::Int(c)]);
        t.push(row);
    }
}

/// Minor-outbreak summary; a histogram without a clear valley gives nulls and a warning.
pub fn classification(hist: &FinalSizeHistogram, cutoff: Option<u64>, warnings: &mut Vec<String>) -> serde_json::Value {
    match hist.classify(cutoff) {
        Ok(e) => json!({ "n": e.n, "cutoff": e.cutoff, "p_minor": e.p_minor, "se": e.se }),
        Err(err) => {
            warnings.push(format!(
                "population {}: {err}; pass --cutoff to classify",
                hist.population
            ));
            json!({ "n": hist.n, "cutoff": null, "p_minor": null, "se": null })
        }
    }
}

fn columns(command: Command, params: &ModelParams) -> Result<&'static [&'static str], CliError> {
    Ok(match command {
        Command::AnalyzeConst => &[
            "r0",
            "r_u",
            "lambda_star",
            "m_uu",
            "m_un",
            "m_nu",
            "m_nn",
            "p_untraced",
            "p_traced_latent",
            "q_unnamed",
            "q_named",
            "p_ext",
        ],
        Command::AnalyzeExp => &["y_star", "denominator", "r_u", "lambda_star", "finite"],
        Command::LambdaCrit => &["lambda_crit"],
        Command::LambdaStar => &["lambda_star"],
        Command::SimBdp => &["n", "q", "p_ext", "se", "p_inf"],
        Command::SimEpidemic => &["cutoff", "p_minor", "se"],
        Command::Sweep => match params.infectious {
            DistributionSpec::Exponential { .. } => &["y_star", "r_u", "lambda_star", "lambda_crit"],
            DistributionSpec::Constant { .. } => &["r0", "r_u", "p_ext", "lambda_star", "lambda_crit"],
            _ => {
                return Err(CliError::Validation(
                    "sweep needs an exponential or constant infectious period".into(),
                ))
            }
        },
        Command::Reproduce => unreachable!("handled by presets"),
    })
}

fn point_table(
    command: Command,
    config: &ExperimentConfig,
    normalized: &ModelParams,
    warnings: &mut Vec<String>,
) -> Result<Table, CliError> {
    if command == Command::Sweep && config.sweep_axis.is_none() {
        return Err(CliError::Validation("sweep needs --axis and --grid".into()));
    }
    let points: Vec<(Option<f64>, ModelParams)> = match &config.sweep_axis {
        Some(axis) => axis
            .grid
            .iter()
            .map(|&v| {
                let p = axis.parameter.apply(normalized, v)?;
                p.validate()?;
                Ok((Some(v), p))
            })
            .collect::<Result<_, CliError>>()?,
        None => vec![(None, *normalized)],
    };
    let mut header: Vec<&str> = config.sweep_axis.iter().map(|a| a.parameter.name()).collect();
    header.extend(columns(command, normalized)?);
    let mut table = Table::new(&header);

    let simulated = matches!(command, Command::SimBdp | Command::SimEpidemic);
    let rows: Vec<Vec<Cell>> = if simulated {
        // Replicates already run in parallel; grid points go one at a time.
        points
            .iter()
            .enumerate()
            .map(|(i, (_, p))| simulate(command, config, p, cell_seed(config.seed, i), warnings))
            .collect::<Result<_, _>>()?
    } else {
        points
            .par_iter()
            .map(|(_, p)| analyze(command, config.case, p))
            .collect::<Result<_, _>>()?
    };
    let counts = matches!(
        config.sweep_axis.as_ref().map(|a| a.parameter),
        Some(Axis::Population | Axis::InitialInfectives)
    );
    for ((value, _), cells) in points.iter().zip(rows) {
        let mut row: Vec<Cell> = value
            .map(|v| if counts { Cell::Int(v as u64) } else { Cell::Float(v) })
            .into_iter()
            .collect();
        row.extend(cells);
        table.push(row);
    }
    Ok(table)
}

fn lambda_star(params: &ModelParams, case: CritCase) -> Result<f64, CliError> {
    Ok(match case {
        CritCase::ExpRu => lambda_star_exp(params)?,
        CritCase::ConstR0 | CritCase::ConstRu => ConstModel::new(params)?.lambda_star(),
    })
}

fn analyze(command: Command, case: CritCase, p: &ModelParams) -> Result<Vec<Cell>, CliError> {
    Ok(match command {
        Command::AnalyzeConst => {
            let m = ConstModel::new(p)?;
            let mm = m.mean_matrix();
            let fates = m.fate_probs();
            let ext = m.extinction()?;
            [
                m.r0(),
                m.ru(),
                m.lambda_star(),
                mm.uu,
                mm.un,
                mm.nu,
                mm.nn,
                fates.untraced,
                fates.traced_latent,
                ext.from_unnamed,
                ext.from_named,
                ext.outbreak,
            ]
            .map(Cell::Float)
            .to_vec()
        }
        Command::AnalyzeExp => {
            let m = ExpModel::new(p)?;
            let r = m.analyze();
            vec![
                r.y_star.into(),
                m.trace_point().denominator.into(),
                r.r_u.into(),
                r.lambda_star.into(),
                Cell::Int(r.finite as u64),
            ]
        }
        Command::LambdaCrit => vec![lambda_crit(p, case)?.into()],
        Command::LambdaStar => vec![lambda_star(p, case)?.into()],
        Command::Sweep => match p.infectious {
            DistributionSpec::Exponential { .. } => {
                let r = ExpModel::new(p)?.analyze();
                vec![
                    r.y_star.into(),
                    r.r_u.into(),
                    r.lambda_star.into(),
                    lambda_crit(p, CritCase::ExpRu)?.into(),
                ]
            }
            _ => {
                let m = ConstModel::new(p)?;
                vec![
                    m.r0().into(),
                    m.ru().into(),
                    m.extinction()?.outbreak.into(),
                    m.lambda_star().into(),
                    lambda_crit(p, CritCase::ConstRu)?.into(),
                ]
            }
        },
        _ => unreachable!("simulation commands are dispatched separately"),
    })
}

fn simulate(
    command: Command,
    config: &ExperimentConfig,
    p: &ModelParams,
    seed: u64,
    warnings: &mut Vec<String>,
) -> Result<Vec<Cell>, CliError> {
    let n = config.n_replicates;
    Ok(match command {
        Command::SimBdp => {
            let e = estimate_extinction(p, &bp_config(config), n, seed)?;
            vec![(e.n as u64).into(), e.q.into(), e.p_ext.into(), e.se.into(), e.p_inf.into()]
        }
        Command::SimEpidemic => {
            let hist = final_size_distribution(p, n, seed)?;
            let s = classification(&hist, config.cutoff, warnings);
            vec![
                s["cutoff"].as_u64().map_or(Cell::Text(String::new()), Cell::Int),
                s["p_minor"].as_f64().unwrap_or(f64::NAN).into(),
                s["se"].as_f64().unwrap_or(f64::NAN).into(),
            ]
        }
        _ => unreachable!("analytic commands are dispatched separately"),
    })
}
