//! Published experiment set-ups. Every preset uses a unit mean infectious period.

use rayon::prelude::*;
use serde_json::json;
use tracethresh::bp_sim::estimate_extinction;
use tracethresh::epi_sim::final_size_distribution;
use tracethresh::exp_analysis::{lambda_crit, CritCase, ExpModel};
use tracethresh::{DelayCoupling, DistributionSpec, ModelParams};

use crate::config::{linspace_step, Axis, Command, ExperimentConfig, Preset, SweepAxis};
use crate::error::CliError;
use crate::run::{append_histogram, bp_config, cell_seed, classification};
use crate::table::{Cell, Table};

/// Naming probabilities shown in the critical-rate panels.
const PANEL_NAMING: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Law families compared in the critical-rate panels: gamma shape, or `None` for a point mass.
const FAMILIES: [(&str, Option<f64>); 4] = [
    ("exponential", Some(1.0)),
    ("gamma2", Some(2.0)),
    ("gamma5", Some(5.0)),
    ("constant", None),
];

fn family_law(shape: Option<f64>, mean: f64) -> DistributionSpec {
    match shape {
        Some(k) if k == 1.0 => DistributionSpec::exponential_mean(mean),
        Some(k) => DistributionSpec::gamma(mean, k),
        None => DistributionSpec::constant(mean),
    }
}

fn outbreak_params(infectious: DistributionSpec) -> ModelParams {
    ModelParams {
        contact_rate: 2.0,
        naming_prob: 0.5,
        interview_natural: 0.8,
        interview_traced: 0.8,
        infectious,
        latent: DistributionSpec::exponential(1.0),
        delay: DistributionSpec::exponential(1.0),
        population: 200,
        initial_infectives: 1,
        delay_coupling: DelayCoupling::Independent,
    }
}

fn axis(parameter: Axis, grid: Vec<f64>) -> Option<SweepAxis> {
    Some(SweepAxis { parameter, grid })
}

/// Configuration a preset starts from, before files and flags are applied.
pub fn base(preset: Preset) -> ExperimentConfig {
    let exp1 = DistributionSpec::exponential(1.0);
    let d = ExperimentConfig {
        command: Command::Reproduce,
        preset: Some(preset),
        ..Default::default()
    };
    match preset {
        Preset::Fig3 => ExperimentConfig {
            params: ModelParams {
                contact_rate: 1.0,
                naming_prob: 1.0,
                interview_natural: 1.0,
                interview_traced: 0.0,
                infectious: exp1,
                latent: DistributionSpec::Zero,
                delay: DistributionSpec::exponential(0.7),
                ..Default::default()
            },
            sweep_axis: axis(Axis::ContactRate, linspace_step(0.0, 2.1, 0.005)),
            ..d
        },
        Preset::Fig4 | Preset::Fig5 => ExperimentConfig {
            params: outbreak_params(if preset == Preset::Fig4 {
                exp1
            } else {
                DistributionSpec::constant(1.0)
            }),
            sweep_axis: axis(Axis::Population, vec![20.0, 50.0, 100.0, 200.0]),
            ..d
        },
        Preset::Fig6 => ExperimentConfig {
            params: outbreak_params(exp1),
            sweep_axis: axis(Axis::Population, vec![50.0, 100.0, 200.0, 400.0, 800.0, 1400.0, 2000.0]),
            ..d
        },
        Preset::Fig7a => ExperimentConfig {
            params: ModelParams {
                contact_rate: 1.0,
                naming_prob: 1.0,
                interview_natural: 0.8,
                interview_traced: 0.8,
                infectious: exp1,
                latent: exp1,
                delay: DistributionSpec::exponential_mean(0.5),
                ..Default::default()
            },
            sweep_axis: axis(Axis::LatentMean, linspace_step(0.0, 2.5, 0.1)),
            ..d
        },
        Preset::Fig7b => ExperimentConfig {
            params: ModelParams {
                contact_rate: 1.0,
                naming_prob: 1.0,
                interview_natural: 1.0,
                interview_traced: 0.0,
                infectious: DistributionSpec::constant(1.0),
                latent: DistributionSpec::exponential_mean(0.5),
                delay: exp1,
                ..Default::default()
            },
            sweep_axis: axis(Axis::DelayMean, linspace_step(0.0, 2.5, 0.1)),
            case: CritCase::ConstRu,
            ..d
        },
        Preset::Fig8 => ExperimentConfig {
            params: ModelParams {
                contact_rate: 1.0,
                naming_prob: 1.0,
                interview_natural: 0.8,
                interview_traced: 0.8,
                infectious: exp1,
                latent: DistributionSpec::exponential_mean(0.10),
                delay: DistributionSpec::exponential_mean(0.5),
                ..Default::default()
            },
            sweep_axis: axis(Axis::NamingProb, linspace_step(0.0, 1.0, 0.05)),
            ..d
        },
        Preset::Table2 => ExperimentConfig {
            params: ModelParams {
                contact_rate: 1.5,
                naming_prob: 1.0,
                interview_natural: 0.8,
                interview_traced: 0.8,
                infectious: exp1,
                latent: exp1,
                delay: exp1,
                ..Default::default()
            },
            sweep_axis: axis(Axis::DelayMean, linspace_step(0.0, 5.0, 0.5)),
            ..d
        },
    }
}

fn grid(config: &ExperimentConfig, expected: Axis) -> Result<&[f64], CliError> {
    match &config.sweep_axis {
        Some(a) if a.parameter == expected => Ok(&a.grid),
        _ => Err(CliError::Validation(format!("this preset sweeps {}", expected.name()))),
    }
}

fn populations(config: &ExperimentConfig) -> Result<Vec<u64>, CliError> {
    grid(config, Axis::Population)?
        .iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(CliError::Validation(format!("population must be a positive whole number, got {v}")))
            }
        })
        .collect()
}

/// Rows of `(labels..., grid value, lambda_crit)` computed in parallel.
fn crit_rows(cells: Vec<(Vec<Cell>, ModelParams)>, case: CritCase) -> Result<Vec<Vec<Cell>>, CliError> {
    cells
        .into_par_iter()
        .map(|(mut labels, p)| {
            labels.push(lambda_crit(&p, case)?.into());
            Ok(labels)
        })
        .collect()
}

pub fn reproduce(
    preset: Preset,
    config: &ExperimentConfig,
    base: &ModelParams,
    warnings: &mut Vec<String>,
) -> Result<Table, CliError> {
    let n = config.n_replicates;
    if n == 0 && matches!(preset, Preset::Fig4 | Preset::Fig5 | Preset::Fig6 | Preset::Table2) {
        return Err(CliError::Validation("--n must be positive".into()));
    }
    match preset {
        Preset::Fig3 => {
            let m = ExpModel::new(base)?;
            let star = m.lambda_star();
            let mut t = Table::new(&["lambda", "y_star", "denominator", "r_u"]);
            for &lambda in grid(config, Axis::ContactRate)? {
                let tp = m.with_contact_rate(lambda).trace_point();
                let (y_star, r_u) = if lambda < star {
                    (tp.y_star, tp.r_u_series)
                } else {
                    (f64::INFINITY, f64::INFINITY)
                };
                t.push(vec![lambda.into(), y_star.into(), tp.denominator.into(), r_u.into()]);
            }
            t.summary = Some(json!({ "lambda_star": star }));
            Ok(t)
        }
        Preset::Fig4 | Preset::Fig5 => {
            let mut t = Table::new(&["population", "final_size", "count"]);
            let mut summary = vec![];
            for (i, pop) in populations(config)?.into_iter().enumerate() {
                let p = ModelParams {
                    population: pop,
                    ..*base
                };
                let hist = final_size_distribution(&p, n, cell_seed(config.seed, i))?;
                append_histogram(&mut t, &hist, Some(pop));
                let mut s = classification(&hist, config.cutoff, warnings);
                s["population"] = json!(pop);
                summary.push(s);
            }
            t.summary = Some(json!(summary));
            Ok(t)
        }
        Preset::Fig6 => {
            let mut t = Table::new(&[
                "infectious",
                "population",
                "cutoff",
                "p_minor",
                "se",
                "branching_p_ext",
                "branching_se",
            ]);
            let pops = populations(config)?;
            let laws = [
                ("exponential", DistributionSpec::exponential(1.0)),
                ("constant", DistributionSpec::constant(1.0)),
            ];
            for (l, (label, law)) in laws.into_iter().enumerate() {
                let p = ModelParams { infectious: law, ..*base };
                let bp = estimate_extinction(&p, &bp_config(config), n, cell_seed(config.seed, l))?;
                for (i, &pop) in pops.iter().enumerate() {
                    let q = ModelParams { population: pop, ..p };
                    let seed = cell_seed(config.seed, 1000 * (l + 1) + i);
                    let hist = final_size_distribution(&q, n, seed)?;
                    let s = classification(&hist, config.cutoff, warnings);
                    t.push(vec![
                        label.into(),
                        pop.into(),
                        s["cutoff"].as_u64().map_or(Cell::Text(String::new()), Cell::Int),
                        s["p_minor"].as_f64().unwrap_or(f64::NAN).into(),
                        s["se"].as_f64().unwrap_or(f64::NAN).into(),
                        bp.p_ext.into(),
                        bp.se.into(),
                    ]);
                }
            }
            Ok(t)
        }
        Preset::Fig7a => {
            let means = grid(config, Axis::LatentMean)?;
            let mut cells = vec![];
            for delay_mean in [0.5, 2.0] {
                for p in PANEL_NAMING {
                    for (name, shape) in FAMILIES {
                        for &mean in means {
                            let params = ModelParams {
                                naming_prob: p,
                                latent: family_law(shape, mean),
                                delay: DistributionSpec::exponential_mean(delay_mean),
                                ..*base
                            };
                            cells.push((vec![name.into(), delay_mean.into(), p.into(), mean.into()], params));
                        }
                    }
                }
            }
            let mut t = Table::new(&["latent_family", "delay_mean", "naming_prob", "latent_mean", "lambda_crit"]);
            t.rows = crit_rows(cells, config.case)?;
            Ok(t)
        }
        Preset::Fig7b => {
            let means = grid(config, Axis::DelayMean)?;
            let mut cells = vec![];
            for latent_mean in [0.5, 2.0] {
                for p in PANEL_NAMING {
                    for (name, shape) in FAMILIES {
                        for &mean in means {
                            let params = ModelParams {
                                naming_prob: p,
                                latent: DistributionSpec::exponential_mean(latent_mean),
                                delay: family_law(shape, mean),
                                ..*base
                            };
                            cells.push((vec![name.into(), latent_mean.into(), p.into(), mean.into()], params));
                        }
                    }
                }
            }
            let mut t = Table::new(&["delay_family", "latent_mean", "naming_prob", "delay_mean", "lambda_crit"]);
            t.rows = crit_rows(cells, config.case)?;
            Ok(t)
        }
        Preset::Fig8 => {
            let naming = grid(config, Axis::NamingProb)?;
            let mut cells = vec![];
            for (disease, latent_mean) in [("influenza", 0.10), ("smallpox", 0.58)] {
                for delay_mean in [0.25, 0.5, 1.0, 2.0] {
                    for &p in naming {
                        let params = ModelParams {
                            naming_prob: p,
                            latent: DistributionSpec::exponential_mean(latent_mean),
                            delay: DistributionSpec::exponential_mean(delay_mean),
                            ..*base
                        };
                        cells.push((
                            vec![disease.into(), latent_mean.into(), delay_mean.into(), p.into()],
                            params,
                        ));
                    }
                }
            }
            let mut t = Table::new(&["disease", "latent_mean", "delay_mean", "naming_prob", "lambda_crit"]);
            t.rows = crit_rows(cells, config.case)?;
            Ok(t)
        }
        Preset::Table2 => {
            let columns = [
                ("l1.5_latent_exp", 1.5, DistributionSpec::exponential(1.0)),
                ("l1.5_latent_0", 1.5, DistributionSpec::Zero),
                ("l2.5_latent_0", 2.5, DistributionSpec::Zero),
            ];
            let couplings = [
                ("independent", DelayCoupling::Independent),
                ("mutual", DelayCoupling::Mutual),
            ];
            let mut header = vec!["delay_mean".to_string()];
            for (label, ..) in &columns {
                for (coupling, _) in &couplings {
                    header.push(format!("{label}_{coupling}"));
                    header.push(format!("{label}_{coupling}_se"));
                }
            }
            let mut t = Table {
                header,
                ..Default::default()
            };
            let bp = bp_config(config);
            let mut cell = 0;
            for &delay_mean in grid(config, Axis::DelayMean)? {
                let mut row = vec![Cell::Float(delay_mean)];
                for &(_, lambda, latent) in &columns {
                    for &(_, coupling) in &couplings {
                        let p = ModelParams {
                            contact_rate: lambda,
                            latent,
                            delay: DistributionSpec::exponential_mean(delay_mean),
                            delay_coupling: coupling,
                            ..*base
                        };
                        let e = estimate_extinction(&p, &bp, n, cell_seed(config.seed, cell))?;
                        row.extend([e.p_ext.into(), e.se.into()]);
                        cell += 1;
                    }
                }
                t.push(row);
            }
            Ok(t)
        }
    }
}
