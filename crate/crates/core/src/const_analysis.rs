//! Two-type branching analysis for a constant infectious period.
//!
//! Individuals are unnamed (U) or named (N). Only naturally removed
//! individuals are interviewed, so the mean offspring matrix and the
//! offspring generating functions have closed forms in terms of truncated
//! moments of delay minus latent period.

use serde::{Deserialize, Serialize};

use crate::dist::{Bound, DiffLaw, DistributionSpec, Moment};
use crate::error::{Error, Result};
use crate::params::ModelParams;

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITER: usize = 1_000_000;

/// What becomes of a named individual, averaged over when it was named.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracedFateProbs {
    /// Dies naturally before the tracing delay ends.
    pub untraced: f64,
    /// Traced before becoming infective.
    pub traced_latent: f64,
}

/// Expected offspring counts by parent type (first letter) and child type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMatrix {
    pub uu: f64,
    pub un: f64,
    pub nu: f64,
    pub nn: f64,
}

impl MeanMatrix {
    /// Largest eigenvalue.
    pub fn perron_root(&self) -> f64 {
        let tr = self.uu + self.nn;
        let disc = (self.uu - self.nn).powi(2) + 4.0 * self.un * self.nu;
        0.5 * (tr + disc.max(0.0).sqrt())
    }

    /// Mean number of unnamed individuals reached from an unnamed one
    /// through named intermediaries only.
    pub fn unnamed_reproduction(&self) -> f64 {
        if self.nn >= 1.0 {
            f64::INFINITY
        } else {
            self.uu + self.un * self.nu / (1.0 - self.nn)
        }
    }
}

/// Extinction probabilities of the lines started by one unnamed or one
/// named individual, and of the whole outbreak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extinction {
    pub from_unnamed: f64,
    pub from_named: f64,
    pub outbreak: f64,
}

/// Contact-rate-independent quantities, computed once per parameter set.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    law: DiffLaw,
    period: f64,
    fates: TracedFateProbs,
    // D = delay - latent. "early": -period < D < 0; "late": 0 <= D < period.
    mass_early: f64,
    mass_late: f64,
    // E[(period + D) 1{early}] and E[(period - D) 1{late}].
    active_early: f64,
    active_late: f64,
    // E[(period + D)^2 1{early}] and E[(period^2 - D^2) 1{late}].
    active_sq_early: f64,
    active_sq_late: f64,
}

impl Kernel {
    fn new(params: &ModelParams) -> Result<Self> {
        let period = match params.infectious {
            DistributionSpec::Constant { value } if value > 0.0 => value,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "constant-period analysis needs a positive constant infectious period, got {other}"
                )))
            }
        };
        if params.interview_traced != 0.0 {
            return Err(Error::InvalidConfig(
                "constant-period analysis requires interview_traced = 0".into(),
            ));
        }
        let law = params.diff_law();
        let early = (Bound::open(-period), Bound::open(0.0));
        let late = (Bound::closed(0.0), Bound::open(period));

        let beyond = law.prob(Bound::open(period), Bound::POS_INF)?;
        let late_x = law.trunc_expect(Moment::X, Bound::closed(0.0), Bound::closed(period))?;
        let untraced = beyond + late_x / period;

        let before = law.prob(Bound::NEG_INF, Bound::closed(-period))?;
        let early_negx = law.trunc_expect(Moment::NegX, Bound::open(-period), Bound::closed(0.0))?;
        let traced_latent = before + early_negx / period;

        let mass_early = law.prob(early.0, early.1)?;
        let mass_late = law.prob(late.0, late.1)?;
        let x_early = law.trunc_expect(Moment::X, early.0, early.1)?;
        let x_late = law.trunc_expect(Moment::X, late.0, late.1)?;
        let sq_early = law.trunc_expect(Moment::ShiftedSquare { c: period }, early.0, early.1)?;
        let sq_late = law.trunc_expect(Moment::XSquared, late.0, late.1)?;

        Ok(Kernel {
            law,
            period,
            fates: TracedFateProbs {
                untraced: untraced.clamp(0.0, 1.0),
                traced_latent: traced_latent.clamp(0.0, 1.0),
            },
            mass_early,
            mass_late,
            active_early: period * mass_early + x_early,
            active_late: period * mass_late - x_late,
            active_sq_early: sq_early,
            active_sq_late: period * period * mass_late - sq_late,
        })
    }
}

/// Constant-period analysis bound to one parameter set.
///
/// Changing only the contact rate reuses the cached truncated moments.
#[derive(Debug, Clone, Copy)]
pub struct ConstModel {
    params: ModelParams,
    kernel: Kernel,
}

impl ConstModel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(ConstModel {
            params: *params,
            kernel: Kernel::new(params)?,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn with_contact_rate(&self, contact_rate: f64) -> Self {
        ConstModel {
            params: self.params.with_contact_rate(contact_rate),
            kernel: self.kernel,
        }
    }

    pub fn fate_probs(&self) -> TracedFateProbs {
        self.kernel.fates
    }

    pub fn mean_matrix(&self) -> MeanMatrix {
        let k = &self.kernel;
        let lambda = self.params.contact_rate;
        let named = self.params.natural_naming();
        let iota = k.period;
        let p_n = k.fates.untraced;
        if named == 0.0 {
            // Nobody is ever named: the named type is unreachable and its row is reported as zero.
            return MeanMatrix {
                uu: lambda * iota,
                un: 0.0,
                nu: 0.0,
                nn: 0.0,
            };
        }
        MeanMatrix {
            uu: lambda * (1.0 - named) * iota,
            un: lambda * named * iota,
            nn: lambda * named * iota * p_n,
            nu: lambda * (1.0 - named) * iota * p_n
                + lambda / (2.0 * iota) * (k.active_sq_early + k.active_sq_late),
        }
    }

    pub fn r0(&self) -> f64 {
        self.mean_matrix().perron_root()
    }

    pub fn ru(&self) -> f64 {
        self.mean_matrix().unnamed_reproduction()
    }

    /// Offspring generating function of an unnamed individual.
    pub fn pgf_unnamed(&self, s_u: f64, s_n: f64) -> f64 {
        let li = self.params.contact_rate * self.kernel.period;
        let pi_r = self.params.interview_natural;
        let p = self.params.naming_prob;
        (1.0 - pi_r) * (-li * (1.0 - s_u)).exp()
            + pi_r * (-li * (1.0 - (1.0 - p) * s_u - p * s_n)).exp()
    }

    /// Offspring generating function of a named individual.
    pub fn pgf_named(&self, s_u: f64, s_n: f64) -> Result<f64> {
        let k = &self.kernel;
        let iota = k.period;
        let theta = self.params.contact_rate * (1.0 - s_u);
        let untraced = k.fates.untraced * self.pgf_unnamed(s_u, s_n);
        let traced_active = self.traced_active(theta, theta * iota < 1e-5)?;
        Ok(k.fates.traced_latent + untraced + traced_active)
    }

    // Traced while infective: Poisson(lambda * w) unnamed offspring, w the
    // active time, averaged over naming time and D. `series` uses the
    // second-order expansion in theta, needed where the exact form cancels.
    fn traced_active(&self, theta: f64, series: bool) -> Result<f64> {
        let k = &self.kernel;
        let iota = k.period;
        if series {
            return Ok(
                (k.active_early + k.active_late - 0.5 * theta * (k.active_sq_early + k.active_sq_late)) / iota,
            );
        }
        let e_early = k.law.trunc_expect(
            Moment::ShiftedExp { c: iota, s: theta },
            Bound::open(-iota),
            Bound::open(0.0),
        )?;
        let e_late = k
            .law
            .trunc_expect(Moment::Exp { s: theta }, Bound::closed(0.0), Bound::open(iota))?;
        Ok((k.mass_early - e_early + e_late - (-theta * iota).exp() * k.mass_late) / (theta * iota))
    }

    /// Minimal fixed point of the pair of generating functions.
    pub fn extinction(&self) -> Result<Extinction> {
        if self.r0() <= 1.0 {
            return Ok(Extinction {
                from_unnamed: 1.0,
                from_named: 1.0,
                outbreak: 1.0,
            });
        }
        let (mut qu, mut qn) = (0.0_f64, 0.0_f64);
        for _ in 0..FIXED_POINT_MAX_ITER {
            let nu = self.pgf_unnamed(qu, qn);
            let nn = self.pgf_named(qu, qn)?;
            let step = (nu - qu).abs().max((nn - qn).abs());
            qu = nu;
            qn = nn;
            if step < FIXED_POINT_TOL {
                return Ok(Extinction {
                    from_unnamed: qu,
                    from_named: qn,
                    outbreak: qu.powf(self.params.initial_infectives as f64),
                });
            }
        }
        Err(Error::NoConvergence {
            iterations: FIXED_POINT_MAX_ITER,
        })
    }

    /// Contact rate above which the unnamed reproduction number is infinite.
    pub fn lambda_star(&self) -> f64 {
        let denom = self.params.natural_naming() * self.kernel.period * self.kernel.fates.untraced;
        if denom > 0.0 {
            1.0 / denom
        } else {
            f64::INFINITY
        }
    }
}

pub fn fate_probs(params: &ModelParams) -> Result<TracedFateProbs> {
    Ok(ConstModel::new(params)?.fate_probs())
}

pub fn mean_matrix(params: &ModelParams) -> Result<MeanMatrix> {
    Ok(ConstModel::new(params)?.mean_matrix())
}

pub fn r0(params: &ModelParams) -> Result<f64> {
    Ok(ConstModel::new(params)?.r0())
}

pub fn ru_const(params: &ModelParams) -> Result<f64> {
    Ok(ConstModel::new(params)?.ru())
}

pub fn pgf_unnamed(params: &ModelParams, s_u: f64, s_n: f64) -> Result<f64> {
    Ok(ConstModel::new(params)?.pgf_unnamed(s_u, s_n))
}

pub fn pgf_named(params: &ModelParams, s_u: f64, s_n: f64) -> Result<f64> {
    ConstModel::new(params)?.pgf_named(s_u, s_n)
}

pub fn extinction_const(params: &ModelParams) -> Result<Extinction> {
    ConstModel::new(params)?.extinction()
}

pub fn lambda_star_const(params: &ModelParams) -> Result<f64> {
    Ok(ConstModel::new(params)?.lambda_star())
}
