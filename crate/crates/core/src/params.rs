//! Model parameters shared by the analytic layers and the simulators.

use serde::{Deserialize, Serialize};

use crate::dist::{DiffLaw, DistributionSpec};
use crate::error::{Error, Result};

/// How tracing delays of siblings named at one interview relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayCoupling {
    /// Every named individual draws its own delay.
    #[default]
    Independent,
    /// All individuals named at the same interview share one delay draw.
    Mutual,
}

impl std::str::FromStr for DelayCoupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "independent" => Ok(DelayCoupling::Independent),
            "mutual" => Ok(DelayCoupling::Mutual),
            other => Err(Error::InvalidConfig(format!("unknown delay coupling '{other}'"))),
        }
    }
}

/// Full parameter set of the epidemic with contact tracing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Contact rate of an infective with the whole population.
    #[serde(alias = "lambda")]
    pub contact_rate: f64,
    /// Probability that an interviewed individual names a given infectee.
    #[serde(alias = "p")]
    pub naming_prob: f64,
    /// Interview probability after a natural removal.
    #[serde(alias = "pi_R")]
    pub interview_natural: f64,
    /// Interview probability after removal by tracing.
    #[serde(alias = "pi_T")]
    pub interview_traced: f64,
    pub infectious: DistributionSpec,
    pub latent: DistributionSpec,
    pub delay: DistributionSpec,
    /// Number of initial susceptibles.
    #[serde(alias = "N")]
    pub population: u64,
    /// Number of initial infectives.
    #[serde(alias = "m")]
    pub initial_infectives: u64,
    #[serde(default)]
    pub delay_coupling: DelayCoupling,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            contact_rate: 2.0,
            naming_prob: 0.5,
            interview_natural: 0.8,
            interview_traced: 0.8,
            infectious: DistributionSpec::exponential(1.0),
            latent: DistributionSpec::exponential(1.0),
            delay: DistributionSpec::exponential(1.0),
            population: 1000,
            initial_infectives: 1,
            delay_coupling: DelayCoupling::Independent,
        }
    }
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.contact_rate.is_finite() && self.contact_rate >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "contact_rate must be finite and nonnegative, got {}",
                self.contact_rate
            )));
        }
        check_prob("naming_prob", self.naming_prob)?;
        check_prob("interview_natural", self.interview_natural)?;
        check_prob("interview_traced", self.interview_traced)?;
        for (name, d) in [
            ("infectious", &self.infectious),
            ("latent", &self.latent),
            ("delay", &self.delay),
        ] {
            d.validate()
                .map_err(|_| Error::InvalidConfig(format!("{name}: invalid distribution {d}")))?;
        }
        if self.infectious.mean() <= 0.0 {
            return Err(Error::InvalidConfig("infectious period must have positive mean".into()));
        }
        if self.population < 1 {
            return Err(Error::InvalidConfig("population must be at least 1".into()));
        }
        if self.initial_infectives < 1 {
            return Err(Error::InvalidConfig("initial_infectives must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_contact_rate(&self, contact_rate: f64) -> Self {
        ModelParams {
            contact_rate,
            ..*self
        }
    }

    /// Law of delay minus latent period.
    pub fn diff_law(&self) -> DiffLaw {
        DiffLaw::new(self.delay, self.latent)
    }

    /// Product `pi_R * p`: chance an infectee of a naturally removed individual is named.
    pub fn natural_naming(&self) -> f64 {
        self.interview_natural * self.naming_prob
    }

    /// Rescale time by `factor`: durations are multiplied and the contact rate divided.
    ///
    /// Reproduction numbers and extinction probabilities are unchanged.
    pub fn time_scaled(&self, factor: f64) -> Self {
        ModelParams {
            contact_rate: self.contact_rate / factor,
            infectious: self.infectious.scaled(factor),
            latent: self.latent.scaled(factor),
            delay: self.delay.scaled(factor),
            ..*self
        }
    }

    /// Parameters in units where the mean infectious period is 1, with the
    /// original mean infectious period.
    pub fn normalized(&self) -> (Self, f64) {
        let unit = self.infectious.mean();
        (self.time_scaled(1.0 / unit), unit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        ModelParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let base = ModelParams::default();
        let cases = [
            ModelParams {
                naming_prob: 1.5,
                ..base
            },
            ModelParams {
                interview_traced: -0.1,
                ..base
            },
            ModelParams {
                contact_rate: -1.0,
                ..base
            },
            ModelParams {
                contact_rate: f64::NAN,
                ..base
            },
            ModelParams {
                initial_infectives: 0,
                ..base
            },
            ModelParams {
                delay: DistributionSpec::Exponential { rate: 0.0 },
                ..base
            },
            ModelParams {
                infectious: DistributionSpec::Zero,
                ..base
            },
        ];
        for c in cases {
            assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn normalization_gives_unit_infectious_mean() {
        let p = ModelParams {
            contact_rate: 4.0,
            infectious: DistributionSpec::exponential(2.0),
            delay: DistributionSpec::constant(0.3),
            ..Default::default()
        };
        let (q, unit) = p.normalized();
        assert_eq!(unit, 0.5);
        assert!((q.infectious.mean() - 1.0).abs() < 1e-15);
        assert!((q.contact_rate - 2.0).abs() < 1e-15);
        assert!((q.delay.mean() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn json_accepts_short_names() {
        let text = r#"{"lambda":2.0,"p":0.5,"pi_R":0.8,"pi_T":0.8,
            "infectious":{"kind":"constant","value":1.0},
            "latent":{"kind":"exponential","rate":1.0},
            "delay":{"kind":"zero"},"N":200,"m":1}"#;
        let p: ModelParams = serde_json::from_str(text).unwrap();
        assert_eq!(p.contact_rate, 2.0);
        assert_eq!(p.population, 200);
        assert_eq!(p.delay_coupling, DelayCoupling::Independent);
        let back: ModelParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
