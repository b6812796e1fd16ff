//! Unnamed reproduction number for exponential infectious periods and
//! exponential tracing delays.
//!
//! Time is measured in units of the mean infectious period. The Laplace
//! transform of the expected number of unnamed descendants satisfies a linear
//! recursion whose solution is a pair of rapidly converging series; `y*` is
//! their ratio at the delay rate and `R_U` follows at zero.

use serde::{Deserialize, Serialize};

use crate::const_analysis::ConstModel;
use crate::dist::{Bound, DistributionSpec};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::root::bisect;

const MAX_TERMS: usize = 10_000;
const NEAR_POLE: f64 = 1e-6;
const POLE_SHIFT: f64 = 1e-4;

/// Series coefficients at one value of the transform variable.
///
/// `a[j]`, `rho[j]`, `b[j]` hold the coefficients of index `j + 1`;
/// `c[j]` is the product of the first `j` entries of `b` (so `c[0] = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTables {
    pub xi: f64,
    pub theta: f64,
    pub a: Vec<f64>,
    pub rho: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub truncation_len: usize,
}

/// Summary of the exponential-case analysis at one contact rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpAnalysisResult {
    pub y_star: f64,
    pub r_u: f64,
    pub lambda_star: f64,
    pub finite: bool,
}

/// One row of a contact-rate trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub lambda: f64,
    pub y_star: f64,
    pub denominator: f64,
    /// Series value of `R_U`, meaningful only below the blow-up rate.
    pub r_u_series: f64,
}

/// Settings of the upward scan for the blow-up contact rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarSearch {
    /// Scan step in units of the removal rate.
    pub step: f64,
    /// Final bracket width in units of the removal rate.
    pub width: f64,
    /// Give up above this multiple of the removal rate.
    pub limit: f64,
    /// Beyond `step / relative_step` the step grows in proportion to the rate.
    pub relative_step: f64,
}

impl Default for StarSearch {
    fn default() -> Self {
        StarSearch {
            step: 0.05,
            width: 1e-4,
            limit: 100.0,
            relative_step: 5e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    a: f64,
    rho: f64,
    len: usize,
}

/// Exponential-case model in normalized time.
#[derive(Debug, Clone, Copy)]
pub struct ExpModel {
    params: ModelParams,
    /// Removal rate used as the time unit.
    gamma: f64,
    lambda: f64,
    xi: f64,
    latent: DistributionSpec,
}

impl ExpModel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let gamma = match params.infectious {
            DistributionSpec::Exponential { rate } => rate,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "exponential-case analysis needs an exponential infectious period, got {other}"
                )))
            }
        };
        let xi = match params.delay {
            DistributionSpec::Exponential { rate } => rate / gamma,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "exponential-case analysis needs an exponential tracing delay, got {other}"
                )))
            }
        };
        Ok(ExpModel {
            params: *params,
            gamma,
            lambda: params.contact_rate / gamma,
            xi,
            latent: params.latent.scaled(gamma),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Same model at another contact rate (original time units).
    pub fn with_contact_rate(&self, contact_rate: f64) -> Self {
        ExpModel {
            params: self.params.with_contact_rate(contact_rate),
            lambda: contact_rate / self.gamma,
            ..*self
        }
    }

    fn named(&self) -> f64 {
        self.params.natural_naming()
    }

    /// `(a_j, rho_j, b_j)` at `u = j + theta` for delay rate `xi`.
    ///
    /// The recursion is for the transform of the expected unnamed count of an
    /// individual known to be interviewed, so naming enters with `p` alone.
    fn coeffs(&self, xi: f64, u: f64, phi_xi: f64) -> (f64, f64, f64) {
        let lam = self.lambda;
        let pi_r = self.params.interview_natural;
        let pi_t = self.params.interview_traced;
        let named = self.params.naming_prob;
        let phi_u = self.latent.mgf(u);
        let gap = xi - u;
        let tail = |v: f64, phi: f64| phi * ((1.0 - pi_t) + (1.0 - pi_r) / v) / ((v + 1.0) * (v + 1.0));
        let a = lam * (1.0 - named) / (u * u)
            + lam * lam * named * xi / (u * gap) * (tail(u, phi_u) - tail(xi, phi_xi));
        let rho = lam * named * (pi_t * xi + pi_r) * phi_xi / (u * gap);
        let b = lam * named * xi * (pi_t * u + pi_r) * phi_u / (u * u * gap);
        (a, rho, b)
    }

    fn sums(&self, xi: f64, theta: f64) -> Sums {
        let phi_xi = self.latent.mgf(xi);
        let mut c = 1.0_f64;
        let mut s = Sums::default();
        for j in 1..=MAX_TERMS {
            let (a, rho, b) = self.coeffs(xi, j as f64 + theta, phi_xi);
            s.a += c * a;
            s.rho += c * rho;
            s.len = j;
            let size = c.abs() * a.abs().max(rho.abs());
            let scale = 1.0_f64.max(s.a.abs()).max(s.rho.abs());
            c *= b;
            if size < 1e-300 * scale || c == 0.0 || !c.is_finite() {
                break;
            }
        }
        s
    }

    /// Coefficient tables at `theta` (normalized units).
    pub fn series_tables(&self, theta: f64) -> SeriesTables {
        let xi = self.xi;
        let phi_xi = self.latent.mgf(xi);
        let mut t = SeriesTables {
            xi,
            theta,
            a: Vec::new(),
            rho: Vec::new(),
            b: Vec::new(),
            c: vec![1.0],
            truncation_len: 0,
        };
        for j in 1..=MAX_TERMS {
            let (a, rho, b) = self.coeffs(xi, j as f64 + theta, phi_xi);
            let c = *t.c.last().expect("c is never empty");
            t.a.push(a);
            t.rho.push(rho);
            t.b.push(b);
            t.truncation_len = j;
            let size = c.abs() * a.abs().max(rho.abs());
            let next = c * b;
            if size < 1e-300 || next == 0.0 || !next.is_finite() {
                break;
            }
            t.c.push(next);
        }
        t
    }

    fn ratio_at(&self, xi: f64) -> (f64, f64) {
        let s = self.sums(xi, xi);
        let denominator = 1.0 + s.rho;
        (s.a / denominator, denominator)
    }

    fn ru_at(&self, xi: f64) -> f64 {
        let pi_r = self.params.interview_natural;
        if pi_r == 0.0 {
            return self.lambda;
        }
        let (y, _) = self.ratio_at(xi);
        let s = self.sums(xi, 0.0);
        // Root not interviewed: all offspring unnamed.
        (1.0 - pi_r) * self.lambda + pi_r * (s.a - s.rho * y)
    }

    fn near_pole(&self) -> bool {
        let k = self.xi.round();
        k >= 1.0 && (self.xi - k).abs() < NEAR_POLE
    }

    /// `y*`, the candidate value of the transform at one plus the delay rate.
    pub fn y_star(&self) -> f64 {
        self.ratio_at(self.xi).0
    }

    /// Denominator of `y*`; it crosses zero where `y*` blows up.
    pub fn denominator(&self) -> f64 {
        self.ratio_at(self.xi).1
    }

    /// Series value of `R_U`, without checking that the contact rate is below
    /// the blow-up rate.
    pub fn r_u_series(&self) -> f64 {
        if self.near_pole() {
            let up = self.ru_at(self.xi + POLE_SHIFT);
            let down = self.ru_at(self.xi - POLE_SHIFT);
            0.5 * (up + down)
        } else {
            self.ru_at(self.xi)
        }
    }

    pub fn trace_point(&self) -> TracePoint {
        let (y_star, denominator) = self.ratio_at(self.xi);
        TracePoint {
            lambda: self.params.contact_rate,
            y_star,
            denominator,
            r_u_series: self.r_u_series(),
        }
    }

    // Normalized contact rate at which y* is still a valid (finite, nonnegative) value.
    // Near a pole the shifted rates used by `r_u_series` must qualify too.
    fn admissible(&self, lambda: f64) -> bool {
        let m = ExpModel { lambda, ..*self };
        let ok = |xi: f64| {
            let (y, d) = m.ratio_at(xi);
            d > 0.0 && y.is_finite() && y >= 0.0
        };
        ok(m.xi) && (!m.near_pole() || (ok(m.xi + POLE_SHIFT) && ok(m.xi - POLE_SHIFT)))
    }

    // Bracket (normalized) around the first loss of admissibility.
    fn star_bracket(&self, search: &StarSearch) -> Result<(f64, f64)> {
        let limit = search.limit;
        if self.named() == 0.0 {
            return Err(Error::NotFound {
                limit: limit * self.gamma,
            });
        }
        let mut lo = 1.0;
        if !self.admissible(lo) {
            // Cannot happen for valid parameters since the blow-up rate exceeds 1;
            // search downwards defensively.
            lo = 0.0;
        }
        let mut hi = lo;
        loop {
            hi += search.step.max(search.relative_step * hi);
            if hi > limit {
                return Err(Error::NotFound {
                    limit: limit * self.gamma,
                });
            }
            if !self.admissible(hi) {
                break;
            }
            lo = hi;
        }
        while hi - lo > search.width {
            let mid = 0.5 * (lo + hi);
            if self.admissible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo, hi))
    }

    /// Blow-up contact rate (original units); `NotFound` if none below the limit.
    pub fn lambda_star_search(&self, search: &StarSearch) -> Result<f64> {
        let (lo, hi) = self.star_bracket(search)?;
        Ok(0.5 * (lo + hi) * self.gamma)
    }

    /// Default scan settings, with the limit raised to the sufficiency bound
    /// so a blow-up rate that provably exists is not missed.
    pub fn default_search(&self) -> StarSearch {
        let base = StarSearch::default();
        let bound = (0..40)
            .filter_map(|k| ru_infinite_sufficiency_bound(&self.params, 0.01 * 1.25f64.powi(k) / self.gamma).ok())
            .fold(f64::INFINITY, f64::min);
        StarSearch {
            limit: base.limit.max((1.01 * bound / self.gamma).min(1e8)),
            ..base
        }
    }

    /// Blow-up contact rate, `+inf` if none is found below the default limit.
    pub fn lambda_star(&self) -> f64 {
        self.lambda_star_search(&self.default_search()).unwrap_or(f64::INFINITY)
    }

    // Largest contact rate (original units) verified to give a finite R_U.
    fn finite_limit(&self, search: &StarSearch) -> f64 {
        match self.star_bracket(search) {
            Ok((lo, _)) => lo * self.gamma,
            Err(_) => f64::INFINITY,
        }
    }

    pub fn analyze(&self) -> ExpAnalysisResult {
        let base = self.default_search();
        let search = StarSearch {
            limit: base.limit.max(self.lambda + 1.0),
            ..base
        };
        let lambda_star = match self.star_bracket(&search) {
            Ok((lo, hi)) => 0.5 * (lo + hi) * self.gamma,
            Err(_) => f64::INFINITY,
        };
        let finite = self.params.contact_rate < lambda_star && self.admissible(self.lambda);
        ExpAnalysisResult {
            y_star: self.y_star(),
            r_u: if finite { self.r_u_series() } else { f64::INFINITY },
            lambda_star,
            finite,
        }
    }

    /// `R_U`, or `+inf` at or above the blow-up rate.
    pub fn r_u(&self) -> f64 {
        self.analyze().r_u
    }
}

pub fn series_tables(params: &ModelParams, theta: f64) -> Result<SeriesTables> {
    Ok(ExpModel::new(params)?.series_tables(theta))
}

pub fn y_star(params: &ModelParams) -> Result<f64> {
    Ok(ExpModel::new(params)?.y_star())
}

pub fn r_u_exp(params: &ModelParams) -> Result<f64> {
    Ok(ExpModel::new(params)?.r_u())
}

pub fn lambda_star_exp(params: &ModelParams) -> Result<f64> {
    Ok(ExpModel::new(params)?.lambda_star())
}

pub fn analyze_exp(params: &ModelParams) -> Result<ExpAnalysisResult> {
    Ok(ExpModel::new(params)?.analyze())
}

/// Contact rate above which `R_U` is certainly infinite, using delays that
/// exceed the latent period by at least `epsilon`.
pub fn ru_infinite_sufficiency_bound(params: &ModelParams, epsilon: f64) -> Result<f64> {
    params.validate()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let gamma = match params.infectious {
        DistributionSpec::Exponential { rate } => rate,
        other => {
            return Err(Error::InvalidConfig(format!(
                "sufficiency bound needs an exponential infectious period, got {other}"
            )))
        }
    };
    let named = params.natural_naming();
    if named == 0.0 {
        return Ok(f64::INFINITY);
    }
    let late = params.diff_law().prob(Bound::open(epsilon), Bound::POS_INF)?;
    if late <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "delay never exceeds latent period by {epsilon}"
        )));
    }
    let ge = gamma * epsilon;
    let survive = 1.0 - (-ge).exp() * (ge + 1.0);
    Ok(1.0 / (named / gamma * survive * late))
}

/// Which reproduction number `lambda_crit` sets to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CritCase {
    ConstR0,
    ConstRu,
    ExpRu,
}

impl std::str::FromStr for CritCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "const-r0" => Ok(CritCase::ConstR0),
            "const-ru" => Ok(CritCase::ConstRu),
            "exp-ru" => Ok(CritCase::ExpRu),
            other => Err(Error::InvalidConfig(format!("unknown case '{other}'"))),
        }
    }
}

/// Contact rate at which the chosen reproduction number equals one.
pub fn lambda_crit(params: &ModelParams, case: CritCase) -> Result<f64> {
    const TOL: f64 = 1e-6;
    const LO: f64 = 1e-6;
    const HI: f64 = 1e3;
    let upper = |star: f64| if star.is_finite() { star - 1e-6 } else { HI };
    match case {
        CritCase::ConstR0 => {
            let m = ConstModel::new(params)?;
            bisect(|l| Ok(m.with_contact_rate(l).r0() - 1.0), LO, HI, TOL)
        }
        CritCase::ConstRu => {
            let m = ConstModel::new(params)?;
            let hi = upper(m.lambda_star());
            bisect(|l| Ok(m.with_contact_rate(l).ru() - 1.0), LO, hi, TOL)
        }
        CritCase::ExpRu => {
            let m = ExpModel::new(params)?;
            let hi = upper(m.finite_limit(&m.default_search()));
            bisect(|l| Ok(m.with_contact_rate(l).r_u_series() - 1.0), LO, hi, TOL)
        }
    }
}
