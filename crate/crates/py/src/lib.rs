//! Python bindings for the tracethresh analytic layers and simulators.
//!
//! Laws are passed as shorthand strings: `zero`, `const:V`, `exp:RATE`,
//! `exp-mean:MEAN` or `gamma:MEAN:SHAPE`.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use tracethresh::bp_sim::{self, BpConfig};
use tracethresh::exp_analysis::CritCase;
use tracethresh::{const_analysis, epi_sim, exp_analysis, DelayCoupling, DistributionSpec, ModelParams};

create_exception!(pytracethresh, NumericalError, PyRuntimeError, "A numerical method failed to converge.");

fn to_py(e: tracethresh::Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn law(s: &str) -> PyResult<DistributionSpec> {
    s.parse().map_err(to_py)
}

/// Model parameters. Durations share one arbitrary time unit.
#[pyclass(name = "Params", from_py_object)]
#[derive(Clone)]
pub struct Params {
    inner: ModelParams,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (
        contact_rate = 2.0,
        naming_prob = 0.5,
        interview_natural = 0.8,
        interview_traced = 0.8,
        infectious = "exp:1",
        latent = "exp:1",
        delay = "exp:1",
        population = 1000,
        initial_infectives = 1,
        coupling = "independent",
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        contact_rate: f64,
        naming_prob: f64,
        interview_natural: f64,
        interview_traced: f64,
        infectious: &str,
        latent: &str,
        delay: &str,
        population: u64,
        initial_infectives: u64,
        coupling: &str,
    ) -> PyResult<Self> {
        let inner = ModelParams {
            contact_rate,
            naming_prob,
            interview_natural,
            interview_traced,
            infectious: law(infectious)?,
            latent: law(latent)?,
            delay: law(delay)?,
            population,
            initial_infectives,
            delay_coupling: coupling.parse::<DelayCoupling>().map_err(to_py)?,
        };
        inner.validate().map_err(to_py)?;
        Ok(Params { inner })
    }

    /// Parse the JSON form written by `to_json` or the command-line tool.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: ModelParams = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(to_py)?;
        Ok(Params { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("params serialize")
    }

    /// Copy with a different contact rate.
    fn with_contact_rate(&self, contact_rate: f64) -> Self {
        Params {
            inner: self.inner.with_contact_rate(contact_rate),
        }
    }

    /// Copy in units where the mean infectious period is 1, and that mean.
    fn normalized(&self) -> (Self, f64) {
        let (inner, unit) = self.inner.normalized();
        (Params { inner }, unit)
    }

    #[getter]
    fn contact_rate(&self) -> f64 {
        self.inner.contact_rate
    }

    #[getter]
    fn naming_prob(&self) -> f64 {
        self.inner.naming_prob
    }

    #[getter]
    fn interview_natural(&self) -> f64 {
        self.inner.interview_natural
    }

    #[getter]
    fn interview_traced(&self) -> f64 {
        self.inner.interview_traced
    }

    #[getter]
    fn infectious(&self) -> String {
        self.inner.infectious.to_string()
    }

    #[getter]
    fn latent(&self) -> String {
        self.inner.latent.to_string()
    }

    #[getter]
    fn delay(&self) -> String {
        self.inner.delay.to_string()
    }

    #[getter]
    fn population(&self) -> u64 {
        self.inner.population
    }

    #[getter]
    fn initial_infectives(&self) -> u64 {
        self.inner.initial_infectives
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "Params(contact_rate={}, naming_prob={}, interview_natural={}, interview_traced={}, infectious='{}', latent='{}', delay='{}', population={}, initial_infectives={}, coupling='{}')",
            p.contact_rate,
            p.naming_prob,
            p.interview_natural,
            p.interview_traced,
            p.infectious,
            p.latent,
            p.delay,
            p.population,
            p.initial_infectives,
            match p.delay_coupling {
                DelayCoupling::Independent => "independent",
                DelayCoupling::Mutual => "mutual",
            }
        )
    }
}

/// Basic reproduction number with a constant infectious period.
#[pyfunction]
fn r0(params: &Params) -> PyResult<f64> {
    const_analysis::r0(&params.inner).map_err(to_py)
}

/// `R_U` with a constant infectious period.
#[pyfunction]
fn ru_const(params: &Params) -> PyResult<f64> {
    const_analysis::ru_const(&params.inner).map_err(to_py)
}

/// Mean offspring matrix `((m_UU, m_UN), (m_NU, m_NN))`.
#[pyfunction]
fn mean_matrix(params: &Params) -> PyResult<((f64, f64), (f64, f64))> {
    let m = const_analysis::mean_matrix(&params.inner).map_err(to_py)?;
    Ok(((m.uu, m.un), (m.nu, m.nn)))
}

/// Joint generating functions `(f_U(s_u, s_n), f_N(s_u, s_n))`.
#[pyfunction]
fn pgfs(params: &Params, s_u: f64, s_n: f64) -> PyResult<(f64, f64)> {
    let p = &params.inner;
    Ok((
        const_analysis::pgf_unnamed(p, s_u, s_n).map_err(to_py)?,
        const_analysis::pgf_named(p, s_u, s_n).map_err(to_py)?,
    ))
}

/// Extinction probabilities `(from_unnamed, from_named, outbreak)`.
#[pyfunction]
fn extinction_const(params: &Params) -> PyResult<(f64, f64, f64)> {
    let e = const_analysis::extinction_const(&params.inner).map_err(to_py)?;
    Ok((e.from_unnamed, e.from_named, e.outbreak))
}

#[pyfunction]
fn lambda_star_const(params: &Params) -> PyResult<f64> {
    const_analysis::lambda_star_const(&params.inner).map_err(to_py)
}

/// `R_U` with an exponential infectious period; `inf` at or above the blow-up rate.
#[pyfunction]
fn r_u_exp(params: &Params) -> PyResult<f64> {
    exp_analysis::r_u_exp(&params.inner).map_err(to_py)
}

#[pyfunction]
fn y_star(params: &Params) -> PyResult<f64> {
    exp_analysis::y_star(&params.inner).map_err(to_py)
}

/// Contact rate at which `R_U` first becomes infinite.
#[pyfunction]
fn lambda_star_exp(params: &Params) -> PyResult<f64> {
    exp_analysis::lambda_star_exp(&params.inner).map_err(to_py)
}

/// Dict with `y_star`, `r_u`, `lambda_star` and `finite`.
#[pyfunction]
fn analyze_exp<'py>(py: Python<'py>, params: &Params) -> PyResult<Bound<'py, PyDict>> {
    let r = exp_analysis::analyze_exp(&params.inner).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("y_star", r.y_star)?;
    d.set_item("r_u", r.r_u)?;
    d.set_item("lambda_star", r.lambda_star)?;
    d.set_item("finite", r.finite)?;
    Ok(d)
}

/// Upper bound on the blow-up contact rate for margin `epsilon`.
#[pyfunction]
fn sufficiency_bound(params: &Params, epsilon: f64) -> PyResult<f64> {
    exp_analysis::ru_infinite_sufficiency_bound(&params.inner, epsilon).map_err(to_py)
}

/// Contact rate at which the chosen quantity equals one: `const-r0`, `const-ru` or `exp-ru`.
#[pyfunction]
#[pyo3(signature = (params, case = "exp-ru"))]
fn lambda_crit(py: Python<'_>, params: &Params, case: &str) -> PyResult<f64> {
    let case: CritCase = case.parse().map_err(to_py)?;
    let p = params.inner;
    py.detach(|| exp_analysis::lambda_crit(&p, case)).map_err(to_py)
}

fn bp_config(inf_threshold: Option<u64>) -> BpConfig {
    BpConfig {
        inf_threshold,
        ..BpConfig::default()
    }
}

/// Offspring counts of `n` clusters; `None` marks a cluster declared infinite.
#[pyfunction]
#[pyo3(signature = (params, n, seed, inf_threshold = Some(100)))]
fn sample_r(py: Python<'_>, params: &Params, n: usize, seed: u64, inf_threshold: Option<u64>) -> PyResult<Vec<Option<u64>>> {
    let p = params.inner;
    let set = py
        .detach(|| bp_sim::sample_r_set(&p, &bp_config(inf_threshold), n, seed))
        .map_err(to_py)?;
    Ok(set.samples)
}

/// Simulated extinction probability: dict with `q`, `p_ext`, `se`, `p_inf`, `n`.
#[pyfunction]
#[pyo3(signature = (params, n, seed, inf_threshold = Some(100)))]
fn estimate_extinction<'py>(
    py: Python<'py>,
    params: &Params,
    n: usize,
    seed: u64,
    inf_threshold: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let e = py
        .detach(|| bp_sim::estimate_extinction(&p, &bp_config(inf_threshold), n, seed))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("q", e.q)?;
    d.set_item("p_ext", e.p_ext)?;
    d.set_item("se", e.se)?;
    d.set_item("p_inf", e.p_inf)?;
    d.set_item("n", e.n)?;
    Ok(d)
}

/// Simulated mean cluster offspring `(mean, se)`.
#[pyfunction]
fn estimate_ru(py: Python<'_>, params: &Params, n: usize, seed: u64) -> PyResult<(f64, f64)> {
    let p = params.inner;
    let m = py.detach(|| bp_sim::estimate_ru(&p, n, seed)).map_err(to_py)?;
    Ok((m.mean, m.se))
}

/// Final sizes of `n` simulated epidemics in a population of `params.population`.
#[pyfunction]
fn final_sizes(py: Python<'_>, params: &Params, n: usize, seed: u64) -> PyResult<Vec<u64>> {
    let p = params.inner;
    py.detach(|| epi_sim::final_sizes(&p, n, seed)).map_err(to_py)
}

/// Minor-outbreak proportion for each population size: list of dicts with
/// `population`, `cutoff`, `p_minor`, `se`, `n`.
#[pyfunction]
#[pyo3(signature = (params, populations, n, seed, cutoff = None))]
fn estimate_pe_vs_n<'py>(
    py: Python<'py>,
    params: &Params,
    populations: Vec<u64>,
    n: usize,
    seed: u64,
    cutoff: Option<u64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let p = params.inner;
    let rows = py
        .detach(|| epi_sim::estimate_pe_vs_n(&p, &populations, n, seed, cutoff))
        .map_err(to_py)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("population", r.population)?;
            d.set_item("cutoff", r.estimate.cutoff)?;
            d.set_item("p_minor", r.estimate.p_minor)?;
            d.set_item("se", r.estimate.se)?;
            d.set_item("n", r.estimate.n)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn pytracethresh(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", tracethresh::VERSION)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<Params>()?;
    m.add_function(wrap_pyfunction!(r0, m)?)?;
    m.add_function(wrap_pyfunction!(ru_const, m)?)?;
    m.add_function(wrap_pyfunction!(mean_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(pgfs, m)?)?;
    m.add_function(wrap_pyfunction!(extinction_const, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_star_const, m)?)?;
    m.add_function(wrap_pyfunction!(r_u_exp, m)?)?;
    m.add_function(wrap_pyfunction!(y_star, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_star_exp, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_exp, m)?)?;
    m.add_function(wrap_pyfunction!(sufficiency_bound, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_crit, m)?)?;
    m.add_function(wrap_pyfunction!(sample_r, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_extinction, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_ru, m)?)?;
    m.add_function(wrap_pyfunction!(final_sizes, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_pe_vs_n, m)?)?;
    Ok(())
}
