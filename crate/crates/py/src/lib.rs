//! Python bindings. Formulas, automata, planning problems, strategies and
//! the co-assembly generator, with results returned as plain Python values.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tremble_core::abstraction::{mdp_from_det, mdpst_from_nondet, Mdpst};
use tremble_core::coassembly::{self, BenchConfig, Predicate};
use tremble_core::dfa::{compile, materialize, minimize, Dfa};
use tremble_core::domain::{parse_domain, parse_errors, Domain, ErrorModel};
use tremble_core::ltlf::{self, canonicalize, Interpretation, PropSet};
use tremble_core::product::{synthesize, Strategy as CoreStrategy, ViOptions};
use tremble_core::sim::{self, NaturePolicy};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn props_of(names: Vec<String>) -> PyResult<PropSet> {
    PropSet::new(names).map_err(value_err)
}

fn interpretation(props: &PropSet, step: &[String]) -> PyResult<Interpretation> {
    step.iter()
        .map(|n| props.get(n).cloned().ok_or_else(|| value_err(format!("unknown proposition `{n}`"))))
        .collect()
}

/// Canonical form of `text` over the propositions `props`.
#[pyfunction]
fn canonical(text: &str, props: Vec<String>) -> PyResult<String> {
    let ps = props_of(props)?;
    let f = ltlf::parse(text, &ps).map_err(value_err)?;
    Ok(canonicalize(&f).to_string())
}

/// Whether the finite trace satisfies the formula. Each trace step is the
/// list of propositions true at that instant.
#[pyfunction]
fn holds(text: &str, props: Vec<String>, trace: Vec<Vec<String>>) -> PyResult<bool> {
    let ps = props_of(props)?;
    let f = ltlf::parse(text, &ps).map_err(value_err)?;
    let t = trace.iter().map(|s| interpretation(&ps, s)).collect::<PyResult<Vec<_>>>()?;
    ltlf::evaluate(&f, &t).map_err(value_err)
}

/// The goal automaton of a formula, explored on demand.
#[pyclass(module = "tremble")]
struct Automaton {
    props: PropSet,
    dfa: Dfa,
}

#[pymethods]
impl Automaton {
    #[new]
    fn new(formula: &str, props: Vec<String>) -> PyResult<Self> {
        let ps = props_of(props)?;
        let f = ltlf::parse(formula, &ps).map_err(value_err)?;
        let dfa = compile(&f, &ps);
        Ok(Automaton { props: ps, dfa })
    }

    /// States discovered so far.
    #[getter]
    fn num_states(&self) -> usize {
        self.dfa.num_states()
    }

    fn accepts(&self, trace: Vec<Vec<String>>) -> PyResult<bool> {
        let t = trace.iter().map(|s| interpretation(&self.props, s)).collect::<PyResult<Vec<_>>>()?;
        self.dfa.accepts(&t).map_err(value_err)
    }

    /// Explores every state and returns the minimal automaton in dot format.
    fn to_dot(&self) -> PyResult<String> {
        let e = materialize(&self.dfa).map_err(value_err)?;
        Ok(minimize(&e).to_dot())
    }

    fn minimal_states(&self) -> PyResult<usize> {
        let e = materialize(&self.dfa).map_err(value_err)?;
        Ok(minimize(&e).num_states())
    }
}

/// A synthesized strategy.
#[pyclass(module = "tremble")]
struct Strategy {
    inner: CoreStrategy,
}

#[pymethods]
impl Strategy {
    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Action chosen in domain state `s` with automaton state `q`.
    fn action(&self, s: u32, q: &str) -> Option<u32> {
        self.inner.get(s, q).map(|e| e.action)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreStrategy::from_json(text).map(|inner| Strategy { inner }).map_err(value_err)
    }
}

/// A domain, slip model and goal, ready to solve and simulate.
#[pyclass(module = "tremble")]
struct Problem {
    domain: Domain,
    errors: ErrorModel,
    dfa: Dfa,
    mdpst: Mdpst,
}

impl Problem {
    fn build(domain: Domain, errors: ErrorModel, formula: &str) -> PyResult<Self> {
        let props = domain.as_nondet().props();
        let f = ltlf::parse(formula, props).map_err(value_err)?;
        let dfa = compile(&f, props);
        let mdpst = match &domain {
            Domain::Det(d) => mdp_from_det(d, &errors),
            Domain::Nondet(n) => mdpst_from_nondet(n, &errors),
        }
        .map_err(value_err)?;
        Ok(Problem { domain, errors, dfa, mdpst })
    }

    fn policy(nature: &str) -> PyResult<NaturePolicy<'static>> {
        match nature {
            "adversarial" => Ok(NaturePolicy::AdversarialGreedy),
            "random" => Ok(NaturePolicy::UniformRandom),
            other => Err(value_err(format!("unknown nature `{other}`; use adversarial or random"))),
        }
    }
}

#[pymethods]
impl Problem {
    /// Builds from the JSON text of a domain file and an error file.
    #[new]
    fn new(domain_json: &str, errors_json: &str, formula: &str) -> PyResult<Self> {
        let d = parse_domain(domain_json).map_err(value_err)?;
        let e = parse_errors(errors_json).map_err(value_err)?;
        Self::build(d, e, formula)
    }

    /// A benchmark instance with `n` blocks, human budget `k` and slip
    /// probability `p`.
    #[staticmethod]
    #[pyo3(signature = (n, k, p, goal=None))]
    fn coassembly(n: usize, k: u32, p: f64, goal: Option<Vec<u8>>) -> PyResult<Self> {
        let cfg = BenchConfig { goal, ..BenchConfig::new(n, k, p) };
        let b = coassembly::build_coassembly(&cfg).map_err(value_err)?;
        let (d, e, f) = b.into_parts();
        let props = d.props().clone();
        let dfa = compile(&f, &props);
        let mdpst = mdpst_from_nondet(&d, &e).map_err(value_err)?;
        Ok(Problem { domain: Domain::Nondet(d), errors: e, dfa, mdpst })
    }

    #[getter]
    fn num_states(&self) -> usize {
        self.mdpst.num_states()
    }

    #[getter]
    fn num_transitions(&self) -> usize {
        self.mdpst.num_transitions()
    }

    #[pyo3(signature = (epsilon=tremble_core::product::DEFAULT_EPSILON))]
    fn solve(&self, py: Python<'_>, epsilon: f64) -> PyResult<Strategy> {
        if !(epsilon > 0.0) {
            return Err(value_err("epsilon must be positive"));
        }
        let opts = ViOptions { epsilon, ..ViOptions::default() };
        let syn = py.detach(|| synthesize(&self.mdpst, &self.dfa, opts));
        Ok(Strategy { inner: syn.strategy })
    }

    /// One run; returns a dict with `success`, `stop` and the step log.
    #[pyo3(signature = (strategy, nature="adversarial", seed=0, max_steps=200))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        strategy: &Strategy,
        nature: &str,
        seed: u64,
        max_steps: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut policy = Self::policy(nature)?;
        let r = sim::run(self.domain.as_nondet(), &self.errors, &strategy.inner, &self.dfa, &mut policy, seed, max_steps)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let d = PyDict::new(py);
        d.set_item("success", r.success)?;
        d.set_item("stop", serde_json::to_value(r.stop).map_err(value_err)?.as_str().unwrap_or_default())?;
        d.set_item("steps", r.steps())?;
        d.set_item("log", r.to_jsonl())?;
        Ok(d)
    }

    /// Success rate over `runs` seeded runs: `(estimate, stderr)`.
    #[pyo3(signature = (strategy, runs, nature="adversarial", seed=0, max_steps=200))]
    fn monte_carlo(
        &self,
        py: Python<'_>,
        strategy: &Strategy,
        runs: usize,
        nature: &str,
        seed: u64,
        max_steps: usize,
    ) -> PyResult<(f64, f64)> {
        let adversarial = matches!(Self::policy(nature)?, NaturePolicy::AdversarialGreedy);
        let est = py
            .detach(|| {
                let policy = if adversarial { NaturePolicy::AdversarialGreedy } else { NaturePolicy::UniformRandom };
                sim::monte_carlo(self.domain.as_nondet(), &self.errors, &strategy.inner, &self.dfa, &policy, runs, seed, max_steps)
            })
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok((est.estimate, est.stderr))
    }
}

/// Allowed block placements for `n` blocks, each as a list of columns
/// (0 is storage).
#[pyfunction]
#[pyo3(signature = (n, strict=false))]
fn prune_states(n: usize, strict: bool) -> Vec<Vec<u8>> {
    let pred = if strict { Predicate::Strict } else { Predicate::Prose };
    coassembly::prune_states(n, pred).into_iter().map(|p| p.positions().to_vec()).collect()
}

/// Builds and solves one co-assembly instance, returning its size and timing
/// record as a dict.
#[pyfunction]
fn measure<'py>(py: Python<'py>, n: usize, k: u32, p: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = py.detach(|| coassembly::measure(&BenchConfig::new(n, k, p))).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("N", r.n)?;
    d.set_item("K", r.k)?;
    d.set_item("p", r.p)?;
    d.set_item("states", r.states)?;
    d.set_item("transitions", r.transitions)?;
    d.set_item("model_build_ms", r.model_build_ms)?;
    d.set_item("synthesis_ms", r.synthesis_ms)?;
    d.set_item("value", r.value)?;
    Ok(d)
}

#[pymodule]
fn tremble(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(canonical, m)?)?;
    m.add_function(wrap_pyfunction!(holds, m)?)?;
    m.add_function(wrap_pyfunction!(prune_states, m)?)?;
    m.add_function(wrap_pyfunction!(measure, m)?)?;
    m.add_class::<Automaton>()?;
    m.add_class::<Strategy>()?;
    m.add_class::<Problem>()?;
    Ok(())
}
