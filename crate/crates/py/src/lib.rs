//! Python bindings: `import routerlab`.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use routerlab::cascade::{self, CascadeConfig, VotingScheme};
use routerlab::cost::EvalContext;
use routerlab::evaluate::{evaluate as core_evaluate, EvaluationRequest, Policy};
use routerlab::grid::default_taus;
use routerlab::metrics::{self, Endpoints, LatencyReport, MetricMode, MetricsReport};
use routerlab::model::{self, ConfidenceLevel, CurvePoint, CurveTau};
use routerlab::pre_router::{sweep_pre as core_sweep_pre, ScoreSource};
use routerlab::synth::{generate_synthetic, DifficultyProfile, SampleSchedule};
use routerlab::trainset::{self, CorpusQuestion, CorpusSample, LossInputs};

create_exception!(routerlab, RouterlabError, PyException);

fn err(e: routerlab::Error) -> PyErr {
    RouterlabError::new_err(e.to_string())
}

#[pyclass(name = "Pricing", module = "routerlab", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct Pricing(model::PricingSchedule);

#[pymethods]
impl Pricing {
    #[new]
    fn new(slm_in: f64, slm_out: f64, llm_in: f64, llm_out: f64) -> PyResult<Self> {
        model::PricingSchedule::new(slm_in, slm_out, llm_in, llm_out)
            .map(Pricing)
            .map_err(err)
    }

    #[staticmethod]
    fn default() -> Self {
        Pricing(model::PricingSchedule::default())
    }

    /// Input prices at a quarter of the output prices.
    #[staticmethod]
    fn from_output_prices(slm_out: f64, llm_out: f64) -> PyResult<Self> {
        model::PricingSchedule::from_output_prices(slm_out, llm_out)
            .map(Pricing)
            .map_err(err)
    }

    #[getter]
    fn slm_in(&self) -> f64 {
        self.0.slm_in()
    }
    #[getter]
    fn slm_out(&self) -> f64 {
        self.0.slm_out()
    }
    #[getter]
    fn llm_in(&self) -> f64 {
        self.0.llm_in()
    }
    #[getter]
    fn llm_out(&self) -> f64 {
        self.0.llm_out()
    }

    fn input_ratio(&self) -> f64 {
        self.0.input_ratio()
    }

    fn output_ratio(&self) -> f64 {
        self.0.output_ratio()
    }

    fn __repr__(&self) -> String {
        format!(
            "Pricing(slm_in={}, slm_out={}, llm_in={}, llm_out={})",
            self.0.slm_in(),
            self.0.slm_out(),
            self.0.llm_in(),
            self.0.llm_out()
        )
    }
}

#[pyclass(name = "Dataset", module = "routerlab", frozen)]
struct Dataset(model::Dataset);

#[pymethods]
impl Dataset {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        routerlab::io::load_dataset(path).map(Dataset).map_err(err)
    }

    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        routerlab::io::parse_dataset(text.as_bytes())
            .map(Dataset)
            .map_err(err)
    }

    /// Seeded synthetic questions; `schedule` is one of plain, ranged, fixed, all.
    #[staticmethod]
    #[pyo3(signature = (seed, n, schedule="all", forced_difficulty=None))]
    fn synthetic(seed: u64, n: usize, schedule: &str, forced_difficulty: Option<f64>) -> PyResult<Self> {
        let profile = DifficultyProfile {
            schedule: schedule.parse::<SampleSchedule>().map_err(err)?,
            forced_difficulty,
            ..DifficultyProfile::default()
        };
        let questions = generate_synthetic(seed, n, &profile).map_err(err)?;
        model::Dataset::new(questions).map(Dataset).map_err(err)
    }

    fn ids(&self) -> Vec<String> {
        self.0.questions().iter().map(|q| q.id().to_owned()).collect()
    }

    fn slm_accuracy(&self, id: &str) -> PyResult<Option<f64>> {
        let q = self
            .0
            .get(id)
            .ok_or_else(|| RouterlabError::new_err(format!("no question `{id}`")))?;
        Ok(q.slm_accuracy())
    }

    fn write(&self, path: &str) -> PyResult<()> {
        routerlab::io::write_dataset(path, self.0.questions()).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

fn point_dict<'py>(py: Python<'py>, p: &CurvePoint) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("tau", p.tau.label())?;
    d.set_item("cost", p.cost)?;
    d.set_item("performance", p.performance)?;
    d.set_item("n_routed", p.n_routed)?;
    Ok(d)
}

fn curve_list<'py>(py: Python<'py>, points: &[CurvePoint]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    points.iter().map(|p| point_dict(py, p)).collect()
}

fn latency_dict<'py>(py: Python<'py>, tau: f64, r: &LatencyReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("tau", tau)?;
    d.set_item("agl", r.agl)?;
    d.set_item("arol", r.arol)?;
    d.set_item("n_accepted", r.n_accepted)?;
    d.set_item("n_rejected", r.n_rejected)?;
    Ok(d)
}

fn report_dict<'py>(py: Python<'py>, r: &MetricsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("toa", r.toa)?;
    d.set_item("toga", r.toga)?;
    d.set_item("toa100", r.toa100)?;
    d.set_item("toga100", r.toga100)?;
    d.set_item("togr", r.togr)?;
    d.set_item("agl", r.agl)?;
    d.set_item("arol", r.arol)?;
    d.set_item("mode", r.mode.to_string())?;
    Ok(d)
}

fn context(ds: &Dataset, pricing: Option<&Pricing>, assume_perfect: bool) -> EvalContext {
    EvalContext::new(&ds.0, pricing.map_or_else(Default::default, |p| p.0), assume_perfect)
}

fn cascade_config(scheme: &str, k: usize, alpha: f64) -> PyResult<CascadeConfig> {
    Ok(CascadeConfig {
        scheme: scheme.parse::<VotingScheme>().map_err(err)?,
        k,
        alpha,
    })
}

/// Pre-generation routing curve over `taus` (default 0.0..=1.0 by 0.1), endpoints included.
#[pyfunction]
#[pyo3(signature = (dataset, taus=None, score_source="pre", pricing=None, assume_perfect=false))]
fn sweep_pre<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    taus: Option<Vec<f64>>,
    score_source: &str,
    pricing: Option<&Pricing>,
    assume_perfect: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let source: ScoreSource = score_source.parse().map_err(err)?;
    let ctx = context(dataset, pricing, assume_perfect);
    let curve = core_sweep_pre(&dataset.0, &taus.unwrap_or_else(default_taus), source, &ctx)
        .map_err(err)?;
    curve_list(py, &curve)
}

/// Cascade curve and per-threshold latency: `(points, latency)`.
#[pyfunction]
#[pyo3(signature = (dataset, scheme="fcv", k=10, alpha=0.5, taus=None, pricing=None, assume_perfect=false))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn sweep_cascade<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    scheme: &str,
    k: usize,
    alpha: f64,
    taus: Option<Vec<f64>>,
    pricing: Option<&Pricing>,
    assume_perfect: bool,
) -> PyResult<(Vec<Bound<'py, PyDict>>, Vec<Bound<'py, PyDict>>)> {
    let config = cascade_config(scheme, k, alpha)?;
    let ctx = context(dataset, pricing, assume_perfect);
    let s = cascade::sweep_cascade(&dataset.0, &taus.unwrap_or_else(default_taus), &config, &ctx)
        .map_err(err)?;
    let latency = s
        .latency
        .iter()
        .map(|(t, r)| latency_dict(py, *t, r))
        .collect::<PyResult<_>>()?;
    Ok((curve_list(py, &s.points)?, latency))
}

/// Oracle curve routing the lowest-accuracy questions first.
#[pyfunction]
#[pyo3(signature = (dataset, pricing=None, assume_perfect=true))]
fn golden_curve<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    pricing: Option<&Pricing>,
    assume_perfect: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let ctx = context(dataset, pricing, assume_perfect);
    curve_list(py, &metrics::golden_curve(&dataset.0, &ctx).map_err(err)?)
}

/// Full metrics report for `policy` ("pre" or "cascade").
#[pyfunction]
#[pyo3(signature = (dataset, policy="pre", score_source="pre", scheme="fcv", k=10, alpha=0.5, taus=None, pricing=None, assume_perfect=false, latency_tau=0.6))]
#[allow(clippy::too_many_arguments)]
fn evaluate<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    policy: &str,
    score_source: &str,
    scheme: &str,
    k: usize,
    alpha: f64,
    taus: Option<Vec<f64>>,
    pricing: Option<&Pricing>,
    assume_perfect: bool,
    latency_tau: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let policy = match policy {
        "pre" => Policy::Pre(score_source.parse().map_err(err)?),
        "cascade" => Policy::Cascade(cascade_config(scheme, k, alpha)?),
        other => return Err(RouterlabError::new_err(format!("unknown policy `{other}`"))),
    };
    let req = EvaluationRequest {
        policy,
        taus: taus.unwrap_or_else(default_taus),
        pricing: pricing.map_or_else(Default::default, |p| p.0),
        mode: if assume_perfect {
            MetricMode::Perfect
        } else {
            MetricMode::Actual
        },
        latency_tau,
    };
    let eval = core_evaluate(&dataset.0, &req).map_err(err)?;
    report_dict(py, &eval.report)
}

/// Area under `(cost, performance)` points normalized between the two endpoints.
#[pyfunction]
fn toa(points: Vec<(f64, f64)>, slm: (f64, f64), llm: (f64, f64)) -> PyResult<f64> {
    let pts: Vec<CurvePoint> = points
        .into_iter()
        .map(|(cost, performance)| CurvePoint {
            tau: CurveTau::Threshold(0.0),
            cost,
            performance,
            n_routed: 0,
        })
        .collect();
    metrics::toa(&pts, Endpoints { slm, llm }).map_err(err)
}

#[pyfunction]
fn togr(router_toa: f64, golden_toa: f64) -> PyResult<f64> {
    metrics::togr_from_areas(router_toa, golden_toa).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (confidence, alpha=0.5))]
fn weight_of(confidence: f64, alpha: f64) -> PyResult<f64> {
    cascade::weight_of(confidence, alpha).map_err(err)
}

/// `(answer or None, confidence or None, tokens)`; `None` answer means a refusal.
type PySample = (Option<String>, Option<f64>, u32);

fn to_samples(samples: Vec<PySample>) -> PyResult<Vec<model::SampleRecord>> {
    samples
        .into_iter()
        .map(|(answer, level, tokens)| {
            let level = level.map(ConfidenceLevel::from_value).transpose().map_err(err)?;
            let refusal = answer.is_none();
            model::SampleRecord::new(answer.as_deref(), false, tokens, level, refusal).map_err(err)
        })
        .collect()
}

/// Weighted vote shares per canonical answer.
#[pyfunction]
#[pyo3(signature = (samples, alpha=0.5))]
fn tally(samples: Vec<PySample>, alpha: f64) -> PyResult<Vec<(String, f64)>> {
    let samples = to_samples(samples)?;
    let t = cascade::tally_votes(samples.iter(), alpha).map_err(err)?;
    Ok(t.deltas().map(|(a, d)| (a.to_owned(), d)).collect())
}

/// Parallel-sampling simulation: `(accepted answer or None, decision latency in tokens)`.
#[pyfunction]
#[pyo3(signature = (samples, tau, alpha=0.5))]
fn simulate_parallel(samples: Vec<PySample>, tau: f64, alpha: f64) -> PyResult<(Option<String>, u32)> {
    let samples = to_samples(samples)?;
    if samples.is_empty() {
        return Err(RouterlabError::new_err("no samples"));
    }
    let refs: Vec<&model::SampleRecord> = samples.iter().collect();
    let (decision, latency) = cascade::simulate_parallel(&refs, tau, alpha).map_err(err)?;
    let answer = match decision {
        cascade::Decision::Accept(a) => Some(a),
        cascade::Decision::Reject => None,
    };
    Ok((answer, latency))
}

/// DPO plus SFT loss: `(dpo, sft, total)`.
#[pyfunction]
#[pyo3(signature = (chosen_logp_policy, chosen_logp_ref, rejected_logp_policy, rejected_logp_ref, chosen_tokens, beta=1.0, lam=0.2))]
fn combined_loss(
    chosen_logp_policy: f64,
    chosen_logp_ref: f64,
    rejected_logp_policy: f64,
    rejected_logp_ref: f64,
    chosen_tokens: u32,
    beta: f64,
    lam: f64,
) -> PyResult<(f64, f64, f64)> {
    let inputs = LossInputs {
        chosen_logp_policy,
        chosen_logp_ref,
        rejected_logp_policy,
        rejected_logp_ref,
        chosen_tokens,
    };
    let l = trainset::combined_loss(&inputs, beta, lam).map_err(err)?;
    Ok((l.dpo, l.sft, l.total))
}

fn corpus_question(id: String, question: String, samples: Vec<(String, bool, u32)>) -> CorpusQuestion {
    CorpusQuestion {
        id,
        question,
        samples: samples
            .into_iter()
            .map(|(text, correct, tokens)| CorpusSample { text, correct, tokens })
            .collect(),
    }
}

/// Preference pair from `(text, correct, tokens)` samples, or None when no pair qualifies.
#[pyfunction]
#[pyo3(signature = (id, question, samples, min_ratio=1.5))]
fn build_dpo_pair<'py>(
    py: Python<'py>,
    id: String,
    question: String,
    samples: Vec<(String, bool, u32)>,
    min_ratio: f64,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let q = corpus_question(id, question, samples);
    q.validate().map_err(err)?;
    trainset::build_dpo_pair(&q, min_ratio)
        .map(|p| {
            let d = PyDict::new(py);
            d.set_item("id", p.id)?;
            d.set_item("chosen", p.chosen)?;
            d.set_item("rejected", p.rejected)?;
            d.set_item("chosen_tokens", p.chosen_tokens)?;
            d.set_item("rejected_tokens", p.rejected_tokens)?;
            Ok(d)
        })
        .transpose()
}

/// Ten confidence-prefixed prompts with answer or refusal targets.
#[pyfunction]
#[pyo3(signature = (id, question, accuracy_tenths, correct_answers, seed=0))]
fn build_refusal_set<'py>(
    py: Python<'py>,
    id: &str,
    question: &str,
    accuracy_tenths: u8,
    correct_answers: Vec<String>,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    trainset::build_refusal_set(id, question, accuracy_tenths, &correct_answers, seed)
        .map_err(err)?
        .into_iter()
        .map(|e| {
            let d = PyDict::new(py);
            d.set_item("id", e.id)?;
            d.set_item("threshold", e.threshold.value())?;
            d.set_item("prompt", e.prompt)?;
            d.set_item("target", e.target)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "routerlab")]
pub fn routerlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RouterlabError", m.py().get_type::<RouterlabError>())?;
    m.add_class::<Pricing>()?;
    m.add_class::<Dataset>()?;
    m.add_function(wrap_pyfunction!(sweep_pre, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_cascade, m)?)?;
    m.add_function(wrap_pyfunction!(golden_curve, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(toa, m)?)?;
    m.add_function(wrap_pyfunction!(togr, m)?)?;
    m.add_function(wrap_pyfunction!(weight_of, m)?)?;
    m.add_function(wrap_pyfunction!(tally, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_parallel, m)?)?;
    m.add_function(wrap_pyfunction!(combined_loss, m)?)?;
    m.add_function(wrap_pyfunction!(build_dpo_pair, m)?)?;
    m.add_function(wrap_pyfunction!(build_refusal_set, m)?)?;
    m.add("REFUSAL_TEMPLATE", trainset::REFUSAL_TEMPLATE)?;
    Ok(())
}
