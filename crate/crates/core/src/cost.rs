//! Token-level cost accounting and normalization.
//!
//! Every cost is in USD. Normalized costs divide by the LLM-only spend of the
//! same questions, so routing everything to the LLM scores exactly 1. The LLM
//! output length of each question is replaced by the dataset mean; the SLM
//! keeps its recorded lengths.

use crate::error::{Error, Result};
use crate::model::{
    CurvePoint, CurveTau, Dataset, DatasetProfile, PricingSchedule, QuestionRecord,
    RoutingMode, RoutingOutcome, SampleRecord, TOKENS_PER_PRICE_UNIT,
};

/// `C_i^s` for a single SLM generation of `out_tokens` tokens.
pub fn slm_question_cost(q: &QuestionRecord, out_tokens: u64, pricing: &PricingSchedule) -> f64 {
    slm_cost_fractional(q, out_tokens as f64, pricing)
}

pub(crate) fn slm_cost_fractional(q: &QuestionRecord, out_tokens: f64, pricing: &PricingSchedule) -> f64 {
    (pricing.slm_in() * f64::from(q.input_tokens()) + pricing.slm_out() * out_tokens)
        / TOKENS_PER_PRICE_UNIT
}

/// `C_i^l` with the dataset-average LLM output length; the question's own LLM length is ignored.
pub fn llm_question_cost(
    q: &QuestionRecord,
    profile: &DatasetProfile,
    pricing: &PricingSchedule,
) -> Result<f64> {
    let avg = profile.avg_llm_tokens.ok_or(Error::NoLlmData)?;
    Ok((pricing.llm_in() * f64::from(q.input_tokens()) + pricing.llm_out() * avg)
        / TOKENS_PER_PRICE_UNIT)
}

/// SLM spend of a cascade: input charged once (KV cache), every sample's output charged in full.
pub fn cascade_slm_cost<'a>(
    q: &QuestionRecord,
    samples: impl IntoIterator<Item = &'a SampleRecord>,
    pricing: &PricingSchedule,
) -> f64 {
    let out: u64 = samples.into_iter().map(|s| u64::from(s.tokens())).sum();
    slm_question_cost(q, out, pricing)
}

fn llm_reference_total(
    outcomes: &[RoutingOutcome],
    dataset: &Dataset,
    pricing: &PricingSchedule,
) -> Result<f64> {
    let mut total = 0.0;
    for o in outcomes {
        let q = lookup(dataset, &o.question_id)?;
        total += llm_question_cost(q, dataset.profile(), pricing)?;
    }
    Ok(total)
}

fn lookup<'a>(dataset: &'a Dataset, id: &str) -> Result<&'a QuestionRecord> {
    dataset.get(id).ok_or_else(|| Error::Missing {
        id: id.to_owned(),
        what: "record in the dataset",
    })
}

fn normalized(outcomes: &[RoutingOutcome], dataset: &Dataset, pricing: &PricingSchedule) -> Result<f64> {
    let spent: f64 = outcomes.iter().map(|o| o.slm_cost + o.llm_cost).sum();
    Ok(spent / llm_reference_total(outcomes, dataset, pricing)?)
}

fn require_mode(outcomes: &[RoutingOutcome], mode: RoutingMode) -> Result<()> {
    if outcomes.is_empty() {
        return Err(Error::Empty("outcomes"));
    }
    if let Some(o) = outcomes.iter().find(|o| o.mode != mode) {
        return Err(Error::invariant(
            "mode",
            format!("question `{}` has mode {:?}, expected {:?}", o.question_id, o.mode, mode),
        ));
    }
    Ok(())
}

/// Normalized pre-generation routing cost.
pub fn normalized_pre_cost(
    outcomes: &[RoutingOutcome],
    dataset: &Dataset,
    pricing: &PricingSchedule,
) -> Result<f64> {
    require_mode(outcomes, RoutingMode::Pre)?;
    normalized(outcomes, dataset, pricing)
}

/// Normalized cascade cost with `k` parallel samples per question.
pub fn normalized_cascade_cost(
    outcomes: &[RoutingOutcome],
    k: usize,
    dataset: &Dataset,
    pricing: &PricingSchedule,
) -> Result<f64> {
    require_mode(outcomes, RoutingMode::Cascade)?;
    for o in outcomes {
        let found = lookup(dataset, &o.question_id)?.slm_samples().len();
        if found < k {
            return Err(Error::SampleCount { expected: k, found });
        }
    }
    normalized(outcomes, dataset, pricing)
}

/// Mean quality over outcomes; each outcome already carries the SLM or LLM quality it earned.
pub fn average_quality(outcomes: &[RoutingOutcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::Empty("outcomes"));
    }
    Ok(outcomes.iter().map(|o| o.quality).sum::<f64>() / outcomes.len() as f64)
}

/// Pricing, dataset-level LLM length and LLM quality mode used while replaying a dataset.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext {
    pub pricing: PricingSchedule,
    pub profile: DatasetProfile,
    /// Treat the LLM as correct on every question (the "-100" metrics).
    pub assume_perfect: bool,
}

impl EvalContext {
    pub fn new(dataset: &Dataset, pricing: PricingSchedule, assume_perfect: bool) -> Self {
        Self {
            pricing,
            profile: *dataset.profile(),
            assume_perfect,
        }
    }

    pub fn llm_cost(&self, q: &QuestionRecord) -> Result<f64> {
        llm_question_cost(q, &self.profile, &self.pricing)
    }

    /// `p_i^l`: 1 in assume-perfect mode, else the recorded LLM correctness.
    pub fn llm_quality(&self, q: &QuestionRecord) -> Result<f64> {
        if self.assume_perfect {
            return Ok(1.0);
        }
        q.llm()
            .map(|l| if l.correct { 1.0 } else { 0.0 })
            .ok_or_else(|| Error::Missing {
                id: q.id().to_owned(),
                what: "LLM record (required outside assume-perfect mode)",
            })
    }

    /// Single-generation SLM cost using the mean stored sample length.
    pub fn slm_single_cost(&self, q: &QuestionRecord) -> Result<f64> {
        let tokens = q.mean_slm_tokens().ok_or_else(|| no_samples(q))?;
        Ok(slm_cost_fractional(q, tokens, &self.pricing))
    }

    /// Reference denominator: LLM-only spend over the whole dataset, summed in dataset order.
    pub fn llm_total(&self, dataset: &Dataset) -> Result<f64> {
        dataset.questions().iter().map(|q| self.llm_cost(q)).sum()
    }

    /// The two pure-policy endpoints `(C_s, P_s)` and `(C_l, P_l)`.
    pub fn endpoints(&self, dataset: &Dataset) -> Result<(CurvePoint, CurvePoint)> {
        if dataset.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let denom = self.llm_total(dataset)?;
        let n = dataset.len() as f64;
        let mut slm_cost = 0.0;
        let mut slm_perf = 0.0;
        let mut llm_perf = 0.0;
        for q in dataset.questions() {
            slm_cost += self.slm_single_cost(q)?;
            slm_perf += q.slm_accuracy().ok_or_else(|| no_samples(q))?;
            llm_perf += self.llm_quality(q)?;
        }
        Ok((
            CurvePoint {
                tau: CurveTau::SlmOnly,
                cost: slm_cost / denom,
                performance: slm_perf / n,
                n_routed: 0,
            },
            CurvePoint {
                tau: CurveTau::LlmOnly,
                cost: 1.0,
                performance: llm_perf / n,
                n_routed: dataset.len(),
            },
        ))
    }
}

pub(crate) fn no_samples(q: &QuestionRecord) -> Error {
    Error::Missing {
        id: q.id().to_owned(),
        what: "SLM samples",
    }
}
