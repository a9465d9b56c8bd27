//! Pre-generation routing: send a question to the LLM when its score falls below τ.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cost::{average_quality, no_samples, EvalContext};
use crate::error::{Error, Result};
use crate::model::{CurvePoint, CurveTau, Dataset, QuestionRecord, RoutingMode, RoutingOutcome};

/// Where a question's routing score comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreSource {
    /// External classifier score stored in `pre_score`.
    PreScore,
    /// Largest prompted confidence level at which the SLM still answers.
    RefusalDerived,
}

impl FromStr for ScoreSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pre" => Ok(ScoreSource::PreScore),
            "refusal" => Ok(ScoreSource::RefusalDerived),
            other => Err(Error::param("score-source", format!("unknown source `{other}`"))),
        }
    }
}

impl fmt::Display for ScoreSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreSource::PreScore => "pre",
            ScoreSource::RefusalDerived => "refusal",
        })
    }
}

/// Score on the 0.1 grid: the largest level whose prompted sample was answered, 0.0 if none was.
///
/// Non-monotone refusal patterns resolve to the largest answering level.
pub fn derive_refusal_score(q: &QuestionRecord) -> Result<f64> {
    let mut tagged = q
        .slm_samples()
        .iter()
        .filter_map(|s| s.confidence_level().map(|l| (l, s.refusal())))
        .peekable();
    if tagged.peek().is_none() {
        return Err(Error::Missing {
            id: q.id().to_owned(),
            what: "confidence-tagged samples",
        });
    }
    Ok(tagged
        .filter(|&(_, refused)| !refused)
        .map(|(l, _)| l)
        .max()
        .map_or(0.0, |l| l.value()))
}

pub fn question_score(q: &QuestionRecord, source: ScoreSource) -> Result<f64> {
    match source {
        ScoreSource::PreScore => q.pre_score().ok_or_else(|| Error::Missing {
            id: q.id().to_owned(),
            what: "pre_score",
        }),
        ScoreSource::RefusalDerived => derive_refusal_score(q),
    }
}

/// Route one question with the score taken from `source`.
pub fn route_pre(
    q: &QuestionRecord,
    tau: f64,
    source: ScoreSource,
    ctx: &EvalContext,
) -> Result<RoutingOutcome> {
    route_pre_with_score(q, question_score(q, source)?, tau, ctx)
}

/// Route one question given its score: `score < tau` goes to the LLM, ties stay on the SLM.
pub fn route_pre_with_score(
    q: &QuestionRecord,
    score: f64,
    tau: f64,
    ctx: &EvalContext,
) -> Result<RoutingOutcome> {
    let outcome = if score < tau {
        RoutingOutcome {
            question_id: q.id().to_owned(),
            routed: true,
            quality: ctx.llm_quality(q)?,
            slm_cost: 0.0,
            llm_cost: ctx.llm_cost(q)?,
            decision_latency_tokens: 0,
            accepted_answer: None,
            mode: RoutingMode::Pre,
        }
    } else {
        RoutingOutcome {
            question_id: q.id().to_owned(),
            routed: false,
            quality: q.slm_accuracy().ok_or_else(|| no_samples(q))?,
            slm_cost: ctx.slm_single_cost(q)?,
            llm_cost: 0.0,
            decision_latency_tokens: 0,
            accepted_answer: plurality_answer(q),
            mode: RoutingMode::Pre,
        }
    };
    outcome.check()?;
    Ok(outcome)
}

/// Most frequent answer among stored samples, smallest key on ties.
fn plurality_answer(q: &QuestionRecord) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for a in q.slm_samples().iter().filter_map(|s| s.answer()) {
        *counts.entry(a).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (a, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((a, c));
        }
    }
    best.map(|(a, _)| a.to_owned())
}

/// Curve point for a fixed score vector at one threshold.
pub(crate) fn point_for_scores(
    dataset: &Dataset,
    scores: &[f64],
    tau: f64,
    ctx: &EvalContext,
    denom: f64,
) -> Result<CurvePoint> {
    let outcomes = dataset
        .questions()
        .par_iter()
        .zip(scores.par_iter())
        .map(|(q, &s)| route_pre_with_score(q, s, tau, ctx))
        .collect::<Result<Vec<_>>>()?;
    let spent: f64 = outcomes.iter().map(|o| o.slm_cost + o.llm_cost).sum();
    Ok(CurvePoint {
        tau: CurveTau::Threshold(tau),
        cost: spent / denom,
        performance: average_quality(&outcomes)?,
        n_routed: outcomes.iter().filter(|o| o.routed).count(),
    })
}

/// Curve for arbitrary per-question scores: both pure endpoints plus one point per τ.
pub fn sweep_scores(
    dataset: &Dataset,
    scores: &[f64],
    taus: &[f64],
    ctx: &EvalContext,
) -> Result<Vec<CurvePoint>> {
    if scores.len() != dataset.len() {
        return Err(Error::param("scores", "one score per question required"));
    }
    if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::param("taus", format!("{t} is outside [0, 1]")));
    }
    let (slm_only, llm_only) = ctx.endpoints(dataset)?;
    let denom = ctx.llm_total(dataset)?;
    let mut points = Vec::with_capacity(taus.len() + 2);
    points.push(slm_only);
    for &tau in taus {
        points.push(point_for_scores(dataset, scores, tau, ctx, denom)?);
    }
    points.push(llm_only);
    Ok(points)
}

/// Pre-generation sweep over `taus` with the given score source.
pub fn sweep_pre(
    dataset: &Dataset,
    taus: &[f64],
    source: ScoreSource,
    ctx: &EvalContext,
) -> Result<Vec<CurvePoint>> {
    let scores = dataset
        .questions()
        .iter()
        .map(|q| question_score(q, source))
        .collect::<Result<Vec<_>>>()?;
    sweep_scores(dataset, &scores, taus, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::default_taus;
    use crate::model::{ConfidenceLevel, LlmOutcome, PricingSchedule, SampleRecord};

    fn tagged(answer_up_to: u8) -> Vec<SampleRecord> {
        ConfidenceLevel::all()
            .map(|l| {
                let s = if l.tenths() <= answer_up_to {
                    SampleRecord::answered("a", true, 20).unwrap()
                } else {
                    SampleRecord::refused(6).unwrap()
                };
                s.at_level(l)
            })
            .collect()
    }

    fn q(id: &str, pre: Option<f64>, samples: Vec<SampleRecord>) -> QuestionRecord {
        QuestionRecord::new(
            id,
            50,
            pre,
            samples,
            Some(LlmOutcome {
                correct: true,
                tokens: 80,
            }),
        )
        .unwrap()
    }

    fn ctx(ds: &Dataset) -> EvalContext {
        EvalContext::new(ds, PricingSchedule::default(), false)
    }

    #[test]
    fn refusal_score_examples() {
        assert_eq!(derive_refusal_score(&q("a", None, tagged(6))).unwrap(), 0.6);
        assert_eq!(derive_refusal_score(&q("b", None, tagged(0))).unwrap(), 0.0);
        assert_eq!(derive_refusal_score(&q("c", None, tagged(10))).unwrap(), 1.0);
        let untagged = vec![SampleRecord::answered("a", true, 3).unwrap()];
        assert!(derive_refusal_score(&q("d", None, untagged)).is_err());
    }

    #[test]
    fn non_monotone_refusal_takes_largest_answering_level() {
        let mut samples = tagged(3);
        samples[7] = SampleRecord::answered("a", true, 20)
            .unwrap()
            .at_level(ConfidenceLevel::from_tenths(8).unwrap());
        assert_eq!(derive_refusal_score(&q("a", None, samples)).unwrap(), 0.8);
    }

    #[test]
    fn threshold_boundary_stays_on_slm() {
        let rec = q("a", Some(0.7), tagged(10));
        let ds = Dataset::new(vec![rec.clone()]).unwrap();
        let c = ctx(&ds);
        assert!(!route_pre(&rec, 0.7, ScoreSource::PreScore, &c).unwrap().routed);
        let low = q("b", Some(0.3), tagged(10));
        assert!(route_pre(&low, 0.7, ScoreSource::PreScore, &c).unwrap().routed);
        assert!(!route_pre(&low, 0.0, ScoreSource::PreScore, &c).unwrap().routed);
    }

    #[test]
    fn missing_score_is_an_error() {
        let rec = q("a", None, tagged(10));
        let ds = Dataset::new(vec![rec.clone()]).unwrap();
        assert!(route_pre(&rec, 0.5, ScoreSource::PreScore, &ctx(&ds)).is_err());
    }

    #[test]
    fn routed_outcome_carries_llm_cost_only() {
        let rec = q("a", Some(0.1), tagged(10));
        let ds = Dataset::new(vec![rec.clone()]).unwrap();
        let o = route_pre(&rec, 0.5, ScoreSource::PreScore, &ctx(&ds)).unwrap();
        assert_eq!(o.slm_cost, 0.0);
        assert!(o.llm_cost > 0.0);
        assert_eq!(o.decision_latency_tokens, 0);
    }

    #[test]
    fn default_sweep_has_thirteen_points() {
        let ds = Dataset::new(vec![q("a", Some(0.2), tagged(2)), q("b", Some(0.9), tagged(9))])
            .unwrap();
        let pts = sweep_pre(&ds, &default_taus(), ScoreSource::PreScore, &ctx(&ds)).unwrap();
        assert_eq!(pts.len(), 13);
        assert_eq!(pts[0].tau, CurveTau::SlmOnly);
        assert_eq!(pts[12].tau, CurveTau::LlmOnly);
        assert_eq!(pts[12].cost, 1.0);
    }

    #[test]
    fn refusal_source_at_tau_one_routes_below_one() {
        let ds = Dataset::new(vec![
            q("a", None, tagged(10)),
            q("b", None, tagged(9)),
            q("c", None, tagged(0)),
        ])
        .unwrap();
        let pts = sweep_pre(&ds, &[1.0], ScoreSource::RefusalDerived, &ctx(&ds)).unwrap();
        assert_eq!(pts[1].n_routed, 2);
    }

    #[test]
    fn all_max_scores_never_route() {
        let ds = Dataset::new(vec![q("a", Some(1.0), tagged(4)), q("b", Some(1.0), tagged(7))])
            .unwrap();
        let pts = sweep_pre(&ds, &default_taus(), ScoreSource::PreScore, &ctx(&ds)).unwrap();
        for p in &pts[1..12] {
            assert_eq!(p.cost, pts[0].cost);
            assert_eq!(p.n_routed, 0);
        }
    }
}
