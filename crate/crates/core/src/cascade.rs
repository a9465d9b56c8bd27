//! Cascade routing: the SLM samples `K` answers in parallel, a confidence-weighted
//! vote decides whether to keep the top answer or fall back to the LLM.
//!
//! Refusal samples carry their weight in the vote denominator but support no
//! candidate, so a question the SLM mostly refuses cannot be accepted on the
//! strength of a single answer.
//!
//! Latency is simulated in output tokens: samples finish in ascending length
//! (index breaks ties) and generation stops as soon as the outcome of the vote
//! is certain. Early stopping never changes the decision or the cost.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cost::{average_quality, cascade_slm_cost, EvalContext};
use crate::error::{Error, Result};
use crate::metrics::{latency_report, LatencyReport};
use crate::model::{
    ConfidenceLevel, CurvePoint, CurveTau, Dataset, QuestionRecord, RoutingMode, RoutingOutcome,
    SampleRecord,
};

pub const DEFAULT_ALPHA: f64 = 0.5;
/// Mean of the ten prompted confidence levels.
pub const AVERAGE_CONFIDENCE: f64 = 0.55;
/// Weight of a sample that was not prompted with a confidence level.
pub const UNTAGGED_WEIGHT: f64 = 1.0;
/// Slack on vote-share comparisons, absorbing summation-order rounding.
pub const DECISION_TOLERANCE: f64 = 1e-12;

/// Raw weight formula `0.55 + alpha * (p - 0.55)`, with no grid check.
pub fn confidence_weight(p: f64, alpha: f64) -> f64 {
    AVERAGE_CONFIDENCE + alpha * (p - AVERAGE_CONFIDENCE)
}

/// Weight of a vote prompted at confidence `p`, which must be on the 0.1 grid.
pub fn weight_of(p: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let level = ConfidenceLevel::from_value(p)?;
    Ok(confidence_weight(level.value(), alpha))
}

fn check_alpha(alpha: f64) -> Result<()> {
    // The 0.1 level must keep a positive weight.
    let lowest = confidence_weight(ConfidenceLevel::MIN.value(), alpha);
    if !(alpha.is_finite() && alpha >= 0.0 && lowest > 0.0) {
        return Err(Error::param(
            "alpha",
            format!("{alpha} must be >= 0 and keep every weight positive"),
        ));
    }
    Ok(())
}

fn sample_weight(s: &SampleRecord, alpha: f64) -> f64 {
    s.confidence_level()
        .map_or(UNTAGGED_WEIGHT, |l| confidence_weight(l.value(), alpha))
}

/// Weighted vote mass per candidate answer over all `K` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteTally {
    masses: BTreeMap<String, f64>,
    refusal_mass: f64,
    total_weight: f64,
}

impl VoteTally {
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn refusal_mass(&self) -> f64 {
        self.refusal_mass
    }

    pub fn mass(&self, answer: &str) -> f64 {
        self.masses.get(answer).copied().unwrap_or(0.0)
    }

    /// Vote share `δ(answer)`.
    pub fn delta(&self, answer: &str) -> f64 {
        self.mass(answer) / self.total_weight
    }

    /// `(answer, δ)` for every candidate, in key order.
    pub fn deltas(&self) -> impl Iterator<Item = (&str, f64)> {
        self.masses
            .iter()
            .map(move |(a, m)| (a.as_str(), m / self.total_weight))
    }

    /// Candidate with the highest share; ties go to the smallest key.
    pub fn leader(&self) -> Option<(&str, f64)> {
        let slack = DECISION_TOLERANCE * self.total_weight;
        let mut best: Option<(&str, f64)> = None;
        for (a, &m) in &self.masses {
            if best.is_none_or(|(_, bm)| m > bm + slack) {
                best = Some((a.as_str(), m));
            }
        }
        best.map(|(a, m)| (a, m / self.total_weight))
    }

    pub fn max_delta(&self) -> f64 {
        self.leader().map_or(0.0, |(_, d)| d)
    }
}

/// Build the weighted tally; untagged samples weigh 1, refusals only enlarge the denominator.
pub fn tally_votes<'a>(
    samples: impl IntoIterator<Item = &'a SampleRecord>,
    alpha: f64,
) -> Result<VoteTally> {
    check_alpha(alpha)?;
    let mut tally = VoteTally {
        masses: BTreeMap::new(),
        refusal_mass: 0.0,
        total_weight: 0.0,
    };
    for s in samples {
        let w = sample_weight(s, alpha);
        tally.total_weight += w;
        match s.answer() {
            Some(a) => *tally.masses.entry(a.to_owned()).or_insert(0.0) += w,
            None => tally.refusal_mass += w,
        }
    }
    if tally.total_weight == 0.0 {
        return Err(Error::Empty("samples"));
    }
    Ok(tally)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Accept(String),
    Reject,
}

impl Decision {
    pub fn is_reject(&self) -> bool {
        matches!(self, Decision::Reject)
    }
}

/// Accept the leading answer iff its share reaches `tau`. A tally with no answers is rejected.
pub fn decide(tally: &VoteTally, tau: f64) -> Decision {
    match tally.leader() {
        Some((a, d)) if d >= tau - DECISION_TOLERANCE => Decision::Accept(a.to_owned()),
        _ => Decision::Reject,
    }
}

/// Replay parallel generation and report the decision with the token count at which it became certain.
///
/// After each completion the vote is accept-certain when an observed answer already holds share
/// `tau`, and reject-certain when no answer (seen or unseen) could reach `tau` even with every
/// unfinished sample. Without early certainty the latency is the longest sample. The returned
/// decision is always that of the full tally.
pub fn simulate_parallel(samples: &[&SampleRecord], tau: f64, alpha: f64) -> Result<(Decision, u32)> {
    let tally = tally_votes(samples.iter().copied(), alpha)?;
    let decision = decide(&tally, tau);

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by_key(|&i| (samples[i].tokens(), i));

    let total = tally.total_weight();
    let threshold = tau - DECISION_TOLERANCE;
    // remaining[j] = weight of samples still running after the j-th completion.
    let mut remaining = vec![0.0; order.len()];
    let mut acc = 0.0;
    for j in (0..order.len()).rev() {
        remaining[j] = acc;
        acc += sample_weight(samples[order[j]], alpha);
    }

    let mut observed: BTreeMap<&str, f64> = BTreeMap::new();
    let mut latency = samples[*order.last().expect("non-empty")].tokens();
    for (j, &i) in order.iter().enumerate() {
        let s = samples[i];
        if let Some(a) = s.answer() {
            *observed.entry(a).or_insert(0.0) += sample_weight(s, alpha);
        }
        let lead = observed.values().copied().fold(0.0, f64::max);
        let accept_certain = !observed.is_empty() && lead / total >= threshold;
        let reject_certain = (lead + remaining[j]) / total < threshold;
        if accept_certain || reject_certain {
            latency = s.tokens();
            break;
        }
    }
    Ok((decision, latency))
}

/// Which stored samples feed the vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VotingScheme {
    /// Plain self-consistency over untagged samples, equal weights.
    SelfConsistency,
    /// One sample at each of the ten confidence levels.
    RangedConfidence,
    /// `K` samples all prompted at confidence 1.0.
    FixedConfidence,
}

impl VotingScheme {
    pub fn name(&self) -> &'static str {
        match self {
            VotingScheme::SelfConsistency => "sc",
            VotingScheme::RangedConfidence => "rcv",
            VotingScheme::FixedConfidence => "fcv",
        }
    }
}

impl fmt::Display for VotingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VotingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sc" => Ok(VotingScheme::SelfConsistency),
            "rcv" => Ok(VotingScheme::RangedConfidence),
            "fcv" => Ok(VotingScheme::FixedConfidence),
            other => Err(Error::param("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

/// Pick the `k` samples the scheme votes with.
pub fn select_samples(
    q: &QuestionRecord,
    scheme: VotingScheme,
    k: usize,
) -> Result<Vec<&SampleRecord>> {
    let mismatch = |message: String| Error::SchemeMismatch {
        id: q.id().to_owned(),
        scheme: scheme.name(),
        message,
    };
    if k == 0 {
        return Err(Error::param("k", "at least one sample is required"));
    }
    let samples = q.slm_samples();
    match scheme {
        VotingScheme::SelfConsistency | VotingScheme::FixedConfidence => {
            let pool: Vec<&SampleRecord> = samples
                .iter()
                .filter(|s| match scheme {
                    VotingScheme::SelfConsistency => s.confidence_level().is_none(),
                    _ => s.confidence_level() == Some(ConfidenceLevel::MAX),
                })
                .take(k)
                .collect();
            if pool.len() < k {
                return Err(mismatch(format!("needs {k} samples, found {}", pool.len())));
            }
            Ok(pool)
        }
        VotingScheme::RangedConfidence => {
            if k != 10 {
                return Err(Error::param("k", "ranged confidence voting uses exactly 10 samples"));
            }
            ConfidenceLevel::all()
                .map(|level| {
                    samples
                        .iter()
                        .find(|s| s.confidence_level() == Some(level))
                        .ok_or_else(|| mismatch(format!("no sample at level {level}")))
                })
                .collect()
        }
    }
}

/// Voting parameters shared by every question of a cascade run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeConfig {
    pub scheme: VotingScheme,
    pub k: usize,
    pub alpha: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            scheme: VotingScheme::FixedConfidence,
            k: 10,
            alpha: DEFAULT_ALPHA,
        }
    }
}

/// Run the cascade on one question at threshold `tau`.
pub fn route_cascade(
    q: &QuestionRecord,
    tau: f64,
    config: &CascadeConfig,
    ctx: &EvalContext,
) -> Result<RoutingOutcome> {
    let samples = select_samples(q, config.scheme, config.k)?;
    let (decision, latency) = simulate_parallel(&samples, tau, config.alpha)?;
    let slm_cost = cascade_slm_cost(q, samples.iter().copied(), &ctx.pricing);
    let outcome = match decision {
        Decision::Reject => RoutingOutcome {
            question_id: q.id().to_owned(),
            routed: true,
            quality: ctx.llm_quality(q)?,
            slm_cost,
            llm_cost: ctx.llm_cost(q)?,
            decision_latency_tokens: latency,
            accepted_answer: None,
            mode: RoutingMode::Cascade,
        },
        Decision::Accept(answer) => RoutingOutcome {
            question_id: q.id().to_owned(),
            routed: false,
            quality: if q.is_correct_answer(&answer) { 1.0 } else { 0.0 },
            slm_cost,
            llm_cost: 0.0,
            decision_latency_tokens: latency,
            accepted_answer: Some(answer),
            mode: RoutingMode::Cascade,
        },
    };
    outcome.check()?;
    Ok(outcome)
}

/// Cascade outcomes for every question at one threshold, in dataset order.
pub fn route_cascade_all(
    dataset: &Dataset,
    tau: f64,
    config: &CascadeConfig,
    ctx: &EvalContext,
) -> Result<Vec<RoutingOutcome>> {
    dataset
        .questions()
        .par_iter()
        .map(|q| route_cascade(q, tau, config, ctx))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSweep {
    pub points: Vec<CurvePoint>,
    /// AGL/AROL at each threshold, in grid order.
    pub latency: Vec<(f64, LatencyReport)>,
}

/// Cascade sweep: both pure endpoints plus one curve point and one latency report per τ.
pub fn sweep_cascade(
    dataset: &Dataset,
    taus: &[f64],
    config: &CascadeConfig,
    ctx: &EvalContext,
) -> Result<CascadeSweep> {
    if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::param("taus", format!("{t} is outside [0, 1]")));
    }
    let (slm_only, llm_only) = ctx.endpoints(dataset)?;
    let denom = ctx.llm_total(dataset)?;
    let mut points = vec![slm_only];
    let mut latency = Vec::with_capacity(taus.len());
    for &tau in taus {
        let outcomes = route_cascade_all(dataset, tau, config, ctx)?;
        let spent: f64 = outcomes.iter().map(|o| o.slm_cost + o.llm_cost).sum();
        points.push(CurvePoint {
            tau: CurveTau::Threshold(tau),
            cost: spent / denom,
            performance: average_quality(&outcomes)?,
            n_routed: outcomes.iter().filter(|o| o.routed).count(),
        });
        latency.push((tau, latency_report(&outcomes)?));
    }
    points.push(llm_only);
    Ok(CascadeSweep { points, latency })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LlmOutcome, PricingSchedule};

    fn ans(a: &str, tokens: u32) -> SampleRecord {
        SampleRecord::answered(a, a == "a", tokens).unwrap()
    }

    fn refuse(tokens: u32) -> SampleRecord {
        SampleRecord::refused(tokens).unwrap()
    }

    fn level(t: u8) -> ConfidenceLevel {
        ConfidenceLevel::from_tenths(t).unwrap()
    }

    #[test]
    fn weight_formula() {
        assert!((confidence_weight(0.55, 0.5) - 0.55).abs() < 1e-15);
        assert!((weight_of(1.0, 0.5).unwrap() - 0.775).abs() < 1e-15);
        assert!((weight_of(0.1, 0.5).unwrap() - 0.325).abs() < 1e-15);
        assert!(weight_of(0.55, 0.5).is_err());
        assert!(weight_of(0.5, -0.1).is_err());
        assert!(weight_of(0.5, 2.0).is_err());
    }

    #[test]
    fn tally_counts_with_equal_weights() {
        let s = [ans("a", 1), ans("a", 1), ans("b", 1), ans("c", 1)];
        let t = tally_votes(&s, 0.5).unwrap();
        assert_eq!(t.delta("a"), 0.5);
        assert_eq!(t.delta("b"), 0.25);
        assert_eq!(t.delta("c"), 0.25);
        assert_eq!(t.leader(), Some(("a", 0.5)));
    }

    #[test]
    fn all_refusals_give_zero_shares() {
        let s = [refuse(5), refuse(6)];
        let t = tally_votes(&s, 0.5).unwrap();
        assert_eq!(t.max_delta(), 0.0);
        assert_eq!(t.leader(), None);
        assert_eq!(decide(&t, 0.0), Decision::Reject);
    }

    #[test]
    fn single_vote_has_full_share() {
        let s = [ans("a", 3).at_level(level(3))];
        assert_eq!(tally_votes(&s, 0.5).unwrap().delta("a"), 1.0);
    }

    #[test]
    fn decide_boundary_and_ties() {
        let six = [ans("a", 1), ans("a", 1), ans("a", 1), ans("b", 1), ans("c", 1)];
        let t = tally_votes(&six, 0.5).unwrap();
        assert_eq!(decide(&t, 0.6), Decision::Accept("a".into()));
        let tie = [ans("b", 1), ans("a", 1)];
        let t = tally_votes(&tie, 0.5).unwrap();
        assert_eq!(decide(&t, 0.4), Decision::Accept("a".into()));
        let low = [ans("a", 1), ans("b", 1), ans("c", 1)];
        let t = tally_votes(&low, 0.5).unwrap();
        assert_eq!(decide(&t, 0.6), Decision::Reject);
    }

    #[test]
    fn weighted_tie_breaks_to_smaller_key() {
        // 0.775 + 0.325 and 0.55 + 0.55 are equal masses up to rounding.
        let s = [
            ans("b", 1).at_level(level(10)),
            ans("b", 1).at_level(level(1)),
            ans("a", 1).at_level(level(5)),
            ans("a", 1).at_level(level(6)),
        ];
        let t = tally_votes(&s, 0.5).unwrap();
        assert_eq!(t.leader().unwrap().0, "a");
    }

    #[test]
    fn early_accept_after_sixth_completion() {
        let mut s: Vec<SampleRecord> = (0..6).map(|i| ans("a", 10 + i)).collect();
        s.extend((0..4).map(|i| ans("b", 100 + i)));
        let fcv: Vec<SampleRecord> = s.into_iter().map(|x| x.at_level(level(10))).collect();
        let refs: Vec<&SampleRecord> = fcv.iter().collect();
        let (d, lat) = simulate_parallel(&refs, 0.6, 0.5).unwrap();
        assert_eq!(d, Decision::Accept("a".into()));
        assert_eq!(lat, 15);
    }

    #[test]
    fn early_reject_once_no_answer_can_win() {
        let mut s: Vec<SampleRecord> = ["a", "b", "c", "d", "e"]
            .iter()
            .enumerate()
            .map(|(i, a)| ans(a, 10 + i as u32))
            .collect();
        s.extend((0..5).map(|i| ans("a", 200 + i)));
        let refs: Vec<&SampleRecord> = s.iter().collect();
        let (d, lat) = simulate_parallel(&refs, 0.8, 0.5).unwrap();
        assert_eq!(d, Decision::Reject);
        assert_eq!(lat, 13);
    }

    #[test]
    fn single_sample_latency_is_its_length() {
        for tau in [0.0, 0.5, 1.0] {
            let s = [ans("a", 37)];
            let refs: Vec<&SampleRecord> = s.iter().collect();
            assert_eq!(simulate_parallel(&refs, tau, 0.5).unwrap().1, 37);
            let r = [refuse(9)];
            let refs: Vec<&SampleRecord> = r.iter().collect();
            assert_eq!(simulate_parallel(&refs, tau, 0.5).unwrap().1, 9);
        }
    }

    #[test]
    fn all_refusing_fcv_stops_once_threshold_is_out_of_reach() {
        let s: Vec<SampleRecord> = (0..10).map(|i| refuse(5 + i).at_level(level(10))).collect();
        let refs: Vec<&SampleRecord> = s.iter().collect();
        // After j refusals the best possible share is (10 - j) / 10.
        let (d, lat) = simulate_parallel(&refs, 0.6, 0.5).unwrap();
        assert_eq!(d, Decision::Reject);
        assert_eq!(lat, 9);
        let (_, lat) = simulate_parallel(&refs, 0.95, 0.5).unwrap();
        assert_eq!(lat, 5);
    }

    fn question(id: &str, samples: Vec<SampleRecord>) -> QuestionRecord {
        QuestionRecord::new(
            id,
            40,
            None,
            samples,
            Some(LlmOutcome {
                correct: false,
                tokens: 100,
            }),
        )
        .unwrap()
    }

    #[test]
    fn rcv_refusals_inflate_denominator() {
        let samples: Vec<SampleRecord> = ConfidenceLevel::all()
            .map(|l| {
                if l.tenths() <= 6 {
                    ans("a", 30).at_level(l)
                } else {
                    refuse(6).at_level(l)
                }
            })
            .collect();
        let q = question("q", samples);
        let picked = select_samples(&q, VotingScheme::RangedConfidence, 10).unwrap();
        let t = tally_votes(picked.iter().copied(), 0.5).unwrap();
        let w = |p: f64| 0.55 + 0.5 * (p - 0.55);
        let num: f64 = (1..=6).map(|k| w(k as f64 / 10.0)).sum();
        let den: f64 = (1..=10).map(|k| w(k as f64 / 10.0)).sum();
        assert!((t.delta("a") - num / den).abs() < 1e-12);
        assert!((t.refusal_mass() - (den - num)).abs() < 1e-12);
    }

    #[test]
    fn fcv_all_refuse_routes_to_llm() {
        let samples = (0..10).map(|i| refuse(6 + i).at_level(level(10))).collect();
        let q = question("q", samples);
        let ds = Dataset::new(vec![q.clone()]).unwrap();
        let ctx = EvalContext::new(&ds, PricingSchedule::default(), false);
        let o = route_cascade(&q, 0.6, &CascadeConfig::default(), &ctx).unwrap();
        assert!(o.routed);
        assert_eq!(o.quality, 0.0);
        assert_eq!(o.decision_latency_tokens, 10);
    }

    #[test]
    fn unanimous_sc_accepts_at_tau_one() {
        let q = question("q", (0..10).map(|i| ans("a", 20 + i)).collect());
        let ds = Dataset::new(vec![q.clone()]).unwrap();
        let ctx = EvalContext::new(&ds, PricingSchedule::default(), false);
        let cfg = CascadeConfig {
            scheme: VotingScheme::SelfConsistency,
            ..CascadeConfig::default()
        };
        let o = route_cascade(&q, 1.0, &cfg, &ctx).unwrap();
        assert!(!o.routed);
        assert_eq!(o.quality, 1.0);
        assert_eq!(o.accepted_answer.as_deref(), Some("a"));
        assert_eq!(o.llm_cost, 0.0);
    }

    #[test]
    fn scheme_mismatch_is_reported() {
        let q = question("q", (0..10).map(|_| ans("a", 20)).collect());
        assert!(matches!(
            select_samples(&q, VotingScheme::FixedConfidence, 10),
            Err(Error::SchemeMismatch { .. })
        ));
        assert!(select_samples(&q, VotingScheme::RangedConfidence, 10).is_err());
        assert!(select_samples(&q, VotingScheme::SelfConsistency, 11).is_err());
        assert!(select_samples(&q, VotingScheme::SelfConsistency, 0).is_err());
        assert_eq!(select_samples(&q, VotingScheme::SelfConsistency, 4).unwrap().len(), 4);
    }
}
