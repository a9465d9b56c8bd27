//! Domain records shared by the routers, the metrics and the dataset builders.
//!
//! Input records (`PricingSchedule`, `SampleRecord`, `QuestionRecord`) validate
//! their invariants on construction and on deserialization; a record that
//! violates one is rejected, never repaired. Output records (outcomes, curve
//! points, training examples) are plain data produced by this crate.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Prices are quoted per this many tokens.
pub const TOKENS_PER_PRICE_UNIT: f64 = 1e6;

/// Per-token prices for both models, in USD per million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PricingRaw")]
pub struct PricingSchedule {
    slm_in: f64,
    slm_out: f64,
    llm_in: f64,
    llm_out: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PricingRaw {
    slm_in: f64,
    slm_out: f64,
    llm_in: f64,
    llm_out: f64,
}

impl TryFrom<PricingRaw> for PricingSchedule {
    type Error = Error;

    fn try_from(raw: PricingRaw) -> Result<Self> {
        PricingSchedule::new(raw.slm_in, raw.slm_out, raw.llm_in, raw.llm_out)
    }
}

impl PricingSchedule {
    /// Groq's SLM output rate.
    pub const DEFAULT_SLM_OUT: f64 = 0.08;
    /// DeepSeek's LLM output rate.
    pub const DEFAULT_LLM_OUT: f64 = 1.10;

    pub fn new(slm_in: f64, slm_out: f64, llm_in: f64, llm_out: f64) -> Result<Self> {
        for (name, value) in [
            ("slm_in", slm_in),
            ("slm_out", slm_out),
            ("llm_in", llm_in),
            ("llm_out", llm_out),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invariant(
                    name,
                    format!("price must be strictly positive, got {value}"),
                ));
            }
        }
        Ok(Self {
            slm_in,
            slm_out,
            llm_in,
            llm_out,
        })
    }

    /// Schedule whose input prices are a quarter of the output prices.
    pub fn from_output_prices(slm_out: f64, llm_out: f64) -> Result<Self> {
        Self::new(slm_out / 4.0, slm_out, llm_out / 4.0, llm_out)
    }

    /// Multiply every price by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.slm_in * factor,
            self.slm_out * factor,
            self.llm_in * factor,
            self.llm_out * factor,
        )
    }

    pub fn slm_in(&self) -> f64 {
        self.slm_in
    }
    pub fn slm_out(&self) -> f64 {
        self.slm_out
    }
    pub fn llm_in(&self) -> f64 {
        self.llm_in
    }
    pub fn llm_out(&self) -> f64 {
        self.llm_out
    }

    pub fn input_ratio(&self) -> f64 {
        self.llm_in / self.slm_in
    }

    pub fn output_ratio(&self) -> f64 {
        self.llm_out / self.slm_out
    }
}

impl Default for PricingSchedule {
    fn default() -> Self {
        Self::from_output_prices(Self::DEFAULT_SLM_OUT, Self::DEFAULT_LLM_OUT)
            .expect("default prices are positive")
    }
}

/// One of the ten prompted confidence levels 0.1, 0.2, ..., 1.0, stored in tenths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConfidenceLevel(u8);

impl ConfidenceLevel {
    pub const GRID_TOLERANCE: f64 = 1e-9;
    pub const MIN: ConfidenceLevel = ConfidenceLevel(1);
    pub const MAX: ConfidenceLevel = ConfidenceLevel(10);

    pub fn from_tenths(tenths: u8) -> Option<Self> {
        (1..=10).contains(&tenths).then_some(Self(tenths))
    }

    /// Snap `value` to the nearest grid level; anything farther than 1e-9 is an error.
    pub fn from_value(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::OffGrid(value));
        }
        let tenths = (value * 10.0).round();
        if !(1.0..=10.0).contains(&tenths) || (value - tenths / 10.0).abs() > Self::GRID_TOLERANCE
        {
            return Err(Error::OffGrid(value));
        }
        Ok(Self(tenths as u8))
    }

    pub fn tenths(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    /// All ten levels in ascending order.
    pub fn all() -> impl DoubleEndedIterator<Item = ConfidenceLevel> + ExactSizeIterator {
        (1..=10u8).map(ConfidenceLevel)
    }
}

impl fmt::Display for ConfidenceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.value())
    }
}

impl Serialize for ConfidenceLevel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for ConfidenceLevel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        ConfidenceLevel::from_value(value).map_err(serde::de::Error::custom)
    }
}

/// Canonical answer key: trimmed and case-folded.
pub fn canonical_answer(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// One recorded SLM generation, reduced to what the simulator needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampleRaw")]
pub struct SampleRecord {
    answer: Option<String>,
    correct: bool,
    tokens: u32,
    confidence_level: Option<ConfidenceLevel>,
    refusal: bool,
}

#[derive(Debug, Deserialize)]
pub(crate) struct SampleRaw {
    pub answer: Option<String>,
    pub correct: bool,
    pub tokens: u32,
    pub confidence_level: Option<f64>,
    pub refusal: bool,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl TryFrom<SampleRaw> for SampleRecord {
    type Error = Error;

    fn try_from(raw: SampleRaw) -> Result<Self> {
        let level = raw
            .confidence_level
            .map(ConfidenceLevel::from_value)
            .transpose()?;
        SampleRecord::new(raw.answer.as_deref(), raw.correct, raw.tokens, level, raw.refusal)
    }
}

impl SampleRecord {
    pub fn new(
        answer: Option<&str>,
        correct: bool,
        tokens: u32,
        confidence_level: Option<ConfidenceLevel>,
        refusal: bool,
    ) -> Result<Self> {
        if tokens == 0 {
            return Err(Error::invariant("tokens", "must be at least 1"));
        }
        let answer = answer.map(canonical_answer);
        if refusal {
            if answer.is_some() {
                return Err(Error::invariant(
                    "answer",
                    "refusal = true requires an absent answer",
                ));
            }
            if correct {
                return Err(Error::invariant(
                    "correct",
                    "refusal = true requires correct = false",
                ));
            }
        } else {
            match &answer {
                None => {
                    return Err(Error::invariant(
                        "answer",
                        "refusal = false requires an answer",
                    ))
                }
                Some(a) if a.is_empty() => {
                    return Err(Error::invariant("answer", "answer key is empty"))
                }
                Some(_) => {}
            }
        }
        Ok(Self {
            answer,
            correct,
            tokens,
            confidence_level,
            refusal,
        })
    }

    pub fn answered(answer: &str, correct: bool, tokens: u32) -> Result<Self> {
        Self::new(Some(answer), correct, tokens, None, false)
    }

    pub fn refused(tokens: u32) -> Result<Self> {
        Self::new(None, false, tokens, None, true)
    }

    pub fn at_level(mut self, level: ConfidenceLevel) -> Self {
        self.confidence_level = Some(level);
        self
    }

    pub fn answer(&self) -> Option<&str> {
        self.answer.as_deref()
    }
    pub fn correct(&self) -> bool {
        self.correct
    }
    pub fn tokens(&self) -> u32 {
        self.tokens
    }
    pub fn confidence_level(&self) -> Option<ConfidenceLevel> {
        self.confidence_level
    }
    pub fn refusal(&self) -> bool {
        self.refusal
    }
}

/// The LLM's recorded outcome on a question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmOutcome {
    pub correct: bool,
    pub tokens: u32,
}

/// One benchmark question with everything the simulator replays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuestionRaw")]
pub struct QuestionRecord {
    id: String,
    input_tokens: u32,
    pre_score: Option<f64>,
    slm_samples: Vec<SampleRecord>,
    llm: Option<LlmOutcome>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct QuestionRaw {
    pub id: String,
    pub input_tokens: u32,
    pub pre_score: Option<f64>,
    pub slm_samples: Vec<SampleRaw>,
    pub llm: Option<LlmOutcome>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl QuestionRaw {
    /// Names of fields the schema does not define, including nested sample fields.
    pub(crate) fn unknown_fields(&self) -> Vec<String> {
        let mut names: Vec<String> = self.extra.keys().cloned().collect();
        for (i, s) in self.slm_samples.iter().enumerate() {
            names.extend(s.extra.keys().map(|k| format!("slm_samples[{i}].{k}")));
        }
        names
    }
}

impl TryFrom<QuestionRaw> for QuestionRecord {
    type Error = Error;

    fn try_from(raw: QuestionRaw) -> Result<Self> {
        let id = raw.id;
        let samples = raw
            .slm_samples
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                SampleRecord::try_from(s).map_err(|e| e.in_question(&id, &format!("slm_samples[{i}]")))
            })
            .collect::<Result<Vec<_>>>()?;
        QuestionRecord::new(id, raw.input_tokens, raw.pre_score, samples, raw.llm)
    }
}

impl QuestionRecord {
    pub fn new(
        id: impl Into<String>,
        input_tokens: u32,
        pre_score: Option<f64>,
        slm_samples: Vec<SampleRecord>,
        llm: Option<LlmOutcome>,
    ) -> Result<Self> {
        let id = id.into();
        let fail = |field: &str, message: String| Error::Invariant {
            id: id.clone(),
            field: field.to_owned(),
            message,
        };
        if id.is_empty() {
            return Err(fail("id", "must not be empty".into()));
        }
        if input_tokens == 0 {
            return Err(fail("input_tokens", "must be at least 1".into()));
        }
        if let Some(s) = pre_score {
            if !(0.0..=1.0).contains(&s) {
                return Err(fail("pre_score", format!("{s} is outside [0, 1]")));
            }
        }
        if let Some(l) = llm {
            if l.tokens == 0 {
                return Err(fail("llm.tokens", "must be at least 1".into()));
            }
        }
        // A canonical answer key is either right or wrong for the whole question.
        let mut verdicts: HashMap<&str, bool> = HashMap::new();
        for (i, s) in slm_samples.iter().enumerate() {
            if let Some(a) = s.answer() {
                if let Some(&prev) = verdicts.get(a) {
                    if prev != s.correct() {
                        return Err(fail(
                            &format!("slm_samples[{i}].correct"),
                            format!("answer `{a}` is graded both correct and incorrect"),
                        ));
                    }
                } else {
                    verdicts.insert(a, s.correct());
                }
            }
        }
        Ok(Self {
            id,
            input_tokens,
            pre_score,
            slm_samples,
            llm,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn input_tokens(&self) -> u32 {
        self.input_tokens
    }
    pub fn pre_score(&self) -> Option<f64> {
        self.pre_score
    }
    pub fn slm_samples(&self) -> &[SampleRecord] {
        &self.slm_samples
    }
    pub fn llm(&self) -> Option<LlmOutcome> {
        self.llm
    }

    /// Empirical SLM accuracy over every stored sample; refusals count as wrong.
    pub fn slm_accuracy(&self) -> Option<f64> {
        if self.slm_samples.is_empty() {
            return None;
        }
        let correct = self.slm_samples.iter().filter(|s| s.correct()).count();
        Some(correct as f64 / self.slm_samples.len() as f64)
    }

    /// Mean output length over every stored sample.
    pub fn mean_slm_tokens(&self) -> Option<f64> {
        if self.slm_samples.is_empty() {
            return None;
        }
        let total: u64 = self.slm_samples.iter().map(|s| u64::from(s.tokens())).sum();
        Some(total as f64 / self.slm_samples.len() as f64)
    }

    /// Whether `answer` is graded correct on this question.
    pub fn is_correct_answer(&self, answer: &str) -> bool {
        self.slm_samples
            .iter()
            .find(|s| s.answer() == Some(answer))
            .is_some_and(|s| s.correct())
    }
}

/// Dataset-level summary computed in one pass at load time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub n_questions: usize,
    /// Mean `llm.tokens` over questions that carry an LLM record.
    pub avg_llm_tokens: Option<f64>,
    pub total_input_tokens: u64,
}

impl DatasetProfile {
    pub fn from_questions(questions: &[QuestionRecord]) -> Self {
        let mut llm_tokens = 0u64;
        let mut llm_count = 0usize;
        let mut total_input_tokens = 0u64;
        for q in questions {
            total_input_tokens += u64::from(q.input_tokens());
            if let Some(l) = q.llm() {
                llm_tokens += u64::from(l.tokens);
                llm_count += 1;
            }
        }
        Self {
            n_questions: questions.len(),
            avg_llm_tokens: (llm_count > 0).then(|| llm_tokens as f64 / llm_count as f64),
            total_input_tokens,
        }
    }

    /// Total LLM-only cost in USD with the dataset mean substituted for every question's output length.
    pub fn total_llm_cost(&self, pricing: &PricingSchedule) -> Result<f64> {
        let avg = self.avg_llm_tokens.ok_or(Error::NoLlmData)?;
        Ok((pricing.llm_in() * self.total_input_tokens as f64
            + pricing.llm_out() * avg * self.n_questions as f64)
            / TOKENS_PER_PRICE_UNIT)
    }
}

/// A validated, immutable collection of questions with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    questions: Vec<QuestionRecord>,
    profile: DatasetProfile,
    index: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(questions: Vec<QuestionRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(questions.len());
        for (i, q) in questions.iter().enumerate() {
            if index.insert(q.id().to_owned(), i).is_some() {
                return Err(Error::DuplicateId(q.id().to_owned()));
            }
        }
        let profile = DatasetProfile::from_questions(&questions);
        Ok(Self {
            questions,
            profile,
            index,
        })
    }

    pub fn questions(&self) -> &[QuestionRecord] {
        &self.questions
    }

    pub fn profile(&self) -> &DatasetProfile {
        &self.profile
    }

    pub fn get(&self, id: &str) -> Option<&QuestionRecord> {
        self.index.get(id).map(|&i| &self.questions[i])
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn into_questions(self) -> Vec<QuestionRecord> {
        self.questions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoutingMode {
    Pre,
    Cascade,
}

/// Result of one policy on one question at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingOutcome {
    pub question_id: String,
    pub routed: bool,
    pub quality: f64,
    /// SLM spend in USD.
    pub slm_cost: f64,
    /// LLM spend in USD; zero unless routed.
    pub llm_cost: f64,
    pub decision_latency_tokens: u32,
    pub accepted_answer: Option<String>,
    pub mode: RoutingMode,
}

impl RoutingOutcome {
    pub fn check(&self) -> Result<()> {
        let fail = |field: &str, message: &str| {
            Err(Error::Invariant {
                id: self.question_id.clone(),
                field: field.to_owned(),
                message: message.to_owned(),
            })
        };
        if !(0.0..=1.0).contains(&self.quality) {
            return fail("quality", "outside [0, 1]");
        }
        if !self.routed && self.llm_cost != 0.0 {
            return fail("llm_cost", "unrouted question carries LLM cost");
        }
        if self.slm_cost < 0.0 || self.llm_cost < 0.0 {
            return fail("cost", "negative cost");
        }
        match self.mode {
            RoutingMode::Pre if self.decision_latency_tokens != 0 => {
                fail("decision_latency_tokens", "pre-generation routing has no decision latency")
            }
            RoutingMode::Cascade if self.decision_latency_tokens == 0 => {
                fail("decision_latency_tokens", "cascade decisions wait for at least one sample")
            }
            _ => Ok(()),
        }
    }
}

/// Position of a point on a cost-performance curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveTau {
    SlmOnly,
    Threshold(f64),
    LlmOnly,
}

impl CurveTau {
    fn rank(&self) -> (u8, f64) {
        match *self {
            CurveTau::SlmOnly => (0, 0.0),
            CurveTau::Threshold(t) => (1, t),
            CurveTau::LlmOnly => (2, 0.0),
        }
    }

    /// Ordering used for curve files: `slm_only`, thresholds ascending, `llm_only`.
    pub fn sort_key_cmp(&self, other: &Self) -> std::cmp::Ordering {
        let (a, x) = self.rank();
        let (b, y) = other.rank();
        a.cmp(&b).then(x.total_cmp(&y))
    }

    pub fn label(&self) -> String {
        match *self {
            CurveTau::SlmOnly => "slm_only".to_owned(),
            CurveTau::LlmOnly => "llm_only".to_owned(),
            CurveTau::Threshold(t) => format!("{t:?}"),
        }
    }

    pub fn parse(label: &str) -> Result<Self> {
        match label {
            "slm_only" => Ok(CurveTau::SlmOnly),
            "llm_only" => Ok(CurveTau::LlmOnly),
            other => other
                .parse::<f64>()
                .map(CurveTau::Threshold)
                .map_err(|_| Error::Format(format!("bad tau `{other}`"))),
        }
    }
}

impl Serialize for CurveTau {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match *self {
            CurveTau::Threshold(t) => serializer.serialize_f64(t),
            _ => serializer.serialize_str(&self.label()),
        }
    }
}

/// One point of a normalized cost-performance curve (LLM-only cost = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub tau: CurveTau,
    pub cost: f64,
    pub performance: f64,
    pub n_routed: usize,
}

/// A Stage I training pair: shortest correct response against a much longer wrong one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub id: String,
    pub chosen: String,
    pub rejected: String,
    pub chosen_tokens: u32,
    pub rejected_tokens: u32,
}

/// A Stage II example: confidence-prefixed prompt and its answer or refusal target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefusalExample {
    pub id: String,
    pub threshold: ConfidenceLevel,
    pub prompt: String,
    pub target: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_pricing_matches_quoted_rates() {
        let p = PricingSchedule::default();
        assert_eq!(p.slm_out(), 0.08);
        assert_eq!(p.llm_out(), 1.10);
        assert_eq!(p.slm_in(), 0.02);
        assert_eq!(p.llm_in(), 0.275);
        assert_eq!(p.output_ratio(), 13.75);
        assert_eq!(p.input_ratio(), 13.75);
    }

    #[test]
    fn pricing_rejects_nonpositive() {
        assert!(PricingSchedule::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(PricingSchedule::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(PricingSchedule::new(1.0, 1.0, f64::NAN, 1.0).is_err());
        let json = r#"{"slm_in":0.0,"slm_out":1,"llm_in":1,"llm_out":1}"#;
        assert!(serde_json::from_str::<PricingSchedule>(json).is_err());
    }

    #[test]
    fn confidence_grid_snapping() {
        assert_eq!(ConfidenceLevel::from_value(0.7).unwrap().tenths(), 7);
        assert_eq!(ConfidenceLevel::from_value(0.7 + 5e-10).unwrap().tenths(), 7);
        assert!(ConfidenceLevel::from_value(0.7 + 2e-9).is_err());
        assert!(ConfidenceLevel::from_value(0.55).is_err());
        assert!(ConfidenceLevel::from_value(0.0).is_err());
        assert!(ConfidenceLevel::from_value(1.1).is_err());
        assert_eq!(ConfidenceLevel::all().count(), 10);
        assert_eq!(ConfidenceLevel::MAX.to_string(), "1.0");
    }

    #[test]
    fn sample_invariants() {
        assert!(SampleRecord::new(Some("B"), false, 10, None, true).is_err());
        assert!(SampleRecord::new(None, true, 10, None, true).is_err());
        assert!(SampleRecord::new(None, false, 10, None, false).is_err());
        assert!(SampleRecord::new(Some("a"), true, 0, None, false).is_err());
        assert!(SampleRecord::new(Some("   "), true, 3, None, false).is_err());
        let s = SampleRecord::answered("  Paris ", true, 4).unwrap();
        assert_eq!(s.answer(), Some("paris"));
    }

    #[test]
    fn question_rejects_contradictory_grading() {
        let samples = vec![
            SampleRecord::answered("a", true, 3).unwrap(),
            SampleRecord::answered("A", false, 3).unwrap(),
        ];
        let err = QuestionRecord::new("q", 5, None, samples, None).unwrap_err();
        assert!(err.to_string().contains("slm_samples[1].correct"));
    }

    #[test]
    fn question_rejects_bad_scalars() {
        assert!(QuestionRecord::new("", 5, None, vec![], None).is_err());
        assert!(QuestionRecord::new("q", 0, None, vec![], None).is_err());
        assert!(QuestionRecord::new("q", 5, Some(1.5), vec![], None).is_err());
        let llm = LlmOutcome {
            correct: true,
            tokens: 0,
        };
        assert!(QuestionRecord::new("q", 5, None, vec![], Some(llm)).is_err());
    }

    #[test]
    fn profile_mean_and_total() {
        let mk = |id: &str, t: u32| {
            QuestionRecord::new(
                id,
                100,
                None,
                vec![],
                Some(LlmOutcome {
                    correct: true,
                    tokens: t,
                }),
            )
            .unwrap()
        };
        let ds = Dataset::new(vec![mk("a", 100), mk("b", 300)]).unwrap();
        assert_eq!(ds.profile().avg_llm_tokens, Some(200.0));
        let p = PricingSchedule::default();
        let per_q = (0.275 * 100.0 + 1.10 * 200.0) / 1e6;
        let total = ds.profile().total_llm_cost(&p).unwrap();
        assert!((total - 2.0 * per_q).abs() <= 1e-12 * total);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let q = QuestionRecord::new("dup", 1, None, vec![], None).unwrap();
        let err = Dataset::new(vec![q.clone(), q]).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(ref id) if id == "dup"));
    }

    #[test]
    fn curve_tau_ordering_and_labels() {
        let mut taus = [
            CurveTau::LlmOnly,
            CurveTau::Threshold(0.5),
            CurveTau::SlmOnly,
            CurveTau::Threshold(0.1),
        ];
        taus.sort_by(|a, b| a.sort_key_cmp(b));
        let labels: Vec<_> = taus.iter().map(CurveTau::label).collect();
        assert_eq!(labels, ["slm_only", "0.1", "0.5", "llm_only"]);
        assert_eq!(CurveTau::parse("0.3").unwrap(), CurveTau::Threshold(0.3));
    }

    #[test]
    fn outcome_check() {
        let mut o = RoutingOutcome {
            question_id: "q".into(),
            routed: false,
            quality: 1.0,
            slm_cost: 1.0,
            llm_cost: 0.0,
            decision_latency_tokens: 0,
            accepted_answer: Some("a".into()),
            mode: RoutingMode::Pre,
        };
        assert!(o.check().is_ok());
        o.llm_cost = 1.0;
        assert!(o.check().is_err());
        o.llm_cost = 0.0;
        o.mode = RoutingMode::Cascade;
        assert!(o.check().is_err());
    }
}
