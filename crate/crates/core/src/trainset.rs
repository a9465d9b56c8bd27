//! Builders for the two fine-tuning corpora and a numeric check of the combined loss.
//!
//! Stage I pairs the shortest correct response with a much longer incorrect one.
//! Stage II expands each question into ten confidence-prefixed prompts whose
//! target is a correct answer when the measured accuracy reaches the threshold
//! and a fixed refusal otherwise.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConfidenceLevel, PreferencePair, RefusalExample, SampleRecord};

pub const DEFAULT_MIN_RATIO: f64 = 1.5;
pub const DEFAULT_BETA: f64 = 1.0;
pub const DEFAULT_LAMBDA: f64 = 0.2;
pub const REFUSAL_TEMPLATE: &str = "Sorry, I can't answer that.";
/// Number of resamples used to estimate a question's accuracy.
pub const ACCURACY_SAMPLES: usize = 10;

/// Instruction placed before the question, e.g. `Please respond with a confidence level of 0.7:`.
pub fn confidence_prefix(threshold: ConfidenceLevel) -> String {
    format!("Please respond with a confidence level of {threshold}:")
}

/// Anything carrying a correctness verdict.
pub trait Graded {
    fn is_correct(&self) -> bool;
}

impl Graded for SampleRecord {
    fn is_correct(&self) -> bool {
        self.correct()
    }
}

/// One sampled response with its full text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSample {
    pub text: String,
    pub correct: bool,
    pub tokens: u32,
}

impl Graded for CorpusSample {
    fn is_correct(&self) -> bool {
        self.correct
    }
}

/// A question with its sampled responses, the input of both builders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusQuestion {
    pub id: String,
    pub question: String,
    pub samples: Vec<CorpusSample>,
}

impl CorpusQuestion {
    pub fn validate(&self) -> Result<()> {
        let fail = |field: String, message: &str| Error::Invariant {
            id: self.id.clone(),
            field,
            message: message.to_owned(),
        };
        if self.id.is_empty() {
            return Err(fail("id".into(), "must not be empty"));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.tokens == 0 {
                return Err(fail(format!("samples[{i}].tokens"), "must be at least 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOptions {
    /// The rejected response must be strictly longer than this multiple of the chosen one.
    pub min_ratio: f64,
    /// Also emit a pair whose negative is the longest correct response (ablation, off by default).
    pub correct_negatives: bool,
}

impl Default for PairOptions {
    fn default() -> Self {
        Self {
            min_ratio: DEFAULT_MIN_RATIO,
            correct_negatives: false,
        }
    }
}

/// First sample attaining the extreme length among those matching `pred`.
fn pick(
    samples: &[CorpusSample],
    pred: impl Fn(&CorpusSample) -> bool,
    longer: bool,
) -> Option<&CorpusSample> {
    let mut best: Option<&CorpusSample> = None;
    for s in samples.iter().filter(|s| pred(s)) {
        let better = match best {
            None => true,
            Some(b) if longer => s.tokens > b.tokens,
            Some(b) => s.tokens < b.tokens,
        };
        if better {
            best = Some(s);
        }
    }
    best
}

fn pair_against(
    q: &CorpusQuestion,
    chosen: &CorpusSample,
    rejected: Option<&CorpusSample>,
) -> Option<PreferencePair> {
    rejected.map(|r| PreferencePair {
        id: q.id.clone(),
        chosen: chosen.text.clone(),
        rejected: r.text.clone(),
        chosen_tokens: chosen.tokens,
        rejected_tokens: r.tokens,
    })
}

/// Shortest correct response against the longest incorrect one that is more than
/// `min_ratio` times longer. `None` when either side is missing; the question is skipped.
pub fn build_dpo_pair(q: &CorpusQuestion, min_ratio: f64) -> Option<PreferencePair> {
    let chosen = pick(&q.samples, |s| s.correct, false)?;
    let bound = min_ratio * f64::from(chosen.tokens);
    let rejected = pick(&q.samples, |s| !s.correct && f64::from(s.tokens) > bound, true);
    pair_against(q, chosen, rejected)
}

/// Pairs for one question under `opts`: the main pair and, for the ablation, a pair whose
/// negative is the longest correct response.
pub fn build_dpo_pairs(q: &CorpusQuestion, opts: &PairOptions) -> Vec<PreferencePair> {
    let mut pairs: Vec<PreferencePair> = build_dpo_pair(q, opts.min_ratio).into_iter().collect();
    if opts.correct_negatives {
        if let Some(chosen) = pick(&q.samples, |s| s.correct, false) {
            let bound = opts.min_ratio * f64::from(chosen.tokens);
            let negative = pick(&q.samples, |s| s.correct && f64::from(s.tokens) > bound, true);
            pairs.extend(pair_against(q, chosen, negative));
        }
    }
    pairs
}

/// Fraction of ten samples that are correct, as a grid value in tenths (0..=10).
pub fn estimate_accuracy<T: Graded>(samples: &[T]) -> Result<u8> {
    if samples.len() != ACCURACY_SAMPLES {
        return Err(Error::SampleCount {
            expected: ACCURACY_SAMPLES,
            found: samples.len(),
        });
    }
    Ok(samples.iter().filter(|s| s.is_correct()).count() as u8)
}

/// Per-question generator seed mixed from the global seed and the question id.
pub fn question_seed(seed: u64, id: &str) -> u64 {
    // FNV-1a keeps the mix stable across platforms and toolchains.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed.rotate_left(32)
}

/// Ten examples, one per threshold 0.1..=1.0. The target is a seeded choice among
/// `correct_answers` when `accuracy_tenths >= threshold`, otherwise the refusal template.
pub fn build_refusal_set(
    id: &str,
    question: &str,
    accuracy_tenths: u8,
    correct_answers: &[String],
    seed: u64,
) -> Result<Vec<RefusalExample>> {
    if accuracy_tenths > 10 {
        return Err(Error::param("accuracy", format!("{accuracy_tenths} tenths exceeds 1.0")));
    }
    if accuracy_tenths > 0 && correct_answers.is_empty() {
        return Err(Error::Missing {
            id: id.to_owned(),
            what: "correct answer text (accuracy is above 0)",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(question_seed(seed, id));
    Ok(ConfidenceLevel::all()
        .map(|threshold| {
            let target = if accuracy_tenths >= threshold.tenths() {
                correct_answers
                    .choose(&mut rng)
                    .expect("non-empty when accuracy > 0")
                    .clone()
            } else {
                REFUSAL_TEMPLATE.to_owned()
            };
            RefusalExample {
                id: id.to_owned(),
                threshold,
                prompt: format!("{} {}", confidence_prefix(threshold), question),
                target,
            }
        })
        .collect())
}

/// Refusal set for a corpus question, measuring accuracy over its ten samples.
pub fn refusal_set_for(q: &CorpusQuestion, seed: u64) -> Result<Vec<RefusalExample>> {
    let accuracy = estimate_accuracy(&q.samples)
        .map_err(|e| Error::Format(format!("question `{}`: {e}", q.id)))?;
    let answers: Vec<String> = q
        .samples
        .iter()
        .filter(|s| s.correct)
        .map(|s| s.text.clone())
        .collect();
    build_refusal_set(&q.id, &q.question, accuracy, &answers, seed)
}

/// Sequence log-likelihoods of the chosen and rejected responses under policy and reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossInputs {
    pub chosen_logp_policy: f64,
    pub chosen_logp_ref: f64,
    pub rejected_logp_policy: f64,
    pub rejected_logp_ref: f64,
    pub chosen_tokens: u32,
}

impl LossInputs {
    /// Implicit reward margin: chosen log-ratio minus rejected log-ratio.
    pub fn margin(&self) -> f64 {
        (self.chosen_logp_policy - self.chosen_logp_ref)
            - (self.rejected_logp_policy - self.rejected_logp_ref)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub dpo: f64,
    pub sft: f64,
    pub total: f64,
}

/// `-ln σ(x)` without overflow.
pub fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// DPO loss on one margin.
pub fn dpo_loss(margin: f64, beta: f64) -> f64 {
    neg_log_sigmoid(beta * margin)
}

/// DPO loss plus `lambda` times the per-token NLL of the chosen response.
pub fn combined_loss(inputs: &LossInputs, beta: f64, lambda: f64) -> Result<LossBreakdown> {
    for (name, v) in [
        ("chosen_logp_policy", inputs.chosen_logp_policy),
        ("chosen_logp_ref", inputs.chosen_logp_ref),
        ("rejected_logp_policy", inputs.rejected_logp_policy),
        ("rejected_logp_ref", inputs.rejected_logp_ref),
        ("beta", beta),
        ("lambda", lambda),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    if inputs.chosen_tokens == 0 {
        return Err(Error::param("chosen_tokens", "must be at least 1"));
    }
    let dpo = dpo_loss(inputs.margin(), beta);
    let sft = -inputs.chosen_logp_policy / f64::from(inputs.chosen_tokens);
    Ok(LossBreakdown {
        dpo,
        sft,
        total: dpo + lambda * sft,
    })
}

/// LoRA fine-tuning settings, written out for an external trainer and never acted upon here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub lora_rank: u32,
    pub lora_alpha: u32,
    pub lora_dropout: f64,
    pub learning_rate: f64,
    pub lr_scheduler: String,
    pub warmup_ratio: f64,
    pub epochs: u32,
    pub per_device_batch_size: u32,
    pub gradient_accumulation_steps: u32,
    pub cutoff_len: u32,
    pub pref_loss: String,
    pub pref_beta: f64,
    pub pref_ftx: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            lora_rank: 8,
            lora_alpha: 16,
            lora_dropout: 0.1,
            learning_rate: 1e-4,
            lr_scheduler: "cosine".into(),
            warmup_ratio: 0.1,
            epochs: 1,
            per_device_batch_size: 1,
            gradient_accumulation_steps: 4,
            cutoff_len: 1024,
            pref_loss: "sigmoid".into(),
            pref_beta: DEFAULT_BETA,
            pref_ftx: DEFAULT_LAMBDA,
        }
    }
}
