//! Seeded synthetic datasets with a known latent difficulty per question.
//!
//! Each question draws a difficulty `d` in `[0, 1]`. Answered samples are correct
//! with probability `1 - d`, and a sample prompted at confidence level `L` is a
//! refusal exactly when `1 - d < L`, so the answering levels always form a prefix
//! of the grid. That makes the ideal routing order known in advance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConfidenceLevel, LlmOutcome, QuestionRecord, SampleRecord};
use crate::trainset::{CorpusQuestion, CorpusSample};

/// Which prompts the stored SLM samples were generated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSchedule {
    /// Untagged samples with no refusal behaviour.
    Plain,
    /// One sample at each of the ten confidence levels.
    Ranged,
    /// Every sample prompted at confidence 1.0.
    Fixed,
    /// Plain samples, then fixed, then one per level: every voting scheme can run.
    All,
}

impl std::str::FromStr for SampleSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(SampleSchedule::Plain),
            "ranged" => Ok(SampleSchedule::Ranged),
            "fixed" => Ok(SampleSchedule::Fixed),
            "all" => Ok(SampleSchedule::All),
            other => Err(Error::param("schedule", format!("unknown schedule `{other}`"))),
        }
    }
}

/// Inclusive token-count range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRange {
    pub min: u32,
    pub max: u32,
}

impl TokenRange {
    pub const fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }

    fn check(&self, name: &'static str) -> Result<()> {
        if self.min == 0 || self.min > self.max {
            return Err(Error::param(
                name,
                format!("range {}..={} is empty or includes 0", self.min, self.max),
            ));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut impl Rng) -> u32 {
        rng.gen_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DifficultyProfile {
    pub schedule: SampleSchedule,
    /// Samples per question for the plain and fixed parts (the ranged part always stores 10).
    pub samples: usize,
    /// Share of questions with difficulty exactly 0.
    pub easy_fraction: f64,
    /// Share of questions with difficulty exactly 1.
    pub hard_fraction: f64,
    /// Pin every question to this difficulty.
    pub forced_difficulty: Option<f64>,
    pub answer_tokens: TokenRange,
    pub refusal_tokens: TokenRange,
    pub input_tokens: TokenRange,
    pub llm_tokens: TokenRange,
    pub llm_accuracy: f64,
    /// Half-width of the uniform noise added to `1 - d` for `pre_score`.
    pub pre_score_noise: f64,
    /// Number of distinct answer keys per question.
    pub choices: u8,
}

impl Default for DifficultyProfile {
    fn default() -> Self {
        Self {
            schedule: SampleSchedule::All,
            samples: 10,
            easy_fraction: 0.2,
            hard_fraction: 0.1,
            forced_difficulty: None,
            answer_tokens: TokenRange::new(40, 240),
            refusal_tokens: TokenRange::new(6, 10),
            input_tokens: TokenRange::new(50, 400),
            llm_tokens: TokenRange::new(80, 400),
            llm_accuracy: 0.9,
            pre_score_noise: 0.35,
            choices: 4,
        }
    }
}

impl DifficultyProfile {
    pub fn validate(&self) -> Result<()> {
        self.answer_tokens.check("answer_tokens")?;
        self.refusal_tokens.check("refusal_tokens")?;
        self.input_tokens.check("input_tokens")?;
        self.llm_tokens.check("llm_tokens")?;
        let unit = |name: &'static str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} is outside [0, 1]")))
            }
        };
        unit("easy_fraction", self.easy_fraction)?;
        unit("hard_fraction", self.hard_fraction)?;
        unit("llm_accuracy", self.llm_accuracy)?;
        if self.easy_fraction + self.hard_fraction > 1.0 {
            return Err(Error::param("easy_fraction", "easy + hard fractions exceed 1"));
        }
        if let Some(d) = self.forced_difficulty {
            unit("forced_difficulty", d)?;
        }
        if !(self.pre_score_noise.is_finite() && self.pre_score_noise >= 0.0) {
            return Err(Error::param("pre_score_noise", "must be >= 0"));
        }
        if self.samples == 0 {
            return Err(Error::param("samples", "must be at least 1"));
        }
        if !(2..=26).contains(&self.choices) {
            return Err(Error::param("choices", "must be between 2 and 26"));
        }
        Ok(())
    }

    fn draw_difficulty(&self, rng: &mut impl Rng) -> f64 {
        if let Some(d) = self.forced_difficulty {
            return d;
        }
        let u: f64 = rng.gen();
        if u < self.easy_fraction {
            0.0
        } else if u < self.easy_fraction + self.hard_fraction {
            1.0
        } else {
            rng.gen()
        }
    }
}

/// Whether a model of difficulty `d` refuses when prompted at `level`.
pub fn refuses_at(difficulty: f64, level: ConfidenceLevel) -> bool {
    1.0 - difficulty < level.value()
}

fn key(i: u8) -> String {
    char::from(b'a' + i).to_string()
}

/// Generated question together with its latent difficulty.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticQuestion {
    pub difficulty: f64,
    pub record: QuestionRecord,
}

/// Deterministic synthetic questions (ids `q00000`, `q00001`, ...).
pub fn generate_synthetic(seed: u64, n: usize, profile: &DifficultyProfile) -> Result<Vec<QuestionRecord>> {
    Ok(generate_with_difficulty(seed, n, profile)?
        .into_iter()
        .map(|q| q.record)
        .collect())
}

/// Same stream as [`generate_synthetic`], keeping each question's latent difficulty.
pub fn generate_with_difficulty(
    seed: u64,
    n: usize,
    profile: &DifficultyProfile,
) -> Result<Vec<SyntheticQuestion>> {
    if n == 0 {
        return Err(Error::param("n", "at least one question is required"));
    }
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let d = profile.draw_difficulty(&mut rng);
            let right = rng.gen_range(0..profile.choices);
            let levels: Vec<Option<ConfidenceLevel>> = match profile.schedule {
                SampleSchedule::Plain => vec![None; profile.samples],
                SampleSchedule::Ranged => ConfidenceLevel::all().map(Some).collect(),
                SampleSchedule::Fixed => vec![Some(ConfidenceLevel::MAX); profile.samples],
                SampleSchedule::All => std::iter::repeat_n(None, profile.samples)
                    .chain(std::iter::repeat_n(Some(ConfidenceLevel::MAX), profile.samples))
                    .chain(ConfidenceLevel::all().map(Some))
                    .collect(),
            };
            let samples = levels
                .into_iter()
                .map(|level| {
                    let sample = if level.is_some_and(|l| refuses_at(d, l)) {
                        SampleRecord::refused(profile.refusal_tokens.draw(&mut rng))
                    } else {
                        let correct = rng.gen_bool(1.0 - d);
                        let answer = if correct {
                            right
                        } else {
                            (right + rng.gen_range(1..profile.choices)) % profile.choices
                        };
                        SampleRecord::answered(&key(answer), correct, profile.answer_tokens.draw(&mut rng))
                    }?;
                    Ok(match level {
                        Some(l) => sample.at_level(l),
                        None => sample,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let noise = if profile.pre_score_noise > 0.0 {
                rng.gen_range(-profile.pre_score_noise..=profile.pre_score_noise)
            } else {
                0.0
            };
            let pre_score = (1.0 - d + noise).clamp(0.0, 1.0);
            let llm = LlmOutcome {
                correct: rng.gen_bool(profile.llm_accuracy),
                tokens: profile.llm_tokens.draw(&mut rng),
            };
            let record = QuestionRecord::new(
                format!("q{i:05}"),
                profile.input_tokens.draw(&mut rng),
                Some(pre_score),
                samples,
                Some(llm),
            )?;
            Ok(SyntheticQuestion { difficulty: d, record })
        })
        .collect()
}

/// Parameters for synthetic training corpora with full response text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusProfile {
    pub samples: usize,
    pub correct_tokens: TokenRange,
    /// Incorrect responses tend to ramble.
    pub incorrect_tokens: TokenRange,
}

impl Default for CorpusProfile {
    fn default() -> Self {
        Self {
            samples: 10,
            correct_tokens: TokenRange::new(30, 200),
            incorrect_tokens: TokenRange::new(60, 400),
        }
    }
}

/// Deterministic corpus of questions with ten text samples each.
pub fn generate_synthetic_corpus(seed: u64, n: usize, profile: &CorpusProfile) -> Result<Vec<CorpusQuestion>> {
    if n == 0 {
        return Err(Error::param("n", "at least one question is required"));
    }
    profile.correct_tokens.check("correct_tokens")?;
    profile.incorrect_tokens.check("incorrect_tokens")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|i| {
            let d: f64 = rng.gen();
            let samples = (0..profile.samples)
                .map(|k| {
                    let correct = rng.gen_bool(1.0 - d);
                    let tokens = if correct {
                        profile.correct_tokens.draw(&mut rng)
                    } else {
                        profile.incorrect_tokens.draw(&mut rng)
                    };
                    CorpusSample {
                        text: format!(
                            "[q{i:05}/{k}] {} response, {tokens} tokens",
                            if correct { "correct" } else { "incorrect" }
                        ),
                        correct,
                        tokens,
                    }
                })
                .collect();
            CorpusQuestion {
                id: format!("q{i:05}"),
                question: format!("Synthetic question {i}?"),
                samples,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let p = DifficultyProfile::default();
        let a = generate_synthetic(42, 5, &p).unwrap();
        let b = generate_synthetic(42, 5, &p).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = generate_synthetic(43, 5, &p).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn trivial_difficulty_never_refuses() {
        let p = DifficultyProfile {
            forced_difficulty: Some(0.0),
            ..DifficultyProfile::default()
        };
        for q in generate_synthetic(1, 20, &p).unwrap() {
            assert_eq!(q.slm_accuracy(), Some(1.0));
            assert!(q.slm_samples().iter().all(|s| s.correct() && !s.refusal()));
        }
    }

    #[test]
    fn impossible_difficulty_always_refuses() {
        let p = DifficultyProfile {
            forced_difficulty: Some(1.0),
            ..DifficultyProfile::default()
        };
        for q in generate_synthetic(1, 20, &p).unwrap() {
            assert_eq!(q.slm_samples().len(), 30);
            for s in q.slm_samples() {
                assert_eq!(s.refusal(), s.confidence_level().is_some());
                assert!(!s.correct());
            }
        }
    }

    #[test]
    fn bad_parameters_rejected() {
        let p = DifficultyProfile {
            answer_tokens: TokenRange::new(10, 5),
            ..DifficultyProfile::default()
        };
        assert!(generate_synthetic(1, 3, &p).is_err());
        assert!(generate_synthetic(1, 0, &DifficultyProfile::default()).is_err());
        let p = DifficultyProfile {
            refusal_tokens: TokenRange::new(0, 5),
            ..DifficultyProfile::default()
        };
        assert!(generate_synthetic(1, 3, &p).is_err());
    }

    #[test]
    fn schedules_shape_samples() {
        for (schedule, tagged) in [
            (SampleSchedule::Plain, false),
            (SampleSchedule::Fixed, true),
        ] {
            let p = DifficultyProfile {
                schedule,
                samples: 7,
                ..DifficultyProfile::default()
            };
            let qs = generate_synthetic(3, 10, &p).unwrap();
            for q in &qs {
                assert_eq!(q.slm_samples().len(), 7);
                assert!(q
                    .slm_samples()
                    .iter()
                    .all(|s| s.confidence_level().is_some() == tagged));
            }
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let p = CorpusProfile::default();
        assert_eq!(
            generate_synthetic_corpus(5, 4, &p).unwrap(),
            generate_synthetic_corpus(5, 4, &p).unwrap()
        );
        assert!(generate_synthetic_corpus(5, 0, &p).is_err());
    }
}
