//! Judge-noise injection for robustness studies.
//!
//! Noise flips *decisions*: a score that passes its threshold is moved to
//! `threshold - 0.1`, a failing one to `threshold + 0.1` (clamped to
//! `[0, 1]`). A wrapped judge can also be told to undo one class of flips,
//! which is how counterfactually corrected runs are produced.

use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::evaluator::{Evaluator, PostRequest, PreRequest};
use super::EvalError;

const REFLECTION_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FlipMode {
    /// Only failing scores are flipped (they become false accepts).
    FalsePositiveOnly,
    /// Only passing scores are flipped (they become false rejects).
    FalseNegativeOnly,
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub error_rate: f64,
    #[serde(default)]
    pub flip_mode: FlipMode,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(error_rate: f64, flip_mode: FlipMode, seed: u64) -> Result<Self, EvalError> {
        if !(0.0..=1.0).contains(&error_rate) {
            return Err(EvalError::InvalidNoise(error_rate));
        }
        Ok(Self {
            error_rate,
            flip_mode,
            seed,
        })
    }
}

/// Applies the reflection rule to one score given a uniform `draw` in `[0, 1)`.
pub fn inject_judge_noise(true_score: f64, threshold: f64, noise: &NoiseConfig, draw: f64) -> f64 {
    let passing = true_score >= threshold;
    let eligible = match noise.flip_mode {
        FlipMode::Both => true,
        FlipMode::FalsePositiveOnly => !passing,
        FlipMode::FalseNegativeOnly => passing,
    };
    if !eligible || draw >= noise.error_rate {
        return true_score;
    }
    if passing {
        (threshold - REFLECTION_MARGIN).max(0.0)
    } else {
        (threshold + REFLECTION_MARGIN).min(1.0)
    }
}

/// Which injected decision errors are corrected back to the true score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Restoration {
    #[default]
    None,
    FixFalsePositives,
    FixFalseNegatives,
    All,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseStats {
    pub judgments: u64,
    /// Decisions that differ from the wrapped judge after restoration.
    pub decision_errors: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

impl NoiseStats {
    pub fn error_rate(&self) -> f64 {
        if self.judgments == 0 {
            0.0
        } else {
            self.decision_errors as f64 / self.judgments as f64
        }
    }
}

/// Wraps a judge and perturbs its decisions relative to the pruning
/// thresholds. One draw is consumed per judgment regardless of
/// restoration, so runs that differ only in restoration see the same
/// noise sequence.
pub struct NoisyEvaluator<E> {
    inner: E,
    noise: NoiseConfig,
    pre_threshold: f64,
    post_threshold: f64,
    restoration: Restoration,
    state: Mutex<(ChaCha8Rng, NoiseStats)>,
}

impl<E: Evaluator> NoisyEvaluator<E> {
    pub fn new(inner: E, noise: NoiseConfig, pre_threshold: f64, post_threshold: f64) -> Self {
        Self {
            inner,
            noise,
            pre_threshold,
            post_threshold,
            restoration: Restoration::None,
            state: Mutex::new((ChaCha8Rng::seed_from_u64(noise.seed), NoiseStats::default())),
        }
    }

    pub fn with_restoration(mut self, restoration: Restoration) -> Self {
        self.restoration = restoration;
        self
    }

    pub fn stats(&self) -> NoiseStats {
        self.state.lock().expect("noise state poisoned").1
    }

    fn perturb(&self, true_score: f64, threshold: f64) -> f64 {
        let mut guard = self.state.lock().expect("noise state poisoned");
        let (rng, stats) = &mut *guard;
        let draw: f64 = rng.gen();
        let noisy = inject_judge_noise(true_score, threshold, &self.noise, draw);
        let truth = true_score >= threshold;
        let decided = noisy >= threshold;
        stats.judgments += 1;
        let kept = match (truth, decided) {
            (false, true) => {
                stats.false_positives += 1;
                !matches!(
                    self.restoration,
                    Restoration::FixFalsePositives | Restoration::All
                )
            }
            (true, false) => {
                stats.false_negatives += 1;
                !matches!(
                    self.restoration,
                    Restoration::FixFalseNegatives | Restoration::All
                )
            }
            _ => true,
        };
        if kept && truth != decided {
            stats.decision_errors += 1;
            noisy
        } else if kept {
            noisy
        } else {
            true_score
        }
    }
}

impl<E: Evaluator> Evaluator for NoisyEvaluator<E> {
    fn score_pre(&self, request: &PreRequest<'_>) -> Result<f64, EvalError> {
        let s = self.inner.score_pre(request)?;
        Ok(self.perturb(s, self.pre_threshold))
    }

    fn score_post(&self, request: &PostRequest<'_>) -> Result<f64, EvalError> {
        let s = self.inner.score_post(request)?;
        Ok(self.perturb(s, self.post_threshold))
    }
}
