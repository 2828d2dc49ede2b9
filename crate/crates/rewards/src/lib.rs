//! Reward and metric arithmetic, all pure functions.
//!
//! Covers the planner's four-component episode reward, group-relative
//! advantage normalization with the clipped surrogate term, the per-agent
//! shared-reward penalties, the smoothed behavior-feedback scalar, answer
//! perplexity, and the normalized win rate used in side-by-side evaluation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("execution score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("scaling factors must satisfy alphas > 0 and betas < 0")]
    BadScaling,
    #[error("input list must be non-empty")]
    EmptyInput,
    #[error("importance ratio must be positive, got {0}")]
    NonPositiveRatio(f64),
    #[error("kl divergence must be non-negative, got {0}")]
    NegativeKl(f64),
    #[error("clip width must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
    #[error("log-probabilities must be <= 0, got {0}")]
    PositiveLogprob(f64),
    #[error("denominator is zero after smoothing")]
    ZeroDenominator,
    #[error("total judgment count is zero")]
    ZeroTotal,
}

/// Scaling factors for the planner reward. Alphas reward, betas penalize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub alpha_answer: f64,
    pub alpha_feedback: f64,
    pub beta_feedback: f64,
    pub alpha_format: f64,
    pub beta_format: f64,
    pub alpha_execution: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            alpha_answer: 1.0,
            alpha_feedback: 1.0,
            beta_feedback: -1.0,
            alpha_format: 1.0,
            beta_format: -1.0,
            alpha_execution: 1.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        let alphas_ok = self.alpha_answer > 0.0
            && self.alpha_feedback > 0.0
            && self.alpha_format > 0.0
            && self.alpha_execution > 0.0;
        let betas_ok = self.beta_feedback < 0.0 && self.beta_format < 0.0;
        if alphas_ok && betas_ok {
            Ok(())
        } else {
            Err(RewardError::BadScaling)
        }
    }
}

/// User verdict on a proposed sub-task decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackSignal {
    Accepted,
    Rejected,
    None,
}

/// Per-episode reward components; `total` is always their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub answer: f64,
    pub feedback: f64,
    pub format: f64,
    pub execution: f64,
    pub total: f64,
}

/// Four-component episode reward: answer correctness, user feedback,
/// output formatting, and mean sub-task execution success.
pub fn planner_reward(
    correct: bool,
    feedback: FeedbackSignal,
    well_formatted: bool,
    exec_scores: &[f64],
    cfg: &RewardConfig,
) -> Result<RewardBreakdown, RewardError> {
    cfg.validate()?;
    for &s in exec_scores {
        if !(0.0..=1.0).contains(&s) {
            return Err(RewardError::ScoreOutOfRange(s));
        }
    }
    let answer = if correct { cfg.alpha_answer } else { 0.0 };
    let feedback = match feedback {
        FeedbackSignal::Accepted => cfg.alpha_feedback,
        FeedbackSignal::Rejected => cfg.beta_feedback,
        FeedbackSignal::None => 0.0,
    };
    let format = if well_formatted {
        cfg.alpha_format
    } else {
        cfg.beta_format
    };
    let execution = if exec_scores.is_empty() {
        0.0
    } else {
        cfg.alpha_execution * exec_scores.iter().sum::<f64>() / exec_scores.len() as f64
    };
    Ok(RewardBreakdown {
        answer,
        feedback,
        format,
        execution,
        total: answer + feedback + format + execution,
    })
}

/// Group-relative advantages: (r - mean) / std with the population
/// standard deviation. Degenerate groups (std below 1e-12) normalize to
/// all zeros rather than dividing by zero.
pub fn grpo_advantages(rewards: &[f64]) -> Result<Vec<f64>, RewardError> {
    if rewards.is_empty() {
        return Err(RewardError::EmptyInput);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let variance = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = variance.sqrt();
    if std < 1e-12 {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// Clipping hyper-parameters for the surrogate term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrpoParams {
    /// Clip width, in (0, 1).
    pub epsilon: f64,
    /// KL penalty weight, >= 0.
    pub beta: f64,
}

impl Default for GrpoParams {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            beta: 0.0,
        }
    }
}

/// One clipped-surrogate term:
/// min(ratio * adv, clip(ratio, 1-eps, 1+eps) * adv) - beta * kl.
pub fn grpo_surrogate_term(
    ratio: f64,
    advantage: f64,
    kl: f64,
    params: &GrpoParams,
) -> Result<f64, RewardError> {
    if ratio <= 0.0 {
        return Err(RewardError::NonPositiveRatio(ratio));
    }
    if kl < 0.0 {
        return Err(RewardError::NegativeKl(kl));
    }
    if !(params.epsilon > 0.0 && params.epsilon < 1.0) {
        return Err(RewardError::BadEpsilon(params.epsilon));
    }
    let clipped = ratio.clamp(1.0 - params.epsilon, 1.0 + params.epsilon);
    Ok((ratio * advantage).min(clipped * advantage) - params.beta * kl)
}

/// Shared-reward per-agent rewards with the fixed penalty constants:
/// -0.5 for decomposing into more than four sub-questions, -1 for invalid
/// document selections, -0.5 for over-length answers.
pub fn mappo_rewards(
    shared: f64,
    n_subquestions: usize,
    selection_valid: bool,
    answer_len_ok: bool,
) -> (f64, f64, f64) {
    let qr_penalty = if n_subquestions > 4 { -0.5 } else { 0.0 };
    let s_penalty = if selection_valid { 0.0 } else { -1.0 };
    let g_penalty = if answer_len_ok { 0.0 } else { -0.5 };
    (shared + qr_penalty, shared + s_penalty, shared + g_penalty)
}

/// Behavior-feedback scalar: counts are log-smoothed, discretized into
/// equal-width buckets, then combined as
/// (like - dislike) / (page views + clicks) over the bucket indices.
pub fn behavior_reward(
    pv: u64,
    clicks: u64,
    like: u64,
    dislike: u64,
    bucket_width: f64,
) -> Result<f64, RewardError> {
    let bucket = |c: u64| ((1.0 + c as f64).ln() / bucket_width).floor();
    let denominator = bucket(pv) + bucket(clicks);
    if denominator == 0.0 {
        return Err(RewardError::ZeroDenominator);
    }
    Ok((bucket(like) - bucket(dislike)) / denominator)
}

pub const DEFAULT_BUCKET_WIDTH: f64 = 0.5;

/// Perplexity of a generated sequence: exp(-mean(logprobs)).
pub fn answer_perplexity(token_logprobs: &[f64]) -> Result<f64, RewardError> {
    if token_logprobs.is_empty() {
        return Err(RewardError::EmptyInput);
    }
    for &lp in token_logprobs {
        if lp > 0.0 {
            return Err(RewardError::PositiveLogprob(lp));
        }
    }
    let mean = token_logprobs.iter().sum::<f64>() / token_logprobs.len() as f64;
    Ok((-mean).exp())
}

/// Normalized win rate of side-by-side judgments:
/// (wins - losses) / (wins + ties + losses), in [-1, 1].
pub fn nwr(win: u64, tie: u64, lose: u64) -> Result<f64, RewardError> {
    let total = win + tie + lose;
    if total == 0 {
        return Err(RewardError::ZeroTotal);
    }
    Ok((win as f64 - lose as f64) / total as f64)
}
