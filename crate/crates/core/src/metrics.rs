//! Episode scoring, aggregation and A/B comparison.

use crate::rove::EpisodeSpec;
use crate::spe::RolloutResult;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no episodes to aggregate")]
    Empty,
    #[error("episode {0}: ground-truth length missing or invalid")]
    GtLength(String),
    #[error("result for {result} scored against episode {episode}")]
    Mismatch { result: String, episode: String },
}

/// One scored episode, flat so it serializes as a table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: String,
    pub success_fh: bool,
    pub success_sh: bool,
    pub both_success: bool,
    pub path_len_fh_m: f64,
    pub path_len_sh_m: f64,
    pub gt_length_fh_m: f64,
    pub gt_length_sh_m: f64,
    pub ne_fh_m: f64,
    pub ne_sh_m: f64,
    pub spl_fh: f64,
    pub spl_sh: f64,
    pub isr_fh: f64,
    pub isr_sh: f64,
    pub ticks: u64,
    pub swap_count: u64,
    pub dialogue_count: u64,
}

/// Success-weighted path length for one robot.
pub fn spl(success: bool, gt_length: f64, path_length: f64) -> f64 {
    if !success {
        return 0.0;
    }
    let denom = path_length.max(gt_length);
    if denom <= 0.0 {
        // already at the goal and never moved
        1.0
    } else {
        gt_length / denom
    }
}

fn isr(done: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        done as f64 / total as f64
    }
}

pub fn score_episode(result: &RolloutResult, episode: &EpisodeSpec) -> Result<EpisodeResult, MetricsError> {
    if result.episode_id != episode.episode_id {
        return Err(MetricsError::Mismatch {
            result: result.episode_id.clone(),
            episode: episode.episode_id.clone(),
        });
    }
    let valid = |l: f64| l.is_finite() && l >= 0.0;
    if !valid(episode.gt_length_fh) || !valid(episode.gt_length_sh) {
        return Err(MetricsError::GtLength(episode.episode_id.clone()));
    }
    Ok(EpisodeResult {
        episode_id: result.episode_id.clone(),
        success_fh: result.success_fh,
        success_sh: result.success_sh,
        both_success: result.success_fh && result.success_sh,
        path_len_fh_m: result.path_len_fh_m,
        path_len_sh_m: result.path_len_sh_m,
        gt_length_fh_m: episode.gt_length_fh,
        gt_length_sh_m: episode.gt_length_sh,
        ne_fh_m: result.ne_fh_m,
        ne_sh_m: result.ne_sh_m,
        spl_fh: spl(result.success_fh, episode.gt_length_fh, result.path_len_fh_m),
        spl_sh: spl(result.success_sh, episode.gt_length_sh, result.path_len_sh_m),
        isr_fh: isr(result.subtasks_done_fh, result.subtasks_total_fh),
        isr_sh: isr(result.subtasks_done_sh, result.subtasks_total_sh),
        ticks: result.ticks,
        swap_count: result.swap_count,
        dialogue_count: result.dialogue_count,
    })
}

/// Suite-level metrics. SR pools both robots of every episode; the
/// per-robot rates are kept alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_episodes: usize,
    #[serde(rename = "SR")]
    pub sr: f64,
    #[serde(rename = "BSR")]
    pub bsr: f64,
    #[serde(rename = "ISR")]
    pub isr: f64,
    #[serde(rename = "SPL")]
    pub spl: f64,
    #[serde(rename = "NE")]
    pub ne: f64,
    pub sr_fh: f64,
    pub sr_sh: f64,
}

pub fn aggregate(results: &[EpisodeResult]) -> Result<MetricsReport, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = results.len() as f64;
    let mean = |f: &dyn Fn(&EpisodeResult) -> f64| results.iter().map(f).sum::<f64>() / n;
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    let sr_fh = mean(&|r| b(r.success_fh));
    let sr_sh = mean(&|r| b(r.success_sh));
    Ok(MetricsReport {
        n_episodes: results.len(),
        sr: (sr_fh + sr_sh) / 2.0,
        bsr: mean(&|r| b(r.both_success)),
        isr: mean(&|r| (r.isr_fh + r.isr_sh) / 2.0),
        spl: mean(&|r| (r.spl_fh + r.spl_sh) / 2.0),
        ne: mean(&|r| (r.ne_fh_m + r.ne_sh_m) / 2.0),
        sr_fh,
        sr_sh,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub a: f64,
    pub b: f64,
    /// `b - a`, or `a - b` for NE so that positive is better everywhere.
    pub abs: f64,
    /// `abs / a`; `None` when `a` is zero.
    pub rel: Option<f64>,
}

impl Delta {
    fn new(a: f64, b: f64, lower_is_better: bool) -> Self {
        let abs = if lower_is_better { a - b } else { b - a };
        Self {
            a,
            b,
            abs,
            rel: (a != 0.0).then(|| abs / a),
        }
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rel {
            Some(r) => write!(f, "{:.4} -> {:.4} ({:+.1}%)", self.a, self.b, r * 100.0),
            None => write!(f, "{:.4} -> {:.4} (undefined)", self.a, self.b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    #[serde(rename = "SR")]
    pub sr: Delta,
    #[serde(rename = "BSR")]
    pub bsr: Delta,
    #[serde(rename = "ISR")]
    pub isr: Delta,
    #[serde(rename = "SPL")]
    pub spl: Delta,
    #[serde(rename = "NE")]
    pub ne: Delta,
}

impl Comparison {
    pub fn rows(&self) -> [(&'static str, &Delta); 5] {
        [("SR", &self.sr), ("BSR", &self.bsr), ("ISR", &self.isr), ("SPL", &self.spl), ("NE", &self.ne)]
    }
}

pub fn compare(a: &MetricsReport, b: &MetricsReport) -> Comparison {
    Comparison {
        sr: Delta::new(a.sr, b.sr, false),
        bsr: Delta::new(a.bsr, b.bsr, false),
        isr: Delta::new(a.isr, b.isr, false),
        spl: Delta::new(a.spl, b.spl, false),
        ne: Delta::new(a.ne, b.ne, true),
    }
}
