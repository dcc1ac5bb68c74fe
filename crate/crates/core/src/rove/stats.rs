//! Dataset summary in the usual benchmark-table layout.

use super::episode::EpisodeSpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("dataset statistics need at least one episode")]
pub struct EmptyDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population mean and standard deviation.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub task_count: usize,
    pub scene_count: usize,
    /// Ground-truth forward steps, pooled over both robots.
    pub steps_per_robot: MeanStd,
    pub path_per_robot_m: MeanStd,
    pub combined_path_m: MeanStd,
}

pub fn dataset_stats(episodes: &[EpisodeSpec]) -> Result<DatasetStats, EmptyDataset> {
    if episodes.is_empty() {
        return Err(EmptyDataset);
    }
    let scenes: BTreeSet<&str> = episodes.iter().map(|e| e.scene_id.as_str()).collect();
    let steps: Vec<f64> = episodes
        .iter()
        .flat_map(|e| [e.gt_steps_fh() as f64, e.gt_steps_sh() as f64])
        .collect();
    let paths: Vec<f64> = episodes.iter().flat_map(|e| [e.gt_length_fh, e.gt_length_sh]).collect();
    let combined: Vec<f64> = episodes.iter().map(|e| e.gt_length_fh + e.gt_length_sh).collect();
    Ok(DatasetStats {
        task_count: episodes.len(),
        scene_count: scenes.len(),
        steps_per_robot: MeanStd::of(&steps),
        path_per_robot_m: MeanStd::of(&paths),
        combined_path_m: MeanStd::of(&combined),
    })
}

impl DatasetStats {
    pub fn to_table(&self) -> String {
        let row = |name: &str, m: &MeanStd| format!("{name:<22}{:>9.1} ± {:.1}\n", m.mean, m.std);
        let mut s = String::new();
        s.push_str(&format!("{:<22}{:>9}\n", "Tasks", self.task_count));
        s.push_str(&format!("{:<22}{:>9}\n", "Scenes", self.scene_count));
        s.push_str(&row("Mean steps/robot", &self.steps_per_robot));
        s.push_str(&row("Mean path/robot (m)", &self.path_per_robot_m));
        s.push_str(&row("Combined path (m)", &self.combined_path_m));
        s
    }
}
