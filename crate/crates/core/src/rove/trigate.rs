//! Three-gate waypoint verification: visibility, room consistency and
//! recognizability.

use crate::world::{angle_diff, bearing, Pose, RoomLabel, SceneGraph, SceneObject, SensorConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub pass: bool,
    /// Meters from the waypoint to the target cell center.
    pub distance: f64,
    /// Signed bearing of the target relative to the waypoint heading, degrees.
    pub angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomConsistencyReport {
    pub pass: bool,
    pub expected_room: RoomLabel,
    pub actual_room: RoomLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecognizabilityReport {
    pub pass: bool,
    pub score: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub visibility: VisibilityReport,
    pub room_consistency: RoomConsistencyReport,
    pub recognizability: RecognizabilityReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Visibility,
    RoomConsistency,
    Recognizability,
}

impl GateReport {
    pub fn pass(&self) -> bool {
        self.visibility.pass && self.room_consistency.pass && self.recognizability.pass
    }

    pub fn failing_gates(&self) -> Vec<Gate> {
        let mut out = Vec::new();
        if !self.visibility.pass {
            out.push(Gate::Visibility);
        }
        if !self.room_consistency.pass {
            out.push(Gate::RoomConsistency);
        }
        if !self.recognizability.pass {
            out.push(Gate::Recognizability);
        }
        out
    }
}

/// Scores how recognizable a target is from a waypoint, in `[0,1]`.
pub trait RecognizabilityScorer: Sync {
    fn score(&self, scene: &SceneGraph, waypoint: &Pose, target: &SceneObject) -> f64;
}

/// `salience × (1 − distance/range) × (1 − occlusion)`, clamped to `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MockRecognizer {
    pub max_range: f64,
}

impl Default for MockRecognizer {
    fn default() -> Self {
        Self {
            max_range: SensorConfig::default().max_range,
        }
    }
}

impl MockRecognizer {
    pub fn score_at(&self, salience: f64, occlusion: f64, distance: f64) -> f64 {
        (salience * (1.0 - distance / self.max_range) * (1.0 - occlusion)).clamp(0.0, 1.0)
    }
}

impl RecognizabilityScorer for MockRecognizer {
    fn score(&self, scene: &SceneGraph, waypoint: &Pose, target: &SceneObject) -> f64 {
        let (cx, cy) = scene.grid().cell_center(target.cell);
        self.score_at(target.salience, target.occlusion, waypoint.distance_to(cx, cy))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TriGateConfig {
    pub max_range: f64,
    pub fov: f64,
    pub theta_rec: f64,
}

impl Default for TriGateConfig {
    fn default() -> Self {
        let s = SensorConfig::default();
        Self {
            max_range: s.max_range,
            fov: s.fov,
            theta_rec: 0.5,
        }
    }
}

pub fn gate_visibility(
    scene: &SceneGraph,
    waypoint: &Pose,
    target: &SceneObject,
    max_range: f64,
    fov: f64,
) -> VisibilityReport {
    let center = scene.grid().cell_center(target.cell);
    let distance = waypoint.distance_to(center.0, center.1);
    let angle = if distance == 0.0 {
        0.0
    } else {
        angle_diff(f64::from(waypoint.heading), bearing((waypoint.x, waypoint.y), center))
    };
    VisibilityReport {
        pass: scene.line_of_sight(waypoint, target.cell, max_range, fov),
        distance,
        angle,
    }
}

/// Passes iff the target's region carries the expected, verified label.
pub fn gate_room_consistency(scene: &SceneGraph, target: &SceneObject, expected_room: RoomLabel) -> RoomConsistencyReport {
    let actual_room = scene.room_label_at(target.cell);
    RoomConsistencyReport {
        pass: actual_room.is_known() && actual_room == expected_room,
        expected_room,
        actual_room,
    }
}

pub fn gate_recognizability(
    scorer: &dyn RecognizabilityScorer,
    scene: &SceneGraph,
    waypoint: &Pose,
    target: &SceneObject,
    threshold: f64,
) -> RecognizabilityReport {
    let score = scorer.score(scene, waypoint, target).clamp(0.0, 1.0);
    RecognizabilityReport {
        pass: score >= threshold,
        score,
        threshold,
    }
}

/// Runs all three gates; every sub-report is kept even when an earlier gate
/// already failed.
pub fn trigate_check(
    scene: &SceneGraph,
    waypoint: &Pose,
    target: &SceneObject,
    expected_room: RoomLabel,
    cfg: &TriGateConfig,
    scorer: &dyn RecognizabilityScorer,
) -> GateReport {
    GateReport {
        visibility: gate_visibility(scene, waypoint, target, cfg.max_range, cfg.fov),
        room_consistency: gate_room_consistency(scene, target, expected_room),
        recognizability: gate_recognizability(scorer, scene, waypoint, target, cfg.theta_rec),
    }
}
