//! Relay episode sampling with stop-level resampling.

use super::trigate::{trigate_check, Gate, GateReport, RecognizabilityScorer, TriGateConfig};
use crate::seed;
use crate::task::{Chains, Subtask};
use crate::world::catalog::{is_delivery_fixture, is_handoff_fixture, is_portable};
use crate::world::{bearing, Cell, Pose, RoomLabel, SceneGraph, SceneObject, TURN_DEGREES};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stop {
    Pickup,
    Handoff,
    Delivery,
}

impl fmt::Display for Stop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stop::Pickup => "pickup",
            Stop::Handoff => "handoff",
            Stop::Delivery => "delivery",
        })
    }
}

/// Attempt counters of one stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GateTally {
    pub rooms_tried: u32,
    pub waypoint_attempts: u32,
    pub visibility_failures: u32,
    pub room_consistency_failures: u32,
    pub recognizability_failures: u32,
}

impl GateTally {
    fn record(&mut self, report: &GateReport) {
        self.waypoint_attempts += 1;
        for g in report.failing_gates() {
            match g {
                Gate::Visibility => self.visibility_failures += 1,
                Gate::RoomConsistency => self.room_consistency_failures += 1,
                Gate::Recognizability => self.recognizability_failures += 1,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub episode_id: String,
    pub scene_id: String,
    pub stop: Stop,
    pub reason: String,
    pub tallies: BTreeMap<Stop, GateTally>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpisodeError {
    #[error("episode {} rejected at the {} stop: {}", .0.episode_id, .0.stop, .0.reason)]
    Rejected(Box<Rejection>),
    #[error("scene {scene_id} cannot host episodes: {reason}")]
    Precondition { scene_id: String, reason: String },
    #[error("instruction would contain an unverified room ({0})")]
    UnverifiedRoom(Stop),
    #[error("episode is inconsistent with its scene: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub trigate: TriGateConfig,
    /// Candidate waypoints lie within this distance of the stop's anchor object.
    pub waypoint_radius_m: f64,
    /// Waypoint samples per room before the room is resampled.
    pub waypoint_retries: u32,
    /// Rooms tried per stop before the episode is rejected.
    pub room_retries: u32,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            trigate: TriGateConfig::default(),
            waypoint_radius_m: 1.5,
            waypoint_retries: 16,
            room_retries: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopReports {
    pub pickup: GateReport,
    pub handoff: GateReport,
    pub delivery: GateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub episode_id: String,
    pub scene_id: String,
    pub instruction: String,
    pub target_object_id: u32,
    pub target_category: String,
    pub handoff_object_id: u32,
    pub delivery_object_id: u32,
    pub pickup_room: RoomLabel,
    pub handoff_room: RoomLabel,
    pub delivery_room: RoomLabel,
    pub pickup_waypoint: Pose,
    pub handoff_waypoint: Pose,
    pub delivery_waypoint: Pose,
    pub start_pose_fh: Pose,
    pub start_pose_sh: Pose,
    pub gt_path_fh: Vec<Cell>,
    pub gt_path_sh: Vec<Cell>,
    pub gt_length_fh: f64,
    pub gt_length_sh: f64,
    pub subtasks_fh: Vec<Subtask>,
    pub subtasks_sh: Vec<Subtask>,
    pub gate_reports: StopReports,
}

impl EpisodeSpec {
    pub fn chains(&self) -> Chains {
        Chains {
            first: self.subtasks_fh.clone(),
            second: self.subtasks_sh.clone(),
        }
    }

    pub fn gt_steps_fh(&self) -> usize {
        self.gt_path_fh.len().saturating_sub(1)
    }

    pub fn gt_steps_sh(&self) -> usize {
        self.gt_path_sh.len().saturating_sub(1)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("episode serializes")
    }
}

/// Poses at free cells of `region` within `radius` of `anchor`, facing it.
pub fn waypoint_candidates(scene: &SceneGraph, anchor: &SceneObject, radius: f64) -> Vec<Pose> {
    let res = scene.resolution();
    let Some(region) = scene.region(anchor.region_id) else {
        return Vec::new();
    };
    let target = scene.grid().cell_center(anchor.cell);
    let mut cells: Vec<Cell> = region
        .cells
        .iter()
        .copied()
        .filter(|c| *c != anchor.cell && scene.is_free(*c))
        .filter(|c| {
            let p = scene.grid().cell_center(*c);
            (p.0 - target.0).hypot(p.1 - target.1) <= radius + 1e-9
        })
        .collect();
    cells.sort();
    cells
        .into_iter()
        .map(|c| {
            let p = scene.grid().cell_center(c);
            Pose::at_cell(c, res, quantize_heading(bearing(p, target)))
        })
        .collect()
}

/// Nearest multiple of the turn quantum, in `[0, 360)`.
pub fn quantize_heading(deg: f64) -> u16 {
    let q = f64::from(TURN_DEGREES);
    ((deg / q).round() * q).rem_euclid(360.0) as u16
}

struct StopPick<'a> {
    object: &'a SceneObject,
    waypoint: Pose,
    report: GateReport,
}

struct Sampler<'a> {
    scene: &'a SceneGraph,
    cfg: &'a EpisodeConfig,
    scorer: &'a dyn RecognizabilityScorer,
}

impl<'a> Sampler<'a> {
    /// Stop-level resampling: up to `waypoint_retries` waypoints per room,
    /// then up to `room_retries` rooms. Only this stop's tally is touched.
    fn pick(
        &self,
        rng: &mut ChaCha8Rng,
        anchors: &[&'a SceneObject],
        tally: &mut GateTally,
    ) -> Option<StopPick<'a>> {
        let mut by_room: BTreeMap<u32, Vec<&'a SceneObject>> = BTreeMap::new();
        for o in anchors {
            by_room.entry(o.region_id).or_default().push(o);
        }
        let mut rooms: Vec<u32> = by_room.keys().copied().collect();
        rooms.shuffle(rng);
        for room in rooms.into_iter().take(self.cfg.room_retries as usize) {
            tally.rooms_tried += 1;
            let objects = &by_room[&room];
            let object = objects[rng.gen_range(0..objects.len())];
            let expected = self
                .scene
                .region(room)
                .map_or(RoomLabel::Unknown, |r| r.room_label);
            let mut candidates = waypoint_candidates(self.scene, object, self.cfg.waypoint_radius_m);
            candidates.shuffle(rng);
            for waypoint in candidates.into_iter().take(self.cfg.waypoint_retries as usize) {
                let report = trigate_check(self.scene, &waypoint, object, expected, &self.cfg.trigate, self.scorer);
                tally.record(&report);
                if report.pass() {
                    return Some(StopPick {
                        object,
                        waypoint,
                        report,
                    });
                }
            }
        }
        None
    }
}

fn verified(scene: &SceneGraph, o: &SceneObject) -> bool {
    scene.region(o.region_id).is_some_and(|r| r.room_label.is_known())
}

/// Samples one verified relay episode. Deterministic in `(seed, scene)`.
pub fn generate_episode(
    scene: &SceneGraph,
    seed: u64,
    episode_id: &str,
    cfg: &EpisodeConfig,
    scorer: &dyn RecognizabilityScorer,
) -> Result<EpisodeSpec, EpisodeError> {
    let precondition = |reason: &str| EpisodeError::Precondition {
        scene_id: scene.scene_id().to_string(),
        reason: reason.to_string(),
    };
    let verified_rooms = scene.regions().iter().filter(|r| r.room_label.is_known()).count();
    if verified_rooms < 3 {
        return Err(precondition("fewer than 3 regions carry a verified label"));
    }
    let targets: Vec<&SceneObject> = scene
        .objects()
        .iter()
        .filter(|o| is_portable(&o.category) && verified(scene, o))
        .collect();
    if targets.is_empty() {
        return Err(precondition("no portable target object in a verified room"));
    }

    let mut rng = seed::rng(seed::derive_keyed(seed, &[scene.scene_id()], 0), "episode", 0);
    let sampler = Sampler { scene, cfg, scorer };
    let mut tallies: BTreeMap<Stop, GateTally> = [Stop::Pickup, Stop::Handoff, Stop::Delivery]
        .into_iter()
        .map(|s| (s, GateTally::default()))
        .collect();
    let reject = |stop: Stop, reason: &str, tallies: &BTreeMap<Stop, GateTally>| {
        EpisodeError::Rejected(Box::new(Rejection {
            episode_id: episode_id.to_string(),
            scene_id: scene.scene_id().to_string(),
            stop,
            reason: reason.to_string(),
            tallies: tallies.clone(),
        }))
    };

    let pickup = sampler
        .pick(&mut rng, &targets, tallies.get_mut(&Stop::Pickup).expect("tally"))
        .ok_or_else(|| reject(Stop::Pickup, "no target waypoint passed all gates", &tallies))?;

    let handoff_fixtures: Vec<&SceneObject> = scene
        .objects()
        .iter()
        .filter(|o| is_handoff_fixture(&o.category) && verified(scene, o))
        .filter(|o| o.region_id != pickup.object.region_id)
        .collect();
    if handoff_fixtures.is_empty() {
        return Err(reject(Stop::Handoff, "no handoff fixture outside the pickup room", &tallies));
    }
    let handoff = sampler
        .pick(&mut rng, &handoff_fixtures, tallies.get_mut(&Stop::Handoff).expect("tally"))
        .ok_or_else(|| reject(Stop::Handoff, "no handoff waypoint passed all gates", &tallies))?;

    let delivery_fixtures: Vec<&SceneObject> = scene
        .objects()
        .iter()
        .filter(|o| is_delivery_fixture(&o.category) && verified(scene, o))
        .filter(|o| o.region_id != pickup.object.region_id && o.region_id != handoff.object.region_id)
        .collect();
    if delivery_fixtures.is_empty() {
        return Err(reject(Stop::Delivery, "no delivery fixture outside the other stop rooms", &tallies));
    }
    let delivery = sampler
        .pick(&mut rng, &delivery_fixtures, tallies.get_mut(&Stop::Delivery).expect("tally"))
        .ok_or_else(|| reject(Stop::Delivery, "no delivery waypoint passed all gates", &tallies))?;

    let free: Vec<Cell> = scene.regions().iter().flat_map(|r| r.cells.iter().copied()).collect();
    let res = scene.resolution();
    let start_fh = free[rng.gen_range(0..free.len())];
    let mut start_sh = free[rng.gen_range(0..free.len())];
    while start_sh == start_fh && free.len() > 1 {
        start_sh = free[rng.gen_range(0..free.len())];
    }
    let heading = |rng: &mut ChaCha8Rng| rng.gen_range(0..24u16) * TURN_DEGREES;
    let start_pose_fh = Pose::at_cell(start_fh, res, heading(&mut rng));
    let start_pose_sh = Pose::at_cell(start_sh, res, heading(&mut rng));

    let pickup_wp = pickup.waypoint.cell(res);
    let handoff_wp = handoff.waypoint.cell(res);
    let delivery_wp = delivery.waypoint.cell(res);
    let gt_path_fh = chain_path(scene, &[start_fh, pickup_wp, handoff_wp])
        .ok_or_else(|| reject(Stop::Pickup, "first-half route is unreachable", &tallies))?;
    let gt_path_sh = chain_path(scene, &[start_sh, handoff_wp, delivery_wp])
        .ok_or_else(|| reject(Stop::Delivery, "second-half route is unreachable", &tallies))?;
    let chains = Chains::relay(pickup_wp, pickup.object.cell, handoff_wp, delivery_wp);

    let mut ep = EpisodeSpec {
        episode_id: episode_id.to_string(),
        scene_id: scene.scene_id().to_string(),
        instruction: String::new(),
        target_object_id: pickup.object.object_id,
        target_category: pickup.object.category.clone(),
        handoff_object_id: handoff.object.object_id,
        delivery_object_id: delivery.object.object_id,
        pickup_room: pickup.report.room_consistency.actual_room,
        handoff_room: handoff.report.room_consistency.actual_room,
        delivery_room: delivery.report.room_consistency.actual_room,
        pickup_waypoint: pickup.waypoint,
        handoff_waypoint: handoff.waypoint,
        delivery_waypoint: delivery.waypoint,
        start_pose_fh,
        start_pose_sh,
        gt_length_fh: (gt_path_fh.len() - 1) as f64 * res,
        gt_length_sh: (gt_path_sh.len() - 1) as f64 * res,
        gt_path_fh,
        gt_path_sh,
        subtasks_fh: chains.first,
        subtasks_sh: chains.second,
        gate_reports: StopReports {
            pickup: pickup.report,
            handoff: handoff.report,
            delivery: delivery.report,
        },
    };
    ep.instruction = render_instruction(&ep, scene)?;
    Ok(ep)
}

/// Concatenated shortest paths through `stops`, shared endpoints once.
pub fn chain_path(scene: &SceneGraph, stops: &[Cell]) -> Option<Vec<Cell>> {
    let mut out = vec![*stops.first()?];
    for w in stops.windows(2) {
        let leg = scene.shortest_path(w[0], w[1])?;
        out.extend_from_slice(&leg[1..]);
    }
    Some(out)
}

/// Instruction text from the verified labels of the stop rooms.
pub fn render_instruction(ep: &EpisodeSpec, scene: &SceneGraph) -> Result<String, EpisodeError> {
    let room_of = |object_id: u32, stop: Stop| -> Result<RoomLabel, EpisodeError> {
        let label = scene
            .object(object_id)
            .map_or(RoomLabel::Unknown, |o| scene.room_label_at(o.cell));
        if label.is_known() {
            Ok(label)
        } else {
            Err(EpisodeError::UnverifiedRoom(stop))
        }
    };
    let pickup = room_of(ep.target_object_id, Stop::Pickup)?;
    let handoff = room_of(ep.handoff_object_id, Stop::Handoff)?;
    let delivery = room_of(ep.delivery_object_id, Stop::Delivery)?;
    Ok(instruction_text(&ep.target_category, pickup, delivery, handoff))
}

pub fn instruction_text(category: &str, pickup: RoomLabel, delivery: RoomLabel, handoff: RoomLabel) -> String {
    format!("Take the {category} in the {pickup} to the {delivery}; hand off at the {handoff}.")
}

/// Re-checks a stored episode against its scene: gates pass again, ground
/// truth lengths match the world oracle and the chains are well formed.
pub fn verify_episode(
    ep: &EpisodeSpec,
    scene: &SceneGraph,
    cfg: &EpisodeConfig,
    scorer: &dyn RecognizabilityScorer,
) -> Result<(), EpisodeError> {
    let bad = |m: String| Err(EpisodeError::Invalid(m));
    if ep.scene_id != scene.scene_id() {
        return bad(format!("episode scene {} != {}", ep.scene_id, scene.scene_id()));
    }
    let res = scene.resolution();
    let stops = [
        (Stop::Pickup, ep.target_object_id, ep.pickup_waypoint, ep.pickup_room),
        (Stop::Handoff, ep.handoff_object_id, ep.handoff_waypoint, ep.handoff_room),
        (Stop::Delivery, ep.delivery_object_id, ep.delivery_waypoint, ep.delivery_room),
    ];
    for (stop, object_id, wp, room) in stops {
        let Some(obj) = scene.object(object_id) else {
            return bad(format!("{stop} object {object_id} not in scene"));
        };
        if !scene.pose_is_valid(&wp) {
            return bad(format!("{stop} waypoint is not a valid pose"));
        }
        let report = trigate_check(scene, &wp, obj, room, &cfg.trigate, scorer);
        if !report.pass() {
            return bad(format!("{stop} waypoint fails {:?}", report.failing_gates()));
        }
    }
    for (name, start) in [("fh", ep.start_pose_fh), ("sh", ep.start_pose_sh)] {
        if !scene.pose_is_valid(&start) {
            return bad(format!("start pose {name} is not valid"));
        }
    }
    let target = scene.object(ep.target_object_id).expect("checked above").cell;
    let chains = Chains::relay(
        ep.pickup_waypoint.cell(res),
        target,
        ep.handoff_waypoint.cell(res),
        ep.delivery_waypoint.cell(res),
    );
    if chains.first != ep.subtasks_fh || chains.second != ep.subtasks_sh {
        return bad("subtask chains do not match the waypoints".into());
    }
    let legs = |cells: [Cell; 3]| -> Option<f64> {
        Some(scene.geodesic_distance(cells[0], cells[1])? + scene.geodesic_distance(cells[1], cells[2])?)
    };
    let fh = legs([ep.start_pose_fh.cell(res), ep.pickup_waypoint.cell(res), ep.handoff_waypoint.cell(res)]);
    let sh = legs([ep.start_pose_sh.cell(res), ep.handoff_waypoint.cell(res), ep.delivery_waypoint.cell(res)]);
    if fh != Some(ep.gt_length_fh) || sh != Some(ep.gt_length_sh) {
        return bad("ground-truth lengths disagree with the geodesic oracle".into());
    }
    for (path, len) in [(&ep.gt_path_fh, ep.gt_length_fh), (&ep.gt_path_sh, ep.gt_length_sh)] {
        if (path.len().saturating_sub(1)) as f64 * res != len
            || !path.windows(2).all(|w| w[0].manhattan(w[1]) == 1 && scene.is_free(w[1]))
        {
            return bad("ground-truth path is not a free 4-connected path of the stated length".into());
        }
    }
    if !(ep.gt_length_fh + ep.gt_length_sh > 0.0) {
        return bad("combined ground-truth length is zero".into());
    }
    Ok(())
}
