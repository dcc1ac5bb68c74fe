//! Per-robot navigation policy over a partially observed occupancy belief.

use crate::edr::{AgentReport, PolicyContext};
use crate::rove::MockRecognizer;
use crate::svb::{ObjectObservation, SemanticPacket, Stage};
use crate::task::{RobotId, RoleCursor, SubtaskKind};
use crate::world::{
    angle_diff, bearing, bfs_field, bfs_path, heading_vector, supercover, within_fov, Action, Cell, GridMap, Pose, RoomLabel,
    SceneGraph, SceneObject, SensorConfig,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Half a turn step: headings within this of the bearing move forward.
pub const BEARING_TOLERANCE: f64 = 7.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellBelief {
    Unknown,
    Free,
    Blocked,
}

/// Believed occupancy. Unknown cells are planned through.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    shape: GridMap,
    cells: Vec<CellBelief>,
}

impl Belief {
    pub fn unknown(width: u32, height: u32, resolution: f64) -> Self {
        let shape = GridMap::open(width, height, resolution);
        let cells = vec![CellBelief::Unknown; shape.len()];
        Self { shape, cells }
    }

    /// Belief equal to the scene's current occupancy.
    pub fn from_scene(scene: &SceneGraph) -> Self {
        let g = scene.grid();
        let mut b = Self::unknown(g.width(), g.height(), g.resolution());
        for i in 0..b.cells.len() {
            let c = g.cell_at(i);
            b.cells[i] = if g.is_blocked(c) {
                CellBelief::Blocked
            } else {
                CellBelief::Free
            };
        }
        b
    }

    pub fn resolution(&self) -> f64 {
        self.shape.resolution()
    }

    /// Out-of-bounds cells read as blocked.
    pub fn get(&self, c: Cell) -> CellBelief {
        self.shape.index(c).map_or(CellBelief::Blocked, |i| self.cells[i])
    }

    pub fn set(&mut self, c: Cell, v: CellBelief) {
        if let Some(i) = self.shape.index(c) {
            self.cells[i] = v;
        }
    }

    pub fn passable(&self, c: Cell) -> bool {
        self.get(c) != CellBelief::Blocked
    }

    pub fn known_count(&self) -> usize {
        self.cells.iter().filter(|c| **c != CellBelief::Unknown).count()
    }

    pub fn blocked_cells(&self) -> Vec<Cell> {
        (0..self.cells.len())
            .filter(|i| self.cells[*i] == CellBelief::Blocked)
            .map(|i| self.shape.cell_at(i))
            .collect()
    }

    pub fn distance_field(&self, from: Cell) -> Vec<u32> {
        bfs_field(&self.shape, from, |c| self.passable(c))
    }

    pub fn distance(&self, a: Cell, b: Cell) -> Option<u32> {
        if a == b {
            return Some(0);
        }
        if !self.passable(b) {
            return None;
        }
        let d = self.distance_field(a)[self.shape.index(b)?];
        (d != u32::MAX).then_some(d)
    }

    pub fn path(&self, a: Cell, b: Cell) -> Option<Vec<Cell>> {
        if a == b {
            return Some(vec![a]);
        }
        if !self.passable(b) {
            return None;
        }
        bfs_path(&self.shape, a, b, |c| self.passable(c))
    }

    /// A shortest path that keeps going straight whenever a straight step
    /// is also shortest. `heading` seeds the preferred first direction.
    pub fn straight_path(&self, a: Cell, b: Cell, heading: u16) -> Option<Vec<Cell>> {
        if a == b {
            return Some(vec![a]);
        }
        if !self.passable(b) {
            return None;
        }
        let field = bfs_field(&self.shape, b, |c| self.passable(c) || c == a);
        let d = |c: Cell| self.shape.index(c).map_or(u32::MAX, |i| field[i]);
        if d(a) == u32::MAX {
            return None;
        }
        let (hx, hy) = heading_vector(heading);
        let mut dir = (hx.round() as i32, hy.round() as i32);
        let mut path = vec![a];
        let mut at = a;
        while at != b {
            let want = d(at) - 1;
            let straight = Cell::new(at.x + dir.0, at.y + dir.1);
            let next = if d(straight) == want {
                straight
            } else {
                *at.neighbors4().iter().find(|n| d(**n) == want).expect("field descends")
            };
            dir = (next.x - at.x, next.y - at.y);
            path.push(next);
            at = next;
        }
        Some(path)
    }

    fn is_frontier(&self, c: Cell) -> bool {
        self.get(c) == CellBelief::Free && c.neighbors4().iter().any(|n| self.get(*n) == CellBelief::Unknown)
    }

    /// Nearest reachable frontier cell other than `from`, else the nearest
    /// reachable unknown cell.
    pub fn nearest_frontier(&self, from: Cell) -> Option<Cell> {
        let field = self.distance_field(from);
        let pick = |want: &dyn Fn(Cell) -> bool| {
            (0..field.len())
                .filter(|i| field[*i] != u32::MAX && field[*i] > 0)
                .map(|i| (field[i], self.shape.cell_at(i)))
                .filter(|(_, c)| want(*c))
                .min()
                .map(|(_, c)| c)
        };
        pick(&|c| self.is_frontier(c)).or_else(|| pick(&|c| self.get(c) == CellBelief::Unknown))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub sensor: SensorConfig,
    /// Meters.
    pub r_succ: f64,
    /// Meters.
    pub r_int: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            sensor: SensorConfig::three_view(),
            r_succ: 1.0,
            r_int: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub path: Vec<Cell>,
    pub goal: Cell,
    pub version: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observation {
    pub objects: Vec<ObjectObservation>,
    /// Cells seen blocked this tick that were previously believed free.
    pub newly_blocked: Vec<Cell>,
}

/// What the agent wants to do this tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    pub action: Action,
    /// Subtask the agent claims to finish by stopping here.
    pub attempt: Option<SubtaskKind>,
}

impl Intent {
    fn idle() -> Self {
        Self {
            action: Action::Stop,
            attempt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub robot_id: RobotId,
    pub pose: Pose,
    pub belief: Belief,
    pub ctx: PolicyContext,
    pub carrying: bool,
    pub stopped: bool,
    pub plan: Option<Plan>,
    pub last_observation: Observation,
    reported_edges: BTreeSet<(Cell, Cell)>,
    pending_blocked: Vec<(Cell, Cell)>,
    known_cells: usize,
    /// Cells entered while working on the current subtask.
    visited: (Option<RoleCursor>, BTreeSet<Cell>),
}

impl AgentState {
    pub fn new(robot_id: RobotId, pose: Pose, scene: &SceneGraph, ctx: PolicyContext) -> Self {
        let g = scene.grid();
        let mut belief = Belief::unknown(g.width(), g.height(), g.resolution());
        belief.set(pose.cell(g.resolution()), CellBelief::Free);
        Self {
            robot_id,
            pose,
            belief,
            ctx,
            carrying: false,
            stopped: false,
            plan: None,
            last_observation: Observation::default(),
            reported_edges: BTreeSet::new(),
            pending_blocked: Vec::new(),
            known_cells: 1,
            visited: (None, BTreeSet::new()),
        }
    }

    pub fn cell(&self) -> Cell {
        self.pose.cell(self.belief.resolution())
    }

    /// Updates the belief from what the sensor sees and scores visible
    /// objects. `objects` carries live object positions.
    pub fn observe(&mut self, scene: &SceneGraph, objects: &[SceneObject], sensor: &SensorConfig) -> Observation {
        let visible = visible_cells(scene, &self.pose, sensor);
        let mut newly_blocked = Vec::new();
        for &c in &visible {
            if scene.grid().is_blocked(c) {
                if self.belief.get(c) == CellBelief::Free {
                    newly_blocked.push(c);
                }
                self.belief.set(c, CellBelief::Blocked);
            } else if self.belief.get(c) == CellBelief::Unknown {
                self.belief.set(c, CellBelief::Free);
            }
        }
        let here = self.cell();
        self.belief.set(here, CellBelief::Free);
        let recognizer = MockRecognizer {
            max_range: sensor.max_range,
        };
        let seen: BTreeSet<Cell> = visible.into_iter().collect();
        let mut objs: Vec<ObjectObservation> = objects
            .iter()
            .filter(|o| seen.contains(&o.cell))
            .map(|o| {
                let (cx, cy) = scene.grid().cell_center(o.cell);
                ObjectObservation {
                    category: o.category.clone(),
                    cell: o.cell,
                    score: recognizer.score_at(o.salience, o.occlusion, self.pose.distance_to(cx, cy)),
                }
            })
            .collect();
        objs.sort_by(|a, b| a.category.cmp(&b.category).then(a.cell.cmp(&b.cell)));
        let hits: Vec<(Cell, Cell)> = self
            .plan
            .iter()
            .flat_map(|p| p.path.windows(2))
            .filter(|w| newly_blocked.contains(&w[1]))
            .map(|w| (w[0], w[1]))
            .collect();
        for (from, to) in hits {
            self.note_blocked(from, to);
        }
        let obs = Observation {
            objects: objs,
            newly_blocked,
        };
        self.last_observation = obs.clone();
        obs
    }

    fn note_blocked(&mut self, from: Cell, to: Cell) -> bool {
        self.plan = None;
        if self.reported_edges.insert((from, to)) {
            self.pending_blocked.push((from, to));
            true
        } else {
            false
        }
    }

    /// A forward move into `to` failed. Returns whether this edge is new.
    pub fn on_blocked(&mut self, to: Cell) -> bool {
        let from = self.cell();
        self.belief.set(to, CellBelief::Blocked);
        self.note_blocked(from, to)
    }

    /// Drains blocked edges for event extraction.
    pub fn take_report(&mut self, completed: Vec<(SubtaskKind, usize)>) -> AgentReport {
        AgentReport {
            completed,
            blocked_edges: std::mem::take(&mut self.pending_blocked),
        }
    }

    pub fn packet(&self, now: u64, room: RoomLabel) -> SemanticPacket {
        SemanticPacket {
            robot_id: self.robot_id,
            ts: now,
            current_room: room,
            cell: self.cell(),
            observations: self.last_observation.objects.clone(),
            stage: Stage {
                cursor: self.ctx.cursor,
                kind: self.ctx.current().map(|s| s.kind),
            },
            carrying: self.carrying,
            stopped: self.stopped,
            role_epoch: self.ctx.role_epoch,
            handed_over: self.ctx.handed_over,
        }
    }

    /// Where the PickUp subtask should lead: the re-pointed target, else the
    /// best anchor of the target category.
    fn target_goal(&self) -> Option<Cell> {
        self.ctx
            .target_cell
            .or_else(|| self.ctx.anchors.get(&self.ctx.target_category).map(|a| a.cell))
    }

    fn within(&self, goal: Cell, radius: f64) -> bool {
        let here = self.cell();
        if here == goal {
            return true;
        }
        match self.belief.path(here, goal) {
            Some(p) => {
                (p.len() - 1) as f64 * self.belief.resolution() <= radius + 1e-9
                    && p.iter().all(|c| self.belief.get(*c) == CellBelief::Free)
            }
            None => false,
        }
    }

    /// Chooses this tick's action. Updates the plan and progress tracking.
    pub fn decide(&mut self, now: u64, cfg: &AgentConfig) -> Intent {
        if self.stopped {
            return Intent::idle();
        }
        let Some(sub) = self.ctx.current() else {
            self.stopped = true;
            return Intent::idle();
        };
        let here = self.cell();
        let (goal, radius, exploring) = match sub.kind {
            k if k.is_goto() || k == SubtaskKind::Stop => (Some(sub.cell), cfg.r_succ, false),
            SubtaskKind::PickUp => match self.target_goal() {
                Some(c) => (Some(c), cfg.r_int, false),
                None => (self.belief.nearest_frontier(here), 0.0, true),
            },
            _ => (Some(sub.cell), cfg.r_int, false),
        };
        let Some(goal) = goal else {
            self.stopped = true;
            self.plan = None;
            return Intent::idle();
        };
        if !exploring && self.within(goal, radius) {
            self.plan = None;
            self.ctx.mark_progress(now);
            return Intent {
                action: Action::Stop,
                attempt: Some(sub.kind),
            };
        }
        let Some((path, invalidated)) = self.follow_plan(here, goal, exploring) else {
            self.stopped = true;
            self.plan = None;
            return Intent::idle();
        };
        if self.visited.0 != Some(self.ctx.cursor) {
            self.visited = (Some(self.ctx.cursor), BTreeSet::new());
        }
        if self.visited.1.insert(here) {
            self.ctx.mark_progress(now);
        }
        if exploring {
            let known = self.belief.known_count();
            if known > self.known_cells {
                self.ctx.mark_progress(now);
            }
            self.known_cells = known;
        } else {
            let dist = (path.len() - 1) as u32;
            if invalidated {
                // a detour forced by new obstacles is not a lack of progress
                self.ctx.best_dist = Some(self.ctx.best_dist.map_or(dist, |b| b.max(dist)));
            }
            if self.ctx.best_dist.is_none_or(|b| dist < b) {
                self.ctx.best_dist = Some(dist);
                self.ctx.mark_progress(now);
            }
        }
        let action = next_action(&self.pose, &path, self.belief.resolution());
        let version = self.plan.as_ref().filter(|p| p.goal == goal).map_or(now, |p| p.version);
        self.plan = Some(Plan { path, goal, version });
        Intent { action, attempt: None }
    }

    /// Keeps the current plan while it still starts here, leads to the same
    /// goal and crosses no believed-blocked cell; replans otherwise. The flag
    /// is set when a plan to the same goal had to be dropped for an obstacle.
    /// Exploration goals move every tick and are always replanned.
    fn follow_plan(&self, here: Cell, goal: Cell, exploring: bool) -> Option<(Vec<Cell>, bool)> {
        let mut invalidated = false;
        if !exploring {
            if let Some(plan) = self.plan.as_ref().filter(|p| p.goal == goal) {
                if let Some(at) = plan.path.iter().position(|c| *c == here) {
                    let rest = &plan.path[at..];
                    if rest.iter().all(|c| self.belief.passable(*c)) {
                        return Some((rest.to_vec(), false));
                    }
                    invalidated = true;
                }
            }
        }
        let path = self.belief.straight_path(here, goal, self.pose.heading)?;
        Some((path, invalidated))
    }
}

/// Cells the sensor sees from a pose: in range and field of view, with every
/// cell on the ray before the last one free.
pub fn visible_cells(scene: &SceneGraph, pose: &Pose, sensor: &SensorConfig) -> Vec<Cell> {
    let g = scene.grid();
    let here = pose.cell(g.resolution());
    let reach = (sensor.max_range / g.resolution()).ceil() as i32 + 1;
    let mut out = vec![here];
    for y in here.y - reach..=here.y + reach {
        for x in here.x - reach..=here.x + reach {
            let c = Cell::new(x, y);
            if c == here || !g.in_bounds(c) {
                continue;
            }
            let center = g.cell_center(c);
            if pose.distance_to(center.0, center.1) > sensor.max_range || !within_fov(pose, center, sensor.fov) {
                continue;
            }
            let ray = supercover(here, c);
            if ray[..ray.len() - 1].iter().all(|r| g.is_free(*r)) {
                out.push(c);
            }
        }
    }
    out
}

/// Turn toward the next path cell (shorter way, ties to the right) until
/// within tolerance, then move forward. Stop on an empty or trivial path.
pub fn next_action(pose: &Pose, path: &[Cell], resolution: f64) -> Action {
    let Some(next) = path.get(1) else {
        return Action::Stop;
    };
    let target = ((next.x as f64 + 0.5) * resolution, (next.y as f64 + 0.5) * resolution);
    let err = angle_diff(f64::from(pose.heading), bearing((pose.x, pose.y), target));
    if err.abs() <= BEARING_TOLERANCE {
        Action::MoveForward
    } else if err > 0.0 {
        Action::TurnRight
    } else {
        Action::TurnLeft
    }
}

#[cfg(test)]
mod tests;
