//! Synchronous rollout engine: shared world clock, per-robot bus replicas,
//! atomic action commit and the item relay state machine.

mod blockage;
mod trace;
mod transport;

pub use blockage::{plan_blockage, BlockagePlan};
pub use trace::{emit_trace, load_trace, trace_to_string};
pub use transport::{Transport, TransportError, TransportModel};

use crate::agent::{AgentConfig, AgentState, Intent};
use crate::edr::{
    decide, evaluate_swap, extract_events, filter_events, rewrite_policy_context, Event, ItemLocation,
    PolicyContext, ReplanDecision, SwapRobot, TriggerConfig,
};
use crate::rove::EpisodeSpec;
use crate::svb::{BusState, DialogueRecord, SemanticPacket};
use crate::task::{RobotId, Role, RoleCursor, SubtaskKind};
use crate::world::{Action, Cell, Pose, SceneGraph, SceneObject, SensorConfig, WorldError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Lockstep,
    Distributed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Bus sharing plus event-driven replanning.
    #[default]
    Deconav,
    /// Same agents with partner context withheld and every decision kept.
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Blockage {
    pub tick: u64,
    pub corridor_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolloutConfig {
    pub mode: Mode,
    pub policy: Policy,
    pub t_max: u64,
    /// Freshness window, ticks.
    pub tau: u64,
    /// Meters.
    pub r_succ: f64,
    /// Meters.
    pub r_int: f64,
    pub sensor: SensorConfig,
    pub trigger: TriggerConfig,
    pub transport: TransportModel,
    pub blockages: Vec<Blockage>,
    pub seed: u64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Lockstep,
            policy: Policy::Deconav,
            t_max: 500,
            tau: 10,
            r_succ: 1.0,
            r_int: 0.5,
            sensor: SensorConfig::three_view(),
            trigger: TriggerConfig::default(),
            transport: TransportModel::default(),
            blockages: Vec::new(),
            seed: 0,
        }
    }
}

impl RolloutConfig {
    pub fn agent(&self) -> AgentConfig {
        AgentConfig {
            sensor: self.sensor,
            r_succ: self.r_succ,
            r_int: self.r_int,
        }
    }

    pub fn validate(&self) -> Result<(), SpeError> {
        if self.r_succ <= 0.0 || self.r_int <= 0.0 {
            return Err(SpeError::Config("radii must be positive".into()));
        }
        let t = &self.trigger;
        if !(0.0..=1.0).contains(&t.theta_rec) || t.epsilon_hyst < 0.0 {
            return Err(SpeError::Config("trigger thresholds out of range".into()));
        }
        self.transport.validate().map_err(|e| SpeError::Config(e.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum SpeError {
    #[error("episode {episode} does not fit scene {scene}: {reason}")]
    Malformed {
        episode: String,
        scene: String,
        reason: String,
    },
    #[error("invalid rollout config: {0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("trace io: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace parse: {0}")]
    Parse(#[from] serde_json::Error),
}

/// The relayed item. Carry states name the role they belong to, so a role
/// swap relabels responsibility without moving the item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum ItemState {
    AtPickup { cell: Cell },
    Carried { by: RobotId, role: Role },
    AtHandoff { cell: Cell, since: u64 },
    Delivered { cell: Cell },
}

impl ItemState {
    /// Position along the relay, 0 to 4.
    pub fn stage(&self) -> u8 {
        match self {
            ItemState::AtPickup { .. } => 0,
            ItemState::Carried { role: Role::First, .. } => 1,
            ItemState::AtHandoff { .. } => 2,
            ItemState::Carried { role: Role::Second, .. } => 3,
            ItemState::Delivered { .. } => 4,
        }
    }

    pub fn resting_cell(&self) -> Option<Cell> {
        match self {
            ItemState::AtPickup { cell } | ItemState::AtHandoff { cell, .. } | ItemState::Delivered { cell } => {
                Some(*cell)
            }
            ItemState::Carried { .. } => None,
        }
    }
}

/// One robot's interaction attempt for the commit step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attempt {
    pub robot: RobotId,
    pub kind: SubtaskKind,
    /// Subtask cell the robot is working on.
    pub cell: Cell,
    pub epoch: u32,
    pub role: Role,
    /// True geodesic distance to the item's resting cell (or the drop cell).
    pub distance: Option<f64>,
}

/// Resolves interaction attempts against the item state. Higher role epoch
/// goes first, then FH. Returns the robots whose attempt succeeded.
pub fn resolve_interactions(item: &mut ItemState, attempts: &[Attempt], tick: u64, r_int: f64) -> Vec<RobotId> {
    let mut order: Vec<&Attempt> = attempts.iter().filter(|a| a.kind.is_interaction()).collect();
    order.sort_by_key(|a| (std::cmp::Reverse(a.epoch), a.robot));
    let mut done = Vec::new();
    for a in order {
        let near = a.distance.is_some_and(|d| d <= r_int + 1e-9);
        if !near {
            continue;
        }
        let next = match (*item, a.kind, a.role) {
            (ItemState::AtPickup { .. }, SubtaskKind::PickUp, Role::First) => Some(ItemState::Carried {
                by: a.robot,
                role: Role::First,
            }),
            (ItemState::Carried { by, role: Role::First }, SubtaskKind::Deposit, Role::First) if by == a.robot => {
                Some(ItemState::AtHandoff {
                    cell: a.cell,
                    since: tick,
                })
            }
            (ItemState::AtHandoff { since, .. }, SubtaskKind::Receive, Role::Second) if tick > since => {
                Some(ItemState::Carried {
                    by: a.robot,
                    role: Role::Second,
                })
            }
            (ItemState::Carried { by, role: Role::Second }, SubtaskKind::Deliver, Role::Second) if by == a.robot => {
                Some(ItemState::Delivered { cell: a.cell })
            }
            _ => None,
        };
        if let Some(n) = next {
            *item = n;
            done.push(a.robot);
        }
    }
    done
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotTrace {
    pub robot_id: RobotId,
    pub pose: Pose,
    pub action: Action,
    pub attempt: Option<SubtaskKind>,
    pub blocked: bool,
    pub packet: SemanticPacket,
    pub partner_ts: Option<u64>,
    pub partner_stale: bool,
    pub events: Vec<Event>,
    pub decision: ReplanDecision,
    pub adopted: bool,
    pub cursor: RoleCursor,
    pub epoch: u32,
    pub carrying: bool,
    pub stopped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tick: u64,
    pub robots: Vec<RobotTrace>,
    pub item: ItemState,
    pub blocked_corridors: Vec<u32>,
    pub dialogue: Vec<DialogueRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutResult {
    pub episode_id: String,
    pub success_fh: bool,
    pub success_sh: bool,
    pub both_success: bool,
    pub path_len_fh_m: f64,
    pub path_len_sh_m: f64,
    pub ne_fh_m: f64,
    pub ne_sh_m: f64,
    pub subtasks_done_fh: usize,
    pub subtasks_done_sh: usize,
    pub subtasks_total_fh: usize,
    pub subtasks_total_sh: usize,
    pub ticks: u64,
    pub swap_count: u64,
    pub dialogue_count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub result: RolloutResult,
    pub trace: Vec<TraceRecord>,
}

pub fn run_lockstep(scene: &SceneGraph, episode: &EpisodeSpec, cfg: &RolloutConfig) -> Result<Rollout, SpeError> {
    let mut cfg = cfg.clone();
    cfg.mode = Mode::Lockstep;
    run(scene, episode, &cfg)
}

pub fn run_distributed(
    scene: &SceneGraph,
    episode: &EpisodeSpec,
    transport: TransportModel,
    cfg: &RolloutConfig,
) -> Result<Rollout, SpeError> {
    let mut cfg = cfg.clone();
    cfg.mode = Mode::Distributed;
    cfg.transport = transport;
    run(scene, episode, &cfg)
}

/// Runs in the mode named by the config.
pub fn run(scene: &SceneGraph, episode: &EpisodeSpec, cfg: &RolloutConfig) -> Result<Rollout, SpeError> {
    cfg.validate()?;
    check_episode(scene, episode)?;
    let transport = match cfg.mode {
        Mode::Lockstep => TransportModel::default(),
        Mode::Distributed => cfg.transport,
    };
    Engine::new(scene, episode, cfg, transport)?.run()
}

fn check_episode(scene: &SceneGraph, ep: &EpisodeSpec) -> Result<(), SpeError> {
    let bad = |reason: String| SpeError::Malformed {
        episode: ep.episode_id.clone(),
        scene: scene.scene_id().to_string(),
        reason,
    };
    if ep.scene_id != scene.scene_id() {
        return Err(bad(format!("episode names scene {}", ep.scene_id)));
    }
    if scene.object(ep.target_object_id).is_none() {
        return Err(bad(format!("target object {} missing", ep.target_object_id)));
    }
    for (name, pose) in [("fh start", ep.start_pose_fh), ("sh start", ep.start_pose_sh)] {
        if !scene.pose_is_valid(&pose) {
            return Err(bad(format!("{name} pose is not on a free cell")));
        }
    }
    let chains = ep.chains();
    if chains.first.is_empty() || chains.second.is_empty() {
        return Err(bad("empty subtask chain".into()));
    }
    for s in chains.first.iter().chain(&chains.second) {
        if !scene.grid().is_free(s.cell) {
            return Err(bad(format!("{} cell {} is not free", s.kind, s.cell)));
        }
    }
    Ok(())
}

struct Engine<'a> {
    scene: SceneGraph,
    episode: &'a EpisodeSpec,
    cfg: &'a RolloutConfig,
    agent_cfg: AgentConfig,
    agents: [AgentState; 2],
    buses: [BusState; 2],
    history: [Vec<Event>; 2],
    completed: [Vec<(SubtaskKind, usize)>; 2],
    done_counts: [usize; 2],
    path_len: [f64; 2],
    transport: Transport,
    item: ItemState,
    swaps: u64,
    dialogue: u64,
    trace: Vec<TraceRecord>,
}

impl<'a> Engine<'a> {
    fn new(
        scene: &SceneGraph,
        episode: &'a EpisodeSpec,
        cfg: &'a RolloutConfig,
        transport: TransportModel,
    ) -> Result<Self, SpeError> {
        let target = scene.object(episode.target_object_id).expect("checked");
        let chains = episode.chains();
        let mk = |r: RobotId, pose: Pose| {
            AgentState::new(r, pose, scene, PolicyContext::new(r, chains.clone(), &episode.target_category))
        };
        Ok(Self {
            scene: scene.clone(),
            episode,
            cfg,
            agent_cfg: cfg.agent(),
            agents: [mk(RobotId::FH, episode.start_pose_fh), mk(RobotId::SH, episode.start_pose_sh)],
            buses: [BusState::new(RobotId::FH), BusState::new(RobotId::SH)],
            history: [Vec::new(), Vec::new()],
            completed: [Vec::new(), Vec::new()],
            done_counts: [0, 0],
            path_len: [0.0, 0.0],
            transport: Transport::new(transport).map_err(|e| SpeError::Config(e.to_string()))?,
            item: ItemState::AtPickup { cell: target.cell },
            swaps: 0,
            dialogue: 0,
            trace: Vec::new(),
        })
    }

    fn live_objects(&self) -> Vec<SceneObject> {
        let id = self.episode.target_object_id;
        let rest = self.item.resting_cell();
        self.scene
            .objects()
            .iter()
            .filter_map(|o| {
                if o.object_id != id {
                    return Some(o.clone());
                }
                rest.map(|cell| SceneObject { cell, ..o.clone() })
            })
            .collect()
    }

    fn deliver(&mut self, now: u64) {
        for r in RobotId::BOTH {
            for p in self.transport.deliver(r, now) {
                // late packets are counted by the replica and otherwise ignored
                let _ = self.buses[r.index()].publish(p);
            }
        }
    }

    /// What a robot can tell about the item from its own state and the
    /// partner's latest packet.
    fn believed_item(&self, r: RobotId, partner: Option<&SemanticPacket>) -> ItemLocation {
        let me = &self.agents[r.index()];
        let Some(p) = partner else {
            return ItemLocation::Unknown;
        };
        if me.carrying || p.carrying {
            return ItemLocation::Carried;
        }
        let cursors = [me.ctx.cursor, p.stage.cursor];
        let first = cursors.iter().find(|c| c.role == Role::First);
        let second = cursors.iter().find(|c| c.role == Role::Second);
        let chains = &me.ctx.chains;
        let pos = |role: Role, kind: SubtaskKind| chains.get(role).iter().position(|s| s.kind == kind);
        match (first, second) {
            (Some(f), Some(s)) => {
                let pick = pos(Role::First, SubtaskKind::PickUp).unwrap_or(0);
                let dep = pos(Role::First, SubtaskKind::Deposit).unwrap_or(usize::MAX);
                let recv = pos(Role::Second, SubtaskKind::Receive).unwrap_or(0);
                if f.index <= pick {
                    chains.get(Role::First).get(pick).map_or(ItemLocation::Unknown, |s| ItemLocation::Static(s.cell))
                } else if f.index > dep && s.index <= recv {
                    chains.get(Role::First).get(dep).map_or(ItemLocation::Unknown, |s| ItemLocation::Static(s.cell))
                } else {
                    ItemLocation::Unknown
                }
            }
            _ => ItemLocation::Unknown,
        }
    }

    fn run(mut self) -> Result<Rollout, SpeError> {
        let mut schedule = self.cfg.blockages.clone();
        schedule.sort();
        let mut tick = 0u64;
        while tick < self.cfg.t_max && !self.agents.iter().all(|a| a.stopped) {
            self.step(tick, &schedule)?;
            tick += 1;
        }
        Ok(self.finish(tick))
    }

    fn step(&mut self, now: u64, schedule: &[Blockage]) -> Result<(), SpeError> {
        for b in schedule.iter().filter(|b| b.tick == now) {
            self.scene.set_corridor_blocked(b.corridor_id, true)?;
        }
        let objects = self.live_objects();
        let res = self.scene.resolution();
        // observe and publish
        let mut packets = Vec::with_capacity(2);
        for a in &mut self.agents {
            a.observe(&self.scene, &objects, &self.cfg.sensor);
            let room = self.scene.room_label_at(a.cell());
            packets.push(a.packet(now, room));
        }
        for p in &packets {
            let _ = self.buses[p.robot_id.index()].publish(p.clone());
            self.transport.send(p.clone());
        }
        self.deliver(now);

        // compose, adopt, replan
        let deconav = self.cfg.policy == Policy::Deconav;
        let mut adopted = [false, false];
        let mut decisions = [ReplanDecision::KeepAssignment, ReplanDecision::KeepAssignment];
        let mut admitted_all: [Vec<Event>; 2] = [Vec::new(), Vec::new()];
        let mut partner_seen: [(Option<u64>, bool); 2] = [(None, true), (None, true)];
        let mut new_dialogue = Vec::new();
        for r in RobotId::BOTH {
            let i = r.index();
            if deconav {
                adopted[i] |= self.adopt_from_partner(r, now);
            }
            let bus = &self.buses[i];
            let ctx = if deconav {
                bus.compose_context(r, now, self.cfg.tau)
            } else {
                bus.compose_local(r)
            };
            partner_seen[i] = (ctx.partner_state.as_ref().map(|p| p.ts), ctx.partner_stale);
            let completed = std::mem::take(&mut self.completed[i]);
            let report = self.agents[i].take_report(completed);
            let scene = &self.scene;
            let events = extract_events(&self.agents[i].ctx, &ctx, &report, now, &self.cfg.trigger, |c| {
                scene.room_label_at(c)
            });
            let admitted = filter_events(&events, &self.history[i], &self.cfg.trigger);
            self.history[i].extend(admitted.iter().cloned());
            self.agents[i].ctx.anchors = ctx.anchors.clone();
            if deconav {
                let partner = ctx.partner_state.as_ref();
                let item = self.believed_item(r, partner);
                let agent = &self.agents[i];
                let decision = decide(&admitted, &ctx.anchors, || match partner {
                    Some(p) => evaluate_swap(
                        [&agent.belief, &agent.belief],
                        &[
                            SwapRobot {
                                cell: agent.cell(),
                                cursor: agent.ctx.cursor,
                            },
                            SwapRobot {
                                cell: p.cell,
                                cursor: p.stage.cursor,
                            },
                        ],
                        &agent.ctx.chains,
                        item,
                        &self.cfg.trigger,
                    ),
                    None => ReplanDecision::KeepAssignment,
                });
                let partner_cursor = partner.map(|p| p.stage.cursor);
                let out = rewrite_policy_context(
                    &self.agents[i].ctx,
                    &admitted,
                    decision.clone(),
                    partner_cursor,
                    &mut self.buses[i],
                    now,
                );
                if out.rejected.is_none() {
                    if let Some((d, _)) = &decision {
                        if *d == ReplanDecision::SwapSubtasks {
                            self.swaps += 1;
                        }
                        decisions[i] = d.clone();
                    }
                    self.agents[i].ctx = out.ctx;
                }
                self.dialogue += out.records.len() as u64;
                new_dialogue.extend(out.records);
            }
            admitted_all[i] = admitted;
        }
        if deconav && decisions.contains(&ReplanDecision::SwapSubtasks) {
            // announce the swap right away; the partner adopts on delivery
            for a in &self.agents {
                if decisions[a.robot_id.index()] == ReplanDecision::SwapSubtasks {
                    let room = self.scene.room_label_at(a.cell());
                    self.transport.send(a.packet(now, room));
                }
            }
            self.deliver(now);
            for r in RobotId::BOTH {
                adopted[r.index()] |= self.adopt_from_partner(r, now);
            }
        }

        // act
        let intents: Vec<Intent> = self
            .agents
            .iter_mut()
            .map(|a| a.decide(now, &self.agent_cfg))
            .collect();
        let blocked = self.commit(now, &intents, res);

        let robots = RobotId::BOTH
            .iter()
            .map(|r| {
                let i = r.index();
                let a = &self.agents[i];
                RobotTrace {
                    robot_id: *r,
                    pose: a.pose,
                    action: intents[i].action,
                    attempt: intents[i].attempt,
                    blocked: blocked[i],
                    packet: packets[i].clone(),
                    partner_ts: partner_seen[i].0,
                    partner_stale: partner_seen[i].1,
                    events: std::mem::take(&mut admitted_all[i]),
                    decision: decisions[i].clone(),
                    adopted: adopted[i],
                    cursor: a.ctx.cursor,
                    epoch: a.ctx.role_epoch,
                    carrying: a.carrying,
                    stopped: a.stopped,
                }
            })
            .collect();
        self.trace.push(TraceRecord {
            tick: now,
            robots,
            item: self.item,
            blocked_corridors: self.scene.blocked_corridors(),
            dialogue: new_dialogue,
        });
        Ok(())
    }

    /// Takes over the cursor the partner handed over in a newer swap.
    fn adopt_from_partner(&mut self, r: RobotId, now: u64) -> bool {
        let i = r.index();
        let Some(p) = self.buses[i].packet(r.partner()) else {
            return false;
        };
        let (epoch, handed) = (p.role_epoch, p.handed_over);
        let ctx = &mut self.agents[i].ctx;
        match handed {
            Some(cursor) if epoch > ctx.role_epoch => {
                ctx.adopt(cursor, epoch, now);
                self.buses[i].roles.insert(r, cursor);
                true
            }
            _ => false,
        }
    }

    /// Applies both intents against the same world state.
    fn commit(&mut self, now: u64, intents: &[Intent], res: f64) -> [bool; 2] {
        let before: Vec<Pose> = self.agents.iter().map(|a| a.pose).collect();
        let mut blocked = [false, false];
        let mut attempts = Vec::new();
        for (i, intent) in intents.iter().enumerate() {
            let (pose, hit) = self.scene.step_kinematics(&before[i], intent.action);
            blocked[i] = hit;
            if intent.action == Action::MoveForward && !hit {
                self.path_len[i] += pose.distance_to(before[i].x, before[i].y);
            }
            if let Some(kind) = intent.attempt {
                let a = &self.agents[i];
                let Some(sub) = a.ctx.current() else { continue };
                if sub.kind != kind {
                    continue;
                }
                let here = before[i].cell(res);
                let anchor = if kind.is_interaction() {
                    match kind {
                        SubtaskKind::PickUp | SubtaskKind::Receive => self.item.resting_cell(),
                        _ => Some(sub.cell),
                    }
                } else {
                    Some(sub.cell)
                };
                attempts.push(Attempt {
                    robot: a.robot_id,
                    kind,
                    cell: sub.cell,
                    epoch: a.ctx.role_epoch,
                    role: a.ctx.cursor.role,
                    distance: anchor.and_then(|c| self.scene.geodesic_distance(here, c)),
                });
            }
        }
        for (i, intent) in intents.iter().enumerate() {
            if blocked[i] {
                let (dx, dy) = crate::world::heading_vector(before[i].heading);
                let ahead = Pose::new(
                    before[i].x + crate::world::STEP_METERS * dx,
                    before[i].y + crate::world::STEP_METERS * dy,
                    before[i].heading,
                );
                self.agents[i].on_blocked(ahead.cell(res));
            } else {
                let (pose, _) = self.scene.step_kinematics(&before[i], intent.action);
                self.agents[i].pose = pose;
            }
        }
        let interacted = resolve_interactions(&mut self.item, &attempts, now, self.cfg.r_int);
        for at in &attempts {
            let i = at.robot.index();
            let ok = if at.kind.is_interaction() {
                interacted.contains(&at.robot)
            } else {
                at.distance.is_some_and(|d| d <= self.cfg.r_succ + 1e-9)
            };
            if !ok {
                continue;
            }
            let agent = &mut self.agents[i];
            let index = agent.ctx.cursor.index;
            agent.ctx.advance(now);
            self.done_counts[i] += 1;
            self.completed[i].push((at.kind, index));
            if at.kind == SubtaskKind::Stop {
                agent.stopped = true;
            }
        }
        for a in &mut self.agents {
            a.carrying = matches!(self.item, ItemState::Carried { by, .. } if by == a.robot_id);
            if a.ctx.is_done() {
                a.stopped = true;
            }
        }
        blocked
    }

    fn finish(self, ticks: u64) -> Rollout {
        let per_robot = |i: usize| {
            let a = &self.agents[i];
            let chain = a.ctx.chains.get(a.ctx.cursor.role);
            let goal = chain.last().map(|s| s.cell).expect("non-empty chain");
            let here = a.cell();
            let ne = self.scene.geodesic_distance(here, goal).unwrap_or_else(|| {
                let (gx, gy) = self.scene.grid().cell_center(goal);
                a.pose.distance_to(gx, gy)
            });
            let success = a.ctx.is_done() && ne <= self.cfg.r_succ + 1e-9;
            let remaining = a.ctx.cursor.remaining(&a.ctx.chains).len();
            (success, ne, self.done_counts[i], self.done_counts[i] + remaining)
        };
        let (s_fh, ne_fh, d_fh, t_fh) = per_robot(0);
        let (s_sh, ne_sh, d_sh, t_sh) = per_robot(1);
        Rollout {
            result: RolloutResult {
                episode_id: self.episode.episode_id.clone(),
                success_fh: s_fh,
                success_sh: s_sh,
                both_success: s_fh && s_sh,
                path_len_fh_m: self.path_len[0],
                path_len_sh_m: self.path_len[1],
                ne_fh_m: ne_fh,
                ne_sh_m: ne_sh,
                subtasks_done_fh: d_fh,
                subtasks_done_sh: d_sh,
                subtasks_total_fh: t_fh,
                subtasks_total_sh: t_sh,
                ticks,
                swap_count: self.swaps,
                dialogue_count: self.dialogue,
            },
            trace: self.trace,
        }
    }
}

#[cfg(test)]
mod tests;
