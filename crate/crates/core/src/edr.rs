//! Event-driven replanning: event extraction and filtering, the subtask
//! swap test with its brute-force oracle, and policy-context rewrite.

use crate::agent::Belief;
use crate::svb::{AnchorMemory, BusState, ComposedContext, DialogueRecord};
use crate::task::{Chains, RobotId, RoleCursor, SubtaskKind};
use crate::world::{Cell, RoomLabel, SceneGraph};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    StageComplete,
    TargetDiscovered,
    Conflict,
    Stagnation,
    PathBlocked,
}

impl EventKind {
    /// Lower is more urgent.
    pub fn priority(self) -> u8 {
        match self {
            EventKind::PathBlocked => 0,
            EventKind::Conflict => 1,
            EventKind::TargetDiscovered => 2,
            EventKind::StageComplete => 3,
            EventKind::Stagnation => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventPayload {
    StageComplete {
        kind: SubtaskKind,
        index: usize,
    },
    TargetDiscovered {
        category: String,
        cell: Cell,
        score: f64,
        source: RobotId,
    },
    Conflict {
        category: String,
        local_room: RoomLabel,
        partner_room: RoomLabel,
        local_cell: Cell,
        partner_cell: Cell,
        local_score: f64,
        partner_score: f64,
    },
    Stagnation {
        since: u64,
    },
    PathBlocked {
        from: Cell,
        to: Cell,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub tick: u64,
    pub robot_id: RobotId,
    pub payload: EventPayload,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TriggerConfig {
    pub theta_rec: f64,
    pub n_stag: u64,
    pub cooldown: u64,
    /// Meters.
    pub epsilon_hyst: f64,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self {
            theta_rec: 0.5,
            n_stag: 20,
            cooldown: 10,
            epsilon_hyst: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReplanDecision {
    KeepAssignment,
    SwapSubtasks,
    ReorderSubgoals { priority: Vec<usize> },
    UpdateAnchorTarget { category: String, cell: Cell },
}

/// What a robot acts on between ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyContext {
    pub robot_id: RobotId,
    pub cursor: RoleCursor,
    pub chains: Chains,
    /// Chain indices of the remaining subtasks, in pursuit order.
    pub priority: Vec<usize>,
    pub anchors: AnchorMemory,
    pub last_progress_tick: u64,
    /// Smallest believed distance (steps) to the current subgoal so far.
    pub best_dist: Option<u32>,
    pub role_epoch: u32,
    pub handed_over: Option<RoleCursor>,
    pub target_category: String,
    pub target_cell: Option<Cell>,
    pub target_discovered: bool,
}

impl PolicyContext {
    pub fn new(robot_id: RobotId, chains: Chains, target_category: &str) -> Self {
        let cursor = RoleCursor::start(robot_id);
        let mut ctx = Self {
            robot_id,
            cursor,
            chains,
            priority: Vec::new(),
            anchors: AnchorMemory::default(),
            last_progress_tick: 0,
            best_dist: None,
            role_epoch: 0,
            handed_over: None,
            target_category: target_category.to_string(),
            target_cell: None,
            target_discovered: false,
        };
        ctx.reset_priority();
        ctx
    }

    pub fn reset_priority(&mut self) {
        let len = self.chains.get(self.cursor.role).len();
        self.priority = (self.cursor.index.min(len)..len).collect();
    }

    pub fn current(&self) -> Option<crate::task::Subtask> {
        self.cursor.current(&self.chains).copied()
    }

    pub fn is_done(&self) -> bool {
        self.cursor.is_done(&self.chains)
    }

    /// Moves to the next subtask and restarts progress tracking.
    pub fn advance(&mut self, now: u64) {
        self.cursor.index += 1;
        self.reset_priority();
        self.mark_progress(now);
        self.best_dist = None;
    }

    pub fn mark_progress(&mut self, now: u64) {
        self.last_progress_tick = now;
    }

    /// Takes over a cursor handed over by the partner after a swap.
    pub fn adopt(&mut self, cursor: RoleCursor, epoch: u32, now: u64) {
        self.handed_over = Some(self.cursor);
        self.cursor = cursor;
        self.role_epoch = epoch;
        self.reset_priority();
        self.mark_progress(now);
        self.best_dist = None;
    }
}

/// Per-tick facts the agent reports to event extraction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgentReport {
    /// Subtasks finished at the last commit: (kind, chain index).
    pub completed: Vec<(SubtaskKind, usize)>,
    /// Newly blocked edges (from, to).
    pub blocked_edges: Vec<(Cell, Cell)>,
}

pub fn extract_events(
    prev: &PolicyContext,
    ctx: &ComposedContext,
    report: &AgentReport,
    now: u64,
    cfg: &TriggerConfig,
    room_of: impl Fn(Cell) -> RoomLabel,
) -> Vec<Event> {
    let robot_id = prev.robot_id;
    let ev = |kind, payload| Event {
        kind,
        tick: now,
        robot_id,
        payload,
    };
    let mut out = Vec::new();
    for (kind, index) in &report.completed {
        out.push(ev(
            EventKind::StageComplete,
            EventPayload::StageComplete {
                kind: *kind,
                index: *index,
            },
        ));
    }
    let category = prev.target_category.as_str();
    if !prev.target_discovered {
        if let Some(a) = ctx.anchors.get(category) {
            if a.score >= cfg.theta_rec {
                out.push(ev(
                    EventKind::TargetDiscovered,
                    EventPayload::TargetDiscovered {
                        category: category.to_string(),
                        cell: a.cell,
                        score: a.score,
                        source: a.source,
                    },
                ));
            }
        }
    }
    if let (Some(local), Some(partner)) = (prev.anchors.get(category), ctx.partner_state.as_ref()) {
        let claim = partner
            .observations
            .iter()
            .filter(|o| o.category == category)
            .max_by(|a, b| a.score.total_cmp(&b.score).then(b.cell.cmp(&a.cell)));
        if let Some(claim) = claim {
            let (local_room, partner_room) = (room_of(local.cell), room_of(claim.cell));
            if local_room != partner_room {
                out.push(ev(
                    EventKind::Conflict,
                    EventPayload::Conflict {
                        category: category.to_string(),
                        local_room,
                        partner_room,
                        local_cell: local.cell,
                        partner_cell: claim.cell,
                        local_score: local.score,
                        partner_score: claim.score,
                    },
                ));
            }
        }
    }
    if now.saturating_sub(prev.last_progress_tick) >= cfg.n_stag {
        out.push(ev(
            EventKind::Stagnation,
            EventPayload::Stagnation {
                since: prev.last_progress_tick,
            },
        ));
    }
    for (from, to) in &report.blocked_edges {
        out.push(ev(EventKind::PathBlocked, EventPayload::PathBlocked { from: *from, to: *to }));
    }
    out
}

/// Drops repeats of recently admitted events and sorts by urgency, then tick.
pub fn filter_events(events: &[Event], history: &[Event], cfg: &TriggerConfig) -> Vec<Event> {
    let mut admitted: Vec<Event> = Vec::new();
    for e in events {
        let recent = |h: &Event| {
            h.kind == e.kind && h.payload == e.payload && e.tick.abs_diff(h.tick) < cfg.cooldown.max(1)
        };
        if history.iter().any(recent) || admitted.iter().any(recent) {
            continue;
        }
        admitted.push(e.clone());
    }
    admitted.sort_by_key(|e| (e.kind.priority(), e.tick));
    admitted
}

/// Where the item is, as far as the swap test is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ItemLocation {
    Static(Cell),
    Carried,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapRobot {
    pub cell: Cell,
    pub cursor: RoleCursor,
}

/// Both robots' remaining costs, in steps, under keep and swap. `None` is
/// unreachable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapCosts {
    pub keep: [Option<u64>; 2],
    pub swap: [Option<u64>; 2],
}

/// Cells a robot must reach, in order, to finish a cursor's chain.
fn route_cells(chains: &Chains, cursor: RoleCursor) -> Vec<Cell> {
    let mut cells: Vec<Cell> = Vec::new();
    for s in cursor.remaining(chains) {
        if cells.last() != Some(&s.cell) {
            cells.push(s.cell);
        }
    }
    cells
}

fn swap_allowed(robots: &[SwapRobot; 2], chains: &Chains, item: ItemLocation) -> bool {
    matches!(item, ItemLocation::Static(_))
        && robots[0].cursor.role != robots[1].cursor.role
        && robots.iter().all(|r| !r.cursor.is_done(chains))
}

fn makespan_rule(c: &SwapCosts, resolution: f64, epsilon: f64) -> bool {
    let max = |v: [Option<u64>; 2]| v[0].zip(v[1]).map(|(a, b)| a.max(b));
    let sum = |v: [Option<u64>; 2]| v[0].zip(v[1]).map(|(a, b)| a + b);
    let (Some(ms), Some(ss)) = (max(c.swap), sum(c.swap)) else {
        return false;
    };
    let (Some(mk), Some(sk)) = (max(c.keep), sum(c.keep)) else {
        return true;
    };
    let m = |steps: u64| steps as f64 * resolution;
    m(ms) + epsilon < m(mk) || (ms == mk && m(ss) + epsilon < m(sk))
}

fn decision(swap: bool) -> ReplanDecision {
    if swap {
        ReplanDecision::SwapSubtasks
    } else {
        ReplanDecision::KeepAssignment
    }
}

/// Remaining costs measured on belief maps; unknown cells count as free.
pub fn swap_costs(beliefs: [&Belief; 2], robots: &[SwapRobot; 2], chains: &Chains) -> SwapCosts {
    let cost = |belief: &Belief, from: Cell, cursor: RoleCursor| -> Option<u64> {
        let mut total = 0u64;
        let mut at = from;
        for c in route_cells(chains, cursor) {
            total += u64::from(belief.distance(at, c)?);
            at = c;
        }
        Some(total)
    };
    let [a, b] = robots;
    SwapCosts {
        keep: [cost(beliefs[0], a.cell, a.cursor), cost(beliefs[1], b.cell, b.cursor)],
        swap: [cost(beliefs[0], a.cell, b.cursor), cost(beliefs[1], b.cell, a.cursor)],
    }
}

/// Swap iff the makespan drops by more than the hysteresis, with the summed
/// cost breaking exact makespan ties.
pub fn evaluate_swap(
    beliefs: [&Belief; 2],
    robots: &[SwapRobot; 2],
    chains: &Chains,
    item: ItemLocation,
    cfg: &TriggerConfig,
) -> ReplanDecision {
    if !swap_allowed(robots, chains, item) {
        return ReplanDecision::KeepAssignment;
    }
    let costs = swap_costs(beliefs, robots, chains);
    decision(makespan_rule(&costs, beliefs[0].resolution(), cfg.epsilon_hyst))
}

/// Reference decision on the true scene: enumerates both assignments leg by
/// leg with the scene's own geodesics.
pub fn swap_oracle(
    scene: &SceneGraph,
    robots: &[SwapRobot; 2],
    chains: &Chains,
    item: ItemLocation,
    cfg: &TriggerConfig,
) -> ReplanDecision {
    if !swap_allowed(robots, chains, item) {
        return ReplanDecision::KeepAssignment;
    }
    let leg_sum = |from: Cell, cursor: RoleCursor| -> Option<u64> {
        let stops = route_cells(chains, cursor);
        std::iter::once(from)
            .chain(stops.iter().copied())
            .zip(stops.iter().copied())
            .map(|(a, b)| scene.geodesic_steps(a, b).map(u64::from))
            .sum()
    };
    let assignments = [
        [robots[0].cursor, robots[1].cursor],
        [robots[1].cursor, robots[0].cursor],
    ];
    let costs: Vec<[Option<u64>; 2]> = assignments
        .iter()
        .map(|asg| [leg_sum(robots[0].cell, asg[0]), leg_sum(robots[1].cell, asg[1])])
        .collect();
    let costs = SwapCosts {
        keep: costs[0],
        swap: costs[1],
    };
    decision(makespan_rule(&costs, scene.resolution(), cfg.epsilon_hyst))
}

/// Picks the decision the admitted events call for. `swap_test` runs at most
/// once, for the first PathBlocked or Stagnation event.
pub fn decide(
    admitted: &[Event],
    anchors: &AnchorMemory,
    mut swap_test: impl FnMut() -> ReplanDecision,
) -> Option<(ReplanDecision, EventKind)> {
    let mut swap_tested = false;
    for e in admitted {
        match &e.payload {
            EventPayload::PathBlocked { .. } | EventPayload::Stagnation { .. } if !swap_tested => {
                swap_tested = true;
                let d = swap_test();
                if d != ReplanDecision::KeepAssignment {
                    return Some((d, e.kind));
                }
            }
            EventPayload::Conflict {
                category,
                local_cell,
                partner_cell,
                local_score,
                partner_score,
                ..
            } => {
                let cell = if partner_score > local_score {
                    *partner_cell
                } else {
                    anchors.get(category).map(|a| a.cell).unwrap_or(*local_cell)
                };
                return Some((
                    ReplanDecision::UpdateAnchorTarget {
                        category: category.clone(),
                        cell,
                    },
                    e.kind,
                ));
            }
            _ => {}
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteOutcome {
    pub ctx: PolicyContext,
    pub records: Vec<DialogueRecord>,
    /// Set when the decision did not fit the current roles.
    pub rejected: Option<String>,
}

/// Applies admitted events and a decision to a policy context, appending one
/// dialogue record per change to the bus.
pub fn rewrite_policy_context(
    ctx: &PolicyContext,
    admitted: &[Event],
    decision: Option<(ReplanDecision, EventKind)>,
    partner_cursor: Option<RoleCursor>,
    bus: &mut BusState,
    now: u64,
) -> RewriteOutcome {
    let mut next = ctx.clone();
    let mut records = Vec::new();
    let record = |trigger, summary: String, decision: ReplanDecision, records: &mut Vec<DialogueRecord>| {
        records.push(DialogueRecord {
            tick: now,
            trigger,
            initiator: ctx.robot_id,
            summary,
            decision,
        })
    };
    for e in admitted {
        if let EventPayload::TargetDiscovered { category, cell, score, source } = &e.payload {
            next.target_discovered = true;
            if next.target_cell != Some(*cell) {
                next.target_cell = Some(*cell);
                record(
                    e.kind,
                    format!("{} reports {category} at {cell} ({score:.2}) from {source}", ctx.robot_id),
                    ReplanDecision::UpdateAnchorTarget {
                        category: category.clone(),
                        cell: *cell,
                    },
                    &mut records,
                );
            }
        }
    }
    let mut rejected = None;
    if let Some((d, trigger)) = decision.clone() {
        match &d {
            ReplanDecision::KeepAssignment => {}
            ReplanDecision::UpdateAnchorTarget { category, cell } => {
                if *category == next.target_category && next.target_cell != Some(*cell) {
                    next.target_cell = Some(*cell);
                    record(trigger, format!("{} re-targets {category} to {cell}", ctx.robot_id), d.clone(), &mut records);
                }
            }
            ReplanDecision::ReorderSubgoals { priority } => {
                let mut sorted = priority.clone();
                sorted.sort_unstable();
                if sorted == next.priority {
                    if *priority != next.priority {
                        next.priority = priority.clone();
                        record(trigger, format!("{} reorders subgoals", ctx.robot_id), d.clone(), &mut records);
                    }
                } else {
                    rejected = Some(format!("priority {priority:?} is not a permutation of {:?}", next.priority));
                }
            }
            ReplanDecision::SwapSubtasks => match partner_cursor {
                None => rejected = Some("partner cursor unknown".into()),
                Some(p) if p.role == next.cursor.role => rejected = Some("both robots hold the same role".into()),
                Some(p) if p.is_done(&next.chains) || next.is_done() => {
                    rejected = Some("swap of completed chain".into())
                }
                Some(p) => {
                    let old = next.cursor;
                    next.adopt(p, next.role_epoch + 1, now);
                    bus.roles.insert(ctx.robot_id, p);
                    bus.roles.insert(ctx.robot_id.partner(), old);
                    record(
                        trigger,
                        format!(
                            "{} swaps {:?}#{} for {:?}#{}",
                            ctx.robot_id, old.role, old.index, p.role, p.index
                        ),
                        d.clone(),
                        &mut records,
                    );
                }
            },
        }
    }
    if let Some(reason) = &rejected {
        next = ctx.clone();
        records.clear();
        if let Some((d, trigger)) = decision {
            records.push(DialogueRecord {
                tick: now,
                trigger,
                initiator: ctx.robot_id,
                summary: format!("rejected: {reason}"),
                decision: d,
            });
        }
    }
    for r in &records {
        // ticks come from the engine clock and never decrease
        bus.record_dialogue(r.clone()).expect("dialogue ticks are monotone");
    }
    RewriteOutcome {
        ctx: next,
        records,
        rejected,
    }
}
