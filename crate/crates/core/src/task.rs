//! Relay task vocabulary shared by the generator, the agents and the engine.

use crate::world::Cell;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RobotId {
    FH,
    SH,
}

impl RobotId {
    pub const BOTH: [RobotId; 2] = [RobotId::FH, RobotId::SH];

    pub fn partner(self) -> RobotId {
        match self {
            RobotId::FH => RobotId::SH,
            RobotId::SH => RobotId::FH,
        }
    }

    pub fn index(self) -> usize {
        match self {
            RobotId::FH => 0,
            RobotId::SH => 1,
        }
    }
}

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RobotId::FH => "FH",
            RobotId::SH => "SH",
        })
    }
}

/// Which half of the relay a chain belongs to. Robots start on the role of
/// the same name; a swap exchanges roles between robots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    First,
    Second,
}

impl Role {
    pub fn initial(robot: RobotId) -> Role {
        match robot {
            RobotId::FH => Role::First,
            RobotId::SH => Role::Second,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubtaskKind {
    GotoPickup,
    PickUp,
    GotoHandoff,
    Deposit,
    Receive,
    GotoDelivery,
    Deliver,
    Stop,
}

impl SubtaskKind {
    pub fn is_goto(self) -> bool {
        matches!(
            self,
            SubtaskKind::GotoPickup | SubtaskKind::GotoHandoff | SubtaskKind::GotoDelivery
        )
    }

    /// Subtasks resolved by the engine's item state machine.
    pub fn is_interaction(self) -> bool {
        matches!(
            self,
            SubtaskKind::PickUp | SubtaskKind::Deposit | SubtaskKind::Receive | SubtaskKind::Deliver
        )
    }
}

impl fmt::Display for SubtaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subtask {
    pub kind: SubtaskKind,
    pub cell: Cell,
}

impl Subtask {
    pub fn new(kind: SubtaskKind, cell: Cell) -> Self {
        Self { kind, cell }
    }
}

/// Both relay chains of an episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chains {
    pub first: Vec<Subtask>,
    pub second: Vec<Subtask>,
}

impl Chains {
    /// Builds the canonical chains from the three stop cells.
    ///
    /// `pickup_wp`, `handoff_wp` and `delivery_wp` are the verified viewing
    /// waypoints; `target` is the item's resting cell.
    pub fn relay(pickup_wp: Cell, target: Cell, handoff_wp: Cell, delivery_wp: Cell) -> Self {
        use SubtaskKind::*;
        Self {
            first: vec![
                Subtask::new(GotoPickup, pickup_wp),
                Subtask::new(PickUp, target),
                Subtask::new(GotoHandoff, handoff_wp),
                Subtask::new(Deposit, handoff_wp),
                Subtask::new(Stop, handoff_wp),
            ],
            second: vec![
                Subtask::new(GotoHandoff, handoff_wp),
                Subtask::new(Receive, handoff_wp),
                Subtask::new(GotoDelivery, delivery_wp),
                Subtask::new(Deliver, delivery_wp),
                Subtask::new(Stop, delivery_wp),
            ],
        }
    }

    pub fn get(&self, role: Role) -> &[Subtask] {
        match role {
            Role::First => &self.first,
            Role::Second => &self.second,
        }
    }

    pub fn total(&self) -> usize {
        self.first.len() + self.second.len()
    }
}

/// Position of a robot inside one of the two chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoleCursor {
    pub role: Role,
    pub index: usize,
}

impl RoleCursor {
    pub fn start(robot: RobotId) -> Self {
        Self {
            role: Role::initial(robot),
            index: 0,
        }
    }

    pub fn current<'a>(&self, chains: &'a Chains) -> Option<&'a Subtask> {
        chains.get(self.role).get(self.index)
    }

    pub fn remaining<'a>(&self, chains: &'a Chains) -> &'a [Subtask] {
        let chain = chains.get(self.role);
        &chain[self.index.min(chain.len())..]
    }

    pub fn is_done(&self, chains: &Chains) -> bool {
        self.index >= chains.get(self.role).len()
    }
}
