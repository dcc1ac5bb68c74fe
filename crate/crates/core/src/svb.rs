//! Semantic bus: per-robot packets, anchor memory, role table, dialogue log
//! and freshness-bounded context composition.
//!
//! Every robot owns one replica. Its own packets are applied directly and the
//! partner's packets when the transport delivers them.

use crate::edr::{EventKind, ReplanDecision};
use crate::task::{RobotId, RoleCursor, SubtaskKind};
use crate::world::{Cell, RoomLabel};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectObservation {
    pub category: String,
    pub cell: Cell,
    pub score: f64,
}

/// Task stage advertised in a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub cursor: RoleCursor,
    /// `None` once the chain is finished.
    pub kind: Option<SubtaskKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticPacket {
    pub robot_id: RobotId,
    pub ts: u64,
    pub current_room: RoomLabel,
    /// Cell the robot occupies when publishing.
    pub cell: Cell,
    pub observations: Vec<ObjectObservation>,
    pub stage: Stage,
    pub carrying: bool,
    pub stopped: bool,
    /// Number of role swaps the sender has taken part in.
    pub role_epoch: u32,
    /// Cursor the sender gave up in its latest swap; the receiver adopts it
    /// when the epoch is newer than its own.
    pub handed_over: Option<RoleCursor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorEntry {
    pub cell: Cell,
    pub score: f64,
    pub ts: u64,
    pub source: RobotId,
}

/// Best evidence per object category.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnchorMemory {
    pub entries: BTreeMap<String, AnchorEntry>,
}

impl AnchorMemory {
    pub fn get(&self, category: &str) -> Option<&AnchorEntry> {
        self.entries.get(category)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total order used by the merge: score, then recency, then partner over
    /// self (from the owner's point of view), then cell.
    fn rank(owner: RobotId, a: &AnchorEntry, b: &AnchorEntry) -> Ordering {
        a.score
            .total_cmp(&b.score)
            .then(a.ts.cmp(&b.ts))
            .then((a.source != owner).cmp(&(b.source != owner)))
            .then(a.cell.cmp(&b.cell))
    }

    /// Keeps the higher-ranked of the stored and the candidate entry.
    /// Returns whether the entry changed.
    pub fn merge(&mut self, owner: RobotId, category: &str, candidate: AnchorEntry) -> bool {
        match self.entries.get_mut(category) {
            Some(old) if Self::rank(owner, &candidate, old) != Ordering::Greater => false,
            Some(old) => {
                *old = candidate;
                true
            }
            None => {
                self.entries.insert(category.to_string(), candidate);
                true
            }
        }
    }

    pub fn merge_packet(&mut self, owner: RobotId, packet: &SemanticPacket) {
        for o in &packet.observations {
            self.merge(
                owner,
                &o.category,
                AnchorEntry {
                    cell: o.cell,
                    score: o.score.clamp(0.0, 1.0),
                    ts: packet.ts,
                    source: packet.robot_id,
                },
            );
        }
    }

    /// Only the entries a given robot produced itself.
    pub fn sourced_by(&self, robot: RobotId) -> AnchorMemory {
        AnchorMemory {
            entries: self
                .entries
                .iter()
                .filter(|(_, e)| e.source == robot)
                .map(|(k, e)| (k.clone(), *e))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub tick: u64,
    pub trigger: EventKind,
    pub initiator: RobotId,
    pub summary: String,
    pub decision: ReplanDecision,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BusError {
    #[error("packet from {robot} with ts {ts} is older than stored ts {stored}")]
    OutOfOrder { robot: RobotId, ts: u64, stored: u64 },
    #[error("dialogue record at tick {tick} precedes last record at tick {last}")]
    DialogueOrder { tick: u64, last: u64 },
}

/// One robot's replica of the bus state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusState {
    pub owner: RobotId,
    pub s_fh: Option<SemanticPacket>,
    pub s_sh: Option<SemanticPacket>,
    pub anchors: AnchorMemory,
    pub roles: BTreeMap<RobotId, RoleCursor>,
    pub dialogue: Vec<DialogueRecord>,
    /// Packets dropped for arriving out of order.
    pub dropped_packets: u64,
}

impl BusState {
    pub fn new(owner: RobotId) -> Self {
        Self {
            owner,
            s_fh: None,
            s_sh: None,
            anchors: AnchorMemory::default(),
            roles: RobotId::BOTH.iter().map(|r| (*r, RoleCursor::start(*r))).collect(),
            dialogue: Vec::new(),
            dropped_packets: 0,
        }
    }

    pub fn packet(&self, robot: RobotId) -> Option<&SemanticPacket> {
        match robot {
            RobotId::FH => self.s_fh.as_ref(),
            RobotId::SH => self.s_sh.as_ref(),
        }
    }

    fn slot(&mut self, robot: RobotId) -> &mut Option<SemanticPacket> {
        match robot {
            RobotId::FH => &mut self.s_fh,
            RobotId::SH => &mut self.s_sh,
        }
    }

    /// Stores the packet as the robot's latest state and merges its
    /// observations into the anchors. Older packets are dropped and counted.
    pub fn publish(&mut self, packet: SemanticPacket) -> Result<(), BusError> {
        if let Some(stored) = self.packet(packet.robot_id).map(|p| p.ts) {
            if packet.ts < stored {
                self.dropped_packets += 1;
                return Err(BusError::OutOfOrder {
                    robot: packet.robot_id,
                    ts: packet.ts,
                    stored,
                });
            }
        }
        self.anchors.merge_packet(self.owner, &packet);
        if packet.robot_id != self.owner {
            self.roles.insert(packet.robot_id, packet.stage.cursor);
        }
        let robot = packet.robot_id;
        *self.slot(robot) = Some(packet);
        Ok(())
    }

    pub fn record_dialogue(&mut self, record: DialogueRecord) -> Result<(), BusError> {
        if let Some(last) = self.dialogue.last() {
            if record.tick < last.tick {
                return Err(BusError::DialogueOrder {
                    tick: record.tick,
                    last: last.tick,
                });
            }
        }
        self.dialogue.push(record);
        Ok(())
    }

    pub fn snapshot(&self) -> BusSnapshot {
        BusSnapshot(self.clone())
    }

    /// Builds the context a robot acts on. The partner packet is included
    /// iff `now - ts <= tau`; anchors are always included.
    pub fn compose_context(&self, self_id: RobotId, now: u64, tau: u64) -> ComposedContext {
        let partner = self.packet(self_id.partner());
        let fresh = partner.filter(|p| now.saturating_sub(p.ts) <= tau);
        ComposedContext {
            self_state: self.packet(self_id).cloned(),
            partner_stale: fresh.is_none(),
            partner_state: fresh.cloned(),
            anchors: self.anchors.clone(),
            roles: self.roles.clone(),
        }
    }

    /// Context with every partner contribution withheld.
    pub fn compose_local(&self, self_id: RobotId) -> ComposedContext {
        ComposedContext {
            self_state: self.packet(self_id).cloned(),
            partner_state: None,
            partner_stale: true,
            anchors: self.anchors.sourced_by(self_id),
            roles: self.roles.clone(),
        }
    }
}

/// Frozen copy of a bus replica.
#[derive(Debug, Clone, PartialEq)]
pub struct BusSnapshot(BusState);

impl BusSnapshot {
    pub fn state(&self) -> &BusState {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposedContext {
    pub self_state: Option<SemanticPacket>,
    pub partner_state: Option<SemanticPacket>,
    pub partner_stale: bool,
    pub anchors: AnchorMemory,
    pub roles: BTreeMap<RobotId, RoleCursor>,
}
