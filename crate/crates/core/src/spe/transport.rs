//! Simulated packet transport between the two robots.

use crate::seed;
use crate::svb::SemanticPacket;
use crate::task::RobotId;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransportModel {
    /// Ticks.
    pub latency: u64,
    /// Extra uniform delay in `0..=jitter` ticks.
    pub jitter: u64,
    pub drop_prob: f64,
    pub seed: u64,
}

impl Default for TransportModel {
    fn default() -> Self {
        Self {
            latency: 0,
            jitter: 0,
            drop_prob: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("drop probability {0} is outside [0, 1]")]
    DropProb(f64),
}

impl TransportModel {
    pub fn validate(&self) -> Result<(), TransportError> {
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(TransportError::DropProb(self.drop_prob));
        }
        Ok(())
    }

    pub fn is_instant(&self) -> bool {
        self.latency == 0 && self.jitter == 0 && self.drop_prob == 0.0
    }
}

#[derive(Debug, Clone)]
struct InFlight {
    due: u64,
    seq: u64,
    packet: SemanticPacket,
}

/// Per-sender FIFO delivery with seeded delay and loss.
#[derive(Debug, Clone)]
pub struct Transport {
    model: TransportModel,
    rngs: [ChaCha8Rng; 2],
    /// Indexed by receiver.
    queues: [Vec<InFlight>; 2],
    last_due: [u64; 2],
    seq: u64,
    pub sent: u64,
    pub dropped: u64,
}

impl Transport {
    pub fn new(model: TransportModel) -> Result<Self, TransportError> {
        model.validate()?;
        Ok(Self {
            model,
            rngs: [
                seed::rng(model.seed, "transport", 0),
                seed::rng(model.seed, "transport", 1),
            ],
            queues: [Vec::new(), Vec::new()],
            last_due: [0, 0],
            seq: 0,
            sent: 0,
            dropped: 0,
        })
    }

    pub fn send(&mut self, packet: SemanticPacket) {
        let from = packet.robot_id.index();
        let rng = &mut self.rngs[from];
        self.sent += 1;
        if self.model.drop_prob > 0.0 && rng.gen_bool(self.model.drop_prob) {
            self.dropped += 1;
            return;
        }
        let jitter = if self.model.jitter > 0 {
            rng.gen_range(0..=self.model.jitter)
        } else {
            0
        };
        // never overtake an earlier packet from the same sender
        let due = (packet.ts + self.model.latency + jitter).max(self.last_due[from]);
        self.last_due[from] = due;
        let to = packet.robot_id.partner().index();
        self.queues[to].push(InFlight {
            due,
            seq: self.seq,
            packet,
        });
        self.seq += 1;
    }

    /// Packets due for `receiver` at or before `now`, in delivery order.
    pub fn deliver(&mut self, receiver: RobotId, now: u64) -> Vec<SemanticPacket> {
        let q = &mut self.queues[receiver.index()];
        let (mut due, rest): (Vec<_>, Vec<_>) = q.drain(..).partition(|m| m.due <= now);
        *q = rest;
        due.sort_by_key(|m| (m.due, m.seq));
        due.into_iter().map(|m| m.packet).collect()
    }

    pub fn in_flight(&self) -> usize {
        self.queues.iter().map(Vec::len).sum()
    }
}
