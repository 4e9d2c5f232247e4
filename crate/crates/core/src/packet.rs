//! Packets and the per-slot signals exchanged with a priority queue.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque packet identity, assigned by whoever injects the packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PacketId(pub u64);

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A packet carries an identity and a priority that is unique within a run.
///
/// Larger numeric priority means higher priority, so the packet holding the
/// numeric maximum has tag 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Packet {
    pub id: PacketId,
    pub priority: u64,
}

impl Packet {
    pub fn new(id: u64, priority: u64) -> Self {
        Self {
            id: PacketId(id),
            priority,
        }
    }
}

/// External signals for one slot: a(t) with its payload, and c(t).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SlotInput {
    pub arrival: Option<Packet>,
    pub request: bool,
}

impl SlotInput {
    pub fn new(arrival: Option<Packet>, request: bool) -> Self {
        Self { arrival, request }
    }

    pub fn idle() -> Self {
        Self::default()
    }
}

/// Observations for one slot: d(t), l(t) with their packets, and q(t).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SlotOutput {
    pub departed: Option<Packet>,
    pub lost: Option<Packet>,
    pub occupancy: u64,
}
