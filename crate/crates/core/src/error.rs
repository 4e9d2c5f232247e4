use thiserror::Error;

use crate::packet::PacketId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("ell must be at least {min}, got {ell}")]
    EllTooSmall { ell: u32, min: u32 },

    #[error("ell = {ell} exceeds the configured maximum {max}")]
    EllTooLarge { ell: u32, max: u32 },

    #[error("tag {tag} is outside [1, {b_star}]")]
    TagOutOfRange { tag: u64, b_star: u64 },

    #[error("group index {j} is outside [1, {groups}]")]
    GroupOutOfRange { j: usize, groups: usize },

    #[error("buffer capacity must be at least 1")]
    ZeroCapacity,

    #[error("priority {0} was already used in this run")]
    DuplicatePriority(u64),

    #[error("multiplexer input {input} used twice in one slot")]
    DuplicateInput { input: usize },

    #[error("multiplexer input {input} out of range for a {inputs}-input multiplexer")]
    InputOutOfRange { input: usize, inputs: usize },

    #[error("multiplexer needs at least 2 inputs, got {0}")]
    TooFewInputs(usize),

    #[error("slot {slot}: packet {packet} has unroutable tag {tag}")]
    UnroutableTag {
        slot: u64,
        packet: PacketId,
        tag: u64,
    },

    #[error("slot {slot}: {count} packets routed to group {group}, which has 12 input links")]
    Collision {
        slot: u64,
        group: usize,
        count: usize,
    },

    #[error("slot {slot}: invariant {invariant} violated: {detail}")]
    InvariantViolated {
        slot: u64,
        invariant: &'static str,
        detail: String,
    },

    #[error("budget {budget} is below the cheapest construction ({min} FDLs)")]
    BudgetTooSmall { budget: u64, min: u64 },

    #[error("invalid probability {0:?}")]
    InvalidProbability(String),

    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
}
