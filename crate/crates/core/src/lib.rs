//! Simulator and verifier for an optical priority queue built from a single
//! crossbar switch and groups of FIFO multiplexers fed back into it.
//!
//! - [`params`]: group buffers, tag sets and `B*` for a given `ell`.
//! - [`oracle`]: behavioral priority queue used as ground truth.
//! - [`mux`]: bounded n-to-1 FIFO multiplexer.
//! - [`system`]: the switching system and its routing policy, with per-slot
//!   invariant monitors.
//! - [`cost`]: switch size and FDL count of the construction.
//! - [`harness`]: seeded workloads and the differential runner.

pub mod cost;
pub mod error;
pub mod harness;
pub mod mux;
pub mod oracle;
pub mod packet;
pub mod params;
pub mod system;

pub use error::{Error, Result};
pub use packet::{Packet, PacketId, SlotInput, SlotOutput};
pub use params::{QueueParams, TagRange};
