//! n-to-1 FIFO multiplexer with a bounded buffer.
//!
//! [`Mux::step`] is the standalone element: within one slot the arrivals join
//! the FIFO, the head departs whenever the multiplexer holds or receives any
//! packet, and whatever no longer fits in the buffer is lost.
//!
//! Inside the switching system the departure link feeds back into the switch,
//! so the head that leaves in slot `t` is the one buffered at the end of slot
//! `t − 1`. That usage is [`Mux::emit_head`] followed by [`Mux::ingest`]; it is
//! the standalone element with one extra slot of latency on its output, which
//! is why the in-system buffer counts the packet about to leave.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::packet::Packet;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MuxOutput {
    pub departed: Option<Packet>,
    /// Lost packets, in ascending input order.
    pub losses: Vec<Packet>,
}

#[derive(Debug, Clone)]
pub struct Mux {
    inputs: usize,
    capacity: usize,
    buffer: VecDeque<Packet>,
}

impl Mux {
    pub fn new(inputs: usize, capacity: usize) -> Result<Self> {
        if inputs < 2 {
            return Err(Error::TooFewInputs(inputs));
        }
        Ok(Self {
            inputs,
            capacity,
            buffer: VecDeque::with_capacity(capacity + inputs),
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    /// Buffered packets, oldest first.
    pub fn packets(&self) -> impl Iterator<Item = &Packet> {
        self.buffer.iter()
    }

    /// One slot of the standalone multiplexer.
    ///
    /// Same-slot arrivals are queued in ascending input order. When the buffer
    /// overflows, the newest arrivals of the slot are the ones dropped.
    pub fn step(&mut self, arrivals: &[(usize, Packet)]) -> Result<MuxOutput> {
        let ordered = self.validate(arrivals)?;
        self.buffer.extend(ordered);
        let departed = self.buffer.pop_front();
        let losses = self.shed_overflow();
        Ok(MuxOutput { departed, losses })
    }

    /// Removes the head buffered at the end of the previous slot.
    pub fn emit_head(&mut self) -> Option<Packet> {
        self.buffer.pop_front()
    }

    /// Appends this slot's entrants after [`Mux::emit_head`]; returns the
    /// packets that did not fit.
    pub fn ingest(&mut self, arrivals: &[(usize, Packet)]) -> Result<Vec<Packet>> {
        let ordered = self.validate(arrivals)?;
        self.buffer.extend(ordered);
        Ok(self.shed_overflow())
    }

    fn validate(&self, arrivals: &[(usize, Packet)]) -> Result<Vec<Packet>> {
        let mut used = vec![false; self.inputs];
        for &(input, _) in arrivals {
            if input >= self.inputs {
                return Err(Error::InputOutOfRange {
                    input,
                    inputs: self.inputs,
                });
            }
            if std::mem::replace(&mut used[input], true) {
                return Err(Error::DuplicateInput { input });
            }
        }
        let mut sorted = arrivals.to_vec();
        sorted.sort_by_key(|&(input, _)| input);
        Ok(sorted.into_iter().map(|(_, p)| p).collect())
    }

    fn shed_overflow(&mut self) -> Vec<Packet> {
        let excess = self.buffer.len().saturating_sub(self.capacity);
        let mut losses: Vec<Packet> = (0..excess).filter_map(|_| self.buffer.pop_back()).collect();
        losses.reverse();
        losses
    }
}
