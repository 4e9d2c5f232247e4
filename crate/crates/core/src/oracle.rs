//! Behavioral priority queue with buffer `B`: the reference the switching
//! system is checked against.
//!
//! One call to [`OraclePq::step`] is one time slot. The arrival, if any, is
//! considered present before the departure or loss decision is taken, so a
//! packet can arrive and leave in the same slot.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::packet::{Packet, SlotInput, SlotOutput};

#[derive(Debug, Clone)]
pub struct OraclePq {
    capacity: u64,
    buffer: BTreeMap<u64, Packet>,
    seen: HashSet<u64>,
}

impl OraclePq {
    pub fn new(capacity: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::ZeroCapacity);
        }
        Ok(Self {
            capacity,
            buffer: BTreeMap::new(),
            seen: HashSet::new(),
        })
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn occupancy(&self) -> u64 {
        self.buffer.len() as u64
    }

    /// Buffered packets, highest priority first.
    pub fn packets(&self) -> impl Iterator<Item = &Packet> {
        self.buffer.values().rev()
    }

    pub fn step(&mut self, input: SlotInput) -> Result<SlotOutput> {
        let prev = self.occupancy();
        if let Some(p) = input.arrival {
            if !self.seen.insert(p.priority) {
                return Err(Error::DuplicatePriority(p.priority));
            }
            self.buffer.insert(p.priority, p);
        }

        let mut out = SlotOutput::default();
        if input.request {
            out.departed = self.buffer.pop_last().map(|(_, p)| p);
        } else if input.arrival.is_some() && prev == self.capacity {
            out.lost = self.buffer.pop_first().map(|(_, p)| p);
        }
        out.occupancy = self.occupancy();
        debug_assert!(out.occupancy <= self.capacity);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arrive(id: u64, prio: u64, request: bool) -> SlotInput {
        SlotInput::new(Some(Packet::new(id, prio)), request)
    }

    #[test]
    fn new_rejects_zero_capacity() {
        assert_eq!(OraclePq::new(0).unwrap_err(), Error::ZeroCapacity);
        for b in [1, 4, 46] {
            let q = OraclePq::new(b).unwrap();
            assert_eq!(q.occupancy(), 0);
            assert_eq!(q.capacity(), b);
        }
    }

    #[test]
    fn arrival_with_request_passes_through() {
        let mut q = OraclePq::new(4).unwrap();
        let out = q.step(arrive(1, 7, true)).unwrap();
        assert_eq!(out.departed, Some(Packet::new(1, 7)));
        assert_eq!(out.lost, None);
        assert_eq!(out.occupancy, 0);
    }

    #[test]
    fn lowest_arrival_into_full_buffer_is_lost() {
        let b = 5;
        let mut q = OraclePq::new(b).unwrap();
        for i in 0..b {
            q.step(arrive(i, 100 + i, false)).unwrap();
        }
        let out = q.step(arrive(99, 1, false)).unwrap();
        assert_eq!(out.lost, Some(Packet::new(99, 1)));
        assert_eq!(out.departed, None);
        assert_eq!(out.occupancy, b);
    }

    #[test]
    fn buffered_minimum_is_lost_when_arrival_outranks_it() {
        let mut q = OraclePq::new(2).unwrap();
        q.step(arrive(1, 10, false)).unwrap();
        q.step(arrive(2, 30, false)).unwrap();
        let out = q.step(arrive(3, 20, false)).unwrap();
        assert_eq!(out.lost, Some(Packet::new(1, 10)));
        assert_eq!(out.occupancy, 2);
    }

    #[test]
    fn highest_priority_departs() {
        let mut q = OraclePq::new(4).unwrap();
        q.step(arrive(1, 10, false)).unwrap();
        q.step(arrive(2, 30, false)).unwrap();
        let out = q.step(SlotInput::new(None, true)).unwrap();
        assert_eq!(out.departed, Some(Packet::new(2, 30)));
        assert_eq!(out.occupancy, 1);
    }

    #[test]
    fn request_on_empty_queue_is_idle() {
        let mut q = OraclePq::new(1).unwrap();
        assert_eq!(
            q.step(SlotInput::new(None, true)).unwrap(),
            SlotOutput::default()
        );
    }

    #[test]
    fn duplicate_priority_rejected_even_after_departure() {
        let mut q = OraclePq::new(4).unwrap();
        q.step(arrive(1, 10, true)).unwrap();
        assert_eq!(
            q.step(arrive(2, 10, false)),
            Err(Error::DuplicatePriority(10))
        );
    }
}
