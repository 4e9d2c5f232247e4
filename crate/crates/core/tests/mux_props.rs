//! Multiplexer identities: flow conservation, non-idling, per-link loss
//! thresholds, FIFO order, and the relation between the standalone element
//! and its in-system (feedback) usage.

use std::collections::VecDeque;

use proptest::prelude::*;
use sdlpq::mux::Mux;
use sdlpq::Packet;

fn arrivals_strategy(n: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(
        prop::sample::subsequence((0..n).collect::<Vec<_>>(), 0..=n),
        1..200,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn m1_to_m4_hold(cap in 0usize..6, n in 2usize..6, slots in arrivals_strategy(5)) {
        let mut m = Mux::new(n, cap).unwrap();
        let mut next = 0u64;
        let mut admitted: Vec<Packet> = Vec::new();
        let mut departed: Vec<Packet> = Vec::new();
        let (mut busy_slots, mut departures) = (0, 0);
        for inputs in slots {
            let arr: Vec<(usize, Packet)> = inputs
                .into_iter()
                .filter(|&i| i < n)
                .map(|i| { next += 1; (i, Packet::new(next, next)) })
                .collect();
            let prev = m.len();
            let total = prev + arr.len();
            let out = m.step(&arr).unwrap();

            let d = out.departed.is_some() as usize;
            // M1
            prop_assert_eq!(m.len(), prev + arr.len() - d - out.losses.len());
            // M2
            prop_assert_eq!(d == 1, total > 0);
            // M3: loss link i fires iff total > cap + i
            let links = (1..n).filter(|i| total > cap + i).count();
            prop_assert_eq!(out.losses.len(), links);
            prop_assert!(m.len() <= cap);

            busy_slots += (total > 0) as usize;
            departures += d;
            let mut sorted = arr.clone();
            sorted.sort_by_key(|&(i, _)| i);
            admitted.extend(sorted.into_iter().map(|(_, p)| p).filter(|p| !out.losses.contains(p)));
            departed.extend(out.departed);
        }
        prop_assert_eq!(busy_slots, departures);
        // M4: departures are a prefix of admissions in arrival order
        prop_assert_eq!(&admitted[..departed.len()], &departed[..]);
    }

    /// emit-then-ingest with buffer B behaves like the standalone element with
    /// buffer B - 1 whose output reaches the switch one slot later.
    #[test]
    fn feedback_usage_is_delayed_standalone(cap in 1usize..6, slots in arrivals_strategy(4)) {
        let mut fb = Mux::new(4, cap).unwrap();
        let mut sa = Mux::new(4, cap - 1).unwrap();
        let mut pending: VecDeque<Packet> = VecDeque::new();
        let mut next = 0u64;
        for inputs in slots {
            let arr: Vec<(usize, Packet)> = inputs.into_iter().map(|i| { next += 1; (i, Packet::new(next, next)) }).collect();
            let emitted = fb.emit_head();
            prop_assert_eq!(emitted, pending.pop_front());
            let fb_loss = fb.ingest(&arr).unwrap();
            let out = sa.step(&arr).unwrap();
            prop_assert_eq!(fb_loss, out.losses);
            pending.extend(out.departed);
            prop_assert_eq!(fb.len(), sa.len() + pending.len());
        }
    }
}
