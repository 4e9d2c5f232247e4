//! The switching system against the oracle priority queue.

use sdlpq::harness::{
    generate_workload, run_differential, run_differential_with, run_fleet, FleetSpec, Probability,
    RunOptions, WorkloadFamily, WorkloadSpec,
};
use sdlpq::system::{CheckMode, SwitchSystem, MAX_ENTRANTS_PER_GROUP};
use sdlpq::SlotInput;

fn clean(ell: u32, spec: WorkloadSpec) -> sdlpq::harness::DiffReport {
    let report = run_differential(ell, &spec).unwrap();
    assert!(
        report.is_clean(),
        "ell={ell} {spec:?}: {:?} {:?}",
        report.first_divergence,
        report.invariant_violations.first()
    );
    assert_eq!(report.slots_run, spec.slots);
    report
}

#[test]
fn uniform_ell5_two_thousand_slots() {
    let r = clean(5, WorkloadSpec::new(WorkloadFamily::UniformRandom, 2000, 1));
    assert!(r.stats.max_entrants_overall() <= MAX_ENTRANTS_PER_GROUP);
}

#[test]
fn single_group_queue() {
    for family in WorkloadFamily::ALL {
        for seed in 0..20 {
            clean(1, WorkloadSpec::new(family, 500, seed));
        }
    }
}

#[test]
fn adversarial_hits_full_request_arrival_edge() {
    for ell in 2..=5 {
        let r = clean(
            ell,
            WorkloadSpec::new(WorkloadFamily::AdversarialSweep, 5000, 3),
        );
        assert!(
            r.stats.full_request_arrival_slots >= 100,
            "ell={ell}: {}",
            r.stats.full_request_arrival_slots
        );
    }
}

#[test]
fn biased_workload_reaches_every_group() {
    let spec = WorkloadSpec::new(WorkloadFamily::UniformRandom, 20_000, 5)
        .with_probs("3/5".parse().unwrap(), "2/5".parse().unwrap());
    let r = clean(6, spec);
    assert!(
        r.stats.max_occupancy.iter().all(|&q| q > 0),
        "{:?}",
        r.stats.max_occupancy
    );
    assert!(r.stats.losses > 0);
}

#[test]
fn fifo_workload_departs_in_arrival_order() {
    let spec = WorkloadSpec::new(WorkloadFamily::FifoOrder, 3000, 2);
    let mut departed = Vec::new();
    let r = run_differential_with(4, &spec, RunOptions::default(), |rec| {
        departed.extend(rec.departed_id)
    })
    .unwrap();
    assert!(r.is_clean());
    assert!(departed.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn full_pressure_fills_and_loses() {
    let spec = WorkloadSpec::new(WorkloadFamily::FullPressure, 2000, 4);
    let mut peak = 0;
    let r = run_differential_with(2, &spec, RunOptions::default(), |rec| {
        peak = peak.max(rec.q)
    })
    .unwrap();
    assert!(r.is_clean());
    assert_eq!(peak, 4);
    assert!(r.stats.losses > 1000);
}

#[test]
fn report_and_trace_are_deterministic() {
    let spec = WorkloadSpec::new(WorkloadFamily::Burst, 1500, 11);
    let run = || {
        let mut trace = String::new();
        let r = run_differential_with(4, &spec, RunOptions::default(), |rec| {
            trace.push_str(&serde_json::to_string(rec).unwrap());
            trace.push('\n');
        })
        .unwrap();
        (serde_json::to_string(&r).unwrap(), trace)
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_eq!(a.1.lines().count(), 1500);
}

#[test]
fn workloads_are_seeded() {
    for family in WorkloadFamily::ALL {
        let w = |seed| generate_workload(&WorkloadSpec::new(family, 400, seed)).unwrap();
        assert_eq!(w(9), w(9));
        assert_eq!(w(9).len(), 400);
    }
    let w = |seed| {
        generate_workload(&WorkloadSpec::new(WorkloadFamily::UniformRandom, 400, seed)).unwrap()
    };
    assert_ne!(w(1), w(2));
}

#[test]
fn small_fleet_is_clean() {
    let mut spec = FleetSpec::new(1..=4, 5, 600);
    spec.arrival_prob = Probability::new(3, 5).unwrap();
    let report = run_fleet(&spec).unwrap();
    assert!(
        report.all_clean(),
        "{:?}",
        report
            .first_failure()
            .map(|r| (&r.workload, &r.first_divergence))
    );
    assert_eq!(report.reports.len(), 4 * 6 * 5);
    assert_eq!(report.per_ell.len(), 4);
}

#[test]
fn strict_system_stops_on_duplicate_priority() {
    let mut sys = SwitchSystem::new(3).unwrap().with_mode(CheckMode::Strict);
    let p = sdlpq::Packet::new(1, 42);
    sys.step(SlotInput::new(Some(p), false)).unwrap();
    assert!(sys
        .step(SlotInput::new(Some(sdlpq::Packet::new(2, 42)), false))
        .is_err());
}
