//! Seeded workloads and the lockstep differential runner.
//!
//! A run feeds the same slot inputs to a [`SwitchSystem`] and an [`OraclePq`]
//! of buffer `B*`, compares departure, loss and occupancy including packet
//! identities, and collects every monitor violation the system reports.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::OraclePq;
use crate::packet::{Packet, SlotInput, SlotOutput};
use crate::params::QueueParams;
use crate::system::{CheckMode, Monitors, SwitchSystem, SystemStats, TraceRecord, Violation};

/// Longest arrival or request run in the burst family.
const BURST_MAX_RUN: u64 = 256;
/// The full-pressure family scales the request probability down by this.
const FULL_PRESSURE_REQUEST_DIVISOR: u32 = 8;
/// Fill lengths of the adversarial sweep cycle through 1, 2, 4, ... up to this.
const SWEEP_MAX_FILL: u64 = 256;
const SWEEP_MAX_MIXED: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkloadFamily {
    UniformRandom,
    Burst,
    FifoOrder,
    LifoOrder,
    FullPressure,
    AdversarialSweep,
}

impl WorkloadFamily {
    pub const ALL: [WorkloadFamily; 6] = [
        WorkloadFamily::UniformRandom,
        WorkloadFamily::Burst,
        WorkloadFamily::FifoOrder,
        WorkloadFamily::LifoOrder,
        WorkloadFamily::FullPressure,
        WorkloadFamily::AdversarialSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WorkloadFamily::UniformRandom => "uniform-random",
            WorkloadFamily::Burst => "burst",
            WorkloadFamily::FifoOrder => "fifo-order",
            WorkloadFamily::LifoOrder => "lifo-order",
            WorkloadFamily::FullPressure => "full-pressure",
            WorkloadFamily::AdversarialSweep => "adversarial-sweep",
        }
    }
}

impl fmt::Display for WorkloadFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WorkloadFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidWorkload(format!("unknown family {s:?}")))
    }
}

/// A probability kept as an exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Probability {
    num: u32,
    den: u32,
}

impl Probability {
    pub const ZERO: Probability = Probability { num: 0, den: 1 };
    pub const ONE: Probability = Probability { num: 1, den: 1 };
    pub const HALF: Probability = Probability { num: 1, den: 2 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidProbability(format!("{num}/{den}")));
        }
        Ok(Self { num, den })
    }

    fn scaled_down(self, divisor: u32) -> Self {
        Self {
            num: self.num,
            den: self.den.saturating_mul(divisor),
        }
    }

    fn sample(self, rng: &mut impl Rng) -> bool {
        rng.gen_ratio(self.num, self.den)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for Probability {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Accepts `n/d` or a decimal with at most nine fractional digits.
impl FromStr for Probability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidProbability(s.to_string());
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse().map_err(|_| bad())?;
            let d = d.trim().parse().map_err(|_| bad())?;
            return Probability::new(n, d).map_err(|_| bad());
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 9
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || (int.is_empty() && frac.is_empty())
        {
            return Err(bad());
        }
        let int: u32 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10u32.pow(frac.len() as u32);
        let frac: u32 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        Probability::new(num, den).map_err(|_| bad())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct WorkloadSpec {
    pub family: WorkloadFamily,
    pub slots: u64,
    pub arrival_prob: Probability,
    pub request_prob: Probability,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn new(family: WorkloadFamily, slots: u64, seed: u64) -> Self {
        Self {
            family,
            slots,
            arrival_prob: Probability::HALF,
            request_prob: Probability::HALF,
            seed,
        }
    }

    pub fn with_probs(mut self, arrival: Probability, request: Probability) -> Self {
        self.arrival_prob = arrival;
        self.request_prob = request;
        self
    }
}

/// Bijection on `u64` (the splitmix64 finalizer), so distinct counters give
/// distinct priorities.
fn permute(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct PacketSource {
    family: WorkloadFamily,
    key: u64,
    next: u64,
}

impl PacketSource {
    fn next_packet(&mut self) -> Packet {
        let n = self.next;
        self.next += 1;
        let priority = match self.family {
            // Earlier arrivals rank higher: the queue serves in arrival order.
            WorkloadFamily::FifoOrder => u64::MAX - n,
            WorkloadFamily::LifoOrder => n + 1,
            _ => permute(n.wrapping_add(self.key)),
        };
        Packet::new(n, priority)
    }
}

pub fn generate_workload(spec: &WorkloadSpec) -> Result<Vec<SlotInput>> {
    if spec.slots == 0 {
        return Err(Error::InvalidWorkload("slots must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut source = PacketSource {
        family: spec.family,
        key: rng.gen(),
        next: 0,
    };
    let mut out = Vec::with_capacity(spec.slots as usize);
    let (p, r) = (spec.arrival_prob, spec.request_prob);

    let push =
        |out: &mut Vec<SlotInput>, arrive: bool, request: bool, source: &mut PacketSource| {
            out.push(SlotInput::new(
                arrive.then(|| source.next_packet()),
                request,
            ));
        };

    match spec.family {
        WorkloadFamily::UniformRandom | WorkloadFamily::FifoOrder | WorkloadFamily::LifoOrder => {
            for _ in 0..spec.slots {
                let (a, c) = (p.sample(&mut rng), r.sample(&mut rng));
                push(&mut out, a, c, &mut source);
            }
        }
        WorkloadFamily::Burst => {
            let mut filling = true;
            while (out.len() as u64) < spec.slots {
                let run = rng.gen_range(1..=BURST_MAX_RUN);
                for _ in 0..run {
                    push(&mut out, filling, !filling, &mut source);
                }
                filling = !filling;
            }
        }
        WorkloadFamily::FullPressure => {
            let rare = r.scaled_down(FULL_PRESSURE_REQUEST_DIVISOR);
            for _ in 0..spec.slots {
                let c = rare.sample(&mut rng);
                push(&mut out, true, c, &mut source);
            }
        }
        WorkloadFamily::AdversarialSweep => {
            // Fill past capacity, then keep arriving every slot while flipping
            // requests, so full-buffer slots see both requests and none.
            let mut fill = 1;
            while (out.len() as u64) < spec.slots {
                for _ in 0..fill {
                    push(&mut out, true, false, &mut source);
                }
                for _ in 0..rng.gen_range(1..=SWEEP_MAX_MIXED) {
                    let c = Probability::HALF.sample(&mut rng);
                    push(&mut out, true, c, &mut source);
                }
                for _ in 0..rng.gen_range(1..=fill) {
                    push(&mut out, false, true, &mut source);
                }
                fill = if fill >= SWEEP_MAX_FILL { 1 } else { fill * 2 };
            }
        }
    }
    out.truncate(spec.slots as usize);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub slot: u64,
    pub field: String,
    pub system: String,
    pub oracle: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiffReport {
    pub ell: u32,
    pub workload: WorkloadSpec,
    pub slots_run: u64,
    pub matched: bool,
    pub first_divergence: Option<Divergence>,
    pub mismatched_slots: u64,
    pub invariant_violations: Vec<Violation>,
    pub stats: SystemStats,
}

impl DiffReport {
    pub fn is_clean(&self) -> bool {
        self.matched && self.invariant_violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Stop at the first divergence or violation.
    pub strict: bool,
    pub monitors: Monitors,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            strict: true,
            monitors: Monitors::all(),
        }
    }
}

fn show(p: Option<Packet>) -> String {
    match p {
        Some(p) => format!("{}@{}", p.id, p.priority),
        None => "-".into(),
    }
}

fn compare(slot: u64, sys: &SlotOutput, ora: &SlotOutput) -> Option<Divergence> {
    let diverge = |field: &str, s: String, o: String| Divergence {
        slot,
        field: field.into(),
        system: s,
        oracle: o,
    };
    if sys.departed != ora.departed {
        return Some(diverge("departed", show(sys.departed), show(ora.departed)));
    }
    if sys.lost != ora.lost {
        return Some(diverge("lost", show(sys.lost), show(ora.lost)));
    }
    if sys.occupancy != ora.occupancy {
        return Some(diverge(
            "q",
            sys.occupancy.to_string(),
            ora.occupancy.to_string(),
        ));
    }
    None
}

pub fn run_differential(ell: u32, spec: &WorkloadSpec) -> Result<DiffReport> {
    run_differential_with(ell, spec, RunOptions::default(), |_| {})
}

/// Runs system and oracle in lockstep, handing every trace record to `sink`.
pub fn run_differential_with(
    ell: u32,
    spec: &WorkloadSpec,
    opts: RunOptions,
    mut sink: impl FnMut(&TraceRecord),
) -> Result<DiffReport> {
    let params = QueueParams::new(ell)?;
    let inputs = generate_workload(spec)?;
    let mut oracle = OraclePq::new(params.b_star())?;
    let mut system = SwitchSystem::from_params(params)
        .with_mode(CheckMode::Record)
        .with_monitors(opts.monitors);

    let mut first_divergence = None;
    let mut mismatched_slots = 0;
    let mut slots_run = 0;
    for input in inputs {
        let slot = system.slot() + 1;
        let seen_violations = system.violations().len();
        let ora = oracle.step(input)?;
        let diverged = match system.step_traced(input) {
            Ok((sys, record)) => {
                sink(&record);
                compare(slot, &sys, &ora)
            }
            Err(e) => Some(Divergence {
                slot,
                field: "error".into(),
                system: e.to_string(),
                oracle: format!("{ora:?}"),
            }),
        };
        slots_run = slot;
        let hard_error = diverged.as_ref().is_some_and(|d| d.field == "error");
        if let Some(d) = diverged {
            mismatched_slots += 1;
            first_divergence.get_or_insert(d);
        }
        let new_violation = system.violations().len() > seen_violations;
        if hard_error || (opts.strict && (first_divergence.is_some() || new_violation)) {
            break;
        }
    }

    Ok(DiffReport {
        ell,
        workload: *spec,
        slots_run,
        matched: first_divergence.is_none(),
        first_divergence,
        mismatched_slots,
        invariant_violations: system.violations().to_vec(),
        stats: system.stats().clone(),
    })
}

/// A grid of differential runs: every `ell` × family × trial.
#[derive(Debug, Clone)]
pub struct FleetSpec {
    pub ells: Vec<u32>,
    pub families: Vec<WorkloadFamily>,
    pub trials: u64,
    pub slots: u64,
    pub arrival_prob: Probability,
    pub request_prob: Probability,
    pub base_seed: u64,
    pub options: RunOptions,
}

impl FleetSpec {
    pub fn new(ells: impl IntoIterator<Item = u32>, trials: u64, slots: u64) -> Self {
        Self {
            ells: ells.into_iter().collect(),
            families: WorkloadFamily::ALL.to_vec(),
            trials,
            slots,
            arrival_prob: Probability::HALF,
            request_prob: Probability::HALF,
            base_seed: 0,
            options: RunOptions::default(),
        }
    }

    fn jobs(&self) -> Vec<(u32, WorkloadSpec)> {
        let mut jobs = Vec::new();
        for &ell in &self.ells {
            for &family in &self.families {
                for trial in 0..self.trials {
                    let spec = WorkloadSpec::new(family, self.slots, self.base_seed + trial)
                        .with_probs(self.arrival_prob, self.request_prob);
                    jobs.push((ell, spec));
                }
            }
        }
        jobs
    }
}

/// Aggregate over every run of one `ell`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EllSummary {
    pub ell: u32,
    pub b_star: u64,
    pub runs: u64,
    pub slots: u64,
    pub mismatched_runs: u64,
    pub violations: u64,
    pub max_entrants: Vec<usize>,
    pub max_occupancy: Vec<usize>,
    pub full_request_arrival_slots: u64,
    pub overflow_tag_routes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FleetReport {
    pub reports: Vec<DiffReport>,
    pub per_ell: Vec<EllSummary>,
}

impl FleetReport {
    pub fn all_clean(&self) -> bool {
        self.reports.iter().all(DiffReport::is_clean)
    }

    pub fn first_failure(&self) -> Option<&DiffReport> {
        self.reports.iter().find(|r| !r.is_clean())
    }
}

/// Runs the fleet in parallel; results come back in job order.
pub fn run_fleet(spec: &FleetSpec) -> Result<FleetReport> {
    let reports = spec
        .jobs()
        .par_iter()
        .map(|(ell, w)| run_differential_with(*ell, w, spec.options, |_| {}))
        .collect::<Result<Vec<_>>>()?;

    let mut per_ell = Vec::new();
    for &ell in &spec.ells {
        let params = QueueParams::new(ell)?;
        let n = params.group_count();
        let mut s = EllSummary {
            ell,
            b_star: params.b_star(),
            runs: 0,
            slots: 0,
            mismatched_runs: 0,
            violations: 0,
            max_entrants: vec![0; n],
            max_occupancy: vec![0; n],
            full_request_arrival_slots: 0,
            overflow_tag_routes: 0,
        };
        for r in reports.iter().filter(|r| r.ell == ell) {
            s.runs += 1;
            s.slots += r.slots_run;
            s.mismatched_runs += !r.matched as u64;
            s.violations += r.invariant_violations.len() as u64;
            for i in 0..n {
                s.max_entrants[i] = s.max_entrants[i].max(r.stats.max_entrants[i]);
                s.max_occupancy[i] = s.max_occupancy[i].max(r.stats.max_occupancy[i]);
            }
            s.full_request_arrival_slots += r.stats.full_request_arrival_slots;
            s.overflow_tag_routes += r.stats.overflow_tag_routes;
        }
        per_ell.push(s);
    }
    Ok(FleetReport { reports, per_ell })
}
