//! The switching system: a controller, one crossbar, and `2ℓ − 1` groups of
//! three 4-to-1 multiplexers fed back into the switch.
//!
//! Each call to [`SwitchSystem::step`] runs one slot:
//!
//! 1. every nonempty multiplexer emits its head into the switch;
//! 2. tags are computed over every packet in the system plus the arrival;
//! 3. on a request, the best of the arrival and the emissions of groups 1
//!    and 2 departs;
//! 4. with no request, a full buffer and an arrival, the worst of the
//!    arrival and the emissions of the last group is dropped;
//! 5. every other entrant goes to the group whose tag set holds its tag,
//!    taking that group's input links round-robin;
//! 6. the multiplexers ingest their entrants.
//!
//! When a request coincides with an arrival into a full buffer, the
//! lowest-priority entrant carries tag `B* + 1`, which lies in no tag set.
//! After the same-slot departure its rank is `B*`, so it is sent to the last
//! group.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mux::Mux;
use crate::packet::{Packet, PacketId, SlotInput, SlotOutput};
use crate::params::{QueueParams, INPUTS_PER_GROUP, INPUTS_PER_MUX, MUXES_PER_GROUP};

/// Most packets the collision-free argument allows into one group per slot.
pub const MAX_ENTRANTS_PER_GROUP: usize = 10;

/// Rank of a packet's priority among everything in the system at the start
/// of a slot, arrival included; tag 1 is the highest priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Tag(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Invariant {
    TagDrift,
    PairDrift,
    TagRange,
    CollisionFree,
    GroupSpread,
    Balance,
    NoOverflow,
    DepartLossRank,
    SourceLocality,
}

impl Invariant {
    pub const ALL: [Invariant; 9] = [
        Invariant::TagDrift,
        Invariant::PairDrift,
        Invariant::TagRange,
        Invariant::CollisionFree,
        Invariant::GroupSpread,
        Invariant::Balance,
        Invariant::NoOverflow,
        Invariant::DepartLossRank,
        Invariant::SourceLocality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Invariant::TagDrift => "TAG-DRIFT",
            Invariant::PairDrift => "PAIR-DRIFT",
            Invariant::TagRange => "TAG-RANGE",
            Invariant::CollisionFree => "COLLISION-FREE",
            Invariant::GroupSpread => "GROUP-SPREAD",
            Invariant::Balance => "BALANCE",
            Invariant::NoOverflow => "NO-OVERFLOW",
            Invariant::DepartLossRank => "DEPART/LOSS-RANK",
            Invariant::SourceLocality => "SOURCE-LOCALITY",
        }
    }

    /// Whether checking this invariant needs the tag of every packet.
    fn needs_all_tags(self) -> bool {
        matches!(
            self,
            Invariant::TagDrift
                | Invariant::PairDrift
                | Invariant::TagRange
                | Invariant::GroupSpread
        )
    }
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which per-slot monitors run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monitors {
    enabled: [bool; 9],
}

impl Monitors {
    pub fn all() -> Self {
        Self { enabled: [true; 9] }
    }

    pub fn none() -> Self {
        Self {
            enabled: [false; 9],
        }
    }

    /// Monitors whose cost does not grow with the number of buffered packets.
    pub fn cheap() -> Self {
        let mut m = Self::none();
        for inv in Invariant::ALL {
            if !inv.needs_all_tags() {
                m = m.with(inv, true);
            }
        }
        m
    }

    pub fn with(mut self, inv: Invariant, on: bool) -> Self {
        self.enabled[inv as usize] = on;
        self
    }

    pub fn is_enabled(&self, inv: Invariant) -> bool {
        self.enabled[inv as usize]
    }

    fn needs_all_tags(&self) -> bool {
        Invariant::ALL
            .iter()
            .any(|&i| self.is_enabled(i) && i.needs_all_tags())
    }
}

impl Default for Monitors {
    fn default() -> Self {
        Self::all()
    }
}

/// What happens when a monitor fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CheckMode {
    /// The slot returns an error.
    #[default]
    Strict,
    /// The violation is recorded and the run continues.
    Record,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub slot: u64,
    pub invariant: Invariant,
    pub detail: String,
}

/// Observed extremes over a run.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SystemStats {
    pub slots: u64,
    /// Largest number of packets routed into each group in a single slot.
    pub max_entrants: Vec<usize>,
    /// Largest number of packets held by each group at the end of a slot.
    pub max_occupancy: Vec<usize>,
    /// Slots with a request, an arrival and a full buffer.
    pub full_request_arrival_slots: u64,
    /// Packets whose tag was `B* + 1` and were sent to the last group.
    pub overflow_tag_routes: u64,
    pub departures: u64,
    pub losses: u64,
}

impl SystemStats {
    fn new(groups: usize) -> Self {
        Self {
            max_entrants: vec![0; groups],
            max_occupancy: vec![0; groups],
            ..Default::default()
        }
    }

    pub fn max_entrants_overall(&self) -> usize {
        self.max_entrants.iter().copied().max().unwrap_or(0)
    }
}

/// One line of the per-slot trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub t: u64,
    pub a: u8,
    pub c: u8,
    pub d: u8,
    pub l: u8,
    pub q: u64,
    pub departed_id: Option<u64>,
    pub departed_prio: Option<u64>,
    pub lost_id: Option<u64>,
    pub lost_prio: Option<u64>,
    pub group_occupancy: Vec<usize>,
    pub group_entering: Vec<usize>,
    pub rr_pointer: Vec<usize>,
}

/// Three multiplexers sharing twelve round-robin input links. Link `k`
/// belongs to multiplexer `k % 3` as its input `k / 3`.
#[derive(Debug, Clone)]
pub struct GroupState {
    j: usize,
    muxes: [Mux; MUXES_PER_GROUP],
    rr_pointer: usize,
}

impl GroupState {
    fn new(j: usize, buffer: u64) -> Self {
        let mk = || Mux::new(INPUTS_PER_MUX, buffer as usize).expect("4 inputs");
        Self {
            j,
            muxes: [mk(), mk(), mk()],
            rr_pointer: 0,
        }
    }

    pub fn index(&self) -> usize {
        self.j
    }

    pub fn muxes(&self) -> &[Mux; MUXES_PER_GROUP] {
        &self.muxes
    }

    /// Index of the input link used last.
    pub fn rr_pointer(&self) -> usize {
        self.rr_pointer
    }

    pub fn occupancy(&self) -> usize {
        self.muxes.iter().map(Mux::len).sum()
    }

    pub fn packets(&self) -> impl Iterator<Item = &Packet> {
        self.muxes.iter().flat_map(|m| m.packets())
    }

    /// Multiplexer owning the last-used link holds the most packets, the one
    /// before it in round-robin order the next most, and the spread is at
    /// most one.
    pub fn is_balanced(&self) -> bool {
        let k = self.rr_pointer % 3;
        let q = |i: usize| self.muxes[i].len();
        let (top, mid, low) = (q(k), q((k + 2) % 3), q((k + 1) % 3));
        top >= mid && mid >= low && top - low <= 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Arrival,
    Group(usize),
}

#[derive(Debug, Clone, Copy)]
struct Entrant {
    packet: Packet,
    source: Source,
    tag: u64,
}

#[derive(Debug, Clone)]
pub struct SwitchSystem {
    params: QueueParams,
    groups: Vec<GroupState>,
    /// Every packet in the system, ascending priority.
    index: Vec<Packet>,
    seen: HashSet<u64>,
    slot: u64,
    mode: CheckMode,
    monitors: Monitors,
    prev_tags: HashMap<PacketId, u64>,
    violations: Vec<Violation>,
    stats: SystemStats,
}

impl SwitchSystem {
    pub fn new(ell: u32) -> Result<Self> {
        Ok(Self::from_params(QueueParams::new(ell)?))
    }

    pub fn from_params(params: QueueParams) -> Self {
        let groups = params
            .groups()
            .iter()
            .map(|g| GroupState::new(g.j, g.buffer))
            .collect();
        let stats = SystemStats::new(params.group_count());
        Self {
            params,
            groups,
            index: Vec::new(),
            seen: HashSet::new(),
            slot: 0,
            mode: CheckMode::Strict,
            monitors: Monitors::all(),
            prev_tags: HashMap::new(),
            violations: Vec::new(),
            stats,
        }
    }

    pub fn with_mode(mut self, mode: CheckMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_monitors(mut self, monitors: Monitors) -> Self {
        self.monitors = monitors;
        self
    }

    pub fn params(&self) -> &QueueParams {
        &self.params
    }

    pub fn groups(&self) -> &[GroupState] {
        &self.groups
    }

    /// Group `j`, 1-based.
    pub fn group(&self, j: usize) -> &GroupState {
        &self.groups[j - 1]
    }

    pub fn occupancy(&self) -> u64 {
        self.index.len() as u64
    }

    /// Last completed slot; 0 before the first step.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn stats(&self) -> &SystemStats {
        &self.stats
    }

    /// Tags of every packet in the system plus `arrival`, best first.
    pub fn compute_tags(&self, arrival: Option<Packet>) -> Result<Vec<(Packet, Tag)>> {
        if let Some(a) = arrival {
            if self.seen.contains(&a.priority) {
                return Err(Error::DuplicatePriority(a.priority));
            }
        }
        Ok(self
            .ranked(arrival)
            .enumerate()
            .map(|(i, p)| (p, Tag(i as u64 + 1)))
            .collect())
    }

    /// In-system packets plus `arrival`, descending priority.
    fn ranked(&self, arrival: Option<Packet>) -> impl Iterator<Item = Packet> + '_ {
        let mut arrival = arrival;
        let mut it = self.index.iter().rev().copied().peekable();
        std::iter::from_fn(move || match (arrival, it.peek()) {
            (Some(a), Some(p)) if a.priority > p.priority => arrival.take(),
            (Some(_), None) => arrival.take(),
            _ => it.next(),
        })
    }

    fn tag_of(&self, priority: u64, arrival: Option<Packet>) -> u64 {
        let above = self.index.len() - self.index.partition_point(|p| p.priority <= priority);
        let arrival_above = arrival.is_some_and(|a| a.priority > priority);
        above as u64 + arrival_above as u64 + 1
    }

    pub fn step(&mut self, input: SlotInput) -> Result<SlotOutput> {
        self.step_traced(input).map(|(out, _)| out)
    }

    pub fn step_traced(&mut self, input: SlotInput) -> Result<(SlotOutput, TraceRecord)> {
        let arrival = input.arrival;
        if let Some(a) = arrival {
            if self.seen.contains(&a.priority) {
                return Err(Error::DuplicatePriority(a.priority));
            }
        }
        let t = self.slot + 1;
        let b_star = self.params.b_star();
        let n_groups = self.params.group_count();
        let q_prev = self.occupancy();
        let mut found: Vec<Violation> = Vec::new();
        let mut flag = |inv: Invariant, detail: String| {
            found.push(Violation {
                slot: t,
                invariant: inv,
                detail,
            });
        };

        let ranked_tags: Vec<(PacketId, u64)> = if self.monitors.needs_all_tags() {
            self.ranked(arrival)
                .enumerate()
                .map(|(i, p)| (p.id, i as u64 + 1))
                .collect()
        } else {
            Vec::new()
        };
        let all_tags: Option<HashMap<PacketId, u64>> = self
            .monitors
            .needs_all_tags()
            .then(|| ranked_tags.iter().copied().collect());

        // Emission.
        let mut entrants: Vec<Entrant> = Vec::with_capacity(3 * n_groups + 1);
        for g in &mut self.groups {
            for m in &mut g.muxes {
                if let Some(packet) = m.emit_head() {
                    entrants.push(Entrant {
                        packet,
                        source: Source::Group(g.j),
                        tag: 0,
                    });
                }
            }
        }
        if let Some(packet) = arrival {
            entrants.push(Entrant {
                packet,
                source: Source::Arrival,
                tag: 0,
            });
        }
        for e in &mut entrants {
            e.tag = self.tag_of(e.packet.priority, arrival);
        }

        // Departure.
        let total = q_prev + arrival.is_some() as u64;
        let mut departed = None;
        if input.request && total > 0 {
            let pick = entrants
                .iter()
                .enumerate()
                .filter(|(_, e)| match e.source {
                    Source::Arrival => true,
                    Source::Group(j) => j <= 2,
                })
                .max_by_key(|(_, e)| e.packet.priority)
                .map(|(i, _)| i);
            match pick {
                Some(i) => {
                    let e = entrants.swap_remove(i);
                    if self.monitors.is_enabled(Invariant::DepartLossRank) && e.tag != 1 {
                        flag(
                            Invariant::DepartLossRank,
                            format!("departed {} has tag {}", e.packet.id, e.tag),
                        );
                    }
                    departed = Some(e.packet);
                }
                None => flag(
                    Invariant::DepartLossRank,
                    "request with a nonempty system but no departure candidate".into(),
                ),
            }
        }

        // Loss.
        let mut lost = None;
        if !input.request && arrival.is_some() && q_prev == b_star {
            let pick = entrants
                .iter()
                .enumerate()
                .filter(|(_, e)| match e.source {
                    Source::Arrival => true,
                    Source::Group(j) => j == n_groups,
                })
                .min_by_key(|(_, e)| e.packet.priority)
                .map(|(i, _)| i)
                .expect("arrival is always a loss candidate");
            let e = entrants.swap_remove(pick);
            if self.monitors.is_enabled(Invariant::DepartLossRank) && e.tag != b_star + 1 {
                flag(
                    Invariant::DepartLossRank,
                    format!("lost {} has tag {}", e.packet.id, e.tag),
                );
            }
            lost = Some(e.packet);
        }

        if input.request && arrival.is_some() && q_prev == b_star {
            self.stats.full_request_arrival_slots += 1;
        }

        // Routing.
        let mut routed: Vec<Vec<Entrant>> = vec![Vec::new(); n_groups];
        let mut route_tags: HashMap<PacketId, u64> = HashMap::new();
        for e in entrants {
            let j = if e.tag >= 1 && e.tag <= b_star {
                self.params.group_for_tag(e.tag)?
            } else if e.tag == b_star + 1 && input.request {
                self.stats.overflow_tag_routes += 1;
                route_tags.insert(e.packet.id, b_star);
                n_groups
            } else {
                return Err(Error::UnroutableTag {
                    slot: t,
                    packet: e.packet.id,
                    tag: e.tag,
                });
            };
            routed[j - 1].push(e);
        }

        let mut entering = vec![0usize; n_groups];
        for (gi, batch) in routed.iter_mut().enumerate() {
            let j = gi + 1;
            let count = batch.len();
            entering[gi] = count;
            if count == 0 {
                continue;
            }
            if count > INPUTS_PER_GROUP {
                return Err(Error::Collision {
                    slot: t,
                    group: j,
                    count,
                });
            }
            if self.monitors.is_enabled(Invariant::CollisionFree) && count > MAX_ENTRANTS_PER_GROUP
            {
                flag(
                    Invariant::CollisionFree,
                    format!("{count} packets entered group {j}"),
                );
            }
            if self.monitors.is_enabled(Invariant::SourceLocality) {
                for e in batch.iter() {
                    if let Source::Group(s) = e.source {
                        if s.abs_diff(j) > 1 {
                            flag(
                                Invariant::SourceLocality,
                                format!("{} moved from group {s} to group {j}", e.packet.id),
                            );
                        }
                    }
                }
            }
            batch.sort_by_key(|e| std::cmp::Reverse(e.packet.priority));
            let group = &mut self.groups[gi];
            let mut per_mux: [Vec<(usize, Packet)>; MUXES_PER_GROUP] = Default::default();
            for (k, e) in batch.iter().enumerate() {
                let link = (group.rr_pointer + 1 + k) % INPUTS_PER_GROUP;
                per_mux[link % MUXES_PER_GROUP].push((link / MUXES_PER_GROUP, e.packet));
            }
            group.rr_pointer = (group.rr_pointer + count) % INPUTS_PER_GROUP;
            for (i, arrivals) in per_mux.iter().enumerate() {
                if arrivals.is_empty() {
                    continue;
                }
                let dropped = group.muxes[i].ingest(arrivals)?;
                for p in dropped {
                    flag(
                        Invariant::NoOverflow,
                        format!("{} dropped by multiplexer {i} of group {j}", p.id),
                    );
                    // The packet is gone; keep the controller's view consistent.
                    self.index.retain(|x| x.id != p.id);
                }
            }
        }

        // Controller bookkeeping.
        if let Some(a) = arrival {
            self.seen.insert(a.priority);
            if departed != Some(a) && lost != Some(a) {
                let pos = self.index.partition_point(|p| p.priority < a.priority);
                self.index.insert(pos, a);
            }
        }
        for p in departed.iter().chain(lost.iter()) {
            if Some(*p) != arrival {
                let pos = self.index.partition_point(|x| x.priority < p.priority);
                debug_assert_eq!(self.index[pos], *p);
                self.index.remove(pos);
            }
        }

        // Monitors over the end-of-slot state.
        if self.monitors.is_enabled(Invariant::Balance) {
            for g in &self.groups {
                if !g.is_balanced() {
                    let q: Vec<usize> = g.muxes.iter().map(Mux::len).collect();
                    flag(
                        Invariant::Balance,
                        format!(
                            "group {} occupancy {q:?} with last link {}",
                            g.j, g.rr_pointer
                        ),
                    );
                }
            }
        }
        if let Some(tags) = &all_tags {
            self.check_tag_monitors(tags, &route_tags, &mut flag);
            if self.monitors.is_enabled(Invariant::TagDrift)
                || self.monitors.is_enabled(Invariant::PairDrift)
            {
                self.check_drift(&ranked_tags, &mut flag);
            }
        }
        self.prev_tags = all_tags.unwrap_or_default();

        // Stats and trace.
        let occupancy: Vec<usize> = self.groups.iter().map(GroupState::occupancy).collect();
        for (gi, (&occ, &ent)) in occupancy.iter().zip(&entering).enumerate() {
            self.stats.max_occupancy[gi] = self.stats.max_occupancy[gi].max(occ);
            self.stats.max_entrants[gi] = self.stats.max_entrants[gi].max(ent);
        }
        self.stats.slots = t;
        self.stats.departures += departed.is_some() as u64;
        self.stats.losses += lost.is_some() as u64;
        self.slot = t;

        let out = SlotOutput {
            departed,
            lost,
            occupancy: self.occupancy(),
        };
        debug_assert_eq!(out.occupancy, occupancy.iter().sum::<usize>() as u64);
        let record = TraceRecord {
            t,
            a: arrival.is_some() as u8,
            c: input.request as u8,
            d: departed.is_some() as u8,
            l: lost.is_some() as u8,
            q: out.occupancy,
            departed_id: departed.map(|p| p.id.0),
            departed_prio: departed.map(|p| p.priority),
            lost_id: lost.map(|p| p.id.0),
            lost_prio: lost.map(|p| p.priority),
            group_occupancy: occupancy,
            group_entering: entering,
            rr_pointer: self.groups.iter().map(|g| g.rr_pointer).collect(),
        };

        let first = found.first().cloned();
        self.violations.extend(found);
        match (self.mode, first) {
            (CheckMode::Strict, Some(v)) => Err(Error::InvariantViolated {
                slot: v.slot,
                invariant: v.invariant.name(),
                detail: v.detail,
            }),
            _ => Ok((out, record)),
        }
    }

    fn check_tag_monitors(
        &self,
        tags: &HashMap<PacketId, u64>,
        route_tags: &HashMap<PacketId, u64>,
        flag: &mut impl FnMut(Invariant, String),
    ) {
        let range_on = self.monitors.is_enabled(Invariant::TagRange);
        let spread_on = self.monitors.is_enabled(Invariant::GroupSpread);
        for (g, gp) in self.groups.iter().zip(self.params.groups()) {
            if g.occupancy() == 0 {
                continue;
            }
            let bound = gp.tag_range_bound();
            let (mut lo, mut hi) = (u64::MAX, 0);
            for p in g.packets() {
                let tag = tags[&p.id];
                lo = lo.min(tag);
                hi = hi.max(tag);
                let effective = route_tags.get(&p.id).copied().unwrap_or(tag);
                if range_on && !bound.contains(effective) {
                    flag(
                        Invariant::TagRange,
                        format!(
                            "{} in group {} has tag {effective}, allowed {bound}",
                            p.id, g.j
                        ),
                    );
                }
            }
            if spread_on {
                let count = g.occupancy() as u64;
                if hi - lo > gp.spread_bound() || count > gp.spread_bound() + 1 {
                    flag(
                        Invariant::GroupSpread,
                        format!("group {} holds {count} packets with tags {lo}..={hi}", g.j),
                    );
                }
            }
        }
    }

    fn check_drift(&self, tags: &[(PacketId, u64)], flag: &mut impl FnMut(Invariant, String)) {
        let mut lo: Option<(i64, PacketId)> = None;
        let mut hi: Option<(i64, PacketId)> = None;
        for &(ref id, now) in tags {
            let Some(&before) = self.prev_tags.get(id) else {
                continue;
            };
            let delta = now as i64 - before as i64;
            if self.monitors.is_enabled(Invariant::TagDrift) && delta.abs() > 1 {
                flag(Invariant::TagDrift, format!("{id} tag {before} -> {now}"));
            }
            if lo.is_none_or(|(d, _)| delta < d) {
                lo = Some((delta, *id));
            }
            if hi.is_none_or(|(d, _)| delta > d) {
                hi = Some((delta, *id));
            }
        }
        // Pairwise difference drift is bounded by one for every pair exactly
        // when the per-packet drifts span at most one.
        if let (Some((dl, il)), Some((dh, ih))) = (lo, hi) {
            if self.monitors.is_enabled(Invariant::PairDrift) && dh - dl > 1 {
                flag(
                    Invariant::PairDrift,
                    format!("{ih} drifted {dh:+} while {il} drifted {dl:+}"),
                );
            }
        }
    }
}
