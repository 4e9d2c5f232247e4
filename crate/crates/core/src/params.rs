//! Static parameters of the construction, all derived from the single integer `ell`.
//!
//! Groups are numbered 1..=2ℓ−1. Group `j` holds three 4-to-1 multiplexers,
//! each with buffer `B_j`, and receives the packets whose tag falls in the
//! contiguous range `Ψ_j`. The ranges tile `[1, B*]` with
//! `B* = 3·2^(ℓ−1) − 2`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on `ell`; keeps every derived quantity far inside `u64`.
pub const DEFAULT_MAX_ELL: u32 = 40;

/// Largest `ell` for which `B*` still fits in a `u64`.
pub const HARD_MAX_ELL: u32 = 62;

pub const MUXES_PER_GROUP: usize = 3;
pub const INPUTS_PER_MUX: usize = 4;
pub const INPUTS_PER_GROUP: usize = MUXES_PER_GROUP * INPUTS_PER_MUX;

/// A set of consecutive tags `⟨lo, hi⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TagRange {
    pub lo: u64,
    pub hi: u64,
}

impl TagRange {
    pub fn new(lo: u64, hi: u64) -> Self {
        debug_assert!(lo <= hi, "empty tag range <{lo},{hi}>");
        Self { lo, hi }
    }

    pub fn size(&self) -> u64 {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, tag: u64) -> bool {
        self.lo <= tag && tag <= self.hi
    }
}

impl fmt::Display for TagRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{{{}}}", self.lo)
        } else {
            write!(f, "⟨{},{}⟩", self.lo, self.hi)
        }
    }
}

/// Parameters of one group of multiplexers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroupParams {
    /// 1-based group index.
    pub j: usize,
    /// Buffer of each of the three multiplexers in the group.
    pub buffer: u64,
    /// Tags routed into this group.
    pub tags: TagRange,
}

impl GroupParams {
    /// Range of tags a packet buffered in this group can hold:
    /// `⟨L(Ψ_j) − B_j + 1, U(Ψ_j) + B_j − 1⟩`.
    pub fn tag_range_bound(&self) -> TagRange {
        TagRange::new(
            self.tags.lo + 1 - self.buffer,
            self.tags.hi + self.buffer - 1,
        )
    }

    /// Bound on the number of packets buffered in the whole group: the
    /// tighter of the tag-range width and `3·B_j − 1`.
    pub fn occupancy_bound(&self) -> u64 {
        self.tag_range_bound().size().min(self.spread_bound() + 1)
    }

    /// Largest tag difference between two packets buffered at or entering
    /// this group in one slot: `3·B_j − 2`.
    pub fn spread_bound(&self) -> u64 {
        3 * self.buffer - 2
    }
}

/// Every static quantity of a construction with parameter `ell`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueueParams {
    ell: u32,
    groups: Vec<GroupParams>,
    b_star: u64,
}

impl QueueParams {
    pub fn new(ell: u32) -> Result<Self> {
        Self::with_max_ell(ell, DEFAULT_MAX_ELL)
    }

    pub fn with_max_ell(ell: u32, max_ell: u32) -> Result<Self> {
        if ell == 0 {
            return Err(Error::EllTooSmall { ell, min: 1 });
        }
        let max = max_ell.min(HARD_MAX_ELL);
        if ell > max {
            return Err(Error::EllTooLarge { ell, max });
        }
        let group_count = 2 * ell as usize - 1;
        let groups = (1..=group_count)
            .map(|j| GroupParams {
                j,
                buffer: group_buffer(j, ell),
                tags: group_tags(j, ell),
            })
            .collect();
        Ok(Self {
            ell,
            groups,
            b_star: 3 * (1u64 << (ell - 1)) - 2,
        })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// Total priority-queue buffer `B* = 3·2^(ℓ−1) − 2`.
    pub fn b_star(&self) -> u64 {
        self.b_star
    }

    pub fn groups(&self) -> &[GroupParams] {
        &self.groups
    }

    /// Group `j`, 1-based.
    pub fn group(&self, j: usize) -> &GroupParams {
        &self.groups[j - 1]
    }

    /// `B_j`, 1-based.
    pub fn buffer(&self, j: usize) -> u64 {
        self.group(j).buffer
    }

    /// `Ψ_j`, 1-based.
    pub fn tag_set(&self, j: usize) -> TagRange {
        self.group(j).tags
    }

    pub fn inputs_per_group(&self) -> usize {
        INPUTS_PER_GROUP
    }

    pub fn muxes_per_group(&self) -> usize {
        MUXES_PER_GROUP
    }

    /// The unique group `j` with `tag ∈ Ψ_j`.
    pub fn group_for_tag(&self, tag: u64) -> Result<usize> {
        if tag == 0 || tag > self.b_star {
            return Err(Error::TagOutOfRange {
                tag,
                b_star: self.b_star,
            });
        }
        // The ranges are sorted and contiguous, so the first range whose upper
        // end reaches the tag is the one containing it.
        let idx = self.groups.partition_point(|g| g.tags.hi < tag);
        Ok(self.groups[idx].j)
    }

    pub fn table(&self) -> ParamTable<'_> {
        ParamTable(self)
    }
}

fn group_buffer(j: usize, ell: u32) -> u64 {
    let ell = ell as usize;
    if j == 1 || j == 2 * ell - 1 {
        1
    } else if j <= ell {
        1 << (j - 2)
    } else {
        1 << (2 * ell - j - 2)
    }
}

fn group_tags(j: usize, ell: u32) -> TagRange {
    let ell = ell as usize;
    if j <= ell {
        TagRange::new(1 << (j - 1), (1 << j) - 1)
    } else {
        let top = 3u64 << (ell - 1);
        TagRange::new(
            top - (1 << (2 * ell - j)),
            top - (1 << (2 * ell - j - 1)) - 1,
        )
    }
}

/// Columns: `j`, `B_j`, `Ψ_j`, tag range, bound on buffered packets.
pub struct ParamTable<'a>(&'a QueueParams);

impl fmt::Display for ParamTable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.0;
        writeln!(f, "ell = {}, B* = {}", p.ell, p.b_star)?;
        writeln!(
            f,
            "{:>3}  {:>6}  {:<16}  {:<16}  num. of buffered pkt",
            "j", "B_j", "Psi_j", "tag range"
        )?;
        for g in &p.groups {
            writeln!(
                f,
                "{:>3}  {:>6}  {:<16}  {:<16}  <= {}",
                g.j,
                g.buffer,
                g.tags.to_string(),
                g.tag_range_bound().to_string(),
                g.occupancy_bound()
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buffers(p: &QueueParams) -> Vec<u64> {
        p.groups().iter().map(|g| g.buffer).collect()
    }

    fn tag_sets(p: &QueueParams) -> Vec<(u64, u64)> {
        p.groups().iter().map(|g| (g.tags.lo, g.tags.hi)).collect()
    }

    #[test]
    fn ell_five_matches_table() {
        let p = QueueParams::new(5).unwrap();
        assert_eq!(buffers(&p), [1, 1, 2, 4, 8, 4, 2, 1, 1]);
        assert_eq!(
            tag_sets(&p),
            [
                (1, 1),
                (2, 3),
                (4, 7),
                (8, 15),
                (16, 31),
                (32, 39),
                (40, 43),
                (44, 45),
                (46, 46)
            ]
        );
        assert_eq!(p.b_star(), 46);
        assert_eq!(p.group_count(), 9);
    }

    #[test]
    fn ell_one_collapses_to_single_group() {
        let p = QueueParams::new(1).unwrap();
        assert_eq!(buffers(&p), [1]);
        assert_eq!(tag_sets(&p), [(1, 1)]);
        assert_eq!(p.b_star(), 1);
    }

    #[test]
    fn ell_two() {
        let p = QueueParams::new(2).unwrap();
        assert_eq!(buffers(&p), [1, 1, 1]);
        assert_eq!(tag_sets(&p), [(1, 1), (2, 3), (4, 4)]);
        assert_eq!(p.b_star(), 4);
    }

    #[test]
    fn rejects_zero_and_oversized_ell() {
        assert_eq!(
            QueueParams::new(0),
            Err(Error::EllTooSmall { ell: 0, min: 1 })
        );
        assert!(matches!(
            QueueParams::new(41),
            Err(Error::EllTooLarge { .. })
        ));
        assert!(QueueParams::with_max_ell(62, 100).is_ok());
        assert!(QueueParams::with_max_ell(63, 100).is_err());
    }

    #[test]
    fn group_for_tag_examples() {
        let p = QueueParams::new(5).unwrap();
        assert_eq!(p.group_for_tag(16), Ok(5));
        assert_eq!(p.group_for_tag(1), Ok(1));
        assert_eq!(p.group_for_tag(46), Ok(9));
        assert!(p.group_for_tag(0).is_err());
        assert_eq!(
            p.group_for_tag(47),
            Err(Error::TagOutOfRange {
                tag: 47,
                b_star: 46
            })
        );
        for ell in 1..=12 {
            assert_eq!(QueueParams::new(ell).unwrap().group_for_tag(1), Ok(1));
        }
    }

    #[test]
    fn tag_sets_tile_one_to_b_star() {
        for ell in 1..=32 {
            let p = QueueParams::new(ell).unwrap();
            let mut next = 1;
            for g in p.groups() {
                assert_eq!(g.tags.lo, next, "ell={ell} j={}", g.j);
                next = g.tags.hi + 1;
            }
            assert_eq!(next - 1, p.b_star());
            assert_eq!(p.b_star(), p.groups().last().unwrap().tags.hi);
        }
    }

    #[test]
    fn tag_set_sizes_relate_to_buffers() {
        for ell in 1..=32 {
            let p = QueueParams::new(ell).unwrap();
            let last = p.group_count();
            for g in p.groups() {
                let expect = if g.j == 1 || g.j == last {
                    g.buffer
                } else {
                    2 * g.buffer
                };
                assert_eq!(g.tags.size(), expect, "ell={ell} j={}", g.j);
            }
        }
    }

    // The two inequalities the collision-free argument leans on.
    #[test]
    fn neighbour_tag_sets_cover_buffer() {
        for ell in 1..=32 {
            let p = QueueParams::new(ell).unwrap();
            let n = p.group_count();
            for j in 2..=n {
                assert!(p.buffer(j) <= p.tag_set(j - 1).size(), "ell={ell} j={j}");
            }
            for j in 1..n {
                assert!(p.buffer(j) <= p.tag_set(j + 1).size(), "ell={ell} j={j}");
            }
        }
    }

    #[test]
    fn group_for_tag_inverts_membership() {
        for ell in 1..=12 {
            let p = QueueParams::new(ell).unwrap();
            for g in p.groups() {
                for tag in g.tags.lo..=g.tags.hi {
                    assert_eq!(p.group_for_tag(tag), Ok(g.j));
                }
            }
        }
        // Spot-check the boundaries at larger ell without a full scan.
        for ell in 13..=40 {
            let p = QueueParams::new(ell).unwrap();
            for g in p.groups() {
                assert_eq!(p.group_for_tag(g.tags.lo), Ok(g.j));
                assert_eq!(p.group_for_tag(g.tags.hi), Ok(g.j));
            }
        }
    }

    #[test]
    fn tag_range_bound_stays_inside_queue() {
        for ell in 1..=32 {
            let p = QueueParams::new(ell).unwrap();
            for g in p.groups() {
                let r = g.tag_range_bound();
                assert!(r.lo >= 1 && r.hi <= p.b_star(), "ell={ell} j={}", g.j);
            }
        }
    }

    #[test]
    fn table_columns_for_ell_five() {
        let p = QueueParams::new(5).unwrap();
        let ranges: Vec<String> = p
            .groups()
            .iter()
            .map(|g| g.tag_range_bound().to_string())
            .collect();
        assert_eq!(
            ranges,
            [
                "{1}",
                "⟨2,3⟩",
                "⟨3,8⟩",
                "⟨5,18⟩",
                "⟨9,38⟩",
                "⟨29,42⟩",
                "⟨39,44⟩",
                "⟨44,45⟩",
                "{46}"
            ]
        );
        let bounds: Vec<u64> = p.groups().iter().map(|g| g.occupancy_bound()).collect();
        assert_eq!(bounds, [1, 2, 5, 11, 23, 11, 5, 2, 1]);
    }
}
