//! Construction cost in crossbar ports and fiber delay lines.
//!
//! Each 4-to-1 multiplexer of group `j` is realized as a delayed-loss
//! multiplexer with buffer `B_j' = 4^k − 1 ≥ B_j`. Such a multiplexer costs a
//! `(3k + 4)`-port switch and `3k` FDLs; merging every switch of the
//! construction into one crossbar adds two ports for departure and loss.

use num_bigint::BigUint;
use num_traits::{One, Pow};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::MUXES_PER_GROUP;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    /// Side of the square crossbar.
    pub switch_size: u64,
    pub fdl_count: u64,
    /// Buffer in packets.
    #[serde(serialize_with = "serialize_decimal")]
    pub buffer: BigUint,
}

fn serialize_decimal<S: serde::Serializer>(
    v: &BigUint,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

/// Smallest `ell` the cost formulas cover.
pub const MIN_COST_ELL: u32 = 2;

/// Cost of an `n`-to-1 delayed-loss multiplexer with buffer `n^k − 1`.
pub fn mux_construction_cost(n: u64, k: u64) -> Result<CostReport> {
    if n < 2 {
        return Err(Error::TooFewInputs(n as usize));
    }
    if k == 0 {
        return Err(Error::ZeroCapacity);
    }
    let buffer = BigUint::from(n).pow(k) - BigUint::one();
    Ok(CostReport {
        switch_size: (n - 1) * k + n,
        fdl_count: (n - 1) * k,
        buffer,
    })
}

/// Exponent `k` with `B_j' = 4^k − 1`.
fn relaxed_exponent(j: u64, ell: u64) -> u64 {
    if j == 1 || j == 2 * ell - 1 {
        1
    } else if j <= ell {
        (j - 1).div_ceil(2)
    } else {
        (2 * ell - j - 1).div_ceil(2)
    }
}

/// Relaxed per-multiplexer buffer `B_j'` of group `j`.
pub fn relaxed_buffer(j: u64, ell: u64) -> Result<BigUint> {
    if ell == 0 {
        return Err(Error::EllTooSmall { ell: 0, min: 1 });
    }
    let groups = 2 * ell - 1;
    if j == 0 || j > groups {
        return Err(Error::GroupOutOfRange {
            j: j as usize,
            groups: groups as usize,
        });
    }
    Ok(BigUint::from(4u32).pow(relaxed_exponent(j, ell)) - BigUint::one())
}

/// `B* = 3·2^(ℓ−1) − 2` as a big integer.
pub fn b_star(ell: u64) -> BigUint {
    (BigUint::from(3u32) << (ell - 1) as usize) - BigUint::from(2u32)
}

fn check_ell(ell: u64) -> Result<()> {
    if ell < MIN_COST_ELL as u64 {
        return Err(Error::EllTooSmall {
            ell: ell as u32,
            min: MIN_COST_ELL,
        });
    }
    Ok(())
}

/// Closed forms: switch `(9ℓ² + 39ℓ)/2 + 8`, FDLs `9(ℓ² − ℓ)/2 + 18`.
pub fn total_cost(ell: u64) -> Result<CostReport> {
    check_ell(ell)?;
    Ok(CostReport {
        switch_size: (9 * ell * ell + 39 * ell) / 2 + 8,
        fdl_count: 9 * (ell * ell - ell) / 2 + 18,
        buffer: b_star(ell),
    })
}

/// The same totals obtained by summing the per-multiplexer costs over all
/// `3(2ℓ − 1)` multiplexers.
pub fn total_cost_by_sum(ell: u64) -> Result<CostReport> {
    check_ell(ell)?;
    let (mut switch_size, mut fdl_count) = (2, 0);
    for j in 1..=2 * ell - 1 {
        let mux = mux_construction_cost(4, relaxed_exponent(j, ell))?;
        switch_size += MUXES_PER_GROUP as u64 * mux.switch_size;
        fdl_count += MUXES_PER_GROUP as u64 * mux.fdl_count;
    }
    Ok(CostReport {
        switch_size,
        fdl_count,
        buffer: b_star(ell),
    })
}

/// Largest `ell` whose construction fits in `budget` FDLs.
pub fn max_ell_for_budget(budget: u64) -> Result<(u64, CostReport)> {
    let cheapest = total_cost(MIN_COST_ELL as u64)?;
    if budget < cheapest.fdl_count {
        return Err(Error::BudgetTooSmall {
            budget,
            min: cheapest.fdl_count,
        });
    }
    let mut best = (MIN_COST_ELL as u64, cheapest);
    for ell in MIN_COST_ELL as u64 + 1.. {
        let c = total_cost(ell)?;
        if c.fdl_count > budget {
            break;
        }
        best = (ell, c);
    }
    Ok(best)
}
