//! Sets of missing frequency positions, applied uniformly to every block.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dct::{coefficient_bounds, CoeffGrid, DctBasis};
use crate::error::{Error, Result};
use crate::image::IntensityRange;

/// Frequencies `(k, l)` whose coefficients are unknown in every block.
///
/// Positions are kept sorted by `k·N + l`; that order also fixes the order of
/// the unknown-coefficient variables in the linear program.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EraseMask {
    block_size: usize,
    missing: Vec<(usize, usize)>,
}

impl EraseMask {
    pub fn new(block_size: usize, positions: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if block_size < 2 {
            return Err(Error::InvalidBlockSize(block_size));
        }
        let mut missing: Vec<(usize, usize)> = positions.into_iter().collect();
        if let Some(&(k, l)) = missing.iter().find(|&&(k, l)| k >= block_size || l >= block_size) {
            return Err(Error::InvalidMask(format!(
                "position {k}:{l} outside a {block_size}x{block_size} block"
            )));
        }
        missing.sort_by_key(|&(k, l)| k * block_size + l);
        let before = missing.len();
        missing.dedup();
        if missing.len() != before {
            return Err(Error::InvalidMask("duplicate positions".into()));
        }
        let limit = block_size * block_size;
        if missing.len() >= limit {
            return Err(Error::InvalidCount {
                count: missing.len(),
                limit,
            });
        }
        Ok(EraseMask {
            block_size,
            missing,
        })
    }

    pub fn dc_only(block_size: usize) -> Result<Self> {
        Self::new(block_size, [(0, 0)])
    }

    /// Parse a comma-separated `k:l` list such as `0:0,0:1,1:0`.
    pub fn parse_list(block_size: usize, text: &str) -> Result<Self> {
        let mut positions = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, l) = item
                .split_once(':')
                .ok_or_else(|| Error::InvalidMask(format!("expected k:l, got {item:?}")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidMask(format!("bad index in {item:?}")))
            };
            positions.push((parse(k)?, parse(l)?));
        }
        if positions.is_empty() {
            return Err(Error::InvalidMask("empty position list".into()));
        }
        Self::new(block_size, positions)
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.missing
    }

    /// `U`, the number of unknown coefficients per block.
    pub fn len(&self) -> usize {
        self.missing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn contains(&self, k: usize, l: usize) -> bool {
        self.missing.contains(&(k, l))
    }

    pub fn contains_dc(&self) -> bool {
        self.missing.first() == Some(&(0, 0))
    }

    pub fn is_dc_only(&self) -> bool {
        self.missing == [(0, 0)]
    }

    /// Per-block flags indexed `k·N + l`, true where the coefficient is missing.
    pub fn flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.block_size * self.block_size];
        for &(k, l) in &self.missing {
            flags[k * self.block_size + l] = true;
        }
        flags
    }
}

impl fmt::Display for EraseMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, (k, l)) in self.missing.iter().enumerate() {
            if idx > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}:{l}")?;
        }
        Ok(())
    }
}

/// JPEG zigzag traversal of an `N×N` block as `(k, l)` pairs.
pub fn zigzag_order(block_size: usize) -> Vec<(usize, usize)> {
    let n = block_size;
    let mut order = Vec::with_capacity(n * n);
    for s in 0..(2 * n - 1) {
        let k_lo = s.saturating_sub(n - 1);
        let k_hi = s.min(n - 1);
        if s % 2 == 1 {
            order.extend((k_lo..=k_hi).map(|k| (k, s - k)));
        } else {
            order.extend((k_lo..=k_hi).rev().map(|k| (k, s - k)));
        }
    }
    order
}

/// The first `count` zigzag positions.
pub fn most_significant_mask(count: usize, block_size: usize) -> Result<EraseMask> {
    if block_size < 2 {
        return Err(Error::InvalidBlockSize(block_size));
    }
    let limit = block_size * block_size;
    if count == 0 || count >= limit {
        return Err(Error::InvalidCount { count, limit });
    }
    EraseMask::new(block_size, zigzag_order(block_size).into_iter().take(count))
}

/// What to put where a coefficient is missing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillPolicy {
    /// Midpoint of the coefficient's feasible range.
    Midpoint,
    Zero,
}

pub fn apply_mask(
    grid: &CoeffGrid,
    mask: &EraseMask,
    fill: FillPolicy,
    basis: &DctBasis,
    range: IntensityRange,
) -> Result<CoeffGrid> {
    let layout = grid.layout();
    if mask.block_size() != layout.block_size || basis.block_size() != layout.block_size {
        return Err(Error::DimensionMismatch(format!(
            "mask block size {} / basis block size {} vs grid block size {}",
            mask.block_size(),
            basis.block_size(),
            layout.block_size
        )));
    }
    let fills: Vec<((usize, usize), f64)> = mask
        .positions()
        .iter()
        .map(|&(k, l)| {
            let value = match fill {
                FillPolicy::Zero => 0.0,
                FillPolicy::Midpoint => {
                    let (lo, hi) = coefficient_bounds(basis, k, l, range);
                    0.5 * (lo + hi)
                }
            };
            ((k, l), value)
        })
        .collect();
    let mut out = grid.clone();
    for b in 0..layout.block_count() {
        for &((k, l), v) in &fills {
            out.set(b, k, l, v);
        }
    }
    Ok(out)
}
