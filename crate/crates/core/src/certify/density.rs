use serde::{Deserialize, Serialize};

use super::cover::{build_cover, CoverCell};
use crate::billiard::{Billiard, PhasePoint};
use crate::polygon::Polygon;
use crate::rational::{invariant_set, RationalError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DensityVerdict {
    AllCellsHit,
    MissedCells { cells: Vec<CoverCell> },
}

impl DensityVerdict {
    pub fn all_hit(&self) -> bool {
        matches!(self, DensityVerdict::AllCellsHit)
    }
}

/// Does every cell of the level-`M` cover meet the invariant set of `xi`? Strips span whole
/// sides, so a cell is met exactly when a strip angle lies strictly inside its angle range.
pub fn density_check(poly: &Polygon<f64>, xi: f64, level: u32) -> Result<DensityVerdict, RationalError> {
    let set = invariant_set(poly, xi)?;
    let missed: Vec<CoverCell> = build_cover(poly, level)
        .into_iter()
        .filter(|c| {
            let (lo, hi) = c.theta_range();
            !set.strips_on(c.side).any(|s| s.theta > lo && s.theta < hi)
        })
        .collect();
    Ok(if missed.is_empty() { DensityVerdict::AllCellsHit } else { DensityVerdict::MissedCells { cells: missed } })
}

/// Smallest `n <= n_max` at which the grid sample of `u` has points landing in `u` and in
/// `v`.
pub fn petersen_check(poly: &Polygon<f64>, u: &CoverCell, v: &CoverCell, n_max: usize, samples: usize) -> Option<usize> {
    let b = Billiard::new(poly);
    let side = (samples as f64).sqrt().ceil().max(1.0) as usize;
    let rect = u.rect();
    let mut pts: Vec<Option<PhasePoint<f64>>> = (0..side * side)
        .map(|idx| {
            let (a, c) = (idx / side, idx % side);
            Some(rect.at((a as f64 + 0.5) / side as f64, (c as f64 + 0.5) / side as f64))
        })
        .collect();
    for n in 1..=n_max {
        let (mut in_u, mut in_v) = (false, false);
        for p in pts.iter_mut() {
            *p = p.and_then(|q| b.step(&q).ok());
            if let Some(q) = p {
                in_u |= u.contains(q);
                in_v |= v.contains(q);
            }
        }
        if in_u && in_v {
            return Some(n);
        }
    }
    None
}
