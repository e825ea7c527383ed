use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::billiard::PhasePoint;
use crate::polygon::Polygon;
use crate::rational::PhaseRect;

/// Cell `(i/(2M), i/(2M) + 1/M) x (j pi/(2M) - pi/2, j pi/(2M) - pi/2 + pi/M)` over `side`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoverCell {
    /// 0-based side index.
    pub side: usize,
    pub i: u32,
    pub j: u32,
    pub level: u32,
}

impl CoverCell {
    pub fn new(side: usize, i: u32, j: u32, level: u32) -> Self {
        assert!(level >= 1 && i <= 2 * level - 2 && j <= 2 * level - 2, "cell index out of range");
        Self { side, i, j, level }
    }

    pub fn s_range(&self) -> (f64, f64) {
        let m = f64::from(self.level);
        let lo = f64::from(self.i) / (2.0 * m);
        (lo, lo + 1.0 / m)
    }

    pub fn theta_range(&self) -> (f64, f64) {
        let m = f64::from(self.level);
        let lo = f64::from(self.j) * PI / (2.0 * m) - FRAC_PI_2;
        (lo, lo + PI / m)
    }

    pub fn rect(&self) -> PhaseRect {
        let (s_lo, s_hi) = self.s_range();
        let (th_lo, th_hi) = self.theta_range();
        PhaseRect { side: self.side, s_lo, s_hi, th_lo, th_hi }
    }

    /// Open-interior membership.
    pub fn contains(&self, u: &PhasePoint<f64>) -> bool {
        self.rect().contains(u)
    }

    /// Signed distance to the boundary (angles scaled by `1/pi`); positive inside.
    pub fn margin(&self, u: &PhasePoint<f64>) -> f64 {
        self.rect().margin(u)
    }

    /// The cell at level `M/2` containing this one (`M` even).
    pub fn parent(&self) -> Option<CoverCell> {
        if self.level % 2 != 0 {
            return None;
        }
        let half = self.level / 2;
        let top = 2 * half - 2;
        Some(CoverCell::new(self.side, (self.i / 2).min(top), (self.j / 2).min(top), half))
    }

    /// 1-based side label used in reports.
    pub fn label(&self) -> String {
        format!("{}:{}:{}", self.side + 1, self.i, self.j)
    }
}

/// The `(2M-1)^2` half-overlapping cells of every side, ordered by `(side, i, j)`.
pub fn build_cover(poly: &Polygon<f64>, level: u32) -> Vec<CoverCell> {
    assert!(level >= 1, "level must be positive");
    let top = 2 * level - 2;
    let mut out = Vec::with_capacity(poly.k() * ((top + 1) * (top + 1)) as usize);
    for side in 0..poly.k() {
        for i in 0..=top {
            for j in 0..=top {
                out.push(CoverCell::new(side, i, j, level));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let tri = Polygon::equilateral();
        assert_eq!(build_cover(&tri, 1).len(), 3);
        assert_eq!(build_cover(&tri, 2).len(), 27);
        let sq = Polygon::unit_square();
        assert_eq!(build_cover(&sq, 2).len(), 36);
        for c in build_cover(&tri, 2) {
            let (a, b) = c.s_range();
            let (t0, t1) = c.theta_range();
            assert!((b - a - 0.5).abs() < 1e-15 && (t1 - t0 - FRAC_PI_2).abs() < 1e-15);
            assert!(a >= 0.0 && b <= 1.0 && t0 >= -FRAC_PI_2 && t1 <= FRAC_PI_2 + 1e-15);
        }
    }

    #[test]
    fn parent_encloses() {
        for c in build_cover(&Polygon::unit_square(), 4) {
            let p = c.parent().unwrap();
            let (a, b) = c.s_range();
            let (pa, pb) = p.s_range();
            assert!(pa <= a + 1e-15 && b <= pb + 1e-15, "{c:?} {p:?}");
            let (t0, t1) = c.theta_range();
            let (p0, p1) = p.theta_range();
            assert!(p0 <= t0 + 1e-15 && t1 <= p1 + 1e-15);
        }
    }
}
