use serde::{Deserialize, Serialize};

use super::direction::invariant_set;
use super::{InvariantSet, Member, RationalError};
use crate::billiard::{Billiard, PhasePoint};
use crate::iet::{Iet, SaddleVerdict};
use crate::polygon::Polygon;

/// Coordinates on `[0, 1)` for the strips of an invariant set.
///
/// Strips are concatenated in `(side, theta)` order. Each strip gets width proportional to
/// its flux `length * cos(theta)`, so the directional billiard map is a translation on
/// pieces. Within a strip the coordinate runs against `s` for members of sign `+` and with
/// `s` for sign `-`, which keeps the map orientation preserving.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IetChart {
    pub set: InvariantSet,
    offsets: Vec<f64>,
    widths: Vec<f64>,
}

impl IetChart {
    pub fn new(poly: &Polygon<f64>, set: InvariantSet) -> Self {
        let flux: Vec<f64> = set.strips.iter().map(|s| poly.side_length(s.side) * s.theta.cos()).collect();
        let total: f64 = flux.iter().sum();
        let widths: Vec<f64> = flux.iter().map(|f| f / total).collect();
        let mut offsets = Vec::with_capacity(widths.len() + 1);
        let mut acc = 0.0;
        for w in &widths {
            offsets.push(acc);
            acc += w;
        }
        offsets.push(1.0);
        Self { set, offsets, widths }
    }

    pub fn len(&self) -> usize {
        self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths.is_empty()
    }

    /// `[start, end)` of strip `idx`.
    pub fn strip_range(&self, idx: usize) -> (f64, f64) {
        (self.offsets[idx], self.offsets[idx + 1])
    }

    pub fn strip_of(&self, x: f64) -> usize {
        let i = self.offsets.partition_point(|&o| o <= x);
        i.saturating_sub(1).min(self.len() - 1)
    }

    fn local_from_s(&self, idx: usize, s: f64) -> f64 {
        if self.set.strips[idx].member.sign > 0 { 1.0 - s } else { s }
    }

    pub fn x_in_strip(&self, idx: usize, s: f64) -> f64 {
        let (lo, hi) = self.strip_range(idx);
        let local = self.local_from_s(idx, s);
        if local <= 0.0 {
            lo
        } else if local >= 1.0 {
            hi
        } else {
            lo + local * self.widths[idx]
        }
    }

    /// Chart coordinate of a phase point travelling in direction `member`.
    pub fn x_of(&self, u: &PhasePoint<f64>, member: Member) -> Option<f64> {
        self.set.strip_index(u.side, member).map(|i| self.x_in_strip(i, u.s))
    }

    /// Phase point and direction member at `x`.
    pub fn phase(&self, x: f64) -> (PhasePoint<f64>, Member) {
        let idx = self.strip_of(x);
        let strip = self.set.strips[idx];
        let local = ((x - self.offsets[idx]) / self.widths[idx]).clamp(0.0, 1.0);
        let s = if strip.member.sign > 0 { 1.0 - local } else { local };
        (PhasePoint::new(strip.side, s, strip.theta), strip.member)
    }

    pub fn to_phase(&self, x: f64) -> PhasePoint<f64> {
        self.phase(x).0
    }

    /// Chart intervals of the points on `side` with `s` in `(s_lo, s_hi)` and `theta` in
    /// `(th_lo, th_hi)`, ascending.
    pub fn rect_intervals(&self, side: usize, s_lo: f64, s_hi: f64, th_lo: f64, th_hi: f64) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self
            .set
            .strips
            .iter()
            .enumerate()
            .filter(|(_, st)| st.side == side && st.theta > th_lo && st.theta < th_hi)
            .map(|(i, _)| {
                let a = self.x_in_strip(i, s_lo);
                let b = self.x_in_strip(i, s_hi);
                (a.min(b), a.max(b))
            })
            .filter(|(a, b)| b > a)
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionalIet {
    pub iet: Iet<f64>,
    pub chart: IetChart,
}

impl DirectionalIet {
    /// Breakpoints strictly inside a strip: points that fly into a corner. Strip ends are
    /// corners themselves and are excluded.
    pub fn corner_preimages(&self) -> Vec<usize> {
        let bps = self.iet.breakpoints();
        (1..self.iet.len())
            .filter(|&i| {
                let s = self.chart.strip_of(bps[i]);
                let (lo, hi) = self.chart.strip_range(s);
                bps[i] - lo > 1e-12 && hi - bps[i] > 1e-12
            })
            .collect()
    }

    /// Saddle connections of the directional flow: a corner's outgoing orbit reaching a
    /// point that flies into a corner. Reaching a strip end only means bouncing inside a
    /// corner and is not counted.
    pub fn has_saddle_connection(&self, horizon: usize, eps: f64) -> SaddleVerdict {
        self.iet.has_saddle_connection_to(&self.corner_preimages(), horizon, eps)
    }
}

fn backward_exit(poly: &Polygon<f64>, v: usize, d: crate::geom::Vec2<f64>) -> Option<(usize, f64)> {
    let k = poly.k();
    let o = poly.vertex(v);
    let mut best: Option<(usize, f64, f64)> = None;
    for j in (0..k).filter(|&j| j != v && j != (v + k - 1) % k) {
        let (a, b) = poly.side(j);
        let e = b - a;
        let den = d.cross(e);
        if den.abs() < 1e-300 {
            continue;
        }
        let t = (a - o).cross(e) / den;
        let u = (a - o).cross(d) / den;
        if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) && best.map_or(true, |(_, bt, _)| t < bt) {
            best = Some((j, t, u));
        }
    }
    best.map(|(j, _, u)| (j, u))
}

/// The directional billiard map on the invariant set of `xi`, written as an interval
/// exchange in the coordinates of [`IetChart`].
pub fn directional_iet(poly: &Polygon<f64>, xi: f64) -> Result<DirectionalIet, RationalError> {
    let set = invariant_set(poly, xi)?;
    let chart = IetChart::new(poly, set);
    let b = Billiard::new(poly);
    let eps = 1e-9 * poly.diameter();
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
    for (idx, strip) in chart.set.strips.iter().enumerate() {
        let d = chart.set.class.unit(strip.member);
        let mut cuts = vec![0.0, 1.0];
        for v in 0..poly.k() {
            if !poly.contains(poly.vertex(v) - d * eps) {
                continue;
            }
            // points of this strip that fly into corner v
            if let Some((side, u)) = backward_exit(poly, v, -d) {
                if side != strip.side {
                    continue;
                }
                if u <= 1e-9 || u >= 1.0 - 1e-9 {
                    return Err(RationalError::ExceptionalDirectionDetected { corner: v });
                }
                cuts.push(u);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let u = PhasePoint::new(strip.side, mid, strip.theta);
            let next = b.step(&u).map_err(|_| RationalError::ExceptionalDirectionDetected { corner: usize::MAX })?;
            let m2 = chart.set.bounce(strip.member, next.side);
            let j = chart.set.strip_index(next.side, m2).ok_or(RationalError::InconsistentMirrors)?;
            let shift = chart.x_in_strip(j, next.s) - chart.x_in_strip(idx, mid);
            let (a, c) = (chart.x_in_strip(idx, w[0]), chart.x_in_strip(idx, w[1]));
            pieces.push((a.min(c), a.max(c), shift));
        }
    }
    pieces.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut bps = vec![0.0];
    let mut trs = Vec::new();
    for (_, hi, t) in pieces {
        bps.push(hi);
        trs.push(t);
    }
    *bps.last_mut().unwrap() = 1.0;
    let iet = Iet::new(bps, trs)?;
    Ok(DirectionalIet { iet, chart })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn push_forward_matches_billiard() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for poly in [Polygon::unit_square(), Polygon::pi8_right_triangle(), Polygon::equilateral()] {
            let d = directional_iet(&poly, 0.3819).unwrap();
            let b = Billiard::new(&poly);
            let mut checked = 0;
            for _ in 0..1000 {
                let x: f64 = rng.gen();
                let (u, m) = d.chart.phase(x);
                let Ok(v) = b.step(&u) else { continue };
                let y = d.iet.evaluate(x).unwrap();
                let (w, m2) = d.chart.phase(y);
                assert_eq!(m2, d.chart.set.bounce(m, v.side));
                assert!(w.dist(&v) < 1e-9, "{w:?} vs {v:?}");
                checked += 1;
            }
            assert!(checked > 990);
        }
    }

    #[test]
    fn square_bottom_return_is_rotation() {
        // unfolded, the square is a 2x2 torus; slope a gives return shift 2/a on a circle of
        // length 2 through the bottom side
        let sq = Polygon::unit_square();
        let xi: f64 = 1.2;
        let d = directional_iet(&sq, xi).unwrap();
        let bottom: Vec<usize> = (0..d.chart.len()).filter(|&i| d.chart.set.strips[i].side == 0).collect();
        assert_eq!(bottom.len(), 2);
        let (lo, _) = d.chart.strip_range(bottom[0]);
        let (_, hi) = d.chart.strip_range(bottom[1]);
        let width = hi - lo;
        let rho = (1.0 / xi.tan()).rem_euclid(1.0);
        let mut x = lo + 0.123 * width;
        let start = x;
        let mut y = d.iet.evaluate(x).unwrap();
        while !(y >= lo && y < hi) {
            y = d.iet.evaluate(y).unwrap();
        }
        x = y;
        let shift = ((x - start) / width).rem_euclid(1.0);
        assert!((shift - rho).abs() < 1e-9 || (shift - (1.0 - rho)).abs() < 1e-9, "{shift} vs {rho}");
    }

    #[test]
    fn lengths_sum_to_one() {
        let d = directional_iet(&Polygon::pi8_right_triangle(), 0.2).unwrap();
        let total: f64 = d.iet.breakpoints().windows(2).map(|w| w[1] - w[0]).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn corner_bounces_are_not_connections() {
        let sq = Polygon::unit_square();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let d = directional_iet(&sq, golden.atan()).unwrap();
        assert!(!d.has_saddle_connection(10_000, 1e-10).is_found());
        let d = directional_iet(&sq, 0.5f64.atan()).unwrap();
        assert!(d.has_saddle_connection(100, 1e-10).is_found());
    }

    #[test]
    fn square_of_map_keeps_direction_parity() {
        // every bounce is a reflection, so f^2 maps strips of sign + to strips of sign +
        let d = directional_iet(&Polygon::pi8_right_triangle(), 0.2).unwrap();
        let t2 = d.iet.power(2).unwrap();
        let sign = |x: f64| d.chart.set.strips[d.chart.strip_of(x)].member.sign;
        for i in 0..1000 {
            let x = (i as f64 + 0.5) / 1000.0;
            assert_eq!(sign(t2.evaluate(x).unwrap()), sign(x));
            assert_ne!(sign(d.iet.evaluate(x).unwrap()), sign(x));
        }
    }
}
