use serde::{Deserialize, Serialize};

use super::RationalError;
use crate::billiard::{Billiard, PhasePoint};
use crate::polygon::Polygon;
use crate::symbolic::{code, least_period, periodic_code_locus, CodeLocus, PeriodClass, Word};

/// Open rectangle `(s_lo, s_hi) x (th_lo, th_hi)` over one side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRect {
    pub side: usize,
    pub s_lo: f64,
    pub s_hi: f64,
    pub th_lo: f64,
    pub th_hi: f64,
}

impl PhaseRect {
    pub fn contains(&self, u: &PhasePoint<f64>) -> bool {
        u.side == self.side && u.s > self.s_lo && u.s < self.s_hi && u.theta > self.th_lo && u.theta < self.th_hi
    }

    pub fn at(&self, fs: f64, ft: f64) -> PhasePoint<f64> {
        PhasePoint::new(
            self.side,
            self.s_lo + (self.s_hi - self.s_lo) * fs,
            self.th_lo + (self.th_hi - self.th_lo) * ft,
        )
    }

    /// Distance from `u` to the boundary, with angles scaled by `1/pi` to match `s`.
    pub fn margin(&self, u: &PhasePoint<f64>) -> f64 {
        if u.side != self.side {
            return f64::NEG_INFINITY;
        }
        let pi = std::f64::consts::PI;
        (u.s - self.s_lo)
            .min(self.s_hi - u.s)
            .min((u.theta - self.th_lo) / pi)
            .min((self.th_hi - u.theta) / pi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub point: PhasePoint<f64>,
    /// Least period.
    pub period: usize,
    /// Repeating block of the code.
    pub word: Word,
    pub locus: CodeLocus<f64>,
}

const RETURN_TOL: f64 = 1e-9;
/// Samples scoring below this are treated as boundary points.
const MIN_SCORE: f64 = 1e-6;

/// Periodic point near the orbit of `seed`: every return of the orbit to the seed's side at
/// the seed's angle proposes the code block up to that time; its periodic locus is sampled
/// and the sample with the best `score(point, period)` (above a small floor) is certified by
/// re-iteration.
pub fn find_periodic_near(
    b: &Billiard<f64>,
    seed: &PhasePoint<f64>,
    score: &dyn Fn(&PhasePoint<f64>, usize) -> f64,
    budget: usize,
) -> Option<PeriodicOrbit> {
    let c = code(b, seed, budget, 0);
    let labels = &c.word.symbols;
    let mut cur = *seed;
    let mut tried: Vec<Vec<usize>> = Vec::new();
    for m in 1..labels.len() {
        cur = match b.step(&cur) {
            Ok(v) => v,
            Err(_) => break,
        };
        if cur.side != seed.side || (cur.theta - seed.theta).abs() > 1e-7 {
            continue;
        }
        let block = labels[..m].to_vec();
        if tried.contains(&block) {
            continue;
        }
        tried.push(block.clone());
        let Ok(word) = Word::new(block, b.polygon().k()) else { continue };
        let Ok(locus) = periodic_code_locus(b, &word) else { continue };
        let CodeLocus::HorizontalInterval { class, .. } = locus else { continue };
        let (mid_period, generic_period) = match class {
            PeriodClass::Even { period } => (period, period),
            PeriodClass::Odd { midpoint_period, generic_period } => (midpoint_period, generic_period),
        };
        let mid = locus.midpoint().unwrap();
        let mut picks: Vec<(f64, PhasePoint<f64>, usize)> = vec![(score(&mid, mid_period), mid, mid_period)];
        if generic_period <= budget {
            if let Some((sc, p)) = (1..64)
                .filter(|&i| i != 32)
                .map(|i| locus.at(i as f64 / 64.0).unwrap())
                .map(|p| (score(&p, generic_period), p))
                .max_by(|x, y| x.0.partial_cmp(&y.0).unwrap())
            {
                picks.push((sc, p, generic_period));
            }
        }
        picks.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
        for (sc, p, period) in picks {
            if sc > MIN_SCORE && least_period(b, &p, period, RETURN_TOL) == Some(period) {
                return Some(PeriodicOrbit { point: p, period, word, locus: locus.clone() });
            }
        }
    }
    None
}

/// A periodic point inside `target` of least period at most `budget`, found by word search
/// from a grid of seeds in the rectangle.
pub fn find_periodic_orbit(poly: &Polygon<f64>, target: &PhaseRect, budget: usize) -> Result<PeriodicOrbit, RationalError> {
    poly.rationality().map_err(RationalError::NotRational)?;
    let b = Billiard::new(poly);
    let mut seeds = vec![target.at(0.5, 0.5)];
    for i in 1..6 {
        for j in 1..6 {
            seeds.push(target.at(i as f64 / 6.0, j as f64 / 6.0));
        }
    }
    let score = |u: &PhasePoint<f64>, _: usize| target.margin(u);
    seeds
        .iter()
        .find_map(|s| find_periodic_near(&b, s, &score, budget))
        .ok_or(RationalError::NotFound(budget))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn square_perpendicular() {
        let sq = Polygon::unit_square();
        let rect = PhaseRect { side: 0, s_lo: 0.2, s_hi: 0.6, th_lo: -0.3, th_hi: 0.2 };
        let p = find_periodic_orbit(&sq, &rect, 100).unwrap();
        assert_eq!(p.period, 2);
        assert!(p.point.theta.abs() < 1e-12);
    }

    #[test]
    fn square_diamond() {
        let sq = Polygon::unit_square();
        let rect = PhaseRect { side: 0, s_lo: 0.45, s_hi: 0.55, th_lo: FRAC_PI_4 - 0.05, th_hi: FRAC_PI_4 + 0.05 };
        let p = find_periodic_orbit(&sq, &rect, 100).unwrap();
        assert_eq!(p.period, 4);
        assert!((p.point.theta - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn fagnano() {
        let tri = Polygon::equilateral();
        let sixth = FRAC_PI_2 / 3.0;
        let rect = PhaseRect { side: 0, s_lo: 0.45, s_hi: 0.55, th_lo: sixth - 0.05, th_hi: sixth + 0.05 };
        let p = find_periodic_orbit(&tri, &rect, 100).unwrap();
        assert_eq!(p.period, 3);
        let b = Billiard::new(&tri);
        let back = b.iterate(&p.point, p.period).unwrap();
        assert!(back.dist(&p.point) < 1e-8);
    }
}
