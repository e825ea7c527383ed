//! Interval exchange transformations on `[0, 1)`.
//!
//! An [`Iet`] is stored as its breakpoints `0 = b_0 < ... < b_n = 1` and the translation
//! applied on each `[b_i, b_{i+1})`; maps are right-continuous at breakpoints.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IetError {
    #[error("point {0} outside [0, 1)")]
    OutOfDomain(f64),
    #[error("breakpoints must increase from 0 to 1 with one translation per interval")]
    Malformed,
    #[error("image intervals do not tile [0, 1) (defect {0:e})")]
    NotBijective(f64),
    #[error("power needs more than {0} intervals")]
    IntervalBudgetExceeded(usize),
    #[error("power exponent must be nonzero")]
    ZeroPower,
    #[error("need at least 1/delta iterations")]
    InsufficientIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Iet<T = f64> {
    breakpoints: Vec<T>,
    translations: Vec<T>,
}

/// Where a breakpoint orbit was seeded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum Seed {
    /// Orbit of `b_i`.
    Breakpoint(usize),
    /// Orbit of the left limit of the map at `b_i`.
    LeftLimit(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SaddleVerdict {
    Found {
        seed: Seed,
        steps: usize,
        /// Interior breakpoint reached, or `None` when the seed returned to itself.
        target: Option<usize>,
        distance: f64,
        low_confidence: bool,
        trace: Vec<f64>,
    },
    NoneUpTo { horizon: usize },
}

impl SaddleVerdict {
    pub fn is_found(&self) -> bool {
        matches!(self, SaddleVerdict::Found { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Minimality {
    DenseUpTo { delta: f64 },
    Gap { start: f64, end: f64 },
}

/// Interchange format: `{"breakpoints": [...], "translations": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IetJson {
    pub breakpoints: Vec<f64>,
    pub translations: Vec<f64>,
}

const DEFAULT_BUDGET: usize = 1 << 20;

impl<T: Real> Iet<T> {
    pub fn new(breakpoints: Vec<T>, translations: Vec<T>) -> Result<Self, IetError> {
        let n = translations.len();
        if n == 0
            || breakpoints.len() != n + 1
            || breakpoints[0] != T::zero()
            || breakpoints[n] != T::one()
            || breakpoints.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(IetError::Malformed);
        }
        let iet = Self { breakpoints, translations };
        let defect = iet.tiling_defect();
        if defect > T::tol(1e-12) {
            return Err(IetError::NotBijective(defect.as_f64()));
        }
        Ok(iet)
    }

    pub fn identity() -> Self {
        Self { breakpoints: vec![T::zero(), T::one()], translations: vec![T::zero()] }
    }

    /// `x -> x + alpha mod 1` as a 2-interval exchange.
    pub fn rotation(alpha: T) -> Self {
        let a = alpha - alpha.floor();
        if a == T::zero() {
            return Self::identity();
        }
        Self {
            breakpoints: vec![T::zero(), T::one() - a, T::one()],
            translations: vec![a, a - T::one()],
        }
    }

    /// Standard construction: interval `i` (length `lengths[i]`) lands in position
    /// `perm[i]` (1-based) of the image.
    pub fn from_lengths_permutation(lengths: &[T], perm: &[usize]) -> Result<Self, IetError> {
        let n = lengths.len();
        if perm.len() != n || n == 0 {
            return Err(IetError::Malformed);
        }
        let total = lengths.iter().fold(T::zero(), |a, &b| a + b);
        let lens: Vec<T> = lengths.iter().map(|&l| l / total).collect();
        let mut bps = vec![T::zero()];
        for (i, &l) in lens.iter().enumerate() {
            let next = if i + 1 == n { T::one() } else { bps[i] + l };
            bps.push(next);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| perm[i]);
        let mut image_start = vec![T::zero(); n];
        let mut acc = T::zero();
        for &i in &order {
            image_start[i] = acc;
            acc = acc + lens[i];
        }
        let translations = (0..n).map(|i| image_start[i] - bps[i]).collect();
        Self::new(bps, translations)
    }

    pub fn from_json(j: &IetJson) -> Result<Self, IetError> {
        let b = j.breakpoints.iter().map(|&x| T::lit(x)).collect();
        let t = j.translations.iter().map(|&x| T::lit(x)).collect();
        Self::new(b, t)
    }

    pub fn to_json(&self) -> IetJson {
        IetJson {
            breakpoints: self.breakpoints.iter().map(|x| x.as_f64()).collect(),
            translations: self.translations.iter().map(|x| x.as_f64()).collect(),
        }
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn translations(&self) -> &[T] {
        &self.translations
    }

    /// Number of intervals.
    pub fn len(&self) -> usize {
        self.translations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.translations.is_empty()
    }

    /// 1-based rank of each interval's image in the ordering of image intervals.
    pub fn permutation(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            let ia = self.breakpoints[a] + self.translations[a];
            let ib = self.breakpoints[b] + self.translations[b];
            ia.partial_cmp(&ib).unwrap()
        });
        let mut perm = vec![0; self.len()];
        for (rank, &i) in order.iter().enumerate() {
            perm[i] = rank + 1;
        }
        perm
    }

    /// Largest gap or overlap between consecutive sorted image intervals.
    pub fn tiling_defect(&self) -> T {
        let mut imgs: Vec<(T, T)> = (0..self.len())
            .map(|i| {
                let t = self.translations[i];
                (self.breakpoints[i] + t, self.breakpoints[i + 1] + t)
            })
            .collect();
        imgs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut defect = imgs[0].0.abs();
        for w in imgs.windows(2) {
            defect = defect.max((w[1].0 - w[0].1).abs());
        }
        defect.max((imgs[imgs.len() - 1].1 - T::one()).abs())
    }

    /// Index of the interval containing `x`.
    #[inline]
    pub fn interval_of(&self, x: T) -> usize {
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        idx.saturating_sub(1).min(self.len() - 1)
    }

    #[inline]
    fn eval_unchecked(&self, x: T) -> T {
        let y = x + self.translations[self.interval_of(x)];
        clamp_unit(y)
    }

    pub fn evaluate(&self, x: T) -> Result<T, IetError> {
        if !(x >= T::zero() && x < T::one()) {
            return Err(IetError::OutOfDomain(x.as_f64()));
        }
        Ok(self.eval_unchecked(x))
    }

    pub fn inverse(&self) -> Self {
        let mut pieces: Vec<(T, T, T)> = (0..self.len())
            .map(|i| {
                let t = self.translations[i];
                (self.breakpoints[i] + t, self.breakpoints[i + 1] + t, -t)
            })
            .collect();
        pieces.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Self::from_pieces(pieces)
    }

    /// Builds from `(start, end, translation)` pieces listed in domain order, snapping the
    /// outer ends to `0` and `1` and merging equal neighbours.
    fn from_pieces(pieces: Vec<(T, T, T)>) -> Self {
        let same = T::tol(1e-13);
        let sliver = T::tol(1e-14);
        let mut bps: Vec<T> = vec![T::zero()];
        let mut trs: Vec<T> = Vec::new();
        for (_, end, t) in pieces {
            let last = *bps.last().unwrap();
            if end - last <= sliver {
                continue;
            }
            match trs.last() {
                Some(&prev) if (prev - t).abs() <= same => {
                    *bps.last_mut().unwrap() = end;
                }
                _ => {
                    trs.push(t);
                    bps.push(end);
                }
            }
        }
        *bps.last_mut().unwrap() = T::one();
        if trs.is_empty() {
            return Self::identity();
        }
        Self { breakpoints: bps, translations: trs }
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        let mut pieces = Vec::with_capacity(self.len() + other.len());
        for i in 0..other.len() {
            let t = other.translations[i];
            let (lo, hi) = (other.breakpoints[i], other.breakpoints[i + 1]);
            let (ilo, ihi) = (lo + t, hi + t);
            let mut j = self.interval_of(clamp_unit(ilo).max(T::zero()));
            let mut start = lo;
            loop {
                let cut = self.breakpoints[j + 1];
                let end = if cut < ihi && j + 1 < self.len() { cut - t } else { hi };
                pieces.push((start, end, t + self.translations[j]));
                if end >= hi {
                    break;
                }
                start = end;
                j += 1;
            }
        }
        Self::from_pieces(pieces)
    }

    pub fn power(&self, k: i64) -> Result<Self, IetError> {
        self.power_with_budget(k, DEFAULT_BUDGET)
    }

    /// `T^k` by explicit refinement of the interval partition.
    pub fn power_with_budget(&self, k: i64, max_intervals: usize) -> Result<Self, IetError> {
        if k == 0 {
            return Err(IetError::ZeroPower);
        }
        let base = if k > 0 { self.clone() } else { self.inverse() };
        let mut acc = base.clone();
        for _ in 1..k.unsigned_abs() {
            acc = base.compose(&acc);
            if acc.len() > max_intervals {
                return Err(IetError::IntervalBudgetExceeded(max_intervals));
            }
        }
        Ok(acc)
    }

    /// Images of left limits at `b_1, ..., b_n` (those strictly inside `[0, 1)`).
    pub fn left_limit_images(&self) -> Vec<(usize, T)> {
        (1..=self.len())
            .map(|i| (i, self.breakpoints[i] + self.translations[i - 1]))
            .filter(|&(_, y)| y >= T::zero() && y < T::one() - T::tol(1e-15))
            .collect()
    }

    /// Horizon-bounded search for a breakpoint orbit reaching an interior breakpoint (or
    /// returning to its own seed) within `eps`.
    pub fn has_saddle_connection(&self, horizon: usize, eps: T) -> SaddleVerdict {
        let all: Vec<usize> = (1..self.len()).collect();
        self.saddle_search(&all, &|_| true, horizon, eps)
    }

    /// As [`Iet::has_saddle_connection`], with hits counted only at the breakpoints
    /// `b_i, i in targets`. Orbits returning to their own seed are not counted.
    pub fn has_saddle_connection_to(&self, targets: &[usize], horizon: usize, eps: T) -> SaddleVerdict {
        self.saddle_search(targets, &|_| false, horizon, eps)
    }

    fn saddle_search(&self, targets: &[usize], own_counts: &dyn Fn(Seed) -> bool, horizon: usize, eps: T) -> SaddleVerdict {
        let mut targets: Vec<usize> = targets.iter().copied().filter(|&i| i > 0 && i < self.len()).collect();
        targets.sort_unstable();
        targets.dedup();
        let interior: Vec<T> = targets.iter().map(|&i| self.breakpoints[i]).collect();
        let mut seeds: Vec<(Seed, T, usize)> =
            (0..self.len()).map(|i| (Seed::Breakpoint(i), self.breakpoints[i], 0)).collect();
        seeds.extend(self.left_limit_images().into_iter().map(|(i, y)| (Seed::LeftLimit(i), y, 1)));
        let confident = T::tol(1e-13);
        let mut best: Option<(usize, SaddleVerdict)> = None;
        for (seed, start, offset) in seeds {
            let mut x = start;
            let mut trace = vec![x.as_f64()];
            let limit = best.as_ref().map_or(horizon, |(s, _)| *s);
            for step in offset..=limit {
                if step > 0 {
                    if step > offset {
                        x = self.eval_unchecked(x);
                        trace.push(x.as_f64());
                    }
                    let (target, distance) = nearest(&interior, x);
                    let own = (x - start).abs();
                    let hit = if distance <= eps {
                        Some((Some(targets[target]), distance))
                    } else if own <= eps && step > offset && own_counts(seed) {
                        Some((None, own))
                    } else {
                        None
                    };
                    if let Some((target, distance)) = hit {
                        let v = SaddleVerdict::Found {
                            seed,
                            steps: step,
                            target,
                            distance: distance.as_f64(),
                            low_confidence: distance > confident,
                            trace,
                        };
                        if best.as_ref().map_or(true, |(s, _)| step < *s) {
                            best = Some((step, v));
                        }
                        break;
                    }
                }
                if trace.len() > 64 {
                    trace.drain(..trace.len() - 64);
                }
            }
        }
        best.map(|(_, v)| v).unwrap_or(SaddleVerdict::NoneUpTo { horizon })
    }

    /// Forward check on `self`, then the same check on the inverse with the same horizon.
    /// A `Found` from the inverse has its trace in inverse time.
    pub fn has_saddle_connection_two_sided(&self, horizon: usize, eps: T) -> SaddleVerdict {
        match self.has_saddle_connection(horizon, eps) {
            found @ SaddleVerdict::Found { .. } => found,
            SaddleVerdict::NoneUpTo { .. } => self.inverse().has_saddle_connection(horizon, eps),
        }
    }

    /// Orbit density of `x0`: `DenseUpTo` when every point of `[0,1)` is within `delta`
    /// of one of the first `iterations` orbit points, else the largest uncovered gap.
    pub fn minimality_witness(&self, x0: T, iterations: usize, delta: T) -> Result<Minimality, IetError> {
        if !(x0 >= T::zero() && x0 < T::one()) {
            return Err(IetError::OutOfDomain(x0.as_f64()));
        }
        if (iterations as f64) * delta.as_f64() < 1.0 {
            return Err(IetError::InsufficientIterations);
        }
        let mut pts = Vec::with_capacity(iterations);
        let mut x = x0;
        for _ in 0..iterations {
            pts.push(x);
            x = self.eval_unchecked(x);
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let two = T::one() + T::one();
        let last = pts[pts.len() - 1];
        let mut dense = pts[0] <= delta && T::one() - last <= delta;
        // longest empty interval, ends of [0,1) included
        let mut worst = if pts[0] >= T::one() - last { (T::zero(), pts[0]) } else { (last, T::one()) };
        for w in pts.windows(2) {
            if w[1] - w[0] > two * delta {
                dense = false;
            }
            if w[1] - w[0] > worst.1 - worst.0 {
                worst = (w[0], w[1]);
            }
        }
        Ok(if dense {
            Minimality::DenseUpTo { delta: delta.as_f64() }
        } else {
            Minimality::Gap { start: worst.0.as_f64(), end: worst.1.as_f64() }
        })
    }
}

#[inline]
fn clamp_unit<T: Real>(y: T) -> T {
    let below_one = T::one() - T::epsilon() / (T::one() + T::one());
    y.max(T::zero()).min(below_one)
}

/// Index and distance of the sorted value nearest to `x`.
fn nearest<T: Real>(sorted: &[T], x: T) -> (usize, T) {
    if sorted.is_empty() {
        return (0, T::infinity());
    }
    let i = sorted.partition_point(|&b| b < x);
    let mut best = (usize::MAX, T::infinity());
    for j in [i.wrapping_sub(1), i] {
        if let Some(&b) = sorted.get(j) {
            let d = (b - x).abs();
            if d < best.1 {
                best = (j, d);
            }
        }
    }
    best
}
