//! Symbolic coding of billiard orbits by the labels of the sides they visit, and the
//! phase-space locus of periodic codes computed in the unfolded plane.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::billiard::{Billiard, PhasePoint, Singular};
use crate::geom::{Isometry, Vec2};
use crate::polygon::Polygon;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolicError {
    #[error("empty word")]
    EmptyWord,
    #[error("symbol {symbol} outside 1..={k}")]
    InvalidSymbol { symbol: usize, k: usize },
    #[error("orbit undefined at step {step}: {reason}")]
    OrbitUndefined { step: usize, reason: Singular },
    #[error("no direction closes the unfolding of this word")]
    InconsistentWord,
    #[error("locus width {0:e} below resolution")]
    NumericallyDegenerate(f64),
    #[error("cannot parse word: {0}")]
    Parse(String),
}

/// Finite block of a code. `base_index` is the position of time 0 inside `symbols`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    pub symbols: Vec<usize>,
    pub base_index: usize,
}

impl Word {
    pub fn new(symbols: Vec<usize>, k: usize) -> Result<Self, SymbolicError> {
        if symbols.is_empty() {
            return Err(SymbolicError::EmptyWord);
        }
        if let Some(&symbol) = symbols.iter().find(|&&s| s == 0 || s > k) {
            return Err(SymbolicError::InvalidSymbol { symbol, k });
        }
        Ok(Self { symbols, base_index: 0 })
    }

    /// Comma separated labels, e.g. `"1,2,3"`.
    pub fn parse(text: &str, k: usize) -> Result<Self, SymbolicError> {
        let symbols = text
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| SymbolicError::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(symbols, k)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Symbols from time 0 onwards.
    pub fn forward(&self) -> &[usize] {
        &self.symbols[self.base_index..]
    }

    /// Left shift: time 1 becomes time 0.
    pub fn shift(&self) -> Word {
        if self.base_index + 1 < self.symbols.len() {
            Word { symbols: self.symbols.clone(), base_index: self.base_index + 1 }
        } else {
            Word { symbols: Vec::new(), base_index: 0 }
        }
    }

    /// Does some cyclic rotation repeat a symbol back to back?
    pub fn has_cyclic_repeat(&self) -> bool {
        let n = self.symbols.len();
        (0..n).any(|i| self.symbols[i] == self.symbols[(i + 1) % n])
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Why a code stopped early. `after` is the time of the last symbol recorded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CodeStop {
    CornerHit { after: usize, corner: usize },
    GrazingTangency { after: usize },
    InvalidPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Code {
    pub word: Word,
    pub forward_stop: Option<CodeStop>,
    pub backward_stop: Option<CodeStop>,
}

fn stop_from(after: usize, s: Singular) -> CodeStop {
    match s {
        Singular::CornerHit { corner } => CodeStop::CornerHit { after, corner },
        Singular::GrazingTangency => CodeStop::GrazingTangency { after },
        Singular::InvalidPoint => CodeStop::InvalidPoint,
    }
}

/// Side labels of `f^i(u)` for `i` in `[-n_bwd, n_fwd]`, truncated at singularities.
pub fn code<T: Real>(b: &Billiard<T>, u: &PhasePoint<T>, n_fwd: usize, n_bwd: usize) -> Code {
    if !u.is_valid(b.polygon()) {
        return Code {
            word: Word { symbols: Vec::new(), base_index: 0 },
            forward_stop: Some(CodeStop::InvalidPoint),
            backward_stop: Some(CodeStop::InvalidPoint),
        };
    }
    let mut back = Vec::new();
    let mut backward_stop = None;
    let mut cur = *u;
    for i in 0..n_bwd {
        match b.inverse_step(&cur) {
            Ok(p) => {
                back.push(p.label());
                cur = p;
            }
            Err(e) => {
                backward_stop = Some(stop_from(i, e));
                break;
            }
        }
    }
    let base_index = back.len();
    back.reverse();
    let mut symbols = back;
    symbols.push(u.label());
    let mut forward_stop = None;
    cur = *u;
    for i in 0..n_fwd {
        match b.step(&cur) {
            Ok(p) => {
                symbols.push(p.label());
                cur = p;
            }
            Err(e) => {
                forward_stop = Some(stop_from(i, e));
                break;
            }
        }
    }
    Code { word: Word { symbols, base_index }, forward_stop, backward_stop }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyReport {
    pub checked: usize,
    /// First time index where `code(f(u))` and `shift(code(u))` disagree.
    pub first_mismatch: Option<usize>,
}

impl ConjugacyReport {
    pub fn passed(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Compares the code of `f(u)` with the shifted code of `u` on `n` symbols.
pub fn check_conjugacy<T: Real>(b: &Billiard<T>, u: &PhasePoint<T>, n: usize) -> Result<ConjugacyReport, SymbolicError> {
    let cu = code(b, u, n, 0);
    if let Some(stop) = cu.forward_stop {
        let (step, reason) = undefined(stop);
        return Err(SymbolicError::OrbitUndefined { step, reason });
    }
    let fu = b.step(u).map_err(|reason| SymbolicError::OrbitUndefined { step: 1, reason })?;
    let cf = code(b, &fu, n - 1, 0);
    if let Some(stop) = cf.forward_stop {
        let (step, reason) = undefined(stop);
        return Err(SymbolicError::OrbitUndefined { step: step + 1, reason });
    }
    let shifted = cu.word.shift();
    let lhs = cf.word.forward();
    let rhs = shifted.forward();
    let first_mismatch = (0..n).find(|&i| lhs.get(i) != rhs.get(i));
    Ok(ConjugacyReport { checked: n, first_mismatch })
}

fn undefined(stop: CodeStop) -> (usize, Singular) {
    match stop {
        CodeStop::CornerHit { after, corner } => (after + 1, Singular::CornerHit { corner }),
        CodeStop::GrazingTangency { after } => (after + 1, Singular::GrazingTangency),
        CodeStop::InvalidPoint => (0, Singular::InvalidPoint),
    }
}

// ---------------------------------------------------------------------------
// Unfolding

/// Reflected copies along a side sequence `s_0, s_1, ..., s_m`: returns the images
/// `g_{k-1}(side s_k)` for `k = 1..=m` and the final isometry `g_m`, where
/// `g_0 = id` and `g_k = g_{k-1} ∘ R_{s_k}`.
pub fn unfold<T: Real>(poly: &Polygon<T>, sides: &[usize]) -> (Vec<(Vec2<T>, Vec2<T>)>, Isometry<T>) {
    let mut g = Isometry::identity();
    let mut segs = Vec::with_capacity(sides.len().saturating_sub(1));
    for &s in &sides[1..] {
        let (a, b) = poly.side(s);
        segs.push((g.apply(a), g.apply(b)));
        g = g.compose(&Isometry::reflection(a, b));
    }
    (segs, g)
}

/// Range of `s` on side `side` for which the line `x(s) + t d` separates the ends of every
/// segment, i.e. crosses all of them.
fn threading_range<T: Real>(poly: &Polygon<T>, side: usize, d: Vec2<T>, segs: &[(Vec2<T>, Vec2<T>)]) -> (T, T) {
    let (a, b) = poly.side(side);
    let denom = d.cross(b - a);
    let mut lo = T::zero();
    let mut hi = T::one();
    for &(p, q) in segs {
        let sp = d.cross(p - a) / denom;
        let sq = d.cross(q - a) / denom;
        lo = lo.max(sp.min(sq));
        hi = hi.min(sp.max(sq));
    }
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "parity", rename_all = "snake_case")]
pub enum PeriodClass {
    /// Every point has period `period`.
    Even { period: usize },
    /// The midpoint has period `midpoint_period`, the other points twice that.
    Odd { midpoint_period: usize, generic_period: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CodeLocus<T = f64> {
    /// Open interval `s_min < s < s_max` on a side at constant angle.
    HorizontalInterval { side: usize, theta: T, s_min: T, s_max: T, class: PeriodClass },
    SinglePoint { point: PhasePoint<T> },
    Empty,
}

impl<T: Real> CodeLocus<T> {
    pub fn midpoint(&self) -> Option<PhasePoint<T>> {
        match *self {
            CodeLocus::HorizontalInterval { side, theta, s_min, s_max, .. } => {
                Some(PhasePoint::new(side, (s_min + s_max) / (T::one() + T::one()), theta))
            }
            CodeLocus::SinglePoint { point } => Some(point),
            CodeLocus::Empty => None,
        }
    }

    /// Point at relative position `f` in `(0, 1)` across the interval.
    pub fn at(&self, f: T) -> Option<PhasePoint<T>> {
        match *self {
            CodeLocus::HorizontalInterval { side, theta, s_min, s_max, .. } => {
                Some(PhasePoint::new(side, s_min + (s_max - s_min) * f, theta))
            }
            CodeLocus::SinglePoint { point } => Some(point),
            CodeLocus::Empty => None,
        }
    }
}

/// Phase points on side `w_1` whose orbit realizes `w` repeated forever.
pub fn periodic_code_locus<T: Real>(b: &Billiard<T>, w: &Word) -> Result<CodeLocus<T>, SymbolicError> {
    let poly = b.polygon();
    let n = w.len();
    if n == 0 {
        return Err(SymbolicError::EmptyWord);
    }
    if let Some(&symbol) = w.symbols.iter().find(|&&s| s == 0 || s > poly.k()) {
        return Err(SymbolicError::InvalidSymbol { symbol, k: poly.k() });
    }
    if w.has_cyclic_repeat() {
        return Err(SymbolicError::InconsistentWord);
    }
    let reps = if n % 2 == 0 { 1 } else { 2 };
    let mut sides: Vec<usize> = Vec::with_capacity(reps * n + 1);
    for _ in 0..reps {
        sides.extend(w.symbols.iter().map(|s| s - 1));
    }
    sides.push(w.symbols[0] - 1);
    let (segs, g) = unfold(poly, &sides);
    let scale = poly.diameter();
    if g.linear_defect() > T::tol(1e-9) || g.t.norm() <= T::tol(1e-12) * scale {
        return Err(SymbolicError::InconsistentWord);
    }
    let side = sides[0];
    let d = g.t.normalized();
    if d.dot(poly.normal(side)) <= T::zero() {
        return Ok(CodeLocus::Empty);
    }
    let theta = d.dot(poly.tangent(side)).atan2(d.dot(poly.normal(side)));
    let (lo, hi) = threading_range(poly, side, d, &segs);
    let width = hi - lo;
    let res = T::tol(1e-12);
    if width <= -res {
        return Ok(CodeLocus::Empty);
    }
    if width < res {
        return Err(SymbolicError::NumericallyDegenerate(width.as_f64()));
    }
    let class = if n % 2 == 0 {
        PeriodClass::Even { period: n }
    } else {
        PeriodClass::Odd { midpoint_period: n, generic_period: 2 * n }
    };
    let locus = CodeLocus::HorizontalInterval { side, theta, s_min: lo, s_max: hi, class };
    // The constraints are exact for convex tables; elsewhere confirm with the billiard map.
    let mid = locus.midpoint().unwrap();
    let c = code(b, &mid, n - 1, 0);
    if c.forward_stop.is_some() || c.word.symbols != w.symbols {
        return Ok(CodeLocus::Empty);
    }
    Ok(locus)
}

/// Least `m <= max` with `f^m(u)` within `tol` of `u`.
pub fn least_period<T: Real>(b: &Billiard<T>, u: &PhasePoint<T>, max: usize, tol: T) -> Option<usize> {
    let mut cur = *u;
    for m in 1..=max {
        cur = b.step(&cur).ok()?;
        if cur.dist(u) <= tol {
            return Some(m);
        }
    }
    None
}

/// Does the forward code of `u` start with `w` and stay defined for `horizon` steps?
pub fn in_cylinder<T: Real>(b: &Billiard<T>, w: &Word, u: &PhasePoint<T>, horizon: usize) -> bool {
    let c = code(b, u, horizon.max(w.len() - 1), 0);
    c.forward_stop.is_none() && c.word.symbols.starts_with(&w.symbols)
}

/// Deterministic sample of the cylinder `{u : c(u)_i = w_i, 0 <= i < |w|}`: one row of
/// angles per sample, each contributing the midpoint of its threading interval.
pub fn cylinder_members<T: Real>(b: &Billiard<T>, w: &Word, samples: usize, horizon: usize) -> Vec<PhasePoint<T>> {
    let poly = b.polygon();
    if w.is_empty() || w.symbols.iter().any(|&s| s == 0 || s > poly.k()) {
        return Vec::new();
    }
    if w.symbols.windows(2).any(|p| p[0] == p[1]) {
        return Vec::new();
    }
    let sides: Vec<usize> = w.symbols.iter().map(|s| s - 1).collect();
    let (segs, _) = unfold(poly, &sides);
    let side = sides[0];
    let mut out = Vec::new();
    let two = T::one() + T::one();
    for i in 0..samples {
        let f = (T::lit(i as f64) + T::lit(0.5)) / T::lit(samples as f64);
        let theta = (f * two - T::one()) * T::FRAC_PI_2();
        let d = poly.normal(side) * theta.cos() + poly.tangent(side) * theta.sin();
        let (lo, hi) = threading_range(poly, side, d, &segs);
        if hi - lo <= T::tol(1e-12) {
            continue;
        }
        let u = PhasePoint::new(side, (lo + hi) / two, theta);
        if in_cylinder(b, w, &u, horizon) {
            out.push(u);
        }
    }
    out
}
