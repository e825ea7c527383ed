use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cover::CoverCell;
use crate::billiard::{Billiard, PhasePoint};
use crate::iet::Iet;
use crate::polygon::Polygon;
use crate::rational::{directional_iet, find_periodic_near, is_exceptional, DirectionalIet};

/// Search limits for one quadruple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessBudget {
    /// Largest transfer time.
    pub ell: usize,
    /// Largest period.
    pub m: usize,
    /// Largest number of turns around the periodic orbit.
    pub j: usize,
    /// Random directions tried per stage.
    pub xi_tries: usize,
    /// Saddle connection horizon for the direction choice.
    pub l_max: f64,
    /// Directions within this angle of a saddle connection found up to `l_max` are avoided.
    pub xi_avoid: f64,
    /// Interval pieces kept while pushing sets through an interval exchange.
    pub piece_cap: usize,
    /// Longest witness time `n = m j + ell` the recipe looks for.
    pub n_max: usize,
    /// Second directions tried per recipe run.
    pub xi_prime_tries: usize,
    /// Overlaps narrower than this (chart units) are only used when nothing wider turns up.
    pub min_overlap: f64,
    /// Points per cell and horizon of the sampling search.
    pub fallback_samples: usize,
    pub fallback_n: usize,
    /// Recipe runs per quadruple while the best witness so far is longer than `target_n` or
    /// passes closer than `target_clearance` to a corner.
    pub attempts: usize,
    pub target_n: usize,
    pub target_clearance: f64,
}

impl Default for WitnessBudget {
    fn default() -> Self {
        Self {
            ell: 10_000,
            m: 1_000,
            j: 1_000,
            xi_tries: 256,
            l_max: 1_000.0,
            xi_avoid: 1e-6,
            piece_cap: 1_024,
            n_max: 4_000,
            xi_prime_tries: 16,
            min_overlap: 1e-4,
            fallback_samples: 64,
            fallback_n: 5_000,
            attempts: 8,
            target_n: 300,
            target_clearance: 5e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// No usable direction for `A` and `C`.
    ChooseXi,
    /// No transfer time `ell` from `A` to `C`.
    Transfer,
    /// No periodic point with the transfer property.
    Periodic,
    /// No usable second direction for `B`.
    ChooseXiPrime,
    /// No number of turns `j` bringing `B` into `D`.
    Turns,
    /// The pure sampling search came up empty.
    Sampling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Directional interval exchanges and a periodic orbit.
    Recipe,
    /// Orbit sampling (the density hypothesis fails, or the recipe ran out of budget).
    Sampling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub quad: [CoverCell; 4],
    pub n: usize,
    pub ell: usize,
    pub m: usize,
    pub j: usize,
    pub a: PhasePoint<f64>,
    pub b: PhasePoint<f64>,
    pub xi: Option<f64>,
    pub xi_prime: Option<f64>,
    pub method: Method,
    /// Stage at which the recipe gave up before falling back to sampling.
    pub recipe_failure: Option<Stage>,
    /// Margins of `a` in `A`, `b` in `B`, `f^n a` in `C`, `f^n b` in `D`.
    pub margins: [f64; 4],
    /// Smaller of the two orbit clearances up to time `n`.
    pub clearance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WitnessOutcome {
    Found(WitnessReport),
    NotFound { stage: Stage, recipe_failure: Option<Stage> },
}

impl WitnessOutcome {
    pub fn report(&self) -> Option<&WitnessReport> {
        match self {
            WitnessOutcome::Found(r) => Some(r),
            WitnessOutcome::NotFound { .. } => None,
        }
    }
}

/// Membership margins of a witness pair, recomputed with the plain billiard map.
pub fn witness_margins(poly: &Polygon<f64>, quad: &[CoverCell; 4], a: &PhasePoint<f64>, b: &PhasePoint<f64>, n: usize) -> Option<[f64; 4]> {
    let bil = Billiard::new(poly);
    let fa = bil.iterate(a, n).ok()?;
    let fb = bil.iterate(b, n).ok()?;
    Some([quad[0].margin(a), quad[1].margin(b), quad[2].margin(&fa), quad[3].margin(&fb)])
}

/// Smallest distance, over the first `n` bounces of `x`, between the trajectory line and the
/// endpoints of the side it hits.
pub fn orbit_clearance(poly: &Polygon<f64>, x: &PhasePoint<f64>, n: usize) -> Option<f64> {
    let bil = Billiard::new(poly);
    let mut cur = *x;
    let mut best = f64::INFINITY;
    for _ in 0..n {
        cur = bil.step(&cur).ok()?;
        let c = cur.s.min(1.0 - cur.s) * poly.side_length(cur.side) * cur.theta.cos();
        best = best.min(c);
    }
    Some(best)
}

fn clearance_pair(poly: &Polygon<f64>, a: &PhasePoint<f64>, b: &PhasePoint<f64>, n: usize) -> f64 {
    let ca = orbit_clearance(poly, a, n).unwrap_or(0.0);
    let cb = orbit_clearance(poly, b, n).unwrap_or(0.0);
    ca.min(cb)
}

/// Independent check of a report: memberships within `tol` and `n = m j + ell`.
pub fn verify_report(poly: &Polygon<f64>, r: &WitnessReport, tol: f64) -> bool {
    r.n == r.m * r.j + r.ell
        && witness_margins(poly, &r.quad, &r.a, &r.b, r.n).is_some_and(|m| m.iter().all(|&x| x >= -tol))
}

/// Interval `[lo, hi)` that is the image of `[lo - shift, hi - shift)`.
#[derive(Clone, Copy, Debug)]
struct Piece {
    lo: f64,
    hi: f64,
    shift: f64,
}

fn push(iet: &Iet<f64>, pieces: &[Piece], cap: usize) -> Vec<Piece> {
    let bps = iet.breakpoints();
    let trs = iet.translations();
    let mut out = Vec::with_capacity(pieces.len() + 4);
    for p in pieces {
        let mut i = iet.interval_of(p.lo);
        let mut lo = p.lo;
        while lo < p.hi && i < trs.len() {
            let hi = p.hi.min(bps[i + 1]);
            if hi > lo {
                out.push(Piece { lo: lo + trs[i], hi: hi + trs[i], shift: p.shift + trs[i] });
            }
            lo = hi;
            i += 1;
        }
    }
    if out.len() > cap {
        out.sort_by(|a, b| (b.hi - b.lo).partial_cmp(&(a.hi - a.lo)).unwrap());
        out.truncate(cap);
    }
    out
}

/// Widest overlap of the pieces with the target intervals: `(width, preimage point)`.
fn best_overlap(pieces: &[Piece], targets: &[(f64, f64)]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for p in pieces {
        for &(a, b) in targets {
            let lo = p.lo.max(a);
            let hi = p.hi.min(b);
            if hi > lo && best.map_or(true, |(w, _)| hi - lo > w) {
                best = Some((hi - lo, 0.5 * (lo + hi) - p.shift));
            }
        }
    }
    best
}

fn start_pieces(intervals: &[(f64, f64)]) -> Vec<Piece> {
    intervals.iter().map(|&(lo, hi)| Piece { lo, hi, shift: 0.0 }).collect()
}

fn cell_intervals(d: &DirectionalIet, c: &CoverCell) -> Vec<(f64, f64)> {
    let r = c.rect();
    d.chart.rect_intervals(r.side, r.s_lo, r.s_hi, r.th_lo, r.th_hi)
}

/// A non-exceptional direction (up to the budget horizon) whose invariant set meets every
/// cell in `cells`.
fn choose_direction<R: Rng + ?Sized>(poly: &Polygon<f64>, cells: &[&CoverCell], budget: &WitnessBudget, rng: &mut R) -> Option<(f64, DirectionalIet)> {
    for _ in 0..budget.xi_tries {
        let xi = rng.gen::<f64>() * std::f64::consts::TAU;
        let Ok(d) = directional_iet(poly, xi) else { continue };
        if cells.iter().any(|c| cell_intervals(&d, c).is_empty()) {
            continue;
        }
        match is_exceptional(poly, xi, budget.l_max, budget.xi_avoid) {
            Ok(v) if !v.is_exceptional() => return Some((xi, d)),
            _ => continue,
        }
    }
    None
}

/// First time `t <= horizon` (with `t >= t_min`) at which the pushed pieces overlap the
/// targets, preferring overlaps of at least `min_overlap`. `step` advances the pieces one
/// unit of time. Returns `(t, preimage point)`.
fn first_overlap(
    mut pieces: Vec<Piece>,
    targets: &[(f64, f64)],
    t_min: usize,
    horizon: usize,
    min_overlap: f64,
    step: &dyn Fn(&[Piece]) -> Vec<Piece>,
) -> Option<(usize, f64)> {
    let mut fallback: Option<(f64, usize, f64)> = None;
    for t in 0..=horizon {
        if t >= t_min {
            if let Some((w, x)) = best_overlap(&pieces, targets) {
                if w >= min_overlap {
                    return Some((t, x));
                }
                if fallback.map_or(true, |(fw, _, _)| w > fw) {
                    fallback = Some((w, t, x));
                }
            }
        }
        if t < horizon {
            pieces = step(&pieces);
        }
    }
    fallback.map(|(_, t, x)| (t, x))
}

/// One pass of the recipe, looking only for `n < n_cap`.
/// Clearance counts this much against cell margins when choosing the periodic point.
const CLEARANCE_WEIGHT: f64 = 10.0;

fn recipe_once<R: Rng + ?Sized>(poly: &Polygon<f64>, quad: &[CoverCell; 4], budget: &WitnessBudget, n_cap: usize, rng: &mut R) -> Result<WitnessReport, Stage> {
    let [a_cell, b_cell, c_cell, d_cell] = quad;
    let bil = Billiard::new(poly);

    // transfer: f^ell(A ∩ R) meets C
    let (xi, dir) = choose_direction(poly, &[a_cell, c_cell], budget, rng).ok_or(Stage::ChooseXi)?;
    let iet = &dir.iet;
    let step1 = |p: &[Piece]| push(iet, p, budget.piece_cap);
    let (ell, x0) = first_overlap(
        start_pieces(&cell_intervals(&dir, a_cell)),
        &cell_intervals(&dir, c_cell),
        0,
        budget.ell.min(n_cap.saturating_sub(2)),
        budget.min_overlap,
        &step1,
    )
    .ok_or(Stage::Transfer)?;
    let a0 = dir.chart.to_phase(x0);

    // periodic point x in A with f^ell x in C
    let score = |x: &PhasePoint<f64>, period: usize| {
        let Ok(y) = bil.iterate(x, ell) else { return f64::NEG_INFINITY };
        let clear = orbit_clearance(poly, x, ell.max(period)).unwrap_or(0.0);
        a_cell.margin(x).min(c_cell.margin(&y)).min(CLEARANCE_WEIGHT * clear)
    };
    let m_cap = budget.m.min(n_cap.saturating_sub(ell + 1));
    let periodic = find_periodic_near(&bil, &a0, &score, m_cap).ok_or(Stage::Periodic)?;
    let m = periodic.period;

    // second direction for B, then turns of length m until D is met at time m j + ell
    let mut last = Stage::ChooseXiPrime;
    for _ in 0..budget.xi_prime_tries.max(1) {
        let Some((xi2, dir2)) = choose_direction(poly, &[b_cell, d_cell], budget, rng) else { break };
        let iet2 = &dir2.iet;
        let mut pieces = start_pieces(&cell_intervals(&dir2, b_cell));
        for _ in 0..ell {
            pieces = push(iet2, &pieces, budget.piece_cap);
        }
        let turn = |p: &[Piece]| {
            let mut q = p.to_vec();
            for _ in 0..m {
                q = push(iet2, &q, budget.piece_cap);
            }
            q
        };
        let j_min = usize::from(ell == 0);
        let j_cap = budget.j.min((n_cap - 1 - ell) / m);
        let Some((j, y0)) = first_overlap(pieces, &cell_intervals(&dir2, d_cell), j_min, j_cap, budget.min_overlap, &turn) else {
            last = Stage::Turns;
            continue;
        };
        let b0 = dir2.chart.to_phase(y0);
        let n = m * j + ell;
        let a = periodic.point;
        match witness_margins(poly, quad, &a, &b0, n) {
            Some(margins) if margins.iter().all(|&x| x > 0.0) => {
                let clearance = clearance_pair(poly, &a, &b0, n);
                return Ok(WitnessReport {
                    quad: *quad,
                    n,
                    ell,
                    m,
                    j,
                    a,
                    b: b0,
                    xi: Some(xi),
                    xi_prime: Some(xi2),
                    method: Method::Recipe,
                    recipe_failure: None,
                    margins,
                    clearance,
                })
            }
            _ => last = Stage::Turns,
        }
    }
    Err(last)
}

/// Repeats the recipe with fresh directions and keeps the witness with the largest clearance
/// per step: long orbits and orbits grazing corners are the first to break when the table
/// is perturbed.
fn recipe<R: Rng + ?Sized>(poly: &Polygon<f64>, quad: &[CoverCell; 4], budget: &WitnessBudget, rng: &mut R) -> Result<WitnessReport, Stage> {
    let quality = |r: &WitnessReport| r.clearance / r.n as f64;
    let mut best: Option<WitnessReport> = None;
    let mut first_err = Stage::ChooseXi;
    for attempt in 0..budget.attempts.max(1) {
        if let Some(b) = &best {
            if b.n <= budget.target_n && b.clearance >= budget.target_clearance {
                break;
            }
        }
        let cap = best.as_ref().map_or(budget.n_max, |r| r.n.max(budget.target_n).saturating_mul(2).min(budget.n_max));
        match recipe_once(poly, quad, budget, cap, rng) {
            Ok(r) => {
                if best.as_ref().map_or(true, |b| quality(&r) > quality(b)) {
                    best = Some(r);
                }
            }
            Err(e) if attempt == 0 => first_err = e,
            Err(_) => {}
        }
    }
    best.ok_or(first_err)
}

/// Times `1..=n_max` at which some sample of `from` is inside `to`, with the sample.
fn hitting_times(bil: &Billiard<f64>, from: &CoverCell, to: &CoverCell, samples: usize, n_max: usize) -> Vec<Option<(PhasePoint<f64>, f64)>> {
    let side = (samples as f64).sqrt().ceil().max(1.0) as usize;
    let rect = from.rect();
    let mut hits: Vec<Option<(PhasePoint<f64>, f64)>> = vec![None; n_max + 1];
    for idx in 0..side * side {
        let (a, c) = (idx / side, idx % side);
        let start = rect.at((a as f64 + 0.5) / side as f64, (c as f64 + 0.5) / side as f64);
        let mut cur = start;
        for slot in hits.iter_mut().skip(1) {
            match bil.step(&cur) {
                Ok(v) => cur = v,
                Err(_) => break,
            }
            let margin = to.margin(&cur).min(from.margin(&start));
            if margin > 0.0 && slot.map_or(true, |(_, m)| margin > m) {
                *slot = Some((start, margin));
            }
        }
    }
    hits
}

fn sampling(poly: &Polygon<f64>, quad: &[CoverCell; 4], budget: &WitnessBudget, recipe_failure: Option<Stage>) -> Option<WitnessReport> {
    let bil = Billiard::new(poly);
    let ha = hitting_times(&bil, &quad[0], &quad[2], budget.fallback_samples, budget.fallback_n);
    let hb = hitting_times(&bil, &quad[1], &quad[3], budget.fallback_samples, budget.fallback_n);
    let n = (1..=budget.fallback_n).find(|&n| ha[n].is_some() && hb[n].is_some())?;
    let (a, _) = ha[n].unwrap();
    let (b, _) = hb[n].unwrap();
    let margins = witness_margins(poly, quad, &a, &b, n)?;
    Some(WitnessReport {
        quad: *quad,
        n,
        ell: n,
        m: 0,
        j: 0,
        a,
        b,
        xi: None,
        xi_prime: None,
        method: Method::Sampling,
        recipe_failure,
        margins,
        clearance: clearance_pair(poly, &a, &b, n),
    })
}

/// Searches `n` and points `a in A`, `b in B` with `f^n a in C` and `f^n b in D`. With exact
/// rational angles and `N > M/2` the decomposition `n = m j + ell` is built from directional
/// interval exchanges and a periodic point; otherwise, or if that runs out of budget, orbit
/// sampling is used.
pub fn tm_witness<R: Rng + ?Sized>(poly: &Polygon<f64>, quad: &[CoverCell; 4], budget: &WitnessBudget, rng: &mut R) -> WitnessOutcome {
    let level = quad[0].level;
    let gate = poly.n_p().is_some_and(|n| 2 * n > u64::from(level));
    let recipe_failure = if gate {
        match recipe(poly, quad, budget, rng) {
            Ok(r) => return WitnessOutcome::Found(r),
            Err(stage) => Some(stage),
        }
    } else {
        None
    };
    match sampling(poly, quad, budget, recipe_failure) {
        Some(r) => WitnessOutcome::Found(r),
        None => WitnessOutcome::NotFound { stage: Stage::Sampling, recipe_failure },
    }
}
