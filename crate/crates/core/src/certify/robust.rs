use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cover::CoverCell;
use super::witness::{witness_margins, WitnessReport};
use crate::billiard::{Billiard, PhasePoint, TimeDirection};
use crate::geom::Vec2;
use crate::polygon::Polygon;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    pub delta: f64,
    pub witnesses: usize,
    /// Witness pairs valid on the perturbed table as they are.
    pub survived_exact: usize,
    /// Valid as they are or after re-aiming.
    pub survived: usize,
    pub exact_rate: f64,
    pub rate: f64,
    /// Set when the perturbation destroyed the polygon.
    pub polygon_invalid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub seed: u64,
    pub rows: Vec<SurvivalRow>,
}

impl RobustnessReport {
    /// Survival rates never increase with `delta` (rows in ascending `delta`).
    pub fn is_monotone(&self) -> bool {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.delta.partial_cmp(&b.delta).unwrap());
        rows.windows(2).all(|w| w[1].rate <= w[0].rate)
    }
}

/// Image of `x` under the billiard flow on `q` forced through the sides of `word`, each side
/// extended to a full line. Agrees with `f^n` while the orbit really follows `word` and stays
/// smooth in `x` when it does not.
fn forced_image(q: &Polygon<f64>, x: &PhasePoint<f64>, word: &[usize]) -> Option<PhasePoint<f64>> {
    let mut p = x.position(q);
    let mut d = x.direction(q);
    for &w in word {
        let (a, b) = q.side(w);
        let e = b - a;
        let den = d.cross(e);
        if den.abs() < 1e-300 {
            return None;
        }
        let t = (a - p).cross(e) / den;
        if t <= 0.0 {
            return None;
        }
        p = p + d * t;
        d = d.reflect_dir(q.tangent(w));
    }
    Some(PhasePoint::from_point_dir(q, *word.last()?, p, d))
}

/// Newton iteration (finite difference Jacobian in `(s, theta)`) on the forced map, moving
/// `x` until its image is `target`.
fn newton(q: &Polygon<f64>, x: &PhasePoint<f64>, word: &[usize], target: &PhasePoint<f64>) -> Option<PhasePoint<f64>> {
    let g = |p: &PhasePoint<f64>| forced_image(q, p, word);
    let mut cur = *x;
    for _ in 0..20 {
        let img = g(&cur)?;
        let r = [target.s - img.s, target.theta - img.theta];
        if r[0].abs().max(r[1].abs()) < 1e-14 {
            return Some(cur);
        }
        let h = 1e-7;
        let ps = g(&PhasePoint { s: cur.s + h, ..cur })?;
        let pt = g(&PhasePoint { theta: cur.theta + h, ..cur })?;
        let j = [[(ps.s - img.s) / h, (pt.s - img.s) / h], [(ps.theta - img.theta) / h, (pt.theta - img.theta) / h]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !det.is_normal() {
            return None;
        }
        let ds = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
        let dt = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        cur = PhasePoint { s: cur.s + ds, theta: cur.theta + dt, ..cur };
    }
    Some(cur)
}

/// Moves `x` so that on `q` its orbit follows the `p`-itinerary of `x` and ends in
/// `image_cell` at time `n`, with `x` still in `cell`. The image is held fixed while the table
/// is deformed from `p` to `q` in small steps; if that is not enough the target slides towards
/// the centre of `image_cell`.
fn reaim(p: &Polygon<f64>, q: &Polygon<f64>, x: &PhasePoint<f64>, n: usize, cell: &CoverCell, image_cell: &CoverCell) -> Option<PhasePoint<f64>> {
    const STAGES: usize = 16;
    let orbit = Billiard::new(p).orbit(x, n, TimeDirection::Forward);
    if n == 0 || orbit.points.len() != n {
        return None;
    }
    let word: Vec<usize> = orbit.points.iter().map(|u| u.side).collect();
    let orig = orbit.points[n - 1];
    let mut y = *x;
    for k in 1..=STAGES {
        let lam = k as f64 / STAGES as f64;
        let verts: Vec<Vec2<f64>> = p.vertices().iter().zip(q.vertices()).map(|(&a, &b)| a + (b - a) * lam).collect();
        let mid = Polygon::from_vertices(&verts).ok()?;
        y = newton(&mid, &y, &word, &orig)?;
    }
    let bq = Billiard::new(q);
    let centre = image_cell.rect().at(0.5, 0.5);
    [0.0, 0.25, 0.5, 0.75, 1.0].iter().find_map(|&lam| {
        let target = PhasePoint { s: orig.s + lam * (centre.s - orig.s), theta: orig.theta + lam * (centre.theta - orig.theta), ..orig };
        let z = newton(q, &y, &word, &target)?;
        let img = bq.iterate(&z, n).ok()?;
        (cell.margin(&z) > 0.0 && image_cell.margin(&img) > 0.0).then_some(z)
    })
}

/// Does the witness survive on `q`: `(as it is, possibly after re-aiming)`.
fn survives(p: &Polygon<f64>, q: &Polygon<f64>, w: &WitnessReport) -> (bool, bool) {
    if witness_margins(q, &w.quad, &w.a, &w.b, w.n).is_some_and(|m| m.iter().all(|&x| x > 0.0)) {
        return (true, true);
    }
    let a = reaim(p, q, &w.a, w.n, &w.quad[0], &w.quad[2]);
    let b = reaim(p, q, &w.b, w.n, &w.quad[1], &w.quad[3]);
    let ok = match (a, b) {
        (Some(a), Some(b)) => witness_margins(q, &w.quad, &a, &b, w.n).is_some_and(|m| m.iter().all(|&x| x > 0.0)),
        _ => false,
    };
    (false, ok)
}

/// Re-verifies witness pairs on `perturb(P, delta)` for each `delta`. Every perturbation
/// uses the generator seeded with `seed`, so the tables differ only in scale.
pub fn robustness_demo(poly: &Polygon<f64>, witnesses: &[WitnessReport], deltas: &[f64], seed: u64) -> RobustnessReport {
    let rows = deltas
        .iter()
        .map(|&delta| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let total = witnesses.len();
            let rate = |k: usize| if total == 0 { 1.0 } else { k as f64 / total as f64 };
            match poly.perturb(delta, &mut rng) {
                Ok(q) => {
                    let res: Vec<(bool, bool)> = {
                        use rayon::prelude::*;
                        witnesses.par_iter().map(|w| survives(poly, &q, w)).collect()
                    };
                    let exact = res.iter().filter(|r| r.0).count();
                    let any = res.iter().filter(|r| r.1).count();
                    SurvivalRow {
                        delta,
                        witnesses: total,
                        survived_exact: exact,
                        survived: any,
                        exact_rate: rate(exact),
                        rate: rate(any),
                        polygon_invalid: false,
                    }
                }
                Err(_) => SurvivalRow {
                    delta,
                    witnesses: total,
                    survived_exact: 0,
                    survived: 0,
                    exact_rate: 0.0,
                    rate: 0.0,
                    polygon_invalid: true,
                },
            }
        })
        .collect();
    RobustnessReport { seed, rows }
}
