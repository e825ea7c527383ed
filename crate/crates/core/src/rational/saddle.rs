use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::direction::mirror_indices;
use super::{DirectionClass, RationalError};
use crate::geom::{point_segment_dist, Isometry, Vec2};
use crate::polygon::Polygon;

/// Billiard segment from corner to corner. Corners are vertex indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleConnection {
    pub start_corner: usize,
    pub end_corner: usize,
    /// Unit direction leaving the start corner.
    pub direction: Vec2<f64>,
    /// Length in the unfolding.
    pub length: f64,
    pub bounce_count: usize,
}

/// Result of following a ray from a corner with mirror reflections.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerTrace {
    /// Corner reached (or nearly reached) and its distance from the path.
    pub corner: Option<(usize, f64)>,
    pub length: f64,
    pub bounces: usize,
    pub final_direction: Vec2<f64>,
}

/// First exit of the ray `o + t d` (`t > 0`) through a side not in `skip`.
fn ray_exit(poly: &Polygon<f64>, o: Vec2<f64>, d: Vec2<f64>, skip: &[usize]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for j in (0..poly.k()).filter(|j| !skip.contains(j)) {
        let (a, b) = poly.side(j);
        let e = b - a;
        let den = d.cross(e);
        if den.abs() < 1e-300 {
            continue;
        }
        let t = (a - o).cross(e) / den;
        let u = (a - o).cross(d) / den;
        if t > 1e-14 && (-1e-9..=1.0 + 1e-9).contains(&u) && best.map_or(true, |(_, bt)| t < bt) {
            best = Some((j, t));
        }
    }
    best
}

/// Follows the billiard trajectory leaving `corner` in direction `d` for total length
/// `max_len`, reporting the first corner passed within `miss(length)` of the path.
pub fn trace_from_corner(
    poly: &Polygon<f64>,
    corner: usize,
    d: Vec2<f64>,
    max_len: f64,
    miss: &dyn Fn(f64) -> f64,
) -> CornerTrace {
    let k = poly.k();
    let mut o = poly.vertex(corner);
    let mut d = d.normalized();
    let mut skip = vec![(corner + k - 1) % k, corner];
    let mut travelled = 0.0;
    let mut bounces = 0;
    while travelled < max_len {
        let Some((side, t)) = ray_exit(poly, o, d, &skip) else {
            break;
        };
        let seg_end = o + d * t;
        // nearest corner along this segment, ordered by position on the segment
        let mut hit: Option<(usize, f64, f64)> = None;
        for v in 0..k {
            if bounces == 0 && v == corner {
                continue;
            }
            let p = poly.vertex(v);
            let along = (p - o).dot(d).clamp(0.0, t);
            let dist = point_segment_dist(p, o, seg_end);
            if travelled + along > max_len + 1e-12 {
                continue;
            }
            if dist <= miss(travelled + along) && hit.map_or(true, |(_, a, _)| along < a) {
                hit = Some((v, along, dist));
            }
        }
        if let Some((v, along, dist)) = hit {
            return CornerTrace {
                corner: Some((v, dist)),
                length: travelled + along,
                bounces,
                final_direction: d,
            };
        }
        travelled += t;
        let n = poly.normal(side);
        d = d - n * (2.0 * d.dot(n));
        o = seg_end;
        skip = vec![side];
        bounces += 1;
    }
    CornerTrace { corner: None, length: travelled.min(max_len), bounces, final_direction: d }
}

/// Unfolded copy being explored: its placement, the sub-wedge of directions (angles relative
/// to the corner's reference direction) still alive, and the side it was entered through.
struct Copy {
    g: Isometry<f64>,
    lo: f64,
    hi: f64,
    entry: Option<usize>,
    depth: usize,
}

fn rel_angle(reference: Vec2<f64>, v: Vec2<f64>) -> f64 {
    reference.cross(v).atan2(reference.dot(v))
}

/// All saddle connections of unfolded length at most `l_max`, found by developing the
/// polygon along wedges of directions from each corner, then confirmed by re-tracing.
/// Reverse pairs are identified; sorted by length.
pub fn saddle_connections(poly: &Polygon<f64>, l_max: f64) -> Vec<SaddleConnection> {
    let k = poly.k();
    let ang_eps = 1e-11;
    let mut found: Vec<SaddleConnection> = Vec::new();
    for c in 0..k {
        let apex = poly.vertex(c);
        let t_out = poly.tangent(c);
        let t_in = -poly.tangent((c + k - 1) % k);
        // angles measured counterclockwise from the outgoing side
        let reference = t_out;
        let wedge = rel_angle(reference, t_in).rem_euclid(TAU);
        let mut stack = vec![Copy { g: Isometry::identity(), lo: 0.0, hi: wedge, entry: None, depth: 0 }];
        while let Some(cp) = stack.pop() {
            let first = cp.entry.is_none();
            let inside = |a: f64| {
                if first {
                    a >= cp.lo - ang_eps && a <= cp.hi + ang_eps
                } else {
                    a > cp.lo + ang_eps && a < cp.hi - ang_eps
                }
            };
            let ang = |p: Vec2<f64>| {
                let a = rel_angle(reference, p - apex);
                if a < -1.0 { a + TAU } else { a }
            };
            for v in 0..k {
                if first && v == c {
                    continue;
                }
                let p = cp.g.apply(poly.vertex(v));
                let r = p.dist(apex);
                if r <= l_max + 1e-12 && r > 1e-12 && inside(ang(p)) {
                    found.push(SaddleConnection {
                        start_corner: c,
                        end_corner: v,
                        direction: (p - apex).normalized(),
                        length: r,
                        bounce_count: cp.depth,
                    });
                }
            }
            for e in 0..k {
                if Some(e) == cp.entry || (first && (e == c || e == (c + k - 1) % k)) {
                    continue;
                }
                let (a, b) = poly.side(e);
                let (pa, pb) = (cp.g.apply(a), cp.g.apply(b));
                if point_segment_dist(apex, pa, pb) > l_max {
                    continue;
                }
                let (aa, ab) = (ang(pa), ang(pb));
                let lo = aa.min(ab).max(cp.lo);
                let hi = aa.max(ab).min(cp.hi);
                if hi - lo <= 2.0 * ang_eps {
                    continue;
                }
                let g = cp.g.compose(&Isometry::reflection(a, b));
                stack.push(Copy { g, lo, hi, entry: Some(e), depth: cp.depth + 1 });
            }
        }
    }
    let tube = 1e-9 * poly.diameter();
    let mut verified: Vec<(SaddleConnection, (usize, i64, usize, i64))> = Vec::new();
    for sc in found {
        let tr = trace_from_corner(poly, sc.start_corner, sc.direction, sc.length + tube, &|_| tube);
        let ok = matches!(tr.corner, Some((v, _)) if v == sc.end_corner)
            && tr.bounces == sc.bounce_count
            && (tr.length - sc.length).abs() <= 1e-9 * poly.diameter().max(sc.length);
        if !ok {
            continue;
        }
        let full = (TAU * 1e8).round() as i64;
        let q = |v: Vec2<f64>| ((v.angle().rem_euclid(TAU) * 1e8).round() as i64) % full;
        let fwd = (sc.start_corner, q(sc.direction));
        let back = (sc.end_corner, q(-tr.final_direction));
        let key = if fwd <= back { (fwd.0, fwd.1, back.0, back.1) } else { (back.0, back.1, fwd.0, fwd.1) };
        verified.push((sc, key));
    }
    verified.sort_by(|a, b| {
        a.0.length
            .partial_cmp(&b.0.length)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.0.start_corner.cmp(&b.0.start_corner))
    });
    let mut keys: Vec<(usize, i64, usize, i64)> = Vec::new();
    let mut out = Vec::new();
    for (sc, key) in verified {
        if keys.contains(&key) {
            continue;
        }
        keys.push(key);
        out.push(sc);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ExceptionalVerdict {
    Exceptional { witness: SaddleConnection },
    NoneFoundUpTo { l_max: f64 },
}

impl ExceptionalVerdict {
    pub fn is_exceptional(&self) -> bool {
        matches!(self, ExceptionalVerdict::Exceptional { .. })
    }
}

/// Horizon-bounded exceptionality: traces every corner ray whose direction lies in the
/// orbit of `xi` for length `l_max`. A corner passed at path length `l` within
/// `angle_tol * l` (plus a floor relative to the diameter) is reported as a saddle
/// connection in a direction within `angle_tol` of the orbit.
pub fn is_exceptional(poly: &Polygon<f64>, xi: f64, l_max: f64, angle_tol: f64) -> Result<ExceptionalVerdict, RationalError> {
    let (n, phi0, _) = mirror_indices(poly)?;
    let class = DirectionClass::new(n, xi, phi0);
    let k = poly.k();
    let floor = 1e-12 * poly.diameter();
    let miss = move |l: f64| angle_tol * l + floor;
    let mut best: Option<SaddleConnection> = None;
    for c in 0..k {
        let t_out = poly.tangent(c);
        let t_in = -poly.tangent((c + k - 1) % k);
        let wedge = rel_angle(t_out, t_in).rem_euclid(TAU);
        for m in class.members() {
            let d = class.unit(m);
            let a = rel_angle(t_out, d).rem_euclid(TAU);
            let on_edge = a.min(TAU - a) < 1e-12 || (a - wedge).abs() < 1e-12;
            if !(on_edge || a < wedge) {
                continue;
            }
            let tr = trace_from_corner(poly, c, d, l_max, &miss);
            if let Some((v, _)) = tr.corner {
                let sc = SaddleConnection {
                    start_corner: c,
                    end_corner: v,
                    direction: d,
                    length: tr.length,
                    bounce_count: tr.bounces,
                };
                if best.as_ref().map_or(true, |b| sc.length < b.length) {
                    best = Some(sc);
                }
            }
        }
    }
    Ok(match best {
        Some(witness) => ExceptionalVerdict::Exceptional { witness },
        None => ExceptionalVerdict::NoneFoundUpTo { l_max },
    })
}
