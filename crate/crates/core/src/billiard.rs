//! The billiard map on the boundary phase space, its inverse, orbits and the flow.
//!
//! A phase point `(side, s, theta)` sits at normalized arclength `s` along `side` and
//! points in the direction `cos(theta) n + sin(theta) t`, where `t` is the side's unit
//! tangent (counterclockwise traversal) and `n` its inward normal.
//!
//! Two independent implementations of one bounce are provided: [`Billiard::step`] ray casts
//! in world coordinates and reflects the direction vector by the mirror law, while
//! [`Billiard::step_unfolded`] works in the frame of the departure side, intersects lines
//! through signed distances and reads the outgoing angle off the straight continuation
//! into the mirrored copy of the polygon. Both share the corner predicate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{point_segment_dist, Vec2};
use crate::polygon::Polygon;
use crate::scalar::{Real, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint<T = f64> {
    /// 0-based side index.
    pub side: usize,
    pub s: T,
    pub theta: T,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(side: usize, s: T, theta: T) -> Self {
        Self { side, s, theta }
    }

    /// 1-based side label.
    pub fn label(&self) -> usize {
        self.side + 1
    }

    pub fn position(&self, poly: &Polygon<T>) -> Vec2<T> {
        let (a, b) = poly.side(self.side);
        a + (b - a) * self.s
    }

    pub fn direction(&self, poly: &Polygon<T>) -> Vec2<T> {
        poly.normal(self.side) * self.theta.cos() + poly.tangent(self.side) * self.theta.sin()
    }

    /// Same base point, angle mirrored about the normal (time reversal).
    pub fn flipped(&self) -> Self {
        Self { theta: -self.theta, ..*self }
    }

    pub fn is_valid(&self, poly: &Polygon<T>) -> bool {
        self.side < poly.k()
            && self.s > T::zero()
            && self.s < T::one()
            && self.theta.abs() < T::FRAC_PI_2()
    }

    /// Phase point on `side` at `point` moving along the unit vector `dir`.
    pub fn from_point_dir(poly: &Polygon<T>, side: usize, point: Vec2<T>, dir: Vec2<T>) -> Self {
        let (a, _) = poly.side(side);
        let s = (point - a).dot(poly.tangent(side)) / poly.side_length(side);
        let theta = dir.dot(poly.tangent(side)).atan2(dir.dot(poly.normal(side)));
        Self { side, s, theta }
    }

    pub fn dist(&self, o: &Self) -> T {
        if self.side != o.side {
            return T::infinity();
        }
        (self.s - o.s).abs().max((self.theta - o.theta).abs())
    }
}

/// Reasons the billiard map is undefined at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum Singular {
    #[error("trajectory runs into corner {corner}")]
    CornerHit { corner: usize },
    #[error("trajectory leaves tangentially to the boundary")]
    GrazingTangency,
    #[error("phase point is outside the open phase space")]
    InvalidPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed { steps: usize },
    CornerHit { step: usize, corner: usize },
    GrazingTangency { step: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitResult<T = f64> {
    pub start: PhasePoint<T>,
    /// `f^1(start), f^2(start), ...` (or the inverse iterates).
    pub points: Vec<PhasePoint<T>>,
    pub termination: Termination,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDirection {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState<T = f64> {
    pub position: Vec2<T>,
    pub direction: Vec2<T>,
    pub time: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Error)]
pub enum FlowError {
    #[error("flow reaches a corner at time {0}")]
    CornerHitBefore(f64),
    #[error("flow becomes tangent to the boundary at time {0}")]
    GrazingBefore(f64),
    #[error("invalid start point or negative time")]
    Invalid,
}

/// First boundary point along a ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit<T = f64> {
    pub side: usize,
    pub point: Vec2<T>,
    /// Distance travelled (the direction is a unit vector).
    pub t: T,
}

#[derive(Clone, Debug)]
pub struct Billiard<'a, T: Real = f64> {
    poly: &'a Polygon<T>,
    tol: Tolerances<T>,
    corner_eps: T,
}

impl<'a, T: Real> Billiard<'a, T> {
    pub fn new(poly: &'a Polygon<T>) -> Self {
        Self::with_tolerances(poly, Tolerances::default())
    }

    pub fn with_tolerances(poly: &'a Polygon<T>, tol: Tolerances<T>) -> Self {
        let corner_eps = tol.corner * poly.diameter();
        Self { poly, tol, corner_eps }
    }

    pub fn polygon(&self) -> &'a Polygon<T> {
        self.poly
    }

    pub fn tolerances(&self) -> &Tolerances<T> {
        &self.tol
    }

    /// Absolute corner tube radius.
    pub fn corner_eps(&self) -> T {
        self.corner_eps
    }

    /// The singular-set predicate: does the segment `[from, to]` pass within the corner
    /// tube of some vertex?
    pub fn corner_on_path(&self, from: Vec2<T>, to: Vec2<T>) -> Option<usize> {
        self.poly
            .vertices()
            .iter()
            .position(|&v| point_segment_dist(v, from, to) < self.corner_eps)
    }

    /// First intersection of the ray `origin + t dir` (`t > 0`) with a side not in `skip`.
    /// Corners along the way are reported as [`Singular::CornerHit`].
    pub fn cast(&self, origin: Vec2<T>, dir: Vec2<T>, skip: &[usize]) -> Result<RayHit<T>, Singular> {
        let poly = self.poly;
        let t_min = self.corner_eps;
        let slack = T::tol(1e-12);
        let mut best: Option<RayHit<T>> = None;
        for j in 0..poly.k() {
            if skip.contains(&j) {
                continue;
            }
            let (a, b) = poly.side(j);
            let e = b - a;
            let denom = dir.cross(e);
            if denom == T::zero() {
                continue;
            }
            let ao = a - origin;
            let t = ao.cross(e) / denom;
            let u = ao.cross(dir) / denom;
            if t > t_min && u >= -slack && u <= T::one() + slack && best.map_or(true, |h| t < h.t) {
                best = Some(RayHit { side: j, point: origin + dir * t, t });
            }
        }
        let hit = best.ok_or(Singular::GrazingTangency)?;
        if let Some(corner) = self.corner_on_path(origin, hit.point) {
            return Err(Singular::CornerHit { corner });
        }
        Ok(hit)
    }

    /// The billiard map.
    pub fn step(&self, u: &PhasePoint<T>) -> Result<PhasePoint<T>, Singular> {
        if !u.is_valid(self.poly) {
            return Err(Singular::InvalidPoint);
        }
        let origin = u.position(self.poly);
        let d = u.direction(self.poly);
        let hit = self.cast(origin, d, &[u.side])?;
        let n = self.poly.normal(hit.side);
        let two = T::one() + T::one();
        let reflected = d - n * (two * d.dot(n));
        self.land(hit.side, hit.point, reflected)
    }

    fn land(&self, side: usize, point: Vec2<T>, dir: Vec2<T>) -> Result<PhasePoint<T>, Singular> {
        let v = PhasePoint::from_point_dir(self.poly, side, point, dir);
        if v.theta.abs() >= T::FRAC_PI_2() - self.tol.angle {
            return Err(Singular::GrazingTangency);
        }
        if v.s <= T::zero() || v.s >= T::one() {
            let corner = if v.s <= T::zero() { side } else { (side + 1) % self.poly.k() };
            return Err(Singular::CornerHit { corner });
        }
        Ok(v)
    }

    /// Inverse of the billiard map through time reversal.
    pub fn inverse_step(&self, v: &PhasePoint<T>) -> Result<PhasePoint<T>, Singular> {
        self.step(&v.flipped()).map(|u| u.flipped())
    }

    pub fn orbit(&self, u: &PhasePoint<T>, n: usize, dir: TimeDirection) -> OrbitResult<T> {
        let mut points = Vec::with_capacity(n);
        let mut cur = *u;
        let mut termination = Termination::Completed { steps: n };
        for i in 1..=n {
            let next = match dir {
                TimeDirection::Forward => self.step(&cur),
                TimeDirection::Backward => self.inverse_step(&cur),
            };
            match next {
                Ok(p) => {
                    points.push(p);
                    cur = p;
                }
                Err(Singular::CornerHit { corner }) => {
                    termination = Termination::CornerHit { step: i, corner };
                    break;
                }
                Err(_) => {
                    termination = Termination::GrazingTangency { step: i };
                    break;
                }
            }
        }
        OrbitResult { start: *u, points, termination }
    }

    /// `f^n(u)`, or the singularity met on the way.
    pub fn iterate(&self, u: &PhasePoint<T>, n: usize) -> Result<PhasePoint<T>, Singular> {
        let mut cur = *u;
        for _ in 0..n {
            cur = self.step(&cur)?;
        }
        Ok(cur)
    }

    /// One bounce computed in the departure side's frame via the mirrored copy.
    pub fn step_unfolded(&self, u: &PhasePoint<T>) -> Result<PhasePoint<T>, Singular> {
        let poly = self.poly;
        if !u.is_valid(poly) {
            return Err(Singular::InvalidPoint);
        }
        let k = poly.k();
        let (a0, _) = poly.side(u.side);
        let t0 = poly.tangent(u.side);
        let n0 = poly.normal(u.side);
        let to_local = |p: Vec2<T>| {
            let d = p - a0;
            Vec2::new(d.dot(t0), d.dot(n0))
        };
        let to_world = |q: Vec2<T>| a0 + t0 * q.x + n0 * q.y;
        let start = Vec2::new(u.s * poly.side_length(u.side), T::zero());
        let dir = Vec2::new(u.theta.sin(), u.theta.cos());
        let slack = T::tol(1e-12);
        let mut best: Option<(usize, T, T)> = None;
        for j in (0..k).filter(|&j| j != u.side) {
            let (a, b) = poly.side(j);
            let (la, lb) = (to_local(a), to_local(b));
            let len = la.dist(lb);
            let normal = (lb - la).perp() * (T::one() / len);
            let g0 = (start - la).dot(normal);
            let g1 = dir.dot(normal);
            if g1 == T::zero() {
                continue;
            }
            let tau = -g0 / g1;
            if tau <= self.corner_eps {
                continue;
            }
            let hit = start + dir * tau;
            let param = (hit - la).dot(lb - la) / (len * len);
            if param >= -slack && param <= T::one() + slack && best.map_or(true, |(_, bt, _)| tau < bt) {
                best = Some((j, tau, param));
            }
        }
        let (j, tau, param) = best.ok_or(Singular::GrazingTangency)?;
        let hit_world = to_world(start + dir * tau);
        if let Some(corner) = self.corner_on_path(u.position(poly), hit_world) {
            return Err(Singular::CornerHit { corner });
        }
        // In the copy mirrored across side j the straight line keeps its direction d; the
        // mirrored frame has inward normal -n_j and tangent t_j.
        let d_world = t0 * dir.x + n0 * dir.y;
        let theta = d_world.dot(poly.tangent(j)).atan2(-d_world.dot(poly.normal(j)));
        if theta.abs() >= T::FRAC_PI_2() - self.tol.angle {
            return Err(Singular::GrazingTangency);
        }
        if param <= T::zero() || param >= T::one() {
            let corner = if param <= T::zero() { j } else { (j + 1) % k };
            return Err(Singular::CornerHit { corner });
        }
        Ok(PhasePoint::new(j, param, theta))
    }

    /// Position and direction after flowing for time `t` at unit speed from `u`.
    pub fn flow_point(&self, u: &PhasePoint<T>, t: T) -> Result<FlowState<T>, FlowError> {
        if !u.is_valid(self.poly) || t < T::zero() {
            return Err(FlowError::Invalid);
        }
        let mut pos = u.position(self.poly);
        let mut dir = u.direction(self.poly);
        let mut side = u.side;
        let mut elapsed = T::zero();
        let on_wall = self.corner_eps;
        loop {
            let remaining = t - elapsed;
            let hit = match self.cast(pos, dir, &[side]) {
                Ok(h) => h,
                Err(Singular::CornerHit { corner }) => {
                    let t_corner = (self.poly.vertex(corner) - pos).dot(dir);
                    if t_corner > remaining + on_wall {
                        return Ok(FlowState { position: pos + dir * remaining, direction: dir, time: t });
                    }
                    return Err(FlowError::CornerHitBefore((elapsed + t_corner).as_f64()));
                }
                Err(_) => return Err(FlowError::GrazingBefore(elapsed.as_f64())),
            };
            if hit.t > remaining + on_wall {
                return Ok(FlowState { position: pos + dir * remaining, direction: dir, time: t });
            }
            let n = self.poly.normal(hit.side);
            let two = T::one() + T::one();
            dir = dir - n * (two * dir.dot(n));
            pos = hit.point;
            side = hit.side;
            elapsed = elapsed + hit.t;
            if (hit.t - remaining).abs() <= on_wall {
                return Ok(FlowState { position: pos, direction: dir, time: t });
            }
        }
    }
}
