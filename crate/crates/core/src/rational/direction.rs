use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::RationalError;
use crate::polygon::Polygon;
use crate::scalar::{wrap_2pi, wrap_pi};

/// Group element index of a direction: angle `phi0 + sign (xi - phi0) + 2 k pi / N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Member {
    pub k: u64,
    pub sign: i8,
}

/// The orbit of a direction under the dihedral group generated by reflections in the lines
/// at angles `phi0 + j pi / N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionClass {
    n: u64,
    xi: f64,
    phi0: f64,
    /// `xi - phi0` is a multiple of `pi / N`; then `(k, -)` coincides with `(k - shift, +)`.
    degenerate_shift: Option<u64>,
}

const DEGENERATE_TOL: f64 = 1e-12;

impl DirectionClass {
    pub fn new(n: u64, xi: f64, phi0: f64) -> Self {
        assert!(n >= 1, "group order must be positive");
        let step = PI / n as f64;
        let r = (xi - phi0) / step;
        let nearest = r.round();
        let degenerate_shift = ((r - nearest).abs() * step < DEGENERATE_TOL)
            .then(|| (nearest as i64).rem_euclid(n as i64) as u64);
        Self { n, xi: wrap_2pi(xi), phi0, degenerate_shift }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    /// Is `xi` fixed by one of the reflections?
    pub fn is_degenerate(&self) -> bool {
        self.degenerate_shift.is_some()
    }

    pub fn base(&self) -> Member {
        Member { k: 0, sign: 1 }
    }

    fn canonical(&self, m: Member) -> Member {
        match self.degenerate_shift {
            Some(shift) if m.sign < 0 => {
                Member { k: (m.k + self.n - shift) % self.n, sign: 1 }
            }
            _ => m,
        }
    }

    /// Angle in `[0, 2pi)`.
    pub fn angle(&self, m: Member) -> f64 {
        let rel = self.xi - self.phi0;
        wrap_2pi(self.phi0 + f64::from(m.sign) * rel + TAU * m.k as f64 / self.n as f64)
    }

    pub fn unit(&self, m: Member) -> crate::geom::Vec2<f64> {
        crate::geom::Vec2::from_angle(self.angle(m))
    }

    /// Distinct orbit members: `2N`, or `N` for a degenerate direction.
    pub fn members(&self) -> Vec<Member> {
        let signs: &[i8] = if self.is_degenerate() { &[1] } else { &[1, -1] };
        signs
            .iter()
            .flat_map(|&sign| (0..self.n).map(move |k| Member { k, sign }))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.members().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Reflection in the line at angle `phi0 + j pi / N`.
    pub fn reflect(&self, m: Member, j: u64) -> Member {
        let n = self.n;
        let k = (j % n + n - m.k % n) % n;
        self.canonical(Member { k, sign: -m.sign })
    }

    /// Rotation by `2 r pi / N`.
    pub fn rotate(&self, m: Member, r: u64) -> Member {
        Member { k: (m.k + r) % self.n, sign: m.sign }
    }

    /// The member whose angle is within `tol` of `angle`.
    pub fn member_of(&self, angle: f64, tol: f64) -> Option<Member> {
        self.members().into_iter().find(|&m| wrap_pi(self.angle(m) - angle).abs() <= tol)
    }

    /// Distance from `angle` to the nearest orbit member.
    pub fn distance(&self, angle: f64) -> f64 {
        self.members()
            .into_iter()
            .map(|m| wrap_pi(self.angle(m) - angle).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// The orbit of `xi` under the group of order `2N` generated by lines through the origin at
/// angles `j pi / N`.
pub fn direction_orbit(n: u64, xi: f64) -> DirectionClass {
    DirectionClass::new(n, xi, 0.0)
}

/// A horizontal segment `side x {theta}` of the invariant set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub side: usize,
    pub member: Member,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantSet {
    pub class: DirectionClass,
    /// Sorted by `(side, theta)`.
    pub strips: Vec<Strip>,
    /// Mirror index of each side: side `i` lies on a line at angle `phi0 + mirrors[i] pi / N`.
    pub mirrors: Vec<u64>,
    normal_angles: Vec<f64>,
}

impl InvariantSet {
    pub fn strip_index(&self, side: usize, member: Member) -> Option<usize> {
        self.strips.iter().position(|s| s.side == side && s.member == member)
    }

    pub fn strips_on(&self, side: usize) -> impl Iterator<Item = &Strip> + '_ {
        self.strips.iter().filter(move |s| s.side == side)
    }

    /// Direction member after reflecting off `side`.
    pub fn bounce(&self, member: Member, side: usize) -> Member {
        self.class.reflect(member, self.mirrors[side])
    }

    /// Phase angle of `member` on `side`: the direction is `cos(theta) n + sin(theta) t`.
    pub fn theta(&self, side: usize, member: Member) -> f64 {
        wrap_pi(self.normal_angles[side] - self.class.angle(member))
    }

    /// Angles of the strips on `side`, ascending.
    pub fn side_thetas(&self, side: usize) -> Vec<f64> {
        self.strips_on(side).map(|s| s.theta).collect()
    }
}

/// Mirror index of each side and the base angle `phi0` (direction of side 0).
pub(crate) fn mirror_indices(poly: &Polygon<f64>) -> Result<(u64, f64, Vec<u64>), RationalError> {
    let rat = poly.rationality().map_err(RationalError::NotRational)?;
    let n = rat.n;
    let exact = poly.exact_angles().expect("rationality implies exact angles");
    let phi0 = poly.tangent(0).angle();
    let mut mirrors = vec![0u64; poly.k()];
    for i in 0..poly.k() - 1 {
        let a = exact[i].reduced();
        let (p, q) = (*a.numer(), *a.denom());
        let shift = (p * (n as i64 / q)).rem_euclid(n as i64) as u64;
        mirrors[i + 1] = (mirrors[i] + n - shift) % n;
    }
    let step = PI / n as f64;
    for (i, &j) in mirrors.iter().enumerate() {
        let line = poly.tangent(i).angle();
        let diff = (line - phi0 - j as f64 * step).rem_euclid(PI);
        if diff.min(PI - diff) > 1e-9 {
            return Err(RationalError::InconsistentMirrors);
        }
    }
    Ok((n, phi0, mirrors))
}

/// The strips `side x {theta}` whose absolute direction lies in the orbit of `xi` and points
/// strictly inward.
pub fn invariant_set(poly: &Polygon<f64>, xi: f64) -> Result<InvariantSet, RationalError> {
    let (n, phi0, mirrors) = mirror_indices(poly)?;
    let class = DirectionClass::new(n, xi, phi0);
    if class.is_degenerate() {
        return Err(RationalError::DegenerateDirection(xi));
    }
    let normal_angles: Vec<f64> = (0..poly.k()).map(|i| poly.normal(i).angle()).collect();
    let mut strips = Vec::new();
    for (side, &nu) in normal_angles.iter().enumerate() {
        for m in class.members() {
            let theta = wrap_pi(nu - class.angle(m));
            if theta.abs() < PI / 2.0 - DEGENERATE_TOL {
                strips.push(Strip { side, member: m, theta });
            }
        }
    }
    strips.sort_by(|a, b| (a.side, a.theta).partial_cmp(&(b.side, b.theta)).unwrap());
    Ok(InvariantSet { class, strips, mirrors, normal_angles })
}
