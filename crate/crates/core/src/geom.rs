//! Planar vectors, reflections and rigid motions.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2<T = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn from_angle(a: T) -> Self {
        Self::new(a.cos(), a.sin())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3d cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    /// Counterclockwise quarter turn.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn normalized(self) -> Self {
        self * (T::one() / self.norm())
    }

    #[inline]
    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Mirror image of a direction across a line with unit direction `axis`.
    #[inline]
    pub fn reflect_dir(self, axis: Self) -> Self {
        let two = T::one() + T::one();
        axis * (two * self.dot(axis)) - self
    }

    pub fn cast<U: Real>(self) -> Vec2<U> {
        Vec2::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()))
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_dist<T: Real>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 <= T::zero() {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).max(T::zero()).min(T::one());
    p.dist(a + ab * t)
}

/// Do the closed segments `[a, b]` and `[c, d]` properly cross (interiors meet transversally
/// or overlap collinearly)?
pub fn segments_intersect<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>, d: Vec2<T>, eps: T) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
    {
        return true;
    }
    let on = |p: Vec2<T>, q: Vec2<T>, r: Vec2<T>| point_segment_dist(r, p, q) <= eps;
    (d1.abs() <= eps && on(a, b, c))
        || (d2.abs() <= eps && on(a, b, d))
        || (d3.abs() <= eps && on(c, d, a))
        || (d4.abs() <= eps && on(c, d, b))
}

/// Affine isometry `x -> L x + t` of the plane, `L` orthogonal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry<T = f64> {
    /// Row-major 2x2 linear part.
    pub m: [[T; 2]; 2],
    pub t: Vec2<T>,
}

impl<T: Real> Isometry<T> {
    pub fn identity() -> Self {
        Self {
            m: [[T::one(), T::zero()], [T::zero(), T::one()]],
            t: Vec2::new(T::zero(), T::zero()),
        }
    }

    /// Reflection across the line through `a` and `b`.
    pub fn reflection(a: Vec2<T>, b: Vec2<T>) -> Self {
        let u = (b - a).normalized();
        let two = T::one() + T::one();
        // L = 2uu^T - I
        let m = [
            [two * u.x * u.x - T::one(), two * u.x * u.y],
            [two * u.x * u.y, two * u.y * u.y - T::one()],
        ];
        let lin = Self { m, t: Vec2::new(T::zero(), T::zero()) };
        let t = a - lin.apply_linear(a);
        Self { m, t }
    }

    #[inline]
    pub fn apply_linear(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    #[inline]
    pub fn apply(&self, p: Vec2<T>) -> Vec2<T> {
        self.apply_linear(p) + self.t
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let a = &self.m;
        let b = &other.m;
        let m = [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ];
        Self { m, t: self.apply(other.t) }
    }

    pub fn inverse(&self) -> Self {
        // orthogonal: inverse linear part is the transpose
        let m = [[self.m[0][0], self.m[1][0]], [self.m[0][1], self.m[1][1]]];
        let lin = Self { m, t: Vec2::new(T::zero(), T::zero()) };
        Self { m, t: -lin.apply_linear(self.t) }
    }

    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Largest deviation of the linear part from the identity.
    pub fn linear_defect(&self) -> T {
        (self.m[0][0] - T::one())
            .abs()
            .max(self.m[0][1].abs())
            .max(self.m[1][0].abs())
            .max((self.m[1][1] - T::one()).abs())
    }
}
