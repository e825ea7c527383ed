//! Scalar abstraction and numerical tolerances.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar used by the geometric core: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// `max(requested, 64 * epsilon)`: keeps tolerances meaningful for `f32`.
    #[inline]
    fn tol(requested: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        Self::lit(requested).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Numerical tolerances shared by billiard and IET computations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Corner tube radius, relative to the polygon diameter.
    pub corner: T,
    /// `|theta| >= pi/2 - angle` is treated as a grazing tangency.
    pub angle: T,
    /// Breakpoint collision radius for interval exchanges.
    pub iet: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            corner: T::tol(1e-12),
            angle: T::tol(1e-12),
            iet: T::tol(1e-10),
        }
    }
}

impl<T: Real> Tolerances<T> {
    pub fn validate(&self) -> bool {
        self.corner > T::zero() && self.angle > T::zero() && self.iet > T::zero()
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_pi<T: Real>(a: T) -> T {
    let two_pi = T::TAU();
    let mut r = a % two_pi;
    if r > T::PI() {
        r = r - two_pi;
    } else if r <= -T::PI() {
        r = r + two_pi;
    }
    r
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_2pi<T: Real>(a: T) -> T {
    let two_pi = T::TAU();
    let mut r = a % two_pi;
    if r < T::zero() {
        r = r + two_pi;
    }
    if r >= two_pi {
        r = r - two_pi;
    }
    r
}
