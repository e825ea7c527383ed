//! Billiards in polygons: the billiard map and flow, orbit coding and unfoldings, the
//! dihedral direction structure of rational tables, interval exchange transformations, and
//! finite-level searches for topological weak-mixing witnesses.
//!
//! The geometric core is generic over [`scalar::Real`] (`f32` or `f64`); the rational
//! structure and certification layers work in `f64`.

pub mod billiard;
pub mod certify;
pub mod geom;
pub mod iet;
pub mod polygon;
pub mod rational;
pub mod scalar;
pub mod symbolic;

pub use billiard::{Billiard, PhasePoint, Singular};
pub use geom::Vec2;
pub use iet::Iet;
pub use polygon::{AngleSpec, Polygon, PolygonError};
pub use scalar::{Real, Tolerances};

pub type Polygon64 = Polygon<f64>;
pub type Polygon32 = Polygon<f32>;
pub type PhasePoint64 = PhasePoint<f64>;
pub type PhasePoint32 = PhasePoint<f32>;
pub type Billiard64<'a> = Billiard<'a, f64>;
pub type Billiard32<'a> = Billiard<'a, f32>;
pub type Iet64 = Iet<f64>;
pub type Iet32 = Iet<f32>;
pub type Vec2d = Vec2<f64>;
pub type Vec2f = Vec2<f32>;
