//! Rational polygons: the finite dihedral group of directions, the invariant strip sets it
//! generates, saddle connections, directional interval exchanges and periodic orbits.
//!
//! Everything here works in `f64`; directions are tracked exactly as group elements.

mod direction;
mod diet;
mod periodic;
mod saddle;

pub use diet::{directional_iet, DirectionalIet, IetChart};
pub use direction::{direction_orbit, invariant_set, DirectionClass, InvariantSet, Member, Strip};
pub use periodic::{find_periodic_near, find_periodic_orbit, PeriodicOrbit, PhaseRect};
pub use saddle::{
    is_exceptional, saddle_connections, trace_from_corner, CornerTrace, ExceptionalVerdict, SaddleConnection,
};

use thiserror::Error;

use crate::iet::IetError;
use crate::polygon::PolygonError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RationalError {
    #[error("polygon has no exact rational angle data: {0}")]
    NotRational(PolygonError),
    #[error("direction {0} is a mirror direction of the polygon")]
    DegenerateDirection(f64),
    #[error("saddle connection met while building the interval exchange (corner {corner})")]
    ExceptionalDirectionDetected { corner: usize },
    #[error("side directions are not multiples of pi/N")]
    InconsistentMirrors,
    #[error("interval exchange construction failed: {0}")]
    Iet(#[from] IetError),
    #[error("no periodic orbit found within budget {0}")]
    NotFound(usize),
}
