//! Polygons, exact angle data, the angle/length chart and perturbations.
//!
//! Sides are 0-based internally: side `i` runs from vertex `i` to vertex `i + 1`
//! (mod `k`) and vertices are kept in counterclockwise order. The interior angle
//! between side `i` and side `i + 1` sits at vertex `i + 1` and is stored at index `i`.
//! User-facing labels (codes, CLI, CSV) are 1-based.

use num_integer::Integer;
use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{segments_intersect, Vec2};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolygonError {
    #[error("a polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("three consecutive collinear vertices around vertex {0}")]
    Collinear(usize),
    #[error("polygon boundary self-intersects (sides {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("chart does not close with positive side lengths")]
    ChartNotClosable,
    #[error("chart closes to a non-simple polygon")]
    NonSimple,
    #[error("chart needs {expected} lengths, got {got}")]
    ChartArity { expected: usize, got: usize },
    #[error("rationality cannot be decided from floating point angles")]
    UndecidableFromFloats,
    #[error("declared angle {index} = {declared} disagrees with the geometry ({actual})")]
    AngleMismatch { index: usize, declared: f64, actual: f64 },
    #[error("exact angle fraction {0} outside (0, 2)")]
    InvalidAngle(String),
    #[error("perturbation broke simplicity: {0}")]
    PerturbationBrokeSimplicity(Box<PolygonError>),
}

/// An interior angle, either an exact rational multiple of pi or a plain number of radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngleSpec {
    /// `pi * num / den`, stored in lowest terms.
    Exact(Ratio<i64>),
    Numeric(f64),
}

impl AngleSpec {
    pub fn pi_frac(num: i64, den: i64) -> Self {
        AngleSpec::Exact(Ratio::new(num, den))
    }

    pub fn radians(&self) -> f64 {
        match *self {
            AngleSpec::Exact(r) => std::f64::consts::PI * (*r.numer() as f64) / (*r.denom() as f64),
            AngleSpec::Numeric(x) => x,
        }
    }

    pub fn exact(&self) -> Option<Ratio<i64>> {
        match *self {
            AngleSpec::Exact(r) => Some(r),
            AngleSpec::Numeric(_) => None,
        }
    }
}

/// Rationality of a polygon as decided from exact angle data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalityData {
    pub rational: bool,
    /// Least common multiple of the reduced angle denominators.
    pub n: u64,
    pub denominators: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct Polygon<T = f64> {
    vertices: Vec<Vec2<T>>,
    lengths: Vec<T>,
    tangents: Vec<Vec2<T>>,
    angles: Vec<T>,
    exact: Option<Vec<Ratio<i64>>>,
    diameter: T,
}

/// The `(alpha_2..alpha_k, l_4..l_k)` chart with side 1 normalized to unit length.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart<T = f64> {
    pub angles: Vec<T>,
    pub lengths: Vec<T>,
}

impl<T: Real> Chart<T> {
    /// Flattened coordinates in `R^{2k-4}`.
    pub fn to_vec(&self) -> Vec<T> {
        self.angles.iter().chain(self.lengths.iter()).copied().collect()
    }
}

/// Result of [`Polygon::canonical_generic`].
#[derive(Clone, Debug)]
pub enum Canonical<T = f64> {
    Generic { polygon: Polygon<T>, chart: Chart<T> },
    NotGeneric,
}

impl<T: Real> Polygon<T> {
    pub fn from_vertices(points: &[Vec2<T>]) -> Result<Self, PolygonError> {
        let k = points.len();
        if k < 3 {
            return Err(PolygonError::TooFewVertices(k));
        }
        for i in 0..k {
            let p = points[(i + k - 1) % k];
            let v = points[i];
            let n = points[(i + 1) % k];
            let e1 = v - p;
            let e2 = n - v;
            let scale = e1.norm() * e2.norm();
            if scale == T::zero() || e1.cross(e2).abs() <= T::tol(1e-12) * scale {
                return Err(PolygonError::Collinear(i));
            }
        }
        let diam = diameter(points);
        let eps = T::tol(1e-12) * diam * diam;
        for i in 0..k {
            for j in (i + 1)..k {
                if j == i + 1 || (i == 0 && j == k - 1) {
                    continue;
                }
                if segments_intersect(points[i], points[(i + 1) % k], points[j], points[(j + 1) % k], eps) {
                    return Err(PolygonError::SelfIntersecting(i, j));
                }
            }
        }
        let area2: T = (0..k).fold(T::zero(), |acc, i| acc + points[i].cross(points[(i + 1) % k]));
        let mut vertices = points.to_vec();
        if area2 < T::zero() {
            // keep vertex 0 first, reverse the rest
            vertices[1..].reverse();
        }
        Ok(Self::build(vertices, None))
    }

    fn build(vertices: Vec<Vec2<T>>, exact: Option<Vec<Ratio<i64>>>) -> Self {
        let k = vertices.len();
        let lengths: Vec<T> = (0..k).map(|i| vertices[i].dist(vertices[(i + 1) % k])).collect();
        let tangents: Vec<Vec2<T>> =
            (0..k).map(|i| (vertices[(i + 1) % k] - vertices[i]).normalized()).collect();
        let angles = (0..k)
            .map(|i| {
                let t_in = tangents[i];
                let t_out = tangents[(i + 1) % k];
                let turn = t_in.cross(t_out).atan2(t_in.dot(t_out));
                T::PI() - turn
            })
            .collect();
        let diameter = diameter(&vertices);
        Self { vertices, lengths, tangents, angles, exact, diameter }
    }

    /// Declares exact interior angles (indexed like [`Polygon::interior_angles`]); each must
    /// match the geometry within `1e-9`.
    pub fn with_angle_specs(mut self, specs: &[AngleSpec]) -> Result<Self, PolygonError> {
        if specs.len() != self.k() {
            return Err(PolygonError::ChartArity { expected: self.k(), got: specs.len() });
        }
        let mut exact = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let actual = self.angles[i].as_f64();
            if (spec.radians() - actual).abs() > 1e-9 {
                return Err(PolygonError::AngleMismatch { index: i, declared: spec.radians(), actual });
            }
            match spec.exact() {
                Some(r) => exact.push(r),
                None => {
                    self.exact = None;
                    return Ok(self);
                }
            }
        }
        self.exact = Some(exact);
        Ok(self)
    }

    /// Asserts every angle is `pi * p / q` with `q <= max_den` and snaps to those fractions.
    pub fn with_snapped_angles(self, max_den: i64) -> Result<Self, PolygonError> {
        let specs: Vec<AngleSpec> = self
            .angles
            .iter()
            .map(|a| {
                let x = a.as_f64() / std::f64::consts::PI;
                (1..=max_den)
                    .find_map(|q| {
                        let p = (x * q as f64).round();
                        ((x - p / q as f64).abs() < 1e-9 / std::f64::consts::PI)
                            .then(|| AngleSpec::pi_frac(p as i64, q))
                    })
                    .unwrap_or(AngleSpec::Numeric(a.as_f64()))
            })
            .collect();
        if specs.iter().any(|s| s.exact().is_none()) {
            return Err(PolygonError::UndecidableFromFloats);
        }
        self.with_angle_specs(&specs)
    }

    /// Builds a polygon from `alpha_2..alpha_k` and `l_4..l_k`; side 1 is `(0,0)-(1,0)`.
    pub fn from_angle_length_chart(angles: &[AngleSpec], lengths: &[T]) -> Result<Self, PolygonError> {
        let k = angles.len() + 1;
        if k < 3 {
            return Err(PolygonError::TooFewVertices(k));
        }
        if lengths.len() != k - 3 {
            return Err(PolygonError::ChartArity { expected: k - 3, got: lengths.len() });
        }
        for a in angles {
            if let Some(r) = a.exact() {
                if r <= Ratio::from_integer(0) || r >= Ratio::from_integer(2) {
                    return Err(PolygonError::InvalidAngle(r.to_string()));
                }
            }
        }
        // alpha_1: the angle between sides 1 and 2, fixed by the angle sum
        let all_exact: Option<Vec<Ratio<i64>>> = angles.iter().map(|a| a.exact()).collect();
        let (alpha_last, exact_last) = match &all_exact {
            Some(ex) => {
                let r = Ratio::from_integer(k as i64 - 2) - ex.iter().copied().sum::<Ratio<i64>>();
                (T::PI() * T::lit(*r.numer() as f64) / T::lit(*r.denom() as f64), Some(r))
            }
            None => {
                let s: f64 = angles.iter().map(|a| a.radians()).sum();
                (T::lit((k as f64 - 2.0) * std::f64::consts::PI - s), None)
            }
        };
        if alpha_last <= T::zero() || alpha_last >= T::TAU() {
            return Err(PolygonError::ChartNotClosable);
        }
        // stored order: index 0 is alpha_1 (at (1,0)), index j is chart alpha_{j+1}
        let mut full = vec![alpha_last];
        full.extend(angles.iter().map(|a| T::lit(a.radians())));
        // side i leaves vertex i after turning by (pi - full[i-1])
        let mut phi = vec![T::zero(); k];
        for i in 1..k {
            phi[i] = phi[i - 1] + T::PI() - full[i - 1];
        }
        let dir: Vec<Vec2<T>> = phi.iter().map(|&p| Vec2::from_angle(p)).collect();
        let mut rhs = dir[0];
        for (i, &l) in lengths.iter().enumerate() {
            rhs = rhs + dir[i + 3] * l;
        }
        rhs = -rhs;
        let det = dir[1].cross(dir[2]);
        if det.abs() < T::tol(1e-14) {
            return Err(PolygonError::ChartNotClosable);
        }
        let l1 = rhs.cross(dir[2]) / det;
        let l2 = dir[1].cross(rhs) / det;
        if l1 <= T::zero() || l2 <= T::zero() {
            return Err(PolygonError::ChartNotClosable);
        }
        let mut side_len = vec![T::one(), l1, l2];
        side_len.extend_from_slice(lengths);
        let mut verts = Vec::with_capacity(k);
        let mut p = Vec2::new(T::zero(), T::zero());
        for i in 0..k {
            verts.push(p);
            p = p + dir[i] * side_len[i];
        }
        let poly = Self::from_vertices(&verts).map_err(|e| match e {
            PolygonError::SelfIntersecting(..) | PolygonError::Collinear(_) => PolygonError::NonSimple,
            other => other,
        })?;
        if poly.signed_area() < T::zero() {
            // the turning sequence wound clockwise: not a simple CCW chart
            return Err(PolygonError::NonSimple);
        }
        let poly = match (all_exact, exact_last) {
            (Some(ex), Some(first)) => {
                let specs: Vec<AngleSpec> =
                    std::iter::once(first).chain(ex).map(AngleSpec::Exact).collect();
                poly.with_angle_specs(&specs)?
            }
            _ => poly,
        };
        Ok(poly)
    }

    /// Inverse of [`Polygon::from_angle_length_chart`] for this vertex labelling.
    pub fn chart(&self) -> Chart<T> {
        let k = self.k();
        let l0 = self.lengths[0];
        Chart {
            angles: (1..k).map(|j| self.angles[j]).collect(),
            lengths: (3..k).map(|i| self.lengths[i] / l0).collect(),
        }
    }

    /// The unique chart of a generic polygon (unique longest side, unequal neighbours).
    pub fn canonical_generic(&self) -> Canonical<T> {
        let k = self.k();
        let tol = T::tol(1e-9) * self.diameter;
        let (imax, lmax) = self
            .lengths
            .iter()
            .copied()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, l)| if l > best.1 { (i, l) } else { best });
        if self.lengths.iter().enumerate().any(|(i, &l)| i != imax && (lmax - l).abs() <= tol) {
            return Canonical::NotGeneric;
        }
        let prev = self.lengths[(imax + k - 1) % k];
        let next = self.lengths[(imax + 1) % k];
        if (prev - next).abs() <= tol {
            return Canonical::NotGeneric;
        }
        let verts: Vec<Vec2<T>> = if next > prev {
            (0..k).map(|j| self.vertices[(imax + j) % k]).collect()
        } else {
            // mirror image: walk the boundary backwards from the far end of the longest side
            (0..k)
                .map(|j| {
                    let v = self.vertices[(imax + 1 + k - j) % k];
                    Vec2::new(v.x, -v.y)
                })
                .collect()
        };
        let a = verts[0];
        let b = verts[1];
        let e = b - a;
        let scale = e.norm();
        let (c, s) = (e.x / scale, e.y / scale);
        let normalized: Vec<Vec2<T>> = verts
            .iter()
            .map(|&v| {
                let d = v - a;
                Vec2::new((c * d.x + s * d.y) / scale, (-s * d.x + c * d.y) / scale)
            })
            .collect();
        let mut polygon = Self::build(normalized, None);
        if let Some(ex) = &self.exact {
            let mapped: Vec<Ratio<i64>> = if next > prev {
                (0..k).map(|j| ex[(imax + j) % k]).collect()
            } else {
                // angle between new sides j, j+1 is the old angle between old sides imax-j-1, imax-j
                (0..k).map(|j| ex[(imax + 2 * k - j - 1) % k]).collect()
            };
            polygon.exact = Some(mapped);
        }
        let chart = polygon.chart();
        Canonical::Generic { polygon, chart }
    }

    pub fn rationality(&self) -> Result<RationalityData, PolygonError> {
        let exact = self.exact.as_ref().ok_or(PolygonError::UndecidableFromFloats)?;
        let denominators: Vec<u64> = exact.iter().map(|r| r.reduced().denom().unsigned_abs()).collect();
        let n = denominators.iter().fold(1u64, |acc, &d| acc.lcm(&d));
        Ok(RationalityData { rational: true, n, denominators })
    }

    /// `N_P` when the polygon carries exact rational angles.
    pub fn n_p(&self) -> Option<u64> {
        self.rationality().ok().map(|r| r.n)
    }

    /// Moves every vertex by an independent uniform displacement in the disc of radius `delta`.
    /// Exact angle data is dropped.
    pub fn perturb<R: Rng + ?Sized>(&self, delta: T, rng: &mut R) -> Result<Self, PolygonError> {
        let moved: Vec<Vec2<T>> = self
            .vertices
            .iter()
            .map(|&v| {
                let r: f64 = rng.gen::<f64>().sqrt();
                let a: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
                v + Vec2::new(T::lit(r * a.cos()), T::lit(r * a.sin())) * delta
            })
            .collect();
        if delta == T::zero() {
            return Ok(self.clone());
        }
        let twice_area = (0..moved.len()).fold(T::zero(), |acc, i| acc + moved[i].cross(moved[(i + 1) % moved.len()]));
        if twice_area <= T::zero() {
            // turned inside out
            return Err(PolygonError::PerturbationBrokeSimplicity(Box::new(PolygonError::NonSimple)));
        }
        Self::from_vertices(&moved).map_err(|e| PolygonError::PerturbationBrokeSimplicity(Box::new(e)))
    }

    /// Image under `x -> scale * R(rot) x + shift`; exact angles are kept.
    pub fn similar(&self, scale: T, rot: T, shift: Vec2<T>) -> Self {
        let (c, s) = (rot.cos(), rot.sin());
        let v = self
            .vertices
            .iter()
            .map(|p| Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y) * scale + shift)
            .collect();
        Self::build(v, self.exact.clone())
    }

    pub fn cast<U: Real>(&self) -> Polygon<U> {
        let v = self.vertices.iter().map(|p| p.cast()).collect();
        Polygon::build(v, self.exact.clone())
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> Vec2<T> {
        self.vertices[i % self.k()]
    }

    pub fn side_lengths(&self) -> &[T] {
        &self.lengths
    }

    #[inline]
    pub fn side_length(&self, i: usize) -> T {
        self.lengths[i]
    }

    /// Interior angle between side `i` and side `i + 1`, i.e. at vertex `i + 1`.
    pub fn interior_angles(&self) -> &[T] {
        &self.angles
    }

    pub fn exact_angles(&self) -> Option<&[Ratio<i64>]> {
        self.exact.as_deref()
    }

    /// Unit tangent of side `i` (direction of traversal).
    #[inline]
    pub fn tangent(&self, i: usize) -> Vec2<T> {
        self.tangents[i]
    }

    /// Unit inward normal of side `i`.
    #[inline]
    pub fn normal(&self, i: usize) -> Vec2<T> {
        self.tangents[i].perp()
    }

    /// Start and end vertex of side `i`.
    #[inline]
    pub fn side(&self, i: usize) -> (Vec2<T>, Vec2<T>) {
        (self.vertices[i], self.vertices[(i + 1) % self.k()])
    }

    #[inline]
    pub fn diameter(&self) -> T {
        self.diameter
    }

    pub fn signed_area(&self) -> T {
        let k = self.k();
        let two = T::one() + T::one();
        (0..k).fold(T::zero(), |acc, i| acc + self.vertices[i].cross(self.vertices[(i + 1) % k])) / two
    }

    pub fn is_convex(&self) -> bool {
        self.angles.iter().all(|&a| a < T::PI())
    }

    /// Even-odd point location; boundary points count as outside.
    pub fn contains(&self, p: Vec2<T>) -> bool {
        let k = self.k();
        let mut inside = false;
        for i in 0..k {
            let (a, b) = self.side(i);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn diameter<T: Real>(pts: &[Vec2<T>]) -> T {
    let mut d = T::zero();
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            d = d.max(a.dist(*b));
        }
    }
    d
}

// ---------------------------------------------------------------------------
// JSON polygon files

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AngleJson {
    Exact { num: i64, den: i64 },
    Numeric(f64),
}

impl From<AngleJson> for AngleSpec {
    fn from(a: AngleJson) -> Self {
        match a {
            AngleJson::Exact { num, den } => AngleSpec::pi_frac(num, den),
            AngleJson::Numeric(x) => AngleSpec::Numeric(x),
        }
    }
}

impl From<AngleSpec> for AngleJson {
    fn from(a: AngleSpec) -> Self {
        match a {
            AngleSpec::Exact(r) => AngleJson::Exact { num: *r.numer(), den: *r.denom() },
            AngleSpec::Numeric(x) => AngleJson::Numeric(x),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ChartJson {
    pub angles: Vec<AngleJson>,
    #[serde(default)]
    pub lengths: Vec<f64>,
}

/// On-disk polygon description: a vertex list (optionally with declared exact angles, indexed
/// like [`Polygon::interior_angles`]) or an angle/length chart.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PolygonFile {
    Vertices {
        vertices: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angles: Option<Vec<AngleJson>>,
    },
    Chart { chart: ChartJson },
}

#[derive(Debug, Error)]
pub enum PolygonFileError {
    #[error("malformed polygon JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Polygon(#[from] PolygonError),
}

impl PolygonFile {
    pub fn parse(text: &str) -> Result<Self, PolygonFileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<Polygon<f64>, PolygonError> {
        match self {
            PolygonFile::Vertices { vertices, angles } => {
                let pts: Vec<Vec2<f64>> = vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect();
                let p = Polygon::from_vertices(&pts)?;
                match angles {
                    Some(a) => {
                        let specs: Vec<AngleSpec> = a.iter().cloned().map(Into::into).collect();
                        p.with_angle_specs(&specs)
                    }
                    None => Ok(p),
                }
            }
            PolygonFile::Chart { chart } => {
                let specs: Vec<AngleSpec> = chart.angles.iter().cloned().map(Into::into).collect();
                Polygon::from_angle_length_chart(&specs, &chart.lengths)
            }
        }
    }

    pub fn from_polygon(p: &Polygon<f64>) -> Self {
        PolygonFile::Vertices {
            vertices: p.vertices().iter().map(|v| [v.x, v.y]).collect(),
            angles: p.exact_angles().map(|ex| {
                ex.iter().map(|&r| AngleJson::from(AngleSpec::Exact(r))).collect()
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Common shapes used by tests, examples and the CLI.

impl Polygon<f64> {
    pub fn unit_square() -> Self {
        let v = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)].map(|(x, y)| Vec2::new(x, y));
        Self::from_vertices(&v)
            .and_then(|p| p.with_angle_specs(&[AngleSpec::pi_frac(1, 2); 4]))
            .expect("unit square")
    }

    /// Triangle on `(0,0)-(1,0)` with exact angles `pi*a` at `(1,0)` and `pi*b` at the origin.
    pub fn triangle_pi(a: (i64, i64), b: (i64, i64)) -> Result<Self, PolygonError> {
        let apex = Ratio::from_integer(1) - Ratio::new(a.0, a.1) - Ratio::new(b.0, b.1);
        Self::from_angle_length_chart(
            &[AngleSpec::Exact(apex), AngleSpec::pi_frac(b.0, b.1)],
            &[],
        )
    }

    /// Right triangle with angles pi/2, pi/8, 3pi/8 (`N_P = 8`).
    pub fn pi8_right_triangle() -> Self {
        Self::triangle_pi((1, 2), (1, 8)).expect("pi/8 triangle")
    }

    pub fn equilateral() -> Self {
        Self::triangle_pi((1, 3), (1, 3)).expect("equilateral")
    }
}
