//! Planar geometric primitives: 2D vectors, normal-form lines, convex hulls.
//!
//! Everything downstream (rectangle fitting, visibility, occlusion areas) is
//! built on the three types here. Conventions:
//!
//! * hulls are counter-clockwise and strictly convex (no repeated vertices,
//!   no three consecutive collinear vertices),
//! * lines are stored in unit-normal form `a*x + b*y = c` with `a^2 + b^2 = 1`,
//!   so `a*x + b*y - c` is a signed distance in meters,
//! * indices into a hull are cyclic.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// Points closer than this are treated as duplicates when building hulls (meters).
pub const DEDUP_EPS: f64 = 1e-9;

/// Cross products with magnitude at or below this are treated as collinear (m^2).
pub const TURN_EPS: f64 = 1e-12;

/// Determinants with magnitude below this make a line pair "parallel" (no intersection).
pub const PARALLEL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product; positive when `other` is
    /// counter-clockwise from `self`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn azimuth(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotate counter-clockwise by `angle` radians about the origin.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Line in unit-normal form: the set of points with `a*x + b*y = c`.
///
/// The invariant `a^2 + b^2 = 1` (within 1e-12) makes
/// [`LineNF::signed_distance`] a true signed distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineNF {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LineNF {
    /// Build from raw coefficients, normalizing `(a, b)` to unit length.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let n = a.hypot(b);
        if !n.is_finite() || n < PARALLEL_EPS {
            return Err(Error::NonFinite);
        }
        Ok(LineNF { a: a / n, b: b / n, c: c / n })
    }

    /// Line with the given unit normal passing through all points `p` with
    /// `normal . p = offset`. Caller guarantees the normal is unit length.
    pub fn from_unit_normal(normal: Vec2, offset: f64) -> Self {
        LineNF { a: normal.x, b: normal.y, c: offset }
    }

    /// Line through two distinct points.
    pub fn through(p: Vec2, q: Vec2) -> Result<Self> {
        let d = q - p;
        let n = d.norm();
        if n < DEDUP_EPS {
            return Err(Error::DegenerateCluster("line through coincident points"));
        }
        let normal = Vec2::new(-d.y / n, d.x / n);
        Ok(LineNF::from_unit_normal(normal, normal.dot(p)))
    }

    /// Positive on the side the normal points to, negative on the other, in meters.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        self.a * p.x + self.b * p.y - self.c
    }

    /// Unit vector along the line (the normal rotated -90 degrees).
    pub fn direction(&self) -> Vec2 {
        Vec2::new(self.b, -self.a)
    }
}

/// Intersection point of two lines, or `None` when the normals are parallel
/// (determinant below [`PARALLEL_EPS`]).
pub fn line_intersection(l1: &LineNF, l2: &LineNF) -> Option<Vec2> {
    let det = l1.a * l2.b - l2.a * l1.b;
    if det.abs() < PARALLEL_EPS {
        return None;
    }
    Some(Vec2::new(
        (l1.c * l2.b - l2.c * l1.b) / det,
        (l1.a * l2.c - l2.a * l1.c) / det,
    ))
}

/// Strictly convex counter-clockwise polygon with cyclic indexing.
///
/// Two vertices means a degenerate (collinear input) hull, which downstream
/// code accepts; one vertex is never produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hull {
    points: Vec<Vec2>,
}

impl Hull {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when the input collapsed to a 2-point segment.
    pub fn is_degenerate(&self) -> bool {
        self.points.len() == 2
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    /// Vertex at a cyclic index (any integer maps into range).
    pub fn cyclic(&self, i: isize) -> Vec2 {
        let n = self.points.len() as isize;
        self.points[(i.rem_euclid(n)) as usize]
    }

    pub fn wrap(&self, i: isize) -> usize {
        let n = self.points.len() as isize;
        i.rem_euclid(n) as usize
    }

    /// Vertex centroid (arithmetic mean); strictly inside for 3+ vertices.
    pub fn vertex_centroid(&self) -> Vec2 {
        let mut acc = Vec2::new(0.0, 0.0);
        for &p in &self.points {
            acc = acc + p;
        }
        acc * (1.0 / self.points.len() as f64)
    }

    /// Number of forward steps from cyclic index `from` to `to` in direction `dir` (+1/-1).
    pub fn steps_between(&self, from: usize, to: usize, dir: isize) -> usize {
        let n = self.points.len() as isize;
        let d = (to as isize - from as isize) * dir;
        d.rem_euclid(n) as usize
    }

    /// Test-support constructor: wraps vertices that are already a strictly
    /// convex CCW polygon. Debug builds assert the invariants.
    pub fn from_ccw_vertices(points: Vec<Vec2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::DegenerateCluster("hull needs at least 2 vertices"));
        }
        let hull = Hull { points };
        debug_assert!(hull.check_invariants(), "vertices are not a strict CCW hull");
        Ok(hull)
    }

    fn check_invariants(&self) -> bool {
        let n = self.points.len();
        if n == 2 {
            return self.points[0].distance(self.points[1]) > DEDUP_EPS;
        }
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            let c = self.points[(i + 2) % n];
            if a.distance(b) <= DEDUP_EPS || (b - a).cross(c - b) <= TURN_EPS {
                return false;
            }
        }
        true
    }
}

/// Convex hull by monotone chain.
///
/// The output is CCW, starting from the lowest vertex (ties broken by lowest
/// x). Collinear intermediate points are popped (cross product <=
/// [`TURN_EPS`]), so the result is strictly convex. Inputs that are entirely
/// collinear collapse to the two extreme points rather than erroring.
///
/// The chains are built over the exact lexicographic coordinate order, never
/// an angular sort: scans of straight surfaces produce long exactly-collinear
/// runs, and any polar ordering about a pivot on such a run is decided by
/// rounding noise, which can drop true extreme points. Here the only
/// approximate step is the turn test, which at worst trims a vertex sitting
/// within [`TURN_EPS`] of an edge.
///
/// Errors with `DegenerateCluster` when fewer than two distinct points remain
/// after deduplication at [`DEDUP_EPS`], and `NonFinite` on NaN/infinite input.
pub fn convex_hull(input: &[Vec2]) -> Result<Hull> {
    for p in input {
        if !p.is_finite() {
            return Err(Error::NonFinite);
        }
    }
    // Deduplicate on a lexicographic sort; DEDUP_EPS is tiny relative to any
    // real cluster so adjacent comparison is sufficient.
    let mut pts: Vec<Vec2> = input.to_vec();
    pts.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
    let mut uniq: Vec<Vec2> = Vec::with_capacity(pts.len());
    for p in pts {
        if uniq.last().map_or(true, |q| q.distance(p) > DEDUP_EPS) {
            uniq.push(p);
        }
    }
    if uniq.len() < 2 {
        return Err(Error::DegenerateCluster("fewer than 2 distinct points"));
    }
    if uniq.len() == 2 {
        return Ok(Hull { points: order_segment(uniq[0], uniq[1]) });
    }

    fn half_chain(points: impl Iterator<Item = Vec2>) -> Vec<Vec2> {
        let mut stack: Vec<Vec2> = Vec::new();
        for p in points {
            while stack.len() >= 2 {
                let b = stack[stack.len() - 1];
                let a = stack[stack.len() - 2];
                if (b - a).cross(p - b) <= TURN_EPS {
                    stack.pop();
                } else {
                    break;
                }
            }
            stack.push(p);
        }
        stack
    }
    let mut hull = half_chain(uniq.iter().copied());
    let upper = half_chain(uniq.iter().rev().copied());
    // Each chain ends where the other begins; drop both junction repeats.
    hull.pop();
    hull.extend_from_slice(&upper[..upper.len() - 1]);
    if hull.len() == 2 {
        return Ok(Hull { points: order_segment(hull[0], hull[1]) });
    }
    // Fixed starting vertex so the output is independent of input order.
    let start = hull
        .iter()
        .enumerate()
        .min_by(|(_, p), (_, q)| p.y.total_cmp(&q.y).then(p.x.total_cmp(&q.x)))
        .map(|(i, _)| i)
        .unwrap();
    hull.rotate_left(start);
    Ok(Hull { points: hull })
}

/// Deterministic vertex order for a 2-point hull: lowest y (ties lowest x) first.
fn order_segment(p: Vec2, q: Vec2) -> Vec<Vec2> {
    if (p.y, p.x) <= (q.y, q.x) {
        vec![p, q]
    } else {
        vec![q, p]
    }
}

/// Unsigned shoelace area. Errors with `DegeneratePolygon` for < 3 vertices.
pub fn polygon_area(vertices: &[Vec2]) -> Result<f64> {
    if vertices.len() < 3 {
        return Err(Error::DegeneratePolygon { vertices: vertices.len() });
    }
    let mut twice = 0.0;
    for i in 0..vertices.len() {
        let p = vertices[i];
        let q = vertices[(i + 1) % vertices.len()];
        twice += p.cross(q);
    }
    Ok(twice.abs() / 2.0)
}
