//! Minimum-occlusion-area rectangle fitting.
//!
//! A cluster is flattened to the sensor's x-y plane, its convex hull is taken,
//! and a rectangle orientation is searched over a half-open grid [0, pi/2).
//! Each candidate orientation is scored by the area of free space the fitted
//! rectangle would claim between the sensor-facing hull contour and the
//! rectangle edges the sensor actually sees ("occlusion area"); the grid
//! angle with the smallest score wins, ties going to the smaller angle.
//!
//! Assumptions:
//! * the sensor sits at the origin, strictly outside the cluster's hull;
//! * clusters are sensor-frame (x forward, y left, z up) with finite coords.

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, line_intersection, Hull, LineNF, Vec2};
use serde::{Deserialize, Serialize};

/// A hull boundary point closer than this to a rectangle vertex is treated as
/// coincident with it (meters).
pub const VERTEX_COINCIDENCE_EPS: f64 = 1e-6;

/// Slack for closed half-plane visibility tests (meters). Covers rounding in
/// ray construction so wedge boundary points classify as visible.
pub const VISIBILITY_EPS: f64 = 1e-9;

/// 3D point cluster in the sensor frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster3D {
    points: Vec<[f64; 3]>,
}

impl Cluster3D {
    /// Requires >= 2 points, all coordinates finite.
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::DegenerateCluster("cluster needs at least 2 points"));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Cluster3D { points })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Planar projection of a cluster plus the vertical extent it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster2D {
    pub points: Vec<Vec2>,
    pub z_min: f64,
    pub z_max: f64,
}

/// Drop z, keeping its range for later box assembly.
pub fn project_to_plane(cluster: &Cluster3D) -> Result<Cluster2D> {
    let mut z_min = f64::INFINITY;
    let mut z_max = f64::NEG_INFINITY;
    let mut points = Vec::with_capacity(cluster.len());
    for p in cluster.points() {
        z_min = z_min.min(p[2]);
        z_max = z_max.max(p[2]);
        points.push(Vec2::new(p[0], p[1]));
    }
    Ok(Cluster2D { points, z_min, z_max })
}

/// Axis frame and support lines of the rectangle fitted at one orientation.
///
/// Line/vertex convention: `lines[0]` and `lines[2]` carry normal
/// `e1 = (cos theta, sin theta)` at the min/max support offsets, `lines[1]`
/// and `lines[3]` carry normal `e2 = (-sin theta, cos theta)`. `vertices[i]`
/// is the corner where `lines[i]` meets `lines[i+1]` (cyclic), which orders
/// the corners counter-clockwise; edge `i` is the segment from
/// `vertices[i-1]` to `vertices[i]` lying on `lines[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedRectFrame {
    pub theta: f64,
    pub e1: Vec2,
    pub e2: Vec2,
    pub lines: [LineNF; 4],
    pub vertices: [Vec2; 4],
    pub extent_e1: f64,
    pub extent_e2: f64,
}

impl OrientedRectFrame {
    /// Segment endpoints of edge `i`: (start = vertices[i-1], end = vertices[i]).
    pub fn edge_endpoints(&self, i: usize) -> (Vec2, Vec2) {
        (self.vertices[(i + 3) % 4], self.vertices[i])
    }

    pub fn area(&self) -> f64 {
        self.extent_e1 * self.extent_e2
    }
}

/// Tight rectangle around the hull at orientation `theta`, from the support
/// extremes of the hull vertices along `e1`/`e2`.
pub fn rect_from_theta(hull: &Hull, theta: f64) -> OrientedRectFrame {
    let (s, c) = theta.sin_cos();
    let e1 = Vec2::new(c, s);
    let e2 = Vec2::new(-s, c);
    let mut min1 = f64::INFINITY;
    let mut max1 = f64::NEG_INFINITY;
    let mut min2 = f64::INFINITY;
    let mut max2 = f64::NEG_INFINITY;
    for &p in hull.points() {
        let c1 = p.dot(e1);
        let c2 = p.dot(e2);
        min1 = min1.min(c1);
        max1 = max1.max(c1);
        min2 = min2.min(c2);
        max2 = max2.max(c2);
    }
    let lines = [
        LineNF::from_unit_normal(e1, min1),
        LineNF::from_unit_normal(e2, min2),
        LineNF::from_unit_normal(e1, max1),
        LineNF::from_unit_normal(e2, max2),
    ];
    // Corner (u, v) in the rotated frame maps back as u*e1 + v*e2.
    let corner = |u: f64, v: f64| e1 * u + e2 * v;
    let vertices = [
        corner(min1, min2), // lines 0 & 1
        corner(max1, min2), // lines 1 & 2
        corner(max1, max2), // lines 2 & 3
        corner(min1, max2), // lines 3 & 0
    ];
    OrientedRectFrame {
        theta,
        e1,
        e2,
        lines,
        vertices,
        extent_e1: max1 - min1,
        extent_e2: max2 - min2,
    }
}

/// Which azimuth extreme of the visible wedge a boundary ray belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WedgeSide {
    MinAzimuth,
    MaxAzimuth,
}

/// Angular sector from which the sensor sees the hull: the two rays through
/// the extreme-azimuth hull vertices, plus which side of each ray the hull
/// lies on.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibleWedge {
    pub min_az_idx: usize,
    pub max_az_idx: usize,
    pub min_az_point: Vec2,
    pub max_az_point: Vec2,
    pub ray_min: LineNF,
    pub ray_max: LineNF,
    /// Sign of the hull side of each ray (+1 / -1).
    pub interior_sign_min: f64,
    pub interior_sign_max: f64,
}

impl VisibleWedge {
    pub fn boundary_point(&self, side: WedgeSide) -> Vec2 {
        match side {
            WedgeSide::MinAzimuth => self.min_az_point,
            WedgeSide::MaxAzimuth => self.max_az_point,
        }
    }

    pub fn ray(&self, side: WedgeSide) -> &LineNF {
        match side {
            WedgeSide::MinAzimuth => &self.ray_min,
            WedgeSide::MaxAzimuth => &self.ray_max,
        }
    }

    pub fn interior_sign(&self, side: WedgeSide) -> f64 {
        match side {
            WedgeSide::MinAzimuth => self.interior_sign_min,
            WedgeSide::MaxAzimuth => self.interior_sign_max,
        }
    }

    /// Closed membership test: true when `p` lies between the boundary rays
    /// (inclusive). Equivalent to the recentered azimuth of `p` lying in the
    /// closed interval spanned by the boundary azimuths, since the wedge apex
    /// angle is below pi for any hull the sensor is outside of.
    pub fn is_visible(&self, p: Vec2) -> bool {
        self.interior_sign_min * self.ray_min.signed_distance(p) >= -VISIBILITY_EPS
            && self.interior_sign_max * self.ray_max.signed_distance(p) >= -VISIBILITY_EPS
    }
}

/// Find the extreme-azimuth hull vertices and build the visible wedge.
///
/// Azimuths are compared after rotating the frame so the hull's vertex
/// centroid sits at azimuth zero, which keeps clusters straddling the +-pi
/// atan2 cut from splitting the wedge. Errors with `OriginInsideHull` when
/// the sensor origin is inside or on the hull.
pub fn boundary_points(hull: &Hull) -> Result<VisibleWedge> {
    let n = hull.len();
    if n >= 3 {
        // Inside a CCW polygon every edge sees the origin on its left.
        let mut inside = true;
        for i in 0..n {
            let a = hull.points()[i];
            let b = hull.points()[(i + 1) % n];
            if (b - a).cross(-a) < -VISIBILITY_EPS {
                inside = false;
                break;
            }
        }
        if inside {
            return Err(Error::OriginInsideHull);
        }
    } else {
        // 2-point hull: "inside" means the origin sits on the segment.
        let a = hull.points()[0];
        let b = hull.points()[1];
        let d = b - a;
        let t = ((-a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
        if (a + d * t).norm() <= VISIBILITY_EPS {
            return Err(Error::OriginInsideHull);
        }
    }

    let recenter = -hull.vertex_centroid().azimuth();
    let mut min_az = f64::INFINITY;
    let mut max_az = f64::NEG_INFINITY;
    let mut min_idx = 0usize;
    let mut max_idx = 0usize;
    for (i, &p) in hull.points().iter().enumerate() {
        let az = p.rotated(recenter).azimuth();
        if az < min_az {
            min_az = az;
            min_idx = i;
        }
        if az > max_az {
            max_az = az;
            max_idx = i;
        }
    }
    let min_pt = hull.points()[min_idx];
    let max_pt = hull.points()[max_idx];

    let ray_through = |p: Vec2| -> LineNF {
        let n = p.norm();
        LineNF::from_unit_normal(p.perp() * (1.0 / n), 0.0)
    };
    let ray_min = ray_through(min_pt);
    let ray_max = ray_through(max_pt);

    // Hull side of each ray, probed with the opposite boundary point and the
    // centroid as fallback for near-radial degenerate hulls.
    let side_of = |ray: &LineNF, probe: Vec2| -> f64 {
        let d = ray.signed_distance(probe);
        if d.abs() > VISIBILITY_EPS {
            d.signum()
        } else {
            let dc = ray.signed_distance(hull.vertex_centroid());
            if dc < 0.0 {
                -1.0
            } else {
                1.0
            }
        }
    };
    Ok(VisibleWedge {
        min_az_idx: min_idx,
        max_az_idx: max_idx,
        min_az_point: min_pt,
        max_az_point: max_pt,
        interior_sign_min: side_of(&ray_min, max_pt),
        interior_sign_max: side_of(&ray_max, min_pt),
        ray_min,
        ray_max,
    })
}

/// Pick the rectangle edge the sensor sees along one boundary ray.
///
/// Candidates are edges whose intersection with the boundary ray falls
/// strictly inside the edge segment, on the forward half of the ray; the
/// nearest-to-origin candidate wins. When the boundary point coincides with a
/// rectangle vertex (within [`VERTEX_COINCIDENCE_EPS`]) the two edges at that
/// vertex are withheld from candidacy, and if the vertex is nearer than every
/// candidate intersection, whichever of those two edges extends into the
/// wedge is returned. A no-candidate scan without a coincident vertex adopts
/// the two smallest-miss edges and flags their shared vertex as coincident.
///
/// Returns the edge index (0..4); `NoVisibleEdge` when nothing qualifies.
pub fn select_projection_edge(
    rect: &OrientedRectFrame,
    wedge: &VisibleWedge,
    side: WedgeSide,
) -> Result<usize> {
    let bp = wedge.boundary_point(side);
    let ray = wedge.ray(side);
    let forward = bp * (1.0 / bp.norm());

    let mut recv: Option<usize> = None;
    let mut best_d = VERTEX_COINCIDENCE_EPS;
    for (i, v) in rect.vertices.iter().enumerate() {
        let d = v.distance(bp);
        if d < best_d {
            best_d = d;
            recv = Some(i);
        }
    }

    let mut candidates: Vec<(usize, Vec2)> = Vec::new();
    let mut near_misses: Vec<(f64, usize)> = Vec::new();
    for idx in 0..4 {
        if let Some(r) = recv {
            if idx == r || idx == (r + 1) % 4 {
                continue;
            }
        }
        let hit = match line_intersection(&rect.lines[idx], ray) {
            Some(p) => p,
            None => continue,
        };
        let (start, end) = rect.edge_endpoints(idx);
        let edge_len = start.distance(end);
        let overshoot = hit.distance(start).max(hit.distance(end));
        if overshoot < edge_len && hit.dot(forward) > 0.0 {
            candidates.push((idx, hit));
        }
        if recv.is_none() {
            near_misses.push(((overshoot - edge_len).abs(), idx));
        }
    }

    if candidates.is_empty() && recv.is_none() {
        if near_misses.len() < 2 {
            return Err(Error::NoVisibleEdge);
        }
        near_misses.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (i0, i1) = (near_misses[0].1, near_misses[1].1);
        for &i in &[i0, i1] {
            if let Some(hit) = line_intersection(&rect.lines[i], ray) {
                candidates.push((i, hit));
            }
        }
        recv = shared_vertex(i0, i1);
    }

    let nearest = candidates
        .iter()
        .map(|&(idx, hit)| (hit.norm(), idx))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    if let Some(r) = recv {
        let vertex_dist = rect.vertices[r].norm();
        let nearest_dist = nearest.map_or(f64::INFINITY, |(d, _)| d);
        if vertex_dist < nearest_dist {
            return adjacent_edge_in_wedge(rect, wedge, side, r);
        }
    }
    nearest.map(|(_, idx)| idx).ok_or(Error::NoVisibleEdge)
}

/// Shared corner of two rectangle edges, if they are adjacent.
fn shared_vertex(i0: usize, i1: usize) -> Option<usize> {
    if (i0 + 1) % 4 == i1 {
        Some(i0)
    } else if (i1 + 1) % 4 == i0 {
        Some(i1)
    } else {
        None
    }
}

/// Of the edges meeting at vertex `r`, return the one the sensor sees at
/// that corner: it must extend to the hull side of the boundary ray AND face
/// the sensor.
///
/// One test alone is not decisive. When the ray crosses the rectangle at the
/// vertex, both edges face the sensor but only one lies on the wedge side;
/// when the ray is tangent there (a face seen nearly edge-on), both edges lie
/// on the wedge side but one of them bounds the far side of the rectangle,
/// which the sensor cannot see.
///
/// Adjacency is geometric, not positional: a rectangle fit to a thin cluster
/// collapses to near-zero width, fusing two corners into one point, and the
/// sensed face then hangs off whichever twin the coincidence test did not
/// pick. Every edge with an endpoint at the vertex is a candidate.
fn adjacent_edge_in_wedge(
    rect: &OrientedRectFrame,
    wedge: &VisibleWedge,
    side: WedgeSide,
    r: usize,
) -> Result<usize> {
    let ray = wedge.ray(side);
    let sign = wedge.interior_sign(side);
    let vertex = rect.vertices[r];
    // Edges 0 and 1 carry the min support lines (interior at positive signed
    // distance), 2 and 3 the max lines; the sensor faces an edge when the
    // origin sits strictly on its exterior side.
    let faces_sensor = |edge: usize| -> bool {
        let interior = if edge < 2 { 1.0 } else { -1.0 };
        interior * rect.lines[edge].signed_distance(Vec2::new(0.0, 0.0)) < 0.0
    };
    let mut best: Option<(f64, usize)> = None;
    for edge in 0..4 {
        let (start, end) = rect.edge_endpoints(edge);
        let (near, far) = if start.distance(vertex) <= end.distance(vertex) {
            (start, end)
        } else {
            (end, start)
        };
        if near.distance(vertex) > VERTEX_COINCIDENCE_EPS {
            continue;
        }
        let depth = sign * ray.signed_distance(far);
        if faces_sensor(edge) && depth >= -VISIBILITY_EPS {
            if best.map_or(true, |(bd, _)| depth > bd) {
                best = Some((depth, edge));
            }
        }
    }
    best.map(|(_, edge)| edge).ok_or(Error::NoVisibleEdge)
}

/// One trapezoid sweep along the sensor-facing hull chain.
///
/// Walks chords from `start` toward `target` in index direction `dir`,
/// accumulating the signed area between each chord and `line` (trapezoid
/// with the chord's endpoint distances as parallel sides and the chord's
/// projection on the line direction as height). Stops at `target`, after
/// `iter_max` chords, or when the chord projection reverses sign — the
/// contour has turned past the extreme the projection line can see. Chords
/// perpendicular to the line (zero height) contribute nothing and do not
/// count as a reversal.
///
/// Returns the absolute accumulated area and how many chords remained
/// unvisited between the stop position and `target`.
fn trapezoid_pass(
    hull: &Hull,
    line: &LineNF,
    start: usize,
    target: usize,
    dir: isize,
    iter_max: usize,
) -> (f64, usize) {
    let e = line.direction();
    let mut acc = 0.0;
    let mut last_sign = 0.0f64;
    let mut idx = start;
    for _ in 0..iter_max {
        if idx == target {
            break;
        }
        let cur = hull.points()[idx];
        let nxt_i = hull.wrap(idx as isize + dir);
        let nxt = hull.points()[nxt_i];
        let h = (nxt - cur).dot(e);
        let s = if h > 0.0 {
            1.0
        } else if h < 0.0 {
            -1.0
        } else {
            0.0
        };
        if s != 0.0 && last_sign != 0.0 && s != last_sign {
            break;
        }
        let d_cur = line.signed_distance(cur).abs();
        let d_nxt = line.signed_distance(nxt).abs();
        acc += (d_cur + d_nxt) * h / 2.0;
        if s != 0.0 {
            last_sign = s;
        }
        idx = nxt_i;
    }
    (acc.abs(), hull.steps_between(idx, target, dir))
}

/// Occlusion area of a candidate rectangle: free space wrongly claimed
/// between the sensor-facing hull contour and the selected projection edges.
///
/// Two sweeps cover the contour. For a CCW hull with the sensor outside, the
/// sensor-facing chain runs from the max-azimuth vertex toward increasing
/// index, so the first sweep starts there against the max-azimuth projection
/// line; the second sweep starts at the min-azimuth vertex, walks the other
/// way, and is capped to the chords the first sweep left unvisited.
pub fn occlusion_area(
    hull: &Hull,
    rect: &OrientedRectFrame,
    wedge: &VisibleWedge,
    edge_min_az: usize,
    edge_max_az: usize,
) -> f64 {
    let (area_max_side, gap) = trapezoid_pass(
        hull,
        &rect.lines[edge_max_az],
        wedge.max_az_idx,
        wedge.min_az_idx,
        1,
        hull.len(),
    );
    let (area_min_side, _) = trapezoid_pass(
        hull,
        &rect.lines[edge_min_az],
        wedge.min_az_idx,
        wedge.max_az_idx,
        -1,
        gap,
    );
    area_max_side + area_min_side
}

/// Upright 3D bounding box assembled from a fitted rectangle and a z-range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub center: [f64; 3],
    /// Footprint extent along the box's `e1` axis.
    pub length: f64,
    /// Footprint extent along the box's `e2` axis.
    pub width: f64,
    pub height: f64,
    /// Orientation of `e1` in the sensor x-y plane, radians in [0, pi/2).
    pub yaw: f64,
}

pub fn assemble_box3d(rect: &OrientedRectFrame, z_min: f64, z_max: f64) -> Box3D {
    let mut cx = 0.0;
    let mut cy = 0.0;
    for v in &rect.vertices {
        cx += v.x;
        cy += v.y;
    }
    Box3D {
        center: [cx / 4.0, cy / 4.0, (z_max + z_min) / 2.0],
        length: rect.extent_e1,
        width: rect.extent_e2,
        height: z_max - z_min,
        yaw: rect.theta,
    }
}

/// Full orientation fit of one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Winning orientation, radians in [0, pi/2).
    pub theta: f64,
    /// (theta, score) per grid candidate, in grid order.
    pub score_curve: Vec<(f64, f64)>,
    pub bbox: Box3D,
}

/// Number of grid candidates for a given step: ceil((pi/2) / delta), with a
/// guard so float noise in the division cannot add a candidate at or past pi/2.
pub fn theta_grid_len(delta: f64) -> usize {
    assert!(
        delta > 0.0 && delta <= std::f64::consts::FRAC_PI_2,
        "theta step must lie in (0, pi/2]"
    );
    (((std::f64::consts::FRAC_PI_2) / delta) - 1e-9).ceil().max(1.0) as usize
}

/// Fit a rectangle orientation to a cluster by minimum occlusion area.
///
/// Scores every grid angle `k * delta` for `k in 0..ceil((pi/2)/delta)`.
/// Angles where no projection edge can be selected score infinity; if every
/// angle does, the fit fails with `EstimationFailed`. Ties keep the smallest
/// angle. The returned box carries the rectangle at the winning angle and the
/// cluster's z-range.
pub fn estimate_pose(cluster: &Cluster3D, delta: f64) -> Result<FitResult> {
    let flat = project_to_plane(cluster)?;
    let hull = convex_hull(&flat.points)?;
    let wedge = boundary_points(&hull)?;
    let n = theta_grid_len(delta);

    let mut curve = Vec::with_capacity(n);
    let mut best: Option<(f64, usize)> = None;
    for k in 0..n {
        let theta = k as f64 * delta;
        let rect = rect_from_theta(&hull, theta);
        let score = match (
            select_projection_edge(&rect, &wedge, WedgeSide::MinAzimuth),
            select_projection_edge(&rect, &wedge, WedgeSide::MaxAzimuth),
        ) {
            (Ok(lo), Ok(hi)) => occlusion_area(&hull, &rect, &wedge, lo, hi),
            _ => f64::INFINITY,
        };
        curve.push((theta, score));
        if score.is_finite() && best.map_or(true, |(b, _)| score < b) {
            best = Some((score, k));
        }
    }
    let (_, k) = best.ok_or(Error::EstimationFailed)?;
    let theta_star = k as f64 * delta;
    let rect = rect_from_theta(&hull, theta_star);
    Ok(FitResult {
        theta: theta_star,
        score_curve: curve,
        bbox: assemble_box3d(&rect, flat.z_min, flat.z_max),
    })
}
