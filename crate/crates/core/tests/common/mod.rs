//! Independent reference implementations ("oracles") the integration tests
//! check the library against. Everything here is deliberately written with
//! different algorithms than the production code: gift wrapping instead of a
//! sorted scan, fan triangulation instead of the shoelace sum, and brute
//! segment casting instead of the candidate/receded-vertex edge selection.

#![allow(dead_code)] // each test target compiles its own copy of this module

use hullfit_core::pose::VERTEX_COINCIDENCE_EPS;
use hullfit_core::{OrientedRectFrame, Vec2};

/// Convex hull by gift wrapping: CCW, starting from the lowest point
/// (ties broken by lowest x), collinear intermediates dropped by always
/// wrapping to the farthest point on a tie. Panics on < 3 distinct points —
/// callers feed it general-position random sets.
pub fn gift_wrap_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = Vec::new();
    for &p in points {
        if !pts.iter().any(|q| q.distance(p) <= 1e-9) {
            pts.push(p);
        }
    }
    assert!(pts.len() >= 3, "oracle needs 3+ distinct points");
    let start = *pts
        .iter()
        .min_by(|p, q| p.y.total_cmp(&q.y).then(p.x.total_cmp(&q.x)))
        .unwrap();
    let mut hull = vec![start];
    let mut current = start;
    loop {
        let mut next: Option<Vec2> = None;
        for &cand in &pts {
            if cand == current {
                continue;
            }
            next = Some(match next {
                None => cand,
                Some(best) => {
                    let turn = (best - current).cross(cand - current);
                    // cand strictly right of current->best, or collinear but
                    // farther: it becomes the new wrap target.
                    if turn < 0.0
                        || (turn == 0.0 && current.distance(cand) > current.distance(best))
                    {
                        cand
                    } else {
                        best
                    }
                }
            });
        }
        let next = next.unwrap();
        if next == start {
            break;
        }
        hull.push(next);
        current = next;
        assert!(hull.len() <= pts.len(), "gift wrap failed to close");
    }
    hull
}

/// Polygon area by fan triangulation from the first vertex (convex CCW
/// input): a different summation than the shoelace formula, so rounding
/// disagreements between the two are meaningful.
pub fn fan_triangulation_area(vertices: &[Vec2]) -> f64 {
    assert!(vertices.len() >= 3);
    let v0 = vertices[0];
    let mut total = 0.0;
    for w in vertices[1..].windows(2) {
        total += 0.5 * (w[0] - v0).cross(w[1] - v0).abs();
    }
    total
}

/// What the brute ray cast saw for one boundary ray.
pub enum Crossing {
    /// Nearest boundary crossing: edge index and distance from the sensor.
    Edge { index: usize, distance: f64 },
    /// The trial is too close to a rectangle vertex to adjudicate: either
    /// the boundary point or the nearest crossing sits within
    /// [`VERTEX_COINCIDENCE_EPS`] of one.
    NearVertex,
}

/// First-crossing oracle: cast the ray from the sensor (origin) through the
/// boundary point `bp` and return the rectangle edge it crosses first
/// (smallest positive distance), testing every edge as a closed segment.
pub fn first_crossing_edge(rect: &OrientedRectFrame, bp: Vec2) -> Crossing {
    for v in &rect.vertices {
        if v.distance(bp) < VERTEX_COINCIDENCE_EPS {
            return Crossing::NearVertex;
        }
    }
    let dir = bp * (1.0 / bp.norm());
    let mut best: Option<(f64, usize, Vec2)> = None;
    for idx in 0..4 {
        let (a, b) = rect.edge_endpoints(idx);
        let e = b - a;
        let denom = dir.cross(e);
        if denom.abs() < 1e-15 {
            continue; // ray parallel to this edge
        }
        // origin + t*dir = a + u*e
        let t = a.cross(e) / denom;
        let u = a.cross(dir) / denom;
        if t > 0.0 && (0.0..=1.0).contains(&u) && best.map_or(true, |(bt, _, _)| t < bt) {
            best = Some((t, idx, a + e * u));
        }
    }
    let (t, idx, hit) = best.expect("ray through an interior point must cross the boundary");
    let (a, b) = rect.edge_endpoints(idx);
    if hit.distance(a) < VERTEX_COINCIDENCE_EPS || hit.distance(b) < VERTEX_COINCIDENCE_EPS {
        return Crossing::NearVertex;
    }
    Crossing::Edge { index: idx, distance: t }
}
