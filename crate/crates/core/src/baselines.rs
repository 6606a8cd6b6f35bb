//! Search-based rectangle-fitting baselines.
//!
//! Each baseline scores candidate orientations on the same grid the
//! occlusion-minimizing fit uses, so method comparisons isolate the scoring
//! criterion itself. Scores are oriented so that smaller is better for every
//! criterion (closeness is negated accordingly).

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, Hull, Vec2};
use crate::pose::{
    assemble_box3d, estimate_pose, project_to_plane, rect_from_theta, theta_grid_len, Cluster3D,
    FitResult, OrientedRectFrame,
};
use serde::{Deserialize, Serialize};

/// Distance clamp for the closeness score: points closer to an edge than
/// this (meters) all count the same, keeping the score finite.
pub const CLOSENESS_CLAMP: f64 = 0.01;

/// Rectangle-orientation scoring criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    AreaMin,
    ClosenessMax,
    VarianceMin,
    OcclusionMin,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::OcclusionMin,
        Criterion::AreaMin,
        Criterion::ClosenessMax,
        Criterion::VarianceMin,
    ];

    /// Stable token used in reports and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            Criterion::AreaMin => "area_min",
            Criterion::ClosenessMax => "closeness_max",
            Criterion::VarianceMin => "variance_min",
            Criterion::OcclusionMin => "occlusion_min",
        }
    }

    pub fn parse(token: &str) -> Option<Criterion> {
        match token {
            "area_min" => Some(Criterion::AreaMin),
            "closeness_max" => Some(Criterion::ClosenessMax),
            "variance_min" => Some(Criterion::VarianceMin),
            "occlusion_min" => Some(Criterion::OcclusionMin),
            _ => None,
        }
    }
}

/// Rectangle area. Depends only on the rectangle (hence only on the hull and
/// the orientation), not on point density.
pub fn score_area(rect: &OrientedRectFrame) -> f64 {
    rect.area()
}

/// Per-point distances to the nearer line of each parallel pair:
/// (min over the two e1-normal lines, min over the two e2-normal lines).
fn pair_distances(p: Vec2, rect: &OrientedRectFrame) -> (f64, f64) {
    let d_e1 = rect.lines[0]
        .signed_distance(p)
        .abs()
        .min(rect.lines[2].signed_distance(p).abs());
    let d_e2 = rect.lines[1]
        .signed_distance(p)
        .abs()
        .min(rect.lines[3].signed_distance(p).abs());
    (d_e1, d_e2)
}

/// Negated closeness: `-sum(1 / max(d, clamp))` where `d` is each point's
/// distance to its nearest rectangle line. Smaller is better.
pub fn score_closeness(points: &[Vec2], rect: &OrientedRectFrame) -> f64 {
    let mut sum = 0.0;
    for &p in points {
        let (d1, d2) = pair_distances(p, rect);
        sum += 1.0 / d1.min(d2).max(CLOSENESS_CLAMP);
    }
    -sum
}

/// Sum of the two sample variances of point-to-nearest-line distances, with
/// points grouped by which parallel line pair lies nearer (ties go to the e1
/// pair). Groups with fewer than two points contribute zero.
pub fn score_variance(points: &[Vec2], rect: &OrientedRectFrame) -> f64 {
    let mut groups: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for &p in points {
        let (d1, d2) = pair_distances(p, rect);
        if d1 <= d2 {
            groups[0].push(d1);
        } else {
            groups[1].push(d2);
        }
    }
    groups.iter().map(|g| sample_variance(g)).sum()
}

fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

fn criterion_score(criterion: Criterion, points: &[Vec2], rect: &OrientedRectFrame) -> f64 {
    match criterion {
        Criterion::AreaMin => score_area(rect),
        Criterion::ClosenessMax => score_closeness(points, rect),
        Criterion::VarianceMin => score_variance(points, rect),
        Criterion::OcclusionMin => unreachable!("occlusion scoring delegates to estimate_pose"),
    }
}

/// Fit an orientation by grid search under the chosen criterion.
///
/// Shares the grid, tie-break (smallest angle wins ties), and result shape
/// with [`estimate_pose`]; the occlusion criterion delegates to it outright,
/// so those two paths cannot drift apart.
pub fn search_fit(cluster: &Cluster3D, criterion: Criterion, delta: f64) -> Result<FitResult> {
    if criterion == Criterion::OcclusionMin {
        return estimate_pose(cluster, delta);
    }
    let flat = project_to_plane(cluster)?;
    let hull = convex_hull(&flat.points)?;
    let n = theta_grid_len(delta);

    let mut curve = Vec::with_capacity(n);
    let mut best: Option<(f64, usize)> = None;
    for k in 0..n {
        let theta = k as f64 * delta;
        let rect = rect_from_theta(&hull, theta);
        let score = criterion_score(criterion, &flat.points, &rect);
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

/// Convenience dispatch used by benchmarks: hull-level scoring of one
/// orientation for any non-occlusion criterion.
pub fn score_at(criterion: Criterion, points: &[Vec2], hull: &Hull, theta: f64) -> f64 {
    let rect = rect_from_theta(hull, theta);
    criterion_score(criterion, points, &rect)
}
