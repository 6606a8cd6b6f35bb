//! Synthetic ground truth: a single-sensor scan simulator for rectangular
//! vehicles, a Monte-Carlo occlusion-area oracle for cross-checking the
//! analytic trapezoid computation, and a dataset exporter that writes scans
//! in the same directory layout the KITTI ingestion reads.

use crate::error::{Error, Result};
use crate::geometry::{Hull, LineNF, Vec2};
use crate::kitti::{canonicalize_yaw, write_scan, ClusterSample, RawScan};
use crate::pose::{select_projection_edge, Cluster3D, OrientedRectFrame, VisibleWedge, WedgeSide};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

/// Vertical band synthetic vehicle points occupy (meters).
pub const SYNTH_Z_BAND: f64 = 1.5;

/// Extra box size written to exported labels so points sitting exactly on a
/// face survive the f32 rounding of the binary scan format.
const EXPORT_DIM_MARGIN: f64 = 1e-3;

/// Rectangular vehicle footprint with a full-range heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleSpec {
    pub length: f64,
    pub width: f64,
    pub center: Vec2,
    /// Heading of the length axis, radians, any range.
    pub yaw: f64,
}

impl VehicleSpec {
    /// Requires length >= width > 0.
    pub fn new(length: f64, width: f64, center: Vec2, yaw: f64) -> Result<Self> {
        if !(width > 0.0 && length >= width) || !yaw.is_finite() || !center.is_finite() {
            return Err(Error::DegenerateCluster(
                "vehicle spec needs length >= width > 0 and finite pose",
            ));
        }
        Ok(VehicleSpec { length, width, center, yaw })
    }

    /// Orientation reduced to the rectangle-determined class [0, pi/2).
    pub fn canonical_yaw(&self) -> f64 {
        canonicalize_yaw(self.yaw)
    }

    /// Footprint corners, counter-clockwise.
    pub fn corners(&self) -> [Vec2; 4] {
        let (s, c) = self.yaw.sin_cos();
        let fwd = Vec2::new(c, s) * (self.length / 2.0);
        let side = Vec2::new(-s, c) * (self.width / 2.0);
        [
            self.center - fwd - side,
            self.center + fwd - side,
            self.center + fwd + side,
            self.center - fwd + side,
        ]
    }
}

/// Scan generation knobs. `angular_resolution` is radians between rays;
/// `noise_sigma` perturbs hit ranges radially; `dropout` discards each hit
/// ray independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub angular_resolution: f64,
    pub noise_sigma: f64,
    pub dropout: f64,
    pub seed: u64,
}

impl ScanConfig {
    pub fn new(angular_resolution: f64, noise_sigma: f64, dropout: f64, seed: u64) -> Result<Self> {
        if !(angular_resolution > 0.0) || !(noise_sigma >= 0.0) || !(0.0..1.0).contains(&dropout) {
            return Err(Error::DegenerateCluster(
                "scan config needs resolution > 0, sigma >= 0, dropout in [0,1)",
            ));
        }
        Ok(ScanConfig { angular_resolution, noise_sigma, dropout, seed })
    }

    pub fn noiseless(angular_resolution: f64, seed: u64) -> Self {
        ScanConfig { angular_resolution, noise_sigma: 0.0, dropout: 0.0, seed }
    }
}

/// First intersection of the ray `t * dir` (t > 0) with segment `a`-`b`.
fn ray_segment_hit(dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let denom = dir.cross(e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = a.cross(e) / denom;
    let u = a.cross(dir) / denom;
    if t > 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Simulate one sweep over a vehicle: rays on the fixed angular comb that
/// fall inside the footprint's subtended angle, each keeping its first
/// rectangle-boundary hit, optionally dropped and range-perturbed. Heights
/// are drawn uniformly in [0, [`SYNTH_Z_BAND`]]. Deterministic per seed; the
/// generator is consumed only for rays that hit.
pub fn simulate_scan(spec: &VehicleSpec, config: &ScanConfig) -> Result<ClusterSample> {
    let corners = spec.corners();
    let center_az = spec.center.azimuth();
    let mut rel_lo = f64::INFINITY;
    let mut rel_hi = f64::NEG_INFINITY;
    for c in corners {
        let rel = c.rotated(-center_az).azimuth();
        rel_lo = rel_lo.min(rel);
        rel_hi = rel_hi.max(rel);
    }
    let res = config.angular_resolution;
    let k_lo = ((center_az + rel_lo) / res).ceil() as i64;
    let k_hi = ((center_az + rel_hi) / res).floor() as i64;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = if config.noise_sigma > 0.0 {
        Some(Normal::new(0.0, config.noise_sigma).expect("finite sigma"))
    } else {
        None
    };
    let mut points = Vec::new();
    for k in k_lo..=k_hi {
        let phi = k as f64 * res;
        let dir = Vec2::new(phi.cos(), phi.sin());
        let mut first: Option<f64> = None;
        for i in 0..4 {
            if let Some(t) = ray_segment_hit(dir, corners[i], corners[(i + 1) % 4]) {
                first = Some(first.map_or(t, |best: f64| best.min(t)));
            }
        }
        let Some(mut t) = first else { continue };
        if config.dropout > 0.0 && rng.gen::<f64>() < config.dropout {
            continue;
        }
        if let Some(n) = &noise {
            t += n.sample(&mut rng);
        }
        let p = dir * t;
        let z = rng.gen_range(0.0..SYNTH_Z_BAND);
        points.push([p.x, p.y, z]);
    }
    if points.is_empty() {
        return Err(Error::EmptyScan);
    }
    let cluster = Cluster3D::new(points)?;
    Ok(ClusterSample {
        frame_id: "synth".into(),
        object_index: 0,
        cluster,
        gt_yaw_canonical: spec.canonical_yaw(),
    })
}

/// Monte-Carlo occlusion-area estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub area: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// One sensor-facing chord run: the chain walked from a boundary vertex
/// until the projection onto the reference line stops advancing.
fn chord_run(
    hull: &Hull,
    line: &LineNF,
    start: usize,
    target: usize,
    dir: isize,
    max_chords: usize,
) -> (Vec<(Vec2, Vec2)>, usize) {
    let e = line.direction();
    let mut chords = Vec::new();
    let mut last_sign = 0.0f64;
    let mut idx = start;
    for _ in 0..max_chords {
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
        chords.push((cur, nxt));
        if s != 0.0 {
            last_sign = s;
        }
        idx = nxt_i;
    }
    (chords, hull.steps_between(idx, target, dir))
}

/// Does `q` lie in the strip a chord run claims against its line: strictly
/// between some chord's endpoints along the line direction, nearer the line
/// than that chord (linearly interpolated)?
fn in_strip(q: Vec2, line: &LineNF, chords: &[(Vec2, Vec2)]) -> bool {
    let e = line.direction();
    let sq = q.dot(e);
    let uq = line.signed_distance(q).abs();
    for &(a, b) in chords {
        let sa = a.dot(e);
        let sb = b.dot(e);
        if (sq - sa) * (sq - sb) < 0.0 {
            let ua = line.signed_distance(a).abs();
            let ub = line.signed_distance(b).abs();
            let frac = (sq - sa) / (sb - sa);
            let depth = ua + (ub - ua) * frac;
            return uq < depth;
        }
    }
    false
}

/// Estimate the occlusion area by uniform sampling over the rectangle.
///
/// The measured region is the union (with multiplicity) of the two strips
/// the trapezoid decomposition integrates: points of the rectangle lying
/// between the sensor-facing hull chords and the projection edge each sweep
/// runs against. Samples falling in both strips count twice, mirroring the
/// analytic sum of the two sweeps. Deterministic per seed.
///
/// Fails with `NoVisibleEdge` when either boundary ray selects no edge,
/// exactly as the analytic scoring path would.
pub fn occlusion_area_oracle(
    hull: &Hull,
    rect: &OrientedRectFrame,
    wedge: &VisibleWedge,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let edge_max = select_projection_edge(rect, wedge, WedgeSide::MaxAzimuth)?;
    let edge_min = select_projection_edge(rect, wedge, WedgeSide::MinAzimuth)?;
    let line_max = &rect.lines[edge_max];
    let line_min = &rect.lines[edge_min];

    let (chords_max, gap) = chord_run(
        hull,
        line_max,
        wedge.max_az_idx,
        wedge.min_az_idx,
        1,
        hull.len(),
    );
    let (chords_min, _) = chord_run(
        hull,
        line_min,
        wedge.min_az_idx,
        wedge.max_az_idx,
        -1,
        gap,
    );

    let origin = rect.e1 * rect.lines[0].c + rect.e2 * rect.lines[1].c;
    let rect_area = rect.area();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0u64;
    let mut sum_sq = 0u64;
    for _ in 0..samples {
        let q = origin
            + rect.e1 * (rng.gen::<f64>() * rect.extent_e1)
            + rect.e2 * (rng.gen::<f64>() * rect.extent_e2);
        let mut multiplicity = 0u64;
        if in_strip(q, line_max, &chords_max) {
            multiplicity += 1;
        }
        if in_strip(q, line_min, &chords_min) {
            multiplicity += 1;
        }
        sum += multiplicity;
        sum_sq += multiplicity * multiplicity;
    }
    let n = samples as f64;
    let mean = sum as f64 / n;
    let var = (sum_sq as f64 / n - mean * mean).max(0.0);
    Ok(McEstimate {
        area: mean * rect_area,
        std_error: rect_area * (var / n).sqrt(),
        samples,
    })
}

/// Calibration text exported with synthetic frames: sensor x maps to camera
/// z, sensor y to camera -x, sensor z to camera -y (the usual relative pose
/// of a forward camera above a LiDAR, minus any offset).
pub fn canonical_calib_text() -> String {
    "R0_rect: 1 0 0 0 1 0 0 0 1\n\
     Tr_velo_to_cam: 0 -1 0 0 0 0 -1 0 1 0 0 0\n"
        .to_string()
}

fn wrap_to_pi(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Camera-frame rotation_y encoding a sensor-frame heading `yaw` under the
/// canonical calibration.
pub fn export_rotation_y(yaw: f64) -> f64 {
    wrap_to_pi(-FRAC_PI_2 - yaw)
}

/// Outcome of a dataset export.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExportSummary {
    pub written: usize,
    /// Scenes skipped because no ray hit (no files emitted for them).
    pub skipped_empty: usize,
}

/// Write scenes as a KITTI-layout dataset: `velodyne/NNNNNN.bin`,
/// `label_2/NNNNNN.txt` (one Car per frame), `calib/NNNNNN.txt`. Frame ids
/// number the *written* frames consecutively from 000000.
pub fn export_kitti(root: &Path, scenes: &[(VehicleSpec, ScanConfig)]) -> Result<ExportSummary> {
    for sub in ["velodyne", "label_2", "calib"] {
        std::fs::create_dir_all(root.join(sub))?;
    }
    let calib_text = canonical_calib_text();
    let mut summary = ExportSummary::default();
    for (spec, config) in scenes {
        let sample = match simulate_scan(spec, config) {
            Ok(s) => s,
            Err(Error::EmptyScan) | Err(Error::DegenerateCluster(_)) => {
                summary.skipped_empty += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let id = format!("{:06}", summary.written);
        let scan = RawScan {
            points: sample
                .cluster
                .points()
                .iter()
                .map(|p| [p[0] as f32, p[1] as f32, p[2] as f32, 0.0])
                .collect(),
        };
        std::fs::write(root.join("velodyne").join(format!("{id}.bin")), write_scan(&scan))?;

        let ry = export_rotation_y(spec.yaw);
        // Labels are padded by the noise envelope (like a human labeler
        // drawing around the points), so the box keeps every simulated hit.
        let margin = EXPORT_DIM_MARGIN + 5.0 * config.noise_sigma;
        let h = SYNTH_Z_BAND + margin;
        let w = spec.width + 2.0 * margin;
        let l = spec.length + 2.0 * margin;
        // Box bottom center in the camera frame: sensor (cx, cy, 0).
        let (x, y, z) = (-spec.center.y, 0.0, spec.center.x);
        let alpha = wrap_to_pi(ry - x.atan2(z));
        let label = format!(
            "Car 0.00 0 {alpha} 0.00 0.00 50.00 50.00 {h} {w} {l} {x} {y} {z} {ry}\n"
        );
        std::fs::write(root.join("label_2").join(format!("{id}.txt")), label)?;
        std::fs::write(root.join("calib").join(format!("{id}.txt")), &calib_text)?;
        summary.written += 1;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::convex_hull;
    use crate::kitti::{extract_clusters, load_frame, ExtractConfig};
    use crate::pose::{boundary_points, occlusion_area, rect_from_theta};
    use approx::assert_abs_diff_eq;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn broadside_scan_hits_one_face() {
        let spec = VehicleSpec::new(4.0, 1.8, v(15.0, 0.0), 0.0).unwrap();
        let cfg = ScanConfig::noiseless(0.25_f64.to_radians(), 1);
        let sample = simulate_scan(&spec, &cfg).unwrap();
        let near_x = 15.0 - 4.0 / 2.0;
        for p in sample.cluster.points() {
            assert_abs_diff_eq!(p[0], near_x, epsilon = 1e-9);
            assert!(p[1].abs() <= 0.9 + 1e-9);
            assert!((0.0..=SYNTH_Z_BAND).contains(&p[2]));
        }
        assert_eq!(sample.gt_yaw_canonical, 0.0);
    }

    #[test]
    fn angled_scan_hits_two_faces_with_predicted_count() {
        let yaw = 45.0_f64.to_radians();
        let spec = VehicleSpec::new(4.0, 1.8, v(15.0, 0.0), yaw).unwrap();
        let res = 0.2_f64.to_radians();
        let cfg = ScanConfig::noiseless(res, 2);
        let sample = simulate_scan(&spec, &cfg).unwrap();

        // Which of the two sensor-facing faces is each point on?
        let corners = spec.corners();
        let on_face = |p: Vec2, a: Vec2, b: Vec2| -> bool {
            let e = b - a;
            let t = (p - a).dot(e) / e.dot(e);
            (0.0..=1.0).contains(&t) && (p - (a + e * t)).norm() < 1e-9
        };
        let mut per_face = [0usize; 4];
        for p in sample.cluster.points() {
            let q = v(p[0], p[1]);
            let mut found = false;
            for i in 0..4 {
                if on_face(q, corners[i], corners[(i + 1) % 4]) {
                    per_face[i] += 1;
                    found = true;
                    break;
                }
            }
            assert!(found, "point {q:?} not on the footprint boundary");
        }
        let faces_hit = per_face.iter().filter(|&&c| c > 0).count();
        assert_eq!(faces_hit, 2, "face counts {per_face:?}");

        // count matches the subtended angle to within one ray
        let center_az = spec.center.azimuth();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in corners {
            let rel = c.rotated(-center_az).azimuth();
            lo = lo.min(rel);
            hi = hi.max(rel);
        }
        let expected = ((hi - lo) / res).floor();
        let got = sample.cluster.len() as f64;
        assert!(
            (got - expected).abs() <= 1.0,
            "count {got} vs predicted {expected}"
        );
    }

    #[test]
    fn noisy_scan_is_deterministic_and_near_boundary() {
        let spec = VehicleSpec::new(4.5, 1.9, v(12.0, 5.0), 0.6).unwrap();
        let cfg = ScanConfig::new(0.3_f64.to_radians(), 0.03, 0.1, 77).unwrap();
        let a = simulate_scan(&spec, &cfg).unwrap();
        let b = simulate_scan(&spec, &cfg).unwrap();
        assert_eq!(a, b);

        let corners = spec.corners();
        for p in a.cluster.points() {
            let q = v(p[0], p[1]);
            let mut d = f64::INFINITY;
            for i in 0..4 {
                let (s, e) = (corners[i], corners[(i + 1) % 4]);
                let seg = e - s;
                let t = ((q - s).dot(seg) / seg.dot(seg)).clamp(0.0, 1.0);
                d = d.min((q - (s + seg * t)).norm());
            }
            assert!(d <= 5.0 * cfg.noise_sigma, "point strays {d} m from the body");
        }
    }

    #[test]
    fn fully_dropped_scan_errors() {
        let spec = VehicleSpec::new(4.0, 1.8, v(15.0, 0.0), 0.2).unwrap();
        // resolution wider than the subtended angle can miss entirely
        let cfg = ScanConfig::noiseless(1.0, 3); // ~57 degrees per ray
        match simulate_scan(&spec, &cfg) {
            Err(Error::EmptyScan) | Err(Error::DegenerateCluster(_)) => {}
            other => panic!("expected an empty/degenerate scan, got {other:?}"),
        }
    }

    #[test]
    fn oracle_vanishes_when_hull_is_the_rectangle() {
        let h = convex_hull(&[v(10.0, -1.0), v(12.0, -1.0), v(12.0, 1.0), v(10.0, 1.0)]).unwrap();
        let w = boundary_points(&h).unwrap();
        let r = rect_from_theta(&h, 0.0);
        let est = occlusion_area_oracle(&h, &r, &w, 20_000, 5).unwrap();
        assert_eq!(est.area, 0.0, "no sample can land between chain and edge");
    }

    #[test]
    fn oracle_matches_hand_computed_triangle() {
        let h = convex_hull(&[v(10.0, -1.0), v(12.0, 1.0), v(12.0, -1.0)]).unwrap();
        let w = boundary_points(&h).unwrap();
        let r = rect_from_theta(&h, 0.0);
        let est = occlusion_area_oracle(&h, &r, &w, 100_000, 9).unwrap();
        assert!(est.std_error > 0.0);
        assert!(
            (est.area - 2.0).abs() <= 3.0 * est.std_error,
            "mc {} vs analytic 2.0 (3se = {})",
            est.area,
            3.0 * est.std_error
        );
    }

    #[test]
    fn oracle_error_shrinks_with_sample_count() {
        let h = convex_hull(&[v(10.0, -1.0), v(12.0, 1.0), v(12.0, -1.0)]).unwrap();
        let w = boundary_points(&h).unwrap();
        let r = rect_from_theta(&h, 0.0);
        let small = occlusion_area_oracle(&h, &r, &w, 20_000, 21).unwrap();
        let big = occlusion_area_oracle(&h, &r, &w, 40_000, 22).unwrap();
        let ratio = big.std_error / small.std_error;
        assert!(
            (ratio - 1.0 / 2.0_f64.sqrt()).abs() < 0.08,
            "se ratio {ratio} far from 1/sqrt(2)"
        );
    }

    #[test]
    fn oracle_is_exact_under_vertex_relabeling() {
        let pts = [v(9.0, -1.5), v(12.0, -2.0), v(13.0, 1.0), v(10.5, 2.0), v(9.2, 0.5)];
        let h1 = Hull::from_ccw_vertices(pts.to_vec()).unwrap();
        let rolled: Vec<Vec2> = (0..pts.len()).map(|i| pts[(i + 2) % pts.len()]).collect();
        let h2 = Hull::from_ccw_vertices(rolled).unwrap();
        for &theta in &[0.0, 0.4, 1.1] {
            let (r1, w1) = (rect_from_theta(&h1, theta), boundary_points(&h1).unwrap());
            let (r2, w2) = (rect_from_theta(&h2, theta), boundary_points(&h2).unwrap());
            let e1 = occlusion_area_oracle(&h1, &r1, &w1, 30_000, 4).unwrap();
            let e2 = occlusion_area_oracle(&h2, &r2, &w2, 30_000, 4).unwrap();
            assert_eq!(e1.area, e2.area, "relabeling changed the estimate at theta {theta}");
        }
    }

    #[test]
    fn oracle_agrees_with_analytic_area_on_random_hulls() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut compared = 0;
        while compared < 12 {
            let n = rng.gen_range(4..10);
            let pts: Vec<Vec2> = (0..n)
                .map(|_| v(rng.gen_range(8.0..14.0), rng.gen_range(-3.0..3.0)))
                .collect();
            let Ok(h) = convex_hull(&pts) else { continue };
            if h.len() < 3 {
                continue;
            }
            let theta = rng.gen_range(0.0..FRAC_PI_2);
            let r = rect_from_theta(&h, theta);
            let w = boundary_points(&h).unwrap();
            let (Ok(lo), Ok(hi)) = (
                select_projection_edge(&r, &w, WedgeSide::MinAzimuth),
                select_projection_edge(&r, &w, WedgeSide::MaxAzimuth),
            ) else {
                continue;
            };
            let analytic = occlusion_area(&h, &r, &w, lo, hi);
            let est = occlusion_area_oracle(&h, &r, &w, 50_000, 1000 + compared as u64).unwrap();
            assert!(est.area <= r.area() + 1e-9);
            let tol = (0.02 * r.area()).max(3.0 * est.std_error);
            assert!(
                (analytic - est.area).abs() <= tol,
                "analytic {analytic} vs mc {} (tol {tol})",
                est.area
            );
            compared += 1;
        }
    }

    #[test]
    fn export_round_trips_through_ingestion() {
        let dir = tempfile::tempdir().unwrap();
        let spec = VehicleSpec::new(4.2, 1.8, v(14.0, -6.0), 2.3).unwrap();
        let cfg = ScanConfig::new(0.25_f64.to_radians(), 0.01, 0.0, 11).unwrap();
        let summary = export_kitti(dir.path(), &[(spec, cfg)]).unwrap();
        assert_eq!(summary.written, 1);

        let (scan, labels, calib) = load_frame(dir.path(), "000000").unwrap();
        assert_eq!(labels.len(), 1);
        let direct = simulate_scan(&spec, &cfg).unwrap();
        assert_eq!(scan.points.len(), direct.cluster.len());

        let (samples, stats) = extract_clusters(
            "000000",
            &scan,
            &labels,
            &calib,
            &ExtractConfig { min_points: 2, ..Default::default() },
        );
        assert_eq!(stats.extracted, 1, "every exported point must re-ingest");
        assert_eq!(samples[0].cluster.len(), scan.points.len());
        assert_abs_diff_eq!(
            samples[0].gt_yaw_canonical,
            spec.canonical_yaw(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn rotation_y_encoding_survives_wrap() {
        for &yaw in &[0.0, 0.3, 1.5, 3.0, 4.7, 6.1, -2.0] {
            let ry = export_rotation_y(yaw);
            assert!((-PI..=PI).contains(&ry));
        }
    }
}
