//! KITTI object-detection ingestion: velodyne scans, label files, calibration
//! matrices, and per-object cluster extraction in the sensor frame.
//!
//! Directory layout per frame id `XXXXXX`: `velodyne/XXXXXX.bin` (binary
//! little-endian f32 quadruples), `label_2/XXXXXX.txt`, `calib/XXXXXX.txt`.

use crate::error::{Error, Result};
use crate::pose::Cluster3D;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

/// Boundary slack when testing scan points against a label's 3D box (meters).
pub const BOX_CONTAINMENT_EPS: f64 = 1e-6;

/// Raw LiDAR sweep: sensor-frame (x, y, z, reflectance) per point.
#[derive(Debug, Clone, PartialEq)]
pub struct RawScan {
    pub points: Vec<[f32; 4]>,
}

/// Decode a velodyne blob: packed little-endian f32 quadruples, no header.
pub fn read_scan(bytes: &[u8]) -> Result<RawScan> {
    if bytes.len() % 16 != 0 {
        return Err(Error::format(
            0,
            format!("scan blob length {} is not a multiple of 16", bytes.len()),
        ));
    }
    let mut points = Vec::with_capacity(bytes.len() / 16);
    for rec in bytes.chunks_exact(16) {
        let f = |i: usize| f32::from_le_bytes([rec[i], rec[i + 1], rec[i + 2], rec[i + 3]]);
        points.push([f(0), f(4), f(8), f(12)]);
    }
    Ok(RawScan { points })
}

/// Encode a scan back to the binary blob form (mirror of [`read_scan`]).
pub fn write_scan(scan: &RawScan) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(scan.points.len() * 16);
    for p in &scan.points {
        for c in p {
            bytes.extend_from_slice(&c.to_le_bytes());
        }
    }
    bytes
}

/// One object annotation line: the standard 15-field training label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub object_type: String,
    pub truncated: f64,
    pub occluded: i32,
    pub alpha: f64,
    pub bbox2d: [f64; 4],
    /// (height, width, length) in meters.
    pub dims: [f64; 3],
    /// Box bottom-center in the rectified camera frame (x right, y down, z forward).
    pub location: [f64; 3],
    /// Rotation about the camera y axis, radians in [-pi, pi].
    pub rotation_y: f64,
}

impl LabelRecord {
    pub fn is_dont_care(&self) -> bool {
        self.object_type == "DontCare"
    }
}

/// Parse a label file: exactly 15 whitespace-separated fields per line.
/// "DontCare" rows parse like any other and are flagged via
/// [`LabelRecord::is_dont_care`]. Blank lines are not tolerated mid-file but
/// a trailing newline is.
pub fn parse_labels(text: &str) -> Result<Vec<LabelRecord>> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 15 {
            return Err(Error::format(
                lineno,
                format!("expected 15 label fields, found {}", fields.len()),
            ));
        }
        let num = |idx: usize| -> Result<f64> {
            fields[idx]
                .parse::<f64>()
                .map_err(|_| Error::format(lineno, format!("bad numeric field {:?}", fields[idx])))
        };
        let occluded = fields[2]
            .parse::<f64>()
            .map_err(|_| Error::format(lineno, format!("bad occlusion code {:?}", fields[2])))?
            as i32;
        records.push(LabelRecord {
            object_type: fields[0].to_string(),
            truncated: num(1)?,
            occluded,
            alpha: num(3)?,
            bbox2d: [num(4)?, num(5)?, num(6)?, num(7)?],
            dims: [num(8)?, num(9)?, num(10)?],
            location: [num(11)?, num(12)?, num(13)?],
            rotation_y: num(14)?,
        });
    }
    Ok(records)
}

/// Calibration: sensor-to-camera rigid transform plus the rectifying rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibMatrices {
    /// 3x4 row-major [R | t] mapping sensor coordinates into the camera frame.
    pub velo_to_cam: [[f64; 4]; 3],
    /// 3x3 row-major rectification rotation applied after `velo_to_cam`.
    pub rect_rotation: [[f64; 3]; 3],
}

impl CalibMatrices {
    pub fn identity() -> Self {
        CalibMatrices {
            velo_to_cam: [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
            ],
            rect_rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Map a sensor-frame point into the rectified camera frame.
    pub fn sensor_to_camera_point(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.velo_to_cam;
        let q = [
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2] + m[0][3],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2] + m[1][3],
            m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2] + m[2][3],
        ];
        mat3_mul(&self.rect_rotation, q)
    }

    /// Map a rectified-camera direction back into the sensor frame
    /// (rotations only; directions carry no translation).
    pub fn camera_dir_to_sensor(&self, d: [f64; 3]) -> [f64; 3] {
        let in_cam0 = mat3_transpose_mul(&self.rect_rotation, d);
        let r = &self.velo_to_cam;
        let rot = [
            [r[0][0], r[0][1], r[0][2]],
            [r[1][0], r[1][1], r[1][2]],
            [r[2][0], r[2][1], r[2][2]],
        ];
        mat3_transpose_mul(&rot, in_cam0)
    }
}

fn mat3_mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn mat3_transpose_mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

fn orthonormality_residual(m: &[[f64; 3]; 3]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|k| m[i][k] * m[j][k]).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - expect).abs());
        }
    }
    worst
}

/// Parse a calib file. Requires `Tr_velo_to_cam` (12 values) and `R0_rect`
/// (9 values); both rotation blocks must be orthonormal within 1e-4.
pub fn parse_calib(text: &str) -> Result<CalibMatrices> {
    let mut velo_to_cam: Option<[[f64; 4]; 3]> = None;
    let mut rect_rotation: Option<[[f64; 3]; 3]> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let Some((key, rest)) = line.split_once(':') else {
            continue;
        };
        let key = key.trim();
        if key != "Tr_velo_to_cam" && key != "R0_rect" {
            continue;
        }
        let vals: Vec<f64> = rest
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::format(lineno, format!("bad calib value {t:?}")))
            })
            .collect::<Result<_>>()?;
        match key {
            "Tr_velo_to_cam" => {
                if vals.len() != 12 {
                    return Err(Error::format(
                        lineno,
                        format!("Tr_velo_to_cam needs 12 values, found {}", vals.len()),
                    ));
                }
                let mut m = [[0.0; 4]; 3];
                for r in 0..3 {
                    for c in 0..4 {
                        m[r][c] = vals[r * 4 + c];
                    }
                }
                velo_to_cam = Some(m);
            }
            "R0_rect" => {
                if vals.len() != 9 {
                    return Err(Error::format(
                        lineno,
                        format!("R0_rect needs 9 values, found {}", vals.len()),
                    ));
                }
                let mut m = [[0.0; 3]; 3];
                for r in 0..3 {
                    for c in 0..3 {
                        m[r][c] = vals[r * 3 + c];
                    }
                }
                rect_rotation = Some(m);
            }
            _ => unreachable!(),
        }
    }
    let velo_to_cam = velo_to_cam.ok_or_else(|| Error::format(0, "missing Tr_velo_to_cam"))?;
    let rect_rotation = rect_rotation.ok_or_else(|| Error::format(0, "missing R0_rect"))?;

    let rot = [
        [velo_to_cam[0][0], velo_to_cam[0][1], velo_to_cam[0][2]],
        [velo_to_cam[1][0], velo_to_cam[1][1], velo_to_cam[1][2]],
        [velo_to_cam[2][0], velo_to_cam[2][1], velo_to_cam[2][2]],
    ];
    for (name, m) in [("Tr_velo_to_cam rotation", &rot), ("R0_rect", &rect_rotation)] {
        let residual = orthonormality_residual(m);
        if residual > 1e-4 {
            return Err(Error::format(
                0,
                format!("{name} is not orthonormal (residual {residual:.2e})"),
            ));
        }
    }
    Ok(CalibMatrices { velo_to_cam, rect_rotation })
}

/// Reduce an orientation to the quarter-turn equivalence class a rectangle
/// determines: radians in [0, pi/2).
pub fn canonicalize_yaw(yaw: f64) -> f64 {
    let r = yaw.rem_euclid(FRAC_PI_2);
    if r >= FRAC_PI_2 {
        0.0
    } else {
        r
    }
}

/// Ground-truth heading of a labeled box, expressed in the sensor frame
/// (full-range, before canonicalization).
pub fn label_yaw_in_sensor_frame(label: &LabelRecord, calib: &CalibMatrices) -> f64 {
    let (s, c) = label.rotation_y.sin_cos();
    // Forward direction of the box in the camera frame (y points down).
    let heading_cam = [c, 0.0, -s];
    let heading = calib.camera_dir_to_sensor(heading_cam);
    heading[1].atan2(heading[0])
}

/// One labeled object's points, cut from a scan, with canonical ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSample {
    pub frame_id: String,
    /// Index of the source label within its frame's label file.
    pub object_index: usize,
    pub cluster: Cluster3D,
    /// Ground-truth yaw reduced to [0, pi/2).
    pub gt_yaw_canonical: f64,
}

/// Filters applied during cluster extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    /// Object classes to keep (exact match on the label's type token).
    pub classes: Vec<String>,
    /// Minimum points for a usable cluster; sparser ones are skipped.
    pub min_points: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            classes: vec!["Car".into(), "Van".into(), "Truck".into()],
            min_points: 5,
        }
    }
}

impl ExtractConfig {
    fn keeps(&self, label: &LabelRecord) -> bool {
        self.classes.iter().any(|c| c == &label.object_type)
    }
}

/// Bookkeeping for dropped objects, surfaced in benchmark reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractStats {
    pub extracted: usize,
    /// Vehicle labels whose box contained no scan points at all.
    pub skipped_empty: usize,
    /// Vehicle labels with fewer than `min_points` points.
    pub skipped_sparse: usize,
}

impl ExtractStats {
    pub fn absorb(&mut self, other: ExtractStats) {
        self.extracted += other.extracted;
        self.skipped_empty += other.skipped_empty;
        self.skipped_sparse += other.skipped_sparse;
    }
}

/// Cut per-object clusters out of a scan using the frame's labels.
///
/// Each kept label's 3D box is tested in its own local frame: a scan point
/// belongs to the object when it lies inside the box within
/// [`BOX_CONTAINMENT_EPS`] on every axis (boundary points count as inside).
/// Labels yielding no points or too few points are dropped and counted.
pub fn extract_clusters(
    frame_id: &str,
    scan: &RawScan,
    labels: &[LabelRecord],
    calib: &CalibMatrices,
    config: &ExtractConfig,
) -> (Vec<ClusterSample>, ExtractStats) {
    let mut samples = Vec::new();
    let mut stats = ExtractStats::default();
    for (object_index, label) in labels.iter().enumerate() {
        if label.is_dont_care() || !config.keeps(label) {
            continue;
        }
        let [h, w, l] = label.dims;
        let loc = label.location;
        let (s, c) = label.rotation_y.sin_cos();
        let mut points = Vec::new();
        for p in &scan.points {
            let cam = calib.sensor_to_camera_point([p[0] as f64, p[1] as f64, p[2] as f64]);
            let dx = cam[0] - loc[0];
            let dy = cam[1] - loc[1];
            let dz = cam[2] - loc[2];
            // Undo the box rotation about camera-y; the label's location is
            // the box bottom center, with camera y pointing down.
            let local_x = c * dx - s * dz;
            let local_z = s * dx + c * dz;
            let inside = local_x.abs() <= l / 2.0 + BOX_CONTAINMENT_EPS
                && local_z.abs() <= w / 2.0 + BOX_CONTAINMENT_EPS
                && dy <= BOX_CONTAINMENT_EPS
                && dy >= -h - BOX_CONTAINMENT_EPS;
            if inside {
                points.push([p[0] as f64, p[1] as f64, p[2] as f64]);
            }
        }
        if points.is_empty() {
            stats.skipped_empty += 1;
            continue;
        }
        if points.len() < config.min_points {
            stats.skipped_sparse += 1;
            continue;
        }
        let cluster = match Cluster3D::new(points) {
            Ok(c) => c,
            Err(_) => {
                stats.skipped_sparse += 1;
                continue;
            }
        };
        samples.push(ClusterSample {
            frame_id: frame_id.to_string(),
            object_index,
            cluster,
            gt_yaw_canonical: canonicalize_yaw(label_yaw_in_sensor_frame(label, calib)),
        });
        stats.extracted += 1;
    }
    (samples, stats)
}

/// Frame ids present under `root/velodyne`, sorted ascending.
pub fn frame_ids(root: &Path) -> Result<Vec<String>> {
    let dir = root.join("velodyne");
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(&dir)? {
        let entry = entry?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(stem) = name.strip_suffix(".bin") {
            ids.push(stem.to_string());
        }
    }
    ids.sort();
    Ok(ids)
}

/// Load one frame's scan, labels, and calibration from the standard layout.
pub fn load_frame(root: &Path, id: &str) -> Result<(RawScan, Vec<LabelRecord>, CalibMatrices)> {
    let scan = read_scan(&std::fs::read(root.join("velodyne").join(format!("{id}.bin")))?)?;
    let labels = parse_labels(&std::fs::read_to_string(
        root.join("label_2").join(format!("{id}.txt")),
    )?)?;
    let calib = parse_calib(&std::fs::read_to_string(
        root.join("calib").join(format!("{id}.txt")),
    )?)?;
    Ok((scan, labels, calib))
}
