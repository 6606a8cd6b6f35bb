//! Shared benchmark pipeline: seeded scene generation, batch fitting with
//! paired method comparison, single-threaded timing passes, the Monte-Carlo
//! oracle cross-check, and report assembly. The CLI and the test suite both
//! drive benchmarks through this module so their numbers cannot diverge.

use crate::baselines::{search_fit, Criterion};
use crate::error::{Error, Result};
use crate::eval::{
    method_report, signed_orientation_error, time_fit, warm_up, BenchmarkReport, ReportConfig,
};
use crate::geometry::{convex_hull, Hull, Vec2};
use crate::kitti::{
    extract_clusters, frame_ids, load_frame, ClusterSample, ExtractConfig, ExtractStats,
};
use crate::pose::{
    boundary_points, occlusion_area, rect_from_theta, select_projection_edge, WedgeSide,
};
use crate::synth::{occlusion_area_oracle, simulate_scan, ScanConfig, VehicleSpec};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;

/// Derive an independent per-index seed from a run seed (splitmix64 step),
/// so work items can be processed in any order with stable results.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Synthetic benchmark configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthBenchConfig {
    pub scenes: usize,
    pub noise_sigma: f64,
    pub dropout: f64,
    pub angular_resolution: f64,
    pub seed: u64,
    /// Orientation grid step, radians.
    pub delta: f64,
    pub methods: Vec<Criterion>,
    /// Collect per-fit runtimes (adds a serial timing pass; makes the
    /// report content run-dependent).
    pub timing: bool,
}

impl Default for SynthBenchConfig {
    fn default() -> Self {
        SynthBenchConfig {
            scenes: 1000,
            noise_sigma: 0.0,
            dropout: 0.0,
            angular_resolution: 0.2_f64.to_radians(),
            seed: 42,
            delta: 0.5_f64.to_radians(),
            methods: Criterion::ALL.to_vec(),
            timing: true,
        }
    }
}

/// Deterministic scene for one benchmark index: a vehicle posed so the
/// sensor sees exactly two faces (viewing angle 10-80 degrees off the body
/// axes), at 8-25 m range, with a full-range heading.
pub fn synth_scene(cfg: &SynthBenchConfig, index: usize) -> (VehicleSpec, ScanConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, index as u64));
    let canonical = rng.gen_range(0.0..FRAC_PI_2);
    let quadrant = rng.gen_range(0..4) as f64;
    let yaw = canonical + quadrant * FRAC_PI_2;
    let view = rng.gen_range(10.0_f64.to_radians()..80.0_f64.to_radians());
    let dist = rng.gen_range(8.0..25.0);
    let length = rng.gen_range(3.4..5.2);
    let width = rng.gen_range(1.5..2.1);
    let center_az = yaw + view + PI;
    let center = Vec2::new(center_az.cos(), center_az.sin()) * dist;
    let spec = VehicleSpec::new(length, width, center, yaw).expect("ranges are valid");
    let scan = ScanConfig {
        angular_resolution: cfg.angular_resolution,
        noise_sigma: cfg.noise_sigma,
        dropout: cfg.dropout,
        seed: mix_seed(cfg.seed, (index as u64) | 0x8000_0000_0000_0000),
    };
    (spec, scan)
}

/// Fit every method on every sample, keeping only samples all methods
/// handled (paired comparison). Returns per-method signed errors (degrees),
/// the kept samples, and the number dropped to fit failures.
fn fit_all(
    samples: Vec<ClusterSample>,
    methods: &[Criterion],
    delta: f64,
) -> (Vec<Vec<f64>>, Vec<ClusterSample>, usize) {
    let fitted: Vec<(ClusterSample, Option<Vec<f64>>)> = samples
        .into_par_iter()
        .map(|sample| {
            let errors: Option<Vec<f64>> = methods
                .iter()
                .map(|&m| {
                    search_fit(&sample.cluster, m, delta)
                        .ok()
                        .map(|fit| signed_orientation_error(fit.theta, sample.gt_yaw_canonical))
                })
                .collect();
            (sample, errors)
        })
        .collect();

    let mut signed: Vec<Vec<f64>> = vec![Vec::new(); methods.len()];
    let mut kept = Vec::new();
    let mut failures = 0usize;
    for (sample, errors) in fitted {
        match errors {
            Some(errs) => {
                for (m, e) in errs.into_iter().enumerate() {
                    signed[m].push(e);
                }
                kept.push(sample);
            }
            None => failures += 1,
        }
    }
    (signed, kept, failures)
}

/// Serial timing pass: per method, warm up on the first cluster then time
/// one fit per cluster on this thread.
fn timing_pass(samples: &[ClusterSample], methods: &[Criterion], delta: f64) -> Vec<Vec<f64>> {
    let mut runtimes = vec![Vec::with_capacity(samples.len()); methods.len()];
    let Some(first) = samples.first() else {
        return runtimes;
    };
    for (m, &criterion) in methods.iter().enumerate() {
        warm_up(&first.cluster, criterion, delta, 10);
        for s in samples {
            runtimes[m].push(time_fit(&s.cluster, criterion, delta));
        }
    }
    runtimes
}

fn assemble_report(
    config: ReportConfig,
    methods: &[Criterion],
    signed: &[Vec<f64>],
    runtimes: Option<&[Vec<f64>]>,
) -> Result<BenchmarkReport> {
    let mut blocks = Vec::with_capacity(methods.len());
    for (m, &criterion) in methods.iter().enumerate() {
        blocks.push(method_report(
            criterion.name(),
            &signed[m],
            runtimes.map(|r| r[m].as_slice()),
        )?);
    }
    Ok(BenchmarkReport { config, methods: blocks })
}

/// Generate, fit, and score `cfg.scenes` synthetic scenes.
pub fn run_synth_bench(cfg: &SynthBenchConfig) -> Result<BenchmarkReport> {
    let scenes: Vec<Option<ClusterSample>> = (0..cfg.scenes)
        .into_par_iter()
        .map(|i| {
            let (spec, scan_cfg) = synth_scene(cfg, i);
            simulate_scan(&spec, &scan_cfg).ok()
        })
        .collect();
    let mut skipped_empty = 0usize;
    let samples: Vec<ClusterSample> = scenes
        .into_iter()
        .filter_map(|s| {
            if s.is_none() {
                skipped_empty += 1;
            }
            s
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::EmptyScan);
    }
    let (signed, kept, fit_failures) = fit_all(samples, &cfg.methods, cfg.delta);
    let runtimes = cfg.timing.then(|| timing_pass(&kept, &cfg.methods, cfg.delta));
    assemble_report(
        ReportConfig {
            delta_deg: cfg.delta.to_degrees(),
            classes: Vec::new(),
            min_points: 0,
            seed: cfg.seed,
            std_kind: "population".into(),
            error_wrap: "(-45,45] deg".into(),
            skipped_empty,
            skipped_sparse: 0,
            fit_failures,
            evaluated: kept.len(),
        },
        &cfg.methods,
        &signed,
        runtimes.as_deref(),
    )
}

/// KITTI-layout benchmark configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct KittiBenchConfig {
    pub root: PathBuf,
    /// Frame ids to use; `None` means every frame under `root/velodyne`.
    pub frames: Option<Vec<String>>,
    pub classes: Vec<String>,
    pub min_points: usize,
    pub delta: f64,
    pub methods: Vec<Criterion>,
    pub timing: bool,
    /// Echoed into the report for provenance; ingestion itself is not random.
    pub seed: u64,
}

impl KittiBenchConfig {
    pub fn new(root: PathBuf) -> Self {
        KittiBenchConfig {
            root,
            frames: None,
            classes: vec!["Car".into(), "Van".into(), "Truck".into()],
            min_points: 5,
            delta: 0.5_f64.to_radians(),
            methods: Criterion::ALL.to_vec(),
            timing: true,
            seed: 42,
        }
    }
}

/// Ingest a dataset tree, extract labeled vehicle clusters, and score every
/// configured method on them.
pub fn run_kitti_bench(cfg: &KittiBenchConfig) -> Result<BenchmarkReport> {
    let ids = match &cfg.frames {
        Some(ids) => ids.clone(),
        None => frame_ids(&cfg.root)?,
    };
    if ids.is_empty() {
        return Err(Error::EmptyInput("no frames to benchmark"));
    }
    let extract_cfg = ExtractConfig {
        classes: cfg.classes.clone(),
        min_points: cfg.min_points,
    };
    let per_frame: Vec<Result<(Vec<ClusterSample>, ExtractStats)>> = ids
        .par_iter()
        .map(|id| {
            let (scan, labels, calib) = load_frame(&cfg.root, id)?;
            Ok(extract_clusters(id, &scan, &labels, &calib, &extract_cfg))
        })
        .collect();

    let mut samples = Vec::new();
    let mut stats = ExtractStats::default();
    for frame in per_frame {
        let (mut frame_samples, frame_stats) = frame?;
        samples.append(&mut frame_samples);
        stats.absorb(frame_stats);
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput("no usable clusters in the selected frames"));
    }
    let (signed, kept, fit_failures) = fit_all(samples, &cfg.methods, cfg.delta);
    let runtimes = cfg.timing.then(|| timing_pass(&kept, &cfg.methods, cfg.delta));
    assemble_report(
        ReportConfig {
            delta_deg: cfg.delta.to_degrees(),
            classes: cfg.classes.clone(),
            min_points: cfg.min_points,
            seed: cfg.seed,
            std_kind: "population".into(),
            error_wrap: "(-45,45] deg".into(),
            skipped_empty: stats.skipped_empty,
            skipped_sparse: stats.skipped_sparse,
            fit_failures,
            evaluated: kept.len(),
        },
        &cfg.methods,
        &signed,
        runtimes.as_deref(),
    )
}

/// Random compact cluster hull with the sensor well outside it, plus a
/// random grid-free orientation — the trial generator for oracle checks.
pub fn random_hull_and_theta(rng: &mut ChaCha8Rng) -> (Hull, f64) {
    let hull = loop {
        let cx = rng.gen_range(6.0..18.0);
        let cy = rng.gen_range(-6.0..6.0);
        let ex = rng.gen_range(0.8..3.5);
        let ey = rng.gen_range(0.8..3.5);
        let n = rng.gen_range(4..=14);
        let pts: Vec<Vec2> = (0..n)
            .map(|_| {
                Vec2::new(
                    cx + rng.gen_range(-ex..ex),
                    cy + rng.gen_range(-ey..ey),
                )
            })
            .collect();
        match convex_hull(&pts) {
            Ok(h) if h.len() >= 3 && boundary_points(&h).is_ok() => break h,
            _ => continue,
        }
    };
    let theta = rng.gen_range(0.0..FRAC_PI_2);
    (hull, theta)
}

/// Oracle cross-check configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCheckConfig {
    pub trials: usize,
    pub mc_samples: usize,
    pub seed: u64,
    /// Relative floor of the allowed deviation (fraction of rectangle
    /// area). Zero disables all tolerance: any nonzero deviation fails.
    pub tolerance_frac: f64,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        OracleCheckConfig {
            trials: 500,
            mc_samples: 100_000,
            seed: 42,
            tolerance_frac: 0.02,
        }
    }
}

/// One failed trial, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleTrialRecord {
    pub trial: usize,
    pub analytic: f64,
    pub monte_carlo: f64,
    pub deviation: f64,
    pub allowed: f64,
}

/// Outcome of an oracle cross-check run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheckSummary {
    pub trials_requested: usize,
    pub compared: usize,
    /// Trials where no projection edge existed for the drawn orientation.
    pub skipped_no_edge: usize,
    pub failures: usize,
    pub max_deviation: f64,
    /// The trial attaining `max_deviation`.
    pub worst: Option<OracleTrialRecord>,
}

impl OracleCheckSummary {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.compared > 0
    }
}

/// Compare the analytic occlusion area against the Monte-Carlo oracle over
/// random (hull, orientation) trials.
pub fn run_oracle_check(cfg: &OracleCheckConfig) -> OracleCheckSummary {
    enum Trial {
        Skipped,
        Compared(OracleTrialRecord),
    }
    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, i as u64));
            let (hull, theta) = random_hull_and_theta(&mut rng);
            let rect = rect_from_theta(&hull, theta);
            let wedge = boundary_points(&hull).expect("generator keeps origin outside");
            let (Ok(lo), Ok(hi)) = (
                select_projection_edge(&rect, &wedge, WedgeSide::MinAzimuth),
                select_projection_edge(&rect, &wedge, WedgeSide::MaxAzimuth),
            ) else {
                return Trial::Skipped;
            };
            let analytic = occlusion_area(&hull, &rect, &wedge, lo, hi);
            let mc = occlusion_area_oracle(
                &hull,
                &rect,
                &wedge,
                cfg.mc_samples,
                mix_seed(cfg.seed, (i as u64) | 0x4000_0000_0000_0000),
            )
            .expect("selection succeeded above");
            let allowed = if cfg.tolerance_frac == 0.0 {
                0.0
            } else {
                (cfg.tolerance_frac * rect.area()).max(3.0 * mc.std_error)
            };
            Trial::Compared(OracleTrialRecord {
                trial: i,
                analytic,
                monte_carlo: mc.area,
                deviation: (analytic - mc.area).abs(),
                allowed,
            })
        })
        .collect();

    let mut summary = OracleCheckSummary {
        trials_requested: cfg.trials,
        compared: 0,
        skipped_no_edge: 0,
        failures: 0,
        max_deviation: 0.0,
        worst: None,
    };
    for t in trials {
        match t {
            Trial::Skipped => summary.skipped_no_edge += 1,
            Trial::Compared(rec) => {
                summary.compared += 1;
                if rec.deviation > rec.allowed {
                    summary.failures += 1;
                }
                if rec.deviation >= summary.max_deviation {
                    summary.max_deviation = rec.deviation;
                    summary.worst = Some(rec);
                }
            }
        }
    }
    summary
}
