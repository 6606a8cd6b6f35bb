//! Command-line front end for the hull-fitting library: fit a single cluster
//! file, benchmark a KITTI-layout dataset or generated synthetic scans, and
//! cross-check the analytic occluded area against Monte-Carlo sampling.
//!
//! Exit codes: 0 success; 2 bad input (CLI usage, unreadable/malformed files,
//! empty frame selections); 3 degenerate cluster on `fit`; 1 everything else,
//! including an oracle tolerance breach.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use hullfit_core::baselines::{search_fit, Criterion};
use hullfit_core::eval::{emit_report, BenchmarkReport, ReportFormat};
use hullfit_core::harness::{
    run_kitti_bench, run_oracle_check, run_synth_bench, KittiBenchConfig, OracleCheckConfig,
    SynthBenchConfig,
};
use hullfit_core::kitti::read_scan;
use hullfit_core::{Cluster3D, Error, FitResult};

#[derive(Parser)]
#[command(
    name = "hullfit",
    version,
    about = "Vehicle orientation fitting on LiDAR clusters by convex-hull rectangle search",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one cluster file and print the result as JSON
    Fit(FitArgs),
    /// Benchmark every configured method over a KITTI-layout dataset tree
    BenchKitti(BenchKittiArgs),
    /// Benchmark every configured method over seeded synthetic scans
    BenchSynth(BenchSynthArgs),
    /// Compare the analytic occluded area against Monte-Carlo sampling
    OracleCheck(OracleArgs),
}

#[derive(clap::Args)]
struct FitArgs {
    /// Cluster file: CSV rows `x,y,z` (optional header, `#` comments), or a
    /// packed float32 x/y/z/intensity blob when the extension is `.bin`
    input: PathBuf,

    /// Scoring criterion: occlusion_min, area_min, closeness_max, variance_min
    #[arg(long, default_value = "occlusion_min", value_parser = parse_method)]
    method: Criterion,

    /// Orientation grid step in degrees, inside (0, 90)
    #[arg(long, default_value_t = 0.5, value_parser = parse_delta)]
    delta_deg: f64,

    /// Write the JSON result here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchKittiArgs {
    /// Dataset root containing velodyne/, label_2/, calib/
    #[arg(long)]
    dataset_root: PathBuf,

    /// Frames to evaluate: an inclusive numeric range `3-17` or a comma list
    /// of ids `000003,000007` (bare numbers are zero-padded to six digits).
    /// Default: every frame under velodyne/
    #[arg(long)]
    frames: Option<String>,

    /// Label classes to keep
    #[arg(long, value_delimiter = ',', default_values_t = default_classes())]
    classes: Vec<String>,

    /// Minimum points per cluster, at least 2
    #[arg(long, default_value_t = 5, value_parser = parse_min_points)]
    min_points: usize,

    /// Methods to score; repeat the flag or pass a comma list
    /// [default: occlusion_min,area_min,closeness_max,variance_min]
    #[arg(long = "method", value_parser = parse_method, action = ArgAction::Append, value_delimiter = ',')]
    method: Vec<Criterion>,

    /// Orientation grid step in degrees, inside (0, 90)
    #[arg(long, default_value_t = 0.5, value_parser = parse_delta)]
    delta_deg: f64,

    /// Seed echoed into the report for provenance
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Measure per-fit runtimes in a serial pass (on by default; runtime
    /// statistics vary run to run)
    #[arg(long, overrides_with = "no_timing")]
    timing: bool,

    /// Skip the timing pass so reports are byte-identical across runs
    #[arg(long)]
    no_timing: bool,

    /// Report format
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: ReportFormat,

    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchSynthArgs {
    /// Number of scenes to generate
    #[arg(long, default_value_t = 1000, value_parser = parse_positive_count)]
    trials: usize,

    /// Radial range noise, standard deviation in meters
    #[arg(long, default_value_t = 0.0, value_parser = parse_sigma)]
    noise_sigma: f64,

    /// Fraction of rays dropped, in [0, 1)
    #[arg(long, default_value_t = 0.0, value_parser = parse_dropout)]
    dropout: f64,

    /// Scanner angular resolution in degrees, inside (0, 90)
    #[arg(long, default_value_t = 0.2, value_parser = parse_delta)]
    angular_res_deg: f64,

    /// Methods to score; repeat the flag or pass a comma list
    /// [default: occlusion_min,area_min,closeness_max,variance_min]
    #[arg(long = "method", value_parser = parse_method, action = ArgAction::Append, value_delimiter = ',')]
    method: Vec<Criterion>,

    /// Orientation grid step in degrees, inside (0, 90)
    #[arg(long, default_value_t = 0.5, value_parser = parse_delta)]
    delta_deg: f64,

    /// Scene generator seed
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Measure per-fit runtimes in a serial pass (on by default; runtime
    /// statistics vary run to run)
    #[arg(long, overrides_with = "no_timing")]
    timing: bool,

    /// Skip the timing pass so reports are byte-identical across runs
    #[arg(long)]
    no_timing: bool,

    /// Report format
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: ReportFormat,

    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct OracleArgs {
    /// Number of random (hull, orientation) trials
    #[arg(long, default_value_t = 500, value_parser = parse_positive_count)]
    trials: usize,

    /// Monte-Carlo samples per trial
    #[arg(long, default_value_t = 100_000, value_parser = parse_positive_count)]
    mc_samples: usize,

    /// Allowed deviation as a fraction of each rectangle's area (the
    /// 3-standard-error floor always applies); 0 fails on any deviation
    #[arg(long, default_value_t = 0.02, value_parser = parse_tolerance)]
    tolerance: f64,

    /// Trial generator seed
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Write the summary here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

fn default_classes() -> Vec<String> {
    vec!["Car".into(), "Van".into(), "Truck".into()]
}

fn parse_method(s: &str) -> Result<Criterion, String> {
    Criterion::parse(s).ok_or_else(|| {
        format!("unknown method '{s}' (expected occlusion_min, area_min, closeness_max, variance_min)")
    })
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    ReportFormat::parse(s).ok_or_else(|| format!("unknown format '{s}' (expected csv or json)"))
}

fn parse_delta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v < 90.0 {
        Ok(v)
    } else {
        Err("must lie strictly between 0 and 90 degrees".into())
    }
}

fn parse_min_points(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|_| format!("'{s}' is not an integer"))?;
    if v >= 2 {
        Ok(v)
    } else {
        Err("must be at least 2".into())
    }
}

fn parse_positive_count(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|_| format!("'{s}' is not an integer"))?;
    if v >= 1 {
        Ok(v)
    } else {
        Err("must be at least 1".into())
    }
}

fn parse_sigma(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be a finite non-negative number".into())
    }
}

fn parse_dropout(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err("must lie in [0, 1)".into())
    }
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be a finite non-negative fraction".into())
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Fit(args) => cmd_fit(args),
        Command::BenchKitti(args) => cmd_bench_kitti(args),
        Command::BenchSynth(args) => cmd_bench_synth(args),
        Command::OracleCheck(args) => cmd_oracle_check(args),
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn cmd_fit(args: FitArgs) -> ExitCode {
    let points = match load_cluster(&args.input) {
        Ok(p) => p,
        Err(msg) => return fail(2, msg),
    };
    let cluster = match Cluster3D::new(points) {
        Ok(c) => c,
        Err(e @ Error::DegenerateCluster(_)) => return fail(3, e),
        // non-finite coordinates are a data problem, same as a parse failure
        Err(e) => return fail(2, e),
    };
    let fit = match search_fit(&cluster, args.method, args.delta_deg.to_radians()) {
        Ok(f) => f,
        Err(e @ Error::DegenerateCluster(_)) => return fail(3, e),
        Err(e) => return fail(1, e),
    };
    let doc = fit_document(&fit);
    match write_out(args.output.as_deref(), &doc) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => fail(1, msg),
    }
}

/// JSON document for one fit: winning orientation in degrees, the assembled
/// box, and a summary of the score curve (full curves come from the bench
/// commands' reports).
fn fit_document(fit: &FitResult) -> String {
    let finite: Vec<(f64, f64)> = fit
        .score_curve
        .iter()
        .copied()
        .filter(|(_, s)| s.is_finite())
        .collect();
    let best = finite
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("a successful fit has a finite best score");
    let worst = finite
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("a successful fit has a finite worst score");
    let doc = serde_json::json!({
        "theta_star_deg": fit.theta.to_degrees(),
        "box": fit.bbox,
        "score_curve": {
            "candidates": fit.score_curve.len(),
            "finite": finite.len(),
            "best": { "theta_deg": best.0.to_degrees(), "score": best.1 },
            "worst": { "theta_deg": worst.0.to_degrees(), "score": worst.1 },
        },
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    s.push('\n');
    s
}

/// Read a cluster file as 3D points. `.bin` means a packed float32
/// x/y/z/intensity blob; anything else is CSV `x,y,z` per row, tolerating
/// blank lines, `#` comments, extra columns, and one leading header row.
fn load_cluster(path: &Path) -> Result<Vec<[f64; 3]>, String> {
    let bytes =
        fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    if path.extension().is_some_and(|x| x == "bin") {
        let scan = read_scan(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        return Ok(scan
            .points
            .iter()
            .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
            .collect());
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| format!("{}: not valid UTF-8 text", path.display()))?;
    parse_csv(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_csv(text: &str) -> Result<Vec<[f64; 3]>, String> {
    let mut points = Vec::new();
    let mut header_allowed = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> =
            fields.iter().map(|f| f.parse::<f64>().ok()).collect();
        match parsed {
            Some(nums) if nums.len() >= 3 => {
                points.push([nums[0], nums[1], nums[2]]);
                header_allowed = false;
            }
            Some(nums) => {
                return Err(format!(
                    "line {}: expected x,y,z but found {} numeric fields",
                    idx + 1,
                    nums.len()
                ));
            }
            None if header_allowed => header_allowed = false,
            None => return Err(format!("line {}: non-numeric field", idx + 1)),
        }
    }
    Ok(points)
}

fn cmd_bench_kitti(args: BenchKittiArgs) -> ExitCode {
    let frames = match args.frames.as_deref().map(parse_frames).transpose() {
        Ok(f) => f,
        Err(msg) => return fail(2, msg),
    };
    let cfg = KittiBenchConfig {
        frames,
        classes: args.classes,
        min_points: args.min_points,
        delta: args.delta_deg.to_radians(),
        methods: chosen_methods(args.method),
        timing: !args.no_timing,
        seed: args.seed,
        ..KittiBenchConfig::new(args.dataset_root)
    };
    let report = match run_kitti_bench(&cfg) {
        Ok(r) => r,
        // anything wrong with the dataset or the selection is an input error
        Err(e @ (Error::EmptyInput(_) | Error::Format { .. } | Error::Io(_))) => {
            return fail(2, e)
        }
        Err(e) => return fail(1, e),
    };
    eprintln!(
        "evaluated {} clusters ({} skipped empty, {} skipped sparse, {} fit failures)",
        report.config.evaluated,
        report.config.skipped_empty,
        report.config.skipped_sparse,
        report.config.fit_failures
    );
    finish_report(&report, args.format, args.output.as_deref())
}

fn cmd_bench_synth(args: BenchSynthArgs) -> ExitCode {
    let cfg = SynthBenchConfig {
        scenes: args.trials,
        noise_sigma: args.noise_sigma,
        dropout: args.dropout,
        angular_resolution: args.angular_res_deg.to_radians(),
        seed: args.seed,
        delta: args.delta_deg.to_radians(),
        methods: chosen_methods(args.method),
        timing: !args.no_timing,
    };
    let report = match run_synth_bench(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(1, e),
    };
    eprintln!(
        "evaluated {} clusters ({} skipped empty, {} skipped sparse, {} fit failures)",
        report.config.evaluated,
        report.config.skipped_empty,
        report.config.skipped_sparse,
        report.config.fit_failures
    );
    finish_report(&report, args.format, args.output.as_deref())
}

fn cmd_oracle_check(args: OracleArgs) -> ExitCode {
    let cfg = OracleCheckConfig {
        trials: args.trials,
        mc_samples: args.mc_samples,
        seed: args.seed,
        tolerance_frac: args.tolerance,
    };
    let summary = run_oracle_check(&cfg);
    let mut text = format!(
        "trials {}: compared {}, skipped (no visible edge) {}, failures {}\n\
         max deviation {:.6}\n",
        summary.trials_requested,
        summary.compared,
        summary.skipped_no_edge,
        summary.failures,
        summary.max_deviation,
    );
    if let Some(w) = summary.worst {
        text.push_str(&format!(
            "worst trial {}: analytic {:.6}, monte-carlo {:.6}, allowed {:.6}\n",
            w.trial, w.analytic, w.monte_carlo, w.allowed
        ));
    }
    let passed = summary.passed();
    text.push_str(if passed { "PASS\n" } else { "FAIL\n" });
    if let Err(msg) = write_out(args.output.as_deref(), &text) {
        return fail(1, msg);
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn chosen_methods(picked: Vec<Criterion>) -> Vec<Criterion> {
    if picked.is_empty() {
        Criterion::ALL.to_vec()
    } else {
        picked
    }
}

/// Expand `--frames`: an inclusive numeric range `a-b`, or a comma list of
/// ids where bare numbers are zero-padded to the usual six digits.
fn parse_frames(spec: &str) -> Result<Vec<String>, String> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err("empty frame list".into());
    }
    if let Some((lo, hi)) = spec.split_once('-') {
        let (lo, hi) = (lo.trim(), hi.trim());
        let numeric =
            |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_digit());
        if !numeric(lo) || !numeric(hi) {
            return Err(format!("malformed frame range '{spec}'"));
        }
        let a: u64 = lo.parse().map_err(|_| "frame range start too large".to_string())?;
        let b: u64 = hi.parse().map_err(|_| "frame range end too large".to_string())?;
        if a > b {
            return Err(format!("empty frame range '{spec}'"));
        }
        return Ok((a..=b).map(|i| format!("{i:06}")).collect());
    }
    let mut ids = Vec::new();
    for tok in spec.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            return Err("empty frame id in list".into());
        }
        if tok.chars().all(|c| c.is_ascii_digit()) && tok.len() < 6 {
            let n: u64 = tok.parse().map_err(|_| "frame id too large".to_string())?;
            ids.push(format!("{n:06}"));
        } else {
            ids.push(tok.to_string());
        }
    }
    Ok(ids)
}

fn finish_report(
    report: &BenchmarkReport,
    format: ReportFormat,
    output: Option<&Path>,
) -> ExitCode {
    let text = match emit_report(report, format) {
        Ok(t) => t,
        Err(e) => return fail(1, e),
    };
    match write_out(output, &text) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => fail(1, msg),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
