//! Error metrics, aggregation, timing, and benchmark report emission.
//!
//! Orientation errors live on a quarter-turn circle: a rectangle determines
//! heading only up to 90 degrees, so estimate-vs-truth differences are
//! wrapped into (-45, 45] degrees before aggregation.

use crate::baselines::{search_fit, Criterion};
use crate::error::{Error, Result};
use crate::pose::Cluster3D;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

/// Histogram bin count: 1-degree bins over [0, 45] degrees of absolute error.
pub const HISTOGRAM_BINS: usize = 45;

/// Signed orientation error in degrees, wrapped into (-45, 45].
///
/// Both angles must already be canonical (in [0, pi/2)); the difference is
/// reduced modulo the quarter-turn period, with exact half-period
/// differences mapping to +45.
pub fn signed_orientation_error(est: f64, gt: f64) -> f64 {
    let mut d = est - gt;
    if d > FRAC_PI_4 {
        d -= 2.0 * FRAC_PI_4;
    } else if d <= -FRAC_PI_4 {
        d += 2.0 * FRAC_PI_4;
    }
    d.to_degrees()
}

/// Mean / spread / count triple for one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    /// Population standard deviation (divide by n).
    pub std: f64,
    pub count: usize,
}

/// Population-statistics aggregation; errors on empty input.
pub fn aggregate(values: &[f64]) -> Result<ErrorStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput("cannot aggregate zero values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(ErrorStats {
        mean,
        std: var.sqrt(),
        count: values.len(),
    })
}

/// Run some fits to get code and caches warm before timing. The timing
/// protocol requires at least 10 of these before the first measured call.
pub fn warm_up(cluster: &Cluster3D, criterion: Criterion, delta: f64, rounds: usize) {
    for _ in 0..rounds {
        let _ = search_fit(cluster, criterion, delta);
    }
}

/// Wall-clock duration of a single fit in milliseconds (monotonic clock,
/// no internal parallelism). Call [`warm_up`] first.
pub fn time_fit(cluster: &Cluster3D, criterion: Criterion, delta: f64) -> f64 {
    let t0 = Instant::now();
    let _ = search_fit(cluster, criterion, delta);
    t0.elapsed().as_secs_f64() * 1e3
}

/// Per-method block of a benchmark report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub signed_error_deg: ErrorStats,
    pub abs_error_deg: ErrorStats,
    /// Absent when the run disabled timing for byte-stable output.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_ms: Option<ErrorStats>,
    /// Counts of absolute errors per 1-degree bin over [0, 45].
    pub histogram: Vec<u64>,
}

/// Configuration echo embedded in every report so results are attributable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub delta_deg: f64,
    pub classes: Vec<String>,
    pub min_points: usize,
    pub seed: u64,
    /// Spread convention used by all stats rows.
    pub std_kind: String,
    /// Signed-error wrap convention.
    pub error_wrap: String,
    pub skipped_empty: usize,
    pub skipped_sparse: usize,
    /// Clusters dropped because some method's fit failed on them; dropped
    /// for every method so comparisons stay paired.
    pub fit_failures: usize,
    /// Clusters that reached the fitting stage and were scored by all methods.
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: ReportConfig,
    pub methods: Vec<MethodReport>,
}

/// Build one method's block from its raw signed errors (degrees) and
/// optional per-fit runtimes.
pub fn method_report(
    method: &str,
    signed_errors_deg: &[f64],
    runtimes_ms: Option<&[f64]>,
) -> Result<MethodReport> {
    let abs: Vec<f64> = signed_errors_deg.iter().map(|e| e.abs()).collect();
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    for &a in &abs {
        let bin = (a.floor() as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin] += 1;
    }
    Ok(MethodReport {
        method: method.to_string(),
        signed_error_deg: aggregate(signed_errors_deg)?,
        abs_error_deg: aggregate(&abs)?,
        runtime_ms: runtimes_ms.map(|r| aggregate(r)).transpose()?,
        histogram,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(token: &str) -> Option<ReportFormat> {
        match token {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }
}

/// Serialize a report. CSV: one header line `method,metric,mean,std,count`,
/// the metric rows for every method, then per-method histogram rows
/// `method,bin_lo_deg,bin_hi_deg,count`. JSON mirrors the full structure and
/// round-trips losslessly. Byte-stable for identical input.
pub fn emit_report(report: &BenchmarkReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)
                .map_err(|e| Error::format(0, format!("report serialization failed: {e}")))?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut out = String::from("method,metric,mean,std,count\n");
            let stat_row = |out: &mut String, method: &str, metric: &str, s: &ErrorStats| {
                out.push_str(&format!(
                    "{method},{metric},{:.6},{:.6},{}\n",
                    s.mean, s.std, s.count
                ));
            };
            for m in &report.methods {
                stat_row(&mut out, &m.method, "signed_error_deg", &m.signed_error_deg);
                stat_row(&mut out, &m.method, "abs_error_deg", &m.abs_error_deg);
                if let Some(rt) = &m.runtime_ms {
                    stat_row(&mut out, &m.method, "runtime_ms", rt);
                }
            }
            for m in &report.methods {
                for (i, count) in m.histogram.iter().enumerate() {
                    out.push_str(&format!("{},{},{},{}\n", m.method, i, i + 1, count));
                }
            }
            Ok(out)
        }
    }
}
