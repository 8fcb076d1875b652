//! Loss-gradient clouds: per-step record assembly, stationary-attractor
//! detection, curvature/saturation summaries, and cloud file I/O.
//!
//! A cloud is the scatter of every walk step with training error on the
//! x-axis and gradient norm on the y-axis. Points of zero error and zero
//! gradient are global minima; points of non-zero error and zero gradient
//! are suboptimal critical regions (local minima or saddles).

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curvature::{CurvatureClass, CurvatureKind, CurvatureOutcome};
use crate::error::{Error, Result};
use crate::saturation::{SaturationMethod, SaturationReading};
use crate::scalar::{cast, to_f64, Real};
use crate::walk::WalkTrace;

/// One sampled point of the cloud. `e_gen` is absent for problems without
/// a test split (XOR); curvature is an explicit "skipped" when Hessians
/// are disabled or over the dimension cap.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub walk_id: u64,
    pub step: usize,
    pub e_train: T,
    pub e_gen: Option<T>,
    pub grad_norm: T,
    pub curvature: CurvatureOutcome,
    pub saturation: Option<SaturationReading<T>>,
    pub kink_adjacent: bool,
}

/// An assembled cloud: every record of every walk of one experiment cell.
#[derive(Debug, Clone, Default)]
pub struct Cloud<T> {
    pub records: Vec<StepRecord<T>>,
}

impl<T: Real> Cloud<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Fraction of non-skipped records per curvature class; empty when no
    /// record was classified. Fractions over classified records sum to 1.
    pub fn curvature_fractions(&self) -> Vec<(CurvatureKind, f64)> {
        let classified: Vec<&CurvatureClass> = self
            .records
            .iter()
            .filter_map(|r| r.curvature.class())
            .collect();
        if classified.is_empty() {
            return Vec::new();
        }
        let total = classified.len() as f64;
        CurvatureKind::ALL
            .iter()
            .map(|&kind| {
                let count = classified.iter().filter(|c| c.kind == kind).count();
                (kind, count as f64 / total)
            })
            .collect()
    }
}

/// Merges finished walks into one cloud. All traces must come from the
/// same experiment cell (identical walk config and network spec); records
/// are ordered by (walk_id, step) so the result is independent of worker
/// scheduling.
pub fn collect<T: Real>(traces: Vec<WalkTrace<T>>) -> Result<Cloud<T>> {
    if let Some(first) = traces.first() {
        for t in &traces[1..] {
            if t.config != first.config || t.spec != first.spec {
                return Err(Error::MixedCells(format!(
                    "walk {} has a different config/spec than walk {}",
                    t.walk_id, first.walk_id
                )));
            }
        }
    }
    let mut records: Vec<StepRecord<T>> = traces.into_iter().flat_map(|t| t.records).collect();
    records.sort_by_key(|r| (r.walk_id, r.step));
    Ok(Cloud { records })
}

/// Thresholds for stationary-attractor detection. The gradient threshold
/// defaults to 1e-3 of the cloud's median gradient norm (the literature
/// never quantifies "zero gradient"); the error threshold matches the
/// recurring E_t < 0.05 filter; stationary points are clustered by
/// single linkage on training error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorParams {
    /// Absolute gradient-norm threshold; `None` derives it from the cloud.
    pub theta_g: Option<f64>,
    /// Median multiplier used when `theta_g` is `None`.
    pub theta_g_median_factor: f64,
    /// Error threshold separating global-minimum candidates.
    pub theta_e: f64,
    /// Single-linkage radius on training error.
    pub link_radius: f64,
}

impl Default for AttractorParams {
    fn default() -> Self {
        AttractorParams {
            theta_g: None,
            // A masked random walk hovers around a minimum at roughly one
            // step size, which keeps its sampled gradient norms above
            // ~1/300 of the cloud median; factors between 0.03 and 0.3
            // recover the same attractor structure, so the default sits in
            // the middle. Anything much smaller selects nothing.
            theta_g_median_factor: 0.1,
            theta_e: 0.05,
            link_radius: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttractorClass {
    GlobalMinimumCandidate,
    SuboptimalCritical,
    NonStationary,
}

/// One cluster of stationary points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorSummary {
    pub cluster_id: usize,
    pub mean_error: f64,
    pub mean_grad_norm: f64,
    pub member_count: usize,
    pub classification: AttractorClass,
}

/// Labels a cluster by its mean error and mean gradient norm.
pub fn classify_attractor(
    mean_error: f64,
    mean_grad_norm: f64,
    theta_e: f64,
    theta_g: f64,
) -> AttractorClass {
    if mean_grad_norm >= theta_g {
        AttractorClass::NonStationary
    } else if mean_error < theta_e {
        AttractorClass::GlobalMinimumCandidate
    } else {
        AttractorClass::SuboptimalCritical
    }
}

fn median_of_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// The gradient threshold a parameter set resolves to on a given cloud.
pub fn resolve_theta_g<T: Real>(cloud: &Cloud<T>, params: &AttractorParams) -> f64 {
    if let Some(theta) = params.theta_g {
        return theta;
    }
    if cloud.is_empty() {
        return 0.0;
    }
    let mut norms: Vec<f64> = cloud.records.iter().map(|r| to_f64(r.grad_norm)).collect();
    norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    median_of_sorted(&norms) * params.theta_g_median_factor
}

/// Finds stationary attractors: records with gradient norm under θ_G,
/// clustered by single linkage on training error, each cluster summarized
/// and classified. Output is sorted by mean error and invariant to the
/// input row order.
pub fn find_attractors<T: Real>(
    cloud: &Cloud<T>,
    params: &AttractorParams,
) -> Vec<AttractorSummary> {
    let theta_g = resolve_theta_g(cloud, params);
    let mut stationary: Vec<(f64, f64)> = cloud
        .records
        .iter()
        .filter(|r| to_f64(r.grad_norm) < theta_g)
        .map(|r| (to_f64(r.e_train), to_f64(r.grad_norm)))
        .collect();
    if stationary.is_empty() {
        return Vec::new();
    }
    stationary.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut clusters: Vec<Vec<(f64, f64)>> = vec![vec![stationary[0]]];
    for &point in &stationary[1..] {
        let last = clusters.last_mut().unwrap();
        let prev_error = last.last().unwrap().0;
        if point.0 - prev_error <= params.link_radius {
            last.push(point);
        } else {
            clusters.push(vec![point]);
        }
    }

    clusters
        .into_iter()
        .enumerate()
        .map(|(cluster_id, members)| {
            let n = members.len() as f64;
            let mean_error = members.iter().map(|m| m.0).sum::<f64>() / n;
            let mean_grad_norm = members.iter().map(|m| m.1).sum::<f64>() / n;
            AttractorSummary {
                cluster_id,
                mean_error,
                mean_grad_norm,
                member_count: members.len(),
                classification: classify_attractor(
                    mean_error,
                    mean_grad_norm,
                    params.theta_e,
                    theta_g,
                ),
            }
        })
        .collect()
}

/// Five-number summary with Tukey hinges: the quartiles are medians of the
/// lower/upper halves, the overall median joining both halves when the
/// count is odd.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn five_number(values: &[f64]) -> Option<FiveNumber> {
    if values.is_empty() {
        return None;
    }
    let mut xs = values.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    let half = n / 2;
    let (lower, upper) = if n.is_multiple_of(2) {
        (&xs[..half], &xs[half..])
    } else {
        (&xs[..=half], &xs[half..])
    };
    Some(FiveNumber {
        min: xs[0],
        q1: median_of_sorted(lower),
        median: median_of_sorted(&xs),
        q3: median_of_sorted(upper),
        max: xs[n - 1],
    })
}

/// Saturation distribution per curvature class, box-plot style.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationSummary {
    pub curvature: CurvatureKind,
    pub count: usize,
    #[serde(flatten)]
    pub stats: FiveNumber,
}

/// Five-number saturation summary for each curvature class present in the
/// cloud. Classes without members are omitted; errors when the cloud holds
/// no record with both a saturation reading and a classified curvature.
pub fn saturation_by_curvature<T: Real>(cloud: &Cloud<T>) -> Result<Vec<SaturationSummary>> {
    let mut summaries = Vec::new();
    for kind in CurvatureKind::ALL {
        let values: Vec<f64> = cloud
            .records
            .iter()
            .filter(|r| r.curvature.class().is_some_and(|c| c.kind == kind))
            .filter_map(|r| r.saturation.map(|s| to_f64(s.value)))
            .collect();
        if let Some(stats) = five_number(&values) {
            summaries.push(SaturationSummary {
                curvature: kind,
                count: values.len(),
                stats,
            });
        }
    }
    if summaries.is_empty() {
        return Err(Error::EmptyInput(
            "no records with both saturation and classified curvature",
        ));
    }
    Ok(summaries)
}

/// Result of the two-component Gaussian-mixture fit on log gradient norms
/// among low-error records — the "narrow vs wide valley" diagnostic. The
/// gap is in natural-log units. Reported descriptively, never asserted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoClusterDiagnostic {
    pub n_points: usize,
    pub error_cutoff: f64,
    pub weight_low: f64,
    pub mean_low: f64,
    pub sigma_low: f64,
    pub weight_high: f64,
    pub mean_high: f64,
    pub sigma_high: f64,
    /// mean_high − mean_low in ln units.
    pub gap: f64,
}

/// Fits the two-cluster diagnostic over records with `e_train` below the
/// cutoff (default: the cloud's median training error) and a positive
/// gradient norm. Returns `None` when fewer than 8 points qualify.
pub fn two_cluster_diagnostic<T: Real>(
    cloud: &Cloud<T>,
    max_e_train: Option<f64>,
) -> Option<TwoClusterDiagnostic> {
    if cloud.is_empty() {
        return None;
    }
    let cutoff = max_e_train.unwrap_or_else(|| {
        let mut errors: Vec<f64> = cloud.records.iter().map(|r| to_f64(r.e_train)).collect();
        errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        median_of_sorted(&errors)
    });
    let mut logs: Vec<f64> = cloud
        .records
        .iter()
        .filter(|r| to_f64(r.e_train) < cutoff && to_f64(r.grad_norm) > 0.0)
        .map(|r| to_f64(r.grad_norm).ln())
        .collect();
    if logs.len() < 8 {
        return None;
    }
    logs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let n = logs.len();
    let mean: f64 = logs.iter().sum::<f64>() / n as f64;
    let std = (logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64)
        .sqrt()
        .max(1e-3);

    // EM with deterministic initialization at the outer quartiles.
    let mut mu = [logs[n / 4], logs[3 * n / 4]];
    let mut sigma = [std, std];
    let mut weight = [0.5_f64, 0.5];
    let mut responsibility = vec![0.0_f64; n];
    let mut last_loglik = f64::NEG_INFINITY;

    for _ in 0..300 {
        let mut loglik = 0.0;
        for (i, &x) in logs.iter().enumerate() {
            let p0 = weight[0] * gaussian_pdf(x, mu[0], sigma[0]);
            let p1 = weight[1] * gaussian_pdf(x, mu[1], sigma[1]);
            let total = (p0 + p1).max(f64::MIN_POSITIVE);
            responsibility[i] = p1 / total;
            loglik += total.ln();
        }
        for comp in 0..2 {
            let r_sum: f64 = responsibility
                .iter()
                .map(|&r| if comp == 1 { r } else { 1.0 - r })
                .sum();
            let r_sum = r_sum.max(1e-12);
            let m: f64 = logs
                .iter()
                .zip(&responsibility)
                .map(|(&x, &r)| x * if comp == 1 { r } else { 1.0 - r })
                .sum::<f64>()
                / r_sum;
            let v: f64 = logs
                .iter()
                .zip(&responsibility)
                .map(|(&x, &r)| (x - m).powi(2) * if comp == 1 { r } else { 1.0 - r })
                .sum::<f64>()
                / r_sum;
            mu[comp] = m;
            sigma[comp] = v.sqrt().max(1e-6);
            weight[comp] = r_sum / n as f64;
        }
        if (loglik - last_loglik).abs() < 1e-12 {
            break;
        }
        last_loglik = loglik;
    }

    let (lo, hi) = if mu[0] <= mu[1] { (0, 1) } else { (1, 0) };
    Some(TwoClusterDiagnostic {
        n_points: n,
        error_cutoff: cutoff,
        weight_low: weight[lo],
        mean_low: mu[lo],
        sigma_low: sigma[lo],
        weight_high: weight[hi],
        mean_high: mu[hi],
        sigma_high: sigma[hi],
        gap: mu[hi] - mu[lo],
    })
}

fn gaussian_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// On-disk cloud formats. CSV column order is fixed by [`CloudRow`];
/// JSONL is one record object per line. Reals are serialized with full
/// round-trip precision in both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudFormat {
    Csv,
    Jsonl,
}

impl CloudFormat {
    pub fn extension(self) -> &'static str {
        match self {
            CloudFormat::Csv => "csv",
            CloudFormat::Jsonl => "jsonl",
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(CloudFormat::Csv),
            Some("jsonl") => Ok(CloudFormat::Jsonl),
            other => Err(Error::InvalidArgument(format!(
                "cannot infer cloud format from extension {other:?}"
            ))),
        }
    }
}

/// Wire form of a record; the scalar type is widened to f64 (exact for
/// both supported scalars).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudRow {
    pub walk_id: u64,
    pub step: usize,
    pub e_train: f64,
    pub e_gen: Option<f64>,
    pub grad_norm: f64,
    pub curvature: String,
    pub n_pos: Option<usize>,
    pub n_neg: Option<usize>,
    pub n_zero: Option<usize>,
    pub saturation: Option<f64>,
    pub saturation_method: Option<String>,
    pub kink_adjacent: bool,
}

impl CloudRow {
    pub fn from_record<T: Real>(r: &StepRecord<T>) -> Self {
        let (curvature, n_pos, n_neg, n_zero) = match r.curvature {
            CurvatureOutcome::Classified(c) => (
                c.kind.name().to_string(),
                Some(c.n_pos),
                Some(c.n_neg),
                Some(c.n_zero),
            ),
            CurvatureOutcome::Skipped => ("skipped".to_string(), None, None, None),
        };
        CloudRow {
            walk_id: r.walk_id,
            step: r.step,
            e_train: to_f64(r.e_train),
            e_gen: r.e_gen.map(to_f64),
            grad_norm: to_f64(r.grad_norm),
            curvature,
            n_pos,
            n_neg,
            n_zero,
            saturation: r.saturation.map(|s| to_f64(s.value)),
            saturation_method: r.saturation.map(|s| s.method.name().to_string()),
            kink_adjacent: r.kink_adjacent,
        }
    }

    pub fn into_record<T: Real>(self) -> Result<StepRecord<T>> {
        let curvature = match self.curvature.as_str() {
            "skipped" => CurvatureOutcome::Skipped,
            name => {
                let kind = match name {
                    "convex" => CurvatureKind::Convex,
                    "concave" => CurvatureKind::Concave,
                    "saddle" => CurvatureKind::Saddle,
                    "singular" => CurvatureKind::Singular,
                    other => {
                        return Err(Error::InvalidArgument(format!(
                            "unknown curvature label {other:?}"
                        )))
                    }
                };
                CurvatureOutcome::Classified(CurvatureClass {
                    kind,
                    n_pos: self.n_pos.unwrap_or(0),
                    n_neg: self.n_neg.unwrap_or(0),
                    n_zero: self.n_zero.unwrap_or(0),
                })
            }
        };
        let saturation = match (self.saturation, self.saturation_method.as_deref()) {
            (Some(value), Some("bounded_sigma")) => Some(SaturationReading {
                value: cast::<T>(value),
                method: SaturationMethod::BoundedSigma,
            }),
            (Some(value), Some("relu_zero_fraction")) => Some(SaturationReading {
                value: cast::<T>(value),
                method: SaturationMethod::ReluZeroFraction,
            }),
            (Some(_), other) => {
                return Err(Error::InvalidArgument(format!(
                    "saturation value without a known method ({other:?})"
                )))
            }
            (None, _) => None,
        };
        Ok(StepRecord {
            walk_id: self.walk_id,
            step: self.step,
            e_train: cast::<T>(self.e_train),
            e_gen: self.e_gen.map(cast::<T>),
            grad_norm: cast::<T>(self.grad_norm),
            curvature,
            saturation,
            kink_adjacent: self.kink_adjacent,
        })
    }
}

/// Writes bytes to `path` atomically: a temp file in the same directory is
/// renamed over the target, so interrupted runs never leave partial files.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    {
        let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Writes a cloud to disk in the requested format (atomically). An empty
/// cloud produces a valid header-only CSV or an empty JSONL file.
pub fn write_cloud<T: Real>(cloud: &Cloud<T>, path: &Path, format: CloudFormat) -> Result<()> {
    let bytes = match format {
        CloudFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            if cloud.is_empty() {
                // Serde never sees a record, so emit the header explicitly.
                wtr.write_record([
                    "walk_id",
                    "step",
                    "e_train",
                    "e_gen",
                    "grad_norm",
                    "curvature",
                    "n_pos",
                    "n_neg",
                    "n_zero",
                    "saturation",
                    "saturation_method",
                    "kink_adjacent",
                ])
                .map_err(|e| Error::InvalidData {
                    path: path.display().to_string(),
                    msg: e.to_string(),
                })?;
            }
            for record in &cloud.records {
                wtr.serialize(CloudRow::from_record(record))
                    .map_err(|e| Error::InvalidData {
                        path: path.display().to_string(),
                        msg: e.to_string(),
                    })?;
            }
            wtr.into_inner().map_err(|e| Error::InvalidData {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?
        }
        CloudFormat::Jsonl => {
            let mut bytes = Vec::new();
            for record in &cloud.records {
                serde_json::to_writer(&mut bytes, &CloudRow::from_record(record)).map_err(|e| {
                    Error::InvalidData {
                        path: path.display().to_string(),
                        msg: e.to_string(),
                    }
                })?;
                bytes.push(b'\n');
            }
            bytes
        }
    };
    atomic_write(path, &bytes)
}

/// Reads a cloud back from disk.
pub fn read_cloud<T: Real>(path: &Path, format: CloudFormat) -> Result<Cloud<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    match format {
        CloudFormat::Csv => {
            let mut rdr = csv::Reader::from_reader(file);
            for row in rdr.deserialize::<CloudRow>() {
                let row = row.map_err(|e| Error::InvalidData {
                    path: path.display().to_string(),
                    msg: e.to_string(),
                })?;
                records.push(row.into_record()?);
            }
        }
        CloudFormat::Jsonl => {
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let row: CloudRow =
                    serde_json::from_str(&line).map_err(|e| Error::InvalidData {
                        path: path.display().to_string(),
                        msg: e.to_string(),
                    })?;
                records.push(row.into_record()?);
            }
        }
    }
    Ok(Cloud { records })
}

/// Dataset facts recorded alongside a cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub n_patterns: usize,
    pub d_in: usize,
    pub d_out: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub split_seed: u64,
    pub constant_columns: usize,
}

/// Metadata sidecar written next to every cloud file: the full
/// configuration, seeds, and tolerances needed to reinterpret it. The
/// timestamp is the only field allowed to differ between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudMetadata {
    pub problem: String,
    pub activation: String,
    pub regime: String,
    pub init_half_width: f64,
    pub max_step: f64,
    pub n_steps: usize,
    pub walk_count: usize,
    pub master_seed: u64,
    pub scalar: String,
    pub hessian_enabled: bool,
    pub hessian_stride: usize,
    pub hessian_cap: usize,
    pub hessian_step_scale: f64,
    pub tau_abs: f64,
    pub tau_rel: f64,
    pub attractors: AttractorParams,
    pub batch_size: Option<usize>,
    pub eval_batch_cap: usize,
    pub dataset: DatasetMeta,
    pub preset: Option<String>,
    pub timestamp_unix: u64,
}

pub fn write_metadata(meta: &CloudMetadata, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(meta).map_err(|e| Error::InvalidData {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

pub fn read_metadata(path: &Path) -> Result<CloudMetadata> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidData {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// `lgc.csv` / `lgc.jsonl` file name for a cell directory.
pub fn cloud_file_name(format: CloudFormat) -> PathBuf {
    PathBuf::from(format!("cloud.{}", format.extension()))
}
