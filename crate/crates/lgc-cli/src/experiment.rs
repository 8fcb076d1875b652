//! Runs a manifest: resolves the dataset, walks the activation × range ×
//! regime grid, and writes one output directory per cell (cloud file,
//! metadata sidecar, attractor and saturation summaries, diagnostic, and
//! plots). Progress goes to standard error; machine output only to files.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use lgc_core::cloud::{
    self, find_attractors, resolve_theta_g, saturation_by_curvature, two_cluster_diagnostic,
    AttractorParams, AttractorSummary, Cloud, CloudFormat, CloudMetadata, DatasetMeta,
};
use lgc_core::curvature::{self, HessianOptions};
use lgc_core::data::{self, CsvSchema, Dataset, LoadOptions};
use lgc_core::mlp::MlpSpec;
use lgc_core::pipeline::{run_cell, CellPlan};
use lgc_core::render::{render_lgc, ColorBy, RenderOptions, XScale};
use lgc_core::seed::derive_seed;
use lgc_core::walk::{experiment_walk_count, Regime, WalkConfig};
use lgc_core::ActivationKind;

use crate::manifest::{data_dir, HessianMode, Manifest, ProblemSpec};
use crate::{CliError, CliResult};

/// Stream salt for per-cell walk seeds.
const SALT_CELL: u64 = 0x43454c4c; // "CELL"

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325_u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// A resolved benchmark: the data plus the hidden-layer width that goes
/// with it.
pub struct ResolvedProblem {
    pub dataset: Dataset<f64>,
    pub hidden: usize,
    pub name: String,
}

/// Loads the manifest's problem. Named problems look in `LGC_DATA_DIR`
/// (iris falls back to the embedded copy); custom problems read the CSV
/// and its JSON schema.
pub fn resolve_problem(manifest: &Manifest) -> CliResult<ResolvedProblem> {
    let opts = LoadOptions {
        split_seed: manifest.master_seed,
        subsample: manifest.overrides.subsample,
    };
    match &manifest.problem {
        ProblemSpec::Named(name) => match name.to_ascii_lowercase().as_str() {
            "xor" => Ok(ResolvedProblem {
                dataset: data::xor_dataset(),
                hidden: 2,
                name: "xor".into(),
            }),
            "iris" => {
                let dataset = match data_dir().map(|d| d.join("iris.csv")) {
                    Some(path) if path.exists() => {
                        data::load_csv(&path, &CsvSchema::iris(), &opts)?
                    }
                    _ => data::iris_builtin(&opts),
                };
                Ok(ResolvedProblem {
                    dataset,
                    hidden: 4,
                    name: "iris".into(),
                })
            }
            "heart" => {
                let dir = data_dir().ok_or_else(|| {
                    CliError::Data(format!(
                        "heart needs {}  pointing at a directory with heart.csv",
                        crate::manifest::DATA_DIR_ENV
                    ))
                })?;
                let path = dir.join("heart.csv");
                if !path.exists() {
                    return Err(CliError::Data(format!(
                        "heart dataset not found at {}",
                        path.display()
                    )));
                }
                Ok(ResolvedProblem {
                    dataset: data::load_csv(&path, &CsvSchema::heart(), &opts)?,
                    hidden: 10,
                    name: "heart".into(),
                })
            }
            "mnist" => {
                let dir = data_dir().ok_or_else(|| {
                    CliError::Data(format!(
                        "mnist needs {} pointing at a directory with the IDX files",
                        crate::manifest::DATA_DIR_ENV
                    ))
                })?;
                let pairs = mnist_pairs(&dir)?;
                Ok(ResolvedProblem {
                    dataset: data::load_idx_concat(&pairs, &opts)?,
                    hidden: 10,
                    name: "mnist".into(),
                })
            }
            other => Err(CliError::Usage(format!("unknown problem {other:?}"))),
        },
        ProblemSpec::Custom {
            csv,
            schema,
            hidden,
        } => {
            let schema = CsvSchema::from_json_file(schema)?;
            Ok(ResolvedProblem {
                name: schema.name.clone(),
                dataset: data::load_csv(csv, &schema, &opts)?,
                hidden: *hidden,
            })
        }
    }
}

fn first_existing(dir: &Path, names: &[&str]) -> Option<PathBuf> {
    names.iter().map(|n| dir.join(n)).find(|p| p.exists())
}

/// Conventional MNIST file names, gzip variants included; the t10k pair
/// is concatenated when present.
fn mnist_pairs(dir: &Path) -> CliResult<Vec<(PathBuf, PathBuf)>> {
    let mut pairs = Vec::new();
    let train_images = first_existing(
        dir,
        &["train-images-idx3-ubyte", "train-images-idx3-ubyte.gz"],
    );
    let train_labels = first_existing(
        dir,
        &["train-labels-idx1-ubyte", "train-labels-idx1-ubyte.gz"],
    );
    if let (Some(i), Some(l)) = (train_images, train_labels) {
        pairs.push((i, l));
    }
    let test_images = first_existing(
        dir,
        &["t10k-images-idx3-ubyte", "t10k-images-idx3-ubyte.gz"],
    );
    let test_labels = first_existing(
        dir,
        &["t10k-labels-idx1-ubyte", "t10k-labels-idx1-ubyte.gz"],
    );
    if let (Some(i), Some(l)) = (test_images, test_labels) {
        pairs.push((i, l));
    }
    if pairs.is_empty() {
        return Err(CliError::Data(format!(
            "no MNIST IDX files under {} (expected train-images-idx3-ubyte[.gz] etc.)",
            dir.display()
        )));
    }
    Ok(pairs)
}

/// Canonical cell directory name, e.g. `iris_relu_macro_r10`.
pub fn cell_name(problem: &str, activation: ActivationKind, regime: Regime, a: f64) -> String {
    let range = if a.fract() == 0.0 {
        format!("{}", a as i64)
    } else {
        format!("{a}")
    };
    format!("{problem}_{}_{}_r{range}", activation.name(), regime.name())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellOutcome {
    pub name: String,
    pub dir: PathBuf,
    pub records: usize,
    pub walk_count: usize,
    pub n_steps: usize,
    pub hessian_enabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub cells: Vec<CellOutcome>,
}

/// Attractor output file: the parameters actually used plus the clusters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttractorReport {
    pub params: AttractorParams,
    pub resolved_theta_g: f64,
    pub attractors: Vec<AttractorSummary>,
}

fn attractor_params(manifest: &Manifest) -> AttractorParams {
    let defaults = AttractorParams::default();
    AttractorParams {
        theta_g: manifest.overrides.theta_g.or(defaults.theta_g),
        theta_g_median_factor: manifest
            .overrides
            .theta_g_median_factor
            .unwrap_or(defaults.theta_g_median_factor),
        theta_e: manifest.overrides.theta_e.unwrap_or(defaults.theta_e),
        link_radius: manifest
            .overrides
            .link_radius
            .unwrap_or(defaults.link_radius),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Data(format!("serializing {}: {e}", path.display())))?;
    bytes.push(b'\n');
    cloud::atomic_write(path, &bytes)?;
    Ok(())
}

/// Runs the full grid described by a manifest. Returns one outcome per
/// cell; every output byte except the metadata timestamp is a pure
/// function of (manifest, master_seed).
pub fn run_experiment(manifest: &Manifest) -> CliResult<RunSummary> {
    manifest.validate()?;
    let format = manifest.cloud_format()?;
    let hessian_mode = manifest.hessian_mode()?;
    let activations = manifest.activations()?;
    let regimes = manifest.regimes()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("worker pool: {e}")))?;

    let problem = resolve_problem(manifest)?;
    let dataset = &problem.dataset;
    let spec_dims = (dataset.d_in(), problem.hidden, dataset.d_out());

    std::fs::create_dir_all(&manifest.output_dir).map_err(|e| {
        CliError::Data(format!("output dir {}: {e}", manifest.output_dir.display()))
    })?;

    for stat in dataset.standardization.iter().flatten() {
        if stat.constant {
            eprintln!(
                "warning: {} has constant input column(s); standardization skipped for those",
                problem.name
            );
            break;
        }
    }

    let hessian_opts = HessianOptions {
        cap: manifest
            .overrides
            .hessian_cap
            .unwrap_or(curvature::DEFAULT_HESSIAN_CAP),
        step_scale: curvature::DEFAULT_HESSIAN_STEP_SCALE,
    };
    let tau_abs = manifest
        .overrides
        .tau_abs
        .unwrap_or(curvature::DEFAULT_TAU_ABS);
    let tau_rel = manifest
        .overrides
        .tau_rel
        .unwrap_or(curvature::DEFAULT_TAU_REL);
    let att_params = attractor_params(manifest);

    let total = activations.len() * manifest.init_ranges.len() * regimes.len();
    let mut outcomes = Vec::with_capacity(total);
    let mut done = 0;

    for &activation in &activations {
        for &a in &manifest.init_ranges {
            for &regime in &regimes {
                done += 1;
                let name = cell_name(&problem.name, activation, regime, a);
                let spec = MlpSpec::new(spec_dims.0, spec_dims.1, spec_dims.2, activation);
                let m = spec.param_count();

                let n_steps = match regime {
                    Regime::Micro => manifest.overrides.micro_steps.unwrap_or(1000),
                    Regime::Macro => manifest.overrides.macro_steps.unwrap_or(100),
                };
                let walk_count = manifest
                    .overrides
                    .walk_count
                    .unwrap_or_else(|| experiment_walk_count(m));
                let hessian_enabled = match hessian_mode {
                    HessianMode::On => true,
                    HessianMode::Off => false,
                    HessianMode::Auto => problem.name != "mnist",
                } && m <= hessian_opts.cap;

                let cell_seed =
                    derive_seed(manifest.master_seed, fnv1a(name.as_bytes()), SALT_CELL);
                let mut config = WalkConfig::new(regime, a, cell_seed).with_steps(n_steps);
                if let Some(eps) = manifest.overrides.max_step {
                    config = config.with_max_step(eps);
                }

                let batch_size = manifest
                    .overrides
                    .batch_size
                    .or(if problem.name == "mnist" {
                        Some(100)
                    } else {
                        None
                    });
                let eval_batch_cap = manifest.overrides.eval_batch_cap.unwrap_or(1000);

                eprintln!(
                    "[{done}/{total}] {name}: {walk_count} walks x {n_steps} steps (m={m}, hessians {})",
                    if hessian_enabled { "on" } else { "off" }
                );
                let started = Instant::now();

                let plan = CellPlan {
                    dataset,
                    spec,
                    config,
                    walk_count,
                    hessian_enabled,
                    hessian_stride: manifest.overrides.hessian_stride.unwrap_or(1),
                    hessian_opts,
                    tau_abs,
                    tau_rel,
                    batch_size,
                    eval_batch_cap,
                };
                let cloud = pool.install(|| run_cell(&plan))?;

                let dir = manifest.output_dir.join(&name);
                std::fs::create_dir_all(&dir)
                    .map_err(|e| CliError::Data(format!("cell dir {}: {e}", dir.display())))?;

                let metadata = CloudMetadata {
                    problem: problem.name.clone(),
                    activation: activation.name().into(),
                    regime: regime.name().into(),
                    init_half_width: a,
                    max_step: config.max_step,
                    n_steps,
                    walk_count,
                    master_seed: manifest.master_seed,
                    scalar: "f64".into(),
                    hessian_enabled,
                    hessian_stride: manifest.overrides.hessian_stride.unwrap_or(1),
                    hessian_cap: hessian_opts.cap,
                    hessian_step_scale: hessian_opts.step_scale,
                    tau_abs,
                    tau_rel,
                    attractors: att_params,
                    batch_size,
                    eval_batch_cap,
                    dataset: DatasetMeta {
                        name: dataset.name.clone(),
                        n_patterns: dataset.n_patterns(),
                        d_in: dataset.d_in(),
                        d_out: dataset.d_out(),
                        n_train: dataset.split.train.len(),
                        n_test: dataset.split.test.len(),
                        split_seed: dataset.split_seed,
                        constant_columns: dataset
                            .standardization
                            .iter()
                            .flatten()
                            .filter(|s| s.constant)
                            .count(),
                    },
                    preset: manifest.preset.clone(),
                    timestamp_unix: SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0),
                };

                write_cell_outputs(&dir, &cloud, &metadata, format)?;

                eprintln!(
                    "[{done}/{total}] {name}: {} records in {:.1?}",
                    cloud.len(),
                    started.elapsed()
                );
                outcomes.push(CellOutcome {
                    name,
                    dir,
                    records: cloud.len(),
                    walk_count,
                    n_steps,
                    hessian_enabled,
                });
            }
        }
    }

    Ok(RunSummary { cells: outcomes })
}

/// Writes every per-cell artifact: cloud, metadata, attractors, saturation
/// table, two-cluster diagnostic, and plots.
pub fn write_cell_outputs(
    dir: &Path,
    cloud: &Cloud<f64>,
    metadata: &CloudMetadata,
    format: CloudFormat,
) -> CliResult<()> {
    cloud::write_cloud(cloud, &dir.join(cloud::cloud_file_name(format)), format)?;
    cloud::write_metadata(metadata, &dir.join("metadata.json"))?;

    let report = AttractorReport {
        params: metadata.attractors,
        resolved_theta_g: resolve_theta_g(cloud, &metadata.attractors),
        attractors: find_attractors(cloud, &metadata.attractors),
    };
    write_json(&dir.join("attractors.json"), &report)?;

    if let Ok(summaries) = saturation_by_curvature(cloud) {
        write_json(&dir.join("saturation.json"), &summaries)?;
    }
    if let Some(diag) = two_cluster_diagnostic(cloud, None) {
        write_json(&dir.join("two_cluster.json"), &diag)?;
    }

    if !cloud.is_empty() {
        let base = RenderOptions::default();
        render_lgc(cloud, &dir.join("lgc"), &base)?;
        let any_classified = cloud.records.iter().any(|r| r.curvature.class().is_some());
        if any_classified {
            let panes = RenderOptions {
                panes_by_curvature: true,
                ..base
            };
            render_lgc(cloud, &dir.join("lgc"), &panes)?;
        }
        let any_egen = cloud.records.iter().any(|r| r.e_gen.is_some());
        if any_egen {
            let egen = RenderOptions {
                color_by: ColorBy::EGen,
                ..base
            };
            render_lgc(cloud, &dir.join("lgc_egen"), &egen)?;
        }
    }
    Ok(())
}

/// Locates the cloud file of a cell directory.
pub fn find_cloud_file(cell_dir: &Path) -> CliResult<(PathBuf, CloudFormat)> {
    for format in [CloudFormat::Csv, CloudFormat::Jsonl] {
        let path = cell_dir.join(cloud::cloud_file_name(format));
        if path.exists() {
            return Ok((path, format));
        }
    }
    Err(CliError::Data(format!(
        "no cloud.csv or cloud.jsonl under {}",
        cell_dir.display()
    )))
}

/// Loads a cell directory back: metadata plus records.
pub fn load_cell(cell_dir: &Path) -> CliResult<(CloudMetadata, Cloud<f64>)> {
    let meta = cloud::read_metadata(&cell_dir.join("metadata.json"))?;
    let (path, format) = find_cloud_file(cell_dir)?;
    let cloud = cloud::read_cloud(&path, format)?;
    Ok((meta, cloud))
}

/// Options for the `render` subcommand.
#[derive(Debug, Default)]
pub struct RenderRequest {
    pub color_by: Option<String>,
    pub panes: bool,
    pub x_scale: Option<String>,
    pub e_train_filter: Option<f64>,
    pub out: Option<PathBuf>,
}

pub fn render_cell(cell_dir: &Path, req: &RenderRequest) -> CliResult<Vec<PathBuf>> {
    let (_, cloud) = load_cell(cell_dir)?;
    let mut opts = RenderOptions {
        panes_by_curvature: req.panes,
        e_train_filter: req.e_train_filter,
        ..Default::default()
    };
    if let Some(c) = &req.color_by {
        opts.color_by = ColorBy::parse(c).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(x) = &req.x_scale {
        opts.x_scale = XScale::parse(x).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let base = req.out.clone().unwrap_or_else(|| cell_dir.join("lgc"));
    let files = render_lgc(&cloud, &base, &opts)?;
    Ok(files)
}
