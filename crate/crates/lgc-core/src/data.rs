//! Benchmark datasets: the built-in XOR truth table, CSV ingestion with
//! z-score standardization and target encoding, IDX image ingestion, and
//! seeded 80/20 train/test splits with batching.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mlp::Batch;
use crate::scalar::{cast, to_f64, Real};
use crate::seed::{derive_rng, SALT_BATCH_ORDER, SALT_EVAL, SALT_SPLIT, SALT_SUBSAMPLE};

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Disjoint train/test index sets over a dataset's patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Standardization statistics of one input column, computed on the
/// training split only. Constant columns are left untouched and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub std: f64,
    pub constant: bool,
}

/// An immutable, shareable benchmark problem: inputs, encoded targets, the
/// train/test split, and (for standardized problems) the column statistics.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    pub name: String,
    pub inputs: Matrix<T>,
    pub targets: Matrix<T>,
    pub split: Split,
    pub standardization: Option<Vec<ColumnStats>>,
    /// Seed the split (and any subsample) was drawn from, for metadata.
    pub split_seed: u64,
}

impl<T: Real> Dataset<T> {
    pub fn n_patterns(&self) -> usize {
        self.inputs.rows()
    }

    pub fn d_in(&self) -> usize {
        self.inputs.cols()
    }

    pub fn d_out(&self) -> usize {
        self.targets.cols()
    }

    pub fn batch_of(&self, indices: &[usize]) -> Batch<T> {
        let mut inputs = Matrix::zeros(indices.len(), self.d_in());
        let mut targets = Matrix::zeros(indices.len(), self.d_out());
        for (row, &idx) in indices.iter().enumerate() {
            inputs.row_mut(row).copy_from_slice(self.inputs.row(idx));
            targets.row_mut(row).copy_from_slice(self.targets.row(idx));
        }
        Batch { inputs, targets }
    }

    pub fn train_batch(&self) -> Batch<T> {
        self.batch_of(&self.split.train)
    }

    pub fn test_batch(&self) -> Option<Batch<T>> {
        if self.split.test.is_empty() {
            None
        } else {
            Some(self.batch_of(&self.split.test))
        }
    }

    /// A fixed seeded evaluation batch of at most `cap` test patterns,
    /// reused at every step so generalization curves are comparable.
    pub fn eval_batch(&self, cap: usize, seed: u64) -> Option<Batch<T>> {
        if self.split.test.is_empty() || cap == 0 {
            return None;
        }
        if self.split.test.len() <= cap {
            return self.test_batch();
        }
        let mut indices = self.split.test.clone();
        let mut rng = derive_rng(seed, 0, SALT_EVAL);
        indices.shuffle(&mut rng);
        indices.truncate(cap);
        Some(self.batch_of(&indices))
    }

    /// Training batches for one walk: the full training set, or a rotating
    /// schedule of `batch_size` mini-batches in a seeded shuffled order.
    pub fn batch_schedule(&self, batch_size: Option<usize>, seed: u64) -> BatchSchedule<T> {
        match batch_size {
            Some(size) if size < self.split.train.len() => {
                BatchSchedule::Cycling(CyclingBatcher::new(self, size, seed))
            }
            _ => BatchSchedule::Full(FullBatch::new(self.train_batch())),
        }
    }
}

/// Yields the training batch to use for the next walk step.
pub trait BatchSource<T: Real>: Send {
    fn next_batch(&mut self) -> &Batch<T>;
}

/// Always the same full training batch.
pub struct FullBatch<T> {
    batch: Batch<T>,
}

impl<T: Real> FullBatch<T> {
    pub fn new(batch: Batch<T>) -> Self {
        FullBatch { batch }
    }
}

impl<T: Real> BatchSource<T> for FullBatch<T> {
    fn next_batch(&mut self) -> &Batch<T> {
        &self.batch
    }
}

/// Mini-batches drawn cyclically in a seeded shuffled order: the training
/// indices are shuffled once and chunked into fixed batches, and the batch
/// visit order is itself a seeded shuffle, repeated as the walk outlasts it.
pub struct CyclingBatcher<T> {
    batches: Vec<Batch<T>>,
    order: Vec<usize>,
    cursor: usize,
}

impl<T: Real> CyclingBatcher<T> {
    pub fn new(dataset: &Dataset<T>, batch_size: usize, seed: u64) -> Self {
        assert!(batch_size >= 1, "batch size must be at least 1");
        let mut indices = dataset.split.train.clone();
        let mut rng = derive_rng(seed, 0, SALT_BATCH_ORDER);
        indices.shuffle(&mut rng);
        let batches: Vec<Batch<T>> = indices
            .chunks(batch_size)
            .map(|chunk| dataset.batch_of(chunk))
            .collect();
        let mut order: Vec<usize> = (0..batches.len()).collect();
        order.shuffle(&mut rng);
        CyclingBatcher {
            batches,
            order,
            cursor: 0,
        }
    }
}

impl<T: Real> BatchSource<T> for CyclingBatcher<T> {
    fn next_batch(&mut self) -> &Batch<T> {
        let idx = self.order[self.cursor % self.order.len()];
        self.cursor += 1;
        &self.batches[idx]
    }
}

/// Either batch source, so callers avoid boxing.
pub enum BatchSchedule<T> {
    Full(FullBatch<T>),
    Cycling(CyclingBatcher<T>),
}

impl<T: Real> BatchSource<T> for BatchSchedule<T> {
    fn next_batch(&mut self) -> &Batch<T> {
        match self {
            BatchSchedule::Full(s) => s.next_batch(),
            BatchSchedule::Cycling(s) => s.next_batch(),
        }
    }
}

/// Seeded uniform 80/20 split: the first 80% (rounded) of a shuffled
/// permutation trains, the rest tests.
pub fn split_80_20(n: usize, seed: u64) -> Result<Split> {
    if n < 5 {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} patterns 80/20; need at least 5"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = derive_rng(seed, 0, SALT_SPLIT);
    indices.shuffle(&mut rng);
    let n_train = (0.8 * n as f64).round() as usize;
    let test = indices.split_off(n_train);
    Ok(Split {
        train: indices,
        test,
    })
}

/// The XOR truth table: 4 binary patterns, all of them training data, no
/// standardization.
pub fn xor_dataset<T: Real>() -> Dataset<T> {
    let inputs = Matrix::from_rows(&[
        vec![T::zero(), T::zero()],
        vec![T::zero(), T::one()],
        vec![T::one(), T::zero()],
        vec![T::one(), T::one()],
    ])
    .expect("static XOR table");
    let targets = Matrix::from_rows(&[
        vec![T::zero()],
        vec![T::one()],
        vec![T::one()],
        vec![T::zero()],
    ])
    .expect("static XOR table");
    Dataset {
        name: "xor".into(),
        inputs,
        targets,
        split: Split {
            train: vec![0, 1, 2, 3],
            test: Vec::new(),
        },
        standardization: None,
        split_seed: 0,
    }
}

/// How a CSV row's label column becomes target values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetEncoding {
    /// One output in {0, 1}.
    Binary { negative: String, positive: String },
    /// One output per class; exactly one 1 per row, in declared order.
    OneHot { classes: Vec<String> },
}

impl TargetEncoding {
    fn width(&self) -> usize {
        match self {
            TargetEncoding::Binary { .. } => 1,
            TargetEncoding::OneHot { classes } => classes.len(),
        }
    }

    fn encode<T: Real>(&self, label: &str) -> Option<Vec<T>> {
        match self {
            TargetEncoding::Binary { negative, positive } => {
                if label == negative {
                    Some(vec![T::zero()])
                } else if label == positive {
                    Some(vec![T::one()])
                } else {
                    None
                }
            }
            TargetEncoding::OneHot { classes } => {
                let hit = classes.iter().position(|c| c == label)?;
                let mut row = vec![T::zero(); classes.len()];
                row[hit] = T::one();
                Some(row)
            }
        }
    }
}

/// Declares how to read one CSV dataset: header presence, which column is
/// the label, and how labels encode into targets. Every other column is a
/// feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub name: String,
    pub has_header: bool,
    pub label_column: usize,
    pub encoding: TargetEncoding,
}

impl CsvSchema {
    /// Fisher's iris data: 4 features, 3 one-hot species, header row.
    pub fn iris() -> Self {
        CsvSchema {
            name: "iris".into(),
            has_header: true,
            label_column: 4,
            encoding: TargetEncoding::OneHot {
                classes: vec![
                    "Iris-setosa".into(),
                    "Iris-versicolor".into(),
                    "Iris-virginica".into(),
                ],
            },
        }
    }

    /// Heart disease prediction in its 32-feature encoded form with a
    /// binary {0,1} label in the last column.
    pub fn heart() -> Self {
        CsvSchema {
            name: "heart".into(),
            has_header: false,
            label_column: 32,
            encoding: TargetEncoding::Binary {
                negative: "0".into(),
                positive: "1".into(),
            },
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidData {
            path: path.display().to_string(),
            msg: format!("schema: {e}"),
        })
    }
}

/// Loading knobs shared by the CSV and IDX loaders.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Seed for the 80/20 split (and subsample, when set).
    pub split_seed: u64,
    /// Keep only this many patterns, chosen by a seeded shuffle, before
    /// splitting and standardizing. Used by the desk preset.
    pub subsample: Option<usize>,
}

/// Loads a CSV benchmark per its schema, then splits 80/20 and z-score
/// standardizes the inputs with statistics from the training split.
pub fn load_csv<T: Real>(
    path: &Path,
    schema: &CsvSchema,
    opts: &LoadOptions,
) -> Result<Dataset<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv_reader(file, &path.display().to_string(), schema, opts)
}

fn load_csv_reader<T: Real, R: Read>(
    reader: R,
    path_label: &str,
    schema: &CsvSchema,
    opts: &LoadOptions,
) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(true)
        .from_reader(reader);

    let mut inputs: Vec<Vec<T>> = Vec::new();
    let mut targets: Vec<Vec<T>> = Vec::new();
    let mut width: Option<usize> = None;

    for record in rdr.records() {
        let record = record.map_err(|e| Error::InvalidData {
            path: path_label.to_string(),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::ParseRow {
                path: path_label.to_string(),
                line,
                msg: format!("row has {} fields, expected {expected}", record.len()),
            });
        }
        if schema.label_column >= record.len() {
            return Err(Error::ParseRow {
                path: path_label.to_string(),
                line,
                msg: format!(
                    "label column {} out of range for {} fields",
                    schema.label_column,
                    record.len()
                ),
            });
        }

        let mut features = Vec::with_capacity(record.len() - 1);
        for (col, field) in record.iter().enumerate() {
            if col == schema.label_column {
                continue;
            }
            let trimmed = field.trim();
            if trimmed.is_empty() {
                return Err(Error::ParseRow {
                    path: path_label.to_string(),
                    line,
                    msg: format!("missing value in column {col}"),
                });
            }
            let value: f64 = trimmed.parse().map_err(|_| Error::ParseRow {
                path: path_label.to_string(),
                line,
                msg: format!("column {col}: {trimmed:?} is not a number"),
            })?;
            features.push(cast::<T>(value));
        }

        let label = record.get(schema.label_column).unwrap_or("").trim();
        let encoded = schema
            .encoding
            .encode::<T>(label)
            .ok_or_else(|| Error::UnknownLabel {
                label: label.to_string(),
                path: path_label.to_string(),
                line,
            })?;
        inputs.push(features);
        targets.push(encoded);
    }

    assemble(
        schema.name.clone(),
        inputs,
        targets,
        schema.encoding.width(),
        opts,
    )
}

/// The embedded iris fixture, for runs without a data directory.
pub fn iris_builtin<T: Real>(opts: &LoadOptions) -> Dataset<T> {
    static IRIS_CSV: &str = include_str!("../../../data/iris.csv");
    load_csv_reader(
        IRIS_CSV.as_bytes(),
        "builtin:iris",
        &CsvSchema::iris(),
        opts,
    )
    .expect("embedded iris fixture is well-formed")
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    if path.extension().is_some_and(|ext| ext == "gz") {
        GzDecoder::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
    } else {
        let mut file = file;
        file.read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(bytes)
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::InvalidData {
            path: path.display().to_string(),
            msg: format!("truncated header at byte {offset}"),
        })
}

/// Loads an IDX image/label pair (gzip-compressed variants accepted),
/// flattens each image row-major, one-hot encodes the 10 digit classes,
/// splits 80/20, and standardizes pixels from the training split.
pub fn load_idx<T: Real>(
    images_path: &Path,
    labels_path: &Path,
    opts: &LoadOptions,
) -> Result<Dataset<T>> {
    let (inputs, targets) = read_idx_pair(images_path, labels_path)?;
    assemble("mnist".into(), inputs, targets, 10, opts)
}

/// Loads and concatenates several IDX pairs (e.g. the train and test
/// archives) into one dataset before splitting and standardizing.
pub fn load_idx_concat<T: Real>(
    pairs: &[(std::path::PathBuf, std::path::PathBuf)],
    opts: &LoadOptions,
) -> Result<Dataset<T>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no IDX pairs to load"));
    }
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut width = None;
    for (images_path, labels_path) in pairs {
        let (mut i, mut t) = read_idx_pair::<T>(images_path, labels_path)?;
        let w = i.first().map_or(0, Vec::len);
        if *width.get_or_insert(w) != w {
            return Err(Error::InvalidData {
                path: images_path.display().to_string(),
                msg: "image dimensions differ between IDX pairs".into(),
            });
        }
        inputs.append(&mut i);
        targets.append(&mut t);
    }
    assemble("mnist".into(), inputs, targets, 10, opts)
}

#[allow(clippy::type_complexity)]
fn read_idx_pair<T: Real>(
    images_path: &Path,
    labels_path: &Path,
) -> Result<(Vec<Vec<T>>, Vec<Vec<T>>)> {
    let image_bytes = read_maybe_gz(images_path)?;
    let magic = be_u32(&image_bytes, 0, images_path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::InvalidData {
            path: images_path.display().to_string(),
            msg: format!("bad image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        });
    }
    let n_images = be_u32(&image_bytes, 4, images_path)? as usize;
    let n_rows = be_u32(&image_bytes, 8, images_path)? as usize;
    let n_cols = be_u32(&image_bytes, 12, images_path)? as usize;
    let pixels = n_rows * n_cols;
    let expected_len = 16 + n_images * pixels;
    if image_bytes.len() < expected_len {
        return Err(Error::InvalidData {
            path: images_path.display().to_string(),
            msg: format!(
                "truncated image data: {} bytes, header promises {expected_len}",
                image_bytes.len()
            ),
        });
    }

    let label_bytes = read_maybe_gz(labels_path)?;
    let magic = be_u32(&label_bytes, 0, labels_path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::InvalidData {
            path: labels_path.display().to_string(),
            msg: format!("bad label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        });
    }
    let n_labels = be_u32(&label_bytes, 4, labels_path)? as usize;
    if label_bytes.len() < 8 + n_labels {
        return Err(Error::InvalidData {
            path: labels_path.display().to_string(),
            msg: format!(
                "truncated label data: {} bytes, header promises {}",
                label_bytes.len(),
                8 + n_labels
            ),
        });
    }
    if n_labels != n_images {
        return Err(Error::InvalidData {
            path: labels_path.display().to_string(),
            msg: format!("{n_labels} labels for {n_images} images"),
        });
    }

    let mut inputs = Vec::with_capacity(n_images);
    let mut targets = Vec::with_capacity(n_images);
    for i in 0..n_images {
        let start = 16 + i * pixels;
        inputs.push(
            image_bytes[start..start + pixels]
                .iter()
                .map(|&px| cast::<T>(px as f64))
                .collect(),
        );
        let label = label_bytes[8 + i] as usize;
        if label > 9 {
            return Err(Error::InvalidData {
                path: labels_path.display().to_string(),
                msg: format!("label {label} out of digit range at index {i}"),
            });
        }
        let mut row = vec![T::zero(); 10];
        row[label] = T::one();
        targets.push(row);
    }

    Ok((inputs, targets))
}

/// Writes images in IDX3 format (uncompressed), for fixtures.
pub fn write_idx_images(path: &Path, images: &[Vec<u8>], rows: u32, cols: u32) -> Result<()> {
    let pixels = (rows * cols) as usize;
    let mut out = Vec::with_capacity(16 + images.len() * pixels);
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&rows.to_be_bytes());
    out.extend_from_slice(&cols.to_be_bytes());
    for image in images {
        assert_eq!(image.len(), pixels, "image size must match rows*cols");
        out.extend_from_slice(image);
    }
    File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| Error::io(path, e))
}

/// Writes labels in IDX1 format (uncompressed), for fixtures.
pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| Error::io(path, e))
}

/// Subsample → split → standardize. Statistics come from the training
/// split only and are applied to both splits.
fn assemble<T: Real>(
    name: String,
    mut inputs: Vec<Vec<T>>,
    mut targets: Vec<Vec<T>>,
    target_width: usize,
    opts: &LoadOptions,
) -> Result<Dataset<T>> {
    if inputs.is_empty() {
        return Err(Error::EmptyInput("dataset with zero patterns"));
    }
    for row in &targets {
        debug_assert_eq!(row.len(), target_width);
    }

    if let Some(keep) = opts.subsample {
        if keep < inputs.len() {
            let mut indices: Vec<usize> = (0..inputs.len()).collect();
            let mut rng = derive_rng(opts.split_seed, 0, SALT_SUBSAMPLE);
            indices.shuffle(&mut rng);
            indices.truncate(keep);
            indices.sort_unstable();
            inputs = indices.iter().map(|&i| inputs[i].clone()).collect();
            targets = indices.iter().map(|&i| targets[i].clone()).collect();
        }
    }

    let n = inputs.len();
    let split = split_80_20(n, opts.split_seed)?;
    let mut input_matrix = Matrix::from_rows(&inputs)?;
    let target_matrix = Matrix::from_rows(&targets)?;
    let stats = standardize_in_place(&mut input_matrix, &split.train);

    Ok(Dataset {
        name,
        inputs: input_matrix,
        targets: target_matrix,
        split,
        standardization: Some(stats),
        split_seed: opts.split_seed,
    })
}

/// Z-scores every column in place using train-split statistics (population
/// standard deviation). Constant columns are flagged and left unscaled.
fn standardize_in_place<T: Real>(inputs: &mut Matrix<T>, train: &[usize]) -> Vec<ColumnStats> {
    let n_train = train.len() as f64;
    let mut stats = Vec::with_capacity(inputs.cols());
    for col in 0..inputs.cols() {
        let mean = train
            .iter()
            .map(|&r| to_f64(inputs.get(r, col)))
            .sum::<f64>()
            / n_train;
        let var = train
            .iter()
            .map(|&r| {
                let d = to_f64(inputs.get(r, col)) - mean;
                d * d
            })
            .sum::<f64>()
            / n_train;
        let std = var.sqrt();
        let constant = std == 0.0;
        if !constant {
            for row in 0..inputs.rows() {
                let z = (to_f64(inputs.get(row, col)) - mean) / std;
                inputs.set(row, col, cast::<T>(z));
            }
        }
        stats.push(ColumnStats {
            mean,
            std,
            constant,
        });
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_truth_table() {
        let d: Dataset<f64> = xor_dataset();
        assert_eq!(d.n_patterns(), 4);
        assert_eq!(d.d_in(), 2);
        assert_eq!(d.d_out(), 1);
        assert!(d.split.test.is_empty());
        assert_eq!(d.split.train.len(), 4);
        // Pattern (1,1) → 0.
        assert_eq!(d.inputs.row(3), &[1.0, 1.0]);
        assert_eq!(d.targets.get(3, 0), 0.0);
    }

    #[test]
    fn split_arithmetic_and_determinism() {
        let s = split_80_20(150, 9).unwrap();
        assert_eq!(s.train.len(), 120);
        assert_eq!(s.test.len(), 30);

        let s2 = split_80_20(920, 9).unwrap();
        assert_eq!(s2.train.len(), 736);
        assert_eq!(s2.test.len(), 184);

        assert_eq!(split_80_20(150, 9).unwrap(), s);
        assert!(split_80_20(4, 9).is_err());

        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..150).collect::<Vec<_>>());
    }

    #[test]
    fn iris_builtin_shapes_and_standardization() {
        let d: Dataset<f64> = iris_builtin(&LoadOptions::default());
        assert_eq!(d.n_patterns(), 150);
        assert_eq!(d.d_in(), 4);
        assert_eq!(d.d_out(), 3);
        assert_eq!(d.split.train.len(), 120);

        // Train-split columns are standardized to mean 0, std 1.
        for col in 0..4 {
            let n = d.split.train.len() as f64;
            let mean: f64 = d
                .split
                .train
                .iter()
                .map(|&r| d.inputs.get(r, col))
                .sum::<f64>()
                / n;
            let var: f64 = d
                .split
                .train
                .iter()
                .map(|&r| (d.inputs.get(r, col) - mean).powi(2))
                .sum::<f64>()
                / n;
            assert!(mean.abs() < 1e-9, "column {col} mean {mean}");
            assert!(
                (var.sqrt() - 1.0).abs() < 1e-9,
                "column {col} std {}",
                var.sqrt()
            );
        }

        // One-hot rows sum to exactly 1.
        for r in 0..d.n_patterns() {
            let sum: f64 = d.targets.row(r).iter().sum();
            assert_eq!(sum, 1.0);
        }
    }

    #[test]
    fn hand_computed_z_scores_are_symmetric() {
        // Column {1,2,3,4}: mean 2.5, population std sqrt(1.25).
        let mut m =
            Matrix::<f64>::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let stats = standardize_in_place(&mut m, &[0, 1, 2, 3]);
        assert!((stats[0].mean - 2.5).abs() < 1e-12);
        assert!((stats[0].std - 1.25_f64.sqrt()).abs() < 1e-12);
        assert!((m.get(0, 0) + m.get(3, 0)).abs() < 1e-12);
        assert!((m.get(1, 0) + m.get(2, 0)).abs() < 1e-12);
        assert!(m.get(0, 0) < m.get(1, 0));
    }

    #[test]
    fn constant_columns_are_flagged_not_scaled() {
        let mut m =
            Matrix::<f64>::from_rows(&[vec![7.0, 1.0], vec![7.0, 2.0], vec![7.0, 3.0]]).unwrap();
        let stats = standardize_in_place(&mut m, &[0, 1, 2]);
        assert!(stats[0].constant);
        assert!(!stats[1].constant);
        assert_eq!(m.get(0, 0), 7.0);
    }

    fn write_temp(content: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!(
            "lgc-data-test-{}-{}.csv",
            std::process::id(),
            content.len()
        ));
        std::fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn csv_malformed_row_reports_line_number() {
        let path = write_temp("a,b,label\n1.0,2.0,Iris-setosa\n1.0,oops,Iris-setosa\n");
        let schema = CsvSchema {
            name: "t".into(),
            has_header: true,
            label_column: 2,
            encoding: TargetEncoding::OneHot {
                classes: vec!["Iris-setosa".into()],
            },
        };
        let err = load_csv::<f64>(&path, &schema, &LoadOptions::default()).unwrap_err();
        match err {
            Error::ParseRow { line, .. } => assert_eq!(line, 3),
            other => panic!("expected ParseRow, got {other:?}"),
        }
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn csv_unknown_label_is_rejected() {
        let path = write_temp("1.0,A\n2.0,B\n3.0,A\n4.0,A\n5.0,B\n");
        let schema = CsvSchema {
            name: "t".into(),
            has_header: false,
            label_column: 1,
            encoding: TargetEncoding::Binary {
                negative: "A".into(),
                positive: "C".into(),
            },
        };
        let err = load_csv::<f64>(&path, &schema, &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownLabel { label, .. } if label == "B"));
        std::fs::remove_file(write_temp("1.0,A\n2.0,B\n3.0,A\n4.0,A\n5.0,B\n")).ok();
    }

    #[test]
    fn csv_missing_value_is_rejected() {
        let path = write_temp("1.0,,A\n2.0,1.0,A\n3.0,2.0,A\n4.0,3.0,A\n5.0,4.0,A\n");
        let schema = CsvSchema {
            name: "t".into(),
            has_header: false,
            label_column: 2,
            encoding: TargetEncoding::OneHot {
                classes: vec!["A".into()],
            },
        };
        let err = load_csv::<f64>(&path, &schema, &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::ParseRow { line: 1, .. }));
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn idx_round_trip_identity() {
        let dir = std::env::temp_dir();
        let images_path = dir.join(format!("lgc-idx-{}-img", std::process::id()));
        let labels_path = dir.join(format!("lgc-idx-{}-lbl", std::process::id()));

        let mut images = Vec::new();
        let mut labels = Vec::new();
        for i in 0..50u8 {
            images.push((0..16).map(|p| i.wrapping_mul(7).wrapping_add(p)).collect());
            labels.push(i % 10);
        }
        write_idx_images(&images_path, &images, 4, 4).unwrap();
        write_idx_labels(&labels_path, &labels).unwrap();

        let d: Dataset<f64> = load_idx(
            &images_path,
            &labels_path,
            &LoadOptions {
                split_seed: 3,
                subsample: None,
            },
        )
        .unwrap();
        assert_eq!(d.n_patterns(), 50);
        assert_eq!(d.d_in(), 16);
        assert_eq!(d.d_out(), 10);
        assert_eq!(d.split.train.len(), 40);

        // Label 7 → one-hot index 7.
        let idx_of_seven = labels.iter().position(|&l| l == 7).unwrap();
        assert_eq!(d.targets.get(idx_of_seven, 7), 1.0);
        let row_sum: f64 = d.targets.row(idx_of_seven).iter().sum();
        assert_eq!(row_sum, 1.0);

        // Raw pixel round trip survives standardization: invert the z-score.
        let stats = d.standardization.as_ref().unwrap();
        for (i, img) in images.iter().enumerate() {
            for (j, &px) in img.iter().enumerate() {
                let stored = d.inputs.get(i, j);
                let recovered = if stats[j].constant {
                    stored
                } else {
                    stored * stats[j].std + stats[j].mean
                };
                assert!(
                    (recovered - px as f64).abs() < 1e-9,
                    "pixel ({i},{j}) {recovered} vs {px}"
                );
            }
        }

        std::fs::remove_file(&images_path).ok();
        std::fs::remove_file(&labels_path).ok();
    }

    #[test]
    fn idx_bad_magic_and_count_mismatch() {
        let dir = std::env::temp_dir();
        let img = dir.join(format!("lgc-idx-bad-{}-img", std::process::id()));
        let lbl = dir.join(format!("lgc-idx-bad-{}-lbl", std::process::id()));

        std::fs::write(&img, [0u8, 0, 8, 9, 0, 0, 0, 0]).unwrap();
        write_idx_labels(&lbl, &[1, 2, 3]).unwrap();
        assert!(matches!(
            load_idx::<f64>(&img, &lbl, &LoadOptions::default()),
            Err(Error::InvalidData { .. })
        ));

        let images: Vec<Vec<u8>> = (0..6).map(|_| vec![0u8; 4]).collect();
        write_idx_images(&img, &images, 2, 2).unwrap();
        assert!(matches!(
            load_idx::<f64>(&img, &lbl, &LoadOptions::default()),
            Err(Error::InvalidData { .. })
        ));

        std::fs::remove_file(&img).ok();
        std::fs::remove_file(&lbl).ok();
    }

    #[test]
    fn gzip_idx_variant_loads_identically() {
        use flate2::write::GzEncoder;
        use flate2::Compression;

        let dir = std::env::temp_dir();
        let plain_img = dir.join(format!("lgc-idxgz-{}-img", std::process::id()));
        let plain_lbl = dir.join(format!("lgc-idxgz-{}-lbl", std::process::id()));
        let images: Vec<Vec<u8>> = (0..10).map(|i| vec![i * 3; 9]).collect();
        let labels: Vec<u8> = (0..10).collect();
        write_idx_images(&plain_img, &images, 3, 3).unwrap();
        write_idx_labels(&plain_lbl, &labels).unwrap();

        let gz = |src: &std::path::Path| {
            let dst = src.with_extension("gz");
            let mut enc = GzEncoder::new(File::create(&dst).unwrap(), Compression::default());
            enc.write_all(&std::fs::read(src).unwrap()).unwrap();
            enc.finish().unwrap();
            dst
        };
        let gz_img = gz(&plain_img);
        let gz_lbl = gz(&plain_lbl);

        let opts = LoadOptions {
            split_seed: 1,
            subsample: None,
        };
        let a: Dataset<f64> = load_idx(&plain_img, &plain_lbl, &opts).unwrap();
        let b: Dataset<f64> = load_idx(&gz_img, &gz_lbl, &opts).unwrap();
        assert_eq!(a.inputs, b.inputs);
        assert_eq!(a.targets, b.targets);
        assert_eq!(a.split, b.split);

        for p in [plain_img, plain_lbl, gz_img, gz_lbl] {
            std::fs::remove_file(p).ok();
        }
    }

    #[test]
    fn heart_shaped_csv_loads_with_declared_schema() {
        // Synthetic stand-in with the declared shape: 920 rows, 32 numeric
        // features, binary {0,1} label in the last column.
        let mut body = String::new();
        for i in 0..920 {
            for c in 0..32 {
                body.push_str(&format!("{:.3},", ((i * 7 + c * 13) % 100) as f64 / 10.0));
            }
            body.push_str(if i % 3 == 0 { "1\n" } else { "0\n" });
        }
        let path = std::env::temp_dir().join(format!("lgc-heart-{}.csv", std::process::id()));
        std::fs::write(&path, body).unwrap();

        let d: Dataset<f64> =
            load_csv(&path, &CsvSchema::heart(), &LoadOptions::default()).unwrap();
        assert_eq!(d.n_patterns(), 920);
        assert_eq!(d.d_in(), 32);
        assert_eq!(d.d_out(), 1);
        assert_eq!(d.split.train.len(), 736);
        assert_eq!(d.split.test.len(), 184);
        for r in 0..d.n_patterns() {
            let t = d.targets.get(r, 0);
            assert!(t == 0.0 || t == 1.0);
        }
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn eval_batch_caps_and_is_seed_stable() {
        let d: Dataset<f64> = iris_builtin(&LoadOptions::default());
        assert_eq!(d.split.test.len(), 30);
        let capped = d.eval_batch(10, 9).unwrap();
        assert_eq!(capped.n_patterns(), 10);
        let again = d.eval_batch(10, 9).unwrap();
        assert_eq!(capped.inputs, again.inputs);
        // Cap above the split size returns the whole test split.
        assert_eq!(d.eval_batch(1000, 9).unwrap().n_patterns(), 30);
        // XOR has no test split.
        assert!(xor_dataset::<f64>().eval_batch(10, 9).is_none());
    }

    #[test]
    fn cycling_batcher_covers_training_set_per_cycle() {
        let d: Dataset<f64> = iris_builtin(&LoadOptions::default());
        let mut batcher = CyclingBatcher::new(&d, 50, 42);
        let sizes: Vec<usize> = (0..3).map(|_| batcher.next_batch().n_patterns()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 120);
        // Cycle repeats deterministically.
        let again = batcher.next_batch().n_patterns();
        assert_eq!(again, sizes[0]);
    }

    #[test]
    fn subsample_reduces_before_split() {
        let d: Dataset<f64> = iris_builtin(&LoadOptions {
            split_seed: 5,
            subsample: Some(60),
        });
        assert_eq!(d.n_patterns(), 60);
        assert_eq!(d.split.train.len(), 48);
        assert_eq!(d.split.test.len(), 12);
    }
}
