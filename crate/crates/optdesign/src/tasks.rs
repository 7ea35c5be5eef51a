//! Dataset ingestion and synthetic task generation.
//!
//! Provides CSV loading (including precomputed embedding matrices), two
//! grid-transformation task families on 4x4 matrices, two sequence-completion
//! task families on length-4 integer sequences, and seeded train/test
//! splitting that feeds pools, test sets, and replay oracles.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::oracles::DatasetReplayOracle;
use crate::selectors::{Pool, TestSet};
use crate::{Error, Result};

/// What the labels mean, which constrains the valid metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Classification,
    Regression,
    Vector,
}

/// Feature normalization applied before splitting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalize {
    #[default]
    None,
    UnitNorm,
    Standardize,
}

/// An in-memory task: feature matrix, label matrix, and task kind.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: DMatrix<f64>,
    pub task_kind: TaskKind,
    pub names: Option<Vec<String>>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn label_dim(&self) -> usize {
        self.labels.ncols()
    }

    pub fn feature_row(&self, i: usize) -> DVector<f64> {
        self.features.row(i).transpose()
    }

    pub fn label_row(&self, i: usize) -> DVector<f64> {
        self.labels.row(i).transpose()
    }

    fn validate(&self) -> Result<()> {
        if self.labels.nrows() != self.features.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.features.nrows(),
                got: self.labels.nrows(),
            });
        }
        if self.label_dim() == 0 {
            return Err(Error::InvalidConfig("labels must have at least one column".into()));
        }
        for (i, v) in self.features.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature(i));
            }
        }
        for (i, v) in self.labels.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature(i));
            }
        }
        if self.task_kind == TaskKind::Classification {
            for v in self.labels.iter() {
                if v.fract() != 0.0 {
                    return Err(Error::InvalidConfig(
                        "classification labels must be integer codes".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Per-trial train/test split policy.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub k_test: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub normalize: Normalize,
}

/// One trial's materialized split.
pub struct Split {
    pub pool: Pool<f64>,
    pub tests: TestSet<f64>,
    pub oracle: DatasetReplayOracle,
    /// Pool row index (into the normalized dataset) for each pool position.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// Ground-truth labels aligned with `tests.queries()`.
    pub test_labels: Vec<DVector<f64>>,
}

/// splitmix64 step; used to derive independent per-trial seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Loads a comma-separated file into a `Dataset`.
///
/// With a header, `label_cols` entries name header columns; without one they
/// are zero-based column indices. All non-label columns become features. The
/// task kind is inferred: multiple label columns give `Vector`, a single
/// all-integer label column gives `Classification`, otherwise `Regression`.
/// `unit_norm` divides each feature row by its Euclidean norm.
pub fn load_csv(
    path: &Path,
    label_cols: &[&str],
    has_header: bool,
    unit_norm: bool,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let names: Option<Vec<String>> = if has_header {
        Some(reader.headers()?.iter().map(|s| s.to_string()).collect())
    } else {
        None
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 1 + usize::from(has_header);
        let record = record?;
        let mut row = Vec::with_capacity(record.len());
        for cell in record.iter() {
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                message: format!("non-numeric cell '{cell}'"),
            })?;
            row.push(value);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} columns, found {}", row.len()),
                });
            }
            _ => {}
        }
        rows.push(row);
    }
    let width = width.ok_or(Error::InvalidConfig("empty csv file".into()))?;

    let mut label_idx = Vec::with_capacity(label_cols.len());
    for col in label_cols {
        let idx = match &names {
            Some(names) => names
                .iter()
                .position(|n| n == col)
                .ok_or_else(|| Error::InvalidConfig(format!("no column named '{col}'")))?,
            None => col
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("label column '{col}' is not an index")))?,
        };
        if idx >= width {
            return Err(Error::InvalidConfig(format!("label column {idx} out of range")));
        }
        if !label_idx.contains(&idx) {
            label_idx.push(idx);
        }
    }
    if label_idx.is_empty() {
        return Err(Error::InvalidConfig("at least one label column required".into()));
    }

    let feature_idx: Vec<usize> = (0..width).filter(|i| !label_idx.contains(i)).collect();
    if feature_idx.is_empty() {
        return Err(Error::InvalidConfig("no feature columns remain".into()));
    }

    let n = rows.len();
    let mut features = DMatrix::zeros(n, feature_idx.len());
    let mut labels = DMatrix::zeros(n, label_idx.len());
    for (r, row) in rows.iter().enumerate() {
        for (c, &idx) in feature_idx.iter().enumerate() {
            features[(r, c)] = row[idx];
        }
        for (c, &idx) in label_idx.iter().enumerate() {
            labels[(r, c)] = row[idx];
        }
    }
    if unit_norm {
        normalize_rows(&mut features)?;
    }

    let task_kind = if label_idx.len() > 1 {
        TaskKind::Vector
    } else if labels.iter().all(|v| v.fract() == 0.0) {
        TaskKind::Classification
    } else {
        TaskKind::Regression
    };
    let dataset = Dataset {
        features,
        labels,
        task_kind,
        names,
    };
    dataset.validate()?;
    Ok(dataset)
}

fn normalize_rows(features: &mut DMatrix<f64>) -> Result<()> {
    for r in 0..features.nrows() {
        let norm = features.row(r).norm();
        if norm <= f64::EPSILON {
            return Err(Error::ZeroNormRow(r));
        }
        for c in 0..features.ncols() {
            features[(r, c)] /= norm;
        }
    }
    Ok(())
}

/// Grid task family on 4x4 matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    /// Class A: center 2x2 block moves to the corners; class B: corners
    /// move back to the center block.
    ExpandContract,
    /// Class A: the four corner values rotate 90 degrees clockwise;
    /// class B: counter-clockwise.
    Rotate,
}

const GRID: usize = 4;
const CENTER: [(usize, usize); 4] = [(1, 1), (1, 2), (2, 1), (2, 2)];
const CORNERS: [(usize, usize); 4] = [(0, 0), (0, 3), (3, 0), (3, 3)];

fn grid_index(r: usize, c: usize) -> usize {
    r * GRID + c
}

/// Applies the deterministic grid transform for the given class.
/// `class` 0 is expand / rotate-cw, `class` 1 is contract / rotate-ccw.
pub fn arc_transform(kind: ArcKind, class: usize, input: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(GRID * GRID);
    match (kind, class) {
        (ArcKind::ExpandContract, 0) => {
            for (&(fr, fc), &(tr, tc)) in CENTER.iter().zip(CORNERS.iter()) {
                out[grid_index(tr, tc)] = input[grid_index(fr, fc)];
            }
        }
        (ArcKind::ExpandContract, _) => {
            for (&(fr, fc), &(tr, tc)) in CORNERS.iter().zip(CENTER.iter()) {
                out[grid_index(tr, tc)] = input[grid_index(fr, fc)];
            }
        }
        (ArcKind::Rotate, class) => {
            // clockwise cycle of corner positions
            let cycle = [(0usize, 0usize), (0, 3), (3, 3), (3, 0)];
            for (i, &(fr, fc)) in cycle.iter().enumerate() {
                let (tr, tc) = if class == 0 {
                    cycle[(i + 1) % 4]
                } else {
                    cycle[(i + 3) % 4]
                };
                out[grid_index(tr, tc)] = input[grid_index(fr, fc)];
            }
        }
    }
    out
}

/// Generates `n` grid-transformation examples, half per class, with nonzero
/// cells drawn uniformly from the integers 1..=9.
pub fn gen_arc(kind: ArcKind, n: usize, seed: u64) -> Result<Dataset> {
    if n % 2 != 0 {
        return Err(Error::InvalidConfig("n must be even (half per class)".into()));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let d = GRID * GRID;
    let mut features = DMatrix::zeros(n, d);
    let mut labels = DMatrix::zeros(n, d);
    for i in 0..n {
        let class = usize::from(i >= n / 2);
        let mut input = DVector::zeros(d);
        let filled: &[(usize, usize)] = match (kind, class) {
            (ArcKind::ExpandContract, 0) => &CENTER,
            _ => &CORNERS,
        };
        for &(r, c) in filled {
            input[grid_index(r, c)] = rng.random_range(1..=9) as f64;
        }
        let output = arc_transform(kind, class, &input);
        features.row_mut(i).copy_from_slice(input.as_slice());
        labels.row_mut(i).copy_from_slice(output.as_slice());
    }
    let dataset = Dataset {
        features,
        labels,
        task_kind: TaskKind::Vector,
        names: None,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Sequence task family on length-4 integer sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcfgKind {
    /// Odd-valued sequences append last + 1; even-valued append last - 1.
    AddSubtract,
    /// Odd-valued sequences append their first element; even-valued append
    /// their second element.
    Repeat,
}

const SEQ_LEN: usize = 4;

/// Applies the completion rule for the given class (0 = odd, 1 = even),
/// returning the length-5 completed sequence.
pub fn pcfg_transform(kind: PcfgKind, class: usize, input: &DVector<f64>) -> DVector<f64> {
    let appended = match (kind, class) {
        (PcfgKind::AddSubtract, 0) => input[SEQ_LEN - 1] + 1.0,
        (PcfgKind::AddSubtract, _) => input[SEQ_LEN - 1] - 1.0,
        (PcfgKind::Repeat, 0) => input[0],
        (PcfgKind::Repeat, _) => input[1],
    };
    let mut out = DVector::zeros(SEQ_LEN + 1);
    out.rows_mut(0, SEQ_LEN).copy_from(input);
    out[SEQ_LEN] = appended;
    out
}

/// Generates `n` sequence-completion examples, half odd-valued and half
/// even-valued, entries drawn from {1,3,5,7,9} and {2,4,6,8} respectively.
pub fn gen_pcfg(kind: PcfgKind, n: usize, seed: u64) -> Result<Dataset> {
    if n % 2 != 0 {
        return Err(Error::InvalidConfig("n must be even (half per class)".into()));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut features = DMatrix::zeros(n, SEQ_LEN);
    let mut labels = DMatrix::zeros(n, SEQ_LEN + 1);
    for i in 0..n {
        let class = usize::from(i >= n / 2);
        let input = DVector::from_fn(SEQ_LEN, |_, _| {
            let v = rng.random_range(1..=4) * 2;
            (if class == 0 { v - 1 } else { v }) as f64
        });
        let output = pcfg_transform(kind, class, &input);
        features.row_mut(i).copy_from_slice(input.as_slice());
        labels.row_mut(i).copy_from_slice(output.as_slice());
    }
    let dataset = Dataset {
        features,
        labels,
        task_kind: TaskKind::Vector,
        names: None,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Draws one trial's disjoint train/test split.
///
/// Test indices are drawn without replacement from a generator seeded by
/// `(spec.seed, trial)`. For classification tasks the draw walks the classes
/// round-robin so each class contributes `floor(K/C)` or `ceil(K/C)` test
/// examples. The replay oracle covers every row of the (normalized) dataset.
pub fn make_split(dataset: &Dataset, spec: &SplitSpec, trial: usize) -> Result<Split> {
    let n = dataset.n();
    if spec.k_test == 0 || spec.k_test >= n {
        return Err(Error::InvalidConfig(format!(
            "k_test must lie in 1..{n}, got {}",
            spec.k_test
        )));
    }
    let mut features = dataset.features.clone();
    match spec.normalize {
        Normalize::None => {}
        Normalize::UnitNorm => normalize_rows(&mut features)?,
        Normalize::Standardize => {
            for c in 0..features.ncols() {
                let col = features.column(c);
                let mean = col.mean();
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / (features.nrows() as f64);
                let std = var.sqrt().max(f64::EPSILON);
                for r in 0..features.nrows() {
                    features[(r, c)] = (features[(r, c)] - mean) / std;
                }
            }
        }
    }

    let mut rng = StdRng::seed_from_u64(derive_seed(spec.seed, trial as u64));
    let test_indices = if dataset.task_kind == TaskKind::Classification {
        let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            by_class.entry(dataset.labels[(i, 0)] as i64).or_default().push(i);
        }
        let mut classes: Vec<Vec<usize>> = by_class.into_values().collect();
        for members in classes.iter_mut() {
            members.shuffle(&mut rng);
        }
        classes.shuffle(&mut rng);
        let mut chosen = Vec::with_capacity(spec.k_test);
        let mut depth = 0;
        while chosen.len() < spec.k_test {
            let mut advanced = false;
            for members in &classes {
                if chosen.len() == spec.k_test {
                    break;
                }
                if let Some(&idx) = members.get(depth) {
                    chosen.push(idx);
                    advanced = true;
                }
            }
            if !advanced {
                break;
            }
            depth += 1;
        }
        chosen
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        all.truncate(spec.k_test);
        all
    };

    let mut is_test = vec![false; n];
    for &i in &test_indices {
        is_test[i] = true;
    }
    let train_indices: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();

    let row = |i: usize| features.row(i).transpose();
    let pool = Pool::new(train_indices.iter().map(|&i| row(i)).collect());
    let tests = TestSet::new(test_indices.iter().map(|&i| row(i)).collect())?;
    let test_labels: Vec<DVector<f64>> =
        test_indices.iter().map(|&i| dataset.label_row(i)).collect();
    let oracle = DatasetReplayOracle::new(
        (0..n).map(row).collect(),
        (0..n).map(|i| dataset.label_row(i)).collect(),
    )?;
    Ok(Split {
        pool,
        tests,
        oracle,
        train_indices,
        test_indices,
        test_labels,
    })
}

/// Writes a dataset as CSV with `f1..fd, y1..yk` columns; inverse of
/// `load_csv` with those label columns.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let header: Vec<String> = (0..dataset.dim())
        .map(|i| format!("f{}", i + 1))
        .chain((0..dataset.label_dim()).map(|i| format!("y{}", i + 1)))
        .collect();
    writer.write_record(&header)?;
    for r in 0..dataset.n() {
        let record: Vec<String> = (0..dataset.dim())
            .map(|c| dataset.features[(r, c)].to_string())
            .chain((0..dataset.label_dim()).map(|c| dataset.labels[(r, c)].to_string()))
            .collect();
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
