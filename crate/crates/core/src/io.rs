//! File formats: JSON with sorted keys for datasets, models and results, CSV
//! for matrices and tables.
//!
//! A Gram CSV starts with one `#` line holding the metadata as JSON, followed
//! by one comma-separated row per matrix row. Floats are written in shortest
//! round-trip form, so reading a file back gives the exact values.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::kernels::{Engine, Evaluator, GramMatrix, Kernel, PhotonicSetup};
use crate::mesh::MeshConfig;
use crate::par::Execution;
use crate::svm::{train_test_split, Split};
use crate::taskgen::{Dataset, Task};

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

fn with_path<T>(res: Result<T>, path: &Path) -> Result<T> {
    res.map_err(|e| e.context(path.display()))
}

/// Pretty JSON with object keys in sorted order and a trailing newline.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    // Value's map type is ordered by key.
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    with_path(to_sorted_json(value).and_then(|s| Ok(fs::write(path, s)?)), path)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    with_path(
        fs::read_to_string(path)
            .map_err(Error::from)
            .and_then(|s| Ok(serde_json::from_str(&s)?)),
        path,
    )
}

/// On-disk form of a labelled dataset together with the circuit it was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub seed: u64,
    pub m: usize,
    pub k: usize,
    pub psi: Vec<usize>,
    pub lambda: f64,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
}

impl DatasetFile {
    pub fn from_task(task: &Task, setup: &PhotonicSetup) -> Self {
        Self {
            seed: task.dataset.seed,
            m: setup.mesh.modes(),
            k: setup.mesh.columns(),
            psi: setup.psi.occupations().to_vec(),
            lambda: task.geometric.lambda,
            points: task.dataset.points.clone(),
            labels: task.geometric.labels.clone(),
        }
    }

    pub fn setup(&self) -> Result<PhotonicSetup> {
        PhotonicSetup::new(MeshConfig::new(self.m, self.k)?, FockState::new(self.psi.clone())?)
    }

    pub fn dataset(&self) -> Result<Dataset> {
        Dataset::new(self.points.clone(), Some(self.labels.clone()), self.seed)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file: Self = read_json(path)?;
        with_path(file.validate(), path)?;
        Ok(file)
    }

    fn validate(&self) -> Result<()> {
        let setup = self.setup()?;
        let ds = self.dataset()?;
        if ds.dim() != setup.mesh.data_dim() {
            return Err(Error::DimensionMismatch {
                expected: setup.mesh.data_dim(),
                found: ds.dim(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMeta {
    pub kernel: Kernel,
    pub engine: Engine,
    /// Seed of the dataset the matrix was computed on.
    pub seed: u64,
    pub psi: Vec<usize>,
    pub rows: usize,
    pub cols: usize,
}

pub fn write_gram_csv(path: &Path, values: &DMatrix<f64>, meta: &GramMeta) -> Result<()> {
    ensure_parent(path)?;
    let mut out = String::new();
    out.push_str("# ");
    out.push_str(&serde_json::to_string(&serde_json::to_value(meta)?)?);
    out.push('\n');
    for r in 0..values.nrows() {
        let row: Vec<String> = (0..values.ncols()).map(|c| values[(r, c)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    with_path(fs::write(path, out).map_err(Error::from), path)
}

pub fn read_gram_csv(path: &Path) -> Result<(DMatrix<f64>, GramMeta)> {
    with_path(read_gram_inner(path), path)
}

fn read_gram_inner(path: &Path) -> Result<(DMatrix<f64>, GramMeta)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| Error::Parse("missing '#' metadata line".into()))?;
    let meta: GramMeta = serde_json::from_str(header.trim())?;
    let mut data = Vec::with_capacity(meta.rows * meta.cols);
    let mut rows = 0;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad number {field:?}", lineno + 2)))?;
            data.push(v);
        }
        if data.len() - before != meta.cols {
            return Err(Error::Parse(format!(
                "line {}: expected {} columns, found {}",
                lineno + 2,
                meta.cols,
                data.len() - before
            )));
        }
    }
    if rows != meta.rows {
        return Err(Error::Parse(format!("expected {} rows, found {rows}", meta.rows)));
    }
    Ok((DMatrix::from_row_slice(meta.rows, meta.cols, &data), meta))
}

/// Comma-separated table with a header row.
pub fn write_csv<R, S>(path: &Path, header: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator<Item = Vec<S>>,
    S: Display,
{
    ensure_parent(path)?;
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    with_path(fs::write(path, out).map_err(Error::from), path)
}

/// Paths written by [`emit_gram`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmittedGram {
    pub train: PathBuf,
    pub test_train: PathBuf,
    pub meta: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GramBundleMeta {
    kernel: Kernel,
    engine: Engine,
    seed: u64,
    psi: Vec<usize>,
    m: usize,
    k: usize,
    split: Split,
}

/// Computes the Gram of `kernel` on `data`, splits it and writes
/// `<stem>_train.csv` (train × train), `<stem>_test_train.csv`
/// (test × train) and `<stem>_meta.json`.
#[allow(clippy::too_many_arguments)]
pub fn emit_gram(
    data: &DatasetFile,
    kernel: Kernel,
    engine: Engine,
    split_ratio: f64,
    split_seed: u64,
    dir: &Path,
    stem: &str,
    exec: Execution,
) -> Result<EmittedGram> {
    let setup = data.setup()?;
    let ds = data.dataset()?;
    let eval = Evaluator::new(kernel, Some(setup))?;
    let gram = eval.gram(&ds.points, engine, exec)?;
    let split = train_test_split(ds.len(), split_ratio, split_seed)?;
    write_gram_split(&gram, &split, data, dir, stem)
}

pub fn write_gram_split(
    gram: &GramMatrix,
    split: &Split,
    data: &DatasetFile,
    dir: &Path,
    stem: &str,
) -> Result<EmittedGram> {
    let paths = EmittedGram {
        train: dir.join(format!("{stem}_train.csv")),
        test_train: dir.join(format!("{stem}_test_train.csv")),
        meta: dir.join(format!("{stem}_meta.json")),
    };
    for (path, rows) in [(&paths.train, &split.train), (&paths.test_train, &split.test)] {
        let block = gram.select(rows, &split.train);
        let meta = GramMeta {
            kernel: gram.kernel,
            engine: gram.provenance,
            seed: data.seed,
            psi: data.psi.clone(),
            rows: block.values.nrows(),
            cols: block.values.ncols(),
        };
        write_gram_csv(path, &block.values, &meta)?;
    }
    write_json(
        &paths.meta,
        &GramBundleMeta {
            kernel: gram.kernel,
            engine: gram.provenance,
            seed: data.seed,
            psi: data.psi.clone(),
            m: data.m,
            k: data.k,
            split: split.clone(),
        },
    )?;
    Ok(paths)
}
