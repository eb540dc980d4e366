//! Experiment grids: task generation, Gram assembly, SVM training and
//! evaluation over dataset sizes, repeats and kernels.
//!
//! Every random choice in a run is derived from the master seed and the
//! `(size, repeat)` cell, so a configuration fully determines its outputs.
//! Cells run in parallel but results are always collected in grid order.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::io::{write_csv, write_json};
use crate::kernels::{Engine, Evaluator, GramMatrix, Kernel, PhotonicSetup};
use crate::mesh::MeshConfig;
use crate::par::Execution;
use crate::shots::{derive_seed, distribution_fidelity, reference_shot_budget};
use crate::svm::{self, accuracy, cross_validate, split_labels, train_test_split, C_GRID, DEFAULT_C};
use crate::taskgen::{generate_task, model_complexity, LabelRule, Task, DEFAULT_LAMBDA};

pub const GAMMA_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];
pub const DEGREE_GRID: [u32; 2] = [2, 3];
pub const OFFSET_GRID: [f64; 2] = [0.0, 1.0];
pub const NTK_DEPTH: usize = 2;

const TASK_STREAM: u64 = 0;
const SPLIT_STREAM: u64 = 1;
const GRAM_STREAM: u64 = 2;
const CV_STREAM: u64 = 3;

/// Kernel family requested in a configuration. Classical families get their
/// hyperparameters by cross-validation on the training split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Quantum,
    Coherent,
    Partial(f64),
    Unbunching,
    Gaussian,
    Polynomial,
    Linear,
    Ntk,
}

impl KernelChoice {
    pub fn is_photonic(self) -> bool {
        matches!(
            self,
            KernelChoice::Quantum | KernelChoice::Coherent | KernelChoice::Partial(_) | KernelChoice::Unbunching
        )
    }

    /// Candidate kernels searched over for this family.
    pub fn candidates(self) -> Vec<Kernel> {
        match self {
            KernelChoice::Quantum => vec![Kernel::Quantum],
            KernelChoice::Coherent => vec![Kernel::Coherent],
            KernelChoice::Partial(r) => vec![Kernel::Partial { r }],
            KernelChoice::Unbunching => vec![Kernel::Unbunching],
            KernelChoice::Gaussian => GAMMA_GRID.iter().map(|&gamma| Kernel::Gaussian { gamma }).collect(),
            KernelChoice::Polynomial => {
                let mut out = Vec::new();
                for &gamma in &GAMMA_GRID {
                    for &degree in &DEGREE_GRID {
                        for &offset in &OFFSET_GRID {
                            out.push(Kernel::Polynomial { gamma, offset, degree });
                        }
                    }
                }
                out
            }
            KernelChoice::Linear => vec![Kernel::Linear],
            KernelChoice::Ntk => vec![Kernel::Ntk { depth: NTK_DEPTH }],
        }
    }
}

impl fmt::Display for KernelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelChoice::Quantum => f.write_str("quantum"),
            KernelChoice::Coherent => f.write_str("coherent"),
            KernelChoice::Partial(r) => write!(f, "partial:{r}"),
            KernelChoice::Unbunching => f.write_str("unbunching"),
            KernelChoice::Gaussian => f.write_str("gaussian"),
            KernelChoice::Polynomial => f.write_str("polynomial"),
            KernelChoice::Linear => f.write_str("linear"),
            KernelChoice::Ntk => f.write_str("ntk"),
        }
    }
}

impl FromStr for KernelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if let Some(r) = s.strip_prefix("partial:") {
            let r: f64 = r.parse().map_err(|_| Error::Parse(format!("bad r in {s:?}")))?;
            Kernel::Partial { r }.validate()?;
            return Ok(KernelChoice::Partial(r));
        }
        Ok(match s.as_str() {
            "quantum" => KernelChoice::Quantum,
            "coherent" => KernelChoice::Coherent,
            "unbunching" => KernelChoice::Unbunching,
            "gaussian" => KernelChoice::Gaussian,
            "polynomial" => KernelChoice::Polynomial,
            "linear" => KernelChoice::Linear,
            "ntk" => KernelChoice::Ntk,
            _ => return Err(Error::Parse(format!("unknown kernel {s:?}"))),
        })
    }
}

impl Serialize for KernelChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KernelChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Photonic engine selection; sampled seeds are derived per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "lowercase")]
pub enum EngineChoice {
    Exact,
    Sampled { shots: u64 },
}

/// Two-photon input state families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// Photons in the first two modes.
    Left,
    /// Photons in the two central modes.
    Cent,
}

impl InitialState {
    pub fn state(self, modes: usize) -> Result<FockState> {
        match self {
            InitialState::Left => FockState::left_pair(modes),
            InitialState::Cent => FockState::central_pair(modes),
        }
    }
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Ok(InitialState::Left),
            "cent" | "central" => Ok(InitialState::Cent),
            other => Err(Error::Parse(format!("unknown initial state {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub modes: usize,
    pub columns: usize,
    /// Occupation numbers of the input state.
    pub psi: Vec<usize>,
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub lambda: f64,
    pub kernels: Vec<KernelChoice>,
    pub engine: EngineChoice,
    pub split_ratio: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Box constraint used unless `c_grid` is set.
    pub svm_c: f64,
    /// Pick C from a small grid by cross-validation.
    pub c_grid: bool,
    pub cv_folds: usize,
    pub label_rule: LabelRule,
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            modes: 6,
            columns: 6,
            psi: vec![0, 0, 1, 1, 0, 0],
            sizes: vec![40],
            repeats: 5,
            lambda: DEFAULT_LAMBDA,
            kernels: vec![
                KernelChoice::Quantum,
                KernelChoice::Coherent,
                KernelChoice::Gaussian,
                KernelChoice::Polynomial,
                KernelChoice::Linear,
                KernelChoice::Ntk,
            ],
            engine: EngineChoice::Exact,
            split_ratio: svm::DEFAULT_SPLIT_RATIO,
            seed: 0,
            output_dir: PathBuf::from("out"),
            svm_c: DEFAULT_C,
            c_grid: false,
            cv_folds: 3,
            label_rule: LabelRule::default(),
            execution: Execution::default(),
        }
    }
}

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad list element {s:?}"))))
        .collect()
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad value {value:?} for {key}")))
}

impl ExperimentConfig {
    pub fn setup(&self) -> Result<PhotonicSetup> {
        PhotonicSetup::new(MeshConfig::new(self.modes, self.columns)?, FockState::new(self.psi.clone())?)
    }

    pub fn validate(&self) -> Result<()> {
        self.setup()?;
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("sizes must not be empty".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "split_ratio must lie in (0,1), got {}",
                self.split_ratio
            )));
        }
        if self.kernels.is_empty() {
            return Err(Error::InvalidConfig("no kernels selected".into()));
        }
        if !(self.svm_c > 0.0) {
            return Err(Error::InvalidConfig(format!("svm_c must be positive, got {}", self.svm_c)));
        }
        if let EngineChoice::Sampled { shots: 0 } = self.engine {
            return Err(Error::InvalidConfig("sampled engine requires shots > 0".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidConfig("cv_folds must be at least 2".into()));
        }
        Ok(())
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "modes" | "m" => self.modes = parse_value(key, value)?,
            "columns" | "k" => self.columns = parse_value(key, value)?,
            "psi" => self.psi = parse_list(value)?,
            "state" => self.psi = value.parse::<InitialState>()?.state(self.modes)?.occupations().to_vec(),
            "sizes" => self.sizes = parse_list(value)?,
            "repeats" => self.repeats = parse_value(key, value)?,
            "lambda" => self.lambda = parse_value(key, value)?,
            "kernels" => self.kernels = parse_list(value)?,
            "engine" => {
                self.engine = match value {
                    "exact" => EngineChoice::Exact,
                    "sampled" => EngineChoice::Sampled {
                        shots: match self.engine {
                            EngineChoice::Sampled { shots } => shots,
                            EngineChoice::Exact => reference_shot_budget(),
                        },
                    },
                    other => return Err(Error::Parse(format!("unknown engine {other:?}"))),
                }
            }
            "shots" => {
                self.engine = EngineChoice::Sampled {
                    shots: parse_value(key, value)?,
                }
            }
            "split_ratio" => self.split_ratio = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "svm_c" | "c" => self.svm_c = parse_value(key, value)?,
            "c_grid" => self.c_grid = parse_value(key, value)?,
            "cv_folds" => self.cv_folds = parse_value(key, value)?,
            "label_rule" => {
                self.label_rule = match value {
                    "sqrt_kernel_projection" | "projection" => LabelRule::SqrtKernelProjection,
                    "eigenvector_sign" | "eigenvector" => LabelRule::EigenvectorSign,
                    other => return Err(Error::Parse(format!("unknown label rule {other:?}"))),
                }
            }
            "execution" => {
                self.execution = match value {
                    "parallel" => Execution::Parallel,
                    "sequential" => Execution::Sequential,
                    other => return Err(Error::Parse(format!("unknown execution mode {other:?}"))),
                }
            }
            other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            self.set(key, value).map_err(|e| e.context(format!("line {}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_kv(text)?;
        Ok(cfg)
    }
}

/// Outcome for one `(size, repeat, kernel)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub size: usize,
    pub repeat: usize,
    pub kernel: KernelChoice,
    /// Kernel with the hyperparameters actually used.
    pub params: Kernel,
    pub c: f64,
    pub engine: EngineChoice,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub g_cq: f64,
    pub s_q: f64,
    pub s_c: f64,
    /// Smallest eigenvalue of the training Gram.
    pub min_eigenvalue: f64,
    pub positives: usize,
    pub negatives: usize,
    pub dataset_seed: u64,
    pub redraws: usize,
    pub support_vectors: usize,
    /// Mean and standard deviation of the post-selected distribution
    /// fidelity over the sampled pairs.
    pub fidelity_mean: Option<f64>,
    pub fidelity_std: Option<f64>,
    /// Seconds spent on this kernel; kept out of the results file so runs
    /// compare byte for byte.
    #[serde(skip)]
    pub wall_time: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

struct Cell<'a> {
    config: &'a ExperimentConfig,
    setup: &'a PhotonicSetup,
    size: usize,
    repeat: usize,
    seed: u64,
}

impl Cell<'_> {
    fn engine(&self) -> Engine {
        match self.config.engine {
            EngineChoice::Exact => Engine::Exact,
            EngineChoice::Sampled { shots } => Engine::Sampled {
                shots,
                seed: derive_seed(self.seed, &[GRAM_STREAM]),
            },
        }
    }

    fn run(&self) -> Result<Vec<ResultRecord>> {
        let cfg = self.config;
        let exec = cfg.execution;
        let task = generate_task(
            self.setup,
            self.size,
            cfg.lambda,
            derive_seed(self.seed, &[TASK_STREAM]),
            cfg.label_rule,
            exec,
        )?;
        let y = &task.geometric.labels;
        let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
        let s_q = model_complexity(&task.quantum_gram.values, &yf, cfg.lambda)?;
        let s_c = model_complexity(&task.coherent_gram.values, &yf, cfg.lambda)?;
        let split = train_test_split(self.size, cfg.split_ratio, derive_seed(self.seed, &[SPLIT_STREAM]))?;
        let (y_train, y_test) = split_labels(y, &split);
        let (positives, negatives) = crate::taskgen::class_counts(y);

        let mut out = Vec::with_capacity(cfg.kernels.len());
        for &choice in &cfg.kernels {
            let start = Instant::now();
            let fit = self
                .fit_kernel(choice, &task, &split, &y_train, &y_test)
                .map_err(|e| e.context(format!("size {}, repeat {}, kernel {choice}", self.size, self.repeat)))?;
            out.push(ResultRecord {
                size: self.size,
                repeat: self.repeat,
                kernel: choice,
                params: fit.kernel,
                c: fit.c,
                engine: if choice.is_photonic() { cfg.engine } else { EngineChoice::Exact },
                train_accuracy: fit.train_accuracy,
                test_accuracy: fit.test_accuracy,
                g_cq: task.geometric.g,
                s_q,
                s_c,
                min_eigenvalue: fit.min_eigenvalue,
                positives,
                negatives,
                dataset_seed: task.dataset.seed,
                redraws: task.redraws,
                support_vectors: fit.support_vectors,
                fidelity_mean: fit.fidelity.map(|f| f.0),
                fidelity_std: fit.fidelity.map(|f| f.1),
                wall_time: start.elapsed().as_secs_f64(),
            });
        }
        Ok(out)
    }

    fn full_gram(&self, kernel: Kernel, task: &Task) -> Result<GramMatrix> {
        let engine = self.engine();
        match (kernel, engine) {
            (Kernel::Quantum, Engine::Exact) => Ok(task.quantum_gram.clone()),
            (Kernel::Coherent, Engine::Exact) => Ok(task.coherent_gram.clone()),
            _ => Evaluator::new(kernel, Some(self.setup.clone()))?.gram(&task.dataset.points, engine, self.config.execution),
        }
    }

    fn fidelity(&self, kernel: Kernel, task: &Task) -> Result<Option<(f64, f64)>> {
        let Engine::Sampled { shots, seed } = self.engine() else {
            return Ok(None);
        };
        if !kernel.is_photonic() {
            return Ok(None);
        }
        let eval = Evaluator::new(kernel, Some(self.setup.clone()))?;
        let records = eval.coincidence_records(&task.dataset.points, shots, seed, self.config.execution)?;
        let mut values = Vec::with_capacity(records.len());
        for (record, dist) in &records {
            if record.post_selected() == 0 || dist.collision_free_mass() <= 0.0 {
                continue;
            }
            values.push(distribution_fidelity(&dist.post_selected()?, &record.frequencies()?)?);
        }
        if values.is_empty() {
            return Ok(None);
        }
        Ok(Some(mean_std(&values)))
    }

    fn fit_kernel(
        &self,
        choice: KernelChoice,
        task: &Task,
        split: &svm::Split,
        y_train: &[i8],
        y_test: &[i8],
    ) -> Result<Fit> {
        let cfg = self.config;
        let cv_seed = derive_seed(self.seed, &[CV_STREAM]);
        let c_values: Vec<f64> = if cfg.c_grid { C_GRID.to_vec() } else { vec![cfg.svm_c] };
        let candidates = choice.candidates();

        let mut grams = Vec::with_capacity(candidates.len());
        for &kernel in &candidates {
            grams.push(self.full_gram(kernel, task)?);
        }
        // Single candidate with a fixed C needs no search.
        let (best, c) = if grams.len() == 1 && c_values.len() == 1 {
            (0, c_values[0])
        } else {
            let mut best = (0, c_values[0], f64::NEG_INFINITY);
            for (g, gram) in grams.iter().enumerate() {
                let k_train = gram.select(&split.train, &split.train);
                for &c in &c_values {
                    let score = cross_validate(&k_train.values, y_train, c, cfg.cv_folds, cv_seed)?;
                    if score > best.2 {
                        best = (g, c, score);
                    }
                }
            }
            (best.0, best.1)
        };
        let gram = &grams[best];
        let k_train = gram.select(&split.train, &split.train);
        let k_test = gram.select(&split.test, &split.train);
        let mut model = svm::train(&k_train.values, y_train, c)?;
        model.train_indices = split.train.clone();
        let train_accuracy = accuracy(&model.predict(&k_train.values)?, y_train)?;
        let test_accuracy = accuracy(&model.predict(&k_test.values)?, y_test)?;
        Ok(Fit {
            kernel: candidates[best],
            c,
            train_accuracy,
            test_accuracy,
            min_eigenvalue: k_train.min_eigenvalue()?,
            support_vectors: model.support_count(),
            fidelity: self.fidelity(candidates[best], task)?,
        })
    }
}

struct Fit {
    kernel: Kernel,
    c: f64,
    train_accuracy: f64,
    test_accuracy: f64,
    min_eigenvalue: f64,
    support_vectors: usize,
    fidelity: Option<(f64, f64)>,
}

/// Runs every `(size, repeat)` cell of the grid and returns the records in
/// size, repeat, kernel order.
pub fn run_cells(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    config.validate()?;
    let setup = config.setup()?;
    let cells: Vec<(usize, usize)> = config
        .sizes
        .iter()
        .flat_map(|&s| (0..config.repeats).map(move |r| (s, r)))
        .collect();
    let per_cell = config.execution.try_map(cells.len(), |c| {
        let (size, repeat) = cells[c];
        Cell {
            config,
            setup: &setup,
            size,
            repeat,
            seed: derive_seed(config.seed, &[size as u64, repeat as u64]),
        }
        .run()
        .map_err(|e| match e {
            Error::Context { .. } => e,
            other => other.context(format!("size {size}, repeat {repeat}")),
        })
    })?;
    Ok(per_cell.into_iter().flatten().collect())
}

/// Mean accuracies for one `(size, kernel)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub size: usize,
    pub kernel: KernelChoice,
    pub mean_test: f64,
    pub sem_test: f64,
    pub mean_train: f64,
    pub runs: usize,
}

/// Groups records by size and kernel, keeping first-seen order.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, KernelChoice)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.size, r.kernel)) {
            keys.push((r.size, r.kernel));
        }
    }
    keys.into_iter()
        .map(|(size, kernel)| {
            let group: Vec<&ResultRecord> = records.iter().filter(|r| r.size == size && r.kernel == kernel).collect();
            let test: Vec<f64> = group.iter().map(|r| r.test_accuracy).collect();
            let train: Vec<f64> = group.iter().map(|r| r.train_accuracy).collect();
            let (mean_test, std) = mean_std(&test);
            SummaryRow {
                size,
                kernel,
                mean_test,
                sem_test: std / (test.len() as f64).sqrt(),
                mean_train: mean_std(&train).0,
                runs: group.len(),
            }
        })
        .collect()
}

pub fn summary_for(rows: &[SummaryRow], size: usize, kernel: KernelChoice) -> Option<&SummaryRow> {
    rows.iter().find(|r| r.size == size && r.kernel == kernel)
}

fn write_records(dir: &Path, stem: &str, records: &[ResultRecord]) -> Result<()> {
    write_json(&dir.join(format!("{stem}.json")), &records)?;
    write_csv(
        &dir.join(format!("{stem}_accuracy.csv")),
        &["size", "repeat", "kernel", "train_accuracy", "test_accuracy", "g_cq"],
        records.iter().map(|r| {
            vec![
                r.size.to_string(),
                r.repeat.to_string(),
                r.kernel.to_string(),
                r.train_accuracy.to_string(),
                r.test_accuracy.to_string(),
                r.g_cq.to_string(),
            ]
        }),
    )?;
    write_csv(
        &dir.join(format!("{stem}_timings.csv")),
        &["size", "repeat", "kernel", "wall_time_s"],
        records.iter().map(|r| {
            vec![
                r.size.to_string(),
                r.repeat.to_string(),
                r.kernel.to_string(),
                format!("{:.6}", r.wall_time),
            ]
        }),
    )
}

fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_csv(
        path,
        &["size", "kernel", "mean_test_accuracy", "sem_test_accuracy", "mean_train_accuracy", "runs"],
        rows.iter().map(|r| {
            vec![
                r.size.to_string(),
                r.kernel.to_string(),
                r.mean_test.to_string(),
                r.sem_test.to_string(),
                r.mean_train.to_string(),
                r.runs.to_string(),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ResultRecord>,
    pub summary: Vec<SummaryRow>,
}

/// Full grid plus `results.json`, `results_accuracy.csv`,
/// `results_timings.csv` and `summary.csv` in the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let records = run_cells(config)?;
    let summary = summarize(&records);
    write_records(&config.output_dir, "results", &records)?;
    write_summary(&config.output_dir.join("summary.csv"), &summary)?;
    write_json(&config.output_dir.join("config.json"), config)?;
    Ok(ExperimentOutput { records, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub width: usize,
    pub state: InitialState,
    pub size: usize,
    pub kernel: KernelChoice,
    pub mean_test: f64,
    pub sem_test: f64,
    pub runs: usize,
}

/// Accuracy against dataset size for square meshes of each width, quantum
/// and coherent kernels only. Writes `width_scan.csv`.
pub fn run_width_scan(widths: &[usize], state: InitialState, base: &ExperimentConfig) -> Result<Vec<WidthRow>> {
    if widths.is_empty() || widths.iter().any(|&w| w < 2) {
        return Err(Error::InvalidConfig("widths must be non-empty and at least 2".into()));
    }
    let mut rows = Vec::new();
    for &width in widths {
        let cfg = ExperimentConfig {
            modes: width,
            columns: width,
            psi: state.state(width)?.occupations().to_vec(),
            kernels: vec![KernelChoice::Quantum, KernelChoice::Coherent],
            ..base.clone()
        };
        let records = run_cells(&cfg).map_err(|e| e.context(format!("width {width}")))?;
        for s in summarize(&records) {
            rows.push(WidthRow {
                width,
                state,
                size: s.size,
                kernel: s.kernel,
                mean_test: s.mean_test,
                sem_test: s.sem_test,
                runs: s.runs,
            });
        }
    }
    write_csv(
        &base.output_dir.join("width_scan.csv"),
        &["width", "state", "size", "kernel", "mean_test_accuracy", "sem_test_accuracy", "runs"],
        rows.iter().map(|r| {
            vec![
                r.width.to_string(),
                format!("{:?}", r.state).to_lowercase(),
                r.size.to_string(),
                r.kernel.to_string(),
                r.mean_test.to_string(),
                r.sem_test.to_string(),
                r.runs.to_string(),
            ]
        }),
    )?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub size: usize,
    pub mean_test: f64,
    pub sem_test: f64,
    pub mean_train: f64,
    pub runs: usize,
}

/// Accuracy of partially distinguishable kernels on tasks separating the
/// fully indistinguishable and fully distinguishable cases. Writes
/// `dist_sweep.csv` and the per-run records.
pub fn run_distinguishability_sweep(
    r_values: &[f64],
    config: &ExperimentConfig,
) -> Result<(Vec<SweepRow>, Vec<ResultRecord>)> {
    if r_values.is_empty() {
        return Err(Error::InvalidConfig("no r values given".into()));
    }
    for &r in r_values {
        Kernel::Partial { r }.validate()?;
    }
    let cfg = ExperimentConfig {
        kernels: r_values.iter().map(|&r| KernelChoice::Partial(r)).collect(),
        ..config.clone()
    };
    let records = run_cells(&cfg)?;
    let rows: Vec<SweepRow> = summarize(&records)
        .into_iter()
        .map(|s| SweepRow {
            r: match s.kernel {
                KernelChoice::Partial(r) => r,
                _ => unreachable!("sweep only runs partial kernels"),
            },
            size: s.size,
            mean_test: s.mean_test,
            sem_test: s.sem_test,
            mean_train: s.mean_train,
            runs: s.runs,
        })
        .collect();
    write_records(&config.output_dir, "dist_sweep_results", &records)?;
    write_csv(
        &config.output_dir.join("dist_sweep.csv"),
        &["r", "size", "mean_test_accuracy", "sem_test_accuracy", "mean_train_accuracy", "runs"],
        rows.iter().map(|row| {
            vec![
                row.r.to_string(),
                row.size.to_string(),
                row.mean_test.to_string(),
                row.sem_test.to_string(),
                row.mean_train.to_string(),
                row.runs.to_string(),
            ]
        }),
    )?;
    Ok((rows, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbunchingRow {
    pub size: usize,
    pub kernel: KernelChoice,
    pub mean_test: f64,
    pub sem_test: f64,
    /// Smallest training-Gram eigenvalue seen over the runs.
    pub min_eigenvalue: f64,
    /// Runs whose training Gram had an eigenvalue below `-1e-8`.
    pub indefinite_runs: usize,
    pub runs: usize,
}

/// Quantum, unbunching and coherent kernels on the same tasks. Writes
/// `unbunching.csv` and the per-run records.
pub fn run_unbunching_check(config: &ExperimentConfig) -> Result<(Vec<UnbunchingRow>, Vec<ResultRecord>)> {
    let cfg = ExperimentConfig {
        kernels: vec![KernelChoice::Quantum, KernelChoice::Unbunching, KernelChoice::Coherent],
        ..config.clone()
    };
    let records = run_cells(&cfg)?;
    let rows: Vec<UnbunchingRow> = summarize(&records)
        .into_iter()
        .map(|s| {
            let group: Vec<&ResultRecord> = records
                .iter()
                .filter(|r| r.size == s.size && r.kernel == s.kernel)
                .collect();
            UnbunchingRow {
                size: s.size,
                kernel: s.kernel,
                mean_test: s.mean_test,
                sem_test: s.sem_test,
                min_eigenvalue: group.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min),
                indefinite_runs: group.iter().filter(|r| r.min_eigenvalue < -crate::linalg::PSD_TOL).count(),
                runs: s.runs,
            }
        })
        .collect();
    write_records(&config.output_dir, "unbunching_results", &records)?;
    write_csv(
        &config.output_dir.join("unbunching.csv"),
        &["size", "kernel", "mean_test_accuracy", "sem_test_accuracy", "min_eigenvalue", "indefinite_runs", "runs"],
        rows.iter().map(|r| {
            vec![
                r.size.to_string(),
                r.kernel.to_string(),
                r.mean_test.to_string(),
                r.sem_test.to_string(),
                r.min_eigenvalue.to_string(),
                r.indefinite_runs.to_string(),
                r.runs.to_string(),
            ]
        }),
    )?;
    Ok((rows, records))
}
