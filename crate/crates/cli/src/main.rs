use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use phokern::experiment::{
    run_distinguishability_sweep, run_experiment, run_unbunching_check, run_width_scan, EngineChoice,
    ExperimentConfig, InitialState, KernelChoice,
};
use phokern::io::{write_gram_split, write_json, DatasetFile};
use phokern::kernels::Evaluator;
use phokern::shots::derive_seed;
use phokern::svm::{self, accuracy, split_labels, train_test_split};
use phokern::taskgen::{generate_task, LabelRule};
use phokern::{Engine, Execution, Kernel};

/// Photonic kernel experiments: datasets, Gram matrices, SVM training.
#[derive(Parser, Debug)]
#[command(name = "phokern", version)]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labelled dataset.
    GenTask(GenTask),
    /// Compute and write train and test Gram matrices for a dataset.
    Gram(GramArgs),
    /// Train an SVM on a dataset and report accuracies.
    Train(TrainArgs),
    /// Run the configured experiment grid.
    Experiment(GridArgs),
    /// Accuracy against dataset size for several mesh widths.
    WidthScan(WidthArgs),
    /// Accuracy as a function of photon indistinguishability.
    DistSweep(SweepArgs),
    /// Compare the unbunching kernel with the quantum and coherent ones.
    UnbunchCheck(GridArgs),
}

#[derive(Args, Debug)]
struct GenTask {
    #[arg(long, default_value_t = 40)]
    size: usize,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    columns: Option<usize>,
    /// Input occupations, e.g. 0,0,1,1,0,0.
    #[arg(long, value_delimiter = ',')]
    psi: Option<Vec<usize>>,
    /// `left` or `cent`; overrides --psi.
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Threshold the eigenvector itself instead of its kernel projection.
    #[arg(long)]
    eigenvector_labels: bool,
}

#[derive(Args, Debug)]
struct EngineArgs {
    /// Shots per pair; exact probabilities when absent.
    #[arg(long)]
    shots: Option<u64>,
}

impl EngineArgs {
    fn engine(&self, seed: u64) -> Engine {
        match self.shots {
            Some(shots) => Engine::Sampled {
                shots,
                seed: derive_seed(seed, &[2]),
            },
            None => Engine::Exact,
        }
    }
}

#[derive(Args, Debug)]
struct GramArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// quantum, coherent, unbunching, partial:R, gaussian:G, polynomial:G,R,D, linear, ntk:L
    #[arg(long)]
    kernel: String,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value_t = svm::DEFAULT_SPLIT_RATIO)]
    split_ratio: f64,
    /// Also write the per-pair coincidence counts (sampled engine only).
    #[arg(long)]
    dump_counts: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    kernel: String,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value_t = svm::DEFAULT_SPLIT_RATIO)]
    split_ratio: f64,
    #[arg(long, default_value_t = svm::DEFAULT_C)]
    c: f64,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    kernels: Option<Vec<String>>,
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Args, Debug)]
struct WidthArgs {
    #[arg(long, value_delimiter = ',', default_value = "4,6")]
    widths: Vec<usize>,
    #[arg(long, default_value = "cent")]
    state: String,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    r: Vec<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

fn parse_f64s(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad {what} parameters {s:?}"))?;
    if v.len() != n {
        bail!("{what} takes {n} parameter(s), got {}", v.len());
    }
    Ok(v)
}

fn parse_kernel(spec: &str) -> Result<Kernel> {
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    let kernel = match (name.trim().to_ascii_lowercase().as_str(), params.is_empty()) {
        ("quantum", true) => Kernel::Quantum,
        ("coherent", true) => Kernel::Coherent,
        ("unbunching", true) => Kernel::Unbunching,
        ("linear", true) => Kernel::Linear,
        ("partial", false) => Kernel::Partial {
            r: parse_f64s(params, 1, "partial")?[0],
        },
        ("gaussian", _) => Kernel::Gaussian {
            gamma: if params.is_empty() { 0.1 } else { parse_f64s(params, 1, "gaussian")?[0] },
        },
        ("polynomial", false) => {
            let p = parse_f64s(params, 3, "polynomial")?;
            if p[2] < 1.0 || p[2].fract() != 0.0 {
                bail!("polynomial degree must be a positive integer");
            }
            Kernel::Polynomial {
                gamma: p[0],
                offset: p[1],
                degree: p[2] as u32,
            }
        }
        ("ntk", _) => Kernel::Ntk {
            depth: if params.is_empty() { 2 } else { params.trim().parse().context("bad ntk depth")? },
        },
        _ => bail!("unknown kernel {spec:?}"),
    };
    kernel.validate()?;
    Ok(kernel)
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.apply_kv(&text).with_context(|| format!("parsing {}", path.display()))?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if cli.sequential {
        cfg.execution = Execution::Sequential;
    }
    Ok(cfg)
}

fn apply_grid(cfg: &mut ExperimentConfig, grid: &GridArgs) -> Result<()> {
    if let Some(sizes) = &grid.sizes {
        cfg.sizes = sizes.clone();
    }
    if let Some(r) = grid.repeats {
        cfg.repeats = r;
    }
    if let Some(kernels) = &grid.kernels {
        cfg.kernels = kernels
            .iter()
            .map(|k| k.parse::<KernelChoice>())
            .collect::<std::result::Result<_, _>>()?;
    }
    if let Some(shots) = grid.shots {
        cfg.engine = EngineChoice::Sampled { shots };
    }
    cfg.validate()?;
    Ok(())
}

fn gen_task(cfg: &mut ExperimentConfig, args: &GenTask) -> Result<()> {
    if let Some(m) = args.modes {
        cfg.modes = m;
        cfg.columns = m;
        cfg.psi = InitialState::Cent.state(m)?.occupations().to_vec();
    }
    if let Some(k) = args.columns {
        cfg.columns = k;
    }
    if let Some(psi) = &args.psi {
        cfg.psi = psi.clone();
    }
    if let Some(state) = &args.state {
        cfg.psi = state.parse::<InitialState>()?.state(cfg.modes)?.occupations().to_vec();
    }
    if let Some(lambda) = args.lambda {
        cfg.lambda = lambda;
    }
    let rule = if args.eigenvector_labels {
        LabelRule::EigenvectorSign
    } else {
        cfg.label_rule
    };
    let setup = cfg.setup()?;
    let task = generate_task(&setup, args.size, cfg.lambda, cfg.seed, rule, cfg.execution)?;
    let path = cfg.output_dir.join("dataset.json");
    write_json(&path, &DatasetFile::from_task(&task, &setup))?;
    let (pos, neg) = phokern::taskgen::class_counts(&task.geometric.labels);
    println!(
        "wrote {} ({} points, g = {:.6}, classes +{pos}/-{neg}, redraws {})",
        path.display(),
        args.size,
        task.geometric.g,
        task.redraws
    );
    Ok(())
}

fn kernel_stem(kernel: &Kernel) -> String {
    match kernel {
        Kernel::Partial { r } => format!("partial_{r}"),
        other => other.name().to_string(),
    }
}

fn gram(cfg: &ExperimentConfig, args: &GramArgs) -> Result<()> {
    let data = DatasetFile::read(&args.dataset)?;
    let kernel = parse_kernel(&args.kernel)?;
    let setup = data.setup()?;
    let ds = data.dataset()?;
    let engine = args.engine.engine(cfg.seed);
    let eval = Evaluator::new(kernel, Some(setup))?;
    let gram = eval.gram(&ds.points, engine, cfg.execution)?;
    let split = train_test_split(ds.len(), args.split_ratio, derive_seed(cfg.seed, &[1]))?;
    let stem = kernel_stem(&kernel);
    let paths = write_gram_split(&gram, &split, &data, &cfg.output_dir, &stem)?;
    println!("wrote {}, {}, {}", paths.train.display(), paths.test_train.display(), paths.meta.display());
    if args.dump_counts {
        let Engine::Sampled { shots, seed } = engine else {
            bail!("--dump-counts needs --shots");
        };
        let records: Vec<_> = eval
            .coincidence_records(&ds.points, shots, seed, cfg.execution)?
            .into_iter()
            .map(|(record, _)| record)
            .collect();
        let path = cfg.output_dir.join(format!("{stem}_counts.json"));
        write_json(&path, &records)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn train(cfg: &ExperimentConfig, args: &TrainArgs) -> Result<()> {
    let data = DatasetFile::read(&args.dataset)?;
    let kernel = parse_kernel(&args.kernel)?;
    let ds = data.dataset()?;
    let eval = Evaluator::new(kernel, Some(data.setup()?))?;
    let gram = eval.gram(&ds.points, args.engine.engine(cfg.seed), cfg.execution)?;
    let split = train_test_split(ds.len(), args.split_ratio, derive_seed(cfg.seed, &[1]))?;
    let (y_train, y_test) = split_labels(&data.labels, &split);
    let k_train = gram.select(&split.train, &split.train);
    let k_test = gram.select(&split.test, &split.train);
    let mut model = svm::train(&k_train.values, &y_train, args.c)?;
    model.train_indices = split.train.clone();
    let train_acc = accuracy(&model.predict(&k_train.values)?, &y_train)?;
    let test_acc = accuracy(&model.predict(&k_test.values)?, &y_test)?;
    let path = cfg.output_dir.join(format!("{}_model.json", kernel_stem(&kernel)));
    write_json(&path, &model)?;
    println!(
        "{}: train accuracy {train_acc:.4}, test accuracy {test_acc:.4}, {} support vectors",
        args.kernel,
        model.support_count()
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn report_written(dir: &Path, files: &[&str]) {
    for f in files {
        println!("wrote {}", dir.join(f).display());
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::GenTask(args) => gen_task(&mut cfg, args)?,
        Command::Gram(args) => gram(&cfg, args)?,
        Command::Train(args) => train(&cfg, args)?,
        Command::Experiment(grid) => {
            apply_grid(&mut cfg, grid)?;
            let out = run_experiment(&cfg)?;
            for row in &out.summary {
                println!(
                    "N={:<4} {:<12} test {:.4} ± {:.4}  train {:.4}  ({} runs)",
                    row.size, row.kernel.to_string(), row.mean_test, row.sem_test, row.mean_train, row.runs
                );
            }
            report_written(
                &cfg.output_dir,
                &["results.json", "results_accuracy.csv", "results_timings.csv", "summary.csv"],
            );
        }
        Command::WidthScan(args) => {
            apply_grid(&mut cfg, &args.grid)?;
            let state: InitialState = args.state.parse()?;
            for row in run_width_scan(&args.widths, state, &cfg)? {
                println!(
                    "m={:<3} N={:<4} {:<9} test {:.4} ± {:.4}",
                    row.width, row.size, row.kernel.to_string(), row.mean_test, row.sem_test
                );
            }
            report_written(&cfg.output_dir, &["width_scan.csv"]);
        }
        Command::DistSweep(args) => {
            apply_grid(&mut cfg, &args.grid)?;
            let (rows, _) = run_distinguishability_sweep(&args.r, &cfg)?;
            for row in rows {
                println!("r={:<5} N={:<4} test {:.4} ± {:.4}", row.r, row.size, row.mean_test, row.sem_test);
            }
            report_written(&cfg.output_dir, &["dist_sweep.csv", "dist_sweep_results.json"]);
        }
        Command::UnbunchCheck(grid) => {
            apply_grid(&mut cfg, grid)?;
            let (rows, _) = run_unbunching_check(&cfg)?;
            for row in rows {
                println!(
                    "N={:<4} {:<11} test {:.4} ± {:.4}  min eigenvalue {:.3e} ({} indefinite of {})",
                    row.size,
                    row.kernel.to_string(),
                    row.mean_test,
                    row.sem_test,
                    row.min_eigenvalue,
                    row.indefinite_runs,
                    row.runs
                );
            }
            report_written(&cfg.output_dir, &["unbunching.csv", "unbunching_results.json"]);
        }
    }
    Ok(())
}
