//! The `hierle` command-line tool.
//!
//! Exit codes: 0 on success, 2 for an invalid taxonomy document or invalid
//! usage, 1 for any other failure (including labels that do not match the
//! taxonomy). Diagnostics go to stderr.

use std::fmt::Write as _;
use std::fs;
use std::io::{self as stdio, Write};
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::classifier::{self, HingeOptions, LinearFit, Loss};
use crate::datagen::{self, SyntheticSpec};
use crate::dissimilarity::{default_delta, HsReport, WeightSchedule};
use crate::embedding::EmbeddedTree;
use crate::error::Error;
use crate::experiment::{self, MethodSummary, Protocol};
use crate::hierarchy::{Path, Tree};
use crate::io;
use crate::metrics::EvaluationReport;

#[derive(Debug, Parser)]
#[command(name = "hierle", version, about = "Hierarchical classification with an exact label embedding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed a taxonomy and certify the isometry.
    Embed(EmbedArgs),
    /// Fit a model on labelled data.
    Train(TrainArgs),
    /// Predict paths with a saved model.
    Predict(PredictArgs),
    /// Score predictions against true labels.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic dataset.
    Simulate(SimulateArgs),
    /// Repeat generate, train and evaluate over many replications.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Linear,
    Wlinear,
    Hinge,
}

impl From<LossArg> for Loss {
    fn from(l: LossArg) -> Loss {
        match l {
            LossArg::Linear => Loss::Linear,
            LossArg::Wlinear => Loss::WeightedLinear,
            LossArg::Hinge => Loss::Hinge,
        }
    }
}

#[derive(Debug, Args)]
pub struct EmbeddingArgs {
    /// Norm of the top-layer simplex.
    #[arg(long, default_value_t = 1.0)]
    pub t1: f64,
    /// Ratio between consecutive layer norms; defaults to √5.
    #[arg(long)]
    pub delta: Option<f64>,
}

impl EmbeddingArgs {
    fn delta(&self) -> f64 {
        self.delta.unwrap_or_else(default_delta)
    }
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Validation data for tuning; without it, tuning uses the second half
    /// of `--data` and fits on the first half.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LossArg::Linear)]
    pub loss: LossArg,
    #[arg(long, value_delimiter = ',')]
    pub gamma_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Fit without the constant feature.
    #[arg(long)]
    pub no_intercept: bool,
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    /// Where to write the model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Leave wall time out of the summary.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// `index,path` file from `predict`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Data CSV with a `label` column, or an `index,path` file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Simulation design, 1 or 2.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub example: u8,
    /// Layers of the first design, root included.
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    /// Feature dimension of the first design.
    #[arg(long, default_value_t = 15)]
    pub p: usize,
    /// Training block size; `4n` samples are drawn.
    #[arg(long)]
    pub n: Option<usize>,
    /// Fraction of relabelled samples; 0.2 for the first design, 0 for the second.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl DesignArgs {
    fn spec(&self) -> SyntheticSpec {
        let mut spec = if self.example == 1 {
            SyntheticSpec::example1(self.depth, self.p, 4 * self.n.unwrap_or(50), self.seed)
        } else {
            SyntheticSpec::example2(4 * self.n.unwrap_or(2000), self.seed)
        };
        if let Some(noise) = self.noise {
            spec.noise_rate = noise;
        }
        spec
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Directory receiving tree.txt, data.csv, train.csv, validation.csv and test.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Methods to run; defaults to all three for the first design and the
    /// closed-form pair for the second.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub loss: Option<Vec<LossArg>>,
    #[arg(long, value_delimiter = ',')]
    pub gamma_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Fit with the constant feature.
    #[arg(long)]
    pub intercept: bool,
    /// Run replications one after another.
    #[arg(long)]
    pub single_thread: bool,
    /// Leave wall time out of the results so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Error with its exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<stdio::Error> for Failure {
    fn from(e: stdio::Error) -> Self {
        Error::from(e).into()
    }
}

fn load_tree(path: &FsPath) -> Result<Tree, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })?;
    Tree::parse(&text).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })
}

fn with_path<T>(path: &FsPath, r: Result<T, Error>) -> Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

/// Writes to `out`, or to `stdout` when no path is given.
fn emit(out: Option<&PathBuf>, content: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| Failure {
            code: 1,
            message: format!("{}: {e}", path.display()),
        }),
        None => Ok(stdout.write_all(content.as_bytes())?),
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Embed(args) => embed(args, stdout),
        Command::Train(args) => train(args, stdout),
        Command::Predict(args) => predict(args, stdout),
        Command::Evaluate(args) => evaluate(args, stdout),
        Command::Simulate(args) => simulate(args, stdout),
        Command::Benchmark(args) => benchmark(args, stdout),
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = stdio::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = lock.flush();
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[derive(Serialize)]
struct EmbedJson<'a> {
    dim: usize,
    t1: f64,
    delta: f64,
    isometry_max_error: f64,
    hs: &'a HsReport,
    points: serde_json::Value,
}

fn embed(args: EmbedArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let tree = load_tree(&args.tree)?;
    let (t1, delta) = (args.embedding.t1, args.embedding.delta());
    let space = EmbeddedTree::new(tree, t1, delta)?;
    let (tree, table) = (space.tree(), space.table());
    let schedule = WeightSchedule::build(tree, t1, delta)?;
    let iso = table.verify_isometry(tree, &schedule)?;
    let hs = table.check_hs(tree);
    let content = match args.format {
        Format::Csv => {
            eprintln!(
                "dim {}  isometry max error {iso:.3e}  H.S. pairs {}  violations {}",
                table.dim(),
                hs.pairs_checked,
                hs.violations.len()
            );
            table.to_csv(tree)
        }
        Format::Json => {
            let points: serde_json::Value = serde_json::from_str(&table.to_json(tree)?).map_err(Error::from)?;
            let doc = EmbedJson {
                dim: table.dim(),
                t1,
                delta,
                isometry_max_error: iso,
                hs: &hs,
                points,
            };
            serde_json::to_string_pretty(&doc).map_err(Error::from)? + "\n"
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "nodes              {}", tree.q());
            let _ = writeln!(s, "leaves             {}", tree.n_leaf());
            let _ = writeln!(s, "dimension          {}", table.dim());
            let _ = writeln!(s, "isometry max error {iso:.3e}");
            let _ = writeln!(s, "H.S. pairs checked {}", hs.pairs_checked);
            let _ = writeln!(s, "H.S. violations    {}", hs.violations.len());
            s.push('\n');
            let width = tree.node_order().map(|n| tree.id(n).len()).max().unwrap_or(1).max(10);
            for n in tree.node_order() {
                let _ = write!(s, "{:<width$}", tree.id(n));
                for v in table.point(n).iter() {
                    let _ = write!(s, " {:>10.6}", if *v == 0.0 { 0.0 } else { *v });
                }
                s.push('\n');
            }
            s
        }
    };
    emit(args.out.as_ref(), &content, stdout)
}

fn grid_or_default(grid: Option<Vec<f64>>) -> Vec<f64> {
    grid.unwrap_or_else(experiment::default_grid)
}

fn train(args: TrainArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let tree = load_tree(&args.tree)?;
    let data = with_path(&args.data, io::read_dataset(&args.data, &tree))?;
    let space = EmbeddedTree::new(tree, args.embedding.t1, args.embedding.delta())?;
    let loss = Loss::from(args.loss);
    let intercept = !args.no_intercept;
    let start = Instant::now();
    let (model, validation_error) = if loss == Loss::Linear {
        let fit = LinearFit {
            lambda: 1.0,
            intercept,
        };
        (classifier::train_linear_with(&space, &data, &fit)?, None)
    } else {
        let (train, val) = match &args.validation {
            Some(path) => (data, with_path(path, io::read_dataset(path, space.tree()))?),
            None => {
                let half = data.n() / 2;
                if half == 0 {
                    return Err(Error::InvalidData(
                        "tuning needs at least two samples or a --validation file".into(),
                    )
                    .into());
                }
                (data.slice(0..half), data.slice(half..data.n()))
            }
        };
        let (model, err) = match loss {
            Loss::WeightedLinear => experiment::tune_weighted_linear(
                &space,
                &train,
                &val,
                &grid_or_default(args.gamma_grid),
                intercept,
            )?,
            _ => {
                let options = HingeOptions {
                    intercept,
                    ..HingeOptions::default()
                };
                experiment::tune_hinge(&space, &train, &val, &grid_or_default(args.lambda_grid), &options)?
            }
        };
        (model, Some(err))
    };
    let elapsed = start.elapsed().as_secs_f64();
    io::save_model(&args.model, &space, &model)?;

    let mut s = String::new();
    let _ = writeln!(s, "loss               {}", model.loss());
    let _ = writeln!(s, "intercept          {}", model.intercept());
    if let Some(g) = model.gamma() {
        let _ = writeln!(s, "gamma              {g}");
    }
    if loss == Loss::Hinge {
        if let Some(l) = model.lambda() {
            let _ = writeln!(s, "lambda             {l}");
        }
    }
    if let Some(e) = validation_error {
        let _ = writeln!(s, "validation l01     {e}");
    }
    if !args.no_timing {
        let _ = writeln!(s, "wall_time_seconds  {elapsed:.3}");
    }
    Ok(stdout.write_all(s.as_bytes())?)
}

fn predict(args: PredictArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let (space, model) = with_path(&args.model, io::load_model(&args.model))?;
    let file = fs::File::open(&args.data).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", args.data.display()),
    })?;
    let table = with_path(&args.data, io::read_table(file))?;
    let paths = model.predict_matrix(&space, &table.features)?;
    let mut buf = Vec::new();
    io::write_predictions(&mut buf, space.tree(), &paths)?;
    emit(args.out.as_ref(), &String::from_utf8(buf).expect("csv writes UTF-8"), stdout)
}

/// True paths from a data CSV (`label` column) or an `index,path` file.
fn read_truth(path: &FsPath, tree: &Tree) -> Result<Vec<Path>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })?;
    let header = text.lines().next().unwrap_or("");
    let paths = if header.trim() == "index,path" {
        io::read_predictions(text.as_bytes(), tree)
    } else {
        io::read_table(text.as_bytes()).and_then(|table| {
            let labels = table
                .labels
                .ok_or_else(|| Error::InvalidData("no `label` column".into()))?;
            labels
                .iter()
                .map(|l| Ok(tree.path_of_leaf(io::resolve_label(tree, l)?)?))
                .collect()
        })
    };
    with_path(path, paths)
}

fn evaluate(args: EvaluateArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let tree = load_tree(&args.tree)?;
    let file = fs::File::open(&args.predictions).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", args.predictions.display()),
    })?;
    let preds = with_path(&args.predictions, io::read_predictions(file, &tree))?;
    let truth = read_truth(&args.data, &tree)?;
    if preds.len() != truth.len() {
        return Err(Error::InvalidData(format!(
            "{} predictions but {} true labels",
            preds.len(),
            truth.len()
        ))
        .into());
    }
    let pairs: Vec<(Path, Path)> = truth.into_iter().zip(preds).collect();
    let report = EvaluationReport::compute(&pairs, &tree)?;
    let content = match args.format {
        Format::Json => serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n",
        Format::Csv => {
            let mut s = String::from("metric,value\n");
            for (name, value) in report.fields() {
                let _ = writeln!(s, "{name},{value}");
            }
            let _ = writeln!(s, "n_te,{}", report.n_te);
            s
        }
        Format::Text => report.to_string(),
    };
    emit(args.out.as_ref(), &content, stdout)
}

fn simulate(args: SimulateArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let spec = args.design.spec();
    let synthetic = spec.generate()?;
    let (train, val, test) = datagen::split_1_1_2(&synthetic.data)?;
    fs::create_dir_all(&args.out)?;
    let tree = &synthetic.tree;
    fs::write(args.out.join("tree.txt"), tree.to_document())?;
    for (name, data) in [
        ("data.csv", &synthetic.data),
        ("train.csv", &train),
        ("validation.csv", &val),
        ("test.csv", &test),
    ] {
        let file = stdio::BufWriter::new(fs::File::create(args.out.join(name))?);
        io::write_dataset(file, tree, data)?;
    }
    writeln!(
        stdout,
        "wrote {} samples ({} train, {} validation, {} test) with {} relabelled to {}",
        synthetic.data.n(),
        train.n(),
        val.n(),
        test.n(),
        synthetic.relabeled.len(),
        args.out.display()
    )?;
    Ok(())
}

fn summary_csv(rows: &[MethodSummary]) -> String {
    let mut s = String::from(
        "loss,reps,l01_mean,l01_se,l_delta_mean,l_delta_se,l_h_sib_mean,l_h_sib_se,l_h_sub_mean,l_h_sub_se,hF_mean,hF_se,time_mean,time_se\n",
    );
    for r in rows {
        let _ = write!(s, "{},{}", r.loss, r.reps);
        for e in [r.l01, r.l_delta, r.l_h_sib, r.l_h_sub, r.hf] {
            let _ = write!(s, ",{},{}", e.mean, e.se);
        }
        match r.wall_time_seconds {
            Some(t) => {
                let _ = writeln!(s, ",{},{}", t.mean, t.se);
            }
            None => s.push_str(",,\n"),
        }
    }
    s
}

fn summary_text(rows: &[MethodSummary]) -> String {
    let mut s = format!(
        "{:<16} {:>16} {:>16} {:>16} {:>16} {:>16} {:>10}\n",
        "method", "l01", "l_delta", "l_h_sib", "l_h_sub", "hF", "time"
    );
    for r in rows {
        let _ = write!(s, "{:<16}", r.loss.as_str());
        for e in [r.l01, r.l_delta, r.l_h_sib, r.l_h_sub, r.hf] {
            let _ = write!(s, " {:>16}", format!("{:.3} ± {:.3}", e.mean, e.se));
        }
        match r.wall_time_seconds {
            Some(t) => {
                let _ = writeln!(s, " {:>10.4}", t.mean);
            }
            None => {
                let _ = writeln!(s, " {:>10}", "-");
            }
        }
    }
    s
}

fn benchmark(args: BenchmarkArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let base = args.design.spec();
    let losses: Vec<Loss> = match &args.loss {
        Some(list) => list.iter().map(|&l| l.into()).collect(),
        None if args.design.example == 1 => vec![Loss::Linear, Loss::WeightedLinear, Loss::Hinge],
        None => vec![Loss::Linear, Loss::WeightedLinear],
    };
    if args.reps == 0 {
        return Err(Error::InvalidParameter("--reps must be at least 1".into()).into());
    }
    let protocol = Protocol {
        losses: losses.clone(),
        gamma_grid: grid_or_default(args.gamma_grid),
        lambda_grid: grid_or_default(args.lambda_grid),
        intercept: args.intercept,
        timing: !args.no_timing,
        ..Protocol::simulation()
    };
    let results = experiment::run_replications(&base, args.design.seed, args.reps, &protocol, !args.single_thread)?;
    let rows = experiment::summarize(&losses, &results);
    let content = match args.format {
        Format::Csv => summary_csv(&rows),
        Format::Json => serde_json::to_string_pretty(&rows).map_err(Error::from)? + "\n",
        Format::Text => summary_text(&rows),
    };
    emit(args.out.as_ref(), &content, stdout)
}
