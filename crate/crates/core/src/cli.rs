//! Command-line front end. Data goes to stdout or `--output`; diagnostics
//! go to stderr.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use crate::data::{load_csv, CsvOptions, DataMatrix, TiesMode, TiesPolicy};
use crate::error::{Error, Result};
use crate::evaluation::{self, BenchConfig, BenchRow, Method, RuntimeProfile, DEFAULT_KNN_GRID};
use crate::neighborhood::NeighborhoodParams;
use crate::projection::{CdVariant, ConstantColumns, FitOptions};
use crate::scoring::{locout_scores, ScoreConfig};
use crate::simgen::{generate, GroupDistribution, LabeledDataset, SimulationConfig};

#[derive(Debug, Parser)]
#[command(
    name = "locout",
    version,
    about = "Local-projection outlier scores for high-dimensional data"
)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "LOCOUT_THREADS")]
    pub threads: Option<usize>,

    /// More diagnostics on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Only report errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every row of a CSV file.
    Score(ScoreArgs),
    /// Generate a labeled synthetic dataset.
    Simulate(SimulateArgs),
    /// AUC of a score file against labels.
    Evaluate(EvaluateArgs),
    /// Simulation benchmark of LocOut and the KNN baseline.
    Bench(BenchArgs),
    /// Per-stage runtime of one LocOut run.
    Profile(ProfileArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CdVariantArg {
    Literal,
    Mahalanobis,
}

impl From<CdVariantArg> for CdVariant {
    fn from(v: CdVariantArg) -> Self {
        match v {
            CdVariantArg::Literal => CdVariant::Literal,
            CdVariantArg::Mahalanobis => CdVariant::Mahalanobis,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TiesArg {
    Error,
    Jitter,
    DropDuplicates,
}

impl From<TiesArg> for TiesMode {
    fn from(v: TiesArg) -> Self {
        match v {
            TiesArg::Error => TiesMode::Error,
            TiesArg::Jitter => TiesMode::Jitter,
            TiesArg::DropDuplicates => TiesMode::DropDuplicates,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SetupArg {
    Normal,
    Lognormal,
}

impl From<SetupArg> for GroupDistribution {
    fn from(v: SetupArg) -> Self {
        match v {
            SetupArg::Normal => GroupDistribution::Normal,
            SetupArg::Lognormal => GroupDistribution::LogNormal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Locout,
    Knn,
}

impl From<MethodArg> for Method {
    fn from(v: MethodArg) -> Self {
        match v {
            MethodArg::Locout => Method::LocOut,
            MethodArg::Knn => Method::Knn,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Number of nearest neighbors.
    #[arg(long, default_value_t = 20)]
    pub k: usize,

    /// Trimming proportion in (0, 1]; the core holds ceil(alpha * k) neighbors.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,

    #[arg(long, value_enum, default_value = "literal")]
    pub cd_variant: CdVariantArg,

    /// Use unit scale for columns that are constant within a core instead of failing.
    #[arg(long)]
    pub unscaled_constant: bool,
}

impl ModelArgs {
    fn config(&self) -> Result<ScoreConfig> {
        let params = NeighborhoodParams::new(self.k, self.alpha)?;
        let fit = FitOptions {
            constant_columns: if self.unscaled_constant {
                ConstantColumns::Unscaled
            } else {
                ConstantColumns::Error
            },
            ..FitOptions::default()
        };
        Ok(ScoreConfig::new(params)
            .with_variant(self.cd_variant.into())
            .with_fit(fit))
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input CSV file (rows are observations).
    #[arg(long)]
    pub input: PathBuf,

    /// The first line is a header.
    #[arg(long)]
    pub header: bool,

    /// Column holding 0/1 labels; removed from the data.
    #[arg(long)]
    pub label_column: Option<String>,

    /// Further columns to ignore.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,

    /// Handling of duplicate rows.
    #[arg(long, value_enum, default_value = "error")]
    pub ties: TiesArg,
}

impl InputArgs {
    fn load(&self) -> Result<(DataMatrix, Option<Vec<u8>>)> {
        let opts = CsvOptions {
            has_header: self.header,
            label_column: self.label_column.clone(),
            exclude: self.exclude.clone(),
        };
        let (x, labels) = load_csv(&self.input, &opts)?;
        let validated = x.validate(&TiesPolicy::new(self.ties.into()))?;
        for w in &validated.warnings {
            warn!("{w}");
        }
        let labels = match (labels, validated.matrix.row_ids()) {
            // rows may have been dropped: keep labels aligned
            (Some(l), Some(ids)) => Some(
                ids.iter()
                    .map(|id| l[id.parse::<usize>().unwrap()])
                    .collect(),
            ),
            (l, _) => l,
        };
        Ok((validated.matrix, labels))
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Output CSV (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Group sizes.
    #[arg(long, value_delimiter = ',', default_value = "150,150,100")]
    pub groups: Vec<usize>,

    /// Informative variables.
    #[arg(long, default_value_t = 50)]
    pub p_inf: usize,

    /// Fraction of each group replaced by scatter outliers.
    #[arg(long, default_value_t = 0.05)]
    pub outlier_fraction: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "normal")]
    pub setup: SetupArg,

    /// Noise variables.
    #[arg(long, default_value_t = 0)]
    pub noise: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub sim: SimArgs,

    /// Output CSV (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Score CSV with a header.
    #[arg(long)]
    pub scores: PathBuf,

    /// Score column in the score file.
    #[arg(long, default_value = "locout")]
    pub score_column: String,

    /// Labels as PATH:COLUMN of a CSV file with a header.
    #[arg(long)]
    pub labels: String,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "normal")]
    pub setups: Vec<SetupArg>,

    /// Noise dimensions of the grid.
    #[arg(long, value_delimiter = ',', default_value = "0,350,1000")]
    pub noise: Vec<usize>,

    /// Repetitions per grid point.
    #[arg(long, default_value_t = 10)]
    pub reps: usize,

    #[command(flatten)]
    pub sim: SimArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, value_enum, value_delimiter = ',', default_value = "locout,knn")]
    pub methods: Vec<MethodArg>,

    /// Neighborhood sizes swept for the KNN baseline.
    #[arg(long, value_delimiter = ',')]
    pub knn_k: Option<Vec<usize>>,

    /// Master seed; repetition r uses the same derived seed at every grid point.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output CSV (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    /// Profile on this CSV instead of simulated data.
    #[arg(long)]
    pub input: Option<PathBuf>,

    #[arg(long, requires = "input")]
    pub header: bool,

    /// Observations of the simulated instance.
    #[arg(long, default_value_t = 200)]
    pub n: usize,

    /// Variables of the simulated instance.
    #[arg(long, default_value_t = 1000)]
    pub p: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Runs per instance; the median run is reported.
    #[arg(long, default_value_t = 3)]
    pub runs: usize,

    #[arg(long, default_value_t = 40)]
    pub k: usize,

    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,

    #[arg(long, value_enum, default_value = "literal")]
    pub cd_variant: CdVariantArg,

    /// Output CSV (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        (false, _) => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();

    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            warn!("could not configure {threads} threads: {e}");
        }
    }

    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Score(a) => cmd_score(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Profile(a) => cmd_profile(a),
    }
}

pub fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let config = args.model.config()?;
    let (x, _) = args.input.load()?;
    let report = locout_scores(&x, &config)?;
    for w in &report.warnings {
        warn!("{w}");
    }
    if !report.weights_degenerate.is_empty() {
        log::info!(
            "uniform weight fallback for {} observation(s)",
            report.weights_degenerate.len()
        );
    }
    let mut out = open_output(args.output.as_deref())?;
    write_scores(&mut out, &x, &report.locout).map_err(|e| io_error(args.output.as_deref(), e))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let config = SimulationConfig {
        group_sizes: args.sim.groups.clone(),
        p_inf: args.sim.p_inf,
        p_noise: args.noise,
        outlier_fraction: args.sim.outlier_fraction,
        distribution: args.setup.into(),
        seed: args.seed,
        ..SimulationConfig::default()
    };
    let data = generate(&config)?;
    for w in &data.warnings {
        warn!("{w}");
    }
    eprintln!("{}", data.provenance());
    let mut out = open_output(args.output.as_deref())?;
    write_dataset(&mut out, &data).map_err(|e| io_error(args.output.as_deref(), e))
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let (path, column) = args.labels.rsplit_once(':').ok_or_else(|| {
        Error::param(
            "labels",
            format!(
                "expected PATH:COLUMN (e.g. data.csv:label), got {:?}",
                args.labels
            ),
        )
    })?;
    let labels = read_column(Path::new(path), column)?;
    let labels = labels
        .into_iter()
        .map(|value| match value {
            0.0 => Ok(0u8),
            1.0 => Ok(1u8),
            value => Err(Error::InvalidLabel { value }),
        })
        .collect::<Result<Vec<_>>>()?;
    let scores = read_column(&args.scores, &args.score_column)?;
    let result = evaluation::auc(&scores, &labels)?;
    println!("{}", result.auc);
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let score = args.model.config()?;
    let mut grid = Vec::new();
    for &setup in &args.setups {
        for &p_noise in &args.noise {
            grid.push(SimulationConfig {
                group_sizes: args.sim.groups.clone(),
                p_inf: args.sim.p_inf,
                p_noise,
                outlier_fraction: args.sim.outlier_fraction,
                distribution: setup.into(),
                ..SimulationConfig::default()
            });
        }
    }
    let mut methods: Vec<Method> = args.methods.iter().map(|&m| m.into()).collect();
    methods.dedup();
    let config = BenchConfig {
        grid,
        score,
        methods,
        repetitions: args.reps,
        knn_grid: args
            .knn_k
            .clone()
            .unwrap_or_else(|| DEFAULT_KNN_GRID.to_vec()),
        master_seed: args.seed,
    };
    let rows = evaluation::run_benchmark(&config)?;
    let mut out = open_output(args.output.as_deref())?;
    write_bench(&mut out, &rows).map_err(|e| io_error(args.output.as_deref(), e))
}

pub fn cmd_profile(args: &ProfileArgs) -> Result<()> {
    let params = NeighborhoodParams::new(args.k, args.alpha)?;
    let config = ScoreConfig::new(params).with_variant(args.cd_variant.into());
    let x = match &args.input {
        Some(path) => {
            let opts = CsvOptions {
                has_header: args.header,
                ..CsvOptions::default()
            };
            load_csv(path, &opts)?
                .0
                .validate(&TiesPolicy::default())?
                .matrix
        }
        None => profile_instance(args.n, args.p, args.seed)?,
    };
    let prof = evaluation::profile_median(&x, &config, args.runs)?;
    let mut out = open_output(args.output.as_deref())?;
    write_profile(&mut out, &prof, args.alpha).map_err(|e| io_error(args.output.as_deref(), e))
}

/// Simulated instance of `n` observations and `p` variables: three groups,
/// up to 50 informative variables and the rest noise.
pub fn profile_instance(n: usize, p: usize, seed: u64) -> Result<DataMatrix> {
    if n < 3 || p < 1 {
        return Err(Error::param("n/p", "need n >= 3 and p >= 1"));
    }
    let a = (3 * n / 8).max(1);
    let p_inf = p.min(50);
    let config = SimulationConfig {
        group_sizes: vec![a, a, n - 2 * a],
        p_inf,
        p_noise: p - p_inf,
        seed,
        ..SimulationConfig::default()
    };
    Ok(generate(&config)?.x)
}

/// Full-precision float: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).map_err(|e| io_error(Some(p), e))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn io_error(path: Option<&Path>, source: io::Error) -> Error {
    Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    }
}

pub fn write_scores<W: Write>(out: W, x: &DataMatrix, scores: &[f64]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row_id", "locout"])?;
    for (i, s) in scores.iter().enumerate() {
        w.write_record([x.row_id(i), fmt_f64(*s)])?;
    }
    w.flush()
}

pub fn write_dataset<W: Write>(out: W, data: &LabeledDataset) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let p = data.x.ncols();
    let mut header: Vec<String> = (0..p).map(|j| data.x.col_id(j)).collect();
    header.push("label".into());
    header.push("group".into());
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(p + 2);
    for i in 0..data.x.nrows() {
        record.clear();
        record.extend(data.x.values().row(i).iter().map(|&v| fmt_f64(v)));
        record.push(data.labels[i].to_string());
        record.push(data.group_ids[i].to_string());
        w.write_record(&record)?;
    }
    w.flush()
}

pub fn write_bench<W: Write>(out: W, rows: &[BenchRow]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BenchRow::HEADER)?;
    for r in rows {
        w.write_record([
            r.setup.to_string(),
            r.distribution.to_string(),
            r.p_inf.to_string(),
            r.p_noise.to_string(),
            r.method.name().to_string(),
            r.repetition.to_string(),
            r.seed.to_string(),
            fmt_f64(r.auc),
            format!("{:.6}", r.runtime_s),
        ])?;
    }
    w.flush()
}

pub fn write_profile<W: Write>(out: W, prof: &RuntimeProfile, alpha: f64) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["n", "p", "k", "alpha"];
    let stage_cols = [
        "t_distances",
        "t_core_selection",
        "t_svd",
        "t_cd",
        "t_od",
        "t_weights",
    ];
    header.extend(stage_cols);
    header.push("t_total");
    w.write_record(&header)?;
    let mut record = vec![
        prof.n.to_string(),
        prof.p.to_string(),
        prof.k.to_string(),
        alpha.to_string(),
    ];
    record.extend(prof.stages().iter().map(|(_, t)| format!("{t:.6}")));
    record.push(format!("{:.6}", prof.t_total));
    w.write_record(&record)?;
    w.flush()
}

/// Reads one named numeric column from a CSV file with a header.
fn read_column(path: &Path, column: &str) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: column.to_owned(),
        })?;
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let cell = rec.get(idx).unwrap_or_default();
        values.push(cell.parse::<f64>().map_err(|_| Error::NonNumeric {
            path: path.to_path_buf(),
            row: line,
            column: idx + 1,
            value: cell.to_owned(),
        })?);
    }
    if values.is_empty() {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }
    Ok(values)
}
