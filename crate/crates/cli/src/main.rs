use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lpdim_core::{LpExponent, PreprocessMode, DEFAULT_K};

mod compare;
mod dims;
mod error;
mod knn_eval;
mod output;
mod synthetic;

use error::CliError;

/// Experiments on lp dissimilarities: distance concentration, intrinsic
/// dimension and kNN quality comparisons.
#[derive(Debug, Parser)]
#[command(name = "lpdim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a uniform unit-cube sample as CSV.
    Gen(GenArgs),
    /// RC and CV of all pairwise distances over dimensions and exponents.
    Concentration(ConcentrationArgs),
    /// Fraction of repetitions where the l1 relative contrast beats l2.
    Table1(Table1Args),
    /// Intrinsic dimension estimates for every dataset of a manifest.
    Dims(DimsArgs),
    /// Leave-one-out kNN quality for every dataset, preprocessing and exponent.
    KnnEval(KnnEvalArgs),
    /// Frequency, Friedman/Nemenyi and Wilcoxon reports from kNN results.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Desk,
    Paper,
}

/// `--preprocess` values: a single mode or all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelection {
    One(PreprocessMode),
    All,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<PreprocessMode> {
        match self {
            Self::One(m) => vec![m],
            Self::All => PreprocessMode::ALL.to_vec(),
        }
    }
}

fn parse_modes(s: &str) -> Result<ModeSelection, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        Ok(ModeSelection::All)
    } else {
        s.parse()
            .map(ModeSelection::One)
            .map_err(|e| format!("{e}"))
    }
}

/// Comma-separated exponents, e.g. `0.5,1,2,inf`.
#[derive(Debug, Clone)]
pub struct ExponentList(Vec<LpExponent>);

impl ExponentList {
    fn or_canonical(list: Option<Self>) -> Vec<LpExponent> {
        list.map_or_else(|| LpExponent::CANONICAL.to_vec(), |l| l.0)
    }
}

fn parse_ps(s: &str) -> Result<ExponentList, String> {
    let ps = LpExponent::parse_list(s).map_err(|e| e.to_string())?;
    if ps.is_empty() {
        return Err("empty exponent list".into());
    }
    Ok(ExponentList(ps))
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Number of coordinates.
    #[arg(long, default_value_t = 10)]
    dim: usize,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConcentrationArgs {
    #[arg(long)]
    seed: u64,
    /// Sample size (default 1000 at desk scale, 10000 at paper scale).
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated dimensions (default 1,2,3,4,5,10,15,...,200).
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_ps)]
    ps: Option<ExponentList>,
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    scale: Scale,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Table1Args {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = synthetic::TABLE1_DIMS)]
    dims: Vec<usize>,
    /// Comma-separated numbers of points per repetition.
    #[arg(long, value_delimiter = ',', default_values_t = synthetic::TABLE1_POINTS)]
    k_points: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DimsArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output CSV; the correlation analysis goes next to it as `.analysis.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "empty", value_parser = parse_single_mode)]
    preprocess: PreprocessMode,
}

fn parse_single_mode(s: &str) -> Result<PreprocessMode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Debug, Args)]
struct KnnEvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Results JSON; existing cells are kept and skipped.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, value_parser = parse_ps)]
    ps: Option<ExponentList>,
    #[arg(long, default_value = "all", value_parser = parse_modes)]
    preprocess: ModeSelection,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Results JSON written by `knn-eval`.
    #[arg(long)]
    input: PathBuf,
    /// Markdown report; the JSON report goes next to it with a `.json` extension.
    #[arg(long)]
    out: PathBuf,
    /// Neighbourhood size used for the results (TNNSC sample size is k·n).
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, value_parser = parse_ps)]
    ps: Option<ExponentList>,
}

/// Number of items (datasets) that failed while the rest completed.
pub type Failures = usize;

fn run(cli: Cli) -> Result<Failures, CliError> {
    match cli.command {
        Command::Gen(a) => synthetic::gen(a.seed, a.n, a.dim, a.out.as_deref()).map(|()| 0),
        Command::Concentration(a) => {
            let (n, dims) = synthetic::concentration_defaults(a.scale);
            synthetic::concentration(
                a.n.unwrap_or(n),
                &a.dims.unwrap_or(dims),
                &ExponentList::or_canonical(a.ps),
                a.seed,
                a.out.as_deref(),
            )
            .map(|()| 0)
        }
        Command::Table1(a) => {
            synthetic::table1(&a.dims, &a.k_points, a.reps, a.seed, a.out.as_deref()).map(|()| 0)
        }
        Command::Dims(a) => dims::run(&a.manifest, &a.out, a.preprocess),
        Command::KnnEval(a) => knn_eval::run(
            &a.manifest,
            &a.out,
            a.k,
            &ExponentList::or_canonical(a.ps),
            &a.preprocess.modes(),
        ),
        Command::Compare(a) => {
            compare::run(&a.input, &a.out, a.k, &ExponentList::or_canonical(a.ps)).map(|()| 0)
        }
    }
}

fn exit_code(outcome: &Result<Failures, CliError>) -> u8 {
    match outcome {
        Ok(0) => 0,
        Ok(_) => 2,
        Err(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let outcome = run(cli);
    match &outcome {
        Ok(0) => {}
        Ok(failed) => eprintln!("lpdim: {failed} item(s) failed"),
        Err(e) => eprintln!("lpdim: {e}"),
    }
    ExitCode::from(exit_code(&outcome))
}

#[cfg(test)]
mod tests;
