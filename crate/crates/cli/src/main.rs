mod commands;
mod data;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use zadr_core::ZadrError;

#[derive(Debug, Parser)]
#[command(name = "zadr", version, about = "Zero-adjusted Dirichlet regression for compositional data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Simple,
    Mixed,
    AitchisonOls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZeroModeArg {
    AsWritten,
    Renormalized,
}

impl From<ZeroModeArg> for zadr_core::SubcompositionMode {
    fn from(m: ZeroModeArg) -> Self {
        match m {
            ZeroModeArg::AsWritten => zadr_core::SubcompositionMode::AsWritten,
            ZeroModeArg::Renormalized => zadr_core::SubcompositionMode::Renormalized,
        }
    }
}

/// Column selection shared by the data-reading subcommands.
#[derive(Debug, Clone, clap::Args)]
pub struct Columns {
    /// Composition columns; defaults to every column whose header starts with `y:`.
    #[arg(long, value_delimiter = ',')]
    pub components: Option<Vec<String>>,
    /// Covariate columns; defaults to every other numeric column.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Rows whose sum is within this of 1 are rescaled.
    #[arg(long, default_value_t = zadr_core::compositions::DEFAULT_SUM_TOLERANCE)]
    pub tolerance: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model and write it with its zero-free initial companion.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        columns: Columns,
        #[arg(long, value_enum, default_value = "simple")]
        kind: KindArg,
        /// Reference component name; defaults to the first component.
        #[arg(long = "ref")]
        reference: Option<String>,
        #[arg(long, value_enum, default_value = "renormalized")]
        zero_mode: ZeroModeArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Fitted compositions for new covariate rows.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zero-effect diagnostic with a parametric-bootstrap p-value.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Bootstrap replicates (at least 19).
        #[arg(long = "B", alias = "replicates", default_value_t = 999)]
        replicates: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also report the bootstrap bias of the estimates.
        #[arg(long)]
        bias: bool,
        /// Diagnostic document; defaults to `<model stem>.diagnostic.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = zadr_core::compositions::DEFAULT_SUM_TOLERANCE)]
        tolerance: f64,
    },
    /// Monte-Carlo MSE of the estimators at several sample sizes.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "60,120,240,360,480,600")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 1.0 / 6.0)]
        zero_fraction: f64,
        /// Components that may be zero; defaults to every non-reference one.
        #[arg(long, value_delimiter = ',')]
        zero_components: Option<Vec<String>>,
        /// CSV whose covariate rows are resampled; defaults to log(1..30)
        /// for single-covariate models.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "mse.csv")]
        out: PathBuf,
    },
    /// Bar-plot or ternary coordinates, optionally rendered as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        columns: Columns,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        ternary: bool,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Covariate that orders the rows; defaults to the first covariate.
        #[arg(long)]
        order_by: Option<String>,
        /// Plot-data CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Returned when a fit finished without converging; output is still written.
#[derive(Debug)]
pub struct NotConverged(pub String);

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for NotConverged {}

/// 1 for I/O, 2 for validation and schema problems, 3 for non-convergence.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<NotConverged>().is_some() {
        return 3;
    }
    for cause in err.chain() {
        if let Some(z) = cause.downcast_ref::<ZadrError>() {
            return if matches!(z, ZadrError::Io(_)) { 1 } else { 2 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
    }
    2
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("ZADR_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| ZadrError::InvalidArgument(format!("ZADR_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(ZadrError::InvalidArgument("ZADR_THREADS must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Fit { input, columns, kind, reference, zero_mode, seed, out } => {
            commands::fit(&input, &columns, kind, reference.as_deref(), zero_mode, seed, &out)
        }
        Command::Predict { model, input, out } => commands::predict(&model, &input, out.as_deref()),
        Command::Diagnose { input, model, replicates, seed, bias, out, tolerance } => {
            commands::diagnose(&input, &model, replicates, seed, bias, out.as_deref(), tolerance)
        }
        Command::Simulate { model, sizes, reps, zero_fraction, zero_components, input, seed, out } => {
            commands::simulate(&model, sizes, reps, zero_fraction, zero_components, input.as_deref(), seed, &out)
        }
        Command::Plot { input, columns, model, ternary, svg, order_by, out } => plot::plot(
            &input,
            &columns,
            model.as_deref(),
            ternary,
            svg.as_deref(),
            order_by.as_deref(),
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
