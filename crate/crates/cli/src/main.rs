//! `rxnjudge`: command-line front end for the reaction practicality judge.
//!
//! Exit codes: 0 success, 2 I/O or missing-data errors, 3 configuration
//! errors, 1 anything else. Errors print one machine-parsable line to stderr.

mod commands;
mod fileconfig;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rxnjudge_core::datasets::LabelMode;

#[derive(Debug)]
pub enum CliError {
    /// File access problems and empty inputs (exit 2).
    Io(String),
    /// Bad configuration: unknown keys, bad types, bad flags (exit 3).
    Config(String),
    /// Everything else: malformed data, training failures (exit 1).
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 2,
            CliError::Config(_) => 3,
            CliError::Run(_) => 1,
        }
    }

    fn render(&self) -> String {
        match self {
            CliError::Io(m) => format!("error: io: {m}"),
            CliError::Config(m) => format!("error: config: {m}"),
            CliError::Run(m) => format!("error: run: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<rxnjudge_core::datasets::DatasetError> for CliError {
    fn from(e: rxnjudge_core::datasets::DatasetError) -> Self {
        match e {
            rxnjudge_core::datasets::DatasetError::Io(inner) => CliError::Io(inner.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<rxnjudge_core::dlg::DlgError> for CliError {
    fn from(e: rxnjudge_core::dlg::DlgError) -> Self {
        match e {
            // An empty corpus is a missing-input problem, same tier as I/O.
            rxnjudge_core::dlg::DlgError::EmptyCorpus => CliError::Io(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<rxnjudge_core::smiles::SmilesError> for CliError {
    fn from(e: rxnjudge_core::smiles::SmilesError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<rxnjudge_core::neural::NeuralError> for CliError {
    fn from(e: rxnjudge_core::neural::NeuralError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<rxnjudge_core::neural::PipelineError> for CliError {
    fn from(e: rxnjudge_core::neural::PipelineError) -> Self {
        match e {
            rxnjudge_core::neural::PipelineError::Dlg(inner) => inner.into(),
            rxnjudge_core::neural::PipelineError::Neural(inner) => inner.into(),
        }
    }
}

impl From<rxnjudge_core::neural::CheckpointError> for CliError {
    fn from(e: rxnjudge_core::neural::CheckpointError) -> Self {
        match e {
            rxnjudge_core::neural::CheckpointError::Io(inner) => CliError::Io(inner.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<rxnjudge_core::evaluation::EvalError> for CliError {
    fn from(e: rxnjudge_core::evaluation::EvalError) -> Self {
        CliError::Run(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LabelModeArg {
    /// Lines carry `0`/`1` + TAB before the reaction.
    Labeled,
    /// Bare reaction lines, all positive.
    Positive,
    /// Bare reaction lines, all negative.
    Negative,
}

impl From<LabelModeArg> for LabelMode {
    fn from(a: LabelModeArg) -> LabelMode {
        match a {
            LabelModeArg::Labeled => LabelMode::Labeled,
            LabelModeArg::Positive => LabelMode::FixedPositive,
            LabelModeArg::Negative => LabelMode::FixedNegative,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GridArg {
    /// Four feature cells: full / no edit tags / no segmentation / neither.
    Ablation,
    /// Ten cells mixing 10%..100% of the pool into the training set.
    Incremental,
    /// Both grids.
    Both,
}

#[derive(Parser)]
#[command(
    name = "rxnjudge",
    version,
    about = "Judge the practicality of written chemical reactions from their text alone"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, normalize, deduplicate and split a reaction corpus
    Prepare {
        /// Input corpus, one reaction per line
        #[arg(long)]
        input: PathBuf,
        /// Directory for train.tsv, dev.tsv, test.tsv and manifest.kv
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed
        #[arg(long)]
        seed: Option<u64>,
        /// How input lines carry labels
        #[arg(long, value_enum)]
        label_mode: Option<LabelModeArg>,
    },
    /// Build or apply a word lexicon
    Lexicon {
        #[command(subcommand)]
        action: LexiconCmd,
    },
    /// Generate rule-based negative reactions filtered by the known positives
    GenNegatives {
        /// Corpus whose positive records seed the generation
        #[arg(long)]
        input: PathBuf,
        /// Output file of `0<TAB>reaction` lines
        #[arg(long)]
        out: PathBuf,
        /// Extra token rewrite rules, one `LHS<TAB>RHS` per line
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Lexicon used by the reactant-swap rule's first-segment pool
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Maximum number of negatives to keep
        #[arg(long)]
        cap: Option<usize>,
        /// Shuffles the emitted records
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        label_mode: Option<LabelModeArg>,
    },
    /// Print the aligned source/tags/target view of a reaction's edit script
    Rsd {
        /// Reaction string `reactants>reagents>products`
        #[arg(long)]
        reaction: String,
    },
    /// Train a model and write a checkpoint (plus a sibling lexicon file)
    Train {
        /// Labeled training split
        #[arg(long)]
        train: PathBuf,
        /// Labeled dev split supervising best-epoch selection
        #[arg(long)]
        dev: Option<PathBuf>,
        /// Checkpoint output path
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Reuse an existing lexicon instead of rebuilding from the train split
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Judge one reaction with a trained checkpoint
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Reaction string `reactants>reagents>products`
        #[arg(long)]
        reaction: String,
        /// Overrides the checkpoint threshold
        #[arg(long)]
        threshold: Option<f64>,
        /// Overrides the checkpoint's recorded lexicon
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Score a labeled corpus and print metrics
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Labeled input corpus
        #[arg(long)]
        input: PathBuf,
        /// Overrides the checkpoint threshold
        #[arg(long)]
        threshold: Option<f64>,
        /// Also print the 10-threshold sweep table
        #[arg(long)]
        sweep: bool,
        /// Write ROC points as TSV to this path
        #[arg(long)]
        roc_out: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Train and evaluate an experiment grid, one report directory per cell
    Experiment {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long)]
        test: PathBuf,
        /// Pool consumed by the incremental cells
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "experiment")]
        name: String,
        #[arg(long, value_enum, default_value = "ablation")]
        grid: GridArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum LexiconCmd {
    /// Induce a lexicon from the training split and write it as TSV
    Build {
        /// Labeled training split (never the test split)
        #[arg(long)]
        input: PathBuf,
        /// Output TSV, one `word<TAB>goodness` per line
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        label_mode: Option<LabelModeArg>,
    },
    /// Segment reactions or molecules with an existing lexicon
    Apply {
        #[arg(long)]
        lexicon: PathBuf,
        /// Single reaction or molecule to segment
        #[arg(long)]
        reaction: Option<String>,
        /// File of lines to segment
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Prepare {
            input,
            out_dir,
            config,
            seed,
            label_mode,
        } => commands::prepare(&input, &out_dir, config.as_deref(), seed, label_mode),
        Command::Lexicon { action } => match action {
            LexiconCmd::Build {
                input,
                out,
                config,
                label_mode,
            } => commands::lexicon_build(&input, &out, config.as_deref(), label_mode),
            LexiconCmd::Apply {
                lexicon,
                reaction,
                input,
            } => commands::lexicon_apply(&lexicon, reaction.as_deref(), input.as_deref()),
        },
        Command::GenNegatives {
            input,
            out,
            rules,
            lexicon,
            cap,
            seed,
            config,
            label_mode,
        } => commands::gen_negatives(
            &input,
            &out,
            rules.as_deref(),
            lexicon.as_deref(),
            cap,
            seed,
            config.as_deref(),
            label_mode,
        ),
        Command::Rsd { reaction } => commands::rsd_view(&reaction),
        Command::Train {
            train,
            dev,
            out,
            config,
            lexicon,
            seed,
        } => commands::train(
            &train,
            dev.as_deref(),
            &out,
            config.as_deref(),
            lexicon.as_deref(),
            seed,
        ),
        Command::Predict {
            checkpoint,
            reaction,
            threshold,
            lexicon,
        } => commands::predict(&checkpoint, &reaction, threshold, lexicon.as_deref()),
        Command::Evaluate {
            checkpoint,
            input,
            threshold,
            sweep,
            roc_out,
            lexicon,
        } => commands::evaluate(
            &checkpoint,
            &input,
            threshold,
            sweep,
            roc_out.as_deref(),
            lexicon.as_deref(),
        ),
        Command::Experiment {
            train,
            dev,
            test,
            pool,
            out_dir,
            name,
            grid,
            config,
            seed,
        } => commands::experiment(
            &train,
            dev.as_deref(),
            &test,
            pool.as_deref(),
            &out_dir,
            &name,
            grid,
            config.as_deref(),
            seed,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.render());
            ExitCode::from(err.exit_code())
        }
    }
}
