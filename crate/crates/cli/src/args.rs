use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "anaphora-eval", version, about = "Pronoun translation evaluation pipeline")]
pub struct Cli {
    /// key = value file supplying defaults for subcommand flags.
    #[arg(long, global = true, env = "ANAPHORA_EVAL_CONFIG")]
    pub config: Option<PathBuf>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize a text file, one line in, one line of space-separated tokens out.
    Tokenize(TokenizeArgs),
    /// Word-align two parallel text files and write Pharaoh links.
    Align(AlignArgs),
    /// Harvest ranking pairs from reference and system translations.
    Mine(MineArgs),
    /// Keep pairs whose pronoun pair passes the agreement filter.
    Filter(FilterArgs),
    /// Train a ranking model.
    Train(TrainArgs),
    /// Pairwise accuracy of a model on a pair file.
    Eval(EvalArgs),
    /// Score two candidate translations with a trained model.
    Score(ScoreArgs),
    /// Write the attention weights of one sentence as TSV.
    AttnExport(AttnExportArgs),
    /// Inter-annotator agreement over a judgments file.
    Agree(AgreeArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
    /// Summarize a test-suite directory.
    SuiteManifest(SuiteManifestArgs),
    /// Generate the synthetic template corpus as train/dev/test pair files.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Flat,
    DocBlocks,
}

#[derive(Debug, Args)]
pub struct TokenizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub lower: bool,
}

#[derive(Debug, Args)]
pub struct AlignerOpts {
    #[arg(long, default_value_t = 5)]
    pub model1_iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub diagonal_iterations: usize,
    /// Diagonal tension λ.
    #[arg(long, default_value_t = 4.0)]
    pub tension: f64,
    /// Null-word probability p0.
    #[arg(long, default_value_t = 0.08)]
    pub null_prob: f64,
    /// intersection, union or grow-diag-final-and.
    #[arg(long, default_value = "grow-diag-final-and")]
    pub heuristic: String,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub aligner: AlignerOpts,
    /// Also save the source-to-target translation table.
    #[arg(long)]
    pub save_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MineMode {
    /// One pair per mismatch against a single-substitution noisy candidate.
    Noisy,
    /// One pair per sentence against the system output.
    Sys,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub system: PathBuf,
    /// Pharaoh links, system-reference, one line per sentence. Computed when absent.
    #[arg(long)]
    pub alignment: Option<PathBuf>,
    /// Source-language text shown to annotators.
    #[arg(long)]
    pub source_text: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = MineMode::Noisy)]
    pub mode: MineMode,
    #[arg(long, value_enum, default_value_t = Format::DocBlocks)]
    pub format: Format,
    #[arg(long, default_value_t = 2)]
    pub context_k: usize,
    #[arg(long, default_value = "xx-en")]
    pub lang_pair: String,
    /// `form<TAB>category` file replacing the built-in English lexicon.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub error_dimensions: Option<PathBuf>,
    #[command(flatten)]
    pub aligner: AlignerOpts,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    /// Agreement table TSV.
    #[arg(long, conflicts_with = "judgments", required_unless_present = "judgments")]
    pub agreement: Option<PathBuf>,
    /// Judgments JSON lines; the table is computed from them and the pairs.
    #[arg(long)]
    pub judgments: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    pub tau: f64,
    /// Keep pairs whose pronoun pair is missing from the table.
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ContextArg {
    Nc,
    Rc,
    Crc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncoderArg {
    Bilstm,
    Embeddings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerArg {
    Attention,
    Average,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    pub output: PathBuf,
    /// Per-epoch JSON-lines log.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ContextArg::Nc)]
    pub context_mode: ContextArg,
    #[arg(long, value_enum, default_value_t = EncoderArg::Bilstm)]
    pub encoder: EncoderArg,
    #[arg(long, value_enum, default_value_t = ScorerArg::Attention)]
    pub scorer: ScorerArg,
    /// Shorthand for `--encoder embeddings --scorer average`.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long, default_value_t = 32)]
    pub d: usize,
    #[arg(long, default_value_t = 32)]
    pub h: usize,
    #[arg(long, default_value_t = 12)]
    pub max_slots: usize,
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
    /// Pre-trained vectors, `word v1 … vd` per line.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 5.0)]
    pub clip_norm: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Record wall-clock time in the log (makes logs differ between runs).
    #[arg(long)]
    pub wall_time: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub pairs: PathBuf,
    /// Full report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Accuracy per pronoun pair as TSV.
    #[arg(long)]
    pub breakdown: Option<PathBuf>,
    /// Training pairs, to flag pronoun pairs seen in training.
    #[arg(long)]
    pub train_pairs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub candidate_a: String,
    #[arg(long)]
    pub candidate_b: String,
    /// Preceding sentence shared by both candidates, oldest first; repeatable.
    #[arg(long)]
    pub context: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AttnExportArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, required_unless_present = "pairs", conflicts_with = "pairs")]
    pub sentence: Option<String>,
    /// Preceding sentence, oldest first; repeatable.
    #[arg(long)]
    pub context: Vec<String>,
    #[arg(long, requires = "item")]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub item: Option<String>,
    /// Which side of the pair: ref or sys.
    #[arg(long, default_value = "ref")]
    pub side: String,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AgreeArgs {
    #[arg(long)]
    pub judgments: PathBuf,
    /// Pair file of the campaign, for the per pronoun pair table.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Report as JSON.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Agreement table TSV (needs --pairs).
    #[arg(long, requires = "pairs")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory holding campaign definitions and journals.
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Create this campaign from --pairs and --campaign-config if it does not exist.
    #[arg(long, requires_all = ["pairs", "campaign_config"])]
    pub campaign: Option<String>,
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub campaign_config: Option<PathBuf>,
    /// Overrides the campaign config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SuiteManifestArgs {
    #[arg(long)]
    pub suite: PathBuf,
    /// Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 6000)]
    pub sentences: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}
