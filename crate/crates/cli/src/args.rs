use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use morcela::data::SdConvention;
use morcela::LinkingKind;

use crate::config::{RunConfig, SmoothingKind};

#[derive(Debug, Parser)]
#[command(name = "morcela", version, about = "Fit and compare linking functions from LM scores to acceptability judgments")]
pub struct Cli {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Disable data-parallel execution.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Z-normalize ratings per participant and average per sentence.
    Judgments {
        #[arg(long)]
        ratings: Option<PathBuf>,
        #[arg(long, value_parser = parse_sd)]
        sd: Option<SdConvention>,
        /// Judgment CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split-half correlation between groups of raters.
    Agreement {
        #[arg(long)]
        ratings: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long, value_parser = parse_sd)]
        sd: Option<SdConvention>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build unigram tables.
    #[command(subcommand)]
    Unigram(UnigramCommand),
    /// Cross-validated fit of one linking function.
    Fit {
        #[command(flatten)]
        inputs: FitInputs,
        #[arg(long)]
        spec: Option<LinkingKind>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit several linking functions and rank them by BIC.
    Compare {
        #[command(flatten)]
        inputs: FitInputs,
        /// Linking functions to compare (default: slor, the two ablations, morcela).
        #[arg(long, value_delimiter = ',')]
        specs: Vec<LinkingKind>,
        /// Comparison CSV; a manifest is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Slope of per-token conditional log-likelihood on unigram log-probability.
    Slope {
        #[arg(long)]
        instances: Option<PathBuf>,
        #[arg(long)]
        unigram: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        oov_floor: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Join per-model slope reports with per-model fits.
    Report {
        /// model_id=slope.json, repeatable.
        #[arg(long = "slope")]
        slopes: Vec<String>,
        /// model_id=fit.json, repeatable.
        #[arg(long = "fit")]
        fits: Vec<String>,
        /// Row order (default: order of --slope).
        #[arg(long, value_delimiter = ',')]
        order: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score sentences with a fixed or fitted linking function.
    Score {
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        unigram: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        oov_floor: Option<f64>,
        #[arg(long)]
        spec: Option<LinkingKind>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        /// Fit report whose fitted parameters to use.
        #[arg(long)]
        fit: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum UnigramCommand {
    /// Count token ids in a corpus.
    Count {
        /// Whitespace-separated token id files, one chunk each.
        #[arg(long, num_args = 1..)]
        tokens: Vec<PathBuf>,
        /// token_id<TAB>count shard files.
        #[arg(long, num_args = 1..)]
        shards: Vec<PathBuf>,
        #[arg(long)]
        vocab_size: Option<usize>,
        #[command(flatten)]
        smoothing: SmoothingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalize a model's summed next-token distributions.
    FromAggregate {
        #[arg(long)]
        aggregate: Option<PathBuf>,
        #[command(flatten)]
        smoothing: SmoothingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SmoothingArgs {
    #[arg(long, value_enum)]
    pub smoothing: Option<SmoothingKind>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub log_floor: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitInputs {
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub unigram: Option<PathBuf>,
    #[arg(long)]
    pub judgments: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub oov_floor: Option<f64>,
    #[arg(long)]
    pub k_folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_sd(s: &str) -> Result<SdConvention, String> {
    match s {
        "population" => Ok(SdConvention::Population),
        "sample" => Ok(SdConvention::Sample),
        _ => Err(format!("expected population or sample, got {s:?}")),
    }
}

impl FitInputs {
    fn into_config(self, cfg: RunConfig) -> RunConfig {
        RunConfig {
            scores: self.scores,
            unigram: self.unigram,
            judgments: self.judgments,
            oov_floor: self.oov_floor,
            k_folds: self.k_folds,
            seed: self.seed,
            ..cfg
        }
    }
}

impl SmoothingArgs {
    fn into_config(self, cfg: RunConfig) -> RunConfig {
        RunConfig {
            smoothing: self.smoothing,
            alpha: self.alpha,
            log_floor: self.log_floor,
            ..cfg
        }
    }
}

impl Command {
    /// Settings given on the command line; unset fields stay `None`.
    pub fn flags(&self) -> RunConfig {
        let d = RunConfig::default();
        match self.clone() {
            Command::Judgments { ratings, sd, out } => RunConfig { ratings, sd, out, ..d },
            Command::Agreement {
                ratings,
                seed,
                repeats,
                sd,
                out,
            } => RunConfig {
                ratings,
                seed,
                repeats,
                sd,
                out,
                ..d
            },
            Command::Unigram(UnigramCommand::Count {
                tokens,
                shards,
                vocab_size,
                smoothing,
                out,
            }) => smoothing.into_config(RunConfig {
                tokens,
                shards,
                vocab_size,
                out,
                ..d
            }),
            Command::Unigram(UnigramCommand::FromAggregate {
                aggregate,
                smoothing,
                out,
            }) => smoothing.into_config(RunConfig { aggregate, out, ..d }),
            Command::Fit { inputs, spec, out } => inputs.into_config(RunConfig { spec, out, ..d }),
            Command::Compare { inputs, specs, out } => {
                inputs.into_config(RunConfig { specs, out, ..d })
            }
            Command::Slope {
                instances,
                unigram,
                oov_floor,
                out,
            } => RunConfig {
                instances,
                unigram,
                oov_floor,
                out,
                ..d
            },
            Command::Report {
                slopes,
                fits,
                order,
                out,
            } => RunConfig {
                slopes,
                fits,
                order,
                out,
                ..d
            },
            Command::Score {
                scores,
                unigram,
                oov_floor,
                spec,
                beta,
                gamma,
                fit,
                out,
            } => RunConfig {
                scores,
                unigram,
                oov_floor,
                spec,
                beta,
                gamma,
                fit,
                out,
                ..d
            },
        }
    }
}
