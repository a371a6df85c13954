use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use iapvq::ap::APConfig;
use iapvq::lbg::{EmptyClusterPolicy, LBGConfig};
use iapvq::pipeline::{PipelineConfig, SizePolicy};

#[derive(Debug, Parser)]
#[command(name = "iapvq", version, about = "Vector quantization codebook design for grayscale images")]
pub struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Train a codebook from a PGM image or a vector file.
    Train(TrainArgs),
    /// Quantize an image into an index map.
    Encode(EncodeArgs),
    /// Rebuild an image from an index map and its codebook.
    Decode(DecodeArgs),
    /// PSNR between two images.
    Eval(EvalArgs),
    /// Train every algorithm on every image and write a CSV report.
    Compare(CompareArgs),
    /// Write a synthetic image or point cloud.
    Synth(SynthArgs),
    /// Re-run a manifest and check that every output is byte-identical.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Lbg,
    Ap,
    Iap,
    IapLbg,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Lbg => "lbg",
            Algo::Ap => "ap",
            Algo::Iap => "iap",
            Algo::IapLbg => "iap-lbg",
        }
    }
}

/// Block size written `WxH`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Block {
    pub w: usize,
    pub h: usize,
}

impl FromStr for Block {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
        let parse = |v: &str| match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("invalid block side {v:?}")),
        };
        Ok(Block {
            w: parse(w)?,
            h: parse(h)?,
        })
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.w, self.h)
    }
}

impl From<Block> for String {
    fn from(b: Block) -> Self {
        b.to_string()
    }
}

impl TryFrom<String> for Block {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Uniform preference: `median` of the off-diagonal similarities or a fixed
/// value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Preference {
    Median,
    Value(f64),
}

impl FromStr for Preference {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "median" {
            return Ok(Preference::Median);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Preference::Value(v)),
            _ => Err(format!("expected `median` or a finite number, got {s:?}")),
        }
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preference::Median => f.write_str("median"),
            Preference::Value(v) => write!(f, "{v}"),
        }
    }
}

impl From<Preference> for String {
    fn from(p: Preference) -> Self {
        p.to_string()
    }
}

impl TryFrom<String> for Preference {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizePolicyArg {
    Exact,
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyPolicyArg {
    SplitWorst,
    Keep,
}

/// Message passing and preference search options.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ApOptions {
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Iterations with an unchanged exemplar set that count as converged.
    #[arg(long, default_value_t = 50)]
    pub stable_window: usize,
    /// First preference scale tried by the size search.
    #[arg(long, default_value_t = 0.1)]
    pub rs_initial: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub rs_min: f64,
    #[arg(long, default_value_t = 16.0)]
    pub rs_max: f64,
    /// Message-passing runs the size search may spend.
    #[arg(long, default_value_t = 40)]
    pub rs_steps: usize,
    #[arg(long, value_enum, default_value_t = SizePolicyArg::Exact)]
    pub size_policy: SizePolicyArg,
    /// Start every search probe from zero messages.
    #[arg(long)]
    pub no_warm_start: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LbgOptions {
    #[arg(long, default_value_t = 50)]
    pub lbg_max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = EmptyPolicyArg::SplitWorst)]
    pub empty_cluster: EmptyPolicyArg,
}

impl ApOptions {
    pub fn ap_config(&self, trace_energy: bool) -> APConfig {
        APConfig {
            damping: self.damping,
            max_iterations: self.max_iter,
            stable_window: self.stable_window,
            trace_energy,
        }
    }

    pub fn pipeline_config(&self, target_m: usize, lbg: LBGConfig) -> PipelineConfig {
        PipelineConfig {
            target_m,
            rs_initial: self.rs_initial,
            rs_bounds: (self.rs_min, self.rs_max),
            rs_search_max_steps: self.rs_steps,
            ap: self.ap_config(false),
            lbg,
            size_policy: match self.size_policy {
                SizePolicyArg::Exact => SizePolicy::Exact,
                SizePolicyArg::Nearest => SizePolicy::Nearest,
            },
            warm_start: !self.no_warm_start,
        }
    }
}

impl LbgOptions {
    pub fn config(&self, seed: u64) -> LBGConfig {
        LBGConfig {
            max_iterations: self.lbg_max_iter,
            threshold: self.threshold,
            seed,
            empty_cluster_policy: match self.empty_cluster {
                EmptyPolicyArg::SplitWorst => EmptyClusterPolicy::SplitWorst,
                EmptyPolicyArg::Keep => EmptyClusterPolicy::KeepCodeword,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// PGM image, or a text file with one whitespace-separated vector per line.
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Target codebook size. Required for lbg and iap-lbg; for ap and iap it
    /// turns on the preference search.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value = "4x4")]
    pub block: Block,
    /// Codebook file to write.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// LBG restarts; the lowest-distortion codebook is kept.
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    /// Fixed network-support ratio instead of searching for one.
    #[arg(long, conflicts_with = "auto_rs")]
    pub rs: Option<f64>,
    /// Search the network-support ratio for `--size` codewords (the default
    /// whenever `--rs` is absent).
    #[arg(long)]
    pub auto_rs: bool,
    /// Uniform preference for ap: `median` or a number.
    #[arg(long, default_value = "median")]
    pub preference: Preference,
    #[command(flatten)]
    #[serde(flatten)]
    pub ap: ApOptions,
    #[command(flatten)]
    #[serde(flatten)]
    pub lbg: LbgOptions,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EncodeArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    #[arg(long, default_value = "4x4")]
    pub block: Block,
    /// Index map file to write.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DecodeArgs {
    /// Index map file.
    pub input: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    /// PGM file to write.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    pub reference: PathBuf,
    pub reconstructed: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApMode {
    /// Scale the median preference to reach `--size` codewords.
    Tuned,
    /// Use the median similarity as is.
    Median,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "lbg,ap,iap,iap-lbg")]
    pub algos: Vec<Algo>,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long, default_value = "4x4")]
    pub block: Block,
    /// Independent LBG experiments per image, each the best of `--runs`.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    /// Also evaluate this image's codebooks on every image.
    #[arg(long)]
    pub universal: Option<PathBuf>,
    /// Directory for per-iteration energy and distortion CSVs.
    #[arg(long = "trace-dir", alias = "trace")]
    pub trace_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ApMode::Tuned)]
    pub ap_mode: ApMode,
    /// CSV report to write.
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub ap: ApOptions,
    #[command(flatten)]
    #[serde(flatten)]
    pub lbg: LbgOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Piecewise-smooth grayscale PGM.
    Image,
    /// Gaussian mixture written as a vector file.
    Mixture,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::Image)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    #[arg(long, default_value_t = 8)]
    pub clusters: usize,
    #[arg(long, default_value_t = 50)]
    pub per_cluster: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 100.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Directory that receives the regenerated outputs.
    #[arg(long)]
    pub out_dir: PathBuf,
}
