use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use rabbithole::markov::Representation;
use rabbithole::model::Eviction;
use serde::Deserialize;

/// Flags shared by every subcommand. Any of them may also be set in a TOML
/// file passed with `--config`; flags given on the command line win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// TOML file providing defaults for any flag below.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Walk log (JSON Lines) to analyse instead of simulated data.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Directory receiving the CSV outputs (created if missing).
    #[arg(long, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Optional `walk_id,label` CSV with ground-truth labels.
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Separate walk log whose hop-0 snapshots calibrate the mainstream.
    #[arg(long, value_name = "FILE")]
    pub calibration: Option<PathBuf>,

    /// Catalog size.
    #[arg(long)]
    pub v: Option<usize>,
    /// Attractor count.
    #[arg(long)]
    pub b: Option<usize>,
    /// Simulated users.
    #[arg(long)]
    pub n: Option<usize>,
    /// Recommendations per round.
    #[arg(long)]
    pub y: Option<usize>,
    /// History length.
    #[arg(long)]
    pub h: Option<usize>,
    /// Simulated rounds.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// History eviction policy.
    #[arg(long, value_parser = parse_eviction)]
    pub eviction: Option<Eviction>,
    /// RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Smallest k of the k-means sweep.
    #[arg(long)]
    pub k_min: Option<usize>,
    /// Largest k of the k-means sweep.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// k-means restarts per k.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Similarity threshold for rabbit-hole detection.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Share of fresh snapshots kept inside the mainstream.
    #[arg(long)]
    pub quantile: Option<f64>,
    /// Binarize recommendation vectors before comparing them.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub binary: Option<bool>,

    /// Markov state space: count or full.
    #[arg(long, value_parser = parse_representation)]
    pub representation: Option<Representation>,
    /// Use the iterative solver for the Markov chain.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub iterative: Option<bool>,
    /// Hop whose snapshots are analysed (default: each walk's last hop).
    #[arg(long)]
    pub hop: Option<usize>,
    /// Synthetic walks per profile.
    #[arg(long)]
    pub walks_per_profile: Option<usize>,
    /// Watched videos per synthetic walk.
    #[arg(long)]
    pub depth: Option<usize>,
}

fn parse_eviction(s: &str) -> Result<Eviction, String> {
    s.parse().map_err(|e: rabbithole::Error| e.to_string())
}

fn parse_representation(s: &str) -> Result<Representation, String> {
    s.parse().map_err(|e: rabbithole::Error| e.to_string())
}

macro_rules! overlay {
    ($cli:expr, $file:expr, $($field:ident),*) => {
        $( if $cli.$field.is_none() { $cli.$field = $file.$field.take(); } )*
    };
}

/// Fully resolved parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub labels: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub v: usize,
    pub b: usize,
    pub n: usize,
    pub y: usize,
    pub h: usize,
    pub rounds: usize,
    pub eviction: Eviction,
    pub seed: u64,
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub tau: Option<f64>,
    pub quantile: f64,
    pub binary: bool,
    pub representation: Representation,
    pub iterative: bool,
    pub hop: Option<usize>,
    pub walks_per_profile: usize,
    pub depth: usize,
}

impl Flags {
    /// Loads `--config` if given and fills unset flags from it.
    pub fn resolve(mut self) -> anyhow::Result<RunConfig> {
        if let Some(path) = self.config.clone() {
            let mut file = load_config(&path)?;
            overlay!(
                self,
                file,
                input,
                output_dir,
                labels,
                calibration,
                v,
                b,
                n,
                y,
                h,
                rounds,
                eviction,
                seed,
                k_min,
                k_max,
                restarts,
                tau,
                quantile,
                binary,
                representation,
                iterative,
                hop,
                walks_per_profile,
                depth
            );
        }
        let cfg = RunConfig {
            input: self.input,
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from(".")),
            labels: self.labels,
            calibration: self.calibration,
            v: self.v.unwrap_or(1000),
            b: self.b.unwrap_or(100),
            n: self.n.unwrap_or(100),
            y: self.y.unwrap_or(50),
            h: self.h.unwrap_or(10),
            rounds: self.rounds.unwrap_or(50),
            eviction: self.eviction.unwrap_or_default(),
            seed: self.seed.unwrap_or(1),
            k_min: self.k_min.unwrap_or(2),
            k_max: self.k_max.unwrap_or(7),
            restarts: self.restarts.unwrap_or(rabbithole::clustering::DEFAULT_RESTARTS),
            tau: self.tau,
            quantile: self.quantile.unwrap_or(rabbithole::attraction::DEFAULT_QUANTILE),
            binary: self.binary.unwrap_or(false),
            representation: self.representation.unwrap_or(Representation::Count),
            iterative: self.iterative.unwrap_or(false),
            hop: self.hop,
            walks_per_profile: self.walks_per_profile.unwrap_or(20),
            depth: self.depth.unwrap_or(5),
        };
        if cfg.k_min == 0 || cfg.k_min > cfg.k_max {
            bail!("need 1 <= --k-min <= --k-max, got {}..{}", cfg.k_min, cfg.k_max);
        }
        Ok(cfg)
    }
}

fn load_config(path: &Path) -> anyhow::Result<Flags> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}
