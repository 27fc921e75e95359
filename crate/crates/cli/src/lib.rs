//! Command-line workflows: each subcommand runs one analysis and writes its
//! tables as CSV into `--output-dir`.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};

pub use config::{Flags, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "rabbithole", version, about = "Rabbit-hole simulation and audit toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the two-type feedback-loop recommender.
    #[command(after_help = "\
Outputs:
  trace.csv   round,user,p_B   one row per user per round, rounds 0..=ROUNDS
  labels.csv  user,label       final U_A / U_B / U_AB label per user")]
    Simulate(Flags),

    /// Solve the model as an absorbing Markov chain.
    #[command(after_help = "\
Outputs:
  absorption.csv  state,absorbing,p_rh,expected_steps
                  state is the attractor count (count) or the history bits,
                  oldest first (full)
  trapping.csv    key,value   eventual rabbit-hole share of a fresh population")]
    Markov(Flags),

    /// Pairwise recommendation similarity and rabbit-hole classification.
    #[command(after_help = "\
Without --input, a population is simulated until every user is absorbed and
--tau defaults to the geometric mean of the expected in/out similarities.
With --input, each walk contributes its --hop snapshot (default: its last).

Outputs:
  similarity.csv  row,col,value   full matrix, row-major
  partition.csv   item,label      U_A / U_B / U_AB
  truth.csv       item,label      simulator labels (simulated runs only)")]
    Detect(Flags),

    /// k-means sweep with agreement metrics and a Ward dendrogram.
    #[command(after_help = "\
Ground truth comes from --labels, else the walk profiles, else the
simulator's labels when no --input is given.

Outputs:
  metrics.csv     k,within_ss,between_ss,total_ss,between_total,rand,ari
  partitions.csv  k,item,label
  ward.csv        left,right,height   merge list; items are 0..n-1 and merge i
                                      creates cluster n+i")]
    Cluster(Flags),

    /// Mainstream calibration, attraction curves and first-hop distributions.
    #[command(after_help = "\
Without --input, a synthetic walk log is generated from the model and sigma
is calibrated on 500 separate fresh users. With --input and no --calibration,
the log's own hop-0 snapshots calibrate sigma.

Outputs:
  mainstream.csv         key,value                 sigma calibration report
  curve.csv              profile,hop,left_fraction
  first_hop.csv          channel,walk,similarity
  first_hop_summary.csv  channel,median,q1,q3
  hop_similarity.csv     hop,walk,similarity")]
    Attraction(Flags),

    /// Generate a synthetic walk log from the model.
    #[command(after_help = "\
Outputs:
  walks.jsonl  one record per (walk, hop): walk_id, profile, hop, watched,
               recommendations
  labels.csv   walk_id,label")]
    Synth(Flags),

    /// Run the invariant self-check suite.
    #[command(after_help = "\
Outputs:
  validate.csv  check,passed,detail
Exit status is nonzero when any check fails.")]
    Validate(Flags),
}

/// Parses `args` (including the program name), runs the subcommand and
/// writes a human-readable summary to `out`. Returns the process exit code.
pub fn run_from<I, T>(args: I, out: &mut dyn Write) -> anyhow::Result<i32>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    run(cli, out)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<i32> {
    match cli.command {
        Command::Simulate(f) => commands::simulate(&f.resolve()?, out),
        Command::Markov(f) => commands::markov(&f.resolve()?, out),
        Command::Detect(f) => commands::detect(&f.resolve()?, out),
        Command::Cluster(f) => commands::cluster(&f.resolve()?, out),
        Command::Attraction(f) => commands::attraction(&f.resolve()?, out),
        Command::Synth(f) => commands::synth(&f.resolve()?, out),
        Command::Validate(f) => commands::validate(&f.resolve()?, out),
    }
}
