use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context};
use rabbithole::attraction::{
    attraction_curve, first_hop_distribution, fit_mainstream, similarity_by_hop, write_similarity_by_hop_csv,
};
use rabbithole::clustering::{adjusted_rand_index, kmeans, rand_index, ward_linkage, Partition, WardDistance};
use rabbithole::detector::{classify_rh, default_threshold, expected_similarity, pairwise_similarity};
use rabbithole::ingest::{parse_walks, WalkSet};
use rabbithole::markov::{absorption_probabilities, build_chain, trapping_profile, ChainSpec};
use rabbithole::model::{simulate as run_simulation, Catalog, RhLabel, SimParams};
use rabbithole::synth::{converged_population, walk_log, WalkLogParams};
use rabbithole::validate::run_all;
use rabbithole::{binarize, RecVector};

use crate::config::RunConfig;

/// Upper bound on rounds when simulating a converged population.
const CONVERGENCE_ROUNDS: usize = 100_000;
/// Calibration snapshots generated when neither --input nor --calibration is given.
const SYNTHETIC_CALIBRATION: usize = 500;

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn params(cfg: &RunConfig) -> SimParams {
    SimParams {
        n: cfg.n,
        y: cfg.y,
        h: cfg.h,
        rounds: cfg.rounds,
        eviction: cfg.eviction,
        seed: cfg.seed,
    }
}

fn catalog(cfg: &RunConfig) -> anyhow::Result<Catalog> {
    Ok(Catalog::uniform(cfg.v, cfg.b)?)
}

fn load_walks(path: &Path, labels: Option<&Path>, out: &mut dyn Write) -> anyhow::Result<WalkSet> {
    let report = parse_walks(path).with_context(|| format!("reading walk log {}", path.display()))?;
    for d in &report.diagnostics {
        writeln!(out, "warning: {}:{}: {}", path.display(), d.line, d.message)?;
    }
    let mut ws = report.walks;
    if let Some(labels) = labels {
        for d in ws.load_labels(labels)? {
            writeln!(out, "warning: {}:{}: {}", labels.display(), d.line, d.message)?;
        }
    }
    Ok(ws)
}

/// Vectors to compare, their item names and optional ground truth.
struct Items {
    vectors: Vec<RecVector>,
    names: Vec<String>,
    truth: Option<Vec<String>>,
    simulated: Option<Vec<RhLabel>>,
}

fn items(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<Items> {
    let mut items = if let Some(input) = &cfg.input {
        let ws = load_walks(input, cfg.labels.as_deref(), out)?;
        let mut vectors = Vec::new();
        let mut names = Vec::new();
        let mut truth = Vec::new();
        for w in ws.iter() {
            let v = match cfg.hop {
                Some(hop) => match w.vector(hop) {
                    Some(v) => v,
                    None => continue,
                },
                None => w.last_vector(),
            };
            vectors.push(v.clone());
            names.push(w.walk_id.clone());
            truth.push(w.label.clone().unwrap_or_else(|| w.profile.clone()));
        }
        if vectors.is_empty() {
            bail!("no walk reaches hop {}", cfg.hop.unwrap_or(0));
        }
        Items {
            vectors,
            names,
            truth: Some(truth),
            simulated: None,
        }
    } else {
        let trace = converged_population(&params(cfg), &catalog(cfg)?, CONVERGENCE_ROUNDS)?;
        writeln!(
            out,
            "simulated {} users; absorbed fraction {}",
            trace.users(),
            trace.absorbed_fraction(trace.rounds)
        )?;
        Items {
            names: (0..trace.users()).map(|u| u.to_string()).collect(),
            truth: Some(trace.final_labels.iter().map(|l| l.to_string()).collect()),
            simulated: Some(trace.final_labels.clone()),
            vectors: trace.final_recommendations,
        }
    };
    if cfg.binary {
        items.vectors = items.vectors.iter().map(binarize).collect();
    }
    Ok(items)
}

pub fn simulate(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let trace = run_simulation(&params(cfg), &catalog(cfg)?)?;
    trace.write_csv(create(&cfg.output_dir, "trace.csv")?)?;
    trace.write_labels_csv(create(&cfg.output_dir, "labels.csv")?)?;
    writeln!(out, "users {} rounds {}", trace.users(), trace.rounds)?;
    writeln!(
        out,
        "initial p_B = 0 fraction {}",
        trace.fraction_with(0, RhLabel::Mainstream)
    )?;
    for label in [RhLabel::Mainstream, RhLabel::RabbitHole, RhLabel::Mixed] {
        writeln!(
            out,
            "final {label} fraction {}",
            trace.fraction_with(trace.rounds, label)
        )?;
    }
    Ok(0)
}

pub fn markov(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let spec = ChainSpec {
        h: cfg.h,
        representation: cfg.representation,
        iterative: cfg.iterative,
    };
    let m = build_chain(spec)?;
    let r = absorption_probabilities(&m)?;
    r.write_csv(&m, create(&cfg.output_dir, "absorption.csv")?)?;
    let profile = trapping_profile(spec, &catalog(cfg)?)?;
    let mut w = create(&cfg.output_dir, "trapping.csv")?;
    writeln!(w, "key,value")?;
    writeln!(w, "states,{}", m.len())?;
    writeln!(w, "rh_bound,{}", profile.rh_bound)?;
    writeln!(w, "mainstream_bound,{}", profile.mainstream_bound)?;
    w.flush()?;
    writeln!(
        out,
        "{} states; P(rabbit hole) for a fresh user {}",
        m.len(),
        profile.rh_bound
    )?;
    Ok(0)
}

pub fn detect(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let data = items(cfg, out)?;
    let tau = match (cfg.tau, &data.simulated) {
        (Some(t), _) => t,
        (None, Some(_)) => default_threshold(expected_similarity(cfg.v, cfg.b, cfg.y)?)?,
        (None, None) => bail!("--tau is required with --input"),
    };
    let sims = pairwise_similarity(&data.vectors, false)?.with_labels(data.names.clone())?;
    let partition = classify_rh(&sims, tau)?;
    sims.write_csv(create(&cfg.output_dir, "similarity.csv")?)?;
    partition.write_csv(&data.names, create(&cfg.output_dir, "partition.csv")?)?;
    writeln!(
        out,
        "tau {tau}: U_A {} U_B {} U_AB {}",
        partition.mainstream.len(),
        partition.rabbit_hole.len(),
        partition.mixed.len()
    )?;
    if let Some(truth) = &data.simulated {
        let mut w = create(&cfg.output_dir, "truth.csv")?;
        writeln!(w, "item,label")?;
        for (name, label) in data.names.iter().zip(truth) {
            writeln!(w, "{name},{label}")?;
        }
        w.flush()?;
        let found = partition.labels(truth.len());
        let errors = truth
            .iter()
            .zip(&found)
            .filter(|(t, f)| t.is_absorbed() && t != f)
            .count();
        writeln!(out, "misclassified absorbed users {errors}")?;
    }
    Ok(0)
}

pub fn cluster(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let data = items(cfg, out)?;
    if cfg.k_max > data.vectors.len() {
        bail!("--k-max {} exceeds the {} items", cfg.k_max, data.vectors.len());
    }
    let truth = data.truth.as_ref().map(|t| Partition::from_labels(t));

    let mut metrics = create(&cfg.output_dir, "metrics.csv")?;
    writeln!(metrics, "k,within_ss,between_ss,total_ss,between_total,rand,ari")?;
    let mut parts = create(&cfg.output_dir, "partitions.csv")?;
    writeln!(parts, "k,item,label")?;
    for k in cfg.k_min..=cfg.k_max {
        let r = kmeans(&data.vectors, k, cfg.restarts, cfg.seed)?;
        let (rand, ari) = match &truth {
            Some(t) => (
                rand_index(&r.partition, t)?.to_string(),
                adjusted_rand_index(&r.partition, t)?.to_string(),
            ),
            None => (String::new(), String::new()),
        };
        writeln!(
            metrics,
            "{k},{},{},{},{},{rand},{ari}",
            r.within_ss,
            r.between_ss,
            r.total_ss,
            r.between_ratio()
        )?;
        writeln!(
            out,
            "k {k}: BetweenSS/TotalSS {} Rand {rand} ARI {ari}",
            r.between_ratio()
        )?;
        let mut w = csv_row_writer(&mut parts);
        for (item, label) in data.names.iter().zip(r.partition.labels()) {
            w.row(&[&k.to_string(), item, &label.to_string()])?;
        }
    }
    metrics.flush()?;
    parts.flush()?;

    let sims = pairwise_similarity(&data.vectors, false)?;
    let tree = ward_linkage(&sims, WardDistance::OneMinusCosine)?;
    tree.write_csv(create(&cfg.output_dir, "ward.csv")?)?;
    Ok(0)
}

/// Minimal RFC-4180 row writer over an existing stream.
struct RowWriter<'a, W: Write>(&'a mut W);

fn csv_row_writer<W: Write>(w: &mut W) -> RowWriter<'_, W> {
    RowWriter(w)
}

impl<W: Write> RowWriter<'_, W> {
    fn row(&mut self, fields: &[&str]) -> std::io::Result<()> {
        let quoted: Vec<String> = fields
            .iter()
            .map(|f| {
                if f.contains([',', '"', '\n', '\r']) {
                    format!("\"{}\"", f.replace('"', "\"\""))
                } else {
                    f.to_string()
                }
            })
            .collect();
        writeln!(self.0, "{}", quoted.join(","))
    }
}

fn synthetic_walks(cfg: &RunConfig) -> anyhow::Result<WalkSet> {
    let params = WalkLogParams {
        walks_per_profile: cfg.walks_per_profile,
        depth: cfg.depth,
        y: cfg.y,
        h: cfg.h,
        eviction: cfg.eviction,
        seed: cfg.seed,
        ..WalkLogParams::default()
    };
    Ok(walk_log(&params, &catalog(cfg)?)?)
}

/// Fresh hop-0 snapshots from users outside the analysed walk log.
fn synthetic_calibration(cfg: &RunConfig) -> anyhow::Result<Vec<RecVector>> {
    let params = WalkLogParams {
        profiles: vec![("calibration".into(), false)],
        walks_per_profile: SYNTHETIC_CALIBRATION,
        depth: 0,
        y: cfg.y,
        h: cfg.h,
        eviction: cfg.eviction,
        seed: cfg.seed.wrapping_add(1),
    };
    let ws = walk_log(&params, &catalog(cfg)?)?;
    Ok(ws.initial_vectors().into_iter().cloned().collect())
}

pub fn attraction(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let ws = match &cfg.input {
        Some(path) => load_walks(path, cfg.labels.as_deref(), out)?,
        None => synthetic_walks(cfg)?,
    };
    let calibration: Vec<RecVector> = match &cfg.calibration {
        Some(path) => load_walks(path, None, out)?
            .initial_vectors()
            .into_iter()
            .cloned()
            .collect(),
        None if cfg.input.is_some() => ws.initial_vectors().into_iter().cloned().collect(),
        None => synthetic_calibration(cfg)?,
    };
    let model = fit_mainstream(&calibration, cfg.quantile)?;
    model.write_report_csv(create(&cfg.output_dir, "mainstream.csv")?)?;

    let curve = attraction_curve(&ws, &model)?;
    curve.write_csv(create(&cfg.output_dir, "curve.csv")?)?;
    let first = first_hop_distribution(&ws, &model)?;
    first.write_values_csv(create(&cfg.output_dir, "first_hop.csv")?)?;
    first.write_summary_csv(create(&cfg.output_dir, "first_hop_summary.csv")?)?;
    write_similarity_by_hop_csv(
        &similarity_by_hop(&ws, &model)?,
        create(&cfg.output_dir, "hop_similarity.csv")?,
    )?;

    writeln!(
        out,
        "sigma {} (quantile {}, calibration mean {}, {} snapshots)",
        model.sigma, model.quantile, model.calibration_mean, model.calibration_size
    )?;
    if curve.skipped > 0 {
        writeln!(out, "warning: {} (walk, hop) snapshots missing", curve.skipped)?;
    }
    for (profile, points) in &curve.profiles {
        let fractions: Vec<String> = points.iter().map(|p| p.left_fraction.to_string()).collect();
        writeln!(out, "{profile}: left fraction by hop [{}]", fractions.join(", "))?;
    }
    Ok(0)
}

pub fn synth(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let ws = synthetic_walks(cfg)?;
    let mut w = create(&cfg.output_dir, "walks.jsonl")?;
    ws.write_jsonl(&mut w)?;
    w.flush()?;
    let mut labels = create(&cfg.output_dir, "labels.csv")?;
    writeln!(labels, "walk_id,label")?;
    let mut rows = csv_row_writer(&mut labels);
    for walk in ws.iter() {
        rows.row(&[&walk.walk_id, walk.label.as_deref().unwrap_or("")])?;
    }
    labels.flush()?;
    writeln!(out, "wrote {} walks of depth {}", ws.len(), cfg.depth)?;
    Ok(0)
}

pub fn validate(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let checks = run_all(cfg.seed);
    let mut w = create(&cfg.output_dir, "validate.csv")?;
    writeln!(w, "check,passed,detail")?;
    let mut rows = csv_row_writer(&mut w);
    for c in &checks {
        rows.row(&[c.name, &c.passed.to_string(), &c.detail])?;
    }
    w.flush()?;
    let mut failed = 0;
    for c in &checks {
        writeln!(
            out,
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        )?;
        failed += usize::from(!c.passed);
    }
    writeln!(out, "{} checks, {failed} failed", checks.len())?;
    Ok(if failed == 0 { 0 } else { 1 })
}
