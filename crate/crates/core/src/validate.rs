//! Self-check suite: the invariants each module promises, evaluated on
//! seeded synthetic data.

use rand::Rng;
use serde::Serialize;

use crate::attraction::fit_mainstream;
use crate::clustering::{adjusted_rand_index, kmeans, rand_index, ward_linkage_distances, Partition};
use crate::detector::{classify_rh, default_threshold, expected_similarity, pairwise_similarity};
use crate::error::Result;
use crate::ingest::parse_walks_from;
use crate::markov::{absorption_probabilities, build_chain, ChainSpec, TransitionMatrix};
use crate::model::{run_to_absorption, simulate, stream_rng, Catalog, Eviction, RhLabel, SimParams, UserState};
use crate::synth::{calibration_set, converged_population, planted_groups, walk_log, WalkLogParams};
use crate::vectorspace::{cosine, mean, RecVector, VideoId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name,
        passed,
        detail: detail.into(),
    }
}

fn random_vector<R: Rng>(rng: &mut R, universe: usize, len: usize) -> RecVector {
    RecVector::from_counts((0..len).map(|_| {
        (
            VideoId::new(format!("r{}", rng.random_range(0..universe))).expect("non-empty"),
            rng.random_range(1..4),
        )
    }))
}

fn vectorspace_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = stream_rng(seed, 1000);
    let mut worst_sym: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    for _ in 0..200 {
        let a = random_vector(&mut rng, 60, 20);
        let b = random_vector(&mut rng, 60, 20);
        let ab = cosine(&a, &b)?;
        worst_sym = worst_sym.max((ab - cosine(&b, &a)?).abs());
        let scaled = cosine(&a.scaled(7), &b)?;
        worst_scale = worst_scale.max((scaled - ab).abs() / ab.max(f64::MIN_POSITIVE));
    }
    let x = random_vector(&mut rng, 60, 20);
    let m = mean(&vec![x.clone(); 5])?;
    let linear = x
        .iter()
        .all(|(id, c)| (m.get(id.as_str()) - f64::from(c)).abs() < 1e-12)
        && m.len() == x.len();
    Ok(vec![
        check(
            "cosine symmetry",
            worst_sym <= 1e-12,
            format!("max asymmetry {worst_sym:e}"),
        ),
        check(
            "cosine scale invariance",
            worst_scale <= 1e-9,
            format!("max relative change {worst_scale:e}"),
        ),
        check("mean of copies", linear, "mean of 5 copies equals the vector"),
    ])
}

fn model_checks(seed: u64) -> Result<Vec<Check>> {
    let c = Catalog::uniform(1000, 100)?;
    let params = SimParams {
        rounds: 200,
        seed,
        ..SimParams::default()
    };
    let a = simulate(&params, &c)?;
    let b = simulate(&params, &c)?;
    let mut terminal = true;
    let mut multiples = true;
    for u in 0..a.users() {
        let traj = a.trajectory(u);
        if let Some(first) = traj.iter().position(|&p| p == 0.0 || p == 1.0) {
            terminal &= traj[first..].iter().all(|&p| p == traj[first]);
        }
        multiples &= traj.iter().all(|&p| ((p * 10.0) - (p * 10.0).round()).abs() < 1e-12);
    }
    Ok(vec![
        check("simulation determinism", a == b, "identical seed gives identical trace"),
        check("absorption is terminal", terminal, "p_B never leaves {0, 1}"),
        check("p_B granularity", multiples, "p_B values are multiples of 1/h"),
    ])
}

fn markov_checks(seed: u64) -> Result<Vec<Check>> {
    let mut stochastic = true;
    let mut worst_martingale: f64 = 0.0;
    for h in 1..=12 {
        let m = build_chain(ChainSpec::count(h))?;
        let r = absorption_probabilities(&m)?;
        for k in 0..=h {
            worst_martingale = worst_martingale.max((r.p_rh[k] - k as f64 / h as f64).abs());
        }
        stochastic &= (0..m.len()).all(|s| (m.row(s).iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs() <= 1e-12);
    }
    for h in 1..=8 {
        let m = build_chain(ChainSpec::full(h))?;
        stochastic &= (0..m.len()).all(|s| (m.row(s).iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    // FIFO Monte Carlo against the full chain, h = 3, start "100".
    let m = build_chain(ChainSpec::full(3))?;
    let exact = absorption_probabilities(&m)?.p_rh[TransitionMatrix::full_state("100")?];
    let c = Catalog::uniform(20, 5)?;
    let start = UserState::from_types(&[true, false, false], &c)?;
    let runs = 20_000u64;
    let mut rng = stream_rng(seed, 2000);
    let mut trapped = 0u64;
    for _ in 0..runs {
        if let Some(a) = run_to_absorption(start.clone(), &c, 1, Eviction::Fifo, 100_000, &mut rng)? {
            trapped += u64::from(a.trapped);
        }
    }
    let est = trapped as f64 / runs as f64;
    let sd = (exact * (1.0 - exact) / runs as f64).sqrt();
    Ok(vec![
        check("row stochasticity", stochastic, "all rows sum to 1 within 1e-12"),
        check(
            "count-chain martingale",
            worst_martingale <= 1e-10,
            format!("max |p - k/h| = {worst_martingale:e}"),
        ),
        check(
            "full chain vs Monte Carlo",
            (est - exact).abs() <= 3.0 * sd,
            format!("exact {exact:.5}, simulated {est:.5}, 3 sd {:.5}", 3.0 * sd),
        ),
    ])
}

fn detector_checks(seed: u64) -> Result<Vec<Check>> {
    let c = Catalog::uniform(1000, 100)?;
    let trace = converged_population(
        &SimParams {
            rounds: 200,
            seed,
            ..SimParams::default()
        },
        &c,
        4000,
    )?;
    let sims = pairwise_similarity(&trace.final_recommendations, false)?;
    let e = expected_similarity(1000, 100, 50)?;
    let tau = default_threshold(e)?;
    let p = classify_rh(&sims, tau)?;
    let found = p.labels(trace.users());
    let errors = trace
        .final_labels
        .iter()
        .zip(&found)
        .filter(|(truth, got)| truth.is_absorbed() && truth != got)
        .count();
    let mut cross_zero = true;
    for i in 0..trace.users() {
        for j in 0..trace.users() {
            if trace.final_labels[i] == RhLabel::Mainstream && trace.final_labels[j] == RhLabel::RabbitHole {
                cross_zero &= sims.get(i, j) == 0.0;
            }
        }
    }
    Ok(vec![
        check("cross-group similarity is zero", cross_zero, "U_A vs U_B cosine"),
        check(
            "threshold classification",
            errors == 0,
            format!("{errors} misclassified absorbed users"),
        ),
    ])
}

fn clustering_checks(seed: u64) -> Result<Vec<Check>> {
    let (vs, truth) = planted_groups(2, 30, 100, 50, seed)?;
    let r = kmeans(&vs, 2, 10, seed)?;
    let plant = Partition::from_labels(&truth);
    let ari = adjusted_rand_index(&r.partition, &plant)?;
    let decomposition = (r.within_ss + r.between_ss - r.total_ss).abs() <= 1e-6 * r.total_ss;

    let mut rng = stream_rng(seed, 3000);
    let mut invariant = true;
    for _ in 0..50 {
        let a: Vec<usize> = (0..12).map(|_| rng.random_range(0..3)).collect();
        let b: Vec<usize> = (0..12).map(|_| rng.random_range(0..4)).collect();
        let relabeled: Vec<usize> = a.iter().map(|x| 10 - x).collect();
        let (pa, pb, pr) = (
            Partition::from_labels(&a),
            Partition::from_labels(&b),
            Partition::from_labels(&relabeled),
        );
        invariant &= rand_index(&pa, &pb)? == rand_index(&pr, &pb)?;
        invariant &= adjusted_rand_index(&pa, &pb)? == adjusted_rand_index(&pr, &pb)?;
        invariant &= rand_index(&pa, &pa)? == 1.0 && adjusted_rand_index(&pa, &pa)? == 1.0;
    }

    let mut monotone = true;
    for _ in 0..20 {
        let n = 12;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = rng.random();
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        let t = ward_linkage_distances(n, &d)?;
        monotone &= t.merges.windows(2).all(|w| w[1].height >= w[0].height);
    }
    Ok(vec![
        check("k-means planted recovery", ari == 1.0, format!("ARI {ari}")),
        check(
            "sum-of-squares decomposition",
            decomposition,
            format!("W {} + B {} vs T {}", r.within_ss, r.between_ss, r.total_ss),
        ),
        check("Rand/ARI label invariance", invariant, "relabeling and self-agreement"),
        check("Ward monotone heights", monotone, "20 random distance matrices"),
    ])
}

fn attraction_checks(seed: u64) -> Result<Vec<Check>> {
    let y0s = calibration_set(95, 5, 300, 100, seed)?;
    let m = fit_mainstream(&y0s, 0.95)?;
    let outliers_out = y0s[95..]
        .iter()
        .all(|y| m.similarity(y).map(|s| s < m.sigma).unwrap_or(false));
    let n = y0s.len() as f64;
    let within_one = (m.calibration_in_fraction - 0.95).abs() <= 1.0 / n + 1e-12;
    let doubled: Vec<RecVector> = y0s.iter().chain(&y0s).cloned().collect();
    let dup = fit_mainstream(&doubled, 0.95)?.sigma == m.sigma;
    Ok(vec![
        check(
            "mainstream calibration",
            within_one,
            format!("in-fraction {}", m.calibration_in_fraction),
        ),
        check(
            "planted outliers leave mainstream",
            outliers_out,
            format!("sigma {}", m.sigma),
        ),
        check("sigma duplication invariance", dup, "calibration set doubled"),
    ])
}

fn ingest_checks(seed: u64) -> Result<Vec<Check>> {
    let c = Catalog::uniform(1000, 100)?;
    let ws = walk_log(
        &WalkLogParams {
            walks_per_profile: 5,
            seed,
            ..WalkLogParams::default()
        },
        &c,
    )?;
    let mut buf = Vec::new();
    ws.write_jsonl(&mut buf)?;
    let parsed = parse_walks_from(buf.as_slice())?;
    let mut buf2 = Vec::new();
    parsed.walks.write_jsonl(&mut buf2)?;
    let again = parse_walks_from(buf2.as_slice())?;
    Ok(vec![check(
        "walk log round trip",
        again.walks == parsed.walks && parsed.diagnostics.is_empty(),
        format!("{} walks", parsed.walks.len()),
    )])
}

/// Runs every check; errors inside a group become failed checks.
pub fn run_all(seed: u64) -> Vec<Check> {
    type Group = fn(u64) -> Result<Vec<Check>>;
    let groups: [(&'static str, Group); 7] = [
        ("vectorspace", vectorspace_checks),
        ("model", model_checks),
        ("markov", markov_checks),
        ("detector", detector_checks),
        ("clustering", clustering_checks),
        ("attraction", attraction_checks),
        ("ingest", ingest_checks),
    ];
    let mut out = Vec::new();
    for (name, group) in groups {
        match group(seed) {
            Ok(checks) => out.extend(checks),
            Err(e) => out.push(check(name, false, format!("error: {e}"))),
        }
    }
    out
}
