//! Synthetic data generators: converged populations, planted cluster
//! fixtures, calibration sets and walk logs produced by the model.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ingest::{Hop, Walk, WalkSet};
use crate::model::{
    recommend_indices, simulate, stream_rng, Catalog, Eviction, RhLabel, SimParams, SimTrace, UserState,
};
use crate::vectorspace::{RecVector, VideoId};

/// Simulates in chunks of `chunk` rounds until every user is absorbed or
/// `max_rounds` is reached; returns the first trace that is fully absorbed.
pub fn converged_population(params: &SimParams, catalog: &Catalog, max_rounds: usize) -> Result<SimTrace> {
    let mut rounds = params.rounds.max(1);
    loop {
        let trace = simulate(&SimParams { rounds, ..*params }, catalog)?;
        if trace.final_labels.iter().all(RhLabel::is_absorbed) || rounds >= max_rounds {
            return Ok(trace);
        }
        rounds = (rounds * 2).min(max_rounds);
    }
}

fn pool_id(pool: usize, i: usize) -> VideoId {
    VideoId::new(format!("g{pool}_{i:04}")).expect("non-empty")
}

/// `groups` planted clusters of `per_group` binary vectors; each vector holds
/// `y` distinct IDs drawn from its group's private pool of `pool_size` IDs.
/// Returns the vectors and their planted group index.
pub fn planted_groups(
    groups: usize,
    per_group: usize,
    pool_size: usize,
    y: usize,
    seed: u64,
) -> Result<(Vec<RecVector>, Vec<usize>)> {
    if y == 0 || y > pool_size {
        return Err(Error::invalid(format!(
            "need 0 < y <= pool size, got y={y}, pool={pool_size}"
        )));
    }
    let mut vs = Vec::with_capacity(groups * per_group);
    let mut truth = Vec::with_capacity(groups * per_group);
    for g in 0..groups {
        for i in 0..per_group {
            let mut rng = stream_rng(seed, (g * per_group + i) as u64);
            let picks = sample(&mut rng, pool_size, y);
            vs.push(RecVector::from_ids(picks.into_iter().map(|j| pool_id(g, j))));
            truth.push(g);
        }
    }
    Ok((vs, truth))
}

/// `inliers` snapshots drawn from one shared pool plus `outliers` snapshots
/// on private, pool-disjoint IDs.
pub fn calibration_set(
    inliers: usize,
    outliers: usize,
    pool_size: usize,
    y: usize,
    seed: u64,
) -> Result<Vec<RecVector>> {
    let (mut vs, _) = planted_groups(1, inliers, pool_size, y, seed)?;
    for o in 0..outliers {
        vs.push(RecVector::from_ids(
            (0..y).map(|i| VideoId::new(format!("outlier{o}_{i:04}")).expect("non-empty")),
        ));
    }
    Ok(vs)
}

/// Parameters for model-driven walk logs.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkLogParams {
    /// Profile name and whether its first watched video is an attractor.
    pub profiles: Vec<(String, bool)>,
    pub walks_per_profile: usize,
    /// Number of watched videos per walk; hops run `0..=depth`.
    pub depth: usize,
    pub y: usize,
    pub h: usize,
    pub eviction: Eviction,
    pub seed: u64,
}

impl Default for WalkLogParams {
    fn default() -> Self {
        WalkLogParams {
            profiles: vec![("control".into(), false), ("attractor".into(), true)],
            walks_per_profile: 20,
            depth: 5,
            y: 50,
            h: 10,
            eviction: Eviction::Fifo,
            seed: 1,
        }
    }
}

/// Autoplay-style walks through the model: a fresh random history gives
/// the hop-0 snapshot, the first watched video comes from the profile's
/// type, and later hops follow the recommendations.
pub fn walk_log(params: &WalkLogParams, catalog: &Catalog) -> Result<WalkSet> {
    if params.h == 0 || params.y == 0 {
        return Err(Error::invalid("h and y must be >= 1"));
    }
    let b = catalog.attractor_count();
    let a = catalog.size() - b;
    let mut walks = Vec::new();
    for (p, (profile, starts_in_b)) in params.profiles.iter().enumerate() {
        if (*starts_in_b && b == 0) || (!*starts_in_b && a == 0) {
            return Err(Error::invalid(format!("catalog has no videos for profile {profile}")));
        }
        for w in 0..params.walks_per_profile {
            let stream = (p * params.walks_per_profile + w) as u64;
            let mut rng = stream_rng(params.seed, stream);
            let mut user = UserState::random(catalog, params.h, &mut rng);
            let mut hops = Vec::with_capacity(params.depth + 1);
            let recs = recommend_indices(&user, catalog, params.y, &mut rng)?;
            hops.push(Hop {
                watched: None,
                recommendations: to_vector(catalog, &recs),
            });
            for hop in 1..=params.depth {
                let watched = if hop == 1 {
                    let pool: Vec<u32> = (0..catalog.size() as u32)
                        .filter(|&i| catalog.is_attractor(i) == *starts_in_b)
                        .collect();
                    pool[rng.random_range(0..pool.len())]
                } else {
                    let prev = recommend_indices(&user, catalog, params.y, &mut rng)?;
                    prev[rng.random_range(0..prev.len())]
                };
                user.watch(watched, params.eviction, &mut rng);
                let recs = recommend_indices(&user, catalog, params.y, &mut rng)?;
                hops.push(Hop {
                    watched: Some(catalog.id(watched).clone()),
                    recommendations: to_vector(catalog, &recs),
                });
            }
            walks.push(Walk {
                walk_id: format!("{profile}-{w:03}"),
                profile: profile.clone(),
                hops,
                label: Some(profile.clone()),
            });
        }
    }
    WalkSet::from_walks(walks)
}

fn to_vector(catalog: &Catalog, indices: &[u32]) -> RecVector {
    RecVector::from_ids(indices.iter().map(|&i| catalog.id(i).clone()))
}
