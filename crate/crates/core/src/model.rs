//! Two-type feedback-loop recommender and its discrete-time simulation.
//!
//! The catalog is split into attractor videos (B) and the rest (A). A user's
//! history holds the last `h` watched videos; the recommender serves an
//! attractor with probability equal to the attractor share of that history,
//! and the user always watches one of the recommended videos.
//!
//! Every user owns a ChaCha8 stream keyed by `(seed, user index)`, so a trace
//! only depends on the parameters and never on thread scheduling.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorspace::{RecVector, VideoId};

/// Stream for one simulated entity.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct Catalog {
    ids: Vec<VideoId>,
    is_attractor: Vec<bool>,
    index: HashMap<VideoId, u32>,
    attractors: Vec<u32>,
    mainstream: Vec<u32>,
}

impl Catalog {
    /// Catalog of `v` videos named `v0000`, `v0001`, ...; the first `b` are attractors.
    pub fn uniform(v: usize, b: usize) -> Result<Self> {
        if v == 0 {
            return Err(Error::invalid("catalog must contain at least one video"));
        }
        if b > v {
            return Err(Error::invalid(format!("attractor count {b} exceeds catalog size {v}")));
        }
        let width = (v.max(2) - 1).to_string().len().max(4);
        let ids: Vec<VideoId> = (0..v)
            .map(|i| VideoId::new(format!("v{i:0width$}")).expect("non-empty"))
            .collect();
        let attractors: Vec<VideoId> = ids[..b].to_vec();
        Self::with_attractors(ids, &attractors)
    }

    pub fn with_attractors(ids: Vec<VideoId>, attractor_ids: &[VideoId]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::invalid("catalog must contain at least one video"));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i as u32).is_some() {
                return Err(Error::invalid(format!("duplicate catalog id {id}")));
            }
        }
        let mut is_attractor = vec![false; ids.len()];
        for id in attractor_ids {
            let &i = index
                .get(id)
                .ok_or_else(|| Error::invalid(format!("attractor {id} is not in the catalog")))?;
            if is_attractor[i as usize] {
                return Err(Error::invalid(format!("duplicate attractor id {id}")));
            }
            is_attractor[i as usize] = true;
        }
        let attractors = (0..ids.len() as u32).filter(|&i| is_attractor[i as usize]).collect();
        let mainstream = (0..ids.len() as u32).filter(|&i| !is_attractor[i as usize]).collect();
        Ok(Catalog {
            ids,
            is_attractor,
            index,
            attractors,
            mainstream,
        })
    }

    /// Total video count `v`.
    pub fn size(&self) -> usize {
        self.ids.len()
    }

    /// Attractor count `b`.
    pub fn attractor_count(&self) -> usize {
        self.attractors.len()
    }

    pub fn id(&self, index: u32) -> &VideoId {
        &self.ids[index as usize]
    }

    pub fn index_of(&self, id: &VideoId) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn is_attractor(&self, index: u32) -> bool {
        self.is_attractor[index as usize]
    }

    pub fn attractor_ids(&self) -> impl Iterator<Item = &VideoId> {
        self.attractors.iter().map(|&i| self.id(i))
    }

    fn to_rec_vector(&self, indices: &[u32]) -> RecVector {
        RecVector::from_ids(indices.iter().map(|&i| self.id(i).clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eviction {
    /// Drop the oldest entry.
    #[default]
    Fifo,
    /// Drop a uniformly chosen entry of the current history.
    Random,
}

impl FromStr for Eviction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fifo" => Ok(Eviction::Fifo),
            "random" => Ok(Eviction::Random),
            other => Err(Error::invalid(format!("unknown eviction policy '{other}'"))),
        }
    }
}

impl fmt::Display for Eviction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Eviction::Fifo => "fifo",
            Eviction::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimParams {
    pub n: usize,
    pub y: usize,
    pub h: usize,
    pub rounds: usize,
    pub eviction: Eviction,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            n: 100,
            y: 50,
            h: 10,
            rounds: 50,
            eviction: Eviction::Fifo,
            seed: 1,
        }
    }
}

impl SimParams {
    pub fn validate(&self, catalog: &Catalog) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be >= 1"));
        }
        if self.h == 0 {
            return Err(Error::invalid("h must be >= 1"));
        }
        if self.y == 0 || self.y > catalog.size() {
            return Err(Error::invalid(format!(
                "y must lie in 1..={}, got {}",
                catalog.size(),
                self.y
            )));
        }
        Ok(())
    }
}

/// Ordered watch history, oldest first, holding catalog indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserState {
    history: VecDeque<u32>,
}

impl UserState {
    /// `h` videos drawn uniformly with replacement from the whole catalog.
    pub fn random<R: Rng + ?Sized>(catalog: &Catalog, h: usize, rng: &mut R) -> Self {
        let v = catalog.size() as u32;
        UserState {
            history: (0..h).map(|_| rng.random_range(0..v)).collect(),
        }
    }

    pub fn from_history(ids: &[VideoId], catalog: &Catalog) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::invalid("history must be non-empty"));
        }
        let history = ids
            .iter()
            .map(|id| {
                catalog
                    .index_of(id)
                    .ok_or_else(|| Error::invalid(format!("{id} is not in the catalog")))
            })
            .collect::<Result<_>>()?;
        Ok(UserState { history })
    }

    /// History with the given type pattern, oldest first (`true` = attractor).
    /// Uses the first video of each type.
    pub fn from_types(types: &[bool], catalog: &Catalog) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::invalid("history must be non-empty"));
        }
        let history = types
            .iter()
            .map(|&is_b| {
                let pool = if is_b { &catalog.attractors } else { &catalog.mainstream };
                pool.first().copied().ok_or_else(|| {
                    Error::invalid(if is_b {
                        "catalog has no attractors"
                    } else {
                        "catalog has no mainstream videos"
                    })
                })
            })
            .collect::<Result<_>>()?;
        Ok(UserState { history })
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn history<'c>(&self, catalog: &'c Catalog) -> Vec<&'c VideoId> {
        self.history.iter().map(|&i| catalog.id(i)).collect()
    }

    /// Number of history entries in B.
    pub fn attractor_count(&self, catalog: &Catalog) -> usize {
        self.history.iter().filter(|&&i| catalog.is_attractor(i)).count()
    }

    /// Attractor share of the history.
    pub fn p_b(&self, catalog: &Catalog) -> f64 {
        self.attractor_count(catalog) as f64 / self.history.len() as f64
    }

    /// Appends `video` and evicts one entry according to `eviction`.
    pub fn watch<R: Rng + ?Sized>(&mut self, video: u32, eviction: Eviction, rng: &mut R) {
        match eviction {
            Eviction::Fifo => {
                self.history.pop_front();
            }
            Eviction::Random => {
                let at = rng.random_range(0..self.history.len());
                self.history.remove(at);
            }
        }
        self.history.push_back(video);
    }
}

/// Draws `y` distinct catalog indices: attractor slots first, then mainstream ones.
pub fn recommend_indices<R: Rng + ?Sized>(
    user: &UserState,
    catalog: &Catalog,
    y: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    let b = catalog.attractor_count();
    let a = catalog.size() - b;
    let k_b = user.attractor_count(catalog);
    let p = k_b as f64 / user.len() as f64;

    let k = if k_b == 0 {
        if y > a {
            return Err(Error::invalid(format!(
                "{y} recommendations requested but only {a} mainstream videos"
            )));
        }
        0
    } else if k_b == user.len() {
        if y > b {
            return Err(Error::invalid(format!(
                "{y} recommendations requested but only {b} attractors"
            )));
        }
        y
    } else {
        if y > a + b {
            return Err(Error::invalid(format!(
                "{y} recommendations exceed catalog size {}",
                a + b
            )));
        }
        let binom = Binomial::new(y as u64, p).expect("p in [0, 1]");
        let mut attempts = 0u32;
        loop {
            let k = binom.sample(rng) as usize;
            if k <= b && y - k <= a {
                break k;
            }
            attempts += 1;
            if attempts >= 1_000_000 {
                return Err(Error::invalid("could not draw a feasible attractor split"));
            }
        }
    };

    let mut recs = Vec::with_capacity(y);
    recs.extend(sample(rng, b, k).into_iter().map(|i| catalog.attractors[i]));
    recs.extend(sample(rng, a, y - k).into_iter().map(|i| catalog.mainstream[i]));
    Ok(recs)
}

/// One binary recommendation set of `y` distinct videos.
pub fn recommend<R: Rng + ?Sized>(user: &UserState, catalog: &Catalog, y: usize, rng: &mut R) -> Result<RecVector> {
    recommend_indices(user, catalog, y, rng).map(|recs| catalog.to_rec_vector(&recs))
}

/// Watches one recommended video and updates the history.
///
/// The watched video is uniform over list positions, so a video recommended
/// twice is twice as likely to be picked.
pub fn step<R: Rng + ?Sized>(
    mut user: UserState,
    recs: &RecVector,
    catalog: &Catalog,
    eviction: Eviction,
    rng: &mut R,
) -> Result<UserState> {
    let total = recs.total();
    if total == 0 {
        return Err(Error::Empty("step needs at least one recommendation"));
    }
    let mut pick = rng.random_range(0..total);
    let mut watched = None;
    for (id, c) in recs.iter() {
        if pick < u64::from(c) {
            watched = Some(id);
            break;
        }
        pick -= u64::from(c);
    }
    let id = watched.expect("pick < total");
    let index = catalog
        .index_of(id)
        .ok_or_else(|| Error::invalid(format!("recommended video {id} is not in the catalog")))?;
    user.watch(index, eviction, rng);
    Ok(user)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RhLabel {
    /// Never recommended attractors.
    #[serde(rename = "U_A")]
    Mainstream,
    /// Only recommended attractors.
    #[serde(rename = "U_B")]
    RabbitHole,
    /// Still recommended both types.
    #[serde(rename = "U_AB")]
    Mixed,
}

impl RhLabel {
    pub fn from_count(attractors: usize, h: usize) -> Self {
        if attractors == 0 {
            RhLabel::Mainstream
        } else if attractors == h {
            RhLabel::RabbitHole
        } else {
            RhLabel::Mixed
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RhLabel::Mainstream => "U_A",
            RhLabel::RabbitHole => "U_B",
            RhLabel::Mixed => "U_AB",
        }
    }

    pub fn is_absorbed(&self) -> bool {
        !matches!(self, RhLabel::Mixed)
    }
}

impl fmt::Display for RhLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RhLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "U_A" => Ok(RhLabel::Mainstream),
            "U_B" => Ok(RhLabel::RabbitHole),
            "U_AB" => Ok(RhLabel::Mixed),
            other => Err(Error::invalid(format!("unknown RH label '{other}'"))),
        }
    }
}

/// Attractor counts per user per round, plus the state after the last round.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub h: usize,
    pub rounds: usize,
    /// `counts[user][round]`, rounds `0..=rounds`; round 0 is the initial history.
    counts: Vec<Vec<u16>>,
    /// One fresh recommendation draw per user from the final history.
    pub final_recommendations: Vec<RecVector>,
    pub final_labels: Vec<RhLabel>,
}

impl SimTrace {
    pub fn users(&self) -> usize {
        self.counts.len()
    }

    pub fn attractor_count(&self, round: usize, user: usize) -> usize {
        usize::from(self.counts[user][round])
    }

    pub fn p_b(&self, round: usize, user: usize) -> f64 {
        self.attractor_count(round, user) as f64 / self.h as f64
    }

    /// p_B trajectory of one user over rounds `0..=rounds`.
    pub fn trajectory(&self, user: usize) -> Vec<f64> {
        self.counts[user]
            .iter()
            .map(|&c| f64::from(c) / self.h as f64)
            .collect()
    }

    pub fn labels_at(&self, round: usize) -> Vec<RhLabel> {
        (0..self.users())
            .map(|u| RhLabel::from_count(self.attractor_count(round, u), self.h))
            .collect()
    }

    pub fn fraction_with(&self, round: usize, label: RhLabel) -> f64 {
        let hits = self.labels_at(round).into_iter().filter(|&l| l == label).count();
        hits as f64 / self.users() as f64
    }

    /// Fraction of users with p_B in {0, 1} at `round`.
    pub fn absorbed_fraction(&self, round: usize) -> f64 {
        let hits = self.labels_at(round).into_iter().filter(RhLabel::is_absorbed).count();
        hits as f64 / self.users() as f64
    }

    /// CSV with header `round,user,p_B`, ordered by round then user.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "user", "p_B"])?;
        for round in 0..=self.rounds {
            for user in 0..self.users() {
                w.write_record([round.to_string(), user.to_string(), self.p_b(round, user).to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("trace csv", e))?;
        Ok(())
    }

    /// CSV with header `user,label`.
    pub fn write_labels_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["user", "label"])?;
        for (user, label) in self.final_labels.iter().enumerate() {
            w.write_record([user.to_string(), label.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("labels csv", e))?;
        Ok(())
    }
}

struct UserRun {
    counts: Vec<u16>,
    final_recs: Vec<u32>,
    final_count: usize,
}

fn run_user(params: &SimParams, catalog: &Catalog, user: usize) -> Result<UserRun> {
    let mut rng = stream_rng(params.seed, user as u64);
    let mut state = UserState::random(catalog, params.h, &mut rng);
    let mut counts = Vec::with_capacity(params.rounds + 1);
    counts.push(state.attractor_count(catalog) as u16);
    for _ in 0..params.rounds {
        let recs = recommend_indices(&state, catalog, params.y, &mut rng)?;
        let watched = recs[rng.random_range(0..recs.len())];
        state.watch(watched, params.eviction, &mut rng);
        counts.push(state.attractor_count(catalog) as u16);
    }
    let final_recs = recommend_indices(&state, catalog, params.y, &mut rng)?;
    Ok(UserRun {
        counts,
        final_recs,
        final_count: state.attractor_count(catalog),
    })
}

/// Runs `params.rounds` rounds of recommend-then-watch for every user.
pub fn simulate(params: &SimParams, catalog: &Catalog) -> Result<SimTrace> {
    params.validate(catalog)?;
    if params.h > usize::from(u16::MAX) {
        return Err(Error::invalid("h must fit in 16 bits"));
    }
    let runs: Vec<UserRun> = (0..params.n)
        .into_par_iter()
        .map(|u| run_user(params, catalog, u))
        .collect::<Result<_>>()?;

    let mut counts = Vec::with_capacity(runs.len());
    let mut final_recommendations = Vec::with_capacity(runs.len());
    let mut final_labels = Vec::with_capacity(runs.len());
    for run in runs {
        final_labels.push(RhLabel::from_count(run.final_count, params.h));
        final_recommendations.push(catalog.to_rec_vector(&run.final_recs));
        counts.push(run.counts);
    }
    Ok(SimTrace {
        h: params.h,
        rounds: params.rounds,
        counts,
        final_recommendations,
        final_labels,
    })
}

/// Outcome of following one user until p_B hits 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Absorption {
    /// True when the user ended with p_B = 1.
    pub trapped: bool,
    pub steps: u64,
}

/// Runs one user until absorption, or returns `None` after `max_steps`.
pub fn run_to_absorption<R: Rng + ?Sized>(
    mut user: UserState,
    catalog: &Catalog,
    y: usize,
    eviction: Eviction,
    max_steps: u64,
    rng: &mut R,
) -> Result<Option<Absorption>> {
    let h = user.len();
    let mut steps = 0u64;
    loop {
        let k = user.attractor_count(catalog);
        if k == 0 || k == h {
            return Ok(Some(Absorption { trapped: k == h, steps }));
        }
        if steps >= max_steps {
            return Ok(None);
        }
        let recs = recommend_indices(&user, catalog, y, rng)?;
        let watched = recs[rng.random_range(0..recs.len())];
        user.watch(watched, eviction, rng);
        steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_catalog() -> Catalog {
        Catalog::uniform(1000, 100).unwrap()
    }

    fn typed(pattern: &[bool]) -> (Catalog, UserState) {
        let c = reference_catalog();
        let u = UserState::from_types(pattern, &c).unwrap();
        (c, u)
    }

    #[test]
    fn catalog_shape() {
        let c = reference_catalog();
        assert_eq!(c.size(), 1000);
        assert_eq!(c.attractor_count(), 100);
        assert_eq!(c.attractor_ids().count(), 100);
        assert!(Catalog::uniform(10, 11).is_err());
        assert!(Catalog::uniform(0, 0).is_err());
        let ids = vec![VideoId::new("x").unwrap(), VideoId::new("x").unwrap()];
        assert!(Catalog::with_attractors(ids, &[]).is_err());
    }

    #[test]
    fn p_b_half() {
        let mut pattern = vec![true; 5];
        pattern.extend([false; 5]);
        let (c, u) = typed(&pattern);
        assert_eq!(u.p_b(&c), 0.5);
    }

    #[test]
    fn p_b_boundaries() {
        let (c, u) = typed(&[false; 10]);
        assert_eq!(u.p_b(&c), 0.0);
        let (c, u) = typed(&[true; 10]);
        assert_eq!(u.p_b(&c), 1.0);
    }

    #[test]
    fn recommend_degenerate_types() {
        let mut rng = stream_rng(3, 0);
        let (c, u) = typed(&[false; 10]);
        let r = recommend(&u, &c, 50, &mut rng).unwrap();
        assert_eq!(r.len(), 50);
        assert!(r.is_binary());
        assert!(r.ids().all(|id| !c.is_attractor(c.index_of(id).unwrap())));

        let (c, u) = typed(&[true; 10]);
        let r = recommend(&u, &c, 50, &mut rng).unwrap();
        assert!(r.ids().all(|id| c.is_attractor(c.index_of(id).unwrap())));
    }

    #[test]
    fn recommend_binomial_mean() {
        let mut pattern = vec![true; 5];
        pattern.extend([false; 5]);
        let (c, u) = typed(&pattern);
        let mut rng = stream_rng(11, 0);
        let draws = 10_000;
        let mut total = 0usize;
        for _ in 0..draws {
            let recs = recommend_indices(&u, &c, 50, &mut rng).unwrap();
            let mut sorted = recs.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 50);
            total += recs.iter().filter(|&&i| c.is_attractor(i)).count();
        }
        let mean = total as f64 / draws as f64;
        // sd of the mean is sqrt(12.5 / 1e4) ~ 0.035
        assert!((mean - 25.0).abs() < 0.5, "mean {mean}");
    }

    #[test]
    fn recommend_infeasible_is_error() {
        let c = Catalog::uniform(20, 5).unwrap();
        let u = UserState::from_types(&[true; 4], &c).unwrap();
        let mut rng = stream_rng(0, 0);
        assert!(recommend(&u, &c, 6, &mut rng).is_err());
        let u = UserState::from_types(&[false; 4], &c).unwrap();
        assert!(recommend(&u, &c, 16, &mut rng).is_err());
        assert!(recommend(&u, &c, 15, &mut rng).is_ok());
    }

    #[test]
    fn recommend_rejects_infeasible_splits() {
        // y = 8 with b = 3 and a = 7: k must be in 1..=3.
        let c = Catalog::uniform(10, 3).unwrap();
        let u = UserState::from_types(&[true, false], &c).unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..500 {
            let recs = recommend_indices(&u, &c, 8, &mut rng).unwrap();
            let k = recs.iter().filter(|&&i| c.is_attractor(i)).count();
            assert!((1..=3).contains(&k));
        }
    }

    #[test]
    fn step_fifo_with_attractor_recs() {
        let mut pattern = vec![false];
        pattern.extend([true; 3]);
        pattern.extend([false; 6]);
        let (c, u) = typed(&pattern);
        let before = u.attractor_count(&c);
        let recs = RecVector::from_ids(c.attractor_ids().take(5).cloned());
        let mut rng = stream_rng(0, 0);
        let after = step(u, &recs, &c, Eviction::Fifo, &mut rng).unwrap();
        assert_eq!(after.attractor_count(&c), before + 1);
        assert_eq!(after.len(), 10);
    }

    #[test]
    fn step_single_entry() {
        let (c, u) = typed(&[false; 10]);
        let target = c.id(999).clone();
        let recs = RecVector::from_ids([target.clone()]);
        let mut rng = stream_rng(0, 0);
        let after = step(u, &recs, &c, Eviction::Random, &mut rng).unwrap();
        assert_eq!(*after.history(&c).last().unwrap(), &target);
    }

    #[test]
    fn step_random_eviction_changes_by_at_most_one() {
        let mut rng = stream_rng(9, 0);
        let c = reference_catalog();
        let mut u = UserState::random(&c, 10, &mut rng);
        for _ in 0..2000 {
            let before = u.attractor_count(&c) as i64;
            let mix: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
            let probe = UserState::from_types(&mix, &c).unwrap();
            let recs = recommend(&probe, &c, 20, &mut rng).unwrap();
            u = step(u, &recs, &c, Eviction::Random, &mut rng).unwrap();
            let delta = u.attractor_count(&c) as i64 - before;
            assert!((-1..=1).contains(&delta));
            assert_eq!(u.len(), 10);
        }
    }

    #[test]
    fn step_unknown_video_is_error() {
        let (c, u) = typed(&[false; 3]);
        let recs = RecVector::from_ids([VideoId::new("nope").unwrap()]);
        let mut rng = stream_rng(0, 0);
        assert!(step(u, &recs, &c, Eviction::Fifo, &mut rng).is_err());
        let (_, u) = typed(&[false; 3]);
        assert!(step(u, &RecVector::new(), &c, Eviction::Fifo, &mut rng).is_err());
    }

    #[test]
    fn simulate_zero_rounds() {
        let params = SimParams {
            rounds: 0,
            ..SimParams::default()
        };
        let t = simulate(&params, &reference_catalog()).unwrap();
        assert_eq!(t.users(), 100);
        assert_eq!(t.trajectory(0).len(), 1);
        assert_eq!(t.final_labels, t.labels_at(0));
    }

    #[test]
    fn simulate_all_attractors() {
        let c = Catalog::uniform(200, 200).unwrap();
        let params = SimParams {
            rounds: 5,
            ..SimParams::default()
        };
        let t = simulate(&params, &c).unwrap();
        for u in 0..t.users() {
            assert!(t.trajectory(u).iter().all(|&p| p == 1.0));
        }
    }

    #[test]
    fn simulate_deterministic_and_absorbing() {
        let params = SimParams {
            rounds: 200,
            seed: 42,
            ..SimParams::default()
        };
        let c = reference_catalog();
        let a = simulate(&params, &c).unwrap();
        let b = simulate(&params, &c).unwrap();
        assert_eq!(a, b);
        for u in 0..a.users() {
            let traj = a.trajectory(u);
            if let Some(first) = traj.iter().position(|&p| p == 0.0 || p == 1.0) {
                assert!(traj[first..].iter().all(|&p| p == traj[first]));
            }
            for p in traj {
                let scaled = p * 10.0;
                assert!((scaled - scaled.round()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn simulate_rejects_bad_params() {
        let c = reference_catalog();
        for bad in [
            SimParams {
                n: 0,
                ..SimParams::default()
            },
            SimParams {
                h: 0,
                ..SimParams::default()
            },
            SimParams {
                y: 0,
                ..SimParams::default()
            },
            SimParams {
                y: 1001,
                ..SimParams::default()
            },
        ] {
            assert!(simulate(&bad, &c).is_err());
        }
    }

    #[test]
    fn trace_csv_layout() {
        let params = SimParams {
            n: 3,
            rounds: 2,
            ..SimParams::default()
        };
        let t = simulate(&params, &reference_catalog()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "round,user,p_B");
        assert_eq!(lines.len(), 1 + 3 * 3);
        assert!(lines[1].starts_with("0,0,"));
        assert!(lines[9].starts_with("2,2,"));
    }

    #[test]
    fn eviction_parse() {
        assert_eq!("FIFO".parse::<Eviction>().unwrap(), Eviction::Fifo);
        assert_eq!("random".parse::<Eviction>().unwrap(), Eviction::Random);
        assert!("lru".parse::<Eviction>().is_err());
    }
}
