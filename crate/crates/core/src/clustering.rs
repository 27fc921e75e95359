//! Clustering of recommendation vectors and partition agreement metrics.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;
use std::io::Write;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::model::stream_rng;
use crate::vectorspace::{MeanVector, SparseVector, VideoId};

/// Restart count used when none is given.
pub const DEFAULT_RESTARTS: usize = 25;
/// Lloyd iteration cap per restart.
pub const MAX_LLOYD_ITERATIONS: usize = 300;

/// Cluster labels `1..=k`, numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
}

impl Partition {
    /// Relabels arbitrary keys to `1..=k` in order of first appearance.
    pub fn from_labels<T: Eq + Hash + Clone>(keys: &[T]) -> Self {
        let mut seen: HashMap<T, usize> = HashMap::new();
        let labels = keys
            .iter()
            .map(|key| {
                let next = seen.len() + 1;
                *seen.entry(key.clone()).or_insert(next)
            })
            .collect();
        Partition { labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of clusters.
    pub fn k(&self) -> usize {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l - 1] += 1;
        }
        sizes
    }

    /// CSV with header `item,label`.
    pub fn write_csv<W: Write>(&self, items: &[String], out: W) -> Result<()> {
        if items.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: items.len(),
                right: self.len(),
            });
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["item", "label"])?;
        for (item, label) in items.iter().zip(&self.labels) {
            w.write_record([item.as_str(), &label.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("partition csv", e))?;
        Ok(())
    }
}

struct PairCounts {
    pairs: i128,
    together_both: i128,
    together_a: i128,
    together_b: i128,
}

fn choose2(x: usize) -> i128 {
    let x = x as i128;
    x * (x - 1) / 2
}

fn pair_counts(a: &Partition, b: &Partition) -> Result<PairCounts> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut table: HashMap<(usize, usize), usize> = HashMap::new();
    for (&x, &y) in a.labels.iter().zip(&b.labels) {
        *table.entry((x, y)).or_insert(0) += 1;
    }
    Ok(PairCounts {
        pairs: choose2(a.len()),
        together_both: table.values().map(|&c| choose2(c)).sum(),
        together_a: a.sizes().into_iter().map(choose2).sum(),
        together_b: b.sizes().into_iter().map(choose2).sum(),
    })
}

/// Fraction of item pairs on which the two partitions agree. 1 for fewer than two items.
pub fn rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    let c = pair_counts(a, b)?;
    if c.pairs == 0 {
        return Ok(1.0);
    }
    let apart_both = c.pairs - c.together_a - c.together_b + c.together_both;
    Ok((c.together_both + apart_both) as f64 / c.pairs as f64)
}

/// Chance-corrected Rand index under the permutation model.
///
/// When the maximum index equals its expectation the ratio is undefined;
/// the result is then 1 for identical partitions and 0 otherwise.
pub fn adjusted_rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    let c = pair_counts(a, b)?;
    // (index - expected) / (max - expected), both scaled by 2 * pairs.
    let cross = 2 * c.together_a * c.together_b;
    let num = 2 * c.together_both * c.pairs - cross;
    let den = (c.together_a + c.together_b) * c.pairs - cross;
    if den == 0 {
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    Ok(num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub partition: Partition,
    /// Centroid `j` belongs to label `j + 1`.
    pub centroids: Vec<MeanVector>,
    pub within_ss: f64,
    pub between_ss: f64,
    pub total_ss: f64,
    /// Restart that produced this result.
    pub restart: usize,
    pub iterations: usize,
}

impl KMeansResult {
    /// BetweenSS / TotalSS; 0 when the data has no spread.
    pub fn between_ratio(&self) -> f64 {
        if self.total_ss > 0.0 {
            (self.between_ss / self.total_ss).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

struct Dataset {
    dims: Vec<VideoId>,
    items: Vec<Vec<(usize, f64)>>,
    norms: Vec<f64>,
}

impl Dataset {
    fn new<V: SparseVector>(vs: &[V]) -> Result<Self> {
        let mut index: BTreeMap<&VideoId, usize> = BTreeMap::new();
        for v in vs {
            for (id, _) in v.entries() {
                index.entry(id).or_insert(0);
            }
        }
        for (i, slot) in index.values_mut().enumerate() {
            *slot = i;
        }
        let items: Vec<Vec<(usize, f64)>> = vs
            .iter()
            .map(|v| {
                v.entries()
                    .filter(|(_, w)| *w != 0.0)
                    .map(|(id, w)| (index[id], w))
                    .collect()
            })
            .collect();
        if let Some(i) = items.iter().position(Vec::is_empty) {
            return Err(Error::ZeroVectorAt(i));
        }
        let norms = items.iter().map(|x| x.iter().map(|(_, w)| w * w).sum()).collect();
        let dims = index.into_keys().cloned().collect();
        Ok(Dataset { dims, items, norms })
    }

    fn dim(&self) -> usize {
        self.dims.len()
    }

    /// Mean of `members`, dense, plus its support.
    fn mean_of(&self, members: &[usize]) -> Center {
        let mut dense = vec![0.0; self.dim()];
        for &i in members {
            for &(d, w) in &self.items[i] {
                dense[d] += w;
            }
        }
        let n = members.len() as f64;
        let mut support = Vec::new();
        for (d, x) in dense.iter_mut().enumerate() {
            if *x != 0.0 {
                *x /= n;
                support.push(d);
            }
        }
        let norm = support.iter().map(|&d| dense[d] * dense[d]).sum();
        Center { dense, support, norm }
    }

    fn center_of_item(&self, i: usize) -> Center {
        self.mean_of(&[i])
    }

    fn sq_dist_fast(&self, i: usize, c: &Center) -> f64 {
        let dot: f64 = self.items[i].iter().map(|&(d, w)| w * c.dense[d]).sum();
        (self.norms[i] - 2.0 * dot + c.norm).max(0.0)
    }

    /// Sum of squared deviations of `members` around `c`, accumulated per dimension.
    /// Assumes the support of every member lies inside `c.support`.
    fn scatter(&self, members: &[usize], c: &Center, dev: &mut [f64], nnz: &mut [usize]) -> f64 {
        for &i in members {
            for &(d, w) in &self.items[i] {
                let delta = w - c.dense[d];
                dev[d] += delta * delta;
                nnz[d] += 1;
            }
        }
        let n = members.len();
        let mut total = 0.0;
        for &d in &c.support {
            total += (n - nnz[d]) as f64 * c.dense[d] * c.dense[d] + dev[d];
            dev[d] = 0.0;
            nnz[d] = 0;
        }
        total
    }
}

#[derive(Clone)]
struct Center {
    dense: Vec<f64>,
    support: Vec<usize>,
    norm: f64,
}

struct Run {
    assignment: Vec<usize>,
    centers: Vec<Center>,
    within: f64,
    iterations: usize,
}

fn members_by_cluster(assignment: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); k];
    for (i, &c) in assignment.iter().enumerate() {
        groups[c].push(i);
    }
    groups
}

fn nearest(data: &Dataset, i: usize, centers: &[Center]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = data.sq_dist_fast(i, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn lloyd(data: &Dataset, k: usize, seed: u64, restart: usize) -> Run {
    let n = data.items.len();
    let mut rng = stream_rng(seed, restart as u64);
    let mut centers: Vec<Center> = sample(&mut rng, n, k)
        .into_iter()
        .map(|i| data.center_of_item(i))
        .collect();
    let mut assignment = vec![usize::MAX; n];
    let mut iterations = 0;

    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        let next: Vec<(usize, f64)> = (0..n).map(|i| nearest(data, i, &centers)).collect();
        let changed = next.iter().zip(&assignment).any(|(&(c, _), &old)| c != old);
        let mut dists: Vec<f64> = next.iter().map(|&(_, d)| d).collect();
        assignment = next.into_iter().map(|(c, _)| c).collect();
        if !changed {
            break;
        }

        // Empty clusters take the point farthest from its centroid.
        let mut groups = members_by_cluster(&assignment, k);
        for j in 0..k {
            if !groups[j].is_empty() {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| groups[assignment[i]].len() > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                .expect("k <= n leaves a cluster with two members");
            let from = assignment[donor];
            groups[from].retain(|&i| i != donor);
            groups[j].push(donor);
            assignment[donor] = j;
            dists[donor] = 0.0;
        }
        centers = groups.iter().map(|g| data.mean_of(g)).collect();
    }

    let groups = members_by_cluster(&assignment, k);
    centers = groups.iter().map(|g| data.mean_of(g)).collect();
    let mut dev = vec![0.0; data.dim()];
    let mut nnz = vec![0; data.dim()];
    let within = groups
        .iter()
        .zip(&centers)
        .map(|(g, c)| data.scatter(g, c, &mut dev, &mut nnz))
        .sum();
    Run {
        assignment,
        centers,
        within,
        iterations,
    }
}

/// Lloyd's k-means with `restarts` random initializations; the lowest
/// within-cluster sum of squares wins, ties going to the earliest restart.
///
/// Restart `r` draws its initial centroids from the ChaCha8 stream `(seed, r)`.
pub fn kmeans<V: SparseVector>(vs: &[V], k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    if vs.is_empty() {
        return Err(Error::Empty("k-means input"));
    }
    if k == 0 || k > vs.len() {
        return Err(Error::invalid(format!("k must lie in 1..={}, got {k}", vs.len())));
    }
    if restarts == 0 {
        return Err(Error::invalid("restarts must be >= 1"));
    }
    let data = Dataset::new(vs)?;

    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|r| lloyd(&data, k, seed, r))
        .collect();
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.within < a.1.within { b } else { a })
        .expect("restarts >= 1");

    let all: Vec<usize> = (0..data.items.len()).collect();
    let grand = data.mean_of(&all);
    let mut dev = vec![0.0; data.dim()];
    let mut nnz = vec![0; data.dim()];
    let total_ss = data.scatter(&all, &grand, &mut dev, &mut nnz);

    let groups = members_by_cluster(&best.assignment, k);
    let between_ss = groups
        .iter()
        .zip(&best.centers)
        .map(|(g, c)| {
            let sq: f64 = grand
                .support
                .iter()
                .map(|&d| {
                    let delta = c.dense[d] - grand.dense[d];
                    delta * delta
                })
                .sum();
            g.len() as f64 * sq
        })
        .sum();

    // Renumber clusters by first appearance so the partition is canonical.
    let partition = Partition::from_labels(&best.assignment);
    let mut order = vec![usize::MAX; k];
    for (&raw, &label) in best.assignment.iter().zip(partition.labels()) {
        order[label - 1] = raw;
    }
    let centroids = order
        .iter()
        .map(|&raw| {
            let c = &best.centers[raw];
            MeanVector::from_weights(c.support.iter().map(|&d| (data.dims[d].clone(), c.dense[d])))
        })
        .collect::<Result<_>>()?;

    Ok(KMeansResult {
        partition,
        centroids,
        within_ss: best.within,
        between_ss,
        total_ss,
        restart,
        iterations: best.iterations,
    })
}

/// How similarities become Ward input distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WardDistance {
    /// `1 - cosine`.
    #[default]
    OneMinusCosine,
    /// Euclidean distance between the unit-normalized vectors, `sqrt(2 (1 - cosine))`.
    UnitEuclidean,
}

/// One agglomeration step. Items are clusters `0..n`; merge `i` creates cluster `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub items: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn max_height(&self) -> f64 {
        self.merges.iter().map(|m| m.height).fold(0.0, f64::max)
    }

    /// CSV with header `left,right,height`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["left", "right", "height"])?;
        for m in &self.merges {
            w.write_record([m.left.to_string(), m.right.to_string(), m.height.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("dendrogram csv", e))?;
        Ok(())
    }
}

/// Ward agglomeration over a similarity matrix.
pub fn ward_linkage(m: &SimilarityMatrix, distance: WardDistance) -> Result<Dendrogram> {
    let n = m.len();
    let d: Vec<f64> = (0..n * n)
        .map(|ix| {
            let s = m.get(ix / n, ix % n);
            match distance {
                WardDistance::OneMinusCosine => 1.0 - s,
                WardDistance::UnitEuclidean => (2.0 * (1.0 - s)).max(0.0).sqrt(),
            }
        })
        .collect();
    ward_linkage_distances(n, &d)
}

/// Ward agglomeration over a dense row-major distance matrix.
///
/// Uses the Lance-Williams recurrence on squared distances; reported heights
/// are square roots, matching the usual Euclidean-Ward convention.
pub fn ward_linkage_distances(n: usize, distances: &[f64]) -> Result<Dendrogram> {
    if n < 2 {
        return Err(Error::invalid("Ward linkage needs at least two items"));
    }
    if distances.len() != n * n {
        return Err(Error::LengthMismatch {
            left: distances.len(),
            right: n * n,
        });
    }
    let mut sq = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = distances[i * n + j];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "distance ({i},{j}) = {v} is not a finite non-negative value"
                )));
            }
            if (v - distances[j * n + i]).abs() > 1e-12 {
                return Err(Error::invalid(format!("distance matrix not symmetric at ({i},{j})")));
            }
            sq[i * n + j] = if i == j { 0.0 } else { v * v };
        }
    }

    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut cluster_id: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if active[j] && sq[i * n + j] < best.2 {
                    best = (i, j, sq[i * n + j]);
                }
            }
        }
        let (i, j, dij) = best;
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let updated = ((ni + nk) * sq[i * n + k] + (nj + nk) * sq[j * n + k] - nk * dij) / (ni + nj + nk);
            sq[i * n + k] = updated;
            sq[k * n + i] = updated;
        }
        let (a, b) = (cluster_id[i].min(cluster_id[j]), cluster_id[i].max(cluster_id[j]));
        size[i] += size[j];
        active[j] = false;
        cluster_id[i] = n + step;
        merges.push(Merge {
            left: a,
            right: b,
            height: dij.max(0.0).sqrt(),
            size: size[i],
        });
    }
    Ok(Dendrogram { items: n, merges })
}

/// Clusters formed by the merges strictly below `height`.
pub fn cut_dendrogram(t: &Dendrogram, height: f64) -> Partition {
    let n = t.items;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    // Representative item of every cluster id.
    let mut rep: Vec<usize> = (0..n).collect();
    for m in &t.merges {
        let (ra, rb) = (rep[m.left], rep[m.right]);
        rep.push(ra);
        if m.height < height {
            let (x, y) = (find(&mut parent, ra), find(&mut parent, rb));
            parent[y] = x;
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Partition::from_labels(&roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorspace::RecVector;

    fn rv(ids: &[usize]) -> RecVector {
        RecVector::from_ids(ids.iter().map(|i| VideoId::new(format!("v{i}")).unwrap()))
    }

    fn p(labels: &[usize]) -> Partition {
        Partition::from_labels(labels)
    }

    #[test]
    fn partition_normalizes() {
        let part = Partition::from_labels(&["b", "a", "b", "c"]);
        assert_eq!(part.labels(), &[1, 2, 1, 3]);
        assert_eq!(part.k(), 3);
        assert_eq!(part.sizes(), vec![2, 1, 1]);
    }

    #[test]
    fn rand_index_cases() {
        assert_eq!(rand_index(&p(&[1, 1, 2]), &p(&[1, 1, 2])).unwrap(), 1.0);
        assert!((rand_index(&p(&[1, 1, 2]), &p(&[1, 2, 2])).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rand_index(&p(&[1, 2, 1, 2]), &p(&[2, 1, 2, 1])).unwrap(), 1.0);
        assert!(rand_index(&p(&[1, 2]), &p(&[1])).is_err());
        assert_eq!(rand_index(&p(&[1]), &p(&[1])).unwrap(), 1.0);
    }

    #[test]
    fn ari_cases() {
        assert_eq!(adjusted_rand_index(&p(&[1, 1, 2, 3]), &p(&[4, 4, 5, 6])).unwrap(), 1.0);
        // index 0, expected 2*2/6, max 2
        let ari = adjusted_rand_index(&p(&[1, 1, 2, 2]), &p(&[1, 2, 1, 2])).unwrap();
        assert!((ari - (-0.5)).abs() < 1e-15, "{ari}");
        assert!(adjusted_rand_index(&p(&[1]), &p(&[1, 2])).is_err());
    }

    #[test]
    fn ari_degenerate() {
        assert_eq!(adjusted_rand_index(&p(&[1, 2, 3]), &p(&[3, 2, 1])).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&p(&[1, 1, 1]), &p(&[2, 2, 2])).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&p(&[1, 1, 1]), &p(&[1, 2, 3])).unwrap(), 0.0);
    }

    #[test]
    fn kmeans_singletons() {
        let vs = vec![rv(&[1, 2]), rv(&[2, 3]), rv(&[5]), rv(&[1, 7, 9])];
        let r = kmeans(&vs, 4, 5, 3).unwrap();
        assert_eq!(r.within_ss, 0.0);
        assert_eq!(r.between_ratio(), 1.0);
        assert_eq!(r.partition.k(), 4);
    }

    #[test]
    fn kmeans_single_cluster() {
        let vs = vec![rv(&[1, 2]), rv(&[2, 3]), rv(&[5]), rv(&[1, 7, 9])];
        let r = kmeans(&vs, 1, 3, 3).unwrap();
        assert_eq!(r.between_ss, 0.0);
        assert!((r.within_ss - r.total_ss).abs() <= 1e-12 * r.total_ss);
    }

    #[test]
    fn kmeans_errors() {
        let vs = vec![rv(&[1]), rv(&[2])];
        assert!(kmeans(&vs, 3, 1, 0).is_err());
        assert!(kmeans(&vs, 0, 1, 0).is_err());
        assert!(kmeans(&vs, 1, 0, 0).is_err());
        assert!(matches!(
            kmeans(&[rv(&[1]), RecVector::new()], 1, 1, 0),
            Err(Error::ZeroVectorAt(1))
        ));
        let none: Vec<RecVector> = vec![];
        assert!(kmeans(&none, 1, 1, 0).is_err());
    }

    #[test]
    fn kmeans_duplicates_force_empty_cluster_repair() {
        // Five identical points and one other: k=3 must still use every label.
        let mut vs = vec![rv(&[1, 2, 3]); 5];
        vs.push(rv(&[9]));
        let r = kmeans(&vs, 3, 4, 11).unwrap();
        assert_eq!(r.partition.k(), 3);
        assert!(r.partition.sizes().iter().all(|&s| s >= 1));
        let sum = r.within_ss + r.between_ss;
        assert!((sum - r.total_ss).abs() <= 1e-9 * r.total_ss);
    }

    #[test]
    fn kmeans_deterministic() {
        let vs: Vec<RecVector> = (0..30).map(|i| rv(&[i % 7, (i * 3) % 11 + 20, i % 5 + 40])).collect();
        let a = kmeans(&vs, 4, 10, 99).unwrap();
        let b = kmeans(&vs, 4, 10, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ward_two_items() {
        let m = SimilarityMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let t = ward_linkage(&m, WardDistance::OneMinusCosine).unwrap();
        assert_eq!(t.merges.len(), 1);
        assert!((t.merges[0].height - 0.7).abs() < 1e-12);
        assert_eq!((t.merges[0].left, t.merges[0].right, t.merges[0].size), (0, 1, 2));
    }

    #[test]
    fn ward_tight_pair_first() {
        let d = vec![0.0, 0.1, 0.9, 0.1, 0.0, 0.9, 0.9, 0.9, 0.0];
        let t = ward_linkage_distances(3, &d).unwrap();
        assert_eq!((t.merges[0].left, t.merges[0].right), (0, 1));
        assert_eq!((t.merges[1].left, t.merges[1].right), (2, 3));
        assert!(t.merges[1].height >= t.merges[0].height);
    }

    #[test]
    fn ward_rejects_bad_input() {
        assert!(ward_linkage_distances(1, &[0.0]).is_err());
        assert!(ward_linkage_distances(2, &[0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(ward_linkage_distances(2, &[0.0, -1.0, -1.0, 0.0]).is_err());
    }

    #[test]
    fn cut_extremes() {
        let d = vec![0.0, 0.1, 0.9, 0.1, 0.0, 0.9, 0.9, 0.9, 0.0];
        let t = ward_linkage_distances(3, &d).unwrap();
        assert_eq!(cut_dendrogram(&t, 0.0).k(), 3);
        assert_eq!(cut_dendrogram(&t, t.max_height() + 1.0).k(), 1);
        assert_eq!(cut_dendrogram(&t, 0.5).labels(), &[1, 1, 2]);
    }

    #[test]
    fn dendrogram_csv() {
        let d = vec![0.0, 0.5, 0.5, 0.0];
        let t = ward_linkage_distances(2, &d).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "left,right,height\n0,1,0.5\n");
    }
}
