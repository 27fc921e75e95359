//! Sparse recommendation vectors and the similarity primitives built on them.
//!
//! A recommendation snapshot is stored as a map from video ID to the number
//! of times that video appeared in the snapshot. List position is dropped.

use std::borrow::Borrow;
use std::collections::btree_map;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque platform video identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VideoId(String);

impl VideoId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::invalid("video id must be non-empty"));
        }
        Ok(VideoId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for VideoId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        VideoId::new(value)
    }
}

impl From<VideoId> for String {
    fn from(value: VideoId) -> Self {
        value.0
    }
}

impl Borrow<str> for VideoId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VideoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Read access shared by count vectors and mean vectors.
pub trait SparseVector {
    type Iter<'a>: Iterator<Item = (&'a VideoId, f64)>
    where
        Self: 'a;

    /// Nonzero entries in ascending ID order.
    fn entries(&self) -> Self::Iter<'_>;

    /// Weight of `id`, zero when absent.
    fn weight(&self, id: &VideoId) -> f64;

    /// Number of nonzero entries.
    fn support_len(&self) -> usize;

    fn norm_sq(&self) -> f64 {
        self.entries().map(|(_, w)| w * w).sum()
    }

    fn dot<V: SparseVector + ?Sized>(&self, other: &V) -> f64 {
        if self.support_len() <= other.support_len() {
            self.entries().map(|(id, w)| w * other.weight(id)).sum()
        } else {
            other.entries().map(|(id, w)| w * self.weight(id)).sum()
        }
    }
}

/// Counts of recommended videos in one snapshot. Every stored count is at least 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecVector {
    counts: BTreeMap<VideoId, u32>,
}

impl RecVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from a recommendation list; repeated IDs accumulate.
    pub fn from_ids<I>(ids: I) -> Self
    where
        I: IntoIterator<Item = VideoId>,
    {
        let mut v = RecVector::new();
        for id in ids {
            v.add(id, 1);
        }
        v
    }

    /// Zero counts are dropped.
    pub fn from_counts<I>(counts: I) -> Self
    where
        I: IntoIterator<Item = (VideoId, u32)>,
    {
        let mut v = RecVector::new();
        for (id, c) in counts {
            v.add(id, c);
        }
        v
    }

    pub fn add(&mut self, id: VideoId, count: u32) {
        if count > 0 {
            *self.counts.entry(id).or_insert(0) += count;
        }
    }

    pub fn count(&self, id: &str) -> u32 {
        self.counts.get(id).copied().unwrap_or(0)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.counts.contains_key(id)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    /// Sum of all counts, i.e. the length of the original list.
    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c)).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = &VideoId> {
        self.counts.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VideoId, u32)> {
        self.counts.iter().map(|(id, &c)| (id, c))
    }

    pub fn is_binary(&self) -> bool {
        self.counts.values().all(|&c| c == 1)
    }

    /// Multiplies every count by `factor`.
    pub fn scaled(&self, factor: u32) -> RecVector {
        RecVector::from_counts(self.iter().map(|(id, c)| (id.clone(), c * factor)))
    }

    /// Number of IDs present in both vectors.
    pub fn intersection_len(&self, other: &RecVector) -> usize {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.ids().filter(|id| large.contains(id.as_str())).count()
    }
}

pub struct RecIter<'a>(btree_map::Iter<'a, VideoId, u32>);

impl<'a> Iterator for RecIter<'a> {
    type Item = (&'a VideoId, f64);

    fn next(&mut self) -> Option<Self::Item> {
        self.0.next().map(|(id, &c)| (id, f64::from(c)))
    }
}

impl SparseVector for RecVector {
    type Iter<'a> = RecIter<'a>;

    fn entries(&self) -> RecIter<'_> {
        RecIter(self.counts.iter())
    }

    fn weight(&self, id: &VideoId) -> f64 {
        f64::from(self.count(id.as_str()))
    }

    fn support_len(&self) -> usize {
        self.counts.len()
    }
}

/// Real-valued average of recommendation vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanVector {
    weights: BTreeMap<VideoId, f64>,
}

impl MeanVector {
    /// Zero weights are dropped; negative or non-finite weights are rejected,
    /// as is an all-zero result.
    pub fn from_weights<I>(weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VideoId, f64)>,
    {
        let mut map = BTreeMap::new();
        for (id, w) in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(format!(
                    "weight for {id} must be finite and >= 0, got {w}"
                )));
            }
            if w > 0.0 {
                *map.entry(id).or_insert(0.0) += w;
            }
        }
        if map.is_empty() {
            return Err(Error::ZeroVector);
        }
        Ok(MeanVector { weights: map })
    }

    pub fn get(&self, id: &str) -> f64 {
        self.weights.get(id).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VideoId, f64)> {
        self.weights.iter().map(|(id, &w)| (id, w))
    }

    pub fn scaled(&self, factor: f64) -> Result<MeanVector> {
        MeanVector::from_weights(self.iter().map(|(id, w)| (id.clone(), w * factor)))
    }
}

impl From<&RecVector> for MeanVector {
    /// Panics on an empty vector; use [`mean`] for checked conversion.
    fn from(v: &RecVector) -> Self {
        assert!(!v.is_empty(), "cannot convert an empty RecVector");
        MeanVector {
            weights: v.iter().map(|(id, c)| (id.clone(), f64::from(c))).collect(),
        }
    }
}

pub struct MeanIter<'a>(btree_map::Iter<'a, VideoId, f64>);

impl<'a> Iterator for MeanIter<'a> {
    type Item = (&'a VideoId, f64);

    fn next(&mut self) -> Option<Self::Item> {
        self.0.next().map(|(id, &w)| (id, w))
    }
}

impl SparseVector for MeanVector {
    type Iter<'a> = MeanIter<'a>;

    fn entries(&self) -> MeanIter<'_> {
        MeanIter(self.weights.iter())
    }

    fn weight(&self, id: &VideoId) -> f64 {
        self.get(id.as_str())
    }

    fn support_len(&self) -> usize {
        self.weights.len()
    }
}

/// Cosine similarity `a·b / (‖a‖‖b‖)`, clamped to `[0, 1]`.
pub fn cosine<A, B>(a: &A, b: &B) -> Result<f64>
where
    A: SparseVector + ?Sized,
    B: SparseVector + ?Sized,
{
    let na = a.norm_sq();
    let nb = b.norm_sq();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    // sqrt of the product keeps cosine(x, x) == 1 exactly for integer counts.
    let s = a.dot(b) / (na * nb).sqrt();
    Ok(s.clamp(0.0, 1.0))
}

/// Entry-wise arithmetic mean; absent keys count as zero.
pub fn mean<'a, I>(vs: I) -> Result<MeanVector>
where
    I: IntoIterator<Item = &'a RecVector>,
{
    let mut sums: BTreeMap<VideoId, f64> = BTreeMap::new();
    let mut n = 0usize;
    for v in vs {
        n += 1;
        for (id, c) in v.iter() {
            *sums.entry(id.clone()).or_insert(0.0) += f64::from(c);
        }
    }
    if n == 0 {
        return Err(Error::Empty("mean of zero vectors"));
    }
    let n = n as f64;
    MeanVector::from_weights(sums.into_iter().map(|(id, s)| (id, s / n)))
}

/// Mean of already-averaged vectors, each given equal weight.
pub fn mean_of_means<'a, I>(vs: I) -> Result<MeanVector>
where
    I: IntoIterator<Item = &'a MeanVector>,
{
    let mut sums: BTreeMap<VideoId, f64> = BTreeMap::new();
    let mut n = 0usize;
    for v in vs {
        n += 1;
        for (id, w) in v.iter() {
            *sums.entry(id.clone()).or_insert(0.0) += w;
        }
    }
    if n == 0 {
        return Err(Error::Empty("mean of zero vectors"));
    }
    let n = n as f64;
    MeanVector::from_weights(sums.into_iter().map(|(id, s)| (id, s / n)))
}

/// Sets every positive count to 1.
pub fn binarize(a: &RecVector) -> RecVector {
    RecVector::from_counts(a.ids().map(|id| (id.clone(), 1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vid(s: &str) -> VideoId {
        VideoId::new(s).unwrap()
    }

    fn rv(pairs: &[(&str, u32)]) -> RecVector {
        RecVector::from_counts(pairs.iter().map(|&(k, c)| (vid(k), c)))
    }

    fn binary_range(lo: usize, hi: usize) -> RecVector {
        RecVector::from_ids((lo..hi).map(|i| vid(&format!("v{i:04}"))))
    }

    #[test]
    fn empty_video_id_rejected() {
        assert!(VideoId::new("").is_err());
        assert_eq!(vid("dQw4w9WgXcQ").as_str(), "dQw4w9WgXcQ");
    }

    #[test]
    fn cosine_identity_is_one() {
        let x = rv(&[("a", 3), ("b", 1), ("c", 7)]);
        assert_eq!(cosine(&x, &x).unwrap(), 1.0);
        let m = mean([&x, &rv(&[("a", 1)])]).unwrap();
        assert_eq!(cosine(&m, &m).unwrap(), 1.0);
    }

    #[test]
    fn cosine_disjoint_is_zero() {
        assert_eq!(cosine(&rv(&[("v1", 1)]), &rv(&[("v2", 1)])).unwrap(), 0.0);
    }

    #[test]
    fn cosine_binary_half_overlap() {
        let a = binary_range(0, 50);
        let b = binary_range(25, 75);
        assert_eq!(a.intersection_len(&b), 25);
        assert!((cosine(&a, &b).unwrap() - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn cosine_zero_vector_errors() {
        let err = cosine(&RecVector::new(), &rv(&[("a", 1)])).unwrap_err();
        assert!(err.to_string().contains("undefined similarity"));
    }

    #[test]
    fn cosine_mixed_kinds() {
        let x = rv(&[("a", 2), ("b", 2)]);
        let m = mean([&x]).unwrap();
        assert_eq!(cosine(&x, &m).unwrap(), 1.0);
    }

    #[test]
    fn mean_single_is_identity() {
        let x = rv(&[("a", 3), ("b", 1)]);
        let m = mean([&x]).unwrap();
        assert_eq!(m.get("a"), 3.0);
        assert_eq!(m.get("b"), 1.0);
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn mean_symmetric_pair() {
        let m = mean([&rv(&[("a", 2)]), &rv(&[("b", 2)])]).unwrap();
        assert_eq!(m.get("a"), 1.0);
        assert_eq!(m.get("b"), 1.0);
    }

    #[test]
    fn mean_of_one_hots() {
        let vs: Vec<RecVector> = (0..10).map(|i| rv(&[(&format!("id{i}"), 1)])).collect();
        let m = mean(&vs).unwrap();
        assert_eq!(m.len(), 10);
        for (_, w) in m.iter() {
            assert!((w - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_empty_errors() {
        let none: Vec<RecVector> = vec![];
        assert!(mean(&none).is_err());
    }

    #[test]
    fn mean_of_copies_is_original() {
        let x = rv(&[("a", 3), ("b", 1), ("z", 5)]);
        let copies = vec![x.clone(); 7];
        let m = mean(&copies).unwrap();
        for (id, c) in x.iter() {
            assert!((m.get(id.as_str()) - f64::from(c)).abs() < 1e-12);
        }
        assert_eq!(m.len(), x.len());
    }

    #[test]
    fn binarize_cases() {
        let b = binarize(&rv(&[("a", 3), ("b", 1)]));
        assert_eq!(b, rv(&[("a", 1), ("b", 1)]));
        assert_eq!(binarize(&b), b);
        assert!(b.is_binary());
    }

    #[test]
    fn mean_vector_rejects_bad_weights() {
        assert!(MeanVector::from_weights([(vid("a"), -1.0)]).is_err());
        assert!(MeanVector::from_weights([(vid("a"), f64::NAN)]).is_err());
        assert!(MeanVector::from_weights([(vid("a"), 0.0)]).is_err());
    }

    #[test]
    fn video_id_serde_rejects_empty() {
        assert!(serde_json::from_str::<VideoId>("\"\"").is_err());
        assert_eq!(serde_json::from_str::<VideoId>("\"x\"").unwrap(), vid("x"));
    }
}
