//! User-side detection of rabbit holes from recommendation similarity.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::RhLabel;
use crate::vectorspace::{binarize, cosine, RecVector, SparseVector};

/// Symmetric cosine-similarity matrix over labelled items.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Validates shape, symmetry, range and a unit diagonal.
    pub fn from_dense(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: n * n,
            });
        }
        for i in 0..n {
            if (values[i * n + i] - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("entry ({i},{j}) = {v} outside [0,1]")));
                }
                if (v - values[j * n + i]).abs() > 1e-12 {
                    return Err(Error::invalid(format!("matrix not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(SimilarityMatrix { labels, values })
    }

    /// Items labelled by their index.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: n,
            });
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::from_dense(labels, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: self.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    /// Mean of all off-diagonal entries; 0 for fewer than two items.
    pub fn off_diagonal_mean(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let total: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .sum();
        total / (n * (n - 1)) as f64
    }

    /// Mean similarity over distinct pairs drawn from `members`.
    pub fn mean_within(&self, members: &[usize]) -> Option<f64> {
        if members.len() < 2 {
            return None;
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                sum += self.get(i, j);
                pairs += 1;
            }
        }
        Some(sum / pairs as f64)
    }

    /// Mean similarity over all pairs with one item in each set.
    pub fn mean_between(&self, left: &[usize], right: &[usize]) -> Option<f64> {
        if left.is_empty() || right.is_empty() {
            return None;
        }
        let sum: f64 = left
            .iter()
            .flat_map(|&i| right.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .sum();
        Some(sum / (left.len() * right.len()) as f64)
    }

    /// CSV with header `row,col,value` using the item labels, row-major.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "value"])?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                w.write_record([
                    self.labels[i].as_str(),
                    self.labels[j].as_str(),
                    &self.get(i, j).to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("similarity csv", e))?;
        Ok(())
    }
}

/// Pairwise cosine similarity. With `binary`, vectors are binarized first.
pub fn pairwise_similarity(vs: &[RecVector], binary: bool) -> Result<SimilarityMatrix> {
    if binary {
        let bin: Vec<RecVector> = vs.iter().map(binarize).collect();
        pairwise_similarity_of(&bin)
    } else {
        pairwise_similarity_of(vs)
    }
}

/// Pairwise cosine similarity for any sparse vector kind.
pub fn pairwise_similarity_of<V: SparseVector + Sync>(vs: &[V]) -> Result<SimilarityMatrix> {
    if let Some(i) = vs.iter().position(|v| v.support_len() == 0) {
        return Err(Error::ZeroVectorAt(i));
    }
    let n = vs.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| cosine(&vs[i], &vs[j]).expect("nonzero vectors"))
                .collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.into_iter().enumerate() {
        values[i * n + i] = 1.0;
        for (off, s) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            values[i * n + j] = s;
            values[j * n + i] = s;
        }
    }
    Ok(SimilarityMatrix {
        labels: (0..n).map(|i| i.to_string()).collect(),
        values,
    })
}

/// Expected cosine similarity of two users inside and outside the rabbit hole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedSimilarities {
    /// Both users only get attractors: `y / b`.
    pub in_rh: f64,
    /// Neither user gets attractors: `y / (v - b)`.
    pub out_rh: f64,
}

pub fn expected_similarity(v: usize, b: usize, y: usize) -> Result<ExpectedSimilarities> {
    if b == 0 || b >= v {
        return Err(Error::invalid(format!("need 0 < b < v, got b={b}, v={v}")));
    }
    if y == 0 || y > b.min(v - b) {
        return Err(Error::invalid(format!(
            "need 0 < y <= min(b, v-b) = {}, got y={y}",
            b.min(v - b)
        )));
    }
    Ok(ExpectedSimilarities {
        in_rh: y as f64 / b as f64,
        out_rh: y as f64 / (v - b) as f64,
    })
}

/// Geometric mean of the two expected similarities.
pub fn default_threshold(e: ExpectedSimilarities) -> Result<f64> {
    if e.in_rh.partial_cmp(&e.out_rh) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::invalid(format!(
            "default threshold needs in_rh > out_rh, got {} and {}",
            e.in_rh, e.out_rh
        )));
    }
    Ok((e.in_rh * e.out_rh).sqrt())
}

/// Users split into the three rabbit-hole categories; indices are ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RhPartition {
    pub mainstream: Vec<usize>,
    pub rabbit_hole: Vec<usize>,
    pub mixed: Vec<usize>,
}

impl RhPartition {
    pub fn labels(&self, n: usize) -> Vec<RhLabel> {
        let mut out = vec![RhLabel::Mixed; n];
        for &i in &self.mainstream {
            out[i] = RhLabel::Mainstream;
        }
        for &i in &self.rabbit_hole {
            out[i] = RhLabel::RabbitHole;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.mainstream.len() + self.rabbit_hole.len() + self.mixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// CSV with header `item,label`.
    pub fn write_csv<W: Write>(&self, item_labels: &[String], out: W) -> Result<()> {
        let labels = self.labels(item_labels.len());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["item", "label"])?;
        for (item, label) in item_labels.iter().zip(labels) {
            w.write_record([item.as_str(), label.as_str()])?;
        }
        w.flush().map_err(|e| Error::io("partition csv", e))?;
        Ok(())
    }
}

fn components(m: &SimilarityMatrix, tau: f64) -> Vec<Vec<usize>> {
    let n = m.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut at = 0;
        while at < comp.len() {
            let i = comp[at];
            at += 1;
            for (j, done) in seen.iter_mut().enumerate() {
                if !*done && m.get(i, j) >= tau {
                    *done = true;
                    comp.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Threshold-graph classification.
///
/// Items are joined when their similarity is `>= tau`. Among components with
/// at least two members, the one with the highest mean internal similarity
/// becomes the rabbit hole, provided that mean is at least the global
/// off-diagonal mean. Every other component is mainstream when its mean
/// similarity to the rabbit-hole members is below `tau / 2`, and mixed
/// otherwise. Without a rabbit-hole component everyone is mainstream.
pub fn classify_rh(m: &SimilarityMatrix, tau: f64) -> Result<RhPartition> {
    if m.is_empty() {
        return Err(Error::Empty("similarity matrix"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!("threshold must lie in (0,1), got {tau}")));
    }
    let comps = components(m, tau);
    let global = m.off_diagonal_mean();

    let mut best: Option<(usize, f64)> = None;
    for (c, members) in comps.iter().enumerate() {
        if let Some(mean) = m.mean_within(members) {
            if best.is_none_or(|(_, b)| mean > b) {
                best = Some((c, mean));
            }
        }
    }
    let rh = best.filter(|&(_, mean)| mean >= global).map(|(c, _)| c);

    let mut out = RhPartition::default();
    for (c, members) in comps.iter().enumerate() {
        if Some(c) == rh {
            out.rabbit_hole.extend(members);
            continue;
        }
        let near_rh = rh
            .and_then(|r| m.mean_between(members, &comps[r]))
            .is_some_and(|s| s >= tau / 2.0);
        if near_rh {
            out.mixed.extend(members);
        } else {
            out.mainstream.extend(members);
        }
    }
    out.mainstream.sort_unstable();
    out.rabbit_hole.sort_unstable();
    out.mixed.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorspace::VideoId;

    fn block_matrix(nb: usize, na: usize, in_b: f64, in_a: f64) -> SimilarityMatrix {
        let n = nb + na;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            1.0
                        } else if i < nb && j < nb {
                            in_b
                        } else if i >= nb && j >= nb {
                            in_a
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        SimilarityMatrix::from_rows(&rows).unwrap()
    }

    fn ids(range: std::ops::Range<usize>) -> RecVector {
        RecVector::from_ids(range.map(|i| VideoId::new(format!("x{i}")).unwrap()))
    }

    #[test]
    fn identical_vectors_all_ones() {
        let v = ids(0..5);
        let m = pairwise_similarity(&[v.clone(), v.clone(), v], false).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), 1.0);
            }
        }
    }

    #[test]
    fn disjoint_vectors_identity() {
        let m = pairwise_similarity(&[ids(0..3), ids(3..6), ids(6..9)], true).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn zero_vector_index_reported() {
        let err = pairwise_similarity(&[ids(0..3), RecVector::new()], false).unwrap_err();
        assert!(matches!(err, Error::ZeroVectorAt(1)));
    }

    #[test]
    fn binary_flag_applies() {
        let mut heavy = ids(0..2);
        heavy.add(VideoId::new("x0").unwrap(), 9);
        let plain = ids(0..2);
        assert!(
            pairwise_similarity(&[heavy.clone(), plain.clone()], false)
                .unwrap()
                .get(0, 1)
                < 1.0
        );
        assert_eq!(pairwise_similarity(&[heavy, plain], true).unwrap().get(0, 1), 1.0);
    }

    #[test]
    fn expected_similarity_reference_values() {
        let e = expected_similarity(1000, 100, 50).unwrap();
        assert_eq!(e.in_rh, 0.5);
        assert_eq!(e.out_rh, 50.0 / 900.0);
        assert!((e.out_rh - 1.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn expected_similarity_edges() {
        assert_eq!(expected_similarity(500, 50, 50).unwrap().in_rh, 1.0);
        let e = expected_similarity(200, 100, 50).unwrap();
        assert_eq!(e.in_rh, e.out_rh);
        assert!(expected_similarity(100, 0, 1).is_err());
        assert!(expected_similarity(100, 100, 1).is_err());
        assert!(expected_similarity(100, 10, 11).is_err());
        assert!(expected_similarity(100, 10, 0).is_err());
    }

    #[test]
    fn expected_similarity_scale_free() {
        let a = expected_similarity(1000, 100, 50).unwrap();
        let b = expected_similarity(3000, 300, 150).unwrap();
        assert!((a.in_rh - b.in_rh).abs() < 1e-15);
        assert!((a.out_rh - b.out_rh).abs() < 1e-15);
    }

    #[test]
    fn default_threshold_values() {
        let t = default_threshold(ExpectedSimilarities {
            in_rh: 0.5,
            out_rh: 1.0 / 18.0,
        })
        .unwrap();
        assert!((t - 1.0 / 6.0).abs() < 1e-15);
        let t = default_threshold(ExpectedSimilarities {
            in_rh: 0.04,
            out_rh: 0.01,
        })
        .unwrap();
        assert!((t - 0.02).abs() < 1e-15);
        assert!(default_threshold(ExpectedSimilarities {
            in_rh: 1.0,
            out_rh: 1.0
        })
        .is_err());
    }

    #[test]
    fn classify_block_matrix() {
        let m = block_matrix(6, 8, 0.5, 0.06);
        let p = classify_rh(&m, 0.25).unwrap();
        assert_eq!(p.rabbit_hole, (0..6).collect::<Vec<_>>());
        assert_eq!(p.mainstream, (6..14).collect::<Vec<_>>());
        assert!(p.mixed.is_empty());
    }

    #[test]
    fn classify_all_ones() {
        let p = classify_rh(&block_matrix(5, 0, 1.0, 0.0), 0.5).unwrap();
        assert_eq!(p.rabbit_hole.len(), 5);
        assert!(p.mainstream.is_empty() && p.mixed.is_empty());
    }

    #[test]
    fn classify_identity() {
        let p = classify_rh(&block_matrix(0, 7, 0.0, 0.0), 0.9).unwrap();
        assert_eq!(p.mainstream.len(), 7);
        assert!(p.rabbit_hole.is_empty());
    }

    #[test]
    fn classify_mixed_user() {
        // Item 4 is halfway between the rabbit hole and the rest.
        let mut rows = vec![vec![0.0; 7]; 7];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = match (i, j) {
                    _ if i == j => 1.0,
                    (0..=3, 0..=3) => 0.5,
                    (4, 0..=3) | (0..=3, 4) => 0.1,
                    _ => 0.02,
                };
            }
        }
        let m = SimilarityMatrix::from_rows(&rows).unwrap();
        let p = classify_rh(&m, 0.17).unwrap();
        assert_eq!(p.rabbit_hole, vec![0, 1, 2, 3]);
        assert_eq!(p.mixed, vec![4]);
        assert_eq!(p.mainstream, vec![5, 6]);
    }

    #[test]
    fn classify_errors() {
        let empty = SimilarityMatrix::from_rows(&[]).unwrap();
        assert!(classify_rh(&empty, 0.5).is_err());
        let m = block_matrix(2, 2, 0.5, 0.1);
        assert!(classify_rh(&m, 0.0).is_err());
        assert!(classify_rh(&m, 1.0).is_err());
    }

    #[test]
    fn threshold_is_inclusive() {
        let m = block_matrix(2, 0, 0.25, 0.0);
        assert_eq!(classify_rh(&m, 0.25).unwrap().rabbit_hole, vec![0, 1]);
    }

    #[test]
    fn from_dense_validates() {
        assert!(SimilarityMatrix::from_rows(&[vec![1.0, 0.2], vec![0.3, 1.0]]).is_err());
        assert!(SimilarityMatrix::from_rows(&[vec![0.9]]).is_err());
        assert!(SimilarityMatrix::from_rows(&[vec![1.0, 0.2]]).is_err());
    }

    #[test]
    fn csv_export_uses_labels() {
        let m = block_matrix(1, 1, 0.0, 0.0)
            .with_labels(vec!["peppa".into(), "news, daily".into()])
            .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "row,col,value\npeppa,peppa,1\npeppa,\"news, daily\",0\n\"news, daily\",peppa,0\n\"news, daily\",\"news, daily\",1\n"
        );
    }
}
