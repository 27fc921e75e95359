//! Mainstream drift and attraction strength.
//!
//! Fresh-profile snapshots (hop 0) define the mainstream: their mean is the
//! barycenter, and the similarity ceil σ is chosen so that the configured
//! share of those snapshots sits at or above it. A later snapshot whose
//! cosine to the barycenter drops below σ has left the mainstream.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::WalkSet;
use crate::vectorspace::{cosine, mean, MeanVector, RecVector};

/// Minimum number of calibration snapshots.
pub const MIN_CALIBRATION: usize = 20;
pub const DEFAULT_QUANTILE: f64 = 0.95;

/// Reference values reported for the live platform data set. Not derivable offline.
pub const REPORTED_CALIBRATION_MEAN: f64 = 0.389;
pub const REPORTED_SIGMA: f64 = 0.188;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MainstreamModel {
    pub barycenter: MeanVector,
    pub sigma: f64,
    pub quantile: f64,
    /// Mean cosine of the calibration snapshots to the barycenter.
    pub calibration_mean: f64,
    pub calibration_size: usize,
    /// Share of calibration snapshots with cosine >= sigma.
    pub calibration_in_fraction: f64,
}

impl MainstreamModel {
    pub fn similarity(&self, y: &RecVector) -> Result<f64> {
        cosine(y, &self.barycenter)
    }

    /// CSV with header `key,value`.
    pub fn write_report_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["key", "value"])?;
        for (k, v) in [
            ("quantile", self.quantile.to_string()),
            ("sigma", self.sigma.to_string()),
            ("calibration_mean", self.calibration_mean.to_string()),
            ("calibration_size", self.calibration_size.to_string()),
            ("calibration_in_fraction", self.calibration_in_fraction.to_string()),
            ("barycenter_support", self.barycenter.len().to_string()),
        ] {
            w.write_record([k, v.as_str()])?;
        }
        w.flush().map_err(|e| Error::io("mainstream report", e))?;
        Ok(())
    }
}

/// Index of σ in the ascending similarity list: the smallest of the
/// `ceil(quantile * n)` largest values.
fn ceil_rank(n: usize, quantile: f64) -> usize {
    // Tolerance absorbs representation error in products like 0.95 * 100.
    let kept = ((quantile * n as f64) - 1e-9).ceil().max(1.0) as usize;
    n - kept.min(n)
}

/// Fits the barycenter and σ on hop-0 snapshots.
///
/// σ is an order statistic, not an interpolated value: with `n` calibration
/// snapshots sorted by similarity, it is the smallest of the
/// `ceil(quantile * n)` largest. At least that many snapshots therefore
/// count as mainstream, and duplicating the calibration set leaves σ
/// unchanged.
pub fn fit_mainstream(y0s: &[RecVector], quantile: f64) -> Result<MainstreamModel> {
    if y0s.len() < MIN_CALIBRATION {
        return Err(Error::invalid(format!(
            "need at least {MIN_CALIBRATION} calibration vectors, got {}",
            y0s.len()
        )));
    }
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::invalid(format!("quantile must lie in (0,1], got {quantile}")));
    }
    if let Some(i) = y0s.iter().position(RecVector::is_empty) {
        return Err(Error::ZeroVectorAt(i));
    }
    let barycenter = mean(y0s)?;
    let mut sims = y0s
        .iter()
        .map(|y| cosine(y, &barycenter))
        .collect::<Result<Vec<f64>>>()?;
    let calibration_mean = sims.iter().sum::<f64>() / sims.len() as f64;
    sims.sort_by(f64::total_cmp);
    let sigma = sims[ceil_rank(sims.len(), quantile)];
    let in_count = sims.iter().filter(|&&s| s >= sigma).count();
    Ok(MainstreamModel {
        barycenter,
        sigma,
        quantile,
        calibration_mean,
        calibration_size: sims.len(),
        calibration_in_fraction: in_count as f64 / sims.len() as f64,
    })
}

/// Fits on the hop-0 snapshot of every walk.
pub fn fit_mainstream_walks(ws: &WalkSet, quantile: f64) -> Result<MainstreamModel> {
    let y0s: Vec<RecVector> = ws.initial_vectors().into_iter().cloned().collect();
    fit_mainstream(&y0s, quantile)
}

/// True when `cosine(y, barycenter) >= sigma`.
pub fn in_mainstream(y: &RecVector, m: &MainstreamModel) -> Result<bool> {
    Ok(m.similarity(y)? >= m.sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopPoint {
    pub hop: usize,
    /// Walks of the profile that reached this hop.
    pub walks: usize,
    pub left: usize,
    pub left_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractionCurve {
    pub profiles: BTreeMap<String, Vec<HopPoint>>,
    /// (walk, hop) pairs missing relative to the deepest walk in the set.
    pub skipped: usize,
}

impl AttractionCurve {
    /// CSV with header `profile,hop,left_fraction`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["profile", "hop", "left_fraction"])?;
        for (profile, points) in &self.profiles {
            for p in points {
                w.write_record([profile.as_str(), &p.hop.to_string(), &p.left_fraction.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("attraction curve", e))?;
        Ok(())
    }
}

/// Per profile and hop, the share of walks that left the mainstream.
/// Walks too short for a hop are excluded from that hop only.
pub fn attraction_curve(ws: &WalkSet, m: &MainstreamModel) -> Result<AttractionCurve> {
    let depth = ws.max_depth();
    let mut skipped = 0;
    let mut profiles = BTreeMap::new();
    for (profile, walks) in ws.by_profile() {
        let mut points = Vec::new();
        for hop in 0..=depth {
            let mut reached = 0;
            let mut left = 0;
            for w in &walks {
                match w.vector(hop) {
                    Some(y) => {
                        reached += 1;
                        if !in_mainstream(y, m)? {
                            left += 1;
                        }
                    }
                    None => skipped += 1,
                }
            }
            if reached > 0 {
                points.push(HopPoint {
                    hop,
                    walks: reached,
                    left,
                    left_fraction: left as f64 / reached as f64,
                });
            }
        }
        profiles.insert(profile.to_string(), points);
    }
    Ok(AttractionCurve { profiles, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelStats {
    /// `(walk_id, cosine to barycenter)` in input order.
    pub values: Vec<(String, f64)>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstHopDistribution {
    pub channels: BTreeMap<String, ChannelStats>,
}

impl FirstHopDistribution {
    /// CSV with header `channel,walk,similarity`.
    pub fn write_values_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["channel", "walk", "similarity"])?;
        for (channel, stats) in &self.channels {
            for (walk, s) in &stats.values {
                w.write_record([channel.as_str(), walk.as_str(), &s.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("first-hop distribution", e))?;
        Ok(())
    }

    /// CSV with header `channel,median,q1,q3`.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["channel", "median", "q1", "q3"])?;
        for (channel, s) in &self.channels {
            w.write_record([
                channel.as_str(),
                &s.median.to_string(),
                &s.q1.to_string(),
                &s.q3.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("first-hop summary", e))?;
        Ok(())
    }
}

/// Linear-interpolation quantile of sorted data (`(n - 1) p` positions).
pub fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per channel, the cosine of each walk's hop-1 snapshot to the barycenter.
/// Walks without a hop 1 are skipped; channels left empty are omitted.
pub fn first_hop_distribution(ws: &WalkSet, m: &MainstreamModel) -> Result<FirstHopDistribution> {
    let mut channels = BTreeMap::new();
    for (profile, walks) in ws.by_profile() {
        let values = walks
            .iter()
            .filter_map(|w| w.vector(1).map(|y| (w, y)))
            .map(|(w, y)| m.similarity(y).map(|s| (w.walk_id.clone(), s)))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            continue;
        }
        let mut sorted: Vec<f64> = values.iter().map(|(_, s)| *s).collect();
        sorted.sort_by(f64::total_cmp);
        channels.insert(
            profile.to_string(),
            ChannelStats {
                median: interpolated_quantile(&sorted, 0.5),
                q1: interpolated_quantile(&sorted, 0.25),
                q3: interpolated_quantile(&sorted, 0.75),
                values,
            },
        );
    }
    Ok(FirstHopDistribution { channels })
}

/// Every `(hop, walk, cosine to barycenter)` triple, the data behind the
/// per-hop similarity density view.
pub fn similarity_by_hop(ws: &WalkSet, m: &MainstreamModel) -> Result<Vec<(usize, String, f64)>> {
    let mut out = Vec::new();
    for w in ws.iter() {
        for (hop, h) in w.hops.iter().enumerate() {
            out.push((hop, w.walk_id.clone(), m.similarity(&h.recommendations)?));
        }
    }
    out.sort_by_key(|row| row.0);
    Ok(out)
}

pub fn write_similarity_by_hop_csv<W: Write>(rows: &[(usize, String, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hop", "walk", "similarity"])?;
    for (hop, walk, s) in rows {
        w.write_record([hop.to_string(), walk.clone(), s.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("similarity by hop", e))?;
    Ok(())
}
