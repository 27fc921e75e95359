//! Walk-log ingestion.
//!
//! A walk log is JSON Lines, one record per (walk, hop):
//!
//! ```text
//! {"walk_id":"w1","profile":"kids","hop":0,"watched":"","recommendations":["a","b","a"]}
//! ```
//!
//! Hop 0 is the snapshot taken before the first watch. Unknown fields are
//! ignored. Bad lines are reported with their line number and skipped; only
//! a log with no usable walk is a hard error.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorspace::{mean, MeanVector, RecVector, VideoId};

/// One line of a walk log, as written on export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub walk_id: String,
    pub profile: String,
    pub hop: u32,
    pub watched: String,
    pub recommendations: Vec<String>,
}

#[derive(Deserialize)]
struct RawRecord {
    walk_id: Option<String>,
    profile: Option<String>,
    hop: Option<i64>,
    watched: Option<String>,
    recommendations: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 1-based line number in the source.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hop {
    pub watched: Option<VideoId>,
    pub recommendations: RecVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    pub walk_id: String,
    pub profile: String,
    /// Hops `0..=depth`, contiguous.
    pub hops: Vec<Hop>,
    /// Ground-truth label, when a labels file was attached.
    pub label: Option<String>,
}

impl Walk {
    pub fn depth(&self) -> usize {
        self.hops.len() - 1
    }

    pub fn vector(&self, hop: usize) -> Option<&RecVector> {
        self.hops.get(hop).map(|h| &h.recommendations)
    }

    pub fn last_vector(&self) -> &RecVector {
        &self.hops[self.depth()].recommendations
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WalkSet {
    walks: Vec<Walk>,
    index: HashMap<String, usize>,
}

impl WalkSet {
    pub fn from_walks(walks: Vec<Walk>) -> Result<Self> {
        let mut index = HashMap::with_capacity(walks.len());
        for (i, w) in walks.iter().enumerate() {
            if w.hops.is_empty() {
                return Err(Error::invalid(format!("walk {} has no hops", w.walk_id)));
            }
            if index.insert(w.walk_id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate walk id {}", w.walk_id)));
            }
        }
        Ok(WalkSet { walks, index })
    }

    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Walk> {
        self.walks.iter()
    }

    pub fn get(&self, walk_id: &str) -> Option<&Walk> {
        self.index.get(walk_id).map(|&i| &self.walks[i])
    }

    pub fn max_depth(&self) -> usize {
        self.walks.iter().map(Walk::depth).max().unwrap_or(0)
    }

    /// Walks grouped by profile, in input order within each profile.
    pub fn by_profile(&self) -> BTreeMap<&str, Vec<&Walk>> {
        let mut out: BTreeMap<&str, Vec<&Walk>> = BTreeMap::new();
        for w in &self.walks {
            out.entry(w.profile.as_str()).or_default().push(w);
        }
        out
    }

    /// Hop-0 vectors of every walk.
    pub fn initial_vectors(&self) -> Vec<&RecVector> {
        self.walks.iter().map(|w| &w.hops[0].recommendations).collect()
    }

    /// Attaches `walk_id -> label`; returns labels naming unknown walks.
    pub fn attach_labels<I>(&mut self, labels: I) -> Vec<String>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut unknown = Vec::new();
        for (walk_id, label) in labels {
            match self.index.get(&walk_id) {
                Some(&i) => self.walks[i].label = Some(label),
                None => unknown.push(walk_id),
            }
        }
        unknown
    }

    /// Reads a `walk_id,label` CSV (with header) and attaches the labels.
    pub fn load_labels(&mut self, path: &Path) -> Result<Vec<Diagnostic>> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let mut diagnostics = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut pairs = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let line = row + 2;
            let record = match record {
                Ok(r) => r,
                Err(e) => {
                    diagnostics.push(Diagnostic {
                        line,
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            let (Some(walk_id), Some(label)) = (record.get(0), record.get(1)) else {
                diagnostics.push(Diagnostic {
                    line,
                    message: "expected walk_id,label".into(),
                });
                continue;
            };
            if let Some(first) = seen.get(walk_id) {
                diagnostics.push(Diagnostic {
                    line,
                    message: format!("duplicate label for walk {walk_id}; line {first} kept"),
                });
                continue;
            }
            seen.insert(walk_id.to_string(), line);
            pairs.push((line, walk_id.to_string(), label.to_string()));
        }
        for (line, walk_id, label) in pairs {
            if !self.attach_labels([(walk_id.clone(), label)]).is_empty() {
                diagnostics.push(Diagnostic {
                    line,
                    message: format!("unknown walk {walk_id}"),
                });
            }
        }
        Ok(diagnostics)
    }

    /// Writes the set back out as a walk log. Repeated recommendations are
    /// expanded in ID order; list order is not preserved.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for w in &self.walks {
            for (hop, h) in w.hops.iter().enumerate() {
                let record = WalkRecord {
                    walk_id: w.walk_id.clone(),
                    profile: w.profile.clone(),
                    hop: hop as u32,
                    watched: h.watched.as_ref().map(|v| v.to_string()).unwrap_or_default(),
                    recommendations: h
                        .recommendations
                        .iter()
                        .flat_map(|(id, c)| std::iter::repeat_n(id.to_string(), c as usize))
                        .collect(),
                };
                serde_json::to_writer(&mut out, &record)?;
                out.write_all(b"\n").map_err(|e| Error::io("walk log", e))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseReport {
    pub walks: WalkSet,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn parse_walks(path: &Path) -> Result<ParseReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_walks_from(file)
}

struct Pending {
    profile: String,
    hops: BTreeMap<u32, (usize, Hop)>,
}

fn validate(raw: RawRecord) -> std::result::Result<(String, String, u32, Hop), String> {
    let walk_id = raw
        .walk_id
        .filter(|s| !s.is_empty())
        .ok_or("missing required field walk_id")?;
    let hop = raw.hop.ok_or("missing required field hop")?;
    let hop = u32::try_from(hop).map_err(|_| format!("hop must be a non-negative integer, got {hop}"))?;
    let recs = raw.recommendations.ok_or("missing required field recommendations")?;
    if recs.is_empty() {
        return Err("recommendations must be non-empty".into());
    }
    let ids = recs
        .into_iter()
        .map(VideoId::new)
        .collect::<Result<Vec<_>>>()
        .map_err(|_| "recommendations contain an empty video id".to_string())?;
    let watched = match raw.watched {
        Some(s) if !s.is_empty() => Some(VideoId::new(s).expect("non-empty")),
        _ => None,
    };
    Ok((
        walk_id,
        raw.profile.unwrap_or_default(),
        hop,
        Hop {
            watched,
            recommendations: RecVector::from_ids(ids),
        },
    ))
}

/// Streams a walk log from any reader.
pub fn parse_walks_from<R: Read>(reader: R) -> Result<ParseReport> {
    let mut diagnostics = Vec::new();
    let mut order: Vec<String> = Vec::new();
    let mut pending: HashMap<String, Pending> = HashMap::new();

    for (ix, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = ix + 1;
        let line = line.map_err(|e| Error::io("walk log", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                diagnostics.push(Diagnostic {
                    line: line_no,
                    message: format!("malformed record: {e}"),
                });
                continue;
            }
        };
        let (walk_id, profile, hop, record) = match validate(raw) {
            Ok(v) => v,
            Err(message) => {
                diagnostics.push(Diagnostic { line: line_no, message });
                continue;
            }
        };
        let entry = pending.entry(walk_id.clone()).or_insert_with(|| {
            order.push(walk_id.clone());
            Pending {
                profile: profile.clone(),
                hops: BTreeMap::new(),
            }
        });
        if entry.profile != profile {
            diagnostics.push(Diagnostic {
                line: line_no,
                message: format!("walk {walk_id} changes profile from '{}' to '{profile}'", entry.profile),
            });
            continue;
        }
        if let Some((first, _)) = entry.hops.get(&hop) {
            diagnostics.push(Diagnostic {
                line: line_no,
                message: format!("duplicate (walk_id, hop) = ({walk_id}, {hop}); line {first} kept"),
            });
            continue;
        }
        entry.hops.insert(hop, (line_no, record));
    }

    let mut walks = Vec::new();
    for walk_id in order {
        let p = pending.remove(&walk_id).expect("tracked");
        let mut hops = Vec::new();
        for (hop, (line, record)) in p.hops {
            if hop as usize == hops.len() {
                hops.push(record);
            } else {
                diagnostics.push(Diagnostic {
                    line,
                    message: format!(
                        "non-contiguous hop {hop} in walk {walk_id}: hop {} is missing",
                        hops.len()
                    ),
                });
            }
        }
        if !hops.is_empty() {
            walks.push(Walk {
                walk_id,
                profile: p.profile,
                hops,
                label: None,
            });
        }
    }
    diagnostics.sort_by_key(|d| d.line);

    if walks.is_empty() {
        return Err(Error::NoValidWalks {
            rejected: diagnostics.len(),
        });
    }
    Ok(ParseReport {
        walks: WalkSet::from_walks(walks)?,
        diagnostics,
    })
}

/// Per profile, the mean hop-`hop` vector over its walks. Profiles whose
/// walks all stop before `hop` are omitted.
pub fn profile_vectors(ws: &WalkSet, hop: usize) -> Result<BTreeMap<String, MeanVector>> {
    let mut out = BTreeMap::new();
    for (profile, walks) in ws.by_profile() {
        let vs: Vec<&RecVector> = walks.iter().filter_map(|w| w.vector(hop)).collect();
        if !vs.is_empty() {
            out.insert(profile.to_string(), mean(vs)?);
        }
    }
    Ok(out)
}
