//! Shot events and per-cluster shooting performance.
//!
//! Shots arrive as a CSV (`timestamp_ms,made,shooter_id`, with an optional
//! `kind` column that must say `FG` — free throws happen inside excised
//! dead-ball intervals and have no business here). Each shot is attached to
//! the nearest assigned frame within a tolerance; shots falling in excised
//! time or outside the stint stay unmatched rather than being forced onto a
//! distant frame. The report then counts attempts and makes per cluster.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Default matching tolerance between a shot and its nearest frame.
pub const DEFAULT_SHOT_TOLERANCE_MS: i64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotEvent {
    pub timestamp_ms: i64,
    pub made: bool,
    pub shooter: Option<String>,
}

/// Parse a shots CSV. `made` must be exactly `0` or `1`; a `kind` column,
/// when present, must be `FG` on every row.
pub fn parse_shots<R: Read>(reader: R) -> Result<Vec<ShotEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CoreError::BadStream {
            stream: "shots",
            message: format!("unreadable header: {e}"),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &'static str| {
        col(name).ok_or(CoreError::MissingColumn {
            stream: "shots",
            column: name.to_string(),
        })
    };
    let ts_i = require("timestamp_ms")?;
    let made_i = require("made")?;
    let shooter_i = require("shooter_id")?;
    let kind_i = col("kind");

    let mut shots = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let bad = |message: String| CoreError::BadRow {
            stream: "shots",
            row,
            message,
        };
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let timestamp_ms: i64 = field(ts_i)
            .parse()
            .map_err(|_| bad(format!("bad timestamp_ms `{}`", field(ts_i))))?;
        if timestamp_ms < 0 {
            return Err(bad(format!("negative timestamp_ms {timestamp_ms}")));
        }
        let made = match field(made_i) {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("made must be 0 or 1, got `{other}`"))),
        };
        if let Some(ki) = kind_i {
            let kind = field(ki);
            if kind != "FG" {
                return Err(bad(format!("unsupported shot kind `{kind}`")));
            }
        }
        let shooter = match field(shooter_i) {
            "" => None,
            id => Some(id.to_string()),
        };
        shots.push(ShotEvent {
            timestamp_ms,
            made,
            shooter,
        });
    }
    Ok(shots)
}

/// A shot after frame matching. `frame_ms`/`cluster` are absent when no
/// assigned frame lies within the tolerance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachedShot {
    pub shot: ShotEvent,
    pub frame_ms: Option<i64>,
    pub cluster: Option<usize>,
}

/// Attach each shot to the nearest frame of `frame_clusters` (ascending
/// `[frame_ms, cluster]` pairs, as stored in a model artifact). Equidistant
/// neighbours resolve to the earlier frame.
pub fn attach_shots(
    shots: &[ShotEvent],
    frame_clusters: &[(i64, usize)],
    tolerance_ms: i64,
) -> Result<Vec<AttachedShot>> {
    if tolerance_ms < 0 {
        return Err(CoreError::InvalidArgument(format!(
            "shot tolerance must be >= 0 ms, got {tolerance_ms}"
        )));
    }
    if frame_clusters.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(CoreError::Misaligned(
            "frame assignments must be strictly ascending".into(),
        ));
    }
    Ok(shots
        .iter()
        .map(|shot| {
            let ts = shot.timestamp_ms;
            let idx = frame_clusters.partition_point(|&(f, _)| f < ts);
            let mut best: Option<(i64, usize)> = None; // (|gap|, index)
            for cand in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
                if let Some(&(f, _)) = frame_clusters.get(cand) {
                    let gap = (f - ts).abs();
                    // Strict < keeps the earlier frame on ties.
                    if best.map_or(true, |(bg, _)| gap < bg) {
                        best = Some((gap, cand));
                    }
                }
            }
            match best {
                Some((gap, i)) if gap <= tolerance_ms => AttachedShot {
                    shot: shot.clone(),
                    frame_ms: Some(frame_clusters[i].0),
                    cluster: Some(frame_clusters[i].1),
                },
                _ => AttachedShot {
                    shot: shot.clone(),
                    frame_ms: None,
                    cluster: None,
                },
            }
        })
        .collect())
}

/// Shooting line for one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterShots {
    pub cluster: usize,
    pub attempts: u32,
    pub made: u32,
    /// Field-goal percentage, absent without attempts.
    pub percent: Option<f64>,
}

/// Shooting performance per cluster plus totals. Matched attempts plus
/// unmatched shots always add up to the input shot count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotReport {
    pub per_cluster: Vec<ClusterShots>,
    pub attempts: u32,
    pub made: u32,
    pub percent: Option<f64>,
    pub unmatched: u32,
}

pub fn shot_report(attached: &[AttachedShot], k: usize) -> Result<ShotReport> {
    let mut per_cluster: Vec<(u32, u32)> = vec![(0, 0); k];
    let mut unmatched = 0u32;
    let mut attempts = 0u32;
    let mut made = 0u32;
    for a in attached {
        match a.cluster {
            Some(c) => {
                let slot = per_cluster.get_mut(c).ok_or_else(|| {
                    CoreError::Misaligned(format!("shot attached to cluster {c}, but k={k}"))
                })?;
                slot.0 += 1;
                slot.1 += a.shot.made as u32;
                attempts += 1;
                made += a.shot.made as u32;
            }
            None => unmatched += 1,
        }
    }
    let pct = |made: u32, attempts: u32| {
        (attempts > 0).then(|| 100.0 * made as f64 / attempts as f64)
    };
    Ok(ShotReport {
        per_cluster: per_cluster
            .into_iter()
            .enumerate()
            .map(|(cluster, (attempts, made))| ClusterShots {
                cluster,
                attempts,
                made,
                percent: pct(made, attempts),
            })
            .collect(),
        attempts,
        made,
        percent: pct(made, attempts),
        unmatched,
    })
}

/// Serialized shooting artifact for one stint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShotsFile {
    pub tolerance_ms: i64,
    pub report: ShotReport,
    pub shots: Vec<AttachedShot>,
}
