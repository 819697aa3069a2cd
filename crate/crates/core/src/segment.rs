//! Stint extraction and dyad-distance features.
//!
//! A stint is a maximal span during which the same five roster players are
//! on court together. Stints may be interrupted (timeouts, brief lineup
//! changes that later revert): the intervals of one lineup accumulate into
//! a single stint as long as the lineup itself is identical, and only
//! stints with enough accumulated floor time survive.
//!
//! Within a stint every frame becomes a ten-dimensional feature vector: the
//! Euclidean x-y distances between all C(5,2) = 10 player pairs, in the
//! canonical order given by [`DYAD_PAIRS`] over the lexicographically
//! sorted lineup. Dyad distances are where the spatial analysis lives —
//! they are invariant to which direction the team attacks.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::ingest::{Frame, FrameSeries};

/// Default minimum accumulated stint duration: five minutes.
pub const DEFAULT_MIN_STINT_MS: i64 = 300_000;

/// Index pairs into a sorted 5-player lineup, row-major upper triangle.
pub const DYAD_PAIRS: [(usize, usize); 10] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (0, 4),
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 3),
    (2, 4),
    (3, 4),
];

/// Column name for a dyad feature, e.g. `d01` for the pair (0, 1).
pub fn dyad_column(pair: (usize, usize)) -> String {
    format!("d{}{}", pair.0, pair.1)
}

/// Human label for a dyad, e.g. `p1-p3`.
pub fn dyad_label(lineup: &[String], pair: (usize, usize)) -> String {
    format!("{}-{}", lineup[pair.0], lineup[pair.1])
}

/// A maximal same-lineup span, possibly interrupted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stint {
    /// Exactly five player ids, lexicographically sorted.
    pub lineup: Vec<String>,
    /// Disjoint half-open frame-grid intervals, ascending.
    pub intervals: Vec<(i64, i64)>,
    /// Sum of interval lengths.
    pub total_duration_ms: i64,
}

impl Stint {
    /// Number of grid frames covered by the intervals.
    pub fn frame_count(&self, grid_ms: i64) -> usize {
        (self.total_duration_ms / grid_ms) as usize
    }

    pub fn contains(&self, ts: i64) -> bool {
        self.intervals
            .iter()
            .any(|&(start, end)| (start..end).contains(&ts))
    }

    /// All frame ticks of the stint, ascending.
    pub fn ticks(&self, grid_ms: i64) -> impl Iterator<Item = i64> + '_ {
        self.intervals
            .iter()
            .flat_map(move |&(start, end)| (start..end).step_by(grid_ms as usize))
    }
}

/// Frames that could not contribute to any stint, by reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedFrameCounts {
    /// Fewer than five roster players on court.
    pub under_populated: usize,
    /// More than five roster players on court.
    pub over_populated: usize,
    /// Lineup never accumulated the minimum duration.
    pub below_min_duration: usize,
}

#[derive(Debug, Clone, Default)]
pub struct StintExtraction {
    pub stints: Vec<Stint>,
    pub excluded: ExcludedFrameCounts,
}

/// Extract stints for `roster` from a frame series. A frame joins a stint
/// run only when exactly five roster players are present; runs break on
/// lineup change or any grid gap, and the runs of one lineup accumulate.
/// Lineups below `min_duration_ms` of accumulated time are dropped.
pub fn extract_stints(
    series: &FrameSeries,
    roster: &[String],
    min_duration_ms: i64,
) -> Result<StintExtraction> {
    if min_duration_ms < 1 {
        return Err(CoreError::InvalidArgument(format!(
            "min stint duration must be >= 1 ms, got {min_duration_ms}"
        )));
    }
    if series.frames.is_empty() {
        return Ok(StintExtraction::default());
    }
    if series.grid_ms < 1 {
        return Err(CoreError::InvalidArgument(
            "frame series has no positive grid".into(),
        ));
    }
    let g = series.grid_ms;
    let roster: BTreeSet<&str> = roster.iter().map(String::as_str).collect();

    let mut excluded = ExcludedFrameCounts::default();
    // Open run: (lineup, first tick, last tick).
    let mut run: Option<(Vec<String>, i64, i64)> = None;
    // Intervals per lineup, in time order.
    let mut by_lineup: Vec<(Vec<String>, Vec<(i64, i64)>)> = Vec::new();

    let close = |run: &mut Option<(Vec<String>, i64, i64)>,
                 by_lineup: &mut Vec<(Vec<String>, Vec<(i64, i64)>)>| {
        if let Some((lineup, start, last)) = run.take() {
            let interval = (start, last + g);
            match by_lineup.iter_mut().find(|(l, _)| *l == lineup) {
                Some((_, intervals)) => intervals.push(interval),
                None => by_lineup.push((lineup, vec![interval])),
            }
        }
    };

    for frame in &series.frames {
        let present: Vec<&str> = frame
            .positions
            .iter()
            .map(|(id, _, _)| id.as_str())
            .filter(|id| roster.contains(id))
            .collect();
        let key = match present.len() {
            5 => present.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            n if n < 5 => {
                excluded.under_populated += 1;
                close(&mut run, &mut by_lineup);
                continue;
            }
            _ => {
                excluded.over_populated += 1;
                close(&mut run, &mut by_lineup);
                continue;
            }
        };
        match run.as_mut() {
            Some((lineup, _, last)) if frame.contiguous && *lineup == key => {
                *last = frame.timestamp_ms;
            }
            _ => {
                close(&mut run, &mut by_lineup);
                run = Some((key, frame.timestamp_ms, frame.timestamp_ms));
            }
        }
    }
    close(&mut run, &mut by_lineup);

    let mut stints = Vec::new();
    for (lineup, intervals) in by_lineup {
        let total: i64 = intervals.iter().map(|(s, e)| e - s).sum();
        if total >= min_duration_ms {
            stints.push(Stint {
                lineup,
                intervals,
                total_duration_ms: total,
            });
        } else {
            excluded.below_min_duration += (total / g) as usize;
        }
    }
    stints.sort_by_key(|s| s.intervals[0].0);
    Ok(StintExtraction { stints, excluded })
}

/// One frame's dyad feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadVector {
    pub frame_ms: i64,
    /// Distances in the [`DYAD_PAIRS`] order, centimetres.
    pub distances: [f64; 10],
}

fn lineup_positions(frame: &Frame, lineup: &[String]) -> Result<[(f64, f64); 5]> {
    let mut out = [(0.0, 0.0); 5];
    for (i, player) in lineup.iter().enumerate() {
        let (x, y) = frame.position_of(player).ok_or_else(|| {
            CoreError::Misaligned(format!(
                "player {player} has no position in frame at {} ms",
                frame.timestamp_ms
            ))
        })?;
        out[i] = (x as f64, y as f64);
    }
    Ok(out)
}

/// Compute the dyad vectors for every frame of a stint. The frame series
/// must be the one the stint was extracted from; a stint tick without a
/// frame, or a frame missing a lineup player, is a misalignment error.
pub fn dyad_features(stint: &Stint, series: &FrameSeries) -> Result<Vec<DyadVector>> {
    let mut features = Vec::with_capacity(stint.frame_count(series.grid_ms));
    for tick in stint.ticks(series.grid_ms) {
        let idx = series
            .frames
            .binary_search_by_key(&tick, |f| f.timestamp_ms)
            .map_err(|_| {
                CoreError::Misaligned(format!("stint tick {tick} ms has no frame in the series"))
            })?;
        let pos = lineup_positions(&series.frames[idx], &stint.lineup)?;
        let mut distances = [0.0; 10];
        for (d, &(i, j)) in DYAD_PAIRS.iter().enumerate() {
            let dx = pos[i].0 - pos[j].0;
            let dy = pos[i].1 - pos[j].1;
            distances[d] = (dx * dx + dy * dy).sqrt();
        }
        features.push(DyadVector {
            frame_ms: tick,
            distances,
        });
    }
    Ok(features)
}

/// Mean x coordinate of the lineup in one frame, signed centimetres.
pub fn mean_x(frame: &Frame, lineup: &[String]) -> Result<f64> {
    let pos = lineup_positions(frame, lineup)?;
    Ok(pos.iter().map(|&(x, _)| x).sum::<f64>() / 5.0)
}

/// Parse a roster file: one player id per line, `#` comments and blank
/// lines ignored. Duplicates are an error.
pub fn parse_roster<R: Read>(reader: R) -> Result<Vec<String>> {
    let mut text = String::new();
    let mut reader = reader;
    reader
        .read_to_string(&mut text)
        .map_err(|e| CoreError::BadStream {
            stream: "roster",
            message: format!("unreadable: {e}"),
        })?;
    let mut roster = Vec::new();
    let mut seen = BTreeSet::new();
    for line in text.lines() {
        let id = line.trim();
        if id.is_empty() || id.starts_with('#') {
            continue;
        }
        if !seen.insert(id.to_string()) {
            return Err(CoreError::BadStream {
                stream: "roster",
                message: format!("duplicate player id `{id}`"),
            });
        }
        roster.push(id.to_string());
    }
    if roster.is_empty() {
        return Err(CoreError::BadStream {
            stream: "roster",
            message: "no player ids".into(),
        });
    }
    Ok(roster)
}

/// Serialized form of a stint extraction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StintsFile {
    pub grid_ms: i64,
    pub min_duration_ms: i64,
    pub excluded: ExcludedFrameCounts,
    pub stints: Vec<Stint>,
}

/// Write dyad features as CSV: `frame_ms,d01,d02,...,d34`. Distances use
/// shortest round-trip float formatting, so reading them back is exact.
pub fn write_features_csv<W: Write>(features: &[DyadVector], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| CoreError::BadStream {
        stream: "features",
        message: format!("write failed: {e}"),
    };
    let mut header = vec!["frame_ms".to_string()];
    header.extend(DYAD_PAIRS.iter().map(|&p| dyad_column(p)));
    w.write_record(&header).map_err(io_err)?;
    for f in features {
        let mut record = vec![f.frame_ms.to_string()];
        record.extend(f.distances.iter().map(|d| d.to_string()));
        w.write_record(&record).map_err(io_err)?;
    }
    w.flush().map_err(|e| CoreError::BadStream {
        stream: "features",
        message: format!("write failed: {e}"),
    })?;
    Ok(())
}

/// Read a features CSV written by [`write_features_csv`].
pub fn read_features_csv<R: Read>(reader: R) -> Result<Vec<DyadVector>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CoreError::BadStream {
            stream: "features",
            message: format!("unreadable header: {e}"),
        })?
        .clone();
    let col = |name: String| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(CoreError::MissingColumn {
                stream: "features",
                column: name,
            })
    };
    let ts_i = col("frame_ms".into())?;
    let mut dyad_i = [0usize; 10];
    for (d, &pair) in DYAD_PAIRS.iter().enumerate() {
        dyad_i[d] = col(dyad_column(pair))?;
    }
    let mut features = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let bad = |message: String| CoreError::BadRow {
            stream: "features",
            row,
            message,
        };
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let frame_ms: i64 = field(ts_i)
            .parse()
            .map_err(|_| bad(format!("bad frame_ms `{}`", field(ts_i))))?;
        let mut distances = [0.0f64; 10];
        for (d, &i) in dyad_i.iter().enumerate() {
            distances[d] = field(i)
                .parse()
                .map_err(|_| bad(format!("bad distance `{}`", field(i))))?;
            if !distances[d].is_finite() || distances[d] < 0.0 {
                return Err(bad(format!("distance {} out of range", distances[d])));
            }
        }
        features.push(DyadVector {
            frame_ms,
            distances,
        });
    }
    Ok(features)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(ts: i64, contiguous: bool, ids: &[&str]) -> Frame {
        let mut positions: Vec<(String, i32, i32)> =
            ids.iter().map(|id| (id.to_string(), 0, 0)).collect();
        positions.sort();
        Frame {
            timestamp_ms: ts,
            period: 1,
            contiguous,
            positions,
        }
    }

    fn series(frames: Vec<Frame>) -> FrameSeries {
        FrameSeries {
            grid_ms: 1000,
            frames,
        }
    }

    fn roster() -> Vec<String> {
        ["a", "b", "c", "d", "e", "f"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn substitution_splits_stints() {
        // a..e for 7 ticks, then d is replaced by f for 6 ticks.
        let mut frames = Vec::new();
        for i in 0..7 {
            frames.push(frame(i * 1000, i > 0, &["a", "b", "c", "d", "e"]));
        }
        for i in 7..13 {
            frames.push(frame(i * 1000, true, &["a", "b", "c", "e", "f"]));
        }
        let out = extract_stints(&series(frames), &roster(), 5000).unwrap();
        assert_eq!(out.stints.len(), 2);
        assert_eq!(out.stints[0].lineup, vec!["a", "b", "c", "d", "e"]);
        assert_eq!(out.stints[0].intervals, vec![(0, 7000)]);
        assert_eq!(out.stints[0].total_duration_ms, 7000);
        assert_eq!(out.stints[1].lineup, vec!["a", "b", "c", "e", "f"]);
        assert_eq!(out.stints[1].intervals, vec![(7000, 13_000)]);
    }

    #[test]
    fn interrupted_lineup_accumulates_into_one_stint() {
        let mut frames = Vec::new();
        for i in 0..4 {
            frames.push(frame(i * 1000, i > 0, &["a", "b", "c", "d", "e"]));
        }
        // Grid gap (dead ball), same lineup returns.
        for i in 6..10 {
            frames.push(frame(i * 1000, i > 6, &["a", "b", "c", "d", "e"]));
        }
        let out = extract_stints(&series(frames), &roster(), 8000).unwrap();
        assert_eq!(out.stints.len(), 1);
        assert_eq!(out.stints[0].intervals, vec![(0, 4000), (6000, 10_000)]);
        assert_eq!(out.stints[0].total_duration_ms, 8000);
        assert_eq!(out.stints[0].frame_count(1000), 8);
    }

    #[test]
    fn short_lineups_are_dropped_and_counted() {
        let mut frames = Vec::new();
        for i in 0..10 {
            frames.push(frame(i * 1000, i > 0, &["a", "b", "c", "d", "e"]));
        }
        frames.push(frame(10_000, true, &["a", "b", "c", "d", "f"]));
        let out = extract_stints(&series(frames), &roster(), 5000).unwrap();
        assert_eq!(out.stints.len(), 1);
        assert_eq!(out.excluded.below_min_duration, 1);
    }

    #[test]
    fn wrong_population_frames_are_counted() {
        let frames = vec![
            frame(0, false, &["a", "b", "c", "d"]),
            frame(1000, true, &["a", "b", "c", "d", "e", "f"]),
            frame(2000, true, &["a", "b", "c", "d", "e"]),
            frame(3000, true, &["a", "b", "c", "d", "e"]),
        ];
        let out = extract_stints(&series(frames), &roster(), 2000).unwrap();
        assert_eq!(out.excluded.under_populated, 1);
        assert_eq!(out.excluded.over_populated, 1);
        assert_eq!(out.stints.len(), 1);
        assert_eq!(out.stints[0].intervals, vec![(2000, 4000)]);
    }

    #[test]
    fn non_roster_players_are_invisible() {
        // Five roster players plus two opponents: still a valid stint frame.
        let frames = vec![
            frame(0, false, &["a", "b", "c", "d", "e", "x", "y"]),
            frame(1000, true, &["a", "b", "c", "d", "e", "x", "y"]),
        ];
        let out = extract_stints(&series(frames), &roster(), 1000).unwrap();
        assert_eq!(out.stints.len(), 1);
        assert_eq!(out.stints[0].lineup, vec!["a", "b", "c", "d", "e"]);
    }

    #[test]
    fn min_duration_must_be_positive() {
        assert!(matches!(
            extract_stints(&series(vec![]), &roster(), 0),
            Err(CoreError::InvalidArgument(_))
        ));
    }

    #[test]
    fn dyad_features_follow_canonical_order() {
        let mut f = frame(0, false, &["a", "b", "c", "d", "e"]);
        // Place b at (300, 400) so the a-b dyad is the 3-4-5 triangle.
        for (id, x, y) in f.positions.iter_mut() {
            if id == "b" {
                *x = 300;
                *y = 400;
            }
        }
        let stint = Stint {
            lineup: vec!["a".into(), "b".into(), "c".into(), "d".into(), "e".into()],
            intervals: vec![(0, 1000)],
            total_duration_ms: 1000,
        };
        let feats = dyad_features(&stint, &series(vec![f])).unwrap();
        assert_eq!(feats.len(), 1);
        let d = &feats[0].distances;
        assert_eq!(d[0], 500.0); // d01 = a-b
        assert_eq!(d[1], 0.0); // d02 = a-c
        assert_eq!(d[4], 500.0); // d12 = b-c
        assert_eq!(d[9], 0.0); // d34 = d-e
        assert_eq!(dyad_column(DYAD_PAIRS[0]), "d01");
        assert_eq!(dyad_label(&stint.lineup, DYAD_PAIRS[1]), "a-c");
    }

    #[test]
    fn dyad_features_reject_missing_players() {
        let f = frame(0, false, &["a", "b", "c", "d"]);
        let stint = Stint {
            lineup: vec!["a".into(), "b".into(), "c".into(), "d".into(), "e".into()],
            intervals: vec![(0, 1000)],
            total_duration_ms: 1000,
        };
        assert!(matches!(
            dyad_features(&stint, &series(vec![f])),
            Err(CoreError::Misaligned(_))
        ));
    }

    #[test]
    fn mean_x_averages_signed_coordinates() {
        let ids = ["a", "b", "c", "d", "e"];
        let xs = [-350, -420, -380, -500, -310];
        let mut positions: Vec<(String, i32, i32)> = ids
            .iter()
            .zip(xs)
            .map(|(id, x)| (id.to_string(), x, 0))
            .collect();
        positions.sort();
        let f = Frame {
            timestamp_ms: 0,
            period: 1,
            contiguous: false,
            positions,
        };
        let lineup: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
        assert_eq!(mean_x(&f, &lineup).unwrap(), -392.0);
    }

    #[test]
    fn roster_parsing_skips_comments_and_rejects_duplicates() {
        let text = "# team\np1\n\n p2 \np3\n";
        assert_eq!(parse_roster(text.as_bytes()).unwrap(), vec!["p1", "p2", "p3"]);
        assert!(parse_roster("p1\np1\n".as_bytes()).is_err());
        assert!(parse_roster("# only comments\n".as_bytes()).is_err());
    }

    #[test]
    fn features_csv_roundtrip_is_exact() {
        let features = vec![
            DyadVector {
                frame_ms: 0,
                distances: [
                    1.0,
                    2.5,
                    std::f64::consts::PI,
                    0.1,
                    700.0,
                    1e-9,
                    123.456,
                    0.0,
                    9.875,
                    42.0,
                ],
            },
            DyadVector {
                frame_ms: 50,
                distances: [0.0; 10],
            },
        ];
        let mut buf = Vec::new();
        write_features_csv(&features, &mut buf).unwrap();
        let back = read_features_csv(buf.as_slice()).unwrap();
        assert_eq!(back, features);
    }

    #[test]
    fn features_csv_rejects_negative_distances() {
        let csv = "frame_ms,d01,d02,d03,d04,d12,d13,d14,d23,d24,d34\n\
                   0,1,1,1,1,1,1,1,1,1,-1\n";
        assert!(read_features_csv(csv.as_bytes()).is_err());
    }
}
