//! Tracking and game-event ingestion.
//!
//! Input formats:
//!
//! * Tracking CSV — header `timestamp_ms,player_id,x_cm,y_cm` with an
//!   optional `z_cm` column (parsed, then ignored: the analysis is planar).
//!   Column names can be remapped through [`TrackingSchema`]. Malformed rows
//!   are counted and dropped; the parse fails only when the malformed
//!   fraction exceeds a tolerance.
//! * Events CSV — header `kind,start_ms,end_ms,period_index`. Interval
//!   kinds (`PRE_MATCH`, `QUARTER_BREAK`, `HALF_BREAK`, `POST_MATCH`,
//!   `TIMEOUT`, `FREE_THROW`) mark dead-ball spans to excise, half-open
//!   `[start_ms, end_ms)`. `PERIOD_START` is a point event carrying
//!   `period_index` (1-4) and anchors the period lookup.
//!
//! After filtering, samples are resampled onto a fixed millisecond grid by
//! carrying each player's last observation forward until it is older than a
//! staleness bound. A frame exists at a tick iff at least one player has a
//! fresh position there.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{CoreError, Result};

/// Half court length: baskets sit on the x axis at roughly +/-1400 cm.
pub const COURT_HALF_LENGTH_CM: i32 = 1400;
/// Half court width.
pub const COURT_HALF_WIDTH_CM: i32 = 750;
/// Tracking samples may legitimately sit out of bounds (throw-ins, benches
/// near the sideline), so validity extends past the lines by an apron:
/// two metres behind the baselines, one metre beyond the sidelines.
pub const COURT_APRON_X_CM: i32 = 200;
pub const COURT_APRON_Y_CM: i32 = 100;

/// Default resampling grid: 50 ms = 20 Hz.
pub const DEFAULT_GRID_MS: i64 = 50;
/// Default carry-forward staleness bound.
pub const DEFAULT_STALENESS_MS: i64 = 500;
/// Default tolerated fraction of malformed tracking rows.
pub const DEFAULT_MALFORMED_TOLERANCE: f64 = 0.05;

/// One raw tracking observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSample {
    pub timestamp_ms: i64,
    pub player_id: String,
    pub x_cm: i32,
    pub y_cm: i32,
}

/// Game event kinds. Everything except `PERIOD_START` is a dead-ball
/// interval whose samples are excised before analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    PreMatch,
    QuarterBreak,
    HalfBreak,
    PostMatch,
    Timeout,
    FreeThrow,
    PeriodStart,
}

impl EventKind {
    pub fn parse(s: &str) -> Option<EventKind> {
        Some(match s {
            "PRE_MATCH" => EventKind::PreMatch,
            "QUARTER_BREAK" => EventKind::QuarterBreak,
            "HALF_BREAK" => EventKind::HalfBreak,
            "POST_MATCH" => EventKind::PostMatch,
            "TIMEOUT" => EventKind::Timeout,
            "FREE_THROW" => EventKind::FreeThrow,
            "PERIOD_START" => EventKind::PeriodStart,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PreMatch => "PRE_MATCH",
            EventKind::QuarterBreak => "QUARTER_BREAK",
            EventKind::HalfBreak => "HALF_BREAK",
            EventKind::PostMatch => "POST_MATCH",
            EventKind::Timeout => "TIMEOUT",
            EventKind::FreeThrow => "FREE_THROW",
            EventKind::PeriodStart => "PERIOD_START",
        }
    }

    /// True for kinds whose `[start, end)` span is excised from play.
    pub fn is_exclusion(self) -> bool {
        !matches!(self, EventKind::PeriodStart)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameEvent {
    pub kind: EventKind,
    pub start_ms: i64,
    /// For `PERIOD_START` this equals `start_ms` (point event).
    pub end_ms: i64,
    /// Set for `PERIOD_START` only (1-4).
    pub period_index: Option<u8>,
}

/// Column names of the tracking CSV, remappable for foreign exports.
#[derive(Debug, Clone)]
pub struct TrackingSchema {
    pub timestamp: String,
    pub player: String,
    pub x: String,
    pub y: String,
    pub z: String,
}

impl Default for TrackingSchema {
    fn default() -> Self {
        TrackingSchema {
            timestamp: "timestamp_ms".into(),
            player: "player_id".into(),
            x: "x_cm".into(),
            y: "y_cm".into(),
            z: "z_cm".into(),
        }
    }
}

/// Result of parsing a tracking stream.
#[derive(Debug, Clone)]
pub struct ParsedTracking {
    pub samples: Vec<RawSample>,
    pub malformed: usize,
    pub total_rows: usize,
}

fn bad_stream(stream: &'static str, message: String) -> CoreError {
    CoreError::BadStream { stream, message }
}

/// Parse a tracking CSV. Rows failing any field check (non-integer numbers,
/// negative timestamp, empty player id, coordinates beyond the court apron)
/// are counted as malformed and skipped. Fails if the malformed fraction
/// exceeds `tolerance`.
pub fn parse_tracking<R: Read>(
    reader: R,
    schema: &TrackingSchema,
    tolerance: f64,
) -> Result<ParsedTracking> {
    if !(0.0..=1.0).contains(&tolerance) {
        return Err(CoreError::InvalidArgument(format!(
            "malformed-row tolerance must be in [0, 1], got {tolerance}"
        )));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| bad_stream("tracking", format!("unreadable header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| {
        col(name).ok_or_else(|| CoreError::MissingColumn {
            stream: "tracking",
            column: name.to_string(),
        })
    };
    let ts_i = require(&schema.timestamp)?;
    let pid_i = require(&schema.player)?;
    let x_i = require(&schema.x)?;
    let y_i = require(&schema.y)?;
    let z_i = col(&schema.z);

    let max_x = COURT_HALF_LENGTH_CM + COURT_APRON_X_CM;
    let max_y = COURT_HALF_WIDTH_CM + COURT_APRON_Y_CM;
    let mut samples = Vec::new();
    let mut malformed = 0usize;
    let mut total = 0usize;
    for record in rdr.records() {
        total += 1;
        let Ok(record) = record else {
            malformed += 1;
            continue;
        };
        let field = |i: usize| record.get(i);
        let parsed = (|| {
            let timestamp_ms: i64 = field(ts_i)?.parse().ok()?;
            let player_id = field(pid_i)?;
            let x_cm: i32 = field(x_i)?.parse().ok()?;
            let y_cm: i32 = field(y_i)?.parse().ok()?;
            if let Some(zi) = z_i {
                // z is ignored, but a present non-empty field must still be
                // a number for the row to count as well formed.
                match field(zi) {
                    Some("") | None => {}
                    Some(z) => {
                        z.parse::<i32>().ok()?;
                    }
                }
            }
            if timestamp_ms < 0
                || player_id.is_empty()
                || x_cm.abs() > max_x
                || y_cm.abs() > max_y
            {
                return None;
            }
            Some(RawSample {
                timestamp_ms,
                player_id: player_id.to_string(),
                x_cm,
                y_cm,
            })
        })();
        match parsed {
            Some(sample) => samples.push(sample),
            None => malformed += 1,
        }
    }
    if malformed as f64 > tolerance * total as f64 {
        return Err(CoreError::TooManyMalformed {
            stream: "tracking",
            malformed,
            total,
            tolerance,
        });
    }
    Ok(ParsedTracking {
        samples,
        malformed,
        total_rows: total,
    })
}

/// Parse a game-event CSV. Unlike tracking rows, events are structural:
/// any malformed row is an error, interval kinds must have `end > start`,
/// `PERIOD_START` must carry a period index in 1-4, and intervals of the
/// same kind must not overlap.
pub fn parse_events<R: Read>(reader: R) -> Result<Vec<GameEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| bad_stream("events", format!("unreadable header: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CoreError::MissingColumn {
                stream: "events",
                column: name.to_string(),
            })
    };
    let kind_i = col("kind")?;
    let start_i = col("start_ms")?;
    let end_i = col("end_ms")?;
    let period_i = col("period_index")?;

    let bad_row = |row: usize, message: String| CoreError::BadRow {
        stream: "events",
        row,
        message,
    };
    let mut events = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| bad_row(row, e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let kind = EventKind::parse(field(kind_i))
            .ok_or_else(|| bad_row(row, format!("unknown event kind `{}`", field(kind_i))))?;
        let start_ms: i64 = field(start_i)
            .parse()
            .map_err(|_| bad_row(row, format!("bad start_ms `{}`", field(start_i))))?;
        let end_field = field(end_i);
        let period_field = field(period_i);
        let period_index = if period_field.is_empty() {
            None
        } else {
            Some(
                period_field
                    .parse::<u8>()
                    .map_err(|_| bad_row(row, format!("bad period_index `{period_field}`")))?,
            )
        };
        let event = if kind == EventKind::PeriodStart {
            let period = period_index
                .ok_or_else(|| bad_row(row, "PERIOD_START requires period_index".into()))?;
            if !(1..=4).contains(&period) {
                return Err(bad_row(row, format!("period_index {period} out of 1-4")));
            }
            GameEvent {
                kind,
                start_ms,
                end_ms: start_ms,
                period_index: Some(period),
            }
        } else {
            let end_ms: i64 = end_field
                .parse()
                .map_err(|_| bad_row(row, format!("bad end_ms `{end_field}`")))?;
            if end_ms <= start_ms {
                return Err(bad_row(
                    row,
                    format!("interval end {end_ms} must exceed start {start_ms}"),
                ));
            }
            GameEvent {
                kind,
                start_ms,
                end_ms,
                period_index: None,
            }
        };
        if event.start_ms < 0 {
            return Err(bad_row(row, format!("negative start_ms {}", event.start_ms)));
        }
        events.push(event);
    }

    // Same-kind intervals must not overlap (half-open, so touching is fine).
    let mut by_kind: BTreeMap<&'static str, Vec<(i64, i64)>> = BTreeMap::new();
    for e in events.iter().filter(|e| e.kind.is_exclusion()) {
        by_kind
            .entry(e.kind.as_str())
            .or_default()
            .push((e.start_ms, e.end_ms));
    }
    for (kind, mut spans) in by_kind {
        spans.sort_unstable();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(bad_stream(
                    "events",
                    format!(
                        "{kind} intervals [{}, {}) and [{}, {}) overlap",
                        w[0].0, w[0].1, w[1].0, w[1].1
                    ),
                ));
            }
        }
    }
    Ok(events)
}

/// Merge possibly-overlapping half-open intervals into a disjoint sorted
/// list. Touching intervals are coalesced.
pub fn merge_intervals(mut spans: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    spans.sort_unstable();
    let mut merged: Vec<(i64, i64)> = Vec::with_capacity(spans.len());
    for (start, end) in spans {
        match merged.last_mut() {
            Some(last) if start <= last.1 => last.1 = last.1.max(end),
            _ => merged.push((start, end)),
        }
    }
    merged
}

/// The merged dead-ball intervals of an event stream.
pub fn exclusion_intervals(events: &[GameEvent]) -> Vec<(i64, i64)> {
    merge_intervals(
        events
            .iter()
            .filter(|e| e.kind.is_exclusion())
            .map(|e| (e.start_ms, e.end_ms))
            .collect(),
    )
}

fn in_intervals(sorted_disjoint: &[(i64, i64)], ts: i64) -> bool {
    let idx = sorted_disjoint.partition_point(|&(start, _)| start <= ts);
    idx > 0 && sorted_disjoint[idx - 1].1 > ts
}

/// Drop samples whose timestamps fall inside any dead-ball interval.
/// Order is preserved. The event stream must contain at least one
/// `PRE_MATCH`, one `POST_MATCH` and one `PERIOD_START` — without them the
/// stream cannot describe a playable game.
pub fn filter_active(samples: &[RawSample], events: &[GameEvent]) -> Result<Vec<RawSample>> {
    for (kind, name) in [
        (EventKind::PreMatch, "PRE_MATCH"),
        (EventKind::PostMatch, "POST_MATCH"),
        (EventKind::PeriodStart, "PERIOD_START"),
    ] {
        if !events.iter().any(|e| e.kind == kind) {
            return Err(CoreError::MissingEvent { kind: name });
        }
    }
    let exclusions = exclusion_intervals(events);
    Ok(samples
        .iter()
        .filter(|s| !in_intervals(&exclusions, s.timestamp_ms))
        .cloned()
        .collect())
}

/// Lookup from timestamp to period index, built from `PERIOD_START` events.
#[derive(Debug, Clone, Default)]
pub struct PeriodMap {
    starts: Vec<(i64, u8)>,
}

impl PeriodMap {
    pub fn from_events(events: &[GameEvent]) -> Self {
        let mut starts: Vec<(i64, u8)> = events
            .iter()
            .filter(|e| e.kind == EventKind::PeriodStart)
            .filter_map(|e| e.period_index.map(|p| (e.start_ms, p)))
            .collect();
        starts.sort_unstable();
        PeriodMap { starts }
    }

    /// Period in effect at `ts`: the most recent start at or before it.
    pub fn period_at(&self, ts: i64) -> Option<u8> {
        let idx = self.starts.partition_point(|&(start, _)| start <= ts);
        (idx > 0).then(|| self.starts[idx - 1].1)
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }
}

/// One resampled frame: every player with a fresh position at this tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub timestamp_ms: i64,
    /// Period index 1-4, or 0 when no `PERIOD_START` precedes the tick.
    pub period: u8,
    /// True when the previous emitted frame sits exactly one grid step back.
    pub contiguous: bool,
    /// `(player_id, x_cm, y_cm)` sorted by player id.
    pub positions: Vec<(String, i32, i32)>,
}

impl Frame {
    pub fn position_of(&self, player: &str) -> Option<(i32, i32)> {
        self.positions
            .binary_search_by(|(id, _, _)| id.as_str().cmp(player))
            .ok()
            .map(|i| (self.positions[i].1, self.positions[i].2))
    }
}

/// Frames on a fixed grid, ordered by timestamp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSeries {
    pub grid_ms: i64,
    pub frames: Vec<Frame>,
}

/// Resampling parameters.
#[derive(Debug, Clone, Copy)]
pub struct ResampleSpec {
    pub grid_ms: i64,
    /// A carried-forward position older than this is dropped from the frame.
    pub staleness_ms: i64,
}

impl Default for ResampleSpec {
    fn default() -> Self {
        ResampleSpec {
            grid_ms: DEFAULT_GRID_MS,
            staleness_ms: DEFAULT_STALENESS_MS,
        }
    }
}

/// Resample onto the grid with last-observation-carried-forward. See
/// [`resample_with`] for the full-control variant; this one assumes no
/// excised intervals and no period lookup.
pub fn resample_frames(samples: &[RawSample], spec: ResampleSpec) -> Result<FrameSeries> {
    resample_with(samples, spec, &[], &PeriodMap::default())
}

/// Resample onto the grid. Ticks are the multiples of `grid_ms` from the
/// first sample (rounded up to the grid) through the last sample plus the
/// staleness bound. At each tick every player's most recent observation is
/// carried forward if it is at most `staleness_ms` old; a frame is emitted
/// iff at least one player qualifies.
///
/// `exclusions` are half-open dead-ball intervals: no tick inside them
/// produces a frame. Carry-forward alone cannot guarantee that (a sample
/// just before an interval would otherwise stay fresh into it), which is
/// why the intervals are passed here rather than handled upstream. Frames
/// straddling a skipped span come out non-contiguous automatically.
pub fn resample_with(
    samples: &[RawSample],
    spec: ResampleSpec,
    exclusions: &[(i64, i64)],
    periods: &PeriodMap,
) -> Result<FrameSeries> {
    if spec.grid_ms < 1 {
        return Err(CoreError::InvalidArgument(format!(
            "grid_ms must be >= 1, got {}",
            spec.grid_ms
        )));
    }
    if spec.staleness_ms < spec.grid_ms {
        return Err(CoreError::InvalidArgument(format!(
            "staleness_ms ({}) must be >= grid_ms ({})",
            spec.staleness_ms, spec.grid_ms
        )));
    }
    let mut series = FrameSeries {
        grid_ms: spec.grid_ms,
        frames: Vec::new(),
    };
    if samples.is_empty() {
        return Ok(series);
    }
    let exclusions = merge_intervals(exclusions.to_vec());

    // Per-player observation tracks. Stable sort keeps file order within
    // equal timestamps, and lookup takes the last entry at or before the
    // tick, so on duplicate timestamps the later row wins.
    let mut tracks: BTreeMap<&str, Vec<(i64, i32, i32)>> = BTreeMap::new();
    for s in samples {
        tracks
            .entry(s.player_id.as_str())
            .or_default()
            .push((s.timestamp_ms, s.x_cm, s.y_cm));
    }
    let mut players: Vec<(&str, Vec<(i64, i32, i32)>)> = tracks.into_iter().collect();
    for (_, track) in players.iter_mut() {
        track.sort_by_key(|&(ts, _, _)| ts);
    }

    let min_ts = samples.iter().map(|s| s.timestamp_ms).min().unwrap();
    let max_ts = samples.iter().map(|s| s.timestamp_ms).max().unwrap();
    let g = spec.grid_ms;
    let mut tick = min_ts.div_euclid(g) * g;
    if tick < min_ts {
        tick += g;
    }
    let last_tick = max_ts + spec.staleness_ms;

    // `cursors[p]` = number of observations of player p at or before `tick`.
    let mut cursors = vec![0usize; players.len()];
    let mut prev_emitted: Option<i64> = None;
    while tick <= last_tick {
        for (p, (_, track)) in players.iter().enumerate() {
            while cursors[p] < track.len() && track[cursors[p]].0 <= tick {
                cursors[p] += 1;
            }
        }
        if in_intervals(&exclusions, tick) {
            tick += g;
            continue;
        }
        let mut positions = Vec::new();
        for (p, (name, track)) in players.iter().enumerate() {
            if cursors[p] == 0 {
                continue;
            }
            let (obs_ts, x, y) = track[cursors[p] - 1];
            if tick - obs_ts <= spec.staleness_ms {
                positions.push((name.to_string(), x, y));
            }
        }
        if !positions.is_empty() {
            let contiguous = prev_emitted == Some(tick - g);
            series.frames.push(Frame {
                timestamp_ms: tick,
                period: periods.period_at(tick).unwrap_or(0),
                contiguous,
                positions,
            });
            prev_emitted = Some(tick);
        }
        tick += g;
    }
    Ok(series)
}

/// Write a frame series as CSV, one row per player per frame:
/// `timestamp_ms,period,contiguous,player_id,x_cm,y_cm`.
pub fn write_frames_csv<W: Write>(series: &FrameSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| bad_stream("frames", format!("write failed: {e}"));
    w.write_record(["timestamp_ms", "period", "contiguous", "player_id", "x_cm", "y_cm"])
        .map_err(io_err)?;
    for frame in &series.frames {
        for (player, x, y) in &frame.positions {
            w.write_record([
                frame.timestamp_ms.to_string(),
                frame.period.to_string(),
                if frame.contiguous { "1" } else { "0" }.to_string(),
                player.clone(),
                x.to_string(),
                y.to_string(),
            ])
            .map_err(io_err)?;
        }
    }
    w.flush()
        .map_err(|e| bad_stream("frames", format!("write failed: {e}")))?;
    Ok(())
}

/// Read a frame series written by [`write_frames_csv`]. The grid is
/// inferred from the gap before any frame flagged contiguous, and the
/// contiguity flags are validated against it.
pub fn read_frames_csv<R: Read>(reader: R) -> Result<FrameSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| bad_stream("frames", format!("unreadable header: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CoreError::MissingColumn {
                stream: "frames",
                column: name.to_string(),
            })
    };
    let ts_i = col("timestamp_ms")?;
    let period_i = col("period")?;
    let contig_i = col("contiguous")?;
    let pid_i = col("player_id")?;
    let x_i = col("x_cm")?;
    let y_i = col("y_cm")?;

    let mut frames: Vec<Frame> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let bad = |message: String| CoreError::BadRow {
            stream: "frames",
            row,
            message,
        };
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let ts: i64 = field(ts_i)
            .parse()
            .map_err(|_| bad(format!("bad timestamp_ms `{}`", field(ts_i))))?;
        let period: u8 = field(period_i)
            .parse()
            .map_err(|_| bad(format!("bad period `{}`", field(period_i))))?;
        let contiguous = match field(contig_i) {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("bad contiguous flag `{other}`"))),
        };
        let player = field(pid_i).to_string();
        if player.is_empty() {
            return Err(bad("empty player_id".into()));
        }
        let x: i32 = field(x_i)
            .parse()
            .map_err(|_| bad(format!("bad x_cm `{}`", field(x_i))))?;
        let y: i32 = field(y_i)
            .parse()
            .map_err(|_| bad(format!("bad y_cm `{}`", field(y_i))))?;

        match frames.last_mut() {
            Some(last) if last.timestamp_ms == ts => {
                if last.period != period || last.contiguous != contiguous {
                    return Err(bad(format!(
                        "frame at {ts} ms has inconsistent period/contiguous flags"
                    )));
                }
                last.positions.push((player, x, y));
            }
            Some(last) if last.timestamp_ms > ts => {
                return Err(bad(format!(
                    "timestamps must be nondecreasing ({} then {ts})",
                    last.timestamp_ms
                )));
            }
            _ => frames.push(Frame {
                timestamp_ms: ts,
                period,
                contiguous,
                positions: vec![(player, x, y)],
            }),
        }
    }
    for frame in frames.iter_mut() {
        frame.positions.sort();
    }

    // Infer the grid from contiguous neighbours, then check every flag.
    let mut grid_ms = None;
    for w in frames.windows(2) {
        if w[1].contiguous {
            let gap = w[1].timestamp_ms - w[0].timestamp_ms;
            match grid_ms {
                None => grid_ms = Some(gap),
                Some(g) if g != gap => {
                    return Err(bad_stream(
                        "frames",
                        format!("contiguous gaps disagree: {g} ms vs {gap} ms"),
                    ));
                }
                Some(_) => {}
            }
        }
    }
    if let Some(first) = frames.first() {
        if first.contiguous {
            return Err(bad_stream(
                "frames",
                "first frame cannot be flagged contiguous".into(),
            ));
        }
    }
    let grid_ms = match grid_ms {
        Some(g) => g,
        None if frames.len() <= 1 => {
            return Err(bad_stream(
                "frames",
                "need at least two contiguous frames to infer the grid".into(),
            ));
        }
        None => {
            return Err(bad_stream(
                "frames",
                "no contiguous frames; grid cannot be inferred".into(),
            ));
        }
    };
    for w in frames.windows(2) {
        let gap = w[1].timestamp_ms - w[0].timestamp_ms;
        if w[1].contiguous != (gap == grid_ms) {
            return Err(bad_stream(
                "frames",
                format!(
                    "contiguous flag at {} ms inconsistent with {} ms gap (grid {} ms)",
                    w[1].timestamp_ms, gap, grid_ms
                ),
            ));
        }
    }
    Ok(FrameSeries { grid_ms, frames })
}
