//! Pipeline orchestration: the `run-all` flow plus the error and artifact
//! plumbing shared by the single-stage subcommands.
//!
//! Every failure carries the pipeline stage it happened in, so callers can
//! report "which module broke" without parsing message text, and every
//! artifact lands in a manifest with its SHA-256 so reruns can be compared
//! byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use courtphase_core::cluster::{
    bd_td_curve, count_distinct, kmeans, select_k, CurvePoint, KmeansParams, ModelFile, Point,
};
use courtphase_core::error::CoreError;
use courtphase_core::ingest::{
    exclusion_intervals, filter_active, parse_events, parse_tracking, resample_with,
    write_frames_csv, FrameSeries, PeriodMap, ResampleSpec, TrackingSchema,
};
use courtphase_core::mds::{
    classical_mds, matrix_rows, mean_distance_matrix, stint_average_matrix, MdsEntry, MdsFile,
};
use courtphase_core::phase::{
    cluster_phase_table, label_frame, switch_rate, transition_matrix, AttackDirection, PhaseFile,
    PhaseLabel,
};
use courtphase_core::segment::{
    dyad_features, extract_stints, parse_roster, write_features_csv, Stint, StintsFile,
};
use courtphase_core::shots::{attach_shots, parse_shots, shot_report, ShotEvent, ShotsFile};

use crate::{plot, report};

/// A pipeline failure, attributed to the stage it happened in.
#[derive(Debug)]
pub struct RunError {
    pub module: &'static str,
    pub error: CoreError,
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.error.class().exit_code())
    }

    /// One-line machine-readable form, emitted on stderr by the binary.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "module": self.module,
            "class": self.error.class().as_str(),
            "exit_code": self.exit_code(),
            "message": self.error.to_string(),
        })
        .to_string()
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}", self.module, self.error)
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// Wrap a core error with its pipeline stage.
pub fn stage(module: &'static str) -> impl Fn(CoreError) -> RunError {
    move |error| RunError { module, error }
}

/// Open an input file; a missing or unreadable path is a configuration
/// error (the config's job is to reference inputs that exist).
pub fn open_input(module: &'static str, path: &Path) -> RunResult<fs::File> {
    fs::File::open(path).map_err(|e| RunError {
        module,
        error: CoreError::InvalidConfig(format!("cannot open {}: {e}", path.display())),
    })
}

/// Read an input file into a string (same error policy as [`open_input`]).
pub fn read_input(module: &'static str, path: &Path) -> RunResult<String> {
    fs::read_to_string(path).map_err(|e| RunError {
        module,
        error: CoreError::InvalidConfig(format!("cannot read {}: {e}", path.display())),
    })
}

/// Parse a JSON artifact produced by an earlier stage.
pub fn read_json<T: serde::de::DeserializeOwned>(
    module: &'static str,
    stream: &'static str,
    path: &Path,
) -> RunResult<T> {
    let file = open_input(module, path)?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| RunError {
        module,
        error: CoreError::BadStream {
            stream,
            message: format!("{}: {e}", path.display()),
        },
    })
}

/// Write one output file (single-stage commands, no manifest involved).
pub fn write_output(module: &'static str, path: &Path, bytes: &[u8]) -> RunResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| RunError {
                module,
                error: CoreError::InvalidConfig(format!(
                    "cannot create directory {}: {e}",
                    parent.display()
                )),
            })?;
        }
    }
    fs::write(path, bytes).map_err(|e| RunError {
        module,
        error: CoreError::Internal(format!("cannot write {}: {e}", path.display())),
    })
}

/// Serialize a JSON artifact: pretty-printed with a trailing newline.
pub fn to_json_artifact<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    text
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Collects artifacts as they are written and renders the manifest.
pub struct ArtifactSink {
    out_dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl ArtifactSink {
    pub fn new(out_dir: &Path) -> RunResult<ArtifactSink> {
        fs::create_dir_all(out_dir).map_err(|e| RunError {
            module: "cli",
            error: CoreError::InvalidConfig(format!(
                "cannot create output directory {}: {e}",
                out_dir.display()
            )),
        })?;
        Ok(ArtifactSink {
            out_dir: out_dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> RunResult<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| RunError {
            module: "cli",
            error: CoreError::Internal(format!("cannot write {}: {e}", path.display())),
        })?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Write `manifest.json` (sorted by artifact path, not listing itself)
    /// and return the full entry list.
    pub fn finish(mut self) -> RunResult<Vec<ManifestEntry>> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        #[derive(Serialize)]
        struct Manifest<'a> {
            artifacts: &'a [ManifestEntry],
        }
        let text = to_json_artifact(&Manifest {
            artifacts: &self.entries,
        });
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, text.as_bytes()).map_err(|e| RunError {
            module: "cli",
            error: CoreError::Internal(format!("cannot write {}: {e}", path.display())),
        })?;
        Ok(self.entries)
    }
}

/// Everything `run-all` needs. Paths point at the four input streams; the
/// numeric parameters mirror the single-stage flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tracking: PathBuf,
    pub events: PathBuf,
    pub roster: PathBuf,
    pub shots: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub grid_ms: i64,
    pub staleness_ms: i64,
    pub malformed_tolerance: f64,
    pub min_minutes: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub threshold: f64,
    pub restarts: usize,
    pub seed: u64,
    pub band_cm: f64,
    /// `"+x"` or `"-x"`.
    pub attack: String,
    pub tolerance_ms: i64,
}

/// The semantic parameters echoed into `params.json`. Input paths are
/// deliberately left out so that reruns over the same data produce
/// byte-identical artifacts regardless of where the files live.
#[derive(Serialize)]
struct ParamsEcho<'a> {
    grid_ms: i64,
    staleness_ms: i64,
    malformed_tolerance: f64,
    min_minutes: f64,
    k_min: usize,
    k_max: usize,
    threshold: f64,
    restarts: usize,
    seed: u64,
    band_cm: f64,
    attack: &'a str,
    tolerance_ms: i64,
}

pub struct RunSummary {
    pub stints: usize,
    pub artifacts: Vec<ManifestEntry>,
}

fn validate(cfg: &RunConfig) -> RunResult<AttackDirection> {
    let bad = |msg: String| RunError {
        module: "cli",
        error: CoreError::InvalidConfig(msg),
    };
    if cfg.k_min < 1 || cfg.k_min > cfg.k_max {
        return Err(bad(format!(
            "need 1 <= k_min <= k_max, got {}..{}",
            cfg.k_min, cfg.k_max
        )));
    }
    if !(cfg.threshold > 0.0) {
        return Err(bad(format!("threshold must be > 0, got {}", cfg.threshold)));
    }
    if cfg.restarts == 0 {
        return Err(bad("restarts must be >= 1".into()));
    }
    if !(cfg.min_minutes > 0.0) {
        return Err(bad(format!(
            "min stint minutes must be > 0, got {}",
            cfg.min_minutes
        )));
    }
    if !(cfg.band_cm >= 0.0) {
        return Err(bad(format!("band_cm must be >= 0, got {}", cfg.band_cm)));
    }
    if cfg.tolerance_ms < 0 {
        return Err(bad(format!(
            "shot tolerance must be >= 0 ms, got {}",
            cfg.tolerance_ms
        )));
    }
    AttackDirection::parse(&cfg.attack)
        .ok_or_else(|| bad(format!("attack direction must be `+x` or `-x`, got `{}`", cfg.attack)))
}

/// Fit the deviance curve and final model for one stint's feature points.
/// The k range is clamped to the number of distinct points so degenerate
/// stints (e.g. a frozen lineup) saturate instead of erroring.
pub fn fit_cluster_model(
    points: &[Point],
    feature_ts: &[i64],
    stint: Option<&Stint>,
    grid_ms: i64,
    k_min: usize,
    k_max: usize,
    threshold: f64,
    seed: u64,
    restarts: usize,
) -> RunResult<ModelFile> {
    let e = stage("cluster");
    let distinct = count_distinct(points);
    if distinct == 0 {
        return Err(e(CoreError::InvalidArgument(
            "cannot cluster an empty stint".into(),
        )));
    }
    let k_max_eff = k_max.min(distinct);
    let k_min_eff = k_min.min(k_max_eff);
    let curve: Vec<CurvePoint> =
        bd_td_curve(points, k_min_eff, k_max_eff, seed, restarts).map_err(&e)?;
    let sel = select_k(&curve, threshold).map_err(&e)?;
    let mut params = KmeansParams::new(sel.chosen_k, seed);
    params.restarts = restarts;
    let model = kmeans(points, &params).map_err(&e)?;
    Ok(ModelFile {
        seed,
        restarts,
        threshold,
        curve,
        k: sel.chosen_k,
        saturated: sel.saturated,
        non_monotone: sel.non_monotone,
        wcss: model.wcss,
        tss: model.tss,
        bd_td: model.bd_td,
        grid_ms,
        centroids: model.centroids.iter().map(|c| c.to_vec()).collect(),
        assignments: feature_ts
            .iter()
            .copied()
            .zip(model.assignments.iter().copied())
            .collect(),
        stint: stint.cloned(),
    })
}

/// MDS artifact for one fitted model: stint-average matrix plus, per
/// cluster, the mean distance matrix and its 2-D embedding.
pub fn build_mds_file(
    dyads: &[courtphase_core::segment::DyadVector],
    assignments: &[usize],
    k: usize,
    lineup: &[String],
) -> RunResult<MdsFile> {
    let e = stage("mds");
    let average = stint_average_matrix(dyads).map_err(&e)?;
    let mut clusters = Vec::with_capacity(k);
    for c in 0..k {
        let mean = mean_distance_matrix(dyads, assignments, c).map_err(&e)?;
        let embedding = classical_mds(&mean.matrix, c).map_err(&e)?;
        clusters.push(MdsEntry {
            cluster: c,
            frames: mean.frames,
            matrix: matrix_rows(&mean.matrix),
            coords: embedding.coords.to_vec(),
            eigenvalues: embedding.eigenvalues,
            strain_share: embedding.strain_share,
        });
    }
    Ok(MdsFile {
        players: lineup.to_vec(),
        stint_average: matrix_rows(&average),
        clusters,
    })
}

/// Phase artifact for one fitted model: per-frame labels, the
/// cluster-by-phase table, the switch matrix, and the switch-rate summary.
pub fn build_phase_file(
    series: &FrameSeries,
    stint: &Stint,
    model: &ModelFile,
    band_cm: f64,
    attack_str: &str,
    attack: AttackDirection,
) -> RunResult<PhaseFile> {
    let e = stage("phase");
    let frames: Vec<&courtphase_core::ingest::Frame> = series
        .frames
        .iter()
        .filter(|f| stint.contains(f.timestamp_ms))
        .collect();
    if frames.len() != model.assignments.len()
        || frames
            .iter()
            .zip(model.assignments.iter())
            .any(|(f, &(ts, _))| f.timestamp_ms != ts)
    {
        return Err(e(CoreError::Misaligned(format!(
            "model has {} assignments for {} stint frames",
            model.assignments.len(),
            frames.len()
        ))));
    }
    let mut labels: Vec<PhaseLabel> = Vec::with_capacity(frames.len());
    for f in &frames {
        labels.push(label_frame(f, &stint.lineup, band_cm, attack).map_err(&e)?);
    }
    let assignments: Vec<usize> = model.assignments.iter().map(|&(_, c)| c).collect();
    // Contiguity within the stint subset: exactly one grid step back.
    let contiguous: Vec<bool> = frames
        .iter()
        .enumerate()
        .map(|(i, f)| i > 0 && f.timestamp_ms - frames[i - 1].timestamp_ms == series.grid_ms)
        .collect();
    let table = cluster_phase_table(&assignments, &labels, model.k).map_err(&e)?;
    let transitions = transition_matrix(&assignments, &contiguous, model.k).map_err(&e)?;
    let switch_stats = switch_rate(transitions.switches, stint.total_duration_ms).map_err(&e)?;
    Ok(PhaseFile {
        band_cm,
        attack: attack_str.to_string(),
        k: model.k,
        frames: model
            .assignments
            .iter()
            .zip(labels.iter())
            .map(|(&(ts, c), &l)| (ts, c, l))
            .collect(),
        table,
        transitions,
        switch_stats,
    })
}

/// Shots artifact: attach shot events to a model's frames and tally per
/// cluster.
pub fn build_shots_file(
    shots: &[ShotEvent],
    model: &ModelFile,
    tolerance_ms: i64,
) -> RunResult<ShotsFile> {
    let e = stage("shots");
    let attached = attach_shots(shots, &model.assignments, tolerance_ms).map_err(&e)?;
    let report = shot_report(&attached, model.k).map_err(&e)?;
    Ok(ShotsFile {
        tolerance_ms,
        report,
        shots: attached,
    })
}

/// The full pipeline: ingest, segment, then per stint cluster, embed,
/// label, attach shots, and plot; finally write the manifest.
pub fn run_all(cfg: &RunConfig) -> RunResult<RunSummary> {
    let attack = validate(cfg)?;
    let mut sink = ArtifactSink::new(&cfg.out_dir)?;

    // Ingest.
    let e = stage("ingest");
    let tracking = parse_tracking(
        open_input("ingest", &cfg.tracking)?,
        &TrackingSchema::default(),
        cfg.malformed_tolerance,
    )
    .map_err(&e)?;
    let events = parse_events(open_input("ingest", &cfg.events)?).map_err(&e)?;
    let active = filter_active(&tracking.samples, &events).map_err(&e)?;
    let series = resample_with(
        &active,
        ResampleSpec {
            grid_ms: cfg.grid_ms,
            staleness_ms: cfg.staleness_ms,
        },
        &exclusion_intervals(&events),
        &PeriodMap::from_events(&events),
    )
    .map_err(&e)?;
    let mut frames_csv = Vec::new();
    write_frames_csv(&series, &mut frames_csv).map_err(&e)?;
    sink.write("frames.csv", &frames_csv)?;

    // Segment.
    let e = stage("segment");
    let roster = parse_roster(open_input("segment", &cfg.roster)?).map_err(&e)?;
    let min_ms = (cfg.min_minutes * 60_000.0).round() as i64;
    let extraction = extract_stints(&series, &roster, min_ms).map_err(&e)?;
    if extraction.stints.is_empty() {
        return Err(e(CoreError::BadStream {
            stream: "stints",
            message: "no lineup reached the minimum stint duration".into(),
        }));
    }
    sink.write(
        "stints.json",
        to_json_artifact(&StintsFile {
            grid_ms: series.grid_ms,
            min_duration_ms: min_ms,
            excluded: extraction.excluded,
            stints: extraction.stints.clone(),
        })
        .as_bytes(),
    )?;

    // Shot events parse once, attach per stint.
    let shot_events: Option<Vec<ShotEvent>> = match &cfg.shots {
        Some(path) => {
            Some(parse_shots(open_input("shots", path)?).map_err(stage("shots"))?)
        }
        None => None,
    };

    for (index, stint) in extraction.stints.iter().enumerate() {
        let suffix = format!("stint{index}");

        let e = stage("segment");
        let dyads = dyad_features(stint, &series).map_err(&e)?;
        let mut features_csv = Vec::new();
        write_features_csv(&dyads, &mut features_csv).map_err(&e)?;
        sink.write(&format!("features_{suffix}.csv"), &features_csv)?;

        let points: Vec<Point> = dyads.iter().map(|d| d.distances).collect();
        let feature_ts: Vec<i64> = dyads.iter().map(|d| d.frame_ms).collect();
        let model = fit_cluster_model(
            &points,
            &feature_ts,
            Some(stint),
            series.grid_ms,
            cfg.k_min,
            cfg.k_max,
            cfg.threshold,
            cfg.seed,
            cfg.restarts,
        )?;
        sink.write(
            &format!("model_{suffix}.json"),
            to_json_artifact(&model).as_bytes(),
        )?;

        let assignments: Vec<usize> = model.assignments.iter().map(|&(_, c)| c).collect();
        let mds_file = build_mds_file(&dyads, &assignments, model.k, &stint.lineup)?;
        sink.write(
            &format!("mds_{suffix}.json"),
            to_json_artifact(&mds_file).as_bytes(),
        )?;

        let phase_file = build_phase_file(&series, stint, &model, cfg.band_cm, &cfg.attack, attack)?;
        sink.write(
            &format!("phase_{suffix}.json"),
            to_json_artifact(&phase_file).as_bytes(),
        )?;
        sink.write(
            &format!("phase_table_{suffix}.txt"),
            report::phase_table_text(&phase_file.table).as_bytes(),
        )?;
        sink.write(
            &format!("phase_table_{suffix}.csv"),
            report::phase_table_csv(&phase_file.table).as_bytes(),
        )?;
        sink.write(
            &format!("transitions_{suffix}.txt"),
            report::transitions_text(&phase_file.transitions, &phase_file.switch_stats).as_bytes(),
        )?;
        sink.write(
            &format!("transitions_{suffix}.csv"),
            report::transitions_csv(&phase_file.transitions).as_bytes(),
        )?;

        if let Some(shots) = &shot_events {
            let shots_file = build_shots_file(shots, &model, cfg.tolerance_ms)?;
            sink.write(
                &format!("shots_{suffix}.json"),
                to_json_artifact(&shots_file).as_bytes(),
            )?;
            sink.write(
                &format!("shots_report_{suffix}.txt"),
                report::shots_text(&shots_file.report).as_bytes(),
            )?;
            sink.write(
                &format!("shots_report_{suffix}.csv"),
                report::shots_csv(&shots_file.report).as_bytes(),
            )?;
        }

        let e = stage("plot");
        let profile_svg = plot::profile_plot(&mds_file).map_err(&e)?;
        sink.write(&format!("profile_{suffix}.svg"), profile_svg.as_bytes())?;
        let mds_svg = plot::mds_plot(&mds_file).map_err(&e)?;
        sink.write(&format!("mds_map_{suffix}.svg"), mds_svg.as_bytes())?;
    }

    sink.write(
        "params.json",
        to_json_artifact(&ParamsEcho {
            grid_ms: cfg.grid_ms,
            staleness_ms: cfg.staleness_ms,
            malformed_tolerance: cfg.malformed_tolerance,
            min_minutes: cfg.min_minutes,
            k_min: cfg.k_min,
            k_max: cfg.k_max,
            threshold: cfg.threshold,
            restarts: cfg.restarts,
            seed: cfg.seed,
            band_cm: cfg.band_cm,
            attack: &cfg.attack,
            tolerance_ms: cfg.tolerance_ms,
        })
        .as_bytes(),
    )?;

    let stints = extraction.stints.len();
    let artifacts = sink.finish()?;
    Ok(RunSummary { stints, artifacts })
}
