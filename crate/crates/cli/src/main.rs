//! `courtphase`: segment basketball tracking data into spatial phases.
//!
//! Each subcommand runs one pipeline stage on explicit input/output paths;
//! `run-all` chains them end to end into an artifact directory with a
//! hashed manifest. Errors print one machine-readable JSON line on stderr
//! and exit 2 (config), 3 (data), or 4 (internal).

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use courtphase::pipeline::{
    build_mds_file, build_phase_file, fit_cluster_model, open_input, read_input, read_json,
    run_all, stage, to_json_artifact, write_output, RunConfig, RunResult,
};
use courtphase::{plot, report};
use courtphase_core::cluster::{ModelFile, Point};
use courtphase_core::error::CoreError;
use courtphase_core::ingest::{
    exclusion_intervals, filter_active, parse_events, parse_tracking, read_frames_csv,
    resample_with, write_frames_csv, PeriodMap, ResampleSpec, TrackingSchema,
};
use courtphase_core::mds::MdsFile;
use courtphase_core::phase::{AttackDirection, PhaseFile};
use courtphase_core::segment::{
    dyad_features, extract_stints, parse_roster, read_features_csv, write_features_csv,
    StintsFile,
};
use courtphase_core::shots::{attach_shots, parse_shots, shot_report, ShotsFile};
use courtphase_core::synth::{generate_game, SynthConfig};

#[derive(Parser)]
#[command(
    name = "courtphase",
    version,
    about = "Segment basketball player-tracking data into spatial phases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw tracking and events, resample onto a fixed grid, and write
    /// the frame series.
    Ingest {
        /// Tracking CSV (timestamp_ms, player_id, x_cm, y_cm).
        #[arg(long)]
        tracking: PathBuf,
        /// Events CSV (kind, start_ms, end_ms, period_index).
        #[arg(long)]
        events: PathBuf,
        /// Resampling grid step, ms.
        #[arg(long, default_value_t = 50)]
        grid_ms: i64,
        /// Oldest carried-forward position still considered fresh, ms.
        #[arg(long, default_value_t = 500)]
        staleness_ms: i64,
        /// Tolerated fraction of malformed tracking rows.
        #[arg(long, default_value_t = 0.05)]
        malformed_tolerance: f64,
        /// Rename the timestamp column.
        #[arg(long)]
        col_timestamp: Option<String>,
        /// Rename the player id column.
        #[arg(long)]
        col_player: Option<String>,
        /// Rename the x column.
        #[arg(long)]
        col_x: Option<String>,
        /// Rename the y column.
        #[arg(long)]
        col_y: Option<String>,
        /// Rename the (ignored) z column.
        #[arg(long)]
        col_z: Option<String>,
        /// Output frames CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract same-lineup stints from a frame series.
    Stints {
        /// Frames CSV from `ingest`.
        #[arg(long)]
        frames: PathBuf,
        /// Roster file, one player id per line.
        #[arg(long)]
        roster: PathBuf,
        /// Minimum accumulated stint length, minutes.
        #[arg(long, default_value_t = 5.0)]
        min_minutes: f64,
        /// Output stints JSON.
        #[arg(long)]
        out: PathBuf,
        /// Also write per-stint dyad feature CSVs into this directory.
        #[arg(long)]
        features_dir: Option<PathBuf>,
    },
    /// Fit k-means over a stint's dyad features and pick k by diminishing
    /// deviance returns.
    Cluster {
        /// Dyad features CSV from `stints --features-dir`.
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        /// Stop once a bd_td increment falls below this.
        #[arg(long, default_value_t = 0.10)]
        threshold: f64,
        #[arg(long, env = "COURTPHASE_SEED", default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        /// Stints JSON; embeds the lineup into the model for later stages.
        #[arg(long)]
        stints: Option<PathBuf>,
        /// Which stint in the stints file the features belong to.
        #[arg(long, default_value_t = 0)]
        stint_index: usize,
        /// Output model JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-cluster mean distance matrices and 2-D embeddings.
    Mds {
        /// Model JSON from `cluster`.
        #[arg(long)]
        model: PathBuf,
        /// The same features CSV the model was fitted on.
        #[arg(long)]
        features: PathBuf,
        /// Output MDS JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Label frames offense/defense/transition and cross-tabulate against
    /// clusters.
    Phase {
        /// Model JSON from `cluster` (must embed its stint).
        #[arg(long)]
        model: PathBuf,
        /// Frames CSV from `ingest`.
        #[arg(long)]
        frames: PathBuf,
        /// Half-width of the transition band around midcourt, cm.
        #[arg(long, default_value_t = 400.0)]
        band_cm: f64,
        /// First-half attack direction: `+x` or `-x`.
        #[arg(long, default_value = "+x")]
        attack_dir: String,
        /// Output phase JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Attach shot events to labelled frames and tally per cluster.
    Shots {
        /// Shots CSV (timestamp_ms, made, shooter_id).
        #[arg(long)]
        shots: PathBuf,
        /// Phase JSON from `phase`.
        #[arg(long)]
        phase: PathBuf,
        /// Largest timestamp gap a shot may sit from its frame, ms.
        #[arg(long, default_value_t = 1000)]
        tolerance_ms: i64,
        /// Output shots JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic game with ground truth.
    Synth {
        /// Generator config TOML; defaults to the built-in six templates.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "COURTPHASE_SEED", default_value_t = 42)]
        seed: u64,
        /// Directory for tracking/events/shots/roster/truth files.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the whole pipeline and write every artifact plus a hashed
    /// manifest.
    RunAll {
        #[arg(long)]
        tracking: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        roster: PathBuf,
        #[arg(long)]
        shots: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 50)]
        grid_ms: i64,
        #[arg(long, default_value_t = 500)]
        staleness_ms: i64,
        #[arg(long, default_value_t = 0.05)]
        malformed_tolerance: f64,
        #[arg(long, default_value_t = 5.0)]
        min_minutes: f64,
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        #[arg(long, default_value_t = 0.10)]
        threshold: f64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, env = "COURTPHASE_SEED", default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 400.0)]
        band_cm: f64,
        #[arg(long, default_value = "+x")]
        attack_dir: String,
        #[arg(long, default_value_t = 1000)]
        tolerance_ms: i64,
    },
    /// Render the profile and court-map SVGs from an MDS artifact.
    Plot {
        /// MDS JSON from `mds` or `run-all`.
        #[arg(long)]
        mds: PathBuf,
        /// Directory for the two SVG files.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli.command) {
        eprintln!("{}", err.to_json());
        std::process::exit(err.exit_code());
    }
}

fn dispatch(command: Command) -> RunResult<()> {
    match command {
        Command::Ingest {
            tracking,
            events,
            grid_ms,
            staleness_ms,
            malformed_tolerance,
            col_timestamp,
            col_player,
            col_x,
            col_y,
            col_z,
            out,
        } => {
            let e = stage("ingest");
            let mut schema = TrackingSchema::default();
            if let Some(c) = col_timestamp {
                schema.timestamp = c;
            }
            if let Some(c) = col_player {
                schema.player = c;
            }
            if let Some(c) = col_x {
                schema.x = c;
            }
            if let Some(c) = col_y {
                schema.y = c;
            }
            if let Some(c) = col_z {
                schema.z = c;
            }
            let parsed = parse_tracking(
                open_input("ingest", &tracking)?,
                &schema,
                malformed_tolerance,
            )
            .map_err(&e)?;
            let events = parse_events(open_input("ingest", &events)?).map_err(&e)?;
            let active = filter_active(&parsed.samples, &events).map_err(&e)?;
            let series = resample_with(
                &active,
                ResampleSpec {
                    grid_ms,
                    staleness_ms,
                },
                &exclusion_intervals(&events),
                &PeriodMap::from_events(&events),
            )
            .map_err(&e)?;
            let mut csv = Vec::new();
            write_frames_csv(&series, &mut csv).map_err(&e)?;
            write_output("ingest", &out, &csv)?;
            println!(
                "wrote {} ({} frames from {} samples, {} malformed rows)",
                out.display(),
                series.frames.len(),
                parsed.samples.len(),
                parsed.malformed
            );
            Ok(())
        }
        Command::Stints {
            frames,
            roster,
            min_minutes,
            out,
            features_dir,
        } => {
            let e = stage("segment");
            let series = read_frames_csv(open_input("segment", &frames)?).map_err(&e)?;
            let roster = parse_roster(open_input("segment", &roster)?).map_err(&e)?;
            let min_ms = (min_minutes * 60_000.0).round() as i64;
            let extraction = extract_stints(&series, &roster, min_ms).map_err(&e)?;
            let file = StintsFile {
                grid_ms: series.grid_ms,
                min_duration_ms: min_ms,
                excluded: extraction.excluded,
                stints: extraction.stints,
            };
            write_output("segment", &out, to_json_artifact(&file).as_bytes())?;
            if let Some(dir) = features_dir {
                for (i, stint) in file.stints.iter().enumerate() {
                    let dyads = dyad_features(stint, &series).map_err(&e)?;
                    let mut csv = Vec::new();
                    write_features_csv(&dyads, &mut csv).map_err(&e)?;
                    write_output("segment", &dir.join(format!("features_stint{i}.csv")), &csv)?;
                }
            }
            println!("wrote {} ({} stints)", out.display(), file.stints.len());
            Ok(())
        }
        Command::Cluster {
            features,
            k_min,
            k_max,
            threshold,
            seed,
            restarts,
            stints,
            stint_index,
            out,
        } => {
            let e = stage("cluster");
            let dyads = read_features_csv(open_input("cluster", &features)?).map_err(&e)?;
            let points: Vec<Point> = dyads.iter().map(|d| d.distances).collect();
            let feature_ts: Vec<i64> = dyads.iter().map(|d| d.frame_ms).collect();
            let (stint, grid_ms) = match stints {
                Some(path) => {
                    let file: StintsFile = read_json("cluster", "stints", &path)?;
                    let stint = file.stints.get(stint_index).cloned().ok_or_else(|| {
                        e(CoreError::InvalidConfig(format!(
                            "stint index {stint_index} out of range ({} stints)",
                            file.stints.len()
                        )))
                    })?;
                    (Some(stint), file.grid_ms)
                }
                None => (None, infer_grid(&feature_ts)),
            };
            let model = fit_cluster_model(
                &points,
                &feature_ts,
                stint.as_ref(),
                grid_ms,
                k_min,
                k_max,
                threshold,
                seed,
                restarts,
            )?;
            write_output("cluster", &out, to_json_artifact(&model).as_bytes())?;
            println!(
                "wrote {} (k={}, bd_td={:.4}{})",
                out.display(),
                model.k,
                model.bd_td,
                if model.saturated { ", saturated" } else { "" }
            );
            Ok(())
        }
        Command::Mds {
            model,
            features,
            out,
        } => {
            let e = stage("mds");
            let model: ModelFile = read_json("mds", "model", &model)?;
            let dyads = read_features_csv(open_input("mds", &features)?).map_err(&e)?;
            if dyads.len() != model.assignments.len()
                || dyads
                    .iter()
                    .zip(model.assignments.iter())
                    .any(|(d, &(ts, _))| d.frame_ms != ts)
            {
                return Err(e(CoreError::Misaligned(
                    "features do not match the model's assignments frame-for-frame".into(),
                )));
            }
            let assignments: Vec<usize> = model.assignments.iter().map(|&(_, c)| c).collect();
            let lineup: Vec<String> = match &model.stint {
                Some(stint) => stint.lineup.clone(),
                None => (1..=5).map(|i| format!("slot{i}")).collect(),
            };
            let file = build_mds_file(&dyads, &assignments, model.k, &lineup)?;
            write_output("mds", &out, to_json_artifact(&file).as_bytes())?;
            println!("wrote {} ({} clusters)", out.display(), file.clusters.len());
            Ok(())
        }
        Command::Phase {
            model,
            frames,
            band_cm,
            attack_dir,
            out,
        } => {
            let e = stage("phase");
            let model: ModelFile = read_json("phase", "model", &model)?;
            let stint = model.stint.clone().ok_or_else(|| {
                e(CoreError::InvalidConfig(
                    "model carries no stint; refit with `cluster --stints`".into(),
                ))
            })?;
            let attack = AttackDirection::parse(&attack_dir).ok_or_else(|| {
                e(CoreError::InvalidConfig(format!(
                    "attack direction must be `+x` or `-x`, got `{attack_dir}`"
                )))
            })?;
            let series = read_frames_csv(open_input("phase", &frames)?).map_err(&e)?;
            let file = build_phase_file(&series, &stint, &model, band_cm, &attack_dir, attack)?;
            write_output("phase", &out, to_json_artifact(&file).as_bytes())?;
            print!("{}", report::phase_table_text(&file.table));
            print!(
                "{}",
                report::transitions_text(&file.transitions, &file.switch_stats)
            );
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Shots {
            shots,
            phase,
            tolerance_ms,
            out,
        } => {
            let e = stage("shots");
            let phase: PhaseFile = read_json("shots", "phase", &phase)?;
            let events = parse_shots(open_input("shots", &shots)?).map_err(&e)?;
            let frame_clusters: Vec<(i64, usize)> =
                phase.frames.iter().map(|&(ts, c, _)| (ts, c)).collect();
            let attached = attach_shots(&events, &frame_clusters, tolerance_ms).map_err(&e)?;
            let report = shot_report(&attached, phase.k).map_err(&e)?;
            let file = ShotsFile {
                tolerance_ms,
                report,
                shots: attached,
            };
            write_output("shots", &out, to_json_artifact(&file).as_bytes())?;
            print!("{}", report::shots_text(&file.report));
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Synth {
            config,
            seed,
            out_dir,
        } => {
            let e = stage("synth");
            let cfg = match config {
                Some(path) => {
                    SynthConfig::from_toml(&read_input("synth", &path)?).map_err(&e)?
                }
                None => SynthConfig::default(),
            };
            let game = generate_game(&cfg, seed).map_err(&e)?;
            write_output("synth", &out_dir.join("tracking.csv"), game.tracking_csv.as_bytes())?;
            write_output("synth", &out_dir.join("events.csv"), game.events_csv.as_bytes())?;
            write_output("synth", &out_dir.join("shots.csv"), game.shots_csv.as_bytes())?;
            let mut roster = game.truth.roster.join("\n");
            roster.push('\n');
            write_output("synth", &out_dir.join("roster.txt"), roster.as_bytes())?;
            write_output(
                "synth",
                &out_dir.join("truth.json"),
                to_json_artifact(&game.truth).as_bytes(),
            )?;
            write_output("synth", &out_dir.join("config.toml"), cfg.to_toml().as_bytes())?;
            println!(
                "wrote {} (seed {seed}, {} frames, {} shots)",
                out_dir.display(),
                game.truth.frames.len(),
                game.truth.shots.len()
            );
            Ok(())
        }
        Command::RunAll {
            tracking,
            events,
            roster,
            shots,
            out_dir,
            grid_ms,
            staleness_ms,
            malformed_tolerance,
            min_minutes,
            k_min,
            k_max,
            threshold,
            restarts,
            seed,
            band_cm,
            attack_dir,
            tolerance_ms,
        } => {
            let summary = run_all(&RunConfig {
                tracking,
                events,
                roster,
                shots,
                out_dir: out_dir.clone(),
                grid_ms,
                staleness_ms,
                malformed_tolerance,
                min_minutes,
                k_min,
                k_max,
                threshold,
                restarts,
                seed,
                band_cm,
                attack: attack_dir,
                tolerance_ms,
            })?;
            println!(
                "wrote {} artifacts for {} stint(s) to {}",
                summary.artifacts.len(),
                summary.stints,
                out_dir.display()
            );
            Ok(())
        }
        Command::Plot { mds, out_dir } => {
            let e = stage("plot");
            let file: MdsFile = read_json("plot", "mds", &mds)?;
            let profile = plot::profile_plot(&file).map_err(&e)?;
            write_output("plot", &out_dir.join("profile.svg"), profile.as_bytes())?;
            let map = plot::mds_plot(&file).map_err(&e)?;
            write_output("plot", &out_dir.join("mds_map.svg"), map.as_bytes())?;
            println!("wrote {}", out_dir.display());
            Ok(())
        }
    }
}

/// Grid step inferred from feature timestamps: the smallest positive gap.
fn infer_grid(ts: &[i64]) -> i64 {
    ts.windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > 0)
        .min()
        .unwrap_or(0)
}
