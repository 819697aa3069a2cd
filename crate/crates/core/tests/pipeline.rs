//! End-to-end library tests: generate a game with known ground truth, push
//! it through the whole ingest -> segment -> cluster -> phase chain, and
//! score what comes out against what went in.

use courtphase_core::cluster::{bd_td_curve, kmeans, select_k, KmeansParams, Point};
use courtphase_core::ingest::{
    exclusion_intervals, filter_active, parse_events, parse_tracking, resample_with, FrameSeries,
    PeriodMap, ResampleSpec, TrackingSchema,
};
use courtphase_core::mds::mean_distance_matrix;
use courtphase_core::phase::{cluster_phase_table, label_frame, AttackDirection, PhaseLabel};
use courtphase_core::segment::{dyad_features, extract_stints, Stint};
use courtphase_core::shots::{attach_shots, parse_shots};
use courtphase_core::synth::{evaluate_recovery, generate_game, GroundTruth, Pause, SynthConfig};

/// A ten-minute game (4 x 150 s periods) on a 100 ms grid, with one timeout
/// and one free-throw pause to exercise the exclusion path. Shorter games
/// leave the per-template frame masses too noisy for stable k selection.
fn test_config() -> SynthConfig {
    let mut cfg = SynthConfig::default();
    cfg.grid_ms = 100;
    cfg.schedule.period_ms = 150_000;
    cfg.schedule.pre_match_ms = 5_000;
    cfg.schedule.quarter_break_ms = 10_000;
    cfg.schedule.half_break_ms = 20_000;
    cfg.schedule.post_match_ms = 5_000;
    cfg.schedule.timeouts = vec![Pause {
        period: 1,
        offset_ms: 30_000,
        duration_ms: 15_000,
    }];
    cfg.schedule.free_throws = vec![Pause {
        period: 3,
        offset_ms: 60_000,
        duration_ms: 10_000,
    }];
    cfg
}

struct PipelineRun {
    truth: GroundTruth,
    series: FrameSeries,
    stint: Stint,
    features: Vec<Point>,
    feature_ts: Vec<i64>,
    shots_csv: String,
}

/// Parse, filter, resample, and segment a generated game exactly the way
/// the CLI pipeline does.
fn run_front_half(cfg: &SynthConfig, seed: u64) -> PipelineRun {
    let game = generate_game(cfg, seed).unwrap();
    let tracking =
        parse_tracking(game.tracking_csv.as_bytes(), &TrackingSchema::default(), 0.05).unwrap();
    assert_eq!(tracking.malformed, 0, "generator emitted malformed rows");
    let events = parse_events(game.events_csv.as_bytes()).unwrap();
    let active = filter_active(&tracking.samples, &events).unwrap();
    let series = resample_with(
        &active,
        ResampleSpec {
            grid_ms: cfg.grid_ms,
            staleness_ms: 500,
        },
        &exclusion_intervals(&events),
        &PeriodMap::from_events(&events),
    )
    .unwrap();
    let extraction = extract_stints(&series, &cfg.roster, 300_000).unwrap();
    assert_eq!(
        extraction.stints.len(),
        1,
        "a fixed-roster game is one stint"
    );
    let stint = extraction.stints[0].clone();
    let dyads = dyad_features(&stint, &series).unwrap();
    let feature_ts: Vec<i64> = dyads.iter().map(|d| d.frame_ms).collect();
    let features: Vec<Point> = dyads.iter().map(|d| d.distances).collect();
    PipelineRun {
        truth: game.truth,
        series,
        stint,
        features,
        feature_ts,
        shots_csv: game.shots_csv,
    }
}

#[test]
fn stint_frames_align_with_truth_frames_exactly() {
    let cfg = test_config();
    for seed in [1, 2, 3] {
        let run = run_front_half(&cfg, seed);
        let truth_ts: Vec<i64> = run.truth.frames.iter().map(|f| f.frame_ms).collect();
        assert_eq!(
            run.feature_ts, truth_ts,
            "seed {seed}: pipeline frames diverge from generated frames"
        );
        // Pause and break ticks must not have been bridged by carry-forward.
        let timeout = (cfg.schedule.pre_match_ms + 30_000, cfg.schedule.pre_match_ms + 45_000);
        assert!(run
            .series
            .frames
            .iter()
            .all(|f| f.timestamp_ms < timeout.0 || f.timestamp_ms >= timeout.1));
    }
}

#[test]
fn deviance_curve_elbows_at_the_template_count() {
    let cfg = test_config();
    for seed in [1, 2] {
        let run = run_front_half(&cfg, seed);
        let curve = bd_td_curve(&run.features, 1, 8, seed, 10).unwrap();
        let sel = select_k(&curve, 0.10).unwrap();
        let shape: Vec<String> = curve.iter().map(|c| format!("{:.3}", c.bd_td)).collect();
        assert_eq!(
            sel.chosen_k, 6,
            "seed {seed}: curve {shape:?} chose k={}",
            sel.chosen_k
        );
        assert!(!sel.saturated);
    }
}

#[test]
fn clusters_and_phases_recover_the_generating_structure() {
    let cfg = test_config();
    for seed in [1, 2] {
        let run = run_front_half(&cfg, seed);
        let model = kmeans(&run.features, &KmeansParams::new(6, seed)).unwrap();
        let assignments: Vec<(i64, usize)> = run
            .feature_ts
            .iter()
            .copied()
            .zip(model.assignments.iter().copied())
            .collect();
        let lineup = run.stint.lineup.clone();
        let phases: Vec<(i64, PhaseLabel)> = run
            .series
            .frames
            .iter()
            .filter(|f| run.stint.contains(f.timestamp_ms))
            .map(|f| {
                (
                    f.timestamp_ms,
                    label_frame(f, &lineup, 400.0, AttackDirection::PositiveX).unwrap(),
                )
            })
            .collect();
        let metrics = evaluate_recovery(&run.truth, &assignments, &phases).unwrap();
        assert!(
            metrics.purity >= 0.90,
            "seed {seed}: purity {}",
            metrics.purity
        );
        assert!(
            metrics.adjusted_rand >= 0.85,
            "seed {seed}: ARI {}",
            metrics.adjusted_rand
        );
        // Mid-morph frames are genuinely ambiguous, so phase agreement is
        // high but not perfect.
        assert!(
            metrics.phase_accuracy >= 0.97,
            "seed {seed}: phase accuracy {}",
            metrics.phase_accuracy
        );

        // Spread ordering: the widest cluster profile is transition-heavy,
        // the tightest is defense-heavy.
        let feature_dyads: Vec<courtphase_core::segment::DyadVector> = run
            .feature_ts
            .iter()
            .zip(run.features.iter())
            .map(|(&frame_ms, d)| courtphase_core::segment::DyadVector {
                frame_ms,
                distances: *d,
            })
            .collect();
        let mean_off_diag = |cluster: usize| {
            let m = mean_distance_matrix(&feature_dyads, &model.assignments, cluster)
                .unwrap()
                .matrix;
            let mut total = 0.0;
            for i in 0..5 {
                for j in 0..5 {
                    if i != j {
                        total += m[i][j];
                    }
                }
            }
            total / 20.0
        };
        let spreads: Vec<f64> = (0..6).map(mean_off_diag).collect();
        let argmax = (0..6).max_by(|&a, &b| spreads[a].total_cmp(&spreads[b])).unwrap();
        let argmin = (0..6).min_by(|&a, &b| spreads[a].total_cmp(&spreads[b])).unwrap();
        let label_vec: Vec<PhaseLabel> = phases.iter().map(|&(_, l)| l).collect();
        let table = cluster_phase_table(&model.assignments, &label_vec, 6).unwrap();
        assert_eq!(
            table[argmax].majority,
            PhaseLabel::Transition,
            "seed {seed}: widest cluster is not transition-heavy"
        );
        assert_eq!(
            table[argmin].majority,
            PhaseLabel::Defense,
            "seed {seed}: tightest cluster is not defense-heavy"
        );
    }
}

#[test]
fn generated_shots_attach_to_their_own_frames() {
    let cfg = test_config();
    let run = run_front_half(&cfg, 4);
    let model = kmeans(&run.features, &KmeansParams::new(6, 4)).unwrap();
    let frame_clusters: Vec<(i64, usize)> = run
        .feature_ts
        .iter()
        .copied()
        .zip(model.assignments.iter().copied())
        .collect();
    let shots = parse_shots(run.shots_csv.as_bytes()).unwrap();
    assert_eq!(shots.len(), run.truth.shots.len());
    let attached = attach_shots(&shots, &frame_clusters, 1_000).unwrap();
    // Shots are generated on active ticks, so every one matches its own
    // frame at distance zero.
    for (a, t) in attached.iter().zip(run.truth.shots.iter()) {
        assert_eq!(a.frame_ms, Some(t.timestamp_ms));
    }
}
