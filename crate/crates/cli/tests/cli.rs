//! Binary-level tests: drive the compiled `courtphase` executable end to
//! end and check exit codes, stderr diagnostics, and artifact shape.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use courtphase_core::synth::{Pause, SynthConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_courtphase"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to spawn courtphase")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr not JSON ({e}): {text}"))
}

/// A four-minute game: long enough for one multi-minute stint, small enough
/// to keep every binary test fast.
fn small_config() -> SynthConfig {
    let mut cfg = SynthConfig::default();
    cfg.grid_ms = 100;
    cfg.schedule.period_ms = 60_000;
    cfg.schedule.pre_match_ms = 2_000;
    cfg.schedule.quarter_break_ms = 4_000;
    cfg.schedule.half_break_ms = 6_000;
    cfg.schedule.post_match_ms = 2_000;
    cfg.schedule.timeouts = vec![Pause {
        period: 2,
        offset_ms: 20_000,
        duration_ms: 5_000,
    }];
    cfg.schedule.free_throws = Vec::new();
    cfg
}

/// Generate a small game through the binary itself; returns the directory
/// holding tracking/events/shots/roster files.
fn synth_game(tmp: &Path, seed: u64) -> PathBuf {
    let cfg_path = tmp.join("synth.toml");
    std::fs::write(&cfg_path, small_config().to_toml()).unwrap();
    let game = tmp.join("game");
    let out = run(bin()
        .arg("synth")
        .args(["--seed", &seed.to_string()])
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(&game));
    assert!(
        out.status.success(),
        "synth failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    game
}

#[test]
fn help_lists_every_subcommand() {
    let out = run(bin().arg("--help"));
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "ingest", "stints", "cluster", "mds", "phase", "shots", "synth", "run-all", "plot",
    ] {
        assert!(text.contains(sub), "--help does not mention `{sub}`");
    }
    // Per-subcommand help works too.
    let sub = run(bin().args(["cluster", "--help"]));
    assert!(sub.status.success());
    let sub_text = String::from_utf8_lossy(&sub.stdout);
    assert!(sub_text.contains("--threshold") && sub_text.contains("COURTPHASE_SEED"));
}

#[test]
fn missing_input_reports_module_and_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(bin()
        .arg("ingest")
        .args(["--tracking", "/definitely/not/here.csv"])
        .args(["--events", "/also/not/here.csv"])
        .arg("--out")
        .arg(tmp.path().join("frames.csv")));
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["module"], "ingest");
    assert_eq!(err["class"], "config");
    assert_eq!(err["exit_code"], 2);
    assert!(err["message"].as_str().unwrap().contains("not/here.csv"));
}

#[test]
fn oversized_malformed_share_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let tracking = tmp.path().join("tracking.csv");
    std::fs::write(
        &tracking,
        "timestamp_ms,player_id,x_cm,y_cm\n\
         0,p1,notanumber,0\n\
         0,p2,1,alsobad\n\
         50,p1,10,10\n",
    )
    .unwrap();
    let events = tmp.path().join("events.csv");
    std::fs::write(
        &events,
        "kind,start_ms,end_ms,period_index\nPERIOD_START,0,0,1\n",
    )
    .unwrap();
    let out = run(bin()
        .arg("ingest")
        .arg("--tracking")
        .arg(&tracking)
        .arg("--events")
        .arg(&events)
        .args(["--malformed-tolerance", "0.5"])
        .arg("--out")
        .arg(tmp.path().join("frames.csv")));
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["class"], "data");
    assert_eq!(err["module"], "ingest");
}

#[test]
fn phase_needs_a_stint_bearing_model() {
    let tmp = tempfile::tempdir().unwrap();
    let game = synth_game(tmp.path(), 5);
    let frames = tmp.path().join("frames.csv");
    assert!(run(bin()
        .arg("ingest")
        .arg("--tracking")
        .arg(game.join("tracking.csv"))
        .arg("--events")
        .arg(game.join("events.csv"))
        .args(["--grid-ms", "100"])
        .arg("--out")
        .arg(&frames))
    .status
    .success());
    assert!(run(bin()
        .arg("stints")
        .arg("--frames")
        .arg(&frames)
        .arg("--roster")
        .arg(game.join("roster.txt"))
        .args(["--min-minutes", "2"])
        .arg("--out")
        .arg(tmp.path().join("stints.json"))
        .arg("--features-dir")
        .arg(tmp.path()))
    .status
    .success());
    // Fit without --stints: the model carries no lineup...
    assert!(run(bin()
        .arg("cluster")
        .arg("--features")
        .arg(tmp.path().join("features_stint0.csv"))
        .args(["--k-max", "8", "--restarts", "5"])
        .arg("--out")
        .arg(tmp.path().join("model.json")))
    .status
    .success());
    // ...so phase labelling has nothing to anchor to and must say so.
    let out = run(bin()
        .arg("phase")
        .arg("--model")
        .arg(tmp.path().join("model.json"))
        .arg("--frames")
        .arg(&frames)
        .arg("--out")
        .arg(tmp.path().join("phase.json")));
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["module"], "phase");
    assert!(err["message"].as_str().unwrap().contains("--stints"));
}

#[test]
fn env_var_seeds_the_model_when_no_flag_is_given() {
    let tmp = tempfile::tempdir().unwrap();
    let game = synth_game(tmp.path(), 6);
    let frames = tmp.path().join("frames.csv");
    run(bin()
        .arg("ingest")
        .arg("--tracking")
        .arg(game.join("tracking.csv"))
        .arg("--events")
        .arg(game.join("events.csv"))
        .args(["--grid-ms", "100"])
        .arg("--out")
        .arg(&frames));
    run(bin()
        .arg("stints")
        .arg("--frames")
        .arg(&frames)
        .arg("--roster")
        .arg(game.join("roster.txt"))
        .args(["--min-minutes", "2"])
        .arg("--out")
        .arg(tmp.path().join("stints.json"))
        .arg("--features-dir")
        .arg(tmp.path()));
    let out = run(bin()
        .env("COURTPHASE_SEED", "123")
        .arg("cluster")
        .arg("--features")
        .arg(tmp.path().join("features_stint0.csv"))
        .args(["--k-max", "8", "--restarts", "5"])
        .arg("--out")
        .arg(tmp.path().join("model.json")));
    assert!(
        out.status.success(),
        "cluster failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("model.json")).unwrap())
            .unwrap();
    assert_eq!(model["seed"], 123);
}

// ---------------------------------------------------------------------------
// XML sanity for the emitted SVGs
// ---------------------------------------------------------------------------

/// Tiny well-formedness check: every tag closes, attributes are quoted, and
/// `&` only appears as an entity. Enough to catch escaping or nesting bugs
/// in hand-assembled markup.
fn assert_well_formed_xml(text: &str) {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        let after = &rest[start + 1..];
        let end = after.find('>').expect("unclosed tag");
        let tag = &after[..end];
        if let Some(name) = tag.strip_prefix('/') {
            let open = stack.pop().unwrap_or_else(|| panic!("stray </{name}>"));
            assert_eq!(open, name, "mismatched </{name}> against <{open}>");
        } else if !tag.ends_with('/') {
            let name: String = tag
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric())
                .collect();
            assert!(!name.is_empty(), "empty tag name in <{tag}>");
            assert_eq!(tag.matches('"').count() % 2, 0, "unbalanced quotes: {tag}");
            stack.push(name);
        }
        rest = &after[end + 1..];
    }
    assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    for (i, _) in text.match_indices('&') {
        let entity = &text[i..text.len().min(i + 6)];
        assert!(
            entity.starts_with("&amp;") || entity.starts_with("&lt;") || entity.starts_with("&gt;"),
            "raw ampersand at byte {i}"
        );
    }
}

#[test]
fn round_trip_emits_well_formed_svgs_and_a_covering_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let game = synth_game(tmp.path(), 7);
    let out_dir = tmp.path().join("out");
    let out = run(bin()
        .arg("run-all")
        .arg("--tracking")
        .arg(game.join("tracking.csv"))
        .arg("--events")
        .arg(game.join("events.csv"))
        .arg("--roster")
        .arg(game.join("roster.txt"))
        .arg("--shots")
        .arg(game.join("shots.csv"))
        .arg("--out-dir")
        .arg(&out_dir)
        .args(["--grid-ms", "100"])
        .args(["--min-minutes", "2"])
        .args(["--k-max", "8", "--restarts", "5"]));
    assert!(
        out.status.success(),
        "run-all failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    let listed: Vec<&str> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["path"].as_str().unwrap())
        .collect();
    for required in [
        "frames.csv",
        "stints.json",
        "features_stint0.csv",
        "model_stint0.json",
        "mds_stint0.json",
        "phase_stint0.json",
        "shots_stint0.json",
        "profile_stint0.svg",
        "mds_map_stint0.svg",
        "params.json",
    ] {
        assert!(listed.contains(&required), "manifest misses {required}");
    }

    for name in ["profile_stint0.svg", "mds_map_stint0.svg"] {
        let svg = std::fs::read_to_string(out_dir.join(name)).unwrap();
        assert!(svg.starts_with("<svg "), "{name} does not start with <svg>");
        for attr in ["width=\"", "height=\"", "viewBox=\""] {
            assert!(svg.contains(attr), "{name} misses {attr}");
        }
        assert_well_formed_xml(&svg);
    }

    // Rendering the same embedding through the standalone plot command gives
    // the same bytes as the pipeline's copy.
    let plots = tmp.path().join("plots");
    assert!(run(bin()
        .arg("plot")
        .arg("--mds")
        .arg(out_dir.join("mds_stint0.json"))
        .arg("--out-dir")
        .arg(&plots))
    .status
    .success());
    assert_eq!(
        std::fs::read(plots.join("profile.svg")).unwrap(),
        std::fs::read(out_dir.join("profile_stint0.svg")).unwrap()
    );
}
