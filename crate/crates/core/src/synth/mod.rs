//! Synthetic game generator with known ground truth.
//!
//! A game is a sequence of formation templates: five anchor positions plus
//! isotropic Gaussian jitter. A template machine dwells on one formation
//! (log-normal dwell times), then morphs linearly into the next over a
//! short window. The default sequencing follows a possession cycle —
//! defense, transition, offense, transition, defense — and the team swaps
//! ends after halftime by mirroring anchors in x, which leaves the dyad
//! distances untouched (as it must: the spatial analysis is end-agnostic).
//!
//! The emitted tracking stream is deliberately honest about dead time:
//! timeouts and free-throw pauses produce huddle samples that the event
//! stream excises again downstream. Ground truth records, for every active
//! grid tick, which template generated it and that template's phase, plus
//! every generated shot — exactly the frames the analysis pipeline will see
//! after filtering and resampling, which is what makes end-to-end recovery
//! scoring possible.
//!
//! Everything is driven by one seed through counter-based sub-streams, so
//! a given `(config, seed)` pair always yields byte-identical output.

mod recovery;

pub use recovery::{evaluate_recovery, RecoveryMetrics};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::phase::PhaseLabel;
use crate::rng::CounterRng;

/// Anchor bounds: formations stay inside the court with margin for jitter.
pub const MAX_ANCHOR_X_CM: f64 = 1350.0;
pub const MAX_ANCHOR_Y_CM: f64 = 700.0;

/// Template phase-band placement limits. Keeping defensive and offensive
/// formations at least 500 cm out, and transition formations within 340 cm,
/// means jittered frames stay on the correct side of the default 400 cm
/// labelling band.
pub const DEFENSE_MAX_MEAN_X_CM: f64 = -500.0;
pub const OFFENSE_MIN_MEAN_X_CM: f64 = 500.0;
pub const TRANSITION_MAX_ABS_MEAN_X_CM: f64 = 340.0;

/// Probability that an offense/defense block continues with another
/// formation of the same phase instead of breaking into a transition.
const SAME_PHASE_STAY_PROB: f64 = 0.5;

/// Phase of a formation template, in config vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TemplatePhase {
    Defense,
    Transition,
    Offense,
}

impl TemplatePhase {
    pub fn to_label(self) -> PhaseLabel {
        match self {
            TemplatePhase::Defense => PhaseLabel::Defense,
            TemplatePhase::Transition => PhaseLabel::Transition,
            TemplatePhase::Offense => PhaseLabel::Offense,
        }
    }
}

/// One formation: where the five players stand (attacking toward +x, as in
/// periods 1 and 2) and how the generator behaves while in it. Optional
/// fields default per phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationTemplate {
    pub name: String,
    pub phase: TemplatePhase,
    pub anchors: [[f64; 2]; 5],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sd_cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dwell_mean_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dwell_sd_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shot_rate_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub make_probability: Option<f64>,
}

impl FormationTemplate {
    pub fn noise_sd(&self) -> f64 {
        self.noise_sd_cm.unwrap_or(30.0)
    }

    /// Mean dwell: slow half-court sets, brisk transitions.
    pub fn dwell_mean(&self) -> f64 {
        self.dwell_mean_ms.unwrap_or(match self.phase {
            TemplatePhase::Defense => 1800.0,
            TemplatePhase::Transition => 1100.0,
            TemplatePhase::Offense => 2600.0,
        })
    }

    pub fn dwell_sd(&self) -> f64 {
        self.dwell_sd_ms.unwrap_or(0.3 * self.dwell_mean())
    }

    pub fn shot_rate(&self) -> f64 {
        self.shot_rate_per_s.unwrap_or(match self.phase {
            TemplatePhase::Offense => 0.02,
            _ => 0.0,
        })
    }

    pub fn make_prob(&self) -> f64 {
        self.make_probability.unwrap_or(0.45)
    }

    /// Mean pairwise anchor distance: how spread out the formation is.
    pub fn mean_spread(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..5 {
            for j in (i + 1)..5 {
                let dx = self.anchors[i][0] - self.anchors[j][0];
                let dy = self.anchors[i][1] - self.anchors[j][1];
                total += (dx * dx + dy * dy).sqrt();
            }
        }
        total / 10.0
    }

    pub fn mean_x(&self) -> f64 {
        self.anchors.iter().map(|a| a[0]).sum::<f64>() / 5.0
    }
}

/// A dead-ball pause inside one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pause {
    pub period: u8,
    pub offset_ms: i64,
    pub duration_ms: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub period_ms: i64,
    pub pre_match_ms: i64,
    pub quarter_break_ms: i64,
    pub half_break_ms: i64,
    pub post_match_ms: i64,
    pub timeouts: Vec<Pause>,
    pub free_throws: Vec<Pause>,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            period_ms: 600_000,
            pre_match_ms: 60_000,
            quarter_break_ms: 120_000,
            half_break_ms: 300_000,
            post_match_ms: 60_000,
            timeouts: vec![
                Pause {
                    period: 1,
                    offset_ms: 300_000,
                    duration_ms: 60_000,
                },
                Pause {
                    period: 3,
                    offset_ms: 240_000,
                    duration_ms: 60_000,
                },
            ],
            free_throws: vec![
                Pause {
                    period: 2,
                    offset_ms: 180_000,
                    duration_ms: 30_000,
                },
                Pause {
                    period: 4,
                    offset_ms: 420_000,
                    duration_ms: 30_000,
                },
            ],
        }
    }
}

/// How the machine picks the next template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceMode {
    /// Defense block, transition, offense block, transition, repeat.
    Possession,
    /// Uniform jump to any other template (equal template masses).
    Uniform,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub grid_ms: i64,
    pub morph_ms: i64,
    pub sequence: SequenceMode,
    pub roster: Vec<String>,
    pub schedule: Schedule,
    pub templates: Vec<FormationTemplate>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            grid_ms: 50,
            morph_ms: 200,
            sequence: SequenceMode::Possession,
            roster: ["p1", "p2", "p3", "p4", "p5"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            schedule: Schedule::default(),
            templates: default_templates(),
        }
    }
}

/// The six stock formations. Their anchor layouts were chosen so the six
/// dyad-distance vectors sit nearly equidistant in feature space (pairwise
/// 680-980 cm apart) — with jitter up to 40 cm, each extra cluster up to
/// k = 6 then buys a between/total deviance increment comfortably above
/// the 0.10 selection threshold, and the ordering "transition widest,
/// packed defense tightest" holds by a clear margin.
pub fn default_templates() -> Vec<FormationTemplate> {
    let template = |name: &str, phase, anchors| FormationTemplate {
        name: name.to_string(),
        phase,
        anchors,
        noise_sd_cm: None,
        dwell_mean_ms: None,
        dwell_sd_ms: None,
        shot_rate_per_s: None,
        make_probability: None,
    };
    vec![
        template(
            "packed-shell",
            TemplatePhase::Defense,
            [
                [-1260.0, 160.0],
                [-1100.0, 60.0],
                [-1200.0, -230.0],
                [-940.0, 240.0],
                [-910.0, -220.0],
            ],
        ),
        template(
            "extended-press",
            TemplatePhase::Defense,
            [
                [-1170.0, 310.0],
                [-1150.0, -270.0],
                [-960.0, -20.0],
                [-720.0, 170.0],
                [-640.0, -260.0],
            ],
        ),
        template(
            "court-run",
            TemplatePhase::Transition,
            [
                [-570.0, 40.0],
                [-100.0, -50.0],
                [40.0, 260.0],
                [150.0, -220.0],
                [550.0, 40.0],
            ],
        ),
        template(
            "post-overload",
            TemplatePhase::Offense,
            [
                [1300.0, -230.0],
                [1210.0, 370.0],
                [1100.0, -160.0],
                [880.0, 320.0],
                [1090.0, 220.0],
            ],
        ),
        template(
            "spread-floor",
            TemplatePhase::Offense,
            [
                [580.0, 100.0],
                [920.0, 400.0],
                [940.0, -370.0],
                [1100.0, 180.0],
                [1210.0, -160.0],
            ],
        ),
        template(
            "high-screen",
            TemplatePhase::Offense,
            [
                [670.0, 190.0],
                [920.0, 50.0],
                [1170.0, 310.0],
                [1200.0, -460.0],
                [1310.0, -20.0],
            ],
        ),
    ]
}

impl SynthConfig {
    pub fn from_toml(text: &str) -> Result<SynthConfig> {
        let config: SynthConfig = toml::from_str(text)
            .map_err(|e| CoreError::InvalidConfig(format!("synth config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("synth config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CoreError::InvalidConfig(format!("synth config: {msg}")));
        if self.grid_ms < 1 {
            return bad(format!("grid_ms must be >= 1, got {}", self.grid_ms));
        }
        if self.morph_ms < 0 {
            return bad(format!("morph_ms must be >= 0, got {}", self.morph_ms));
        }
        if self.roster.len() != 5 {
            return bad(format!("roster must have 5 players, got {}", self.roster.len()));
        }
        let distinct: BTreeSet<&String> = self.roster.iter().collect();
        if distinct.len() != 5 || self.roster.iter().any(|p| p.is_empty()) {
            return bad("roster ids must be distinct and non-empty".into());
        }
        if self.templates.len() < 2 {
            return bad(format!(
                "need at least 2 templates, got {}",
                self.templates.len()
            ));
        }
        let mut names = BTreeSet::new();
        for t in &self.templates {
            if t.name.is_empty() || !names.insert(&t.name) {
                return bad(format!("template names must be unique, `{}` is not", t.name));
            }
            for (i, a) in t.anchors.iter().enumerate() {
                if a[0].abs() > MAX_ANCHOR_X_CM || a[1].abs() > MAX_ANCHOR_Y_CM {
                    return bad(format!(
                        "template `{}` anchor {i} ({}, {}) outside |x| <= {MAX_ANCHOR_X_CM}, |y| <= {MAX_ANCHOR_Y_CM}",
                        t.name, a[0], a[1]
                    ));
                }
            }
            if !(0.0..=200.0).contains(&t.noise_sd()) {
                return bad(format!("template `{}` noise sd out of [0, 200]", t.name));
            }
            if t.dwell_mean() <= 0.0 || t.dwell_sd() < 0.0 {
                return bad(format!("template `{}` has invalid dwell parameters", t.name));
            }
            if t.shot_rate() < 0.0 || !(0.0..=1.0).contains(&t.make_prob()) {
                return bad(format!("template `{}` has invalid shot parameters", t.name));
            }
            let mx = t.mean_x();
            let placed_ok = match t.phase {
                TemplatePhase::Defense => mx <= DEFENSE_MAX_MEAN_X_CM,
                TemplatePhase::Offense => mx >= OFFENSE_MIN_MEAN_X_CM,
                TemplatePhase::Transition => mx.abs() <= TRANSITION_MAX_ABS_MEAN_X_CM,
            };
            if !placed_ok {
                return bad(format!(
                    "template `{}` mean x = {mx:.0} cm does not sit in its {:?} band",
                    t.name, t.phase
                ));
            }
        }
        // Defensive formations must be tighter than transitions, otherwise
        // recovered clusters cannot be told apart the way the analysis
        // expects.
        for d in self.templates.iter().filter(|t| t.phase == TemplatePhase::Defense) {
            for tr in self
                .templates
                .iter()
                .filter(|t| t.phase == TemplatePhase::Transition)
            {
                if d.mean_spread() >= tr.mean_spread() {
                    return bad(format!(
                        "defense template `{}` (spread {:.0}) is not tighter than transition `{}` (spread {:.0})",
                        d.name,
                        d.mean_spread(),
                        tr.name,
                        tr.mean_spread()
                    ));
                }
            }
        }
        if self.sequence == SequenceMode::Possession {
            for phase in [
                TemplatePhase::Defense,
                TemplatePhase::Transition,
                TemplatePhase::Offense,
            ] {
                if !self.templates.iter().any(|t| t.phase == phase) {
                    return bad(format!(
                        "possession sequencing needs at least one {phase:?} template"
                    ));
                }
            }
        }

        let s = &self.schedule;
        let multiple = |name: &str, v: i64| {
            if v % self.grid_ms != 0 {
                bad(format!(
                    "{name} = {v} ms must be a multiple of grid_ms = {} ms",
                    self.grid_ms
                ))
            } else {
                Ok(())
            }
        };
        if s.period_ms < 10 * self.grid_ms {
            return bad(format!("period_ms = {} is too short", s.period_ms));
        }
        for (name, v) in [
            ("period_ms", s.period_ms),
            ("pre_match_ms", s.pre_match_ms),
            ("quarter_break_ms", s.quarter_break_ms),
            ("half_break_ms", s.half_break_ms),
            ("post_match_ms", s.post_match_ms),
        ] {
            if v <= 0 {
                return bad(format!("{name} must be > 0, got {v}"));
            }
            multiple(name, v)?;
        }
        let mut by_period: Vec<Vec<(i64, i64)>> = vec![Vec::new(); 4];
        for (kind, pauses) in [("timeout", &s.timeouts), ("free throw", &s.free_throws)] {
            for p in pauses {
                if !(1..=4).contains(&p.period) {
                    return bad(format!("{kind} period {} out of 1-4", p.period));
                }
                if p.offset_ms < 0 || p.duration_ms <= 0 || p.offset_ms + p.duration_ms > s.period_ms
                {
                    return bad(format!(
                        "{kind} [{}, {}) does not fit inside a {} ms period",
                        p.offset_ms,
                        p.offset_ms + p.duration_ms,
                        s.period_ms
                    ));
                }
                multiple("pause offset", p.offset_ms)?;
                multiple("pause duration", p.duration_ms)?;
                by_period[p.period as usize - 1].push((p.offset_ms, p.offset_ms + p.duration_ms));
            }
        }
        for spans in by_period.iter_mut() {
            spans.sort_unstable();
            for w in spans.windows(2) {
                if w[1].0 < w[0].1 {
                    return bad(format!(
                        "pauses [{}, {}) and [{}, {}) overlap within one period",
                        w[0].0, w[0].1, w[1].0, w[1].1
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Ground truth for one generated frame (an active grid tick).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthFrame {
    pub frame_ms: i64,
    pub template: usize,
    pub phase: PhaseLabel,
}

/// Ground truth for one generated shot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthShot {
    pub timestamp_ms: i64,
    pub template: usize,
    pub made: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub grid_ms: i64,
    /// The generated team attacks this direction in periods 1-2.
    pub attack: String,
    pub roster: Vec<String>,
    pub template_names: Vec<String>,
    pub template_phases: Vec<PhaseLabel>,
    pub frames: Vec<TruthFrame>,
    pub shots: Vec<TruthShot>,
}

#[derive(Debug, Clone)]
pub struct GeneratedGame {
    pub tracking_csv: String,
    pub events_csv: String,
    pub shots_csv: String,
    pub truth: GroundTruth,
}

/// The template machine: which formation is active, and how far into its
/// dwell (and morph) it is. Advances only on active ticks, so pauses freeze
/// play exactly where it stopped.
struct TemplateMachine<'a> {
    cfg: &'a SynthConfig,
    by_phase: [Vec<usize>; 3],
    current: usize,
    morph_from: Option<usize>,
    in_dwell_ms: i64,
    dwell_ms: i64,
    /// Possession mode: the phase the next transition leads into.
    after_transition: TemplatePhase,
}

impl<'a> TemplateMachine<'a> {
    fn new(cfg: &'a SynthConfig, rng: &mut CounterRng) -> Self {
        let mut by_phase: [Vec<usize>; 3] = Default::default();
        for (i, t) in cfg.templates.iter().enumerate() {
            by_phase[t.phase.to_label().index()].push(i);
        }
        let current = match cfg.sequence {
            SequenceMode::Uniform => rng.below(cfg.templates.len()),
            SequenceMode::Possession => {
                let pool = &by_phase[PhaseLabel::Transition.index()];
                pool[rng.below(pool.len())]
            }
        };
        let after_transition = if rng.uniform() < 0.5 {
            TemplatePhase::Offense
        } else {
            TemplatePhase::Defense
        };
        let mut machine = TemplateMachine {
            cfg,
            by_phase,
            current,
            morph_from: None,
            in_dwell_ms: 0,
            dwell_ms: 0,
            after_transition,
        };
        machine.dwell_ms = machine.sample_dwell(rng);
        machine
    }

    fn sample_dwell(&self, rng: &mut CounterRng) -> i64 {
        let t = &self.cfg.templates[self.current];
        let mean = t.dwell_mean();
        let sd = t.dwell_sd();
        let ms = if sd <= 0.0 {
            mean
        } else {
            // Log-normal with the requested mean and sd.
            let cv2 = (sd / mean) * (sd / mean);
            let sigma2 = (1.0 + cv2).ln();
            let mu = mean.ln() - sigma2 / 2.0;
            (mu + sigma2.sqrt() * rng.normal()).exp()
        };
        let g = self.cfg.grid_ms;
        let min_ticks = (self.cfg.morph_ms + g - 1) / g + 1;
        let ticks = ((ms / g as f64).round() as i64).max(min_ticks);
        ticks * g
    }

    /// Pick from `pool`, avoiding `current` when the pool allows it.
    fn pick(&self, pool: &[usize], rng: &mut CounterRng) -> usize {
        let others: Vec<usize> = pool.iter().copied().filter(|&i| i != self.current).collect();
        if others.is_empty() {
            self.current
        } else {
            others[rng.below(others.len())]
        }
    }

    fn switch(&mut self, rng: &mut CounterRng) {
        let next = match self.cfg.sequence {
            SequenceMode::Uniform => {
                let all: Vec<usize> = (0..self.cfg.templates.len()).collect();
                self.pick(&all, rng)
            }
            SequenceMode::Possession => {
                let phase = self.cfg.templates[self.current].phase;
                match phase {
                    TemplatePhase::Transition => {
                        self.pick(&self.by_phase[self.after_transition.to_label().index()], rng)
                    }
                    TemplatePhase::Offense | TemplatePhase::Defense => {
                        if rng.uniform() < SAME_PHASE_STAY_PROB {
                            self.pick(&self.by_phase[phase.to_label().index()], rng)
                        } else {
                            self.after_transition = if phase == TemplatePhase::Offense {
                                TemplatePhase::Defense
                            } else {
                                TemplatePhase::Offense
                            };
                            self.pick(&self.by_phase[PhaseLabel::Transition.index()], rng)
                        }
                    }
                }
            }
        };
        self.morph_from = (next != self.current).then_some(self.current);
        self.current = next;
        self.in_dwell_ms = 0;
        self.dwell_ms = self.sample_dwell(rng);
    }

    /// Advance one active tick; switches templates when the dwell expires.
    fn advance(&mut self, rng: &mut CounterRng) {
        self.in_dwell_ms += self.cfg.grid_ms;
        if self.in_dwell_ms >= self.dwell_ms {
            self.switch(rng);
        }
    }

    /// Morph progress in (0, 1]; 1 once fully arrived.
    fn morph_alpha(&self) -> f64 {
        if self.morph_from.is_none() || self.in_dwell_ms >= self.cfg.morph_ms {
            return 1.0;
        }
        (self.in_dwell_ms + self.cfg.grid_ms) as f64 / (self.cfg.morph_ms + self.cfg.grid_ms) as f64
    }

    /// The template this tick truly belongs to: the old one for the first
    /// half of a morph, the new one after.
    fn truth_template(&self) -> usize {
        match self.morph_from {
            Some(from) if self.morph_alpha() <= 0.5 => from,
            _ => self.current,
        }
    }

    /// True once the formation has fully arrived (shots only happen then).
    fn settled(&self) -> bool {
        self.morph_alpha() >= 1.0
    }

    fn anchors(&self, mirror: bool) -> [[f64; 2]; 5] {
        let alpha = self.morph_alpha();
        let to = &self.cfg.templates[self.current].anchors;
        let mut out = [[0.0; 2]; 5];
        for slot in 0..5 {
            let (x, y) = match self.morph_from {
                Some(from) if alpha < 1.0 => {
                    let f = &self.cfg.templates[from].anchors[slot];
                    (
                        f[0] + (to[slot][0] - f[0]) * alpha,
                        f[1] + (to[slot][1] - f[1]) * alpha,
                    )
                }
                _ => (to[slot][0], to[slot][1]),
            };
            out[slot] = [if mirror { -x } else { x }, y];
        }
        out
    }
}

fn push_sample(csv: &mut String, ts: i64, player: &str, x: f64, y: f64) {
    let xi = (x.round() as i64).clamp(-1550, 1550);
    let yi = (y.round() as i64).clamp(-800, 800);
    csv.push_str(&format!("{ts},{player},{xi},{yi}\n"));
}

/// Generate a full game. See the module docs for the moving parts; the
/// output tracking/events/shots streams are in the exact formats the
/// ingestion stage parses.
pub fn generate_game(config: &SynthConfig, seed: u64) -> Result<GeneratedGame> {
    config.validate()?;
    let g = config.grid_ms;
    let s = &config.schedule;
    let root = CounterRng::new(seed);
    let mut rng_seq = root.derive(1);
    let mut rng_noise = root.derive(2);
    let mut rng_shots = root.derive(3);

    // Timeline.
    let mut period_start = [0i64; 4];
    let mut t = s.pre_match_ms;
    for p in 0..4 {
        period_start[p] = t;
        t += s.period_ms;
        t += match p {
            0 | 2 => s.quarter_break_ms,
            1 => s.half_break_ms,
            _ => 0,
        };
    }
    let game_end = period_start[3] + s.period_ms;

    // Events stream, chronological.
    let mut events_csv = String::from("kind,start_ms,end_ms,period_index\n");
    events_csv.push_str(&format!("PRE_MATCH,0,{},\n", s.pre_match_ms));
    let mut pauses_by_period: Vec<Vec<(i64, i64, &str)>> = vec![Vec::new(); 4];
    for (kind, list) in [("TIMEOUT", &s.timeouts), ("FREE_THROW", &s.free_throws)] {
        for p in list {
            let start = period_start[p.period as usize - 1] + p.offset_ms;
            pauses_by_period[p.period as usize - 1].push((start, start + p.duration_ms, kind));
        }
    }
    for spans in pauses_by_period.iter_mut() {
        spans.sort_unstable();
    }
    for p in 0..4 {
        events_csv.push_str(&format!(
            "PERIOD_START,{},{},{}\n",
            period_start[p],
            period_start[p],
            p + 1
        ));
        for &(start, end, kind) in &pauses_by_period[p] {
            events_csv.push_str(&format!("{kind},{start},{end},\n"));
        }
        let end = period_start[p] + s.period_ms;
        match p {
            0 | 2 => events_csv.push_str(&format!(
                "QUARTER_BREAK,{},{},\n",
                end,
                end + s.quarter_break_ms
            )),
            1 => events_csv.push_str(&format!("HALF_BREAK,{},{},\n", end, end + s.half_break_ms)),
            _ => {}
        }
    }
    events_csv.push_str(&format!(
        "POST_MATCH,{},{},\n",
        game_end,
        game_end + s.post_match_ms
    ));

    // Tracking + truth.
    let mut tracking_csv = String::from("timestamp_ms,player_id,x_cm,y_cm\n");
    let mut shots_csv = String::from("timestamp_ms,made,shooter_id\n");
    let mut frames = Vec::new();
    let mut truth_shots = Vec::new();

    for p in 0..4 {
        let mirror = p >= 2;
        let mut machine = TemplateMachine::new(config, &mut rng_seq);
        let pauses = &pauses_by_period[p];
        let start = period_start[p];
        let mut tick = start;
        while tick < start + s.period_ms {
            if pauses.iter().any(|&(ps, pe, _)| tick >= ps && tick < pe) {
                // Huddle by the bench; these samples land inside an excised
                // interval and must vanish downstream.
                for player in &config.roster {
                    let x = -1200.0 + 25.0 * rng_noise.normal();
                    let y = 650.0 + 25.0 * rng_noise.normal();
                    push_sample(&mut tracking_csv, tick, player, x, y);
                }
                tick += g;
                continue;
            }
            let anchors = machine.anchors(mirror);
            let template = machine.truth_template();
            let noise_sd = config.templates[machine.current].noise_sd();
            for (slot, player) in config.roster.iter().enumerate() {
                let x = anchors[slot][0] + noise_sd * rng_noise.normal();
                let y = anchors[slot][1] + noise_sd * rng_noise.normal();
                push_sample(&mut tracking_csv, tick, player, x, y);
            }
            frames.push(TruthFrame {
                frame_ms: tick,
                template,
                phase: config.templates[template].phase.to_label(),
            });
            let rate = config.templates[machine.current].shot_rate();
            if machine.settled() && rate > 0.0 {
                let p_tick = rate * g as f64 / 1000.0;
                if rng_shots.uniform() < p_tick {
                    let made = rng_shots.uniform() < config.templates[machine.current].make_prob();
                    let shooter = &config.roster[rng_shots.below(5)];
                    shots_csv.push_str(&format!(
                        "{tick},{},{shooter}\n",
                        if made { 1 } else { 0 }
                    ));
                    truth_shots.push(TruthShot {
                        timestamp_ms: tick,
                        template: machine.current,
                        made,
                    });
                }
            }
            machine.advance(&mut rng_seq);
            tick += g;
        }
    }

    Ok(GeneratedGame {
        tracking_csv,
        events_csv,
        shots_csv,
        truth: GroundTruth {
            seed,
            grid_ms: g,
            attack: "+x".into(),
            roster: config.roster.clone(),
            template_names: config.templates.iter().map(|t| t.name.clone()).collect(),
            template_phases: config
                .templates
                .iter()
                .map(|t| t.phase.to_label())
                .collect(),
            frames,
            shots: truth_shots,
        },
    })
}
