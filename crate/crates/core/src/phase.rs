//! Offense / defense / transition labelling and cluster switch dynamics.
//!
//! The game-phase rule is a one-liner on purpose: take the lineup's mean x
//! coordinate; inside a symmetric band around the half-court line the
//! frame is a transition, outside it the sign decides offense vs defense
//! relative to the direction the team attacks. Teams swap ends at halftime,
//! so periods 3 and 4 flip the direction.
//!
//! Crossing assignments with labels gives the cluster-phase table (what
//! share of each cluster's frames are offense, defense, transition) and the
//! cluster transition matrix (where the frames of one cluster go next).
//! Switches are only counted between frames that are grid-adjacent: a jump
//! across a dead ball or a lineup change says nothing about flow.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::ingest::Frame;
use crate::segment::mean_x;

/// Default half-width of the transition band: 4 m either side of centre.
pub const DEFAULT_BAND_CM: f64 = 400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhaseLabel {
    #[serde(rename = "TR")]
    Transition,
    #[serde(rename = "D")]
    Defense,
    #[serde(rename = "O")]
    Offense,
}

impl PhaseLabel {
    /// All labels in tie-break priority order (transition wins ties, then
    /// defense, then offense).
    pub const ALL: [PhaseLabel; 3] = [
        PhaseLabel::Transition,
        PhaseLabel::Defense,
        PhaseLabel::Offense,
    ];

    pub fn code(self) -> &'static str {
        match self {
            PhaseLabel::Transition => "TR",
            PhaseLabel::Defense => "D",
            PhaseLabel::Offense => "O",
        }
    }

    /// Index into per-label count arrays, in [`PhaseLabel::ALL`] order.
    pub fn index(self) -> usize {
        match self {
            PhaseLabel::Transition => 0,
            PhaseLabel::Defense => 1,
            PhaseLabel::Offense => 2,
        }
    }
}

/// Direction the team attacks during periods 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackDirection {
    PositiveX,
    NegativeX,
}

impl AttackDirection {
    pub fn parse(s: &str) -> Option<AttackDirection> {
        match s {
            "+x" => Some(AttackDirection::PositiveX),
            "-x" => Some(AttackDirection::NegativeX),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AttackDirection::PositiveX => "+x",
            AttackDirection::NegativeX => "-x",
        }
    }

    pub fn flipped(self) -> AttackDirection {
        match self {
            AttackDirection::PositiveX => AttackDirection::NegativeX,
            AttackDirection::NegativeX => AttackDirection::PositiveX,
        }
    }

    /// Sign of the attacked basket's x coordinate in a given period.
    /// Periods 3 and 4 play toward the opposite end.
    pub fn sign_in_period(self, period: u8) -> f64 {
        let base = match self {
            AttackDirection::PositiveX => 1.0,
            AttackDirection::NegativeX => -1.0,
        };
        if period >= 3 {
            -base
        } else {
            base
        }
    }
}

/// The core labelling rule on an already-computed mean x. The band is a
/// closed interval: `|mean_x| == band_cm` is still a transition.
pub fn label_mean_x(mean_x_cm: f64, band_cm: f64, attack_sign: f64) -> PhaseLabel {
    if mean_x_cm.abs() <= band_cm {
        PhaseLabel::Transition
    } else if mean_x_cm * attack_sign > 0.0 {
        PhaseLabel::Offense
    } else {
        PhaseLabel::Defense
    }
}

/// Label one frame for a lineup. The frame must carry a period (frames
/// before any `PERIOD_START` cannot be labelled).
pub fn label_frame(
    frame: &Frame,
    lineup: &[String],
    band_cm: f64,
    attack: AttackDirection,
) -> Result<PhaseLabel> {
    if !(band_cm >= 0.0) {
        return Err(CoreError::InvalidArgument(format!(
            "band_cm must be >= 0, got {band_cm}"
        )));
    }
    if frame.period == 0 {
        return Err(CoreError::UnknownPeriod {
            timestamp_ms: frame.timestamp_ms,
        });
    }
    let mx = mean_x(frame, lineup)?;
    Ok(label_mean_x(mx, band_cm, attack.sign_in_period(frame.period)))
}

/// One row of the cluster-phase table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPhaseRow {
    pub cluster: usize,
    pub frames: usize,
    /// Frame counts in `[transition, defense, offense]` order.
    pub counts: [usize; 3],
    /// Percentages of this cluster's frames; they sum to 100.
    pub percent: [f64; 3],
    pub majority: PhaseLabel,
}

/// Cross-tabulate cluster assignments against phase labels. Inputs must be
/// frame-aligned and every cluster in `0..k` must own at least one frame.
pub fn cluster_phase_table(
    assignments: &[usize],
    labels: &[PhaseLabel],
    k: usize,
) -> Result<Vec<ClusterPhaseRow>> {
    if assignments.len() != labels.len() {
        return Err(CoreError::Misaligned(format!(
            "{} assignments vs {} labels",
            assignments.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = assignments.iter().find(|&&a| a >= k) {
        return Err(CoreError::Misaligned(format!(
            "assignment {bad} out of range for k={k}"
        )));
    }
    let mut counts = vec![[0usize; 3]; k];
    for (&a, &l) in assignments.iter().zip(labels) {
        counts[a][l.index()] += 1;
    }
    let mut rows = Vec::with_capacity(k);
    for (cluster, c) in counts.into_iter().enumerate() {
        let total = c[0] + c[1] + c[2];
        if total == 0 {
            return Err(CoreError::InvalidArgument(format!(
                "cluster {cluster} has no frames"
            )));
        }
        let percent = [
            100.0 * c[0] as f64 / total as f64,
            100.0 * c[1] as f64 / total as f64,
            100.0 * c[2] as f64 / total as f64,
        ];
        // First label in priority order with the maximal count: ties go to
        // transition, then defense.
        let max_count = *c.iter().max().unwrap();
        let majority = PhaseLabel::ALL
            .iter()
            .copied()
            .find(|l| c[l.index()] == max_count)
            .unwrap();
        rows.push(ClusterPhaseRow {
            cluster,
            frames: total,
            counts: c,
            percent,
            majority,
        });
    }
    Ok(rows)
}

/// Column-stochastic cluster transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub k: usize,
    /// `counts[i][j]` = switches out of cluster j into cluster i, counted
    /// only between grid-adjacent frames. Diagonal is zero by construction.
    pub counts: Vec<Vec<u64>>,
    /// `percent[i][j]` = share of the switches out of j that land in i.
    /// Each column with any outgoing switch sums to 100.
    pub percent: Vec<Vec<f64>>,
    pub switches: u64,
}

/// Count cluster switches between adjacent frames. `contiguous[i]` must say
/// whether frame i sits exactly one grid step after frame i-1; pairs that
/// straddle a gap are ignored.
pub fn transition_matrix(
    assignments: &[usize],
    contiguous: &[bool],
    k: usize,
) -> Result<TransitionMatrix> {
    if assignments.len() != contiguous.len() {
        return Err(CoreError::Misaligned(format!(
            "{} assignments vs {} contiguity flags",
            assignments.len(),
            contiguous.len()
        )));
    }
    if let Some(&bad) = assignments.iter().find(|&&a| a >= k) {
        return Err(CoreError::Misaligned(format!(
            "assignment {bad} out of range for k={k}"
        )));
    }
    let mut counts = vec![vec![0u64; k]; k];
    for i in 1..assignments.len() {
        if contiguous[i] && assignments[i] != assignments[i - 1] {
            counts[assignments[i]][assignments[i - 1]] += 1;
        }
    }
    let mut percent = vec![vec![0.0; k]; k];
    let mut switches = 0u64;
    for j in 0..k {
        let column_total: u64 = (0..k).map(|i| counts[i][j]).sum();
        switches += column_total;
        if column_total > 0 {
            for i in 0..k {
                percent[i][j] = 100.0 * counts[i][j] as f64 / column_total as f64;
            }
        }
    }
    Ok(TransitionMatrix {
        k,
        counts,
        percent,
        switches,
    })
}

/// Switch tempo over the active (on-grid) duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchStats {
    pub switches: u64,
    pub duration_s: f64,
    pub per_second: f64,
    /// Mean seconds between switches; absent when nothing ever switched.
    pub mean_spacing_s: Option<f64>,
}

pub fn switch_rate(switches: u64, active_ms: i64) -> Result<SwitchStats> {
    if active_ms <= 0 {
        return Err(CoreError::InvalidArgument(format!(
            "active duration must be positive, got {active_ms} ms"
        )));
    }
    let duration_s = active_ms as f64 / 1000.0;
    Ok(SwitchStats {
        switches,
        duration_s,
        per_second: switches as f64 / duration_s,
        mean_spacing_s: (switches > 0).then(|| duration_s / switches as f64),
    })
}

/// Serialized phase artifact for one stint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseFile {
    pub band_cm: f64,
    pub attack: String,
    pub k: usize,
    /// `[frame_ms, cluster, label]` per frame, ascending.
    pub frames: Vec<(i64, usize, PhaseLabel)>,
    pub table: Vec<ClusterPhaseRow>,
    pub transitions: TransitionMatrix,
    pub switch_stats: SwitchStats,
}
