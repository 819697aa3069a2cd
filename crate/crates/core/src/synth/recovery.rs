//! Scoring recovered structure against generator ground truth.
//!
//! The pipeline never sees which template produced a frame, so recovery is
//! judged label-free: purity and the adjusted Rand index compare the
//! cluster partition with the template partition without assuming any
//! particular numbering, and a 3x3 confusion matrix compares phase labels
//! directly (those do share a vocabulary).

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::phase::PhaseLabel;
use crate::synth::GroundTruth;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    /// Frames scored (every truth frame must be matched exactly once).
    pub frames: usize,
    /// Distinct cluster ids observed in the assignments.
    pub clusters: usize,
    /// Templates in the generating config.
    pub templates: usize,
    /// Mean majority-template share per cluster; 1.0 means every cluster is
    /// template-pure (splitting one template across clusters stays pure).
    pub purity: f64,
    /// Chance-corrected pair agreement between the cluster and template
    /// partitions; 1.0 only for a perfect (relabeled) match, ~0 for random.
    pub adjusted_rand: f64,
    /// `phase_confusion[t][p]` counts frames with truth phase `t` labelled
    /// `p`, both indexed in `PhaseLabel::ALL` order (TR, D, O).
    pub phase_confusion: [[u64; 3]; 3],
    /// Trace share of the confusion matrix.
    pub phase_accuracy: f64,
}

fn pairs(n: f64) -> f64 {
    n * (n - 1.0) / 2.0
}

/// Score cluster assignments and phase labels against ground truth. Both
/// slices must cover exactly the truth frames, in timestamp order.
pub fn evaluate_recovery(
    truth: &GroundTruth,
    assignments: &[(i64, usize)],
    phases: &[(i64, PhaseLabel)],
) -> Result<RecoveryMetrics> {
    if assignments.len() != truth.frames.len() {
        return Err(CoreError::Misaligned(format!(
            "{} assignments for {} truth frames",
            assignments.len(),
            truth.frames.len()
        )));
    }
    if phases.len() != truth.frames.len() {
        return Err(CoreError::Misaligned(format!(
            "{} phase labels for {} truth frames",
            phases.len(),
            truth.frames.len()
        )));
    }
    let templates = truth.template_names.len();
    let clusters = assignments.iter().map(|&(_, c)| c + 1).max().unwrap_or(0);
    let mut contingency = vec![vec![0u64; clusters]; templates];
    let mut phase_confusion = [[0u64; 3]; 3];
    for (i, frame) in truth.frames.iter().enumerate() {
        let (ts_a, cluster) = assignments[i];
        let (ts_p, label) = phases[i];
        if ts_a != frame.frame_ms || ts_p != frame.frame_ms {
            return Err(CoreError::Misaligned(format!(
                "row {i}: truth frame at {} ms, assignment at {ts_a} ms, label at {ts_p} ms",
                frame.frame_ms
            )));
        }
        if frame.template >= templates {
            return Err(CoreError::Internal(format!(
                "truth frame template {} out of range",
                frame.template
            )));
        }
        contingency[frame.template][cluster] += 1;
        phase_confusion[frame.phase.index()][label.index()] += 1;
    }

    let n = truth.frames.len() as f64;
    let mut purity_hits = 0u64;
    for j in 0..clusters {
        purity_hits += (0..templates).map(|i| contingency[i][j]).max().unwrap_or(0);
    }
    let purity = if n > 0.0 { purity_hits as f64 / n } else { 1.0 };

    // Adjusted Rand index from the contingency table.
    let sum_ij: f64 = contingency
        .iter()
        .flat_map(|row| row.iter())
        .map(|&c| pairs(c as f64))
        .sum();
    let sum_a: f64 = contingency
        .iter()
        .map(|row| pairs(row.iter().sum::<u64>() as f64))
        .sum();
    let sum_b: f64 = (0..clusters)
        .map(|j| pairs((0..templates).map(|i| contingency[i][j]).sum::<u64>() as f64))
        .sum();
    let expected = sum_a * sum_b / pairs(n).max(1.0);
    let denom = 0.5 * (sum_a + sum_b) - expected;
    let adjusted_rand = if denom.abs() < 1e-12 {
        // Both partitions trivial (all singletons or one block): perfect
        // agreement by convention.
        1.0
    } else {
        (sum_ij - expected) / denom
    };

    let trace: u64 = (0..3).map(|i| phase_confusion[i][i]).sum();
    let phase_accuracy = if n > 0.0 { trace as f64 / n } else { 1.0 };

    Ok(RecoveryMetrics {
        frames: truth.frames.len(),
        clusters,
        templates,
        purity,
        adjusted_rand,
        phase_confusion,
        phase_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use crate::synth::{generate_game, SynthConfig};

    fn truth_fixture() -> GroundTruth {
        let mut cfg = SynthConfig::default();
        cfg.grid_ms = 100;
        cfg.schedule.period_ms = 20_000;
        cfg.schedule.pre_match_ms = 1_000;
        cfg.schedule.quarter_break_ms = 2_000;
        cfg.schedule.half_break_ms = 3_000;
        cfg.schedule.post_match_ms = 1_000;
        cfg.schedule.timeouts = Vec::new();
        cfg.schedule.free_throws = Vec::new();
        generate_game(&cfg, 99).unwrap().truth
    }

    fn perfect_inputs(truth: &GroundTruth) -> (Vec<(i64, usize)>, Vec<(i64, PhaseLabel)>) {
        let assignments = truth
            .frames
            .iter()
            .map(|f| (f.frame_ms, f.template))
            .collect();
        let phases = truth.frames.iter().map(|f| (f.frame_ms, f.phase)).collect();
        (assignments, phases)
    }

    #[test]
    fn perfect_recovery_scores_one() {
        let truth = truth_fixture();
        let (assignments, phases) = perfect_inputs(&truth);
        let m = evaluate_recovery(&truth, &assignments, &phases).unwrap();
        assert_eq!(m.frames, truth.frames.len());
        assert_eq!(m.purity, 1.0);
        assert!((m.adjusted_rand - 1.0).abs() < 1e-12);
        assert_eq!(m.phase_accuracy, 1.0);
        for t in 0..3 {
            for p in 0..3 {
                if t != p {
                    assert_eq!(m.phase_confusion[t][p], 0);
                }
            }
        }
    }

    #[test]
    fn relabeled_clusters_still_score_one() {
        let truth = truth_fixture();
        let (assignments, phases) = perfect_inputs(&truth);
        let relabel = |c: usize| (c + 3) % 6;
        let shuffled: Vec<(i64, usize)> =
            assignments.iter().map(|&(ts, c)| (ts, relabel(c))).collect();
        let m = evaluate_recovery(&truth, &shuffled, &phases).unwrap();
        assert_eq!(m.purity, 1.0);
        assert!((m.adjusted_rand - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_keeps_purity_but_lowers_rand() {
        let truth = truth_fixture();
        let (assignments, phases) = perfect_inputs(&truth);
        // Split every template into two alternating sub-clusters.
        let refined: Vec<(i64, usize)> = assignments
            .iter()
            .enumerate()
            .map(|(i, &(ts, c))| (ts, 2 * c + (i % 2)))
            .collect();
        let m = evaluate_recovery(&truth, &refined, &phases).unwrap();
        assert_eq!(m.purity, 1.0);
        assert!(m.adjusted_rand < 0.95);
        assert!(m.adjusted_rand > 0.0);
    }

    #[test]
    fn single_cluster_scores_zero_rand() {
        let truth = truth_fixture();
        let (assignments, phases) = perfect_inputs(&truth);
        let lumped: Vec<(i64, usize)> = assignments.iter().map(|&(ts, _)| (ts, 0)).collect();
        let m = evaluate_recovery(&truth, &lumped, &phases).unwrap();
        assert!(m.purity < 1.0);
        assert!(m.adjusted_rand.abs() < 1e-12);
    }

    #[test]
    fn random_assignment_scores_near_zero_rand() {
        let truth = truth_fixture();
        let (_, phases) = perfect_inputs(&truth);
        let mut rng = CounterRng::new(2024);
        let random: Vec<(i64, usize)> = truth
            .frames
            .iter()
            .map(|f| (f.frame_ms, rng.below(6)))
            .collect();
        let m = evaluate_recovery(&truth, &random, &phases).unwrap();
        assert!(
            m.adjusted_rand.abs() < 0.05,
            "random partition scored {}",
            m.adjusted_rand
        );
    }

    #[test]
    fn phase_confusion_counts_swaps() {
        let truth = truth_fixture();
        let (assignments, phases) = perfect_inputs(&truth);
        // Mislabel every true transition frame as defense.
        let bent: Vec<(i64, PhaseLabel)> = phases
            .iter()
            .map(|&(ts, p)| {
                let q = if p == PhaseLabel::Transition {
                    PhaseLabel::Defense
                } else {
                    p
                };
                (ts, q)
            })
            .collect();
        let m = evaluate_recovery(&truth, &assignments, &bent).unwrap();
        let tr = PhaseLabel::Transition.index();
        let d = PhaseLabel::Defense.index();
        assert_eq!(m.phase_confusion[tr][tr], 0);
        assert!(m.phase_confusion[tr][d] > 0);
        let tr_total: u64 = m.phase_confusion[tr].iter().sum();
        assert_eq!(
            m.phase_accuracy,
            (m.frames as u64 - tr_total) as f64 / m.frames as f64
        );
    }

    #[test]
    fn misaligned_inputs_are_rejected() {
        let truth = truth_fixture();
        let (mut assignments, phases) = perfect_inputs(&truth);
        assignments.pop();
        assert!(evaluate_recovery(&truth, &assignments, &phases).is_err());

        let (mut assignments, phases) = perfect_inputs(&truth);
        assignments[0].0 += 1;
        assert!(evaluate_recovery(&truth, &assignments, &phases).is_err());
    }
}
