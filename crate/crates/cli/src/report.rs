//! Human-readable and machine-readable renderings of the tabular results.
//!
//! Every table comes in two forms: aligned text for reading and CSV for
//! scripting. Percentages are rendered with two decimals in both (the JSON
//! artifacts keep the full-precision values).

use courtphase_core::phase::{ClusterPhaseRow, SwitchStats, TransitionMatrix};
use courtphase_core::shots::ShotReport;

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

fn opt_pct(v: Option<f64>) -> String {
    v.map(pct).unwrap_or_else(|| "-".into())
}

/// Phase composition per cluster, aligned text.
pub fn phase_table_text(rows: &[ClusterPhaseRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>7} {:>8} {:>8} {:>8} {:>8} {:>9}\n",
        "cluster", "frames", "TR%", "D%", "O%", "majority"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:>7} {:>8} {:>8} {:>8} {:>8} {:>9}\n",
            row.cluster,
            row.frames,
            pct(row.percent[0]),
            pct(row.percent[1]),
            pct(row.percent[2]),
            row.majority.code(),
        ));
    }
    out
}

/// Phase composition per cluster, CSV.
pub fn phase_table_csv(rows: &[ClusterPhaseRow]) -> String {
    let mut out =
        String::from("cluster,frames,transition_pct,defense_pct,offense_pct,majority\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.cluster,
            row.frames,
            pct(row.percent[0]),
            pct(row.percent[1]),
            pct(row.percent[2]),
            row.majority.code(),
        ));
    }
    out
}

/// Switch shares between clusters plus the switch-rate summary, aligned
/// text. Columns are the clusters switched out of; each column with any
/// outgoing switch sums to 100.
pub fn transitions_text(matrix: &TransitionMatrix, stats: &SwitchStats) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:>8}", "to\\from"));
    for j in 0..matrix.k {
        out.push_str(&format!(" {j:>8}"));
    }
    out.push('\n');
    for i in 0..matrix.k {
        out.push_str(&format!("{i:>8}"));
        for j in 0..matrix.k {
            out.push_str(&format!(" {:>8}", pct(matrix.percent[i][j])));
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "switches: {}  active: {:.1} s  rate: {:.4} /s  mean spacing: {}\n",
        stats.switches,
        stats.duration_s,
        stats.per_second,
        stats
            .mean_spacing_s
            .map(|s| format!("{s:.3} s"))
            .unwrap_or_else(|| "-".into()),
    ));
    out
}

/// Switch shares between clusters, CSV (percent of the source column).
pub fn transitions_csv(matrix: &TransitionMatrix) -> String {
    let mut out = String::from("to_cluster");
    for j in 0..matrix.k {
        out.push_str(&format!(",from_{j}"));
    }
    out.push('\n');
    for i in 0..matrix.k {
        out.push_str(&i.to_string());
        for j in 0..matrix.k {
            out.push(',');
            out.push_str(&pct(matrix.percent[i][j]));
        }
        out.push('\n');
    }
    out
}

/// Shooting per cluster, aligned text.
pub fn shots_text(report: &ShotReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>7} {:>9} {:>6} {:>7}\n",
        "cluster", "attempts", "made", "fg%"
    ));
    for c in &report.per_cluster {
        out.push_str(&format!(
            "{:>7} {:>9} {:>6} {:>7}\n",
            c.cluster,
            c.attempts,
            c.made,
            opt_pct(c.percent),
        ));
    }
    out.push_str(&format!(
        "{:>7} {:>9} {:>6} {:>7}\n",
        "total",
        report.attempts,
        report.made,
        opt_pct(report.percent),
    ));
    if report.unmatched > 0 {
        out.push_str(&format!("unmatched shots: {}\n", report.unmatched));
    }
    out
}

/// Shooting per cluster, CSV. The `total` row repeats the overall numbers;
/// unmatched shots are counted separately since they belong to no cluster.
pub fn shots_csv(report: &ShotReport) -> String {
    let mut out = String::from("cluster,attempts,made,fg_pct\n");
    for c in &report.per_cluster {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.cluster,
            c.attempts,
            c.made,
            c.percent.map(pct).unwrap_or_default(),
        ));
    }
    out.push_str(&format!(
        "total,{},{},{}\n",
        report.attempts,
        report.made,
        report.percent.map(pct).unwrap_or_default(),
    ));
    out.push_str(&format!("unmatched,{},,\n", report.unmatched));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use courtphase_core::phase::{cluster_phase_table, switch_rate, transition_matrix, PhaseLabel};
    use courtphase_core::shots::{attach_shots, shot_report, ShotEvent};

    #[test]
    fn phase_table_renders_two_decimal_percentages() {
        let assignments: Vec<usize> = std::iter::repeat(0).take(10_000).collect();
        let labels: Vec<PhaseLabel> = (0..10_000)
            .map(|i| {
                if i < 841 {
                    PhaseLabel::Transition
                } else if i < 841 + 2274 {
                    PhaseLabel::Defense
                } else {
                    PhaseLabel::Offense
                }
            })
            .collect();
        let table = cluster_phase_table(&assignments, &labels, 1).unwrap();
        let text = phase_table_text(&table);
        assert!(text.contains("8.41"));
        assert!(text.contains("22.74"));
        assert!(text.contains("68.85"));
        let csv = phase_table_csv(&table);
        assert_eq!(csv.lines().nth(1).unwrap(), "0,10000,8.41,22.74,68.85,O");
    }

    #[test]
    fn transition_table_includes_rate_summary() {
        let assignments = [0, 1, 0, 1, 1, 2];
        let contiguous = [false, true, true, true, true, true];
        let matrix = transition_matrix(&assignments, &contiguous, 3).unwrap();
        let stats = switch_rate(matrix.switches, 501_000).unwrap();
        let text = transitions_text(&matrix, &stats);
        assert!(text.contains("to\\from"));
        assert!(text.contains("switches: 4"));
        let csv = transitions_csv(&matrix);
        assert_eq!(csv.lines().next().unwrap(), "to_cluster,from_0,from_1,from_2");
        // Column from_0 has switches only into cluster 1.
        assert!(csv.lines().nth(2).unwrap().starts_with("1,100.00,"));
    }

    #[test]
    fn shot_tables_mark_empty_clusters_with_dash() {
        let shots = vec![
            ShotEvent {
                timestamp_ms: 0,
                made: true,
                shooter: None,
            },
            ShotEvent {
                timestamp_ms: 100,
                made: false,
                shooter: None,
            },
        ];
        let frames = vec![(0, 0), (100, 0)];
        let attached = attach_shots(&shots, &frames, 10).unwrap();
        let report = shot_report(&attached, 2).unwrap();
        let text = shots_text(&report);
        assert!(text.contains("50.00"));
        assert!(text.lines().nth(2).unwrap().trim_end().ends_with('-'));
        let csv = shots_csv(&report);
        assert!(csv.contains("0,2,1,50.00"));
        assert!(csv.contains("1,0,0,\n"));
        assert!(csv.contains("unmatched,0,,"));
    }
}
