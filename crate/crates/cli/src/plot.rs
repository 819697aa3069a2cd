//! Deterministic SVG plots, assembled directly from templated primitives.
//!
//! No plotting library: the output must be byte-stable under identical
//! inputs so manifests can be hash-compared, and small enough to eyeball
//! in a diff. Numbers are written with fixed decimals for the same reason.

use courtphase_core::error::{CoreError, Result};
use courtphase_core::mds::{matrix_from_rows, MdsFile};
use courtphase_core::segment::DYAD_PAIRS;

const PANEL_W: f64 = 280.0;
const PANEL_H: f64 = 210.0;
const PANELS_PER_ROW: usize = 3;
/// Margins inside one panel: left, right, top, bottom.
const MARGIN: [f64; 4] = [46.0, 12.0, 26.0, 30.0];
const HEADER_H: f64 = 34.0;

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn f1(v: f64) -> String {
    format!("{v:.1}")
}

struct Svg {
    body: String,
}

impl Svg {
    fn new() -> Svg {
        Svg { body: String::new() }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        self.body.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"{}\"/>\n",
            f1(x1), f1(y1), f1(x2), f1(y2), f1(width)
        ));
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        self.body.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\"/>\n",
            f1(cx),
            f1(cy),
            f1(r)
        ));
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let pts: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{},{}", f1(x), f1(y)))
            .collect();
        self.body.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.2\"/>\n",
            pts.join(" ")
        ));
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        self.body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"{}\" text-anchor=\"{anchor}\">{}</text>\n",
            f1(x), f1(y), f1(size), esc(content)
        ));
    }

    fn finish(self, width: f64, height: f64) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = f1(width),
            h = f1(height)
        )
    }
}

fn canvas_size(panels: usize) -> (f64, f64, usize) {
    let cols = panels.clamp(1, PANELS_PER_ROW);
    let rows = panels.div_ceil(PANELS_PER_ROW);
    (
        cols as f64 * PANEL_W,
        HEADER_H + rows as f64 * PANEL_H,
        cols,
    )
}

fn panel_origin(index: usize) -> (f64, f64) {
    let col = index % PANELS_PER_ROW;
    let row = index / PANELS_PER_ROW;
    (col as f64 * PANEL_W, HEADER_H + row as f64 * PANEL_H)
}

/// Per-cluster dyad-distance profile panels. Each panel shows the cluster's
/// mean distance per dyad as connected markers, with a short horizontal
/// dash per dyad marking the stint-wide average for comparison.
pub fn profile_plot(mds: &MdsFile) -> Result<String> {
    if mds.clusters.is_empty() {
        return Err(CoreError::InvalidArgument(
            "profile plot needs at least one cluster".into(),
        ));
    }
    let reference = matrix_from_rows(&mds.stint_average)?;
    let matrices: Vec<[[f64; 5]; 5]> = mds
        .clusters
        .iter()
        .map(|c| matrix_from_rows(&c.matrix))
        .collect::<Result<_>>()?;

    let mut ymax = 0.0f64;
    for m in matrices.iter().chain(std::iter::once(&reference)) {
        for &(i, j) in DYAD_PAIRS.iter() {
            ymax = ymax.max(m[i][j]);
        }
    }
    let ymax = ((ymax / 200.0).ceil() * 200.0).max(200.0);

    let (width, height, _) = canvas_size(mds.clusters.len());
    let mut svg = Svg::new();
    svg.text(8.0, 16.0, 13.0, "start", "Mean dyad distance per cluster (cm)");
    let legend = format!(
        "dash = stint average; slots: {}",
        mds.players
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{}={p}", i + 1))
            .collect::<Vec<_>>()
            .join(" ")
    );
    svg.text(8.0, 29.0, 10.0, "start", &legend);

    for (idx, entry) in mds.clusters.iter().enumerate() {
        let (ox, oy) = panel_origin(idx);
        let plot_x = ox + MARGIN[0];
        let plot_y = oy + MARGIN[2];
        let plot_w = PANEL_W - MARGIN[0] - MARGIN[1];
        let plot_h = PANEL_H - MARGIN[2] - MARGIN[3];
        let y_of = |v: f64| plot_y + plot_h * (1.0 - v / ymax);
        let x_of = |d: usize| plot_x + plot_w * (d as f64 + 0.5) / 10.0;

        svg.text(
            ox + PANEL_W / 2.0,
            oy + 16.0,
            11.0,
            "middle",
            &format!("cluster {} ({} frames)", entry.cluster, entry.frames),
        );
        // Frame and y ticks.
        svg.line(plot_x, plot_y, plot_x, plot_y + plot_h, "#444444", 1.0);
        svg.line(
            plot_x,
            plot_y + plot_h,
            plot_x + plot_w,
            plot_y + plot_h,
            "#444444",
            1.0,
        );
        for step in 0..=2 {
            let v = ymax * step as f64 / 2.0;
            let y = y_of(v);
            svg.line(plot_x - 3.0, y, plot_x, y, "#444444", 1.0);
            svg.text(plot_x - 5.0, y + 3.5, 9.0, "end", &format!("{v:.0}"));
        }

        let matrix = &matrices[idx];
        let mut points = Vec::with_capacity(10);
        for (d, &(i, j)) in DYAD_PAIRS.iter().enumerate() {
            let x = x_of(d);
            let r = y_of(reference[i][j]);
            svg.line(x - plot_w / 10.0 * 0.32, r, x + plot_w / 10.0 * 0.32, r, "#999999", 1.2);
            points.push((x, y_of(matrix[i][j])));
            svg.text(
                x,
                plot_y + plot_h + 11.0,
                8.0,
                "middle",
                &format!("{}-{}", i + 1, j + 1),
            );
        }
        svg.polyline(&points, "#2166ac");
        for &(x, y) in &points {
            svg.circle(x, y, 2.6, "#2166ac");
        }
    }
    Ok(svg.finish(width, height))
}

/// Per-cluster court maps: the five reconstructed player positions, on a
/// shared scale so the spread of one panel is comparable with another.
pub fn mds_plot(mds: &MdsFile) -> Result<String> {
    if mds.clusters.is_empty() {
        return Err(CoreError::InvalidArgument(
            "mds plot needs at least one cluster".into(),
        ));
    }
    for entry in &mds.clusters {
        if entry.coords.len() != mds.players.len() || mds.players.len() != 5 {
            return Err(CoreError::Misaligned(format!(
                "cluster {} has {} embedding points for {} players",
                entry.cluster,
                entry.coords.len(),
                mds.players.len()
            )));
        }
    }

    let mut extent = 0.0f64;
    for entry in &mds.clusters {
        for c in &entry.coords {
            extent = extent.max(c[0].abs()).max(c[1].abs());
        }
    }
    let extent = (extent * 1.15).max(1.0);

    let (width, height, _) = canvas_size(mds.clusters.len());
    let mut svg = Svg::new();
    svg.text(
        8.0,
        16.0,
        13.0,
        "start",
        "Reconstructed player layout per cluster (cm)",
    );
    svg.text(
        8.0,
        29.0,
        10.0,
        "start",
        &format!("shared scale, half-extent {extent:.0} cm"),
    );

    for (idx, entry) in mds.clusters.iter().enumerate() {
        let (ox, oy) = panel_origin(idx);
        let plot_x = ox + 18.0;
        let plot_y = oy + 26.0;
        let side = (PANEL_W - 36.0).min(PANEL_H - 44.0);
        let cx = plot_x + side / 2.0;
        let cy = plot_y + side / 2.0;
        let scale = side / (2.0 * extent);

        svg.text(
            ox + PANEL_W / 2.0,
            oy + 16.0,
            11.0,
            "middle",
            &format!("cluster {} (strain share {:.2})", entry.cluster, entry.strain_share),
        );
        svg.body.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n",
            f1(plot_x), f1(plot_y), f1(side), f1(side)
        ));
        svg.line(plot_x, cy, plot_x + side, cy, "#dddddd", 1.0);
        svg.line(cx, plot_y, cx, plot_y + side, "#dddddd", 1.0);

        for (slot, c) in entry.coords.iter().enumerate() {
            let x = cx + c[0] * scale;
            let y = cy - c[1] * scale;
            svg.circle(x, y, 4.0, "#b2182b");
            svg.text(x + 5.0, y - 4.0, 9.0, "start", &mds.players[slot]);
        }
    }
    Ok(svg.finish(width, height))
}

#[cfg(test)]
mod tests {
    use super::*;
    use courtphase_core::mds::MdsEntry;

    fn file(clusters: usize, spread: f64) -> MdsFile {
        let matrix = vec![vec![spread; 5]; 5];
        MdsFile {
            players: (1..=5).map(|i| format!("p{i}")).collect(),
            stint_average: matrix.clone(),
            clusters: (0..clusters)
                .map(|c| MdsEntry {
                    cluster: c,
                    frames: 10 * (c + 1),
                    matrix: matrix.clone(),
                    coords: vec![
                        [spread, 0.0],
                        [0.0, spread],
                        [-spread, 0.0],
                        [0.0, -spread],
                        [0.0, 0.0],
                    ],
                    eigenvalues: [spread, spread],
                    strain_share: 1.0,
                })
                .collect(),
        }
    }

    #[test]
    fn plots_have_one_panel_per_cluster() {
        for n in [1, 2, 6] {
            let f = file(n, 400.0);
            let profile = profile_plot(&f).unwrap();
            let map = mds_plot(&f).unwrap();
            // Panel titles render as `>cluster N (...` — the canvas header
            // mentions "cluster" mid-sentence and must not be counted.
            assert_eq!(profile.matches(">cluster ").count(), n);
            assert_eq!(map.matches(">cluster ").count(), n);
            assert!(profile.starts_with("<svg ") && profile.trim_end().ends_with("</svg>"));
            assert!(map.starts_with("<svg ") && map.trim_end().ends_with("</svg>"));
            assert!(profile.contains("viewBox"));
            assert!(map.contains("viewBox"));
        }
    }

    #[test]
    fn uniform_cluster_markers_sit_on_the_reference_line() {
        // One cluster whose matrix equals the stint average: every marker y
        // must equal its reference dash y.
        let f = file(1, 400.0);
        let svg = profile_plot(&f).unwrap();
        // Reference dashes and markers are drawn at the same height; count
        // circle y values also appearing in dash lines.
        let circle_ys: Vec<&str> = svg
            .lines()
            .filter(|l| l.starts_with("<circle"))
            .filter_map(|l| l.split("cy=\"").nth(1))
            .filter_map(|rest| rest.split('"').next())
            .collect();
        assert_eq!(circle_ys.len(), 10);
        for y in circle_ys {
            assert!(
                svg.lines()
                    .filter(|l| l.starts_with("<line") && l.contains("#999999"))
                    .any(|l| l.contains(&format!("y1=\"{y}\""))),
                "marker at y={y} has no reference dash"
            );
        }
    }

    #[test]
    fn player_ids_are_escaped() {
        let mut f = file(1, 100.0);
        f.players[0] = "a&b<c>".into();
        let svg = mds_plot(&f).unwrap();
        assert!(svg.contains("a&amp;b&lt;c&gt;"));
        assert!(!svg.contains("a&b<c>"));
    }

    #[test]
    fn empty_input_is_rejected() {
        let mut f = file(1, 100.0);
        f.clusters.clear();
        assert!(profile_plot(&f).is_err());
        assert!(mds_plot(&f).is_err());
    }
}
