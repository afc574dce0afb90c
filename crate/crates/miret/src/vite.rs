//! SVG renderings of ensemble statistics.
//!
//! Two artifacts come out of here: a level-frequency heatmap (features
//! by tree levels, shaded per column) and a representative tree (one
//! complete depth-D tree whose internal nodes carry mini-heatmaps of
//! their node-frequency rows plus the observed threshold ranges).
//!
//! Rendering is a pure function of its inputs and the output is
//! byte-deterministic: coordinates are integers, colors are fixed hex
//! strings, and every percentage shown is the matrix entry rounded
//! half-up to one decimal. Cells carry `data-level`/`data-feature`
//! (and `data-node`) attributes so the documents stay machine-checkable.

use std::fmt::Write as _;

use crate::stats::{LevelFrequencyMatrix, NodeFrequencyMatrix, ThresholdRanges};

/// Monotone color map for frequencies: 0 renders `light`, the column
/// (or row) maximum renders `dark`, linear in between.
#[derive(Debug, Clone)]
pub struct ColorRamp {
    pub light: [u8; 3],
    pub dark: [u8; 3],
}

impl Default for ColorRamp {
    fn default() -> Self {
        // White to a deep blue; interpolation stays monotone per channel.
        Self {
            light: [255, 255, 255],
            dark: [8, 48, 107],
        }
    }
}

impl ColorRamp {
    /// Hex color for a relative intensity `t` in [0, 1] (clamped).
    pub fn color(&self, t: f64) -> String {
        let t = t.clamp(0.0, 1.0);
        let mut rgb = [0u8; 3];
        for (i, c) in rgb.iter_mut().enumerate() {
            let lo = f64::from(self.light[i]);
            let hi = f64::from(self.dark[i]);
            *c = (lo + t * (hi - lo)).round() as u8;
        }
        format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
    }
}

/// Whether heatmap cells print their percentage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellLabels {
    ShowPercent,
    Hide,
}

/// Appearance options shared by both renderers.
#[derive(Debug, Clone)]
pub struct HeatmapSpec {
    pub ramp: ColorRamp,
    pub cell_labels: CellLabels,
    pub title: String,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        Self {
            ramp: ColorRamp::default(),
            cell_labels: CellLabels::ShowPercent,
            title: String::new(),
        }
    }
}

/// Formats a frequency in [0, 1] as a percentage rounded half-up to one
/// decimal, e.g. `0.33335` renders as `33.3` and `0.3335` as `33.4`.
pub fn percent_label(frequency: f64) -> String {
    let tenths = (frequency * 1000.0 + 0.5).floor() / 10.0;
    format!("{tenths:.1}")
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(ch),
        }
    }
    out
}

/// Text color that stays readable on a ramp cell of intensity `t`.
fn label_color(t: f64) -> &'static str {
    if t > 0.55 {
        "#ffffff"
    } else {
        "#1a1a1a"
    }
}

// ---------------------------------------------------------------------------
// level heatmap
// ---------------------------------------------------------------------------

const CELL_W: usize = 64;
const CELL_H: usize = 26;

/// Renders the per-level feature frequency heatmap.
///
/// Rows are features sorted by total frequency across levels, highest
/// first (ties broken by feature index); columns are tree levels. Cell
/// shading is scaled per column to that column's maximum, so each level
/// shows its own usage profile even when absolute frequencies differ.
pub fn render_level_heatmap(
    frequency: &LevelFrequencyMatrix,
    feature_names: &[String],
    spec: &HeatmapSpec,
) -> String {
    let levels = frequency.n_levels();
    let nf = frequency.n_features();
    assert_eq!(feature_names.len(), nf, "one name per feature required");
    assert!(levels > 0 && nf > 0, "matrix must be non-empty");

    let mut order: Vec<usize> = (0..nf).collect();
    let totals: Vec<f64> = (0..nf)
        .map(|j| (0..levels).map(|d| frequency.get(d, j)).sum())
        .collect();
    order.sort_by(|&a, &b| totals[b].total_cmp(&totals[a]).then(a.cmp(&b)));

    let col_max: Vec<f64> = (0..levels)
        .map(|d| (0..nf).map(|j| frequency.get(d, j)).fold(0.0, f64::max))
        .collect();

    let name_px = feature_names.iter().map(|n| n.chars().count()).max().unwrap_or(1) * 8;
    let left = 16 + name_px;
    let title_h = if spec.title.is_empty() { 0 } else { 26 };
    let top = title_h + 24;
    let width = left + levels * CELL_W + 16;
    let height = top + nf * CELL_H + 16;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"monospace\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>"
    );
    if !spec.title.is_empty() {
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"18\" font-size=\"14\" text-anchor=\"middle\" fill=\"#1a1a1a\">{}</text>",
            width / 2,
            xml_escape(&spec.title)
        );
    }
    for d in 0..levels {
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#1a1a1a\">level {d}</text>",
            left + d * CELL_W + CELL_W / 2,
            top - 8
        );
    }
    for (row, &j) in order.iter().enumerate() {
        let y = top + row * CELL_H;
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\" fill=\"#1a1a1a\">{}</text>",
            left - 8,
            y + CELL_H / 2 + 4,
            xml_escape(&feature_names[j])
        );
        for d in 0..levels {
            let x = left + d * CELL_W;
            let f = frequency.get(d, j);
            let t = if col_max[d] > 0.0 { f / col_max[d] } else { 0.0 };
            let _ = writeln!(
                svg,
                "  <rect x=\"{x}\" y=\"{y}\" width=\"{CELL_W}\" height=\"{CELL_H}\" \
                 fill=\"{}\" stroke=\"#cccccc\" stroke-width=\"1\" \
                 data-level=\"{d}\" data-feature=\"{j}\"/>",
                spec.ramp.color(t)
            );
            if spec.cell_labels == CellLabels::ShowPercent {
                let _ = writeln!(
                    svg,
                    "  <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" \
                     fill=\"{}\" data-level=\"{d}\" data-feature=\"{j}\">{}</text>",
                    x + CELL_W / 2,
                    y + CELL_H / 2 + 4,
                    label_color(t),
                    percent_label(f)
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

// ---------------------------------------------------------------------------
// representative tree
// ---------------------------------------------------------------------------

const MINI_CELL: usize = 12;
const LINE_H: usize = 13;
const BOX_PAD: usize = 4;
const SLOT_GAP: usize = 14;
const LEVEL_GAP: usize = 34;
const LEAF_W: usize = 26;
const LEAF_H: usize = 16;

/// Renders one complete depth-`depth` tree whose internal nodes show how
/// the ensemble splits at that breadth-first position.
///
/// Every internal slot appears, even when no tree ever splits there (its
/// mini-heatmap is then uniformly blank). Used features are listed under
/// the heatmap with their percentage and the observed threshold range,
/// collapsed to a single value when the range is degenerate. Leaf slots
/// close the silhouette at the bottom.
pub fn render_representative_tree(
    node_frequency: &NodeFrequencyMatrix,
    ranges: &ThresholdRanges,
    depth: usize,
    feature_names: &[String],
    spec: &HeatmapSpec,
) -> String {
    let nf = node_frequency.n_features();
    assert_eq!(feature_names.len(), nf, "one name per feature required");
    assert!(depth >= 1, "depth must be at least 1");
    let internal = (1usize << depth) - 1;
    assert_eq!(
        node_frequency.n_nodes(),
        internal,
        "node-frequency rows must match the depth"
    );

    let used: Vec<Vec<usize>> = (0..internal)
        .map(|t| (0..nf).filter(|&j| node_frequency.get(t, j) > 0.0).collect())
        .collect();
    let max_used = used.iter().map(Vec::len).max().unwrap_or(0);

    // Uniform node box: id line, heatmap strip, then feature lines.
    let box_w = (nf * MINI_CELL).max(120) + 2 * BOX_PAD;
    let box_h = 2 * BOX_PAD + LINE_H + MINI_CELL + max_used * LINE_H;
    let slot_w = box_w + SLOT_GAP;
    let leaf_slots = 1usize << depth;

    let title_h = if spec.title.is_empty() { 0 } else { 26 };
    let top = title_h + 12;
    let width = 16 + leaf_slots * slot_w + 16;
    let height = top + depth * (box_h + LEVEL_GAP) + LEAF_H + 12;

    let center_x = |level: usize, slot: usize| -> usize {
        let slots = 1usize << level;
        let span = leaf_slots * slot_w;
        16 + span * slot / slots + span / (2 * slots)
    };
    let node_y = |level: usize| top + level * (box_h + LEVEL_GAP);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"monospace\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>"
    );
    if !spec.title.is_empty() {
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"18\" font-size=\"14\" text-anchor=\"middle\" fill=\"#1a1a1a\">{}</text>",
            width / 2,
            xml_escape(&spec.title)
        );
    }

    // Edges first so nodes draw over them.
    for t in 0..internal {
        let level = (usize::BITS - 1 - (t + 1).leading_zeros()) as usize;
        let slot = t + 1 - (1 << level);
        let x0 = center_x(level, slot);
        let y0 = node_y(level) + box_h;
        for (child_side, child) in [(0, 2 * t + 1), (1, 2 * t + 2)] {
            let child_level = level + 1;
            let child_slot = 2 * slot + child_side;
            let x1 = center_x(child_level, child_slot);
            let y1 = node_y(child_level);
            let _ = writeln!(
                svg,
                "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y1}\" \
                 stroke=\"#999999\" stroke-width=\"1\" data-edge=\"{t}-{child}\"/>"
            );
        }
    }

    // Internal nodes: id, mini-heatmap scaled to the row maximum, and one
    // line per used feature.
    for t in 0..internal {
        let level = (usize::BITS - 1 - (t + 1).leading_zeros()) as usize;
        let slot = t + 1 - (1 << level);
        let cx = center_x(level, slot);
        let x = cx - box_w / 2;
        let y = node_y(level);
        let _ = writeln!(
            svg,
            "  <rect x=\"{x}\" y=\"{y}\" width=\"{box_w}\" height=\"{box_h}\" \
             fill=\"#ffffff\" stroke=\"#555555\" stroke-width=\"1\" data-node=\"{t}\"/>"
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#555555\">node {t}</text>",
            cx,
            y + BOX_PAD + 9
        );
        let row_max = (0..nf)
            .map(|j| node_frequency.get(t, j))
            .fold(0.0, f64::max);
        let strip_x = cx - (nf * MINI_CELL) / 2;
        let strip_y = y + BOX_PAD + LINE_H;
        for j in 0..nf {
            let f = node_frequency.get(t, j);
            let rel = if row_max > 0.0 { f / row_max } else { 0.0 };
            let _ = writeln!(
                svg,
                "  <rect x=\"{}\" y=\"{strip_y}\" width=\"{MINI_CELL}\" height=\"{MINI_CELL}\" \
                 fill=\"{}\" stroke=\"#cccccc\" stroke-width=\"1\" data-node=\"{t}\" data-feature=\"{j}\"/>",
                strip_x + j * MINI_CELL,
                spec.ramp.color(rel)
            );
        }
        for (line, &j) in used[t].iter().enumerate() {
            let f = node_frequency.get(t, j);
            let range = match ranges.get(t, j) {
                Some((lo, hi)) if lo == hi => format!("{lo}"),
                Some((lo, hi)) => format!("[{lo}, {hi}]"),
                None => String::new(),
            };
            let text = if spec.cell_labels == CellLabels::ShowPercent {
                format!("{} {}% {}", feature_names[j], percent_label(f), range)
            } else {
                format!("{} {}", feature_names[j], range)
            };
            let _ = writeln!(
                svg,
                "  <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" \
                 fill=\"#1a1a1a\" data-node=\"{t}\" data-feature=\"{j}\">{}</text>",
                cx,
                strip_y + MINI_CELL + (line + 1) * LINE_H - 3,
                xml_escape(text.trim_end())
            );
        }
    }

    // Leaf silhouette.
    for slot in 0..leaf_slots {
        let cx = center_x(depth, slot);
        let y = node_y(depth);
        let _ = writeln!(
            svg,
            "  <rect x=\"{}\" y=\"{y}\" width=\"{LEAF_W}\" height=\"{LEAF_H}\" \
             fill=\"#f2f2f2\" stroke=\"#999999\" stroke-width=\"1\" data-leaf=\"{}\"/>",
            cx - LEAF_W / 2,
            internal + slot
        );
    }

    svg.push_str("</svg>\n");
    svg
}
