//! Standalone SVG figures from a summary CSV: one panel per outcome, each
//! series drawn as a median polyline over a translucent 5-95% band.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::{Metric, NO_PARAM};
use crate::output::{read_summary_csv, SummaryRow};

pub const DEFAULT_PANELS: [Metric; 5] = [
    Metric::VegStockT,
    Metric::InfectionRate,
    Metric::LaborAvail,
    Metric::FertPerHa,
    Metric::IncomeKfcfa,
];

const PALETTE: [&str; 8] = [
    "#1b6ca8", "#d1495b", "#2e8b57", "#edae49", "#6a4c93", "#00798c", "#8d6a9f", "#3d3d3d",
];

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 250.0;
const COLS: usize = 3;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;

/// Which summary columns distinguish one series from another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupKey {
    /// Scenario, land and swept value together.
    #[default]
    Cell,
    Scenario,
    Land,
    Param,
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cell" => Ok(GroupKey::Cell),
            "scenario" => Ok(GroupKey::Scenario),
            "land" => Ok(GroupKey::Land),
            "param" => Ok(GroupKey::Param),
            _ => Err(Error::InvalidParams(format!(
                "unknown grouping `{s}` (expected cell, scenario, land or param)"
            ))),
        }
    }
}

impl GroupKey {
    fn label(self, row: &SummaryRow) -> String {
        let param = || {
            if row.param == NO_PARAM {
                String::new()
            } else {
                format!("{}={}", row.param, row.param_value)
            }
        };
        match self {
            GroupKey::Cell => {
                let mut s = format!("{} {} ha", row.scenario, row.land_ha);
                let p = param();
                if !p.is_empty() {
                    s.push(' ');
                    s.push_str(&p);
                }
                s
            }
            GroupKey::Scenario => row.scenario.clone(),
            GroupKey::Land => format!("{} ha", row.land_ha),
            GroupKey::Param => param(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub summary: PathBuf,
    pub panels: Vec<Metric>,
    pub group_by: GroupKey,
    pub out: PathBuf,
}

/// Reads `spec.summary` and renders the figure. Writing to `spec.out` is
/// left to the caller.
pub fn emit_svg(spec: &FigureSpec) -> Result<String> {
    let text = std::fs::read_to_string(&spec.summary).map_err(|source| Error::File {
        path: spec.summary.clone(),
        source,
    })?;
    let rows = read_summary_csv(&text)?;
    render_svg(&rows, &spec.panels, spec.group_by)
}

#[derive(Default)]
struct Series {
    /// year -> (median, p05, p95)
    points: BTreeMap<u32, (f64, f64, f64)>,
    cell: Option<(String, u64, String, u64)>,
}

/// Renders already parsed summary rows.
pub fn render_svg(rows: &[SummaryRow], panels: &[Metric], group_by: GroupKey) -> Result<String> {
    if panels.is_empty() {
        return Err(Error::InvalidParams("figure needs at least one panel".into()));
    }
    let mut available: Vec<String> = rows.iter().map(|r| r.outcome.clone()).collect();
    available.sort();
    available.dedup();
    for p in panels {
        if !available.iter().any(|a| a == p.name()) {
            return Err(Error::UnknownOutcome {
                requested: p.name().to_string(),
                available,
            });
        }
    }

    // panel -> series label -> points, with legend order by first appearance
    let mut legend: Vec<String> = Vec::new();
    let mut data: Vec<BTreeMap<String, Series>> = panels.iter().map(|_| BTreeMap::new()).collect();
    for row in rows {
        let Some(idx) = panels.iter().position(|p| p.name() == row.outcome) else {
            continue;
        };
        let label = group_by.label(row);
        if !legend.contains(&label) {
            legend.push(label.clone());
        }
        let series = data[idx].entry(label.clone()).or_default();
        let cell = (
            row.scenario.clone(),
            row.land_ha.to_bits(),
            row.param.clone(),
            row.param_value.to_bits(),
        );
        match &series.cell {
            Some(c) if *c != cell => {
                return Err(Error::InvalidParams(format!(
                    "grouping merges several cells into series `{label}`; use a finer grouping"
                )))
            }
            _ => series.cell = Some(cell),
        }
        series.points.insert(row.year, (row.median, row.p05, row.p95));
    }

    let rows_of_panels = panels.len().div_ceil(COLS);
    let legend_h = 24.0 + 18.0 * legend.len() as f64;
    let width = PANEL_W * COLS.min(panels.len()) as f64;
    let height = PANEL_H * rows_of_panels as f64 + legend_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    );

    for (i, (metric, series)) in panels.iter().zip(&data).enumerate() {
        let ox = PANEL_W * (i % COLS) as f64;
        let oy = PANEL_H * (i / COLS) as f64;
        let letter = (b'A' + i as u8) as char;
        draw_panel(&mut svg, ox, oy, letter, *metric, series, &legend);
    }

    let ly = PANEL_H * rows_of_panels as f64 + 16.0;
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (k, label) in legend.iter().enumerate() {
        let y = ly + 18.0 * k as f64;
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="14" height="10" fill="{color}" fill-opacity="0.25" stroke="{color}"/>"#,
            MARGIN_L,
            y - 9.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}">{}</text>"#,
            MARGIN_L + 20.0,
            escape(label)
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn draw_panel(
    svg: &mut String,
    ox: f64,
    oy: f64,
    letter: char,
    metric: Metric,
    series: &BTreeMap<String, Series>,
    legend: &[String],
) {
    let years: Vec<u32> = series.values().flat_map(|s| s.points.keys().copied()).collect();
    let (y_first, y_last) = (
        years.iter().copied().min().unwrap_or(1),
        years.iter().copied().max().unwrap_or(1),
    );
    let values = series
        .values()
        .flat_map(|s| s.points.values().flat_map(|&(m, lo, hi)| [m, lo, hi]));
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        lo -= pad;
        hi += pad;
    }
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let (left, top) = (ox + MARGIN_L, oy + MARGIN_T);
    let x_of = |year: u32| {
        if y_last == y_first {
            left + plot_w / 2.0
        } else {
            left + plot_w * (year - y_first) as f64 / (y_last - y_first) as f64
        }
    };
    let y_of = |v: f64| top + plot_h * (1.0 - (v - lo) / (hi - lo));

    let _ = writeln!(svg, r#"<g class="panel" id="panel-{letter}">"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="13" font-weight="bold">{letter}  {}</text>"#,
        ox + 8.0,
        oy + 18.0,
        metric.name()
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444444"/>"##
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{y}" x2="{left}" y2="{y}" stroke="#444444"/>"##,
            left - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + 4.0,
            tick_label(v)
        );
    }
    let step = ((y_last - y_first) / 5).max(1);
    let mut year = y_first;
    while year <= y_last {
        let x = x_of(year);
        let _ = writeln!(
            svg,
            r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#444444"/>"##,
            top + plot_h,
            top + plot_h + 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" text-anchor="middle">{year}</text>"#,
            top + plot_h + 16.0
        );
        year += step;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">year</text>"#,
        left + plot_w / 2.0,
        top + plot_h + 32.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">{}</text>"#,
        ox + 14.0,
        top + plot_h / 2.0,
        ox + 14.0,
        top + plot_h / 2.0,
        metric.name()
    );

    for (label, s) in series {
        let k = legend.iter().position(|l| l == label).unwrap_or(0);
        let color = PALETTE[k % PALETTE.len()];
        let upper: Vec<String> = s
            .points
            .iter()
            .map(|(&yr, &(_, _, p95))| pt(x_of(yr), y_of(p95)))
            .collect();
        let lower: Vec<String> = s
            .points
            .iter()
            .rev()
            .map(|(&yr, &(_, p05, _))| pt(x_of(yr), y_of(p05)))
            .collect();
        let median: Vec<String> = s
            .points
            .iter()
            .map(|(&yr, &(m, _, _))| pt(x_of(yr), y_of(m)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon class="band" points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<polyline class="median" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            median.join(" ")
        );
    }
    let _ = writeln!(svg, "</g>");
}

fn pt(x: f64, y: f64) -> String {
    format!("{x:.2},{y:.2}")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".to_string()
        } else {
            s.to_string()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scenario: &str, year: u32, outcome: &str, m: f64) -> SummaryRow {
        SummaryRow {
            scenario: scenario.into(),
            land_ha: 2.0,
            param: NO_PARAM.into(),
            param_value: 0.0,
            year,
            outcome: outcome.into(),
            median: m,
            p05: m,
            p95: m,
            replicates: 1,
        }
    }

    #[test]
    fn missing_outcome_lists_available() {
        let rows = vec![row("harvest", 1, "utility", 1.0)];
        match render_svg(&rows, &[Metric::FertPerHa], GroupKey::Cell) {
            Err(Error::UnknownOutcome { requested, available }) => {
                assert_eq!(requested, "fert_per_ha");
                assert_eq!(available, vec!["utility".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn two_scenarios_give_two_series_per_panel() {
        let mut rows = Vec::new();
        for s in ["harvest", "no_harvest"] {
            for y in 1..=4 {
                rows.push(row(s, y, "utility", y as f64));
                rows.push(row(s, y, "leisure", 3.0));
            }
        }
        let svg = render_svg(&rows, &[Metric::Utility, Metric::Leisure], GroupKey::Scenario).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert_eq!(svg.matches("<polygon").count(), 4);
        assert!(svg.contains("no_harvest"));
    }

    #[test]
    fn coarse_grouping_that_merges_cells_is_rejected() {
        let mut rows = vec![row("harvest", 1, "utility", 1.0)];
        let mut other = row("harvest", 1, "utility", 2.0);
        other.land_ha = 5.5;
        rows.push(other);
        assert!(render_svg(&rows, &[Metric::Utility], GroupKey::Scenario).is_err());
    }

    #[test]
    fn tick_labels() {
        assert_eq!(tick_label(0.0), "0");
        assert_eq!(tick_label(2.5), "2.5");
        assert_eq!(tick_label(28.9065), "28.9065");
        assert_eq!(tick_label(0.0001), "1.00e-4");
    }
}
