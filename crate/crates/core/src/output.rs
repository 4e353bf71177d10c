//! CSV files: the percentile summary, per-replicate records, the infection
//! sweep table and steady-state samples.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! inputs give byte-identical files and reading a file back recovers the
//! exact values.

use std::cmp::Ordering;
use std::io::Write;

use crate::coupling::{PeriodRecord, Trajectory};
use crate::ecology::{SteadyStateReport, FIELD_NAMES};
use crate::error::{Error, Result};
use crate::experiments::{InfectionPoint, Metric, PanelSummary};

pub const SUMMARY_HEADER: [&str; 10] = [
    "scenario",
    "land_ha",
    "param",
    "param_value",
    "year",
    "outcome",
    "median",
    "p05",
    "p95",
    "replicates",
];

/// One parsed row of a summary CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub land_ha: f64,
    pub param: String,
    pub param_value: f64,
    pub year: u32,
    pub outcome: String,
    pub median: f64,
    pub p05: f64,
    pub p95: f64,
    pub replicates: usize,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn finish(writer: csv::Writer<Vec<u8>>, sink: &mut impl Write) -> Result<usize> {
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    sink.write_all(&bytes)?;
    sink.flush()?;
    Ok(bytes.len())
}

/// Writes every summary cell as one row per (year, outcome), sorted by
/// scenario, land, parameter value, year and outcome name. Returns the
/// number of bytes written.
pub fn write_summary_csv(summaries: &[PanelSummary], sink: &mut impl Write) -> Result<usize> {
    let mut rows: Vec<(&PanelSummary, u32, Metric)> = Vec::new();
    for s in summaries {
        for year in 1..=s.years() {
            for m in Metric::ALL {
                rows.push((s, year, m));
            }
        }
    }
    rows.sort_by(|a, b| {
        a.0.scenario
            .cmp(&b.0.scenario)
            .then(a.0.land_ha.total_cmp(&b.0.land_ha))
            .then(a.0.param_value.total_cmp(&b.0.param_value))
            .then(a.1.cmp(&b.1))
            .then(a.2.name().cmp(b.2.name()))
            .then(a.0.param.cmp(&b.0.param))
    });

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER).map_err(csv_error)?;
    for (s, year, m) in rows {
        let band = s.band(year, m);
        w.write_record([
            s.scenario.clone(),
            num(s.land_ha),
            s.param.clone(),
            num(s.param_value),
            year.to_string(),
            m.name().to_string(),
            num(band.median),
            num(band.p05),
            num(band.p95),
            s.replicates.to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish(w, sink)
}

/// Parses a summary CSV written by [`write_summary_csv`].
pub fn read_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let bad = |message: String| Error::SummaryFormat { line, message };
        let record = record.map_err(|e| bad(e.to_string()))?;
        if i == 0 {
            if record.iter().ne(SUMMARY_HEADER) {
                return Err(bad(format!("expected header `{}`", SUMMARY_HEADER.join(","))));
            }
            continue;
        }
        if record.len() != SUMMARY_HEADER.len() {
            return Err(bad(format!(
                "expected {} fields, found {}",
                SUMMARY_HEADER.len(),
                record.len()
            )));
        }
        let real = |k: usize| {
            record[k]
                .parse::<f64>()
                .map_err(|_| bad(format!("{} `{}` is not a number", SUMMARY_HEADER[k], &record[k])))
        };
        rows.push(SummaryRow {
            scenario: record[0].to_string(),
            land_ha: real(1)?,
            param: record[2].to_string(),
            param_value: real(3)?,
            year: record[4]
                .parse()
                .map_err(|_| bad(format!("year `{}` is not an integer", &record[4])))?,
            outcome: record[5].to_string(),
            median: real(6)?,
            p05: real(7)?,
            p95: real(8)?,
            replicates: record[9]
                .parse()
                .map_err(|_| bad(format!("replicates `{}` is not an integer", &record[9])))?,
        });
    }
    if rows.is_empty() && text.trim().is_empty() {
        return Err(Error::SummaryFormat {
            line: 1,
            message: "file is empty".into(),
        });
    }
    Ok(rows)
}

fn record_fields(r: &PeriodRecord) -> [String; 13] {
    [
        r.year.to_string(),
        r.infected.to_string(),
        num(r.a_l),
        num(r.labor_food),
        num(r.labor_veg),
        num(r.leisure),
        num(r.fert_kg),
        num(r.fert_per_ha),
        num(r.q_v),
        num(r.veg_stock),
        num(r.income_kfcfa),
        num(r.utility),
        num(r.prevalence_next),
    ]
}

/// Writes `replicate,year,...` rows for every period of every trajectory;
/// replicates are numbered by position.
pub fn write_replicates_csv(trajectories: &[Trajectory], sink: &mut impl Write) -> Result<usize> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("replicate").chain(PeriodRecord::FIELD_NAMES);
    w.write_record(header).map_err(csv_error)?;
    for (i, t) in trajectories.iter().enumerate() {
        for r in &t.records {
            let fields = record_fields(r);
            w.write_record(std::iter::once(i.to_string()).chain(fields))
                .map_err(csv_error)?;
        }
    }
    finish(w, sink)
}

pub fn write_infection_sweep_csv(
    points: &[InfectionPoint],
    replicates: usize,
    sink: &mut impl Write,
) -> Result<usize> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["prevalence", "median", "p05", "p95", "replicates"])
        .map_err(csv_error)?;
    for p in points {
        w.write_record([
            num(p.prevalence),
            num(p.fert.median),
            num(p.fert.p05),
            num(p.fert.p95),
            replicates.to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish(w, sink)
}

/// Samples of a steady-state run: `day` then the seven populations.
pub fn write_steady_state_csv(report: &SteadyStateReport, sink: &mut impl Write) -> Result<usize> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(std::iter::once("day").chain(FIELD_NAMES))
        .map_err(csv_error)?;
    for (day, state) in &report.samples {
        let fields = state.to_array().map(num);
        w.write_record(std::iter::once(num(*day)).chain(fields))
            .map_err(csv_error)?;
    }
    finish(w, sink)
}

/// Ordering used for summary rows, exposed for readers that re-sort.
pub fn compare_rows(a: &SummaryRow, b: &SummaryRow) -> Ordering {
    a.scenario
        .cmp(&b.scenario)
        .then(a.land_ha.total_cmp(&b.land_ha))
        .then(a.param_value.total_cmp(&b.param_value))
        .then(a.year.cmp(&b.year))
        .then(a.outcome.cmp(&b.outcome))
        .then(a.param.cmp(&b.param))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Band;

    fn summary(scenario: &str, land: f64, years: usize, replicates: usize) -> PanelSummary {
        let band = Band {
            median: 0.1,
            p05: 1.0 / 3.0,
            p95: 2.5e-9,
        };
        PanelSummary {
            scenario: scenario.into(),
            land_ha: land,
            param: "none".into(),
            param_value: 0.0,
            replicates,
            bands: vec![[band; 10]; years],
        }
    }

    #[test]
    fn empty_list_is_header_only() {
        let mut out = Vec::new();
        let n = write_summary_csv(&[], &mut out).unwrap();
        assert_eq!(n, out.len());
        assert_eq!(
            String::from_utf8(out).unwrap(),
            format!("{}\n", SUMMARY_HEADER.join(","))
        );
    }

    #[test]
    fn one_cell_gives_ten_rows_per_year() {
        let mut out = Vec::new();
        write_summary_csv(&[summary("harvest", 2.0, 3, 1)], &mut out).unwrap();
        let rows = read_summary_csv(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(rows.len(), 30);
        assert_eq!(rows[0].p05, 1.0 / 3.0);
        assert_eq!(rows[0].p95, 2.5e-9);
        assert!(rows
            .windows(2)
            .all(|w| compare_rows(&w[0], &w[1]) == Ordering::Less));
    }

    #[test]
    fn rows_are_sorted_across_cells() {
        let cells = [
            summary("no_harvest", 0.5, 2, 4),
            summary("harvest", 5.5, 2, 4),
            summary("harvest", 0.5, 2, 4),
        ];
        let mut out = Vec::new();
        write_summary_csv(&cells, &mut out).unwrap();
        let rows = read_summary_csv(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(rows.len(), 60);
        assert_eq!((rows[0].scenario.as_str(), rows[0].land_ha), ("harvest", 0.5));
        assert_eq!(rows[0].outcome, "fert_per_ha");
        assert_eq!(rows[59].scenario, "no_harvest");
        assert!(rows
            .windows(2)
            .all(|w| compare_rows(&w[0], &w[1]) == Ordering::Less));
    }

    #[test]
    fn malformed_summary_reports_line() {
        let text = format!(
            "{}\nharvest,2,none,0,1,utility,x,1,1,5\n",
            SUMMARY_HEADER.join(",")
        );
        assert!(matches!(
            read_summary_csv(&text),
            Err(Error::SummaryFormat { line: 2, .. })
        ));
        assert!(matches!(
            read_summary_csv("a,b\n"),
            Err(Error::SummaryFormat { line: 1, .. })
        ));
    }
}
