//! Monte Carlo replication, percentile bands and the experiment suites.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::coupling::{
    replicate_seed, run_trajectory_with, DecisionTable, PeriodRecord, SimConfig, Trajectory,
};
use crate::error::{Error, Result};

/// Land endowments (ha) of the scenario suite.
pub const LAND_ENDOWMENTS: [f64; 3] = [0.5, 2.0, 5.5];
/// Land endowment used by the sweeps.
pub const SWEEP_LAND_HA: f64 = 2.0;
pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_SWEEP_REPLICATES: usize = 200;

pub const SCENARIO_HARVEST: &str = "harvest";
pub const SCENARIO_NO_HARVEST: &str = "no_harvest";
/// `param` key of summaries that are not part of a sweep.
pub const NO_PARAM: &str = "none";

/// Tracked per-year outcomes, in the order they are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    InfectionRate,
    LaborAvail,
    LaborFood,
    LaborVeg,
    Leisure,
    FertPerHa,
    VegStockT,
    QvKg,
    IncomeKfcfa,
    Utility,
}

impl Metric {
    pub const ALL: [Metric; 10] = [
        Metric::InfectionRate,
        Metric::LaborAvail,
        Metric::LaborFood,
        Metric::LaborVeg,
        Metric::Leisure,
        Metric::FertPerHa,
        Metric::VegStockT,
        Metric::QvKg,
        Metric::IncomeKfcfa,
        Metric::Utility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::InfectionRate => "infection_rate",
            Metric::LaborAvail => "labor_avail",
            Metric::LaborFood => "labor_food",
            Metric::LaborVeg => "labor_veg",
            Metric::Leisure => "leisure",
            Metric::FertPerHa => "fert_per_ha",
            Metric::VegStockT => "veg_stock_t",
            Metric::QvKg => "q_v_kg",
            Metric::IncomeKfcfa => "income_kfcfa",
            Metric::Utility => "utility",
        }
    }

    pub fn value(self, record: &PeriodRecord, members: u32) -> f64 {
        match self {
            Metric::InfectionRate => record.infected as f64 / members as f64,
            Metric::LaborAvail => record.a_l,
            Metric::LaborFood => record.labor_food,
            Metric::LaborVeg => record.labor_veg,
            Metric::Leisure => record.leisure,
            Metric::FertPerHa => record.fert_per_ha,
            Metric::VegStockT => record.veg_stock / 1000.0,
            Metric::QvKg => record.q_v,
            Metric::IncomeKfcfa => record.income_kfcfa,
            Metric::Utility => record.utility,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::UnknownOutcome {
                requested: s.to_string(),
                available: Metric::ALL.iter().map(|o| o.name().to_string()).collect(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub median: f64,
    pub p05: f64,
    pub p95: f64,
}

/// Median and 5-95% band of every outcome in every year, across replicates
/// of one experiment cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSummary {
    pub scenario: String,
    pub land_ha: f64,
    pub param: String,
    pub param_value: f64,
    pub replicates: usize,
    /// `bands[year - 1][outcome]`.
    pub bands: Vec<[Band; 10]>,
}

impl PanelSummary {
    pub fn years(&self) -> u32 {
        self.bands.len() as u32
    }

    pub fn band(&self, year: u32, outcome: Metric) -> Band {
        self.bands[year as usize - 1][outcome.index()]
    }

    pub fn medians(&self, outcome: Metric) -> Vec<f64> {
        self.bands.iter().map(|b| b[outcome.index()].median).collect()
    }
}

/// Percentile with linear interpolation between closest ranks: sorted
/// values `x`, `h = (n - 1) q`, result `x[floor h] + (h - floor h) *
/// (x[floor h + 1] - x[floor h])`.
pub fn aggregate_percentiles(values: &[f64], q: f64) -> Result<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

fn percentile_sorted(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParams(format!(
            "quantile must lie in [0, 1], got {q}"
        )));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        Ok(sorted[lo])
    } else {
        Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
    }
}

/// Runs `replicates` trajectories of `config`, replicate `r` seeded with
/// `replicate_seed(master_seed, r)`. Runs in parallel on the current rayon
/// pool; results are returned in replicate order.
pub fn run_replicates(config: &SimConfig, replicates: usize, master_seed: u64) -> Result<Vec<Trajectory>> {
    if replicates == 0 {
        return Err(Error::InvalidParams("replicates must be >= 1".into()));
    }
    config.validate()?;
    let table = DecisionTable::build(config)?;
    let results: Vec<Result<Trajectory>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(master_seed, r);
            run_trajectory_with(config, &table, seed).map_err(|e| Error::Replicate {
                index: r,
                seed,
                source: Box::new(e),
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Aggregates trajectories of one cell into a summary.
pub fn summarize(
    scenario: &str,
    param: &str,
    param_value: f64,
    trajectories: &[Trajectory],
) -> Result<PanelSummary> {
    let first = trajectories.first().ok_or(Error::EmptySample)?;
    let members = first.config.members;
    let years = first.records.len();
    let mut column = Vec::with_capacity(trajectories.len());
    let mut bands = Vec::with_capacity(years);
    for year in 0..years {
        let mut row = [Band {
            median: 0.0,
            p05: 0.0,
            p95: 0.0,
        }; 10];
        for outcome in Metric::ALL {
            column.clear();
            column.extend(
                trajectories
                    .iter()
                    .map(|t| outcome.value(&t.records[year], members)),
            );
            column.sort_by(f64::total_cmp);
            row[outcome.index()] = Band {
                median: percentile_sorted(&column, 0.5)?,
                p05: percentile_sorted(&column, 0.05)?,
                p95: percentile_sorted(&column, 0.95)?,
            };
        }
        bands.push(row);
    }
    Ok(PanelSummary {
        scenario: scenario.to_string(),
        land_ha: first.config.land_ha,
        param: param.to_string(),
        param_value,
        replicates: trajectories.len(),
        bands,
    })
}

pub fn scenario_name(config: &SimConfig) -> &'static str {
    if config.allow_harvest {
        SCENARIO_HARVEST
    } else {
        SCENARIO_NO_HARVEST
    }
}

/// Replicated runs of one configuration, summarized.
pub fn monte_carlo(config: &SimConfig, replicates: usize, master_seed: u64) -> Result<PanelSummary> {
    let runs = run_replicates(config, replicates, master_seed)?;
    summarize(scenario_name(config), NO_PARAM, 0.0, &runs)
}

/// The harvest-disabled counterpart of `config`: vegetation labor has no
/// marginal product and the household may not harvest.
pub fn without_harvest(config: &SimConfig) -> SimConfig {
    let mut c = *config;
    c.allow_harvest = false;
    c.hh.beta_v = 0.0;
    c
}

/// The six scenario cells: every land endowment with and without harvest.
/// All cells share `master_seed`, so replicate `r` of paired cells uses the
/// same random stream.
pub fn scenario_suite(base: &SimConfig, replicates: usize, master_seed: u64) -> Result<Vec<PanelSummary>> {
    let mut out = Vec::with_capacity(6);
    for land in LAND_ENDOWMENTS {
        let harvest = SimConfig {
            land_ha: land,
            allow_harvest: true,
            ..*base
        };
        out.push(monte_carlo(&harvest, replicates, master_seed)?);
        out.push(monte_carlo(&without_harvest(&harvest), replicates, master_seed)?);
    }
    Ok(out)
}

/// Parameters the sensitivity sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Rho,
    R,
    N0,
    PU,
    PH,
}

impl SweepParam {
    pub const ALL: [SweepParam; 5] = [
        SweepParam::Rho,
        SweepParam::R,
        SweepParam::N0,
        SweepParam::PU,
        SweepParam::PH,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Rho => "rho",
            SweepParam::R => "r",
            SweepParam::N0 => "n0",
            SweepParam::PU => "p_u",
            SweepParam::PH => "p_h",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParam::Rho => vec![0.0, 0.005, 0.01, 0.02],
            SweepParam::R => vec![0.025, 0.05, 0.1],
            SweepParam::N0 => vec![0.005, 0.01, 0.02],
            SweepParam::PU => vec![150.0, 300.0, 600.0],
            SweepParam::PH => vec![250.0, 500.0, 1000.0],
        }
    }

    /// Returns `config` with this parameter set to `value`. The household
    /// good price is the model's `p_g`.
    pub fn apply(self, config: &SimConfig, value: f64) -> SimConfig {
        let mut c = *config;
        match self {
            SweepParam::Rho => c.eco.rho = value,
            SweepParam::R => c.eco.r = value,
            SweepParam::N0 => c.eco.n0 = value,
            SweepParam::PU => c.prices.p_u = value,
            SweepParam::PH => c.prices.p_g = value,
        }
        c
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "unknown sweep parameter `{s}` (expected rho, r, n0, p_u or p_h)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub base: SimConfig,
    pub replicates: usize,
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParams("sweep needs at least one value".into()));
        }
        for (i, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("sweep value {v} is not finite")));
            }
            if self.values[..i].contains(v) {
                return Err(Error::InvalidParams(format!("sweep value {v} is repeated")));
            }
        }
        Ok(())
    }

    /// The configuration of one sweep cell: 2 ha, harvest enabled.
    pub fn cell(&self, value: f64) -> SimConfig {
        let base = SimConfig {
            land_ha: SWEEP_LAND_HA,
            allow_harvest: true,
            ..self.base
        };
        self.param.apply(&base, value)
    }
}

/// One summary per swept value.
pub fn sensitivity_sweep(spec: &SweepSpec) -> Result<Vec<PanelSummary>> {
    spec.validate()?;
    spec.values
        .iter()
        .map(|&v| {
            let cfg = spec.cell(v);
            let runs = run_replicates(&cfg, spec.replicates, spec.master_seed)?;
            summarize(SCENARIO_HARVEST, spec.param.name(), v, &runs)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfectionPoint {
    pub prevalence: f64,
    /// First-year fertilizer use, kg/ha.
    pub fert: Band,
}

/// First-year fertilizer use across starting prevalences (2 ha, harvest
/// enabled).
///
/// Only the first year is simulated: its draws come first in every
/// replicate's stream, so year-one results equal those of a full run.
pub fn infection_sweep(
    base: &SimConfig,
    grid: &[f64],
    replicates: usize,
    master_seed: u64,
) -> Result<Vec<InfectionPoint>> {
    grid.iter()
        .map(|&prevalence| {
            if !(0.0..=1.0).contains(&prevalence) {
                return Err(Error::InvalidParams(format!(
                    "prevalence {prevalence} outside [0, 1]"
                )));
            }
            let cfg = SimConfig {
                initial_prevalence: prevalence,
                land_ha: SWEEP_LAND_HA,
                allow_harvest: true,
                years: 1,
                ..*base
            };
            let summary = monte_carlo(&cfg, replicates, master_seed)?;
            Ok(InfectionPoint {
                prevalence,
                fert: summary.band(1, Metric::FertPerHa),
            })
        })
        .collect()
}

/// Eleven evenly spaced prevalences from 0 to 1.
pub fn default_prevalence_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_examples() {
        assert_eq!(aggregate_percentiles(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
        assert_eq!(aggregate_percentiles(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.5);
        let hundred: Vec<f64> = (0..100).map(f64::from).collect();
        let p95 = aggregate_percentiles(&hundred, 0.95).unwrap();
        assert!((p95 - 94.05).abs() < 1e-12, "{p95}");
        assert!(matches!(aggregate_percentiles(&[], 0.5), Err(Error::EmptySample)));
    }

    #[test]
    fn single_replicate_band_collapses() {
        let cfg = SimConfig {
            years: 3,
            ..SimConfig::default()
        };
        let s = monte_carlo(&cfg, 1, 4).unwrap();
        for year in 1..=3 {
            for o in Metric::ALL {
                let b = s.band(year, o);
                assert_eq!(b.median, b.p05);
                assert_eq!(b.median, b.p95);
            }
        }
    }

    #[test]
    fn cured_disease_free_household_stays_clean() {
        let cfg = SimConfig {
            years: 4,
            cure_prob: 1.0,
            initial_prevalence: 0.0,
            ..SimConfig::default()
        };
        let s = monte_carlo(&cfg, 20, 1).unwrap();
        assert!(s.medians(Metric::InfectionRate).iter().all(|&m| m == 0.0));
    }

    #[test]
    fn outcome_names_round_trip() {
        for o in Metric::ALL {
            assert_eq!(o.name().parse::<Metric>().unwrap(), o);
        }
        assert!(matches!(
            "nope".parse::<Metric>(),
            Err(Error::UnknownOutcome { .. })
        ));
        for p in SweepParam::ALL {
            assert_eq!(p.name().parse::<SweepParam>().unwrap(), p);
        }
    }

    #[test]
    fn single_value_sweep_equals_monte_carlo() {
        let base = SimConfig {
            years: 3,
            ..SimConfig::default()
        };
        let spec = SweepSpec {
            param: SweepParam::R,
            values: vec![base.eco.r],
            base,
            replicates: 8,
            master_seed: 5,
        };
        let swept = sensitivity_sweep(&spec).unwrap();
        let plain = monte_carlo(&spec.cell(base.eco.r), 8, 5).unwrap();
        assert_eq!(swept[0].bands, plain.bands);
    }

    #[test]
    fn repeated_sweep_values_rejected() {
        let spec = SweepSpec {
            param: SweepParam::Rho,
            values: vec![0.01, 0.01],
            base: SimConfig::default(),
            replicates: 1,
            master_seed: 0,
        };
        assert!(sensitivity_sweep(&spec).is_err());
    }
}
