//! Annual loop joining the household and the disease ecology.
//!
//! Each year: realize infections from the current human prevalence (cures
//! from the second year on), let the household solve its static problem
//! given the resulting labor, then push the ecology forward a year with the
//! household's fertilizer runoff and vegetation harvest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ecology::{apply_runoff, integrate_period, EcoParams, EcoState, DAYS_PER_YEAR};
use crate::error::{Error, Result};
use crate::household::{
    labor_availability, solve_household, Decision, Endowment, HouseholdParams, Outcome, Prices,
};

/// Who draws a fresh infection at the start of a period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DrawScope {
    /// Every member draws Bernoulli(prevalence), whatever their prior status.
    #[default]
    AllMembers,
    /// Members infected at the end of the previous period (the rounded
    /// infected count of the ecology state) stay infected; only the others
    /// draw. The first period has no history, so everyone draws.
    SusceptibleOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub years: u32,
    pub members: u32,
    pub land_ha: f64,
    pub initial_prevalence: f64,
    pub cure_prob: f64,
    pub allow_harvest: bool,
    pub draw_scope: DrawScope,
    pub eco: EcoParams,
    pub hh: HouseholdParams,
    pub prices: Prices,
    /// Starting ecology. Human fields are replaced from `members` and
    /// `initial_prevalence` when a trajectory starts.
    pub initial: EcoState,
    pub dt: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            years: 20,
            members: 10,
            land_ha: 2.0,
            initial_prevalence: 0.25,
            cure_prob: 0.25,
            allow_harvest: true,
            draw_scope: DrawScope::AllMembers,
            eco: EcoParams::default(),
            hh: HouseholdParams::default(),
            prices: Prices::default(),
            initial: EcoState::baseline(),
            dt: crate::ecology::DEFAULT_DT,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.years == 0 {
            return Err(Error::InvalidParams("years must be >= 1".into()));
        }
        if self.members == 0 {
            return Err(Error::InvalidParams("members must be >= 1".into()));
        }
        for (name, v) in [
            ("initial_prevalence", self.initial_prevalence),
            ("cure_prob", self.cure_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParams(format!("dt must be > 0, got {}", self.dt)));
        }
        self.eco.validate()?;
        self.hh.validate()?;
        self.prices.validate()?;
        self.endowment(0).validate()?;
        self.initial.validate()
    }

    pub fn endowment(&self, infected: u32) -> Endowment {
        Endowment {
            land_ha: self.land_ha,
            members: self.members,
            infected,
        }
    }

    /// Starting ecology with the household's members split by the initial
    /// prevalence.
    pub fn initial_state(&self) -> EcoState {
        let members = self.members as f64;
        EcoState {
            s_humans: members * (1.0 - self.initial_prevalence),
            i_humans: members * self.initial_prevalence,
            ..self.initial
        }
    }
}

/// One simulated year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodRecord {
    pub year: u32,
    /// Infected members after cures.
    pub infected: u32,
    /// Available labor, person-days.
    pub a_l: f64,
    pub labor_food: f64,
    pub labor_veg: f64,
    pub leisure: f64,
    pub fert_kg: f64,
    pub fert_per_ha: f64,
    pub q_v: f64,
    /// Vegetation at the start of the period, after runoff (kg).
    pub veg_stock: f64,
    pub income_kfcfa: f64,
    pub utility: f64,
    /// Human prevalence of the ecology at the end of the period.
    pub prevalence_next: f64,
}

impl PeriodRecord {
    pub const FIELD_NAMES: [&'static str; 13] = [
        "year",
        "infected",
        "a_l",
        "labor_food",
        "labor_veg",
        "leisure",
        "fert_kg",
        "fert_per_ha",
        "q_v",
        "veg_stock",
        "income_kfcfa",
        "utility",
        "prevalence_next",
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: SimConfig,
    pub replicate_seed: u64,
    pub records: Vec<PeriodRecord>,
    pub final_state: EcoState,
    /// Total clamp events across all integrated years.
    pub clamps: u64,
}

/// Household optimum for each possible infected count.
///
/// Given the configuration, the household problem depends on the year only
/// through the number of infected members, so the `members + 1` solutions
/// can be computed once and shared by every replicate.
#[derive(Debug, Clone)]
pub struct DecisionTable {
    plans: Vec<(Decision, Outcome)>,
}

impl DecisionTable {
    pub fn build(config: &SimConfig) -> Result<Self> {
        let plans = (0..=config.members)
            .map(|infected| {
                solve_household(
                    &config.hh,
                    &config.prices,
                    &config.endowment(infected),
                    config.allow_harvest,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DecisionTable { plans })
    }

    pub fn get(&self, infected: u32) -> &(Decision, Outcome) {
        &self.plans[infected as usize]
    }
}

/// Number of successes in `trials` independent Bernoulli(`p`) draws.
fn bernoulli_count(trials: u32, p: f64, rng: &mut impl Rng) -> u32 {
    (0..trials).filter(|_| rng.random::<f64>() < p).count() as u32
}

/// Infections among `members`, each drawing Bernoulli(`prevalence`).
pub fn draw_infections(prevalence: f64, members: u32, rng: &mut impl Rng) -> u32 {
    bernoulli_count(members, prevalence, rng)
}

/// Cures among `infected`, each drawing Bernoulli(`cure_prob`).
pub fn draw_cures(infected: u32, cure_prob: f64, rng: &mut impl Rng) -> u32 {
    bernoulli_count(infected, cure_prob, rng)
}

/// Runs one annual period and returns its record and the end-of-year state.
pub fn run_period(
    state: &EcoState,
    config: &SimConfig,
    table: &DecisionTable,
    rng: &mut impl Rng,
    year: u32,
) -> Result<(PeriodRecord, EcoState, u64)> {
    run_period_inner(state, config, table, rng, year).map_err(|e| e.in_year(year))
}

fn run_period_inner(
    state: &EcoState,
    config: &SimConfig,
    table: &DecisionTable,
    rng: &mut impl Rng,
    year: u32,
) -> Result<(PeriodRecord, EcoState, u64)> {
    state.validate()?;
    let prevalence = state.prevalence().clamp(0.0, 1.0);
    let mut infected = match config.draw_scope {
        DrawScope::SusceptibleOnly if year >= 2 => {
            let carried = (state.i_humans.round() as u32).min(config.members);
            carried + draw_infections(prevalence, config.members - carried, rng)
        }
        _ => draw_infections(prevalence, config.members, rng),
    };
    if year >= 2 {
        infected -= draw_cures(infected, config.cure_prob, rng);
    }

    let (decision, outcome) = *table.get(infected);
    let harvest = if config.allow_harvest { outcome.q_v } else { 0.0 };

    let mut start = *state;
    start.s_humans = (config.members - infected) as f64;
    start.i_humans = infected as f64;
    let start = apply_runoff(&start, config.eco.rho, decision.fert_kg);
    let end = integrate_period(&start, &config.eco, harvest, DAYS_PER_YEAR, config.dt)?;

    let record = PeriodRecord {
        year,
        infected,
        a_l: labor_availability(config.members, infected, config.hh.tau),
        labor_food: decision.labor_food,
        labor_veg: decision.labor_veg,
        leisure: decision.leisure,
        fert_kg: decision.fert_kg,
        fert_per_ha: decision.fert_kg / config.land_ha,
        q_v: harvest,
        veg_stock: start.n_veg,
        income_kfcfa: outcome.income / 1000.0,
        utility: outcome.utility,
        prevalence_next: end.state.prevalence(),
    };
    Ok((record, end.state, end.clamps))
}

/// Simulates `config.years` periods with its own random stream seeded from
/// `replicate_seed`.
pub fn run_trajectory(config: &SimConfig, replicate_seed: u64) -> Result<Trajectory> {
    config.validate()?;
    let table = DecisionTable::build(config)?;
    run_trajectory_with(config, &table, replicate_seed)
}

/// As [`run_trajectory`], reusing a prebuilt decision table.
pub fn run_trajectory_with(
    config: &SimConfig,
    table: &DecisionTable,
    replicate_seed: u64,
) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed);
    let mut state = config.initial_state();
    let mut records = Vec::with_capacity(config.years as usize);
    let mut clamps = 0;
    for year in 1..=config.years {
        let (record, next, c) = run_period(&state, config, table, &mut rng, year)?;
        records.push(record);
        state = next;
        clamps += c;
    }
    Ok(Trajectory {
        config: *config,
        replicate_seed,
        records,
        final_state: state,
        clamps,
    })
}

/// Seed of replicate `index` under `master_seed`.
///
/// The pair is mixed with two rounds of the SplitMix64 finalizer, so
/// replicate streams depend only on `(master_seed, index)` and never on the
/// order in which replicates run. Each replicate then drives a ChaCha8
/// generator seeded from this value.
pub fn replicate_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> SimConfig {
        SimConfig::default()
    }

    #[test]
    fn degenerate_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(draw_infections(0.0, 10, &mut rng), 0);
        assert_eq!(draw_infections(1.0, 10, &mut rng), 10);
        assert_eq!(draw_cures(4, 0.0, &mut rng), 0);
        assert_eq!(draw_cures(4, 1.0, &mut rng), 4);
    }

    #[test]
    fn draw_means_match_binomial() {
        let trials = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let total: u64 = (0..trials)
            .map(|_| draw_infections(0.25, 10, &mut rng) as u64)
            .sum();
        let mean = total as f64 / trials as f64;
        let sigma = (10.0f64 * 0.25 * 0.75 / trials as f64).sqrt();
        assert!((mean - 2.5).abs() < 3.0 * sigma, "{mean}");

        let total: u64 = (0..trials).map(|_| draw_cures(4, 0.25, &mut rng) as u64).sum();
        let mean = total as f64 / trials as f64;
        let sigma = (4.0f64 * 0.25 * 0.75 / trials as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn disease_free_no_harvest_period() {
        let cfg = SimConfig {
            initial_prevalence: 0.0,
            allow_harvest: false,
            eco: EcoParams {
                rho: 0.0,
                ..EcoParams::default()
            },
            ..config()
        };
        let table = DecisionTable::build(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let start = cfg.initial_state();
        let (rec, end, _) = run_period(&start, &cfg, &table, &mut rng, 1).unwrap();
        assert_eq!(rec.infected, 0);
        assert_eq!(rec.a_l, 3650.0);
        assert_eq!(rec.q_v, 0.0);
        let pure = integrate_period(&start, &cfg.eco, 0.0, DAYS_PER_YEAR, cfg.dt).unwrap();
        assert_eq!(end.n_veg, pure.state.n_veg);
    }

    #[test]
    fn certain_cure_clears_infection_after_first_year() {
        let cfg = SimConfig {
            cure_prob: 1.0,
            years: 6,
            ..config()
        };
        let traj = run_trajectory(&cfg, 5).unwrap();
        assert!(traj.records.iter().skip(1).all(|r| r.infected == 0));
    }

    #[test]
    fn replay_is_bit_identical() {
        let cfg = SimConfig { years: 5, ..config() };
        let a = run_trajectory(&cfg, replicate_seed(9, 2)).unwrap();
        let b = run_trajectory(&cfg, replicate_seed(9, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trajectory_shape_and_accounting() {
        let cfg = SimConfig { years: 8, ..config() };
        let traj = run_trajectory(&cfg, 77).unwrap();
        assert_eq!(traj.records.len(), 8);
        for (i, r) in traj.records.iter().enumerate() {
            assert_eq!(r.year, i as u32 + 1);
            assert!((0.0..=1.0).contains(&r.prevalence_next));
            let expect = 365.0 * ((10 - r.infected) as f64 + cfg.hh.tau * r.infected as f64);
            assert_eq!(r.a_l, expect);
        }
        let single = run_trajectory(&SimConfig { years: 1, ..cfg }, 77).unwrap();
        assert_eq!(single.records.len(), 1);
    }

    #[test]
    fn no_harvest_trajectory_never_harvests() {
        let cfg = SimConfig {
            allow_harvest: false,
            years: 6,
            ..config()
        };
        let traj = run_trajectory(&cfg, 4).unwrap();
        assert!(traj.records.iter().all(|r| r.q_v == 0.0 && r.labor_veg == 0.0));
    }

    #[test]
    fn susceptible_only_scope_runs() {
        let cfg = SimConfig {
            draw_scope: DrawScope::SusceptibleOnly,
            years: 4,
            ..config()
        };
        let traj = run_trajectory(&cfg, 8).unwrap();
        assert_eq!(traj.records.len(), 4);
    }

    #[test]
    fn replicate_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|r| replicate_seed(7, r)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(replicate_seed(7, 0), replicate_seed(8, 0));
    }
}
