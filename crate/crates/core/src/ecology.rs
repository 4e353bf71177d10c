//! Continuous-time vegetation / snail / larva / human transmission model.
//!
//! Seven populations evolve under daily rates: aquatic vegetation (snail
//! habitat), susceptible and infected snails, miracidia, cercariae and
//! susceptible and infected humans. A year of dynamics is a fixed-step RK4
//! integration of [`eco_rhs`]; fertilizer runoff is a discrete multiplicative
//! bump to vegetation applied before the year is integrated.

use crate::error::{Error, Result};

pub const DAYS_PER_YEAR: u32 = 365;
pub const DEFAULT_DT: f64 = 0.1;

/// Relative final-year drift below which a population counts as settled.
pub const STEADY_DRIFT_TOL: f64 = 0.01;
/// Human prevalence band accepted as the calibrated endemic level.
pub const STEADY_PREVALENCE_BAND: (f64, f64) = (0.22, 0.28);

pub const FIELD_NAMES: [&str; 7] = [
    "n_veg",
    "s_snails",
    "i_snails",
    "miracidia",
    "cercariae",
    "s_humans",
    "i_humans",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcoState {
    /// Vegetation mass (kg).
    pub n_veg: f64,
    pub s_snails: f64,
    pub i_snails: f64,
    pub miracidia: f64,
    pub cercariae: f64,
    pub s_humans: f64,
    pub i_humans: f64,
}

impl EcoState {
    /// Calibrated starting populations: vegetation at carrying capacity and
    /// the endemic snail/larva/human equilibrium for a ten-person household
    /// at 25% prevalence.
    ///
    /// The snail split is 12,300 susceptible / 200 infected. This is the
    /// assignment under which the calibrated rates hold every population
    /// near rest (dM = dP = 0, |dS2|, |dI2| < 0.1 per day).
    pub fn baseline() -> Self {
        EcoState {
            n_veg: 28_906.5,
            s_snails: 12_300.0,
            i_snails: 200.0,
            miracidia: 15_000.0,
            cercariae: 130_000.0,
            s_humans: 7.5,
            i_humans: 2.5,
        }
    }

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.n_veg,
            self.s_snails,
            self.i_snails,
            self.miracidia,
            self.cercariae,
            self.s_humans,
            self.i_humans,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        EcoState {
            n_veg: a[0],
            s_snails: a[1],
            i_snails: a[2],
            miracidia: a[3],
            cercariae: a[4],
            s_humans: a[5],
            i_humans: a[6],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in FIELD_NAMES.iter().zip(self.to_array()) {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidState { field, value });
            }
        }
        Ok(())
    }

    pub fn humans(&self) -> f64 {
        self.s_humans + self.i_humans
    }

    /// Infected share of humans; 0 for an empty human population.
    pub fn prevalence(&self) -> f64 {
        let total = self.humans();
        if total > 0.0 {
            self.i_humans / total
        } else {
            0.0
        }
    }
}

/// How the snail mortality responds to the vegetation stock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HabitatCoupling {
    /// Extra snail mortality `chi * max(K - N, 0)`: only vegetation missing
    /// below carrying capacity kills snails.
    #[default]
    Deficit,
    /// Extra mortality `chi * (K - N)` with sign, so vegetation above K
    /// lowers snail mortality (and can make it negative).
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcoParams {
    pub r: f64,
    pub cap_k: f64,
    pub rho: f64,
    pub n0: f64,
    pub lambda_cap2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub delta2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha1: f64,
    pub m0: f64,
    pub epsilon: f64,
    pub chi: f64,
    pub k_eggs: f64,
    pub eta: f64,
    pub coupling: HabitatCoupling,
}

impl Default for EcoParams {
    fn default() -> Self {
        EcoParams {
            r: 0.05,
            cap_k: 28_906.5,
            rho: 0.01,
            n0: 0.01,
            lambda_cap2: 100.0,
            beta1: 1.766e-8,
            beta2: 0.615,
            mu2: 0.008,
            mu3: 2.5,
            mu4: 0.004,
            delta2: 0.000_401_2,
            lambda1: 50.0,
            lambda2: 2.6,
            alpha1: 0.8e-8,
            m0: 1.0e6,
            epsilon: 0.3,
            chi: 0.028_42,
            k_eggs: 300.0,
            // Treatment rate that balances the calibrated transmission at
            // 25% prevalence.
            eta: 0.0068,
            coupling: HabitatCoupling::Deficit,
        }
    }
}

impl EcoParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("r", self.r),
            ("cap_k", self.cap_k),
            ("rho", self.rho),
            ("n0", self.n0),
            ("lambda_cap2", self.lambda_cap2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("mu2", self.mu2),
            ("mu3", self.mu3),
            ("mu4", self.mu4),
            ("delta2", self.delta2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("alpha1", self.alpha1),
            ("m0", self.m0),
            ("epsilon", self.epsilon),
            ("chi", self.chi),
            ("k_eggs", self.k_eggs),
            ("eta", self.eta),
        ];
        for (name, v) in named {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.cap_k <= 0.0 {
            return Err(Error::InvalidParams("cap_k must be > 0".into()));
        }
        if self.beta2 > 1.0 {
            return Err(Error::InvalidParams(format!(
                "beta2 must lie in [0, 1], got {}",
                self.beta2
            )));
        }
        Ok(())
    }

    /// Per-capita snail death rate `mu2 + chi * habitat_loss(N)`.
    pub fn snail_mortality(&self, n_veg: f64) -> f64 {
        let gap = self.cap_k - n_veg;
        let loss = match self.coupling {
            HabitatCoupling::Deficit => gap.max(0.0),
            HabitatCoupling::Signed => gap,
        };
        self.mu2 + self.chi * loss
    }
}

/// Instantaneous rates of change, one per [`EcoState`] field (units per day).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcoDerivative {
    pub d_n_veg: f64,
    pub d_s_snails: f64,
    pub d_i_snails: f64,
    pub d_miracidia: f64,
    pub d_cercariae: f64,
    pub d_s_humans: f64,
    pub d_i_humans: f64,
}

impl EcoDerivative {
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.d_n_veg,
            self.d_s_snails,
            self.d_i_snails,
            self.d_miracidia,
            self.d_cercariae,
            self.d_s_humans,
            self.d_i_humans,
        ]
    }
}

/// Right-hand side of the seven-population system.
pub fn eco_rhs(state: &EcoState, params: &EcoParams, daily_harvest: f64) -> Result<EcoDerivative> {
    state.validate()?;
    if !daily_harvest.is_finite() || daily_harvest < 0.0 {
        return Err(Error::InvalidParams(format!(
            "daily harvest must be >= 0, got {daily_harvest}"
        )));
    }
    let d = rates(&state.to_array(), params, daily_harvest);
    Ok(EcoDerivative {
        d_n_veg: d[0],
        d_s_snails: d[1],
        d_i_snails: d[2],
        d_miracidia: d[3],
        d_cercariae: d[4],
        d_s_humans: d[5],
        d_i_humans: d[6],
    })
}

/// Unchecked RHS on the array layout; RK4 stages may pass through slightly
/// negative intermediate values.
#[inline]
fn rates(y: &[f64; 7], p: &EcoParams, daily_harvest: f64) -> [f64; 7] {
    let [n, s2, i2, m, cerc, s1, i1] = *y;

    let snail_infection = p.beta2 * m * s2 / (p.m0 + p.epsilon * m * m);
    let snail_death = p.snail_mortality(n);
    let human_infection = p.beta1 * cerc * s1 / (1.0 + p.alpha1 * cerc);
    // A single signed flux keeps dS1 + dI1 exactly zero in floating point.
    let human_net = human_infection - p.eta * i1;

    [
        p.r * n * (1.0 - n / p.cap_k) + p.n0 - daily_harvest,
        p.lambda_cap2 - snail_infection - snail_death * s2,
        snail_infection - (snail_death + p.delta2) * i2,
        p.k_eggs * p.lambda1 * i1 - p.mu3 * m,
        p.lambda2 * i2 - p.mu4 * cerc,
        -human_net,
        human_net,
    ]
}

#[inline]
fn axpy(y: &[f64; 7], h: f64, k: &[f64; 7]) -> [f64; 7] {
    std::array::from_fn(|i| y[i] + h * k[i])
}

/// End state of one integrated period plus how often clamping fired.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrated {
    pub state: EcoState,
    /// Number of (step, field) pairs that were reset from negative to zero.
    pub clamps: u64,
}

fn step_count(days: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParams(format!("dt must be > 0, got {dt}")));
    }
    if !(days.is_finite() && days >= 0.0) {
        return Err(Error::InvalidParams(format!("days must be >= 0, got {days}")));
    }
    let steps = (days / dt).round();
    if (steps * dt - days).abs() > 1e-9 * days.max(1.0) {
        return Err(Error::InvalidParams(format!(
            "days ({days}) must be an integral multiple of dt ({dt})"
        )));
    }
    Ok(steps as usize)
}

/// Integrates `days` days with classical RK4 at step `dt`, harvesting
/// `annual_harvest / 365` kg of vegetation per day. Fields pushed below zero
/// by a step are clamped back to zero.
pub fn integrate_period(
    state: &EcoState,
    params: &EcoParams,
    annual_harvest: f64,
    days: u32,
    dt: f64,
) -> Result<Integrated> {
    let mut clamps = 0;
    let mut y = state.to_array();
    integrate_with(
        &mut y,
        params,
        annual_harvest,
        days as f64,
        dt,
        &mut clamps,
        |_, _| {},
    )?;
    Ok(Integrated {
        state: EcoState::from_array(y),
        clamps,
    })
}

fn integrate_with(
    y: &mut [f64; 7],
    params: &EcoParams,
    annual_harvest: f64,
    days: f64,
    dt: f64,
    clamps: &mut u64,
    mut observe: impl FnMut(usize, &[f64; 7]),
) -> Result<()> {
    EcoState::from_array(*y).validate()?;
    if !annual_harvest.is_finite() || annual_harvest < 0.0 {
        return Err(Error::InvalidParams(format!(
            "annual harvest must be >= 0, got {annual_harvest}"
        )));
    }
    let steps = step_count(days, dt)?;
    let harvest = annual_harvest / DAYS_PER_YEAR as f64;
    let half = 0.5 * dt;
    let sixth = dt / 6.0;

    for step in 1..=steps {
        let k1 = rates(y, params, harvest);
        let k2 = rates(&axpy(y, half, &k1), params, harvest);
        let k3 = rates(&axpy(y, half, &k2), params, harvest);
        let k4 = rates(&axpy(y, dt, &k3), params, harvest);
        for i in 0..7 {
            let next = y[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if !next.is_finite() {
                return Err(Error::IntegrationDiverged {
                    field: FIELD_NAMES[i],
                    step,
                    value: next,
                });
            }
            y[i] = if next < 0.0 {
                *clamps += 1;
                0.0
            } else {
                next
            };
        }
        observe(step, y);
    }
    Ok(())
}

/// Fertilizer runoff: vegetation grows by the fraction `rho * fert_kg`.
pub fn apply_runoff(state: &EcoState, rho: f64, fert_kg: f64) -> EcoState {
    debug_assert!(fert_kg >= 0.0);
    EcoState {
        n_veg: state.n_veg * (1.0 + rho * fert_kg),
        ..*state
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    /// `(day, state)` samples every [`SteadyStateReport::SAMPLE_EVERY_DAYS`]
    /// days, starting with day 0.
    pub samples: Vec<(f64, EcoState)>,
    /// Relative change of each population over the final simulated year,
    /// in [`FIELD_NAMES`] order.
    pub final_year_drift: [f64; 7],
    pub final_prevalence: f64,
    pub steady: bool,
    pub clamps: u64,
}

impl SteadyStateReport {
    pub const SAMPLE_EVERY_DAYS: u32 = 5;

    pub fn final_state(&self) -> EcoState {
        self.samples
            .last()
            .map(|s| s.1)
            .expect("report always holds day 0")
    }
}

/// Runs the ecology alone (no harvest, no runoff) for `years` years and
/// checks that every population has settled.
pub fn steady_state_run(
    params: &EcoParams,
    state0: &EcoState,
    years: u32,
    dt: f64,
) -> Result<SteadyStateReport> {
    if years == 0 {
        return Err(Error::InvalidParams(
            "steady-state run needs at least one year".into(),
        ));
    }
    let per_sample = step_count(SteadyStateReport::SAMPLE_EVERY_DAYS as f64, dt)?;
    let mut samples = vec![(0.0, *state0)];
    let mut year_start = state0.to_array();
    let mut y = state0.to_array();
    let mut clamps = 0;

    for year in 0..years {
        if year + 1 == years {
            year_start = y;
        }
        let offset = (year * DAYS_PER_YEAR) as f64;
        integrate_with(
            &mut y,
            params,
            0.0,
            DAYS_PER_YEAR as f64,
            dt,
            &mut clamps,
            |step, y| {
                if step % per_sample == 0 {
                    samples.push((offset + step as f64 * dt, EcoState::from_array(*y)));
                }
            },
        )?;
        if samples.last().map(|s| s.0) != Some(offset + DAYS_PER_YEAR as f64) {
            samples.push((offset + DAYS_PER_YEAR as f64, EcoState::from_array(y)));
        }
    }

    let final_year_drift: [f64; 7] = std::array::from_fn(|i| relative_change(year_start[i], y[i]));
    let final_prevalence = EcoState::from_array(y).prevalence();
    let (lo, hi) = STEADY_PREVALENCE_BAND;
    let steady =
        final_year_drift.iter().all(|d| *d < STEADY_DRIFT_TOL) && (lo..=hi).contains(&final_prevalence);

    Ok(SteadyStateReport {
        samples,
        final_year_drift,
        final_prevalence,
        steady,
        clamps,
    })
}

fn relative_change(from: f64, to: f64) -> f64 {
    if from == to {
        0.0
    } else {
        (to - from).abs() / from.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exchanged_snail_state() -> EcoState {
        // Susceptible and infected snail counts exchanged relative to the baseline.
        EcoState {
            s_snails: 200.0,
            i_snails: 12_300.0,
            ..EcoState::baseline()
        }
    }

    #[test]
    fn rhs_initial_vegetation_and_miracidia() {
        let d = eco_rhs(&EcoState::baseline(), &EcoParams::default(), 0.0).unwrap();
        assert_eq!(d.d_miracidia, 0.0);
        assert!((d.d_n_veg - 0.01).abs() < 1e-12);
    }

    #[test]
    fn rhs_cercariae_and_humans_at_exchanged_snail_state() {
        let params = EcoParams {
            eta: 0.00068,
            ..EcoParams::default()
        };
        let d = eco_rhs(&exchanged_snail_state(), &params, 0.0).unwrap();
        assert!((d.d_cercariae - 31_460.0).abs() < 1e-9);
        assert!((d.d_s_humans + 0.015_501).abs() < 5e-7, "{}", d.d_s_humans);
        assert!((d.d_i_humans - 0.015_501).abs() < 5e-7);
        assert_eq!(d.d_s_humans + d.d_i_humans, 0.0);
    }

    #[test]
    fn rhs_rejects_non_finite_and_negative() {
        let p = EcoParams::default();
        let bad = EcoState {
            cercariae: f64::NAN,
            ..EcoState::baseline()
        };
        assert!(matches!(
            eco_rhs(&bad, &p, 0.0),
            Err(Error::InvalidState {
                field: "cercariae",
                ..
            })
        ));
        let neg = EcoState {
            n_veg: -1.0,
            ..EcoState::baseline()
        };
        assert!(eco_rhs(&neg, &p, 0.0).is_err());
        assert!(eco_rhs(&EcoState::baseline(), &p, -0.1).is_err());
    }

    fn zero_rates() -> EcoParams {
        EcoParams {
            r: 0.0,
            rho: 0.0,
            n0: 0.0,
            lambda_cap2: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            mu2: 0.0,
            mu3: 0.0,
            mu4: 0.0,
            delta2: 0.0,
            lambda1: 0.0,
            lambda2: 0.0,
            alpha1: 0.0,
            chi: 0.0,
            k_eggs: 0.0,
            eta: 0.0,
            ..EcoParams::default()
        }
    }

    #[test]
    fn constant_harvest_integrates_exactly() {
        let start = EcoState::baseline();
        let out = integrate_period(&start, &zero_rates(), 365.0, 365, 0.1).unwrap();
        assert!((out.state.n_veg - (start.n_veg - 365.0)).abs() < 1e-7);
        assert_eq!(out.clamps, 0);
    }

    #[test]
    fn cercarial_decay_matches_exponential() {
        let params = EcoParams {
            lambda2: 0.0,
            ..EcoParams::default()
        };
        let out = integrate_period(&EcoState::baseline(), &params, 0.0, 365, 0.1).unwrap();
        let exact = 130_000.0 * (-0.004f64 * 365.0).exp();
        assert!((out.state.cercariae / exact - 1.0).abs() < 1e-3);
        assert!((exact - 30_191.0).abs() < 1.0);
    }

    #[test]
    fn exhausting_harvest_is_clamped() {
        let start = EcoState {
            n_veg: 10.0,
            ..EcoState::baseline()
        };
        let out = integrate_period(&start, &zero_rates(), 365.0, 365, 0.1).unwrap();
        assert_eq!(out.state.n_veg, 0.0);
        assert!(out.clamps > 0);
    }

    #[test]
    fn runoff_scales_vegetation_only() {
        let s = EcoState::baseline();
        assert_eq!(apply_runoff(&s, 0.0, 50.0), s);
        assert_eq!(apply_runoff(&s, 0.01, 0.0), s);
        let bumped = apply_runoff(&s, 0.01, 10.0);
        assert!((bumped.n_veg - 31_797.15).abs() < 1e-9);
        assert_eq!(bumped.cercariae, s.cercariae);
    }

    #[test]
    fn step_count_must_be_integral() {
        assert!(integrate_period(&EcoState::baseline(), &EcoParams::default(), 0.0, 365, 0.3).is_err());
        assert!(integrate_period(&EcoState::baseline(), &EcoParams::default(), 0.0, 365, 0.0).is_err());
    }

    #[test]
    fn habitat_mortality_grows_as_vegetation_shrinks() {
        for coupling in [HabitatCoupling::Deficit, HabitatCoupling::Signed] {
            let p = EcoParams {
                coupling,
                ..EcoParams::default()
            };
            assert!(p.snail_mortality(20_000.0) > p.snail_mortality(25_000.0));
        }
        let deficit = EcoParams::default();
        assert_eq!(deficit.snail_mortality(40_000.0), deficit.mu2);
        let signed = EcoParams {
            coupling: HabitatCoupling::Signed,
            ..EcoParams::default()
        };
        assert!(signed.snail_mortality(40_000.0) < 0.0);
    }

    #[test]
    fn steady_state_defaults() {
        let report = steady_state_run(&EcoParams::default(), &EcoState::baseline(), 5, DEFAULT_DT).unwrap();
        assert!(
            report.steady,
            "drift {:?}, prevalence {}",
            report.final_year_drift, report.final_prevalence
        );
        assert!((report.final_prevalence - 0.25).abs() < 0.01);
        assert_eq!(report.samples.len(), 1 + 5 * 73);
    }

    #[test]
    fn heavy_treatment_breaks_endemic_level() {
        let p = EcoParams {
            eta: 0.68,
            ..EcoParams::default()
        };
        let report = steady_state_run(&p, &EcoState::baseline(), 5, DEFAULT_DT).unwrap();
        assert!(!report.steady || report.final_prevalence < 0.22);
        assert!(report.final_prevalence < 0.22);
    }

    #[test]
    fn lone_snails_approach_birth_death_balance() {
        let p = EcoParams::default();
        // vegetation held at capacity so only natural mortality acts
        let start = EcoState {
            n_veg: p.cap_k,
            s_snails: 50.0,
            i_snails: 0.0,
            miracidia: 0.0,
            cercariae: 0.0,
            s_humans: 0.0,
            i_humans: 0.0,
        };
        let report = steady_state_run(&p, &start, 5, DEFAULT_DT).unwrap();
        let end = report.final_state();
        let target = p.lambda_cap2 / p.mu2;
        assert!(
            end.s_snails > 0.9 * target && end.s_snails <= target * 1.0001,
            "{}",
            end.s_snails
        );
        assert_eq!(report.final_prevalence, 0.0);
    }
}
