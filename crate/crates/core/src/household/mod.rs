//! Static single-period agricultural household problem.
//!
//! A household with fixed land, no labor market and a cash market for food,
//! a composite household good and urea fertilizer splits its available labor
//! between food production, aquatic vegetation harvest (composted into a
//! fertilizer substitute) and leisure. Food is produced with a CES technology;
//! preferences are Cobb-Douglas over food, goods, health and leisure.

mod kkt;
mod solver;

pub use kkt::{kkt_residuals, KktReport};
pub use solver::solve_household;

use crate::error::{Error, Result};

/// Person-days of labor one healthy member supplies per year.
pub const WORK_DAYS_PER_MEMBER: f64 = 365.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseholdParams {
    pub theta_f: f64,
    pub theta_g: f64,
    pub theta_h: f64,
    pub theta_l: f64,
    /// Elasticity of health with respect to food consumption.
    pub h_f: f64,
    pub alpha_d: f64,
    pub alpha_l: f64,
    pub alpha_u: f64,
    pub alpha_v: f64,
    /// CES substitution parameter, `0 < phi < 1`.
    pub phi: f64,
    /// Mass fraction of harvested vegetation retained as compost.
    pub omega: f64,
    pub beta_v: f64,
    pub gamma1: f64,
    /// Output scale of the CES food technology (kg).
    pub scale_f: f64,
    /// Share of a healthy member's labor an infected member still supplies.
    pub tau: f64,
    /// Upper bound on fertilizer purchases, kg per hectare.
    pub fert_max_per_ha: f64,
}

impl Default for HouseholdParams {
    fn default() -> Self {
        HouseholdParams {
            theta_f: 0.55,
            theta_g: 0.3,
            theta_h: 0.1,
            theta_l: 0.05,
            h_f: 0.000_384,
            alpha_d: 0.4,
            alpha_l: 0.5,
            alpha_u: 0.05,
            alpha_v: 0.05,
            phi: 0.3,
            omega: 0.6,
            beta_v: 14.4942,
            gamma1: 0.2595,
            scale_f: 0.01,
            tau: 0.5,
            fert_max_per_ha: 1000.0,
        }
    }
}

impl HouseholdParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("theta_f", self.theta_f),
            ("theta_g", self.theta_g),
            ("theta_h", self.theta_h),
            ("theta_l", self.theta_l),
            ("h_f", self.h_f),
            ("alpha_d", self.alpha_d),
            ("alpha_l", self.alpha_l),
            ("alpha_u", self.alpha_u),
            ("alpha_v", self.alpha_v),
            ("beta_v", self.beta_v),
            ("gamma1", self.gamma1),
            ("fert_max_per_ha", self.fert_max_per_ha),
        ];
        for (name, v) in named {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        let theta_sum = self.theta_f + self.theta_g + self.theta_h + self.theta_l;
        if (theta_sum - 1.0).abs() > 1e-9 {
            return Err(invalid(format!(
                "utility exponents must sum to 1, got {theta_sum}"
            )));
        }
        if self.theta_f + self.theta_g <= 0.0 {
            return Err(invalid("theta_f + theta_g must be positive".into()));
        }
        let alpha_sum = self.alpha_d + self.alpha_l + self.alpha_u + self.alpha_v;
        if (alpha_sum - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("CES shares must sum to 1, got {alpha_sum}")));
        }
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(invalid(format!("omega must lie in (0, 1), got {}", self.omega)));
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(invalid(format!("phi must lie in (0, 1), got {}", self.phi)));
        }
        if !(self.tau >= 0.0 && self.tau < 1.0) {
            return Err(invalid(format!("tau must lie in [0, 1), got {}", self.tau)));
        }
        if self.gamma1 >= 1.0 {
            return Err(invalid(format!("gamma1 must be < 1, got {}", self.gamma1)));
        }
        if !(self.scale_f.is_finite() && self.scale_f > 0.0) {
            return Err(invalid(format!("scale_f must be > 0, got {}", self.scale_f)));
        }
        Ok(())
    }
}

/// Market prices in FCFA per unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prices {
    pub p_f: f64,
    pub p_g: f64,
    pub p_u: f64,
}

impl Default for Prices {
    fn default() -> Self {
        Prices {
            p_f: 290.0,
            p_g: 500.0,
            p_u: 300.0,
        }
    }
}

impl Prices {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p_f", self.p_f), ("p_g", self.p_g), ("p_u", self.p_u)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Prices in units of food (`p_f = 1`).
    pub fn normalized(&self) -> Prices {
        Prices {
            p_f: 1.0,
            p_g: self.p_g / self.p_f,
            p_u: self.p_u / self.p_f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endowment {
    pub land_ha: f64,
    pub members: u32,
    pub infected: u32,
}

impl Endowment {
    pub fn validate(&self) -> Result<()> {
        if !(self.land_ha.is_finite() && self.land_ha > 0.0) {
            return Err(invalid(format!("land must be > 0 ha, got {}", self.land_ha)));
        }
        if self.members == 0 {
            return Err(invalid("household needs at least one member".into()));
        }
        if self.infected > self.members {
            return Err(invalid(format!(
                "{} infected exceeds {} members",
                self.infected, self.members
            )));
        }
        Ok(())
    }

    pub fn susceptible(&self) -> u32 {
        self.members - self.infected
    }
}

/// One period's allocation. Labor in person-days, fertilizer and food in kg.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Decision {
    pub labor_food: f64,
    pub labor_veg: f64,
    pub leisure: f64,
    pub fert_kg: f64,
    pub c_f: f64,
    pub c_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Outcome {
    pub q_f: f64,
    pub q_v: f64,
    /// Cash income net of fertilizer, FCFA.
    pub income: f64,
    pub health: f64,
    pub utility: f64,
}

fn invalid(msg: String) -> Error {
    Error::InvalidParams(msg)
}

/// Vegetation harvested (kg) from `labor_veg` person-days.
pub fn harvest_production(labor_veg: f64, params: &HouseholdParams) -> f64 {
    if labor_veg <= 0.0 {
        0.0
    } else {
        params.beta_v * labor_veg.powf(params.gamma1)
    }
}

/// CES food output (kg). `compost_kg` is the retained compost mass, i.e.
/// already multiplied by `omega`.
pub fn food_production(
    labor_food: f64,
    land_ha: f64,
    fert_kg: f64,
    compost_kg: f64,
    params: &HouseholdParams,
) -> f64 {
    let sum = ces_sum(labor_food, land_ha, fert_kg, compost_kg, params);
    if sum <= 0.0 {
        0.0
    } else {
        params.scale_f * sum.powf(1.0 / params.phi)
    }
}

#[inline]
pub(crate) fn ces_sum(labor: f64, land: f64, fert: f64, compost: f64, p: &HouseholdParams) -> f64 {
    let term = |share: f64, x: f64| if x > 0.0 { share * x.powf(p.phi) } else { 0.0 };
    term(p.alpha_d, land) + term(p.alpha_l, labor) + term(p.alpha_u, fert) + term(p.alpha_v, compost)
}

/// Food and vegetation output of a plan together with the marginal products
/// of food with respect to each choice (kg per unit input). A marginal at a
/// zero input is infinite whenever the input's CES share is positive.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Marginals {
    pub q_f: f64,
    pub d_labor_food: f64,
    pub d_labor_veg: f64,
    pub d_fert: f64,
}

pub(crate) fn marginals(
    labor_food: f64,
    labor_veg: f64,
    fert_kg: f64,
    land_ha: f64,
    p: &HouseholdParams,
) -> Marginals {
    let q_v = harvest_production(labor_veg, p);
    let compost = p.omega * q_v;
    let sum = ces_sum(labor_food, land_ha, fert_kg, compost, p);
    if sum <= 0.0 {
        return Marginals {
            q_f: 0.0,
            d_labor_food: 0.0,
            d_labor_veg: 0.0,
            d_fert: 0.0,
        };
    }
    let q_f = p.scale_f * sum.powf(1.0 / p.phi);
    // dF/dx = F * alpha * x^(phi-1) / S
    let partial = |share: f64, x: f64| {
        if share == 0.0 {
            0.0
        } else if x <= 0.0 {
            f64::INFINITY
        } else {
            q_f * share * x.powf(p.phi - 1.0) / sum
        }
    };
    let d_labor_veg = if p.alpha_v == 0.0 || p.beta_v == 0.0 {
        0.0
    } else if labor_veg <= 0.0 {
        f64::INFINITY
    } else {
        // chain through compost = omega * beta_v * L^gamma1
        q_f * p.alpha_v * compost.powf(p.phi) * p.gamma1 / (sum * labor_veg)
    };
    Marginals {
        q_f,
        d_labor_food: partial(p.alpha_l, labor_food),
        d_labor_veg,
        d_fert: partial(p.alpha_u, fert_kg),
    }
}

/// Health index `exp(S / (I + S)) * c_f^h_f`; zero when nothing is eaten.
pub fn health_status(infected: u32, susceptible: u32, c_f: f64, h_f: f64) -> f64 {
    let total = infected + susceptible;
    debug_assert!(total >= 1);
    if c_f <= 0.0 {
        return 0.0;
    }
    let healthy_share = susceptible as f64 / total as f64;
    healthy_share.exp() * c_f.powf(h_f)
}

/// Cobb-Douglas utility over food, goods, health and leisure.
pub fn utility(c_f: f64, c_g: f64, leisure: f64, health: f64, params: &HouseholdParams) -> f64 {
    c_f.powf(params.theta_f)
        * c_g.powf(params.theta_g)
        * health.powf(params.theta_h)
        * leisure.powf(params.theta_l)
}

/// Annual labor (person-days) from `members`, of whom `infected` supply
/// only the fraction `tau` of a full year.
pub fn labor_availability(members: u32, infected: u32, tau: f64) -> f64 {
    debug_assert!(infected <= members);
    WORK_DAYS_PER_MEMBER * ((members - infected) as f64 + tau * infected as f64)
}

/// Optimal consumption split of a cash budget (in food units) under
/// Cobb-Douglas preferences: returns `(c_f, c_g)`.
///
/// Health scales with `c_f^h_f`, so food carries the effective exponent
/// `theta_f + theta_h * h_f`; the `exp(S/(I+S))` factor does not depend on
/// the split.
pub fn consumption_split(cash: f64, params: &HouseholdParams, prices: &Prices) -> (f64, f64) {
    let food_weight = params.theta_f + params.theta_h * params.h_f;
    let total = food_weight + params.theta_g;
    let c_f = cash * food_weight / total / prices.p_f;
    let c_g = cash * params.theta_g / total / prices.p_g;
    (c_f, c_g)
}

/// Evaluates the outcome of a production plan `(labor_food, labor_veg,
/// fert_kg)` with the optimal consumption split. Returns `None` when cash
/// net of fertilizer is not positive or labor exceeds availability.
pub fn evaluate_plan(
    labor_food: f64,
    labor_veg: f64,
    fert_kg: f64,
    params: &HouseholdParams,
    prices: &Prices,
    endow: &Endowment,
) -> Option<(Decision, Outcome)> {
    let available = labor_availability(endow.members, endow.infected, params.tau);
    let leisure = available - labor_food - labor_veg;
    assemble_plan(labor_food, labor_veg, leisure, fert_kg, params, prices, endow)
}

pub(crate) fn assemble_plan(
    labor_food: f64,
    labor_veg: f64,
    leisure: f64,
    fert_kg: f64,
    params: &HouseholdParams,
    prices: &Prices,
    endow: &Endowment,
) -> Option<(Decision, Outcome)> {
    if leisure < 0.0 || labor_food < 0.0 || labor_veg < 0.0 || fert_kg < 0.0 {
        return None;
    }
    let q_v = harvest_production(labor_veg, params);
    let q_f = food_production(labor_food, endow.land_ha, fert_kg, params.omega * q_v, params);
    let cash = prices.p_f * q_f - prices.p_u * fert_kg;
    if cash <= 0.0 {
        return None;
    }
    let (c_f, c_g) = consumption_split(cash, params, prices);
    let health = health_status(endow.infected, endow.susceptible(), c_f, params.h_f);
    let decision = Decision {
        labor_food,
        labor_veg,
        leisure,
        fert_kg,
        c_f,
        c_g,
    };
    let outcome = Outcome {
        q_f,
        q_v,
        income: cash,
        health,
        utility: utility(c_f, c_g, leisure, health, params),
    };
    Some((decision, outcome))
}
