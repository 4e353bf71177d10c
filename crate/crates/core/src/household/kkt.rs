use super::{labor_availability, marginals, Decision, Endowment, HouseholdParams, Prices};
use crate::error::{Error, Result};

/// Relative gap above which a decision is rejected as violating a binding
/// constraint.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// First-order condition residuals of a household decision, all relative
/// (dimensionless).
///
/// The marginal utility of cash is taken from the food condition and the
/// shadow wage from the leisure condition (or, when leisure sits at zero,
/// from the value of the marginal product of food labor). Inputs at a lower
/// bound are scored by complementary slackness: only a value of marginal
/// product above its shadow price counts as a violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// Goods-vs-food marginal rate of substitution against the price ratio.
    pub food_goods: f64,
    pub leisure: f64,
    pub labor_food: f64,
    pub labor_veg: f64,
    pub fert: f64,
    /// Shadow wage, FCFA per person-day.
    pub shadow_wage: f64,
    /// Marginal utility of one FCFA.
    pub cash_value: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        [
            self.food_goods,
            self.leisure,
            self.labor_food,
            self.labor_veg,
            self.fert,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn kkt_residuals(
    decision: &Decision,
    params: &HouseholdParams,
    prices: &Prices,
    endow: &Endowment,
    allow_harvest: bool,
) -> Result<KktReport> {
    let d = decision;
    let fields = [
        ("labor_food", d.labor_food),
        ("labor_veg", d.labor_veg),
        ("leisure", d.leisure),
        ("fert_kg", d.fert_kg),
        ("c_f", d.c_f),
        ("c_g", d.c_g),
    ];
    for (name, v) in fields {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InfeasibleDecision {
                constraint: name,
                gap: v,
            });
        }
    }
    let available = labor_availability(endow.members, endow.infected, params.tau);
    let time_gap = (d.labor_food + d.labor_veg + d.leisure - available).abs() / available;
    if time_gap > FEASIBILITY_TOL {
        return Err(Error::InfeasibleDecision {
            constraint: "time",
            gap: time_gap,
        });
    }
    let m = marginals(d.labor_food, d.labor_veg, d.fert_kg, endow.land_ha, params);
    let revenue = prices.p_f * m.q_f;
    let spend = prices.p_f * d.c_f + prices.p_g * d.c_g + prices.p_u * d.fert_kg;
    let cash_gap = (spend - revenue).abs() / revenue.max(f64::MIN_POSITIVE);
    if cash_gap > FEASIBILITY_TOL {
        return Err(Error::InfeasibleDecision {
            constraint: "cash",
            gap: cash_gap,
        });
    }
    if !allow_harvest && d.labor_veg > 0.0 {
        return Err(Error::InfeasibleDecision {
            constraint: "no-harvest",
            gap: d.labor_veg,
        });
    }
    if d.c_f == 0.0 || d.c_g == 0.0 {
        // utility is zero; every first-order condition is unbounded
        return Ok(KktReport {
            food_goods: f64::INFINITY,
            leisure: f64::INFINITY,
            labor_food: f64::INFINITY,
            labor_veg: f64::INFINITY,
            fert: f64::INFINITY,
            shadow_wage: f64::NAN,
            cash_value: 0.0,
        });
    }

    let food_weight = params.theta_f + params.theta_h * params.h_f;
    let cash_value = food_weight / (prices.p_f * d.c_f);
    let goods_value = params.theta_g / (prices.p_g * d.c_g);
    let food_goods = (goods_value / cash_value - 1.0).abs();

    let vmp_food = prices.p_f * m.d_labor_food;
    let vmp_veg = prices.p_f * m.d_labor_veg;
    let vmp_fert = prices.p_f * m.d_fert;

    let (shadow_wage, leisure) = if d.leisure > 0.0 {
        (params.theta_l / (d.leisure * cash_value), 0.0)
    } else if params.theta_l > 0.0 {
        (vmp_food, 1.0)
    } else {
        (vmp_food, 0.0)
    };

    let slack = |amount: f64, vmp: f64, price: f64| {
        if amount > 0.0 {
            ((vmp - price) / price).abs()
        } else {
            ((vmp - price) / price).max(0.0)
        }
    };
    let labor_food = slack(d.labor_food, vmp_food, shadow_wage);
    let labor_veg = if allow_harvest {
        slack(d.labor_veg, vmp_veg, shadow_wage)
    } else {
        0.0
    };
    let fert_max = params.fert_max_per_ha * endow.land_ha;
    let fert = if d.fert_kg >= fert_max {
        ((prices.p_u - vmp_fert) / prices.p_u).max(0.0)
    } else {
        slack(d.fert_kg, vmp_fert, prices.p_u)
    };

    Ok(KktReport {
        food_goods,
        leisure,
        labor_food,
        labor_veg,
        fert,
        shadow_wage,
        cash_value,
    })
}
