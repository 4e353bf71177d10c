//! Outer maximization over `(labor_food, labor_veg, fert_kg)`.
//!
//! The consumption split is closed form, so the household only chooses the
//! production plan. With prices in food units and `Y = F - p_u * u` the
//! remaining objective is `E ln Y + theta_l ln l` (`E` the combined food and
//! goods exponent), which is searched in unconstrained coordinates: labor
//! shares through a softmax against the last active use, fertilizer through
//! its logarithm. Each start runs a Nelder-Mead simplex; the best vertex is
//! then polished with Newton steps on the analytic gradient, falling back to
//! coordinate-wise root finding when a Newton step does not help.

// Negated comparisons are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use super::kkt::kkt_residuals;
use super::{
    assemble_plan, labor_availability, marginals, Decision, Endowment, HouseholdParams, Outcome, Prices,
};
use crate::error::{Error, Result};

/// KKT residual under which a candidate is accepted outright.
pub(crate) const ACCEPT_RESIDUAL: f64 = 1e-8;
const BASE_STARTS: usize = 5;
const MAX_DIM: usize = 3;
const POLISH_ITERS: usize = 200;

/// Deterministic starting labor shares `(food, vegetation)`; leisure takes
/// the rest. The first five form the base set, the ladder adds the others.
const LABOR_STARTS: [(f64, f64); 10] = [
    (0.9, 0.01),
    (0.7, 0.05),
    (0.5, 0.1),
    (0.95, 0.002),
    (0.8, 0.02),
    (0.3, 0.2),
    (0.6, 0.3),
    (0.98, 0.001),
    (0.85, 0.1),
    (0.4, 0.01),
];

/// Starting fertilizer spend as a fraction of unfertilized food value.
const FERT_STARTS: [f64; 10] = [0.02, 0.005, 0.05, 0.001, 0.01, 0.1, 0.0005, 0.03, 0.2, 0.003];

type Point = [f64; MAX_DIM];

/// Maximizes household utility for one period. Prices are normalized by
/// `p_f` internally, so scaling all three prices leaves the plan unchanged.
pub fn solve_household(
    params: &HouseholdParams,
    prices: &Prices,
    endow: &Endowment,
    allow_harvest: bool,
) -> Result<(Decision, Outcome)> {
    params.validate()?;
    prices.validate()?;
    endow.validate()?;
    let problem = Problem::new(params, prices, endow, allow_harvest);

    let mut best: Option<((Decision, Outcome), f64)> = None;
    for starts in [BASE_STARTS, 2 * BASE_STARTS] {
        for z0 in problem.starts(starts) {
            let z = problem.polish(problem.nelder_mead(z0));
            let Some(plan) = problem.finish(&z) else {
                continue;
            };
            let residual = kkt_residuals(&plan.0, params, prices, endow, allow_harvest)
                .map(|r| r.max())
                .unwrap_or(f64::INFINITY);
            let better = match &best {
                None => true,
                Some((incumbent, r)) => {
                    plan.1.utility > incumbent.1.utility
                        || (plan.1.utility == incumbent.1.utility && residual < *r)
                }
            };
            if better {
                best = Some((plan, residual));
            }
        }
        if let Some((plan, residual)) = &best {
            if *residual <= ACCEPT_RESIDUAL {
                return Ok(*plan);
            }
        }
    }
    match best {
        Some((plan, residual)) => Err(Error::SolverFailed {
            best: Box::new(plan),
            residual,
        }),
        None => Err(Error::InvalidParams(
            "no production plan yields positive cash income".into(),
        )),
    }
}

struct Problem<'a> {
    params: &'a HouseholdParams,
    prices: &'a Prices,
    endow: &'a Endowment,
    /// Fertilizer price in food units.
    p_u: f64,
    available: f64,
    harvest: bool,
    leisure: bool,
    fert_max: f64,
    exponent: f64,
}

/// A production plan in natural units.
#[derive(Debug, Clone, Copy)]
struct Plan {
    labor_food: f64,
    labor_veg: f64,
    leisure: f64,
    fert: f64,
}

impl<'a> Problem<'a> {
    fn new(
        params: &'a HouseholdParams,
        prices: &'a Prices,
        endow: &'a Endowment,
        allow_harvest: bool,
    ) -> Self {
        let harvest = allow_harvest && params.beta_v > 0.0 && params.alpha_v > 0.0 && params.omega > 0.0;
        Problem {
            params,
            prices,
            endow,
            p_u: prices.p_u / prices.p_f,
            available: labor_availability(endow.members, endow.infected, params.tau),
            harvest,
            leisure: params.theta_l > 0.0,
            fert_max: params.fert_max_per_ha * endow.land_ha,
            exponent: params.theta_f + params.theta_h * params.h_f + params.theta_g,
        }
    }

    /// Number of labor uses with a free share (food is always one of them).
    fn slots(&self) -> usize {
        1 + self.harvest as usize + self.leisure as usize
    }

    fn dim(&self) -> usize {
        self.slots()
    }

    fn plan(&self, z: &Point) -> Plan {
        let n = self.slots();
        // slot shares: the first n-1 coordinates are log-odds against the last slot
        let mut logits = [0.0; MAX_DIM];
        logits[..n - 1].copy_from_slice(&z[..n - 1]);
        let top = logits[..n].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut weights = [0.0; MAX_DIM];
        let mut total = 0.0;
        for i in 0..n {
            weights[i] = (logits[i] - top).exp();
            total += weights[i];
        }
        let mut shares = weights.map(|w| self.available * w / total);
        let mut next = shares.iter_mut().take(n);
        let labor_food = *next.next().unwrap();
        let labor_veg = if self.harvest { *next.next().unwrap() } else { 0.0 };
        let leisure = if self.leisure { *next.next().unwrap() } else { 0.0 };
        let fert = z[n - 1].exp().min(self.fert_max);
        Plan {
            labor_food,
            labor_veg,
            leisure,
            fert,
        }
    }

    /// Log-utility up to decision-invariant constants; `-inf` when cash
    /// income is not positive.
    fn value(&self, z: &Point) -> f64 {
        let plan = self.plan(z);
        let m = marginals(
            plan.labor_food,
            plan.labor_veg,
            plan.fert,
            self.endow.land_ha,
            self.params,
        );
        let cash = m.q_f - self.p_u * plan.fert;
        if !(cash > 0.0) {
            return f64::NEG_INFINITY;
        }
        let mut v = self.exponent * cash.ln();
        if self.leisure {
            v += self.params.theta_l * plan.leisure.ln();
        }
        v
    }

    fn gradient(&self, z: &Point) -> Point {
        let n = self.slots();
        let plan = self.plan(z);
        let m = marginals(
            plan.labor_food,
            plan.labor_veg,
            plan.fert,
            self.endow.land_ha,
            self.params,
        );
        let cash = m.q_f - self.p_u * plan.fert;
        let mut g = [0.0; MAX_DIM];
        if !(cash > 0.0) {
            return [f64::NAN; MAX_DIM];
        }
        let scale = self.exponent / cash;
        // marginal value of a person-day in each slot, and the slot amounts
        let mut values = [0.0; MAX_DIM];
        let mut amounts = [0.0; MAX_DIM];
        let mut k = 0;
        values[k] = scale * m.d_labor_food;
        amounts[k] = plan.labor_food;
        if self.harvest {
            k += 1;
            values[k] = scale * m.d_labor_veg;
            amounts[k] = plan.labor_veg;
        }
        if self.leisure {
            k += 1;
            values[k] = self.params.theta_l / plan.leisure;
            amounts[k] = plan.leisure;
        }
        let mean: f64 = (0..n).map(|i| values[i] * amounts[i]).sum::<f64>() / self.available;
        for j in 0..n - 1 {
            g[j] = amounts[j] * (values[j] - mean);
        }
        g[n - 1] = if z[n - 1].exp() >= self.fert_max {
            0.0
        } else {
            plan.fert * scale * (m.d_fert - self.p_u)
        };
        g
    }

    fn starts(&self, count: usize) -> Vec<Point> {
        let n = self.slots();
        let base_food = marginals(0.9 * self.available, 0.0, 0.0, self.endow.land_ha, self.params).q_f;
        (0..count)
            .map(|i| {
                let (food, veg) = LABOR_STARTS[i];
                let mut shares = [food, 0.0, 0.0];
                let mut k = 0;
                if self.harvest {
                    k += 1;
                    shares[k] = veg;
                }
                if self.leisure {
                    k += 1;
                    shares[k] = (1.0 - food - veg).max(0.01);
                }
                let mut z = [0.0; MAX_DIM];
                for j in 0..n - 1 {
                    z[j] = (shares[j] / shares[n - 1]).ln();
                }
                let fert = (FERT_STARTS[i] * base_food / self.p_u).clamp(1e-12, self.fert_max);
                z[n - 1] = fert.ln();
                z
            })
            .collect()
    }

    fn nelder_mead(&self, z0: Point) -> Point {
        let dim = self.dim();
        let cost = |z: &Point| -self.value(z);
        let mut simplex: Vec<(Point, f64)> = Vec::with_capacity(dim + 1);
        simplex.push((z0, cost(&z0)));
        for j in 0..dim {
            let mut z = z0;
            z[j] += 0.5;
            let c = cost(&z);
            if c.is_finite() {
                simplex.push((z, c));
            } else {
                z[j] = z0[j] - 0.5;
                simplex.push((z, cost(&z)));
            }
        }
        let along = |from: &Point, to: &Point, t: f64| -> Point {
            let mut out = [0.0; MAX_DIM];
            for i in 0..dim {
                out[i] = from[i] + t * (to[i] - from[i]);
            }
            out
        };
        for _ in 0..400 * dim {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best, worst) = (simplex[0].1, simplex[dim].1);
            let spread = (0..dim)
                .map(|i| {
                    simplex
                        .iter()
                        .map(|v| (v.0[i] - simplex[0].0[i]).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if (worst - best).abs() <= 1e-13 * best.abs().max(1e-300) && spread < 1e-7 {
                break;
            }
            let mut centroid = [0.0; MAX_DIM];
            for v in &simplex[..dim] {
                for i in 0..dim {
                    centroid[i] += v.0[i] / dim as f64;
                }
            }
            let worst_point = simplex[dim].0;
            let reflected = along(&centroid, &worst_point, -1.0);
            let fr = cost(&reflected);
            if fr < best {
                let expanded = along(&centroid, &worst_point, -2.0);
                let fe = cost(&expanded);
                simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
                continue;
            }
            if fr < simplex[dim - 1].1 {
                simplex[dim] = (reflected, fr);
                continue;
            }
            let (contracted, fc) = if fr < worst {
                let p = along(&centroid, &worst_point, -0.5);
                (p, cost(&p))
            } else {
                let p = along(&centroid, &worst_point, 0.5);
                (p, cost(&p))
            };
            if fc < worst.min(fr) {
                simplex[dim] = (contracted, fc);
                continue;
            }
            let anchor = simplex[0].0;
            for v in simplex.iter_mut().skip(1) {
                v.0 = along(&anchor, &v.0, 0.5);
                v.1 = cost(&v.0);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        simplex[0].0
    }

    fn polish(&self, mut z: Point) -> Point {
        let dim = self.dim();
        let norm = |g: &Point| g[..dim].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for _ in 0..POLISH_ITERS {
            let v0 = self.value(&z);
            let g = self.gradient(&z);
            let g0 = norm(&g);
            if !(g0 > 1e-14) {
                break;
            }
            let mut moved = false;
            if let Some(step) = self.newton_step(&z, &g) {
                let ascent: f64 = (0..dim).map(|i| step[i] * g[i]).sum();
                if ascent > 0.0 {
                    let mut t = 1.0;
                    for _ in 0..40 {
                        let mut cand = z;
                        for i in 0..dim {
                            cand[i] += t * step[i];
                        }
                        let v = self.value(&cand);
                        let gc = norm(&self.gradient(&cand));
                        if v > v0 || (v >= v0 - 4.0 * f64::EPSILON * v0.abs() && gc < g0) {
                            z = cand;
                            moved = true;
                            break;
                        }
                        t *= 0.5;
                    }
                }
            }
            if !moved {
                let before = z;
                for j in 0..dim {
                    z[j] = self.coordinate_root(&z, j);
                }
                if before == z {
                    break;
                }
            }
        }
        z
    }

    /// Newton direction from a central-difference Hessian of the analytic
    /// gradient.
    fn newton_step(&self, z: &Point, g: &Point) -> Option<Point> {
        let dim = self.dim();
        let mut hess = [[0.0; MAX_DIM]; MAX_DIM];
        for j in 0..dim {
            let h = 1e-5 * z[j].abs().max(1.0);
            let (mut up, mut down) = (*z, *z);
            up[j] += h;
            down[j] -= h;
            let (gu, gd) = (self.gradient(&up), self.gradient(&down));
            for i in 0..dim {
                hess[i][j] = (gu[i] - gd[i]) / (2.0 * h);
            }
        }
        for i in 0..dim {
            for j in 0..i {
                let avg = 0.5 * (hess[i][j] + hess[j][i]);
                hess[i][j] = avg;
                hess[j][i] = avg;
            }
        }
        let rhs = g.map(|x| -x);
        let step = solve_linear(hess, rhs, dim)?;
        step[..dim].iter().all(|s| s.is_finite()).then_some(step)
    }

    /// Root of the `j`-th partial derivative along coordinate `j`, found by
    /// bracketing and bisection.
    fn coordinate_root(&self, z: &Point, j: usize) -> f64 {
        let slope = |t: f64| {
            let mut p = *z;
            p[j] = t;
            self.gradient(&p)[j]
        };
        let start = z[j];
        let s0 = slope(start);
        if !s0.is_finite() || s0 == 0.0 {
            return start;
        }
        let dir = s0.signum();
        // a NaN slope means cash income vanished, which lies past the maximum
        let past = |t: f64| {
            let s = slope(t);
            s.is_nan() || s.signum() != dir
        };
        let (mut lo, mut hi) = (start, start);
        let mut step = 1e-3;
        let mut bracketed = false;
        for _ in 0..80 {
            hi = start + dir * step;
            if past(hi) {
                bracketed = true;
                break;
            }
            lo = hi;
            step *= 2.0;
        }
        if !bracketed {
            return lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if past(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    fn finish(&self, z: &Point) -> Option<(Decision, Outcome)> {
        let plan = self.plan(z);
        // food labor absorbs rounding so the time constraint holds exactly
        let labor_food = self.available - plan.labor_veg - plan.leisure;
        assemble_plan(
            labor_food,
            plan.labor_veg,
            plan.leisure,
            plan.fert,
            self.params,
            self.prices,
            self.endow,
        )
    }
}

/// Gaussian elimination with partial pivoting on the leading `dim` block.
fn solve_linear(mut a: [[f64; MAX_DIM]; MAX_DIM], mut b: Point, dim: usize) -> Option<Point> {
    for col in 0..dim {
        let pivot = (col..dim).max_by(|&i, &k| a[i][col].abs().total_cmp(&a[k][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..dim {
            let f = a[row][col] / a[col][col];
            for k in col..dim {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; MAX_DIM];
    for row in (0..dim).rev() {
        let tail: f64 = (row + 1..dim).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}
