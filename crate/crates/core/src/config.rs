//! Sectioned `key = value` configuration files.
//!
//! ```text
//! # comment
//! [simulation]
//! years = 20
//! allow_harvest = true
//!
//! [experiment]
//! rho_values = 0, 0.005, 0.01, 0.02
//! ```
//!
//! Sections are `[simulation]`, `[ecology]`, `[household]`, `[prices]` and
//! `[experiment]`. Every key is optional and defaults to the calibrated
//! value; unknown sections or keys, repeated keys, malformed values and
//! out-of-range values are errors carrying the offending line number.

use std::fmt::Write as _;

use crate::coupling::{DrawScope, SimConfig};
use crate::ecology::HabitatCoupling;
use crate::error::{Error, Result};
use crate::experiments::{default_prevalence_grid, SweepParam, DEFAULT_REPLICATES, DEFAULT_SWEEP_REPLICATES};

/// Settings of the experiment drivers that are not part of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub replicates: usize,
    pub sweep_replicates: usize,
    pub rho_values: Vec<f64>,
    pub r_values: Vec<f64>,
    pub n0_values: Vec<f64>,
    pub p_u_values: Vec<f64>,
    pub p_h_values: Vec<f64>,
    pub prevalence_grid: Vec<f64>,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            replicates: DEFAULT_REPLICATES,
            sweep_replicates: DEFAULT_SWEEP_REPLICATES,
            rho_values: SweepParam::Rho.default_values(),
            r_values: SweepParam::R.default_values(),
            n0_values: SweepParam::N0.default_values(),
            p_u_values: SweepParam::PU.default_values(),
            p_h_values: SweepParam::PH.default_values(),
            prevalence_grid: default_prevalence_grid(),
        }
    }
}

impl ExperimentSettings {
    pub fn sweep_values(&self, param: SweepParam) -> &[f64] {
        match param {
            SweepParam::Rho => &self.rho_values,
            SweepParam::R => &self.r_values,
            SweepParam::N0 => &self.n0_values,
            SweepParam::PU => &self.p_u_values,
            SweepParam::PH => &self.p_h_values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    pub sim: SimConfig,
    pub experiment: ExperimentSettings,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Real(f64),
    Int(u64),
    Flag(bool),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Copy)]
enum Range {
    Any,
    NonNegative,
    Positive,
    /// `[0, 1]`
    Probability,
    /// `(0, 1)`
    OpenUnit,
    /// `[0, 1)`
    HalfOpenUnit,
    /// integer `>= 1`
    Count,
}

impl Range {
    fn check(self, x: f64) -> std::result::Result<(), String> {
        let ok = match self {
            Range::Any => true,
            Range::NonNegative => x >= 0.0,
            Range::Positive | Range::Count => x > 0.0,
            Range::Probability => (0.0..=1.0).contains(&x),
            Range::OpenUnit => x > 0.0 && x < 1.0,
            Range::HalfOpenUnit => (0.0..1.0).contains(&x),
        };
        if ok {
            return Ok(());
        }
        let want = match self {
            Range::Any => unreachable!(),
            Range::NonNegative => ">= 0",
            Range::Positive => "> 0",
            Range::Count => ">= 1",
            Range::Probability => "in [0, 1]",
            Range::OpenUnit => "in (0, 1)",
            Range::HalfOpenUnit => "in [0, 1)",
        };
        Err(format!("value {x} out of range: must be {want}"))
    }
}

const SECTIONS: [&str; 5] = ["simulation", "ecology", "household", "prices", "experiment"];

/// Every key, in rendering order.
const KEYS: &[(&str, &str, Range)] = &[
    ("simulation", "years", Range::Count),
    ("simulation", "members", Range::Count),
    ("simulation", "land_ha", Range::Positive),
    ("simulation", "initial_prevalence", Range::Probability),
    ("simulation", "cure_prob", Range::Probability),
    ("simulation", "allow_harvest", Range::Any),
    ("simulation", "draw_susceptible_only", Range::Any),
    ("simulation", "dt", Range::Positive),
    ("simulation", "seed", Range::Any),
    ("ecology", "r", Range::NonNegative),
    ("ecology", "cap_k", Range::Positive),
    ("ecology", "rho", Range::NonNegative),
    ("ecology", "n0", Range::NonNegative),
    ("ecology", "lambda_cap2", Range::NonNegative),
    ("ecology", "beta1", Range::NonNegative),
    ("ecology", "beta2", Range::Probability),
    ("ecology", "mu2", Range::NonNegative),
    ("ecology", "mu3", Range::NonNegative),
    ("ecology", "mu4", Range::NonNegative),
    ("ecology", "delta2", Range::NonNegative),
    ("ecology", "lambda1", Range::NonNegative),
    ("ecology", "lambda2", Range::NonNegative),
    ("ecology", "alpha1", Range::NonNegative),
    ("ecology", "m0", Range::NonNegative),
    ("ecology", "epsilon", Range::NonNegative),
    ("ecology", "chi", Range::NonNegative),
    ("ecology", "k_eggs", Range::NonNegative),
    ("ecology", "eta", Range::NonNegative),
    ("ecology", "habitat_deficit_only", Range::Any),
    ("ecology", "n_veg_0", Range::NonNegative),
    ("ecology", "s_snails_0", Range::NonNegative),
    ("ecology", "i_snails_0", Range::NonNegative),
    ("ecology", "miracidia_0", Range::NonNegative),
    ("ecology", "cercariae_0", Range::NonNegative),
    ("household", "theta_f", Range::NonNegative),
    ("household", "theta_g", Range::NonNegative),
    ("household", "theta_h", Range::NonNegative),
    ("household", "theta_l", Range::NonNegative),
    ("household", "h_f", Range::NonNegative),
    ("household", "alpha_d", Range::NonNegative),
    ("household", "alpha_l", Range::NonNegative),
    ("household", "alpha_u", Range::NonNegative),
    ("household", "alpha_v", Range::NonNegative),
    ("household", "phi", Range::OpenUnit),
    ("household", "omega", Range::OpenUnit),
    ("household", "beta_v", Range::NonNegative),
    ("household", "gamma1", Range::HalfOpenUnit),
    ("household", "scale_f", Range::Positive),
    ("household", "tau", Range::HalfOpenUnit),
    ("household", "fert_max_per_ha", Range::NonNegative),
    ("prices", "p_f", Range::Positive),
    ("prices", "p_g", Range::Positive),
    ("prices", "p_u", Range::Positive),
    ("experiment", "replicates", Range::Count),
    ("experiment", "sweep_replicates", Range::Count),
    ("experiment", "rho_values", Range::NonNegative),
    ("experiment", "r_values", Range::NonNegative),
    ("experiment", "n0_values", Range::NonNegative),
    ("experiment", "p_u_values", Range::Positive),
    ("experiment", "p_h_values", Range::Positive),
    ("experiment", "prevalence_grid", Range::Probability),
];

fn get(cfg: &ConfigFile, section: &str, key: &str) -> Value {
    use Value::*;
    let s = &cfg.sim;
    let e = &cfg.experiment;
    match (section, key) {
        ("simulation", "years") => Int(s.years as u64),
        ("simulation", "members") => Int(s.members as u64),
        ("simulation", "land_ha") => Real(s.land_ha),
        ("simulation", "initial_prevalence") => Real(s.initial_prevalence),
        ("simulation", "cure_prob") => Real(s.cure_prob),
        ("simulation", "allow_harvest") => Flag(s.allow_harvest),
        ("simulation", "draw_susceptible_only") => Flag(s.draw_scope == DrawScope::SusceptibleOnly),
        ("simulation", "dt") => Real(s.dt),
        ("simulation", "seed") => Int(s.seed),
        ("ecology", "r") => Real(s.eco.r),
        ("ecology", "cap_k") => Real(s.eco.cap_k),
        ("ecology", "rho") => Real(s.eco.rho),
        ("ecology", "n0") => Real(s.eco.n0),
        ("ecology", "lambda_cap2") => Real(s.eco.lambda_cap2),
        ("ecology", "beta1") => Real(s.eco.beta1),
        ("ecology", "beta2") => Real(s.eco.beta2),
        ("ecology", "mu2") => Real(s.eco.mu2),
        ("ecology", "mu3") => Real(s.eco.mu3),
        ("ecology", "mu4") => Real(s.eco.mu4),
        ("ecology", "delta2") => Real(s.eco.delta2),
        ("ecology", "lambda1") => Real(s.eco.lambda1),
        ("ecology", "lambda2") => Real(s.eco.lambda2),
        ("ecology", "alpha1") => Real(s.eco.alpha1),
        ("ecology", "m0") => Real(s.eco.m0),
        ("ecology", "epsilon") => Real(s.eco.epsilon),
        ("ecology", "chi") => Real(s.eco.chi),
        ("ecology", "k_eggs") => Real(s.eco.k_eggs),
        ("ecology", "eta") => Real(s.eco.eta),
        ("ecology", "habitat_deficit_only") => Flag(s.eco.coupling == HabitatCoupling::Deficit),
        ("ecology", "n_veg_0") => Real(s.initial.n_veg),
        ("ecology", "s_snails_0") => Real(s.initial.s_snails),
        ("ecology", "i_snails_0") => Real(s.initial.i_snails),
        ("ecology", "miracidia_0") => Real(s.initial.miracidia),
        ("ecology", "cercariae_0") => Real(s.initial.cercariae),
        ("household", "theta_f") => Real(s.hh.theta_f),
        ("household", "theta_g") => Real(s.hh.theta_g),
        ("household", "theta_h") => Real(s.hh.theta_h),
        ("household", "theta_l") => Real(s.hh.theta_l),
        ("household", "h_f") => Real(s.hh.h_f),
        ("household", "alpha_d") => Real(s.hh.alpha_d),
        ("household", "alpha_l") => Real(s.hh.alpha_l),
        ("household", "alpha_u") => Real(s.hh.alpha_u),
        ("household", "alpha_v") => Real(s.hh.alpha_v),
        ("household", "phi") => Real(s.hh.phi),
        ("household", "omega") => Real(s.hh.omega),
        ("household", "beta_v") => Real(s.hh.beta_v),
        ("household", "gamma1") => Real(s.hh.gamma1),
        ("household", "scale_f") => Real(s.hh.scale_f),
        ("household", "tau") => Real(s.hh.tau),
        ("household", "fert_max_per_ha") => Real(s.hh.fert_max_per_ha),
        ("prices", "p_f") => Real(s.prices.p_f),
        ("prices", "p_g") => Real(s.prices.p_g),
        ("prices", "p_u") => Real(s.prices.p_u),
        ("experiment", "replicates") => Int(e.replicates as u64),
        ("experiment", "sweep_replicates") => Int(e.sweep_replicates as u64),
        ("experiment", "rho_values") => List(e.rho_values.clone()),
        ("experiment", "r_values") => List(e.r_values.clone()),
        ("experiment", "n0_values") => List(e.n0_values.clone()),
        ("experiment", "p_u_values") => List(e.p_u_values.clone()),
        ("experiment", "p_h_values") => List(e.p_h_values.clone()),
        ("experiment", "prevalence_grid") => List(e.prevalence_grid.clone()),
        _ => unreachable!("key table and accessors disagree on {section}.{key}"),
    }
}

fn set(cfg: &mut ConfigFile, section: &str, key: &str, value: Value) {
    let s = &mut cfg.sim;
    let e = &mut cfg.experiment;
    match value {
        Value::Real(x) => {
            let slot = match (section, key) {
                ("simulation", "land_ha") => &mut s.land_ha,
                ("simulation", "initial_prevalence") => &mut s.initial_prevalence,
                ("simulation", "cure_prob") => &mut s.cure_prob,
                ("simulation", "dt") => &mut s.dt,
                ("ecology", "r") => &mut s.eco.r,
                ("ecology", "cap_k") => &mut s.eco.cap_k,
                ("ecology", "rho") => &mut s.eco.rho,
                ("ecology", "n0") => &mut s.eco.n0,
                ("ecology", "lambda_cap2") => &mut s.eco.lambda_cap2,
                ("ecology", "beta1") => &mut s.eco.beta1,
                ("ecology", "beta2") => &mut s.eco.beta2,
                ("ecology", "mu2") => &mut s.eco.mu2,
                ("ecology", "mu3") => &mut s.eco.mu3,
                ("ecology", "mu4") => &mut s.eco.mu4,
                ("ecology", "delta2") => &mut s.eco.delta2,
                ("ecology", "lambda1") => &mut s.eco.lambda1,
                ("ecology", "lambda2") => &mut s.eco.lambda2,
                ("ecology", "alpha1") => &mut s.eco.alpha1,
                ("ecology", "m0") => &mut s.eco.m0,
                ("ecology", "epsilon") => &mut s.eco.epsilon,
                ("ecology", "chi") => &mut s.eco.chi,
                ("ecology", "k_eggs") => &mut s.eco.k_eggs,
                ("ecology", "eta") => &mut s.eco.eta,
                ("ecology", "n_veg_0") => &mut s.initial.n_veg,
                ("ecology", "s_snails_0") => &mut s.initial.s_snails,
                ("ecology", "i_snails_0") => &mut s.initial.i_snails,
                ("ecology", "miracidia_0") => &mut s.initial.miracidia,
                ("ecology", "cercariae_0") => &mut s.initial.cercariae,
                ("household", "theta_f") => &mut s.hh.theta_f,
                ("household", "theta_g") => &mut s.hh.theta_g,
                ("household", "theta_h") => &mut s.hh.theta_h,
                ("household", "theta_l") => &mut s.hh.theta_l,
                ("household", "h_f") => &mut s.hh.h_f,
                ("household", "alpha_d") => &mut s.hh.alpha_d,
                ("household", "alpha_l") => &mut s.hh.alpha_l,
                ("household", "alpha_u") => &mut s.hh.alpha_u,
                ("household", "alpha_v") => &mut s.hh.alpha_v,
                ("household", "phi") => &mut s.hh.phi,
                ("household", "omega") => &mut s.hh.omega,
                ("household", "beta_v") => &mut s.hh.beta_v,
                ("household", "gamma1") => &mut s.hh.gamma1,
                ("household", "scale_f") => &mut s.hh.scale_f,
                ("household", "tau") => &mut s.hh.tau,
                ("household", "fert_max_per_ha") => &mut s.hh.fert_max_per_ha,
                ("prices", "p_f") => &mut s.prices.p_f,
                ("prices", "p_g") => &mut s.prices.p_g,
                ("prices", "p_u") => &mut s.prices.p_u,
                _ => unreachable!("{section}.{key} is not real-valued"),
            };
            *slot = x;
        }
        Value::Int(n) => match (section, key) {
            ("simulation", "years") => s.years = n as u32,
            ("simulation", "members") => s.members = n as u32,
            ("simulation", "seed") => s.seed = n,
            ("experiment", "replicates") => e.replicates = n as usize,
            ("experiment", "sweep_replicates") => e.sweep_replicates = n as usize,
            _ => unreachable!("{section}.{key} is not an integer"),
        },
        Value::Flag(b) => match (section, key) {
            ("simulation", "allow_harvest") => s.allow_harvest = b,
            ("simulation", "draw_susceptible_only") => {
                s.draw_scope = if b {
                    DrawScope::SusceptibleOnly
                } else {
                    DrawScope::AllMembers
                }
            }
            ("ecology", "habitat_deficit_only") => {
                s.eco.coupling = if b {
                    HabitatCoupling::Deficit
                } else {
                    HabitatCoupling::Signed
                }
            }
            _ => unreachable!("{section}.{key} is not a flag"),
        },
        Value::List(v) => {
            let slot = match (section, key) {
                ("experiment", "rho_values") => &mut e.rho_values,
                ("experiment", "r_values") => &mut e.r_values,
                ("experiment", "n0_values") => &mut e.n0_values,
                ("experiment", "p_u_values") => &mut e.p_u_values,
                ("experiment", "p_h_values") => &mut e.p_h_values,
                ("experiment", "prevalence_grid") => &mut e.prevalence_grid,
                _ => unreachable!("{section}.{key} is not a list"),
            };
            *slot = v;
        }
    }
}

fn parse_real(text: &str) -> std::result::Result<f64, String> {
    let x: f64 = text.parse().map_err(|_| format!("`{text}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{text}` is not a finite number"))
    }
}

fn parse_value(kind: &Value, text: &str, range: Range) -> std::result::Result<Value, String> {
    let value = match kind {
        Value::Real(_) => {
            let x = parse_real(text)?;
            range.check(x)?;
            Value::Real(x)
        }
        Value::Int(_) => {
            let n: u64 = text
                .parse()
                .map_err(|_| format!("`{text}` is not a non-negative integer"))?;
            range.check(n as f64)?;
            if !matches!(range, Range::Any) && n > u32::MAX as u64 {
                return Err(format!("value {n} is too large"));
            }
            Value::Int(n)
        }
        Value::Flag(_) => match text {
            "true" => Value::Flag(true),
            "false" => Value::Flag(false),
            _ => return Err(format!("`{text}` is not true or false")),
        },
        Value::List(_) => {
            let items = text
                .split(',')
                .map(|t| parse_real(t.trim()).and_then(|x| range.check(x).map(|_| x)))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            for (i, x) in items.iter().enumerate() {
                if items[..i].contains(x) {
                    return Err(format!("value {x} is repeated"));
                }
            }
            Value::List(items)
        }
    };
    Ok(value)
}

/// Parses a configuration file, applying defaults for absent keys.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let mut cfg = ConfigFile::default();
    let mut section: Option<&str> = None;
    let mut section_lines: Vec<(&str, usize)> = Vec::new();
    let mut seen: Vec<(&str, &str)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| Error::Config {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(format!("malformed section header `{line}`")))?
                .trim();
            let known = SECTIONS.iter().find(|s| **s == name).ok_or_else(|| {
                err(format!(
                    "unknown section [{name}]; expected one of {}",
                    SECTIONS.join(", ")
                ))
            })?;
            if section_lines.iter().any(|(s, _)| s == known) {
                return Err(err(format!("section [{name}] appears twice")));
            }
            section = Some(known);
            section_lines.push((known, line_no));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| err(format!("key `{key}` appears before any section")))?;
        let (_, name, range) = KEYS
            .iter()
            .find(|(s, k, _)| *s == sec && *k == key)
            .ok_or_else(|| err(format!("unknown key `{key}` in [{sec}]")))?;
        if seen.contains(&(sec, name)) {
            return Err(err(format!("key `{key}` repeated in [{sec}]")));
        }
        seen.push((sec, name));
        let kind = get(&cfg, sec, name);
        let parsed = parse_value(&kind, value, *range).map_err(|m| err(format!("{key}: {m}")))?;
        set(&mut cfg, sec, name, parsed);
    }

    let line_of = |sec: &str| {
        section_lines
            .iter()
            .find(|(s, _)| *s == sec)
            .map(|(_, l)| *l)
            .unwrap_or(0)
    };
    let whole = |sec: &str, r: Result<()>| {
        r.map_err(|e| Error::Config {
            line: line_of(sec),
            message: e.to_string(),
        })
    };
    whole("ecology", cfg.sim.eco.validate())?;
    whole("household", cfg.sim.hh.validate())?;
    whole("prices", cfg.sim.prices.validate())?;
    whole("simulation", cfg.sim.validate())?;
    Ok(cfg)
}

/// Renders every key with its current value; `parse_config` of the result
/// reproduces `cfg` exactly.
pub fn render_config(cfg: &ConfigFile) -> String {
    let mut out = String::new();
    let mut current = "";
    for (section, key, _) in KEYS {
        if *section != current {
            if !current.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "[{section}]");
            current = section;
        }
        let text = match get(cfg, section, key) {
            Value::Real(x) => format!("{x}"),
            Value::Int(n) => n.to_string(),
            Value::Flag(b) => b.to_string(),
            Value::List(v) => v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", "),
        };
        let _ = writeln!(out, "{key} = {text}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), ConfigFile::default());
        assert_eq!(
            parse_config("# only a comment\n\n").unwrap(),
            ConfigFile::default()
        );
    }

    #[test]
    fn values_are_applied() {
        let cfg = parse_config(
            "[simulation]\nyears = 3\nallow_harvest = false\n[household]\ntau = 0.25 # inline\n\
             [experiment]\nrho_values = 0, 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.sim.years, 3);
        assert!(!cfg.sim.allow_harvest);
        assert_eq!(cfg.sim.hh.tau, 0.25);
        assert_eq!(cfg.experiment.rho_values, vec![0.0, 0.5]);
    }

    #[test]
    fn range_error_names_line() {
        let err = parse_config("[household]\n\ntau = 1.5\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("tau"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn strictness() {
        let line = |text: &str| match parse_config(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(line("[simulation]\nbogus = 1\n"), 2);
        assert_eq!(line("years = 1\n"), 1);
        assert_eq!(line("[nowhere]\n"), 1);
        assert_eq!(line("[simulation]\nyears = 1\nyears = 2\n"), 3);
        assert_eq!(line("[simulation]\nland_ha = abc\n"), 2);
        assert_eq!(line("[simulation]\ncure_prob = 1.1\n"), 2);
        assert_eq!(line("[simulation]\nallow_harvest = yes\n"), 2);
        assert_eq!(line("[simulation]\nyears = 2.5\n"), 2);
        assert_eq!(line("[experiment]\nrho_values = 0.1, 0.1\n"), 2);
        // cross-field failures point at the section header
        assert_eq!(line("\n[household]\ntheta_f = 0.5\n"), 2);
    }

    #[test]
    fn render_round_trips_defaults() {
        let cfg = ConfigFile::default();
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
    }
}
