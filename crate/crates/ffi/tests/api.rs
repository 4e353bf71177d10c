use std::ffi::{CStr, CString};
use std::ptr;

use schisto_ffi::*;

fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { schisto_string_free(p) };
    s
}

fn last_error() -> String {
    take_string(schisto_last_error())
}

fn short_config() -> *mut SchistoConfig {
    let cfg = schisto_config_default();
    unsafe {
        assert_eq!(schisto_config_set_years(cfg, 3), SchistoStatus::Ok);
        assert_eq!(schisto_config_set_seed(cfg, 11), SchistoStatus::Ok);
    }
    cfg
}

#[test]
fn trajectory_round_trip() {
    let cfg = short_config();
    let mut traj = ptr::null_mut();
    unsafe {
        assert_eq!(schisto_run_trajectory(cfg, 0, &mut traj), SchistoStatus::Ok);
        assert_eq!(schisto_trajectory_len(traj), 3);
        let mut rec = SchistoPeriodRecord::default();
        assert_eq!(schisto_trajectory_record(traj, 2, &mut rec), SchistoStatus::Ok);
        assert_eq!(rec.year, 3);
        assert!(rec.infected <= 10);
        assert!(rec.fert_per_ha >= 0.0 && rec.veg_stock > 0.0);

        assert_eq!(
            schisto_trajectory_record(traj, 3, &mut rec),
            SchistoStatus::InvalidArgument
        );
        assert!(last_error().contains("out of range"));

        // Same replicate index, same draws.
        let mut again = ptr::null_mut();
        assert_eq!(schisto_run_trajectory(cfg, 0, &mut again), SchistoStatus::Ok);
        let mut a = SchistoPeriodRecord::default();
        let mut b = SchistoPeriodRecord::default();
        for i in 0..3 {
            schisto_trajectory_record(traj, i, &mut a);
            schisto_trajectory_record(again, i, &mut b);
            assert_eq!(a.infected, b.infected);
            assert_eq!(a.utility.to_bits(), b.utility.to_bits());
        }
        schisto_trajectory_free(again);
        schisto_trajectory_free(traj);
        schisto_config_free(cfg);
    }
}

#[test]
fn null_handles_are_reported() {
    let mut traj = ptr::null_mut();
    unsafe {
        assert_eq!(
            schisto_run_trajectory(ptr::null(), 0, &mut traj),
            SchistoStatus::NullPointer
        );
        assert!(last_error().contains("cfg"));
        assert_eq!(schisto_trajectory_len(ptr::null()), 0);
        assert_eq!(schisto_summary_cells(ptr::null()), 0);
        schisto_config_free(ptr::null_mut());
        schisto_trajectory_free(ptr::null_mut());
        schisto_summary_free(ptr::null_mut());
        schisto_string_free(ptr::null_mut());
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    let text = CString::new("[simulation]\nyears = 4\nbogus = 1\n").unwrap();
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(
            schisto_config_parse(text.as_ptr(), &mut cfg),
            SchistoStatus::ConfigError
        );
        assert!(cfg.is_null());
    }
    assert!(last_error().contains('3'));
}

#[test]
fn render_then_parse_is_stable() {
    let cfg = short_config();
    unsafe {
        assert_eq!(schisto_config_set_land(cfg, 5.5), SchistoStatus::Ok);
        assert_eq!(schisto_config_set_land(cfg, -1.0), SchistoStatus::InvalidArgument);
        assert_eq!(schisto_config_set_years(cfg, 0), SchistoStatus::InvalidArgument);
        let mut text = ptr::null_mut();
        assert_eq!(schisto_config_render(cfg, &mut text), SchistoStatus::Ok);
        let first = take_string(text);

        let c = CString::new(first.clone()).unwrap();
        let mut parsed = ptr::null_mut();
        assert_eq!(schisto_config_parse(c.as_ptr(), &mut parsed), SchistoStatus::Ok);
        let mut text = ptr::null_mut();
        schisto_config_render(parsed, &mut text);
        assert_eq!(take_string(text), first);
        schisto_config_free(parsed);
        schisto_config_free(cfg);
    }
}

#[test]
fn monte_carlo_bands_are_ordered() {
    let cfg = short_config();
    let mut summary = ptr::null_mut();
    unsafe {
        assert_eq!(schisto_monte_carlo(cfg, 8, &mut summary), SchistoStatus::Ok);
        assert_eq!(schisto_summary_cells(summary), 1);
        let mut band = SchistoBand::default();
        for year in 1..=3 {
            assert_eq!(
                schisto_summary_band(summary, 0, year, SchistoMetric::FertPerHa, &mut band),
                SchistoStatus::Ok
            );
            assert!(band.p05 <= band.median && band.median <= band.p95);
        }
        assert_eq!(
            schisto_summary_band(summary, 0, 4, SchistoMetric::Utility, &mut band),
            SchistoStatus::InvalidArgument
        );
        assert_eq!(
            schisto_summary_band(summary, 1, 1, SchistoMetric::Utility, &mut band),
            SchistoStatus::InvalidArgument
        );

        let mut csv = ptr::null_mut();
        assert_eq!(schisto_summary_csv(summary, &mut csv), SchistoStatus::Ok);
        let csv = take_string(csv);
        assert_eq!(csv.lines().count(), 1 + 3 * 10);
        assert!(csv.starts_with("scenario,land_ha,param"));
        schisto_summary_free(summary);
        schisto_config_free(cfg);
    }
}

#[test]
fn scenario_suite_has_six_cells() {
    let cfg = short_config();
    let mut summary = ptr::null_mut();
    unsafe {
        assert_eq!(schisto_config_set_years(cfg, 1), SchistoStatus::Ok);
        assert_eq!(schisto_scenario_suite(cfg, 2, &mut summary), SchistoStatus::Ok);
        assert_eq!(schisto_summary_cells(summary), 6);
        schisto_summary_free(summary);
        schisto_config_free(cfg);
    }
}

#[test]
fn disabling_harvest_zeroes_veg_labor() {
    let cfg = short_config();
    let mut traj = ptr::null_mut();
    unsafe {
        assert_eq!(schisto_config_set_harvest(cfg, false), SchistoStatus::Ok);
        assert_eq!(schisto_run_trajectory(cfg, 0, &mut traj), SchistoStatus::Ok);
        let mut rec = SchistoPeriodRecord::default();
        schisto_trajectory_record(traj, 0, &mut rec);
        assert_eq!(rec.labor_veg, 0.0);
        assert_eq!(rec.q_v, 0.0);
        schisto_trajectory_free(traj);
        schisto_config_free(cfg);
    }
}

#[test]
fn steady_state_from_baseline() {
    let cfg = schisto_config_default();
    let mut report = SchistoSteadyState::default();
    unsafe {
        assert_eq!(schisto_steady_state(cfg, 3, &mut report), SchistoStatus::Ok);
        schisto_config_free(cfg);
    }
    assert!(report.steady);
    assert!((report.final_prevalence - 0.25).abs() < 0.01);
    assert!(report.final_year_drift.iter().all(|d| d.abs() < 1e-3));
}
