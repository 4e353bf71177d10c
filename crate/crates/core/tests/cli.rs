use std::path::Path;
use std::process::{Command, Output};

use schisto_core::output::read_summary_csv;

fn schisto(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schisto"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_writes_summary_and_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = schisto(
        &["run", "--reps", "3", "--years", "2", "--out", "res"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("res/summary.csv")).unwrap();
    let rows = read_summary_csv(&text).unwrap();
    // six cells, two years, ten outcomes
    assert_eq!(rows.len(), 6 * 2 * 10);
    assert!(rows.iter().all(|r| r.replicates == 3));

    let effective = std::fs::read_to_string(dir.path().join("res/effective_config.txt")).unwrap();
    let cfg = schisto_core::config::parse_config(&effective).unwrap();
    assert_eq!(cfg.sim.years, 2);
    assert_eq!(cfg.experiment.replicates, 3);
}

#[test]
fn config_file_and_single_cell() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.txt"),
        "[simulation]\nyears = 2\nland_ha = 5.5\n",
    )
    .unwrap();
    let out = schisto(
        &[
            "run",
            "--config",
            "c.txt",
            "--no-harvest",
            "--reps",
            "2",
            "--per-replicate",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_summary_csv(&std::fs::read_to_string(dir.path().join("o/summary.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * 10);
    assert!(rows
        .iter()
        .all(|r| r.scenario == "no_harvest" && r.land_ha == 5.5));
    let per_rep: Vec<_> = std::fs::read_dir(dir.path().join("o"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("replicates"))
        .collect();
    assert_eq!(per_rep.len(), 1);
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.txt"), "[household]\n\ntau = 1.5\n").unwrap();
    let out = schisto(&["run", "--config", "c.txt"], dir.path());
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("line 3") && err.contains("tau"), "{err}");
}

#[test]
fn unknown_flag_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = schisto(&["run", "--bogus"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn plot_on_missing_file_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = schisto(&["plot", "--summary", "nope.csv", "--out", "f.svg"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("nope.csv"));
}

#[test]
fn sweep_and_infection_sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = schisto(
        &[
            "sweep", "--param", "p_u", "--values", "150,300", "--reps", "2", "--years", "2", "--out", "s",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_summary_csv(&std::fs::read_to_string(dir.path().join("s/summary.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 10);
    assert!(rows.iter().all(|r| r.param == "p_u"));

    let out = schisto(
        &[
            "infection-sweep",
            "--grid",
            "0,0.5,1",
            "--reps",
            "2",
            "--out",
            "i",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = std::fs::read_to_string(dir.path().join("i/infection_sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);

    let out = schisto(&["sweep", "--param", "nope"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn steady_state_reports_and_writes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = schisto(&["steady-state", "--years", "1", "--out", "ss"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("prevalence"), "{stdout}");
    let samples = std::fs::read_to_string(dir.path().join("ss/steady_state.csv")).unwrap();
    // day 0 plus every fifth day of the year
    assert_eq!(samples.lines().count(), 1 + 1 + 73);
}

#[test]
fn plot_renders_valid_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = schisto(&["run", "--reps", "3", "--years", "3", "--out", "r"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = schisto(
        &[
            "plot",
            "--summary",
            "r/summary.csv",
            "--out",
            "fig.svg",
            "--group-by",
            "cell",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let svg = std::fs::read_to_string(dir.path().join("fig.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(root.tag_name().namespace(), Some("http://www.w3.org/2000/svg"));
    let count = |tag: &str| doc.descendants().filter(|n| n.has_tag_name(tag)).count();
    // five default panels, six cells each
    assert_eq!(count("polyline"), 5 * 6);
    assert_eq!(count("polygon"), 5 * 6);
    assert!(doc.descendants().filter(|n| n.has_tag_name("polyline")).all(|n| n
        .attribute("points")
        .is_some_and(|p| p.split_whitespace().count() == 3)));
    // no external references
    assert!(!svg.contains("href"));

    let out = schisto(
        &[
            "plot",
            "--summary",
            "r/summary.csv",
            "--out",
            "x.svg",
            "--panels",
            "not_an_outcome",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("infection_rate"));
}
