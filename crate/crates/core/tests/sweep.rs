mod common;

use std::fs;
use std::path::Path;
use std::time::SystemTime;

use fracks::runner::{run, sweep, RunConfig, SweepAxes, SweepConfig, PHASE_HEADER};

fn base() -> RunConfig {
    RunConfig::from_toml(
        r#"
schema_version = 1
alpha = 1.0
chi = 1.0
frame = "physical"
horizon = 0.3
observation_interval = 0.1
output_dir = "unused"
c_hat = 0.8

[grid]
n = 256
half_width = 20.0

[initial]
family = "gaussian"
mass = 1.0
scale = 1.0
"#,
    )
    .unwrap()
}

fn sweep_config(out: &Path, mass: Vec<f64>, scale: Vec<f64>) -> SweepConfig {
    SweepConfig {
        schema_version: 1,
        output_dir: out.to_path_buf(),
        parallelism: 2,
        axes: SweepAxes {
            alpha: vec![1.0],
            mass,
            scale,
        },
        base: base(),
    }
}

#[test]
fn single_cell_sweep_matches_a_direct_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_config(&dir.path().join("sweep"), vec![1.5], vec![0.75]);
    let points = sweep(&cfg).unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0].status, "ok");

    let mut direct = base();
    direct.initial.mass = 1.5;
    direct.initial.scale = 0.75;
    direct.output_dir = dir.path().join("direct");
    run(&direct).unwrap();

    let cell = &cfg.cells()[0].config.output_dir;
    for f in ["diagnostics.csv", "criteria.csv", "summary"] {
        assert_eq!(
            fs::read(cell.join(f)).unwrap(),
            fs::read(direct.output_dir.join(f)).unwrap(),
            "{f}"
        );
    }
    let phase = fs::read_to_string(dir.path().join("sweep/phase.csv")).unwrap();
    assert_eq!(phase.lines().next(), Some(PHASE_HEADER));
    assert_eq!(phase.lines().count(), 2);
}

fn stamps(cfg: &SweepConfig) -> Vec<(Vec<u8>, SystemTime)> {
    cfg.cells()
        .iter()
        .flat_map(|c| {
            ["diagnostics.csv", "summary"].map(|f| {
                let p = c.config.output_dir.join(f);
                (fs::read(&p).unwrap(), fs::metadata(&p).unwrap().modified().unwrap())
            })
        })
        .collect()
}

#[test]
fn resumed_sweep_leaves_finished_cells_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_config(&dir.path().join("sweep"), vec![0.5, 1.0], vec![1.0]);
    let first = sweep(&cfg).unwrap();
    let before = stamps(&cfg);
    let again = sweep(&cfg).unwrap();
    assert_eq!(first, again);
    assert_eq!(before, stamps(&cfg));

    // an interrupted cell (no summary) is recomputed, the finished one is not
    let cells = cfg.cells();
    fs::remove_file(cells[1].config.output_dir.join("summary")).unwrap();
    let kept = fs::metadata(cells[0].config.output_dir.join("summary"))
        .unwrap()
        .modified()
        .unwrap();
    let resumed = sweep(&cfg).unwrap();
    assert_eq!(resumed, first);
    assert_eq!(
        fs::metadata(cells[0].config.output_dir.join("summary"))
            .unwrap()
            .modified()
            .unwrap(),
        kept
    );
    assert!(cells[1].config.output_dir.join("summary").is_file());
}

#[test]
fn phase_rows_follow_cell_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_config(&dir.path().join("sweep"), vec![0.5, 1.0], vec![0.5, 1.0]);
    let points = sweep(&cfg).unwrap();
    let cells = cfg.cells();
    assert_eq!(points.len(), 4);
    for (p, c) in points.iter().zip(&cells) {
        assert_eq!((p.mass, p.scale), (c.mass, c.scale));
        assert_eq!(p.smallness_satisfied, Some(true));
        assert_eq!(p.blowup_satisfied, None);
    }
}
