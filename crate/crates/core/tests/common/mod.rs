//! Helpers shared by the integration tests and the acceptance report.
#![allow(dead_code)]

use std::fs;
use std::path::Path;
use std::sync::Arc;

use fracks::analysis::{read_diagnostics_csv, DiagnosticsRow};
use fracks::spectral::{Field, Grid};

/// Diagnostics rows of a run directory.
pub fn diagnostics(dir: &Path) -> Vec<DiagnosticsRow> {
    let file = fs::File::open(dir.join("diagnostics.csv")).expect("diagnostics.csv");
    read_diagnostics_csv(std::io::BufReader::new(file)).expect("parse diagnostics")
}

/// Snapshots of a run directory, sorted by time.
pub fn snapshots(dir: &Path, grid: &Arc<Grid>) -> Vec<(f64, Field)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir.join("snapshots")).expect("snapshots dir") {
        let path = entry.expect("dir entry").path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let t: f64 = name
            .strip_prefix("t_")
            .and_then(|s| s.strip_suffix(".csv"))
            .expect("snapshot name")
            .parse()
            .expect("snapshot time");
        let text = fs::read_to_string(&path).expect("snapshot");
        let values: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).expect("value column").parse().expect("value"))
            .collect();
        out.push((t, Field::new(grid.clone(), values).expect("snapshot field")));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Map of a `key=value` summary file.
pub fn summary(dir: &Path) -> std::collections::BTreeMap<String, String> {
    fracks::runner::read_summary(&dir.join("summary")).expect("summary")
}
