//! Writing a run to disk: one CSV per table plus `manifest.json`.

use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::ExperimentSpec;
use crate::experiments::{run_experiment, RunError, RunOutput};

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub file: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveTimes {
    pub count: usize,
    pub mean_s: f64,
    pub max_s: f64,
}

/// Run record. Timings live here only, so the CSVs of two runs with the same
/// configuration are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub library_version: &'static str,
    pub experiment: String,
    pub seed: u64,
    pub rng: &'static str,
    pub config: ExperimentSpec,
    pub files: Vec<FileEntry>,
    pub infeasible_points: usize,
    pub convexity_gate_failures: usize,
    pub solve_times: SolveTimes,
    pub threads: usize,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
}

const RNG_SCHEME: &str = "ChaCha8 seeded with `seed`; channel realization r uses stream r; \
Monte-Carlo runs use splitmix64-mixed seeds recorded in the mc_seed column";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Runs `spec` and writes its tables and manifest under `dir`.
pub fn run_to_dir(spec: &ExperimentSpec, dir: &Path, progress: bool) -> Result<Manifest, RunError> {
    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let output = run_experiment(spec, progress)?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();
    for table in &output.tables {
        table.write_csv(dir)?;
        files.push(FileEntry {
            file: format!("{}.csv", table.name),
            rows: table.rows.len(),
        });
    }
    let manifest = manifest(
        spec,
        &output,
        files,
        started_unix_s,
        clock.elapsed().as_secs_f64(),
    );
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(manifest)
}

fn manifest(
    spec: &ExperimentSpec,
    output: &RunOutput,
    files: Vec<FileEntry>,
    started_unix_s: u64,
    wall_clock_s: f64,
) -> Manifest {
    let times = &output.solve_seconds;
    let solve_times = SolveTimes {
        count: times.len(),
        mean_s: if times.is_empty() {
            0.0
        } else {
            times.iter().sum::<f64>() / times.len() as f64
        },
        max_s: times.iter().copied().fold(0.0, f64::max),
    };
    Manifest {
        tool: env!("CARGO_PKG_NAME"),
        tool_version: env!("CARGO_PKG_VERSION"),
        library_version: otfs_isac::VERSION,
        experiment: spec.kind.to_string(),
        seed: spec.seed,
        rng: RNG_SCHEME,
        config: spec.clone(),
        files,
        infeasible_points: output.infeasible_points,
        convexity_gate_failures: output.gate_failures,
        solve_times,
        threads: rayon::current_num_threads(),
        started_unix_s,
        wall_clock_s,
    }
}

/// Writes the state dump of a numerical failure to `dir/failure.json`.
pub fn write_failure(dir: &Path, dump: &serde_json::Value) -> std::io::Result<std::path::PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("failure.json");
    fs::write(
        &path,
        serde_json::to_string_pretty(dump).expect("json value serializes") + "\n",
    )?;
    Ok(path)
}
