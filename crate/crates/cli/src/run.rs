use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::manifest::{sha256_hex, FileEntry, RunManifest, Status};
use crate::suites::run_suite;

/// Runs the configured suite on `workers` threads and writes artifacts and the
/// manifest into the output directory. The manifest is written before the
/// suite starts and rewritten with the final status.
pub fn run(cfg: &ExperimentConfig, workers: usize) -> Result<RunManifest> {
    let workers = workers.max(1);
    let dir = &cfg.out;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut manifest = RunManifest::started(cfg, workers);
    manifest.write(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let outcome = pool.install(|| run_suite(cfg)).and_then(|out| {
        let mut files = Vec::new();
        for a in &out.artifacts {
            let path = dir.join(&a.name);
            std::fs::write(&path, &a.bytes).map_err(|e| CliError::io(&path, e))?;
            files.push(FileEntry {
                path: a.name.clone(),
                bytes: a.bytes.len() as u64,
                sha256: sha256_hex(&a.bytes),
            });
        }
        Ok((out.seeds, files))
    });
    match outcome {
        Ok((seeds, files)) => {
            manifest.seeds = seeds;
            manifest.files = files;
            manifest.status = Status::Completed;
            manifest.write(dir)?;
            Ok(manifest)
        }
        Err(e) => {
            manifest.status = Status::Failed;
            manifest.error = Some(e.report().into());
            manifest.write(dir)?;
            Err(e)
        }
    }
}
