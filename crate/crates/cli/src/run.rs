use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};

/// Output directory of one command invocation.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
}

#[derive(Serialize)]
struct RunInfo<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config_hash: String,
    seed: u64,
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("cannot write {}: {e}", path.display()))
}

impl RunDir {
    /// Creates `<output>/<command>-<UTC timestamp>` (with a numeric suffix
    /// if taken) holding the resolved config and `run.json`.
    pub fn create(config: &PipelineConfig, command: &str) -> CliResult<Self> {
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
        let base = config.paths.output.join(format!("{command}-{stamp}"));
        let mut path = base.clone();
        let mut k = 1;
        while path.exists() {
            k += 1;
            path = PathBuf::from(format!("{}-{k}", base.display()));
        }
        std::fs::create_dir_all(&path).map_err(|e| io_error(&path, e))?;
        let run = RunDir { path };
        run.write_text("config.toml", &config.to_toml())?;
        run.write_json(
            "run.json",
            &RunInfo {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command,
                config_hash: config.hash(),
                seed: config.seed,
            },
        )?;
        Ok(run)
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn subdir(&self, name: &str) -> CliResult<PathBuf> {
        let p = self.file(name);
        std::fs::create_dir_all(&p).map_err(|e| io_error(&p, e))?;
        Ok(p)
    }

    pub fn write_text(&self, name: &str, text: &str) -> CliResult<()> {
        let p = self.file(name);
        std::fs::write(&p, text).map_err(|e| io_error(&p, e))
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }
}
