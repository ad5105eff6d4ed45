//! Run manifest: what ran, with what inputs and settings, and what came
//! out. Written last so a complete manifest implies a complete run.

use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::Serialize;

#[derive(Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub inputs: Vec<String>,
    pub analysis_config: crackle::AnalysisConfig,
    pub output_dir: String,
    pub rng_seed: u64,
    /// Unix seconds; omitted under --no-timestamp.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    /// Wall-clock per stage, milliseconds; omitted under --no-timestamp.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage_millis: Option<Vec<(String, u128)>>,
    /// Every file the run wrote, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        inputs: Vec<String>,
        config: &crackle::AnalysisConfig,
        out_dir: &Path,
        no_timestamp: bool,
    ) -> RunManifest {
        RunManifest {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            analysis_config: config.clone(),
            output_dir: out_dir.display().to_string(),
            rng_seed: config.rng_seed,
            timestamp: if no_timestamp {
                None
            } else {
                Some(
                    SystemTime::now()
                        .duration_since(SystemTime::UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0),
                )
            },
            stage_millis: if no_timestamp { None } else { Some(Vec::new()) },
            outputs: Vec::new(),
        }
    }

    pub fn record_stage(&mut self, name: &str, millis: u128) {
        if let Some(stages) = &mut self.stage_millis {
            stages.push((name.to_string(), millis));
        }
    }

    pub fn record_output(&mut self, out_dir: &Path, path: &Path) {
        let rel = path
            .strip_prefix(out_dir)
            .map(|p| p.to_path_buf())
            .unwrap_or_else(|_| PathBuf::from(path));
        self.outputs.push(rel.display().to_string());
    }

    /// Write the manifest itself (always the final output of a run).
    pub fn write(&mut self, out_dir: &Path) -> anyhow::Result<PathBuf> {
        self.outputs.push("manifest.json".to_string());
        self.outputs.sort();
        let path = out_dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self)?;
        crate::output::write_atomic(&path, json.as_bytes())?;
        Ok(path)
    }
}
