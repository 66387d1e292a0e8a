//! Run records: provenance for every command invocation.

use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    /// SHA-256 of the scenario file bytes.
    pub config_digest: Option<String>,
    pub tool_version: &'static str,
    pub duration_seconds: f64,
    pub seed: Option<u64>,
    pub threads: usize,
    pub outputs: Value,
}

impl RunRecord {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            config_digest: None,
            tool_version: env!("CARGO_PKG_VERSION"),
            duration_seconds: 0.0,
            seed: None,
            threads: rayon::current_num_threads(),
            outputs: Value::Null,
        }
    }

    pub fn with_config(mut self, text: &str) -> Self {
        self.config_digest = Some(digest(text.as_bytes()));
        self
    }

    pub fn finish(mut self, seed: Option<u64>, elapsed: Duration, outputs: Value) -> Self {
        self.seed = seed;
        self.duration_seconds = elapsed.as_secs_f64();
        self.outputs = outputs;
        self
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            digest(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
