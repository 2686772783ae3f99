//! JSON reports and the plain-text artifacts written next to them.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use isospec_core::Result;

use crate::config::RunConfig;

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&p, contents)?;
        Ok(p)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(name, &s)
    }
}

/// `{command, config, config_hash, versions, results[, wall_time_s]}`.
pub fn report(command: &str, config: &RunConfig, results: Value, wall_time: Option<f64>) -> Value {
    let mut v = json!({
        "command": command,
        "config": config,
        "config_hash": config.hash(),
        "versions": {
            "isospec": env!("CARGO_PKG_VERSION"),
            "isospec-core": isospec_core::VERSION,
        },
        "results": results,
    });
    if let Some(t) = wall_time {
        v["wall_time_s"] = json!(t);
    }
    v
}
