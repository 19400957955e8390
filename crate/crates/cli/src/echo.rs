use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

use crate::Global;

/// The full invocation as JSON: subcommand, its arguments and the global
/// flags. Enough to rerun the command.
pub fn config_echo<A: Serialize>(command: &str, global: &Global, args: &A) -> anyhow::Result<Value> {
    Ok(json!({
        "tool": "pitchnet",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "global": serde_json::to_value(global)?,
        "args": serde_json::to_value(args)?,
    }))
}

/// `out.csv` -> `out.config.json`; a directory gets `config.json` inside.
pub fn echo_path(artifact: &Path) -> PathBuf {
    if artifact.is_dir() {
        artifact.join("config.json")
    } else {
        artifact.with_extension("config.json")
    }
}

pub fn write_echo(artifact: &Path, echo: &Value) -> anyhow::Result<()> {
    let path = echo_path(artifact);
    let text = serde_json::to_string_pretty(echo)? + "\n";
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
