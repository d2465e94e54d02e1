//! Flat `key=value` run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, exactly as given.
    pub args: Vec<String>,
    /// Working directory the arguments are relative to.
    pub cwd: PathBuf,
    pub instance: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub solver: Option<String>,
    pub config_digest: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_s: f64,
}

pub fn digest(config: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(config).expect("json values serialize");
    Sha256::digest(&bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn join_paths(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        put("command", self.command.clone());
        put("args", serde_json::to_string(&self.args).expect("strings serialize"));
        put("cwd", self.cwd.display().to_string());
        put("instance", self.instance.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        put("seeds", self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
        put("solver", self.solver.clone().unwrap_or_default());
        put("config_digest", self.config_digest.clone());
        put("outputs", join_paths(&self.outputs));
        put("wall_clock_s", format!("{:.6}", self.wall_clock_s));
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut m = RunManifest {
            command: String::new(),
            args: Vec::new(),
            cwd: PathBuf::from("."),
            instance: None,
            seeds: Vec::new(),
            solver: None,
            config_digest: String::new(),
            outputs: Vec::new(),
            wall_clock_s: 0.0,
        };
        let mut seen_args = false;
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| format!("manifest line {}: {msg}", k + 1);
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key=value".into()))?;
            let some = |v: &str| (!v.is_empty()).then(|| v.to_string());
            match key {
                "command" => m.command = value.to_string(),
                "args" => {
                    m.args = serde_json::from_str(value).map_err(|e| err(format!("args: {e}")))?;
                    seen_args = true;
                }
                "cwd" => m.cwd = PathBuf::from(value),
                "instance" => m.instance = some(value).map(PathBuf::from),
                "seeds" => {
                    m.seeds = value
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse().map_err(|_| err(format!("bad seed `{s}`"))))
                        .collect::<Result<_, _>>()?
                }
                "solver" => m.solver = some(value),
                "config_digest" => m.config_digest = value.to_string(),
                "outputs" => m.outputs = value.split(',').filter(|s| !s.is_empty()).map(PathBuf::from).collect(),
                "wall_clock_s" => m.wall_clock_s = value.parse().map_err(|_| err("bad wall_clock_s".into()))?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        if !seen_args {
            return Err("manifest has no args line".into());
        }
        Ok(m)
    }
}

/// Manifest written next to a command's primary output.
pub fn path_for(primary: &Path) -> PathBuf {
    primary.with_extension("manifest")
}
