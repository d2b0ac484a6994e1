//! Files written into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use nemo::experiment::TrialResult;
use serde::Serialize;

pub const CSV_HEADER: [&str; 13] = [
    "trial",
    "seed",
    "order",
    "l",
    "C",
    "beta",
    "tau",
    "backend",
    "tutoring_interval",
    "sentences_to_success",
    "tutoring_rounds",
    "wallclock_ms",
    "success",
];

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub build: &'static str,
    pub command: &'a str,
    pub argv: Vec<String>,
    pub seed: u64,
    pub threads: usize,
    pub config: &'a C,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub outcome: Option<serde_json::Value>,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(path).with_context(|| format!("cannot create {}", path.display()))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }

    /// One row per trial. `wallclock_ms` stays empty unless `timing` is set,
    /// which keeps equal runs byte-identical.
    pub fn write_trials_csv(
        &self,
        name: &str,
        trials: &[TrialResult],
        timing: bool,
    ) -> anyhow::Result<()> {
        let path = self.path(name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        w.write_record(CSV_HEADER)?;
        for t in trials {
            w.write_record(csv_row(t, timing))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn csv_row(t: &TrialResult, timing: bool) -> [String; 13] {
    [
        t.trial.to_string(),
        t.seed.to_string(),
        t.order.to_string(),
        t.l.to_string(),
        t.contexts.to_string(),
        t.beta.to_string(),
        t.tau.to_string(),
        t.backend.to_string(),
        t.tutoring_interval.map_or("none".into(), |j| j.to_string()),
        t.sentences_to_success
            .map_or(String::new(), |m| m.to_string()),
        t.tutoring_rounds.to_string(),
        if timing {
            t.wallclock_ms.to_string()
        } else {
            String::new()
        },
        t.success().to_string(),
    ]
}

/// Peak resident set size in bytes, where the platform reports it.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
