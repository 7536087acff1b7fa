//! Append-only JSON-lines run log, one [`TrialRecord`] per line.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::evaluator::EvalResult;
use crate::rule_space::{RawVector, RuleConfig};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BoAdaptive,
    BoFixed,
    Random,
    Es,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::BoAdaptive, Method::BoFixed, Method::Random, Method::Es];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::BoAdaptive => "bo-adaptive",
            Method::BoFixed => "bo-fixed",
            Method::Random => "random",
            Method::Es => "es",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method {s:?} (expected bo-adaptive, bo-fixed, random or es)"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    /// 1-based.
    pub iteration: u32,
    /// The proposal before projection, in parameter units.
    pub raw: RawVector,
    pub config: RuleConfig,
    /// Expected improvement at the proposal; absent when no surrogate was used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acquisition: Option<f64>,
    pub n_games: u32,
    /// Seed of the first game in the batch.
    pub base_seed: u64,
    pub eval: EvalResult,
    /// Whether the proposal replaced the incumbent (evolution strategy only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<bool>,
    pub wall_time_s: f64,
}

/// Streams records to a file as they are produced.
pub struct RunLog {
    path: PathBuf,
    file: File,
}

impl RunLog {
    /// Opens `path` for appending, creating it if needed.
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RunLog { path: path.to_path_buf(), file })
    }

    /// Creates or truncates `path`.
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path)?;
        Ok(RunLog { path: path.to_path_buf(), file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, record: &TrialRecord) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}

/// Reads every record. A truncated final line, as left by an interrupted
/// run, is ignored; malformed lines elsewhere are errors.
pub fn read_log(path: &Path) -> Result<Vec<TrialRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut records = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TrialRecord>(line) {
            Ok(r) => records.push(r),
            Err(e) if Some(i) == last => {
                log::warn!("{}: ignoring incomplete final line: {e}", path.display());
            }
            Err(e) => {
                return Err(Error::InvalidConfig(format!("{}:{}: {e}", path.display(), i + 1)));
            }
        }
    }
    Ok(records)
}

/// Checks that records form the prefix `1..=len` of a single method's run.
pub fn check_history(records: &[TrialRecord], method: Method) -> Result<()> {
    for (i, r) in records.iter().enumerate() {
        if r.method != method {
            return Err(Error::InvalidConfig(format!("log holds {} records but the run uses {method}", r.method)));
        }
        if r.iteration as usize != i + 1 {
            return Err(Error::InvalidConfig(format!(
                "record {} has iteration {}; expected {}",
                i + 1,
                r.iteration,
                i + 1
            )));
        }
    }
    Ok(())
}

/// Rewrites `path` to hold exactly `records`, dropping any torn tail.
pub fn rewrite_log(path: &Path, records: &[TrialRecord]) -> Result<RunLog> {
    let mut log = RunLog::create(path)?;
    for r in records {
        log.write(r)?;
    }
    Ok(log)
}
