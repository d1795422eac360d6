//! Helpers for the acceptance suite: verdict reporting and in-process CLI
//! runs.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

/// Outcome of one acceptance criterion.
#[derive(Debug)]
pub struct Verdict {
    pub id: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(id: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            id,
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        format!("ACCEPTANCE {} {status} {}", self.id, self.detail)
    }

    /// Prints the verdict line straight to stderr (bypassing the test
    /// harness's capture) and panics on failure.
    pub fn report(self) {
        let _ = writeln!(std::io::stderr(), "{}", self.line());
        assert!(self.pass, "{}", self.line());
    }
}

/// Runs `nors <args>` in this process.
pub fn nors(args: &[&str]) -> Result<(), nors_cli::CliError> {
    nors_cli::run_args(std::iter::once("nors").chain(args.iter().copied()))
}

/// Like [`nors`], panicking with the command on failure.
pub fn nors_ok(args: &[&str]) {
    if let Err(e) = nors(args) {
        panic!("nors {}: {e}", args.join(" "));
    }
}

pub fn read_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn path_str(path: &Path) -> &str {
    path.to_str().expect("UTF-8 path")
}
