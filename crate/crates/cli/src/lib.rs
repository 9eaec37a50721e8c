//! Front end for the `offbranch` command: spec parsing, dispatch and report
//! emission. Reports are JSON with sorted keys and contain exact values only,
//! so identical inputs give byte-identical output.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

pub mod commands;
pub mod spec;

pub use commands::{run, Cli};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate member label {0:?}")]
    DuplicateLabel(String),
    #[error("reference to unknown or later member {0:?}")]
    UnknownReference(String),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub checks_run: usize,
    pub violations: usize,
}

/// The output of one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub records: Vec<Value>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            records: Vec::new(),
            summary: Summary::default(),
        }
    }

    pub fn record<T: Serialize>(&mut self, r: &T) {
        self.records
            .push(serde_json::to_value(r).expect("report records serialize"));
    }

    /// Counts a check, and a violation if it failed.
    pub fn check(&mut self, ok: bool) -> bool {
        self.summary.checks_run += 1;
        if !ok {
            self.summary.violations += 1;
        }
        ok
    }

    pub fn exit_code(&self) -> i32 {
        if self.summary.violations == 0 {
            0
        } else {
            1
        }
    }

    /// Pretty JSON with sorted object keys and a trailing newline.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }
}
