use std::collections::BTreeMap;
use std::fmt;

use perimix::Error;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Io(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 1,
            Failure::Core(e) => match e {
                Error::Parse(_) | Error::Dimension(_) => 1,
                Error::Numerical(_) => 3,
                _ => 2,
            },
        }
    }

    fn details(&self) -> Value {
        let (kind, extra) = match self {
            Failure::Usage(_) => ("usage", Value::Null),
            Failure::Io(_) => ("io", Value::Null),
            Failure::Core(e) => match e {
                Error::Parse(_) => ("parse", Value::Null),
                Error::Dimension(_) => ("dimension", Value::Null),
                Error::Precondition(_) => ("precondition", Value::Null),
                Error::Budget { needed, cap } => (
                    "budget",
                    json!({"needed": needed.to_string(), "cap": cap.to_string()}),
                ),
                Error::NotLossless { uncovered } => (
                    "not-lossless",
                    json!({"uncovered": uncovered, "uncovered_names": entry_names(uncovered)}),
                ),
                Error::InconsistentStream { residual } => {
                    ("inconsistent-stream", json!({"residual": residual}))
                }
                Error::InsufficientHorizon { required, available } => (
                    "insufficient-horizon",
                    json!({"required": required, "available": available}),
                ),
                Error::UnsupportedSpec(_) => ("unsupported-spec", Value::Null),
                Error::InsufficientExcitation { min_singular } => {
                    ("insufficient-excitation", json!({"min_singular": min_singular}))
                }
                Error::InconsistentSamples { residual, allowed } => (
                    "inconsistent-samples",
                    json!({"residual": residual, "allowed": allowed}),
                ),
                Error::PartialReconstruction {
                    recoverable,
                    unrecoverable,
                } => (
                    "partial-reconstruction",
                    json!({"recoverable": recoverable, "unrecoverable": unrecoverable}),
                ),
                Error::Numerical(_) => ("numerical", Value::Null),
            },
        };
        let mut out = json!({"kind": kind, "message": self.to_string()});
        if let Value::Object(m) = extra {
            out.as_object_mut().expect("object").extend(m);
        }
        out
    }
}

/// `x1(1)`-style names for `(channel, phase)` entries.
pub fn entry_names(entries: &[(usize, usize)]) -> Vec<String> {
    entries.iter().map(|(c, p)| format!("x{c}({p})")).collect()
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Value,
    pub verdicts: BTreeMap<String, bool>,
    pub diagnostics: Value,
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Value>,
    /// Verdict that decides exit code 2 when false.
    #[serde(skip)]
    pub decisive: Option<String>,
}

impl RunReport {
    pub fn new(command: &str, inputs: Value) -> Self {
        Self {
            command: command.to_string(),
            inputs,
            verdicts: BTreeMap::new(),
            diagnostics: json!({}),
            artifacts: Vec::new(),
            error: None,
            decisive: None,
        }
    }

    pub fn failed(command: &str, failure: &Failure) -> Self {
        let mut r = Self::new(command, Value::Null);
        r.error = Some(failure.details());
        r
    }

    pub fn verdict(&mut self, name: &str, value: bool) -> &mut Self {
        self.verdicts.insert(name.to_string(), value);
        self
    }

    /// Records a verdict whose falsity makes the run infeasible.
    pub fn decisive_verdict(&mut self, name: &str, value: bool) -> &mut Self {
        self.decisive = Some(name.to_string());
        self.verdict(name, value)
    }

    pub fn diagnostic(&mut self, key: &str, value: Value) -> &mut Self {
        self.diagnostics
            .as_object_mut()
            .expect("diagnostics is an object")
            .insert(key.to_string(), value);
        self
    }

    pub fn artifact(&mut self, path: &std::path::Path) -> &mut Self {
        self.artifacts.push(path.display().to_string());
        self
    }

    pub fn exit_code(&self) -> u8 {
        match &self.decisive {
            Some(name) if !self.verdicts[name] => 2,
            _ => 0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
