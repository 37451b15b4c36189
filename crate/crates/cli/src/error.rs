use std::path::PathBuf;

use dirquant_core::Error as CoreError;
use serde_json::{json, Value};

/// Everything that can stop a run.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("input has no data rows")]
    EmptyInput,
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("data still not in general position after jitter (observations {indices:?})")]
    StillDegenerate { indices: Vec<usize> },
    #[error("{0}")]
    Usage(String),
    #[error("malformed region file: {0}")]
    Region(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// `(m - 0.5)/n` and `(m + 0.5)/n` around `m = round(nτ)`, kept inside (0, 1).
pub fn admissible_taus(n: usize, tau: f64) -> Vec<f64> {
    let m = (n as f64 * tau).round();
    [m - 0.5, m + 0.5].into_iter().map(|v| v / n as f64).filter(|t| *t > 0.0 && *t < 1.0).collect()
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self.core().map(CoreError::root) {
            Some(CoreError::DegenerateTau { .. }) => 2,
            Some(CoreError::DegenerateData { .. } | CoreError::DegenerateDesign { .. }) => 3,
            _ if matches!(self, CliError::StillDegenerate { .. }) => 3,
            _ => 1,
        }
    }

    fn core(&self) -> Option<&CoreError> {
        match self {
            CliError::Core(e) => Some(e),
            _ => None,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "Io",
            CliError::Parse { .. } => "ParseError",
            CliError::EmptyInput => "EmptyInput",
            CliError::HeaderMismatch(_) => "HeaderMismatch",
            CliError::StillDegenerate { .. } => "StillDegenerate",
            CliError::Usage(_) => "Usage",
            CliError::Region(_) => "RegionFormat",
            CliError::Core(e) => match e.root() {
                CoreError::DegenerateTau { .. } => "DegenerateTau",
                CoreError::DegenerateData { .. } | CoreError::DegenerateDesign { .. } => "DegenerateData",
                _ => "ComputationError",
            },
        }
    }

    fn indices(&self) -> Option<&[usize]> {
        match self {
            CliError::StillDegenerate { indices } => Some(indices),
            CliError::Core(e) => match e.root() {
                CoreError::DegenerateData { indices } | CoreError::DegenerateDesign { indices } => Some(indices),
                _ => None,
            },
            _ => None,
        }
    }

    /// Human-readable report, with hints for the two recoverable cases.
    pub fn report(&self) -> String {
        let mut s = format!("error: {self}");
        if let Some(CoreError::DegenerateTau { tau, n }) = self.core().map(CoreError::root) {
            let near: Vec<String> = admissible_taus(*n, *tau).iter().map(|t| format!("{t}")).collect();
            s.push_str(&format!("\nnearest admissible tau values: {}", near.join(", ")));
        }
        if self.exit_code() == 3 {
            s.push_str("\nhint: rerun with a positive --jitter (for example 1e-5)");
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let Some(idx) = self.indices() {
            v["indices"] = json!(idx);
        }
        if let Some(CoreError::DegenerateTau { tau, n }) = self.core().map(CoreError::root) {
            v["admissible_tau"] = json!(admissible_taus(*n, *tau));
        }
        if let CliError::Parse { line, .. } = self {
            v["line"] = json!(line);
        }
        v
    }
}
