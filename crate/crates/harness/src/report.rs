use std::fmt;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub parameters: Value,
    pub statistic: Value,
    pub threshold: f64,
    pub status: Status,
    /// Wall-clock seconds.
    pub runtime: f64,
}

impl CheckReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialises")
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} threshold={} ({:.3}s)",
            self.status, self.check, self.statistic, self.threshold, self.runtime
        )
    }
}

/// Times `body`, which returns `(statistic, status)`.
pub fn timed<E>(
    check: &str,
    parameters: Value,
    threshold: f64,
    body: impl FnOnce() -> Result<(Value, Status), E>,
) -> Result<CheckReport, E> {
    let start = Instant::now();
    let (statistic, status) = body()?;
    Ok(CheckReport {
        check: check.to_string(),
        parameters,
        statistic,
        threshold,
        status,
        runtime: start.elapsed().as_secs_f64(),
    })
}

/// Pass iff `value <= threshold`.
pub fn at_most(value: f64, threshold: f64) -> Status {
    if value <= threshold {
        Status::Pass
    } else {
        Status::Fail
    }
}
