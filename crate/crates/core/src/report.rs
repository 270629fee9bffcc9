//! Run outcomes and deterministic rendering of reports.

use serde::{Deserialize, Serialize};

/// Outcome of a run; maps onto the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Certified,
    Partial,
    Invalid,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Certified => 0,
            RunStatus::Partial => 2,
            RunStatus::Invalid => 1,
        }
    }

    pub fn from_certified(ok: bool) -> Self {
        if ok {
            RunStatus::Certified
        } else {
            RunStatus::Partial
        }
    }

    /// Worst of two outcomes.
    pub fn combine(self, o: RunStatus) -> RunStatus {
        use RunStatus::*;
        match (self, o) {
            (Invalid, _) | (_, Invalid) => Invalid,
            (Partial, _) | (_, Partial) => Partial,
            _ => Certified,
        }
    }
}
