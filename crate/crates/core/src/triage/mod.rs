//! Reduction and deduplication of bug-triggering programs.

mod dedup;
mod reduce;

pub use dedup::{dedup, BugCluster};
pub use reduce::{reduce_input, GoalNotMet, ReduceStatus, Reduction, DEFAULT_BUDGET};

use serde::{Deserialize, Serialize};

use crate::exec::{check_differential, AllowList, FaultSet, Limits, Phase, Verdict};
use crate::lang::SyntaxTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BugKind {
    FrontendCrash,
    BackendCrash,
    Miscompilation,
}

impl BugKind {
    pub fn is_crash(self) -> bool {
        self != BugKind::Miscompilation
    }
}

/// What a bug-triggering program does to the candidate backend.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: BugKind,
    /// Crash signature in hex, or `mis:` followed by the faults that
    /// reproduce a miscompilation on their own.
    pub signature: String,
    pub detail: String,
}

/// One line of a `crashes.jsonl` or `divergences.jsonl` file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugRecord {
    pub id: String,
    pub kind: BugKind,
    pub signature: String,
    pub detail: String,
    pub program: String,
}

/// Runs the differential check and names the bug, if any. Miscompilations
/// are fingerprinted by retrying with each enabled fault alone.
pub fn classify(tree: &SyntaxTree, faults: FaultSet, limits: &Limits, allow: &AllowList) -> Option<Finding> {
    let v = check_differential(tree, faults, limits, allow).ok()?;
    finding(tree, &v, faults, limits, allow)
}

/// Like [`classify`] for an already computed verdict.
pub fn finding(tree: &SyntaxTree, v: &Verdict, faults: FaultSet, limits: &Limits, allow: &AllowList) -> Option<Finding> {
    if !v.is_bug() {
        return None;
    }
    match v {
        Verdict::Crash { phase, kind, location, signature } => Some(Finding {
            kind: if *phase == Phase::Frontend { BugKind::FrontendCrash } else { BugKind::BackendCrash },
            signature: format!("{signature:016x}"),
            detail: format!("{kind} at {location}"),
        }),
        Verdict::Diverge(r) => {
            let alone: Vec<&str> = faults
                .iter()
                .filter(|f| {
                    faults.len() == 1
                        || check_differential(tree, FaultSet::only(*f), limits, allow)
                            .is_ok_and(|v| matches!(&v, Verdict::Diverge(_)) && v.is_bug())
                })
                .map(|f| f.name())
                .collect();
            let culprits = if alone.is_empty() { faults.iter().map(|f| f.name()).collect() } else { alone };
            let signature = if culprits.is_empty() { "mis:unattributed".to_string() } else { format!("mis:{}", culprits.join("+")) };
            Some(Finding { kind: BugKind::Miscompilation, signature, detail: format!("trace differs at event {}", r.index) })
        }
        Verdict::Agree => None,
    }
}
