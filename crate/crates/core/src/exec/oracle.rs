//! Trace comparison between two runs of the same program.

use serde::{Deserialize, Serialize};

use super::trace::{ExecutionResult, Outcome, TraceEvent};

/// Rules that excuse known benign differences.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllowList {
    /// Treat `1.0` and `1` as the same printed value.
    pub float_format: bool,
    /// A run cut short by the wall clock proves nothing.
    pub wall_timeout: bool,
}

impl Default for AllowList {
    fn default() -> Self {
        AllowList { float_format: true, wall_timeout: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Miscompilation,
    Allowlisted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub program: String,
    /// Index of the first differing event; equal to the shorter trace
    /// length when one trace is a prefix of the other.
    pub index: usize,
    pub left: Option<TraceEvent>,
    pub right: Option<TraceEvent>,
    pub left_outcome: Outcome,
    pub right_outcome: Outcome,
    pub classification: Classification,
}

fn normalize<'s>(s: &'s str, allow: &AllowList) -> &'s str {
    if allow.float_format {
        if let Some(p) = s.strip_suffix(".0") {
            if p.parse::<i64>().is_ok() {
                return p;
            }
        }
    }
    s
}

fn same_event(a: &TraceEvent, b: &TraceEvent, allow: &AllowList) -> bool {
    a.block == b.block
        && a.state.len() == b.state.len()
        && a.state.iter().zip(&b.state).all(|(x, y)| x.0 == y.0 && normalize(&x.1, allow) == normalize(&y.1, allow))
}

fn same_outcome(a: &Outcome, b: &Outcome) -> bool {
    match (a, b) {
        (Outcome::RuntimeError { kind: x, .. }, Outcome::RuntimeError { kind: y, .. }) => x == y,
        (Outcome::Timeout { .. }, Outcome::Timeout { .. }) => true,
        (Outcome::CompilerCrash { signature: x, .. }, Outcome::CompilerCrash { signature: y, .. }) => x == y,
        _ => a == b,
    }
}

/// `None` when the runs agree.
pub fn diff_traces(a: &ExecutionResult, b: &ExecutionResult, allow: &AllowList) -> Option<DivergenceReport> {
    let both_timed_out = matches!(a.outcome, Outcome::Timeout { .. }) && matches!(b.outcome, Outcome::Timeout { .. });
    let n = a.trace.len().min(b.trace.len());
    let first = (0..n).find(|&i| !same_event(&a.trace[i], &b.trace[i], allow));
    let index = match first {
        Some(i) => Some(i),
        None if both_timed_out => None,
        None if !same_outcome(&a.outcome, &b.outcome) || a.events != b.events => Some(n),
        None if a.events as usize > a.trace.len() && a.digest != b.digest => Some(n),
        None => None,
    };
    let index = index?;
    let wall = matches!(a.outcome, Outcome::Timeout { wall: true }) || matches!(b.outcome, Outcome::Timeout { wall: true });
    let classification =
        if wall && allow.wall_timeout { Classification::Allowlisted } else { Classification::Miscompilation };
    Some(DivergenceReport {
        program: String::new(),
        index,
        left: a.trace.get(index).cloned(),
        right: b.trace.get(index).cloned(),
        left_outcome: a.outcome.clone(),
        right_outcome: b.outcome.clone(),
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(outcome: Outcome, lines: &[&str]) -> ExecutionResult {
        let trace: Vec<TraceEvent> = lines
            .iter()
            .map(|l| TraceEvent { block: "out".into(), state: vec![(String::new(), l.to_string())] })
            .collect();
        ExecutionResult { outcome, events: trace.len() as u64, trace, digest: 0 }
    }

    #[test]
    fn identical_runs_agree() {
        let a = run(Outcome::Completed, &["1", "2"]);
        assert_eq!(diff_traces(&a, &a.clone(), &AllowList::default()), None);
    }

    #[test]
    fn error_versus_completion_is_reported() {
        let a = run(Outcome::Completed, &["1", "2"]);
        let b = run(Outcome::RuntimeError { kind: super::super::RtKind::DivByZero, message: "/ by zero".into() }, &["1"]);
        let r = diff_traces(&a, &b, &AllowList::default()).unwrap();
        assert_eq!(r.index, 1);
        assert_eq!(r.classification, Classification::Miscompilation);
    }

    #[test]
    fn float_format_rule() {
        let a = run(Outcome::Completed, &["1.0"]);
        let b = run(Outcome::Completed, &["1"]);
        assert_eq!(diff_traces(&a, &b, &AllowList::default()), None);
        let strict = AllowList { float_format: false, ..AllowList::default() };
        assert!(diff_traces(&a, &b, &strict).is_some());
    }

    #[test]
    fn wall_timeouts_are_allowlisted() {
        let a = run(Outcome::Completed, &["1", "2"]);
        let b = run(Outcome::Timeout { wall: true }, &["1"]);
        assert_eq!(diff_traces(&a, &b, &AllowList::default()).unwrap().classification, Classification::Allowlisted);
    }
}
