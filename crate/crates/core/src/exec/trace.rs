use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::native::{RtError, RtKind};
use super::value::{snapshot, Value};

/// Entry into an instrumented block with the locals visible there.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceEvent {
    pub block: String,
    pub state: Vec<(String, String)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Frontend,
    Backend,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    RuntimeError { kind: RtKind, message: String },
    CompilerCrash { phase: Phase, kind: String, location: String, signature: u64 },
    /// `wall` is set when the wall clock, not the step budget, ran out.
    Timeout { wall: bool },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::RuntimeError { .. } => "runtime_error",
            Outcome::CompilerCrash { .. } => "compiler_crash",
            Outcome::Timeout { .. } => "timeout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub outcome: Outcome,
    /// The first `Limits::max_trace` events.
    pub trace: Vec<TraceEvent>,
    /// Number of events, including those past the stored prefix.
    pub events: u64,
    /// Digest of the whole event sequence.
    pub digest: u64,
}

impl ExecutionResult {
    pub fn crash(phase: Phase, kind: &str, location: &str) -> ExecutionResult {
        let signature = super::crash_signature(phase, kind, location);
        ExecutionResult {
            outcome: Outcome::CompilerCrash { phase, kind: kind.into(), location: location.into(), signature },
            trace: Vec::new(),
            events: 0,
            digest: 0,
        }
    }

    /// Printed lines, in order.
    pub fn output(&self) -> Vec<&str> {
        self.trace.iter().filter(|e| e.block == OUT_BLOCK).filter_map(|e| e.state.first().map(|s| s.1.as_str())).collect()
    }
}

/// Block name of `println` events.
pub const OUT_BLOCK: &str = "out";

/// Block name of the final event, carrying the globals.
pub const END_BLOCK: &str = "end";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    /// Budget of events plus calls.
    pub fuel: u64,
    pub max_depth: usize,
    pub wall_ms: u64,
    pub max_trace: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { fuel: 1_000_000, max_depth: 128, wall_ms: 1000, max_trace: 10_000 }
    }
}

/// Why evaluation stopped early.
#[derive(Debug)]
pub enum Stop {
    Error(RtError),
    Timeout { wall: bool },
}

impl From<RtError> for Stop {
    fn from(e: RtError) -> Stop {
        Stop::Error(e)
    }
}

/// Fuel, depth and trace bookkeeping shared by both backends.
pub struct Meter {
    limits: Limits,
    fuel: u64,
    pub depth: usize,
    deadline: Instant,
    trace: Vec<TraceEvent>,
    events: u64,
    hasher: DefaultHasher,
}

impl Meter {
    pub fn new(limits: &Limits) -> Meter {
        Meter {
            limits: limits.clone(),
            fuel: 0,
            depth: 0,
            deadline: Instant::now() + Duration::from_millis(limits.wall_ms),
            trace: Vec::new(),
            events: 0,
            hasher: DefaultHasher::new(),
        }
    }

    pub fn burn(&mut self) -> Result<(), Stop> {
        self.fuel += 1;
        if self.fuel > self.limits.fuel {
            return Err(Stop::Timeout { wall: false });
        }
        if self.fuel.is_multiple_of(256) && Instant::now() >= self.deadline {
            return Err(Stop::Timeout { wall: true });
        }
        Ok(())
    }

    pub fn enter(&mut self) -> Result<(), Stop> {
        self.burn()?;
        self.depth += 1;
        if self.depth > self.limits.max_depth {
            return Err(Stop::Error(RtError::new(RtKind::StackOverflow, "stack overflow")));
        }
        Ok(())
    }

    pub fn leave(&mut self) {
        self.depth -= 1;
    }

    pub fn event<'v>(&mut self, block: &str, state: impl Iterator<Item = (&'v str, &'v Value)>) -> Result<(), Stop> {
        let state: Vec<(String, String)> = state.map(|(n, v)| (n.to_string(), snapshot(v))).collect();
        self.record(TraceEvent { block: block.to_string(), state })
    }

    pub fn print(&mut self, line: String) -> Result<(), Stop> {
        self.record(TraceEvent { block: OUT_BLOCK.into(), state: vec![(String::new(), line)] })
    }

    fn record(&mut self, e: TraceEvent) -> Result<(), Stop> {
        e.hash(&mut self.hasher);
        self.events += 1;
        if self.trace.len() < self.limits.max_trace {
            self.trace.push(e);
        }
        self.burn()
    }

    pub fn finish(self, stop: Option<Stop>) -> ExecutionResult {
        let outcome = match stop {
            None => Outcome::Completed,
            Some(Stop::Error(e)) => Outcome::RuntimeError { kind: e.kind, message: e.message },
            Some(Stop::Timeout { wall }) => Outcome::Timeout { wall },
        };
        ExecutionResult { outcome, trace: self.trace, events: self.events, digest: self.hasher.finish() }
    }
}
