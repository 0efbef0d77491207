//! The compiler under test and its oracle.
//!
//! Two backends execute checked programs: a tree interpreter used as the
//! reference and a bytecode compiler plus stack machine carrying the
//! injectable [`Fault`]s. Both emit the same instrumentation events.

mod compile;
pub mod external;
mod faults;
mod interp;
mod native;
mod oracle;
mod program;
mod trace;
mod value;
mod vm;

pub use faults::{Fault, FaultSet, UnknownFault};
pub use native::{RtError, RtKind};
pub use oracle::{diff_traces, AllowList, Classification, DivergenceReport};
pub use program::Program;
pub use trace::{ExecutionResult, Limits, Outcome, Phase, TraceEvent, END_BLOCK, OUT_BLOCK};
pub use value::{display, format_double, Value};

use sha2::{Digest, Sha256};

use crate::lang::SyntaxTree;
use crate::types::TypeErrorList;

/// Stable digest of a compiler crash.
pub fn crash_signature(phase: Phase, kind: &str, location: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(format!("{phase:?}\0{kind}\0{location}").as_bytes());
    let d = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&d[..8]);
    u64::from_be_bytes(b)
}

/// Runs a checked program on the reference interpreter.
pub fn interpret(tree: &SyntaxTree, limits: &Limits) -> Result<ExecutionResult, TypeErrorList> {
    let p = Program::new(tree)?;
    Ok(interpret_program(&p, limits))
}

pub fn interpret_program(p: &Program<'_>, limits: &Limits) -> ExecutionResult {
    interp::run(p, limits)
}

/// Compiles with `faults` enabled and runs the bytecode.
pub fn compile_and_run(tree: &SyntaxTree, faults: FaultSet, limits: &Limits) -> Result<ExecutionResult, TypeErrorList> {
    let p = Program::new(tree)?;
    Ok(compile_and_run_program(&p, faults, limits))
}

pub fn compile_and_run_program(p: &Program<'_>, faults: FaultSet, limits: &Limits) -> ExecutionResult {
    match compile::compile(p, faults) {
        Ok(m) => vm::run(p, &m, limits),
        Err(c) => ExecutionResult::crash(c.phase, c.kind, c.location),
    }
}

/// Both backends on one program: reference first.
pub fn run_both(
    tree: &SyntaxTree,
    faults: FaultSet,
    limits: &Limits,
) -> Result<(ExecutionResult, ExecutionResult), TypeErrorList> {
    let p = Program::new(tree)?;
    Ok((interpret_program(&p, limits), compile_and_run_program(&p, faults, limits)))
}

/// Verdict of the differential oracle on one program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Agree,
    Crash { phase: Phase, kind: String, location: String, signature: u64 },
    Diverge(Box<DivergenceReport>),
}

impl Verdict {
    pub fn of(reference: &ExecutionResult, candidate: &ExecutionResult, allow: &AllowList) -> Verdict {
        if let Outcome::CompilerCrash { phase, kind, location, signature } = &candidate.outcome {
            return Verdict::Crash { phase: *phase, kind: kind.clone(), location: location.clone(), signature: *signature };
        }
        match diff_traces(reference, candidate, allow) {
            None => Verdict::Agree,
            Some(r) => Verdict::Diverge(Box::new(r)),
        }
    }

    pub fn is_bug(&self) -> bool {
        match self {
            Verdict::Agree => false,
            Verdict::Crash { .. } => true,
            Verdict::Diverge(r) => r.classification == Classification::Miscompilation,
        }
    }
}

/// Runs both backends and classifies the outcome.
pub fn check_differential(
    tree: &SyntaxTree,
    faults: FaultSet,
    limits: &Limits,
    allow: &AllowList,
) -> Result<Verdict, TypeErrorList> {
    let (a, b) = run_both(tree, faults, limits)?;
    Ok(match Verdict::of(&a, &b, allow) {
        Verdict::Diverge(mut r) => {
            r.program = crate::lang::print(tree).unwrap_or_default();
            Verdict::Diverge(r)
        }
        v => v,
    })
}
