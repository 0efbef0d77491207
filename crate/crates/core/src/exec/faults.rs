use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Injectable defects of the bytecode compiler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Defaulted parameters of a user `get`/`set` operator called on a fresh
    /// object receive the first index instead of their default.
    DefaultArgOperator,
    /// Backend assertion on a function reference passed directly as an argument.
    FunrefArg,
    /// Backend assertion on a property read of a constructor call whose
    /// arguments read a property of another constructor call.
    NestedAccessor,
    /// `until` loops over a computed start test `!=` instead of `<`.
    RangeUntilLoop,
    /// Named arguments to a subclass constructor bind in source order.
    NamedArgSuper,
    /// Frontend crash lowering `a[i] op= v` when `v` contains a call.
    IndexCompoundAssign,
}

impl Fault {
    pub const ALL: [Fault; 6] = [
        Fault::DefaultArgOperator,
        Fault::FunrefArg,
        Fault::NestedAccessor,
        Fault::RangeUntilLoop,
        Fault::NamedArgSuper,
        Fault::IndexCompoundAssign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fault::DefaultArgOperator => "default_arg_operator",
            Fault::FunrefArg => "funref_arg",
            Fault::NestedAccessor => "nested_accessor",
            Fault::RangeUntilLoop => "range_until_loop",
            Fault::NamedArgSuper => "named_arg_super",
            Fault::IndexCompoundAssign => "index_compound_assign",
        }
    }

    /// Whether the fault miscompiles rather than crashing the compiler.
    pub fn is_miscompilation(self) -> bool {
        matches!(self, Fault::DefaultArgOperator | Fault::RangeUntilLoop | Fault::NamedArgSuper)
    }

    fn bit(self) -> u8 {
        1 << Fault::ALL.iter().position(|f| *f == self).unwrap_or(0)
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown fault {0:?}")]
pub struct UnknownFault(pub String);

impl FromStr for Fault {
    type Err = UnknownFault;

    fn from_str(s: &str) -> Result<Fault, UnknownFault> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Fault::ALL.into_iter().find(|f| f.name() == norm).ok_or_else(|| UnknownFault(s.to_string()))
    }
}

/// A selection of enabled faults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaultSet(u8);

impl FaultSet {
    pub const NONE: FaultSet = FaultSet(0);

    pub fn all() -> FaultSet {
        Fault::ALL.into_iter().collect()
    }

    pub fn only(f: Fault) -> FaultSet {
        FaultSet(f.bit())
    }

    pub fn has(self, f: Fault) -> bool {
        self.0 & f.bit() != 0
    }

    pub fn with(self, f: Fault) -> FaultSet {
        FaultSet(self.0 | f.bit())
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Fault> {
        Fault::ALL.into_iter().filter(move |f| self.has(*f))
    }

    /// Parses a comma-separated list; `all` and `none` are accepted.
    pub fn parse(s: &str) -> Result<FaultSet, UnknownFault> {
        let mut out = FaultSet::NONE;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "all" => out = FaultSet::all(),
                "none" => {}
                p => out = out.with(p.parse()?),
            }
        }
        Ok(out)
    }
}

impl FromIterator<Fault> for FaultSet {
    fn from_iter<I: IntoIterator<Item = Fault>>(it: I) -> FaultSet {
        it.into_iter().fold(FaultSet::NONE, FaultSet::with)
    }
}

impl fmt::Display for FaultSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(Fault::name).collect();
        f.write_str(&names.join(","))
    }
}

impl Serialize for FaultSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for FaultSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<FaultSet, D::Error> {
        let v: Vec<Fault> = Vec::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists() {
        let s = FaultSet::parse("funref-arg, range_until_loop").unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![Fault::FunrefArg, Fault::RangeUntilLoop]);
        assert_eq!(FaultSet::parse("all").unwrap(), FaultSet::all());
        assert!(FaultSet::parse("nope").is_err());
        assert_eq!(s.to_string(), "funref_arg,range_until_loop");
    }
}
