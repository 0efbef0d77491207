use std::path::Path;
use std::sync::{Arc, OnceLock};

use crate::lang::{parse, ParseError, SyntaxTree};
use crate::types::env::{collect_decls, Env};

static ACTIVE: OnceLock<Arc<Stdlib>> = OnceLock::new();

const BUNDLED: &str = include_str!("../../../../stdlib.tl");

/// The standard library declarations, parsed once and shared read-only.
#[derive(Debug)]
pub struct Stdlib {
    pub tree: SyntaxTree,
    pub env: Env,
    pub source: String,
}

#[derive(Debug, thiserror::Error)]
pub enum StdlibError {
    #[error("cannot read stdlib: {0}")]
    Io(#[from] std::io::Error),
    #[error("stdlib does not parse: {}", .0.render(.1))]
    Parse(ParseError, String),
    #[error("stdlib declares {0} twice")]
    Duplicate(String),
    #[error("stdlib is missing required declaration {0}")]
    Missing(&'static str),
}

const REQUIRED: [&str; 8] = ["Any", "Int", "Long", "Double", "Boolean", "String", "List", "IntRange"];

impl Stdlib {
    pub fn from_source(src: &str) -> Result<Stdlib, StdlibError> {
        let tree = parse(src).map_err(|e| StdlibError::Parse(e, src.to_string()))?;
        let (env, issues) = collect_decls(&tree, None, true);
        if let Some(i) = issues.first() {
            let name = tree.find(i.node).map(|n| n.text.clone()).unwrap_or_default();
            return Err(StdlibError::Duplicate(name));
        }
        for r in REQUIRED {
            if env.class(r).is_none() {
                return Err(StdlibError::Missing(r));
            }
        }
        Ok(Stdlib { tree, env, source: src.to_string() })
    }

    pub fn load(path: &Path) -> Result<Stdlib, StdlibError> {
        let src = std::fs::read_to_string(path)?;
        Stdlib::from_source(&src)
    }

    /// The library shipped with the crate.
    pub fn bundled() -> Arc<Stdlib> {
        static STD: OnceLock<Arc<Stdlib>> = OnceLock::new();
        STD.get_or_init(|| Arc::new(Stdlib::from_source(BUNDLED).expect("bundled stdlib is valid"))).clone()
    }

    /// The library used by every entry point that does not take one
    /// explicitly: the installed one if any, else the bundled one.
    pub fn active() -> Arc<Stdlib> {
        ACTIVE.get_or_init(Stdlib::bundled).clone()
    }

    /// Replaces the bundled library for the rest of the process. Fails if
    /// a library is already in use.
    pub fn install(std: Stdlib) -> Result<(), Arc<Stdlib>> {
        ACTIVE.set(Arc::new(std))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_library_loads() {
        let s = Stdlib::bundled();
        assert!(s.env.class("ArrayList").is_some());
        assert!(s.env.functions_named("listOf").len() == 1);
        assert_eq!(s.env.n_std_funcs, s.env.functions.len());
    }

    #[test]
    fn missing_core_type_is_reported() {
        assert!(matches!(Stdlib::from_source("native class Any"), Err(StdlibError::Missing(_))));
    }
}
