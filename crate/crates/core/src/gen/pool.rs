use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::lang::{parse_expr, parse_type, print_expr, Modifiers, Node, NodeKind, SyntaxTree};
use crate::types::{check_program, type_from_node, Bounds, Env, Type};

/// A self-contained expression and its type.
#[derive(Clone, Debug, PartialEq)]
pub struct TypedExpr {
    pub expr: Node,
    pub ty: Type,
    pub depth: usize,
    pub provenance: String,
}

impl TypedExpr {
    pub fn new(expr: Node, ty: Type, depth: usize, provenance: impl Into<String>) -> TypedExpr {
        TypedExpr { expr, ty, depth, provenance: provenance.into() }
    }

    pub fn text(&self) -> String {
        print_expr(&self.expr).unwrap_or_default()
    }
}

/// One line of a pool file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolRecord {
    pub expr_text: String,
    pub type_text: String,
    pub provenance: String,
    pub depth: usize,
}

/// The expression set E, deduplicated by (text, type).
#[derive(Clone, Debug, Default)]
pub struct ExprPool {
    entries: Vec<TypedExpr>,
    keys: HashSet<(String, String)>,
}

impl ExprPool {
    pub fn add(&mut self, e: TypedExpr) -> bool {
        let key = (e.text(), e.ty.to_string());
        if self.keys.insert(key) {
            self.entries.push(e);
            true
        } else {
            false
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TypedExpr> {
        self.entries.iter()
    }

    /// Entries whose type is a subtype of `t`.
    pub fn lookup<'a>(&'a self, env: &'a Env, t: &'a Type) -> impl Iterator<Item = &'a TypedExpr> + 'a {
        let none = Bounds::new();
        self.entries.iter().filter(move |e| env.is_subtype(&e.ty, t, &none))
    }

    pub fn records(&self) -> Vec<PoolRecord> {
        self.entries
            .iter()
            .map(|e| PoolRecord {
                expr_text: e.text(),
                type_text: e.ty.to_string(),
                provenance: e.provenance.clone(),
                depth: e.depth,
            })
            .collect()
    }

    pub fn from_records(recs: &[PoolRecord]) -> Result<ExprPool, crate::lang::ParseError> {
        let mut p = ExprPool::default();
        for r in recs {
            let expr = parse_expr(&r.expr_text)?;
            let ty = type_from_node(&parse_type(&r.type_text)?, &[]);
            p.add(TypedExpr::new(expr, ty, r.depth, r.provenance.clone()));
        }
        Ok(p)
    }
}

/// Splices every entry into `seed` as `val` declarations typed with the
/// entry's type and returns (entries that typecheck, total).
pub fn pool_validity(seed: &SyntaxTree, pool: &ExprPool) -> (usize, usize) {
    let mut root = seed.root.clone();
    let base = root.children.len();
    for (i, e) in pool.iter().enumerate() {
        root.children.push(
            Node::new(NodeKind::VarDecl, format!("pool_probe_{i}"), vec![e.ty.to_node(), e.expr.clone()])
                .with_mods(Modifiers::VAL),
        );
    }
    let tree = SyntaxTree::new(root);
    let bad: HashSet<usize> = match check_program(&tree) {
        Ok(_) => HashSet::new(),
        Err(errs) => errs
            .0
            .iter()
            .filter_map(|e| {
                tree.items()[base..].iter().position(|decl| decl.contains(e.node))
            })
            .collect(),
    };
    let seed_broken = check_program(seed).is_err();
    let total = pool.len();
    if seed_broken {
        return (0, total);
    }
    (total - bad.len(), total)
}
