//! Hierarchical delta debugging with a few type-aware passes on top.

use std::collections::HashSet;

use serde::Serialize;

use crate::lang::{print, token_count, Node, NodeId, NodeKind, SyntaxTree};
use crate::types::{check_program, Prim, Res, Type, VarKind};

pub const DEFAULT_BUDGET: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReduceStatus {
    /// No pass makes progress any more.
    Fixpoint,
    /// The evaluation budget ran out; the tree is the best found so far.
    BudgetExhausted,
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub tree: SyntaxTree,
    pub evaluations: usize,
    pub status: ReduceStatus,
    pub tokens_before: usize,
    pub tokens_after: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("the input does not satisfy the reduction goal")]
pub struct GoalNotMet;

/// Shrinks `program` while `goal` keeps holding, spending at most `budget`
/// goal evaluations. The initial check of the input counts as one.
pub fn reduce_input(
    program: &SyntaxTree,
    goal: &dyn Fn(&SyntaxTree) -> bool,
    budget: usize,
) -> Result<Reduction, GoalNotMet> {
    let src = print(program).map_err(|_| GoalNotMet)?;
    let tokens_before = token_count(&src);
    if budget == 0 || !goal(program) {
        return Err(GoalNotMet);
    }
    let mut r = Reducer {
        goal,
        budget,
        evals: 1,
        best: program.clone(),
        best_tokens: tokens_before,
        seen: HashSet::from([src]),
        exhausted: false,
    };
    loop {
        let before = r.best_tokens;
        r.ddmin_level(top_level);
        r.ddmin_level(statements);
        r.expressions();
        r.inline_vals();
        if r.exhausted || r.best_tokens >= before {
            break;
        }
    }
    let status = if r.exhausted { ReduceStatus::BudgetExhausted } else { ReduceStatus::Fixpoint };
    Ok(Reduction { tokens_after: r.best_tokens, tree: r.best, evaluations: r.evals, status, tokens_before })
}

struct Reducer<'g> {
    goal: &'g dyn Fn(&SyntaxTree) -> bool,
    budget: usize,
    evals: usize,
    best: SyntaxTree,
    best_tokens: usize,
    seen: HashSet<String>,
    exhausted: bool,
}

impl Reducer<'_> {
    /// Accepts `cand` if it is smaller and keeps the goal.
    fn attempt(&mut self, cand: SyntaxTree) -> bool {
        if self.exhausted {
            return false;
        }
        let Ok(src) = print(&cand) else { return false };
        let tokens = token_count(&src);
        if tokens >= self.best_tokens || !self.seen.insert(src) {
            return false;
        }
        if self.evals >= self.budget {
            self.exhausted = true;
            return false;
        }
        self.evals += 1;
        if (self.goal)(&cand) {
            self.best = cand;
            self.best_tokens = tokens;
            true
        } else {
            false
        }
    }

    fn without(&self, ids: &[NodeId]) -> SyntaxTree {
        let mut t = self.best.clone();
        for id in ids {
            let _ = t.remove_node(*id);
        }
        t
    }

    fn ddmin_level(&mut self, level: fn(&SyntaxTree) -> Vec<NodeId>) {
        let mut items = level(&self.best);
        let mut n = 2usize;
        while !items.is_empty() && !self.exhausted {
            let chunk = items.len().div_ceil(n.min(items.len()));
            let mut reduced = false;
            let mut start = 0;
            while start < items.len() {
                let end = (start + chunk).min(items.len());
                let cand = self.without(&items[start..end]);
                if self.attempt(cand) {
                    items.drain(start..end);
                    n = n.saturating_sub(1).max(2);
                    reduced = true;
                    break;
                }
                start = end;
            }
            if self.exhausted {
                return;
            }
            if !reduced {
                if chunk == 1 {
                    break;
                }
                n = (n * 2).min(items.len());
            }
        }
    }

    fn expressions(&mut self) {
        let Ok(a) = check_program(&self.best) else { return };
        let mut exprs = Vec::new();
        self.best.root.walk_with_parent(None, &mut |n: &Node, parent: Option<&Node>| {
            let target = parent.is_some_and(|p| p.kind == NodeKind::Assign && p.children[0].id == n.id);
            if n.is_expr() && !target && n.kind != NodeKind::Placeholder {
                exprs.push(n.id);
            }
        });
        for id in exprs {
            if self.exhausted {
                return;
            }
            let Some(node) = self.best.find(id).cloned() else { continue };
            let Some(ty) = a.type_of(id).cloned() else { continue };
            let mut subs: Vec<&Node> = Vec::new();
            for c in &node.children {
                c.walk(&mut |d: &Node| {
                    if d.is_expr() && a.type_of(d.id).is_some_and(|t| *t == ty) {
                        subs.push(d);
                    }
                });
            }
            subs.sort_by_key(|d| d.size());
            let mut cands: Vec<Node> = subs.into_iter().take(2).cloned().collect();
            if !node.kind.is_literal() {
                if let Some(l) = literal_for(&ty) {
                    cands.insert(0, l);
                }
            }
            for c in cands {
                let mut t = self.best.clone();
                let fresh = c.id == 0;
                let ok = if fresh { t.replace_node(id, c).is_ok() } else { t.put_node(id, c).is_ok() };
                if ok && self.attempt(t) {
                    break;
                }
            }
        }
    }

    /// Substitutes the initializer of a `val` read exactly once.
    fn inline_vals(&mut self) {
        let Ok(a) = check_program(&self.best) else { return };
        let mut vals = Vec::new();
        self.best.root.walk(&mut |n: &Node| {
            if n.kind == NodeKind::VarDecl && n.mods.has(crate::lang::Modifiers::VAL) {
                vals.push(n.id);
            }
        });
        for decl in vals {
            if self.exhausted {
                return;
            }
            let uses: Vec<NodeId> = a
                .res
                .iter()
                .filter(|(_, r)| matches!(r, Res::Var { kind: VarKind::Local, decl: d } if *d == decl))
                .map(|(id, _)| *id)
                .collect();
            if uses.len() != 1 {
                continue;
            }
            let Some(init) = self.best.find(decl).and_then(|d| d.initializer()).cloned() else { continue };
            let mut t = self.best.clone();
            if t.replace_node(uses[0], init).is_err() || t.remove_node(decl).is_err() {
                continue;
            }
            self.attempt(t);
        }
    }
}

fn literal_for(t: &Type) -> Option<Node> {
    let (kind, text) = match t {
        Type::Prim(Prim::Int) => (NodeKind::IntLit, "0"),
        Type::Prim(Prim::Long) => (NodeKind::LongLit, "0"),
        Type::Prim(Prim::Double) => (NodeKind::DoubleLit, "0.0"),
        Type::Prim(Prim::Boolean) => (NodeKind::BoolLit, "false"),
        Type::Prim(Prim::String) => (NodeKind::StringLit, ""),
        _ => return None,
    };
    Some(Node::leaf(kind, text))
}

fn top_level(t: &SyntaxTree) -> Vec<NodeId> {
    let mut out = Vec::new();
    for item in t.items() {
        out.push(item.id);
        if item.kind == NodeKind::ClassDecl || item.kind == NodeKind::InterfaceDecl {
            out.extend(item.members().map(|m| m.id));
        }
    }
    out
}

fn statements(t: &SyntaxTree) -> Vec<NodeId> {
    let mut out = Vec::new();
    t.root.walk(&mut |n: &Node| {
        if n.kind == NodeKind::Block {
            out.extend(n.children.iter().map(|c| c.id));
        }
    });
    out
}
