//! Grammar-based random program generation.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lang::{Modifiers, Node, NodeKind, SyntaxTree};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrammarConfig {
    pub max_depth: usize,
    /// From this depth on, productions are weighted inversely to their arity.
    pub soft_depth: usize,
    pub max_items: usize,
    pub max_stmts: usize,
    pub max_args: usize,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        GrammarConfig { max_depth: 6, soft_depth: 3, max_items: 6, max_stmts: 4, max_args: 3 }
    }
}

const VARS: [&str; 4] = ["a", "b", "c", "x"];
const FUNS: [&str; 3] = ["f", "g", "h"];
const CLASSES: [&str; 3] = ["A", "B", "C"];
const TYPES: [&str; 7] = ["Int", "String", "Boolean", "Double", "A", "B", "List"];
const BINOPS: [&str; 13] = ["+", "-", "*", "/", "%", "==", "!=", "<", ">", "<=", "&&", "||", ">="];

/// A random derivation of the TL grammar. It always prints and reparses
/// to an equal tree, and rarely typechecks.
pub fn grammar_generate(cfg: &GrammarConfig, rng: &mut impl Rng) -> SyntaxTree {
    let mut g = Gen { cfg, rng };
    let n = g.rng.gen_range(1..=cfg.max_items.max(1));
    let items = (0..n).map(|_| g.item()).collect();
    SyntaxTree::new(Node::new(NodeKind::File, "", items))
}

struct Gen<'a, R> {
    cfg: &'a GrammarConfig,
    rng: &'a mut R,
}

#[derive(Clone, Copy)]
enum E {
    Int,
    Bool,
    Str,
    Double,
    Name,
    FunRef,
    Unary,
    Binary,
    Range,
    Call,
    Ctor,
    Method,
    Member,
    Index,
}

impl E {
    const ALL: [E; 14] = [
        E::Int,
        E::Bool,
        E::Str,
        E::Double,
        E::Name,
        E::FunRef,
        E::Unary,
        E::Binary,
        E::Range,
        E::Call,
        E::Ctor,
        E::Method,
        E::Member,
        E::Index,
    ];

    /// Typical number of subexpressions.
    fn arity(self) -> usize {
        match self {
            E::Int | E::Bool | E::Str | E::Double | E::Name | E::FunRef => 0,
            E::Unary | E::Member => 1,
            E::Binary | E::Range | E::Index | E::Call | E::Ctor => 2,
            E::Method => 3,
        }
    }
}

impl<R: Rng> Gen<'_, R> {
    fn pick<'s>(&mut self, xs: &[&'s str]) -> &'s str {
        xs.choose(self.rng).expect("non-empty alphabet")
    }

    fn item(&mut self) -> Node {
        match self.rng.gen_range(0..4) {
            0 => self.class(),
            1 => self.fun(),
            _ => self.stmt(1),
        }
    }

    fn ty(&mut self, depth: usize) -> Node {
        let name = self.pick(&TYPES);
        let args = if name == "List" && depth < 2 { vec![self.ty(depth + 1)] } else if name == "List" { vec![Node::type_ref("Int", vec![])] } else { vec![] };
        Node::type_ref(name, args)
    }

    fn param(&mut self, mods: Modifiers) -> Node {
        let name = self.pick(&VARS);
        let mut kids = vec![self.ty(0)];
        if self.rng.gen_bool(0.2) {
            kids.push(self.expr(self.cfg.soft_depth));
        }
        Node::new(NodeKind::Param, name, kids).with_mods(mods)
    }

    fn params(&mut self, mods: Modifiers) -> Vec<Node> {
        let n = self.rng.gen_range(0..=self.cfg.max_args);
        (0..n).map(|_| self.param(mods)).collect()
    }

    fn class(&mut self) -> Node {
        let name = self.pick(&CLASSES);
        let mut kids = self.params(Modifiers::VAL);
        if self.rng.gen_bool(0.3) {
            let sup = self.pick(&CLASSES);
            let args = self.args(2);
            kids.push(Node::new(NodeKind::ConstructorCall, sup, args));
        }
        let members = self.rng.gen_range(0..3);
        for _ in 0..members {
            if self.rng.gen_bool(0.5) {
                kids.push(self.fun());
            } else {
                let name = self.pick(&VARS);
                let init = self.expr(2);
                kids.push(Node::new(NodeKind::PropertyDecl, name, vec![self.ty(0), init]).with_mods(Modifiers::VAL));
            }
        }
        let mods = if self.rng.gen_bool(0.5) { Modifiers::OPEN } else { Modifiers::NONE };
        Node::new(NodeKind::ClassDecl, name, kids).with_mods(mods)
    }

    fn fun(&mut self) -> Node {
        let name = self.pick(&FUNS);
        let mut kids = self.params(Modifiers::NONE);
        if self.rng.gen_bool(0.7) {
            kids.push(self.ty(0));
        }
        if self.rng.gen_bool(0.3) {
            kids.push(self.expr(1));
        } else {
            kids.push(self.block(1));
        }
        Node::new(NodeKind::FunDecl, name, kids)
    }

    fn block(&mut self, depth: usize) -> Node {
        let n = if depth >= self.cfg.max_depth { 0 } else { self.rng.gen_range(0..=self.cfg.max_stmts) };
        let stmts = (0..n).map(|_| self.stmt(depth + 1)).collect();
        Node::new(NodeKind::Block, "", stmts)
    }

    fn stmt(&mut self, depth: usize) -> Node {
        let compound = depth < self.cfg.soft_depth;
        match self.rng.gen_range(0..if compound { 8 } else { 5 }) {
            0 | 1 => {
                let name = self.pick(&VARS);
                let mut kids = Vec::new();
                if self.rng.gen_bool(0.5) {
                    kids.push(self.ty(0));
                }
                kids.push(self.expr(depth));
                let m = if self.rng.gen_bool(0.5) { Modifiers::VAL } else { Modifiers::VAR };
                Node::new(NodeKind::VarDecl, name, kids).with_mods(m)
            }
            2 => {
                let target = match self.rng.gen_range(0..3) {
                    0 => {
                        let r = self.expr(depth + 1);
                        let name = self.pick(&VARS);
                        Node::new(NodeKind::MemberAccess, name, vec![atom(r)])
                    }
                    1 => {
                        let r = self.expr(depth + 1);
                        let i = self.expr(depth + 1);
                        Node::new(NodeKind::Index, "", vec![atom(r), i])
                    }
                    _ => Node::name_ref(self.pick(&VARS)),
                };
                let op = self.pick(&["=", "=", "+=", "-=", "*="]);
                Node::new(NodeKind::Assign, op, vec![target, self.expr(depth)])
            }
            3 => {
                let mut kids = Vec::new();
                if self.rng.gen_bool(0.7) {
                    kids.push(self.expr(depth));
                }
                Node::new(NodeKind::Return, "", kids)
            }
            4 => {
                let args = self.args(depth);
                Node::new(NodeKind::Call, self.pick(&FUNS), args)
            }
            5 => Node::new(NodeKind::While, "", vec![self.expr(depth), self.block(depth)]),
            6 => {
                let v = self.pick(&VARS);
                Node::new(NodeKind::For, v, vec![self.expr(depth), self.block(depth)])
            }
            _ => {
                let mut kids = vec![self.expr(depth), self.block(depth)];
                if self.rng.gen_bool(0.4) {
                    kids.push(self.block(depth));
                }
                Node::new(NodeKind::If, "", kids)
            }
        }
    }

    fn args(&mut self, depth: usize) -> Vec<Node> {
        let n = self.rng.gen_range(0..=self.cfg.max_args);
        (0..n)
            .map(|_| {
                let e = self.expr(depth + 1);
                if self.rng.gen_bool(0.15) {
                    Node::new(NodeKind::NamedArg, self.pick(&VARS), vec![e])
                } else {
                    e
                }
            })
            .collect()
    }

    fn production(&mut self, depth: usize) -> E {
        if depth >= self.cfg.max_depth {
            return E::ALL[self.rng.gen_range(0..6)];
        }
        if depth < self.cfg.soft_depth {
            return *E::ALL.choose(self.rng).expect("productions");
        }
        let w: Vec<f64> = E::ALL.iter().map(|e| 1.0 / (1 + e.arity()) as f64).collect();
        let total: f64 = w.iter().sum();
        let mut x = self.rng.gen_range(0.0..total);
        for (e, wi) in E::ALL.iter().zip(&w) {
            if x < *wi {
                return *e;
            }
            x -= wi;
        }
        E::Int
    }

    fn expr(&mut self, depth: usize) -> Node {
        let d = depth + 1;
        match self.production(depth) {
            E::Int => Node::leaf(NodeKind::IntLit, self.rng.gen_range(-5..100).to_string()),
            E::Bool => Node::leaf(NodeKind::BoolLit, if self.rng.gen_bool(0.5) { "true" } else { "false" }),
            E::Str => Node::leaf(NodeKind::StringLit, self.pick(&["", "a", "tl", "x y"])),
            E::Double => Node::leaf(NodeKind::DoubleLit, self.pick(&["0.5", "1.0", "2.25", "-3.0"])),
            E::Name => Node::name_ref(self.pick(&VARS)),
            E::FunRef => Node::leaf(NodeKind::FunRef, self.pick(&FUNS)),
            E::Unary => {
                let op = self.pick(&["-", "!"]);
                let mut e = self.expr(d);
                if e.kind.is_literal() && op == "-" {
                    e = Node::name_ref(self.pick(&VARS));
                }
                Node::new(NodeKind::UnaryOp, op, vec![e])
            }
            E::Binary => {
                let op = self.pick(&BINOPS);
                Node::new(NodeKind::BinaryOp, op, vec![self.expr(d), self.expr(d)])
            }
            E::Range => {
                let op = self.pick(&["..", "until", "downTo"]);
                Node::new(NodeKind::RangeExpr, op, vec![self.expr(d), self.expr(d)])
            }
            E::Call => {
                let args = self.args(d);
                Node::new(NodeKind::Call, self.pick(&FUNS), args)
            }
            E::Ctor => {
                let args = self.args(d);
                Node::new(NodeKind::ConstructorCall, self.pick(&CLASSES), args)
            }
            E::Method => {
                let mut kids = vec![atom(self.expr(d))];
                kids.extend(self.args(d));
                Node::new(NodeKind::MethodCall, self.pick(&FUNS), kids)
            }
            E::Member => Node::new(NodeKind::MemberAccess, self.pick(&VARS), vec![atom(self.expr(d))]),
            E::Index => {
                let r = atom(self.expr(d));
                Node::new(NodeKind::Index, "", vec![r, self.expr(d)])
            }
        }
    }
}

/// Receivers that cannot be printed unambiguously are replaced by a name.
fn atom(n: Node) -> Node {
    if n.kind.is_literal() && n.text.starts_with('-') {
        Node::name_ref("a")
    } else {
        n
    }
}
