//! Uniform syntax tree for TL programs.
//!
//! Every construct is a [`Node`] with a kind, a text payload, a modifier set and
//! an ordered child list. Child layouts per kind:
//!
//! | kind | text | children |
//! |------|------|----------|
//! | `File` | | items |
//! | `ClassDecl` | name | `TypeParamDecl*`, `Param*` (primary constructor), `ConstructorCall?` (superclass), `TypeRef*` (interfaces), members |
//! | `InterfaceDecl` | name | `TypeParamDecl*`, `TypeRef*` (super interfaces), members |
//! | `FunDecl` | name | `TypeParamDecl*`, `Param*`, `TypeRef?` (return type), body (`Block` or expression)? |
//! | `PropertyDecl` | name | `TypeRef?`, initializer? |
//! | `Param` | name | `TypeRef`, default value? |
//! | `TypeParamDecl` | name | `TypeRef?` (upper bound) |
//! | `TypeRef` | name, or `->` for function types | type arguments, or params then return type |
//! | `VarDecl` | name | `TypeRef?`, initializer |
//! | `Assign` | operator (`=`, `+=`, ...) | target, value |
//! | `While` | | condition, `Block` |
//! | `For` | loop variable | iterable, `Block` |
//! | `If` | | condition, `Block`, else (`Block` or `If`)? |
//! | `Return` | | value? |
//! | `Call` | callee | `TypeRef*`, arguments |
//! | `MethodCall` | method | receiver, `TypeRef*`, arguments |
//! | `ConstructorCall` | class | `TypeRef*`, arguments |
//! | `MemberAccess` | property | receiver |
//! | `Index` | | receiver, index expressions |
//! | `NamedArg` | parameter | value |
//! | `FunRef` | function | |
//! | `BinaryOp` / `RangeExpr` | operator | left, right |
//! | `UnaryOp` | operator | operand |
//! | literals / `NameRef` | payload | |
//! | `Placeholder` | expected type, printed | |

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    File,
    ClassDecl,
    InterfaceDecl,
    FunDecl,
    PropertyDecl,
    Param,
    TypeParamDecl,
    TypeRef,
    Block,
    VarDecl,
    Assign,
    While,
    For,
    If,
    Return,
    Call,
    MethodCall,
    ConstructorCall,
    MemberAccess,
    Index,
    NamedArg,
    FunRef,
    BinaryOp,
    UnaryOp,
    NameRef,
    IntLit,
    LongLit,
    DoubleLit,
    BoolLit,
    StringLit,
    RangeExpr,
    Placeholder,
}

impl NodeKind {
    pub fn is_expr(self) -> bool {
        use NodeKind::*;
        matches!(
            self,
            Call | MethodCall
                | ConstructorCall
                | MemberAccess
                | Index
                | FunRef
                | BinaryOp
                | UnaryOp
                | NameRef
                | IntLit
                | LongLit
                | DoubleLit
                | BoolLit
                | StringLit
                | RangeExpr
                | Placeholder
        )
    }

    pub fn is_literal(self) -> bool {
        use NodeKind::*;
        matches!(self, IntLit | LongLit | DoubleLit | BoolLit | StringLit)
    }

    pub fn is_decl(self) -> bool {
        use NodeKind::*;
        matches!(self, ClassDecl | InterfaceDecl | FunDecl | PropertyDecl)
    }

    pub fn is_stmt(self) -> bool {
        use NodeKind::*;
        matches!(self, VarDecl | Assign | While | For | If | Return) || self.is_expr()
    }
}

/// Declaration modifiers packed into a small bit set.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Modifiers(u16);

impl Modifiers {
    pub const NONE: Modifiers = Modifiers(0);
    pub const OPEN: Modifiers = Modifiers(1);
    pub const ABSTRACT: Modifiers = Modifiers(1 << 1);
    pub const OVERRIDE: Modifiers = Modifiers(1 << 2);
    pub const PRIVATE: Modifiers = Modifiers(1 << 3);
    pub const OPERATOR: Modifiers = Modifiers(1 << 4);
    pub const NATIVE: Modifiers = Modifiers(1 << 5);
    pub const VAL: Modifiers = Modifiers(1 << 6);
    pub const VAR: Modifiers = Modifiers(1 << 7);
    pub const VARARG: Modifiers = Modifiers(1 << 8);

    /// Keyword spelling, in the order the printer emits them.
    pub const KEYWORDS: [(Modifiers, &'static str); 7] = [
        (Modifiers::PRIVATE, "private"),
        (Modifiers::NATIVE, "native"),
        (Modifiers::OPEN, "open"),
        (Modifiers::ABSTRACT, "abstract"),
        (Modifiers::OVERRIDE, "override"),
        (Modifiers::OPERATOR, "operator"),
        (Modifiers::VARARG, "vararg"),
    ];

    pub fn has(self, other: Modifiers) -> bool {
        self.0 & other.0 == other.0 && other.0 != 0
    }

    pub fn with(self, other: Modifiers) -> Modifiers {
        Modifiers(self.0 | other.0)
    }

    pub fn without(self, other: Modifiers) -> Modifiers {
        Modifiers(self.0 & !other.0)
    }
}

impl fmt::Debug for Modifiers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<&str> = Modifiers::KEYWORDS
            .iter()
            .filter(|(m, _)| self.has(*m))
            .map(|(_, s)| *s)
            .collect();
        if self.has(Modifiers::VAL) {
            names.push("val");
        }
        if self.has(Modifiers::VAR) {
            names.push("var");
        }
        write!(f, "{{{}}}", names.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub text: String,
    pub mods: Modifiers,
    pub children: Vec<Node>,
}

impl Node {
    /// A fresh node; identifiers are assigned when the node joins a tree.
    pub fn new(kind: NodeKind, text: impl Into<String>, children: Vec<Node>) -> Node {
        Node { id: 0, kind, text: text.into(), mods: Modifiers::NONE, children }
    }

    pub fn leaf(kind: NodeKind, text: impl Into<String>) -> Node {
        Node::new(kind, text, Vec::new())
    }

    pub fn with_mods(mut self, mods: Modifiers) -> Node {
        self.mods = mods;
        self
    }

    pub fn name_ref(name: impl Into<String>) -> Node {
        Node::leaf(NodeKind::NameRef, name)
    }

    pub fn type_ref(name: impl Into<String>, args: Vec<Node>) -> Node {
        Node::new(NodeKind::TypeRef, name, args)
    }

    pub fn placeholder(type_text: impl Into<String>) -> Node {
        Node::leaf(NodeKind::Placeholder, type_text)
    }

    pub fn is_expr(&self) -> bool {
        self.kind.is_expr()
    }

    /// Structural equality ignoring node identifiers.
    pub fn same_shape(&self, other: &Node) -> bool {
        self.kind == other.kind
            && self.text == other.text
            && self.mods == other.mods
            && self.children.len() == other.children.len()
            && self.children.iter().zip(&other.children).all(|(a, b)| a.same_shape(b))
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Node::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Node::depth).max().unwrap_or(0)
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Node)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    /// Pre-order traversal with the parent of every visited node.
    pub fn walk_with_parent<'a>(&'a self, parent: Option<&'a Node>, f: &mut impl FnMut(&'a Node, Option<&'a Node>)) {
        f(self, parent);
        for c in &self.children {
            c.walk_with_parent(Some(self), f);
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Node)) {
        f(self);
        for c in &mut self.children {
            c.walk_mut(f);
        }
    }

    pub fn find(&self, id: NodeId) -> Option<&Node> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(id))
    }

    pub fn find_mut(&mut self, id: NodeId) -> Option<&mut Node> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(id))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.find(id).is_some()
    }

    /// Path of nodes from `self` down to the node with `id` (inclusive).
    pub fn path_to(&self, id: NodeId) -> Option<Vec<&Node>> {
        if self.id == id {
            return Some(vec![self]);
        }
        for c in &self.children {
            if let Some(mut p) = c.path_to(id) {
                p.insert(0, self);
                return Some(p);
            }
        }
        None
    }

    pub fn ids(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        self.walk(&mut |n| out.push(n.id));
        out
    }

    pub fn children_of(&self, kind: NodeKind) -> impl Iterator<Item = &Node> {
        self.children.iter().filter(move |c| c.kind == kind)
    }

    // ---- layout accessors -------------------------------------------------

    pub fn type_params(&self) -> impl Iterator<Item = &Node> {
        self.children_of(NodeKind::TypeParamDecl)
    }

    pub fn params(&self) -> impl Iterator<Item = &Node> {
        self.children_of(NodeKind::Param)
    }

    /// Declared type of a `VarDecl`/`PropertyDecl`/`Param`, the bound of a
    /// `TypeParamDecl`, or the return type of a `FunDecl`.
    pub fn declared_type(&self) -> Option<&Node> {
        self.children.iter().find(|c| c.kind == NodeKind::TypeRef)
    }

    /// Initializer of a `VarDecl`/`PropertyDecl`, default of a `Param`.
    pub fn initializer(&self) -> Option<&Node> {
        match self.kind {
            NodeKind::VarDecl | NodeKind::PropertyDecl | NodeKind::Param => {
                self.children.iter().find(|c| c.kind != NodeKind::TypeRef)
            }
            _ => None,
        }
    }

    /// Body of a `FunDecl`: a `Block` or a single expression.
    pub fn fun_body(&self) -> Option<&Node> {
        debug_assert_eq!(self.kind, NodeKind::FunDecl);
        self.children.last().filter(|c| {
            !matches!(c.kind, NodeKind::TypeRef | NodeKind::Param | NodeKind::TypeParamDecl)
        })
    }

    /// Explicit type arguments of a `Call`/`MethodCall`/`ConstructorCall`.
    pub fn type_args(&self) -> impl Iterator<Item = &Node> {
        let skip = usize::from(self.kind == NodeKind::MethodCall);
        self.children.iter().skip(skip).filter(|c| c.kind == NodeKind::TypeRef)
    }

    /// Value arguments of a call (positional expressions and `NamedArg`s).
    pub fn call_args(&self) -> impl Iterator<Item = &Node> {
        let skip = usize::from(self.kind == NodeKind::MethodCall);
        self.children.iter().skip(skip).filter(|c| c.kind != NodeKind::TypeRef)
    }

    /// Index of the first value argument in `children`.
    pub fn first_arg_index(&self) -> usize {
        let skip = usize::from(self.kind == NodeKind::MethodCall);
        skip + self.children.iter().skip(skip).take_while(|c| c.kind == NodeKind::TypeRef).count()
    }

    pub fn superclass_call(&self) -> Option<&Node> {
        self.children.iter().find(|c| c.kind == NodeKind::ConstructorCall)
    }

    /// Interface supertypes (for classes) or super interfaces (for interfaces).
    pub fn super_interfaces(&self) -> impl Iterator<Item = &Node> {
        self.children_of(NodeKind::TypeRef)
    }

    pub fn members(&self) -> impl Iterator<Item = &Node> {
        self.children.iter().filter(|c| matches!(c.kind, NodeKind::FunDecl | NodeKind::PropertyDecl))
    }
}

/// Byte range into printed or parsed text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> SourceSpan {
        debug_assert!(start <= end);
        SourceSpan { start, end }
    }

    /// 1-based line and column of `start` within `text`.
    pub fn line_col(&self, text: &str) -> (usize, usize) {
        let upto = &text[..self.start.min(text.len())];
        let line = upto.matches('\n').count() + 1;
        let col = upto.rfind('\n').map(|p| upto.len() - p).unwrap_or(upto.len() + 1);
        (line, col)
    }
}

#[derive(Clone, Debug)]
pub struct SyntaxTree {
    pub root: Node,
    pub next_id: NodeId,
    /// Source spans for nodes that came from the parser.
    pub spans: HashMap<NodeId, SourceSpan>,
}

impl PartialEq for SyntaxTree {
    fn eq(&self, other: &Self) -> bool {
        self.root.same_shape(&other.root)
    }
}

impl SyntaxTree {
    /// Wraps `root`, assigning fresh identifiers to every node.
    pub fn new(mut root: Node) -> SyntaxTree {
        let mut next = 1;
        root.walk_mut(&mut |n| {
            n.id = next;
            next += 1;
        });
        SyntaxTree { root, next_id: next, spans: HashMap::new() }
    }

    pub fn empty() -> SyntaxTree {
        SyntaxTree::new(Node::new(NodeKind::File, "", Vec::new()))
    }

    pub fn items(&self) -> &[Node] {
        &self.root.children
    }

    pub fn find(&self, id: NodeId) -> Option<&Node> {
        self.root.find(id)
    }

    pub fn find_mut(&mut self, id: NodeId) -> Option<&mut Node> {
        self.root.find_mut(id)
    }

    pub fn parent_of(&self, id: NodeId) -> Option<&Node> {
        let path = self.root.path_to(id)?;
        if path.len() >= 2 {
            Some(path[path.len() - 2])
        } else {
            None
        }
    }

    /// Gives every node of `node` a fresh identifier from this tree.
    pub fn adopt(&mut self, mut node: Node) -> Node {
        let mut next = self.next_id;
        node.walk_mut(&mut |n| {
            n.id = next;
            next += 1;
        });
        self.next_id = next;
        node
    }

    /// Structural replacement of `target` by `replacement`; the replacement
    /// receives fresh identifiers and every other node keeps its own.
    pub fn replace_node(&mut self, target: NodeId, replacement: Node) -> Result<NodeId, UnknownNode> {
        let fresh = self.adopt(replacement);
        let new_id = fresh.id;
        self.put_node(target, fresh)?;
        Ok(new_id)
    }

    /// Replaces `target` by `node` keeping the identifiers already present in
    /// `node`. Used to restore a previously detached subtree.
    pub fn put_node(&mut self, target: NodeId, node: Node) -> Result<Node, UnknownNode> {
        if self.root.id == target {
            return Ok(std::mem::replace(&mut self.root, node));
        }
        let slot = self.root.find_mut(target).ok_or(UnknownNode(target))?;
        let old = std::mem::replace(slot, node);
        // keep the counter ahead of any restored identifiers
        let mut max = self.next_id;
        self.root.walk(&mut |n| max = max.max(n.id + 1));
        self.next_id = max;
        Ok(old)
    }

    /// Removes the child with `target` from its parent.
    pub fn remove_node(&mut self, target: NodeId) -> Result<Node, UnknownNode> {
        fn go(n: &mut Node, target: NodeId) -> Option<Node> {
            if let Some(pos) = n.children.iter().position(|c| c.id == target) {
                return Some(n.children.remove(pos));
            }
            n.children.iter_mut().find_map(|c| go(c, target))
        }
        go(&mut self.root, target).ok_or(UnknownNode(target))
    }

    pub fn node_count(&self) -> usize {
        self.root.size()
    }

    /// Number of placeholder nodes in the tree.
    pub fn placeholder_count(&self) -> usize {
        let mut n = 0;
        self.root.walk(&mut |x| {
            if x.kind == NodeKind::Placeholder {
                n += 1
            }
        });
        n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown node {0}")]
pub struct UnknownNode(pub NodeId);

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SyntaxTree {
        SyntaxTree::new(Node::new(
            NodeKind::File,
            "",
            vec![Node::new(
                NodeKind::VarDecl,
                "a",
                vec![Node::type_ref("Int", vec![]), Node::placeholder("Int")],
            )
            .with_mods(Modifiers::VAR)],
        ))
    }

    #[test]
    fn ids_are_unique_and_replace_keeps_others() {
        let mut t = sample();
        let before = t.root.ids();
        let mut uniq = before.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), before.len());
        let ph = before[3];
        let new_id = t.replace_node(ph, Node::leaf(NodeKind::IntLit, "7")).unwrap();
        let after = t.root.ids();
        assert_eq!(&after[..3], &before[..3]);
        assert!(!before.contains(&new_id));
        assert_eq!(t.find(new_id).unwrap().text, "7");
    }

    #[test]
    fn unknown_target_is_an_error() {
        let mut t = sample();
        assert_eq!(t.replace_node(999, Node::leaf(NodeKind::IntLit, "1")), Err(UnknownNode(999)));
    }

    #[test]
    fn modifiers_combine() {
        let m = Modifiers::OPEN.with(Modifiers::OVERRIDE);
        assert!(m.has(Modifiers::OPEN) && m.has(Modifiers::OVERRIDE));
        assert!(!m.has(Modifiers::PRIVATE));
        assert!(!m.without(Modifiers::OPEN).has(Modifiers::OPEN));
    }

    #[test]
    fn line_col_counts_from_one() {
        let s = SourceSpan::new(6, 7);
        assert_eq!(s.line_col("abc\nde f"), (2, 3));
    }
}
