//! Structure-agnostic random mutation of a seed program.

use rand::Rng;

use crate::lang::{Node, NodeId, NodeKind, SyntaxTree};
use crate::stdlib::random_primitive_value;
use crate::types::Prim;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edit {
    Swap,
    Delete,
    Duplicate,
    Literal,
}

impl Edit {
    pub const ALL: [Edit; 4] = [Edit::Swap, Edit::Delete, Edit::Duplicate, Edit::Literal];
}

/// Relative frequency of each edit, indexed like [`Edit::ALL`].
pub const EDIT_WEIGHTS: [u32; 4] = [4, 1, 1, 1];

/// Applies one random edit. Edits ignore types. The seed comes back unchanged only when no
/// edit applies at all.
pub fn mutate_random(seed: &SyntaxTree, rng: &mut impl Rng) -> SyntaxTree {
    mutate_random_with(seed, rng).0
}

pub fn mutate_random_with(seed: &SyntaxTree, rng: &mut impl Rng) -> (SyntaxTree, Option<Edit>) {
    let total: u32 = EDIT_WEIGHTS.iter().sum();
    let mut roll = rng.gen_range(0..total);
    let mut first = 0;
    for (i, w) in EDIT_WEIGHTS.iter().enumerate() {
        if roll < *w {
            first = i;
            break;
        }
        roll -= w;
    }
    for k in 0..Edit::ALL.len() {
        let e = Edit::ALL[(first + k) % Edit::ALL.len()];
        let mut t = seed.clone();
        if apply(&mut t, e, rng) {
            return (t, Some(e));
        }
    }
    (seed.clone(), None)
}

fn apply(t: &mut SyntaxTree, e: Edit, rng: &mut impl Rng) -> bool {
    match e {
        Edit::Swap => swap(t, rng),
        Edit::Delete => {
            let cands = statements(t);
            if cands.is_empty() {
                return false;
            }
            let id = cands[rng.gen_range(0..cands.len())];
            t.remove_node(id).is_ok()
        }
        Edit::Duplicate => {
            let cands = statements(t);
            if cands.is_empty() {
                return false;
            }
            let id = cands[rng.gen_range(0..cands.len())];
            duplicate(t, id, rng)
        }
        Edit::Literal => {
            let mut lits = Vec::new();
            t.root.walk(&mut |n| {
                if n.kind.is_literal() {
                    lits.push(n.id);
                }
            });
            if lits.is_empty() {
                return false;
            }
            let id = lits[rng.gen_range(0..lits.len())];
            let prim = LITERALS[rng.gen_range(0..LITERALS.len())];
            let v = random_primitive_value(prim, rng).expect("literal type");
            let n = t.find_mut(id).expect("literal is in the tree");
            n.kind = v.expr.kind;
            n.text = v.expr.text;
            true
        }
    }
}

const LITERALS: [Prim; 5] = [Prim::Int, Prim::Long, Prim::Double, Prim::Boolean, Prim::String];

/// Swap classes: node kinds, except that all literals form one class.
fn class_of(k: NodeKind) -> NodeKind {
    if k.is_literal() {
        NodeKind::IntLit
    } else {
        k
    }
}

/// Children of blocks and top-level items.
fn statements(t: &SyntaxTree) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = t.items().iter().map(|n| n.id).collect();
    t.root.walk(&mut |n| {
        if n.kind == NodeKind::Block {
            out.extend(n.children.iter().map(|c| c.id));
        }
    });
    out
}

/// Inserts a copy of `id` at a random position among its siblings.
fn duplicate(t: &mut SyntaxTree, id: NodeId, rng: &mut impl Rng) -> bool {
    let Some(orig) = t.find(id).cloned() else { return false };
    let copy = t.adopt(orig);
    fn go(n: &mut Node, id: NodeId, copy: &mut Option<Node>, rng: &mut impl Rng) -> bool {
        if n.children.iter().any(|c| c.id == id) {
            let pos = rng.gen_range(0..=n.children.len());
            n.children.insert(pos, copy.take().expect("inserted once"));
            return true;
        }
        n.children.iter_mut().any(|c| go(c, id, copy, rng))
    }
    go(&mut t.root, id, &mut Some(copy), rng)
}

fn swap(t: &mut SyntaxTree, rng: &mut impl Rng) -> bool {
    let mut nodes: Vec<(NodeKind, NodeId)> = Vec::new();
    t.root.walk(&mut |n| {
        if n.kind != NodeKind::File {
            nodes.push((class_of(n.kind), n.id));
        }
    });
    let pairable: Vec<usize> =
        (0..nodes.len()).filter(|&i| nodes.iter().filter(|(k, _)| *k == nodes[i].0).count() > 1).collect();
    if pairable.is_empty() {
        return false;
    }
    for _ in 0..8 {
        let a = nodes[pairable[rng.gen_range(0..pairable.len())]];
        let partners: Vec<NodeId> = nodes
            .iter()
            .filter(|(k, id)| *k == a.0 && *id != a.1)
            .map(|p| p.1)
            .filter(|&b| !nested(t, a.1, b) && !t.find(a.1).expect("node a").same_shape(t.find(b).expect("node b")))
            .collect();
        if partners.is_empty() {
            continue;
        }
        let b = partners[rng.gen_range(0..partners.len())];
        let na = t.find(a.1).cloned().expect("node a");
        let nb = t.find(b).cloned().expect("node b");
        let hole = t.adopt(Node::leaf(NodeKind::Placeholder, ""));
        let hole_id = hole.id;
        t.put_node(a.1, hole).expect("slot a");
        t.put_node(b, na).expect("slot b");
        t.put_node(hole_id, nb).expect("slot a");
        return true;
    }
    false
}

fn nested(t: &SyntaxTree, a: NodeId, b: NodeId) -> bool {
    let na = t.find(a).expect("node a");
    let nb = t.find(b).expect("node b");
    na.contains(b) || nb.contains(a)
}
