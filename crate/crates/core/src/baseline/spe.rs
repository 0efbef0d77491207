//! Skeletal program enumeration over variable names.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lang::{Node, NodeId, NodeKind, SyntaxTree};
use crate::types::{check_program, Res, TypeErrorList, VarKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HoleKind {
    /// The name of a `val`/`var` declaration.
    Decl,
    /// A read or assignment of a variable.
    Use,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarHole {
    pub node: NodeId,
    pub kind: HoleKind,
    pub original: String,
}

#[derive(Clone, Debug)]
enum Step {
    Push,
    Pop,
    Fixed(String),
    Hole(usize),
}

/// A program with its variable names punched out.
#[derive(Clone, Debug)]
pub struct VarSkeleton {
    pub tree: SyntaxTree,
    pub holes: Vec<VarHole>,
    /// Names of the declarations that are holes, in first-use order.
    pub vars: Vec<String>,
    /// Names bound by declarations that stay put (parameters, loop variables).
    pub fixed: Vec<String>,
    steps: Vec<Step>,
}

/// One name per hole.
pub type Filling = Vec<String>;

impl VarSkeleton {
    pub fn new(seed: &SyntaxTree) -> Result<VarSkeleton, TypeErrorList> {
        let a = check_program(seed)?;
        // a declaration can be renamed only if every reference to it is a hole
        let mut pinned: HashSet<NodeId> = HashSet::new();
        let mut in_fun = 0usize;
        collect_pins(&seed.root, &a.res, &mut in_fun, &mut pinned);
        let mut b = Builder { res: &a.res, pinned: &pinned, holes: Vec::new(), steps: Vec::new(), fixed: Vec::new(), in_fun: false };
        b.steps.push(Step::Push);
        for item in seed.items() {
            if !matches!(item.kind, NodeKind::FunDecl | NodeKind::ClassDecl | NodeKind::InterfaceDecl) {
                b.walk(item);
            }
        }
        b.in_fun = true;
        for item in seed.items() {
            match item.kind {
                NodeKind::FunDecl => b.function(item),
                NodeKind::ClassDecl | NodeKind::InterfaceDecl => {
                    for m in item.members().filter(|m| m.kind == NodeKind::FunDecl) {
                        b.function(m);
                    }
                }
                _ => {}
            }
        }
        b.steps.push(Step::Pop);
        let Builder { holes, mut steps, mut fixed, .. } = b;
        // a hole declaration sharing a name with a fixed one stays fixed
        let clash: HashSet<String> = fixed.iter().cloned().collect();
        let mut remap = HashMap::new();
        let mut kept = Vec::new();
        for (i, h) in holes.iter().enumerate() {
            if !(h.kind == HoleKind::Decl && clash.contains(&h.original)) {
                remap.insert(i, kept.len());
                kept.push(h.clone());
            }
        }
        for s in steps.iter_mut() {
            if let Step::Hole(i) = s {
                *s = match remap.get(i) {
                    Some(j) => Step::Hole(*j),
                    None => Step::Fixed(holes[*i].original.clone()),
                };
            }
        }
        let mut vars = Vec::new();
        for h in &kept {
            if h.kind == HoleKind::Decl && !vars.contains(&h.original) {
                vars.push(h.original.clone());
            }
        }
        fixed.sort();
        fixed.dedup();
        Ok(VarSkeleton { tree: seed.clone(), holes: kept, vars, fixed, steps })
    }

    pub fn original(&self) -> Filling {
        self.holes.iter().map(|h| h.original.clone()).collect()
    }

    /// Whether `fill` keeps every use bound and no frame declares a name twice.
    pub fn scope_ok(&self, fill: &[String]) -> bool {
        let mut frames: Vec<Vec<&str>> = Vec::new();
        for s in &self.steps {
            match s {
                Step::Push => frames.push(Vec::new()),
                Step::Pop => {
                    frames.pop();
                }
                Step::Fixed(n) => {
                    if let Some(f) = frames.last_mut() {
                        f.push(n);
                    }
                }
                Step::Hole(i) => {
                    let name = fill[*i].as_str();
                    match self.holes[*i].kind {
                        HoleKind::Decl => {
                            let Some(f) = frames.last_mut() else { return false };
                            if f.contains(&name) {
                                return false;
                            }
                            f.push(name);
                        }
                        HoleKind::Use => {
                            if !frames.iter().any(|f| f.contains(&name)) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// Renames hole variables by order of first occurrence.
    pub fn canonical(&self, fill: &[String]) -> Filling {
        let mut map: HashMap<&str, &str> = HashMap::new();
        let vars: HashSet<&str> = self.vars.iter().map(String::as_str).collect();
        fill.iter()
            .map(|n| {
                if !vars.contains(n.as_str()) {
                    return n.clone();
                }
                let next = map.len();
                let to = *map.entry(n.as_str()).or_insert_with(|| self.vars[next].as_str());
                to.to_string()
            })
            .collect()
    }

    pub fn instantiate(&self, fill: &[String]) -> SyntaxTree {
        let mut t = self.tree.clone();
        for (h, n) in self.holes.iter().zip(fill) {
            if let Some(node) = t.find_mut(h.node) {
                node.text = n.clone();
            }
        }
        t
    }

    /// Candidate names at each hole given a partial filling. `None` once
    /// the filling violates scoping.
    fn candidates(&self, prefix: &[String]) -> Option<Vec<String>> {
        let k = prefix.len();
        let mut frames: Vec<Vec<&str>> = Vec::new();
        let vars: HashSet<&str> = self.vars.iter().map(String::as_str).collect();
        let mut used: Vec<&str> = Vec::new();
        for s in &self.steps {
            match s {
                Step::Push => frames.push(Vec::new()),
                Step::Pop => {
                    frames.pop();
                }
                Step::Fixed(n) => {
                    if let Some(f) = frames.last_mut() {
                        f.push(n);
                    }
                }
                Step::Hole(i) if *i == k => {
                    let kind = self.holes[*i].kind;
                    let mut out: Vec<String> = Vec::new();
                    match kind {
                        HoleKind::Decl => {
                            let cur = frames.last()?;
                            for u in &used {
                                if !cur.contains(u) {
                                    out.push(u.to_string());
                                }
                            }
                            if used.len() < self.vars.len() {
                                let fresh = self.vars[used.len()].clone();
                                out.push(fresh);
                            }
                        }
                        HoleKind::Use => {
                            let mut seen = HashSet::new();
                            for f in &frames {
                                for n in f {
                                    if seen.insert(*n) {
                                        out.push(n.to_string());
                                    }
                                }
                            }
                        }
                    }
                    return Some(out);
                }
                Step::Hole(i) if *i < k => {
                    let name = prefix[*i].as_str();
                    if vars.contains(name) && !used.contains(&name) {
                        used.push(name);
                    }
                    match self.holes[*i].kind {
                        HoleKind::Decl => frames.last_mut()?.push(name),
                        HoleKind::Use => {
                            if !frames.iter().any(|f| f.contains(&name)) {
                                return None;
                            }
                        }
                    }
                }
                Step::Hole(_) => {}
            }
        }
        Some(Vec::new())
    }

    /// A uniformly-stepped random canonical filling.
    pub fn sample(&self, rng: &mut impl Rng) -> Option<Filling> {
        let mut fill = Vec::with_capacity(self.holes.len());
        while fill.len() < self.holes.len() {
            let c = self.candidates(&fill)?;
            fill.push(c.choose(rng)?.clone());
        }
        Some(fill)
    }
}

fn hole_kind(kind: &VarKind) -> bool {
    matches!(kind, VarKind::Local | VarKind::Param | VarKind::LoopVar | VarKind::Global)
}

fn collect_pins(n: &Node, res: &HashMap<NodeId, Res>, in_fun: &mut usize, pinned: &mut HashSet<NodeId>) {
    let enters = matches!(n.kind, NodeKind::FunDecl | NodeKind::ClassDecl | NodeKind::InterfaceDecl);
    if enters {
        *in_fun += 1;
    }
    match res.get(&n.id) {
        Some(Res::Var { kind, decl }) => {
            let holeable = n.kind == NodeKind::NameRef && hole_kind(kind) && !(*kind == VarKind::Global && *in_fun > 0);
            if !holeable {
                pinned.insert(*decl);
            }
        }
        Some(Res::CallValue { decl, .. }) => {
            pinned.insert(*decl);
        }
        _ => {}
    }
    for c in &n.children {
        collect_pins(c, res, in_fun, pinned);
    }
    if enters {
        *in_fun -= 1;
    }
}

struct Builder<'a> {
    res: &'a HashMap<NodeId, Res>,
    pinned: &'a HashSet<NodeId>,
    holes: Vec<VarHole>,
    steps: Vec<Step>,
    fixed: Vec<String>,
    in_fun: bool,
}

impl Builder<'_> {
    fn fix(&mut self, name: &str) {
        self.fixed.push(name.to_string());
        self.steps.push(Step::Fixed(name.to_string()));
    }

    fn hole(&mut self, n: &Node, kind: HoleKind) {
        self.steps.push(Step::Hole(self.holes.len()));
        self.holes.push(VarHole { node: n.id, kind, original: n.text.clone() });
    }

    fn function(&mut self, f: &Node) {
        self.steps.push(Step::Push);
        for p in f.params() {
            self.fix(&p.text);
        }
        if let Some(b) = f.fun_body() {
            self.walk(b);
        }
        self.steps.push(Step::Pop);
    }

    fn walk(&mut self, n: &Node) {
        match n.kind {
            NodeKind::Block => {
                self.steps.push(Step::Push);
                for c in &n.children {
                    self.walk(c);
                }
                self.steps.push(Step::Pop);
            }
            NodeKind::For => {
                self.walk(&n.children[0]);
                self.steps.push(Step::Push);
                self.fix(&n.text);
                self.walk(&n.children[1]);
                self.steps.push(Step::Pop);
            }
            NodeKind::VarDecl => {
                if let Some(i) = n.initializer() {
                    self.walk(i);
                }
                if self.pinned.contains(&n.id) {
                    self.fix(&n.text);
                } else {
                    self.hole(n, HoleKind::Decl);
                }
            }
            NodeKind::NameRef => {
                if let Some(Res::Var { kind, .. }) = self.res.get(&n.id) {
                    if hole_kind(kind) && !(*kind == VarKind::Global && self.in_fun) {
                        self.hole(n, HoleKind::Use);
                    }
                }
            }
            NodeKind::FunDecl | NodeKind::ClassDecl | NodeKind::InterfaceDecl => {}
            _ => {
                for c in &n.children {
                    self.walk(c);
                }
            }
        }
    }
}

/// Distinct canonical instances of `seed`, in a random depth-first order,
/// at most `limit` of them.
pub fn spe_enumerate(seed: &SyntaxTree, limit: usize, rng: &mut impl Rng) -> Result<Vec<SyntaxTree>, TypeErrorList> {
    let sk = VarSkeleton::new(seed)?;
    Ok(enumerate_fillings(&sk, limit, rng).iter().map(|f| sk.instantiate(f)).collect())
}

pub fn enumerate_fillings(sk: &VarSkeleton, limit: usize, rng: &mut impl Rng) -> Vec<Filling> {
    let mut out = Vec::new();
    let mut stack: Vec<(Filling, Vec<String>)> = Vec::new();
    if let Some(mut c) = sk.candidates(&[]) {
        c.shuffle(rng);
        stack.push((Vec::new(), c));
    }
    if sk.holes.is_empty() {
        return vec![Vec::new()];
    }
    while out.len() < limit {
        let Some((prefix, cands)) = stack.last_mut() else { break };
        let Some(next) = cands.pop() else {
            stack.pop();
            continue;
        };
        let mut p = prefix.clone();
        p.push(next);
        if p.len() == sk.holes.len() {
            out.push(p);
            continue;
        }
        if let Some(mut c) = sk.candidates(&p) {
            c.shuffle(rng);
            stack.push((p, c));
        }
    }
    out
}

/// Independent oracle: every filling over the full name set, filtered by
/// scoping and deduplicated by canonical renaming.
pub fn brute_force_count(sk: &VarSkeleton) -> usize {
    let mut uses: Vec<String> = sk.vars.clone();
    for f in &sk.fixed {
        if !uses.contains(f) {
            uses.push(f.clone());
        }
    }
    let pools: Vec<&Vec<String>> =
        sk.holes.iter().map(|h| if h.kind == HoleKind::Decl { &sk.vars } else { &uses }).collect();
    if pools.iter().any(|p| p.is_empty()) {
        return 0;
    }
    let mut idx = vec![0usize; pools.len()];
    let mut seen: HashSet<Filling> = HashSet::new();
    loop {
        let fill: Filling = idx.iter().zip(&pools).map(|(i, p)| p[*i].clone()).collect();
        if sk.scope_ok(&fill) {
            seen.insert(sk.canonical(&fill));
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return seen.len();
            }
            idx[k] += 1;
            if idx[k] < pools[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
