//! Mutation phase: typed skeletons filled from the expression pool.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gen::{ExprPool, GenConfig, Generator, TypedExpr};
use crate::lang::{merge_programs, Node, NodeId, NodeKind, SyntaxTree};
use crate::stdlib::Stdlib;
use crate::types::{analyze, check_with, Analysis, Env, Scope, Type, VarKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MutConfig {
    /// Fraction of eligible expressions turned into placeholders in round 0.
    pub initial_ratio: f64,
    /// Per-round shrink factor of the ratio and of the placeholder count.
    pub shrink: f64,
    pub max_iterations: usize,
    /// Wall-clock budget for mutating one program.
    pub time_guard_ms: u64,
    pub gen: GenConfig,
}

impl Default for MutConfig {
    fn default() -> Self {
        MutConfig { initial_ratio: 0.6, shrink: 0.5, max_iterations: 3, time_guard_ms: 2000, gen: GenConfig::default() }
    }
}

impl MutConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.initial_ratio > 0.0 && self.initial_ratio <= 1.0) {
            return Err(format!("initial_ratio must be in (0, 1], got {}", self.initial_ratio));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(format!("shrink must be in (0, 1), got {}", self.shrink));
        }
        Ok(())
    }
}

/// One typed hole.
#[derive(Clone, Debug)]
pub struct Hole {
    pub ty: Type,
    pub original: Node,
    pub scope: Scope,
    /// The hole is the target of an assignment.
    pub lhs: bool,
}

/// A program with some expressions replaced by typed placeholders.
#[derive(Clone, Debug)]
pub struct TypedSkeleton {
    pub tree: SyntaxTree,
    pub holes: BTreeMap<NodeId, Hole>,
    /// Number of positions that could have been selected.
    pub eligible: usize,
}

impl TypedSkeleton {
    pub fn len(&self) -> usize {
        self.holes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holes.is_empty()
    }

    /// Hole types in program order.
    pub fn types(&self) -> Vec<Type> {
        let mut out = Vec::new();
        self.tree.root.walk(&mut |n| {
            if let Some(h) = self.holes.get(&n.id) {
                out.push(h.ty.clone());
            }
        });
        out
    }

    /// Puts the original expressions back.
    pub fn restore(&self) -> SyntaxTree {
        let mut t = self.tree.clone();
        for (id, h) in &self.holes {
            t.put_node(*id, h.original.clone()).expect("hole is in the tree");
        }
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no candidate expression for the placeholder")]
pub struct NoCandidate;

/// Statistics of one mutation round.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: usize,
    pub ratio: f64,
    pub eligible: usize,
    pub placeholders: usize,
    pub filled: usize,
    pub rolled_back: usize,
    pub no_candidate: usize,
    pub timed_out: bool,
}

struct Site {
    id: NodeId,
    lhs: bool,
}

fn eligible_sites(tree: &SyntaxTree, a: &Analysis, items: std::ops::Range<usize>) -> Vec<Site> {
    let mut out = Vec::new();
    for item in &tree.items()[items] {
        item.walk_with_parent(None, &mut |n, parent| {
            let Some(p) = parent else { return };
            if !n.is_expr() || n.kind == NodeKind::Placeholder {
                return;
            }
            let lhs = p.kind == NodeKind::Assign && p.children[0].id == n.id;
            if lhs {
                if n.kind != NodeKind::NameRef {
                    return;
                }
                if a.scopes.get(&n.id).and_then(|s| s.lookup(&n.text)).is_some_and(|v| v.mutable) {
                    out.push(Site { id: n.id, lhs: true });
                }
                return;
            }
            if p.kind == NodeKind::ClassDecl {
                return;
            }
            match a.type_of(n.id) {
                Some(t) if !t.mentions_param() && *t != Type::UNIT => out.push(Site { id: n.id, lhs: false }),
                _ => {}
            }
        });
    }
    out
}

fn probe_all(tree: &SyntaxTree, items: std::ops::Range<usize>) -> HashSet<NodeId> {
    let mut s = HashSet::new();
    for item in &tree.items()[items] {
        item.walk(&mut |n| {
            if n.is_expr() {
                s.insert(n.id);
            }
        });
    }
    s
}

fn skeleton_from(
    tree: &SyntaxTree,
    std: &Stdlib,
    items: std::ops::Range<usize>,
    count: impl FnOnce(usize) -> usize,
    rng: &mut impl Rng,
) -> (TypedSkeleton, Analysis) {
    let a = analyze(tree, std, &probe_all(tree, items.clone()));
    let sites = eligible_sites(tree, &a, items);
    let n = count(sites.len()).min(sites.len());
    let mut picked: Vec<usize> = index::sample(rng, sites.len(), n).into_vec();
    picked.sort_unstable();
    let chosen: HashSet<NodeId> = picked.iter().map(|&i| sites[i].id).collect();
    let mut sk = TypedSkeleton { tree: tree.clone(), holes: BTreeMap::new(), eligible: sites.len() };
    for i in picked {
        let site = &sites[i];
        let path = tree.root.path_to(site.id).expect("site is in the tree");
        if path[..path.len() - 1].iter().any(|p| chosen.contains(&p.id)) {
            continue;
        }
        let original = path[path.len() - 1].clone();
        let scope = a.scopes.get(&site.id).cloned().unwrap_or_default();
        let ty = if site.lhs {
            scope.lookup(&original.text).map(|v| v.ty.clone()).expect("writable target is in scope")
        } else {
            a.type_of(site.id).cloned().expect("eligible sites are typed")
        };
        let mut ph = Node::placeholder(ty.to_string());
        ph.id = site.id;
        sk.tree.put_node(site.id, ph).expect("site is in the tree");
        sk.holes.insert(site.id, Hole { ty, original, scope, lhs: site.lhs });
    }
    (sk, a)
}

/// Replaces a uniformly sampled `ratio` fraction of the eligible
/// expressions of `tree` by placeholders annotated with their types.
/// Selected expressions nested in another selected one are left alone.
pub fn select_placeholders(tree: &SyntaxTree, ratio: f64, rng: &mut impl Rng) -> TypedSkeleton {
    let all = 0..tree.items().len();
    skeleton_from(tree, &Stdlib::active(), all, |n| (ratio.clamp(0.0, 1.0) * n as f64).round() as usize, rng).0
}

/// An expression of a subtype of `expected` drawn from the pool, a literal,
/// a stdlib call or a visible variable.
pub fn gen_ph_expr(
    expected: &Type,
    pool: &ExprPool,
    scope: &Scope,
    env: &Env,
    cfg: &GenConfig,
    rng: &mut impl Rng,
) -> Result<TypedExpr, NoCandidate> {
    let mut g = Generator::new(env, cfg, Cow::Borrowed(pool));
    g.scope = scope.visible().into_iter().filter(|v| usable(v.kind.clone())).cloned().collect();
    if rng.gen_bool(cfg.stdlib_variety.clamp(0.0, 1.0)) {
        if let Ok(e) = g.stdlib_call(expected, 0, rng) {
            return Ok(e);
        }
    }
    g.gen_value_of_type(expected, 0, rng).map_err(|_| NoCandidate)
}

fn usable(k: VarKind) -> bool {
    !matches!(k, VarKind::CtorParam)
}

fn fill_lhs(h: &Hole, rng: &mut impl Rng) -> Option<Node> {
    let vs: Vec<_> = h
        .scope
        .visible()
        .into_iter()
        .filter(|v| v.mutable && v.ty == h.ty && usable(v.kind.clone()))
        .collect();
    vs.choose(rng).map(|v| Node::name_ref(v.name.clone()))
}

struct Round<'a> {
    std: &'a Stdlib,
    pool: &'a ExprPool,
    cfg: &'a MutConfig,
    deadline: Instant,
}

impl Round<'_> {
    /// Selects `count(eligible)` holes among `items` of `tree` and fills
    /// them one by one, keeping each fill only if the program still checks.
    fn run(
        &self,
        tree: &SyntaxTree,
        items: std::ops::Range<usize>,
        round: usize,
        ratio: f64,
        count: impl FnOnce(usize) -> usize,
        rng: &mut impl Rng,
    ) -> (SyntaxTree, RoundStats) {
        let (sk, a) = skeleton_from(tree, self.std, items, count, rng);
        let mut st = RoundStats { round, ratio, eligible: sk.eligible, placeholders: sk.len(), ..RoundStats::default() };
        let mut cur = tree.clone();
        for (id, h) in &sk.holes {
            if Instant::now() >= self.deadline {
                st.timed_out = true;
                break;
            }
            let fill = if h.lhs {
                fill_lhs(h, rng)
            } else {
                match gen_ph_expr(&h.ty, self.pool, &h.scope, &a.env, &self.cfg.gen, rng) {
                    Ok(e) => {
                        assert!(a.env.is_subtype(&e.ty, &h.ty, &Default::default()), "fill {} is not a {}", e.ty, h.ty);
                        Some(e.expr)
                    }
                    Err(NoCandidate) => None,
                }
            };
            let Some(fill) = fill else {
                st.no_candidate += 1;
                continue;
            };
            let mut next = cur.clone();
            next.replace_node(*id, fill).expect("hole is in the tree");
            if check_with(&next, self.std).is_ok() {
                cur = next;
                st.filled += 1;
            } else {
                st.rolled_back += 1;
            }
        }
        (cur, st)
    }
}

fn target_count(ratio: f64, eligible: usize) -> usize {
    (ratio * eligible as f64).round() as usize
}

/// Merges `gen_seed` (already anonymized) into `mut_seed` and fills one
/// round of placeholders selected in the `mut_seed` part.
pub fn mutation_phase(
    mut_seed: &SyntaxTree,
    gen_seed: &SyntaxTree,
    pool: &ExprPool,
    cfg: &MutConfig,
    rng: &mut impl Rng,
) -> SyntaxTree {
    mutation_phase_stats(mut_seed, gen_seed, pool, cfg, rng).0
}

pub fn mutation_phase_stats(
    mut_seed: &SyntaxTree,
    gen_seed: &SyntaxTree,
    pool: &ExprPool,
    cfg: &MutConfig,
    rng: &mut impl Rng,
) -> (SyntaxTree, RoundStats) {
    let std = Stdlib::active();
    let empty = ExprPool::default();
    let (merged, start, pool) = match merge_programs(gen_seed, mut_seed) {
        Ok(m) => (m, gen_seed.items().len(), pool),
        Err(e) => {
            log::debug!("merge failed, mutating alone: {e}");
            (mut_seed.clone(), 0, &empty)
        }
    };
    let r = Round { std: &std, pool, cfg, deadline: Instant::now() + Duration::from_millis(cfg.time_guard_ms) };
    let end = merged.items().len();
    let ratio = cfg.initial_ratio;
    r.run(&merged, start..end, 0, ratio, |e| target_count(ratio, e), rng)
}

/// Repeated mutation of a whole program. Round `k` uses ratio `r0 * shrink^k`
/// and at most `floor(shrink * n)` placeholders where `n` is the count of
/// round `k - 1`.
pub fn iterate_mutation(program: &SyntaxTree, pool: &ExprPool, cfg: &MutConfig, rng: &mut impl Rng) -> SyntaxTree {
    iterate_mutation_stats(program, pool, cfg, rng).0
}

pub fn iterate_mutation_stats(
    program: &SyntaxTree,
    pool: &ExprPool,
    cfg: &MutConfig,
    rng: &mut impl Rng,
) -> (SyntaxTree, Vec<RoundStats>) {
    let std = Stdlib::active();
    let r = Round { std: &std, pool, cfg, deadline: Instant::now() + Duration::from_millis(cfg.time_guard_ms) };
    continue_rounds(&r, program.clone(), 0, None, rng)
}

fn continue_rounds(
    r: &Round<'_>,
    mut cur: SyntaxTree,
    first: usize,
    mut prev: Option<usize>,
    rng: &mut impl Rng,
) -> (SyntaxTree, Vec<RoundStats>) {
    let mut stats = Vec::new();
    for k in first..r.cfg.max_iterations {
        if prev == Some(0) || Instant::now() >= r.deadline {
            break;
        }
        let ratio = r.cfg.initial_ratio * r.cfg.shrink.powi(k as i32);
        let cap = prev.map(|p| (r.cfg.shrink * p as f64).floor() as usize);
        let end = cur.items().len();
        let (next, st) = r.run(&cur, 0..end, k, ratio, |e| target_count(ratio, e).min(cap.unwrap_or(usize::MAX)), rng);
        prev = Some(st.placeholders);
        let stop = st.timed_out;
        cur = next;
        stats.push(st);
        if stop {
            break;
        }
    }
    (cur, stats)
}

/// One full TCE mutation: the merge round followed by the remaining rounds.
pub fn tce_mutate(
    mut_seed: &SyntaxTree,
    gen_seed: &SyntaxTree,
    pool: &ExprPool,
    cfg: &MutConfig,
    rng: &mut impl Rng,
) -> (SyntaxTree, Vec<RoundStats>) {
    let std = Stdlib::active();
    let deadline = Instant::now() + Duration::from_millis(cfg.time_guard_ms);
    let (first, st0) = mutation_phase_stats(mut_seed, gen_seed, pool, cfg, rng);
    let r = Round { std: &std, pool, cfg, deadline };
    let n0 = st0.placeholders;
    let timed_out = st0.timed_out;
    let mut stats = vec![st0];
    if timed_out {
        return (first, stats);
    }
    let (out, rest) = continue_rounds(&r, first, 1, Some(n0), rng);
    stats.extend(rest);
    (out, stats)
}

/// Checks the count law over emitted round statistics.
pub fn ratio_law_holds(stats: &[RoundStats], shrink: f64) -> bool {
    stats.windows(2).all(|w| w[1].placeholders as f64 <= shrink * w[0].placeholders as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::generation_phase;
    use crate::lang::{anonymize_names, parse, print};
    use crate::types::check_program;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const GEN: &str = "val a: Int = 1\nclass A(val a: Int) {\n    fun f(a: String): Int = a.length\n}\nfun f(a: Int): Int = a + 1\n";
    const FACT: &str = "fun factorial(n: Int): Double {\n    var result = 1.0\n    for (i in 1..n) {\n        result *= i\n    }\n    return result\n}\n";

    #[test]
    fn factorial_skeleton_types() {
        let t = parse(FACT).unwrap();
        let sk = select_placeholders(&t, 1.0, &mut ChaCha8Rng::seed_from_u64(0));
        let tys: Vec<String> = sk.types().iter().map(|t| t.to_string()).collect();
        assert_eq!(tys, ["Double", "IntRange", "Double", "Int", "Double"]);
        assert!(sk.holes.values().filter(|h| h.lhs).count() == 1);
    }

    #[test]
    fn ratio_zero_is_identity() {
        let t = parse(FACT).unwrap();
        let sk = select_placeholders(&t, 0.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(sk.is_empty());
        assert_eq!(print(&sk.tree).unwrap(), FACT);
    }

    #[test]
    fn restore_is_exact() {
        let t = parse(FACT).unwrap();
        for s in 0..20 {
            let sk = select_placeholders(&t, 0.5, &mut ChaCha8Rng::seed_from_u64(s));
            assert_eq!(print(&sk.restore()).unwrap(), FACT);
        }
    }

    #[test]
    fn val_targets_are_not_selected() {
        let t = parse("fun g(): Int {\n    val x = 1\n    var y = 2\n    y = x\n    return y\n}\n").unwrap();
        let sk = select_placeholders(&t, 1.0, &mut ChaCha8Rng::seed_from_u64(0));
        let lhs: Vec<_> = sk.holes.values().filter(|h| h.lhs).map(|h| h.original.text.clone()).collect();
        assert_eq!(lhs, ["y"]);
    }

    #[test]
    fn mutation_output_checks_and_uses_pool() {
        let gen = anonymize_names(&parse(GEN).unwrap(), 7);
        let mseed = parse(FACT).unwrap();
        let mut used = false;
        for s in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let pool = generation_phase(&gen, &GenConfig::default(), &mut rng);
            let (out, st) = mutation_phase_stats(&mseed, &gen, &pool, &MutConfig::default(), &mut rng);
            check_program(&out).unwrap();
            assert_eq!(st.placeholders, st.filled + st.rolled_back + st.no_candidate);
            let text = print(&out).unwrap();
            used |= text.lines().skip_while(|l| !l.starts_with("fun factorial")).any(|l| l.contains("_"));
        }
        assert!(used);
    }

    #[test]
    fn empty_pool_zero_ratio_is_merge() {
        let gen = anonymize_names(&parse(GEN).unwrap(), 3);
        let mseed = parse(FACT).unwrap();
        let cfg = MutConfig { initial_ratio: 1e-9, ..MutConfig::default() };
        let out = mutation_phase(&mseed, &gen, &ExprPool::default(), &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(out, merge_programs(&gen, &mseed).unwrap());
    }

    #[test]
    fn iteration_obeys_ratio_law() {
        let gen = anonymize_names(&parse(GEN).unwrap(), 5);
        let mseed = parse(FACT).unwrap();
        for s in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let pool = generation_phase(&gen, &GenConfig::default(), &mut rng);
            let cfg = MutConfig { initial_ratio: 1.0, ..MutConfig::default() };
            let (out, st) = tce_mutate(&mseed, &gen, &pool, &cfg, &mut rng);
            check_program(&out).unwrap();
            assert!(ratio_law_holds(&st, cfg.shrink), "{st:?}");
        }
    }

    #[test]
    fn zero_guard_returns_input() {
        let t = parse(FACT).unwrap();
        let cfg = MutConfig { time_guard_ms: 0, ..MutConfig::default() };
        let (out, st) = iterate_mutation_stats(&t, &ExprPool::default(), &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out, t);
        assert!(st.is_empty());
    }

    #[test]
    fn config_rejects_shrink_one() {
        assert!(MutConfig { shrink: 1.0, ..MutConfig::default() }.validate().is_err());
        assert!(MutConfig::default().validate().is_ok());
    }
}
