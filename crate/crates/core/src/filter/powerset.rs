//! Order judgements between classes and between their power classes: the
//! staged base builder and the witness extension that realizes a preorder.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::constraint::{Constraint, FilterBase};
use super::fip::{check_fip, solve, Budget, FipResult};
use crate::error::{NapError, Result};
use crate::snapshot::Snapshot;
use crate::universe::{
    class::combinations, ClassSpec, Collection, HfSet, Mode, SetValue, Universe,
};

/// Number of nested power-class operators around a class.
pub fn power_depth(c: &ClassSpec) -> usize {
    let mut depth = 0;
    let mut cur = c;
    while let Some(base) = cur.power_base() {
        depth += 1;
        cur = base;
    }
    depth
}

/// Pairs of distinct sets of rank `alpha`, read as classes of their members,
/// drawn with a seeded generator. Each set has between two and five members,
/// at least one of rank `alpha − 1`.
pub fn level_pairs(
    u: &Universe,
    alpha: u32,
    count: usize,
    seed: u64,
) -> Result<Vec<(ClassSpec, ClassSpec)>> {
    if u.mode() != Mode::Hf {
        return Err(NapError::WrongMode {
            op: "power-set levels",
        });
    }
    if alpha < 2 || alpha >= u.bound() {
        return Err(NapError::Window(format!(
            "level {alpha} is outside 2..{}",
            u.bound()
        )));
    }
    let (lo, hi) = match (Universe::level_size(alpha - 1), Universe::level_size(alpha)) {
        (Some(lo), Some(hi)) if hi <= 64 => (lo, hi),
        _ => {
            return Err(NapError::Window(format!(
                "level {alpha} is too large to sample"
            )))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let top = rng.gen_range(lo..hi);
        let size = rng.gen_range(1..=4.min(hi as usize - 1));
        let mut members = vec![HfSet::from_ackermann(top)];
        members.extend((0..size).map(|_| HfSet::from_ackermann(rng.gen_range(0..hi))));
        HfSet::from_members(members)
    };
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        if tries > 100 * (count + 1) {
            return Err(NapError::EnumerationExhausted {
                class: format!("rank({})", alpha + 1),
                needed: count,
            });
        }
        let (a, b) = (draw(), draw());
        if a != b {
            out.push((ClassSpec::members_of(&a), ClassSpec::members_of(&b)));
        }
    }
    Ok(out)
}

/// A finite total preorder on power classes, as groups listed from lowest to
/// highest; classes within a group are tied.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PowerOrder {
    pub groups: Vec<Vec<ClassSpec>>,
}

impl PowerOrder {
    pub fn new(groups: Vec<Vec<ClassSpec>>) -> Self {
        PowerOrder { groups }
    }

    pub fn is_empty(&self) -> bool {
        self.groups.iter().all(Vec::is_empty)
    }

    /// A linear extension of the order judgements in `judgements`. `lt(P,Q)`
    /// puts `P` below `Q`; `ge` in both directions ties; a one-way `ge(P,Q)`
    /// puts `Q` below `P`; an inclusion `P ⊊ Q` puts `P` below `Q` unless tied.
    /// Among unconstrained classes the one with the smaller base goes first.
    pub fn from_judgements(judgements: &[Constraint]) -> Result<PowerOrder> {
        let mut nodes: Vec<ClassSpec> = Vec::new();
        for c in judgements {
            for x in c.classes() {
                if !nodes.contains(x) {
                    nodes.push(x.clone());
                }
            }
        }
        let n = nodes.len();
        let idx = |c: &ClassSpec| nodes.iter().position(|x| x == c).unwrap();
        let mut ge: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut lt: Vec<(usize, usize)> = Vec::new();
        for c in judgements {
            match c {
                Constraint::OrderLt(a, b) => lt.push((idx(a), idx(b))),
                Constraint::OrderGe(a, b) => {
                    ge.insert((idx(a), idx(b)));
                }
                _ => {}
            }
        }
        let mut group: Vec<usize> = (0..n).collect();
        fn find(g: &mut [usize], i: usize) -> usize {
            if g[i] != i {
                let r = find(g, g[i]);
                g[i] = r;
            }
            g[i]
        }
        for &(a, b) in &ge {
            if ge.contains(&(b, a)) {
                let (ra, rb) = (find(&mut group, a), find(&mut group, b));
                group[ra] = rb;
            }
        }
        let roots: Vec<usize> = (0..n).map(|i| find(&mut group, i)).collect();
        let mut below: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(a, b) in &lt {
            below.insert((roots[a], roots[b]));
        }
        for &(a, b) in &ge {
            if !ge.contains(&(b, a)) {
                below.insert((roots[b], roots[a]));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if roots[i] != roots[j] && nested_power_subset(&nodes[i], &nodes[j]) == Some(true) {
                    below.insert((roots[i], roots[j]));
                }
            }
        }
        let size = |i: usize| base_size(&nodes[i]);
        let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, r) in roots.iter().enumerate().take(n) {
            members.entry(*r).or_default().push(i);
        }
        let mut pending: Vec<usize> = members.keys().copied().collect();
        let mut groups = Vec::new();
        while !pending.is_empty() {
            let ready: Vec<usize> = pending
                .iter()
                .copied()
                .filter(|r| {
                    !below
                        .iter()
                        .any(|(x, y)| y == r && *x != *r && pending.contains(x))
                })
                .collect();
            let Some(&next) = ready.iter().min_by_key(|r| {
                (
                    members[r].iter().map(|i| size(*i)).max(),
                    nodes[**r].key().to_string(),
                )
            }) else {
                return Err(NapError::MarkerMissing {
                    of: "order judgements".into(),
                    outside: "a consistent preorder".into(),
                });
            };
            pending.retain(|r| *r != next);
            groups.push(members[&next].iter().map(|i| nodes[*i].clone()).collect());
        }
        Ok(PowerOrder { groups })
    }
}

fn nested_power_subset(a: &ClassSpec, b: &ClassSpec) -> Option<bool> {
    if a == b {
        return Some(true);
    }
    crate::universe::subset(a, b, None)
}

fn base_size(c: &ClassSpec) -> u64 {
    match c.power_base().map(ClassSpec::tier) {
        Some(crate::universe::CardinalityTier::Finite(n)) => n,
        _ => u64::MAX,
    }
}

fn base_of(p: &ClassSpec) -> Result<&ClassSpec> {
    p.power_base().ok_or(NapError::WrongMode {
        op: "power-set witness on a class that is not a power class",
    })
}

/// Markers in `base(p)` outside `base(q)` for every `q` in `avoid`, reusing
/// markers where one separates several classes.
fn markers(u: &Universe, p: &ClassSpec, avoid: &[&ClassSpec]) -> Result<Vec<SetValue>> {
    let base = base_of(p)?;
    let mut chosen: Vec<SetValue> = Vec::new();
    for q in avoid {
        let other = base_of(q)?;
        if chosen.iter().any(|m| !other.contains(m)) {
            continue;
        }
        let none = BTreeSet::new();
        let found = base
            .enumerate(u, &none)
            .take(1 << 16)
            .find(|m| !other.contains(m));
        match found {
            Some(m) => chosen.push(m),
            None => {
                return Err(NapError::MarkerMissing {
                    of: base.to_string(),
                    outside: other.to_string(),
                })
            }
        }
    }
    Ok(chosen)
}

/// `need` members of `p` outside every class in `avoid` and outside `taken`.
/// HF members also contain a member of the base of the largest rank found,
/// so they sit on the level just above the base.
fn fresh_members(
    u: &Universe,
    p: &ClassSpec,
    avoid: &[&ClassSpec],
    taken: &BTreeSet<SetValue>,
    need: usize,
) -> Result<Vec<SetValue>> {
    if need == 0 {
        return Ok(Vec::new());
    }
    let base = base_of(p)?;
    let marks = markers(u, p, avoid)?;
    let exhausted = || NapError::EnumerationExhausted {
        class: p.to_string(),
        needed: need,
    };
    let mut out = Vec::with_capacity(need);
    match u.mode() {
        Mode::Hf => {
            let none = BTreeSet::new();
            let pool: Vec<HfSet> = base
                .enumerate(u, &none)
                .take(4096)
                .filter_map(|x| x.as_hf().cloned())
                .collect();
            let anchor = pool
                .iter()
                .max_by_key(|x| x.rank())
                .cloned()
                .ok_or_else(exhausted)?;
            let mut core: Vec<HfSet> = marks.iter().filter_map(|x| x.as_hf().cloned()).collect();
            if core.iter().all(|m| m.rank() < anchor.rank()) {
                core.push(anchor);
            }
            let rest: Vec<HfSet> = pool
                .into_iter()
                .filter(|x| !core.contains(x))
                .take(24)
                .collect();
            'sizes: for size in 0..=rest.len() {
                for combo in combinations(rest.len(), size) {
                    let x = SetValue::Hf(HfSet::from_members(
                        core.iter()
                            .cloned()
                            .chain(combo.iter().map(|i| rest[*i].clone())),
                    ));
                    if !u.contains(&x) {
                        return Err(exhausted());
                    }
                    if !taken.contains(&x) && !out.contains(&x) {
                        out.push(x);
                        if out.len() == need {
                            break 'sizes;
                        }
                    }
                }
            }
        }
        Mode::Ordinal => {
            let mut tag = 0u64;
            while out.len() < need && tag < 1 << 20 {
                let x = SetValue::Coll(Collection::intensional(base.clone(), marks.clone(), tag));
                if !taken.contains(&x) {
                    out.push(x);
                }
                tag += 1;
            }
        }
    }
    if out.len() < need {
        return Err(exhausted());
    }
    Ok(out)
}

/// Extends `f_minus` so that the counts of the power classes in `order` realize
/// it: each strict step adds one more member than the group below holds, and a
/// tied group is raised to a common count above the group below. Added
/// members avoid every lower or tied class, so earlier counts never move.
pub fn powerset_witness_extend(
    u: &Universe,
    f_minus: &Snapshot,
    order: &PowerOrder,
) -> Result<Snapshot> {
    let mut f = f_minus.to_set();
    let mut prev: Option<usize> = None;
    let mut lower: Vec<&ClassSpec> = Vec::new();
    for group in &order.groups {
        if group.is_empty() {
            continue;
        }
        let snap = Snapshot::new(f.iter().cloned());
        let counts: Vec<usize> = group.iter().map(|p| snap.count_in(p)).collect();
        let targets: Vec<usize> = if group.len() == 1 {
            vec![counts[0] + prev.map_or(0, |n| n + 1)]
        } else {
            let p = counts
                .iter()
                .copied()
                .max()
                .unwrap()
                .max(prev.map_or(0, |n| n + 1));
            vec![p; group.len()]
        };
        for (i, p) in group.iter().enumerate() {
            let mut avoid = lower.clone();
            avoid.extend(group.iter().filter(|q| *q != p));
            let add = fresh_members(u, p, &avoid, &f, targets[i] - counts[i])?;
            f.extend(add);
        }
        prev = Some(targets[0]);
        lower.extend(group.iter());
    }
    Ok(Snapshot::new(f))
}

fn is_power_judgement(c: &Constraint) -> bool {
    matches!(c, Constraint::OrderLt(a, b) | Constraint::OrderGe(a, b) if a.power_base().is_some() && b.power_base().is_some())
}

/// Builds a common member of `cs` the way the power-set argument does: a
/// witness of the judgements not about power classes, extended one power
/// depth at a time.
pub(crate) fn constructive_witness<R: Rng>(
    cs: &[Constraint],
    u: &Universe,
    budget: &Budget,
    rng: &mut R,
) -> Option<Snapshot> {
    let (power, rest): (Vec<Constraint>, Vec<Constraint>) =
        cs.iter().cloned().partition(is_power_judgement);
    if power.is_empty() {
        return None;
    }
    let mut f = solve(&rest, u, budget, rng)?;
    let depth = |c: &Constraint| {
        c.classes()
            .iter()
            .map(|x| power_depth(x))
            .max()
            .unwrap_or(0)
    };
    let deepest = power.iter().map(depth).max().unwrap_or(0);
    for d in 1..=deepest {
        let slice: Vec<Constraint> = power.iter().filter(|c| depth(c) == d).cloned().collect();
        let order = PowerOrder::from_judgements(&slice).ok()?;
        f = powerset_witness_extend(u, &f, &order).ok()?;
    }
    cs.iter()
        .all(|c| c.contains(&f).unwrap_or(false))
        .then_some(f)
}

/// The judgement on power classes matching an order judgement.
pub fn lift_judgement(c: &Constraint) -> Option<Constraint> {
    match c {
        Constraint::OrderLt(a, b) => Some(Constraint::OrderLt(a.power(), b.power())),
        Constraint::OrderGe(a, b) => Some(Constraint::OrderGe(a.power(), b.power())),
        _ => None,
    }
}

/// Adds the lift of every order judgement of the greatest power depth.
pub fn lift(fb: &FilterBase) -> FilterBase {
    let depth = |c: &Constraint| {
        c.classes()
            .iter()
            .map(|x| power_depth(x))
            .max()
            .unwrap_or(0)
    };
    let top = fb
        .concrete()
        .filter_map(|c| lift_judgement(c).map(|_| depth(c)))
        .max();
    let mut out = fb.clone();
    if let Some(top) = top {
        let lifted: Vec<Constraint> = fb
            .concrete()
            .filter(|c| depth(c) == top)
            .filter_map(lift_judgement)
            .collect();
        for c in lifted {
            out.push(c);
        }
        out.note(format!("lift to power depth {}", top + 1));
    }
    out
}

/// One stage of the staged base: for each pair in order, keep `lt(A,B)` when
/// it keeps the finite intersection property and `ge(A,B)` otherwise, then add
/// the lifted judgements on the power classes.
pub fn powerset_prefilter_stage(
    u: &Universe,
    prior: &FilterBase,
    pairs: &[(ClassSpec, ClassSpec)],
    budget: &Budget,
    seed: u64,
) -> Result<FilterBase> {
    let mut fb = prior.clone();
    if pairs.is_empty() {
        return Ok(fb);
    }
    let mut kept = Vec::new();
    for (i, (a, b)) in pairs.iter().enumerate() {
        let s = seed.wrapping_add(i as u64 * 2);
        let lt = Constraint::OrderLt(a.clone(), b.clone());
        let ge = Constraint::OrderGe(a.clone(), b.clone());
        let lt_ok = check_fip(&fb.with(lt.clone()), u, budget, s).is_witnessed();
        let ge_ok = check_fip(&fb.with(ge.clone()), u, budget, s + 1).is_witnessed();
        let choice = match (lt_ok, ge_ok) {
            (true, true) => {
                fb.note(format!("{lt}: both branches compatible, lt preferred"));
                lt
            }
            (true, false) => {
                fb.note(format!("{lt}: only lt compatible"));
                lt
            }
            (false, true) => {
                fb.note(format!("{ge}: only ge compatible"));
                ge
            }
            (false, false) => {
                return Err(NapError::BudgetExhausted(format!(
                    "neither branch witnessed for ({a}, {b})"
                )));
            }
        };
        fb.push(choice.clone());
        kept.push(choice);
    }
    for c in &kept {
        if let Some(l) = lift_judgement(c) {
            fb.push(l);
        }
    }
    fb.note(format!(
        "lifted {} judgement(s) to power classes",
        kept.len()
    ));
    match check_fip(&fb, u, budget, seed.wrapping_add(7919)) {
        FipResult::Witnessed { .. } => Ok(fb),
        FipResult::Refuted(core) => Err(NapError::BudgetExhausted(format!(
            "stage refuted by {}",
            core.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        ))),
        FipResult::Unknown(why) => Err(NapError::BudgetExhausted(why)),
    }
}

/// Shuffles a pair enumeration with a seeded generator.
pub fn shuffled_pairs(pairs: &[(ClassSpec, ClassSpec)], seed: u64) -> Vec<(ClassSpec, ClassSpec)> {
    let mut out = pairs.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}
