//! Witness search and refutation for finite constraint sets.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::constraint::{ordinal_runs, Constraint, Family, FilterBase};
use super::powerset::constructive_witness;
use crate::snapshot::Snapshot;
use crate::universe::{
    class::combinations, subset, CardinalityTier, ClassExpr, ClassSpec, Mode, SetValue, Universe,
};

#[derive(Clone, Debug)]
pub struct Budget {
    /// Largest subset size checked individually (the full set is always checked).
    pub max_subset: usize,
    /// Parametric families are instantiated with parameters `1..=param_limit`.
    pub param_limit: u64,
    /// Repair steps per witness search.
    pub steps: usize,
    /// Random restarts per witness search.
    pub restarts: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_subset: 3,
            param_limit: 4,
            steps: 600,
            restarts: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub enum FipResult {
    /// Each entry pairs constraint indices with a common member; one witness
    /// for a superset covers all its subsets.
    Witnessed {
        constraints: Vec<Constraint>,
        witnesses: Vec<(Vec<usize>, Snapshot)>,
        subsets_checked: usize,
    },
    /// A subset proven to have empty intersection.
    Refuted(Vec<Constraint>),
    Unknown(String),
}

impl FipResult {
    pub fn is_witnessed(&self) -> bool {
        matches!(self, FipResult::Witnessed { .. })
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, FipResult::Refuted(_))
    }
}

/// Fineness points used to instantiate the parametric fineness family.
pub fn sample_points<R: Rng>(u: &Universe, rng: &mut R, n: usize) -> Vec<SetValue> {
    let mut pts: Vec<SetValue> = u.elements().take(2).collect();
    while pts.len() < n {
        pts.push(u.sample_element(rng, 12));
    }
    pts.sort();
    pts.dedup();
    pts
}

/// Fineness points that matter for the compared classes: for each proven
/// inclusion `A ⊊ B` one element of `B ∖ A`, and every member of a small
/// finite class, whose count is then fixed on all witnesses.
fn separators(fb: &FilterBase, u: &Universe) -> Vec<SetValue> {
    let mut classes: Vec<&ClassSpec> = Vec::new();
    for c in fb.concrete() {
        if matches!(c, Constraint::OrderLt(..) | Constraint::OrderGe(..)) {
            for x in c.classes() {
                if !classes.contains(&x) {
                    classes.push(x);
                }
            }
        }
    }
    let mut prover = Prover::new(u);
    let none = BTreeSet::new();
    let mut out = Vec::new();
    for a in &classes {
        for b in &classes {
            if a != b && prover.subset(a, b) == Some(true) {
                if let Some(x) = b
                    .difference(a)
                    .enumerate(u, &none)
                    .take(4096)
                    .find(|x| u.contains(x))
                {
                    out.push(x);
                }
            }
        }
        if matches!(a.tier(), CardinalityTier::Finite(k) if k <= 64) {
            out.extend(a.iter(u).filter(|x| u.contains(x)).take(64));
        }
    }
    out
}

/// Checks the finite intersection property of `fb` within `budget`.
pub fn check_fip(fb: &FilterBase, u: &Universe, budget: &Budget, seed: u64) -> FipResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = sample_points(u, &mut rng, 4);
    if fb.has_family(&Family::Fineness) {
        points.extend(separators(fb, u));
        points.sort();
        points.dedup();
    }
    let cs = fb.instantiate(budget.param_limit, &points);
    check_constraints(&cs, u, budget, &mut rng)
}

pub fn check_constraints<R: Rng>(
    cs: &[Constraint],
    u: &Universe,
    budget: &Budget,
    rng: &mut R,
) -> FipResult {
    let mut prover = Prover::new(u);
    if let Some(core) = prover.refute(cs) {
        return FipResult::Refuted(core);
    }
    let all: Vec<usize> = (0..cs.len()).collect();
    let subsets_checked: usize = (1..=budget.max_subset.min(cs.len()))
        .map(|k| combinations(cs.len(), k).count())
        .sum::<usize>()
        + 1;
    if let Some(w) = solve(cs, u, budget, rng).or_else(|| constructive_witness(cs, u, budget, rng))
    {
        return FipResult::Witnessed {
            constraints: cs.to_vec(),
            witnesses: vec![(all, w)],
            subsets_checked,
        };
    }
    let mut witnesses = Vec::new();
    for k in 1..=budget.max_subset.min(cs.len()) {
        for idx in combinations(cs.len(), k) {
            if witnesses
                .iter()
                .any(|(cover, _): &(Vec<usize>, Snapshot)| idx.iter().all(|i| cover.contains(i)))
            {
                continue;
            }
            let sub: Vec<Constraint> = idx.iter().map(|i| cs[*i].clone()).collect();
            if let Some(core) = prover.refute(&sub) {
                return FipResult::Refuted(core);
            }
            match solve(&sub, u, budget, rng) {
                Some(w) => witnesses.push((idx, w)),
                None => {
                    return FipResult::Unknown(format!(
                        "no witness found for {}",
                        sub.iter()
                            .map(|c| c.to_string())
                            .collect::<Vec<_>>()
                            .join("; ")
                    ))
                }
            }
        }
    }
    FipResult::Unknown("no witness found for the full set".into())
}

/// `count` witnesses of the intersection of `cs`, diversified by random extra states.
pub fn witnesses<R: Rng>(
    cs: &[Constraint],
    u: &Universe,
    count: usize,
    rng: &mut R,
) -> Vec<Snapshot> {
    let budget = Budget::default();
    let mut out = Vec::with_capacity(count);
    let mut failures = 0;
    while out.len() < count && failures < count.max(8) {
        match solve(cs, u, &budget, rng) {
            Some(w) => out.push(w),
            None => failures += 1,
        }
    }
    out
}

fn total(cs: &[Constraint], t: &Snapshot) -> usize {
    cs.iter().map(|c| c.deficit(t)).sum()
}

/// Greedy repair search for a common member of `cs`.
pub fn solve<R: Rng>(
    cs: &[Constraint],
    u: &Universe,
    budget: &Budget,
    rng: &mut R,
) -> Option<Snapshot> {
    if cs.iter().any(|c| matches!(c, Constraint::Interval(_))) && u.mode() == Mode::Hf {
        return None;
    }
    let pins: BTreeSet<SetValue> = cs
        .iter()
        .filter_map(|c| match c {
            Constraint::Fineness(x) => Some(x.clone()),
            _ => None,
        })
        .collect();
    if pins.iter().any(|x| !u.contains(x)) {
        return None;
    }
    for restart in 0..budget.restarts {
        let extras = if restart == 0 {
            rng.gen_range(0..3)
        } else {
            rng.gen_range(0..5)
        };
        let mut t = Snapshot::new(pins.iter().cloned());
        for _ in 0..extras {
            let x = u.sample_element(rng, 16);
            if u.contains(&x) {
                t = t.with([x]);
            }
        }
        if t.is_empty() {
            t = Snapshot::new([u.sample_element(rng, 8)]);
        }
        t = phase_repair(cs, t, &pins, u, rng);
        let mut best = total(cs, &t);
        let mut stale = 0;
        for _ in 0..budget.steps {
            if best == 0 {
                return Some(t);
            }
            let moves = candidate_moves(cs, &t, &pins, u, rng);
            let mut scored: Vec<(usize, Snapshot)> =
                moves.into_iter().map(|m| (total(cs, &m), m)).collect();
            if scored.is_empty() {
                break;
            }
            let low = scored.iter().map(|(s, _)| *s).min().unwrap();
            scored.retain(|(s, _)| *s == low);
            let (score, next) = scored.swap_remove(rng.gen_range(0..scored.len()));
            if score < best {
                stale = 0;
            } else {
                stale += 1;
                if stale > 40 {
                    break;
                }
            }
            best = score;
            t = next;
        }
        if best == 0 {
            return Some(t);
        }
    }
    None
}

/// Repairs constraints one kind at a time: ratios and orders, then
/// interval closure, then padding, then removals for subset bounds.
fn phase_repair(
    cs: &[Constraint],
    mut t: Snapshot,
    pins: &BTreeSet<SetValue>,
    u: &Universe,
    rng: &mut impl Rng,
) -> Snapshot {
    let phase = |c: &Constraint| match c {
        Constraint::Fineness(_) => 0,
        Constraint::Ratio { .. } | Constraint::OrderLt(..) | Constraint::OrderGe(..) => 1,
        Constraint::Interval(_) => 2,
        Constraint::MinSize(_) => 3,
        Constraint::Weight(_) => 4,
        _ => 5,
    };
    let mut ordered: Vec<&Constraint> = cs.iter().collect();
    ordered.sort_by_key(|c| phase(c));
    for _ in 0..12 {
        if total(cs, &t) == 0 {
            break;
        }
        for c in &ordered {
            let need = c.deficit(&t);
            if need == 0 {
                continue;
            }
            if let Constraint::SubsetBound { window, .. } = c {
                let mut drop: Vec<SetValue> = t
                    .states()
                    .iter()
                    .filter(|x| window.contains(x) && !pins.contains(x))
                    .cloned()
                    .collect();
                drop.shuffle(rng);
                drop.truncate(need);
                t = Snapshot::new(t.states().iter().filter(|s| !drop.contains(s)).cloned());
            } else if let Some(next) = bulk_move(c, need, &t, u, rng) {
                t = next;
            }
        }
    }
    t
}

/// Up to four fresh members of `class` outside `t`, the last one drawn a little further out.
fn fresh(class: &ClassSpec, u: &Universe, t: &Snapshot, rng: &mut impl Rng) -> Vec<SetValue> {
    let excl = t.to_set();
    let reach = 3 + rng.gen_range(0..6);
    let found: Vec<SetValue> = class
        .enumerate(u, &excl)
        .filter(|x| u.contains(x))
        .take(reach)
        .collect();
    let mut out: Vec<SetValue> = found.iter().take(3).cloned().collect();
    if found.len() > 3 {
        out.push(found[found.len() - 1].clone());
    }
    out
}

/// Adds enough fresh elements to repair `c` on its own, when adding can.
fn bulk_move(
    c: &Constraint,
    need: usize,
    t: &Snapshot,
    u: &Universe,
    rng: &mut impl Rng,
) -> Option<Snapshot> {
    let source = match c {
        Constraint::Ratio { a, b, .. } | Constraint::OrderLt(a, b) => b.difference(a),
        Constraint::OrderGe(a, b) => a.difference(b),
        Constraint::Weight(_) => ClassSpec::new(ClassExpr::NonOrdinals),
        Constraint::MinSize(_) => ClassSpec::universe(),
        Constraint::Interval(l) => {
            let mut added = Vec::new();
            for (x, len) in ordinal_runs(t) {
                if let SetValue::Ord(o) = x {
                    if (len as u64) < l + 1 {
                        added.extend((1..=*l).map(|i| SetValue::ord(o.omega, o.finite + i)));
                    }
                }
            }
            return (!added.is_empty())
                .then(|| t.with(added.into_iter().filter(|x| u.contains(x))));
        }
        _ => return None,
    };
    let excl = t.to_set();
    let skip = rng.gen_range(0..3);
    let picked: Vec<SetValue> = source
        .enumerate(u, &excl)
        .filter(|x| u.contains(x))
        .skip(skip)
        .take(need)
        .collect();
    (!picked.is_empty()).then(|| t.with(picked))
}

fn candidate_moves<R: Rng>(
    cs: &[Constraint],
    t: &Snapshot,
    pins: &BTreeSet<SetValue>,
    u: &Universe,
    rng: &mut R,
) -> Vec<Snapshot> {
    let mut violated: Vec<(usize, &Constraint)> = cs
        .iter()
        .map(|c| (c.deficit(t), c))
        .filter(|(d, _)| *d > 0)
        .collect();
    violated.shuffle(rng);
    violated.sort_by_key(|v| std::cmp::Reverse(v.0));
    let mut moves = Vec::new();
    for (need, c) in violated.into_iter().take(2) {
        if let Some(bulk) = bulk_move(c, need, t, u, rng) {
            moves.push(bulk);
        }
        let mut adds: Vec<SetValue> = Vec::new();
        let mut removes: Vec<SetValue> = Vec::new();
        let removable = |x: &SetValue| !pins.contains(x);
        match c {
            Constraint::Fineness(x) => adds.push(x.clone()),
            Constraint::Ratio { a, b, .. } | Constraint::OrderLt(a, b) => {
                adds.extend(fresh(&b.difference(a), u, t, rng));
                if adds.is_empty() {
                    adds.extend(fresh(b, u, t, rng));
                }
                removes.extend(
                    t.states()
                        .iter()
                        .filter(|x| a.contains(x) && !b.contains(x) && removable(x))
                        .cloned(),
                );
            }
            Constraint::OrderGe(a, b) => {
                adds.extend(fresh(&a.difference(b), u, t, rng));
                removes.extend(
                    t.states()
                        .iter()
                        .filter(|x| b.contains(x) && !a.contains(x) && removable(x))
                        .cloned(),
                );
            }
            Constraint::Interval(l) => {
                for (x, len) in ordinal_runs(t) {
                    if len as u64 > *l {
                        continue;
                    }
                    if let SetValue::Ord(o) = &x {
                        let next = SetValue::ord(o.omega, o.finite + 1);
                        if !t.contains(&next) {
                            adds.push(next);
                        }
                        if o.finite > 0 {
                            let prev = SetValue::ord(o.omega, o.finite - 1);
                            if !t.contains(&prev) {
                                adds.push(prev);
                            }
                        }
                    }
                    if removable(&x) {
                        removes.push(x);
                    }
                    if adds.len() > 4 {
                        break;
                    }
                }
            }
            Constraint::Weight(_) => {
                adds.extend(fresh(&ClassSpec::new(ClassExpr::NonOrdinals), u, t, rng));
                let on = ClassSpec::new(ClassExpr::Ordinals);
                removes.extend(
                    t.states()
                        .iter()
                        .filter(|x| on.contains(x) && removable(x))
                        .cloned(),
                );
            }
            Constraint::SubsetBound { window, .. } => {
                removes.extend(
                    t.states()
                        .iter()
                        .filter(|x| window.contains(x) && removable(x))
                        .cloned(),
                );
            }
            Constraint::MinSize(_) => adds.extend(fresh(&ClassSpec::universe(), u, t, rng)),
            Constraint::Parametric(_) => {}
        }
        removes.shuffle(rng);
        removes.truncate(4);
        moves.extend(
            adds.into_iter()
                .filter(|x| u.contains(x))
                .map(|x| t.with([x])),
        );
        moves.extend(
            removes
                .into_iter()
                .map(|x| Snapshot::new(t.states().iter().filter(|s| **s != x).cloned())),
        );
    }
    moves.retain(|m| !m.is_empty());
    moves
}

/// Proves empty intersections from count inequalities: `lt` and `ge`
/// constraints and proven class inclusions form a difference system whose
/// positive cycles are contradictions.
pub struct Prover<'u> {
    u: &'u Universe,
    cache: HashMap<(ClassSpec, ClassSpec), Option<bool>>,
    sizes: HashMap<ClassSpec, Option<usize>>,
}

impl<'u> Prover<'u> {
    pub fn new(u: &'u Universe) -> Self {
        Prover {
            u,
            cache: HashMap::new(),
            sizes: HashMap::new(),
        }
    }

    pub fn subset(&mut self, a: &ClassSpec, b: &ClassSpec) -> Option<bool> {
        let u = self.u;
        *self
            .cache
            .entry((a.clone(), b.clone()))
            .or_insert_with(|| subset(a, b, Some(u)))
    }

    /// Number of members of a declared-finite class inside the universe, when small.
    fn size(&mut self, c: &ClassSpec) -> Option<usize> {
        if let Some(s) = self.sizes.get(c) {
            return *s;
        }
        let u = self.u;
        let s = match c.tier() {
            CardinalityTier::Finite(k) if k <= 4096 => {
                let n = c.iter(u).filter(|x| u.contains(x)).take(4097).count();
                (n <= 4096).then_some(n)
            }
            _ => None,
        };
        self.sizes.insert(c.clone(), s);
        s
    }

    /// A minimal inconsistent subset of `cs`, if one is found.
    pub fn refute(&mut self, cs: &[Constraint]) -> Option<Vec<Constraint>> {
        for c in cs {
            if let Constraint::Ratio { a, b, k } = c {
                if *k >= 2 && self.subset(b, a) == Some(true) {
                    return Some(vec![c.clone()]);
                }
            }
        }
        let pins: Vec<&Constraint> = cs
            .iter()
            .filter(|c| matches!(c, Constraint::Fineness(_)))
            .collect();
        for c in cs {
            if let Constraint::SubsetBound { window, bound } = c {
                let inside: Vec<Constraint> = pins
                    .iter()
                    .filter(|p| matches!(p, Constraint::Fineness(x) if window.contains(x)))
                    .map(|p| (*p).clone())
                    .collect();
                if inside.len() >= *bound {
                    let mut core: Vec<Constraint> = inside.into_iter().take(*bound).collect();
                    core.push(c.clone());
                    return Some(core);
                }
            }
        }
        let order: Vec<Constraint> = cs
            .iter()
            .filter(|c| matches!(c, Constraint::OrderLt(..) | Constraint::OrderGe(..)))
            .cloned()
            .collect();
        if order.is_empty() {
            return None;
        }
        let order: Vec<Constraint> = order
            .into_iter()
            .chain(
                cs.iter()
                    .filter(|c| matches!(c, Constraint::Fineness(_)))
                    .cloned(),
            )
            .collect();
        if !self.infeasible(&order) {
            return None;
        }
        let mut core = order;
        let mut i = 0;
        while i < core.len() {
            let mut trial = core.clone();
            trial.remove(i);
            if !trial.is_empty() && self.infeasible(&trial) {
                core = trial;
            } else {
                i += 1;
            }
        }
        Some(core)
    }

    fn infeasible(&mut self, order: &[Constraint]) -> bool {
        let mut nodes: Vec<ClassSpec> = Vec::new();
        let id = |c: &ClassSpec, nodes: &mut Vec<ClassSpec>| match nodes.iter().position(|x| x == c)
        {
            Some(i) => i,
            None => {
                nodes.push(c.clone());
                nodes.len() - 1
            }
        };
        // count(v) ≥ count(u) + w
        let mut edges: Vec<(usize, usize, i64)> = Vec::new();
        for c in order {
            match c {
                Constraint::OrderLt(a, b) => {
                    let (i, j) = (id(a, &mut nodes), id(b, &mut nodes));
                    edges.push((i, j, 1));
                }
                Constraint::OrderGe(a, b) => {
                    let (i, j) = (id(a, &mut nodes), id(b, &mut nodes));
                    edges.push((j, i, 0));
                }
                _ => {}
            }
        }
        let pins: Vec<&SetValue> = order
            .iter()
            .filter_map(|c| match c {
                Constraint::Fineness(x) => Some(x),
                _ => None,
            })
            .collect();
        let n = nodes.len();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.subset(&nodes[i], &nodes[j]) == Some(true) {
                    let strict = pins
                        .iter()
                        .any(|x| nodes[j].contains(x) && !nodes[i].contains(x));
                    edges.push((i, j, i64::from(strict)));
                }
            }
        }
        // node `n` stands for the constant zero: pins give lower bounds,
        // small finite classes upper bounds
        for (i, node) in nodes.iter().enumerate().take(n) {
            let pinned = pins.iter().filter(|x| node.contains(x)).count() as i64;
            if pinned > 0 {
                edges.push((n, i, pinned));
            }
            if let Some(size) = self.size(node) {
                edges.push((i, n, -(size as i64)));
            }
        }
        let n = n + 1;
        const NONE: i64 = i64::MIN / 4;
        let mut dist = vec![vec![NONE; n]; n];
        for (i, j, w) in edges {
            dist[i][j] = dist[i][j].max(w);
        }
        for k in 0..n {
            for i in 0..n {
                if dist[i][k] == NONE {
                    continue;
                }
                for j in 0..n {
                    if dist[k][j] == NONE {
                        continue;
                    }
                    let via = (dist[i][k] + dist[k][j]).min(1 << 40);
                    if via > dist[i][j] {
                        dist[i][j] = via;
                    }
                }
            }
        }
        (0..n).any(|i| dist[i][i] > 0)
    }
}
