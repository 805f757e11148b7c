//! Intensional classes: a membership predicate, an enumerator that can skip
//! finite exclusion sets, and a declared cardinality tier.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::rv::{Permutation, RandomVariable, TableDefault};
use super::value::{Collection, CollectionNode, HfSet, Ordinal, SetValue};
use super::{Mode, Universe};

/// Consecutive non-yielding candidates a filtered enumerator inspects before it gives up.
pub const MISS_LIMIT: usize = 200_000;

/// Declared size of a class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CardinalityTier {
    Finite(u64),
    /// Desk analogue of ℵ_k.
    Tier(u32),
    ProperClass,
}

impl CardinalityTier {
    fn key(self) -> (u8, u64) {
        match self {
            CardinalityTier::Finite(n) => (0, n),
            CardinalityTier::Tier(k) => (1, u64::from(k)),
            CardinalityTier::ProperClass => (2, 0),
        }
    }

    pub fn is_infinite(self) -> bool {
        !matches!(self, CardinalityTier::Finite(_))
    }

    /// Tier of the power class.
    pub fn successor(self) -> Self {
        match self {
            CardinalityTier::Finite(n) if n < 63 => CardinalityTier::Finite(1 << n),
            CardinalityTier::Finite(_) => CardinalityTier::Finite(u64::MAX),
            CardinalityTier::Tier(k) => CardinalityTier::Tier(k + 1),
            CardinalityTier::ProperClass => CardinalityTier::ProperClass,
        }
    }
}

impl PartialOrd for CardinalityTier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CardinalityTier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for CardinalityTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CardinalityTier::Finite(n) => write!(f, "F{n}"),
            CardinalityTier::Tier(k) => write!(f, "T{k}"),
            CardinalityTier::ProperClass => f.write_str("PC"),
        }
    }
}

type Membership = dyn Fn(&SetValue) -> bool + Send + Sync;
type Generator = dyn Fn(u64) -> Option<SetValue> + Send + Sync;

/// A class given by closures; identified by its name.
#[derive(Clone)]
pub struct CustomClass {
    pub name: String,
    pub membership: Arc<Membership>,
    /// Stateless generator: the i-th member, `None` once exhausted.
    pub generator: Arc<Generator>,
}

#[derive(Clone)]
pub enum ClassExpr {
    Universe,
    Empty,
    Ordinals,
    Naturals,
    Even,
    Odd,
    Lim,
    NonOrdinals,
    Pads {
        modulus: u64,
        residue: u64,
    },
    /// `V_α ∖ V_{α−1}`: the hereditarily finite sets of rank α−1.
    RankLevel(u32),
    /// The members of an explicit hereditarily finite set.
    Members(HfSet),
    Finite(Vec<SetValue>),
    PowerClass(ClassSpec),
    FiniteSubsets(ClassSpec),
    /// `A ⊕ α = {γ + α : γ ∈ A}`.
    Translate(ClassSpec, Ordinal),
    Image(RandomVariable, ClassSpec),
    Union(ClassSpec, ClassSpec),
    Intersection(ClassSpec, ClassSpec),
    Difference(ClassSpec, ClassSpec),
    Custom(CustomClass),
}

struct ClassInner {
    expr: ClassExpr,
    tier: CardinalityTier,
    key: String,
}

/// An intensional class of universe elements.
#[derive(Clone)]
pub struct ClassSpec(Arc<ClassInner>);

impl PartialEq for ClassSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.key == other.0.key
    }
}

impl Eq for ClassSpec {}

impl PartialOrd for ClassSpec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ClassSpec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.key.cmp(&other.0.key)
    }
}

impl Hash for ClassSpec {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.key.hash(state);
    }
}

impl fmt::Display for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.key)
    }
}

impl fmt::Debug for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.key)
    }
}

fn expr_text(expr: &ClassExpr) -> String {
    match expr {
        ClassExpr::Universe => "V".into(),
        ClassExpr::Empty => "empty".into(),
        ClassExpr::Ordinals => "On".into(),
        ClassExpr::Naturals => "Nat".into(),
        ClassExpr::Even => "Even".into(),
        ClassExpr::Odd => "Odd".into(),
        ClassExpr::Lim => "Lim".into(),
        ClassExpr::NonOrdinals => "NonOrd".into(),
        ClassExpr::Pads { modulus, residue } => format!("pads({modulus},{residue})"),
        ClassExpr::RankLevel(a) => format!("rank({a})"),
        ClassExpr::Members(s) => format!("members({s})"),
        ClassExpr::Finite(v) => {
            let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("set[{}]", items.join(","))
        }
        ClassExpr::PowerClass(a) => format!("P({a})"),
        ClassExpr::FiniteSubsets(a) => format!("Fin({a})"),
        ClassExpr::Translate(a, o) => format!("translate({a},{o})"),
        ClassExpr::Image(rv, a) => format!("image({rv},{a})"),
        ClassExpr::Union(a, b) => format!("union({a},{b})"),
        ClassExpr::Intersection(a, b) => format!("inter({a},{b})"),
        ClassExpr::Difference(a, b) => format!("diff({a},{b})"),
        ClassExpr::Custom(c) => format!("custom({})", c.name),
    }
}

fn default_tier(expr: &ClassExpr) -> CardinalityTier {
    use CardinalityTier::*;
    match expr {
        ClassExpr::Universe | ClassExpr::NonOrdinals => ProperClass,
        ClassExpr::Empty => Finite(0),
        ClassExpr::Ordinals
        | ClassExpr::Naturals
        | ClassExpr::Even
        | ClassExpr::Odd
        | ClassExpr::Lim => Tier(0),
        ClassExpr::Pads { .. } => Tier(1),
        ClassExpr::RankLevel(a) => match (
            Universe::level_size(*a),
            Universe::level_size(a.saturating_sub(1)),
        ) {
            (Some(hi), Some(lo)) if *a >= 1 => Finite(hi - lo),
            (Some(_), Some(_)) => Finite(0),
            _ => Finite(u64::MAX),
        },
        ClassExpr::Members(s) => Finite(s.len() as u64),
        ClassExpr::Finite(v) => Finite(v.len() as u64),
        ClassExpr::PowerClass(a) => a.tier().successor(),
        ClassExpr::FiniteSubsets(a) => match a.tier() {
            Finite(_) => a.tier().successor(),
            t => t,
        },
        ClassExpr::Translate(a, _) | ClassExpr::Image(_, a) | ClassExpr::Difference(a, _) => {
            a.tier()
        }
        ClassExpr::Union(a, b) => a.tier().max(b.tier()),
        ClassExpr::Intersection(a, b) => a.tier().min(b.tier()),
        ClassExpr::Custom(_) => Tier(0),
    }
}

/// Eventual-periodicity profile of an ordinal-mode class: membership of
/// `ω·a + b` depends only on `(a, b mod 2)` once `b ≥ b_cut`, and is uniform
/// in `a` once `a > a_max`; membership of `pad(i)` is periodic with
/// `pad_period` once `i ≥ pad_cut`.
#[derive(Clone, Copy, Debug)]
struct Profile {
    b_cut: u64,
    a_max: u32,
    pad_cut: u64,
    pad_period: u64,
    /// False when closures or power classes make probing inconclusive.
    probeable: bool,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Profile {
    fn base() -> Self {
        Profile {
            b_cut: 1,
            a_max: 1,
            pad_cut: 0,
            pad_period: 1,
            probeable: true,
        }
    }

    fn join(self, other: Profile) -> Profile {
        let lcm = self.pad_period / gcd(self.pad_period, other.pad_period) * other.pad_period;
        Profile {
            b_cut: self.b_cut.max(other.b_cut),
            a_max: self.a_max.max(other.a_max),
            pad_cut: self.pad_cut.max(other.pad_cut),
            pad_period: lcm.min(1 << 20),
            probeable: self.probeable && other.probeable,
        }
    }

    fn absorb_values<'a>(mut self, values: impl IntoIterator<Item = &'a SetValue>) -> Profile {
        for v in values {
            match v {
                SetValue::Ord(o) => {
                    self.b_cut = self.b_cut.max(o.finite + 1);
                    self.a_max = self.a_max.max(o.omega);
                }
                SetValue::Pad(i) => self.pad_cut = self.pad_cut.max(i + 1),
                _ => {}
            }
        }
        self
    }
}

impl ClassSpec {
    pub fn new(expr: ClassExpr) -> Self {
        let tier = default_tier(&expr);
        let key = expr_text(&expr);
        ClassSpec(Arc::new(ClassInner { expr, tier, key }))
    }

    /// Re-declares the tier; the canonical key records the override.
    pub fn with_tier(&self, tier: CardinalityTier) -> Self {
        let base = expr_text(&self.0.expr);
        let key = if tier == default_tier(&self.0.expr) {
            base
        } else {
            format!("{base}@{tier}")
        };
        ClassSpec(Arc::new(ClassInner {
            expr: self.0.expr.clone(),
            tier,
            key,
        }))
    }

    pub fn custom(
        name: impl Into<String>,
        tier: CardinalityTier,
        membership: impl Fn(&SetValue) -> bool + Send + Sync + 'static,
        generator: impl Fn(u64) -> Option<SetValue> + Send + Sync + 'static,
    ) -> Self {
        ClassSpec::new(ClassExpr::Custom(CustomClass {
            name: name.into(),
            membership: Arc::new(membership),
            generator: Arc::new(generator),
        }))
        .with_tier(tier)
    }

    pub fn universe() -> Self {
        ClassSpec::new(ClassExpr::Universe)
    }

    pub fn empty() -> Self {
        ClassSpec::new(ClassExpr::Empty)
    }

    pub fn finite<I: IntoIterator<Item = SetValue>>(values: I) -> Self {
        let mut v: Vec<SetValue> = values.into_iter().collect();
        v.sort();
        v.dedup();
        ClassSpec::new(ClassExpr::Finite(v))
    }

    pub fn members_of(set: &HfSet) -> Self {
        ClassSpec::new(ClassExpr::Members(set.clone()))
    }

    pub fn power(&self) -> Self {
        ClassSpec::new(ClassExpr::PowerClass(self.clone()))
    }

    pub fn union(&self, other: &ClassSpec) -> Self {
        ClassSpec::new(ClassExpr::Union(self.clone(), other.clone()))
    }

    pub fn intersection(&self, other: &ClassSpec) -> Self {
        ClassSpec::new(ClassExpr::Intersection(self.clone(), other.clone()))
    }

    pub fn difference(&self, other: &ClassSpec) -> Self {
        ClassSpec::new(ClassExpr::Difference(self.clone(), other.clone()))
    }

    pub fn image(&self, rv: &RandomVariable) -> Self {
        ClassSpec::new(ClassExpr::Image(rv.clone(), self.clone()))
    }

    pub fn expr(&self) -> &ClassExpr {
        &self.0.expr
    }

    pub fn tier(&self) -> CardinalityTier {
        self.0.tier
    }

    /// Canonical text; equal classes have equal keys.
    pub fn key(&self) -> &str {
        &self.0.key
    }

    /// The class whose power class this is, if any.
    pub fn power_base(&self) -> Option<&ClassSpec> {
        match self.expr() {
            ClassExpr::PowerClass(a) => Some(a),
            _ => None,
        }
    }

    pub fn contains(&self, x: &SetValue) -> bool {
        match self.expr() {
            ClassExpr::Universe => true,
            ClassExpr::Empty => false,
            ClassExpr::Ordinals => is_ordinal(x),
            ClassExpr::Naturals => match x {
                SetValue::Ord(o) => o.is_natural(),
                SetValue::Hf(s) => s.as_von_neumann().is_some(),
                _ => false,
            },
            ClassExpr::Even => ordinal_parity(x) == Some(true),
            ClassExpr::Odd => ordinal_parity(x) == Some(false),
            ClassExpr::Lim => matches!(x, SetValue::Ord(o) if o.is_limit()),
            ClassExpr::NonOrdinals => !is_ordinal(x),
            ClassExpr::Pads { modulus, residue } => {
                matches!(x, SetValue::Pad(i) if i % modulus == *residue)
            }
            ClassExpr::RankLevel(a) => matches!(x, SetValue::Hf(s) if s.rank() + 1 == *a),
            ClassExpr::Members(s) => matches!(x, SetValue::Hf(m) if s.contains(m)),
            ClassExpr::Finite(v) => v.binary_search(x).is_ok(),
            ClassExpr::PowerClass(a) => match x {
                SetValue::Hf(s) => s
                    .members()
                    .iter()
                    .all(|m| a.contains(&SetValue::Hf(m.clone()))),
                SetValue::Coll(c) => match c.node() {
                    CollectionNode::Finite(v) => v.iter().all(|m| a.contains(m)),
                    CollectionNode::Intensional { base, markers, tag } => {
                        markers.iter().all(|m| a.contains(m))
                            && subset(&tail_of(base, *tag), a, None) == Some(true)
                    }
                },
                _ => false,
            },
            ClassExpr::FiniteSubsets(a) => match x {
                SetValue::Hf(s) => s
                    .members()
                    .iter()
                    .all(|m| a.contains(&SetValue::Hf(m.clone()))),
                SetValue::Coll(c) => match c.node() {
                    CollectionNode::Finite(v) => v.iter().all(|m| a.contains(m)),
                    CollectionNode::Intensional { .. } => false,
                },
                _ => false,
            },
            ClassExpr::Translate(a, alpha) => match x {
                SetValue::Ord(beta) => translate_contains(a, *alpha, *beta),
                _ => false,
            },
            ClassExpr::Image(rv, a) => image_contains(rv, a, x),
            ClassExpr::Union(a, b) => a.contains(x) || b.contains(x),
            ClassExpr::Intersection(a, b) => a.contains(x) && b.contains(x),
            ClassExpr::Difference(a, b) => a.contains(x) && !b.contains(x),
            ClassExpr::Custom(c) => (c.membership)(x),
        }
    }

    fn profile(&self) -> Profile {
        let p = Profile::base();
        match self.expr() {
            ClassExpr::Universe
            | ClassExpr::Empty
            | ClassExpr::Ordinals
            | ClassExpr::Naturals
            | ClassExpr::Even
            | ClassExpr::Odd
            | ClassExpr::Lim
            | ClassExpr::NonOrdinals
            | ClassExpr::RankLevel(_)
            | ClassExpr::Members(_) => p,
            ClassExpr::Pads { modulus, residue } => Profile {
                pad_cut: residue + 1,
                pad_period: (*modulus).max(1),
                ..p
            },
            ClassExpr::Finite(v) => p.absorb_values(v),
            ClassExpr::PowerClass(_) | ClassExpr::FiniteSubsets(_) | ClassExpr::Custom(_) => {
                Profile {
                    probeable: false,
                    ..p
                }
            }
            ClassExpr::Translate(a, alpha) => {
                let inner = a.profile();
                if alpha.omega == 0 {
                    Profile {
                        b_cut: inner.b_cut + alpha.finite,
                        ..inner
                    }
                } else {
                    Profile {
                        b_cut: alpha.finite + 1,
                        a_max: inner.a_max + alpha.omega,
                        ..inner
                    }
                }
            }
            ClassExpr::Image(rv, a) => {
                let inner = a.profile();
                match rv {
                    RandomVariable::Identity => inner,
                    RandomVariable::Diagonal(Permutation::Invar) => Profile {
                        b_cut: inner.b_cut + 3,
                        ..inner
                    },
                    RandomVariable::Diagonal(Permutation::Finite(map)) => {
                        inner.absorb_values(map.keys().chain(map.values()))
                    }
                    RandomVariable::Table { entries, default } => {
                        let mut q = inner.absorb_values(entries.keys().chain(entries.values()));
                        if let TableDefault::Constant(_) = default {
                            q.probeable = false;
                        }
                        q
                    }
                }
            }
            ClassExpr::Union(a, b)
            | ClassExpr::Intersection(a, b)
            | ClassExpr::Difference(a, b) => a.profile().join(b.profile()),
        }
    }

    /// Whether the class can contain values other than ordinals and pads.
    fn may_hold_collections(&self) -> bool {
        match self.expr() {
            ClassExpr::Universe
            | ClassExpr::NonOrdinals
            | ClassExpr::PowerClass(_)
            | ClassExpr::FiniteSubsets(_)
            | ClassExpr::Custom(_) => true,
            ClassExpr::Finite(v) => v
                .iter()
                .any(|x| matches!(x, SetValue::Coll(_) | SetValue::Hf(_))),
            ClassExpr::Members(_) | ClassExpr::RankLevel(_) => true,
            ClassExpr::Translate(..) => false,
            ClassExpr::Image(_, a) => a.may_hold_collections(),
            ClassExpr::Union(a, b) => a.may_hold_collections() || b.may_hold_collections(),
            ClassExpr::Intersection(a, b) => a.may_hold_collections() && b.may_hold_collections(),
            ClassExpr::Difference(a, _) => a.may_hold_collections(),
            _ => false,
        }
    }

    /// Lazily enumerates distinct members within the universe bound.
    pub fn iter<'a>(&'a self, u: &'a Universe) -> Box<dyn Iterator<Item = SetValue> + 'a> {
        match self.expr() {
            ClassExpr::Universe => match u.mode() {
                Mode::Hf => Box::new(hf_range(0, u.size_cap())),
                Mode::Ordinal => Box::new(interleave(
                    ordinals(u.bound(), |_| true),
                    (0..).map(SetValue::Pad),
                )),
            },
            ClassExpr::Empty => Box::new(std::iter::empty()),
            ClassExpr::Ordinals => match u.mode() {
                Mode::Hf => Box::new((0..u.bound()).map(|n| SetValue::Hf(HfSet::von_neumann(n)))),
                Mode::Ordinal => Box::new(ordinals(u.bound(), |_| true)),
            },
            ClassExpr::Naturals => match u.mode() {
                Mode::Hf => Box::new((0..u.bound()).map(|n| SetValue::Hf(HfSet::von_neumann(n)))),
                Mode::Ordinal => Box::new((0..).map(SetValue::nat)),
            },
            ClassExpr::Even | ClassExpr::Odd => {
                let want_even = matches!(self.expr(), ClassExpr::Even);
                match u.mode() {
                    Mode::Hf => Box::new(
                        (0..u.bound())
                            .filter(move |n| (n % 2 == 0) == want_even)
                            .map(|n| SetValue::Hf(HfSet::von_neumann(n))),
                    ),
                    Mode::Ordinal => {
                        Box::new(ordinals(u.bound(), move |b| (b % 2 == 0) == want_even))
                    }
                }
            }
            ClassExpr::Lim => match u.mode() {
                Mode::Hf => Box::new(std::iter::empty()),
                Mode::Ordinal => Box::new((1..u.bound()).map(|a| SetValue::ord(a, 0))),
            },
            ClassExpr::NonOrdinals => match u.mode() {
                Mode::Hf => Box::new(hf_range(0, u.size_cap()).filter(|x| !is_ordinal(x))),
                Mode::Ordinal => Box::new((0..).map(SetValue::Pad)),
            },
            ClassExpr::Pads { modulus, residue } => {
                let (m, r) = (*modulus, *residue);
                Box::new((0..).map(move |i| SetValue::Pad(r + m * i)))
            }
            ClassExpr::RankLevel(a) => {
                if u.mode() != Mode::Hf || *a == 0 {
                    return Box::new(std::iter::empty());
                }
                let lo = Universe::level_size(a - 1).unwrap_or(u64::MAX);
                let hi = Universe::level_size(*a).unwrap_or(u64::MAX);
                Box::new(hf_range(lo, hi))
            }
            ClassExpr::Members(s) => Box::new(s.members().iter().cloned().map(SetValue::Hf)),
            ClassExpr::Finite(v) => Box::new(v.iter().cloned()),
            ClassExpr::PowerClass(a) | ClassExpr::FiniteSubsets(a) => {
                let with_intensions = matches!(self.expr(), ClassExpr::PowerClass(_));
                power_iter(a, u, with_intensions)
            }
            ClassExpr::Translate(a, alpha) => {
                let alpha = *alpha;
                let bound = u.bound();
                dedup(a.iter(u).filter_map(move |g| match g {
                    SetValue::Ord(o) => {
                        let s = o + alpha;
                        (s.omega < bound).then_some(SetValue::Ord(s))
                    }
                    _ => None,
                }))
            }
            ClassExpr::Image(rv, a) => dedup(a.iter(u).map(move |s| rv.apply(&s))),
            ClassExpr::Union(a, b) => dedup(interleave(a.iter(u), b.iter(u))),
            ClassExpr::Intersection(a, b) => {
                let (small, big) = if a.tier() <= b.tier() { (a, b) } else { (b, a) };
                filtered(small.iter(u), move |x| big.contains(x))
            }
            ClassExpr::Difference(a, b) => match (a.power_base(), b.power_base()) {
                (Some(x), Some(y)) if u.mode() == Mode::Hf => power_difference_iter(x, y, u),
                _ => filtered(a.iter(u), move |x| !b.contains(x)),
            },
            ClassExpr::Custom(c) => {
                let g = c.generator.clone();
                Box::new((0u64..).map_while(move |i| g(i)))
            }
        }
    }

    /// Members in enumeration order, skipping `exclusions`.
    pub fn enumerate<'a>(
        &'a self,
        u: &'a Universe,
        exclusions: &'a BTreeSet<SetValue>,
    ) -> impl Iterator<Item = SetValue> + 'a {
        filtered(self.iter(u), move |x| !exclusions.contains(x))
    }

    /// The first `n` members outside `exclusions`, or `None` if fewer exist.
    pub fn take_fresh(
        &self,
        u: &Universe,
        exclusions: &BTreeSet<SetValue>,
        n: usize,
    ) -> Option<Vec<SetValue>> {
        let v: Vec<SetValue> = self.enumerate(u, exclusions).take(n).collect();
        (v.len() == n).then_some(v)
    }
}

fn is_ordinal(x: &SetValue) -> bool {
    match x {
        SetValue::Ord(_) => true,
        SetValue::Hf(s) => s.as_von_neumann().is_some(),
        _ => false,
    }
}

fn ordinal_parity(x: &SetValue) -> Option<bool> {
    match x {
        SetValue::Ord(o) => Some(o.is_even()),
        SetValue::Hf(s) => s.as_von_neumann().map(|n| n % 2 == 0),
        _ => None,
    }
}

fn translate_contains(a: &ClassSpec, alpha: Ordinal, beta: Ordinal) -> bool {
    if alpha.omega == 0 {
        beta.finite >= alpha.finite
            && a.contains(&SetValue::ord(beta.omega, beta.finite - alpha.finite))
    } else {
        if beta.finite != alpha.finite || beta.omega < alpha.omega {
            return false;
        }
        let block = beta.omega - alpha.omega;
        let p = a.profile();
        let limit = if p.probeable { p.b_cut + 4 } else { 4096 };
        (0..limit).any(|b| a.contains(&SetValue::ord(block, b)))
    }
}

fn image_contains(rv: &RandomVariable, a: &ClassSpec, y: &SetValue) -> bool {
    match rv {
        RandomVariable::Identity => a.contains(y),
        RandomVariable::Diagonal(p) => a.contains(&p.inverse(y)),
        RandomVariable::Table { entries, default } => {
            if entries.iter().any(|(k, v)| v == y && a.contains(k)) {
                return true;
            }
            match default {
                TableDefault::Identity => !entries.contains_key(y) && a.contains(y),
                TableDefault::Constant(c) => {
                    c == y && {
                        let u = Universe::for_value(y);
                        let found = a.iter(&u).take(4096).any(|s| !entries.contains_key(&s));
                        found
                    }
                }
            }
        }
    }
}

/// `base` without its first `tag` enumerated members.
fn tail_of(base: &ClassSpec, tag: u64) -> ClassSpec {
    if tag == 0 {
        return base.clone();
    }
    let u = Universe::default_for(base);
    let head: Vec<SetValue> = base.iter(&u).take(tag as usize).collect();
    base.difference(&ClassSpec::finite(head))
}

/// Decides `a ⊆ b` when possible: structural rules, then exact probing for
/// ordinal-mode classes, then exhaustive checking of small HF universes.
pub fn subset(a: &ClassSpec, b: &ClassSpec, u: Option<&Universe>) -> Option<bool> {
    if let Some(r) = structural_subset(a, b) {
        return Some(r);
    }
    if !a.may_hold_collections() {
        let (pa, pb) = (a.profile(), b.profile());
        if pa.probeable && pb.probeable {
            return Some(probe_points(pa.join(pb)).all(|x| !a.contains(&x) || b.contains(&x)));
        }
    }
    if let Some(u) = u {
        if u.mode() == Mode::Hf {
            if let Some(size) = u.exact_size().filter(|s| *s <= 1 << 16) {
                return Some(hf_range(0, size).all(|x| !a.contains(&x) || b.contains(&x)));
            }
        }
    }
    None
}

fn structural_subset(a: &ClassSpec, b: &ClassSpec) -> Option<bool> {
    use ClassExpr::*;
    if a == b {
        return Some(true);
    }
    match (a.expr(), b.expr()) {
        (_, Universe) | (Empty, _) => return Some(true),
        (Lim, Even)
        | (Lim, Ordinals)
        | (Even, Ordinals)
        | (Odd, Ordinals)
        | (Naturals, Ordinals) => return Some(true),
        (Pads { .. }, NonOrdinals) => return Some(true),
        (
            Pads {
                modulus: m1,
                residue: r1,
            },
            Pads {
                modulus: m2,
                residue: r2,
            },
        ) => {
            if m1 % m2 == 0 && r1 % m2 == *r2 {
                return Some(true);
            }
        }
        (Members(s), Members(t)) => return Some(s.is_subset(t)),
        (Finite(v), _) if v.iter().all(|x| b.contains(x)) => return Some(true),
        (Finite(v), _) => {
            if v.iter().any(|x| !b.contains(x)) {
                return Some(false);
            }
        }
        (PowerClass(x), PowerClass(y))
        | (FiniteSubsets(x), FiniteSubsets(y))
        | (FiniteSubsets(x), PowerClass(y)) => {
            if let Some(r) = subset(x, y, None) {
                return Some(r);
            }
        }
        _ => {}
    }
    match a.expr() {
        Union(x, y) => {
            if let (Some(true), Some(true)) = (subset(x, b, None), subset(y, b, None)) {
                return Some(true);
            }
        }
        Intersection(x, y) => {
            if subset(x, b, None) == Some(true) || subset(y, b, None) == Some(true) {
                return Some(true);
            }
        }
        Difference(x, _) if subset(x, b, None) == Some(true) => return Some(true),
        _ => {}
    }
    match b.expr() {
        Union(x, y) => {
            if subset(a, x, None) == Some(true) || subset(a, y, None) == Some(true) {
                return Some(true);
            }
        }
        Intersection(x, y) => {
            if let (Some(true), Some(true)) = (subset(a, x, None), subset(a, y, None)) {
                return Some(true);
            }
        }
        _ => {}
    }
    None
}

fn probe_points(p: Profile) -> impl Iterator<Item = SetValue> {
    let ords =
        (0..=p.a_max + 1).flat_map(move |a| (0..p.b_cut + 4).map(move |b| SetValue::ord(a, b)));
    let pads = (0..p.pad_cut + 2 * p.pad_period).map(SetValue::Pad);
    ords.chain(pads)
}

/// Ackermann-indexed hereditarily finite sets with codes in `lo..hi`.
fn hf_range(lo: u64, hi: u64) -> impl Iterator<Item = SetValue> {
    (lo..hi).map(SetValue::hf)
}

/// Dovetails `ω·a + b` over `a < bound` and all `b` accepted by `keep`.
fn ordinals(bound: u32, keep: impl Fn(u64) -> bool + 'static) -> impl Iterator<Item = SetValue> {
    (0u64..)
        .filter(move |b| keep(*b))
        .flat_map(move |b| (0..bound).map(move |a| SetValue::ord(a, b)))
}

fn interleave<'a>(
    a: impl Iterator<Item = SetValue> + 'a,
    b: impl Iterator<Item = SetValue> + 'a,
) -> Box<dyn Iterator<Item = SetValue> + 'a> {
    struct Alt<A, B> {
        a: A,
        b: B,
        turn: bool,
        a_done: bool,
        b_done: bool,
    }
    impl<A: Iterator<Item = SetValue>, B: Iterator<Item = SetValue>> Iterator for Alt<A, B> {
        type Item = SetValue;
        fn next(&mut self) -> Option<SetValue> {
            loop {
                if self.a_done && self.b_done {
                    return None;
                }
                self.turn = !self.turn;
                if self.turn && !self.a_done {
                    match self.a.next() {
                        Some(x) => return Some(x),
                        None => self.a_done = true,
                    }
                } else if !self.turn && !self.b_done {
                    match self.b.next() {
                        Some(x) => return Some(x),
                        None => self.b_done = true,
                    }
                }
            }
        }
    }
    Box::new(Alt {
        a,
        b,
        turn: false,
        a_done: false,
        b_done: false,
    })
}

fn dedup<'a>(
    inner: impl Iterator<Item = SetValue> + 'a,
) -> Box<dyn Iterator<Item = SetValue> + 'a> {
    let mut seen = HashSet::new();
    filtered(inner, move |x| seen.insert(x.clone()))
}

fn power_iter<'a>(
    a: &'a ClassSpec,
    u: &'a Universe,
    with_intensions: bool,
) -> Box<dyn Iterator<Item = SetValue> + 'a> {
    let wrap = move |members: Vec<SetValue>| -> Option<SetValue> {
        if u.mode() == Mode::Hf {
            let hs: Option<Vec<HfSet>> = members.iter().map(|m| m.as_hf().cloned()).collect();
            hs.map(|h| SetValue::Hf(HfSet::from_members(h)))
        } else {
            Some(SetValue::Coll(Collection::finite(members)))
        }
    };
    match a.tier() {
        CardinalityTier::Finite(n) if n <= 24 => {
            let base: Vec<SetValue> = a.iter(u).collect();
            let k = base.len();
            Box::new((0..=k).flat_map(move |size| {
                let base = base.clone();
                combinations(k, size)
                    .filter_map(move |idx| wrap(idx.iter().map(|i| base[*i].clone()).collect()))
            }))
        }
        _ => {
            let mut source = a.iter(u);
            let mut base: Vec<SetValue> = Vec::new();
            let finite = (0u64..).map_while(move |mask| {
                let need = 64 - mask.leading_zeros() as usize;
                while base.len() < need {
                    base.push(source.next()?);
                }
                let members: Vec<SetValue> = (0..need)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| base[i].clone())
                    .collect();
                wrap(members)
            });
            if with_intensions && u.mode() == Mode::Ordinal {
                let intensions = (0u64..)
                    .map(move |tag| SetValue::Coll(Collection::intensional(a.clone(), [], tag)));
                interleave(finite, intensions)
            } else {
                Box::new(finite)
            }
        }
    }
}

/// Index combinations of `size` out of `n` in lexicographic order.
pub(crate) fn combinations(n: usize, size: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = (size <= n).then(|| (0..size).collect());
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut next = out.clone();
        let mut i = size;
        loop {
            if i == 0 {
                current = None;
                break;
            }
            i -= 1;
            if next[i] < n - size + i {
                next[i] += 1;
                for j in i + 1..size {
                    next[j] = next[j - 1] + 1;
                }
                current = Some(next);
                break;
            }
        }
        Some(out)
    })
}

/// `P(x) ∖ P(y)` in the hereditarily finite universe: subsets of `x` holding a
/// member of `x ∖ y`, small subsets first.
fn power_difference_iter<'a>(
    x: &'a ClassSpec,
    y: &'a ClassSpec,
    u: &'a Universe,
) -> Box<dyn Iterator<Item = SetValue> + 'a> {
    let markers: Vec<HfSet> = x
        .difference(y)
        .iter(u)
        .take(4)
        .filter_map(|m| m.as_hf().cloned())
        .collect();
    if markers.is_empty() {
        return Box::new(std::iter::empty());
    }
    let mut source = x.iter(u);
    let mut base: Vec<HfSet> = Vec::new();
    let subsets = (0u64..).map_while(move |mask| {
        let need = 64 - mask.leading_zeros() as usize;
        while base.len() < need {
            base.push(source.next()?.as_hf()?.clone());
        }
        Some(
            (0..need)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| base[i].clone())
                .collect::<Vec<_>>(),
        )
    });
    dedup(subsets.flat_map(move |chosen| {
        markers
            .clone()
            .into_iter()
            .map(move |m| SetValue::Hf(HfSet::from_members(chosen.iter().cloned().chain([m]))))
    }))
}

/// Filters `inner`, giving up after `MISS_LIMIT` consecutive rejected candidates.
fn filtered<'a>(
    mut inner: impl Iterator<Item = SetValue> + 'a,
    mut keep: impl FnMut(&SetValue) -> bool + 'a,
) -> Box<dyn Iterator<Item = SetValue> + 'a> {
    Box::new(std::iter::from_fn(move || {
        for _ in 0..MISS_LIMIT {
            let x = inner.next()?;
            if keep(&x) {
                return Some(x);
            }
        }
        None
    }))
}
