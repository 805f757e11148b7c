//! Comparing germs relative to a filter base.
//!
//! A verdict is `Forced` when the relation holds on every snapshot in the
//! intersection of a cited finite set of concrete constraints. Every such
//! verdict carries the claims it rests on, so it can be re-checked on fresh
//! witnesses of the cited constraints.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NapError, Result};
use crate::filter::fip::{sample_points, witnesses};
use crate::filter::{Constraint, Family, FilterBase};
use crate::germ::Germ;
use crate::rational::{self, render};
use crate::snapshot::Snapshot;
use crate::universe::{
    subset, CardinalityTier, ClassExpr, ClassSpec, Mode, RandomVariable, SetValue, Universe,
};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Relation {
    pub fn holds(self, a: &Rational, b: &Rational) -> bool {
        match self {
            Relation::Lt => a < b,
            Relation::Le => a <= b,
            Relation::Eq => a == b,
            Relation::Ge => a >= b,
            Relation::Gt => a > b,
        }
    }

    /// The relation with its sides exchanged.
    pub fn flip(self) -> Relation {
        match self {
            Relation::Lt => Relation::Gt,
            Relation::Le => Relation::Ge,
            Relation::Eq => Relation::Eq,
            Relation::Ge => Relation::Le,
            Relation::Gt => Relation::Lt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }

    pub fn parse(s: &str) -> Result<Relation> {
        Ok(match s.trim() {
            "<" | "lt" => Relation::Lt,
            "<=" | "le" => Relation::Le,
            "=" | "==" | "eq" => Relation::Eq,
            ">=" | "ge" => Relation::Ge,
            ">" | "gt" => Relation::Gt,
            other => {
                return Err(NapError::Parse {
                    pos: 0,
                    msg: format!("unknown relation '{other}'"),
                })
            }
        })
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// The reason a verdict was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    /// Identical expressions, or two constants.
    Structural,
    /// `A ⊆ B` gives `Pr(A) ≤ Pr(B)` on every snapshot.
    Inclusion,
    /// Equal finite events under a bijective variable, all preimages pinned.
    Uniformity,
    /// `A ⊆ B` plus a pinned state landing in `B ∖ A` gives a strict gap.
    Euclidean,
    /// Ratio constraints bound `Pr(A)/Pr(B)`.
    Ratio,
    /// Order constraints between two classes.
    Order,
    /// Weight constraints bound `Pr(On)`.
    Weight,
    /// Interval constraints bound parity gaps and limits among ordinals.
    Interval,
    /// A parametric family bounds a germ by `c/n` for every `n`.
    Parametric,
    /// Every snapshot of a small finite universe was checked.
    Exhaustive,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Structural => "structural",
            Rule::Inclusion => "inclusion",
            Rule::Uniformity => "uniformity",
            Rule::Euclidean => "euclidean",
            Rule::Ratio => "ratio",
            Rule::Order => "order",
            Rule::Weight => "weight",
            Rule::Interval => "interval",
            Rule::Parametric => "parametric",
            Rule::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `lhs rel rhs` at a snapshot, or `|lhs| rel rhs` when `abs` is set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Claim {
    pub lhs: Germ,
    pub rel: Relation,
    pub rhs: Germ,
    pub abs: bool,
}

impl Claim {
    pub fn new(lhs: &Germ, rel: Relation, rhs: &Germ) -> Claim {
        Claim {
            lhs: lhs.clone(),
            rel,
            rhs: rhs.clone(),
            abs: false,
        }
    }

    pub fn absolute(lhs: &Germ, rel: Relation, rhs: Rational) -> Claim {
        Claim {
            lhs: lhs.clone(),
            rel,
            rhs: Germ::Const(rhs),
            abs: true,
        }
    }

    /// Evaluates the claim; evaluation failures are errors, not passes.
    pub fn check(&self, t: &Snapshot) -> Result<bool> {
        let mut a = self.lhs.eval(t)?;
        if self.abs {
            a = a.abs();
        }
        Ok(self.rel.holds(&a, &self.rhs.eval(t)?))
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.abs {
            write!(f, "|{}| {} {}", self.lhs, self.rel, self.rhs)
        } else {
            write!(f, "{} {} {}", self.lhs, self.rel, self.rhs)
        }
    }
}

/// Claims that hold on every member of the intersection of `cited`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub rule: Rule,
    pub cited: Vec<Constraint>,
    pub claims: Vec<Claim>,
}

impl Certificate {
    fn new(rule: Rule, cited: Vec<Constraint>, claims: Vec<Claim>) -> Certificate {
        let mut cited = cited;
        cited.sort();
        cited.dedup();
        Certificate {
            rule,
            cited,
            claims,
        }
    }
}

/// One parametric family feeding a bound `|g| ≤ scale/n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    /// `n` distinct pinned states, so `|T| ≥ n`.
    Spread,
    Weight,
    Interval,
    Ratio(ClassSpec, ClassSpec),
}

/// `|lhs| ≤ scale/n` on the intersection of `fixed` with the `n`-th members
/// of every source family, for every `n ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamCertificate {
    pub lhs: Germ,
    pub scale: Rational,
    pub sources: Vec<Source>,
    pub fixed: Vec<Constraint>,
}

impl ParamCertificate {
    /// The pointwise certificate for parameter `n`.
    pub fn instance(&self, n: u64, u: &Universe) -> Certificate {
        let n = n.max(1);
        let mut cited = self.fixed.clone();
        for s in &self.sources {
            match s {
                Source::Spread => {
                    cited.extend(u.elements().take(n as usize).map(Constraint::Fineness))
                }
                Source::Weight => cited.push(Constraint::Weight(n)),
                Source::Interval => cited.push(Constraint::Interval(n)),
                Source::Ratio(a, b) => cited.push(Constraint::ratio(a, b, n)),
            }
        }
        let bound = &self.scale * rational::recip(n);
        Certificate::new(
            Rule::Parametric,
            cited,
            vec![Claim::absolute(&self.lhs, Relation::Le, bound)],
        )
    }

    pub fn describe(&self) -> String {
        let names: Vec<String> = self
            .sources
            .iter()
            .map(|s| match s {
                Source::Spread => "all:fine".to_string(),
                Source::Weight => "all:weight".to_string(),
                Source::Interval => "all:interval".to_string(),
                Source::Ratio(a, b) => format!("all:ratio({a},{b})"),
            })
            .collect();
        format!(
            "|{}| <= ({})/n under {}",
            self.lhs,
            render(&self.scale),
            names.join(", ")
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    Pointwise(Certificate),
    Parametric(ParamCertificate),
}

impl Justification {
    pub fn rule(&self) -> Rule {
        match self {
            Justification::Pointwise(c) => c.rule,
            Justification::Parametric(_) => Rule::Parametric,
        }
    }
}

/// Values seen on one sampled witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub snapshot: Snapshot,
    pub lhs: Option<Rational>,
    pub rhs: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Evidence {
    pub samples: Vec<Sample>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Forced(Justification),
    /// The negated relation is forced.
    ForcedNot(Justification),
    Undetermined(Evidence),
}

impl Verdict {
    pub fn is_forced(&self) -> bool {
        matches!(self, Verdict::Forced(_))
    }

    pub fn is_forced_not(&self) -> bool {
        matches!(self, Verdict::ForcedNot(_))
    }

    pub fn justification(&self) -> Option<&Justification> {
        match self {
            Verdict::Forced(j) | Verdict::ForcedNot(j) => Some(j),
            Verdict::Undetermined(_) => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Forced(_) => "forced",
            Verdict::ForcedNot(_) => "forced-not",
            Verdict::Undetermined(_) => "undetermined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Infinitesimal {
    ApproxZero(ParamCertificate),
    /// Bounded away from zero; the certificate, when present, shows `|g| ≥ c > 0`.
    NotApproxZero(Option<Certificate>),
    Undetermined(String),
}

#[derive(Clone, Debug)]
pub struct CompareBudget {
    /// Witnesses sampled as evidence for undetermined verdicts.
    pub samples: usize,
    /// Largest universe checked snapshot by snapshot.
    pub exhaustive_limit: u64,
    /// Parametric families are instantiated up to this parameter when sampling.
    pub param_limit: u64,
    pub seed: u64,
}

impl Default for CompareBudget {
    fn default() -> Self {
        CompareBudget {
            samples: 8,
            exhaustive_limit: 16,
            param_limit: 4,
            seed: 0,
        }
    }
}

struct Ctx<'a> {
    fb: &'a FilterBase,
    u: &'a Universe,
}

fn event(g: &Germ) -> Option<(&RandomVariable, &ClassSpec)> {
    match g {
        Germ::Event(theta, a) => Some((theta, a)),
        _ => None,
    }
}

fn id_event(g: &Germ) -> Option<&ClassSpec> {
    match g {
        Germ::Event(RandomVariable::Identity, a) => Some(a),
        _ => None,
    }
}

fn id_conditional(g: &Germ) -> Option<(&ClassSpec, &ClassSpec)> {
    match g.as_conditional()? {
        (RandomVariable::Identity, a, RandomVariable::Identity, b) => Some((a, b)),
        _ => None,
    }
}

fn is_on(c: &ClassSpec) -> bool {
    matches!(c.expr(), ClassExpr::Ordinals)
}

/// Least `k ≥ 1` with `1/k ≤ q`, or `1/k < q` when strict.
fn param_for(q: &Rational, strict: bool) -> Option<u64> {
    if !q.is_positive() {
        return None;
    }
    let inv = q.recip();
    let k = if strict {
        inv.floor().to_integer() + BigInt::one()
    } else {
        inv.ceil().to_integer()
    };
    let k: u64 = k.try_into().ok()?;
    Some(k.max(1))
}

fn within(bound: &Rational, q: &Rational, strict: bool) -> bool {
    if strict {
        bound < q
    } else {
        bound <= q
    }
}

fn finite_members(c: &ClassSpec, u: &Universe) -> Option<Vec<SetValue>> {
    match c.tier() {
        CardinalityTier::Finite(n) if n <= 4096 => {
            let v: Vec<SetValue> = c.iter(u).take(4097).collect();
            (v.len() <= 4096).then_some(v)
        }
        _ => None,
    }
}

impl Ctx<'_> {
    fn subset(&self, a: &ClassSpec, b: &ClassSpec) -> bool {
        subset(a, b, Some(self.u)) == Some(true)
    }

    /// A pinnable state `y` with `θ(y) ∈ B ∖ A`.
    fn separating_pin(
        &self,
        theta: &RandomVariable,
        a: &ClassSpec,
        b: &ClassSpec,
    ) -> Option<SetValue> {
        let gap = b.difference(a);
        for c in self.fb.concrete() {
            if let Constraint::Fineness(y) = c {
                if gap.contains(&theta.apply(y)) {
                    return Some(y.clone());
                }
            }
        }
        if !self.fb.has_family(&Family::Fineness) {
            return None;
        }
        let none = Default::default();
        let found = gap.enumerate(self.u, &none).take(4096).find_map(|x| {
            let y = theta.preimage(&x)?;
            (self.u.contains(&y) && theta.apply(&y) == x).then_some(y)
        });
        if found.is_some() {
            return found;
        }
        self.u
            .elements()
            .take(4096)
            .find(|y| gap.contains(&theta.apply(y)))
    }

    /// An ordinal state available as a pin.
    fn ordinal_pin(&self) -> Option<SetValue> {
        for c in self.fb.concrete() {
            if let Constraint::Fineness(y @ SetValue::Ord(_)) = c {
                return Some(y.clone());
            }
        }
        (self.fb.has_family(&Family::Fineness) && self.u.mode() == Mode::Ordinal)
            .then(|| SetValue::nat(0))
    }

    fn has_ratio(
        &self,
        a: &ClassSpec,
        b: &ClassSpec,
        q: &Rational,
        strict: bool,
    ) -> Option<Constraint> {
        for c in self.fb.concrete() {
            if let Constraint::Ratio { a: x, b: y, k } = c {
                if x == a && y == b && within(&rational::recip(*k), q, strict) {
                    return Some(c.clone());
                }
            }
        }
        if self.fb.has_family(&Family::Ratio(a.clone(), b.clone())) {
            return Some(Constraint::ratio(a, b, param_for(q, strict)?));
        }
        None
    }

    fn has_weight(&self, q: &Rational, strict: bool) -> Option<Constraint> {
        for c in self.fb.concrete() {
            if let Constraint::Weight(m) = c {
                if within(&rational::recip(*m), q, strict) {
                    return Some(c.clone());
                }
            }
        }
        if self.fb.has_family(&Family::Weight) {
            return Some(Constraint::Weight(param_for(q, strict)?));
        }
        None
    }

    /// Interval constraint plus ordinal pin giving a bound `1/(l+1)` within `q`.
    fn has_interval(&self, q: &Rational, strict: bool) -> Option<Vec<Constraint>> {
        if self.u.mode() != Mode::Ordinal {
            return None;
        }
        let pin = Constraint::Fineness(self.ordinal_pin()?);
        for c in self.fb.concrete() {
            if let Constraint::Interval(l) = c {
                if within(&rational::recip(l + 1), q, strict) {
                    return Some(vec![c.clone(), pin]);
                }
            }
        }
        if self.fb.has_family(&Family::Interval) {
            let l = param_for(q, strict)?.saturating_sub(1).max(1);
            return Some(vec![Constraint::Interval(l), pin]);
        }
        None
    }

    /// `g ≤ q` (or `g < q`) from a bounding constraint.
    fn bounded(&self, g: &Germ, q: &Rational, strict: bool) -> Option<Certificate> {
        let rel = if strict { Relation::Lt } else { Relation::Le };
        let claim = || Claim::new(g, rel, &Germ::Const(q.clone()));
        if let Some(a) = id_event(g) {
            if is_on(a) || self.subset(a, &ClassSpec::new(ClassExpr::Ordinals)) {
                if let Some(c) = self.has_weight(q, strict) {
                    return Some(Certificate::new(Rule::Weight, vec![c], vec![claim()]));
                }
            }
        }
        if let Germ::Div(num, den) = g {
            if let (Some(a), Some(b)) = (id_event(num), id_event(den)) {
                if let Some(c) = self.has_ratio(a, b, q, strict) {
                    return Some(Certificate::new(Rule::Ratio, vec![c], vec![claim()]));
                }
            }
        }
        if self.parity_gap(g) || self.limit_share(g) {
            if let Some(cs) = self.has_interval(q, strict) {
                let abs = Claim {
                    abs: true,
                    ..claim()
                };
                return Some(Certificate::new(Rule::Interval, cs, vec![abs]));
            }
        }
        None
    }

    /// `Pr(Even|On) − Pr(Odd|On)` in either order.
    fn parity_gap(&self, g: &Germ) -> bool {
        let Germ::Sub(x, y) = g else { return false };
        let (Some((a, on1)), Some((b, on2))) = (id_conditional(x), id_conditional(y)) else {
            return false;
        };
        let parities = matches!(
            (a.expr(), b.expr()),
            (ClassExpr::Even, ClassExpr::Odd) | (ClassExpr::Odd, ClassExpr::Even)
        );
        parities && is_on(on1) && is_on(on2)
    }

    /// `Pr(A|On)` with `A ⊆ Lim`.
    fn limit_share(&self, g: &Germ) -> bool {
        match id_conditional(g) {
            Some((a, on)) => is_on(on) && self.subset(a, &ClassSpec::new(ClassExpr::Lim)),
            None => false,
        }
    }

    fn prove(&self, g1: &Germ, rel: Relation, g2: &Germ) -> Option<Certificate> {
        match rel {
            Relation::Gt => self.prove(g2, Relation::Lt, g1),
            Relation::Ge => self.prove(g2, Relation::Le, g1),
            Relation::Eq => self.prove_eq(g1, g2),
            Relation::Lt => self.prove_lt(g1, g2, true),
            Relation::Le => {
                if g1 == g2 {
                    return Some(Certificate::new(
                        Rule::Structural,
                        vec![],
                        vec![Claim::new(g1, Relation::Le, g2)],
                    ));
                }
                self.prove_lt(g1, g2, false)
            }
        }
    }

    fn prove_eq(&self, g1: &Germ, g2: &Germ) -> Option<Certificate> {
        let claim = vec![Claim::new(g1, Relation::Eq, g2)];
        if g1 == g2 {
            return Some(Certificate::new(Rule::Structural, vec![], claim));
        }
        if let (Germ::Const(a), Germ::Const(b)) = (g1, g2) {
            return (a == b).then(|| Certificate::new(Rule::Structural, vec![], claim));
        }
        let ((t1, a), (t2, b)) = (event(g1)?, event(g2)?);
        if t1 != t2 || !t1.is_diagonal() {
            return None;
        }
        let (xa, xb) = (finite_members(a, self.u)?, finite_members(b, self.u)?);
        if xa.len() != xb.len() || xa.len() > 64 {
            return None;
        }
        let mut pins = Vec::new();
        for x in xa.iter().chain(xb.iter()) {
            let y = t1.preimage(x)?;
            if !self.fb.has_fineness(&y) || !self.u.contains(&y) {
                return None;
            }
            pins.push(Constraint::Fineness(y));
        }
        Some(Certificate::new(Rule::Uniformity, pins, claim))
    }

    /// `g1 < g2`, or `g1 ≤ g2` when not `strict`.
    fn prove_lt(&self, g1: &Germ, g2: &Germ, strict: bool) -> Option<Certificate> {
        let rel = if strict { Relation::Lt } else { Relation::Le };
        let claim = || vec![Claim::new(g1, rel, g2)];
        if let (Germ::Const(a), Germ::Const(b)) = (g1, g2) {
            return rel
                .holds(a, b)
                .then(|| Certificate::new(Rule::Structural, vec![], claim()));
        }
        if let Germ::Const(q) = g2 {
            if let Some(c) = self.bounded(g1, q, strict) {
                return Some(c);
            }
        }
        if let (Some((t1, a)), Some((t2, b))) = (event(g1), event(g2)) {
            if t1 == t2 && self.subset(a, b) {
                if let Some(y) = self.separating_pin(t1, a, b) {
                    return Some(Certificate::new(
                        Rule::Euclidean,
                        vec![Constraint::Fineness(y)],
                        claim(),
                    ));
                }
                if !strict {
                    return Some(Certificate::new(Rule::Inclusion, vec![], claim()));
                }
            }
        }
        if let (Some(a), Some(b)) = (id_event(g1), id_event(g2)) {
            for c in self.fb.concrete() {
                let hit = match c {
                    Constraint::OrderLt(x, y) => x == a && y == b,
                    Constraint::OrderGe(x, y) => !strict && x == b && y == a,
                    Constraint::Ratio { a: x, b: y, k } => x == a && y == b && (*k >= 2 || !strict),
                    _ => false,
                };
                if hit {
                    let rule = if matches!(c, Constraint::Ratio { .. }) {
                        Rule::Ratio
                    } else {
                        Rule::Order
                    };
                    return Some(Certificate::new(rule, vec![c.clone()], claim()));
                }
            }
            if self.fb.has_family(&Family::Ratio(a.clone(), b.clone())) {
                return Some(Certificate::new(
                    Rule::Ratio,
                    vec![Constraint::ratio(a, b, 2)],
                    claim(),
                ));
            }
        }
        None
    }

    /// Checks every snapshot of a small finite universe lying in the base.
    fn exhaustive(
        &self,
        g1: &Germ,
        rel: Relation,
        g2: &Germ,
        limit: u64,
        param_limit: u64,
    ) -> Option<Verdict> {
        if self.u.mode() != Mode::Hf {
            return None;
        }
        let size = self.u.exact_size().filter(|s| *s <= limit.min(20))?;
        let points: Vec<SetValue> = self.u.elements().collect();
        let cs = self.fb.instantiate(param_limit, &points);
        let (mut all, mut none, mut members) = (true, true, 0usize);
        for mask in 1u64..(1 << size) {
            let t: Snapshot = (0..size)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| points[i as usize].clone())
                .collect();
            let mut inside = true;
            for c in &cs {
                match c.contains(&t) {
                    Ok(true) => {}
                    Ok(false) => {
                        inside = false;
                        break;
                    }
                    Err(_) => return None,
                }
            }
            if !inside {
                continue;
            }
            members += 1;
            match (g1.eval(&t), g2.eval(&t)) {
                (Ok(a), Ok(b)) => {
                    if rel.holds(&a, &b) {
                        none = false;
                    } else {
                        all = false;
                    }
                }
                _ => {
                    all = false;
                    none = false;
                }
            }
            if !all && !none {
                return None;
            }
        }
        if members == 0 {
            return None;
        }
        let cited: Vec<Constraint> = cs.into_iter().filter(|c| !c.is_parametric()).collect();
        if all {
            let cert = Certificate::new(Rule::Exhaustive, cited, vec![Claim::new(g1, rel, g2)]);
            return Some(Verdict::Forced(Justification::Pointwise(cert)));
        }
        // the relation fails on every member; for `=` this is a pointwise `≠`,
        // which is not itself a claim, so only order relations are negated
        let neg = match rel {
            Relation::Lt => Relation::Ge,
            Relation::Le => Relation::Gt,
            Relation::Ge => Relation::Lt,
            Relation::Gt => Relation::Le,
            Relation::Eq => return None,
        };
        let cert = Certificate::new(Rule::Exhaustive, cited, vec![Claim::new(g1, neg, g2)]);
        Some(Verdict::ForcedNot(Justification::Pointwise(cert)))
    }

    fn evidence(&self, g1: &Germ, g2: &Germ, budget: &CompareBudget, note: &str) -> Evidence {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        let points = sample_points(self.u, &mut rng, 4);
        let cs = self.fb.instantiate(budget.param_limit, &points);
        let samples = witnesses(&cs, self.u, budget.samples, &mut rng)
            .into_iter()
            .map(|t| Sample {
                lhs: g1.eval(&t).ok(),
                rhs: g2.eval(&t).ok(),
                snapshot: t,
            })
            .collect();
        Evidence {
            samples,
            note: note.to_string(),
        }
    }
}

/// Decides `g1 rel g2` relative to `fb` where a rule applies.
pub fn compare(
    g1: &Germ,
    rel: Relation,
    g2: &Germ,
    fb: &FilterBase,
    u: &Universe,
    budget: &CompareBudget,
) -> Result<Verdict> {
    let ctx = Ctx { fb, u };
    if let Some(c) = ctx.prove(g1, rel, g2) {
        return Ok(Verdict::Forced(Justification::Pointwise(c)));
    }
    let negations: &[Relation] = match rel {
        Relation::Lt => &[Relation::Ge],
        Relation::Le => &[Relation::Gt],
        Relation::Eq => &[Relation::Lt, Relation::Gt],
        Relation::Ge => &[Relation::Lt],
        Relation::Gt => &[Relation::Le],
    };
    for neg in negations {
        if let Some(c) = ctx.prove(g1, *neg, g2) {
            return Ok(Verdict::ForcedNot(Justification::Pointwise(c)));
        }
    }
    if let Some(v) = ctx.exhaustive(g1, rel, g2, budget.exhaustive_limit, budget.param_limit) {
        return Ok(v);
    }
    Ok(Verdict::Undetermined(ctx.evidence(
        g1,
        g2,
        budget,
        "no rule applies",
    )))
}

fn merge(
    mut a: (Rational, Vec<Source>, Vec<Constraint>),
    b: (Rational, Vec<Source>, Vec<Constraint>),
) -> (Rational, Vec<Source>, Vec<Constraint>) {
    a.0 += b.0;
    for s in b.1 {
        if !a.1.contains(&s) {
            a.1.push(s);
        }
    }
    for c in b.2 {
        if !a.2.contains(&c) {
            a.2.push(c);
        }
    }
    a
}

impl Ctx<'_> {
    /// `(scale, sources, fixed)` with `|g| ≤ scale/n` on every `n`-th instance.
    fn param_bound(&self, g: &Germ) -> Option<(Rational, Vec<Source>, Vec<Constraint>)> {
        match g {
            Germ::Const(q) if q.is_zero() => return Some((rational::zero(), vec![], vec![])),
            Germ::Event(theta, a) => {
                if *theta == RandomVariable::Identity
                    && self.fb.has_family(&Family::Weight)
                    && (is_on(a) || self.subset(a, &ClassSpec::new(ClassExpr::Ordinals)))
                {
                    return Some((rational::one(), vec![Source::Weight], vec![]));
                }
                if self.fb.has_family(&Family::Fineness)
                    && self.u.mode() == Mode::Ordinal
                    && theta.is_diagonal()
                {
                    let members = finite_members(a, self.u)?;
                    return Some((
                        rational::ratio(members.len(), 1),
                        vec![Source::Spread],
                        vec![],
                    ));
                }
            }
            Germ::Sub(x, y) | Germ::Add(x, y) => {
                if self.parity_gap(g) {
                    if self.fb.has_family(&Family::Interval) && self.u.mode() == Mode::Ordinal {
                        let pin = Constraint::Fineness(self.ordinal_pin()?);
                        return Some((rational::one(), vec![Source::Interval], vec![pin]));
                    }
                    return None;
                }
                return Some(merge(self.param_bound(x)?, self.param_bound(y)?));
            }
            Germ::Mul(x, y) => {
                let (c, h) = match (x.as_ref(), y.as_ref()) {
                    (Germ::Const(c), h) | (h, Germ::Const(c)) => (c, h),
                    _ => return None,
                };
                let (s, src, fixed) = self.param_bound(h)?;
                return Some((s * c.abs(), src, fixed));
            }
            Germ::Div(x, y) => {
                if self.limit_share(g)
                    && self.fb.has_family(&Family::Interval)
                    && self.u.mode() == Mode::Ordinal
                {
                    let pin = Constraint::Fineness(self.ordinal_pin()?);
                    return Some((rational::one(), vec![Source::Interval], vec![pin]));
                }
                if let (Some(a), Some(b)) = (id_event(x), id_event(y)) {
                    if self.fb.has_family(&Family::Ratio(a.clone(), b.clone())) {
                        return Some((
                            rational::one(),
                            vec![Source::Ratio(a.clone(), b.clone())],
                            vec![],
                        ));
                    }
                }
                if let Germ::Const(c) = y.as_ref() {
                    if !c.is_zero() {
                        let (s, src, fixed) = self.param_bound(x)?;
                        return Some((s / c.abs(), src, fixed));
                    }
                }
            }
            _ => {}
        }
        None
    }

    /// A pin making `g` positive on every snapshot containing it, for events.
    fn positive_pin(&self, g: &Germ) -> Option<Vec<Constraint>> {
        let (theta, a) = event(g)?;
        if matches!(a.expr(), ClassExpr::Universe) {
            return Some(vec![]);
        }
        for c in self.fb.concrete() {
            if let Constraint::Fineness(y) = c {
                if a.contains(&theta.apply(y)) {
                    return Some(vec![c.clone()]);
                }
            }
        }
        if !self.fb.has_family(&Family::Fineness) {
            return None;
        }
        let none = Default::default();
        let direct = a.enumerate(self.u, &none).take(4096).find_map(|x| {
            let y = theta.preimage(&x)?;
            (self.u.contains(&y) && theta.apply(&y) == x).then_some(y)
        });
        let y = direct.or_else(|| {
            self.u
                .elements()
                .take(4096)
                .find(|y| a.contains(&theta.apply(y)))
        })?;
        Some(vec![Constraint::Fineness(y)])
    }
}

/// Whether `g ≈ 0` follows from the parametric families of `fb`.
pub fn classify_infinitesimal(g: &Germ, fb: &FilterBase, u: &Universe) -> Infinitesimal {
    let ctx = Ctx { fb, u };
    if let Some((scale, sources, fixed)) = ctx.param_bound(g) {
        return Infinitesimal::ApproxZero(ParamCertificate {
            lhs: g.clone(),
            scale,
            sources,
            fixed,
        });
    }
    match g {
        Germ::Const(q) => {
            let cert = Certificate::new(
                Rule::Structural,
                vec![],
                vec![Claim::absolute(g, Relation::Ge, q.abs())],
            );
            return Infinitesimal::NotApproxZero(Some(cert));
        }
        Germ::Event(_, a) if matches!(a.expr(), ClassExpr::Universe) => {
            let cert = Certificate::new(
                Rule::Structural,
                vec![],
                vec![Claim::absolute(g, Relation::Ge, rational::one())],
            );
            return Infinitesimal::NotApproxZero(Some(cert));
        }
        Germ::Div(x, y) if x == y => {
            let cert = ctx.positive_pin(x).map(|pins| {
                Certificate::new(
                    Rule::Structural,
                    pins,
                    vec![Claim::absolute(g, Relation::Ge, rational::one())],
                )
            });
            return Infinitesimal::NotApproxZero(cert);
        }
        _ => {}
    }
    Infinitesimal::Undetermined(format!("no parametric family bounds {g}"))
}

/// `g1 ≪ g2`: forced exactly when `g1/g2 ≈ 0` is.
pub fn much_less(
    g1: &Germ,
    g2: &Germ,
    fb: &FilterBase,
    u: &Universe,
    budget: &CompareBudget,
) -> Result<Verdict> {
    if matches!(g2, Germ::Const(q) if q.is_zero()) {
        return Err(NapError::DivisionUndefined);
    }
    let quotient = g1.clone() / g2.clone();
    match classify_infinitesimal(&quotient, fb, u) {
        Infinitesimal::ApproxZero(cert) => Ok(Verdict::Forced(Justification::Parametric(cert))),
        Infinitesimal::NotApproxZero(Some(cert)) => {
            Ok(Verdict::ForcedNot(Justification::Pointwise(cert)))
        }
        Infinitesimal::NotApproxZero(None) => {
            let ctx = Ctx { fb, u };
            Ok(Verdict::Undetermined(ctx.evidence(
                &quotient,
                &Germ::Const(rational::zero()),
                budget,
                "quotient is not infinitesimal, but no pin keeps it defined",
            )))
        }
        Infinitesimal::Undetermined(why) => {
            let ctx = Ctx { fb, u };
            Ok(Verdict::Undetermined(ctx.evidence(
                &quotient,
                &Germ::Const(rational::zero()),
                budget,
                &why,
            )))
        }
    }
}

/// Result of re-checking a justification on fresh witnesses.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Audit {
    pub checked: usize,
    pub refutations: Vec<String>,
}

impl Audit {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.refutations.is_empty()
    }
}

/// Parameters used when auditing a parametric certificate.
const AUDIT_PARAMS: [u64; 10] = [1, 2, 3, 4, 5, 6, 8, 11, 16, 25];

fn audit_certificate(
    cert: &Certificate,
    u: &Universe,
    count: usize,
    rng: &mut ChaCha8Rng,
    out: &mut Audit,
) {
    for t in witnesses(&cert.cited, u, count, rng) {
        out.checked += 1;
        for claim in &cert.claims {
            match claim.check(&t) {
                Ok(true) => {}
                Ok(false) => out.refutations.push(format!("{claim} fails on {t}")),
                Err(e) => out
                    .refutations
                    .push(format!("{claim} undefined on {t}: {e}")),
            }
        }
    }
}

/// Re-verifies a justification on `count` witnesses of its cited constraints.
pub fn audit(j: &Justification, u: &Universe, count: usize, seed: u64) -> Audit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Audit::default();
    match j {
        Justification::Pointwise(c) => audit_certificate(c, u, count, &mut rng, &mut out),
        Justification::Parametric(p) => {
            let per = count.div_ceil(AUDIT_PARAMS.len());
            for n in AUDIT_PARAMS {
                if out.checked >= count {
                    break;
                }
                let cert = p.instance(n, u);
                audit_certificate(&cert, u, per.min(count - out.checked), &mut rng, &mut out);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::fineness_base;
    use crate::germ::{conditional_germ, germ_of_event};
    use crate::universe::{make_universe, Builtin};

    fn ord() -> Universe {
        make_universe(Mode::Ordinal, 3).unwrap()
    }

    #[test]
    fn euclidean_inclusion_is_strict() {
        let u = ord();
        let fb = fineness_base(None);
        let even = u.builtin(Builtin::Even).unwrap();
        let nat = u.builtin(Builtin::Naturals).unwrap();
        let a = even.intersection(&nat);
        let (ga, gb) = (
            germ_of_event(&RandomVariable::Identity, &a),
            germ_of_event(&RandomVariable::Identity, &nat),
        );
        let v = compare(&ga, Relation::Lt, &gb, &fb, &u, &CompareBudget::default()).unwrap();
        assert_eq!(v.justification().unwrap().rule(), Rule::Euclidean);
        assert!(audit(v.justification().unwrap(), &u, 100, 1).passed());
        let back = compare(&gb, Relation::Le, &ga, &fb, &u, &CompareBudget::default()).unwrap();
        assert!(back.is_forced_not());
    }

    #[test]
    fn ratio_bounds() {
        let u = ord();
        let nat = u.builtin(Builtin::Naturals).unwrap();
        let pads = ClassSpec::new(ClassExpr::Pads {
            modulus: 1,
            residue: 0,
        });
        let fb = FilterBase::from_constraints([Constraint::ratio(&nat, &pads, 3)]);
        let id = RandomVariable::Identity;
        let q = germ_of_event(&id, &nat) / germ_of_event(&id, &pads);
        let v = compare(
            &q,
            Relation::Le,
            &Germ::Const(rational::recip(3)),
            &fb,
            &u,
            &CompareBudget::default(),
        )
        .unwrap();
        assert!(v.is_forced());
        assert!(audit(v.justification().unwrap(), &u, 100, 2).passed());
    }

    #[test]
    fn identical_germs_are_equal() {
        let u = ord();
        let g = germ_of_event(&RandomVariable::invar(), &u.builtin(Builtin::Odd).unwrap());
        let v = compare(
            &g,
            Relation::Eq,
            &g,
            &FilterBase::new(),
            &u,
            &CompareBudget::default(),
        )
        .unwrap();
        assert_eq!(v.justification().unwrap().rule(), Rule::Structural);
    }

    #[test]
    fn infinitesimals() {
        let u = ord();
        let id = RandomVariable::Identity;
        let fine = fineness_base(None);
        let single = germ_of_event(
            &RandomVariable::invar(),
            &ClassSpec::finite([SetValue::nat(4)]),
        );
        let Infinitesimal::ApproxZero(cert) = classify_infinitesimal(&single, &fine, &u) else {
            panic!("singleton should be infinitesimal");
        };
        assert!(audit(&Justification::Parametric(cert), &u, 100, 3).passed());
        let half = Germ::Const(rational::ratio(1, 2));
        assert!(matches!(
            classify_infinitesimal(&half, &fine, &u),
            Infinitesimal::NotApproxZero(_)
        ));

        let mut fb = fineness_base(None);
        fb.push(Constraint::Parametric(Family::Weight));
        fb.push(Constraint::Parametric(Family::Interval));
        let on = u.builtin(Builtin::On).unwrap();
        let lim = u.builtin(Builtin::Lim).unwrap();
        for g in [
            germ_of_event(&id, &on),
            conditional_germ(&id, &lim, &id, &on),
        ] {
            let Infinitesimal::ApproxZero(cert) = classify_infinitesimal(&g, &fb, &u) else {
                panic!("{g} should be infinitesimal");
            };
            let a = audit(&Justification::Parametric(cert), &u, 100, 4);
            assert!(a.passed(), "{a:?}");
        }
    }

    #[test]
    fn much_less_needs_a_family() {
        let u = ord();
        let id = RandomVariable::Identity;
        let nat = u.builtin(Builtin::Naturals).unwrap();
        let pads = ClassSpec::new(ClassExpr::Pads {
            modulus: 1,
            residue: 0,
        });
        let (a, b) = (germ_of_event(&id, &nat), germ_of_event(&id, &pads));
        let budget = CompareBudget::default();
        let fam = FilterBase::from_constraints([
            Constraint::Parametric(Family::Fineness),
            Constraint::Parametric(Family::Ratio(nat.clone(), pads.clone())),
        ]);
        let v = much_less(&a, &b, &fam, &u, &budget).unwrap();
        assert!(v.is_forced());
        assert!(audit(v.justification().unwrap(), &u, 100, 5).passed());
        let same = much_less(&a, &a, &fam, &u, &budget).unwrap();
        assert!(same.is_forced_not());
        assert!(audit(same.justification().unwrap(), &u, 100, 6).passed());
        let finite = FilterBase::from_constraints([Constraint::ratio(&nat, &pads, 4)]);
        assert!(matches!(
            much_less(&a, &b, &finite, &u, &budget).unwrap(),
            Verdict::Undetermined(_)
        ));
    }

    #[test]
    fn exhaustive_on_a_tiny_universe() {
        let u = make_universe(Mode::Hf, 3).unwrap();
        let fb = fineness_base(None);
        let id = RandomVariable::Identity;
        let a = ClassSpec::finite([SetValue::hf(0)]);
        let b = ClassSpec::finite([SetValue::hf(1), SetValue::hf(2)]);
        let v = compare(
            &germ_of_event(&id, &a),
            Relation::Lt,
            &germ_of_event(&id, &b),
            &fb,
            &u,
            &CompareBudget::default(),
        )
        .unwrap();
        assert_eq!(v.justification().unwrap().rule(), Rule::Exhaustive);
    }
}
