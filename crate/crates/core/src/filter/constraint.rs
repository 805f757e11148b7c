//! Snapshot constraints and filter bases.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{NapError, Result};
use crate::snapshot::Snapshot;
use crate::text::Parser;
use crate::universe::{ClassSpec, Mode, SetValue};

/// A constraint family indexed by a natural parameter (or, for fineness, by every state).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    /// `A_x` for every state `x`.
    Fineness,
    /// `Cᵏ_AB` for every `k ≥ 1`.
    Ratio(ClassSpec, ClassSpec),
    /// `Iˡ` for every `l ≥ 1`.
    Interval,
    /// `Wᵐ` for every `m ≥ 1`.
    Weight,
}

/// One set of snapshots, given by a decidable membership test.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    /// Snapshots containing `x`.
    Fineness(SetValue),
    /// `k·|A∩T| ≤ |B∩T|` and `B∩T ≠ ∅`.
    Ratio {
        a: ClassSpec,
        b: ClassSpec,
        k: u64,
    },
    /// `|A∩T| < |B∩T|`.
    OrderLt(ClassSpec, ClassSpec),
    /// `|A∩T| ≥ |B∩T|`.
    OrderGe(ClassSpec, ClassSpec),
    /// Every ordinal of `T` lies in a block `[β, β+n] ⊆ T` with `n ≥ l`.
    Interval(u64),
    /// `m·|On∩T| ≤ |T|`.
    Weight(u64),
    /// `|T ∩ S'| < bound`.
    SubsetBound {
        window: Snapshot,
        bound: usize,
    },
    /// `|T| ≥ n`: the complement of the snapshots smaller than `n`.
    MinSize(usize),
    Parametric(Family),
}

fn is_ordinal(x: &SetValue) -> bool {
    match x {
        SetValue::Ord(_) => true,
        SetValue::Hf(s) => s.as_von_neumann().is_some(),
        _ => false,
    }
}

/// Lengths of the maximal runs of consecutive ordinals in `T`, with each ordinal's run length.
pub fn ordinal_runs(t: &Snapshot) -> Vec<(SetValue, usize)> {
    let mut blocks: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    for s in t.states() {
        if let SetValue::Ord(o) = s {
            blocks.entry(o.omega).or_default().push(o.finite);
        }
    }
    let mut out = Vec::new();
    for (a, mut bs) in blocks {
        bs.sort_unstable();
        let mut start = 0;
        for i in 1..=bs.len() {
            if i == bs.len() || bs[i] != bs[i - 1] + 1 {
                let len = i - start;
                out.extend(bs[start..i].iter().map(|b| (SetValue::ord(a, *b), len)));
                start = i;
            }
        }
    }
    out
}

impl Constraint {
    pub fn ratio(a: &ClassSpec, b: &ClassSpec, k: u64) -> Constraint {
        Constraint::Ratio {
            a: a.clone(),
            b: b.clone(),
            k,
        }
    }

    /// Exact membership of `T`.
    pub fn contains(&self, t: &Snapshot) -> Result<bool> {
        if matches!(
            self,
            Constraint::Interval(_) | Constraint::Parametric(Family::Interval)
        ) && t.mode()? == Some(Mode::Hf)
        {
            return Err(NapError::WrongMode {
                op: "interval constraint",
            });
        }
        Ok(self.deficit(t) == 0)
    }

    /// How far `T` is from membership; zero exactly on members.
    pub fn deficit(&self, t: &Snapshot) -> usize {
        match self {
            Constraint::Fineness(x) => usize::from(!t.contains(x)),
            Constraint::Ratio { a, b, k } => {
                let (na, nb) = (t.count_in(a), t.count_in(b));
                (na * *k as usize).saturating_sub(nb) + usize::from(nb == 0)
            }
            Constraint::OrderLt(a, b) => (t.count_in(a) + 1).saturating_sub(t.count_in(b)),
            Constraint::OrderGe(a, b) => t.count_in(b).saturating_sub(t.count_in(a)),
            Constraint::Interval(l) => ordinal_runs(t)
                .iter()
                .filter(|(_, len)| (*len as u64) < l + 1)
                .count(),
            Constraint::Weight(m) => {
                let on = t.states().iter().filter(|s| is_ordinal(s)).count();
                (on * *m as usize).saturating_sub(t.len())
            }
            Constraint::SubsetBound { window, bound } => {
                let inside = t.states().iter().filter(|s| window.contains(s)).count();
                (inside + 1).saturating_sub(*bound)
            }
            Constraint::MinSize(n) => n.saturating_sub(t.len()),
            Constraint::Parametric(fam) => match fam {
                // No finite snapshot contains every state of an infinite universe.
                Family::Fineness => 1,
                Family::Ratio(a, b) => t.count_in(a) + usize::from(t.count_in(b) == 0),
                Family::Interval => t
                    .states()
                    .iter()
                    .filter(|s| matches!(s, SetValue::Ord(_)))
                    .count(),
                Family::Weight => {
                    t.states().iter().filter(|s| is_ordinal(s)).count() + usize::from(t.is_empty())
                }
            },
        }
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self, Constraint::Parametric(_))
    }

    /// Classes whose counts this constraint compares.
    pub fn classes(&self) -> Vec<&ClassSpec> {
        match self {
            Constraint::Ratio { a, b, .. }
            | Constraint::OrderLt(a, b)
            | Constraint::OrderGe(a, b)
            | Constraint::Parametric(Family::Ratio(a, b)) => vec![a, b],
            _ => Vec::new(),
        }
    }

    pub fn encode(&self) -> String {
        self.to_string()
    }

    pub fn decode(text: &str) -> Result<Constraint> {
        let mut p = Parser::new(text);
        let c = parse_constraint(&mut p)?;
        p.finish()?;
        Ok(c)
    }
}

impl Family {
    /// The member with parameter `n` (fineness takes `point`).
    pub fn instance(&self, n: u64, point: Option<&SetValue>) -> Option<Constraint> {
        Some(match self {
            Family::Fineness => Constraint::Fineness(point?.clone()),
            Family::Ratio(a, b) => Constraint::ratio(a, b, n),
            Family::Interval => Constraint::Interval(n),
            Family::Weight => Constraint::Weight(n),
        })
    }
}

pub(crate) fn parse_constraint(p: &mut Parser<'_>) -> Result<Constraint> {
    let name = p.ident()?;
    if name == "all" {
        p.expect(b':')?;
        let fam = p.ident()?;
        let family = match fam.as_str() {
            "fine" => Family::Fineness,
            "interval" => Family::Interval,
            "weight" => Family::Weight,
            "ratio" => {
                p.expect(b'(')?;
                let a = p.class()?;
                p.expect(b',')?;
                let b = p.class()?;
                p.expect(b')')?;
                Family::Ratio(a, b)
            }
            _ => return p.error(format!("unknown family '{fam}'")),
        };
        return Ok(Constraint::Parametric(family));
    }
    p.expect(b'(')?;
    let c = match name.as_str() {
        "fine" => Constraint::Fineness(p.value()?),
        "ratio" => {
            let a = p.class()?;
            p.expect(b',')?;
            let b = p.class()?;
            p.expect(b',')?;
            let k = p.number()?;
            if k == 0 {
                return p.error("ratio parameter must be positive");
            }
            Constraint::Ratio { a, b, k }
        }
        "lt" | "ge" => {
            let a = p.class()?;
            p.expect(b',')?;
            let b = p.class()?;
            if name == "lt" {
                Constraint::OrderLt(a, b)
            } else {
                Constraint::OrderGe(a, b)
            }
        }
        "interval" | "weight" => {
            let n = p.number()?;
            if n == 0 {
                return p.error("parameter must be positive");
            }
            if name == "interval" {
                Constraint::Interval(n)
            } else {
                Constraint::Weight(n)
            }
        }
        "bound" => {
            p.expect(b'[')?;
            let window = Snapshot::new(p.list(b']')?);
            p.expect(b',')?;
            Constraint::SubsetBound {
                window,
                bound: p.number()? as usize,
            }
        }
        "minsize" => Constraint::MinSize(p.number()? as usize),
        _ => return p.error(format!("unknown constraint '{name}'")),
    };
    p.expect(b')')?;
    Ok(c)
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Fineness => f.write_str("all:fine"),
            Family::Ratio(a, b) => write!(f, "all:ratio({a},{b})"),
            Family::Interval => f.write_str("all:interval"),
            Family::Weight => f.write_str("all:weight"),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Fineness(x) => write!(f, "fine({x})"),
            Constraint::Ratio { a, b, k } => write!(f, "ratio({a},{b},{k})"),
            Constraint::OrderLt(a, b) => write!(f, "lt({a},{b})"),
            Constraint::OrderGe(a, b) => write!(f, "ge({a},{b})"),
            Constraint::Interval(l) => write!(f, "interval({l})"),
            Constraint::Weight(m) => write!(f, "weight({m})"),
            Constraint::SubsetBound { window, bound } => write!(f, "bound({window},{bound})"),
            Constraint::MinSize(n) => write!(f, "minsize({n})"),
            Constraint::Parametric(fam) => write!(f, "{fam}"),
        }
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Exact membership of `T` in the constraint set `c`.
pub fn constraint_membership(c: &Constraint, t: &Snapshot) -> Result<bool> {
    c.contains(t)
}

/// A finite list of constraints, some of which may stand for parametric families.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct FilterBase {
    constraints: Vec<Constraint>,
    /// Builder steps and tie-breaks, in order.
    pub provenance: Vec<String>,
}

impl FilterBase {
    pub fn new() -> Self {
        FilterBase::default()
    }

    pub fn from_constraints<I: IntoIterator<Item = Constraint>>(cs: I) -> Self {
        let mut fb = FilterBase::new();
        for c in cs {
            fb.push(c);
        }
        fb
    }

    /// Adds `c` unless already present; returns whether it was new.
    pub fn push(&mut self, c: Constraint) -> bool {
        if self.constraints.contains(&c) {
            return false;
        }
        self.constraints.push(c);
        true
    }

    pub fn with(&self, c: Constraint) -> FilterBase {
        let mut out = self.clone();
        out.push(c);
        out
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.provenance.push(line.into());
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn contains(&self, c: &Constraint) -> bool {
        self.constraints.contains(c)
    }

    pub fn has_family(&self, fam: &Family) -> bool {
        self.constraints
            .iter()
            .any(|c| matches!(c, Constraint::Parametric(f) if f == fam))
    }

    /// Whether `A_x` is available, either explicitly or through the fineness family.
    pub fn has_fineness(&self, x: &SetValue) -> bool {
        self.has_family(&Family::Fineness) || self.contains(&Constraint::Fineness(x.clone()))
    }

    /// Concrete constraints only.
    pub fn concrete(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(|c| !c.is_parametric())
    }

    /// Replaces each family by its members with parameters `1..=limit`; the
    /// fineness family is instantiated at `points`.
    pub fn instantiate(&self, limit: u64, points: &[SetValue]) -> Vec<Constraint> {
        let mut out: Vec<Constraint> = Vec::new();
        for c in &self.constraints {
            match c {
                Constraint::Parametric(Family::Fineness) => {
                    out.extend(points.iter().map(|x| Constraint::Fineness(x.clone())));
                }
                Constraint::Parametric(fam) => {
                    out.extend((1..=limit).filter_map(|n| fam.instance(n, None)));
                }
                c => out.push(c.clone()),
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        out.retain(|c| seen.insert(c.clone()));
        out
    }

    /// Whether a pinned fineness point of the base is an ordinal of the given mode.
    pub fn has_ordinal_pin(&self) -> bool {
        self.has_family(&Family::Fineness)
            || self
                .constraints
                .iter()
                .any(|c| matches!(c, Constraint::Fineness(x) if is_ordinal(x)))
    }

    pub fn encode(&self) -> String {
        self.to_string()
    }

    /// Parses `{c₁; c₂; …}`.
    pub fn decode(text: &str) -> Result<FilterBase> {
        let mut p = Parser::new(text);
        p.expect(b'{')?;
        let mut fb = FilterBase::new();
        if !p.eat(b'}') {
            loop {
                fb.push(parse_constraint(&mut p)?);
                if p.eat(b'}') {
                    break;
                }
                p.expect(b';')?;
            }
        }
        p.finish()?;
        Ok(fb)
    }
}

impl fmt::Display for FilterBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, c) in self.constraints.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for FilterBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The fineness base: the parametric family over the whole universe, or one
/// constraint per state of a finite window.
pub fn fineness_base(window: Option<&Snapshot>) -> FilterBase {
    let mut fb = match window {
        None => FilterBase::from_constraints([Constraint::Parametric(Family::Fineness)]),
        Some(w) => {
            FilterBase::from_constraints(w.states().iter().cloned().map(Constraint::Fineness))
        }
    };
    fb.note("fineness");
    fb
}
