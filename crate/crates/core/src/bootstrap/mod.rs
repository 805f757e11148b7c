//! Filters on windows of states, their restrictions to sub-windows, and the
//! tiered probabilities built from them.
//!
//! Everything here is extensional. A top window of at most [`MAX_WINDOW`]
//! states is fixed, sub-windows and snapshots are bitmasks over it, and a
//! constraint is the exact set of admissible snapshots satisfying it.

mod tiered;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NapError, Result};
use crate::filter::{Constraint, Family, FilterBase};
use crate::snapshot::Snapshot;
use crate::universe::SetValue;

pub use tiered::{
    coherence_check, tiered_prob, CoherenceBudget, CoherencePoint, CoherenceReport, TieredValue,
};

/// A sub-window or snapshot of the top window, one bit per state.
pub type Mask = u32;

pub const MAX_WINDOW: usize = 16;

/// Size cutoffs `t₀ < t₁ < … < t_r`; a set of size `n` has the least tier `i` with `n < t_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TierConfig {
    thresholds: Vec<usize>,
}

impl TierConfig {
    pub fn new(thresholds: Vec<usize>) -> Result<Self> {
        match thresholds.first() {
            None => return Err(NapError::InvalidTiers("no thresholds".into())),
            Some(&t) if t < 2 => {
                return Err(NapError::InvalidTiers(format!(
                    "first threshold {t} is below 2"
                )))
            }
            _ => {}
        }
        if let Some(w) = thresholds.windows(2).find(|w| w[0] >= w[1]) {
            return Err(NapError::InvalidTiers(format!(
                "{} is not below {}",
                w[0], w[1]
            )));
        }
        Ok(TierConfig { thresholds })
    }

    pub fn thresholds(&self) -> &[usize] {
        &self.thresholds
    }

    pub fn tier(&self, size: usize) -> Option<usize> {
        self.thresholds.iter().position(|t| size < *t)
    }

    /// Size bound `t_{i−1}` for snapshots of a window of tier `i ≥ 1`.
    pub fn cutoff(&self, tier: usize) -> Option<usize> {
        tier.checked_sub(1).map(|i| self.thresholds[i])
    }
}

/// A top window together with its tier configuration.
#[derive(Clone, Debug)]
pub struct Frame {
    cfg: TierConfig,
    states: Vec<SetValue>,
}

pub(crate) fn bits(m: Mask) -> usize {
    m.count_ones() as usize
}

/// Every submask of `w`, the empty one included.
pub(crate) fn submasks(w: Mask) -> impl Iterator<Item = Mask> {
    let mut next = Some(w);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & w) };
        Some(cur)
    })
}

impl Frame {
    pub fn new(cfg: TierConfig, top: &Snapshot) -> Result<Self> {
        if top.len() > MAX_WINDOW {
            return Err(NapError::Window(format!(
                "top window has {} states, at most {MAX_WINDOW} allowed",
                top.len()
            )));
        }
        if cfg.tier(top.len()).is_none() {
            return Err(NapError::InvalidTiers(format!(
                "top window size {} exceeds every threshold",
                top.len()
            )));
        }
        Ok(Frame {
            cfg,
            states: top.states().to_vec(),
        })
    }

    pub fn config(&self) -> &TierConfig {
        &self.cfg
    }

    pub fn states(&self) -> &[SetValue] {
        &self.states
    }

    pub fn top(&self) -> Mask {
        if self.states.len() == 32 {
            Mask::MAX
        } else {
            (1 << self.states.len()) - 1
        }
    }

    pub fn mask(&self, t: &Snapshot) -> Result<Mask> {
        let mut m = 0;
        for x in t.states() {
            let i = self
                .index(x)
                .ok_or_else(|| NapError::Window(format!("{x} lies outside the top window")))?;
            m |= 1 << i;
        }
        Ok(m)
    }

    pub fn index(&self, x: &SetValue) -> Option<usize> {
        self.states.iter().position(|s| s == x)
    }

    pub fn snapshot(&self, m: Mask) -> Snapshot {
        Snapshot::new(
            (0..self.states.len())
                .filter(|i| m >> i & 1 == 1)
                .map(|i| self.states[i].clone()),
        )
    }

    pub fn tier(&self, m: Mask) -> usize {
        self.cfg.tier(bits(m)).unwrap_or(self.cfg.thresholds.len())
    }

    /// Whether `y ⊆ w` is a snapshot of `w`: of lower tier, or for the top
    /// window any proper subset with a tier.
    pub fn admissible(&self, y: Mask, w: Mask) -> bool {
        if y & !w != 0 {
            return false;
        }
        if w == self.top() {
            return y != w && self.cfg.tier(bits(y)).is_some();
        }
        self.tier(y) < self.tier(w)
    }

    /// The snapshot space of `w`.
    pub fn domain(&self, w: Mask) -> SnapSet {
        let mut out = SnapSet::empty(self);
        for y in submasks(w) {
            if self.admissible(y, w) {
                out.insert(y);
            }
        }
        out
    }

    /// `R^W`: snapshots meeting `w` in a snapshot of `w`.
    pub fn subset_bound(&self, w: Mask) -> Result<Constraint> {
        let bound = self
            .cfg
            .cutoff(self.tier(w))
            .ok_or_else(|| NapError::Window(format!("window {} has tier 0", self.snapshot(w))))?;
        Ok(Constraint::SubsetBound {
            window: self.snapshot(w),
            bound,
        })
    }

    /// The extension of `c` within the snapshot space of the top window.
    pub fn extension(&self, c: &Constraint) -> Result<SnapSet> {
        let dom = self.domain(self.top());
        let test: Box<dyn Fn(Mask) -> bool> = match c {
            Constraint::Fineness(x) => match self.index(x) {
                Some(i) => Box::new(move |y| y >> i & 1 == 1),
                None => Box::new(|_| false),
            },
            Constraint::SubsetBound { window, bound } => {
                let w = window
                    .states()
                    .iter()
                    .filter_map(|x| self.index(x))
                    .fold(0, |m: Mask, i| m | 1 << i);
                let bound = *bound;
                Box::new(move |y| bits(y & w) < bound)
            }
            Constraint::MinSize(n) => {
                let n = *n;
                Box::new(move |y| bits(y) >= n)
            }
            Constraint::Parametric(_) => {
                return Err(NapError::WrongMode {
                    op: "extension of a parametric family",
                })
            }
            other => {
                let other = other.clone();
                Box::new(move |y| other.contains(&self.snapshot(y)).unwrap_or(false))
            }
        };
        let mut out = SnapSet::empty(self);
        for y in dom.iter() {
            if test(y) {
                out.insert(y);
            }
        }
        Ok(out)
    }
}

/// A set of snapshots of the top window, as a bitmap indexed by mask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SnapSet {
    words: Vec<u64>,
}

impl SnapSet {
    pub fn empty(frame: &Frame) -> Self {
        let n = 1usize << frame.states.len();
        SnapSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn insert(&mut self, y: Mask) {
        self.words[y as usize / 64] |= 1 << (y % 64);
    }

    pub fn contains(&self, y: Mask) -> bool {
        self.words[y as usize / 64] >> (y % 64) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn and(&self, other: &SnapSet) -> SnapSet {
        SnapSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub fn minus(&self, other: &SnapSet) -> SnapSet {
        SnapSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & !b)
                .collect(),
        }
    }

    pub fn intersects(&self, other: &SnapSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn is_subset(&self, other: &SnapSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = Mask> + '_ {
        self.words.iter().enumerate().flat_map(|(i, w)| {
            let mut w = *w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some((i * 64) as Mask + b)
            })
        })
    }
}

impl fmt::Debug for SnapSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SnapSet({} snapshots)", self.len())
    }
}

/// A filter base on one window: each source constraint with its restricted
/// extension, keyed by the constraint's text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowBase {
    pub window: Mask,
    pub entries: BTreeMap<String, SnapSet>,
    /// Entries standing for `R^W`, with their windows.
    pub bounds: BTreeMap<String, Mask>,
}

impl WindowBase {
    /// The extensional base on the top window; the fineness family becomes
    /// one constraint per state.
    pub fn top(frame: &Frame, fb: &FilterBase) -> Result<Self> {
        let mut cs: Vec<Constraint> = Vec::new();
        for c in fb.constraints() {
            match c {
                Constraint::Parametric(Family::Fineness) => {
                    cs.extend(frame.states.iter().cloned().map(Constraint::Fineness));
                }
                c => cs.push(c.clone()),
            }
        }
        let mut entries = BTreeMap::new();
        let mut bounds = BTreeMap::new();
        for c in cs {
            let key = c.to_string();
            if let Constraint::SubsetBound { window, .. } = &c {
                bounds.insert(key.clone(), frame.mask(window)?);
            }
            entries.insert(key, frame.extension(&c)?);
        }
        Ok(WindowBase {
            window: frame.top(),
            entries,
            bounds,
        })
    }

    fn bound_for(&self, w: Mask) -> Option<&str> {
        self.bounds
            .iter()
            .find(|(_, m)| **m == w)
            .map(|(k, _)| k.as_str())
    }

    pub fn distinct_sets(&self) -> Vec<&SnapSet> {
        let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
        self.entries
            .values()
            .filter(|s| seen.insert(s.words.clone()))
            .collect()
    }
}

/// `{ z ∩ W : z ∈ X, z ∩ W a snapshot of W }`.
pub fn restrict_constraint_set(frame: &Frame, x: &SnapSet, w: Mask) -> SnapSet {
    let mut out = SnapSet::empty(frame);
    for z in x.iter() {
        let y = z & w;
        if frame.admissible(y, w) {
            out.insert(y);
        }
    }
    out
}

/// Restricts every entry of `base` to the sub-window `w`, after intersecting
/// it with every subset bound of the base.
pub fn restrict_base(frame: &Frame, base: &WindowBase, w: Mask) -> Result<WindowBase> {
    if w & !base.window != 0 || w == base.window {
        return Err(NapError::Window(format!(
            "{} is not a proper sub-window of {}",
            frame.snapshot(w),
            frame.snapshot(base.window)
        )));
    }
    if frame.tier(w) == 0 {
        return Err(NapError::Window(format!(
            "window {} has tier 0",
            frame.snapshot(w)
        )));
    }
    if base.bound_for(w).is_none() {
        return Err(NapError::MissingSubsetBound(frame.snapshot(w).to_string()));
    }
    let mut all = frame.domain(base.window);
    for key in base.bounds.keys() {
        all = all.and(&base.entries[key]);
    }
    let entries = base
        .entries
        .iter()
        .map(|(k, x)| (k.clone(), restrict_constraint_set(frame, &x.and(&all), w)))
        .collect();
    let bounds = base
        .bounds
        .iter()
        .filter(|(_, m)| **m & !w == 0 && **m != w)
        .map(|(k, m)| (k.clone(), *m))
        .collect();
    Ok(WindowBase {
        window: w,
        entries,
        bounds,
    })
}

/// Fineness, all lattice subset bounds below the top, nothing else.
pub fn lattice_base(frame: &Frame, lattice: &[Mask]) -> Result<FilterBase> {
    let mut fb =
        FilterBase::from_constraints(frame.states.iter().cloned().map(Constraint::Fineness));
    for &w in lattice {
        if w != frame.top() {
            fb.push(frame.subset_bound(w)?);
        }
    }
    fb.note("fineness and subset bounds");
    Ok(fb)
}

/// Whether every family of at most `k` sets from `sets`, each further cut
/// by `within`, has a common member.
fn fip_within(sets: &[&SnapSet], k: usize, within: &SnapSet) -> bool {
    fn go(sets: &[&SnapSet], from: usize, left: usize, acc: &SnapSet) -> bool {
        if acc.is_empty() {
            return false;
        }
        if left == 0 {
            return true;
        }
        (from..sets.len()).all(|i| go(sets, i + 1, left - 1, &acc.and(sets[i])))
    }
    go(sets, 0, k, within)
}

/// The five fine-filter properties of a restricted base, checked exactly on
/// its window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BaseAudit {
    pub fine: bool,
    pub fip: bool,
    pub ultra: bool,
    pub non_principal: bool,
    pub no_empty_set: bool,
}

impl BaseAudit {
    pub fn passed(&self) -> bool {
        self.fine && self.fip && self.ultra && self.non_principal && self.no_empty_set
    }

    pub fn labels(&self) -> [(&'static str, bool); 5] {
        [
            ("fine", self.fine),
            ("fip", self.fip),
            ("ultra", self.ultra),
            ("non-principal", self.non_principal),
            ("empty-set", self.no_empty_set),
        ]
    }
}

/// Budget for [`audit_base`]: intersections of up to `k` sets, and
/// `samples` random test sets for the ultra dichotomy.
#[derive(Clone, Copy, Debug)]
pub struct AuditBudget {
    pub k: usize,
    pub samples: usize,
    pub seed: u64,
}

impl AuditBudget {
    /// The largest intersection size that can succeed: `t₀ − 1` points.
    pub fn for_config(cfg: &TierConfig, seed: u64) -> Self {
        AuditBudget {
            k: (cfg.thresholds[0] - 1).min(4),
            samples: 16,
            seed,
        }
    }
}

/// Audits a window base. The dichotomy test for a set `X` asks that `X` or
/// its complement meet every intersection of at most `k/2` base sets, which
/// the FIP check at `k` guarantees for any filter extending the base.
pub fn audit_base(frame: &Frame, base: &WindowBase, budget: &AuditBudget) -> BaseAudit {
    let dom = frame.domain(base.window);
    let sets = base.distinct_sets();
    let states: Vec<usize> = (0..frame.states.len())
        .filter(|i| base.window >> i & 1 == 1)
        .collect();

    let fine = states.iter().all(|&i| {
        sets.iter()
            .any(|s| !s.is_empty() && s.iter().all(|y| y >> i & 1 == 1))
    });
    let fip = fip_within(&sets, budget.k, &dom);

    let j = budget.k / 2;
    let mut tests: Vec<SnapSet> = Vec::new();
    for &i in &states {
        let mut x = SnapSet::empty(frame);
        for y in dom.iter().filter(|y| y >> i & 1 == 1) {
            x.insert(y);
        }
        tests.push(x);
    }
    let mut parity = SnapSet::empty(frame);
    for y in dom.iter().filter(|y| bits(*y).is_multiple_of(2)) {
        parity.insert(y);
    }
    tests.push(parity);
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    for _ in 0..budget.samples {
        let mut x = SnapSet::empty(frame);
        for y in dom.iter() {
            if rng.gen_bool(0.5) {
                x.insert(y);
            }
        }
        tests.push(x);
    }
    let ultra = tests
        .iter()
        .all(|x| fip_within(&sets, j, x) || fip_within(&sets, j, &dom.minus(x)));

    let mut common = dom.clone();
    for s in &sets {
        common = common.and(s);
    }
    BaseAudit {
        fine,
        fip,
        ultra,
        non_principal: common.is_empty(),
        no_empty_set: sets.iter().all(|s| !s.is_empty()),
    }
}

/// A top-window base with memoized restrictions to its sub-windows.
pub struct TieredProb {
    frame: Frame,
    base: Arc<WindowBase>,
    memo: Mutex<BTreeMap<Mask, Arc<WindowBase>>>,
}

impl TieredProb {
    pub fn new(frame: Frame, fb: &FilterBase) -> Result<Self> {
        let base = Arc::new(WindowBase::top(&frame, fb)?);
        Ok(TieredProb {
            frame,
            base,
            memo: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn base(&self) -> &WindowBase {
        &self.base
    }

    /// The base restricted to `w`, computed once per window.
    pub fn restricted(&self, w: Mask) -> Result<Arc<WindowBase>> {
        if w == self.frame.top() {
            return Ok(self.base.clone());
        }
        let mut memo = self.memo.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(b) = memo.get(&w) {
            return Ok(b.clone());
        }
        let b = Arc::new(restrict_base(&self.frame, &self.base, w)?);
        memo.insert(w, b.clone());
        Ok(b)
    }
}

/// Outcome of the non-restriction demonstration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    /// Fineness plus the big-snapshot constraint has the budgeted FIP.
    pub top_fip: bool,
    /// Cutting every set down to tier-0 snapshots empties the big-snapshot constraint.
    pub restriction_has_empty: bool,
    pub repaired_fip: bool,
    pub repaired_has_empty: bool,
    /// Keeping both constraints contradicts the FIP.
    pub both_fip: bool,
    pub big: Constraint,
    pub repair: Constraint,
}

impl Counterexample {
    pub fn demonstrated(&self) -> bool {
        self.top_fip
            && self.restriction_has_empty
            && self.repaired_fip
            && !self.repaired_has_empty
            && !self.both_fip
    }
}

/// Cuts every set of `base` down to the tier-0 snapshots of the top window.
fn restrict_to_small(frame: &Frame, base: &WindowBase) -> Vec<SnapSet> {
    let mut small = SnapSet::empty(frame);
    for y in frame.domain(frame.top()).iter() {
        if frame.tier(y) == 0 {
            small.insert(y);
        }
    }
    base.entries.values().map(|s| s.and(&small)).collect()
}

/// Fineness together with "at least `t₀` states" has the FIP on the top
/// window, yet restricting to tier-0 snapshots yields the empty set. Trading
/// the big-snapshot constraint for the tier-0 subset bound repairs this.
pub fn non_restriction_counterexample(
    cfg: &TierConfig,
    top: &Snapshot,
    k: usize,
) -> Result<Counterexample> {
    if cfg.thresholds.len() < 2 {
        return Err(NapError::InvalidTiers(
            "the demonstration needs at least two tiers".into(),
        ));
    }
    let frame = Frame::new(cfg.clone(), top)?;
    if frame.tier(frame.top()) == 0 {
        return Err(NapError::InvalidTiers(
            "the top window must lie above tier 0".into(),
        ));
    }
    let t0 = cfg.thresholds[0];
    let k = k.clamp(1, t0 - 1);
    let fine = FilterBase::from_constraints(top.states().iter().cloned().map(Constraint::Fineness));
    let big = Constraint::MinSize(t0);
    let repair = Constraint::SubsetBound {
        window: top.clone(),
        bound: t0,
    };
    let dom = frame.domain(frame.top());
    let fip = |fb: &FilterBase| -> Result<bool> {
        let b = WindowBase::top(&frame, fb)?;
        Ok(fip_within(&b.distinct_sets(), k, &dom))
    };
    let has_empty = |fb: &FilterBase| -> Result<bool> {
        let b = WindowBase::top(&frame, fb)?;
        Ok(restrict_to_small(&frame, &b).iter().any(SnapSet::is_empty))
    };
    let broken = fine.with(big.clone());
    let repaired = fine.with(repair.clone());
    Ok(Counterexample {
        top_fip: fip(&broken)?,
        restriction_has_empty: has_empty(&broken)?,
        repaired_fip: fip(&repaired)?,
        repaired_has_empty: has_empty(&repaired)?,
        both_fip: fip(&broken.with(repair.clone()))?,
        big,
        repair,
    })
}
