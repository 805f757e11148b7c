//! Probabilities defined tier by tier, and the coherence identity between
//! a window and its sub-windows.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NapError, Result};
use crate::rational;
use crate::snapshot::Snapshot;
use crate::universe::{ClassSpec, RandomVariable};
use crate::Rational;

use super::{bits, submasks, Frame, Mask, TieredProb};

/// `θ ∈ A` over the top window: which states land in `A`, and where they land.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    hits: Mask,
    image: Vec<Option<usize>>,
}

impl Event {
    fn new(frame: &Frame, theta: &RandomVariable, a: &ClassSpec) -> Event {
        let mut hits = 0;
        let mut image = Vec::with_capacity(frame.states().len());
        for (i, s) in frame.states().iter().enumerate() {
            let y = theta.apply(s);
            if a.contains(&y) {
                hits |= 1 << i;
            }
            image.push(frame.index(&y));
        }
        Event { hits, image }
    }

    fn identity(a: Mask, n: usize) -> Event {
        Event {
            hits: a,
            image: (0..n).map(Some).collect(),
        }
    }

    /// `|{s ∈ Y : θ(s) ∈ A ∩ Y}| / |Y|`.
    fn leaf(&self, y: Mask) -> Rational {
        let count = (0..self.image.len())
            .filter(|&i| y >> i & self.hits >> i & 1 == 1)
            .filter(|&i| matches!(self.image[i], Some(j) if y >> j & 1 == 1))
            .count();
        rational::ratio(count, bits(y))
    }
}

/// A probability on a window: a rational at tier 0, otherwise a germ over
/// the window's snapshots whose value at each snapshot is again a `TieredValue`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TieredValue {
    Leaf(Rational),
    Pr {
        event: Arc<Event>,
        window: Mask,
    },
    Div(Box<TieredValue>, Box<TieredValue>),
    /// A value of a sub-window read on a larger one: `f̄(X) = f(X ∩ T)`.
    Lift {
        inner: Box<TieredValue>,
        window: Mask,
    },
}

impl TieredValue {
    pub fn leaf(&self) -> Option<&Rational> {
        match self {
            TieredValue::Leaf(q) => Some(q),
            _ => None,
        }
    }

    pub fn window(&self) -> Option<Mask> {
        match self {
            TieredValue::Leaf(_) => None,
            TieredValue::Pr { window, .. } | TieredValue::Lift { window, .. } => Some(*window),
            TieredValue::Div(a, b) => a.window().or_else(|| b.window()),
        }
    }
}

impl Frame {
    fn pr(&self, event: &Arc<Event>, w: Mask) -> Result<TieredValue> {
        if w == 0 {
            return Err(NapError::EmptySnapshot);
        }
        Ok(if self.tier(w) == 0 {
            TieredValue::Leaf(event.leaf(w))
        } else {
            TieredValue::Pr {
                event: event.clone(),
                window: w,
            }
        })
    }

    /// The value of `v` at the snapshot `y` of its window, or `None` where
    /// it is undefined.
    pub fn value_at(&self, v: &TieredValue, y: Mask) -> Result<Option<TieredValue>> {
        Ok(match v {
            TieredValue::Leaf(_) => Some(v.clone()),
            TieredValue::Pr { event, .. } => {
                if y == 0 {
                    None
                } else {
                    Some(self.pr(event, y)?)
                }
            }
            TieredValue::Div(a, b) => {
                let (Some(a), Some(b)) = (self.value_at(a, y)?, self.value_at(b, y)?) else {
                    return Ok(None);
                };
                div(a, b)
            }
            TieredValue::Lift { inner, .. } => match inner.window() {
                None => Some((**inner).clone()),
                Some(iw) => {
                    let z = y & iw;
                    if !self.admissible(z, iw) {
                        None
                    } else {
                        self.value_at(inner, z)?
                    }
                }
            },
        })
    }
}

/// `a / b`, folded to a rational when both are; `None` when `b` is the rational zero.
fn div(a: TieredValue, b: TieredValue) -> Option<TieredValue> {
    match (a, b) {
        (_, TieredValue::Leaf(q)) if q == rational::zero() => None,
        (TieredValue::Leaf(p), TieredValue::Leaf(q)) => Some(TieredValue::Leaf(p / q)),
        (a, b) => Some(TieredValue::Div(Box::new(a), Box::new(b))),
    }
}

/// `Pr^S(θ ∈ A)`: the germ `T ↦ Pr^T(θ ∈ A ∩ T)` over the snapshots of `s`.
pub fn tiered_prob(
    a: &ClassSpec,
    theta: &RandomVariable,
    s: &Snapshot,
    tp: &TieredProb,
) -> Result<TieredValue> {
    let frame = tp.frame();
    let w = frame.mask(s)?;
    frame.pr(&Arc::new(Event::new(frame, theta, a)), w)
}

/// Sample sizes for [`coherence_check`]: `outer` snapshots of the large
/// window, `inner` snapshots at every deeper level.
#[derive(Clone, Copy, Debug)]
pub struct CoherenceBudget {
    pub outer: usize,
    pub inner: usize,
    pub seed: u64,
}

impl Default for CoherenceBudget {
    fn default() -> Self {
        CoherenceBudget {
            outer: 64,
            inner: 8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoherencePoint {
    pub snapshot: Snapshot,
    /// The common value when both sides are rationals at this snapshot.
    pub value: Option<Rational>,
    /// Leaf comparisons made below this snapshot.
    pub leaves: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoherenceReport {
    pub small: Snapshot,
    pub large: Snapshot,
    pub points: Vec<CoherencePoint>,
}

impl CoherenceReport {
    pub fn passed(&self) -> bool {
        !self.points.is_empty() && self.points.iter().all(|p| p.pass)
    }
}

struct Cmp<'a> {
    frame: &'a Frame,
    small: Mask,
    inner: usize,
    rng: ChaCha8Rng,
    leaves: usize,
}

impl Cmp<'_> {
    /// Equality of two values, recursing into sampled snapshots.
    fn equal(&mut self, l: &TieredValue, r: &TieredValue) -> Result<bool> {
        if let (Some(p), Some(q)) = (l.leaf(), r.leaf()) {
            self.leaves += 1;
            return Ok(p == q);
        }
        let (l, r, w) = match (l.window(), r.window()) {
            (Some(a), Some(b)) if a == b => (l.clone(), r.clone(), a),
            (Some(a), Some(b)) if a & !b == 0 => (lift(l, b), r.clone(), b),
            (Some(a), Some(b)) if b & !a == 0 => (l.clone(), lift(r, a), a),
            (Some(a), Some(b)) => {
                return Err(NapError::Window(format!(
                    "values on {} and {} cannot be compared",
                    self.frame.snapshot(a),
                    self.frame.snapshot(b)
                )))
            }
            (Some(a), None) | (None, Some(a)) => (l.clone(), r.clone(), a),
            (None, None) => unreachable!("both leaves handled above"),
        };
        // Germs agree when they agree on a member of the filter. Sample the
        // snapshots containing `W ∩ T`, or one point of it when that set is
        // too large to pin.
        let wt = w & self.small;
        let pins = if wt == 0 || self.frame.tier(wt) < self.frame.tier(w) {
            wt
        } else {
            wt & wt.wrapping_neg()
        };
        let mut points: Vec<Mask> = submasks(w)
            .filter(|y| *y != 0 && y & pins == pins && self.frame.admissible(*y, w))
            .collect();
        points.shuffle(&mut self.rng);
        let mut seen = 0;
        for y in points {
            if seen == self.inner {
                break;
            }
            let (Some(a), Some(b)) = (self.frame.value_at(&l, y)?, self.frame.value_at(&r, y)?)
            else {
                continue;
            };
            seen += 1;
            if !self.equal(&a, &b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn lift(v: &TieredValue, w: Mask) -> TieredValue {
    TieredValue::Lift {
        inner: Box::new(v.clone()),
        window: w,
    }
}

/// Checks `Pr^T(A) = Pr^S(A | T)` for the identity variable on snapshots
/// `X` of `S` from the restricted base: `X ∩ T` a snapshot of `T` and
/// `X` meeting `T`. At each `X` both `f̄_A(X) = f_{A∩T}(X ∩ T)` and
/// `f̄_A(X) = f_{A∩T}(X) / f_T(X)` are compared exactly.
pub fn coherence_check(
    a: &ClassSpec,
    t: &Snapshot,
    s: &Snapshot,
    tp: &TieredProb,
    budget: &CoherenceBudget,
) -> Result<CoherenceReport> {
    let frame = tp.frame();
    let (tm, sm) = (frame.mask(t)?, frame.mask(s)?);
    if tm & !sm != 0 || tm == sm || frame.tier(tm) >= frame.tier(sm) {
        return Err(NapError::Window(format!(
            "{t} is not a lower-tier sub-window of {s}"
        )));
    }
    if frame.tier(tm) == 0 {
        return Err(NapError::Window(format!("window {t} has tier 0")));
    }
    let base = tp.restricted(sm)?;
    let bound = frame.subset_bound(tm)?.to_string();
    let r_t = base
        .entries
        .get(&bound)
        .ok_or_else(|| NapError::MissingSubsetBound(t.to_string()))?;
    let first = tm.trailing_zeros() as usize;
    let pin = crate::filter::Constraint::Fineness(frame.states()[first].clone()).to_string();
    let a_x = base.entries.get(&pin).ok_or_else(|| {
        NapError::Window(format!(
            "no fineness constraint for {}",
            frame.states()[first]
        ))
    })?;

    let n = frame.states().len();
    let a_mask = frame.mask(&Snapshot::new(
        frame.states().iter().filter(|x| a.contains(x)).cloned(),
    ))?;
    let ev_a = Arc::new(Event::identity(a_mask, n));
    let ev_at = Arc::new(Event::identity(a_mask & tm, n));
    let ev_t = Arc::new(Event::identity(tm, n));
    let f_a = lift(&frame.pr(&ev_a, tm)?, sm);

    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut xs: Vec<Mask> = r_t.and(a_x).iter().collect();
    xs.shuffle(&mut rng);
    xs.truncate(budget.outer);
    xs.sort_unstable();

    let mut cmp = Cmp {
        frame,
        small: tm,
        inner: budget.inner,
        rng,
        leaves: 0,
    };
    let mut points = Vec::new();
    for x in xs {
        let Some(lhs) = frame.value_at(&f_a, x)? else {
            return Err(NapError::Window(format!(
                "{} lies outside the restricted subset bound",
                frame.snapshot(x)
            )));
        };
        let direct = frame.pr(&ev_at, x & tm)?;
        let ratio =
            div(frame.pr(&ev_at, x)?, frame.pr(&ev_t, x)?).ok_or(NapError::DivisionUndefined)?;
        cmp.leaves = 0;
        let pass = cmp.equal(&lhs, &direct)? && cmp.equal(&lhs, &ratio)?;
        let value = match (lhs.leaf(), ratio.leaf()) {
            (Some(p), Some(q)) if p == q => Some(p.clone()),
            _ => None,
        };
        points.push(CoherencePoint {
            snapshot: frame.snapshot(x),
            value,
            leaves: cmp.leaves,
            pass,
        });
    }
    Ok(CoherenceReport {
        small: t.clone(),
        large: s.clone(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{lattice_base, TierConfig};
    use super::*;
    use crate::germ::germ_of_event;
    use crate::universe::{make_universe, Builtin, Mode, SetValue};

    fn setup(n: u64, thresholds: Vec<usize>, lattice: &[Mask]) -> TieredProb {
        let top = Snapshot::new((0..n).map(SetValue::nat));
        let frame = Frame::new(TierConfig::new(thresholds).unwrap(), &top).unwrap();
        let fb = lattice_base(&frame, lattice).unwrap();
        TieredProb::new(frame, &fb).unwrap()
    }

    #[test]
    fn total_event_is_one() {
        let tp = setup(6, vec![3, 7], &[]);
        let s = tp.frame().snapshot(0b111111);
        let v = tiered_prob(&ClassSpec::universe(), &RandomVariable::Identity, &s, &tp).unwrap();
        for y in submasks(0b111111).filter(|y| *y != 0 && tp.frame().tier(*y) == 0) {
            let leaf = tp.frame().value_at(&v, y).unwrap().unwrap();
            assert_eq!(leaf.leaf(), Some(&rational::one()));
        }
    }

    #[test]
    fn singleton_leaves() {
        let tp = setup(5, vec![3, 6], &[]);
        let s = tp.frame().snapshot(0b11111);
        let a = ClassSpec::finite([SetValue::nat(2)]);
        let v = tiered_prob(&a, &RandomVariable::Identity, &s, &tp).unwrap();
        for y in [0b00100, 0b00110, 0b00011] {
            let leaf = tp.frame().value_at(&v, y).unwrap().unwrap();
            let want = if y & 0b100 != 0 {
                rational::ratio(1, bits(y))
            } else {
                rational::zero()
            };
            assert_eq!(leaf.leaf(), Some(&want));
        }
    }

    #[test]
    fn two_tiers_unfold_to_counting() {
        let u = make_universe(Mode::Ordinal, 2).unwrap();
        let even = u.builtin(Builtin::Even).unwrap();
        let top = Snapshot::new(
            (0..6)
                .map(SetValue::nat)
                .chain((0..4).map(|i| SetValue::ord(1, i))),
        );
        let frame = Frame::new(TierConfig::new(vec![3, 6, 11]).unwrap(), &top).unwrap();
        let tp = TieredProb::new(frame.clone(), &lattice_base(&frame, &[]).unwrap()).unwrap();
        let v = tiered_prob(&even, &RandomVariable::Identity, &top, &tp).unwrap();
        let direct = germ_of_event(&RandomVariable::Identity, &even);
        for y in [0b0000011111, 0b1111000001, 0b0101010101] {
            let mid = frame.value_at(&v, y).unwrap().unwrap();
            for z in submasks(y).filter(|z| *z != 0 && frame.tier(*z) == 0) {
                let leaf = frame.value_at(&mid, z).unwrap().unwrap();
                assert_eq!(
                    leaf.leaf().unwrap(),
                    &direct.eval(&frame.snapshot(z)).unwrap()
                );
            }
        }
    }

    #[test]
    fn coherence_on_three_tiers() {
        let tp = setup(12, vec![3, 5, 9, 13], &[0xff, 0x0f]);
        let f = tp.frame();
        let (s, t) = (f.snapshot(0xff), f.snapshot(0x0f));
        let budget = CoherenceBudget::default();
        for a in [
            ClassSpec::finite([SetValue::nat(1), SetValue::nat(2), SetValue::nat(9)]),
            ClassSpec::finite([SetValue::nat(10)]),
            ClassSpec::universe(),
        ] {
            let r = coherence_check(&a, &t, &s, &tp, &budget).unwrap();
            assert!(r.passed(), "{r:?}");
            let top = f.snapshot(f.top());
            assert!(coherence_check(&a, &s, &top, &tp, &budget)
                .unwrap()
                .passed());
        }
    }

    #[test]
    fn unequal_values_are_told_apart() {
        let tp = setup(8, vec![3, 5, 9], &[0x0f]);
        let f = tp.frame();
        let a = Arc::new(Event::identity(0b0011, 8));
        let b = Arc::new(Event::identity(0b0101, 8));
        let mut cmp = Cmp {
            frame: f,
            small: 0x0f,
            inner: 8,
            rng: ChaCha8Rng::seed_from_u64(0),
            leaves: 0,
        };
        let (pa, pb) = (f.pr(&a, 0x0f).unwrap(), f.pr(&b, 0x0f).unwrap());
        assert!(cmp.equal(&pa, &pa).unwrap());
        assert!(!cmp.equal(&pa, &pb).unwrap());
    }
}
