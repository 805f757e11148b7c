//! Witnesses combining fineness, ratio, interval and weight constraints on ordinals.

use std::collections::BTreeSet;

use crate::error::{NapError, Result};
use crate::snapshot::Snapshot;
use crate::universe::{ClassExpr, ClassSpec, Mode, SetValue, Universe};

use super::constraint::Constraint;

/// Parameters of one ordinal witness; values below 1 are read as 1.
#[derive(Clone, Debug)]
pub struct OrdinalSpec {
    pub pins: Vec<SetValue>,
    pub k: u64,
    pub l: u64,
    pub m: u64,
    pub pairs: Vec<(ClassSpec, ClassSpec)>,
}

impl OrdinalSpec {
    /// Every constraint the witness is built for.
    pub fn constraints(&self) -> Vec<Constraint> {
        let mut out: Vec<Constraint> = self
            .pins
            .iter()
            .cloned()
            .map(Constraint::Fineness)
            .collect();
        out.extend(
            self.pairs
                .iter()
                .map(|(a, b)| Constraint::ratio(a, b, self.k.max(1))),
        );
        out.push(Constraint::Interval(self.l.max(1)));
        out.push(Constraint::Weight(self.m.max(1)));
        out
    }
}

fn successors(x: &SetValue, l: u64) -> Vec<SetValue> {
    match x {
        SetValue::Ord(o) => (1..=l)
            .map(|i| SetValue::ord(o.omega, o.finite + i))
            .collect(),
        _ => Vec::new(),
    }
}

fn closure(states: &BTreeSet<SetValue>, l: u64) -> BTreeSet<SetValue> {
    let mut out = states.clone();
    for x in states {
        out.extend(successors(x, l));
    }
    out
}

/// Builds a member of every constraint in `spec` in four steps: the pins;
/// for each pair a block `C ⊆ B` of at least `k·n` elements that stay more
/// than `l` places away from every `A`; the interval closure adding
/// `α+1, …, α+l` after each ordinal; and `j·m` elements outside every
/// `A ∪ B ∪ On`, where `j` is the size reached so far.
///
/// `n` counts the members of `A` among the closed pins, which is the pin
/// count whenever the closure of a pin avoids `A`.
pub fn ordinal_witness(u: &Universe, spec: &OrdinalSpec) -> Result<Snapshot> {
    if u.mode() != Mode::Ordinal {
        return Err(NapError::WrongMode {
            op: "ordinal witness",
        });
    }
    let (k, l, m) = (spec.k.max(1), spec.l.max(1), spec.m.max(1));
    for x in &spec.pins {
        u.validate(x)?;
    }
    let small = spec
        .pairs
        .iter()
        .map(|(a, _)| a.clone())
        .reduce(|x, y| x.union(&y))
        .unwrap_or_else(ClassSpec::empty);

    let mut f: BTreeSet<SetValue> = spec.pins.iter().cloned().collect();
    let closed_pins = closure(&f, l);
    for (a, b) in &spec.pairs {
        let n = closed_pins.iter().filter(|x| a.contains(x)).count();
        let need = (k as usize * n).max(1);
        let source = b.difference(&small);
        let block: Vec<SetValue> = source
            .enumerate(u, &f)
            .filter(|x| u.contains(x) && successors(x, l).iter().all(|y| !small.contains(y)))
            .take(need)
            .collect();
        if block.len() < need {
            return Err(NapError::EnumerationExhausted {
                class: source.to_string(),
                needed: need,
            });
        }
        for x in &block {
            if let Some(y) = successors(x, l).into_iter().find(|y| small.contains(y)) {
                return Err(NapError::IsolationViolated {
                    value: y.to_string(),
                    class: small.to_string(),
                });
            }
        }
        f.extend(block);
    }
    if f.is_empty() {
        f.insert(SetValue::nat(0));
    }

    let f = closure(&f, l);
    let j = f.len();
    let outside = spec
        .pairs
        .iter()
        .fold(ClassSpec::new(ClassExpr::Ordinals), |acc, (a, b)| {
            acc.union(a).union(b)
        });
    let pad_source = ClassSpec::universe().difference(&outside);
    let need = j * m as usize;
    let mut pads: Vec<SetValue> = pad_source
        .enumerate(u, &f)
        .filter(|x| u.contains(x))
        .take(need)
        .collect();
    if pads.len() < need {
        // extra members of B only raise its count, so they may pad when nothing else is left
        let wider =
            ClassSpec::universe().difference(&ClassSpec::new(ClassExpr::Ordinals).union(&small));
        let mut taken = f.clone();
        taken.extend(pads.iter().cloned());
        let more: Vec<SetValue> = wider
            .enumerate(u, &taken)
            .filter(|x| u.contains(x) && !taken.contains(x))
            .take(need - pads.len())
            .collect();
        pads.extend(more);
    }
    if pads.len() < need {
        return Err(NapError::EnumerationExhausted {
            class: pad_source.to_string(),
            needed: need,
        });
    }
    Ok(Snapshot::new(f.into_iter().chain(pads)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{ratio, recip};
    use crate::universe::{make_universe, Builtin};

    fn check_all(u: &Universe, spec: &OrdinalSpec) -> Snapshot {
        let t = ordinal_witness(u, spec).unwrap();
        for c in spec.constraints() {
            assert!(c.contains(&t).unwrap(), "{c} fails on {t}");
        }
        t
    }

    #[test]
    fn four_memberships() {
        let u = make_universe(Mode::Ordinal, 3).unwrap();
        let lim = u.builtin(Builtin::Lim).unwrap();
        let odd = u.builtin(Builtin::Odd).unwrap();
        let spec = OrdinalSpec {
            pins: vec![SetValue::nat(5)],
            k: 2,
            l: 2,
            m: 2,
            pairs: vec![(lim, odd)],
        };
        check_all(&u, &spec);
    }

    #[test]
    fn vacuous_pins() {
        let u = make_universe(Mode::Ordinal, 2).unwrap();
        let spec = OrdinalSpec {
            pins: vec![],
            k: 1,
            l: 1,
            m: 1,
            pairs: vec![],
        };
        let t = check_all(&u, &spec);
        let on = u.builtin(Builtin::On).unwrap();
        assert_eq!(t.count_in(&on) * 2, t.len());
    }

    #[test]
    fn weight_and_parity_bounds() {
        let u = make_universe(Mode::Ordinal, 3).unwrap();
        let even = u.builtin(Builtin::Even).unwrap();
        let odd = u.builtin(Builtin::Odd).unwrap();
        let on = u.builtin(Builtin::On).unwrap();
        let lim = u.builtin(Builtin::Lim).unwrap();
        let pads = ClassSpec::new(ClassExpr::Pads {
            modulus: 2,
            residue: 0,
        });
        let spec = OrdinalSpec {
            pins: vec![SetValue::nat(3), SetValue::ord(1, 0), SetValue::ord(2, 4)],
            k: 3,
            l: 4,
            m: 5,
            pairs: vec![(even.clone(), pads)],
        };
        let t = check_all(&u, &spec);
        let n_on = t.count_in(&on);
        assert!(ratio(n_on, t.len()) <= recip(5));
        let gap = t.count_in(&even).abs_diff(t.count_in(&odd));
        assert!(ratio(gap, n_on) <= recip(4));
        assert!(ratio(t.count_in(&lim), n_on) <= recip(4));
    }

    #[test]
    fn hf_mode_is_refused() {
        let u = make_universe(Mode::Hf, 3).unwrap();
        let spec = OrdinalSpec {
            pins: vec![],
            k: 1,
            l: 1,
            m: 1,
            pairs: vec![],
        };
        assert!(matches!(
            ordinal_witness(&u, &spec),
            Err(NapError::WrongMode { .. })
        ));
    }
}
