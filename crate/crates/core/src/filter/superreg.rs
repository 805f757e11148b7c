//! Witnesses for finitely many ratio constraints between classes of different tiers.

use std::collections::BTreeSet;

use crate::error::{NapError, Result};
use crate::snapshot::Snapshot;
use crate::universe::{ClassSpec, SetValue, Universe};

use super::constraint::Constraint;

/// A ratio requirement `Pr(A)/Pr(B) ≤ 1/n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioPair {
    pub a: ClassSpec,
    pub b: ClassSpec,
    pub n: u64,
}

impl RatioPair {
    pub fn new(a: &ClassSpec, b: &ClassSpec, n: u64) -> Self {
        RatioPair {
            a: a.clone(),
            b: b.clone(),
            n,
        }
    }

    pub fn constraint(&self) -> Constraint {
        Constraint::ratio(&self.a, &self.b, self.n)
    }
}

fn check_tiers(p: &RatioPair) -> Result<()> {
    let reason = if !p.a.tier().is_infinite() {
        "the smaller class must have an infinite tier"
    } else if p.a.tier() >= p.b.tier() {
        "tiers must increase strictly"
    } else if p.n == 0 {
        "the ratio parameter must be positive"
    } else {
        return Ok(());
    };
    Err(NapError::TierOrder {
        small: p.a.to_string(),
        large: p.b.to_string(),
        reason: reason.into(),
    })
}

/// A snapshot containing `pins` in which every pair satisfies
/// `n·|A_j∩F| ≤ |B_j∩F|` with `n` the largest parameter.
///
/// Pairs are processed by increasing tier of `A_j`. Step `j` adds `n·a` fresh
/// elements of `B_j ∖ (A_1 ∪ … ∪ A_j)`, where `a` counts the current members
/// of `A_j`; one element is added when `B_j` would otherwise stay empty.
pub fn superreg_witness(u: &Universe, pins: &[SetValue], pairs: &[RatioPair]) -> Result<Snapshot> {
    for x in pins {
        u.validate(x)?;
    }
    for p in pairs {
        check_tiers(p)?;
    }
    let mut order: Vec<&RatioPair> = pairs.iter().collect();
    order.sort_by_key(|p| p.a.tier());
    let n = order.iter().map(|p| p.n).max().unwrap_or(1) as usize;

    let mut f: BTreeSet<SetValue> = pins.iter().cloned().collect();
    let mut avoided: Option<ClassSpec> = None;
    for p in order {
        let snap = Snapshot::new(f.iter().cloned());
        let a_count = snap.count_in(&p.a);
        let mut need = n * a_count;
        if need == 0 && snap.count_in(&p.b) == 0 {
            need = 1;
        }
        let avoid = match &avoided {
            Some(c) => c.union(&p.a),
            None => p.a.clone(),
        };
        let source = p.b.difference(&avoid);
        avoided = Some(avoid);
        if need == 0 {
            continue;
        }
        let fresh: Vec<SetValue> = source
            .enumerate(u, &f)
            .filter(|x| u.contains(x))
            .take(need)
            .collect();
        if fresh.len() < need {
            return Err(NapError::EnumerationExhausted {
                class: source.to_string(),
                needed: need,
            });
        }
        f.extend(fresh);
    }
    Ok(Snapshot::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::{make_universe, Builtin, ClassExpr, Mode};

    fn pads() -> ClassSpec {
        ClassSpec::new(ClassExpr::Pads {
            modulus: 1,
            residue: 0,
        })
    }

    #[test]
    fn one_pinned_pair() {
        let u = make_universe(Mode::Ordinal, 2).unwrap();
        let nat = u.builtin(Builtin::Naturals).unwrap();
        let pair = RatioPair::new(&nat, &pads(), 2);
        let f = superreg_witness(&u, &[SetValue::nat(4)], std::slice::from_ref(&pair)).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.count_in(&pads()), 2);
        assert!(pair.constraint().contains(&f).unwrap());
    }

    #[test]
    fn pins_outside_every_small_class() {
        let u = make_universe(Mode::Ordinal, 2).unwrap();
        let even = u.builtin(Builtin::Even).unwrap();
        let pins = [SetValue::Pad(3), SetValue::Pad(8)];
        let f = superreg_witness(&u, &pins, &[RatioPair::new(&even, &pads(), 5)]).unwrap();
        assert_eq!(f, Snapshot::new(pins));
    }

    #[test]
    fn nested_pairs() {
        let u = make_universe(Mode::Ordinal, 3).unwrap();
        let even = u.builtin(Builtin::Even).unwrap();
        let nat = u.builtin(Builtin::Naturals).unwrap();
        let big = ClassSpec::new(ClassExpr::NonOrdinals);
        let pairs = [
            RatioPair::new(&even, &pads(), 3),
            RatioPair::new(&nat, &big, 3),
        ];
        let pins: Vec<SetValue> = [0, 1, 2, 7].map(SetValue::nat).into();
        let f = superreg_witness(&u, &pins, &pairs).unwrap();
        for p in &pairs {
            assert!(p.constraint().contains(&f).unwrap());
        }
        for x in &pins {
            assert!(Constraint::Fineness(x.clone()).contains(&f).unwrap());
        }
    }

    #[test]
    fn tier_hypothesis_is_enforced() {
        let u = make_universe(Mode::Ordinal, 2).unwrap();
        let even = u.builtin(Builtin::Even).unwrap();
        let odd = u.builtin(Builtin::Odd).unwrap();
        let err = superreg_witness(&u, &[], &[RatioPair::new(&even, &odd, 2)]).unwrap_err();
        assert!(matches!(err, NapError::TierOrder { .. }));
    }

    #[test]
    fn finite_source_runs_out() {
        let u = make_universe(Mode::Ordinal, 2).unwrap();
        let nat = u.builtin(Builtin::Naturals).unwrap();
        let few = ClassSpec::finite([SetValue::Pad(0)])
            .with_tier(crate::universe::CardinalityTier::Tier(1));
        let err = superreg_witness(&u, &[SetValue::nat(0)], &[RatioPair::new(&nat, &few, 3)])
            .unwrap_err();
        assert!(matches!(err, NapError::EnumerationExhausted { .. }));
    }
}
