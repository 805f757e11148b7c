//! Finite snapshots of states and the exact counting probabilities on them.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{NapError, Result};
use crate::rational::ratio;
use crate::text::Parser;
use crate::universe::{ClassSpec, Mode, RandomVariable, SetValue, Universe};
use crate::Rational;

/// A finite, duplicate-free, canonically ordered set of states.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Snapshot {
    states: Vec<SetValue>,
}

impl Snapshot {
    pub fn new<I: IntoIterator<Item = SetValue>>(states: I) -> Self {
        let mut states: Vec<SetValue> = states.into_iter().collect();
        states.sort();
        states.dedup();
        Snapshot { states }
    }

    pub fn states(&self) -> &[SetValue] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, x: &SetValue) -> bool {
        self.states.binary_search(x).is_ok()
    }

    pub fn is_subset(&self, other: &Snapshot) -> bool {
        self.states.iter().all(|x| other.contains(x))
    }

    pub fn union(&self, other: &Snapshot) -> Snapshot {
        Snapshot::new(self.states.iter().chain(other.states.iter()).cloned())
    }

    pub fn with<I: IntoIterator<Item = SetValue>>(&self, extra: I) -> Snapshot {
        Snapshot::new(self.states.iter().cloned().chain(extra))
    }

    pub fn to_set(&self) -> BTreeSet<SetValue> {
        self.states.iter().cloned().collect()
    }

    /// States `s` with `θ(s) ∈ A`.
    pub fn count(&self, theta: &RandomVariable, a: &ClassSpec) -> usize {
        self.states
            .iter()
            .filter(|s| a.contains(&theta.apply(s)))
            .count()
    }

    /// Number of states lying in `A` itself.
    pub fn count_in(&self, a: &ClassSpec) -> usize {
        self.states.iter().filter(|s| a.contains(s)).count()
    }

    /// The common mode of the states; `None` for the empty snapshot.
    pub fn mode(&self) -> Result<Option<Mode>> {
        let mut modes = self.states.iter().map(SetValue::mode);
        let Some(first) = modes.next() else {
            return Ok(None);
        };
        if modes.any(|m| m != first) {
            return Err(NapError::MixedModes);
        }
        Ok(Some(first))
    }

    /// Checks every state against the universe.
    pub fn validate(&self, u: &Universe) -> Result<()> {
        self.states.iter().try_for_each(|s| u.validate(s))
    }

    pub fn encode(&self) -> String {
        self.to_string()
    }

    /// Parses `[s₁,…,sₖ]`.
    pub fn decode(text: &str) -> Result<Snapshot> {
        let mut p = Parser::new(text);
        p.expect(b'[')?;
        let states = p.list(b']')?;
        p.finish()?;
        Ok(Snapshot::new(states))
    }
}

impl FromIterator<SetValue> for Snapshot {
    fn from_iter<I: IntoIterator<Item = SetValue>>(iter: I) -> Self {
        Snapshot::new(iter)
    }
}

impl fmt::Display for Snapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.states.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for Snapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `|{s∈T : θ(s)∈A}| / |T|`.
pub fn snapshot_prob(theta: &RandomVariable, a: &ClassSpec, t: &Snapshot) -> Result<Rational> {
    if t.is_empty() {
        return Err(NapError::EmptySnapshot);
    }
    Ok(ratio(t.count(theta, a), t.len()))
}

/// `|{s∈T : θ(s)∈A ∧ ν(s)∈B}| / |T|`.
pub fn joint_snapshot_prob(
    theta: &RandomVariable,
    a: &ClassSpec,
    nu: &RandomVariable,
    b: &ClassSpec,
    t: &Snapshot,
) -> Result<Rational> {
    if t.is_empty() {
        return Err(NapError::EmptySnapshot);
    }
    Ok(ratio(joint_count(theta, a, nu, b, t), t.len()))
}

pub(crate) fn joint_count(
    theta: &RandomVariable,
    a: &ClassSpec,
    nu: &RandomVariable,
    b: &ClassSpec,
    t: &Snapshot,
) -> usize {
    t.states()
        .iter()
        .filter(|s| a.contains(&theta.apply(s)) && b.contains(&nu.apply(s)))
        .count()
}

/// Joint probability divided by the probability of the condition `ν∈B`.
pub fn conditional_snapshot_prob(
    theta: &RandomVariable,
    a: &ClassSpec,
    nu: &RandomVariable,
    b: &ClassSpec,
    t: &Snapshot,
) -> Result<Rational> {
    if t.is_empty() {
        return Err(NapError::EmptySnapshot);
    }
    let cond = t.count(nu, b);
    if cond == 0 {
        return Err(NapError::ConditionNull);
    }
    Ok(ratio(joint_count(theta, a, nu, b, t), cond))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{one, zero};
    use crate::universe::{make_universe, Builtin};

    fn nats(v: &[u64]) -> Snapshot {
        v.iter().map(|n| SetValue::nat(*n)).collect()
    }

    fn classes() -> (ClassSpec, ClassSpec, ClassSpec, ClassSpec) {
        let u = make_universe(Mode::Ordinal, 3).unwrap();
        (
            u.builtin(Builtin::Even).unwrap(),
            u.builtin(Builtin::Odd).unwrap(),
            u.builtin(Builtin::On).unwrap(),
            u.builtin(Builtin::Lim).unwrap(),
        )
    }

    #[test]
    fn counting() {
        let (even, odd, on, lim) = classes();
        let id = RandomVariable::Identity;
        let pi = RandomVariable::invar();
        assert_eq!(
            snapshot_prob(&id, &even, &nats(&[0, 1, 2, 3, 4])).unwrap(),
            ratio(3, 5)
        );
        assert_eq!(
            snapshot_prob(&id, &ClassSpec::universe(), &nats(&[7, 9])).unwrap(),
            one()
        );
        assert_eq!(
            snapshot_prob(&pi, &even, &nats(&[0, 1, 2, 3])).unwrap(),
            ratio(3, 4)
        );
        assert_eq!(
            joint_snapshot_prob(&id, &even, &id, &odd, &nats(&[0, 1, 2])).unwrap(),
            zero()
        );
        assert_eq!(
            joint_snapshot_prob(&id, &even, &pi, &even, &nats(&[0, 1, 2, 3])).unwrap(),
            ratio(2, 4)
        );
        let with_omega = nats(&[0, 1, 2]).with([SetValue::ord(1, 0)]);
        assert_eq!(
            conditional_snapshot_prob(&id, &even, &id, &on, &with_omega).unwrap(),
            ratio(3, 4)
        );
        assert_eq!(
            conditional_snapshot_prob(&id, &even, &id, &lim, &nats(&[0, 1, 2])),
            Err(NapError::ConditionNull)
        );
        assert_eq!(
            snapshot_prob(&id, &even, &Snapshot::default()),
            Err(NapError::EmptySnapshot)
        );
    }

    #[test]
    fn conditioning_on_everything_is_unconditional() {
        let (even, ..) = classes();
        let id = RandomVariable::Identity;
        let t = nats(&[0, 3, 5, 8]).with([SetValue::Pad(1)]);
        assert_eq!(
            conditional_snapshot_prob(&id, &even, &id, &ClassSpec::universe(), &t).unwrap(),
            snapshot_prob(&id, &even, &t).unwrap()
        );
    }

    #[test]
    fn snapshot_text_round_trip() {
        let t = nats(&[3, 1]).with([SetValue::ord(2, 1), SetValue::Pad(0)]);
        assert_eq!(t.encode(), "[1,3,w*2+1,pad0]");
        assert_eq!(Snapshot::decode(&t.encode()).unwrap(), t);
    }

    #[test]
    fn modes_do_not_mix() {
        let t = Snapshot::new([SetValue::nat(0), SetValue::hf(0)]);
        assert_eq!(t.mode(), Err(NapError::MixedModes));
    }
}
