//! Random variables: maps from states to outcomes.

use std::collections::BTreeMap;
use std::fmt;

use super::value::{Ordinal, SetValue};
use crate::error::{NapError, Result};

/// A bijection of the universe.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Permutation {
    /// Identity off ℕ; `x ↦ x+2` for even x; `1 ↦ 0`; `x ↦ x−2` for odd x > 1.
    Invar,
    /// A finite permutation of its support; identity elsewhere.
    Finite(BTreeMap<SetValue, SetValue>),
}

/// Default of a lookup table outside its explicit entries.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TableDefault {
    Identity,
    Constant(SetValue),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RandomVariable {
    Identity,
    Diagonal(Permutation),
    Table {
        entries: BTreeMap<SetValue, SetValue>,
        default: TableDefault,
    },
}

impl Permutation {
    /// Validates that `map` permutes its own key set.
    pub fn finite(map: BTreeMap<SetValue, SetValue>) -> Result<Self> {
        let mut image: Vec<&SetValue> = map.values().collect();
        image.sort();
        image.dedup();
        if image.len() != map.len() || image.iter().any(|v| !map.contains_key(*v)) {
            return Err(NapError::NotBijective(
                "finite permutation must map its support onto itself".into(),
            ));
        }
        Ok(Permutation::Finite(map))
    }

    pub fn apply(&self, x: &SetValue) -> SetValue {
        match self {
            Permutation::Invar => match x {
                SetValue::Ord(o) if o.is_natural() => {
                    let n = o.finite;
                    let image = if n % 2 == 0 {
                        n + 2
                    } else if n == 1 {
                        0
                    } else {
                        n - 2
                    };
                    SetValue::Ord(Ordinal::nat(image))
                }
                _ => x.clone(),
            },
            Permutation::Finite(map) => map.get(x).cloned().unwrap_or_else(|| x.clone()),
        }
    }

    pub fn inverse(&self, y: &SetValue) -> SetValue {
        match self {
            Permutation::Invar => match y {
                SetValue::Ord(o) if o.is_natural() => {
                    let n = o.finite;
                    let pre = if n == 0 {
                        1
                    } else if n % 2 == 0 {
                        n - 2
                    } else {
                        n + 2
                    };
                    SetValue::Ord(Ordinal::nat(pre))
                }
                _ => y.clone(),
            },
            Permutation::Finite(map) => map
                .iter()
                .find(|(_, v)| *v == y)
                .map(|(k, _)| k.clone())
                .unwrap_or_else(|| y.clone()),
        }
    }
}

impl RandomVariable {
    pub fn invar() -> Self {
        RandomVariable::Diagonal(Permutation::Invar)
    }

    pub fn permutation(map: BTreeMap<SetValue, SetValue>) -> Result<Self> {
        Ok(RandomVariable::Diagonal(Permutation::finite(map)?))
    }

    pub fn apply(&self, state: &SetValue) -> SetValue {
        match self {
            RandomVariable::Identity => state.clone(),
            RandomVariable::Diagonal(p) => p.apply(state),
            RandomVariable::Table { entries, default } => match entries.get(state) {
                Some(v) => v.clone(),
                None => match default {
                    TableDefault::Identity => state.clone(),
                    TableDefault::Constant(c) => c.clone(),
                },
            },
        }
    }

    /// Whether the variable takes every value exactly once.
    pub fn is_diagonal(&self) -> bool {
        match self {
            RandomVariable::Identity | RandomVariable::Diagonal(_) => true,
            RandomVariable::Table { entries, default } => {
                matches!(default, TableDefault::Identity)
                    && Permutation::finite(entries.clone()).is_ok()
            }
        }
    }

    /// The unique state mapped to `y`, for diagonal variables.
    pub fn preimage(&self, y: &SetValue) -> Option<SetValue> {
        match self {
            RandomVariable::Identity => Some(y.clone()),
            RandomVariable::Diagonal(p) => Some(p.inverse(y)),
            RandomVariable::Table { entries, default } => {
                let mut hits = entries
                    .iter()
                    .filter(|(_, v)| *v == y)
                    .map(|(k, _)| k.clone());
                let first = hits.next();
                if hits.next().is_some() {
                    return None;
                }
                match default {
                    TableDefault::Identity if !entries.contains_key(y) => {
                        if first.is_some() {
                            None
                        } else {
                            Some(y.clone())
                        }
                    }
                    TableDefault::Constant(c) if c == y => None,
                    _ => first,
                }
            }
        }
    }

    /// Checks the diagonal property on a finite window: injective on `window`,
    /// and every window element has a preimage that maps back onto it.
    pub fn check_diagonal_on(&self, window: &[SetValue]) -> bool {
        let mut images: Vec<SetValue> = window.iter().map(|s| self.apply(s)).collect();
        images.sort();
        let injective = images.windows(2).all(|w| w[0] != w[1]);
        injective
            && window
                .iter()
                .all(|y| self.preimage(y).is_some_and(|p| self.apply(&p) == *y))
    }
}

impl fmt::Display for RandomVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RandomVariable::Identity => f.write_str("id"),
            RandomVariable::Diagonal(Permutation::Invar) => f.write_str("invar"),
            RandomVariable::Diagonal(Permutation::Finite(map)) => {
                f.write_str("perm[")?;
                write_entries(f, map)?;
                f.write_str("]")
            }
            RandomVariable::Table { entries, default } => {
                f.write_str("table[")?;
                write_entries(f, entries)?;
                match default {
                    TableDefault::Identity => f.write_str(";id]"),
                    TableDefault::Constant(c) => write!(f, ";{c}]"),
                }
            }
        }
    }
}

impl fmt::Debug for RandomVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn write_entries(f: &mut fmt::Formatter<'_>, map: &BTreeMap<SetValue, SetValue>) -> fmt::Result {
    for (i, (k, v)) in map.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{k}->{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invar_values() {
        let pi = RandomVariable::invar();
        assert_eq!(pi.apply(&SetValue::nat(0)), SetValue::nat(2));
        assert_eq!(pi.apply(&SetValue::nat(1)), SetValue::nat(0));
        assert_eq!(pi.apply(&SetValue::nat(7)), SetValue::nat(5));
        assert_eq!(pi.apply(&SetValue::ord(1, 0)), SetValue::ord(1, 0));
    }

    #[test]
    fn invar_is_bijective_on_windows() {
        let pi = RandomVariable::invar();
        for m in 0..20u64 {
            let window: Vec<SetValue> = (0..=2 * m + 1).map(SetValue::nat).collect();
            assert!(pi.check_diagonal_on(&window));
            for y in &window {
                assert_eq!(pi.apply(&pi.preimage(y).unwrap()), *y);
            }
        }
    }

    #[test]
    fn tables_with_collisions_are_not_diagonal() {
        let mut entries = BTreeMap::new();
        entries.insert(SetValue::nat(0), SetValue::nat(1));
        let rv = RandomVariable::Table {
            entries,
            default: TableDefault::Identity,
        };
        assert!(!rv.is_diagonal());
        assert_eq!(rv.preimage(&SetValue::nat(1)), None);
        assert_eq!(rv.preimage(&SetValue::nat(0)), None);
    }

    #[test]
    fn finite_permutation_must_be_closed() {
        let mut map = BTreeMap::new();
        map.insert(SetValue::nat(0), SetValue::nat(1));
        assert!(Permutation::finite(map.clone()).is_err());
        map.insert(SetValue::nat(1), SetValue::nat(0));
        assert!(Permutation::finite(map).is_ok());
    }
}
