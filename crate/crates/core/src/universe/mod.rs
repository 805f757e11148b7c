//! The desk-scale universe: hereditarily finite sets or ordinals below ω·m
//! with padding urelements, built-in classes and random variables.

pub mod class;
pub mod rv;
pub mod value;

use rand::Rng;

pub use class::{subset, CardinalityTier, ClassExpr, ClassSpec};
pub use rv::{Permutation, RandomVariable, TableDefault};
pub use value::{Collection, CollectionNode, HfSet, Ordinal, SetValue};

use crate::error::{NapError, Result};

/// Bound used when an intensional value is interpreted outside any universe.
pub const INTENSION_BOUND: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Hereditarily finite sets of rank below the bound.
    Hf,
    /// Ordinals below ω·bound plus padding urelements.
    Ordinal,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Hf => "hf",
            Mode::Ordinal => "ordinal",
        })
    }
}

/// Names accepted by [`Universe::builtin`].
#[derive(Clone, Debug)]
pub enum Builtin {
    Universe,
    On,
    Naturals,
    Even,
    Odd,
    Lim,
    NonOrdinals,
    RankLevel(u32),
    PowerClass(ClassSpec),
    FiniteSubsets(ClassSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Universe {
    mode: Mode,
    bound: u32,
}

/// Checks the bound and returns the universe handle.
pub fn make_universe(mode: Mode, bound: u32) -> Result<Universe> {
    Universe::new(mode, bound)
}

impl Universe {
    pub fn new(mode: Mode, bound: u32) -> Result<Self> {
        let minimum = match mode {
            Mode::Hf => 3,
            Mode::Ordinal => 1,
        };
        if bound < minimum {
            return Err(NapError::BoundTooSmall {
                mode: if mode == Mode::Hf { "hf" } else { "ordinal" },
                bound,
                minimum,
            });
        }
        Ok(Universe { mode, bound })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Rank bound (HF) or ω-multiple bound (ordinal).
    pub fn bound(&self) -> u32 {
        self.bound
    }

    /// `|V_n|`, when it fits in a `u64`.
    pub fn level_size(n: u32) -> Option<u64> {
        let mut size = 0u64;
        for _ in 0..n {
            if size >= 64 {
                return None;
            }
            size = 1u64 << size;
        }
        Some(size)
    }

    /// Number of elements, when finite and representable.
    pub fn exact_size(&self) -> Option<u64> {
        match self.mode {
            Mode::Hf => Universe::level_size(self.bound),
            Mode::Ordinal => None,
        }
    }

    pub(crate) fn size_cap(&self) -> u64 {
        self.exact_size().unwrap_or(u64::MAX)
    }

    pub(crate) fn default_for(_class: &ClassSpec) -> Universe {
        Universe {
            mode: Mode::Ordinal,
            bound: INTENSION_BOUND,
        }
    }

    pub(crate) fn for_value(x: &SetValue) -> Universe {
        match x {
            SetValue::Hf(s) => Universe {
                mode: Mode::Hf,
                bound: (s.rank() + 1).max(3),
            },
            _ => Universe {
                mode: Mode::Ordinal,
                bound: INTENSION_BOUND,
            },
        }
    }

    /// Whether `x` is an element of this universe.
    pub fn contains(&self, x: &SetValue) -> bool {
        match (self.mode, x) {
            (Mode::Hf, SetValue::Hf(s)) => s.rank() < self.bound,
            (Mode::Ordinal, SetValue::Ord(o)) => o.omega < self.bound,
            (Mode::Ordinal, SetValue::Pad(_)) => true,
            (Mode::Ordinal, SetValue::Coll(c)) => match c.node() {
                CollectionNode::Finite(v) => v.iter().all(|m| self.contains(m)),
                CollectionNode::Intensional { markers, .. } => {
                    markers.iter().all(|m| self.contains(m))
                }
            },
            _ => false,
        }
    }

    /// Checks that `x` belongs here, distinguishing mode mixing from range errors.
    pub fn validate(&self, x: &SetValue) -> Result<()> {
        if x.mode() != self.mode {
            return Err(NapError::MixedModes);
        }
        if self.contains(x) {
            Ok(())
        } else {
            Err(NapError::Window(format!(
                "{x} lies outside the {} universe with bound {}",
                self.mode, self.bound
            )))
        }
    }

    /// von Neumann rank of an HF value.
    pub fn rank(&self, x: &SetValue) -> Result<u32> {
        rank(x)
    }

    pub fn builtin(&self, name: Builtin) -> Result<ClassSpec> {
        let hf_only = |op| {
            if self.mode == Mode::Hf {
                Ok(())
            } else {
                Err(NapError::WrongMode { op })
            }
        };
        let ord_only = |op| {
            if self.mode == Mode::Ordinal {
                Ok(())
            } else {
                Err(NapError::WrongMode { op })
            }
        };
        let class = match name {
            Builtin::Universe => ClassSpec::universe(),
            Builtin::On => ClassSpec::new(ClassExpr::Ordinals),
            Builtin::Naturals => ClassSpec::new(ClassExpr::Naturals),
            Builtin::Even => ClassSpec::new(ClassExpr::Even),
            Builtin::Odd => ClassSpec::new(ClassExpr::Odd),
            Builtin::Lim => {
                ord_only("Lim")?;
                ClassSpec::new(ClassExpr::Lim)
            }
            Builtin::NonOrdinals => ClassSpec::new(ClassExpr::NonOrdinals),
            Builtin::RankLevel(a) => {
                hf_only("RankLevel")?;
                ClassSpec::new(ClassExpr::RankLevel(a))
            }
            Builtin::PowerClass(a) => a.power(),
            Builtin::FiniteSubsets(a) => ClassSpec::new(ClassExpr::FiniteSubsets(a)),
        };
        Ok(match (self.mode, class.expr()) {
            // Over a bounded HF universe the ordinal classes are finite.
            (Mode::Hf, ClassExpr::Ordinals | ClassExpr::Naturals) => {
                class.with_tier(CardinalityTier::Finite(u64::from(self.bound)))
            }
            (Mode::Hf, ClassExpr::Even) => {
                class.with_tier(CardinalityTier::Finite(u64::from(self.bound.div_ceil(2))))
            }
            (Mode::Hf, ClassExpr::Odd) => {
                class.with_tier(CardinalityTier::Finite(u64::from(self.bound / 2)))
            }
            (Mode::Ordinal, ClassExpr::Lim) if self.bound == 1 => {
                class.with_tier(CardinalityTier::Finite(0))
            }
            _ => class,
        })
    }

    pub fn invar_permutation(&self) -> Result<RandomVariable> {
        if self.mode != Mode::Ordinal {
            return Err(NapError::WrongMode {
                op: "invar_permutation",
            });
        }
        Ok(invar_permutation())
    }

    /// `A ⊕ α = {γ + α : γ ∈ A}`.
    pub fn translate_class(&self, a: &ClassSpec, alpha: Ordinal) -> Result<ClassSpec> {
        if self.mode != Mode::Ordinal {
            return Err(NapError::WrongMode {
                op: "translate_class",
            });
        }
        if alpha.omega >= self.bound {
            return Err(NapError::Window(format!(
                "{alpha} exceeds the ordinal bound"
            )));
        }
        Ok(translate_class(a, alpha))
    }

    /// Enumerates the universe itself.
    pub fn elements(&self) -> impl Iterator<Item = SetValue> + '_ {
        static UNIVERSE: std::sync::OnceLock<ClassSpec> = std::sync::OnceLock::new();
        UNIVERSE.get_or_init(ClassSpec::universe).iter(self)
    }

    /// A uniformly drawn element from a window of the universe: HF codes below
    /// `min(|V_bound|, 2^16)`, or ordinals `ω·a + b` with `b < spread` and pads below `spread`.
    pub fn sample_element<R: Rng + ?Sized>(&self, rng: &mut R, spread: u64) -> SetValue {
        match self.mode {
            Mode::Hf => SetValue::hf(rng.gen_range(0..self.size_cap().min(1 << 16))),
            Mode::Ordinal => {
                let spread = spread.max(1);
                if rng.gen_range(0..4) == 0 {
                    SetValue::Pad(rng.gen_range(0..spread))
                } else {
                    SetValue::ord(rng.gen_range(0..self.bound), rng.gen_range(0..spread))
                }
            }
        }
    }
}

/// von Neumann rank of an HF value.
pub fn rank(x: &SetValue) -> Result<u32> {
    match x {
        SetValue::Hf(s) => Ok(s.rank()),
        _ => Err(NapError::WrongMode { op: "rank" }),
    }
}

/// The permutation of the naturals that shifts evens up by two and odds down by two.
pub fn invar_permutation() -> RandomVariable {
    RandomVariable::invar()
}

pub fn translate_class(a: &ClassSpec, alpha: Ordinal) -> ClassSpec {
    if alpha == Ordinal::ZERO {
        return a.clone();
    }
    ClassSpec::new(ClassExpr::Translate(a.clone(), alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn bounds_are_checked() {
        assert!(make_universe(Mode::Hf, 2).is_err());
        assert!(make_universe(Mode::Hf, 3).is_ok());
        assert!(make_universe(Mode::Ordinal, 0).is_err());
        assert!(make_universe(Mode::Ordinal, 1).is_ok());
    }

    #[test]
    fn hf_rank_four_has_sixteen_elements() {
        let u = make_universe(Mode::Hf, 4).unwrap();
        let all: Vec<SetValue> = u.elements().collect();
        assert_eq!(all.len(), 16);
        let distinct: BTreeSet<&SetValue> = all.iter().collect();
        assert_eq!(distinct.len(), 16);
        for x in &all {
            assert_eq!(SetValue::decode(&x.encode()).unwrap(), *x);
        }
    }

    #[test]
    fn level_sizes_follow_the_tower() {
        let sizes: Vec<Option<u64>> = (0..7).map(Universe::level_size).collect();
        assert_eq!(
            sizes,
            vec![
                Some(0),
                Some(1),
                Some(2),
                Some(4),
                Some(16),
                Some(65536),
                None
            ]
        );
    }

    #[test]
    fn ranks() {
        let empty = HfSet::empty();
        let one = HfSet::from_members([empty.clone()]);
        let two = HfSet::from_members([one.clone(), empty]);
        assert_eq!(rank(&two.into()).unwrap(), 2);
        assert!(rank(&SetValue::nat(3)).is_err());
    }

    #[test]
    fn lim_below_omega_three() {
        let u = make_universe(Mode::Ordinal, 3).unwrap();
        let lim = u.builtin(Builtin::Lim).unwrap();
        let got: Vec<SetValue> = lim.iter(&u).collect();
        assert_eq!(got, vec![SetValue::ord(1, 0), SetValue::ord(2, 0)]);
        let finite = make_universe(Mode::Ordinal, 1).unwrap();
        assert_eq!(
            finite.builtin(Builtin::Lim).unwrap().iter(&finite).count(),
            0
        );
    }

    #[test]
    fn parity_builtins() {
        let u = make_universe(Mode::Ordinal, 2).unwrap();
        let even = u.builtin(Builtin::Even).unwrap();
        assert!(even.contains(&SetValue::nat(4)));
        assert!(!even.contains(&SetValue::nat(3)));
        assert!(even.contains(&SetValue::ord(1, 0)));
        assert!(u.builtin(Builtin::RankLevel(2)).is_err());
    }

    #[test]
    fn translation_by_one_drops_zero() {
        let u = make_universe(Mode::Ordinal, 2).unwrap();
        let nat = u.builtin(Builtin::Naturals).unwrap();
        let shifted = u.translate_class(&nat, Ordinal::nat(1)).unwrap();
        assert!(!shifted.contains(&SetValue::nat(0)));
        assert!(shifted.contains(&SetValue::nat(1)));
        assert_eq!(subset(&shifted, &nat, Some(&u)), Some(true));
        assert_eq!(subset(&nat, &shifted, Some(&u)), Some(false));
        let omega = ClassSpec::finite([SetValue::ord(1, 0)]);
        let t = u.translate_class(&omega, Ordinal::nat(2)).unwrap();
        assert_eq!(t.iter(&u).collect::<Vec<_>>(), vec![SetValue::ord(1, 2)]);
        assert_eq!(u.translate_class(&nat, Ordinal::ZERO).unwrap(), nat);
    }

    #[test]
    fn enumeration_skips_exclusions() {
        let u = make_universe(Mode::Ordinal, 2).unwrap();
        let even = u.builtin(Builtin::Even).unwrap();
        let excl: BTreeSet<SetValue> = [SetValue::nat(0), SetValue::ord(1, 0)]
            .into_iter()
            .collect();
        let got = even.take_fresh(&u, &excl, 3).unwrap();
        assert_eq!(
            got,
            vec![SetValue::nat(2), SetValue::ord(1, 2), SetValue::nat(4)]
        );
    }

    #[test]
    fn finite_tiers_enumerate_exactly() {
        let u = make_universe(Mode::Hf, 4).unwrap();
        for a in 1..=4 {
            let level = u.builtin(Builtin::RankLevel(a)).unwrap();
            let CardinalityTier::Finite(n) = level.tier() else {
                panic!()
            };
            assert_eq!(level.iter(&u).count() as u64, n);
            assert!(level.iter(&u).all(|x| level.contains(&x)));
        }
        let p = u
            .builtin(Builtin::PowerClass(ClassSpec::members_of(
                &HfSet::von_neumann(3),
            )))
            .unwrap();
        assert_eq!(p.iter(&u).count(), 8);
    }

    #[test]
    fn tier_order() {
        use CardinalityTier::*;
        assert!(Finite(3) < Finite(4));
        assert!(Finite(u64::MAX) < Tier(0));
        assert!(Tier(0) < Tier(1));
        assert!(Tier(9) < ProperClass);
        assert_eq!(Tier(0).successor(), Tier(1));
    }
}
