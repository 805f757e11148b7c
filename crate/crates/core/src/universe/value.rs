//! Universe elements: hereditarily finite sets, ordinals below ω², padding
//! urelements and (in ordinal mode) collections of such values.

use std::fmt;
use std::sync::{Arc, OnceLock};

use super::class::ClassSpec;
use super::Mode;

/// A hereditarily finite set with canonically sorted, duplicate-free members.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HfSet(Arc<HfNode>);

#[derive(PartialEq, Eq, PartialOrd, Ord, Hash)]
struct HfNode {
    rank: u32,
    members: Vec<HfSet>,
}

fn ackermann_table() -> &'static [HfSet] {
    static TABLE: OnceLock<Vec<HfSet>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table: Vec<HfSet> = Vec::with_capacity(64);
        for code in 0u64..64 {
            let members = (0..6)
                .filter(|bit| code >> bit & 1 == 1)
                .map(|bit| table[bit].clone());
            table.push(HfSet::from_members(members));
        }
        table
    })
}

impl HfSet {
    pub fn empty() -> Self {
        HfSet(Arc::new(HfNode {
            rank: 0,
            members: Vec::new(),
        }))
    }

    /// Builds `{m₁, …, mₖ}`; order and repetition of the input do not matter.
    pub fn from_members<I: IntoIterator<Item = HfSet>>(members: I) -> Self {
        let mut members: Vec<HfSet> = members.into_iter().collect();
        members.sort();
        members.dedup();
        let rank = members.iter().map(|m| m.rank() + 1).max().unwrap_or(0);
        HfSet(Arc::new(HfNode { rank, members }))
    }

    /// The set whose members are the sets with the Ackermann codes of the one bits of `code`.
    pub fn from_ackermann(code: u64) -> Self {
        let table = ackermann_table();
        if code < 64 {
            return table[code as usize].clone();
        }
        HfSet::from_members(
            (0..64)
                .filter(|bit| code >> bit & 1 == 1)
                .map(|bit| table[bit].clone()),
        )
    }

    /// Ackermann code, when it fits in 64 bits.
    pub fn ackermann(&self) -> Option<u64> {
        let mut code = 0u64;
        for member in self.members() {
            let c = member.ackermann()?;
            if c >= 64 {
                return None;
            }
            code |= 1 << c;
        }
        Some(code)
    }

    /// von Neumann natural number `n = {0, …, n−1}`.
    pub fn von_neumann(n: u32) -> Self {
        let mut current = HfSet::empty();
        for _ in 0..n {
            let mut members = current.members().to_vec();
            members.push(current.clone());
            current = HfSet::from_members(members);
        }
        current
    }

    /// `Some(n)` when this set is the von Neumann natural `n`.
    pub fn as_von_neumann(&self) -> Option<u32> {
        let n = self.members().len() as u32;
        (*self == HfSet::von_neumann(n)).then_some(n)
    }

    pub fn members(&self) -> &[HfSet] {
        &self.0.members
    }

    pub fn len(&self) -> usize {
        self.0.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.members.is_empty()
    }

    pub fn rank(&self) -> u32 {
        self.0.rank
    }

    pub fn contains(&self, x: &HfSet) -> bool {
        self.0.members.binary_search(x).is_ok()
    }

    pub fn is_subset(&self, other: &HfSet) -> bool {
        self.members().iter().all(|m| other.contains(m))
    }
}

impl fmt::Display for HfSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, m) in self.members().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for HfSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The ordinal `ω·omega + finite`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ordinal {
    pub omega: u32,
    pub finite: u64,
}

impl Ordinal {
    pub const ZERO: Ordinal = Ordinal {
        omega: 0,
        finite: 0,
    };
    pub const OMEGA: Ordinal = Ordinal {
        omega: 1,
        finite: 0,
    };

    pub const fn new(omega: u32, finite: u64) -> Self {
        Ordinal { omega, finite }
    }

    pub const fn nat(n: u64) -> Self {
        Ordinal {
            omega: 0,
            finite: n,
        }
    }

    pub fn is_limit(self) -> bool {
        self.omega > 0 && self.finite == 0
    }

    pub fn is_natural(self) -> bool {
        self.omega == 0
    }

    /// Parity of the finite tail; every limit ordinal is even.
    pub fn is_even(self) -> bool {
        self.finite.is_multiple_of(2)
    }
}

/// Ordinal sum; finite tails are absorbed by a right summand with an ω part.
impl std::ops::Add for Ordinal {
    type Output = Ordinal;
    fn add(self, rhs: Ordinal) -> Ordinal {
        if rhs.omega > 0 {
            Ordinal::new(self.omega + rhs.omega, rhs.finite)
        } else {
            Ordinal::new(self.omega, self.finite + rhs.finite)
        }
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.omega, self.finite) {
            (0, b) => write!(f, "{b}"),
            (1, 0) => f.write_str("w"),
            (1, b) => write!(f, "w+{b}"),
            (a, 0) => write!(f, "w*{a}"),
            (a, b) => write!(f, "w*{a}+{b}"),
        }
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A set of ordinal-mode values: explicitly finite, or an infinite member of a
/// power class carried by its intension.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Collection(Arc<CollectionNode>);

#[derive(PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CollectionNode {
    Finite(Vec<SetValue>),
    /// `markers ∪ {eᵢ : i ≥ tag}` where `e₀, e₁, …` enumerates `base`.
    Intensional {
        base: ClassSpec,
        markers: Vec<SetValue>,
        tag: u64,
    },
}

impl Collection {
    pub fn finite<I: IntoIterator<Item = SetValue>>(members: I) -> Self {
        let mut members: Vec<SetValue> = members.into_iter().collect();
        members.sort();
        members.dedup();
        Collection(Arc::new(CollectionNode::Finite(members)))
    }

    pub fn intensional<I: IntoIterator<Item = SetValue>>(
        base: ClassSpec,
        markers: I,
        tag: u64,
    ) -> Self {
        let mut markers: Vec<SetValue> = markers.into_iter().collect();
        markers.sort();
        markers.dedup();
        Collection(Arc::new(CollectionNode::Intensional { base, markers, tag }))
    }

    pub fn node(&self) -> &CollectionNode {
        &self.0
    }
}

impl fmt::Display for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            CollectionNode::Finite(members) => {
                f.write_str("fin[")?;
                write_list(f, members)?;
                f.write_str("]")
            }
            CollectionNode::Intensional { base, markers, tag } => {
                write!(f, "int({base};")?;
                write_list(f, markers)?;
                write!(f, ";{tag})")
            }
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[SetValue]) -> fmt::Result {
    for (i, m) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{m}")?;
    }
    Ok(())
}

/// One element of the desk-scale universe.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SetValue {
    Hf(HfSet),
    Ord(Ordinal),
    /// Non-ordinal padding element of the ordinal-mode universe.
    Pad(u64),
    Coll(Collection),
}

impl SetValue {
    pub fn nat(n: u64) -> Self {
        SetValue::Ord(Ordinal::nat(n))
    }

    pub fn ord(omega: u32, finite: u64) -> Self {
        SetValue::Ord(Ordinal::new(omega, finite))
    }

    pub fn hf(code: u64) -> Self {
        SetValue::Hf(HfSet::from_ackermann(code))
    }

    pub fn mode(&self) -> Mode {
        match self {
            SetValue::Hf(_) => Mode::Hf,
            _ => Mode::Ordinal,
        }
    }

    pub fn as_ordinal(&self) -> Option<Ordinal> {
        match self {
            SetValue::Ord(o) => Some(*o),
            _ => None,
        }
    }

    pub fn as_hf(&self) -> Option<&HfSet> {
        match self {
            SetValue::Hf(s) => Some(s),
            _ => None,
        }
    }

    /// Canonical text code; two values are equal iff their codes are identical.
    pub fn encode(&self) -> String {
        self.to_string()
    }

    pub fn decode(code: &str) -> crate::Result<Self> {
        crate::text::parse_value(code)
    }
}

impl fmt::Display for SetValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetValue::Hf(s) => write!(f, "{s}"),
            SetValue::Ord(o) => write!(f, "{o}"),
            SetValue::Pad(i) => write!(f, "pad{i}"),
            SetValue::Coll(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Debug for SetValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<Ordinal> for SetValue {
    fn from(o: Ordinal) -> Self {
        SetValue::Ord(o)
    }
}

impl From<HfSet> for SetValue {
    fn from(s: HfSet) -> Self {
        SetValue::Hf(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ackermann_round_trip() {
        for code in 0..4096u64 {
            assert_eq!(HfSet::from_ackermann(code).ackermann(), Some(code));
        }
    }

    #[test]
    fn small_ranks() {
        let empty = HfSet::empty();
        let one = HfSet::from_members([empty.clone()]);
        let two = HfSet::from_members([one.clone(), empty.clone()]);
        assert_eq!(empty.rank(), 0);
        assert_eq!(one.rank(), 1);
        assert_eq!(two.rank(), 2);
        assert_eq!(two, HfSet::von_neumann(2));
        assert_eq!(two.to_string(), "{{},{{}}}");
    }

    #[test]
    fn ordinal_addition_is_not_commutative() {
        let one = Ordinal::nat(1);
        assert_eq!(one + Ordinal::OMEGA, Ordinal::OMEGA);
        assert_eq!(Ordinal::OMEGA + one, Ordinal::new(1, 1));
        assert_eq!((Ordinal::OMEGA + Ordinal::nat(2)).to_string(), "w+2");
        assert_eq!(Ordinal::new(2, 3) + Ordinal::new(1, 0), Ordinal::new(3, 0));
    }

    #[test]
    fn limits_are_even() {
        assert!(Ordinal::OMEGA.is_limit());
        assert!(Ordinal::OMEGA.is_even());
        assert!(!Ordinal::ZERO.is_limit());
    }
}
