use std::collections::BTreeMap;

use proptest::prelude::*;

use nap_core::bootstrap::{lattice_base, restrict_base, Frame, Mask, TierConfig, TieredProb};
use nap_core::filter::{check_fip, fineness_base, superreg_witness, Budget, Constraint, RatioPair};
use nap_core::germ::{germ_arith, germ_of_event, star_sum_germs, ArithOp, Germ};
use nap_core::rational::{one, ratio, zero};
use nap_core::snapshot::{snapshot_prob, Snapshot};
use nap_core::universe::{
    make_universe, Builtin, ClassExpr, ClassSpec, Mode, RandomVariable, SetValue,
};

fn value() -> impl Strategy<Value = SetValue> {
    prop_oneof![
        (0u32..3, 0u64..12).prop_map(|(w, n)| SetValue::ord(w, n)),
        (0u64..4).prop_map(SetValue::Pad),
    ]
}

fn hf_value() -> impl Strategy<Value = SetValue> {
    (0u64..65536).prop_map(SetValue::hf)
}

fn snapshot() -> impl Strategy<Value = Snapshot> {
    prop::collection::btree_set(value(), 1..10).prop_map(Snapshot::new)
}

fn finite_class() -> impl Strategy<Value = Vec<SetValue>> {
    prop::collection::vec(value(), 0..6)
}

fn event(a: &[SetValue]) -> Germ {
    germ_of_event(
        &RandomVariable::Identity,
        &ClassSpec::finite(a.iter().cloned()),
    )
}

fn germ() -> impl Strategy<Value = Germ> {
    let leaf = prop_oneof![
        finite_class().prop_map(|a| event(&a)),
        (0usize..5, 1usize..5).prop_map(|(p, q)| Germ::Const(ratio(p, q))),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (inner.clone(), inner, 0usize..3).prop_map(|(l, r, op)| {
            germ_arith([ArithOp::Add, ArithOp::Sub, ArithOp::Mul][op], &l, &r)
        })
    })
}

fn same_where_defined(l: &Germ, r: &Germ, t: &Snapshot) -> bool {
    match (l.eval(t), r.eval(t)) {
        (Ok(a), Ok(b)) => a == b,
        _ => true,
    }
}

proptest! {
    #[test]
    fn values_round_trip(x in prop_oneof![value(), hf_value()]) {
        prop_assert_eq!(SetValue::decode(&x.encode()).unwrap(), x);
    }

    #[test]
    fn snapshots_round_trip(t in snapshot()) {
        prop_assert_eq!(Snapshot::decode(&t.encode()).unwrap(), t);
    }

    #[test]
    fn invar_is_injective_on_windows(m in 1u64..40) {
        let pi = RandomVariable::invar();
        let window: Vec<SetValue> = (0..=2 * m + 1).map(SetValue::nat).collect();
        let mut images: Vec<SetValue> = window.iter().map(|x| pi.apply(x)).collect();
        images.sort();
        images.dedup();
        prop_assert_eq!(images.len(), window.len());
    }

    #[test]
    fn invar_shrinks_even(y in 0u64..200) {
        let u = make_universe(Mode::Ordinal, 3).unwrap();
        let even = u.builtin(Builtin::Even).unwrap();
        let moved = even.image(&RandomVariable::invar());
        let x = SetValue::nat(2 * y);
        prop_assert_eq!(moved.contains(&x), y > 0);
    }

    #[test]
    fn probabilities_are_monotone_and_bounded(a in finite_class(), extra in finite_class(), t in snapshot()) {
        let id = RandomVariable::Identity;
        let small = ClassSpec::finite(a.iter().cloned());
        let big = ClassSpec::finite(a.iter().chain(&extra).cloned());
        let (p, q) = (snapshot_prob(&id, &small, &t).unwrap(), snapshot_prob(&id, &big, &t).unwrap());
        prop_assert!(zero() <= p && p <= q && q <= one());
        prop_assert_eq!(snapshot_prob(&id, &ClassSpec::universe(), &t).unwrap(), one());
        prop_assert_eq!(snapshot_prob(&id, &ClassSpec::empty(), &t).unwrap(), zero());
        let gained = extra.iter().any(|x| t.contains(x) && !a.contains(x));
        prop_assert_eq!(p < q, gained);
    }

    #[test]
    fn field_laws_hold_pointwise(x in germ(), y in germ(), z in germ(), t in snapshot()) {
        let add = |a: &Germ, b: &Germ| germ_arith(ArithOp::Add, a, b);
        let mul = |a: &Germ, b: &Germ| germ_arith(ArithOp::Mul, a, b);
        prop_assert!(same_where_defined(&add(&x, &y), &add(&y, &x), &t));
        prop_assert!(same_where_defined(&mul(&x, &y), &mul(&y, &x), &t));
        prop_assert!(same_where_defined(&add(&add(&x, &y), &z), &add(&x, &add(&y, &z)), &t));
        prop_assert!(same_where_defined(&mul(&mul(&x, &y), &z), &mul(&x, &mul(&y, &z)), &t));
        prop_assert!(same_where_defined(&mul(&x, &add(&y, &z)), &add(&mul(&x, &y), &mul(&x, &z)), &t));
    }

    #[test]
    fn finite_partitions_are_perfectly_additive(
        labels in prop::collection::btree_map(value(), 0usize..4, 0..12),
        t in snapshot(),
    ) {
        let mut blocks: BTreeMap<usize, Vec<SetValue>> = BTreeMap::new();
        for (x, i) in &labels {
            blocks.entry(*i).or_default().push(x.clone());
        }
        let index: Vec<SetValue> = blocks.keys().map(|i| SetValue::Pad(*i as u64 + 10)).collect();
        let sum = star_sum_germs(index.iter().cloned().zip(blocks.values().map(|b| event(b))));
        let whole = event(&labels.keys().cloned().collect::<Vec<_>>());
        let t = t.with(index);
        prop_assert_eq!(sum.eval(&t).unwrap(), whole.eval(&t).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn superregular_witnesses_satisfy_their_constraints(
        pins in prop::collection::vec(value(), 0..5),
        picks in prop::collection::vec((0usize..4, 0usize..3, 1u64..5), 1..4),
    ) {
        let u = make_universe(Mode::Ordinal, 3).unwrap();
        let small = [Builtin::Naturals, Builtin::Even, Builtin::Odd, Builtin::Lim].map(|b| u.builtin(b).unwrap());
        let large = [
            ClassSpec::new(ClassExpr::Pads { modulus: 1, residue: 0 }),
            ClassSpec::new(ClassExpr::NonOrdinals),
            ClassSpec::universe(),
        ];
        let pairs: Vec<RatioPair> = picks.iter().map(|(a, b, n)| RatioPair::new(&small[*a], &large[*b], *n)).collect();
        let f = superreg_witness(&u, &pins, &pairs).unwrap();
        for p in &pairs {
            prop_assert!(p.constraint().contains(&f).unwrap());
        }
        for x in &pins {
            prop_assert!(f.contains(x));
        }
    }

    #[test]
    fn one_side_of_every_order_question_stays_consistent(
        base in prop::collection::vec((finite_class(), finite_class()), 0..3),
        a in finite_class(),
        b in finite_class(),
        seed in 0u64..1000,
    ) {
        let u = make_universe(Mode::Ordinal, 3).unwrap();
        let budget = Budget::default();
        let mut fb = fineness_base(None);
        for (x, y) in base {
            let c = Constraint::OrderGe(ClassSpec::finite(x), ClassSpec::finite(y));
            if check_fip(&fb.with(c.clone()), &u, &budget, seed).is_witnessed() {
                fb.push(c);
            }
        }
        let (a, b) = (ClassSpec::finite(a), ClassSpec::finite(b));
        let lt = check_fip(&fb.with(Constraint::OrderLt(a.clone(), b.clone())), &u, &budget, seed);
        let ge = check_fip(&fb.with(Constraint::OrderGe(a, b)), &u, &budget, seed);
        prop_assert!(lt.is_witnessed() || ge.is_witnessed());
    }
}

const CANDIDATES: [Mask; 10] = [
    0x7fff, 0x00ff, 0x0ff0, 0xff00, 0x03ff, 0x001f, 0x003f, 0x01f0, 0x1f00, 0xf800,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn restricting_in_steps_matches_restricting_once(chosen in prop::sample::subsequence(CANDIDATES.to_vec(), 3..=10)) {
        let cfg = TierConfig::new(vec![5, 7, 11, 17]).unwrap();
        let frame = Frame::new(cfg, &Snapshot::new((0..16).map(SetValue::nat))).unwrap();
        let fb = lattice_base(&frame, &chosen).unwrap();
        let tp = TieredProb::new(frame.clone(), &fb).unwrap();
        for &s in &chosen {
            for &m in chosen.iter().filter(|m| **m & !s == 0 && **m != s && frame.tier(**m) < frame.tier(s)) {
                let via = restrict_base(&frame, &tp.restricted(s).unwrap(), m).unwrap();
                for &t in chosen.iter().filter(|t| **t & !m == 0 && **t != m && frame.tier(**t) < frame.tier(m)) {
                    prop_assert_eq!(restrict_base(&frame, &via, t).unwrap(), (*tp.restricted(t).unwrap()).clone());
                }
            }
        }
    }
}
