//! End-to-end acceptance run: one line per criterion, exact comparisons only.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nap_core::bootstrap::{
    audit_base, coherence_check, lattice_base, non_restriction_counterexample, restrict_base,
    AuditBudget, CoherenceBudget, Frame, Mask, TierConfig, TieredProb,
};
use nap_core::filter::powerset::{level_pairs, lift_judgement, power_depth};
use nap_core::filter::{
    check_fip, fineness_base, lift, ordinal_witness, powerset_prefilter_stage,
    powerset_witness_extend, superreg_witness, Budget, Constraint, Family, FilterBase, OrdinalSpec,
    PowerOrder, RatioPair,
};
use nap_core::germ::{germ_arith, germ_of_event, star_sum_germs, ArithOp, Germ};
use nap_core::rational::{ratio, recip, zero};
use nap_core::snapshot::Snapshot;
use nap_core::universe::{
    make_universe, Builtin, ClassExpr, ClassSpec, HfSet, Mode, Ordinal, RandomVariable, SetValue,
    Universe,
};
use nap_core::verdict::{
    audit, classify_infinitesimal, compare, CompareBudget, Infinitesimal, Justification, Relation,
    Rule,
};
use nap_core::{NapError, Rational};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Justifications collected from every criterion for the final audit.
type Forced = Vec<(Mode, String, Justification)>;

fn id() -> RandomVariable {
    RandomVariable::Identity
}

/// Independent count of `|A ∩ T| / |T|` for an explicit finite `A`.
fn oracle_pr(a: &[SetValue], t: &Snapshot) -> Rational {
    ratio(t.states().iter().filter(|s| a.contains(s)).count(), t.len())
}

fn pick_subset<R: Rng>(rng: &mut R, pool: &[SetValue], max: usize) -> Vec<SetValue> {
    let k = rng.gen_range(0..=max.min(pool.len()));
    pool.choose_multiple(rng, k).cloned().collect()
}

fn ordinal_pool() -> Vec<SetValue> {
    let mut pool: Vec<SetValue> = (0..3)
        .flat_map(|w| (0..8).map(move |n| SetValue::ord(w, n)))
        .collect();
    pool.extend((0..4).map(SetValue::Pad));
    pool
}

fn hf_pool<R: Rng>(rng: &mut R) -> Vec<SetValue> {
    let mut pool: Vec<SetValue> = (0..24)
        .map(|_| SetValue::hf(rng.gen_range(0..65536)))
        .collect();
    pool.sort();
    pool.dedup();
    pool
}

/// A random expression over events of explicit finite classes, with its oracle value.
enum Tree {
    Const(Rational),
    Event(Vec<SetValue>),
    Op(ArithOp, Box<Tree>, Box<Tree>),
}

impl Tree {
    fn random<R: Rng>(rng: &mut R, pool: &[SetValue], depth: u32) -> Tree {
        if depth == 0 || rng.gen_bool(0.3) {
            if rng.gen_bool(0.3) {
                Tree::Const(ratio(rng.gen_range(0..7), rng.gen_range(1..7)))
            } else {
                Tree::Event(pick_subset(rng, pool, 6))
            }
        } else {
            let op = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div][rng.gen_range(0..4)];
            Tree::Op(
                op,
                Box::new(Tree::random(rng, pool, depth - 1)),
                Box::new(Tree::random(rng, pool, depth - 1)),
            )
        }
    }

    fn germ(&self) -> Germ {
        match self {
            Tree::Const(q) => Germ::Const(q.clone()),
            Tree::Event(a) => germ_of_event(&id(), &ClassSpec::finite(a.clone())),
            Tree::Op(op, l, r) => germ_arith(*op, &l.germ(), &r.germ()),
        }
    }

    fn oracle(&self, t: &Snapshot) -> Option<Rational> {
        Some(match self {
            Tree::Const(q) => q.clone(),
            Tree::Event(a) => oracle_pr(a, t),
            Tree::Op(op, l, r) => {
                let (a, b) = (l.oracle(t)?, r.oracle(t)?);
                match op {
                    ArithOp::Add => a + b,
                    ArithOp::Sub => a - b,
                    ArithOp::Mul => a * b,
                    ArithOp::Div => {
                        if b == zero() {
                            return None;
                        }
                        a / b
                    }
                }
            }
        })
    }
}

fn random_snapshot<R: Rng>(rng: &mut R, pool: &[SetValue]) -> Snapshot {
    let k = rng.gen_range(1..=pool.len().min(10));
    Snapshot::new(pool.choose_multiple(rng, k).cloned())
}

fn finite_additivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = 0;
    for case in 0..1000 {
        let pool = if case % 2 == 0 {
            ordinal_pool()
        } else {
            hf_pool(&mut rng)
        };
        let t = random_snapshot(&mut rng, &pool);
        if case % 4 < 2 {
            // disjoint pair: Pr(A ∪ B) = Pr(A) + Pr(B)
            let mut shuffled = pool.clone();
            shuffled.shuffle(&mut rng);
            let cut = rng.gen_range(0..=shuffled.len() / 2);
            let a: Vec<SetValue> = shuffled[..cut].to_vec();
            let b: Vec<SetValue> = shuffled[cut..]
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .cloned()
                .collect();
            let (ca, cb) = (ClassSpec::finite(a.clone()), ClassSpec::finite(b.clone()));
            let union = germ_of_event(&id(), &ca.union(&cb)).eval(&t).unwrap();
            let sum = germ_arith(
                ArithOp::Add,
                &germ_of_event(&id(), &ca),
                &germ_of_event(&id(), &cb),
            )
            .eval(&t)
            .unwrap();
            let want = oracle_pr(&a, &t) + oracle_pr(&b, &t);
            if union != want || sum != want {
                return outcome(false, format!("additivity fails for {ca}, {cb} on {t}"));
            }
        } else {
            let (x, y, z) = (
                Tree::random(&mut rng, &pool, 3),
                Tree::random(&mut rng, &pool, 3),
                Tree::random(&mut rng, &pool, 2),
            );
            let (gx, gy, gz) = (x.germ(), y.germ(), z.germ());
            match (gx.eval(&t), x.oracle(&t)) {
                (Ok(v), Some(w)) if v == w => {}
                (Err(NapError::DivisionUndefined), None) => {}
                other => return outcome(false, format!("{gx} on {t}: {other:?}")),
            }
            let laws: [(Germ, Germ); 4] = [
                (
                    germ_arith(ArithOp::Add, &gx, &gy),
                    germ_arith(ArithOp::Add, &gy, &gx),
                ),
                (
                    germ_arith(ArithOp::Mul, &gx, &gy),
                    germ_arith(ArithOp::Mul, &gy, &gx),
                ),
                (
                    germ_arith(ArithOp::Mul, &gx, &germ_arith(ArithOp::Add, &gy, &gz)),
                    germ_arith(
                        ArithOp::Add,
                        &germ_arith(ArithOp::Mul, &gx, &gy),
                        &germ_arith(ArithOp::Mul, &gx, &gz),
                    ),
                ),
                (germ_arith(ArithOp::Sub, &gx, &gx), Germ::Const(zero())),
            ];
            for (l, r) in &laws {
                match (l.eval(&t), r.eval(&t)) {
                    (Ok(a), Ok(b)) if a == b => {}
                    (Err(_), _) | (_, Err(_))
                        if x.oracle(&t).is_none()
                            || y.oracle(&t).is_none()
                            || z.oracle(&t).is_none() => {}
                    other => return outcome(false, format!("{l} = {r} on {t}: {other:?}")),
                }
            }
        }
        cases += 1;
    }
    outcome(cases == 1000, format!("{cases} cases"))
}

fn euclidean_and_uniformity(forced: &mut Forced) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let fb = fineness_base(None);
    let budget = CompareBudget::default();
    let mut checked_points = 0;
    for case in 0..200 {
        let (u, pool) = if case % 2 == 0 {
            (make_universe(Mode::Ordinal, 3).unwrap(), ordinal_pool())
        } else {
            let mut r = ChaCha8Rng::seed_from_u64(case);
            (make_universe(Mode::Hf, 5).unwrap(), hf_pool(&mut r))
        };
        let support: Vec<SetValue> = {
            let k = rng.gen_range(2..=8);
            pool.choose_multiple(&mut rng, k)
        }
        .cloned()
        .collect();
        let mut image = support.clone();
        image.shuffle(&mut rng);
        let theta = RandomVariable::permutation(
            support
                .iter()
                .cloned()
                .zip(image)
                .collect::<BTreeMap<_, _>>(),
        )
        .unwrap();

        let mut a = pick_subset(&mut rng, &pool, 5);
        let extra: Vec<SetValue> = pool.iter().filter(|x| !a.contains(x)).cloned().collect();
        let b_extra = extra.choose(&mut rng).unwrap().clone();
        let mut b = a.clone();
        b.push(b_extra);
        a.sort();
        let (ca, cb) = (ClassSpec::finite(a), ClassSpec::finite(b));
        let v = compare(
            &germ_of_event(&theta, &ca),
            Relation::Lt,
            &germ_of_event(&theta, &cb),
            &fb,
            &u,
            &budget,
        )
        .unwrap();
        match v.justification() {
            Some(j) if v.is_forced() && j.rule() == Rule::Euclidean => {
                forced.push((u.mode(), format!("{ca} < {cb}"), j.clone()))
            }
            _ => {
                return outcome(
                    false,
                    format!("case {case}: {ca} < {cb} under {theta} gave {}", v.label()),
                )
            }
        }

        let (x, y) = (
            pool.choose(&mut rng).unwrap().clone(),
            pool.choose(&mut rng).unwrap().clone(),
        );
        let (gx, gy) = (
            germ_of_event(&theta, &ClassSpec::finite([x.clone()])),
            germ_of_event(&theta, &ClassSpec::finite([y.clone()])),
        );
        let (px, py) = (theta.preimage(&x).unwrap(), theta.preimage(&y).unwrap());
        for _ in 0..5 {
            let t = random_snapshot(&mut rng, &pool).with([px.clone(), py.clone()]);
            if gx.eval(&t).unwrap() != gy.eval(&t).unwrap()
                || gx.eval(&t).unwrap() != ratio(1, t.len())
            {
                return outcome(false, format!("uniformity fails for {x}, {y} on {t}"));
            }
            checked_points += 1;
        }
        let eq = compare(&gx, Relation::Eq, &gy, &fb, &u, &budget).unwrap();
        match eq.justification() {
            Some(j) if eq.is_forced() => forced.push((u.mode(), format!("{gx} = {gy}"), j.clone())),
            _ => {
                return outcome(
                    false,
                    format!("uniformity verdict for {x}, {y} was {}", eq.label()),
                )
            }
        }
    }
    outcome(
        true,
        format!("200 strict inclusions forced, {checked_points} uniformity points"),
    )
}

fn perfect_additivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut points = 0;
    for case in 0..100 {
        let pool = if case % 2 == 0 {
            ordinal_pool()
        } else {
            hf_pool(&mut rng)
        };
        let mut shuffled = pool.clone();
        shuffled.shuffle(&mut rng);
        let parts = rng.gen_range(1..=6);
        let mut blocks: Vec<Vec<SetValue>> = vec![Vec::new(); parts];
        for x in shuffled.iter().take(rng.gen_range(parts..=shuffled.len())) {
            blocks[rng.gen_range(0..parts)].push(x.clone());
        }
        let index: Vec<SetValue> = pool.choose_multiple(&mut rng, parts).cloned().collect();
        let union: Vec<SetValue> = blocks.concat();
        let sum = star_sum_germs(
            index.iter().cloned().zip(
                blocks
                    .iter()
                    .map(|b| germ_of_event(&id(), &ClassSpec::finite(b.clone()))),
            ),
        );
        let whole = germ_of_event(&id(), &ClassSpec::finite(union.clone()));
        // the filter contains every snapshot holding the finite index
        for _ in 0..10 {
            let t = random_snapshot(&mut rng, &pool).with(index.iter().cloned());
            let (s, w) = (sum.eval(&t).unwrap(), whole.eval(&t).unwrap());
            if s != w || w != oracle_pr(&union, &t) {
                return outcome(false, format!("partition {case} on {t}: {s} vs {w}"));
            }
            points += 1;
        }
    }
    outcome(true, format!("100 partitions, {points} snapshots"))
}

fn hume_and_translation(forced: &mut Forced) -> Outcome {
    let u = make_universe(Mode::Ordinal, 3).unwrap();
    let fb = fineness_base(None);
    let budget = CompareBudget::default();
    let even = u.builtin(Builtin::Even).unwrap();
    let pi = u.invar_permutation().unwrap();
    let moved = even.image(&pi);
    let nat = u.builtin(Builtin::Naturals).unwrap();
    let shifted = u.translate_class(&nat, Ordinal::new(0, 1)).unwrap();
    let mut notes = Vec::new();
    for (name, small, big) in [("hume", &moved, &even), ("translation", &shifted, &nat)] {
        let (gs, gb) = (germ_of_event(&id(), small), germ_of_event(&id(), big));
        let first = compare(&gs, Relation::Lt, &gb, &fb, &u, &budget).unwrap();
        let again = compare(&gs, Relation::Lt, &gb, &fb, &u, &budget).unwrap();
        match first.justification() {
            Some(j) if first.is_forced() && first == again => {
                notes.push(format!("{name}: {} by {}", first.label(), j.rule()));
                forced.push((Mode::Ordinal, format!("{gs} < {gb}"), j.clone()));
            }
            _ => return outcome(false, format!("{name}: {}", first.label())),
        }
    }
    outcome(true, notes.join(", "))
}

fn superregularity() -> Outcome {
    let u = make_universe(Mode::Ordinal, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let small: Vec<ClassSpec> = [
        Builtin::Naturals,
        Builtin::Even,
        Builtin::Odd,
        Builtin::Lim,
        Builtin::On,
    ]
    .into_iter()
    .map(|b| u.builtin(b).unwrap())
    .chain([ClassSpec::new(ClassExpr::Pads {
        modulus: 2,
        residue: 0,
    })])
    .collect();
    let large = [
        ClassSpec::new(ClassExpr::Pads {
            modulus: 1,
            residue: 0,
        }),
        ClassSpec::new(ClassExpr::Pads {
            modulus: 3,
            residue: 1,
        }),
        ClassSpec::new(ClassExpr::NonOrdinals),
        ClassSpec::universe(),
    ];
    let pool = ordinal_pool();
    for case in 0..50 {
        let pins: Vec<SetValue> = {
            let k = rng.gen_range(0..=6);
            pool.choose_multiple(&mut rng, k)
        }
        .cloned()
        .collect();
        let mut pairs = Vec::new();
        while pairs.len() < rng.gen_range(1..=4) {
            let a = small.choose(&mut rng).unwrap();
            let b = large.choose(&mut rng).unwrap();
            if a.tier() < b.tier() {
                pairs.push(RatioPair::new(a, b, rng.gen_range(1..=5)));
            }
        }
        let f = match superreg_witness(&u, &pins, &pairs) {
            Ok(f) => f,
            Err(e) => return outcome(false, format!("instance {case}: {e}")),
        };
        for c in pairs
            .iter()
            .map(RatioPair::constraint)
            .chain(pins.iter().cloned().map(Constraint::Fineness))
        {
            if !c.contains(&f).unwrap() {
                return outcome(false, format!("instance {case}: {c} fails on {f}"));
            }
        }
    }
    outcome(true, "50 instances, every membership exact")
}

fn hf_members(codes: &[u64]) -> ClassSpec {
    ClassSpec::members_of(&HfSet::from_members(
        codes.iter().map(|c| HfSet::from_ackermann(*c)),
    ))
}

fn power_set_condition() -> Outcome {
    let u = make_universe(Mode::Hf, 6).unwrap();
    let pairs = level_pairs(&u, 4, 3, 17).unwrap();
    let budget = Budget::default();
    let staged = match powerset_prefilter_stage(&u, &fineness_base(None), &pairs, &budget, 6) {
        Ok(fb) => fb,
        Err(e) => return outcome(false, format!("staged builder: {e}")),
    };
    if !check_fip(&staged, &u, &budget, 6).is_witnessed() {
        return outcome(false, "staged base not witnessed");
    }

    let a: Vec<ClassSpec> = [&[4, 9][..], &[4, 9, 11], &[4, 9, 11, 13], &[4, 9, 11, 14]]
        .iter()
        .map(|c| hf_members(c))
        .collect();
    let p: Vec<ClassSpec> = a.iter().map(ClassSpec::power).collect();
    let judgements = [
        Constraint::OrderLt(a[0].clone(), a[1].clone()),
        Constraint::OrderLt(a[1].clone(), a[2].clone()),
        Constraint::OrderLt(a[0].clone(), a[2].clone()),
        Constraint::OrderLt(a[0].clone(), a[3].clone()),
        Constraint::OrderLt(a[1].clone(), a[3].clone()),
        Constraint::OrderGe(a[2].clone(), a[3].clone()),
        Constraint::OrderGe(a[3].clone(), a[2].clone()),
    ];
    let lifted: Vec<Constraint> = judgements.iter().filter_map(lift_judgement).collect();
    let order = PowerOrder::from_judgements(&lifted).unwrap();
    let nine = HfSet::from_ackermann(9);
    let four = HfSet::from_ackermann(4);
    let f_minus = Snapshot::new([
        SetValue::Hf(HfSet::from_members([four.clone()])),
        SetValue::Hf(HfSet::from_members([nine])),
    ]);
    let f = powerset_witness_extend(&u, &f_minus, &order).unwrap();
    let counts: Vec<usize> = p.iter().map(|q| f.count_in(q)).collect();
    let chain = counts[0] < counts[1] && counts[1] < counts[2] && counts[2] == counts[3];
    let holds = lifted.iter().all(|c| c.contains(&f).unwrap());
    if !chain || !holds {
        return outcome(false, format!("chain counts {counts:?}"));
    }

    let low_pairs = level_pairs(&u, 3, 3, 17).unwrap();
    let mut fb = match powerset_prefilter_stage(&u, &fineness_base(None), &low_pairs, &budget, 6) {
        Ok(fb) => fb,
        Err(e) => return outcome(false, format!("low staged builder: {e}")),
    };
    let strict: Vec<(ClassSpec, ClassSpec)> = fb
        .constraints()
        .iter()
        .filter_map(|c| match c {
            Constraint::OrderLt(x, y) if power_depth(x) == 0 => Some((x.clone(), y.clone())),
            _ => None,
        })
        .collect();
    if strict.is_empty() {
        return outcome(false, "low staged base kept no strict judgement");
    }
    let mut powered = strict.clone();
    for depth in 1..=3 {
        if depth >= 2 {
            fb = lift(&fb);
        }
        powered = powered
            .iter()
            .map(|(x, y)| (x.power(), y.power()))
            .collect();
        let kept = powered
            .iter()
            .all(|(x, y)| fb.contains(&Constraint::OrderLt(x.clone(), y.clone())));
        if !kept {
            return outcome(false, format!("strict order lost at depth {depth}"));
        }
        if !check_fip(&fb, &u, &budget, depth as u64).is_witnessed() {
            return outcome(false, format!("lift to depth {depth} not witnessed"));
        }
    }
    outcome(
        true,
        format!(
            "chain counts {counts:?}, {} strict pairs lift to depth 3",
            strict.len()
        ),
    )
}

fn ordinal_theorem(forced: &mut Forced) -> Outcome {
    let u = make_universe(Mode::Ordinal, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let on = u.builtin(Builtin::On).unwrap();
    let lim = u.builtin(Builtin::Lim).unwrap();
    let (even, odd) = (
        u.builtin(Builtin::Even).unwrap(),
        u.builtin(Builtin::Odd).unwrap(),
    );
    let pairs = [
        (lim.clone(), odd.clone()),
        (
            even.clone(),
            ClassSpec::new(ClassExpr::Pads {
                modulus: 2,
                residue: 0,
            }),
        ),
        (
            u.builtin(Builtin::Naturals).unwrap(),
            ClassSpec::new(ClassExpr::NonOrdinals),
        ),
    ];
    let pool: Vec<SetValue> = (0..3)
        .flat_map(|w| (0..10).map(move |n| SetValue::ord(w, n)))
        .collect();
    let mut witnesses = 0;
    for k in 1..=5 {
        for l in 1..=5 {
            for m in 1..=5 {
                let spec = OrdinalSpec {
                    pins: {
                        let k = rng.gen_range(0..=4);
                        pool.choose_multiple(&mut rng, k)
                    }
                    .cloned()
                    .collect(),
                    k,
                    l,
                    m,
                    pairs: vec![pairs.choose(&mut rng).unwrap().clone()],
                };
                let t = match ordinal_witness(&u, &spec) {
                    Ok(t) => t,
                    Err(e) => return outcome(false, format!("k={k} l={l} m={m}: {e}")),
                };
                for c in spec.constraints() {
                    if !c.contains(&t).unwrap() {
                        return outcome(false, format!("{c} fails on {t}"));
                    }
                }
                let n_on = t.count_in(&on);
                let gap = t.count_in(&even).abs_diff(t.count_in(&odd));
                if n_on > 0 && ratio(gap, n_on) > recip(l) {
                    return outcome(false, format!("parity gap {gap}/{n_on} above 1/{l} on {t}"));
                }
                witnesses += 1;
            }
        }
    }
    let fb = FilterBase::from_constraints([
        Constraint::Parametric(Family::Fineness),
        Constraint::Parametric(Family::Weight),
        Constraint::Parametric(Family::Interval),
    ]);
    let share = nap_core::germ::conditional_germ(&id(), &lim, &id(), &on);
    for g in [germ_of_event(&id(), &on), share] {
        match classify_infinitesimal(&g, &fb, &u) {
            Infinitesimal::ApproxZero(cert) => forced.push((
                Mode::Ordinal,
                format!("{g} ≈ 0"),
                Justification::Parametric(cert),
            )),
            other => return outcome(false, format!("{g}: {other:?}")),
        }
    }
    outcome(
        true,
        format!("{witnesses} witnesses, Pr(On) and Pr(Lim|On) infinitesimal"),
    )
}

fn restriction_and_coherence() -> Outcome {
    let cfg = TierConfig::new(vec![5, 7, 11, 17]).unwrap();
    let top = Snapshot::new((0..16).map(SetValue::nat));
    let frame = Frame::new(cfg.clone(), &top).unwrap();
    let large: [Mask; 1] = [0x7fff];
    let middle: [Mask; 4] = [0x00ff, 0x0ff0, 0xff00, 0x03ff];
    let small: [Mask; 6] = [0x001f, 0x003f, 0x01f0, 0x0f80, 0x1f00, 0xf800];
    let lattice: Vec<Mask> = large.iter().chain(&middle).chain(&small).copied().collect();
    let fb = lattice_base(&frame, &lattice).unwrap();
    let tp = TieredProb::new(frame.clone(), &fb).unwrap();

    let mut chains = 0;
    let tops: Vec<Mask> = std::iter::once(frame.top()).chain(large).collect();
    for &s in &tops {
        let base_s = tp.restricted(s).unwrap();
        for &m in middle.iter().filter(|m| *m & !s == 0 && **m != s) {
            let via = restrict_base(&frame, &base_s, m).unwrap();
            for &t in small.iter().filter(|t| *t & !m == 0) {
                let twice = restrict_base(&frame, &via, t).unwrap();
                let once = restrict_base(&frame, &base_s, t).unwrap();
                if twice != once || once != *tp.restricted(t).unwrap() {
                    return outcome(false, format!("chain {t:#x} < {m:#x} < {s:#x}"));
                }
                chains += 1;
            }
        }
    }
    let ab = AuditBudget::for_config(&cfg, 8);
    for &w in &lattice {
        let a = audit_base(&frame, &tp.restricted(w).unwrap(), &ab);
        if !a.passed() {
            return outcome(false, format!("window {w:#x}: {a:?}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut points = 0;
    let budget = CoherenceBudget {
        outer: 24,
        inner: 6,
        seed: 8,
    };
    for &s in tops.iter().chain(&middle) {
        for &t in lattice
            .iter()
            .filter(|t| **t & !s == 0 && **t != s && frame.tier(**t) < frame.tier(s))
        {
            let a = ClassSpec::finite(top.states().iter().filter(|_| rng.gen_bool(0.5)).cloned());
            let r =
                coherence_check(&a, &frame.snapshot(t), &frame.snapshot(s), &tp, &budget).unwrap();
            if !r.passed() {
                return outcome(false, format!("coherence {t:#x} in {s:#x} for {a}"));
            }
            points += r.points.len();
        }
    }
    outcome(
        true,
        format!(
            "{chains} chains, {} bases audited, {points} coherence points",
            lattice.len()
        ),
    )
}

fn non_restriction() -> Outcome {
    let runs = [
        (
            TierConfig::new(vec![3, 6]).unwrap(),
            Snapshot::new((0..5).map(SetValue::nat)),
            2,
        ),
        (
            TierConfig::new(vec![5, 7, 11, 17]).unwrap(),
            Snapshot::new((0..12).map(SetValue::nat)),
            4,
        ),
    ];
    for (cfg, top, k) in runs {
        let first = non_restriction_counterexample(&cfg, &top, k).unwrap();
        let again = non_restriction_counterexample(&cfg, &top, k).unwrap();
        if !first.demonstrated() || first != again {
            return outcome(false, format!("{cfg:?}: {first:?}"));
        }
    }
    outcome(
        true,
        "big-snapshot base restricts to the empty set, subset bound repairs it",
    )
}

fn soundness(forced: &Forced, u_ord: &Universe, u_hf: &Universe) -> Outcome {
    let mut refutations = 0;
    let mut short = 0;
    for (i, (mode, what, j)) in forced.iter().enumerate() {
        let u = if *mode == Mode::Hf { u_hf } else { u_ord };
        let a = audit(j, u, 100, 1000 + i as u64);
        if !a.passed() {
            println!("    refuted: {what}");
        }
        if a.checked < 100 {
            short += 1;
        }
        refutations += a.refutations.len();
    }
    outcome(
        refutations == 0 && short == 0,
        format!(
            "{} verdicts, {refutations} refutations, {short} with fewer than 100 witnesses",
            forced.len()
        ),
    )
}

// Runs without the test harness so the criterion lines are always printed.
fn main() {
    let mut forced: Forced = Vec::new();
    let mut failures = Vec::new();
    let limits = [10.0, 60.0, 60.0, 1.0, 5.0, 60.0, 60.0, 30.0, 10.0, 120.0];
    let mut run =
        |n: usize, name: &str, f: &mut dyn FnMut(&mut Forced) -> Outcome, forced: &mut Forced| {
            let start = Instant::now();
            let o = f(forced);
            let took = start.elapsed();
            let in_time = took <= Duration::from_secs_f64(limits[n - 1]);
            let pass = o.pass && in_time;
            println!(
                "criterion {n:>2} {name}: {} ({}; {:.2} s)",
                if pass { "PASS" } else { "FAIL" },
                o.detail,
                took.as_secs_f64()
            );
            if !pass {
                failures.push(n);
            }
        };
    run(
        1,
        "finite additivity and field laws",
        &mut |_| finite_additivity(),
        &mut forced,
    );
    run(
        2,
        "regularity, uniformity, euclidean",
        &mut euclidean_and_uniformity,
        &mut forced,
    );
    run(
        3,
        "perfect additivity",
        &mut |_| perfect_additivity(),
        &mut forced,
    );
    run(
        4,
        "hume and translation failures",
        &mut hume_and_translation,
        &mut forced,
    );
    run(
        5,
        "superregular witnesses",
        &mut |_| superregularity(),
        &mut forced,
    );
    run(
        6,
        "power-set condition",
        &mut |_| power_set_condition(),
        &mut forced,
    );
    run(7, "ordinal witnesses", &mut ordinal_theorem, &mut forced);
    run(
        8,
        "restriction and coherence",
        &mut |_| restriction_and_coherence(),
        &mut forced,
    );
    run(
        9,
        "non-restriction counterexample",
        &mut |_| non_restriction(),
        &mut forced,
    );
    let u_ord = make_universe(Mode::Ordinal, 3).unwrap();
    let u_hf = make_universe(Mode::Hf, 5).unwrap();
    let snapshot = forced.clone();
    run(
        10,
        "verdict soundness audit",
        &mut |_| soundness(&snapshot, &u_ord, &u_hf),
        &mut forced,
    );
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
