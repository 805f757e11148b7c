//! Seeded invariant sweep behind `nap audit`.
//!
//! Every property draws `budget` random cases over the ordinal universe of bound 3
//! and becomes one record. Forced comparison verdicts met along the way are
//! re-checked at the end against fresh witnesses.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nap_core::bootstrap::{
    audit_base, lattice_base, non_restriction_counterexample, restrict_base, AuditBudget, Frame,
    Mask, TierConfig, TieredProb,
};
use nap_core::filter::{
    fineness_base, ordinal_witness, superreg_witness, Constraint, OrdinalSpec, RatioPair,
};
use nap_core::germ::{germ_arith, germ_of_event, star_sum_germs, ArithOp, Germ};
use nap_core::rational::{ratio, recip, zero};
use nap_core::snapshot::Snapshot;
use nap_core::universe::{
    make_universe, Builtin, ClassExpr, ClassSpec, Mode, RandomVariable, SetValue, Universe,
};
use nap_core::verdict::{audit, compare, CompareBudget, Justification, Relation, Rule};
use nap_core::{NapError, Rational};

use crate::error::{invalid, CliError, Result};
use crate::report::{Record, Report, UniverseInfo};

const BOUND: u32 = 3;
const SOUNDNESS_WITNESSES: usize = 100;

type Forced = Vec<(String, Justification)>;

struct Sweep {
    u: Universe,
    pool: Vec<SetValue>,
    rng: ChaCha8Rng,
    budget: usize,
}

fn pool() -> Vec<SetValue> {
    let mut pool: Vec<SetValue> = (0..3)
        .flat_map(|w| (0..8).map(move |n| SetValue::ord(w, n)))
        .collect();
    pool.extend((0..4).map(SetValue::Pad));
    pool
}

fn id() -> RandomVariable {
    RandomVariable::Identity
}

fn count_pr(a: &[SetValue], t: &Snapshot) -> Rational {
    ratio(t.states().iter().filter(|s| a.contains(s)).count(), t.len())
}

fn event(a: &[SetValue]) -> Germ {
    germ_of_event(&id(), &ClassSpec::finite(a.iter().cloned()))
}

impl Sweep {
    fn subset(&mut self, max: usize) -> Vec<SetValue> {
        let k = self.rng.gen_range(0..=max.min(self.pool.len()));
        self.pool
            .choose_multiple(&mut self.rng, k)
            .cloned()
            .collect()
    }

    fn snapshot(&mut self) -> Snapshot {
        let k = self.rng.gen_range(1..=10);
        Snapshot::new(self.pool.choose_multiple(&mut self.rng, k).cloned())
    }

    fn additivity(&mut self, r: &mut Record) -> nap_core::Result<()> {
        let mut bad = None;
        for _ in 0..self.budget {
            let t = self.snapshot();
            let mut shuffled = self.pool.clone();
            shuffled.shuffle(&mut self.rng);
            let cut = self.rng.gen_range(0..=shuffled.len() / 2);
            let (a, rest) = shuffled.split_at(cut);
            let b: Vec<SetValue> = rest
                .iter()
                .filter(|_| self.rng.gen_bool(0.5))
                .cloned()
                .collect();
            let (ca, cb) = (ClassSpec::finite(a.to_vec()), ClassSpec::finite(b.clone()));
            let union = germ_of_event(&id(), &ca.union(&cb)).eval(&t)?;
            let want = count_pr(a, &t) + count_pr(&b, &t);
            if union != want && bad.is_none() {
                bad = Some(format!("{ca} and {cb} on {t}"));
            }
        }
        r.check(
            format!(
                "Pr(A u B) = Pr(A) + Pr(B) on {} disjoint pairs",
                self.budget
            ),
            bad.is_none(),
        );
        r.note = bad;
        Ok(())
    }

    fn field_laws(&mut self, r: &mut Record) -> nap_core::Result<()> {
        let mut bad = None;
        for _ in 0..self.budget {
            let t = self.snapshot();
            let (a, b, c) = (self.subset(6), self.subset(6), self.subset(6));
            let (x, y, z) = (event(&a), event(&b), event(&c));
            let q = Germ::Const(ratio(
                self.rng.gen_range(0..7usize),
                self.rng.gen_range(1..7usize),
            ));
            let laws = [
                (
                    germ_arith(ArithOp::Add, &x, &y),
                    germ_arith(ArithOp::Add, &y, &x),
                ),
                (
                    germ_arith(ArithOp::Mul, &x, &q),
                    germ_arith(ArithOp::Mul, &q, &x),
                ),
                (
                    germ_arith(ArithOp::Mul, &x, &germ_arith(ArithOp::Add, &y, &z)),
                    germ_arith(
                        ArithOp::Add,
                        &germ_arith(ArithOp::Mul, &x, &y),
                        &germ_arith(ArithOp::Mul, &x, &z),
                    ),
                ),
                (germ_arith(ArithOp::Sub, &x, &x), Germ::Const(zero())),
            ];
            for (l, rhs) in &laws {
                let same = l.eval(&t)? == rhs.eval(&t)?;
                if !same && bad.is_none() {
                    bad = Some(format!("{l} = {rhs} on {t}"));
                }
            }
            let v = x.eval(&t)?;
            if v != count_pr(&a, &t) && bad.is_none() {
                bad = Some(format!("{x} on {t} gave {v}"));
            }
        }
        r.check(
            format!("field laws hold at {} snapshots", self.budget),
            bad.is_none(),
        );
        r.note = bad;
        Ok(())
    }

    fn permutation(&mut self) -> nap_core::Result<RandomVariable> {
        let k = self.rng.gen_range(2..=8);
        let support: Vec<SetValue> = self
            .pool
            .choose_multiple(&mut self.rng, k)
            .cloned()
            .collect();
        let mut image = support.clone();
        image.shuffle(&mut self.rng);
        RandomVariable::permutation(support.into_iter().zip(image).collect::<BTreeMap<_, _>>())
    }

    fn euclidean(&mut self, r: &mut Record, forced: &mut Forced) -> nap_core::Result<()> {
        let fb = fineness_base(None);
        let budget = CompareBudget::default();
        let mut bad = None;
        for _ in 0..self.budget {
            let theta = self.permutation()?;
            let a = self.subset(5);
            let outside: Vec<SetValue> = self
                .pool
                .iter()
                .filter(|x| !a.contains(x))
                .cloned()
                .collect();
            let mut b = a.clone();
            b.push(
                outside
                    .choose(&mut self.rng)
                    .cloned()
                    .unwrap_or(SetValue::Pad(99)),
            );
            let (ca, cb) = (ClassSpec::finite(a), ClassSpec::finite(b));
            let (ga, gb) = (germ_of_event(&theta, &ca), germ_of_event(&theta, &cb));
            let v = compare(&ga, Relation::Lt, &gb, &fb, &self.u, &budget)?;
            match v.justification() {
                Some(j) if v.is_forced() && j.rule() == Rule::Euclidean => {
                    forced.push((format!("{ga} < {gb}"), j.clone()))
                }
                _ => {
                    bad.get_or_insert(format!("{ca} < {cb} under {theta} was {}", v.label()));
                }
            }
        }
        r.check(
            format!(
                "{} strict inclusions forced by the euclidean rule",
                self.budget
            ),
            bad.is_none(),
        );
        r.note = bad;
        Ok(())
    }

    fn uniformity(&mut self, r: &mut Record, forced: &mut Forced) -> nap_core::Result<()> {
        let fb = fineness_base(None);
        let budget = CompareBudget::default();
        let mut bad = None;
        for _ in 0..self.budget {
            let theta = self.permutation()?;
            let x = self
                .pool
                .choose(&mut self.rng)
                .cloned()
                .unwrap_or(SetValue::nat(0));
            let y = self
                .pool
                .choose(&mut self.rng)
                .cloned()
                .unwrap_or(SetValue::nat(1));
            let gx = germ_of_event(&theta, &ClassSpec::finite([x.clone()]));
            let gy = germ_of_event(&theta, &ClassSpec::finite([y.clone()]));
            let px = theta
                .preimage(&x)
                .ok_or_else(|| NapError::NotBijective(x.encode()))?;
            let py = theta
                .preimage(&y)
                .ok_or_else(|| NapError::NotBijective(y.encode()))?;
            let t = self.snapshot().with([px, py]);
            let (vx, vy) = (gx.eval(&t)?, gy.eval(&t)?);
            if (vx != vy || vx != ratio(1, t.len())) && bad.is_none() {
                bad = Some(format!("{x} and {y} on {t}"));
            }
            let v = compare(&gx, Relation::Eq, &gy, &fb, &self.u, &budget)?;
            match v.justification() {
                Some(j) if v.is_forced() => forced.push((format!("{gx} = {gy}"), j.clone())),
                _ => {
                    bad.get_or_insert(format!("{gx} = {gy} was {}", v.label()));
                }
            }
        }
        r.check(
            format!("{} singleton pairs are equally likely", self.budget),
            bad.is_none(),
        );
        r.note = bad;
        Ok(())
    }

    fn perfect_additivity(&mut self, r: &mut Record) -> nap_core::Result<()> {
        let mut bad = None;
        for case in 0..self.budget {
            let mut shuffled = self.pool.clone();
            shuffled.shuffle(&mut self.rng);
            let parts = self.rng.gen_range(1..=6);
            let mut blocks: Vec<Vec<SetValue>> = vec![Vec::new(); parts];
            let used = self.rng.gen_range(parts..=shuffled.len());
            for x in &shuffled[..used] {
                blocks[self.rng.gen_range(0..parts)].push(x.clone());
            }
            let index: Vec<SetValue> = self
                .pool
                .choose_multiple(&mut self.rng, parts)
                .cloned()
                .collect();
            let union = blocks.concat();
            let sum = star_sum_germs(index.iter().cloned().zip(blocks.iter().map(|b| event(b))));
            let t = self.snapshot().with(index.iter().cloned());
            let s = sum.eval(&t)?;
            if s != count_pr(&union, &t) && bad.is_none() {
                bad = Some(format!("partition {case} on {t}"));
            }
        }
        r.check(
            format!("{} partitions sum to their union", self.budget),
            bad.is_none(),
        );
        r.note = bad;
        Ok(())
    }

    fn superreg(&mut self, r: &mut Record) -> nap_core::Result<()> {
        let b = |x| self.u.builtin(x);
        let pads = |modulus, residue| ClassSpec::new(ClassExpr::Pads { modulus, residue });
        let small = [
            b(Builtin::Naturals)?,
            b(Builtin::Even)?,
            b(Builtin::Odd)?,
            b(Builtin::Lim)?,
            pads(2, 0),
        ];
        let large = [
            pads(1, 0),
            pads(3, 1),
            ClassSpec::new(ClassExpr::NonOrdinals),
            ClassSpec::universe(),
        ];
        let mut bad = None;
        for _ in 0..self.budget {
            let pins = self.subset(6);
            let want = self.rng.gen_range(1..=4);
            let mut pairs = Vec::new();
            while pairs.len() < want {
                let (a, b) = (
                    small
                        .choose(&mut self.rng)
                        .cloned()
                        .unwrap_or_else(ClassSpec::empty),
                    large
                        .choose(&mut self.rng)
                        .cloned()
                        .unwrap_or_else(ClassSpec::universe),
                );
                if a.tier() < b.tier() {
                    pairs.push(RatioPair::new(&a, &b, self.rng.gen_range(1..=5)));
                }
            }
            match superreg_witness(&self.u, &pins, &pairs) {
                Ok(f) => {
                    for c in pairs
                        .iter()
                        .map(RatioPair::constraint)
                        .chain(pins.iter().cloned().map(Constraint::Fineness))
                    {
                        if !c.contains(&f)? {
                            bad.get_or_insert(format!("{c} fails on {f}"));
                        }
                    }
                }
                Err(e) => {
                    bad.get_or_insert(e.to_string());
                }
            }
        }
        r.check(
            format!(
                "{} superregular witnesses satisfy their constraints",
                self.budget
            ),
            bad.is_none(),
        );
        r.note = bad;
        Ok(())
    }

    fn ordinal(&mut self, r: &mut Record) -> nap_core::Result<()> {
        let b = |x| self.u.builtin(x);
        let (on, even, odd) = (b(Builtin::On)?, b(Builtin::Even)?, b(Builtin::Odd)?);
        let pairs = [
            (b(Builtin::Lim)?, odd.clone()),
            (
                even.clone(),
                ClassSpec::new(ClassExpr::Pads {
                    modulus: 2,
                    residue: 0,
                }),
            ),
            (
                b(Builtin::Naturals)?,
                ClassSpec::new(ClassExpr::NonOrdinals),
            ),
        ];
        let ordinals: Vec<SetValue> = self
            .pool
            .iter()
            .filter(|x| !matches!(x, SetValue::Pad(_)))
            .cloned()
            .collect();
        let mut bad = None;
        for _ in 0..self.budget {
            let (k, l, m) = (
                self.rng.gen_range(1..=5),
                self.rng.gen_range(1..=5),
                self.rng.gen_range(1..=5),
            );
            let n = self.rng.gen_range(0..=4);
            let spec = OrdinalSpec {
                pins: ordinals
                    .choose_multiple(&mut self.rng, n)
                    .cloned()
                    .collect(),
                k,
                l,
                m,
                pairs: pairs.choose(&mut self.rng).cloned().into_iter().collect(),
            };
            let t = match ordinal_witness(&self.u, &spec) {
                Ok(t) => t,
                Err(e) => {
                    bad.get_or_insert(format!("k={k} l={l} m={m}: {e}"));
                    continue;
                }
            };
            for c in spec.constraints() {
                if !c.contains(&t)? {
                    bad.get_or_insert(format!("{c} fails on {t}"));
                }
            }
            let n_on = t.count_in(&on);
            let gap = t.count_in(&even).abs_diff(t.count_in(&odd));
            if ratio(n_on, t.len()) > recip(m) || (n_on > 0 && ratio(gap, n_on) > recip(l)) {
                bad.get_or_insert(format!("bounds fail on {t}"));
            }
        }
        r.check(
            format!("{} ordinal witnesses meet their bounds", self.budget),
            bad.is_none(),
        );
        r.note = bad;
        Ok(())
    }
}

fn restriction(seed: u64, r: &mut Record) -> nap_core::Result<()> {
    let cfg = TierConfig::new(vec![5, 7, 11, 17])?;
    let top = Snapshot::new((0..16).map(SetValue::nat));
    let frame = Frame::new(cfg.clone(), &top)?;
    let lattice: [Mask; 11] = [
        0x7fff, 0x00ff, 0x0ff0, 0xff00, 0x03ff, 0x001f, 0x003f, 0x01f0, 0x0f80, 0x1f00, 0xf800,
    ];
    let fb = lattice_base(&frame, &lattice)?;
    let tp = TieredProb::new(frame.clone(), &fb)?;
    let mut windows = vec![frame.top()];
    windows.extend(lattice);
    let below = |a: Mask, b: Mask| a & !b == 0 && a != b && frame.tier(a) < frame.tier(b);
    let (mut chains, mut agree) = (0, 0);
    for &s in &windows {
        let base_s = tp.restricted(s)?;
        for &m in windows.iter().filter(|m| below(**m, s)) {
            let via = restrict_base(&frame, &base_s, m)?;
            for &t in windows.iter().filter(|t| below(**t, m)) {
                chains += 1;
                if restrict_base(&frame, &via, t)? == *tp.restricted(t)? {
                    agree += 1;
                }
            }
        }
    }
    r.check(
        format!("{agree} of {chains} restriction chains agree"),
        agree == chains,
    );
    let budget = AuditBudget::for_config(&cfg, seed);
    let clean = windows
        .iter()
        .map(|w| {
            tp.restricted(*w)
                .map(|b| audit_base(&frame, &b, &budget).passed())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    r.check(
        format!(
            "{} of {} restricted bases pass the base audit",
            clean.iter().filter(|p| **p).count(),
            clean.len()
        ),
        clean.iter().all(|p| *p),
    );
    let c =
        non_restriction_counterexample(&cfg, &Snapshot::new((0..12).map(SetValue::nat)), budget.k)?;
    r.check(
        "non-restriction counterexample is demonstrated",
        c.demonstrated(),
    );
    Ok(())
}

fn timed(id: &str, f: impl FnOnce(&mut Record) -> nap_core::Result<()>) -> Record {
    let mut r = Record::new(id, "audit");
    let start = Instant::now();
    if let Err(e) = f(&mut r) {
        r.fail_with(e);
    }
    r.elapsed_us = start.elapsed().as_micros() as u64;
    r
}

pub fn run(budget: usize, seed: u64) -> Result<Report> {
    if budget == 0 {
        return Err(CliError::Validation("audit budget must be positive".into()));
    }
    let u = make_universe(Mode::Ordinal, BOUND).map_err(invalid)?;
    let mut sweep = Sweep {
        u,
        pool: pool(),
        rng: ChaCha8Rng::seed_from_u64(seed),
        budget,
    };
    let mut forced = Forced::new();
    let mut report = Report::new(
        "audit",
        seed,
        UniverseInfo {
            mode: "ordinal".into(),
            bound: BOUND,
        },
        fineness_base(None).encode(),
    );
    report.push(timed("additivity", |r| sweep.additivity(r)));
    report.push(timed("field-laws", |r| sweep.field_laws(r)));
    report.push(timed("euclidean", |r| sweep.euclidean(r, &mut forced)));
    report.push(timed("uniformity", |r| sweep.uniformity(r, &mut forced)));
    report.push(timed("perfect-additivity", |r| sweep.perfect_additivity(r)));
    report.push(timed("superregular", |r| sweep.superreg(r)));
    report.push(timed("ordinal", |r| sweep.ordinal(r)));
    report.push(timed("restriction", |r| restriction(seed, r)));
    report.push(timed("soundness", |r| {
        let mut refuted = Vec::new();
        let mut short = 0;
        for (i, (what, j)) in forced.iter().enumerate() {
            let a = audit(j, &u, SOUNDNESS_WITNESSES, seed.wrapping_add(i as u64));
            if !a.passed() {
                refuted.push(what.clone());
            }
            if a.checked < SOUNDNESS_WITNESSES {
                short += 1;
            }
        }
        r.check(
            format!(
                "{} forced verdicts survive {SOUNDNESS_WITNESSES} witnesses each",
                forced.len()
            ),
            refuted.is_empty(),
        );
        r.check(
            format!("{short} verdicts ran short of witnesses"),
            short == 0,
        );
        r.cited = refuted;
        Ok(())
    }));
    Ok(report)
}
