use nap_core::filter::powerset::{level_pairs, lift_judgement, power_depth};
use nap_core::filter::{
    check_fip, lift, ordinal_witness, powerset_prefilter_stage, powerset_witness_extend,
    superreg_witness, Budget, Constraint, FilterBase, FipResult, PowerOrder,
};
use nap_core::rational::{ratio, recip, render};
use nap_core::universe::{Builtin, ClassSpec, Universe};
use nap_core::{NapError, Result};

use super::{Context, Job};
use crate::report::{Point, Record};

fn check_memberships(
    r: &mut Record,
    cs: &[Constraint],
    t: &nap_core::snapshot::Snapshot,
) -> Result<()> {
    for c in cs {
        r.check(format!("member of {}", c.encode()), c.contains(t)?);
    }
    Ok(())
}

fn record_fip(r: &mut Record, res: &FipResult) {
    match res {
        FipResult::Witnessed {
            witnesses,
            subsets_checked,
            ..
        } => {
            r.verdict = Some("witnessed".into());
            if let Some((_, w)) = witnesses.iter().max_by_key(|(ix, _)| ix.len()) {
                r.witness = Some(w.encode());
            }
            r.note = Some(format!("{subsets_checked} subfamilies checked"));
        }
        FipResult::Refuted(cs) => {
            r.verdict = Some("refuted".into());
            r.cited = cs.iter().map(Constraint::encode).collect();
        }
        FipResult::Unknown(why) => {
            r.verdict = Some("unknown".into());
            r.note = Some(why.clone());
        }
    }
}

fn staged(ctx: &Context, level: u32, count: usize, seed: u64) -> Result<FilterBase> {
    let pairs = level_pairs(&ctx.universe, level, count, seed)?;
    powerset_prefilter_stage(&ctx.universe, &ctx.base, &pairs, &Budget::default(), seed)
}

fn power_n(c: &ClassSpec, n: usize) -> ClassSpec {
    (0..n).fold(c.clone(), |acc, _| acc.power())
}

fn ordinal_bounds(
    r: &mut Record,
    u: &Universe,
    l: u64,
    m: u64,
    t: &nap_core::snapshot::Snapshot,
) -> Result<()> {
    let on = t.count_in(&u.builtin(Builtin::On)?);
    let even = t.count_in(&u.builtin(Builtin::Even)?);
    let odd = t.count_in(&u.builtin(Builtin::Odd)?);
    let share = ratio(on, t.len());
    r.values.push(Point {
        snapshot: t.encode(),
        value: render(&share),
    });
    r.check(
        format!("Pr(On) = {} <= 1/{m}", render(&share)),
        share <= recip(m),
    );
    if on > 0 {
        let gap = ratio(even.abs_diff(odd), on);
        r.check(
            format!("|Pr(Even|On) - Pr(Odd|On)| = {} <= 1/{l}", render(&gap)),
            gap <= recip(l),
        );
    }
    Ok(())
}

pub fn run(job: &Job, ctx: &Context, seed: u64, r: &mut Record) -> Result<()> {
    let u = &ctx.universe;
    match job {
        Job::Superreg { pins, pairs } => {
            let f = superreg_witness(u, pins, pairs)?;
            r.witness = Some(f.encode());
            let cs: Vec<Constraint> = pairs
                .iter()
                .map(|p| p.constraint())
                .chain(pins.iter().cloned().map(Constraint::Fineness))
                .collect();
            check_memberships(r, &cs, &f)?;
        }
        Job::Ordinal(spec) => {
            let t = ordinal_witness(u, spec)?;
            r.witness = Some(t.encode());
            check_memberships(r, &spec.constraints(), &t)?;
            ordinal_bounds(r, u, spec.l.max(1), spec.m.max(1), &t)?;
        }
        Job::PowersetLevel { level, count } => {
            let fb = staged(ctx, *level, *count, seed)?;
            r.cited = fb.concrete().map(Constraint::encode).collect();
            let res = check_fip(&fb, u, &Budget::default(), seed);
            record_fip(r, &res);
            r.check(
                "staged base keeps the finite intersection property",
                res.is_witnessed(),
            );
        }
        Job::PowersetChain {
            chain,
            strict,
            start,
        } => {
            let mut judgements = Vec::new();
            for (i, s) in strict.iter().enumerate() {
                let (a, b) = (&chain[i], &chain[i + 1]);
                if *s {
                    judgements.push(Constraint::OrderLt(a.clone(), b.clone()));
                } else {
                    judgements.push(Constraint::OrderGe(a.clone(), b.clone()));
                    judgements.push(Constraint::OrderGe(b.clone(), a.clone()));
                }
            }
            let lifted: Vec<Constraint> = judgements.iter().filter_map(lift_judgement).collect();
            let order = PowerOrder::from_judgements(&lifted)?;
            let f = powerset_witness_extend(u, start, &order)?;
            r.witness = Some(f.encode());
            let counts: Vec<usize> = chain.iter().map(|a| f.count_in(&a.power())).collect();
            r.note = Some(format!(
                "witness counts {}",
                counts
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
            for (i, s) in strict.iter().enumerate() {
                let (p, q) = (counts[i], counts[i + 1]);
                if *s {
                    r.check(format!("count of P({}) = {p} < {q}", chain[i]), p < q);
                } else {
                    r.check(format!("count of P({}) = {p} = {q}", chain[i]), p == q);
                }
            }
            check_memberships(r, &lifted, &f)?;
        }
        Job::Fip {
            extra,
            max_subset,
            expect,
        } => {
            let mut fb = ctx.base.clone();
            for c in extra {
                fb.push(c.clone());
            }
            let budget = Budget {
                max_subset: max_subset.unwrap_or(Budget::default().max_subset),
                ..Budget::default()
            };
            let res = check_fip(&fb, u, &budget, seed);
            record_fip(r, &res);
            if let Some(e) = expect {
                r.check(
                    format!("result is {e}"),
                    r.verdict.as_deref() == Some(e.as_str()),
                );
            }
        }
        Job::Lift {
            depth,
            level,
            count,
        } => {
            let strict_of = |fb: &FilterBase| -> Vec<(ClassSpec, ClassSpec)> {
                fb.constraints()
                    .iter()
                    .filter_map(|c| match c {
                        Constraint::OrderLt(a, b) if power_depth(a) == 0 => {
                            Some((a.clone(), b.clone()))
                        }
                        _ => None,
                    })
                    .collect()
            };
            if *level + *depth as u32 > u.bound() {
                return Err(NapError::Window(format!(
                    "depth {depth} at level {level} needs sets of rank {}, beyond rank bound {}",
                    *level - 1 + *depth as u32,
                    u.bound()
                )));
            }
            let mut found = None;
            for attempt in 0..8u64 {
                let fb = staged(ctx, *level, *count, seed.wrapping_add(attempt))?;
                let strict = strict_of(&fb);
                if !strict.is_empty() {
                    found = Some((fb, strict));
                    break;
                }
            }
            let Some((mut fb, strict)) = found else {
                return Err(NapError::BudgetExhausted(
                    "the staged base kept no strict judgement".into(),
                ));
            };
            for n in 1..=*depth {
                if n >= 2 {
                    fb = lift(&fb);
                }
                let kept = strict
                    .iter()
                    .all(|(a, b)| fb.contains(&Constraint::OrderLt(power_n(a, n), power_n(b, n))));
                r.check(format!("strict order lifts to depth {n}"), kept);
                let res = check_fip(&fb, u, &Budget::default(), seed);
                r.check(
                    format!("base at depth {n} keeps the finite intersection property"),
                    res.is_witnessed(),
                );
                if n == *depth {
                    record_fip(r, &res);
                }
            }
        }
        _ => unreachable!("not a witness query"),
    }
    Ok(())
}
