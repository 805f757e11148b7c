use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nap_core::filter::fip::{sample_points, witnesses};
use nap_core::rational::render;
use nap_core::snapshot::Snapshot;
use nap_core::verdict::{
    classify_infinitesimal, compare, much_less, CompareBudget, Infinitesimal, Justification,
    Verdict,
};
use nap_core::Result;

use super::{Context, Job};
use crate::report::{Point, Record};

fn budget(seed: u64) -> CompareBudget {
    CompareBudget {
        seed,
        ..CompareBudget::default()
    }
}

/// Fills rule, cited constraints and claims from a justification.
pub fn justify(r: &mut Record, j: &Justification) {
    r.rule = Some(j.rule().name().to_string());
    match j {
        Justification::Pointwise(c) => {
            r.cited = c.cited.iter().map(|x| x.encode()).collect();
            let claims: Vec<String> = c
                .claims
                .iter()
                .map(|k| {
                    let lhs = if k.abs {
                        format!("|{}|", k.lhs)
                    } else {
                        k.lhs.to_string()
                    };
                    format!("{lhs} {} {}", k.rel, k.rhs)
                })
                .collect();
            r.note = Some(claims.join("; "));
        }
        Justification::Parametric(p) => {
            r.cited = p.fixed.iter().map(|x| x.encode()).collect();
            r.note = Some(p.describe());
        }
    }
}

fn record_verdict(r: &mut Record, v: &Verdict, expect: &Option<String>) {
    r.verdict = Some(v.label().to_string());
    match v {
        Verdict::Forced(j) | Verdict::ForcedNot(j) => justify(r, j),
        Verdict::Undetermined(ev) => {
            r.note = Some(ev.note.clone());
            r.values = ev
                .samples
                .iter()
                .map(|s| {
                    let side = |x: &Option<nap_core::Rational>| {
                        x.as_ref().map_or("undefined".to_string(), render)
                    };
                    Point {
                        snapshot: s.snapshot.encode(),
                        value: format!("{} vs {}", side(&s.lhs), side(&s.rhs)),
                    }
                })
                .collect();
        }
    }
    if let Some(e) = expect {
        r.check(format!("verdict is {e}"), v.label() == e);
    }
}

fn infinitesimal_label(i: &Infinitesimal) -> &'static str {
    match i {
        Infinitesimal::ApproxZero(_) => "approx-zero",
        Infinitesimal::NotApproxZero(_) => "not-approx-zero",
        Infinitesimal::Undetermined(_) => "undetermined",
    }
}

fn record_infinitesimal(r: &mut Record, i: &Infinitesimal) {
    r.verdict = Some(infinitesimal_label(i).to_string());
    match i {
        Infinitesimal::ApproxZero(p) => justify(r, &Justification::Parametric(p.clone())),
        Infinitesimal::NotApproxZero(Some(c)) => justify(r, &Justification::Pointwise(c.clone())),
        Infinitesimal::NotApproxZero(None) => r.note = Some("bounded away from zero".into()),
        Infinitesimal::Undetermined(why) => r.note = Some(why.clone()),
    }
}

fn sample_snapshots(ctx: &Context, count: usize, seed: u64) -> Vec<Snapshot> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = sample_points(&ctx.universe, &mut rng, 3);
    points.sort();
    points.dedup();
    let cs = ctx.base.instantiate(3, &points);
    let mut found = witnesses(&cs, &ctx.universe, count, &mut rng);
    if found.is_empty() && cs.is_empty() {
        found.push(Snapshot::new(points));
    }
    found
}

pub fn run(job: &Job, ctx: &Context, seed: u64, r: &mut Record) -> Result<()> {
    let u = &ctx.universe;
    match job {
        Job::Probability {
            germ,
            at,
            samples,
            expect,
            classify,
        } => {
            r.germ = Some(germ.to_string());
            let snaps = if at.is_empty() {
                sample_snapshots(ctx, *samples, seed)
            } else {
                at.clone()
            };
            for (i, t) in snaps.iter().enumerate() {
                t.validate(u)?;
                let v = germ.eval(t);
                let shown = v
                    .as_ref()
                    .map_or_else(|e| format!("undefined ({e})"), render);
                if let Some(want) = expect.get(i) {
                    let ok = v.as_ref().is_ok_and(|v| v == want);
                    r.check(format!("value at {} is {}", t.encode(), render(want)), ok);
                }
                r.values.push(Point {
                    snapshot: t.encode(),
                    value: shown,
                });
            }
            if *classify {
                record_infinitesimal(r, &classify_infinitesimal(germ, &ctx.base, u));
            }
        }
        Job::Compare {
            lhs,
            rel,
            rhs,
            expect,
        } => {
            r.germ = Some(format!("{lhs} {rel} {rhs}"));
            let v = compare(lhs, *rel, rhs, &ctx.base, u, &budget(seed))?;
            record_verdict(r, &v, expect);
        }
        Job::Infinitesimal { germ, expect } => {
            r.germ = Some(germ.to_string());
            let i = classify_infinitesimal(germ, &ctx.base, u);
            record_infinitesimal(r, &i);
            if let Some(e) = expect {
                r.check(
                    format!("classification is {e}"),
                    infinitesimal_label(&i) == e,
                );
            }
        }
        Job::MuchLess { lhs, rhs, expect } => {
            r.germ = Some(format!("{lhs} << {rhs}"));
            let v = much_less(lhs, rhs, &ctx.base, u, &budget(seed))?;
            record_verdict(r, &v, expect);
        }
        _ => unreachable!("not a germ query"),
    }
    Ok(())
}
