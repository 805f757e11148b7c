use nap_core::bootstrap::{
    audit_base, coherence_check, non_restriction_counterexample, restrict_base, AuditBudget,
    CoherenceBudget, Mask,
};
use nap_core::rational::render;
use nap_core::{NapError, Result};

use super::{Context, Desk, Job};
use crate::report::{Point, Record};

fn desk(ctx: &Context) -> Result<&Desk> {
    ctx.desk
        .as_ref()
        .ok_or_else(|| NapError::InvalidTiers("this query needs a tier configuration".into()))
}

fn restriction(d: &Desk, seed: u64, r: &mut Record) -> Result<()> {
    let frame = d.frame();
    let tp = &d.tiered;
    let mut windows: Vec<Mask> = vec![frame.top()];
    windows.extend(d.lattice.iter().copied().filter(|w| *w != frame.top()));
    let below = |a: Mask, b: Mask| a & !b == 0 && a != b && frame.tier(a) < frame.tier(b);
    let (mut chains, mut agree) = (0usize, 0usize);
    for &s in &windows {
        let base_s = tp.restricted(s)?;
        for &m in windows.iter().filter(|m| below(**m, s)) {
            let via = restrict_base(frame, &base_s, m)?;
            for &t in windows.iter().filter(|t| below(**t, m)) {
                chains += 1;
                if restrict_base(frame, &via, t)? == *tp.restricted(t)? {
                    agree += 1;
                }
            }
        }
    }
    r.check(
        format!("restricting in steps agrees with restricting once on {agree} of {chains} chains"),
        agree == chains,
    );
    let budget = AuditBudget::for_config(&d.config, seed);
    for &w in &windows {
        let audit = audit_base(frame, &*tp.restricted(w)?, &budget);
        for (label, pass) in audit.labels() {
            r.check(format!("{w:#06x} {label}"), pass);
        }
    }
    r.note = Some(format!("{} windows, {chains} chains", windows.len()));
    Ok(())
}

pub fn run(job: &Job, ctx: &Context, seed: u64, r: &mut Record) -> Result<()> {
    let d = desk(ctx)?;
    let frame = d.frame();
    match job {
        Job::Coherence {
            event,
            small,
            large,
        } => {
            let budget = CoherenceBudget {
                seed,
                ..CoherenceBudget::default()
            };
            let report = coherence_check(
                event,
                &frame.snapshot(*small),
                &frame.snapshot(*large),
                &d.tiered,
                &budget,
            )?;
            let passed = report.points.iter().filter(|p| p.pass).count();
            for p in &report.points {
                r.values.push(Point {
                    snapshot: p.snapshot.encode(),
                    value: p
                        .value
                        .as_ref()
                        .map_or_else(|| "undefined".to_string(), render),
                });
            }
            r.check(
                format!(
                    "conditioning agrees with restriction at {passed} of {} points",
                    report.points.len()
                ),
                report.passed(),
            );
        }
        Job::Restriction => restriction(d, seed, r)?,
        Job::Counterexample => {
            let k = AuditBudget::for_config(&d.config, seed).k;
            let c = non_restriction_counterexample(&d.config, &d.top, k)?;
            r.cited = vec![c.big.encode(), c.repair.encode()];
            r.check(
                "broken base has the finite intersection property on the top window",
                c.top_fip,
            );
            r.check(
                "its lowest-tier restriction contains the empty set",
                c.restriction_has_empty,
            );
            r.check(
                "repaired base has the finite intersection property",
                c.repaired_fip,
            );
            r.check(
                "repaired restriction excludes the empty set",
                !c.repaired_has_empty,
            );
            r.check(
                "keeping both constraints loses the finite intersection property",
                !c.both_fip,
            );
        }
        _ => unreachable!("not a desk query"),
    }
    Ok(())
}
