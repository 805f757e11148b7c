//! Turns a scenario into a report. Inputs are parsed up front so malformed
//! text is a validation error; everything after that lands in the report.

mod desk;
mod germs;
mod witness;

use std::time::Instant;

use nap_core::bootstrap::{lattice_base, Frame, Mask, TierConfig, TieredProb};
use nap_core::filter::{fineness_base, Constraint, Family, FilterBase, OrdinalSpec, RatioPair};
use nap_core::germ::{conditional_germ, germ_of_event, Germ};
use nap_core::snapshot::Snapshot;
use nap_core::text::{parse_class, parse_rv, parse_value};
use nap_core::universe::{ClassSpec, Mode, RandomVariable, SetValue, Universe};
use nap_core::verdict::Relation;
use nap_core::Rational;

use crate::error::{invalid, CliError, Result};
use crate::report::{Record, Report, UniverseInfo};
use crate::scenario::{Builder, Construction, ModeName, PairSpec, Query, Scenario};

/// Everything queries share: the universe, the filter base and the optional desk.
pub struct Context {
    pub universe: Universe,
    pub base: FilterBase,
    pub seed: u64,
    pub desk: Option<Desk>,
}

/// The bootstrap desk: tiered windows over the naturals `0..states`.
pub struct Desk {
    pub config: TierConfig,
    pub top: Snapshot,
    pub lattice: Vec<Mask>,
    pub tiered: TieredProb,
}

impl Desk {
    pub fn frame(&self) -> &Frame {
        self.tiered.frame()
    }
}

/// A query with its inputs parsed.
pub enum Job {
    Probability {
        germ: Germ,
        at: Vec<Snapshot>,
        samples: usize,
        expect: Vec<Rational>,
        classify: bool,
    },
    Compare {
        lhs: Germ,
        rel: Relation,
        rhs: Germ,
        expect: Option<String>,
    },
    Infinitesimal {
        germ: Germ,
        expect: Option<String>,
    },
    MuchLess {
        lhs: Germ,
        rhs: Germ,
        expect: Option<String>,
    },
    Superreg {
        pins: Vec<SetValue>,
        pairs: Vec<RatioPair>,
    },
    Ordinal(OrdinalSpec),
    PowersetLevel {
        level: u32,
        count: usize,
    },
    PowersetChain {
        chain: Vec<ClassSpec>,
        strict: Vec<bool>,
        start: Snapshot,
    },
    Fip {
        extra: Vec<Constraint>,
        max_subset: Option<usize>,
        expect: Option<String>,
    },
    Lift {
        depth: usize,
        level: u32,
        count: usize,
    },
    Coherence {
        event: ClassSpec,
        small: Mask,
        large: Mask,
    },
    Restriction,
    Counterexample,
}

pub struct Compiled {
    pub id: String,
    pub kind: &'static str,
    pub inputs: Vec<(String, String)>,
    pub job: Job,
}

fn parse<T>(what: &str, text: &str, f: impl Fn(&str) -> nap_core::Result<T>) -> Result<T> {
    f(text).map_err(|e| CliError::Validation(format!("{what} '{text}': {e}")))
}

pub fn class(text: &str) -> Result<ClassSpec> {
    parse("class", text, parse_class)
}

fn germ(text: &str) -> Result<Germ> {
    parse("germ", text, Germ::decode)
}

fn value(text: &str) -> Result<SetValue> {
    parse("value", text, parse_value)
}

fn snapshot(text: &str) -> Result<Snapshot> {
    parse("snapshot", text, Snapshot::decode)
}

fn pair(p: &PairSpec, default_n: u64) -> Result<RatioPair> {
    Ok(RatioPair::new(
        &class(&p.small)?,
        &class(&p.large)?,
        p.n.unwrap_or(default_n),
    ))
}

fn expectation(e: &Option<String>, allowed: &[&str]) -> Result<Option<String>> {
    match e {
        Some(x) if !allowed.contains(&x.as_str()) => Err(CliError::Validation(format!(
            "expect '{x}' is not one of {}",
            allowed.join(", ")
        ))),
        other => Ok(other.clone()),
    }
}

const VERDICTS: [&str; 3] = ["forced", "forced-not", "undetermined"];

impl Context {
    pub fn build(s: &Scenario) -> Result<Context> {
        let mode = match s.universe.mode {
            ModeName::Hf => Mode::Hf,
            ModeName::Ordinal => Mode::Ordinal,
        };
        let universe = Universe::new(mode, s.universe.bound).map_err(invalid)?;
        let mut base = match s.base.builder {
            Builder::Fineness => fineness_base(None),
            Builder::Empty => FilterBase::new(),
            Builder::Ordinal => {
                if mode != Mode::Ordinal {
                    return Err(CliError::Validation(
                        "the ordinal base needs an ordinal universe".into(),
                    ));
                }
                let mut fb = fineness_base(None);
                fb.push(Constraint::Parametric(Family::Interval));
                fb.push(Constraint::Parametric(Family::Weight));
                fb
            }
            Builder::Superreg => {
                let mut fb = fineness_base(None);
                if s.base.pairs.is_empty() {
                    return Err(CliError::Validation(
                        "the superreg base needs at least one pair".into(),
                    ));
                }
                for p in &s.base.pairs {
                    fb.push(Constraint::Parametric(Family::Ratio(
                        class(&p.small)?,
                        class(&p.large)?,
                    )));
                }
                fb
            }
        };
        for c in &s.base.constraints {
            base.push(parse("constraint", c, Constraint::decode)?);
        }
        let desk = match &s.tiers {
            None => None,
            Some(t) => {
                if t.states == 0 || t.states > nap_core::bootstrap::MAX_WINDOW {
                    return Err(CliError::Validation(format!(
                        "tiers.states must be between 1 and {}",
                        nap_core::bootstrap::MAX_WINDOW
                    )));
                }
                let config = TierConfig::new(t.thresholds.clone()).map_err(invalid)?;
                let top = Snapshot::new((0..t.states as u64).map(SetValue::nat));
                let frame = Frame::new(config.clone(), &top).map_err(invalid)?;
                let fb = lattice_base(&frame, &t.lattice).map_err(invalid)?;
                let tiered = TieredProb::new(frame, &fb).map_err(invalid)?;
                Some(Desk {
                    config,
                    top,
                    lattice: t.lattice.clone(),
                    tiered,
                })
            }
        };
        Ok(Context {
            universe,
            base,
            seed: s.seed,
            desk,
        })
    }

    pub fn universe_info(&self) -> UniverseInfo {
        UniverseInfo {
            mode: match self.universe.mode() {
                Mode::Hf => "hf".into(),
                Mode::Ordinal => "ordinal".into(),
            },
            bound: self.universe.bound(),
        }
    }
}

pub fn compile(q: &Query, index: usize) -> Result<Compiled> {
    let mut inputs: Vec<(String, String)> = Vec::new();
    let mut echo = |k: &str, v: &dyn ToString| inputs.push((k.to_string(), v.to_string()));
    let job = match q {
        Query::Probability {
            event,
            given,
            rv,
            at,
            samples,
            expect,
            classify,
            ..
        } => {
            let theta = match rv {
                Some(r) => parse("random variable", r, parse_rv)?,
                None => RandomVariable::Identity,
            };
            let a = class(event)?;
            let g = match given {
                Some(b) => conditional_germ(&theta, &a, &theta, &class(b)?),
                None => germ_of_event(&theta, &a),
            };
            echo("event", event);
            if let Some(b) = given {
                echo("given", b);
            }
            echo("rv", &theta);
            Job::Probability {
                germ: g,
                at: at.iter().map(|t| snapshot(t)).collect::<Result<_>>()?,
                samples: samples.unwrap_or(4),
                expect: expect
                    .iter()
                    .map(|x| parse("rational", x, nap_core::rational::parse))
                    .collect::<Result<_>>()?,
                classify: *classify,
            }
        }
        Query::Compare {
            lhs,
            rel,
            rhs,
            expect,
            ..
        } => {
            echo("lhs", lhs);
            echo("rel", rel);
            echo("rhs", rhs);
            Job::Compare {
                lhs: germ(lhs)?,
                rel: parse("relation", rel, Relation::parse)?,
                rhs: germ(rhs)?,
                expect: expectation(expect, &VERDICTS)?,
            }
        }
        Query::Infinitesimal {
            germ: g, expect, ..
        } => {
            echo("germ", g);
            Job::Infinitesimal {
                germ: germ(g)?,
                expect: expectation(expect, &["approx-zero", "not-approx-zero", "undetermined"])?,
            }
        }
        Query::MuchLess {
            lhs, rhs, expect, ..
        } => {
            echo("lhs", lhs);
            echo("rhs", rhs);
            Job::MuchLess {
                lhs: germ(lhs)?,
                rhs: germ(rhs)?,
                expect: expectation(expect, &VERDICTS)?,
            }
        }
        Query::Witness {
            construction,
            pins,
            pairs,
            k,
            l,
            m,
            level,
            count,
            chain,
            relations,
            start,
            ..
        } => {
            echo("construction", &format!("{construction:?}").to_lowercase());
            if !pins.is_empty() {
                echo("pins", &pins.join(", "));
            }
            let pins = pins.iter().map(|p| value(p)).collect::<Result<Vec<_>>>()?;
            match construction {
                Construction::Superreg => {
                    if pairs.is_empty() {
                        return Err(CliError::Validation(
                            "a superreg witness needs at least one pair".into(),
                        ));
                    }
                    Job::Superreg {
                        pins,
                        pairs: pairs
                            .iter()
                            .map(|p| pair(p, k.unwrap_or(1)))
                            .collect::<Result<_>>()?,
                    }
                }
                Construction::Ordinal => {
                    let (k, l, m) = (k.unwrap_or(1), l.unwrap_or(1), m.unwrap_or(1));
                    echo("k", &k);
                    echo("l", &l);
                    echo("m", &m);
                    Job::Ordinal(OrdinalSpec {
                        pins,
                        k,
                        l,
                        m,
                        pairs: pairs
                            .iter()
                            .map(|p| Ok((class(&p.small)?, class(&p.large)?)))
                            .collect::<Result<_>>()?,
                    })
                }
                Construction::Powerset if !chain.is_empty() => {
                    echo("chain", &chain.join(" ; "));
                    echo("relations", &relations.join(" "));
                    Job::PowersetChain {
                        chain: chain.iter().map(|c| class(c)).collect::<Result<_>>()?,
                        strict: relations.iter().map(|r| r == "<").collect(),
                        start: match start {
                            Some(t) => snapshot(t)?,
                            None => Snapshot::new(pins),
                        },
                    }
                }
                Construction::Powerset => {
                    let (level, count) = (level.unwrap_or(3), count.unwrap_or(3));
                    echo("level", &level);
                    echo("count", &count);
                    Job::PowersetLevel { level, count }
                }
            }
        }
        Query::Fip {
            constraints,
            max_subset,
            expect,
            ..
        } => {
            if !constraints.is_empty() {
                echo("constraints", &constraints.join("; "));
            }
            Job::Fip {
                extra: constraints
                    .iter()
                    .map(|c| parse("constraint", c, Constraint::decode))
                    .collect::<Result<_>>()?,
                max_subset: *max_subset,
                expect: expectation(expect, &["witnessed", "refuted", "unknown"])?,
            }
        }
        Query::Lift {
            depth,
            level,
            count,
            ..
        } => {
            let (level, count) = (level.unwrap_or(3), count.unwrap_or(3));
            echo("depth", depth);
            echo("level", &level);
            echo("count", &count);
            Job::Lift {
                depth: *depth,
                level,
                count,
            }
        }
        Query::Coherence {
            event,
            small,
            large,
            ..
        } => {
            echo("event", event);
            echo("small", &format!("{small:#06x}"));
            echo("large", &format!("{large:#06x}"));
            Job::Coherence {
                event: class(event)?,
                small: *small,
                large: *large,
            }
        }
        Query::Restriction { .. } => Job::Restriction,
        Query::Counterexample { .. } => Job::Counterexample,
    };
    Ok(Compiled {
        id: q
            .id()
            .map_or_else(|| format!("q{}", index + 1), str::to_string),
        kind: q.kind(),
        inputs,
        job,
    })
}

impl Compiled {
    pub fn run(&self, ctx: &Context, seed: u64) -> Record {
        let mut r = Record::new(&self.id, self.kind);
        for (k, v) in &self.inputs {
            r.input(k, v);
        }
        let start = Instant::now();
        let outcome = match &self.job {
            Job::Probability { .. }
            | Job::Compare { .. }
            | Job::Infinitesimal { .. }
            | Job::MuchLess { .. } => germs::run(&self.job, ctx, seed, &mut r),
            Job::Superreg { .. }
            | Job::Ordinal(_)
            | Job::PowersetLevel { .. }
            | Job::PowersetChain { .. }
            | Job::Fip { .. }
            | Job::Lift { .. } => witness::run(&self.job, ctx, seed, &mut r),
            Job::Coherence { .. } | Job::Restriction | Job::Counterexample => {
                desk::run(&self.job, ctx, seed, &mut r)
            }
        };
        if let Err(e) = outcome {
            r.fail_with(e);
        }
        r.elapsed_us = start.elapsed().as_micros() as u64;
        r
    }
}

/// Seeds differ per query so reordering queries does not change any one of them.
fn query_seed(base: u64, id: &str) -> u64 {
    id.bytes().fold(base ^ 0x9e37_79b9_7f4a_7c15, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn run_scenario(s: &Scenario, command: &str) -> Result<Report> {
    let ctx = Context::build(s)?;
    let jobs: Vec<Compiled> = s
        .queries
        .iter()
        .enumerate()
        .map(|(i, q)| compile(q, i))
        .collect::<Result<_>>()?;
    let mut report = Report::new(command, s.seed, ctx.universe_info(), ctx.base.encode());
    let records: Vec<Record> = if s.output.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .iter()
                .map(|j| {
                    let ctx = &ctx;
                    scope.spawn(move || j.run(ctx, query_seed(ctx.seed, &j.id)))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .map_err(|_| CliError::Internal("a query thread panicked".into()))
                })
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        jobs.iter()
            .map(|j| j.run(&ctx, query_seed(ctx.seed, &j.id)))
            .collect()
    };
    for r in records {
        report.push(r);
    }
    Ok(report)
}
