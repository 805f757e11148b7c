//! Command-line flags and their translation into scenarios.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, Result};
use crate::report::Format;
use crate::scenario::{
    BaseSpec, Builder, Construction, ModeName, OutputSpec, PairSpec, Query, Scenario, TierSpec,
    UniverseSpec,
};

#[derive(Debug, Parser)]
#[command(
    name = "nap",
    version,
    about = "Exact non-Archimedean probabilities on a desk-scale universe"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate Pr(θ∈A) or Pr(θ∈A | θ∈B) on snapshots of the filter base.
    Query(QueryArgs),
    /// Build a snapshot by one of the witness constructions.
    Witness {
        #[command(subcommand)]
        kind: WitnessKind,
    },
    /// Check a property of a filter base or of the tiered desk.
    Check {
        #[command(subcommand)]
        kind: CheckKind,
    },
    /// Run a canned demonstration.
    Demo {
        #[command(subcommand)]
        kind: DemoKind,
    },
    /// Run the invariant suite on seeded random cases.
    Audit {
        /// Random cases per property.
        #[arg(long, default_value_t = 50)]
        budget: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run every query of a scenario file.
    Run {
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scenario's output format.
        #[arg(long, value_enum)]
        out: Option<OutArg>,
        /// Run independent queries on separate threads.
        #[arg(long)]
        parallel: bool,
        /// Write the report here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
    /// Print the scenario file schema.
    Schema,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutArg {
    Json,
    Csv,
}

impl From<OutArg> for Format {
    fn from(o: OutArg) -> Format {
        match o {
            OutArg::Json => Format::Json,
            OutArg::Csv => Format::Csv,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum UniverseArg {
    Hf,
    Ordinal,
}

/// Flags every subcommand accepts.
#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub out: OutArg,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct UniverseArgs {
    #[arg(long, value_enum, default_value = "ordinal")]
    pub universe: UniverseArg,
    /// Rank bound of the hereditarily finite universe.
    #[arg(long, conflicts_with = "omega_bound")]
    pub rank: Option<u32>,
    /// Ordinals below ω·n.
    #[arg(long = "omega-bound")]
    pub omega_bound: Option<u32>,
}

impl UniverseArgs {
    fn spec(&self) -> Result<UniverseSpec> {
        match (self.universe, self.rank, self.omega_bound) {
            (UniverseArg::Hf, _, Some(_)) => Err(CliError::Validation(
                "--omega-bound needs --universe ordinal".into(),
            )),
            (UniverseArg::Ordinal, Some(_), _) => {
                Err(CliError::Validation("--rank needs --universe hf".into()))
            }
            (UniverseArg::Hf, r, None) => Ok(UniverseSpec {
                mode: ModeName::Hf,
                bound: r.unwrap_or(4),
            }),
            (UniverseArg::Ordinal, None, b) => Ok(UniverseSpec {
                mode: ModeName::Ordinal,
                bound: b.unwrap_or(3),
            }),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BaseArgs {
    /// `fineness`, `ordinal`, `superreg`, `empty`, or a filter base written `{c1; c2; ...}`.
    #[arg(long, default_value = "fineness")]
    pub base: String,
    /// Ratio family `SMALL|LARGE` for the superregular base.
    #[arg(long = "family")]
    pub families: Vec<String>,
}

impl BaseArgs {
    fn spec(&self) -> Result<BaseSpec> {
        let pairs = self
            .families
            .iter()
            .map(|p| split_pair(p))
            .collect::<Result<Vec<_>>>()?;
        let builder = match self.base.as_str() {
            "fineness" => Builder::Fineness,
            "ordinal" => Builder::Ordinal,
            "superreg" => Builder::Superreg,
            "empty" => Builder::Empty,
            text if text.trim_start().starts_with('{') => {
                let fb = nap_core::filter::FilterBase::decode(text)
                    .map_err(|e| CliError::Validation(format!("base '{text}': {e}")))?;
                return Ok(BaseSpec {
                    builder: Builder::Empty,
                    pairs,
                    constraints: fb.constraints().iter().map(|c| c.encode()).collect(),
                });
            }
            other => return Err(CliError::Validation(format!("unknown base '{other}'"))),
        };
        Ok(BaseSpec {
            builder,
            pairs,
            constraints: Vec::new(),
        })
    }
}

/// `SMALL|LARGE` or `SMALL|LARGE|n`.
fn split_pair(text: &str) -> Result<PairSpec> {
    let parts: Vec<&str> = text.split('|').map(str::trim).collect();
    let n =
        match parts.get(2) {
            None => None,
            Some(n) => Some(n.parse().map_err(|_| {
                CliError::Validation(format!("pair '{text}': '{n}' is not a count"))
            })?),
        };
    match parts.as_slice() {
        [small, large] | [small, large, _] => Ok(PairSpec {
            small: small.to_string(),
            large: large.to_string(),
            n,
        }),
        _ => Err(CliError::Validation(format!(
            "pair '{text}' must be SMALL|LARGE or SMALL|LARGE|n"
        ))),
    }
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub universe: UniverseArgs,
    #[arg(long)]
    pub event: String,
    #[arg(long)]
    pub given: Option<String>,
    #[arg(long)]
    pub rv: Option<String>,
    #[command(flatten)]
    pub base: BaseArgs,
    /// Snapshot to evaluate at; repeatable. Witnesses of the base are used when absent.
    #[arg(long)]
    pub at: Vec<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Also classify the germ as infinitesimal or not.
    #[arg(long)]
    pub classify: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum WitnessKind {
    /// A common member of ratio constraints and pins.
    Superreg {
        #[command(flatten)]
        universe: UniverseArgs,
        #[arg(long = "pin")]
        pins: Vec<String>,
        /// `SMALL|LARGE|n`; repeatable.
        #[arg(long = "pair", required = true)]
        pairs: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// A snapshot meeting the ratio, interval and weight constraints.
    Ordinal {
        #[arg(long = "omega-bound", default_value_t = 3)]
        omega_bound: u32,
        #[arg(long = "pin")]
        pins: Vec<String>,
        /// `SMALL|LARGE`; repeatable.
        #[arg(long = "pair")]
        pairs: Vec<String>,
        #[arg(long, default_value_t = 1)]
        k: u64,
        #[arg(long, default_value_t = 1)]
        l: u64,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[command(flatten)]
        common: Common,
    },
    /// The staged power-set base on one level, or a witness for a chain of power classes.
    Powerset {
        #[arg(long, default_value_t = 6)]
        rank: u32,
        #[arg(long, default_value_t = 4)]
        level: u32,
        #[arg(long, default_value_t = 3)]
        count: usize,
        /// Base classes of the chain; repeatable.
        #[arg(long = "chain")]
        chain: Vec<String>,
        /// Relations between neighbours, `<` or `=`; repeatable.
        #[arg(long = "relation")]
        relations: Vec<String>,
        /// Snapshot to extend.
        #[arg(long)]
        start: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Args)]
pub struct DeskArgs {
    /// Tier thresholds, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5,7,11,17")]
    pub tiers: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    pub states: usize,
    /// Windows of the lattice as bit masks over the states, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_mask)]
    pub lattice: Vec<u32>,
}

impl DeskArgs {
    fn spec(&self) -> TierSpec {
        TierSpec {
            thresholds: self.tiers.clone(),
            states: self.states,
            lattice: self.lattice.clone(),
        }
    }
}

fn parse_mask(s: &str) -> std::result::Result<u32, String> {
    let s = s.trim();
    match s.strip_prefix("0x") {
        Some(hex) => u32::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("'{s}' is not a mask: {e}"))
}

#[derive(Debug, Subcommand)]
pub enum CheckKind {
    /// Budgeted finite intersection property of a filter base.
    Fip {
        #[command(flatten)]
        universe: UniverseArgs,
        #[command(flatten)]
        base: BaseArgs,
        /// Extra constraint; repeatable.
        #[arg(long = "constraint")]
        constraints: Vec<String>,
        #[arg(long = "max-subset")]
        max_subset: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Tiered probability on a small window against conditioning on a large one.
    Coherence {
        #[command(flatten)]
        desk: DeskArgs,
        #[arg(long)]
        event: String,
        #[arg(long, value_parser = parse_mask)]
        small: u32,
        #[arg(long, value_parser = parse_mask)]
        large: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Restriction along every window chain of the lattice, plus the filter audit.
    Restriction {
        #[command(flatten)]
        desk: DeskArgs,
        #[command(flatten)]
        common: Common,
    },
    /// A base whose restriction to small windows contains the empty set.
    Counterexample {
        #[command(flatten)]
        desk: DeskArgs,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Subcommand)]
pub enum DemoKind {
    /// A strict subclass gets strictly smaller probability.
    Euclidean {
        #[arg(long, default_value = "diff(Nat,set[0])")]
        small: String,
        #[arg(long, default_value = "Nat")]
        large: String,
        #[command(flatten)]
        common: Common,
    },
    /// Even numbers and their shifted copy are equinumerous but differ in probability.
    HumeFailure {
        #[command(flatten)]
        common: Common,
    },
    /// Translating the naturals by one lowers their probability.
    TranslationFailure {
        #[command(flatten)]
        common: Common,
    },
    /// Witness counts for a chain of power classes, strict steps then a tie.
    PowersetChain {
        #[command(flatten)]
        common: Common,
    },
    /// Strict order between classes survives repeated power sets.
    PnIteration {
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn scenario(
    universe: UniverseSpec,
    base: BaseSpec,
    tiers: Option<TierSpec>,
    common: &Common,
    queries: Vec<Query>,
) -> Scenario {
    Scenario {
        seed: common.seed,
        universe,
        tiers,
        base,
        output: OutputSpec {
            format: common.out.into(),
            parallel: false,
        },
        queries,
    }
}

fn ordinal(bound: u32) -> UniverseSpec {
    UniverseSpec {
        mode: ModeName::Ordinal,
        bound,
    }
}

fn hf(bound: u32) -> UniverseSpec {
    UniverseSpec {
        mode: ModeName::Hf,
        bound,
    }
}

fn compare(id: &str, lhs: String, rel: &str, rhs: String, expect: &str) -> Query {
    Query::Compare {
        id: Some(id.into()),
        lhs,
        rel: rel.into(),
        rhs,
        expect: Some(expect.into()),
    }
}

fn pr(class: &str) -> String {
    format!("pr(id,{class})")
}

/// The chain `P(A1) < P(A2) < P(A3) = P(A4)` over hereditarily finite sets.
pub const POWERSET_CHAIN: [&str; 4] = [
    "members({#4,#9})",
    "members({#4,#9,#11})",
    "members({#4,#9,#11,#13})",
    "members({#4,#9,#11,#14})",
];

/// Scenarios for the one-shot subcommands, with the command name for the report.
pub fn to_scenario(cmd: &Command) -> Result<Option<(String, Scenario, Option<PathBuf>)>> {
    let with =
        |name: &str, s: Scenario, c: &Common| Ok(Some((name.to_string(), s, c.output.clone())));
    match cmd {
        Command::Query(q) => {
            let query = Query::Probability {
                id: Some("query".into()),
                event: q.event.clone(),
                given: q.given.clone(),
                rv: q.rv.clone(),
                at: q.at.clone(),
                samples: q.samples,
                expect: Vec::new(),
                classify: q.classify,
            };
            with(
                "query",
                scenario(
                    q.universe.spec()?,
                    q.base.spec()?,
                    None,
                    &q.common,
                    vec![query],
                ),
                &q.common,
            )
        }
        Command::Witness { kind } => match kind {
            WitnessKind::Superreg {
                universe,
                pins,
                pairs,
                common,
            } => {
                let query = Query::Witness {
                    id: Some("superreg".into()),
                    construction: Construction::Superreg,
                    pins: pins.clone(),
                    pairs: pairs.iter().map(|p| split_pair(p)).collect::<Result<_>>()?,
                    k: None,
                    l: None,
                    m: None,
                    level: None,
                    count: None,
                    chain: Vec::new(),
                    relations: Vec::new(),
                    start: None,
                };
                with(
                    "witness superreg",
                    scenario(
                        universe.spec()?,
                        BaseSpec::default(),
                        None,
                        common,
                        vec![query],
                    ),
                    common,
                )
            }
            WitnessKind::Ordinal {
                omega_bound,
                pins,
                pairs,
                k,
                l,
                m,
                common,
            } => {
                let query = Query::Witness {
                    id: Some("ordinal".into()),
                    construction: Construction::Ordinal,
                    pins: pins.clone(),
                    pairs: pairs.iter().map(|p| split_pair(p)).collect::<Result<_>>()?,
                    k: Some(*k),
                    l: Some(*l),
                    m: Some(*m),
                    level: None,
                    count: None,
                    chain: Vec::new(),
                    relations: Vec::new(),
                    start: None,
                };
                with(
                    "witness ordinal",
                    scenario(
                        ordinal(*omega_bound),
                        BaseSpec::default(),
                        None,
                        common,
                        vec![query],
                    ),
                    common,
                )
            }
            WitnessKind::Powerset {
                rank,
                level,
                count,
                chain,
                relations,
                start,
                common,
            } => {
                let query = Query::Witness {
                    id: Some("powerset".into()),
                    construction: Construction::Powerset,
                    pins: Vec::new(),
                    pairs: Vec::new(),
                    k: None,
                    l: None,
                    m: None,
                    level: Some(*level),
                    count: Some(*count),
                    chain: chain.clone(),
                    relations: relations.clone(),
                    start: start.clone(),
                };
                with(
                    "witness powerset",
                    scenario(hf(*rank), BaseSpec::default(), None, common, vec![query]),
                    common,
                )
            }
        },
        Command::Check { kind } => match kind {
            CheckKind::Fip {
                universe,
                base,
                constraints,
                max_subset,
                common,
            } => {
                let query = Query::Fip {
                    id: Some("fip".into()),
                    constraints: constraints.clone(),
                    max_subset: *max_subset,
                    expect: None,
                };
                with(
                    "check fip",
                    scenario(universe.spec()?, base.spec()?, None, common, vec![query]),
                    common,
                )
            }
            CheckKind::Coherence {
                desk,
                event,
                small,
                large,
                common,
            } => {
                let query = Query::Coherence {
                    id: Some("coherence".into()),
                    event: event.clone(),
                    small: *small,
                    large: *large,
                };
                with(
                    "check coherence",
                    scenario(
                        ordinal(3),
                        BaseSpec::default(),
                        Some(desk.spec()),
                        common,
                        vec![query],
                    ),
                    common,
                )
            }
            CheckKind::Restriction { desk, common } => {
                let query = Query::Restriction {
                    id: Some("restriction".into()),
                };
                with(
                    "check restriction",
                    scenario(
                        ordinal(3),
                        BaseSpec::default(),
                        Some(desk.spec()),
                        common,
                        vec![query],
                    ),
                    common,
                )
            }
            CheckKind::Counterexample { desk, common } => {
                let query = Query::Counterexample {
                    id: Some("counterexample".into()),
                };
                with(
                    "check counterexample",
                    scenario(
                        ordinal(3),
                        BaseSpec::default(),
                        Some(desk.spec()),
                        common,
                        vec![query],
                    ),
                    common,
                )
            }
        },
        Command::Demo { kind } => match kind {
            DemoKind::Euclidean {
                small,
                large,
                common,
            } => {
                let q = compare("euclidean", pr(small), "<", pr(large), "forced");
                with(
                    "demo euclidean",
                    scenario(ordinal(3), BaseSpec::default(), None, common, vec![q]),
                    common,
                )
            }
            DemoKind::HumeFailure { common } => {
                let q = compare(
                    "hume-failure",
                    pr("image(invar,Even)"),
                    "<",
                    pr("Even"),
                    "forced",
                );
                with(
                    "demo hume-failure",
                    scenario(ordinal(3), BaseSpec::default(), None, common, vec![q]),
                    common,
                )
            }
            DemoKind::TranslationFailure { common } => {
                let q = compare(
                    "translation-failure",
                    pr("translate(Nat,1)"),
                    "<",
                    pr("Nat"),
                    "forced",
                );
                with(
                    "demo translation-failure",
                    scenario(ordinal(3), BaseSpec::default(), None, common, vec![q]),
                    common,
                )
            }
            DemoKind::PowersetChain { common } => {
                let q = Query::Witness {
                    id: Some("powerset-chain".into()),
                    construction: Construction::Powerset,
                    pins: Vec::new(),
                    pairs: Vec::new(),
                    k: None,
                    l: None,
                    m: None,
                    level: None,
                    count: None,
                    chain: POWERSET_CHAIN.iter().map(|c| c.to_string()).collect(),
                    relations: vec!["<".into(), "<".into(), "=".into()],
                    start: Some("[{#4},{#9}]".into()),
                };
                with(
                    "demo powerset-chain",
                    scenario(hf(6), BaseSpec::default(), None, common, vec![q]),
                    common,
                )
            }
            DemoKind::PnIteration { depth, common } => {
                let q = Query::Lift {
                    id: Some("pn-iteration".into()),
                    depth: *depth,
                    level: Some(3),
                    count: Some(3),
                };
                with(
                    "demo pn-iteration",
                    scenario(hf(6), BaseSpec::default(), None, common, vec![q]),
                    common,
                )
            }
        },
        Command::Audit { .. }
        | Command::Run { .. }
        | Command::Validate { .. }
        | Command::Schema => Ok(None),
    }
}
