//! Scenario files: TOML documents checked field by field before anything runs.

use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::report::Format;

/// The published schema for scenario files.
pub const SCHEMA: &str = include_str!("../schema/scenario.schema.json");

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    pub universe: UniverseSpec,
    #[serde(default)]
    pub tiers: Option<TierSpec>,
    #[serde(default)]
    pub base: BaseSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, rename = "query")]
    pub queries: Vec<Query>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Hf,
    Ordinal,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniverseSpec {
    pub mode: ModeName,
    pub bound: u32,
}

/// The bootstrap desk: tier thresholds over the naturals `0..states`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierSpec {
    pub thresholds: Vec<usize>,
    #[serde(default = "default_states")]
    pub states: usize,
    #[serde(default)]
    pub lattice: Vec<u32>,
}

fn default_states() -> usize {
    16
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builder {
    #[default]
    Fineness,
    Ordinal,
    Superreg,
    Empty,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSpec {
    #[serde(default)]
    pub builder: Builder,
    /// Ratio families for the superregular builder.
    #[serde(default)]
    pub pairs: Vec<PairSpec>,
    /// Extra constraints in their text form.
    #[serde(default)]
    pub constraints: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub small: String,
    pub large: String,
    #[serde(default)]
    pub n: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_format")]
    pub format: Format,
    #[serde(default)]
    pub parallel: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            format: Format::Json,
            parallel: false,
        }
    }
}

fn default_format() -> Format {
    Format::Json
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    Superreg,
    Ordinal,
    Powerset,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Query {
    /// `Pr(θ∈A)` or `Pr(θ∈A | θ∈B)`, evaluated on snapshots.
    Probability {
        #[serde(default)]
        id: Option<String>,
        event: String,
        #[serde(default)]
        given: Option<String>,
        #[serde(default)]
        rv: Option<String>,
        /// Snapshots to evaluate at; witnesses of the base when empty.
        #[serde(default)]
        at: Vec<String>,
        #[serde(default)]
        samples: Option<usize>,
        /// Expected values at `at`, as `p/q`.
        #[serde(default)]
        expect: Vec<String>,
        #[serde(default)]
        classify: bool,
    },
    Compare {
        #[serde(default)]
        id: Option<String>,
        lhs: String,
        rel: String,
        rhs: String,
        #[serde(default)]
        expect: Option<String>,
    },
    Infinitesimal {
        #[serde(default)]
        id: Option<String>,
        germ: String,
        #[serde(default)]
        expect: Option<String>,
    },
    MuchLess {
        #[serde(default)]
        id: Option<String>,
        lhs: String,
        rhs: String,
        #[serde(default)]
        expect: Option<String>,
    },
    Witness {
        #[serde(default)]
        id: Option<String>,
        construction: Construction,
        #[serde(default)]
        pins: Vec<String>,
        #[serde(default)]
        pairs: Vec<PairSpec>,
        #[serde(default)]
        k: Option<u64>,
        #[serde(default)]
        l: Option<u64>,
        #[serde(default)]
        m: Option<u64>,
        /// Power-set construction: the level and number of random pairs.
        #[serde(default)]
        level: Option<u32>,
        #[serde(default)]
        count: Option<usize>,
        /// Power-set construction: an explicit chain of base classes and the
        /// relations between neighbours (`<` or `=`).
        #[serde(default)]
        chain: Vec<String>,
        #[serde(default)]
        relations: Vec<String>,
        /// Starting snapshot for the power-set chain.
        #[serde(default)]
        start: Option<String>,
    },
    Fip {
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        constraints: Vec<String>,
        #[serde(default)]
        max_subset: Option<usize>,
        #[serde(default)]
        expect: Option<String>,
    },
    Lift {
        #[serde(default)]
        id: Option<String>,
        depth: usize,
        #[serde(default)]
        level: Option<u32>,
        #[serde(default)]
        count: Option<usize>,
    },
    Coherence {
        #[serde(default)]
        id: Option<String>,
        event: String,
        small: u32,
        large: u32,
    },
    Restriction {
        #[serde(default)]
        id: Option<String>,
    },
    Counterexample {
        #[serde(default)]
        id: Option<String>,
    },
}

impl Query {
    pub fn kind(&self) -> &'static str {
        match self {
            Query::Probability { .. } => "probability",
            Query::Compare { .. } => "compare",
            Query::Infinitesimal { .. } => "infinitesimal",
            Query::MuchLess { .. } => "much-less",
            Query::Witness { .. } => "witness",
            Query::Fip { .. } => "fip",
            Query::Lift { .. } => "lift",
            Query::Coherence { .. } => "coherence",
            Query::Restriction { .. } => "restriction",
            Query::Counterexample { .. } => "counterexample",
        }
    }

    pub fn id(&self) -> Option<&str> {
        match self {
            Query::Probability { id, .. }
            | Query::Compare { id, .. }
            | Query::Infinitesimal { id, .. }
            | Query::MuchLess { id, .. }
            | Query::Witness { id, .. }
            | Query::Fip { id, .. }
            | Query::Lift { id, .. }
            | Query::Coherence { id, .. }
            | Query::Restriction { id }
            | Query::Counterexample { id } => id.as_deref(),
        }
    }

    pub fn needs_tiers(&self) -> bool {
        matches!(
            self,
            Query::Coherence { .. } | Query::Restriction { .. } | Query::Counterexample { .. }
        )
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
        s.check_shape()?;
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Scenario::parse(&text)
    }

    /// Checks the constraints the schema states beyond field names and types.
    fn check_shape(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Validation(m));
        let mut ids = std::collections::BTreeSet::new();
        for (i, q) in self.queries.iter().enumerate() {
            if let Some(id) = q.id() {
                if !ids.insert(id.to_string()) {
                    return bad(format!("query id '{id}' is used twice"));
                }
            }
            if q.needs_tiers() && self.tiers.is_none() {
                return bad(format!(
                    "query {} ({}) needs a [tiers] table",
                    i + 1,
                    q.kind()
                ));
            }
            if let Query::Probability { at, expect, .. } = q {
                if !expect.is_empty() && expect.len() != at.len() {
                    return bad(format!(
                        "query {}: expect needs one value per snapshot in at",
                        i + 1
                    ));
                }
            }
            if let Query::Witness {
                chain, relations, ..
            } = q
            {
                if !chain.is_empty() && relations.len() + 1 != chain.len() {
                    return bad(format!(
                        "query {}: a chain of n classes needs n-1 relations",
                        i + 1
                    ));
                }
            }
        }
        Ok(())
    }
}
