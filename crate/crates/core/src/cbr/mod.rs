//! The retrieve / adapt / retain cycle.
//!
//! Every random draw comes from a stream derived from the configured seed and
//! a textual tag naming its purpose (and, where relevant, the case id), so the
//! result never depends on evaluation order or thread count.

mod adapt;
mod casebase;
mod retain;
mod retrieve;

pub use adapt::{AdaptationResult, Binding};
pub use casebase::{CaseBase, INDEX_FILE};
pub use retain::similarity;
pub use retrieve::{sat, smatch, CaseScore, RankedCase, RetrievalResult, ScoreTable, Status};

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::expand::{expand_nested, ExpansionConfig, ExpansionError, DEFAULT_MAX_ATTEMPTS_FACTOR};
use crate::format::FormatError;
use crate::kb::{KnowledgeBase, SynsetService};
use crate::ontology::{Ontology, OntologyError};
use crate::sme::{total_of, GMap, Matcher, SmeConfig, SmeError};

#[derive(Debug, Clone, PartialEq)]
pub struct CbrConfig {
    pub eta_max: u32,
    pub samples_per_eta: usize,
    pub sigma: f64,
    pub theta: f64,
    pub seed: u64,
    pub allow_same_domain: bool,
    /// Score cases and pool members on the rayon pool.
    pub parallel: bool,
    pub max_attempts_factor: usize,
}

impl Default for CbrConfig {
    fn default() -> Self {
        Self {
            eta_max: 6,
            samples_per_eta: 8,
            sigma: 0.3,
            theta: 0.8,
            seed: 0,
            allow_same_domain: false,
            parallel: true,
            max_attempts_factor: DEFAULT_MAX_ATTEMPTS_FACTOR,
        }
    }
}

impl CbrConfig {
    pub fn validate(&self) -> Result<(), CbrError> {
        let bad = |m: &str| Err(CbrError::Config(m.to_string()));
        if self.eta_max < 1 {
            return bad("eta_max must be at least 1");
        }
        if self.samples_per_eta < 1 {
            return bad("samples_per_eta must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.sigma) {
            return bad("sigma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad("theta must lie in [0, 1]");
        }
        if self.max_attempts_factor == 0 {
            return bad("max_attempts_factor must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CbrError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sme(#[from] SmeError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error("the case base is empty")]
    EmptyCaseBase,
    #[error("query case `{0}` already has a solution")]
    NotQuery(String),
    #[error("case `{0}` has no solution to adapt")]
    NoSolution(String),
    #[error("case `{0}` shares no structure with the current dispute")]
    NoMapping(String),
    #[error("no precedent survives the retrieval filters")]
    NoPrecedent(ScoreTable),
    #[error("case `{0}` is already in the case base")]
    DuplicateCase(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("{}:{line}: {message}", path.display())]
    Index { path: PathBuf, line: usize, message: String },
}

/// Which side of the match the expanded ontology takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `fixed` is the base, expansions are targets (retrieval).
    FixedIsBase,
    /// Expansions are bases, `fixed` is the target (adaptation).
    ExpandableIsBase,
}

/// Outcome of a sampled argmax over expansions.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledExpansion {
    pub ontology: Ontology,
    /// Gmaps of the winning pair, in presentation order.
    pub gmaps: Vec<GMap>,
    pub score: f64,
    /// Every pool member in evaluation order, with its match total.
    pub pool: Vec<(Ontology, f64)>,
    /// Index of the winner in `pool`.
    pub chosen: usize,
}

impl SampledExpansion {
    pub fn best_gmap(&self) -> Option<&GMap> {
        self.gmaps.first()
    }
}

/// Derives an independent seed for one purpose from the base seed.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    // FNV-1a, stable across platforms and releases
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&seed.to_le_bytes());
    for p in parts {
        eat(p.as_bytes());
        eat(&[0xff]);
    }
    h
}

/// The reasoning context: knowledge base, synsets and parameters.
pub struct Cbr<'a> {
    pub kb: &'a KnowledgeBase,
    pub syn: SynsetService,
    pub cfg: CbrConfig,
    pub sme: SmeConfig,
}

impl<'a> Cbr<'a> {
    pub fn new(kb: &'a KnowledgeBase, cfg: CbrConfig) -> Result<Self, CbrError> {
        cfg.validate()?;
        Ok(Self {
            kb,
            syn: kb.synset_service(),
            cfg,
            sme: SmeConfig::default(),
        })
    }

    pub fn matcher(&self) -> Matcher<'_> {
        Matcher::with_config(&self.syn, self.sme.clone())
    }

    /// Identity followed by `samples_per_eta` nested chains over η = 2..=η_max,
    /// duplicates dropped. `stream` names the random streams.
    pub fn expansion_pool(&self, o: &Ontology, stream: &[&str]) -> Result<Vec<Ontology>, CbrError> {
        let mut pool = vec![o.clone()];
        let etas: Vec<f64> = (2..=self.cfg.eta_max).map(f64::from).collect();
        if etas.is_empty() {
            return Ok(pool);
        }
        for s in 0..self.cfg.samples_per_eta {
            let tag = s.to_string();
            let mut parts = stream.to_vec();
            parts.push(&tag);
            let ecfg = ExpansionConfig {
                eta: 1.0,
                eta_max: f64::from(self.cfg.eta_max),
                seed: derive_seed(self.cfg.seed, &parts),
                max_attempts_factor: self.cfg.max_attempts_factor,
            };
            for level in expand_nested(o, &etas, &ecfg, self.kb)? {
                if !pool.contains(&level.ontology) {
                    pool.push(level.ontology);
                }
            }
        }
        Ok(pool)
    }

    fn pair_gmaps(&self, fixed: &Ontology, other: &Ontology, direction: Direction) -> Result<Vec<GMap>, SmeError> {
        match direction {
            Direction::FixedIsBase => self.matcher().gmaps(fixed, other),
            Direction::ExpandableIsBase => self.matcher().gmaps(other, fixed),
        }
    }

    /// Scores every pool member against `fixed`, in pool order.
    pub fn score_pool(&self, fixed: &Ontology, pool: &[Ontology], direction: Direction) -> Result<Vec<f64>, CbrError> {
        let score = |o: &Ontology| self.pair_gmaps(fixed, o, direction).map(|g| total_of(&g));
        let scores: Result<Vec<f64>, SmeError> = if self.cfg.parallel {
            pool.par_iter().map(score).collect()
        } else {
            pool.iter().map(score).collect()
        };
        Ok(scores?)
    }

    /// The sampled expansion of `expandable` that best matches `fixed`; ties go
    /// to the earliest pool member, so the unexpanded ontology wins ties.
    pub fn sample_best_expansion(
        &self,
        fixed: &Ontology,
        expandable: &Ontology,
        direction: Direction,
        stream: &[&str],
    ) -> Result<SampledExpansion, CbrError> {
        let pool = self.expansion_pool(expandable, stream)?;
        let scores = self.score_pool(fixed, &pool, direction)?;
        let mut chosen = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[chosen] {
                chosen = i;
            }
        }
        let gmaps = self.pair_gmaps(fixed, &pool[chosen], direction)?;
        Ok(SampledExpansion {
            ontology: pool[chosen].clone(),
            score: scores[chosen],
            gmaps,
            pool: pool.into_iter().zip(scores).collect(),
            chosen,
        })
    }
}
