//! Structure mapping between a base and a target ontology.
//!
//! Local match hypotheses pair relations whose predicates share a label or a
//! synset. Global mappings (gmaps) are the maximal sets of hypotheses whose
//! induced concept and relation correspondences stay one-to-one; they are
//! enumerated exhaustively as the maximal cliques of the pairwise
//! compatibility graph, which is exact because a correspondence violation
//! always involves two pairs.
//!
//! Scores: each hypothesis contributes `w_rel`, plus `w_label` when the
//! predicate labels are identical; a gmap adds `w_sys · (d − 1)` for every
//! entity correspondence used by `d ≥ 2` of its hypotheses.

mod gmap;
mod hypothesis;
mod inference;

pub use gmap::{ses, structural_score, GMap};
pub use hypothesis::{build_match_hypotheses, MatchHypothesis};
pub use inference::{candidate_inferences, skolem_id, CandidateInference, InferenceArg, MappingFunction};

use thiserror::Error;

use crate::kb::SynsetService;
use crate::ontology::Ontology;

pub const DEFAULT_MAX_HYPOTHESES: usize = 10_000;
pub const DEFAULT_MAX_GMAPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SmeConfig {
    pub w_rel: f64,
    pub w_label: f64,
    pub w_sys: f64,
    pub max_hypotheses: usize,
    pub max_gmaps: usize,
}

impl Default for SmeConfig {
    fn default() -> Self {
        Self {
            w_rel: 1.0,
            w_label: 0.5,
            w_sys: 0.2,
            max_hypotheses: DEFAULT_MAX_HYPOTHESES,
            max_gmaps: DEFAULT_MAX_GMAPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmeError {
    #[error("{count} match hypotheses exceed the cap of {cap}")]
    TooManyHypotheses { count: usize, cap: usize },
    #[error("more than {cap} gmaps")]
    TooManyGmaps { cap: usize },
}

/// Structure-mapping engine bound to a synset service.
#[derive(Debug, Clone)]
pub struct Matcher<'a> {
    syn: &'a SynsetService,
    cfg: SmeConfig,
}

impl<'a> Matcher<'a> {
    pub fn new(syn: &'a SynsetService) -> Self {
        Self { syn, cfg: SmeConfig::default() }
    }

    pub fn with_config(syn: &'a SynsetService, cfg: SmeConfig) -> Self {
        Self { syn, cfg }
    }

    pub fn config(&self) -> &SmeConfig {
        &self.cfg
    }

    pub fn synsets(&self) -> &'a SynsetService {
        self.syn
    }

    pub fn hypotheses(&self, base: &Ontology, target: &Ontology) -> Vec<MatchHypothesis> {
        build_match_hypotheses(base, target, self.syn, &self.cfg)
    }

    /// All maximal structurally consistent gmaps in presentation order, each
    /// with its candidate inferences.
    pub fn gmaps(&self, base: &Ontology, target: &Ontology) -> Result<Vec<GMap>, SmeError> {
        let hyps = self.hypotheses(base, target);
        if hyps.len() > self.cfg.max_hypotheses {
            return Err(SmeError::TooManyHypotheses {
                count: hyps.len(),
                cap: self.cfg.max_hypotheses,
            });
        }
        let sets = gmap::maximal_consistent_sets(&hyps, self.cfg.max_gmaps)?;
        let mut out: Vec<GMap> = sets
            .into_iter()
            .map(|set| {
                let mut g = GMap::assemble(set.into_iter().map(|i| hyps[i].clone()).collect(), &self.cfg);
                g.inferences = candidate_inferences(&g, base, target);
                g
            })
            .collect();
        out.sort_by(GMap::presentation_cmp);
        Ok(out)
    }

    /// Sum of ses over all gmaps.
    pub fn match_total(&self, base: &Ontology, target: &Ontology) -> Result<f64, SmeError> {
        Ok(total_of(&self.gmaps(base, target)?))
    }

    /// Highest-scoring gmap, if any.
    pub fn best(&self, base: &Ontology, target: &Ontology) -> Result<Option<GMap>, SmeError> {
        Ok(self.gmaps(base, target)?.into_iter().next())
    }
}

/// Sum of ses, accumulated in presentation order.
pub fn total_of(gmaps: &[GMap]) -> f64 {
    gmaps.iter().map(|g| g.ses).sum()
}

pub fn compute_gmaps(base: &Ontology, target: &Ontology, syn: &SynsetService) -> Result<Vec<GMap>, SmeError> {
    Matcher::new(syn).gmaps(base, target)
}

pub fn match_total(base: &Ontology, target: &Ontology, syn: &SynsetService) -> Result<f64, SmeError> {
    Matcher::new(syn).match_total(base, target)
}
