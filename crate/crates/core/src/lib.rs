//! Case-based mediation engine.
//!
//! Disputes are encoded as ontologies of concepts and relations. Past cases
//! are retrieved by cross-domain analogy (structure mapping over relation
//! synsets), ontologies are grown from a commonsense knowledge base, and the
//! precedent's solution is carried over and grounded in the current dispute.

pub mod cbr;
pub mod curve;
pub mod expand;
pub mod format;
pub mod kb;
pub mod merge;
pub mod ontology;
pub mod session;
pub mod sexpr;
pub mod sme;

pub use cbr::{
    AdaptationResult, CaseBase, Cbr, CbrConfig, CbrError, Direction, RetrievalResult, SampledExpansion, ScoreTable,
};
pub use expand::{expand, expand_nested, Expansion, ExpansionConfig, ExpansionError};
pub use format::{parse_case, parse_ontology, serialize_case, serialize_ontology, FormatError};
pub use kb::{synset_overlap, Edge, KbError, KnowledgeBase, SynsetService};
pub use merge::{merge_stances, MergeError};
pub use ontology::{
    is_sub_ontology, Case, Concept, ConceptOrigin, Ontology, OntologyError, Relation, RelationOrigin, Stance,
};
pub use session::{parse_session, run_session, Outcome, PartyPolicy, SessionSpec, SessionTranscript};
pub use sme::{
    compute_gmaps, match_total, CandidateInference, GMap, InferenceArg, MappingFunction, MatchHypothesis, Matcher,
    SmeConfig, SmeError,
};
