use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ontology::{Concept, ConceptOrigin, Ontology, OntologyError, Relation, RelationOrigin};

use super::gmap::GMap;

/// Argument of a projected relation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InferenceArg {
    /// An element of the target ontology.
    Target(String),
    /// A postulated target concept standing for the named base concept.
    Skolem(String),
}

impl InferenceArg {
    pub fn skolem(&self) -> Option<&str> {
        match self {
            Self::Skolem(s) => Some(s),
            Self::Target(_) => None,
        }
    }

    pub fn target(&self) -> Option<&str> {
        match self {
            Self::Target(t) => Some(t),
            Self::Skolem(_) => None,
        }
    }
}

impl fmt::Display for InferenceArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Target(t) => f.write_str(t),
            Self::Skolem(s) => write!(f, "?{s}"),
        }
    }
}

/// A base relation carried into the target, possibly over skolems. The
/// predicate and its stored synsets are copied from the base relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateInference {
    /// The base relation this was projected from.
    pub source: String,
    pub predicate: String,
    pub predicate_synsets: BTreeSet<String>,
    pub args: Vec<InferenceArg>,
}

impl CandidateInference {
    pub fn skolems(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(InferenceArg::skolem)
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|a| matches!(a, InferenceArg::Target(_)))
    }
}

impl fmt::Display for CandidateInference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// Every base relation not matched by `g` that touches at least one mapped
/// base concept, with mapped arguments substituted and unmapped concepts
/// skolemized. Skolems are shared across inferences.
pub fn candidate_inferences(
    g: &GMap,
    base: &Ontology,
    _target: &Ontology,
) -> Vec<CandidateInference> {
    let f = MappingFunction::from_gmap(g);
    base.relations()
        .filter(|r| !g.matches_base(&r.id))
        .filter(|r| r.args.iter().any(|a| g.entity_map.contains_key(a)))
        .filter_map(|r| f.project_unmatched(base, r))
        .collect()
}

/// The base → target mapping induced by one gmap.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MappingFunction {
    pub concepts: BTreeMap<String, String>,
    pub relations: BTreeMap<String, String>,
}

impl MappingFunction {
    pub fn from_gmap(g: &GMap) -> Self {
        Self {
            concepts: g.entity_map.clone(),
            relations: g.relation_map.clone(),
        }
    }

    fn project_unmatched(&self, base: &Ontology, r: &Relation) -> Option<CandidateInference> {
        let mut args = Vec::with_capacity(r.args.len());
        for a in &r.args {
            if base.is_concept(a) {
                args.push(match self.concepts.get(a) {
                    Some(t) => InferenceArg::Target(t.clone()),
                    None => InferenceArg::Skolem(a.clone()),
                });
            } else {
                // an unmatched relation-valued argument has no target image
                args.push(InferenceArg::Target(self.relations.get(a)?.clone()));
            }
        }
        Some(CandidateInference {
            source: r.id.clone(),
            predicate: r.predicate.clone(),
            predicate_synsets: r.predicate_synsets.clone(),
            args,
        })
    }

    /// Image of one base relation: its matched target relation, or a
    /// projection over mapped concepts and skolems.
    pub fn apply_relation(
        &self,
        base: &Ontology,
        target: &Ontology,
        relation_id: &str,
    ) -> Option<CandidateInference> {
        let r = base.relation(relation_id)?;
        if let Some(t) = self.relations.get(relation_id).and_then(|t| target.relation(t)) {
            return Some(CandidateInference {
                source: r.id.clone(),
                predicate: t.predicate.clone(),
                predicate_synsets: t.predicate_synsets.clone(),
                args: t.args.iter().cloned().map(InferenceArg::Target).collect(),
            });
        }
        self.project_unmatched(base, r)
    }

    /// Images of several base relations, in input order.
    pub fn apply(
        &self,
        base: &Ontology,
        target: &Ontology,
        relation_ids: impl IntoIterator<Item = impl AsRef<str>>,
    ) -> Vec<CandidateInference> {
        relation_ids
            .into_iter()
            .filter_map(|id| self.apply_relation(base, target, id.as_ref()))
            .collect()
    }

    /// Target ontology extended with postulated skolem concepts and the given
    /// projected relations.
    pub fn materialize(
        &self,
        base: &Ontology,
        target: &Ontology,
        projected: &[CandidateInference],
    ) -> Result<Ontology, OntologyError> {
        let mut out = target.clone();
        for inf in projected {
            for s in inf.skolems() {
                let id = skolem_id(s);
                if !out.contains_id(&id) {
                    let label = base.concept(s).map_or(s, |c| c.label.as_str());
                    out.add_concept(Concept::new(id, label).with_origin(ConceptOrigin::Postulated))?;
                }
            }
            let args: Vec<String> = inf
                .args
                .iter()
                .map(|a| match a {
                    InferenceArg::Target(t) => t.clone(),
                    InferenceArg::Skolem(s) => skolem_id(s),
                })
                .collect();
            let mut r = Relation::new(inf.predicate.clone(), args).with_origin(RelationOrigin::Inferred);
            r.predicate_synsets = inf.predicate_synsets.clone();
            out.intern_relation(r)?;
        }
        Ok(out)
    }
}

/// Ontology id used for the skolem of base concept `base_id`.
pub fn skolem_id(base_id: &str) -> String {
    format!("?{base_id}")
}
