//! Concepts, relations, ontologies, cases and party stances.
//!
//! An [`Ontology`] is a set of labeled concepts plus typed relation instances
//! whose arguments refer to concepts (or, for higher-order relations, to other
//! relations) of the same ontology. Ids are unique across concepts and
//! relations jointly, and every argument must resolve at insertion time, which
//! also keeps the relation argument graph acyclic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Where a concept came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum ConceptOrigin {
    #[default]
    Original,
    /// Appended by commonsense expansion.
    Expansion,
    /// A skolem introduced by analogical inference, not yet grounded.
    Postulated,
}

/// Where a relation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum RelationOrigin {
    #[default]
    Original,
    Expansion,
    Inferred,
}

impl ConceptOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Original => "original",
            Self::Expansion => "expansion",
            Self::Postulated => "postulated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "original" => Some(Self::Original),
            "expansion" => Some(Self::Expansion),
            "postulated" => Some(Self::Postulated),
            _ => None,
        }
    }
}

impl RelationOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Original => "original",
            Self::Expansion => "expansion",
            Self::Inferred => "inferred",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "original" => Some(Self::Original),
            "expansion" => Some(Self::Expansion),
            "inferred" => Some(Self::Inferred),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub id: String,
    pub label: String,
    pub synsets: BTreeSet<String>,
    pub provenance: ConceptOrigin,
}

impl Concept {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            synsets: BTreeSet::new(),
            provenance: ConceptOrigin::Original,
        }
    }

    /// A concept whose id is its label.
    pub fn labeled(label: impl Into<String>) -> Self {
        let label = label.into();
        Self::new(label.clone(), label)
    }

    pub fn with_origin(mut self, provenance: ConceptOrigin) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn with_synsets<I, S>(mut self, synsets: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.synsets = synsets.into_iter().map(Into::into).collect();
        self
    }

    /// Label-or-shared-synset identity over stored synsets.
    pub fn same_as(&self, other: &Concept) -> bool {
        self.label == other.label || !self.synsets.is_disjoint(&other.synsets)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub id: String,
    pub predicate: String,
    pub predicate_synsets: BTreeSet<String>,
    pub args: Vec<String>,
    pub provenance: RelationOrigin,
}

impl Relation {
    /// A relation whose id is derived from its content.
    pub fn new<I, S>(predicate: impl Into<String>, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let predicate = predicate.into();
        let args: Vec<String> = args.into_iter().map(Into::into).collect();
        Self {
            id: content_id(&predicate, &args),
            predicate,
            predicate_synsets: BTreeSet::new(),
            args,
            provenance: RelationOrigin::Original,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_origin(mut self, provenance: RelationOrigin) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn content_id(&self) -> String {
        content_id(&self.predicate, &self.args)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// Default relation id: `predicate/arg1/arg2/...`.
pub fn content_id(predicate: &str, args: &[String]) -> String {
    let mut id = predicate.to_string();
    for a in args {
        id.push('/');
        id.push_str(a);
    }
    id
}

/// True for strings usable as ids, predicates and labels in the text formats.
pub fn is_token(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with(':')
        && !s.starts_with('"')
        && s.chars().all(|c| !c.is_whitespace() && !matches!(c, '(' | ')' | ';' | '"'))
}

/// Concept labels are lowercase words or snake_case phrases.
pub fn is_valid_label(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_lowercase() || c.is_ascii_digit() || matches!(c, '_' | '-' | '.'))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("invalid id `{0}`")]
    InvalidId(String),
    #[error("invalid concept label `{label}` on `{id}`")]
    InvalidLabel { id: String, label: String },
    #[error("invalid predicate `{0}`")]
    InvalidPredicate(String),
    #[error("relation `{relation}` references unknown element `{arg}`")]
    UnresolvedArg { relation: String, arg: String },
    #[error("relation `{0}` has no arguments")]
    EmptyRelation(String),
    #[error("relation argument graph has a cycle through `{0}`")]
    Cycle(String),
    #[error("{role} `{id}` does not resolve into the ontology")]
    UnresolvedFeature { role: &'static str, id: String },
    #[error("case `{0}` is a case-base case without a solution")]
    MissingSolution(String),
    #[error("postulated concept `{0}` cannot be stored in a case")]
    Postulated(String),
}

/// A set of concepts and relations with referential integrity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ontology {
    concepts: BTreeMap<String, Concept>,
    relations: BTreeMap<String, Relation>,
}

impl Ontology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_concepts(&self) -> usize {
        self.concepts.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty() && self.relations.is_empty()
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.concepts.contains_key(id) || self.relations.contains_key(id)
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.concepts.get(id)
    }

    pub fn relation(&self, id: &str) -> Option<&Relation> {
        self.relations.get(id)
    }

    pub fn is_concept(&self, id: &str) -> bool {
        self.concepts.contains_key(id)
    }

    /// Concepts in id order.
    pub fn concepts(&self) -> impl ExactSizeIterator<Item = &Concept> + Clone {
        self.concepts.values()
    }

    /// Relations in id order.
    pub fn relations(&self) -> impl ExactSizeIterator<Item = &Relation> + Clone {
        self.relations.values()
    }

    /// First concept (in id order) carrying `label`.
    pub fn concept_by_label(&self, label: &str) -> Option<&Concept> {
        self.concepts.values().find(|c| c.label == label)
    }

    pub fn add_concept(&mut self, concept: Concept) -> Result<(), OntologyError> {
        if !is_token(&concept.id) {
            return Err(OntologyError::InvalidId(concept.id));
        }
        if !is_valid_label(&concept.label) {
            return Err(OntologyError::InvalidLabel {
                id: concept.id,
                label: concept.label,
            });
        }
        if self.contains_id(&concept.id) {
            return Err(OntologyError::DuplicateId(concept.id));
        }
        self.concepts.insert(concept.id.clone(), concept);
        Ok(())
    }

    /// Inserts a relation; all arguments must already be present.
    pub fn add_relation(&mut self, relation: Relation) -> Result<(), OntologyError> {
        if !is_token(&relation.id) {
            return Err(OntologyError::InvalidId(relation.id));
        }
        if !is_token(&relation.predicate) {
            return Err(OntologyError::InvalidPredicate(relation.predicate));
        }
        if relation.args.is_empty() {
            return Err(OntologyError::EmptyRelation(relation.id));
        }
        if self.contains_id(&relation.id) {
            return Err(OntologyError::DuplicateId(relation.id));
        }
        if let Some(arg) = relation.args.iter().find(|a| !self.contains_id(a)) {
            return Err(OntologyError::UnresolvedArg {
                relation: relation.id.clone(),
                arg: arg.clone(),
            });
        }
        self.relations.insert(relation.id.clone(), relation);
        Ok(())
    }

    /// Existing relation with the same predicate and arguments.
    pub fn find_relation(&self, predicate: &str, args: &[String]) -> Option<&Relation> {
        let id = content_id(predicate, args);
        if let Some(r) = self.relations.get(&id) {
            if r.predicate == predicate && r.args == args {
                return Some(r);
            }
        }
        self.relations
            .values()
            .find(|r| r.predicate == predicate && r.args == args)
    }

    /// Returns the id of an equal relation, inserting `relation` if absent.
    pub fn intern_relation(&mut self, relation: Relation) -> Result<String, OntologyError> {
        if let Some(existing) = self.find_relation(&relation.predicate, &relation.args) {
            return Ok(existing.id.clone());
        }
        let id = relation.id.clone();
        self.add_relation(relation)?;
        Ok(id)
    }

    /// Replaces the provenance of a concept. Returns false if absent.
    pub fn set_concept_origin(&mut self, id: &str, origin: ConceptOrigin) -> bool {
        match self.concepts.get_mut(id) {
            Some(c) => {
                c.provenance = origin;
                true
            }
            None => false,
        }
    }

    /// Ids of relations that mention `id` as an argument.
    pub fn relations_touching<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Relation> + 'a {
        self.relations.values().filter(move |r| r.args.iter().any(|a| a == id))
    }

    /// Full invariant check.
    pub fn validate(&self) -> Result<(), OntologyError> {
        for (id, c) in &self.concepts {
            if id != &c.id || !is_token(id) {
                return Err(OntologyError::InvalidId(id.clone()));
            }
            if !is_valid_label(&c.label) {
                return Err(OntologyError::InvalidLabel {
                    id: id.clone(),
                    label: c.label.clone(),
                });
            }
        }
        for (id, r) in &self.relations {
            if id != &r.id || !is_token(id) {
                return Err(OntologyError::InvalidId(id.clone()));
            }
            if self.concepts.contains_key(id) {
                return Err(OntologyError::DuplicateId(id.clone()));
            }
            if r.args.is_empty() {
                return Err(OntologyError::EmptyRelation(id.clone()));
            }
            if let Some(arg) = r.args.iter().find(|a| !self.contains_id(a)) {
                return Err(OntologyError::UnresolvedArg {
                    relation: id.clone(),
                    arg: arg.clone(),
                });
            }
        }
        self.check_acyclic()
    }

    fn check_acyclic(&self) -> Result<(), OntologyError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        for start in self.relations.keys() {
            if state.get(start.as_str()).copied().unwrap_or(0) == 2 {
                continue;
            }
            let mut stack: Vec<(&str, usize)> = vec![(start.as_str(), 0)];
            state.insert(start, 1);
            while let Some(&mut (id, ref mut next)) = stack.last_mut() {
                let rel = &self.relations[id];
                if let Some(arg) = rel.args.get(*next) {
                    *next += 1;
                    if let Some((key, _)) = self.relations.get_key_value(arg.as_str()) {
                        match state.get(key.as_str()).copied().unwrap_or(0) {
                            1 => return Err(OntologyError::Cycle(key.clone())),
                            0 => {
                                state.insert(key, 1);
                                stack.push((key.as_str(), 0));
                            }
                            _ => {}
                        }
                    }
                } else {
                    state.insert(id, 2);
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    /// Adds every element of `other` whose id is not present yet.
    pub fn absorb(&mut self, other: &Ontology) -> Result<(), OntologyError> {
        for c in other.concepts() {
            if !self.contains_id(&c.id) {
                self.add_concept(c.clone())?;
            }
        }
        let mut pending: Vec<&Relation> = other
            .relations()
            .filter(|r| !self.contains_id(&r.id))
            .collect();
        // relation-valued args may refer to relations later in id order
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for r in pending {
                if r.args.iter().all(|a| self.contains_id(a)) {
                    self.add_relation(r.clone())?;
                } else {
                    rest.push(r);
                }
            }
            if rest.len() == before {
                let r = rest[0];
                let arg = r.args.iter().find(|a| !self.contains_id(a)).unwrap();
                return Err(OntologyError::UnresolvedArg {
                    relation: r.id.clone(),
                    arg: arg.clone(),
                });
            }
            pending = rest;
        }
        Ok(())
    }
}

fn predicates_match(a: &Relation, b: &Relation) -> bool {
    a.predicate == b.predicate || !a.predicate_synsets.is_disjoint(&b.predicate_synsets)
}

fn element_matches(a: &Ontology, a_id: &str, b: &Ontology, b_id: &str) -> bool {
    match (a.concept(a_id), b.concept(b_id)) {
        (Some(ca), Some(cb)) => ca.same_as(cb),
        (None, None) => match (a.relation(a_id), b.relation(b_id)) {
            (Some(ra), Some(rb)) => relation_matches(a, ra, b, rb),
            _ => false,
        },
        _ => false,
    }
}

fn relation_matches(a: &Ontology, ra: &Relation, b: &Ontology, rb: &Relation) -> bool {
    predicates_match(ra, rb)
        && ra.arity() == rb.arity()
        && ra
            .args
            .iter()
            .zip(&rb.args)
            .all(|(x, y)| element_matches(a, x, b, y))
}

/// `a ⊑ b`: every concept and relation of `a` has a counterpart in `b`.
///
/// Concepts correspond by label or shared stored synset; relations by
/// predicate label or shared predicate synset with corresponding arguments.
pub fn is_sub_ontology(a: &Ontology, b: &Ontology) -> bool {
    a.concepts()
        .all(|ca| b.concepts().any(|cb| ca.same_as(cb)))
        && a
            .relations()
            .all(|ra| b.relations().any(|rb| relation_matches(a, ra, b, rb)))
}

/// A dispute record: ontology, agents, goals, reservations and solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub case_id: String,
    pub domain_tag: String,
    pub ontology: Ontology,
    pub agents: BTreeSet<String>,
    pub goals: BTreeSet<String>,
    pub reservations: BTreeSet<String>,
    pub solution: BTreeSet<String>,
}

impl Case {
    pub fn new(case_id: impl Into<String>, domain_tag: impl Into<String>, ontology: Ontology) -> Self {
        Self {
            case_id: case_id.into(),
            domain_tag: domain_tag.into(),
            ontology,
            agents: BTreeSet::new(),
            goals: BTreeSet::new(),
            reservations: BTreeSet::new(),
            solution: BTreeSet::new(),
        }
    }

    pub fn is_query(&self) -> bool {
        self.solution.is_empty()
    }

    /// Ontology invariants plus resolution of every case feature.
    pub fn validate(&self) -> Result<(), OntologyError> {
        self.ontology.validate()?;
        for a in &self.agents {
            if !self.ontology.is_concept(a) {
                return Err(OntologyError::UnresolvedFeature { role: "agent", id: a.clone() });
            }
        }
        for (role, set) in [
            ("goal", &self.goals),
            ("reservation", &self.reservations),
            ("solution relation", &self.solution),
        ] {
            if let Some(id) = set.iter().find(|id| self.ontology.relation(id).is_none()) {
                return Err(OntologyError::UnresolvedFeature { role, id: id.clone() });
            }
        }
        Ok(())
    }

    /// Validation for cases stored in a case base.
    pub fn validate_stored(&self) -> Result<(), OntologyError> {
        self.validate()?;
        if self.solution.is_empty() {
            return Err(OntologyError::MissingSolution(self.case_id.clone()));
        }
        if let Some(c) = self
            .ontology
            .concepts()
            .find(|c| c.provenance == ConceptOrigin::Postulated)
        {
            return Err(OntologyError::Postulated(c.id.clone()));
        }
        Ok(())
    }
}

/// One party's view of the dispute at round `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stance {
    pub agent: String,
    pub fragment: Ontology,
    pub goals: BTreeSet<String>,
    pub reservations: BTreeSet<String>,
    pub t: u32,
}

impl Stance {
    pub fn new(agent: impl Into<String>, fragment: Ontology) -> Self {
        Self {
            agent: agent.into(),
            fragment,
            goals: BTreeSet::new(),
            reservations: BTreeSet::new(),
            t: 0,
        }
    }

    pub fn validate(&self) -> Result<(), OntologyError> {
        self.fragment.validate()?;
        if !self.fragment.is_empty() && !self.fragment.is_concept(&self.agent) {
            return Err(OntologyError::UnresolvedFeature {
                role: "agent",
                id: self.agent.clone(),
            });
        }
        for (role, set) in [("goal", &self.goals), ("reservation", &self.reservations)] {
            if let Some(id) = set.iter().find(|id| self.fragment.relation(id).is_none()) {
                return Err(OntologyError::UnresolvedFeature { role, id: id.clone() });
            }
        }
        Ok(())
    }
}
