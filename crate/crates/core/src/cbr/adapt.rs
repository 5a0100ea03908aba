use std::collections::{BTreeMap, BTreeSet};

use crate::kb::SynsetService;
use crate::ontology::{Case, ConceptOrigin, Ontology, Relation, RelationOrigin};
use crate::sme::{CandidateInference, GMap, InferenceArg, MappingFunction};

use super::{sat, Cbr, CbrError, Direction};

/// A skolem bound to a concept of the expanded current ontology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    /// The base concept the skolem stands for.
    pub skolem: String,
    pub concept: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationResult {
    /// o^R: the expansion of the retrieved ontology used for the mapping.
    pub expanded_retrieved: Ontology,
    /// f: from `expanded_retrieved` onto the current ontology.
    pub gmap: GMap,
    /// f(S*), over current ids and skolems.
    pub mapped_solution: Vec<CandidateInference>,
    pub bindings: Vec<Binding>,
    /// Base ids of skolems left unbound.
    pub unbound: Vec<String>,
    /// The current ontology plus the grounding concepts and their relations.
    pub ontology: Ontology,
    /// Ids in `ontology` of the grounded solution relations.
    pub grounded_solution: Vec<String>,
}

impl AdaptationResult {
    pub fn is_partial(&self) -> bool {
        !self.unbound.is_empty()
    }

    pub fn solution_relations(&self) -> impl Iterator<Item = &Relation> {
        self.grounded_solution.iter().filter_map(|id| self.ontology.relation(id))
    }

    /// The query case with the adapted ontology and grounded solution attached.
    pub fn solved_case(&self, query: &Case) -> Case {
        Case {
            ontology: self.ontology.clone(),
            solution: self.grounded_solution.iter().cloned().collect(),
            ..query.clone()
        }
    }
}

/// What a grounding concept must support: relations shaped like
/// `predicate(args)` with the skolem position filled by the candidate.
struct Requirement<'a> {
    inference: &'a CandidateInference,
}

fn predicates_overlap(a: &str, a_syn: &BTreeSet<String>, b: &Relation, syn: &SynsetService) -> bool {
    a == b.predicate || !syn.effective(a, a_syn).is_disjoint(&syn.effective(&b.predicate, &b.predicate_synsets))
}

impl Requirement<'_> {
    fn met_by(&self, skolem: &str, candidate: &str, o: &Ontology, syn: &SynsetService) -> bool {
        let args: Vec<&str> = self
            .inference
            .args
            .iter()
            .map(|a| match a {
                InferenceArg::Target(t) => t.as_str(),
                InferenceArg::Skolem(_) => {
                    debug_assert_eq!(a.skolem(), Some(skolem));
                    candidate
                }
            })
            .collect();
        o.relations_touching(candidate).any(|r| {
            r.args.iter().map(String::as_str).eq(args.iter().copied())
                && predicates_overlap(&self.inference.predicate, &self.inference.predicate_synsets, r, syn)
        })
    }
}

impl Cbr<'_> {
    /// Substitutional adaptation of `retrieved`'s solution to `current`.
    pub fn adapt(&self, current: &Case, retrieved: &Case) -> Result<AdaptationResult, CbrError> {
        if retrieved.solution.is_empty() {
            return Err(CbrError::NoSolution(retrieved.case_id.clone()));
        }
        let o = &current.ontology;
        let sampled = self.sample_best_expansion(
            o,
            &retrieved.ontology,
            Direction::ExpandableIsBase,
            &["adapt", &current.case_id, &retrieved.case_id],
        )?;
        let o_r = sampled.ontology;
        let gmap = sampled
            .gmaps
            .iter()
            .find(|g| sat(g, &g.inferences, o, current, &self.syn))
            .or_else(|| sampled.gmaps.first())
            .cloned()
            .ok_or_else(|| CbrError::NoMapping(retrieved.case_id.clone()))?;
        let f = MappingFunction::from_gmap(&gmap);
        let mapped_solution = f.apply(&o_r, o, &retrieved.solution);

        let skolems: BTreeSet<&str> = mapped_solution.iter().flat_map(|i| i.skolems()).collect();
        // inferred structure around each skolem, from outside the solution
        let mut requirements: BTreeMap<&str, Vec<Requirement>> = BTreeMap::new();
        for inf in &gmap.inferences {
            if retrieved.solution.contains(&inf.source) {
                continue;
            }
            let ks: Vec<&str> = inf.skolems().collect();
            if let [k] = ks[..] {
                if skolems.contains(k) {
                    requirements.entry(k).or_default().push(Requirement { inference: inf });
                }
            }
        }

        let (grounding, bindings) = if skolems.is_empty() {
            (o.clone(), Vec::new())
        } else {
            self.ground(o, &o_r, current, retrieved, &skolems, &requirements)?
        };

        let bound: BTreeMap<&str, &str> = bindings
            .iter()
            .map(|b| (b.skolem.as_str(), b.concept.as_str()))
            .collect();
        let mut out = o.clone();
        for b in &bindings {
            let c = grounding.concept(&b.concept).expect("bound concept exists");
            out.add_concept(c.clone())?;
        }
        for b in &bindings {
            for r in grounding.relations_touching(&b.concept) {
                if !out.contains_id(&r.id) && r.args.iter().all(|a| out.is_concept(a)) {
                    out.add_relation(r.clone())?;
                }
            }
        }
        let mut grounded_solution = Vec::new();
        for inf in &mapped_solution {
            let args: Option<Vec<String>> = inf
                .args
                .iter()
                .map(|a| match a {
                    InferenceArg::Target(t) => Some(t.clone()),
                    InferenceArg::Skolem(s) => bound.get(s.as_str()).map(|c| c.to_string()),
                })
                .collect();
            let Some(args) = args else { continue };
            let id = match out.find_relation(&inf.predicate, &args) {
                Some(r) => r.id.clone(),
                None => {
                    let mut r = Relation::new(inf.predicate.clone(), args).with_origin(RelationOrigin::Inferred);
                    r.predicate_synsets = inf.predicate_synsets.clone();
                    out.intern_relation(r)?
                }
            };
            if !grounded_solution.contains(&id) {
                grounded_solution.push(id);
            }
        }
        grounded_solution.sort();
        out.validate()?;
        let unbound = skolems
            .iter()
            .filter(|s| !bound.contains_key(*s))
            .map(|s| s.to_string())
            .collect();
        Ok(AdaptationResult {
            expanded_retrieved: o_r,
            gmap,
            mapped_solution,
            bindings,
            unbound,
            ontology: out,
            grounded_solution,
        })
    }

    /// Searches expansions of the current ontology, best match first, for
    /// concepts carrying each skolem's inferred structure. Returns the
    /// expansion used and the bindings found there.
    fn ground(
        &self,
        o: &Ontology,
        o_r: &Ontology,
        current: &Case,
        retrieved: &Case,
        skolems: &BTreeSet<&str>,
        requirements: &BTreeMap<&str, Vec<Requirement>>,
    ) -> Result<(Ontology, Vec<Binding>), CbrError> {
        let pool = self.expansion_pool(o, &["ground", &current.case_id, &retrieved.case_id])?;
        let scores = self.score_pool(o_r, &pool, Direction::FixedIsBase)?;
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut best: Option<(usize, Vec<Binding>)> = None;
        for i in order {
            let bindings = self.bind(&pool[i], skolems, requirements);
            if bindings.len() == skolems.len() {
                return Ok((pool[i].clone(), bindings));
            }
            if best.as_ref().is_none_or(|(_, b)| bindings.len() > b.len()) {
                best = Some((i, bindings));
            }
        }
        let (i, bindings) = best.expect("pool holds the identity");
        Ok((pool[i].clone(), bindings))
    }

    /// Greedy injective binding over skolems in id order. Candidates are
    /// expansion concepts meeting every requirement of the skolem; ties go to
    /// higher KB degree, then label. Skolems without requirements stay unbound.
    fn bind(
        &self,
        e: &Ontology,
        skolems: &BTreeSet<&str>,
        requirements: &BTreeMap<&str, Vec<Requirement>>,
    ) -> Vec<Binding> {
        let mut used: BTreeSet<&str> = BTreeSet::new();
        let mut out = Vec::new();
        for &s in skolems {
            let Some(reqs) = requirements.get(s).filter(|r| !r.is_empty()) else {
                continue;
            };
            let mut candidates: Vec<(usize, &str, &str)> = e
                .concepts()
                .filter(|c| c.provenance == ConceptOrigin::Expansion && !used.contains(c.id.as_str()))
                .filter(|c| reqs.iter().all(|r| r.met_by(s, &c.id, e, &self.syn)))
                .map(|c| (self.kb.degree(&c.label), c.label.as_str(), c.id.as_str()))
                .collect();
            candidates.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)).then(a.2.cmp(b.2)));
            if let Some(&(_, _, id)) = candidates.first() {
                used.insert(id);
                out.push(Binding {
                    skolem: s.to_string(),
                    concept: id.to_string(),
                });
            }
        }
        out
    }
}
