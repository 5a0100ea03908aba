//! Middle-ground ontology: the union of all party stances.
//!
//! Concepts are unified when they share a label or any synset (stored or
//! looked up), relations when their unified arguments coincide and their
//! predicates share a label or synset. Unification is the transitive closure
//! of those pairwise identities, so merging is idempotent.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::kb::SynsetService;
use crate::ontology::{Concept, Ontology, OntologyError, Relation, Stance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("at least two stances are required, got {0}")]
    TooFewStances(usize),
    #[error("stance of `{agent}` is invalid: {source}")]
    InvalidStance {
        agent: String,
        #[source]
        source: OntologyError,
    },
    #[error("cannot unify `{first}` (stance of {first_agent}) with `{second}` (stance of {second_agent}): {reason}")]
    Conflict {
        first_agent: String,
        first: String,
        second_agent: String,
        second: String,
        reason: &'static str,
    },
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

/// Merged ontology plus, per stance, the map from stance-local ids to merged ids.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome {
    pub ontology: Ontology,
    pub id_maps: Vec<BTreeMap<String, String>>,
}

impl MergeOutcome {
    pub fn map_id(&self, stance: usize, id: &str) -> Option<&str> {
        self.id_maps.get(stance)?.get(id).map(String::as_str)
    }
}

/// Disjoint-set forest over item indices.
struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// Keeps the smaller index as root so the first item represents its class.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

fn fresh_id(base: &str, used: &mut BTreeSet<String>) -> String {
    let mut id = base.to_string();
    let mut k = 2;
    while used.contains(&id) {
        id = format!("{base}#{k}");
        k += 1;
    }
    used.insert(id.clone());
    id
}

fn relation_depth(o: &Ontology, r: &Relation, memo: &mut BTreeMap<String, usize>) -> usize {
    if let Some(&d) = memo.get(&r.id) {
        return d;
    }
    let d = r
        .args
        .iter()
        .filter_map(|a| o.relation(a))
        .map(|inner| relation_depth(o, inner, memo) + 1)
        .max()
        .unwrap_or(0);
    memo.insert(r.id.clone(), d);
    d
}

pub fn merge_stances(stances: &[Stance], syn: &SynsetService) -> Result<Ontology, MergeError> {
    merge_stances_mapped(stances, syn).map(|m| m.ontology)
}

pub fn merge_stances_mapped(stances: &[Stance], syn: &SynsetService) -> Result<MergeOutcome, MergeError> {
    if stances.len() < 2 {
        return Err(MergeError::TooFewStances(stances.len()));
    }
    for s in stances {
        s.validate().map_err(|source| MergeError::InvalidStance {
            agent: s.agent.clone(),
            source,
        })?;
    }
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut id_maps: Vec<BTreeMap<String, String>> = vec![BTreeMap::new(); stances.len()];
    let mut out = Ontology::new();

    // concepts
    let items: Vec<(usize, &Concept, BTreeSet<String>)> = stances
        .iter()
        .enumerate()
        .flat_map(|(si, s)| {
            s.fragment
                .concepts()
                .map(move |c| (si, c, syn.effective(&c.label, &c.synsets)))
        })
        .collect();
    let mut uf = UnionFind::new(items.len());
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            let (si, ci, ei) = &items[i];
            let (sj, cj, ej) = &items[j];
            let same_label = ci.label == cj.label;
            if same_label
                && !ci.synsets.is_empty()
                && !cj.synsets.is_empty()
                && ci.synsets.is_disjoint(&cj.synsets)
            {
                return Err(MergeError::Conflict {
                    first_agent: stances[*si].agent.clone(),
                    first: ci.id.clone(),
                    second_agent: stances[*sj].agent.clone(),
                    second: cj.id.clone(),
                    reason: "same label with disjoint synsets",
                });
            }
            if same_label || !ei.is_disjoint(ej) {
                uf.union(i, j);
            }
        }
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..items.len() {
        let root = uf.find(i);
        classes.entry(root).or_default().push(i);
    }
    for (root, members) in &classes {
        let rep = items[*root].1;
        let id = fresh_id(&rep.id, &mut used);
        let mut merged = Concept::new(id.clone(), rep.label.clone());
        merged.provenance = members.iter().map(|&m| items[m].1.provenance).min().unwrap();
        for &m in members {
            merged.synsets.extend(items[m].2.iter().cloned());
            id_maps[items[m].0].insert(items[m].1.id.clone(), id.clone());
        }
        out.add_concept(merged)?;
    }

    // relations, shallowest first so relation-valued args are already mapped
    let mut by_depth: BTreeMap<usize, Vec<(usize, &Relation)>> = BTreeMap::new();
    for (si, s) in stances.iter().enumerate() {
        let mut memo = BTreeMap::new();
        for r in s.fragment.relations() {
            let d = relation_depth(&s.fragment, r, &mut memo);
            by_depth.entry(d).or_default().push((si, r));
        }
    }
    for level in by_depth.values() {
        let mapped: Vec<(usize, &Relation, Vec<String>, BTreeSet<String>)> = level
            .iter()
            .map(|&(si, r)| {
                let args = r.args.iter().map(|a| id_maps[si][a].clone()).collect();
                (si, r, args, syn.effective(&r.predicate, &r.predicate_synsets))
            })
            .collect();
        let mut uf = UnionFind::new(mapped.len());
        for i in 0..mapped.len() {
            for j in i + 1..mapped.len() {
                let (si, ri, ai, ei) = &mapped[i];
                let (sj, rj, aj, ej) = &mapped[j];
                let preds = ri.predicate == rj.predicate || !ei.is_disjoint(ej);
                if si != sj && ri.id == rj.id && preds && ri.arity() != rj.arity() {
                    return Err(MergeError::Conflict {
                        first_agent: stances[*si].agent.clone(),
                        first: ri.id.clone(),
                        second_agent: stances[*sj].agent.clone(),
                        second: rj.id.clone(),
                        reason: "contradictory arities",
                    });
                }
                if preds && ai == aj {
                    uf.union(i, j);
                }
            }
        }
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..mapped.len() {
            let root = uf.find(i);
            classes.entry(root).or_default().push(i);
        }
        for (root, members) in classes {
            let (_, rep, args, _) = &mapped[root];
            let id = fresh_id(&rep.id, &mut used);
            let mut merged = Relation::new(rep.predicate.clone(), args.clone()).with_id(id.clone());
            merged.provenance = members.iter().map(|&m| mapped[m].1.provenance).min().unwrap();
            for &m in &members {
                merged.predicate_synsets.extend(mapped[m].3.iter().cloned());
                id_maps[mapped[m].0].insert(mapped[m].1.id.clone(), id.clone());
            }
            out.add_relation(merged)?;
        }
    }
    out.validate()?;
    Ok(MergeOutcome { ontology: out, id_maps })
}
