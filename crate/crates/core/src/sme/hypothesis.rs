use std::collections::BTreeSet;

use crate::kb::SynsetService;
use crate::ontology::{Ontology, Relation};

use super::SmeConfig;

/// A local match between one base relation and one target relation.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchHypothesis {
    pub base_relation: String,
    pub target_relation: String,
    /// Positional (base concept, target concept) pairs.
    pub entity_pairs: Vec<(String, String)>,
    /// The relation pair itself followed by positional relation-valued args.
    pub relation_pairs: Vec<(String, String)>,
    pub local_score: f64,
    pub(crate) label_match: bool,
}

fn one_to_one(pairs: &[(String, String)]) -> bool {
    pairs.iter().enumerate().all(|(i, (a, x))| {
        pairs[i + 1..]
            .iter()
            .all(|(b, y)| (a == b) == (x == y))
    })
}

fn compatible(p: &[(String, String)], q: &[(String, String)]) -> bool {
    p.iter()
        .all(|(a, x)| q.iter().all(|(b, y)| (a == b) == (x == y)))
}

impl MatchHypothesis {
    /// The hypothesis alone induces a one-to-one correspondence.
    pub fn is_self_consistent(&self) -> bool {
        one_to_one(&self.entity_pairs) && one_to_one(&self.relation_pairs)
    }

    /// The two hypotheses may belong to the same gmap.
    pub fn compatible_with(&self, other: &MatchHypothesis) -> bool {
        compatible(&self.entity_pairs, &other.entity_pairs)
            && compatible(&self.relation_pairs, &other.relation_pairs)
    }

    /// Distinct entity pairs, used for systematicity counting.
    pub fn distinct_entity_pairs(&self) -> BTreeSet<&(String, String)> {
        self.entity_pairs.iter().collect()
    }
}

pub(crate) fn predicates_correspond(
    base: &Relation,
    target: &Relation,
    syn: &SynsetService,
) -> Option<bool> {
    if base.predicate == target.predicate {
        return Some(true);
    }
    let bs = syn.effective(&base.predicate, &base.predicate_synsets);
    let ts = syn.effective(&target.predicate, &target.predicate_synsets);
    (!bs.is_disjoint(&ts)).then_some(false)
}

/// One hypothesis per equal-arity relation pair whose predicates share a label
/// or a synset and whose argument kinds agree position by position.
pub fn build_match_hypotheses(
    base: &Ontology,
    target: &Ontology,
    syn: &SynsetService,
    cfg: &SmeConfig,
) -> Vec<MatchHypothesis> {
    let mut out = Vec::new();
    for b in base.relations() {
        for t in target.relations() {
            if b.arity() != t.arity() {
                continue;
            }
            let Some(label_match) = predicates_correspond(b, t, syn) else {
                continue;
            };
            let mut entity_pairs = Vec::new();
            let mut relation_pairs = vec![(b.id.clone(), t.id.clone())];
            let mut kinds_agree = true;
            for (ba, ta) in b.args.iter().zip(&t.args) {
                match (base.is_concept(ba), target.is_concept(ta)) {
                    (true, true) => entity_pairs.push((ba.clone(), ta.clone())),
                    (false, false) => relation_pairs.push((ba.clone(), ta.clone())),
                    _ => kinds_agree = false,
                }
            }
            if !kinds_agree {
                continue;
            }
            let local_score = cfg.w_rel + if label_match { cfg.w_label } else { 0.0 };
            out.push(MatchHypothesis {
                base_relation: b.id.clone(),
                target_relation: t.id.clone(),
                entity_pairs,
                relation_pairs,
                local_score,
                label_match,
            });
        }
    }
    out
}
