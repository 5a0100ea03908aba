//! Exhaustive reference for structure mapping: every relation pair is tried,
//! every consistent subset of hypotheses enumerated, and maximality checked
//! against the whole set rather than pairwise.

use std::collections::{BTreeMap, BTreeSet};

use cbrm_core::kb::SynsetService;
use cbrm_core::ontology::Ontology;
use cbrm_core::sme::{GMap, Matcher};

const W_REL: f64 = 1.0;
const W_LABEL: f64 = 0.5;
const W_SYS: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct Hyp {
    pub base: String,
    pub target: String,
    pub entities: Vec<(String, String)>,
    pub relations: Vec<(String, String)>,
    pub score: f64,
}

pub fn hypotheses(base: &Ontology, target: &Ontology, syn: &SynsetService) -> Vec<Hyp> {
    let mut out = Vec::new();
    for b in base.relations() {
        for t in target.relations() {
            if b.args.len() != t.args.len() {
                continue;
            }
            let mut bs = b.predicate_synsets.clone();
            bs.extend(syn.lookup(&b.predicate).iter().cloned());
            let mut ts = t.predicate_synsets.clone();
            ts.extend(syn.lookup(&t.predicate).iter().cloned());
            let same = b.predicate == t.predicate;
            if !same && bs.intersection(&ts).next().is_none() {
                continue;
            }
            let mut entities = Vec::new();
            let mut relations = vec![(b.id.clone(), t.id.clone())];
            let mut ok = true;
            for (x, y) in b.args.iter().zip(&t.args) {
                match (base.concept(x).is_some(), target.concept(y).is_some()) {
                    (true, true) => entities.push((x.clone(), y.clone())),
                    (false, false) => relations.push((x.clone(), y.clone())),
                    _ => ok = false,
                }
            }
            if ok {
                out.push(Hyp {
                    base: b.id.clone(),
                    target: t.id.clone(),
                    entities,
                    relations,
                    score: if same { W_REL + W_LABEL } else { W_REL },
                });
            }
        }
    }
    out
}

fn bijective<'a>(pairs: impl Iterator<Item = &'a (String, String)>) -> bool {
    let mut fwd: BTreeMap<&str, &str> = BTreeMap::new();
    let mut back: BTreeMap<&str, &str> = BTreeMap::new();
    for (a, b) in pairs {
        if *fwd.entry(a).or_insert(b) != b.as_str() || *back.entry(b).or_insert(a) != a.as_str() {
            return false;
        }
    }
    true
}

pub fn consistent(set: &[&Hyp]) -> bool {
    bijective(set.iter().flat_map(|h| h.entities.iter())) && bijective(set.iter().flat_map(|h| h.relations.iter()))
}

pub fn ses(set: &[&Hyp]) -> f64 {
    let local: f64 = set.iter().map(|h| h.score).sum();
    let mut uses: BTreeMap<&(String, String), usize> = BTreeMap::new();
    for h in set {
        let distinct: BTreeSet<&(String, String)> = h.entities.iter().collect();
        for p in distinct {
            *uses.entry(p).or_default() += 1;
        }
    }
    let extra: usize = uses.values().map(|d| d - 1).sum();
    local + W_SYS * extra as f64
}

/// One maximal consistent set: its (base, target) pairs and score.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleGmap {
    pub pairs: Vec<(String, String)>,
    pub ses: f64,
    pub entity_map: BTreeMap<String, String>,
    pub relation_map: BTreeMap<String, String>,
}

pub fn gmaps(base: &Ontology, target: &Ontology, syn: &SynsetService) -> Vec<OracleGmap> {
    let hyps = hypotheses(base, target, syn);
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::new();
    enumerate(&hyps, 0, &mut current, &mut sets);
    let mut out = Vec::new();
    for s in sets {
        if s.is_empty() {
            continue;
        }
        let members: Vec<&Hyp> = s.iter().map(|&i| &hyps[i]).collect();
        let maximal = (0..hyps.len()).filter(|i| !s.contains(i)).all(|i| {
            let mut with = members.clone();
            with.push(&hyps[i]);
            !consistent(&with)
        });
        if maximal {
            let mut pairs: Vec<(String, String)> = members.iter().map(|h| (h.base.clone(), h.target.clone())).collect();
            pairs.sort();
            out.push(OracleGmap {
                pairs,
                ses: ses(&members),
                entity_map: members.iter().flat_map(|h| h.entities.iter().cloned()).collect(),
                relation_map: members.iter().flat_map(|h| h.relations.iter().cloned()).collect(),
            });
        }
    }
    out.sort_by(|a, b| a.pairs.cmp(&b.pairs));
    out
}

fn enumerate(hyps: &[Hyp], i: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if i == hyps.len() {
        out.push(current.clone());
        return;
    }
    enumerate(hyps, i + 1, current, out);
    current.push(i);
    let members: Vec<&Hyp> = current.iter().map(|&j| &hyps[j]).collect();
    if consistent(&members) {
        enumerate(hyps, i + 1, current, out);
    }
    current.pop();
}

/// Rendered inferences of `g`: unmatched base relations touching a mapped
/// concept, with unmapped concepts written `?id`.
pub fn inferences(base: &Ontology, g: &OracleGmap) -> BTreeSet<String> {
    let matched: BTreeSet<&String> = g.pairs.iter().map(|(b, _)| b).collect();
    let mut out = BTreeSet::new();
    'rel: for r in base.relations() {
        if matched.contains(&r.id) || !r.args.iter().any(|a| g.entity_map.contains_key(a)) {
            continue;
        }
        let mut args = Vec::new();
        for a in &r.args {
            if base.concept(a).is_some() {
                args.push(g.entity_map.get(a).cloned().unwrap_or_else(|| format!("?{a}")));
            } else {
                // relation-valued arguments outside the gmap have no image
                match g.relation_map.get(a) {
                    Some(t) => args.push(t.clone()),
                    None => continue 'rel,
                }
            }
        }
        out.insert(format!("({} {})", r.predicate, args.join(" ")));
    }
    out
}

fn engine_pairs(g: &GMap) -> Vec<(String, String)> {
    let mut p: Vec<_> = g
        .hypotheses
        .iter()
        .map(|h| (h.base_relation.clone(), h.target_relation.clone()))
        .collect();
    p.sort();
    p
}

/// Panics unless the engine's gmaps, scores and inferences equal the oracle's.
pub fn check_pair(base: &Ontology, target: &Ontology, syn: &SynsetService) {
    let mut engine = Matcher::new(syn).gmaps(base, target).unwrap();
    engine.sort_by_key(engine_pairs);
    let expected = gmaps(base, target, syn);
    assert_eq!(engine.len(), expected.len(), "gmap count\nbase {base:?}\ntarget {target:?}");
    for (g, o) in engine.iter().zip(&expected) {
        assert_eq!(engine_pairs(g), o.pairs);
        assert_eq!(g.ses, o.ses, "ses of {:?}", o.pairs);
        assert_eq!(g.entity_map, o.entity_map);
        let rendered: BTreeSet<String> = g.inferences.iter().map(ToString::to_string).collect();
        assert_eq!(rendered, inferences(base, o));
    }
}
