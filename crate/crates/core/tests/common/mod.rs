#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use cbrm_core::cbr::CaseBase;
use cbrm_core::expand::{expand, ExpansionConfig};
use cbrm_core::format::{parse_case, parse_ontology, serialize_case, serialize_ontology};
use cbrm_core::kb::{KnowledgeBase, SynsetService};
use cbrm_core::ontology::{
    is_sub_ontology, Case, Concept, ConceptOrigin, Ontology, Relation, RelationOrigin,
};
use cbrm_core::session::SessionTranscript;
use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn kb() -> KnowledgeBase {
    KnowledgeBase::load_dir(&fixtures().join("kb")).expect("fixture kb")
}

pub fn onto(name: &str) -> Ontology {
    let path = fixtures().join("onto").join(format!("{name}.onto"));
    parse_ontology(&fs::read_to_string(path).unwrap()).unwrap()
}

pub fn case_at(path: &Path) -> Case {
    parse_case(&fs::read_to_string(path).unwrap()).unwrap()
}

pub fn orange_case() -> Case {
    case_at(&fixtures().join("casebase/orange.case"))
}

pub fn sinai_case() -> Case {
    case_at(&fixtures().join("cases/sinai.case"))
}

pub fn casebase10() -> CaseBase {
    CaseBase::load(&fixtures().join("casebase10")).unwrap()
}

/// Copies a fixture case base directory into `dest`.
pub fn copy_casebase(name: &str, dest: &Path) {
    fs::create_dir_all(dest).unwrap();
    for e in fs::read_dir(fixtures().join(name)).unwrap() {
        let e = e.unwrap();
        fs::copy(e.path(), dest.join(e.file_name())).unwrap();
    }
}

/// Predicates of the random vocabulary; pairs share a synset.
pub const PREDICATES: [&str; 6] = ["desires", "wants", "partOf", "aspectOf", "usedFor", "gets"];

pub fn pool_synsets() -> SynsetService {
    SynsetService::from_pairs([
        ("desires", "want.v.01"),
        ("wants", "want.v.01"),
        ("partOf", "part.n.01"),
        ("aspectOf", "part.n.01"),
        ("usedFor", "use.v.01"),
    ])
}

/// Random ontology over `prefix0..prefix{k}` with up to `max_relations`
/// relations, mostly binary, occasionally ternary, repeated-argument or
/// relation-valued.
pub fn random_ontology<R: Rng>(rng: &mut R, prefix: &str, max_relations: usize) -> Ontology {
    let mut o = Ontology::new();
    let k = rng.gen_range(2..=5);
    let ids: Vec<String> = (0..k).map(|i| format!("{prefix}{i}")).collect();
    for id in &ids {
        o.add_concept(Concept::labeled(id.as_str())).unwrap();
    }
    let n = rng.gen_range(0..=max_relations);
    let mut attempts = 0;
    while o.num_relations() < n && attempts < 50 {
        attempts += 1;
        let pred = *PREDICATES.choose(rng).unwrap();
        let roll: f64 = rng.gen();
        let args: Vec<String> = if roll < 0.1 {
            (0..3).map(|_| ids.choose(rng).unwrap().clone()).collect()
        } else if roll < 0.2 && o.num_relations() > 0 {
            let rels: Vec<String> = o.relations().map(|r| r.id.clone()).collect();
            vec![rels.choose(rng).unwrap().clone(), ids.choose(rng).unwrap().clone()]
        } else {
            (0..2).map(|_| ids.choose(rng).unwrap().clone()).collect()
        };
        let r = Relation::new(pred, args);
        if !o.contains_id(&r.id) {
            o.add_relation(r).unwrap();
        }
    }
    o.validate().unwrap();
    o
}

const CASE_IDS: [&str; 10] = ["a", "b", "c2", "sister_1", "x.y", "peel-top", "né", "z9", "k", "long_concept_name"];
const CASE_PREDICATES: [&str; 6] = ["desires", "partOf", "usedFor", "gets", "has-part", "p.q"];
const CASE_SYNSETS: [&str; 3] = ["want.v.01", "part.n.01", "x.n.02"];

fn random_synsets<R: Rng>(rng: &mut R) -> Vec<&'static str> {
    CASE_SYNSETS.iter().copied().filter(|_| rng.gen_bool(0.3)).collect()
}

/// Random valid case over a small token pool with unusual characters.
pub fn random_case<R: Rng>(rng: &mut R) -> Case {
    let mut o = Ontology::new();
    let n = rng.gen_range(1..=CASE_IDS.len());
    let ids: Vec<&str> = CASE_IDS.choose_multiple(rng, n).copied().collect();
    for id in &ids {
        let label = if rng.gen_bool(0.7) { id.to_string() } else { format!("l_{}", rng.gen_range(0..5)) };
        let origin = if rng.gen_bool(0.2) { ConceptOrigin::Expansion } else { ConceptOrigin::Original };
        o.add_concept(Concept::new(*id, label).with_synsets(random_synsets(rng)).with_origin(origin))
            .unwrap();
    }
    for i in 0..rng.gen_range(0..8) {
        let arity = rng.gen_range(2..=3);
        let args: Vec<&str> = (0..arity).map(|_| *ids.choose(rng).unwrap()).collect();
        let mut r = Relation::new(*CASE_PREDICATES.choose(rng).unwrap(), args);
        if rng.gen_bool(0.2) {
            r = r.with_id(format!("r{i}"));
        }
        r.predicate_synsets = random_synsets(rng).into_iter().map(String::from).collect();
        r = r.with_origin(*[RelationOrigin::Original, RelationOrigin::Expansion, RelationOrigin::Inferred]
            .choose(rng)
            .unwrap());
        if !o.contains_id(&r.id) {
            o.add_relation(r).unwrap();
        }
    }
    let rel_ids: Vec<String> = o.relations().map(|r| r.id.clone()).collect();
    let mut case = Case::new(format!("case{}", rng.gen_range(0..100)), *["fruit", "territory"].choose(rng).unwrap(), o);
    let pick = |rng: &mut R, from: &[String]| -> Vec<String> {
        let k = rng.gen_range(0..=from.len().min(3));
        from.iter().cloned().choose_multiple(rng, k)
    };
    let concept_ids: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
    case.agents.extend(pick(rng, &concept_ids));
    case.goals.extend(pick(rng, &rel_ids));
    case.reservations.extend(pick(rng, &rel_ids));
    case.solution.extend(pick(rng, &rel_ids));
    case.validate().unwrap();
    case
}

/// (predicate, from, to) rows of the fixture edge file, read directly.
pub fn edge_rows() -> Vec<(String, String, String)> {
    fs::read_to_string(fixtures().join("kb/edges.tsv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].to_string(), f[1].to_string(), f[2].to_string())
        })
        .collect()
}

pub fn kb_labels() -> Vec<String> {
    let set: BTreeSet<String> = edge_rows().into_iter().flat_map(|(_, a, b)| [a, b]).collect();
    set.into_iter().collect()
}

/// A few KB concepts with some of the KB edges among them, plus maybe an
/// isolated concept the KB does not know.
pub fn random_kb_ontology<R: Rng>(rng: &mut R) -> Ontology {
    let labels = kb_labels();
    let mut o = Ontology::new();
    let k = rng.gen_range(1..=5);
    for l in labels.choose_multiple(rng, k) {
        o.add_concept(Concept::labeled(l.as_str())).unwrap();
    }
    if rng.gen_bool(0.2) {
        o.add_concept(Concept::labeled("unknown_thing")).unwrap();
    }
    for (p, a, b) in edge_rows() {
        if o.is_concept(&a) && o.is_concept(&b) && rng.gen_bool(0.5) {
            o.add_relation(Relation::new(p, [a, b])).unwrap();
        }
    }
    o
}

pub fn check_expansion_contract(o: &Ontology, eta: f64, seed: u64) {
    let kb = kb();
    let rows = edge_rows();
    let e = expand(o, &ExpansionConfig::new(eta, seed), &kb).unwrap();
    let n = ((eta - 1.0) * o.num_concepts() as f64).floor() as usize;
    assert_eq!(e.requested, n);
    if e.partial {
        assert!(e.appended.len() < n);
    } else {
        assert_eq!(e.appended.len(), n);
    }
    assert_eq!(e.ontology.num_concepts(), o.num_concepts() + e.appended.len());
    assert!(is_sub_ontology(o, &e.ontology));
    for id in &e.appended {
        let c = e.ontology.concept(id).unwrap();
        assert_eq!(c.provenance, ConceptOrigin::Expansion);
    }
    // every added relation is a KB edge, and every KB edge between present
    // concepts that touches an appended one was added
    for r in e.ontology.relations().filter(|r| r.provenance == RelationOrigin::Expansion) {
        let l = |id: &str| e.ontology.concept(id).unwrap().label.clone();
        assert!(rows.contains(&(r.predicate.clone(), l(&r.args[0]), l(&r.args[1]))));
    }
    let labels: BTreeSet<String> = e.ontology.concepts().map(|c| c.label.clone()).collect();
    let fresh: BTreeSet<String> = e.appended.iter().map(|id| e.ontology.concept(id).unwrap().label.clone()).collect();
    for (p, a, b) in &rows {
        if labels.contains(a) && labels.contains(b) && (fresh.contains(a) || fresh.contains(b)) {
            assert!(
                e.ontology.find_relation(p, &[a.clone(), b.clone()]).is_some(),
                "missing ({p} {a} {b})"
            );
        }
    }
    let again = expand(o, &ExpansionConfig::new(eta, seed), &kb).unwrap();
    assert_eq!(again, e);
}

/// Checks the final proposal against the knowledge base directly: each
/// country receives a distinct aspect of the sinai, that aspect is needed for
/// what the country finally wants, and nobody is handed control.
pub fn recheck_session(t: &SessionTranscript, kb: &KnowledgeBase) {
    let has = |p: &str, a: &str, b: &str| kb.edges().iter().any(|e| e.predicate == p && e.from == a && e.to == b);
    let round = t.rounds.last().unwrap();
    let p = round.proposal.as_ref().unwrap();
    let label = |id: &str| p.ontology.concept(id).unwrap().label.clone();
    let mut granted = Vec::new();
    for r in p.solution_relations() {
        assert_eq!(r.predicate, "gets", "{r}");
        assert_ne!(r.predicate, "controls");
        granted.push((label(&r.args[0]), label(&r.args[1])));
    }
    let owners: BTreeSet<&str> = granted.iter().map(|(a, _)| a.as_str()).collect();
    let things: BTreeSet<&str> = granted.iter().map(|(_, y)| y.as_str()).collect();
    assert_eq!(owners, BTreeSet::from(["egypt", "israel"]));
    assert_eq!(things.len(), 2);
    for (_, y) in &granted {
        assert!(has("aspectOf", y, "sinai"), "{y} is not an aspect of the sinai");
    }
    for s in &t.final_stances {
        for g in &s.goals {
            let g = s.fragment.relation(g).unwrap();
            let agent = s.fragment.concept(&g.args[0]).unwrap().label.clone();
            let wanted = s.fragment.concept(&g.args[1]).unwrap().label.clone();
            assert!(
                granted.iter().any(|(a, y)| *a == agent && (*y == wanted || has("neededFor", y, &wanted))),
                "goal of {agent} for {wanted} unmet by {granted:?}"
            );
        }
        for r in &s.reservations {
            let r = s.fragment.relation(r).unwrap();
            let (who, what) = (label(&r.args[0]), label(&r.args[1]));
            assert!(!p
                .solution_relations()
                .any(|x| x.predicate == r.predicate && label(&x.args[0]) == who && label(&x.args[1]) == what));
        }
    }
}

/// Every bundled `.onto` and `.case` file.
pub fn fixture_files() -> Vec<PathBuf> {
    let root = fixtures();
    let mut out = Vec::new();
    for dir in ["onto", "cases", "casebase", "casebase10"] {
        for e in fs::read_dir(root.join(dir)).unwrap() {
            let p = e.unwrap().path();
            if matches!(p.extension().and_then(|x| x.to_str()), Some("onto" | "case")) {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

/// Canonical serialization of a fixture file.
pub fn canonical(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    if path.extension().unwrap() == "case" {
        serialize_case(&parse_case(&text).unwrap()).unwrap()
    } else {
        serialize_ontology(&parse_ontology(&text).unwrap()).unwrap()
    }
}
