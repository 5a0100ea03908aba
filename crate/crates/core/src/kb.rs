//! Offline commonsense knowledge: an edge store in the style of a ConceptNet
//! dump plus WordNet-like synset and hypernym tables.
//!
//! File formats (UTF-8, `#` starts a comment line, blank lines ignored):
//!
//! ```text
//! edges.tsv      predicate<TAB>from<TAB>to<TAB>weight
//! synsets.tsv    synset_id<TAB>word1,word2,...
//! hypernyms.tsv  synset_id<TAB>hypernym_synset_id
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ontology::{is_valid_label, Concept, ConceptOrigin, Ontology, Relation, RelationOrigin};

pub const EDGES_FILE: &str = "edges.tsv";
pub const SYNSETS_FILE: &str = "synsets.tsv";
pub const HYPERNYMS_FILE: &str = "hypernyms.tsv";

#[derive(Debug, Error)]
pub enum KbError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("hypernym cycle: {}", .0.join(" -> "))]
    HypernymCycle(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub predicate: String,
    pub from: String,
    pub to: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    edges: Vec<Edge>,
    adjacency: BTreeMap<String, Vec<usize>>,
    synsets: BTreeMap<String, BTreeSet<String>>,
    hypernyms: BTreeSet<(String, String)>,
}

impl KnowledgeBase {
    /// Builds and validates a knowledge base. Duplicate edges collapse to the
    /// maximum weight.
    pub fn from_parts(
        edges: impl IntoIterator<Item = Edge>,
        synsets: BTreeMap<String, BTreeSet<String>>,
        hypernyms: BTreeSet<(String, String)>,
    ) -> Result<Self, KbError> {
        let mut index: BTreeMap<(String, String, String), usize> = BTreeMap::new();
        let mut kept: Vec<Edge> = Vec::new();
        for e in edges {
            let key = (e.predicate.clone(), e.from.clone(), e.to.clone());
            match index.get(&key) {
                Some(&i) => kept[i].weight = kept[i].weight.max(e.weight),
                None => {
                    index.insert(key, kept.len());
                    kept.push(e);
                }
            }
        }
        let mut adjacency: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, e) in kept.iter().enumerate() {
            adjacency.entry(e.from.clone()).or_default().push(i);
            if e.to != e.from {
                adjacency.entry(e.to.clone()).or_default().push(i);
            }
        }
        if let Some(cycle) = find_cycle(&hypernyms) {
            return Err(KbError::HypernymCycle(cycle));
        }
        Ok(Self {
            edges: kept,
            adjacency,
            synsets,
            hypernyms,
        })
    }

    pub fn load(edge_path: &Path, synset_path: &Path, hypernym_path: &Path) -> Result<Self, KbError> {
        let edges = read_edges(edge_path)?;
        let synsets = read_synsets(synset_path)?;
        let hypernyms = read_hypernyms(hypernym_path)?;
        Self::from_parts(edges, synsets, hypernyms)
    }

    /// Loads `edges.tsv`, `synsets.tsv` and `hypernyms.tsv` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, KbError> {
        Self::load(&dir.join(EDGES_FILE), &dir.join(SYNSETS_FILE), &dir.join(HYPERNYMS_FILE))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn synsets(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.synsets
    }

    pub fn hypernyms(&self) -> &BTreeSet<(String, String)> {
        &self.hypernyms
    }

    /// Edges incident to `label`, in load order.
    pub fn incident(&self, label: &str) -> impl Iterator<Item = &Edge> {
        self.adjacency
            .get(label)
            .into_iter()
            .flatten()
            .map(move |&i| &self.edges[i])
    }

    /// Labels adjacent to `label` in either direction.
    pub fn neighbor_labels(&self, label: &str) -> BTreeSet<&str> {
        self.incident(label)
            .map(|e| if e.from == label { e.to.as_str() } else { e.from.as_str() })
            .filter(|l| *l != label)
            .collect()
    }

    pub fn degree(&self, label: &str) -> usize {
        self.adjacency.get(label).map_or(0, Vec::len)
    }

    /// Edges between two labels, either direction.
    pub fn edges_between<'a>(&'a self, a: &'a str, b: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.incident(a).filter(move |e| {
            (e.from == a && e.to == b) || (e.from == b && e.to == a)
        })
    }

    /// The query concept, every adjacent concept and the connecting relations,
    /// keeping edge direction.
    pub fn neighbors(&self, concept_label: &str) -> Ontology {
        let mut o = Ontology::new();
        if !is_valid_label(concept_label) {
            return o;
        }
        o.add_concept(Concept::labeled(concept_label))
            .expect("fresh ontology");
        for n in self.neighbor_labels(concept_label) {
            if is_valid_label(n) {
                let _ = o.add_concept(Concept::labeled(n).with_origin(ConceptOrigin::Expansion));
            }
        }
        for e in self.incident(concept_label) {
            if o.is_concept(&e.from) && o.is_concept(&e.to) {
                let r = Relation::new(e.predicate.clone(), [e.from.clone(), e.to.clone()])
                    .with_origin(RelationOrigin::Expansion);
                let _ = o.intern_relation(r);
            }
        }
        o
    }

    /// Word → synsets lookup.
    pub fn synset_service(&self) -> SynsetService {
        let mut words: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (sid, ws) in &self.synsets {
            for w in ws {
                words.entry(w.clone()).or_default().insert(sid.clone());
            }
        }
        SynsetService { words }
    }

    /// Copy without any edge touching one of `labels`.
    pub fn without_concepts(&self, labels: &[&str]) -> Self {
        let edges = self
            .edges
            .iter()
            .filter(|e| !labels.contains(&e.from.as_str()) && !labels.contains(&e.to.as_str()))
            .cloned();
        Self::from_parts(edges, self.synsets.clone(), self.hypernyms.clone())
            .expect("subset of a valid knowledge base")
    }
}

/// Total word → synset-id lookup. Unknown words map to the empty set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynsetService {
    words: BTreeMap<String, BTreeSet<String>>,
}

static EMPTY: BTreeSet<String> = BTreeSet::new();

impl SynsetService {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, W, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (W, S)>,
        W: Into<String>,
        S: Into<String>,
    {
        let mut words: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (w, s) in pairs {
            words.entry(w.into().to_lowercase()).or_default().insert(s.into());
        }
        Self { words }
    }

    /// Synsets of `word`, case-insensitively.
    pub fn lookup(&self, word: &str) -> &BTreeSet<String> {
        if let Some(s) = self.words.get(word) {
            return s;
        }
        self.words.get(&word.to_lowercase()).unwrap_or(&EMPTY)
    }

    /// Stored synsets united with those looked up for `word`.
    pub fn effective(&self, word: &str, stored: &BTreeSet<String>) -> BTreeSet<String> {
        let mut out = stored.clone();
        out.extend(self.lookup(word).iter().cloned());
        out
    }

    pub fn overlap(&self, a: &str, b: &str) -> bool {
        a == b || !self.lookup(a).is_disjoint(self.lookup(b))
    }
}

/// True iff the words are identical or share a synset.
pub fn synset_overlap(syn: &SynsetService, a: &str, b: &str) -> bool {
    syn.overlap(a, b)
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, KbError> {
    let text = fs::read_to_string(path).map_err(|source| KbError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').to_string()))
        .collect())
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> KbError {
    KbError::Malformed {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read_edges(path: &Path) -> Result<Vec<Edge>, KbError> {
    let mut out = Vec::new();
    for (line, text) in read_lines(path)? {
        let cols: Vec<&str> = text.split('\t').collect();
        if cols.len() != 4 {
            return Err(malformed(path, line, format!("expected 4 columns, found {}", cols.len())));
        }
        let weight: f64 = cols[3]
            .trim()
            .parse()
            .map_err(|_| malformed(path, line, format!("bad weight `{}`", cols[3])))?;
        if weight.is_nan() || weight < 0.0 {
            return Err(malformed(path, line, "negative weight"));
        }
        let predicate = cols[0].trim();
        if predicate.is_empty() || predicate.contains(char::is_whitespace) {
            return Err(malformed(path, line, "bad predicate"));
        }
        for label in &cols[1..3] {
            if !is_valid_label(label.trim()) {
                return Err(malformed(path, line, format!("bad label `{label}`")));
            }
        }
        out.push(Edge {
            predicate: predicate.to_string(),
            from: cols[1].trim().to_string(),
            to: cols[2].trim().to_string(),
            weight,
        });
    }
    Ok(out)
}

fn read_synsets(path: &Path) -> Result<BTreeMap<String, BTreeSet<String>>, KbError> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (line, text) in read_lines(path)? {
        let (id, words) = text
            .split_once('\t')
            .ok_or_else(|| malformed(path, line, "expected synset_id<TAB>words"))?;
        let id = id.trim();
        if id.is_empty() {
            return Err(malformed(path, line, "empty synset id"));
        }
        let words: BTreeSet<String> = words
            .split(',')
            .map(|w| w.trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            return Err(malformed(path, line, "synset without words"));
        }
        if out.insert(id.to_string(), words).is_some() {
            return Err(malformed(path, line, format!("duplicate synset `{id}`")));
        }
    }
    Ok(out)
}

fn read_hypernyms(path: &Path) -> Result<BTreeSet<(String, String)>, KbError> {
    let mut out = BTreeSet::new();
    for (line, text) in read_lines(path)? {
        let cols: Vec<&str> = text.split('\t').map(str::trim).collect();
        if cols.len() != 2 || cols.iter().any(|c| c.is_empty()) {
            return Err(malformed(path, line, "expected synset_id<TAB>hypernym_synset_id"));
        }
        out.insert((cols[0].to_string(), cols[1].to_string()));
    }
    Ok(out)
}

fn find_cycle(edges: &BTreeSet<(String, String)>) -> Option<Vec<String>> {
    let mut graph: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in edges {
        graph.entry(a).or_default().push(b);
    }
    let mut state: BTreeMap<&str, u8> = BTreeMap::new();
    for &start in graph.keys() {
        if state.contains_key(start) {
            continue;
        }
        let mut path: Vec<(&str, usize)> = vec![(start, 0)];
        state.insert(start, 1);
        while let Some((node, idx)) = path.last().copied() {
            let next = graph.get(node).and_then(|v| v.get(idx)).copied();
            match next {
                Some(n) => {
                    path.last_mut().unwrap().1 += 1;
                    match state.get(n) {
                        Some(1) => {
                            let from = path.iter().position(|(p, _)| *p == n).unwrap();
                            let mut cycle: Vec<String> =
                                path[from..].iter().map(|(p, _)| p.to_string()).collect();
                            cycle.push(n.to_string());
                            return Some(cycle);
                        }
                        Some(_) => {}
                        None => {
                            state.insert(n, 1);
                            path.push((n, 0));
                        }
                    }
                }
                None => {
                    state.insert(node, 2);
                    path.pop();
                }
            }
        }
    }
    None
}
