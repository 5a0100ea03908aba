//! Commonsense ontology expansion.
//!
//! Starting from `o`, `n = ⌊(η − 1)·|concepts(o)|⌋` new concepts are appended.
//! Each step draws a random concept of the growing ontology, collects its
//! knowledge-base neighbors not yet present, draws one of them and appends it
//! together with every KB edge linking it to a concept already present.
//! Draws are bounded by `max_attempts_factor · n`; running out of draws
//! yields a result flagged `partial`.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kb::KnowledgeBase;
use crate::ontology::{Concept, ConceptOrigin, Ontology, Relation, RelationOrigin};

pub const DEFAULT_ETA_MAX: f64 = 6.0;
pub const DEFAULT_MAX_ATTEMPTS_FACTOR: usize = 100;

// Guards against (η − 1)·|c| landing a hair below an integer.
const FLOOR_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionConfig {
    pub eta: f64,
    pub eta_max: f64,
    pub seed: u64,
    pub max_attempts_factor: usize,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            eta: 1.0,
            eta_max: DEFAULT_ETA_MAX,
            seed: 0,
            max_attempts_factor: DEFAULT_MAX_ATTEMPTS_FACTOR,
        }
    }
}

impl ExpansionConfig {
    pub fn new(eta: f64, seed: u64) -> Self {
        Self { eta, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ExpansionError> {
        if !(self.eta >= 1.0 && self.eta <= self.eta_max) {
            return Err(ExpansionError::EtaOutOfRange { eta: self.eta, eta_max: self.eta_max });
        }
        if self.max_attempts_factor == 0 {
            return Err(ExpansionError::NoAttempts);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpansionError {
    #[error("expansion factor {eta} outside [1, {eta_max}]")]
    EtaOutOfRange { eta: f64, eta_max: f64 },
    #[error("max_attempts_factor must be positive")]
    NoAttempts,
}

/// Number of concepts to append for factor `eta`.
pub fn target_count(eta: f64, num_concepts: usize) -> usize {
    ((eta - 1.0) * num_concepts as f64 + FLOOR_EPS).floor().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub ontology: Ontology,
    /// Ids of appended concepts, in append order.
    pub appended: Vec<String>,
    /// Concepts the factor asked for.
    pub requested: usize,
    /// Fewer than `requested` concepts could be appended.
    pub partial: bool,
}

/// Seeded expansion engine; successive calls continue one random stream.
pub struct Expander<'a> {
    kb: &'a KnowledgeBase,
    rng: ChaCha8Rng,
    max_attempts_factor: usize,
}

impl<'a> Expander<'a> {
    pub fn new(kb: &'a KnowledgeBase, seed: u64, max_attempts_factor: usize) -> Self {
        Self {
            kb,
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_attempts_factor,
        }
    }

    /// Appends up to `n` concepts to `o`, returning the appended ids.
    pub fn append(&mut self, o: &mut Ontology, n: usize) -> Vec<String> {
        let mut appended = Vec::new();
        let budget = n.saturating_mul(self.max_attempts_factor);
        let mut ids: Vec<String> = o.concepts().map(|c| c.id.clone()).collect();
        let mut by_label: BTreeMap<String, String> = BTreeMap::new();
        for c in o.concepts() {
            by_label.entry(c.label.clone()).or_insert_with(|| c.id.clone());
        }
        let mut attempts = 0;
        while appended.len() < n && attempts < budget && !ids.is_empty() {
            attempts += 1;
            let con = &ids[self.rng.gen_range(0..ids.len())];
            let label = o.concept(con).expect("tracked id").label.clone();
            let fresh: Vec<&str> = self
                .kb
                .neighbor_labels(&label)
                .into_iter()
                .filter(|l| !by_label.contains_key(*l))
                .collect();
            if fresh.is_empty() {
                continue;
            }
            let new_label = fresh[self.rng.gen_range(0..fresh.len())].to_string();
            let mut id = new_label.clone();
            let mut k = 2;
            while o.contains_id(&id) {
                id = format!("{new_label}#{k}");
                k += 1;
            }
            o.add_concept(Concept::new(id.clone(), new_label.clone()).with_origin(ConceptOrigin::Expansion))
                .expect("fresh id and KB labels are valid");
            by_label.insert(new_label.clone(), id.clone());
            for e in self.kb.incident(&new_label) {
                let (Some(from), Some(to)) = (by_label.get(&e.from), by_label.get(&e.to)) else {
                    continue;
                };
                let r = Relation::new(e.predicate.clone(), [from.clone(), to.clone()])
                    .with_origin(RelationOrigin::Expansion);
                if o.find_relation(&r.predicate, &r.args).is_none() && !o.contains_id(&r.id) {
                    o.add_relation(r).expect("args were just resolved");
                }
            }
            ids.push(id.clone());
            appended.push(id);
        }
        appended
    }
}

/// One expansion of `o` by factor `cfg.eta`.
pub fn expand(o: &Ontology, cfg: &ExpansionConfig, kb: &KnowledgeBase) -> Result<Expansion, ExpansionError> {
    cfg.validate()?;
    let requested = target_count(cfg.eta, o.num_concepts());
    let mut out = o.clone();
    let appended = Expander::new(kb, cfg.seed, cfg.max_attempts_factor).append(&mut out, requested);
    Ok(Expansion {
        partial: appended.len() < requested,
        ontology: out,
        appended,
        requested,
    })
}

/// Nested expansions: the output for each factor in `etas` (ascending) extends
/// the previous one, all drawn from one random stream seeded by `cfg.seed`.
/// Concept targets are relative to the size of `o`.
pub fn expand_nested(
    o: &Ontology,
    etas: &[f64],
    cfg: &ExpansionConfig,
    kb: &KnowledgeBase,
) -> Result<Vec<Expansion>, ExpansionError> {
    let mut expander = Expander::new(kb, cfg.seed, cfg.max_attempts_factor);
    let base_size = o.num_concepts();
    let mut current = o.clone();
    let mut appended: Vec<String> = Vec::new();
    let mut out = Vec::with_capacity(etas.len());
    let mut last_eta = 1.0;
    for &eta in etas {
        ExpansionConfig { eta, ..cfg.clone() }.validate()?;
        if eta < last_eta {
            return Err(ExpansionError::EtaOutOfRange { eta, eta_max: cfg.eta_max });
        }
        last_eta = eta;
        let requested = target_count(eta, base_size);
        let missing = requested.saturating_sub(appended.len());
        appended.extend(expander.append(&mut current, missing));
        out.push(Expansion {
            ontology: current.clone(),
            appended: appended.clone(),
            requested,
            partial: appended.len() < requested,
        });
    }
    Ok(out)
}
