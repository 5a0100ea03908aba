use std::cmp::Ordering;
use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;

use super::hypothesis::MatchHypothesis;
use super::inference::CandidateInference;
use super::{SmeConfig, SmeError};

/// A maximal structurally consistent set of match hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct GMap {
    /// Sorted by (base relation, target relation).
    pub hypotheses: Vec<MatchHypothesis>,
    /// Injective base concept → target concept map.
    pub entity_map: BTreeMap<String, String>,
    /// Injective base relation → target relation map.
    pub relation_map: BTreeMap<String, String>,
    pub ses: f64,
    pub inferences: Vec<CandidateInference>,
}

impl GMap {
    pub(crate) fn assemble(mut hypotheses: Vec<MatchHypothesis>, cfg: &SmeConfig) -> Self {
        hypotheses.sort_by(|a, b| {
            (&a.base_relation, &a.target_relation).cmp(&(&b.base_relation, &b.target_relation))
        });
        let mut entity_map = BTreeMap::new();
        let mut relation_map = BTreeMap::new();
        for h in &hypotheses {
            for (b, t) in &h.entity_pairs {
                entity_map.insert(b.clone(), t.clone());
            }
            for (b, t) in &h.relation_pairs {
                relation_map.insert(b.clone(), t.clone());
            }
        }
        let ses = structural_score(&hypotheses, cfg);
        Self {
            hypotheses,
            entity_map,
            relation_map,
            ses,
            inferences: Vec::new(),
        }
    }

    /// True if `base_relation` is matched by some hypothesis.
    pub fn matches_base(&self, base_relation: &str) -> bool {
        self.hypotheses.iter().any(|h| h.base_relation == base_relation)
    }

    pub fn matched_targets(&self) -> impl Iterator<Item = &str> {
        self.hypotheses.iter().map(|h| h.target_relation.as_str())
    }

    /// Deterministic presentation order: ses descending, then entity map,
    /// then relation map, both lexicographically ascending.
    pub fn presentation_cmp(&self, other: &GMap) -> Ordering {
        other
            .ses
            .total_cmp(&self.ses)
            .then_with(|| self.entity_map.iter().cmp(other.entity_map.iter()))
            .then_with(|| self.relation_map.iter().cmp(other.relation_map.iter()))
    }
}

/// Structural evaluation score: the sum of local scores plus `w_sys · (d − 1)`
/// for every entity correspondence shared by `d ≥ 2` hypotheses.
pub fn structural_score(hypotheses: &[MatchHypothesis], cfg: &SmeConfig) -> f64 {
    let local: f64 = hypotheses.iter().map(|h| h.local_score).sum();
    let mut uses: BTreeMap<&(String, String), usize> = BTreeMap::new();
    for h in hypotheses {
        for pair in h.distinct_entity_pairs() {
            *uses.entry(pair).or_default() += 1;
        }
    }
    let shared: usize = uses.values().map(|d| d.saturating_sub(1)).sum();
    local + cfg.w_sys * shared as f64
}

/// Recomputes the score of a gmap.
pub fn ses(g: &GMap, cfg: &SmeConfig) -> f64 {
    structural_score(&g.hypotheses, cfg)
}

/// All maximal cliques of the compatibility graph over self-consistent
/// hypotheses (Bron–Kerbosch with pivoting). Returns index sets into `hyps`.
pub(crate) fn maximal_consistent_sets(
    hyps: &[MatchHypothesis],
    max_gmaps: usize,
) -> Result<Vec<Vec<usize>>, SmeError> {
    let vertices: Vec<usize> = (0..hyps.len()).filter(|&i| hyps[i].is_self_consistent()).collect();
    let n = vertices.len();
    let mut adj = vec![FixedBitSet::with_capacity(n); n];
    for i in 0..n {
        for j in i + 1..n {
            if hyps[vertices[i]].compatible_with(&hyps[vertices[j]]) {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return Ok(out);
    }
    let mut p = FixedBitSet::with_capacity(n);
    p.insert_range(..);
    let x = FixedBitSet::with_capacity(n);
    let mut r = Vec::new();
    bron_kerbosch(&adj, &mut r, p, x, &mut out, max_gmaps)?;
    Ok(out
        .into_iter()
        .map(|clique| clique.into_iter().map(|v| vertices[v]).collect())
        .collect())
}

fn bron_kerbosch(
    adj: &[FixedBitSet],
    r: &mut Vec<usize>,
    mut p: FixedBitSet,
    mut x: FixedBitSet,
    out: &mut Vec<Vec<usize>>,
    cap: usize,
) -> Result<(), SmeError> {
    if p.is_clear() {
        if x.is_clear() && !r.is_empty() {
            if out.len() >= cap {
                return Err(SmeError::TooManyGmaps { cap });
            }
            let mut clique = r.clone();
            clique.sort_unstable();
            out.push(clique);
        }
        return Ok(());
    }
    let pivot = p
        .ones()
        .chain(x.ones())
        .max_by_key(|&u| (p.intersection(&adj[u]).count(), std::cmp::Reverse(u)))
        .expect("p is nonempty");
    let candidates: Vec<usize> = p.difference(&adj[pivot]).collect();
    for v in candidates {
        let mut np = p.clone();
        np.intersect_with(&adj[v]);
        let mut nx = x.clone();
        nx.intersect_with(&adj[v]);
        r.push(v);
        bron_kerbosch(adj, r, np, nx, out, cap)?;
        r.pop();
        p.set(v, false);
        x.insert(v);
    }
    Ok(())
}
