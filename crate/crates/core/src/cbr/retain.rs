use crate::ontology::{Case, Ontology};
use crate::sme::{Matcher, SmeError};

use super::{CaseBase, Cbr, CbrError};

/// Best gmap score between `a` and `b`, normalized by the self-match score of
/// the smaller ontology and clamped to [0, 1].
pub fn similarity(a: &Ontology, b: &Ontology, matcher: &Matcher) -> Result<f64, SmeError> {
    let best = |x: &Ontology, y: &Ontology| -> Result<f64, SmeError> {
        Ok(matcher.best(x, y)?.map_or(0.0, |g| g.ses))
    };
    let smaller = if (a.num_relations(), a.num_concepts()) <= (b.num_relations(), b.num_concepts()) {
        a
    } else {
        b
    };
    let norm = best(smaller, smaller)?;
    if norm == 0.0 {
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    Ok((best(a, b)? / norm).clamp(0.0, 1.0))
}

impl Cbr<'_> {
    /// Stores `solved` unless it is too close to the precedent `star` or its
    /// id is already taken. Returns whether it was stored.
    pub fn retain(&self, cb: &mut CaseBase, solved: &Case, star: &Case) -> Result<bool, CbrError> {
        if solved.solution.is_empty() {
            return Err(CbrError::NoSolution(solved.case_id.clone()));
        }
        if cb.contains(&solved.case_id) {
            return Ok(false);
        }
        let s = similarity(&solved.ontology, &star.ontology, &self.matcher())?;
        if s >= self.cfg.theta {
            return Ok(false);
        }
        cb.add(solved.clone())
    }
}
