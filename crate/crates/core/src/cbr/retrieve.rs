use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::expand::{expand, ExpansionConfig};
use crate::kb::SynsetService;
use crate::ontology::{Case, Ontology, Relation};
use crate::sme::{CandidateInference, GMap};

use super::{derive_seed, CaseBase, Cbr, CbrError, Direction};

/// Jaccard similarity of the concept synset ids of two ontologies. A concept
/// without synsets contributes its label instead.
pub fn smatch(a: &Ontology, b: &Ontology, syn: &SynsetService) -> f64 {
    let ids = |o: &Ontology| -> BTreeSet<String> {
        o.concepts()
            .flat_map(|c| {
                let s = syn.effective(&c.label, &c.synsets);
                if s.is_empty() {
                    vec![c.label.clone()]
                } else {
                    s.into_iter().collect()
                }
            })
            .collect()
    };
    let (x, y) = (ids(a), ids(b));
    let union = x.union(&y).count();
    if union == 0 {
        return 1.0;
    }
    x.intersection(&y).count() as f64 / union as f64
}

fn duplicates(r_pred: &str, r_syn: &BTreeSet<String>, r_args: &[String], res: &Relation, syn: &SynsetService) -> bool {
    r_args == res.args.as_slice()
        && (r_pred == res.predicate
            || !syn
                .effective(r_pred, r_syn)
                .is_disjoint(&syn.effective(&res.predicate, &res.predicate_synsets)))
}

/// True iff every agent of `current` is a target of `g`, and no matched target
/// relation and no ground inference of `g` duplicates a reservation.
/// `target` is the ontology `g` maps into.
pub fn sat(g: &GMap, inferences: &[CandidateInference], target: &Ontology, current: &Case, syn: &SynsetService) -> bool {
    let targets: BTreeSet<&str> = g.entity_map.values().map(String::as_str).collect();
    if !current.agents.iter().all(|a| targets.contains(a.as_str())) {
        return false;
    }
    let reservations: Vec<&Relation> = current
        .reservations
        .iter()
        .filter_map(|id| current.ontology.relation(id))
        .collect();
    let matched = g.matched_targets().filter_map(|id| target.relation(id));
    for r in matched {
        if reservations.iter().any(|res| duplicates(&r.predicate, &r.predicate_synsets, &r.args, res, syn)) {
            return false;
        }
    }
    for inf in inferences.iter().filter(|i| i.is_ground()) {
        let args: Vec<String> = inf.args.iter().filter_map(|a| a.target().map(str::to_string)).collect();
        if reservations
            .iter()
            .any(|res| duplicates(&inf.predicate, &inf.predicate_synsets, &args, res, syn))
        {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Selected,
    Candidate,
    RejectedSat,
    RejectedSmatch,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Selected => "selected",
            Self::Candidate => "candidate",
            Self::RejectedSat => "rejected:sat",
            Self::RejectedSmatch => "rejected:smatch",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseScore {
    pub case_id: String,
    pub domain: String,
    pub ses: f64,
    pub smatch: f64,
    pub sat: bool,
    pub status: Status,
}

/// One row per case base case, ranked by ses (descending) then case id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    pub rows: Vec<CaseScore>,
}

impl ScoreTable {
    pub const HEADER: &'static str = "case_id\tdomain\tses\tsmatch\tsat\tstatus";

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
                r.case_id, r.domain, r.ses, r.smatch, r.sat, r.status
            );
        }
        out
    }
}

/// A case that passed the filters, with its best expansion of the query.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedCase {
    pub case_id: String,
    /// ô_i: the expansion of the query that best matches the case.
    pub expansion: Ontology,
    /// Best gmap from the case ontology onto `expansion` satisfying Sat.
    pub gmap: GMap,
    pub ses_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub case_id: String,
    pub best_expansion: Ontology,
    pub gmap: GMap,
    pub ses_total: f64,
    pub table: ScoreTable,
    /// All candidates surviving the filters, best first.
    pub ranked: Vec<RankedCase>,
}

struct Evaluated {
    score: CaseScore,
    ranked: Option<RankedCase>,
}

impl Cbr<'_> {
    fn evaluate(&self, query: &Case, query_wide: &Ontology, case: &Case) -> Result<Evaluated, CbrError> {
        let sampled = self.sample_best_expansion(
            &case.ontology,
            &query.ontology,
            Direction::FixedIsBase,
            &["retrieve", &query.case_id, &case.case_id],
        )?;
        let best_sat = sampled
            .gmaps
            .iter()
            .find(|g| sat(g, &g.inferences, &sampled.ontology, query, &self.syn));
        let wide = self.wide_expansion(&case.ontology, &["smatch", &case.case_id])?;
        let sm = smatch(&wide, query_wide, &self.syn);
        let status = if best_sat.is_none() {
            Status::RejectedSat
        } else if !self.cfg.allow_same_domain && sm > self.cfg.sigma {
            Status::RejectedSmatch
        } else {
            Status::Candidate
        };
        let ranked = (status == Status::Candidate).then(|| RankedCase {
            case_id: case.case_id.clone(),
            expansion: sampled.ontology.clone(),
            gmap: best_sat.expect("candidate satisfies Sat").clone(),
            ses_total: sampled.score,
        });
        Ok(Evaluated {
            score: CaseScore {
                case_id: case.case_id.clone(),
                domain: case.domain_tag.clone(),
                ses: sampled.score,
                smatch: sm,
                sat: best_sat.is_some(),
                status,
            },
            ranked,
        })
    }

    /// The η_max expansion used for domain similarity.
    pub fn wide_expansion(&self, o: &Ontology, stream: &[&str]) -> Result<Ontology, CbrError> {
        let cfg = ExpansionConfig {
            eta: f64::from(self.cfg.eta_max),
            eta_max: f64::from(self.cfg.eta_max),
            seed: derive_seed(self.cfg.seed, stream),
            max_attempts_factor: self.cfg.max_attempts_factor,
        };
        Ok(expand(o, &cfg, self.kb)?.ontology)
    }

    /// Ranks the case base against a query case.
    pub fn retrieve(&self, query: &Case, cb: &CaseBase) -> Result<RetrievalResult, CbrError> {
        if !query.is_query() {
            return Err(CbrError::NotQuery(query.case_id.clone()));
        }
        if cb.is_empty() {
            return Err(CbrError::EmptyCaseBase);
        }
        let query_wide = self.wide_expansion(&query.ontology, &["smatch", "query", &query.case_id])?;
        let eval = |c: &Case| self.evaluate(query, &query_wide, c);
        let evaluated: Result<Vec<Evaluated>, CbrError> = if self.cfg.parallel {
            cb.cases().par_iter().map(eval).collect()
        } else {
            cb.cases().iter().map(eval).collect()
        };
        let mut evaluated = evaluated?;
        evaluated.sort_by(|a, b| {
            b.score
                .ses
                .total_cmp(&a.score.ses)
                .then_with(|| a.score.case_id.cmp(&b.score.case_id))
        });
        let mut ranked = Vec::new();
        let mut table = ScoreTable::default();
        for e in evaluated {
            let mut score = e.score;
            if let Some(r) = e.ranked {
                if ranked.is_empty() {
                    score.status = Status::Selected;
                }
                ranked.push(r);
            }
            table.rows.push(score);
        }
        let Some(top) = ranked.first().cloned() else {
            return Err(CbrError::NoPrecedent(table));
        };
        Ok(RetrievalResult {
            case_id: top.case_id,
            best_expansion: top.expansion,
            gmap: top.gmap,
            ses_total: top.ses_total,
            table,
            ranked,
        })
    }
}
