//! Scripted mediation sessions.
//!
//! Each round merges the current stances into a query case, retrieves and
//! adapts a precedent, and presents the grounded solution to every party.
//! Unanimous acceptance ends the session and offers the solved case for
//! retention; otherwise rejecting parties disclose their scheduled deltas and
//! the next round starts.

mod policy;
mod spec_file;

pub use policy::{
    goal_satisfied, goals_met, policy_respond, reservation_violated, reservations_kept, AcceptRule, PartyPolicy,
    Proposal, StanceDelta, Verdict, PURPOSE_PREDICATE,
};
pub use spec_file::{parse_session, SessionSpec};

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::cbr::{AdaptationResult, CaseBase, Cbr, CbrError, ScoreTable};
use crate::merge::{merge_stances_mapped, MergeError};
use crate::ontology::{Case, Ontology, OntologyError, Stance};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("max_rounds must be at least 1")]
    NoRounds,
    #[error("no policy for agent `{0}`")]
    MissingPolicy(String),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error(transparent)]
    Cbr(#[from] CbrError),
    #[error("cannot apply disclosure of `{agent}`: {source}")]
    Delta {
        agent: String,
        #[source]
        source: OntologyError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accepted,
    NoPrecedent,
    RoundLimit,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Accepted => "accepted",
            Self::NoPrecedent => "no_precedent",
            Self::RoundLimit => "round_limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub t: u32,
    /// The middle-ground ontology of this round.
    pub ontology: Ontology,
    pub scores: ScoreTable,
    /// Case the proposal was adapted from; none when retrieval failed.
    pub retrieved: Option<String>,
    pub proposal: Option<Proposal>,
    /// The proposal met every current goal before it was presented.
    pub covered: bool,
    pub unbound: Vec<String>,
    pub verdicts: Vec<(String, Verdict)>,
    /// Agents who disclosed more after rejecting.
    pub revealed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionTranscript {
    pub session_id: String,
    pub rounds: Vec<Round>,
    pub outcome: Outcome,
    /// The case offered for retention on acceptance.
    pub solved: Option<Case>,
    pub retained: bool,
    /// Stances as they stood when the session ended.
    pub final_stances: Vec<Stance>,
}

fn render_relations(p: &Proposal) -> Vec<String> {
    p.solution_relations().map(ToString::to_string).collect()
}

impl SessionTranscript {
    pub fn final_proposal(&self) -> Option<&Proposal> {
        self.rounds.last()?.proposal.as_ref()
    }

    pub fn render(&self) -> String {
        let mut out = format!("session {}\n", self.session_id);
        for r in &self.rounds {
            let _ = writeln!(out, "round {}", r.t);
            let _ = writeln!(
                out,
                "  ontology {} concepts {} relations",
                r.ontology.num_concepts(),
                r.ontology.num_relations()
            );
            match &r.retrieved {
                Some(id) => {
                    let _ = writeln!(out, "  retrieved {id}");
                }
                None => out.push_str("  retrieved none\n"),
            }
            if let Some(p) = &r.proposal {
                for rel in render_relations(p) {
                    let _ = writeln!(out, "  proposal {rel}");
                }
                let _ = writeln!(out, "  goals-covered {}", r.covered);
            }
            for s in &r.unbound {
                let _ = writeln!(out, "  unbound ?{s}");
            }
            for (agent, v) in &r.verdicts {
                let _ = writeln!(out, "  {agent} {v}");
            }
            for agent in &r.revealed {
                let _ = writeln!(out, "  reveal {agent}");
            }
        }
        let _ = writeln!(out, "outcome {}", self.outcome);
        let _ = writeln!(out, "retained {}", self.retained);
        out
    }

    pub const TSV_HEADER: &'static str = "t\tretrieved\tcovered\tproposal\tverdicts\trevealed";

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(Self::TSV_HEADER);
        out.push('\n');
        for r in &self.rounds {
            let proposal = r.proposal.as_ref().map(render_relations).unwrap_or_default().join(" ");
            let verdicts: Vec<String> = r.verdicts.iter().map(|(a, v)| format!("{a}:{v}")).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.t,
                r.retrieved.as_deref().unwrap_or("-"),
                r.covered,
                proposal,
                verdicts.join(","),
                r.revealed.join(",")
            );
        }
        out
    }
}

/// Merges the stances into the round's query case.
pub fn query_case(id: &str, domain: &str, stances: &[Stance], cbr: &Cbr) -> Result<Case, MergeError> {
    let merged = merge_stances_mapped(stances, &cbr.syn)?;
    let mut case = Case::new(id, domain, merged.ontology.clone());
    for (i, s) in stances.iter().enumerate() {
        let map = |x: &str| merged.map_id(i, x).expect("merge maps every id").to_string();
        if merged.ontology.is_concept(&map(&s.agent)) {
            case.agents.insert(map(&s.agent));
        }
        case.goals.extend(s.goals.iter().map(|g| map(g)));
        case.reservations.extend(s.reservations.iter().map(|r| map(r)));
    }
    Ok(case)
}

fn proposal_of(query: &Case, a: &AdaptationResult) -> Proposal {
    Proposal {
        ontology: a.ontology.clone(),
        solution: a.grounded_solution.iter().cloned().collect(),
        excluded: query.goals.union(&query.reservations).cloned().collect(),
    }
}

/// Runs the mediation loop for at most `max_rounds` rounds.
pub fn run_session(
    spec: &SessionSpec,
    cb: &mut CaseBase,
    cbr: &Cbr,
    max_rounds: u32,
) -> Result<SessionTranscript, SessionError> {
    if max_rounds == 0 {
        return Err(SessionError::NoRounds);
    }
    for s in &spec.stances {
        if !spec.policies.iter().any(|p| p.agent == s.agent) {
            return Err(SessionError::MissingPolicy(s.agent.clone()));
        }
    }
    let mut stances = spec.stances.clone();
    let mut rounds = Vec::new();
    let mut outcome = Outcome::RoundLimit;
    let mut solved = None;
    let mut retained = false;

    for t in 0..max_rounds {
        let query = query_case(&spec.id, &spec.domain, &stances, cbr)?;
        let mut round = Round {
            t,
            ontology: query.ontology.clone(),
            scores: ScoreTable::default(),
            retrieved: None,
            proposal: None,
            covered: false,
            unbound: Vec::new(),
            verdicts: Vec::new(),
            revealed: Vec::new(),
        };
        let retrieval = match cbr.retrieve(&query, cb) {
            Ok(r) => r,
            Err(CbrError::NoPrecedent(table)) => {
                round.scores = table;
                rounds.push(round);
                outcome = Outcome::NoPrecedent;
                break;
            }
            Err(CbrError::EmptyCaseBase) => {
                rounds.push(round);
                outcome = Outcome::NoPrecedent;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        round.scores = retrieval.table.clone();

        // fall through the ranking until a proposal covers every goal
        let mut first: Option<(String, AdaptationResult, Proposal)> = None;
        let mut chosen = None;
        for cand in &retrieval.ranked {
            let star = cb.get(&cand.case_id).expect("ranked cases come from the case base");
            let adapted = match cbr.adapt(&query, star) {
                Ok(a) => a,
                Err(CbrError::NoMapping(_)) => continue,
                Err(e) => return Err(e.into()),
            };
            let p = proposal_of(&query, &adapted);
            let covered = stances.iter().all(|s| goals_met(s, &p, &cbr.syn));
            if covered {
                chosen = Some((cand.case_id.clone(), adapted, p, true));
                break;
            }
            if first.is_none() {
                first = Some((cand.case_id.clone(), adapted, p));
            }
        }
        let Some((star_id, adapted, proposal, covered)) =
            chosen.or_else(|| first.map(|(id, a, p)| (id, a, p, false)))
        else {
            rounds.push(round);
            outcome = Outcome::NoPrecedent;
            break;
        };
        round.retrieved = Some(star_id.clone());
        round.covered = covered;
        round.unbound = adapted.unbound.clone();

        let mut deltas = Vec::new();
        for s in &stances {
            let policy = spec.policies.iter().find(|p| p.agent == s.agent).expect("checked above");
            let (v, delta) = policy_respond(policy, &proposal, s, t, &cbr.syn);
            round.verdicts.push((s.agent.clone(), v));
            if let Some(d) = delta {
                deltas.push(d);
            }
        }
        round.proposal = Some(proposal);

        if round.verdicts.iter().all(|(_, v)| *v == Verdict::Accept) {
            let case = adapted.solved_case(&query);
            let star = cb.get(&star_id).expect("retrieved from the case base").clone();
            retained = cbr.retain(cb, &case, &star)?;
            solved = Some(case);
            rounds.push(round);
            outcome = Outcome::Accepted;
            break;
        }
        for d in deltas {
            let s = stances.iter_mut().find(|s| s.agent == d.agent).expect("policy agent has a stance");
            d.apply(s).map_err(|source| SessionError::Delta {
                agent: d.agent.clone(),
                source,
            })?;
            round.revealed.push(d.agent.clone());
        }
        rounds.push(round);
    }

    Ok(SessionTranscript {
        session_id: spec.id.clone(),
        rounds,
        outcome,
        solved,
        retained,
        final_stances: stances,
    })
}

/// Agents whose goals are unmet or reservations violated by `p`.
pub fn dissenters(stances: &[Stance], p: &Proposal, cbr: &Cbr) -> BTreeSet<String> {
    stances
        .iter()
        .filter(|s| !goals_met(s, p, &cbr.syn) || !reservations_kept(s, p, &cbr.syn))
        .map(|s| s.agent.clone())
        .collect()
}
