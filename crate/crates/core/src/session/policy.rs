use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::kb::SynsetService;
use crate::ontology::{Concept, Ontology, OntologyError, Relation, Stance};

/// Predicate whose synsets mark a purpose relation `(p means end)`.
pub const PURPOSE_PREDICATE: &str = "usedFor";

/// Additional disclosure by one agent after a rejection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StanceDelta {
    pub agent: String,
    /// The round whose rejection triggers the disclosure.
    pub round: u32,
    pub concepts: Vec<Concept>,
    pub relations: Vec<Relation>,
    pub goals: BTreeSet<String>,
    pub reservations: BTreeSet<String>,
    /// Goals and reservations withdrawn.
    pub retract: BTreeSet<String>,
}

impl StanceDelta {
    pub fn new(agent: impl Into<String>, round: u32) -> Self {
        Self {
            agent: agent.into(),
            round,
            concepts: Vec::new(),
            relations: Vec::new(),
            goals: BTreeSet::new(),
            reservations: BTreeSet::new(),
            retract: BTreeSet::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
            && self.relations.is_empty()
            && self.goals.is_empty()
            && self.reservations.is_empty()
            && self.retract.is_empty()
    }

    /// Applies the delta; elements already present are kept as they are.
    pub fn apply(&self, stance: &mut Stance) -> Result<(), OntologyError> {
        for c in &self.concepts {
            if !stance.fragment.contains_id(&c.id) {
                stance.fragment.add_concept(c.clone())?;
            }
        }
        for r in &self.relations {
            if !stance.fragment.contains_id(&r.id) {
                stance.fragment.add_relation(r.clone())?;
            }
        }
        stance.goals.extend(self.goals.iter().cloned());
        stance.reservations.extend(self.reservations.iter().cloned());
        for id in &self.retract {
            stance.goals.remove(id);
            stance.reservations.remove(id);
        }
        stance.t = stance.t.max(self.round + 1);
        stance.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AcceptRule {
    /// Accept iff every goal is met and no reservation is violated.
    #[default]
    Goals,
    AlwaysAccept,
    AlwaysReject,
}

impl AcceptRule {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "goals" => Some(Self::Goals),
            "always-accept" => Some(Self::AlwaysAccept),
            "always-reject" => Some(Self::AlwaysReject),
            _ => None,
        }
    }
}

/// Scripted party: an accept rule and a reveal schedule keyed by round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyPolicy {
    pub agent: String,
    pub rule: AcceptRule,
    pub schedule: BTreeMap<u32, StanceDelta>,
}

impl PartyPolicy {
    pub fn new(agent: impl Into<String>) -> Self {
        Self {
            agent: agent.into(),
            rule: AcceptRule::Goals,
            schedule: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Accept => "accept",
            Self::Reject => "reject",
        })
    }
}

/// A grounded solution in the context of the adapted dispute ontology.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub ontology: Ontology,
    pub solution: BTreeSet<String>,
    /// Relations that state goals or reservations rather than facts.
    pub excluded: BTreeSet<String>,
}

impl Proposal {
    pub fn solution_relations(&self) -> impl Iterator<Item = &Relation> {
        self.solution.iter().filter_map(|id| self.ontology.relation(id))
    }

    /// The solution plus every fact of the context.
    fn checkset(&self) -> impl Iterator<Item = &Relation> + Clone {
        self.ontology
            .relations()
            .filter(|r| self.solution.contains(&r.id) || !self.excluded.contains(&r.id))
    }
}

fn same_concept(a: &Ontology, x: &str, b: &Ontology, y: &str) -> bool {
    match (a.concept(x), b.concept(y)) {
        (Some(cx), Some(cy)) => cx.same_as(cy),
        _ => x == y,
    }
}

fn same_predicate(a: &Relation, b: &Relation, syn: &SynsetService) -> bool {
    a.predicate == b.predicate
        || !syn
            .effective(&a.predicate, &a.predicate_synsets)
            .is_disjoint(&syn.effective(&b.predicate, &b.predicate_synsets))
}

/// `r` (in `ro`) restates `g` (in `go`).
fn restates(go: &Ontology, g: &Relation, ro: &Ontology, r: &Relation, syn: &SynsetService) -> bool {
    g.arity() == r.arity()
        && same_predicate(g, r, syn)
        && g.args.iter().zip(&r.args).all(|(x, y)| same_concept(go, x, ro, y))
}

fn is_purpose(r: &Relation, syn: &SynsetService) -> bool {
    r.predicate == PURPOSE_PREDICATE || !syn.effective(&r.predicate, &r.predicate_synsets).is_disjoint(syn.lookup(PURPOSE_PREDICATE))
}

/// A goal `g` of fragment `go` holds under `p` if the solution or a context
/// fact restates it, or if, for a binary goal `(pred A X)`, the solution
/// grants `A` either `X` itself or something used for `X`.
pub fn goal_satisfied(go: &Ontology, g: &Relation, p: &Proposal, syn: &SynsetService) -> bool {
    let o = &p.ontology;
    if p.checkset().any(|r| restates(go, g, o, r, syn)) {
        return true;
    }
    let [agent, end] = &g.args[..] else {
        return false;
    };
    p.solution_relations()
        .filter(|s| s.arity() == 2 && same_concept(go, agent, o, &s.args[0]))
        .any(|s| {
            let means = &s.args[1];
            same_concept(go, end, o, means)
                || p.checkset().any(|u| {
                    u.arity() == 2 && is_purpose(u, syn) && &u.args[0] == means && same_concept(go, end, o, &u.args[1])
                })
        })
}

/// A reservation is violated when the solution restates it.
pub fn reservation_violated(go: &Ontology, res: &Relation, p: &Proposal, syn: &SynsetService) -> bool {
    p.solution_relations().any(|r| restates(go, res, &p.ontology, r, syn))
}

/// Every goal of `stance` holds under `p`.
pub fn goals_met(stance: &Stance, p: &Proposal, syn: &SynsetService) -> bool {
    stance
        .goals
        .iter()
        .filter_map(|id| stance.fragment.relation(id))
        .all(|g| goal_satisfied(&stance.fragment, g, p, syn))
}

pub fn reservations_kept(stance: &Stance, p: &Proposal, syn: &SynsetService) -> bool {
    !stance
        .reservations
        .iter()
        .filter_map(|id| stance.fragment.relation(id))
        .any(|r| reservation_violated(&stance.fragment, r, p, syn))
}

/// The party's verdict on `p` and, on rejection, its disclosure for `round`.
pub fn policy_respond(
    policy: &PartyPolicy,
    p: &Proposal,
    stance: &Stance,
    round: u32,
    syn: &SynsetService,
) -> (Verdict, Option<StanceDelta>) {
    let accept = match policy.rule {
        AcceptRule::AlwaysAccept => true,
        AcceptRule::AlwaysReject => false,
        AcceptRule::Goals => goals_met(stance, p, syn) && reservations_kept(stance, p, syn),
    };
    if accept {
        (Verdict::Accept, None)
    } else {
        (Verdict::Reject, policy.schedule.get(&round).cloned())
    }
}
