//! Session files.
//!
//! ```text
//! (session :id sinai :domain territory
//!   (stance egypt [:policy goals|always-accept|always-reject]
//!     (concepts ...) (relations ...) (goals ...) (reservations ...))
//!   (reveal egypt 0
//!     (concepts ...) (relations ...) (goals ...) (reservations ...) (retract ...)))
//! ```
//!
//! A reveal is disclosed after the agent rejects the proposal of the given
//! round. Its relations may use the agent's earlier concepts; `retract`
//! names goals or reservations to withdraw.

use std::collections::{BTreeMap, BTreeSet};

use crate::format::{
    collect_sections, expect_atom, extend_ontology, invalid, parse_ref_section, parse_relation, section_body,
    split_options, FormatError,
};
use crate::ontology::{is_token, Ontology, Stance};
use crate::sexpr::{read_one, Sexp};

use super::policy::{AcceptRule, PartyPolicy, StanceDelta};

#[derive(Debug, Clone, PartialEq)]
pub struct SessionSpec {
    pub id: String,
    pub domain: String,
    pub stances: Vec<Stance>,
    /// One per stance, same order.
    pub policies: Vec<PartyPolicy>,
}

const SECTIONS: [&str; 4] = ["concepts", "relations", "goals", "reservations"];

fn parse_stance(s: &Sexp) -> Result<(Stance, AcceptRule), FormatError> {
    let items = s.as_list().expect("caller checked");
    let (opts, rest) = split_options(&items[1..])?;
    let (agent, sections) = rest
        .split_first()
        .ok_or_else(|| invalid(s.pos(), "stance needs an agent"))?;
    let agent = expect_atom(agent, "agent")?.to_string();
    let mut rule = AcceptRule::default();
    for (k, v) in &opts {
        match k.as_str() {
            ":policy" => {
                let name = expect_atom(v, "policy")?;
                rule = AcceptRule::parse(name).ok_or_else(|| invalid(v.pos(), format!("unknown policy `{name}`")))?;
            }
            _ => return Err(invalid(s.pos(), format!("unknown option `{k}`"))),
        }
    }
    let sections = collect_sections(sections, &SECTIONS)?;
    let mut fragment = Ontology::new();
    extend_ontology(&mut fragment, &sections)?;
    let goals = parse_ref_section(&sections, "goals", &mut fragment)?;
    let reservations = parse_ref_section(&sections, "reservations", &mut fragment)?;
    let stance = Stance {
        agent,
        fragment,
        goals,
        reservations,
        t: 0,
    };
    stance.validate().map_err(|e| invalid(s.pos(), e.to_string()))?;
    Ok((stance, rule))
}

fn parse_reveal(s: &Sexp, fragment: &mut Ontology) -> Result<StanceDelta, FormatError> {
    let items = s.as_list().expect("caller checked");
    let (opts, rest) = split_options(&items[1..])?;
    if let Some(k) = opts.keys().next() {
        return Err(invalid(s.pos(), format!("unknown option `{k}`")));
    }
    let [agent, round, sections @ ..] = &rest[..] else {
        return Err(invalid(s.pos(), "reveal needs an agent and a round"));
    };
    let agent = expect_atom(agent, "agent")?;
    let round: u32 = expect_atom(round, "round")?
        .parse()
        .map_err(|_| invalid(round.pos(), "round must be a non-negative integer"))?;
    let mut allowed = SECTIONS.to_vec();
    allowed.push("retract");
    let sections = collect_sections(sections, &allowed)?;
    let before = fragment.clone();
    extend_ontology(fragment, &sections)?;
    let goals = parse_ref_section(&sections, "goals", fragment)?;
    let reservations = parse_ref_section(&sections, "reservations", fragment)?;
    let mut retract = BTreeSet::new();
    for e in section_body(&sections, "retract") {
        let id = match e.as_atom() {
            Some(tok) => fragment.relation(tok).map(|r| r.id.clone()),
            None => {
                let r = parse_relation(e, fragment)?;
                fragment.find_relation(&r.predicate, &r.args).map(|r| r.id.clone())
            }
        };
        let id = id.ok_or_else(|| invalid(e.pos(), "retracted relation is not part of the stance"))?;
        retract.insert(id);
    }
    let mut delta = StanceDelta::new(agent, round);
    delta.concepts = fragment.concepts().filter(|c| !before.contains_id(&c.id)).cloned().collect();
    delta.relations = fragment.relations().filter(|r| !before.contains_id(&r.id)).cloned().collect();
    delta.goals = goals;
    delta.reservations = reservations;
    delta.retract = retract;
    Ok(delta)
}

pub fn parse_session(text: &str) -> Result<SessionSpec, FormatError> {
    let top = read_one(text)?;
    if top.head() != Some("session") {
        return Err(invalid(top.pos(), "expected `(session ...)`"));
    }
    let items = top.as_list().expect("has a head");
    let (opts, rest) = split_options(&items[1..])?;
    let mut id = None;
    let mut domain = String::new();
    for (k, v) in &opts {
        match k.as_str() {
            ":id" => id = Some(expect_atom(v, "session id")?.to_string()),
            ":domain" => {
                domain = v
                    .as_text()
                    .ok_or_else(|| invalid(v.pos(), "expected domain tag"))?
                    .to_string()
            }
            _ => return Err(invalid(top.pos(), format!("unknown option `{k}`"))),
        }
    }
    let id = id.ok_or_else(|| invalid(top.pos(), "missing `:id`"))?;
    if !is_token(&id) {
        return Err(invalid(top.pos(), format!("bad session id `{id}`")));
    }
    let mut stances: Vec<Stance> = Vec::new();
    let mut policies: Vec<PartyPolicy> = Vec::new();
    // fragments grow with each reveal so later reveals can refer back
    let mut working: BTreeMap<String, Ontology> = BTreeMap::new();
    for s in rest {
        match s.head() {
            Some("stance") => {
                let (stance, rule) = parse_stance(s)?;
                if working.contains_key(&stance.agent) {
                    return Err(invalid(s.pos(), format!("second stance for `{}`", stance.agent)));
                }
                working.insert(stance.agent.clone(), stance.fragment.clone());
                policies.push(PartyPolicy {
                    agent: stance.agent.clone(),
                    rule,
                    schedule: BTreeMap::new(),
                });
                stances.push(stance);
            }
            Some("reveal") => {
                let agent = s
                    .as_list()
                    .and_then(|l| l.get(1))
                    .and_then(Sexp::as_atom)
                    .ok_or_else(|| invalid(s.pos(), "reveal needs an agent"))?;
                let fragment = working
                    .get_mut(agent)
                    .ok_or_else(|| invalid(s.pos(), format!("reveal for `{agent}` precedes its stance")))?;
                let delta = parse_reveal(s, fragment)?;
                let policy = policies.iter_mut().find(|p| p.agent == delta.agent).expect("stance exists");
                if policy.schedule.keys().next_back().is_some_and(|&last| last >= delta.round) {
                    return Err(invalid(s.pos(), "reveal rounds must increase per agent"));
                }
                policy.schedule.insert(delta.round, delta);
            }
            _ => return Err(invalid(s.pos(), "expected `stance` or `reveal`")),
        }
    }
    if stances.is_empty() {
        return Err(invalid(top.pos(), "session has no stances"));
    }
    Ok(SessionSpec {
        id,
        domain,
        stances,
        policies,
    })
}
