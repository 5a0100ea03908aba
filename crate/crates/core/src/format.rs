//! Text format for ontologies and cases, in LISP-style relation notation.
//!
//! ```text
//! ; the orange dispute
//! (case :id orange :domain fruit
//!   (concepts cake drink orange peel pulp sister1 sister2)
//!   (relations
//!     (desires sister1 orange)
//!     (partOf peel orange))
//!   (agents sister1 sister2)
//!   (goals (desires sister1 cake))
//!   (reservations)
//!   (solution (gets sister1 peel)))
//! ```
//!
//! Concept entries are either a bare id (label = id) or
//! `(id :label l :synsets (s ...) :origin expansion)`. Relation entries are
//! `(predicate arg ...)` with optional trailing `:id`, `:synsets` and
//! `:origin`; arguments must be declared concepts. Goals, reservations and
//! the solution hold relation ids or relation literals; literals are interned
//! into the ontology.
//!
//! Serialization is canonical: fixed section order, entries sorted by id, one
//! entry per line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::ontology::{
    is_token, Case, Concept, ConceptOrigin, Ontology, OntologyError, Relation, RelationOrigin,
};
use crate::sexpr::{quote_if_needed, read_one, Pos, ReadError, Sexp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("{0}")]
    Syntax(#[from] ReadError),
    #[error("{pos}: unresolved reference `{token}`")]
    Unresolved { pos: Pos, token: String },
    #[error("{pos}: duplicate id `{id}`")]
    Duplicate { pos: Pos, id: String },
    #[error("{pos}: {message}")]
    Invalid { pos: Pos, message: String },
    #[error("cannot serialize postulated concept `{0}`; ground it first")]
    Postulated(String),
    #[error("cannot serialize relation `{0}`: arguments must be concepts")]
    HigherOrder(String),
    #[error("cannot serialize relation `{0}`: needs at least two arguments")]
    Arity(String),
    #[error("cannot serialize `{0}`: not a bare token")]
    BadToken(String),
}

impl FormatError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            Self::Syntax(e) => Some(e.pos),
            Self::Unresolved { pos, .. } | Self::Duplicate { pos, .. } | Self::Invalid { pos, .. } => Some(*pos),
            _ => None,
        }
    }
}

pub(crate) fn invalid(pos: Pos, message: impl Into<String>) -> FormatError {
    FormatError::Invalid { pos, message: message.into() }
}

pub(crate) fn ontology_err(pos: Pos, e: OntologyError) -> FormatError {
    match e {
        OntologyError::DuplicateId(id) => FormatError::Duplicate { pos, id },
        OntologyError::UnresolvedArg { arg, .. } => FormatError::Unresolved { pos, token: arg },
        other => invalid(pos, other.to_string()),
    }
}

pub(crate) fn expect_list<'a>(s: &'a Sexp, what: &str) -> Result<&'a [Sexp], FormatError> {
    s.as_list().ok_or_else(|| invalid(s.pos(), format!("expected {what} list")))
}

pub(crate) fn expect_atom<'a>(s: &'a Sexp, what: &str) -> Result<&'a str, FormatError> {
    s.as_atom()
        .filter(|a| !a.starts_with(':'))
        .ok_or_else(|| invalid(s.pos(), format!("expected {what}")))
}

/// Splits `items` into leading keyword/value options and the remaining
/// positional entries.
pub(crate) fn split_options(items: &[Sexp]) -> Result<(BTreeMap<String, &Sexp>, Vec<&Sexp>), FormatError> {
    let mut opts = BTreeMap::new();
    let mut rest = Vec::new();
    let mut i = 0;
    while i < items.len() {
        match items[i].as_atom() {
            Some(k) if k.starts_with(':') => {
                let v = items
                    .get(i + 1)
                    .ok_or_else(|| invalid(items[i].pos(), format!("missing value for `{k}`")))?;
                if opts.insert(k.to_string(), v).is_some() {
                    return Err(invalid(items[i].pos(), format!("repeated option `{k}`")));
                }
                i += 2;
            }
            _ => {
                rest.push(&items[i]);
                i += 1;
            }
        }
    }
    Ok((opts, rest))
}

fn parse_synsets(v: &Sexp) -> Result<BTreeSet<String>, FormatError> {
    expect_list(v, "synset")?
        .iter()
        .map(|s| expect_atom(s, "synset id").map(str::to_string))
        .collect()
}

fn parse_concept(entry: &Sexp) -> Result<Concept, FormatError> {
    if let Some(id) = entry.as_atom() {
        return Ok(Concept::labeled(id));
    }
    let items = expect_list(entry, "concept")?;
    let (id_sexp, tail) = items
        .split_first()
        .ok_or_else(|| invalid(entry.pos(), "empty concept entry"))?;
    let id = expect_atom(id_sexp, "concept id")?;
    let (opts, rest) = split_options(tail)?;
    if let Some(extra) = rest.first() {
        return Err(invalid(extra.pos(), "unexpected item in concept entry"));
    }
    let mut c = Concept::labeled(id);
    for (k, v) in opts {
        match k.as_str() {
            ":label" => c.label = expect_atom(v, "label")?.to_string(),
            ":synsets" => c.synsets = parse_synsets(v)?,
            ":origin" => {
                let o = expect_atom(v, "origin")?;
                c.provenance = ConceptOrigin::parse(o)
                    .ok_or_else(|| invalid(v.pos(), format!("unknown concept origin `{o}`")))?;
            }
            _ => return Err(invalid(entry.pos(), format!("unknown option `{k}`"))),
        }
    }
    if c.provenance == ConceptOrigin::Postulated {
        return Err(invalid(entry.pos(), format!("postulated concept `{}` in a stored file", c.id)));
    }
    Ok(c)
}

/// `(predicate arg ... [:id i] [:synsets (...)] [:origin o])` over declared concepts.
pub(crate) fn parse_relation(entry: &Sexp, onto: &Ontology) -> Result<Relation, FormatError> {
    let items = expect_list(entry, "relation")?;
    let (pred, tail) = items
        .split_first()
        .ok_or_else(|| invalid(entry.pos(), "empty relation"))?;
    let predicate = expect_atom(pred, "predicate")?;
    let (opts, args) = split_options(tail)?;
    if args.len() < 2 {
        return Err(invalid(entry.pos(), format!("relation `{predicate}` needs at least two arguments")));
    }
    let mut arg_ids = Vec::with_capacity(args.len());
    for a in args {
        let tok = expect_atom(a, "argument")?;
        if !onto.is_concept(tok) {
            return Err(FormatError::Unresolved { pos: a.pos(), token: tok.to_string() });
        }
        arg_ids.push(tok.to_string());
    }
    let mut r = Relation::new(predicate, arg_ids);
    for (k, v) in opts {
        match k.as_str() {
            ":id" => r.id = expect_atom(v, "relation id")?.to_string(),
            ":synsets" => r.predicate_synsets = parse_synsets(v)?,
            ":origin" => {
                let o = expect_atom(v, "origin")?;
                r.provenance = RelationOrigin::parse(o)
                    .ok_or_else(|| invalid(v.pos(), format!("unknown relation origin `{o}`")))?;
            }
            _ => return Err(invalid(entry.pos(), format!("unknown option `{k}`"))),
        }
    }
    Ok(r)
}

/// Relation id reference or relation literal (interned).
pub(crate) fn parse_relation_ref(entry: &Sexp, onto: &mut Ontology) -> Result<String, FormatError> {
    if let Some(tok) = entry.as_atom() {
        return match onto.relation(tok) {
            Some(r) => Ok(r.id.clone()),
            None => Err(FormatError::Unresolved { pos: entry.pos(), token: tok.to_string() }),
        };
    }
    let r = parse_relation(entry, onto)?;
    if let Some(existing) = onto.find_relation(&r.predicate, &r.args) {
        return Ok(existing.id.clone());
    }
    let id = r.id.clone();
    onto.add_relation(r).map_err(|e| ontology_err(entry.pos(), e))?;
    Ok(id)
}

/// Collects `(name ...)` sections, rejecting repeats and unknown names.
pub(crate) fn collect_sections<'a>(
    items: &[&'a Sexp],
    allowed: &[&str],
) -> Result<BTreeMap<String, &'a Sexp>, FormatError> {
    let mut out = BTreeMap::new();
    for s in items {
        let head = s
            .head()
            .ok_or_else(|| invalid(s.pos(), "expected a section"))?;
        if !allowed.contains(&head) {
            return Err(invalid(s.pos(), format!("unknown section `{head}`")));
        }
        if out.insert(head.to_string(), *s).is_some() {
            return Err(invalid(s.pos(), format!("repeated section `{head}`")));
        }
    }
    Ok(out)
}

pub(crate) fn section_body<'a>(sections: &BTreeMap<String, &'a Sexp>, name: &str) -> &'a [Sexp] {
    sections
        .get(name)
        .and_then(|s| s.as_list())
        .map(|items| &items[1..])
        .unwrap_or(&[])
}

/// Parses `concepts` and `relations` sections into an ontology.
pub(crate) fn build_ontology(sections: &BTreeMap<String, &Sexp>) -> Result<Ontology, FormatError> {
    let mut onto = Ontology::new();
    extend_ontology(&mut onto, sections)?;
    Ok(onto)
}

pub(crate) fn extend_ontology(onto: &mut Ontology, sections: &BTreeMap<String, &Sexp>) -> Result<(), FormatError> {
    for entry in section_body(sections, "concepts") {
        let c = parse_concept(entry)?;
        onto.add_concept(c).map_err(|e| ontology_err(entry.pos(), e))?;
    }
    for entry in section_body(sections, "relations") {
        let r = parse_relation(entry, onto)?;
        onto.add_relation(r).map_err(|e| ontology_err(entry.pos(), e))?;
    }
    Ok(())
}

pub(crate) fn parse_ref_section(
    sections: &BTreeMap<String, &Sexp>,
    name: &str,
    onto: &mut Ontology,
) -> Result<BTreeSet<String>, FormatError> {
    section_body(sections, name)
        .iter()
        .map(|e| parse_relation_ref(e, onto))
        .collect()
}

pub fn parse_case(text: &str) -> Result<Case, FormatError> {
    let top = read_one(text)?;
    let items = expect_list(&top, "case")?;
    if top.head() != Some("case") {
        return Err(invalid(top.pos(), "expected `(case ...)`"));
    }
    let (opts, rest) = split_options(&items[1..])?;
    let mut case_id = None;
    let mut domain = String::new();
    for (k, v) in &opts {
        match k.as_str() {
            ":id" => case_id = Some(expect_atom(v, "case id")?.to_string()),
            ":domain" => {
                domain = v
                    .as_text()
                    .ok_or_else(|| invalid(v.pos(), "expected domain tag"))?
                    .to_string()
            }
            _ => return Err(invalid(top.pos(), format!("unknown option `{k}`"))),
        }
    }
    let case_id = case_id.ok_or_else(|| invalid(top.pos(), "missing `:id`"))?;
    let sections = collect_sections(
        &rest,
        &["concepts", "relations", "agents", "goals", "reservations", "solution"],
    )?;
    let mut onto = build_ontology(&sections)?;
    let mut agents = BTreeSet::new();
    for a in section_body(&sections, "agents") {
        let tok = expect_atom(a, "agent")?;
        if !onto.is_concept(tok) {
            return Err(FormatError::Unresolved { pos: a.pos(), token: tok.to_string() });
        }
        agents.insert(tok.to_string());
    }
    let goals = parse_ref_section(&sections, "goals", &mut onto)?;
    let reservations = parse_ref_section(&sections, "reservations", &mut onto)?;
    let solution = parse_ref_section(&sections, "solution", &mut onto)?;
    let case = Case {
        case_id,
        domain_tag: domain,
        ontology: onto,
        agents,
        goals,
        reservations,
        solution,
    };
    case.validate().map_err(|e| invalid(top.pos(), e.to_string()))?;
    Ok(case)
}

/// `(ontology (concepts ...) (relations ...))`.
pub fn parse_ontology(text: &str) -> Result<Ontology, FormatError> {
    let top = read_one(text)?;
    let items = expect_list(&top, "ontology")?;
    if top.head() != Some("ontology") {
        return Err(invalid(top.pos(), "expected `(ontology ...)`"));
    }
    let (_, rest) = split_options(&items[1..])?;
    let sections = collect_sections(&rest, &["concepts", "relations"])?;
    build_ontology(&sections)
}

/// Reads either an `(ontology ...)` or a `(case ...)` document, returning the ontology.
pub fn parse_ontology_or_case(text: &str) -> Result<Ontology, FormatError> {
    let top = read_one(text)?;
    match top.head() {
        Some("case") => parse_case(text).map(|c| c.ontology),
        _ => parse_ontology(text),
    }
}

fn token(s: &str) -> Result<&str, FormatError> {
    if is_token(s) {
        Ok(s)
    } else {
        Err(FormatError::BadToken(s.to_string()))
    }
}

fn write_synsets(out: &mut String, synsets: &BTreeSet<String>) -> Result<(), FormatError> {
    out.push_str(" :synsets (");
    for (i, s) in synsets.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(token(s)?);
    }
    out.push(')');
    Ok(())
}

fn write_ontology_sections(out: &mut String, onto: &Ontology) -> Result<(), FormatError> {
    let bare = |c: &Concept| c.label == c.id && c.synsets.is_empty() && c.provenance == ConceptOrigin::Original;
    for c in onto.concepts() {
        if c.provenance == ConceptOrigin::Postulated {
            return Err(FormatError::Postulated(c.id.clone()));
        }
    }
    if onto.concepts().all(bare) {
        out.push_str("  (concepts");
        for c in onto.concepts() {
            out.push(' ');
            out.push_str(token(&c.id)?);
        }
        out.push_str(")\n");
    } else {
        out.push_str("  (concepts");
        for c in onto.concepts() {
            out.push_str("\n    ");
            if bare(c) {
                out.push_str(token(&c.id)?);
                continue;
            }
            out.push('(');
            out.push_str(token(&c.id)?);
            if c.label != c.id {
                let _ = write!(out, " :label {}", token(&c.label)?);
            }
            if !c.synsets.is_empty() {
                write_synsets(out, &c.synsets)?;
            }
            if c.provenance != ConceptOrigin::Original {
                let _ = write!(out, " :origin {}", c.provenance.as_str());
            }
            out.push(')');
        }
        out.push_str(")\n");
    }
    out.push_str("  (relations");
    for r in onto.relations() {
        if r.args.iter().any(|a| !onto.is_concept(a)) {
            return Err(FormatError::HigherOrder(r.id.clone()));
        }
        if r.args.len() < 2 {
            return Err(FormatError::Arity(r.id.clone()));
        }
        out.push_str("\n    (");
        out.push_str(token(&r.predicate)?);
        for a in &r.args {
            out.push(' ');
            out.push_str(a);
        }
        if r.id != r.content_id() {
            let _ = write!(out, " :id {}", token(&r.id)?);
        }
        if !r.predicate_synsets.is_empty() {
            write_synsets(out, &r.predicate_synsets)?;
        }
        if r.provenance != RelationOrigin::Original {
            let _ = write!(out, " :origin {}", r.provenance.as_str());
        }
        out.push(')');
    }
    out.push_str(")\n");
    Ok(())
}

fn write_ref_section(out: &mut String, name: &str, ids: &BTreeSet<String>) -> Result<(), FormatError> {
    let _ = write!(out, "  ({name}");
    for id in ids {
        out.push(' ');
        out.push_str(token(id)?);
    }
    out.push(')');
    Ok(())
}

/// Canonical text of a case. Refuses postulated concepts.
pub fn serialize_case(case: &Case) -> Result<String, FormatError> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "(case :id {} :domain {}",
        token(&case.case_id)?,
        quote_if_needed(&case.domain_tag)
    );
    write_ontology_sections(&mut out, &case.ontology)?;
    write_ref_section(&mut out, "agents", &case.agents)?;
    out.push('\n');
    write_ref_section(&mut out, "goals", &case.goals)?;
    out.push('\n');
    write_ref_section(&mut out, "reservations", &case.reservations)?;
    out.push('\n');
    write_ref_section(&mut out, "solution", &case.solution)?;
    out.push_str(")\n");
    Ok(out)
}

/// Canonical text of a bare ontology.
pub fn serialize_ontology(onto: &Ontology) -> Result<String, FormatError> {
    let mut out = String::from("(ontology\n");
    write_ontology_sections(&mut out, onto)?;
    out.pop();
    out.push_str(")\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "(case :id empty :domain none (concepts a) (relations) (agents a) (goals) (reservations) (solution))";

    #[test]
    fn minimal_case() {
        let c = parse_case(MINIMAL).unwrap();
        assert!(c.goals.is_empty());
        assert!(c.is_query());
        assert_eq!(c.agents.len(), 1);
    }

    #[test]
    fn relations_and_literals() {
        let c = parse_case(
            "(case :id o :domain fruit
               (concepts sister1 orange cake)
               (relations (desires sister1 orange) (usedFor orange cake))
               (agents sister1)
               (goals (desires sister1 orange) (desires sister1 cake))
               (reservations) (solution))",
        )
        .unwrap();
        let preds: Vec<_> = c.ontology.relations().map(|r| r.predicate.as_str()).collect();
        assert_eq!(preds, ["desires", "desires", "usedFor"]);
        // the first goal literal reuses the declared relation
        assert!(c.goals.contains("desires/sister1/orange"));
        assert!(c.goals.contains("desires/sister1/cake"));
        assert_eq!(c.ontology.num_relations(), 3);
    }

    #[test]
    fn undeclared_concept_has_position() {
        let err = parse_case("(case :id x :domain d\n (concepts a)\n (relations (r a  b)))").unwrap_err();
        assert_eq!(err, FormatError::Unresolved { pos: Pos { line: 3, col: 19 }, token: "b".into() });
    }

    #[test]
    fn duplicate_concept() {
        let err = parse_case("(case :id x :domain d (concepts a a))").unwrap_err();
        assert!(matches!(err, FormatError::Duplicate { ref id, .. } if id == "a"));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_case("(case :id x\n  (concepts a)").unwrap_err();
        assert_eq!(err.pos(), Some(Pos { line: 1, col: 1 }));
    }

    #[test]
    fn serializer_refuses_postulated() {
        let mut c = parse_case(MINIMAL).unwrap();
        c.ontology
            .add_concept(Concept::labeled("peel").with_origin(ConceptOrigin::Postulated))
            .unwrap();
        assert_eq!(serialize_case(&c), Err(FormatError::Postulated("peel".into())));
    }

    #[test]
    fn annotated_entries_round_trip() {
        let text = "(case :id x :domain \"two words\"
          (concepts (a :synsets (s.n.01)) (b :label bee :origin expansion))
          (relations (r a b :id rel1 :synsets (p.v.01) :origin inferred))
          (agents a) (goals rel1) (reservations) (solution rel1))";
        let c = parse_case(text).unwrap();
        let s = serialize_case(&c).unwrap();
        assert_eq!(parse_case(&s).unwrap(), c);
        assert_eq!(serialize_case(&parse_case(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn ontology_document() {
        let o = parse_ontology("(ontology (concepts a b) (relations (r a b)))").unwrap();
        let text = serialize_ontology(&o).unwrap();
        assert_eq!(text, "(ontology\n  (concepts a b)\n  (relations\n    (r a b)))\n");
        assert_eq!(parse_ontology(&text).unwrap(), o);
    }
}
