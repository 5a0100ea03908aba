//! Shared inputs for the benchmarks.

use std::fs;
use std::path::{Path, PathBuf};

use cbrm_core::format::{parse_case, parse_ontology};
use cbrm_core::kb::KnowledgeBase;
use cbrm_core::ontology::{Case, Ontology};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn kb() -> KnowledgeBase {
    KnowledgeBase::load_dir(&fixtures().join("kb")).expect("fixture kb")
}

pub fn onto(name: &str) -> Ontology {
    let text = fs::read_to_string(fixtures().join("onto").join(format!("{name}.onto"))).unwrap();
    parse_ontology(&text).unwrap()
}

pub fn case(rel: &str) -> Case {
    parse_case(&fs::read_to_string(fixtures().join(rel)).unwrap()).unwrap()
}
