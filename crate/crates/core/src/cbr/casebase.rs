use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::format::{parse_case, serialize_case};
use crate::ontology::Case;

use super::CbrError;

/// `case_id<TAB>domain_tag<TAB>path`, no header; paths relative to the directory.
pub const INDEX_FILE: &str = "index.tsv";

/// A set of solved cases, optionally backed by a directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CaseBase {
    root: Option<PathBuf>,
    cases: Vec<Case>,
}

impl CaseBase {
    pub fn in_memory(cases: impl IntoIterator<Item = Case>) -> Result<Self, CbrError> {
        let mut cb = Self::default();
        for c in cases {
            cb.add(c)?;
        }
        Ok(cb)
    }

    /// Loads the directory; a missing index means an empty case base.
    pub fn load(dir: &Path) -> Result<Self, CbrError> {
        let index = dir.join(INDEX_FILE);
        let mut cb = Self {
            root: Some(dir.to_path_buf()),
            cases: Vec::new(),
        };
        let text = match fs::read_to_string(&index) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cb),
            Err(source) => return Err(CbrError::Io { path: index, source }),
        };
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| CbrError::Index {
                path: index.clone(),
                line: n + 1,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, domain, rel] = fields[..] else {
                return Err(bad(format!("expected 3 fields, found {}", fields.len())));
            };
            let path = dir.join(rel);
            let text = fs::read_to_string(&path).map_err(|source| CbrError::Io { path: path.clone(), source })?;
            let case = parse_case(&text).map_err(|source| CbrError::Format { path: path.clone(), source })?;
            if case.case_id != id || case.domain_tag != domain {
                return Err(bad(format!("row does not match case `{}` in {rel}", case.case_id)));
            }
            case.validate_stored()?;
            if cb.contains(id) {
                return Err(CbrError::DuplicateCase(id.to_string()));
            }
            cb.cases.push(case);
        }
        Ok(cb)
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn contains(&self, case_id: &str) -> bool {
        self.get(case_id).is_some()
    }

    pub fn get(&self, case_id: &str) -> Option<&Case> {
        self.cases.iter().find(|c| c.case_id == case_id)
    }

    /// Adds a solved case, writing `<case_id>.case` and an index row when the
    /// case base is directory-backed. Returns false if the id is taken.
    pub fn add(&mut self, case: Case) -> Result<bool, CbrError> {
        if self.contains(&case.case_id) {
            return Ok(false);
        }
        case.validate_stored()?;
        if let Some(root) = &self.root {
            let text = serialize_case(&case).map_err(|source| CbrError::Format {
                path: root.clone(),
                source,
            })?;
            let file = format!("{}.case", case.case_id);
            let path = root.join(&file);
            if path.exists() {
                return Err(CbrError::DuplicateCase(case.case_id));
            }
            let io = |path: &Path| {
                let path = path.to_path_buf();
                move |source| CbrError::Io { path, source }
            };
            fs::create_dir_all(root).map_err(io(root))?;
            fs::write(&path, text).map_err(io(&path))?;
            let index = root.join(INDEX_FILE);
            let mut f = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&index)
                .map_err(io(&index))?;
            writeln!(f, "{}\t{}\t{}", case.case_id, case.domain_tag, file).map_err(io(&index))?;
        }
        self.cases.push(case);
        Ok(true)
    }
}
