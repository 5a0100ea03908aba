//! `cbrm`: command-line front end for the case-based mediation engine.
//!
//! Exit codes: 0 success, 1 domain failure (no precedent, session not
//! accepted, case already present), 2 usage, input or format error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use cbrm_core::cbr::{CaseBase, Cbr, CbrConfig, CbrError};
use cbrm_core::curve::{curve_tsv, expansion_curve, summary_tsv};
use cbrm_core::expand::{expand, ExpansionConfig, DEFAULT_MAX_ATTEMPTS_FACTOR};
use cbrm_core::format::{parse_case, parse_ontology_or_case, serialize_ontology};
use cbrm_core::kb::{KnowledgeBase, SynsetService};
use cbrm_core::ontology::Ontology;
use cbrm_core::session::{parse_session, run_session, Outcome};
use cbrm_core::sme::Matcher;

#[derive(Parser)]
#[command(name = "cbrm", version, about = "Case-based dispute mediation by cross-domain analogy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct KbArg {
    /// Knowledge base directory holding edges.tsv, synsets.tsv and hypernyms.tsv
    #[arg(long, env = "CBRM_KB")]
    kb: PathBuf,
}

#[derive(Args)]
struct CbrArgs {
    #[command(flatten)]
    kb: KbArg,
    /// Case base directory
    #[arg(long)]
    casebase: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    eta_max: u32,
    /// Expansions drawn per chain of expansion factors
    #[arg(long, default_value_t = 8)]
    samples: usize,
    /// Domain similarity threshold for retrieval
    #[arg(long, default_value_t = 0.3)]
    sigma: f64,
    /// Retention threshold
    #[arg(long, default_value_t = 0.8)]
    theta: f64,
    /// Accept precedents from the same domain
    #[arg(long)]
    allow_same_domain: bool,
    /// Score cases on a single thread
    #[arg(long)]
    sequential: bool,
}

impl CbrArgs {
    fn config(&self) -> CbrConfig {
        CbrConfig {
            eta_max: self.eta_max,
            samples_per_eta: self.samples,
            sigma: self.sigma,
            theta: self.theta,
            seed: self.seed,
            allow_same_domain: self.allow_same_domain,
            parallel: !self.sequential,
            max_attempts_factor: DEFAULT_MAX_ATTEMPTS_FACTOR,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print every gmap from BASE onto TARGET with scores and candidate inferences
    Analogize {
        base: PathBuf,
        target: PathBuf,
        /// Knowledge base directory for synsets; without it only identical predicates match
        #[arg(long, env = "CBRM_KB")]
        kb: Option<PathBuf>,
        /// Print at most this many gmaps
        #[arg(long)]
        top: Option<usize>,
    },
    /// Expand an ontology with commonsense concepts and print it
    Expand {
        onto: PathBuf,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6.0)]
        eta_max: f64,
        #[command(flatten)]
        kb: KbArg,
    },
    /// Rank a case base against a query case and print the score table
    Retrieve {
        query: PathBuf,
        #[command(flatten)]
        cbr: CbrArgs,
    },
    /// Run a scripted mediation session and print its transcript
    Mediate {
        session: PathBuf,
        #[command(flatten)]
        cbr: CbrArgs,
        #[arg(long, default_value_t = 5)]
        max_rounds: u32,
        /// Also write the per-round TSV summary here
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Gmap count and scores against expansions of TARGET for η = 1..=eta-max
    ExpansionCurve {
        base: PathBuf,
        target: PathBuf,
        #[command(flatten)]
        kb: KbArg,
        #[arg(long, default_value_t = 6)]
        eta_max: u32,
        /// Number of seeds, starting at --seed
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Draw each η independently instead of extending the previous level
        #[arg(long)]
        independent: bool,
        /// Aggregate over seeds, one row per η
        #[arg(long)]
        summary: bool,
    },
    /// Case base maintenance
    Casebase {
        #[command(subcommand)]
        action: CasebaseCommand,
    },
}

#[derive(Subcommand)]
enum CasebaseCommand {
    /// Add a solved case file to the case base
    Add {
        file: PathBuf,
        #[arg(long)]
        casebase: PathBuf,
    },
}

/// A failure of the requested reasoning, as opposed to bad input.
#[derive(Debug)]
struct DomainFailure(String);

impl std::fmt::Display for DomainFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DomainFailure {}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_ontology(path: &Path) -> Result<Ontology> {
    parse_ontology_or_case(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_kb(dir: &Path) -> Result<KnowledgeBase> {
    KnowledgeBase::load_dir(dir).with_context(|| format!("cannot load knowledge base {}", dir.display()))
}

fn analogize(base: &Path, target: &Path, kb: Option<&Path>, top: Option<usize>) -> Result<String> {
    let (b, t) = (load_ontology(base)?, load_ontology(target)?);
    let syn = match kb {
        Some(dir) => load_kb(dir)?.synset_service(),
        None => SynsetService::empty(),
    };
    let gmaps = Matcher::new(&syn).gmaps(&b, &t)?;
    let mut out = String::new();
    let _ = writeln!(out, "gmaps {}", gmaps.len());
    for (i, g) in gmaps.iter().take(top.unwrap_or(usize::MAX)).enumerate() {
        let _ = writeln!(out, "gmap {} ses {:.6}", i + 1, g.ses);
        for (x, y) in &g.entity_map {
            let _ = writeln!(out, "  map {x} {y}");
        }
        for h in &g.hypotheses {
            let (rb, rt) = (&b.relation(&h.base_relation).unwrap(), &t.relation(&h.target_relation).unwrap());
            let _ = writeln!(out, "  match {rb} {rt}");
        }
        for inf in &g.inferences {
            let _ = writeln!(out, "  infer {inf}");
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Analogize { base, target, kb, top } => analogize(&base, &target, kb.as_deref(), top),
        Command::Expand { onto, eta, seed, eta_max, kb } => {
            let o = load_ontology(&onto)?;
            let kb = load_kb(&kb.kb)?;
            let cfg = ExpansionConfig {
                eta,
                eta_max,
                seed,
                max_attempts_factor: DEFAULT_MAX_ATTEMPTS_FACTOR,
            };
            let e = expand(&o, &cfg, &kb)?;
            if e.partial {
                eprintln!("warning: partial expansion, {} of {} concepts appended", e.appended.len(), e.requested);
            }
            Ok(serialize_ontology(&e.ontology)?)
        }
        Command::Retrieve { query, cbr } => {
            let q = parse_case(&read(&query)?).with_context(|| format!("in {}", query.display()))?;
            let kb = load_kb(&cbr.kb.kb)?;
            let cb = CaseBase::load(&cbr.casebase)?;
            let engine = Cbr::new(&kb, cbr.config())?;
            match engine.retrieve(&q, &cb) {
                Ok(r) => Ok(format!("{}selected\t{}\n", r.table.to_tsv(), r.case_id)),
                Err(CbrError::NoPrecedent(table)) => {
                    print!("{}", table.to_tsv());
                    Err(DomainFailure("no precedent survives the retrieval filters".into()).into())
                }
                Err(CbrError::EmptyCaseBase) => Err(DomainFailure("the case base is empty".into()).into()),
                Err(e) => Err(e.into()),
            }
        }
        Command::Mediate { session, cbr, max_rounds, tsv } => {
            let spec = parse_session(&read(&session)?).with_context(|| format!("in {}", session.display()))?;
            let kb = load_kb(&cbr.kb.kb)?;
            let mut cb = CaseBase::load(&cbr.casebase)?;
            let engine = Cbr::new(&kb, cbr.config())?;
            let transcript = run_session(&spec, &mut cb, &engine, max_rounds)?;
            if let Some(path) = tsv {
                fs::write(&path, transcript.to_tsv()).with_context(|| format!("cannot write {}", path.display()))?;
            }
            if transcript.outcome == Outcome::Accepted {
                Ok(transcript.render())
            } else {
                print!("{}", transcript.render());
                Err(DomainFailure(format!("session ended with {}", transcript.outcome)).into())
            }
        }
        Command::ExpansionCurve { base, target, kb, eta_max, seeds, seed, independent, summary } => {
            let (b, t) = (load_ontology(&base)?, load_ontology(&target)?);
            let kb = load_kb(&kb.kb)?;
            let syn = kb.synset_service();
            let seeds: Vec<u64> = (seed..seed + seeds).collect();
            let points = expansion_curve(&b, &t, &kb, &Matcher::new(&syn), eta_max, &seeds, !independent)?;
            Ok(if summary { summary_tsv(&points) } else { curve_tsv(&points) })
        }
        Command::Casebase { action: CasebaseCommand::Add { file, casebase } } => {
            let case = parse_case(&read(&file)?).with_context(|| format!("in {}", file.display()))?;
            let mut cb = CaseBase::load(&casebase)?;
            let id = case.case_id.clone();
            if cb.add(case)? {
                Ok(format!("added {id}\n"))
            } else {
                Err(DomainFailure(format!("case `{id}` is already in the case base")).into())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<DomainFailure>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
