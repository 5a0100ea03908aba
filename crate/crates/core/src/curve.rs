//! Analogy count and quality as the target ontology grows.

use std::fmt::Write as _;

use crate::cbr::derive_seed;
use crate::expand::{expand, expand_nested, ExpansionConfig, ExpansionError, DEFAULT_MAX_ATTEMPTS_FACTOR};
use crate::kb::KnowledgeBase;
use crate::ontology::Ontology;
use crate::sme::{Matcher, SmeError};

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub seed: u64,
    pub eta: u32,
    pub num_analogies: usize,
    pub max_ses: f64,
    pub avg_ses: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CurveError {
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Sme(#[from] SmeError),
}

/// For each seed and η in 1..=eta_max, the gmaps between `base` and the
/// η-expansion of `target`. Nested expansions extend one another per seed;
/// otherwise each η draws a fresh expansion.
pub fn expansion_curve(
    base: &Ontology,
    target: &Ontology,
    kb: &KnowledgeBase,
    matcher: &Matcher,
    eta_max: u32,
    seeds: &[u64],
    nested: bool,
) -> Result<Vec<CurvePoint>, CurveError> {
    let etas: Vec<f64> = (1..=eta_max).map(f64::from).collect();
    let mut out = Vec::with_capacity(seeds.len() * etas.len());
    for &seed in seeds {
        let cfg = ExpansionConfig {
            eta: 1.0,
            eta_max: f64::from(eta_max),
            seed,
            max_attempts_factor: DEFAULT_MAX_ATTEMPTS_FACTOR,
        };
        let levels: Vec<Ontology> = if nested {
            expand_nested(target, &etas, &cfg, kb)?
                .into_iter()
                .map(|e| e.ontology)
                .collect()
        } else {
            etas.iter()
                .map(|&eta| {
                    let cfg = ExpansionConfig {
                        eta,
                        seed: derive_seed(seed, &["curve", &eta.to_string()]),
                        ..cfg.clone()
                    };
                    expand(target, &cfg, kb).map(|e| e.ontology)
                })
                .collect::<Result<_, _>>()?
        };
        for (eta, o) in (1..=eta_max).zip(levels) {
            let gmaps = matcher.gmaps(base, &o)?;
            let n = gmaps.len();
            let max_ses = gmaps.first().map_or(0.0, |g| g.ses);
            let avg_ses = if n == 0 { 0.0 } else { gmaps.iter().map(|g| g.ses).sum::<f64>() / n as f64 };
            out.push(CurvePoint {
                seed,
                eta,
                num_analogies: n,
                max_ses,
                avg_ses,
            });
        }
    }
    Ok(out)
}

pub const CURVE_HEADER: &str = "seed\teta\tnum_analogies\tmax_ses\tavg_ses";
pub const SUMMARY_HEADER: &str = "eta\tnum_analogies\tmax_ses\tavg_ses";

pub fn curve_tsv(points: &[CurvePoint]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for p in points {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{:.6}",
            p.seed, p.eta, p.num_analogies, p.max_ses, p.avg_ses
        );
    }
    out
}

/// Per η over all seeds: mean gmap count, best max_ses, mean avg_ses.
pub fn summary_tsv(points: &[CurvePoint]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    let mut etas: Vec<u32> = points.iter().map(|p| p.eta).collect();
    etas.sort_unstable();
    etas.dedup();
    for eta in etas {
        let at: Vec<&CurvePoint> = points.iter().filter(|p| p.eta == eta).collect();
        let k = at.len() as f64;
        let n = at.iter().map(|p| p.num_analogies as f64).sum::<f64>() / k;
        let max = at.iter().map(|p| p.max_ses).fold(0.0, f64::max);
        let avg = at.iter().map(|p| p.avg_ses).sum::<f64>() / k;
        let _ = writeln!(out, "{eta}\t{n:.6}\t{max:.6}\t{avg:.6}");
    }
    out
}
