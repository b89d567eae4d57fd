//! Tweet-level class scores produced outside this crate (for example by a fine-tuned
//! contextual encoder), read from `tweet_id<TAB>p0<TAB>p1` rows.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::distribution::ClassDistribution;
use crate::error::{Result, StanceError};

pub const SUM_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExternalScores {
    pub scores: BTreeMap<String, ClassDistribution>,
    /// Rows whose probabilities were rescaled to sum to one.
    pub renormalized: usize,
}

pub fn load_external_scores(path: &Path) -> Result<ExternalScores> {
    let raw = fs::read_to_string(path).map_err(|e| StanceError::io(path, e))?;
    parse_external_scores(&raw)
}

pub fn parse_external_scores(raw: &str) -> Result<ExternalScores> {
    let mut out = ExternalScores::default();
    for (i, line) in raw.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, p0, p1] = fields[..] else {
            return Err(StanceError::parse(line_no, "expected tweet_id<TAB>p0<TAB>p1"));
        };
        if id.is_empty() {
            return Err(StanceError::parse(line_no, "empty tweet id"));
        }
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| StanceError::parse(line_no, format!("bad probability {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(StanceError::parse(
                    line_no,
                    format!("non-finite probability {s:?}"),
                ))
            }
        };
        let (p0, p1) = (parse(p0)?, parse(p1)?);
        if p0 < 0.0 || p1 < 0.0 {
            return Err(StanceError::NegativeProbability {
                id: id.to_string(),
                line: line_no,
            });
        }
        let dist = if ((p0 + p1) - 1.0).abs() <= SUM_TOLERANCE {
            ClassDistribution::normalized(p0, p1)
        } else {
            out.renormalized += 1;
            log::warn!(
                "line {line_no}: scores for {id:?} sum to {}, renormalizing",
                p0 + p1
            );
            ClassDistribution::normalized(p0, p1)
        }
        .ok_or_else(|| StanceError::parse(line_no, "scores sum to zero"))?;
        if out.scores.insert(id.to_string(), dist).is_some() {
            return Err(StanceError::DuplicateScore {
                id: id.to_string(),
                line: line_no,
            });
        }
    }
    Ok(out)
}
