//! Note-level transcription scoring.
//!
//! A reference/estimate pair is valid when onset times differ by at most
//! 50 ms, pitches by at most 50 cents (0.5 MIDI), and - unless offsets are
//! ignored - offsets by at most `max(0.2 * ref_duration, 50 ms)`. All
//! comparisons are inclusive. Scores are computed from a maximum-cardinality
//! one-to-one matching over the valid pairs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::note::NoteList;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("oracle matcher limited to {limit} notes per side, got {n_ref} ref / {n_est} est")]
    SizeLimitExceeded {
        limit: usize,
        n_ref: usize,
        n_est: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    WithOffset,
    OnsetOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalTolerances {
    pub onset_s: f64,
    pub pitch_semitones: f64,
    pub offset_ratio: f64,
    pub offset_min_s: f64,
}

impl Default for EvalTolerances {
    fn default() -> Self {
        Self {
            onset_s: 0.05,
            pitch_semitones: 0.5,
            offset_ratio: 0.2,
            offset_min_s: 0.05,
        }
    }
}

impl EvalTolerances {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("onset_s", self.onset_s),
            ("pitch_semitones", self.pitch_semitones),
            ("offset_ratio", self.offset_ratio),
            ("offset_min_s", self.offset_min_s),
        ] {
            if v <= 0.0 {
                return Err(format!("tolerance {name} must be strictly positive"));
            }
        }
        Ok(())
    }
}

/// Scores for one reference/estimate pair. `f1_no` ignores offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f1_no: f64,
    pub n_ref: usize,
    pub n_est: usize,
    pub n_match: usize,
    pub n_match_no: usize,
}

fn pair_valid(
    r: &crate::note::NoteEvent,
    e: &crate::note::NoteEvent,
    tol: &EvalTolerances,
    mode: MatchMode,
) -> bool {
    if (r.onset_s - e.onset_s).abs() > tol.onset_s {
        return false;
    }
    if (r.pitch_midi - e.pitch_midi).abs() > tol.pitch_semitones {
        return false;
    }
    if mode == MatchMode::WithOffset {
        let window = (tol.offset_ratio * r.duration_s()).max(tol.offset_min_s);
        if (r.offset_s - e.offset_s).abs() > window {
            return false;
        }
    }
    true
}

fn valid_pairs(
    reference: &NoteList,
    estimate: &NoteList,
    tol: &EvalTolerances,
    mode: MatchMode,
) -> Vec<Vec<usize>> {
    reference
        .iter()
        .map(|r| {
            estimate
                .iter()
                .enumerate()
                .filter(|(_, e)| pair_valid(r, e, tol, mode))
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

fn augmenting_path(
    adj: &[Vec<usize>],
    r: usize,
    seen: &mut [bool],
    est_owner: &mut [Option<usize>],
) -> bool {
    for &e in &adj[r] {
        if seen[e] {
            continue;
        }
        seen[e] = true;
        if est_owner[e].is_none() || augmenting_path(adj, est_owner[e].unwrap(), seen, est_owner) {
            est_owner[e] = Some(r);
            return true;
        }
    }
    false
}

/// Maximum-cardinality one-to-one matching over tolerance-valid pairs,
/// returned as `(ref index, est index)` pairs sorted by reference index.
pub fn match_notes(
    reference: &NoteList,
    estimate: &NoteList,
    tol: &EvalTolerances,
    mode: MatchMode,
) -> Vec<(usize, usize)> {
    let adj = valid_pairs(reference, estimate, tol, mode);
    let mut est_owner: Vec<Option<usize>> = vec![None; estimate.len()];
    for r in 0..reference.len() {
        let mut seen = vec![false; estimate.len()];
        augmenting_path(&adj, r, &mut seen, &mut est_owner);
    }
    let mut pairs: Vec<(usize, usize)> = est_owner
        .iter()
        .enumerate()
        .filter_map(|(e, owner)| owner.map(|r| (r, e)))
        .collect();
    pairs.sort_unstable();
    pairs
}

pub const ORACLE_SIZE_LIMIT: usize = 8;

/// Exhaustive maximum-matching cardinality over all injective assignments,
/// restricted to valid pairs. Shared subproblems are memoized over the
/// (reference index, used-estimates bitmask) space, which enumerates the
/// same assignment set exactly. Limited to 8 notes per side.
pub fn oracle_match(
    reference: &NoteList,
    estimate: &NoteList,
    tol: &EvalTolerances,
    mode: MatchMode,
) -> Result<usize, EvalError> {
    if reference.len() > ORACLE_SIZE_LIMIT || estimate.len() > ORACLE_SIZE_LIMIT {
        return Err(EvalError::SizeLimitExceeded {
            limit: ORACLE_SIZE_LIMIT,
            n_ref: reference.len(),
            n_est: estimate.len(),
        });
    }
    let adj = valid_pairs(reference, estimate, tol, mode);
    let n_ref = reference.len();
    let n_masks = 1usize << estimate.len();
    // best[mask] = max matches achievable for refs processed so far with
    // exactly the estimates in `mask` consumed
    let mut best = vec![u32::MAX; n_masks];
    best[0] = 0;
    for r in 0..n_ref {
        let mut next = best.clone(); // skipping ref r keeps every state
        for mask in 0..n_masks {
            if best[mask] == u32::MAX {
                continue;
            }
            for &e in &adj[r] {
                let bit = 1usize << e;
                if mask & bit == 0 {
                    let cand = best[mask] + 1;
                    if next[mask | bit] == u32::MAX || next[mask | bit] < cand {
                        next[mask | bit] = cand;
                    }
                }
            }
        }
        best = next;
    }
    Ok(best
        .iter()
        .filter(|&&v| v != u32::MAX)
        .map(|&v| v as usize)
        .max()
        .unwrap_or(0))
}

fn prf(n_match: usize, n_ref: usize, n_est: usize) -> (f64, f64, f64) {
    let precision = if n_est > 0 {
        n_match as f64 / n_est as f64
    } else {
        0.0
    };
    let recall = if n_ref > 0 {
        n_match as f64 / n_ref as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f1)
}

/// Precision/recall/F1 with offsets enforced, plus onset-only F1.
pub fn evaluate(reference: &NoteList, estimate: &NoteList, tol: &EvalTolerances) -> EvalReport {
    let n_match = match_notes(reference, estimate, tol, MatchMode::WithOffset).len();
    let n_match_no = match_notes(reference, estimate, tol, MatchMode::OnsetOnly).len();
    let (precision, recall, f1) = prf(n_match, reference.len(), estimate.len());
    let (_, _, f1_no) = prf(n_match_no, reference.len(), estimate.len());
    EvalReport {
        precision,
        recall,
        f1,
        f1_no,
        n_ref: reference.len(),
        n_est: estimate.len(),
        n_match,
        n_match_no,
    }
}

/// Same scores computed from onset-only matching everywhere (for corpora
/// whose offset annotations are unreliable).
pub fn evaluate_onset_only(
    reference: &NoteList,
    estimate: &NoteList,
    tol: &EvalTolerances,
) -> EvalReport {
    let n_match_no = match_notes(reference, estimate, tol, MatchMode::OnsetOnly).len();
    let (precision, recall, f1_no) = prf(n_match_no, reference.len(), estimate.len());
    EvalReport {
        precision,
        recall,
        f1: f1_no,
        f1_no,
        n_ref: reference.len(),
        n_est: estimate.len(),
        n_match: n_match_no,
        n_match_no,
    }
}
